// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use qng_core::channels::{
    dephase, depth_from_threshold, thermal_depth_limit, thermalize, DephasingParams, HeatingParams,
};
use qng_core::fock::{
    build_gaussian_columns, build_gaussian_matrix, coherence_quantifier, sdf_amplitude,
    DensityMatrix, FockPair, GaussianAmplitudes, GaussianParams, PureState, LOW_FOCK_BLOCK,
};
use qng_core::optimizer::{maximize, mc_verify_with, SearchSpec};
use qng_core::thresholds::{genuine_dense_eigen, genuine_lambda, ThresholdKind, ThresholdStore};

fn pair(m: usize, n: usize) -> FockPair {
    FockPair::new(m, n).unwrap()
}

fn gaussian(max_xi: f64, max_alpha: f64) -> impl Strategy<Value = GaussianParams> {
    (0.0..max_xi, 0.0..TAU, 0.0..max_alpha, 0.0..TAU)
        .prop_map(|(r, t, a, p)| GaussianParams::new(r, t, a, p).unwrap())
}

fn fock_pair(max: usize) -> impl Strategy<Value = FockPair> {
    (0..max, 0..max)
        .prop_filter("distinct", |(a, b)| a != b)
        .prop_map(|(a, b)| FockPair::new(a, b).unwrap())
}

fn density(dim: usize) -> impl Strategy<Value = DensityMatrix> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim * dim).prop_map(move |v| {
        let a = DMatrix::from_iterator(
            dim,
            dim,
            v.into_iter().map(|(re, im)| Complex64::new(re, im)),
        );
        let rho = &a * a.adjoint();
        let tr = rho.trace();
        DensityMatrix::new(rho / tr).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    // Rows of a unitary are orthonormal; checked on the analytic amplitudes
    // over the whole validated range with no truncated exponential involved.
    #[test]
    fn analytic_rows_are_orthonormal(g in gaussian(2.0, 6.0)) {
        let rows: Vec<usize> = (0..12).collect();
        let amps = GaussianAmplitudes::new(&g).rows(&rows, 6000);
        for i in 0..rows.len() {
            for j in 0..=i {
                let dot: Complex64 = amps[i].iter().zip(&amps[j]).map(|(a, b)| a * b.conj()).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot - want).norm() < 1e-8, "rows {i},{j}: {dot}");
            }
        }
    }

    #[test]
    fn coherence_obeys_cauchy_schwarz(rho in density(6), p in fock_pair(6)) {
        let c = coherence_quantifier(&rho, p);
        let bound = 2.0 * (rho.element(p.m(), p.m()).re * rho.element(p.n(), p.n()).re).sqrt();
        prop_assert!(c <= bound + 1e-12);
        prop_assert!(c <= 1.0 + 1e-12);
    }

    #[test]
    fn coherence_is_convex(a in density(5), b in density(5), w in 0.0f64..1.0, p in fock_pair(5)) {
        let lhs = coherence_quantifier(&a.mix(w, &b).unwrap(), p);
        let rhs = w * coherence_quantifier(&a, p) + (1.0 - w) * coherence_quantifier(&b, p);
        prop_assert!(lhs <= rhs + 1e-12);
    }

    #[test]
    fn dephasing_composes(rho in density(6), g1 in 0.0f64..2.0, g2 in 0.0f64..2.0) {
        let twice = dephase(&dephase(&rho, DephasingParams::new(g1).unwrap()), DephasingParams::new(g2).unwrap());
        let once = dephase(&rho, DephasingParams::new(g1 + g2).unwrap());
        prop_assert!((twice.matrix() - once.matrix()).camax() < 1e-12);
        prop_assert!((once.trace().re - 1.0).abs() < 1e-12);
        prop_assert!(once.min_eigenvalue() > -1e-9);
    }

    #[test]
    fn heating_preserves_trace_and_hermiticity(rho in density(6), t in 0.0f64..0.05) {
        // embed into a larger space so heating does not reach the edge
        let mut big = DMatrix::<Complex64>::zeros(24, 24);
        big.view_mut((0, 0), (6, 6)).copy_from(rho.matrix());
        let rho = DensityMatrix::new(big).unwrap();
        let out = thermalize(&rho, HeatingParams::new(3.2, t).unwrap()).unwrap();
        prop_assert!((out.trace().re - 1.0).abs() < 1e-8);
        prop_assert!(out.matrix() == &out.matrix().adjoint());
        prop_assert!(out.min_eigenvalue() > -1e-9);
    }

    #[test]
    fn depth_is_increasing(a in 0.01f64..1.0, b in 0.01f64..1.0, p in fock_pair(8), thr in 0.1f64..1.0) {
        prop_assume!(a != b);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(depth_from_threshold(lo, p, thr) < depth_from_threshold(hi, p, thr));
    }

    #[test]
    fn optimizer_stays_in_box(cx in -1.0f64..3.0, cy in -2.0f64..2.0) {
        let spec = SearchSpec::new(vec![(0.0, 2.0), (-1.0, 1.0)]);
        let f = |x: &[f64]| -((x[0] - cx).powi(2) + (x[1] - cy).powi(2));
        let best = maximize(f, &spec).unwrap();
        prop_assert!(best.argmax[0] >= 0.0 && best.argmax[0] <= 2.0);
        prop_assert!(best.argmax[1] >= -1.0 && best.argmax[1] <= 1.0);
        prop_assert_eq!(best.value, f(&best.argmax));
        let clamped = (cx.clamp(0.0, 2.0), cy.clamp(-1.0, 1.0));
        prop_assert!((best.argmax[0] - clamped.0).abs() < 1e-3 && (best.argmax[1] - clamped.1).abs() < 1e-3);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    // cropping drops whatever the columns put beyond `dim`, so the block is
    // checked at a dimension that clears their spread
    #[test]
    fn low_block_is_unitary(g in gaussian(0.6, 2.5)) {
        let u = build_gaussian_matrix(&g, 192).unwrap();
        let cols = u.columns(0, LOW_FOCK_BLOCK);
        let gram = cols.adjoint() * cols;
        let err = (gram - DMatrix::<Complex64>::identity(LOW_FOCK_BLOCK, LOW_FOCK_BLOCK)).camax();
        prop_assert!(err < 1e-8, "max |U†U − I| = {err}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn analytic_amplitudes_match_matrix(g in gaussian(0.6, 2.5), m in 0usize..12, n in 0usize..8) {
        let u = build_gaussian_columns(&g, 128, 8).unwrap();
        let a = sdf_amplitude(m, n, &g).unwrap();
        prop_assert!((a - u[(m, n)]).norm() < 1e-8, "({m},{n}) {a} vs {}", u[(m, n)]);
    }

    #[test]
    fn genuine_closed_form_matches_dense_eigen(g in gaussian(1.5, 4.0), n in 1usize..7, m in 0usize..6) {
        prop_assume!(m < n);
        let p = pair(m, n);
        let closed = genuine_lambda(p, &g);
        let (dense, _) = genuine_dense_eigen(p, &g);
        prop_assert!((closed - dense).abs() < 1e-9, "{closed} vs {dense}");
    }
}

#[test]
fn hierarchy_is_ordered() {
    let store = ThresholdStore::global();
    for n in 1..=6 {
        let p = pair(0, n);
        let v: Vec<f64> = ThresholdKind::ALL
            .iter()
            .map(|&k| store.value(k, p).unwrap())
            .collect();
        assert!(v.windows(2).all(|w| w[0] <= w[1] + 1e-9), "n={n}: {v:?}");
        assert!(v[0] < v[1], "classical not below Gaussian at n={n}");
        if n >= 3 {
            assert!(v[1] < v[2] - 1e-4, "intrinsic not above G,min at n={n}");
        }
    }
}

#[test]
fn monte_carlo_is_deterministic() {
    let a = mc_verify_with(
        ThresholdKind::GaussianIntrinsic,
        pair(0, 3),
        9000,
        42,
        0.6298,
    )
    .unwrap();
    let b = mc_verify_with(
        ThresholdKind::GaussianIntrinsic,
        pair(0, 3),
        9000,
        42,
        0.6298,
    )
    .unwrap();
    assert_eq!(a, b);
    assert_eq!(a.violations, 0);
}

#[test]
fn dephased_ideal_state_matches_decay_law() {
    // C(Γ) = exp(−Γ(m−n)²/2) for the balanced state
    for (m, n) in [(0, 1), (0, 3), (1, 4)] {
        let p = pair(m, n);
        let rho = PureState::balanced(p, 1.1, 12).unwrap().to_density();
        for gamma in [0.0, 0.01, 0.1, 0.5] {
            let c = coherence_quantifier(&dephase(&rho, DephasingParams::new(gamma).unwrap()), p);
            let d = (n - m) as f64;
            assert!((c - (-gamma * d * d / 2.0).exp()).abs() < 1e-12);
        }
    }
}

#[test]
fn heating_limit_without_heating_is_flat() {
    let store = ThresholdStore::global();
    let times = [0.0, 0.01, 0.02];
    let curve = thermal_depth_limit(pair(0, 1), 0.0, &times, ThresholdKind::GenuineN).unwrap();
    let ideal = depth_from_threshold(
        1.0,
        pair(0, 1),
        store.value(ThresholdKind::GenuineN, pair(0, 1)).unwrap(),
    );
    for (_, d) in curve {
        assert!((d - ideal).abs() < 1e-12);
    }
}

#[test]
fn heating_limit_starts_at_ideal_depth() {
    let curve = thermal_depth_limit(pair(0, 2), 3.2, &[0.0], ThresholdKind::GenuineN).unwrap();
    assert!((curve[0].1 - 0.0764).abs() < 1e-3);
}

#[test]
fn four_phonon_limit_starts_near_twice_six_phonon() {
    let times: Vec<f64> = (0..=6).map(|i| i as f64 * 5e-3).collect();
    let d4 = thermal_depth_limit(pair(0, 4), 3.2, &times, ThresholdKind::GenuineN).unwrap();
    let d6 = thermal_depth_limit(pair(0, 6), 3.2, &times, ThresholdKind::GenuineN).unwrap();
    let ratio = d4[0].1 / d6[0].1;
    assert!((1.8..=2.4).contains(&ratio), "ratio {ratio}");
    // heating erodes both curves
    assert!(d4.windows(2).all(|w| w[1].1 < w[0].1));
    assert!(d6.windows(2).all(|w| w[1].1 < w[0].1));
}
