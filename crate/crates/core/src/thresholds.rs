// SPDX-License-Identifier: Apache-2.0

//! Threshold hierarchy `C^cl ≤ C^{G,min} ≤ C^{G,int} ≤ C^{G_n}` and
//! certification of measured coherences.
//!
//! Every Gaussian objective is evaluated from [`GaussianAmplitudes`], i.e.
//! from the Fock amplitudes of the constructed state. The searches fix the
//! displacement phase to zero: the phase rotation `e^{iφ a†a}` maps
//! `S(ξ)D(α)` onto `S(ξe^{2iφ})D(αe^{iφ})` and leaves both `C_{m,n}` and the
//! sets of Fock and core states invariant. The search axes are therefore
//! `(|ξ|, arg ξ, |α|)`.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channels;
use crate::error::{QngError, Result};
use crate::fock::{
    build_gaussian_columns, coherent_amplitude, ln_factorial, pure_coherence, CoreState, FockPair,
    GaussianAmplitudes, GaussianParams, PureState, DEFAULT_TRUNCATION, MAX_DISPLACEMENT,
    MAX_SQUEEZE,
};
use crate::optimizer::{
    self, Maximum, SearchSpec, DEFAULT_GRID_DENSITY, DEFAULT_STARTS, DEFAULT_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdKind {
    Classical,
    GaussianMin,
    GaussianIntrinsic,
    GenuineN,
}

impl ThresholdKind {
    pub const ALL: [ThresholdKind; 4] = [
        ThresholdKind::Classical,
        ThresholdKind::GaussianMin,
        ThresholdKind::GaussianIntrinsic,
        ThresholdKind::GenuineN,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ThresholdKind::Classical => "classical",
            ThresholdKind::GaussianMin => "gaussian-min",
            ThresholdKind::GaussianIntrinsic => "gaussian-intrinsic",
            ThresholdKind::GenuineN => "genuine-n",
        }
    }
}

impl fmt::Display for ThresholdKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ThresholdKind {
    type Err = QngError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "classical" | "cl" => Ok(ThresholdKind::Classical),
            "gaussian-min" | "gaussian" | "min" => Ok(ThresholdKind::GaussianMin),
            "gaussian-intrinsic" | "intrinsic" | "int" => Ok(ThresholdKind::GaussianIntrinsic),
            "genuine-n" | "genuine" | "genuinen" => Ok(ThresholdKind::GenuineN),
            other => Err(QngError::OutOfRange(format!(
                "unknown threshold kind {other:?}"
            ))),
        }
    }
}

/// Coherence of the optimum re-evaluated from the truncated matrix oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationCheck {
    pub dim: usize,
    pub value_at_dim: f64,
    pub value_at_double: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub starts: usize,
    pub best_per_start: Vec<f64>,
    pub start_converged: Vec<bool>,
    pub converged: bool,
    pub evaluations: usize,
    pub bound_retries: usize,
    /// Independent numeric route (1-D scan for the classical closed form).
    pub cross_check: Option<f64>,
    /// `|λ_closed − λ_dense|` at the optimum of the genuine search.
    pub eigen_check: Option<f64>,
    pub truncation_check: Option<TruncationCheck>,
}

impl Diagnostics {
    fn absorb(&mut self, m: &Maximum) {
        self.starts += m.trace.starts.len();
        self.best_per_start.extend(m.trace.best_per_start());
        self.start_converged
            .extend(m.trace.starts.iter().map(|s| s.converged));
        self.evaluations += m.trace.evaluations;
        self.converged = m.trace.converged;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub kind: ThresholdKind,
    pub pair: FockPair,
    pub value: f64,
    pub argmax: GaussianParams,
    /// Optimal Fock index of the intrinsic search.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fock_index: Option<usize>,
    /// Optimal core state of the genuine search.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub core_state: Option<CoreState>,
    pub diagnostics: Diagnostics,
}

impl ThresholdResult {
    /// Fock-basis input the Gaussian operation acts on at the optimum.
    pub fn core_coefficients(&self) -> Vec<Complex64> {
        match (self.kind, self.fock_index, &self.core_state) {
            (ThresholdKind::GaussianIntrinsic, Some(k), _) => {
                let mut v = vec![Complex64::new(0.0, 0.0); k + 1];
                v[k] = Complex64::new(1.0, 0.0);
                v
            }
            (ThresholdKind::GenuineN, _, Some(c)) => c.coeffs().to_vec(),
            _ => vec![Complex64::new(1.0, 0.0)],
        }
    }

    /// The optimal state on `dim` levels, built from the truncated matrix oracle.
    pub fn state(&self, dim: usize) -> Result<PureState> {
        if self.kind == ThresholdKind::Classical {
            let alpha = self.argmax.alpha();
            let amps = DVector::from_iterator(dim, (0..dim).map(|k| coherent_amplitude(k, alpha)));
            return PureState::normalized(amps);
        }
        let core = self.core_coefficients();
        if core.len() > dim / 2 {
            return Err(QngError::OutOfRange(format!(
                "dimension {dim} too small for the core state"
            )));
        }
        let u = build_gaussian_columns(&self.argmax, dim, core.len())?;
        // the cropped column misses the tail beyond `dim`; renormalize
        PureState::normalized(u * DVector::from_vec(core))
    }

    /// `C_{m,n}` of [`Self::state`].
    pub fn state_coherence(&self, dim: usize) -> Result<f64> {
        let psi = self.state(dim)?;
        Ok(pure_coherence(psi.amplitudes().as_slice(), self.pair))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub truncation: usize,
    pub grid_density: usize,
    pub n_starts: usize,
    pub tol: f64,
    pub xi_bound: f64,
    pub alpha_bound: f64,
    pub max_bound_retries: usize,
    /// Largest Fock index of the intrinsic search.
    pub max_fock: usize,
    pub verify_truncation: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            truncation: DEFAULT_TRUNCATION,
            grid_density: DEFAULT_GRID_DENSITY,
            n_starts: DEFAULT_STARTS,
            tol: DEFAULT_TOL,
            xi_bound: 1.5,
            alpha_bound: 4.0,
            max_bound_retries: 2,
            max_fock: 10,
            verify_truncation: true,
        }
    }
}

/// Closed form of the classical threshold, `2 x^x e^{−x} / √(m! n!)` with `x = (m+n)/2`.
pub fn classical_closed_form(pair: FockPair) -> f64 {
    let x = (pair.m() + pair.n()) as f64 / 2.0;
    let ln = 2f64.ln() + x * x.ln() - x - 0.5 * (ln_factorial(pair.m()) + ln_factorial(pair.n()));
    ln.exp()
}

/// `C_{m,n}` of the coherent state `|α⟩`.
pub fn coherent_coherence(pair: FockPair, alpha_mag: f64) -> f64 {
    let a = Complex64::new(alpha_mag, 0.0);
    2.0 * coherent_amplitude(pair.m(), a).norm() * coherent_amplitude(pair.n(), a).norm()
}

fn params_from_axes(x: &[f64]) -> GaussianParams {
    GaussianParams {
        xi_mag: x[0].max(0.0),
        xi_phase: x[1].rem_euclid(TAU),
        alpha_mag: x[2].max(0.0),
        alpha_phase: 0.0,
    }
}

/// `C_{m,n}` of `S(ξ)D(α)|k⟩`.
pub fn fock_input_coherence(pair: FockPair, k: usize, g: &GaussianParams) -> f64 {
    let rows = GaussianAmplitudes::new(g).rows(&[pair.m(), pair.n()], k + 1);
    2.0 * rows[0][k].norm() * rows[1][k].norm()
}

/// Rank-two data of the genuine search: `x = conj(⟨m|U|j⟩)`, `y = conj(⟨n|U|j⟩)`, `j < d`.
fn genuine_vectors(pair: FockPair, g: &GaussianParams) -> (DVector<Complex64>, DVector<Complex64>) {
    let d = pair.n();
    let rows = GaussianAmplitudes::new(g).rows(&[pair.m(), pair.n()], d);
    let x = DVector::from_iterator(d, rows[0].iter().map(|v| v.conj()));
    let y = DVector::from_iterator(d, rows[1].iter().map(|v| v.conj()));
    (x, y)
}

fn rank_two_lambda(x: &DVector<Complex64>, y: &DVector<Complex64>) -> f64 {
    x.dotc(y).norm() + x.norm() * y.norm()
}

/// Largest eigenvalue of `G(θ)` maximized over `θ`, in closed form:
/// `|⟨x,y⟩| + ‖x‖‖y‖`. It equals the best `C_{m,n}` of `S(ξ)D(α)|ψ̃⟩` over
/// core states `|ψ̃⟩` spanning `|0⟩..|d−1⟩`, `d = max(m,n)`.
pub fn genuine_lambda(pair: FockPair, g: &GaussianParams) -> f64 {
    let (x, y) = genuine_vectors(pair, g);
    rank_two_lambda(&x, &y)
}

/// `G(θ) = e^{iθ} y x† + e^{−iθ} x y†`, so that `c† G c` maximized over `θ`
/// is the coherence of `S(ξ)D(α)|c⟩`.
pub fn genuine_matrix(pair: FockPair, g: &GaussianParams, theta: f64) -> DMatrix<Complex64> {
    let (x, y) = genuine_vectors(pair, g);
    let ph = Complex64::from_polar(1.0, theta);
    let a = &y * x.adjoint() * ph;
    &a + a.adjoint()
}

/// Dense-eigensolver route: top eigenpair of `G(θ*)` with `θ* = −arg⟨x,y⟩`.
pub fn genuine_dense_eigen(pair: FockPair, g: &GaussianParams) -> (f64, DVector<Complex64>) {
    let (x, y) = genuine_vectors(pair, g);
    let theta = -x.dotc(&y).arg();
    let eig = SymmetricEigen::new(genuine_matrix(pair, g, theta));
    let (idx, &lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty core");
    (lambda, eig.eigenvectors.column(idx).into_owned())
}

/// Same closed form with the transposed index convention `u_i = ⟨i|U|m⟩`,
/// `v_j = ⟨j|U|n⟩`.
pub fn genuine_lambda_transposed(pair: FockPair, g: &GaussianParams) -> f64 {
    let d = pair.n();
    let amps = GaussianAmplitudes::new(g);
    let u = DVector::from_iterator(d, (0..d).map(|i| amps.amplitude(i, pair.m())));
    let v = DVector::from_iterator(d, (0..d).map(|i| amps.amplitude(i, pair.n())));
    rank_two_lambda(&u, &v)
}

/// `|α|²` from the stationarity constraint of the Gaussian-vacuum search for
/// squeeze magnitude `r` and relative phase `φ`; clamped at zero.
pub fn stationary_alpha_sq(pair: FockPair, r: f64, phi: f64) -> f64 {
    let num = (1 + pair.m() + pair.n()) as f64 / (2.0 * r).cosh() - 1.0;
    let den = 2.0 * (1.0 - (2.0 * phi).cos() * (2.0 * r).tanh());
    if den <= 0.0 {
        return 0.0;
    }
    (num / den).max(0.0)
}

#[derive(Debug, Clone, Default)]
pub struct ThresholdSolver {
    pub config: SolverConfig,
}

impl ThresholdSolver {
    pub fn new(config: SolverConfig) -> Self {
        Self { config }
    }

    pub fn compute(&self, kind: ThresholdKind, pair: FockPair) -> Result<ThresholdResult> {
        match kind {
            ThresholdKind::Classical => self.classical(pair),
            ThresholdKind::GaussianMin => self.gaussian_min(pair),
            ThresholdKind::GaussianIntrinsic => self.intrinsic(pair, self.config.max_fock),
            ThresholdKind::GenuineN => self.genuine(pair),
        }
    }

    fn spec(&self, bounds: Vec<(f64, f64)>) -> SearchSpec {
        SearchSpec {
            bounds,
            grid_density: self.config.grid_density,
            n_starts: self.config.n_starts,
            tol: self.config.tol,
        }
    }

    /// 1-D optimizer scan of the coherent-state coherence over `|α| ∈ [0, 6]`.
    pub fn classical_numeric(&self, pair: FockPair) -> Result<Maximum> {
        let spec = self.spec(vec![(0.0, MAX_DISPLACEMENT)]);
        optimizer::maximize(|x| coherent_coherence(pair, x[0]), &spec)
    }

    pub fn classical(&self, pair: FockPair) -> Result<ThresholdResult> {
        if pair.m() + pair.n() > 40 {
            return Err(QngError::OutOfRange(format!(
                "classical threshold needs m+n ≤ 40, got {pair}"
            )));
        }
        let value = classical_closed_form(pair);
        let alpha = ((pair.m() + pair.n()) as f64 / 2.0).sqrt();
        let mut diagnostics = Diagnostics {
            converged: true,
            ..Default::default()
        };
        if alpha <= MAX_DISPLACEMENT {
            let numeric = self.classical_numeric(pair)?;
            diagnostics.absorb(&numeric);
            diagnostics.cross_check = Some(numeric.value);
        }
        Ok(ThresholdResult {
            kind: ThresholdKind::Classical,
            pair,
            value,
            argmax: GaussianParams::coherent(Complex64::new(alpha, 0.0)),
            fock_index: None,
            core_state: None,
            diagnostics,
        })
    }

    /// Runs a 3-axis Gaussian search, doubling magnitude bounds that the optimum hits.
    fn gaussian_search<F>(
        &self,
        objective: F,
        seeds: &dyn Fn(f64, f64) -> Vec<Vec<f64>>,
    ) -> Result<(Maximum, Diagnostics)>
    where
        F: Fn(&GaussianParams) -> f64 + Sync,
    {
        let mut xi_hi = self.config.xi_bound.min(MAX_SQUEEZE);
        let mut alpha_hi = self.config.alpha_bound.min(MAX_DISPLACEMENT);
        let mut diagnostics = Diagnostics::default();
        let mut retries = 0;
        loop {
            let spec = self.spec(vec![(0.0, xi_hi), (0.0, TAU), (0.0, alpha_hi)]);
            let extra = seeds(xi_hi, alpha_hi);
            let best =
                optimizer::maximize_with_seeds(|x| objective(&params_from_axes(x)), &spec, &extra)?;
            diagnostics.absorb(&best);
            let hits = spec.upper_bound_hits(&best.argmax, 1e-6);
            let grow_xi = hits[0] && xi_hi < MAX_SQUEEZE;
            let grow_alpha = hits[2] && alpha_hi < MAX_DISPLACEMENT;
            if (!grow_xi && !grow_alpha) || retries >= self.config.max_bound_retries {
                diagnostics.bound_retries = retries;
                return Ok((best, diagnostics));
            }
            retries += 1;
            if grow_xi {
                xi_hi = (2.0 * xi_hi).min(MAX_SQUEEZE);
            }
            if grow_alpha {
                alpha_hi = (2.0 * alpha_hi).min(MAX_DISPLACEMENT);
            }
        }
    }

    fn verify(&self, result: &mut ThresholdResult) -> Result<()> {
        if !self.config.verify_truncation {
            return Ok(());
        }
        let dim = self.config.truncation;
        let at_dim = result.state_coherence(dim)?;
        let at_double = result.state_coherence(2 * dim)?;
        result.diagnostics.truncation_check = Some(TruncationCheck {
            dim,
            value_at_dim: at_dim,
            value_at_double: at_double,
        });
        if (at_dim - result.value).abs() > 1e-6 || (at_double - result.value).abs() > 1e-6 {
            return Err(QngError::TruncationRisk(format!(
                "{} threshold for ({}) is {:.9} analytically but {:.9} / {:.9} at dimensions {dim} / {}",
                result.kind,
                result.pair,
                result.value,
                at_dim,
                at_double,
                2 * dim
            )));
        }
        Ok(())
    }

    /// Maximum of `C_{m,n}` over `S(ξ)D(α)|0⟩`.
    pub fn gaussian_min(&self, pair: FockPair) -> Result<ThresholdResult> {
        if pair.n() > 10 {
            return Err(QngError::OutOfRange(format!(
                "Gaussian threshold needs max(m,n) ≤ 10, got {pair}"
            )));
        }
        let objective = |g: &GaussianParams| fock_input_coherence(pair, 0, g);
        // two-parameter seeds on the stationarity surface, relative phase φ ↦ arg ξ = −2φ
        let n_seeds = self.config.n_starts / 2;
        let g = self.config.grid_density;
        let seeds = move |xi_hi: f64, alpha_hi: f64| {
            let mut pts: Vec<(f64, Vec<f64>)> = Vec::new();
            for i in 0..g {
                for j in 0..g {
                    let r = xi_hi * i as f64 / (g - 1) as f64;
                    let phi = PI * j as f64 / g as f64;
                    let a = stationary_alpha_sq(pair, r, phi).sqrt().min(alpha_hi);
                    let x = vec![r, (-2.0 * phi).rem_euclid(TAU), a];
                    pts.push((objective(&params_from_axes(&x)), x));
                }
            }
            pts.sort_by(|a, b| b.0.total_cmp(&a.0));
            pts.into_iter().take(n_seeds).map(|(_, x)| x).collect()
        };
        let (best, diagnostics) = self.gaussian_search(objective, &seeds)?;
        let mut result = ThresholdResult {
            kind: ThresholdKind::GaussianMin,
            pair,
            value: best.value,
            argmax: params_from_axes(&best.argmax),
            fock_index: None,
            core_state: None,
            diagnostics,
        };
        self.verify(&mut result)?;
        Ok(result)
    }

    /// Maximum of `C_{m,n}` over `S(ξ)D(α)|k⟩`, `k ≤ max_fock`.
    pub fn intrinsic(&self, pair: FockPair, max_fock: usize) -> Result<ThresholdResult> {
        if max_fock > 12 {
            return Err(QngError::OutOfRange(format!(
                "max_fock = {max_fock} exceeds 12"
            )));
        }
        if pair.n() > 10 {
            return Err(QngError::OutOfRange(format!(
                "Gaussian threshold needs max(m,n) ≤ 10, got {pair}"
            )));
        }
        let mut best: Option<(usize, Maximum)> = None;
        let mut diagnostics = Diagnostics::default();
        for k in 0..=max_fock {
            let (m, d) =
                self.gaussian_search(|g| fock_input_coherence(pair, k, g), &|_, _| Vec::new())?;
            diagnostics.starts += d.starts;
            diagnostics.best_per_start.extend(d.best_per_start);
            diagnostics.start_converged.extend(d.start_converged);
            diagnostics.evaluations += d.evaluations;
            diagnostics.bound_retries += d.bound_retries;
            if best.as_ref().is_none_or(|(_, b)| m.value > b.value) {
                diagnostics.converged = d.converged;
                best = Some((k, m));
            }
        }
        let (k, m) = best.expect("at least one Fock index");
        let mut result = ThresholdResult {
            kind: ThresholdKind::GaussianIntrinsic,
            pair,
            value: m.value,
            argmax: params_from_axes(&m.argmax),
            fock_index: Some(k),
            core_state: None,
            diagnostics,
        };
        self.verify(&mut result)?;
        Ok(result)
    }

    /// Maximum of `C_{m,n}` over `S(ξ)D(α)|ψ̃⟩`, `|ψ̃⟩` spanning `|0⟩..|max(m,n)−1⟩`.
    pub fn genuine(&self, pair: FockPair) -> Result<ThresholdResult> {
        if pair.n() > 10 {
            return Err(QngError::OutOfRange(format!(
                "genuine threshold needs max(m,n) ≤ 10, got {pair}"
            )));
        }
        let (best, mut diagnostics) =
            self.gaussian_search(|g| genuine_lambda(pair, g), &|_, _| Vec::new())?;
        let argmax = params_from_axes(&best.argmax);
        let (lambda_dense, vec) = genuine_dense_eigen(pair, &argmax);
        let eigen_gap = (lambda_dense - best.value).abs();
        diagnostics.eigen_check = Some(eigen_gap);
        if eigen_gap > 1e-9 {
            return Err(QngError::NonConvergence {
                message: format!(
                    "rank-two closed form {} disagrees with dense eigenvalue {lambda_dense}",
                    best.value
                ),
                trace: Box::new(best.trace),
            });
        }
        // eigenvector is defined up to a phase; fix c_0 real where possible
        let pivot = vec
            .iter()
            .find(|c| c.norm() > 1e-12)
            .copied()
            .unwrap_or(Complex64::new(1.0, 0.0));
        let phase = pivot.conj() / pivot.norm();
        let core = CoreState::normalized(vec.iter().map(|c| c * phase).collect())?;
        let mut result = ThresholdResult {
            kind: ThresholdKind::GenuineN,
            pair,
            value: best.value,
            argmax,
            fock_index: None,
            core_state: Some(core),
            diagnostics,
        };
        self.verify(&mut result)?;
        Ok(result)
    }

    /// Maximum of the transposed-convention eigenvalue; used to check that the
    /// two index conventions give the same threshold.
    pub fn genuine_transposed(&self, pair: FockPair) -> Result<f64> {
        let (best, _) =
            self.gaussian_search(|g| genuine_lambda_transposed(pair, g), &|_, _| Vec::new())?;
        Ok(best.value)
    }
}

pub fn classical_threshold(pair: FockPair) -> Result<ThresholdResult> {
    ThresholdSolver::default().classical(pair)
}

pub fn gaussian_min_threshold(pair: FockPair) -> Result<ThresholdResult> {
    ThresholdSolver::default().gaussian_min(pair)
}

pub fn intrinsic_threshold(pair: FockPair, max_fock: usize) -> Result<ThresholdResult> {
    ThresholdSolver::default().intrinsic(pair, max_fock)
}

pub fn genuine_threshold(pair: FockPair) -> Result<ThresholdResult> {
    ThresholdSolver::default().genuine(pair)
}

type Slot = Arc<Mutex<Option<ThresholdResult>>>;

/// Run-local memo of thresholds keyed by `(kind, pair)`.
///
/// Concurrent requests for the same key block on a per-key slot, so each
/// threshold is computed at most once.
#[derive(Debug, Default)]
pub struct ThresholdStore {
    solver: ThresholdSolver,
    slots: Mutex<HashMap<(ThresholdKind, FockPair), Slot>>,
}

impl ThresholdStore {
    pub fn new(solver: ThresholdSolver) -> Self {
        Self {
            solver,
            slots: Mutex::new(HashMap::new()),
        }
    }

    /// Process-wide store with the default solver.
    pub fn global() -> &'static ThresholdStore {
        static STORE: OnceLock<ThresholdStore> = OnceLock::new();
        STORE.get_or_init(ThresholdStore::default)
    }

    pub fn solver(&self) -> &ThresholdSolver {
        &self.solver
    }

    fn slot(&self, kind: ThresholdKind, pair: FockPair) -> Slot {
        let mut slots = self.slots.lock().expect("threshold store poisoned");
        slots.entry((kind, pair)).or_default().clone()
    }

    pub fn get(&self, kind: ThresholdKind, pair: FockPair) -> Result<ThresholdResult> {
        let slot = self.slot(kind, pair);
        let mut guard = slot.lock().expect("threshold slot poisoned");
        if let Some(r) = guard.as_ref() {
            return Ok(r.clone());
        }
        let r = self.solver.compute(kind, pair)?;
        *guard = Some(r.clone());
        Ok(r)
    }

    pub fn value(&self, kind: ThresholdKind, pair: FockPair) -> Result<f64> {
        self.get(kind, pair).map(|r| r.value)
    }

    /// Inserts a result unless one is already present.
    pub fn insert(&self, result: ThresholdResult) {
        let slot = self.slot(result.kind, result.pair);
        let mut guard = slot.lock().expect("threshold slot poisoned");
        if guard.is_none() {
            *guard = Some(result);
        }
    }

    pub fn snapshot(&self) -> Vec<ThresholdResult> {
        let slots: Vec<Slot> = self
            .slots
            .lock()
            .expect("threshold store poisoned")
            .values()
            .cloned()
            .collect();
        let mut out: Vec<ThresholdResult> = slots
            .iter()
            .filter_map(|s| s.lock().expect("threshold slot poisoned").clone())
            .collect();
        out.sort_by_key(|r| (r.pair, r.kind));
        out
    }

    pub fn certify(
        &self,
        pair: FockPair,
        measured: f64,
        uncertainty: f64,
    ) -> Result<CertificationReport> {
        certify_with(self, pair, measured, uncertainty)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindAssessment {
    pub kind: ThresholdKind,
    pub threshold: f64,
    pub margin: f64,
    pub verdict: bool,
    /// `|margin| < uncertainty`.
    pub marginal: bool,
    /// Undefined for zero measured coherence.
    pub depth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub pair: FockPair,
    pub measured: f64,
    pub uncertainty: f64,
    pub assessments: Vec<KindAssessment>,
}

impl CertificationReport {
    pub fn assessment(&self, kind: ThresholdKind) -> Option<&KindAssessment> {
        self.assessments.iter().find(|a| a.kind == kind)
    }

    pub fn any_verdict(&self) -> bool {
        self.assessments.iter().any(|a| a.verdict)
    }
}

/// Certify a measured coherence against all four thresholds.
pub fn certify(pair: FockPair, measured: f64, uncertainty: f64) -> Result<CertificationReport> {
    certify_with(ThresholdStore::global(), pair, measured, uncertainty)
}

pub fn certify_with(
    store: &ThresholdStore,
    pair: FockPair,
    measured: f64,
    uncertainty: f64,
) -> Result<CertificationReport> {
    if !(0.0..=1.0 + channels::ROUNDOFF).contains(&measured) {
        return Err(QngError::OutOfRange(format!(
            "measured coherence {measured} outside [0, 1]"
        )));
    }
    let measured = measured.min(1.0);
    if !(uncertainty >= 0.0) || !uncertainty.is_finite() {
        return Err(QngError::OutOfRange(format!(
            "uncertainty {uncertainty} must be non-negative"
        )));
    }
    let assessments = ThresholdKind::ALL
        .iter()
        .map(|&kind| {
            let threshold = store.value(kind, pair)?;
            let margin = measured - threshold;
            Ok(KindAssessment {
                kind,
                threshold,
                margin,
                verdict: margin > 0.0,
                marginal: margin.abs() < uncertainty,
                depth: (measured > 0.0)
                    .then(|| channels::depth_from_threshold(measured, pair, threshold)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CertificationReport {
        pair,
        measured,
        uncertainty,
        assessments,
    })
}
