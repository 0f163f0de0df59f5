// SPDX-License-Identifier: Apache-2.0

//! Truncated Fock-space states and operators.
//!
//! Amplitudes of Gaussian operations are evaluated analytically. For
//! `U = S(ξ)D(α)` the normally ordered generating function
//!
//! ```text
//! Σ_{m,n} ⟨m|U|n⟩ s^m t^n / √(m! n!) = ⟨0|U|0⟩ exp(A s² + B s t + C t² + E s + F t)
//! ```
//!
//! follows from `U† a U = μ a − ν a† + (μα − να*)` with `μ = cosh r`,
//! `ν = e^{iθ} sinh r`, `ξ = r e^{iθ}`. Expanding it gives a finite sum of
//! products of scaled Hermite polynomials, see [`GaussianAmplitudes`].

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QngError, Result};

/// Default truncation of the oscillator Hilbert space.
pub const DEFAULT_TRUNCATION: usize = 128;
/// Extra levels used when exponentiating truncated generators.
pub const MATRIX_PAD: usize = 32;
pub const MAX_HERMITE_ORDER: usize = 64;
/// Validated range of the analytic amplitude.
pub const MAX_SQUEEZE: f64 = 2.0;
pub const MAX_DISPLACEMENT: f64 = 6.0;
/// Columns of a cropped Gaussian matrix whose norm is checked for leakage.
pub const LOW_FOCK_BLOCK: usize = 12;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Ordered pair of distinct phonon numbers, stored with `m < n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "[usize; 2]", into = "[usize; 2]")]
pub struct FockPair {
    m: usize,
    n: usize,
}

impl FockPair {
    pub fn new(a: usize, b: usize) -> Result<Self> {
        if a == b {
            return Err(QngError::InvalidPair {
                m: a,
                n: b,
                reason: "indices must differ",
            });
        }
        Ok(Self {
            m: a.min(b),
            n: a.max(b),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `n − m`.
    pub fn delta(&self) -> usize {
        self.n - self.m
    }

    pub fn fits(&self, dim: usize) -> bool {
        self.n < dim
    }
}

impl TryFrom<[usize; 2]> for FockPair {
    type Error = QngError;

    fn try_from(v: [usize; 2]) -> Result<Self> {
        Self::new(v[0], v[1])
    }
}

impl From<FockPair> for [usize; 2] {
    fn from(p: FockPair) -> Self {
        [p.m, p.n]
    }
}

impl fmt::Display for FockPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.m, self.n)
    }
}

impl FromStr for FockPair {
    type Err = QngError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || QngError::OutOfRange(format!("cannot parse Fock pair {s:?}, expected m,n"));
        let (a, b) = s.trim().split_once(',').ok_or_else(bad)?;
        let a = a.trim().parse().map_err(|_| bad())?;
        let b = b.trim().parse().map_err(|_| bad())?;
        Self::new(a, b)
    }
}

/// Physicists' Hermite polynomial `H_order(z)` by the three-term recurrence.
pub fn hermite_eval(order: usize, z: Complex64) -> Result<Complex64> {
    if order > MAX_HERMITE_ORDER {
        return Err(QngError::UnsupportedOrder {
            order,
            max: MAX_HERMITE_ORDER,
        });
    }
    let mut prev = Complex64::new(1.0, 0.0);
    if order == 0 {
        return Ok(prev);
    }
    let mut cur = 2.0 * z;
    for k in 1..order {
        let next = 2.0 * z * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// `⟨n|α⟩ = e^{−|α|²/2} αⁿ / √(n!)`.
pub fn coherent_amplitude(n: usize, alpha: Complex64) -> Complex64 {
    let r = alpha.norm();
    if r == 0.0 {
        return if n == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    let ln_mag = -0.5 * r * r + n as f64 * r.ln() - 0.5 * ln_factorial(n);
    Complex64::from_polar(ln_mag.exp(), n as f64 * alpha.arg())
}

/// Coefficients of `s^k` in `exp(quad·s² + lin·s)`, multiplied by `√(k!)`.
///
/// For `quad ≠ 0` the unscaled coefficient equals
/// `(√−quad)^k H_k(lin / (2√−quad)) / k!`; the recurrence used here stays
/// finite as `quad → 0` where it reduces to `lin^k / √(k!)`.
pub fn scaled_hermite_series(len: usize, quad: Complex64, lin: Complex64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(len);
    for k in 0..len {
        let v = match k {
            0 => Complex64::new(1.0, 0.0),
            1 => lin,
            _ => {
                let kf = k as f64;
                (lin * out[k - 1] + 2.0 * quad * (kf - 1.0).sqrt() * out[k - 2]) / kf.sqrt()
            }
        };
        out.push(v);
    }
    out
}

fn wrap_phase(p: f64) -> f64 {
    let w = p.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Parameters of the Gaussian unitary `S(ξ)D(α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub xi_mag: f64,
    pub xi_phase: f64,
    pub alpha_mag: f64,
    pub alpha_phase: f64,
}

impl GaussianParams {
    pub fn new(xi_mag: f64, xi_phase: f64, alpha_mag: f64, alpha_phase: f64) -> Result<Self> {
        let all = [xi_mag, xi_phase, alpha_mag, alpha_phase];
        if all.iter().any(|v| !v.is_finite()) || xi_mag < 0.0 || alpha_mag < 0.0 {
            return Err(QngError::OutOfRange(format!(
                "Gaussian parameters must be finite with non-negative magnitudes, got {all:?}"
            )));
        }
        Ok(Self {
            xi_mag,
            xi_phase: wrap_phase(xi_phase),
            alpha_mag,
            alpha_phase: wrap_phase(alpha_phase),
        })
    }

    pub fn identity() -> Self {
        Self {
            xi_mag: 0.0,
            xi_phase: 0.0,
            alpha_mag: 0.0,
            alpha_phase: 0.0,
        }
    }

    pub fn from_complex(xi: Complex64, alpha: Complex64) -> Self {
        Self {
            xi_mag: xi.norm(),
            xi_phase: if xi.norm() > 0.0 {
                wrap_phase(xi.arg())
            } else {
                0.0
            },
            alpha_mag: alpha.norm(),
            alpha_phase: if alpha.norm() > 0.0 {
                wrap_phase(alpha.arg())
            } else {
                0.0
            },
        }
    }

    pub fn coherent(alpha: Complex64) -> Self {
        Self::from_complex(Complex64::new(0.0, 0.0), alpha)
    }

    /// Parameters of `S(ξ)D(β)` equal to `D(α)S(ξ)`, i.e. with the displacement
    /// applied after squeezing. `β = α cosh r + α* e^{iθ} sinh r`.
    pub fn from_displacement_after_squeeze(xi: Complex64, alpha: Complex64) -> Self {
        let r = xi.norm();
        let nu = if r > 0.0 {
            xi / r * r.sinh()
        } else {
            Complex64::new(0.0, 0.0)
        };
        let beta = alpha * r.cosh() + alpha.conj() * nu;
        Self::from_complex(xi, beta)
    }

    pub fn xi(&self) -> Complex64 {
        Complex64::from_polar(self.xi_mag, self.xi_phase)
    }

    pub fn alpha(&self) -> Complex64 {
        Complex64::from_polar(self.alpha_mag, self.alpha_phase)
    }

    /// Displacement of the equivalent `D(γ)S(ξ)` ordering.
    pub fn displacement_after_squeeze(&self) -> Complex64 {
        let (mu, nu) = self.mu_nu();
        let a = self.alpha();
        mu * a - nu * a.conj()
    }

    fn mu_nu(&self) -> (f64, Complex64) {
        (
            self.xi_mag.cosh(),
            Complex64::from_polar(self.xi_mag.sinh(), self.xi_phase),
        )
    }

    pub fn in_validated_range(&self) -> bool {
        self.xi_mag <= MAX_SQUEEZE && self.alpha_mag <= MAX_DISPLACEMENT
    }
}

/// Precomputed generating-function coefficients of `S(ξ)D(α)`.
#[derive(Debug, Clone)]
pub struct GaussianAmplitudes {
    vacuum: Complex64,
    quad_row: Complex64,
    cross: f64,
    quad_col: Complex64,
    lin_row: Complex64,
    lin_col: Complex64,
}

impl GaussianAmplitudes {
    pub fn new(g: &GaussianParams) -> Self {
        let (mu, nu) = g.mu_nu();
        let alpha = g.alpha();
        let tanh_r = g.xi_mag.tanh();
        let vacuum = (-0.5 * alpha.norm_sqr()
            + 0.5 * Complex64::from_polar(tanh_r, -g.xi_phase) * alpha * alpha)
            .exp()
            / mu.sqrt();
        Self {
            vacuum,
            quad_row: -nu / (2.0 * mu),
            cross: 1.0 / mu,
            quad_col: nu.conj() / (2.0 * mu),
            lin_row: alpha / mu,
            lin_col: -alpha.conj() + nu.conj() / mu * alpha,
        }
    }

    pub fn row_series(&self, len: usize) -> Vec<Complex64> {
        scaled_hermite_series(len, self.quad_row, self.lin_row)
    }

    pub fn col_series(&self, len: usize) -> Vec<Complex64> {
        scaled_hermite_series(len, self.quad_col, self.lin_col)
    }

    fn combine(&self, m: usize, n: usize, rows: &[Complex64], cols: &[Complex64]) -> Complex64 {
        // w_i = √(C(m,i) C(n,i)) cross^i, updated term by term
        let mut sum = Complex64::new(0.0, 0.0);
        let mut w = 1.0;
        for i in 0..=m.min(n) {
            sum += w * rows[m - i] * cols[n - i];
            w *= (((m - i) * (n - i)) as f64).sqrt() / (i + 1) as f64 * self.cross;
        }
        self.vacuum * sum
    }

    /// `⟨m|S(ξ)D(α)|n⟩`.
    pub fn amplitude(&self, m: usize, n: usize) -> Complex64 {
        let rows = self.row_series(m + 1);
        let cols = self.col_series(n + 1);
        self.combine(m, n, &rows, &cols)
    }

    /// `⟨row|S(ξ)D(α)|j⟩` for `j < cols`, one vector per requested row.
    pub fn rows(&self, rows: &[usize], cols: usize) -> Vec<Vec<Complex64>> {
        let max_row = rows.iter().copied().max().unwrap_or(0);
        let rs = self.row_series(max_row + 1);
        let cs = self.col_series(cols.max(1));
        rows.iter()
            .map(|&m| (0..cols).map(|j| self.combine(m, j, &rs, &cs)).collect())
            .collect()
    }
}

/// `a_{m,n}(ξ,α) = ⟨m|S(ξ)D(α)|n⟩` from the analytic Hermite sum.
pub fn sdf_amplitude(m: usize, n: usize, g: &GaussianParams) -> Result<Complex64> {
    if !g.in_validated_range() {
        return Err(QngError::OutOfRange(format!(
            "|ξ| = {} or |α| = {} outside the validated range (|ξ| ≤ {MAX_SQUEEZE}, |α| ≤ {MAX_DISPLACEMENT}); use build_gaussian_matrix",
            g.xi_mag, g.alpha_mag
        )));
    }
    if m.max(n) >= DEFAULT_TRUNCATION {
        return Err(QngError::OutOfRange(format!(
            "Fock index {} must be below {DEFAULT_TRUNCATION}",
            m.max(n)
        )));
    }
    Ok(GaussianAmplitudes::new(g).amplitude(m, n))
}

/// Annihilation operator on `dim` levels.
pub fn annihilation(dim: usize) -> DMatrix<Complex64> {
    let mut a = DMatrix::zeros(dim, dim);
    for k in 1..dim {
        a[(k - 1, k)] = Complex64::new((k as f64).sqrt(), 0.0);
    }
    a
}

/// `exp(K)` for anti-Hermitian `K`, through the eigendecomposition of `iK`.
fn expm_anti_hermitian(k: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let h = k.map(|v| I * v);
    let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let phases = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues
            .iter()
            .map(|&l| Complex64::from_polar(1.0, -l)),
    );
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= phases[j];
    }
    scaled * v.adjoint()
}

/// Truncated matrix of `S(ξ)D(α)` from exponentiated generators on
/// `dim + MATRIX_PAD` levels, cropped to `dim × dim`.
///
/// The first `min(dim/4, LOW_FOCK_BLOCK)` columns are required to stay away
/// from the edge of the working space.
pub fn build_gaussian_matrix(g: &GaussianParams, dim: usize) -> Result<DMatrix<Complex64>> {
    gaussian_matrix_checked(g, dim, dim, (dim / 4).clamp(1, LOW_FOCK_BLOCK))
}

/// First `cols` columns of [`build_gaussian_matrix`], each guarded against
/// the edge of the working space.
pub fn build_gaussian_columns(
    g: &GaussianParams,
    dim: usize,
    cols: usize,
) -> Result<DMatrix<Complex64>> {
    if cols > dim {
        return Err(QngError::OutOfRange(format!(
            "{cols} columns exceed dimension {dim}"
        )));
    }
    gaussian_matrix_checked(g, dim, cols, cols)
}

fn gaussian_matrix_checked(
    g: &GaussianParams,
    dim: usize,
    cols: usize,
    check: usize,
) -> Result<DMatrix<Complex64>> {
    if dim == 0 {
        return Err(QngError::OutOfRange(
            "matrix dimension must be positive".into(),
        ));
    }
    let work = dim + MATRIX_PAD;
    let a = annihilation(work);
    let ad = a.adjoint();
    let xi = g.xi();
    let alpha = g.alpha();
    let sq_gen = (&a * &a * xi.conj() - &ad * &ad * xi) * Complex64::new(0.5, 0.0);
    let disp_gen = &ad * alpha - &a * alpha.conj();
    let s = expm_anti_hermitian(&sq_gen);
    let d = expm_anti_hermitian(&disp_gen);
    let full = s * d;
    for j in 0..check {
        let edge = full.view((work - 8, j), (8, 1)).norm_squared();
        if edge > 1e-8 {
            return Err(QngError::TruncationRisk(format!(
                "column {j} puts population {edge:.3e} at the edge of {work} levels; increase the dimension (|ξ| = {}, |α| = {})",
                g.xi_mag, g.alpha_mag
            )));
        }
    }
    Ok(full.view((0, 0), (dim, cols)).into_owned())
}

/// Unit-norm vector of Fock amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: DVector<Complex64>,
}

impl PureState {
    pub fn new(amps: DVector<Complex64>) -> Result<Self> {
        let norm = amps.norm_squared();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-9 {
            return Err(QngError::InvalidState(format!(
                "squared norm {norm} is not 1"
            )));
        }
        Ok(Self { amps })
    }

    pub fn normalized(amps: DVector<Complex64>) -> Result<Self> {
        let norm = amps.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(QngError::InvalidState(
                "cannot normalize a zero vector".into(),
            ));
        }
        Ok(Self {
            amps: amps / Complex64::new(norm, 0.0),
        })
    }

    pub fn fock(k: usize, dim: usize) -> Result<Self> {
        if k >= dim {
            return Err(QngError::OutOfRange(format!(
                "Fock state {k} outside dimension {dim}"
            )));
        }
        let mut v = DVector::zeros(dim);
        v[k] = Complex64::new(1.0, 0.0);
        Ok(Self { amps: v })
    }

    /// `(|m⟩ + e^{iφ}|n⟩)/√2`.
    pub fn balanced(pair: FockPair, phase: f64, dim: usize) -> Result<Self> {
        if !pair.fits(dim) {
            return Err(QngError::OutOfRange(format!(
                "pair ({pair}) outside dimension {dim}"
            )));
        }
        let mut v = DVector::zeros(dim);
        v[pair.m()] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        v[pair.n()] = Complex64::from_polar(std::f64::consts::FRAC_1_SQRT_2, phase);
        Ok(Self { amps: v })
    }

    /// `S(ξ)D(α)|core⟩` through the truncated matrix oracle.
    pub fn gaussian(g: &GaussianParams, core: &[Complex64], dim: usize) -> Result<Self> {
        if core.len() > dim / 2 {
            return Err(QngError::OutOfRange(
                "core state too large for dimension".into(),
            ));
        }
        let u = build_gaussian_columns(g, dim, core.len())?;
        let v = u * DVector::from_column_slice(core);
        Self::new(v)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amps
    }

    /// Population above level `dim − guard`.
    pub fn tail_population(&self, guard: usize) -> f64 {
        let start = self.dim().saturating_sub(guard);
        self.amps.rows(start, self.dim() - start).norm_squared()
    }

    pub fn check_tail(&self) -> Result<()> {
        let tail = self.tail_population(8);
        if tail > 1e-8 {
            return Err(QngError::TruncationRisk(format!(
                "population {tail:.3e} in the top 8 levels"
            )));
        }
        Ok(())
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix(&self.amps * self.amps.adjoint())
    }
}

/// Hermitian, positive semidefinite, unit-trace operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(DMatrix<Complex64>);

impl DensityMatrix {
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        let rho = Self(m);
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<Complex64>) -> Self {
        Self(m)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.0;
        if !m.is_square() || m.nrows() == 0 {
            return Err(QngError::InvalidState(
                "density matrix must be square and non-empty".into(),
            ));
        }
        let herm = (m - m.adjoint())
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        if !(herm <= 1e-10) {
            return Err(QngError::InvalidState(format!(
                "not Hermitian (deviation {herm:.3e})"
            )));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
            return Err(QngError::InvalidState(format!("trace {tr} is not 1")));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -1e-9 {
            return Err(QngError::InvalidState(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.0 + self.0.adjoint()) * Complex64::new(0.5, 0.0);
        SymmetricEigen::new(h)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn pure(psi: &PureState) -> Self {
        psi.to_density()
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim) * Complex64::new(1.0 / dim as f64, 0.0))
    }

    /// Thermal state with mean phonon number `nbar`, renormalized after truncation.
    pub fn thermal(nbar: f64, dim: usize) -> Result<Self> {
        let pops = thermal_populations(nbar, dim)?;
        Ok(Self(DMatrix::from_diagonal(&DVector::from_iterator(
            dim,
            pops.into_iter().map(|p| Complex64::new(p, 0.0)),
        ))))
    }

    /// `p·self + (1−p)·other`.
    pub fn mix(&self, p: f64, other: &DensityMatrix) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) || self.dim() != other.dim() {
            return Err(QngError::OutOfRange(
                "mixing weight outside [0,1] or dimension mismatch".into(),
            ));
        }
        Ok(Self(
            &self.0 * Complex64::new(p, 0.0) + &other.0 * Complex64::new(1.0 - p, 0.0),
        ))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn element(&self, j: usize, k: usize) -> Complex64 {
        self.0[(j, k)]
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.0[(k, k)].re).collect()
    }

    pub fn mean_phonon(&self) -> f64 {
        self.populations()
            .iter()
            .enumerate()
            .map(|(k, p)| k as f64 * p)
            .sum()
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }
}

pub fn thermal_populations(nbar: f64, dim: usize) -> Result<Vec<f64>> {
    if !(nbar >= 0.0) || dim == 0 {
        return Err(QngError::OutOfRange(format!(
            "thermal occupation {nbar} must be non-negative"
        )));
    }
    if nbar == 0.0 {
        let mut p = vec![0.0; dim];
        p[0] = 1.0;
        return Ok(p);
    }
    let ratio = nbar / (1.0 + nbar);
    let mut p: Vec<f64> = (0..dim)
        .map(|k| ratio.powi(k as i32) / (1.0 + nbar))
        .collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    Ok(p)
}

/// Normalized superposition `Σ c_j |j⟩` of the lowest `dim` Fock states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreState {
    coeffs: Vec<Complex64>,
}

impl CoreState {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        if coeffs.is_empty() || (norm - 1.0).abs() > 1e-12 {
            return Err(QngError::InvalidState(format!(
                "core state squared norm {norm} is not 1"
            )));
        }
        Ok(Self { coeffs })
    }

    pub fn normalized(coeffs: Vec<Complex64>) -> Result<Self> {
        let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(QngError::InvalidState(
                "cannot normalize a zero core state".into(),
            ));
        }
        Ok(Self {
            coeffs: coeffs.into_iter().map(|c| c / norm).collect(),
        })
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }
}

/// `C_{m,n}(ρ) = 2|⟨m|ρ|n⟩|`. Elements outside the truncation are zero.
pub fn coherence_quantifier(rho: &DensityMatrix, pair: FockPair) -> f64 {
    if !pair.fits(rho.dim()) {
        return 0.0;
    }
    2.0 * rho.element(pair.m(), pair.n()).norm()
}

/// `C_{m,n}` of a pure state given by its Fock amplitudes.
pub fn pure_coherence(amps: &[Complex64], pair: FockPair) -> f64 {
    if pair.n() >= amps.len() {
        return 0.0;
    }
    2.0 * amps[pair.m()].norm() * amps[pair.n()].norm()
}

/// Phase of the coherence `⟨m|ρ|n⟩`, in `(−π, π]`.
pub fn coherence_phase(rho: &DensityMatrix, pair: FockPair) -> f64 {
    let v = rho.element(pair.m(), pair.n());
    if v.norm() == 0.0 {
        0.0
    } else {
        v.arg()
    }
}
