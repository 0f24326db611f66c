//! Toeplitz compressions on the circle and the odd Chern character pairing.
//!
//! On `S¹ = [0,1)` with flat twist `θ` the operator `−i d/dx` has eigenvalue
//! `2π(n + θ)` on `e^{2πi(n+θ)x}`. A map `g` with Fourier coefficients `ĝ_w`
//! acts on mode coefficients by convolution, `(g f)_n = Σ_w ĝ_w f_{n−w}`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};
use crate::torus::UnitaryMap;

pub const KERNEL_THRESHOLD: f64 = 1e-8;
pub const GAP_FACTOR: f64 = 100.0;
pub const STABILITY_STEP: usize = 4;
pub const PAIRING_TOL: f64 = 1e-6;

/// Whether the Hardy space keeps the zero eigenvalue.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum HardyConvention {
    #[default]
    IncludeZero,
    ExcludeZero,
}

/// Retained labels `n ∈ [−Λ, Λ]` of the nonnegative spectral subspace.
#[derive(Clone, Debug, Serialize)]
pub struct HardySpace {
    pub twist: f64,
    pub cutoff: usize,
    pub labels: Vec<i64>,
}

impl HardySpace {
    pub fn rank(&self) -> usize {
        self.labels.len()
    }

    /// The projection as a diagonal matrix on all `2Λ + 1` box modes.
    pub fn projection(&self) -> CMat {
        let lam = self.cutoff as i64;
        let side = (2 * lam + 1) as usize;
        let mut p = CMat::zeros(side, side);
        for n in &self.labels {
            let i = (n + lam) as usize;
            p[(i, i)] = linalg::ONE;
        }
        p
    }
}

pub fn hardy_projection(twist: f64, cutoff: usize, convention: HardyConvention) -> Result<HardySpace> {
    if !(0.0..1.0).contains(&twist) {
        return Err(Error::InvalidTorus(format!("twist {twist} must lie in [0, 1)")));
    }
    let lam = cutoff as i64;
    let labels = (-lam..=lam)
        .filter(|n| {
            let l = 2.0 * PI * (*n as f64 + twist);
            match convention {
                HardyConvention::IncludeZero => l >= 0.0,
                HardyConvention::ExcludeZero => l > 0.0,
            }
        })
        .collect();
    Ok(HardySpace { twist, cutoff, labels })
}

#[derive(Clone, Debug)]
pub struct ToeplitzProblem {
    pub twist: f64,
    pub map: UnitaryMap,
    pub cutoff: usize,
    pub convention: HardyConvention,
}

impl ToeplitzProblem {
    pub fn new(twist: f64, map: UnitaryMap, cutoff: usize) -> Result<Self> {
        if map.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: map.dim() });
        }
        let support = map.max_frequency();
        if (cutoff as i64) < support + 2 {
            return Err(Error::InvalidParameter(format!(
                "cutoff {cutoff} must exceed the symbol's frequency support {support} by at least 2"
            )));
        }
        hardy_projection(twist, cutoff, HardyConvention::IncludeZero)?;
        Ok(Self { twist, map, cutoff, convention: HardyConvention::IncludeZero })
    }

    pub fn with_convention(mut self, convention: HardyConvention) -> Self {
        self.convention = convention;
        self
    }

    fn hardy(&self, cutoff: usize) -> HardySpace {
        hardy_projection(self.twist, cutoff, self.convention).expect("twist validated on construction")
    }
}

/// `Σ_w ĝ_w` placed at `(row n′, column n)` whenever `n′ − n = w`, with block
/// index `label·N + a`.
fn section(map: &UnitaryMap, rows: &[i64], cols: &[i64]) -> CMat {
    let r = map.rank();
    let mut out = CMat::zeros(rows.len() * r, cols.len() * r);
    for (j, n) in cols.iter().enumerate() {
        for (i, np) in rows.iter().enumerate() {
            if let Some(c) = map.coefficient(&[np - n]) {
                out.view_mut((i * r, j * r), (r, r)).copy_from(c);
            }
        }
    }
    out
}

/// `P_{≥0} g P_{≥0}` on the retained modes of the box.
pub fn toeplitz_operator(problem: &ToeplitzProblem) -> CMat {
    let h = problem.hardy(problem.cutoff);
    section(&problem.map, &h.labels, &h.labels)
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelCount {
    pub dimension: usize,
    /// Largest singular value counted as zero, or 0 when none is.
    pub below: f64,
    /// Smallest singular value counted as nonzero.
    pub above: f64,
}

/// Kernel dimension of `P g` restricted to the Hardy modes up to `cutoff`.
///
/// The codomain keeps every Hardy mode the restriction can reach, so the
/// section is the exact operator on a subspace and the top of the box cannot
/// fabricate kernel vectors.
fn restricted_kernel(map: &UnitaryMap, hardy: &HardySpace) -> Result<KernelCount> {
    let reach = map.max_frequency();
    let first = hardy.labels.first().copied().unwrap_or(0);
    let last = hardy.labels.last().copied().unwrap_or(-1);
    let rows: Vec<i64> = (first..=last + reach).collect();
    let m = section(map, &rows, &hardy.labels);
    let (_, sv, _) = linalg::svd(&m)?;
    let mut sv: Vec<f64> = sv.into_iter().take(m.ncols()).collect();
    sv.resize(m.ncols(), 0.0);
    sv.sort_by(f64::total_cmp);
    let dimension = sv.iter().filter(|s| **s < KERNEL_THRESHOLD).count();
    let below = if dimension == 0 { 0.0 } else { sv[dimension - 1] };
    let above = sv.get(dimension).copied().unwrap_or(f64::INFINITY);
    let floor = below.max(f64::EPSILON * 16.0);
    if above < GAP_FACTOR * KERNEL_THRESHOLD || above < GAP_FACTOR * floor {
        return Err(Error::AmbiguousSvdGap { below, above });
    }
    Ok(KernelCount { dimension, below, above })
}

#[derive(Clone, Debug, Serialize)]
pub struct IndexCertificate {
    pub index: i64,
    pub kernel: KernelCount,
    pub cokernel: KernelCount,
    pub cutoff: usize,
    /// Index recomputed at `cutoff + 4`; equal to `index` or an error is raised.
    pub stable_index: i64,
}

/// `dim ker T − dim ker T†`, certified by an SVD gap and a cutoff change.
pub fn fredholm_index(problem: &ToeplitzProblem) -> Result<IndexCertificate> {
    let at = |cutoff: usize| -> Result<(i64, KernelCount, KernelCount)> {
        let h = problem.hardy(cutoff);
        let kernel = restricted_kernel(&problem.map, &h)?;
        let cokernel = restricted_kernel(&problem.map.adjoint(), &h)?;
        Ok((kernel.dimension as i64 - cokernel.dimension as i64, kernel, cokernel))
    };
    let (index, kernel, cokernel) = at(problem.cutoff)?;
    let next = problem.cutoff + STABILITY_STEP;
    let (stable_index, _, _) = at(next)?;
    if stable_index != index {
        return Err(Error::IndexUnstable {
            first: index,
            cutoff: problem.cutoff,
            second: stable_index,
            cutoff_next: next,
        });
    }
    Ok(IndexCertificate { index, kernel, cokernel, cutoff: problem.cutoff, stable_index })
}

/// A smooth map `T^d → U(N)` with pointwise derivatives.
pub trait SmoothUnitary {
    fn dim(&self) -> usize;
    fn rank(&self) -> usize;
    fn eval(&self, x: &[f64]) -> CMat;
    fn derivative(&self, x: &[f64], j: usize) -> CMat;
}

impl SmoothUnitary for UnitaryMap {
    fn dim(&self) -> usize {
        UnitaryMap::dim(self)
    }

    fn rank(&self) -> usize {
        UnitaryMap::rank(self)
    }

    fn eval(&self, x: &[f64]) -> CMat {
        UnitaryMap::eval(self, x)
    }

    fn derivative(&self, x: &[f64], j: usize) -> CMat {
        UnitaryMap::derivative(self, x, j)
    }
}

/// Degree-one map `T³ → SU(2)`: `exp(iπ h(r) x̂·σ)` about the cube centre,
/// with `h` a flat-ended smooth step from 0 at the centre to 1 at `radius`,
/// so the map is `−I` on a neighbourhood of the cube faces.
#[derive(Clone, Debug, Serialize)]
pub struct HedgehogMap {
    pub radius: f64,
}

impl Default for HedgehogMap {
    fn default() -> Self {
        Self { radius: 0.45 }
    }
}

fn flat(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

fn flat_prime(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        flat(t) / (t * t)
    }
}

impl HedgehogMap {
    /// `(h, h′)` at radius `r`.
    fn step(&self, r: f64) -> (f64, f64) {
        let t = r / self.radius;
        if t >= 1.0 {
            return (1.0, 0.0);
        }
        let (a, b) = (flat(t), flat(1.0 - t));
        let (da, db) = (flat_prime(t), -flat_prime(1.0 - t));
        let s = a + b;
        (a / s, (da * s - a * (da + db)) / (s * s) / self.radius)
    }

    fn centred(x: &[f64]) -> [f64; 3] {
        let c = |v: f64| v.rem_euclid(1.0) - 0.5;
        [c(x[0]), c(x[1]), c(x[2])]
    }
}

fn pauli_combination(v: [f64; 3]) -> CMat {
    let mut out = CMat::zeros(2, 2);
    for (j, c) in v.iter().enumerate() {
        out += crate::clifford::pauli(j + 1) * C64::new(*c, 0.0);
    }
    out
}

impl SmoothUnitary for HedgehogMap {
    fn dim(&self) -> usize {
        3
    }

    fn rank(&self) -> usize {
        2
    }

    fn eval(&self, x: &[f64]) -> CMat {
        let y = Self::centred(x);
        let r = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
        let (h, _) = self.step(r);
        let phi = PI * h;
        if r == 0.0 {
            return CMat::identity(2, 2);
        }
        let n = [y[0] / r, y[1] / r, y[2] / r];
        CMat::identity(2, 2) * C64::new(phi.cos(), 0.0) + pauli_combination(n) * C64::new(0.0, phi.sin())
    }

    fn derivative(&self, x: &[f64], j: usize) -> CMat {
        let y = Self::centred(x);
        let r = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
        let (h, dh) = self.step(r);
        // h vanishes to all orders at r = 0
        if r < 1e-12 || r >= self.radius {
            return CMat::zeros(2, 2);
        }
        let phi = PI * h;
        let dphi = PI * dh * y[j] / r;
        let n = [y[0] / r, y[1] / r, y[2] / r];
        let mut dn = [0.0; 3];
        for (k, d) in dn.iter_mut().enumerate() {
            *d = ((if k == j { 1.0 } else { 0.0 }) - n[j] * n[k]) / r;
        }
        CMat::identity(2, 2) * C64::new(-phi.sin() * dphi, 0.0)
            + pauli_combination(n) * C64::new(0.0, phi.cos() * dphi)
            + pauli_combination(dn) * C64::new(0.0, phi.sin())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PairingResult {
    pub value: f64,
    /// Change between the grid and its half-resolution.
    pub error_estimate: f64,
    pub resolution: usize,
    /// Largest imaginary part of the integrand sum, relative to its size.
    pub imaginary_residual: f64,
}

/// Integrand density of `−(1/2πi)^{(d+1)/2} ∫ ch(g)` at `x`, before taking the
/// real part.
fn pairing_density(map: &dyn SmoothUnitary, x: &[f64]) -> C64 {
    let g = map.eval(x);
    let ginv = g.adjoint();
    let omega: Vec<CMat> = (0..map.dim()).map(|j| &ginv * map.derivative(x, j)).collect();
    match map.dim() {
        // −(1/2πi) tr ω
        1 => -omega[0].trace() / C64::new(0.0, 2.0 * PI),
        // −(1/2πi)² (1/3!) Σ_ε tr(ω_i ω_j ω_k) = (1/8π²) tr(ω₁[ω₂, ω₃])
        _ => {
            let comm = &omega[1] * &omega[2] - &omega[2] * &omega[1];
            (&omega[0] * comm).trace() / (8.0 * PI * PI)
        }
    }
}

fn pairing_sum(map: &dyn SmoothUnitary, n: usize) -> C64 {
    let h = 1.0 / n as f64;
    let d = map.dim();
    let total = n.pow(d as u32);
    let mut acc = C64::new(0.0, 0.0);
    let mut x = vec![0.0; d];
    for idx in 0..total {
        let mut rest = idx;
        for v in x.iter_mut() {
            *v = (rest % n) as f64 * h;
            rest /= n;
        }
        acc += pairing_density(map, &x);
    }
    acc * h.powi(d as i32)
}

/// `−(1/2πi)^{(d+1)/2} ∫_{T^d} ch(g)` by the periodic trapezoid rule, doubling
/// the grid from `resolution` until two levels agree within the tolerance.
pub fn odd_chern_pairing(map: &dyn SmoothUnitary, resolution: usize, max_resolution: usize) -> Result<PairingResult> {
    if map.dim() != 1 && map.dim() != 3 {
        return Err(Error::Unsupported(format!("odd pairing on a {}-dimensional base", map.dim())));
    }
    let mut n = resolution.max(2);
    let mut prev = pairing_sum(map, n);
    loop {
        let next_n = 2 * n;
        let next = pairing_sum(map, next_n);
        let error_estimate = (next - prev).norm();
        if error_estimate <= PAIRING_TOL || next_n * 2 > max_resolution {
            if error_estimate > PAIRING_TOL {
                return Err(Error::Quadrature { estimate: error_estimate });
            }
            let imaginary_residual = next.im.abs() / next.norm().max(1.0);
            return Ok(PairingResult { value: next.re, error_estimate, resolution: next_n, imaginary_residual });
        }
        n = next_n;
        prev = next;
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IndexReport {
    pub spectral_index: i64,
    pub pairing_value: f64,
    pub kernel: usize,
    pub cokernel: usize,
    /// Ratio of the smallest retained to the largest discarded singular value.
    pub svd_gap: f64,
    pub stability_delta: i64,
    pub pairing_error: f64,
    pub cutoff: usize,
}

/// Index of the Toeplitz compression against the pairing.
pub fn verify_toeplitz(problem: &ToeplitzProblem) -> Result<IndexReport> {
    let cert = fredholm_index(problem)?;
    let resolution = (4 * problem.map.max_frequency() as usize + 8).next_power_of_two();
    let pairing = odd_chern_pairing(&problem.map, resolution, 1 << 16)?;
    let ratio = |k: &KernelCount| k.above / k.below.max(f64::EPSILON);
    let report = IndexReport {
        spectral_index: cert.index,
        pairing_value: pairing.value,
        kernel: cert.kernel.dimension,
        cokernel: cert.cokernel.dimension,
        svd_gap: ratio(&cert.kernel).min(ratio(&cert.cokernel)),
        stability_delta: cert.stable_index - cert.index,
        pairing_error: pairing.error_estimate,
        cutoff: problem.cutoff,
    };
    let nearest = pairing.value.round();
    if (pairing.value - nearest).abs() > PAIRING_TOL || nearest as i64 != cert.index {
        return Err(Error::IndexMismatch { index: cert.index, pairing: pairing.value });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;
    use std::collections::BTreeMap;

    fn shift(k: i64) -> UnitaryMap {
        UnitaryMap::character(vec![k])
    }

    #[test]
    fn hardy_examples() {
        let h = hardy_projection(0.0, 3, HardyConvention::IncludeZero).unwrap();
        assert_eq!(h.labels, vec![0, 1, 2, 3]);
        assert_eq!(h.projection().trace().re, 4.0);
        let h = hardy_projection(0.3, 5, HardyConvention::IncludeZero).unwrap();
        assert_eq!(h.labels, (0..=5).collect::<Vec<_>>());
        let h = hardy_projection(0.0, 3, HardyConvention::ExcludeZero).unwrap();
        assert_eq!(h.labels, vec![1, 2, 3]);
    }

    #[test]
    fn shift_compression_is_subdiagonal() {
        let t = toeplitz_operator(&ToeplitzProblem::new(0.0, shift(1), 6).unwrap());
        let n = t.nrows();
        let mut oracle = CMat::zeros(n, n);
        for i in 1..n {
            oracle[(i, i - 1)] = ONE;
        }
        assert_eq!(t, oracle);
        let tt = toeplitz_operator(&ToeplitzProblem::new(0.0, shift(-1), 6).unwrap());
        assert_eq!(tt, oracle.transpose());
    }

    #[test]
    fn constant_symbol_has_index_zero() {
        let u = CMat::from_row_slice(
            2,
            2,
            &[C64::new(0.6, 0.0), C64::new(0.0, 0.8), C64::new(0.0, 0.8), C64::new(0.6, 0.0)],
        );
        let p = ToeplitzProblem::new(0.0, UnitaryMap::constant(1, u.clone()), 8).unwrap();
        let t = toeplitz_operator(&p);
        assert!((t.clone() - linalg::kron(&CMat::identity(9, 9), &u)).norm() < 1e-15);
        let r = verify_toeplitz(&p).unwrap();
        assert_eq!((r.spectral_index, r.kernel, r.cokernel), (0, 0, 0));
    }

    #[test]
    fn shifts_have_index_minus_winding() {
        for k in -3..=3 {
            let r = verify_toeplitz(&ToeplitzProblem::new(0.0, shift(k), 64).unwrap()).unwrap();
            assert_eq!(r.spectral_index, -k);
            assert!((r.pairing_value + k as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_mode_convention_does_not_move_the_index() {
        for k in [-2, 1, 3] {
            let p = ToeplitzProblem::new(0.0, shift(k), 20).unwrap();
            let a = fredholm_index(&p).unwrap().index;
            let b = fredholm_index(&p.with_convention(HardyConvention::ExcludeZero)).unwrap().index;
            assert_eq!(a, b);
        }
    }

    #[test]
    fn matrix_symbol_with_mixed_windings() {
        // diag(e^{2πi·2x}, e^{−2πix}) conjugated by a constant unitary
        let g = UnitaryMap::diagonal(1, &[(vec![2], ONE), (vec![-1], ONE)]).unwrap();
        let u = CMat::from_row_slice(
            2,
            2,
            &[C64::new(0.6, 0.0), C64::new(0.0, 0.8), C64::new(0.0, 0.8), C64::new(0.6, 0.0)],
        );
        let r = verify_toeplitz(&ToeplitzProblem::new(0.3, g.conjugated(&u), 24).unwrap()).unwrap();
        assert_eq!(r.spectral_index, -1);
        assert_eq!((r.kernel, r.cokernel), (1, 2));
    }

    #[test]
    fn rotation_loop_has_balanced_kernels() {
        // x ↦ rotation by 2πx: eigen-windings ±1 in a constant frame
        let mut c = BTreeMap::new();
        let (h, ih) = (C64::new(0.5, 0.0), C64::new(0.0, 0.5));
        c.insert(vec![1], CMat::from_row_slice(2, 2, &[h, ih, -ih, h]));
        c.insert(vec![-1], CMat::from_row_slice(2, 2, &[h, -ih, ih, h]));
        let g = UnitaryMap::from_coefficients(1, 2, c).unwrap();
        g.check_unitary(16, 1e-12).unwrap();
        let r = verify_toeplitz(&ToeplitzProblem::new(0.0, g, 16).unwrap()).unwrap();
        assert_eq!((r.spectral_index, r.kernel, r.cokernel), (0, 1, 1));
    }

    #[test]
    fn hedgehog_has_unit_pairing() {
        let r = odd_chern_pairing(&HedgehogMap::default(), 16, 128).unwrap();
        assert!((r.value.abs() - 1.0).abs() < 1e-6, "{r:?}");
        let c = odd_chern_pairing(&UnitaryMap::constant(3, CMat::identity(2, 2)), 4, 16).unwrap();
        assert_eq!(c.value, 0.0);
    }

    #[test]
    fn hedgehog_derivative_matches_difference_quotient() {
        let m = HedgehogMap::default();
        let x = [0.61, 0.43, 0.72];
        for j in 0..3 {
            let h = 1e-6;
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let fd = (m.eval(&xp) - m.eval(&xm)) / C64::new(2.0 * h, 0.0);
            assert!((fd - m.derivative(&x, j)).norm() < 1e-7);
        }
    }
}
