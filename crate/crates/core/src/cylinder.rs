//! The perturbed Dirac operator on a cylinder `[0, a] × T²`.
//!
//! The operator is `c_x·(∂_x + D_X + (1 − sψ(x))·c(g⁻¹dg))`, with `c_x = −iΓ`,
//! the boundary condition `P_X(L)` at `x = 0` and `Id − g⁻¹P_X(L)g` at `x = a`.
//! The x-direction is discretized by an orthonormal Legendre basis and the
//! boundary conditions are imposed by restricting to the null space of the
//! boundary rows, which keeps the reduced matrix Hermitian.
//!
//! For character maps every transverse mode decouples into a `2(J+1)`-sized
//! problem; the full dense path handles general maps on small boxes.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::clifford::CliffordRep;
use crate::dirac::{box_reach, dirac_block, galerkin_family, FamilyHandle, SpectralData, DEFAULT_KERNEL_TOL};
use crate::error::{Error, Result};
use crate::eta::{
    distance_mod_one, eta_invariant, smoothed_eta, spectral_flow, uniform_grid, EtaOptions, EtaResult, FlowControl,
    SpectralFlow,
};
use crate::linalg::{self, CMat, C64, ONE, ZERO};
use crate::torus::{ModeSet, TorusSpec, UnitaryMap};

/// Momenta closer than this to the origin are treated as kernel modes.
const MOMENTUM_TOL: f64 = 1e-12;

/// Dense cylinder problems above this dimension are refused.
pub const MAX_DENSE_DIMENSION: usize = 6000;

/// Legendre degree needed per unit of resolved eigenvalue per unit length.
const DEGREE_PER_BOUND: f64 = 0.7;
const DEGREE_MARGIN: usize = 12;

fn smoothstep5(t: f64) -> f64 {
    t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
}

/// `ψ = 1` on `[0, εa]`, `ψ = 0` on `[(1−2ε)a, a]`, quintic smoothstep between.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CutoffProfile {
    epsilon: f64,
}

impl CutoffProfile {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 0.25) {
            return Err(Error::InvalidParameter(format!("cutoff profile ε = {epsilon} must lie in (0, 1/4)")));
        }
        Ok(Self { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn value(&self, x: f64, length: f64) -> f64 {
        let t = (x / length - self.epsilon) / (1.0 - 3.0 * self.epsilon);
        1.0 - smoothstep5(t.clamp(0.0, 1.0))
    }

    /// Interior points where the profile changes polynomial piece.
    fn breakpoints(&self, length: f64) -> [f64; 2] {
        [self.epsilon * length, (1.0 - 2.0 * self.epsilon) * length]
    }
}

impl Default for CutoffProfile {
    fn default() -> Self {
        Self { epsilon: 0.1 }
    }
}

/// Isometry `T: K⁺ → K⁻`; the Lagrangian is its graph.
#[derive(Clone, Debug, PartialEq)]
pub struct LagrangianSpec {
    isometry: CMat,
}

impl LagrangianSpec {
    pub fn new(isometry: CMat) -> Result<Self> {
        if isometry.nrows() != isometry.ncols() {
            return Err(Error::InvalidLagrangian(format!(
                "isometry must be square, got {}×{}",
                isometry.nrows(),
                isometry.ncols()
            )));
        }
        let n = isometry.nrows();
        let defect = (isometry.adjoint() * &isometry - CMat::identity(n, n)).norm();
        if defect > 1e-10 {
            return Err(Error::InvalidLagrangian(format!("T†T − I has norm {defect:.3e}")));
        }
        Ok(Self { isometry })
    }

    pub fn identity(n: usize) -> Self {
        Self { isometry: CMat::identity(n, n) }
    }

    /// `T = e^{iφ}·I`.
    pub fn phase(n: usize, phi: f64) -> Self {
        Self { isometry: CMat::identity(n, n) * C64::from_polar(1.0, phi) }
    }

    pub fn isometry(&self) -> &CMat {
        &self.isometry
    }

    pub fn dimension(&self) -> usize {
        self.isometry.nrows()
    }

    fn is_diagonal(&self) -> bool {
        let n = self.dimension();
        (0..n).all(|i| (0..n).all(|j| i == j || self.isometry[(i, j)].norm() < 1e-14))
    }
}

/// Chirality-graded kernel of the truncated `D_X`, as columns in the
/// transverse index `(mode · 2 + σ) · N + a`.
#[derive(Clone, Debug)]
pub struct KernelGrading {
    pub plus: CMat,
    pub minus: CMat,
}

impl KernelGrading {
    pub fn dimension(&self) -> usize {
        self.plus.ncols() + self.minus.ncols()
    }

    /// Columns `(K⁺ + K⁻T)/√2` spanning the graph of `T`.
    pub fn lagrangian(&self, spec: &LagrangianSpec) -> Result<CMat> {
        self.check(spec)?;
        Ok((&self.plus + &self.minus * spec.isometry()) * C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0))
    }

    /// Columns `(K⁺ − K⁻T)/√2` spanning `c_x·L = L^⊥ ∩ ker`.
    pub fn lagrangian_complement(&self, spec: &LagrangianSpec) -> Result<CMat> {
        self.check(spec)?;
        Ok((&self.plus - &self.minus * spec.isometry()) * C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0))
    }

    fn check(&self, spec: &LagrangianSpec) -> Result<()> {
        if spec.dimension() != self.plus.ncols() {
            return Err(Error::InvalidLagrangian(format!(
                "isometry acts on a {}-dimensional space but dim K⁺ = {}",
                spec.dimension(),
                self.plus.ncols()
            )));
        }
        Ok(())
    }
}

/// Kernel of the free transverse operator on the box, split by chirality.
pub fn kernel_grading(spec: &TorusSpec, cutoff: usize, rank: usize) -> Result<KernelGrading> {
    if spec.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: spec.dim() });
    }
    let modes = ModeSet::new(spec, cutoff);
    let size = modes.len() * 2 * rank;
    let zero_modes: Vec<usize> = modes
        .momenta()
        .iter()
        .enumerate()
        .filter(|(_, k)| k.iter().map(|x| x * x).sum::<f64>().sqrt() < MOMENTUM_TOL)
        .map(|(i, _)| i)
        .collect();
    let unit = |mode: usize, sigma: usize, a: usize| {
        let mut v = DVector::from_element(size, ZERO);
        v[(mode * 2 + sigma) * rank + a] = ONE;
        v
    };
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for &i in &zero_modes {
        for a in 0..rank {
            // Γ = σ₃: the first spinor component is positive
            plus.push(unit(i, 0, a));
            minus.push(unit(i, 1, a));
        }
    }
    if plus.len() != minus.len() {
        return Err(Error::UnequalGrading { plus: plus.len(), minus: minus.len() });
    }
    let to_mat = |cols: Vec<DVector<C64>>| {
        if cols.is_empty() {
            CMat::zeros(size, 0)
        } else {
            CMat::from_columns(&cols)
        }
    };
    Ok(KernelGrading { plus: to_mat(plus), minus: to_mat(minus) })
}

/// Largest violation of `c_x L ⊥ L` and `c_x L ⊂ ker`.
pub fn lagrangian_residual(grading: &KernelGrading, spec: &LagrangianSpec, normal: &CMat) -> Result<f64> {
    let l = grading.lagrangian(spec)?;
    let cl = normal * &l;
    let orth = (l.adjoint() * &cl).norm();
    let kernel = CMat::from_columns(
        &grading.plus.column_iter().chain(grading.minus.column_iter()).map(|c| c.into_owned()).collect::<Vec<_>>(),
    );
    let outside = (&cl - &kernel * (kernel.adjoint() * &cl)).norm();
    Ok(orth.max(outside))
}

/// `I_modes ⊗ c_x ⊗ I_N` on the transverse index.
fn transverse_normal(rep: &CliffordRep, modes: usize, rank: usize) -> Result<CMat> {
    let cx = rep.collar_normal()?;
    Ok(linalg::kron(&linalg::kron(&CMat::identity(modes, modes), &cx), &CMat::identity(rank, rank)))
}

/// Orthogonal projection onto the positive spectral subspace of `boundary`
/// plus the Lagrangian `L`.
pub fn aps_projection(boundary: &CMat, grading: &KernelGrading, lagrangian: Option<&LagrangianSpec>) -> Result<CMat> {
    let range = aps_range(boundary, grading, lagrangian)?;
    Ok(&range * range.adjoint())
}

/// Orthonormal columns spanning the range of `P_X(L)`.
fn aps_range(boundary: &CMat, grading: &KernelGrading, lagrangian: Option<&LagrangianSpec>) -> Result<CMat> {
    let (vals, vecs) = linalg::eigh(boundary)?;
    let mut cols: Vec<DVector<C64>> = vals
        .iter()
        .enumerate()
        .filter(|(_, l)| **l > DEFAULT_KERNEL_TOL)
        .map(|(i, _)| vecs.column(i).into_owned())
        .collect();
    match (grading.dimension(), lagrangian) {
        (0, None) => {}
        (0, Some(_)) => {
            return Err(Error::InvalidLagrangian("boundary kernel is empty, no Lagrangian is needed".into()));
        }
        (d, None) => return Err(Error::MissingLagrangian { dim: d }),
        (_, Some(spec)) => {
            let l = grading.lagrangian(spec)?;
            cols.extend(l.column_iter().map(|c| c.into_owned()));
        }
    }
    if cols.is_empty() {
        return Ok(CMat::zeros(boundary.nrows(), 0));
    }
    Ok(CMat::from_columns(&cols))
}

#[derive(Clone, Debug)]
pub struct ConjugatedProjection {
    pub matrix: CMat,
    pub idempotency_residual: f64,
    pub hermitian_residual: f64,
}

/// `g⁻¹·P·g` on the truncated box; frequencies leaving the box are dropped,
/// and the resulting loss shows up in the idempotency residual.
pub fn conjugate_projection(map: &UnitaryMap, projection: &CMat, modes: &ModeSet) -> ConjugatedProjection {
    let spinor = projection.nrows() / (modes.len() * map.rank());
    let g = map.multiplication_matrix(modes, spinor);
    let g_inv = map.adjoint().multiplication_matrix(modes, spinor);
    let matrix = &g_inv * projection * &g;
    let idempotency_residual = (&matrix * &matrix - &matrix).norm();
    let hermitian_residual = (&matrix - matrix.adjoint()).norm();
    ConjugatedProjection { matrix, idempotency_residual, hermitian_residual }
}

/// Orthonormal Legendre polynomials on `[0, a]` with the matrices needed for
/// the collar operator.
#[derive(Clone, Debug)]
struct LegendreBasis {
    degree: usize,
    left: DVector<f64>,
    right: DVector<f64>,
    /// `∫ p_i p_j′`
    derivative: DMatrix<f64>,
    /// `∫ ψ p_i p_j`
    profile: DMatrix<f64>,
}

/// `P_j(t)` and `P_j′(t)` for `j = 0..=n`.
fn legendre(n: usize, t: f64) -> (Vec<f64>, Vec<f64>) {
    let mut p = vec![0.0; n + 1];
    let mut d = vec![0.0; n + 1];
    p[0] = 1.0;
    if n >= 1 {
        p[1] = t;
        d[1] = 1.0;
    }
    for k in 1..n {
        let kf = k as f64;
        p[k + 1] = ((2.0 * kf + 1.0) * t * p[k] - kf * p[k - 1]) / (kf + 1.0);
        d[k + 1] = d[k - 1] + (2.0 * kf + 1.0) * p[k];
    }
    (p, d)
}

impl LegendreBasis {
    fn new(degree: usize, length: f64, profile: &CutoffProfile) -> Self {
        let n = degree + 1;
        let norm: Vec<f64> = (0..n).map(|j| ((2 * j + 1) as f64 / length).sqrt()).collect();
        let eval = |x: f64| {
            let (p, d) = legendre(degree, 2.0 * x / length - 1.0);
            let p: Vec<f64> = p.iter().zip(&norm).map(|(a, c)| a * c).collect();
            let d: Vec<f64> = d.iter().zip(&norm).map(|(a, c)| a * c * 2.0 / length).collect();
            (p, d)
        };
        let left = DVector::from_vec(eval(0.0).0);
        let right = DVector::from_vec(eval(length).0);
        let mut derivative = DMatrix::zeros(n, n);
        let mut prof = DMatrix::zeros(n, n);
        let [b0, b1] = profile.breakpoints(length);
        // pieces on which ψ is polynomial, so every integral below is exact
        for (lo, hi) in [(0.0, b0), (b0, b1), (b1, length)] {
            let (xs, ws) = linalg::gauss_legendre_on(degree + 8, lo, hi);
            for (x, w) in xs.iter().zip(&ws) {
                let (p, d) = eval(*x);
                let psi = profile.value(*x, length);
                for i in 0..n {
                    for j in 0..n {
                        derivative[(i, j)] += w * p[i] * d[j];
                        prof[(i, j)] += w * psi * p[i] * p[j];
                    }
                }
            }
        }
        Self { degree, left, right, derivative, profile: prof }
    }

    fn size(&self) -> usize {
        self.degree + 1
    }
}

/// `Σ a_{στ} ⊗ b` laid out as `σ·n + i`.
fn kron_real(a: &CMat, b: &DMatrix<f64>) -> CMat {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = CMat::zeros(ra * rb, ca * cb);
    for s in 0..ra {
        for t in 0..ca {
            let z = a[(s, t)];
            if z == ZERO {
                continue;
            }
            for i in 0..rb {
                for j in 0..cb {
                    out[(s * rb + i, t * cb + j)] = z * b[(i, j)];
                }
            }
        }
    }
    out
}

/// Collar Galerkin matrix of `c_x(∂_x + D₁ − sψ·V)` on `transverse ⊗ Legendre`,
/// restricted to the null space of the boundary rows, then Hermitian-projected.
fn reduce(
    basis: &LegendreBasis,
    normal: &CMat,
    endpoint_operator: &CMat,
    perturbation: &CMat,
    s: f64,
    left_rows: &CMat,
    right_rows: &CMat,
) -> Result<(CMat, f64)> {
    let nt = normal.nrows();
    let nj = basis.size();
    let id = DMatrix::identity(nj, nj);
    let mut g = kron_real(normal, &basis.derivative) + kron_real(&(normal * endpoint_operator), &id);
    if s != 0.0 {
        g -= kron_real(&(normal * perturbation), &basis.profile) * C64::new(s, 0.0);
    }
    let left = CMat::from_iterator(nj, 1, basis.left.iter().map(|x| C64::new(*x, 0.0)));
    let right = CMat::from_iterator(nj, 1, basis.right.iter().map(|x| C64::new(*x, 0.0)));
    let constraints = {
        let a = linalg::kron(left_rows, &left);
        let b = linalg::kron(right_rows, &right);
        let mut c = CMat::zeros(nt * nj, a.ncols() + b.ncols());
        c.columns_mut(0, a.ncols()).copy_from(&a);
        c.columns_mut(a.ncols(), b.ncols()).copy_from(&b);
        c
    };
    let q = linalg::orthogonal_complement(&constraints)?;
    let mut h = linalg::congruence(&q, &g);
    let residual = linalg::hermitian_residual(&h);
    linalg::symmetrize(&mut h);
    Ok((h, residual))
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Distance from the origin to the segment `[k, k + m]`.
fn segment_distance(k: &[f64], m: &[f64]) -> f64 {
    let mm: f64 = m.iter().map(|x| x * x).sum();
    let t = if mm == 0.0 { 0.0 } else { (-k.iter().zip(m).map(|(a, b)| a * b).sum::<f64>() / mm).clamp(0.0, 1.0) };
    let p: Vec<f64> = k.iter().zip(m).map(|(a, b)| a + t * b).collect();
    norm2(&p)
}

type Spinor = [C64; 2];
type Block2 = [[C64; 2]; 2];

fn apply(a: &Block2, u: &Spinor) -> Spinor {
    [a[0][0] * u[0] + a[0][1] * u[1], a[1][0] * u[0] + a[1][1] * u[1]]
}

fn as_block(m: &CMat) -> Block2 {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

/// Shooting for one decoupled block.
///
/// Solutions of `c_x(u′ + M(x)u) = λu` keep `|u₊| = |u₋|` (the Γ-current is
/// conserved and both boundary spinors are null), so `u` is determined up to
/// scale by the relative phase `arg u₋ − arg u₊`. Unwrapped along `[0, a]`
/// this phase is a strictly decreasing function of `λ`, and eigenvalues are
/// exactly the `λ` at which it meets the far boundary phase modulo `2π`. The
/// label `(phase − target)/2π` therefore counts eigenvalues without any
/// discretization in `x` beyond the ODE solver, and cannot be polluted.
struct Shooter {
    length: f64,
    profile: CutoffProfile,
    /// `−c_x`, so that `u′ = (−λc_x − M)u`.
    minus_normal: Block2,
    /// `M` at `ψ = 0` and its `ψ`-slope.
    mass: Block2,
    slope: Block2,
    start: Spinor,
    target: f64,
    /// Bound on the phase speed contributed by `M`.
    speed: f64,
}

fn perp(row: &CMat) -> Spinor {
    [-row[(1, 0)].conj(), row[(0, 0)].conj()]
}

fn relative_phase(u: &Spinor) -> f64 {
    (u[1] * u[0].conj()).arg()
}

impl Shooter {
    fn phase(&self, lambda: f64) -> f64 {
        let a = |x: f64| -> Block2 {
            let psi = self.profile.value(x, self.length);
            std::array::from_fn(|i| {
                std::array::from_fn(|j| self.minus_normal[i][j] * lambda - self.mass[i][j] - self.slope[i][j] * psi)
            })
        };
        let rate = 2.0 * lambda.abs() + 2.0 * self.speed;
        let steps = ((self.length * rate / 0.04).ceil() as usize).max(64);
        let h = self.length / steps as f64;
        let mut u = self.start;
        let mut phase = relative_phase(&u);
        let axpy = |u: &Spinor, k: &Spinor, t: f64| [u[0] + k[0] * t, u[1] + k[1] * t];
        for i in 0..steps {
            let x = i as f64 * h;
            let a0 = a(x);
            let am = a(x + 0.5 * h);
            let a1 = a(x + h);
            let k1 = apply(&a0, &u);
            let k2 = apply(&am, &axpy(&u, &k1, 0.5 * h));
            let k3 = apply(&am, &axpy(&u, &k2, 0.5 * h));
            let k4 = apply(&a1, &axpy(&u, &k3, h));
            let next = [
                u[0] + (k1[0] + k2[0] * 2.0 + k3[0] * 2.0 + k4[0]) * (h / 6.0),
                u[1] + (k1[1] + k2[1] * 2.0 + k3[1] * 2.0 + k4[1]) * (h / 6.0),
            ];
            phase += linalg::wrap_phase(relative_phase(&next) - relative_phase(&u));
            let scale = 1.0 / (next[0].norm_sqr() + next[1].norm_sqr()).sqrt();
            u = [next[0] * scale, next[1] * scale];
        }
        phase
    }

    /// Eigenvalues below `λ` are those with label greater than `label(λ)`.
    fn label(&self, lambda: f64) -> f64 {
        (self.phase(lambda) - self.target) / (2.0 * PI)
    }
}

/// Number of eigenvalues in `[lo, hi]` from the labels at the two ends.
fn shooting_count(label_lo: f64, label_hi: f64) -> i64 {
    label_lo.floor() as i64 - label_hi.ceil() as i64 + 1
}

/// Keeps the Galerkin eigenvalues confirmed by shooting inside `[−bound, bound]`.
///
/// Intervals whose Galerkin count exceeds the shooting count are split at
/// their widest gap until each surplus is isolated; a cluster narrower than
/// the solver can separate keeps as many members as shooting finds. Returns
/// the kept eigenvalues and the number dropped.
fn certify_block(shooter: &Shooter, eigs: &[f64], bound: f64) -> Result<(Vec<f64>, usize)> {
    let mut sorted = eigs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let first = sorted.iter().position(|l| *l >= -bound);
    let last = sorted.iter().rposition(|l| *l <= bound);
    let (Some(i0), Some(i1)) = (first, last) else {
        return Ok((sorted, 0));
    };
    if i0 > i1 {
        return Ok((sorted, 0));
    }
    let lo = if i0 > 0 { 0.5 * (sorted[i0 - 1] + sorted[i0]) } else { sorted[i0] - 1.0 };
    let hi = if i1 + 1 < sorted.len() { 0.5 * (sorted[i1] + sorted[i1 + 1]) } else { sorted[i1] + 1.0 };
    let mut keep = vec![true; sorted.len()];
    let mut stack = vec![(i0, i1 + 1, shooter.label(lo), shooter.label(hi))];
    while let Some((i, j, l_lo, l_hi)) = stack.pop() {
        let expected = shooting_count(l_lo, l_hi);
        let have = (j - i) as i64;
        if expected == have {
            continue;
        }
        if expected > have {
            return Err(Error::Truncation(format!(
                "Galerkin spectrum misses {} eigenvalue(s) near {:.4}; raise the degree",
                expected - have,
                sorted[i]
            )));
        }
        let (gap, at) =
            (i + 1..j).map(|t| (sorted[t] - sorted[t - 1], t)).fold((0.0, i), |b, c| if c.0 > b.0 { c } else { b });
        if gap < 1e-7 * (1.0 + sorted[i].abs()) {
            let surplus = (have - expected.max(0)) as usize;
            for flag in keep[i..j].iter_mut().take(surplus) {
                *flag = false;
            }
            continue;
        }
        let mid = 0.5 * (sorted[at - 1] + sorted[at]);
        let l_mid = shooter.label(mid);
        stack.push((i, at, l_lo, l_mid));
        stack.push((at, j, l_mid, l_hi));
    }
    let dropped = keep.iter().filter(|k| !**k).count();
    let kept = sorted.into_iter().zip(keep).filter(|(_, k)| *k).map(|(l, _)| l).collect();
    Ok((kept, dropped))
}

/// Which transverse modes enter the per-mode path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ModeSelection {
    /// Every mode of the box.
    All,
    /// Modes whose segment `[k, k + m]` comes within `(bound + 2π)/2π` of the origin.
    Resolved,
}

#[derive(Clone, Debug, Serialize)]
pub struct PerModeSpectrum {
    pub eigenvalues: Vec<f64>,
    pub hermitian_residual: f64,
    /// Galerkin eigenvalues rejected by shooting.
    pub spurious: usize,
}

/// One decoupled transverse block of a character problem.
#[derive(Clone, Debug, Serialize)]
pub struct ModeBlock {
    pub slot: usize,
    pub momentum: Vec<f64>,
    pub character: Vec<i64>,
}

/// The boundary value problem on `[0, a] × T²`.
#[derive(Clone, Debug)]
pub struct CylinderBvp {
    pub length: f64,
    pub spec: TorusSpec,
    pub cutoff: usize,
    pub map: UnitaryMap,
    pub profile: CutoffProfile,
    pub lagrangian: Option<LagrangianSpec>,
    /// Legendre degree of the eigenvalue computation.
    pub degree: usize,
    /// Legendre degree used while tracking spectral flow.
    pub flow_degree: usize,
    pub window: EtaOptions,
    pub flow_grid: usize,
    rep: CliffordRep,
}

/// Degree resolving eigenvalues up to `bound` on a collar of the given length.
pub fn required_degree(bound: f64, length: f64) -> usize {
    (DEGREE_PER_BOUND * bound * length).ceil() as usize + DEGREE_MARGIN
}

impl CylinderBvp {
    /// Problem with default discretization: the collar smoothing window, the
    /// degree it requires, and `T = I` when the boundary has a kernel.
    pub fn new(length: f64, spec: TorusSpec, map: UnitaryMap, cutoff: usize, profile: CutoffProfile) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidParameter(format!("cylinder length {length} must be positive")));
        }
        if spec.dim() != 2 || map.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: if spec.dim() != 2 { spec.dim() } else { map.dim() },
            });
        }
        let rep = CliffordRep::build(2)?;
        let grading = kernel_grading(&spec, cutoff, map.rank())?;
        let lagrangian = (grading.dimension() > 0).then(|| LagrangianSpec::identity(grading.plus.ncols()));
        let window = EtaOptions::collar();
        let degree = required_degree(window.required_bound(), length);
        let flow_degree = 12 * length.ceil() as usize + 14;
        Ok(Self { length, spec, cutoff, map, profile, lagrangian, degree, flow_degree, window, flow_grid: 20, rep })
    }

    pub fn with_lagrangian(mut self, lagrangian: Option<LagrangianSpec>) -> Self {
        self.lagrangian = lagrangian;
        self
    }

    pub fn with_degree(mut self, degree: usize) -> Self {
        self.degree = degree;
        self
    }

    pub fn with_window(mut self, window: EtaOptions) -> Self {
        self.degree = self.degree.max(required_degree(window.required_bound(), self.length));
        self.window = window;
        self
    }

    pub fn with_profile(mut self, profile: CutoffProfile) -> Self {
        self.profile = profile;
        self
    }

    pub fn rep(&self) -> &CliffordRep {
        &self.rep
    }

    /// Smallest degree accepted at all for this length.
    pub fn minimum_degree(&self) -> usize {
        (8.0 * self.length).ceil() as usize + 8
    }

    /// Eigenvalue magnitude up to which the discretization is trusted.
    pub fn resolved_bound(&self, degree: usize) -> f64 {
        let by_degree = degree.saturating_sub(DEGREE_MARGIN) as f64 / (DEGREE_PER_BOUND * self.length);
        let reach = box_reach(&self.spec, self.cutoff) - self.map_reach();
        by_degree.min(2.0 * PI * (reach - 1.0)).max(0.0)
    }

    fn map_reach(&self) -> f64 {
        self.map
            .coefficients()
            .keys()
            .map(|w| norm2(&w.iter().map(|x| *x as f64).collect::<Vec<_>>()))
            .fold(0.0, f64::max)
    }

    /// Characters per slot when the per-mode path applies.
    pub fn per_mode_characters(&self) -> Option<Vec<Vec<i64>>> {
        if let Some(l) = &self.lagrangian {
            if !l.is_diagonal() {
                return None;
            }
        }
        self.map.diagonal_characters().map(|c| c.into_iter().map(|(m, _)| m).collect())
    }

    pub fn grading(&self) -> Result<KernelGrading> {
        kernel_grading(&self.spec, self.cutoff, self.map.rank())
    }

    fn check_degree(&self, degree: usize) -> Result<()> {
        let required = self.minimum_degree();
        if degree < required {
            return Err(Error::DiscretizationTooCoarse { degree, required });
        }
        Ok(())
    }

    fn check_lagrangian(&self) -> Result<()> {
        let grading = self.grading()?;
        match (&self.lagrangian, grading.dimension()) {
            (None, 0) => Ok(()),
            (None, d) => Err(Error::MissingLagrangian { dim: d }),
            (Some(_), 0) => Err(Error::InvalidLagrangian("boundary kernel is empty, no Lagrangian is needed".into())),
            (Some(l), _) => {
                let normal =
                    transverse_normal(&self.rep, ModeSet::new(&self.spec, self.cutoff).len(), self.map.rank())?;
                let r = lagrangian_residual(&grading, l, &normal)?;
                if r > 1e-10 {
                    return Err(Error::InvalidLagrangian(format!("Lagrangian condition violated by {r:.3e}")));
                }
                Ok(())
            }
        }
    }

    /// Decoupled blocks of a character problem.
    /// The cut for [`ModeSelection::Resolved`] uses the bound resolved at `degree`.
    pub fn mode_blocks(&self, selection: ModeSelection, degree: usize) -> Result<Vec<ModeBlock>> {
        let chars = self.per_mode_characters().ok_or(Error::NotACharacter)?;
        let modes = ModeSet::new(&self.spec, self.cutoff);
        let bound = self.resolved_bound(degree);
        let mut out = Vec::new();
        for (slot, m) in chars.iter().enumerate() {
            let mf: Vec<f64> = m.iter().map(|x| *x as f64).collect();
            for k in modes.momenta() {
                let keep = match selection {
                    ModeSelection::All => true,
                    ModeSelection::Resolved => 2.0 * PI * segment_distance(k, &mf) <= bound + 2.0 * PI,
                };
                if keep {
                    out.push(ModeBlock { slot, momentum: k.clone(), character: m.clone() });
                }
            }
        }
        Ok(out)
    }

    /// Boundary rows `(x = 0, x = a)` of one block as column vectors in `C²`.
    fn mode_rows(&self, block: &ModeBlock) -> Result<(CMat, CMat)> {
        let k = &block.momentum;
        let end: Vec<f64> = k.iter().zip(&block.character).map(|(a, b)| a + *b as f64).collect();
        let phase = self.lagrangian.as_ref().map(|l| l.isometry()[(block.slot, block.slot)]).unwrap_or(ONE);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let ell = CMat::from_column_slice(2, 1, &[C64::new(h, 0.0), phase * h]);
        let ell_perp = CMat::from_column_slice(2, 1, &[C64::new(h, 0.0), -phase * h]);
        let eigvec = |v: &[f64], positive: bool| -> Result<CMat> {
            let (_, vecs) = linalg::eigh(&dirac_block(&self.rep, v))?;
            Ok(vecs.columns(if positive { 1 } else { 0 }, 1).into_owned())
        };
        let left = if norm2(k) < MOMENTUM_TOL { ell } else { eigvec(k, true)? };
        let right = if norm2(&end) < MOMENTUM_TOL { ell_perp } else { eigvec(&end, false)? };
        Ok((left, right))
    }

    fn shooter(&self, block: &ModeBlock, s: f64) -> Result<Shooter> {
        let normal = self.rep.collar_normal()?;
        let mf: Vec<f64> = block.character.iter().map(|x| *x as f64).collect();
        let end: Vec<f64> = block.momentum.iter().zip(&mf).map(|(a, b)| a + b).collect();
        let (left, right) = self.mode_rows(block)?;
        let mass = dirac_block(&self.rep, &end);
        let slope = dirac_block(&self.rep, &mf) * C64::new(-s, 0.0);
        let speed = 2.0 * PI * (norm2(&end) + s.abs() * norm2(&mf));
        let target = perp(&right);
        Ok(Shooter {
            length: self.length,
            profile: self.profile,
            minus_normal: as_block(&(-normal)),
            mass: as_block(&mass),
            slope: as_block(&slope),
            start: perp(&left),
            target: relative_phase(&target),
            speed,
        })
    }

    /// Shooting label of `λ` for one block at `s`; eigenvalues sit at integers.
    pub fn shooting_label(&self, block: &ModeBlock, s: f64, lambda: f64) -> Result<f64> {
        Ok(self.shooter(block, s)?.label(lambda))
    }

    /// Spectral flow of one block along `s ∈ [0, 1]` from shooting labels at
    /// `λ = 0`; a zero at either end takes the sign it has just inside.
    pub fn block_flow(&self, block: &ModeBlock) -> Result<i64> {
        let label = |s: f64, inward: f64| -> Result<f64> {
            let mut l = self.shooter(block, s)?.label(0.0);
            for step in [1e-6, 1e-4, 1e-2] {
                if (l - l.round()).abs() > 1e-9 {
                    break;
                }
                l = self.shooter(block, s + inward * step)?.label(0.0);
            }
            // a zero that persists inside counts as nonnegative, as in the tracker
            if (l - l.round()).abs() <= 1e-9 {
                l = l.round();
            }
            Ok(l)
        };
        Ok(label(1.0, -1.0)?.floor() as i64 - label(0.0, 1.0)?.floor() as i64)
    }

    fn mode_matrix(&self, basis: &LegendreBasis, block: &ModeBlock, s: f64) -> Result<(CMat, f64)> {
        let normal = self.rep.collar_normal()?;
        let mf: Vec<f64> = block.character.iter().map(|x| *x as f64).collect();
        let end: Vec<f64> = block.momentum.iter().zip(&mf).map(|(a, b)| a + b).collect();
        let d1 = dirac_block(&self.rep, &end);
        let v = dirac_block(&self.rep, &mf);
        let (left, right) = self.mode_rows(block)?;
        reduce(basis, &normal, &d1, &v, s, &left, &right)
    }

    /// Eigenvalues of one block at `s`, ascending.
    pub fn block_spectrum(&self, block: &ModeBlock, s: f64, degree: usize) -> Result<Vec<f64>> {
        self.check_degree(degree)?;
        self.check_lagrangian()?;
        let basis = LegendreBasis::new(degree, self.length, &self.profile);
        linalg::eigvalsh(&self.mode_matrix(&basis, block, s)?.0)
    }

    /// Eigenvalues of every selected block at `s`, with the worst Hermitian residual.
    ///
    /// Galerkin eigenvalues inside the resolved bound that shooting does not
    /// confirm are discarded as spectral pollution and counted in `spurious`.
    pub fn per_mode_spectrum(&self, s: f64, degree: usize, selection: ModeSelection) -> Result<PerModeSpectrum> {
        self.check_degree(degree)?;
        self.check_lagrangian()?;
        let basis = LegendreBasis::new(degree, self.length, &self.profile);
        let bound = self.resolved_bound(degree);
        let mut eig = Vec::new();
        let mut worst: f64 = 0.0;
        let mut dropped = 0;
        for block in self.mode_blocks(selection, degree)? {
            let (h, r) = self.mode_matrix(&basis, &block, s)?;
            worst = worst.max(r);
            let (kept, d) = certify_block(&self.shooter(&block, s)?, &linalg::eigvalsh(&h)?, bound)?;
            dropped += d;
            eig.extend(kept);
        }
        Ok(PerModeSpectrum { eigenvalues: eig, hermitian_residual: worst, spurious: dropped })
    }

    /// Dense operator on the whole box at `s`.
    pub fn full_operator(&self, s: f64, degree: usize) -> Result<AssembledOperator> {
        self.check_degree(degree)?;
        self.check_lagrangian()?;
        let handle = FamilyHandle::galerkin(self.spec.clone(), self.map.clone(), self.cutoff)?;
        let fam = galerkin_family(&handle, self.cutoff);
        let rank = self.map.rank();
        let nt = fam.free.nrows();
        let dimension = nt * (degree + 1);
        if dimension > MAX_DENSE_DIMENSION {
            return Err(Error::Unsupported(format!(
                "dense cylinder problem of dimension {dimension} exceeds {MAX_DENSE_DIMENSION}; reduce the cutoff or degree"
            )));
        }
        let normal = transverse_normal(&self.rep, fam.modes.len(), rank)?;
        let d1 = &fam.free + &fam.perturbation;
        let grading = self.grading()?;
        let left_rows = aps_range(&fam.free, &grading, self.lagrangian.as_ref())?;
        let right_rows = self.far_end_rows(&d1, &grading, &fam.modes)?;
        if left_rows.ncols() * 2 != nt || right_rows.ncols() * 2 != nt {
            return Err(Error::Truncation(format!(
                "boundary conditions of rank {} and {} on a {}-dimensional boundary are not Lagrangian",
                left_rows.ncols(),
                right_rows.ncols(),
                nt
            )));
        }
        let basis = LegendreBasis::new(degree, self.length, &self.profile);
        let (matrix, hermitian_residual) = reduce(&basis, &normal, &d1, &fam.perturbation, s, &left_rows, &right_rows)?;
        Ok(AssembledOperator { matrix, hermitian_residual, s, degree, warnings: fam.warnings })
    }

    /// Orthonormal columns spanning the range of `Id − g⁻¹P_X(L)g` on the box.
    ///
    /// Negative spectral subspace of the truncated `g⁻¹D_X g`, plus the
    /// complement in its kernel of the transported Lagrangian `g⁻¹L`, which is
    /// first re-graded so that it is exactly Lagrangian in that kernel.
    fn far_end_rows(&self, d1: &CMat, grading: &KernelGrading, modes: &ModeSet) -> Result<CMat> {
        let (vals, vecs) = linalg::eigh(d1)?;
        let scale = vals.iter().fold(1.0f64, |m, l| m.max(l.abs()));
        let zero = 1e-8 * scale;
        let mut cols: Vec<DVector<C64>> =
            vals.iter().enumerate().filter(|(_, l)| **l < -zero).map(|(i, _)| vecs.column(i).into_owned()).collect();
        let kernel: Vec<DVector<C64>> = vals
            .iter()
            .enumerate()
            .filter(|(_, l)| l.abs() <= zero)
            .map(|(i, _)| vecs.column(i).into_owned())
            .collect();
        if !kernel.is_empty() {
            let spec = self.lagrangian.as_ref().ok_or(Error::MissingLagrangian { dim: kernel.len() })?;
            let k1 = CMat::from_columns(&kernel);
            let gamma = linalg::kron(
                &linalg::kron(&CMat::identity(modes.len(), modes.len()), self.rep.chirality().expect("dim 2 grading")),
                &CMat::identity(self.map.rank(), self.map.rank()),
            );
            let (gv, gw) = linalg::eigh(&(k1.adjoint() * &gamma * &k1))?;
            let pick = |sign: f64| -> Vec<DVector<C64>> {
                gv.iter()
                    .enumerate()
                    .filter(|(_, v)| (*v * sign) > 0.5)
                    .map(|(i, _)| (&k1 * gw.column(i)).into_owned())
                    .collect()
            };
            let (kp, km) = (pick(1.0), pick(-1.0));
            if kp.len() != km.len() || kp.len() != spec.dimension() {
                return Err(Error::UnequalGrading { plus: kp.len(), minus: km.len() });
            }
            let kp = CMat::from_columns(&kp);
            let km = CMat::from_columns(&km);
            let transported = self.map.adjoint().multiplication_matrix(modes, 2) * grading.lagrangian(spec)?;
            let ap = kp.adjoint() * &transported;
            let am = km.adjoint() * &transported;
            let ap_inv = ap.try_inverse().ok_or_else(|| {
                Error::InvalidLagrangian("transported Lagrangian is not a graph over the kernel".into())
            })?;
            let (u, _, vh) = linalg::svd(&(am * ap_inv))?;
            let t1 = u * vh;
            let complement = (&kp - &km * &t1) * C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            cols.extend(complement.column_iter().map(|c| c.into_owned()));
        }
        Ok(CMat::from_columns(&cols))
    }

    /// Spectrum at `s` by the per-mode path when available, else the dense path.
    pub fn spectrum(&self, s: f64, degree: usize) -> Result<SpectralData> {
        let mut warnings = Vec::new();
        let (eig, residual, method) = if self.per_mode_characters().is_some() {
            let p = self.per_mode_spectrum(s, degree, ModeSelection::Resolved)?;
            if p.spurious > 0 {
                warnings
                    .push(format!("{} Galerkin eigenvalue(s) rejected by shooting as spectral pollution", p.spurious));
            }
            (p.eigenvalues, p.hermitian_residual, "cylinder-per-mode")
        } else {
            let op = self.full_operator(s, degree)?;
            (linalg::eigvalsh(&op.matrix)?, op.hermitian_residual, "cylinder-dense")
        };
        if residual > 1e-8 {
            warnings.push(format!("reduced operator Hermitian residual {residual:.3e}"));
        }
        Ok(SpectralData::new(eig, self.cutoff, method, DEFAULT_KERNEL_TOL)
            .with_resolved_bound(self.resolved_bound(degree))
            .with_warnings(warnings))
    }

    /// Blocks that can carry spectral flow, with their gap at `s = 0`.
    ///
    /// `‖∂_s D‖ ≤ 2π|m|`, so a block whose gap at `s = 0` exceeds that cannot
    /// reach zero on `[0, 1]`. Pollution only adds eigenvalues, so the Galerkin
    /// gap errs on the side of keeping a block.
    fn flow_candidates(&self) -> Result<Vec<(ModeBlock, f64)>> {
        self.check_lagrangian()?;
        let degree = self.flow_degree.max(self.minimum_degree());
        let basis = LegendreBasis::new(degree, self.length, &self.profile);
        let mut out = Vec::new();
        for b in self.mode_blocks(ModeSelection::Resolved, self.degree)? {
            let reach = 2.0 * PI * b.character.iter().map(|c| (*c * *c) as f64).sum::<f64>().sqrt();
            let gap = linalg::eigvalsh(&self.mode_matrix(&basis, &b, 0.0)?.0)?
                .iter()
                .fold(f64::INFINITY, |m, l| m.min(l.abs()));
            if gap <= 1.05 * reach + 1e-9 {
                out.push((b, gap));
            }
        }
        Ok(out)
    }

    /// Galerkin matrix family of one block, for eigenvector tracking.
    pub fn block_family(&self, block: &ModeBlock, degree: usize) -> Result<impl Fn(f64) -> Result<CMat> + '_> {
        self.check_degree(degree)?;
        let basis = LegendreBasis::new(degree, self.length, &self.profile);
        let block = block.clone();
        Ok(move |s: f64| self.mode_matrix(&basis, &block, s).map(|r| r.0))
    }
}

/// The boundary-reduced matrix of `D^{ψ,g}(s)`.
#[derive(Clone, Debug)]
pub struct AssembledOperator {
    pub matrix: CMat,
    /// Relative anti-Hermitian part before symmetrization.
    pub hermitian_residual: f64,
    pub s: f64,
    pub degree: usize,
    pub warnings: Vec<String>,
}

/// Dense boundary-reduced matrix of the operator at `s`.
pub fn assemble_cylinder_operator(bvp: &CylinderBvp, s: f64) -> Result<AssembledOperator> {
    bvp.full_operator(s, bvp.degree)
}

#[derive(Clone, Debug, Serialize)]
pub struct GridConvergence {
    pub degree: usize,
    pub refined_degree: usize,
    pub compared: usize,
    pub max_change: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Compares the smallest `count` eigenvalue magnitudes at the configured
/// degree and at twice that degree.
pub fn grid_convergence(bvp: &CylinderBvp, s: f64, count: usize, tolerance: f64) -> Result<GridConvergence> {
    let smallest = |degree: usize| -> Result<Vec<f64>> {
        Ok(bvp.spectrum(s, degree)?.smallest_by_magnitude(count).iter().map(|l| l.abs()).collect())
    };
    let coarse = smallest(bvp.degree)?;
    let refined_degree = 2 * bvp.degree;
    let fine = smallest(refined_degree)?;
    let max_change = coarse.iter().zip(&fine).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(GridConvergence {
        degree: bvp.degree,
        refined_degree,
        compared: coarse.len().min(fine.len()),
        max_change,
        tolerance,
        passed: max_change < tolerance,
    })
}

/// Reduced eta invariant of `D^{ψ,g}` (the `s = 1` operator).
pub fn cylinder_eta(bvp: &CylinderBvp) -> Result<EtaResult> {
    let spectrum = bvp.spectrum(1.0, bvp.degree)?;
    eta_invariant(&spectrum, &bvp.window)
}

/// Spectral flow of `s ↦ D^{ψ,g}(s)` on `[0, 1]` with fixed boundary conditions.
///
/// Character problems count per block by shooting; the `grid` is used only by
/// the dense path, which tracks eigenvectors.
pub fn deformation_spectral_flow(bvp: &CylinderBvp, grid: &[f64]) -> Result<SpectralFlow> {
    if bvp.per_mode_characters().is_some() {
        let mut value = 0;
        let mut min_margin = f64::INFINITY;
        for (block, gap) in bvp.flow_candidates()? {
            value += bvp.block_flow(&block)?;
            min_margin = min_margin.min(gap);
        }
        return Ok(SpectralFlow { value, cells: Vec::new(), min_margin });
    }
    let degree = bvp.flow_degree.max(bvp.minimum_degree());
    let family = move |s: f64| bvp.full_operator(s, degree).map(|op| op.matrix);
    spectral_flow(&family, grid, &FlowControl::default())
}

#[derive(Clone, Debug, Serialize)]
pub struct CylinderInvariant {
    /// `η̄(D^{ψ,g}) − sf`.
    pub invariant: EtaResult,
    pub cylinder: EtaResult,
    pub spectral_flow: SpectralFlow,
}

/// `η̄(X, E, g) = η̄(D^{ψ,g}_{[0,a]}) − sf{D^{ψ,g}(s)}`.
pub fn eta_bar_x(bvp: &CylinderBvp) -> Result<CylinderInvariant> {
    let cylinder = cylinder_eta(bvp)?;
    let flow = deformation_spectral_flow(bvp, &uniform_grid(bvp.flow_grid))?;
    let mut regularization = cylinder.regularization.clone();
    regularization.note = format!("{}; spectral flow {}", regularization.note, flow.value);
    let invariant = EtaResult::new(
        cylinder.eta - 2.0 * flow.value as f64,
        cylinder.kernel_dimension,
        cylinder.error_estimate,
        regularization,
    );
    Ok(CylinderInvariant { invariant, cylinder, spectral_flow: flow })
}

/// Unperturbed cylinder operator with `gP_X(L)g⁻¹` at `x = 0` and `Id − P_X(L)`
/// at `x = a`, per transverse mode `k′` of a character problem.
pub fn conjecture_spectrum(bvp: &CylinderBvp, degree: usize) -> Result<SpectralData> {
    let chars = bvp.per_mode_characters().ok_or(Error::NotACharacter)?;
    bvp.check_degree(degree)?;
    bvp.check_lagrangian()?;
    let basis = LegendreBasis::new(degree, bvp.length, &bvp.profile);
    let normal = bvp.rep.collar_normal()?;
    let bound = bvp.resolved_bound(degree);
    let modes = ModeSet::new(&bvp.spec, bvp.cutoff);
    let mut eig = Vec::new();
    let mut spurious = 0;
    for (slot, m) in chars.iter().enumerate() {
        let mf: Vec<f64> = m.iter().map(|x| *x as f64).collect();
        for k in modes.momenta() {
            // the block of mode k′ = k + m, with gPg⁻¹ read off at k′ − m = k
            let kp: Vec<f64> = k.iter().zip(&mf).map(|(a, b)| a + b).collect();
            if 2.0 * PI * segment_distance(k, &mf) > bound + 2.0 * PI {
                continue;
            }
            let block = ModeBlock { slot, momentum: k.clone(), character: m.clone() };
            let (left, right) = bvp.mode_rows(&block)?;
            let d = dirac_block(&bvp.rep, &kp);
            let (h, _) = reduce(&basis, &normal, &d, &CMat::zeros(2, 2), 0.0, &left, &right)?;
            // the s = 0 block of the deformation family is this very operator
            let (kept, d) = certify_block(&bvp.shooter(&block, 0.0)?, &linalg::eigvalsh(&h)?, bound)?;
            spurious += d;
            eig.extend(kept);
        }
    }
    let warnings = if spurious > 0 {
        vec![format!("{spurious} Galerkin eigenvalue(s) rejected by shooting as spectral pollution")]
    } else {
        Vec::new()
    };
    Ok(SpectralData::new(eig, bvp.cutoff, "conjecture-per-mode", DEFAULT_KERNEL_TOL)
        .with_resolved_bound(bound)
        .with_warnings(warnings))
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub tau: f64,
    /// `τ·(2π)²`
    pub tau_scaled: f64,
    /// Smoothed `η̄(D^{ψ,g}) − sf`.
    pub invariant: f64,
    /// Smoothed reduced eta of the unperturbed operator with conjugated conditions.
    pub conjecture: f64,
    pub difference: f64,
}

/// Evidence for the open comparison between the invariant and the reduced
/// eta of the unperturbed operator with conjugated boundary conditions.
#[derive(Clone, Debug, Serialize)]
pub struct ConjectureReport {
    pub label: &'static str,
    pub invariant: f64,
    pub invariant_error: f64,
    pub conjecture_extrapolated: Option<f64>,
    pub conjecture_error: Option<f64>,
    pub conjecture_note: String,
    pub spectral_flow: i64,
    pub sweep: Vec<SweepRow>,
    /// Spread of the difference across the smoothing window.
    pub drift: f64,
    /// Distance modulo one between the two extrapolated sides, when both exist.
    pub difference_mod_one: Option<f64>,
}

/// Smoothing sweep of both sides at matched regularization; never pass/fail.
pub fn conjecture_experiment(bvp: &CylinderBvp) -> Result<ConjectureReport> {
    let left = eta_bar_x(bvp)?;
    let left_spectrum = bvp.spectrum(1.0, bvp.degree)?;
    let right_spectrum = conjecture_spectrum(bvp, bvp.degree)?;
    let kl = left_spectrum.kernel_dimension() as f64;
    let kr = right_spectrum.kernel_dimension() as f64;
    let flow = left.spectral_flow.value as f64;
    let sweep: Vec<SweepRow> = bvp
        .window
        .window
        .iter()
        .map(|&tau| {
            let invariant = (kl + smoothed_eta(&left_spectrum, tau)) / 2.0 - flow;
            let conjecture = (kr + smoothed_eta(&right_spectrum, tau)) / 2.0;
            SweepRow {
                tau,
                tau_scaled: tau * (2.0 * PI).powi(2),
                invariant,
                conjecture,
                difference: invariant - conjecture,
            }
        })
        .collect();
    let lo = sweep.iter().map(|r| r.difference).fold(f64::INFINITY, f64::min);
    let hi = sweep.iter().map(|r| r.difference).fold(f64::NEG_INFINITY, f64::max);
    let (conjecture_extrapolated, conjecture_error, conjecture_note) = match eta_invariant(&right_spectrum, &bvp.window)
    {
        Ok(r) => (Some(r.reduced_eta), Some(r.error_estimate), "√τ extrapolation".to_string()),
        Err(e) => (None, None, format!("no extrapolation: {e}")),
    };
    let difference_mod_one = conjecture_extrapolated.map(|c| distance_mod_one(left.invariant.reduced_eta, c));
    Ok(ConjectureReport {
        label: "EVIDENCE",
        invariant: left.invariant.reduced_eta,
        invariant_error: left.invariant.error_estimate,
        conjecture_extrapolated,
        conjecture_error,
        conjecture_note,
        spectral_flow: left.spectral_flow.value,
        sweep,
        drift: hi - lo,
        difference_mod_one,
    })
}
