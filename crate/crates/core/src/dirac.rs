//! Spectral problems on flat tori: exact per-mode Dirac blocks, the family
//! `D_s = D_X + s·c(g⁻¹dg)`, and the Dirac operator of the mapping torus
//! `S¹ × T²` twisted by `g`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::clifford::CliffordRep;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};
use crate::torus::{MaurerCartan, ModeSet, TorusSpec, UnitaryMap, DEFAULT_UNITARITY_TOL};

/// Eigenvalues below this magnitude count as kernel.
pub const DEFAULT_KERNEL_TOL: f64 = 2.0 * PI * 1e-6;

/// Sign `κ` in `c(∂/∂u) = iκσ₃` for the collar and circle directions.
///
/// Fixed by requiring that the product-formula route and the boundary-value
/// route produce the same sign of the invariant; see `CliffordRep::collar_normal`.
pub const ORIENTATION: f64 = -1.0;

#[derive(Clone, Debug, Serialize)]
pub struct SpectralData {
    eigenvalues: Vec<f64>,
    pub cutoff: usize,
    pub method: String,
    pub kernel_tolerance: f64,
    kernel_dimension: usize,
    /// Eigenvalues of larger magnitude were discarded or never computed.
    pub resolved_bound: f64,
    pub warnings: Vec<String>,
}

impl SpectralData {
    pub fn new(mut eigenvalues: Vec<f64>, cutoff: usize, method: impl Into<String>, kernel_tolerance: f64) -> Self {
        eigenvalues.sort_by(f64::total_cmp);
        let kernel_dimension = eigenvalues.iter().filter(|l| l.abs() < kernel_tolerance).count();
        // without further knowledge the list is taken as complete up to its largest entry
        let resolved_bound = eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
        Self {
            eigenvalues,
            cutoff,
            method: method.into(),
            kernel_tolerance,
            kernel_dimension,
            resolved_bound,
            warnings: Vec::new(),
        }
    }

    pub fn with_resolved_bound(mut self, bound: f64) -> Self {
        self.resolved_bound = bound;
        self
    }

    pub fn with_warnings(mut self, warnings: Vec<String>) -> Self {
        self.warnings = warnings;
        self
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn kernel_dimension(&self) -> usize {
        self.kernel_dimension
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Distinct eigenvalues (within `tol`) with their multiplicities.
    pub fn multiplicities(&self, tol: f64) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for &l in &self.eigenvalues {
            match out.last_mut() {
                Some((v, n)) if (l - *v).abs() <= tol => *n += 1,
                _ => out.push((l, 1)),
            }
        }
        out
    }

    pub fn negated(&self) -> Self {
        let mut out = self.clone();
        out.eigenvalues = self.eigenvalues.iter().rev().map(|l| -l).collect();
        out
    }

    pub fn min_abs(&self) -> f64 {
        self.eigenvalues.iter().fold(f64::INFINITY, |m, l| m.min(l.abs()))
    }

    /// The `count` eigenvalues of smallest magnitude, ordered by magnitude.
    pub fn smallest_by_magnitude(&self, count: usize) -> Vec<f64> {
        let mut v = self.eigenvalues.clone();
        v.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then(a.total_cmp(b)));
        v.truncate(count);
        v
    }

    /// Largest deviation of the spectrum from symmetry under `λ → −λ`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.eigenvalues.len();
        (0..n).map(|i| (self.eigenvalues[i] + self.eigenvalues[n - 1 - i]).abs()).fold(0.0, f64::max)
    }
}

/// `2πi·c(v)`, the symbol of `D_X` on the Fourier mode of momentum `v`.
pub fn dirac_block(rep: &CliffordRep, v: &[f64]) -> CMat {
    rep.mult_real(v).expect("covector length must match the representation") * C64::new(0.0, 2.0 * PI)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum EvalMethod {
    ExactCharacter,
    Galerkin { cutoff: usize },
}

/// The family `D_s = D_X + s·c(g⁻¹dg)` over a flat torus.
#[derive(Clone, Debug)]
pub struct FamilyHandle {
    pub spec: TorusSpec,
    pub map: UnitaryMap,
    pub rep: CliffordRep,
    pub method: EvalMethod,
    maurer_cartan: MaurerCartan,
    characters: Option<Vec<(Vec<i64>, C64)>>,
}

impl FamilyHandle {
    pub fn new(spec: TorusSpec, map: UnitaryMap, method: EvalMethod) -> Result<Self> {
        if spec.dim() != map.dim() {
            return Err(Error::DimensionMismatch { expected: spec.dim(), got: map.dim() });
        }
        let rep = CliffordRep::build(spec.dim())?;
        let resolution = (2 * map.max_frequency() as usize + 1).max(8);
        let maurer_cartan = map.maurer_cartan(resolution, DEFAULT_UNITARITY_TOL)?;
        let characters = map.diagonal_characters();
        if method == EvalMethod::ExactCharacter && characters.is_none() {
            return Err(Error::NotACharacter);
        }
        Ok(Self { spec, map, rep, method, maurer_cartan, characters })
    }

    pub fn exact(spec: TorusSpec, map: UnitaryMap) -> Result<Self> {
        Self::new(spec, map, EvalMethod::ExactCharacter)
    }

    pub fn galerkin(spec: TorusSpec, map: UnitaryMap, cutoff: usize) -> Result<Self> {
        Self::new(spec, map, EvalMethod::Galerkin { cutoff })
    }

    pub fn maurer_cartan(&self) -> &MaurerCartan {
        &self.maurer_cartan
    }

    /// Per-slot characters `m_a` when the map is diagonal with monomial entries.
    pub fn characters(&self) -> Option<Vec<Vec<i64>>> {
        self.characters.as_ref().map(|c| c.iter().map(|(m, _)| m.clone()).collect())
    }

    pub fn rank(&self) -> usize {
        self.map.rank()
    }

    /// `Σ_j c_j ⊗ ω̂_j(p)` on `spinor ⊗ C^N`.
    pub fn clifford_coefficient(&self, p: &[i64]) -> CMat {
        let n = self.map.rank();
        let s = self.rep.size();
        let mut out = CMat::zeros(s * n, s * n);
        for (j, comp) in self.maurer_cartan.components.iter().enumerate() {
            if let Some(w) = comp.get(p) {
                out += linalg::kron(self.rep.generator(j), w);
            }
        }
        out
    }
}

/// Exact spectrum of `D_s` for a diagonal character map.
pub fn family_spectrum_character(handle: &FamilyHandle, s: f64, cutoff: usize) -> Result<SpectralData> {
    let chars = handle.characters().ok_or(Error::NotACharacter)?;
    let modes = ModeSet::new(&handle.spec, cutoff);
    let dim = handle.spec.dim();
    let mut eig = Vec::with_capacity(modes.len() * 2 * chars.len());
    for k in modes.momenta() {
        for m in &chars {
            let v: Vec<f64> = k.iter().zip(m).map(|(k, m)| k + s * *m as f64).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if dim == 1 {
                eig.push(-2.0 * PI * v[0]);
            } else {
                eig.push(-2.0 * PI * norm);
                eig.push(2.0 * PI * norm);
            }
        }
    }
    let reach = box_reach(&handle.spec, cutoff) - s.abs() * max_norm(&chars);
    Ok(SpectralData::new(eig, cutoff, "exact-character", DEFAULT_KERNEL_TOL)
        .with_resolved_bound(2.0 * PI * reach.max(0.0)))
}

/// Distance from the origin to the nearest momentum outside the box.
pub fn box_reach(spec: &TorusSpec, cutoff: usize) -> f64 {
    let lam = cutoff as f64;
    spec.shift().iter().map(|s| (lam + 1.0 - s).min(lam + s)).fold(f64::INFINITY, f64::min)
}

fn max_norm(chars: &[Vec<i64>]) -> f64 {
    chars.iter().map(|m| m.iter().map(|v| (v * v) as f64).sum::<f64>().sqrt()).fold(0.0, f64::max)
}

/// Galerkin truncation of the family: `D_s = free + s·perturbation` on the
/// index `(mode · spinor + σ) · N + a`.
#[derive(Clone, Debug)]
pub struct GalerkinFamily {
    pub modes: ModeSet,
    pub free: CMat,
    pub perturbation: CMat,
    /// Mode indices of the connected components of the coupling graph
    /// `n ~ n + p`, `p` in the frequency support of `g⁻¹dg`. Both matrices are
    /// block diagonal along them.
    pub blocks: Vec<Vec<usize>>,
    pub warnings: Vec<String>,
}

impl GalerkinFamily {
    pub fn at(&self, s: f64) -> CMat {
        &self.free + &self.perturbation * C64::new(s, 0.0)
    }

    fn block_width(&self) -> usize {
        self.free.nrows() / self.modes.len()
    }

    /// Matrix indices spanned by a block of modes.
    pub fn block_indices(&self, block: &[usize]) -> Vec<usize> {
        let w = self.block_width();
        block.iter().flat_map(|m| m * w..(m + 1) * w).collect()
    }

    /// Restriction of `m` to the rows and columns of `indices`.
    pub fn restrict(m: &CMat, indices: &[usize]) -> CMat {
        CMat::from_fn(indices.len(), indices.len(), |i, j| m[(indices[i], indices[j])])
    }

    /// Eigenvalues of `D_s`, solved block by block.
    pub fn eigenvalues(&self, s: f64) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.free.nrows());
        for b in &self.blocks {
            let idx = self.block_indices(b);
            let m = Self::restrict(&self.free, &idx) + Self::restrict(&self.perturbation, &idx) * C64::new(s, 0.0);
            out.extend(linalg::eigvalsh(&m)?);
        }
        Ok(out)
    }

    /// `Γ ⊗ I` on the truncated space (even dimension only).
    pub fn grading(&self, rep: &CliffordRep, rank: usize) -> Result<CMat> {
        let gamma = rep.chirality().ok_or(Error::NoGrading { dim: rep.dim() })?;
        let id = CMat::identity(self.modes.len(), self.modes.len());
        Ok(linalg::kron(&linalg::kron(&id, gamma), &CMat::identity(rank, rank)))
    }
}

pub fn galerkin_family(handle: &FamilyHandle, cutoff: usize) -> GalerkinFamily {
    let modes = ModeSet::new(&handle.spec, cutoff);
    let n = handle.rank();
    let sp = handle.rep.size();
    let block = sp * n;
    let size = modes.len() * block;
    let mut free = CMat::zeros(size, size);
    let mut perturbation = CMat::zeros(size, size);
    let id_n = CMat::identity(n, n);
    for (i, k) in modes.momenta().iter().enumerate() {
        let d = linalg::kron(&dirac_block(&handle.rep, k), &id_n);
        free.view_mut((i * block, i * block), (block, block)).copy_from(&d);
    }
    let support = handle.maurer_cartan.support();
    let coeffs: Vec<(Vec<i64>, CMat)> = support.iter().map(|p| (p.clone(), handle.clifford_coefficient(p))).collect();
    for (col, label) in modes.labels().iter().enumerate() {
        for (p, c) in &coeffs {
            let target: Vec<i64> = label.iter().zip(p).map(|(a, b)| a + b).collect();
            if let Some(row) = modes.index_of(&target) {
                perturbation.view_mut((row * block, col * block), (block, block)).copy_from(c);
            }
        }
    }
    let mut warnings = Vec::new();
    let f = handle.maurer_cartan.max_frequency();
    if f as usize > cutoff {
        warnings.push(format!("cutoff {cutoff} does not contain the frequency support {f} of g⁻¹dg"));
    }
    let blocks = coupled_components(&modes, &support);
    GalerkinFamily { modes, free, perturbation, blocks, warnings }
}

fn coupled_components(modes: &ModeSet, support: &[Vec<i64>]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..modes.len()).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for (i, label) in modes.labels().iter().enumerate() {
        for p in support {
            let target: Vec<i64> = label.iter().zip(p).map(|(a, b)| a + b).collect();
            if let Some(j) = modes.index_of(&target) {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = std::collections::BTreeMap::new();
    for i in 0..modes.len() {
        let r = root(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Hermitian Galerkin matrix of `D_s`; block `(k,k')` is
/// `δ_{kk'}·dirac_block(k) ⊗ I + s·Σ_j c_j ⊗ ω̂_j(n − n')`.
pub fn galerkin_family_matrix(handle: &FamilyHandle, s: f64, cutoff: usize) -> (CMat, Vec<String>) {
    let fam = galerkin_family(handle, cutoff);
    (fam.at(s), fam.warnings)
}

pub fn galerkin_spectrum(handle: &FamilyHandle, s: f64, cutoff: usize) -> Result<SpectralData> {
    let fam = galerkin_family(handle, cutoff);
    let eig = fam.eigenvalues(s)?;
    Ok(SpectralData::new(eig, cutoff, "galerkin", DEFAULT_KERNEL_TOL).with_warnings(fam.warnings))
}

/// Spectrum at `s` by the handle's own evaluation method.
pub fn family_spectrum(handle: &FamilyHandle, s: f64, cutoff: usize) -> Result<SpectralData> {
    match handle.method {
        EvalMethod::ExactCharacter => family_spectrum_character(handle, s, cutoff),
        EvalMethod::Galerkin { cutoff } => galerkin_spectrum(handle, s, cutoff),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InvertibilityReport {
    pub min_gap: f64,
    pub argmin: f64,
    pub threshold: f64,
    pub invertible: bool,
}

/// Minimum of `min|λ(D_s)|` over the grid, refined by golden-section search
/// around the grid minimizer.
pub fn invertibility_scan(
    handle: &FamilyHandle,
    s_grid: &[f64],
    cutoff: usize,
    threshold: f64,
) -> Result<InvertibilityReport> {
    let family = match handle.method {
        EvalMethod::Galerkin { cutoff } => Some(galerkin_family(handle, cutoff)),
        EvalMethod::ExactCharacter => None,
    };
    let gap = |s: f64| -> Result<f64> {
        match &family {
            Some(f) => Ok(f.eigenvalues(s)?.iter().fold(f64::INFINITY, |m, l| m.min(l.abs()))),
            None => Ok(family_spectrum_character(handle, s, cutoff)?.min_abs()),
        }
    };
    let mut best = (f64::INFINITY, 0.0, 0usize);
    for (i, &s) in s_grid.iter().enumerate() {
        let g = gap(s)?;
        if g < best.0 {
            best = (g, s, i);
        }
    }
    let (mut min_gap, mut argmin, i) = best;
    if min_gap > 0.0 && s_grid.len() > 1 {
        let mut lo = s_grid[i.saturating_sub(1)];
        let mut hi = s_grid[(i + 1).min(s_grid.len() - 1)];
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut a = hi - phi * (hi - lo);
        let mut b = lo + phi * (hi - lo);
        let mut fa = gap(a)?;
        let mut fb = gap(b)?;
        for _ in 0..40 {
            if fa < fb {
                hi = b;
                b = a;
                fb = fa;
                a = hi - phi * (hi - lo);
                fa = gap(a)?;
            } else {
                lo = a;
                a = b;
                fa = fb;
                b = lo + phi * (hi - lo);
                fb = gap(b)?;
            }
        }
        for (g, s) in [(fa, a), (fb, b)] {
            if g < min_gap {
                min_gap = g;
                argmin = s;
            }
        }
    }
    Ok(InvertibilityReport { min_gap, argmin, threshold, invertible: min_gap > threshold })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CircleSpin {
    Periodic,
    Antiperiodic,
}

/// Dirac operator on `S¹_u × T²` twisted by a character map `g`.
///
/// Sections satisfy `ψ_k(u + 1) = ψ_{k+m}(u)`, and the transverse operator on
/// `[0,1]` is `D_X + u·c(g⁻¹dg)`, so that it closes up continuously through
/// the gluing. Following a mode orbit `k, k+m, k+2m, …` unfolds the problem
/// into a line along which the transverse momentum moves as `k + v·m`.
#[derive(Clone, Debug, Serialize)]
pub struct MappingTorusProblem {
    pub spec: TorusSpec,
    #[serde(skip)]
    pub map: UnitaryMap,
    pub circle_points: usize,
    pub cutoff: usize,
    pub circle_spin: CircleSpin,
    /// Only eigenvalues with `|λ| ≤ eigen_bound` are computed.
    pub eigen_bound: f64,
    /// Orbits whose zero of the longitudinal momentum lies closer than this
    /// many cells to a truncation end are dropped.
    pub orbit_margin: f64,
}

impl MappingTorusProblem {
    pub fn new(spec: TorusSpec, map: UnitaryMap, circle_points: usize, cutoff: usize, eigen_bound: f64) -> Self {
        Self { spec, map, circle_points, cutoff, circle_spin: CircleSpin::Antiperiodic, eigen_bound, orbit_margin: 2.0 }
    }

    pub fn with_circle_points(&self, circle_points: usize) -> Self {
        let mut out = self.clone();
        out.circle_points = circle_points;
        out
    }
}

/// Staggered discretization along one unfolded line: the `−` chirality (in the
/// eigenbasis of `σ` along `m`) lives on sites, the `+` chirality on links, and
/// `Q = iκ(∂_v + 2π w_∥)` acts by a forward difference. The matrix is
/// tridiagonal in the interleaved order site, link, site, …
fn chain_tridiagonal(w_par: impl Fn(f64) -> f64, w_perp: f64, sites: usize, h: f64) -> (Vec<f64>, Vec<f64>) {
    let kappa = ORIENTATION;
    let mut diag = Vec::with_capacity(2 * sites - 1);
    let mut off = Vec::with_capacity(2 * sites - 2);
    for i in 0..sites {
        diag.push(2.0 * PI * kappa * w_perp);
        if i + 1 < sites {
            let mid = w_par((i as f64 + 0.5) * h);
            diag.push(-2.0 * PI * kappa * w_perp);
            off.push(-1.0 / h + PI * mid);
            off.push(1.0 / h + PI * mid);
        }
    }
    (diag, off)
}

/// Same discretization on a closed loop of `sites` sites (untwisted modes).
fn loop_matrix(w_par: f64, w_perp: f64, sites: usize, h: f64, wrap: f64) -> CMat {
    let kappa = ORIENTATION;
    let n = 2 * sites;
    let mut m = CMat::zeros(n, n);
    let ik = C64::new(0.0, kappa);
    for i in 0..sites {
        let site = 2 * i;
        let link = 2 * i + 1;
        let next = 2 * ((i + 1) % sites);
        let sign = if i + 1 == sites { wrap } else { 1.0 };
        m[(site, site)] = C64::new(2.0 * PI * kappa * w_perp, 0.0);
        m[(link, link)] = C64::new(-2.0 * PI * kappa * w_perp, 0.0);
        let a = ik * (-1.0 / h + PI * w_par);
        let b = ik * (sign * (1.0 / h + PI * w_par));
        m[(link, site)] += a;
        m[(site, link)] += a.conj();
        m[(link, next)] += b;
        m[(next, link)] += b.conj();
    }
    m
}

/// Spectrum of the mapping-torus Dirac operator within `|λ| ≤ eigen_bound`.
pub fn mapping_torus_spectrum(problem: &MappingTorusProblem) -> Result<SpectralData> {
    if problem.spec.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: problem.spec.dim() });
    }
    let chars = problem
        .map
        .diagonal_characters()
        .ok_or_else(|| Error::Unsupported("the mapping-torus builder needs a diagonal character map".into()))?;
    let modes = ModeSet::new(&problem.spec, problem.cutoff);
    let nu = problem.circle_points;
    if nu < 4 {
        return Err(Error::Truncation(format!("circle grid of {nu} points is too coarse")));
    }
    let h = 1.0 / nu as f64;
    let bound = problem.eigen_bound;
    let mut eig = Vec::new();
    let mut warnings = Vec::new();
    let mut dropped = 0usize;
    let edge = box_reach(&problem.spec, problem.cutoff);
    let mut reach = edge;
    for (m, _) in &chars {
        let mnorm = (m.iter().map(|v| (v * v) as f64).sum::<f64>()).sqrt();
        reach = reach.min(edge - mnorm);
        if mnorm == 0.0 {
            let wrap = match problem.circle_spin {
                CircleSpin::Periodic => 1.0,
                CircleSpin::Antiperiodic => -1.0,
            };
            for k in modes.momenta() {
                let kn = (k[0] * k[0] + k[1] * k[1]).sqrt();
                if 2.0 * PI * kn > bound && 2.0 / h > bound {
                    continue;
                }
                let mat = loop_matrix(k[0], k[1], nu, h, wrap);
                eig.extend(linalg::eigvalsh(&mat)?.into_iter().filter(|l| l.abs() <= bound));
            }
            continue;
        }
        let unit = [m[0] as f64 / mnorm, m[1] as f64 / mnorm];
        let perp = [-unit[1], unit[0]];
        for label in modes.labels() {
            let prev: Vec<i64> = label.iter().zip(m).map(|(a, b)| a - b).collect();
            if modes.index_of(&prev).is_some() {
                continue;
            }
            let mut cells = 0usize;
            loop {
                let next: Vec<i64> = label.iter().zip(m).map(|(a, b)| a + b * cells as i64).collect();
                if modes.index_of(&next).is_none() {
                    break;
                }
                cells += 1;
            }
            let k0 = problem.spec.momentum(label);
            let par0 = k0[0] * unit[0] + k0[1] * unit[1];
            let w_perp = k0[0] * perp[0] + k0[1] * perp[1];
            if 2.0 * PI * w_perp.abs() > bound {
                continue;
            }
            let zero = -par0 / mnorm;
            if zero < problem.orbit_margin || zero > cells as f64 - problem.orbit_margin {
                dropped += 1;
                continue;
            }
            let sites = cells * nu;
            let (diag, off) = chain_tridiagonal(|v| par0 + v * mnorm, w_perp, sites, h);
            eig.extend(linalg::tridiagonal_eigvals_in(&diag, &off, -bound, bound)?);
        }
    }
    if dropped > 0 {
        warnings.push(format!("{dropped} mode orbits truncated by the cutoff box were dropped"));
    }
    let resolved = bound.min(2.0 * PI * reach.max(0.0));
    Ok(SpectralData::new(eig, problem.cutoff, "mapping-torus", DEFAULT_KERNEL_TOL)
        .with_resolved_bound(resolved)
        .with_warnings(warnings))
}

#[derive(Clone, Debug, Serialize)]
pub struct SelfConvergence {
    pub coarse_points: usize,
    pub fine_points: usize,
    pub max_drift: f64,
    pub coarse: Vec<f64>,
    pub fine: Vec<f64>,
}

/// Compares the `count` eigenvalues of smallest magnitude at the problem's
/// circle grid and at twice that grid. Each selected eigenvalue is matched to
/// the nearest one of the other full spectrum, in both directions, so that a
/// `±λ` tie at the selection edge is not mistaken for drift.
pub fn mapping_torus_self_convergence(problem: &MappingTorusProblem, count: usize) -> Result<SelfConvergence> {
    let coarse_all = mapping_torus_spectrum(problem)?;
    let fine_problem = problem.with_circle_points(2 * problem.circle_points);
    let fine_all = mapping_torus_spectrum(&fine_problem)?;
    let sorted = |sd: &SpectralData| {
        let mut v = sd.smallest_by_magnitude(count);
        v.sort_by(f64::total_cmp);
        v
    };
    let (coarse, fine) = (sorted(&coarse_all), sorted(&fine_all));
    let nearest =
        |x: f64, sd: &SpectralData| sd.eigenvalues().iter().map(|y| (x - y).abs()).fold(f64::INFINITY, f64::min);
    let max_drift = coarse
        .iter()
        .map(|x| nearest(*x, &fine_all))
        .chain(fine.iter().map(|x| nearest(*x, &coarse_all)))
        .fold(0.0, f64::max);
    Ok(SelfConvergence {
        coarse_points: problem.circle_points,
        fine_points: fine_problem.circle_points,
        max_drift,
        coarse,
        fine,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(spin: [f64; 2], twist: [f64; 2]) -> TorusSpec {
        TorusSpec::new(spin.to_vec(), twist.to_vec()).unwrap()
    }

    #[test]
    fn dirac_block_examples() {
        let rep = CliffordRep::build(2).unwrap();
        assert_eq!(dirac_block(&rep, &[0.0, 0.0]).norm(), 0.0);
        let ev = linalg::eigvalsh(&dirac_block(&rep, &[1.0, 0.0])).unwrap();
        assert!((ev[0] + 2.0 * PI).abs() < 1e-12 && (ev[1] - 2.0 * PI).abs() < 1e-12);
        let b = dirac_block(&rep, &[0.3, -1.7]);
        assert_eq!(linalg::hermitian_residual(&b), 0.0);
    }

    #[test]
    fn character_spectrum_single_mode() {
        let h = FamilyHandle::exact(spec([0.5, 0.5], [0.0, 0.0]), UnitaryMap::character(vec![1, 0])).unwrap();
        let sd = family_spectrum_character(&h, 0.0, 0).unwrap();
        let e = PI * 2f64.sqrt();
        assert_eq!(sd.len(), 2);
        assert!((sd.eigenvalues()[0] + e).abs() < 1e-12 && (sd.eigenvalues()[1] - e).abs() < 1e-12);
    }

    #[test]
    fn invertibility_examples() {
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let h = FamilyHandle::exact(spec([0.5, 0.5], [0.0, 0.0]), UnitaryMap::character(vec![1, 0])).unwrap();
        let r = invertibility_scan(&h, &grid, 4, 1e-3).unwrap();
        assert!(r.invertible && (r.min_gap - PI).abs() < 1e-9, "{r:?}");

        let h = FamilyHandle::exact(spec([0.0, 0.0], [0.0, 0.0]), UnitaryMap::character(vec![1, 0])).unwrap();
        let r = invertibility_scan(&h, &grid, 4, 1e-3).unwrap();
        assert!(!r.invertible && r.min_gap < 1e-12 && (r.argmin == 0.0 || r.argmin == 1.0));

        let c = UnitaryMap::constant(2, CMat::identity(1, 1));
        let h = FamilyHandle::exact(spec([0.5, 0.0], [0.0, 0.2]), c).unwrap();
        let r = invertibility_scan(&h, &grid, 3, 1e-3).unwrap();
        // min |k| = |(1/2, 1/5)|
        assert!((r.min_gap - 2.0 * PI * (0.25f64 + 0.04).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn galerkin_at_zero_is_free_spectrum() {
        let g = UnitaryMap::diagonal(2, &[(vec![1, 0], C64::new(1.0, 0.0)), (vec![0, 1], C64::new(1.0, 0.0))]).unwrap();
        let u = CMat::from_row_slice(
            2,
            2,
            &[C64::new(0.6, 0.0), C64::new(0.0, 0.8), C64::new(0.0, 0.8), C64::new(0.6, 0.0)],
        );
        let h = FamilyHandle::galerkin(spec([0.5, 0.5], [0.0, 0.3]), g.conjugated(&u), 3).unwrap();
        let (m, _) = galerkin_family_matrix(&h, 0.0, 3);
        let ev = linalg::eigvalsh(&m).unwrap();
        let free = {
            let e = FamilyHandle::exact(spec([0.5, 0.5], [0.0, 0.3]), UnitaryMap::character(vec![0, 0])).unwrap();
            let mut v = family_spectrum_character(&e, 0.0, 3).unwrap().eigenvalues().to_vec();
            v.extend(v.clone());
            v.sort_by(f64::total_cmp);
            v
        };
        for (a, b) in ev.iter().zip(&free) {
            assert!((a - b).abs() < 1e-10);
        }
        let (m, _) = galerkin_family_matrix(&h, 0.7, 3);
        assert!((&m - m.adjoint()).norm() < 1e-12);
    }

    #[test]
    fn block_solve_matches_dense_solve() {
        let s = spec([0.5, 0.5], [0.0, 0.3]);
        let u = CMat::from_row_slice(
            2,
            2,
            &[C64::new(0.6, 0.0), C64::new(0.0, 0.8), C64::new(0.0, 0.8), C64::new(0.6, 0.0)],
        );
        let constant_form =
            UnitaryMap::diagonal(2, &[(vec![1, 0], C64::new(1.0, 0.0)), (vec![0, 0], C64::new(1.0, 0.0))]).unwrap();
        // diag(z₁, 1)·U·diag(z₂, 1) has a Maurer–Cartan form varying along x₂ only
        let d2 =
            UnitaryMap::diagonal(2, &[(vec![0, 1], C64::new(1.0, 0.0)), (vec![0, 0], C64::new(1.0, 0.0))]).unwrap();
        let coupled = constant_form.product(&UnitaryMap::constant(2, u.clone())).unwrap().product(&d2).unwrap();
        // g⁻¹dg of a conjugated character is constant, so every mode decouples
        let h = FamilyHandle::galerkin(s.clone(), constant_form.conjugated(&u), 3).unwrap();
        let fam = galerkin_family(&h, 3);
        assert_eq!(fam.blocks.len(), fam.modes.len());
        let mut blockwise = fam.eigenvalues(0.6).unwrap();
        blockwise.sort_by(f64::total_cmp);
        let dense = linalg::eigvalsh(&fam.at(0.6)).unwrap();
        assert!(blockwise.iter().zip(&dense).all(|(a, b)| (a - b).abs() < 1e-10));
        let fam = galerkin_family(&FamilyHandle::galerkin(s, coupled, 3).unwrap(), 3);
        assert_eq!(fam.blocks.len(), 7);
        let mut blockwise = fam.eigenvalues(0.6).unwrap();
        blockwise.sort_by(f64::total_cmp);
        let dense = linalg::eigvalsh(&fam.at(0.6)).unwrap();
        assert!(blockwise.iter().zip(&dense).all(|(a, b)| (a - b).abs() < 1e-10));
    }

    #[test]
    fn circle_untwisted_mapping_torus_is_symmetric() {
        let p = MappingTorusProblem::new(spec([0.5, 0.5], [0.0, 0.0]), UnitaryMap::character(vec![0, 0]), 16, 3, 40.0);
        let sd = mapping_torus_spectrum(&p).unwrap();
        assert!(sd.asymmetry() < 1e-9);
        assert_eq!(sd.kernel_dimension(), 0);
    }

    #[test]
    fn mapping_torus_squares_cluster_at_landau_levels() {
        // m = (1,0): per transverse row k₂, λ² ≈ 4π·j + (2πk₂)²
        let p = MappingTorusProblem::new(spec([0.5, 0.5], [0.0, 0.0]), UnitaryMap::character(vec![1, 0]), 64, 8, 12.0);
        let sd = mapping_torus_spectrum(&p).unwrap();
        let mut levels = Vec::new();
        for k2 in [0.5f64, 1.5] {
            for j in 0..12 {
                levels.push(4.0 * PI * j as f64 + (2.0 * PI * k2).powi(2));
            }
        }
        for l in sd.eigenvalues() {
            let sq = l * l;
            let near = levels.iter().map(|v| (sq - v).abs()).fold(f64::INFINITY, f64::min);
            assert!(near < 0.01 * sq, "λ² = {sq} not near a level");
        }
    }
}
