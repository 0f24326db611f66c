//! Holonomy of the determinant line along `D_s = D_X + s·c(g⁻¹dg)`, computed
//! as `τ = e^{2πi·η̄}` by independent routes and compared.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::DVector;
use serde::Serialize;

use crate::cylinder::{eta_bar_x, CylinderBvp};
use crate::dirac::{
    galerkin_family, mapping_torus_self_convergence, mapping_torus_spectrum, FamilyHandle, MappingTorusProblem,
    SelfConvergence, SpectralData, DEFAULT_KERNEL_TOL,
};
use crate::error::{Error, Result};
use crate::eta::{distance_mod_one, eta_invariant, thm34_eta, EtaOptions, EtaResult, ProductFormulaOptions};
use crate::linalg::{self, CMat, C64, ONE};

/// Largest drift allowed by the mapping-torus refinement certificate.
pub const REFINEMENT_TOL: f64 = 5e-3;

/// Eigenvalues compared by the mapping-torus spectral certificate.
const CERTIFICATE_COUNT: usize = 20;
const CERTIFICATE_BOUND: f64 = 20.0;

/// `ker D_1 ⊃ g⁻¹·ker D_0` must hold to this accuracy.
const TRANSPORT_TOL: f64 = 1e-8;

const UNITARY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Route {
    #[serde(rename = "thm34")]
    ProductFormula,
    #[serde(rename = "cylinder")]
    Cylinder,
    #[serde(rename = "mapping-torus")]
    MappingTorus,
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Route::ProductFormula => "thm34",
            Route::Cylinder => "cylinder",
            Route::MappingTorus => "mapping-torus",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RouteValue {
    pub route: Route,
    pub eta_bar: f64,
    pub error_estimate: f64,
    #[serde(serialize_with = "serialize_complex")]
    pub tau: C64,
    /// `arg τ ∈ (−π, π]`.
    pub phase: f64,
}

fn serialize_complex<S: serde::Serializer>(z: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeStruct;
    let mut st = s.serialize_struct("complex", 2)?;
    st.serialize_field("re", &z.re)?;
    st.serialize_field("im", &z.im)?;
    st.end()
}

/// `τ = e^{2πi·η̄}`; only `η̄ mod 1` survives.
pub fn tau_from_eta(route: Route, eta: &EtaResult) -> RouteValue {
    let eta_bar = eta.reduced_mod_one();
    let tau = C64::from_polar(1.0, 2.0 * PI * eta_bar);
    RouteValue { route, eta_bar, error_estimate: eta.error_estimate, tau, phase: tau.arg() }
}

/// Where `η̄(X, E, g)` comes from.
pub enum EtaSource<'a> {
    /// Product formula; needs an invertible family.
    ProductFormula { handle: &'a FamilyHandle, options: &'a ProductFormulaOptions },
    /// Cylinder invariant with the spectral flow subtracted.
    Cylinder(&'a CylinderBvp),
}

pub fn tau_via_eta(source: EtaSource<'_>) -> Result<RouteValue> {
    match source {
        EtaSource::ProductFormula { handle, options } => {
            Ok(tau_from_eta(Route::ProductFormula, &thm34_eta(handle, options)?))
        }
        EtaSource::Cylinder(bvp) => Ok(tau_from_eta(Route::Cylinder, &eta_bar_x(bvp)?.invariant)),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MappingTorusRoute {
    pub value: RouteValue,
    pub eta: EtaResult,
    /// Low spectrum at the problem's circle grid against twice that grid.
    pub spectral: SelfConvergence,
    /// Phase change of `τ` from half the circle grid to the problem's grid.
    pub phase_drift: f64,
    #[serde(skip)]
    pub spectrum: SpectralData,
}

/// `τ` from the eta invariant of the mapping-torus Dirac operator.
///
/// The refinement certificate is checked before the answer is returned: the
/// low spectrum must move by less than [`REFINEMENT_TOL`] when the circle grid
/// is doubled, and so must the phase when it is halved.
pub fn tau_via_mapping_torus(problem: &MappingTorusProblem, options: &EtaOptions) -> Result<MappingTorusRoute> {
    if problem.circle_points < 8 || !problem.circle_points.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "circle grid must be even and at least 8, got {}",
            problem.circle_points
        )));
    }
    let mut low = problem.clone();
    low.eigen_bound = problem.eigen_bound.min(CERTIFICATE_BOUND);
    let spectral = mapping_torus_self_convergence(&low, CERTIFICATE_COUNT)?;
    if !(spectral.max_drift < REFINEMENT_TOL) {
        return Err(Error::Truncation(format!(
            "mapping-torus spectrum drifts by {:.3e} from {} to {} circle points (limit {REFINEMENT_TOL:.0e})",
            spectral.max_drift, spectral.coarse_points, spectral.fine_points
        )));
    }
    let spectrum = mapping_torus_spectrum(problem)?;
    let eta = eta_invariant(&spectrum, options)?;
    let coarse =
        eta_invariant(&mapping_torus_spectrum(&problem.with_circle_points(problem.circle_points / 2))?, options)?;
    let phase_drift = 2.0 * PI * distance_mod_one(eta.reduced_eta, coarse.reduced_eta);
    if !(phase_drift < REFINEMENT_TOL) {
        return Err(Error::Truncation(format!(
            "mapping-torus phase drifts by {phase_drift:.3e} under circle refinement (limit {REFINEMENT_TOL:.0e})"
        )));
    }
    Ok(MappingTorusRoute { value: tau_from_eta(Route::MappingTorus, &eta), eta, spectral, phase_drift, spectrum })
}

/// Kernels of the endpoint operators `D_0` and `D_1 = g⁻¹D_0g` in explicit
/// orthonormal bases (columns), the transport `G` given by multiplication by
/// `g⁻¹`, and the isometry `T: K_0⁺ → K_0⁻` of the boundary condition.
#[derive(Clone, Debug)]
pub struct DetLineData {
    pub kernel0_plus: CMat,
    pub kernel0_minus: CMat,
    pub kernel1_plus: CMat,
    pub kernel1_minus: CMat,
    pub transport: CMat,
    pub isometry: CMat,
    /// `max ‖(I − K_1K_1†)·G·K_0‖` over both gradings.
    pub transport_residual: f64,
}

impl DetLineData {
    pub fn new(
        kernel0_plus: CMat,
        kernel0_minus: CMat,
        kernel1_plus: CMat,
        kernel1_minus: CMat,
        transport: CMat,
        isometry: CMat,
    ) -> Result<Self> {
        let dims = [kernel0_plus.ncols(), kernel0_minus.ncols(), kernel1_plus.ncols(), kernel1_minus.ncols()];
        if dims.iter().any(|d| *d != dims[0]) {
            return Err(Error::UnequalGrading { plus: dims[0], minus: dims[1].max(dims[2]).max(dims[3]) });
        }
        if isometry.nrows() != dims[0] || isometry.ncols() != dims[0] {
            return Err(Error::DimensionMismatch { expected: dims[0], got: isometry.nrows() });
        }
        let leak = |k1: &CMat, k0: &CMat| {
            let moved = &transport * k0;
            (&moved - k1 * (k1.adjoint() * &moved)).norm()
        };
        let transport_residual = leak(&kernel1_plus, &kernel0_plus).max(leak(&kernel1_minus, &kernel0_minus));
        if transport_residual > TRANSPORT_TOL {
            return Err(Error::InvalidParameter(format!(
                "g⁻¹ does not map ker D_0 into ker D_1: residual {transport_residual:.3e}"
            )));
        }
        Ok(Self { kernel0_plus, kernel0_minus, kernel1_plus, kernel1_minus, transport, isometry, transport_residual })
    }

    /// Data of a cylinder problem on its Galerkin box. `ker D_0` is the free
    /// kernel graded by `Γ`; `ker D_1` is computed from the Galerkin matrix at
    /// `s = 1` and its basis is the orthonormalized image `g⁻¹K_0`.
    pub fn from_cylinder(bvp: &CylinderBvp) -> Result<Self> {
        let grading = bvp.grading()?;
        let n = grading.plus.ncols();
        let isometry = bvp.lagrangian.as_ref().map(|l| l.isometry().clone()).unwrap_or_else(|| CMat::identity(n, n));
        let handle = FamilyHandle::galerkin(bvp.spec.clone(), bvp.map.clone(), bvp.cutoff)?;
        let family = galerkin_family(&handle, bvp.cutoff);
        let (vals, vecs) = linalg::eigh(&family.at(1.0))?;
        let cols: Vec<DVector<C64>> = vals
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() < DEFAULT_KERNEL_TOL)
            .map(|(i, _)| vecs.column(i).into_owned())
            .collect();
        let size = family.free.nrows();
        let kernel1 = if cols.is_empty() { CMat::zeros(size, 0) } else { CMat::from_columns(&cols) };
        let projector = &kernel1 * kernel1.adjoint();
        let transport = bvp.map.adjoint().multiplication_matrix(&family.modes, 2);
        let image = |k0: &CMat| -> Result<CMat> { orthonormalize(&(&projector * (&transport * k0))) };
        let kernel1_plus = image(&grading.plus)?;
        let kernel1_minus = image(&grading.minus)?;
        let data = Self::new(grading.plus, grading.minus, kernel1_plus, kernel1_minus, transport, isometry)?;
        if kernel1.ncols() != 2 * n {
            return Err(Error::InvalidParameter(format!(
                "dim ker D_1 = {} but dim ker D_0 = {}",
                kernel1.ncols(),
                2 * n
            )));
        }
        Ok(data)
    }

    pub fn dimension(&self) -> usize {
        self.kernel0_plus.ncols()
    }
}

/// Polar factor `Q = A(A†A)^{-1/2}`.
fn orthonormalize(a: &CMat) -> Result<CMat> {
    if a.ncols() == 0 {
        return Ok(a.clone());
    }
    let (vals, vecs) = linalg::eigh(&(a.adjoint() * a))?;
    if vals.iter().any(|v| *v < 1e-12) {
        return Err(Error::InvalidParameter("transported kernel basis is degenerate".into()));
    }
    let mut inv_sqrt = CMat::zeros(vals.len(), vals.len());
    for (i, v) in vals.iter().enumerate() {
        inv_sqrt[(i, i)] = C64::new(v.powf(-0.5), 0.0);
    }
    Ok(a * (&vecs * inv_sqrt * vecs.adjoint()))
}

/// `(det T)⁻¹·det(g⁻¹Tg)`, with `g⁻¹Tg: K_1⁺ → K_1⁻` written in the bases of
/// the data. Equal to one for empty kernels.
pub fn det_factor(data: &DetLineData) -> Result<C64> {
    let n = data.dimension();
    if n == 0 {
        return Ok(ONE);
    }
    let t = &data.isometry;
    let residual = (t.adjoint() * t - CMat::identity(n, n)).norm();
    if residual > UNITARY_TOL {
        return Err(Error::NotUnitary { residual, tolerance: UNITARY_TOL });
    }
    let g = &data.transport;
    let into_minus = data.kernel1_minus.adjoint() * g * &data.kernel0_minus;
    let from_plus = data.kernel0_plus.adjoint() * g.adjoint() * &data.kernel1_plus;
    let conjugated = into_minus * t * from_plus;
    Ok(conjugated.determinant() / t.determinant())
}

#[derive(Clone, Debug, Serialize)]
pub struct PhaseDiscrepancy {
    pub first: Route,
    pub second: Route,
    /// Distance of the two phases on the circle.
    pub discrepancy: f64,
    /// Tolerance plus the phase budgets `2π·error` of both routes.
    pub allowed: f64,
    pub agreed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct HolonomyResult {
    #[serde(serialize_with = "serialize_complex")]
    pub tau: C64,
    pub modulus_residual: f64,
    #[serde(serialize_with = "serialize_complex")]
    pub det_factor: C64,
    pub routes: Vec<RouteValue>,
    pub discrepancies: Vec<PhaseDiscrepancy>,
    pub tolerance: f64,
    pub agreed: bool,
}

impl HolonomyResult {
    pub fn ensure_agreement(&self) -> Result<()> {
        if self.agreed {
            return Ok(());
        }
        let lines: Vec<String> = self
            .discrepancies
            .iter()
            .filter(|d| !d.agreed)
            .map(|d| {
                let budget =
                    |r: Route| self.routes.iter().find(|v| v.route == r).map(|v| v.error_estimate).unwrap_or(f64::NAN);
                format!(
                    "{} vs {}: phase gap {:.3e} > allowed {:.3e} (errors {:.1e}, {:.1e})",
                    d.first,
                    d.second,
                    d.discrepancy,
                    d.allowed,
                    budget(d.first),
                    budget(d.second)
                )
            })
            .collect();
        Err(Error::RouteDisagreement(lines.join("; ")))
    }
}

/// Pairwise phase comparison. `τ` is the first route's value times the
/// determinant factor.
pub fn compare_holonomy(routes: &[RouteValue], det_factor: C64, tolerance: f64) -> Result<HolonomyResult> {
    if routes.len() < 2 {
        return Err(Error::InvalidParameter(format!("need at least two routes, got {}", routes.len())));
    }
    let mut discrepancies = Vec::new();
    for (i, a) in routes.iter().enumerate() {
        for b in &routes[i + 1..] {
            let discrepancy = 2.0 * PI * distance_mod_one(a.eta_bar, b.eta_bar);
            let allowed = tolerance + 2.0 * PI * (a.error_estimate + b.error_estimate);
            discrepancies.push(PhaseDiscrepancy {
                first: a.route,
                second: b.route,
                discrepancy,
                allowed,
                agreed: discrepancy <= allowed,
            });
        }
    }
    let tau = routes[0].tau * det_factor;
    let modulus_residual = (tau.norm() - 1.0).abs();
    let agreed = discrepancies.iter().all(|d| d.agreed) && modulus_residual < 1e-6;
    Ok(HolonomyResult { tau, modulus_residual, det_factor, routes: routes.to_vec(), discrepancies, tolerance, agreed })
}

/// `τ = e^{2πi·η̄}·det_factor` of a cylinder problem under its own isometry.
pub fn cylinder_tau(bvp: &CylinderBvp) -> Result<(RouteValue, C64)> {
    let value = tau_via_eta(EtaSource::Cylinder(bvp))?;
    let factor = if bvp.grading()?.dimension() == 0 { ONE } else { det_factor(&DetLineData::from_cylinder(bvp)?)? };
    Ok((value, factor))
}

#[derive(Clone, Debug, Serialize)]
pub struct IsometryInvariance {
    #[serde(serialize_with = "serialize_complex")]
    pub first: C64,
    #[serde(serialize_with = "serialize_complex")]
    pub second: C64,
    pub phase_difference: f64,
    pub error_budget: f64,
}

/// Cylinder `τ` under two boundary isometries.
pub fn isometry_invariance(first: &CylinderBvp, second: &CylinderBvp) -> Result<IsometryInvariance> {
    let (a, fa) = cylinder_tau(first)?;
    let (b, fb) = cylinder_tau(second)?;
    let (ta, tb) = (a.tau * fa, b.tau * fb);
    let phase_difference = (ta * tb.conj()).arg().abs();
    Ok(IsometryInvariance {
        first: ta,
        second: tb,
        phase_difference,
        error_budget: 2.0 * PI * (a.error_estimate + b.error_estimate),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cylinder::{CutoffProfile, LagrangianSpec};
    use crate::dirac::EvalMethod;
    use crate::eta::Regularization;
    use crate::linalg::ZERO;
    use crate::torus::{TorusSpec, UnitaryMap};

    fn unit(size: usize, i: usize) -> DVector<C64> {
        let mut v = DVector::from_element(size, ZERO);
        v[i] = ONE;
        v
    }

    fn spec(spin: [f64; 2], twist: [f64; 2]) -> TorusSpec {
        TorusSpec::new(spin.to_vec(), twist.to_vec()).unwrap()
    }

    fn fixed(reduced: f64, error: f64) -> EtaResult {
        let reg = Regularization {
            window: vec![1.0],
            order: 0,
            cutoff: 0,
            resolved_bound: 0.0,
            smoothed: vec![],
            note: String::new(),
        };
        EtaResult::from_reduced(reduced, error, reg)
    }

    #[test]
    fn tau_is_unimodular_and_blind_to_integers() {
        let a = tau_from_eta(Route::Cylinder, &fixed(0.3, 0.0));
        let b = tau_from_eta(Route::Cylinder, &fixed(-1.7, 0.0));
        assert!((a.tau.norm() - 1.0).abs() < 1e-15);
        assert!((a.tau - b.tau).norm() < 1e-12);
        assert!((a.phase - 0.6 * PI).abs() < 1e-12);
    }

    #[test]
    fn constant_map_gives_one() {
        let h = FamilyHandle::new(
            spec([0.5, 0.5], [0.0, 0.3]),
            UnitaryMap::constant(2, CMat::identity(1, 1)),
            EvalMethod::ExactCharacter,
        )
        .unwrap();
        let v = tau_via_eta(EtaSource::ProductFormula { handle: &h, options: &ProductFormulaOptions::new(8) }).unwrap();
        assert!((v.tau - ONE).norm() < 1e-9, "{v:?}");
    }

    #[test]
    fn det_factor_examples() {
        // empty kernels
        let e = CMat::zeros(4, 0);
        let d = DetLineData::new(e.clone(), e.clone(), e.clone(), e, CMat::identity(4, 4), CMat::zeros(0, 0)).unwrap();
        assert_eq!(det_factor(&d).unwrap(), ONE);

        // identity transport: det T cancels
        let col = |i: usize| CMat::from_columns(&[unit(4, i)]);
        let t = CMat::from_element(1, 1, C64::from_polar(1.0, 0.8));
        let d = DetLineData::new(col(0), col(1), col(0), col(1), CMat::identity(4, 4), t.clone()).unwrap();
        assert!((det_factor(&d).unwrap() - ONE).norm() < 1e-14);

        // g⁻¹ multiplies K⁺ by e^{iα} and K⁻ by e^{iβ}, moving both to new slots:
        // det = e^{iβ}·t·e^{−iα}, divided by t
        let (alpha, beta) = (0.4, 1.3);
        let mut g = CMat::zeros(4, 4);
        g[(2, 0)] = C64::from_polar(1.0, alpha);
        g[(3, 1)] = C64::from_polar(1.0, beta);
        g[(0, 2)] = ONE;
        g[(1, 3)] = ONE;
        let d = DetLineData::new(col(0), col(1), col(2), col(3), g.clone(), t.clone()).unwrap();
        let f = det_factor(&d).unwrap();
        assert!((f - C64::from_polar(1.0, beta - alpha)).norm() < 1e-14, "{f}");

        // same phase on both halves: trivial
        g[(3, 1)] = C64::from_polar(1.0, alpha);
        let d = DetLineData::new(col(0), col(1), col(2), col(3), g.clone(), t).unwrap();
        assert!((det_factor(&d).unwrap() - ONE).norm() < 1e-14);

        // non-unitary T is refused
        let d =
            DetLineData::new(col(0), col(1), col(2), col(3), g, CMat::from_element(1, 1, C64::new(2.0, 0.0))).unwrap();
        assert!(matches!(det_factor(&d), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn transport_must_preserve_kernels() {
        let col = |i: usize| CMat::from_columns(&[unit(3, i)]);
        let r = DetLineData::new(col(0), col(1), col(2), col(1), CMat::identity(3, 3), CMat::identity(1, 1));
        assert!(r.is_err());
    }

    #[test]
    fn cylinder_kernel_data_is_transported() {
        let bvp = CylinderBvp::new(
            1.0,
            spec([0.0, 0.0], [0.0, 0.0]),
            UnitaryMap::character(vec![1, 0]),
            2,
            CutoffProfile::default(),
        )
        .unwrap()
        .with_lagrangian(Some(LagrangianSpec::phase(1, 1.1)));
        let d = DetLineData::from_cylinder(&bvp).unwrap();
        assert_eq!(d.dimension(), 1);
        assert!(d.transport_residual < 1e-10);
        assert!((det_factor(&d).unwrap() - ONE).norm() < 1e-10);
    }

    #[test]
    fn comparison_flags_disagreement() {
        let a = tau_from_eta(Route::ProductFormula, &fixed(0.3, 1e-4));
        let b = tau_from_eta(Route::Cylinder, &fixed(1.3005, 1e-4));
        let c = tau_from_eta(Route::MappingTorus, &fixed(0.35, 1e-4));
        let ok = compare_holonomy(&[a.clone(), b.clone()], ONE, 1e-2).unwrap();
        assert!(ok.agreed && ok.modulus_residual < 1e-12);
        ok.ensure_agreement().unwrap();
        let bad = compare_holonomy(&[a.clone(), b, c], ONE, 1e-2).unwrap();
        assert!(!bad.agreed);
        assert_eq!(bad.discrepancies.iter().filter(|d| !d.agreed).count(), 2);
        assert!(matches!(bad.ensure_agreement(), Err(Error::RouteDisagreement(_))));
        assert!(compare_holonomy(&[a], ONE, 1e-2).is_err());
    }
}
