//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line to
//! the real stdout so that the verdicts are visible without `--nocapture`.

use std::f64::consts::PI;
use std::io::Write;

use etaflow_core::clifford::CliffordRep;
use etaflow_core::cylinder::{
    conjecture_experiment, deformation_spectral_flow, eta_bar_x, CutoffProfile, CylinderBvp, LagrangianSpec,
    ModeSelection,
};
use etaflow_core::dirac::{
    box_reach, family_spectrum_character, galerkin_family_matrix, galerkin_spectrum, invertibility_scan, FamilyHandle,
    MappingTorusProblem, SpectralData,
};
use etaflow_core::eta::{
    distance_mod_one, eta_invariant, heat_floor_for, spectral_flow, thm34_eta, thm34_integrand, uniform_grid,
    EtaOptions, EtaResult, FlowControl, ProductFormulaOptions, SyntheticFamily,
};
use etaflow_core::holonomy::{
    compare_holonomy, cylinder_tau, isometry_invariance, tau_via_eta, tau_via_mapping_torus, EtaSource, REFINEMENT_TOL,
};
use etaflow_core::linalg::{self, erfc, CMat, C64};
use etaflow_core::toeplitz::{verify_toeplitz, ToeplitzProblem};
use etaflow_core::torus::{TorusSpec, UnitaryMap};

type Outcome = Result<String, String>;

fn verdict(id: usize, title: &str, outcome: Outcome) {
    let line = match &outcome {
        Ok(detail) => format!("PASS [{id:>2}] {title}: {detail}\n"),
        Err(detail) => format!("FAIL [{id:>2}] {title}: {detail}\n"),
    };
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    if let Err(detail) = outcome {
        panic!("{title}: {detail}");
    }
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn reference_spec(twist: f64) -> TorusSpec {
    TorusSpec::new(vec![0.5, 0.5], vec![0.0, twist]).unwrap()
}

fn reference_map() -> UnitaryMap {
    UnitaryMap::character(vec![1, 0])
}

fn reference_cylinder(length: f64, twist: f64, epsilon: f64) -> CylinderBvp {
    CylinderBvp::new(length, reference_spec(twist), reference_map(), 12, CutoffProfile::new(epsilon).unwrap()).unwrap()
}

fn product_formula(twist: f64) -> EtaResult {
    let handle = FamilyHandle::exact(reference_spec(twist), reference_map()).unwrap();
    thm34_eta(&handle, &ProductFormulaOptions::new(16)).unwrap()
}

fn mapping_torus(twist: f64) -> MappingTorusProblem {
    let bound = 1.05 * EtaOptions::collar().required_bound();
    MappingTorusProblem::new(reference_spec(twist), reference_map(), 64, 13, bound)
}

/// `(h + η)/2` must be stored exactly.
fn reduced_identity(r: &EtaResult) -> bool {
    r.reduced_eta == (r.kernel_dimension as f64 + r.eta) / 2.0
}

/// Independent value of the invariant for `g = e^{2πix₁}` on the torus whose
/// second momentum runs over `ℤ + c`.
///
/// With `v = (k₁ + s, k₂)`, summing `k₁` over a unit-spaced lattice and
/// integrating `s` over `[0, 1]` tiles the real line, so the `s`-integrated
/// density `−(1/2π)·Σ v₂/|v|²` regulated by `e^{−δ|v|²}` becomes the row sum
/// `−(1/2π)·Σ_{k₂} π·sign(k₂)·erfc(√δ|k₂|)`. Two values of `δ` remove the
/// leading `√δ` correction.
fn lattice_sum_oracle(c: f64) -> f64 {
    let row_sum = |delta: f64| {
        let r = delta.sqrt();
        let reach = (12.0 / r) as i64 + 2;
        let mut acc = 0.0;
        for n in -reach..=reach {
            let k = n as f64 + c;
            if k != 0.0 {
                acc += k.signum() * erfc(r * k.abs());
            }
        }
        -0.5 * acc
    };
    let (a, b) = (row_sum(1e-8), row_sum(4e-8));
    2.0 * a - b
}

#[test]
fn product_formula_matches_cylinder_invariant() {
    let outcome = {
        let oracle = lattice_sum_oracle(0.8);
        let pf = product_formula(0.3);
        let cyl = eta_bar_x(&reference_cylinder(1.0, 0.3, 0.1)).unwrap().invariant;
        let routes = distance_mod_one(pf.reduced_eta, cyl.reduced_eta);
        let to_oracle = distance_mod_one(pf.reduced_eta, oracle);
        check(
            routes < 5e-3 && to_oracle < 1e-4 && reduced_identity(&pf) && reduced_identity(&cyl),
            format!(
                "product formula {:.6} ± {:.1e}, cylinder {:.6} ± {:.1e}, lattice oracle {oracle:.6}; route gap {routes:.2e} (< 5e-3), oracle gap {to_oracle:.2e} (< 1e-4)",
                pf.reduced_eta, pf.error_estimate, cyl.reduced_eta, cyl.error_estimate
            ),
        )
    };
    verdict(1, "product formula vs cylinder invariant", outcome);
}

#[test]
fn untwisted_reference_is_zero() {
    let outcome = {
        let pf = product_formula(0.0);
        let cyl = eta_bar_x(&reference_cylinder(1.0, 0.0, 0.1)).unwrap().invariant;
        let handle = FamilyHandle::exact(reference_spec(0.0), reference_map()).unwrap();
        // The label box |n| ≤ Λ holds k₂ = Λ + ½ without its partner −Λ − ½;
        // the evaluator never samples heat times below the floor δ, where
        // that edge row is suppressed by e^{−36}.
        let floor = heat_floor_for(16, 1);
        let mut pointwise: f64 = 0.0;
        for i in 0..=10 {
            for t in [floor, 2.0 * floor, 0.05, 0.5, 2.0] {
                let v = thm34_integrand(&handle, i as f64 / 10.0, t, 16).unwrap();
                pointwise = pointwise.max(v.norm());
            }
        }
        let a = distance_mod_one(pf.reduced_eta, 0.0);
        let b = distance_mod_one(cyl.reduced_eta, 0.0);
        check(
            a < 2e-3 && b < 2e-3 && pointwise < 1e-8,
            format!(
                "product formula {a:.2e}, cylinder {b:.2e} from 0 (< 2e-3); integrand max {pointwise:.2e} for t ≥ {floor:.2e} (< 1e-8)"
            ),
        )
    };
    verdict(2, "symmetry-forced zero", outcome);
}

#[test]
fn cylinder_invariant_is_independent_of_length() {
    let outcome = {
        let values: Vec<f64> = [1.0, 2.0, 4.0]
            .iter()
            .map(|a| eta_bar_x(&reference_cylinder(*a, 0.3, 0.1)).unwrap().invariant.reduced_eta)
            .collect();
        let spread =
            values.iter().flat_map(|x| values.iter().map(move |y| distance_mod_one(*x, *y))).fold(0.0, f64::max);
        check(spread < 2e-3, format!("a = 1, 2, 4 give {values:.6?}; spread {spread:.2e} (< 2e-3)"))
    };
    verdict(3, "independence of the collar length", outcome);
}

#[test]
fn cylinder_invariant_is_independent_of_cutoff_profile() {
    let outcome = {
        let a = eta_bar_x(&reference_cylinder(1.0, 0.3, 0.1)).unwrap().invariant.reduced_eta;
        let b = eta_bar_x(&reference_cylinder(1.0, 0.3, 0.2)).unwrap().invariant.reduced_eta;
        let gap = distance_mod_one(a, b);
        check(gap < 2e-3, format!("profile width 0.1 gives {a:.6}, 0.2 gives {b:.6}; gap {gap:.2e} (< 2e-3)"))
    };
    verdict(4, "independence of the cutoff profile", outcome);
}

#[test]
fn mapping_torus_matches_eta_route() {
    let outcome = (|| {
        let mut lines = Vec::new();
        let mut ok = true;
        for twist in [0.0, 0.3] {
            let mt = match tau_via_mapping_torus(&mapping_torus(twist), &EtaOptions::collar()) {
                Ok(r) => r,
                Err(e) => return Err(format!("θ₂ = {twist}: certificate or solve failed: {e}")),
            };
            let handle = FamilyHandle::exact(reference_spec(twist), reference_map()).unwrap();
            let pf =
                tau_via_eta(EtaSource::ProductFormula { handle: &handle, options: &ProductFormulaOptions::new(16) })
                    .unwrap();
            let gap = (mt.value.tau * pf.tau.conj()).arg().abs();
            ok &= gap < 1e-2
                && mt.spectral.max_drift < REFINEMENT_TOL
                && mt.phase_drift < REFINEMENT_TOL
                && reduced_identity(&mt.eta);
            lines.push(format!(
                "θ₂ = {twist}: spectral drift {:.2e} ({}→{} points), phase drift {:.2e}, phase gap {gap:.2e} (< 1e-2)",
                mt.spectral.max_drift, mt.spectral.coarse_points, mt.spectral.fine_points, mt.phase_drift
            ));
        }
        check(ok, lines.join("; "))
    })();
    verdict(5, "mapping torus vs eta route modulo integers", outcome);
}

#[test]
fn three_routes_agree_and_tau_ignores_isometry() {
    let outcome = (|| {
        let twist = 0.3;
        let handle = FamilyHandle::exact(reference_spec(twist), reference_map()).unwrap();
        let pf = tau_via_eta(EtaSource::ProductFormula { handle: &handle, options: &ProductFormulaOptions::new(16) })
            .map_err(|e| e.to_string())?;
        let (cyl, factor) = cylinder_tau(&reference_cylinder(1.0, twist, 0.1)).map_err(|e| e.to_string())?;
        let mt = tau_via_mapping_torus(&mapping_torus(twist), &EtaOptions::collar()).map_err(|e| e.to_string())?;
        let result = compare_holonomy(&[pf, cyl, mt.value], factor, 1e-2).map_err(|e| e.to_string())?;
        let worst = result.discrepancies.iter().map(|d| d.discrepancy).fold(0.0, f64::max);

        let kernel_case = |phi: f64| {
            CylinderBvp::new(
                2.0,
                TorusSpec::new(vec![0.0, 0.0], vec![0.0, 0.0]).unwrap(),
                reference_map(),
                12,
                CutoffProfile::default(),
            )
            .unwrap()
            .with_lagrangian(Some(LagrangianSpec::phase(1, phi)))
        };
        let inv = isometry_invariance(&kernel_case(0.0), &kernel_case(1.1)).map_err(|e| e.to_string())?;
        check(
            result.agreed && result.modulus_residual < 1e-6 && worst < 1e-2 && inv.phase_difference < 1e-2,
            format!(
                "|τ| − 1 = {:.1e}, worst pairwise phase gap {worst:.2e} (< 1e-2), det factor {:.6}; T = 1 vs T = e^{{1.1i}} phase gap {:.2e} (< 1e-2)",
                result.modulus_residual, result.det_factor, inv.phase_difference
            ),
        )
    })();
    verdict(6, "holonomy from three routes", outcome);
}

#[test]
fn toeplitz_index_of_characters() {
    let outcome = (|| {
        let mut worst_pairing: f64 = 0.0;
        for k in -3i64..=3 {
            let problem = ToeplitzProblem::new(0.0, UnitaryMap::character(vec![k]), 64).map_err(|e| e.to_string())?;
            let r = verify_toeplitz(&problem).map_err(|e| format!("k = {k}: {e}"))?;
            // shifting up by k > 0 leaves a k-dimensional cokernel, down a kernel
            let (kernel, cokernel) = if k >= 0 { (0, k as usize) } else { (k.unsigned_abs() as usize, 0) };
            if r.spectral_index != -k || r.stability_delta != 0 || r.kernel != kernel || r.cokernel != cokernel {
                return Err(format!("k = {k}: {r:?}"));
            }
            worst_pairing = worst_pairing.max((r.pairing_value - (-k) as f64).abs());
        }
        check(
            worst_pairing <= 1e-6,
            format!(
                "index = −k for k = −3..3 at Λ = 64, stable at Λ + 4; worst pairing error {worst_pairing:.1e} (≤ 1e-6)"
            ),
        )
    })();
    verdict(7, "Toeplitz index of characters", outcome);
}

/// Net change in the number of negative eigenvalues between consecutive
/// samples of a fine uniform grid.
fn dense_sampling_flow(family: &SyntheticFamily, samples: usize) -> i64 {
    let negative = |s: f64| linalg::eigvalsh(&family.at(s)).unwrap().iter().filter(|l| **l < 0.0).count() as i64;
    let mut prev = negative(0.0);
    let mut total = 0;
    for i in 1..=samples {
        let next = negative(i as f64 / samples as f64);
        total += prev - next;
        prev = next;
    }
    total
}

#[test]
fn spectral_flow_counts() {
    let outcome = (|| {
        let bvp = reference_cylinder(1.0, 0.3, 0.1);
        let cyl = deformation_spectral_flow(&bvp, &uniform_grid(20)).map_err(|e| e.to_string())?;
        let handle = FamilyHandle::exact(reference_spec(0.3), reference_map()).unwrap();
        let scan = invertibility_scan(&handle, &uniform_grid(200), 16, 1e-3).map_err(|e| e.to_string())?;
        if cyl.value != 0 || !scan.invertible {
            return Err(format!("reference family: cylinder flow {}, torus gap {:.3e}", cyl.value, scan.min_gap));
        }
        let mut mismatches = Vec::new();
        for seed in 0..50u64 {
            let size = 2 + (seed % 5) as usize;
            let crossings = 1 + (seed % 3) as usize;
            let fam = SyntheticFamily::random(1000 + seed, size, crossings);
            let tracked =
                spectral_flow(&fam, &uniform_grid(12), &FlowControl::default()).map_err(|e| e.to_string())?.value;
            let oracle = dense_sampling_flow(&fam, 4000);
            if tracked != oracle || oracle != fam.expected_flow() {
                mismatches.push((seed, tracked, oracle, fam.expected_flow()));
            }
        }
        check(
            mismatches.is_empty(),
            format!(
                "reference cylinder flow 0, torus family gap {:.3}; 50 synthetic families, mismatches {mismatches:?}",
                scan.min_gap
            ),
        )
    })();
    verdict(8, "spectral flow", outcome);
}

#[test]
fn shifted_lattice_regularization() {
    let outcome = (|| {
        let mut worst: f64 = 0.0;
        for theta in [0.1, 0.3, 0.7] {
            let eig: Vec<f64> = (-2000i64..=2000).map(|n| 2.0 * PI * (n as f64 + theta)).collect();
            let r = eta_invariant(&SpectralData::new(eig, 2000, "lattice", 1e-9), &EtaOptions::lattice())
                .map_err(|e| e.to_string())?;
            if !reduced_identity(&r) {
                return Err(format!("θ = {theta}: reduced identity broken"));
            }
            worst = worst.max((r.eta - (1.0 - 2.0 * theta)).abs());
        }
        let sym: Vec<f64> = (1..=500).flat_map(|n| [2.0 * PI * n as f64, -2.0 * PI * n as f64]).collect();
        let mut with_zero = sym.clone();
        with_zero.push(0.0);
        let a = eta_invariant(&SpectralData::new(sym, 500, "symmetric", 1e-9), &EtaOptions::lattice()).unwrap();
        let b = eta_invariant(&SpectralData::new(with_zero, 500, "symmetric", 1e-9), &EtaOptions::lattice()).unwrap();
        check(
            worst < 1e-3 && a.eta == 0.0 && b.eta == 0.0 && b.reduced_eta == 0.5 && reduced_identity(&a),
            format!(
                "worst |η − (1 − 2θ)| = {worst:.2e} (< 1e-3); symmetric η = {} and {} with one zero mode",
                a.eta, b.eta
            ),
        )
    })();
    verdict(9, "regularization engine", outcome);
}

#[test]
fn structural_invariants() {
    let outcome = (|| {
        let clifford: f64 = (1..=3).map(|d| CliffordRep::build(d).unwrap().relation_residual()).fold(0.0, f64::max);

        let small = CylinderBvp::new(1.0, reference_spec(0.3), reference_map(), 3, CutoffProfile::default()).unwrap();
        let dense = small.full_operator(0.6, 18).map_err(|e| e.to_string())?.hermitian_residual;
        let per_mode = reference_cylinder(1.0, 0.3, 0.1)
            .per_mode_spectrum(0.4, 40, ModeSelection::Resolved)
            .map_err(|e| e.to_string())?
            .hermitian_residual;
        let u = CMat::from_row_slice(
            2,
            2,
            &[C64::new(0.6, 0.0), C64::new(0.0, 0.8), C64::new(0.0, 0.8), C64::new(0.6, 0.0)],
        );
        let g = UnitaryMap::diagonal(2, &[(vec![1, 0], C64::new(1.0, 0.0)), (vec![0, -1], C64::new(1.0, 0.0))])
            .unwrap()
            .conjugated(&u);
        let general = FamilyHandle::galerkin(reference_spec(0.3), g, 3).unwrap();
        let (m, _) = galerkin_family_matrix(&general, 0.7, 3);
        let galerkin_residual = linalg::hermitian_residual(&m);
        let hermitian = dense.max(per_mode).max(galerkin_residual);

        let mut asymmetry: f64 = 0.0;
        let mut mismatch: f64 = 0.0;
        for (twist, m) in [(0.3, vec![1, 0]), (0.0, vec![1, 1]), (0.7, vec![-2, 1])] {
            let spec = reference_spec(twist);
            let exact = FamilyHandle::exact(spec.clone(), UnitaryMap::character(m.clone())).unwrap();
            let gal = FamilyHandle::galerkin(spec.clone(), UnitaryMap::character(m), 6).unwrap();
            for s in [0.0, 0.35, 1.0] {
                let a = family_spectrum_character(&exact, s, 6).unwrap();
                let b = galerkin_spectrum(&gal, s, 6).unwrap();
                asymmetry = asymmetry.max(a.asymmetry()).max(b.asymmetry());
                let reach = 2.0 * PI * (box_reach(&spec, 6) - 3.0);
                for l in b.eigenvalues().iter().filter(|l| l.abs() < reach) {
                    let near = a.eigenvalues().iter().map(|x| (x - l).abs()).fold(f64::INFINITY, f64::min);
                    mismatch = mismatch.max(near);
                }
            }
        }
        let tol = 1e-10;
        check(
            clifford == 0.0 && hermitian < tol && asymmetry < tol && mismatch < 1e-6,
            format!(
                "Clifford residual {clifford:.1e}; Hermitian residual {hermitian:.1e}; spectral asymmetry {asymmetry:.1e}; Galerkin vs exact {mismatch:.1e} (< 1e-6)"
            ),
        )
    })();
    verdict(10, "structural invariants", outcome);
}

#[test]
fn conjecture_evidence_report_is_complete() {
    let outcome = (|| {
        let bvp = reference_cylinder(1.0, 0.3, 0.1);
        let r = conjecture_experiment(&bvp).map_err(|e| e.to_string())?;
        let rows_ok = r.sweep.len() == bvp.window.window.len()
            && r.sweep.iter().all(|row| {
                row.tau.is_finite()
                    && row.invariant.is_finite()
                    && row.conjecture.is_finite()
                    && (row.difference - (row.invariant - row.conjecture)).abs() < 1e-15
            });
        let sides_ok = r.conjecture_extrapolated.is_some() == r.conjecture_error.is_some()
            && r.conjecture_extrapolated.is_some() == r.difference_mod_one.is_some()
            && !r.conjecture_note.is_empty();
        check(
            r.label == "EVIDENCE"
                && rows_ok
                && sides_ok
                && r.drift.is_finite()
                && r.drift >= 0.0
                && r.invariant.is_finite(),
            format!(
                "{} rows, invariant {:.6}, other side {:?} ({}), drift {:.3e}, difference mod 1 {:?}",
                r.sweep.len(),
                r.invariant,
                r.conjecture_extrapolated,
                r.conjecture_note,
                r.drift,
                r.difference_mod_one
            ),
        )
    })();
    verdict(11, "conjecture evidence report", outcome);
}
