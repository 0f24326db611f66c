//! Route execution and report assembly.

use std::collections::BTreeMap;
use std::time::Instant;

use etaflow_core::cylinder::{
    conjecture_experiment, eta_bar_x, ConjectureReport, CutoffProfile, CylinderBvp, CylinderInvariant, LagrangianSpec,
};
use etaflow_core::dirac::{EvalMethod, FamilyHandle, MappingTorusProblem, SelfConvergence, SpectralData};
use etaflow_core::eta::{
    eta_form_degree_one, spectral_flow, thm34_eta, uniform_grid, EtaFormSample, EtaResult, FlowControl,
    ProductFormulaOptions, SyntheticFamily,
};
use etaflow_core::holonomy::{
    compare_holonomy, det_factor, tau_from_eta, tau_via_mapping_torus, DetLineData, HolonomyResult, Route, RouteValue,
};
use etaflow_core::linalg::{C64, ONE};
use etaflow_core::toeplitz::{verify_toeplitz, IndexReport, ToeplitzProblem};
use serde::Serialize;

use crate::config::{Experiment, ExperimentConfig, RouteName};

pub const SCHEMA_VERSION: &str = "etaflow-report/1";

/// Everything one `run` produces. Spectra and density samples are written to
/// CSV side files and kept out of the JSON.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub command: String,
    pub provenance: Provenance,
    pub routes: BTreeMap<String, RouteReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holonomy: Option<HolonomyResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthetic_flow: Option<Vec<SyntheticFlowRow>>,
    pub failures: Vec<RouteFailure>,
    #[serde(skip)]
    pub tables: Tables,
}

#[derive(Debug, Serialize)]
pub struct Provenance {
    pub config: ExperimentConfig,
    pub tool_version: &'static str,
    pub core_version: &'static str,
    pub seed: Option<u64>,
    /// Wall-clock seconds per route; the only field that varies between runs.
    pub timing: BTreeMap<String, f64>,
}

#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RouteReport {
    ProductFormula {
        value: RouteValue,
        eta: EtaResult,
    },
    Cylinder {
        value: RouteValue,
        invariant: CylinderInvariant,
        #[serde(serialize_with = "complex")]
        det_factor: C64,
    },
    MappingTorus {
        value: RouteValue,
        eta: EtaResult,
        certificate: SelfConvergence,
        phase_drift: f64,
    },
    Toeplitz {
        report: IndexReport,
    },
    Conjecture {
        report: ConjectureReport,
    },
}

impl RouteReport {
    fn value(&self) -> Option<&RouteValue> {
        match self {
            Self::ProductFormula { value, .. } | Self::Cylinder { value, .. } | Self::MappingTorus { value, .. } => {
                Some(value)
            }
            _ => None,
        }
    }
}

fn complex<S: serde::Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

#[derive(Debug, Serialize)]
pub struct RouteFailure {
    pub route: String,
    pub message: String,
}

#[derive(Debug, Serialize)]
pub struct SyntheticFlowRow {
    pub seed: u64,
    pub size: usize,
    pub crossings: usize,
    pub expected: i64,
    pub computed: Option<i64>,
    pub agreed: bool,
}

#[derive(Debug, Default)]
pub struct Tables {
    /// `(route, s, eigenvalues)`.
    pub spectra: Vec<(String, f64, Vec<f64>)>,
    pub eta_form: Vec<EtaFormSample>,
    /// `(route, quantity, coarse, fine)`.
    pub convergence: Vec<(String, String, f64, f64)>,
}

pub struct RouteOutput {
    pub report: RouteReport,
    pub spectrum: Option<(f64, SpectralData)>,
    pub eta_form: Vec<EtaFormSample>,
    pub convergence: Vec<(String, f64, f64)>,
}

pub fn product_formula_handle(e: &Experiment) -> anyhow::Result<FamilyHandle> {
    let spec = e.spec.clone().expect("validated");
    let map = e.map.clone().expect("validated");
    let method = if map.character_shortcut().is_some() {
        EvalMethod::ExactCharacter
    } else {
        EvalMethod::Galerkin { cutoff: e.config.truncation.cutoff }
    };
    Ok(FamilyHandle::new(spec, map, method)?)
}

pub fn cylinder_problem(e: &Experiment) -> anyhow::Result<CylinderBvp> {
    let c = &e.config;
    let mut bvp = CylinderBvp::new(
        c.cylinder.length,
        e.spec.clone().expect("validated"),
        e.map.clone().expect("validated"),
        c.truncation.collar_cutoff,
        CutoffProfile::new(c.cylinder.profile_width)?,
    )?
    .with_window(c.eta.options());
    if let Some(phi) = c.cylinder.lagrangian_phase {
        let n = bvp.grading()?.plus.ncols();
        bvp = bvp.with_lagrangian(Some(LagrangianSpec::phase(n, phi)));
    }
    if let Some(d) = c.truncation.x_degree {
        bvp = bvp.with_degree(d);
    }
    Ok(bvp)
}

pub fn mapping_torus_problem(e: &Experiment) -> MappingTorusProblem {
    let c = &e.config;
    let bound = 1.05 * c.eta.options().required_bound();
    MappingTorusProblem::new(
        e.spec.clone().expect("validated"),
        e.map.clone().expect("validated"),
        c.truncation.circle_points,
        c.truncation.circle_cutoff,
        bound,
    )
}

pub fn toeplitz_problem(e: &Experiment) -> anyhow::Result<ToeplitzProblem> {
    let t = e.config.toeplitz.as_ref().expect("validated");
    Ok(ToeplitzProblem::new(t.twist, e.circle_map.clone().expect("validated"), t.cutoff)?
        .with_convention(t.convention.into()))
}

fn product_formula_route(e: &Experiment) -> anyhow::Result<RouteOutput> {
    let handle = product_formula_handle(e)?;
    let options = ProductFormulaOptions::new(e.config.truncation.cutoff);
    let eta = thm34_eta(&handle, &options)?;
    let eta_form = uniform_grid(40)
        .into_iter()
        .map(|s| eta_form_degree_one(&handle, s, &options))
        .collect::<Result<Vec<_>, _>>()?;
    let sm = &eta.regularization.smoothed;
    let convergence = vec![("cutoff+4".to_string(), sm[0], sm[1]), ("heat-floor×2".to_string(), sm[0], sm[2])];
    let value = tau_from_eta(Route::ProductFormula, &eta);
    Ok(RouteOutput { report: RouteReport::ProductFormula { value, eta }, spectrum: None, eta_form, convergence })
}

fn cylinder_route(e: &Experiment) -> anyhow::Result<RouteOutput> {
    let bvp = cylinder_problem(e)?;
    let invariant = eta_bar_x(&bvp)?;
    let factor = if bvp.grading()?.dimension() == 0 { ONE } else { det_factor(&DetLineData::from_cylinder(&bvp)?)? };
    let spectrum = bvp.spectrum(1.0, bvp.degree)?;
    let value = tau_from_eta(Route::Cylinder, &invariant.invariant);
    Ok(RouteOutput {
        report: RouteReport::Cylinder { value, invariant, det_factor: factor },
        spectrum: Some((1.0, spectrum)),
        eta_form: Vec::new(),
        convergence: Vec::new(),
    })
}

fn mapping_torus_route(e: &Experiment) -> anyhow::Result<RouteOutput> {
    let problem = mapping_torus_problem(e);
    let r = tau_via_mapping_torus(&problem, &e.config.eta.options())?;
    let convergence = r
        .spectral
        .coarse
        .iter()
        .zip(&r.spectral.fine)
        .enumerate()
        .map(|(i, (a, b))| (format!("eigenvalue {i}"), *a, *b))
        .collect();
    Ok(RouteOutput {
        report: RouteReport::MappingTorus {
            value: r.value,
            eta: r.eta,
            certificate: r.spectral,
            phase_drift: r.phase_drift,
        },
        spectrum: Some((0.0, r.spectrum)),
        eta_form: Vec::new(),
        convergence,
    })
}

fn toeplitz_route(e: &Experiment) -> anyhow::Result<RouteOutput> {
    let report = verify_toeplitz(&toeplitz_problem(e)?)?;
    Ok(RouteOutput {
        report: RouteReport::Toeplitz { report },
        spectrum: None,
        eta_form: Vec::new(),
        convergence: Vec::new(),
    })
}

fn conjecture_route(e: &Experiment) -> anyhow::Result<RouteOutput> {
    let report = conjecture_experiment(&cylinder_problem(e)?)?;
    Ok(RouteOutput {
        report: RouteReport::Conjecture { report },
        spectrum: None,
        eta_form: Vec::new(),
        convergence: Vec::new(),
    })
}

pub fn run_route(e: &Experiment, route: RouteName) -> anyhow::Result<RouteOutput> {
    match route {
        RouteName::Thm34 => product_formula_route(e),
        RouteName::Cylinder => cylinder_route(e),
        RouteName::MappingTorus => mapping_torus_route(e),
        RouteName::Toeplitz => toeplitz_route(e),
        RouteName::Conjecture => conjecture_route(e),
    }
}

fn synthetic_flow(seed: u64) -> Vec<SyntheticFlowRow> {
    (0..10)
        .map(|i| {
            let seed = seed.wrapping_add(i);
            let size = 2 + (i as usize % 5);
            let crossings = 1 + (i as usize % 3);
            let fam = SyntheticFamily::random(seed, size, crossings);
            let computed = spectral_flow(&fam, &uniform_grid(12), &FlowControl::default()).ok().map(|f| f.value);
            let expected = fam.expected_flow();
            SyntheticFlowRow { seed, size, crossings, expected, computed, agreed: computed == Some(expected) }
        })
        .collect()
}

/// Runs every configured route concurrently and joins the results in the
/// configured order.
pub fn run(e: &Experiment, command: &str, seed: Option<u64>) -> RunReport {
    let outcomes: Vec<(RouteName, anyhow::Result<RouteOutput>, f64)> = std::thread::scope(|scope| {
        let handles: Vec<_> = e
            .routes()
            .iter()
            .map(|&route| {
                scope.spawn(move || {
                    let start = Instant::now();
                    let out = run_route(e, route);
                    (route, out, start.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("route thread panicked")).collect()
    });

    let mut routes = BTreeMap::new();
    let mut failures = Vec::new();
    let mut timing = BTreeMap::new();
    let mut tables = Tables::default();
    for (route, out, seconds) in outcomes {
        let name = route.to_string();
        timing.insert(name.clone(), seconds);
        match out {
            Ok(o) => {
                if let Some((s, sd)) = o.spectrum {
                    tables.spectra.push((name.clone(), s, sd.eigenvalues().to_vec()));
                }
                tables.eta_form.extend(o.eta_form);
                tables.convergence.extend(o.convergence.into_iter().map(|(q, a, b)| (name.clone(), q, a, b)));
                routes.insert(name, o.report);
            }
            Err(err) => failures.push(RouteFailure { route: name, message: format!("{err:#}") }),
        }
    }

    let ordered: Vec<&RouteReport> = e.routes().iter().filter_map(|r| routes.get(&r.to_string())).collect();
    let values: Vec<RouteValue> = ordered.iter().filter_map(|r| r.value().cloned()).collect();
    let factor = ordered
        .iter()
        .find_map(|r| match r {
            RouteReport::Cylinder { det_factor, .. } => Some(*det_factor),
            _ => None,
        })
        .unwrap_or(ONE);
    let holonomy = if values.len() >= 2 { compare_holonomy(&values, factor, e.config.tolerance).ok() } else { None };

    RunReport {
        schema: SCHEMA_VERSION,
        command: command.to_string(),
        provenance: Provenance {
            config: e.config.clone(),
            tool_version: env!("CARGO_PKG_VERSION"),
            core_version: etaflow_core::VERSION,
            seed,
            timing,
        },
        routes,
        holonomy,
        synthetic_flow: seed.map(synthetic_flow),
        failures,
        tables,
    }
}

impl RunReport {
    /// Route failure, phase disagreement or a synthetic-flow mismatch.
    pub fn succeeded(&self) -> bool {
        self.failures.is_empty()
            && self.holonomy.as_ref().map(|h| h.agreed).unwrap_or(true)
            && self.synthetic_flow.as_ref().map(|rows| rows.iter().all(|r| r.agreed)).unwrap_or(true)
    }
}
