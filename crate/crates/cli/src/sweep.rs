//! One-parameter sweeps over a base configuration.

use clap::ValueEnum;
use etaflow_core::eta::distance_mod_one;
use serde::Serialize;

use crate::config::{ConfigError, Experiment, ExperimentConfig, RouteName};
use crate::run::{run_route, RouteReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parameter {
    /// Fourier cutoff of the product formula.
    Cutoff,
    /// Circle points of the mapping torus.
    Grid,
    /// Largest value of the smoothing window; the rest is scaled with it.
    Window,
    /// Collar length.
    Length,
    /// Width of the interpolation profile.
    Profile,
}

#[derive(Debug, Serialize)]
pub struct SweepRow {
    pub parameter: Parameter,
    pub value: f64,
    pub route: String,
    pub eta_bar: Option<f64>,
    pub error_estimate: Option<f64>,
    /// Distance modulo one from the route's value at the first sweep point.
    pub delta: Option<f64>,
    pub failure: Option<String>,
}

fn apply(config: &ExperimentConfig, parameter: Parameter, value: f64) -> Result<ExperimentConfig, ConfigError> {
    let mut c = config.clone();
    let count = |field: &str| {
        if value >= 0.0 && value.fract() == 0.0 {
            Ok(value as usize)
        } else {
            Err(ConfigError { field: field.into(), message: format!("{value} is not a non-negative integer") })
        }
    };
    match parameter {
        Parameter::Cutoff => c.truncation.cutoff = count("truncation.cutoff")?,
        Parameter::Grid => c.truncation.circle_points = count("truncation.circle_points")?,
        Parameter::Window => {
            let top = c.eta.window[0];
            c.eta.window.iter_mut().for_each(|w| *w *= value / top);
        }
        Parameter::Length => c.cylinder.length = value,
        Parameter::Profile => c.cylinder.profile_width = value,
    }
    Ok(c)
}

/// Sweeps the eta routes of `base` over `values`, sequentially per point and
/// concurrently across routes.
pub fn sweep(base: &Experiment, parameter: Parameter, values: &[f64]) -> Result<Vec<SweepRow>, ConfigError> {
    let experiments = values
        .iter()
        .map(|&v| Experiment::from_config(apply(&base.config, parameter, v)?, &base.base))
        .collect::<Result<Vec<_>, _>>()?;
    let routes: Vec<RouteName> = base.routes().iter().copied().filter(|r| r.is_eta_route()).collect();
    let mut rows = Vec::new();
    let mut first: Vec<Option<f64>> = vec![None; routes.len()];
    for (e, &value) in experiments.iter().zip(values) {
        let outcomes: Vec<_> = std::thread::scope(|scope| {
            let handles: Vec<_> = routes.iter().map(|&r| scope.spawn(move || run_route(e, r))).collect();
            handles.into_iter().map(|h| h.join().expect("route thread panicked")).collect()
        });
        for (i, (route, out)) in routes.iter().zip(outcomes).enumerate() {
            let mut row = SweepRow {
                parameter,
                value,
                route: route.to_string(),
                eta_bar: None,
                error_estimate: None,
                delta: None,
                failure: None,
            };
            match out.map(|o| o.report) {
                Ok(report) => {
                    let v = match &report {
                        RouteReport::ProductFormula { value, .. }
                        | RouteReport::Cylinder { value, .. }
                        | RouteReport::MappingTorus { value, .. } => value,
                        _ => unreachable!("only eta routes are swept"),
                    };
                    let reference = *first[i].get_or_insert(v.eta_bar);
                    row.eta_bar = Some(v.eta_bar);
                    row.error_estimate = Some(v.error_estimate);
                    row.delta = Some(distance_mod_one(v.eta_bar, reference));
                }
                Err(err) => row.failure = Some(format!("{err:#}")),
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_scaling_keeps_ratios() {
        let config: ExperimentConfig = toml::from_str("").unwrap();
        let c = apply(&config, Parameter::Window, 1.2).unwrap();
        assert!((c.eta.window[0] - 1.2).abs() < 1e-15);
        assert!((c.eta.window[3] / c.eta.window[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fractional_grid_is_rejected() {
        let config: ExperimentConfig = toml::from_str("").unwrap();
        assert_eq!(apply(&config, Parameter::Grid, 12.5).unwrap_err().field, "truncation.circle_points");
    }
}
