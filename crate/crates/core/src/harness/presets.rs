//! Named figure presets.
//!
//! Each preset is one or more experiments over the default configuration.
//! Multi-case figures (threshold sweeps under several θ, P_max or region sizes)
//! expand into one experiment per case, named `<preset>_<case>`.

use super::config::{SimConfig, SweepVariable};
use crate::error::{EmsError, Result};

const PRESETS: [&str; 13] = [
    "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "fig11", "fig12", "fig13",
    "fig14", "fig15",
];

pub fn preset_names() -> &'static [&'static str] {
    &PRESETS
}

fn group_sizes() -> Vec<f64> {
    (1..=7).map(|k| 5.0 * k as f64).collect()
}

fn demands() -> Vec<f64> {
    vec![1e9, 2e9, 5e9, 1e10, 2e10, 5e10, 1e11]
}

/// σ from 1e-19 to 1e-8, one point per decade.
pub fn sigma_decades() -> Vec<f64> {
    (8..=19).rev().map(|e| 10f64.powi(-e)).collect()
}

fn single(name: &str, var: SweepVariable, values: Vec<f64>) -> SimConfig {
    let mut c = SimConfig::default();
    c.experiment.name = name.into();
    c.experiment.sweep_variable = var;
    c.experiment.sweep_values = values;
    c
}

fn sigma_cases(name: &str, var: SweepVariable, cases: &[f64]) -> Result<Vec<SimConfig>> {
    cases
        .iter()
        .map(|&v| {
            let base = SimConfig::default().with(var, v)?;
            let mut c = single(&format!("{name}_{}{}", var.name(), v), SweepVariable::Sigma, sigma_decades());
            c.channel = base.channel;
            c.topology = base.topology;
            Ok(c)
        })
        .collect()
}

/// Experiments of the named preset, at the default trial count.
pub fn preset(name: &str) -> Result<Vec<SimConfig>> {
    use SweepVariable::*;
    let cfgs = match name {
        // Training overhead and energy against group size.
        "fig3" | "fig4" | "fig7" | "fig8" => vec![single(name, GroupSize, group_sizes())],
        "fig5" | "fig6" => vec![single(name, Demand, demands())],
        "fig9" => vec![single(name, PMaxDbm, vec![10.0, 15.0, 20.0, 25.0, 30.0])],
        "fig10" => vec![single(name, RegionSide, vec![10.0, 20.0, 30.0, 40.0, 50.0])],
        "fig11" => vec![single(name, Theta3db, vec![15.0, 30.0, 45.0, 60.0, 75.0])],
        "fig12" => vec![single(name, HMax, (1..=6).map(f64::from).collect())],
        "fig13" => sigma_cases(name, Theta3db, &[15.0, 30.0, 45.0])?,
        "fig14" => sigma_cases(name, PMaxDbm, &[20.0, 25.0, 30.0])?,
        "fig15" => sigma_cases(name, RegionSide, &[10.0, 20.0, 30.0])?,
        _ => {
            return Err(EmsError::Config(format!(
                "unknown preset `{name}`; known: {}",
                PRESETS.join(", ")
            )))
        }
    };
    for c in &cfgs {
        c.validate()?;
    }
    Ok(cfgs)
}
