//! Seeded Monte Carlo experiments over the three schemes.
//!
//! A trial draws one topology and runs every requested scheme on it. Trials are
//! independent and run in parallel; results are collected in (sweep point,
//! trial, scheme) order regardless of completion order.

pub mod config;
pub mod output;
pub mod presets;

use rayon::prelude::*;

use serde::{Deserialize, Serialize};

use crate::analysis::{exhaustive_schedule, ORACLE_MAX_HOPS, ORACLE_MAX_USERS};
use crate::audit::audit_plan;
use crate::baselines::{d2d_serial_with, fdmac_powered, serial_unicast, SerialPlan};
use crate::error::{EmsError, Result};
use crate::metrics::{energy_consumption, energy_ratio, RunReport, TrainingParams};
use crate::model::{build_topology, ChannelParams, MulticastDemand, Topology};
use crate::pathplan::{plan_paths, PathSet};
use crate::power::{power_control, PoweredSchedule};
use crate::scheduler::schedule_links;

pub use config::{trial_seed, Scheme, SimConfig, SweepVariable};
pub use output::{ExperimentResult, Row, RowKind};

/// One scheme's plan on one topology, before any audit verdict is enforced.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub scheme: Scheme,
    pub paths: PathSet,
    pub plan: PoweredSchedule,
    pub report: RunReport,
}

/// Builds, powers and audits every requested scheme on `topo`.
///
/// The serial plan fixes T_s for all schemes; the D2D plan is computed whenever
/// EMS is requested so EMS can report its energy ratio.
pub fn evaluate_schemes(
    topo: &Topology,
    demand: MulticastDemand,
    params: &ChannelParams,
    h_max: usize,
    training: &TrainingParams,
    schemes: &[Scheme],
) -> Result<Vec<Evaluation>> {
    let serial = serial_unicast(topo, demand, params)?;
    let t_serial = serial.t_serial();
    let need_d2d = schemes.iter().any(|s| matches!(s, Scheme::D2d | Scheme::Ems));
    let d2d = if need_d2d {
        Some(d2d_serial_with(topo, demand, params, h_max, t_serial)?)
    } else {
        None
    };
    let mut out = Vec::with_capacity(schemes.len());
    for &scheme in schemes {
        let (paths, plan) = match scheme {
            Scheme::Ems => ems_plan(topo, demand, params, h_max, &serial)?,
            Scheme::D2d => d2d.clone().expect("computed above"),
            Scheme::Fdmac => (serial.paths(), fdmac_powered(&serial, demand, params, topo)?),
        };
        let audit = audit_plan(&plan, Some(&paths), demand, params, topo)?;
        let mut report = RunReport::from_plan(&plan, &paths, training, audit);
        if scheme == Scheme::Ems {
            let (_, d2d_plan) = d2d.as_ref().expect("computed above");
            report.er = Some(energy_ratio(report.ec_mj, energy_consumption(d2d_plan))?);
        }
        out.push(Evaluation {
            scheme,
            paths,
            plan,
            report,
        });
    }
    Ok(out)
}

fn ems_plan(
    topo: &Topology,
    demand: MulticastDemand,
    params: &ChannelParams,
    h_max: usize,
    serial: &SerialPlan,
) -> Result<(PathSet, PoweredSchedule)> {
    let paths = plan_paths(topo, h_max)?;
    let schedule = schedule_links(&paths, params, topo)?;
    let plan = power_control(&schedule, serial.t_serial(), demand, params, topo)?;
    Ok((paths, plan))
}

/// Single-scheme trial; a failed constraint aborts with the violated constraint.
pub fn run_trial(
    topo: &Topology,
    demand: MulticastDemand,
    params: &ChannelParams,
    scheme: Scheme,
    h_max: usize,
    training: &TrainingParams,
) -> Result<RunReport> {
    let eval = evaluate_schemes(topo, demand, params, h_max, training, &[scheme])?.remove(0);
    let audit = eval.report.audit.clone();
    audit.into_result()?;
    Ok(eval.report)
}

/// Per-scheme outcomes of one (point, seed) trial.
fn trial_outcomes(cfg: &SimConfig, seed: u64) -> Vec<(Scheme, Result<RunReport>)> {
    let schemes = &cfg.experiment.schemes;
    let attempt = || -> Result<Vec<Evaluation>> {
        let topo = build_topology(cfg.topology.region_side_m, cfg.topology.group_size, seed)?;
        evaluate_schemes(&topo, cfg.demand()?, &cfg.channel, cfg.topology.h_max, &cfg.training, schemes)
    };
    match attempt() {
        Ok(evals) => evals
            .into_iter()
            .map(|e| {
                let verdict = e.report.audit.clone().into_result().map(|_| e.report);
                (e.scheme, verdict)
            })
            .collect(),
        Err(err) => schemes.iter().map(|&s| (s, Err(err.clone()))).collect(),
    }
}

/// Every sweep point × trial × scheme, plus per-(point, scheme) mean rows.
pub fn run_experiment(cfg: &SimConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let exp = &cfg.experiment;
    let points = cfg.sweep_points();
    let seeds = exp.trial_seeds();
    let point_cfgs: Vec<SimConfig> = points
        .iter()
        .map(|&v| cfg.with(exp.sweep_variable, v))
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..seeds.len()).map(move |t| (p, t)))
        .collect();
    let outcomes: Vec<Vec<(Scheme, Result<RunReport>)>> = jobs
        .par_iter()
        .map(|&(p, t)| trial_outcomes(&point_cfgs[p], seeds[t]))
        .collect();

    let mut rows = Vec::new();
    for (p, &value) in points.iter().enumerate() {
        let mut point_rows = Vec::new();
        for (t, &seed) in seeds.iter().enumerate() {
            for (scheme, outcome) in &outcomes[p * seeds.len() + t] {
                point_rows.push(Row::trial(exp, value, t, seed, *scheme, outcome));
            }
        }
        let means: Vec<Row> = exp
            .schemes
            .iter()
            .map(|&scheme| {
                let ok: Vec<&Row> = point_rows
                    .iter()
                    .filter(|r| r.scheme == scheme && r.error.is_none())
                    .collect();
                Row::mean(exp, value, scheme, &ok)
            })
            .collect();
        rows.extend(point_rows);
        rows.extend(means);
    }
    Ok(ExperimentResult {
        config: cfg.clone(),
        rows,
    })
}

/// Runs the audit only and reports every failed trial as an error.
pub fn validate_experiment(cfg: &SimConfig) -> Result<ExperimentResult> {
    let res = run_experiment(cfg)?;
    if let Some(bad) = res.failures().next() {
        return Err(EmsError::Config(format!(
            "{} trial(s) failed, first: {} {}={} trial {}: {}",
            res.failures().count(),
            bad.scheme,
            bad.sweep_variable,
            bad.sweep_value,
            bad.trial.map_or(-1, |t| t as i64),
            bad.error.as_deref().unwrap_or("")
        )));
    }
    Ok(res)
}

/// EMS against the exhaustive optimum on one small instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub seed: u64,
    pub users: usize,
    pub hop_cap: usize,
    pub ems_mj: f64,
    pub oracle_mj: f64,
    /// EMS needed P_max clamping, so its energy is not a feasible schedule's.
    pub ems_clamped: bool,
    pub structures: usize,
    pub candidates: usize,
}

impl OracleComparison {
    /// EMS energy over the optimum.
    pub fn gap(&self) -> f64 {
        self.ems_mj / self.oracle_mj
    }
}

/// Runs `instances` random instances of 1..=4 users through EMS and the
/// exhaustive oracle, with the config's region, channel and demand.
///
/// Instance `i` uses trial seed `i` of the master seed; its group size is drawn
/// from that seed. The hop cap is the config's, limited to the oracle's cap.
pub fn oracle_comparisons(cfg: &SimConfig, instances: usize) -> Result<Vec<OracleComparison>> {
    cfg.validate()?;
    let demand = cfg.demand()?;
    let hop_cap = cfg.topology.h_max.min(ORACLE_MAX_HOPS);
    (0..instances)
        .into_par_iter()
        .map(|i| {
            let seed = trial_seed(cfg.experiment.master_seed, i);
            let users = 1 + (seed % ORACLE_MAX_USERS as u64) as usize;
            let topo = build_topology(cfg.topology.region_side_m, users, seed)?;
            let serial = serial_unicast(&topo, demand, &cfg.channel)?;
            let (_, ems) = ems_plan(&topo, demand, &cfg.channel, hop_cap, &serial)?;
            let oracle = exhaustive_schedule(&topo, demand, &cfg.channel, hop_cap)?;
            Ok(OracleComparison {
                seed,
                users,
                hop_cap,
                ems_mj: energy_consumption(&ems),
                oracle_mj: oracle.energy_mj,
                ems_clamped: ems.clamped_links() > 0,
                structures: oracle.structures,
                candidates: oracle.candidates,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SimConfig {
        let mut c = SimConfig::default();
        c.experiment.trials = 3;
        c.experiment.sweep_variable = SweepVariable::GroupSize;
        c.experiment.sweep_values = vec![4.0, 8.0];
        c
    }

    #[test]
    fn row_layout() {
        let res = run_experiment(&small()).unwrap();
        // 2 points × (3 trials × 3 schemes + 3 means)
        assert_eq!(res.rows.len(), 24);
        assert_eq!(res.rows[0].kind, RowKind::Trial);
        assert_eq!(res.rows[9].kind, RowKind::Mean);
        assert_eq!(res.rows[9].scheme, Scheme::Ems);
        assert_eq!(res.rows[9].n_ok, Some(3));
        assert_eq!(res.rows[12].sweep_value, 8.0);
        for r in res.trial_rows() {
            match r.scheme {
                Scheme::Fdmac => assert_eq!(r.d2d_ratio, Some(0.0)),
                Scheme::Ems => assert!(r.er.is_some()),
                Scheme::D2d => assert!(r.er.is_none()),
            }
        }
    }

    #[test]
    fn deterministic_and_order_stable() {
        let a = run_experiment(&small()).unwrap().to_csv_string().unwrap();
        let b = run_experiment(&small()).unwrap().to_csv_string().unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = pool.install(|| run_experiment(&small()).unwrap().to_csv_string().unwrap());
        assert_eq!(a, c);
    }

    #[test]
    fn failed_trials_are_recorded() {
        let mut c = small();
        // Free-space gain and a loose threshold pack strongly interfering
        // links together; some of them cannot fill their share at P_max.
        c.channel = ChannelParams::free_space();
        c.channel.sigma = 1e-8;
        c.experiment.trials = 20;
        c.experiment.sweep_values = vec![5.0];
        let res = run_experiment(&c).unwrap();
        assert!(res.failures().count() > 0);
        let mean = res.mean(Scheme::Ems, 5.0).unwrap();
        assert!(mean.n_ok.unwrap() < 20);
        let bad = res.failures().next().unwrap();
        assert!(bad.error.as_deref().unwrap().contains("constraint `demand_met`"));
        assert!(validate_experiment(&c).is_err());
    }

    #[test]
    fn single_trial_api() {
        let t = build_topology(20.0, 6, 3).unwrap();
        let p = ChannelParams::default();
        let d = MulticastDemand::default();
        let tp = TrainingParams::default();
        let f = run_trial(&t, d, &p, Scheme::Fdmac, 6, &tp).unwrap();
        assert_eq!(f.d2d_ratio, 0.0);
        assert_eq!(f.training_time_s, 0.0);
        let e = run_trial(&t, d, &p, Scheme::Ems, 6, &tp).unwrap();
        assert!(e.er.unwrap() <= 1.0 + 1e-12);
        assert!(e.audit.passed());
    }

    #[test]
    fn oracle_never_beaten() {
        let cfgs = oracle_comparisons(&SimConfig::default(), 8).unwrap();
        assert_eq!(cfgs.len(), 8);
        for c in cfgs.iter().filter(|c| !c.ems_clamped) {
            assert!((1..=4).contains(&c.users));
            assert!(c.gap() >= 1.0 - 1e-9, "{c:?}");
        }
    }
}
