//! Energy metrics and the beam-training overhead of D2D pairs.

use serde::{Deserialize, Serialize};

use crate::audit::ConstraintAudit;
use crate::baselines::SerialPlan;
use crate::error::{invalid, Result};
use crate::model::{dbm_to_mw, Link};
use crate::pathplan::PathSet;
use crate::power::PoweredSchedule;

/// Anything that can list the energy spent on each of its links.
pub trait TransmissionPlan {
    /// `(link, energy in mJ)` for every transmission.
    fn link_energies(&self) -> Vec<(Link, f64)>;
}

impl TransmissionPlan for PoweredSchedule {
    fn link_energies(&self) -> Vec<(Link, f64)> {
        self.links()
            .map(|(p, l)| (l.link, l.power.power_mw * p.slots as f64 * self.slot_s))
            .collect()
    }
}

impl TransmissionPlan for SerialPlan {
    /// P_max·θ_u·Δ per user.
    fn link_energies(&self) -> Vec<(Link, f64)> {
        self.links.iter().map(|l| (l.link, self.user_energy_at_pmax(l))).collect()
    }
}

/// Total energy Σ_k Σ_{u∈V^k} P_t^u·δ^k·Δ in mJ.
pub fn energy_consumption(plan: &impl TransmissionPlan) -> f64 {
    plan.link_energies().iter().map(|(_, e)| e).sum()
}

/// Energy of UE-transmitted links divided by the total; 0 for an empty plan.
pub fn d2d_ratio(plan: &impl TransmissionPlan) -> f64 {
    let energies = plan.link_energies();
    let total: f64 = energies.iter().map(|(_, e)| e).sum();
    if total <= 0.0 {
        return 0.0;
    }
    let d2d = energies.iter().filter(|(l, _)| l.is_d2d()).fold(0.0, |acc, (_, e)| acc + e);
    d2d / total
}

/// EC_EMS / EC_D2D.
pub fn energy_ratio(ec_ems: f64, ec_d2d: f64) -> Result<f64> {
    if !(ec_d2d > 0.0 && ec_d2d.is_finite()) {
        return Err(invalid("ec_d2d", format!("energy ratio needs a positive denominator, got {ec_d2d}")));
    }
    Ok(ec_ems / ec_d2d)
}

/// Beam-training constants of a D2D pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingParams {
    pub rate_bps: f64,
    pub t_phy_s: f64,
    pub t_sifs_s: f64,
    pub prop_delay_s: f64,
    pub candidate_pairs: u32,
    pub training_power_mw: f64,
}

impl Default for TrainingParams {
    fn default() -> Self {
        Self {
            rate_bps: 2e9,
            t_phy_s: 250e-9,
            t_sifs_s: 100e-9,
            prop_delay_s: 50e-9,
            candidate_pairs: 10,
            training_power_mw: dbm_to_mw(30.0),
        }
    }
}

impl TrainingParams {
    /// Short frame of 14 bytes: PHY header, payload air time, propagation.
    pub fn t_short_frame(&self) -> f64 {
        self.t_phy_s + 14.0 * 8.0 / self.rate_bps + self.prop_delay_s
    }

    pub fn t_ack(&self) -> f64 {
        self.t_short_frame()
    }

    /// Two BS control frames, then one frame + ACK exchange per candidate beam pair.
    pub fn time_per_pair(&self) -> f64 {
        let (f, s, a) = (self.t_short_frame(), self.t_sifs_s, self.t_ack());
        2.0 * (f + s) + self.candidate_pairs as f64 * (f + s + a)
    }

    /// Transmit air time only, in J.
    pub fn energy_per_pair(&self) -> f64 {
        let (f, a) = (self.t_short_frame(), self.t_ack());
        let air = 2.0 * f + self.candidate_pairs as f64 * (f + a);
        self.training_power_mw * 1e-3 * air
    }
}

/// Training time in s and energy in J over all D2D links of `paths`.
pub fn training_overhead(paths: &PathSet, tp: &TrainingParams) -> (f64, f64) {
    let pairs = paths.d2d_link_count() as f64;
    (pairs * tp.time_per_pair(), pairs * tp.energy_per_pair())
}

/// Outcome of one scheme on one topology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// mJ.
    pub ec_mj: f64,
    /// Against the D2D scheme on the same topology, when it was run.
    pub er: Option<f64>,
    pub d2d_ratio: f64,
    /// T_s.
    pub t_serial: u64,
    pub slots_used: u64,
    pub pairings: usize,
    pub d2d_links: usize,
    pub training_time_s: f64,
    pub training_energy_j: f64,
    pub clamped_links: usize,
    pub shortfall_bits: f64,
    pub audit: ConstraintAudit,
}

impl RunReport {
    pub fn from_plan(plan: &PoweredSchedule, paths: &PathSet, tp: &TrainingParams, audit: ConstraintAudit) -> Self {
        let (training_time_s, training_energy_j) = training_overhead(paths, tp);
        Self {
            ec_mj: energy_consumption(plan),
            er: None,
            d2d_ratio: d2d_ratio(plan),
            t_serial: plan.t_serial,
            slots_used: plan.slots_used(),
            pairings: plan.pairings.len(),
            d2d_links: paths.d2d_link_count(),
            training_time_s,
            training_energy_j,
            clamped_links: plan.clamped_links(),
            shortfall_bits: plan.shortfall_bits(),
            audit,
        }
    }
}
