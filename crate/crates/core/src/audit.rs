//! Feasibility checks of a powered schedule against the constraints of the
//! energy-minimisation problem:
//!
//! * `served_once`: every group member is served in exactly one pairing;
//! * `no_adjacent`: no two links of a pairing share an endpoint;
//! * `demand_met`: each link delivers D bits over its pairing, with the SINR
//!   computed from the powers actually assigned to its peers;
//! * `precedence`: a relay receives the data in an earlier pairing than it
//!   forwards it;
//! * `power_cap`: 0 < P_t ≤ P_max;
//! * `slot_budget`: Σ δ^k ≤ T_s.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::channel::{interference_power, link_rate, Beamset};
use crate::error::{EmsError, Result};
use crate::model::{ChannelParams, Link, MulticastDemand, NodeId, Topology};
use crate::pathplan::PathSet;
use crate::power::PoweredSchedule;

/// Relative slack on the demand and power checks.
pub const AUDIT_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    ServedOnce,
    NoAdjacent,
    DemandMet,
    Precedence,
    PowerCap,
    SlotBudget,
}

impl Constraint {
    pub fn name(self) -> &'static str {
        match self {
            Constraint::ServedOnce => "served_once",
            Constraint::NoAdjacent => "no_adjacent",
            Constraint::DemandMet => "demand_met",
            Constraint::Precedence => "precedence",
            Constraint::PowerCap => "power_cap",
            Constraint::SlotBudget => "slot_budget",
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintAudit {
    pub served_once: bool,
    pub no_adjacent: bool,
    pub demand_met: bool,
    pub precedence: bool,
    pub power_cap: bool,
    pub slot_budget: bool,
    pub violations: Vec<String>,
}

impl ConstraintAudit {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    /// First failed constraint in the order above, if any.
    pub fn first_failure(&self) -> Option<Constraint> {
        [
            (Constraint::ServedOnce, self.served_once),
            (Constraint::NoAdjacent, self.no_adjacent),
            (Constraint::DemandMet, self.demand_met),
            (Constraint::Precedence, self.precedence),
            (Constraint::PowerCap, self.power_cap),
            (Constraint::SlotBudget, self.slot_budget),
        ]
        .into_iter()
        .find(|&(_, ok)| !ok)
        .map(|(c, _)| c)
    }

    pub fn into_result(self) -> Result<Self> {
        match self.first_failure() {
            None => Ok(self),
            Some(constraint) => Err(EmsError::ConstraintViolated {
                constraint,
                detail: self.violations.join("; "),
            }),
        }
    }
}

/// Runs every check. When `paths` is given the scheduled links must also equal
/// the path links exactly.
pub fn audit_plan(
    plan: &PoweredSchedule,
    paths: Option<&PathSet>,
    demand: MulticastDemand,
    params: &ChannelParams,
    topo: &Topology,
) -> Result<ConstraintAudit> {
    let mut violations = Vec::new();

    // Every member served once, and exactly the path links scheduled.
    let mut served: BTreeMap<NodeId, usize> = BTreeMap::new();
    for (_, l) in plan.links() {
        *served.entry(l.link.rx).or_default() += 1;
    }
    let group: BTreeSet<NodeId> = topo.group_nodes().collect();
    let mut once = true;
    for u in &group {
        match served.get(u).copied().unwrap_or(0) {
            1 => {}
            n => {
                once = false;
                violations.push(format!("served_once: {u} served {n} times"));
            }
        }
    }
    for u in served.keys() {
        if !group.contains(u) {
            once = false;
            violations.push(format!("served_once: {u} is not in the group"));
        }
    }
    if let Some(paths) = paths {
        let mut want: Vec<Link> = paths.links().collect();
        let mut got: Vec<Link> = plan.links().map(|(_, l)| l.link).collect();
        want.sort();
        got.sort();
        if want != got {
            once = false;
            violations.push("served_once: scheduled links differ from path links".into());
        }
    }

    // Half-duplex, single-beam nodes.
    let mut disjoint = true;
    for p in &plan.pairings {
        for (i, a) in p.links.iter().enumerate() {
            for b in &p.links[i + 1..] {
                if a.link.is_adjacent(&b.link) {
                    disjoint = false;
                    violations.push(format!("no_adjacent: {} and {} share pairing {}", a.link, b.link, p.index));
                }
            }
        }
    }

    // Demand, only meaningful once no node serves two links at once.
    let mut demand_ok = true;
    if disjoint {
        for p in &plan.pairings {
            let links = p.link_set();
            let beams = Beamset::from_links(&links)?;
            for l in &p.links {
                let peers: Vec<(Link, f64)> = p
                    .links
                    .iter()
                    .filter(|o| o.link != l.link)
                    .map(|o| (o.link, o.power.power_mw))
                    .collect();
                let i = interference_power(l.link, &peers, &beams, params, topo)?;
                let rate = link_rate(l.link, i, l.power.power_mw, params, topo)?;
                let delivered = rate * p.slots as f64 * params.slot_s;
                if delivered < demand.bits() * (1.0 - AUDIT_REL_TOL) {
                    demand_ok = false;
                    violations.push(format!(
                        "demand_met: {} delivers {delivered:.6e} of {:.6e} bits",
                        l.link,
                        demand.bits()
                    ));
                }
            }
        }
    } else {
        demand_ok = false;
    }

    // Precedence; the BS holds the data from the start.
    let position: BTreeMap<NodeId, usize> = plan
        .pairings
        .iter()
        .enumerate()
        .flat_map(|(k, p)| p.links.iter().map(move |l| (l.link.rx, k)))
        .collect();
    let mut ordered = true;
    for (k, p) in plan.pairings.iter().enumerate() {
        for l in &p.links {
            if let NodeId::Ue(_) = l.link.tx {
                // Σ_{k'≤K*} a_{s_u} ≥ Σ_{k'≤K*} a_u for all K* reduces to
                // "s_u is served no later than u"; half-duplex rules out equality.
                match position.get(&l.link.tx) {
                    Some(&ks) if ks < k => {}
                    Some(&ks) if ks == k && !disjoint => {}
                    _ => {
                        ordered = false;
                        violations.push(format!("precedence: {} forwards before {} receives", l.link, l.link.tx));
                    }
                }
            }
        }
    }

    let mut capped = true;
    for (_, l) in plan.links() {
        let pw = l.power.power_mw;
        if !(pw > 0.0 && pw <= params.p_max_mw * (1.0 + AUDIT_REL_TOL)) {
            capped = false;
            violations.push(format!("power_cap: {} transmits at {pw} mW", l.link));
        }
    }

    let used = plan.slots_used();
    let within_budget = used <= plan.t_serial;
    if !within_budget {
        violations.push(format!("slot_budget: {used} slots exceed T_s = {}", plan.t_serial));
    }

    Ok(ConstraintAudit {
        served_once: once,
        no_adjacent: disjoint,
        demand_met: demand_ok,
        precedence: ordered,
        power_cap: capped,
        slot_budget: within_budget,
        violations,
    })
}

/// Literal prefix-sum form of the precedence constraint over a schedule's
/// receive indicators.
pub fn precedence_prefix_sums(plan: &PoweredSchedule) -> bool {
    let k = plan.pairings.len();
    let mut indicator: BTreeMap<NodeId, Vec<u32>> = BTreeMap::new();
    for (idx, p) in plan.pairings.iter().enumerate() {
        for l in &p.links {
            indicator.entry(l.link.rx).or_insert_with(|| vec![0; k])[idx] = 1;
        }
    }
    for (_, l) in plan.links() {
        let Some(u) = indicator.get(&l.link.rx) else { return false };
        let s: Vec<u32> = match l.link.tx {
            NodeId::Bs => vec![1; k],
            tx => match indicator.get(&tx) {
                Some(v) => v.clone(),
                None => return false,
            },
        };
        let (mut su, mut uu) = (0, 0);
        for kk in 0..k {
            su += s[kk];
            uu += u[kk];
            if su < uu {
                return false;
            }
        }
    }
    true
}
