//! Comparison schemes: serial unicast from the BS (FDMAC) and D2D paths
//! without concurrency.

use serde::{Deserialize, Serialize};

use crate::channel::link_rate;
use crate::error::{EmsError, Result};
use crate::model::{ChannelParams, Link, MulticastDemand, NodeId, Topology};
use crate::pathplan::{plan_paths, Path, PathSet};
use crate::power::{power_control, slots_for_rate, PoweredSchedule};
use crate::scheduler::serial_schedule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerialLink {
    pub link: Link,
    /// Interference-free BS rate at P_max, R_αu.
    pub rate: f64,
    /// θ_u.
    pub slots: u64,
}

/// BS-to-user unicast, one user per pairing, in ascending user order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerialPlan {
    pub links: Vec<SerialLink>,
    pub p_max_mw: f64,
    pub slot_s: f64,
    pub demand_bits: f64,
}

impl SerialPlan {
    /// T_s = Σ θ_u.
    pub fn t_serial(&self) -> u64 {
        self.links.iter().map(|l| l.slots).sum()
    }

    /// P_max·θ_u·Δ in mJ, the slot-quantised serial energy of one user.
    pub fn user_energy_at_pmax(&self, l: &SerialLink) -> f64 {
        self.p_max_mw * l.slots as f64 * self.slot_s
    }

    /// P_max·D/R_αu in mJ, the serial energy without slot quantisation.
    pub fn user_energy_continuous(&self, l: &SerialLink) -> f64 {
        self.p_max_mw * self.demand_bits / l.rate
    }

    pub fn paths(&self) -> PathSet {
        PathSet::new(
            self.links
                .iter()
                .map(|l| Path::new(vec![NodeId::Bs, l.rx()]).expect("one-hop BS path"))
                .collect(),
        )
    }
}

impl SerialLink {
    pub fn rx(&self) -> NodeId {
        self.link.rx
    }
}

pub fn serial_unicast(topo: &Topology, demand: MulticastDemand, params: &ChannelParams) -> Result<SerialPlan> {
    if topo.group().is_empty() {
        return Err(EmsError::EmptyGroup);
    }
    let mut links = Vec::with_capacity(topo.group().len());
    for rx in topo.group_nodes() {
        let link = Link::new(NodeId::Bs, rx)?;
        let rate = link_rate(link, 0.0, params.p_max_mw, params, topo)?;
        links.push(SerialLink {
            link,
            rate,
            slots: slots_for_rate(link, rate, demand, params)?,
        });
    }
    Ok(SerialPlan {
        links,
        p_max_mw: params.p_max_mw,
        slot_s: params.slot_s,
        demand_bits: demand.bits(),
    })
}

/// Serial unicast passed through the same slot/power stage as the D2D schemes.
///
/// Each user keeps its own θ_u slots; the power is the lowest that fills them,
/// which is P_max up to the slot rounding slack.
pub fn fdmac_powered(plan: &SerialPlan, demand: MulticastDemand, params: &ChannelParams, topo: &Topology) -> Result<PoweredSchedule> {
    power_control(&serial_schedule(&plan.paths()), plan.t_serial(), demand, params, topo)
}

/// Same paths as EMS, one link per pairing.
pub fn d2d_serial(
    topo: &Topology,
    demand: MulticastDemand,
    params: &ChannelParams,
    h_max: usize,
) -> Result<(PathSet, PoweredSchedule)> {
    let serial = serial_unicast(topo, demand, params)?;
    d2d_serial_with(topo, demand, params, h_max, serial.t_serial())
}

pub(crate) fn d2d_serial_with(
    topo: &Topology,
    demand: MulticastDemand,
    params: &ChannelParams,
    h_max: usize,
    t_serial: u64,
) -> Result<(PathSet, PoweredSchedule)> {
    let paths = plan_paths(topo, h_max)?;
    let plan = power_control(&serial_schedule(&paths), t_serial, demand, params, topo)?;
    Ok((paths, plan))
}
