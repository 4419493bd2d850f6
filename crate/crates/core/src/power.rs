//! Slot allocation across pairings and per-link transmit power control.
//!
//! Every pairing first gets its slot requirement at full power (the slowest
//! member decides). The serial slot budget T_s is then split in proportion to
//! those requirements, the last pairing taking the remainder, and each link
//! transmits for the entire pairing at the lowest power that still delivers
//! the payload, assuming its co-pairing peers stay at P_max.

use serde::{Deserialize, Serialize};

use crate::channel::{aligned_path_gain, interference_power, link_rate, Beamset};
use crate::error::{EmsError, Result};
use crate::model::{mw_to_dbm, ChannelParams, Link, MulticastDemand, Topology};
use crate::scheduler::Schedule;

/// Interference at `link`'s receiver when every other member of `pairing` sends at P_max.
pub fn interference_at_pmax(link: Link, pairing: &[Link], params: &ChannelParams, topo: &Topology) -> Result<f64> {
    let beams = Beamset::from_links(pairing)?;
    let peers: Vec<(Link, f64)> = pairing
        .iter()
        .filter(|&&l| l != link)
        .map(|&l| (l, params.p_max_mw))
        .collect();
    interference_power(link, &peers, &beams, params, topo)
}

/// Rate of `link` with itself and all co-pairing links at P_max.
pub fn rate_at_pmax(link: Link, pairing: &[Link], params: &ChannelParams, topo: &Topology) -> Result<f64> {
    if !pairing.contains(&link) {
        return Err(EmsError::InvalidParameter {
            name: "pairing",
            reason: format!("{link} is not a member"),
        });
    }
    let i = interference_at_pmax(link, pairing, params, topo)?;
    link_rate(link, i, params.p_max_mw, params, topo)
}

/// ceil(D / (R·Δ)): slots a link needs at `rate` to carry the payload.
pub fn slots_for_rate(link: Link, rate: f64, demand: MulticastDemand, params: &ChannelParams) -> Result<u64> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(EmsError::InfeasibleLink(link));
    }
    let q = demand.bits() / (rate * params.slot_s);
    // A quotient that is integral up to rounding noise is not bumped to the next slot.
    let nearest = q.round();
    let slots = if (q - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        q.ceil()
    };
    Ok(slots.max(1.0) as u64)
}

/// Slot requirement T_u^k of `link` inside `pairing`.
pub fn slots_needed(
    link: Link,
    pairing: &[Link],
    demand: MulticastDemand,
    params: &ChannelParams,
    topo: &Topology,
) -> Result<u64> {
    slots_for_rate(link, rate_at_pmax(link, pairing, params, topo)?, demand, params)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotAllocation {
    pub slots: Vec<u64>,
    /// Pairings whose proportional share rounded to zero and were lifted to one slot.
    pub promoted: usize,
}

/// Proportional split of `t_serial` slots over the pairing requirements.
///
/// All but the last pairing get floor(T^k / ΣT · T_s); the last takes what remains.
/// A zero share is raised to one slot, taken from the largest allocation.
pub fn allocate_slots(requirements: &[u64], t_serial: u64) -> Result<SlotAllocation> {
    let k = requirements.len();
    if k == 0 {
        return Ok(SlotAllocation {
            slots: Vec::new(),
            promoted: 0,
        });
    }
    if requirements.contains(&0) {
        return Err(EmsError::InvalidParameter {
            name: "requirements",
            reason: "every pairing needs at least one slot".into(),
        });
    }
    if t_serial < k as u64 {
        return Err(EmsError::TooFewSlots {
            pairings: k,
            slots: t_serial,
        });
    }
    let total: u128 = requirements.iter().map(|&t| t as u128).sum();
    let mut slots: Vec<u64> = requirements[..k - 1]
        .iter()
        .map(|&t| (t as u128 * t_serial as u128 / total) as u64)
        .collect();
    let used: u64 = slots.iter().sum();
    slots.push(t_serial - used);

    let mut promoted = 0;
    while let Some(zero) = slots.iter().position(|&s| s == 0) {
        let donor = (0..k).max_by_key(|&i| (slots[i], std::cmp::Reverse(i))).expect("k > 0");
        slots[donor] -= 1;
        slots[zero] = 1;
        promoted += 1;
    }
    Ok(SlotAllocation { slots, promoted })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkPower {
    pub power_mw: f64,
    /// R'' = D / (δ·Δ).
    pub required_rate: f64,
    pub interference_pmax_mw: f64,
    /// The rate-matched power exceeded P_max and was capped.
    pub clamped: bool,
    /// Bits left undelivered after capping.
    pub shortfall_bits: f64,
}

/// Transmit power for `link` to deliver the payload over `delta_k` slots.
pub fn link_power(
    link: Link,
    pairing: &[Link],
    delta_k: u64,
    demand: MulticastDemand,
    params: &ChannelParams,
    topo: &Topology,
) -> Result<LinkPower> {
    if delta_k == 0 {
        return Err(EmsError::InvalidParameter {
            name: "delta_k",
            reason: "a pairing needs at least one slot".into(),
        });
    }
    let interference = interference_at_pmax(link, pairing, params, topo)?;
    let gain = aligned_path_gain(link, params, topo)?;
    let duration = delta_k as f64 * params.slot_s;
    let required_rate = demand.bits() / duration;
    let spectral = required_rate / (params.eta * params.bandwidth_hz);
    let power = (spectral * std::f64::consts::LN_2).exp_m1() * (params.noise_power_mw() + interference) / gain;
    if power > params.p_max_mw {
        let delivered = link_rate(link, interference, params.p_max_mw, params, topo)? * duration;
        Ok(LinkPower {
            power_mw: params.p_max_mw,
            required_rate,
            interference_pmax_mw: interference,
            clamped: true,
            shortfall_bits: (demand.bits() - delivered).max(0.0),
        })
    } else {
        Ok(LinkPower {
            power_mw: power,
            required_rate,
            interference_pmax_mw: interference,
            clamped: false,
            shortfall_bits: 0.0,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoweredLink {
    pub link: Link,
    pub rate_at_pmax: f64,
    /// T_u^k.
    pub slots_needed: u64,
    #[serde(flatten)]
    pub power: LinkPower,
}

impl PoweredLink {
    pub fn power_dbm(&self) -> f64 {
        mw_to_dbm(self.power.power_mw)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoweredPairing {
    pub index: usize,
    pub links: Vec<PoweredLink>,
    /// T^k, the largest member requirement.
    pub requirement: u64,
    /// δ^k.
    pub slots: u64,
}

impl PoweredPairing {
    pub fn link_set(&self) -> Vec<Link> {
        self.links.iter().map(|l| l.link).collect()
    }
}

/// Schedule with slot counts and per-link powers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoweredSchedule {
    pub pairings: Vec<PoweredPairing>,
    /// T_s, the serial-unicast slot budget.
    pub t_serial: u64,
    pub promoted_pairings: usize,
    /// Δ.
    pub slot_s: f64,
}

impl PoweredSchedule {
    pub fn slots_used(&self) -> u64 {
        self.pairings.iter().map(|p| p.slots).sum()
    }

    pub fn links(&self) -> impl Iterator<Item = (&PoweredPairing, &PoweredLink)> {
        self.pairings.iter().flat_map(|p| p.links.iter().map(move |l| (p, l)))
    }

    pub fn clamped_links(&self) -> usize {
        self.links().filter(|(_, l)| l.power.clamped).count()
    }

    pub fn shortfall_bits(&self) -> f64 {
        self.links().map(|(_, l)| l.power.shortfall_bits).sum()
    }

    pub fn schedule(&self) -> Schedule {
        Schedule {
            pairings: self
                .pairings
                .iter()
                .map(|p| crate::scheduler::Pairing {
                    index: p.index,
                    links: p.link_set(),
                })
                .collect(),
        }
    }

    /// Audit record: `pairing,slots,link,power_dbm,required_rate_bps` per link.
    pub fn to_audit_csv(&self) -> String {
        let mut out = String::from("pairing,slots,link,power_dbm,required_rate_bps,clamped\n");
        for (p, l) in self.links() {
            out.push_str(&format!(
                "{},{},{},{:.6},{:.6e},{}\n",
                p.index,
                p.slots,
                l.link,
                l.power_dbm(),
                l.power.required_rate,
                l.power.clamped
            ));
        }
        out
    }
}

/// Slot allocation and power control over a finished schedule.
pub fn power_control(
    schedule: &Schedule,
    t_serial: u64,
    demand: MulticastDemand,
    params: &ChannelParams,
    topo: &Topology,
) -> Result<PoweredSchedule> {
    let mut staged = Vec::with_capacity(schedule.len());
    for p in &schedule.pairings {
        let mut members = Vec::with_capacity(p.links.len());
        for &link in &p.links {
            let rate = rate_at_pmax(link, &p.links, params, topo)?;
            members.push((link, rate, slots_for_rate(link, rate, demand, params)?));
        }
        let requirement = members.iter().map(|m| m.2).max().unwrap_or(1);
        staged.push((p, members, requirement));
    }
    let requirements: Vec<u64> = staged.iter().map(|s| s.2).collect();
    let alloc = allocate_slots(&requirements, t_serial)?;

    let mut pairings = Vec::with_capacity(staged.len());
    for ((p, members, requirement), &slots) in staged.into_iter().zip(&alloc.slots) {
        let mut links = Vec::with_capacity(members.len());
        for (link, rate, needed) in members {
            links.push(PoweredLink {
                link,
                rate_at_pmax: rate,
                slots_needed: needed,
                power: link_power(link, &p.links, slots, demand, params, topo)?,
            });
        }
        pairings.push(PoweredPairing {
            index: p.index,
            links,
            requirement,
            slots,
        });
    }
    Ok(PoweredSchedule {
        pairings,
        t_serial,
        promoted_pairings: alloc.promoted,
        slot_s: params.slot_s,
    })
}
