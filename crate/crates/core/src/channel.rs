//! Directional antenna pattern, path loss, interference and achievable rate.
//!
//! Intended links are always evaluated with both ends aligned (gain G0 at each
//! side). Off-boresight gains only enter through cross-link terms, where the
//! interferer's transmitter is aimed at its own receiver and the victim's
//! receiver is aimed at its own transmitter.

use std::collections::BTreeMap;

use crate::error::{EmsError, Result};
use crate::model::{db_to_linear, ChannelParams, Link, NodeId, Topology};

/// 802.15.3c reference pattern: Gaussian main lobe with a flat side-lobe floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainPattern {
    pub theta_3db: f64,
    pub g0_db: f64,
    pub gsl_db: f64,
    pub theta_ml: f64,
}

impl GainPattern {
    pub fn new(theta_3db: f64) -> Self {
        let half = (theta_3db / 2.0).to_radians();
        Self {
            theta_3db,
            g0_db: 10.0 * (1.6162 / half.sin()).powi(2).log10(),
            gsl_db: -0.4111 * theta_3db.ln() - 10.579,
            theta_ml: 2.6 * theta_3db,
        }
    }

    pub fn from_params(params: &ChannelParams) -> Self {
        Self::new(params.theta_3db_deg)
    }

    pub fn g0_linear(&self) -> f64 {
        db_to_linear(self.g0_db)
    }

    pub fn gsl_linear(&self) -> f64 {
        db_to_linear(self.gsl_db)
    }
}

/// Gain in dB at `theta` degrees off boresight.
pub fn antenna_gain(theta: f64, pattern: &GainPattern) -> Result<f64> {
    if !(0.0..=180.0).contains(&theta) {
        return Err(EmsError::AngleOutOfRange(theta));
    }
    if theta <= pattern.theta_ml / 2.0 {
        Ok(pattern.g0_db - 3.01 * (2.0 * theta / pattern.theta_3db).powi(2))
    } else {
        Ok(pattern.gsl_db)
    }
}

/// Angle at `from` between the beam aimed at `boresight_target` and the direction to `toward`.
pub fn off_boresight_angle(
    from: NodeId,
    boresight_target: NodeId,
    toward: NodeId,
    topo: &Topology,
) -> Result<f64> {
    let o = topo.position(from)?;
    let a = topo.position(boresight_target)?;
    let b = topo.position(toward)?;
    let (ax, ay) = (a.x - o.x, a.y - o.y);
    let (bx, by) = (b.x - o.x, b.y - o.y);
    let na = ax.hypot(ay);
    let nb = bx.hypot(by);
    if na == 0.0 {
        return Err(EmsError::CoincidentNodes(from, boresight_target));
    }
    if nb == 0.0 {
        return Err(EmsError::CoincidentNodes(from, toward));
    }
    let cos = ((ax * bx + ay * by) / (na * nb)).clamp(-1.0, 1.0);
    Ok(cos.acos().to_degrees())
}

/// Received power k0·Gt·Gr·l^(−τ)·pt in mW, gains given in dB.
pub fn received_power(
    tx: NodeId,
    rx: NodeId,
    gt_db: f64,
    gr_db: f64,
    pt: f64,
    params: &ChannelParams,
    topo: &Topology,
) -> Result<f64> {
    let l = topo.distance(tx, rx)?;
    if l == 0.0 {
        return Err(EmsError::CoincidentNodes(tx, rx));
    }
    Ok(params.k0 * db_to_linear(gt_db) * db_to_linear(gr_db) * l.powf(-params.path_loss_exp) * pt)
}

/// k0·G0²·l^(−τ) for an aligned link.
pub fn aligned_path_gain(link: Link, params: &ChannelParams, topo: &Topology) -> Result<f64> {
    let g0 = GainPattern::from_params(params).g0_db;
    received_power(link.tx, link.rx, g0, g0, 1.0, params, topo)
}

/// Active beam of each node in a pairing: every node aims at its link peer.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Beamset {
    boresight: BTreeMap<NodeId, NodeId>,
}

impl Beamset {
    pub fn from_links<'a>(links: impl IntoIterator<Item = &'a Link>) -> Result<Self> {
        let mut boresight = BTreeMap::new();
        let mut owner: BTreeMap<NodeId, Link> = BTreeMap::new();
        for &link in links {
            for (node, peer) in [(link.tx, link.rx), (link.rx, link.tx)] {
                if let Some(prev) = owner.insert(node, link) {
                    return Err(EmsError::AdjacentLinks(prev, link));
                }
                boresight.insert(node, peer);
            }
        }
        Ok(Self { boresight })
    }

    pub fn target(&self, node: NodeId) -> Option<NodeId> {
        self.boresight.get(&node).copied()
    }
}

/// Power received at `victim.rx` from `interferer.tx` transmitting at `pt`, with
/// the interferer aimed at its own receiver and the victim aimed at its own transmitter.
pub fn cross_power(
    interferer: Link,
    victim: Link,
    pt: f64,
    params: &ChannelParams,
    topo: &Topology,
) -> Result<f64> {
    if interferer.is_adjacent(&victim) {
        return Err(EmsError::AdjacentLinks(interferer, victim));
    }
    let pattern = GainPattern::from_params(params);
    let tx_angle = off_boresight_angle(interferer.tx, interferer.rx, victim.rx, topo)?;
    let rx_angle = off_boresight_angle(victim.rx, victim.tx, interferer.tx, topo)?;
    let gt = antenna_gain(tx_angle, &pattern)?;
    let gr = antenna_gain(rx_angle, &pattern)?;
    received_power(interferer.tx, victim.rx, gt, gr, pt, params, topo)
}

/// ρ·Σ cross-power at the victim's receiver; `interferers` pairs each concurrent link
/// with its transmit power in mW.
pub fn interference_power(
    victim: Link,
    interferers: &[(Link, f64)],
    beams: &Beamset,
    params: &ChannelParams,
    topo: &Topology,
) -> Result<f64> {
    let mut total = 0.0;
    for &(link, pt) in interferers {
        if link == victim || link.is_adjacent(&victim) {
            return Err(EmsError::AdjacentLinks(link, victim));
        }
        // The beamset must agree with the links' own alignment.
        if beams.target(link.tx).is_some_and(|t| t != link.rx)
            || beams.target(victim.rx).is_some_and(|t| t != victim.tx)
        {
            return Err(EmsError::AdjacentLinks(link, victim));
        }
        total += cross_power(link, victim, pt, params, topo)?;
    }
    Ok(params.mui_factor * total)
}

/// Achievable rate η·W·log2(1 + SINR) of an aligned link.
pub fn link_rate(
    link: Link,
    interference: f64,
    pt: f64,
    params: &ChannelParams,
    topo: &Topology,
) -> Result<f64> {
    let signal = aligned_path_gain(link, params, topo)? * pt;
    let sinr = signal / (params.noise_power_mw() + interference);
    Ok(params.eta * params.bandwidth_hz * sinr.ln_1p() / std::f64::consts::LN_2)
}
