//! Domain types shared by every stage of the pipeline.
//!
//! Units are fixed throughout the crate: powers in mW, rates in bit/s,
//! distances in meters, times in seconds, angles in degrees. Decibels only
//! appear at configuration and report boundaries (see [`dbm_to_mw`]).

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, EmsError, Result};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// UEs closer than this to the BS are re-drawn during placement.
pub const MIN_BS_SEPARATION_M: f64 = 1e-6;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    db_to_linear(dbm)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    linear_to_db(mw)
}

/// A node of the small cell: the single base station or a user indexed from 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeId {
    Bs,
    Ue(usize),
}

impl NodeId {
    pub fn is_bs(self) -> bool {
        matches!(self, NodeId::Bs)
    }

    pub fn ue_index(self) -> Option<usize> {
        match self {
            NodeId::Bs => None,
            NodeId::Ue(i) => Some(i),
        }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Bs => write!(f, "BS"),
            NodeId::Ue(i) => write!(f, "u{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Directional link from `tx` (the serving node s_u) to `rx` (the served user u).
///
/// Ordering is lexicographic on `(tx, rx)`, which is the tie-break order used by
/// the scheduler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Link {
    pub tx: NodeId,
    pub rx: NodeId,
}

impl Link {
    pub fn new(tx: NodeId, rx: NodeId) -> Result<Self> {
        if tx == rx {
            return Err(invalid("link", format!("{tx} cannot transmit to itself")));
        }
        if rx.is_bs() {
            return Err(invalid("link", "the BS is never a multicast receiver"));
        }
        Ok(Self { tx, rx })
    }

    /// Links sharing any endpoint can never be active in the same pairing.
    pub fn is_adjacent(&self, other: &Link) -> bool {
        self.tx == other.tx || self.tx == other.rx || self.rx == other.tx || self.rx == other.rx
    }

    pub fn is_d2d(&self) -> bool {
        !self.tx.is_bs()
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.tx, self.rx)
    }
}

/// Positions of the BS and users plus the multicast group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    bs: Point,
    ues: Vec<Point>,
    region_side: f64,
    group: Vec<usize>,
    seed: Option<u64>,
}

impl Topology {
    /// Hand-built layout. The group is every listed user; the BS may sit anywhere.
    pub fn from_positions(bs: Point, ues: Vec<Point>) -> Result<Self> {
        if ues.is_empty() {
            return Err(EmsError::EmptyGroup);
        }
        for (i, p) in ues.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite()) {
                return Err(invalid("position", format!("u{i} is not finite")));
            }
            if p.distance(bs) < MIN_BS_SEPARATION_M {
                return Err(EmsError::CoincidentNodes(NodeId::Bs, NodeId::Ue(i)));
            }
        }
        let extent = ues
            .iter()
            .chain(std::iter::once(&bs))
            .fold(0f64, |m, p| m.max(p.x.abs()).max(p.y.abs()));
        let group = (0..ues.len()).collect();
        Ok(Self {
            bs,
            ues,
            region_side: extent,
            group,
            seed: None,
        })
    }

    pub fn bs(&self) -> Point {
        self.bs
    }

    pub fn ue_positions(&self) -> &[Point] {
        &self.ues
    }

    pub fn region_side(&self) -> f64 {
        self.region_side
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Multicast group members, ascending.
    pub fn group(&self) -> &[usize] {
        &self.group
    }

    pub fn group_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.group.iter().map(|&i| NodeId::Ue(i))
    }

    pub fn position(&self, node: NodeId) -> Result<Point> {
        match node {
            NodeId::Bs => Ok(self.bs),
            NodeId::Ue(i) => self.ues.get(i).copied().ok_or(EmsError::UnknownNode(node)),
        }
    }

    pub fn distance(&self, a: NodeId, b: NodeId) -> Result<f64> {
        Ok(self.position(a)?.distance(self.position(b)?))
    }
}

/// Uniformly places `group_size` users over a square with the BS at its center.
pub fn build_topology(region_side: f64, group_size: usize, seed: u64) -> Result<Topology> {
    if !(region_side > 0.0 && region_side.is_finite()) {
        return Err(invalid("region_side", format!("must be positive, got {region_side}")));
    }
    if group_size == 0 {
        return Err(EmsError::EmptyGroup);
    }
    let bs = Point::new(region_side / 2.0, region_side / 2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ues = Vec::with_capacity(group_size);
    while ues.len() < group_size {
        let p = Point::new(rng.gen::<f64>() * region_side, rng.gen::<f64>() * region_side);
        if p.distance(bs) >= MIN_BS_SEPARATION_M {
            ues.push(p);
        }
    }
    Ok(Topology {
        bs,
        ues,
        region_side,
        group: (0..group_size).collect(),
        seed: Some(seed),
    })
}

/// Radio constants of the cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    pub p_max_mw: f64,
    pub bandwidth_hz: f64,
    pub noise_psd_mw_per_hz: f64,
    /// Path loss exponent τ.
    pub path_loss_exp: f64,
    /// Slot duration Δ.
    pub slot_s: f64,
    /// Multi-user interference factor ρ.
    pub mui_factor: f64,
    pub theta_3db_deg: f64,
    /// Transceiver efficiency η.
    pub eta: f64,
    /// Contention threshold σ on cross-link power normalised by P_max.
    pub sigma: f64,
    /// Path-gain coefficient k0.
    pub k0: f64,
    pub carrier_freq_hz: f64,
}

/// Default path-gain coefficient.
///
/// Free-space (λ/4π)² at 60 GHz puts a 35-user serial unicast at about 1.1 s
/// per gigabit; this value, 76.6 dB lower, brings the mean serial time of that
/// setting to 7.94 s. It is fitted on serial unicast alone, independent of any
/// scheduling scheme.
pub const CALIBRATED_K0: f64 = 3.44e-15;

impl ChannelParams {
    pub const DEFAULT_CARRIER_HZ: f64 = 60e9;

    /// Defaults with the free-space coefficient (λ/4π)² in place of [`CALIBRATED_K0`].
    pub fn free_space() -> Self {
        Self {
            k0: Self::free_space_k0(Self::DEFAULT_CARRIER_HZ),
            ..Self::default()
        }
    }

    /// Free-space coefficient (λ/4π)² for a given carrier.
    pub fn free_space_k0(carrier_freq_hz: f64) -> f64 {
        let lambda = SPEED_OF_LIGHT / carrier_freq_hz;
        (lambda / (4.0 * std::f64::consts::PI)).powi(2)
    }

    pub fn noise_power_mw(&self) -> f64 {
        self.noise_psd_mw_per_hz * self.bandwidth_hz
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("p_max_mw", self.p_max_mw),
            ("bandwidth_hz", self.bandwidth_hz),
            ("noise_psd_mw_per_hz", self.noise_psd_mw_per_hz),
            ("path_loss_exp", self.path_loss_exp),
            ("slot_s", self.slot_s),
            ("mui_factor", self.mui_factor),
            ("theta_3db_deg", self.theta_3db_deg),
            ("eta", self.eta),
            ("k0", self.k0),
            ("carrier_freq_hz", self.carrier_freq_hz),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be strictly positive, got {v}")));
            }
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(invalid("sigma", format!("must be non-negative, got {}", self.sigma)));
        }
        if self.eta >= 1.0 {
            return Err(invalid("eta", format!("must lie in (0, 1), got {}", self.eta)));
        }
        // theta_ml = 2.6 theta_3dB must fit in the half-plane for the pattern to make sense.
        if self.theta_3db_deg >= 180.0 {
            return Err(invalid("theta_3db_deg", "must be below 180 degrees"));
        }
        Ok(())
    }
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            p_max_mw: dbm_to_mw(30.0),
            bandwidth_hz: 2.16e9,
            // -134 dBm/MHz
            noise_psd_mw_per_hz: 10f64.powf(-13.4) / 1e6,
            path_loss_exp: 2.0,
            slot_s: 18e-6,
            mui_factor: 1.0,
            theta_3db_deg: 15.0,
            eta: 0.5,
            sigma: 1e-12,
            k0: CALIBRATED_K0,
            carrier_freq_hz: Self::DEFAULT_CARRIER_HZ,
        }
    }
}

/// Multicast payload D in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MulticastDemand {
    bits: f64,
}

impl MulticastDemand {
    pub fn new(bits: f64) -> Result<Self> {
        if !(bits > 0.0 && bits.is_finite()) {
            return Err(invalid("demand", format!("must be positive, got {bits}")));
        }
        Ok(Self { bits })
    }

    pub fn bits(self) -> f64 {
        self.bits
    }
}

impl Default for MulticastDemand {
    fn default() -> Self {
        Self { bits: 1e9 }
    }
}

/// Default hop cap H_m.
pub const DEFAULT_H_MAX: usize = 6;
/// Default multicast group size.
pub const DEFAULT_GROUP_SIZE: usize = 15;
/// Default square side in meters.
pub const DEFAULT_REGION_SIDE_M: f64 = 20.0;
