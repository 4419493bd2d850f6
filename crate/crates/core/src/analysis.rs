//! Analytical cross-checks of the energy model and exact solvers for small
//! instances.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::baselines::{serial_unicast, SerialPlan};
use crate::channel::aligned_path_gain;
use crate::contention::{ContentionGraph, Graph};
use crate::error::{invalid, EmsError, Result};
use crate::model::{ChannelParams, Link, MulticastDemand, NodeId, Topology};
use crate::pathplan::{Path, PathSet};
use crate::power::{interference_at_pmax, slots_needed, PoweredSchedule};

/// x = D/(δΔηW).
pub fn spectral_load(delta: f64, demand: MulticastDemand, params: &ChannelParams) -> f64 {
    demand.bits() / (delta * params.slot_s * params.eta * params.bandwidth_hz)
}

/// E_u(δ) = γ·(2^x − 1)·δ.
pub fn energy_curve(gamma: f64, delta: f64, demand: MulticastDemand, params: &ChannelParams) -> f64 {
    gamma * (spectral_load(delta, demand, params) * LN_2).exp_m1() * delta
}

/// dE_u/dδ = γ·(2^x(1 − x·ln2) − 1).
pub fn energy_derivative(gamma: f64, delta: f64, demand: MulticastDemand, params: &ChannelParams) -> f64 {
    let y = spectral_load(delta, demand, params) * LN_2;
    let bracket = if y < 0.1 {
        // e^y(1 − y) − 1 = −Σ_{n≥2} yⁿ(n − 1)/n!, without the cancellation.
        let mut term = y; // yⁿ/n! at n = 1
        let mut sum = 0.0;
        for n in 2..30 {
            term *= y / n as f64;
            let add = term * (n - 1) as f64;
            sum += add;
            if add < 1e-18 * sum {
                break;
            }
        }
        -sum
    } else {
        y.exp() * (1.0 - y) - 1.0
    };
    gamma * bracket
}

/// γ = (N0W + (|V^k| − 1)σP_max)·Δ / (k0·Gt·Gr·l^−τ).
pub fn gamma(link: Link, pairing_size: usize, params: &ChannelParams, topo: &Topology) -> Result<f64> {
    let g = aligned_path_gain(link, params, topo)?;
    let others = pairing_size.saturating_sub(1) as f64;
    Ok((params.noise_power_mw() + others * params.sigma * params.p_max_mw) * params.slot_s / g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeSample {
    pub delta: f64,
    pub x: f64,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeCheck {
    pub gamma: f64,
    pub samples: Vec<DerivativeSample>,
    /// Largest analytic/numeric mismatch.
    pub max_rel_err: f64,
    pub all_negative: bool,
    pub strictly_decreasing: bool,
}

impl DerivativeCheck {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_rel_err <= tol && self.all_negative && self.strictly_decreasing
    }
}

/// Analytic derivative against a five-point central difference of E_u(δ) on a
/// singleton pairing of `link`.
pub fn derivative_check(
    link: Link,
    params: &ChannelParams,
    demand: MulticastDemand,
    topo: &Topology,
    deltas: &[u64],
) -> Result<DerivativeCheck> {
    if deltas.is_empty() || deltas.contains(&0) {
        return Err(invalid("deltas", "need a non-empty set of positive slot counts"));
    }
    let g = gamma(link, 1, params, topo)?;
    let mut sorted = deltas.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let e = |d: f64| energy_curve(g, d, demand, params);
    let mut samples = Vec::with_capacity(sorted.len());
    for &d in &sorted {
        let d = d as f64;
        let h = 1e-3 * d;
        let numeric = (-e(d + 2.0 * h) + 8.0 * e(d + h) - 8.0 * e(d - h) + e(d - 2.0 * h)) / (12.0 * h);
        let analytic = energy_derivative(g, d, demand, params);
        samples.push(DerivativeSample {
            delta: d,
            x: spectral_load(d, demand, params),
            analytic,
            numeric,
            rel_err: ((analytic - numeric) / analytic).abs(),
            energy: e(d),
        });
    }
    Ok(DerivativeCheck {
        gamma: g,
        max_rel_err: samples.iter().map(|s| s.rel_err).fold(0.0, f64::max),
        all_negative: samples.iter().all(|s| s.analytic < 0.0),
        strictly_decreasing: samples.windows(2).all(|w| w[1].energy < w[0].energy),
        samples,
    })
}

/// Per-user comparison between EMS and serial unicast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserBound {
    pub link: Link,
    pub pairing: usize,
    pub pairing_size: usize,
    pub delta: u64,
    pub clamped: bool,
    /// I_u with co-pairing links at P_max, mW.
    pub interference_mw: f64,
    /// Serial energy P_max·D/R_αu, mJ.
    pub serial_mj: f64,
    /// P_t^u·δ^k·Δ from the plan, mJ.
    pub actual_mj: f64,
    /// Closed-form energy with I_u at P_max, mJ.
    pub closed_form_mj: f64,
    /// Upper bound with each interferer replaced by σ·P_max, mJ.
    pub bound_mj: f64,
    pub gamma: f64,
    /// Every co-pairing interferer stays below σ·P_max at the receiver.
    pub threshold_condition: bool,
    /// Right-hand side of the I_u tolerance, mW.
    pub tolerance_mw: f64,
    /// I_u below the tolerance, noise omitted.
    pub tolerance_noise_free_ok: bool,
    /// N0W + I_u below the tolerance; equivalent to actual < serial.
    pub tolerance_exact_ok: bool,
    /// Low-SINR linear approximation D·ln2·(N0W + I_u)/(ηW·g), mJ.
    pub linear_approx_mj: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub users: Vec<UserBound>,
}

impl BoundReport {
    /// Users where the bound is claimed (threshold condition, no clamp) but fails.
    pub fn bound_violations(&self, rel_tol: f64) -> Vec<&UserBound> {
        self.users
            .iter()
            .filter(|u| u.threshold_condition && !u.clamped && u.actual_mj > u.bound_mj * (1.0 + rel_tol))
            .collect()
    }

    pub fn clamped(&self) -> impl Iterator<Item = &UserBound> {
        self.users.iter().filter(|u| u.clamped)
    }
}

pub fn per_user_energies(
    plan: &PoweredSchedule,
    baseline: &SerialPlan,
    demand: MulticastDemand,
    params: &ChannelParams,
    topo: &Topology,
) -> Result<BoundReport> {
    let serial_by_user: BTreeMap<NodeId, f64> = baseline
        .links
        .iter()
        .map(|l| (l.rx(), baseline.user_energy_continuous(l)))
        .collect();
    let mut users = Vec::new();
    for (p, l) in plan.links() {
        let link = l.link;
        let members = p.link_set();
        let g = aligned_path_gain(link, params, topo)?;
        let n0w = params.noise_power_mw();
        let delta = p.slots;
        let duration = delta as f64 * params.slot_s;
        let growth = (spectral_load(delta as f64, demand, params) * LN_2).exp_m1();
        let interference = interference_at_pmax(link, &members, params, topo)?;
        let mut threshold_condition = true;
        for &other in members.iter().filter(|&&o| o != link) {
            let single = interference_at_pmax(link, &[link, other], params, topo)?;
            if single >= params.sigma * params.p_max_mw {
                threshold_condition = false;
            }
        }
        let serial_mj = *serial_by_user
            .get(&link.rx)
            .ok_or(EmsError::UnknownNode(link.rx))?;
        let rate_bs = baseline
            .links
            .iter()
            .find(|s| s.rx() == link.rx)
            .map(|s| s.rate)
            .ok_or(EmsError::UnknownNode(link.rx))?;
        let tolerance_mw = demand.bits() * params.p_max_mw * g / (rate_bs * growth * duration);
        let gam = gamma(link, members.len(), params, topo)?;
        users.push(UserBound {
            link,
            pairing: p.index,
            pairing_size: members.len(),
            delta,
            clamped: l.power.clamped,
            interference_mw: interference,
            serial_mj,
            actual_mj: l.power.power_mw * duration,
            closed_form_mj: growth * (n0w + interference) / g * duration,
            bound_mj: gam * growth * delta as f64,
            gamma: gam,
            threshold_condition,
            tolerance_mw,
            tolerance_noise_free_ok: interference < tolerance_mw,
            tolerance_exact_ok: n0w + interference < tolerance_mw,
            linear_approx_mj: demand.bits() * LN_2 * (n0w + interference) / (params.eta * params.bandwidth_hz * g),
        });
    }
    Ok(BoundReport { users })
}

/// Least-squares line through `(xs, ys)`: `(slope, intercept, r²)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(invalid("xs", "need at least two paired samples"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(invalid("xs", "all abscissae are equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok((slope, intercept, r2))
}

/// Largest vertex count accepted by [`exact_mis`].
pub const EXACT_MIS_CAP: usize = 20;

/// Maximum independent set by branch and bound; lexicographically smallest among maxima.
pub fn exact_mis(graph: &Graph) -> Result<Vec<usize>> {
    let n = graph.len();
    if n > EXACT_MIS_CAP {
        return Err(EmsError::InstanceTooLarge {
            what: "vertices",
            got: n,
            cap: EXACT_MIS_CAP,
        });
    }
    let nbr: Vec<u32> = (0..n)
        .map(|v| graph.neighbors(v).iter().fold(0u32, |m, &u| m | 1 << u))
        .collect();
    let mut best = 0u32;
    branch(&nbr, if n == 0 { 0 } else { (1u64 << n) as u32 - 1 }, 0, &mut best);
    Ok((0..n).filter(|&v| best >> v & 1 == 1).collect())
}

fn branch(nbr: &[u32], cand: u32, chosen: u32, best: &mut u32) {
    if cand == 0 {
        let better = chosen.count_ones() > best.count_ones()
            || (chosen.count_ones() == best.count_ones() && lex_smaller(chosen, *best));
        if better {
            *best = chosen;
        }
        return;
    }
    if chosen.count_ones() + cand.count_ones() < best.count_ones() {
        return;
    }
    let v = cand.trailing_zeros() as usize;
    branch(nbr, cand & !(1 << v) & !nbr[v], chosen | 1 << v, best);
    // Excluding an isolated candidate can never help.
    if nbr[v] & cand != 0 {
        branch(nbr, cand & !(1 << v), chosen, best);
    }
}

/// Sorted-index comparison of two vertex sets of equal size.
fn lex_smaller(a: u32, b: u32) -> bool {
    let diff = a ^ b;
    diff != 0 && a & (diff & diff.wrapping_neg()) != 0
}

pub fn exact_mis_links(graph: &ContentionGraph) -> Result<Vec<Link>> {
    Ok(exact_mis(graph.graph())?
        .into_iter()
        .map(|i| graph.links()[i])
        .collect())
}

/// Size caps of [`exhaustive_schedule`].
pub const ORACLE_MAX_USERS: usize = 4;
pub const ORACLE_MAX_HOPS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    /// mJ.
    pub energy_mj: f64,
    pub paths: PathSet,
    pub pairings: Vec<Vec<Link>>,
    pub slots: Vec<u64>,
    pub t_serial: u64,
    pub structures: usize,
    pub candidates: usize,
}

/// Per-link constants of E(δ) inside a fixed pairing.
#[derive(Debug, Clone)]
struct PairingCost {
    /// (N0W + I_u)/g per member.
    coeffs: Vec<f64>,
    /// Smallest δ at which no member exceeds P_max.
    min_slots: u64,
}

impl PairingCost {
    fn energy(&self, delta: u64, demand: MulticastDemand, params: &ChannelParams) -> f64 {
        let growth = (spectral_load(delta as f64, demand, params) * LN_2).exp_m1();
        let duration = delta as f64 * params.slot_s;
        self.coeffs.iter().map(|c| growth * c * duration).sum()
    }
}

/// Minimum-energy schedule over every chain path set within `hop_cap`, every
/// precedence-respecting pairing sequence, and every integral split of T_s.
///
/// Powers follow the rate-matched rule with co-pairing links at P_max;
/// each split gives every pairing at least the slots it needs at P_max.
pub fn exhaustive_schedule(
    topo: &Topology,
    demand: MulticastDemand,
    params: &ChannelParams,
    hop_cap: usize,
) -> Result<OracleSolution> {
    let users: Vec<NodeId> = topo.group_nodes().collect();
    if users.is_empty() {
        return Err(EmsError::EmptyGroup);
    }
    if users.len() > ORACLE_MAX_USERS {
        return Err(EmsError::InstanceTooLarge {
            what: "group size",
            got: users.len(),
            cap: ORACLE_MAX_USERS,
        });
    }
    if hop_cap == 0 || hop_cap > ORACLE_MAX_HOPS {
        return Err(EmsError::InstanceTooLarge {
            what: "hop cap",
            got: hop_cap,
            cap: ORACLE_MAX_HOPS,
        });
    }
    let t_serial = serial_unicast(topo, demand, params)?.t_serial();

    let mut structures = Vec::new();
    chain_sets(&users, 0, &mut Vec::new(), hop_cap, &mut structures);

    let mut costs: BTreeMap<Vec<Link>, PairingCost> = BTreeMap::new();
    let mut best: Option<OracleSolution> = None;
    let mut candidates = 0;
    for chains in &structures {
        let per_chain: Vec<Vec<Link>> = chains
            .iter()
            .map(|c| {
                let mut nodes = vec![NodeId::Bs];
                nodes.extend(c);
                Path::new(nodes).map(|p| p.links())
            })
            .collect::<Result<_>>()?;
        let mut sequences = BTreeSet::new();
        pairing_sequences(&per_chain, &mut vec![0; per_chain.len()], &mut Vec::new(), &mut sequences);
        for seq in sequences {
            candidates += 1;
            for pairing in &seq {
                if !costs.contains_key(pairing) {
                    costs.insert(pairing.clone(), pairing_cost(pairing, demand, params, topo)?);
                }
            }
            let pc: Vec<&PairingCost> = seq.iter().map(|p| &costs[p]).collect();
            let Some(slots) = convex_split(&pc, t_serial, demand, params) else { continue };
            let energy: f64 = pc.iter().zip(&slots).map(|(c, &d)| c.energy(d, demand, params)).sum();
            if best.as_ref().is_none_or(|b| energy < b.energy_mj) {
                let mut paths: Vec<Path> = chains
                    .iter()
                    .map(|c| Path::new(std::iter::once(NodeId::Bs).chain(c.iter().copied()).collect()))
                    .collect::<Result<_>>()?;
                paths.sort_by(|a, b| a.nodes().cmp(b.nodes()));
                best = Some(OracleSolution {
                    energy_mj: energy,
                    paths: PathSet::new(paths),
                    pairings: seq.clone(),
                    slots,
                    t_serial,
                    structures: 0,
                    candidates: 0,
                });
            }
        }
    }
    let mut best = best.ok_or(EmsError::TooFewSlots {
        pairings: users.len(),
        slots: t_serial,
    })?;
    best.structures = structures.len();
    best.candidates = candidates;
    Ok(best)
}

/// Every set of disjoint ordered chains covering `users[i..]`, each at most `cap` long.
fn chain_sets(users: &[NodeId], i: usize, current: &mut Vec<Vec<NodeId>>, cap: usize, out: &mut Vec<Vec<Vec<NodeId>>>) {
    if i == users.len() {
        out.push(current.clone());
        return;
    }
    let u = users[i];
    current.push(vec![u]);
    chain_sets(users, i + 1, current, cap, out);
    current.pop();
    for c in 0..current.len() {
        if current[c].len() >= cap {
            continue;
        }
        for pos in 0..=current[c].len() {
            current[c].insert(pos, u);
            chain_sets(users, i + 1, current, cap, out);
            current[c].remove(pos);
        }
    }
}

/// Canonical (sorted) pairing multisets reachable by activating non-adjacent frontier links.
fn pairing_sequences(
    chains: &[Vec<Link>],
    cursor: &mut Vec<usize>,
    prefix: &mut Vec<Vec<Link>>,
    out: &mut BTreeSet<Vec<Vec<Link>>>,
) {
    let frontier: Vec<usize> = (0..chains.len()).filter(|&c| cursor[c] < chains[c].len()).collect();
    if frontier.is_empty() {
        let mut canon = prefix.clone();
        canon.sort();
        out.insert(canon);
        return;
    }
    for mask in 1u32..(1 << frontier.len()) {
        let picked: Vec<usize> = (0..frontier.len()).filter(|&b| mask >> b & 1 == 1).map(|b| frontier[b]).collect();
        let mut links: Vec<Link> = picked.iter().map(|&c| chains[c][cursor[c]]).collect();
        let independent = links
            .iter()
            .enumerate()
            .all(|(i, a)| links[i + 1..].iter().all(|b| !a.is_adjacent(b)));
        if !independent {
            continue;
        }
        links.sort();
        for &c in &picked {
            cursor[c] += 1;
        }
        prefix.push(links);
        pairing_sequences(chains, cursor, prefix, out);
        prefix.pop();
        for &c in &picked {
            cursor[c] -= 1;
        }
    }
}

fn pairing_cost(pairing: &[Link], demand: MulticastDemand, params: &ChannelParams, topo: &Topology) -> Result<PairingCost> {
    let mut coeffs = Vec::with_capacity(pairing.len());
    let mut min_slots = 1;
    for &l in pairing {
        let g = aligned_path_gain(l, params, topo)?;
        let i = interference_at_pmax(l, pairing, params, topo)?;
        coeffs.push((params.noise_power_mw() + i) / g);
        min_slots = min_slots.max(slots_needed(l, pairing, demand, params, topo)?);
    }
    Ok(PairingCost { coeffs, min_slots })
}

/// Integral split of `total` slots with each pairing at or above its minimum,
/// minimising the summed convex energies. `None` when the minima do not fit.
fn convex_split(costs: &[&PairingCost], total: u64, demand: MulticastDemand, params: &ChannelParams) -> Option<Vec<u64>> {
    let floor: u64 = costs.iter().map(|c| c.min_slots).sum();
    if floor > total {
        return None;
    }
    let gain = |k: usize, d: u64| costs[k].energy(d, demand, params) - costs[k].energy(d + 1, demand, params);
    // Slots a pairing takes while its marginal gain exceeds λ.
    let take = |k: usize, lambda: f64| -> u64 {
        let (mut lo, mut hi) = (costs[k].min_slots, total);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if gain(k, mid) > lambda {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let sum_at = |lambda: f64| -> u64 { (0..costs.len()).map(|k| take(k, lambda)).sum() };

    // Smallest λ (over a bracket) whose allocation fits; the remainder is then
    // handed out one slot at a time to the largest marginal gains.
    let hi_lambda = (0..costs.len()).map(|k| gain(k, costs[k].min_slots)).fold(0.0, f64::max);
    let (mut lo, mut hi) = (0.0, hi_lambda.max(f64::MIN_POSITIVE));
    let mut slots: Vec<u64> = if sum_at(0.0) <= total {
        (0..costs.len()).map(|k| take(k, 0.0)).collect()
    } else {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if sum_at(mid) > total {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (0..costs.len()).map(|k| take(k, hi)).collect()
    };
    let mut left = total - slots.iter().sum::<u64>();
    while left > 0 {
        let k = (0..costs.len())
            .max_by(|&a, &b| gain(a, slots[a]).total_cmp(&gain(b, slots[b])).then(b.cmp(&a)))
            .expect("at least one pairing");
        slots[k] += 1;
        left -= 1;
    }
    Some(slots)
}
