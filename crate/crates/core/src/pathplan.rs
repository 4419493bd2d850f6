//! Multi-hop D2D path planning by nearest-neighbour extension.
//!
//! The planner keeps the set of path tails that may still serve another user
//! (initially only the BS). Each round it picks the globally closest
//! (tail, unallocated user) pair: a BS tail opens a new path, a UE tail extends
//! its path and retires. The new user becomes a tail while its path is shorter
//! than the hop cap.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::audit::Constraint;
use crate::error::{invalid, EmsError, Result};
use crate::model::{Link, NodeId, Topology};

/// Ordered node sequence beginning at the BS.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Path {
    nodes: Vec<NodeId>,
}

impl Path {
    pub fn new(nodes: Vec<NodeId>) -> Result<Self> {
        if nodes.first() != Some(&NodeId::Bs) {
            return Err(invalid("path", "must start at the BS"));
        }
        if nodes.len() < 2 {
            return Err(invalid("path", "must contain at least one hop"));
        }
        let distinct: BTreeSet<_> = nodes.iter().collect();
        if distinct.len() != nodes.len() {
            return Err(invalid("path", "repeats a node"));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn hops(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn last(&self) -> NodeId {
        *self.nodes.last().expect("paths are never empty")
    }

    pub fn links(&self) -> Vec<Link> {
        self.nodes.windows(2).map(|w| Link { tx: w[0], rx: w[1] }).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathSet {
    paths: Vec<Path>,
}

impl PathSet {
    pub fn new(paths: Vec<Path>) -> Self {
        Self { paths }
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn links(&self) -> impl Iterator<Item = Link> + '_ {
        self.paths.iter().flat_map(|p| p.links())
    }

    pub fn d2d_link_count(&self) -> usize {
        self.paths.iter().map(|p| p.hops() - 1).sum()
    }

    /// Every group member appears on exactly one path exactly once, no other UE does,
    /// and no path exceeds `h_max` hops.
    pub fn validate(&self, topo: &Topology, h_max: usize) -> Result<()> {
        let mut seen = BTreeSet::new();
        for p in &self.paths {
            if p.hops() > h_max {
                return Err(invalid("path", format!("{} hops exceed the cap {h_max}", p.hops())));
            }
            for &n in &p.nodes[1..] {
                if !seen.insert(n) {
                    return Err(EmsError::ConstraintViolated {
                        constraint: Constraint::ServedOnce,
                        detail: format!("{n} is served more than once"),
                    });
                }
            }
        }
        let group: BTreeSet<_> = topo.group_nodes().collect();
        if seen != group {
            return Err(EmsError::ConstraintViolated {
                constraint: Constraint::ServedOnce,
                detail: "path set does not cover the multicast group exactly".into(),
            });
        }
        Ok(())
    }
}

/// One round of the planner: `from` was a tail and `to` the chosen user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanStep {
    pub from: NodeId,
    pub to: NodeId,
    pub distance: f64,
    /// The tail set at the start of the round, needed to replay the selection.
    pub tails_before: usize,
}

pub fn plan_paths(topo: &Topology, h_max: usize) -> Result<PathSet> {
    plan_paths_traced(topo, h_max).map(|(p, _)| p)
}

/// Same as [`plan_paths`] but also returns each round's choice, in order.
pub fn plan_paths_traced(topo: &Topology, h_max: usize) -> Result<(PathSet, Vec<PlanStep>)> {
    if h_max == 0 {
        return Err(invalid("h_max", "must be at least 1"));
    }
    if topo.group().is_empty() {
        return Err(EmsError::EmptyGroup);
    }
    let mut unallocated: BTreeSet<usize> = topo.group().iter().copied().collect();
    let mut tails: Vec<NodeId> = vec![NodeId::Bs];
    let mut paths: Vec<Vec<NodeId>> = Vec::new();
    let mut steps = Vec::with_capacity(unallocated.len());

    while !unallocated.is_empty() {
        // Ties: lowest UE index, then lowest tail.
        let mut best: Option<(f64, usize, NodeId)> = None;
        for &s in &tails {
            for &u in &unallocated {
                let d = topo.distance(s, NodeId::Ue(u))?;
                let better = match best {
                    None => true,
                    Some((bd, bu, bs)) => (d, u, s) < (bd, bu, bs),
                };
                if better {
                    best = Some((d, u, s));
                }
            }
        }
        // A complete LOS topology with a non-empty pool always yields a candidate:
        // the BS never leaves the tail set.
        let (distance, chosen, from) = best.expect("BS remains a tail");
        steps.push(PlanStep {
            from,
            to: NodeId::Ue(chosen),
            distance,
            tails_before: tails.len(),
        });

        let path_idx = if from.is_bs() {
            paths.push(vec![NodeId::Bs, NodeId::Ue(chosen)]);
            paths.len() - 1
        } else {
            let idx = paths
                .iter()
                .position(|p| p.last() == Some(&from))
                .expect("every UE tail ends exactly one path");
            paths[idx].push(NodeId::Ue(chosen));
            tails.retain(|&t| t != from);
            idx
        };
        unallocated.remove(&chosen);
        if paths[path_idx].len() - 1 < h_max {
            tails.push(NodeId::Ue(chosen));
        }
    }

    let paths = paths.into_iter().map(|nodes| Path { nodes }).collect();
    Ok((PathSet { paths }, steps))
}
