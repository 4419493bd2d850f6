//! MIS-based multi-hop scheduling of path links into pairings.
//!
//! Each round takes the first unscheduled link of every path, builds a fresh
//! contention graph over that frontier, and activates a minimum-degree greedy
//! independent set as the next pairing. Only frontier links are eligible, so a
//! link never precedes its predecessor on the same path.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::contention::{build_graph, ContentionGraph, Graph};
use crate::error::Result;
use crate::model::{ChannelParams, Link, Topology};
use crate::pathplan::PathSet;

/// Minimum-degree greedy independent set.
///
/// Degrees are taken in the residual graph after each removal; ties go to the
/// lowest vertex index. The result is always maximal.
pub fn greedy_mis(graph: &Graph) -> Vec<usize> {
    let mut alive: BTreeSet<usize> = (0..graph.len()).collect();
    let mut chosen = Vec::new();
    while !alive.is_empty() {
        let v = *alive
            .iter()
            .min_by_key(|&&v| (graph.neighbors(v).iter().filter(|n| alive.contains(n)).count(), v))
            .expect("alive is non-empty");
        chosen.push(v);
        alive.remove(&v);
        for n in graph.neighbors(v) {
            alive.remove(n);
        }
    }
    chosen.sort_unstable();
    chosen
}

/// [`greedy_mis`] over a contention graph; vertex order is `(tx, rx)` order.
pub fn greedy_mis_links(graph: &ContentionGraph) -> Vec<Link> {
    greedy_mis(graph.graph())
        .into_iter()
        .map(|i| graph.links()[i])
        .collect()
}

/// Links activated together.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pairing {
    /// 1-based position in the schedule.
    pub index: usize,
    pub links: Vec<Link>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Schedule {
    pub pairings: Vec<Pairing>,
}

impl Schedule {
    pub fn len(&self) -> usize {
        self.pairings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairings.is_empty()
    }

    pub fn links(&self) -> impl Iterator<Item = &Link> {
        self.pairings.iter().flat_map(|p| p.links.iter())
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.pairings {
            write!(f, "pairing {}:", p.index)?;
            for l in &p.links {
                write!(f, " {l}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Per-round record: the frontier graph and the chosen set.
#[derive(Debug, Clone)]
pub struct SchedulingRound {
    pub graph: ContentionGraph,
    pub chosen: Vec<Link>,
}

pub fn schedule_links(paths: &PathSet, params: &ChannelParams, topo: &Topology) -> Result<Schedule> {
    schedule_links_traced(paths, params, topo).map(|(s, _)| s)
}

pub fn schedule_links_traced(
    paths: &PathSet,
    params: &ChannelParams,
    topo: &Topology,
) -> Result<(Schedule, Vec<SchedulingRound>)> {
    let mut rounds = Vec::new();
    let schedule = schedule_frontiers(paths, |frontier| {
        let graph = build_graph(frontier, params, topo)?;
        let chosen = greedy_mis_links(&graph);
        rounds.push(SchedulingRound {
            graph,
            chosen: chosen.clone(),
        });
        Ok(chosen)
    })?;
    Ok((schedule, rounds))
}

/// One link per pairing: the frontier rule with every pair treated as contending.
///
/// This is exactly what the MIS scheduler produces when the contention graph is
/// complete, so the two schedules coincide whenever concurrency is disabled.
pub fn serial_schedule(paths: &PathSet) -> Schedule {
    schedule_frontiers(paths, |frontier| {
        let first = *frontier.iter().min().expect("frontier is non-empty");
        Ok(vec![first])
    })
    .expect("serial selection is infallible")
}

/// Drives the frontier loop. `select` returns a non-empty subset of the frontier.
fn schedule_frontiers(
    paths: &PathSet,
    mut select: impl FnMut(&[Link]) -> Result<Vec<Link>>,
) -> Result<Schedule> {
    let per_path: Vec<Vec<Link>> = paths.paths().iter().map(|p| p.links()).collect();
    let mut cursor = vec![0usize; per_path.len()];
    let mut pairings = Vec::new();
    loop {
        let frontier: Vec<Link> = per_path
            .iter()
            .zip(&cursor)
            .filter_map(|(links, &c)| links.get(c).copied())
            .collect();
        if frontier.is_empty() {
            break;
        }
        let mut chosen = select(&frontier)?;
        assert!(!chosen.is_empty(), "an independent set of a non-empty graph is non-empty");
        chosen.sort();
        for (links, c) in per_path.iter().zip(cursor.iter_mut()) {
            if links.get(*c).is_some_and(|l| chosen.binary_search(l).is_ok()) {
                *c += 1;
            }
        }
        pairings.push(Pairing {
            index: pairings.len() + 1,
            links: chosen,
        });
    }
    Ok(Schedule { pairings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_topology, NodeId, Point};
    use crate::pathplan::plan_paths;

    #[test]
    fn edgeless_takes_all() {
        let g = Graph::new(6);
        assert_eq!(greedy_mis(&g), vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn triangle_takes_one() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]);
        assert_eq!(greedy_mis(&g).len(), 1);
    }

    #[test]
    fn path_graph_takes_endpoints() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]);
        assert_eq!(greedy_mis(&g), vec![0, 2]);
    }

    #[test]
    fn result_is_maximal_independent() {
        let g = Graph::from_edges(7, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 0), (1, 4)]);
        let s = greedy_mis(&g);
        assert!(g.is_independent(&s));
        for v in 0..7 {
            if !s.contains(&v) {
                assert!(s.iter().any(|&u| g.has_edge(u, v)), "{v} could be added");
            }
        }
    }

    #[test]
    fn single_path_is_a_chain() {
        let t = Topology::from_positions(
            Point::new(0.0, 0.0),
            vec![Point::new(1.0, 0.0), Point::new(2.0, 0.0), Point::new(3.0, 0.0)],
        )
        .unwrap();
        let ps = plan_paths(&t, 3).unwrap();
        let s = schedule_links(&ps, &ChannelParams::default(), &t).unwrap();
        assert_eq!(s.len(), 3);
        for (p, l) in s.pairings.iter().zip(ps.paths()[0].links()) {
            assert_eq!(p.links, vec![l]);
        }
    }

    #[test]
    fn star_is_serial() {
        let t = build_topology(20.0, 7, 4).unwrap();
        let ps = plan_paths(&t, 1).unwrap();
        let mut p = ChannelParams::default();
        p.sigma = 1e3;
        let s = schedule_links(&ps, &p, &t).unwrap();
        assert_eq!(s.len(), 7);
        let order: Vec<_> = s.pairings.iter().map(|p| p.links[0].rx).collect();
        assert_eq!(order, (0..7).map(NodeId::Ue).collect::<Vec<_>>());
        assert_eq!(s, serial_schedule(&ps));
    }

    #[test]
    fn record_format() {
        let t = build_topology(20.0, 2, 4).unwrap();
        let ps = plan_paths(&t, 1).unwrap();
        assert_eq!(serial_schedule(&ps).to_string(), "pairing 1: BS->u0\npairing 2: BS->u1\n");
    }
}
