//! Contention graph over candidate links.
//!
//! Two links contend when they share an endpoint (half-duplex, one connection
//! per node) or when the stronger of their two cross-link powers at P_max is at
//! least σ·P_max.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::channel::cross_power;
use crate::error::Result;
use crate::model::{ChannelParams, Link, Topology};

/// Undirected simple graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Graph {
    adj: Vec<BTreeSet<usize>>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Self {
            adj: vec![BTreeSet::new(); n],
        }
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut g = Self::new(n);
        for (a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    /// Self-loops are ignored.
    pub fn add_edge(&mut self, a: usize, b: usize) {
        if a != b {
            self.adj[a].insert(b);
            self.adj[b].insert(a);
        }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.len()).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn neighbors(&self, v: usize) -> &BTreeSet<usize> {
        &self.adj[v]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].contains(&b)
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(a, ns)| ns.iter().filter(move |&&b| b > a).map(move |&b| (a, b)))
    }

    pub fn is_independent(&self, set: &[usize]) -> bool {
        set.iter()
            .enumerate()
            .all(|(i, &a)| set[i + 1..].iter().all(|&b| a != b && !self.has_edge(a, b)))
    }
}

/// Contention graph with vertices labelled by links, sorted by `(tx, rx)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContentionGraph {
    links: Vec<Link>,
    graph: Graph,
}

impl ContentionGraph {
    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn index_of(&self, link: &Link) -> Option<usize> {
        self.links.binary_search(link).ok()
    }

    pub fn degree(&self, link: &Link) -> Option<usize> {
        self.index_of(link).map(|i| self.graph.degree(i))
    }

    pub fn contends(&self, a: &Link, b: &Link) -> bool {
        match (self.index_of(a), self.index_of(b)) {
            (Some(i), Some(j)) => self.graph.has_edge(i, j),
            _ => false,
        }
    }

    /// Plain-text adjacency list, one `link: neighbour neighbour ...` line per vertex.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!(
            "# contention graph: {} vertices, {} edges\n",
            self.links.len(),
            self.graph.edge_count()
        );
        for (i, link) in self.links.iter().enumerate() {
            let _ = write!(out, "{link}:");
            for &j in self.graph.neighbors(i) {
                let _ = write!(out, " {}", self.links[j]);
            }
            out.push('\n');
        }
        out
    }
}

/// Larger of the two cross-link received powers at P_max, in mW.
pub fn edge_weight(a: Link, b: Link, params: &ChannelParams, topo: &Topology) -> Result<f64> {
    let at_b = cross_power(a, b, params.p_max_mw, params, topo)?;
    let at_a = cross_power(b, a, params.p_max_mw, params, topo)?;
    Ok(at_b.max(at_a))
}

pub fn build_graph(candidates: &[Link], params: &ChannelParams, topo: &Topology) -> Result<ContentionGraph> {
    let mut links = candidates.to_vec();
    links.sort();
    links.dedup();
    let mut graph = Graph::new(links.len());
    for i in 0..links.len() {
        for j in i + 1..links.len() {
            let contend = links[i].is_adjacent(&links[j])
                || edge_weight(links[i], links[j], params, topo)? / params.p_max_mw >= params.sigma;
            if contend {
                graph.add_edge(i, j);
            }
        }
    }
    Ok(ContentionGraph { links, graph })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::GainPattern;
    use crate::model::{build_topology, NodeId, Point};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn link(a: NodeId, b: NodeId) -> Link {
        Link::new(a, b).unwrap()
    }

    /// Links u0->u1 and u2->u3 mirrored about the y axis.
    fn mirror() -> (Topology, Link, Link) {
        let t = Topology::from_positions(
            Point::new(0.0, -30.0),
            vec![Point::new(-3.0, 0.0), Point::new(-3.0, 4.0), Point::new(3.0, 0.0), Point::new(3.0, 4.0)],
        )
        .unwrap();
        (t, link(NodeId::Ue(0), NodeId::Ue(1)), link(NodeId::Ue(2), NodeId::Ue(3)))
    }

    #[test]
    fn mirror_layout_symmetric_weight() {
        let p = ChannelParams::default();
        let (t, a, b) = mirror();
        let ab = cross_power(a, b, p.p_max_mw, &p, &t).unwrap();
        let ba = cross_power(b, a, p.p_max_mw, &p, &t).unwrap();
        assert_relative_eq!(ab, ba, max_relative = 1e-12);
        assert_relative_eq!(edge_weight(a, b, &p, &t).unwrap(), ab, max_relative = 1e-12);
        assert_eq!(edge_weight(a, b, &p, &t).unwrap(), edge_weight(b, a, &p, &t).unwrap());
    }

    #[test]
    fn distant_links_side_lobe_weight() {
        let p = ChannelParams::default();
        let t = Topology::from_positions(
            Point::new(0.0, 0.0),
            vec![Point::new(0.0, 1.0), Point::new(0.0, 2.0), Point::new(40.0, 1.0), Point::new(40.0, 2.0)],
        )
        .unwrap();
        let a = link(NodeId::Ue(0), NodeId::Ue(1));
        let b = link(NodeId::Ue(2), NodeId::Ue(3));
        let gsl = GainPattern::new(15.0).gsl_linear();
        let l = (1600f64 + 1.0).sqrt();
        let expected = p.k0 * gsl * gsl * l.powi(-2) * p.p_max_mw;
        assert_relative_eq!(edge_weight(a, b, &p, &t).unwrap(), expected, max_relative = 1e-12);
        // 7.3e-10 / 1601 < 1e-12: no contention at the default threshold.
        let g = build_graph(&[a, b], &p, &t).unwrap();
        assert_eq!(g.graph().edge_count(), 0);
    }

    #[test]
    fn shared_bs_always_contends() {
        let mut p = ChannelParams::default();
        p.sigma = 1.0e6;
        let t = build_topology(20.0, 3, 1).unwrap();
        let a = link(NodeId::Bs, NodeId::Ue(0));
        let b = link(NodeId::Bs, NodeId::Ue(1));
        let g = build_graph(&[a, b], &p, &t).unwrap();
        assert!(g.contends(&a, &b));
    }

    #[test]
    fn zero_threshold_is_complete() {
        let mut p = ChannelParams::default();
        p.sigma = 0.0;
        let t = build_topology(20.0, 12, 5).unwrap();
        let links: Vec<_> = (0..6).map(|i| link(NodeId::Ue(2 * i), NodeId::Ue(2 * i + 1))).collect();
        let g = build_graph(&links, &p, &t).unwrap();
        assert_eq!(g.graph().edge_count(), 15);
    }

    #[test]
    fn edge_list_dump() {
        let p = ChannelParams::default();
        let a = link(NodeId::Bs, NodeId::Ue(0));
        let b = link(NodeId::Bs, NodeId::Ue(1));
        let t = build_topology(20.0, 2, 1).unwrap();
        let g = build_graph(&[b, a], &p, &t).unwrap();
        assert_eq!(
            g.to_edge_list(),
            "# contention graph: 2 vertices, 1 edges\nBS->u0: BS->u1\nBS->u1: BS->u0\n"
        );
    }

    fn random_links(t: &Topology) -> Vec<Link> {
        let n = t.group().len();
        let mut v = vec![link(NodeId::Bs, NodeId::Ue(0))];
        for i in (1..n - 1).step_by(2) {
            v.push(link(NodeId::Ue(i), NodeId::Ue(i + 1)));
        }
        v.push(link(NodeId::Bs, NodeId::Ue(n - 1)));
        v
    }

    proptest! {
        #[test]
        fn sigma_monotone(seed in any::<u64>(), lo in -16.0f64..-4.0, step in 0.0f64..4.0) {
            let t = build_topology(20.0, 12, seed).unwrap();
            let links = random_links(&t);
            let mut p = ChannelParams::default();
            p.sigma = 10f64.powf(lo);
            let dense = build_graph(&links, &p, &t).unwrap();
            p.sigma = 10f64.powf(lo + step);
            let sparse = build_graph(&links, &p, &t).unwrap();
            for (a, b) in sparse.graph().edges() {
                prop_assert!(dense.graph().has_edge(a, b));
            }
            for (i, a) in dense.links().iter().enumerate() {
                for (j, b) in dense.links().iter().enumerate() {
                    if i != j && a.is_adjacent(b) {
                        prop_assert!(sparse.graph().has_edge(i, j));
                    }
                }
                prop_assert!(!dense.graph().has_edge(i, i));
            }
        }
    }
}
