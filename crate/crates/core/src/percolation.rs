//! Bond configurations and the connectivity events evaluated on them.

use bitvec::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsu::DisjointSet;
use crate::error::{check_probability, Error, Result};
use crate::lattice::{Bond, LatticeGraph, Vertex};
use crate::rng::RngStream;

/// Disclosure attached to every report that involves the truncated event.
pub const TRUNCATED_PROXY_NOTE: &str = "truncated event is a finite-volume proxy: the origin's open \
cluster must contain the target and avoid every box-boundary vertex (stand-in for a finite cluster)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    TwoPoint,
    Truncated,
}

impl EventKind {
    /// Increasing in the set of open bonds.
    pub fn is_increasing(self) -> bool {
        matches!(self, EventKind::TwoPoint)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::TwoPoint => "two_point",
            EventKind::Truncated => "truncated",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub u: Vertex,
    pub v: Vertex,
}

impl Event {
    pub fn two_point(u: Vertex, v: Vertex) -> Self {
        Event {
            kind: EventKind::TwoPoint,
            u,
            v,
        }
    }

    pub fn truncated(u: Vertex, v: Vertex) -> Self {
        Event {
            kind: EventKind::Truncated,
            u,
            v,
        }
    }
}

/// Open (1) / closed (0) mark per bond.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BondConfig {
    open: BitVec<u64, Lsb0>,
}

impl BondConfig {
    pub fn all_closed(bonds: usize) -> Self {
        BondConfig {
            open: bitvec![u64, Lsb0; 0; bonds],
        }
    }

    pub fn all_open(bonds: usize) -> Self {
        BondConfig {
            open: bitvec![u64, Lsb0; 1; bonds],
        }
    }

    pub fn from_open_bonds(bonds: usize, open: impl IntoIterator<Item = Bond>) -> Self {
        let mut c = Self::all_closed(bonds);
        for b in open {
            c.set(b, true);
        }
        c
    }

    /// Bit `b` of `mask` is the mark of bond `b`.
    pub fn from_mask(bonds: usize, mask: u64) -> Self {
        let mut c = Self::all_closed(bonds);
        for b in 0..bonds.min(64) {
            if mask >> b & 1 == 1 {
                c.set(b as Bond, true);
            }
        }
        c
    }

    pub fn len(&self) -> usize {
        self.open.len()
    }

    pub fn is_empty(&self) -> bool {
        self.open.is_empty()
    }

    pub fn is_open(&self, b: Bond) -> bool {
        self.open[b as usize]
    }

    pub fn set(&mut self, b: Bond, open: bool) {
        self.open.set(b as usize, open);
    }

    pub fn open_count(&self) -> usize {
        self.open.count_ones()
    }

    pub fn open_bonds(&self) -> impl Iterator<Item = Bond> + '_ {
        self.open.iter_ones().map(|b| b as Bond)
    }

    /// Every bond open here is also open in `other`.
    pub fn is_subset_of(&self, other: &BondConfig) -> bool {
        self.len() == other.len() && self.open_bonds().all(|b| other.is_open(b))
    }

    fn check_against(&self, graph: &LatticeGraph) -> Result<()> {
        if self.len() == graph.bond_count() as usize {
            Ok(())
        } else {
            Err(Error::ConfigLength {
                got: self.len(),
                expected: graph.bond_count() as usize,
            })
        }
    }
}

/// Mark of bond `b` in the configuration drawn from `stream` at density `p`.
///
/// Bond `b` consumes draw index `b`, which is what lets [`ClusterProbe`]
/// evaluate the same configuration lazily.
#[inline]
pub fn bond_mark(stream: &RngStream, p: f64, b: Bond) -> bool {
    stream.bernoulli(u64::from(b), p)
}

pub fn sample_config(graph: &LatticeGraph, p: f64, stream: &RngStream) -> Result<BondConfig> {
    check_probability(p)?;
    let m = graph.bond_count() as usize;
    let mut c = BondConfig::all_closed(m);
    for b in 0..m as Bond {
        if bond_mark(stream, p, b) {
            c.set(b, true);
        }
    }
    Ok(c)
}

/// Disjoint-set over the open bonds of one configuration.
pub fn open_clusters(graph: &LatticeGraph, config: &BondConfig) -> Result<DisjointSet> {
    config.check_against(graph)?;
    let mut ds = DisjointSet::new(graph.vertex_count() as usize);
    fill_clusters(graph, config, &mut ds);
    Ok(ds)
}

pub(crate) fn fill_clusters(graph: &LatticeGraph, config: &BondConfig, ds: &mut DisjointSet) {
    ds.reset();
    for b in config.open_bonds() {
        let [x, y] = graph.bond(b);
        ds.union(x, y);
    }
}

pub fn connected(graph: &LatticeGraph, config: &BondConfig, u: Vertex, v: Vertex) -> Result<bool> {
    graph.check_vertex(u)?;
    graph.check_vertex(v)?;
    let mut ds = open_clusters(graph, config)?;
    Ok(ds.same(u, v))
}

/// Breadth-first variant of [`connected`]; the two must always agree.
pub fn connected_bfs(
    graph: &LatticeGraph,
    config: &BondConfig,
    u: Vertex,
    v: Vertex,
) -> Result<bool> {
    graph.check_vertex(v)?;
    Ok(cluster(graph, config, u)?.binary_search(&v).is_ok())
}

/// Vertices reachable from `u` through open bonds, sorted by index.
pub fn cluster(graph: &LatticeGraph, config: &BondConfig, u: Vertex) -> Result<Vec<Vertex>> {
    graph.check_vertex(u)?;
    config.check_against(graph)?;
    let mut seen = vec![false; graph.vertex_count() as usize];
    let mut queue = std::collections::VecDeque::from([u]);
    seen[u as usize] = true;
    let mut out = vec![u];
    while let Some(x) = queue.pop_front() {
        for inc in graph.incident(x) {
            if !seen[inc.vertex as usize] && config.is_open(inc.bond) {
                seen[inc.vertex as usize] = true;
                out.push(inc.vertex);
                queue.push_back(inc.vertex);
            }
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// `u <-> v` and the cluster of `u` avoids the box boundary.
pub fn truncated_event(
    graph: &LatticeGraph,
    config: &BondConfig,
    u: Vertex,
    v: Vertex,
) -> Result<bool> {
    graph.check_vertex(v)?;
    let c = cluster(graph, config, u)?;
    Ok(c.binary_search(&v).is_ok() && c.iter().all(|&x| !graph.is_boundary(x)))
}

pub fn event_holds(graph: &LatticeGraph, config: &BondConfig, event: &Event) -> Result<bool> {
    match event.kind {
        EventKind::TwoPoint => connected(graph, config, event.u, event.v),
        EventKind::Truncated => truncated_event(graph, config, event.u, event.v),
    }
}

/// Evaluates one event kind at many targets from a single configuration,
/// reusing its disjoint-set between calls.
#[derive(Debug, Clone)]
pub struct UnionFindEvaluator {
    ds: DisjointSet,
}

impl UnionFindEvaluator {
    pub fn new(graph: &LatticeGraph) -> Self {
        UnionFindEvaluator {
            ds: DisjointSet::new(graph.vertex_count() as usize),
        }
    }

    pub fn evaluate(
        &mut self,
        graph: &LatticeGraph,
        config: &BondConfig,
        kind: EventKind,
        origin: Vertex,
        targets: &[Vertex],
        hits: &mut [bool],
    ) {
        fill_clusters(graph, config, &mut self.ds);
        let root = self.ds.find(origin);
        let finite = match kind {
            EventKind::TwoPoint => true,
            EventKind::Truncated => {
                let ds = &mut self.ds;
                graph
                    .boundary_vertices()
                    .iter()
                    .all(|&b| ds.find(b) != root)
            }
        };
        for (h, &t) in hits.iter_mut().zip(targets) {
            *h = finite && self.ds.find(t) == root;
        }
    }
}

/// Explores only the cluster of one vertex, querying bond marks on demand.
///
/// With marks from [`bond_mark`] the outcome is identical to sampling the
/// whole configuration and running [`UnionFindEvaluator`]; only the bonds
/// incident to the explored cluster are ever drawn. Exploration stops as soon
/// as the answer is settled: all targets reached (two-point) or the boundary
/// touched (truncated).
#[derive(Debug, Clone)]
pub struct ClusterProbe {
    stamp: Vec<u32>,
    epoch: u32,
    slot: Vec<u32>,
    stack: Vec<Vertex>,
    explored: u64,
}

const NO_SLOT: u32 = u32::MAX;

impl ClusterProbe {
    /// `targets` must be distinct vertices of `graph`.
    pub fn new(graph: &LatticeGraph, targets: &[Vertex]) -> Self {
        let mut slot = vec![NO_SLOT; graph.vertex_count() as usize];
        for (i, &t) in targets.iter().enumerate() {
            debug_assert_eq!(slot[t as usize], NO_SLOT, "duplicate target");
            slot[t as usize] = i as u32;
        }
        ClusterProbe {
            stamp: vec![0; graph.vertex_count() as usize],
            epoch: 0,
            slot,
            stack: Vec::new(),
            explored: 0,
        }
    }

    /// Number of vertices visited over all runs so far.
    pub fn explored(&self) -> u64 {
        self.explored
    }

    pub fn run(
        &mut self,
        graph: &LatticeGraph,
        kind: EventKind,
        origin: Vertex,
        mut is_open: impl FnMut(Bond) -> bool,
        hits: &mut [bool],
    ) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
        hits.fill(false);
        self.stack.clear();
        let epoch = self.epoch;
        let truncated = kind == EventKind::Truncated;
        let mut remaining = hits.len();

        macro_rules! visit {
            ($v:expr) => {{
                let v = $v;
                self.stamp[v as usize] = epoch;
                self.explored += 1;
                let s = self.slot[v as usize];
                if s != NO_SLOT {
                    hits[s as usize] = true;
                    remaining -= 1;
                }
                if truncated && graph.is_boundary(v) {
                    hits.fill(false);
                    return;
                }
                if !truncated && remaining == 0 {
                    return;
                }
                self.stack.push(v);
            }};
        }

        visit!(origin);
        while let Some(x) = self.stack.pop() {
            for inc in graph.incident(x) {
                if self.stamp[inc.vertex as usize] == epoch || !is_open(inc.bond) {
                    continue;
                }
                visit!(inc.vertex);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_box, BoxSpec};

    fn unit_square() -> LatticeGraph {
        LatticeGraph::from_bounds(&[0, 0], &[1, 1]).unwrap()
    }

    #[test]
    fn extreme_densities() {
        let g = build_box(&BoxSpec::new(2, 3, 2)).unwrap();
        let s = RngStream::new(3, 0);
        assert_eq!(sample_config(&g, 0.0, &s).unwrap().open_count(), 0);
        assert_eq!(
            sample_config(&g, 1.0, &s).unwrap().open_count(),
            g.bond_count() as usize
        );
        assert_eq!(
            sample_config(&g, 1.5, &s),
            Err(Error::InvalidProbability(1.5))
        );
        assert!(sample_config(&g, -0.1, &s).is_err());
    }

    #[test]
    fn open_fraction_is_binomial() {
        // 2 x 50000 strip has 100000 + 49999*2 bonds; use a long d=1 path instead
        let g = LatticeGraph::from_bounds(&[0], &[100_000]).unwrap();
        let c = sample_config(&g, 0.5, &RngStream::new(42, 0)).unwrap();
        let m = g.bond_count() as f64;
        let sd = (m * 0.25).sqrt();
        assert!((c.open_count() as f64 - 0.5 * m).abs() < 5.0 * sd);
    }

    #[test]
    fn sampling_is_deterministic() {
        let g = build_box(&BoxSpec::new(3, 2, 2)).unwrap();
        let s = RngStream::new(99, 17);
        assert_eq!(
            sample_config(&g, 0.4, &s).unwrap(),
            sample_config(&g, 0.4, &s).unwrap()
        );
    }

    #[test]
    fn trivial_connectivity() {
        let g = unit_square();
        let m = g.bond_count() as usize;
        let open = BondConfig::all_open(m);
        let closed = BondConfig::all_closed(m);
        for u in 0..4 {
            for v in 0..4 {
                assert!(connected(&g, &open, u, v).unwrap());
                assert_eq!(connected(&g, &closed, u, v).unwrap(), u == v);
            }
        }
        assert_eq!(cluster(&g, &closed, 2).unwrap(), vec![2]);
        assert_eq!(cluster(&g, &open, 2).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn square_detour() {
        let g = unit_square();
        let a = g.vertex_at(&[0, 0]).unwrap();
        let b = g.vertex_at(&[1, 0]).unwrap();
        let c = g.vertex_at(&[1, 1]).unwrap();
        let d = g.vertex_at(&[0, 1]).unwrap();
        let bond = |x: Vertex, y: Vertex| {
            (0..g.bond_count())
                .find(|&e| {
                    let [p, q] = g.bond(e);
                    (p, q) == (x.min(y), x.max(y))
                })
                .unwrap()
        };
        let cfg = BondConfig::from_open_bonds(4, [bond(b, c), bond(c, d), bond(d, a)]);
        assert!(connected(&g, &cfg, a, b).unwrap());
        assert!(connected_bfs(&g, &cfg, a, b).unwrap());

        let only_ab = BondConfig::from_open_bonds(4, [bond(a, b)]);
        assert_eq!(cluster(&g, &only_ab, a).unwrap(), vec![a.min(b), a.max(b)]);
    }

    #[test]
    fn truncated_examples() {
        let g = LatticeGraph::from_bounds(&[-2, -2], &[3, 2]).unwrap();
        let o = g.vertex_at(&[0, 0]).unwrap();
        let e1 = g.vertex_at(&[1, 0]).unwrap();
        let m = g.bond_count() as usize;
        let closed = BondConfig::all_closed(m);
        assert!(truncated_event(&g, &closed, o, o).unwrap());

        let b = (0..m as Bond).find(|&b| g.bond(b) == [o, e1]).unwrap();
        let single = BondConfig::from_open_bonds(m, [b]);
        assert!(truncated_event(&g, &single, o, e1).unwrap());

        let open = BondConfig::all_open(m);
        assert!(!truncated_event(&g, &open, o, e1).unwrap());
        assert!(connected(&g, &open, o, e1).unwrap());
    }

    #[test]
    fn invalid_vertices_and_lengths() {
        let g = unit_square();
        let c = BondConfig::all_open(4);
        assert!(matches!(
            connected(&g, &c, 0, 9),
            Err(Error::InvalidVertex { .. })
        ));
        assert!(cluster(&g, &c, 4).is_err());
        assert!(truncated_event(&g, &c, 7, 0).is_err());
        let short = BondConfig::all_open(3);
        assert!(matches!(
            connected(&g, &short, 0, 1),
            Err(Error::ConfigLength { .. })
        ));
    }

    #[test]
    fn probe_matches_union_find() {
        let g = build_box(&BoxSpec::new(2, 4, 3)).unwrap();
        let origin = g.origin().unwrap();
        let targets: Vec<Vertex> = (1..=4).map(|n| g.axis_pair(n).unwrap().1).collect();
        let mut probe = ClusterProbe::new(&g, &targets);
        let mut uf = UnionFindEvaluator::new(&g);
        let mut a = vec![false; targets.len()];
        let mut b = vec![false; targets.len()];
        for &p in &[0.2, 0.45, 0.6, 0.9] {
            for r in 0..300 {
                let s = RngStream::new(5, r);
                let cfg = sample_config(&g, p, &s).unwrap();
                for kind in [EventKind::TwoPoint, EventKind::Truncated] {
                    probe.run(&g, kind, origin, |e| bond_mark(&s, p, e), &mut a);
                    uf.evaluate(&g, &cfg, kind, origin, &targets, &mut b);
                    assert_eq!(a, b, "p={p} replica={r} kind={kind:?}");
                }
            }
        }
    }
}
