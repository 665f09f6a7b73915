//! Finite axis-aligned boxes of the hypercubic lattice with free boundary.
//!
//! Vertices are indexed lexicographically by coordinate (axis 0 most
//! significant). Bond `b` joins a vertex to its `+e_axis` neighbour; bonds are
//! ordered by that lower endpoint and then by axis, so the numbering is a pure
//! function of the box bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vertex = u32;
pub type Bond = u32;

/// Box around the segment from the origin to `(n_max, 0, ..., 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoxSpec {
    pub d: usize,
    pub n_max: u32,
    pub margin: u32,
}

impl BoxSpec {
    pub fn new(d: usize, n_max: u32, margin: u32) -> Self {
        BoxSpec { d, n_max, margin }
    }

    /// `[-margin, n_max + margin] x [-margin, margin]^(d-1)`.
    pub fn bounds(&self) -> (Vec<i64>, Vec<i64>) {
        let m = i64::from(self.margin);
        let lo = vec![-m; self.d];
        let mut hi = vec![m; self.d];
        if let Some(h) = hi.first_mut() {
            *h = i64::from(self.n_max) + m;
        }
        (lo, hi)
    }

    pub fn build(&self) -> Result<LatticeGraph> {
        build_box(self)
    }
}

/// Serializable description of a built graph, embedded in reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphInfo {
    pub d: usize,
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
    pub vertex_count: u32,
    pub bond_count: u32,
    /// One-dimensional graphs are analytic fixtures only (τ = p^n exactly).
    pub fixture_1d: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<BoxSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Incidence {
    pub vertex: Vertex,
    pub bond: Bond,
}

#[derive(Debug, Clone)]
pub struct LatticeGraph {
    d: usize,
    lo: Vec<i64>,
    hi: Vec<i64>,
    lens: Vec<u64>,
    strides: Vec<u64>,
    vertex_count: u32,
    bonds: Vec<[Vertex; 2]>,
    adj_offsets: Vec<u32>,
    adj: Vec<Incidence>,
    boundary: Vec<Vertex>,
    on_boundary: Vec<bool>,
    spec: Option<BoxSpec>,
}

pub fn build_box(spec: &BoxSpec) -> Result<LatticeGraph> {
    let (lo, hi) = spec.bounds();
    let mut g = LatticeGraph::from_bounds(&lo, &hi)?;
    g.spec = Some(*spec);
    Ok(g)
}

impl LatticeGraph {
    /// Box `[lo_0, hi_0] x ... x [lo_{d-1}, hi_{d-1}]`.
    pub fn from_bounds(lo: &[i64], hi: &[i64]) -> Result<Self> {
        let d = lo.len();
        if d < 1 {
            return Err(Error::InvalidDimension(d));
        }
        if hi.len() != d {
            return Err(Error::InvalidBounds(format!(
                "lo has {} coordinates but hi has {}",
                d,
                hi.len()
            )));
        }
        let mut lens = Vec::with_capacity(d);
        for a in 0..d {
            if hi[a] < lo[a] {
                return Err(Error::InvalidBounds(format!(
                    "axis {a}: hi = {} < lo = {}",
                    hi[a], lo[a]
                )));
            }
            let len = (hi[a] as i128 - lo[a] as i128 + 1) as u128;
            if len > u128::from(u32::MAX) {
                return Err(Error::BoxTooLarge {
                    what: "side length",
                    count: u64::MAX,
                });
            }
            lens.push(len as u64);
        }

        let mut vertex_count: u64 = 1;
        for &l in &lens {
            vertex_count = vertex_count
                .checked_mul(l)
                .filter(|&c| c <= u64::from(u32::MAX))
                .ok_or(Error::BoxTooLarge {
                    what: "vertex count",
                    count: u64::MAX,
                })?;
        }
        let expected_bonds = bond_count_formula(&lens);
        if expected_bonds > u64::from(u32::MAX) {
            return Err(Error::BoxTooLarge {
                what: "bond count",
                count: expected_bonds,
            });
        }

        let mut strides = vec![1u64; d];
        for a in (0..d.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * lens[a + 1];
        }

        let nv = vertex_count as usize;
        let mut bonds = Vec::with_capacity(expected_bonds as usize);
        let mut coord = vec![0u64; d];
        for v in 0..nv {
            for a in 0..d {
                if coord[a] + 1 < lens[a] {
                    bonds.push([v as Vertex, (v as u64 + strides[a]) as Vertex]);
                }
            }
            // odometer increment, last axis fastest
            for a in (0..d).rev() {
                coord[a] += 1;
                if coord[a] < lens[a] {
                    break;
                }
                coord[a] = 0;
            }
        }
        debug_assert_eq!(bonds.len() as u64, expected_bonds);

        let mut on_boundary = vec![false; nv];
        let mut depth = vec![0u64; nv];
        let mut boundary = Vec::new();
        let mut coord = vec![0u64; d];
        for v in 0..nv {
            let mut dist = u64::MAX;
            for a in 0..d {
                dist = dist.min(coord[a]).min(lens[a] - 1 - coord[a]);
            }
            depth[v] = dist;
            if dist == 0 {
                on_boundary[v] = true;
                boundary.push(v as Vertex);
            }
            for a in (0..d).rev() {
                coord[a] += 1;
                if coord[a] < lens[a] {
                    break;
                }
                coord[a] = 0;
            }
        }

        let mut degree = vec![0u32; nv];
        for &[a, b] in &bonds {
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }
        let mut adj_offsets = Vec::with_capacity(nv + 1);
        let mut acc = 0u32;
        adj_offsets.push(0);
        for &deg in &degree {
            acc += deg;
            adj_offsets.push(acc);
        }
        let mut fill: Vec<u32> = adj_offsets[..nv].to_vec();
        let mut adj = vec![Incidence { vertex: 0, bond: 0 }; acc as usize];
        for (b, &[x, y]) in bonds.iter().enumerate() {
            adj[fill[x as usize] as usize] = Incidence {
                vertex: y,
                bond: b as Bond,
            };
            fill[x as usize] += 1;
            adj[fill[y as usize] as usize] = Incidence {
                vertex: x,
                bond: b as Bond,
            };
            fill[y as usize] += 1;
        }
        // Exploration order: neighbours deeper inside the box first, so a
        // stack-driven search pops the neighbour nearest the boundary first.
        for v in 0..nv {
            let s = adj_offsets[v] as usize;
            let e = adj_offsets[v + 1] as usize;
            adj[s..e].sort_by(|p, q| {
                depth[q.vertex as usize]
                    .cmp(&depth[p.vertex as usize])
                    .then(p.bond.cmp(&q.bond))
            });
        }

        Ok(LatticeGraph {
            d,
            lo: lo.to_vec(),
            hi: hi.to_vec(),
            lens,
            strides,
            vertex_count: vertex_count as u32,
            bonds,
            adj_offsets,
            adj,
            boundary,
            on_boundary,
            spec: None,
        })
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn lower(&self) -> &[i64] {
        &self.lo
    }

    pub fn upper(&self) -> &[i64] {
        &self.hi
    }

    pub fn vertex_count(&self) -> u32 {
        self.vertex_count
    }

    pub fn bond_count(&self) -> u32 {
        self.bonds.len() as u32
    }

    pub fn spec(&self) -> Option<&BoxSpec> {
        self.spec.as_ref()
    }

    pub fn is_fixture_1d(&self) -> bool {
        self.d == 1
    }

    pub fn info(&self) -> GraphInfo {
        GraphInfo {
            d: self.d,
            lo: self.lo.clone(),
            hi: self.hi.clone(),
            vertex_count: self.vertex_count,
            bond_count: self.bond_count(),
            fixture_1d: self.is_fixture_1d(),
            spec: self.spec,
        }
    }

    pub fn bond(&self, b: Bond) -> [Vertex; 2] {
        self.bonds[b as usize]
    }

    pub fn bonds(&self) -> &[[Vertex; 2]] {
        &self.bonds
    }

    /// Incident bonds of `v` in exploration order.
    pub fn incident(&self, v: Vertex) -> &[Incidence] {
        let s = self.adj_offsets[v as usize] as usize;
        let e = self.adj_offsets[v as usize + 1] as usize;
        &self.adj[s..e]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.incident(v).len()
    }

    pub fn coords(&self, v: Vertex) -> Vec<i64> {
        let mut rem = u64::from(v);
        (0..self.d)
            .map(|a| {
                let c = rem / self.strides[a];
                rem %= self.strides[a];
                self.lo[a] + c as i64
            })
            .collect()
    }

    pub fn vertex_at(&self, x: &[i64]) -> Option<Vertex> {
        if x.len() != self.d {
            return None;
        }
        let mut idx = 0u64;
        for a in 0..self.d {
            if x[a] < self.lo[a] || x[a] > self.hi[a] {
                return None;
            }
            idx += (x[a] - self.lo[a]) as u64 * self.strides[a];
        }
        Some(idx as Vertex)
    }

    pub fn check_vertex(&self, v: Vertex) -> Result<()> {
        if v < self.vertex_count {
            Ok(())
        } else {
            Err(Error::InvalidVertex {
                vertex: v,
                count: self.vertex_count,
            })
        }
    }

    /// Largest `n` with both the origin and `(n, 0, ..., 0)` in the box.
    pub fn max_axis_distance(&self) -> Option<u32> {
        let origin = vec![0i64; self.d];
        self.vertex_at(&origin)?;
        Some(self.hi[0].min(i64::from(u32::MAX)) as u32)
    }

    pub fn origin(&self) -> Result<Vertex> {
        self.axis_pair(0).map(|(o, _)| o)
    }

    /// Vertex indices of the origin and of `(n, 0, ..., 0)`.
    pub fn axis_pair(&self, n: u32) -> Result<(Vertex, Vertex)> {
        let max = self
            .max_axis_distance()
            .ok_or_else(|| Error::InvalidBounds("the box does not contain the origin".into()))?;
        if n > max {
            return Err(Error::OutOfBox { n, max });
        }
        let mut x = vec![0i64; self.d];
        let origin = self.vertex_at(&x).expect("origin checked above");
        x[0] = i64::from(n);
        let target = self.vertex_at(&x).ok_or(Error::OutOfBox { n, max })?;
        Ok((origin, target))
    }

    /// Vertices with a lattice neighbour outside the box, in index order.
    pub fn boundary_vertices(&self) -> &[Vertex] {
        &self.boundary
    }

    pub fn is_boundary(&self, v: Vertex) -> bool {
        self.on_boundary[v as usize]
    }

    pub fn side_lengths(&self) -> &[u64] {
        &self.lens
    }
}

/// `sum_a (L_a - 1) * prod_{b != a} L_b` for side lengths counted in vertices.
pub fn bond_count_formula(lens: &[u64]) -> u64 {
    (0..lens.len())
        .map(|a| {
            lens.iter()
                .enumerate()
                .map(|(b, &l)| if a == b { l.saturating_sub(1) } else { l })
                .fold(1u64, |acc, x| acc.saturating_mul(x))
        })
        .fold(0u64, |acc, x| acc.saturating_add(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_graph() {
        let g = build_box(&BoxSpec::new(1, 2, 0)).unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.bond_count(), 2);
        assert!(g.is_fixture_1d());
        assert_eq!(g.axis_pair(2).unwrap(), (0, 2));
        assert_eq!(g.boundary_vertices(), &[0, 2]);
    }

    #[test]
    fn strip_without_margin() {
        let g = build_box(&BoxSpec::new(2, 1, 0)).unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.bond_count(), 1);
    }

    #[test]
    fn box_with_margin_counts() {
        let g = build_box(&BoxSpec::new(2, 1, 1)).unwrap();
        assert_eq!(g.vertex_count(), 12);
        assert_eq!(g.bond_count(), 17);
        assert_eq!(g.lower(), &[-1, -1]);
        assert_eq!(g.upper(), &[2, 1]);
    }

    #[test]
    fn axis_pair_identity_and_range() {
        let g = build_box(&BoxSpec::new(2, 3, 2)).unwrap();
        let (o, t) = g.axis_pair(0).unwrap();
        assert_eq!(o, t);
        assert_eq!(g.coords(o), vec![0, 0]);
        let (_, t) = g.axis_pair(5).unwrap();
        assert_eq!(g.coords(t), vec![5, 0]);
        assert_eq!(g.axis_pair(6), Err(Error::OutOfBox { n: 6, max: 5 }));
    }

    #[test]
    fn unit_square_is_all_boundary() {
        let g = LatticeGraph::from_bounds(&[0, 0], &[1, 1]).unwrap();
        assert_eq!(g.boundary_vertices().len(), 4);
    }

    #[test]
    fn perimeter_of_five_by_five() {
        let g = LatticeGraph::from_bounds(&[-2, -2], &[2, 2]).unwrap();
        let b = g.boundary_vertices();
        assert_eq!(g.vertex_count(), 25);
        assert_eq!(b.len(), 16);
        for &v in b {
            let x = g.coords(v);
            assert_eq!(x.iter().map(|c| c.abs()).max(), Some(2));
        }
    }

    #[test]
    fn rejects_zero_dimension() {
        assert_eq!(
            build_box(&BoxSpec::new(0, 1, 0)).unwrap_err(),
            Error::InvalidDimension(0)
        );
    }

    #[test]
    fn rejects_overflowing_box() {
        let err = LatticeGraph::from_bounds(&[0, 0, 0], &[4000, 4000, 4000]).unwrap_err();
        assert!(matches!(err, Error::BoxTooLarge { .. }));
    }

    #[test]
    fn coords_round_trip() {
        let g = LatticeGraph::from_bounds(&[-1, 0, -2], &[1, 2, 0]).unwrap();
        for v in 0..g.vertex_count() {
            assert_eq!(g.vertex_at(&g.coords(v)), Some(v));
        }
    }
}
