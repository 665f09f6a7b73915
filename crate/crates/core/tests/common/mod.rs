//! Independent brute-force reference: coordinates in a hash set, edges listed
//! directly from the lattice definition, connectivity by explicit search.
#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

pub type Point = Vec<i64>;

pub struct RefBox {
    pub lo: Point,
    pub hi: Point,
    pub vertices: Vec<Point>,
    pub edges: Vec<(Point, Point)>,
}

impl RefBox {
    pub fn new(lo: &[i64], hi: &[i64]) -> Self {
        let mut vertices = vec![vec![]];
        for a in 0..lo.len() {
            vertices = vertices
                .into_iter()
                .flat_map(|v: Point| {
                    (lo[a]..=hi[a]).map(move |c| {
                        let mut w = v.clone();
                        w.push(c);
                        w
                    })
                })
                .collect();
        }
        let set: HashSet<Point> = vertices.iter().cloned().collect();
        let mut edges = Vec::new();
        for v in &vertices {
            for w in &vertices {
                let l1: i64 = v.iter().zip(w).map(|(a, b)| (a - b).abs()).sum();
                if l1 == 1 && v < w && set.contains(w) {
                    edges.push((v.clone(), w.clone()));
                }
            }
        }
        RefBox {
            lo: lo.to_vec(),
            hi: hi.to_vec(),
            vertices,
            edges,
        }
    }

    pub fn on_face(&self, x: &Point) -> bool {
        x.iter()
            .enumerate()
            .any(|(a, &c)| c == self.lo[a] || c == self.hi[a])
    }

    /// Cluster of `u` when edge `i` is open iff bit `i` of `mask` is set.
    pub fn cluster(&self, mask: u64, u: &Point) -> HashSet<Point> {
        let mut adj: HashMap<&Point, Vec<&Point>> = HashMap::new();
        for (i, (a, b)) in self.edges.iter().enumerate() {
            if mask >> i & 1 == 1 {
                adj.entry(a).or_default().push(b);
                adj.entry(b).or_default().push(a);
            }
        }
        let mut seen: HashSet<Point> = HashSet::from([u.clone()]);
        let mut stack = vec![u.clone()];
        while let Some(x) = stack.pop() {
            if let Some(ns) = adj.get(&x) {
                for &y in ns {
                    if seen.insert(y.clone()) {
                        stack.push(y.clone());
                    }
                }
            }
        }
        seen
    }

    /// Counts `a_k` of configurations with `k` open edges realising the event.
    pub fn counts(&self, u: &Point, v: &Point, truncated: bool) -> Vec<u64> {
        let m = self.edges.len();
        assert!(m <= 22, "reference enumeration kept small");
        let mut counts = vec![0u64; m + 1];
        for mask in 0u64..1 << m {
            let c = self.cluster(mask, u);
            let holds = c.contains(v) && (!truncated || c.iter().all(|x| !self.on_face(x)));
            if holds {
                counts[mask.count_ones() as usize] += 1;
            }
        }
        counts
    }
}

pub fn axis_point(d: usize, n: i64) -> Point {
    let mut x = vec![0; d];
    x[0] = n;
    x
}

/// Plain power-sum evaluation, no log-space tricks.
pub fn poly_value(counts: &[u64], p: f64) -> f64 {
    let m = counts.len() as i32 - 1;
    counts
        .iter()
        .enumerate()
        .map(|(k, &a)| a as f64 * p.powi(k as i32) * (1.0 - p).powi(m - k as i32))
        .sum()
}
