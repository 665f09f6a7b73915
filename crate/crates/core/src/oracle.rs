//! Exhaustive enumeration of all `2^M` bond configurations of a small graph.
//!
//! The result is a connectivity polynomial: `a_k` counts the configurations
//! with exactly `k` open bonds on which the event holds, and the event
//! probability at density `p` is `sum_k a_k p^k (1-p)^(M-k)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsu::DisjointSet;
use crate::error::{check_probability, Error, Result};
use crate::lattice::{GraphInfo, LatticeGraph};
use crate::percolation::{Event, EventKind};

pub const DEFAULT_ENUMERATION_CAP: u32 = 24;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectivityPolynomial {
    #[serde(rename = "M")]
    pub bonds: u32,
    pub counts: Vec<u64>,
}

impl ConnectivityPolynomial {
    pub fn new(bonds: u32, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != bonds as usize + 1 {
            return Err(Error::arg(
                "counts",
                format!("expected {} coefficients, got {}", bonds + 1, counts.len()),
            ));
        }
        Ok(ConnectivityPolynomial { bonds, counts })
    }

    pub fn value(&self, p: f64) -> Result<f64> {
        eval_polynomial(self, p)
    }

    /// Checks `0 <= a_k <= C(M,k)` and, for increasing events, that
    /// `a_k / C(M,k)` is nondecreasing in `k`.
    pub fn check_invariants(&self, increasing: bool) -> std::result::Result<(), String> {
        let m = self.bonds as u64;
        let binom = binomial_row(m);
        for (k, (&a, &c)) in self.counts.iter().zip(&binom).enumerate() {
            if u128::from(a) > c {
                return Err(format!("a_{k} = {a} exceeds C({m},{k}) = {c}"));
            }
        }
        if increasing {
            for k in 0..self.counts.len() - 1 {
                let lhs = u128::from(self.counts[k]) * binom[k + 1];
                let rhs = u128::from(self.counts[k + 1]) * binom[k];
                if lhs > rhs {
                    return Err(format!(
                        "a_k / C(M,k) decreases between k = {k} and {}",
                        k + 1
                    ));
                }
            }
        }
        Ok(())
    }
}

fn binomial_row(m: u64) -> Vec<u128> {
    let mut row = vec![1u128; m as usize + 1];
    for k in 1..=m as usize {
        row[k] = row[k - 1] * u128::from(m - k as u64 + 1) / k as u128;
    }
    row
}

/// Natural log of `C(m, k)` for every `k`, accumulated term by term.
pub fn ln_binomial_row(m: u32) -> Vec<f64> {
    let mut row = vec![0.0; m as usize + 1];
    for k in 1..=m as usize {
        row[k] = row[k - 1] + ((m as usize - k + 1) as f64).ln() - (k as f64).ln();
    }
    row
}

/// `sum_k a_k p^k (1-p)^(M-k)`, each term formed in log space.
pub fn eval_polynomial(poly: &ConnectivityPolynomial, p: f64) -> Result<f64> {
    check_probability(p)?;
    let m = poly.bonds as usize;
    if p == 0.0 {
        return Ok(poly.counts[0] as f64);
    }
    if p == 1.0 {
        return Ok(poly.counts[m] as f64);
    }
    let q = 1.0 - p;
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let sum = |counts: &mut dyn Iterator<Item = (usize, u64)>| -> f64 {
        counts
            .filter(|&(_, a)| a > 0)
            .map(|(k, a)| {
                let (pk, qk) = (p.powi(k as i32), q.powi((m - k) as i32));
                if pk.is_normal() && qk.is_normal() {
                    a as f64 * pk * qk
                } else {
                    ((a as f64).ln() + k as f64 * lp + (m - k) as f64 * lq).exp()
                }
            })
            .sum()
    };
    // Sum whichever side is smaller so a near-certain event keeps its precision.
    let hits: u128 = poly.counts.iter().map(|&a| a as u128).sum();
    let total = if 2 * hits > 1u128 << m {
        let mut binom = 1u64;
        let mut misses = poly.counts.iter().enumerate().map(|(k, &a)| {
            let c = binom;
            binom = (binom as u128 * (m - k) as u128 / (k + 1) as u128) as u64;
            (k, c - a)
        });
        1.0 - sum(&mut misses)
    } else {
        sum(&mut poly.counts.iter().copied().enumerate())
    };
    Ok(total.clamp(0.0, 1.0))
}

/// Exact rational evaluation, for tests and audits.
pub fn eval_polynomial_exact(poly: &ConnectivityPolynomial, p: &BigRational) -> BigRational {
    let q = BigRational::one() - p;
    let mut total = BigRational::zero();
    for (k, &a) in poly.counts.iter().enumerate() {
        if a == 0 {
            continue;
        }
        let term = BigRational::from_integer(BigInt::from(a))
            * num_traits::pow(p.clone(), k)
            * num_traits::pow(q.clone(), poly.bonds as usize - k);
        total += term;
    }
    total
}

pub fn connectivity_counts(
    graph: &LatticeGraph,
    event: &Event,
    cap: u32,
) -> Result<ConnectivityPolynomial> {
    Ok(connectivity_counts_many(graph, std::slice::from_ref(event), cap)?.remove(0))
}

/// One enumeration pass shared by several events.
pub fn connectivity_counts_many(
    graph: &LatticeGraph,
    events: &[Event],
    cap: u32,
) -> Result<Vec<ConnectivityPolynomial>> {
    let m = graph.bond_count();
    if m > cap.min(63) {
        return Err(Error::EnumerationCap { bonds: m, cap });
    }
    for e in events {
        graph.check_vertex(e.u)?;
        graph.check_vertex(e.v)?;
    }
    let total: u64 = 1 << m;
    let prefix_bits = m.min(10);
    let chunk = total >> prefix_bits;
    let needs_boundary = events.iter().any(|e| e.kind == EventKind::Truncated);

    let counts = (0..1u64 << prefix_bits)
        .into_par_iter()
        .map(|c| {
            let mut ds = DisjointSet::new(graph.vertex_count() as usize);
            let mut counts = vec![vec![0u64; m as usize + 1]; events.len()];
            let mut boundary_roots = Vec::new();
            for mask in c * chunk..(c + 1) * chunk {
                ds.reset();
                let mut bits = mask;
                while bits != 0 {
                    let b = bits.trailing_zeros();
                    bits &= bits - 1;
                    let [x, y] = graph.bond(b);
                    ds.union(x, y);
                }
                if needs_boundary {
                    boundary_roots.clear();
                    boundary_roots.extend(graph.boundary_vertices().iter().map(|&v| ds.find(v)));
                }
                let k = mask.count_ones() as usize;
                for (e, row) in events.iter().zip(counts.iter_mut()) {
                    let ru = ds.find(e.u);
                    let holds = ds.find(e.v) == ru
                        && (e.kind == EventKind::TwoPoint || !boundary_roots.contains(&ru));
                    if holds {
                        row[k] += 1;
                    }
                }
            }
            counts
        })
        .reduce(
            || vec![vec![0u64; m as usize + 1]; events.len()],
            |mut a, b| {
                for (ra, rb) in a.iter_mut().zip(b) {
                    for (x, y) in ra.iter_mut().zip(rb) {
                        *x += y;
                    }
                }
                a
            },
        );
    counts
        .into_iter()
        .map(|c| ConnectivityPolynomial::new(m, c))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactPoint {
    pub n: u32,
    pub value: f64,
}

/// Exact `tau` (or truncated proxy) at each `n` along the first axis.
pub fn exact_curve(
    graph: &LatticeGraph,
    p: f64,
    n_list: &[u32],
    kind: EventKind,
    cap: u32,
) -> Result<Vec<ExactPoint>> {
    check_probability(p)?;
    let polys = exact_polynomials(graph, n_list, kind, cap)?;
    n_list
        .iter()
        .zip(&polys)
        .map(|(&n, poly)| {
            Ok(ExactPoint {
                n,
                value: eval_polynomial(poly, p)?,
            })
        })
        .collect()
}

pub fn exact_polynomials(
    graph: &LatticeGraph,
    n_list: &[u32],
    kind: EventKind,
    cap: u32,
) -> Result<Vec<ConnectivityPolynomial>> {
    let events = n_list
        .iter()
        .map(|&n| {
            let (u, v) = graph.axis_pair(n)?;
            Ok(Event { kind, u, v })
        })
        .collect::<Result<Vec<_>>>()?;
    connectivity_counts_many(graph, &events, cap)
}

/// JSON export form of one polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialExport {
    #[serde(rename = "M")]
    pub bonds: u32,
    pub counts: Vec<u64>,
    pub event: String,
    pub u: Vec<i64>,
    pub v: Vec<i64>,
    pub graph: GraphInfo,
}

impl PolynomialExport {
    pub fn new(graph: &LatticeGraph, event: &Event, poly: &ConnectivityPolynomial) -> Self {
        PolynomialExport {
            bonds: poly.bonds,
            counts: poly.counts.clone(),
            event: event.kind.as_str().to_string(),
            u: graph.coords(event.u),
            v: graph.coords(event.v),
            graph: graph.info(),
        }
    }
}
