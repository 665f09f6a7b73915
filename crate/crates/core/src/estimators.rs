//! Monte Carlo estimation of connectivity curves.
//!
//! Every replica is one bond configuration drawn from its own counter-based
//! stream `(seed, replica)`, and all target distances are evaluated on that
//! same configuration. Successive differences `tau(n) - tau(n')` are therefore
//! paired (common random numbers). Tallies are integer counts merged by
//! addition over fixed replica blocks, so the output does not depend on the
//! number of worker threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dsu::DisjointSet;
use crate::error::{check_probability, Error, Result};
use crate::lattice::{LatticeGraph, Vertex};
use crate::oracle::{ln_binomial_row, ExactPoint};
use crate::percolation::{bond_mark, sample_config, ClusterProbe, EventKind, UnionFindEvaluator};
use crate::regression::{fit_line, ErrorModel, LineFit};
use crate::rng::RngStream;

/// Replicas per work unit; fixed so the reduction tree is worker-independent.
const BLOCK: u64 = 1 << 14;

pub const DEFAULT_LEVEL: f64 = 0.95;

/// Two-sided standard-normal quantile for a confidence level in (0, 1).
pub fn normal_quantile(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::arg("level", format!("{level} is not in (0, 1)")));
    }
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(n.inverse_cdf(0.5 + level / 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Estimate {
    /// Sample proportion with a Wilson score interval.
    pub fn proportion(hits: u64, samples: u64, level: f64) -> Result<Self> {
        let z = normal_quantile(level)?;
        let n = samples as f64;
        let mean = hits as f64 / n;
        let stderr = (mean * (1.0 - mean) / n).sqrt();
        let z2 = z * z;
        let denom = 1.0 + z2 / n;
        let centre = (mean + z2 / (2.0 * n)) / denom;
        let half = z / denom * (mean * (1.0 - mean) / n + z2 / (4.0 * n * n)).sqrt();
        Ok(Estimate {
            mean,
            stderr,
            samples,
            ci_low: (centre - half).clamp(0.0, mean),
            ci_high: (centre + half).clamp(mean, 1.0),
        })
    }

    /// Normal-approximation interval for a non-proportion mean in [0, 1].
    pub fn normal(mean: f64, stderr: f64, samples: u64, level: f64) -> Result<Self> {
        let z = normal_quantile(level)?;
        let mean = mean.clamp(0.0, 1.0);
        Ok(Estimate {
            mean,
            stderr,
            samples,
            ci_low: (mean - z * stderr).clamp(0.0, mean),
            ci_high: (mean + z * stderr).clamp(mean, 1.0),
        })
    }

    pub fn exact(value: f64) -> Self {
        Estimate {
            mean: value,
            stderr: 0.0,
            samples: 0,
            ci_low: value,
            ci_high: value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveEntry {
    pub n: u32,
    #[serde(flatten)]
    pub estimate: Estimate,
    /// Replicas on which the event held; absent for exact or synthetic curves.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hits: Option<u64>,
}

/// Paired difference between successive entries `n` and `n_next`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffEntry {
    pub n: u32,
    pub n_next: u32,
    pub mean: f64,
    pub stderr: f64,
    /// Replicas where exactly one of the two events held.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discordant: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedCurve {
    pub p: f64,
    pub event: EventKind,
    pub samples: u64,
    pub entries: Vec<CurveEntry>,
    pub diffs: Vec<DiffEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: u32,
    pub value: f64,
    pub stderr: f64,
}

impl PairedCurve {
    pub fn from_exact(p: f64, event: EventKind, points: &[ExactPoint]) -> Self {
        let pts: Vec<CurvePoint> = points
            .iter()
            .map(|e| CurvePoint {
                n: e.n,
                value: e.value,
                stderr: 0.0,
            })
            .collect();
        Self::from_points(p, event, &pts)
    }

    /// Curve from values with independent errors; diff errors add in quadrature.
    pub fn from_points(p: f64, event: EventKind, points: &[CurvePoint]) -> Self {
        let entries: Vec<CurveEntry> = points
            .iter()
            .map(|c| CurveEntry {
                n: c.n,
                estimate: Estimate {
                    mean: c.value,
                    stderr: c.stderr,
                    samples: 0,
                    ci_low: c.value,
                    ci_high: c.value,
                },
                hits: None,
            })
            .collect();
        let diffs = points
            .windows(2)
            .map(|w| DiffEntry {
                n: w[0].n,
                n_next: w[1].n,
                mean: w[0].value - w[1].value,
                stderr: w[0].stderr.hypot(w[1].stderr),
                discordant: None,
            })
            .collect();
        PairedCurve {
            p,
            event,
            samples: 0,
            entries,
            diffs,
        }
    }

    pub fn points(&self) -> Vec<CurvePoint> {
        self.entries
            .iter()
            .map(|e| CurvePoint {
                n: e.n,
                value: e.estimate.mean,
                stderr: e.estimate.stderr,
            })
            .collect()
    }

    pub fn entry(&self, n: u32) -> Option<&CurveEntry> {
        self.entries.iter().find(|e| e.n == n)
    }

    /// Covariance of the two sample means of a successive pair, recovered
    /// from `var(a - b) = var(a) + var(b) - 2 cov(a, b)`.
    pub fn pair_covariance(&self, i: usize) -> f64 {
        let a = self.entries[i].estimate.stderr;
        let b = self.entries[i + 1].estimate.stderr;
        let d = self.diffs[i].stderr;
        0.5 * (a * a + b * b - d * d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Grow only the cluster of the origin, drawing bond marks on demand.
    #[default]
    ClusterProbe,
    /// Sample every bond, then label clusters with a fresh disjoint-set.
    UnionFind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveOptions {
    pub p: f64,
    pub n_list: Vec<u32>,
    pub event: EventKind,
    pub samples: u64,
    pub seed: u64,
    pub workers: usize,
    pub level: f64,
    pub strategy: Strategy,
}

impl CurveOptions {
    pub fn new(p: f64, n_list: Vec<u32>, event: EventKind, samples: u64, seed: u64) -> Self {
        CurveOptions {
            p,
            n_list,
            event,
            samples,
            seed,
            workers: 1,
            level: DEFAULT_LEVEL,
            strategy: Strategy::default(),
        }
    }

    pub fn workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }
}

pub(crate) fn check_n_list(n_list: &[u32]) -> Result<()> {
    if n_list.is_empty() {
        return Err(Error::arg("n", "empty list of distances"));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::arg("n", "distances must be strictly increasing"));
    }
    Ok(())
}

fn resolve_targets(graph: &LatticeGraph, n_list: &[u32]) -> Result<(Vertex, Vec<Vertex>)> {
    check_n_list(n_list)?;
    let origin = graph.origin()?;
    let targets = n_list
        .iter()
        .map(|&n| graph.axis_pair(n).map(|(_, t)| t))
        .collect::<Result<Vec<_>>>()?;
    Ok((origin, targets))
}

pub(crate) fn worker_pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        return Err(Error::arg("workers", "must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Pool(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Tally {
    hits: Vec<u64>,
    discordant: Vec<u64>,
}

impl Tally {
    fn zero(k: usize) -> Self {
        Tally {
            hits: vec![0; k],
            discordant: vec![0; k.saturating_sub(1)],
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.hits.iter_mut().zip(other.hits) {
            *a += b;
        }
        for (a, b) in self.discordant.iter_mut().zip(other.discordant) {
            *a += b;
        }
        self
    }

    fn record(&mut self, flags: &[bool]) {
        for (h, &f) in self.hits.iter_mut().zip(flags) {
            *h += u64::from(f);
        }
        for (d, w) in self.discordant.iter_mut().zip(flags.windows(2)) {
            *d += u64::from(w[0] != w[1]);
        }
    }
}

pub fn estimate_curve(graph: &LatticeGraph, opts: &CurveOptions) -> Result<PairedCurve> {
    check_probability(opts.p)?;
    if opts.samples == 0 {
        return Err(Error::arg("samples", "must be at least 1"));
    }
    normal_quantile(opts.level)?;
    let (origin, targets) = resolve_targets(graph, &opts.n_list)?;
    let pool = worker_pool(opts.workers)?;
    let k = targets.len();
    let blocks = opts.samples.div_ceil(BLOCK);
    let p = opts.p;

    let run_block = |block: u64| -> Tally {
        let mut tally = Tally::zero(k);
        let mut flags = vec![false; k];
        let first = block * BLOCK;
        let last = (first + BLOCK).min(opts.samples);
        match opts.strategy {
            Strategy::ClusterProbe => {
                let mut probe = ClusterProbe::new(graph, &targets);
                for replica in first..last {
                    let stream = RngStream::new(opts.seed, replica);
                    probe.run(
                        graph,
                        opts.event,
                        origin,
                        |b| bond_mark(&stream, p, b),
                        &mut flags,
                    );
                    tally.record(&flags);
                }
            }
            Strategy::UnionFind => {
                let mut eval = UnionFindEvaluator::new(graph);
                for replica in first..last {
                    let stream = RngStream::new(opts.seed, replica);
                    let config = sample_config(graph, p, &stream).expect("p validated");
                    eval.evaluate(graph, &config, opts.event, origin, &targets, &mut flags);
                    tally.record(&flags);
                }
            }
        }
        tally
    };

    let tally = pool.install(|| {
        (0..blocks)
            .into_par_iter()
            .map(run_block)
            .reduce(|| Tally::zero(k), Tally::merge)
    });
    assemble(opts, tally)
}

fn assemble(opts: &CurveOptions, tally: Tally) -> Result<PairedCurve> {
    let n = opts.samples as f64;
    let entries = opts
        .n_list
        .iter()
        .zip(&tally.hits)
        .map(|(&dist, &h)| {
            Ok(CurveEntry {
                n: dist,
                estimate: Estimate::proportion(h, opts.samples, opts.level)?,
                hits: Some(h),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let diffs = (0..tally.discordant.len())
        .map(|i| {
            let (a, b) = (tally.hits[i], tally.hits[i + 1]);
            let mean = (a as f64 - b as f64) / n;
            // d in {-1, 0, 1}: E[d^2] is the discordant fraction
            let second = tally.discordant[i] as f64 / n;
            let var = (second - mean * mean).max(0.0);
            DiffEntry {
                n: opts.n_list[i],
                n_next: opts.n_list[i + 1],
                mean,
                stderr: (var / n).sqrt(),
                discordant: Some(tally.discordant[i]),
            }
        })
        .collect();
    Ok(PairedCurve {
        p: opts.p,
        event: opts.event,
        samples: opts.samples,
        entries,
        diffs,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub n_list: Vec<u32>,
    pub p_grid: Vec<f64>,
    pub sweeps: u64,
    pub seed: u64,
    pub workers: usize,
    pub level: f64,
}

impl SweepOptions {
    pub fn new(n_list: Vec<u32>, p_grid: Vec<f64>, sweeps: u64, seed: u64) -> Self {
        SweepOptions {
            n_list,
            p_grid,
            sweeps,
            seed,
            workers: 1,
            level: DEFAULT_LEVEL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n: u32,
    #[serde(flatten)]
    pub estimate: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub p: f64,
    pub entries: Vec<SweepPoint>,
}

/// Curves over a whole p-grid from one set of bond-addition sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFamily {
    pub bonds: u32,
    pub sweeps: u64,
    pub n_list: Vec<u32>,
    /// `first_hit[i][k]`: sweeps whose event at `n_list[i]` first held after
    /// exactly `k` bonds were added.
    pub first_hit: Vec<Vec<u64>>,
    pub curves: Vec<SweepCurve>,
}

impl SweepFamily {
    /// Estimated `E[I_k]`, the probability the event holds with `k` random
    /// bonds open, for every `k = 0..=M`.
    pub fn occupation_fraction(&self, index: usize) -> Vec<f64> {
        let s = self.sweeps as f64;
        let mut acc = 0u64;
        self.first_hit[index]
            .iter()
            .map(|&h| {
                acc += h;
                acc as f64 / s
            })
            .collect()
    }
}

/// `P(Binomial(M, p) >= k)` for every `k = 0..=M`.
pub fn binomial_upper_tails(m: u32, p: f64) -> Vec<f64> {
    let mut tail = vec![0.0; m as usize + 2];
    if p <= 0.0 {
        tail[0] = 1.0;
    } else if p >= 1.0 {
        tail[..=m as usize].fill(1.0);
    } else {
        let lnc = ln_binomial_row(m);
        let (lp, lq) = (p.ln(), (-p).ln_1p());
        for k in (0..=m as usize).rev() {
            let pmf = (lnc[k] + k as f64 * lp + (m as usize - k) as f64 * lq).exp();
            tail[k] = tail[k + 1] + pmf;
        }
        for t in tail.iter_mut() {
            *t = t.min(1.0);
        }
    }
    tail.truncate(m as usize + 1);
    tail
}

/// Bond-addition sweep estimator for increasing events.
///
/// Each sweep adds the bonds in a uniformly random order and records the
/// occupation count at which each event first holds. Because the event is
/// increasing, the sweep's estimate at density `p` is the binomial upper tail
/// at that count, so every `p` in the grid is served by the same sweeps.
pub fn sweep_estimate(
    graph: &LatticeGraph,
    event: EventKind,
    opts: &SweepOptions,
) -> Result<SweepFamily> {
    if !event.is_increasing() {
        return Err(Error::NotIncreasing);
    }
    if opts.sweeps == 0 {
        return Err(Error::arg("sweeps", "must be at least 1"));
    }
    for &p in &opts.p_grid {
        check_probability(p)?;
    }
    normal_quantile(opts.level)?;
    let (origin, targets) = resolve_targets(graph, &opts.n_list)?;
    let pool = worker_pool(opts.workers)?;
    let m = graph.bond_count();
    let k = targets.len();
    let blocks = opts.sweeps.div_ceil(BLOCK);

    let run_block = |block: u64| -> Vec<Vec<u64>> {
        let mut hist = vec![vec![0u64; m as usize + 1]; k];
        let mut ds = DisjointSet::new(graph.vertex_count() as usize);
        let mut order: Vec<u32> = (0..m).collect();
        let mut first = vec![0u32; k];
        let lo = block * BLOCK;
        let hi = (lo + BLOCK).min(opts.sweeps);
        for sweep in lo..hi {
            ds.reset();
            for (o, b) in order.iter_mut().zip(0..m) {
                *o = b;
            }
            let mut cursor = RngStream::new(opts.seed, sweep).cursor();
            rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut cursor);
            let mut pending = 0usize;
            for (f, &t) in first.iter_mut().zip(&targets) {
                if t == origin {
                    *f = 0;
                } else {
                    *f = u32::MAX;
                    pending += 1;
                }
            }
            for (added, &b) in order.iter().enumerate() {
                if pending == 0 {
                    break;
                }
                let [x, y] = graph.bond(b);
                let ro = ds.find(origin);
                let (rx, ry) = (ds.find(x), ds.find(y));
                if rx == ry || (rx != ro && ry != ro) {
                    ds.union(x, y);
                    continue;
                }
                let root = ds.union(x, y).expect("distinct roots");
                for (f, &t) in first.iter_mut().zip(&targets) {
                    if *f == u32::MAX && ds.find(t) == root {
                        *f = added as u32 + 1;
                        pending -= 1;
                    }
                }
            }
            for (h, &f) in hist.iter_mut().zip(&first) {
                // a target never reached stays in no bin: the event fails for every k
                if f != u32::MAX {
                    h[f as usize] += 1;
                }
            }
        }
        hist
    };

    let first_hit = pool.install(|| {
        (0..blocks).into_par_iter().map(run_block).reduce(
            || vec![vec![0u64; m as usize + 1]; k],
            |mut a, b| {
                for (ra, rb) in a.iter_mut().zip(b) {
                    for (x, y) in ra.iter_mut().zip(rb) {
                        *x += y;
                    }
                }
                a
            },
        )
    });

    let s = opts.sweeps as f64;
    let curves = opts
        .p_grid
        .iter()
        .map(|&p| {
            let tail = binomial_upper_tails(m, p);
            let entries = opts
                .n_list
                .iter()
                .zip(&first_hit)
                .map(|(&n, hist)| {
                    let (mut m1, mut m2) = (0.0, 0.0);
                    for (kk, &h) in hist.iter().enumerate() {
                        if h > 0 {
                            m1 += h as f64 * tail[kk];
                            m2 += h as f64 * tail[kk] * tail[kk];
                        }
                    }
                    let mean = m1 / s;
                    let var = (m2 / s - mean * mean).max(0.0);
                    Ok(SweepPoint {
                        n,
                        estimate: Estimate::normal(
                            mean,
                            (var / s).sqrt(),
                            opts.sweeps,
                            opts.level,
                        )?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepCurve { p, entries })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SweepFamily {
        bonds: m,
        sweeps: opts.sweeps,
        n_list: opts.n_list.clone(),
        first_hit,
        curves,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum XiModel {
    PureExponential,
    /// `log A - n / xi - nu log n` with `nu` held fixed.
    OzCorrected {
        nu: f64,
    },
}

impl XiModel {
    pub fn nu(&self) -> f64 {
        match *self {
            XiModel::PureExponential => 0.0,
            XiModel::OzCorrected { nu } => nu,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub n: u32,
    /// Observed minus fitted log value.
    pub residual: f64,
}

/// Residual diagnostics. `trend` is the coefficient of a weighted regression
/// of the log residuals on `1/n`, the leading finite-n correction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    pub rms: f64,
    pub max_abs: f64,
    pub trend: f64,
    pub trend_stderr: f64,
    pub trend_flagged: bool,
}

/// Residuals smaller than this are float noise, never a trend.
const RESIDUAL_FLOOR: f64 = 1e-9;
const TREND_Z: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiEstimate {
    pub xi: f64,
    pub stderr: f64,
    pub amplitude: f64,
    pub amplitude_stderr: f64,
    pub fit_window: [u32; 2],
    pub model: XiModel,
    pub points_used: usize,
    pub residuals: Vec<Residual>,
    pub diagnostics: ResidualSummary,
}

/// Longest contiguous run of points with `n >= 1` and `value > 10 stderr`.
pub fn default_window(points: &[CurvePoint]) -> Option<(u32, u32)> {
    let mut best: Option<(usize, usize)> = None;
    let mut start: Option<usize> = None;
    for (i, c) in points.iter().enumerate() {
        let ok = c.n >= 1 && c.value > 0.0 && c.value > 10.0 * c.stderr;
        match (ok, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if best.map_or(true, |(a, b)| i - s > b - a + 1) {
                    best = Some((s, i - 1));
                }
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        let e = points.len() - 1;
        if best.map_or(true, |(a, b)| e - s > b - a) {
            best = Some((s, e));
        }
    }
    best.map(|(a, b)| (points[a].n, points[b].n))
}

/// Weighted least-squares estimate of the correlation length from a curve.
pub fn estimate_xi(
    points: &[CurvePoint],
    model: XiModel,
    window: Option<(u32, u32)>,
) -> Result<XiEstimate> {
    let (lo, hi) = match window {
        Some(w) => w,
        None => default_window(points).ok_or(Error::InsufficientPoints { need: 3, got: 0 })?,
    };
    let sel: Vec<CurvePoint> = points
        .iter()
        .copied()
        .filter(|c| c.n >= lo && c.n <= hi)
        .collect();
    if sel.len() < 3 {
        return Err(Error::InsufficientPoints {
            need: 3,
            got: sel.len(),
        });
    }
    let nu = model.nu();
    for c in &sel {
        if !(c.value > 0.0) {
            return Err(Error::NonPositiveValue {
                n: c.n,
                value: c.value,
            });
        }
        if c.n == 0 && nu != 0.0 {
            return Err(Error::arg(
                "window",
                "n = 0 is outside the power-corrected model",
            ));
        }
    }
    let weighted = sel.iter().all(|c| c.stderr > 0.0);
    if !weighted && sel.iter().any(|c| c.stderr > 0.0) {
        return Err(Error::arg(
            "stderr",
            "fit window mixes exact and noisy points",
        ));
    }
    let x: Vec<f64> = sel.iter().map(|c| f64::from(c.n)).collect();
    let y: Vec<f64> = sel
        .iter()
        .map(|c| {
            c.value.ln()
                + if nu != 0.0 {
                    nu * f64::from(c.n).ln()
                } else {
                    0.0
                }
        })
        .collect();
    let w: Vec<f64> = sel
        .iter()
        .map(|c| {
            if weighted {
                (c.value / c.stderr).powi(2)
            } else {
                1.0
            }
        })
        .collect();
    let errors = if weighted {
        ErrorModel::KnownVariance
    } else {
        ErrorModel::FromResiduals
    };
    let fit = fit_line(&x, &y, &w, errors)?;
    if !(fit.slope < 0.0) {
        return Err(Error::NonDecaying(fit.slope));
    }
    let xi = -1.0 / fit.slope;
    let residuals: Vec<Residual> = sel
        .iter()
        .zip(x.iter().zip(&y))
        .map(|(c, (&xx, &yy))| Residual {
            n: c.n,
            residual: yy - fit.intercept - fit.slope * xx,
        })
        .collect();
    let diagnostics = residual_summary(&residuals, &w);
    let amplitude = fit.intercept.exp();
    Ok(XiEstimate {
        xi,
        stderr: fit.var_slope.sqrt() / (fit.slope * fit.slope),
        amplitude,
        amplitude_stderr: amplitude * fit.var_intercept.sqrt(),
        fit_window: [sel[0].n, sel[sel.len() - 1].n],
        model,
        points_used: sel.len(),
        residuals,
        diagnostics,
    })
}

fn residual_summary(residuals: &[Residual], w: &[f64]) -> ResidualSummary {
    let n = residuals.len() as f64;
    let rms = (residuals
        .iter()
        .map(|r| r.residual * r.residual)
        .sum::<f64>()
        / n)
        .sqrt();
    let max_abs = residuals
        .iter()
        .map(|r| r.residual.abs())
        .fold(0.0, f64::max);
    let u: Vec<f64> = residuals
        .iter()
        .map(|r| 1.0 / f64::from(r.n.max(1)))
        .collect();
    let rv: Vec<f64> = residuals.iter().map(|r| r.residual).collect();
    let (trend, trend_stderr) = match fit_line(&u, &rv, w, ErrorModel::FromResiduals) {
        Ok(LineFit {
            slope, var_slope, ..
        }) => (slope, var_slope.sqrt()),
        Err(_) => (0.0, 0.0),
    };
    let trend_flagged = max_abs > RESIDUAL_FLOOR && trend.abs() > TREND_Z * trend_stderr;
    ResidualSummary {
        rms,
        max_abs,
        trend,
        trend_stderr,
        trend_flagged,
    }
}
