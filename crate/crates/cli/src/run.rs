use percolab::analysis::{
    check_bounds, check_monotone, fit_oz, ratio_diagnostic, scan_monotonicity, BoundVerdict,
    MonoVerdict, OzForm, RatioVerdict, ScanOptions,
};
use percolab::estimators::{
    estimate_curve, sweep_estimate, CurveOptions, PairedCurve, SweepOptions,
};
use percolab::lattice::{GraphInfo, LatticeGraph};
use percolab::oracle::{exact_curve, exact_polynomials};
use percolab::percolation::TRUNCATED_PROXY_NOTE;
use percolab::EventKind;
use serde::Serialize;
use serde_json::json;

use crate::config::{Kind, RunConfig, Source};
use crate::error::{CliError, CliResult};
use crate::report::{read_curve, CsvTable, Report};

pub struct Outcome {
    pub report: Report,
    pub csv: Option<CsvTable>,
    /// Some statistical verdict came back inconclusive.
    pub inconclusive: bool,
}

#[derive(Serialize)]
struct ExactEntry {
    n: u32,
    #[serde(rename = "M")]
    bonds: u32,
    counts: Vec<u64>,
    u: Vec<i64>,
    v: Vec<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
}

fn to_value(v: impl Serialize) -> serde_json::Value {
    serde_json::to_value(v).expect("result serializes")
}

fn curve_options(cfg: &RunConfig, p: f64) -> CurveOptions {
    CurveOptions {
        p,
        n_list: cfg.n_list.clone(),
        event: cfg.event,
        samples: cfg.samples,
        seed: cfg.seed,
        workers: cfg.workers,
        level: cfg.level,
        strategy: cfg.strategy,
    }
}

fn the_p(cfg: &RunConfig) -> f64 {
    cfg.p.expect("validated: p is present")
}

/// The curve an analysis subcommand works on, and the graph it came from.
fn obtain_curve(cfg: &RunConfig) -> CliResult<(PairedCurve, Option<GraphInfo>)> {
    match cfg.source {
        Source::File => {
            let (curve, info) =
                read_curve(cfg.input.as_deref().expect("validated: input is present"))?;
            let d = cfg.lattice.dimension();
            if let Some(g) = &info {
                if g.d != d {
                    return Err(CliError::invalid(
                        "d",
                        format!("the input curve comes from a d = {} box, not d = {d}", g.d),
                    ));
                }
            }
            Ok((curve, info))
        }
        Source::Exact => {
            let g = cfg.lattice.build()?;
            let p = the_p(cfg);
            let pts = exact_curve(&g, p, &cfg.n_list, cfg.event, cfg.cap)?;
            Ok((PairedCurve::from_exact(p, cfg.event, &pts), Some(g.info())))
        }
        Source::Mc => {
            let g = cfg.lattice.build()?;
            let curve = estimate_curve(&g, &curve_options(cfg, the_p(cfg)))?;
            Ok((curve, Some(g.info())))
        }
    }
}

fn graph(cfg: &RunConfig) -> CliResult<LatticeGraph> {
    Ok(cfg.lattice.build()?)
}

pub fn run(cfg: RunConfig) -> CliResult<Outcome> {
    let mut notes = Vec::new();
    let mut inconclusive = false;
    let mut csv = None;
    let (graph_info, result) = match cfg.subcommand {
        Kind::Exact => {
            let g = graph(&cfg)?;
            let polys = exact_polynomials(&g, &cfg.n_list, cfg.event, cfg.cap)?;
            let values = match cfg.p {
                Some(p) => Some(exact_curve(&g, p, &cfg.n_list, cfg.event, cfg.cap)?),
                None => None,
            };
            let entries: Vec<ExactEntry> = cfg
                .n_list
                .iter()
                .zip(polys)
                .enumerate()
                .map(|(i, (&n, poly))| {
                    let (u, v) = g.axis_pair(n).expect("validated: n inside the box");
                    ExactEntry {
                        n,
                        bonds: poly.bonds,
                        counts: poly.counts,
                        u: g.coords(u),
                        v: g.coords(v),
                        value: values.as_ref().map(|vals| vals[i].value),
                    }
                })
                .collect();
            if let Some(vals) = &values {
                csv = Some(CsvTable::Curve(PairedCurve::from_exact(
                    the_p(&cfg),
                    cfg.event,
                    vals,
                )));
            }
            (
                Some(g.info()),
                json!({ "event": cfg.event, "p": cfg.p, "polynomials": to_value(entries) }),
            )
        }
        Kind::Tau | Kind::TauTrunc => {
            let g = graph(&cfg)?;
            let curve = estimate_curve(&g, &curve_options(&cfg, the_p(&cfg)))?;
            csv = Some(CsvTable::Curve(curve.clone()));
            (Some(g.info()), json!({ "curve": to_value(curve) }))
        }
        Kind::Sweep => {
            let g = graph(&cfg)?;
            let opts = SweepOptions {
                n_list: cfg.n_list.clone(),
                p_grid: cfg.p_grid.clone().expect("validated: grid is present"),
                sweeps: cfg.sweeps,
                seed: cfg.seed,
                workers: cfg.workers,
                level: cfg.level,
            };
            let fam = sweep_estimate(&g, cfg.event, &opts)?;
            csv = Some(CsvTable::Sweep(fam.clone()));
            (Some(g.info()), json!({ "sweep": to_value(fam) }))
        }
        Kind::FitOz => {
            let (curve, info) = obtain_curve(&cfg)?;
            let d = cfg.lattice.dimension();
            let fit = fit_oz(&curve.points(), d, cfg.form, cfg.window)?;
            notes.push("p-dependent prefactors are absorbed into the fitted amplitude".to_string());
            csv = Some(CsvTable::Curve(curve.clone()));
            (
                info,
                json!({ "curve": to_value(curve), "fit": to_value(fit) }),
            )
        }
        Kind::CheckBounds => {
            let (curve, info) = obtain_curve(&cfg)?;
            let d = cfg.lattice.dimension();
            let rep = check_bounds(
                &curve.points(),
                curve.p,
                d,
                cfg.bound,
                &cfg.bound_params,
                cfg.z,
            )?;
            notes.push(
                "bound constants exist but are not pinned; the values used are echoed in config.bound_params"
                    .to_string(),
            );
            inconclusive = rep
                .entries
                .iter()
                .any(|e| e.verdict == BoundVerdict::Inconclusive);
            csv = Some(CsvTable::Curve(curve.clone()));
            (
                info,
                json!({ "curve": to_value(curve), "bounds": to_value(rep) }),
            )
        }
        Kind::Ratio => {
            let (curve, info) = obtain_curve(&cfg)?;
            let d = cfg.lattice.dimension();
            let (xi, fit) = match cfg.xi {
                Some(xi) => (xi, None),
                None => {
                    let form = if curve.event == EventKind::TwoPoint {
                        OzForm::Lemma1
                    } else if d == 2 {
                        OzForm::Lemma5
                    } else {
                        OzForm::Lemma3
                    };
                    let fit = fit_oz(&curve.points(), d, form, cfg.window)?;
                    (fit.xi, Some(fit))
                }
            };
            let rep = ratio_diagnostic(&curve, xi, d, cfg.z)?;
            inconclusive = rep
                .entries
                .iter()
                .any(|e| e.verdict == RatioVerdict::Inconclusive);
            csv = Some(CsvTable::Curve(curve.clone()));
            (
                info,
                json!({ "curve": to_value(curve), "fit": to_value(fit), "ratio": to_value(rep) }),
            )
        }
        Kind::MonoCheck => {
            let (curve, info) = obtain_curve(&cfg)?;
            let rep = check_monotone(&curve, cfg.z);
            inconclusive = rep.overall != MonoVerdict::DecreasingConfirmed;
            csv = Some(CsvTable::Curve(curve.clone()));
            (
                info,
                json!({ "curve": to_value(curve), "monotonicity": to_value(rep) }),
            )
        }
        Kind::MonoScan => {
            let g = graph(&cfg)?;
            let opts = ScanOptions {
                event: cfg.event,
                p_grid: cfg.p_grid.clone().expect("validated: grid is present"),
                n_list: cfg.n_list.clone(),
                samples: cfg.samples,
                seed: cfg.seed,
                workers: cfg.workers,
                z: cfg.z,
                level: cfg.level,
            };
            let scan = scan_monotonicity(&g, &opts)?;
            inconclusive = scan
                .reports
                .iter()
                .any(|r| r.overall != MonoVerdict::DecreasingConfirmed);
            (Some(g.info()), json!({ "scan": to_value(scan) }))
        }
    };
    let truncated = cfg.event == EventKind::Truncated
        || result.pointer("/curve/event").and_then(|e| e.as_str()) == Some("truncated");
    if truncated {
        notes.insert(0, TRUNCATED_PROXY_NOTE.to_string());
    }
    let report = Report::new(cfg, graph_info, notes, result);
    Ok(Outcome {
        report,
        csv,
        inconclusive,
    })
}
