use std::fs::File;
use std::io::{BufWriter, Write};

use quadwalk_core::genfunc::{compare_with_simulator, lambda_series_closed, lambda_series_fixed_point, GenfuncReport};
use quadwalk_core::limit::{
    density_rows, empirical_rescaled_stats, theorem1_asymptotic, time_averaged_sets, EmpiricalStats, EventSite,
    Finding, Theorem1Params, Theorem1Record, Theorem2Params, TimeAverage,
};
use quadwalk_core::reduction::{lemma2_check, reduction_check, DeviationReport, InitialPsi, ReductionReport};
use quadwalk_core::tree::{lemma1_check, Lemma1Report};
use quadwalk_core::walk::{build_walk, distribution, step, BouncePolicy, DistributionRow, Mode, Model, WalkSpec};
use serde::Serialize;

use crate::config::{FormatArg, RunConfig};
use crate::CliError;

const NORM_TOL: f64 = 1e-10;
const LEMMA_TOL: f64 = 1e-10;
const TREE_TOL: f64 = 1e-6;
const TRANSFER_TOL: f64 = 1e-12;
const RENEWAL_TOL: f64 = 1e-10;

fn sink(cfg: &RunConfig) -> Result<Box<dyn Write>, CliError> {
    Ok(match &cfg.output {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(cfg: &RunConfig, value: &T) -> Result<(), CliError> {
    let mut w = sink(cfg)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Invariant(e.to_string()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn write_csv<T: Serialize>(cfg: &RunConfig, rows: &[T]) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(sink(cfg)?);
    for row in rows {
        out.serialize(row).map_err(|e| CliError::Invariant(e.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

fn violations(list: Vec<String>) -> Result<(), CliError> {
    if list.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invariant(list.join("; ")))
    }
}

fn note(lines: &[String]) {
    for l in lines {
        eprintln!("{l}");
    }
}

fn joined_spec(cfg: &RunConfig) -> Result<WalkSpec, CliError> {
    let spec = build_walk(Model::Joined(cfg.k), cfg.coin_params()?, cfg.reduced()?, cfg.mode(), &cfg.psi()?)?;
    Ok(spec.with_boundary(cfg.boundary()))
}

#[derive(Serialize)]
struct SimRow {
    t: u64,
    copy: Option<usize>,
    x: i64,
    y: i64,
    probability: f64,
}

#[derive(Serialize)]
struct Snapshot {
    time: u64,
    sites: Vec<DistributionRow>,
}

#[derive(Serialize)]
struct SimulateReport {
    steps: u64,
    final_norm_sqr: f64,
    max_norm_deviation: f64,
    snapshots: Vec<Snapshot>,
}

pub fn simulate(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.every == 0 {
        return Err(CliError::Usage("--every must be at least 1".into()));
    }
    let model = cfg.model();
    let n = match model {
        Model::Joined(k) => k,
        Model::Quarter => 1,
        Model::Plane | Model::ReducedStar => 4,
    };
    let spec = build_walk(model, cfg.coin_params()?, cfg.reduced()?, cfg.mode(), &cfg.initial_vector(n)?)?
        .with_boundary(cfg.boundary());
    let mut s = spec.initial.clone();
    let mut snapshots = Vec::new();
    let mut max_dev: f64 = 0.0;
    loop {
        let t = s.time();
        max_dev = max_dev.max((s.norm_sqr() - 1.0).abs());
        if t % cfg.every == 0 || t == cfg.steps {
            let rows = distribution(&s).rows().into_iter().filter(|r| r.probability != 0.0).collect();
            snapshots.push(Snapshot { time: t, sites: rows });
        }
        if t == cfg.steps {
            break;
        }
        s = step(&spec, &s)?;
    }
    let report = SimulateReport {
        steps: cfg.steps,
        final_norm_sqr: s.norm_sqr(),
        max_norm_deviation: max_dev,
        snapshots,
    };
    match cfg.format {
        FormatArg::Json => write_json(cfg, &report)?,
        FormatArg::Csv => {
            let rows: Vec<SimRow> = report
                .snapshots
                .iter()
                .flat_map(|snap| {
                    snap.sites.iter().map(move |r| SimRow {
                        t: snap.time,
                        copy: r.copy,
                        x: r.x,
                        y: r.y,
                        probability: r.probability,
                    })
                })
                .collect();
            write_csv(cfg, &rows)?;
        }
    }
    note(&[format!("final norm^2 = {}, max |norm^2 - 1| = {max_dev:e}", report.final_norm_sqr)]);
    let mut bad = Vec::new();
    if spec.mode == Mode::Unitarized && spec.boundary != BouncePolicy::Strict && max_dev > NORM_TOL {
        bad.push(format!("norm drifted by {max_dev:e}"));
    }
    violations(bad)
}

#[derive(Serialize)]
struct ReduceReport {
    lemma2: DeviationReport,
    events: ReductionReport,
    summary: Vec<String>,
}

pub fn reduce_check(cfg: &RunConfig) -> Result<(), CliError> {
    let coin = cfg.coin_params()?;
    let psi = InitialPsi::new(cfg.psi()?, coin.ctilde)?;
    let lemma2 = lemma2_check(coin, &psi, cfg.mode(), cfg.steps)?;
    let events = reduction_check(coin, &psi, cfg.mode(), cfg.steps)?;
    let mut summary = vec![
        format!("lemma2 max deviation = {:e}", lemma2.max_deviation),
        format!("event identity max deviation = {:e}", events.max_event_deviation),
        format!("origin identity max deviation = {:e}", events.max_origin_identity_deviation),
    ];
    if lemma2.max_deviation < LEMMA_TOL {
        summary.push("lemma2 max deviation < 1e-10".into());
    }
    let mut bad = Vec::new();
    if lemma2.max_deviation >= LEMMA_TOL {
        bad.push(format!("lemma2 deviation {:e}", lemma2.max_deviation));
    }
    if events.max_event_deviation >= LEMMA_TOL {
        bad.push(format!("event deviation {:e}", events.max_event_deviation));
    }
    if cfg.mode() == Mode::Unitarized && events.max_total_mass_deviation >= NORM_TOL {
        bad.push(format!("total event mass deviation {:e}", events.max_total_mass_deviation));
    }
    note(&summary);
    write_json(cfg, &ReduceReport { lemma2, events, summary })?;
    violations(bad)
}

#[derive(Serialize)]
struct TreeReport {
    report: Lemma1Report,
    best_deviation: f64,
    matched: bool,
}

pub fn tree_check(cfg: &RunConfig) -> Result<(), CliError> {
    let report = lemma1_check(cfg.coin_params()?, &cfg.psi()?, cfg.steps, cfg.copy_key(), cfg.tree_limit)?;
    let best = report.best();
    let matched = best < TREE_TOL;
    note(&[format!("tree vs joined walk: best deviation over readings = {best:e}")]);
    let mut bad = Vec::new();
    if report.tree_norm_deviation > NORM_TOL {
        bad.push(format!("tree norm drifted by {:e}", report.tree_norm_deviation));
    }
    if !matched {
        bad.push(format!("no reading matches the joined walk (best {best:e})"));
    }
    write_json(cfg, &TreeReport { report, best_deviation: best, matched })?;
    violations(bad)
}

#[derive(Serialize)]
struct GenfuncCheck {
    order: usize,
    lambda_series_oracle_diff: f64,
    report: GenfuncReport,
    summary: Vec<String>,
}

pub fn genfunc_check(cfg: &RunConfig) -> Result<(), CliError> {
    let coin = cfg.coin_params()?;
    let a = lambda_series_fixed_point(&coin, cfg.order)?;
    let b = lambda_series_closed(&coin, cfg.order)?;
    let lambda_diff = a.max_abs_diff(&b);
    let report = compare_with_simulator(&coin, &cfg.reduced()?, cfg.boundary(), cfg.tmax, cfg.max_sum)?;
    let mut summary = Vec::new();
    if report.transfer_vs_simulator <= TRANSFER_TOL {
        summary.push("transfer vs simulator exact".to_string());
    }
    summary.push(format!("transfer vs simulator max deviation = {:e}", report.transfer_vs_simulator));
    summary.push(format!("renewal vs simulator max deviation = {:e}", report.renewal_vs_simulator));
    summary.push(format!("lambda series oracles differ by {lambda_diff:e}"));
    summary.push(format!("closed-form deltas listed: {} B values", report.closed_form_b.len()));
    let mut bad = Vec::new();
    if report.transfer_vs_simulator > TRANSFER_TOL {
        bad.push(format!("transfer deviation {:e}", report.transfer_vs_simulator));
    }
    if report.renewal_vs_simulator > RENEWAL_TOL {
        bad.push(format!("renewal deviation {:e}", report.renewal_vs_simulator));
    }
    note(&summary);
    write_json(cfg, &GenfuncCheck { order: cfg.order, lambda_series_oracle_diff: lambda_diff, report, summary })?;
    violations(bad)
}

#[derive(Serialize)]
struct SiteAverages {
    copy: usize,
    x: i64,
    y: i64,
    windows: Vec<TimeAverage>,
}

#[derive(Serialize)]
struct Theorem1Report {
    params: Theorem1Params,
    records: Vec<Theorem1Record>,
    sites: Vec<SiteAverages>,
    neighbourhood: Vec<TimeAverage>,
    findings: Vec<Finding>,
}

#[derive(Serialize)]
struct FindingRow<'a> {
    quantity: &'a str,
    printed_formula_value: f64,
    simulated_value: Option<f64>,
    assumption_flags: String,
    tolerance_class: &'a str,
}

fn finding_rows(findings: &[Finding]) -> Vec<FindingRow<'_>> {
    findings
        .iter()
        .map(|f| FindingRow {
            quantity: &f.quantity,
            printed_formula_value: f.printed_formula_value,
            simulated_value: f.simulated_value,
            assumption_flags: f.assumption_flags.join(";"),
            tolerance_class: &f.tolerance_class,
        })
        .collect()
}

/// Origin plus `(1, 0)` and `(0, 1)` in every copy.
pub fn origin_neighbourhood(k: usize) -> Vec<EventSite> {
    (0..k).flat_map(|r| [(r, 0, 0), (r, 1, 0), (r, 0, 1)]).collect()
}

pub fn theorem1(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.windows.is_empty() {
        return Err(CliError::Usage("theorem1 needs at least one --window".into()));
    }
    let coin = cfg.coin_params()?;
    let reduced = cfg.reduced()?;
    let psi = InitialPsi::new(cfg.psi()?, coin.ctilde)?;
    let params = Theorem1Params::new(&coin, &reduced, &psi, cfg.flags())?;
    let spec = joined_spec(cfg)?;
    let windows: Vec<(u64, u64)> = cfg.windows.iter().map(|w| (w[0], w[1])).collect();
    let t_eval = windows.iter().map(|w| w.1).max().unwrap_or(0);

    let mut singles = Vec::new();
    for r in 0..cfg.k {
        for s in 0..=cfg.site_radius {
            for x in 0..=s {
                singles.push((r, x, s - x));
            }
        }
    }
    let hood = origin_neighbourhood(cfg.k);
    let mut sets: Vec<Vec<EventSite>> = singles.iter().map(|s| vec![*s]).collect();
    sets.push(hood.clone());
    let mut averages = time_averaged_sets(&spec, &sets, &windows)?;
    let neighbourhood = averages.pop().unwrap_or_default();

    let mut records = Vec::new();
    let mut findings = Vec::new();
    let mut sites = Vec::new();
    for (&(r, x, y), avg) in singles.iter().zip(averages) {
        let rec = theorem1_asymptotic(t_eval, r, x, y, &params)?;
        for w in &avg {
            for (label, v) in [("even-t", w.even_mean), ("odd-t", w.odd_mean)] {
                findings.push(Finding {
                    quantity: format!("P(X_r={x},Y_r={y}) r={r} window [{},{}] {label}", w.t0, w.t1),
                    printed_formula_value: rec.value,
                    simulated_value: Some(v),
                    assumption_flags: rec.assumption_flags.clone(),
                    tolerance_class: "flagged".into(),
                });
            }
        }
        sites.push(SiteAverages { copy: r, x, y, windows: avg });
        records.push(rec);
    }
    let mut hood_formula = 0.0;
    for &(r, x, y) in &hood {
        hood_formula += theorem1_asymptotic(t_eval, r, x, y, &params)?.value;
    }
    for w in &neighbourhood {
        for (label, v) in [("even-t", w.even_mean), ("odd-t", w.odd_mean)] {
            findings.push(Finding {
                quantity: format!("origin neighbourhood window [{},{}] {label}", w.t0, w.t1),
                printed_formula_value: hood_formula,
                simulated_value: Some(v),
                assumption_flags: params.flags.labels(),
                tolerance_class: "flagged".into(),
            });
        }
    }
    let mut bad = Vec::new();
    for w in &neighbourhood {
        for v in [w.mean, w.even_mean, w.odd_mean] {
            if !(-NORM_TOL..=1.0 + NORM_TOL).contains(&v) {
                bad.push(format!("time average {v} outside [0, 1]"));
            }
        }
    }
    let summary: Vec<String> = neighbourhood
        .iter()
        .map(|w| format!("origin neighbourhood [{},{}]: even-t {} odd-t {}", w.t0, w.t1, w.even_mean, w.odd_mean))
        .collect();
    note(&summary);
    let report = Theorem1Report { params, records, sites, neighbourhood, findings };
    match cfg.format {
        FormatArg::Json => write_json(cfg, &report)?,
        FormatArg::Csv => write_csv(cfg, &finding_rows(&report.findings))?,
    }
    violations(bad)
}

#[derive(Serialize)]
struct Theorem2Report {
    params: Theorem2Params,
    total_mass: Vec<f64>,
    pooled: Vec<EmpiricalStats>,
    per_copy: Vec<EmpiricalStats>,
    findings: Vec<Finding>,
}

#[derive(Serialize)]
struct DensityRow {
    x: f64,
    f_h: f64,
    c_d: f64,
    rho_w: f64,
}

pub fn theorem2(cfg: &RunConfig) -> Result<(), CliError> {
    let coin = cfg.coin_params()?;
    let reduced = cfg.reduced()?;
    let psi = InitialPsi::new(cfg.psi()?, coin.ctilde)?;
    let base = Theorem1Params::new(&coin, &reduced, &psi, cfg.flags())?;
    let params = Theorem2Params::new(base, &reduced, &coin);
    let a_abs = coin.a.norm();
    let edge = a_abs + 0.05;
    let flags = params.base.flags.labels();
    let total_mass = (0..cfg.k).map(|r| params.total_mass(r)).collect::<Result<Vec<_>, _>>()?;

    let mut findings = Vec::new();
    for (r, m) in total_mass.iter().enumerate() {
        findings.push(Finding {
            quantity: format!("total mass of rho_w r={r}"),
            printed_formula_value: *m,
            simulated_value: None,
            assumption_flags: flags.clone(),
            tolerance_class: "reported".into(),
        });
    }

    let mut times = cfg.times.clone();
    times.sort_unstable();
    times.dedup();
    let mut pooled = Vec::new();
    let mut per_copy = Vec::new();
    let mut bad = Vec::new();
    if !times.is_empty() {
        let spec = joined_spec(cfg)?;
        let mut s = spec.initial.clone();
        for &t in &times {
            while s.time() < t {
                s = step(&spec, &s)?;
            }
            let st = empirical_rescaled_stats(&s, None, a_abs, edge)?;
            if spec.mode == Mode::Unitarized && (st.origin_mass + st.off_origin_mass - 1.0).abs() > NORM_TOL {
                bad.push(format!("event mass at t = {t} is {}", st.origin_mass + st.off_origin_mass));
            }
            findings.push(Finding {
                quantity: format!("Kolmogorov distance of X/t marginal t={t}"),
                printed_formula_value: 0.0,
                simulated_value: Some(st.kolmogorov_x),
                assumption_flags: vec![],
                tolerance_class: "trend".into(),
            });
            findings.push(Finding {
                quantity: format!("off-origin fraction inside [0,{edge}]^2 t={t}"),
                printed_formula_value: 1.0,
                simulated_value: Some(st.inside_fraction),
                assumption_flags: vec![],
                tolerance_class: "support".into(),
            });
            for r in 0..cfg.k {
                let one = empirical_rescaled_stats(&s, Some(r), a_abs, edge)?;
                findings.push(Finding {
                    quantity: format!("origin mass r={r} t={t}"),
                    printed_formula_value: params.point_mass(r),
                    simulated_value: Some(one.origin_mass),
                    assumption_flags: flags.clone(),
                    tolerance_class: "flagged".into(),
                });
                per_copy.push(one);
            }
            note(&[format!(
                "t = {t}: origin mass {}, inside fraction {}, Kolmogorov distance {}",
                st.origin_mass, st.inside_fraction, st.kolmogorov_x
            )]);
            pooled.push(st);
        }
    }
    match cfg.format {
        FormatArg::Json => write_json(cfg, &Theorem2Report { params, total_mass, pooled, per_copy, findings })?,
        FormatArg::Csv => {
            let rows: Vec<DensityRow> = density_rows(&params, 0, cfg.grid)?
                .into_iter()
                .map(|[x, f_h, c_d, rho_w]| DensityRow { x, f_h, c_d, rho_w })
                .collect();
            write_csv(cfg, &rows)?;
        }
    }
    violations(bad)
}
