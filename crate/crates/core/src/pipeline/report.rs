//! Table rendering: full-precision CSV plus fixed-precision text layouts.

use std::fmt::Write as _;

use super::analysis::{AssetReport, DiagnosticsRow, Outcome};
use crate::diagnostics::{kpss, KpssVariant, TestResult};
use crate::effectiveness::Measure;
use crate::error::{Error, Result};
use crate::garch::VechGarchParams;
use crate::hedging::{write_paths_csv, HedgeKind, HedgePath, Timing};

/// Parameter order of the printed GARCH table.
const PARAM_ROWS: [(&str, &str); 9] = [
    ("omega_s", "w_s"),
    ("omega_sf", "w_sf"),
    ("omega_f", "w_f"),
    ("alpha_s", "a_s"),
    ("alpha_sf", "a_sf"),
    ("alpha_f", "a_f"),
    ("beta_s", "b_s"),
    ("beta_sf", "b_sf"),
    ("beta_f", "b_f"),
];

fn csv_string(header: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Config(format!("csv write: {e}"));
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv write: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Left-aligned columns separated by two spaces.
fn text_table(rows: &[Vec<String>]) -> String {
    let ncol = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut width = vec![0; ncol];
    for r in rows {
        for (i, c) in r.iter().enumerate() {
            width[i] = width[i].max(c.chars().count());
        }
    }
    let mut out = String::new();
    for r in rows {
        let mut line = String::new();
        for (i, c) in r.iter().enumerate() {
            let pad = width[i] - c.chars().count();
            line.push_str(c);
            if i + 1 < r.len() {
                line.push_str(&" ".repeat(pad + 2));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn fixed(v: f64, decimals: usize) -> String {
    if v.is_finite() {
        format!("{v:.decimals$}")
    } else {
        "NA".into()
    }
}

fn with_p(stat: f64, decimals: usize, p: Option<f64>) -> String {
    match p {
        Some(p) if stat.is_finite() => format!("{} ({:.2})", fixed(stat, decimals), p),
        _ => fixed(stat, decimals),
    }
}

fn title(timing: Timing) -> &'static str {
    match timing {
        Timing::InSample => "In-sample",
        Timing::OutOfSample => "Out-of-sample",
    }
}

fn horizon_label(h: usize) -> String {
    format!("{h}-Day")
}

fn scaled_horizons(report: &AssetReport) -> Vec<usize> {
    report.scaled.iter().map(|s| s.h).collect()
}

fn actual_horizons(report: &AssetReport) -> Vec<usize> {
    report.diagnostics.iter().map(|d| d.h).collect()
}

// ---------------------------------------------------------------- diagnostics

pub fn diagnostics_csv(reports: &[AssetReport]) -> Result<String> {
    let mut rows = Vec::new();
    for r in reports {
        for d in &r.diagnostics {
            for (leg, s, scaled) in [
                ("cash", &d.cash, d.sd_scaled_pct.map(|v| v[0])),
                ("futures", &d.futures, d.sd_scaled_pct.map(|v| v[1])),
            ] {
                let m = &s.moments;
                let mut push = |stat: &str, v: String, p: String| {
                    rows.push(vec![r.label.clone(), d.h.to_string(), d.n.to_string(), leg.into(), stat.into(), v, p]);
                };
                push("mean_pct", num(m.mean_pct), String::new());
                push("sd_pct", num(m.sd_pct), String::new());
                push("sd_scaled_pct", opt_num(scaled), String::new());
                push("skewness", opt_num(m.skewness), opt_num(m.p_skew));
                push("excess_kurtosis", opt_num(m.excess_kurtosis), opt_num(m.p_kurt));
                for (name, t) in [
                    ("jarque_bera", &s.jarque_bera),
                    ("lm", &s.lm),
                    ("kpss_constant", &s.kpss_constant),
                    ("kpss_trend", &s.kpss_trend),
                ] {
                    push(name, num(t.statistic), opt_num(t.p_value));
                }
            }
            rows.push(vec![
                r.label.clone(),
                d.h.to_string(),
                d.n.to_string(),
                "pair".into(),
                "correlation".into(),
                num(d.correlation),
                String::new(),
            ]);
        }
    }
    csv_string(&["asset", "horizon", "n", "leg", "statistic", "value", "p_value"], rows)
}

pub fn diagnostics_txt(reports: &[AssetReport]) -> String {
    let mut out = String::from(
        "Descriptive statistics of estimation-sample log returns. Mean and SD in percent;\n\
         p-values in brackets; kurtosis is excess kurtosis; LM uses 4 lags.\n\n",
    );
    for r in reports {
        let ds = &r.diagnostics;
        let mut rows = vec![vec![r.label.clone()]];
        let mut head = vec![String::new()];
        let mut legs = vec![String::new()];
        for d in ds {
            head.extend([horizon_label(d.h), String::new()]);
            legs.extend(["Cash".to_string(), "Futures".to_string()]);
        }
        rows.push(head);
        rows.push(legs);
        let line = |name: &str, f: &dyn Fn(&DiagnosticsRow, usize) -> String| {
            let mut row = vec![name.to_string()];
            for d in ds {
                row.push(f(d, 0));
                row.push(f(d, 1));
            }
            row
        };
        let leg = |d: &DiagnosticsRow, i: usize| if i == 0 { d.cash.clone() } else { d.futures.clone() };
        rows.push(line("N", &|d, _| d.n.to_string()));
        rows.push(line("Mean", &|d, i| fixed(leg(d, i).moments.mean_pct, 3)));
        rows.push(line("SD", &|d, i| fixed(leg(d, i).moments.sd_pct, 2)));
        rows.push(line("SD Scaled", &|d, i| d.sd_scaled_pct.map(|v| fixed(v[i], 2)).unwrap_or_default()));
        rows.push(line("Skewness", &|d, i| {
            let m = leg(d, i).moments;
            m.skewness.map(|s| with_p(s, 3, m.p_skew)).unwrap_or_else(|| "NA".into())
        }));
        rows.push(line("Kurtosis", &|d, i| {
            let m = leg(d, i).moments;
            m.excess_kurtosis.map(|k| with_p(k, 2, m.p_kurt)).unwrap_or_else(|| "NA".into())
        }));
        let test = |t: &TestResult| with_p(t.statistic, 2, t.p_value);
        rows.push(line("J-B", &|d, i| test(&leg(d, i).jarque_bera)));
        rows.push(line("LM", &|d, i| test(&leg(d, i).lm)));
        rows.push(line("KPSS - Constant", &|d, i| fixed(leg(d, i).kpss_constant.statistic, 3)));
        rows.push(line("     - Trend", &|d, i| fixed(leg(d, i).kpss_trend.statistic, 3)));
        rows.push(line("Correlation", &|d, i| if i == 0 { fixed(d.correlation, 3) } else { String::new() }));
        out.push_str(&text_table(&rows));
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------- parameters

fn persistence(p: &VechGarchParams) -> (f64, f64) {
    (p.s.persistence(), p.f.persistence())
}

fn param_value(p: &VechGarchParams, name: &str) -> f64 {
    let i = crate::garch::VECH_PARAM_NAMES
        .iter()
        .position(|n| *n == name)
        .expect("known parameter");
    p.to_vec()[i]
}

pub fn params_csv(reports: &[AssetReport]) -> Result<String> {
    let mut rows = Vec::new();
    for r in reports {
        for f in &r.fits {
            let col = format!("{}-day actual", f.h);
            for e in &f.fit.std_errors {
                rows.push(vec![
                    r.label.clone(),
                    col.clone(),
                    f.h.to_string(),
                    "actual".into(),
                    e.name.clone(),
                    num(e.estimate),
                    num(e.se),
                    num(e.robust_se),
                    String::new(),
                ]);
            }
            let (ps, pf) = persistence(&f.fit.params);
            for (name, v) in [("persistence_s", ps), ("persistence_f", pf), ("loglik", f.fit.loglik)] {
                rows.push(vec![r.label.clone(), col.clone(), f.h.to_string(), "actual".into(), name.into(), num(v), String::new(), String::new(), String::new()]);
            }
            rows.push(vec![
                r.label.clone(),
                col.clone(),
                f.h.to_string(),
                "actual".into(),
                "converged".into(),
                f.fit.converged.to_string(),
                String::new(),
                String::new(),
                String::new(),
            ]);
        }
        for s in &r.scaled {
            let col = format!("{}-day scaled", s.h);
            match &s.params {
                Ok(p) => {
                    let (ps, pf) = persistence(p);
                    let mut vals: Vec<(String, f64)> = crate::garch::VECH_PARAM_NAMES
                        .iter()
                        .map(|n| (n.to_string(), param_value(p, n)))
                        .collect();
                    vals.push(("persistence_s".into(), ps));
                    vals.push(("persistence_f".into(), pf));
                    for (name, v) in vals {
                        rows.push(vec![r.label.clone(), col.clone(), s.h.to_string(), "scaled".into(), name, num(v), String::new(), String::new(), String::new()]);
                    }
                }
                Err(reason) => rows.push(vec![
                    r.label.clone(),
                    col,
                    s.h.to_string(),
                    "scaled".into(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    reason.clone(),
                ]),
            }
        }
    }
    csv_string(
        &["asset", "column", "horizon", "basis", "parameter", "estimate", "se", "robust_se", "note"],
        rows,
    )
}

pub fn params_txt(reports: &[AssetReport]) -> String {
    let mut out = String::from(
        "Diagonal VECH GARCH(1,1) estimates with robust standard errors in brackets, beside\n\
         parameters aggregated from the 1-day estimates. Persistence is alpha + beta.\n\n",
    );
    for r in reports {
        let fits: Vec<_> = r.fits.iter().collect();
        let scaled = scaled_horizons(r);
        let mut head = vec![r.label.clone()];
        head.extend(fits.iter().map(|f| if f.h == 1 { "1-DAY".to_string() } else { format!("{}-DAY ACTUAL", f.h) }));
        head.extend(scaled.iter().map(|h| format!("{h}-DAY SCALED")));
        let mut rows = vec![head];
        let scaled_params: Vec<Option<VechGarchParams>> = scaled
            .iter()
            .map(|h| r.scaled_params(*h).and_then(|s| s.params.as_ref().ok().copied()))
            .collect();
        for (name, short) in PARAM_ROWS {
            let mut row = vec![short.to_string()];
            for f in &fits {
                let e = f.fit.get(name);
                row.push(match e {
                    Some(e) if e.robust_se.is_finite() => format!("{} ({})", fixed(e.estimate, 4), fixed(e.robust_se, 3)),
                    Some(e) => fixed(e.estimate, 4),
                    None => "NA".into(),
                });
            }
            for p in &scaled_params {
                row.push(p.map(|p| fixed(param_value(&p, name), 4)).unwrap_or_else(|| "NA".into()));
            }
            rows.push(row);
        }
        for (label, pick) in [("a_s + b_s", 0), ("a_f + b_f", 1)] {
            let mut row = vec![label.to_string()];
            let sel = |p: &VechGarchParams| {
                let (s, f) = persistence(p);
                if pick == 0 { s } else { f }
            };
            row.extend(fits.iter().map(|f| fixed(sel(&f.fit.params), 4)));
            row.extend(scaled_params.iter().map(|p| p.map(|p| fixed(sel(&p), 4)).unwrap_or_else(|| "NA".into())));
            rows.push(row);
        }
        out.push_str(&text_table(&rows));
        if let Some((ks, kf)) = r.kappa {
            let _ = writeln!(out, "kurtosis used for aggregation: cash {ks:.4}, futures {kf:.4}");
        }
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------- hedge ratios

fn path_stationarity(p: &HedgePath) -> Option<f64> {
    kpss(p.ratios(), KpssVariant::Constant).ok().map(|t| t.statistic)
}

/// In-sample paths shown in the hedge-ratio table, in column order.
fn ohr_columns(r: &AssetReport) -> Vec<&HedgePath> {
    let mut cols = Vec::new();
    for kind in [HedgeKind::Garch, HedgeKind::Ols, HedgeKind::ScaledGarch, HedgeKind::ScaledOls] {
        for set in &r.hedges {
            if let Some(p) = set.find(Timing::InSample, kind) {
                cols.push(p);
            }
        }
    }
    cols
}

pub fn ohr_csv(reports: &[AssetReport]) -> Result<String> {
    let mut rows = Vec::new();
    for r in reports {
        for set in &r.hedges {
            for timing in [Timing::InSample, Timing::OutOfSample] {
                for p in set.paths(timing) {
                    let s = p.summary();
                    let kpss = if matches!(p.kind, HedgeKind::Garch | HedgeKind::ScaledGarch) {
                        path_stationarity(p)
                    } else {
                        None
                    };
                    rows.push(vec![
                        r.label.clone(),
                        timing.to_string(),
                        p.kind.to_string(),
                        p.horizon_h.to_string(),
                        s.n.to_string(),
                        num(s.mean),
                        num(s.sd),
                        num(s.min),
                        num(s.max),
                        opt_num(kpss),
                    ]);
                }
            }
        }
    }
    csv_string(
        &["asset", "timing", "kind", "horizon", "n", "mean", "sd", "min", "max", "kpss_constant"],
        rows,
    )
}

pub fn ohr_txt(reports: &[AssetReport]) -> String {
    let mut out = String::from(
        "In-sample optimal hedge ratio statistics. Stationarity is the KPSS level statistic\n\
         (null: stationary; 1% critical value 0.739). OLS ratios are constant.\n\n",
    );
    for r in reports {
        let garch: Vec<&HedgePath> = ohr_columns(r)
            .into_iter()
            .filter(|p| matches!(p.kind, HedgeKind::Garch | HedgeKind::ScaledGarch))
            .collect();
        let mut head = vec![format!("{} GARCH", r.label)];
        head.extend(garch.iter().map(|p| column_name(p.kind, p.horizon_h)));
        let mut rows = vec![head];
        let stat = |name: &str, f: &dyn Fn(&HedgePath) -> String| {
            let mut row = vec![name.to_string()];
            row.extend(garch.iter().map(|p| f(p)));
            row
        };
        rows.push(stat("Mean", &|p| fixed(p.summary().mean, 3)));
        rows.push(stat("SD", &|p| fixed(p.summary().sd, 3)));
        rows.push(stat("Minimum", &|p| fixed(p.summary().min, 3)));
        rows.push(stat("Maximum", &|p| fixed(p.summary().max, 3)));
        rows.push(stat("Stationarity", &|p| path_stationarity(p).map(|v| fixed(v, 3)).unwrap_or_else(|| "NA".into())));
        let ols: Vec<&HedgePath> = ohr_columns(r)
            .into_iter()
            .filter(|p| matches!(p.kind, HedgeKind::Ols | HedgeKind::ScaledOls))
            .collect();
        let mut head = vec![format!("{} OLS", r.label)];
        head.extend(ols.iter().map(|p| column_name(p.kind, p.horizon_h)));
        rows.push(head);
        let mut row = vec!["Ratio".to_string()];
        row.extend(ols.iter().map(|p| fixed(p.summary().mean, 3)));
        rows.push(row);
        out.push_str(&text_table(&rows));
        out.push('\n');
    }
    out
}

fn column_name(kind: HedgeKind, h: usize) -> String {
    let basis = if kind.scaled().is_some() { "ACTUAL" } else { "SCALED" };
    format!("{h}-DAY {basis}")
}

pub fn paths_csv(report: &AssetReport, timing: Timing) -> Result<String> {
    let paths: Vec<&HedgePath> = report.hedges.iter().flat_map(|s| s.paths(timing)).collect();
    let mut buf = Vec::new();
    write_paths_csv(&mut buf, &paths)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

// ---------------------------------------------------------------- effectiveness

/// `(horizon, kind)` columns: actual horizons first, then scaled.
fn eff_columns(r: &AssetReport) -> Vec<(usize, HedgeKind)> {
    let mut cols = Vec::new();
    for h in actual_horizons(r) {
        cols.extend([(h, HedgeKind::Ols), (h, HedgeKind::Garch)]);
    }
    for h in scaled_horizons(r) {
        cols.extend([(h, HedgeKind::ScaledOls), (h, HedgeKind::ScaledGarch)]);
    }
    cols
}

pub fn effectiveness_csv(reports: &[AssetReport], timing: Timing) -> Result<String> {
    let mut rows = Vec::new();
    for r in reports {
        for c in r.effectiveness.iter().filter(|c| c.timing == timing) {
            let basis = if c.kind.scaled().is_some() { "actual" } else { "scaled" };
            let model = match c.kind {
                HedgeKind::Ols | HedgeKind::ScaledOls => "ols",
                HedgeKind::Garch | HedgeKind::ScaledGarch => "garch",
                HedgeKind::Naive => "naive",
            };
            for m in Measure::ALL {
                let mut row = vec![
                    r.label.clone(),
                    timing.to_string(),
                    basis.into(),
                    c.h.to_string(),
                    model.into(),
                    m.as_str().into(),
                ];
                match &c.outcome {
                    Ok(v) => {
                        let (hd, un, red) = match m {
                            Measure::Variance => (v.hedged.variance, v.unhedged.variance, v.reduction.variance),
                            Measure::Var => (v.hedged.var_q, v.unhedged.var_q, v.reduction.var),
                            Measure::Cvar => (v.hedged.cvar, v.unhedged.cvar, v.reduction.cvar),
                        };
                        row.extend([v.hedged.n.to_string(), num(hd), num(un), num(red), String::new()]);
                    }
                    Err(reason) => row.extend([String::new(), String::new(), String::new(), String::new(), reason.clone()]),
                }
                rows.push(row);
            }
        }
    }
    csv_string(
        &["asset", "timing", "basis", "horizon", "model", "measure", "n", "hedged", "unhedged", "reduction", "note"],
        rows,
    )
}

pub fn effectiveness_txt(reports: &[AssetReport], timing: Timing, alpha: f64) -> String {
    let mut out = format!(
        "{} hedging performance. Reduction relative to the unhedged position in brackets.\n\
         VaR and CVaR at the {}% level, in loss units.\n\n",
        title(timing),
        alpha * 100.0
    );
    for r in reports {
        let cols = eff_columns(r);
        let mut head = vec![r.label.clone()];
        let mut sub = vec![String::new()];
        for (h, kind) in &cols {
            head.push(column_name(*kind, *h));
            sub.push(match kind {
                HedgeKind::Ols | HedgeKind::ScaledOls => "OLS".into(),
                _ => "GARCH".into(),
            });
        }
        let mut rows = vec![head, sub];
        for (m, label, scale, dec) in [
            (Measure::Variance, "VARIANCE (x10^-4)", 1e4, 3),
            (Measure::Var, "VaR (x10^-2)", 1e2, 2),
            (Measure::Cvar, "CVaR (x10^-2)", 1e2, 2),
        ] {
            let mut row = vec![label.to_string()];
            for (h, kind) in &cols {
                let cell = r.eff(timing, *h, *kind).map(|c| &c.outcome);
                row.push(match cell {
                    Some(Ok(v)) => {
                        let (x, red) = match m {
                            Measure::Variance => (v.hedged.variance, v.reduction.variance),
                            Measure::Var => (v.hedged.var_q, v.reduction.var),
                            Measure::Cvar => (v.hedged.cvar, v.reduction.cvar),
                        };
                        format!("{} ({})", fixed(x * scale, dec), fixed(red, 2))
                    }
                    _ => "NA".into(),
                });
            }
            rows.push(row);
        }
        out.push_str(&text_table(&rows));
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------- difference tests

pub fn tests_csv(reports: &[AssetReport], timing: Timing) -> Result<String> {
    let mut rows = Vec::new();
    for r in reports {
        for c in r.tests.iter().filter(|c| c.timing == timing) {
            let mut row = vec![
                r.label.clone(),
                timing.to_string(),
                c.h.to_string(),
                c.model.to_string(),
                c.measure.as_str().into(),
                c.n_blocks.to_string(),
            ];
            match &c.outcome {
                Ok(t) => row.extend([
                    num(t.mean_diff),
                    num(t.bootstrap_se),
                    num(t.t_stat),
                    t.n_resamples.to_string(),
                    t.significant_5pct.to_string(),
                    String::new(),
                ]),
                Err(reason) => {
                    row.extend(std::iter::repeat_n(String::new(), 5));
                    row.push(reason.clone());
                }
            }
            rows.push(row);
        }
    }
    csv_string(
        &[
            "asset",
            "timing",
            "horizon",
            "model",
            "measure",
            "n_blocks",
            "mean_diff",
            "bootstrap_se",
            "t_stat",
            "n_resamples",
            "significant_5pct",
            "note",
        ],
        rows,
    )
}

fn t_cell(o: Option<&Outcome<crate::effectiveness::DiffTest>>) -> String {
    match o {
        Some(Ok(t)) => {
            let mark = if t.significant_5pct { "" } else { "*" };
            format!("{}{mark}", fixed(t.t_stat, 2))
        }
        _ => "NA".into(),
    }
}

pub fn tests_txt(reports: &[AssetReport], timing: Timing) -> String {
    let mut out = format!(
        "{} t-statistics for the difference in mean per-block effectiveness,\n\
         scaled minus actual, with paired bootstrap standard errors.\n\
         * denotes not significant at the 5% level.\n\n",
        title(timing)
    );
    for r in reports {
        let hs = scaled_horizons(r);
        let mut head = vec![r.label.clone()];
        for h in &hs {
            head.extend([format!("{h}-DAY OLS"), format!("{h}-DAY GARCH")]);
        }
        let mut rows = vec![head];
        for (m, label) in [(Measure::Variance, "Variance"), (Measure::Var, "VaR"), (Measure::Cvar, "CVaR")] {
            let mut row = vec![label.to_string()];
            for h in &hs {
                for model in [HedgeKind::Ols, HedgeKind::Garch] {
                    row.push(t_cell(r.test(timing, *h, model, m).map(|c| &c.outcome)));
                }
            }
            rows.push(row);
        }
        out.push_str(&text_table(&rows));
        out.push('\n');
    }
    out
}

pub fn notes_txt(reports: &[AssetReport]) -> String {
    let mut out = String::from(
        "Aggregated returns use non-overlapping blocks anchored at the last observation;\n\
         leading base returns that do not fill a block are dropped.\n",
    );
    for r in reports {
        for n in &r.notes {
            let _ = writeln!(out, "{}: {n}", r.label);
        }
    }
    out
}
