//! Result persistence: CSV tables, versioned JSON summaries, SVG figures and
//! a run manifest.
//!
//! Everything except `manifest.json` is a pure function of the experiment
//! result, so re-running a config with the same seed reproduces those files
//! byte for byte. Wall-clock data lives only in the manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::limits::{AuditReport, AuditTerms, ExperimentConfig, ExperimentResult, Theorem};
use crate::stats::{normal_pdf, EmpiricalCdf};
use crate::weights::{Lemma1Ratios, WeightModel};

pub const SCHEMA_VERSION: u32 = 1;
pub const RESULT_CSV_HEADER: &str = "n,replication,statistic,edge_count,L_n";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub master_seed: Option<u64>,
    pub created_unix: u64,
    pub stages: Vec<StageTiming>,
    pub files: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, master_seed: Option<u64>) -> Self {
        RunManifest {
            schema_version: SCHEMA_VERSION,
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config,
            master_seed,
            created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            stages: Vec::new(),
            files: Vec::new(),
        }
    }

    /// Writes `manifest.json` into `out_dir` and lists it among the files.
    pub fn write(&mut self, out_dir: &Path) -> Result<PathBuf> {
        let path = out_dir.join("manifest.json");
        self.files.push(path.clone());
        fs::write(&path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(path)
    }
}

fn write_file(out_dir: &Path, name: &str, contents: &str, manifest: &mut RunManifest) -> Result<()> {
    let path = out_dir.join(name);
    fs::write(&path, contents)?;
    manifest.files.push(path);
    Ok(())
}

/// `result.csv` body with the fixed header.
pub fn result_csv(result: &ExperimentResult) -> String {
    let mut out = String::with_capacity(48 * result.records.len() + 64);
    out.push_str(RESULT_CSV_HEADER);
    out.push('\n');
    for r in &result.records {
        let _ = writeln!(out, "{},{},{},{},{}", r.n, r.replication, r.statistic, r.edge_count, r.l_n);
    }
    out
}

fn theorem_name(t: Theorem) -> &'static str {
    match t {
        Theorem::T1 => "T1",
        Theorem::T2 => "T2",
        Theorem::Lln => "LLN",
        Theorem::Audit => "AUDIT",
    }
}

/// `summary.json` contents.
pub fn summary_json(result: &ExperimentResult) -> serde_json::Value {
    let rows: Vec<_> = result
        .per_n
        .iter()
        .map(|s| {
            let trend = match s.decreasing_from_previous {
                None => "first",
                Some(true) => "decreasing",
                Some(false) => "not_decreasing",
            };
            json!({
                "n": s.n,
                "ks_d": s.ks.map(|k| k.d_stat),
                "ks_p": s.ks.map(|k| k.p_value),
                "n_effective": s.ks.map(|k| k.n_effective),
                "trend": if s.ks.is_some() { Some(trend) } else { None },
                "mean": s.mean,
                "sd": s.sd,
                "median": s.median,
                "center": s.norming.map(|m| m.center),
                "scale": s.norming.map(|m| m.scale),
                "target": s.target,
            })
        })
        .collect();
    json!({
        "schema_version": SCHEMA_VERSION,
        "theorem": theorem_name(result.config.theorem),
        "config": result.config,
        "results": rows,
        "trend_decreasing": result.trend_decreasing,
    })
}

/// Writes `result.csv`, `summary.json`, one `hist_<n>.svg` per grid point and
/// `manifest.json`. An empty result is rejected before anything is written.
pub fn emit_report(result: &ExperimentResult, out_dir: &Path, stages: &[StageTiming]) -> Result<RunManifest> {
    if result.records.is_empty() {
        return Err(Error::Config("experiment produced no replications".into()));
    }
    fs::create_dir_all(out_dir)?;
    let mut manifest = RunManifest::new("experiment", serde_json::to_value(&result.config)?, Some(result.config.master_seed));
    manifest.stages.extend_from_slice(stages);
    write_file(out_dir, "result.csv", &result_csv(result), &mut manifest)?;
    write_file(
        out_dir,
        "summary.json",
        &(serde_json::to_string_pretty(&summary_json(result))? + "\n"),
        &mut manifest,
    )?;
    for s in &result.per_n {
        let svg = match result.config.theorem {
            Theorem::T2 => {
                let edge = result.sample(s.n).map(|x| x.values).unwrap_or_default();
                let weight = result.weight_sample(s.n).map(|x| x.values).unwrap_or_default();
                qq_svg(&weight, &edge, &format!("n = {}: QQ of edge vs weight-sum statistic", s.n))?
            }
            Theorem::T1 => {
                let v: Vec<f64> = result.records.iter().filter(|r| r.n == s.n).map(|r| r.statistic).collect();
                histogram_svg(&v, Overlay::StandardNormal, &format!("n = {}: normalized edge count", s.n))?
            }
            _ => {
                let v: Vec<f64> = result.records.iter().filter(|r| r.n == s.n).map(|r| r.statistic).collect();
                let overlay = s.target.map_or(Overlay::None, Overlay::Vertical);
                histogram_svg(&v, overlay, &format!("n = {}: E_n / n", s.n))?
            }
        };
        write_file(out_dir, &format!("hist_{}.svg", s.n), &svg, &mut manifest)?;
    }
    manifest.write(out_dir)?;
    Ok(manifest)
}

/// `audit.csv`: one row per `(n, t, seed)`.
pub fn audit_csv(report: &AuditReport) -> String {
    let mut out = String::from("n,t,seed_index,c_n,a_n");
    for name in AuditTerms::NAMES {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    let per_group = report.config.replications.max(1);
    for (k, row) in report.terms.iter().enumerate() {
        let _ = write!(out, "{},{},{},{},{}", row.n, row.t, k % per_group, row.c_n, row.a_n);
        for v in row.values() {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// `audit_medians.csv`: one row per `(n, t)`, plus the moment bounds per `n`.
pub fn audit_medians_csv(report: &AuditReport) -> String {
    let mut out = String::from("n,t,c_n,a_n");
    for name in AuditTerms::NAMES {
        out.push_str(",median_");
        out.push_str(name);
    }
    out.push_str(",truncated_square,tail_product\n");
    for m in &report.medians {
        let _ = write!(out, "{},{},{},{}", m.n, m.t, m.c_n, m.a_n);
        for v in m.medians {
            let _ = write!(out, ",{v}");
        }
        let b = report.moment_bounds.iter().find(|b| b.n == m.n);
        let _ = writeln!(
            out,
            ",{},{}",
            b.map_or(f64::NAN, |b| b.truncated_square),
            b.map_or(f64::NAN, |b| b.tail_product)
        );
    }
    out
}

pub fn emit_audit_report(report: &AuditReport, out_dir: &Path, stages: &[StageTiming]) -> Result<RunManifest> {
    if report.terms.is_empty() {
        return Err(Error::Config("audit produced no rows".into()));
    }
    fs::create_dir_all(out_dir)?;
    let mut manifest = RunManifest::new("audit", serde_json::to_value(&report.config)?, Some(report.config.master_seed));
    manifest.stages.extend_from_slice(stages);
    write_file(out_dir, "audit.csv", &audit_csv(report), &mut manifest)?;
    write_file(out_dir, "audit_medians.csv", &audit_medians_csv(report), &mut manifest)?;
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "theorem": "AUDIT",
        "config": report.config,
        "decreasing": report
            .decreasing
            .iter()
            .map(|(k, v)| (k.clone(), json!(v)))
            .collect::<serde_json::Map<_, _>>(),
        "moment_bounds_decreasing": {
            "truncated_square": report.moment_bounds_decreasing.0,
            "tail_product": report.moment_bounds_decreasing.1,
        },
        "remainder_coefficient_bound": crate::limits::REMAINDER_COEFFICIENT_BOUND,
    });
    write_file(out_dir, "audit_summary.json", &(serde_json::to_string_pretty(&summary)? + "\n"), &mut manifest)?;
    manifest.write(out_dir)?;
    Ok(manifest)
}

/// `lemma1.csv` plus a JSON summary flagging the alternative tail constant.
pub fn emit_lemma1_report(model: &WeightModel, rows: &[Lemma1Ratios], out_dir: &Path) -> Result<RunManifest> {
    if rows.is_empty() {
        return Err(Error::Config("empty x grid".into()));
    }
    fs::create_dir_all(out_dir)?;
    let mut manifest = RunManifest::new("lemma1", json!({ "model": model }), None);
    let mut csv = String::from("x,ratio_second,ratio_tail_karamata,ratio_tail_alternative\n");
    for r in rows {
        let _ = writeln!(csv, "{},{},{},{}", r.x, r.ratio_second, r.ratio_tail_karamata, r.ratio_tail_alternative);
    }
    write_file(out_dir, "lemma1.csv", &csv, &mut manifest)?;
    let last = rows[rows.len() - 1];
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "model": model,
        "rows": rows,
        "ratio_second_at_largest_x": last.ratio_second,
        "ratio_tail_karamata_at_largest_x": last.ratio_tail_karamata,
        "alternative_constant_discrepancy": {
            "flagged": (last.ratio_tail_alternative - 1.0).abs() > 1e-6,
            "ratio_at_largest_x": last.ratio_tail_alternative,
            "note": "E W 1{W >= x} is asymptotic to c*alpha/(alpha-1) x^(1-alpha) h(x); the constant c*(2-alpha)/(alpha-1) is off by alpha/(2-alpha)",
        },
    });
    write_file(out_dir, "lemma1_summary.json", &(serde_json::to_string_pretty(&summary)? + "\n"), &mut manifest)?;
    manifest.write(out_dir)?;
    Ok(manifest)
}

/// Curve drawn over a histogram.
#[derive(Debug, Clone, Copy)]
pub enum Overlay {
    None,
    StandardNormal,
    Vertical(f64),
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 48.0;

fn svg_open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        W / 2.0,
        xml_escape(title)
    );
    let _ = writeln!(
        s,
        r#"<line x1="{PAD}" y1="{y}" x2="{x2}" y2="{y}" stroke="black"/><line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{y}" stroke="black"/>"#,
        y = H - PAD,
        x2 = W - PAD
    );
    s
}

fn axis_labels(s: &mut String, x0: f64, x1: f64) {
    let _ = writeln!(
        s,
        r#"<text x="{PAD}" y="{y}" font-family="sans-serif" font-size="11" text-anchor="middle">{x0:.3}</text><text x="{xr}" y="{y}" font-family="sans-serif" font-size="11" text-anchor="middle">{x1:.3}</text>"#,
        y = H - PAD + 16.0,
        xr = W - PAD
    );
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Density histogram of `values` on the central 99% range with an optional overlay.
pub fn histogram_svg(values: &[f64], overlay: Overlay, title: &str) -> Result<String> {
    let ecdf = EmpiricalCdf::new(values)?;
    let (mut lo, mut hi) = (ecdf.quantile(0.005), ecdf.quantile(0.995));
    if let Overlay::Vertical(v) = overlay {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if hi <= lo {
        lo -= 0.5;
        hi += 0.5;
    }
    let bins = 40usize;
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        if v >= lo && v <= hi {
            counts[(((v - lo) / width) as usize).min(bins - 1)] += 1;
        }
    }
    let total = values.len() as f64;
    let dens: Vec<f64> = counts.iter().map(|&c| c as f64 / (total * width)).collect();
    let mut ymax = dens.iter().cloned().fold(0.0, f64::max);
    if let Overlay::StandardNormal = overlay {
        ymax = ymax.max(normal_pdf(0.0));
    }
    let ymax = if ymax > 0.0 { ymax * 1.05 } else { 1.0 };
    let sx = |x: f64| PAD + (x - lo) / (hi - lo) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - y / ymax * (H - 2.0 * PAD);

    let mut s = svg_open(title);
    for (k, d) in dens.iter().enumerate() {
        let x0 = sx(lo + k as f64 * width);
        let x1 = sx(lo + (k + 1) as f64 * width);
        let _ = writeln!(
            s,
            r##"<rect x="{x0:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#9ecae1" stroke="#3182bd"/>"##,
            sy(*d),
            (x1 - x0).max(0.0),
            (H - PAD - sy(*d)).max(0.0)
        );
    }
    match overlay {
        Overlay::StandardNormal => {
            let pts: Vec<String> = (0..=200)
                .map(|k| {
                    let x = lo + (hi - lo) * k as f64 / 200.0;
                    format!("{:.2},{:.2}", sx(x), sy(normal_pdf(x)))
                })
                .collect();
            let _ = writeln!(s, r##"<polyline fill="none" stroke="#d62728" stroke-width="2" points="{}"/>"##, pts.join(" "));
        }
        Overlay::Vertical(v) => {
            let _ = writeln!(
                s,
                r##"<line x1="{x:.2}" y1="{PAD}" x2="{x:.2}" y2="{y}" stroke="#d62728" stroke-width="2"/>"##,
                x = sx(v),
                y = H - PAD
            );
        }
        Overlay::None => {}
    }
    axis_labels(&mut s, lo, hi);
    s.push_str("</svg>\n");
    Ok(s)
}

/// Quantile–quantile plot of `y` against `x` with the identity line.
pub fn qq_svg(x: &[f64], y: &[f64], title: &str) -> Result<String> {
    let ex = EmpiricalCdf::new(x)?;
    let ey = EmpiricalCdf::new(y)?;
    let probs: Vec<f64> = (1..100).map(|k| k as f64 / 100.0).collect();
    let qx: Vec<f64> = probs.iter().map(|&p| ex.quantile(p)).collect();
    let qy: Vec<f64> = probs.iter().map(|&p| ey.quantile(p)).collect();
    let lo = qx.iter().chain(&qy).cloned().fold(f64::INFINITY, f64::min);
    let mut hi = qx.iter().chain(&qy).cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        hi = lo + 1.0;
    }
    let sx = |v: f64| PAD + (v - lo) / (hi - lo) * (W - 2.0 * PAD);
    let sy = |v: f64| H - PAD - (v - lo) / (hi - lo) * (H - 2.0 * PAD);
    let mut s = svg_open(title);
    let _ = writeln!(
        s,
        r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#999" stroke-dasharray="4 3"/>"##,
        sx(lo),
        sy(lo),
        sx(hi),
        sy(hi)
    );
    for (a, b) in qx.iter().zip(&qy) {
        let _ = writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="#3182bd"/>"##, sx(*a), sy(*b));
    }
    axis_labels(&mut s, lo, hi);
    s.push_str("</svg>\n");
    Ok(s)
}

/// Loads an experiment config from a JSON file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SamplerKind;
    use crate::limits::{run_theorem1, run_theorem2};

    fn t1_config() -> ExperimentConfig {
        ExperimentConfig {
            model: WeightModel::Exponential { rate: 1.0 },
            n_grid: vec![50, 200],
            replications: 100,
            master_seed: 3,
            theorem: Theorem::T1,
            sampler: SamplerKind::Fast,
            t_values: vec![1.0],
            pair_draws: None,
        }
    }

    #[test]
    fn t1_report_files_and_schema() {
        let dir = tempfile::tempdir().unwrap();
        let r = run_theorem1(&t1_config()).unwrap();
        let m = emit_report(&r, dir.path(), &[]).unwrap();
        for f in ["result.csv", "summary.json", "hist_50.svg", "hist_200.svg", "manifest.json"] {
            assert!(m.files.contains(&dir.path().join(f)), "{f} missing");
        }
        let csv = fs::read_to_string(dir.path().join("result.csv")).unwrap();
        assert!(csv.starts_with("n,replication,statistic,edge_count,L_n\n"));
        assert_eq!(csv.lines().count(), 201);
        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
        assert_eq!(summary["schema_version"], 1);
        for key in ["n", "ks_d", "ks_p", "trend"] {
            assert!(summary["results"][0].get(key).is_some(), "{key}");
        }
        let svg = fs::read_to_string(dir.path().join("hist_50.svg")).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("polyline"));
    }

    #[test]
    fn t2_report_has_qq_plot() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = t1_config();
        c.model = WeightModel::Pareto { alpha: 1.5, xm: 1.0 };
        c.theorem = Theorem::T2;
        c.n_grid = vec![100];
        let r = run_theorem2(&c).unwrap();
        emit_report(&r, dir.path(), &[]).unwrap();
        let svg = fs::read_to_string(dir.path().join("hist_100.svg")).unwrap();
        assert!(svg.contains("<circle"));
    }

    #[test]
    fn empty_result_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let r = ExperimentResult { config: t1_config(), records: vec![], per_n: vec![], trend_decreasing: None };
        assert!(matches!(emit_report(&r, &out, &[]), Err(Error::Config(_))));
        assert!(!out.exists());
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = result_csv(&run_theorem1(&t1_config()).unwrap());
        let b = result_csv(&run_theorem1(&t1_config()).unwrap());
        assert_eq!(a, b);
    }
}
