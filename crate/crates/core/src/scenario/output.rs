//! Trace, metrics and plot files for a finished run.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::mission::Mission;
use crate::scenario::config::ScenarioConfig;
use crate::scenario::metrics::{summarize, SummaryMetrics};
use crate::sim::{PassivityTolerance, SimTrace, TraceRow};

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("no data: the trace is empty")]
    NoData,
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Trace { path: PathBuf, source: crate::sim::trace::TraceError },
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone)]
pub struct EmittedFiles {
    pub csv: PathBuf,
    pub metrics: PathBuf,
    pub plots: Vec<PathBuf>,
    pub summary: SummaryMetrics,
}

pub fn passivity_tolerance(cfg: &ScenarioConfig) -> PassivityTolerance {
    PassivityTolerance {
        step_coeff: cfg.passivity.step_coeff,
        impact_fraction: cfg.passivity.impact_fraction,
        settle_time: cfg.passivity.settle_time,
    }
}

/// Writes the CSV trace, the metrics JSON and (if enabled) SVG plots into `dir`.
pub fn emit_outputs(trace: &SimTrace, cfg: &ScenarioConfig, dir: &Path) -> Result<EmittedFiles, OutputError> {
    let summary =
        summarize(&cfg.name, trace, cfg.contact.friction, &passivity_tolerance(cfg)).ok_or(OutputError::NoData)?;
    fs::create_dir_all(dir).map_err(io(dir))?;

    let csv = dir.join(&cfg.output.csv);
    let file = fs::File::create(&csv).map_err(io(&csv))?;
    trace
        .write_csv(std::io::BufWriter::new(file))
        .map_err(|source| OutputError::Trace { path: csv.clone(), source })?;

    let metrics = dir.join(&cfg.output.metrics);
    let json = serde_json::to_string_pretty(&summary).expect("metrics serialize");
    fs::write(&metrics, json + "\n").map_err(io(&metrics))?;

    let mut plots = Vec::new();
    if cfg.output.plots {
        let charts: [(&str, &str, PlotFn, PlotFn); 2] = [
            ("uav_tracking.svg", "UAV position (inertial frame)", |r, i| r.uav_position[i], |r, i| r.sp_uav[i]),
            ("ee_tracking.svg", "End-effector position (base frame)", |r, i| r.ee_position[i], |r, i| r.sp_ee[i]),
        ];
        for (file, title, actual, reference) in charts {
            let path = dir.join(file);
            fs::write(&path, tracking_svg(trace, title, actual, reference)).map_err(io(&path))?;
            plots.push(path);
        }
        let path = dir.join("contact_forces.svg");
        fs::write(&path, contact_svg(trace)).map_err(io(&path))?;
        plots.push(path);
    }
    Ok(EmittedFiles { csv, metrics, plots, summary })
}

type PlotFn = fn(&TraceRow, usize) -> f64;

const WIDTH: f64 = 900.0;
const PANEL_H: f64 = 200.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MAX_POINTS: usize = 1500;

fn shade(m: Mission) -> &'static str {
    match m {
        Mission::FreeFlight => "#ffffff",
        Mission::Dock => "#fde8c8",
        Mission::AerialGrasp => "#d8ecfb",
    }
}

fn stride(n: usize) -> usize {
    n.div_ceil(MAX_POINTS).max(1)
}

struct Panel<'a> {
    trace: &'a SimTrace,
    top: f64,
    lo: f64,
    hi: f64,
}

impl Panel<'_> {
    fn x(&self, t: f64) -> f64 {
        let (t0, t1) = (self.trace.rows[0].time, self.trace.rows[self.trace.len() - 1].time);
        let span = if t1 > t0 { t1 - t0 } else { 1.0 };
        MARGIN_L + (t - t0) / span * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn y(&self, v: f64) -> f64 {
        let span = if self.hi > self.lo { self.hi - self.lo } else { 1.0 };
        self.top + 10.0 + (1.0 - (v - self.lo) / span) * (PANEL_H - 40.0)
    }

    fn background(&self, out: &mut String, label: &str) {
        let rows = &self.trace.rows;
        let mut start = 0;
        for i in 1..=rows.len() {
            if i == rows.len() || rows[i].mission != rows[start].mission {
                let end = rows[(i).min(rows.len() - 1)].time;
                let (x0, x1) = (self.x(rows[start].time), self.x(end));
                let _ = writeln!(
                    out,
                    r#"<rect x="{x0:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                    self.top + 10.0,
                    (x1 - x0).max(0.0),
                    PANEL_H - 40.0,
                    shade(rows[start].mission)
                );
                start = i;
            }
        }
        let _ = writeln!(
            out,
            r##"<rect x="{MARGIN_L}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#444"/>"##,
            self.top + 10.0,
            WIDTH - MARGIN_L - MARGIN_R,
            PANEL_H - 40.0
        );
        let _ = writeln!(out, r#"<text x="8" y="{:.2}" font-size="12">{label}</text>"#, self.top + PANEL_H / 2.0);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="10">{:.4}</text>"#, 8.0, self.y(self.hi) + 4.0, self.hi);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="10">{:.4}</text>"#, 8.0, self.y(self.lo), self.lo);
    }

    fn line(&self, out: &mut String, color: &str, dash: bool, f: &dyn Fn(&TraceRow) -> f64) {
        let mut pts = String::new();
        let rows = &self.trace.rows;
        let step = stride(rows.len());
        for (k, r) in rows.iter().enumerate() {
            if k % step == 0 || k == rows.len() - 1 {
                let _ = write!(pts, "{:.2},{:.2} ", self.x(r.time), self.y(f(r)));
            }
        }
        let dash = if dash { r#" stroke-dasharray="6,4""# } else { "" };
        let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.4"{dash} points="{pts}"/>"#);
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let pad = ((hi - lo) * 0.05).max(1e-6);
    (lo - pad, hi + pad)
}

fn header(out: &mut String, height: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{MARGIN_L}" y="18" font-size="14">{title}</text>"#);
}

fn footer(out: &mut String, trace: &SimTrace, height: f64) {
    let t0 = trace.rows[0].time;
    let t1 = trace.rows[trace.len() - 1].time;
    let y = height - 8.0;
    let _ = writeln!(out, r#"<text x="{MARGIN_L}" y="{y}" font-size="11">t = {t0:.2} s</text>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{y}" font-size="11" text-anchor="end">t = {t1:.2} s</text>"#,
        WIDTH - MARGIN_R
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{y}" font-size="11" text-anchor="middle">solid: actual, dashed: reference; shading: free flight / dock / aerial grasp</text>"#,
        WIDTH / 2.0
    );
    out.push_str("</svg>\n");
}

/// Setpoint versus actual, one panel per axis, with mission shading.
pub fn tracking_svg(trace: &SimTrace, title: &str, actual: PlotFn, reference: PlotFn) -> String {
    let height = 30.0 + 3.0 * PANEL_H + 20.0;
    let mut out = String::new();
    header(&mut out, height, title);
    for (i, axis) in ["x", "y", "z"].iter().enumerate() {
        let (lo, hi) = range(trace.rows.iter().flat_map(|r| [actual(r, i), reference(r, i)]));
        let panel = Panel { trace, top: 30.0 + i as f64 * PANEL_H, lo, hi };
        panel.background(&mut out, &format!("{axis} [m]"));
        panel.line(&mut out, "#888", true, &|r| reference(r, i));
        panel.line(&mut out, "#1f5fa8", false, &|r| actual(r, i));
    }
    footer(&mut out, trace, height);
    out
}

/// Normal contact forces of the palm and the six phalanges.
pub fn contact_svg(trace: &SimTrace) -> String {
    let height = 30.0 + PANEL_H + 20.0;
    let mut out = String::new();
    header(&mut out, height, "Contact normal forces [N]");
    let (lo, hi) = range(trace.rows.iter().flat_map(|r| r.contact_forces.iter().map(|f| f.z)));
    let panel = Panel { trace, top: 30.0, lo: lo.min(0.0), hi };
    panel.background(&mut out, "f_n");
    const COLORS: [&str; 7] = ["#c0392b", "#e67e22", "#27ae60", "#16a085", "#8e44ad", "#2c3e50", "#000000"];
    for (c, color) in COLORS.iter().enumerate() {
        panel.line(&mut out, color, false, &|r| r.contact_forces[c].z);
    }
    footer(&mut out, trace, height);
    out
}
