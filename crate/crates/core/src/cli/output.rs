//! CSV tables, JSON sidecars and SVG plots.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Result, SpdeError};
use crate::experiments::{ErgodicityOutcome, RateTable};

/// One output file, named `<prefix>_<suffix>` (or `<prefix>.<suffix>` for
/// sidecars), held in memory until the run finished.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub suffix: String,
    pub contents: String,
}

impl Artifact {
    pub fn new(suffix: impl Into<String>, contents: impl Into<String>) -> Self {
        Self {
            suffix: suffix.into(),
            contents: contents.into(),
        }
    }
}

pub fn artifact_path(prefix: &str, suffix: &str) -> PathBuf {
    if suffix.starts_with('.') {
        PathBuf::from(format!("{prefix}{suffix}"))
    } else {
        PathBuf::from(format!("{prefix}_{suffix}"))
    }
}

/// Makes sure files can be created next to `prefix` before any work starts.
pub fn preflight(prefix: &str) -> Result<()> {
    let p = Path::new(prefix);
    if prefix.ends_with('/') || p.is_dir() {
        return Err(SpdeError::Io(format!(
            "output prefix {prefix:?} names a directory; give a file name prefix"
        )));
    }
    let dir = match p.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| {
        SpdeError::Io(format!(
            "cannot create output directory {}: {e}",
            dir.display()
        ))
    })?;
    let probe = PathBuf::from(format!("{prefix}.preflight-{}", std::process::id()));
    fs::write(&probe, b"")
        .map_err(|e| SpdeError::Io(format!("cannot write next to {prefix:?}: {e}")))?;
    let _ = fs::remove_file(&probe);
    Ok(())
}

pub fn write_artifacts(prefix: &str, artifacts: &[Artifact]) -> Result<Vec<PathBuf>> {
    artifacts
        .iter()
        .map(|a| {
            let path = artifact_path(prefix, &a.suffix);
            fs::write(&path, &a.contents)
                .map_err(|e| SpdeError::Io(format!("writing {}: {e}", path.display())))?;
            Ok(path)
        })
        .collect()
}

/// 17 significant digits.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn rate_csv(table: &RateTable) -> String {
    let mut s = String::from("h,err,se,n\n");
    for r in &table.rows {
        let _ = writeln!(s, "{},{},{},{}", real(r.h), real(r.err), real(r.se), r.n);
    }
    s
}

pub fn ergodicity_csv(out: &ErgodicityOutcome) -> String {
    let mut s = String::from("t,init_id,phi_id,mean,se\n");
    for (t, &time) in out.times.iter().enumerate() {
        for (i, per_init) in out.series.iter().enumerate() {
            for (p, series) in per_init.iter().enumerate() {
                let e = series[t];
                let _ = writeln!(
                    s,
                    "{},{i},{p},{},{}",
                    real(time),
                    real(e.mean),
                    real(e.std_error)
                );
            }
        }
    }
    s
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

const W: f64 = 640.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let span = |it: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                (a.min(v), b.max(v))
            });
            if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                let pad = 0.05 * (hi - lo);
                (lo - pad, hi + pad)
            }
        };
        let (x0, x1) = span(&mut xs.clone());
        let (y0, y1) = span(&mut ys.clone());
        Self { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }
}

fn header(s: &mut String, title: &str) {
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        (W - RIGHT + LEFT) / 2.0,
        escape(title)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn axes(s: &mut String, f: &Frame, log: bool, xlabel: &str, ylabel: &str) {
    let (l, r, t, b) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    let _ = writeln!(
        s,
        r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        r - l,
        b - t
    );
    let ticks = |lo: f64, hi: f64| -> Vec<f64> {
        if log {
            (lo.ceil() as i64..=hi.floor() as i64)
                .map(|e| e as f64)
                .collect()
        } else {
            let step = nice_step((hi - lo) / 5.0);
            let mut v = (lo / step).ceil() * step;
            let mut out = Vec::new();
            while v <= hi + 1e-12 {
                out.push(v);
                v += step;
            }
            out
        }
    };
    let label = |v: f64| {
        if log {
            format!("1e{}", v as i64)
        } else {
            trim_number(v)
        }
    };
    for x in ticks(f.x0, f.x1) {
        let px = f.px(x);
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{b}" x2="{px:.2}" y2="{}" stroke="black"/>"#,
            b + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#,
            b + 18.0,
            label(x)
        );
    }
    for y in ticks(f.y0, f.y1) {
        let py = f.py(y);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{py:.2}" x2="{l}" y2="{py:.2}" stroke="black"/>"#,
            l - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            l - 8.0,
            py + 4.0,
            label(y)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (l + r) / 2.0,
        H - 12.0,
        escape(xlabel)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        (t + b) / 2.0,
        escape(ylabel)
    );
}

fn nice_step(raw: f64) -> f64 {
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let m = if f < 1.5 {
        1.0
    } else if f < 3.5 {
        2.0
    } else if f < 7.5 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn trim_number(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn polyline(s: &mut String, f: &Frame, pts: &[(f64, f64)], color: &str, dash: bool) {
    let d: Vec<String> = pts
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{}/>"#,
        d.join(" "),
        if dash {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        }
    );
}

fn legend(s: &mut String, entries: &[(String, &str, bool)]) {
    let x = W - RIGHT + 12.0;
    for (i, (name, color, dash)) in entries.iter().enumerate() {
        let y = TOP + 12.0 + 18.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="1.5"{}/>"#,
            x + 22.0,
            if *dash {
                r#" stroke-dasharray="6 4""#
            } else {
                ""
            }
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{}</text>"#,
            x + 28.0,
            y + 4.0,
            escape(name)
        );
    }
}

/// Log-log plot of `err` against `h`: one polyline per table and a dashed
/// line of slope `reference_slope` through the first point of the first
/// series. `None` when no table has a positive error.
pub fn rate_svg(
    title: &str,
    xlabel: &str,
    series: &[(&str, &RateTable)],
    reference_slope: f64,
) -> Option<String> {
    let pts: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|(_, t)| {
            t.rows
                .iter()
                .filter(|r| r.err > 0.0 && r.h > 0.0)
                .map(|r| (r.h.log10(), r.err.log10()))
                .collect()
        })
        .collect();
    let anchor = *pts.iter().find(|p| !p.is_empty())?.first()?;
    let xs: Vec<f64> = pts.iter().flatten().map(|p| p.0).collect();
    let (xmin, xmax) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let reference = [
        (xmin, anchor.1 + reference_slope * (xmin - anchor.0)),
        (xmax, anchor.1 + reference_slope * (xmax - anchor.0)),
    ];
    let all = pts.iter().flatten().chain(reference.iter());
    let frame = Frame::new(all.clone().map(|p| p.0), all.map(|p| p.1));

    let mut s = String::new();
    header(&mut s, title);
    axes(&mut s, &frame, true, xlabel, "error");
    let mut entries = Vec::new();
    for (i, ((name, table), p)) in series.iter().zip(&pts).enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        polyline(&mut s, &frame, p, color, false);
        for &(x, y) in p {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#,
                frame.px(x),
                frame.py(y)
            );
        }
        let label = match table.slope {
            Some(k) => format!("{name} ({k:.2})"),
            None => name.to_string(),
        };
        entries.push((label, color, false));
    }
    polyline(&mut s, &frame, &reference, "#555555", true);
    entries.push((
        format!("slope {}", trim_number(reference_slope)),
        "#555555",
        true,
    ));
    legend(&mut s, &entries);
    s.push_str("</svg>\n");
    Some(s)
}

/// Mean of each functional along time, one polyline per initial value and
/// functional. Colours follow functionals.
pub fn ergodicity_svg(title: &str, out: &ErgodicityOutcome) -> Option<String> {
    if out.times.is_empty() || out.series.is_empty() {
        return None;
    }
    let means = out
        .series
        .iter()
        .flat_map(|per_init| per_init.iter().flat_map(|s| s.iter().map(|e| e.mean)));
    let frame = Frame::new(out.times.iter().copied(), means);
    let mut s = String::new();
    header(&mut s, title);
    axes(&mut s, &frame, false, "t", "average");
    for per_init in &out.series {
        for (p, series) in per_init.iter().enumerate() {
            let pts: Vec<(f64, f64)> = out
                .times
                .iter()
                .zip(series)
                .map(|(&t, e)| (t, e.mean))
                .collect();
            polyline(&mut s, &frame, &pts, PALETTE[p % PALETTE.len()], false);
        }
    }
    let entries: Vec<(String, &str, bool)> = out
        .functionals
        .iter()
        .enumerate()
        .map(|(p, f)| (f.name().to_string(), PALETTE[p % PALETTE.len()], false))
        .collect();
    legend(&mut s, &entries);
    s.push_str("</svg>\n");
    Some(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::RateRow;

    fn table(rows: &[(f64, f64)]) -> RateTable {
        RateTable::from_rows(
            rows.iter()
                .map(|&(h, err)| RateRow {
                    h,
                    err,
                    se: 0.0,
                    n: 4,
                })
                .collect(),
        )
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(real(0.1), "1.0000000000000001e-1");
        assert_eq!(real(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(real(-2.0), "-2.0000000000000000e0");
    }

    #[test]
    fn empty_table_gives_header_only_and_no_plot() {
        let t = table(&[]);
        assert_eq!(rate_csv(&t), "h,err,se,n\n");
        assert!(rate_svg("x", "h", &[("a", &t)], 1.0).is_none());
    }

    #[test]
    fn plot_has_one_polyline_per_series_plus_reference() {
        let a = table(&[(1.0, 1.0), (0.5, 0.5), (0.25, 0.25)]);
        let b = table(&[(1.0, 2.0), (0.5, 1.0), (0.25, 0.5)]);
        let svg = rate_svg("rates", "dt", &[("a", &a), ("b", &b)], 1.0).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert_eq!(svg.matches("stroke-dasharray").count(), 2); // line and legend key
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        let csv = rate_csv(&a);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().nth(1).unwrap().ends_with(",4"));
    }

    #[test]
    fn preflight_rejects_unwritable_prefixes() {
        let dir = tempfile::tempdir().unwrap();
        let ok = dir.path().join("sub/run");
        assert!(preflight(ok.to_str().unwrap()).is_ok());
        assert!(dir.path().join("sub").is_dir());
        assert!(preflight(dir.path().to_str().unwrap()).is_err());
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        assert!(preflight(blocker.join("run").to_str().unwrap()).is_err());
        assert_eq!(fs::read_dir(dir.path().join("sub")).unwrap().count(), 0);
    }
}
