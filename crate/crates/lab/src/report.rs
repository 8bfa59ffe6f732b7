//! CSV and SVG output for figure runs.
//!
//! CSV columns are `panel,j,ell,ell_tilde,rel_diff,bound,theorem`. Floats are
//! written in shortest round-trip form and undefined values as empty fields,
//! so [`parse_csv`] recovers the rows bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use leverage::Theorem;

use crate::error::{LabError, Result};
use crate::figures::FigureRow;

pub const CSV_HEADER: &str = "panel,j,ell,ell_tilde,rel_diff,bound,theorem";

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

pub fn to_csv(rows: &[FigureRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{:e},{},{},{},{}",
            r.panel,
            r.j,
            r.ell,
            opt(r.ell_tilde),
            opt(r.rel_diff),
            opt(r.bound),
            r.theorem.map(|t| t.tag()).unwrap_or_default()
        );
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<FigureRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => {
            return Err(LabError::Parse(format!(
                "expected header '{CSV_HEADER}', found {other:?}"
            )))
        }
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(k, line)| {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(LabError::Parse(format!(
                    "line {}: expected 7 fields, found {}",
                    k + 2,
                    fields.len()
                )));
            }
            let bad =
                |what: &str, v: &str| LabError::Parse(format!("line {}: bad {what} '{v}'", k + 2));
            let float = |what: &str, v: &str| v.parse::<f64>().map_err(|_| bad(what, v));
            let opt_float = |what: &str, v: &str| -> Result<Option<f64>> {
                if v.is_empty() {
                    Ok(None)
                } else {
                    float(what, v).map(Some)
                }
            };
            Ok(FigureRow {
                panel: fields[0].to_string(),
                j: fields[1].parse().map_err(|_| bad("index", fields[1]))?,
                ell: float("ell", fields[2])?,
                ell_tilde: opt_float("ell_tilde", fields[3])?,
                rel_diff: opt_float("rel_diff", fields[4])?,
                bound: opt_float("bound", fields[5])?,
                theorem: if fields[6].is_empty() {
                    None
                } else {
                    Some(
                        fields[6]
                            .parse::<Theorem>()
                            .map_err(|_| bad("theorem", fields[6]))?,
                    )
                },
            })
        })
        .collect()
}

pub fn write_csv(path: &Path, rows: &[FigureRow]) -> Result<()> {
    std::fs::write(path, to_csv(rows)).map_err(|e| LabError::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvgOptions {
    pub title: String,
    pub panel_width: f64,
    pub panel_height: f64,
    pub columns: usize,
}

impl Default for SvgOptions {
    fn default() -> Self {
        Self {
            title: String::new(),
            panel_width: 420.0,
            panel_height: 260.0,
            columns: 2,
        }
    }
}

const MARGIN_LEFT: f64 = 56.0;
const MARGIN_RIGHT: f64 = 12.0;
const MARGIN_TOP: f64 = 24.0;
const MARGIN_BOTTOM: f64 = 28.0;
const TITLE_HEIGHT: f64 = 28.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Log-scale decades `[lo, hi]` covering every positive value; `None` if
/// there are none.
fn decade_range(values: impl Iterator<Item = f64>) -> Option<(i32, i32)> {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for v in values.filter(|v| *v > 0.0 && v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if hi == 0.0 {
        return None;
    }
    let (a, b) = (lo.log10().floor() as i32, hi.log10().ceil() as i32);
    Some((a, b.max(a + 1)))
}

/// One scatter panel per distinct panel id: relative differences as
/// `class="pt"` markers and the bound as a red polyline. Leverage-score
/// panels (no relative differences) show `ℓ_j` as `class="lev"` markers.
/// Values `≤ 0` are drawn at the bottom of the axis, since a log scale has
/// no place for them.
pub fn to_svg(rows: &[FigureRow], options: &SvgOptions) -> String {
    let mut panels: Vec<&str> = Vec::new();
    for r in rows {
        if !panels.contains(&r.panel.as_str()) {
            panels.push(&r.panel);
        }
    }
    let cols = options.columns.max(1);
    let grid_rows = panels.len().div_ceil(cols).max(1);
    let (pw, ph) = (options.panel_width, options.panel_height);
    let width = pw * cols as f64;
    let height = TITLE_HEIGHT + ph * grid_rows as f64;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="10">"#
    );
    let _ = writeln!(
        s,
        r#"<style>.pt{{fill:#1f4fd6}}.lev{{fill:#333}}.bound{{fill:none;stroke:#d62020;stroke-width:1.2}}.axis{{stroke:#000;fill:none}}.grid{{stroke:#ddd}}</style>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="18" text-anchor="middle" font-size="13">{}</text>"#,
        width / 2.0,
        escape(&options.title)
    );

    for (k, panel) in panels.iter().enumerate() {
        let ox = pw * (k % cols) as f64;
        let oy = TITLE_HEIGHT + ph * (k / cols) as f64;
        let prs: Vec<&FigureRow> = rows.iter().filter(|r| r.panel == *panel).collect();
        let is_leverage = prs
            .iter()
            .all(|r| r.rel_diff.is_none() && r.bound.is_none());
        let value = |r: &FigureRow| if is_leverage { Some(r.ell) } else { r.rel_diff };
        let decades = decade_range(
            prs.iter()
                .filter_map(|r| value(r))
                .chain(prs.iter().filter_map(|r| r.bound)),
        )
        .unwrap_or((-16, 0));
        let max_j = prs.iter().map(|r| r.j).max().unwrap_or(0).max(1) as f64;

        let (x0, x1) = (ox + MARGIN_LEFT, ox + pw - MARGIN_RIGHT);
        let (y0, y1) = (oy + MARGIN_TOP, oy + ph - MARGIN_BOTTOM);
        let floor = 10f64.powi(decades.0);
        let sx = |j: usize| x0 + (x1 - x0) * j as f64 / max_j;
        let sy = |v: f64| {
            let t = (v.max(floor).log10() - decades.0 as f64) / (decades.1 - decades.0) as f64;
            y1 - (y1 - y0) * t.min(1.0)
        };

        let _ = writeln!(s, r#"<g id="panel-{}">"#, escape(panel));
        let theorem = prs
            .iter()
            .find_map(|r| r.theorem)
            .map(|t| t.tag())
            .unwrap_or("");
        let label = if is_leverage {
            format!("({panel}) leverage scores")
        } else {
            format!("({panel}) relative differences, bound {theorem}")
        };
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            (x0 + x1) / 2.0,
            oy + 14.0,
            escape(&label)
        );
        let step = ((decades.1 - decades.0) as f64 / 6.0).ceil().max(1.0) as i32;
        let mut d = decades.0;
        while d <= decades.1 {
            let y = sy(10f64.powi(d));
            let _ = writeln!(
                s,
                r#"<line class="grid" x1="{x0:.1}" y1="{y:.1}" x2="{x1:.1}" y2="{y:.1}"/><text x="{:.1}" y="{:.1}" text-anchor="end">1e{d}</text>"#,
                x0 - 4.0,
                y + 3.0
            );
            d += step;
        }
        let _ = writeln!(
            s,
            r#"<rect class="axis" x="{x0:.1}" y="{y0:.1}" width="{:.1}" height="{:.1}"/>"#,
            x1 - x0,
            y1 - y0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x0:.1}" y="{:.1}">1</text><text x="{x1:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            y1 + 12.0,
            y1 + 12.0,
            max_j as usize + 1
        );

        let class = if is_leverage { "lev" } else { "pt" };
        for r in &prs {
            if let Some(v) = value(r) {
                let _ = writeln!(
                    s,
                    r#"<circle class="{class}" cx="{:.2}" cy="{:.2}" r="1.3"/>"#,
                    sx(r.j),
                    sy(v)
                );
            }
        }
        let points: Vec<String> = prs
            .iter()
            .filter_map(|r| r.bound.map(|b| format!("{:.2},{:.2}", sx(r.j), sy(b))))
            .collect();
        if !points.is_empty() {
            let _ = writeln!(
                s,
                r#"<polyline class="bound" points="{}"/>"#,
                points.join(" ")
            );
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_svg(path: &Path, rows: &[FigureRow], options: &SvgOptions) -> Result<()> {
    std::fs::write(path, to_svg(rows, options)).map_err(|e| LabError::io(path, e))
}
