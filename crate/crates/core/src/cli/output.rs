//! CSV tables and SVG line plots.
//!
//! Floats are written with `{:e}`, which round-trips exactly. A table may
//! start with one `#` comment line; readers skip it.

use std::fmt::Write as _;

use crate::error::{Error, Result};

pub const EQUILIBRIUM_HEADER: &str = "class_id,h_bar_m,v_bar_mps,L_m";
pub const LINEARIZE_HEADER: &str = "class_id,alpha_1ps2,beta_1ps,gamma_1ps,delta_1ps2,class";
pub const TAU0_HEADER: &str = "delta1,delta2,gamma_sq,n0,tau0,bound_lower,bound_upper";
pub const MARGIN_HEADER: &str = "y_1ps2,margin";
pub const SPECTRUM_HEADER: &str = "re_1ps,im_1ps";
pub const TRACE_HEADER: &str = "t_s,speed_variance_mps2,min_headway_m,max_headway_m";
pub const SWEEP_HEADER: &str = "n_total,rate_class1,abscissa_1ps,verdict";

pub fn num(x: f64) -> String {
    format!("{x:e}")
}

/// Assembles a CSV document from a header and preformatted rows.
pub fn table(
    comment: Option<&str>,
    header: &str,
    rows: impl IntoIterator<Item = Vec<String>>,
) -> String {
    let mut out = String::new();
    if let Some(c) = comment {
        let _ = writeln!(out, "# {c}");
    }
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Splits a CSV document into its header and rows, skipping comment lines.
pub fn parse_table(text: &str) -> Result<(String, Vec<Vec<String>>)> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| Error::Io("empty CSV".into()))?
        .to_string();
    let width = header.split(',').count();
    let rows = lines
        .map(|l| {
            let cells: Vec<String> = l.split(',').map(str::to_string).collect();
            if cells.len() == width {
                Ok(cells)
            } else {
                Err(Error::Io(format!(
                    "row `{l}` has {} cells, header has {width}",
                    cells.len()
                )))
            }
        })
        .collect::<Result<_>>()?;
    Ok((header, rows))
}

pub fn parse_num(cell: &str) -> Result<f64> {
    cell.parse()
        .map_err(|_| Error::Io(format!("`{cell}` is not a number")))
}

/// Numeric columns `x_col`, `y_col` of a CSV document.
pub fn columns(text: &str, x_col: usize, y_col: usize) -> Result<Vec<(f64, f64)>> {
    let (_, rows) = parse_table(text)?;
    rows.iter()
        .map(|r| Ok((parse_num(&r[x_col])?, parse_num(&r[y_col])?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumRow {
    pub class_id: u32,
    pub h_bar: f64,
    pub v_bar: f64,
    pub length: f64,
}

pub fn parse_equilibrium(text: &str) -> Result<Vec<EquilibriumRow>> {
    let (header, rows) = parse_table(text)?;
    if header != EQUILIBRIUM_HEADER {
        return Err(Error::Io(format!("unexpected header `{header}`")));
    }
    rows.iter()
        .map(|r| {
            Ok(EquilibriumRow {
                class_id: r[0]
                    .parse()
                    .map_err(|_| Error::Io(format!("bad class_id `{}`", r[0])))?,
                h_bar: parse_num(&r[1])?,
                v_bar: parse_num(&r[2])?,
                length: parse_num(&r[3])?,
            })
        })
        .collect()
}

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD_L: f64 = 80.0;
const PAD_R: f64 = 20.0;
const PAD_T: f64 = 40.0;
const PAD_B: f64 = 50.0;
const COLOURS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn span(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        let d = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        (lo - d, hi + d)
    }
}

/// Minimal line plot with axes, five ticks per axis and a legend.
/// Non-finite points are dropped.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let finite = |p: &&(f64, f64)| p.0.is_finite() && p.1.is_finite();
    let all: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().filter(finite).copied())
        .collect();
    let fold = |f: fn(&(f64, f64)) -> f64| {
        all.iter()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
    };
    let (x0, x1) = if all.is_empty() {
        (0.0, 1.0)
    } else {
        span(fold(|p| p.0).0, fold(|p| p.0).1)
    };
    let (y0, y1) = if all.is_empty() {
        (0.0, 1.0)
    } else {
        span(fold(|p| p.1).0, fold(|p| p.1).1)
    };
    let px = |x: f64| PAD_L + (x - x0) / (x1 - x0) * (W - PAD_L - PAD_R);
    let py = |y: f64| H - PAD_B - (y - y0) / (y1 - y0) * (H - PAD_T - PAD_B);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let (ax0, ax1, ay0, ay1) = (PAD_L, W - PAD_R, H - PAD_B, PAD_T);
    let _ = writeln!(
        s,
        r#"<polyline fill="none" stroke="black" points="{ax0},{ay1} {ax0},{ay0} {ax1},{ay0}"/>"#
    );
    for i in 0..5 {
        let f = i as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (tx, ty) = (px(xv), py(yv));
        let _ = writeln!(
            s,
            r#"<line x1="{tx:.2}" y1="{ay0}" x2="{tx:.2}" y2="{}" stroke="black"/>"#,
            ay0 + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{tx:.2}" y="{}" text-anchor="middle">{}</text>"#,
            ay0 + 18.0,
            tick(xv)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ty:.2}" x2="{ax0}" y2="{ty:.2}" stroke="black"/>"#,
            ax0 - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            ax0 - 8.0,
            ty + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (ax0 + ax1) / 2.0,
        H - 10.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        (ay0 + ay1) / 2.0,
        escape(y_label)
    );
    for (k, ser) in series.iter().enumerate() {
        let colour = COLOURS[k % COLOURS.len()];
        let pts: Vec<String> = ser
            .points
            .iter()
            .filter(finite)
            .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = PAD_T + 14.0 * k as f64 + 6.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly}" text-anchor="end" fill="{colour}">{}</text>"#,
            ax1 - 4.0,
            escape(&ser.name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    if v == 0.0 || (1e-2..1e4).contains(&v.abs()) {
        format!("{v:.3}")
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    } else {
        format!("{v:.2e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_round_trip() {
        let doc = table(
            Some("generated"),
            "a,b",
            vec![vec![num(0.1), num(-3e-12)], vec![num(1e300), num(2.0)]],
        );
        assert!(doc.starts_with("# generated\na,b\n"));
        let pts = columns(&doc, 0, 1).unwrap();
        assert_eq!(pts, vec![(0.1, -3e-12), (1e300, 2.0)]);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(parse_table("a,b\n1\n").is_err());
    }

    #[test]
    fn plot_is_deterministic_and_skips_nan() {
        let ser = vec![Series {
            name: "s".into(),
            points: vec![(0.0, 1.0), (1.0, f64::NAN), (2.0, 3.0)],
        }];
        let a = line_plot("t", "x", "y", &ser);
        assert_eq!(a, line_plot("t", "x", "y", &ser));
        assert!(a.contains("<polyline") && !a.contains("NaN"));
    }

    #[test]
    fn flat_series_has_finite_axes() {
        let ser = vec![Series {
            name: "flat".into(),
            points: vec![(0.0, 2.0), (1.0, 2.0)],
        }];
        assert!(!line_plot("t", "x", "y", &ser).contains("NaN"));
    }
}
