use std::fmt::Write as _;
use std::io::Write;

use crate::error::Result;
use crate::fespace::{BoundaryCondition, Identification};

pub const CSV_HEADER: &str = "h,err_u,rate_u,err_d,rate_d,err_codiff,rate_codiff";

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    pub err_u: f64,
    pub rate_u: Option<f64>,
    pub err_d: f64,
    pub rate_d: Option<f64>,
    pub err_codiff: f64,
    pub rate_codiff: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportMetadata {
    pub domain: String,
    pub sequence: String,
    pub identification: Identification,
    pub bc: BoundaryCondition,
    pub reference: String,
    pub degree: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub metadata: ReportMetadata,
}

/// Observed order between two levels, `log(e0/e1) / log(h0/h1)`.
pub fn rate(h0: f64, e0: f64, h1: f64, e1: f64) -> Option<f64> {
    if e0 > 0.0 && e1 > 0.0 && h0 > 0.0 && h1 > 0.0 && h0 != h1 {
        Some((e0 / e1).ln() / (h0 / h1).ln())
    } else {
        None
    }
}

/// Six significant digits.
fn fmt6(x: f64) -> String {
    format!("{x:.5e}")
}

impl ConvergenceReport {
    /// Build rows from `(h, err_u, err_d, err_codiff)` per level.
    pub fn from_errors(levels: &[(f64, f64, f64, f64)], metadata: ReportMetadata) -> Self {
        let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels.len());
        for (i, &(h, eu, ed, ec)) in levels.iter().enumerate() {
            let (ru, rd, rc) = if i == 0 {
                (None, None, None)
            } else {
                let (h0, eu0, ed0, ec0) = levels[i - 1];
                (rate(h0, eu0, h, eu), rate(h0, ed0, h, ed), rate(h0, ec0, h, ec))
            };
            rows.push(ConvergenceRow {
                h,
                err_u: eu,
                rate_u: ru,
                err_d: ed,
                rate_d: rd,
                err_codiff: ec,
                rate_codiff: rc,
            });
        }
        Self { rows, metadata }
    }

    pub fn rates_u(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.rate_u).collect()
    }

    pub fn rates_d(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.rate_d).collect()
    }

    pub fn rates_codiff(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.rate_codiff).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(CSV_HEADER);
        s.push('\n');
        let opt = |r: Option<f64>| r.map(fmt6).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                fmt6(r.h),
                fmt6(r.err_u),
                opt(r.rate_u),
                fmt6(r.err_d),
                opt(r.rate_d),
                fmt6(r.err_codiff),
                opt(r.rate_codiff)
            );
        }
        s
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }

    /// Metadata as `key = value` lines.
    pub fn metadata_lines(&self) -> Vec<String> {
        let m = &self.metadata;
        vec![
            format!("domain = {}", m.domain),
            format!("sequence = {}", m.sequence),
            format!("identification = {}", m.identification),
            format!("bc = {}", m.bc),
            format!("reference = {}", m.reference),
            format!("degree = {}", m.degree),
        ]
    }

    /// Log-log plot of the three error columns against `h`.
    pub fn to_svg(&self) -> String {
        let (w, ht, pad) = (480.0, 360.0, 50.0);
        let series: [(&str, &str, fn(&ConvergenceRow) -> f64); 3] = [
            ("err_u", "#1f77b4", |r| r.err_u),
            ("err_d", "#d62728", |r| r.err_d),
            ("err_codiff", "#2ca02c", |r| r.err_codiff),
        ];
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .flat_map(|r| series.iter().map(move |s| (r.h, (s.2)(r))))
            .filter(|&(h, e)| h > 0.0 && e > 0.0)
            .map(|(h, e)| (h.log10(), e.log10()))
            .collect();
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{ht}" viewBox="0 0 {w} {ht}">"#
        );
        let _ = writeln!(s, r#"<rect width="{w}" height="{ht}" fill="white"/>"#);
        if !pts.is_empty() {
            let fold = |f: fn(f64, f64) -> f64, init: f64, i: usize| {
                pts.iter().map(|p| if i == 0 { p.0 } else { p.1 }).fold(init, f)
            };
            let (x0, x1) = (fold(f64::min, f64::INFINITY, 0), fold(f64::max, f64::NEG_INFINITY, 0));
            let (y0, y1) = (fold(f64::min, f64::INFINITY, 1), fold(f64::max, f64::NEG_INFINITY, 1));
            let span = |a: f64, b: f64| if b > a { b - a } else { 1.0 };
            let sx = |x: f64| pad + (x - x0) / span(x0, x1) * (w - 2.0 * pad);
            let sy = |y: f64| ht - pad - (y - y0) / span(y0, y1) * (ht - 2.0 * pad);
            let _ = writeln!(
                s,
                r#"<rect x="{pad}" y="{pad}" width="{}" height="{}" fill="none" stroke="black"/>"#,
                w - 2.0 * pad,
                ht - 2.0 * pad
            );
            for (i, (name, color, get)) in series.iter().enumerate() {
                let line: Vec<String> = self
                    .rows
                    .iter()
                    .filter(|r| r.h > 0.0 && get(r) > 0.0)
                    .map(|r| format!("{:.2},{:.2}", sx(r.h.log10()), sy(get(r).log10())))
                    .collect();
                let _ = writeln!(
                    s,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
                    line.join(" ")
                );
                let _ = writeln!(
                    s,
                    r#"<text x="{}" y="{}" font-size="12" fill="{color}">{name}</text>"#,
                    pad + 8.0,
                    pad + 16.0 * (i + 1) as f64
                );
            }
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">log10 h</text>"#,
                w / 2.0,
                ht - 12.0
            );
            let _ = writeln!(
                s,
                r#"<text x="14" y="{}" font-size="12" transform="rotate(-90 14 {})" text-anchor="middle">log10 error</text>"#,
                ht / 2.0,
                ht / 2.0
            );
        }
        s.push_str("</svg>\n");
        s
    }
}
