//! CSV and SVG emission.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

/// `%.9g`: nine significant digits, trailing zeros dropped.
pub fn fmt_sig(x: f64) -> String {
    const DIGITS: usize = 9;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= DIGITS as i32 {
        let m = trim_zeros(mantissa);
        return format!("{m}e{exp}");
    }
    let decimals = (DIGITS as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// A CSV table held in memory so it can go to a file or to stdout.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_to<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_file(&self, path: &Path) -> csv::Result<()> {
        self.write_to(std::fs::File::create(path)?)
    }
}

/// Two curves on shared axes: the equilibrium price `P*_N(y)` and the
/// constant `p`.
pub fn price_svg(title: &str, points: &[(f64, f64)], p_const: f64) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const M: f64 = 40.0;
    let (x_lo, x_hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(x, _)| (a.min(x), b.max(x)));
    let sx = |x: f64| M + (x - x_lo) / (x_hi - x_lo) * (W - 2.0 * M);
    let sy = |y: f64| H - M - y * (H - 2.0 * M);
    let poly = |pts: &[(f64, f64)]| {
        let mut s = String::new();
        for (i, &(x, y)) in pts.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            write!(s, "{:.2},{:.2}", sx(x), sy(y)).unwrap();
        }
        s
    };
    let mut svg = String::new();
    writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}">"#).unwrap();
    writeln!(svg, r#"<title>{title}</title>"#).unwrap();
    writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(svg, r#"<line x1="{M}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, H - M, W - M, H - M).unwrap();
    writeln!(svg, r#"<line x1="{M}" y1="{M}" x2="{M}" y2="{}" stroke="black"/>"#, H - M).unwrap();
    writeln!(svg, r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#, poly(points)).unwrap();
    let flat = [(x_lo, p_const), (x_hi, p_const)];
    writeln!(svg, r#"<polyline fill="none" stroke="firebrick" stroke-dasharray="6,4" points="{}"/>"#, poly(&flat))
        .unwrap();
    writeln!(svg, r#"<text x="{M}" y="{}" font-size="12">y from {} to {}</text>"#, H - 12.0, fmt_sig(x_lo), fmt_sig(x_hi))
        .unwrap();
    svg.push_str("</svg>\n");
    svg
}
