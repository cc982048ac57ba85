//! Number formatting, CSV and SVG output.

use std::fmt::Write as _;

use crate::study::StudyReport;

/// `%.9g`: nine significant digits, trailing zeros removed, `.` as separator.
pub fn g9(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let m = trim_zeros(mantissa);
        return format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    trim_zeros(&format!("{:.*}", (8 - exp) as usize, x)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub const REPORT_HEADER: &str = "n,r,h,k,lambda_n_k,lambda_limit,error,aH1,bH1,ga,gb,bound_ok";

/// One row per complete record and position `k`; corrector columns are empty
/// for positions in a multiple limit eigenvalue.
pub fn report_csv(report: &StudyReport<f64>) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for rec in report.records.iter().filter(|r| r.is_complete()) {
        for (i, p) in rec.pairs.iter().enumerate() {
            let corr = match rec.correctors.get(i).copied().flatten() {
                Some(c) => format!("{},{},{},{}", g9(c.a_h1), g9(c.b_h1), g9(c.ga), g9(c.gb)),
                None => ",,,".into(),
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                rec.n,
                g9(rec.params.r),
                g9(rec.params.h),
                p.k,
                g9(p.discrete),
                g9(p.limit),
                g9(p.error),
                corr,
                rec.bound_ok.get(i).copied().unwrap_or(false)
            );
        }
    }
    out
}

pub fn rates_csv(report: &StudyReport<f64>) -> String {
    let mut out = String::from("k,alpha,points\n");
    for r in &report.rates {
        let alpha = r.alpha.map(g9).unwrap_or_default();
        let _ = writeln!(out, "{},{},{}", r.k, alpha, r.points);
    }
    out
}

const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

/// Log-log chart of `e_{n,k}` against `r_n`, one polyline per `k`.
pub fn error_svg(report: &StudyReport<f64>) -> String {
    let (w, h, pad) = (640.0, 480.0, 60.0);
    let series: Vec<(usize, Vec<(f64, f64)>)> = (1..=report.config.k)
        .map(|k| {
            let pts = report
                .records
                .iter()
                .filter_map(|rec| rec.pairs.get(k - 1).map(|p| (rec.params.r, p.error)))
                .filter(|&(r, e)| r > 0.0 && e > 0.0)
                .map(|(r, e)| (r.log10(), e.log10()))
                .collect();
            (k, pts)
        })
        .collect();
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.1.iter().copied()).collect();
    let bounds = |f: fn(&(f64, f64)) -> f64| {
        let lo = all.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = all.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        if lo.is_finite() && hi > lo {
            (lo.floor(), hi.ceil())
        } else if lo.is_finite() {
            (lo.floor() - 1.0, lo.floor() + 1.0)
        } else {
            (-1.0, 0.0)
        }
    };
    let (x0, x1) = bounds(|p| p.0);
    let (y0, y1) = bounds(|p| p.1);
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<path d="M {pad} {} L {} {} M {pad} {pad} L {pad} {}" stroke="black" fill="none"/>"#,
        h - pad,
        w - pad,
        h - pad,
        h - pad
    );
    for d in (x0 as i32)..=(x1 as i32) {
        let x = sx(d as f64);
        let _ = writeln!(out, r#"<text x="{x:.1}" y="{}" font-size="11" text-anchor="middle">1e{d}</text>"#, h - pad + 16.0);
    }
    for d in (y0 as i32)..=(y1 as i32) {
        let y = sy(d as f64);
        let _ = writeln!(out, r#"<text x="{}" y="{y:.1}" font-size="11" text-anchor="end">1e{d}</text>"#, pad - 6.0);
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">r</text>"#, w / 2.0, h - 16.0);
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" font-size="13" text-anchor="middle" transform="rotate(-90 16 {})">error</text>"#,
        h / 2.0,
        h / 2.0
    );
    for (i, (k, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            out,
            r#"<polyline data-k="{k}" points="{}" stroke="{color}" stroke-width="1.5" fill="none"/>"#,
            coords.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="11" fill="{color}">k = {k}</text>"#,
            w - pad + 6.0,
            pad + 14.0 * i as f64
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        let pi = std::f64::consts::PI;
        assert_eq!(g9((pi / 2.0).powi(2)), "2.4674011");
        assert_eq!(g9(pi * pi), "9.8696044");
        assert_eq!(g9(22.206609902451056), "22.2066099");
        assert_eq!(g9(4.0 * pi * pi), "39.4784176");
        assert_eq!(g9(9.0 * pi * pi), "88.8264396");
        assert_eq!(g9(0.0), "0");
        assert_eq!(g9(1.5e-5), "1.5e-05");
        assert_eq!(g9(123456789012.0), "1.23456789e+11");
        assert_eq!(g9(9.9999999999), "10");
        assert_eq!(g9(-0.25), "-0.25");
        assert_eq!(g9(1e-4), "0.0001");
    }
}
