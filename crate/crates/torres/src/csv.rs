//! Byte-deterministic CSV output.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::Path;

use torres_core::spectral::cmp_complex;
use torres_core::C64;

use crate::Failure;

pub const SPECTRUM_HEADER: &str = "kind,n,theta,nu,re_lambda,im_lambda,residual,path_id,in_window";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum RowKind {
    Resonance,
    Viscous,
}

impl RowKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RowKind::Resonance => "resonance",
            RowKind::Viscous => "viscous",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumRow {
    pub kind: RowKind,
    pub n: i64,
    pub theta: f64,
    pub nu: f64,
    pub lambda: C64,
    pub residual: f64,
    pub path_id: Option<usize>,
    pub in_window: bool,
}

/// 17 significant digits in scientific notation; round-trips every `f64`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Canonical row order: kind, n, θ, ν, path, then `(Re λ, Im λ)`.
pub fn canonical_order(a: &SpectrumRow, b: &SpectrumRow) -> Ordering {
    a.kind
        .cmp(&b.kind)
        .then(a.n.cmp(&b.n))
        .then(a.theta.total_cmp(&b.theta))
        .then(b.nu.total_cmp(&a.nu))
        .then(a.path_id.cmp(&b.path_id))
        .then(cmp_complex(a.lambda, b.lambda))
        .then(a.residual.total_cmp(&b.residual))
}

/// Sorts canonically and renders with `\n` line endings.
pub fn render_spectrum_rows(rows: &mut [SpectrumRow]) -> String {
    rows.sort_by(canonical_order);
    let mut out = String::with_capacity(64 + rows.len() * 128);
    out.push_str(SPECTRUM_HEADER);
    out.push('\n');
    for r in rows.iter() {
        let path = r.path_id.map(|p| p.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.kind.as_str(),
            r.n,
            fmt_float(r.theta),
            fmt_float(r.nu),
            fmt_float(r.lambda.re),
            fmt_float(r.lambda.im),
            fmt_float(r.residual),
            path,
            r.in_window
        );
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

/// Quotes a field when it holds a separator or quote.
pub fn escape_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(kind: RowKind, n: i64, nu: f64, re: f64, path: Option<usize>) -> SpectrumRow {
        SpectrumRow { kind, n, theta: 0.8, nu, lambda: C64::new(re, -0.25), residual: 1e-14, path_id: path, in_window: true }
    }

    #[test]
    fn float_format_is_fixed() {
        assert_eq!(fmt_float(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_float(-2.5), "-2.5000000000000000e0");
        assert_eq!(fmt_float(0.0), "0.0000000000000000e0");
        for x in [0.1, 1.0 / 3.0, -7.25e-300, 6.02e23] {
            assert_eq!(fmt_float(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn rows_render_sorted_with_header() {
        let mut rows = vec![
            row(RowKind::Viscous, 0, 0.01, 0.1, Some(1)),
            row(RowKind::Viscous, 0, 0.1, 0.1, Some(1)),
            row(RowKind::Resonance, 1, 0.0, 0.3, None),
            row(RowKind::Resonance, -1, 0.0, 0.3, None),
        ];
        let text = render_spectrum_rows(&mut rows);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], SPECTRUM_HEADER);
        assert!(lines[1].starts_with("resonance,-1,"));
        assert!(lines[2].starts_with("resonance,1,"));
        assert!(lines[1].ends_with(",,true"));
        assert!(lines[3].contains(",1.0000000000000001e-1,") && lines[3].ends_with(",1,true"));
        assert!(text.ends_with('\n') && !text.contains('\r'));
        let mut shuffled = rows.clone();
        shuffled.reverse();
        assert_eq!(render_spectrum_rows(&mut shuffled), text);
    }

    #[test]
    fn escaping() {
        assert_eq!(escape_field("plain"), "plain");
        assert_eq!(escape_field("a,b"), "\"a,b\"");
        assert_eq!(escape_field("say \"x\""), "\"say \"\"x\"\"\"");
    }
}
