//! Self-contained SVG scatter of resonances and viscous eigenvalue paths.

use std::fmt::Write as _;

use torres_core::spectral::SpectralWindow;
use torres_core::C64;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN: f64 = 60.0;

pub struct Figure<'a> {
    pub title: &'a str,
    pub window: SpectralWindow,
    pub resonances: &'a [C64],
    /// Each path in sweep order (decreasing `ν`).
    pub paths: &'a [Vec<C64>],
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Bounds {
    re: (f64, f64),
    im: (f64, f64),
}

impl Bounds {
    /// Fits everything plotted plus the window, padded by 8% and clamped to a
    /// few window widths so far-away path starts do not flatten the picture.
    fn fit(fig: &Figure<'_>) -> Self {
        let w = fig.window;
        let (mut re, mut im) = ((f64::INFINITY, f64::NEG_INFINITY), (f64::INFINITY, f64::NEG_INFINITY));
        let mut take = |z: C64| {
            if z.re.is_finite() && z.im.is_finite() {
                re = (re.0.min(z.re), re.1.max(z.re));
                im = (im.0.min(z.im), im.1.max(z.im));
            }
        };
        if w.omega0 > 0.0 {
            take(C64::new(-w.omega0, -w.omega0 * w.theta));
            take(C64::new(w.omega0, 0.0));
        }
        fig.resonances.iter().copied().for_each(&mut take);
        fig.paths.iter().flatten().copied().for_each(&mut take);
        if !re.0.is_finite() {
            return Self { re: (-1.0, 1.0), im: (-1.0, 1.0) };
        }
        let span = 3.0 * w.omega0.max(0.1);
        re = (re.0.max(-span), re.1.min(span));
        im = (im.0.max(-span), im.1.min(span));
        let pad = |(lo, hi): (f64, f64)| {
            let d = (hi - lo).max(1e-3);
            (lo - 0.08 * d, hi + 0.08 * d)
        };
        Self { re: pad(re), im: pad(im) }
    }

    fn map(&self, z: C64) -> (f64, f64) {
        let x = MARGIN + (z.re - self.re.0) / (self.re.1 - self.re.0) * (WIDTH - 2.0 * MARGIN);
        let y = HEIGHT - MARGIN - (z.im - self.im.0) / (self.im.1 - self.im.0) * (HEIGHT - 2.0 * MARGIN);
        (x, y)
    }
}

fn num(x: f64) -> String {
    format!("{x:.2}")
}

fn label(x: f64) -> String {
    format!("{x:.3}")
}

pub fn render(fig: &Figure<'_>) -> String {
    let b = Bounds::fit(fig);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (pw, ph) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
    let _ = writeln!(
        s,
        r#"<defs><clipPath id="plot"><rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}"/></clipPath></defs>"#
    );
    let _ = writeln!(s, r#"<text x="{}" y="30" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, xml(fig.title));

    // frame and tick labels
    let _ = writeln!(s, r#"<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let re = b.re.0 + t * (b.re.1 - b.re.0);
        let im = b.im.0 + t * (b.im.1 - b.im.0);
        let (x, _) = b.map(C64::new(re, b.im.0));
        let (_, y) = b.map(C64::new(b.re.0, im));
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, num(x), HEIGHT - MARGIN + 18.0, label(re));
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, MARGIN - 6.0, num(y + 4.0), label(im));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">Re λ</text>"#, WIDTH / 2.0, HEIGHT - 15.0);
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">Im λ</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );

    let _ = writeln!(s, r#"<g clip-path="url(#plot)">"#);
    let w = fig.window;
    if w.omega0 > 0.0 {
        let (x0, y0) = b.map(C64::new(-w.omega0, b.im.1));
        let (x1, y1) = b.map(C64::new(w.omega0, -w.omega0 * w.theta));
        let _ = writeln!(
            s,
            r##"<rect x="{}" y="{}" width="{}" height="{}" fill="#eef4ff" stroke="#4a6fa5" stroke-dasharray="6 4"/>"##,
            num(x0),
            num(y0),
            num(x1 - x0),
            num(y1 - y0)
        );
    }
    let (ax0, ay) = b.map(C64::new(b.re.0, 0.0));
    let (ax1, _) = b.map(C64::new(b.re.1, 0.0));
    let _ = writeln!(s, r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#999"/>"##, num(ax0), num(ay), num(ax1), num(ay));

    for p in fig.paths {
        let pts: Vec<String> = p
            .iter()
            .map(|&z| {
                let (x, y) = b.map(z);
                format!("{},{}", num(x), num(y))
            })
            .collect();
        let _ = writeln!(s, r##"<polyline points="{}" fill="none" stroke="#2e8b57" stroke-width="1.5"/>"##, pts.join(" "));
        if let Some(&last) = p.last() {
            let (x, y) = b.map(last);
            let _ = writeln!(s, r##"<circle cx="{}" cy="{}" r="2.5" fill="#2e8b57"/>"##, num(x), num(y));
        }
    }
    for &z in fig.resonances {
        let (x, y) = b.map(z);
        let d = 4.0;
        let _ = writeln!(
            s,
            r##"<path d="M{} {} L{} {} M{} {} L{} {}" stroke="#c0392b" stroke-width="2"/>"##,
            num(x - d),
            num(y - d),
            num(x + d),
            num(y + d),
            num(x - d),
            num(y + d),
            num(x + d),
            num(y - d)
        );
    }
    s.push_str("</g>\n");

    let _ = writeln!(
        s,
        r##"<text x="{}" y="{}" fill="#4a6fa5">window ω₀ = {}, θ = {}</text>"##,
        MARGIN + 8.0,
        MARGIN + 16.0,
        label(w.omega0),
        label(w.theta)
    );
    let _ = writeln!(
        s,
        r##"<text x="{}" y="{}" text-anchor="end"><tspan fill="#c0392b">× resonance</tspan>  <tspan fill="#2e8b57">╱ viscous path</tspan></text>"##,
        WIDTH - MARGIN - 8.0,
        MARGIN + 16.0
    );
    s.push_str("</svg>\n");
    s
}

fn xml(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_viewbox_and_glyph_counts() {
        let paths = vec![vec![C64::new(0.1, -0.3), C64::new(0.05, -0.26)], vec![C64::new(-0.2, 0.0)]];
        let res = [C64::new(0.0, -0.25), C64::new(0.3, -0.1), C64::new(-0.2, 0.0)];
        let fig = Figure { title: "fig1 <n=0>", window: SpectralWindow { omega0: 0.5, theta: 0.8 }, resonances: &res, paths: &paths };
        let svg = render(&fig);
        assert!(svg.starts_with("<svg") && svg.contains(r#"viewBox="0 0 800 600""#));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches(r##"stroke="#c0392b" stroke-width="2""##).count(), 3);
        assert!(svg.contains("ω₀ = 0.500"));
        assert!(svg.contains("fig1 &lt;n=0&gt;"));
        assert_eq!(render(&fig), svg);
    }

    #[test]
    fn empty_figure_renders() {
        let fig = Figure { title: "", window: SpectralWindow { omega0: 0.0, theta: 0.8 }, resonances: &[], paths: &[] };
        let svg = render(&fig);
        assert!(svg.ends_with("</svg>\n"));
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn points_map_inside_frame() {
        let res = [C64::new(0.45, -0.35), C64::new(-0.45, 0.2)];
        let fig = Figure { title: "", window: SpectralWindow { omega0: 0.5, theta: 0.8 }, resonances: &res, paths: &[] };
        let b = Bounds::fit(&fig);
        for z in res {
            let (x, y) = b.map(z);
            assert!((MARGIN..=WIDTH - MARGIN).contains(&x) && (MARGIN..=HEIGHT - MARGIN).contains(&y));
        }
    }
}
