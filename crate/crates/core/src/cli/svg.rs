//! Minimal SVG emitters: polyline plots and heatmaps.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 480.0;
const PAD: f64 = 56.0;

pub struct Series {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub color: &'static str,
}

fn finite_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(v), b.max(v)));
    if lo > hi {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Line plot. `band` shades a horizontal stripe (for example a gap).
pub fn line_plot(
    series: &[Series],
    x_label: &str,
    y_label: &str,
    band: Option<(f64, f64)>,
) -> String {
    let (x0, x1) = finite_range(series.iter().flat_map(|s| s.x.iter().copied()));
    let (y0, y1) = finite_range(
        series
            .iter()
            .flat_map(|s| s.y.iter().copied())
            .chain(band.into_iter().flat_map(|(a, b)| [a, b])),
    );
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    if let Some((a, b)) = band {
        let _ = writeln!(
            out,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#dddddd"/>"##,
            PAD,
            sy(b),
            W - 2.0 * PAD,
            sy(a) - sy(b)
        );
    }
    let _ = writeln!(
        out,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    for s in series {
        let mut pts = String::new();
        for (&x, &y) in s.x.iter().zip(&s.y) {
            if x.is_finite() && y.is_finite() {
                let _ = write!(pts, "{:.2},{:.2} ", sx(x), sy(y));
            }
        }
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            s.color,
            pts.trim_end()
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="14">{x_label}</text>"#,
        W / 2.0,
        H - 16.0
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" font-size="14" transform="rotate(-90 16 {:.1})">{y_label}</text>"#,
        H / 2.0,
        H / 2.0
    );
    for (v, x, y, anchor) in [
        (x0, sx(x0), H - PAD + 16.0, "start"),
        (x1, sx(x1), H - PAD + 16.0, "end"),
        (y0, PAD - 4.0, sy(y0), "end"),
        (y1, PAD - 4.0, sy(y1) + 10.0, "end"),
    ] {
        let _ = writeln!(
            out,
            r#"<text x="{x:.1}" y="{y:.1}" text-anchor="{anchor}" font-size="11">{v:.4}</text>"#
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Fixed five-stop colormap from dark blue to yellow.
fn color(t: f64) -> (u8, u8, u8) {
    const STOPS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let t = if t.is_finite() {
        t.clamp(0.0, 1.0)
    } else {
        1.0
    };
    let s = t * 4.0;
    let i = (s.floor() as usize).min(3);
    let f = s - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |p: f64, q: f64| (p + f * (q - p)).round() as u8;
    (mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Heatmap of row-major `values` (`ny` rows of `nx`), first row at the bottom.
pub fn heatmap(nx: usize, ny: usize, values: &[f64], title: &str) -> String {
    let (lo, hi) = finite_range(values.iter().copied());
    let cell = ((W - 2.0 * PAD) / nx as f64).min((H - 2.0 * PAD) / ny as f64);
    let mut out = String::new();
    let width = 2.0 * PAD + cell * nx as f64;
    let height = 2.0 * PAD + cell * ny as f64;
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.2} {height:.2}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for j in 0..ny {
        for i in 0..nx {
            let v = values[j * nx + i];
            let (r, g, b) = color((v - lo) / (hi - lo));
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="rgb({r},{g},{b})"/>"#,
                PAD + cell * i as f64,
                PAD + cell * (ny - 1 - j) as f64,
                cell + 0.01,
                cell + 0.01
            );
        }
    }
    let _ = writeln!(
        out,
        r#"<text x="{PAD}" y="{:.1}" font-size="14">{title} [{lo:.3e}, {hi:.3e}]</text>"#,
        PAD - 12.0
    );
    out.push_str("</svg>\n");
    out
}
