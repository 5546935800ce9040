//! CSV and SVG writers.
//!
//! Floats in CSV files are written as `{:.16e}` (17 significant digits), which
//! parses back to the identical `f64`, so reading and rewriting a file
//! reproduces it byte for byte.

use std::fmt::Write as _;
use std::io::Write;

use ddps::simplex::{mixture_log_pdf, DirichletMixture};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Header `f1..fm` followed by one row per objective vector.
pub fn write_front_csv<W: Write>(front: &[Vec<f64>], m: usize, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record((1..=m).map(|i| format!("f{i}")))?;
    for row in front {
        w.write_record(row.iter().map(|v| fmt_f64(*v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_front_csv<R: std::io::Read>(input: R) -> Result<Vec<Vec<f64>>, String> {
    let mut r = csv::Reader::from_reader(input);
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| e.to_string())?;
            rec.iter()
                .map(|f| f.parse::<f64>().map_err(|e| format!("{f}: {e}")))
                .collect()
        })
        .collect()
}

const PANEL: f64 = 320.0;
const MARGIN: f64 = 44.0;

struct Axis {
    lo: f64,
    hi: f64,
}

impl Axis {
    fn fit<'a>(values: impl Iterator<Item = &'a f64>) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite()) {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        let pad = ((hi - lo) * 0.05).max(1e-9);
        Self {
            lo: lo - pad,
            hi: hi + pad,
        }
    }

    fn map(&self, v: f64, len: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo) * len
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Scatter of the learned front over the true front. Three objectives are
/// drawn as the three pairwise projections.
pub fn front_svg(title: &str, approx: &[Vec<f64>], truth: &[Vec<f64>], m: usize) -> String {
    let pairs: Vec<(usize, usize)> = if m == 2 {
        vec![(0, 1)]
    } else {
        vec![(0, 1), (0, 2), (1, 2)]
    };
    let width = pairs.len() as f64 * (PANEL + MARGIN) + MARGIN;
    let height = PANEL + 2.0 * MARGIN;
    let mut s = String::new();
    let _ = write!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">
<rect width="100%" height="100%" fill="white"/>
<text x="{MARGIN}" y="20" font-family="sans-serif" font-size="14">{}</text>
"#,
        escape(title)
    );
    for (p, &(a, b)) in pairs.iter().enumerate() {
        let x0 = MARGIN + p as f64 * (PANEL + MARGIN);
        let y0 = MARGIN;
        let xs = Axis::fit(approx.iter().chain(truth).map(|r| &r[a]));
        let ys = Axis::fit(approx.iter().chain(truth).map(|r| &r[b]));
        let _ = writeln!(
            s,
            r#"<g transform="translate({x0},{y0})"><rect width="{PANEL}" height="{PANEL}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">f{}</text><text x="-8" y="{}" font-family="sans-serif" font-size="12" text-anchor="end">f{}</text>"#,
            PANEL / 2.0,
            PANEL + 18.0,
            a + 1,
            PANEL / 2.0,
            b + 1
        );
        for (pts, colour, radius) in [(truth, "#9a9a9a", 1.2), (approx, "#d62728", 2.4)] {
            for r in pts {
                if !(r[a].is_finite() && r[b].is_finite()) {
                    continue;
                }
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="{radius}" fill="{colour}"/>"#,
                    xs.map(r[a], PANEL),
                    PANEL - ys.map(r[b], PANEL)
                );
            }
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}

/// White to dark blue.
fn shade(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        lerp(255.0, 8.0),
        lerp(255.0, 48.0),
        lerp(255.0, 107.0)
    )
}

/// Density of `mix` on the simplex: a strip for two objectives, a triangle of
/// lattice cells for three. Darker cells carry more probability.
pub fn density_svg(title: &str, mix: &DirichletMixture) -> String {
    let m = mix.dim();
    let side = 360.0;
    let height = if m == 2 {
        120.0
    } else {
        side * 0.866 + 2.0 * MARGIN + 20.0
    };
    let width = side + 2.0 * MARGIN;
    let mut s = String::new();
    let _ = write!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">
<rect width="100%" height="100%" fill="white"/>
<text x="{MARGIN}" y="20" font-family="sans-serif" font-size="14">{}</text>
"#,
        escape(title)
    );
    let density = |p: &[f64]| mixture_log_pdf(p, mix).map(f64::exp).unwrap_or(0.0);
    if m == 2 {
        let cells = 120;
        let vals: Vec<f64> = (0..cells)
            .map(|i| {
                let t = (i as f64 + 0.5) / cells as f64;
                density(&[t, 1.0 - t])
            })
            .collect();
        let top = vals
            .iter()
            .copied()
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let w = side / cells as f64;
        for (i, v) in vals.iter().enumerate() {
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="40" width="{:.2}" height="40" fill="{}"/>"#,
                MARGIN + i as f64 * w,
                w + 0.1,
                shade(v / top)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{MARGIN}" y="100" font-family="sans-serif" font-size="12">r1 = 0</text><text x="{}" y="100" font-family="sans-serif" font-size="12" text-anchor="end">r1 = 1</text>"#,
            MARGIN + side
        );
    } else if m == 3 {
        let n = 40usize;
        // barycentric (a, b, c) to screen; corner r1 at bottom left, r2 bottom right, r3 top
        let h = side * 0.866;
        let to_xy = |_a: f64, b: f64, c: f64| {
            (MARGIN + side * (b + 0.5 * c), MARGIN + 20.0 + h * (1.0 - c))
        };
        let mut cells = Vec::new();
        for i in 0..n {
            for j in 0..(n - i) {
                let k = n - 1 - i - j;
                let tri = |pts: [(usize, usize, usize); 3]| {
                    let c: Vec<f64> = (0..3)
                        .map(|d| {
                            pts.iter()
                                .map(|p| [p.0, p.1, p.2][d] as f64 / n as f64)
                                .sum::<f64>()
                                / 3.0
                        })
                        .collect();
                    (pts, density(&c))
                };
                cells.push(tri([(i + 1, j, k), (i, j + 1, k), (i, j, k + 1)]));
                if k > 0 {
                    cells.push(tri([(i + 1, j, k), (i, j + 1, k), (i + 1, j + 1, k - 1)]));
                }
            }
        }
        let top = cells
            .iter()
            .map(|c| c.1)
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        for (pts, v) in &cells {
            let pts: Vec<String> = pts
                .iter()
                .map(|&(a, b, c)| {
                    let (x, y) = to_xy(
                        a as f64 / n as f64,
                        b as f64 / n as f64,
                        c as f64 / n as f64,
                    );
                    format!("{x:.2},{y:.2}")
                })
                .collect();
            let fill = shade(v / top);
            let _ = writeln!(
                s,
                r#"<polygon points="{}" fill="{fill}" stroke="{fill}" stroke-width="0.3"/>"#,
                pts.join(" ")
            );
        }
        for (label, (a, b, c)) in [
            ("r1", (1.0, 0.0, 0.0)),
            ("r2", (0.0, 1.0, 0.0)),
            ("r3", (0.0, 0.0, 1.0)),
        ] {
            let (x, y) = to_xy(a, b, c);
            let _ = writeln!(
                s,
                r#"<text x="{x:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{label}</text>"#,
                if c > 0.5 { y - 6.0 } else { y + 16.0 }
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
