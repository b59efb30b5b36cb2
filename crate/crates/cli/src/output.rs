//! CSV, JSON and SVG writers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// Numbers are written with 17 significant digits so they round-trip.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root)
            .map_err(|e| CliError::Config(format!("cannot create {}: {e}", root.display())))?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn write(&self, name: &str, text: &str) -> Result<(), CliError> {
        let p = self.path(name);
        fs::write(&p, text).map_err(|e| CliError::Config(format!("cannot write {}: {e}", p.display())))
    }

    pub fn json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Config(format!("cannot serialize {name}: {e}")))?;
        text.push('\n');
        self.write(name, &text)
    }

    /// Writes a header and rows of optional numbers; `None` becomes an
    /// empty field.
    pub fn csv(&self, name: &str, header: &[String], rows: &[Vec<Option<f64>>]) -> Result<(), CliError> {
        let mut text = header.join(",");
        text.push('\n');
        for row in rows {
            let fields: Vec<String> = row.iter().map(|v| v.map(num).unwrap_or_default()).collect();
            text.push_str(&fields.join(","));
            text.push('\n');
        }
        self.write(name, &text)
    }

    pub fn svg(&self, name: &str, plot: &LinePlot) -> Result<(), CliError> {
        self.write(name, &plot.render())
    }
}

/// Rows of t followed by one column per mode.
pub fn mode_rows(t: &[f64], modes: &[Vec<f64>]) -> Vec<Vec<Option<f64>>> {
    (0..t.len())
        .map(|i| {
            std::iter::once(Some(t[i]))
                .chain(modes.iter().map(|m| Some(m[i])))
                .collect()
        })
        .collect()
}

pub fn mode_header(n: usize) -> Vec<String> {
    std::iter::once("t".to_string())
        .chain((1..=n).map(|k| format!("u_{k}")))
        .collect()
}

/// Minimal line chart.
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub series: Vec<(String, Vec<f64>, Vec<f64>)>,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

impl LinePlot {
    pub fn render(&self) -> String {
        let (w, h, pad) = (640.0, 400.0, 50.0);
        let pts = self.series.iter().flat_map(|(_, x, y)| x.iter().zip(y));
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (x, y) in pts {
            x0 = x0.min(*x);
            x1 = x1.max(*x);
            y0 = y0.min(*y);
            y1 = y1.max(*y);
        }
        if !(x1 > x0) {
            x1 = x0 + 1.0;
        }
        if !(y1 > y0) {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
        let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
        );
        let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<rect x="{pad}" y="{pad}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            w - 2.0 * pad,
            h - 2.0 * pad
        );
        let _ = writeln!(s, r#"<text x="{}" y="30" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, self.title);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#, w / 2.0, h - 15.0, self.x_label);
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="10">{y1:.4e}</text>"#, 5.0, pad);
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="10">{y0:.4e}</text>"#, 5.0, h - pad);
        for (k, (label, x, y)) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let path: Vec<String> = x
                .iter()
                .zip(y)
                .map(|(a, b)| format!("{:.2},{:.2}", sx(*a), sy(*b)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                path.join(" ")
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" font-size="11" fill="{color}">{label}</text>"#,
                w - pad - 120.0,
                pad + 15.0 * (k + 1) as f64
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn plot_is_closed_svg() {
        let p = LinePlot {
            title: "u".into(),
            x_label: "t".into(),
            series: vec![("a".into(), vec![0.0, 1.0], vec![1.0, 1.0])],
        };
        let s = p.render();
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert!(s.contains("polyline"));
    }
}
