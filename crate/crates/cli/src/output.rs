//! Deterministic artifact writers: fixed-precision CSV and best-effort
//! SVG plots.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// Every numeric field is rendered with 17 significant decimal digits,
/// which round-trips f64 exactly and keeps outputs byte-stable.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)
            .with_context(|| format!("cannot create output directory {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.path(name);
        std::fs::write(&path, contents)
            .with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}

/// Minimal polyline plot of one or two traces against a shared x-axis.
pub fn svg_plot(
    title: &str,
    x: &[f64],
    traces: &[(&str, &[f64], &str)],
) -> String {
    let (w, h, ml, mb) = (720.0, 420.0, 60.0, 40.0);
    let (pw, ph) = (w - ml - 20.0, h - mb - 30.0);
    let xmin = x.iter().copied().fold(f64::INFINITY, f64::min);
    let xmax = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ymax = traces
        .iter()
        .flat_map(|(_, ys, _)| ys.iter().copied())
        .fold(0.0f64, f64::max)
        .max(1e-30);
    let sx = |v: f64| ml + (v - xmin) / (xmax - xmin).max(1e-30) * pw;
    let sy = |v: f64| h - mb - v / ymax * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(
        out,
        "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/><text x=\"{}\" y=\"20\" font-size=\"14\" text-anchor=\"middle\">{title}</text>",
        w / 2.0
    );
    let _ = writeln!(
        out,
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/><line x1=\"{ml}\" y1=\"{}\" x2=\"{ml}\" y2=\"30\" stroke=\"black\"/>",
        h - mb,
        w - 20.0,
        h - mb,
        h - mb
    );
    let _ = writeln!(
        out,
        "<text x=\"{ml}\" y=\"{}\" font-size=\"11\">{:.3}</text><text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{:.3}</text><text x=\"{}\" y=\"40\" font-size=\"11\">{:.3}</text>",
        h - mb + 16.0,
        xmin,
        w - 20.0,
        h - mb + 16.0,
        xmax,
        ml + 4.0,
        ymax
    );
    for (i, (label, ys, color)) in traces.iter().enumerate() {
        let points: Vec<String> = x
            .iter()
            .zip(ys.iter())
            .map(|(&xv, &yv)| format!("{:.2},{:.2}", sx(xv), sy(yv)))
            .collect();
        let _ = writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
            points.join(" ")
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{color}\">{label}</text>",
            w - 160.0,
            46.0 + 16.0 * i as f64
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_carry_17_significant_digits() {
        assert_eq!(num(0.25), "2.5000000000000000e-1");
        assert_eq!(num(-1.0 / 3.0), "-3.3333333333333331e-1");
        let x = 0.1 + 0.2;
        let rendered = num(x);
        assert_eq!(rendered.parse::<f64>().unwrap(), x);
    }
}
