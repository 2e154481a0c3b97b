//! Output writers. JSON is pretty-printed with a trailing newline and floats
//! use the shortest round-trip form, so reruns are byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Collects the files a run writes, with their hashes.
#[derive(Debug, Default)]
pub struct OutputDir {
    root: PathBuf,
    pub written: Vec<(String, String)>,
}

impl OutputDir {
    pub fn create(root: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(root.join("plotdata"))?;
        Ok(OutputDir { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<String> {
        fs::write(self.root.join(name), bytes)?;
        let hash = sha256_hex(bytes);
        self.written.retain(|(n, _)| n != name);
        self.written.push((name.to_string(), hash.clone()));
        Ok(hash)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<String> {
        let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }
}

/// `rank,node,value` rows for the first `top` entries of `order`.
pub fn ranking_csv(order: &[usize], values: &[f64], top: usize) -> String {
    let mut out = String::from("rank,node,value\n");
    for (rank, &v) in order.iter().take(top).enumerate() {
        let _ = writeln!(out, "{},{v},{}", rank + 1, values[v]);
    }
    out
}

/// `node,value` bar data for the first `top` entries of `order`.
pub fn bar_csv(order: &[usize], values: &[f64], top: usize) -> String {
    let mut out = String::from("node,value\n");
    for &v in order.iter().take(top) {
        let _ = writeln!(out, "{v},{}", values[v]);
    }
    out
}

/// A self-contained SVG bar chart of the first `top` entries of `order`.
pub fn bar_svg(title: &str, order: &[usize], values: &[f64], top: usize) -> String {
    let bars: Vec<(usize, f64)> = order.iter().take(top).map(|&v| (v, values[v])).collect();
    let (width, height, margin) = (60.0 + 48.0 * bars.len() as f64, 260.0, 40.0);
    let peak = bars.iter().map(|b| b.1).fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(svg, r#"<text x="{margin}" y="20" font-family="sans-serif" font-size="14">{}</text>"#, escape(title));
    let plot_h = height - 2.0 * margin - 10.0;
    for (idx, (node, value)) in bars.iter().enumerate() {
        let h = plot_h * value / peak;
        let x = margin + 48.0 * idx as f64;
        let y = height - margin - h;
        let _ = writeln!(svg, r##"<rect x="{x}" y="{y:.2}" width="36" height="{h:.2}" fill="#4a6fa5"><title>{value}</title></rect>"##);
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">{node}</text>"#,
            x + 18.0,
            height - margin + 14.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Node ids by decreasing value, ties to the smallest id.
pub fn order_desc(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}
