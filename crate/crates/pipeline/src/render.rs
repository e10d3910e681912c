//! PNG export of a CSP: `log(1 + d)` through a yellow-orange-brown ramp.

use std::path::Path;

use bimoment_core::CspHistogram;
use image::{Rgb, RgbImage};

use crate::error::{PipelineError, Result};

/// ColorBrewer YlOrBr, light to dark.
const YLORBR: [[u8; 3]; 9] = [
    [0xff, 0xff, 0xe5],
    [0xff, 0xf7, 0xbc],
    [0xfe, 0xe3, 0x91],
    [0xfe, 0xc4, 0x4f],
    [0xfe, 0x99, 0x29],
    [0xec, 0x70, 0x14],
    [0xcc, 0x4c, 0x02],
    [0x99, 0x34, 0x04],
    [0x66, 0x25, 0x06],
];

/// Color for `s` in `[0, 1]`, interpolated linearly between ramp stops.
pub fn colormap(s: f64) -> [u8; 3] {
    let s = s.clamp(0.0, 1.0) * (YLORBR.len() - 1) as f64;
    let i = (s.floor() as usize).min(YLORBR.len() - 2);
    let f = s - i as f64;
    let (a, b) = (YLORBR[i], YLORBR[i + 1]);
    [0, 1, 2].map(|c| (a[c] as f64 + f * (b[c] as f64 - a[c] as f64)).round() as u8)
}

/// One pixel per bin, f1 to the right and f2 upwards. Empty bins take the
/// lightest color; the densest bin the darkest.
pub fn render_csp(hist: &CspHistogram<f64>) -> RgbImage {
    let [r1, r2] = hist.res;
    let logs: Vec<f64> = hist.density().iter().map(|d| d.ln_1p()).collect();
    let top = logs.iter().cloned().fold(0.0, f64::max);
    let scale = if top > 0.0 { 1.0 / top } else { 0.0 };
    RgbImage::from_fn(r1 as u32, r2 as u32, |x, y| {
        let row = r2 - 1 - y as usize;
        Rgb(colormap(logs[row * r1 + x as usize] * scale))
    })
}

pub fn write_csp_png(hist: &CspHistogram<f64>, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        crate::artifacts::ensure_dir(parent)?;
    }
    render_csp(hist)
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| PipelineError::io(path, std::io::Error::other(e)))
}
