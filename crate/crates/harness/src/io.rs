//! Artifact files: JSON, 16-bit depth PNG with a sidecar, CSV tables.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use scenepose::render::{CameraModel, DepthImage};

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    ensure_parent(path)?;
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(f), value)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_reader(BufReader::new(f)).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    r.deserialize().map(|row| row.map_err(Into::into)).collect()
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

/// Metadata stored next to a depth PNG.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthSidecar {
    pub width: usize,
    pub height: usize,
    /// Meters per PNG unit.
    pub scale: f64,
    pub unit: String,
    pub camera: Option<CameraModel>,
}

pub fn sidecar_path(png: &Path) -> PathBuf {
    png.with_extension("json")
}

/// Writes depth as 16-bit grayscale millimeters plus a JSON sidecar.
/// Depths beyond the 16-bit range saturate.
pub fn write_depth_png(path: &Path, img: &DepthImage, camera: Option<&CameraModel>) -> Result<()> {
    ensure_parent(path)?;
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut enc = png::Encoder::new(BufWriter::new(f), img.width as u32, img.height as u32);
    enc.set_color(png::ColorType::Grayscale);
    enc.set_depth(png::BitDepth::Sixteen);
    let mut w = enc.write_header()?;
    let mut bytes = Vec::with_capacity(img.depth.len() * 2);
    for d in &img.depth {
        let mm = (d * 1000.0).round().clamp(0.0, u16::MAX as f64) as u16;
        bytes.extend_from_slice(&mm.to_be_bytes());
    }
    w.write_image_data(&bytes)?;
    w.finish()?;
    let side = DepthSidecar { width: img.width, height: img.height, scale: 0.001, unit: "mm".into(), camera: camera.cloned() };
    write_json(&sidecar_path(path), &side)
}

pub fn read_depth_png(path: &Path) -> Result<DepthImage> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let dec = png::Decoder::new(BufReader::new(f));
    let mut reader = dec.read_info()?;
    let mut buf = vec![0; reader.output_buffer_size().context("image too large")?];
    let info = reader.next_frame(&mut buf)?;
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Sixteen {
        bail!("{}: expected 16-bit grayscale", path.display());
    }
    let scale = match read_json::<DepthSidecar>(&sidecar_path(path)) {
        Ok(s) => s.scale,
        Err(_) => 0.001,
    };
    let depth = buf[..info.buffer_size()].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 * scale).collect();
    Ok(DepthImage::from_vec(info.width as usize, info.height as usize, depth)?)
}
