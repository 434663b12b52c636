//! Frame sources: directories of numbered images, or raw planar luma with a
//! JSON sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::LumaFrame;
use crate::error::{Error, Result};

const IMAGE_EXTENSIONS: &[&str] = &["png", "jpg", "jpeg", "bmp", "pgm", "ppm"];

/// Sidecar for a raw luma file: `{"width":W,"height":H,"num_frames":T}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawLumaDescriptor {
    pub width: usize,
    pub height: usize,
    pub num_frames: usize,
}

/// Loads a directory of images or a raw luma file, depending on `path`.
pub fn load_frames(path: &Path) -> Result<Vec<LumaFrame>> {
    if path.is_dir() {
        load_image_dir(path)
    } else {
        load_raw_luma(path, None)
    }
}

/// Loads every image in `dir`, ordered by the first integer in each file
/// name (ties broken by name), converted to BT.601 luma.
pub fn load_image_dir(dir: &Path) -> Result<Vec<LumaFrame>> {
    let mut entries: Vec<(u64, PathBuf)> = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        if !ext.is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.as_str())) {
            continue;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
        let number = stem
            .split(|c: char| !c.is_ascii_digit())
            .find(|s| !s.is_empty())
            .and_then(|s| s.parse().ok())
            .unwrap_or(u64::MAX);
        entries.push((number, path));
    }
    entries.sort();
    if entries.is_empty() {
        return Err(Error::EmptyVideo);
    }
    entries
        .iter()
        .map(|(_, path)| {
            let img = image::open(path).map_err(|source| Error::Image {
                path: path.clone(),
                source,
            })?;
            let rgb = img.to_rgb8();
            LumaFrame::from_rgb(rgb.width() as usize, rgb.height() as usize, rgb.as_raw())
        })
        .collect()
}

/// Reads `num_frames` consecutive `width * height` luma planes.
///
/// Without an explicit descriptor the sidecar is looked up at `<file>.json`,
/// then at the same path with its extension replaced by `.json`.
pub fn load_raw_luma(path: &Path, descriptor: Option<RawLumaDescriptor>) -> Result<Vec<LumaFrame>> {
    let desc = match descriptor {
        Some(d) => d,
        None => read_sidecar(path)?,
    };
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let plane = desc.width * desc.height;
    if desc.num_frames == 0 {
        return Err(Error::EmptyVideo);
    }
    if plane == 0 || bytes.len() < plane * desc.num_frames {
        return Err(Error::InvalidArgument(format!(
            "{}: {} bytes cannot hold {} frames of {}x{}",
            path.display(),
            bytes.len(),
            desc.num_frames,
            desc.width,
            desc.height
        )));
    }
    bytes
        .chunks_exact(plane)
        .take(desc.num_frames)
        .map(|chunk| LumaFrame::new(desc.width, desc.height, chunk.to_vec()))
        .collect()
}

fn read_sidecar(path: &Path) -> Result<RawLumaDescriptor> {
    let mut appended = path.as_os_str().to_owned();
    appended.push(".json");
    let candidates = [PathBuf::from(appended), path.with_extension("json")];
    for candidate in &candidates {
        if candidate.is_file() && candidate != path {
            let text = fs::read_to_string(candidate).map_err(|e| Error::io(candidate, e))?;
            return serde_json::from_str(&text).map_err(|e| Error::Parse {
                path: candidate.display().to_string(),
                message: e.to_string(),
            });
        }
    }
    Err(Error::InvalidArgument(format!(
        "no sidecar descriptor found for {}",
        path.display()
    )))
}
