//! Floor-plan inputs: a raster mask (PNG or PGM, white = free) and its JSON
//! annotation sidecar:
//!
//! ```json
//! { "scale_m_per_px": 0.1, "floor": 0,
//!   "labels": [{"text": "Room 101", "px": [40, 12]}],
//!   "portals": [{"kind": "door", "px": [40, 30]}],
//!   "exterior_hint": [[0, 0], [200, 0], [200, 80], [0, 80]] }
//! ```
//!
//! Pixel coordinates are column/row indices, origin top left.

use std::path::Path;

use image::{GrayImage, Luma};
use serde::{Deserialize, Serialize};
use waysign_core::extract::{AnnotationSidecar, FloorMask, SidecarLabel, SidecarPortal};
use waysign_core::raster::Bitmap;
use waysign_core::PortalKind;

use crate::error::{self, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SidecarFile {
    pub scale_m_per_px: f64,
    #[serde(default)]
    pub floor: i32,
    #[serde(default)]
    pub labels: Vec<LabelEntry>,
    #[serde(default)]
    pub portals: Vec<PortalEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exterior_hint: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelEntry {
    pub text: String,
    pub px: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortalEntry {
    pub kind: String,
    pub px: [f64; 2],
}

impl SidecarFile {
    pub fn to_sidecar(&self) -> Result<AnnotationSidecar> {
        let mut portals = Vec::with_capacity(self.portals.len());
        for (i, p) in self.portals.iter().enumerate() {
            let kind = PortalKind::parse(&p.kind)
                .ok_or_else(|| Error::format(format!("portals[{i}]"), format!("unknown portal kind `{}`", p.kind)))?;
            portals.push(SidecarPortal {
                kind,
                px: (p.px[0], p.px[1]),
            });
        }
        Ok(AnnotationSidecar {
            labels: self
                .labels
                .iter()
                .map(|l| SidecarLabel {
                    text: l.text.clone(),
                    px: (l.px[0], l.px[1]),
                })
                .collect(),
            portals,
            exterior_hint: self.exterior_hint.as_ref().map(|h| h.iter().map(|&[x, y]| (x, y)).collect()),
        })
    }

    pub fn from_sidecar(s: &AnnotationSidecar, scale: f64, floor: i32) -> Self {
        Self {
            scale_m_per_px: scale,
            floor,
            labels: s
                .labels
                .iter()
                .map(|l| LabelEntry {
                    text: l.text.clone(),
                    px: [l.px.0, l.px.1],
                })
                .collect(),
            portals: s
                .portals
                .iter()
                .map(|p| PortalEntry {
                    kind: p.kind.as_str().to_owned(),
                    px: [p.px.0, p.px.1],
                })
                .collect(),
            exterior_hint: s.exterior_hint.as_ref().map(|h| h.iter().map(|&(x, y)| [x, y]).collect()),
        }
    }
}

pub fn read_sidecar(path: &Path) -> Result<SidecarFile> {
    serde_json::from_str(&error::read_to_string(path)?).map_err(|e| Error::format(path.display().to_string(), e))
}

pub fn write_sidecar(path: &Path, s: &SidecarFile) -> Result<()> {
    let mut text = serde_json::to_string_pretty(s).expect("sidecar serializes");
    text.push('\n');
    error::write(path, text)
}

/// Pixels at or above mid-grey are free.
pub fn bitmap_from_gray(img: &GrayImage) -> Bitmap {
    Bitmap::from_fn(img.width() as usize, img.height() as usize, |x, y| {
        img.get_pixel(x as u32, y as u32).0[0] >= 128
    })
}

pub fn gray_from_bitmap(b: &Bitmap) -> GrayImage {
    GrayImage::from_fn(b.width() as u32, b.height() as u32, |x, y| {
        Luma([if b.get(x as usize, y as usize) { 255 } else { 0 }])
    })
}

/// Reads a PNG or PGM mask; the format comes from the file contents.
pub fn read_mask(path: &Path) -> Result<Bitmap> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let img = image::load_from_memory(&bytes).map_err(|e| Error::format(path.display().to_string(), e))?;
    Ok(bitmap_from_gray(&img.to_luma8()))
}

/// Writes PNG, or binary PGM when the extension is `.pgm`.
pub fn write_mask(path: &Path, b: &Bitmap) -> Result<()> {
    let img = gray_from_bitmap(b);
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some("pgm") => image::ImageFormat::Pnm,
        _ => image::ImageFormat::Png,
    };
    let mut buf = std::io::Cursor::new(Vec::new());
    if format == image::ImageFormat::Pnm {
        let enc = image::codecs::pnm::PnmEncoder::new(&mut buf).with_subtype(image::codecs::pnm::PnmSubtype::Graymap(
            image::codecs::pnm::SampleEncoding::Binary,
        ));
        img.write_with_encoder(enc).map_err(|e| Error::format(path.display().to_string(), e))?;
    } else {
        img.write_to(&mut buf, format).map_err(|e| Error::format(path.display().to_string(), e))?;
    }
    error::write(path, buf.into_inner())
}

pub fn load_floor(mask: &Path, sidecar: &Path) -> Result<(FloorMask, AnnotationSidecar)> {
    let file = read_sidecar(sidecar)?;
    let free = read_mask(mask)?;
    let fm = FloorMask::new(free, file.scale_m_per_px, file.floor)?;
    let sc = file.to_sidecar()?;
    sc.validate(&fm)?;
    Ok((fm, sc))
}
