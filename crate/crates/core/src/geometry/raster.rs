//! Binary P5 raster plus JSON sidecar metadata for cell sets.
//!
//! The image is `counts[0]` pixels wide. Each vertical slice is drawn with
//! the highest row first; in three dimensions the slices for successive
//! values of the second horizontal coordinate are stacked top to bottom.
//! Members are 255, non-members 0.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::cellset::{CellSet, Closure};
use super::domain::{CylinderDomain, HBox};
use super::grid::GridDescriptor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterMetadata {
    pub h: f64,
    pub counts: Vec<usize>,
    pub origin: Vec<f64>,
    pub omega_o: Vec<HBox>,
    pub u: Vec<f64>,
    pub below_member: bool,
    pub layout: String,
}

fn image_shape(g: &GridDescriptor) -> (usize, usize) {
    let slices = if g.dim() == 3 { g.counts()[1] } else { 1 };
    (g.counts()[0], g.rows() * slices)
}

fn cell_for_pixel(g: &GridDescriptor, x: usize, y: usize) -> usize {
    let rows = g.rows();
    let slice = y / rows;
    let r = rows - 1 - y % rows;
    let c = if g.dim() == 3 { [x as i64, slice as i64, r as i64] } else { [x as i64, r as i64, 0] };
    g.index(&c).expect("pixel maps into the window")
}

pub fn encode_p5(set: &CellSet) -> Vec<u8> {
    let g = set.grid();
    let (w, hgt) = image_shape(g);
    let mut out = format!("P5\n{w} {hgt}\n255\n").into_bytes();
    out.reserve(w * hgt);
    for y in 0..hgt {
        for x in 0..w {
            out.push(if set.get(cell_for_pixel(g, x, y)) { 255 } else { 0 });
        }
    }
    out
}

pub fn metadata(set: &CellSet, domain: &CylinderDomain) -> RasterMetadata {
    let g = set.grid();
    RasterMetadata {
        h: g.h(),
        counts: g.counts().to_vec(),
        origin: g.origin().to_vec(),
        omega_o: domain.boxes().to_vec(),
        u: set.closure().heights.clone(),
        below_member: set.closure().below_member,
        layout: "p5; width=counts[0]; highest row first; 3d slices stacked by counts[1]".into(),
    }
}

fn parse_header(bytes: &[u8]) -> Result<(usize, usize, usize)> {
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Io("truncated P5 header".into()));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).to_string());
    }
    if fields[0] != "P5" {
        return Err(Error::Io(format!("not a P5 raster (magic {:?})", fields[0])));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|_| Error::Io(format!("bad header field {s:?}")));
    let w = parse(&fields[1])?;
    let h = parse(&fields[2])?;
    let maxval = parse(&fields[3])?;
    if maxval != 255 {
        return Err(Error::Io("only 8-bit rasters are supported".into()));
    }
    Ok((w, h, pos + 1))
}

/// Rebuild a cell set from a raster and its metadata.
pub fn decode_p5(bytes: &[u8], meta: &RasterMetadata) -> Result<(CellSet, CylinderDomain)> {
    let grid = Arc::new(GridDescriptor::new(meta.h, meta.counts.clone(), meta.origin.clone())?);
    let domain = CylinderDomain::new(meta.omega_o.clone())?;
    let (w, hgt, offset) = parse_header(bytes)?;
    if (w, hgt) != image_shape(&grid) {
        return Err(Error::Io(format!("raster is {w}x{hgt}, metadata expects {:?}", image_shape(&grid))));
    }
    let data = &bytes[offset..];
    if data.len() < w * hgt {
        return Err(Error::Io("raster data truncated".into()));
    }
    let mut bits = vec![false; grid.len()];
    for y in 0..hgt {
        for x in 0..w {
            bits[cell_for_pixel(&grid, x, y)] = data[y * w + x] >= 128;
        }
    }
    let free = Arc::new(domain.free_columns(&grid));
    let set = CellSet::from_parts(grid, free, bits, Closure { heights: meta.u.clone(), below_member: meta.below_member })?;
    Ok((set, domain))
}

pub fn write_raster(set: &CellSet, domain: &CylinderDomain, raster: &Path, sidecar: &Path) -> Result<()> {
    std::fs::File::create(raster)?.write_all(&encode_p5(set))?;
    let mut text = serde_json::to_string_pretty(&metadata(set, domain))?;
    text.push('\n');
    std::fs::write(sidecar, text)?;
    Ok(())
}

pub fn read_raster(raster: &Path, sidecar: &Path) -> Result<(CellSet, CylinderDomain)> {
    let bytes = std::fs::read(raster)?;
    let meta: RasterMetadata = serde_json::from_str(&std::fs::read_to_string(sidecar)?)?;
    decode_p5(&bytes, &meta)
}
