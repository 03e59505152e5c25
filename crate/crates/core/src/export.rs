//! Export of per-pixel maps for inspection: CSV grids and normalized 8-bit
//! PGM heat maps (0 = black, map maximum = white).

use std::io::Write;

use crate::error::Result;
use crate::temporal::{ScalarFieldMap, WeightMap};

/// Raster grid of values, one CSV line per image row.
pub fn write_grid_csv<W: Write>(width: usize, values: &[f64], mut out: W) -> Result<()> {
    for row in values.chunks(width.max(1)) {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// Binary PGM scaled so the largest value maps to 255. An all-zero map is
/// written black.
pub fn write_heat_pgm<W: Write>(width: usize, height: usize, values: &[f64], mut out: W) -> Result<()> {
    let max = values.iter().copied().fold(0.0f64, f64::max);
    write!(out, "P5\n{width} {height}\n255\n")?;
    let pixels: Vec<u8> = values
        .iter()
        .map(|&v| if max > 0.0 { (v / max * 255.0).round().clamp(0.0, 255.0) as u8 } else { 0 })
        .collect();
    out.write_all(&pixels)?;
    Ok(())
}

pub fn map_to_csv<W: Write>(map: &ScalarFieldMap, out: W) -> Result<()> {
    write_grid_csv(map.width(), map.values(), out)
}

pub fn map_to_pgm<W: Write>(map: &ScalarFieldMap, out: W) -> Result<()> {
    write_heat_pgm(map.width(), map.height(), map.values(), out)
}

pub fn weights_to_csv<W: Write>(map: &WeightMap, out: W) -> Result<()> {
    write_grid_csv(map.width(), map.weights(), out)
}

pub fn weights_to_pgm<W: Write>(map: &WeightMap, out: W) -> Result<()> {
    write_heat_pgm(map.width(), map.height(), map.weights(), out)
}
