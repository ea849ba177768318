//! Plain-text (`PBMAP v1`) and binary PGM encodings of integer and boolean
//! grids.
//!
//! Text layout:
//!
//! ```text
//! PBMAP v1 <label> <nx> <ny>
//! <row y=0: nx space-separated integers>
//! ...
//! <row y=ny-1>
//! ```
//!
//! Boolean maps are written as `0`/`1`.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::geometry::Grid;

pub const MAP_MAGIC: &str = "PBMAP v1";

pub fn write_map<W: Write>(out: &mut W, label: &str, grid: &Grid<u32>) -> Result<()> {
    if label.is_empty() || label.contains(char::is_whitespace) {
        return Err(Error::Protocol(format!("map label '{label}' must be one non-empty word")));
    }
    writeln!(out, "{MAP_MAGIC} {label} {} {}", grid.nx(), grid.ny())?;
    for row in grid.rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn write_bool_map<W: Write>(out: &mut W, label: &str, grid: &Grid<bool>) -> Result<()> {
    write_map(out, label, &bool_to_u32(grid))
}

pub fn bool_to_u32(grid: &Grid<bool>) -> Grid<u32> {
    Grid::from_vec(
        grid.nx(),
        grid.ny(),
        grid.as_slice().iter().map(|&b| b as u32).collect(),
    )
}

/// Reads one map, returning its label and grid.
pub fn read_map<R: BufRead>(input: R) -> Result<(String, Grid<u32>)> {
    let mut lines = input.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        message: "missing PBMAP header".into(),
    })?;
    let header = header?;
    let rest = header.strip_prefix(MAP_MAGIC).ok_or_else(|| Error::Parse {
        line: 1,
        message: format!("expected '{MAP_MAGIC}' header, found '{header}'"),
    })?;
    let fields: Vec<&str> = rest.split_whitespace().collect();
    let [label, nx, ny] = fields[..] else {
        return Err(Error::Parse {
            line: 1,
            message: "header must be 'PBMAP v1 <label> <nx> <ny>'".into(),
        });
    };
    let parse_dim = |s: &str| {
        s.parse::<usize>().map_err(|e| Error::Parse {
            line: 1,
            message: format!("bad dimension '{s}': {e}"),
        })
    };
    let (nx, ny) = (parse_dim(nx)?, parse_dim(ny)?);
    let mut cells = Vec::with_capacity(nx * ny);
    for y in 0..ny {
        let (idx, line) = lines.next().ok_or_else(|| Error::Parse {
            line: y + 2,
            message: format!("missing row {y} of {ny}"),
        })?;
        let line = line?;
        let row: Vec<u32> = line
            .split_whitespace()
            .map(|t| {
                t.parse::<u32>().map_err(|e| Error::Parse {
                    line: idx + 1,
                    message: format!("bad value '{t}': {e}"),
                })
            })
            .collect::<Result<_>>()?;
        if row.len() != nx {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("row has {} values, expected {nx}", row.len()),
            });
        }
        cells.extend(row);
    }
    Ok((label.to_string(), Grid::from_vec(nx, ny, cells)))
}

/// Binary PGM (P5), one cell per pixel, row `y = 0` first. Values are scaled
/// linearly so that `max_value` maps to 255.
pub fn write_pgm<W: Write>(out: &mut W, grid: &Grid<u32>, max_value: u32) -> Result<()> {
    write!(out, "P5\n{} {}\n255\n", grid.nx(), grid.ny())?;
    let max = max_value.max(1) as u64;
    let bytes: Vec<u8> = grid
        .as_slice()
        .iter()
        .map(|&v| ((v.min(max_value) as u64 * 255) / max) as u8)
        .collect();
    out.write_all(&bytes)?;
    Ok(())
}

pub fn write_bool_pgm<W: Write>(out: &mut W, grid: &Grid<bool>) -> Result<()> {
    write_pgm(out, &bool_to_u32(grid), 1)
}
