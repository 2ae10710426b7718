use super::field::{Field, Mask};
use super::grid::Grid3;
use crate::error::{MxError, Result};
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

const MAGIC: &str = "MXSF1";
const HEADER_LEN: usize = 64;

/// Write a field in the `.mxsf` format: a 64-byte text header
/// `MXSF1 nx ny nz h ox oy oz ncomp` (space padded) followed by
/// little-endian f64 arrays, component-major, z-fastest. Masked cells are
/// stored as NaN and recovered as inactive on read.
pub fn write_mxsf<P: AsRef<Path>>(path: P, field: &Field) -> Result<()> {
    let g = &field.grid;
    let header = format!(
        "{MAGIC} {} {} {} {} {} {} {} {}",
        g.n[0], g.n[1], g.n[2], g.h, g.origin[0], g.origin[1], g.origin[2], field.ncomp
    );
    if header.len() > HEADER_LEN {
        return Err(MxError::Format(format!(
            "header '{header}' exceeds {HEADER_LEN} bytes"
        )));
    }
    let mut buf = vec![b' '; HEADER_LEN];
    buf[..header.len()].copy_from_slice(header.as_bytes());
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    file.write_all(&buf)?;
    for v in &field.data {
        file.write_all(&v.to_le_bytes())?;
    }
    file.flush()?;
    Ok(())
}

/// Read a `.mxsf` field file. The grid margin is set by the caller's needs
/// downstream; here it is restored as 2 (the default stencil half-width).
pub fn read_mxsf<P: AsRef<Path>>(path: P) -> Result<Field> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut header = [0u8; HEADER_LEN];
    file.read_exact(&mut header)?;
    let text = std::str::from_utf8(&header)
        .map_err(|_| MxError::Format("header is not UTF-8".into()))?;
    let tok: Vec<&str> = text.split_whitespace().collect();
    if tok.len() < 9 || tok[0] != MAGIC {
        return Err(MxError::Format(format!("bad header '{}'", text.trim_end())));
    }
    let parse = |s: &str, what: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| MxError::Format(format!("bad {what} token '{s}'")))
    };
    let nx = parse(tok[1], "nx")? as usize;
    let ny = parse(tok[2], "ny")? as usize;
    let nz = parse(tok[3], "nz")? as usize;
    let h = parse(tok[4], "h")?;
    let ox = parse(tok[5], "ox")?;
    let oy = parse(tok[6], "oy")?;
    let oz = parse(tok[7], "oz")?;
    let ncomp = parse(tok[8], "ncomp")? as usize;

    let grid = Arc::new(Grid3::new([nx, ny, nz], h, [ox, oy, oz], 2)?);
    let len = grid.len();
    let mut data = vec![0.0f64; ncomp * len];
    let mut bytes = vec![0u8; 8 * data.len()];
    file.read_exact(&mut bytes)?;
    for (i, chunk) in bytes.chunks_exact(8).enumerate() {
        data[i] = f64::from_le_bytes(chunk.try_into().unwrap());
    }
    // A cell is active when no component stores the NaN sentinel there.
    let mut active = vec![true; len];
    for c in 0..ncomp {
        for i in 0..len {
            if data[c * len + i].is_nan() {
                active[i] = false;
            }
        }
    }
    let mask = Mask { grid: grid.clone(), active };
    Ok(Field { grid, ncomp, data, mask })
}
