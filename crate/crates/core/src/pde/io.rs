//! PSSF field files. Little-endian layout:
//!
//! ```text
//! "PSSF" | version u32 | flags u32 (bit 0 periodic, bit 1 u_t rows) |
//! stencil order u32 | nx u64 | S u64 | x_min f64 | x_max f64 | S times f64 |
//! S rows of u | S rows of u_t (if flagged)
//! ```
//!
//! Rows hold the grid's stored nodes (nx, or nx + 1 when bounded).

use std::io::{Read, Write};

use super::{FieldError, Grid1D, Provenance, SolutionField};

pub const PSSF_MAGIC: &[u8; 4] = b"PSSF";
pub const PSSF_VERSION: u32 = 1;

pub fn write_pssf<W: Write>(field: &SolutionField, mut w: W) -> Result<(), FieldError> {
    let order = match &field.provenance {
        Provenance::Numeric { stencil_order, .. } => *stencil_order as u32,
        Provenance::Exact { .. } => 4,
    };
    let flags = u32::from(field.grid.periodic) | (u32::from(field.ut.is_some()) << 1);
    w.write_all(PSSF_MAGIC)?;
    for v in [PSSF_VERSION, flags, order] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&(field.grid.nx as u64).to_le_bytes())?;
    w.write_all(&(field.times.len() as u64).to_le_bytes())?;
    let rows = field.u.iter().chain(field.ut.iter().flatten());
    let values = [field.grid.x_min, field.grid.x_max].into_iter().chain(field.times.iter().copied());
    for v in values.chain(rows.flatten().copied()) {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn take<const N: usize>(r: &mut impl Read) -> Result<[u8; N], FieldError> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|e| FieldError::Format(format!("truncated file ({e})")))?;
    Ok(b)
}

fn take_f64s(r: &mut impl Read, n: usize) -> Result<Vec<f64>, FieldError> {
    (0..n).map(|_| take::<8>(r).map(f64::from_le_bytes)).collect()
}

/// Reads a field back as a numeric field (closed forms are not stored).
pub fn read_pssf<R: Read>(mut r: R) -> Result<SolutionField, FieldError> {
    if &take::<4>(&mut r)? != PSSF_MAGIC {
        return Err(FieldError::Format("bad magic".into()));
    }
    let version = u32::from_le_bytes(take(&mut r)?);
    if version != PSSF_VERSION {
        return Err(FieldError::Format(format!("unsupported version {version}")));
    }
    let flags = u32::from_le_bytes(take(&mut r)?);
    let order = u32::from_le_bytes(take(&mut r)?) as usize;
    let nx = u64::from_le_bytes(take(&mut r)?) as usize;
    let s = u64::from_le_bytes(take(&mut r)?) as usize;
    let [x_min, x_max] = <[f64; 2]>::try_from(take_f64s(&mut r, 2)?).unwrap();
    let grid = if flags & 1 == 1 { Grid1D::periodic(x_min, x_max, nx)? } else { Grid1D::bounded(x_min, x_max, nx)? };
    let times = take_f64s(&mut r, s)?;
    let rows = |r: &mut R| (0..s).map(|_| take_f64s(r, grid.len())).collect::<Result<Vec<_>, _>>();
    let u = rows(&mut r)?;
    let ut = if flags & 2 == 2 { Some(rows(&mut r)?) } else { None };
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(FieldError::Format(format!("{} trailing bytes", rest.len())));
    }
    SolutionField::numeric(grid, times, u, ut, "PSSF import", order)
}
