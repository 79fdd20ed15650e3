//! Raw field snapshots.
//!
//! Layout, all little-endian: a 32-byte header
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic `ASHF`                            |
//! | 4      | 2    | format version (1)                      |
//! | 6      | 2    | dtype: 1 = complex64, 2 = complex128    |
//! | 8      | 8    | `K` as u64                              |
//! | 16     | 8    | box length `L` as f64                   |
//! | 24     | 8    | time `t` as f64                         |
//!
//! followed by `K` physical samples, each real part then imaginary part.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::spectral::{Grid, SpectralField};

pub const MAGIC: [u8; 4] = *b"ASHF";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    Complex64,
    Complex128,
}

impl Dtype {
    fn code(self) -> u16 {
        match self {
            Dtype::Complex64 => 1,
            Dtype::Complex128 => 2,
        }
    }

    fn from_code(code: u16) -> Result<Self> {
        match code {
            1 => Ok(Dtype::Complex64),
            2 => Ok(Dtype::Complex128),
            other => Err(LabError::InvalidParameter(format!("unknown snapshot dtype {other}"))),
        }
    }
}

pub fn write_snapshot<W: Write>(mut out: W, field: &SpectralField, t: f64, dtype: Dtype) -> Result<()> {
    let grid = field.grid();
    let mut header = [0u8; HEADER_LEN];
    header[0..4].copy_from_slice(&MAGIC);
    header[4..6].copy_from_slice(&VERSION.to_le_bytes());
    header[6..8].copy_from_slice(&dtype.code().to_le_bytes());
    header[8..16].copy_from_slice(&(grid.modes() as u64).to_le_bytes());
    header[16..24].copy_from_slice(&grid.length().to_le_bytes());
    header[24..32].copy_from_slice(&t.to_le_bytes());
    out.write_all(&header)?;
    let mut body = Vec::with_capacity(grid.modes() * 16);
    for v in field.physical() {
        match dtype {
            Dtype::Complex64 => {
                body.extend_from_slice(&(v.re as f32).to_le_bytes());
                body.extend_from_slice(&(v.im as f32).to_le_bytes());
            }
            Dtype::Complex128 => {
                body.extend_from_slice(&v.re.to_le_bytes());
                body.extend_from_slice(&v.im.to_le_bytes());
            }
        }
    }
    out.write_all(&body)?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub field: SpectralField,
    pub t: f64,
    pub dtype: Dtype,
}

pub fn read_snapshot<R: Read>(mut input: R) -> Result<Snapshot> {
    let mut header = [0u8; HEADER_LEN];
    input.read_exact(&mut header)?;
    if header[0..4] != MAGIC {
        return Err(LabError::InvalidParameter("not a snapshot file (bad magic)".into()));
    }
    let version = u16::from_le_bytes([header[4], header[5]]);
    if version != VERSION {
        return Err(LabError::InvalidParameter(format!("unsupported snapshot version {version}")));
    }
    let dtype = Dtype::from_code(u16::from_le_bytes([header[6], header[7]]))?;
    let modes = u64::from_le_bytes(header[8..16].try_into().unwrap()) as usize;
    let length = f64::from_le_bytes(header[16..24].try_into().unwrap());
    let t = f64::from_le_bytes(header[24..32].try_into().unwrap());
    let grid = Grid::new(modes, length)?;
    let width = match dtype {
        Dtype::Complex64 => 4,
        Dtype::Complex128 => 8,
    };
    let mut body = vec![0u8; modes * 2 * width];
    input.read_exact(&mut body)?;
    let values = body
        .chunks_exact(2 * width)
        .map(|c| match dtype {
            Dtype::Complex64 => Complex64::new(
                f32::from_le_bytes(c[0..4].try_into().unwrap()) as f64,
                f32::from_le_bytes(c[4..8].try_into().unwrap()) as f64,
            ),
            Dtype::Complex128 => Complex64::new(
                f64::from_le_bytes(c[0..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
            ),
        })
        .collect();
    Ok(Snapshot { field: SpectralField::from_physical(grid, values)?, t, dtype })
}
