//! Binary field snapshots.
//!
//! Little-endian layout: magic `CBFF`, version `u32`, `d u32`, `n u32`,
//! `L f64`, component count `u32`, representation flag `u32` (0 physical,
//! 1 spectral), then per component either `n^d` f64 samples in row-major
//! order or `n^d` interleaved `(re, im)` f64 pairs.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use super::{make_grid, Representation, ScalarField, SpectralError, TorusGrid, VectorField};

const MAGIC: &[u8; 4] = b"CBFF";
const VERSION: u32 = 1;

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub grid: Arc<TorusGrid>,
    pub representation: Representation,
    pub components: Vec<ScalarField>,
}

impl Snapshot {
    pub fn into_vector(self) -> Result<VectorField, SpectralError> {
        VectorField::from_components(&self.grid, self.components)
    }

    pub fn into_scalar(mut self) -> Result<ScalarField, SpectralError> {
        if self.components.len() != 1 {
            return Err(SpectralError::Format(format!(
                "expected one component, found {}",
                self.components.len()
            )));
        }
        Ok(self.components.remove(0))
    }
}

pub fn write_snapshot(
    path: &Path,
    components: &[ScalarField],
    repr: Representation,
) -> Result<(), SpectralError> {
    let first = components
        .first()
        .ok_or_else(|| SpectralError::Format("no components to write".into()))?;
    let grid = first.grid();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(grid.dim() as u32).to_le_bytes())?;
    w.write_all(&(grid.n() as u32).to_le_bytes())?;
    w.write_all(&grid.length().to_le_bytes())?;
    w.write_all(&(components.len() as u32).to_le_bytes())?;
    let flag: u32 = match repr {
        Representation::Physical => 0,
        Representation::Spectral => 1,
    };
    w.write_all(&flag.to_le_bytes())?;
    for c in components {
        if **c.grid() != **grid {
            return Err(SpectralError::GridMismatch);
        }
        match repr {
            Representation::Physical => {
                for v in c.physical().iter() {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
            Representation::Spectral => {
                for z in c.spectral().iter() {
                    w.write_all(&z.re.to_le_bytes())?;
                    w.write_all(&z.im.to_le_bytes())?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, SpectralError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(SpectralError::Format("bad magic".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(SpectralError::Format(format!("unsupported version {version}")));
    }
    let dim = read_u32(&mut r)? as usize;
    let n = read_u32(&mut r)? as usize;
    let length = read_f64(&mut r)?;
    let count = read_u32(&mut r)? as usize;
    let repr = match read_u32(&mut r)? {
        0 => Representation::Physical,
        1 => Representation::Spectral,
        other => return Err(SpectralError::Format(format!("unknown representation flag {other}"))),
    };
    let grid = make_grid(dim, n, length)?;
    let mut components = Vec::with_capacity(count);
    for _ in 0..count {
        match repr {
            Representation::Physical => {
                let mut v = Vec::with_capacity(grid.len());
                for _ in 0..grid.len() {
                    v.push(read_f64(&mut r)?);
                }
                components.push(ScalarField::from_physical(&grid, v));
            }
            Representation::Spectral => {
                let mut v = Vec::with_capacity(grid.len());
                for _ in 0..grid.len() {
                    let re = read_f64(&mut r)?;
                    let im = read_f64(&mut r)?;
                    v.push(Complex64::new(re, im));
                }
                components.push(ScalarField::from_spectral(&grid, v));
            }
        }
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(SpectralError::Format("trailing bytes after payload".into()));
    }
    Ok(Snapshot { grid, representation: repr, components })
}

fn read_u32(r: &mut impl Read) -> Result<u32, SpectralError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64, SpectralError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
