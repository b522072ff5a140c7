//! Binary serialization for states, operators, and cached eigensystems.
//!
//! Layouts are little-endian and deliberately simple:
//!
//! * state:    `u64 dim`, then `dim` complex entries as `(f64 re, f64 im)`;
//! * operator: `u64 dim`, then `dim * dim` complex entries, row-major;
//! * eigensystem: magic `RYDEIG01`, `u64 n_sites`, `u8 sector tag`,
//!   `f64 omega`, `f64 delta`, `f64 v_dd`, `u64 n_levels`, `u64 dim`,
//!   `n_levels` energies as `f64`, then the `dim x n_levels` eigenvector
//!   matrix row-major as complex pairs.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::StateVector;

fn write_f64<W: Write>(w: &mut W, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn write_complex_slice<W: Write>(w: &mut W, data: &[C64]) -> Result<()> {
    for z in data {
        write_f64(w, z.re)?;
        write_f64(w, z.im)?;
    }
    Ok(())
}

fn read_complex_vec<R: Read>(r: &mut R, len: usize) -> Result<Vec<C64>> {
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let re = read_f64(r)?;
        let im = read_f64(r)?;
        out.push(C64::new(re, im));
    }
    Ok(out)
}

pub fn write_state(path: &Path, state: &StateVector) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_u64(&mut w, state.dim() as u64)?;
    write_complex_slice(&mut w, state.0.as_slice().unwrap())?;
    w.flush()?;
    Ok(())
}

pub fn read_state(path: &Path) -> Result<StateVector> {
    let mut r = BufReader::new(File::open(path)?);
    let dim = read_u64(&mut r)? as usize;
    if dim == 0 || dim > (1 << 24) {
        return Err(Error::Format(format!("implausible state dimension {dim}")));
    }
    let data = read_complex_vec(&mut r, dim)?;
    Ok(StateVector(Array1::from_vec(data)))
}

pub fn write_complex_matrix(path: &Path, m: &Array2<C64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Domain("operator serialization expects a square matrix".into()));
    }
    let mut w = BufWriter::new(File::create(path)?);
    write_u64(&mut w, m.nrows() as u64)?;
    for row in m.rows() {
        let row = row.to_vec();
        write_complex_slice(&mut w, &row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_complex_matrix(path: &Path) -> Result<Array2<C64>> {
    let mut r = BufReader::new(File::open(path)?);
    let dim = read_u64(&mut r)? as usize;
    if dim == 0 || dim > (1 << 14) {
        return Err(Error::Format(format!("implausible operator dimension {dim}")));
    }
    let data = read_complex_vec(&mut r, dim * dim)?;
    Array2::from_shape_vec((dim, dim), data)
        .map_err(|e| Error::Format(format!("operator shape error: {e}")))
}

const EIG_MAGIC: &[u8; 8] = b"RYDEIG01";

/// Raw eigensystem payload for the disk cache; the `analysis` module wraps
/// this into its `Eigensystem` type.
pub struct EigRecord {
    pub n_sites: u64,
    pub sector_tag: u8,
    pub omega: f64,
    pub delta: f64,
    pub v_dd: f64,
    pub energies: Array1<f64>,
    pub vectors: Array2<C64>,
}

pub fn write_eig_record(path: &Path, rec: &EigRecord) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(EIG_MAGIC)?;
    write_u64(&mut w, rec.n_sites)?;
    w.write_all(&[rec.sector_tag])?;
    write_f64(&mut w, rec.omega)?;
    write_f64(&mut w, rec.delta)?;
    write_f64(&mut w, rec.v_dd)?;
    write_u64(&mut w, rec.energies.len() as u64)?;
    write_u64(&mut w, rec.vectors.nrows() as u64)?;
    for &e in rec.energies.iter() {
        write_f64(&mut w, e)?;
    }
    for row in rec.vectors.rows() {
        let row = row.to_vec();
        write_complex_slice(&mut w, &row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_eig_record(path: &Path) -> Result<EigRecord> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != EIG_MAGIC {
        return Err(Error::Format(format!(
            "{} is not an eigensystem cache file",
            path.display()
        )));
    }
    let n_sites = read_u64(&mut r)?;
    let mut tag = [0u8; 1];
    r.read_exact(&mut tag)?;
    let omega = read_f64(&mut r)?;
    let delta = read_f64(&mut r)?;
    let v_dd = read_f64(&mut r)?;
    let n_levels = read_u64(&mut r)? as usize;
    let dim = read_u64(&mut r)? as usize;
    if dim == 0 || dim > (1 << 14) || n_levels == 0 || n_levels > dim {
        return Err(Error::Format(format!(
            "implausible eigensystem shape {n_levels} x {dim}"
        )));
    }
    let mut energies = Array1::zeros(n_levels);
    for e in energies.iter_mut() {
        *e = read_f64(&mut r)?;
    }
    let data = read_complex_vec(&mut r, dim * n_levels)?;
    let vectors = Array2::from_shape_vec((dim, n_levels), data)
        .map_err(|e| Error::Format(format!("eigenvector shape error: {e}")))?;
    Ok(EigRecord { n_sites, sector_tag: tag[0], omega, delta, v_dd, energies, vectors })
}
