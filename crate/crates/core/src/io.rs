//! Versioned little-endian binary format for fitted models.
//!
//! Layout: magic `PC2M`, `u32` format version, input spec (name, marginal
//! tag, two parameters per dimension), order and `q`, the multi-index list,
//! the coefficient vector, then the fit diagnostics.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::basis::{BasisSpec, InputDim, InputSpec, Marginal, MultiIndex, MultiIndexSet};
use crate::error::{Error, Result};
use crate::model::Pc2Model;
use crate::solvers::{Diagnostics, StageTiming};

pub const MAGIC: &[u8; 4] = b"PC2M";
pub const FORMAT_VERSION: u32 = 1;

const TAG_DETERMINISTIC: u8 = 0;
const TAG_UNIFORM: u8 = 1;
const TAG_GAUSSIAN: u8 = 2;

/// Upper bound on any length prefix, to reject corrupt files before allocating.
const MAX_LEN: u32 = 1 << 28;

pub fn write_model<W: Write>(mut w: W, model: &Pc2Model, diagnostics: &Diagnostics) -> Result<()> {
    let basis = model.basis();
    w.write_all(MAGIC)?;
    put_u32(&mut w, FORMAT_VERSION)?;

    put_len(&mut w, basis.dim())?;
    for d in basis.input().dims() {
        put_str(&mut w, &d.name)?;
        let (tag, a, b) = match d.marginal {
            Marginal::Deterministic { lo, hi } => (TAG_DETERMINISTIC, lo, hi),
            Marginal::Uniform { lo, hi } => (TAG_UNIFORM, lo, hi),
            Marginal::Gaussian { mean, std } => (TAG_GAUSSIAN, mean, std),
        };
        w.write_all(&[tag])?;
        put_f64(&mut w, a)?;
        put_f64(&mut w, b)?;
    }

    put_len(&mut w, basis.order())?;
    put_f64(&mut w, basis.q())?;
    put_len(&mut w, basis.cardinality())?;
    for alpha in basis.indices().iter() {
        for &k in alpha.degrees() {
            put_len(&mut w, k)?;
        }
    }
    for &b in model.coefficients() {
        put_f64(&mut w, b)?;
    }

    put_f64(&mut w, diagnostics.data_mse)?;
    put_f64(&mut w, diagnostics.pde_residual_mse)?;
    put_f64(&mut w, diagnostics.bc_residual_mse)?;
    put_len(&mut w, diagnostics.chosen_order)?;
    put_f64(&mut w, diagnostics.ridge)?;
    w.write_all(&[diagnostics.overconstrained as u8])?;
    put_len(&mut w, diagnostics.timings.len())?;
    for t in &diagnostics.timings {
        put_str(&mut w, &t.stage)?;
        put_f64(&mut w, t.seconds)?;
    }
    put_len(&mut w, diagnostics.warnings.len())?;
    for msg in &diagnostics.warnings {
        put_str(&mut w, msg)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_model<R: Read>(mut r: R) -> Result<(Pc2Model, Diagnostics)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}, expected \"PC2M\"")));
    }
    let version = get_u32(&mut r)?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format version {version}")));
    }

    let n_dims = get_len(&mut r)?;
    let mut dims = Vec::with_capacity(n_dims);
    for _ in 0..n_dims {
        let name = get_str(&mut r)?;
        let tag = get_u8(&mut r)?;
        let (a, b) = (get_f64(&mut r)?, get_f64(&mut r)?);
        let marginal = match tag {
            TAG_DETERMINISTIC => Marginal::deterministic(a, b)?,
            TAG_UNIFORM => Marginal::uniform(a, b)?,
            TAG_GAUSSIAN => Marginal::gaussian(a, b)?,
            t => return Err(Error::Format(format!("unknown marginal tag {t}"))),
        };
        dims.push(InputDim { name, marginal });
    }
    let input = InputSpec::new(dims)?;

    let order = get_len(&mut r)?;
    let q = get_f64(&mut r)?;
    let card = get_len(&mut r)?;
    let mut indices = Vec::with_capacity(card);
    for _ in 0..card {
        let degrees = (0..n_dims).map(|_| get_len(&mut r)).collect::<Result<Vec<_>>>()?;
        indices.push(MultiIndex(degrees));
    }
    let indices = MultiIndexSet::from_indices(n_dims, indices)?;
    let basis = BasisSpec::with_indices(input, order, q, indices)?;
    let beta = (0..card).map(|_| get_f64(&mut r)).collect::<Result<Vec<_>>>()?;
    let model = Pc2Model::new(basis, beta)?;

    let data_mse = get_f64(&mut r)?;
    let pde_residual_mse = get_f64(&mut r)?;
    let bc_residual_mse = get_f64(&mut r)?;
    let chosen_order = get_len(&mut r)?;
    let ridge = get_f64(&mut r)?;
    let overconstrained = get_u8(&mut r)? != 0;
    let n_t = get_len(&mut r)?;
    let mut timings = Vec::with_capacity(n_t);
    for _ in 0..n_t {
        let stage = get_str(&mut r)?;
        timings.push(StageTiming { stage, seconds: get_f64(&mut r)? });
    }
    let n_w = get_len(&mut r)?;
    let warnings = (0..n_w).map(|_| get_str(&mut r)).collect::<Result<Vec<_>>>()?;

    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after model".into()));
    }
    let diagnostics = Diagnostics {
        data_mse,
        pde_residual_mse,
        bc_residual_mse,
        chosen_order,
        ridge,
        overconstrained,
        timings,
        warnings,
    };
    Ok((model, diagnostics))
}

pub fn save_model(path: impl AsRef<Path>, model: &Pc2Model, diagnostics: &Diagnostics) -> Result<()> {
    write_model(BufWriter::new(File::create(path)?), model, diagnostics)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<(Pc2Model, Diagnostics)> {
    read_model(BufReader::new(File::open(path)?))
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("file is truncated".into())
    } else {
        Error::Io(e)
    }
}

fn put_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_len<W: Write>(w: &mut W, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Format(format!("length {v} does not fit in u32")))?;
    put_u32(w, v)
}

fn put_f64<W: Write>(w: &mut W, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_str<W: Write>(w: &mut W, s: &str) -> Result<()> {
    put_len(w, s.len())?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn get_u8<R: Read>(r: &mut R) -> Result<u8> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(b[0])
}

fn get_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

fn get_len<R: Read>(r: &mut R) -> Result<usize> {
    let v = get_u32(r)?;
    if v > MAX_LEN {
        return Err(Error::Format(format!("length prefix {v} is implausibly large")));
    }
    Ok(v as usize)
}

fn get_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(f64::from_le_bytes(b))
}

fn get_str<R: Read>(r: &mut R) -> Result<String> {
    let n = get_len(r)?;
    let mut buf = vec![0u8; n];
    r.read_exact(&mut buf).map_err(truncated)?;
    String::from_utf8(buf).map_err(|_| Error::Format("string is not valid UTF-8".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> (Pc2Model, Diagnostics) {
        let input = InputSpec::from_pairs([
            ("x", Marginal::deterministic(0.0, 2.0).unwrap()),
            ("k", Marginal::uniform(1.0, 3.0).unwrap()),
            ("z", Marginal::gaussian(0.5, 0.1).unwrap()),
        ])
        .unwrap();
        let basis = BasisSpec::new(input, 4, 0.7).unwrap();
        let beta = (0..basis.cardinality()).map(|i| (i as f64).sin()).collect();
        let diag = Diagnostics {
            data_mse: 1e-3,
            pde_residual_mse: 2e-9,
            bc_residual_mse: 0.0,
            chosen_order: 4,
            ridge: 1e-12,
            overconstrained: true,
            timings: vec![StageTiming { stage: "solve".into(), seconds: 0.25 }],
            warnings: vec!["thresholds not met".into()],
        };
        (Pc2Model::new(basis, beta).unwrap(), diag)
    }

    #[test]
    fn round_trip() {
        let (model, diag) = sample();
        let mut buf = Vec::new();
        write_model(&mut buf, &model, &diag).unwrap();
        assert_eq!(&buf[..4], b"PC2M");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), FORMAT_VERSION);
        let (m2, d2) = read_model(buf.as_slice()).unwrap();
        assert_eq!(m2, model);
        assert_eq!(d2, diag);
    }

    #[test]
    fn rejects_bad_magic_version_and_truncation() {
        let (model, diag) = sample();
        let mut buf = Vec::new();
        write_model(&mut buf, &model, &diag).unwrap();

        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_model(bad.as_slice()), Err(Error::Format(_))));

        let mut bad = buf.clone();
        bad[4] = 99;
        assert!(matches!(read_model(bad.as_slice()), Err(Error::Format(_))));

        assert!(matches!(read_model(&buf[..buf.len() - 3]), Err(Error::Format(_))));

        let mut long = buf.clone();
        long.push(0);
        assert!(read_model(long.as_slice()).is_err());
    }
}
