//! Binary container for spectral coefficients.
//!
//! Layout, all little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 4     | magic `NSBF` |
//! | 4     | format version (`u32`, currently 1) |
//! | 24    | shape `n₁, n₂, n₃` (`u64` each) |
//! | 24    | box lengths `L₁, L₂, L₃` (`f64` each) |
//! | 4     | component count `c` (`u32`) |
//! | 16·c·N | coefficients as `(re, im)` `f64` pairs, component after component, in storage order |
//!
//! Coefficients are Fourier-series coefficients (forward transform scaled by
//! `1/N`). Reading repairs Hermitian symmetry and zeroes Nyquist modes like
//! every other constructor.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VelocityField};
use crate::lattice::FrequencyLattice;

pub const MAGIC: [u8; 4] = *b"NSBF";
pub const VERSION: u32 = 1;

pub fn write_fields<W: Write>(mut out: W, fields: &[&ScalarField]) -> Result<()> {
    let first = fields
        .first()
        .ok_or_else(|| Error::InvalidField("nothing to write".into()))?;
    let lattice = first.lattice();
    for f in fields {
        first.check_same_lattice(f)?;
    }
    out.write_all(&MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    for n in lattice.shape() {
        out.write_all(&(n as u64).to_le_bytes())?;
    }
    for l in lattice.lengths() {
        out.write_all(&l.to_le_bytes())?;
    }
    out.write_all(&(fields.len() as u32).to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * lattice.len());
    for f in fields {
        buf.clear();
        for c in f.spectral() {
            buf.extend_from_slice(&c.re.to_le_bytes());
            buf.extend_from_slice(&c.im.to_le_bytes());
        }
        out.write_all(&buf)?;
    }
    Ok(())
}

fn read_array<const N: usize, R: Read>(input: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    input
        .read_exact(&mut b)
        .map_err(|e| Error::InvalidField(format!("truncated header: {e}")))?;
    Ok(b)
}

pub fn read_fields<R: Read>(mut input: R) -> Result<Vec<ScalarField>> {
    if read_array::<4, _>(&mut input)? != MAGIC {
        return Err(Error::InvalidField("bad magic, not a field container".into()));
    }
    let version = u32::from_le_bytes(read_array(&mut input)?);
    if version != VERSION {
        return Err(Error::InvalidField(format!("unsupported container version {version}")));
    }
    let mut shape = [0usize; 3];
    for n in &mut shape {
        *n = usize::try_from(u64::from_le_bytes(read_array(&mut input)?))
            .map_err(|_| Error::InvalidField("shape does not fit in memory".into()))?;
    }
    let mut lengths = [0f64; 3];
    for l in &mut lengths {
        *l = f64::from_le_bytes(read_array(&mut input)?);
    }
    let lattice = FrequencyLattice::new(shape, lengths)?;
    let count = u32::from_le_bytes(read_array(&mut input)?) as usize;
    if count == 0 {
        return Err(Error::InvalidField("container holds no components".into()));
    }
    let mut raw = vec![0u8; 16 * lattice.len()];
    let mut fields = Vec::with_capacity(count);
    for k in 0..count {
        input
            .read_exact(&mut raw)
            .map_err(|e| Error::InvalidField(format!("component {k} truncated: {e}")))?;
        let coeffs = raw
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                Complex64::new(re, im)
            })
            .collect();
        fields.push(ScalarField::from_spectral(&lattice, coeffs)?);
    }
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(Error::InvalidField("trailing bytes after last component".into()));
    }
    Ok(fields)
}

pub fn write_velocity<W: Write>(out: W, u: &VelocityField) -> Result<()> {
    let [a, b, c] = u.components();
    write_fields(out, &[a, b, c])
}

/// Read a three-component container as a velocity field.
pub fn read_velocity<R: Read>(input: R) -> Result<VelocityField> {
    let fields = read_fields(input)?;
    let n = fields.len();
    let comps: [ScalarField; 3] = fields
        .try_into()
        .map_err(|_| Error::InvalidField(format!("expected 3 components, found {n}")))?;
    VelocityField::new(comps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn round_trip_is_exact() {
        let lat = FrequencyLattice::new([8, 16, 8], [2.0 * PI, 3.0, 1.5]).unwrap();
        let f = ScalarField::from_fn(&lat, |x| (x[0]).sin() + (2.0 * PI * x[1] / 3.0).cos() * 0.25);
        let g = ScalarField::from_fn(&lat, |x| (4.0 * PI * x[2] / 1.5).sin());
        let mut bytes = Vec::new();
        write_fields(&mut bytes, &[&f, &g]).unwrap();
        assert_eq!(bytes.len(), 4 + 4 + 24 + 24 + 4 + 2 * 16 * lat.len());
        let back = read_fields(bytes.as_slice()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].spectral(), f.spectral());
        assert_eq!(back[1].spectral(), g.spectral());
        assert_eq!(back[0].lattice(), &lat);
    }

    #[test]
    fn rejects_damaged_input() {
        let lat = FrequencyLattice::cubic(8, 1.0).unwrap();
        let f = ScalarField::zeros(&lat);
        let mut bytes = Vec::new();
        write_fields(&mut bytes, &[&f]).unwrap();
        assert!(read_fields(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(read_fields(extra.as_slice()).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(read_fields(bad.as_slice()).is_err());
        assert!(read_velocity(bytes.as_slice()).is_err());
    }
}
