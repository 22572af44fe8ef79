//! Binary JSA dump.
//!
//! Layout, all little-endian:
//!
//! | bytes | content |
//! |---|---|
//! | 8 | magic `SFWMJSA1` |
//! | 8 + 8 | `u64` signal points, idler points |
//! | 4 × 8 | `f64` ω_s first, ω_s last, ω_i first, ω_i last (rad/s) |
//! | 8 | `f64` filter survival |
//! | n_s · n_i · 16 | `f64` (re, im) pairs, signal index major |
//!
//! The stored amplitude satisfies `Σ |f|² Δω_s Δω_i = 1`.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{FrequencyGrid, JointSpectrum};
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"SFWMJSA1";

pub fn write_jsa<W: Write>(mut w: W, js: &JointSpectrum) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(js.signal.len as u64).to_le_bytes())?;
    w.write_all(&(js.idler.len as u64).to_le_bytes())?;
    for v in [js.signal.start, js.signal.stop(), js.idler.start, js.idler.stop(), js.survival] {
        w.write_all(&v.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(js.idler.len * 16);
    for s in 0..js.signal.len {
        buf.clear();
        for i in 0..js.idler.len {
            let c = js.amplitude[(s, i)];
            buf.extend_from_slice(&c.re.to_le_bytes());
            buf.extend_from_slice(&c.im.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()
}

pub fn read_jsa<R: Read>(mut r: R) -> Result<JointSpectrum> {
    let io = |e: std::io::Error| Error::Parse(format!("JSA dump: {e}"));
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err(Error::Parse("JSA dump: bad magic".into()));
    }
    let mut b8 = [0u8; 8];
    let mut u = |r: &mut R| -> Result<u64> {
        r.read_exact(&mut b8).map_err(io)?;
        Ok(u64::from_le_bytes(b8))
    };
    let ns = u(&mut r)? as usize;
    let ni = u(&mut r)? as usize;
    let mut f = |r: &mut R| -> Result<f64> { Ok(f64::from_bits(u(r)?)) };
    let (s0, s1, i0, i1, survival) = (f(&mut r)?, f(&mut r)?, f(&mut r)?, f(&mut r)?, f(&mut r)?);
    let signal = FrequencyGrid::new(s0, s1, ns)?;
    let idler = FrequencyGrid::new(i0, i1, ni)?;
    let mut data = vec![0u8; ns.checked_mul(ni).and_then(|n| n.checked_mul(16)).ok_or_else(|| Error::Parse("JSA dump: size overflow".into()))?];
    r.read_exact(&mut data).map_err(io)?;
    let val = |k: usize| f64::from_le_bytes(data[k * 8..k * 8 + 8].try_into().unwrap());
    let amplitude = DMatrix::from_fn(ns, ni, |s, i| {
        let k = 2 * (s * ni + i);
        Complex64::new(val(k), val(k + 1))
    });
    Ok(JointSpectrum {
        signal,
        idler,
        amplitude,
        survival,
    })
}
