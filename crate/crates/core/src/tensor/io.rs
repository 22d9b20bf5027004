//! Tensor file formats.
//!
//! Binary (`DTNS0001`): the 8 magic bytes, the order `d` as a little-endian
//! `u32`, `d` little-endian `u64` dimensions, then the entries as
//! little-endian `f64` in storage order.
//!
//! Text: `#` starts a comment; the first non-empty line lists the
//! dimensions, and every following whitespace-separated token is an entry in
//! storage order.

use std::io::{BufRead, Read, Write};

use super::DenseTensor;
use crate::error::{Error, Result};

pub const DTNS_MAGIC: &[u8; 8] = b"DTNS0001";

pub fn write_dtns<W: Write>(t: &DenseTensor, mut w: W) -> Result<()> {
    w.write_all(DTNS_MAGIC)?;
    w.write_all(&(t.order() as u32).to_le_bytes())?;
    for &n in t.dims() {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(8 * t.len());
    for x in t.data() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

pub fn read_dtns<R: Read>(mut r: R) -> Result<DenseTensor> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format("truncated header".into()))?;
    if &magic != DTNS_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word)
        .map_err(|_| Error::Format("truncated header".into()))?;
    let d = u32::from_le_bytes(word) as usize;
    if !(2..=64).contains(&d) {
        return Err(Error::Format(format!("unsupported order {d}")));
    }
    let mut dims = Vec::with_capacity(d);
    let mut len = 1usize;
    for _ in 0..d {
        let mut long = [0u8; 8];
        r.read_exact(&mut long)
            .map_err(|_| Error::Format("truncated header".into()))?;
        let n = usize::try_from(u64::from_le_bytes(long))
            .map_err(|_| Error::Format("dimension too large".into()))?;
        len = len
            .checked_mul(n)
            .filter(|&l| l <= usize::MAX / 8)
            .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
        dims.push(n);
    }
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * len {
        return Err(Error::Format(format!(
            "expected {} payload bytes, found {}",
            8 * len,
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    DenseTensor::new(dims, data).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_text<W: Write>(t: &DenseTensor, mut w: W) -> Result<()> {
    let dims: Vec<String> = t.dims().iter().map(|n| n.to_string()).collect();
    writeln!(w, "{}", dims.join(" "))?;
    let n1 = t.dims()[0];
    for col in t.data().chunks(n1) {
        let row: Vec<String> = col.iter().map(|x| format!("{x:?}")).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn read_text<R: BufRead>(r: R) -> Result<DenseTensor> {
    let mut dims: Option<Vec<usize>> = None;
    let mut data = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let at = |tok: &str| format!("line {}: bad token {tok:?}", lineno + 1);
        if dims.is_none() {
            let parsed = body
                .split_whitespace()
                .map(|tok| tok.parse::<usize>().map_err(|_| Error::Format(at(tok))))
                .collect::<Result<Vec<_>>>()?;
            dims = Some(parsed);
            continue;
        }
        for tok in body.split_whitespace() {
            data.push(tok.parse::<f64>().map_err(|_| Error::Format(at(tok)))?);
        }
    }
    let dims = dims.ok_or_else(|| Error::Format("missing dimension line".into()))?;
    DenseTensor::new(dims, data).map_err(|e| Error::Format(e.to_string()))
}
