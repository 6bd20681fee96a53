//! Pool-map export: one 8-bit binary PGM per map for viewing, and a lossless
//! `PMAP` dump of all maps.
//!
//! PMAP layout (little-endian): `b"PMAP"`, `u32` version, `u32` map count
//! `p`, `u32` side `P`, then `p·P·P` `f64` weights, map-major, row-major.

use learnpool_core::PoolMapSet;

use crate::error::{CliError, CliResult};

pub const PMAP_MAGIC: &[u8; 4] = b"PMAP";
pub const PMAP_VERSION: u32 = 1;

/// Min–max scales one map to bytes. A constant map becomes all zeros.
pub fn scale_to_bytes(weights: &[f64]) -> Vec<u8> {
    let min = weights.iter().copied().fold(f64::INFINITY, f64::min);
    let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.partial_cmp(&min) != Some(std::cmp::Ordering::Greater) {
        return vec![0; weights.len()];
    }
    weights.iter().map(|w| (255.0 * (w - min) / (max - min)).round().clamp(0.0, 255.0) as u8).collect()
}

/// Binary PGM (`P5`, maxval 255) of map `i`.
pub fn encode_pgm(maps: &PoolMapSet, i: usize) -> Vec<u8> {
    let side = maps.side();
    let mut out = format!("P5\n{side} {side}\n255\n").into_bytes();
    out.extend(scale_to_bytes(maps.map(i)));
    out
}

pub fn encode_pmap(maps: &PoolMapSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 8 * maps.weights().len());
    out.extend_from_slice(PMAP_MAGIC);
    out.extend_from_slice(&PMAP_VERSION.to_le_bytes());
    out.extend_from_slice(&(maps.pools() as u32).to_le_bytes());
    out.extend_from_slice(&(maps.side() as u32).to_le_bytes());
    for w in maps.weights() {
        out.extend_from_slice(&w.to_le_bytes());
    }
    out
}

pub fn decode_pmap(bytes: &[u8]) -> CliResult<PoolMapSet> {
    let bad = |m: &str| CliError::Data(format!("PMAP: {m}"));
    if bytes.len() < 16 || &bytes[..4] != PMAP_MAGIC {
        return Err(bad("missing PMAP header"));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    if word(4) != PMAP_VERSION {
        return Err(bad(&format!("unsupported version {}", word(4))));
    }
    let (pools, side) = (word(8) as usize, word(12) as usize);
    let body = &bytes[16..];
    if body.len() != 8 * pools * side * side {
        return Err(bad(&format!(
            "expected {} weight bytes for {pools} maps of {side}x{side}, found {}",
            8 * pools * side * side,
            body.len()
        )));
    }
    let weights = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(PoolMapSet::new(side, pools, weights)?)
}

/// Parses a `P5` file back into its width, height and pixel bytes.
pub fn decode_pgm(bytes: &[u8]) -> CliResult<(usize, usize, Vec<u8>)> {
    let bad = || CliError::Data("malformed PGM".into());
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad());
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad())?.to_string());
    }
    if fields[0] != "P5" || fields[3] != "255" {
        return Err(bad());
    }
    let width: usize = fields[1].parse().map_err(|_| bad())?;
    let height: usize = fields[2].parse().map_err(|_| bad())?;
    let data = bytes.get(pos + 1..).ok_or_else(bad)?;
    if data.len() != width * height {
        return Err(bad());
    }
    Ok((width, height, data.to_vec()))
}
