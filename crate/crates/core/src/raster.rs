//! 16-bit PGM images with a JSON sidecar holding the linear scale.
//!
//! A stored sample `raw` decodes to `offset + scale * raw`. The sidecar for
//! `image.pgm` is `image.json`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::projection::Raster;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearScale {
    pub scale: f64,
    #[serde(default)]
    pub offset: f64,
}

impl LinearScale {
    /// Scale spanning `[lo, hi]` with the full 16-bit range.
    pub fn spanning(lo: f64, hi: f64) -> Self {
        let span = hi - lo;
        Self { scale: if span > 0.0 { span / f64::from(u16::MAX) } else { 1.0 }, offset: lo }
    }

    pub fn decode(&self, raw: u16) -> f64 {
        self.offset + self.scale * f64::from(raw)
    }

    pub fn encode(&self, v: f64) -> u16 {
        ((v - self.offset) / self.scale).round().clamp(0.0, f64::from(u16::MAX)) as u16
    }
}

#[derive(Debug, Error)]
pub enum RasterError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("PGM: {0}")]
    Format(String),
    #[error("sidecar {path}: {source}")]
    Sidecar { path: PathBuf, source: serde_json::Error },
    #[error("invalid scale {0}")]
    BadScale(f64),
}

pub fn sidecar_path(image: &Path) -> PathBuf {
    image.with_extension("json")
}

pub fn read_pgm(path: &Path) -> Result<Raster, RasterError> {
    let side = sidecar_path(path);
    let text = std::fs::read_to_string(&side)?;
    let scale: LinearScale =
        serde_json::from_str(&text).map_err(|source| RasterError::Sidecar { path: side, source })?;
    if !(scale.scale.is_finite() && scale.scale > 0.0) {
        return Err(RasterError::BadScale(scale.scale));
    }
    let (width, height, raw) = decode_pgm(&std::fs::read(path)?)?;
    let values = raw.into_iter().map(|r| scale.decode(r)).collect();
    Ok(Raster { width, height, values })
}

/// Parses a binary (P5) graymap; 16-bit samples are big-endian.
pub fn decode_pgm(bytes: &[u8]) -> Result<(u32, u32, Vec<u16>), RasterError> {
    let bad = |m: &str| RasterError::Format(m.to_string());
    let mut pos = 0;
    let mut fields = [0u32; 3];
    if bytes.get(..2) != Some(b"P5") {
        return Err(bad("missing P5 magic"));
    }
    pos += 2;
    for field in &mut fields {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("malformed header"))?;
    }
    // Exactly one whitespace byte separates the header from the samples.
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(bad("malformed header"));
    }
    pos += 1;
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > u32::from(u16::MAX) {
        return Err(bad("maxval must be in 1..=65535"));
    }
    let count = width as usize * height as usize;
    let body = &bytes[pos..];
    let raw: Vec<u16> = if maxval < 256 {
        body.get(..count).ok_or_else(|| bad("truncated samples"))?.iter().map(|&b| u16::from(b)).collect()
    } else {
        body.get(..2 * count)
            .ok_or_else(|| bad("truncated samples"))?
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };
    Ok((width, height, raw))
}

pub fn encode_pgm(width: u32, height: u32, raw: &[u16]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n65535\n").into_bytes();
    out.extend(raw.iter().flat_map(|v| v.to_be_bytes()));
    out
}

pub fn write_pgm(path: &Path, raster: &Raster, scale: LinearScale) -> Result<(), RasterError> {
    if !(scale.scale.is_finite() && scale.scale > 0.0) {
        return Err(RasterError::BadScale(scale.scale));
    }
    let raw: Vec<u16> = raster.values.iter().map(|&v| scale.encode(v)).collect();
    std::fs::write(path, encode_pgm(raster.width, raster.height, &raw))?;
    let side = sidecar_path(path);
    let json = serde_json::to_string_pretty(&scale).map_err(|source| RasterError::Sidecar { path: side.clone(), source })?;
    std::fs::write(side, json)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_within_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("thermal.pgm");
        let values: Vec<f64> = (0..12).map(|i| 18.0 + 3.7 * f64::from(i)).collect();
        let r = Raster::new(4, 3, values).unwrap();
        let scale = LinearScale::spanning(0.0, 100.0);
        write_pgm(&path, &r, scale).unwrap();
        assert!(sidecar_path(&path).exists());
        let back = read_pgm(&path).unwrap();
        assert_eq!(back.dims(), (4, 3));
        for (a, b) in back.values.iter().zip(&r.values) {
            assert!((a - b).abs() <= scale.scale / 2.0 + 1e-12);
        }
    }

    #[test]
    fn exact_on_the_grid() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("depth.pgm");
        let r = Raster::new(3, 1, vec![0.0, 0.5, 0.001]).unwrap();
        write_pgm(&path, &r, LinearScale { scale: 0.001, offset: 0.0 }).unwrap();
        let back = read_pgm(&path).unwrap();
        assert_eq!(back.values.len(), 3);
        assert_eq!(back.values[0], 0.0);
        assert!((back.values[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn eight_bit_and_comments() {
        let mut bytes = b"P5\n# from a FLIR export\n3 1\n255\n".to_vec();
        bytes.extend([0u8, 128, 255]);
        assert_eq!(decode_pgm(&bytes).unwrap(), (3, 1, vec![0, 128, 255]));
        assert!(decode_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(decode_pgm(b"P5\n4 4\n65535\n\x00\x01").is_err());
    }

    #[test]
    fn missing_sidecar_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(read_pgm(&dir.path().join("none.pgm")), Err(RasterError::Io(_))));
    }
}
