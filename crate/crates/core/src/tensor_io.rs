//! Binary tensor container, JSON manifests and PGM image export.
//!
//! Tensor layout (all integers little-endian, no padding):
//!
//! ```text
//! "MSEV" | version u32 | rank u32 (=5) | dims 5 x u32 (B, T, C, H, W) | dtype u8 (0 = f32) | payload
//! ```
//!
//! The payload is row-major over `(B, T, C, H, W)` as `f32` little-endian.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::Field2D;

pub const MAGIC: [u8; 4] = *b"MSEV";
pub const VERSION: u32 = 1;
pub const RANK: u32 = 5;
pub const DTYPE_F32_LE: u8 = 0;
/// Size in bytes of the fixed header that precedes the payload.
pub const HEADER_LEN: usize = 4 + 4 + 4 + 5 * 4 + 1;

/// `(B, T, C, H, W)`.
pub type Dims = [usize; 5];

pub fn element_count(dims: &Dims) -> usize {
    dims.iter().product()
}

pub fn encode_tensor(dims: &Dims, payload: &[f32]) -> Result<Vec<u8>> {
    let n = element_count(dims);
    if payload.len() != n {
        return Err(Error::Shape(format!(
            "dims {dims:?} need {n} elements, payload has {}",
            payload.len()
        )));
    }
    let mut buf = Vec::with_capacity(HEADER_LEN + 4 * n);
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&RANK.to_le_bytes());
    for &d in dims {
        let d = u32::try_from(d).map_err(|_| Error::Shape(format!("dimension {d} exceeds u32")))?;
        buf.extend_from_slice(&d.to_le_bytes());
    }
    buf.push(DTYPE_F32_LE);
    for v in payload {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    Ok(buf)
}

pub fn decode_tensor(bytes: &[u8], path: &Path) -> Result<(Dims, Vec<f32>)> {
    if bytes.len() < 4 || bytes[..4] != MAGIC {
        return Err(Error::BadMagic(path.to_path_buf()));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::TruncatedPayload {
            path: path.to_path_buf(),
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap());
    let version = word(0);
    if version != VERSION {
        return Err(Error::Unsupported {
            path: path.to_path_buf(),
            what: "version",
            value: version,
        });
    }
    let rank = word(1);
    if rank != RANK {
        return Err(Error::Unsupported {
            path: path.to_path_buf(),
            what: "rank",
            value: rank,
        });
    }
    let mut dims = [0usize; 5];
    for (k, d) in dims.iter_mut().enumerate() {
        *d = word(2 + k) as usize;
    }
    let dtype = bytes[HEADER_LEN - 1];
    if dtype != DTYPE_F32_LE {
        return Err(Error::Unsupported {
            path: path.to_path_buf(),
            what: "dtype",
            value: dtype as u32,
        });
    }
    let body = &bytes[HEADER_LEN..];
    let expected = element_count(&dims) * 4;
    if body.len() != expected {
        return Err(Error::TruncatedPayload {
            path: path.to_path_buf(),
            expected,
            found: body.len(),
        });
    }
    let payload = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((dims, payload))
}

pub fn write_tensor(path: impl AsRef<Path>, dims: &Dims, payload: &[f32]) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_tensor(dims, payload)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<(Dims, Vec<f32>)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_tensor(&bytes, path)
}

/// Packs `B` equal-length frame sequences into a `(B, T, 1, H, W)` tensor.
pub fn pack_sequences<S: AsRef<[Field2D]>>(sequences: &[S]) -> Result<(Dims, Vec<f32>)> {
    let first = sequences
        .first()
        .and_then(|s| s.as_ref().first())
        .ok_or_else(|| Error::Shape("cannot pack an empty set of sequences".into()))?;
    let (h, w) = first.shape();
    let t = sequences[0].as_ref().len();
    let mut payload = Vec::with_capacity(sequences.len() * t * h * w);
    for seq in sequences {
        let seq = seq.as_ref();
        if seq.len() != t {
            return Err(Error::Shape(format!(
                "sequence lengths differ: {} vs {t}",
                seq.len()
            )));
        }
        for frame in seq {
            if frame.shape() != (h, w) {
                return Err(Error::Shape(format!(
                    "frame {:?} differs from {:?}",
                    frame.shape(),
                    (h, w)
                )));
            }
            payload.extend(frame.values().iter().map(|&v| v as f32));
        }
    }
    Ok(([sequences.len(), t, 1, h, w], payload))
}

/// Inverse of [`pack_sequences`]; requires `C = 1`.
pub fn unpack_sequences(dims: &Dims, payload: &[f32]) -> Result<Vec<Vec<Field2D>>> {
    let [b, t, c, h, w] = *dims;
    if c != 1 {
        return Err(Error::Shape(format!("expected a single channel, found C={c}")));
    }
    if payload.len() != element_count(dims) {
        return Err(Error::Shape("payload does not match dims".into()));
    }
    let frame_len = h * w;
    Ok((0..b)
        .map(|bi| {
            (0..t)
                .map(|ti| {
                    let off = (bi * t + ti) * frame_len;
                    let values = payload[off..off + frame_len]
                        .iter()
                        .map(|&v| v as f64)
                        .collect();
                    Field2D::from_values(h, w, values).expect("frame length checked")
                })
                .collect()
        })
        .collect())
}

pub fn read_sequences(path: impl AsRef<Path>) -> Result<(Dims, Vec<Vec<Field2D>>)> {
    let (dims, payload) = read_tensor(path)?;
    let seqs = unpack_sequences(&dims, &payload)?;
    Ok((dims, seqs))
}

pub fn write_sequences<S: AsRef<[Field2D]>>(path: impl AsRef<Path>, sequences: &[S]) -> Result<Dims> {
    let (dims, payload) = pack_sequences(sequences)?;
    write_tensor(path, &dims, &payload)?;
    Ok(dims)
}

/// Maps a field to 8-bit gray levels.
///
/// Without `clip_range` values are taken on `[0, 1]`. Values outside the range
/// saturate; the source field is never modified.
pub fn to_gray_levels(field: &Field2D, clip_range: Option<(f64, f64)>) -> Vec<u8> {
    let (lo, hi) = clip_range.unwrap_or((0.0, 1.0));
    let span = hi - lo;
    field
        .values()
        .iter()
        .map(|&v| {
            let t = if span > 0.0 {
                ((v - lo) / span).clamp(0.0, 1.0)
            } else if v >= hi {
                1.0
            } else {
                0.0
            };
            (t * 255.0).round() as u8
        })
        .collect()
}

pub fn encode_pgm(field: &Field2D, clip_range: Option<(f64, f64)>) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", field.width(), field.height()).into_bytes();
    out.extend(to_gray_levels(field, clip_range));
    out
}

pub fn export_image(
    field: &Field2D,
    path: impl AsRef<Path>,
    clip_range: Option<(f64, f64)>,
) -> Result<()> {
    let path = path.as_ref();
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&encode_pgm(field, clip_range))
        .map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Manifest(format!("serializing {}: {e}", path.display())))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_length_is_header_plus_payload() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.msev");
        write_tensor(&path, &[1, 1, 1, 2, 2], &[0.0; 4]).unwrap();
        assert_eq!(fs::metadata(&path).unwrap().len() as usize, HEADER_LEN + 16);
        assert_eq!(HEADER_LEN, 33);
    }

    #[test]
    fn short_payload_is_rejected() {
        let err = encode_tensor(&[1, 1, 1, 2, 2], &[0.0; 3]).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
    }

    #[test]
    fn header_layout() {
        let bytes = encode_tensor(&[2, 3, 1, 4, 5], &vec![1.5; 120]).unwrap();
        assert_eq!(&bytes[..4], b"MSEV");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 5);
        let dims: Vec<u32> = (0..5)
            .map(|k| u32::from_le_bytes(bytes[12 + 4 * k..16 + 4 * k].try_into().unwrap()))
            .collect();
        assert_eq!(dims, vec![2, 3, 1, 4, 5]);
        assert_eq!(bytes[32], 0);
        assert_eq!(&bytes[33..37], &1.5f32.to_le_bytes());
    }

    #[test]
    fn corrupted_magic() {
        let mut bytes = encode_tensor(&[1, 1, 1, 1, 1], &[0.25]).unwrap();
        bytes[0] = b'X';
        let err = decode_tensor(&bytes, Path::new("x")).unwrap_err();
        assert!(err.to_string().contains("bad magic"), "{err}");
    }

    #[test]
    fn truncated_file() {
        let bytes = encode_tensor(&[1, 2, 1, 2, 2], &[0.5; 8]).unwrap();
        let err = decode_tensor(&bytes[..bytes.len() - 1], Path::new("x")).unwrap_err();
        assert!(err.to_string().contains("truncated payload"), "{err}");
        let err = decode_tensor(&bytes[..10], Path::new("x")).unwrap_err();
        assert!(matches!(err, Error::TruncatedPayload { .. }));
    }

    #[test]
    fn unsupported_version_and_dtype() {
        let mut bytes = encode_tensor(&[1, 1, 1, 1, 1], &[0.0]).unwrap();
        bytes[4] = 2;
        assert!(matches!(
            decode_tensor(&bytes, Path::new("x")),
            Err(Error::Unsupported { what: "version", .. })
        ));
        let mut bytes = encode_tensor(&[1, 1, 1, 1, 1], &[0.0]).unwrap();
        bytes[32] = 7;
        assert!(matches!(
            decode_tensor(&bytes, Path::new("x")),
            Err(Error::Unsupported { what: "dtype", .. })
        ));
    }

    #[test]
    fn gray_level_endpoints() {
        let zero = Field2D::zeros(3, 3);
        assert!(to_gray_levels(&zero, None).iter().all(|&p| p == 0));
        let f = Field2D::constant(3, 3, 0.6);
        assert!(to_gray_levels(&f, Some((0.0, 0.6))).iter().all(|&p| p == 255));
        let f = Field2D::constant(2, 2, 0.9);
        assert!(to_gray_levels(&f, Some((0.0, 0.6))).iter().all(|&p| p == 255));
        // clipping is display-only
        assert_eq!(f.values(), &[0.9; 4]);
    }

    #[test]
    fn pgm_header() {
        let f = Field2D::constant(2, 3, 1.0);
        let bytes = encode_pgm(&f, None);
        let header = b"P5\n3 2\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(bytes.len(), header.len() + 6);
        assert!(bytes[header.len()..].iter().all(|&p| p == 255));
    }

    #[test]
    fn pack_rejects_ragged_sequences() {
        let a = vec![Field2D::zeros(2, 2); 3];
        let b = vec![Field2D::zeros(2, 2); 2];
        assert!(pack_sequences(&[a, b]).is_err());
    }
}
