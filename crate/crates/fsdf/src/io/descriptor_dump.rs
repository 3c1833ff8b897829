//! Binary descriptor dumps.
//!
//! Layout (little-endian):
//!
//! ```text
//! n_div   u32
//! count   u64
//! records count × { i32×3 keypoint index, u8 lrf ordinal,
//!                   f32 × (2·n_div² + 2) values }
//! ```
//!
//! Keypoint positions are not stored; readers rebind them against the
//! originating submap when needed.

use nalgebra::Vector3;
use thiserror::Error;

use crate::descriptor::Descriptor;
use crate::grid::VoxelIndex;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum DumpError {
    #[error("input shorter than the dump header")]
    TruncatedHeader,
    #[error("n_div {0} outside the supported range 2..=64")]
    InvalidNDiv(u32),
    #[error("record payload length mismatch: expected {expected} bytes, found {found}")]
    LengthMismatch { expected: u64, found: usize },
    #[error("descriptor {index} has wrong length {len}")]
    WrongDescriptorLength { index: usize, len: usize },
    #[error("record {index} contains a non-finite value")]
    NonFiniteValue { index: u64 },
}

/// Serializes descriptors; all must have length 2·n_div² + 2.
pub fn write_descriptor_dump(
    descriptors: &[Descriptor],
    n_div: usize,
) -> Result<Vec<u8>, DumpError> {
    let len = 2 * n_div * n_div + 2;
    let record_len = 12 + 1 + 4 * len;
    let mut out = Vec::with_capacity(12 + descriptors.len() * record_len);
    out.extend_from_slice(&(n_div as u32).to_le_bytes());
    out.extend_from_slice(&(descriptors.len() as u64).to_le_bytes());
    for (index, d) in descriptors.iter().enumerate() {
        if d.values.len() != len {
            return Err(DumpError::WrongDescriptorLength {
                index,
                len: d.values.len(),
            });
        }
        out.extend_from_slice(&d.keypoint.i.to_le_bytes());
        out.extend_from_slice(&d.keypoint.j.to_le_bytes());
        out.extend_from_slice(&d.keypoint.k.to_le_bytes());
        out.push(d.lrf_ordinal);
        for v in &d.values {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

/// Parses a dump, returning `(n_div, descriptors)`. Positions are zeroed;
/// values are widened back to f64.
pub fn read_descriptor_dump(bytes: &[u8]) -> Result<(usize, Vec<Descriptor>), DumpError> {
    if bytes.len() < 12 {
        return Err(DumpError::TruncatedHeader);
    }
    let n_div = u32::from_le_bytes(bytes[0..4].try_into().unwrap());
    if !(2..=64).contains(&n_div) {
        return Err(DumpError::InvalidNDiv(n_div));
    }
    let n_div = n_div as usize;
    let count = u64::from_le_bytes(bytes[4..12].try_into().unwrap());
    let len = 2 * n_div * n_div + 2;
    let record_len = (12 + 1 + 4 * len) as u64;

    let found = bytes.len() - 12;
    let expected = count
        .checked_mul(record_len)
        .ok_or(DumpError::LengthMismatch {
            expected: u64::MAX,
            found,
        })?;
    if expected != found as u64 {
        return Err(DumpError::LengthMismatch { expected, found });
    }

    let mut out = Vec::with_capacity(count.min(1 << 20) as usize);
    let mut pos = 12usize;
    for index in 0..count {
        let i = i32::from_le_bytes(bytes[pos..pos + 4].try_into().unwrap());
        let j = i32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap());
        let k = i32::from_le_bytes(bytes[pos + 8..pos + 12].try_into().unwrap());
        let lrf_ordinal = bytes[pos + 12];
        pos += 13;
        let mut values = Vec::with_capacity(len);
        for _ in 0..len {
            let v = f32::from_le_bytes(bytes[pos..pos + 4].try_into().unwrap());
            if !v.is_finite() {
                return Err(DumpError::NonFiniteValue { index });
            }
            values.push(v as f64);
            pos += 4;
        }
        out.push(Descriptor {
            values,
            keypoint: VoxelIndex::new(i, j, k),
            position: Vector3::zeros(),
            lrf_ordinal,
        });
    }
    Ok((n_div, out))
}
