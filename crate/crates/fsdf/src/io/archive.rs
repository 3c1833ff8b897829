//! The FSDF submap archive.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic    4 × u8   "FSDF"
//! version  u32      currently 1; unknown versions are rejected
//! voxel_size   f64
//! truncation   f64
//! pose         12 × f64   row-major 3×3 rotation, then translation
//! voxel_count  u64
//! records      voxel_count × { i32 i, i32 j, i32 k, f32 distance, f32 weight }
//! ```

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::grid::VoxelIndex;
use crate::submap::{SdfSubmap, SdfVoxel};
use crate::transform::RigidTransform;

pub const ARCHIVE_MAGIC: [u8; 4] = *b"FSDF";
pub const ARCHIVE_VERSION: u32 = 1;

const HEADER_LEN: usize = 4 + 4 + 8 + 8 + 12 * 8 + 8;
const RECORD_LEN: usize = 3 * 4 + 2 * 4;
/// Voxel index components must stay hashable (|c| < 2²⁰).
const MAX_INDEX: i32 = (1 << 20) - 1;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ArchiveError {
    #[error("input shorter than the archive header")]
    TruncatedHeader,
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported archive version {0}")]
    UnsupportedVersion(u32),
    #[error("invalid header field: {0}")]
    InvalidHeader(&'static str),
    #[error("record payload length mismatch: expected {expected} bytes, found {found}")]
    LengthMismatch { expected: u64, found: usize },
    #[error("invalid record {index}: {reason}")]
    InvalidRecord { index: u64, reason: &'static str },
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self) -> Option<[u8; N]> {
        let slice = self.bytes.get(self.pos..self.pos + N)?;
        self.pos += N;
        Some(slice.try_into().unwrap())
    }

    fn u32(&mut self) -> Option<u32> {
        self.take::<4>().map(u32::from_le_bytes)
    }

    fn u64(&mut self) -> Option<u64> {
        self.take::<8>().map(u64::from_le_bytes)
    }

    fn i32(&mut self) -> Option<i32> {
        self.take::<4>().map(i32::from_le_bytes)
    }

    fn f32(&mut self) -> Option<f32> {
        self.take::<4>().map(f32::from_le_bytes)
    }

    fn f64(&mut self) -> Option<f64> {
        self.take::<8>().map(f64::from_le_bytes)
    }
}

/// Serializes a submap; records are written in deterministic voxel order.
pub fn write_submap(submap: &SdfSubmap) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + submap.len() * RECORD_LEN);
    out.extend_from_slice(&ARCHIVE_MAGIC);
    out.extend_from_slice(&ARCHIVE_VERSION.to_le_bytes());
    out.extend_from_slice(&submap.voxel_size().to_le_bytes());
    out.extend_from_slice(&submap.truncation().to_le_bytes());
    for r in 0..3 {
        for c in 0..3 {
            out.extend_from_slice(&submap.pose.rotation[(r, c)].to_le_bytes());
        }
    }
    for c in 0..3 {
        out.extend_from_slice(&submap.pose.translation[c].to_le_bytes());
    }
    out.extend_from_slice(&(submap.len() as u64).to_le_bytes());
    for (idx, v) in submap.grid().iter_sorted() {
        out.extend_from_slice(&idx.i.to_le_bytes());
        out.extend_from_slice(&idx.j.to_le_bytes());
        out.extend_from_slice(&idx.k.to_le_bytes());
        out.extend_from_slice(&v.distance.to_le_bytes());
        out.extend_from_slice(&v.weight.to_le_bytes());
    }
    out
}

/// Parses an archive. The submap id is not part of the format; callers
/// assign it.
pub fn read_submap(bytes: &[u8], id: u32) -> Result<SdfSubmap, ArchiveError> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.take::<4>().ok_or(ArchiveError::TruncatedHeader)?;
    if magic != ARCHIVE_MAGIC {
        return Err(ArchiveError::BadMagic);
    }
    let version = r.u32().ok_or(ArchiveError::TruncatedHeader)?;
    if version != ARCHIVE_VERSION {
        return Err(ArchiveError::UnsupportedVersion(version));
    }
    let voxel_size = r.f64().ok_or(ArchiveError::TruncatedHeader)?;
    if !(voxel_size.is_finite() && voxel_size > 0.0) {
        return Err(ArchiveError::InvalidHeader("voxel_size"));
    }
    let truncation = r.f64().ok_or(ArchiveError::TruncatedHeader)?;
    if !(truncation.is_finite() && truncation >= 0.0) {
        return Err(ArchiveError::InvalidHeader("truncation"));
    }
    let mut rotation = Matrix3::zeros();
    for row in 0..3 {
        for col in 0..3 {
            rotation[(row, col)] = r.f64().ok_or(ArchiveError::TruncatedHeader)?;
        }
    }
    let mut translation = Vector3::zeros();
    for c in 0..3 {
        translation[c] = r.f64().ok_or(ArchiveError::TruncatedHeader)?;
    }
    let pose = RigidTransform::new(rotation, translation);
    if !pose.is_valid(1e-6) {
        return Err(ArchiveError::InvalidHeader("pose"));
    }
    let count = r.u64().ok_or(ArchiveError::TruncatedHeader)?;

    let found = bytes.len() - r.pos;
    let expected = count
        .checked_mul(RECORD_LEN as u64)
        .ok_or(ArchiveError::LengthMismatch {
            expected: u64::MAX,
            found,
        })?;
    if expected != found as u64 {
        return Err(ArchiveError::LengthMismatch { expected, found });
    }

    let mut submap = SdfSubmap::new(id, voxel_size, truncation, pose)
        .map_err(|_| ArchiveError::InvalidHeader("pose"))?;
    for record in 0..count {
        let i = r.i32().unwrap();
        let j = r.i32().unwrap();
        let k = r.i32().unwrap();
        let distance = r.f32().unwrap();
        let weight = r.f32().unwrap();
        if i.abs() > MAX_INDEX || j.abs() > MAX_INDEX || k.abs() > MAX_INDEX {
            return Err(ArchiveError::InvalidRecord {
                index: record,
                reason: "voxel index out of range",
            });
        }
        if !distance.is_finite() {
            return Err(ArchiveError::InvalidRecord {
                index: record,
                reason: "non-finite distance",
            });
        }
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(ArchiveError::InvalidRecord {
                index: record,
                reason: "invalid weight",
            });
        }
        submap.set(VoxelIndex::new(i, j, k), SdfVoxel { distance, weight });
    }
    Ok(submap)
}

/// Writes an archive file.
pub fn save_submap(path: &std::path::Path, submap: &SdfSubmap) -> std::io::Result<()> {
    std::fs::write(path, write_submap(submap))
}

/// Reads an archive file.
pub fn load_submap(path: &std::path::Path, id: u32) -> Result<SdfSubmap, std::io::Error> {
    let bytes = std::fs::read(path)?;
    read_submap(&bytes, id)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()))
}
