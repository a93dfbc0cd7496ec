//! OSAV v1: little-endian activation matrix with labels.
//!
//! ```text
//! offset  size      field
//! 0       4         magic "OSAV"
//! 4       1         version (1)
//! 5       1         reserved (0)
//! 6       4         N, u32
//! 10      4         K, u32
//! 14      4*N*K     activations, f32, row-major
//! ..      4*N       labels, i32 (-1 = unknown)
//! ```

use std::fs;
use std::path::Path;

use crate::activation::ActivationSet;
use crate::error::{Error, Result};

pub const OSAV_MAGIC: [u8; 4] = *b"OSAV";
pub const OSAV_VERSION: u8 = 1;
const HEADER_LEN: usize = 14;

pub fn encode_osav(set: &ActivationSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * set.raw().len() + 4 * set.len());
    out.extend_from_slice(&OSAV_MAGIC);
    out.push(OSAV_VERSION);
    out.push(0);
    out.extend_from_slice(&(set.len() as u32).to_le_bytes());
    out.extend_from_slice(&(set.num_classes() as u32).to_le_bytes());
    for v in set.raw() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for l in set.labels() {
        out.extend_from_slice(&l.to_le_bytes());
    }
    out
}

fn u32_at(bytes: &[u8], offset: usize) -> u32 {
    u32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap())
}

pub fn decode_osav(bytes: &[u8]) -> Result<ActivationSet> {
    let truncated = |expected: u64| Error::TruncatedFile {
        expected,
        actual: bytes.len() as u64,
    };
    if bytes.len() < 4 {
        return Err(truncated(HEADER_LEN as u64));
    }
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if magic != OSAV_MAGIC {
        return Err(Error::BadMagic(magic));
    }
    if bytes.len() < HEADER_LEN {
        return Err(truncated(HEADER_LEN as u64));
    }
    if bytes[4] != OSAV_VERSION {
        return Err(Error::UnsupportedVersion(bytes[4]));
    }
    let n = u32_at(bytes, 6) as u64;
    let k = u32_at(bytes, 10) as u64;
    let expected = HEADER_LEN as u64 + 4 * n * k + 4 * n;
    match (bytes.len() as u64).cmp(&expected) {
        std::cmp::Ordering::Less => return Err(truncated(expected)),
        std::cmp::Ordering::Greater => {
            return Err(Error::TrailingData {
                expected,
                actual: bytes.len() as u64,
            })
        }
        std::cmp::Ordering::Equal => {}
    }
    let (n, k) = (n as usize, k as usize);
    let body = &bytes[HEADER_LEN..];
    let (matrix, labels) = body.split_at(4 * n * k);
    let activations: Vec<f32> = matrix
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let labels: Vec<i32> = labels
        .chunks_exact(4)
        .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    ActivationSet::new(activations, labels, k)
}

pub fn read_activations(path: impl AsRef<Path>) -> Result<ActivationSet> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_osav(&bytes)
}

pub fn write_activations(set: &ActivationSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_osav(set)).map_err(|e| Error::io(path, e))
}
