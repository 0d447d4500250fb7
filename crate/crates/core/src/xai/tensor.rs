//! `TNSR` v1 binary tensors.
//!
//! Layout: `TNSR` magic, version byte (1), dtype byte (1 = f32), rank byte,
//! `rank` little-endian u32 dimensions, then the row-major little-endian
//! payload.

use std::path::Path;

use crate::error::{Error, Result};
use crate::io::write_atomic;

const MAGIC: &[u8; 4] = b"TNSR";
const VERSION: u8 = 1;
const DTYPE_F32: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor32 {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor32 {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        if shape.is_empty() || shape.len() > u8::MAX as usize {
            return Err(Error::Argument(format!(
                "tensor rank {} not in 1..=255",
                shape.len()
            )));
        }
        if shape.iter().any(|&d| d > u32::MAX as usize) {
            return Err(Error::Argument("tensor dimension exceeds u32".into()));
        }
        let expected = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Argument("tensor size overflows".into()))?;
        if expected != data.len() {
            return Err(Error::Argument(format!(
                "shape {shape:?} needs {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(7 + 4 * self.shape.len() + 4 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(DTYPE_F32);
        out.push(self.shape.len() as u8);
        for &d in &self.shape {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 7 {
            return Err(Error::Format("TNSR header truncated".into()));
        }
        if &bytes[0..4] != MAGIC {
            return Err(Error::Format(format!(
                "bad magic {:?}",
                String::from_utf8_lossy(&bytes[0..4])
            )));
        }
        if bytes[4] != VERSION {
            return Err(Error::Format(format!(
                "unsupported TNSR version {}",
                bytes[4]
            )));
        }
        if bytes[5] != DTYPE_F32 {
            return Err(Error::Format(format!("unsupported dtype tag {}", bytes[5])));
        }
        let rank = bytes[6] as usize;
        if rank == 0 {
            return Err(Error::Format("rank 0 tensor".into()));
        }
        let dims_end = 7 + 4 * rank;
        if bytes.len() < dims_end {
            return Err(Error::Format("TNSR dimensions truncated".into()));
        }
        let shape: Vec<usize> = bytes[7..dims_end]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as usize)
            .collect();
        let count = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| Error::Format("TNSR size overflows".into()))?;
        let payload = &bytes[dims_end..];
        if payload.len() != count {
            return Err(Error::Format(format!(
                "TNSR payload has {} bytes, shape {shape:?} needs {count}",
                payload.len()
            )));
        }
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self { shape, data })
    }
}

pub fn write_tensor(path: &Path, tensor: &Tensor32) -> Result<()> {
    write_atomic(path, &tensor.to_bytes())
}

pub fn read_tensor(path: &Path) -> Result<Tensor32> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Tensor32::from_bytes(&bytes).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_by_two_layout() {
        let t = Tensor32::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let bytes = t.to_bytes();
        assert_eq!(&bytes[..7], b"TNSR\x01\x01\x02");
        assert_eq!(&bytes[7..15], &[2, 0, 0, 0, 2, 0, 0, 0]);
        assert_eq!(bytes.len(), 15 + 16);
        assert_eq!(&bytes[15..19], &1.0f32.to_le_bytes());
        assert_eq!(Tensor32::from_bytes(&bytes).unwrap(), t);
    }

    #[test]
    fn file_round_trip_rank3() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.act.tnsr");
        let t = Tensor32::new(vec![2, 2, 2], (0..8).map(|v| v as f32 * 0.5).collect()).unwrap();
        write_tensor(&p, &t).unwrap();
        let back = read_tensor(&p).unwrap();
        assert_eq!(back.shape(), &[2, 2, 2]);
        assert_eq!(back, t);
    }

    #[test]
    fn rejects_corrupt_headers() {
        let good = Tensor32::new(vec![3], vec![1.0, 2.0, 3.0])
            .unwrap()
            .to_bytes();
        let mut bad = good.clone();
        bad[..4].copy_from_slice(b"XXXX");
        assert!(matches!(Tensor32::from_bytes(&bad), Err(Error::Format(_))));
        let mut bad = good.clone();
        bad[4] = 2;
        assert!(Tensor32::from_bytes(&bad).is_err());
        let mut bad = good.clone();
        bad[5] = 7;
        assert!(Tensor32::from_bytes(&bad).is_err());
        assert!(Tensor32::from_bytes(&good[..good.len() - 1]).is_err());
        assert!(Tensor32::from_bytes(&good[..5]).is_err());
        let mut long = good;
        long.push(0);
        assert!(Tensor32::from_bytes(&long).is_err());
    }

    #[test]
    fn constructor_checks() {
        assert!(Tensor32::new(vec![], vec![]).is_err());
        assert!(Tensor32::new(vec![2, 3], vec![0.0; 5]).is_err());
    }

    proptest! {
        #[test]
        fn bytes_round_trip(shape in prop::collection::vec(1usize..5, 1..=4), seed in any::<u32>()) {
            let n: usize = shape.iter().product();
            let data: Vec<f32> = (0..n).map(|i| f32::from_bits(seed.wrapping_mul(2654435761).wrapping_add(i as u32 * 40503))).collect();
            let t = Tensor32::new(shape, data).unwrap();
            let back = Tensor32::from_bytes(&t.to_bytes()).unwrap();
            prop_assert_eq!(back.shape(), t.shape());
            let same = back.data().iter().zip(t.data()).all(|(a, b)| a.to_bits() == b.to_bits());
            prop_assert!(same);
        }
    }
}
