//! Binary update frames.
//!
//! Layout, little-endian: `b"GSUP"`, version `u8`, revision `u64`, count
//! `u32`, then `count` centers as 3 x f32 and `count` quaternions as
//! 4 x f32 (w, x, y, z).

use gsdeform::GaussianCloud;
use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"GSUP";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 4 + 1 + 8 + 4;

#[derive(Clone, Debug, PartialEq)]
pub struct UpdateFrame {
    pub revision: u64,
    pub centers: Vec<[f32; 3]>,
    pub rotations: Vec<[f32; 4]>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FrameError {
    #[error("frame too short: {0} bytes")]
    Truncated(usize),
    #[error("bad magic")]
    Magic,
    #[error("unsupported frame version {0}")]
    Version(u8),
    #[error("payload length {actual} does not match count {count}")]
    Length { count: u32, actual: usize },
}

impl UpdateFrame {
    pub fn from_cloud(revision: u64, cloud: &GaussianCloud) -> Self {
        Self {
            revision,
            centers: cloud.centers().iter().map(|c| [c.x as f32, c.y as f32, c.z as f32]).collect(),
            rotations: cloud
                .rotations()
                .iter()
                .map(|q| [q.w as f32, q.i as f32, q.j as f32, q.k as f32])
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn encode(&self) -> Vec<u8> {
        assert_eq!(self.centers.len(), self.rotations.len());
        let mut out = Vec::with_capacity(HEADER_LEN + self.len() * 28);
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&self.revision.to_le_bytes());
        out.extend_from_slice(&(self.len() as u32).to_le_bytes());
        for v in self.centers.iter().flatten().chain(self.rotations.iter().flatten()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, FrameError> {
        if bytes.len() < HEADER_LEN {
            return Err(FrameError::Truncated(bytes.len()));
        }
        if bytes[..4] != MAGIC {
            return Err(FrameError::Magic);
        }
        if bytes[4] != VERSION {
            return Err(FrameError::Version(bytes[4]));
        }
        let revision = u64::from_le_bytes(bytes[5..13].try_into().unwrap());
        let count = u32::from_le_bytes(bytes[13..17].try_into().unwrap());
        let body = &bytes[HEADER_LEN..];
        if body.len() as u64 != count as u64 * 28 {
            return Err(FrameError::Length { count, actual: body.len() });
        }
        let floats: Vec<f32> = body.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        let (c, r) = floats.split_at(count as usize * 3);
        Ok(Self {
            revision,
            centers: c.chunks_exact(3).map(|v| [v[0], v[1], v[2]]).collect(),
            rotations: r.chunks_exact(4).map(|v| [v[0], v[1], v[2], v[3]]).collect(),
        })
    }
}
