//! Bit-exact envelope encoding.
//!
//! Layout, all integers little-endian:
//!
//! | bytes | field |
//! |-------|-------|
//! | 4 | magic `EVAS` |
//! | 1 | version |
//! | 1 | protocol id |
//! | 8 | session id |
//! | 2 | step id |
//! | 1 | sender role |
//! | 1 | receiver role |
//! | 1 | matrix count |
//!
//! followed, per matrix, by `rows: u32`, `cols: u32` and `rows * cols` f64
//! values in row-major order. Over TCP each encoded envelope is preceded by
//! a 4-byte big-endian frame length.

use std::io::{Read, Write};

use crate::matrix::Matrix;

use super::{ProtocolId, Role, TransportError};

pub const MAGIC: [u8; 4] = *b"EVAS";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 19;
pub const MATRIX_HEADER_LEN: usize = 8;
/// Bytes per matrix element (64-bit floats).
pub const ELEMENT_BYTES: usize = 8;
/// Upper bound on a single frame, guards against corrupt length prefixes.
pub const MAX_FRAME_LEN: usize = 1 << 30;

/// One directed protocol message.
#[derive(Clone, Debug, PartialEq)]
pub struct Envelope {
    pub protocol: ProtocolId,
    pub session: u64,
    pub step: u16,
    pub sender: Role,
    pub receiver: Role,
    pub matrices: Vec<Matrix>,
}

impl Envelope {
    pub fn payload_bytes(&self) -> usize {
        self.matrices.iter().map(|m| m.len() * ELEMENT_BYTES).sum()
    }

    pub fn header_bytes(&self) -> usize {
        HEADER_LEN + MATRIX_HEADER_LEN * self.matrices.len()
    }

    pub fn encoded_len(&self) -> usize {
        self.payload_bytes() + self.header_bytes()
    }

    pub fn encode(&self) -> Result<Vec<u8>, TransportError> {
        if self.matrices.len() > u8::MAX as usize {
            return Err(TransportError::Malformed(format!(
                "{} matrices exceed the per-envelope limit",
                self.matrices.len()
            )));
        }
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(self.protocol as u8);
        out.extend_from_slice(&self.session.to_le_bytes());
        out.extend_from_slice(&self.step.to_le_bytes());
        out.push(self.sender as u8);
        out.push(self.receiver as u8);
        out.push(self.matrices.len() as u8);
        for m in &self.matrices {
            let rows = u32::try_from(m.rows()).map_err(|_| too_big(m))?;
            let cols = u32::try_from(m.cols()).map_err(|_| too_big(m))?;
            out.extend_from_slice(&rows.to_le_bytes());
            out.extend_from_slice(&cols.to_le_bytes());
            for x in m.data() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, TransportError> {
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(4)? != MAGIC {
            return Err(TransportError::Malformed("bad magic".into()));
        }
        let version = cur.u8()?;
        if version != VERSION {
            return Err(TransportError::Malformed(format!("unsupported version {version}")));
        }
        let protocol = ProtocolId::try_from(cur.u8()?)?;
        let session = u64::from_le_bytes(cur.take(8)?.try_into().unwrap());
        let step = u16::from_le_bytes(cur.take(2)?.try_into().unwrap());
        let sender = Role::try_from(cur.u8()?)?;
        let receiver = Role::try_from(cur.u8()?)?;
        let count = cur.u8()? as usize;
        let mut matrices = Vec::with_capacity(count);
        for _ in 0..count {
            let rows = cur.u32()? as usize;
            let cols = cur.u32()? as usize;
            let len = rows
                .checked_mul(cols)
                .filter(|&l| l.checked_mul(ELEMENT_BYTES).is_some_and(|b| b <= bytes.len()))
                .ok_or_else(|| TransportError::Malformed(format!("matrix {rows}x{cols} too large")))?;
            let raw = cur.take(len * ELEMENT_BYTES)?;
            let data = raw
                .chunks_exact(ELEMENT_BYTES)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            matrices.push(Matrix::from_vec(rows, cols, data)?);
        }
        if cur.pos != bytes.len() {
            return Err(TransportError::Malformed(format!(
                "{} trailing bytes",
                bytes.len() - cur.pos
            )));
        }
        Ok(Self {
            protocol,
            session,
            step,
            sender,
            receiver,
            matrices,
        })
    }
}

fn too_big(m: &Matrix) -> TransportError {
    TransportError::Malformed(format!("matrix {}x{} exceeds u32 dimensions", m.rows(), m.cols()))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], TransportError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| TransportError::Malformed("truncated envelope".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, TransportError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, TransportError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn write_frame<W: Write>(w: &mut W, payload: &[u8]) -> std::io::Result<()> {
    let len = u32::try_from(payload.len())
        .map_err(|_| std::io::Error::new(std::io::ErrorKind::InvalidInput, "frame too large"))?;
    w.write_all(&len.to_be_bytes())?;
    w.write_all(payload)?;
    w.flush()
}

/// Reads one frame; `Ok(None)` on a clean end of stream.
pub fn read_frame<R: Read>(r: &mut R) -> std::io::Result<Option<Vec<u8>>> {
    let mut len = [0u8; 4];
    match r.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e),
    }
    let len = u32::from_be_bytes(len) as usize;
    if len > MAX_FRAME_LEN {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("frame length {len} over limit"),
        ));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    Ok(Some(buf))
}
