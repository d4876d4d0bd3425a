//! Classical-channel messages and their binary frame format.
//!
//! ```text
//! frame   = magic(2) tag(1) iteration(u32 LE) payload_len(u32 LE) payload
//! magic   = 0xB1 0xC4
//! tag     = 0x01 MeasurementReport | 0x02 CostReport | 0x03 Terminate
//! 0x01    = count(u32 LE) { index(u32 LE) n(u8) letters(n x u8: X=1 Y=2 Z=3) bits(ceil(n/8)) }*
//! 0x02    = cost(f64 LE)
//! 0x03    = reason(u8: 0 converged, 1 i_max, 2 error)
//! ```
//!
//! Outcome bits are packed LSB-first, qubit `q` in bit `q % 8` of byte
//! `q / 8`; a set bit means outcome +1.

use crate::error::{CodecError, Result};
use crate::qcore::{Pauli, PauliString};
use crate::tomography::MeasurementRecord;

pub const MAGIC: [u8; 2] = [0xB1, 0xC4];
pub const HEADER_LEN: usize = 11;

const TAG_MEASUREMENT: u8 = 0x01;
const TAG_COST: u8 = 0x02;
const TAG_TERMINATE: u8 = 0x03;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TerminateReason {
    Converged,
    MaxIterations,
    Error,
}

impl TerminateReason {
    pub fn code(self) -> u8 {
        match self {
            TerminateReason::Converged => 0,
            TerminateReason::MaxIterations => 1,
            TerminateReason::Error => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(TerminateReason::Converged),
            1 => Some(TerminateReason::MaxIterations),
            2 => Some(TerminateReason::Error),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProtocolMessage {
    MeasurementReport {
        iteration: u32,
        records: Vec<MeasurementRecord>,
    },
    CostReport {
        iteration: u32,
        cost: f64,
    },
    Terminate {
        iteration: u32,
        reason: TerminateReason,
    },
}

impl ProtocolMessage {
    pub fn iteration(&self) -> u32 {
        match self {
            ProtocolMessage::MeasurementReport { iteration, .. }
            | ProtocolMessage::CostReport { iteration, .. }
            | ProtocolMessage::Terminate { iteration, .. } => *iteration,
        }
    }

    fn tag(&self) -> u8 {
        match self {
            ProtocolMessage::MeasurementReport { .. } => TAG_MEASUREMENT,
            ProtocolMessage::CostReport { .. } => TAG_COST,
            ProtocolMessage::Terminate { .. } => TAG_TERMINATE,
        }
    }
}

fn letter_code(p: Pauli) -> u8 {
    match p {
        Pauli::I => 0,
        Pauli::X => 1,
        Pauli::Y => 2,
        Pauli::Z => 3,
    }
}

/// Serializes `msg` into one frame.
pub fn encode_message(msg: &ProtocolMessage) -> Vec<u8> {
    let mut payload = Vec::new();
    match msg {
        ProtocolMessage::MeasurementReport { records, .. } => {
            payload.extend_from_slice(&(records.len() as u32).to_le_bytes());
            for r in records {
                payload.extend_from_slice(&r.transmission_index.to_le_bytes());
                payload.push(r.n_qubits() as u8);
                payload.extend(r.basis.letters().iter().map(|&p| letter_code(p)));
                let mut bits = vec![0u8; r.n_qubits().div_ceil(8)];
                for (q, &o) in r.outcomes.iter().enumerate() {
                    if o == 1 {
                        bits[q / 8] |= 1 << (q % 8);
                    }
                }
                payload.extend_from_slice(&bits);
            }
        }
        ProtocolMessage::CostReport { cost, .. } => payload.extend_from_slice(&cost.to_le_bytes()),
        ProtocolMessage::Terminate { reason, .. } => payload.push(reason.code()),
    }
    let mut frame = Vec::with_capacity(HEADER_LEN + payload.len());
    frame.extend_from_slice(&MAGIC);
    frame.push(msg.tag());
    frame.extend_from_slice(&msg.iteration().to_le_bytes());
    frame.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    frame.extend_from_slice(&payload);
    frame
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        let available = self.buf.len() - self.pos;
        if n > available {
            return Err(CodecError::Truncated {
                needed: n,
                available,
            });
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn f64(&mut self) -> Result<f64, CodecError> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
}

/// Parses exactly one frame; trailing bytes are rejected as malformed.
pub fn decode_message(bytes: &[u8]) -> Result<ProtocolMessage, CodecError> {
    let (msg, used) = decode_prefix(bytes)?;
    if used != bytes.len() {
        return Err(CodecError::Malformed(format!(
            "{} trailing bytes after frame",
            bytes.len() - used
        )));
    }
    Ok(msg)
}

/// Parses one frame from the front of `bytes`, returning it and the number
/// of bytes consumed.
pub fn decode_prefix(bytes: &[u8]) -> Result<(ProtocolMessage, usize), CodecError> {
    let mut head = Cursor { buf: bytes, pos: 0 };
    let magic = head.take(2)?;
    if magic != MAGIC {
        return Err(CodecError::BadMagic(u16::from_be_bytes([
            magic[0], magic[1],
        ])));
    }
    let tag = head.u8()?;
    if !(TAG_MEASUREMENT..=TAG_TERMINATE).contains(&tag) {
        return Err(CodecError::UnknownTag(tag));
    }
    let iteration = head.u32()?;
    let len = head.u32()? as usize;
    let payload = head.take(len)?;
    let mut cur = Cursor {
        buf: payload,
        pos: 0,
    };

    let msg = match tag {
        TAG_MEASUREMENT => {
            let count = cur.u32()? as usize;
            // each record needs at least index + n + one letter + one byte
            if count > payload.len() / 7 {
                return Err(CodecError::Malformed(format!(
                    "record count {count} exceeds payload"
                )));
            }
            let mut records = Vec::with_capacity(count);
            for _ in 0..count {
                let index = cur.u32()?;
                let n = cur.u8()? as usize;
                if n == 0 {
                    return Err(CodecError::Malformed("record with zero qubits".into()));
                }
                let letters = cur
                    .take(n)?
                    .iter()
                    .map(|&c| match c {
                        1 => Ok(Pauli::X),
                        2 => Ok(Pauli::Y),
                        3 => Ok(Pauli::Z),
                        other => Err(CodecError::Malformed(format!("basis letter code {other}"))),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let bits = cur.take(n.div_ceil(8))?;
                if !n.is_multiple_of(8) && bits[n / 8] >> (n % 8) != 0 {
                    return Err(CodecError::Malformed("padding bits set".into()));
                }
                let outcomes = (0..n)
                    .map(|q| {
                        if bits[q / 8] >> (q % 8) & 1 == 1 {
                            1
                        } else {
                            -1
                        }
                    })
                    .collect();
                records.push(MeasurementRecord {
                    transmission_index: index,
                    basis: PauliString::new(letters),
                    outcomes,
                });
            }
            ProtocolMessage::MeasurementReport { iteration, records }
        }
        TAG_COST => ProtocolMessage::CostReport {
            iteration,
            cost: cur.f64()?,
        },
        _ => {
            let code = cur.u8()?;
            let reason = TerminateReason::from_code(code)
                .ok_or_else(|| CodecError::Malformed(format!("terminate reason {code}")))?;
            ProtocolMessage::Terminate { iteration, reason }
        }
    };
    if cur.pos != payload.len() {
        return Err(CodecError::Malformed(format!(
            "payload length {len} but {} bytes used",
            cur.pos
        )));
    }
    Ok((msg, HEADER_LEN + len))
}
