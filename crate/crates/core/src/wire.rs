//! Binary codec for the palm board's serial stream.
//!
//! Every message is self-synchronizing:
//!
//! ```text
//! offset  size  field
//! 0       2     sync marker 0xAA 0x55
//! 2       1     unit_id (0 = palm, 1..=11 = finger joints)
//! 3       1     flags (bit 0 = tactile grid present, other bits zero)
//! 4       4     timestamp_us, u32 little-endian
//! 8       36    acc, gyro, mag as 9 x f32 little-endian (x, y, z each)
//! 44      72    tactile grid, 36 x u16 little-endian grams (only if flagged)
//! 44|116  2     CRC-16/CCITT-FALSE over bytes [2, crc_offset), little-endian
//! ```

use crc::{Crc, CRC_16_IBM_3740};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF, no reflection).
const CCITT_FALSE: Crc<u16> = Crc::<u16>::new(&CRC_16_IBM_3740);

pub const SYNC: [u8; 2] = [0xAA, 0x55];
pub const MAX_UNIT_ID: u8 = 11;
pub const TACTILE_CELLS: usize = 36;
pub const FLAG_TACTILE: u8 = 0x01;

const HEADER_LEN: usize = 8;
const IMU_LEN: usize = 9 * 4;
const TACTILE_LEN: usize = TACTILE_CELLS * 2;
const CRC_LEN: usize = 2;

/// Length of a message without the tactile grid.
pub const BASE_MESSAGE_LEN: usize = HEADER_LEN + IMU_LEN + CRC_LEN;
/// Length of a message carrying the tactile grid.
pub const TACTILE_MESSAGE_LEN: usize = BASE_MESSAGE_LEN + TACTILE_LEN;

/// Default tick between IMU samples on the stream.
pub const DEFAULT_TICK_INTERVAL_US: u32 = 2000;
pub const DEFAULT_BAUD: u32 = 115_200;

/// One 9-axis reading from a palm or finger-joint unit.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorFrame {
    pub unit_id: u8,
    pub timestamp_us: u32,
    /// m/s²
    pub acc: [f32; 3],
    /// rad/s
    pub gyro: [f32; 3],
    /// µT
    pub mag: [f32; 3],
    /// 6x6 force grid in grams, row-major.
    pub tactile: Option<[u16; TACTILE_CELLS]>,
}

impl SensorFrame {
    pub fn imu(unit_id: u8, timestamp_us: u32, acc: [f32; 3], gyro: [f32; 3], mag: [f32; 3]) -> Self {
        Self { unit_id, timestamp_us, acc, gyro, mag, tactile: None }
    }

    pub fn is_valid(&self) -> bool {
        self.unit_id <= MAX_UNIT_ID
    }

    pub fn encoded_len(&self) -> usize {
        message_len(self.tactile.is_some())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrameStreamConfig {
    pub tick_interval_us: u32,
    pub baud: u32,
}

impl Default for FrameStreamConfig {
    fn default() -> Self {
        Self { tick_interval_us: DEFAULT_TICK_INTERVAL_US, baud: DEFAULT_BAUD }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    /// The buffer ends before a full message. `skipped` leading bytes hold no
    /// sync marker and can be discarded before retrying with more data.
    #[error("incomplete frame ({skipped} leading bytes skipped)")]
    IncompleteFrame { skipped: usize },
    /// Checksum failed; `consumed` bytes (through the bad sync marker) can be dropped.
    #[error("CRC mismatch: expected {expected:#06x}, got {actual:#06x}")]
    CrcMismatch { expected: u16, actual: u16, consumed: usize },
    /// Checksum passed but a header field is out of range.
    #[error("invalid frame field: {reason}")]
    InvalidField { reason: &'static str, consumed: usize },
}

impl WireError {
    /// Bytes the caller may discard before resuming the scan.
    pub fn consumed(&self) -> usize {
        match *self {
            WireError::IncompleteFrame { skipped } => skipped,
            WireError::CrcMismatch { consumed, .. } | WireError::InvalidField { consumed, .. } => consumed,
        }
    }
}

pub fn message_len(tactile: bool) -> usize {
    if tactile {
        TACTILE_MESSAGE_LEN
    } else {
        BASE_MESSAGE_LEN
    }
}

pub fn crc16(bytes: &[u8]) -> u16 {
    CCITT_FALSE.checksum(bytes)
}

/// Appends the encoded message for `frame` to `out`.
pub fn encode_frame_into(frame: &SensorFrame, out: &mut Vec<u8>) {
    debug_assert!(frame.is_valid(), "unit_id {} out of range", frame.unit_id);
    let start = out.len();
    out.extend_from_slice(&SYNC);
    out.push(frame.unit_id);
    out.push(if frame.tactile.is_some() { FLAG_TACTILE } else { 0 });
    out.extend_from_slice(&frame.timestamp_us.to_le_bytes());
    for v in frame.acc.iter().chain(&frame.gyro).chain(&frame.mag) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    if let Some(grid) = &frame.tactile {
        for g in grid {
            out.extend_from_slice(&g.to_le_bytes());
        }
    }
    let crc = crc16(&out[start + SYNC.len()..]);
    out.extend_from_slice(&crc.to_le_bytes());
}

pub fn encode_frame(frame: &SensorFrame) -> Vec<u8> {
    let mut out = Vec::with_capacity(frame.encoded_len());
    encode_frame_into(frame, &mut out);
    out
}

fn find_sync(bytes: &[u8]) -> Option<usize> {
    bytes.windows(2).position(|w| w == SYNC)
}

fn read_f32(b: &[u8], at: usize) -> f32 {
    f32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn read_vec3(b: &[u8], at: usize) -> [f32; 3] {
    [read_f32(b, at), read_f32(b, at + 4), read_f32(b, at + 8)]
}

/// Decodes the first message in `bytes`, skipping leading garbage.
///
/// On success returns the frame and the number of bytes consumed, including
/// any garbage before the sync marker.
pub fn decode_frame(bytes: &[u8]) -> Result<(SensorFrame, usize), WireError> {
    let Some(offset) = find_sync(bytes) else {
        // A trailing 0xAA may be the first half of a marker.
        let keep = usize::from(bytes.last() == Some(&SYNC[0]));
        return Err(WireError::IncompleteFrame { skipped: bytes.len() - keep });
    };
    let msg = &bytes[offset..];
    let resume = offset + SYNC.len();
    if msg.len() < 4 {
        return Err(WireError::IncompleteFrame { skipped: offset });
    }
    let flags = msg[3];
    let len = message_len(flags & FLAG_TACTILE != 0);
    if msg.len() < len {
        return Err(WireError::IncompleteFrame { skipped: offset });
    }
    let crc_at = len - CRC_LEN;
    let expected = u16::from_le_bytes([msg[crc_at], msg[crc_at + 1]]);
    let actual = crc16(&msg[SYNC.len()..crc_at]);
    if expected != actual {
        return Err(WireError::CrcMismatch { expected, actual, consumed: resume });
    }
    if flags & !FLAG_TACTILE != 0 {
        return Err(WireError::InvalidField { reason: "reserved flag bits set", consumed: resume });
    }
    let unit_id = msg[2];
    if unit_id > MAX_UNIT_ID {
        return Err(WireError::InvalidField { reason: "unit_id out of range", consumed: resume });
    }
    let timestamp_us = u32::from_le_bytes(msg[4..8].try_into().unwrap());
    let tactile = (flags & FLAG_TACTILE != 0).then(|| {
        let mut grid = [0u16; TACTILE_CELLS];
        for (i, g) in grid.iter_mut().enumerate() {
            let at = HEADER_LEN + IMU_LEN + 2 * i;
            *g = u16::from_le_bytes([msg[at], msg[at + 1]]);
        }
        grid
    });
    let frame = SensorFrame {
        unit_id,
        timestamp_us,
        acc: read_vec3(msg, HEADER_LEN),
        gyro: read_vec3(msg, HEADER_LEN + 12),
        mag: read_vec3(msg, HEADER_LEN + 24),
        tactile,
    };
    Ok((frame, offset + len))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DecodedStream {
    pub frames: Vec<SensorFrame>,
    /// Sync markers whose message failed validation or was truncated.
    pub dropped: usize,
}

/// Decodes a complete capture. Corrupt messages are counted, never fatal.
pub fn decode_stream(bytes: &[u8]) -> DecodedStream {
    let mut out = DecodedStream::default();
    let mut pos = 0;
    while pos < bytes.len() {
        match decode_frame(&bytes[pos..]) {
            Ok((frame, used)) => {
                out.frames.push(frame);
                pos += used;
            }
            Err(WireError::IncompleteFrame { skipped }) => {
                let rest = &bytes[pos + skipped..];
                if rest.len() < SYNC.len() || rest[..2] != SYNC {
                    break;
                }
                // Truncated message at end of input: drop it and keep scanning.
                out.dropped += 1;
                pos += skipped + SYNC.len();
            }
            Err(e) => {
                out.dropped += 1;
                pos += e.consumed();
            }
        }
    }
    out
}
