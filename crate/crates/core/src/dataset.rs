//! Binary training-sample files.
//!
//! All integers little-endian.
//!
//! ```text
//! header:  "MWDS" | version u32 | vocab size u32 | sample count u64
//! record:  input tokens   256 × u8
//!          target tokens  256 × u8
//!          target action  u8
//!          slot sidecar   32 bytes: (row i8, col i8) for each of the 13
//!                         slots, -128 for empty slots, then 6 zero bytes
//!          real-action    256-bit bitmap
//!          est-action     256-bit bitmap
//! ```
//!
//! The masked set is not stored; it is the set of `Pad` positions of the
//! target.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{CoreError, Result};
use crate::grid::Action;
use crate::tokenizer::{
    PositionSet, SreMeta, Tokens, TrainingSample, Vocab, WeightSets, AGENT_SLOTS, SEQ_LEN,
};

pub const MAGIC: &[u8; 4] = b"MWDS";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 20;
pub const SIDECAR_LEN: usize = 32;
pub const RECORD_LEN: usize = SEQ_LEN * 2 + 1 + SIDECAR_LEN + SEQ_LEN / 8 * 2;
const EMPTY_SLOT: i8 = -128;

/// A training sample as stored on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub input: Tokens,
    pub target: Tokens,
    pub action: Action,
    /// Position of each occupied input slot relative to the ego agent.
    pub slot_coords: [Option<(i8, i8)>; AGENT_SLOTS],
    pub real_action: PositionSet,
    pub est_action: PositionSet,
}

impl Record {
    pub fn masked(&self) -> PositionSet {
        PositionSet::from_positions((0..SEQ_LEN).filter(|&k| self.target[k] == Vocab::PAD))
    }

    pub fn weights(&self) -> WeightSets {
        WeightSets { masked: self.masked(), real_action: self.real_action, est_action: self.est_action }
    }

    /// Spatial-encoding inputs of the input observation.
    pub fn sre_meta(&self) -> SreMeta {
        SreMeta::from_tokens(&self.input)
    }

    fn encode(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.input);
        out.extend_from_slice(&self.target);
        out.push(self.action.code());
        let mut sidecar = [0u8; SIDECAR_LEN];
        for (slot, coords) in self.slot_coords.iter().enumerate() {
            let (r, c) = coords.unwrap_or((EMPTY_SLOT, EMPTY_SLOT));
            sidecar[2 * slot] = r as u8;
            sidecar[2 * slot + 1] = c as u8;
        }
        out.extend_from_slice(&sidecar);
        out.extend_from_slice(&self.real_action.to_bytes());
        out.extend_from_slice(&self.est_action.to_bytes());
    }

    fn decode(buf: &[u8; RECORD_LEN]) -> Result<Self> {
        let mut input = [0u8; SEQ_LEN];
        let mut target = [0u8; SEQ_LEN];
        input.copy_from_slice(&buf[..SEQ_LEN]);
        target.copy_from_slice(&buf[SEQ_LEN..2 * SEQ_LEN]);
        if let Some(bad) = input.iter().chain(&target).find(|&&t| t as usize >= Vocab::SIZE) {
            return Err(CoreError::CorruptRecord(format!("token id {bad} out of range")));
        }
        let mut off = 2 * SEQ_LEN;
        let action = Action::from_code(buf[off])
            .ok_or_else(|| CoreError::CorruptRecord(format!("action code {}", buf[off])))?;
        off += 1;
        let mut slot_coords = [None; AGENT_SLOTS];
        for (slot, coords) in slot_coords.iter_mut().enumerate() {
            let (r, c) = (buf[off + 2 * slot] as i8, buf[off + 2 * slot + 1] as i8);
            if r != EMPTY_SLOT {
                *coords = Some((r, c));
            }
        }
        off += SIDECAR_LEN;
        let bitmap = |o: usize| -> PositionSet {
            let mut bytes = [0u8; SEQ_LEN / 8];
            bytes.copy_from_slice(&buf[o..o + SEQ_LEN / 8]);
            PositionSet::from_bytes(&bytes)
        };
        let real_action = bitmap(off);
        let est_action = bitmap(off + SEQ_LEN / 8);
        Ok(Self { input, target, action, slot_coords, real_action, est_action })
    }
}

impl From<&TrainingSample> for Record {
    fn from(sample: &TrainingSample) -> Self {
        let mut slot_coords = [None; AGENT_SLOTS];
        for (coords, geom) in slot_coords.iter_mut().zip(&sample.input.sre_meta.slots) {
            *coords = geom.map(|g| (g.pos.0 as i8, g.pos.1 as i8));
        }
        Self {
            input: sample.input.tokens,
            target: sample.target_tokens,
            action: sample.target_action,
            slot_coords,
            real_action: sample.weights.real_action,
            est_action: sample.weights.est_action,
        }
    }
}

pub fn write_dataset<W: Write>(mut w: W, records: &[Record]) -> Result<()> {
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(MAGIC);
    header.extend_from_slice(&VERSION.to_le_bytes());
    header.extend_from_slice(&(Vocab::SIZE as u32).to_le_bytes());
    header.extend_from_slice(&(records.len() as u64).to_le_bytes());
    w.write_all(&header)?;
    let mut buf = Vec::with_capacity(RECORD_LEN);
    for r in records {
        buf.clear();
        r.encode(&mut buf);
        debug_assert_eq!(buf.len(), RECORD_LEN);
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset<R: Read>(mut r: R) -> Result<Vec<Record>> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header).map_err(|_| CoreError::BadMagic)?;
    if &header[..4] != MAGIC {
        return Err(CoreError::BadMagic);
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(CoreError::VersionMismatch(version));
    }
    let vocab = u32::from_le_bytes(header[8..12].try_into().unwrap());
    if vocab as usize != Vocab::SIZE {
        return Err(CoreError::VocabMismatch { expected: Vocab::SIZE as u32, found: vocab });
    }
    let count = u64::from_le_bytes(header[12..20].try_into().unwrap());
    let mut records = Vec::with_capacity(count.min(1 << 20) as usize);
    let mut buf = [0u8; RECORD_LEN];
    for i in 0..count {
        r.read_exact(&mut buf)
            .map_err(|e| CoreError::CorruptRecord(format!("record {i}: {e}")))?;
        records.push(Record::decode(&buf)?);
    }
    Ok(records)
}

pub fn save_dataset(path: impl AsRef<Path>, records: &[Record]) -> Result<()> {
    write_dataset(BufWriter::new(File::create(path)?), records)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<Record>> {
    read_dataset(BufReader::new(File::open(path)?))
}
