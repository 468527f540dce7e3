//! Params file.
//!
//! ```text
//! "MWLD" | version u32
//! config: d_model u32 | n_layers u32 | n_heads u32 | ffn_mult u32 | vocab u32
//!         | seq_len u32 | use_sre u8 | trained_steps u64 | lr f64 | batch u32
//!         | warmup u32 | seed u64 | tensor count u32
//! tensors, in layout order: rows u32 | cols u32 | rows·cols × f64
//! ```
//!
//! Little-endian throughout.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::config::ModelConfig;
use crate::error::{NeuralError, Result};
use crate::params::{Buffer, Layout, ModelParams};

pub const MAGIC: &[u8; 4] = b"MWLD";
pub const VERSION: u32 = 1;

pub fn write_params<W: Write>(mut w: W, p: &ModelParams) -> Result<()> {
    let c = &p.config;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for v in [c.d_model, c.n_layers, c.n_heads, c.ffn_mult, c.vocab_size, c.seq_len] {
        w.write_all(&(v as u32).to_le_bytes())?;
    }
    w.write_all(&[c.use_sre as u8])?;
    w.write_all(&p.trained_steps.to_le_bytes())?;
    w.write_all(&c.learning_rate.to_le_bytes())?;
    w.write_all(&(c.batch_size as u32).to_le_bytes())?;
    w.write_all(&(c.warmup_steps as u32).to_le_bytes())?;
    w.write_all(&c.seed.to_le_bytes())?;
    w.write_all(&(p.layout.specs.len() as u32).to_le_bytes())?;
    for id in p.layout.ids() {
        let s = p.layout.spec(id);
        w.write_all(&(s.rows as u32).to_le_bytes())?;
        w.write_all(&(s.cols as u32).to_le_bytes())?;
        for v in &p.weights.data[p.layout.range(id)] {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    read_array::<4, _>(r).map(u32::from_le_bytes)
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    read_array::<8, _>(r).map(u64::from_le_bytes)
}

pub fn read_params<R: Read>(mut r: R) -> Result<ModelParams> {
    let mut magic = [0u8; 4];
    if r.read_exact(&mut magic).is_err() || &magic != MAGIC {
        return Err(NeuralError::BadMagic);
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(NeuralError::VersionMismatch(version));
    }
    let mut dims = [0usize; 6];
    for d in &mut dims {
        *d = read_u32(&mut r)? as usize;
    }
    let [d_model, n_layers, n_heads, ffn_mult, vocab_size, seq_len] = dims;
    let use_sre = read_array::<1, _>(&mut r)?[0] != 0;
    let trained_steps = read_u64(&mut r)?;
    let learning_rate = f64::from_le_bytes(read_array::<8, _>(&mut r)?);
    let batch_size = read_u32(&mut r)? as usize;
    let warmup_steps = read_u32(&mut r)? as usize;
    let seed = read_u64(&mut r)?;
    let config = ModelConfig {
        d_model,
        n_layers,
        n_heads,
        ffn_mult,
        vocab_size,
        seq_len,
        use_sre,
        learning_rate,
        batch_size,
        warmup_steps,
        seed,
    };
    config.validate().map_err(|e| NeuralError::ShapeMismatch(e.to_string()))?;
    let layout = Layout::new(&config);
    let n_tensors = read_u32(&mut r)? as usize;
    if n_tensors != layout.specs.len() {
        return Err(NeuralError::ShapeMismatch(format!("{n_tensors} tensors, expected {}", layout.specs.len())));
    }
    let mut weights = Buffer::zeros(&layout);
    for id in layout.ids() {
        let s = layout.spec(id);
        let (rows, cols) = (read_u32(&mut r)? as usize, read_u32(&mut r)? as usize);
        if (rows, cols) != (s.rows, s.cols) {
            return Err(NeuralError::ShapeMismatch(format!(
                "{}: {rows}×{cols} in file, expected {}×{}",
                s.name, s.rows, s.cols
            )));
        }
        for v in &mut weights.data[layout.range(id)] {
            *v = f64::from_le_bytes(read_array::<8, _>(&mut r)?);
        }
    }
    Ok(ModelParams { config, layout, weights, trained_steps })
}

pub fn save_params(p: &ModelParams, path: impl AsRef<Path>) -> Result<()> {
    write_params(BufWriter::new(File::create(path)?), p)
}

pub fn load_params(path: impl AsRef<Path>) -> Result<ModelParams> {
    read_params(BufReader::new(File::open(path)?))
}

/// Loads params and checks that their architecture matches `expected`.
pub fn load_params_expecting(path: impl AsRef<Path>, expected: &ModelConfig) -> Result<ModelParams> {
    let p = load_params(path)?;
    let c = &p.config;
    let got = (c.d_model, c.n_layers, c.n_heads, c.ffn_mult, c.vocab_size, c.seq_len);
    let want = (expected.d_model, expected.n_layers, expected.n_heads, expected.ffn_mult, expected.vocab_size, expected.seq_len);
    if got != want {
        return Err(NeuralError::ShapeMismatch(format!(
            "params have (d_model, layers, heads, ffn_mult, vocab, seq_len) = {got:?}, expected {want:?}"
        )));
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_bytes() {
        let mut p = ModelParams::init(&ModelConfig { use_sre: false, ..ModelConfig::tiny() }).unwrap();
        p.trained_steps = 42;
        let mut bytes = Vec::new();
        write_params(&mut bytes, &p).unwrap();
        let q = read_params(bytes.as_slice()).unwrap();
        assert_eq!(p, q);
        assert!(!q.config.use_sre);
    }

    #[test]
    fn bad_headers() {
        assert!(matches!(read_params(&b"XXXX\x01\0\0\0"[..]), Err(NeuralError::BadMagic)));
        assert!(matches!(read_params(&b"MW"[..]), Err(NeuralError::BadMagic)));
        assert!(matches!(read_params(&b"MWLD\x07\0\0\0"[..]), Err(NeuralError::VersionMismatch(7))));
    }

    #[test]
    fn truncated_file_is_short_read() {
        let p = ModelParams::init(&ModelConfig::tiny()).unwrap();
        let mut bytes = Vec::new();
        write_params(&mut bytes, &p).unwrap();
        bytes.truncate(bytes.len() - 3);
        assert!(matches!(read_params(bytes.as_slice()), Err(NeuralError::Io(_))));
    }

    #[test]
    fn tensor_shape_is_checked() {
        let p = ModelParams::init(&ModelConfig::tiny()).unwrap();
        let mut bytes = Vec::new();
        write_params(&mut bytes, &p).unwrap();
        // First tensor's row count sits right after the 73-byte header block.
        let off = 4 + 4 + 6 * 4 + 1 + 8 + 8 + 4 + 4 + 8 + 4;
        bytes[off] = 59;
        assert!(matches!(read_params(bytes.as_slice()), Err(NeuralError::ShapeMismatch(_))));
    }
}
