use std::path::Path;

use ndarray::Array2;

use super::binary::{read_file, write_file, Reader, Writer};
use crate::error::{Error, Result};
use crate::field::tape::Real;
use crate::field::{FieldModel, ModelConfig, ParamStore, Tensor};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"WFLD";
pub const CHECKPOINT_VERSION: u16 = 1;

/// Serializes the model with its parameters narrowed to `f32`.
pub fn encode_checkpoint<T: Real>(model: &FieldModel<T>) -> Result<Vec<u8>> {
    let mut w = Writer::new(CHECKPOINT_MAGIC, CHECKPOINT_VERSION);
    let config = toml::to_string(model.config()).map_err(|e| Error::config(e.to_string()))?;
    w.len(config.len())?;
    w.bytes(config.as_bytes());
    let tensors = model.params().tensors();
    w.len(tensors.len())?;
    for t in tensors {
        let name = t.name.as_bytes();
        let n = u16::try_from(name.len()).map_err(|_| Error::input(format!("tensor name too long: {}", t.name)))?;
        w.u16(n);
        w.bytes(name);
        w.u8(u8::from(t.trainable));
        let (rows, cols) = t.value.dim();
        w.len(rows)?;
        w.len(cols)?;
        for v in t.value.iter() {
            w.f32(v.to_f64_lossy() as f32);
        }
    }
    Ok(w.buf)
}

pub fn decode_checkpoint<T: Real>(bytes: &[u8]) -> Result<FieldModel<T>> {
    let mut r = Reader::new(bytes);
    r.header(CHECKPOINT_MAGIC, CHECKPOINT_VERSION)?;
    let at = r.offset();
    let n = r.count(1)?;
    let text = std::str::from_utf8(r.take(n)?)
        .map_err(|_| Error::Format { offset: at, message: "config block is not UTF-8".into() })?;
    let config: ModelConfig =
        toml::from_str(text).map_err(|e| Error::Format { offset: at, message: format!("config block: {e}") })?;
    let count = r.count(11)?;
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let at = r.offset();
        let len = r.u16()? as usize;
        let name = String::from_utf8(r.take(len)?.to_vec())
            .map_err(|_| Error::Format { offset: at, message: "tensor name is not UTF-8".into() })?;
        let trainable = match r.u8()? {
            0 => false,
            1 => true,
            b => return Err(r.error(format!("invalid trainable flag {b}"))),
        };
        let (rows, cols) = (r.u32()? as usize, r.u32()? as usize);
        let data = r.take(rows.saturating_mul(cols).saturating_mul(4))?;
        let values = data
            .chunks_exact(4)
            .map(|c| T::lit(f32::from_le_bytes(c.try_into().expect("four bytes")) as f64))
            .collect();
        let value = Array2::from_shape_vec((rows, cols), values).map_err(|e| Error::Format { offset: at, message: e.to_string() })?;
        tensors.push(Tensor { name, value, trainable });
    }
    r.finish()?;
    FieldModel::from_params(config, ParamStore::from_tensors(tensors))
}

pub fn save_checkpoint<T: Real>(path: &Path, model: &FieldModel<T>) -> Result<()> {
    write_file(path, &encode_checkpoint(model)?)
}

pub fn load_checkpoint<T: Real>(path: &Path) -> Result<FieldModel<T>> {
    decode_checkpoint(&read_file(path)?)
}
