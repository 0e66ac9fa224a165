//! Checkpoint format: the magic line `PSCL1`, one JSON manifest line, then
//! every parameter as little-endian f64 in manifest order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{LabelScheme, Polarity};
use crate::diffcore::Tensor;

use super::{HierModel, ModelConfig, ModelError, Vocabulary};

pub const MAGIC: &str = "PSCL1";
const DTYPE: &str = "f64le";

#[derive(Debug, Serialize, Deserialize)]
struct ParamEntry {
    name: String,
    shape: [usize; 2],
    trainable: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    dtype: String,
    seed: u64,
    config: ModelConfig,
    codes: Vec<String>,
    polarities: Vec<Polarity>,
    vocabulary: Vocabulary,
    params: Vec<ParamEntry>,
}

pub fn write_checkpoint(model: &HierModel, mut w: impl Write) -> std::io::Result<()> {
    let manifest = Manifest {
        dtype: DTYPE.into(),
        seed: model.config.seed,
        config: model.config.clone(),
        codes: model.codes.clone(),
        polarities: model.class_polarity.clone(),
        vocabulary: model.vocab.clone(),
        params: model
            .store
            .iter()
            .map(|(_, p)| ParamEntry { name: p.name.clone(), shape: p.value.shape(), trainable: p.trainable })
            .collect(),
    };
    writeln!(w, "{MAGIC}")?;
    serde_json::to_writer(&mut w, &manifest)?;
    writeln!(w)?;
    for (_, p) in model.store.iter() {
        for v in p.value.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()
}

fn read_line(r: &mut impl Read) -> Result<String, ModelError> {
    let mut bytes = Vec::new();
    let mut b = [0u8; 1];
    loop {
        let n = r.read(&mut b).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        if n == 0 || b[0] == b'\n' {
            break;
        }
        bytes.push(b[0]);
    }
    String::from_utf8(bytes).map_err(|_| ModelError::Checkpoint("manifest is not UTF-8".into()))
}

/// Reads a checkpoint written for `scheme`.
pub fn read_checkpoint(mut r: impl Read, scheme: &LabelScheme) -> Result<HierModel, ModelError> {
    if read_line(&mut r)? != MAGIC {
        return Err(ModelError::Checkpoint(format!("missing {MAGIC} header")));
    }
    let manifest: Manifest =
        serde_json::from_str(&read_line(&mut r)?).map_err(|e| ModelError::Checkpoint(format!("manifest: {e}")))?;
    if manifest.dtype != DTYPE {
        return Err(ModelError::Checkpoint(format!("unsupported dtype {}", manifest.dtype)));
    }
    let mut vocab = manifest.vocabulary;
    vocab.reindex();
    let mut model = HierModel::new(&manifest.config, scheme, vocab, None)?;
    if model.codes != manifest.codes || model.class_polarity != manifest.polarities {
        return Err(ModelError::Checkpoint("label scheme does not match checkpoint".into()));
    }
    if model.store.len() != manifest.params.len() {
        return Err(ModelError::Checkpoint("parameter count mismatch".into()));
    }
    let mut buf = [0u8; 8];
    for entry in &manifest.params {
        let id = model
            .store
            .id(&entry.name)
            .ok_or_else(|| ModelError::Checkpoint(format!("unexpected parameter {}", entry.name)))?;
        if model.store.value(id).shape() != entry.shape {
            return Err(ModelError::Checkpoint(format!("shape mismatch for {}", entry.name)));
        }
        let mut data = Vec::with_capacity(entry.shape[0] * entry.shape[1]);
        for _ in 0..entry.shape[0] * entry.shape[1] {
            r.read_exact(&mut buf).map_err(|_| ModelError::Checkpoint("truncated parameter data".into()))?;
            data.push(f64::from_le_bytes(buf));
        }
        let p = model.store.get_mut(id);
        p.value = Tensor::from_vec(entry.shape[0], entry.shape[1], data);
        p.trainable = entry.trainable;
    }
    if r.read(&mut buf).map_err(|e| ModelError::Checkpoint(e.to_string()))? != 0 {
        return Err(ModelError::Checkpoint("trailing bytes".into()));
    }
    Ok(model)
}

pub fn save_checkpoint(model: &HierModel, path: &Path) -> Result<(), ModelError> {
    let io = |source| ModelError::Io { path: path.display().to_string(), source };
    let file = File::create(path).map_err(io)?;
    write_checkpoint(model, BufWriter::new(file)).map_err(io)
}

pub fn load_checkpoint(path: &Path, scheme: &LabelScheme) -> Result<HierModel, ModelError> {
    let file = File::open(path).map_err(|source| ModelError::Io { path: path.display().to_string(), source })?;
    read_checkpoint(BufReader::new(file), scheme)
}
