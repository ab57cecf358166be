//! On-disk model format.
//!
//! A model directory holds `manifest.json` (version tag, config, vocabulary,
//! preprocessing settings and a tensor directory with shapes and SHA-256
//! checksums) and one blob per tensor of little-endian `f32`, row-major.
//! Optimizer moments are stored the same way next to the parameters.

use std::fs;
use std::path::{Path, PathBuf};

use reckon_core::corpus::PreprocessConfig;
use reckon_core::langmodel::{AdamState, LmConfig, LmModel, LmParams, LmVocabulary, Tensor};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const FORMAT_VERSION: &str = "lm-v1";
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("artifact version `{found}` is not supported (expected `{expected}`)")]
    Version { found: String, expected: String },
    #[error("checksum mismatch for {file}")]
    Checksum { file: String },
    #[error("tensor `{name}`: {message}")]
    Shape { name: String, message: String },
    #[error("invalid model: {0}")]
    Model(String),
}

type Result<T> = std::result::Result<T, ArtifactError>;

#[derive(Debug, Serialize, Deserialize)]
struct PreprocessSettings {
    min_token_len: usize,
    stopwords: Vec<String>,
    placeholders: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    role: String,
    shape: Vec<usize>,
    file: String,
    sha256: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    version: String,
    config: LmConfig,
    vocab: Vec<String>,
    preprocess: PreprocessSettings,
    adam_step: u64,
    tensors: Vec<TensorEntry>,
}

const ROLES: [&str; 3] = ["param", "adam_m", "adam_v"];

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ArtifactError + '_ {
    move |source| ArtifactError::Io {
        path: path.to_owned(),
        source,
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn encode_f32(t: &Tensor) -> Vec<u8> {
    t.data.iter().flat_map(|&x| (x as f32).to_le_bytes()).collect()
}

fn groups(model: &LmModel) -> [&LmParams; 3] {
    [&model.params, &model.adam.m, &model.adam.v]
}

/// Writes `model` and the preprocessing it was trained with into `dir`.
/// Identical models produce byte-identical directories.
pub fn save_model(model: &LmModel, preprocess: &PreprocessConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let names = model.params.names();
    let mut tensors = Vec::new();
    for (role, group) in ROLES.iter().zip(groups(model)) {
        for (name, t) in names.iter().zip(group.tensors()) {
            let file = format!("{role}.{name}.f32");
            let bytes = encode_f32(t);
            let path = dir.join(&file);
            fs::write(&path, &bytes).map_err(io_err(&path))?;
            tensors.push(TensorEntry {
                name: name.clone(),
                role: role.to_string(),
                shape: t.shape.clone(),
                file,
                sha256: sha256_hex(&bytes),
            });
        }
    }
    let mut placeholders: Vec<String> = preprocess.placeholders().iter().cloned().collect();
    placeholders.sort();
    let manifest = Manifest {
        version: FORMAT_VERSION.to_string(),
        config: model.config.clone(),
        vocab: model.vocab.tokens().to_vec(),
        preprocess: PreprocessSettings {
            min_token_len: preprocess.min_token_len(),
            stopwords: preprocess.sorted_stopwords(),
            placeholders,
        },
        adam_step: model.adam.t,
        tensors,
    };
    let path = dir.join(MANIFEST);
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    text.push('\n');
    fs::write(&path, text).map_err(io_err(&path))
}

/// Reads a model directory, verifying version, shapes and checksums.
pub fn load_model(dir: &Path) -> Result<(LmModel, PreprocessConfig)> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let bad = |message: String| ArtifactError::Manifest {
        path: path.clone(),
        message,
    };
    let raw: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    let found = raw
        .get("version")
        .and_then(|v| v.as_str())
        .ok_or_else(|| bad("missing version field".into()))?;
    if found != FORMAT_VERSION {
        return Err(ArtifactError::Version {
            found: found.to_string(),
            expected: FORMAT_VERSION.to_string(),
        });
    }
    let manifest: Manifest = serde_json::from_value(raw).map_err(|e| bad(e.to_string()))?;
    manifest.config.validate().map_err(|e| ArtifactError::Model(e.to_string()))?;
    let vocab = LmVocabulary::from_tokens(manifest.vocab).map_err(|e| ArtifactError::Model(e.to_string()))?;

    let template = LmParams::zeros(&manifest.config, vocab.len());
    let names = template.names();
    if manifest.tensors.len() != names.len() * ROLES.len() {
        return Err(bad(format!(
            "{} tensors listed, model needs {}",
            manifest.tensors.len(),
            names.len() * ROLES.len()
        )));
    }
    let mut loaded = [template.clone(), template.clone(), template];
    let mut entries = manifest.tensors.iter();
    for (role, group) in ROLES.iter().zip(loaded.iter_mut()) {
        for (name, t) in names.iter().zip(group.tensors_mut()) {
            let entry = entries.next().expect("length checked");
            if &entry.name != name || entry.role != *role {
                return Err(bad(format!("expected {role} `{name}`, found {} `{}`", entry.role, entry.name)));
            }
            if entry.shape != t.shape {
                return Err(ArtifactError::Shape {
                    name: name.clone(),
                    message: format!("stored shape {:?}, config implies {:?}", entry.shape, t.shape),
                });
            }
            let blob = dir.join(&entry.file);
            let bytes = fs::read(&blob).map_err(io_err(&blob))?;
            if sha256_hex(&bytes) != entry.sha256 {
                return Err(ArtifactError::Checksum {
                    file: blob.display().to_string(),
                });
            }
            if bytes.len() != 4 * t.data.len() {
                return Err(ArtifactError::Shape {
                    name: name.clone(),
                    message: format!("{} bytes for {} values", bytes.len(), t.data.len()),
                });
            }
            for (x, chunk) in t.data.iter_mut().zip(bytes.chunks_exact(4)) {
                *x = f32::from_le_bytes(chunk.try_into().expect("4-byte chunk")) as f64;
            }
        }
    }
    let [params, m, v] = loaded;
    if !params.all_finite() {
        return Err(ArtifactError::Model("non-finite parameter values".into()));
    }
    let preprocess = PreprocessConfig::new(
        manifest.preprocess.stopwords,
        manifest.preprocess.min_token_len,
        manifest.preprocess.placeholders,
    )
    .map_err(|e| ArtifactError::Model(e.to_string()))?;
    let mut model = LmModel::from_parts(manifest.config, vocab, params);
    model.adam = AdamState {
        m,
        v,
        t: manifest.adam_step,
    };
    Ok((model, preprocess))
}
