//! On-disk container for trained models.
//!
//! Layout: 8-byte magic, `u32` format version, `u32` header length, JSON
//! header, little-endian `f64` payload, SHA-256 of everything before it.
//! Hidden parameters are stored verbatim, so a load is bitwise exact.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::decomp::{DecomposedModel, Partition};
use crate::error::{Error, Result};
use crate::odecore::{SystemSpec, TrainingDomain};
use crate::psirep::{PsiKind, PsiModel};
use crate::randnet::{init_subnet_with, Activation, DenseLayer, Normalizer};

const MAGIC: &[u8; 8] = b"ELMFLOW\0";
pub const FORMAT_VERSION: u32 = 1;
pub const GENERATOR: &str = "chacha20";
const DIGEST_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayEntry {
    pub name: String,
    /// In `f64` units from the start of the payload.
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalManifest {
    pub id: usize,
    pub arch: Vec<usize>,
    pub rm: f64,
    pub delta_m: f64,
    pub seed: u64,
    pub activation: Activation,
    /// Enlarged box the network was trained and normalized on.
    pub domain: TrainingDomain,
    pub trained: bool,
    pub arrays: Vec<ArrayEntry>,
}

/// File header; also the `inspect` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub format_version: u32,
    pub generator: String,
    pub kind: PsiKind,
    pub system: SystemSpec,
    pub normalization: String,
    pub partition: Partition,
    pub models: Vec<LocalManifest>,
}

fn encode(model: &DecomposedModel) -> Result<Vec<u8>> {
    let first = &model.models()[0];
    let system = first
        .system()
        .spec()
        .cloned()
        .ok_or_else(|| Error::invalid(format!("system {} has no serializable description", first.system().name())))?;
    let mut payload: Vec<f64> = Vec::new();
    let mut push = |name: String, data: &[f64], arrays: &mut Vec<ArrayEntry>| {
        arrays.push(ArrayEntry { name, offset: payload.len(), len: data.len() });
        payload.extend_from_slice(data);
    };
    let mut locals = Vec::new();
    for (id, m) in model.models().iter().enumerate() {
        let sub = m.subnet();
        let mut arrays = Vec::new();
        for (l, layer) in sub.hidden_layers().iter().enumerate() {
            push(format!("hidden{l}.weights"), layer.weights(), &mut arrays);
            push(format!("hidden{l}.biases"), layer.biases(), &mut arrays);
        }
        push("beta".into(), sub.beta(), &mut arrays);
        locals.push(LocalManifest {
            id,
            arch: sub.arch().to_vec(),
            rm: sub.rm(),
            delta_m: m.normalizer().delta_m(),
            seed: sub.seed(),
            activation: sub.activation(),
            domain: m.domain().clone(),
            trained: m.is_trained(),
            arrays,
        });
    }
    let manifest = ModelManifest {
        format_version: FORMAT_VERSION,
        generator: GENERATOR.into(),
        kind: first.kind(),
        system,
        normalization: "per_enlarged_subdomain".into(),
        partition: model.partition().clone(),
        models: locals,
    };
    let header = serde_json::to_vec(&manifest)?;
    let mut out = Vec::with_capacity(16 + header.len() + 8 * payload.len() + DIGEST_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    for v in &payload {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    Ok(out)
}

/// Checks magic, checksum and version; returns the manifest and payload.
fn decode(bytes: &[u8]) -> Result<(ModelManifest, Vec<f64>)> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::Format("not a model file (bad magic)".into()));
    }
    if bytes.len() < 16 + DIGEST_LEN {
        return Err(Error::Checksum);
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::Checksum);
    }
    let version = u32::from_le_bytes(body[8..12].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::Version { found: version, expected: FORMAT_VERSION });
    }
    let hlen = u32::from_le_bytes(body[12..16].try_into().unwrap()) as usize;
    let rest = &body[16..];
    if hlen > rest.len() || (rest.len() - hlen) % 8 != 0 {
        return Err(Error::Format("header length inconsistent with file size".into()));
    }
    let manifest: ModelManifest = serde_json::from_slice(&rest[..hlen])?;
    let payload = rest[hlen..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((manifest, payload))
}

fn array<'p>(payload: &'p [f64], local: &LocalManifest, name: &str) -> Result<&'p [f64]> {
    let e = local
        .arrays
        .iter()
        .find(|a| a.name == name)
        .ok_or_else(|| Error::Format(format!("model {}: array {name} missing", local.id)))?;
    payload
        .get(e.offset..e.offset + e.len)
        .ok_or_else(|| Error::Format(format!("model {}: array {name} out of bounds", local.id)))
}

fn rebuild(manifest: ModelManifest, payload: &[f64]) -> Result<DecomposedModel> {
    if manifest.generator != GENERATOR {
        return Err(Error::Format(format!("unknown generator {}", manifest.generator)));
    }
    let system = manifest.system.build();
    let mut models = Vec::with_capacity(manifest.models.len());
    for local in &manifest.models {
        let template = init_subnet_with(&local.arch, local.rm, local.seed, local.activation)?;
        let mut layers = Vec::new();
        for (l, t) in template.hidden_layers().iter().enumerate() {
            let w = array(payload, local, &format!("hidden{l}.weights"))?;
            let b = array(payload, local, &format!("hidden{l}.biases"))?;
            layers.push(DenseLayer::from_parts(t.rows, t.cols, w.to_vec(), b.to_vec())?);
        }
        let mut subnet = template.with_hidden(layers)?;
        subnet.set_beta(array(payload, local, "beta")?)?;
        let normalizer = Normalizer::for_domain(&local.domain, local.delta_m)?;
        let mut m = PsiModel::from_parts(manifest.kind, subnet, normalizer, system.clone(), local.domain.clone())?;
        m.set_trained(local.trained);
        models.push(m);
    }
    DecomposedModel::new(manifest.partition, models)
}

pub fn to_bytes(model: &DecomposedModel) -> Result<Vec<u8>> {
    encode(model)
}

pub fn from_bytes(bytes: &[u8]) -> Result<DecomposedModel> {
    let (manifest, payload) = decode(bytes)?;
    rebuild(manifest, &payload)
}

pub fn save_model(model: &DecomposedModel, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode(model)?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<DecomposedModel> {
    from_bytes(&std::fs::read(path)?)
}

/// Header of a model file after integrity checks.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<ModelManifest> {
    Ok(decode(&std::fs::read(path)?)?.0)
}
