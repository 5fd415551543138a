//! OCNN model files.
//!
//! Configuration words: `input_dim, head_len, head_dims.., flags, eps_lo, eps_hi`
//! where `flags` bit 0 enables instance norm, bit 1 its affine parameters
//! and bit 2 an identity classifier activation; `eps` is the f64 bit
//! pattern of the instance-norm epsilon. Parameters follow the network's
//! canonical tensor order. The metadata block echoes the training
//! configuration.

use std::path::Path;

use occnn_core::nn::{Activation, InstanceNormSpec, Network, NetworkConfig};
use occnn_core::occnn::{OcCnnModel, Provenance, Resample, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::container::{count_u32, narrow, read_file, write_file, Container, Params};
use crate::error::{Error, Result};

pub const OCNN_MAGIC: &str = "OCNN";

/// Magic, version and word count precede the configuration words.
const CONFIG_OFFSET: usize = 10;

const FLAG_NORM: u32 = 1;
const FLAG_AFFINE: u32 = 2;
const FLAG_IDENTITY: u32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ResampleTag {
    Batch,
    Epoch,
    Once,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainEcho {
    sigma: f64,
    mu: f64,
    lr: f64,
    batch_size: usize,
    epochs: usize,
    seed: u64,
    resample: ResampleTag,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct ProvenanceEcho {
    train: TrainEcho,
    final_loss: Option<f64>,
}

impl From<&Provenance> for ProvenanceEcho {
    fn from(p: &Provenance) -> Self {
        let c = &p.config;
        ProvenanceEcho {
            train: TrainEcho {
                sigma: c.sigma,
                mu: c.mu,
                lr: c.lr,
                batch_size: c.batch_size,
                epochs: c.epochs,
                seed: c.seed,
                resample: match c.resample {
                    Resample::Batch => ResampleTag::Batch,
                    Resample::Epoch => ResampleTag::Epoch,
                    Resample::Once => ResampleTag::Once,
                },
            },
            final_loss: p.final_loss,
        }
    }
}

impl From<ProvenanceEcho> for Provenance {
    fn from(e: ProvenanceEcho) -> Self {
        let t = e.train;
        Provenance {
            config: TrainConfig {
                sigma: t.sigma,
                mu: t.mu,
                lr: t.lr,
                batch_size: t.batch_size,
                epochs: t.epochs,
                seed: t.seed,
                resample: match t.resample {
                    ResampleTag::Batch => Resample::Batch,
                    ResampleTag::Epoch => Resample::Epoch,
                    ResampleTag::Once => Resample::Once,
                },
            },
            final_loss: e.final_loss,
        }
    }
}

pub(crate) fn config_words(cfg: &NetworkConfig) -> Result<Vec<u32>> {
    let mut words = vec![
        count_u32(cfg.input_dim, "input dim")?,
        count_u32(cfg.head_dims.len(), "head layer")?,
    ];
    for &h in &cfg.head_dims {
        words.push(count_u32(h, "head width")?);
    }
    let mut flags = 0;
    let mut eps = 0.0f64;
    if let Some(spec) = cfg.instance_norm {
        flags |= FLAG_NORM;
        if spec.affine {
            flags |= FLAG_AFFINE;
        }
        eps = spec.epsilon;
    }
    if cfg.classifier_activation == Activation::Identity {
        flags |= FLAG_IDENTITY;
    }
    let bits = eps.to_bits();
    words.extend([flags, bits as u32, (bits >> 32) as u32]);
    Ok(words)
}

/// Widest layer a file may declare; keeps corrupt headers from requesting
/// absurd allocations.
const MAX_WIDTH: usize = 1 << 20;

/// Parses configuration words starting at byte `base`, returning the config
/// and the number of words consumed.
pub(crate) fn parse_config(path: &Path, words: &[u32], base: usize) -> Result<(NetworkConfig, usize)> {
    let corrupt = |reason: String| Error::Corrupt {
        path: path.to_path_buf(),
        offset: base,
        reason,
    };
    let short = || corrupt(format!("network configuration too short ({} words)", words.len()));
    let input_dim = *words.first().ok_or_else(short)? as usize;
    let head_len = *words.get(1).ok_or_else(short)? as usize;
    let end = head_len
        .checked_add(5)
        .filter(|&e| e <= words.len())
        .ok_or_else(short)?;
    let head_dims = words[2..2 + head_len].iter().map(|&w| w as usize).collect();
    if let Some(w) = words[..2 + head_len].iter().find(|&&w| w as usize > MAX_WIDTH) {
        return Err(corrupt(format!("layer width {w} exceeds {MAX_WIDTH}")));
    }
    let flags = words[2 + head_len];
    if flags & !(FLAG_NORM | FLAG_AFFINE | FLAG_IDENTITY) != 0 {
        return Err(corrupt(format!("unknown network flags {flags:#x}")));
    }
    let epsilon = f64::from_bits(u64::from(words[3 + head_len]) | (u64::from(words[4 + head_len]) << 32));
    let cfg = NetworkConfig {
        input_dim,
        head_dims,
        instance_norm: (flags & FLAG_NORM != 0).then_some(InstanceNormSpec {
            epsilon,
            affine: flags & FLAG_AFFINE != 0,
        }),
        classifier_activation: if flags & FLAG_IDENTITY != 0 {
            Activation::Identity
        } else {
            Activation::Relu
        },
    };
    cfg.validate()
        .map_err(|e| corrupt(format!("invalid network configuration: {e}")))?;
    Ok((cfg, end))
}

pub(crate) fn network_params(net: &Network) -> Result<Vec<f32>> {
    narrow(net.tensors().into_iter().flatten().copied(), "network parameter")
}

pub(crate) fn read_network(cfg: NetworkConfig, params: &mut Params<'_>) -> Result<Network> {
    let tensors = cfg
        .tensor_lengths()
        .iter()
        .map(|&len| params.take(len, "network tensor"))
        .collect::<Result<Vec<_>>>()?;
    Ok(Network::from_tensors(cfg, tensors)?)
}

pub fn encode_model(model: &OcCnnModel) -> Result<Vec<u8>> {
    Container {
        tag: None,
        config: config_words(model.network.config())?,
        params: network_params(&model.network)?,
        metadata: serde_json::to_vec(&ProvenanceEcho::from(&model.provenance)).expect("metadata serializes"),
    }
    .encode(OCNN_MAGIC)
}

pub(crate) fn metadata<T: serde::de::DeserializeOwned>(path: &Path, c: &Container) -> Result<T> {
    serde_json::from_slice(&c.metadata).map_err(|e| Error::Corrupt {
        path: path.to_path_buf(),
        offset: c.param_offset() + 4 * c.params.len() + 4,
        reason: format!("metadata: {e}"),
    })
}

pub fn decode_model(path: &Path, bytes: &[u8]) -> Result<OcCnnModel> {
    let c = Container::decode(path, bytes, OCNN_MAGIC, false)?;
    let (cfg, used) = parse_config(path, &c.config, CONFIG_OFFSET)?;
    if used != c.config.len() {
        return Err(Error::Corrupt {
            path: path.to_path_buf(),
            offset: CONFIG_OFFSET + 4 * used,
            reason: format!("{} unexpected configuration words", c.config.len() - used),
        });
    }
    let mut params = c.params(path);
    let network = read_network(cfg, &mut params)?;
    params.finish()?;
    let echo: ProvenanceEcho = metadata(path, &c)?;
    Ok(OcCnnModel::new(network, echo.into()))
}

pub fn save_model(model: &OcCnnModel, path: &Path) -> Result<()> {
    write_file(path, &encode_model(model)?)
}

pub fn load_model(path: &Path) -> Result<OcCnnModel> {
    decode_model(path, &read_file(path)?)
}
