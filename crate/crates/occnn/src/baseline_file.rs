//! OCBL files: fitted baselines in the model container with a method tag.
//!
//! | tag | method     | config words              | parameters                 |
//! |-----|------------|---------------------------|----------------------------|
//! | 1   | ocsvm      | `n_sv, d`                 | support rows, alpha        |
//! | 2   | ocsvm_plus | network words, `n_sv, d`  | network, support, alpha    |
//! | 3   | svdd       | `n_sv, d`                 | support rows, alpha        |
//! | 4   | mpm        | `d, p`                    | basis (`d x p`), mean, w   |
//! | 5   | bsvm       | `d`                       | w                          |
//!
//! Scalars (thresholds, hyperparameters, solver diagnostics) live in the
//! JSON metadata block as f64.

use std::path::Path;

use occnn_core::baselines::{BsvmModel, FitDiagnostics, KernelSpec, MpmModel, OcSvmModel, OcSvmPlusModel, SvddModel};
use occnn_core::methods::FittedModel;
use occnn_core::occnn::OcCnnModel;
use occnn_core::Matrix;
use serde::{Deserialize, Serialize};

use crate::container::{count_u32, narrow, read_file, write_file, Container, Params};
use crate::error::{Error, Result};
use crate::model_file::{
    config_words, decode_model, encode_model, metadata, network_params, parse_config, read_network, ProvenanceEcho,
    OCNN_MAGIC,
};

pub const OCBL_MAGIC: &str = "OCBL";

const TAG_OCSVM: u8 = 1;
const TAG_OCSVM_PLUS: u8 = 2;
const TAG_SVDD: u8 = 3;
const TAG_MPM: u8 = 4;
const TAG_BSVM: u8 = 5;

/// Magic, version, tag and word count precede the configuration words.
const CONFIG_OFFSET: usize = 11;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum KernelEcho {
    Linear,
    Rbf { gamma: f64 },
}

impl From<KernelSpec> for KernelEcho {
    fn from(k: KernelSpec) -> Self {
        match k {
            KernelSpec::Linear => KernelEcho::Linear,
            KernelSpec::Rbf { gamma } => KernelEcho::Rbf { gamma },
        }
    }
}

impl From<KernelEcho> for KernelSpec {
    fn from(k: KernelEcho) -> Self {
        match k {
            KernelEcho::Linear => KernelSpec::Linear,
            KernelEcho::Rbf { gamma } => KernelSpec::Rbf { gamma },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DiagnosticsEcho {
    iterations: usize,
    kkt_residual: f64,
    objective: f64,
}

impl From<FitDiagnostics> for DiagnosticsEcho {
    fn from(d: FitDiagnostics) -> Self {
        DiagnosticsEcho {
            iterations: d.iterations,
            kkt_residual: d.kkt_residual,
            objective: d.objective,
        }
    }
}

impl From<DiagnosticsEcho> for FitDiagnostics {
    fn from(d: DiagnosticsEcho) -> Self {
        FitDiagnostics {
            iterations: d.iterations,
            kkt_residual: d.kkt_residual,
            objective: d.objective,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OcSvmMeta {
    rho: f64,
    nu: f64,
    kernel: KernelEcho,
    n_train: usize,
    diagnostics: DiagnosticsEcho,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OcSvmPlusMeta {
    extractor: ProvenanceEcho,
    svm: OcSvmMeta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SvddMeta {
    r2: f64,
    c: f64,
    kernel: KernelEcho,
    center_norm2: f64,
    n_train: usize,
    diagnostics: DiagnosticsEcho,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MpmMeta {
    rho: f64,
    lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BsvmMeta {
    b: f64,
    lambda: f64,
    sigma: f64,
    objective_trace: Vec<f64>,
}

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    serde_json::to_vec(value).expect("metadata serializes")
}

fn ocsvm_meta(m: &OcSvmModel) -> OcSvmMeta {
    OcSvmMeta {
        rho: m.rho,
        nu: m.nu,
        kernel: m.kernel.into(),
        n_train: m.n_train,
        diagnostics: m.diagnostics.into(),
    }
}

fn support_words(support: &Matrix) -> Result<[u32; 2]> {
    Ok([
        count_u32(support.rows(), "support vector")?,
        count_u32(support.cols(), "column")?,
    ])
}

fn support_params(support: &Matrix, alpha: &[f64]) -> Result<Vec<f32>> {
    narrow(support.as_slice().iter().chain(alpha).copied(), "support vector")
}

fn encode_fitted(model: &FittedModel) -> Result<Container> {
    let c = match model {
        FittedModel::OcCnn(_) => unreachable!("networks are stored as OCNN files"),
        FittedModel::OcSvm(m) => Container {
            tag: Some(TAG_OCSVM),
            config: support_words(&m.support)?.to_vec(),
            params: support_params(&m.support, &m.alpha)?,
            metadata: json(&ocsvm_meta(m)),
        },
        FittedModel::OcSvmPlus(m) => {
            let mut config = config_words(m.extractor.network.config())?;
            config.extend(support_words(&m.svm.support)?);
            let mut params = network_params(&m.extractor.network)?;
            params.extend(support_params(&m.svm.support, &m.svm.alpha)?);
            Container {
                tag: Some(TAG_OCSVM_PLUS),
                config,
                params,
                metadata: json(&OcSvmPlusMeta {
                    extractor: ProvenanceEcho::from(&m.extractor.provenance),
                    svm: ocsvm_meta(&m.svm),
                }),
            }
        }
        FittedModel::Svdd(m) => Container {
            tag: Some(TAG_SVDD),
            config: support_words(&m.support)?.to_vec(),
            params: support_params(&m.support, &m.alpha)?,
            metadata: json(&SvddMeta {
                r2: m.r2,
                c: m.c,
                kernel: m.kernel.into(),
                center_norm2: m.center_norm2,
                n_train: m.n_train,
                diagnostics: m.diagnostics.into(),
            }),
        },
        FittedModel::Mpm(m) => Container {
            tag: Some(TAG_MPM),
            config: vec![
                count_u32(m.basis.rows(), "column")?,
                count_u32(m.basis.cols(), "component")?,
            ],
            params: narrow(
                m.basis.as_slice().iter().chain(&m.mean).chain(&m.w).copied(),
                "mpm parameter",
            )?,
            metadata: json(&MpmMeta {
                rho: m.rho,
                lambda: m.lambda,
            }),
        },
        FittedModel::Bsvm(m) => Container {
            tag: Some(TAG_BSVM),
            config: vec![count_u32(m.w.len(), "column")?],
            params: narrow(m.w.iter().copied(), "bsvm weight")?,
            metadata: json(&BsvmMeta {
                b: m.b,
                lambda: m.lambda,
                sigma: m.sigma,
                objective_trace: m.objective_trace.clone(),
            }),
        },
    };
    Ok(c)
}

/// Serializes any fitted model: networks as OCNN, everything else as OCBL.
pub fn encode_fitted_model(model: &FittedModel) -> Result<Vec<u8>> {
    match model {
        FittedModel::OcCnn(m) => encode_model(m),
        other => encode_fitted(other)?.encode(OCBL_MAGIC),
    }
}

fn corrupt(path: &Path, offset: usize, reason: impl Into<String>) -> Error {
    Error::Corrupt {
        path: path.to_path_buf(),
        offset,
        reason: reason.into(),
    }
}

/// Reads exactly `n` config words starting at word `at`.
fn words<const N: usize>(path: &Path, config: &[u32], at: usize) -> Result<[usize; N]> {
    if config.len() != at + N {
        return Err(corrupt(
            path,
            CONFIG_OFFSET,
            format!("expected {} configuration words, found {}", at + N, config.len()),
        ));
    }
    Ok(std::array::from_fn(|i| config[at + i] as usize))
}

fn read_support(path: &Path, params: &mut Params<'_>, n_sv: usize, d: usize) -> Result<(Matrix, Vec<f64>)> {
    let rows = n_sv
        .checked_mul(d)
        .ok_or_else(|| corrupt(path, CONFIG_OFFSET, "support block size overflows"))?;
    let support = Matrix::from_vec(n_sv, d, params.take(rows, "support vectors")?)?;
    let alpha = params.take(n_sv, "dual coefficients")?;
    Ok((support, alpha))
}

fn ocsvm_from(meta: OcSvmMeta, support: Matrix, alpha: Vec<f64>) -> OcSvmModel {
    OcSvmModel {
        support,
        alpha,
        rho: meta.rho,
        nu: meta.nu,
        kernel: meta.kernel.into(),
        n_train: meta.n_train,
        diagnostics: meta.diagnostics.into(),
    }
}

pub fn decode_baseline(path: &Path, bytes: &[u8]) -> Result<FittedModel> {
    let c = Container::decode(path, bytes, OCBL_MAGIC, true)?;
    let mut params = c.params(path);
    let model = match c.tag.unwrap() {
        TAG_OCSVM => {
            let [n_sv, d] = words(path, &c.config, 0)?;
            let (support, alpha) = read_support(path, &mut params, n_sv, d)?;
            FittedModel::OcSvm(ocsvm_from(metadata(path, &c)?, support, alpha))
        }
        TAG_OCSVM_PLUS => {
            let (cfg, used) = parse_config(path, &c.config, CONFIG_OFFSET)?;
            let [n_sv, d] = words(path, &c.config, used)?;
            let network = read_network(cfg, &mut params)?;
            let (support, alpha) = read_support(path, &mut params, n_sv, d)?;
            let meta: OcSvmPlusMeta = metadata(path, &c)?;
            FittedModel::OcSvmPlus(OcSvmPlusModel {
                extractor: OcCnnModel::new(network, meta.extractor.into()),
                svm: ocsvm_from(meta.svm, support, alpha),
            })
        }
        TAG_SVDD => {
            let [n_sv, d] = words(path, &c.config, 0)?;
            let (support, alpha) = read_support(path, &mut params, n_sv, d)?;
            let meta: SvddMeta = metadata(path, &c)?;
            FittedModel::Svdd(SvddModel {
                support,
                alpha,
                r2: meta.r2,
                c: meta.c,
                kernel: meta.kernel.into(),
                center_norm2: meta.center_norm2,
                n_train: meta.n_train,
                diagnostics: meta.diagnostics.into(),
            })
        }
        TAG_MPM => {
            let [d, p] = words(path, &c.config, 0)?;
            let size = d
                .checked_mul(p)
                .ok_or_else(|| corrupt(path, CONFIG_OFFSET, "basis size overflows"))?;
            let basis = Matrix::from_vec(d, p, params.take(size, "basis")?)?;
            let mean = params.take(d, "mean")?;
            let w = params.take(p, "normal")?;
            let meta: MpmMeta = metadata(path, &c)?;
            FittedModel::Mpm(MpmModel {
                basis,
                mean,
                w,
                rho: meta.rho,
                lambda: meta.lambda,
            })
        }
        TAG_BSVM => {
            let [d] = words(path, &c.config, 0)?;
            let w = params.take(d, "weights")?;
            let meta: BsvmMeta = metadata(path, &c)?;
            FittedModel::Bsvm(BsvmModel {
                w,
                b: meta.b,
                lambda: meta.lambda,
                sigma: meta.sigma,
                objective_trace: meta.objective_trace,
            })
        }
        tag => return Err(corrupt(path, 6, format!("unknown method tag {tag}"))),
    };
    params.finish()?;
    Ok(model)
}

/// Reads an OCNN or OCBL file, dispatching on the magic.
pub fn decode_fitted_model(path: &Path, bytes: &[u8]) -> Result<FittedModel> {
    if bytes.starts_with(OCNN_MAGIC.as_bytes()) {
        return Ok(FittedModel::OcCnn(decode_model(path, bytes)?));
    }
    if bytes.starts_with(OCBL_MAGIC.as_bytes()) {
        return decode_baseline(path, bytes);
    }
    Err(Error::BadMagic {
        path: path.to_path_buf(),
        expected: "OCNN or OCBL",
        found: String::from_utf8_lossy(&bytes[..bytes.len().min(4)]).into_owned(),
    })
}

pub fn save_fitted_model(model: &FittedModel, path: &Path) -> Result<()> {
    write_file(path, &encode_fitted_model(model)?)
}

pub fn load_fitted_model(path: &Path) -> Result<FittedModel> {
    decode_fitted_model(path, &read_file(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use occnn_core::data::FeatureSet;
    use occnn_core::eval::Scorer;
    use occnn_core::methods::{Method, OcCnnSettings};
    use occnn_core::numerics::gaussian_sample;
    use occnn_core::occnn::TrainConfig;
    use occnn_core::Rng;

    fn methods() -> Vec<Method> {
        let occnn = OcCnnSettings {
            train: TrainConfig {
                epochs: 2,
                ..TrainConfig::default()
            },
            ..OcCnnSettings::default()
        };
        vec![
            Method::OcCnn(occnn.clone()),
            Method::OcSvm { nu: 0.2, kernel: None },
            Method::OcSvmPlus {
                occnn,
                nu: 0.2,
                kernel: Some(KernelSpec::Linear),
            },
            Method::Svdd { c: None, kernel: None },
            Method::Mpm(Default::default()),
            Method::Bsvm(Default::default()),
        ]
    }

    #[test]
    fn every_method_round_trips() {
        let x = FeatureSet::new(gaussian_sample(&mut Rng::new(1), 30, 4, 1.0, 1.0).unwrap(), "x");
        let probe = gaussian_sample(&mut Rng::new(2), 10, 4, 1.0, 2.0).unwrap();
        for method in methods() {
            let fitted = method.fit_model(&x, &Rng::new(3)).unwrap();
            let bytes = encode_fitted_model(&fitted).unwrap();
            let back = decode_fitted_model(Path::new("m"), &bytes).unwrap();
            assert_eq!(encode_fitted_model(&back).unwrap(), bytes, "{}", method.tag());
            let before = fitted.score(&probe).unwrap();
            let after = back.score(&probe).unwrap();
            for (a, b) in before.iter().zip(&after) {
                assert!((a - b).abs() < 1e-4 * (1.0 + a.abs()), "{}: {a} vs {b}", method.tag());
            }
        }
    }

    #[test]
    fn unknown_tag_and_short_blocks() {
        let x = FeatureSet::new(gaussian_sample(&mut Rng::new(1), 20, 3, 0.0, 1.0).unwrap(), "x");
        let fitted = Method::Bsvm(Default::default()).fit_model(&x, &Rng::new(0)).unwrap();
        let bytes = encode_fitted_model(&fitted).unwrap();
        let p = Path::new("b");
        let mut tag = bytes.clone();
        tag[6] = 99;
        assert!(matches!(
            decode_baseline(p, &tag),
            Err(Error::Corrupt { offset: 6, .. })
        ));
        let mut width = bytes.clone();
        width[11] = 4;
        assert!(matches!(decode_baseline(p, &width), Err(Error::Corrupt { .. })));
        assert!(matches!(decode_fitted_model(p, b"GIF8"), Err(Error::BadMagic { .. })));
        assert!(matches!(decode_fitted_model(p, b""), Err(Error::BadMagic { .. })));
    }
}
