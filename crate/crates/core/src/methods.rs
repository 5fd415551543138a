//! The concrete methods behind the benchmark and the command-line tool.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::baselines::{
    bsvm_fit, mpm_fit, ocsvm_fit, ocsvm_plus_fit, svdd_fit, BsvmModel, BsvmParams, KernelSpec, MpmModel, MpmParams,
    OcSvmModel, OcSvmPlusModel, SolverParams, SvddModel,
};
use crate::data::FeatureSet;
use crate::eval::{OneClassMethod, Scorer};
use crate::nn::{Activation, InstanceNormSpec, NetworkConfig};
use crate::numerics::Matrix;
use crate::occnn::{self, OcCnnModel, TrainConfig};
use crate::{Result, Rng};

/// Network layout relative to the input dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkTemplate {
    /// Head widths; `None` means `[D_in, D_in]`.
    pub head_dims: Option<Vec<usize>>,
    pub instance_norm: Option<InstanceNormSpec>,
    pub classifier_activation: Activation,
}

impl Default for NetworkTemplate {
    fn default() -> Self {
        NetworkTemplate {
            head_dims: None,
            instance_norm: Some(InstanceNormSpec::default()),
            classifier_activation: Activation::Relu,
        }
    }
}

impl NetworkTemplate {
    pub fn build(&self, input_dim: usize) -> NetworkConfig {
        NetworkConfig {
            input_dim,
            head_dims: self
                .head_dims
                .clone()
                .unwrap_or_else(|| alloc::vec![input_dim, input_dim]),
            instance_norm: self.instance_norm,
            classifier_activation: self.classifier_activation,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct OcCnnSettings {
    pub train: TrainConfig,
    pub network: NetworkTemplate,
}

impl OcCnnSettings {
    /// Trains with a seed drawn from `rng`, ignoring `train.seed`.
    pub fn fit(&self, train: &FeatureSet, rng: &mut Rng) -> Result<OcCnnModel> {
        let cfg = TrainConfig {
            seed: rng.next_u64(),
            ..self.train.clone()
        };
        Ok(occnn::train(train, &cfg, &self.network.build(train.d()))?.0)
    }
}

/// Method selection plus hyperparameters. `kernel: None` picks an RBF kernel
/// with `gamma = 1 / (D var(x))` from the training data.
#[derive(Clone, Debug, PartialEq)]
pub enum Method {
    OcCnn(OcCnnSettings),
    OcSvm {
        nu: f64,
        kernel: Option<KernelSpec>,
    },
    OcSvmPlus {
        occnn: OcCnnSettings,
        nu: f64,
        kernel: Option<KernelSpec>,
    },
    Svdd {
        /// Box bound; `None` means `1 / (0.1 n)`.
        c: Option<f64>,
        kernel: Option<KernelSpec>,
    },
    Mpm(MpmParams),
    Bsvm(BsvmParams),
}

pub const DEFAULT_NU: f64 = 0.1;

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::OcCnn(_) => "occnn",
            Method::OcSvm { .. } => "ocsvm",
            Method::OcSvmPlus { .. } => "ocsvm_plus",
            Method::Svdd { .. } => "svdd",
            Method::Mpm(_) => "mpm",
            Method::Bsvm(_) => "bsvm",
        }
    }

    /// Fits the method on target data. OC-CNN training (also inside
    /// OC-SVM⁺) draws its seed from the `occnn` substream of `rng`, so both
    /// methods see the same network for a given cell seed.
    pub fn fit_model(&self, train: &FeatureSet, rng: &Rng) -> Result<FittedModel> {
        let solver = SolverParams::default();
        let kernel_for = |k: &Option<KernelSpec>, x: &Matrix| k.unwrap_or_else(|| KernelSpec::auto_rbf(x));
        Ok(match self {
            Method::OcCnn(s) => FittedModel::OcCnn(s.fit(train, &mut rng.substream("occnn"))?),
            Method::OcSvm { nu, kernel } => {
                FittedModel::OcSvm(ocsvm_fit(train, *nu, kernel_for(kernel, &train.data), &solver)?)
            }
            Method::OcSvmPlus { occnn, nu, kernel } => {
                let net = occnn.fit(train, &mut rng.substream("occnn"))?;
                FittedModel::OcSvmPlus(ocsvm_plus_fit(&net, train, *nu, *kernel, &solver)?)
            }
            Method::Svdd { c, kernel } => {
                let c = c.unwrap_or(1.0 / (DEFAULT_NU * train.n() as f64));
                FittedModel::Svdd(svdd_fit(train, c, kernel_for(kernel, &train.data), &solver)?)
            }
            Method::Mpm(p) => FittedModel::Mpm(mpm_fit(train, p)?),
            Method::Bsvm(p) => FittedModel::Bsvm(bsvm_fit(train, p, &mut rng.substream("bsvm"))?),
        })
    }
}

impl OneClassMethod for Method {
    fn name(&self) -> String {
        self.tag().into()
    }

    fn fit(&self, train: &FeatureSet, rng: &mut Rng) -> Result<Box<dyn Scorer>> {
        Ok(Box::new(self.fit_model(train, rng)?))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FittedModel {
    OcCnn(OcCnnModel),
    OcSvm(OcSvmModel),
    OcSvmPlus(OcSvmPlusModel),
    Svdd(SvddModel),
    Mpm(MpmModel),
    Bsvm(BsvmModel),
}

impl FittedModel {
    pub fn input_dim(&self) -> usize {
        match self {
            FittedModel::OcCnn(m) => m.input_dim(),
            FittedModel::OcSvm(m) => m.support.cols(),
            FittedModel::OcSvmPlus(m) => m.extractor.input_dim(),
            FittedModel::Svdd(m) => m.support.cols(),
            FittedModel::Mpm(m) => m.basis.rows(),
            FittedModel::Bsvm(m) => m.w.len(),
        }
    }
}

impl Scorer for FittedModel {
    fn score(&self, x: &Matrix) -> Result<Vec<f64>> {
        match self {
            FittedModel::OcCnn(m) => occnn::score(m, x),
            FittedModel::OcSvm(m) => m.score(x),
            FittedModel::OcSvmPlus(m) => m.score(x),
            FittedModel::Svdd(m) => m.score(x),
            FittedModel::Mpm(m) => m.score(x),
            FittedModel::Bsvm(m) => m.score(x),
        }
    }
}
