use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use super::roc::{auroc, roc_curve};
use crate::data::{FeatureSet, ProtocolSplit};
use crate::numerics::Matrix;
use crate::{Error, Result, Rng};

/// A fitted one-class scorer; higher scores mean more target-like.
pub trait Scorer {
    fn score(&self, x: &Matrix) -> Result<Vec<f64>>;
}

/// Something that can be fit on target-class data alone.
pub trait OneClassMethod {
    fn name(&self) -> String;
    fn fit(&self, train: &FeatureSet, rng: &mut Rng) -> Result<Box<dyn Scorer>>;
}

/// Outcome of one (method, class) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub method: String,
    pub class: String,
    pub auroc: f64,
    pub n_target_test: usize,
    pub n_negative_test: usize,
    pub roc: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellFailure {
    pub class: String,
    pub error: Error,
}

/// All cells of one method.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkResult {
    pub method: String,
    pub reports: Vec<EvalReport>,
    /// Cells that failed; they are excluded from the mean.
    pub failures: Vec<CellFailure>,
    /// Mean AUROC over successful cells, `None` if every cell failed.
    pub mean_auroc: Option<f64>,
}

impl BenchmarkResult {
    pub fn from_cells(method: String, cells: Vec<(String, Result<EvalReport>)>) -> Self {
        let mut reports = Vec::new();
        let mut failures = Vec::new();
        for (class, cell) in cells {
            match cell {
                Ok(r) => reports.push(r),
                Err(error) => failures.push(CellFailure { class, error }),
            }
        }
        let mean_auroc = if reports.is_empty() {
            None
        } else {
            Some(reports.iter().map(|r| r.auroc).sum::<f64>() / reports.len() as f64)
        };
        BenchmarkResult {
            method,
            reports,
            failures,
            mean_auroc,
        }
    }
}

/// Fits `method` on the split's training data and scores both test sets.
///
/// The cell's randomness comes from the `<method>/<class>` substream of `rng`.
pub fn run_cell(method: &dyn OneClassMethod, split: &ProtocolSplit, rng: &Rng) -> Result<EvalReport> {
    let name = method.name();
    let mut cell_rng = rng.substream(&alloc::format!("{name}/{}", split.class));
    let scorer = method.fit(&split.train, &mut cell_rng)?;
    let target = scorer.score(&split.target_test.data)?;
    let negative = scorer.score(&split.negative_test.data)?;
    if target.iter().chain(&negative).any(|s| !s.is_finite()) {
        return Err(Error::Numerical("non-finite score".into()));
    }
    Ok(EvalReport {
        method: name,
        class: split.class.clone(),
        auroc: auroc(&target, &negative)?,
        n_target_test: target.len(),
        n_negative_test: negative.len(),
        roc: roc_curve(&target, &negative)?,
    })
}

/// Runs every method on every split, sequentially.
pub fn run_benchmark(
    methods: &[&dyn OneClassMethod],
    splits: &[ProtocolSplit],
    rng: &Rng,
) -> Result<Vec<BenchmarkResult>> {
    if splits.is_empty() {
        return Err(Error::Input("benchmark needs at least one split".into()));
    }
    Ok(methods
        .iter()
        .map(|&m| {
            let cells = splits.iter().map(|s| (s.class.clone(), run_cell(m, s, rng))).collect();
            BenchmarkResult::from_cells(m.name(), cells)
        })
        .collect())
}
