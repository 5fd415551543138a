//! The `occnn` command line: `train`, `score`, `benchmark` and `synth`.
//!
//! Every subcommand derives its randomness from `--seed` through a named
//! substream (`train`, `splits`, `synth`), so equal arguments give
//! byte-identical outputs.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use occnn_core::baselines::{BsvmParams, KernelSpec, MpmParams};
use occnn_core::data::{
    build_abnormality_protocol, build_auth_protocol, build_novelty_protocol, synth_dataset, FeatureSet, ProtocolSplit,
    SynthKind, SynthParams, DEFAULT_NOVEL_PER_CLASS,
};
use occnn_core::eval::{run_cell, BenchmarkResult, EvalReport, Scorer};
use occnn_core::methods::{Method, NetworkTemplate, OcCnnSettings, DEFAULT_NU};
use occnn_core::nn::{Activation, InstanceNormSpec};
use occnn_core::occnn::{self, Resample, TrainConfig};
use occnn_core::Rng;

use crate::baseline_file::{load_fitted_model, save_fitted_model};
use crate::container::write_file;
use crate::error::{exit, Error, Result};
use crate::features::{load_feature_file, save_feature_file, FeatureFormat};
use crate::manifest::{LoadedManifest, Manifest};
use crate::model_file::save_model;

#[derive(Parser, Debug)]
#[command(
    name = "occnn",
    version,
    about = "One-class classification with Gaussian pseudo-negatives in feature space"
)]
pub struct Cli {
    /// Seed for all random draws
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit one method on one class of a manifest and write the model file
    Train(TrainArgs),
    /// Score a feature file with a saved model, one score per line
    Score(ScoreArgs),
    /// Run methods over a protocol and report per-class AUROC
    Benchmark(BenchmarkArgs),
    /// Write a synthetic dataset and its manifest
    Synth(SynthArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodKind {
    Occnn,
    Ocsvm,
    #[value(name = "ocsvm_plus")]
    OcsvmPlus,
    Svdd,
    Mpm,
    Bsvm,
}

impl MethodKind {
    pub const ALL: [MethodKind; 6] = [
        MethodKind::Occnn,
        MethodKind::Ocsvm,
        MethodKind::OcsvmPlus,
        MethodKind::Svdd,
        MethodKind::Mpm,
        MethodKind::Bsvm,
    ];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ActivationArg {
    Relu,
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ResampleArg {
    Batch,
    Epoch,
    Once,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProtocolArg {
    Abnormality,
    Auth,
    Novelty,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SynthKindArg {
    Blobs,
    Ring,
    Manifold,
}

/// `rbf` (width from the data), `rbf:GAMMA` or `linear`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelArg(pub Option<KernelSpec>);

impl FromStr for KernelArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "linear" => Ok(KernelArg(Some(KernelSpec::Linear))),
            "rbf" | "auto" => Ok(KernelArg(None)),
            _ => {
                let gamma = s
                    .strip_prefix("rbf:")
                    .and_then(|g| g.parse::<f64>().ok())
                    .ok_or_else(|| format!("expected linear, rbf or rbf:GAMMA, got {s:?}"))?;
                let spec = KernelSpec::Rbf { gamma };
                spec.validate().map_err(|e| e.to_string())?;
                Ok(KernelArg(Some(spec)))
            }
        }
    }
}

/// Comma-separated layer widths; an empty string means no head layers.
#[derive(Clone, Debug, PartialEq)]
pub struct HeadDims(pub Vec<usize>);

impl FromStr for HeadDims {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.trim().is_empty() {
            return Ok(HeadDims(Vec::new()));
        }
        s.split(',')
            .map(|w| w.trim().parse::<usize>().map_err(|_| format!("bad layer width {w:?}")))
            .collect::<std::result::Result<_, _>>()
            .map(HeadDims)
    }
}

#[derive(Args, Debug, Clone)]
pub struct NetworkArgs {
    /// Standard deviation of the pseudo-negative Gaussian
    #[arg(long, default_value_t = 0.01)]
    pub sigma: f64,

    /// Mean of the pseudo-negative Gaussian (every coordinate)
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub mu: f64,

    /// Adam learning rate
    #[arg(long, default_value_t = 1e-4)]
    pub lr: f64,

    /// Real samples per mini-batch (as many pseudo-negatives are added)
    #[arg(long, default_value_t = 64)]
    pub batch: usize,

    /// Passes over the target class
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,

    /// Head layer widths, e.g. 512,512; empty for none [default: input width twice]
    #[arg(long)]
    pub head_dims: Option<HeadDims>,

    /// Skip instance normalization of the features
    #[arg(long)]
    pub no_instance_norm: bool,

    /// Activation after the first classifier layer
    #[arg(long, value_enum, default_value_t = ActivationArg::Relu)]
    pub classifier_activation: ActivationArg,

    /// How often pseudo-negatives are redrawn
    #[arg(long, value_enum, default_value_t = ResampleArg::Batch)]
    pub resample: ResampleArg,
}

impl NetworkArgs {
    fn settings(&self) -> OcCnnSettings {
        OcCnnSettings {
            train: TrainConfig {
                sigma: self.sigma,
                mu: self.mu,
                lr: self.lr,
                batch_size: self.batch,
                epochs: self.epochs,
                seed: 0,
                resample: match self.resample {
                    ResampleArg::Batch => Resample::Batch,
                    ResampleArg::Epoch => Resample::Epoch,
                    ResampleArg::Once => Resample::Once,
                },
            },
            network: NetworkTemplate {
                head_dims: self.head_dims.clone().map(|h| h.0),
                instance_norm: (!self.no_instance_norm).then(InstanceNormSpec::default),
                classifier_activation: match self.classifier_activation {
                    ActivationArg::Relu => Activation::Relu,
                    ActivationArg::Identity => Activation::Identity,
                },
            },
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct BaselineArgs {
    /// Kernel for ocsvm, ocsvm_plus and svdd: rbf, rbf:GAMMA or linear
    #[arg(long, default_value = "rbf")]
    pub kernel: KernelArg,

    /// OC-SVM nu, the outlier fraction bound
    #[arg(long, default_value_t = DEFAULT_NU)]
    pub nu: f64,

    /// SVDD box bound [default: 1/(0.1 n)]
    #[arg(long)]
    pub svdd_c: Option<f64>,

    /// MPM principal components [default: min(16, D, n-1)]
    #[arg(long)]
    pub mpm_dims: Option<usize>,

    /// BSVM regularization strength
    #[arg(long, default_value_t = 1e-2)]
    pub bsvm_lambda: f64,
}

fn build_method(kind: MethodKind, net: &NetworkArgs, base: &BaselineArgs) -> Method {
    let kernel = base.kernel.0;
    match kind {
        MethodKind::Occnn => Method::OcCnn(net.settings()),
        MethodKind::Ocsvm => Method::OcSvm { nu: base.nu, kernel },
        MethodKind::OcsvmPlus => Method::OcSvmPlus {
            occnn: net.settings(),
            nu: base.nu,
            kernel,
        },
        MethodKind::Svdd => Method::Svdd { c: base.svdd_c, kernel },
        MethodKind::Mpm => Method::Mpm(MpmParams {
            pca_dims: base.mpm_dims,
            ..MpmParams::default()
        }),
        MethodKind::Bsvm => Method::Bsvm(BsvmParams {
            sigma: net.sigma,
            lambda: base.bsvm_lambda,
            ..BsvmParams::default()
        }),
    }
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// JSON dataset manifest
    #[arg(long)]
    pub manifest: PathBuf,

    /// Target class name from the manifest
    #[arg(long)]
    pub class: String,

    #[arg(long, value_enum, default_value_t = MethodKind::Occnn)]
    pub method: MethodKind,

    /// Model file to write (OCNN for occnn, OCBL otherwise)
    #[arg(long)]
    pub out: PathBuf,

    /// Per-epoch loss CSV for occnn [default: <out>.loss.csv]
    #[arg(long)]
    pub history: Option<PathBuf>,

    #[command(flatten)]
    pub network: NetworkArgs,

    #[command(flatten)]
    pub baseline: BaselineArgs,
}

#[derive(Args, Debug)]
pub struct ScoreArgs {
    /// OCNN or OCBL model file
    #[arg(long)]
    pub model: PathBuf,

    /// Feature file to score
    #[arg(long)]
    pub input: PathBuf,

    /// Feature file format [default: from the extension, .csv or OCFV]
    #[arg(long)]
    pub format: Option<FeatureFormat>,

    /// Output file [default: standard output]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchmarkArgs {
    /// JSON dataset manifest
    #[arg(long)]
    pub manifest: PathBuf,

    /// auth: each class against all others; novelty: half the classes
    /// against held-out samples of the other half; abnormality: every other
    /// class against --abnormal
    #[arg(long, value_enum)]
    pub protocol: ProtocolArg,

    /// Comma-separated methods, reported in this order
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = MethodKind::ALL)]
    pub method: Vec<MethodKind>,

    /// Class holding the abnormal samples (abnormality protocol)
    #[arg(long)]
    pub abnormal: Option<String>,

    /// Samples taken from each novel class (novelty protocol)
    #[arg(long, default_value_t = DEFAULT_NOVEL_PER_CLASS)]
    pub novel_per_class: usize,

    /// CSV file for per-class results [default: standard output]
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Worker threads for independent cells
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,

    #[command(flatten)]
    pub network: NetworkArgs,

    #[command(flatten)]
    pub baseline: BaselineArgs,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: SynthKindArg,

    #[arg(long, default_value_t = 5)]
    pub classes: usize,

    #[arg(long, default_value_t = 200)]
    pub per_class: usize,

    #[arg(long, default_value_t = 16)]
    pub dim: usize,

    /// Distance between class centers [default: per kind]
    #[arg(long)]
    pub separation: Option<f64>,

    /// Isotropic noise standard deviation [default: per kind]
    #[arg(long)]
    pub noise: Option<f64>,

    /// Ring radius or curve half-length [default: per kind]
    #[arg(long)]
    pub extent: Option<f64>,

    /// Bound of the shared per-dimension baseline [default: per kind]
    #[arg(long)]
    pub offset: Option<f64>,

    #[arg(long, default_value = "ocfv")]
    pub format: FeatureFormat,

    /// Output directory; receives one file per class and manifest.json
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code. Errors go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::USAGE } else { exit::OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<i32> {
    let root = Rng::new(cli.seed);
    match &cli.command {
        Command::Train(a) => cmd_train(a, &root),
        Command::Score(a) => cmd_score(a),
        Command::Benchmark(a) => cmd_benchmark(a, &root),
        Command::Synth(a) => cmd_synth(a, &root),
    }
}

fn cmd_train(args: &TrainArgs, root: &Rng) -> Result<i32> {
    let manifest = LoadedManifest::open(&args.manifest)?;
    let data = manifest.load_class(&args.class)?;
    let rng = root.substream("train");
    let method = build_method(args.method, &args.network, &args.baseline);
    if let Method::OcCnn(settings) = &method {
        let cfg = TrainConfig {
            seed: rng.substream("occnn").next_u64(),
            ..settings.train.clone()
        };
        let (model, history) = occnn::train(&data, &cfg, &settings.network.build(data.d()))?;
        save_model(&model, &args.out)?;
        let mut csv = String::from("epoch,loss\n");
        for (i, loss) in history.iter().enumerate() {
            writeln!(csv, "{},{loss}", i + 1).unwrap();
        }
        let history_path = args.history.clone().unwrap_or_else(|| suffixed(&args.out, ".loss.csv"));
        write_file(&history_path, csv.as_bytes())?;
    } else {
        save_fitted_model(&method.fit_model(&data, &rng)?, &args.out)?;
    }
    Ok(exit::OK)
}

fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_file(path, text.as_bytes()),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn cmd_score(args: &ScoreArgs) -> Result<i32> {
    let model = load_fitted_model(&args.model)?;
    let format = args.format.unwrap_or_else(|| FeatureFormat::from_path(&args.input));
    let data = load_feature_file(&args.input, format)?;
    if data.d() != model.input_dim() {
        return Err(Error::Format {
            path: args.input.clone(),
            reason: format!("has {} columns, model expects {}", data.d(), model.input_dim()),
        });
    }
    let mut text = String::new();
    for s in model.score(&data.data)? {
        writeln!(text, "{s}").unwrap();
    }
    emit(args.out.as_deref(), &text)?;
    Ok(exit::OK)
}

fn build_splits(args: &BenchmarkArgs, manifest: &LoadedManifest, rng: &Rng) -> Result<Vec<ProtocolSplit>> {
    let sets = manifest.load_all()?;
    Ok(match args.protocol {
        ProtocolArg::Auth => build_auth_protocol(&sets, rng)?,
        ProtocolArg::Novelty => build_novelty_protocol(&sets, rng, args.novel_per_class)?,
        ProtocolArg::Abnormality => {
            let name = args
                .abnormal
                .as_deref()
                .ok_or_else(|| Error::Usage("the abnormality protocol needs --abnormal CLASS".into()))?;
            let (abnormal, normal): (Vec<FeatureSet>, Vec<FeatureSet>) =
                sets.into_iter().partition(|s| s.source == name);
            let abnormal = abnormal.into_iter().next().ok_or_else(|| Error::Format {
                path: manifest.path.clone(),
                reason: format!("no class {name:?}"),
            })?;
            build_abnormality_protocol(&normal, &abnormal, rng)?
        }
    })
}

/// Runs every (method, split) cell, spreading them over `jobs` threads.
/// Cell results do not depend on scheduling.
fn run_cells(methods: &[Method], splits: &[ProtocolSplit], rng: &Rng, jobs: usize) -> Vec<BenchmarkResult> {
    let cells: Vec<(usize, usize)> = (0..methods.len())
        .flat_map(|m| (0..splits.len()).map(move |s| (m, s)))
        .collect();
    let run = |&(m, s): &(usize, usize)| run_cell(&methods[m], &splits[s], rng);
    let mut outcomes: Vec<Option<occnn_core::Result<EvalReport>>> = (0..cells.len()).map(|_| None).collect();
    let jobs = jobs.clamp(1, cells.len().max(1));
    if jobs == 1 {
        for (slot, cell) in outcomes.iter_mut().zip(&cells) {
            *slot = Some(run(cell));
        }
    } else {
        std::thread::scope(|scope| {
            let chunk = cells.len().div_ceil(jobs);
            for (slots, work) in outcomes.chunks_mut(chunk).zip(cells.chunks(chunk)) {
                scope.spawn(move || {
                    for (slot, cell) in slots.iter_mut().zip(work) {
                        *slot = Some(run(cell));
                    }
                });
            }
        });
    }
    let mut outcomes = outcomes.into_iter().map(Option::unwrap);
    methods
        .iter()
        .map(|m| {
            let per_class = splits
                .iter()
                .map(|s| (s.class.clone(), outcomes.next().unwrap()))
                .collect();
            BenchmarkResult::from_cells(m.tag().into(), per_class)
        })
        .collect()
}

fn benchmark_csv(results: &[BenchmarkResult], splits: &[ProtocolSplit]) -> String {
    let mut csv = String::from("method,class,auroc,n_pos,n_neg\n");
    for r in results {
        for split in splits {
            match r.reports.iter().find(|c| c.class == split.class) {
                Some(c) => writeln!(
                    csv,
                    "{},{},{},{},{}",
                    r.method, c.class, c.auroc, c.n_target_test, c.n_negative_test
                ),
                None => writeln!(
                    csv,
                    "{},{},failed,{},{}",
                    r.method,
                    split.class,
                    split.target_test.n(),
                    split.negative_test.n()
                ),
            }
            .unwrap();
        }
    }
    csv
}

/// Classes down, methods across, with a closing mean row.
pub fn benchmark_table(results: &[BenchmarkResult], classes: &[String]) -> String {
    let fmt = |v: Option<f64>| v.map_or_else(|| "failed".to_string(), |a| format!("{a:.4}"));
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut header = vec!["class".to_string()];
    header.extend(results.iter().map(|r| r.method.clone()));
    rows.push(header);
    for class in classes {
        let mut row = vec![class.clone()];
        for r in results {
            row.push(fmt(r.reports.iter().find(|c| &c.class == class).map(|c| c.auroc)));
        }
        rows.push(row);
    }
    let mut mean = vec!["mean".to_string()];
    mean.extend(results.iter().map(|r| fmt(r.mean_auroc)));
    rows.push(mean);

    let widths: Vec<usize> = (0..rows[0].len())
        .map(|j| rows.iter().map(|r| r[j].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &rows {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(j, (cell, w))| {
                if j == 0 {
                    format!("{cell:<w$}")
                } else {
                    format!("{cell:>w$}")
                }
            })
            .collect();
        writeln!(out, "{}", cells.join("  ").trim_end()).unwrap();
    }
    out
}

fn cmd_benchmark(args: &BenchmarkArgs, root: &Rng) -> Result<i32> {
    if args.method.is_empty() {
        return Err(Error::Usage("no methods selected".into()));
    }
    let manifest = LoadedManifest::open(&args.manifest)?;
    let splits = build_splits(args, &manifest, &root.substream("splits"))?;
    let methods: Vec<Method> = args
        .method
        .iter()
        .map(|&k| build_method(k, &args.network, &args.baseline))
        .collect();
    let results = run_cells(&methods, &splits, &root.substream("train"), args.jobs);

    let classes: Vec<String> = splits.iter().map(|s| s.class.clone()).collect();
    let table = benchmark_table(&results, &classes);
    emit(args.out.as_deref(), &benchmark_csv(&results, &splits))?;
    if args.out.is_some() {
        print!("{table}");
    } else {
        eprint!("{table}");
    }
    let mut failed = false;
    for r in &results {
        for f in &r.failures {
            eprintln!("warning: {} on {} failed: {}", r.method, f.class, f.error);
            failed = true;
        }
    }
    Ok(if failed { exit::PARTIAL } else { exit::OK })
}

fn cmd_synth(args: &SynthArgs, root: &Rng) -> Result<i32> {
    let kind = match args.kind {
        SynthKindArg::Blobs => SynthKind::Blobs,
        SynthKindArg::Ring => SynthKind::Ring,
        SynthKindArg::Manifold => SynthKind::Manifold,
    };
    let mut params = SynthParams::new(kind, args.classes, args.per_class, args.dim);
    params.separation = args.separation.unwrap_or(params.separation);
    params.noise = args.noise.unwrap_or(params.noise);
    params.extent = args.extent.unwrap_or(params.extent);
    params.offset = args.offset.unwrap_or(params.offset);
    let sets = synth_dataset(&params, &mut root.substream("synth"))?;

    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let mut manifest = Manifest {
        dim: args.dim,
        classes: Default::default(),
        format: args.format,
    };
    for set in &sets {
        let file = PathBuf::from(format!("{}.{}", set.source, args.format.extension()));
        save_feature_file(set, &args.out.join(&file), args.format, true)?;
        manifest.classes.insert(set.source.clone(), file);
    }
    manifest.save(&args.out.join("manifest.json"))?;
    Ok(exit::OK)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn kernel_and_head_parsing() {
        assert_eq!("rbf".parse::<KernelArg>().unwrap(), KernelArg(None));
        assert_eq!(
            "rbf:0.5".parse::<KernelArg>().unwrap(),
            KernelArg(Some(KernelSpec::Rbf { gamma: 0.5 }))
        );
        assert!("rbf:-1".parse::<KernelArg>().is_err());
        assert!("poly".parse::<KernelArg>().is_err());
        assert_eq!("".parse::<HeadDims>().unwrap(), HeadDims(vec![]));
        assert_eq!("8, 4".parse::<HeadDims>().unwrap(), HeadDims(vec![8, 4]));
        assert!("8,x".parse::<HeadDims>().is_err());
    }

    #[test]
    fn training_defaults() {
        let cli = Cli::try_parse_from(["occnn", "train", "--manifest", "m", "--class", "c", "--out", "o"]).unwrap();
        let Command::Train(t) = cli.command else { panic!() };
        let s = t.network.settings();
        assert_eq!((s.train.sigma, s.train.lr, s.train.batch_size), (0.01, 1e-4, 64));
        assert_eq!(s.train.mu, 0.0);
        assert_eq!(cli.seed, 0);
    }

    #[test]
    fn method_order_is_kept() {
        let cli = Cli::try_parse_from([
            "occnn",
            "benchmark",
            "--manifest",
            "m",
            "--protocol",
            "auth",
            "--method",
            "svdd,occnn,ocsvm_plus",
        ])
        .unwrap();
        let Command::Benchmark(b) = cli.command else { panic!() };
        assert_eq!(b.method, [MethodKind::Svdd, MethodKind::Occnn, MethodKind::OcsvmPlus]);
    }

    #[test]
    fn table_layout() {
        let report = |class: &str, auroc| EvalReport {
            method: "m".into(),
            class: class.into(),
            auroc,
            n_target_test: 1,
            n_negative_test: 1,
            roc: vec![],
        };
        let results = vec![BenchmarkResult::from_cells(
            "occnn".into(),
            vec![("a".into(), Ok(report("a", 0.5))), ("bb".into(), Ok(report("bb", 1.0)))],
        )];
        let table = benchmark_table(&results, &["a".into(), "bb".into()]);
        assert_eq!(table, "class   occnn\na      0.5000\nbb     1.0000\nmean   0.7500\n");
    }
}
