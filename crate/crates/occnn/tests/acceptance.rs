//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use occnn::error::Error;
use occnn::features::{decode_csv, encode_ocfv, load_feature_file, FeatureFormat};
use occnn::model_file::{encode_model, load_model};
use occnn_core::baselines::{ocsvm_fit, svdd_fit, KernelSpec, SolverParams};
use occnn_core::data::FeatureSet;
use occnn_core::eval::{auroc, mann_whitney_u2};
use occnn_core::nn::{bce_loss, Activation, AdamState, InstanceNormSpec, Network, NetworkConfig};
use occnn_core::numerics::{gaussian_sample, symmetric_eigen};
use occnn_core::occnn::{assemble_batch, generate_pseudo_negatives, score, score_latent, train, TrainConfig};
use occnn_core::{Matrix, Rng};

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> std::result::Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

struct Cli {
    code: i32,
    stdout: String,
    stderr: String,
}

fn occnn(args: &[&str]) -> Cli {
    let out = Command::new(env!("CARGO_BIN_EXE_occnn"))
        .args(args)
        .output()
        .expect("occnn binary runs");
    Cli {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn occnn_ok(args: &[&str]) -> std::result::Result<Cli, String> {
    let r = occnn(args);
    ensure(r.code == 0, || {
        format!("`occnn {}` exited {}: {}", args.join(" "), r.code, r.stderr.trim())
    })?;
    Ok(r)
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

fn read(p: &Path) -> std::result::Result<Vec<u8>, String> {
    std::fs::read(p).map_err(|e| format!("{}: {e}", p.display()))
}

// 1 ---------------------------------------------------------------------

const H: f64 = 1e-6;
const FLOOR: f64 = 1e-4;

fn mixed_loss(net: &Network, real: &Matrix, latent: &Matrix, labels: &[u8]) -> f64 {
    let cache = net.forward_mixed(real, Some(latent)).unwrap();
    bce_loss(cache.probs(), labels).unwrap()
}

fn worst_gradient_error(net: &Network, real: &Matrix, latent: &Matrix, labels: &[u8]) -> f64 {
    let cache = net.forward_mixed(real, Some(latent)).unwrap();
    let analytic = net.backward(&cache, labels).unwrap();
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for (t, grad) in analytic.tensors.iter().enumerate() {
        for (i, &g) in grad.iter().enumerate() {
            let orig = probe.tensors()[t][i];
            probe.tensors_mut()[t][i] = orig + H;
            let up = mixed_loss(&probe, real, latent, labels);
            probe.tensors_mut()[t][i] = orig - H;
            let down = mixed_loss(&probe, real, latent, labels);
            probe.tensors_mut()[t][i] = orig;
            let numeric = (up - down) / (2.0 * H);
            worst = worst.max((g - numeric).abs() / g.abs().max(numeric.abs()).max(FLOOR));
        }
    }
    worst
}

fn gradient_correctness() -> Check {
    let start = Instant::now();
    let mut rng = Rng::new(1);
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let d_in = 1 + rng.below(8);
        let d = 1 + rng.below(8);
        let k = 1 + rng.below(4);
        let mut head_dims: Vec<usize> = (0..rng.below(3)).map(|_| 1 + rng.below(8)).collect();
        if let Some(last) = head_dims.last_mut() {
            *last = d;
        }
        let width = head_dims.last().copied().unwrap_or(d_in);
        let cfg = NetworkConfig {
            input_dim: d_in,
            head_dims,
            instance_norm: (width > 1 && rng.below(4) != 0).then(|| InstanceNormSpec {
                epsilon: 1e-5,
                affine: rng.below(2) == 0,
            }),
            classifier_activation: if rng.below(2) == 0 {
                Activation::Relu
            } else {
                Activation::Identity
            },
        };
        let feat = cfg.feature_dim();
        let mut net = Network::init(cfg, &mut rng).map_err(|e| format!("case {case}: {e}"))?;
        for t in net.tensors_mut() {
            if t.len() <= 8 {
                for v in t.iter_mut() {
                    *v += rng.uniform_range(-0.3, 0.3);
                }
            }
        }
        let real = gaussian_sample(&mut rng, k, d_in, 0.5, 1.0).unwrap();
        let latent = gaussian_sample(&mut rng, k, feat, 0.0, 0.5).unwrap();
        let mut labels = vec![1u8; k];
        labels.resize(2 * k, 0);
        let err = worst_gradient_error(&net, &real, &latent, &labels);
        ensure(err < 1e-5, || {
            format!("case {case}: relative error {err:e} ({:?})", net.config())
        })?;
        worst = worst.max(err);
    }
    within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!(
        "50 configs, worst relative error {worst:.1e}, {:.2?}",
        start.elapsed()
    ))
}

// 2 ---------------------------------------------------------------------

fn separable(seed: u64, n: usize) -> FeatureSet {
    FeatureSet::new(gaussian_sample(&mut Rng::new(seed), n, 8, 5.0, 0.1).unwrap(), "target")
}

fn loss_sanity() -> Check {
    let start = Instant::now();
    let cfg = TrainConfig {
        epochs: 30,
        lr: 1e-2,
        seed: 1,
        ..TrainConfig::default()
    };
    let zero = Network::zeros(NetworkConfig::new(8, 8)).unwrap();
    let mut rng = Rng::new(2);
    for k in [1, 2, 7, 64] {
        let mu = rng.uniform_range(-5.0, 5.0);
        let real = gaussian_sample(&mut rng, k, 8, mu, 2.0).unwrap();
        let noise = generate_pseudo_negatives(&mut rng, k, 8, &cfg).unwrap();
        let cache = zero.forward_mixed(&real, Some(&noise)).unwrap();
        let (_, labels) = assemble_batch(&real, &noise).unwrap();
        let loss = bce_loss(cache.probs(), &labels).unwrap();
        ensure((loss - std::f64::consts::LN_2).abs() < 1e-6, || {
            format!("untrained loss {loss} at K={k}")
        })?;
    }

    let (model, history) = train(&separable(1, 512), &cfg, &NetworkConfig::new(8, 8)).map_err(|e| e.to_string())?;
    let last = *history.last().unwrap();
    ensure(last < 0.05, || format!("final loss {last}"))?;
    let held = score(&model, &separable(2, 256).data).unwrap();
    let noise = generate_pseudo_negatives(&mut Rng::new(3), 256, 8, &cfg).unwrap();
    let area = auroc(&held, &score_latent(&model, &noise).unwrap()).unwrap();
    ensure(area >= 0.99, || format!("held-out AUROC {area}"))?;
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!(
        "untrained = ln 2, final loss {last:.4}, AUROC {area:.4}, {:.2?}",
        start.elapsed()
    ))
}

// 3 ---------------------------------------------------------------------

fn auroc_oracle() -> Check {
    let start = Instant::now();
    let mut rng = Rng::new(3);
    for case in 0..1000 {
        let n = 1 + rng.below(50);
        let m = 1 + rng.below(50);
        let mut draw = |len: usize| (0..len).map(|_| rng.below(6) as f64 * 0.5).collect::<Vec<f64>>();
        let (t, neg) = (draw(n), draw(m));
        // twice the number of correctly ordered pairs, ties counting one
        let pairs: u64 = t
            .iter()
            .flat_map(|a| neg.iter().map(move |b| 2 * u64::from(a > b) + u64::from(a == b)))
            .sum();
        let u2 = mann_whitney_u2(&t, &neg).map_err(|e| e.to_string())?;
        ensure(u2 == pairs, || {
            format!("case {case}: rank statistic {u2} vs {pairs} pairs")
        })?;
        let area = auroc(&t, &neg).unwrap();
        ensure(area == pairs as f64 / (2 * n * m) as f64, || {
            format!("case {case}: AUROC {area}")
        })?;
    }
    within(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!("1000 tied instances exact, {:.2?}", start.elapsed()))
}

// 4 ---------------------------------------------------------------------

fn cloud(seed: u64, n: usize, d: usize) -> FeatureSet {
    FeatureSet::new(gaussian_sample(&mut Rng::new(seed), n, d, 0.0, 1.0).unwrap(), "cloud")
}

fn project_capped_simplex(v: &[f64], c: f64) -> Vec<f64> {
    let mass = |t: f64| v.iter().map(|x| (x - t).clamp(0.0, c)).sum::<f64>();
    let mut lo = v.iter().cloned().fold(f64::INFINITY, f64::min) - c - 1.0;
    let mut hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1.0;
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    v.iter().map(|x| (x - t).clamp(0.0, c)).collect()
}

fn half_quad(q: &Matrix, a: &[f64]) -> f64 {
    0.5 * a.iter().zip(q.matvec(a).unwrap()).map(|(x, y)| x * y).sum::<f64>()
}

fn projected_gradient_dual(q: &Matrix, c: f64) -> f64 {
    let n = q.rows();
    let step = 1.0 / symmetric_eigen(q).unwrap().values[0];
    let mut a = project_capped_simplex(&vec![1.0 / n as f64; n], c);
    for _ in 0..100_000 {
        let g = q.matvec(&a).unwrap();
        let v: Vec<f64> = a.iter().zip(&g).map(|(x, gi)| x - step * gi).collect();
        a = project_capped_simplex(&v, c);
    }
    half_quad(q, &a)
}

fn ocsvm_correctness() -> Check {
    let start = Instant::now();
    let solver = SolverParams::default();
    let mut rng = Rng::new(4);
    let mut worst_kkt: f64 = 0.0;
    for case in 0..20u64 {
        let n = 20 + rng.below(60);
        let d = 1 + rng.below(6);
        let nu = 0.05 + 0.9 * rng.uniform();
        let x = cloud(400 + case, n, d);
        let kernel = if case % 2 == 0 {
            KernelSpec::Linear
        } else {
            KernelSpec::auto_rbf(&x.data)
        };
        let model = ocsvm_fit(&x, nu, kernel, &solver).map_err(|e| format!("case {case}: {e}"))?;
        let kkt = model.diagnostics.kkt_residual;
        ensure(kkt < 1e-6, || format!("case {case}: KKT residual {kkt:e}"))?;
        worst_kkt = worst_kkt.max(kkt);
        let c = model.box_bound();
        let frac = |k: usize| k as f64 / n as f64;
        let slack = 1.0 / n as f64;
        let outliers = x.data.row_iter().filter(|r| model.decision(r) < -1e-6).count();
        let bounded = model.alpha.iter().filter(|&&a| a >= c * (1.0 - 1e-9)).count();
        ensure(frac(outliers) <= nu + slack && frac(bounded) <= nu + slack, || {
            format!("case {case}: {outliers} outliers, {bounded} bounded of {n} at nu {nu:.3}")
        })?;
        ensure(frac(model.alpha.len()) >= nu - slack, || {
            format!(
                "case {case}: {} support vectors of {n} at nu {nu:.3}",
                model.alpha.len()
            )
        })?;
    }

    let x = cloud(5, 13, 3);
    for kernel in [KernelSpec::Linear, KernelSpec::Rbf { gamma: 0.7 }] {
        let model = ocsvm_fit(&x, 1.0, kernel, &solver).map_err(|e| e.to_string())?;
        ensure(
            model.alpha.len() == 13 && model.alpha.iter().all(|&a| a == 1.0 / 13.0),
            || format!("nu = 1 gave alpha {:?}", model.alpha),
        )?;
    }

    let mut worst_gap: f64 = 0.0;
    for seed in 0..3 {
        let x = cloud(40 + seed, 20, 2);
        let model = ocsvm_fit(&x, 0.5, KernelSpec::Linear, &solver).map_err(|e| e.to_string())?;
        let oracle = projected_gradient_dual(&KernelSpec::Linear.gram(&x.data), 1.0 / (0.5 * 20.0));
        let gap = (model.diagnostics.objective - oracle).abs();
        ensure(gap < 1e-6, || format!("seed {seed}: dual objective off by {gap:e}"))?;
        worst_gap = worst_gap.max(gap);
    }
    Ok(format!(
        "worst KKT {worst_kkt:.1e}, nu-property on 20 instances, nu = 1 exact, dual gap {worst_gap:.1e}, {:.2?}",
        start.elapsed()
    ))
}

// 5 ---------------------------------------------------------------------

fn svdd_geometry() -> Check {
    let x = FeatureSet::new(Matrix::from_rows(&[vec![-1.0], vec![1.0]]).unwrap(), "pair");
    let model = svdd_fit(&x, 1e3, KernelSpec::Linear, &SolverParams::default()).map_err(|e| e.to_string())?;
    let center = model.linear_center()[0];
    let radius = model.r2.sqrt();
    ensure(center.abs() < 1e-6 && (radius - 1.0).abs() < 1e-6, || {
        format!("center {center}, radius {radius}")
    })?;
    let margin = model.margin_support();
    ensure(!margin.is_empty(), || "no margin support vectors".into())?;
    for i in margin {
        let v = model.decision(model.support.row(i));
        ensure(v.abs() < 1e-6, || format!("margin vector {i} scores {v:e}"))?;
    }
    Ok(format!("center {center:.1e}, R {radius}"))
}

// 6 ---------------------------------------------------------------------

fn mean_auroc(csv: &str, method: &str) -> std::result::Result<f64, String> {
    let values: Vec<f64> = csv
        .lines()
        .skip(1)
        .filter_map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0] == method).then(|| f[2].parse::<f64>())
        })
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| format!("{method}: {e}"))?;
    ensure(!values.is_empty(), || format!("no rows for {method}"))?;
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

fn manifold_ordering(dir: &Path) -> Check {
    let start = Instant::now();
    let data = dir.join("manifold");
    occnn_ok(&[
        "synth",
        "--kind",
        "manifold",
        "--classes",
        "5",
        "--dim",
        "16",
        "--seed",
        "0",
        "--out",
        s(&data),
    ])?;
    let csv = dir.join("manifold.csv");
    #[rustfmt::skip]
    occnn_ok(&[
        "benchmark", "--manifest", s(&data.join("manifest.json")), "--protocol", "auth",
        "--method", "occnn,ocsvm,ocsvm_plus", "--lr", "1e-3", "--epochs", "600", "--batch", "32",
        "--seed", "0", "--out", s(&csv),
    ])?;
    let text = String::from_utf8(read(&csv)?).map_err(|e| e.to_string())?;
    let (cnn, svm, plus) = (
        mean_auroc(&text, "occnn")?,
        mean_auroc(&text, "ocsvm")?,
        mean_auroc(&text, "ocsvm_plus")?,
    );
    let summary = format!("OC-CNN {cnn:.4}, OC-SVM {svm:.4}, OC-SVM+ {plus:.4}");
    ensure(cnn > svm, || format!("{summary}: OC-CNN does not beat OC-SVM"))?;
    ensure(plus >= svm + 0.05, || format!("{summary}: OC-SVM+ margin below 0.05"))?;
    within(start.elapsed(), Duration::from_secs(300))?;
    Ok(format!("{summary}, {:.2?}", start.elapsed()))
}

// 7 ---------------------------------------------------------------------

fn small_dataset(dir: &Path) -> std::result::Result<PathBuf, String> {
    let data = dir.join("blobs");
    if !data.exists() {
        #[rustfmt::skip]
        occnn_ok(&[
            "synth", "--kind", "blobs", "--classes", "3", "--per-class", "120", "--dim", "6",
            "--seed", "11", "--out", s(&data),
        ])?;
    }
    Ok(data.join("manifest.json"))
}

fn determinism(dir: &Path) -> Check {
    let manifest = small_dataset(dir)?;
    let mut models = Vec::new();
    for run in ["a", "b"] {
        let out = dir.join(format!("det_{run}.ocnn"));
        #[rustfmt::skip]
        occnn_ok(&["train", "--manifest", s(&manifest), "--class", "class1", "--epochs", "20", "--seed", "5", "--out", s(&out)])?;
        models.push(read(&out)?);
    }
    ensure(models[0] == models[1], || {
        "model files differ between identical runs".into()
    })?;

    let mut tables = Vec::new();
    for jobs in ["1", "1", "3"] {
        #[rustfmt::skip]
        let r = occnn_ok(&[
            "benchmark", "--manifest", s(&manifest), "--protocol", "auth", "--epochs", "5",
            "--seed", "5", "--jobs", jobs,
        ])?;
        tables.push(r.stdout);
    }
    ensure(tables[0] == tables[1], || {
        "benchmark CSV differs between identical runs".into()
    })?;
    ensure(tables[0] == tables[2], || "benchmark CSV depends on --jobs".into())?;
    Ok(format!(
        "model files ({} bytes) and benchmark CSV identical",
        models[0].len()
    ))
}

// 8 ---------------------------------------------------------------------

fn format_round_trips(dir: &Path) -> Check {
    let manifest = small_dataset(dir)?;
    let feature_path = manifest.with_file_name("class0.ocfv");
    let original = read(&feature_path)?;
    let features = load_feature_file(&feature_path, FeatureFormat::Ocfv).map_err(|e| e.to_string())?;
    ensure(encode_ocfv(&features).map_err(|e| e.to_string())? == original, || {
        "OCFV save -> load -> save changed bytes".into()
    })?;

    let model_path = dir.join("fmt.ocnn");
    #[rustfmt::skip]
    occnn_ok(&["train", "--manifest", s(&manifest), "--class", "class0", "--epochs", "3", "--out", s(&model_path)])?;
    let saved = read(&model_path)?;
    let model = load_model(&model_path).map_err(|e| e.to_string())?;
    ensure(encode_model(&model).map_err(|e| e.to_string())? == saved, || {
        "model save -> load -> save changed bytes".into()
    })?;

    let mut damaged = saved.clone();
    damaged[..4].copy_from_slice(b"XXXX");
    let bad_model = dir.join("bad.ocnn");
    std::fs::write(&bad_model, &damaged).unwrap();
    let r = occnn(&["score", "--model", s(&bad_model), "--input", s(&feature_path)]);
    ensure(r.code == 3 && r.stderr.contains("bad magic"), || {
        format!("bad magic gave exit {} / {:?}", r.code, r.stderr.trim())
    })?;

    let truncated = dir.join("short.ocfv");
    std::fs::write(&truncated, &original[..original.len() - 3]).unwrap();
    let err = load_feature_file(&truncated, FeatureFormat::Ocfv);
    ensure(matches!(err, Err(Error::Truncated { .. })), || {
        format!("truncated OCFV gave {err:?}")
    })?;
    let r = occnn(&["score", "--model", s(&model_path), "--input", s(&truncated)]);
    ensure(r.code == 3, || format!("truncated OCFV exit {}", r.code))?;

    let err = decode_csv(Path::new("x.csv"), "1,2,3\n4,5,6\n7,8\n");
    ensure(matches!(err, Err(Error::Parse { line: 3, .. })), || {
        format!("ragged CSV gave {err:?}")
    })?;
    Ok("OCFV and OCNN byte-identical, BadMagic exit 3, Truncated, Parse at line 3".to_string())
}

// 9 ---------------------------------------------------------------------

fn adam_first_step() -> Check {
    let mut rng = Rng::new(9);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let len = 1 + rng.below(32);
        let lr = 10f64.powf(rng.uniform_range(-5.0, -1.0));
        let grads: Vec<f64> = (0..len)
            .map(|_| {
                let g = 10f64.powf(rng.uniform_range(-10.0, 3.0));
                if rng.below(2) == 0 {
                    g
                } else {
                    -g
                }
            })
            .collect();
        let mut params: Vec<f64> = (0..len).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        let before = params.clone();
        let mut adam = AdamState::new(lr, &[len]);
        adam.step(&mut [params.as_mut_slice()], std::slice::from_ref(&grads))
            .map_err(|e| e.to_string())?;
        for i in 0..len {
            let got = (params[i] - before[i]).abs();
            let want = lr * grads[i].abs() / (grads[i].abs() + 1e-8);
            // the parameter itself is O(1), so its update carries ~1e-16 absolute rounding
            let err = (got - want).abs() / want.max(1e-6);
            ensure(err < 1e-9, || {
                format!("g {:e}, lr {lr:e}: step {got:e} vs {want:e}", grads[i])
            })?;
            ensure((params[i] - before[i]).signum() == -grads[i].signum(), || {
                "step points uphill".into()
            })?;
            worst = worst.max(err);
        }
    }
    Ok(format!("200 random gradients, worst relative error {worst:.1e}"))
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let dir = dir.path();
    let criteria: [(&str, &dyn Fn() -> Check); 9] = [
        ("gradient correctness", &gradient_correctness),
        ("loss sanity", &loss_sanity),
        ("AUROC oracle", &auroc_oracle),
        ("OC-SVM correctness", &ocsvm_correctness),
        ("SVDD geometry", &svdd_geometry),
        ("manifold benchmark ordering", &|| manifold_ordering(dir)),
        ("determinism", &|| determinism(dir)),
        ("format round-trips", &|| format_round_trips(dir)),
        ("Adam first step", &adam_first_step),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
