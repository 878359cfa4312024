#![allow(dead_code)]

use hypertime::autodiff::{NodeId, Tape, Tensor};
use hypertime::data::{synth_corpus, Preset};
use hypertime::hypertime::{hypertime_loss, hypertime_loss_grad, HyperTimeModel, Lambdas, TrainConfig};
use hypertime::imputation::{input_derivative, tv_prior, tv_prior_on_tape};
use hypertime::inr::{evaluate, init_params, MlpSpec};
use hypertime::{rng, Result, TimeSeries};
use rand::Rng;

pub const FD_STEP: f64 = 1e-6;

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, zero when both vanish.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = norm(a).max(norm(b));
    if scale < 1e-300 {
        0.0
    } else {
        norm(&diff) / scale
    }
}

pub fn central_diff(x: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            p[i] = x[i] + FD_STEP;
            let up = f(&p);
            p[i] = x[i] - FD_STEP;
            let down = f(&p);
            p[i] = x[i];
            (up - down) / (2.0 * FD_STEP)
        })
        .collect()
}

pub fn random_tensor(rng: &mut rng::Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
}

/// Values bounded away from zero, for ops with a kink there.
pub fn away_from_zero(rng: &mut rng::Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    let data = (0..n)
        .map(|_| {
            let m = rng.gen_range(0.2..1.5);
            if rng.gen_bool(0.5) {
                m
            } else {
                -m
            }
        })
        .collect();
    Tensor::new(shape.to_vec(), data).unwrap()
}

type Build = Box<dyn Fn(&mut Tape, &[NodeId]) -> Result<NodeId>>;

pub struct OpCase {
    pub name: &'static str,
    pub inputs: Vec<Tensor>,
    pub build: Build,
}

fn case(name: &'static str, inputs: Vec<Tensor>, build: impl Fn(&mut Tape, &[NodeId]) -> Result<NodeId> + 'static) -> OpCase {
    OpCase {
        name,
        inputs,
        build: Box::new(build),
    }
}

/// One small random instance per differentiable op.
pub fn op_cases(seed: u64) -> Vec<OpCase> {
    let mut r = rng::seeded(seed);
    let r = &mut r;
    let u = |r: &mut rng::Rng, s: &[usize]| random_tensor(r, s, -1.0, 1.0);
    vec![
        case("matmul", vec![u(r, &[3, 4]), u(r, &[4, 2])], |t, x| t.matmul(x[0], x[1])),
        case("matmul_nt", vec![u(r, &[3, 4]), u(r, &[5, 4])], |t, x| t.matmul_nt(x[0], x[1])),
        case("add", vec![u(r, &[3, 2]), u(r, &[3, 2])], |t, x| t.add(x[0], x[1])),
        case("sub", vec![u(r, &[3, 2]), u(r, &[3, 2])], |t, x| t.sub(x[0], x[1])),
        case("mul", vec![u(r, &[3, 2]), u(r, &[3, 2])], |t, x| t.mul(x[0], x[1])),
        case("add_row", vec![u(r, &[4, 3]), u(r, &[1, 3])], |t, x| t.add_row(x[0], x[1])),
        case("scale", vec![u(r, &[3, 3])], |t, x| t.scale(x[0], -2.5)),
        case("add_scalar", vec![u(r, &[3, 3])], |t, x| t.add_scalar(x[0], 0.7)),
        case("sin", vec![random_tensor(r, &[4, 3], -3.0, 3.0)], |t, x| t.sin(x[0])),
        case("cos", vec![random_tensor(r, &[4, 3], -3.0, 3.0)], |t, x| t.cos(x[0])),
        case("relu", vec![away_from_zero(r, &[4, 3])], |t, x| t.relu(x[0])),
        case("step", vec![away_from_zero(r, &[4, 3])], |t, x| t.step(x[0])),
        case("tanh", vec![random_tensor(r, &[4, 3], -2.0, 2.0)], |t, x| t.tanh(x[0])),
        case("sigmoid", vec![random_tensor(r, &[4, 3], -3.0, 3.0)], |t, x| t.sigmoid(x[0])),
        case("square", vec![u(r, &[4, 3])], |t, x| t.square(x[0])),
        case("abs", vec![away_from_zero(r, &[4, 3])], |t, x| t.abs(x[0])),
        case("sum", vec![u(r, &[4, 3])], |t, x| t.sum(x[0])),
        case("mean", vec![u(r, &[4, 3])], |t, x| t.mean(x[0])),
        case("mean_rows", vec![u(r, &[5, 3])], |t, x| t.mean_rows(x[0])),
        case("slice", vec![u(r, &[1, 12])], |t, x| t.slice(x[0], 3, vec![2, 4])),
        case("concat", vec![u(r, &[2, 3]), u(r, &[3, 3])], |t, x| t.concat(&[x[0], x[1]])),
        case("transpose", vec![u(r, &[3, 5])], |t, x| t.transpose(x[0])),
        case("rfft", vec![u(r, &[11, 1])], |t, x| t.rfft(x[0])),
        case("complex_abs", vec![away_from_zero(r, &[6, 2])], |t, x| t.complex_abs(x[0])),
    ]
}

/// Relative error between the tape gradient and central differences of
/// `sum(op(inputs) ⊙ R)` for a fixed random `R`, maximized over inputs.
pub fn op_gradient_error(c: &OpCase, seed: u64) -> f64 {
    let mut probe = Tape::new();
    let ids: Vec<NodeId> = c.inputs.iter().map(|x| probe.constant(x.clone())).collect();
    let out = (c.build)(&mut probe, &ids).unwrap();
    let shape = probe.value(out).shape().to_vec();
    let weights = random_tensor(&mut rng::seeded(seed), &shape, -1.0, 1.0);

    let loss_of = |inputs: &[Tensor], params: bool| -> (Tape, Vec<NodeId>, NodeId) {
        let mut tape = Tape::new();
        let ids: Vec<NodeId> = inputs
            .iter()
            .map(|x| if params { tape.param(x.clone()) } else { tape.constant(x.clone()) })
            .collect();
        let out = (c.build)(&mut tape, &ids).unwrap();
        let w = tape.constant(weights.clone());
        let prod = tape.mul(out, w).unwrap();
        let loss = tape.sum(prod).unwrap();
        (tape, ids, loss)
    };

    let (tape, ids, loss) = loss_of(&c.inputs, true);
    let grads = tape.backward(loss).unwrap();
    let mut worst = 0.0_f64;
    for (k, id) in ids.iter().enumerate() {
        let analytic = grads.wrt(*id).into_data();
        let numeric = central_diff(c.inputs[k].data(), |x| {
            let mut inputs = c.inputs.clone();
            inputs[k] = Tensor::new(c.inputs[k].shape().to_vec(), x.to_vec()).unwrap();
            let (t, _, l) = loss_of(&inputs, false);
            t.scalar(l)
        });
        worst = worst.max(rel_err(&analytic, &numeric));
    }
    worst
}

/// Small HyperTime model with every loss term switched on.
pub fn small_hypertime(seed: u64) -> (HyperTimeModel, Vec<TimeSeries>) {
    let cfg = TrainConfig {
        latent_dim: 4,
        encoder_hidden: vec![8],
        hyper_hidden: vec![8],
        hypo_hidden: vec![6, 6],
        omega0: 5.0,
        lambdas: Lambdas {
            weights: 0.1,
            latent: 0.1,
            fft: 0.5,
        },
        ..TrainConfig::default()
    };
    let model = HyperTimeModel::init(1, &cfg, seed).unwrap();
    let corpus = synth_corpus(Preset::SpectralSpread, 3, 20, seed).unwrap().series;
    (model, corpus)
}

/// Relative gradient error of the full encoder → hypernet → hyponet → loss
/// chain, over a random subset of the parameters of each network.
pub fn hypertime_chain_error(seed: u64, n_probe: usize) -> f64 {
    let (model, corpus) = small_hypertime(seed);
    let batch: Vec<&TimeSeries> = corpus.iter().collect();
    let (_, enc_grad, hyper_grad) = hypertime_loss_grad(&model, &batch).unwrap();
    let mut r = rng::seeded(rng::derive(seed, 99));

    let mut worst = 0.0_f64;
    for which in 0..2 {
        let (flat, grad) = if which == 0 {
            (model.encoder.flat(), &enc_grad)
        } else {
            (model.hyper.flat(), &hyper_grad)
        };
        let idx: Vec<usize> = (0..n_probe).map(|_| r.gen_range(0..flat.len())).collect();
        let mut analytic = Vec::new();
        let mut numeric = Vec::new();
        for &i in &idx {
            let at = |delta: f64| {
                let mut m = model.clone();
                let p = if which == 0 { m.encoder.flat_mut() } else { m.hyper.flat_mut() };
                p[i] += delta;
                hypertime_loss(&m, &batch).unwrap().total
            };
            analytic.push(grad[i]);
            numeric.push((at(FD_STEP) - at(-FD_STEP)) / (2.0 * FD_STEP));
        }
        worst = worst.max(rel_err(&analytic, &numeric));
    }
    worst
}

/// Errors of (input derivative vs. differences in t, TV-prior parameter
/// gradient vs. differences in the weights).
pub fn tv_errors(seed: u64) -> (f64, f64) {
    let spec = MlpSpec::new(vec![1, 8, 8, 2], hypertime::inr::Activation::Sine, 6.0).unwrap();
    let params = init_params(&spec, seed);
    let mut r = rng::seeded(seed);
    let t: Vec<f64> = (0..9).map(|_| r.gen_range(-1.0..1.0)).collect();

    let d = input_derivative(&params, &t).unwrap();
    let mut worst_d = 0.0_f64;
    for (k, &tk) in t.iter().enumerate() {
        let up = evaluate(&params, &[tk + FD_STEP]).unwrap();
        let down = evaluate(&params, &[tk - FD_STEP]).unwrap();
        let numeric: Vec<f64> = up.data().iter().zip(down.data()).map(|(a, b)| (a - b) / (2.0 * FD_STEP)).collect();
        let analytic: Vec<f64> = (0..2).map(|c| d.get2(k, c)).collect();
        worst_d = worst_d.max(rel_err(&analytic, &numeric));
    }

    let mut tape = Tape::new();
    let p = tape.param(Tensor::row(params.flat().to_vec()));
    let loss = tv_prior_on_tape(&mut tape, &spec, p, &t).unwrap();
    let analytic = tape.backward(loss).unwrap().wrt(p).into_data();
    let numeric = central_diff(params.flat(), |x| {
        let pv = hypertime::inr::ParamVector::new(spec.clone(), x.to_vec()).unwrap();
        tv_prior(&pv, &t).unwrap()
    });
    (worst_d, rel_err(&analytic, &numeric))
}

/// Naive DFT of `x` zero-padded to `m`, bins `0..=m/2`.
pub fn naive_dft(x: &[f64], m: usize) -> Vec<(f64, f64)> {
    (0..=m / 2)
        .map(|k| {
            x.iter().enumerate().fold((0.0, 0.0), |(re, im), (n, &v)| {
                let th = -2.0 * std::f64::consts::PI * (k * n) as f64 / m as f64;
                (re + v * th.cos(), im + v * th.sin())
            })
        })
        .collect()
}

/// Max abs deviation of `rfft` from the naive DFT and the Parseval relative
/// error, over lengths `2..=64`.
pub fn fft_oracle_errors(seed: u64) -> (f64, f64) {
    let mut r = rng::seeded(seed);
    let mut dft_err = 0.0_f64;
    let mut parseval_err = 0.0_f64;
    for n in 2..=64 {
        let x: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let s = hypertime::spectral::rfft(&x).unwrap();
        let m = s.padded_len();
        for (b, (re, im)) in s.bins().iter().zip(naive_dft(&x, m)) {
            dft_err = dft_err.max((b.re - re).abs()).max((b.im - im).abs());
        }
        let time: f64 = x.iter().map(|v| v * v).sum();
        let bins = s.bins();
        let last = bins.len() - 1;
        let freq: f64 = bins
            .iter()
            .enumerate()
            .map(|(k, b)| if k == 0 || k == last { b.norm_sqr() } else { 2.0 * b.norm_sqr() })
            .sum::<f64>()
            / m as f64;
        parseval_err = parseval_err.max((time - freq).abs() / time);
    }
    (dft_err, parseval_err)
}

/// Small configuration that keeps every CLI command under a few seconds.
pub const FAST_CONFIG: &str = r#"{
  "seed": 3,
  "max_series": 12,
  "inr": {"epochs": 30, "hidden": [16, 16]},
  "hypertime": {"epochs": 2, "batch_size": 4, "latent_dim": 4, "encoder_hidden": [8],
                "hyper_hidden": [8], "hypo_hidden": [8, 8]},
  "generation": {"n_samples": 12, "pca_components": 5},
  "evaluation": {"predictor": {"epochs": 20, "hidden": 8}}
}"#;

/// Runs every CLI command into `dir/out` and returns the exit codes.
pub fn run_cli_pipeline(dir: &std::path::Path) -> Vec<(&'static str, i32)> {
    use std::process::Command;
    let bin = env!("CARGO_BIN_EXE_hypertime");
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, FAST_CONFIG).unwrap();
    let out = dir.join("out");
    let o = |name: &str| out.join(name).to_str().unwrap().to_string();
    let steps: Vec<(&'static str, Vec<String>)> = vec![
        ("synth-data", vec!["--preset".into(), "multisine".into(), "--n".into(), "12".into(), "--length".into(), "32".into()]),
        ("fit", vec!["--data".into(), o("multisine.tsv"), "--index".into(), "1".into()]),
        ("reconstruct", vec!["--model".into(), o("model.inr"), "--length".into(), "50".into()]),
        ("compare-activations", vec!["--data".into(), o("multisine.tsv")]),
        ("impute", vec!["--data".into(), o("multisine.tsv"), "--fraction".into(), "0.3".into()]),
        ("train-hypertime", vec!["--data".into(), o("multisine.tsv")]),
        ("generate", vec!["--model".into(), o("hypertime.hyt"), "--data".into(), o("multisine.tsv")]),
        ("baseline-pca", vec!["--data".into(), o("multisine.tsv")]),
        (
            "evaluate",
            vec!["--real".into(), o("multisine.tsv"), "--synth".into(), o("generated.tsv"), "--projection".into(), o("projection.csv")],
        ),
    ];
    steps
        .into_iter()
        .map(|(cmd, args)| {
            let status = Command::new(bin)
                .arg(cmd)
                .args(&args)
                .arg("--config")
                .arg(&cfg)
                .env("HYPERTIME_OUT_DIR", &out)
                .output()
                .unwrap();
            (cmd, status.status.code().unwrap_or(-1))
        })
        .collect()
}

/// Files under `dir`, sorted by name, with their bytes.
pub fn dir_contents(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}
