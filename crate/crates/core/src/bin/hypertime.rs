use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use hypertime::data::{
    load_csv_multivariate, load_ucr_tsv, save_csv_multivariate, save_ucr_tsv, synth_corpus, write_imputed_csv,
    Dataset, Preset, RunConfig,
};
use hypertime::evaluation::{evaluate, export_projection};
use hypertime::hypertime::{interpolate_generate, pca_generate, train_hypertime, Generated, HyperTimeModel};
use hypertime::imputation::{benchmark, impute, mask_series, ImputationMethod};
use hypertime::inr::{self, compare_activations, fit, Activation, InrModel};
use hypertime::series::uniform_grid;
use hypertime::{rng, Error, Result, TimeSeries};

const OUT_DIR_ENV: &str = "HYPERTIME_OUT_DIR";

/// Time series as implicit neural representations.
#[derive(Parser)]
#[command(name = "hypertime", version)]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: $HYPERTIME_OUT_DIR, then ./out).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    max_series: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArgs {
    /// Dataset file: `.csv` (wide or long layout) or UCR-style TSV.
    #[arg(long)]
    data: PathBuf,
    /// Channel count for CSV input.
    #[arg(long, default_value_t = 1)]
    channels: usize,
}

#[derive(Args)]
struct InrArgs {
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    omega0: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one INR to one series and save it.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        inr: InrArgs,
        #[arg(long)]
        activation: Option<Activation>,
        /// Position of the series in the dataset.
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
    /// Evaluate a saved INR on a uniform grid.
    Reconstruct {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        length: usize,
    },
    /// Fit every activation to every series and tabulate the errors.
    CompareActivations {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        inr: InrArgs,
    },
    /// Mask, impute and score; writes per-method reports and one imputed series per method.
    Impute {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        inr: InrArgs,
        #[arg(long, default_value_t = 0.5)]
        fraction: f64,
        /// Comma-separated methods (default: all).
        #[arg(long, value_delimiter = ',')]
        methods: Vec<ImputationMethod>,
        #[arg(long)]
        tv_weight: Option<f64>,
        /// Series written out as CSV.
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
    /// Train the hypernetwork on a dataset.
    TrainHypertime {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        lambda_fft: Option<f64>,
    },
    /// Synthesize series by latent interpolation.
    Generate {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        n_samples: Option<usize>,
    },
    /// Synthesize series by interpolating PCA coefficients.
    BaselinePca {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        n_samples: Option<usize>,
        #[arg(long)]
        components: Option<usize>,
    },
    /// Score a synthetic dataset against a real one.
    Evaluate {
        #[arg(long)]
        real: PathBuf,
        #[arg(long)]
        synth: PathBuf,
        #[arg(long, default_value_t = 1)]
        channels: usize,
        /// Also write a 2-D PCA projection of both sets to this CSV.
        #[arg(long)]
        projection: Option<PathBuf>,
    },
    /// Write a synthetic corpus.
    SynthData {
        #[arg(long)]
        preset: Preset,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 128)]
        length: usize,
    },
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    command: &'a str,
    config: &'a RunConfig,
    result: T,
}

struct Ctx {
    config: RunConfig,
    out: PathBuf,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write_report<T: Serialize>(&self, command: &str, name: &str, result: T) -> Result<PathBuf> {
        let report = Report {
            command,
            config: &self.config,
            result,
        };
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    fn load(&self, data: &DataArgs) -> Result<Dataset> {
        let d = load_dataset(&data.data, data.channels)?;
        Ok(d.capped(self.config.max_series, self.config.seed))
    }
}

fn load_dataset(path: &Path, channels: usize) -> Result<Dataset> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => load_csv_multivariate(path, channels),
        _ => load_ucr_tsv(path),
    }
}

fn apply_inr(config: &mut RunConfig, a: &InrArgs) {
    if let Some(v) = a.epochs {
        config.inr.epochs = v;
    }
    if let Some(v) = a.lr {
        config.inr.lr = v;
    }
    if let Some(v) = a.omega0 {
        config.inr.omega0 = v;
    }
}

/// Writes generated series next to a JSON list of their provenance.
fn save_generated(ctx: &Ctx, name: &str, generated: &[Generated]) -> Result<PathBuf> {
    let series: Vec<TimeSeries> = generated.iter().map(|g| g.series.clone()).collect();
    let d = Dataset::new(name, series, None)?;
    let path = if d.channels() == Some(1) {
        let p = ctx.path(&format!("{name}.tsv"));
        save_ucr_tsv(&d, &p)?;
        p
    } else {
        let p = ctx.path(&format!("{name}.csv"));
        save_csv_multivariate(&d, &p)?;
        p
    };
    #[derive(Serialize)]
    struct Draw {
        a: usize,
        b: usize,
        alpha: f64,
    }
    let draws: Vec<Draw> = generated
        .iter()
        .map(|g| Draw {
            a: g.a,
            b: g.b,
            alpha: g.alpha,
        })
        .collect();
    ctx.write_report(name, &format!("{name}.json"), draws)?;
    Ok(path)
}

fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(m) = cli.max_series {
        config.max_series = m;
    }
    if let Some(d) = &cli.out_dir {
        config.output_dir = Some(d.clone());
    }
    match &cli.command {
        Command::Fit { inr, activation, .. } => {
            apply_inr(&mut config, inr);
            if let Some(a) = activation {
                config.inr.activation = *a;
            }
        }
        Command::CompareActivations { inr, .. } => apply_inr(&mut config, inr),
        Command::Impute { inr, tv_weight, .. } => {
            apply_inr(&mut config, inr);
            if let Some(w) = tv_weight {
                config.imputation.tv_weight = *w;
            }
        }
        Command::TrainHypertime {
            epochs, lr, lambda_fft, ..
        } => {
            if let Some(v) = epochs {
                config.hypertime.epochs = *v;
            }
            if let Some(v) = lr {
                config.hypertime.lr = *v;
            }
            if let Some(v) = lambda_fft {
                config.hypertime.lambdas.fft = *v;
            }
        }
        Command::Generate { n_samples, .. } => {
            if let Some(n) = n_samples {
                config.generation.n_samples = *n;
            }
        }
        Command::BaselinePca {
            n_samples, components, ..
        } => {
            if let Some(n) = n_samples {
                config.generation.n_samples = *n;
            }
            if let Some(k) = components {
                config.generation.pca_components = *k;
            }
        }
        _ => {}
    }
    config.validate()?;

    let out = config
        .output_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let ctx = Ctx { config, out };
    let cfg = &ctx.config;
    let seed = cfg.seed;

    match cli.command {
        Command::SynthData { preset, n, length } => {
            let d = synth_corpus(preset, n, length, seed)?;
            let path = ctx.path(&format!("{}.tsv", preset.name()));
            save_ucr_tsv(&d, &path)?;
            Ok(vec![path])
        }
        Command::Fit { data, index, .. } => {
            let d = load_dataset(&data.data, data.channels)?;
            let series = d
                .series
                .get(index)
                .ok_or_else(|| Error::invalid(format!("dataset has {} series, index {index} requested", d.len())))?;
            let spec = cfg.inr_spec(series.channels())?;
            let result = fit(series, &spec, &cfg.fit_options())?;
            let model = InrModel {
                params: result.params,
                scale: series.scale().to_vec(),
            };
            let model_path = ctx.path("model.inr");
            model.save(&model_path)?;
            #[derive(Serialize)]
            struct FitReport {
                index: usize,
                final_mse: f64,
                loss_history: Vec<f64>,
            }
            let report = ctx.write_report(
                "fit",
                "fit_report.json",
                FitReport {
                    index,
                    final_mse: result.final_mse,
                    loss_history: result.loss_history,
                },
            )?;
            Ok(vec![model_path, report])
        }
        Command::Reconstruct { model, length } => {
            if length < 2 {
                return Err(Error::invalid("reconstruction length must be at least 2"));
            }
            let m = InrModel::load(&model)?;
            let t = uniform_grid(length);
            let out = inr::evaluate(&m.params, &t)?;
            let values = out.data().chunks(length).map(<[f64]>::to_vec).collect();
            let series = TimeSeries::new(t, values, None, m.scale)?;
            let path = ctx.path("reconstruction.csv");
            let text = write_imputed_csv(&series, &vec![true; length])?;
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            Ok(vec![path])
        }
        Command::CompareActivations { data, .. } => {
            let d = load_dataset(&data.data, data.channels)?;
            let table = compare_activations(&d.series, &cfg.compare_options())?;
            Ok(vec![ctx.write_report("compare-activations", "compare_activations.json", table)?])
        }
        Command::Impute {
            data,
            fraction,
            methods,
            index,
            ..
        } => {
            let d = ctx.load(&data)?;
            let methods = if methods.is_empty() {
                ImputationMethod::ALL.to_vec()
            } else {
                methods
            };
            let opts = cfg.impute_options();
            let reports = benchmark(&d.series, &[fraction], &methods, &opts)?;
            let mut written = vec![ctx.write_report("impute", "imputation_report.json", &reports)?];
            let series = d
                .series
                .get(index)
                .ok_or_else(|| Error::invalid(format!("dataset has {} series, index {index} requested", d.len())))?;
            let masked = mask_series(series, fraction, rng::derive(seed, index as u64))?;
            for method in methods {
                let (imputed, _) = impute(&masked, method, &opts)?;
                let path = ctx.path(&format!("imputed_{}.csv", method.name().to_ascii_lowercase()));
                std::fs::write(&path, write_imputed_csv(&imputed, &masked.mask())?).map_err(|e| Error::io(&path, e))?;
                written.push(path);
            }
            Ok(written)
        }
        Command::TrainHypertime { data, .. } => {
            let d = ctx.load(&data)?;
            let trained = train_hypertime(&d.series, &cfg.hypertime, seed)?;
            let model_path = ctx.path("hypertime.hyt");
            trained.model.save(&model_path)?;
            let report = ctx.write_report("train-hypertime", "train_report.json", &trained.history)?;
            Ok(vec![model_path, report])
        }
        Command::Generate { model, data, .. } => {
            let d = ctx.load(&data)?;
            let m = HyperTimeModel::load(&model)?;
            let g = &cfg.generation;
            let generated = interpolate_generate(&m, &d.series, g.n_samples, g.alpha, seed)?;
            Ok(vec![save_generated(&ctx, "generated", &generated)?])
        }
        Command::BaselinePca { data, .. } => {
            let d = ctx.load(&data)?;
            let g = &cfg.generation;
            let generated = pca_generate(&d.series, g.pca_components, g.n_samples, g.alpha, seed)?;
            Ok(vec![save_generated(&ctx, "pca_generated", &generated)?])
        }
        Command::Evaluate {
            real,
            synth,
            channels,
            projection,
        } => {
            let r = load_dataset(&real, channels)?;
            let s = load_dataset(&synth, channels)?;
            let report = evaluate(&r.series, &s.series, &cfg.evaluation)?;
            let mut written = vec![ctx.write_report("evaluate", "eval_report.json", report)?];
            if let Some(p) = projection {
                std::fs::write(&p, export_projection(&r.series, &s.series)?).map_err(|e| Error::io(&p, e))?;
                written.push(p);
            }
            Ok(written)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
