use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crossco::attacks::{apply_indexed, robustness_rows, AttackSpec};
use crossco::features::{band_cooc, cross_cooc, emit_heatmap, NetKind, Offset, Source};
use crossco::harness::corpus::{read_corpus_meta, CorpusMeta};
use crossco::harness::jpeg_aware::{assign_qfs, pre_compression_sweep, qf_sweep, JpegAwareConfig, EVAL_QFS, TRAIN_QFS};
use crossco::harness::report::{clean_rows, emit_report, Report, ReportFormat};
use crossco::harness::robustness::{clean_eval, robustness_eval, NamedModel};
use crossco::harness::synthetic::{write_dataset, SyntheticConfig};
use crossco::harness::train::{save_outcome, sidecar_path, train_with, Provenance, TrainConfig, NORMALIZATION};
use crossco::harness::{evaluate, extract_corpus, ingest, jpeg_aware_train, load_corpus, ImageSource};
use crossco::jpeg::{self, Chroma};
use crossco::nn::{checkpoint, Network};
use crossco::raster::{load_image, save_image, ImageFormat, RgbImage};
use crossco::rng::GENERATOR_NAME;
use crossco::Error;

/// Co-occurrence based detection of GAN-generated images.
#[derive(Parser)]
#[command(name = "crossco", version, about)]
struct Cli {
    /// Worker threads; 1 runs everything serially.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for initialization, shuffles and noise.
    #[arg(long, global = true, env = "CROSSCOOC_SEED", default_value_t = 0)]
    seed: u64,
    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum NetArg {
    Conet,
    Crossconet,
}

impl From<NetArg> for NetKind {
    fn from(n: NetArg) -> Self {
        match n {
            NetArg::Conet => NetKind::Conet,
            NetArg::Crossconet => NetKind::Crossconet,
        }
    }
}

#[derive(Args, Clone)]
struct OffsetArgs {
    /// Intra-band offset "dr,dc" [default: 1,1, or the value stored with the corpus or model]
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<Offset>,
    /// Cross-band offset "dr,dc" [default: 1,1, or the value stored with the corpus or model]
    #[arg(long = "tau-prime", allow_hyphen_values = true)]
    tau_prime: Option<Offset>,
}

#[derive(Args, Clone)]
struct Hyper {
    /// Width multiplier for filter and hidden-unit counts, in (0, 1].
    #[arg(long = "width-factor", default_value_t = 1.0)]
    width_factor: f64,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 0.9)]
    momentum: f64,
    #[arg(long, default_value_t = 40)]
    batch: usize,
    #[arg(long, default_value_t = 40)]
    epochs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic two-class benchmark as root/real and root/gan.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "per-class", default_value_t = 50)]
        per_class: usize,
        #[arg(long, default_value_t = 128)]
        width: usize,
        #[arg(long, default_value_t = 128)]
        height: usize,
        /// png or ppm.
        #[arg(long, default_value = "png")]
        format: String,
    },
    /// Extract a feature corpus from root/real and root/gan.
    Extract {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = NetArg::Crossconet)]
        net: NetArg,
        #[command(flatten)]
        offsets: OffsetArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply one post-processing operator to an image.
    Attack {
        /// Operator, e.g. median:3, noise:2:seed=7, gamma:1.2, jpeg:75.
        #[arg(long)]
        spec: AttackSpec,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Image index; selects the noise stream.
        #[arg(long, default_value_t = 0)]
        index: u64,
    },
    /// Encode an image as JPEG (.jpg output) or compress and decode it (.png/.ppm output).
    Jpeg {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 75, value_parser = clap::value_parser!(u8).range(1..=100))]
        qf: u8,
        /// 444 or 420.
        #[arg(long, default_value = "444")]
        chroma: Chroma,
    },
    /// Train a detector on a feature corpus.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        /// Validation corpus; the best epoch is also saved as <out>.best.
        #[arg(long)]
        val: Option<PathBuf>,
        /// Detector [default: the corpus layout]
        #[arg(long, value_enum)]
        net: Option<NetArg>,
        #[command(flatten)]
        offsets: OffsetArgs,
        #[command(flatten)]
        hyper: Hyper,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train on JPEG-compressed images from root/real and root/gan.
    TrainJpegAware {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        val: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = NetArg::Crossconet)]
        net: NetArg,
        #[command(flatten)]
        offsets: OffsetArgs,
        #[command(flatten)]
        hyper: Hyper,
        /// Training quality factors.
        #[arg(long = "qf-train", value_delimiter = ',', default_values_t = TRAIN_QFS)]
        qf_train: Vec<u8>,
        /// Images per class and quality factor [default: split each class evenly]
        #[arg(long = "per-qf")]
        per_qf: Option<usize>,
        #[arg(long, default_value = "444")]
        chroma: Chroma,
        #[arg(long)]
        out: PathBuf,
    },
    /// Accuracy of a model on a feature corpus.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        /// Dataset column of the report [default: corpus directory name]
        #[arg(long)]
        dataset: Option<String>,
        /// Write a one-row report (.csv or .json).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Accuracy of models on post-processed images.
    Robustness {
        /// Checkpoint, optionally named: NAME=PATH. Repeatable.
        #[arg(long = "model", required = true)]
        models: Vec<String>,
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        offsets: OffsetArgs,
        /// Operators, comma separated [default: the full robustness table, unless --qf-eval is given]
        #[arg(long, value_delimiter = ',')]
        attacks: Option<Vec<AttackSpec>>,
        /// Quality-factor sweep; use an empty value for the default list.
        #[arg(long = "qf-eval", value_delimiter = ',', num_args = 0..)]
        qf_eval: Option<Vec<u8>>,
        /// Operators applied before compression at each --qf-eval factor.
        #[arg(long = "pre-attacks", value_delimiter = ',', requires = "qf_eval")]
        pre_attacks: Option<Vec<AttackSpec>>,
        #[arg(long, default_value = "444")]
        chroma: Chroma,
        /// Prepend unattacked accuracy rows.
        #[arg(long = "with-clean")]
        with_clean: bool,
        /// Dataset column [default: input directory name]
        #[arg(long)]
        dataset: Option<String>,
        /// Report path; .json selects JSON, anything else CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Concatenate CSV reports and write them as CSV or JSON.
    Report {
        #[arg(long = "in", required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// csv or json [default: from the output extension]
        #[arg(long)]
        format: Option<ReportFormat>,
    },
    /// Render one co-occurrence matrix as a log-scaled 256x256 PGM.
    Heatmap {
        #[arg(long = "in")]
        input: PathBuf,
        /// red, green, blue, rg, rb or gb.
        #[arg(long, default_value = "red")]
        source: Source,
        #[command(flatten)]
        offsets: OffsetArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

type CliResult = Result<(), Error>;

fn usage(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NonFiniteFault(_) => 3,
        Error::Config(_) | Error::BadAttack(_) | Error::BadWindow(_) => 1,
        _ => 2,
    }
}

fn print_config(command: &str, seed: u64, tau: Offset, tau_prime: Offset, extra: serde_json::Value) {
    let mut v = json!({
        "command": command,
        "seed": seed,
        "tau": tau.to_string(),
        "tau_prime": tau_prime.to_string(),
        "normalization": NORMALIZATION,
        "generator": GENERATOR_NAME,
    });
    if let (Some(m), serde_json::Value::Object(e)) = (v.as_object_mut(), extra) {
        m.extend(e);
    }
    eprintln!("config: {v}");
}

fn resolve(flag: Option<Offset>, stored: Option<Offset>, what: &str) -> Result<Offset, Error> {
    match (flag, stored) {
        (Some(f), Some(s)) if f != s => Err(usage(format!("--{what} {f} conflicts with stored value {s}"))),
        (f, s) => Ok(f.or(s).unwrap_or_default()),
    }
}

fn dir_name(path: &Path) -> String {
    path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn is_jpeg(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(), Some("jpg" | "jpeg"))
}

fn read_any(path: &Path) -> Result<RgbImage, Error> {
    if is_jpeg(path) {
        jpeg::decode(&std::fs::read(path)?)
    } else {
        load_image(path)
    }
}

fn write_raster(img: &RgbImage, path: &Path) -> CliResult {
    let format = ImageFormat::from_path(path)
        .ok_or_else(|| usage(format!("{}: output must be .png, .ppm, .jpg or .jpeg", path.display())))?;
    save_image(img, path, format)
}

fn load_provenance(model: &Path) -> Option<Provenance> {
    let text = std::fs::read_to_string(sidecar_path(model)).ok()?;
    serde_json::from_str(&text).ok()
}

fn default_name(net: &Network<f32>) -> &'static str {
    if net.input_shape()[0] == 3 {
        NetKind::Conet.name()
    } else {
        NetKind::Crossconet.name()
    }
}

fn run(cli: Cli) -> CliResult {
    let seed = cli.seed;
    match cli.command {
        Command::Synth { out, per_class, width, height, format } => {
            let format = match format.as_str() {
                "png" => ImageFormat::Png,
                "ppm" => ImageFormat::Ppm,
                f => return Err(usage(format!("format {f:?} (png or ppm)"))),
            };
            let cfg = SyntheticConfig { width, height, ..Default::default() };
            print_config("synth", seed, Offset::default(), Offset::default(), json!({"per_class": per_class, "width": width, "height": height}));
            write_dataset(&out, &cfg, per_class, seed, format)?;
            println!("wrote {} images to {}", 2 * per_class, out.display());
        }
        Command::Extract { input, net, offsets, out } => {
            let (tau, tau_prime) = (offsets.tau.unwrap_or_default(), offsets.tau_prime.unwrap_or_default());
            let kind = NetKind::from(net);
            print_config("extract", seed, tau, tau_prime, json!({"net": kind, "in": input, "out": out}));
            let manifest = ingest(&input)?;
            let summary = extract_corpus(&manifest, tau, tau_prime, kind, &out)?;
            for (path, err) in &summary.failures {
                eprintln!("skipped {}: {err}", path.display());
            }
            println!("extracted {} of {} images ({} failed)", summary.written.len(), manifest.len(), summary.failures.len());
            if summary.written.is_empty() {
                return Err(Error::EmptyClass("every image failed".into()));
            }
        }
        Command::Attack { spec, input, out, index } => {
            spec.validate()?;
            print_config("attack", seed, Offset::default(), Offset::default(), json!({"spec": spec, "index": index}));
            let img = read_any(&input)?;
            let attacked = apply_indexed(&spec, &img, index)?;
            if is_jpeg(&out) {
                std::fs::write(&out, jpeg::encode(&attacked, 95, Chroma::Full)?)?;
            } else {
                write_raster(&attacked, &out)?;
            }
        }
        Command::Jpeg { input, out, qf, chroma } => {
            print_config("jpeg", seed, Offset::default(), Offset::default(), json!({"qf": qf, "chroma": chroma.to_string()}));
            let img = read_any(&input)?;
            let bytes = jpeg::encode(&img, qf, chroma)?;
            let decoded = jpeg::decode(&bytes)?;
            if is_jpeg(&out) {
                std::fs::write(&out, &bytes)?;
            } else {
                write_raster(&decoded, &out)?;
            }
            println!("{} bytes, psnr {:.2} dB", bytes.len(), jpeg::psnr(&img, &decoded)?);
        }
        Command::Train { corpus, val, net, offsets, hyper, out } => {
            let meta = read_corpus_meta(&corpus)?;
            let tau = resolve(offsets.tau, meta.as_ref().map(|m| m.tau), "tau")?;
            let tau_prime = resolve(offsets.tau_prime, meta.as_ref().map(|m| m.tau_prime), "tau-prime")?;
            let set = load_corpus(&corpus)?;
            let kind = match (net, &meta) {
                (Some(n), _) => n.into(),
                (None, Some(CorpusMeta { net, .. })) => *net,
                (None, None) if set.planes() == 3 => NetKind::Conet,
                (None, None) => NetKind::Crossconet,
            };
            let val_set = val.as_ref().map(load_corpus).transpose()?;
            let config = TrainConfig {
                learning_rate: hyper.lr,
                momentum: hyper.momentum,
                batch_size: hyper.batch,
                epochs: hyper.epochs,
                tau,
                tau_prime,
                net: kind,
                width_factor: hyper.width_factor,
                seed,
            };
            print_config("train", seed, tau, tau_prime, json!({"train": config, "samples": set.len()}));
            let outcome = train_with(&set, val_set.as_ref(), &config, |e| {
                match e.val_accuracy {
                    Some(v) => println!("epoch {:>3}  loss {:.6}  val {:.4}", e.epoch + 1, e.mean_loss, v),
                    None => println!("epoch {:>3}  loss {:.6}", e.epoch + 1, e.mean_loss),
                }
                ControlFlow::Continue(())
            })?;
            save_outcome(&outcome, &Provenance::new(&config, &outcome, set.len()), &out)?;
            println!("saved {}", out.display());
        }
        Command::TrainJpegAware { input, val, net, offsets, hyper, qf_train, per_qf, chroma, out } => {
            let (tau, tau_prime) = (offsets.tau.unwrap_or_default(), offsets.tau_prime.unwrap_or_default());
            let jpeg_cfg = JpegAwareConfig { train_qfs: qf_train, per_qf, chroma, ..Default::default() };
            let config = TrainConfig {
                learning_rate: hyper.lr,
                momentum: hyper.momentum,
                batch_size: hyper.batch,
                epochs: hyper.epochs,
                tau,
                tau_prime,
                net: net.into(),
                width_factor: hyper.width_factor,
                seed,
            };
            print_config(
                "train-jpeg-aware",
                seed,
                tau,
                tau_prime,
                json!({"train": config, "qf_train": jpeg_cfg.train_qfs, "per_qf": per_qf, "chroma": chroma.to_string()}),
            );
            let train_src = ingest(&input)?;
            let val_src = val.as_ref().map(ingest).transpose()?;
            let outcome =
                jpeg_aware_train(&train_src, val_src.as_ref().map(|v| v as &dyn ImageSource), &jpeg_cfg, &config)?;
            for e in &outcome.log {
                println!("epoch {:>3}  loss {:.6}", e.epoch + 1, e.mean_loss);
            }
            let n = assign_qfs(&train_src.labels(), &jpeg_cfg.train_qfs, per_qf)?.iter().flatten().count();
            save_outcome(&outcome, &Provenance::new(&config, &outcome, n), &out)?;
            println!("saved {}", out.display());
        }
        Command::Eval { model, corpus, dataset, out } => {
            let net = checkpoint::load(&model)?;
            let meta = read_corpus_meta(&corpus)?;
            let prov = load_provenance(&model);
            let tau = resolve(meta.as_ref().map(|m| m.tau), prov.as_ref().map(|p| p.config.tau), "tau")?;
            let tau_prime =
                resolve(meta.as_ref().map(|m| m.tau_prime), prov.as_ref().map(|p| p.config.tau_prime), "tau-prime")?;
            print_config("eval", seed, tau, tau_prime, json!({"model": model, "corpus": corpus}));
            let set = load_corpus(&corpus)?;
            let report = evaluate(&net, &set)?;
            println!("{}", serde_json::to_string_pretty(&report).map_err(|e| usage(e.to_string()))?);
            if let Some(out) = out {
                let dataset = dataset.unwrap_or_else(|| dir_name(&corpus));
                let rows = clean_rows(&[(&dataset, default_name(&net), report.accuracy)]);
                emit_report(&rows, ReportFormat::from_path(&out), &out)?;
            }
        }
        Command::Robustness { models, input, offsets, attacks, qf_eval, pre_attacks, chroma, with_clean, dataset, out } => {
            let mut loaded = Vec::with_capacity(models.len());
            for m in &models {
                let (name, path) = match m.split_once('=') {
                    Some((n, p)) => (Some(n.to_string()), PathBuf::from(p)),
                    None => (None, PathBuf::from(m)),
                };
                let net = checkpoint::load(&path)?;
                let prov = load_provenance(&path);
                let name = name.unwrap_or_else(|| default_name(&net).to_string());
                loaded.push((name, net, prov));
            }
            let stored = |f: fn(&TrainConfig) -> Offset| -> Result<Option<Offset>, Error> {
                let mut vals = loaded.iter().filter_map(|(_, _, p)| p.as_ref().map(|p| f(&p.config)));
                let first = vals.next();
                if vals.any(|v| Some(v) != first) {
                    return Err(usage("models were trained with different offsets; pass --tau and --tau-prime"));
                }
                Ok(first)
            };
            let tau = match offsets.tau {
                Some(t) => t,
                None => stored(|c| c.tau)?.unwrap_or_default(),
            };
            let tau_prime = match offsets.tau_prime {
                Some(t) => t,
                None => stored(|c| c.tau_prime)?.unwrap_or_default(),
            };
            let dataset = dataset.unwrap_or_else(|| dir_name(&input));
            let named: Vec<NamedModel> = loaded.iter().map(|(n, net, _)| NamedModel::new(n.clone(), net)).collect();
            let qf_eval = qf_eval.map(|q| if q.is_empty() { EVAL_QFS.to_vec() } else { q });
            let attacks = match (attacks, &qf_eval) {
                (Some(a), _) => a,
                (None, None) => robustness_rows(),
                (None, Some(_)) => vec![],
            };
            print_config(
                "robustness",
                seed,
                tau,
                tau_prime,
                json!({
                    "models": models,
                    "attacks": attacks.iter().map(ToString::to_string).collect::<Vec<_>>(),
                    "qf_eval": qf_eval,
                    "pre_attacks": pre_attacks.as_ref().map(|a| a.iter().map(ToString::to_string).collect::<Vec<_>>()),
                    "chroma": chroma.to_string(),
                    "dataset": dataset,
                }),
            );
            let source = ingest(&input)?;
            let mut report = Report::default();
            if with_clean {
                let reports = clean_eval(&named, &source, tau, tau_prime)?;
                let rows: Vec<(&str, &str, f64)> =
                    named.iter().zip(&reports).map(|(m, r)| (dataset.as_str(), m.name.as_str(), r.accuracy)).collect();
                report.extend(clean_rows(&rows));
            }
            report.extend(robustness_eval(&named, &source, &attacks, tau, tau_prime, &dataset)?);
            if let Some(qfs) = qf_eval {
                let cfg = JpegAwareConfig { eval_qfs: qfs, chroma, pre_attacks: pre_attacks.unwrap_or_default(), ..Default::default() };
                report.extend(qf_sweep(&named, &source, &cfg, tau, tau_prime, &dataset)?);
                if !cfg.pre_attacks.is_empty() {
                    report.extend(pre_compression_sweep(&named, &source, &cfg, tau, tau_prime, &dataset)?);
                }
            }
            emit_report(&report, ReportFormat::from_path(&out), &out)?;
            print!("{}", report.to_csv()?);
        }
        Command::Report { inputs, out, format } => {
            print_config("report", seed, Offset::default(), Offset::default(), json!({"inputs": inputs}));
            let mut report = Report::default();
            for p in &inputs {
                report.extend(Report::from_csv(&std::fs::read_to_string(p)?)?);
            }
            emit_report(&report, format.unwrap_or_else(|| ReportFormat::from_path(&out)), &out)?;
            println!("{} rows", report.rows.len());
        }
        Command::Heatmap { input, source, offsets, out } => {
            let (tau, tau_prime) = (offsets.tau.unwrap_or_default(), offsets.tau_prime.unwrap_or_default());
            print_config("heatmap", seed, tau, tau_prime, json!({"source": source.name()}));
            let img = read_any(&input)?;
            let (a, b) = source.bands();
            let m = if a == b { band_cooc(&img, a, tau)? } else { cross_cooc(&img, source, tau_prime)? };
            emit_heatmap(&m, &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
