use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mvat::checkpoint::Checkpoint;
use mvat::config::RunConfig;
use mvat::core::model::{count_flops, count_params, Role};
use mvat::core::signal::{corpus, render, Split, SAMPLE_RATE};
use mvat::export::{export_tams, write_report, write_tams, Summary, TAM_FILE};
use mvat::io::{read_manifest, read_wav, write_manifest, write_wav};
use mvat::trainer::{enhance, evaluate, Dataset, LogRecord, Splits, Trainer};
use mvat::{Error, Result};

#[derive(Parser)]
#[command(
    name = "mvat",
    version,
    about = "Multi-view attention transfer for time-domain speech enhancement"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Teacher,
    Student,
}

impl From<ModelArg> for Role {
    fn from(m: ModelArg) -> Role {
        match m {
            ModelArg::Teacher => Role::Teacher,
            ModelArg::Student => Role::Student,
        }
    }
}

#[derive(clap::Args)]
struct RunArgs {
    /// Output directory for checkpoints and the training log.
    #[arg(long)]
    out: PathBuf,
    /// Overrides `train.seed` and MVAT_SEED.
    #[arg(long, conflicts_with = "resume")]
    seed: Option<u64>,
    /// Total epochs to reach; overrides `train.epochs`.
    #[arg(long)]
    epochs: Option<usize>,
    /// Training log (JSON lines). Defaults to `<out>/train.jsonl`.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Continue from a checkpoint written by an earlier run. The run's
    /// configuration then comes from the checkpoint.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Suppress per-epoch progress lines.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Supervised training without a teacher.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Which model section of the config to train.
        #[arg(long, value_enum, default_value = "student")]
        model: ModelArg,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Trains the student against a frozen teacher checkpoint.
    Distill {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        teacher: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// SI-SDR of a checkpoint on the clips listed in a manifest.
    Evaluate {
        #[arg(long)]
        ckpt: PathBuf,
        /// Manifest written by `mvat corpus`.
        #[arg(long)]
        data: PathBuf,
        /// JSON-lines report; the table goes next to it with a `.txt` extension.
        #[arg(long)]
        report: PathBuf,
        /// Row label in the table. Defaults to the checkpoint file stem.
        #[arg(long)]
        name: Option<String>,
    },
    /// Enhances one 16 kHz mono 16-bit WAV file.
    Enhance {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parameter count and FLOPs of the models in a config.
    Count {
        #[arg(long)]
        config: PathBuf,
        /// Input length in samples.
        #[arg(long, default_value_t = SAMPLE_RATE as usize)]
        input_len: usize,
    },
    /// Writes the time-wise attention maps of every MA block for one clip.
    ExportTams {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        /// Directory that receives `tams.txt`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Writes the train/val/test manifests of the synthetic corpus in a config.
    Corpus {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also render the test split as `<out>/wav/<index>_{noisy,clean}.wav`.
        #[arg(long)]
        wav: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string();
            eprintln!(
                "error: {}",
                msg.split_whitespace().collect::<Vec<_>>().join(" ")
            );
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Train { config, model, run } => cmd_train(&config, model.into(), None, &run),
        Command::Distill {
            config,
            teacher,
            run,
        } => {
            let teacher = Checkpoint::load(&teacher)?;
            cmd_train(&config, Role::Student, Some(&teacher), &run)
        }
        Command::Evaluate {
            ckpt,
            data,
            report,
            name,
        } => cmd_evaluate(&ckpt, &data, &report, name),
        Command::Enhance { ckpt, input, out } => {
            let ckpt = Checkpoint::load(&ckpt)?;
            let noisy: Vec<f32> = read_wav(&input)?
                .samples()
                .iter()
                .map(|&s| s as f32)
                .collect();
            let enhanced = enhance(&ckpt.model()?, &ckpt.params, &noisy)?;
            write_wav(&out, &enhanced)
        }
        Command::Count { config, input_len } => cmd_count(&config, input_len),
        Command::ExportTams { ckpt, input, out } => {
            let ckpt = Checkpoint::load(&ckpt)?;
            let noisy: Vec<f32> = read_wav(&input)?
                .samples()
                .iter()
                .map(|&s| s as f32)
                .collect();
            let records = export_tams(
                &ckpt.model()?,
                &ckpt.params,
                &noisy,
                &ckpt.config.distill.tam(),
            )?;
            write_tams(&out, &records)?;
            println!(
                "{} maps written to {}",
                records.len(),
                out.join(TAM_FILE).display()
            );
            Ok(())
        }
        Command::Corpus { config, out, wav } => cmd_corpus(&config, &out, wav),
    }
}

fn load_config(path: &Path, seed: Option<u64>, epochs: Option<usize>) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    cfg.apply_env()?;
    if let Some(seed) = seed {
        cfg.train.seed = seed;
    }
    if let Some(epochs) = epochs {
        cfg.train.epochs = epochs;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_train(
    config: &Path,
    role: Role,
    teacher: Option<&Checkpoint>,
    args: &RunArgs,
) -> Result<()> {
    let (mut trainer, until, data) = match &args.resume {
        Some(path) => {
            let mut ckpt = Checkpoint::load(path)?;
            if ckpt.role != role {
                return Err(Error::Invalid(format!(
                    "{} holds a {:?} model",
                    path.display(),
                    ckpt.role
                )));
            }
            if let Some(epochs) = args.epochs {
                ckpt.config.train.epochs = epochs;
            }
            let until = ckpt.config.train.epochs;
            let data = Splits::render(&ckpt.config.data)?;
            (Trainer::from_checkpoint(ckpt, teacher)?, until, data)
        }
        None => {
            let cfg = load_config(config, args.seed, args.epochs)?;
            let data = Splits::render(&cfg.data)?;
            let until = cfg.train.epochs;
            let trainer = match teacher {
                Some(t) => Trainer::with_teacher(cfg, t)?,
                None => Trainer::new(cfg, role)?,
            };
            (trainer, until, data)
        }
    };
    fs::create_dir_all(&args.out).map_err(Error::io(&args.out))?;
    let log_path = args
        .log
        .clone()
        .unwrap_or_else(|| args.out.join("train.jsonl"));
    let file = fs::OpenOptions::new()
        .create(true)
        .write(true)
        .append(args.resume.is_some())
        .truncate(args.resume.is_none())
        .open(&log_path)
        .map_err(Error::io(&log_path))?;
    let mut log = BufWriter::new(file);
    let quiet = args.quiet;
    let mut observe = |rec: &LogRecord| -> Result<()> {
        let line = serde_json::to_string(rec).map_err(|e| Error::Invalid(e.to_string()))?;
        writeln!(log, "{line}").map_err(Error::io(&log_path))?;
        if let (LogRecord::Epoch(e), false) = (rec, quiet) {
            println!(
                "epoch {:>4}  loss {:.5}  sup {:.5}  at {:.5}  kd {:.5}  val SI-SDR {:6.2} dB{}",
                e.epoch,
                e.loss_total,
                e.loss_sup,
                e.loss_at(),
                e.loss_kd,
                e.val_si_sdr,
                if e.best { "  *" } else { "" }
            );
        }
        Ok(())
    };
    let (last, best) = (args.out.join("last.ckpt"), args.out.join("best.ckpt"));
    while trainer.progress().epochs_done < until {
        let summary = trainer.run_epoch(&data.train, &data.val, &mut observe)?;
        let ckpt = trainer.checkpoint();
        ckpt.save(&last)?;
        if summary.best {
            ckpt.save(&best)?;
        }
    }
    log.flush().map_err(Error::io(&log_path))?;
    if !args.quiet {
        println!("checkpoints in {}", args.out.display());
    }
    Ok(())
}

fn cmd_evaluate(ckpt_path: &Path, data: &Path, report: &Path, name: Option<String>) -> Result<()> {
    let ckpt = Checkpoint::load(ckpt_path)?;
    let records = read_manifest(data)?;
    let dataset = Dataset::from_records(&records)?;
    let result = evaluate(
        &ckpt.model()?,
        &ckpt.params,
        &dataset,
        &ckpt.config.train.resolutions,
    )?;
    let name = name.unwrap_or_else(|| {
        ckpt_path
            .file_stem()
            .map_or_else(|| "model".into(), |s| s.to_string_lossy().into_owned())
    });
    let summary = Summary::new(name, ckpt.model_config()?, &result)?;
    print!("{}", write_report(report, &summary, &result)?);
    Ok(())
}

fn cmd_count(config: &Path, input_len: usize) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    let models = [
        ("teacher", &cfg.model.teacher),
        ("student", &cfg.model.student),
    ];
    if models.iter().all(|(_, m)| m.is_none()) {
        return Err(Error::MissingKey {
            section: "model".into(),
            key: "student".into(),
        });
    }
    for (name, m) in models {
        if let Some(m) = m {
            println!(
                "{name} depth={} base_channels={} params={} flops={} input_len={input_len}",
                m.depth,
                m.base_channels,
                count_params(m)?,
                count_flops(m, input_len)?
            );
        }
    }
    Ok(())
}

fn cmd_corpus(config: &Path, out: &Path, wav: bool) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    fs::create_dir_all(out).map_err(Error::io(out))?;
    for split in [Split::Train, Split::Val, Split::Test] {
        let records = corpus(&cfg.data, split)?;
        let path = out.join(format!("{split}.tsv"));
        write_manifest(&path, &records)?;
        println!("{} records -> {}", records.len(), path.display());
        if wav && split == Split::Test {
            let dir = out.join("wav");
            fs::create_dir_all(&dir).map_err(Error::io(&dir))?;
            for r in &records {
                let m = render(&r.spec)?;
                let narrow = |c: &[f64]| c.iter().map(|&s| s as f32).collect::<Vec<_>>();
                write_wav(
                    &dir.join(format!("{}_noisy.wav", r.index)),
                    &narrow(m.noisy.samples()),
                )?;
                write_wav(
                    &dir.join(format!("{}_clean.wav", r.index)),
                    &narrow(m.clean.samples()),
                )?;
            }
        }
    }
    Ok(())
}
