use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use specocc::data::{empirical_cdf, generate_synthetic, write_csv, GeneratorConfig, GroundTruth};
use specocc::experiment::{
    calibrate_days, emit_reports, run_experiment_on, write_calibration_json, write_outage_csv,
    ClassifierKind, DataSource, ExperimentConfig, SLOTS_PER_DAY,
};
use specocc::occupancy::{
    occupancy_vs_threshold, slot_occupancy, spanning_thresholds, threshold_status,
    write_occupancy_vs_threshold,
};
use specocc::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(
    name = "specocc",
    version,
    about = "Spectrum occupancy labeling, classification and outage analysis"
)]
struct Cli {
    /// Raise log verbosity (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the configured power data (and ground truth for synthetic sources) as CSV.
    Generate(Common),
    /// Power distribution and occupancy-versus-threshold tables.
    Stats(Common),
    /// Per-day threshold, occupancy range and B selection.
    Calibrate(Common),
    /// Full classifier comparison with every report file.
    Compare(Common),
    /// Expected versus evaluated outage per classifier on the first split ratio.
    Outage(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    days: Option<usize>,
    /// Comma-separated classifier names.
    #[arg(long, value_delimiter = ',')]
    classifiers: Option<Vec<ClassifierKind>>,
    /// Comma-separated training fractions.
    #[arg(long, value_delimiter = ',')]
    split: Option<Vec<f64>>,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidConfig(_) => EXIT_CONFIG,
            _ => EXIT_RUNTIME,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn config_failure(e: Error) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        message: e.to_string(),
    }
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, Failure> {
        let mut cfg = ExperimentConfig::load(&self.config).map_err(config_failure)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(dir) = &self.out_dir {
            cfg.output_dir = dir.clone();
        }
        if let Some(days) = self.days {
            cfg.days = days;
        }
        if let Some(kinds) = &self.classifiers {
            cfg.classifiers = kinds.clone();
        }
        if let Some(split) = &self.split {
            cfg.split_ratios = split.clone();
        }
        cfg.validate().map_err(config_failure)?;
        Ok(cfg)
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Error::io(path, e).into()
}

fn write_text(
    path: &Path,
    body: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
) -> Result<(), Failure> {
    let mut buf = Vec::new();
    body(&mut buf).map_err(|e| io_failure(path, e))?;
    std::fs::write(path, buf).map_err(|e| io_failure(path, e))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn prepare_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))
}

fn write_truth(truth: &GroundTruth, w: &mut Vec<u8>) -> std::io::Result<()> {
    write!(w, "slot")?;
    for j in 1..=truth.n_bins() {
        write!(w, ",bin_{j}")?;
    }
    writeln!(w)?;
    for i in 0..truth.n_slots() {
        write!(w, "{i}")?;
        for j in 0..truth.n_bins() {
            write!(w, ",{}", truth.get(i, j))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

fn generate(cfg: &ExperimentConfig) -> Result<(), Failure> {
    prepare_dir(&cfg.output_dir)?;
    let power = cfg.output_dir.join("power.csv");
    match &cfg.source {
        DataSource::Synthetic { generator } => {
            let g = GeneratorConfig {
                seed: cfg.seed,
                ..generator.clone()
            };
            let (matrix, truth) = generate_synthetic(&g, cfg.days * SLOTS_PER_DAY, &cfg.band)?;
            write_csv(&matrix, &power)?;
            println!("wrote {}", power.display());
            write_text(&cfg.output_dir.join("ground_truth.csv"), |w| {
                write_truth(&truth, w)
            })?;
        }
        DataSource::Csv { .. } => {
            write_csv(&cfg.load_data()?, &power)?;
            println!("wrote {}", power.display());
        }
    }
    Ok(())
}

fn stats(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let data = cfg.load_data()?;
    prepare_dir(&cfg.output_dir)?;
    let (lo, hi) = data.power_range().expect("loaded data is non-empty");
    println!(
        "{} slots x {} bins, power {lo:.2} .. {hi:.2} dBm",
        data.n_slots(),
        data.n_bins()
    );
    for &gamma in &cfg.gammas {
        let occ = slot_occupancy(&threshold_status(&data, gamma));
        println!("gamma {gamma} dBm: mean occupancy {:.4}", occ.mean());
    }
    let cdf = empirical_cdf(&data)?;
    write_text(&cfg.output_dir.join("cdf.csv"), |w| {
        writeln!(w, "power_dbm,fraction")?;
        for p in &cdf {
            writeln!(w, "{:?},{:?}", p.power_dbm, p.fraction)?;
        }
        Ok(())
    })?;
    let table = occupancy_vs_threshold(&data, &spanning_thresholds(&data, cfg.threshold_points)?)?;
    write_text(&cfg.output_dir.join("occupancy_vs_threshold.csv"), |w| {
        write_occupancy_vs_threshold(&table, w)
    })
}

fn calibrate(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let data = cfg.load_data()?;
    prepare_dir(&cfg.output_dir)?;
    let report = calibrate_days(cfg, &data)?;
    for c in &report.calibrations {
        let k = &c.criteria;
        println!(
            "day {} split {}: gamma {} dBm, range [{}, {}], B {}",
            c.day, c.split_ratio, k.gamma, k.l_oc, k.u_oc, k.b_min_run
        );
    }
    for s in &report.skipped_days {
        println!("day {} skipped: {}", s.day, s.reason);
    }
    let json = write_calibration_json(&report)?;
    write_text(&cfg.output_dir.join("calibration.json"), |w| {
        w.write_all(json.as_bytes())
    })
}

fn compare(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let data = cfg.load_data()?;
    let report = run_experiment_on(cfg, &data)?;
    println!(
        "{:<12} {:>6} {:>5} {:>8} {:>10}",
        "classifier", "split", "days", "mean_ca", "fit_s"
    );
    for s in &report.summaries {
        println!(
            "{:<12} {:>6.2} {:>5} {:>8.4} {:>10.4}",
            s.classifier.name(),
            s.split_ratio,
            s.days,
            s.mean_ca,
            s.mean_fit_seconds
        );
    }
    for s in &report.skipped_days {
        println!("day {} skipped: {}", s.day, s.reason);
    }
    for path in emit_reports(&report, &cfg.output_dir)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn outage(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let mut cfg = cfg.clone();
    cfg.split_ratios.truncate(1);
    let data = cfg.load_data()?;
    let report = run_experiment_on(&cfg, &data)?;
    prepare_dir(&cfg.output_dir)?;
    for &kind in &cfg.classifiers {
        let rows: Vec<_> = report
            .outage
            .iter()
            .filter(|r| r.classifier == kind)
            .collect();
        if rows.is_empty() {
            continue;
        }
        let n = rows.len() as f64;
        let mean = |f: fn(&specocc::experiment::OutageRow) -> f64| {
            rows.iter().map(|r| f(r)).sum::<f64>() / n
        };
        println!(
            "{:<12} expected {:.4} evaluated {:.4} mean |difference| {:.4}",
            kind.name(),
            mean(|r| r.expected_outage),
            mean(|r| r.evaluated_outage),
            mean(|r| r.abs_difference)
        );
    }
    write_text(&cfg.output_dir.join("outage.csv"), |w| {
        write_outage_csv(&report.outage, w)
    })
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    let (common, action): (&Common, fn(&ExperimentConfig) -> Result<(), Failure>) =
        match &cli.command {
            Command::Generate(c) => (c, generate),
            Command::Stats(c) => (c, stats),
            Command::Calibrate(c) => (c, calibrate),
            Command::Compare(c) => (c, compare),
            Command::Outage(c) => (c, outage),
        };
    match common.load().and_then(|cfg| action(&cfg)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
