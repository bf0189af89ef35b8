//! End-to-end comparison pipeline: load or generate data, calibrate and label
//! each day, train every selected classifier on the chronological training
//! prefix, score it on the rest, and compute outage.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{
    evaluate, nbc::NbcKernel, split, stepwise, svm::SvmOptions, svm::SvmProblem, tree, Classifier,
    Dataset, DtModel, LabelUse, LrModel, Metrics, NbcModel, Timings, TrainTestSplit,
};
use crate::data::{generate_synthetic, load_csv, BandConfig, GeneratorConfig, PowerMatrix};
use crate::error::{Error, Result};
use crate::firefly::{svm_ffa_fit, SwarmConfig, TuningRecord};
use crate::hmm::{discretize_observations, estimate_hmm, hmm_predict, HmmModel, StateSequence};
use crate::labeling::{
    calibrate_with, default_ms_grid, label_pu, CalibrationReport, LabelingCriteria, PuLabelVector,
};
use crate::occupancy::{
    bin_occupancy, occupancy_vs_threshold, slot_occupancy, spanning_thresholds, threshold_status,
    ThresholdOccupancy,
};
use crate::outage::{su_outage_probability, OutageOptions};

pub const SLOTS_PER_DAY: usize = 1440;
pub const DEFAULT_LR_MAX_FEATURES: usize = 64;
pub const DEFAULT_VALIDATION_FRACTION: f64 = 0.2;
pub const DEFAULT_THRESHOLD_POINTS: usize = 41;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassifierKind {
    Nbc,
    Dt,
    Svm,
    Lr,
    Hmm,
    TrainedHmm,
    SvmFfa,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 7] = [
        ClassifierKind::Nbc,
        ClassifierKind::Dt,
        ClassifierKind::Svm,
        ClassifierKind::Lr,
        ClassifierKind::Hmm,
        ClassifierKind::TrainedHmm,
        ClassifierKind::SvmFfa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Nbc => "nbc",
            ClassifierKind::Dt => "dt",
            ClassifierKind::Svm => "svm",
            ClassifierKind::Lr => "lr",
            ClassifierKind::Hmm => "hmm",
            ClassifierKind::TrainedHmm => "trained-hmm",
            ClassifierKind::SvmFfa => "svm-ffa",
        }
    }

    pub fn is_supervised(self) -> bool {
        matches!(
            self,
            ClassifierKind::Nbc
                | ClassifierKind::Dt
                | ClassifierKind::Svm
                | ClassifierKind::Lr
                | ClassifierKind::SvmFfa
        )
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClassifierKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| Error::InvalidConfig(format!("unknown classifier '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DataSource {
    Csv {
        path: PathBuf,
    },
    /// The generator's own seed is replaced by the experiment seed.
    Synthetic {
        generator: GeneratorConfig,
    },
}

fn default_gammas() -> Vec<f64> {
    vec![-102.0, -104.0, -106.0, -108.0]
}
fn default_splits() -> Vec<f64> {
    vec![0.15, 0.30]
}
fn default_classifiers() -> Vec<ClassifierKind> {
    ClassifierKind::ALL.to_vec()
}
fn default_out_su() -> usize {
    5
}
fn default_target() -> f64 {
    crate::labeling::DEFAULT_TARGET_PROTECTION
}
fn default_lr_cap() -> usize {
    DEFAULT_LR_MAX_FEATURES
}
fn default_lr_predictors() -> usize {
    stepwise::DEFAULT_MAX_PREDICTORS
}
fn default_min_obs() -> usize {
    tree::DEFAULT_MIN_OBS_PER_NODE
}
fn default_box() -> f64 {
    crate::classify::svm::DEFAULT_BOX_CONSTRAINT
}
fn default_validation() -> f64 {
    DEFAULT_VALIDATION_FRACTION
}
fn default_threshold_points() -> usize {
    DEFAULT_THRESHOLD_POINTS
}
fn default_true() -> bool {
    true
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub band: BandConfig,
    pub days: usize,
    #[serde(default = "default_gammas")]
    pub gammas: Vec<f64>,
    #[serde(default = "default_ms_grid")]
    pub ms_grid: Vec<f64>,
    #[serde(default = "default_splits")]
    pub split_ratios: Vec<f64>,
    #[serde(default = "default_classifiers")]
    pub classifiers: Vec<ClassifierKind>,
    #[serde(default = "default_out_su")]
    pub out_su: usize,
    #[serde(default)]
    pub outage: OutageOptions,
    /// The swarm seed is derived per day from the experiment seed.
    #[serde(default)]
    pub swarm: SwarmConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_target")]
    pub target_protection: f64,
    #[serde(default = "default_lr_cap")]
    pub lr_max_features: usize,
    #[serde(default = "default_lr_predictors")]
    pub lr_max_predictors: usize,
    #[serde(default = "default_min_obs")]
    pub dt_min_obs_per_node: usize,
    #[serde(default = "default_box")]
    pub svm_box_constraint: f64,
    #[serde(default)]
    pub nbc_kernel: NbcKernel,
    #[serde(default = "default_validation")]
    pub validation_fraction: f64,
    #[serde(default = "default_threshold_points")]
    pub threshold_points: usize,
    /// Worker threads for day-level parallelism; 0 uses every core.
    #[serde(default)]
    pub workers: usize,
    /// When false all timing columns are written as 0 so reruns are byte-identical.
    #[serde(default = "default_true")]
    pub record_timings: bool,
}

impl ExperimentConfig {
    /// Minimal synthetic configuration with defaults elsewhere.
    pub fn synthetic(generator: GeneratorConfig, band: BandConfig, days: usize) -> Self {
        serde_json::from_value(serde_json::json!({
            "source": {"type": "synthetic", "generator": generator},
            "band": band,
            "days": days,
        }))
        .expect("default configuration deserialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("config: {e}")))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        self.band.validate()?;
        if let DataSource::Synthetic { generator } = &self.source {
            generator.validate()?;
        }
        if self.days == 0 {
            return bad("days must be at least 1".into());
        }
        if self.classifiers.is_empty() {
            return bad("at least one classifier is required".into());
        }
        let mut seen = self.classifiers.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.classifiers.len() {
            return bad("classifier list has duplicates".into());
        }
        if self.split_ratios.is_empty() {
            return bad("at least one split ratio is required".into());
        }
        if let Some(r) = self.split_ratios.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
            return bad(format!("split ratio {r} outside (0, 1)"));
        }
        if self.gammas.is_empty() || self.gammas.iter().any(|g| !g.is_finite()) {
            return bad("gammas must be a non-empty list of finite values".into());
        }
        if self.ms_grid.is_empty() || self.ms_grid.iter().any(|m| !(*m > 0.0 && *m < 1.0)) {
            return bad("ms_grid must be a non-empty list inside (0, 1)".into());
        }
        if self.out_su == 0 {
            return bad("out_su must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.target_protection) {
            return bad("target_protection outside [0, 1]".into());
        }
        if self.lr_max_predictors == 0 || self.dt_min_obs_per_node == 0 {
            return bad("lr_max_predictors and dt_min_obs_per_node must be positive".into());
        }
        if !(self.svm_box_constraint.is_finite() && self.svm_box_constraint > 0.0) {
            return bad("svm_box_constraint must be positive".into());
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad("validation_fraction outside (0, 1)".into());
        }
        if self.threshold_points < 2 {
            return bad("threshold_points must be at least 2".into());
        }
        self.swarm.validate()?;
        if self.swarm.bounds[0] <= 0.0 {
            return bad("swarm bounds for the box constraint must be positive".into());
        }
        Ok(())
    }

    /// Power data covering exactly `days` whole days.
    pub fn load_data(&self) -> Result<PowerMatrix> {
        let need = self.days * SLOTS_PER_DAY;
        let m = match &self.source {
            DataSource::Csv { path } => load_csv(path, &self.band)?,
            DataSource::Synthetic { generator } => {
                let g = GeneratorConfig {
                    seed: self.seed,
                    ..generator.clone()
                };
                generate_synthetic(&g, need, &self.band)?.0
            }
        };
        if m.n_slots() < need {
            return Err(Error::InvalidConfig(format!(
                "{} days need {need} slots but the data has {}",
                self.days,
                m.n_slots()
            )));
        }
        m.slice_slots(0, need)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub day: usize,
    pub classifier: ClassifierKind,
    pub split_ratio: f64,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifierSummary {
    pub classifier: ClassifierKind,
    pub split_ratio: f64,
    pub days: usize,
    pub mean_ca: f64,
    pub mean_fit_seconds: f64,
    pub mean_predict_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutageRow {
    pub day: usize,
    pub classifier: ClassifierKind,
    pub expected_outage: f64,
    pub evaluated_outage: f64,
    pub abs_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DayCalibration {
    pub day: usize,
    pub split_ratio: f64,
    pub criteria: LabelingCriteria,
    pub report: CalibrationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuningRow {
    pub day: usize,
    pub split_ratio: f64,
    pub record: TuningRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinOccupancyRow {
    pub day: usize,
    pub bin: usize,
    pub frequency_mhz: f64,
    pub occupancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedDay {
    pub day: usize,
    pub reason: String,
}

/// Every read of held-out labels during one (day, split) unit.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelReadRecord {
    pub day: usize,
    pub split_ratio: f64,
    pub reads: Vec<LabelUse>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub summaries: Vec<ClassifierSummary>,
    pub outage: Vec<OutageRow>,
    pub calibrations: Vec<DayCalibration>,
    pub tuning: Vec<TuningRow>,
    pub bin_occupancy: Vec<BinOccupancyRow>,
    pub occupancy_vs_threshold: Vec<ThresholdOccupancy>,
    pub skipped_days: Vec<SkippedDay>,
    pub label_reads: Vec<LabelReadRecord>,
}

impl ComparisonReport {
    /// Mean CA of `classifier` at `split_ratio`, if any row exists.
    pub fn mean_ca(&self, classifier: ClassifierKind, split_ratio: f64) -> Option<f64> {
        self.summaries
            .iter()
            .find(|s| s.classifier == classifier && s.split_ratio == split_ratio)
            .map(|s| s.mean_ca)
    }

    /// Per-day CA of `classifier` at `split_ratio`, in day order.
    pub fn day_ca(&self, classifier: ClassifierKind, split_ratio: f64) -> Vec<(usize, f64)> {
        self.rows
            .iter()
            .filter(|r| r.classifier == classifier && r.split_ratio == split_ratio)
            .map(|r| (r.day, r.metrics.ca))
            .collect()
    }
}

#[derive(Default)]
struct DayOutput {
    rows: Vec<ComparisonRow>,
    outage: Vec<OutageRow>,
    calibrations: Vec<DayCalibration>,
    tuning: Vec<TuningRow>,
    bin_occupancy: Vec<BinOccupancyRow>,
    label_reads: Vec<LabelReadRecord>,
}

fn mix_seed(seed: u64, day: usize, ratio_index: usize) -> u64 {
    // splitmix64 finaliser
    let mut z =
        seed ^ ((day as u64) << 20) ^ (ratio_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Prediction {
    labels: Vec<u8>,
    timings: Timings,
    tuning: Vec<TuningRecord>,
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let t = Instant::now();
    let out = f()?;
    Ok((out, t.elapsed().as_secs_f64()))
}

/// One classifier on one split. `occ_obs` is the HMM observation sequence of
/// the whole day; it is derived from power data only.
fn run_classifier(
    kind: ClassifierKind,
    cfg: &ExperimentConfig,
    parts: &TrainTestSplit,
    obs: &[usize],
    swarm_seed: u64,
) -> Result<Prediction> {
    let train = &parts.train;
    let test_rows = || parts.test.rows();
    let n1 = train.len();
    let supervised =
        |fit: &dyn Fn() -> Result<Box<dyn Fn(&[u8]) -> u8 + Sync>>| -> Result<Prediction> {
            let (model, fit_s) = timed(fit)?;
            let (labels, pred_s) =
                timed(|| Ok(test_rows().map(model).collect::<Vec<u8>>()))?;
            Ok(Prediction {
                labels,
                timings: Timings {
                    fit_seconds: fit_s,
                    predict_seconds: pred_s,
                },
                tuning: Vec::new(),
            })
        };
    match kind {
        ClassifierKind::Nbc => supervised(&|| {
            let m = NbcModel::fit(train, cfg.nbc_kernel);
            Ok(Box::new(move |r: &[u8]| m.predict_one(r)))
        }),
        ClassifierKind::Dt => supervised(&|| {
            let m = DtModel::fit(train, cfg.dt_min_obs_per_node);
            Ok(Box::new(move |r: &[u8]| m.predict_one(r)))
        }),
        ClassifierKind::Svm => supervised(&|| {
            let m = SvmProblem::from_dataset(train)?
                .solve(cfg.svm_box_constraint, &SvmOptions::default())?
                .model;
            Ok(Box::new(move |r: &[u8]| m.predict_one(r)))
        }),
        ClassifierKind::Lr => supervised(&|| {
            let m = LrModel::fit(train, cfg.lr_max_predictors)?;
            Ok(Box::new(move |r: &[u8]| m.predict_one(r)))
        }),
        ClassifierKind::SvmFfa => {
            let n_val = ((n1 as f64) * cfg.validation_fraction).round() as usize;
            if n_val == 0 || n_val >= n1 {
                return Err(Error::Split(format!(
                    "{n1} training rows cannot hold out a validation block"
                )));
            }
            let fit_part = train.slice(0, n1 - n_val);
            let val_part = train.slice(n1 - n_val, n1);
            let swarm = SwarmConfig {
                seed: swarm_seed,
                ..cfg.swarm
            };
            let (fit, fit_s) = timed(|| svm_ffa_fit(&fit_part, &val_part, &swarm))?;
            let (labels, pred_s) = timed(|| Ok(fit.model.predict_rows(test_rows())))?;
            Ok(Prediction {
                labels,
                timings: Timings {
                    fit_seconds: fit_s,
                    predict_seconds: pred_s,
                },
                tuning: fit.history,
            })
        }
        ClassifierKind::Hmm | ClassifierKind::TrainedHmm => {
            let train_obs = crate::hmm::ObservationSequence(obs[..n1].to_vec());
            let test_obs = crate::hmm::ObservationSequence(obs[n1..].to_vec());
            let (model, fit_s) = timed(|| {
                if kind == ClassifierKind::Hmm {
                    Ok(HmmModel::default_untrained())
                } else {
                    let states =
                        StateSequence(train.labels().iter().map(|&l| l as usize).collect());
                    estimate_hmm(&states, &train_obs, 2)
                }
            })?;
            let (labels, pred_s) = timed(|| Ok(hmm_predict(&model, &test_obs)?.0))?;
            Ok(Prediction {
                labels,
                timings: Timings {
                    fit_seconds: fit_s,
                    predict_seconds: pred_s,
                },
                tuning: Vec::new(),
            })
        }
    }
}

/// Calibrates on the training prefix of one day at `ratio`.
fn calibrate_prefix(
    cfg: &ExperimentConfig,
    matrix: &PowerMatrix,
    ratio: f64,
) -> Result<(usize, LabelingCriteria, CalibrationReport)> {
    let n = matrix.n_slots();
    let n1 = crate::classify::train_size(n, ratio);
    if n1 == 0 || n1 >= n {
        return Err(Error::Split(format!(
            "ratio {ratio} leaves an empty side of {n} slots"
        )));
    }
    let (criteria, report) = calibrate_with(
        &matrix.slice_slots(0, n1)?,
        &cfg.gammas,
        &cfg.ms_grid,
        cfg.target_protection,
    )?;
    Ok((n1, criteria, report))
}

/// Calibration of every day and split ratio, without fitting classifiers.
/// Days whose calibration fails are listed as skipped.
pub fn calibrate_days(cfg: &ExperimentConfig, data: &PowerMatrix) -> Result<ComparisonReport> {
    cfg.validate()?;
    let mut report = ComparisonReport::default();
    for day in 0..cfg.days {
        let m = data.slice_slots(day * SLOTS_PER_DAY, (day + 1) * SLOTS_PER_DAY)?;
        let mut done = Vec::new();
        let outcome = cfg.split_ratios.iter().try_for_each(|&ratio| {
            let (_, criteria, cal) = calibrate_prefix(cfg, &m, ratio)?;
            done.push(DayCalibration {
                day,
                split_ratio: ratio,
                criteria,
                report: cal,
            });
            Ok::<(), Error>(())
        });
        match outcome {
            Ok(()) => report.calibrations.extend(done),
            Err(e) => {
                log::warn!("day {day} skipped: {e}");
                report.skipped_days.push(SkippedDay {
                    day,
                    reason: e.to_string(),
                });
            }
        }
    }
    if report.skipped_days.len() == cfg.days {
        return Err(Error::CalibrationFailure(format!(
            "every day failed; first reason: {}",
            report.skipped_days[0].reason
        )));
    }
    Ok(report)
}

fn run_day(cfg: &ExperimentConfig, day: usize, matrix: &PowerMatrix) -> Result<DayOutput> {
    let mut out = DayOutput::default();
    let k = matrix.n_bins();
    let n = matrix.n_slots();
    let timing = |t: Timings| {
        if cfg.record_timings {
            t
        } else {
            Timings::default()
        }
    };
    for (ri, &ratio) in cfg.split_ratios.iter().enumerate() {
        let (n1, criteria, report) = calibrate_prefix(cfg, matrix, ratio)?;
        let status = threshold_status(matrix, criteria.gamma);
        let occ = slot_occupancy(&status);
        let labels = label_pu(&status, &occ, &criteria)?;
        let dataset = Dataset::from_status(&status, &labels)?;
        let parts = split(&dataset, ratio)?;
        let obs_split = 0.5 * (criteria.l_oc + criteria.u_oc);
        let obs = discretize_observations(&occ, obs_split)?.0;
        let test_occ = occ.slice(n1, n);

        if ri == 0 {
            let band = matrix.band();
            for (bin, &o) in bin_occupancy(&status).values().iter().enumerate() {
                out.bin_occupancy.push(BinOccupancyRow {
                    day,
                    bin,
                    frequency_mhz: band.bin_center(bin),
                    occupancy: o,
                });
            }
        }
        let expected = if ri == 0 {
            let reference = parts.test.reference.read(LabelUse::ExpectedOutage);
            Some(su_outage_probability(reference, &test_occ, cfg.out_su, cfg.outage)?.p_outage)
        } else {
            None
        };

        for &kind in &cfg.classifiers {
            if kind == ClassifierKind::Lr && k > cfg.lr_max_features {
                log::info!(
                    "day {day}: lr skipped, {k} features exceed the cap of {}",
                    cfg.lr_max_features
                );
                continue;
            }
            let pred = run_classifier(kind, cfg, &parts, &obs, mix_seed(cfg.seed, day, ri))
                .inspect_err(|e| log::warn!("day {day}: {kind} failed: {e}"))?;
            let reference = parts.test.reference.read(LabelUse::Evaluate);
            let metrics = evaluate(&pred.labels, reference.values(), timing(pred.timings))?;
            out.rows.push(ComparisonRow {
                day,
                classifier: kind,
                split_ratio: ratio,
                metrics,
            });
            for record in pred.tuning {
                out.tuning.push(TuningRow {
                    day,
                    split_ratio: ratio,
                    record,
                });
            }
            if let Some(expected) = expected {
                let evaluated = su_outage_probability(
                    &PuLabelVector(pred.labels),
                    &test_occ,
                    cfg.out_su,
                    cfg.outage,
                )?
                .p_outage;
                out.outage.push(OutageRow {
                    day,
                    classifier: kind,
                    expected_outage: expected,
                    evaluated_outage: evaluated,
                    abs_difference: (expected - evaluated).abs(),
                });
            }
        }
        out.label_reads.push(LabelReadRecord {
            day,
            split_ratio: ratio,
            reads: parts.test.reference.read_log(),
        });
        out.calibrations.push(DayCalibration {
            day,
            split_ratio: ratio,
            criteria,
            report,
        });
    }
    Ok(out)
}

fn summarise(rows: &[ComparisonRow]) -> Vec<ClassifierSummary> {
    let mut groups: BTreeMap<(ClassifierKind, u64), Vec<&ComparisonRow>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.classifier, r.split_ratio.to_bits()))
            .or_default()
            .push(r);
    }
    let mut out: Vec<ClassifierSummary> = groups
        .into_values()
        .map(|g| {
            let n = g.len() as f64;
            ClassifierSummary {
                classifier: g[0].classifier,
                split_ratio: g[0].split_ratio,
                days: g.len(),
                mean_ca: g.iter().map(|r| r.metrics.ca).sum::<f64>() / n,
                mean_fit_seconds: g.iter().map(|r| r.metrics.fit_seconds).sum::<f64>() / n,
                mean_predict_seconds: g.iter().map(|r| r.metrics.predict_seconds).sum::<f64>() / n,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        a.split_ratio
            .total_cmp(&b.split_ratio)
            .then(a.classifier.cmp(&b.classifier))
    });
    out
}

/// Runs every day, in parallel up to `cfg.workers`, and merges in day order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ComparisonReport> {
    cfg.validate()?;
    let data = cfg.load_data()?;
    run_experiment_on(cfg, &data)
}

/// As [`run_experiment`] on already loaded power data.
pub fn run_experiment_on(cfg: &ExperimentConfig, data: &PowerMatrix) -> Result<ComparisonReport> {
    cfg.validate()?;
    let days = data.n_slots() / SLOTS_PER_DAY;
    if days < cfg.days {
        return Err(Error::InvalidConfig(format!(
            "data holds {days} whole days, {} requested",
            cfg.days
        )));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let results: Vec<(usize, Result<DayOutput>)> = pool.install(|| {
        (0..cfg.days)
            .into_par_iter()
            .map(|day| {
                let r = data
                    .slice_slots(day * SLOTS_PER_DAY, (day + 1) * SLOTS_PER_DAY)
                    .and_then(|m| run_day(cfg, day, &m));
                (day, r)
            })
            .collect()
    });

    let mut report = ComparisonReport::default();
    for (day, r) in results {
        match r {
            Ok(d) => {
                report.rows.extend(d.rows);
                report.outage.extend(d.outage);
                report.calibrations.extend(d.calibrations);
                report.tuning.extend(d.tuning);
                report.bin_occupancy.extend(d.bin_occupancy);
                report.label_reads.extend(d.label_reads);
            }
            Err(e) => {
                log::warn!("day {day} skipped: {e}");
                report.skipped_days.push(SkippedDay {
                    day,
                    reason: e.to_string(),
                });
            }
        }
    }
    if report.skipped_days.len() == cfg.days {
        return Err(Error::CalibrationFailure(format!(
            "every day failed; first reason: {}",
            report.skipped_days[0].reason
        )));
    }
    report.summaries = summarise(&report.rows);
    let observed = data.slice_slots(0, cfg.days * SLOTS_PER_DAY)?;
    let gammas = spanning_thresholds(&observed, cfg.threshold_points)?;
    report.occupancy_vs_threshold = occupancy_vs_threshold(&observed, &gammas)?;
    Ok(report)
}

fn write_file(
    dir: &Path,
    name: &str,
    body: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut buf = Vec::new();
    body(&mut buf).map_err(|e| Error::io(&path, e))?;
    std::fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn write_comparison_csv<W: Write>(rows: &[ComparisonRow], w: &mut W) -> std::io::Result<()> {
    writeln!(
        w,
        "day,classifier,split_ratio,ca,misdetections,false_alarms,fit_seconds,predict_seconds"
    )?;
    for r in rows {
        let m = &r.metrics;
        writeln!(
            w,
            "{},{},{:?},{:?},{},{},{:?},{:?}",
            r.day,
            r.classifier,
            r.split_ratio,
            m.ca,
            m.misdetections,
            m.false_alarms,
            m.fit_seconds,
            m.predict_seconds
        )?;
    }
    Ok(())
}

pub fn write_outage_csv<W: Write>(rows: &[OutageRow], w: &mut W) -> std::io::Result<()> {
    writeln!(
        w,
        "day,classifier,expected_outage,evaluated_outage,abs_difference"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{:?},{:?},{:?}",
            r.day, r.classifier, r.expected_outage, r.evaluated_outage, r.abs_difference
        )?;
    }
    Ok(())
}

pub fn write_summary_csv<W: Write>(rows: &[ClassifierSummary], w: &mut W) -> std::io::Result<()> {
    writeln!(
        w,
        "classifier,split_ratio,days,mean_ca,mean_fit_seconds,mean_predict_seconds"
    )?;
    for s in rows {
        writeln!(
            w,
            "{},{:?},{},{:?},{:?},{:?}",
            s.classifier,
            s.split_ratio,
            s.days,
            s.mean_ca,
            s.mean_fit_seconds,
            s.mean_predict_seconds
        )?;
    }
    Ok(())
}

pub fn write_calibration_json(report: &ComparisonReport) -> Result<String> {
    #[derive(Serialize)]
    struct Doc<'a> {
        days: &'a [DayCalibration],
        skipped_days: &'a [SkippedDay],
    }
    Ok(serde_json::to_string_pretty(&Doc {
        days: &report.calibrations,
        skipped_days: &report.skipped_days,
    })?)
}

/// Writes the report files into `dir`, creating it if needed, and returns
/// their paths.
pub fn emit_reports(report: &ComparisonReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let calibration = write_calibration_json(report)?;
    Ok(vec![
        write_file(dir, "comparison.csv", |w| {
            write_comparison_csv(&report.rows, w)
        })?,
        write_file(dir, "summary.csv", |w| {
            write_summary_csv(&report.summaries, w)
        })?,
        write_file(dir, "outage.csv", |w| write_outage_csv(&report.outage, w))?,
        write_file(dir, "calibration.json", |w| {
            w.write_all(calibration.as_bytes())
        })?,
        write_file(dir, "occupancy_vs_threshold.csv", |w| {
            crate::occupancy::write_occupancy_vs_threshold(&report.occupancy_vs_threshold, w)
        })?,
        write_file(dir, "bin_occupancy.csv", |w| {
            writeln!(w, "day,bin,frequency_mhz,occupancy")?;
            for r in &report.bin_occupancy {
                writeln!(
                    w,
                    "{},{},{:?},{:?}",
                    r.day, r.bin, r.frequency_mhz, r.occupancy
                )?;
            }
            Ok(())
        })?,
        write_file(dir, "tuning_history.csv", |w| {
            writeln!(w, "day,split_ratio,iteration,best_box_constraint,best_ca")?;
            for r in &report.tuning {
                writeln!(
                    w,
                    "{},{:?},{},{:?},{:?}",
                    r.day,
                    r.split_ratio,
                    r.record.iteration,
                    r.record.best_box_constraint,
                    r.record.best_ca
                )?;
            }
            Ok(())
        })?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ActivityPattern;

    fn tiny(classifiers: Vec<ClassifierKind>) -> ExperimentConfig {
        let gen = GeneratorConfig::group_a(
            ActivityPattern::Periodic {
                period_slots: 30,
                duty_cycle: 0.5,
            },
            0,
        );
        let mut cfg =
            ExperimentConfig::synthetic(gen, BandConfig::new("t", 0.0, 12.0, 12).unwrap(), 1);
        cfg.classifiers = classifiers;
        cfg.record_timings = false;
        cfg
    }

    #[test]
    fn classifier_names_round_trip() {
        for k in ClassifierKind::ALL {
            assert_eq!(k.name().parse::<ClassifierKind>().unwrap(), k);
            assert_eq!(serde_json::to_value(k).unwrap(), k.name());
        }
        assert!("knn".parse::<ClassifierKind>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(tiny(vec![]).validate().is_err());
        assert!(tiny(vec![ClassifierKind::Nbc, ClassifierKind::Nbc])
            .validate()
            .is_err());
        let mut c = tiny(vec![ClassifierKind::Nbc]);
        c.split_ratios = vec![1.0];
        assert!(c.validate().is_err());
        assert!(ExperimentConfig::from_json("{\"days\": 1}").is_err());
        assert!(tiny(vec![ClassifierKind::Nbc]).validate().is_ok());
    }

    #[test]
    fn minimal_pipeline_rows() {
        let mut cfg = tiny(vec![ClassifierKind::Nbc]);
        cfg.split_ratios = vec![0.3];
        let r = run_experiment(&cfg).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.outage.len(), 1);
        assert_eq!(
            r.label_reads[0].reads,
            vec![LabelUse::ExpectedOutage, LabelUse::Evaluate]
        );
    }

    #[test]
    fn seeds_are_spread() {
        assert_ne!(mix_seed(1, 0, 0), mix_seed(1, 1, 0));
        assert_ne!(mix_seed(1, 0, 0), mix_seed(1, 0, 1));
        assert_eq!(mix_seed(7, 3, 1), mix_seed(7, 3, 1));
    }
}
