//! The four subcommands. Each writes into the configured output directory and
//! returns the paths it wrote.

use std::fs;
use std::path::{Path, PathBuf};

use funcsel_core::dataset::{FunctionalDataset, Split};
use funcsel_core::prior;
use funcsel_core::region::{self, PredictionMetrics, Region, RegionMetrics};
use funcsel_core::selector::{self, Criterion, ProjectionScore, SelectionResult};
use funcsel_core::sim::{self, SimScenario, SimTruth};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{io_err, json_err, CliError, CliResult};

pub const DATASET_FILE: &str = "dataset.csv";
pub const TRUTH_FILE: &str = "truth.json";
pub const SELECTION_FILE: &str = "selection.json";
pub const MODEL_FILE: &str = "model.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const PIP_FILE: &str = "pip.csv";
pub const REPLICATE_METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

/// Header attached to every output so that it can be regenerated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: ExperimentConfig,
}

impl Provenance {
    fn new(command: &str, config: &ExperimentConfig) -> Self {
        Self {
            tool: "funcsel".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed: config.selector.train.seed,
            config: config.clone(),
        }
    }

    fn comment(&self) -> String {
        format!("provenance: {}", serde_json::to_string(self).expect("provenance serializes"))
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TruthFile {
    pub provenance: Provenance,
    pub scenario: SimScenario,
    pub truth: SimTruth,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FeatureReport {
    pub index: usize,
    pub support: [f64; 2],
    pub midpoint: f64,
    pub column_norm_sq: f64,
    pub pip: f64,
    pub selected: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SelectionFile {
    pub provenance: Provenance,
    pub j_star: usize,
    pub r_star: usize,
    pub criterion_requested: Criterion,
    pub criterion_used: Criterion,
    pub norm_threshold: f64,
    pub mask: Vec<bool>,
    pub features: Vec<FeatureReport>,
    pub region: Region,
    pub scores: Vec<ProjectionScore>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub provenance: Provenance,
    pub model: SelectionResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsFile {
    pub provenance: Provenance,
    pub split: Split,
    pub n: usize,
    pub j_star: usize,
    pub n_selected: usize,
    pub criterion_used: Criterion,
    pub prediction: PredictionMetrics,
    pub estimated_region: Region,
    pub true_region: Option<Region>,
    pub region: Option<RegionMetrics>,
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(json_err(path))?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(json_err(path))
}

fn write_csv(path: &Path, comment: &str, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut buf = format!("# {comment}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let to_err = |e: csv::Error| CliError::Config(format!("{}: {e}", path.display()));
        w.write_record(header).map_err(to_err)?;
        for row in rows {
            w.write_record(row).map_err(to_err)?;
        }
        w.flush().map_err(io_err(path))?;
    }
    fs::write(path, buf).map_err(io_err(path))
}

/// The dataset named by the config, or the one its scenario generates.
pub fn resolve_dataset(config: &ExperimentConfig) -> CliResult<(FunctionalDataset, Option<SimTruth>)> {
    match &config.dataset_path {
        Some(path) => Ok((FunctionalDataset::load_csv(path)?, None)),
        None => {
            let (ds, truth) = sim::gen_dataset(config.scenario()?)?;
            Ok((ds, Some(truth)))
        }
    }
}

pub fn cmd_simulate(config: &ExperimentConfig) -> CliResult<Vec<PathBuf>> {
    config.validate()?;
    let scenario = config.scenario()?.clone();
    let (dataset, truth) = sim::gen_dataset(&scenario)?;
    let prov = Provenance::new("simulate", config);
    create_dir(&config.output_dir)?;

    let data_path = config.output_dir.join(DATASET_FILE);
    dataset.save_csv(&data_path, Some(&prov.comment()))?;
    let truth_path = config.output_dir.join(TRUTH_FILE);
    write_json(
        &truth_path,
        &TruthFile {
            provenance: prov,
            scenario,
            truth,
        },
    )?;
    Ok(vec![data_path, truth_path])
}

pub fn selection_file(result: &SelectionResult, provenance: Provenance) -> CliResult<SelectionFile> {
    let basis = result.basis()?;
    let norms = result.final_params.column_norms_sq();
    let features = (0..result.j_star)
        .map(|j| {
            let s = basis.support(j);
            FeatureReport {
                index: j,
                support: [s.start, s.end],
                midpoint: s.midpoint(),
                column_norm_sq: norms[j],
                pip: result.final_pip[j],
                selected: result.final_mask[j],
            }
        })
        .collect();
    Ok(SelectionFile {
        provenance,
        j_star: result.j_star,
        r_star: result.r_star,
        criterion_requested: result.criterion_requested,
        criterion_used: result.criterion_used,
        norm_threshold: prior::norm_threshold(&result.hyper, result.final_params.first_width())?,
        mask: result.final_mask.clone(),
        features,
        region: region::features_to_region(&result.selected(), &basis)?,
        scores: result.per_j.clone(),
    })
}

pub fn cmd_fit(config: &ExperimentConfig) -> CliResult<Vec<PathBuf>> {
    config.validate()?;
    let (dataset, _) = resolve_dataset(config)?;
    let result = selector::run_selection(&dataset, &config.selector)?;
    create_dir(&config.output_dir)?;

    let prov = Provenance::new("fit", config);
    let sel_path = config.output_dir.join(SELECTION_FILE);
    write_json(&sel_path, &selection_file(&result, prov.clone())?)?;
    let model_path = config.output_dir.join(MODEL_FILE);
    write_json(
        &model_path,
        &ModelFile {
            provenance: prov,
            model: result,
        },
    )?;
    Ok(vec![sel_path, model_path])
}

/// Score the fitted model in the output directory on the test split.
pub fn evaluate(config: &ExperimentConfig) -> CliResult<MetricsFile> {
    config.validate()?;
    let model_path = config.output_dir.join(MODEL_FILE);
    let model: ModelFile = read_json(&model_path)?;
    let result = model.model;
    let (dataset, truth) = resolve_dataset(config)?;
    let (test_curves, y_test) = dataset.part(Split::Test);
    if test_curves.is_empty() {
        return Err(CliError::Config("dataset has no test rows".into()));
    }
    let predicted = selector::predict_ensemble(&result, &test_curves)?;
    let prediction = region::prediction_metrics(&predicted, &y_test)?;
    let selected = result.selected();
    let estimated_region = region::features_to_region(&selected, &result.basis()?)?;
    let true_region = truth.map(|t| t.true_region);
    let region = true_region
        .as_ref()
        .map(|t| region::region_metrics(&estimated_region, t));
    Ok(MetricsFile {
        provenance: Provenance::new("evaluate", config),
        split: Split::Test,
        n: y_test.len(),
        j_star: result.j_star,
        n_selected: selected.len(),
        criterion_used: result.criterion_used,
        prediction,
        estimated_region,
        true_region,
        region,
    })
}

pub fn cmd_evaluate(config: &ExperimentConfig) -> CliResult<Vec<PathBuf>> {
    let metrics = evaluate(config)?;
    let model: ModelFile = read_json(&config.output_dir.join(MODEL_FILE))?;
    let sel = selection_file(&model.model, metrics.provenance.clone())?;

    let metrics_path = config.output_dir.join(METRICS_FILE);
    write_json(&metrics_path, &metrics)?;
    let pip_path = config.output_dir.join(PIP_FILE);
    let rows: Vec<Vec<String>> = sel
        .features
        .iter()
        .map(|f| {
            vec![
                f.index.to_string(),
                f.midpoint.to_string(),
                f.support[0].to_string(),
                f.support[1].to_string(),
                f.pip.to_string(),
                f.selected.to_string(),
            ]
        })
        .collect();
    write_csv(
        &pip_path,
        &metrics.provenance.comment(),
        &["j", "t", "support_start", "support_end", "pip", "selected"],
        &rows,
    )?;
    Ok(vec![metrics_path, pip_path])
}

/// Directory name of a scenario, e.g. `simple-linear-snr10`.
pub fn scenario_label(s: &SimScenario) -> String {
    format!("{:?}-{:?}-snr{}", s.beta, s.link, s.response_snr).to_lowercase()
}

/// Config of replicate `k` of one scenario: seeds shifted by `k`, output in its own directory.
pub fn replicate_config(config: &ExperimentConfig, scenario: &SimScenario, k: usize) -> ExperimentConfig {
    let mut sub = config.clone();
    sub.scenario = Some(SimScenario {
        seed: scenario.seed.wrapping_add(k as u64),
        ..scenario.clone()
    });
    sub.scenario_grid = None;
    sub.replicates = 1;
    sub.selector.train.seed = config.selector.train.seed.wrapping_add(k as u64);
    sub.output_dir = config
        .output_dir
        .join(scenario_label(scenario))
        .join(format!("rep_{k:03}"));
    sub
}

const METRIC_NAMES: [&str; 7] = ["recall", "precision", "f1", "rmse", "mae", "j_star", "n_selected"];

fn metric_values(m: &MetricsFile) -> [f64; 7] {
    let r = m.region.unwrap_or(RegionMetrics {
        recall: f64::NAN,
        precision: f64::NAN,
        f1: f64::NAN,
    });
    [
        r.recall,
        r.precision,
        r.f1,
        m.prediction.rmse,
        m.prediction.mae,
        m.j_star as f64,
        m.n_selected as f64,
    ]
}

/// Sample quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn cmd_reproduce(config: &ExperimentConfig) -> CliResult<Vec<PathBuf>> {
    config.validate()?;
    let scenarios = config.scenarios()?;
    let jobs: Vec<(usize, usize)> = (0..scenarios.len())
        .flat_map(|s| (0..config.replicates).map(move |k| (s, k)))
        .collect();

    let results: Vec<MetricsFile> = jobs
        .par_iter()
        .map(|&(s, k)| {
            let sub = replicate_config(config, &scenarios[s], k);
            log::info!("replicate {k} of {}", scenario_label(&scenarios[s]));
            cmd_simulate(&sub)?;
            cmd_fit(&sub)?;
            cmd_evaluate(&sub)?;
            read_json::<MetricsFile>(&sub.output_dir.join(METRICS_FILE))
        })
        .collect::<CliResult<_>>()?;

    let prov = Provenance::new("reproduce", config);
    let mut header = vec!["scenario", "beta", "link", "response_snr", "replicate", "scenario_seed", "train_seed"];
    header.extend(METRIC_NAMES);
    let mut rows = Vec::with_capacity(jobs.len());
    for (&(s, k), m) in jobs.iter().zip(&results) {
        let sub = m.provenance.config.scenario.as_ref().expect("replicates carry a scenario");
        let mut row = vec![
            scenario_label(&scenarios[s]),
            format!("{:?}", sub.beta),
            format!("{:?}", sub.link),
            sub.response_snr.to_string(),
            k.to_string(),
            sub.seed.to_string(),
            m.provenance.seed.to_string(),
        ];
        row.extend(metric_values(m).iter().map(f64::to_string));
        rows.push(row);
    }
    create_dir(&config.output_dir)?;
    let metrics_path = config.output_dir.join(REPLICATE_METRICS_FILE);
    write_csv(&metrics_path, &prov.comment(), &header, &rows)?;

    let mut summary = Vec::new();
    for (s, scenario) in scenarios.iter().enumerate() {
        let mine: Vec<[f64; 7]> = jobs
            .iter()
            .zip(&results)
            .filter(|((si, _), _)| *si == s)
            .map(|(_, m)| metric_values(m))
            .collect();
        for (c, name) in METRIC_NAMES.iter().enumerate() {
            let mut v: Vec<f64> = mine.iter().map(|r| r[c]).filter(|x| !x.is_nan()).collect();
            v.sort_by(f64::total_cmp);
            let (q1, med, q3) = (quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75));
            summary.push(vec![
                scenario_label(scenario),
                name.to_string(),
                v.len().to_string(),
                med.to_string(),
                q1.to_string(),
                q3.to_string(),
                (q3 - q1).to_string(),
            ]);
        }
    }
    let summary_path = config.output_dir.join(SUMMARY_FILE);
    write_csv(
        &summary_path,
        &prov.comment(),
        &["scenario", "metric", "n", "median", "q25", "q75", "iqr"],
        &summary,
    )?;
    Ok(vec![metrics_path, summary_path])
}
