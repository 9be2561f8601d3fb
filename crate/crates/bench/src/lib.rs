//! Benchmark harness: synthetic dataset generation, predictor training,
//! evaluation with the fatality-aware metric suite and an independent
//! metric oracle.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod oracle;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use reactbench_core::MetricReport;
use reactbench_predictors::{HmmPredictor, IrlModel, MdnPredictor, ModelDocument, TrainedModel};

pub use config::{BenchConfig, TOOL_VERSION};
pub use dataset::{Dataset, Manifest};
pub use error::{BenchError, Result};
pub use eval::{Method, MethodResult, Prepared};
pub use oracle::OracleRow;

pub const PREDICTIONS_FORMAT: &str = "reactbench-predictions";

pub fn cmd_gen_data(config: &BenchConfig, out: &Path) -> Result<Manifest> {
    config.validate()?;
    fs::create_dir_all(out).map_err(|e| BenchError::io(out.display(), e))?;
    dataset::generate(config, out)
}

/// Command-line overrides of the training hyperparameters stored in the
/// dataset config.
#[derive(Debug, Clone, Copy, Default)]
pub struct FitOverrides {
    pub lr: Option<f64>,
    pub epochs: Option<usize>,
    pub iters: Option<usize>,
    pub seed: Option<u64>,
}

/// Trains `method` on the training split. Returns the model and one
/// objective trace per optimization run.
pub fn fit(method: &str, data: &Dataset, ov: FitOverrides) -> Result<(TrainedModel, Vec<Vec<f64>>)> {
    let cfg = &data.config;
    let train = data.train_samples()?;
    Ok(match method {
        "hmm" => {
            let mut hc = cfg.hmm;
            if let Some(s) = ov.seed {
                hc.baum_welch.seed = s;
                hc.gmm.seed = s;
            }
            if let Some(it) = ov.iters {
                hc.baum_welch.max_iter = it;
            }
            let (m, traces) = HmmPredictor::fit(&train, hc)?;
            (TrainedModel::Hmm(m), traces)
        }
        "mdn" => {
            let mut mc = cfg.mdn.clone();
            mc.lr = ov.lr.unwrap_or(mc.lr);
            mc.epochs = ov.epochs.unwrap_or(mc.epochs);
            mc.seed = ov.seed.unwrap_or(mc.seed);
            let (m, trace) = MdnPredictor::fit(&train, mc)?;
            (TrainedModel::Mdn(m), vec![trace])
        }
        "irl" => {
            let mut ic = cfg.irl;
            ic.lr = ov.lr.unwrap_or(ic.lr);
            ic.iters = ov.iters.unwrap_or(ic.iters);
            ic.seed = ov.seed.unwrap_or(ic.seed);
            let (m, trace) = IrlModel::fit(&train, cfg.prototypes.clone(), cfg.irl_features, ic)?;
            (TrainedModel::Irl(m), vec![trace])
        }
        other => return Err(BenchError::Config(format!("cannot fit method {other}"))),
    })
}

pub fn cmd_fit(method: &str, data_dir: &Path, out: &Path, ov: FitOverrides) -> Result<(ModelDocument, Vec<Vec<f64>>)> {
    let data = Dataset::load(data_dir)?;
    let (model, traces) = fit(method, &data, ov)?;
    let doc = ModelDocument::new(model);
    doc.save(out).map_err(|e| BenchError::io(out.display(), e))?;
    Ok((doc, traces))
}

pub fn load_model(path: &Path) -> Result<ModelDocument> {
    ModelDocument::load(path).map_err(|e| match e {
        reactbench_predictors::model::LoadError::Io(io) => BenchError::io(path.display(), io),
        reactbench_predictors::model::LoadError::Model(m) => BenchError::Config(format!("{}: {m}", path.display())),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    #[serde(flatten)]
    pub scores: MetricReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool_version: String,
    pub config_hash: String,
    pub n_test: usize,
    pub rows: Vec<ReportRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictions {
    pub format: String,
    pub tool_version: String,
    pub config_hash: String,
    pub methods: Vec<MethodResult>,
}

impl Report {
    pub fn csv(&self) -> String {
        let mut s = format!("{}\n", MetricReport::CSV_HEADER);
        for r in &self.rows {
            s += &r.scores.csv_row(&r.method);
            s.push('\n');
        }
        s
    }
}

/// Scores fitted models plus the baselines listed in the dataset config.
pub fn evaluate(data: &Dataset, models: Vec<TrainedModel>) -> Result<(Report, Predictions)> {
    let cfg = &data.config;
    let prepared = eval::prepare(data.test_samples()?, cfg)?;
    if prepared.is_empty() {
        return Err(BenchError::Config("test split has no samples".into()));
    }
    let mut methods: Vec<Method> = models.into_iter().map(|m| Method::Fitted(Box::new(m))).collect();
    methods.extend(cfg.methods.iter().filter_map(|m| Method::baseline(m)));
    let results = methods.iter().map(|m| eval::evaluate(m, &prepared, cfg)).collect::<Result<Vec<_>>>()?;
    let report = Report {
        tool_version: TOOL_VERSION.into(),
        config_hash: cfg.hash(),
        n_test: prepared.len(),
        rows: results.iter().map(|r| ReportRow { method: r.method.clone(), scores: r.report }).collect(),
    };
    let preds = Predictions {
        format: PREDICTIONS_FORMAT.into(),
        tool_version: TOOL_VERSION.into(),
        config_hash: cfg.hash(),
        methods: results,
    };
    Ok((report, preds))
}

fn write(path: &Path, text: String) -> Result<()> {
    fs::write(path, text).map_err(|e| BenchError::io(path.display(), e))
}

pub fn cmd_eval(model_paths: &[&Path], data_dir: &Path, out: &Path) -> Result<Report> {
    let data = Dataset::load(data_dir)?;
    let models = model_paths.iter().map(|p| load_model(p).map(|d| d.model)).collect::<Result<Vec<_>>>()?;
    let (report, preds) = evaluate(&data, models)?;
    fs::create_dir_all(out).map_err(|e| BenchError::io(out.display(), e))?;
    write(&out.join("report.csv"), report.csv())?;
    write(&out.join("report.json"), json(&report)?)?;
    write(&out.join("predictions.json"), json(&preds)?)?;
    Ok(report)
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map(|s| s + "\n").map_err(|e| BenchError::json("output", e))
}

pub fn cmd_oracle(data_dir: &Path, preds_path: &Path) -> Result<Vec<OracleRow>> {
    let data = Dataset::load(data_dir)?;
    let text = fs::read_to_string(preds_path).map_err(|e| BenchError::io(preds_path.display(), e))?;
    let preds: Predictions = serde_json::from_str(&text).map_err(|e| BenchError::Oracle(format!("{}: {e}", preds_path.display())))?;
    if preds.format != PREDICTIONS_FORMAT {
        return Err(BenchError::Oracle("not a predictions file".into()));
    }
    if preds.config_hash != data.config.hash() {
        return Err(BenchError::Oracle("predictions were produced for a different dataset config".into()));
    }
    let prepared = eval::prepare(data.test_samples()?, &data.config)?;
    oracle::check(&preds.methods, &prepared)
}
