//! Experiment runner: configuration documents, the four studies, and report
//! files.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::data::{Dataset, LabelKind};
use crate::error::{Error, Result};
use crate::levy::{
    black_scholes, equal_correlation, gen_basket_put_dataset, gen_pde_dataset, CompoundPoissonSpec,
    ExpLevyModel, LevyTriplet,
};
use crate::linalg::CompressedSystem;
use crate::oracle::{
    construct_oracle_weights, FourierProfile, ReferenceFunction, ReferenceGrid, Smoothing,
};
use crate::payoff::Payoff;
use crate::rfn::{FeatureMatrix, HiddenWeights, RandomFeatureNet, WeightDistributionSpec};
use crate::rng::{domain, StreamKey};
use crate::training::{
    design_risk, fit, fit_compressed, fit_ols, fit_sgd_observed, prediction_error_from_design, Method,
    TrainConfig,
};

/// Environment variable capping the worker pool size.
pub const THREADS_ENV: &str = "KOLMO_RFN_THREADS";

/// Band for the oracle error ratio between `N = 100` and `N = 400`.
pub const ORACLE_RATIO_BAND: (f64, f64) = (1.4, 2.8);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    RateCurve,
    BasketPut,
    OracleConvergence,
    SgdVsOls,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::RateCurve => "rate_curve",
            ExperimentKind::BasketPut => "basket_put",
            ExperimentKind::OracleConvergence => "oracle_convergence",
            ExperimentKind::SgdVsOls => "sgd_vs_ols",
        }
    }

    /// Accepts both `rate_curve` and `rate-curve`.
    pub fn parse(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "rate_curve" => Ok(ExperimentKind::RateCurve),
            "basket_put" => Ok(ExperimentKind::BasketPut),
            "oracle_convergence" => Ok(ExperimentKind::OracleConvergence),
            "sgd_vs_ols" => Ok(ExperimentKind::SgdVsOls),
            _ => Err(Error::invalid(
                "experiment kind",
                format!("unknown kind {s:?}; expected rate-curve, basket-put, oracle-convergence or sgd-vs-ols"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovarianceSpec {
    EqualCorrelation {
        sigma: f64,
        rho: f64,
        d: usize,
    },
    Matrix {
        rows: Vec<Vec<f64>>,
    },
}

/// Lévy triplet as written in configuration files. A missing drift means the
/// risk-neutral one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub covariance: CovarianceSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jumps: Option<CompoundPoissonSpec>,
}

impl ModelSpec {
    pub fn black_scholes(sigma: f64, rho: f64, d: usize) -> Self {
        ModelSpec {
            covariance: CovarianceSpec::EqualCorrelation { sigma, rho, d },
            drift: None,
            jumps: None,
        }
    }

    pub fn build(&self) -> Result<LevyTriplet> {
        let sigma = match &self.covariance {
            CovarianceSpec::EqualCorrelation { sigma, rho, d } => {
                if *d == 0 {
                    return Err(Error::invalid("model", "d must be at least 1"));
                }
                if !(sigma.is_finite() && *sigma >= 0.0) {
                    return Err(Error::invalid("model", format!("sigma must be >= 0, got {sigma}")));
                }
                equal_correlation(*sigma, *rho, *d)
            }
            CovarianceSpec::Matrix { rows } => {
                let d = rows.len();
                if d == 0 || rows.iter().any(|r| r.len() != d) {
                    return Err(Error::invalid("model", "covariance rows must form a square matrix"));
                }
                DMatrix::from_fn(d, d, |i, j| rows[i][j])
            }
        };
        match &self.drift {
            Some(g) => LevyTriplet::new(sigma, g.clone(), self.jumps.clone()),
            None => LevyTriplet::risk_neutral(sigma, self.jumps.clone()),
        }
    }
}

fn default_radius() -> f64 {
    1.0
}
fn default_horizon() -> f64 {
    1.0
}
fn default_n_train() -> usize {
    100_000
}
fn default_n_test() -> usize {
    20_000
}
fn default_test_labels() -> LabelKind {
    LabelKind::McPrice { paths: 1000 }
}
fn default_true() -> bool {
    true
}
fn default_paths() -> usize {
    1000
}
fn default_grid() -> usize {
    101
}
fn default_oracle_seeds() -> usize {
    20
}
fn default_oracle_grid() -> usize {
    201
}
fn default_sgd_seeds() -> usize {
    10
}

/// Basket-put study settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasketSettings {
    pub spot: Vec<f64>,
    pub weights: Vec<f64>,
    #[serde(default)]
    pub noise_std: f64,
    /// Monte Carlo paths per label.
    #[serde(default = "default_paths")]
    pub paths: usize,
    /// Strike grid size for the closed-form comparison.
    #[serde(default = "default_grid")]
    pub reference_points: usize,
}

/// Oracle study settings; the smoothing law is `N(0, 2C I)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSettings {
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(default = "default_oracle_seeds")]
    pub seeds: usize,
    #[serde(default = "default_oracle_grid")]
    pub grid_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdStudySettings {
    #[serde(default = "default_sgd_seeds")]
    pub seeds: usize,
    /// Iterates at which the risk gap is recorded; defaults to a 1-2-5 ladder.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<usize>>,
}

impl Default for SgdStudySettings {
    fn default() -> Self {
        SgdStudySettings {
            seeds: default_sgd_seeds(),
            checkpoints: None,
        }
    }
}

/// One experiment, as read from a JSON configuration document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payoff: Option<Payoff>,
    #[serde(rename = "M", default = "default_radius")]
    pub box_radius: f64,
    #[serde(rename = "T", default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_n_train")]
    pub n_train: usize,
    #[serde(default = "default_n_test")]
    pub n_test: usize,
    #[serde(rename = "N_list")]
    pub n_list: Vec<usize>,
    #[serde(default)]
    pub train: TrainConfig,
    /// Additional trainers compared on the same data (basket put).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trainers: Vec<TrainConfig>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub weights: WeightDistributionSpec,
    #[serde(default = "default_train_labels")]
    pub train_labels: LabelKind,
    #[serde(default = "default_test_labels")]
    pub test_labels: LabelKind,
    /// Reuse the first `N` neurons of one draw for every `N`.
    #[serde(default = "default_true")]
    pub nested: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basket: Option<BasketSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sgd_study: Option<SgdStudySettings>,
}

fn default_train_labels() -> LabelKind {
    LabelKind::SingleDraw
}

impl ExperimentSpec {
    /// Desk-scale rate curve: five correlated Black-Scholes assets, max-call.
    pub fn rate_curve_default() -> Self {
        ExperimentSpec {
            kind: ExperimentKind::RateCurve,
            model: Some(ModelSpec::black_scholes(0.2, 0.2, 5)),
            payoff: Some(Payoff::MaxCall { strike: 1.0 }),
            box_radius: 1.0,
            horizon: 1.0,
            n_train: default_n_train(),
            n_test: default_n_test(),
            n_list: vec![10, 20, 40, 80, 160],
            train: TrainConfig::default(),
            trainers: Vec::new(),
            master_seed: 0,
            output_path: None,
            weights: WeightDistributionSpec::default(),
            train_labels: LabelKind::SingleDraw,
            test_labels: default_test_labels(),
            nested: true,
            basket: None,
            oracle: None,
            sgd_study: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid("experiment config", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(Error::invalid("N_list", "must not be empty"));
        }
        if self.n_list[0] == 0 || self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("N_list", "entries must be positive and strictly increasing"));
        }
        if self.n_test == 0 {
            return Err(Error::invalid("n_test", "must be at least 1"));
        }
        if !(self.box_radius.is_finite() && self.box_radius > 0.0) {
            return Err(Error::invalid("M", format!("must be positive, got {}", self.box_radius)));
        }
        if !(self.horizon.is_finite() && self.horizon >= 0.0) {
            return Err(Error::invalid("T", format!("must be >= 0, got {}", self.horizon)));
        }
        self.weights.validate()?;
        self.train.validate()?;
        for t in &self.trainers {
            t.validate()?;
        }
        self.train_labels.validate()?;
        self.test_labels.validate()?;
        let needs_data = self.kind != ExperimentKind::OracleConvergence;
        if needs_data && self.n_train == 0 {
            return Err(Error::invalid("n_train", "must be at least 1"));
        }
        match self.kind {
            ExperimentKind::RateCurve | ExperimentKind::SgdVsOls => {
                if self.model.is_none() || self.payoff.is_none() {
                    return Err(Error::invalid("experiment config", "model and payoff are required"));
                }
            }
            ExperimentKind::BasketPut => {
                if self.model.is_none() || self.basket.is_none() {
                    return Err(Error::invalid("experiment config", "model and basket settings are required"));
                }
            }
            ExperimentKind::OracleConvergence => {
                let o = self
                    .oracle
                    .as_ref()
                    .ok_or_else(|| Error::invalid("experiment config", "oracle settings are required"))?;
                if o.seeds == 0 || o.grid_points == 0 {
                    return Err(Error::invalid("oracle settings", "seeds and grid_points must be positive"));
                }
            }
        }
        if self.kind == ExperimentKind::SgdVsOls && !matches!(self.train.method, Method::Sgd(_)) {
            return Err(Error::invalid("train", "sgd_vs_ols needs an sgd train config"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn config_hash(&self) -> String {
        let text = serde_json::to_string(self).expect("spec serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    fn trainers(&self) -> Vec<TrainConfig> {
        if self.trainers.is_empty() {
            vec![self.train]
        } else {
            self.trainers.clone()
        }
    }
}

/// Per-`N` result line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub method: String,
    pub e_hat: f64,
    pub train_risk: Option<f64>,
    pub wall_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Auxiliary CSV emitted next to the main report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub rows: Vec<ReportRow>,
    pub fitted_slope: Option<f64>,
    pub e0: Option<f64>,
    pub seed: u64,
    pub config_hash: String,
    pub config: ExperimentSpec,
    /// Study-specific metrics.
    pub summary: Map<String, Value>,
    pub tables: Vec<Table>,
}

impl ExperimentReport {
    fn new(spec: &ExperimentSpec) -> Self {
        ExperimentReport {
            kind: spec.kind,
            rows: Vec::new(),
            fitted_slope: None,
            e0: None,
            seed: spec.master_seed,
            config_hash: spec.config_hash(),
            config: spec.clone(),
            summary: Map::new(),
            tables: Vec::new(),
        }
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn metric(&self, key: &str) -> Option<f64> {
        self.summary.get(key).and_then(Value::as_f64)
    }

    /// Slope and `e0` from the rows of `method`, leaving out `N = 1`.
    fn fit_rows(&mut self, method: &str) {
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.method == method && r.n > 1)
            .map(|r| (r.n as f64, r.e_hat))
            .collect();
        self.fitted_slope = fit_log_slope(&pts).map(|(s, _)| s);
        self.e0 = self.rows.iter().find(|r| r.method == method).map(|r| r.e_hat);
    }

    /// `N,e_hat,train_risk,wall_ms,method` lines.
    pub fn rows_csv(&self) -> String {
        let mut out = String::from("N,e_hat,train_risk,wall_ms,method\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.n,
                num(r.e_hat),
                r.train_risk.map(num).unwrap_or_default(),
                num(r.wall_ms),
                r.method
            ));
        }
        out
    }

    pub fn summary_json(&self) -> Value {
        json!({
            "kind": self.kind,
            "slope": self.fitted_slope,
            "e0": self.e0,
            "seed": self.seed,
            "config_hash": self.config_hash,
            "config": self.config,
            "metrics": self.summary,
            "errors": self.rows.iter().filter_map(|r| r.error.as_ref().map(|e| json!({"N": r.n, "method": r.method, "error": e}))).collect::<Vec<_>>(),
        })
    }

    /// Write `report.csv`, `summary.json` and one CSV per table into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let put = |name: &str, text: String| {
            let p = dir.join(name);
            fs::write(&p, text).map_err(|e| Error::io(&p, e))
        };
        put("report.csv", self.rows_csv())?;
        put(
            "summary.json",
            serde_json::to_string_pretty(&self.summary_json()).expect("summary serializes") + "\n",
        )?;
        for t in &self.tables {
            let mut text = t.header.join(",") + "\n";
            for r in &t.rows {
                text.push_str(&r.iter().map(|v| num(*v)).collect::<Vec<_>>().join(","));
                text.push('\n');
            }
            put(&format!("{}.csv", t.name), text)?;
        }
        Ok(())
    }
}

fn num(v: f64) -> String {
    if v.is_finite() && v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:?}")
    }
}

/// Ordinary least squares of `ln e` on `ln N`, skipping non-finite or
/// non-positive entries. Returns `(slope, intercept)`.
pub fn fit_log_slope(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(n, e)| n.is_finite() && e.is_finite() && *n > 0.0 && *e > 0.0)
        .map(|(n, e)| (n.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Size the global worker pool from `KOLMO_RFN_THREADS`, if set. Only the
/// first call has an effect.
pub fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::invalid(THREADS_ENV, format!("expected a positive integer, got {v:?}")))?;
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Hidden layers for every `N` in the list: prefixes of one draw, or
/// independent draws.
struct HiddenLayers {
    full: Option<HiddenWeights>,
    key: StreamKey,
    spec: WeightDistributionSpec,
    dim: usize,
}

impl HiddenLayers {
    fn new(spec: &ExperimentSpec, dim: usize, key: StreamKey) -> Result<Self> {
        let max_n = *spec.n_list.last().expect("validated nonempty");
        let full = if spec.nested {
            Some(HiddenWeights::sample(spec.weights, max_n, dim, key.raw())?)
        } else {
            None
        };
        Ok(HiddenLayers {
            full,
            key,
            spec: spec.weights,
            dim,
        })
    }

    fn get(&self, n: usize) -> Result<HiddenWeights> {
        match &self.full {
            Some(h) => h.prefix(n),
            None => HiddenWeights::sample(self.spec, n, self.dim, self.key.child(n as u64).raw()),
        }
    }
}

/// Design matrices over the largest layer, sliced per `N` when nested.
struct Designs {
    train: Option<FeatureMatrix>,
    test: Option<FeatureMatrix>,
    system: Option<CompressedSystem>,
}

impl Designs {
    fn new(layers: &HiddenLayers, train: &Dataset, test: &Dataset, compress: bool) -> Result<Self> {
        let Some(full) = &layers.full else {
            return Ok(Designs {
                train: None,
                test: None,
                system: None,
            });
        };
        let tr = full.design_matrix(train.x())?;
        let te = full.design_matrix(test.x())?;
        let system = if compress {
            Some(CompressedSystem::new(tr.values(), train.y())?)
        } else {
            None
        };
        Ok(Designs {
            train: if compress { None } else { Some(tr) },
            test: Some(te),
            system,
        })
    }
}

fn is_direct(cfg: &TrainConfig) -> bool {
    !matches!(cfg.method, Method::Sgd(_))
}

/// Fit one trainer at one `N` and score it on the test data.
fn fit_and_score(
    hidden: HiddenWeights,
    designs: &Designs,
    train: &Dataset,
    test: &Dataset,
    cfg: &TrainConfig,
) -> Result<(RandomFeatureNet, f64, f64)> {
    let n = hidden.n_features();
    let (w, diag) = match (&designs.system, &designs.train) {
        (Some(sys), _) if is_direct(cfg) => fit_compressed(sys, n, cfg)?,
        (_, Some(full)) => fit(&full.leading_features(n), train.y(), cfg)?,
        _ => fit(&hidden.design_matrix(train.x())?, train.y(), cfg)?,
    };
    let net = RandomFeatureNet::new(hidden, w, cfg.cap)?;
    let test_design = match &designs.test {
        Some(full) => full.leading_features(n),
        None => net.hidden().design_matrix(test.x())?,
    };
    let e_hat = prediction_error_from_design(&net, &test_design, test.y())?;
    Ok((net, e_hat, diag.empirical_risk))
}

fn run_trainer_curve(
    spec: &ExperimentSpec,
    report: &mut ExperimentReport,
    layers: &HiddenLayers,
    designs: &Designs,
    train: &Dataset,
    test: &Dataset,
    cfg: &TrainConfig,
    mut after: impl FnMut(usize, &RandomFeatureNet),
) {
    for &n in &spec.n_list {
        let start = Instant::now();
        let outcome = layers
            .get(n)
            .and_then(|h| fit_and_score(h, designs, train, test, cfg));
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        let row = match outcome {
            Ok((net, e_hat, risk)) => {
                after(n, &net);
                ReportRow {
                    n,
                    method: cfg.name().into(),
                    e_hat,
                    train_risk: Some(risk),
                    wall_ms,
                    error: None,
                }
            }
            Err(e) => ReportRow {
                n,
                method: cfg.name().into(),
                e_hat: f64::NAN,
                train_risk: None,
                wall_ms,
                error: Some(e.to_string()),
            },
        };
        report.rows.push(row);
    }
}

fn label_json(kind: &LabelKind) -> Value {
    serde_json::to_value(kind).expect("label kind serializes")
}

/// Learning-error curve `e_hat(N)` for the pricing problem, with its log-log
/// slope.
pub fn run_rate_curve(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let triplet = spec.model.as_ref().expect("validated").build()?;
    let payoff = spec.payoff.as_ref().expect("validated");
    let key = StreamKey::new(spec.master_seed);
    let train = gen_pde_dataset(
        &triplet,
        payoff,
        spec.box_radius,
        spec.horizon,
        spec.n_train,
        spec.train_labels,
        key.child(domain::TRAIN_DATA).raw(),
    )?;
    let test = gen_pde_dataset(
        &triplet,
        payoff,
        spec.box_radius,
        spec.horizon,
        spec.n_test,
        spec.test_labels,
        key.child(domain::TEST_DATA).raw(),
    )?;
    let layers = HiddenLayers::new(spec, triplet.dim(), key.child(domain::HIDDEN))?;
    let designs = Designs::new(&layers, &train, &test, is_direct(&spec.train))?;

    let mut report = ExperimentReport::new(spec);
    run_trainer_curve(spec, &mut report, &layers, &designs, &train, &test, &spec.train, |_, _| {});
    report.fit_rows(spec.train.name());
    report.summary.insert("train_labels".into(), label_json(&spec.train_labels));
    report.summary.insert("test_labels".into(), label_json(&spec.test_labels));
    report.summary.insert("dim".into(), json!(triplet.dim()));
    Ok(report)
}

/// Closed-form basket-put prices when the basket is one lognormal asset.
fn lognormal_put_reference(model: &ExpLevyModel, weights: &[f64]) -> Option<impl Fn(f64) -> f64> {
    let t = &model.triplet;
    if t.dim() != 1 || t.jumps().is_some() || t.shifted_drift()[0].abs() > 1e-12 {
        return None;
    }
    let vol = t.sigma()[(0, 0)].sqrt();
    let (s, w, mat) = (model.spot[0], weights[0], model.maturity);
    if w <= 0.0 {
        return None;
    }
    Some(move |k: f64| w * black_scholes::put(s, k / w, vol, mat))
}

/// Put prices as a function of strike on `[0, M]`, for every configured
/// trainer.
pub fn run_basket_put(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let settings = spec.basket.as_ref().expect("validated");
    let triplet = spec.model.as_ref().expect("validated").build()?;
    let model = ExpLevyModel::new(triplet, settings.spot.clone(), spec.horizon)?;
    let key = StreamKey::new(spec.master_seed);
    let gen = |n: usize, label: u64| {
        gen_basket_put_dataset(
            &model,
            &settings.weights,
            spec.box_radius,
            n,
            settings.noise_std,
            settings.paths,
            key.child(label).raw(),
        )
    };
    let train = gen(spec.n_train, domain::TRAIN_DATA)?;
    let test = gen(spec.n_test, domain::TEST_DATA)?;

    let trainers = spec.trainers();
    let layers = HiddenLayers::new(spec, 1, key.child(domain::HIDDEN))?;
    let any_sgd = trainers.iter().any(|t| !is_direct(t));
    let mut designs = Designs::new(&layers, &train, &test, true)?;
    if any_sgd && layers.full.is_some() {
        designs.train = Some(layers.full.as_ref().unwrap().design_matrix(train.x())?);
    }

    let reference = lognormal_put_reference(&model, &settings.weights);
    let strikes: Vec<f64> = match settings.reference_points {
        0 => Vec::new(),
        1 => vec![0.5 * spec.box_radius],
        k => (0..k).map(|j| spec.box_radius * j as f64 / (k - 1) as f64).collect(),
    };
    let grid = DMatrix::from_column_slice(strikes.len(), 1, &strikes);
    let exact: Option<Vec<f64>> = reference.as_ref().map(|f| strikes.iter().map(|k| f(*k)).collect());

    let mut report = ExperimentReport::new(spec);
    let mut table = Table::new("reference_rmse", &["N", "trainer", "rmse"]);
    for (ti, cfg) in trainers.iter().enumerate() {
        run_trainer_curve(spec, &mut report, &layers, &designs, &train, &test, cfg, |n, net| {
            if let (Some(exact), false) = (&exact, strikes.is_empty()) {
                let pred = net.evaluate_batch(&grid).expect("one-dimensional grid");
                let mse = pred.iter().zip(exact).map(|(p, e)| (p - e).powi(2)).sum::<f64>() / exact.len() as f64;
                table.rows.push(vec![n as f64, ti as f64, mse.sqrt()]);
            }
        });
    }
    report.fit_rows(trainers[0].name());
    if exact.is_some() {
        let n_max = *spec.n_list.last().unwrap() as f64;
        let finals: Vec<Value> = table
            .rows
            .iter()
            .filter(|r| r[0] == n_max)
            .map(|r| json!({"trainer": trainers[r[1] as usize].name(), "rmse": r[2]}))
            .collect();
        if let Some(first) = table.rows.iter().find(|r| r[0] == n_max && r[1] == 0.0) {
            report.summary.insert("reference_rmse".into(), json!(first[2]));
        }
        report.summary.insert("reference_rmse_by_trainer".into(), Value::Array(finals));
        report.tables.push(table);
    }
    report.summary.insert("closed_form_reference".into(), json!(exact.is_some()));
    report.summary.insert(
        "trainers".into(),
        json!(trainers.iter().map(|t| t.name()).collect::<Vec<_>>()),
    );
    Ok(report)
}

/// Oracle profile and reference described by an oracle-convergence spec.
pub fn oracle_profile(spec: &ExperimentSpec) -> Result<FourierProfile> {
    let settings = spec
        .oracle
        .as_ref()
        .ok_or_else(|| Error::invalid("experiment config", "oracle settings are required"))?;
    let payoff = spec.payoff.clone().unwrap_or_else(Payoff::unit_tent);
    let dim = payoff.dim().unwrap_or(1);
    if dim > 2 {
        return Err(Error::invalid("oracle study", format!("supports d <= 2, got {dim}")));
    }
    FourierProfile::new(payoff, Smoothing::isotropic(settings.c, dim)?, spec.box_radius, dim)
}

/// Sup-grid error of oracle-weighted networks against `E[Phi(x + V)]`,
/// averaged over independent hidden layers.
pub fn run_oracle_convergence(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let settings = spec.oracle.as_ref().expect("validated");
    let profile = oracle_profile(spec)?;
    run_oracle_with_profile(spec, &profile, settings)
}

/// As [`run_oracle_convergence`] for an explicit profile.
pub fn run_oracle_with_profile(
    spec: &ExperimentSpec,
    profile: &FourierProfile,
    settings: &OracleSettings,
) -> Result<ExperimentReport> {
    let reference = ReferenceFunction::from_profile(profile)?;
    let grid = ReferenceGrid::new(&reference, profile.box_radius(), settings.grid_points)?;
    let key = StreamKey::new(spec.master_seed).child(domain::HIDDEN);
    let dim = profile.dim();

    let mut report = ExperimentReport::new(spec);
    let mut table = Table::new("oracle", &["seed", "N", "sup_error", "max_weight"]);
    let mut means = Vec::new();
    for &n in &spec.n_list {
        let start = Instant::now();
        let mut total = 0.0;
        for s in 0..settings.seeds {
            let hidden = HiddenWeights::sample(spec.weights, n, dim, key.child(s as u64).child(n as u64).raw())?;
            let w = construct_oracle_weights(&hidden, profile)?;
            let max_weight = n as f64 * w.amax();
            let net = RandomFeatureNet::new(hidden, w, None)?;
            let err = grid.sup_error(&net)?;
            total += err;
            table.rows.push(vec![s as f64, n as f64, err, max_weight]);
        }
        let mean = total / settings.seeds as f64;
        means.push((n, mean));
        report.rows.push(ReportRow {
            n,
            method: "oracle".into(),
            e_hat: mean,
            train_risk: None,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
            error: None,
        });
    }
    report.fit_rows("oracle");
    let find = |k: usize| means.iter().find(|m| m.0 == k).map(|m| m.1);
    if let (Some(a), Some(b)) = (find(100), find(400)) {
        let ratio = a / b;
        report.summary.insert("error_ratio_100_400".into(), json!(ratio));
        report.summary.insert(
            "ratio_in_band".into(),
            json!(ratio >= ORACLE_RATIO_BAND.0 && ratio <= ORACLE_RATIO_BAND.1),
        );
    }
    let c = profile.smoothing().decay_constant();
    report.summary.insert("C".into(), json!(c));
    report.summary.insert(
        "C_exceeds_threshold".into(),
        json!(c > crate::levy::HORIZON_THRESHOLD),
    );
    report.summary.insert("grid_points".into(), json!(settings.grid_points));
    report.tables.push(table);
    Ok(report)
}

fn default_checkpoints(steps: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut decade = 1;
    'outer: loop {
        for m in [1, 2, 5] {
            let t = m * decade;
            if t >= steps {
                break 'outer;
            }
            out.push(t);
        }
        decade *= 10;
    }
    out.push(steps);
    out
}

/// Risk gap between projected SGD iterates and the OLS optimum on one fixed
/// dataset.
pub fn run_sgd_vs_ols(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let Method::Sgd(base) = spec.train.method else {
        unreachable!("validated")
    };
    let study = spec.sgd_study.clone().unwrap_or_default();
    if study.seeds == 0 {
        return Err(Error::invalid("sgd study", "seeds must be positive"));
    }
    let mut checkpoints = study.checkpoints.clone().unwrap_or_else(|| default_checkpoints(base.steps));
    checkpoints.retain(|t| *t >= 1 && *t <= base.steps);
    checkpoints.sort_unstable();
    checkpoints.dedup();

    let triplet = spec.model.as_ref().expect("validated").build()?;
    let payoff = spec.payoff.as_ref().expect("validated");
    let key = StreamKey::new(spec.master_seed);
    let train = gen_pde_dataset(
        &triplet,
        payoff,
        spec.box_radius,
        spec.horizon,
        spec.n_train,
        spec.train_labels,
        key.child(domain::TRAIN_DATA).raw(),
    )?;
    let test = gen_pde_dataset(
        &triplet,
        payoff,
        spec.box_radius,
        spec.horizon,
        spec.n_test,
        spec.test_labels,
        key.child(domain::TEST_DATA).raw(),
    )?;
    let layers = HiddenLayers::new(spec, triplet.dim(), key.child(domain::HIDDEN))?;

    let mut report = ExperimentReport::new(spec);
    let mut table = Table::new("sgd_gap", &["N", "steps", "risk_gap"]);
    let mut per_n = Vec::new();
    for &n in &spec.n_list {
        let hidden = layers.get(n)?;
        let design = hidden.design_matrix(train.x())?;
        let test_design = hidden.design_matrix(test.x())?;

        let start = Instant::now();
        let (w_ols, ols_diag) = fit_ols(&design, train.y())?;
        let ols_risk = ols_diag.empirical_risk;
        let ols_net = RandomFeatureNet::new(hidden.clone(), w_ols, spec.train.cap)?;
        report.rows.push(ReportRow {
            n,
            method: "ols".into(),
            e_hat: prediction_error_from_design(&ols_net, &test_design, test.y())?,
            train_risk: Some(ols_risk),
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
            error: None,
        });

        let start = Instant::now();
        let mut gaps = vec![0.0; checkpoints.len()];
        let mut max_norm_ratio: f64 = 0.0;
        let (mut e_sum, mut risk_sum, mut final_gap) = (0.0, 0.0, 0.0);
        for s in 0..study.seeds {
            let mut cfg = base;
            cfg.seed = key.child(domain::SGD_INDICES).child(s as u64).raw();
            let mut next = 0;
            let (w, diag) = fit_sgd_observed(&design, train.y(), &cfg, |t, w| {
                max_norm_ratio = max_norm_ratio.max(w.norm() / cfg.lambda);
                if next < checkpoints.len() && checkpoints[next] == t {
                    gaps[next] += design_risk(&design, train.y(), w) - ols_risk;
                    next += 1;
                }
            })?;
            let net = RandomFeatureNet::new(hidden.clone(), w, spec.train.cap)?;
            e_sum += prediction_error_from_design(&net, &test_design, test.y())?;
            risk_sum += diag.empirical_risk;
            final_gap += diag.empirical_risk - ols_risk;
        }
        let k = study.seeds as f64;
        for (t, g) in checkpoints.iter().zip(&gaps) {
            table.rows.push(vec![n as f64, *t as f64, g / k]);
        }
        report.rows.push(ReportRow {
            n,
            method: "sgd".into(),
            e_hat: e_sum / k,
            train_risk: Some(risk_sum / k),
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
            error: None,
        });
        let tolerance = 0.05 * (1.0 + ols_risk);
        per_n.push(json!({
            "N": n,
            "ols_risk": ols_risk,
            "final_gap_mean": final_gap / k,
            "tolerance": tolerance,
            "within_tolerance": final_gap / k <= tolerance,
            "max_norm_ratio": max_norm_ratio,
        }));
    }
    report.fit_rows("sgd");
    if let Some(Value::Object(last)) = per_n.last() {
        for (k, v) in last {
            report.summary.insert(k.clone(), v.clone());
        }
    }
    report.summary.insert("by_N".into(), Value::Array(per_n));
    report.summary.insert("seeds".into(), json!(study.seeds));
    report.tables.push(table);
    Ok(report)
}

/// Dispatch on `spec.kind`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    match spec.kind {
        ExperimentKind::RateCurve => run_rate_curve(spec),
        ExperimentKind::BasketPut => run_basket_put(spec),
        ExperimentKind::OracleConvergence => run_oracle_convergence(spec),
        ExperimentKind::SgdVsOls => run_sgd_vs_ols(spec),
    }
}

/// Run and, when `output_path` is set, write the report there.
pub fn run_and_write(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    let report = run_experiment(spec)?;
    if let Some(dir) = &spec.output_path {
        report.write(dir)?;
    }
    Ok(report)
}

/// Dataset description for `gen-data`: a pricing-PDE sample when `basket` is
/// absent, a basket-put sample otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    pub model: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payoff: Option<Payoff>,
    #[serde(rename = "M", default = "default_radius")]
    pub box_radius: f64,
    #[serde(rename = "T", default = "default_horizon")]
    pub horizon: f64,
    pub n: usize,
    #[serde(default = "default_train_labels")]
    pub labels: LabelKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basket: Option<BasketSettings>,
}

impl DataSpec {
    pub fn generate(&self) -> Result<Dataset> {
        if self.n == 0 {
            return Err(Error::invalid("data config", "n must be at least 1"));
        }
        let triplet = self.model.build()?;
        match (&self.basket, &self.payoff) {
            (Some(b), _) => {
                let model = ExpLevyModel::new(triplet, b.spot.clone(), self.horizon)?;
                gen_basket_put_dataset(&model, &b.weights, self.box_radius, self.n, b.noise_std, b.paths, self.seed)
            }
            (None, Some(p)) => gen_pde_dataset(
                &triplet,
                p,
                self.box_radius,
                self.horizon,
                self.n,
                self.labels,
                self.seed,
            ),
            (None, None) => Err(Error::invalid("data config", "either payoff or basket is required")),
        }
    }
}

/// Root mean squared deviation of a model on a dataset; used by `evaluate`.
pub fn evaluate_model(net: &RandomFeatureNet, data: &Dataset) -> Result<f64> {
    crate::training::prediction_error_estimate(net, data)
}

/// Realizable target `y = W . relu(A x + B)` for harness self-checks.
pub fn realizable_dataset(net: &RandomFeatureNet, n: usize, box_radius: f64, seed: u64) -> Result<Dataset> {
    use rand::Rng;
    let d = net.hidden().dim();
    let mut rng = StreamKey::new(seed).child(domain::TRAIN_DATA).rng();
    let x = DMatrix::from_fn(n, d, |_, _| rng.random_range(-box_radius..=box_radius));
    let y = net.evaluate_batch(&x)?;
    Dataset::new(x, y, LabelKind::SingleDraw, seed)?.with_box(box_radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn slope_of_exact_power_law() {
        let pts: Vec<(f64, f64)> = [10.0, 20.0, 40.0, 80.0, 160.0]
            .iter()
            .map(|n: &f64| (*n, 0.7 / n.sqrt()))
            .collect();
        let (s, b) = fit_log_slope(&pts).unwrap();
        assert_relative_eq!(s, -0.5, epsilon = 1e-12);
        assert_relative_eq!(b.exp(), 0.7, epsilon = 1e-12);
        let mut with_nan = pts.clone();
        with_nan.push((320.0, f64::NAN));
        assert_relative_eq!(fit_log_slope(&with_nan).unwrap().0, -0.5, epsilon = 1e-12);
        assert!(fit_log_slope(&pts[..1]).is_none());
    }

    #[test]
    fn spec_validation() {
        let mut s = ExperimentSpec::rate_curve_default();
        assert!(s.validate().is_ok());
        s.n_list = vec![10, 10];
        assert!(s.validate().is_err());
        s.n_list = vec![];
        assert!(s.validate().is_err());
        s = ExperimentSpec::rate_curve_default();
        s.n_test = 0;
        assert!(s.validate().is_err());
        s = ExperimentSpec::rate_curve_default();
        s.kind = ExperimentKind::SgdVsOls;
        assert!(s.validate().is_err());
    }

    #[test]
    fn kind_parsing() {
        assert_eq!(ExperimentKind::parse("rate-curve").unwrap(), ExperimentKind::RateCurve);
        assert_eq!(ExperimentKind::parse("sgd_vs_ols").unwrap(), ExperimentKind::SgdVsOls);
        assert!(ExperimentKind::parse("nope").is_err());
    }

    #[test]
    fn spec_json_round_trip_and_hash() {
        let s = ExperimentSpec::rate_curve_default();
        let text = serde_json::to_string(&s).unwrap();
        let back = ExperimentSpec::from_json(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.config_hash(), s.config_hash());
        let mut t = s.clone();
        t.master_seed = 1;
        assert_ne!(t.config_hash(), s.config_hash());
    }

    #[test]
    fn minimal_config_uses_defaults() {
        let s = ExperimentSpec::from_json(
            r#"{"kind": "rate_curve", "N_list": [10, 20],
                "model": {"covariance": {"kind": "equal_correlation", "sigma": 0.2, "rho": 0.2, "d": 5}},
                "payoff": {"kind": "max_call", "strike": 1.0}}"#,
        )
        .unwrap();
        assert_eq!(s.n_train, 100_000);
        assert_eq!(s.test_labels, LabelKind::McPrice { paths: 1000 });
        assert!(s.nested);
        assert_eq!(s.box_radius, 1.0);
        let t = s.model.unwrap().build().unwrap();
        assert_eq!(t.dim(), 5);
        assert!(t.shifted_drift().iter().all(|g| g.abs() < 1e-15));
    }

    #[test]
    fn checkpoint_ladder() {
        assert_eq!(default_checkpoints(1), vec![1]);
        assert_eq!(default_checkpoints(100), vec![1, 2, 5, 10, 20, 50, 100]);
        assert_eq!(default_checkpoints(30), vec![1, 2, 5, 10, 20, 30]);
    }

    #[test]
    fn csv_number_format() {
        assert_eq!(num(10.0), "10");
        assert_eq!(num(0.25), "0.25");
        assert_eq!(num(f64::NAN), "NaN");
    }
}
