//! Output-weight trainers: minimum-norm least squares, norm-constrained
//! regression, and projected mini-batch SGD, plus the risk estimators used to
//! score them.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{self, CompressedSystem, LeastSquaresFactor};
use crate::rfn::{FeatureMatrix, RandomFeatureNet};
use crate::rng::{domain, StreamKey};

pub const DEFAULT_MAX_BATCH: usize = 64;

/// Step-size base `eta0` for SGD: either absolute, or a multiple of
/// `1 / lambda_max(X^T X / n)` resolved at fit time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepSize {
    Fixed(f64),
    Relative { relative: f64 },
}

impl StepSize {
    pub fn resolve(&self, design: &FeatureMatrix) -> f64 {
        match *self {
            StepSize::Fixed(v) => v,
            StepSize::Relative { relative } => relative / curvature(design),
        }
    }
}

/// Largest eigenvalue of `X^T X / n`.
pub fn curvature(design: &FeatureMatrix) -> f64 {
    let x = design.values();
    let gram = x.transpose() * x / x.nrows().max(1) as f64;
    -linalg::min_eigenvalue(&(-gram))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub lambda: f64,
    pub eta0: StepSize,
    /// Mini-batch size; defaults to `min(n, 64)`.
    #[serde(default)]
    pub batch: Option<usize>,
    pub steps: usize,
    #[serde(default)]
    pub seed: u64,
    /// Return the running average of the iterates instead of the last one.
    #[serde(default)]
    pub average: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    Ols,
    Constrained { lambda: f64 },
    Sgd(SgdConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(flatten)]
    pub method: Method,
    #[serde(default)]
    pub cap: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            method: Method::Ols,
            cap: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(l) = self.cap {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::invalid("train config", format!("cap must be positive, got {l}")));
            }
        }
        match self.method {
            Method::Ols => Ok(()),
            Method::Constrained { lambda } => check_lambda(lambda),
            Method::Sgd(cfg) => cfg.validate(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.method {
            Method::Ols => "ols",
            Method::Constrained { .. } => "constrained",
            Method::Sgd(_) => "sgd",
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        check_lambda(self.lambda)?;
        let eta_ok = match self.eta0 {
            StepSize::Fixed(v) => v.is_finite() && v > 0.0,
            StepSize::Relative { relative } => relative.is_finite() && relative > 0.0,
        };
        if !eta_ok {
            return Err(Error::invalid("sgd config", "eta0 must be positive"));
        }
        if self.steps == 0 {
            return Err(Error::invalid("sgd config", "steps must be at least 1"));
        }
        if self.batch == Some(0) {
            return Err(Error::invalid("sgd config", "batch must be at least 1"));
        }
        Ok(())
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("lambda", format!("must be positive, got {lambda}")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub empirical_risk: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_multiplier: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub effective_rank: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps_run: Option<usize>,
}

/// Mean squared residual `(1/n) |X w - y|^2`.
pub fn design_risk(design: &FeatureMatrix, y: &[f64], w: &DVector<f64>) -> f64 {
    let pred = design.values() * w;
    pred.iter().zip(y).map(|(p, y)| (p - y).powi(2)).sum::<f64>() / y.len() as f64
}

fn check_inputs(design: &FeatureMatrix, y: &[f64]) -> Result<()> {
    if design.point_count() != y.len() {
        return Err(Error::dim("training labels", design.point_count(), y.len()));
    }
    if y.is_empty() {
        return Err(Error::Empty("training data"));
    }
    Ok(())
}

/// Minimum-norm solution of the normal equations `X^T X w = X^T y`.
pub fn fit_ols(design: &FeatureMatrix, y: &[f64]) -> Result<(DVector<f64>, FitDiagnostics)> {
    check_inputs(design, y)?;
    let factor = LeastSquaresFactor::new(design.values(), y)?;
    let w = factor.ridge_solution(0.0);
    let diag = FitDiagnostics {
        empirical_risk: design_risk(design, y, &w),
        effective_rank: Some(factor.rank()),
        ..Default::default()
    };
    Ok((w, diag))
}

/// Empirical risk minimizer over the ball `|w| <= lambda`.
///
/// Returns the OLS solution with multiplier `0` when it is feasible; otherwise
/// the ridge solution whose norm equals `lambda`, with the multiplier found by
/// bisection on the decreasing map `t -> |(X^T X + t I)^-1 X^T y|`.
pub fn fit_constrained(
    design: &FeatureMatrix,
    y: &[f64],
    lambda: f64,
) -> Result<(DVector<f64>, FitDiagnostics)> {
    check_lambda(lambda)?;
    check_inputs(design, y)?;
    let factor = LeastSquaresFactor::new(design.values(), y)?;
    let multiplier = norm_multiplier(&factor, lambda);
    let w = factor.ridge_solution(multiplier);
    let diag = FitDiagnostics {
        empirical_risk: design_risk(design, y, &w),
        lambda_multiplier: Some(multiplier),
        effective_rank: Some(factor.rank()),
        ..Default::default()
    };
    Ok((w, diag))
}

fn norm_multiplier(factor: &LeastSquaresFactor, lambda: f64) -> f64 {
    if factor.ridge_norm(0.0) <= lambda {
        return 0.0;
    }
    let mut hi = 1.0;
    while factor.ridge_norm(hi) > lambda {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let f = factor.ridge_norm(mid);
        if (f - lambda).abs() <= 1e-10 * lambda {
            return mid;
        }
        if f > lambda {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    // f(hi) <= lambda throughout, so `hi` is always feasible.
    hi
}

/// Orthogonal projection onto the closed ball of radius `lambda`.
pub fn project_ball(w: &mut DVector<f64>, lambda: f64) {
    let norm = w.norm();
    if norm > lambda {
        *w *= lambda / norm;
    }
}

pub fn project_ball_copy(w: &DVector<f64>, lambda: f64) -> DVector<f64> {
    let mut out = w.clone();
    project_ball(&mut out, lambda);
    out
}

/// Projected mini-batch SGD started at `W_1 = 0`, performing `steps - 1`
/// updates with step size `eta0 / sqrt(t)`.
pub fn fit_sgd(
    design: &FeatureMatrix,
    y: &[f64],
    config: &SgdConfig,
) -> Result<(DVector<f64>, FitDiagnostics)> {
    fit_sgd_observed(design, y, config, |_, _| {})
}

/// Like [`fit_sgd`], calling `observe(t, &W_t)` for every iterate
/// `t = 1..=steps`, starting with `W_1 = 0`.
pub fn fit_sgd_observed<F>(
    design: &FeatureMatrix,
    y: &[f64],
    config: &SgdConfig,
    mut observe: F,
) -> Result<(DVector<f64>, FitDiagnostics)>
where
    F: FnMut(usize, &DVector<f64>),
{
    config.validate()?;
    check_inputs(design, y)?;
    let n = y.len();
    let p = design.feature_count();
    let batch = config.batch.unwrap_or_else(|| n.min(DEFAULT_MAX_BATCH));
    if batch > n {
        return Err(Error::invalid(
            "sgd config",
            format!("batch {batch} exceeds the number of samples {n}"),
        ));
    }
    let eta0 = config.eta0.resolve(design);

    // Row-major copy for contiguous row access.
    let x = design.values();
    let mut rows = vec![0.0; n * p];
    for j in 0..p {
        for (i, v) in x.column(j).iter().enumerate() {
            rows[i * p + j] = *v;
        }
    }

    let mut rng = StreamKey::new(config.seed).child(domain::SGD_INDICES).rng();
    let mut w = DVector::<f64>::zeros(p);
    let mut grad = vec![0.0; p];
    let mut avg = DVector::<f64>::zeros(p);
    observe(1, &w);
    if config.average {
        avg += &w;
    }
    for t in 1..config.steps {
        grad.iter_mut().for_each(|g| *g = 0.0);
        for _ in 0..batch {
            let j = rng.random_range(0..n);
            let row = &rows[j * p..(j + 1) * p];
            let resid = row.iter().zip(w.iter()).map(|(a, b)| a * b).sum::<f64>() - y[j];
            for (g, a) in grad.iter_mut().zip(row) {
                *g += a * resid;
            }
        }
        let step = 2.0 * eta0 / (t as f64).sqrt() / batch as f64;
        for (wi, g) in w.iter_mut().zip(&grad) {
            *wi -= step * g;
        }
        project_ball(&mut w, config.lambda);
        observe(t + 1, &w);
        if config.average {
            avg += &w;
        }
    }
    let out = if config.average {
        avg / config.steps as f64
    } else {
        w
    };
    let diag = FitDiagnostics {
        empirical_risk: design_risk(design, y, &out),
        steps_run: Some(config.steps),
        ..Default::default()
    };
    Ok((out, diag))
}

/// Dispatch on the configured method.
pub fn fit(
    design: &FeatureMatrix,
    y: &[f64],
    config: &TrainConfig,
) -> Result<(DVector<f64>, FitDiagnostics)> {
    config.validate()?;
    match &config.method {
        Method::Ols => fit_ols(design, y),
        Method::Constrained { lambda } => fit_constrained(design, y, *lambda),
        Method::Sgd(cfg) => fit_sgd(design, y, cfg),
    }
}

/// OLS or constrained fit on the first `k` columns of a compressed system.
pub fn fit_compressed(
    system: &CompressedSystem,
    k: usize,
    config: &TrainConfig,
) -> Result<(DVector<f64>, FitDiagnostics)> {
    config.validate()?;
    let (r, c) = system.leading(k)?;
    let factor = LeastSquaresFactor::new(&r, &c)?;
    let multiplier = match config.method {
        Method::Ols => None,
        Method::Constrained { lambda } => Some(norm_multiplier(&factor, lambda)),
        Method::Sgd(_) => {
            return Err(Error::invalid("train config", "sgd needs the full design matrix"));
        }
    };
    let w = factor.ridge_solution(multiplier.unwrap_or(0.0));
    let diag = FitDiagnostics {
        empirical_risk: system.risk(&w),
        lambda_multiplier: multiplier,
        effective_rank: Some(factor.rank()),
        ..Default::default()
    };
    Ok((w, diag))
}

/// `(1/n) sum (f(X_i) - Y_i)^2` over the dataset.
pub fn empirical_risk(net: &RandomFeatureNet, data: &Dataset) -> Result<f64> {
    if data.len() == 0 {
        return Err(Error::Empty("dataset"));
    }
    let pred = net.evaluate_batch(data.x())?;
    Ok(pred
        .iter()
        .zip(data.y())
        .map(|(p, y)| (p - y).powi(2))
        .sum::<f64>()
        / data.len() as f64)
}

/// Root mean squared deviation between the net and held-out labels.
pub fn prediction_error_estimate(net: &RandomFeatureNet, test: &Dataset) -> Result<f64> {
    if test.len() == 0 {
        return Err(Error::Empty("test set"));
    }
    Ok(empirical_risk(net, test)?.sqrt())
}

/// Same as [`prediction_error_estimate`] from a precomputed test design matrix.
pub fn prediction_error_from_design(
    net: &RandomFeatureNet,
    design: &FeatureMatrix,
    y: &[f64],
) -> Result<f64> {
    check_inputs(design, y)?;
    let pred = net.predict_from_design(design);
    Ok((pred
        .iter()
        .zip(y)
        .map(|(p, y)| (p - y).powi(2))
        .sum::<f64>()
        / y.len() as f64)
        .sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::LabelKind;
    use crate::rfn::{HiddenWeights, WeightDistributionSpec};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn fm(rows: usize, cols: usize, v: &[f64]) -> FeatureMatrix {
        FeatureMatrix::from_matrix(DMatrix::from_row_slice(rows, cols, v))
    }

    #[test]
    fn compressed_fit_matches_direct() {
        let h = HiddenWeights::sample(WeightDistributionSpec::default(), 40, 3, 2).unwrap();
        let mut rng = StreamKey::new(6).rng();
        let pts = DMatrix::from_fn(9000, 3, |_, _| rng.random_range(-1.0f64..1.0));
        let y: Vec<f64> = (0..9000).map(|i| pts[(i, 0)].exp() + 0.1 * rng.random_range(-1.0f64..1.0)).collect();
        let design = h.design_matrix(&pts).unwrap();
        let sys = CompressedSystem::new(design.values(), &y).unwrap();
        for k in [5, 17, 40] {
            let sub = design.leading_features(k);
            for cfg in [
                TrainConfig::default(),
                TrainConfig { method: Method::Constrained { lambda: 0.5 }, cap: None },
            ] {
                let (a, da) = fit(&sub, &y, &cfg).unwrap();
                let (b, db) = fit_compressed(&sys, k, &cfg).unwrap();
                assert!((&a - &b).norm() <= 1e-8 * (1.0 + a.norm()), "k={k}");
                assert!((da.empirical_risk - db.empirical_risk).abs() <= 1e-10);
            }
        }
        let sgd = TrainConfig {
            method: Method::Sgd(SgdConfig {
                lambda: 1.0,
                eta0: StepSize::Fixed(0.1),
                batch: None,
                steps: 10,
                seed: 0,
                average: false,
            }),
            cap: None,
        };
        assert!(fit_compressed(&sys, 5, &sgd).is_err());
        assert!(fit_compressed(&sys, 41, &TrainConfig::default()).is_err());
    }

    #[test]
    fn ols_examples() {
        let (w, d) = fit_ols(&fm(2, 1, &[1.0, 2.0]), &[2.0, 4.0]).unwrap();
        assert_relative_eq!(w[0], 2.0, epsilon = 1e-12);
        assert!(d.empirical_risk < 1e-24);

        let (w, _) = fit_ols(&fm(2, 1, &[1.0, 1.0]), &[1.0, 3.0]).unwrap();
        assert_relative_eq!(w[0], 2.0, epsilon = 1e-12);

        let (w, d) = fit_ols(&fm(1, 2, &[1.0, 1.0]), &[2.0]).unwrap();
        assert_relative_eq!(w[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(w[1], 1.0, epsilon = 1e-12);
        assert_eq!(d.effective_rank, Some(1));

        assert!(matches!(
            fit_ols(&fm(0, 2, &[]), &[]),
            Err(Error::Empty(_))
        ));
        assert!(fit_ols(&fm(2, 1, &[1.0, 1.0]), &[1.0]).is_err());
    }

    #[test]
    fn constrained_examples() {
        let (w, d) = fit_constrained(&fm(1, 1, &[1.0]), &[2.0], 3.0).unwrap();
        assert_relative_eq!(w[0], 2.0, epsilon = 1e-12);
        assert_eq!(d.lambda_multiplier, Some(0.0));

        let (w, d) = fit_constrained(&fm(1, 1, &[1.0]), &[2.0], 1.0).unwrap();
        assert_relative_eq!(w[0], 1.0, epsilon = 1e-9);
        assert_relative_eq!(d.lambda_multiplier.unwrap(), 1.0, epsilon = 1e-8);

        let (w, d) = fit_constrained(&fm(2, 2, &[1.0, 0.5, 0.2, 1.0]), &[0.0, 0.0], 0.1).unwrap();
        assert_eq!(w.norm(), 0.0);
        assert_eq!(d.lambda_multiplier, Some(0.0));

        assert!(fit_constrained(&fm(1, 1, &[1.0]), &[2.0], 0.0).is_err());
        assert!(fit_constrained(&fm(0, 1, &[]), &[], 1.0).is_err());
    }

    #[test]
    fn projection_examples() {
        let w = DVector::from_vec(vec![3.0, 4.0]);
        assert_eq!(project_ball_copy(&w, 5.0), w);
        let p = project_ball_copy(&w, 1.0);
        assert_relative_eq!(p[0], 0.6, epsilon = 1e-15);
        assert_relative_eq!(p[1], 0.8, epsilon = 1e-15);
        assert_eq!(project_ball_copy(&DVector::zeros(3), 1.0), DVector::zeros(3));
    }

    fn one_step(lambda: f64) -> f64 {
        let cfg = SgdConfig {
            lambda,
            eta0: StepSize::Fixed(0.25),
            batch: Some(1),
            steps: 2,
            seed: 0,
            average: false,
        };
        fit_sgd(&fm(1, 1, &[1.0]), &[2.0], &cfg).unwrap().0[0]
    }

    #[test]
    fn sgd_hand_iterations() {
        assert_relative_eq!(one_step(10.0), 1.0, epsilon = 1e-15);
        assert_relative_eq!(one_step(0.5), 0.5, epsilon = 1e-15);

        let cfg = SgdConfig {
            lambda: 1.0,
            eta0: StepSize::Fixed(0.1),
            batch: None,
            steps: 1,
            seed: 3,
            average: false,
        };
        let (w, d) = fit_sgd(&fm(2, 2, &[1.0, 0.0, 0.0, 1.0]), &[1.0, 1.0], &cfg).unwrap();
        assert_eq!(w, DVector::zeros(2));
        assert_eq!(d.steps_run, Some(1));
    }

    #[test]
    fn sgd_rejects_bad_configs() {
        let base = SgdConfig {
            lambda: 1.0,
            eta0: StepSize::Fixed(0.1),
            batch: Some(3),
            steps: 5,
            seed: 0,
            average: false,
        };
        let x = fm(2, 1, &[1.0, 1.0]);
        assert!(fit_sgd(&x, &[1.0, 1.0], &base).is_err());
        assert!(fit_sgd(&x, &[1.0, 1.0], &SgdConfig { steps: 0, batch: None, ..base }).is_err());
        assert!(fit_sgd(&x, &[1.0, 1.0], &SgdConfig { lambda: -1.0, batch: None, ..base }).is_err());
    }

    #[test]
    fn sgd_is_deterministic_and_feasible() {
        let h = HiddenWeights::sample(WeightDistributionSpec::default(), 8, 2, 1).unwrap();
        let mut rng = StreamKey::new(4).rng();
        let pts = DMatrix::from_fn(50, 2, |_, _| rng.random_range(-1.0f64..1.0));
        let y: Vec<f64> = (0..50).map(|i| pts[(i, 0)].exp()).collect();
        let design = h.design_matrix(&pts).unwrap();
        let cfg = SgdConfig {
            lambda: 0.3,
            eta0: StepSize::Relative { relative: 0.5 },
            batch: Some(4),
            steps: 500,
            seed: 9,
            average: false,
        };
        let mut seen = 0;
        let (a, _) = fit_sgd_observed(&design, &y, &cfg, |_, w| {
            seen += 1;
            assert!(w.norm() <= 0.3 * (1.0 + 1e-12));
        })
        .unwrap();
        assert_eq!(seen, 500);
        let (b, _) = fit_sgd(&design, &y, &cfg).unwrap();
        assert_eq!(a, b);
        let (avg, _) = fit_sgd(&design, &y, &SgdConfig { average: true, ..cfg }).unwrap();
        assert!(avg.norm() <= 0.3 * (1.0 + 1e-12));
    }

    #[test]
    fn risk_estimators() {
        let h = HiddenWeights::from_parts(
            DMatrix::from_row_slice(1, 1, &[1.0]),
            DVector::from_vec(vec![0.0]),
            WeightDistributionSpec::default(),
            0,
        )
        .unwrap();
        let zero = RandomFeatureNet::zeros(h.clone());
        let data = Dataset::new(
            DMatrix::from_row_slice(2, 1, &[0.5, 0.7]),
            vec![1.0, -1.0],
            LabelKind::SingleDraw,
            0,
        )
        .unwrap();
        assert_eq!(empirical_risk(&zero, &data).unwrap(), 1.0);

        let four = Dataset::new(
            DMatrix::from_row_slice(4, 1, &[0.1, 0.2, 0.3, 0.4]),
            vec![3.0, 4.0, 0.0, 0.0],
            LabelKind::SingleDraw,
            0,
        )
        .unwrap();
        assert_eq!(prediction_error_estimate(&zero, &four).unwrap(), 2.5);
        let permuted = Dataset::new(
            DMatrix::from_row_slice(4, 1, &[0.3, 0.1, 0.4, 0.2]),
            vec![0.0, 3.0, 0.0, 4.0],
            LabelKind::SingleDraw,
            0,
        )
        .unwrap();
        assert_eq!(prediction_error_estimate(&zero, &permuted).unwrap(), 2.5);

        let ident = RandomFeatureNet::new(h, DVector::from_vec(vec![2.0]), None).unwrap();
        let exact = Dataset::new(
            DMatrix::from_row_slice(2, 1, &[0.5, 1.5]),
            vec![1.0, 3.0],
            LabelKind::SingleDraw,
            0,
        )
        .unwrap();
        assert_eq!(empirical_risk(&ident, &exact).unwrap(), 0.0);
        assert_eq!(prediction_error_estimate(&ident, &exact).unwrap(), 0.0);

        let empty = Dataset::new(DMatrix::zeros(0, 1), vec![], LabelKind::SingleDraw, 0).unwrap();
        assert!(empirical_risk(&ident, &empty).is_err());
        assert!(prediction_error_estimate(&ident, &empty).is_err());
    }

    #[test]
    fn risk_matches_loop_oracle() {
        let h = HiddenWeights::sample(WeightDistributionSpec::default(), 5, 3, 2).unwrap();
        let w = DVector::from_fn(5, |i, _| 0.3 - 0.1 * i as f64);
        let net = RandomFeatureNet::new(h, w, None).unwrap();
        let mut rng = StreamKey::new(5).rng();
        let x = DMatrix::from_fn(7, 3, |_, _| rng.random_range(-1.0..1.0));
        let y: Vec<f64> = (0..7).map(|i| i as f64 * 0.1).collect();
        let data = Dataset::new(x.clone(), y.clone(), LabelKind::SingleDraw, 0).unwrap();
        let mut acc = 0.0;
        for i in 0..7 {
            let row: Vec<f64> = x.row(i).iter().copied().collect();
            acc += (net.evaluate(&row).unwrap() - y[i]).powi(2);
        }
        assert_relative_eq!(empirical_risk(&net, &data).unwrap(), acc / 7.0, max_relative = 1e-13);
    }

    #[test]
    fn config_json_shapes() {
        let c: TrainConfig = serde_json::from_str(r#"{"method":"ols"}"#).unwrap();
        assert_eq!(c.method, Method::Ols);
        let c: TrainConfig =
            serde_json::from_str(r#"{"method":"constrained","lambda":2.5,"cap":3}"#).unwrap();
        assert_eq!(c.method, Method::Constrained { lambda: 2.5 });
        assert_eq!(c.cap, Some(3.0));
        let c: TrainConfig = serde_json::from_str(
            r#"{"method":"sgd","lambda":10,"eta0":{"relative":0.5},"steps":100,"seed":4}"#,
        )
        .unwrap();
        match c.method {
            Method::Sgd(s) => {
                assert_eq!(s.eta0, StepSize::Relative { relative: 0.5 });
                assert_eq!(s.batch, None);
            }
            _ => panic!("expected sgd"),
        }
        let round: TrainConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(round, c);
    }
}
