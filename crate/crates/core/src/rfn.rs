//! Random feature networks: weight laws, frozen hidden layers and evaluation.
//!
//! A network computes `x -> sum_i W_i * relu(A_i . x + B_i)`, optionally
//! truncated to `[-L, L]`. The hidden layer `(A, B)` is sampled once from the
//! laws in [`WeightDistributionSpec`] and never trained.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal, StudentT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::rng::{domain, StreamKey};

/// Laws of the hidden weights: rows of `A` are multivariate `t_nu(0, I_d)`,
/// biases are scalar Student-t with `b_dof` degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightDistributionSpec {
    pub nu: f64,
    pub b_dof: f64,
}

impl Default for WeightDistributionSpec {
    fn default() -> Self {
        WeightDistributionSpec { nu: 5.0, b_dof: 2.0 }
    }
}

impl WeightDistributionSpec {
    pub fn new(nu: f64, b_dof: f64) -> Result<Self> {
        let spec = WeightDistributionSpec { nu, b_dof };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu.is_finite() && self.nu > 1.0) {
            return Err(Error::invalid(
                "weight distribution",
                format!("nu must be finite and > 1, got {}", self.nu),
            ));
        }
        if !(self.b_dof.is_finite() && self.b_dof > 0.0) {
            return Err(Error::invalid(
                "weight distribution",
                format!("b_dof must be finite and > 0, got {}", self.b_dof),
            ));
        }
        Ok(())
    }

    /// Log of the multivariate t density of `A_1` at `x`.
    pub fn log_pi_w(&self, x: &[f64]) -> f64 {
        let nu = self.nu;
        let d = x.len() as f64;
        let sq: f64 = x.iter().map(|v| v * v).sum();
        ln_gamma(0.5 * (nu + d))
            - ln_gamma(0.5 * nu)
            - 0.5 * d * (nu * std::f64::consts::PI).ln()
            - 0.5 * (nu + d) * (sq / nu).ln_1p()
    }

    pub fn pi_w(&self, x: &[f64]) -> f64 {
        self.log_pi_w(x).exp()
    }

    /// Log of the Student-t density of `B_1` at `u`.
    pub fn log_pi_b(&self, u: f64) -> f64 {
        let k = self.b_dof;
        ln_gamma(0.5 * (k + 1.0))
            - ln_gamma(0.5 * k)
            - 0.5 * (k * std::f64::consts::PI).ln()
            - 0.5 * (k + 1.0) * (u * u / k).ln_1p()
    }

    pub fn pi_b(&self, u: f64) -> f64 {
        self.log_pi_b(u).exp()
    }

    /// Degree `k` of the polynomial `p_b` with `p_b * pi_b >= 1` everywhere.
    ///
    /// With `m = ceil((b_dof + 1) / 2)` we use `p_b(u) = c (1 + u^2 / b_dof)^m`,
    /// where `c` is the reciprocal of the density's normalizing constant.
    pub fn tail_polynomial_degree(&self) -> u32 {
        2 * (0.5 * (self.b_dof + 1.0)).ceil() as u32
    }

    pub fn tail_polynomial(&self, u: f64) -> f64 {
        let k = self.b_dof;
        let m = (self.tail_polynomial_degree() / 2) as i32;
        let log_norm = ln_gamma(0.5 * (k + 1.0)) - ln_gamma(0.5 * k) - 0.5 * (k * std::f64::consts::PI).ln();
        (-log_norm).exp() * (1.0 + u * u / k).powi(m)
    }
}

/// The frozen random layer. Row `i` of `a` is `A_i`; `b[i]` is `B_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenWeights {
    a: DMatrix<f64>,
    b: DVector<f64>,
    spec: WeightDistributionSpec,
    seed: u64,
}

impl HiddenWeights {
    /// Draw `n_features` neurons in dimension `dim`.
    ///
    /// Neuron `i` reads only from its own substream, so the first `k` neurons
    /// of a larger draw coincide with a draw of size `k` under the same seed.
    pub fn sample(
        spec: WeightDistributionSpec,
        n_features: usize,
        dim: usize,
        seed: u64,
    ) -> Result<Self> {
        spec.validate()?;
        if n_features == 0 {
            return Err(Error::invalid("hidden weights", "N must be at least 1"));
        }
        if dim == 0 {
            return Err(Error::invalid("hidden weights", "d must be at least 1"));
        }
        let chi = ChiSquared::new(spec.nu)
            .map_err(|e| Error::invalid("weight distribution", e.to_string()))?;
        let student = StudentT::new(spec.b_dof)
            .map_err(|e| Error::invalid("weight distribution", e.to_string()))?;
        let root = StreamKey::new(seed).child(domain::HIDDEN);

        let neurons: Vec<(Vec<f64>, f64)> = (0..n_features)
            .into_par_iter()
            .map(|i| {
                let mut rng = root.child(i as u64).rng();
                let z: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                let u: f64 = chi.sample(&mut rng);
                let scale = (u / spec.nu).sqrt().recip();
                let row = z.into_iter().map(|v| v * scale).collect();
                let bias = student.sample(&mut rng);
                (row, bias)
            })
            .collect();

        let a = DMatrix::from_fn(n_features, dim, |i, j| neurons[i].0[j]);
        let b = DVector::from_iterator(n_features, neurons.iter().map(|n| n.1));
        Ok(HiddenWeights { a, b, spec, seed })
    }

    /// Build from explicit weights. `a` is `N x d`, `b` has length `N`.
    pub fn from_parts(
        a: DMatrix<f64>,
        b: DVector<f64>,
        spec: WeightDistributionSpec,
        seed: u64,
    ) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::dim("hidden weights", a.nrows(), b.len()));
        }
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(Error::Empty("hidden weight matrix"));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("hidden weights", "entries must be finite"));
        }
        Ok(HiddenWeights { a, b, spec, seed })
    }

    pub fn n_features(&self) -> usize {
        self.a.nrows()
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn spec(&self) -> WeightDistributionSpec {
        self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.a.row(i).iter().copied().collect()
    }

    /// The first `n` neurons.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n_features() {
            return Err(Error::invalid(
                "hidden weights",
                format!("prefix {n} out of range 1..={}", self.n_features()),
            ));
        }
        Ok(HiddenWeights {
            a: self.a.rows(0, n).into_owned(),
            b: self.b.rows(0, n).into_owned(),
            spec: self.spec,
            seed: self.seed,
        })
    }

    /// Empirical mean of `|A_i|^2` over all neurons.
    pub fn mean_sq_row_norm(&self) -> f64 {
        self.a.row_iter().map(|r| r.norm_squared()).sum::<f64>() / self.n_features() as f64
    }

    /// Feature vector `relu(A_i . x + B_i)`, `i = 1..N`.
    pub fn features(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::dim("features", self.dim(), x.len()));
        }
        Ok((0..self.n_features())
            .map(|i| {
                let z = self.a.row(i).iter().zip(x).map(|(a, x)| a * x).sum::<f64>() + self.b[i];
                relu(z)
            })
            .collect())
    }

    /// The `n x N` matrix with entry `(i, j) = relu(A_j . X_i + B_j)`.
    pub fn design_matrix(&self, points: &DMatrix<f64>) -> Result<FeatureMatrix> {
        if points.ncols() != self.dim() {
            return Err(Error::dim("design matrix", self.dim(), points.ncols()));
        }
        let n = points.nrows();
        let nf = self.n_features();
        let mut values = DMatrix::<f64>::zeros(n, nf);
        if n > 0 {
            values
                .as_mut_slice()
                .par_chunks_mut(n)
                .enumerate()
                .for_each(|(j, col)| {
                    col.fill(self.b[j]);
                    for k in 0..self.dim() {
                        let a = self.a[(j, k)];
                        for (c, x) in col.iter_mut().zip(points.column(k).iter()) {
                            *c += a * x;
                        }
                    }
                    col.iter_mut().for_each(|c| *c = relu(*c));
                });
        }
        Ok(FeatureMatrix { values })
    }
}

#[inline]
pub fn relu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        0.0
    }
}

/// `T_L(u) = max(min(u, L), -L)`.
#[inline]
pub fn truncate(u: f64, cap: f64) -> f64 {
    u.min(cap).max(-cap)
}

/// Design matrix of ReLU features, stored column-major (`n x N`).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: DMatrix<f64>,
}

impl FeatureMatrix {
    pub fn from_matrix(values: DMatrix<f64>) -> Self {
        FeatureMatrix { values }
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn point_count(&self) -> usize {
        self.values.nrows()
    }

    pub fn feature_count(&self) -> usize {
        self.values.ncols()
    }

    /// Matrix restricted to the first `n` features (nested networks).
    pub fn leading_features(&self, n: usize) -> FeatureMatrix {
        FeatureMatrix {
            values: self.values.columns(0, n.min(self.feature_count())).into_owned(),
        }
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.values
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomFeatureNet {
    hidden: HiddenWeights,
    w: DVector<f64>,
    cap: Option<f64>,
}

impl RandomFeatureNet {
    pub fn new(hidden: HiddenWeights, w: DVector<f64>, cap: Option<f64>) -> Result<Self> {
        if w.len() != hidden.n_features() {
            return Err(Error::dim("output weights", hidden.n_features(), w.len()));
        }
        if let Some(l) = cap {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::invalid("cap", format!("L must be positive, got {l}")));
            }
        }
        Ok(RandomFeatureNet { hidden, w, cap })
    }

    pub fn zeros(hidden: HiddenWeights) -> Self {
        let n = hidden.n_features();
        RandomFeatureNet {
            hidden,
            w: DVector::zeros(n),
            cap: None,
        }
    }

    pub fn hidden(&self) -> &HiddenWeights {
        &self.hidden
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.w
    }

    pub fn cap(&self) -> Option<f64> {
        self.cap
    }

    pub fn with_cap(mut self, cap: Option<f64>) -> Result<Self> {
        if let Some(l) = cap {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::invalid("cap", format!("L must be positive, got {l}")));
            }
        }
        self.cap = cap;
        Ok(self)
    }

    fn finish(&self, raw: f64) -> f64 {
        match self.cap {
            Some(l) => truncate(raw, l),
            None => raw,
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        let feats = self.hidden.features(x)?;
        let raw: f64 = feats.iter().zip(self.w.iter()).map(|(f, w)| f * w).sum();
        Ok(self.finish(raw))
    }

    /// Predictions at the rows of `points`.
    pub fn evaluate_batch(&self, points: &DMatrix<f64>) -> Result<Vec<f64>> {
        let design = self.hidden.design_matrix(points)?;
        Ok(self.predict_from_design(&design))
    }

    /// Predictions from a precomputed design matrix of this net's hidden layer.
    pub fn predict_from_design(&self, design: &FeatureMatrix) -> Vec<f64> {
        let raw = design.values() * &self.w;
        raw.iter().map(|&v| self.finish(v)).collect()
    }

    pub fn to_document(&self) -> ModelDocument {
        let h = &self.hidden;
        ModelDocument {
            spec: h.spec,
            seed: h.seed,
            n_features: h.n_features(),
            dim: h.dim(),
            a: h.a.transpose().as_slice().to_vec(),
            b: h.b.as_slice().to_vec(),
            w: self.w.as_slice().to_vec(),
            cap: self.cap,
        }
    }

    pub fn from_document(doc: &ModelDocument) -> Result<Self> {
        if doc.a.len() != doc.n_features * doc.dim {
            return Err(Error::dim("model A", doc.n_features * doc.dim, doc.a.len()));
        }
        let a = DMatrix::from_row_slice(doc.n_features, doc.dim, &doc.a);
        let b = DVector::from_column_slice(&doc.b);
        let hidden = HiddenWeights::from_parts(a, b, doc.spec, doc.seed)?;
        RandomFeatureNet::new(hidden, DVector::from_column_slice(&doc.w), doc.cap)
    }
}

/// Serialized form of a network: `{spec, seed, N, d, A (row-major), B, W, cap}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub spec: WeightDistributionSpec,
    pub seed: u64,
    #[serde(rename = "N")]
    pub n_features: usize,
    #[serde(rename = "d")]
    pub dim: usize,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    #[serde(rename = "B")]
    pub b: Vec<f64>,
    #[serde(rename = "W")]
    pub w: Vec<f64>,
    pub cap: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn explicit(a: &[f64], d: usize, b: &[f64]) -> HiddenWeights {
        HiddenWeights::from_parts(
            DMatrix::from_row_slice(b.len(), d, a),
            DVector::from_column_slice(b),
            WeightDistributionSpec::default(),
            0,
        )
        .unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(WeightDistributionSpec::new(1.0, 2.0).is_err());
        assert!(WeightDistributionSpec::new(0.5, 2.0).is_err());
        assert!(WeightDistributionSpec::new(5.0, 0.0).is_err());
        assert!(WeightDistributionSpec::new(5.0, -1.0).is_err());
        assert!(WeightDistributionSpec::new(1.5, 0.7).is_ok());
    }

    #[test]
    fn sample_shape_and_determinism() {
        let spec = WeightDistributionSpec::default();
        let h = HiddenWeights::sample(spec, 3, 2, 11).unwrap();
        assert_eq!(h.a().shape(), (3, 2));
        assert_eq!(h.b().len(), 3);
        assert_eq!(h, HiddenWeights::sample(spec, 3, 2, 11).unwrap());
        assert_ne!(h, HiddenWeights::sample(spec, 3, 2, 12).unwrap());
        assert!(HiddenWeights::sample(WeightDistributionSpec { nu: 1.0, b_dof: 2.0 }, 3, 2, 1).is_err());
    }

    #[test]
    fn larger_draw_extends_smaller() {
        let spec = WeightDistributionSpec::default();
        let small = HiddenWeights::sample(spec, 10, 4, 3).unwrap();
        let big = HiddenWeights::sample(spec, 40, 4, 3).unwrap();
        assert_eq!(big.prefix(10).unwrap(), small);
    }

    #[test]
    fn t_density_at_origin() {
        // Gamma(3) / (Gamma(2.5) sqrt(5 pi))
        let spec = WeightDistributionSpec::default();
        assert_relative_eq!(spec.pi_w(&[0.0]), 0.379_606_689_822_494_4, max_relative = 1e-12);
        assert_relative_eq!(spec.pi_b(0.0), 1.0 / (2.0 * 2f64.sqrt()), max_relative = 1e-12);
    }

    #[test]
    fn densities_integrate_to_one() {
        let spec = WeightDistributionSpec::default();
        let h = 1e-3;
        let n = (100.0 / h) as usize;
        let mut w_int = 0.0;
        for k in 0..=n {
            let x = -50.0 + k as f64 * h;
            let wgt = if k == 0 || k == n { 0.5 } else { 1.0 };
            w_int += wgt * spec.pi_w(&[x]);
        }
        assert!((w_int * h - 1.0).abs() < 1e-3, "{}", w_int * h);

        // t(2) has heavy tails; integrate the tail mass beyond 50 in closed form.
        let mut b_int = 0.0;
        for k in 0..=n {
            let u = -50.0 + k as f64 * h;
            let wgt = if k == 0 || k == n { 0.5 } else { 1.0 };
            b_int += wgt * spec.pi_b(u);
        }
        let tail = 1.0 - 50.0 / (2.0f64 + 2500.0).sqrt();
        assert!((b_int * h + tail - 1.0).abs() < 1e-3);
    }

    #[test]
    fn t2_tail_is_cubic() {
        let spec = WeightDistributionSpec::default();
        let vals: Vec<f64> = [10.0, 100.0, 1000.0]
            .iter()
            .map(|&u: &f64| u.powi(3) * spec.pi_b(u))
            .collect();
        for v in &vals {
            assert!(*v > 0.9 && *v < 1.0, "{v}");
        }
    }

    #[test]
    fn tail_polynomial_dominates() {
        for spec in [
            WeightDistributionSpec::default(),
            WeightDistributionSpec { nu: 3.0, b_dof: 0.5 },
            WeightDistributionSpec { nu: 3.0, b_dof: 7.3 },
        ] {
            for k in -400..=400 {
                let u = k as f64 * 0.25;
                assert!(spec.tail_polynomial(u) * spec.pi_b(u) >= 1.0 - 1e-12);
            }
        }
        assert_eq!(WeightDistributionSpec::default().tail_polynomial_degree(), 4);
    }

    #[test]
    fn large_dimension_density_is_finite() {
        let spec = WeightDistributionSpec::default();
        let x = vec![0.1; 400];
        let lp = spec.log_pi_w(&x);
        assert!(lp.is_finite());
        assert!(spec.pi_w(&x) >= 0.0);
    }

    #[test]
    fn feature_examples() {
        let zero = explicit(&[0.0, 0.0], 2, &[0.0]);
        assert_eq!(zero.features(&[3.0, -1.0]).unwrap(), vec![0.0]);
        assert_eq!(explicit(&[1.0], 1, &[0.0]).features(&[2.0]).unwrap(), vec![2.0]);
        assert_eq!(
            explicit(&[1.0, 1.0], 1, &[0.0, -1.0]).features(&[2.0]).unwrap(),
            vec![2.0, 1.0]
        );
        assert!(zero.features(&[1.0]).is_err());
        assert_eq!(relu(0.0), 0.0);
        assert_eq!(relu(-0.0).to_bits(), 0f64.to_bits());
    }

    #[test]
    fn evaluate_examples() {
        let h = explicit(&[1.0, 1.0], 1, &[0.0, -1.0]);
        let net = RandomFeatureNet::new(h.clone(), DVector::from_vec(vec![1.0, -1.0]), None).unwrap();
        assert_eq!(net.evaluate(&[2.0]).unwrap(), 1.0);
        let zero = RandomFeatureNet::zeros(h.clone());
        assert_eq!(zero.evaluate(&[5.0]).unwrap(), 0.0);

        let one = explicit(&[1.0], 1, &[0.0]);
        let capped = RandomFeatureNet::new(one.clone(), DVector::from_vec(vec![1.0]), Some(1.0)).unwrap();
        assert_eq!(capped.evaluate(&[2.0]).unwrap(), 1.0);
        let neg = RandomFeatureNet::new(one, DVector::from_vec(vec![-1.5]), Some(1.0)).unwrap();
        assert_eq!(neg.evaluate(&[2.0]).unwrap(), -1.0);
        assert!(RandomFeatureNet::new(h, DVector::zeros(3), None).is_err());
    }

    #[test]
    fn design_matrix_matches_loop() {
        let spec = WeightDistributionSpec::default();
        let h = HiddenWeights::sample(spec, 3, 2, 5).unwrap();
        let empty = h.design_matrix(&DMatrix::zeros(0, 2)).unwrap();
        assert_eq!((empty.point_count(), empty.feature_count()), (0, 3));

        let mut rng = StreamKey::new(99).rng();
        let pts = DMatrix::from_fn(5, 2, |_, _| rng.random_range(-2.0..2.0));
        let dm = h.design_matrix(&pts).unwrap();
        for i in 0..5 {
            let row: Vec<f64> = pts.row(i).iter().copied().collect();
            let f = h.features(&row).unwrap();
            for j in 0..3 {
                assert_relative_eq!(dm.values()[(i, j)], f[j], epsilon = 1e-14);
                assert!(dm.values()[(i, j)] >= 0.0);
            }
        }
        assert!(h.design_matrix(&DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn document_round_trip_is_bit_exact() {
        let h = HiddenWeights::sample(WeightDistributionSpec::default(), 7, 3, 8).unwrap();
        let w = DVector::from_fn(7, |i, _| (i as f64).sin() / 3.0);
        let net = RandomFeatureNet::new(h, w, Some(2.5)).unwrap();
        let json = serde_json::to_string(&net.to_document()).unwrap();
        let back: ModelDocument = serde_json::from_str(&json).unwrap();
        let net2 = RandomFeatureNet::from_document(&back).unwrap();
        assert_eq!(net, net2);
        let x = [0.3, -0.7, 0.11];
        assert_eq!(
            net.evaluate(&x).unwrap().to_bits(),
            net2.evaluate(&x).unwrap().to_bits()
        );
    }

    proptest! {
        #[test]
        fn pi_w_is_symmetric(x in proptest::collection::vec(-20.0f64..20.0, 1..6)) {
            let spec = WeightDistributionSpec::default();
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            prop_assert_eq!(spec.pi_w(&x), spec.pi_w(&neg));
            prop_assert!(spec.pi_w(&x) > 0.0);
        }

        #[test]
        fn pi_b_is_symmetric(u in -1e4f64..1e4, dof in 0.1f64..30.0) {
            let spec = WeightDistributionSpec { nu: 5.0, b_dof: dof };
            prop_assert_eq!(spec.pi_b(u), spec.pi_b(-u));
            prop_assert!(spec.pi_b(u) > 0.0);
        }

        #[test]
        fn relu_features_are_positively_homogeneous(c in 0.01f64..50.0, seed in 0u64..1000) {
            let h = HiddenWeights::sample(WeightDistributionSpec::default(), 6, 3, seed).unwrap();
            let scaled = HiddenWeights::from_parts(h.a() * c, h.b() * c, h.spec(), seed).unwrap();
            let x = [0.4, -0.2, 0.9];
            let f = h.features(&x).unwrap();
            let g = scaled.features(&x).unwrap();
            for (a, b) in f.iter().zip(&g) {
                prop_assert!((a * c - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }

        #[test]
        fn cap_is_idempotent(u in -1e6f64..1e6, l in 1e-3f64..1e3) {
            let t = truncate(u, l);
            prop_assert_eq!(truncate(t, l), t);
            prop_assert!(t.abs() <= l);
            if u.abs() <= l { prop_assert_eq!(t, u); }
        }
    }
}
