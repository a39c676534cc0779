//! Training-free output weights from the Fourier representation of a smoothed
//! payoff `H(x) = E[Phi(x + V)]`.
//!
//! With `G(xi) = (2 pi)^{-d/2} Phi_hat(xi) E[exp(i xi.V)]` and hidden weights
//! `(A_i, B_i)` drawn from `pi_w x pi_b`, the weights
//! `W_i = alpha(A_i, B_i) / (N pi_w(A_i) pi_b(B_i))` give an unbiased random
//! feature estimate of `H` on the box `[-M, M]^d`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::levy::{check_symmetric, LevyTriplet};
use crate::linalg::min_eigenvalue;
use crate::payoff::Payoff;
use crate::rfn::{HiddenWeights, RandomFeatureNet, WeightDistributionSpec};

const SERIES_CUTOFF: f64 = 1e-4;
const QUAD_TOL: f64 = 1e-13;
/// Gaussian windows extend this many standard deviations either side.
const GAUSS_WINDOW: f64 = 12.0;

fn inv_sqrt_2pi() -> f64 {
    (2.0 * PI).sqrt().recip()
}

/// `2 (1 - cos t) / t^2`, continuous at 0.
fn tent_kernel(t: f64) -> f64 {
    if t.abs() < SERIES_CUTOFF {
        let t2 = t * t;
        1.0 - t2 / 12.0 + t2 * t2 / 360.0
    } else {
        let h = 0.5 * t;
        (h.sin() / h).powi(2)
    }
}

/// `sin(t) / t`, continuous at 0.
fn sinc(t: f64) -> f64 {
    if t.abs() < SERIES_CUTOFF {
        let t2 = t * t;
        1.0 - t2 / 6.0 + t2 * t2 / 120.0
    } else {
        t.sin() / t
    }
}

/// Fourier transform of `max(1 - |x - center| / width, 0)`.
pub fn phi_hat_tent(center: f64, width: f64, xi: f64) -> Complex64 {
    let phase = Complex64::from_polar(1.0, -center * xi);
    phase * (inv_sqrt_2pi() * width * tent_kernel(width * xi))
}

/// Fourier transform of `1_{[lower, upper]}`.
pub fn phi_hat_indicator(lower: f64, upper: f64, xi: f64) -> Complex64 {
    let mid = 0.5 * (lower + upper);
    let half = 0.5 * (upper - lower);
    Complex64::from_polar(1.0, -mid * xi) * (inv_sqrt_2pi() * 2.0 * half * sinc(half * xi))
}

/// `(2 pi)^{-1/2} int exp(-i x xi) f(x) dx` over `[a, b]` for a one-dimensional
/// profile smooth between `cuts`.
fn fourier_quadrature<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cuts: &[f64], xi: f64) -> Complex64 {
    let mut nodes = vec![a];
    nodes.extend(cuts.iter().copied().filter(|c| *c > a && *c < b));
    nodes.push(b);
    let (mut re, mut im) = (0.0, 0.0);
    for w in nodes.windows(2) {
        let len = w[1] - w[0];
        let pieces = ((xi.abs() * len / PI).ceil() as usize).max(1);
        let h = len / pieces as f64;
        for k in 0..pieces {
            let lo = w[0] + k as f64 * h;
            let hi = if k + 1 == pieces { w[1] } else { lo + h };
            re += quadrature::integrate(|x| f(x) * (x * xi).cos(), lo, hi, QUAD_TOL).integral;
            im -= quadrature::integrate(|x| f(x) * (x * xi).sin(), lo, hi, QUAD_TOL).integral;
        }
    }
    Complex64::new(re, im) * inv_sqrt_2pi()
}

/// `int |Phi|` for a compactly supported one-dimensional payoff.
pub fn l1_norm_1d(payoff: &Payoff) -> Result<f64> {
    let (a, b) = payoff
        .support_1d()
        .ok_or_else(|| Error::invalid("payoff", "no bounded one-dimensional support"))?;
    let mut nodes = vec![a];
    nodes.extend(payoff.breakpoints_1d().into_iter().filter(|c| *c > a && *c < b));
    nodes.push(b);
    Ok(nodes
        .windows(2)
        .map(|w| quadrature::integrate(|x| payoff.eval_log_unchecked(&[x]).abs(), w[0], w[1], QUAD_TOL).integral)
        .sum())
}

/// `E[exp(i xi.V)]` for centered Gaussian `V` with covariance `cov`.
pub fn char_fn_gaussian(cov: &DMatrix<f64>, xi: &[f64]) -> Result<Complex64> {
    check_psd(cov)?;
    if xi.len() != cov.nrows() {
        return Err(Error::dim("characteristic function", cov.nrows(), xi.len()));
    }
    Ok(Complex64::new((-0.5 * quad_form(cov, xi)).exp(), 0.0))
}

fn check_psd(cov: &DMatrix<f64>) -> Result<()> {
    check_symmetric(cov)?;
    let scale = cov.amax();
    if min_eigenvalue(cov) < -1e-12 * scale {
        return Err(Error::invalid("covariance", "matrix is not positive semidefinite"));
    }
    Ok(())
}

fn quad_form(m: &DMatrix<f64>, v: &[f64]) -> f64 {
    let x = DVector::from_column_slice(v);
    x.dot(&(m * &x))
}

/// Law of the smoothing vector `V`.
#[derive(Debug, Clone, PartialEq)]
pub enum Smoothing {
    /// `V = 0`.
    Degenerate,
    Gaussian { mean: Vec<f64>, cov: DMatrix<f64> },
    /// `V = L_T` for a Lévy process with the given triplet.
    LevyIncrement { triplet: LevyTriplet, horizon: f64 },
}

impl Smoothing {
    /// Centered Gaussian with covariance `2 C I`, so that
    /// `|E[exp(i xi.V)]| = exp(-C |xi|^2)`.
    pub fn isotropic(c: f64, dim: usize) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::invalid("smoothing", format!("C must be positive, got {c}")));
        }
        Ok(Smoothing::Gaussian {
            mean: vec![0.0; dim],
            cov: DMatrix::identity(dim, dim) * (2.0 * c),
        })
    }

    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Smoothing::Degenerate => Ok(()),
            Smoothing::Gaussian { mean, cov } => {
                if cov.nrows() != dim || mean.len() != dim {
                    return Err(Error::dim("smoothing", dim, cov.nrows().max(mean.len())));
                }
                if mean.iter().any(|m| !m.is_finite()) {
                    return Err(Error::invalid("smoothing", "non-finite mean"));
                }
                check_psd(cov)
            }
            Smoothing::LevyIncrement { triplet, horizon } => {
                if triplet.dim() != dim {
                    return Err(Error::dim("smoothing", dim, triplet.dim()));
                }
                if !(horizon.is_finite() && *horizon >= 0.0) {
                    return Err(Error::invalid("smoothing", format!("horizon must be >= 0, got {horizon}")));
                }
                Ok(())
            }
        }
    }

    pub fn characteristic_function(&self, xi: &[f64]) -> Complex64 {
        match self {
            Smoothing::Degenerate => Complex64::new(1.0, 0.0),
            Smoothing::Gaussian { mean, cov } => {
                let phase: f64 = mean.iter().zip(xi).map(|(m, x)| m * x).sum();
                Complex64::from_polar((-0.5 * quad_form(cov, xi)).exp(), phase)
            }
            Smoothing::LevyIncrement { triplet, horizon } => triplet
                .characteristic_function(xi, *horizon)
                .expect("dimension checked at construction"),
        }
    }

    /// Largest `C` with `|E[exp(i xi.V)]| <= exp(-C |xi|^2)` implied by the
    /// Gaussian part.
    pub fn decay_constant(&self) -> f64 {
        match self {
            Smoothing::Degenerate => 0.0,
            Smoothing::Gaussian { cov, .. } => 0.5 * min_eigenvalue(cov).max(0.0),
            Smoothing::LevyIncrement { triplet, horizon } => {
                horizon * 0.5 * min_eigenvalue(triplet.sigma()).max(0.0)
            }
        }
    }
}

/// Fourier data of `H(x) = E[Phi(x + V)]` on the box `[-M, M]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierProfile {
    payoff: Option<Payoff>,
    smoothing: Smoothing,
    box_radius: f64,
    dim: usize,
}

impl FourierProfile {
    pub fn new(payoff: Payoff, smoothing: Smoothing, box_radius: f64, dim: usize) -> Result<Self> {
        payoff.validate()?;
        if let Some(pd) = payoff.dim() {
            if pd != dim {
                return Err(Error::dim("payoff", dim, pd));
            }
        }
        let profile = FourierProfile {
            payoff: Some(payoff),
            smoothing,
            box_radius,
            dim,
        };
        profile.validate()?;
        // Fails early for payoffs without a usable transform.
        profile.phi_hat(&vec![0.0; dim])?;
        Ok(profile)
    }

    /// Profile with `G = 0`; its target is the zero function.
    pub fn zero(dim: usize, box_radius: f64) -> Result<Self> {
        let profile = FourierProfile {
            payoff: None,
            smoothing: Smoothing::Degenerate,
            box_radius,
            dim,
        };
        profile.validate()?;
        Ok(profile)
    }

    /// Unit tent at 0 in one dimension, centered Gaussian `V` with variance `2C`.
    pub fn tent_gaussian(c: f64, box_radius: f64) -> Result<Self> {
        FourierProfile::new(Payoff::unit_tent(), Smoothing::isotropic(c, 1)?, box_radius, 1)
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::invalid("profile", "dimension must be at least 1"));
        }
        if !(self.box_radius.is_finite() && self.box_radius > 0.0) {
            return Err(Error::invalid("profile", format!("M must be positive, got {}", self.box_radius)));
        }
        self.smoothing.validate(self.dim)
    }

    pub fn payoff(&self) -> Option<&Payoff> {
        self.payoff.as_ref()
    }

    pub fn smoothing(&self) -> &Smoothing {
        &self.smoothing
    }

    pub fn box_radius(&self) -> f64 {
        self.box_radius
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check_xi(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.dim {
            return Err(Error::dim("frequency", self.dim, xi.len()));
        }
        Ok(())
    }

    /// `Phi_hat(xi) = (2 pi)^{-d/2} int exp(-i x.xi) Phi(x) dx`.
    pub fn phi_hat(&self, xi: &[f64]) -> Result<Complex64> {
        self.check_xi(xi)?;
        let Some(payoff) = &self.payoff else {
            return Ok(Complex64::new(0.0, 0.0));
        };
        match payoff {
            Payoff::Tent { center, width } => Ok(center
                .iter()
                .zip(xi)
                .map(|(c, x)| phi_hat_tent(*c, *width, *x))
                .product()),
            Payoff::Indicator { lower, upper } => Ok(lower
                .iter()
                .zip(upper)
                .zip(xi)
                .map(|((a, b), x)| phi_hat_indicator(*a, *b, *x))
                .product()),
            p if self.dim == 1 => {
                let (a, b) = p.support_1d().ok_or_else(|| {
                    Error::invalid("payoff", "not integrable; truncate it to a bounded support first")
                })?;
                Ok(fourier_quadrature(|x| p.eval_log_unchecked(&[x]), a, b, &p.breakpoints_1d(), xi[0]))
            }
            _ => Err(Error::invalid(
                "payoff",
                "Fourier transform available only for tents, indicators and one-dimensional profiles",
            )),
        }
    }

    /// `G(xi) = (2 pi)^{-d/2} Phi_hat(xi) E[exp(i xi.V)]`.
    pub fn g(&self, xi: &[f64]) -> Result<Complex64> {
        let ph = self.phi_hat(xi)?;
        if ph == Complex64::new(0.0, 0.0) {
            return Ok(ph);
        }
        let norm = (2.0 * PI).powf(-0.5 * self.dim as f64);
        Ok(ph * self.smoothing.characteristic_function(xi) * norm)
    }

    fn g_pair(&self, xi: &[f64]) -> Result<(Complex64, Complex64)> {
        let neg: Vec<f64> = xi.iter().map(|v| -v).collect();
        Ok((self.g(xi)?, self.g(&neg)?))
    }

    fn ramp_floor(&self, xi: &[f64]) -> f64 {
        -self.box_radius * xi.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// Importance-sampling numerator `alpha(xi, u)`.
    pub fn alpha(&self, xi: &[f64], u: f64) -> Result<f64> {
        let (gp, gm) = self.g_pair(xi)?;
        Ok(alpha_from(gp, gm, self.ramp_floor(xi), u))
    }

    /// Pointwise bound `N |W_i|` can never exceed at `(xi, u)`.
    pub fn envelope(&self, spec: &WeightDistributionSpec, xi: &[f64], u: f64) -> Result<f64> {
        let (gp, gm) = self.g_pair(xi)?;
        let floor = self.ramp_floor(xi);
        let mut mass = 0.0;
        if floor < u && u <= 0.0 {
            mass += 1.0;
        }
        if (-1.0..=1.0).contains(&u) {
            mass += 4.0;
        }
        Ok(mass * (gp.norm() + gm.norm()) / (spec.pi_w(xi) * spec.pi_b(u)))
    }
}

fn alpha_from(gp: Complex64, gm: Complex64, floor: f64, u: f64) -> f64 {
    let tilde = |g: Complex64| 2.0 * g.re - g.im;
    let mut a = 0.0;
    if floor < u && u <= 0.0 {
        let e = Complex64::from_polar(1.0, -u);
        a -= (e * gp + e.conj() * gm).re;
    }
    if (0.0..=1.0).contains(&u) {
        a += tilde(gp);
    }
    if (-1.0..=0.0).contains(&u) {
        a -= tilde(gm);
    }
    a
}

/// `alpha(xi, u) / (pi_w(xi) pi_b(u))`.
pub fn importance_weight(profile: &FourierProfile, spec: &WeightDistributionSpec, xi: &[f64], u: f64) -> Result<f64> {
    let a = profile.alpha(xi, u)?;
    if a == 0.0 {
        return Ok(0.0);
    }
    Ok(a / (spec.pi_w(xi) * spec.pi_b(u)))
}

/// `W_i = alpha(A_i, B_i) / (N pi_w(A_i) pi_b(B_i))`.
pub fn construct_oracle_weights(hidden: &HiddenWeights, profile: &FourierProfile) -> Result<DVector<f64>> {
    if hidden.dim() != profile.dim() {
        return Err(Error::dim("oracle weights", profile.dim(), hidden.dim()));
    }
    let spec = hidden.spec();
    let n = hidden.n_features();
    let w: Result<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| Ok(importance_weight(profile, &spec, &hidden.row(i), hidden.b()[i])? / n as f64))
        .collect();
    Ok(DVector::from_vec(w?))
}

/// Network carrying the oracle weights.
pub fn oracle_net(hidden: HiddenWeights, profile: &FourierProfile) -> Result<RandomFeatureNet> {
    let w = construct_oracle_weights(&hidden, profile)?;
    RandomFeatureNet::new(hidden, w, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Method {
    Zero,
    Identity,
    ClosedForm,
    Quadrature,
}

/// `H(x) = E[Phi(x + V)]` evaluated by closed form when one exists and by
/// adaptive quadrature otherwise (`d <= 2`, Gaussian or degenerate `V`).
#[derive(Debug, Clone)]
pub struct ReferenceFunction {
    payoff: Option<Payoff>,
    smoothing: Smoothing,
    dim: usize,
    method: Method,
    /// Cholesky-like factor of a two-dimensional covariance.
    chol: Option<DMatrix<f64>>,
}

impl ReferenceFunction {
    pub fn from_profile(profile: &FourierProfile) -> Result<Self> {
        match &profile.payoff {
            None => Ok(ReferenceFunction {
                payoff: None,
                smoothing: Smoothing::Degenerate,
                dim: profile.dim,
                method: Method::Zero,
                chol: None,
            }),
            Some(p) => ReferenceFunction::new(p.clone(), profile.smoothing.clone(), profile.dim),
        }
    }

    pub fn new(payoff: Payoff, smoothing: Smoothing, dim: usize) -> Result<Self> {
        smoothing.validate(dim)?;
        payoff.validate()?;
        let method = match (&payoff, &smoothing) {
            (_, Smoothing::Degenerate) => Method::Identity,
            (Payoff::Tent { .. }, Smoothing::Gaussian { cov, .. }) if is_diagonal(cov) && cov.diagonal().min() > 0.0 => {
                Method::ClosedForm
            }
            (_, Smoothing::Gaussian { .. }) if dim <= 2 => Method::Quadrature,
            (_, Smoothing::Gaussian { .. }) => {
                return Err(Error::invalid("reference convolution", format!("quadrature supports d <= 2, got {dim}")))
            }
            (_, Smoothing::LevyIncrement { .. }) => {
                return Err(Error::invalid("reference convolution", "needs Gaussian or degenerate smoothing"))
            }
        };
        let mut chol = None;
        if method == Method::Quadrature {
            if let Smoothing::Gaussian { cov, .. } = &smoothing {
                let c = cov.clone().cholesky().ok_or_else(|| {
                    Error::invalid("reference convolution", "quadrature needs a positive definite covariance")
                })?;
                chol = Some(c.l());
            }
            if dim == 2 && !matches!(payoff, Payoff::Tent { .. } | Payoff::Indicator { .. } | Payoff::MaxCall { .. }) {
                return Err(Error::invalid("reference convolution", "two-dimensional quadrature supports tents, indicators and max-calls"));
            }
        }
        Ok(ReferenceFunction {
            payoff: Some(payoff),
            smoothing,
            dim,
            method,
            chol,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_closed_form(&self) -> bool {
        self.method == Method::ClosedForm
    }

    /// Force quadrature even when a closed form is available.
    pub fn with_quadrature(mut self) -> Result<Self> {
        if self.method != Method::ClosedForm {
            return Ok(self);
        }
        if self.dim > 2 {
            return Err(Error::invalid("reference convolution", "quadrature supports d <= 2"));
        }
        if let Smoothing::Gaussian { cov, .. } = &self.smoothing {
            self.chol = Some(cov.clone().cholesky().expect("diagonal positive").l());
        }
        self.method = Method::Quadrature;
        Ok(self)
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::dim("reference function", self.dim, x.len()));
        }
        let Some(payoff) = &self.payoff else {
            return Ok(0.0);
        };
        Ok(match self.method {
            Method::Zero => 0.0,
            Method::Identity => payoff.eval_log_unchecked(x),
            Method::ClosedForm => self.closed_form(payoff, x),
            Method::Quadrature if self.dim == 1 => self.quadrature_1d(payoff, x[0]),
            Method::Quadrature => self.quadrature_2d(payoff, x),
        })
    }

    fn gaussian(&self) -> (&[f64], &DMatrix<f64>) {
        match &self.smoothing {
            Smoothing::Gaussian { mean, cov } => (mean, cov),
            _ => unreachable!("closed form and quadrature require Gaussian smoothing"),
        }
    }

    fn closed_form(&self, payoff: &Payoff, x: &[f64]) -> f64 {
        let (mean, cov) = self.gaussian();
        let Payoff::Tent { center, width } = payoff else {
            unreachable!("closed form is registered for tents only")
        };
        (0..self.dim)
            .map(|j| tent_gaussian_1d(x[j] + mean[j] - center[j], *width, cov[(j, j)].sqrt()))
            .product()
    }

    fn quadrature_1d(&self, payoff: &Payoff, x: f64) -> f64 {
        let (mean, cov) = self.gaussian();
        let s = cov[(0, 0)].sqrt();
        let m = x + mean[0];
        let (mut a, mut b) = (m - GAUSS_WINDOW * s, m + GAUSS_WINDOW * s);
        if let Some((lo, hi)) = payoff.support_1d() {
            a = a.max(lo);
            b = b.min(hi);
        }
        if a >= b {
            return 0.0;
        }
        let density = |y: f64| {
            let z = (y - m) / s;
            (-0.5 * z * z).exp() * inv_sqrt_2pi() / s
        };
        integrate_split(|y| payoff.eval_log_unchecked(&[y]) * density(y), a, b, &payoff.breakpoints_1d())
    }

    fn quadrature_2d(&self, payoff: &Payoff, x: &[f64]) -> f64 {
        let (mean, _) = self.gaussian();
        let l = self.chol.as_ref().expect("factor computed at construction");
        // V = mean + L Z: V_1 = mean_1 + l11 Z_1, V_2 = mean_2 + l21 Z_1 + l22 Z_2.
        let (l11, l21, l22) = (l[(0, 0)], l[(1, 0)], l[(1, 1)]);
        let m1 = x[0] + mean[0];
        let m2 = x[1] + mean[1];
        let (cuts1, cuts2) = axis_breakpoints(payoff);
        let phi = |z: f64| (-0.5 * z * z).exp() * inv_sqrt_2pi();
        let outer = |y1: f64| {
            let z1 = (y1 - m1) / l11;
            let c2 = m2 + l21 * z1;
            let inner = |y2: f64| payoff.eval_log_unchecked(&[y1, y2]) * phi((y2 - c2) / l22) / l22;
            let w = GAUSS_WINDOW * l22;
            integrate_split(inner, c2 - w, c2 + w, &cuts2) * phi(z1) / l11
        };
        let w = GAUSS_WINDOW * l11;
        integrate_split(outer, m1 - w, m1 + w, &cuts1)
    }
}

fn is_diagonal(m: &DMatrix<f64>) -> bool {
    (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] == 0.0))
}

fn axis_breakpoints(payoff: &Payoff) -> (Vec<f64>, Vec<f64>) {
    match payoff {
        Payoff::Tent { center, width } => {
            let f = |c: f64| vec![c - width, c, c + width];
            (f(center[0]), f(center[1]))
        }
        Payoff::Indicator { lower, upper } => (vec![lower[0], upper[0]], vec![lower[1], upper[1]]),
        _ => (Vec::new(), Vec::new()),
    }
}

fn integrate_split<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cuts: &[f64]) -> f64 {
    let mut nodes = vec![a];
    nodes.extend(cuts.iter().copied().filter(|c| *c > a && *c < b));
    nodes.push(b);
    nodes
        .windows(2)
        .map(|w| quadrature::integrate(&f, w[0], w[1], QUAD_TOL).integral)
        .sum()
}

/// `E[tent(m + s Z)]` for the unit-height tent of half-width `w` at 0.
fn tent_gaussian_1d(m: f64, w: f64, s: f64) -> f64 {
    let ramp = |t: f64| {
        let z = t / s;
        t * std_normal_cdf(z) + s * (-0.5 * z * z).exp() * inv_sqrt_2pi()
    };
    (ramp(m + w) - 2.0 * ramp(m) + ramp(m - w)) / w
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}

/// `H(x)` at a single point; see [`ReferenceFunction`].
pub fn reference_convolution(payoff: &Payoff, smoothing: &Smoothing, x: &[f64]) -> Result<f64> {
    ReferenceFunction::new(payoff.clone(), smoothing.clone(), x.len())?.evaluate(x)
}

/// Regular grid on `[-M, M]^d` with `k` points per axis and the reference
/// values on it, reusable across many networks.
#[derive(Debug, Clone)]
pub struct ReferenceGrid {
    points: DMatrix<f64>,
    values: Vec<f64>,
}

impl ReferenceGrid {
    pub fn new(reference: &ReferenceFunction, box_radius: f64, per_axis: usize) -> Result<Self> {
        let points = regular_grid(reference.dim(), box_radius, per_axis)?;
        let values: Result<Vec<f64>> = (0..points.nrows())
            .into_par_iter()
            .map(|i| reference.evaluate(&points.row(i).iter().copied().collect::<Vec<_>>()))
            .collect();
        Ok(ReferenceGrid { points, values: values? })
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `max_x |net(x) - H(x)|` over the grid, a lower bound on the true sup.
    pub fn sup_error(&self, net: &RandomFeatureNet) -> Result<f64> {
        let pred = net.evaluate_batch(&self.points)?;
        Ok(pred
            .iter()
            .zip(&self.values)
            .map(|(p, h)| (p - h).abs())
            .fold(0.0, f64::max))
    }
}

/// Points of `[-M, M]^d` with `k` equally spaced values per axis, one per row.
pub fn regular_grid(dim: usize, box_radius: f64, per_axis: usize) -> Result<DMatrix<f64>> {
    if per_axis == 0 {
        return Err(Error::invalid("grid", "need at least one point per axis"));
    }
    if dim == 0 || dim > 3 {
        return Err(Error::invalid("grid", format!("grids support 1 <= d <= 3, got {dim}")));
    }
    let axis: Vec<f64> = if per_axis == 1 {
        vec![0.0]
    } else {
        (0..per_axis)
            .map(|k| -box_radius + 2.0 * box_radius * k as f64 / (per_axis - 1) as f64)
            .collect()
    };
    let total = per_axis.pow(dim as u32);
    Ok(DMatrix::from_fn(total, dim, |i, j| {
        let idx = (i / per_axis.pow((dim - 1 - j) as u32)) % per_axis;
        axis[idx]
    }))
}

/// One-off sup-grid error; see [`ReferenceGrid`] for repeated use.
pub fn sup_error_on_grid(
    net: &RandomFeatureNet,
    reference: &ReferenceFunction,
    box_radius: f64,
    per_axis: usize,
) -> Result<f64> {
    ReferenceGrid::new(reference, box_radius, per_axis)?.sup_error(net)
}
