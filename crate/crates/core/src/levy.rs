//! Exponential Lévy models with a finite, atomic jump measure.
//!
//! A model is fixed by its characteristic triplet `(Sigma, gamma, nu_L)` where
//! `nu_L = intensity * sum_k p_k delta_{y_k}`. The characteristic exponent is
//!
//! ```text
//! eta(xi) = i xi.gamma - xi.Sigma.xi / 2
//!         + intensity * sum_k p_k (exp(i xi.y_k) - 1 - i xi.y_k 1{|y_k| <= 1})
//! ```
//!
//! and `E[exp(i xi.L_T)] = exp(T eta(xi))`. Prices are `E[phi(s exp(L_T))]`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, LabelKind};
use crate::error::{Error, Result};
use crate::linalg::min_eigenvalue;
use crate::payoff::Payoff;
use crate::rng::StreamKey;

/// Paths per independent substream in Monte Carlo pricing.
pub const PATH_BLOCK: usize = 4096;

const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpAtom {
    pub probability: f64,
    pub jump: Vec<f64>,
}

/// Compound Poisson jumps: rate `intensity`, sizes drawn from `atoms`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompoundPoissonSpec {
    pub intensity: f64,
    pub atoms: Vec<JumpAtom>,
    /// Declared bound `R > 1` on the jump sizes.
    pub radius: f64,
}

impl CompoundPoissonSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |r: String| Err(Error::invalid("jump measure", r));
        if !(self.intensity.is_finite() && self.intensity >= 0.0) {
            return bad(format!("intensity must be >= 0, got {}", self.intensity));
        }
        if !(self.radius.is_finite() && self.radius > 1.0) {
            return bad(format!("radius must exceed 1, got {}", self.radius));
        }
        if self.atoms.is_empty() {
            return bad("at least one atom is required".into());
        }
        let mut total = 0.0;
        for a in &self.atoms {
            if a.jump.len() != dim {
                return Err(Error::dim("jump atom", dim, a.jump.len()));
            }
            if !(a.probability.is_finite() && a.probability >= 0.0) {
                return bad(format!("atom probability {} is not in [0, 1]", a.probability));
            }
            if norm(&a.jump) > self.radius {
                return bad(format!("jump {:?} lies outside radius {}", a.jump, self.radius));
            }
            total += a.probability;
        }
        if (total - 1.0).abs() > 1e-12 {
            return bad(format!("atom probabilities sum to {total}, not 1"));
        }
        Ok(())
    }

    /// `intensity * sum_k p_k y_k 1{|y_k| <= 1}`: drift removed by the
    /// small-jump compensator.
    fn compensator(&self, dim: usize) -> Vec<f64> {
        let mut c = vec![0.0; dim];
        for a in &self.atoms {
            if norm(&a.jump) <= 1.0 {
                for (ci, yi) in c.iter_mut().zip(&a.jump) {
                    *ci += self.intensity * a.probability * yi;
                }
            }
        }
        c
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `Sigma` with `sigma^2` on the diagonal and `rho sigma^2` off it.
pub fn equal_correlation(sigma: f64, rho: f64, dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            sigma * sigma
        } else {
            rho * sigma * sigma
        }
    })
}

pub fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::invalid("covariance", format!("{}x{} is not square", m.nrows(), m.ncols())));
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    for i in 0..m.nrows() {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::invalid("covariance", "matrix is not symmetric"));
            }
        }
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("covariance", "non-finite entry"));
    }
    Ok(())
}

/// Square root `L` with `L L^T = m`: Cholesky, falling back to the symmetric
/// eigendecomposition when a pivot drops below `1e-10 trace(m) / d`.
pub fn covariance_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_symmetric(m)?;
    let d = m.nrows();
    let norm2 = m.clone().symmetric_eigenvalues().amax();
    if min_eigenvalue(m) < -1e-12 * norm2 {
        return Err(Error::invalid("covariance", "matrix is not positive semidefinite"));
    }
    let tol = 1e-10 * m.trace() / d.max(1) as f64;
    let mut l = DMatrix::<f64>::zeros(d, d);
    let mut ok = true;
    'outer: for j in 0..d {
        let mut diag = m[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if diag <= tol {
            ok = false;
            break 'outer;
        }
        let piv = diag.sqrt();
        l[(j, j)] = piv;
        for i in (j + 1)..d {
            let mut v = m[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / piv;
        }
    }
    if ok {
        return Ok(l);
    }
    let eig = m.clone().symmetric_eigen();
    let mut q = eig.eigenvectors;
    for (k, lam) in eig.eigenvalues.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        q.column_mut(k).scale_mut(s);
    }
    Ok(q)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevyTriplet {
    sigma: DMatrix<f64>,
    gamma: Vec<f64>,
    jumps: Option<CompoundPoissonSpec>,
    sigma_sqrt: DMatrix<f64>,
}

impl LevyTriplet {
    pub fn new(sigma: DMatrix<f64>, gamma: Vec<f64>, jumps: Option<CompoundPoissonSpec>) -> Result<Self> {
        let d = sigma.nrows();
        if d == 0 {
            return Err(Error::Empty("covariance"));
        }
        if gamma.len() != d {
            return Err(Error::dim("drift", d, gamma.len()));
        }
        if gamma.iter().any(|g| !g.is_finite()) {
            return Err(Error::invalid("drift", "non-finite entry"));
        }
        if let Some(j) = &jumps {
            j.validate(d)?;
        }
        let sigma_sqrt = covariance_sqrt(&sigma)?;
        Ok(LevyTriplet {
            sigma,
            gamma,
            jumps,
            sigma_sqrt,
        })
    }

    /// Triplet whose drift makes `exp(L_t)` a martingale in every coordinate.
    pub fn risk_neutral(sigma: DMatrix<f64>, jumps: Option<CompoundPoissonSpec>) -> Result<Self> {
        let d = sigma.nrows();
        if let Some(j) = &jumps {
            j.validate(d)?;
        }
        let gamma = (0..d)
            .map(|i| {
                let mut g = -0.5 * sigma[(i, i)];
                if let Some(j) = &jumps {
                    for a in &j.atoms {
                        let y = a.jump[i];
                        let small = if norm(&a.jump) <= 1.0 { y } else { 0.0 };
                        g -= j.intensity * a.probability * (y.exp() - 1.0 - small);
                    }
                }
                g
            })
            .collect();
        LevyTriplet::new(sigma, gamma, jumps)
    }

    /// Pure Brownian triplet with risk-neutral drift and equal correlations.
    pub fn black_scholes_equal_correlation(sigma: f64, rho: f64, dim: usize) -> Result<Self> {
        LevyTriplet::risk_neutral(equal_correlation(sigma, rho, dim), None)
    }

    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn jumps(&self) -> Option<&CompoundPoissonSpec> {
        self.jumps.as_ref()
    }

    /// `gamma_i + Sigma_ii / 2 + int (e^{y_i} - 1 - y_i 1{|y| <= 1}) nu_L(dy)`;
    /// zero exactly when `exp(L)` is a martingale.
    pub fn shifted_drift(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                let mut g = self.gamma[i] + 0.5 * self.sigma[(i, i)];
                if let Some(j) = &self.jumps {
                    for a in &j.atoms {
                        let y = a.jump[i];
                        let small = if norm(&a.jump) <= 1.0 { y } else { 0.0 };
                        g += j.intensity * a.probability * (y.exp() - 1.0 - small);
                    }
                }
                g
            })
            .collect()
    }

    /// Characteristic exponent `eta(xi)`.
    pub fn levy_symbol(&self, xi: &[f64]) -> Result<Complex64> {
        if xi.len() != self.dim() {
            return Err(Error::dim("levy symbol", self.dim(), xi.len()));
        }
        let xv = DVector::from_column_slice(xi);
        let quad = xv.dot(&(&self.sigma * &xv));
        let mut eta = Complex64::new(-0.5 * quad, dot(xi, &self.gamma));
        if let Some(j) = &self.jumps {
            for a in &j.atoms {
                let p = dot(xi, &a.jump);
                let small = if norm(&a.jump) <= 1.0 { p } else { 0.0 };
                eta += j.intensity * a.probability * Complex64::new(p.cos() - 1.0, p.sin() - small);
            }
        }
        Ok(eta)
    }

    /// `E[exp(i xi.L_T)] = exp(T eta(xi))`.
    pub fn characteristic_function(&self, xi: &[f64], horizon: f64) -> Result<Complex64> {
        Ok((self.levy_symbol(xi)? * horizon).exp())
    }

    /// Whether `xi.Sigma.xi / 2 >= C |xi|^2` for all `xi`.
    pub fn verify_nondegeneracy(&self, c: f64) -> bool {
        self.nondegeneracy(c, None).holds
    }

    pub fn nondegeneracy(&self, c: f64, horizon: Option<f64>) -> Nondegeneracy {
        let half_min = 0.5 * min_eigenvalue(&self.sigma);
        Nondegeneracy {
            half_min_eigenvalue: half_min,
            holds: half_min >= c - 1e-12,
            horizon_condition: horizon.map(|t| c * t > HORIZON_THRESHOLD),
        }
    }

    /// One draw of `L_T`.
    pub fn simulate_increment<R: Rng + ?Sized>(&self, horizon: f64, rng: &mut R) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; d];
        if horizon == 0.0 {
            return out;
        }
        let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let root_t = horizon.sqrt();
        for i in 0..d {
            let v = self.gamma[i] * horizon;
            let g: f64 = (0..d).map(|k| self.sigma_sqrt[(i, k)] * z[k]).sum();
            out[i] = v + root_t * g;
        }
        if let Some(j) = &self.jumps {
            let mean = j.intensity * horizon;
            if mean > 0.0 {
                let count = Poisson::new(mean).expect("positive mean").sample(rng) as u64;
                for _ in 0..count {
                    let atom = pick_atom(&j.atoms, rng.random::<f64>());
                    for (o, y) in out.iter_mut().zip(&atom.jump) {
                        *o += y;
                    }
                }
            }
            for (o, c) in out.iter_mut().zip(j.compensator(d)) {
                *o -= horizon * c;
            }
        }
        out
    }
}

fn pick_atom(atoms: &[JumpAtom], u: f64) -> &JumpAtom {
    let mut acc = 0.0;
    for a in atoms {
        acc += a.probability;
        if u < acc {
            return a;
        }
    }
    atoms.last().expect("validated nonempty")
}

/// `1 / (2^{3/2} pi)`: lower bound on `C T` used by the approximation theory.
pub const HORIZON_THRESHOLD: f64 = 0.112_539_539_519_638_26;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nondegeneracy {
    pub half_min_eigenvalue: f64,
    pub holds: bool,
    pub horizon_condition: Option<bool>,
}

/// Check `xi.Sigma.xi / 2 >= C |xi|^2` for a raw covariance matrix.
pub fn verify_nondegeneracy(sigma: &DMatrix<f64>, c: f64) -> Result<bool> {
    check_symmetric(sigma)?;
    Ok(0.5 * min_eigenvalue(sigma) >= c - 1e-12)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub paths: usize,
}

/// Running mean and sum of squared deviations, mergeable across blocks.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1.0;
        let delta = v - self.mean;
        self.mean += delta / self.n;
        self.m2 += delta * (v - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0.0 {
            return other;
        }
        if other.n == 0.0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + delta * other.n / n,
            m2: self.m2 + other.m2 + delta * delta * self.n * other.n / n,
        }
    }

    fn estimate(self) -> McEstimate {
        let var = if self.n > 1.0 { self.m2 / (self.n - 1.0) } else { 0.0 };
        McEstimate {
            mean: self.mean,
            std_error: (var / self.n).sqrt(),
            paths: self.n as usize,
        }
    }
}

/// Monte Carlo estimate of `f(sample)` averaged over `paths` draws, split into
/// blocks with independent substreams of `key`.
pub fn mc_expectation<F>(paths: usize, key: StreamKey, f: F) -> McEstimate
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> f64 + Sync,
{
    let blocks = paths.div_ceil(PATH_BLOCK);
    let run = |b: usize| {
        let mut rng = key.child(b as u64).rng();
        let len = PATH_BLOCK.min(paths - b * PATH_BLOCK);
        let mut m = Moments::default();
        for _ in 0..len {
            m.push(f(&mut rng));
        }
        m
    };
    let parts: Vec<Moments> = if blocks > 1 {
        (0..blocks).into_par_iter().map(run).collect()
    } else {
        (0..blocks).map(run).collect()
    };
    parts.into_iter().fold(Moments::default(), Moments::merge).estimate()
}

/// `u(T, exp(x)) = E[phi(exp(x + L_T))]` by simulation.
pub fn price_mc(
    triplet: &LevyTriplet,
    payoff: &Payoff,
    log_spot: &[f64],
    horizon: f64,
    paths: usize,
    key: StreamKey,
) -> Result<McEstimate> {
    if paths == 0 {
        return Err(Error::invalid("price_mc", "paths must be at least 1"));
    }
    if log_spot.len() != triplet.dim() {
        return Err(Error::dim("price_mc spot", triplet.dim(), log_spot.len()));
    }
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::invalid("price_mc", format!("horizon must be >= 0, got {horizon}")));
    }
    payoff.validate()?;
    let value = payoff.eval_log(log_spot)?;
    if horizon == 0.0 {
        return Ok(McEstimate {
            mean: value,
            std_error: 0.0,
            paths,
        });
    }
    Ok(mc_expectation(paths, key, |rng| {
        let mut x = triplet.simulate_increment(horizon, rng);
        for (xi, s) in x.iter_mut().zip(log_spot) {
            *xi += s;
        }
        payoff.eval_log_unchecked(&x)
    }))
}

const X_LABEL: u64 = 1;
const Y_LABEL: u64 = 2;
const NOISE_LABEL: u64 = 3;

/// Training data for the pricing PDE: `X_i` uniform on `[-M, M]^d`, labels
/// whose conditional mean given `X_i = x` is `u(T, exp(x))`.
pub fn gen_pde_dataset(
    triplet: &LevyTriplet,
    payoff: &Payoff,
    box_radius: f64,
    horizon: f64,
    n: usize,
    label_kind: LabelKind,
    seed: u64,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::invalid("dataset", "n must be at least 1"));
    }
    if !(box_radius.is_finite() && box_radius > 0.0) {
        return Err(Error::invalid("dataset", format!("M must be positive, got {box_radius}")));
    }
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::invalid("dataset", format!("T must be >= 0, got {horizon}")));
    }
    label_kind.validate()?;
    payoff.validate()?;
    let d = triplet.dim();
    if let Some(pd) = payoff.dim() {
        if pd != d {
            return Err(Error::dim("payoff", d, pd));
        }
    }
    let key = StreamKey::new(seed);
    let unif = Uniform::new_inclusive(-box_radius, box_radius).expect("valid box");

    let rows: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut xr = key.child(X_LABEL).child(i as u64).rng();
            let x: Vec<f64> = (0..d).map(|_| unif.sample(&mut xr)).collect();
            let ykey = key.child(Y_LABEL).child(i as u64);
            let y = match label_kind {
                LabelKind::SingleDraw => {
                    let mut r = ykey.rng();
                    let l = triplet.simulate_increment(horizon, &mut r);
                    let z: Vec<f64> = x.iter().zip(&l).map(|(a, b)| a + b).collect();
                    payoff.eval_log_unchecked(&z)
                }
                LabelKind::McPrice { paths } => price_mc(triplet, payoff, &x, horizon, paths, ykey)
                    .expect("validated inputs")
                    .mean,
                LabelKind::NoisyObservation { noise_std, paths } => {
                    let p = price_mc(triplet, payoff, &x, horizon, paths, ykey)
                        .expect("validated inputs")
                        .mean;
                    p + gaussian_noise(noise_std, key.child(NOISE_LABEL).child(i as u64))
                }
            };
            (x, y)
        })
        .collect();

    let xm = DMatrix::from_fn(n, d, |i, j| rows[i].0[j]);
    let y = rows.into_iter().map(|r| r.1).collect();
    Ok(Dataset::new(xm, y, label_kind, seed)?
        .with_box(box_radius)?
        .with_horizon(horizon))
}

fn gaussian_noise(std: f64, key: StreamKey) -> f64 {
    if std == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, std).expect("finite std").sample(&mut key.rng())
}

/// A law for the terminal asset vector `S_T`.
pub trait TerminalSampler: Sync {
    fn dim(&self) -> usize;
    fn sample_terminal(&self, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<f64>;
}

/// `S_T = spot * exp(L_T)` for a Lévy triplet.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpLevyModel {
    pub triplet: LevyTriplet,
    pub spot: Vec<f64>,
    pub maturity: f64,
}

impl ExpLevyModel {
    pub fn new(triplet: LevyTriplet, spot: Vec<f64>, maturity: f64) -> Result<Self> {
        if spot.len() != triplet.dim() {
            return Err(Error::dim("spot", triplet.dim(), spot.len()));
        }
        if spot.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::invalid("spot", "asset values must be positive"));
        }
        if !(maturity.is_finite() && maturity >= 0.0) {
            return Err(Error::invalid("maturity", format!("must be >= 0, got {maturity}")));
        }
        Ok(ExpLevyModel {
            triplet,
            spot,
            maturity,
        })
    }

    /// Single lognormal asset with risk-neutral drift.
    pub fn lognormal(spot: f64, vol: f64, maturity: f64) -> Result<Self> {
        let t = LevyTriplet::risk_neutral(DMatrix::from_element(1, 1, vol * vol), None)?;
        ExpLevyModel::new(t, vec![spot], maturity)
    }
}

impl TerminalSampler for ExpLevyModel {
    fn dim(&self) -> usize {
        self.spot.len()
    }

    fn sample_terminal(&self, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<f64> {
        let l = self.triplet.simulate_increment(self.maturity, rng);
        self.spot.iter().zip(&l).map(|(s, l)| s * l.exp()).collect()
    }
}

/// `E[max(K - w.S_T, 0)]` by simulation.
pub fn basket_put_price_mc<S: TerminalSampler + ?Sized>(
    sampler: &S,
    weights: &[f64],
    strike: f64,
    paths: usize,
    key: StreamKey,
) -> McEstimate {
    mc_expectation(paths, key, |rng| {
        let s = sampler.sample_terminal(rng);
        (strike - dot(weights, &s)).max(0.0)
    })
}

/// Basket-put training data: strikes uniform on `[0, M]`, labels are Monte
/// Carlo put prices plus centered Gaussian noise.
pub fn gen_basket_put_dataset<S: TerminalSampler + ?Sized>(
    sampler: &S,
    weights: &[f64],
    max_strike: f64,
    n: usize,
    noise_std: f64,
    paths: usize,
    seed: u64,
) -> Result<Dataset> {
    if weights.len() != sampler.dim() {
        return Err(Error::dim("basket weights", sampler.dim(), weights.len()));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::invalid("basket weights", "must be nonnegative"));
    }
    if !(max_strike.is_finite() && max_strike > 0.0) {
        return Err(Error::invalid("basket put", format!("M must be positive, got {max_strike}")));
    }
    let kind = LabelKind::NoisyObservation { noise_std, paths };
    kind.validate()?;
    let key = StreamKey::new(seed);
    let unif = Uniform::new_inclusive(0.0, max_strike).expect("valid range");
    let rows: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let k = unif.sample(&mut key.child(X_LABEL).child(i as u64).rng());
            let price = basket_put_price_mc(sampler, weights, k, paths, key.child(Y_LABEL).child(i as u64)).mean;
            (k, price + gaussian_noise(noise_std, key.child(NOISE_LABEL).child(i as u64)))
        })
        .collect();
    let x = DMatrix::from_iterator(n, 1, rows.iter().map(|r| r.0));
    let y = rows.iter().map(|r| r.1).collect();
    Ok(Dataset::new(x, y, kind, seed)?.with_box(max_strike)?)
}

/// Closed-form Black-Scholes prices with zero rates.
pub mod black_scholes {
    use statrs::function::erf::erfc;

    pub fn normal_cdf(x: f64) -> f64 {
        0.5 * erfc(-x / std::f64::consts::SQRT_2)
    }

    pub fn normal_pdf(x: f64) -> f64 {
        (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
    }

    fn d1_d2(spot: f64, strike: f64, vol: f64, t: f64) -> (f64, f64) {
        let sd = vol * t.sqrt();
        let d1 = ((spot / strike).ln() + 0.5 * sd * sd) / sd;
        (d1, d1 - sd)
    }

    pub fn call(spot: f64, strike: f64, vol: f64, t: f64) -> f64 {
        if strike <= 0.0 {
            return spot - strike;
        }
        if t == 0.0 || vol == 0.0 {
            return (spot - strike).max(0.0);
        }
        let (d1, d2) = d1_d2(spot, strike, vol, t);
        spot * normal_cdf(d1) - strike * normal_cdf(d2)
    }

    pub fn put(spot: f64, strike: f64, vol: f64, t: f64) -> f64 {
        if strike <= 0.0 {
            return 0.0;
        }
        if t == 0.0 || vol == 0.0 {
            return (strike - spot).max(0.0);
        }
        let (d1, d2) = d1_d2(spot, strike, vol, t);
        strike * normal_cdf(-d2) - spot * normal_cdf(-d1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn one_dim_jumps() -> LevyTriplet {
        LevyTriplet::new(
            DMatrix::from_element(1, 1, 0.04),
            vec![0.01],
            Some(CompoundPoissonSpec {
                intensity: 0.8,
                atoms: vec![
                    JumpAtom { probability: 0.7, jump: vec![-0.3] },
                    JumpAtom { probability: 0.3, jump: vec![1.4] },
                ],
                radius: 2.0,
            }),
        )
        .unwrap()
    }

    #[test]
    fn symbol_examples() {
        let gauss = LevyTriplet::new(DMatrix::identity(3, 3), vec![0.0; 3], None).unwrap();
        let e = gauss.levy_symbol(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(e, Complex64::new(-0.5, 0.0));

        let drift = LevyTriplet::new(DMatrix::zeros(2, 2), vec![1.0, 0.0], None).unwrap();
        assert_eq!(drift.levy_symbol(&[1.0, 0.0]).unwrap(), Complex64::new(0.0, 1.0));

        let jump = LevyTriplet::new(
            DMatrix::zeros(1, 1),
            vec![0.0],
            Some(CompoundPoissonSpec {
                intensity: 1.0,
                atoms: vec![JumpAtom { probability: 1.0, jump: vec![1.0] }],
                radius: 1.5,
            }),
        )
        .unwrap();
        let e = jump.levy_symbol(&[std::f64::consts::PI]).unwrap();
        assert_relative_eq!(e.re, -2.0, epsilon = 1e-15);
        assert_relative_eq!(e.im, -std::f64::consts::PI, epsilon = 1e-15);
        assert!(jump.levy_symbol(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn nondegeneracy_examples() {
        let s = DMatrix::identity(4, 4) * 0.08;
        let t = LevyTriplet::new(s.clone(), vec![0.0; 4], None).unwrap();
        assert!(t.verify_nondegeneracy(0.04));
        assert!(!t.verify_nondegeneracy(0.05));
        assert!(verify_nondegeneracy(&s, 0.04).unwrap());

        let bs = LevyTriplet::black_scholes_equal_correlation(0.2, 0.2, 50).unwrap();
        let rep = bs.nondegeneracy(HORIZON_THRESHOLD, Some(1.0));
        assert_relative_eq!(rep.half_min_eigenvalue, 0.016, epsilon = 1e-12);
        assert!(!rep.holds);

        let mut asym = DMatrix::identity(2, 2);
        asym[(0, 1)] = 0.3;
        assert!(verify_nondegeneracy(&asym, 0.1).is_err());
        assert!(LevyTriplet::new(asym, vec![0.0; 2], None).is_err());
    }

    #[test]
    fn horizon_threshold_constant() {
        assert_relative_eq!(
            HORIZON_THRESHOLD,
            1.0 / (2f64.powf(1.5) * std::f64::consts::PI),
            epsilon = 1e-16
        );
    }

    #[test]
    fn rejects_bad_inputs() {
        let neg = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(LevyTriplet::new(neg, vec![0.0; 2], None).is_err());
        let far = CompoundPoissonSpec {
            intensity: 1.0,
            atoms: vec![JumpAtom { probability: 1.0, jump: vec![3.0] }],
            radius: 2.0,
        };
        assert!(LevyTriplet::new(DMatrix::identity(1, 1), vec![0.0], Some(far)).is_err());
        let unnormalized = CompoundPoissonSpec {
            intensity: 1.0,
            atoms: vec![JumpAtom { probability: 0.5, jump: vec![0.1] }],
            radius: 2.0,
        };
        assert!(LevyTriplet::new(DMatrix::identity(1, 1), vec![0.0], Some(unnormalized)).is_err());
    }

    #[test]
    fn sqrt_reproduces_covariance() {
        let s = equal_correlation(0.3, 0.5, 4);
        let l = covariance_sqrt(&s).unwrap();
        assert!((&l * l.transpose() - &s).amax() < 1e-14);
        // Rank one: Cholesky breaks down, eigen fallback takes over.
        let v = DVector::from_vec(vec![1.0, 2.0, -1.0]);
        let r1 = &v * v.transpose();
        let l = covariance_sqrt(&r1).unwrap();
        assert!((&l * l.transpose() - &r1).amax() < 1e-12);
        let zero = covariance_sqrt(&DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(zero, DMatrix::zeros(2, 2));
    }

    #[test]
    fn zero_horizon_increment_is_zero() {
        let t = one_dim_jumps();
        let mut rng = StreamKey::new(1).rng();
        assert_eq!(t.simulate_increment(0.0, &mut rng), vec![0.0]);
    }

    #[test]
    fn gaussian_increment_covariance() {
        let s = DMatrix::from_row_slice(2, 2, &[0.04, 0.01, 0.01, 0.09]);
        let t = LevyTriplet::new(s.clone(), vec![0.0, 0.0], None).unwrap();
        let horizon = 0.5;
        let mut rng = StreamKey::new(2).rng();
        let n = 100_000;
        let mut acc = DMatrix::<f64>::zeros(2, 2);
        let mut mean = [0.0; 2];
        let draws: Vec<Vec<f64>> = (0..n).map(|_| t.simulate_increment(horizon, &mut rng)).collect();
        for d in &draws {
            mean[0] += d[0] / n as f64;
            mean[1] += d[1] / n as f64;
        }
        for d in &draws {
            for i in 0..2 {
                for j in 0..2 {
                    acc[(i, j)] += (d[i] - mean[i]) * (d[j] - mean[j]) / (n - 1) as f64;
                }
            }
        }
        let target = s * horizon;
        assert!((acc - &target).norm() <= 0.05 * target.norm());
    }

    #[test]
    fn empirical_characteristic_function_matches_symbol() {
        let t = one_dim_jumps();
        let horizon = 0.7;
        let xi = 1.0;
        let mut rng = StreamKey::new(3).rng();
        let n = 200_000;
        let (mut re, mut im, mut re2, mut im2) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let l = t.simulate_increment(horizon, &mut rng)[0];
            let (c, s) = ((xi * l).cos(), (xi * l).sin());
            re += c;
            im += s;
            re2 += c * c;
            im2 += s * s;
        }
        let nf = n as f64;
        let (re, im) = (re / nf, im / nf);
        let se_re = ((re2 / nf - re * re) / nf).sqrt();
        let se_im = ((im2 / nf - im * im) / nf).sqrt();
        let target = t.characteristic_function(&[xi], horizon).unwrap();
        assert!((re - target.re).abs() <= 3.0 * se_re, "{re} vs {}", target.re);
        assert!((im - target.im).abs() <= 3.0 * se_im, "{im} vs {}", target.im);
    }

    #[test]
    fn risk_neutral_drift_zeroes_shift() {
        let t = LevyTriplet::risk_neutral(
            equal_correlation(0.25, 0.3, 3),
            Some(CompoundPoissonSpec {
                intensity: 0.5,
                atoms: vec![
                    JumpAtom { probability: 0.5, jump: vec![0.2, -0.1, 0.0] },
                    JumpAtom { probability: 0.5, jump: vec![-1.0, 0.5, 0.3] },
                ],
                radius: 1.5,
            }),
        )
        .unwrap();
        for g in t.shifted_drift() {
            assert!(g.abs() < 1e-15);
        }
    }

    #[test]
    fn price_at_zero_horizon_is_payoff() {
        let t = LevyTriplet::black_scholes_equal_correlation(0.2, 0.2, 2).unwrap();
        let p = Payoff::MaxCall { strike: 1.0 };
        let est = price_mc(&t, &p, &[0.3, -0.1], 0.0, 10, StreamKey::new(0)).unwrap();
        assert_relative_eq!(est.mean, 0.3f64.exp() - 1.0, epsilon = 1e-15);
        assert_eq!(est.std_error, 0.0);
        assert!(price_mc(&t, &p, &[0.3, -0.1], 1.0, 0, StreamKey::new(0)).is_err());
    }

    #[test]
    fn put_price_monotone_in_strike() {
        let t = LevyTriplet::black_scholes_equal_correlation(0.2, 0.0, 1).unwrap();
        let key = StreamKey::new(5);
        let lo = Payoff::BasketPut { strike: 0.8, weights: vec![1.0] };
        let hi = Payoff::BasketPut { strike: 1.0, weights: vec![1.0] };
        let a = price_mc(&t, &lo, &[0.0], 1.0, 20_000, key).unwrap();
        let b = price_mc(&t, &hi, &[0.0], 1.0, 20_000, key).unwrap();
        assert!(b.mean >= a.mean);
    }

    #[test]
    fn moments_merge_matches_single_pass() {
        let vals: Vec<f64> = (0..1000).map(|i| ((i * 37 % 101) as f64).sqrt()).collect();
        let mut all = Moments::default();
        vals.iter().for_each(|v| all.push(*v));
        let mut a = Moments::default();
        let mut b = Moments::default();
        vals[..333].iter().for_each(|v| a.push(*v));
        vals[333..].iter().for_each(|v| b.push(*v));
        let m = a.merge(b);
        assert_relative_eq!(m.mean, all.mean, epsilon = 1e-12);
        assert_relative_eq!(m.m2, all.m2, max_relative = 1e-10);
    }

    #[test]
    fn pde_dataset_basics() {
        let t = LevyTriplet::black_scholes_equal_correlation(0.2, 0.2, 2).unwrap();
        let p = Payoff::MaxCall { strike: 1.0 };
        let at_zero = gen_pde_dataset(&t, &p, 1.0, 0.0, 50, LabelKind::SingleDraw, 7).unwrap();
        for i in 0..50 {
            assert_eq!(at_zero.y()[i], p.eval_log(&at_zero.row(i)).unwrap());
            assert!(at_zero.row(i).iter().all(|v| v.abs() <= 1.0));
        }
        let a = gen_pde_dataset(&t, &p, 1.0, 1.0, 30, LabelKind::McPrice { paths: 50 }, 8).unwrap();
        let b = gen_pde_dataset(&t, &p, 1.0, 1.0, 30, LabelKind::McPrice { paths: 50 }, 8).unwrap();
        assert_eq!(a, b);
        assert!(gen_pde_dataset(&t, &p, 1.0, 1.0, 0, LabelKind::SingleDraw, 8).is_err());
        let wrong = Payoff::Tent { center: vec![0.0], width: 1.0 };
        assert!(gen_pde_dataset(&t, &wrong, 1.0, 1.0, 3, LabelKind::SingleDraw, 8).is_err());
    }

    #[test]
    fn basket_dataset_zero_strike_is_worthless() {
        let m = ExpLevyModel::lognormal(1.0, 0.2, 1.0).unwrap();
        let ds = gen_basket_put_dataset(&m, &[1.0], 1.0, 200, 0.0, 20, 3).unwrap();
        assert!(ds.y().iter().all(|y| *y >= 0.0));
        assert_eq!(basket_put_price_mc(&m, &[1.0], 0.0, 100, StreamKey::new(1)).mean, 0.0);
        assert!(gen_basket_put_dataset(&m, &[1.0, 1.0], 1.0, 10, 0.0, 20, 3).is_err());
        assert!(gen_basket_put_dataset(&m, &[-1.0], 1.0, 10, 0.0, 20, 3).is_err());
    }

    #[test]
    fn closed_form_put_call_parity() {
        for k in [0.5, 0.9, 1.0, 1.3] {
            let c = black_scholes::call(1.0, k, 0.2, 1.0);
            let p = black_scholes::put(1.0, k, 0.2, 1.0);
            assert_relative_eq!(c - p, 1.0 - k, epsilon = 1e-14);
        }
    }
}
