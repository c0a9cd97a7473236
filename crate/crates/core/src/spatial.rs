//! Wrapped Gaussian spatial processes with exponential covariance: exact
//! simulation and a latent-winding MCMC fit.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::circular::{direction_of, wrap_radians, Angle, TAU};
use crate::dataset::Points;
use crate::error::{Error, Result};

/// Relative diagonal jitter added before every Cholesky factorization.
pub const JITTER: f64 = 1e-10;

/// `C(d) = σ²·exp(−d/a_e)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentialCovariance {
    pub sigma2: f64,
    pub a_e: f64,
}

impl ExponentialCovariance {
    pub fn new(sigma2: f64, a_e: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) || !(a_e > 0.0) || a_e.is_nan() {
            return Err(Error::InvalidArgument(format!(
                "exponential covariance needs sigma2 > 0 and a_e > 0, got {sigma2}, {a_e}"
            )));
        }
        Ok(Self { sigma2, a_e })
    }

    #[inline]
    pub fn at(&self, dist: f64) -> f64 {
        self.sigma2 * (-dist / self.a_e).exp()
    }
}

/// `εᵢ = wrap(μ + wᵢ)` with `w` a zero-mean Gaussian field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialModel {
    pub mu: Angle,
    pub cov: ExponentialCovariance,
}

impl SpatialModel {
    pub fn from_posterior(post: &PosteriorSummary) -> Result<Self> {
        Ok(Self {
            mu: post.mu_mean,
            cov: ExponentialCovariance::new(post.sigma2_mean, post.a_e_mean)?,
        })
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn distance_matrix(locations: &Points) -> DMatrix<f64> {
    let n = locations.len();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let v = euclidean(locations.row(i), locations.row(j));
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

/// Entry `(i, j)` is `σ²·exp(−‖Xᵢ − Xⱼ‖/a_e)`.
pub fn covariance_matrix(cov: &ExponentialCovariance, locations: &Points) -> DMatrix<f64> {
    let n = locations.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = cov.sigma2;
        for j in 0..i {
            let v = cov.at(euclidean(locations.row(i), locations.row(j)));
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

fn jittered_cholesky(
    mut m: DMatrix<f64>,
    scale: f64,
) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    for i in 0..m.nrows() {
        m[(i, i)] += JITTER * scale;
    }
    m.cholesky().ok_or(Error::NotPositiveDefinite)
}

/// Draws field realizations at fixed locations from a cached Cholesky factor.
#[derive(Clone, Debug)]
pub struct FieldSimulator {
    mu: f64,
    lower: DMatrix<f64>,
}

impl FieldSimulator {
    pub fn new(model: &SpatialModel, locations: &Points) -> Result<Self> {
        let chol = jittered_cholesky(covariance_matrix(&model.cov, locations), model.cov.sigma2)?;
        Ok(Self {
            mu: model.mu.radians(),
            lower: chol.unpack(),
        })
    }

    pub fn len(&self) -> usize {
        self.lower.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unwrapped draw `Y = μ + Lz`.
    pub fn sample_latent<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z = DVector::from_iterator(
            self.len(),
            (0..self.len()).map(|_| StandardNormal.sample(rng)),
        );
        let w = &self.lower * z;
        w.iter().map(|v| self.mu + v).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Angle> {
        self.sample_latent(rng)
            .into_iter()
            .map(Angle::wrapped)
            .collect()
    }
}

pub fn simulate_field<R: Rng + ?Sized>(
    model: &SpatialModel,
    locations: &Points,
    rng: &mut R,
) -> Result<Vec<Angle>> {
    Ok(FieldSimulator::new(model, locations)?.sample(rng))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalPrior {
    pub mean: f64,
    pub variance: f64,
}

/// Inverse gamma with shape `a` and scale `b`, restricted to `(lower, upper)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncatedInverseGamma {
    pub shape: f64,
    pub scale: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformPrior {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpatialFitConfig {
    pub iterations: usize,
    pub burn_in: usize,
    /// Every `thin`-th post-burn-in draw is kept in the summary.
    pub thin: usize,
    /// Winding numbers range over `-kmax..=kmax`.
    pub kmax: i32,
    pub mu_prior: NormalPrior,
    pub sigma2_prior: TruncatedInverseGamma,
    /// Prior on the decay `φ = 3/a_e`.
    pub decay_prior: UniformPrior,
    pub target_acceptance: f64,
    pub initial_step: f64,
}

impl Default for SpatialFitConfig {
    fn default() -> Self {
        Self {
            iterations: 5000,
            burn_in: 1000,
            thin: 10,
            kmax: 2,
            mu_prior: NormalPrior {
                mean: 0.0,
                variance: 1.0,
            },
            sigma2_prior: TruncatedInverseGamma {
                shape: 2.0,
                scale: 1.0,
                lower: 1e-3,
                upper: 10.0,
            },
            decay_prior: UniformPrior { lo: 0.5, hi: 30.0 },
            target_acceptance: 0.3,
            initial_step: 2.0,
        }
    }
}

impl SpatialFitConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.burn_in >= self.iterations {
            return bad("burn_in must be smaller than iterations");
        }
        if self.kmax < 1 {
            return bad("kmax must be at least 1");
        }
        if self.thin == 0 {
            return bad("thin must be at least 1");
        }
        let s = &self.sigma2_prior;
        if !(s.shape > 0.0 && s.scale > 0.0 && 0.0 < s.lower && s.lower < s.upper) {
            return bad("sigma2 prior needs positive shape/scale and 0 < lower < upper");
        }
        let d = &self.decay_prior;
        if !(0.0 < d.lo && d.lo < d.hi && d.hi.is_finite()) {
            return bad("decay prior needs 0 < lo < hi < inf");
        }
        if !(self.mu_prior.variance > 0.0) {
            return bad("mu prior variance must be positive");
        }
        if !(self.initial_step > 0.0)
            || !(0.0 < self.target_acceptance && self.target_acceptance < 1.0)
        {
            return bad("initial_step must be positive and target_acceptance in (0, 1)");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainDraw {
    pub mu: f64,
    pub sigma2: f64,
    pub a_e: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub mu_mean: Angle,
    pub sigma2_mean: f64,
    pub a_e_mean: f64,
    /// Decay acceptance after burn-in.
    pub decay_acceptance: f64,
    pub decay_acceptance_burn_in: f64,
    pub decay_step: f64,
    pub factorization_failures: usize,
    pub chain_length: usize,
    pub draws: Vec<ChainDraw>,
    pub warnings: Vec<String>,
}

/// Probabilities of winding `k ∈ {-kmax..=kmax}` for `Y = ε + 2πk ~ N(mean, var)`.
pub fn winding_conditional(epsilon: f64, mean: f64, var: f64, kmax: i32) -> Vec<f64> {
    let logp: Vec<f64> = (-kmax..=kmax)
        .map(|k| {
            let r = epsilon + TAU * k as f64 - mean;
            -0.5 * r * r / var
        })
        .collect();
    let top = logp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logp.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

fn correlation(dist: &DMatrix<f64>, phi: f64) -> DMatrix<f64> {
    dist.map(|d| (-phi * d / 3.0).exp())
}

/// Precision of the correlation matrix and derived quantities.
struct Factor {
    precision: DMatrix<f64>,
    log_det: f64,
    row_sums: DVector<f64>,
    total: f64,
}

impl Factor {
    fn new(
        dist: &DMatrix<f64>,
        phi: f64,
    ) -> Option<(Self, nalgebra::Cholesky<f64, nalgebra::Dyn>)> {
        let chol = jittered_cholesky(correlation(dist, phi), 1.0).ok()?;
        let log_det = 2.0
            * chol
                .l_dirty()
                .diagonal()
                .iter()
                .map(|v| v.ln())
                .sum::<f64>();
        let precision = chol.inverse();
        let row_sums = precision.column_sum();
        let total = row_sums.sum();
        Some((
            Self {
                precision,
                log_det,
                row_sums,
                total,
            },
            chol,
        ))
    }
}

fn sample_truncated_ig<R: Rng + ?Sized>(
    shape: f64,
    rate: f64,
    lower: f64,
    upper: f64,
    rng: &mut R,
) -> f64 {
    let gamma = Gamma::new(shape, 1.0 / rate).expect("positive gamma parameters");
    for _ in 0..200 {
        let v = 1.0 / gamma.sample(rng);
        if v > lower && v < upper {
            return v;
        }
    }
    // Posterior mass sits outside the support; pin to the nearer bound.
    let mode = rate / (shape + 1.0);
    mode.clamp(lower, upper)
}

/// Fits a wrapped Gaussian process with exponential covariance to `angles`
/// observed at `locations`.
///
/// Each sweep draws the latent windings from their discrete full
/// conditionals, `μ` from its conjugate normal, `σ²` from its truncated
/// conjugate inverse gamma, and the decay `φ = 3/a_e` by random-walk
/// Metropolis. The walk step is tuned during burn-in and then frozen.
pub fn mh_fit<R: Rng + ?Sized>(
    angles: &[Angle],
    locations: &Points,
    cfg: &SpatialFitConfig,
    rng: &mut R,
) -> Result<PosteriorSummary> {
    cfg.validate()?;
    let n = angles.len();
    if n < 5 {
        return Err(Error::InsufficientData(format!(
            "spatial fit needs at least 5 sites, got {n}"
        )));
    }
    if locations.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{n} angles but {} locations",
            locations.len()
        )));
    }
    let dist = distance_matrix(locations);
    let eps: Vec<f64> = angles.iter().map(|a| a.radians()).collect();
    let mut y = DVector::from_iterator(n, angles.iter().map(|a| a.signed()));

    let (s, c) = eps
        .iter()
        .fold((0.0, 0.0), |(s, c), e| (s + e.sin(), c + e.cos()));
    let mut mu = direction_of(s, c).map(|a| a.signed()).unwrap_or(0.0);
    let prior = &cfg.sigma2_prior;
    let mean_y = y.mean();
    let var_y = y.iter().map(|v| (v - mean_y).powi(2)).sum::<f64>() / n as f64;
    let mut sigma2 = var_y.clamp(prior.lower * 1.01, prior.upper * 0.99);
    let (lo, hi) = (cfg.decay_prior.lo, cfg.decay_prior.hi);
    let mut phi = (lo * hi).sqrt();

    let (mut factor, _) = Factor::new(&dist, phi).ok_or_else(|| {
        Error::ChainFailure("initial correlation matrix is not factorizable".into())
    })?;
    let mut z = &factor.precision * y.add_scalar(-mu);
    let mut step = cfg.initial_step;

    let mut decay_tried = 0usize;
    let mut decay_accepted = 0usize;
    let mut batch_accepted = 0usize;
    let mut burn_tried = 0usize;
    let mut burn_accepted = 0usize;
    let mut factor_failures = 0usize;
    let mut in_support = 0usize;
    let (mut sum_mu, mut sum_s2, mut sum_ae) = (0.0, 0.0, 0.0);
    let mut draws = Vec::new();
    let mut winding = vec![0.0; (2 * cfg.kmax + 1) as usize];

    for it in 0..cfg.iterations {
        // Windings.
        for i in 0..n {
            let pii = factor.precision[(i, i)];
            let cond_mean = y[i] - z[i] / pii;
            let probs = winding_conditional(eps[i], cond_mean, sigma2 / pii, cfg.kmax);
            winding.copy_from_slice(&probs);
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = winding.len() - 1;
            for (j, p) in winding.iter().enumerate() {
                acc += p;
                if u < acc {
                    pick = j;
                    break;
                }
            }
            let new_y = eps[i] + TAU * (pick as i32 - cfg.kmax) as f64;
            let delta = new_y - y[i];
            if delta != 0.0 {
                y[i] = new_y;
                z.axpy(delta, &factor.precision.column(i), 1.0);
            }
        }

        // Mean.
        let prec = 1.0 / cfg.mu_prior.variance + factor.total / sigma2;
        let mean =
            (cfg.mu_prior.mean / cfg.mu_prior.variance + factor.row_sums.dot(&y) / sigma2) / prec;
        let draw: f64 = StandardNormal.sample(rng);
        let new_mu = mean + draw / prec.sqrt();
        z.axpy(-(new_mu - mu), &factor.row_sums, 1.0);
        mu = new_mu;

        // Variance.
        let resid = y.add_scalar(-mu);
        let quad = resid.dot(&z);
        sigma2 = sample_truncated_ig(
            prior.shape + 0.5 * n as f64,
            prior.scale + 0.5 * quad,
            prior.lower,
            prior.upper,
            rng,
        );

        // Decay.
        let noise: f64 = StandardNormal.sample(rng);
        let proposal = phi + step * noise;
        let burning = it < cfg.burn_in;
        let mut accepted = false;
        if proposal > lo && proposal < hi {
            in_support += 1;
            match Factor::new(&dist, proposal) {
                None => factor_failures += 1,
                Some((cand, chol)) => {
                    let solved = chol
                        .l()
                        .solve_lower_triangular(&resid)
                        .expect("nonsingular factor");
                    let quad_new = solved.norm_squared();
                    let log_ratio =
                        -0.5 * (cand.log_det - factor.log_det) - 0.5 * (quad_new - quad) / sigma2;
                    let u: f64 = rng.random();
                    if u.ln() < log_ratio {
                        factor = cand;
                        phi = proposal;
                        z = &factor.precision * &resid;
                        accepted = true;
                    }
                }
            }
        }
        if burning {
            burn_tried += 1;
            burn_accepted += accepted as usize;
            batch_accepted += accepted as usize;
            if (it + 1) % 50 == 0 {
                let rate = batch_accepted as f64 / 50.0;
                step = (step * (2.0 * (rate - cfg.target_acceptance)).exp()).clamp(1e-3, hi - lo);
                batch_accepted = 0;
            }
        } else {
            decay_tried += 1;
            decay_accepted += accepted as usize;
            let a_e = 3.0 / phi;
            sum_mu += mu;
            sum_s2 += sigma2;
            sum_ae += a_e;
            if (it - cfg.burn_in) % cfg.thin == 0 {
                draws.push(ChainDraw { mu, sigma2, a_e });
            }
        }
        if in_support >= 20 && factor_failures * 2 > in_support {
            return Err(Error::ChainFailure(format!(
                "{factor_failures} of {in_support} decay proposals could not be factorized"
            )));
        }
    }

    let m = (cfg.iterations - cfg.burn_in) as f64;
    let decay_acceptance = decay_accepted as f64 / decay_tried as f64;
    let mut warnings = Vec::new();
    if !(0.05..=0.95).contains(&decay_acceptance) {
        warnings.push(format!(
            "decay acceptance rate {decay_acceptance:.3} is outside [0.05, 0.95]; the chain may not be mixing"
        ));
    }
    Ok(PosteriorSummary {
        mu_mean: Angle::wrapped(wrap_radians(sum_mu / m)),
        sigma2_mean: sum_s2 / m,
        a_e_mean: sum_ae / m,
        decay_acceptance,
        decay_acceptance_burn_in: if burn_tried > 0 {
            burn_accepted as f64 / burn_tried as f64
        } else {
            0.0
        },
        decay_step: step,
        factorization_failures: factor_failures,
        chain_length: cfg.iterations - cfg.burn_in,
        draws,
        warnings,
    })
}
