//! Parametric circular regression for the family `β₀ + 2·atan(β₁ᵀx)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circular::{direction_of, inverse_a1, Angle};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::substream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParametricModel {
    pub beta0: Angle,
    pub beta1: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_hat: Option<f64>,
}

impl ParametricModel {
    pub fn new(beta0: Angle, beta1: Vec<f64>) -> Self {
        Self {
            beta0,
            beta1,
            kappa_hat: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.beta1.len()
    }

    #[inline]
    pub fn predict(&self, x: &[f64]) -> Angle {
        predict(self, x)
    }

    /// Predictions at every covariate row of `data`.
    pub fn fitted(&self, data: &Dataset) -> Vec<Angle> {
        data.covariates().rows().map(|x| self.predict(x)).collect()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// `wrap(β₀ + 2·atan(β₁ᵀx))`.
#[inline]
pub fn predict(model: &ParametricModel, x: &[f64]) -> Angle {
    debug_assert_eq!(x.len(), model.beta1.len());
    model.beta0.rotate(2.0 * dot(&model.beta1, x).atan())
}

/// `Σᵢ {1 − cos[Θᵢ − m_β(Xᵢ)]}`.
pub fn ls_objective(model: &ParametricModel, data: &Dataset) -> f64 {
    objective_raw(model.beta0.radians(), &model.beta1, data)
}

/// Gradient of [`ls_objective`] with respect to `(β₀, β₁)`.
pub fn ls_gradient(model: &ParametricModel, data: &Dataset) -> Vec<f64> {
    let (_, g, _) = derivatives(model.beta0.radians(), &model.beta1, data, false);
    g.as_slice().to_vec()
}

fn objective_raw(beta0: f64, beta1: &[f64], data: &Dataset) -> f64 {
    data.covariates()
        .rows()
        .zip(data.responses())
        .map(|(x, t)| 1.0 - (t.radians() - beta0 - 2.0 * dot(beta1, x).atan()).cos())
        .sum()
}

/// Objective, gradient and (optionally) exact Hessian at `(β₀, β₁)`.
fn derivatives(
    beta0: f64,
    beta1: &[f64],
    data: &Dataset,
    hessian: bool,
) -> (f64, DVector<f64>, DMatrix<f64>) {
    let d = beta1.len();
    let k = d + 1;
    let mut f = 0.0;
    let mut g = DVector::zeros(k);
    let mut h = DMatrix::zeros(if hessian { k } else { 0 }, if hessian { k } else { 0 });
    let mut jac = vec![0.0; k];
    for (x, t) in data.covariates().rows().zip(data.responses()) {
        let u = dot(beta1, x);
        let q = 1.0 + u * u;
        let gp = 2.0 / q;
        let gpp = -4.0 * u / (q * q);
        let r = t.radians() - beta0 - 2.0 * u.atan();
        let (s, c) = r.sin_cos();
        f += 1.0 - c;
        jac[0] = 1.0;
        for j in 0..d {
            jac[j + 1] = gp * x[j];
        }
        for a in 0..k {
            g[a] -= s * jac[a];
        }
        if hessian {
            for a in 0..k {
                for b in 0..=a {
                    h[(a, b)] += c * jac[a] * jac[b];
                }
            }
            for a in 0..d {
                for b in 0..=a {
                    h[(a + 1, b + 1)] -= s * gpp * x[a] * x[b];
                }
            }
        }
    }
    if hessian {
        for a in 0..k {
            for b in 0..a {
                h[(b, a)] = h[(a, b)];
            }
        }
    }
    (f, g, h)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub tol_grad: f64,
    pub max_iter: usize,
    /// Random slope starts in addition to the zero start.
    pub random_starts: usize,
    /// Random slope starts are uniform on `[-start_range, start_range]^d`.
    pub start_range: f64,
    /// Best points of the profile scan used as extra starts.
    pub scan_starts: usize,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            tol_grad: 1e-8,
            max_iter: 200,
            random_starts: 8,
            start_range: 3.0,
            scan_starts: 2,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: ParametricModel,
    pub objective: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub starts_tried: usize,
}

struct StartOutcome {
    beta0: f64,
    beta1: Vec<f64>,
    objective: f64,
    gradient_norm: f64,
    iterations: usize,
    converged: bool,
}

/// Intercept minimizing the objective for fixed slopes.
fn profile_intercept(beta1: &[f64], data: &Dataset) -> f64 {
    let (mut s, mut c) = (0.0, 0.0);
    for (x, t) in data.covariates().rows().zip(data.responses()) {
        let r = t.radians() - 2.0 * dot(beta1, x).atan();
        s += r.sin();
        c += r.cos();
    }
    direction_of(s, c).map(|a| a.radians()).unwrap_or(0.0)
}

/// `n − R(β₁)`: the objective at the profile intercept.
fn profile_objective(beta1: &[f64], data: &Dataset) -> f64 {
    let (mut s, mut c) = (0.0, 0.0);
    for (x, t) in data.covariates().rows().zip(data.responses()) {
        let (rs, rc) = (t.radians() - 2.0 * dot(beta1, x).atan()).sin_cos();
        s += rs;
        c += rc;
    }
    data.n() as f64 - s.hypot(c)
}

const SCAN_1D: [f64; 17] = [
    -32.0, -16.0, -8.0, -4.0, -2.0, -1.0, -0.5, -0.25, 0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0,
    32.0,
];
const SCAN_AXIS: [f64; 9] = [-12.0, -4.0, -1.5, -0.5, 0.0, 0.5, 1.5, 4.0, 12.0];

/// Slopes with the lowest profile objective on a log-spaced product grid.
/// Catches minima far outside the random start box, where `atan` saturates.
fn scan_starts(data: &Dataset, keep: usize) -> Vec<Vec<f64>> {
    if keep == 0 {
        return Vec::new();
    }
    let d = data.dim();
    let axis: &[f64] = if d == 1 { &SCAN_1D } else { &SCAN_AXIS };
    let total = axis.len().pow(d as u32);
    let mut scored: Vec<(f64, Vec<f64>)> = (0..total)
        .map(|mut code| {
            let b: Vec<f64> = (0..d)
                .map(|_| {
                    let v = axis[code % axis.len()];
                    code /= axis.len();
                    v
                })
                .collect();
            (profile_objective(&b, data), b)
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    scored.into_iter().take(keep).map(|(_, b)| b).collect()
}

/// Levenberg–Marquardt on the exact Hessian. Large damping turns the step
/// into scaled gradient descent, which covers indefinite regions.
fn newton_from(beta1_start: Vec<f64>, data: &Dataset, cfg: &FitConfig) -> StartOutcome {
    let k = beta1_start.len() + 1;
    let mut theta = DVector::zeros(k);
    theta[0] = profile_intercept(&beta1_start, data);
    for (j, b) in beta1_start.iter().enumerate() {
        theta[j + 1] = *b;
    }
    let split = |t: &DVector<f64>| (t[0], t.as_slice()[1..].to_vec());
    let (b0, b1) = split(&theta);
    let (mut f, mut g, mut h) = derivatives(b0, &b1, data, true);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        let gnorm = g.norm();
        if gnorm < cfg.tol_grad {
            return StartOutcome {
                beta0: theta[0],
                beta1: split(&theta).1,
                objective: f,
                gradient_norm: gnorm,
                iterations,
                converged: true,
            };
        }
        iterations += 1;
        let scale = h.diagonal().abs().max().max(1.0);
        let mut accepted = false;
        while lambda < 1e20 {
            let mut damped = h.clone();
            for a in 0..k {
                damped[(a, a)] += lambda * scale;
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = chol.solve(&(-&g));
            let trial = &theta + &step;
            if !trial.iter().all(|v| v.is_finite()) {
                lambda *= 10.0;
                continue;
            }
            let (tb0, tb1) = split(&trial);
            let (ft, gt, ht) = derivatives(tb0, &tb1, data, true);
            let tiny = 1e-13 * (1.0 + f.abs());
            if ft < f || (ft <= f + tiny && gt.norm() < gnorm) {
                theta = trial;
                f = ft;
                g = gt;
                h = ht;
                lambda = (lambda * 0.1).max(1e-12);
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    let gnorm = g.norm();
    StartOutcome {
        beta0: theta[0],
        beta1: split(&theta).1,
        objective: f,
        gradient_norm: gnorm,
        iterations,
        converged: gnorm < cfg.tol_grad,
    }
}

/// Circular least squares fit by multistart damped Newton. The minimizer also
/// maximizes the von Mises likelihood; `kappa_hat` solves `A₁(κ) = R̄` for the
/// mean residual cosine `R̄`.
pub fn fit_circular_ls(data: &Dataset, config: &FitConfig) -> Result<FitReport> {
    let d = data.dim();
    if data.n() < d + 1 {
        return Err(Error::InsufficientData(format!(
            "parametric fit needs at least {} observations, got {}",
            d + 1,
            data.n()
        )));
    }
    if !(config.tol_grad > 0.0) || config.max_iter == 0 {
        return Err(Error::InvalidArgument(
            "tol_grad must be positive and max_iter nonzero".into(),
        ));
    }
    let mut starts = vec![vec![0.0; d]];
    let mut rng = substream(config.seed, &[0x5eed]);
    for _ in 0..config.random_starts {
        starts.push(
            (0..d)
                .map(|_| rng.random_range(-config.start_range..=config.start_range))
                .collect(),
        );
    }
    starts.extend(scan_starts(data, config.scan_starts));
    let starts_tried = starts.len();
    let mut best: Option<StartOutcome> = None;
    let mut best_any: Option<StartOutcome> = None;
    for s in starts {
        let out = newton_from(s, data, config);
        if !out.objective.is_finite() {
            continue;
        }
        let slot = if out.converged {
            &mut best
        } else {
            &mut best_any
        };
        if slot.as_ref().map_or(true, |b| out.objective < b.objective) {
            *slot = Some(out);
        }
    }
    let to_model = |o: &StartOutcome| {
        let mut m = ParametricModel::new(Angle::wrapped(o.beta0), o.beta1.clone());
        let rbar = 1.0 - o.objective / data.n() as f64;
        m.kappa_hat = Some(inverse_a1(rbar));
        m
    };
    match best {
        Some(o) => Ok(FitReport {
            model: to_model(&o),
            objective: o.objective.max(0.0),
            gradient_norm: o.gradient_norm,
            iterations: o.iterations,
            converged: true,
            starts_tried,
        }),
        None => {
            let o = best_any.ok_or_else(|| {
                Error::InvalidArgument("objective is not finite at any start".into())
            })?;
            Err(Error::NonConvergence {
                best_objective: o.objective,
                gradient_norm: o.gradient_norm,
                best: Box::new(to_model(&o)),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circular::{sample_von_mises, wrap, VonMisesParams, TAU};
    use crate::dataset::Points;
    use crate::rng::substream;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use std::f64::consts::PI;

    fn toy(xs: &[f64], thetas: &[f64]) -> Dataset {
        Dataset::new(
            Points::one_dimensional(xs).unwrap(),
            thetas.iter().map(|t| wrap(*t).unwrap()).collect(),
        )
        .unwrap()
    }

    fn simulated(n: usize, beta0: f64, beta1: f64, kappa: f64, seed: u64) -> Dataset {
        let mut rng = substream(seed, &[]);
        let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let noise = if kappa.is_finite() {
            sample_von_mises(
                VonMisesParams::new(Angle::ZERO, kappa).unwrap(),
                n,
                &mut rng,
            )
        } else {
            vec![Angle::ZERO; n]
        };
        let th: Vec<f64> = xs
            .iter()
            .zip(&noise)
            .map(|(x, e)| beta0 + 2.0 * (beta1 * x).atan() + e.radians())
            .collect();
        toy(&xs, &th)
    }

    #[test]
    fn predict_examples() {
        let m = ParametricModel::new(Angle::ZERO, vec![0.0, 0.0]);
        assert_eq!(predict(&m, &[3.0, -1.0]), Angle::ZERO);
        let m = ParametricModel::new(Angle::ZERO, vec![1.0]);
        assert!((predict(&m, &[1e12]).radians() - PI).abs() < 1e-9);
        let m = ParametricModel::new(wrap(PI / 2.0).unwrap(), vec![-1.0, 1.0]);
        assert_abs_diff_eq!(
            predict(&m, &[0.3, 0.3]).radians(),
            PI / 2.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn objective_examples() {
        let m = ParametricModel::new(Angle::ZERO, vec![1.0]);
        let xs = [0.0, 0.5, 1.0];
        let exact: Vec<f64> = xs.iter().map(|x| 2.0 * f64::atan(*x)).collect();
        assert_abs_diff_eq!(ls_objective(&m, &toy(&xs, &exact)), 0.0, epsilon = 1e-14);

        let anti = toy(&[0.4], &[2.0 * f64::atan(0.4) + PI]);
        assert_abs_diff_eq!(ls_objective(&m, &anti), 2.0, epsilon = 1e-14);

        // Direct evaluation: 1-cos(0) + 1-cos(π/2-2atan(.5)) + 1-cos(π/2-π/2).
        let hand = toy(&xs, &[0.0, PI / 2.0, PI / 2.0]);
        let expected = 1.0 - (PI / 2.0 - 2.0 * 0.5f64.atan()).cos();
        assert_abs_diff_eq!(ls_objective(&m, &hand), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(ls_objective(&m, &hand), 0.2, epsilon = 1e-12);
    }

    #[test]
    fn recovers_noiseless_truth() {
        let data = simulated(50, 0.0, 1.0, f64::INFINITY, 3);
        let rep = fit_circular_ls(&data, &FitConfig::default()).unwrap();
        assert!(rep.converged);
        assert!(rep.objective < 1e-10, "{}", rep.objective);
        assert!(rep.model.beta0.signed().abs() < 1e-4);
        assert!((rep.model.beta1[0] - 1.0).abs() < 1e-4);
        assert_eq!(rep.starts_tried, 11);
    }

    #[test]
    fn steep_slope_outside_start_box() {
        let data = simulated(40, 1.0, -20.0, f64::INFINITY, 8);
        let rep = fit_circular_ls(&data, &FitConfig::default()).unwrap();
        assert!(rep.objective < 1e-10, "{}", rep.objective);
        assert!((rep.model.beta1[0] + 20.0).abs() < 1e-4);
    }

    #[test]
    fn constant_responses() {
        let xs: Vec<f64> = (0..12).map(|i| i as f64 / 11.0).collect();
        let data = toy(&xs, &vec![2.5; 12]);
        let rep = fit_circular_ls(&data, &FitConfig::default()).unwrap();
        assert_abs_diff_eq!(rep.model.beta0.radians(), 2.5, epsilon = 1e-8);
        assert!(rep.model.beta1[0].abs() < 1e-8);
        assert!(rep.objective < 1e-14);
    }

    #[test]
    fn too_few_points() {
        let data = toy(&[0.3], &[0.1]);
        assert!(matches!(
            fit_circular_ls(&data, &FitConfig::default()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn not_worse_than_grid_search() {
        let data = simulated(20, 1.0, 1.5, 5.0, 11);
        let rep = fit_circular_ls(&data, &FitConfig::default()).unwrap();
        let mut grid_min = f64::INFINITY;
        for i in 0..400 {
            let b0 = TAU * i as f64 / 400.0;
            for j in 0..400 {
                let b1 = -5.0 + 10.0 * j as f64 / 399.0;
                grid_min = grid_min.min(objective_raw(b0, &[b1], &data));
            }
        }
        assert!(rep.objective <= grid_min + 1e-6);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let data = simulated(40, 0.3, -0.8, 8.0, 5);
        let (b0, b1) = (0.7, vec![0.4]);
        let m = ParametricModel::new(wrap(b0).unwrap(), b1.clone());
        let g = ls_gradient(&m, &data);
        let e = 1e-6;
        let fd0 =
            (objective_raw(b0 + e, &b1, &data) - objective_raw(b0 - e, &b1, &data)) / (2.0 * e);
        let fd1 = (objective_raw(b0, &[b1[0] + e], &data) - objective_raw(b0, &[b1[0] - e], &data))
            / (2.0 * e);
        assert!((g[0] - fd0).abs() <= 1e-6 * (1.0 + fd0.abs()));
        assert!((g[1] - fd1).abs() <= 1e-6 * (1.0 + fd1.abs()));
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let mut rng = substream(8, &[]);
        let rows: Vec<[f64; 2]> = (0..30).map(|_| [rng.random(), rng.random()]).collect();
        let th: Vec<Angle> = (0..30)
            .map(|_| Angle::wrapped(rng.random::<f64>() * TAU))
            .collect();
        let data = Dataset::new(Points::from_rows(&rows).unwrap(), th).unwrap();
        let (b0, b1) = (0.2, vec![0.5, -1.1]);
        let (_, _, h) = derivatives(b0, &b1, &data, true);
        let e = 1e-6;
        for a in 0..3 {
            let mut p = vec![b0, b1[0], b1[1]];
            let mut m = p.clone();
            p[a] += e;
            m[a] -= e;
            let (_, gp, _) = derivatives(p[0], &p[1..], &data, false);
            let (_, gm, _) = derivatives(m[0], &m[1..], &data, false);
            for b in 0..3 {
                let fd = (gp[b] - gm[b]) / (2.0 * e);
                assert!((h[(a, b)] - fd).abs() < 1e-5 * (1.0 + fd.abs()), "{a},{b}");
            }
        }
    }

    #[test]
    fn rotation_equivariance() {
        let data = simulated(60, 0.5, 1.2, 10.0, 21);
        let c = 1.9;
        let rotated = data
            .with_responses(data.responses().iter().map(|t| t.rotate(c)).collect())
            .unwrap();
        let a = fit_circular_ls(&data, &FitConfig::default()).unwrap();
        let b = fit_circular_ls(&rotated, &FitConfig::default()).unwrap();
        assert!(crate::circular::circ_dist(b.model.beta0, a.model.beta0.rotate(c)) < 1e-12);
        assert!((a.model.beta1[0] - b.model.beta1[0]).abs() < 1e-6);
        assert!((a.objective - b.objective).abs() < 1e-9);
    }

    #[test]
    fn beats_truth_under_null() {
        for seed in 0..10 {
            let data = simulated(50, 0.0, 1.0, 10.0, 100 + seed);
            let truth = ParametricModel::new(Angle::ZERO, vec![1.0]);
            let rep = fit_circular_ls(&data, &FitConfig::default()).unwrap();
            assert!(rep.objective <= ls_objective(&truth, &data) + 1e-12);
            let k = rep.model.kappa_hat.unwrap();
            assert!(k > 3.0 && k < 30.0, "{k}");
        }
    }
}
