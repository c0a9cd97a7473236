//! Residual bootstrap calibration for independent errors (PCB, NPCB) and for
//! spatially correlated errors (PSCB, NPSCB).
//!
//! Replicate `b` always draws from the substream `(seed, b)`, so a batch of
//! bandwidth settings sharing one residual source sees exactly the replicates
//! each setting would see on its own.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circular::{mean_direction, Angle};
use crate::dataset::{BoundaryWeight, Dataset, EvalGrid};
use crate::error::{Error, Result};
use crate::gof::{p_value, Statistic, StatisticPlan, StatisticValues, TestConfig};
use crate::nonparam::{sin_cos, BandwidthSpec, Degree, LinearSmoother};
use crate::param::{fit_circular_ls, FitConfig, FitReport, ParametricModel};
use crate::rng::substream;
use crate::spatial::{mh_fit, FieldSimulator, PosteriorSummary, SpatialFitConfig, SpatialModel};

/// Largest fraction of failed replicates tolerated per statistic.
pub const MAX_FAILED_FRACTION: f64 = 0.05;

const REPLICATE_STREAM: u64 = 1;
const MCMC_STREAM: u64 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Pcb,
    Npcb,
    Pscb,
    Npscb,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [
        SchemeKind::Pcb,
        SchemeKind::Npcb,
        SchemeKind::Pscb,
        SchemeKind::Npscb,
    ];

    pub fn is_spatial(self) -> bool {
        matches!(self, SchemeKind::Pscb | SchemeKind::Npscb)
    }

    pub fn is_nonparametric(self) -> bool {
        matches!(self, SchemeKind::Npcb | SchemeKind::Npscb)
    }

    pub fn label(self) -> &'static str {
        match self {
            SchemeKind::Pcb => "PCB",
            SchemeKind::Npcb => "NPCB",
            SchemeKind::Pscb => "PSCB",
            SchemeKind::Npscb => "NPSCB",
        }
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown bootstrap scheme {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapScheme {
    pub kind: SchemeKind,
    #[serde(rename = "B")]
    pub b: usize,
    /// Rotate residuals to zero mean direction before resampling.
    #[serde(default)]
    pub recenter_residuals: bool,
    /// Bandwidth for nonparametric residuals; the test bandwidth when unset.
    #[serde(default)]
    pub residual_bandwidth: Option<f64>,
}

impl BootstrapScheme {
    pub fn new(kind: SchemeKind, b: usize) -> Result<Self> {
        if b == 0 {
            return Err(Error::InvalidArgument("B must be at least 1".into()));
        }
        Ok(Self {
            kind,
            b,
            recenter_residuals: false,
            residual_bandwidth: None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ResidualSource {
    Parametric,
    Nonparametric { h: f64, degree: Degree },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapRun {
    pub scheme: SchemeKind,
    pub statistic: Statistic,
    pub bandwidth: BandwidthSpec,
    pub observed: f64,
    pub replicates: Vec<f64>,
    pub p_value: f64,
    #[serde(rename = "B")]
    pub b: usize,
    pub failed_replicates: usize,
    pub excluded_points: usize,
    pub residual_source: ResidualSource,
    pub null_model: ParametricModel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub posterior: Option<PosteriorSummary>,
}

/// `ε̂ᵢ = wrap(Θᵢ − m̂(Xᵢ))`.
pub fn residuals(data: &Dataset, fitted: &[Angle]) -> Result<Vec<Angle>> {
    if fitted.len() != data.n() {
        return Err(Error::InvalidArgument(format!(
            "{} fitted values for {} observations",
            fitted.len(),
            data.n()
        )));
    }
    Ok(data
        .responses()
        .iter()
        .zip(fitted)
        .map(|(t, m)| t.rotate(-m.radians()))
        .collect())
}

/// Everything one batch needs besides the data.
#[derive(Clone, Debug)]
pub struct BatchSpec<'a> {
    pub kind: SchemeKind,
    pub b: usize,
    pub recenter_residuals: bool,
    pub residual_bandwidth: Option<f64>,
    pub bandwidths: &'a [BandwidthSpec],
    pub grid: &'a EvalGrid,
    pub weight: &'a BoundaryWeight,
    pub fit: &'a FitConfig,
    pub spatial: Option<&'a SpatialFitConfig>,
    pub seed: u64,
}

/// Outcome for one bandwidth setting and both statistics.
#[derive(Debug)]
pub struct CellOutcome {
    pub bandwidth: BandwidthSpec,
    pub t1: Result<BootstrapRun>,
    pub t2: Result<BootstrapRun>,
}

impl CellOutcome {
    pub fn get(&self, which: Statistic) -> &Result<BootstrapRun> {
        match which {
            Statistic::T1 => &self.t1,
            Statistic::T2 => &self.t2,
        }
    }

    pub fn into_run(self, which: Statistic) -> Result<BootstrapRun> {
        match which {
            Statistic::T1 => self.t1,
            Statistic::T2 => self.t2,
        }
    }
}

#[derive(Debug)]
pub struct BatchOutcome {
    pub null_fit: FitReport,
    pub cells: Vec<CellOutcome>,
}

enum Noise {
    Resample(Vec<Angle>),
    Field(FieldSimulator),
}

impl Noise {
    fn draw<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Angle> {
        match self {
            Noise::Resample(res) => (0..n)
                .map(|_| res[rng.random_range(0..res.len())])
                .collect(),
            Noise::Field(sim) => sim.sample(rng),
        }
    }
}

fn recenter(res: Vec<Angle>) -> Vec<Angle> {
    match mean_direction(&res) {
        Ok(m) => res.into_iter().map(|e| e.rotate(-m.radians())).collect(),
        Err(_) => res,
    }
}

fn build_noise(
    data: &Dataset,
    spec: &BatchSpec,
    fitted: &[Angle],
) -> Result<(Noise, Option<PosteriorSummary>)> {
    let mut res = residuals(data, fitted)?;
    if spec.recenter_residuals {
        res = recenter(res);
    }
    if !spec.kind.is_spatial() {
        return Ok((Noise::Resample(res), None));
    }
    let cfg = spec.spatial.ok_or_else(|| {
        Error::InvalidArgument(format!(
            "{} needs a spatial fit configuration",
            spec.kind.label()
        ))
    })?;
    let post = mh_fit(
        &res,
        data.covariates(),
        cfg,
        &mut substream(spec.seed, &[MCMC_STREAM]),
    )?;
    let sim = FieldSimulator::new(&SpatialModel::from_posterior(&post)?, data.covariates())?;
    Ok((Noise::Field(sim), Some(post)))
}

fn nonparametric_fitted(data: &Dataset, bw: &BandwidthSpec) -> Result<Vec<Angle>> {
    let smoother = LinearSmoother::build(data.covariates(), bw, data.covariates().rows())?;
    let (s, c) = sin_cos(data.responses().iter().copied());
    (0..data.n())
        .map(|i| Ok(smoother.row(i)?.fit(&s, &c)?.m_hat))
        .collect()
}

type ReplicateValues = Vec<Result<StatisticValues>>;

/// Runs B replicates around the null fit and evaluates every plan on each.
fn replicate_values(
    data: &Dataset,
    model: &ParametricModel,
    noise: &Noise,
    plans: &[&StatisticPlan],
    spec: &BatchSpec,
) -> Vec<ReplicateValues> {
    let centers: Vec<f64> = data
        .covariates()
        .rows()
        .map(|x| model.predict(x).radians())
        .collect();
    (0..spec.b)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(spec.seed, &[REPLICATE_STREAM, b as u64]);
            let eps = noise.draw(data.n(), &mut rng);
            let star: Vec<Angle> = centers
                .iter()
                .zip(&eps)
                .map(|(m, e)| e.rotate(*m))
                .collect();
            let boot = match data.with_responses(star) {
                Ok(d) => d,
                Err(e) => return plans.iter().map(|_| Err(e.clone_msg())).collect(),
            };
            let refit = match fit_circular_ls(&boot, spec.fit) {
                Ok(r) => r.model,
                Err(e) => return plans.iter().map(|_| Err(e.clone_msg())).collect(),
            };
            let resp = sin_cos(boot.responses().iter().copied());
            let fit = sin_cos(boot.covariates().rows().map(|x| refit.predict(x)));
            plans
                .iter()
                .map(|p| Ok(p.evaluate((&resp.0, &resp.1), &refit, (&fit.0, &fit.1))))
                .collect()
        })
        .collect()
}

fn assemble(
    which: Statistic,
    spec: &BatchSpec,
    bandwidth: BandwidthSpec,
    observed: &StatisticValues,
    reps: &[&Result<StatisticValues>],
    source: ResidualSource,
    model: &ParametricModel,
    posterior: &Option<PosteriorSummary>,
) -> Result<BootstrapRun> {
    let obs = observed.get(which)?;
    let mut values = Vec::with_capacity(reps.len());
    let mut failed = 0;
    let mut last_error = String::new();
    for r in reps {
        match r
            .as_ref()
            .map_err(|e| e.to_string())
            .and_then(|v| v.get(which).map_err(|e| e.to_string()))
        {
            Ok(t) => values.push(t),
            Err(msg) => {
                failed += 1;
                last_error = msg;
            }
        }
    }
    if failed as f64 > MAX_FAILED_FRACTION * spec.b as f64 {
        return Err(Error::TooManyFailedReplicates {
            failed,
            total: spec.b,
            last_error,
        });
    }
    let p = p_value(obs, &values)?;
    Ok(BootstrapRun {
        scheme: spec.kind,
        statistic: which,
        bandwidth,
        observed: obs,
        replicates: values,
        p_value: p,
        b: spec.b,
        failed_replicates: failed,
        excluded_points: observed.excluded(which),
        residual_source: source,
        null_model: model.clone(),
        posterior: posterior.clone(),
    })
}

/// Runs one bootstrap scheme for several bandwidth settings at once, returning
/// both statistics for each. Parametric residual schemes share a single set of
/// replicates; nonparametric ones need one set per setting.
pub fn run_batch(data: &Dataset, spec: &BatchSpec) -> Result<BatchOutcome> {
    if spec.b == 0 {
        return Err(Error::InvalidArgument("B must be at least 1".into()));
    }
    if spec.kind.is_spatial() && spec.spatial.is_none() {
        return Err(Error::InvalidArgument(format!(
            "{} needs a spatial fit configuration",
            spec.kind.label()
        )));
    }
    let null_fit = fit_circular_ls(data, spec.fit)?;
    let model = &null_fit.model;
    let fitted = model.fitted(data);

    let plans: Vec<Result<StatisticPlan>> = spec
        .bandwidths
        .iter()
        .map(|bw| StatisticPlan::new(data.covariates(), bw, spec.grid, spec.weight))
        .collect();
    let observed: Vec<Result<StatisticValues>> = plans
        .iter()
        .map(|p| {
            p.as_ref()
                .map(|p| p.evaluate_dataset(data, model))
                .map_err(|e| e.clone_msg())
        })
        .collect();

    // Groups of cells sharing a residual source.
    let mut groups: Vec<(ResidualSource, Vec<usize>)> = Vec::new();
    let usable: Vec<usize> = (0..plans.len()).filter(|&i| plans[i].is_ok()).collect();
    if spec.kind.is_nonparametric() {
        for &i in &usable {
            let bw = spec.bandwidths[i];
            let h = spec.residual_bandwidth.unwrap_or(bw.h);
            groups.push((
                ResidualSource::Nonparametric {
                    h,
                    degree: bw.degree,
                },
                vec![i],
            ));
        }
    } else if !usable.is_empty() {
        groups.push((ResidualSource::Parametric, usable));
    }

    let mut per_cell: Vec<Option<(Result<BootstrapRun>, Result<BootstrapRun>)>> =
        (0..plans.len()).map(|_| None).collect();
    for (source, members) in groups {
        let fitted_for_residuals = match source {
            ResidualSource::Parametric => Ok(fitted.clone()),
            ResidualSource::Nonparametric { h, degree } => {
                BandwidthSpec::new(h, degree).and_then(|bw| nonparametric_fitted(data, &bw))
            }
        };
        let noise = fitted_for_residuals.and_then(|f| build_noise(data, spec, &f));
        let (noise, posterior) = match noise {
            Ok(v) => v,
            Err(e) => {
                for &i in &members {
                    per_cell[i] = Some((Err(e.clone_msg()), Err(e.clone_msg())));
                }
                continue;
            }
        };
        let group_plans: Vec<&StatisticPlan> = members
            .iter()
            .map(|&i| plans[i].as_ref().unwrap())
            .collect();
        let reps = replicate_values(data, model, &noise, &group_plans, spec);
        for (slot, &i) in members.iter().enumerate() {
            let column: Vec<&Result<StatisticValues>> = reps.iter().map(|r| &r[slot]).collect();
            let obs = observed[i].as_ref().unwrap();
            let bw = spec.bandwidths[i];
            let t1 = assemble(
                Statistic::T1,
                spec,
                bw,
                obs,
                &column,
                source,
                model,
                &posterior,
            );
            let t2 = assemble(
                Statistic::T2,
                spec,
                bw,
                obs,
                &column,
                source,
                model,
                &posterior,
            );
            per_cell[i] = Some((t1, t2));
        }
    }

    let cells = plans
        .into_iter()
        .zip(per_cell)
        .zip(spec.bandwidths)
        .map(|((plan, outcome), bw)| match (plan, outcome) {
            (Err(e), _) => CellOutcome {
                bandwidth: *bw,
                t1: Err(e.clone_msg()),
                t2: Err(e),
            },
            (Ok(_), Some((t1, t2))) => CellOutcome {
                bandwidth: *bw,
                t1,
                t2,
            },
            (Ok(_), None) => unreachable!("every usable cell belongs to a group"),
        })
        .collect();
    Ok(BatchOutcome { null_fit, cells })
}

fn single(data: &Dataset, cfg: &TestConfig, spec: BatchSpec) -> Result<BootstrapRun> {
    let mut out = run_batch(data, &spec)?;
    out.cells.pop().expect("one cell").into_run(cfg.statistic)
}

/// Algorithm for independent errors: resample residuals from the parametric
/// (PCB) or nonparametric (NPCB) fit, rebuild responses around the null fit,
/// refit, and recompute the statistic B times.
pub fn run_iid_bootstrap(
    data: &Dataset,
    scheme: &BootstrapScheme,
    cfg: &TestConfig,
    fit: &FitConfig,
    seed: u64,
) -> Result<BootstrapRun> {
    if scheme.kind.is_spatial() {
        return Err(Error::InvalidArgument(format!(
            "{} is a spatial scheme; use run_spatial_bootstrap",
            scheme.kind.label()
        )));
    }
    let bws = [cfg.bandwidth];
    let spec = BatchSpec {
        kind: scheme.kind,
        b: scheme.b,
        recenter_residuals: scheme.recenter_residuals,
        residual_bandwidth: scheme.residual_bandwidth,
        bandwidths: &bws,
        grid: &cfg.grid,
        weight: &cfg.weight,
        fit,
        spatial: None,
        seed,
    };
    single(data, cfg, spec)
}

/// Algorithm for spatially correlated errors: fit a wrapped Gaussian process
/// to the residuals once, then draw B fields from its posterior-mean
/// parameters at the observed locations.
pub fn run_spatial_bootstrap(
    data: &Dataset,
    scheme: &BootstrapScheme,
    cfg: &TestConfig,
    spatial: &SpatialFitConfig,
    fit: &FitConfig,
    seed: u64,
) -> Result<BootstrapRun> {
    if !scheme.kind.is_spatial() {
        return Err(Error::InvalidArgument(format!(
            "{} is not a spatial scheme; use run_iid_bootstrap",
            scheme.kind.label()
        )));
    }
    let bws = [cfg.bandwidth];
    let spec = BatchSpec {
        kind: scheme.kind,
        b: scheme.b,
        recenter_residuals: scheme.recenter_residuals,
        residual_bandwidth: scheme.residual_bandwidth,
        bandwidths: &bws,
        grid: &cfg.grid,
        weight: &cfg.weight,
        fit,
        spatial: Some(spatial),
        seed,
    };
    single(data, cfg, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circular::{sample_von_mises, VonMisesParams};
    use crate::dataset::{make_grid, BoxRegion, Points};
    use crate::gof::compute_statistic;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn h0_data(n: usize, kappa: f64, seed: u64) -> Dataset {
        let mut rng = substream(seed, &[]);
        let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let noise = sample_von_mises(
            VonMisesParams::new(Angle::ZERO, kappa).unwrap(),
            n,
            &mut rng,
        );
        let th = xs
            .iter()
            .zip(&noise)
            .map(|(x, e)| e.rotate(2.0 * x.atan()))
            .collect();
        Dataset::new(Points::one_dimensional(&xs).unwrap(), th).unwrap()
    }

    fn cfg(stat: Statistic, p: Degree, h: f64, n: usize) -> TestConfig {
        TestConfig::new(
            stat,
            BandwidthSpec::new(h, p).unwrap(),
            make_grid(&BoxRegion::unit(1), &[101]).unwrap(),
            BoundaryWeight::for_sample_size(n, 1).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn residual_examples() {
        let data = Dataset::new(
            Points::one_dimensional(&[0.0, 1.0]).unwrap(),
            vec![Angle::wrapped(0.1), Angle::wrapped(2.0)],
        )
        .unwrap();
        let r = residuals(&data, data.responses()).unwrap();
        assert!(r.iter().all(|e| e.radians() == 0.0));
        let shifted: Vec<Angle> = data
            .responses()
            .iter()
            .map(|t| t.rotate(-PI / 3.0))
            .collect();
        let r = residuals(&data, &shifted).unwrap();
        assert!(r.iter().all(|e| (e.radians() - PI / 3.0).abs() < 1e-12));
        let one = Dataset::new(
            Points::one_dimensional(&[0.0]).unwrap(),
            vec![Angle::wrapped(0.1)],
        )
        .unwrap();
        let r = residuals(&one, &[Angle::wrapped(6.2)]).unwrap();
        assert_abs_diff_eq!(r[0].radians(), 0.1 - 6.2 + 2.0 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(r[0].radians(), 0.18319, epsilon = 1e-5);
        assert!(residuals(&one, &[]).is_err());
    }

    #[test]
    fn seeded_runs_are_identical_and_p_values_are_on_the_lattice() {
        let data = h0_data(60, 10.0, 3);
        let scheme = BootstrapScheme::new(SchemeKind::Pcb, 40).unwrap();
        let c = cfg(Statistic::T2, Degree::Linear, 0.45, 60);
        let a = run_iid_bootstrap(&data, &scheme, &c, &FitConfig::default(), 17).unwrap();
        let b = run_iid_bootstrap(&data, &scheme, &c, &FitConfig::default(), 17).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.replicates.len(), 40);
        assert_eq!((a.p_value * 40.0).fract(), 0.0);
        assert_eq!(a.p_value, p_value(a.observed, &a.replicates).unwrap());
        let obs = compute_statistic(&data, &a.null_model, &c).unwrap();
        assert_eq!(obs, a.observed);
    }

    #[test]
    fn batch_matches_single_runs() {
        let data = h0_data(50, 10.0, 8);
        let grid = make_grid(&BoxRegion::unit(1), &[101]).unwrap();
        let weight = BoundaryWeight::for_sample_size(50, 1).unwrap();
        let bws = [
            BandwidthSpec::new(0.25, Degree::Constant).unwrap(),
            BandwidthSpec::new(0.45, Degree::Linear).unwrap(),
        ];
        for kind in [SchemeKind::Pcb, SchemeKind::Npcb] {
            let spec = BatchSpec {
                kind,
                b: 20,
                recenter_residuals: false,
                residual_bandwidth: None,
                bandwidths: &bws,
                grid: &grid,
                weight: &weight,
                fit: &FitConfig::default(),
                spatial: None,
                seed: 5,
            };
            let batch = run_batch(&data, &spec).unwrap();
            for (cell, bw) in batch.cells.iter().zip(&bws) {
                for stat in [Statistic::T1, Statistic::T2] {
                    let c = TestConfig::new(stat, *bw, grid.clone(), weight.clone()).unwrap();
                    let single = run_iid_bootstrap(
                        &data,
                        &BootstrapScheme::new(kind, 20).unwrap(),
                        &c,
                        &FitConfig::default(),
                        5,
                    )
                    .unwrap();
                    assert_eq!(cell.get(stat).as_ref().unwrap(), &single);
                }
            }
        }
    }

    #[test]
    fn noiseless_null_gives_constant_replicates() {
        let xs: Vec<f64> = (0..40).map(|i| (i as f64 + 0.5) / 40.0).collect();
        let th = xs
            .iter()
            .map(|x| Angle::wrapped(0.3 + 2.0 * x.atan()))
            .collect();
        let data = Dataset::new(Points::one_dimensional(&xs).unwrap(), th).unwrap();
        let c = cfg(Statistic::T1, Degree::Linear, 0.35, 40);
        let run = run_iid_bootstrap(
            &data,
            &BootstrapScheme::new(SchemeKind::Pcb, 10).unwrap(),
            &c,
            &FitConfig::default(),
            1,
        )
        .unwrap();
        let first = run.replicates[0];
        assert!(run.replicates.iter().all(|t| (t - first).abs() < 1e-12));
        assert!((run.observed - first).abs() < 1e-12);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let data = h0_data(50, 10.0, 21);
        let c = cfg(Statistic::T2, Degree::Linear, 0.45, 50);
        let scheme = BootstrapScheme::new(SchemeKind::Npcb, 24).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    run_iid_bootstrap(&data, &scheme, &c, &FitConfig::default(), 9).unwrap()
                })
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn scheme_kind_mismatches_are_rejected() {
        let data = h0_data(30, 10.0, 1);
        let c = cfg(Statistic::T1, Degree::Constant, 0.45, 30);
        let spatial = BootstrapScheme::new(SchemeKind::Pscb, 5).unwrap();
        assert!(run_iid_bootstrap(&data, &spatial, &c, &FitConfig::default(), 0).is_err());
        let iid = BootstrapScheme::new(SchemeKind::Pcb, 5).unwrap();
        assert!(run_spatial_bootstrap(
            &data,
            &iid,
            &c,
            &SpatialFitConfig::default(),
            &FitConfig::default(),
            0
        )
        .is_err());
        assert!(BootstrapScheme::new(SchemeKind::Pcb, 0).is_err());
        assert_eq!("npscb".parse::<SchemeKind>().unwrap(), SchemeKind::Npscb);
    }

    fn grid_data(side: usize, sigma2: f64, seed: u64) -> Dataset {
        let mut rows = Vec::new();
        for i in 0..side {
            for j in 0..side {
                rows.push([i as f64 / (side - 1) as f64, j as f64 / (side - 1) as f64]);
            }
        }
        let pts = Points::from_rows(&rows).unwrap();
        let model = SpatialModel {
            mu: Angle::ZERO,
            cov: crate::spatial::ExponentialCovariance::new(sigma2, 0.3).unwrap(),
        };
        let eps = crate::spatial::simulate_field(&model, &pts, &mut substream(seed, &[])).unwrap();
        let th = pts
            .rows()
            .zip(&eps)
            .map(|(x, e)| e.rotate(2.0 * (x[1] - x[0]).atan()))
            .collect();
        Dataset::new(pts, th).unwrap()
    }

    #[test]
    fn spatial_bootstrap_runs_and_reports_posterior() {
        let data = grid_data(7, 1.0, 2);
        let c = TestConfig::new(
            Statistic::T1,
            BandwidthSpec::new(0.55, Degree::Linear).unwrap(),
            make_grid(&BoxRegion::unit(2), &[21, 21]).unwrap(),
            BoundaryWeight::for_sample_size(49, 2).unwrap(),
        )
        .unwrap();
        let spatial = SpatialFitConfig {
            iterations: 600,
            burn_in: 200,
            ..Default::default()
        };
        let scheme = BootstrapScheme::new(SchemeKind::Pscb, 12).unwrap();
        let run =
            run_spatial_bootstrap(&data, &scheme, &c, &spatial, &FitConfig::default(), 4).unwrap();
        assert!(run.posterior.is_some());
        assert_eq!(run.replicates.len() + run.failed_replicates, 12);
        assert!((0.0..=1.0).contains(&run.p_value));
    }

    #[test]
    fn degenerate_field_gives_nearly_constant_replicates() {
        let data = grid_data(6, 1e-10, 3);
        let c = TestConfig::new(
            Statistic::T1,
            BandwidthSpec::new(0.7, Degree::Linear).unwrap(),
            make_grid(&BoxRegion::unit(2), &[15, 15]).unwrap(),
            BoundaryWeight::for_sample_size(36, 2).unwrap(),
        )
        .unwrap();
        let spatial = SpatialFitConfig {
            iterations: 400,
            burn_in: 100,
            sigma2_prior: crate::spatial::TruncatedInverseGamma {
                shape: 2.0,
                scale: 1e-12,
                lower: 1e-12,
                upper: 1e-9,
            },
            ..Default::default()
        };
        let scheme = BootstrapScheme::new(SchemeKind::Pscb, 8).unwrap();
        let run =
            run_spatial_bootstrap(&data, &scheme, &c, &spatial, &FitConfig::default(), 4).unwrap();
        let lo = run.replicates.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = run.replicates.iter().cloned().fold(0.0, f64::max);
        assert!(hi - lo < 1e-6, "{lo} {hi}");
    }
}
