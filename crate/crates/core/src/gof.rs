//! Test statistics comparing the parametric and nonparametric fits, and the
//! bootstrap p-value.

use serde::{Deserialize, Serialize};

use crate::dataset::{
    default_resolution, make_grid, BoundaryWeight, BoxRegion, Dataset, EvalGrid, Points,
};
use crate::error::{Error, Result};
use crate::nonparam::{sin_cos, BandwidthSpec, Degree, LinearSmoother};
use crate::param::ParametricModel;

/// Largest fraction of weighted grid points that may be excluded before a
/// statistic is declared unreliable.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    /// Nonparametric fit against the parametric fit.
    T1,
    /// Nonparametric fit against the smoothed parametric fit.
    T2,
}

impl Statistic {
    pub fn label(self) -> &'static str {
        match self {
            Statistic::T1 => "T1",
            Statistic::T2 => "T2",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub statistic: Statistic,
    pub bandwidth: BandwidthSpec,
    pub grid: EvalGrid,
    pub weight: BoundaryWeight,
}

impl TestConfig {
    pub fn new(
        statistic: Statistic,
        bandwidth: BandwidthSpec,
        grid: EvalGrid,
        weight: BoundaryWeight,
    ) -> Result<Self> {
        if grid.points.dim() != weight.region.dim() {
            return Err(Error::InvalidArgument(
                "grid and weight function have different dimensions".into(),
            ));
        }
        Ok(Self {
            statistic,
            bandwidth,
            grid,
            weight,
        })
    }

    /// Unit-box domain, default grid, and the `[1/√n, 1 − 1/√n]^d` weight.
    pub fn standard(
        statistic: Statistic,
        degree: Degree,
        h: f64,
        n: usize,
        dim: usize,
    ) -> Result<Self> {
        let grid = make_grid(&BoxRegion::unit(dim), &default_resolution(dim))?;
        Self::new(
            statistic,
            BandwidthSpec::new(h, degree)?,
            grid,
            BoundaryWeight::for_sample_size(n, dim)?,
        )
    }
}

/// The covariate-dependent part of both statistics for one bandwidth: the
/// weighted grid points and their smoother rows.
#[derive(Clone, Debug)]
pub struct StatisticPlan {
    pub bandwidth: BandwidthSpec,
    points: Points,
    weights: Vec<f64>,
    smoother: LinearSmoother,
    cell_measure: f64,
}

/// Both statistics from one pass over the grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatisticValues {
    pub t1: f64,
    pub t2: f64,
    pub excluded_t1: usize,
    pub excluded_t2: usize,
    pub weighted: usize,
}

impl StatisticValues {
    pub fn excluded(&self, which: Statistic) -> usize {
        match which {
            Statistic::T1 => self.excluded_t1,
            Statistic::T2 => self.excluded_t2,
        }
    }

    /// The requested statistic, unless too many grid points were excluded.
    pub fn get(&self, which: Statistic) -> Result<f64> {
        let (v, excluded) = match which {
            Statistic::T1 => (self.t1, self.excluded_t1),
            Statistic::T2 => (self.t2, self.excluded_t2),
        };
        if excluded as f64 > MAX_EXCLUDED_FRACTION * self.weighted as f64 {
            return Err(Error::UnreliableStatistic {
                excluded,
                weighted: self.weighted,
            });
        }
        Ok(v)
    }
}

impl StatisticPlan {
    pub fn new(
        covariates: &Points,
        bandwidth: &BandwidthSpec,
        grid: &EvalGrid,
        weight: &BoundaryWeight,
    ) -> Result<Self> {
        if covariates.dim() != grid.points.dim() {
            return Err(Error::InvalidArgument(format!(
                "grid has dimension {}, covariates have {}",
                grid.points.dim(),
                covariates.dim()
            )));
        }
        let mut coords = Vec::new();
        let mut weights = Vec::new();
        for x in grid.points.rows() {
            // Cells straddling the trimming edge count by their covered
            // fraction; whole-cell inclusion costs several percent in 2D.
            let w = weight.cell_fraction(x, &grid.half_widths);
            if w > 0.0 {
                coords.extend_from_slice(x);
                weights.push(w);
            }
        }
        if weights.is_empty() {
            return Err(Error::InvalidArgument(
                "weight function vanishes on every grid point".into(),
            ));
        }
        let points = Points::new(covariates.dim(), coords)?;
        let smoother = LinearSmoother::build(covariates, bandwidth, points.rows())?;
        Ok(Self {
            bandwidth: *bandwidth,
            points,
            weights,
            smoother,
            cell_measure: grid.cell_measure,
        })
    }

    pub fn from_config(data: &Dataset, cfg: &TestConfig) -> Result<Self> {
        Self::new(data.covariates(), &cfg.bandwidth, &cfg.grid, &cfg.weight)
    }

    pub fn weighted_points(&self) -> &Points {
        &self.points
    }

    /// Evaluates both statistics. `responses` and `fitted` are the sines and
    /// cosines of `Θᵢ` and of `m_β̂(Xᵢ)`.
    pub fn evaluate(
        &self,
        responses: (&[f64], &[f64]),
        model: &ParametricModel,
        fitted: (&[f64], &[f64]),
    ) -> StatisticValues {
        let mut out = StatisticValues {
            t1: 0.0,
            t2: 0.0,
            excluded_t1: 0,
            excluded_t2: 0,
            weighted: self.weights.len(),
        };
        for (k, (x, &w)) in self.points.rows().zip(&self.weights).enumerate() {
            let Ok(row) = self.smoother.row(k) else {
                out.excluded_t1 += 1;
                out.excluded_t2 += 1;
                continue;
            };
            let Ok(np) = row.fit(responses.0, responses.1) else {
                out.excluded_t1 += 1;
                out.excluded_t2 += 1;
                continue;
            };
            let m = np.m_hat.radians();
            out.t1 += (1.0 - (m - model.predict(x).radians()).cos()) * w;
            match row.fit(fitted.0, fitted.1) {
                Ok(sp) => out.t2 += (1.0 - (m - sp.m_hat.radians()).cos()) * w,
                Err(_) => out.excluded_t2 += 1,
            }
        }
        out.t1 *= self.cell_measure;
        out.t2 *= self.cell_measure;
        out
    }

    /// Convenience wrapper computing the sines and cosines itself.
    pub fn evaluate_dataset(&self, data: &Dataset, model: &ParametricModel) -> StatisticValues {
        let (rs, rc) = sin_cos(data.responses().iter().copied());
        let (fs, fc) = sin_cos(data.covariates().rows().map(|x| model.predict(x)));
        self.evaluate((&rs, &rc), model, (&fs, &fc))
    }
}

/// Both statistics for `data` under `cfg`'s bandwidth, grid and weight.
pub fn evaluate_statistics(
    data: &Dataset,
    model: &ParametricModel,
    cfg: &TestConfig,
) -> Result<StatisticValues> {
    Ok(StatisticPlan::from_config(data, cfg)?.evaluate_dataset(data, model))
}

fn require(cfg: &TestConfig, which: Statistic) -> Result<()> {
    if cfg.statistic != which {
        return Err(Error::InvalidArgument(format!(
            "configuration is for {}, not {}",
            cfg.statistic.label(),
            which.label()
        )));
    }
    Ok(())
}

/// `∫ {1 − cos[m̂_H(x;p) − m_β̂(x)]} w(x) dx` by midpoint quadrature.
pub fn statistic_t1(data: &Dataset, model: &ParametricModel, cfg: &TestConfig) -> Result<f64> {
    require(cfg, Statistic::T1)?;
    evaluate_statistics(data, model, cfg)?.get(Statistic::T1)
}

/// As [`statistic_t1`] with the smoothed parametric fit in place of `m_β̂`.
pub fn statistic_t2(data: &Dataset, model: &ParametricModel, cfg: &TestConfig) -> Result<f64> {
    require(cfg, Statistic::T2)?;
    evaluate_statistics(data, model, cfg)?.get(Statistic::T2)
}

/// The statistic selected by `cfg.statistic`.
pub fn compute_statistic(data: &Dataset, model: &ParametricModel, cfg: &TestConfig) -> Result<f64> {
    evaluate_statistics(data, model, cfg)?.get(cfg.statistic)
}

/// `(1/B) #{T*_b > T}`.
pub fn p_value(observed: f64, replicates: &[f64]) -> Result<f64> {
    if replicates.is_empty() {
        return Err(Error::InvalidArgument("no bootstrap replicates".into()));
    }
    let exceed = replicates.iter().filter(|&&t| t > observed).count();
    Ok(exceed as f64 / replicates.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub observed: f64,
    pub boot: Vec<f64>,
    pub p_value: f64,
    pub excluded_points: usize,
    pub config: TestConfig,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circular::{wrap, Angle};
    use crate::nonparam::estimate_m;
    use crate::nonparam::smooth_parametric;
    use crate::param::{fit_circular_ls, FitConfig};
    use crate::rng::substream;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use std::f64::consts::PI;

    fn toy() -> Dataset {
        let xs = [0.05, 0.14, 0.22, 0.31, 0.45, 0.52, 0.61, 0.77, 0.86, 0.95];
        let th = [0.1, 0.35, 0.3, 0.7, 0.8, 1.2, 1.1, 1.6, 1.5, 1.9];
        Dataset::new(
            Points::one_dimensional(&xs).unwrap(),
            th.iter().map(|t| wrap(*t).unwrap()).collect(),
        )
        .unwrap()
    }

    fn cfg(stat: Statistic, degree: Degree, h: f64, res: usize) -> TestConfig {
        TestConfig::new(
            stat,
            BandwidthSpec::new(h, degree).unwrap(),
            make_grid(&BoxRegion::unit(1), &[res]).unwrap(),
            BoundaryWeight::everywhere(&BoxRegion::unit(1)),
        )
        .unwrap()
    }

    #[test]
    fn p_value_examples() {
        assert_eq!(p_value(2.5, &[1.0, 2.0, 3.0, 4.0]).unwrap(), 0.5);
        assert_eq!(p_value(10.0, &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(p_value(0.25, &[0.1, 0.2, 0.3, 0.4]).unwrap(), 0.5);
        // Ties do not count as exceedances.
        assert_eq!(p_value(2.0, &[2.0, 2.0]).unwrap(), 0.0);
        assert!(p_value(1.0, &[]).is_err());
    }

    #[test]
    fn four_point_direct_evaluation() {
        let data = toy();
        let model = ParametricModel::new(Angle::wrapped(0.1), vec![1.2]);
        let grid = [0.125, 0.375, 0.625, 0.875];
        let bw = BandwidthSpec::new(0.5, Degree::Constant).unwrap();
        let t1: f64 = grid
            .iter()
            .map(|&x| {
                let m = estimate_m(&data, &bw, &[x]).unwrap().m_hat.radians();
                0.25 * (1.0 - (m - 0.1 - 2.0 * (1.2 * x).atan()).cos())
            })
            .sum();
        let t2: f64 = grid
            .iter()
            .map(|&x| {
                let m = estimate_m(&data, &bw, &[x]).unwrap().m_hat.radians();
                let s = smooth_parametric(&data, &model, &bw, &[x])
                    .unwrap()
                    .m_hat
                    .radians();
                0.25 * (1.0 - (m - s).cos())
            })
            .sum();
        let got1 =
            statistic_t1(&data, &model, &cfg(Statistic::T1, Degree::Constant, 0.5, 4)).unwrap();
        let got2 =
            statistic_t2(&data, &model, &cfg(Statistic::T2, Degree::Constant, 0.5, 4)).unwrap();
        assert_abs_diff_eq!(got1, t1, epsilon = 1e-14);
        assert_abs_diff_eq!(got2, t2, epsilon = 1e-14);
        assert!(
            statistic_t1(&data, &model, &cfg(Statistic::T2, Degree::Constant, 0.5, 4)).is_err()
        );
    }

    #[test]
    fn identical_and_antipodal_fits() {
        // Constant responses: nonparametric fit equals the flat model everywhere.
        let xs: Vec<f64> = (0..30).map(|i| i as f64 / 29.0).collect();
        let data = Dataset::new(
            Points::one_dimensional(&xs).unwrap(),
            vec![Angle::wrapped(0.8); 30],
        )
        .unwrap();
        let flat = ParametricModel::new(Angle::wrapped(0.8), vec![0.0]);
        let anti = ParametricModel::new(Angle::wrapped(0.8 + PI), vec![0.0]);
        for p in [Degree::Constant, Degree::Linear] {
            let c1 = cfg(Statistic::T1, p, 0.3, 50);
            let c2 = cfg(Statistic::T2, p, 0.3, 50);
            assert_abs_diff_eq!(
                statistic_t1(&data, &flat, &c1).unwrap(),
                0.0,
                epsilon = 1e-14
            );
            assert_abs_diff_eq!(
                statistic_t2(&data, &flat, &c2).unwrap(),
                0.0,
                epsilon = 1e-14
            );
            assert_abs_diff_eq!(
                statistic_t1(&data, &anti, &c1).unwrap(),
                2.0,
                epsilon = 1e-12
            );
            assert_abs_diff_eq!(
                statistic_t2(&data, &anti, &c2).unwrap(),
                2.0,
                epsilon = 1e-12
            );
        }
        // Weighted region of measure 0.6.
        let mut c = cfg(Statistic::T1, Degree::Linear, 0.3, 50);
        c.weight = BoundaryWeight::new(vec![0.2], vec![0.8]).unwrap();
        assert_abs_diff_eq!(
            statistic_t1(&data, &anti, &c).unwrap(),
            1.2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn t2_vanishes_on_exact_fit() {
        let model = ParametricModel::new(Angle::wrapped(5.0), vec![2.0]);
        let base = toy();
        let data = base.with_responses(model.fitted(&base)).unwrap();
        for p in [Degree::Constant, Degree::Linear] {
            let c = cfg(Statistic::T2, p, 0.4, 40);
            assert_abs_diff_eq!(
                statistic_t2(&data, &model, &c).unwrap(),
                0.0,
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn unreliable_when_windows_are_empty() {
        let data = toy();
        let model = ParametricModel::new(Angle::ZERO, vec![1.0]);
        let c = cfg(Statistic::T1, Degree::Constant, 0.02, 100);
        assert!(matches!(
            statistic_t1(&data, &model, &c),
            Err(Error::UnreliableStatistic { .. })
        ));
    }

    fn noisy(n: usize, seed: u64) -> Dataset {
        let mut rng = substream(seed, &[]);
        let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let th: Vec<Angle> = xs
            .iter()
            .map(|x| {
                Angle::wrapped(
                    2.0 * x.atan()
                        + 0.8 * (2.0 * x.powi(5) - 1.0).asin()
                        + 0.3 * (rng.random::<f64>() - 0.5),
                )
            })
            .collect();
        Dataset::new(Points::one_dimensional(&xs).unwrap(), th).unwrap()
    }

    #[test]
    fn rotation_invariance() {
        let data = noisy(80, 2);
        let rot = data
            .with_responses(data.responses().iter().map(|t| t.rotate(4.0)).collect())
            .unwrap();
        let fa = fit_circular_ls(&data, &FitConfig::default()).unwrap().model;
        let fb = fit_circular_ls(&rot, &FitConfig::default()).unwrap().model;
        for p in [Degree::Constant, Degree::Linear] {
            let c = TestConfig::standard(Statistic::T1, p, 0.3, 80, 1).unwrap();
            let a = evaluate_statistics(&data, &fa, &c).unwrap();
            let b = evaluate_statistics(&rot, &fb, &c).unwrap();
            assert!((a.t1 - b.t1).abs() < 1e-6);
            assert!((a.t2 - b.t2).abs() < 1e-6);
        }
    }

    #[test]
    fn quadrature_converges_under_refinement() {
        let data = noisy(100, 5);
        let model = fit_circular_ls(&data, &FitConfig::default()).unwrap().model;
        for p in [Degree::Constant, Degree::Linear] {
            let coarse =
                evaluate_statistics(&data, &model, &cfg(Statistic::T1, p, 0.35, 201)).unwrap();
            let fine =
                evaluate_statistics(&data, &model, &cfg(Statistic::T1, p, 0.35, 402)).unwrap();
            assert!((coarse.t1 - fine.t1).abs() < 0.01 * fine.t1);
            assert!((coarse.t2 - fine.t2).abs() < 0.01 * fine.t2);
        }
    }
}
