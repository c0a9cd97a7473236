//! Simulation scenarios and the Monte Carlo driver producing rejection
//! proportion tables.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{run_batch, BatchSpec, SchemeKind};
use crate::circular::{sample_von_mises, wrap, Angle, VonMisesParams};
use crate::dataset::{default_resolution, make_grid, BoundaryWeight, BoxRegion, Dataset, Points};
use crate::error::{Error, Result};
use crate::gof::Statistic;
use crate::nonparam::{BandwidthSpec, Degree};
use crate::param::FitConfig;
use crate::rng::{derive_seed, substream};
use crate::spatial::{simulate_field, ExponentialCovariance, SpatialFitConfig, SpatialModel};

/// Largest fraction of failed Monte Carlo repeats before a cell is invalid.
pub const MAX_FAILED_REPEATS: f64 = 0.05;

const DATA_STREAM: u64 = 10;
const BOOT_STREAM: u64 = 11;

/// `wrap(2·atan(x) + c·asin(2x⁵ − 1))` on `[0, 1]`.
pub fn true_m_uni(x: f64, c: f64) -> Result<Angle> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x = {x} is outside [0, 1]")));
    }
    wrap(2.0 * x.atan() + c * (2.0 * x.powi(5) - 1.0).asin())
}

/// `wrap(2·atan(−x₁ + x₂) + c·asin(2x₁³ − 1))` for `x₁ ∈ [0, 1]`.
pub fn true_m_bi(x: &[f64], c: f64) -> Result<Angle> {
    if x.len() != 2 {
        return Err(Error::InvalidArgument(format!(
            "expected a 2-vector, got length {}",
            x.len()
        )));
    }
    if !(0.0..=1.0).contains(&x[0]) {
        return Err(Error::Domain(format!("x1 = {} is outside [0, 1]", x[0])));
    }
    wrap(2.0 * (x[1] - x[0]).atan() + c * (2.0 * x[0].powi(3) - 1.0).asin())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ErrorModel {
    VonMises { kappa: f64 },
    WrappedGaussian { sigma2: f64, a_e: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    #[default]
    UniformIid,
    /// `n^(1/d)` equispaced points per axis including both ends.
    RegularGrid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub dim: usize,
    pub c: f64,
    pub n: usize,
    pub errors: ErrorModel,
    #[serde(default)]
    pub design: Design,
    pub bandwidths: Vec<f64>,
    pub statistics: Vec<Statistic>,
    pub degrees: Vec<Degree>,
    pub schemes: Vec<SchemeKind>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(rename = "MC")]
    pub mc: usize,
    #[serde(rename = "B")]
    pub b: usize,
    pub seed: u64,
    /// Quadrature resolution per axis; the dimension default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_resolution: Option<Vec<usize>>,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spatial_fit: Option<SpatialFitConfig>,
}

fn default_alpha() -> f64 {
    0.05
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.dim != 1 && self.dim != 2 {
            return bad(format!("dimension must be 1 or 2, got {}", self.dim));
        }
        if self.n < self.dim + 2 {
            return bad(format!("sample size {} is too small", self.n));
        }
        if self.design == Design::RegularGrid {
            let side = grid_side(self.n, self.dim);
            if side.map_or(true, |s| s < 2) {
                return bad(format!(
                    "n = {} is not a perfect power for a {}-d grid",
                    self.n, self.dim
                ));
            }
        }
        if self.bandwidths.is_empty() || self.bandwidths.iter().any(|h| !(*h > 0.0)) {
            return bad("bandwidths must be a nonempty list of positive values".into());
        }
        if self.statistics.is_empty() || self.degrees.is_empty() || self.schemes.is_empty() {
            return bad("statistics, degrees and schemes must be nonempty".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.mc == 0 || self.b == 0 {
            return bad("MC and B must be at least 1".into());
        }
        match self.errors {
            ErrorModel::VonMises { kappa } => {
                VonMisesParams::new(Angle::ZERO, kappa)?;
                if self.schemes.iter().any(|k| k.is_spatial()) {
                    return bad("spatial bootstrap schemes need wrapped Gaussian errors".into());
                }
            }
            ErrorModel::WrappedGaussian { sigma2, a_e } => {
                ExponentialCovariance::new(sigma2, a_e)?;
            }
        }
        if let Some(r) = &self.grid_resolution {
            if r.len() != self.dim {
                return bad("grid_resolution length must equal dim".into());
            }
        }
        if let Some(s) = &self.spatial_fit {
            s.validate()?;
        }
        Ok(())
    }

    pub fn true_m(&self, x: &[f64]) -> Result<Angle> {
        match self.dim {
            1 => true_m_uni(x[0], self.c),
            _ => true_m_bi(x, self.c),
        }
    }

    fn bandwidth_specs(&self) -> Result<Vec<BandwidthSpec>> {
        let mut out = Vec::new();
        for &p in &self.degrees {
            for &h in &self.bandwidths {
                out.push(BandwidthSpec::new(h, p)?);
            }
        }
        Ok(out)
    }
}

fn grid_side(n: usize, dim: usize) -> Option<usize> {
    let s = (n as f64).powf(1.0 / dim as f64).round() as usize;
    (s.pow(dim as u32) == n).then_some(s)
}

fn covariates<R: Rng + ?Sized>(scn: &Scenario, rng: &mut R) -> Result<Points> {
    match scn.design {
        Design::UniformIid => Points::new(
            scn.dim,
            (0..scn.n * scn.dim).map(|_| rng.random::<f64>()).collect(),
        ),
        Design::RegularGrid => {
            let s = grid_side(scn.n, scn.dim).ok_or_else(|| {
                Error::InvalidArgument(format!("n = {} does not form a grid", scn.n))
            })?;
            let axis: Vec<f64> = (0..s).map(|i| i as f64 / (s - 1) as f64).collect();
            let mut coords = Vec::with_capacity(scn.n * scn.dim);
            if scn.dim == 1 {
                coords.extend(&axis);
            } else {
                for &a in &axis {
                    for &b in &axis {
                        coords.push(a);
                        coords.push(b);
                    }
                }
            }
            Points::new(scn.dim, coords)
        }
    }
}

/// Covariates per the design and responses `wrap(m(Xᵢ) + εᵢ)`.
pub fn generate_dataset<R: Rng + ?Sized>(scn: &Scenario, rng: &mut R) -> Result<Dataset> {
    let x = covariates(scn, rng)?;
    let eps = match scn.errors {
        ErrorModel::VonMises { kappa } => {
            sample_von_mises(VonMisesParams::new(Angle::ZERO, kappa)?, scn.n, rng)
        }
        ErrorModel::WrappedGaussian { sigma2, a_e } => {
            let model = SpatialModel {
                mu: Angle::ZERO,
                cov: ExponentialCovariance::new(sigma2, a_e)?,
            };
            simulate_field(&model, &x, rng)?
        }
    };
    let th = x
        .rows()
        .zip(&eps)
        .map(|(xi, e)| Ok(e.rotate(scn.true_m(xi)?.radians())))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(x, th)
}

/// One p-value (or failure) from one Monte Carlo repeat.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepeatRecord {
    pub c: f64,
    pub factor: f64,
    pub repeat: usize,
    pub scheme: SchemeKind,
    pub statistic: Statistic,
    pub degree: Degree,
    pub h: f64,
    pub observed: Option<f64>,
    pub p_value: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub degree: Degree,
    pub c: f64,
    /// Value of the factor varied by the table (n, κ or a_e).
    pub factor: f64,
    pub scheme: SchemeKind,
    pub statistic: Statistic,
    pub h: f64,
    pub rejections: usize,
    pub valid_repeats: usize,
    pub failed_repeats: usize,
    /// `rejections / valid_repeats`; absent when the cell is invalid.
    pub proportion: Option<f64>,
    pub standard_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RejectionTable {
    pub factor_name: String,
    pub alpha: f64,
    #[serde(rename = "MC")]
    pub mc: usize,
    #[serde(rename = "B")]
    pub b: usize,
    pub bandwidths: Vec<f64>,
    pub cells: Vec<TableCell>,
    pub log: Vec<RepeatRecord>,
}

impl RejectionTable {
    pub fn cell(
        &self,
        degree: Degree,
        c: f64,
        factor: f64,
        scheme: SchemeKind,
        statistic: Statistic,
        h: f64,
    ) -> Option<&TableCell> {
        self.cells.iter().find(|k| {
            k.degree == degree
                && k.c == c
                && k.factor == factor
                && k.scheme == scheme
                && k.statistic == statistic
                && (k.h - h).abs() < 1e-9
        })
    }

    pub fn append(&mut self, other: RejectionTable) {
        self.cells.extend(other.cells);
        self.log.extend(other.log);
    }

    /// One row per (estimator, c, factor, method), one column per bandwidth.
    pub fn write_wide_csv<W: Write>(&self, w: W, statistic: Statistic) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec![
            "Estimator".to_string(),
            "c".to_string(),
            self.factor_name.clone(),
            "Method".to_string(),
        ];
        header.extend(self.bandwidths.iter().map(|h| format!("h={h:.2}")));
        out.write_record(&header)?;
        let mut keys: Vec<(Degree, f64, f64, SchemeKind)> = Vec::new();
        for k in self.cells.iter().filter(|k| k.statistic == statistic) {
            let key = (k.degree, k.c, k.factor, k.scheme);
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
        keys.sort_by(|a, b| {
            a.0.cmp(&b.0)
                .then(a.1.total_cmp(&b.1))
                .then(a.2.total_cmp(&b.2))
                .then(a.3.cmp(&b.3))
        });
        for (degree, c, factor, scheme) in keys {
            let mut rec = vec![
                degree.label().to_string(),
                format_number(c),
                format_number(factor),
                scheme.label().to_string(),
            ];
            for &h in &self.bandwidths {
                let v = self
                    .cell(degree, c, factor, scheme, statistic, h)
                    .and_then(|k| k.proportion)
                    .map(|p| format!("{p:.3}"))
                    .unwrap_or_else(|| "NA".into());
                rec.push(v);
            }
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    /// One row per cell with counts and the Monte Carlo standard error.
    pub fn write_long_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "estimator",
            "p",
            "c",
            &self.factor_name,
            "method",
            "statistic",
            "h",
            "rejections",
            "valid",
            "failed",
            "proportion",
            "se",
        ])?;
        for k in &self.cells {
            out.write_record([
                k.degree.label().to_string(),
                k.degree.order().to_string(),
                format_number(k.c),
                format_number(k.factor),
                k.scheme.label().to_string(),
                k.statistic.label().to_string(),
                format!("{:.2}", k.h),
                k.rejections.to_string(),
                k.valid_repeats.to_string(),
                k.failed_repeats.to_string(),
                k.proportion
                    .map(|p| format!("{p:.6}"))
                    .unwrap_or_else(|| "NA".into()),
                k.standard_error
                    .map(|p| format!("{p:.6}"))
                    .unwrap_or_else(|| "NA".into()),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Per-repeat p-values, enough to recompute every cell.
    pub fn write_repeat_log<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "c",
            &self.factor_name,
            "repeat",
            "method",
            "statistic",
            "p",
            "h",
            "observed",
            "p_value",
            "error",
        ])?;
        for r in &self.log {
            out.write_record([
                format_number(r.c),
                format_number(r.factor),
                r.repeat.to_string(),
                r.scheme.label().to_string(),
                r.statistic.label().to_string(),
                r.degree.order().to_string(),
                format!("{:.2}", r.h),
                r.observed.map(|v| format!("{v:?}")).unwrap_or_default(),
                r.p_value.map(|v| format!("{v:?}")).unwrap_or_default(),
                r.error.clone().unwrap_or_default(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Factor varied across the rows of a table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    N,
    Kappa,
    RangeAe,
}

impl Factor {
    pub fn column(self) -> &'static str {
        match self {
            Factor::N => "n",
            Factor::Kappa => "kappa",
            Factor::RangeAe => "a_e",
        }
    }

    pub fn value(self, scn: &Scenario) -> f64 {
        match (self, scn.errors) {
            (Factor::N, _) => scn.n as f64,
            (Factor::Kappa, ErrorModel::VonMises { kappa }) => kappa,
            (Factor::RangeAe, ErrorModel::WrappedGaussian { a_e, .. }) => a_e,
            _ => f64::NAN,
        }
    }
}

/// Runs every (scheme, degree, h) combination on `scn.mc` simulated datasets
/// and tabulates rejection proportions at `scn.alpha`. Cells use `factor` to
/// label the row.
pub fn run_experiment_with_factor(scn: &Scenario, factor: Factor) -> Result<RejectionTable> {
    scn.validate()?;
    let bws = scn.bandwidth_specs()?;
    let resolution = scn
        .grid_resolution
        .clone()
        .unwrap_or_else(|| default_resolution(scn.dim));
    let grid = make_grid(&BoxRegion::unit(scn.dim), &resolution)?;
    let weight = BoundaryWeight::for_sample_size(scn.n, scn.dim)?;
    let spatial = scn.spatial_fit.clone().unwrap_or_default();
    let factor_value = factor.value(scn);

    let repeats: Vec<Vec<RepeatRecord>> = (0..scn.mc)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(scn.seed, &[DATA_STREAM, r as u64]);
            let data = generate_dataset(scn, &mut rng);
            let mut records = Vec::new();
            for &kind in &scn.schemes {
                let spec = BatchSpec {
                    kind,
                    b: scn.b,
                    recenter_residuals: false,
                    residual_bandwidth: None,
                    bandwidths: &bws,
                    grid: &grid,
                    weight: &weight,
                    fit: &scn.fit,
                    spatial: Some(&spatial),
                    seed: derive_seed(scn.seed, &[BOOT_STREAM, r as u64, kind as u64]),
                };
                let outcome = data
                    .as_ref()
                    .map_err(|e| e.clone_msg())
                    .and_then(|d| run_batch(d, &spec));
                for (i, bw) in bws.iter().enumerate() {
                    for &stat in &scn.statistics {
                        let mut rec = RepeatRecord {
                            c: scn.c,
                            factor: factor_value,
                            repeat: r,
                            scheme: kind,
                            statistic: stat,
                            degree: bw.degree,
                            h: bw.h,
                            observed: None,
                            p_value: None,
                            error: None,
                        };
                        match &outcome {
                            Ok(o) => match o.cells[i].get(stat) {
                                Ok(run) => {
                                    rec.observed = Some(run.observed);
                                    rec.p_value = Some(run.p_value);
                                }
                                Err(e) => rec.error = Some(e.to_string()),
                            },
                            Err(e) => rec.error = Some(e.to_string()),
                        }
                        records.push(rec);
                    }
                }
            }
            records
        })
        .collect();
    let log: Vec<RepeatRecord> = repeats.into_iter().flatten().collect();

    let mut cells = Vec::new();
    for &kind in &scn.schemes {
        for bw in &bws {
            for &stat in &scn.statistics {
                let mine = log.iter().filter(|r| {
                    r.scheme == kind && r.statistic == stat && r.degree == bw.degree && r.h == bw.h
                });
                let (mut rej, mut valid, mut failed) = (0, 0, 0);
                for r in mine {
                    match r.p_value {
                        Some(p) => {
                            valid += 1;
                            rej += (p < scn.alpha) as usize;
                        }
                        None => failed += 1,
                    }
                }
                let ok = valid > 0 && failed as f64 <= MAX_FAILED_REPEATS * scn.mc as f64;
                let prop = ok.then(|| rej as f64 / valid as f64);
                cells.push(TableCell {
                    degree: bw.degree,
                    c: scn.c,
                    factor: factor_value,
                    scheme: kind,
                    statistic: stat,
                    h: bw.h,
                    rejections: rej,
                    valid_repeats: valid,
                    failed_repeats: failed,
                    proportion: prop,
                    standard_error: prop.map(|p| (p * (1.0 - p) / valid as f64).sqrt()),
                });
            }
        }
    }
    Ok(RejectionTable {
        factor_name: factor.column().to_string(),
        alpha: scn.alpha,
        mc: scn.mc,
        b: scn.b,
        bandwidths: scn.bandwidths.clone(),
        cells,
        log,
    })
}

/// [`run_experiment_with_factor`] with rows labelled by sample size.
pub fn run_experiment(scn: &Scenario) -> Result<RejectionTable> {
    run_experiment_with_factor(scn, Factor::N)
}

/// Bandwidths `start, start + step, …` up to `stop`, rounded to 1e-9.
pub fn bandwidth_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..count)
        .map(|i| ((start + step * i as f64) * 1e9).round() / 1e9)
        .collect()
}

pub fn bandwidths_1d() -> Vec<f64> {
    bandwidth_grid(0.15, 0.65, 0.10)
}

pub fn bandwidths_2d() -> Vec<f64> {
    bandwidth_grid(0.25, 0.85, 0.10)
}

pub fn bandwidths_spatial() -> Vec<f64> {
    bandwidth_grid(0.25, 1.30, 0.15)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// MC = B = 200 for independent errors, 100 for spatial errors.
    #[default]
    Desk,
    /// MC = B = 500.
    Full,
}

/// Spatial error variance preset for the spatial tables.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariancePreset {
    /// σ² = 1.
    #[default]
    Unit,
    /// σ² = 0.16.
    Small,
}

impl VariancePreset {
    pub fn sigma2(self) -> f64 {
        match self {
            VariancePreset::Unit => 1.0,
            VariancePreset::Small => 0.16,
        }
    }
}

/// Layout of one published rejection table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableSpec {
    pub id: u8,
    pub dim: usize,
    pub statistic: Statistic,
    pub factor: Factor,
    pub factor_values: Vec<f64>,
    pub schemes: Vec<SchemeKind>,
    pub bandwidths: Vec<f64>,
    pub spatial_errors: bool,
}

impl TableSpec {
    pub fn scenarios(&self, scale: Scale, preset: VariancePreset, seed: u64) -> Vec<Scenario> {
        let (mc, b) = match (scale, self.spatial_errors) {
            (Scale::Full, _) => (500, 500),
            (Scale::Desk, false) => (200, 200),
            (Scale::Desk, true) => (100, 100),
        };
        let mut out = Vec::new();
        for (ci, c) in [0.0, 1.0, 2.0].into_iter().enumerate() {
            for (fi, &v) in self.factor_values.iter().enumerate() {
                let (n, errors) = match (self.factor, self.spatial_errors) {
                    (Factor::N, false) => (v as usize, ErrorModel::VonMises { kappa: 10.0 }),
                    (Factor::Kappa, false) => (
                        if self.dim == 1 { 200 } else { 400 },
                        ErrorModel::VonMises { kappa: v },
                    ),
                    (Factor::N, true) => (
                        v as usize,
                        ErrorModel::WrappedGaussian {
                            sigma2: preset.sigma2(),
                            a_e: 0.3,
                        },
                    ),
                    (Factor::RangeAe, true) => (
                        400,
                        ErrorModel::WrappedGaussian {
                            sigma2: preset.sigma2(),
                            a_e: v,
                        },
                    ),
                    _ => unreachable!("table catalogue pairs factors with error models"),
                };
                out.push(Scenario {
                    dim: self.dim,
                    c,
                    n,
                    errors,
                    design: if self.dim == 1 {
                        Design::UniformIid
                    } else {
                        Design::RegularGrid
                    },
                    bandwidths: self.bandwidths.clone(),
                    statistics: vec![self.statistic],
                    degrees: vec![Degree::Constant, Degree::Linear],
                    schemes: self.schemes.clone(),
                    alpha: 0.05,
                    mc,
                    b,
                    seed: derive_seed(seed, &[self.id as u64, ci as u64, fi as u64]),
                    grid_resolution: None,
                    fit: FitConfig::default(),
                    spatial_fit: None,
                });
            }
        }
        out
    }
}

/// Layouts of Tables 1–16.
pub fn table_spec(id: u8) -> Result<TableSpec> {
    use SchemeKind::*;
    let stat = if id % 2 == 1 {
        Statistic::T1
    } else {
        Statistic::T2
    };
    let iid = vec![Pcb, Npcb];
    let spatial = vec![Pscb, Npscb];
    let (dim, factor, values, schemes, bandwidths, spatial_errors) = match id {
        1 | 2 => (
            1,
            Factor::N,
            vec![50.0, 100.0, 200.0],
            iid,
            bandwidths_1d(),
            false,
        ),
        3 | 4 => (
            1,
            Factor::Kappa,
            vec![5.0, 10.0, 15.0],
            iid,
            bandwidths_1d(),
            false,
        ),
        5 | 6 => (
            2,
            Factor::N,
            vec![100.0, 225.0, 400.0],
            iid,
            bandwidths_2d(),
            false,
        ),
        7 | 8 => (
            2,
            Factor::Kappa,
            vec![5.0, 10.0, 15.0],
            iid,
            bandwidths_2d(),
            false,
        ),
        9 | 10 => (
            2,
            Factor::N,
            vec![100.0, 225.0, 400.0],
            iid,
            bandwidths_spatial(),
            true,
        ),
        11 | 12 => (
            2,
            Factor::RangeAe,
            vec![0.1, 0.3, 0.6],
            iid,
            bandwidths_spatial(),
            true,
        ),
        13 | 14 => (
            2,
            Factor::N,
            vec![100.0, 225.0, 400.0],
            spatial,
            bandwidths_spatial(),
            true,
        ),
        15 | 16 => (
            2,
            Factor::RangeAe,
            vec![0.1, 0.3, 0.6],
            spatial,
            bandwidths_spatial(),
            true,
        ),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "tables are numbered 1 to 16, got {id}"
            )))
        }
    };
    Ok(TableSpec {
        id,
        dim,
        statistic: stat,
        factor,
        factor_values: values,
        schemes,
        bandwidths,
        spatial_errors,
    })
}

/// Runs every scenario of a table and concatenates the results.
pub fn reproduce_table(
    spec: &TableSpec,
    scale: Scale,
    preset: VariancePreset,
    seed: u64,
) -> Result<RejectionTable> {
    let mut table: Option<RejectionTable> = None;
    for scn in spec.scenarios(scale, preset, seed) {
        let part = run_experiment_with_factor(&scn, spec.factor)?;
        match table.as_mut() {
            Some(t) => t.append(part),
            None => table = Some(part),
        }
    }
    Ok(table.expect("every table has scenarios"))
}
