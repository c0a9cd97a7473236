//! atan2 local polynomial estimators of a circular regression function, the
//! smoothed parametric fit, and CASE bandwidth scoring.
//!
//! Every estimator here is a linear smoother of `sin Θ` and `cos Θ`: the
//! weights at an evaluation point depend only on the covariates, so they are
//! computed once by [`LinearSmoother`] and reused across bootstrap replicates.

use serde::{Deserialize, Serialize};

use crate::circular::{Angle, RESULTANT_TOLERANCE};
use crate::dataset::{Dataset, Points};
use crate::error::{Error, Result};
use crate::param::ParametricModel;

/// Triweight kernel `(35/32)(1 − u²)³` on `[-1, 1]`.
#[inline]
pub fn triweight(u: f64) -> f64 {
    if u.abs() <= 1.0 {
        let v = 1.0 - u * u;
        35.0 / 32.0 * v * v * v
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    #[default]
    Triweight,
}

/// Product kernel over coordinates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
}

impl KernelSpec {
    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match self.family {
            KernelFamily::Triweight => triweight(u),
        }
    }
}

/// Local polynomial degree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Degree {
    /// Nadaraya–Watson, `p = 0`.
    Constant,
    /// Local linear, `p = 1`.
    Linear,
}

impl Degree {
    pub fn order(self) -> u8 {
        match self {
            Degree::Constant => 0,
            Degree::Linear => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Degree::Constant => "Nadaraya-Watson",
            Degree::Linear => "Local linear",
        }
    }
}

impl TryFrom<u8> for Degree {
    type Error = Error;

    fn try_from(p: u8) -> Result<Self> {
        match p {
            0 => Ok(Degree::Constant),
            1 => Ok(Degree::Linear),
            _ => Err(Error::InvalidArgument(format!(
                "degree must be 0 or 1, got {p}"
            ))),
        }
    }
}

impl From<Degree> for u8 {
    fn from(d: Degree) -> u8 {
        d.order()
    }
}

/// Scalar bandwidth `h` (bandwidth matrix `diag(h, …, h)`) and degree.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandwidthSpec {
    pub h: f64,
    pub degree: Degree,
    #[serde(default)]
    pub kernel: KernelSpec,
}

impl BandwidthSpec {
    pub fn new(h: f64, degree: Degree) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "bandwidth must be positive, got {h}"
            )));
        }
        Ok(Self {
            h,
            degree,
            kernel: KernelSpec::default(),
        })
    }
}

/// `∏ⱼ (1/h)·K(uⱼ/h)`.
#[inline]
pub fn kernel_weight(spec: &KernelSpec, bw: &BandwidthSpec, u: &[f64]) -> f64 {
    let mut w = 1.0;
    for &v in u {
        let k = spec.eval(v / bw.h);
        if k == 0.0 {
            return 0.0;
        }
        w *= k / bw.h;
    }
    w
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalFit {
    pub m1_hat: f64,
    pub m2_hat: f64,
    pub m_hat: Angle,
    pub effective_weight_sum: f64,
}

/// Smoother weights `ℓᵢ(x)` at one evaluation point: the local estimate of a
/// response vector `v` is `Σ ℓᵢ vᵢ` over the listed indices.
#[derive(Clone, Debug, PartialEq)]
pub struct SmootherRow {
    pub indices: Vec<u32>,
    pub weights: Vec<f64>,
    pub kernel_mass: f64,
}

impl SmootherRow {
    #[inline]
    pub fn apply(&self, v: &[f64]) -> f64 {
        self.indices
            .iter()
            .zip(&self.weights)
            .map(|(&i, &l)| l * v[i as usize])
            .sum()
    }

    /// atan2 estimate from precomputed sines and cosines.
    #[inline]
    pub fn fit(&self, sin: &[f64], cos: &[f64]) -> Result<LocalFit> {
        let (m1, m2) = self.apply_pair(sin, cos);
        local_fit(m1, m2, self.kernel_mass)
    }

    #[inline]
    fn apply_pair(&self, a: &[f64], b: &[f64]) -> (f64, f64) {
        let (mut sa, mut sb) = (0.0, 0.0);
        for (&i, &l) in self.indices.iter().zip(&self.weights) {
            sa += l * a[i as usize];
            sb += l * b[i as usize];
        }
        (sa, sb)
    }
}

fn local_fit(m1: f64, m2: f64, mass: f64) -> Result<LocalFit> {
    if m1.abs() <= RESULTANT_TOLERANCE && m2.abs() <= RESULTANT_TOLERANCE {
        return Err(Error::EmptyNeighborhood);
    }
    Ok(LocalFit {
        m1_hat: m1,
        m2_hat: m2,
        m_hat: Angle::wrapped(m1.atan2(m2)),
        effective_weight_sum: mass,
    })
}

/// Gaussian elimination with partial pivoting on a small dense system.
/// Returns `None` when a pivot falls below `tol`.
fn solve_small(mut a: Vec<f64>, mut b: Vec<f64>, k: usize, tol: f64) -> Option<Vec<f64>> {
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&r, &s| a[r * k + col].abs().total_cmp(&a[s * k + col].abs()))
            .unwrap();
        if a[piv * k + col].abs() <= tol {
            return None;
        }
        if piv != col {
            for j in 0..k {
                a.swap(piv * k + j, col * k + j);
            }
            b.swap(piv, col);
        }
        for r in col + 1..k {
            let f = a[r * k + col] / a[col * k + col];
            if f != 0.0 {
                for j in col..k {
                    a[r * k + j] -= f * a[col * k + j];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; k];
    for r in (0..k).rev() {
        let s: f64 = (r + 1..k).map(|j| a[r * k + j] * x[j]).sum();
        x[r] = (b[r] - s) / a[r * k + r];
    }
    Some(x)
}

/// Smoother weights at `x`, or the reason none exist.
pub fn smoother_row(covariates: &Points, bw: &BandwidthSpec, x: &[f64]) -> Result<SmootherRow> {
    let d = covariates.dim();
    if x.len() != d {
        return Err(Error::InvalidArgument(format!(
            "evaluation point has dimension {}, data has {d}",
            x.len()
        )));
    }
    let mut indices = Vec::new();
    let mut kw = Vec::new();
    let mut u = vec![0.0; d];
    for (i, xi) in covariates.rows().enumerate() {
        for j in 0..d {
            u[j] = xi[j] - x[j];
        }
        let w = kernel_weight(&bw.kernel, bw, &u);
        if w > 0.0 {
            indices.push(i as u32);
            kw.push(w);
        }
    }
    let mass: f64 = kw.iter().sum();
    if indices.is_empty() || !(mass > 0.0) {
        return Err(Error::EmptyNeighborhood);
    }
    let weights = match bw.degree {
        Degree::Constant => kw.iter().map(|w| w / mass).collect(),
        Degree::Linear => {
            // ℓᵢ = wᵢ·vᵀzᵢ with zᵢ = (1, Xᵢ − x) and (Σ wᵢ zᵢ zᵢᵀ) v = e₁.
            let k = d + 1;
            let mut a = vec![0.0; k * k];
            let mut z = vec![0.0; k];
            for (&i, &w) in indices.iter().zip(&kw) {
                let xi = covariates.row(i as usize);
                z[0] = 1.0;
                for j in 0..d {
                    z[j + 1] = xi[j] - x[j];
                }
                for r in 0..k {
                    for c in 0..k {
                        a[r * k + c] += w * z[r] * z[c];
                    }
                }
            }
            let max_diag = (0..k).map(|r| a[r * k + r]).fold(0.0, f64::max);
            let tol = 1e-12 * max_diag;
            let mut e1 = vec![0.0; k];
            e1[0] = 1.0;
            let v = match solve_small(a.clone(), e1.clone(), k, tol) {
                Some(v) => v,
                None => {
                    let trace: f64 = (0..k).map(|r| a[r * k + r]).sum();
                    let lambda = 1e-8 * trace / k as f64;
                    let mut ridged = a;
                    for r in 0..k {
                        ridged[r * k + r] += lambda;
                    }
                    solve_small(ridged, e1, k, tol).ok_or(Error::SingularDesign)?
                }
            };
            indices
                .iter()
                .zip(&kw)
                .map(|(&i, &w)| {
                    let xi = covariates.row(i as usize);
                    let mut s = v[0];
                    for j in 0..d {
                        s += v[j + 1] * (xi[j] - x[j]);
                    }
                    w * s
                })
                .collect()
        }
    };
    Ok(SmootherRow {
        indices,
        weights,
        kernel_mass: mass,
    })
}

/// Smoother rows for a fixed set of covariates and evaluation points.
#[derive(Clone, Debug)]
pub struct LinearSmoother {
    pub bandwidth: BandwidthSpec,
    rows: Vec<std::result::Result<SmootherRow, RowFailure>>,
}

/// Why an evaluation point has no smoother row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowFailure {
    EmptyNeighborhood,
    SingularDesign,
}

impl LinearSmoother {
    pub fn build<'a>(
        covariates: &Points,
        bw: &BandwidthSpec,
        points: impl Iterator<Item = &'a [f64]>,
    ) -> Result<Self> {
        let mut rows = Vec::new();
        for x in points {
            rows.push(match smoother_row(covariates, bw, x) {
                Ok(r) => Ok(r),
                Err(Error::EmptyNeighborhood) => Err(RowFailure::EmptyNeighborhood),
                Err(Error::SingularDesign) => Err(RowFailure::SingularDesign),
                Err(e) => return Err(e),
            });
        }
        Ok(Self {
            bandwidth: *bw,
            rows,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, k: usize) -> std::result::Result<&SmootherRow, RowFailure> {
        self.rows[k].as_ref().map_err(|e| *e)
    }
}

impl From<RowFailure> for Error {
    fn from(f: RowFailure) -> Self {
        match f {
            RowFailure::EmptyNeighborhood => Error::EmptyNeighborhood,
            RowFailure::SingularDesign => Error::SingularDesign,
        }
    }
}

pub(crate) fn sin_cos(angles: impl Iterator<Item = Angle>) -> (Vec<f64>, Vec<f64>) {
    angles.map(|a| a.radians().sin_cos()).unzip()
}

fn check_dim(data: &Dataset, x: &[f64]) -> Result<()> {
    if x.len() != data.dim() {
        return Err(Error::InvalidArgument(format!(
            "evaluation point has dimension {}, data has {}",
            x.len(),
            data.dim()
        )));
    }
    Ok(())
}

/// `atan2(m̂₁, m̂₂)` with `m̂₁`, `m̂₂` the degree-p local polynomial smooths of
/// `sin Θ` and `cos Θ` at `x`.
pub fn estimate_m(data: &Dataset, bw: &BandwidthSpec, x: &[f64]) -> Result<LocalFit> {
    check_dim(data, x)?;
    let row = smoother_row(data.covariates(), bw, x)?;
    let (m1, m2) = row
        .indices
        .iter()
        .zip(&row.weights)
        .fold((0.0, 0.0), |(s, c), (&i, &l)| {
            let (si, ci) = data.responses()[i as usize].radians().sin_cos();
            (s + l * si, c + l * ci)
        });
    local_fit(m1, m2, row.kernel_mass)
}

/// The estimator of [`estimate_m`] applied to the parametric fitted values.
pub fn smooth_parametric(
    data: &Dataset,
    model: &ParametricModel,
    bw: &BandwidthSpec,
    x: &[f64],
) -> Result<LocalFit> {
    check_dim(data, x)?;
    let row = smoother_row(data.covariates(), bw, x)?;
    let (m1, m2) = row
        .indices
        .iter()
        .zip(&row.weights)
        .fold((0.0, 0.0), |(s, c), (&i, &l)| {
            let (si, ci) = model.predict(data.x(i as usize)).radians().sin_cos();
            (s + l * si, c + l * ci)
        });
    local_fit(m1, m2, row.kernel_mass)
}

/// Circular average squared error `(1/n) Σ {1 − cos[m(Xᵢ) − m̂(Xᵢ)]}`.
pub fn case_score<F>(data: &Dataset, bw: &BandwidthSpec, true_m: F) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<Angle>,
{
    let smoother = LinearSmoother::build(data.covariates(), bw, data.covariates().rows())?;
    let (s, c) = sin_cos(data.responses().iter().copied());
    let mut total = 0.0;
    for i in 0..data.n() {
        let fit = smoother.row(i)?.fit(&s, &c)?;
        let m = true_m(data.x(i))?;
        total += 1.0 - (m.radians() - fit.m_hat.radians()).cos();
    }
    Ok(total / data.n() as f64)
}

/// Candidate with the smallest CASE; exact ties go to the smaller bandwidth.
pub fn select_bandwidth_case<F>(
    data: &Dataset,
    true_m: F,
    candidates: &[f64],
    degree: Degree,
) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<Angle>,
{
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidate bandwidths".into()));
    }
    let mut sorted = candidates.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best: Option<(f64, f64)> = None;
    let mut last_err = None;
    for h in sorted {
        let score = BandwidthSpec::new(h, degree).and_then(|bw| case_score(data, &bw, &true_m));
        match score {
            Ok(s) => {
                if best.map_or(true, |(_, b)| s < b) {
                    best = Some((h, s));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.map(|(h, _)| h).ok_or_else(|| last_err.unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circular::{circ_dist, mean_direction, wrap, TAU};
    use crate::rng::substream;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn data1(xs: &[f64], th: &[f64]) -> Dataset {
        Dataset::new(
            Points::one_dimensional(xs).unwrap(),
            th.iter().map(|t| wrap(*t).unwrap()).collect(),
        )
        .unwrap()
    }

    fn random_data(n: usize, seed: u64) -> Dataset {
        let mut rng = substream(seed, &[]);
        let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let th: Vec<f64> = xs
            .iter()
            .map(|x| 2.0 * x + 0.6 * (rng.random::<f64>() - 0.5))
            .collect();
        data1(&xs, &th)
    }

    fn nw(h: f64) -> BandwidthSpec {
        BandwidthSpec::new(h, Degree::Constant).unwrap()
    }

    fn ll(h: f64) -> BandwidthSpec {
        BandwidthSpec::new(h, Degree::Linear).unwrap()
    }

    /// Grid minimizer of the kernel-weighted cosine risk.
    fn cosine_risk_minimizer(data: &Dataset, h: f64, x: f64, grid: usize) -> f64 {
        let w: Vec<f64> = (0..data.n())
            .map(|i| triweight((data.x(i)[0] - x) / h) / h)
            .collect();
        (0..grid)
            .map(|k| TAU * k as f64 / grid as f64)
            .map(|m| {
                let risk: f64 = data
                    .responses()
                    .iter()
                    .zip(&w)
                    .map(|(t, wi)| wi * (1.0 - (t.radians() - m).cos()))
                    .sum();
                (m, risk)
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
            .0
    }

    #[test]
    fn kernel_examples() {
        let k = KernelSpec::default();
        assert_eq!(kernel_weight(&k, &nw(1.0), &[0.0]), 1.09375);
        assert_eq!(kernel_weight(&k, &nw(0.3), &[0.3]), 0.0);
        assert_eq!(kernel_weight(&k, &nw(0.3), &[-0.5]), 0.0);
        assert_eq!(kernel_weight(&k, &nw(0.5), &[0.0, 0.0]), 4.78515625);
        let integral: f64 = (0..20000)
            .map(|i| triweight(-1.0 + (i as f64 + 0.5) / 10000.0) / 10000.0)
            .sum();
        assert_abs_diff_eq!(integral, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn flat_weights_give_mean_direction() {
        let data = random_data(30, 1);
        let md = mean_direction(data.responses()).unwrap();
        for x in [0.0, 0.37, 1.0] {
            let f = estimate_m(&data, &nw(1e6), &[x]).unwrap();
            assert!(circ_dist(f.m_hat, md) < 1e-20, "{x}");
        }
    }

    #[test]
    fn single_point_window() {
        let data = data1(&[0.1, 0.5, 0.9], &[1.0, 2.0, 3.0]);
        for bw in [nw(0.2), ll(0.2)] {
            let f = estimate_m(&data, &bw, &[0.55]).unwrap();
            assert_abs_diff_eq!(f.m_hat.radians(), 2.0, epsilon = 1e-7);
        }
    }

    #[test]
    fn five_point_grid_oracle() {
        let data = data1(&[0.1, 0.35, 0.5, 0.62, 0.8], &[0.4, 0.9, 1.3, 1.1, 2.0]);
        let f = estimate_m(&data, &nw(0.3), &[0.5]).unwrap();
        let m = cosine_risk_minimizer(&data, 0.3, 0.5, 10_000);
        assert!(circ_dist(f.m_hat, Angle::wrapped(m)).acos_safe() <= TAU * 1e-4);
    }

    trait AcosSafe {
        fn acos_safe(self) -> f64;
    }
    impl AcosSafe for f64 {
        /// Angular separation from a circular distance.
        fn acos_safe(self) -> f64 {
            (1.0 - self).clamp(-1.0, 1.0).acos()
        }
    }

    #[test]
    fn nw_matches_cosine_risk_oracle_on_random_instances() {
        let mut rng = substream(77, &[]);
        for _ in 0..100 {
            let n = rng.random_range(3..12);
            let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let th: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * TAU).collect();
            let data = data1(&xs, &th);
            let h = rng.random_range(0.2..0.8);
            let x = rng.random::<f64>();
            let Ok(f) = estimate_m(&data, &nw(h), &[x]) else {
                continue;
            };
            let m = cosine_risk_minimizer(&data, h, x, 20_000);
            assert!(circ_dist(f.m_hat, Angle::wrapped(m)).acos_safe() <= TAU * 1e-4);
        }
    }

    #[test]
    fn empty_neighborhood() {
        let data = data1(&[0.1, 0.2], &[0.0, 0.1]);
        assert!(matches!(
            estimate_m(&data, &nw(0.1), &[0.8]),
            Err(Error::EmptyNeighborhood)
        ));
        // Antipodal responses with equal weight have no direction.
        let data = data1(&[0.4, 0.6], &[0.0, std::f64::consts::PI]);
        assert!(matches!(
            estimate_m(&data, &nw(0.5), &[0.5]),
            Err(Error::EmptyNeighborhood)
        ));
    }

    #[test]
    fn rotation_equivariance() {
        let data = random_data(40, 9);
        let c = 2.3;
        let rot = data
            .with_responses(data.responses().iter().map(|t| t.rotate(c)).collect())
            .unwrap();
        for bw in [nw(0.25), ll(0.25)] {
            for x in [0.05, 0.5, 0.93] {
                let a = estimate_m(&data, &bw, &[x]).unwrap().m_hat;
                let b = estimate_m(&rot, &bw, &[x]).unwrap().m_hat;
                assert!(circ_dist(b, a.rotate(c)).acos_safe() < 1e-9);
            }
        }
    }

    #[test]
    fn local_linear_reproduces_linear_components() {
        // Any vector field with linear sin/cos parts, not necessarily unit length.
        let xs: Vec<f64> = (0..25).map(|i| i as f64 / 24.0).collect();
        let s: Vec<f64> = xs.iter().map(|x| 0.3 + 0.5 * x).collect();
        let c: Vec<f64> = xs.iter().map(|x| 0.8 - 0.4 * x).collect();
        let pts = Points::one_dimensional(&xs).unwrap();
        for x in [0.1, 0.33, 0.5, 0.97] {
            let row = smoother_row(&pts, &ll(0.3), &[x]).unwrap();
            assert_abs_diff_eq!(row.apply(&s), 0.3 + 0.5 * x, epsilon = 1e-12);
            assert_abs_diff_eq!(row.apply(&c), 0.8 - 0.4 * x, epsilon = 1e-12);
        }
    }

    #[test]
    fn degenerate_window_falls_back_to_constant_fit() {
        let data = data1(&[0.3, 0.3, 0.3, 0.9], &[0.2, 0.5, 0.4, 3.0]);
        let a = estimate_m(&data, &nw(0.2), &[0.35]).unwrap();
        let b = estimate_m(&data, &ll(0.2), &[0.35]).unwrap();
        assert!(circ_dist(a.m_hat, b.m_hat).acos_safe() < 1e-7);
        let rows = [[0.5, 0.5], [0.5, 0.5], [0.52, 0.52]];
        let th: Vec<Angle> = [1.0, 1.2, 1.1].iter().map(|t| Angle::wrapped(*t)).collect();
        let d2 = Dataset::new(Points::from_rows(&rows).unwrap(), th).unwrap();
        let a = estimate_m(&d2, &nw(0.3), &[0.45, 0.5]).unwrap();
        let b = estimate_m(&d2, &ll(0.3), &[0.45, 0.5]).unwrap();
        assert!(circ_dist(a.m_hat, b.m_hat).acos_safe() < 1e-6);
    }

    #[test]
    fn smooth_parametric_examples() {
        let data = random_data(30, 4);
        let flat = ParametricModel::new(Angle::wrapped(1.7), vec![0.0]);
        for bw in [nw(0.3), ll(0.3)] {
            let f = smooth_parametric(&data, &flat, &bw, &[0.4]).unwrap();
            assert_abs_diff_eq!(f.m_hat.radians(), 1.7, epsilon = 1e-12);
        }
        let model = ParametricModel::new(Angle::wrapped(0.4), vec![1.3]);
        let exact = data.with_responses(model.fitted(&data)).unwrap();
        for bw in [nw(0.3), ll(0.3)] {
            for x in [0.2, 0.7] {
                let a = estimate_m(&exact, &bw, &[x]).unwrap();
                let b = smooth_parametric(&data, &model, &bw, &[x]).unwrap();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn smooth_parametric_grid_oracle() {
        let data = data1(&[0.1, 0.35, 0.5, 0.62, 0.8], &[0.0; 5]);
        let model = ParametricModel::new(Angle::wrapped(0.2), vec![1.0]);
        let fitted = data.with_responses(model.fitted(&data)).unwrap();
        let f = smooth_parametric(&data, &model, &nw(0.3), &[0.5]).unwrap();
        let m = cosine_risk_minimizer(&fitted, 0.3, 0.5, 10_000);
        assert!(circ_dist(f.m_hat, Angle::wrapped(m)).acos_safe() <= TAU * 1e-4);
    }

    #[test]
    fn case_examples() {
        let data = random_data(20, 6);
        let exact = data
            .with_responses(
                data.covariates()
                    .rows()
                    .map(|x| Angle::wrapped(0.9 + 0.0 * x[0]))
                    .collect(),
            )
            .unwrap();
        let s = case_score(&exact, &nw(0.3), |_| Ok(Angle::wrapped(0.9))).unwrap();
        assert_abs_diff_eq!(s, 0.0, epsilon = 1e-15);
        let s = case_score(&exact, &nw(0.3), |_| {
            Ok(Angle::wrapped(0.9 + std::f64::consts::PI))
        })
        .unwrap();
        assert_abs_diff_eq!(s, 2.0, epsilon = 1e-12);

        // Ten fixed points against a direct evaluation of the average.
        let xs: Vec<f64> = (0..10).map(|i| (i as f64 + 0.5) / 10.0).collect();
        let th: Vec<f64> = xs.iter().map(|x| 1.5 * x + 0.2 * (7.0 * x).sin()).collect();
        let d = data1(&xs, &th);
        let truth = |x: &[f64]| Ok(Angle::wrapped(1.5 * x[0]));
        let direct: f64 = (0..10)
            .map(|i| {
                let f = estimate_m(&d, &nw(0.25), d.x(i)).unwrap();
                1.0 - (1.5 * xs[i] - f.m_hat.radians()).cos()
            })
            .sum::<f64>()
            / 10.0;
        assert_abs_diff_eq!(
            case_score(&d, &nw(0.25), truth).unwrap(),
            direct,
            epsilon = 1e-15
        );
    }

    #[test]
    fn bandwidth_selection_examples() {
        let data = random_data(20, 2);
        let truth = |x: &[f64]| Ok(Angle::wrapped(2.0 * x[0]));
        assert_eq!(
            select_bandwidth_case(&data, truth, &[0.4], Degree::Linear).unwrap(),
            0.4
        );

        let xs: Vec<f64> = (0..20).map(|i| i as f64 / 19.0).collect();
        let flat = data1(&xs, &[0.5; 20]);
        let h = select_bandwidth_case(
            &flat,
            |_| Ok(Angle::wrapped(0.5)),
            &[0.9, 0.3, 0.6],
            Degree::Constant,
        )
        .unwrap();
        assert_eq!(h, 0.3);
        assert!(select_bandwidth_case(&flat, |_| Ok(Angle::ZERO), &[], Degree::Constant).is_err());
    }
}
