//! Regression samples, evaluation grids, boundary weights and CSV ingestion.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::circular::{wrap, Angle};
use crate::error::{Error, Result};

/// Row-major collection of points in `ℝ^dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Points {
    dim: usize,
    coords: Vec<f64>,
}

impl Points {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "dimension must be at least 1".into(),
            ));
        }
        if coords.len() % dim != 0 {
            return Err(Error::InvalidArgument(format!(
                "{} coordinates do not split into rows of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(bad) = coords.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite coordinate {bad}"
            )));
        }
        Ok(Self { dim, coords })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(1);
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::InvalidArgument("ragged point rows".into()));
            }
            coords.extend_from_slice(r);
        }
        Self::new(dim, coords)
    }

    pub fn one_dimensional(xs: &[f64]) -> Result<Self> {
        Self::new(1, xs.to_vec())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

/// A regression sample `{(X_i, Θ_i)}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    covariates: Points,
    responses: Vec<Angle>,
}

impl Dataset {
    pub fn new(covariates: Points, responses: Vec<Angle>) -> Result<Self> {
        if covariates.len() != responses.len() {
            return Err(Error::InvalidArgument(format!(
                "{} covariate rows but {} responses",
                covariates.len(),
                responses.len()
            )));
        }
        if responses.is_empty() {
            return Err(Error::InsufficientData(
                "dataset has no observations".into(),
            ));
        }
        Ok(Self {
            covariates,
            responses,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.responses.len()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.covariates.dim()
    }

    pub fn covariates(&self) -> &Points {
        &self.covariates
    }

    pub fn responses(&self) -> &[Angle] {
        &self.responses
    }

    #[inline]
    pub fn x(&self, i: usize) -> &[f64] {
        self.covariates.row(i)
    }

    /// Same covariates, new responses.
    pub fn with_responses(&self, responses: Vec<Angle>) -> Result<Self> {
        Self::new(self.covariates.clone(), responses)
    }

    /// Writes `x1[,x2],theta` rows with responses in radians.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.dim()).map(|j| format!("x{j}")).collect();
        header.push("theta".into());
        w.write_record(&header)?;
        for (x, t) in self.covariates.rows().zip(&self.responses) {
            let mut rec: Vec<String> = x.iter().map(|v| format_float(*v)).collect();
            rec.push(format_float(t.radians()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest representation that parses back to the same `f64`.
pub(crate) fn format_float(v: f64) -> String {
    format!("{v:?}")
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleUnit {
    #[default]
    Radians,
    Degrees,
}

/// Reads a CSV with a header row naming `d` covariate columns followed by one
/// angle column.
pub fn load_csv<P: AsRef<Path>>(path: P, unit: AngleUnit) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    parse_csv(file, unit)
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader)
}

fn numeric_cell(cell: &str, line: u64, column: usize) -> Result<f64> {
    let v: f64 = cell.parse().map_err(|_| Error::Parse {
        line,
        message: format!("column {column} is not numeric: {cell:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("column {column} is not finite: {cell:?}"),
        });
    }
    Ok(v)
}

/// Reads a CSV of coordinates only, one column per axis. Lines starting with
/// `#` are skipped.
pub fn parse_points_csv<R: Read>(reader: R) -> Result<Points> {
    let mut rdr = csv_reader(reader);
    let dim = rdr.headers()?.len();
    let mut coords = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != dim {
            return Err(Error::Parse {
                line,
                message: format!("expected {dim} fields, found {}", rec.len()),
            });
        }
        for (j, cell) in rec.iter().enumerate() {
            coords.push(numeric_cell(cell, line, j + 1)?);
        }
    }
    Points::new(dim, coords)
}

/// Lines starting with `#` are skipped.
pub fn parse_csv<R: Read>(reader: R, unit: AngleUnit) -> Result<Dataset> {
    let mut rdr = csv_reader(reader);
    let width = rdr.headers()?.len();
    if width < 2 {
        return Err(Error::Parse {
            line: 1,
            message: "header needs at least one covariate column and one angle column".into(),
        });
    }
    let dim = width - 1;
    let mut coords = Vec::new();
    let mut responses = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != width {
            return Err(Error::Parse {
                line,
                message: format!("expected {width} fields, found {}", rec.len()),
            });
        }
        for (j, cell) in rec.iter().enumerate() {
            let v = numeric_cell(cell, line, j + 1)?;
            if j < dim {
                coords.push(v);
            } else {
                let angle = match unit {
                    AngleUnit::Radians => wrap(v)?,
                    AngleUnit::Degrees => Angle::from_degrees(v)?,
                };
                responses.push(angle);
            }
        }
    }
    Dataset::new(Points::new(dim, coords)?, responses)
}

/// Axis-aligned closed box `[lower, upper]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::InvalidArgument(
                "box bounds must have equal, nonzero length".into(),
            ));
        }
        if lower
            .iter()
            .zip(&upper)
            .any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite())
        {
            return Err(Error::InvalidArgument(format!(
                "box requires finite lower < upper componentwise, got {lower:?} / {upper:?}"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn unit(dim: usize) -> Self {
        Self {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| u - l)
            .product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }
}

/// Indicator weight of a closed box, used to trim boundary regions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryWeight {
    pub region: BoxRegion,
}

impl BoundaryWeight {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        Ok(Self {
            region: BoxRegion::new(lower, upper)?,
        })
    }

    /// `[1/√n, 1 − 1/√n]^dim`, the trimming used in the simulation designs.
    pub fn for_sample_size(n: usize, dim: usize) -> Result<Self> {
        let e = 1.0 / (n as f64).sqrt();
        Self::new(vec![e; dim], vec![1.0 - e; dim])
    }

    /// Weight one on the whole box, for untrimmed statistics.
    pub fn everywhere(region: &BoxRegion) -> Self {
        Self {
            region: region.clone(),
        }
    }

    #[inline]
    pub fn weight(&self, x: &[f64]) -> f64 {
        if self.region.contains(x) {
            1.0
        } else {
            0.0
        }
    }

    /// Fraction of the cell `center ± half` lying inside the box: the exact
    /// cell average of [`BoundaryWeight::weight`].
    pub fn cell_fraction(&self, center: &[f64], half: &[f64]) -> f64 {
        let mut frac = 1.0;
        for (j, (&c, &r)) in center.iter().zip(half).enumerate() {
            let lo = (c - r).max(self.region.lower[j]);
            let hi = (c + r).min(self.region.upper[j]);
            if hi <= lo {
                return 0.0;
            }
            frac *= ((hi - lo) / (2.0 * r)).min(1.0);
        }
        frac
    }
}

pub fn boundary_weight(w: &BoundaryWeight, x: &[f64]) -> f64 {
    w.weight(x)
}

/// Midpoint quadrature grid. Serializes as its domain and resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "GridSpec", try_from = "GridSpec")]
pub struct EvalGrid {
    pub domain: BoxRegion,
    pub resolution: Vec<usize>,
    pub points: Points,
    pub cell_measure: f64,
    /// Half the cell side along each axis.
    pub half_widths: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct GridSpec {
    domain: BoxRegion,
    resolution: Vec<usize>,
}

impl From<EvalGrid> for GridSpec {
    fn from(g: EvalGrid) -> Self {
        GridSpec {
            domain: g.domain,
            resolution: g.resolution,
        }
    }
}

impl TryFrom<GridSpec> for EvalGrid {
    type Error = Error;

    fn try_from(s: GridSpec) -> Result<Self> {
        let domain = BoxRegion::new(s.domain.lower, s.domain.upper)?;
        make_grid(&domain, &s.resolution)
    }
}

pub const DEFAULT_GRID_1D: usize = 201;
pub const DEFAULT_GRID_2D: usize = 51;

/// Default per-axis resolution for a dimension.
pub fn default_resolution(dim: usize) -> Vec<usize> {
    let per_axis = if dim == 1 {
        DEFAULT_GRID_1D
    } else {
        DEFAULT_GRID_2D
    };
    vec![per_axis; dim]
}

/// Regular midpoint grid over `domain` with `resolution[j]` cells along axis `j`.
/// The first axis varies slowest.
pub fn make_grid(domain: &BoxRegion, resolution: &[usize]) -> Result<EvalGrid> {
    let dim = domain.dim();
    if resolution.len() != dim {
        return Err(Error::InvalidArgument(format!(
            "resolution has {} axes, domain has {dim}",
            resolution.len()
        )));
    }
    if resolution.iter().any(|&r| r < 2) {
        return Err(Error::InvalidArgument(
            "grid resolution must be at least 2 per axis".into(),
        ));
    }
    let steps: Vec<f64> = (0..dim)
        .map(|j| (domain.upper[j] - domain.lower[j]) / resolution[j] as f64)
        .collect();
    let total: usize = resolution.iter().product();
    let mut coords = Vec::with_capacity(total * dim);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        for j in 0..dim {
            coords.push(domain.lower[j] + (idx[j] as f64 + 0.5) * steps[j]);
        }
        for j in (0..dim).rev() {
            idx[j] += 1;
            if idx[j] < resolution[j] {
                break;
            }
            idx[j] = 0;
        }
    }
    Ok(EvalGrid {
        half_widths: steps.iter().map(|s| s / 2.0).collect(),
        domain: domain.clone(),
        resolution: resolution.to_vec(),
        points: Points::new(dim, coords)?,
        cell_measure: steps.iter().product(),
    })
}
