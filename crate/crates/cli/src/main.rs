//! `circgof`: fit circular regression models, run goodness-of-fit tests, and
//! reproduce the simulation tables.
//!
//! Every artifact starts with the tool version, the seed, and the resolved
//! configuration (a JSON field or `#` comment lines for CSV). `circgof replay`
//! re-runs an artifact's configuration and reproduces it byte for byte.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use circgof::rng::substream;
use circgof::spatial::FieldSimulator;
use circgof::*;
use clap::{error::ErrorKind, Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(
    name = "circgof",
    version,
    about = "Goodness-of-fit tests for circular regression"
)]
struct Cli {
    /// Worker threads (default: available cores).
    #[arg(long, global = true, env = "CIRC_GOF_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum Command {
    /// Fit `β₀ + 2·atan(β₁ᵀx)` by circular least squares.
    FitParam(FitParamArgs),
    /// Evaluate the atan2 local polynomial estimator on a grid.
    FitNonparam(FitNonparamArgs),
    /// Bootstrap goodness-of-fit test of the parametric model.
    GofTest(GofTestArgs),
    /// Draw one wrapped Gaussian field.
    SimulateField(SimulateFieldArgs),
    /// Fit a wrapped Gaussian process by MCMC.
    FitSpatial(FitSpatialArgs),
    /// Run a Monte Carlo scenario from a JSON file.
    Simulate(SimulateArgs),
    /// Regenerate one of the rejection tables 1 to 16.
    ReproduceTable(ReproduceTableArgs),
    /// Re-run the configuration embedded in an artifact.
    #[serde(skip)]
    Replay(ReplayArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Unit {
    #[default]
    Radians,
    Degrees,
}

impl From<Unit> for AngleUnit {
    fn from(u: Unit) -> Self {
        match u {
            Unit::Radians => AngleUnit::Radians,
            Unit::Degrees => AngleUnit::Degrees,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum StatArg {
    T1,
    T2,
}

impl From<StatArg> for Statistic {
    fn from(s: StatArg) -> Self {
        match s {
            StatArg::T1 => Statistic::T1,
            StatArg::T2 => Statistic::T2,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum BootArg {
    Pcb,
    Npcb,
    Pscb,
    Npscb,
}

impl From<BootArg> for SchemeKind {
    fn from(b: BootArg) -> Self {
        match b {
            BootArg::Pcb => SchemeKind::Pcb,
            BootArg::Npcb => SchemeKind::Npcb,
            BootArg::Pscb => SchemeKind::Pscb,
            BootArg::Npscb => SchemeKind::Npscb,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ScaleArg {
    Desk,
    Full,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum PresetArg {
    /// σ² = 1.
    Unit,
    /// σ² = 0.16.
    Small,
}

fn degree(p: u8) -> Degree {
    if p == 0 {
        Degree::Constant
    } else {
        Degree::Linear
    }
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct FitParamArgs {
    /// CSV with columns x1[,x2],theta.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    angle_unit: Unit,
    /// Seed for the random multistart points.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    random_starts: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol_grad: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

impl FitParamArgs {
    fn fit_config(&self) -> FitConfig {
        FitConfig {
            tol_grad: self.tol_grad,
            max_iter: self.max_iter,
            random_starts: self.random_starts,
            seed: self.seed,
            ..FitConfig::default()
        }
    }
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct FitNonparamArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    angle_unit: Unit,
    #[arg(long)]
    h: f64,
    /// 0 = Nadaraya-Watson, 1 = local linear.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=1))]
    degree: u8,
    /// Grid points per axis over the covariate bounding box (default 201 in 1D, 51 in 2D).
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct GofTestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    angle_unit: Unit,
    #[arg(long, value_enum)]
    statistic: StatArg,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=1))]
    degree: u8,
    #[arg(long)]
    h: f64,
    #[arg(long, value_enum, default_value_t = BootArg::Pcb)]
    boot: BootArg,
    /// Bootstrap replicates.
    #[arg(long = "B", default_value_t = 500)]
    #[serde(rename = "B")]
    b: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Integration grid points per axis (default 201 in 1D, 51 in 2D).
    #[arg(long)]
    grid: Option<usize>,
    /// Rotate residuals to zero mean direction before resampling.
    #[arg(long)]
    recenter: bool,
    /// Bandwidth for nonparametric residuals (default: --h).
    #[arg(long)]
    residual_h: Option<f64>,
    /// JSON spatial fit configuration; required by pscb and npscb.
    #[arg(long)]
    spatial_config: Option<PathBuf>,
    #[arg(skip)]
    #[serde(default)]
    spatial: Option<SpatialFitConfig>,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct SimulateFieldArgs {
    /// CSV of site coordinates, one column per axis.
    #[arg(long, conflicts_with = "side", required_unless_present = "side")]
    locations: Option<PathBuf>,
    /// Regular lattice with this many sites per axis on the unit box.
    #[arg(long)]
    side: Option<usize>,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    #[arg(long, default_value_t = 0.3)]
    a_e: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct FitSpatialArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    angle_unit: Unit,
    /// JSON spatial fit configuration (default settings when absent).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long)]
    kmax: Option<i32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(skip)]
    #[serde(default)]
    resolved: Option<SpatialFitConfig>,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct SimulateArgs {
    /// Scenario JSON.
    #[arg(long)]
    config: PathBuf,
    #[arg(skip)]
    #[serde(default)]
    scenario: Option<Scenario>,
    /// Rejection table CSV.
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
    /// Per-repeat p-value log (default: `<out stem>.repeats.csv`).
    #[arg(long)]
    #[serde(skip)]
    log: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct ReproduceTableArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=16))]
    table: u8,
    #[arg(long, value_enum, default_value_t = ScaleArg::Desk)]
    scale: ScaleArg,
    /// Error variance preset for Tables 9 to 16.
    #[arg(long, value_enum, default_value_t = PresetArg::Unit)]
    sigma2: PresetArg,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Override the Monte Carlo repeats of the chosen scale.
    #[arg(long)]
    mc: Option<usize>,
    /// Override the bootstrap replicates of the chosen scale.
    #[arg(long = "B")]
    #[serde(rename = "B")]
    b: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    log: Option<PathBuf>,
}

#[derive(Args, Clone, Debug)]
struct ReplayArgs {
    /// Artifact written by an earlier run.
    artifact: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    log: Option<PathBuf>,
}

/// Misuse detected after parsing; exits with the usage status.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Serialize)]
struct Artifact<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    seed: Option<u64>,
    config: &'a Command,
    #[serde(flatten)]
    result: T,
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(
    cmd: &Command,
    seed: Option<u64>,
    result: T,
    out: Option<&Path>,
) -> Result<()> {
    let mut w = open_out(out)?;
    let artifact = Artifact {
        tool: "circgof",
        version: VERSION,
        seed,
        config: cmd,
        result,
    };
    serde_json::to_writer_pretty(&mut w, &artifact)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn csv_header(w: &mut dyn Write, cmd: &Command, seed: Option<u64>) -> Result<()> {
    writeln!(w, "# circgof {VERSION}")?;
    match seed {
        Some(s) => writeln!(w, "# seed: {s}")?,
        None => writeln!(w, "# seed: none")?,
    }
    writeln!(w, "# config: {}", serde_json::to_string(cmd)?)?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    serde_json::from_reader(BufReader::new(file))
        .with_context(|| format!("cannot parse {}", path.display()))
}

fn sibling_log(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.repeats.csv"))
}

fn lattice(side: usize, dim: usize) -> Result<Points> {
    if side < 2 {
        return Err(usage("--side must be at least 2"));
    }
    let axis: Vec<f64> = (0..side).map(|i| i as f64 / (side - 1) as f64).collect();
    let mut coords = Vec::with_capacity(side.pow(dim as u32) * dim);
    let mut idx = vec![0usize; dim];
    loop {
        coords.extend(idx.iter().map(|&i| axis[i]));
        let mut k = dim;
        loop {
            if k == 0 {
                return Ok(Points::new(dim, coords)?);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < side {
                break;
            }
            idx[k] = 0;
        }
    }
}

fn resolution(grid: Option<usize>, dim: usize) -> Vec<usize> {
    grid.map_or_else(|| default_resolution(dim), |g| vec![g; dim])
}

/// Fills in file-backed settings so the recorded configuration is complete.
fn resolve(cmd: &Command) -> Result<Command> {
    let mut cmd = cmd.clone();
    match &mut cmd {
        Command::GofTest(a) => {
            let kind = SchemeKind::from(a.boot);
            if kind.is_spatial() && a.spatial.is_none() {
                let path = a.spatial_config.as_ref().ok_or_else(|| {
                    usage(format!(
                        "--boot {} requires --spatial-config",
                        kind.label().to_lowercase()
                    ))
                })?;
                a.spatial = Some(read_json(path)?);
            } else if !kind.is_spatial() && a.spatial_config.is_some() {
                return Err(usage(
                    "--spatial-config only applies to --boot pscb or npscb",
                ));
            }
        }
        Command::FitSpatial(a) => {
            if a.resolved.is_none() {
                let mut cfg: SpatialFitConfig = match &a.config {
                    Some(p) => read_json(p)?,
                    None => SpatialFitConfig::default(),
                };
                if let Some(v) = a.iterations {
                    cfg.iterations = v;
                }
                if let Some(v) = a.burn_in {
                    cfg.burn_in = v;
                }
                if let Some(v) = a.thin {
                    cfg.thin = v;
                }
                if let Some(v) = a.kmax {
                    cfg.kmax = v;
                }
                a.resolved = Some(cfg);
            }
        }
        Command::Simulate(a) => {
            if a.scenario.is_none() {
                a.scenario = Some(read_json(&a.config)?);
            }
        }
        _ => {}
    }
    Ok(cmd)
}

fn fit_param(cmd: &Command, a: &FitParamArgs) -> Result<()> {
    let data = load_csv(&a.input, a.angle_unit.into())?;
    let report = fit_circular_ls(&data, &a.fit_config())?;
    write_json(cmd, Some(a.seed), report, a.out.as_deref())
}

fn fit_nonparam(cmd: &Command, a: &FitNonparamArgs) -> Result<()> {
    let data = load_csv(&a.input, a.angle_unit.into())?;
    let bw = BandwidthSpec::new(a.h, degree(a.degree))?;
    let dim = data.dim();
    let mut lower = vec![f64::INFINITY; dim];
    let mut upper = vec![f64::NEG_INFINITY; dim];
    for x in data.covariates().rows() {
        for j in 0..dim {
            lower[j] = lower[j].min(x[j]);
            upper[j] = upper[j].max(x[j]);
        }
    }
    let grid = make_grid(&BoxRegion::new(lower, upper)?, &resolution(a.grid, dim))?;
    let mut w = open_out(a.out.as_deref())?;
    csv_header(&mut *w, cmd, None)?;
    let axes: Vec<String> = (1..=dim).map(|j| format!("x{j}")).collect();
    writeln!(w, "{},m_hat,m1_hat,m2_hat", axes.join(","))?;
    for x in grid.points.rows() {
        let xs: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        match estimate_m(&data, &bw, x) {
            Ok(f) => writeln!(
                w,
                "{},{},{},{}",
                xs.join(","),
                f.m_hat.radians(),
                f.m1_hat,
                f.m2_hat
            )?,
            Err(_) => writeln!(w, "{},NA,NA,NA", xs.join(","))?,
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct PosteriorOut<'a> {
    mu: f64,
    sigma2: f64,
    a_e: f64,
    decay_acceptance: f64,
    warnings: &'a [String],
}

#[derive(Serialize)]
struct GofOut<'a> {
    observed: f64,
    p_value: f64,
    #[serde(rename = "B")]
    b: usize,
    replicates: &'a [f64],
    scheme: SchemeKind,
    statistic: Statistic,
    failed_replicates: usize,
    excluded_points: usize,
    residual_source: ResidualSource,
    null_model: &'a ParametricModel,
    #[serde(skip_serializing_if = "Option::is_none")]
    posterior: Option<PosteriorOut<'a>>,
}

fn gof_test(cmd: &Command, a: &GofTestArgs) -> Result<()> {
    let data = load_csv(&a.input, a.angle_unit.into())?;
    let dim = data.dim();
    let cfg = TestConfig::new(
        a.statistic.into(),
        BandwidthSpec::new(a.h, degree(a.degree))?,
        make_grid(&BoxRegion::unit(dim), &resolution(a.grid, dim))?,
        BoundaryWeight::for_sample_size(data.n(), dim)?,
    )?;
    let mut scheme = BootstrapScheme::new(a.boot.into(), a.b)?;
    scheme.recenter_residuals = a.recenter;
    scheme.residual_bandwidth = a.residual_h;
    let fit = FitConfig {
        seed: a.seed,
        ..FitConfig::default()
    };
    let run = match &a.spatial {
        Some(sp) => run_spatial_bootstrap(&data, &scheme, &cfg, sp, &fit, a.seed)?,
        None => run_iid_bootstrap(&data, &scheme, &cfg, &fit, a.seed)?,
    };
    let out = GofOut {
        observed: run.observed,
        p_value: run.p_value,
        b: run.b,
        replicates: &run.replicates,
        scheme: run.scheme,
        statistic: run.statistic,
        failed_replicates: run.failed_replicates,
        excluded_points: run.excluded_points,
        residual_source: run.residual_source,
        null_model: &run.null_model,
        posterior: run.posterior.as_ref().map(|p| PosteriorOut {
            mu: p.mu_mean.radians(),
            sigma2: p.sigma2_mean,
            a_e: p.a_e_mean,
            decay_acceptance: p.decay_acceptance,
            warnings: &p.warnings,
        }),
    };
    write_json(cmd, Some(a.seed), out, a.out.as_deref())
}

fn simulate_field_cmd(cmd: &Command, a: &SimulateFieldArgs) -> Result<()> {
    let sites = match (&a.locations, a.side) {
        (Some(p), _) => {
            let file = File::open(p).with_context(|| format!("cannot open {}", p.display()))?;
            parse_points_csv(BufReader::new(file))?
        }
        (None, Some(side)) => lattice(side, a.dim)?,
        (None, None) => return Err(usage("one of --locations or --side is required")),
    };
    let model = SpatialModel {
        mu: wrap(a.mu)?,
        cov: ExponentialCovariance::new(a.sigma2, a.a_e)?,
    };
    let field = FieldSimulator::new(&model, &sites)?.sample(&mut substream(a.seed, &[]));
    let mut w = open_out(a.out.as_deref())?;
    csv_header(&mut *w, cmd, Some(a.seed))?;
    let axes: Vec<String> = (1..=sites.dim()).map(|j| format!("x{j}")).collect();
    writeln!(w, "{},epsilon", axes.join(","))?;
    for (x, e) in sites.rows().zip(&field) {
        let xs: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{},{}", xs.join(","), e.radians())?;
    }
    w.flush()?;
    Ok(())
}

fn fit_spatial(cmd: &Command, a: &FitSpatialArgs) -> Result<()> {
    let data = load_csv(&a.input, a.angle_unit.into())?;
    let cfg = a.resolved.as_ref().expect("resolved before dispatch");
    let post = mh_fit(
        data.responses(),
        data.covariates(),
        cfg,
        &mut substream(a.seed, &[]),
    )?;
    write_json(cmd, Some(a.seed), post, a.out.as_deref())
}

fn write_table_outputs(
    cmd: &Command,
    seed: u64,
    table: &RejectionTable,
    wide: Option<Statistic>,
    out: Option<&Path>,
    log: Option<&Path>,
) -> Result<()> {
    let out = out.ok_or_else(|| usage("--out is required"))?;
    let mut w = open_out(Some(out))?;
    csv_header(&mut *w, cmd, Some(seed))?;
    match wide {
        Some(stat) => table.write_wide_csv(&mut w, stat)?,
        None => table.write_long_csv(&mut w)?,
    }
    w.flush()?;
    let log = log.map_or_else(|| sibling_log(out), Path::to_path_buf);
    let mut w = open_out(Some(&log))?;
    csv_header(&mut *w, cmd, Some(seed))?;
    table.write_repeat_log(&mut w)?;
    w.flush()?;
    Ok(())
}

fn simulate(cmd: &Command, a: &SimulateArgs) -> Result<()> {
    let scn = a.scenario.as_ref().expect("resolved before dispatch");
    let table = run_experiment(scn)?;
    write_table_outputs(
        cmd,
        scn.seed,
        &table,
        None,
        a.out.as_deref(),
        a.log.as_deref(),
    )
}

fn reproduce(cmd: &Command, a: &ReproduceTableArgs) -> Result<()> {
    if a.out.is_none() {
        return Err(usage("--out is required"));
    }
    let spec = table_spec(a.table)?;
    let scale = match a.scale {
        ScaleArg::Desk => Scale::Desk,
        ScaleArg::Full => Scale::Full,
    };
    let preset = match a.sigma2 {
        PresetArg::Unit => VariancePreset::Unit,
        PresetArg::Small => VariancePreset::Small,
    };
    let mut table: Option<RejectionTable> = None;
    for mut scn in spec.scenarios(scale, preset, a.seed) {
        if let Some(mc) = a.mc {
            scn.mc = mc;
        }
        if let Some(b) = a.b {
            scn.b = b;
        }
        let part = run_experiment_with_factor(&scn, spec.factor)?;
        match table.as_mut() {
            Some(t) => t.append(part),
            None => table = Some(part),
        }
    }
    let table = table.ok_or_else(|| anyhow!("table {} has no scenarios", a.table))?;
    write_table_outputs(
        cmd,
        a.seed,
        &table,
        Some(spec.statistic),
        a.out.as_deref(),
        a.log.as_deref(),
    )
}

/// Recovers the command recorded in an artifact.
fn recorded_command(path: &Path) -> Result<Command> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    if first.trim_start().starts_with('{') {
        let mut rest = first;
        io::Read::read_to_string(&mut reader, &mut rest)?;
        let value: serde_json::Value = serde_json::from_str(&rest)?;
        let config = value
            .get("config")
            .ok_or_else(|| anyhow!("{} has no config field", path.display()))?;
        return Ok(serde_json::from_value(config.clone())?);
    }
    let mut line = first;
    loop {
        if let Some(json) = line.strip_prefix("# config: ") {
            return Ok(serde_json::from_str(json.trim_end())?);
        }
        if !line.starts_with('#') {
            break;
        }
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
    }
    bail!("{} carries no recorded configuration", path.display())
}

fn with_destination(mut cmd: Command, out: Option<PathBuf>, log: Option<PathBuf>) -> Command {
    match &mut cmd {
        Command::FitParam(a) => a.out = out,
        Command::FitNonparam(a) => a.out = out,
        Command::GofTest(a) => a.out = out,
        Command::SimulateField(a) => a.out = out,
        Command::FitSpatial(a) => a.out = out,
        Command::Simulate(a) => {
            a.out = out;
            a.log = log;
        }
        Command::ReproduceTable(a) => {
            a.out = out;
            a.log = log;
        }
        Command::Replay(_) => {}
    }
    cmd
}

fn dispatch(cmd: &Command) -> Result<()> {
    if let Command::Replay(r) = cmd {
        let recorded = recorded_command(&r.artifact)?;
        return dispatch(&with_destination(recorded, r.out.clone(), r.log.clone()));
    }
    let cmd = resolve(cmd)?;
    match &cmd {
        Command::FitParam(a) => fit_param(&cmd, a),
        Command::FitNonparam(a) => fit_nonparam(&cmd, a),
        Command::GofTest(a) => gof_test(&cmd, a),
        Command::SimulateField(a) => simulate_field_cmd(&cmd, a),
        Command::FitSpatial(a) => fit_spatial(&cmd, a),
        Command::Simulate(a) => simulate(&cmd, a),
        Command::ReproduceTable(a) => reproduce(&cmd, a),
        Command::Replay(_) => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
