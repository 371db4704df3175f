//! Argument definitions and execution for every subcommand.

use std::fmt;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lpiv_core::bounds::{
    intersect_restrictions, CovarianceLine, SignConstraint, SignRestriction, WeightIndex,
};
use lpiv_core::config::{parse_experiment, parse_model};
use lpiv_core::estimation::{
    decompose_multiplier, gmm_test_no_intersectoral, lpiv_estimate, sectoral_irf_estimate,
    ControlSpec, LpivOptions, SectoralOptions, Weighting,
};
use lpiv_core::svma::Panel;
use lpiv_core::verify::{bias_curve, run_experiment};
use lpiv_core::Error as CoreError;

use crate::data::{load_csv, write_panel_csv, DatasetSchema};
use crate::table::{fmt_float, render_table, render_table_with_notes, Metadata, RunHash};

/// Errors surfaced to the shell, split by exit code family.
#[derive(Debug)]
pub enum CliError {
    /// Argument combinations clap cannot express; exits with code 2.
    Usage(String),
    Core(CoreError),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

/// Exit code contract: 2 usage, 3 schema or parse, 4 weak instrument,
/// 5 rank or identification failure, 6 optimizer non-convergence, 1 other.
pub fn exit_code(err: &CliError) -> i32 {
    match err {
        CliError::Usage(_) => 2,
        CliError::Core(e) => match e {
            CoreError::Schema(_) | CoreError::Parse { .. } | CoreError::Config(_) => 3,
            CoreError::WeakDenominator { .. } => 4,
            CoreError::RankCondition { .. }
            | CoreError::UnderIdentified { .. }
            | CoreError::Collinearity { .. } => 5,
            CoreError::Convergence { .. } | CoreError::SingularPsi => 6,
            _ => 1,
        },
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "lpiv",
    version,
    about = "Impulse response estimation with external instruments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate a structural model to a CSV dataset
    Simulate(SimulateArgs),
    /// Single-instrument impulse response estimates with HAC standard errors
    Estimate(EstimateArgs),
    /// Multi-instrument estimates of per-sector responses
    Sectoral(SectoralArgs),
    /// Split a cumulative estimate into sector weights and multipliers
    Decompose(DecomposeArgs),
    /// Test that no sector reacts to another sector's shock on impact
    Test(TestArgs),
    /// Identified set for two shock responses under sign restrictions
    Bounds(BoundsArgs),
    /// Counterfactual response pairs along the instrument covariance line
    Counterfactual(CounterfactualArgs),
    /// Monte Carlo coverage experiment from a JSON config
    Montecarlo(MontecarloArgs),
}

/// Dataset location and column mapping, shared by estimation commands.
#[derive(Args, Debug)]
pub struct DataArgs {
    /// Input dataset (CSV; `#` lines are skipped)
    #[arg(long)]
    pub data: PathBuf,
    /// Outcome column
    #[arg(long, default_value = "y")]
    pub y_col: String,
    /// Aggregate regressor column
    #[arg(long, default_value = "x")]
    pub x_col: String,
    /// Comma-separated sector columns (default: headers x_1, x_2, ...)
    #[arg(long, value_delimiter = ',')]
    pub sector_cols: Option<Vec<String>>,
    /// Comma-separated instrument columns (default: headers z_1, z_2, ...)
    #[arg(long, value_delimiter = ',')]
    pub instrument_cols: Option<Vec<String>>,
    /// Keep columns in original units instead of subtracting sample means
    #[arg(long)]
    pub no_demean: bool,
}

impl DataArgs {
    fn schema(&self) -> DatasetSchema {
        DatasetSchema {
            y_col: self.y_col.clone(),
            x_col: self.x_col.clone(),
            sector_cols: self.sector_cols.clone(),
            instrument_cols: self.instrument_cols.clone(),
            demean: !self.no_demean,
        }
    }

    fn load(&self, hash: &mut RunHash) -> Result<Panel, CliError> {
        let bytes = fs::read(&self.data).map_err(CoreError::from)?;
        hash.absorb(&bytes);
        Ok(load_csv(&bytes, &self.schema())?)
    }
}

/// Control set and HAC options shared by estimation commands.
#[derive(Args, Debug)]
pub struct ControlArgs {
    /// Number of lags in the control set
    #[arg(long, default_value_t = 4)]
    pub lag_order: usize,
    /// Drop lagged outcomes from the controls
    #[arg(long)]
    pub no_y_lags: bool,
    /// Drop lagged aggregates from the controls
    #[arg(long)]
    pub no_x_lags: bool,
    /// Drop lags of the instrument in use from the controls
    #[arg(long)]
    pub no_instrument_lags: bool,
    /// Add lagged sector columns to the controls
    #[arg(long)]
    pub sector_lags: bool,
    /// Residualize on a constant only
    #[arg(long, conflicts_with_all = ["lag_order", "no_y_lags", "no_x_lags", "no_instrument_lags", "sector_lags"])]
    pub constant_only: bool,
    /// Newey-West bandwidth (default: horizon + 1)
    #[arg(long)]
    pub bandwidth: Option<usize>,
}

impl ControlArgs {
    fn spec(&self) -> ControlSpec {
        if self.constant_only {
            return ControlSpec::constant_only();
        }
        ControlSpec {
            lag_order: self.lag_order,
            include_y_lags: !self.no_y_lags,
            include_x_lags: !self.no_x_lags,
            include_instrument_lags: !self.no_instrument_lags,
            include_sector_lags: self.sector_lags,
        }
    }
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Model description (JSON)
    #[arg(long)]
    pub model: PathBuf,
    /// Number of periods to draw
    #[arg(long)]
    pub t_len: usize,
    /// RNG seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path, '-' for stdout
    #[arg(long, default_value = "-")]
    pub output: String,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Instrument: column name or 1-based position among instrument columns
    #[arg(long, default_value = "1")]
    pub instrument: String,
    /// Horizons: comma list "0,2,4" or inclusive range "0:8"
    #[arg(long, default_value = "0")]
    pub horizons: String,
    /// Ratio of cumulative responses instead of levels
    #[arg(long)]
    pub cumulative: bool,
    #[command(flatten)]
    pub controls: ControlArgs,
    /// Output path, '-' for stdout
    #[arg(long, default_value = "-")]
    pub output: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum WeightingArg {
    /// Identity weight on the stacked moments
    Identity,
    /// Inverse instrument second-moment matrix
    Gram,
    /// Two-step efficient weight from a first-step fit
    Efficient,
}

impl WeightingArg {
    fn to_core(self) -> Weighting {
        match self {
            WeightingArg::Identity => Weighting::Identity,
            WeightingArg::Gram => Weighting::InstrumentGram,
            WeightingArg::Efficient => Weighting::TwoStepEfficient,
        }
    }
}

#[derive(Args, Debug)]
pub struct SectoralArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Horizons: comma list "0,2,4" or inclusive range "0:8"
    #[arg(long, default_value = "0")]
    pub horizons: String,
    /// Cumulative responses instead of levels
    #[arg(long)]
    pub cumulative: bool,
    /// Moment weighting when over-identified
    #[arg(long, value_enum, default_value = "gram")]
    pub weighting: WeightingArg,
    #[command(flatten)]
    pub controls: ControlArgs,
    /// Output path, '-' for stdout
    #[arg(long, default_value = "-")]
    pub output: String,
}

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Instrument: column name or 1-based position among instrument columns
    #[arg(long, default_value = "1")]
    pub instrument: String,
    /// Horizons: comma list "0,2,4" or inclusive range "0:8"
    #[arg(long, default_value = "0")]
    pub horizons: String,
    #[command(flatten)]
    pub controls: ControlArgs,
    /// Output path, '-' for stdout
    #[arg(long, default_value = "-")]
    pub output: String,
}

#[derive(Args, Debug)]
pub struct TestArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Horizon of the moment conditions
    #[arg(long, default_value_t = 0)]
    pub horizon: usize,
    #[command(flatten)]
    pub controls: ControlArgs,
    /// Output path, '-' for stdout
    #[arg(long, default_value = "-")]
    pub output: String,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    /// Sign restriction "w1>0:BETA", "w1<0:BETA", "w2>0:BETA", or
    /// "w2<0:BETA"; repeat to intersect
    #[arg(long = "restriction", required = true)]
    pub restrictions: Vec<String>,
    /// Output path, '-' for stdout
    #[arg(long, default_value = "-")]
    pub output: String,
}

#[derive(Args, Debug)]
pub struct CounterfactualArgs {
    /// Instrument-outcome covariance (left side of the line)
    #[arg(long, allow_hyphen_values = true)]
    pub c_y: f64,
    /// Covariance coefficient on the first response
    #[arg(long, allow_hyphen_values = true)]
    pub c_1: f64,
    /// Covariance coefficient on the second response
    #[arg(long, allow_hyphen_values = true)]
    pub c_2: f64,
    /// Comma-separated first-response values to fix
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta1: Option<Vec<f64>>,
    /// Comma-separated second-response values to fix
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta2: Option<Vec<f64>>,
    /// Output path, '-' for stdout
    #[arg(long, default_value = "-")]
    pub output: String,
}

#[derive(Args, Debug)]
pub struct MontecarloArgs {
    /// Experiment description (JSON)
    #[arg(long)]
    pub experiment: PathBuf,
    /// Report mean bias at these sample lengths instead of coverage,
    /// comma-separated
    #[arg(long)]
    pub bias_grid: Option<String>,
    /// Output path, '-' for stdout
    #[arg(long, default_value = "-")]
    pub output: String,
}

/// Rendered output plus where to put it; `None` means stdout.
#[derive(Debug)]
pub struct Rendered {
    pub text: String,
    pub output: Option<PathBuf>,
}

fn destination(output: &str) -> Option<PathBuf> {
    if output == "-" {
        None
    } else {
        Some(PathBuf::from(output))
    }
}

fn shell_quote(arg: &str) -> String {
    if arg.is_empty() || arg.chars().any(char::is_whitespace) {
        format!("'{arg}'")
    } else {
        arg.to_string()
    }
}

fn command_line(argv: &[String]) -> String {
    argv.iter()
        .map(|a| shell_quote(a))
        .collect::<Vec<_>>()
        .join(" ")
}

/// "0,2,4" or inclusive "0:8".
fn parse_horizons(text: &str) -> Result<Vec<usize>, CliError> {
    let bad = |msg: String| CliError::Usage(format!("invalid --horizons '{text}': {msg}"));
    if let Some((lo, hi)) = text.split_once(':') {
        let lo: usize = lo
            .trim()
            .parse()
            .map_err(|e| bad(format!("range start: {e}")))?;
        let hi: usize = hi
            .trim()
            .parse()
            .map_err(|e| bad(format!("range end: {e}")))?;
        if hi < lo {
            return Err(bad(format!("range {lo}:{hi} runs backwards")));
        }
        return Ok((lo..=hi).collect());
    }
    let horizons: Vec<usize> = text
        .split(',')
        .map(|part| part.trim().parse().map_err(|e| bad(format!("{e}"))))
        .collect::<Result<_, _>>()?;
    if horizons.is_empty() {
        return Err(bad("no horizons given".into()));
    }
    Ok(horizons)
}

/// Instrument column name, or 1-based position among the panel's
/// instrument columns.
fn resolve_instrument(panel: &Panel, key: &str) -> Result<usize, CliError> {
    let names = &panel.names().instruments;
    if let Some(idx) = names.iter().position(|n| n == key) {
        return Ok(idx);
    }
    if let Ok(pos) = key.parse::<usize>() {
        if pos >= 1 && pos <= names.len() {
            return Ok(pos - 1);
        }
    }
    Err(CliError::Usage(format!(
        "instrument '{}' not found; columns are: {}",
        key,
        names.join(", ")
    )))
}

fn parse_restriction(text: &str) -> Result<SignRestriction, CliError> {
    let bad = || {
        CliError::Usage(format!(
            "invalid --restriction '{text}': expected w1>0:BETA, w1<0:BETA, w2>0:BETA, or w2<0:BETA"
        ))
    };
    let (lhs, beta_text) = text.split_once(':').ok_or_else(bad)?;
    let beta: f64 = beta_text.trim().parse().map_err(|_| bad())?;
    if !beta.is_finite() {
        return Err(bad());
    }
    let (weight, sign) = match lhs.trim() {
        "w1>0" => (WeightIndex::W1, SignConstraint::Positive),
        "w1<0" => (WeightIndex::W1, SignConstraint::Negative),
        "w2>0" => (WeightIndex::W2, SignConstraint::Positive),
        "w2<0" => (WeightIndex::W2, SignConstraint::Negative),
        _ => return Err(bad()),
    };
    Ok(SignRestriction { weight, sign, beta })
}

fn read_input(path: &PathBuf, hash: &mut RunHash) -> Result<Vec<u8>, CliError> {
    let bytes = fs::read(path).map_err(CoreError::from)?;
    hash.absorb(&bytes);
    Ok(bytes)
}

fn utf8(bytes: Vec<u8>, what: &str) -> Result<String, CliError> {
    String::from_utf8(bytes)
        .map_err(|e| CliError::Core(CoreError::Schema(format!("{what} is not utf-8: {e}"))))
}

/// Executes one parsed invocation and renders its output table.
pub fn run(cli: &Cli, argv: &[String]) -> Result<Rendered, CliError> {
    let mut hash = RunHash::new(argv);
    let command = command_line(argv);
    match &cli.command {
        Command::Simulate(args) => {
            let json = utf8(read_input(&args.model, &mut hash)?, "model config")?;
            let (model, specs) = parse_model(&json)?;
            let panel = model.simulate(&specs, args.t_len, args.seed)?;
            let meta = Metadata {
                command,
                config_sha256: hash.finish(),
            };
            let mut buf = Vec::new();
            write_panel_csv(&mut buf, &panel, Some(&meta))?;
            Ok(Rendered {
                text: String::from_utf8(buf).expect("csv output is utf-8"),
                output: destination(&args.output),
            })
        }
        Command::Estimate(args) => {
            let horizons = parse_horizons(&args.horizons)?;
            let panel = args.data.load(&mut hash)?;
            let instrument = resolve_instrument(&panel, &args.instrument)?;
            let spec = args.controls.spec();
            let opts = LpivOptions {
                cumulative: args.cumulative,
                bandwidth: args.controls.bandwidth,
            };
            let mut rows = Vec::new();
            for &h in &horizons {
                let est = lpiv_estimate(&panel, instrument, h, &spec, &opts)?;
                rows.push(vec![
                    h.to_string(),
                    fmt_float(est.point[0]),
                    fmt_float(est.std_errors[0]),
                    est.nobs.to_string(),
                ]);
            }
            let meta = Metadata {
                command,
                config_sha256: hash.finish(),
            };
            Ok(Rendered {
                text: render_table(
                    &meta,
                    &["horizon", "estimate", "std_error", "nobs"],
                    &rows,
                ),
                output: destination(&args.output),
            })
        }
        Command::Sectoral(args) => {
            let horizons = parse_horizons(&args.horizons)?;
            let panel = args.data.load(&mut hash)?;
            let spec = args.controls.spec();
            let opts = SectoralOptions {
                cumulative: args.cumulative,
                weighting: args.weighting.to_core(),
                bandwidth: args.controls.bandwidth,
            };
            let mut rows = Vec::new();
            for &h in &horizons {
                let (est, _) = sectoral_irf_estimate(&panel, h, &spec, &opts)?;
                for s in 0..est.point.len() {
                    rows.push(vec![
                        h.to_string(),
                        panel.names().sectors[s].clone(),
                        fmt_float(est.point[s]),
                        fmt_float(est.std_errors[s]),
                        est.nobs.to_string(),
                    ]);
                }
            }
            let meta = Metadata {
                command,
                config_sha256: hash.finish(),
            };
            Ok(Rendered {
                text: render_table(
                    &meta,
                    &["horizon", "sector", "estimate", "std_error", "nobs"],
                    &rows,
                ),
                output: destination(&args.output),
            })
        }
        Command::Decompose(args) => {
            let horizons = parse_horizons(&args.horizons)?;
            let panel = args.data.load(&mut hash)?;
            let instrument = resolve_instrument(&panel, &args.instrument)?;
            let spec = args.controls.spec();
            let mut rows = Vec::new();
            for &h in &horizons {
                let d =
                    decompose_multiplier(&panel, instrument, h, &spec, args.controls.bandwidth)?;
                for s in 0..d.weights.len() {
                    rows.push(vec![
                        h.to_string(),
                        fmt_float(d.beta.point[0]),
                        fmt_float(d.beta.std_errors[0]),
                        panel.names().sectors[s].clone(),
                        fmt_float(d.weights[s]),
                        d.multipliers
                            .as_ref()
                            .map_or(String::new(), |m| fmt_float(m[s])),
                        d.identity_gap.map_or(String::new(), fmt_float),
                    ]);
                }
            }
            let meta = Metadata {
                command,
                config_sha256: hash.finish(),
            };
            Ok(Rendered {
                text: render_table(
                    &meta,
                    &[
                        "horizon",
                        "beta",
                        "beta_se",
                        "sector",
                        "weight",
                        "multiplier",
                        "identity_gap",
                    ],
                    &rows,
                ),
                output: destination(&args.output),
            })
        }
        Command::Test(args) => {
            let panel = args.data.load(&mut hash)?;
            let spec = args.controls.spec();
            let res =
                gmm_test_no_intersectoral(&panel, args.horizon, &spec, args.controls.bandwidth)?;
            let mut rows = vec![
                vec!["statistic".to_string(), fmt_float(res.statistic)],
                vec!["dof".to_string(), res.dof.to_string()],
                vec!["p_value".to_string(), fmt_float(res.p_value)],
                vec!["iterations".to_string(), res.iterations.to_string()],
                vec!["criterion".to_string(), fmt_float(res.criterion)],
            ];
            for r in 0..res.psi0.nrows() {
                for c in 0..res.psi0.ncols() {
                    rows.push(vec![
                        format!("psi0[{},{}]", r + 1, c + 1),
                        fmt_float(res.psi0[(r, c)]),
                    ]);
                }
            }
            for k in 0..res.theta.len() {
                rows.push(vec![format!("theta[{}]", k + 1), fmt_float(res.theta[k])]);
            }
            let meta = Metadata {
                command,
                config_sha256: hash.finish(),
            };
            Ok(Rendered {
                text: render_table(&meta, &["field", "value"], &rows),
                output: destination(&args.output),
            })
        }
        Command::Bounds(args) => {
            let restrictions: Vec<SignRestriction> = args
                .restrictions
                .iter()
                .map(|s| parse_restriction(s))
                .collect::<Result<_, _>>()?;
            let set = intersect_restrictions(&restrictions)?;
            let mut rows = Vec::new();
            for (i, region) in set.regions().iter().enumerate() {
                rows.push(vec![
                    (i + 1).to_string(),
                    fmt_float(region.t1_lower),
                    fmt_float(region.t1_upper),
                    fmt_float(region.t2_lower),
                    fmt_float(region.t2_upper),
                    fmt_float(region.diff_lower),
                    fmt_float(region.diff_upper),
                ]);
            }
            if let (Some((t1_lo, t1_hi)), Some((t2_lo, t2_hi))) =
                (set.theta1_envelope(), set.theta2_envelope())
            {
                rows.push(vec![
                    "envelope".to_string(),
                    fmt_float(t1_lo),
                    fmt_float(t1_hi),
                    fmt_float(t2_lo),
                    fmt_float(t2_hi),
                    String::new(),
                    String::new(),
                ]);
            }
            let meta = Metadata {
                command,
                config_sha256: hash.finish(),
            };
            Ok(Rendered {
                text: render_table_with_notes(
                    &meta,
                    &[("empty", set.is_empty().to_string())],
                    &[
                        "region",
                        "theta1_lower",
                        "theta1_upper",
                        "theta2_lower",
                        "theta2_upper",
                        "diff_lower",
                        "diff_upper",
                    ],
                    &rows,
                ),
                output: destination(&args.output),
            })
        }
        Command::Counterfactual(args) => {
            let line = CovarianceLine::new(args.c_y, args.c_1, args.c_2)?;
            let w1 = line.weight_w1().ok();
            let mut rows = Vec::new();
            match (&args.theta1, &args.theta2) {
                (Some(_), Some(_)) | (None, None) => {
                    return Err(CliError::Usage(
                        "pass exactly one of --theta1 or --theta2".into(),
                    ));
                }
                (Some(values), None) => {
                    for &t1 in values {
                        let t2 = line.theta2_given(t1)?;
                        rows.push(vec![
                            "theta1".to_string(),
                            fmt_float(t1),
                            fmt_float(t2),
                        ]);
                    }
                }
                (None, Some(values)) => {
                    for &t2 in values {
                        let t1 = line.theta1_given(t2)?;
                        rows.push(vec![
                            "theta2".to_string(),
                            fmt_float(t1),
                            fmt_float(t2),
                        ]);
                    }
                }
            }
            let meta = Metadata {
                command,
                config_sha256: hash.finish(),
            };
            Ok(Rendered {
                text: render_table_with_notes(
                    &meta,
                    &[(
                        "weight_w1",
                        w1.map_or("undefined".to_string(), fmt_float),
                    )],
                    &["given", "theta1", "theta2"],
                    &rows,
                ),
                output: destination(&args.output),
            })
        }
        Command::Montecarlo(args) => {
            let json = utf8(read_input(&args.experiment, &mut hash)?, "experiment config")?;
            let experiment = parse_experiment(&json)?;
            if let Some(grid_text) = &args.bias_grid {
                let grid: Vec<usize> = grid_text
                    .split(',')
                    .map(|p| {
                        p.trim().parse().map_err(|e| {
                            CliError::Usage(format!("invalid --bias-grid '{grid_text}': {e}"))
                        })
                    })
                    .collect::<Result<_, _>>()?;
                let points = bias_curve(&experiment, &grid)?;
                let mut rows = Vec::new();
                for point in &points {
                    for (k, b) in point.bias.iter().enumerate() {
                        rows.push(vec![
                            point.t_len.to_string(),
                            point.horizon.to_string(),
                            (k + 1).to_string(),
                            fmt_float(*b),
                        ]);
                    }
                }
                let meta = Metadata {
                    command,
                    config_sha256: hash.finish(),
                };
                return Ok(Rendered {
                    text: render_table(
                        &meta,
                        &["t_len", "horizon", "component", "bias"],
                        &rows,
                    ),
                    output: destination(&args.output),
                });
            }
            let report = run_experiment(&experiment)?;
            let mut rows = Vec::new();
            for outcome in &report.outcomes {
                if outcome.target_values.is_empty() {
                    rows.push(vec![
                        outcome.horizon.to_string(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        outcome
                            .rejection_rate
                            .map_or(String::new(), fmt_float),
                        outcome.passed.to_string(),
                    ]);
                    continue;
                }
                for k in 0..outcome.target_values.len() {
                    rows.push(vec![
                        outcome.horizon.to_string(),
                        (k + 1).to_string(),
                        fmt_float(outcome.target_values[k]),
                        fmt_float(outcome.mean_estimate[k]),
                        fmt_float(outcome.mean_std_error[k]),
                        fmt_float(outcome.coverage[k]),
                        String::new(),
                        outcome.passed.to_string(),
                    ]);
                }
            }
            let meta = Metadata {
                command,
                config_sha256: hash.finish(),
            };
            Ok(Rendered {
                text: render_table_with_notes(
                    &meta,
                    &[
                        ("replications", report.replications.to_string()),
                        ("passed", report.passed.to_string()),
                    ],
                    &[
                        "horizon",
                        "component",
                        "target",
                        "mean_estimate",
                        "mean_std_error",
                        "coverage",
                        "rejection_rate",
                        "passed",
                    ],
                    &rows,
                ),
                output: destination(&args.output),
            })
        }
    }
}
