//! Monte Carlo verification: simulate a known model repeatedly, estimate,
//! and check that the estimates bracket the population values.

use crate::error::{Error, Result};
use crate::estimation::{
    gmm_test_no_intersectoral, lpiv_estimate, sectoral_irf_estimate, ControlSpec, LpivOptions,
    SectoralOptions,
};
use crate::identification::{cumulative_lpiv_estimand, lpiv_estimand, population};
use crate::rng::derive_seed;
use crate::svma::{InstrumentSpec, Model, Panel, SvmaModel};

/// What the experiment estimates each replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// Single-instrument aggregate response at each horizon.
    AggregateIrf { instrument: usize },
    /// Single-instrument ratio of cumulative responses.
    AggregateCumulative { instrument: usize },
    /// Multi-instrument sector responses.
    SectoralIrf,
    /// Multi-instrument cumulative sector responses.
    SectoralCumulative,
    /// Rejection rate of the no-intersectoral-impact test.
    NoIntersectoralTest,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Coverage counts an estimate within this many standard errors.
    pub se_multiple: f64,
    /// Minimum acceptable coverage fraction per component.
    pub min_coverage: f64,
    /// Acceptable rejection-rate interval for the test target.
    pub rejection_band: Option<(f64, f64)>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            se_multiple: 3.0,
            min_coverage: 0.90,
            rejection_band: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub model: Model,
    pub instruments: Vec<InstrumentSpec>,
    pub t_len: usize,
    pub horizons: Vec<usize>,
    pub replications: usize,
    pub base_seed: u64,
    pub target: Target,
    pub controls: ControlSpec,
    pub tolerances: Tolerances,
    /// Nominal level for the test target.
    pub level: f64,
}

#[derive(Debug, Clone)]
pub struct HorizonOutcome {
    pub horizon: usize,
    /// Population values, one per estimated component; empty for the test
    /// target.
    pub target_values: Vec<f64>,
    pub mean_estimate: Vec<f64>,
    pub mean_std_error: Vec<f64>,
    /// Fraction of replications with the estimate within
    /// `se_multiple * SE` of the target, per component.
    pub coverage: Vec<f64>,
    pub rejection_rate: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub outcomes: Vec<HorizonOutcome>,
    pub replications: usize,
    pub passed: bool,
}

fn baseline_of(model: &Model) -> Result<SvmaModel> {
    match model {
        Model::Baseline(m) => Ok(m.clone()),
        Model::Augmented(a) => a.collapse(),
    }
}

fn simulate_panel(model: &Model, specs: &[InstrumentSpec], t_len: usize, seed: u64) -> Result<Panel> {
    model.simulate(specs, t_len, seed)
}

fn target_values(e: &Experiment, h: usize) -> Result<Vec<f64>> {
    match e.target {
        Target::AggregateIrf { instrument } => {
            let base = baseline_of(&e.model)?;
            Ok(vec![lpiv_estimand(&base, &e.instruments[instrument], h)?])
        }
        Target::AggregateCumulative { instrument } => {
            let base = baseline_of(&e.model)?;
            Ok(vec![
                cumulative_lpiv_estimand(&base, &e.instruments[instrument], h)?.value,
            ])
        }
        Target::SectoralIrf | Target::SectoralCumulative => {
            let aug = match &e.model {
                Model::Augmented(a) => a.clone(),
                Model::Baseline(m) => m.embed_augmented(),
            };
            let values = if e.target == Target::SectoralIrf {
                population::sectoral_estimand(&aug, &e.instruments, h, None)?
            } else {
                population::sectoral_cumulative_estimand(&aug, &e.instruments, h, None)?
            };
            Ok(values.iter().cloned().collect())
        }
        Target::NoIntersectoralTest => Ok(Vec::new()),
    }
}

struct Accumulator {
    sum_point: Vec<f64>,
    sum_se: Vec<f64>,
    covered: Vec<usize>,
    rejections: usize,
}

impl Accumulator {
    fn new(k: usize) -> Self {
        Self {
            sum_point: vec![0.0; k],
            sum_se: vec![0.0; k],
            covered: vec![0; k],
            rejections: 0,
        }
    }
}

/// Runs all replications and summarizes coverage or rejection rates per
/// horizon.  Any failing replication aborts the experiment with its index.
pub fn run_experiment(e: &Experiment) -> Result<ExperimentReport> {
    if e.replications == 0 {
        return Err(Error::InvalidArgument(
            "experiment needs at least one replication".into(),
        ));
    }
    if e.horizons.is_empty() {
        return Err(Error::InvalidArgument("experiment has no horizons".into()));
    }
    if let Target::AggregateIrf { instrument } | Target::AggregateCumulative { instrument } =
        e.target
    {
        if instrument >= e.instruments.len() {
            return Err(Error::InvalidArgument(format!(
                "target instrument {} out of range ({} instruments)",
                instrument,
                e.instruments.len()
            )));
        }
    }

    let targets: Vec<Vec<f64>> = e
        .horizons
        .iter()
        .map(|&h| target_values(e, h))
        .collect::<Result<_>>()?;
    let mut acc: Vec<Accumulator> = targets
        .iter()
        .map(|t| Accumulator::new(t.len()))
        .collect();

    for r in 0..e.replications {
        let seed = derive_seed(e.base_seed, r as u64);
        run_replication(e, seed, &targets, &mut acc).map_err(|err| Error::ReplicationFailed {
            index: r,
            source: Box::new(err),
        })?;
    }

    let rf = e.replications as f64;
    let mut outcomes = Vec::with_capacity(e.horizons.len());
    let mut all_passed = true;
    for (i, &h) in e.horizons.iter().enumerate() {
        let a = &acc[i];
        let coverage: Vec<f64> = a.covered.iter().map(|&c| c as f64 / rf).collect();
        let rejection_rate = match e.target {
            Target::NoIntersectoralTest => Some(a.rejections as f64 / rf),
            _ => None,
        };
        let passed = match e.target {
            Target::NoIntersectoralTest => match (e.tolerances.rejection_band, rejection_rate) {
                (Some((lo, hi)), Some(rate)) => rate >= lo && rate <= hi,
                _ => true,
            },
            _ => coverage.iter().all(|&c| c >= e.tolerances.min_coverage),
        };
        all_passed &= passed;
        outcomes.push(HorizonOutcome {
            horizon: h,
            target_values: targets[i].clone(),
            mean_estimate: a.sum_point.iter().map(|s| s / rf).collect(),
            mean_std_error: a.sum_se.iter().map(|s| s / rf).collect(),
            coverage,
            rejection_rate,
            passed,
        });
    }

    Ok(ExperimentReport {
        outcomes,
        replications: e.replications,
        passed: all_passed,
    })
}

fn run_replication(
    e: &Experiment,
    seed: u64,
    targets: &[Vec<f64>],
    acc: &mut [Accumulator],
) -> Result<()> {
    let panel = simulate_panel(&e.model, &e.instruments, e.t_len, seed)?;
    for (i, &h) in e.horizons.iter().enumerate() {
        match e.target {
            Target::AggregateIrf { instrument } | Target::AggregateCumulative { instrument } => {
                let opts = LpivOptions {
                    cumulative: matches!(e.target, Target::AggregateCumulative { .. }),
                    bandwidth: None,
                };
                let est = lpiv_estimate(&panel, instrument, h, &e.controls, &opts)?;
                record(&mut acc[i], &targets[i], &est.point, &est.std_errors, e);
            }
            Target::SectoralIrf | Target::SectoralCumulative => {
                let opts = SectoralOptions {
                    cumulative: matches!(e.target, Target::SectoralCumulative),
                    ..SectoralOptions::default()
                };
                let (est, _) = sectoral_irf_estimate(&panel, h, &e.controls, &opts)?;
                record(&mut acc[i], &targets[i], &est.point, &est.std_errors, e);
            }
            Target::NoIntersectoralTest => {
                let res = gmm_test_no_intersectoral(&panel, h, &e.controls, None)?;
                if res.p_value < e.level {
                    acc[i].rejections += 1;
                }
            }
        }
    }
    Ok(())
}

fn record(acc: &mut Accumulator, targets: &[f64], point: &[f64], ses: &[f64], e: &Experiment) {
    for k in 0..targets.len() {
        acc.sum_point[k] += point[k];
        acc.sum_se[k] += ses[k];
        if (point[k] - targets[k]).abs() <= e.tolerances.se_multiple * ses[k] {
            acc.covered[k] += 1;
        }
    }
}

#[derive(Debug, Clone)]
pub struct BiasPoint {
    pub t_len: usize,
    pub horizon: usize,
    /// Mean estimate minus target, per component.
    pub bias: Vec<f64>,
}

/// Mean bias across replications at each sample length in `t_grid`.
pub fn bias_curve(e: &Experiment, t_grid: &[usize]) -> Result<Vec<BiasPoint>> {
    if e.target == Target::NoIntersectoralTest {
        return Err(Error::InvalidArgument(
            "bias is undefined for the test target".into(),
        ));
    }
    if t_grid.is_empty() {
        return Err(Error::EmptyInput("no sample lengths given".into()));
    }
    let mut out = Vec::with_capacity(t_grid.len() * e.horizons.len());
    for &t_len in t_grid {
        let mut variant = e.clone();
        variant.t_len = t_len;
        let report = run_experiment(&variant)?;
        for outcome in report.outcomes {
            let bias = outcome
                .mean_estimate
                .iter()
                .zip(&outcome.target_values)
                .map(|(m, t)| m - t)
                .collect();
            out.push(BiasPoint {
                t_len,
                horizon: outcome.horizon,
                bias,
            });
        }
    }
    Ok(out)
}
