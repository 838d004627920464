//! Scenarios, replication control, sensitivity sweeps and calibration.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::engine::replication_seed;
use crate::error::{ConfigError, RunError};
use crate::metrics::{aggregate_replications, MeasureStat, ReplicationResult, TRANSACTIONS};
use crate::model::{validate_config, DepartmentConfig, ProactivityParams, Rota, StopStrategy};
use crate::world::{World, WorldSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioLabel {
    A,
    B,
    C,
    D,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotaChoice {
    Optimised,
    Real,
    Explicit(Rota),
}

/// Partial proactivity settings layered over the department defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub open_threshold: Option<f64>,
    pub close_threshold: Option<f64>,
    pub max_customers: Option<u32>,
    pub stop_strategy: Option<StopStrategy>,
    pub check_interval: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub label: ScenarioLabel,
    pub rota: RotaChoice,
    pub proactive: bool,
    pub overrides: Overrides,
}

impl Scenario {
    pub fn new(label: ScenarioLabel, rota: RotaChoice, proactive: bool) -> Self {
        Self {
            label,
            rota,
            proactive,
            overrides: Overrides::default(),
        }
    }

    /// Optimised staffing, proactiveness off.
    pub fn a() -> Self {
        Self::new(ScenarioLabel::A, RotaChoice::Optimised, false)
    }

    pub fn b() -> Self {
        Self::new(ScenarioLabel::B, RotaChoice::Optimised, true)
    }

    /// Real staffing, proactiveness off.
    pub fn c() -> Self {
        Self::new(ScenarioLabel::C, RotaChoice::Real, false)
    }

    pub fn d() -> Self {
        Self::new(ScenarioLabel::D, RotaChoice::Real, true)
    }

    pub fn from_label(label: &str) -> Option<Self> {
        match label.to_ascii_lowercase().as_str() {
            "a" => Some(Self::a()),
            "b" => Some(Self::b()),
            "c" => Some(Self::c()),
            "d" => Some(Self::d()),
            _ => None,
        }
    }

    pub fn with_overrides(mut self, o: Overrides) -> Self {
        self.overrides = o;
        if self.label != ScenarioLabel::Custom && o != Overrides::default() {
            self.label = ScenarioLabel::Custom;
        }
        self
    }

    pub fn rota(&self, cfg: &DepartmentConfig) -> Rota {
        match self.rota {
            RotaChoice::Optimised => cfg.rota.optimised,
            RotaChoice::Real => cfg.rota.real,
            RotaChoice::Explicit(r) => r,
        }
    }

    pub fn proactivity(&self, cfg: &DepartmentConfig) -> ProactivityParams {
        let mut p = cfg.proactivity;
        p.enabled = self.proactive;
        let o = &self.overrides;
        if let Some(x) = o.open_threshold {
            p.p2_open_threshold = x;
        }
        if let Some(x) = o.close_threshold {
            p.p2_close_threshold = x;
        }
        if let Some(x) = o.max_customers {
            p.p1_max_customers_as_temp_cashier = x;
        }
        if let Some(x) = o.stop_strategy {
            p.p5_stop_strategy = x;
        }
        if let Some(x) = o.check_interval {
            p.p6_check_interval = x;
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunPlan {
    pub scenario: Scenario,
    pub weeks: u32,
    pub replications: u32,
    pub base_seed: u64,
    pub ci_confidence: f64,
    pub ci_precision: f64,
}

impl RunPlan {
    pub fn new(scenario: Scenario, base_seed: u64) -> Self {
        Self {
            scenario,
            weeks: 52,
            replications: 20,
            base_seed,
            ci_confidence: 0.95,
            ci_precision: 0.05,
        }
    }

    fn check(&self, cfg: &DepartmentConfig) -> Result<(), RunError> {
        let v = validate_config(cfg);
        if !v.is_empty() {
            return Err(ConfigError::Invalid(v.iter().map(|x| x.to_string()).collect()).into());
        }
        if self.weeks == 0 {
            return Err(RunError::Plan("weeks must be at least 1".into()));
        }
        if self.replications == 0 {
            return Err(RunError::Plan("replications must be at least 1".into()));
        }
        if !(self.ci_confidence > 0.0 && self.ci_confidence < 1.0) {
            return Err(RunError::Plan("ci confidence must lie in (0, 1)".into()));
        }
        if !(self.ci_precision > 0.0) {
            return Err(RunError::Plan("ci precision must be positive".into()));
        }
        let rota = self.scenario.rota(cfg);
        if rota.cashiers < 0 || rota.normal < 0 || rota.expert < 0 {
            return Err(RunError::Plan(format!("rota {rota} has a negative count")));
        }
        let p = self.scenario.proactivity(cfg);
        if p.enabled && rota.count(crate::model::StaffType::Cashier) > p.p4_max_open_tills as usize
        {
            return Err(RunError::Plan(format!(
                "rota {rota} rosters more cashiers than the {} tills allowed",
                p.p4_max_open_tills
            )));
        }
        if !(p.p2_open_threshold >= 0.0 && p.p2_close_threshold >= 0.0 && p.p6_check_interval > 0.0)
        {
            return Err(RunError::Plan("proactivity thresholds out of range".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sufficiency {
    pub sufficient: bool,
    pub n: usize,
    pub mean: f64,
    pub half_width: f64,
    /// Half-width over |mean|; absolute half-width when the mean is 0.
    pub ratio: f64,
    pub required_n: usize,
}

fn t_quantile(confidence: f64, df: usize) -> f64 {
    let t = StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1");
    t.inverse_cdf(1.0 - (1.0 - confidence) / 2.0)
}

/// Confidence-interval check on a key output: enough replications once
/// the t-interval half-width is within `precision` of the mean.
pub fn check_replication_sufficiency(
    values: &[f64],
    confidence: f64,
    precision: f64,
) -> Result<Sufficiency, RunError> {
    let n = values.len();
    if n < 2 {
        return Err(RunError::Plan(
            "sufficiency needs at least two values".into(),
        ));
    }
    let (mean, sd) = crate::metrics::mean_sd(values);
    let (mean, sd) = (mean.unwrap_or(0.0), sd.unwrap_or(0.0));
    let half = |k: usize| t_quantile(confidence, k - 1) * sd / (k as f64).sqrt();
    let half_width = half(n);
    let scale = if mean == 0.0 { 1.0 } else { mean.abs() };
    let ratio = half_width / scale;
    let limit = precision * scale;
    let required_n = if sd == 0.0 {
        2
    } else {
        (2..=100_000).find(|&k| half(k) <= limit).unwrap_or(100_000)
    };
    Ok(Sufficiency {
        sufficient: ratio <= precision,
        n,
        mean,
        half_width,
        ratio,
        required_n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub plan: RunPlan,
    pub rota: Rota,
    pub proactivity: ProactivityParams,
    pub measures: Vec<MeasureStat>,
    /// Per-replication values of all 29 measures, replication order.
    pub per_replication: Vec<Vec<Option<f64>>>,
    pub sufficiency: Option<Sufficiency>,
}

impl ScenarioReport {
    pub fn transactions(&self) -> Vec<f64> {
        self.per_replication
            .iter()
            .filter_map(|r| r[TRANSACTIONS])
            .collect()
    }

    pub fn mean(&self, row: usize) -> Option<f64> {
        self.measures[row].mean
    }
}

/// Aggregated report plus the raw replication results.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub report: ScenarioReport,
    pub replications: Vec<ReplicationResult>,
}

pub fn run_scenario(cfg: &DepartmentConfig, plan: &RunPlan) -> Result<ScenarioRun, RunError> {
    plan.check(cfg)?;
    let rota = plan.scenario.rota(cfg);
    let proactivity = plan.scenario.proactivity(cfg);
    let settings = WorldSettings {
        rota,
        proactivity,
        weeks: plan.weeks,
        trace: false,
    };
    let results: Vec<ReplicationResult> = (0..plan.replications)
        .into_par_iter()
        .map(|r| {
            let seed = replication_seed(plan.base_seed, r);
            World::new(cfg.clone(), settings.clone(), seed).run()
        })
        .collect::<Result<_, _>>()?;
    let per_replication: Vec<Vec<Option<f64>>> = results
        .iter()
        .map(|r| r.measures(&cfg.monetary, &rota))
        .collect();
    let measures = aggregate_replications(&per_replication);
    let tx: Vec<f64> = per_replication
        .iter()
        .filter_map(|r| r[TRANSACTIONS])
        .collect();
    let sufficiency = if tx.len() >= 2 {
        Some(check_replication_sufficiency(
            &tx,
            plan.ci_confidence,
            plan.ci_precision,
        )?)
    } else {
        None
    };
    Ok(ScenarioRun {
        report: ScenarioReport {
            plan: *plan,
            rota,
            proactivity,
            measures,
            per_replication,
            sufficiency,
        },
        replications: results,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParam {
    /// Till-opening queue length; the closing length follows one below.
    QueueLength,
    /// Customers served per swap, under the count-only stop strategy.
    MaxCustomers,
    /// Stop strategy by number (1, 2, 3).
    StopStrategy,
}

impl SweepParam {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "queue-length" => Some(Self::QueueLength),
            "max-customers" => Some(Self::MaxCustomers),
            "stop-strategy" => Some(Self::StopStrategy),
            _ => None,
        }
    }

    /// Layers `x` onto the plan's scenario.
    pub fn apply(self, scenario: Scenario, x: f64) -> Result<Scenario, RunError> {
        let mut o = scenario.overrides;
        match self {
            SweepParam::QueueLength => {
                if !(x >= 0.0) {
                    return Err(RunError::Plan(format!("queue length {x} is negative")));
                }
                o.open_threshold = Some(x);
                o.close_threshold = Some((x - 1.0).max(0.0));
            }
            SweepParam::MaxCustomers => {
                if !(x >= 1.0 && x.fract() == 0.0) {
                    return Err(RunError::Plan(format!(
                        "max customers {x} is not a positive integer"
                    )));
                }
                o.max_customers = Some(x as u32);
                o.stop_strategy = Some(StopStrategy::CountOnly);
            }
            SweepParam::StopStrategy => {
                let s = (x.fract() == 0.0 && x >= 0.0)
                    .then(|| StopStrategy::from_number(x as u32))
                    .flatten()
                    .ok_or_else(|| RunError::Plan(format!("unknown stop strategy {x}")))?;
                o.stop_strategy = Some(s);
            }
        }
        Ok(scenario.with_overrides(o))
    }
}

/// One run per grid point, all sharing the plan's base seed.
pub fn sensitivity_sweep(
    cfg: &DepartmentConfig,
    plan: &RunPlan,
    param: SweepParam,
    grid: &[f64],
) -> Result<Vec<(f64, ScenarioRun)>, RunError> {
    if grid.is_empty() {
        return Err(RunError::Plan("empty sweep grid".into()));
    }
    grid.iter()
        .map(|&x| {
            let p = RunPlan {
                scenario: param.apply(plan.scenario, x)?,
                ..*plan
            };
            Ok((x, run_scenario(cfg, &p)?))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub value: f64,
    pub simulated: f64,
    pub target: f64,
    pub converged: bool,
    /// (parameter, mean transactions) for every point evaluated.
    pub evaluations: Vec<(f64, f64)>,
}

/// Bisection on mean weekly transactions. The response must be monotone
/// between `lo` and `hi`; the endpoints are evaluated first to bracket the
/// target.
pub fn calibrate_parameter(
    cfg: &DepartmentConfig,
    plan: &RunPlan,
    param: SweepParam,
    target: f64,
    (mut lo, mut hi): (f64, f64),
    tolerance: f64,
) -> Result<Calibration, RunError> {
    if !(lo < hi) || !(tolerance > 0.0) || !(target > 0.0) {
        return Err(RunError::Plan(
            "calibration needs lo < hi, positive tolerance and target".into(),
        ));
    }
    let mut evaluations = Vec::new();
    let eval = |x: f64, evaluations: &mut Vec<(f64, f64)>| -> Result<f64, RunError> {
        let p = RunPlan {
            scenario: param.apply(plan.scenario, x)?,
            ..*plan
        };
        let run = run_scenario(cfg, &p)?;
        let y = run.report.mean(TRANSACTIONS).unwrap_or(0.0);
        evaluations.push((x, y));
        Ok(y)
    };
    let close = |y: f64| (y - target).abs() <= tolerance * target;
    let f_lo = eval(lo, &mut evaluations)?;
    let f_hi = eval(hi, &mut evaluations)?;
    let mut best = if (f_lo - target).abs() <= (f_hi - target).abs() {
        (lo, f_lo)
    } else {
        (hi, f_hi)
    };
    if !close(best.1) {
        let (low, high) = (f_lo.min(f_hi), f_lo.max(f_hi));
        if target < low || target > high {
            return Err(RunError::Uncalibratable { target, low, high });
        }
        let increasing = f_hi > f_lo;
        while hi - lo >= 0.05 {
            let mid = 0.5 * (lo + hi);
            let f = eval(mid, &mut evaluations)?;
            if (f - target).abs() < (best.1 - target).abs() {
                best = (mid, f);
            }
            if close(f) {
                break;
            }
            if (f < target) == increasing {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    Ok(Calibration {
        value: best.0,
        simulated: best.1,
        target,
        converged: close(best.1),
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_table() {
        assert_eq!(Scenario::a().rota, RotaChoice::Optimised);
        assert!(!Scenario::a().proactive);
        assert!(Scenario::b().proactive);
        assert_eq!(Scenario::c().rota, RotaChoice::Real);
        assert!(Scenario::d().proactive);
        assert_eq!(Scenario::from_label("D"), Some(Scenario::d()));
        assert_eq!(Scenario::from_label("e"), None);
    }

    #[test]
    fn sufficiency_examples() {
        let s = check_replication_sufficiency(&[5.0, 5.0], 0.95, 0.05).unwrap();
        assert!(s.sufficient);
        assert_eq!(s.half_width, 0.0);
        let s = check_replication_sufficiency(&[100.0, 101.0, 99.0, 100.0], 0.95, 0.05).unwrap();
        // t(0.975, 3) = 3.182, s = sqrt(2/3)
        let oracle = 3.182_446_305_284_263 * (2.0f64 / 3.0).sqrt() / 2.0;
        assert!((s.half_width - oracle).abs() < 1e-6);
        assert!(s.sufficient);
        assert!((s.ratio - oracle / 100.0).abs() < 1e-8);
        assert!(check_replication_sufficiency(&[1.0], 0.95, 0.05).is_err());
        // zero mean falls back to the absolute half-width
        let z = check_replication_sufficiency(&[-1.0, 1.0], 0.95, 0.05).unwrap();
        assert!(!z.sufficient);
        assert_eq!(z.mean, 0.0);
    }

    #[test]
    fn sweep_parameters_map_onto_overrides() {
        let s = SweepParam::QueueLength.apply(Scenario::d(), 1.25).unwrap();
        assert_eq!(s.overrides.open_threshold, Some(1.25));
        assert_eq!(s.overrides.close_threshold, Some(0.25));
        assert_eq!(s.label, ScenarioLabel::Custom);
        let s = SweepParam::MaxCustomers.apply(Scenario::d(), 6.0).unwrap();
        assert_eq!(s.overrides.stop_strategy, Some(StopStrategy::CountOnly));
        assert!(SweepParam::StopStrategy.apply(Scenario::d(), 4.0).is_err());
        assert!(SweepParam::MaxCustomers.apply(Scenario::d(), 2.5).is_err());
    }

    #[test]
    fn plan_rejects_bad_input() {
        let cfg = DepartmentConfig::atv();
        let mut plan = RunPlan::new(Scenario::a(), 1);
        plan.weeks = 0;
        assert!(matches!(run_scenario(&cfg, &plan), Err(RunError::Plan(_))));
        let mut bad = cfg.clone();
        bad.probabilities.buy_after_browse = 1.5;
        let plan = RunPlan::new(Scenario::a(), 1);
        assert!(matches!(
            run_scenario(&bad, &plan),
            Err(RunError::Config(_))
        ));
    }

    #[test]
    fn short_run_is_deterministic() {
        let cfg = DepartmentConfig::atv();
        let mut plan = RunPlan::new(Scenario::d(), 42);
        plan.weeks = 1;
        plan.replications = 3;
        let a = run_scenario(&cfg, &plan).unwrap().report;
        let b = run_scenario(&cfg, &plan).unwrap().report;
        assert_eq!(a, b);
        assert_eq!(a.per_replication.len(), 3);
    }
}
