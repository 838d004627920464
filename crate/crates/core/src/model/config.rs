use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::customer::{CustomerKind, CustomerMix};
use super::staff::StaffType;
use crate::engine::{TriangularDist, DAY_MINUTES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Department {
    /// Audio & TV.
    Atv,
    /// Womenswear.
    Ww,
}

impl fmt::Display for Department {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Department::Atv => "atv",
            Department::Ww => "ww",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Durations {
    pub browse: TriangularDist,
    pub help_service: TriangularDist,
    pub pay_service: TriangularDist,
    pub refund_service: TriangularDist,
    /// Section-manager authorisation of a refund.
    pub authorization: TriangularDist,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatienceModifierRule {
    pub min: f64,
    pub max: f64,
    pub after_satisfied: f64,
    pub after_unsatisfied: f64,
}

impl Default for PatienceModifierRule {
    fn default() -> Self {
        Self {
            min: 0.5,
            max: 1.5,
            after_satisfied: 1.05,
            after_unsatisfied: 0.95,
        }
    }
}

/// How long customers are prepared to queue before giving up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Patience {
    pub help_queue: TriangularDist,
    pub pay_queue: TriangularDist,
    /// Also used while waiting for refund authorisation.
    pub refund_queue: TriangularDist,
    pub modifier: PatienceModifierRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Probabilities {
    pub buy_after_browse: f64,
    pub require_help: f64,
    pub buy_after_help: f64,
    pub require_refund: f64,
    pub refund_needs_authorization: f64,
    /// After a completed refund: browse on (otherwise leave).
    pub browse_after_refund: f64,
    /// Share of help requests that need an expert, by customer type.
    pub expert_help_share: BTreeMap<CustomerKind, f64>,
}

impl Probabilities {
    pub fn expert_share(&self, kind: CustomerKind) -> f64 {
        self.expert_help_share.get(&kind).copied().unwrap_or(0.0)
    }
}

/// Score contributions of one service loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopWeights {
    /// Added on being served, both on the spot and after a wait.
    pub served: i64,
    /// Subtracted on having to queue.
    pub wait: i64,
    /// Subtracted on giving up after queuing.
    pub abandon: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SatisfactionWeights {
    pub help: LoopWeights,
    pub pay: LoopWeights,
    pub refund: LoopWeights,
}

impl Default for SatisfactionWeights {
    fn default() -> Self {
        Self {
            help: LoopWeights {
                served: 2,
                wait: 2,
                abandon: 4,
            },
            pay: LoopWeights {
                served: 1,
                wait: 1,
                abandon: 2,
            },
            refund: LoopWeights {
                served: 1,
                wait: 1,
                abandon: 2,
            },
        }
    }
}

/// Daily head count per staff type. Signed so that a negative entry in a
/// config file surfaces as a validation error naming the field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rota {
    pub cashiers: i64,
    pub normal: i64,
    pub expert: i64,
}

impl Rota {
    pub const fn new(cashiers: i64, normal: i64, expert: i64) -> Self {
        Self {
            cashiers,
            normal,
            expert,
        }
    }

    pub fn count(&self, t: StaffType) -> usize {
        let n = match t {
            StaffType::Cashier => self.cashiers,
            StaffType::Normal => self.normal,
            StaffType::Expert => self.expert,
        };
        n.max(0) as usize
    }

    pub fn total(&self) -> usize {
        StaffType::ALL.iter().map(|&t| self.count(t)).sum()
    }
}

impl fmt::Display for Rota {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{};{};{}}}", self.cashiers, self.normal, self.expert)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotaSet {
    pub real: Rota,
    pub optimised: Rota,
}

/// When a temporary cashier hands the till back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopStrategy {
    /// After serving P1 customers (strategy 1).
    CountOnly,
    /// Once the till queue is down to the closing threshold (strategy 2).
    QueueOnly,
    /// Whichever of the two happens first (strategy 3).
    Either,
}

impl StopStrategy {
    /// Numbering used in the sweep tables: 1, 2, 3.
    pub fn from_number(n: u32) -> Option<Self> {
        match n {
            1 => Some(StopStrategy::CountOnly),
            2 => Some(StopStrategy::QueueOnly),
            3 => Some(StopStrategy::Either),
            _ => None,
        }
    }

    pub fn number(self) -> u32 {
        match self {
            StopStrategy::CountOnly => 1,
            StopStrategy::QueueOnly => 2,
            StopStrategy::Either => 3,
        }
    }
}

/// The six proactivity parameters P1-P6 plus the on/off switch.
///
/// Queue thresholds are real-valued: a fractional threshold such as 1.25 is
/// realised per decision as 1 with probability 0.75 and 2 otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProactivityParams {
    pub p1_max_customers_as_temp_cashier: u32,
    pub p2_open_threshold: f64,
    pub p2_close_threshold: f64,
    pub p3_min_staff_remaining: u32,
    pub p4_max_open_tills: u32,
    pub p5_stop_strategy: StopStrategy,
    pub p6_check_interval: f64,
    pub enabled: bool,
}

impl ProactivityParams {
    pub fn defaults(max_open_tills: u32) -> Self {
        Self {
            p1_max_customers_as_temp_cashier: 10,
            p2_open_threshold: 3.0,
            p2_close_threshold: 2.0,
            p3_min_staff_remaining: 2,
            p4_max_open_tills: max_open_tills,
            p5_stop_strategy: StopStrategy::Either,
            p6_check_interval: 2.0,
            enabled: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DailyWages {
    pub cashier: f64,
    pub normal: f64,
    pub expert: f64,
}

impl DailyWages {
    pub fn of(&self, t: StaffType) -> f64 {
        match t {
            StaffType::Cashier => self.cashier,
            StaffType::Normal => self.normal,
            StaffType::Expert => self.expert,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonetaryConfig {
    pub daily_wage: DailyWages,
    pub avg_transaction_value: f64,
    pub net_margin: f64,
    /// Divisor for the "per employee hour worked" measures.
    pub employee_hours: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepartmentConfig {
    pub department: Department,
    pub durations: Durations,
    pub patience: Patience,
    pub probabilities: Probabilities,
    pub satisfaction_weights: SatisfactionWeights,
    pub mix: CustomerMix,
    pub rota: RotaSet,
    pub proactivity: ProactivityParams,
    /// Customers per hour for each opening hour.
    pub arrival_profile: Vec<f64>,
    pub opening_minutes: f64,
    pub days_per_week: u32,
    pub pool_size: u32,
    pub monetary: MonetaryConfig,
}

const OPENING_MINUTES: f64 = 600.0;
const DAYS_PER_WEEK: u32 = 7;

fn flat_profile(weekly_customers: f64) -> Vec<f64> {
    let hours = (OPENING_MINUTES / 60.0) as usize;
    let rate = weekly_customers / (f64::from(DAYS_PER_WEEK) * hours as f64);
    vec![rate; hours]
}

fn expert_shares() -> BTreeMap<CustomerKind, f64> {
    CustomerKind::ALL
        .iter()
        .map(|&k| {
            let share = match k {
                CustomerKind::ServiceSeeker | CustomerKind::InternetShopper => 0.5,
                _ => 0.2,
            };
            (k, share)
        })
        .collect()
}

fn default_wages() -> DailyWages {
    DailyWages {
        cashier: 768.0,
        normal: 888.0,
        expert: 960.0,
    }
}

impl DepartmentConfig {
    /// Audio & TV defaults.
    pub fn atv() -> Self {
        let weekly_customers = 4086.0;
        Self {
            department: Department::Atv,
            durations: Durations {
                browse: TriangularDist::new(1.0, 7.0, 15.0),
                help_service: TriangularDist::new(3.0, 15.0, 30.0),
                // Mean 6.8: saturated-till throughput of the published runs.
                pay_service: TriangularDist::new(3.4, 6.8, 10.2),
                refund_service: TriangularDist::new(2.0, 4.0, 8.0),
                authorization: TriangularDist::new(1.0, 2.0, 4.0),
            },
            patience: Patience {
                help_queue: TriangularDist::new(3.0, 8.0, 15.0),
                pay_queue: TriangularDist::new(5.0, 12.0, 20.0),
                refund_queue: TriangularDist::new(5.0, 12.0, 20.0),
                modifier: PatienceModifierRule::default(),
            },
            probabilities: Probabilities {
                buy_after_browse: 0.37,
                require_help: 0.38,
                buy_after_help: 0.56,
                require_refund: 0.03,
                refund_needs_authorization: 0.3,
                browse_after_refund: 0.5,
                expert_help_share: expert_shares(),
            },
            satisfaction_weights: SatisfactionWeights::default(),
            mix: CustomerMix::audio_tv(),
            rota: RotaSet {
                real: Rota::new(1, 10, 1),
                optimised: Rota::new(2, 6, 2),
            },
            proactivity: ProactivityParams::defaults(4),
            arrival_profile: flat_profile(weekly_customers),
            opening_minutes: OPENING_MINUTES,
            days_per_week: DAYS_PER_WEEK,
            pool_size: (weekly_customers / f64::from(DAYS_PER_WEEK) * 10.0).round() as u32,
            monetary: MonetaryConfig {
                daily_wage: default_wages(),
                avg_transaction_value: 149.95,
                net_margin: 0.15,
                employee_hours: 767.0,
            },
        }
    }

    /// Womenswear defaults.
    pub fn ww() -> Self {
        let weekly_customers = 6385.0;
        Self {
            department: Department::Ww,
            durations: Durations {
                browse: TriangularDist::new(1.0, 7.0, 15.0),
                help_service: TriangularDist::new(2.0, 6.0, 12.0),
                // Mean 4.0, same derivation.
                pay_service: TriangularDist::new(2.0, 4.0, 6.0),
                refund_service: TriangularDist::new(2.0, 4.0, 8.0),
                authorization: TriangularDist::new(1.0, 2.0, 4.0),
            },
            patience: Patience {
                help_queue: TriangularDist::new(3.0, 8.0, 15.0),
                pay_queue: TriangularDist::new(5.0, 12.0, 20.0),
                refund_queue: TriangularDist::new(5.0, 12.0, 20.0),
                modifier: PatienceModifierRule::default(),
            },
            probabilities: Probabilities {
                buy_after_browse: 0.45,
                require_help: 0.10,
                buy_after_help: 0.80,
                require_refund: 0.03,
                refund_needs_authorization: 0.3,
                browse_after_refund: 0.5,
                expert_help_share: expert_shares(),
            },
            satisfaction_weights: SatisfactionWeights::default(),
            mix: CustomerMix::womenswear(),
            rota: RotaSet {
                real: Rota::new(2, 13, 1),
                optimised: Rota::new(3, 8, 2),
            },
            proactivity: ProactivityParams::defaults(6),
            arrival_profile: flat_profile(weekly_customers),
            opening_minutes: OPENING_MINUTES,
            days_per_week: DAYS_PER_WEEK,
            pool_size: (weekly_customers / f64::from(DAYS_PER_WEEK) * 10.0).round() as u32,
            monetary: MonetaryConfig {
                daily_wage: default_wages(),
                avg_transaction_value: 40.76,
                net_margin: 0.40,
                employee_hours: 987.0,
            },
        }
    }

    pub fn for_department(d: Department) -> Self {
        match d {
            Department::Atv => Self::atv(),
            Department::Ww => Self::ww(),
        }
    }

    pub fn expected_weekly_customers(&self) -> f64 {
        self.arrival_profile.iter().sum::<f64>() * f64::from(self.days_per_week)
    }
}

/// One broken invariant: the offending field and the rule it breaks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub rule: &'static str,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

struct Checker(Vec<Violation>);

impl Checker {
    fn push(&mut self, field: impl Into<String>, rule: &'static str) {
        self.0.push(Violation {
            field: field.into(),
            rule,
        });
    }

    fn tri(&mut self, field: &str, d: &TriangularDist) {
        for rule in d.violations() {
            self.push(field, rule);
        }
    }

    fn probability(&mut self, field: &str, p: f64) {
        if !(0.0..=1.0).contains(&p) {
            self.push(field, "probability-out-of-range");
        }
    }

    fn positive(&mut self, field: &str, x: f64) {
        if !(x > 0.0 && x.is_finite()) {
            self.push(field, "not-positive");
        }
    }

    fn rota(&mut self, field: &str, r: &Rota) {
        for (name, n) in [
            ("cashiers", r.cashiers),
            ("normal", r.normal),
            ("expert", r.expert),
        ] {
            if n < 0 {
                self.push(format!("{field}.{name}"), "negative-count");
            }
        }
    }
}

/// Lists every violated invariant; empty means the config is usable.
pub fn validate_config(cfg: &DepartmentConfig) -> Vec<Violation> {
    let mut c = Checker(Vec::new());

    let d = &cfg.durations;
    c.tri("durations.browse", &d.browse);
    c.tri("durations.help_service", &d.help_service);
    c.tri("durations.pay_service", &d.pay_service);
    c.tri("durations.refund_service", &d.refund_service);
    c.tri("durations.authorization", &d.authorization);

    let p = &cfg.patience;
    c.tri("patience.help_queue", &p.help_queue);
    c.tri("patience.pay_queue", &p.pay_queue);
    c.tri("patience.refund_queue", &p.refund_queue);
    let m = &p.modifier;
    c.positive("patience.modifier.min", m.min);
    c.positive("patience.modifier.after_satisfied", m.after_satisfied);
    c.positive("patience.modifier.after_unsatisfied", m.after_unsatisfied);
    if m.min > m.max {
        c.push("patience.modifier", "min>max");
    }
    if !(m.min..=m.max).contains(&1.0) {
        c.push("patience.modifier", "initial-modifier-outside-bounds");
    }

    let pr = &cfg.probabilities;
    c.probability("probabilities.buy_after_browse", pr.buy_after_browse);
    c.probability("probabilities.require_help", pr.require_help);
    c.probability("probabilities.buy_after_help", pr.buy_after_help);
    c.probability("probabilities.require_refund", pr.require_refund);
    c.probability(
        "probabilities.refund_needs_authorization",
        pr.refund_needs_authorization,
    );
    c.probability("probabilities.browse_after_refund", pr.browse_after_refund);
    for (k, &share) in &pr.expert_help_share {
        c.probability(
            &format!("probabilities.expert_help_share.{}", kind_key(*k)),
            share,
        );
    }

    let w = &cfg.satisfaction_weights;
    for (name, lw) in [("help", w.help), ("pay", w.pay), ("refund", w.refund)] {
        if lw.served < 0 || lw.wait < 0 || lw.abandon < 0 {
            c.push(format!("satisfaction_weights.{name}"), "negative-weight");
        }
    }
    let magnitude = |lw: LoopWeights| lw.served + lw.wait + lw.abandon;
    if magnitude(w.help) <= magnitude(w.pay) || magnitude(w.help) <= magnitude(w.refund) {
        c.push("satisfaction_weights.help", "help-not-heaviest");
    }

    if cfg.mix.0.values().any(|&x| !(x >= 0.0)) {
        c.push("mix", "negative-share");
    }
    if (cfg.mix.total() - 1.0).abs() > 1e-9 {
        c.push("mix", "mix-not-normalized");
    }

    c.rota("rota.real", &cfg.rota.real);
    c.rota("rota.optimised", &cfg.rota.optimised);

    let pp = &cfg.proactivity;
    if !(pp.p2_open_threshold >= 0.0) {
        c.push("proactivity.p2_open_threshold", "negative-threshold");
    }
    if !(pp.p2_close_threshold >= 0.0) {
        c.push("proactivity.p2_close_threshold", "negative-threshold");
    }
    if pp.p4_max_open_tills == 0 {
        c.push("proactivity.p4_max_open_tills", "no-tills");
    }
    c.positive("proactivity.p6_check_interval", pp.p6_check_interval);

    c.positive("opening_minutes", cfg.opening_minutes);
    if cfg.opening_minutes > DAY_MINUTES {
        c.push("opening_minutes", "longer-than-a-day");
    }
    if cfg.days_per_week == 0 {
        c.push("days_per_week", "zero");
    }
    let hours = (cfg.opening_minutes / 60.0).ceil();
    if hours.is_finite() && cfg.arrival_profile.len() as f64 != hours {
        c.push("arrival_profile", "length-not-opening-hours");
    }
    if cfg
        .arrival_profile
        .iter()
        .any(|&r| !(r >= 0.0 && r.is_finite()))
    {
        c.push("arrival_profile", "negative-rate");
    }
    if cfg.pool_size == 0 {
        c.push("pool_size", "zero");
    }

    let mo = &cfg.monetary;
    c.positive("monetary.daily_wage.cashier", mo.daily_wage.cashier);
    c.positive("monetary.daily_wage.normal", mo.daily_wage.normal);
    c.positive("monetary.daily_wage.expert", mo.daily_wage.expert);
    c.positive("monetary.avg_transaction_value", mo.avg_transaction_value);
    c.positive("monetary.net_margin", mo.net_margin);
    c.positive("monetary.employee_hours", mo.employee_hours);

    c.0
}

fn kind_key(k: CustomerKind) -> String {
    serde_json::to_value(k)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}
