//! Weekly accumulators, the 29 reported measures, utilisation, monetary
//! measures and aggregation across replications.

use serde::{Deserialize, Serialize};

use crate::model::{MonetaryConfig, Role, Rota, Sentiment, StaffType};

pub const MEASURE_COUNT: usize = 29;

/// Measure names by row, 1-based ids are `index + 1`.
pub const MEASURE_NAMES: [&str; MEASURE_COUNT] = [
    "overall customers",
    "customers leaving with purchase",
    "% customers with purchase",
    "% leave not waiting for normal help",
    "% leave not waiting for expert help",
    "% leave not waiting to pay",
    "% satisfied (accumulated history)",
    "% neutral (accumulated history)",
    "% unsatisfied (accumulated history)",
    "% satisfied (experience per visit)",
    "% neutral (experience per visit)",
    "% unsatisfied (experience per visit)",
    "avg minutes in department",
    "avg wait for help",
    "% of help block spent waiting",
    "% customers who wait for help",
    "avg wait to pay",
    "% of pay block spent waiting",
    "% customers who wait to pay",
    "utilisation cashiers",
    "utilisation normal staff",
    "utilisation expert staff",
    "utilisation all staff",
    "staff cost per day",
    "sales turnover per day",
    "sales per employee",
    "sales per employee hour",
    "net profit per employee",
    "net profit per employee hour",
];

/// Row index (0-based) of the weekly transaction count.
pub const TRANSACTIONS: usize = 1;
/// Row index of "% leave not waiting to pay".
pub const LEAVE_NOT_WAITING_TO_PAY: usize = 5;

fn sentiment_index(s: Sentiment) -> usize {
    match s {
        Sentiment::Satisfied => 0,
        Sentiment::Neutral => 1,
        Sentiment::Unsatisfied => 2,
    }
}

/// Raw counts for one simulated week. Visits are attributed to the week
/// they started in.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WeekStats {
    pub visits: u64,
    pub purchases: u64,
    pub abandoned_normal_help: u64,
    pub abandoned_expert_help: u64,
    pub abandoned_pay: u64,
    pub history: [u64; 3],
    pub experience: [u64; 3],
    pub visit_minutes: f64,
    pub help_seekers: u64,
    pub help_waiters: u64,
    pub help_wait_minutes: f64,
    pub help_block_minutes: f64,
    pub pay_seekers: u64,
    pub pay_waiters: u64,
    pub pay_wait_minutes: f64,
    pub pay_block_minutes: f64,
    /// Busy and idle minutes by assigned staff type.
    pub busy: [f64; 3],
    pub idle: [f64; 3],
}

/// Per-visit summary handed over when a customer leaves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisitRecord {
    pub minutes: f64,
    pub purchased: bool,
    pub abandoned_normal_help: bool,
    pub abandoned_expert_help: bool,
    pub abandoned_pay: bool,
    pub experience: Sentiment,
    pub history: Sentiment,
    pub help_requests: u32,
    pub help_waits: u32,
    pub help_wait_minutes: f64,
    pub help_block_minutes: f64,
    pub pay_attempts: u32,
    pub pay_waits: u32,
    pub pay_wait_minutes: f64,
    pub pay_block_minutes: f64,
}

impl WeekStats {
    pub fn record_visit(&mut self, v: &VisitRecord) {
        self.visits += 1;
        self.purchases += u64::from(v.purchased);
        self.abandoned_normal_help += u64::from(v.abandoned_normal_help);
        self.abandoned_expert_help += u64::from(v.abandoned_expert_help);
        self.abandoned_pay += u64::from(v.abandoned_pay);
        self.history[sentiment_index(v.history)] += 1;
        self.experience[sentiment_index(v.experience)] += 1;
        self.visit_minutes += v.minutes;
        if v.help_requests > 0 {
            self.help_seekers += 1;
            self.help_waiters += u64::from(v.help_waits > 0);
            self.help_wait_minutes += v.help_wait_minutes;
            self.help_block_minutes += v.help_block_minutes;
        }
        if v.pay_attempts > 0 {
            self.pay_seekers += 1;
            self.pay_waiters += u64::from(v.pay_waits > 0);
            self.pay_wait_minutes += v.pay_wait_minutes;
            self.pay_block_minutes += v.pay_block_minutes;
        }
    }

    /// Rows 1-23 for this week; `None` where the denominator is empty.
    pub fn measures(&self) -> [Option<f64>; 23] {
        let ratio = |num: f64, den: f64| (den > 0.0).then(|| num / den);
        let pct = |num: u64, den: u64| ratio(num as f64 * 100.0, den as f64);
        let v = self.visits;
        let util = |i: usize| ratio(self.busy[i], self.busy[i] + self.idle[i]);
        let busy: f64 = self.busy.iter().sum();
        let idle: f64 = self.idle.iter().sum();
        [
            Some(v as f64),
            Some(self.purchases as f64),
            pct(self.purchases, v),
            pct(self.abandoned_normal_help, v),
            pct(self.abandoned_expert_help, v),
            pct(self.abandoned_pay, v),
            pct(self.history[0], v),
            pct(self.history[1], v),
            pct(self.history[2], v),
            pct(self.experience[0], v),
            pct(self.experience[1], v),
            pct(self.experience[2], v),
            ratio(self.visit_minutes, v as f64),
            ratio(self.help_wait_minutes, self.help_seekers as f64),
            ratio(self.help_wait_minutes * 100.0, self.help_block_minutes),
            pct(self.help_waiters, self.help_seekers),
            ratio(self.pay_wait_minutes, self.pay_seekers as f64),
            ratio(self.pay_wait_minutes * 100.0, self.pay_block_minutes),
            pct(self.pay_waiters, self.pay_seekers),
            util(0),
            util(1),
            util(2),
            ratio(busy, busy + idle),
        ]
    }
}

/// End-of-replication view of one staff member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaffSummary {
    pub id: usize,
    pub assigned: StaffType,
    /// Busy minutes indexed by [`Role::index`].
    pub busy_by_role: [f64; 4],
    pub idle_minutes: f64,
    pub swap_count: u32,
    pub swap_durations: Vec<f64>,
}

impl StaffSummary {
    pub fn busy_minutes(&self) -> f64 {
        self.busy_by_role.iter().sum()
    }
}

/// Busy minutes by role and swap statistics for one staff member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleTime {
    pub busy: [f64; 4],
    pub swap_count: u32,
    pub mean_swap_minutes: Option<f64>,
}

pub fn busy_time_by_role(s: &StaffSummary) -> RoleTime {
    let mean = if s.swap_durations.is_empty() {
        None
    } else {
        Some(s.swap_durations.iter().sum::<f64>() / s.swap_durations.len() as f64)
    };
    RoleTime {
        busy: s.busy_by_role,
        swap_count: s.swap_count,
        mean_swap_minutes: mean,
    }
}

/// Busy share of working time for a group, with busy time in every role
/// credited to the member's assigned type. `None` for an empty group.
pub fn compute_utilization<'a>(group: impl IntoIterator<Item = &'a StaffSummary>) -> Option<f64> {
    let mut busy = 0.0;
    let mut total = 0.0;
    let mut members = 0;
    for s in group {
        members += 1;
        let b = s.busy_minutes();
        busy += b;
        total += b + s.idle_minutes;
    }
    if members == 0 || total <= 0.0 {
        return None;
    }
    Some(busy / total)
}

/// Rows 24-29 from the average number of transactions per day.
pub fn compute_monetary(daily_transactions: f64, m: &MonetaryConfig, rota: &Rota) -> [f64; 6] {
    let cost: f64 = StaffType::ALL
        .iter()
        .map(|&t| rota.count(t) as f64 * m.daily_wage.of(t))
        .sum();
    let turnover = daily_transactions * m.avg_transaction_value;
    let staff = rota.total() as f64;
    let per_employee = if staff > 0.0 { turnover / staff } else { 0.0 };
    let profit = m.net_margin * per_employee;
    [
        cost,
        turnover,
        per_employee,
        per_employee / m.employee_hours,
        profit,
        profit / m.employee_hours,
    ]
}

/// Everything a single replication reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationResult {
    pub seed: u64,
    pub weeks: Vec<WeekStats>,
    pub days: u32,
    pub staff: Vec<StaffSummary>,
    pub activations: u64,
    pub completed_visits: u64,
    pub in_store: u64,
    pub dropped_arrivals: u64,
    pub transactions: u64,
    /// Transactions recorded for a customer who had not browsed; always 0.
    pub transactions_without_browse: u64,
    pub role_actions: u64,
    pub max_open_tills: usize,
}

impl ReplicationResult {
    /// The 29 measures for this replication: weekly means for rows 1-23,
    /// daily means for rows 24-29.
    pub fn measures(&self, m: &MonetaryConfig, rota: &Rota) -> Vec<Option<f64>> {
        let mut sums = [0.0; 23];
        let mut counts = [0u32; 23];
        for w in &self.weeks {
            for (i, x) in w.measures().iter().enumerate() {
                if let Some(x) = x {
                    sums[i] += x;
                    counts[i] += 1;
                }
            }
        }
        let mut out: Vec<Option<f64>> = (0..23)
            .map(|i| (counts[i] > 0).then(|| sums[i] / f64::from(counts[i])))
            .collect();
        // Utilisation rows say "not applicable" when the group is unstaffed.
        for (row, t) in [
            (19, StaffType::Cashier),
            (20, StaffType::Normal),
            (21, StaffType::Expert),
        ] {
            if rota.count(t) == 0 {
                out[row] = None;
            }
        }
        let purchases: u64 = self.weeks.iter().map(|w| w.purchases).sum();
        let daily = if self.days > 0 {
            purchases as f64 / f64::from(self.days)
        } else {
            0.0
        };
        out.extend(compute_monetary(daily, m, rota).into_iter().map(Some));
        out
    }

    /// Utilisation over the whole replication for staff of assigned type `t`.
    pub fn utilization(&self, t: StaffType) -> Option<f64> {
        compute_utilization(self.staff.iter().filter(|s| s.assigned == t))
    }

    /// Busy minutes in `role` summed over staff of assigned type `t`.
    pub fn busy_in_role(&self, t: StaffType, role: Role) -> f64 {
        self.staff
            .iter()
            .filter(|s| s.assigned == t)
            .map(|s| s.busy_by_role[role.index()])
            .sum()
    }

    pub fn swap_count(&self) -> u64 {
        self.staff.iter().map(|s| u64::from(s.swap_count)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureStat {
    pub id: usize,
    pub name: String,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    /// Replications with a defined value.
    pub n: usize,
}

/// Sample mean and sample standard deviation (n − 1) per measure. SD is
/// not applicable with fewer than two defined values.
pub fn aggregate_replications(per_rep: &[Vec<Option<f64>>]) -> Vec<MeasureStat> {
    (0..MEASURE_COUNT)
        .map(|i| {
            let xs: Vec<f64> = per_rep
                .iter()
                .filter_map(|r| r.get(i).copied().flatten())
                .collect();
            let (mean, sd) = mean_sd(&xs);
            MeasureStat {
                id: i + 1,
                name: MEASURE_NAMES[i].to_string(),
                mean,
                sd,
                n: xs.len(),
            }
        })
        .collect()
}

pub fn mean_sd(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    let n = xs.len();
    if n == 0 {
        return (None, None);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (Some(mean), None);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (Some(mean), Some(var.sqrt()))
}
