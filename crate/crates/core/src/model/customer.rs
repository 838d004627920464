use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Three-level likelihood used by the customer typology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Likelihood {
    Low,
    Moderate,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CustomerKind {
    ShoppingEnthusiast,
    SolutionDemander,
    ServiceSeeker,
    DisinterestedShopper,
    InternetShopper,
}

impl CustomerKind {
    pub const ALL: [CustomerKind; 5] = [
        CustomerKind::ShoppingEnthusiast,
        CustomerKind::SolutionDemander,
        CustomerKind::ServiceSeeker,
        CustomerKind::DisinterestedShopper,
        CustomerKind::InternetShopper,
    ];

    pub fn profile(self) -> CustomerProfile {
        use Likelihood::*;
        let (buy, wait, ask_help, ask_refund) = match self {
            CustomerKind::ShoppingEnthusiast => (High, Moderate, Moderate, Low),
            CustomerKind::SolutionDemander => (High, Low, Low, Low),
            CustomerKind::ServiceSeeker => (Moderate, High, High, Low),
            CustomerKind::DisinterestedShopper => (Low, Low, Low, High),
            CustomerKind::InternetShopper => (Low, High, High, Low),
        };
        CustomerProfile {
            kind: self,
            buy,
            wait,
            ask_help,
            ask_refund,
        }
    }
}

/// A customer type: the likelihood of each behaviour.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CustomerProfile {
    pub kind: CustomerKind,
    pub buy: Likelihood,
    pub wait: Likelihood,
    pub ask_help: Likelihood,
    pub ask_refund: Likelihood,
}

/// Population shares per customer type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CustomerMix(pub BTreeMap<CustomerKind, f64>);

impl CustomerMix {
    pub fn new(weights: impl IntoIterator<Item = (CustomerKind, f64)>) -> Self {
        Self(weights.into_iter().collect())
    }

    pub fn audio_tv() -> Self {
        use CustomerKind::*;
        Self::new([
            (ShoppingEnthusiast, 0.05),
            (SolutionDemander, 0.40),
            (ServiceSeeker, 0.40),
            (DisinterestedShopper, 0.05),
            (InternetShopper, 0.10),
        ])
    }

    pub fn womenswear() -> Self {
        use CustomerKind::*;
        Self::new([(ShoppingEnthusiast, 0.80), (DisinterestedShopper, 0.20)])
    }

    pub fn total(&self) -> f64 {
        self.0.values().sum()
    }

    pub fn share(&self, kind: CustomerKind) -> f64 {
        self.0.get(&kind).copied().unwrap_or(0.0)
    }

    /// Draws a type with probability proportional to its share; `u` in [0, 1).
    pub fn pick(&self, u: f64) -> CustomerKind {
        let target = u * self.total();
        let mut acc = 0.0;
        let mut last = CustomerKind::ShoppingEnthusiast;
        for (&kind, &w) in &self.0 {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            last = kind;
            if target < acc {
                return kind;
            }
        }
        last
    }
}

/// Classification of a visit (or of a running history) by score sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sentiment {
    Satisfied,
    Neutral,
    Unsatisfied,
}

impl Sentiment {
    pub fn of(score: i64) -> Self {
        match score.signum() {
            1 => Sentiment::Satisfied,
            0 => Sentiment::Neutral,
            _ => Sentiment::Unsatisfied,
        }
    }
}

/// Per-visit score plus the long-term memory of past visits.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SatisfactionLedger {
    pub current_visit: i64,
    pub accumulated: i64,
    pub positive_visits: u32,
    pub neutral_visits: u32,
    pub negative_visits: u32,
}

impl SatisfactionLedger {
    pub fn completed_visits(&self) -> u32 {
        self.positive_visits + self.neutral_visits + self.negative_visits
    }

    /// Folds the current visit into the history and clears it.
    pub fn close_visit(&mut self) -> i64 {
        let score = self.current_visit;
        self.accumulated += score;
        match Sentiment::of(score) {
            Sentiment::Satisfied => self.positive_visits += 1,
            Sentiment::Neutral => self.neutral_visits += 1,
            Sentiment::Unsatisfied => self.negative_visits += 1,
        }
        self.current_visit = 0;
        score
    }
}

/// Activity states of the customer state chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActivityState {
    Resting,
    Entering,
    Contemplating,
    Browsing,
    SeekingHelp,
    QueuingForHelp,
    GettingHelp,
    QueuingToPay,
    Paying,
    SeekingRefund,
    QueuingForRefund,
    GettingRefund,
    Leaving,
}

/// What the customer did last in this visit; drives the next decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LastStep {
    Arrived,
    Browsed,
    HelpServed,
    HelpAbandoned,
    RefundCompleted,
    RefundAbandoned,
    Paid,
    PayAbandoned,
}

/// Which help queue a request goes to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HelpKind {
    Normal,
    Expert,
}

/// Service point a customer is queuing at or being served by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ServiceLoop {
    Help(HelpKind),
    Pay,
    Refund,
    /// Authorisation step of a refund.
    Authorization,
}

/// Bookkeeping for the visit in progress.
#[derive(Debug, Clone)]
pub struct Visit {
    pub arrived_at: f64,
    pub day: u32,
    pub refund_visit: bool,
    pub last: LastStep,
    /// Whether the customer has had to wait at any point of the current loop.
    pub loop_waited: bool,
    pub queue_entered_at: f64,
    pub help_requests: u32,
    pub help_waits: u32,
    pub help_wait_minutes: f64,
    pub help_block_minutes: f64,
    pub pay_attempts: u32,
    pub pay_waits: u32,
    pub pay_wait_minutes: f64,
    pub pay_block_minutes: f64,
    pub purchased: bool,
    pub abandoned_normal_help: bool,
    pub abandoned_expert_help: bool,
    pub abandoned_pay: bool,
    pub loop_scores: Vec<i64>,
}

impl Visit {
    pub fn new(arrived_at: f64, day: u32, refund_visit: bool) -> Self {
        Self {
            arrived_at,
            day,
            refund_visit,
            last: LastStep::Arrived,
            loop_waited: false,
            queue_entered_at: arrived_at,
            help_requests: 0,
            help_waits: 0,
            help_wait_minutes: 0.0,
            help_block_minutes: 0.0,
            pay_attempts: 0,
            pay_waits: 0,
            pay_wait_minutes: 0.0,
            pay_block_minutes: 0.0,
            purchased: false,
            abandoned_normal_help: false,
            abandoned_expert_help: false,
            abandoned_pay: false,
            loop_scores: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Customer {
    pub id: usize,
    pub kind: CustomerKind,
    pub ledger: SatisfactionLedger,
    pub patience_modifier: f64,
    pub state: ActivityState,
    pub has_browsed: bool,
    /// Invalidates timeouts scheduled for an earlier state.
    pub token: u32,
    pub visit: Option<Visit>,
    pub server: Option<usize>,
    pub waiting_in: Option<ServiceLoop>,
}

impl Customer {
    pub fn new(id: usize, kind: CustomerKind) -> Self {
        Self {
            id,
            kind,
            ledger: SatisfactionLedger::default(),
            patience_modifier: 1.0,
            state: ActivityState::Resting,
            has_browsed: false,
            token: 0,
            visit: None,
            server: None,
            waiting_in: None,
        }
    }

    pub fn profile(&self) -> CustomerProfile {
        self.kind.profile()
    }

    pub fn is_resting(&self) -> bool {
        self.state == ActivityState::Resting
    }

    pub fn bump_token(&mut self) -> u32 {
        self.token = self.token.wrapping_add(1);
        self.token
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn typology_rows() {
        let se = CustomerKind::ShoppingEnthusiast.profile();
        assert_eq!(
            (se.buy, se.wait, se.ask_help, se.ask_refund),
            (
                Likelihood::High,
                Likelihood::Moderate,
                Likelihood::Moderate,
                Likelihood::Low
            )
        );
        let ds = CustomerKind::DisinterestedShopper.profile();
        assert_eq!(ds.ask_refund, Likelihood::High);
        let is = CustomerKind::InternetShopper.profile();
        assert_eq!(
            (is.buy, is.wait, is.ask_help),
            (Likelihood::Low, Likelihood::High, Likelihood::High)
        );
    }

    #[test]
    fn default_mixes_are_normalised() {
        assert!((CustomerMix::audio_tv().total() - 1.0).abs() < 1e-9);
        assert!((CustomerMix::womenswear().total() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pick_follows_cumulative_shares() {
        let mix = CustomerMix::womenswear();
        assert_eq!(mix.pick(0.0), CustomerKind::ShoppingEnthusiast);
        assert_eq!(mix.pick(0.79), CustomerKind::ShoppingEnthusiast);
        assert_eq!(mix.pick(0.81), CustomerKind::DisinterestedShopper);
        assert_eq!(mix.pick(0.999_999), CustomerKind::DisinterestedShopper);
    }

    #[test]
    fn ledger_counts_and_sums() {
        let mut l = SatisfactionLedger {
            accumulated: -3,
            ..Default::default()
        };
        l.current_visit = 5;
        assert_eq!(l.close_visit(), 5);
        assert_eq!(l.accumulated, 2);
        assert_eq!(l.positive_visits, 1);
        l.current_visit = 0;
        l.close_visit();
        l.current_visit = -6;
        l.close_visit();
        assert_eq!(l.completed_visits(), 3);
        assert_eq!((l.neutral_visits, l.negative_visits), (1, 1));
        assert_eq!(l.accumulated, -4);
        assert_eq!(l.current_visit, 0);
    }
}
