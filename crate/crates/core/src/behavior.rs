//! Customer agent logic: likelihood corrections, next-action decisions,
//! loop scoring, visit finalisation and the customer pool.

use serde::{Deserialize, Serialize};

use crate::engine::{sample_bernoulli, sample_triangular, RngStream, TriangularDist};
use crate::model::{
    Customer, CustomerKind, CustomerMix, DepartmentConfig, LastStep, Likelihood, LoopWeights,
    PatienceModifierRule, Sentiment,
};

pub use crate::model::SatisfactionWeights;

/// Shifts a decision probability according to a customer's likelihood.
/// The shift is half the distance to the nearer end of [0, 1].
pub fn correct_probability_threshold(ot: f64, likelihood: Likelihood) -> f64 {
    let limit = if ot < 0.5 { ot / 2.0 } else { (1.0 - ot) / 2.0 };
    match likelihood {
        Likelihood::Low => ot - limit,
        Likelihood::Moderate => ot,
        Likelihood::High => ot + limit,
    }
}

/// Moves the mode of a duration halfway toward `max` (high) or `min` (low);
/// the support is unchanged.
pub fn correct_duration_distribution(d: TriangularDist, likelihood: Likelihood) -> TriangularDist {
    let mode = match likelihood {
        Likelihood::Low => d.mode - (d.mode - d.min) / 2.0,
        Likelihood::Moderate => d.mode,
        Likelihood::High => d.mode + (d.max - d.mode) / 2.0,
    };
    TriangularDist { mode, ..d }
}

/// Minutes a customer will queue before giving up.
pub fn sample_patience(c: &Customer, base: TriangularDist, rng: &mut RngStream) -> f64 {
    let d = correct_duration_distribution(base, c.profile().wait);
    sample_triangular(&d, rng) * c.patience_modifier
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Browse,
    SeekHelp,
    QueueToPay,
    SeekRefund,
    Leave,
}

/// Whether a new visit is a refund visit.
pub fn draw_refund_visit(kind: CustomerKind, cfg: &DepartmentConfig, rng: &mut RngStream) -> bool {
    let p =
        correct_probability_threshold(cfg.probabilities.require_refund, kind.profile().ask_refund);
    sample_bernoulli(p, rng)
}

/// Next step for a contemplating customer. Once the department has closed
/// every customer heads for the exit.
pub fn decide_next_action(
    c: &Customer,
    cfg: &DepartmentConfig,
    rng: &mut RngStream,
    store_open: bool,
) -> Action {
    let Some(visit) = c.visit.as_ref() else {
        return Action::Leave;
    };
    if !store_open {
        return Action::Leave;
    }
    let profile = c.profile();
    let pr = &cfg.probabilities;
    let buy = |base: f64, rng: &mut RngStream| {
        if sample_bernoulli(correct_probability_threshold(base, profile.buy), rng) {
            Action::QueueToPay
        } else {
            Action::Leave
        }
    };
    let action = match visit.last {
        LastStep::Arrived if visit.refund_visit => Action::SeekRefund,
        LastStep::Arrived => Action::Browse,
        LastStep::Browsed => {
            let help = correct_probability_threshold(pr.require_help, profile.ask_help);
            if sample_bernoulli(help, rng) {
                Action::SeekHelp
            } else {
                buy(pr.buy_after_browse, rng)
            }
        }
        LastStep::HelpServed => buy(pr.buy_after_help, rng),
        // No advice received: the plain browsing conversion applies.
        LastStep::HelpAbandoned => buy(pr.buy_after_browse, rng),
        LastStep::RefundCompleted => {
            if sample_bernoulli(pr.browse_after_refund, rng) {
                Action::Browse
            } else {
                Action::Leave
            }
        }
        LastStep::RefundAbandoned | LastStep::Paid | LastStep::PayAbandoned => Action::Leave,
    };
    debug_assert!(action != Action::QueueToPay || c.has_browsed);
    action
}

/// How a service loop ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopOutcome {
    ServedImmediately,
    ServedAfterWait,
    AbandonedAfterWait,
    /// Still queued when the department closed.
    FlushedAtClose,
}

/// Score contributions as a loop unfolds: one on reaching the service
/// point, one on leaving it.
pub fn score_on_reaching(w: LoopWeights, staff_available: bool) -> i64 {
    if staff_available {
        w.served
    } else {
        -w.wait
    }
}

pub fn score_on_leaving(w: LoopWeights, outcome: LoopOutcome) -> i64 {
    match outcome {
        LoopOutcome::ServedImmediately | LoopOutcome::ServedAfterWait => w.served,
        LoopOutcome::AbandonedAfterWait => -w.abandon,
        LoopOutcome::FlushedAtClose => 0,
    }
}

/// Total score of a loop with the given outcome.
pub fn loop_score(w: LoopWeights, outcome: LoopOutcome) -> i64 {
    let waited = outcome != LoopOutcome::ServedImmediately;
    score_on_reaching(w, !waited) + score_on_leaving(w, outcome)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VisitOutcome {
    pub score: i64,
    pub classification: Sentiment,
    /// Sign class of the accumulated history after this visit.
    pub history_class: Sentiment,
    pub purchased: bool,
}

/// Closes the visit: folds the score into the long-term memory, adjusts
/// patience for next time and sends the customer back to rest.
pub fn finalize_visit(c: &mut Customer, rule: &PatienceModifierRule) -> VisitOutcome {
    let purchased = c.visit.as_ref().is_some_and(|v| v.purchased);
    let score = c.ledger.close_visit();
    let classification = Sentiment::of(score);
    c.patience_modifier = update_patience(c.patience_modifier, classification, rule);
    c.state = crate::model::ActivityState::Resting;
    c.has_browsed = false;
    c.visit = None;
    c.server = None;
    c.waiting_in = None;
    c.bump_token();
    VisitOutcome {
        score,
        classification,
        history_class: Sentiment::of(c.ledger.accumulated),
        purchased,
    }
}

pub fn update_patience(modifier: f64, visit: Sentiment, rule: &PatienceModifierRule) -> f64 {
    let next = match visit {
        Sentiment::Satisfied => modifier * rule.after_satisfied,
        Sentiment::Neutral => modifier,
        Sentiment::Unsatisfied => modifier * rule.after_unsatisfied,
    };
    next.clamp(rule.min, rule.max)
}

/// Finite population of customer agents; resting members are activated at random.
#[derive(Debug, Clone)]
pub struct CustomerPool {
    pub customers: Vec<Customer>,
    resting: Vec<usize>,
    /// Position of each customer in `resting`, if resting.
    slot: Vec<Option<usize>>,
    pub dropped_arrivals: u64,
}

impl CustomerPool {
    /// Creates `size` agents with types drawn from `mix`.
    pub fn new(size: usize, mix: &CustomerMix, rng: &mut RngStream) -> Self {
        let customers: Vec<Customer> = (0..size)
            .map(|id| Customer::new(id, mix.pick(rng.uniform())))
            .collect();
        Self::from_customers(customers)
    }

    pub fn from_customers(customers: Vec<Customer>) -> Self {
        let mut resting = Vec::with_capacity(customers.len());
        let mut slot = vec![None; customers.len()];
        for c in &customers {
            if c.is_resting() {
                slot[c.id] = Some(resting.len());
                resting.push(c.id);
            }
        }
        Self {
            customers,
            resting,
            slot,
            dropped_arrivals: 0,
        }
    }

    pub fn resting_count(&self) -> usize {
        self.resting.len()
    }

    pub fn len(&self) -> usize {
        self.customers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.customers.is_empty()
    }

    /// Removes a uniformly chosen resting customer from the resting set. An
    /// exhausted pool drops the arrival and counts it.
    pub fn pick_resting_customer(&mut self, rng: &mut RngStream) -> Option<usize> {
        if self.resting.is_empty() {
            self.dropped_arrivals += 1;
            return None;
        }
        let pos = rng.index(self.resting.len());
        let id = self.resting.swap_remove(pos);
        self.slot[id] = None;
        if let Some(&moved) = self.resting.get(pos) {
            self.slot[moved] = Some(pos);
        }
        Some(id)
    }

    /// Puts a customer whose visit has been finalised back into the resting set.
    pub fn return_to_rest(&mut self, id: usize) {
        debug_assert!(self.customers[id].is_resting());
        if self.slot[id].is_none() {
            self.slot[id] = Some(self.resting.len());
            self.resting.push(id);
        }
    }

    pub fn in_store(&self) -> usize {
        self.customers.len() - self.resting.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::StreamId;
    use crate::model::{ActivityState, Visit};

    #[test]
    fn enthusiast_buy_threshold() {
        assert!((correct_probability_threshold(0.37, Likelihood::High) - 0.555).abs() < 1e-12);
        assert_eq!(
            correct_probability_threshold(0.37, Likelihood::Moderate),
            0.37
        );
    }

    #[test]
    fn threshold_hand_values() {
        // limit = (1 - 0.8) / 2 = 0.1 and (1 - 0.5) / 2 = 0.25
        assert!((correct_probability_threshold(0.8, Likelihood::Low) - 0.7).abs() < 1e-12);
        assert!((correct_probability_threshold(0.5, Likelihood::High) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn duration_correction() {
        let d = TriangularDist::new(5.0, 12.0, 20.0);
        assert_eq!(correct_duration_distribution(d, Likelihood::Moderate), d);
        assert_eq!(
            correct_duration_distribution(d, Likelihood::High),
            TriangularDist::new(5.0, 16.0, 20.0)
        );
        assert_eq!(
            correct_duration_distribution(d, Likelihood::Low),
            TriangularDist::new(5.0, 8.5, 20.0)
        );
    }

    #[test]
    fn help_loop_scores() {
        let w = SatisfactionWeights::default().help;
        assert_eq!(loop_score(w, LoopOutcome::ServedImmediately), 4);
        assert_eq!(loop_score(w, LoopOutcome::ServedAfterWait), 0);
        assert_eq!(loop_score(w, LoopOutcome::AbandonedAfterWait), -6);
        assert_eq!(loop_score(w, LoopOutcome::FlushedAtClose), -2);
    }

    #[test]
    fn pay_loop_scores() {
        let w = SatisfactionWeights::default().pay;
        assert_eq!(loop_score(w, LoopOutcome::ServedImmediately), 2);
        assert_eq!(loop_score(w, LoopOutcome::AbandonedAfterWait), -3);
    }

    fn visiting(kind: CustomerKind, last: LastStep) -> Customer {
        let mut c = Customer::new(0, kind);
        let mut v = Visit::new(0.0, 0, false);
        v.last = last;
        c.visit = Some(v);
        c.state = ActivityState::Contemplating;
        c.has_browsed = last != LastStep::Arrived;
        c
    }

    #[test]
    fn fresh_arrival_browses() {
        let cfg = DepartmentConfig::atv();
        let mut rng = RngStream::new(1, StreamId::Decisions);
        let c = visiting(CustomerKind::ServiceSeeker, LastStep::Arrived);
        assert_eq!(decide_next_action(&c, &cfg, &mut rng, true), Action::Browse);
        let mut r = visiting(CustomerKind::ServiceSeeker, LastStep::Arrived);
        r.visit.as_mut().unwrap().refund_visit = true;
        assert_eq!(
            decide_next_action(&r, &cfg, &mut rng, true),
            Action::SeekRefund
        );
        assert_eq!(decide_next_action(&c, &cfg, &mut rng, false), Action::Leave);
    }

    #[test]
    fn enthusiast_buys_at_corrected_rate() {
        let mut cfg = DepartmentConfig::atv();
        cfg.probabilities.require_help = 0.0;
        let mut rng = RngStream::new(3, StreamId::Decisions);
        let c = visiting(CustomerKind::ShoppingEnthusiast, LastStep::Browsed);
        let n = 1_000_000;
        let buys = (0..n)
            .filter(|_| decide_next_action(&c, &cfg, &mut rng, true) == Action::QueueToPay)
            .count();
        let f = buys as f64 / n as f64;
        assert!((f - 0.555).abs() < 0.002, "{f}");
    }

    #[test]
    fn never_pays_before_browsing() {
        let cfg = DepartmentConfig::atv();
        let mut rng = RngStream::new(5, StreamId::Decisions);
        for kind in CustomerKind::ALL {
            let c = visiting(kind, LastStep::Arrived);
            for _ in 0..1000 {
                assert_ne!(
                    decide_next_action(&c, &cfg, &mut rng, true),
                    Action::QueueToPay
                );
            }
        }
    }

    #[test]
    fn finalize_sums_and_classifies() {
        let rule = PatienceModifierRule::default();
        let mut c = visiting(CustomerKind::ServiceSeeker, LastStep::Paid);
        c.ledger.current_visit = 4 + 2;
        let out = finalize_visit(&mut c, &rule);
        assert_eq!(out.score, 6);
        assert_eq!(out.classification, Sentiment::Satisfied);
        assert!((c.patience_modifier - 1.05).abs() < 1e-12);
        assert!(c.is_resting());

        let mut c = visiting(CustomerKind::ServiceSeeker, LastStep::Paid);
        c.ledger.current_visit = -6 + 2 + 4;
        assert_eq!(
            finalize_visit(&mut c, &rule).classification,
            Sentiment::Neutral
        );
        assert_eq!(c.patience_modifier, 1.0);

        let mut c = visiting(CustomerKind::ServiceSeeker, LastStep::Paid);
        c.ledger.accumulated = -3;
        c.ledger.current_visit = 5;
        let out = finalize_visit(&mut c, &rule);
        assert_eq!(c.ledger.accumulated, 2);
        assert_eq!(out.history_class, Sentiment::Satisfied);
    }

    #[test]
    fn pool_picks_and_drops() {
        let mut rng = RngStream::new(9, StreamId::Pool);
        let mut pool =
            CustomerPool::from_customers(vec![Customer::new(0, CustomerKind::ServiceSeeker)]);
        assert_eq!(pool.pick_resting_customer(&mut rng), Some(0));
        pool.customers[0].state = ActivityState::Entering;
        assert_eq!(pool.pick_resting_customer(&mut rng), None);
        assert_eq!(pool.dropped_arrivals, 1);
        pool.customers[0].state = ActivityState::Resting;
        pool.return_to_rest(0);
        assert_eq!(pool.resting_count(), 1);
    }

    #[test]
    fn pool_mix_frequencies() {
        let mut rng = RngStream::new(11, StreamId::Population);
        let pool = CustomerPool::new(10_000, &CustomerMix::womenswear(), &mut rng);
        let se = pool
            .customers
            .iter()
            .filter(|c| c.kind == CustomerKind::ShoppingEnthusiast)
            .count() as f64
            / 10_000.0;
        assert!((se - 0.8).abs() < 0.01, "{se}");
        assert!(pool.customers.iter().all(|c| matches!(
            c.kind,
            CustomerKind::ShoppingEnthusiast | CustomerKind::DisinterestedShopper
        )));
    }

    proptest::proptest! {
        #[test]
        fn positive_visits_never_shrink_patience(scores in proptest::collection::vec(1i64..20, 1..50)) {
            let rule = PatienceModifierRule::default();
            let mut m = 1.0;
            for _ in scores {
                let next = update_patience(m, Sentiment::Satisfied, &rule);
                proptest::prop_assert!(next >= m);
                m = next;
            }
        }

        #[test]
        fn modifier_stays_in_bounds(signs in proptest::collection::vec(-1i64..=1, 1..200)) {
            let rule = PatienceModifierRule::default();
            let mut m = 1.0;
            for s in signs {
                m = update_patience(m, Sentiment::of(s), &rule);
                proptest::prop_assert!((rule.min..=rule.max).contains(&m));
            }
        }
    }
}
