//! Proactive role swapping: the priority ladder an idle staff member walks
//! through whenever they finish a service or their periodic check fires.

use serde::{Deserialize, Serialize};

use crate::model::{ProactivityParams, Role, StaffType, StopStrategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleAction {
    RevertToAssigned,
    ServeAsSectionManager,
    OpenTillAsTempCashier,
    ServeOwnQueue,
    ServeNormalQueueAsExpert,
    CloseTillAndReassign,
    WaitAndRecheck,
}

/// The parts of a staff member's state the ladder looks at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaffView {
    pub assigned: StaffType,
    pub role: Role,
    pub temp_cashier_served: u32,
}

impl StaffView {
    pub fn is_temp_cashier(&self) -> bool {
        self.role == Role::Cashier && self.assigned != StaffType::Cashier
    }
}

/// Snapshot of the department as seen by the evaluating staff member.
/// Queue thresholds are already resolved to whole customers.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemView {
    pub till_queues: Vec<usize>,
    /// Queue at the till this staff member mans, if any.
    pub own_till_queue: Option<usize>,
    pub normal_queue: usize,
    pub expert_queue: usize,
    pub section_manager_queue: usize,
    /// On-duty colleagues of the same assigned type currently in that role,
    /// the evaluating staff member included.
    pub same_type_in_role: usize,
    pub open_threshold: usize,
    pub close_threshold: usize,
    /// Set for the follow-up evaluation right after handing a till back.
    pub just_released: bool,
}

impl SystemView {
    fn own_queue_len(&self, role: Role) -> usize {
        match role {
            Role::Cashier => self.own_till_queue.unwrap_or(0),
            Role::Normal => self.normal_queue,
            Role::Expert => self.expert_queue,
            Role::SectionManager => self.section_manager_queue,
        }
    }
}

pub fn stop_strategy_met(
    strategy: StopStrategy,
    served: u32,
    own_till_queue: usize,
    max_served: u32,
    close_threshold: usize,
) -> bool {
    let count = served >= max_served;
    let queue = own_till_queue <= close_threshold;
    match strategy {
        StopStrategy::CountOnly => count,
        StopStrategy::QueueOnly => queue,
        StopStrategy::Either => count || queue,
    }
}

/// Picks exactly one action for an idle, on-duty staff member.
pub fn evaluate_role_swap(s: &StaffView, w: &SystemView, p: &ProactivityParams) -> RoleAction {
    if !p.enabled {
        return if w.own_queue_len(s.assigned.role()) > 0 {
            RoleAction::ServeOwnQueue
        } else {
            RoleAction::WaitAndRecheck
        };
    }

    if s.is_temp_cashier() {
        let stop = stop_strategy_met(
            p.p5_stop_strategy,
            s.temp_cashier_served,
            w.own_till_queue.unwrap_or(0),
            p.p1_max_customers_as_temp_cashier,
            w.close_threshold,
        );
        if stop {
            return RoleAction::RevertToAssigned;
        }
        if w.own_till_queue.unwrap_or(0) == 0 {
            return RoleAction::CloseTillAndReassign;
        }
    }

    if s.assigned == StaffType::Expert && w.section_manager_queue > 0 {
        return RoleAction::ServeAsSectionManager;
    }

    let in_assigned_role = s.role == s.assigned.role();
    if !w.just_released
        && in_assigned_role
        && matches!(s.assigned, StaffType::Normal | StaffType::Expert)
        && w.same_type_in_role.saturating_sub(1) >= p.p3_min_staff_remaining as usize
        && w.till_queues.len() < p.p4_max_open_tills as usize
        && w.till_queues.iter().all(|&q| q >= w.open_threshold)
    {
        return RoleAction::OpenTillAsTempCashier;
    }

    if w.own_queue_len(s.role) > 0 {
        return RoleAction::ServeOwnQueue;
    }
    if s.assigned == StaffType::Expert && w.normal_queue > 0 {
        return RoleAction::ServeNormalQueueAsExpert;
    }
    RoleAction::WaitAndRecheck
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ProactivityParams {
        ProactivityParams::defaults(4)
    }

    fn view() -> SystemView {
        SystemView {
            till_queues: vec![0],
            own_till_queue: None,
            normal_queue: 0,
            expert_queue: 0,
            section_manager_queue: 0,
            same_type_in_role: 10,
            open_threshold: 3,
            close_threshold: 2,
            just_released: false,
        }
    }

    fn staff(assigned: StaffType, role: Role, served: u32) -> StaffView {
        StaffView {
            assigned,
            role,
            temp_cashier_served: served,
        }
    }

    #[test]
    fn stop_strategies() {
        assert!(stop_strategy_met(StopStrategy::CountOnly, 10, 5, 10, 2));
        assert!(stop_strategy_met(StopStrategy::QueueOnly, 3, 2, 10, 2));
        assert!(!stop_strategy_met(StopStrategy::Either, 4, 5, 10, 2));
        assert!(!stop_strategy_met(StopStrategy::CountOnly, 9, 0, 10, 2));
        assert!(!stop_strategy_met(StopStrategy::QueueOnly, 50, 3, 10, 2));
    }

    #[test]
    fn temp_cashier_reverts_after_p1() {
        let s = staff(StaffType::Normal, Role::Cashier, 10);
        let mut w = view();
        w.till_queues = vec![5, 5];
        w.own_till_queue = Some(5);
        assert_eq!(
            evaluate_role_swap(&s, &w, &params()),
            RoleAction::RevertToAssigned
        );
    }

    #[test]
    fn queue_stop_looks_at_own_till() {
        let s = staff(StaffType::Normal, Role::Cashier, 1);
        let mut w = view();
        w.till_queues = vec![0, 5];
        w.own_till_queue = Some(5);
        let mut p = params();
        p.p5_stop_strategy = StopStrategy::QueueOnly;
        assert_eq!(evaluate_role_swap(&s, &w, &p), RoleAction::ServeOwnQueue);
        w.own_till_queue = Some(2);
        assert_eq!(evaluate_role_swap(&s, &w, &p), RoleAction::RevertToAssigned);
    }

    #[test]
    fn temp_cashier_with_empty_till_closes_it() {
        let s = staff(StaffType::Normal, Role::Cashier, 1);
        let mut w = view();
        w.till_queues = vec![4, 0];
        w.own_till_queue = Some(0);
        let mut p = params();
        p.p5_stop_strategy = StopStrategy::CountOnly;
        assert_eq!(
            evaluate_role_swap(&s, &w, &p),
            RoleAction::CloseTillAndReassign
        );
    }

    #[test]
    fn temp_cashier_keeps_serving() {
        let s = staff(StaffType::Normal, Role::Cashier, 3);
        let mut w = view();
        w.till_queues = vec![4, 4];
        w.own_till_queue = Some(4);
        w.normal_queue = 6;
        assert_eq!(
            evaluate_role_swap(&s, &w, &params()),
            RoleAction::ServeOwnQueue
        );
    }

    #[test]
    fn expert_prefers_section_manager_duty() {
        let s = staff(StaffType::Expert, Role::Expert, 0);
        let mut w = view();
        w.section_manager_queue = 1;
        w.normal_queue = 8;
        w.expert_queue = 3;
        assert_eq!(
            evaluate_role_swap(&s, &w, &params()),
            RoleAction::ServeAsSectionManager
        );
    }

    #[test]
    fn opens_till_when_every_queue_is_critical() {
        let s = staff(StaffType::Normal, Role::Normal, 0);
        let mut w = view();
        w.till_queues = vec![3, 4];
        w.normal_queue = 2;
        assert_eq!(
            evaluate_role_swap(&s, &w, &params()),
            RoleAction::OpenTillAsTempCashier
        );
        w.till_queues = vec![3, 2];
        assert_eq!(
            evaluate_role_swap(&s, &w, &params()),
            RoleAction::ServeOwnQueue
        );
    }

    #[test]
    fn no_till_beyond_p4() {
        let s = staff(StaffType::Normal, Role::Normal, 0);
        let mut w = view();
        w.till_queues = vec![5, 5, 5, 5];
        assert_eq!(
            evaluate_role_swap(&s, &w, &params()),
            RoleAction::WaitAndRecheck
        );
        w.normal_queue = 1;
        assert_eq!(
            evaluate_role_swap(&s, &w, &params()),
            RoleAction::ServeOwnQueue
        );
    }

    #[test]
    fn p3_floor_blocks_swap() {
        let s = staff(StaffType::Normal, Role::Normal, 0);
        let mut w = view();
        w.till_queues = vec![5];
        w.same_type_in_role = 2;
        assert_eq!(
            evaluate_role_swap(&s, &w, &params()),
            RoleAction::WaitAndRecheck
        );
        w.same_type_in_role = 3;
        assert_eq!(
            evaluate_role_swap(&s, &w, &params()),
            RoleAction::OpenTillAsTempCashier
        );
    }

    #[test]
    fn released_staff_do_not_reopen_at_once() {
        let s = staff(StaffType::Normal, Role::Normal, 0);
        let mut w = view();
        w.till_queues = vec![5];
        w.just_released = true;
        assert_eq!(
            evaluate_role_swap(&s, &w, &params()),
            RoleAction::WaitAndRecheck
        );
    }

    #[test]
    fn expert_helps_normal_queue_last() {
        let s = staff(StaffType::Expert, Role::Expert, 0);
        let mut w = view();
        w.normal_queue = 2;
        w.same_type_in_role = 1;
        assert_eq!(
            evaluate_role_swap(&s, &w, &params()),
            RoleAction::ServeNormalQueueAsExpert
        );
        w.expert_queue = 1;
        assert_eq!(
            evaluate_role_swap(&s, &w, &params()),
            RoleAction::ServeOwnQueue
        );
    }

    #[test]
    fn cashiers_never_swap() {
        let s = staff(StaffType::Cashier, Role::Cashier, 0);
        let mut w = view();
        w.till_queues = vec![9];
        w.own_till_queue = Some(0);
        w.normal_queue = 5;
        w.section_manager_queue = 2;
        assert_eq!(
            evaluate_role_swap(&s, &w, &params()),
            RoleAction::WaitAndRecheck
        );
    }

    proptest::proptest! {
        #[test]
        fn disabled_only_serves_or_waits(
            tills in proptest::collection::vec(0usize..10, 1..5),
            normal in 0usize..5, expert in 0usize..5, sm in 0usize..5,
            assigned in 0usize..3,
        ) {
            let mut p = params();
            p.enabled = false;
            let t = StaffType::ALL[assigned];
            let s = staff(t, t.role(), 0);
            let w = SystemView {
                till_queues: tills.clone(),
                own_till_queue: Some(tills[0]),
                normal_queue: normal,
                expert_queue: expert,
                section_manager_queue: sm,
                same_type_in_role: 10,
                open_threshold: 0,
                close_threshold: 0,
                just_released: false,
            };
            let a = evaluate_role_swap(&s, &w, &p);
            proptest::prop_assert!(matches!(a, RoleAction::ServeOwnQueue | RoleAction::WaitAndRecheck));
        }

        #[test]
        fn either_stops_no_later_than_each_strategy(served in 0u32..20, q in 0usize..10, p1 in 1u32..12, close in 0usize..5) {
            let either = stop_strategy_met(StopStrategy::Either, served, q, p1, close);
            let one = stop_strategy_met(StopStrategy::CountOnly, served, q, p1, close);
            let two = stop_strategy_met(StopStrategy::QueueOnly, served, q, p1, close);
            proptest::prop_assert_eq!(either, one || two);
        }
    }
}
