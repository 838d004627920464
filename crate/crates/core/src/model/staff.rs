use serde::{Deserialize, Serialize};

/// Rostered staff type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StaffType {
    Cashier,
    Normal,
    Expert,
}

impl StaffType {
    pub const ALL: [StaffType; 3] = [StaffType::Cashier, StaffType::Normal, StaffType::Expert];

    pub fn role(self) -> Role {
        match self {
            StaffType::Cashier => Role::Cashier,
            StaffType::Normal => Role::Normal,
            StaffType::Expert => Role::Expert,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Role a staff member is currently acting in. Section manager is a role
/// only experts take on; it is never rostered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Cashier,
    Normal,
    Expert,
    SectionManager,
}

impl Role {
    pub const ALL: [Role; 4] = [
        Role::Cashier,
        Role::Normal,
        Role::Expert,
        Role::SectionManager,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Role::Cashier => "cashier",
            Role::Normal => "normal",
            Role::Expert => "expert",
            Role::SectionManager => "section_manager",
        }
    }
}

/// Whether `assigned` staff may act as `role`: normal/expert staff may
/// man a till, experts may also act as normal staff or section manager.
pub fn role_permitted(assigned: StaffType, role: Role) -> bool {
    match (assigned, role) {
        (a, r) if a.role() == r => true,
        (StaffType::Normal | StaffType::Expert, Role::Cashier) => true,
        (StaffType::Expert, Role::Normal | Role::SectionManager) => true,
        _ => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StaffActivity {
    OffDuty,
    Idle {
        since: f64,
    },
    Busy {
        customer: usize,
        role: Role,
        until: f64,
    },
}

#[derive(Debug, Clone)]
pub struct Staff {
    pub id: usize,
    pub assigned: StaffType,
    pub role: Role,
    pub temp_cashier_served: u32,
    pub busy_by_role: [f64; 4],
    pub idle_minutes: f64,
    pub swap_count: u32,
    pub swap_durations: Vec<f64>,
    pub activity: StaffActivity,
    /// Till this staff member is manning, if any.
    pub till: Option<usize>,
    pub swap_started: Option<f64>,
    /// Invalidates periodic checks scheduled before the last state change.
    pub check_token: u32,
}

impl Staff {
    pub fn new(id: usize, assigned: StaffType) -> Self {
        Self {
            id,
            assigned,
            role: assigned.role(),
            temp_cashier_served: 0,
            busy_by_role: [0.0; 4],
            idle_minutes: 0.0,
            swap_count: 0,
            swap_durations: Vec::new(),
            activity: StaffActivity::OffDuty,
            till: None,
            swap_started: None,
            check_token: 0,
        }
    }

    pub fn on_duty(&self) -> bool {
        !matches!(self.activity, StaffActivity::OffDuty)
    }

    pub fn is_idle(&self) -> bool {
        matches!(self.activity, StaffActivity::Idle { .. })
    }

    pub fn is_temp_cashier(&self) -> bool {
        self.role == Role::Cashier && self.assigned != StaffType::Cashier
    }

    pub fn busy_minutes(&self) -> f64 {
        self.busy_by_role.iter().sum()
    }

    /// Swap into the cashier role at a freshly opened till.
    pub fn start_temp_cashier(&mut self, now: f64, till: usize) {
        debug_assert!(role_permitted(self.assigned, Role::Cashier));
        self.role = Role::Cashier;
        self.till = Some(till);
        self.temp_cashier_served = 0;
        self.swap_count += 1;
        self.swap_started = Some(now);
    }

    /// Back to the rostered role; closes the books on the current swap.
    pub fn revert_to_assigned(&mut self, now: f64) {
        if let Some(start) = self.swap_started.take() {
            self.swap_durations.push(now - start);
        }
        self.role = self.assigned.role();
        self.temp_cashier_served = 0;
        if self.assigned != StaffType::Cashier {
            self.till = None;
        }
    }

    pub fn mean_swap_duration(&self) -> Option<f64> {
        if self.swap_durations.is_empty() {
            None
        } else {
            Some(self.swap_durations.iter().sum::<f64>() / self.swap_durations.len() as f64)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_never_promotes_cashiers() {
        assert!(!role_permitted(StaffType::Cashier, Role::Normal));
        assert!(!role_permitted(StaffType::Cashier, Role::Expert));
        assert!(!role_permitted(StaffType::Cashier, Role::SectionManager));
        assert!(!role_permitted(StaffType::Normal, Role::Expert));
        assert!(!role_permitted(StaffType::Normal, Role::SectionManager));
        assert!(role_permitted(StaffType::Normal, Role::Cashier));
        assert!(role_permitted(StaffType::Expert, Role::SectionManager));
        assert!(role_permitted(StaffType::Expert, Role::Normal));
    }

    #[test]
    fn revert_resets_counter_and_records_duration() {
        let mut s = Staff::new(0, StaffType::Normal);
        s.start_temp_cashier(10.0, 2);
        assert!(s.is_temp_cashier());
        s.temp_cashier_served = 7;
        s.revert_to_assigned(40.0);
        assert_eq!(s.role, Role::Normal);
        assert_eq!(s.temp_cashier_served, 0);
        assert_eq!(s.till, None);
        assert_eq!(s.swap_durations, vec![30.0]);
        assert_eq!(s.swap_count, 1);
    }
}
