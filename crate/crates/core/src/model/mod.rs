//! Shared domain types: customers, staff, queues, department configuration.

mod config;
mod customer;
mod queues;
mod staff;

pub use config::{
    validate_config, DailyWages, Department, DepartmentConfig, Durations, LoopWeights,
    MonetaryConfig, Patience, PatienceModifierRule, ProactivityParams, Probabilities, Rota,
    RotaSet, SatisfactionWeights, StopStrategy, Violation,
};
pub use customer::{
    ActivityState, Customer, CustomerKind, CustomerMix, CustomerProfile, HelpKind, LastStep,
    Likelihood, SatisfactionLedger, Sentiment, ServiceLoop, Visit,
};
pub use queues::{QueueSet, Till};
pub use staff::{role_permitted, Role, Staff, StaffActivity, StaffType};
