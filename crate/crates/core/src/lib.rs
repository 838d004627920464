//! Discrete-event simulation of a department store with proactive staff
//! role swapping.

pub mod behavior;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod io;
pub mod metrics;
pub mod model;
pub mod proactivity;
pub mod world;
