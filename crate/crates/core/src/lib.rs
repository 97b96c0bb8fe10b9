//! Scenario-based online routing for the dynamic and stochastic VRP with
//! time windows.
//!
//! Modules follow the life of a run: [`instance`] data and generators,
//! [`scenario`] sampling, [`plan`] routes and schedules, [`eval`] for the
//! scenario-averaged rejection estimate and the exact small-instance oracle,
//! [`search`] moves, [`controller`] online loops and [`experiment`]
//! campaigns, tables and profiles.

pub mod controller;
pub mod eval;
pub mod experiment;
pub mod instance;
pub mod plan;
pub mod rng;
pub mod scenario;
pub mod search;
pub mod time;

pub use instance::{Instance, InstanceError, Request, TimeWindow, Vertex, DEPOT};
pub use plan::{DecisionLog, RoutePlan, Strategy, VehicleState, Visit};
pub use scenario::{Scenario, ScenarioPool};
