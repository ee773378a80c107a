pub mod concept;
pub mod control;
pub mod domain;
pub mod emotion;
pub mod engine;
pub mod error;
pub mod generator;
pub mod goals;
pub mod memory;
pub mod planner;
pub mod plot_units;
pub mod protocol;
pub mod store;
