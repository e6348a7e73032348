//! Config-driven runner for the saddlepoint risk experiments.

pub mod check;
pub mod config;
pub mod experiments;
pub mod table;
