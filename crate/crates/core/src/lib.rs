//! Proactive enterprise risk register.
//!
//! Each risk is classified on three axes (origin, presence, dynamics) into one
//! of eight behavior strategies, scored from an expert driver, tracked over
//! time with a least-squares trend, and aggregated into the register's
//! probable/existing decomposition and its integral vulnerability indicator.

pub mod assessment;
pub mod cycle;
pub mod dynamics;
pub mod error;
pub mod format;
pub mod model;
pub mod register;
pub mod scoring;
pub mod store;
pub mod strategy;

pub use assessment::{
    assess, assess_with, class_sums, integral_indicator, prioritize, what_if, AssessConfig,
    AssessmentReport, ClassSums, Intervention, WhatIfScenario,
};
pub use cycle::{run_cycle, CycleConfig, CycleReport};
pub use dynamics::{
    apply_observation, classify_dynamics, fit_trend, forecast_crossing, forecast_score,
    TransitionEvent, TransitionKind, TrendFit,
};
pub use error::{Error, ErrorClass, Result};
pub use format::fixed12;
pub use model::{
    AdmissibilityDegree, Declaration, Direction, Driver, DriverKind, Dynamics, NewRisk,
    Observation, Origin, Presence, ProbabilityBand, RiskRecord, RiskStatus, Snapshot,
};
pub use register::{Horizon, MetadataPatch, Register};
pub use scoring::Zone;
pub use store::{create_register, load_register, save_register, LogEntry, RegisterStore};
pub use strategy::{classify_admissibility, classify_band, is_significant, resolve_strategy, StrategyRow};
