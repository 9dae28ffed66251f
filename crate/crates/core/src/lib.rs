//! Cycle-stepped simulator of a multicore shared last-level cache whose
//! banks sit behind a hardware-style bandwidth regulator.
//!
//! The crate models cores issuing cache accesses into per-bank FIFO queues,
//! a regulation unit that meters admissions per domain against a periodic
//! budget (in aggregate or per bank), and workload generators that
//! reproduce bank-contention attack and victim behavior. [`engine::run`]
//! steps a [`engine::Scenario`] to completion; [`audit`] re-checks the
//! regulator's decisions from the trace after the fact.

pub mod addr;
pub mod audit;
pub mod bank;
pub mod engine;
pub mod reference;
pub mod regulator;
pub mod report;
pub mod scenario;
pub mod suite;
pub mod workload;

pub use addr::{AddrRange, BankId, BankMapConfig, CoreId, Cycle, DomainId, PhysAddr};
pub use bank::LlcConfig;
pub use engine::{run, run_traced, slowdown, CoreSetup, PerCoreStats, Scenario, SimResult};
pub use regulator::{RegulationPolicy, Regulator, RegulatorConfig};
pub use report::{register_report, run_report, suite_csv};
pub use scenario::{canonical_text, config_hash, parse_scenario, RawDoc, ScenarioError};
pub use suite::{parse_plan, run_suite, ExperimentPlan, SuiteError, SuiteOutcome, Variation};
pub use workload::{WorkloadKind, WorkloadSpec};
