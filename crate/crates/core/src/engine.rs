//! Cycle-stepped simulation engine.
//!
//! Per-cycle order:
//!   1. regulator period tick
//!   2. cores top up their open-request windows
//!   3. per-bank arbitration: rotating round-robin over cores
//!      (offset = cycle mod num_cores); the first candidate that passes the
//!      regulator is admitted if the bank queue has room, at most one
//!      acceptance per bank per cycle and one admission per core per cycle
//!      (a core presents a single in-order request)
//!   4. banks service their queues; due completions are delivered
//!   5. stall accounting and termination check
//!
//! A request refused by the regulator leaves the bank free for other cores
//! that cycle; a full queue refuses every candidate. Stalls are attributed
//! per presenting core per cycle: regulatory when the budget check failed,
//! structural when the queue was full or another core won the bank.
//!
//! The run ends when the measured core completes its work quantum, or at
//! `max_cycles` with the result marked unfinished.

use crate::addr::{AddrRange, BankId, BankMapConfig, CoreId, Cycle, DomainId};
use crate::bank::{BankState, LlcConfig, LlcError, Request};
use crate::regulator::{Regulator, RegulatorConfig, RegulatorError};
use crate::workload::{CoreModel, WorkloadError, WorkloadSpec};
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error(transparent)]
    Llc(#[from] LlcError),
    #[error(transparent)]
    Regulator(#[from] RegulatorError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error("bank count mismatch: llc has {llc}, bank map has {map}, regulator has {reg}")]
    BankCountMismatch { llc: usize, map: usize, reg: usize },
    #[error("regulator is configured for {reg} cores but the scenario defines {cores}")]
    CoreCountMismatch { reg: usize, cores: usize },
    #[error("core {core} domain {domain} out of range ({num_domains} domains)")]
    BadDomain {
        core: CoreId,
        domain: DomainId,
        num_domains: usize,
    },
    #[error("measured core {0} is not defined")]
    BadMeasuredCore(CoreId),
    #[error("cores {a} and {b} have overlapping but non-identical regions")]
    RegionOverlap { a: CoreId, b: CoreId },
    #[error("max_cycles must be >= 1")]
    ZeroMaxCycles,
    #[error("slowdown needs a finished measured core in both runs")]
    UnfinishedRun,
}

/// Placement and traffic of one core.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreSetup {
    pub domain: DomainId,
    /// Regulation enable for this core.
    pub regulated: bool,
    /// Outstanding-request window size.
    pub max_outstanding: usize,
    pub workload: WorkloadSpec,
    /// Address partition this core's traffic is confined to.
    pub region: AddrRange,
}

/// A complete, runnable experiment description.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub llc: LlcConfig,
    pub bank_map: BankMapConfig,
    pub regulator: RegulatorConfig,
    pub cores: Vec<CoreSetup>,
    pub measured_core: CoreId,
    pub max_cycles: u64,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), SimError> {
        self.llc.validate()?;
        self.regulator.validate()?;
        if self.llc.num_banks != self.bank_map.num_banks
            || self.llc.num_banks != self.regulator.num_banks
        {
            return Err(SimError::BankCountMismatch {
                llc: self.llc.num_banks,
                map: self.bank_map.num_banks,
                reg: self.regulator.num_banks,
            });
        }
        if self.regulator.num_cores != self.cores.len() {
            return Err(SimError::CoreCountMismatch {
                reg: self.regulator.num_cores,
                cores: self.cores.len(),
            });
        }
        for (core, setup) in self.cores.iter().enumerate() {
            if setup.domain >= self.regulator.num_domains {
                return Err(SimError::BadDomain {
                    core,
                    domain: setup.domain,
                    num_domains: self.regulator.num_domains,
                });
            }
        }
        if self.measured_core >= self.cores.len() {
            return Err(SimError::BadMeasuredCore(self.measured_core));
        }
        if self.max_cycles == 0 {
            return Err(SimError::ZeroMaxCycles);
        }
        // partitions must be shared exactly or not at all
        for a in 0..self.cores.len() {
            for b in a + 1..self.cores.len() {
                let (ra, rb) = (self.cores[a].region, self.cores[b].region);
                if ra != rb && !ra.disjoint(&rb) {
                    return Err(SimError::RegionOverlap { a, b });
                }
            }
        }
        Ok(())
    }
}

/// Counters for one core over one run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PerCoreStats {
    /// Requests admitted to a bank.
    pub admitted: u64,
    /// Completions delivered back.
    pub completed: u64,
    pub completed_reads: u64,
    pub completed_writes: u64,
    /// Cycles this core's presented request was denied by the regulator.
    pub stall_regulatory: u64,
    /// Cycles it was denied by a full queue or lost arbitration.
    pub stall_structural: u64,
    /// Whether the core's work quantum completed before the run ended.
    pub finished: bool,
}

/// Outcome of one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimResult {
    pub cycles_elapsed: u64,
    pub per_core: Vec<PerCoreStats>,
    /// Admissions per core per bank (the regulator's monitor counters).
    pub per_bank_access: Vec<Vec<u64>>,
    pub measured_core: CoreId,
    /// False when the run hit `max_cycles` first.
    pub measured_finished: bool,
}

/// Regulator-facing event log of a run: every budget evaluation with its
/// outcome, plus period boundaries. Structural denials never reach the
/// regulator and so never appear here.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceEvent {
    PeriodReset {
        cycle: Cycle,
    },
    Evaluated {
        cycle: Cycle,
        core: CoreId,
        bank: BankId,
        admitted: bool,
    },
}

pub type RegTrace = Vec<TraceEvent>;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Idle,
    Admitted,
    RegStall,
    StructStall,
}

/// Runs `scenario` to completion. Deterministic: identical scenarios
/// (including seed) produce identical results.
pub fn run(scenario: &Scenario) -> Result<SimResult, SimError> {
    Ok(run_inner(scenario, false)?.0)
}

/// As [`run`], also returning the regulator-facing trace.
pub fn run_traced(scenario: &Scenario) -> Result<(SimResult, RegTrace), SimError> {
    let (result, trace) = run_inner(scenario, true)?;
    Ok((result, trace))
}

fn run_inner(scenario: &Scenario, record_trace: bool) -> Result<(SimResult, RegTrace), SimError> {
    scenario.validate()?;

    let num_cores = scenario.cores.len();
    let num_banks = scenario.llc.num_banks;

    let mut cores: Vec<CoreModel> = Vec::with_capacity(num_cores);
    for (id, setup) in scenario.cores.iter().enumerate() {
        cores.push(CoreModel::new(
            id,
            setup.max_outstanding,
            setup.workload.clone(),
            setup.region,
            &scenario.bank_map,
            scenario.seed,
        )?);
    }
    let mut regulator = Regulator::new(
        scenario.regulator.clone(),
        scenario.cores.iter().map(|c| c.domain).collect(),
        scenario.cores.iter().map(|c| c.regulated).collect(),
    )?;
    let mut banks: Vec<BankState> = (0..num_banks).map(BankState::new).collect();

    // (finish_cycle, tag, core, is_write); tag breaks ties deterministically
    let mut deliveries: BinaryHeap<Reverse<(u64, u64, usize, bool)>> = BinaryHeap::new();
    let mut trace: RegTrace = Vec::new();
    let mut stats = vec![PerCoreStats::default(); num_cores];
    let mut next_tag: u64 = 0;

    let mut cycles_elapsed = scenario.max_cycles;
    let mut measured_finished = false;

    for cycle in 0..scenario.max_cycles {
        // 1. period bookkeeping
        if regulator.tick() && record_trace {
            trace.push(TraceEvent::PeriodReset { cycle });
        }

        // 2. open-window refill
        for core in &mut cores {
            core.next_issues(cycle);
        }

        // 3. arbitration and admission
        let presented: Vec<Option<BankId>> = cores
            .iter()
            .map(|c| c.presented().map(|r| scenario.bank_map.bank_of(r.addr)))
            .collect();
        let mut outcome = vec![Outcome::Idle; num_cores];
        let offset = (cycle % num_cores as u64) as usize;
        for (bank, bank_state) in banks.iter_mut().enumerate() {
            let room = bank_state.has_room(&scenario.llc);
            let mut bank_admitted = false;
            for k in 0..num_cores {
                let c = (offset + k) % num_cores;
                if presented[c] != Some(bank) {
                    continue;
                }
                if !room || bank_admitted {
                    outcome[c] = Outcome::StructStall;
                    continue;
                }
                if !regulator.may_issue(c, bank) {
                    outcome[c] = Outcome::RegStall;
                    if record_trace {
                        trace.push(TraceEvent::Evaluated {
                            cycle,
                            core: c,
                            bank,
                            admitted: false,
                        });
                    }
                    continue;
                }
                let tag = next_tag;
                next_tag += 1;
                let open = cores[c].admit_presented(tag);
                let accepted = bank_state.try_accept(
                    &scenario.llc,
                    Request {
                        tag,
                        core: c,
                        addr: open.addr,
                        is_write: open.is_write,
                        issue_cycle: cycle,
                    },
                );
                debug_assert!(accepted, "queue room was checked before admission");
                regulator.record_access(c, bank);
                stats[c].admitted += 1;
                outcome[c] = Outcome::Admitted;
                bank_admitted = true;
                if record_trace {
                    trace.push(TraceEvent::Evaluated {
                        cycle,
                        core: c,
                        bank,
                        admitted: true,
                    });
                }
            }
        }

        // 4. service and completion delivery
        for bank in &mut banks {
            if let Some(done) = bank.service(&scenario.llc, cycle) {
                deliveries.push(Reverse((
                    done.finish_cycle,
                    done.tag,
                    done.core,
                    done.is_write,
                )));
            }
        }
        while let Some(Reverse((finish, tag, core, is_write))) = deliveries.peek().copied() {
            if finish > cycle {
                break;
            }
            debug_assert_eq!(finish, cycle, "completions may not be delivered late");
            deliveries.pop();
            cores[core].on_completion(tag, is_write);
        }

        // 5. stall accounting and termination
        for c in 0..num_cores {
            match outcome[c] {
                Outcome::RegStall => stats[c].stall_regulatory += 1,
                Outcome::StructStall => stats[c].stall_structural += 1,
                Outcome::Idle | Outcome::Admitted => {}
            }
        }
        if cores[scenario.measured_core].finished() {
            cycles_elapsed = cycle + 1;
            measured_finished = true;
            break;
        }
    }

    for (c, core) in cores.iter().enumerate() {
        stats[c].completed = core.completed;
        stats[c].completed_reads = core.completed_reads;
        stats[c].completed_writes = core.completed_writes;
        stats[c].finished = core.finished();
        // conservation: every admission is either completed or still queued
        debug_assert_eq!(
            stats[c].admitted,
            core.completed + core.in_flight_len() as u64,
            "core {c} lost requests"
        );
    }

    let result = SimResult {
        cycles_elapsed,
        per_core: stats,
        per_bank_access: regulator.state.monitor_counters.clone(),
        measured_core: scenario.measured_core,
        measured_finished,
    };
    Ok((result, trace))
}

/// Runtime ratio of a co-running measured core against its solo baseline.
/// Both runs must have finished their work quantum.
pub fn slowdown(co_run: &SimResult, solo: &SimResult) -> Result<f64, SimError> {
    if !co_run.measured_finished || !solo.measured_finished {
        return Err(SimError::UnfinishedRun);
    }
    Ok(co_run.cycles_elapsed as f64 / solo.cycles_elapsed as f64)
}
