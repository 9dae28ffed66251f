//! Post-run verification of regulator behavior from an engine trace.
//!
//! `audit_budget` recounts admissions per completed regulation period and
//! fails if any fully regulated domain exceeded its budget (per bank under
//! the per-bank policy, in aggregate under the all-bank policy).
//!
//! `replay_against_reference` feeds every regulator evaluation the engine
//! logged back through the independent reference model, cycle by cycle,
//! and fails on the first decision or period boundary that disagrees.

use crate::addr::{BankId, CoreId, Cycle, DomainId};
use crate::engine::{RegTrace, Scenario, TraceEvent};
use crate::reference::ReferenceRegulator;
use crate::regulator::RegulationPolicy;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AuditError {
    #[error("period ending at cycle {period_end}: domain {domain} admitted {count} accesses to bank {bank}, budget is {budget}")]
    PerBankOverrun {
        period_end: Cycle,
        domain: DomainId,
        bank: BankId,
        count: u64,
        budget: u64,
    },
    #[error("period ending at cycle {period_end}: domain {domain} admitted {count} accesses, budget is {budget}")]
    DomainOverrun {
        period_end: Cycle,
        domain: DomainId,
        count: u64,
        budget: u64,
    },
    #[error("cycle {cycle}: core {core} presented two accesses (banks {first} and {second})")]
    DoublePresentation {
        cycle: Cycle,
        core: CoreId,
        first: BankId,
        second: BankId,
    },
    #[error("cycle {cycle}: engine admitted={engine_admitted} for core {core} bank {bank}, reference disagrees")]
    DecisionDivergence {
        cycle: Cycle,
        core: CoreId,
        bank: BankId,
        engine_admitted: bool,
    },
    #[error("cycle {cycle}: period boundary mismatch (engine reset: {engine_reset})")]
    PeriodMisalignment { cycle: Cycle, engine_reset: bool },
}

/// Domains whose every core is regulation-enabled; only these are bound by
/// the budget (a disabled core's traffic is counted but never stalled).
fn fully_regulated_domains(scenario: &Scenario) -> Vec<bool> {
    let mut fully = vec![true; scenario.regulator.num_domains];
    for setup in &scenario.cores {
        if !setup.regulated {
            fully[setup.domain] = false;
        }
    }
    fully
}

/// Recounts the trace per completed period and checks every fully
/// regulated domain against its budget. The window from run start to the
/// first reset counts as a complete period; the tail after the last reset
/// is not checked.
pub fn audit_budget(trace: &RegTrace, scenario: &Scenario) -> Result<(), AuditError> {
    let policy = scenario.regulator.policy;
    if policy == RegulationPolicy::Unregulated {
        return Ok(());
    }
    let num_domains = scenario.regulator.num_domains;
    let num_banks = scenario.regulator.num_banks;
    let fully = fully_regulated_domains(scenario);
    let domain_of: Vec<DomainId> = scenario.cores.iter().map(|c| c.domain).collect();

    let mut per_bank = vec![vec![0u64; num_banks]; num_domains];
    let mut per_domain = vec![0u64; num_domains];

    let check = |per_bank: &mut Vec<Vec<u64>>,
                 per_domain: &mut Vec<u64>,
                 period_end: Cycle|
     -> Result<(), AuditError> {
        for d in 0..num_domains {
            if !fully[d] {
                continue;
            }
            let budget = scenario.regulator.access_budget[d];
            match policy {
                RegulationPolicy::PerBank => {
                    for (b, &count) in per_bank[d].iter().enumerate() {
                        if count > budget {
                            return Err(AuditError::PerBankOverrun {
                                period_end,
                                domain: d,
                                bank: b,
                                count,
                                budget,
                            });
                        }
                    }
                }
                RegulationPolicy::AllBank => {
                    if per_domain[d] > budget {
                        return Err(AuditError::DomainOverrun {
                            period_end,
                            domain: d,
                            count: per_domain[d],
                            budget,
                        });
                    }
                }
                RegulationPolicy::Unregulated => {}
            }
        }
        per_bank
            .iter_mut()
            .for_each(|row| row.iter_mut().for_each(|c| *c = 0));
        per_domain.iter_mut().for_each(|c| *c = 0);
        Ok(())
    };

    for event in trace {
        match *event {
            TraceEvent::PeriodReset { cycle } => {
                check(&mut per_bank, &mut per_domain, cycle)?;
            }
            TraceEvent::Evaluated {
                core,
                bank,
                admitted: true,
                ..
            } => {
                let d = domain_of[core];
                per_bank[d][bank] += 1;
                per_domain[d] += 1;
            }
            TraceEvent::Evaluated {
                admitted: false, ..
            } => {}
        }
    }
    Ok(())
}

/// Replays a per-bank-policy trace through [`ReferenceRegulator`] and
/// demands identical stall decisions and period boundaries. Traces from
/// other policies pass vacuously (the reference models the per-bank
/// algorithm).
pub fn replay_against_reference(trace: &RegTrace, scenario: &Scenario) -> Result<(), AuditError> {
    if scenario.regulator.policy != RegulationPolicy::PerBank {
        return Ok(());
    }
    let num_cores = scenario.cores.len();
    let mut reference = ReferenceRegulator::new(
        num_cores,
        scenario.regulator.num_banks,
        scenario.regulator.num_domains,
        scenario.regulator.regulation_period,
        scenario.regulator.access_budget.clone(),
        scenario.cores.iter().map(|c| c.domain).collect(),
        scenario.cores.iter().map(|c| c.regulated).collect(),
    );

    let last_cycle = match trace.last() {
        Some(TraceEvent::PeriodReset { cycle }) | Some(TraceEvent::Evaluated { cycle, .. }) => {
            *cycle
        }
        None => return Ok(()),
    };

    let mut events = trace.iter().peekable();
    for cycle in 0..=last_cycle {
        let mut engine_reset = false;
        let mut access_set: Vec<Option<BankId>> = vec![None; num_cores];
        let mut engine_stalled: Vec<(CoreId, BankId)> = Vec::new();
        loop {
            match events.peek() {
                Some(TraceEvent::PeriodReset { cycle: c }) if *c == cycle => {
                    engine_reset = true;
                    events.next();
                }
                Some(TraceEvent::Evaluated {
                    cycle: c,
                    core,
                    bank,
                    admitted,
                }) if *c == cycle => {
                    if let Some(first) = access_set[*core] {
                        return Err(AuditError::DoublePresentation {
                            cycle,
                            core: *core,
                            first,
                            second: *bank,
                        });
                    }
                    access_set[*core] = Some(*bank);
                    if !admitted {
                        engine_stalled.push((*core, *bank));
                    }
                    events.next();
                }
                _ => break,
            }
        }

        let reference_reset = reference.period_counter >= reference.regulation_period;
        if reference_reset != engine_reset {
            return Err(AuditError::PeriodMisalignment {
                cycle,
                engine_reset,
            });
        }

        let mut reference_stalls = reference.reference_step(&access_set);
        reference_stalls.sort_unstable();
        engine_stalled.sort_unstable();
        if reference_stalls != engine_stalled {
            // report the first differing decision
            let in_ref_only = reference_stalls
                .iter()
                .find(|s| !engine_stalled.contains(s));
            let in_eng_only = engine_stalled
                .iter()
                .find(|s| !reference_stalls.contains(s));
            let (&(core, bank), engine_admitted) = match (in_eng_only, in_ref_only) {
                (Some(s), _) => (s, false),
                (_, Some(s)) => (s, true),
                _ => unreachable!("sorted sets differ"),
            };
            return Err(AuditError::DecisionDivergence {
                cycle,
                core,
                bank,
                engine_admitted,
            });
        }
    }
    Ok(())
}
