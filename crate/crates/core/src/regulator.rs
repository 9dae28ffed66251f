//! Per-bank bandwidth regulation unit.
//!
//! One regulator instance watches every core's request channel. Each domain
//! owns an access budget that is consumed by completed accesses and restored
//! at the start of each regulation period. `may_issue` is the combinational
//! stall decision; `record_access` is the counter update on a completed
//! handshake; `tick` is the per-cycle period bookkeeping and must run before
//! any evaluation in that cycle.
//!
//! Counter files:
//!   - `bank_counters[domain][bank]`: per-bank budget use (PerBank policy).
//!   - `allbank_counters[domain]`: aggregate budget use (AllBank policy).
//!   - `monitor_counters[core][bank]`: profiling counters, never reset by
//!     the period logic, policy-independent.
//!
//! Both budget counter files are maintained under every policy so a single
//! run can be inspected in either view; only the policy-selected file feeds
//! the stall decision. Register reads of live counters are meaningful at
//! cycle boundaries only (the simulator is single-threaded, so this is a
//! calling convention, not a race).

use crate::addr::{BankId, CoreId, DomainId};
use thiserror::Error;

/// How budget exhaustion is scoped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegulationPolicy {
    /// No stalls; counters still advance for monitoring.
    Unregulated,
    /// One budget per domain across all banks.
    AllBank,
    /// One budget per domain per bank.
    PerBank,
}

impl RegulationPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            RegulationPolicy::Unregulated => "unregulated",
            RegulationPolicy::AllBank => "allbank",
            RegulationPolicy::PerBank => "perbank",
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RegulatorError {
    #[error("regulation_period must be >= 1")]
    ZeroPeriod,
    #[error("num_cores {0} out of range 1..=16")]
    BadCoreCount(usize),
    #[error("num_domains {0} out of range 1..=31")]
    BadDomainCount(usize),
    #[error("num_banks {0} must be a power of two in 1..=8")]
    BadBankCount(usize),
    #[error("num_domains * num_banks = {0} exceeds counter file capacity 64")]
    CounterFileOverflow(usize),
    #[error("access_budget has {got} entries, expected one per domain ({want})")]
    BudgetArity { got: usize, want: usize },
    #[error("transaction_size must be >= 1")]
    ZeroTransactionSize,
    #[error("clock_frequency must be >= 1")]
    ZeroClock,
    #[error("core {core} assigned to domain {domain}, but num_domains is {num_domains}")]
    BadDomain {
        core: CoreId,
        domain: DomainId,
        num_domains: usize,
    },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RegisterError {
    #[error("no register at offset {0:#x}")]
    UnknownOffset(u64),
    #[error("register at offset {0:#x} is read-only (counters accept only a zero write)")]
    ReadOnly(u64),
    #[error("invalid value {value} for register at offset {offset:#x}: {reason}")]
    InvalidValue {
        offset: u64,
        value: u64,
        reason: &'static str,
    },
}

/// Static regulator configuration, plus the software-visible budget and
/// period registers (writable through the register file).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegulatorConfig {
    pub policy: RegulationPolicy,
    /// Regulation period register (RPR), in cycles. The counters are zeroed
    /// on the tick *after* the period counter reaches this value, so a
    /// setting of P yields an effective window of P + 1 cycles.
    pub regulation_period: u64,
    pub num_domains: usize,
    pub num_cores: usize,
    pub num_banks: usize,
    /// Access budget register (ABR) per domain, in accesses per period.
    pub access_budget: Vec<u64>,
    /// Bytes transferred per counted access, for bandwidth conversion.
    pub transaction_size: u64,
    /// Core clock in Hz, for bandwidth conversion.
    pub clock_frequency: u64,
}

impl RegulatorConfig {
    pub fn validate(&self) -> Result<(), RegulatorError> {
        if self.regulation_period == 0 {
            return Err(RegulatorError::ZeroPeriod);
        }
        if self.num_cores == 0 || self.num_cores > 16 {
            return Err(RegulatorError::BadCoreCount(self.num_cores));
        }
        if self.num_domains == 0 || self.num_domains > 31 {
            return Err(RegulatorError::BadDomainCount(self.num_domains));
        }
        if !self.num_banks.is_power_of_two() || self.num_banks > 8 {
            return Err(RegulatorError::BadBankCount(self.num_banks));
        }
        if self.num_domains * self.num_banks > 64 {
            return Err(RegulatorError::CounterFileOverflow(
                self.num_domains * self.num_banks,
            ));
        }
        if self.access_budget.len() != self.num_domains {
            return Err(RegulatorError::BudgetArity {
                got: self.access_budget.len(),
                want: self.num_domains,
            });
        }
        if self.transaction_size == 0 {
            return Err(RegulatorError::ZeroTransactionSize);
        }
        if self.clock_frequency == 0 {
            return Err(RegulatorError::ZeroClock);
        }
        Ok(())
    }
}

/// All mutable regulator registers and counters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegulatorState {
    /// Cycles elapsed in the current period, `0..=regulation_period`.
    pub period_counter: u64,
    /// Bank access counters (BAC), `[domain][bank]`.
    pub bank_counters: Vec<Vec<u64>>,
    /// Aggregate access counters, `[domain]`.
    pub allbank_counters: Vec<u64>,
    /// Domain assignment register (DAR) per core.
    pub domain_of: Vec<DomainId>,
    /// Regulation enable register (RER) per core.
    pub regulation_enabled: Vec<bool>,
    /// Profiling counters, `[core][bank]`; survive period resets.
    pub monitor_counters: Vec<Vec<u64>>,
}

impl RegulatorState {
    fn new(cfg: &RegulatorConfig, domain_of: Vec<DomainId>, regulation_enabled: Vec<bool>) -> Self {
        Self {
            period_counter: 0,
            bank_counters: vec![vec![0; cfg.num_banks]; cfg.num_domains],
            allbank_counters: vec![0; cfg.num_domains],
            domain_of,
            regulation_enabled,
            monitor_counters: vec![vec![0; cfg.num_banks]; cfg.num_cores],
        }
    }
}

/// Register file offsets, in bytes; every register is an 8-byte word.
pub mod regmap {
    pub const RPR: u64 = 0x000;
    pub const ABR_BASE: u64 = 0x008;
    pub const DAR_BASE: u64 = 0x100;
    pub const RER_BASE: u64 = 0x180;
    pub const BAC_BASE: u64 = 0x200;
    pub const MONITOR_BASE: u64 = 0x400;
    pub const STRIDE: u64 = 8;
}

/// A configured regulation unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Regulator {
    pub config: RegulatorConfig,
    pub state: RegulatorState,
}

impl Regulator {
    /// Builds a regulator with every core assigned to `domain_of[core]` and
    /// regulation enabled per `regulation_enabled[core]`.
    pub fn new(
        config: RegulatorConfig,
        domain_of: Vec<DomainId>,
        regulation_enabled: Vec<bool>,
    ) -> Result<Self, RegulatorError> {
        config.validate()?;
        if domain_of.len() != config.num_cores || regulation_enabled.len() != config.num_cores {
            return Err(RegulatorError::BadCoreCount(domain_of.len()));
        }
        for (core, &domain) in domain_of.iter().enumerate() {
            if domain >= config.num_domains {
                return Err(RegulatorError::BadDomain {
                    core,
                    domain,
                    num_domains: config.num_domains,
                });
            }
        }
        let state = RegulatorState::new(&config, domain_of, regulation_enabled);
        Ok(Self { config, state })
    }

    /// Per-cycle period bookkeeping. Must run before any `may_issue` /
    /// `record_access` in the same cycle. Returns true when the period
    /// expired and the budget counters were zeroed. Monitor counters are
    /// never touched here.
    pub fn tick(&mut self) -> bool {
        if self.state.period_counter >= self.config.regulation_period {
            self.state.period_counter = 0;
            for per_bank in &mut self.state.bank_counters {
                per_bank.iter_mut().for_each(|c| *c = 0);
            }
            self.state.allbank_counters.iter_mut().for_each(|c| *c = 0);
            true
        } else {
            self.state.period_counter += 1;
            false
        }
    }

    /// Stall decision for one presented access. Deny-at-threshold: the
    /// access is stalled when the policy-selected counter has already
    /// reached the domain budget. Pure; no counter changes.
    pub fn may_issue(&self, core: CoreId, bank: BankId) -> bool {
        assert!(core < self.config.num_cores, "core {core} out of range");
        assert!(bank < self.config.num_banks, "bank {bank} out of range");
        if !self.state.regulation_enabled[core] {
            return true;
        }
        let domain = self.state.domain_of[core];
        let budget = self.config.access_budget[domain];
        match self.config.policy {
            RegulationPolicy::Unregulated => true,
            RegulationPolicy::AllBank => self.state.allbank_counters[domain] < budget,
            RegulationPolicy::PerBank => self.state.bank_counters[domain][bank] < budget,
        }
    }

    /// Counter update for a completed handshake. The caller must have seen
    /// `may_issue(core, bank)` return true in this cycle (after `tick`).
    pub fn record_access(&mut self, core: CoreId, bank: BankId) {
        assert!(core < self.config.num_cores, "core {core} out of range");
        assert!(bank < self.config.num_banks, "bank {bank} out of range");
        let domain = self.state.domain_of[core];
        self.state.bank_counters[domain][bank] += 1;
        self.state.allbank_counters[domain] += 1;
        self.state.monitor_counters[core][bank] += 1;
    }

    fn decode(&self, offset: u64) -> Option<Reg> {
        use regmap::*;
        if !offset.is_multiple_of(STRIDE) {
            return None;
        }
        if offset == RPR {
            return Some(Reg::Rpr);
        }
        if (ABR_BASE..DAR_BASE).contains(&offset) {
            let d = ((offset - ABR_BASE) / STRIDE) as usize;
            return (d < self.config.num_domains).then_some(Reg::Abr(d));
        }
        if (DAR_BASE..RER_BASE).contains(&offset) {
            let c = ((offset - DAR_BASE) / STRIDE) as usize;
            return (c < self.config.num_cores).then_some(Reg::Dar(c));
        }
        if (RER_BASE..BAC_BASE).contains(&offset) {
            let c = ((offset - RER_BASE) / STRIDE) as usize;
            return (c < self.config.num_cores).then_some(Reg::Rer(c));
        }
        if (BAC_BASE..MONITOR_BASE).contains(&offset) {
            let idx = ((offset - BAC_BASE) / STRIDE) as usize;
            let (d, b) = (idx / self.config.num_banks, idx % self.config.num_banks);
            return (d < self.config.num_domains).then_some(Reg::Bac(d, b));
        }
        if offset >= MONITOR_BASE {
            let idx = ((offset - MONITOR_BASE) / STRIDE) as usize;
            let (c, b) = (idx / self.config.num_banks, idx % self.config.num_banks);
            return (c < self.config.num_cores).then_some(Reg::Monitor(c, b));
        }
        None
    }

    /// Software view of the register file.
    pub fn register_read(&self, offset: u64) -> Result<u64, RegisterError> {
        let reg = self
            .decode(offset)
            .ok_or(RegisterError::UnknownOffset(offset))?;
        Ok(match reg {
            Reg::Rpr => self.config.regulation_period,
            Reg::Abr(d) => self.config.access_budget[d],
            Reg::Dar(c) => self.state.domain_of[c] as u64,
            Reg::Rer(c) => self.state.regulation_enabled[c] as u64,
            Reg::Bac(d, b) => self.state.bank_counters[d][b],
            Reg::Monitor(c, b) => self.state.monitor_counters[c][b],
        })
    }

    /// Software update of the register file. Budget counters are read-only;
    /// monitor counters accept only a zero write (reset).
    pub fn register_write(&mut self, offset: u64, value: u64) -> Result<(), RegisterError> {
        let reg = self
            .decode(offset)
            .ok_or(RegisterError::UnknownOffset(offset))?;
        match reg {
            Reg::Rpr => {
                if value == 0 {
                    return Err(RegisterError::InvalidValue {
                        offset,
                        value,
                        reason: "regulation period must be >= 1",
                    });
                }
                self.config.regulation_period = value;
            }
            Reg::Abr(d) => self.config.access_budget[d] = value,
            Reg::Dar(c) => {
                if value as usize >= self.config.num_domains {
                    return Err(RegisterError::InvalidValue {
                        offset,
                        value,
                        reason: "domain index out of range",
                    });
                }
                self.state.domain_of[c] = value as usize;
            }
            Reg::Rer(c) => {
                if value > 1 {
                    return Err(RegisterError::InvalidValue {
                        offset,
                        value,
                        reason: "enable register accepts 0 or 1",
                    });
                }
                self.state.regulation_enabled[c] = value == 1;
            }
            Reg::Bac(..) => return Err(RegisterError::ReadOnly(offset)),
            Reg::Monitor(c, b) => {
                if value != 0 {
                    return Err(RegisterError::ReadOnly(offset));
                }
                self.state.monitor_counters[c][b] = 0;
            }
        }
        Ok(())
    }

    /// Full register listing for diagnostics: (offset, name, value, access).
    pub fn register_map(&self) -> Vec<(u64, String, u64, &'static str)> {
        use regmap::*;
        let mut out = Vec::new();
        out.push((RPR, "rpr".to_string(), self.config.regulation_period, "rw"));
        for d in 0..self.config.num_domains {
            let off = ABR_BASE + d as u64 * STRIDE;
            out.push((off, format!("abr[{d}]"), self.config.access_budget[d], "rw"));
        }
        for c in 0..self.config.num_cores {
            let off = DAR_BASE + c as u64 * STRIDE;
            out.push((
                off,
                format!("dar[{c}]"),
                self.state.domain_of[c] as u64,
                "rw",
            ));
        }
        for c in 0..self.config.num_cores {
            let off = RER_BASE + c as u64 * STRIDE;
            out.push((
                off,
                format!("rer[{c}]"),
                self.state.regulation_enabled[c] as u64,
                "rw",
            ));
        }
        for d in 0..self.config.num_domains {
            for b in 0..self.config.num_banks {
                let off = BAC_BASE + (d * self.config.num_banks + b) as u64 * STRIDE;
                out.push((
                    off,
                    format!("bac[{d}][{b}]"),
                    self.state.bank_counters[d][b],
                    "ro",
                ));
            }
        }
        for c in 0..self.config.num_cores {
            for b in 0..self.config.num_banks {
                let off = MONITOR_BASE + (c * self.config.num_banks + b) as u64 * STRIDE;
                out.push((
                    off,
                    format!("monitor[{c}][{b}]"),
                    self.state.monitor_counters[c][b],
                    "rw0",
                ));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
enum Reg {
    Rpr,
    Abr(DomainId),
    Dar(CoreId),
    Rer(CoreId),
    Bac(DomainId, BankId),
    Monitor(CoreId, BankId),
}

/// Regulated bandwidth in bytes per second for one domain:
/// `abr / rpr * transaction_size * clock_hz`, computed exactly and rounded
/// to the nearest byte (half away from zero).
pub fn bandwidth_of(
    abr: u64,
    rpr: u64,
    transaction_size: u64,
    clock_hz: u64,
) -> Result<u64, RegulatorError> {
    if rpr == 0 {
        return Err(RegulatorError::ZeroPeriod);
    }
    let numer = abr as u128 * transaction_size as u128 * clock_hz as u128;
    let denom = rpr as u128;
    let rounded = (2 * numer + denom) / (2 * denom);
    Ok(u64::try_from(rounded).expect("bandwidth exceeds u64 range"))
}

/// Formats a byte rate with decimal unit prefixes (1 GB/s = 1e9 B/s).
pub fn format_bandwidth(bytes_per_sec: u64) -> String {
    let b = bytes_per_sec as f64;
    if b >= 1e9 {
        format!("{:.2} GB/s", b / 1e9)
    } else if b >= 1e6 {
        format!("{:.2} MB/s", b / 1e6)
    } else if b >= 1e3 {
        format!("{:.2} KB/s", b / 1e3)
    } else {
        format!("{bytes_per_sec} B/s")
    }
}
