//! Physical address to cache-bank mapping and address-space partitions.
//!
//! Banks are selected by a contiguous physical address bit field:
//! `bank = (addr >> start_bit) mod num_banks`. `num_banks` must be a
//! power of two so the field is a plain bit slice.

use thiserror::Error;

/// Bank index, `0..num_banks`.
pub type BankId = usize;
/// Core index, `0..num_cores`.
pub type CoreId = usize;
/// Regulation domain index, `0..num_domains`.
pub type DomainId = usize;
/// Simulation time in clock cycles.
pub type Cycle = u64;

/// A physical byte address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PhysAddr(pub u64);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AddrError {
    #[error("num_banks must be a power of two in 1..=8, got {0}")]
    BadBankCount(usize),
    #[error("line_size must be a power of two >= 8, got {0}")]
    BadLineSize(u64),
    #[error("start_bit {0} out of range (must be < 58)")]
    BadStartBit(u32),
    #[error("region base {base:#x} must be below limit {limit:#x}")]
    EmptyRegion { base: u64, limit: u64 },
}

/// Static bank-interleaving description for one LLC configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BankMapConfig {
    /// Lowest physical address bit of the bank index field.
    pub start_bit: u32,
    /// Number of banks; power of two.
    pub num_banks: usize,
    /// Cache line size in bytes.
    pub line_size: u64,
}

impl BankMapConfig {
    pub fn new(start_bit: u32, num_banks: usize, line_size: u64) -> Result<Self, AddrError> {
        if !num_banks.is_power_of_two() || num_banks == 0 || num_banks > 8 {
            return Err(AddrError::BadBankCount(num_banks));
        }
        if !line_size.is_power_of_two() || line_size < 8 {
            return Err(AddrError::BadLineSize(line_size));
        }
        if start_bit >= 58 {
            return Err(AddrError::BadStartBit(start_bit));
        }
        Ok(Self {
            start_bit,
            num_banks,
            line_size,
        })
    }

    /// Bank targeted by `addr`: bits `start_bit ..` taken modulo `num_banks`.
    #[inline]
    pub fn bank_of(&self, addr: PhysAddr) -> BankId {
        ((addr.0 >> self.start_bit) & (self.num_banks as u64 - 1)) as usize
    }
}

/// Half-open address range `[base, limit)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AddrRange {
    pub base: u64,
    pub limit: u64,
}

impl AddrRange {
    pub fn new(base: u64, limit: u64) -> Result<Self, AddrError> {
        if base >= limit {
            return Err(AddrError::EmptyRegion { base, limit });
        }
        Ok(Self { base, limit })
    }

    /// Whether `addr` falls inside this partition.
    #[inline]
    pub fn contains(&self, addr: PhysAddr) -> bool {
        self.base <= addr.0 && addr.0 < self.limit
    }

    pub fn len(&self) -> u64 {
        self.limit - self.base
    }

    pub fn is_empty(&self) -> bool {
        self.limit <= self.base
    }

    /// True when the two ranges share no addresses.
    pub fn disjoint(&self, other: &AddrRange) -> bool {
        self.limit <= other.base || other.limit <= self.base
    }
}

/// Page-color style split of the physical space into a latency-critical
/// region and a best-effort region. Workloads confined to different
/// partitions never share cache lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionConfig {
    pub victim_region: AddrRange,
    pub best_effort_region: AddrRange,
}

impl PartitionConfig {
    pub fn new(victim_region: AddrRange, best_effort_region: AddrRange) -> Self {
        Self {
            victim_region,
            best_effort_region,
        }
    }

    /// Default layout: a 1 MiB space split into two 512 KiB halves.
    pub fn default_split() -> Self {
        Self {
            victim_region: AddrRange {
                base: 0,
                limit: 512 * 1024,
            },
            best_effort_region: AddrRange {
                base: 512 * 1024,
                limit: 1024 * 1024,
            },
        }
    }
}
