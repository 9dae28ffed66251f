//! Synthetic workload generators and the per-core issue model.
//!
//! A core owns one workload and a bounded window of outstanding requests.
//! Each cycle it may present the oldest open request to the interconnect;
//! requests stay presented until admitted (retry), and admissions move them
//! into the in-flight set until their completion returns.
//!
//! Workloads:
//!   - `BkPll`: `mlp` disjoint circular pointer chains over a shuffled set
//!     of lines; a chain's next access becomes issuable only after the
//!     previous one completes (latency-bound, optionally bank-confined).
//!   - `Bandwidth`: an independent sequential sweep at a fixed stride
//!     (bandwidth-bound, spreads evenly over banks when unconfined).
//!   - `Mempress`: `mlp` independent shuffled streams, usually confined to
//!     one bank; issues as fast as the window allows.

use crate::addr::{AddrRange, BankId, BankMapConfig, CoreId, Cycle, PhysAddr};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WorkloadError {
    #[error("working set needs {need} qualifying lines but region holds {have}")]
    InsufficientLines { need: u64, have: u64 },
    #[error("wss {wss} is not divisible into {mlp} chains of whole {line_size}-byte lines")]
    UnevenChains {
        wss: u64,
        line_size: u64,
        mlp: usize,
    },
    #[error("mlp must be >= 1")]
    ZeroMlp,
    #[error("max_outstanding must be >= 1")]
    ZeroWindow,
    #[error("stride {stride} must be a positive multiple of the line size {line_size}")]
    BadStride { stride: u64, line_size: u64 },
    #[error("wss {wss} must be a positive multiple of stride {stride} and fit the region ({region} bytes)")]
    BadSweep { wss: u64, stride: u64, region: u64 },
    #[error("region base {base:#x} must be line-aligned ({line_size} bytes)")]
    UnalignedRegion { base: u64, line_size: u64 },
    #[error("target bank {bank} out of range ({num_banks} banks)")]
    BadTargetBank { bank: BankId, num_banks: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WorkloadKind {
    BkPll,
    Bandwidth,
    Mempress,
}

impl WorkloadKind {
    pub fn name(&self) -> &'static str {
        match self {
            WorkloadKind::BkPll => "bkpll",
            WorkloadKind::Bandwidth => "bandwidth",
            WorkloadKind::Mempress => "mempress",
        }
    }
}

/// Declarative description of one core's traffic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkloadSpec {
    pub kind: WorkloadKind,
    /// Working set size in bytes (total distinct bytes touched).
    pub wss: u64,
    /// Confine every generated address to this bank.
    pub target_bank: Option<BankId>,
    pub is_write: bool,
    /// Chain count (BkPll) or stream count (Mempress); ignored by Bandwidth.
    pub mlp: usize,
    /// Sweep stride in bytes (Bandwidth only).
    pub stride: u64,
    /// Accesses to perform before the workload reports finished;
    /// None runs forever, Some(0) idles.
    pub total_iterations: Option<u64>,
}

/// Derives a per-core RNG seed from a scenario seed (splitmix-style mix so
/// adjacent cores get unrelated streams).
pub fn core_seed(scenario_seed: u64, core: CoreId) -> u64 {
    let mut z = scenario_seed ^ (core as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// All line-aligned addresses in `region` that map to `target_bank`
/// (every line when None), in ascending order.
fn qualifying_lines(
    region: AddrRange,
    map: &BankMapConfig,
    target_bank: Option<BankId>,
) -> Vec<PhysAddr> {
    let first = region.base.div_ceil(map.line_size) * map.line_size;
    let mut out = Vec::new();
    let mut addr = first;
    while addr + map.line_size <= region.limit {
        let pa = PhysAddr(addr);
        if target_bank.is_none_or(|b| map.bank_of(pa) == b) {
            out.push(pa);
        }
        addr += map.line_size;
    }
    out
}

/// Builds the `mlp` disjoint circular chains of a pointer-chase working
/// set: a seeded shuffle of the qualifying lines, chunked into equal-length
/// chains. Identical (spec, region, map, seed) inputs give identical
/// layouts.
pub fn build_bkpll_layout(
    spec: &WorkloadSpec,
    region: AddrRange,
    map: &BankMapConfig,
    seed: u64,
) -> Result<Vec<Vec<PhysAddr>>, WorkloadError> {
    build_chain_layout(spec, region, map, seed)
}

fn build_chain_layout(
    spec: &WorkloadSpec,
    region: AddrRange,
    map: &BankMapConfig,
    seed: u64,
) -> Result<Vec<Vec<PhysAddr>>, WorkloadError> {
    if spec.mlp == 0 {
        return Err(WorkloadError::ZeroMlp);
    }
    if let Some(bank) = spec.target_bank {
        if bank >= map.num_banks {
            return Err(WorkloadError::BadTargetBank {
                bank,
                num_banks: map.num_banks,
            });
        }
    }
    let lines = spec.wss / map.line_size;
    if lines == 0
        || !spec.wss.is_multiple_of(map.line_size)
        || !lines.is_multiple_of(spec.mlp as u64)
    {
        return Err(WorkloadError::UnevenChains {
            wss: spec.wss,
            line_size: map.line_size,
            mlp: spec.mlp,
        });
    }
    let mut pool = qualifying_lines(region, map, spec.target_bank);
    if (pool.len() as u64) < lines {
        return Err(WorkloadError::InsufficientLines {
            need: lines,
            have: pool.len() as u64,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pool.shuffle(&mut rng);
    pool.truncate(lines as usize);
    let chain_len = (lines / spec.mlp as u64) as usize;
    Ok(pool.chunks_exact(chain_len).map(|c| c.to_vec()).collect())
}

fn validate_sweep(
    spec: &WorkloadSpec,
    region: AddrRange,
    map: &BankMapConfig,
) -> Result<(), WorkloadError> {
    if spec.stride == 0 || !spec.stride.is_multiple_of(map.line_size) {
        return Err(WorkloadError::BadStride {
            stride: spec.stride,
            line_size: map.line_size,
        });
    }
    if !region.base.is_multiple_of(map.line_size) {
        return Err(WorkloadError::UnalignedRegion {
            base: region.base,
            line_size: map.line_size,
        });
    }
    if spec.wss == 0 || !spec.wss.is_multiple_of(spec.stride) || spec.wss > region.len() {
        return Err(WorkloadError::BadSweep {
            wss: spec.wss,
            stride: spec.stride,
            region: region.len(),
        });
    }
    if let Some(bank) = spec.target_bank {
        if bank >= map.num_banks {
            return Err(WorkloadError::BadTargetBank {
                bank,
                num_banks: map.num_banks,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct ChainState {
    addrs: Vec<PhysAddr>,
    cursor: usize,
    /// A chain has at most one request open or in flight.
    outstanding: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum KindState {
    /// Dependent chains: `outstanding` gates reissue until completion.
    BkPll { chains: Vec<ChainState> },
    /// Independent streams cycled round-robin.
    Mempress {
        streams: Vec<ChainState>,
        next_stream: usize,
    },
    /// Independent stride sweep.
    Bandwidth { next_index: u64 },
}

/// A request the core wants admitted; `slot` ties it back to its chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpenRequest {
    pub addr: PhysAddr,
    pub is_write: bool,
    slot: usize,
}

/// One core: workload state plus the outstanding-request window.
#[derive(Debug, Clone)]
pub struct CoreModel {
    pub core_id: CoreId,
    pub max_outstanding: usize,
    pub spec: WorkloadSpec,
    region: AddrRange,
    kind_state: KindState,
    open: VecDeque<OpenRequest>,
    in_flight: HashMap<u64, usize>,
    opened_total: u64,
    pub completed: u64,
    pub completed_reads: u64,
    pub completed_writes: u64,
}

impl CoreModel {
    pub fn new(
        core_id: CoreId,
        max_outstanding: usize,
        spec: WorkloadSpec,
        region: AddrRange,
        map: &BankMapConfig,
        scenario_seed: u64,
    ) -> Result<Self, WorkloadError> {
        if max_outstanding == 0 {
            return Err(WorkloadError::ZeroWindow);
        }
        let seed = core_seed(scenario_seed, core_id);
        let kind_state = match spec.kind {
            WorkloadKind::BkPll => KindState::BkPll {
                chains: build_chain_layout(&spec, region, map, seed)?
                    .into_iter()
                    .map(|addrs| ChainState {
                        addrs,
                        cursor: 0,
                        outstanding: false,
                    })
                    .collect(),
            },
            WorkloadKind::Mempress => KindState::Mempress {
                streams: build_chain_layout(&spec, region, map, seed)?
                    .into_iter()
                    .map(|addrs| ChainState {
                        addrs,
                        cursor: 0,
                        outstanding: false,
                    })
                    .collect(),
                next_stream: 0,
            },
            WorkloadKind::Bandwidth => {
                validate_sweep(&spec, region, map)?;
                KindState::Bandwidth { next_index: 0 }
            }
        };
        Ok(Self {
            core_id,
            max_outstanding,
            spec,
            region,
            kind_state,
            open: VecDeque::new(),
            in_flight: HashMap::new(),
            opened_total: 0,
            completed: 0,
            completed_reads: 0,
            completed_writes: 0,
        })
    }

    fn window_free(&self) -> usize {
        self.max_outstanding - self.in_flight.len() - self.open.len()
    }

    /// Tops the open-request window up with newly issuable requests, in
    /// deterministic order. Called once per cycle before arbitration.
    pub fn next_issues(&mut self, _now: Cycle) {
        let is_write = self.spec.is_write;
        let mut budget = self.window_free();
        match &mut self.kind_state {
            KindState::BkPll { chains } => {
                for (slot, chain) in chains.iter_mut().enumerate() {
                    if budget == 0 {
                        break;
                    }
                    if chain.outstanding {
                        continue;
                    }
                    match self.spec.total_iterations {
                        Some(n) if self.opened_total >= n => break,
                        _ => {}
                    }
                    chain.outstanding = true;
                    self.open.push_back(OpenRequest {
                        addr: chain.addrs[chain.cursor],
                        is_write,
                        slot,
                    });
                    self.opened_total += 1;
                    budget -= 1;
                }
            }
            KindState::Mempress {
                streams,
                next_stream,
            } => {
                while budget > 0 {
                    match self.spec.total_iterations {
                        Some(n) if self.opened_total >= n => break,
                        _ => {}
                    }
                    let slot = *next_stream;
                    let stream = &mut streams[slot];
                    self.open.push_back(OpenRequest {
                        addr: stream.addrs[stream.cursor],
                        is_write,
                        slot,
                    });
                    stream.cursor = (stream.cursor + 1) % stream.addrs.len();
                    *next_stream = (slot + 1) % streams.len();
                    self.opened_total += 1;
                    budget -= 1;
                }
            }
            KindState::Bandwidth { next_index } => {
                let sweep_len = self.spec.wss / self.spec.stride;
                while budget > 0 {
                    match self.spec.total_iterations {
                        Some(n) if self.opened_total >= n => break,
                        _ => {}
                    }
                    let offset = (*next_index % sweep_len) * self.spec.stride;
                    self.open.push_back(OpenRequest {
                        addr: PhysAddr(self.region.base + offset),
                        is_write,
                        slot: 0,
                    });
                    *next_index += 1;
                    self.opened_total += 1;
                    budget -= 1;
                }
            }
        }
        debug_assert!(self.open.len() + self.in_flight.len() <= self.max_outstanding);
    }

    /// The request this core presents to the interconnect this cycle: the
    /// oldest open request. The request channel is in order, so a stalled
    /// head blocks the ones behind it.
    pub fn presented(&self) -> Option<&OpenRequest> {
        self.open.front()
    }

    /// Moves the presented request into the in-flight set under `tag`.
    pub fn admit_presented(&mut self, tag: u64) -> OpenRequest {
        let req = self
            .open
            .pop_front()
            .expect("admit without a presented request");
        self.in_flight.insert(tag, req.slot);
        req
    }

    /// Retires a completed access; for chain workloads this unblocks the
    /// chain's next pointer, which becomes issuable on the next cycle's
    /// `next_issues`.
    pub fn on_completion(&mut self, tag: u64, is_write: bool) {
        let slot = self
            .in_flight
            .remove(&tag)
            .expect("completion for unknown tag");
        self.completed += 1;
        if is_write {
            self.completed_writes += 1;
        } else {
            self.completed_reads += 1;
        }
        if let KindState::BkPll { chains } = &mut self.kind_state {
            let chain = &mut chains[slot];
            chain.cursor = (chain.cursor + 1) % chain.addrs.len();
            chain.outstanding = false;
        }
    }

    /// Whether the work quantum is done (`total_iterations` completions).
    pub fn finished(&self) -> bool {
        match self.spec.total_iterations {
            Some(n) => self.completed >= n,
            None => false,
        }
    }

    pub fn in_flight_len(&self) -> usize {
        self.in_flight.len()
    }

    pub fn opened_total(&self) -> u64 {
        self.opened_total
    }
}
