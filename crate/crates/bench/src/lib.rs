//! Shared scenario builders for the criterion benchmarks.

use bankreg::{
    AddrRange, BankMapConfig, CoreSetup, LlcConfig, RegulationPolicy, RegulatorConfig, Scenario,
    WorkloadKind, WorkloadSpec,
};

/// A two-bank contention scenario: one read-chasing victim on bank 0 and
/// two write-heavy aggressors pinned to the same bank, regulated per bank.
pub fn contended_scenario(policy: RegulationPolicy, iterations: u64) -> Scenario {
    let victim = CoreSetup {
        domain: 0,
        regulated: false,
        max_outstanding: 8,
        workload: WorkloadSpec {
            kind: WorkloadKind::BkPll,
            wss: 128 * 1024,
            target_bank: Some(0),
            is_write: false,
            mlp: 8,
            stride: 64,
            total_iterations: Some(iterations),
        },
        region: AddrRange::new(0, 512 * 1024).unwrap(),
    };
    let aggressor = CoreSetup {
        domain: 1,
        regulated: true,
        max_outstanding: 16,
        workload: WorkloadSpec {
            kind: WorkloadKind::Mempress,
            wss: 64 * 1024,
            target_bank: Some(0),
            is_write: true,
            mlp: 8,
            stride: 64,
            total_iterations: None,
        },
        region: AddrRange::new(512 * 1024, 1024 * 1024).unwrap(),
    };
    Scenario {
        llc: LlcConfig {
            num_banks: 2,
            bank_service_cycles: 4,
            hit_latency: 40,
            queue_depth: 8,
            write_service_cycles: None,
        },
        bank_map: BankMapConfig::new(6, 2, 64).unwrap(),
        regulator: RegulatorConfig {
            policy,
            regulation_period: 400,
            num_domains: 2,
            num_cores: 3,
            num_banks: 2,
            access_budget: vec![384, 16],
            transaction_size: 16,
            clock_frequency: 1_000_000_000,
        },
        cores: vec![victim, aggressor.clone(), aggressor],
        measured_core: 0,
        max_cycles: 50_000_000,
        seed: 7,
    }
}
