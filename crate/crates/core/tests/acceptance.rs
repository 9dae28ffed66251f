//! Acceptance gate: ten end-to-end claims about the simulator, each
//! checked by one test that prints a single `criterion N: PASS|FAIL` line
//! (run with `--nocapture` to see them on success).
//!
//! The contention and regulation claims run the canned experiment suites
//! under `scenarios/`; the arithmetic and oracle claims drive the library
//! directly.

use std::path::PathBuf;
use std::sync::OnceLock;

use bankreg::audit::{audit_budget, replay_against_reference};
use bankreg::reference::ReferenceRegulator;
use bankreg::regulator::bandwidth_of;
use bankreg::suite::VariationResult;
use bankreg::{
    parse_plan, parse_scenario, run, run_suite, run_traced, suite_csv, ExperimentPlan,
    RegulationPolicy, Regulator, RegulatorConfig, SuiteOutcome,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scenarios_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn load_plan(file: &str) -> ExperimentPlan {
    let path = scenarios_dir().join(file);
    let text =
        std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()));
    parse_plan(&text).unwrap_or_else(|e| panic!("parse {}: {e}", path.display()))
}

fn run_plan(file: &str) -> SuiteOutcome {
    run_suite(&load_plan(file)).unwrap_or_else(|e| panic!("run {file}: {e}"))
}

fn attack_2bank() -> &'static SuiteOutcome {
    static OUTCOME: OnceLock<SuiteOutcome> = OnceLock::new();
    OUTCOME.get_or_init(|| run_plan("attack_2bank.suite"))
}

fn budget_sweep() -> &'static SuiteOutcome {
    static OUTCOME: OnceLock<SuiteOutcome> = OnceLock::new();
    OUTCOME.get_or_init(|| run_plan("budget_sweep.suite"))
}

fn profile_workloads() -> &'static SuiteOutcome {
    static OUTCOME: OnceLock<SuiteOutcome> = OnceLock::new();
    OUTCOME.get_or_init(|| run_plan("profile_workloads.suite"))
}

fn variation<'a>(outcome: &'a SuiteOutcome, name: &str) -> &'a VariationResult {
    outcome
        .variations
        .iter()
        .find(|v| v.name == name)
        .unwrap_or_else(|| panic!("suite has no variation `{name}`"))
}

fn slowdown_of(outcome: &SuiteOutcome, name: &str) -> f64 {
    variation(outcome, name)
        .slowdown
        .unwrap_or_else(|| panic!("variation `{name}` has no slowdown (run unfinished?)"))
}

/// Prints the per-criterion verdict line, then enforces it.
fn criterion(n: u32, passed: bool, detail: &str) {
    println!(
        "criterion {n}: {} - {detail}",
        if passed { "PASS" } else { "FAIL" }
    );
    assert!(passed, "criterion {n} failed: {detail}");
}

#[test]
fn criterion_01_same_bank_attack_hurts_different_bank_does_not() {
    let outcome = attack_2bank();
    let bounded = outcome
        .variations
        .iter()
        .all(|v| v.result.measured_finished && v.result.cycles_elapsed <= 10_000_000);
    let same = slowdown_of(outcome, "same_bank");
    let diff = slowdown_of(outcome, "diff_bank");
    criterion(
        1,
        same >= 2.0 && diff <= 1.05 && bounded,
        &format!(
            "same-bank slowdown {same:.4} (need >= 2.0), diff-bank {diff:.4} (need <= 1.05), \
             all runs finished within 10M cycles: {bounded}"
        ),
    );
}

#[test]
fn criterion_02_victim_slowdown_monotone_in_attacker_budget() {
    let outcome = budget_sweep();
    let budgets = [16u64, 32, 64, 128, 256, 384];
    let sds: Vec<f64> = budgets
        .iter()
        .map(|b| slowdown_of(outcome, &format!("abr_{b}")))
        .collect();
    let monotone = sds.windows(2).all(|w| w[0] <= w[1]);
    let tight_ok = sds[0] <= 1.10;
    let c_slack = variation(outcome, "abr_384").result.cycles_elapsed as f64;
    let c_unreg = variation(outcome, "unregulated").result.cycles_elapsed as f64;
    let slack_matches_unregulated = (c_slack / c_unreg - 1.0).abs() <= 0.02;
    criterion(
        2,
        monotone && tight_ok && slack_matches_unregulated,
        &format!(
            "slowdowns over budgets {budgets:?} = {:?} (non-decreasing: {monotone}), \
             tightest {:.4} (need <= 1.10), slackest vs unregulated cycle ratio {:.4} \
             (need within 2%)",
            sds.iter()
                .map(|s| (s * 1e4).round() / 1e4)
                .collect::<Vec<_>>(),
            sds[0],
            c_slack / c_unreg
        ),
    );
}

#[test]
fn criterion_03_policies_identical_when_attack_targets_one_bank() {
    let outcome = attack_2bank();
    let sd_all = slowdown_of(outcome, "allbank");
    let sd_per = slowdown_of(outcome, "perbank");
    let within_1pct = (sd_all - sd_per).abs() / sd_per <= 0.01;

    // Stronger claim: the regulator-facing event streams are identical,
    // decision for decision, because all regulated traffic maps to one bank.
    let plan = load_plan("attack_2bank.suite");
    let trace_of = |name: &str| {
        let var = plan
            .variations
            .iter()
            .find(|v| v.name == name)
            .expect("variation exists");
        let scenario = plan.scenario_for(var).expect("scenario builds");
        run_traced(&scenario).expect("run succeeds").1
    };
    let trace_all = trace_of("allbank");
    let trace_per = trace_of("perbank");
    let traces_equal = trace_all == trace_per;
    criterion(
        3,
        within_1pct && traces_equal,
        &format!(
            "aggregate-budget slowdown {sd_all:.4} vs per-bank {sd_per:.4} (within 1%: \
             {within_1pct}); traces identical over {} events: {traces_equal}",
            trace_all.len()
        ),
    );
}

#[test]
fn criterion_04_per_bank_budget_scales_throughput_with_bank_count() {
    let two = run_plan("policy_compare_2bank.suite");
    let four = run_plan("policy_compare_4bank.suite");
    let ratio_of = |outcome: &SuiteOutcome| {
        variation(outcome, "allbank").result.cycles_elapsed as f64
            / variation(outcome, "perbank").result.cycles_elapsed as f64
    };
    let r2 = ratio_of(&two);
    let r4 = ratio_of(&four);
    criterion(
        4,
        (r2 - 2.0).abs() <= 0.2 && (r4 - 4.0).abs() <= 0.4,
        &format!(
            "even-spread sweep finishes {r2:.4}x faster per-bank than aggregate with 2 banks \
             (need 2.0 +/- 10%) and {r4:.4}x with 4 banks (need 4.0 +/- 10%)"
        ),
    );
}

#[test]
fn criterion_05_budget_to_bandwidth_conversion_is_exact() {
    let low = bandwidth_of(16, 400, 16, 1_000_000_000).expect("valid parameters");
    let high = bandwidth_of(384, 400, 16, 1_000_000_000).expect("valid parameters");
    criterion(
        5,
        low == 640_000_000 && high == 15_360_000_000,
        &format!(
            "bandwidth_of(16, 400, 16 B, 1 GHz) = {low} B/s (need 640000000), \
             bandwidth_of(384, ...) = {high} B/s (need 15360000000)"
        ),
    );
}

#[test]
fn criterion_06_production_regulator_matches_reference_model_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0acce55);
    let num_configs = 120;
    let cycles_per_config = 1_000u64;
    let mut total_cycles = 0u64;

    for config_idx in 0..num_configs {
        let num_cores = rng.gen_range(1..=4usize);
        let num_banks = [1usize, 2, 4][rng.gen_range(0..3)];
        let num_domains = rng.gen_range(1..=2usize);
        let rpr = rng.gen_range(1..=16u64);
        let budgets: Vec<u64> = (0..num_domains).map(|_| rng.gen_range(0..=8u64)).collect();
        let domain_of: Vec<usize> = (0..num_cores)
            .map(|_| rng.gen_range(0..num_domains))
            .collect();
        let enabled: Vec<bool> = (0..num_cores).map(|_| rng.gen_bool(0.8)).collect();

        let mut prod = Regulator::new(
            RegulatorConfig {
                policy: RegulationPolicy::PerBank,
                regulation_period: rpr,
                num_domains,
                num_cores,
                num_banks,
                access_budget: budgets.clone(),
                transaction_size: 16,
                clock_frequency: 1_000_000_000,
            },
            domain_of.clone(),
            enabled.clone(),
        )
        .expect("fuzzed configuration is valid");
        let mut oracle = ReferenceRegulator::new(
            num_cores,
            num_banks,
            num_domains,
            rpr,
            budgets,
            domain_of,
            enabled,
        );

        for _ in 0..cycles_per_config {
            let access_set: Vec<Option<usize>> = (0..num_cores)
                .map(|_| rng.gen_bool(0.75).then(|| rng.gen_range(0..num_banks)))
                .collect();

            prod.tick();
            let mut prod_stalls = Vec::new();
            for (core, slot) in access_set.iter().enumerate() {
                if let Some(bank) = *slot {
                    if prod.may_issue(core, bank) {
                        prod.record_access(core, bank);
                    } else {
                        prod_stalls.push((core, bank));
                    }
                }
            }
            let oracle_stalls = oracle.reference_step(&access_set);
            total_cycles += 1;

            let aggregate_consistent = (0..num_domains).all(|d| {
                prod.state.allbank_counters[d] == prod.state.bank_counters[d].iter().sum::<u64>()
            });
            if prod_stalls != oracle_stalls
                || prod.state.bank_counters != oracle.bank_counters
                || prod.state.period_counter != oracle.period_counter
                || !aggregate_consistent
            {
                criterion(
                    6,
                    false,
                    &format!("divergence in fuzz config {config_idx} after {total_cycles} cycles"),
                );
                return;
            }
        }
    }
    criterion(
        6,
        total_cycles >= 100_000 && num_configs >= 100,
        &format!(
            "{num_configs} random configurations, {total_cycles} fuzzed cycles: stall decisions, \
             bank counters, and period counters all exact"
        ),
    );
}

#[test]
fn criterion_07_no_completed_period_ever_exceeds_its_budget() {
    let suites = [
        "attack_2bank.suite",
        "budget_sweep.suite",
        "policy_compare_2bank.suite",
        "policy_compare_4bank.suite",
    ];
    let mut runs = 0usize;
    let mut events = 0usize;
    for file in suites {
        let plan = load_plan(file);
        for var in &plan.variations {
            let scenario = plan.scenario_for(var).expect("scenario builds");
            let (_, trace) = run_traced(&scenario).expect("run succeeds");
            audit_budget(&trace, &scenario)
                .unwrap_or_else(|e| panic!("{file}/{}: budget audit: {e}", var.name));
            replay_against_reference(&trace, &scenario)
                .unwrap_or_else(|e| panic!("{file}/{}: replay audit: {e}", var.name));
            runs += 1;
            events += trace.len();
        }
    }
    criterion(
        7,
        true,
        &format!(
            "{runs} runs, {events} regulator events audited: no domain or (domain, bank) \
             counter exceeded its budget in any completed period; per-bank decisions replay \
             exactly against the reference model"
        ),
    );
}

#[test]
fn criterion_08_monitor_counters_conserve_and_localize_traffic() {
    // Conservation on every run of two suites with very different traffic.
    let mut conserved = true;
    for outcome in [attack_2bank(), profile_workloads()] {
        for var in &outcome.variations {
            for (core, stats) in var.result.per_core.iter().enumerate() {
                let monitored: u64 = var.result.per_bank_access[core].iter().sum();
                conserved &= monitored == stats.admitted;
            }
        }
    }

    // Pointer-chase traffic pinned to bank 0 stays entirely on bank 0.
    let profile = variation(profile_workloads(), "base");
    let chase = &profile.result.per_bank_access[0];
    let confined = chase[0] > 0 && chase[1..].iter().all(|&c| c == 0);

    // A line-stride sweep lands on every bank within +/- 1 access.
    let sweep = &profile.result.per_bank_access[1];
    let spread = sweep.iter().max().unwrap() - sweep.iter().min().unwrap();
    criterion(
        8,
        conserved && confined && spread <= 1,
        &format!(
            "monitor sums equal admissions on every run: {conserved}; pointer-chase bank \
             counts {chase:?} confined to bank 0: {confined}; stride-sweep counts {sweep:?} \
             spread {spread} (need <= 1)"
        ),
    );
}

#[test]
fn criterion_09_long_period_admits_harmful_bursts_at_equal_rate() {
    let outcome = attack_2bank();
    let fine = slowdown_of(outcome, "allbank");
    let coarse = slowdown_of(outcome, "coarse_allbank");
    criterion(
        9,
        coarse > fine,
        &format!(
            "victim slowdown {coarse:.4} under budget 40000/1000000 cycles vs {fine:.4} under \
             the rate-equivalent 16/400 (need strictly greater)"
        ),
    );
}

#[test]
fn criterion_10_identical_seed_reruns_are_byte_identical() {
    let csv_of = || suite_csv(&run_plan("profile_workloads.suite"), false);
    let first = csv_of();
    let second = csv_of();
    let csv_equal = first == second;

    let scn_path = scenarios_dir().join("victim_solo.scn");
    let text = std::fs::read_to_string(&scn_path).expect("read scenario");
    let scenario = parse_scenario(&text).expect("parse scenario");
    let results_equal = run(&scenario).expect("run") == run(&scenario).expect("run");
    criterion(
        10,
        csv_equal && results_equal,
        &format!(
            "suite re-run produced byte-identical CSV ({} bytes): {csv_equal}; scenario re-run \
             produced identical results: {results_equal}",
            first.len()
        ),
    );
}
