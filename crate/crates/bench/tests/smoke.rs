//! The benchmark scenarios must stay valid and terminating, or the
//! criterion results become meaningless.

use bankreg::{run, RegulationPolicy};
use bankreg_bench::contended_scenario;

#[test]
fn contended_scenario_runs_to_completion_under_every_policy() {
    for policy in [
        RegulationPolicy::Unregulated,
        RegulationPolicy::AllBank,
        RegulationPolicy::PerBank,
    ] {
        let scenario = contended_scenario(policy, 256);
        scenario
            .validate()
            .expect("benchmark scenario is well-formed");
        let result = run(&scenario).expect("benchmark scenario runs");
        assert!(
            result.measured_finished,
            "victim must finish under {policy:?}"
        );
        assert_eq!(result.per_core[0].completed, 256);
    }
}

#[test]
fn regulation_slows_the_aggressors_not_the_victim_quantum() {
    let unregulated = run(&contended_scenario(RegulationPolicy::Unregulated, 512)).unwrap();
    let perbank = run(&contended_scenario(RegulationPolicy::PerBank, 512)).unwrap();
    // same victim work either way
    assert_eq!(
        unregulated.per_core[0].completed,
        perbank.per_core[0].completed
    );
    // the regulated run must hold the aggressors back
    let aggressor_admissions =
        |r: &bankreg::SimResult| r.per_core[1].admitted + r.per_core[2].admitted;
    assert!(aggressor_admissions(&perbank) < aggressor_admissions(&unregulated));
    // and the victim must finish sooner for it
    assert!(perbank.cycles_elapsed < unregulated.cycles_elapsed);
}
