//! Result rendering: suite results as CSV, single runs and register files
//! as human-readable text.

use crate::engine::{Scenario, SimResult};
use crate::regulator::{bandwidth_of, format_bandwidth, RegulationPolicy, Regulator};
use crate::scenario::config_hash;
use crate::suite::SuiteOutcome;
use std::fmt::Write as _;
use std::time::{SystemTime, UNIX_EPOCH};

fn policy_name(policy: RegulationPolicy) -> &'static str {
    match policy {
        RegulationPolicy::Unregulated => "unregulated",
        RegulationPolicy::AllBank => "allbank",
        RegulationPolicy::PerBank => "perbank",
    }
}

/// Renders a suite outcome as CSV, one row per core per variation.
///
/// Fixed columns, then one `bank<i>` column per bank (sized by the widest
/// variation), then `slowdown` and `config_hash`. The slowdown cell is
/// filled only on the measured core's row: a ratio when both runs
/// finished, `unfinished` when the suite has a baseline but either run
/// timed out, blank otherwise. `with_timestamp` prepends a
/// `# generated <unix-seconds>` comment; suppress it when byte-identical
/// reruns matter.
pub fn suite_csv(outcome: &SuiteOutcome, with_timestamp: bool) -> String {
    let max_banks = outcome
        .variations
        .iter()
        .map(|v| v.scenario.llc.num_banks)
        .max()
        .unwrap_or(0);

    let mut header: Vec<String> = [
        "suite",
        "variation",
        "policy",
        "num_banks",
        "rpr",
        "abr_domain0",
        "abr_domain1",
        "core",
        "domain",
        "cycles",
        "completed",
        "stall_reg",
        "stall_struct",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((0..max_banks).map(|b| format!("bank{b}")));
    header.push("slowdown".into());
    header.push("config_hash".into());

    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(&header).expect("csv write to memory");

    for v in &outcome.variations {
        let s = &v.scenario;
        let banks = s.llc.num_banks;
        for (core, stats) in v.result.per_core.iter().enumerate() {
            let mut row: Vec<String> = vec![
                outcome.plan_name.clone(),
                v.name.clone(),
                policy_name(s.regulator.policy).to_string(),
                banks.to_string(),
                s.regulator.regulation_period.to_string(),
                s.regulator.access_budget[0].to_string(),
                s.regulator
                    .access_budget
                    .get(1)
                    .map(|b| b.to_string())
                    .unwrap_or_default(),
                core.to_string(),
                s.cores[core].domain.to_string(),
                v.result.cycles_elapsed.to_string(),
                stats.completed.to_string(),
                stats.stall_regulatory.to_string(),
                stats.stall_structural.to_string(),
            ];
            for b in 0..max_banks {
                row.push(if b < banks {
                    v.result.per_bank_access[core][b].to_string()
                } else {
                    String::new()
                });
            }
            row.push(if core == s.measured_core {
                match (v.slowdown, &outcome.baseline) {
                    (Some(sd), _) => format!("{sd:.6}"),
                    (None, Some(_)) => "unfinished".to_string(),
                    (None, None) => String::new(),
                }
            } else {
                String::new()
            });
            row.push(v.config_hash.clone());
            writer.write_record(&row).expect("csv write to memory");
        }
    }

    let body = String::from_utf8(writer.into_inner().expect("csv flush")).expect("csv is utf-8");
    if with_timestamp {
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        format!("# generated {now}\n{body}")
    } else {
        body
    }
}

/// Human-readable report for a single run: effective configuration with
/// per-domain bandwidth, then a per-core result table.
pub fn run_report(scenario: &Scenario, result: &SimResult) -> String {
    let mut out = String::new();
    let reg = &scenario.regulator;
    let _ = writeln!(
        out,
        "configuration {} | policy {} | {} banks | period {} cycles",
        config_hash(scenario),
        policy_name(reg.policy),
        scenario.llc.num_banks,
        reg.regulation_period,
    );
    for (d, &budget) in reg.access_budget.iter().enumerate() {
        let line = match bandwidth_of(
            budget,
            reg.regulation_period,
            reg.transaction_size,
            reg.clock_frequency,
        ) {
            Ok(bw) => format!(
                "domain {d}: budget {budget} accesses/period = {}",
                format_bandwidth(bw)
            ),
            Err(e) => format!("domain {d}: budget {budget} accesses/period ({e})"),
        };
        let _ = writeln!(out, "{line}");
    }
    let _ = writeln!(
        out,
        "ran {} cycles; measured core {} {}",
        result.cycles_elapsed,
        result.measured_core,
        if result.measured_finished {
            "finished"
        } else {
            "did not finish"
        },
    );
    let _ = writeln!(
        out,
        "{:>4} {:>6} {:>9} {:>9} {:>10} {:>12} {:>9} per-bank",
        "core", "domain", "admitted", "completed", "stall_reg", "stall_struct", "finished"
    );
    for (core, stats) in result.per_core.iter().enumerate() {
        let banks: Vec<String> = result.per_bank_access[core]
            .iter()
            .map(|c| c.to_string())
            .collect();
        let _ = writeln!(
            out,
            "{:>4} {:>6} {:>9} {:>9} {:>10} {:>12} {:>9} [{}]",
            core,
            scenario.cores[core].domain,
            stats.admitted,
            stats.completed,
            stats.stall_regulatory,
            stats.stall_structural,
            stats.finished,
            banks.join(", "),
        );
    }
    out
}

/// The regulator's register file for a scenario, as it stands before the
/// first cycle: offset, name, reset value, access mode.
pub fn register_report(scenario: &Scenario) -> String {
    let regulator = Regulator::new(
        scenario.regulator.clone(),
        scenario.cores.iter().map(|c| c.domain).collect(),
        scenario.cores.iter().map(|c| c.regulated).collect(),
    )
    .expect("scenario was validated");
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>6}  {:<14} {:>12}  access",
        "offset", "register", "value"
    );
    for (offset, name, value, access) in regulator.register_map() {
        let _ = writeln!(out, "0x{offset:04x}  {name:<14} {value:>12}  {access}");
    }
    out
}
