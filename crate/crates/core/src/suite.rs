//! Experiment suites: one base scenario plus named variations and checks.
//!
//! A suite file is the scenario format extended with three section kinds:
//!
//! * `[suite]` — `name`, and optionally `baseline = <variation>` naming the
//!   variation whose cycle count is the slowdown denominator.
//! * `[variation.<name>]` — overrides applied to the base scenario, keyed
//!   `section.key = value` (e.g. `regulator.policy = perbank`,
//!   `core.1.iterations = 0`). An empty variation runs the base as-is.
//! * `[check.<name>]` — an assertion over the results, selected by `kind`:
//!   `slowdown_max` / `slowdown_min` (vs. the baseline), `cycles_ratio`
//!   (between two variations), `monotone_cycles` (nonincreasing over a
//!   list), `confined` (a core hit exactly one bank), or `spread_within`
//!   (a core's per-bank counts differ by at most a tolerance).
//!
//! [`run_suite`] runs every variation (in parallel), audits each trace
//! against the budget and the reference model, and evaluates the checks.

use crate::audit::{audit_budget, replay_against_reference, AuditError};
use crate::engine::{run_traced, Scenario, SimError, SimResult};
use crate::scenario::{build_scenario, config_hash, RawDoc, ScenarioError};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error(transparent)]
    Parse(#[from] ScenarioError),
    #[error("line {line}: {message}")]
    Plan { line: usize, message: String },
    #[error("variation `{variation}`: {source}")]
    BadVariation {
        variation: String,
        source: ScenarioError,
    },
    #[error("variation `{variation}`: {source}")]
    Sim { variation: String, source: SimError },
    #[error("audit of variation `{variation}` failed: {source}")]
    Audit {
        variation: String,
        source: AuditError,
    },
}

fn plan_err(line: usize, message: impl Into<String>) -> SuiteError {
    SuiteError::Plan {
        line,
        message: message.into(),
    }
}

/// One named set of `section.key = value` overrides.
#[derive(Debug, Clone)]
pub struct Variation {
    pub name: String,
    pub overrides: Vec<(String, String, String)>,
}

#[derive(Debug, Clone)]
pub enum CheckKind {
    /// Slowdown of `variation` vs. the baseline is at most `max`.
    SlowdownMax { variation: String, max: f64 },
    /// Slowdown of `variation` vs. the baseline is at least `min`.
    SlowdownMin { variation: String, min: f64 },
    /// cycles(numerator) / cycles(denominator) lies in `[min, max]`.
    CyclesRatio {
        numerator: String,
        denominator: String,
        min: f64,
        max: f64,
    },
    /// Cycle counts are nonincreasing across the listed variations.
    MonotoneCycles { variations: Vec<String> },
    /// Every access of `core` in `variation` went to `bank`.
    Confined {
        variation: String,
        core: usize,
        bank: usize,
    },
    /// Max and min per-bank access counts of `core` differ by <= `tolerance`.
    SpreadWithin {
        variation: String,
        core: usize,
        tolerance: u64,
    },
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub kind: CheckKind,
}

/// A parsed suite: base scenario document, variations in declared order,
/// and checks.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub name: String,
    pub baseline: Option<String>,
    pub base: RawDoc,
    pub variations: Vec<Variation>,
    pub checks: Vec<Check>,
}

impl ExperimentPlan {
    pub fn variation_names(&self) -> Vec<&str> {
        self.variations.iter().map(|v| v.name.as_str()).collect()
    }

    /// The fully built scenario for one variation.
    pub fn scenario_for(&self, variation: &Variation) -> Result<Scenario, SuiteError> {
        let mut doc = self.base.clone();
        for (section, key, value) in &variation.overrides {
            doc.set(section, key, value);
        }
        build_scenario(&doc).map_err(|source| SuiteError::BadVariation {
            variation: variation.name.clone(),
            source,
        })
    }
}

fn require_variation(
    plan_variations: &[Variation],
    name: &str,
    line: usize,
    role: &str,
) -> Result<(), SuiteError> {
    if plan_variations.iter().any(|v| v.name == name) {
        Ok(())
    } else {
        Err(plan_err(
            line,
            format!("{role} names unknown variation `{name}`"),
        ))
    }
}

/// A check section before validation: name, header line, and its
/// `key = value` entries with their lines.
type RawCheck = (String, usize, Vec<(String, String, usize)>);

/// Parses a suite file. Scenario sections become the base document;
/// `[suite]`, `[variation.*]`, and `[check.*]` drive the plan.
pub fn parse_plan(text: &str) -> Result<ExperimentPlan, SuiteError> {
    let doc = RawDoc::parse(text)?;
    let mut base = RawDoc::default();
    let mut name = String::from("suite");
    let mut baseline: Option<(String, usize)> = None;
    let mut variations: Vec<Variation> = Vec::new();
    let mut raw_checks: Vec<RawCheck> = Vec::new();

    for sec in &doc.sections {
        if sec.name == "suite" {
            for e in &sec.entries {
                match e.key.as_str() {
                    "name" => name = e.value.clone(),
                    "baseline" => baseline = Some((e.value.clone(), e.line)),
                    other => {
                        return Err(plan_err(
                            e.line,
                            format!("unknown key `{other}` in section [suite]"),
                        ))
                    }
                }
            }
        } else if let Some(vname) = sec.name.strip_prefix("variation.") {
            let mut overrides = Vec::new();
            for e in &sec.entries {
                let (section, key) = e.key.rsplit_once('.').ok_or_else(|| {
                    plan_err(
                        e.line,
                        format!("override key `{}` must be `section.key`", e.key),
                    )
                })?;
                overrides.push((section.to_string(), key.to_string(), e.value.clone()));
            }
            variations.push(Variation {
                name: vname.to_string(),
                overrides,
            });
        } else if let Some(cname) = sec.name.strip_prefix("check.") {
            let entries = sec
                .entries
                .iter()
                .map(|e| (e.key.clone(), e.value.clone(), e.line))
                .collect();
            raw_checks.push((cname.to_string(), sec.line, entries));
        } else {
            base.sections.push(sec.clone());
        }
    }

    if variations.is_empty() {
        return Err(plan_err(0, "suite defines no [variation.*] sections"));
    }
    if let Some((b, line)) = &baseline {
        require_variation(&variations, b, *line, "baseline")?;
    }

    let mut checks = Vec::new();
    for (cname, sec_line, entries) in raw_checks {
        checks.push(parse_check(
            &cname,
            sec_line,
            entries,
            &variations,
            &baseline,
        )?);
    }

    Ok(ExperimentPlan {
        name,
        baseline: baseline.map(|(b, _)| b),
        base,
        variations,
        checks,
    })
}

fn parse_check(
    cname: &str,
    sec_line: usize,
    entries: Vec<(String, String, usize)>,
    variations: &[Variation],
    baseline: &Option<(String, usize)>,
) -> Result<Check, SuiteError> {
    let mut kind_value: Option<String> = None;
    let mut fields: Vec<(String, String, usize)> = Vec::new();
    for (key, value, line) in entries {
        if key == "kind" {
            kind_value = Some(value);
        } else {
            fields.push((key, value, line));
        }
    }
    let kind_value =
        kind_value.ok_or_else(|| plan_err(sec_line, format!("check `{cname}` has no `kind`")))?;

    let mut take = |key: &str| -> Result<(String, usize), SuiteError> {
        let pos = fields
            .iter()
            .position(|(k, _, _)| k == key)
            .ok_or_else(|| {
                plan_err(
                    sec_line,
                    format!("check `{cname}` ({kind_value}) needs key `{key}`"),
                )
            })?;
        let (_, value, line) = fields.remove(pos);
        Ok((value, line))
    };
    let parse_f64 = |value: &str, key: &str, line: usize| -> Result<f64, SuiteError> {
        value
            .parse::<f64>()
            .map_err(|e| plan_err(line, format!("value for `{key}`: {e}")))
    };
    let parse_usize = |value: &str, key: &str, line: usize| -> Result<usize, SuiteError> {
        value
            .parse::<usize>()
            .map_err(|e| plan_err(line, format!("value for `{key}`: {e}")))
    };

    let kind = match kind_value.as_str() {
        "slowdown_max" | "slowdown_min" => {
            if baseline.is_none() {
                return Err(plan_err(
                    sec_line,
                    format!("check `{cname}` needs a [suite] baseline for slowdowns"),
                ));
            }
            let (variation, vline) = take("variation")?;
            require_variation(variations, &variation, vline, "check")?;
            if kind_value == "slowdown_max" {
                let (max, line) = take("max")?;
                CheckKind::SlowdownMax {
                    variation,
                    max: parse_f64(&max, "max", line)?,
                }
            } else {
                let (min, line) = take("min")?;
                CheckKind::SlowdownMin {
                    variation,
                    min: parse_f64(&min, "min", line)?,
                }
            }
        }
        "cycles_ratio" => {
            let (numerator, nline) = take("numerator")?;
            let (denominator, dline) = take("denominator")?;
            require_variation(variations, &numerator, nline, "check")?;
            require_variation(variations, &denominator, dline, "check")?;
            let (min, minl) = take("min")?;
            let (max, maxl) = take("max")?;
            CheckKind::CyclesRatio {
                numerator,
                denominator,
                min: parse_f64(&min, "min", minl)?,
                max: parse_f64(&max, "max", maxl)?,
            }
        }
        "monotone_cycles" => {
            let (list, lline) = take("variations")?;
            let names: Vec<String> = list
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
            if names.len() < 2 {
                return Err(plan_err(
                    lline,
                    format!("check `{cname}` needs at least two variations"),
                ));
            }
            for n in &names {
                require_variation(variations, n, lline, "check")?;
            }
            CheckKind::MonotoneCycles { variations: names }
        }
        "confined" => {
            let (variation, vline) = take("variation")?;
            require_variation(variations, &variation, vline, "check")?;
            let (core, cline) = take("core")?;
            let (bank, bline) = take("bank")?;
            CheckKind::Confined {
                variation,
                core: parse_usize(&core, "core", cline)?,
                bank: parse_usize(&bank, "bank", bline)?,
            }
        }
        "spread_within" => {
            let (variation, vline) = take("variation")?;
            require_variation(variations, &variation, vline, "check")?;
            let (core, cline) = take("core")?;
            let (tolerance, tline) = take("tolerance")?;
            CheckKind::SpreadWithin {
                variation,
                core: parse_usize(&core, "core", cline)?,
                tolerance: tolerance
                    .parse::<u64>()
                    .map_err(|e| plan_err(tline, format!("value for `tolerance`: {e}")))?,
            }
        }
        other => {
            return Err(plan_err(
                sec_line,
                format!("check `{cname}` has unknown kind `{other}`"),
            ))
        }
    };
    if let Some((key, _, line)) = fields.into_iter().next() {
        return Err(plan_err(
            line,
            format!("unknown key `{key}` in check `{cname}`"),
        ));
    }
    Ok(Check {
        name: cname.to_string(),
        kind,
    })
}

/// Results of one variation run.
#[derive(Debug, Clone)]
pub struct VariationResult {
    pub name: String,
    pub scenario: Scenario,
    pub result: SimResult,
    /// Slowdown of the measured core vs. the baseline variation; None when
    /// the suite has no baseline or either run left the core unfinished.
    pub slowdown: Option<f64>,
    pub config_hash: String,
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub plan_name: String,
    pub baseline: Option<String>,
    pub variations: Vec<VariationResult>,
    pub checks: Vec<CheckResult>,
}

impl SuiteOutcome {
    pub fn all_checks_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn cycles_of(&self, variation: &str) -> u64 {
        self.variations
            .iter()
            .find(|v| v.name == variation)
            .map(|v| v.result.cycles_elapsed)
            .expect("check targets were validated at parse time")
    }

    fn slowdown_of(&self, variation: &str) -> Option<f64> {
        self.variations
            .iter()
            .find(|v| v.name == variation)
            .and_then(|v| v.slowdown)
    }
}

/// Runs every variation of a plan, audits each trace, computes slowdowns
/// against the baseline, and evaluates the checks. Variations run in
/// parallel; results keep the declared order.
pub fn run_suite(plan: &ExperimentPlan) -> Result<SuiteOutcome, SuiteError> {
    let runs: Vec<(String, Scenario, SimResult)> = plan
        .variations
        .par_iter()
        .map(|variation| {
            let scenario = plan.scenario_for(variation)?;
            let (result, trace) = run_traced(&scenario).map_err(|source| SuiteError::Sim {
                variation: variation.name.clone(),
                source,
            })?;
            audit_budget(&trace, &scenario).map_err(|source| SuiteError::Audit {
                variation: variation.name.clone(),
                source,
            })?;
            replay_against_reference(&trace, &scenario).map_err(|source| SuiteError::Audit {
                variation: variation.name.clone(),
                source,
            })?;
            Ok((variation.name.clone(), scenario, result))
        })
        .collect::<Result<_, SuiteError>>()?;

    let baseline_cycles: Option<(u64, bool)> = plan.baseline.as_ref().map(|b| {
        let run = runs
            .iter()
            .find(|(n, _, _)| n == b)
            .expect("baseline validated at parse");
        (run.2.cycles_elapsed, run.2.measured_finished)
    });

    let variations: Vec<VariationResult> = runs
        .into_iter()
        .map(|(name, scenario, result)| {
            let slowdown = match baseline_cycles {
                Some((base_cycles, true)) if result.measured_finished => {
                    Some(result.cycles_elapsed as f64 / base_cycles as f64)
                }
                _ => None,
            };
            let config_hash = config_hash(&scenario);
            VariationResult {
                name,
                scenario,
                result,
                slowdown,
                config_hash,
            }
        })
        .collect();

    let mut outcome = SuiteOutcome {
        plan_name: plan.name.clone(),
        baseline: plan.baseline.clone(),
        variations,
        checks: Vec::new(),
    };
    outcome.checks = plan
        .checks
        .iter()
        .map(|c| evaluate_check(c, &outcome))
        .collect();
    Ok(outcome)
}

fn evaluate_check(check: &Check, outcome: &SuiteOutcome) -> CheckResult {
    let (passed, detail) = match &check.kind {
        CheckKind::SlowdownMax { variation, max } => match outcome.slowdown_of(variation) {
            Some(sd) => (
                sd <= *max,
                format!("slowdown({variation}) = {sd:.4}, bound <= {max}"),
            ),
            None => (
                false,
                format!("slowdown({variation}) unavailable (unfinished run)"),
            ),
        },
        CheckKind::SlowdownMin { variation, min } => match outcome.slowdown_of(variation) {
            Some(sd) => (
                sd >= *min,
                format!("slowdown({variation}) = {sd:.4}, bound >= {min}"),
            ),
            None => (
                false,
                format!("slowdown({variation}) unavailable (unfinished run)"),
            ),
        },
        CheckKind::CyclesRatio {
            numerator,
            denominator,
            min,
            max,
        } => {
            let n = outcome.cycles_of(numerator) as f64;
            let d = outcome.cycles_of(denominator) as f64;
            let ratio = n / d;
            (
                ratio >= *min && ratio <= *max,
                format!(
                    "cycles({numerator})/cycles({denominator}) = {ratio:.4}, bounds [{min}, {max}]"
                ),
            )
        }
        CheckKind::MonotoneCycles { variations } => {
            let cycles: Vec<u64> = variations.iter().map(|v| outcome.cycles_of(v)).collect();
            let ok = cycles.windows(2).all(|w| w[1] <= w[0]);
            let listing: Vec<String> = variations
                .iter()
                .zip(&cycles)
                .map(|(v, c)| format!("{v}={c}"))
                .collect();
            (ok, format!("cycles nonincreasing: {}", listing.join(", ")))
        }
        CheckKind::Confined {
            variation,
            core,
            bank,
        } => {
            let v = outcome
                .variations
                .iter()
                .find(|v| v.name == *variation)
                .expect("validated at parse");
            let counts = &v.result.per_bank_access[*core];
            let total: u64 = counts.iter().sum();
            let elsewhere: u64 = counts
                .iter()
                .enumerate()
                .filter(|(b, _)| b != bank)
                .map(|(_, c)| *c)
                .sum();
            (
                total > 0 && elsewhere == 0,
                format!(
                    "core {core} in {variation}: {} of {total} accesses in bank {bank}",
                    counts[*bank]
                ),
            )
        }
        CheckKind::SpreadWithin {
            variation,
            core,
            tolerance,
        } => {
            let v = outcome
                .variations
                .iter()
                .find(|v| v.name == *variation)
                .expect("validated at parse");
            let counts = &v.result.per_bank_access[*core];
            let max = counts.iter().max().copied().unwrap_or(0);
            let min = counts.iter().min().copied().unwrap_or(0);
            (
                max - min <= *tolerance,
                format!(
                    "core {core} in {variation}: per-bank counts {counts:?}, spread {}",
                    max - min
                ),
            )
        }
    };
    CheckResult {
        name: check.name.clone(),
        passed,
        detail,
    }
}
