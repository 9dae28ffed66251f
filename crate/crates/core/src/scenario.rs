//! Text format for experiment descriptions.
//!
//! A scenario file is INI-like: `[section]` headers, `key = value` pairs,
//! `#` comments, blank lines. Sections are `[llc]`, `[bank_map]`,
//! `[regulator]`, `[domain.<d>]`, `[core.<c>]`, and `[run]`; every key has
//! a default, so the empty file is a valid single-core scenario.
//!
//! Integer values accept `_` separators, a `0x` prefix, and `K`/`M`/`G`
//! suffixes. Byte-sized keys (working sets, strides, line and transaction
//! sizes, region bounds) use 1024-based suffixes; counts, cycles, and
//! frequencies use 1000-based ones. Errors cite the offending line and key.
//!
//! [`canonical_text`] renders a scenario back to this format with every
//! default materialized, in a fixed order; [`config_hash`] digests that
//! text so result rows can be traced to an exact configuration.

use crate::addr::{AddrRange, BankId, BankMapConfig, PartitionConfig};
use crate::bank::LlcConfig;
use crate::engine::{CoreSetup, Scenario};
use crate::regulator::{RegulationPolicy, RegulatorConfig};
use crate::workload::{WorkloadKind, WorkloadSpec};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

fn err_at(line: usize, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Parse {
        line,
        message: message.into(),
    }
}

/// One `key = value` pair with its source line (0 for programmatic edits).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawEntry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// One `[section]` with its entries in declaration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawSection {
    pub name: String,
    pub line: usize,
    pub entries: Vec<RawEntry>,
}

/// A parsed-but-untyped document: section and key order preserved, no
/// interpretation of names or values yet. Experiment suites edit this
/// form before a scenario is built from it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawDoc {
    pub sections: Vec<RawSection>,
}

impl RawDoc {
    /// Tokenizes a document. Rejects malformed headers, pairs without `=`,
    /// keys outside any section, and duplicate sections or keys.
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut doc = RawDoc::default();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let content = match raw_line.split_once('#') {
                Some((before, _)) => before,
                None => raw_line,
            }
            .trim();
            if content.is_empty() {
                continue;
            }
            if let Some(inner) = content.strip_prefix('[') {
                let name = inner
                    .strip_suffix(']')
                    .ok_or_else(|| err_at(line, "section header is missing the closing `]`"))?
                    .trim();
                if name.is_empty() {
                    return Err(err_at(line, "empty section name"));
                }
                if let Some(prev) = doc.sections.iter().find(|s| s.name == name) {
                    return Err(err_at(
                        line,
                        format!("section [{name}] already defined at line {}", prev.line),
                    ));
                }
                doc.sections.push(RawSection {
                    name: name.to_string(),
                    line,
                    entries: Vec::new(),
                });
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err_at(line, format!("expected `key = value`, got `{content}`")))?;
            let (key, value) = (key.trim().to_string(), value.trim().to_string());
            if key.is_empty() {
                return Err(err_at(line, "empty key"));
            }
            let section = doc
                .sections
                .last_mut()
                .ok_or_else(|| err_at(line, format!("key `{key}` appears before any [section]")))?;
            if let Some(prev) = section.entries.iter().find(|e| e.key == key) {
                return Err(err_at(
                    line,
                    format!(
                        "key `{key}` already set at line {} in section [{}]",
                        prev.line, section.name
                    ),
                ));
            }
            section.entries.push(RawEntry { key, value, line });
        }
        Ok(doc)
    }

    /// Sets `section.key = value`, replacing an existing entry or appending
    /// (creating the section if needed). Used to apply suite variations.
    pub fn set(&mut self, section: &str, key: &str, value: &str) {
        let sec = match self.sections.iter_mut().find(|s| s.name == section) {
            Some(sec) => sec,
            None => {
                self.sections.push(RawSection {
                    name: section.to_string(),
                    line: 0,
                    entries: Vec::new(),
                });
                self.sections.last_mut().unwrap()
            }
        };
        match sec.entries.iter_mut().find(|e| e.key == key) {
            Some(entry) => entry.value = value.to_string(),
            None => sec.entries.push(RawEntry {
                key: key.to_string(),
                value: value.to_string(),
                line: 0,
            }),
        }
    }
}

/// Suffix base for integer values: byte sizes use powers of 1024,
/// everything else powers of 1000.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Unit {
    Bytes,
    Count,
}

fn parse_int(text: &str, unit: Unit) -> Result<u64, String> {
    let cleaned: String = text.chars().filter(|c| *c != '_').collect();
    let cleaned = cleaned.trim();
    if cleaned.is_empty() {
        return Err("empty integer".into());
    }
    if let Some(hex) = cleaned
        .strip_prefix("0x")
        .or_else(|| cleaned.strip_prefix("0X"))
    {
        return u64::from_str_radix(hex, 16).map_err(|e| format!("bad hex integer `{text}`: {e}"));
    }
    let base: u64 = match unit {
        Unit::Bytes => 1024,
        Unit::Count => 1000,
    };
    let (digits, multiplier) = match cleaned.chars().last() {
        Some('k') | Some('K') => (&cleaned[..cleaned.len() - 1], base),
        Some('m') | Some('M') => (&cleaned[..cleaned.len() - 1], base * base),
        Some('g') | Some('G') => (&cleaned[..cleaned.len() - 1], base * base * base),
        _ => (cleaned, 1),
    };
    let value: u64 = digits
        .trim()
        .parse()
        .map_err(|e| format!("bad integer `{text}`: {e}"))?;
    value
        .checked_mul(multiplier)
        .ok_or_else(|| format!("integer `{text}` overflows"))
}

fn parse_bool(text: &str) -> Result<bool, String> {
    match text {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(format!("expected `true` or `false`, got `{other}`")),
    }
}

fn parse_policy(text: &str) -> Result<RegulationPolicy, String> {
    match text {
        "unregulated" => Ok(RegulationPolicy::Unregulated),
        "allbank" => Ok(RegulationPolicy::AllBank),
        "perbank" => Ok(RegulationPolicy::PerBank),
        other => Err(format!(
            "expected `unregulated`, `allbank`, or `perbank`, got `{other}`"
        )),
    }
}

fn parse_kind(text: &str) -> Result<WorkloadKind, String> {
    match text {
        "bkpll" => Ok(WorkloadKind::BkPll),
        "bandwidth" => Ok(WorkloadKind::Bandwidth),
        "mempress" => Ok(WorkloadKind::Mempress),
        other => Err(format!(
            "expected `bkpll`, `bandwidth`, or `mempress`, got `{other}`"
        )),
    }
}

/// `base..limit`, both ends byte-sized integers (hex welcome).
fn parse_region(text: &str) -> Result<AddrRange, String> {
    let (base, limit) = text
        .split_once("..")
        .ok_or_else(|| format!("expected `base..limit`, got `{text}`"))?;
    let base = parse_int(base, Unit::Bytes)?;
    let limit = parse_int(limit, Unit::Bytes)?;
    AddrRange::new(base, limit).map_err(|e| e.to_string())
}

fn parse_iterations(text: &str) -> Result<Option<u64>, String> {
    if text == "unbounded" {
        return Ok(None);
    }
    parse_int(text, Unit::Count).map(Some)
}

fn parse_bank(text: &str) -> Result<Option<BankId>, String> {
    if text == "any" {
        return Ok(None);
    }
    parse_int(text, Unit::Count).map(|b| Some(b as BankId))
}

/// Random-access view over a [`RawDoc`] that tracks which keys were read,
/// so leftovers can be reported as unknown.
struct Reader {
    entries: BTreeMap<(String, String), (String, usize)>,
}

impl Reader {
    fn new(doc: &RawDoc) -> Self {
        let mut entries = BTreeMap::new();
        for sec in &doc.sections {
            for e in &sec.entries {
                entries.insert((sec.name.clone(), e.key.clone()), (e.value.clone(), e.line));
            }
        }
        Self { entries }
    }

    fn take(&mut self, section: &str, key: &str) -> Option<(String, usize)> {
        self.entries.remove(&(section.to_string(), key.to_string()))
    }

    fn take_with<T>(
        &mut self,
        section: &str,
        key: &str,
        default: T,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<T, ScenarioError> {
        match self.take(section, key) {
            None => Ok(default),
            Some((value, line)) => parse(&value)
                .map_err(|msg| err_at(line, format!("value for `{section}.{key}`: {msg}"))),
        }
    }

    fn int(
        &mut self,
        section: &str,
        key: &str,
        default: u64,
        unit: Unit,
    ) -> Result<u64, ScenarioError> {
        self.take_with(section, key, default, |v| parse_int(v, unit))
    }

    fn finish(self) -> Result<(), ScenarioError> {
        if let Some(((section, key), (_, line))) = self.entries.into_iter().next() {
            return Err(err_at(
                line,
                format!("unknown key `{key}` in section [{section}]"),
            ));
        }
        Ok(())
    }
}

/// Splits `core.3` style section names; returns the index.
fn indexed_section(name: &str, prefix: &str) -> Option<Result<usize, String>> {
    let rest = name.strip_prefix(prefix)?.strip_prefix('.')?;
    Some(
        rest.parse::<usize>()
            .map_err(|_| format!("bad index `{rest}` in section [{name}]")),
    )
}

/// Builds a runnable [`Scenario`] from a raw document, materializing
/// defaults and validating the result.
pub fn build_scenario(doc: &RawDoc) -> Result<Scenario, ScenarioError> {
    // classify sections up front so typos in section names are caught even
    // when the section is empty
    let mut core_ids: Vec<(usize, usize)> = Vec::new(); // (index, line)
    let mut domain_ids: Vec<(usize, usize)> = Vec::new();
    for sec in &doc.sections {
        match sec.name.as_str() {
            "llc" | "bank_map" | "regulator" | "run" => {}
            name => {
                if let Some(idx) = indexed_section(name, "core") {
                    core_ids.push((idx.map_err(|m| err_at(sec.line, m))?, sec.line));
                } else if let Some(idx) = indexed_section(name, "domain") {
                    domain_ids.push((idx.map_err(|m| err_at(sec.line, m))?, sec.line));
                } else {
                    return Err(err_at(sec.line, format!("unknown section [{name}]")));
                }
            }
        }
    }
    core_ids.sort_unstable();
    for (expected, (idx, line)) in core_ids.iter().enumerate() {
        if *idx != expected {
            return Err(err_at(
                *line,
                format!("core sections must be numbered contiguously from 0; found [core.{idx}] without [core.{expected}]"),
            ));
        }
    }
    let num_cores = core_ids.len().max(1); // no [core.*] sections: one default core

    let mut r = Reader::new(doc);

    let llc = LlcConfig {
        num_banks: r.int("llc", "banks", 2, Unit::Count)? as usize,
        bank_service_cycles: r.int("llc", "bank_service_cycles", 4, Unit::Count)?,
        hit_latency: r.int("llc", "hit_latency", 20, Unit::Count)?,
        queue_depth: r.int("llc", "queue_depth", 8, Unit::Count)? as usize,
        write_service_cycles: r.take_with("llc", "write_service_cycles", None, |v| {
            if v == "none" {
                Ok(None)
            } else {
                parse_int(v, Unit::Count).map(Some)
            }
        })?,
    };

    let start_bit = r.int("bank_map", "start_bit", 6, Unit::Count)? as u32;
    let line_size = r.int("bank_map", "line_size", 64, Unit::Bytes)?;
    let bank_map = BankMapConfig::new(start_bit, llc.num_banks, line_size)
        .map_err(|e| ScenarioError::Invalid(e.to_string()))?;

    let policy = r.take_with(
        "regulator",
        "policy",
        RegulationPolicy::Unregulated,
        parse_policy,
    )?;
    let regulation_period = r.int("regulator", "period", 400, Unit::Count)?;
    let transaction_size = r.int("regulator", "transaction_size", 16, Unit::Bytes)?;
    let clock_frequency = r.int("regulator", "clock", 1_000_000_000, Unit::Count)?;

    let split = PartitionConfig::default_split();
    let mut cores = Vec::with_capacity(num_cores);
    for c in 0..num_cores {
        let sec = format!("core.{c}");
        let domain = r.int(&sec, "domain", 0, Unit::Count)? as usize;
        let regulated = r.take_with(&sec, "regulated", true, parse_bool)?;
        let kind = r.take_with(&sec, "workload", WorkloadKind::Bandwidth, parse_kind)?;
        let default_window = match kind {
            WorkloadKind::BkPll => 8,
            WorkloadKind::Bandwidth | WorkloadKind::Mempress => 16,
        };
        let max_outstanding = r.int(&sec, "max_outstanding", default_window, Unit::Count)? as usize;
        let default_region = if domain == 0 {
            split.victim_region
        } else {
            split.best_effort_region
        };
        let region = r.take_with(&sec, "region", default_region, parse_region)?;
        let workload = WorkloadSpec {
            kind,
            wss: r.int(&sec, "wss", 256 * 1024, Unit::Bytes)?,
            target_bank: r.take_with(&sec, "bank", None, parse_bank)?,
            is_write: r.take_with(&sec, "write", false, parse_bool)?,
            mlp: r.int(&sec, "mlp", 8, Unit::Count)? as usize,
            stride: r.int(&sec, "stride", 64, Unit::Bytes)?,
            total_iterations: r.take_with(&sec, "iterations", Some(4096), parse_iterations)?,
        };
        cores.push(CoreSetup {
            domain,
            regulated,
            max_outstanding,
            workload,
            region,
        });
    }

    let num_domains = cores
        .iter()
        .map(|c| c.domain)
        .chain(domain_ids.iter().map(|(d, _)| *d))
        .max()
        .unwrap_or(0)
        + 1;
    let mut access_budget = vec![384u64; num_domains];
    for (d, _) in &domain_ids {
        access_budget[*d] = r.int(&format!("domain.{d}"), "budget", 384, Unit::Count)?;
    }

    let regulator = RegulatorConfig {
        policy,
        regulation_period,
        num_domains,
        num_cores,
        num_banks: llc.num_banks,
        access_budget,
        transaction_size,
        clock_frequency,
    };

    let scenario = Scenario {
        llc,
        bank_map,
        regulator,
        cores,
        measured_core: r.int("run", "measured_core", 0, Unit::Count)? as usize,
        max_cycles: r.int("run", "max_cycles", 10_000_000, Unit::Count)?,
        seed: r.int("run", "seed", 1, Unit::Count)?,
    };
    r.finish()?;
    scenario
        .validate()
        .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
    Ok(scenario)
}

/// Parses scenario text into a validated [`Scenario`].
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    build_scenario(&RawDoc::parse(text)?)
}

/// Renders a scenario in the file format with every default materialized,
/// sections and keys in a fixed order. Re-parsing the output reproduces
/// the scenario exactly; [`config_hash`] digests this text.
pub fn canonical_text(s: &Scenario) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "[llc]");
    let _ = writeln!(out, "bank_service_cycles = {}", s.llc.bank_service_cycles);
    let _ = writeln!(out, "banks = {}", s.llc.num_banks);
    let _ = writeln!(out, "hit_latency = {}", s.llc.hit_latency);
    let _ = writeln!(out, "queue_depth = {}", s.llc.queue_depth);
    match s.llc.write_service_cycles {
        Some(w) => {
            let _ = writeln!(out, "write_service_cycles = {w}");
        }
        None => {
            let _ = writeln!(out, "write_service_cycles = none");
        }
    }
    let _ = writeln!(out, "\n[bank_map]");
    let _ = writeln!(out, "line_size = {}", s.bank_map.line_size);
    let _ = writeln!(out, "start_bit = {}", s.bank_map.start_bit);
    let _ = writeln!(out, "\n[regulator]");
    let _ = writeln!(out, "clock = {}", s.regulator.clock_frequency);
    let _ = writeln!(out, "period = {}", s.regulator.regulation_period);
    let policy = match s.regulator.policy {
        RegulationPolicy::Unregulated => "unregulated",
        RegulationPolicy::AllBank => "allbank",
        RegulationPolicy::PerBank => "perbank",
    };
    let _ = writeln!(out, "policy = {policy}");
    let _ = writeln!(out, "transaction_size = {}", s.regulator.transaction_size);
    for (d, budget) in s.regulator.access_budget.iter().enumerate() {
        let _ = writeln!(out, "\n[domain.{d}]");
        let _ = writeln!(out, "budget = {budget}");
    }
    for (c, core) in s.cores.iter().enumerate() {
        let _ = writeln!(out, "\n[core.{c}]");
        match core.workload.target_bank {
            Some(b) => {
                let _ = writeln!(out, "bank = {b}");
            }
            None => {
                let _ = writeln!(out, "bank = any");
            }
        }
        let _ = writeln!(out, "domain = {}", core.domain);
        match core.workload.total_iterations {
            Some(n) => {
                let _ = writeln!(out, "iterations = {n}");
            }
            None => {
                let _ = writeln!(out, "iterations = unbounded");
            }
        }
        let _ = writeln!(out, "max_outstanding = {}", core.max_outstanding);
        let _ = writeln!(out, "mlp = {}", core.workload.mlp);
        let _ = writeln!(
            out,
            "region = 0x{:x}..0x{:x}",
            core.region.base, core.region.limit
        );
        let _ = writeln!(out, "regulated = {}", core.regulated);
        let _ = writeln!(out, "stride = {}", core.workload.stride);
        let kind = match core.workload.kind {
            WorkloadKind::BkPll => "bkpll",
            WorkloadKind::Bandwidth => "bandwidth",
            WorkloadKind::Mempress => "mempress",
        };
        let _ = writeln!(out, "workload = {kind}");
        let _ = writeln!(out, "write = {}", core.workload.is_write);
        let _ = writeln!(out, "wss = {}", core.workload.wss);
    }
    let _ = writeln!(out, "\n[run]");
    let _ = writeln!(out, "max_cycles = {}", s.max_cycles);
    let _ = writeln!(out, "measured_core = {}", s.measured_core);
    let _ = writeln!(out, "seed = {}", s.seed);
    out
}

/// First 16 hex digits of the SHA-256 of [`canonical_text`]; stamped onto
/// result rows so they can be traced to an exact configuration.
pub fn config_hash(s: &Scenario) -> String {
    let digest = Sha256::digest(canonical_text(s).as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}
