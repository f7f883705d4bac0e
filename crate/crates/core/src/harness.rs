//! Experiment configuration, orchestration and report emission.
//!
//! A configuration is a TOML document:
//!
//! ```toml
//! schema_version = 1
//!
//! [conference]          # or [task], exactly one
//! n_bobs = 3
//! rounds = 100000
//! rng_seed = 42
//!
//! [attack]              # optional
//! strategy = "intercept-resend"
//! basis = "z2"
//! link = 0
//!
//! [output]              # optional
//! dir = "out"
//! per_round_log = true
//! ```
//!
//! Running an experiment produces a [`RunReport`] whose JSON form depends only
//! on the configuration, never on thread count or scheduling.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{AttackSpec, EveBasis, Location, Strategy};
use crate::conferencing::{self, ConferenceConfig, ConferenceError, ConferenceReport, RoundRecord};
use crate::config::{self, ConfigError};
use crate::rng::ExecutionMode;
use crate::task::{self, ChiRound, LayerReport, TaskConfig, TaskError, SUBSYSTEM_DIMS};

pub const SCHEMA_VERSION: u32 = 1;

/// Process exit status for a secure verdict.
pub const EXIT_SECURE: i32 = 0;
/// Process exit status for usage, configuration or I/O errors.
pub const EXIT_USAGE: i32 = 1;
/// Process exit status when an eavesdropper was detected.
pub const EXIT_DETECTED: i32 = 2;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error at {0}")]
    Config(#[from] ConfigError),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error(transparent)]
    Conference(#[from] ConferenceError),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum StrategyKind {
    None,
    InterceptResend,
    Depolarize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum PathKind {
    Outbound,
    Return,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAttack {
    strategy: StrategyKind,
    basis: Option<EveBasis>,
    p: Option<f64>,
    link: Option<usize>,
    path: Option<PathKind>,
    targets: Option<Vec<usize>>,
    rate: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub per_round_log: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: Option<u32>,
    conference: Option<ConferenceConfig>,
    task: Option<TaskConfig>,
    attack: Option<RawAttack>,
    #[serde(default)]
    output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Conference(ConferenceConfig),
    Task(TaskConfig),
}

impl Protocol {
    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Conference(_) => "conference",
            Protocol::Task(_) => "task",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub protocol: Protocol,
    pub attack: Option<AttackSpec>,
    pub output: OutputConfig,
}

fn convert_attack(raw: RawAttack, protocol: &Protocol) -> Result<AttackSpec, ConfigError> {
    let strategy = match raw.strategy {
        StrategyKind::None => Strategy::None,
        StrategyKind::InterceptResend => Strategy::InterceptResend {
            basis: raw
                .basis
                .ok_or_else(|| ConfigError::new("basis", "required for intercept-resend"))?,
        },
        StrategyKind::Depolarize => {
            let p = raw
                .p
                .ok_or_else(|| ConfigError::new("p", "required for depolarize"))?;
            config::probability("p", p)?;
            Strategy::Depolarize { p }
        }
    };
    let rate = raw.rate.unwrap_or(1.0);
    config::probability("rate", rate)?;
    let spec = match protocol {
        Protocol::Conference(c) => {
            if raw.path.is_some() {
                return Err(ConfigError::new("path", "not valid for the conference protocol"));
            }
            if raw.targets.is_some() {
                return Err(ConfigError::new("targets", "not valid for the conference protocol"));
            }
            let link = raw.link.unwrap_or(0);
            let spec = AttackSpec {
                strategy,
                location: Location::Link(link),
                targets: Vec::new(),
                rate,
            };
            spec.validate_conference(c.n_bobs)
                .map_err(|e| ConfigError::new("link", e.to_string()))?;
            spec
        }
        Protocol::Task(_) => {
            if raw.link.is_some() {
                return Err(ConfigError::new("link", "not valid for the task protocol"));
            }
            let spec = AttackSpec {
                strategy,
                location: match raw.path.unwrap_or(PathKind::Outbound) {
                    PathKind::Outbound => Location::Outbound,
                    PathKind::Return => Location::Return,
                },
                targets: raw.targets.unwrap_or_else(|| vec![0, 1, 2, 3]),
                rate,
            };
            spec.validate_task(&SUBSYSTEM_DIMS)
                .map_err(|e| ConfigError::new("targets", e.to_string()))?;
            spec
        }
    };
    Ok(spec)
}

fn validate_protocol(protocol: &Protocol) -> Result<(), ConfigError> {
    match protocol {
        Protocol::Conference(c) => c.validate().map_err(|e| e.within("conference")),
        Protocol::Task(t) => t.validate().map_err(|e| e.within("task")),
    }
}

/// Parses and validates a TOML experiment document, filling defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let value: toml::Value =
        toml::from_str(text).map_err(|e| ConfigError::new("<document>", e.message().to_owned()))?;
    let raw: RawConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::new(path, e.into_inner().to_string())
    })?;

    let version = raw.schema_version.unwrap_or(SCHEMA_VERSION);
    if version != SCHEMA_VERSION {
        return Err(ConfigError::new(
            "schema_version",
            format!("unsupported version {version} (expected {SCHEMA_VERSION})"),
        ));
    }
    let protocol = match (raw.conference, raw.task) {
        (Some(c), None) => Protocol::Conference(c),
        (None, Some(t)) => Protocol::Task(t),
        (Some(_), Some(_)) => {
            return Err(ConfigError::new(
                "<document>",
                "exactly one of [conference] or [task] may be present",
            ))
        }
        (None, None) => {
            return Err(ConfigError::new(
                "<document>",
                "missing protocol section: [conference] or [task]",
            ))
        }
    };
    validate_protocol(&protocol)?;
    let attack = raw
        .attack
        .map(|a| convert_attack(a, &protocol).map_err(|e| e.within("attack")))
        .transpose()?;
    Ok(ExperimentConfig {
        protocol,
        attack,
        output: raw.output,
    })
}

macro_rules! presets {
    ($($name:literal),* $(,)?) => {
        /// Built-in experiment configurations, by name.
        pub const PRESETS: &[(&str, &str)] = &[
            $(($name, include_str!(concat!("../presets/", $name, ".toml")))),*
        ];
    };
}

presets!(
    "conference-honest",
    "conference-eve-z",
    "conference-eve-x",
    "conference-eve-half",
    "task-honest",
    "task-eve-all",
    "task-eve-qubit",
);

pub fn preset(name: &str) -> Result<ExperimentConfig, HarnessError> {
    let text = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| HarnessError::UnknownPreset(name.to_owned()))?;
    Ok(parse_config(text)?)
}

impl ExperimentConfig {
    /// Applies command-line overrides and re-validates.
    pub fn with_overrides(mut self, seed: Option<u64>, rounds: Option<usize>) -> Result<Self, ConfigError> {
        match &mut self.protocol {
            Protocol::Conference(c) => {
                c.rng_seed = seed.unwrap_or(c.rng_seed);
                c.rounds = rounds.unwrap_or(c.rounds);
            }
            Protocol::Task(t) => {
                t.rng_seed = seed.unwrap_or(t.rng_seed);
                t.rounds = rounds.unwrap_or(t.rounds);
            }
        }
        validate_protocol(&self.protocol)?;
        Ok(self)
    }
}

/// Security verdict with the statistic it rests on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verdict {
    pub secure: bool,
    /// CHSH estimate (conference) or Π_χ failure rate (task).
    pub statistic: f64,
    pub stderr: f64,
    pub threshold: f64,
    /// Distance from the threshold on the secure side; negative when insecure.
    pub margin: f64,
}

impl Verdict {
    pub fn exit_code(&self) -> i32 {
        if self.secure {
            EXIT_SECURE
        } else {
            EXIT_DETECTED
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "protocol", rename_all = "lowercase")]
pub enum ProtocolReport {
    Conference {
        config: ConferenceConfig,
        report: ConferenceReport,
    },
    Task {
        config: TaskConfig,
        report: LayerReport,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub verdict: Verdict,
    pub attack: Option<AttackSpec>,
    #[serde(flatten)]
    pub result: ProtocolReport,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RoundLog {
    Conference(Vec<RoundRecord>),
    Task(Vec<ChiRound>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub report: RunReport,
    pub rounds: RoundLog,
}

impl RunReport {
    /// Pretty JSON; byte-identical for identical configurations.
    pub fn to_json(&self) -> Result<String, serde_json::Error> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        let v = &self.verdict;
        match &self.result {
            ProtocolReport::Conference { config, report } => {
                let _ = writeln!(out, "conference protocol: N = {} Bobs, {} rounds, seed {}",
                    config.n_bobs, config.rounds, config.rng_seed);
                let _ = writeln!(out, "  S = <X1X2> + <Z1Z2> = {:.6} +/- {:.6}  (threshold {:.6}, margin {:+.6})",
                    report.s_estimate, report.s_stderr, report.chsh_threshold, report.margin);
                let _ = writeln!(out, "  <X1X2> = {:.6}, <Z1Z2> = {:.6}",
                    report.x_correlator.mean, report.z_correlator.mean);
                let _ = writeln!(out, "  rounds: {} test, {} key, {} discarded",
                    report.test_round_count, report.key_round_count, report.discard_count);
                let _ = writeln!(out, "  key: {} bits per party, agreement {:.6}, {} bit(s) per key round",
                    report.alice_key.len(), report.key_agreement_fraction, report.sifted_key_rate);
                if let Some(info) = report.eve_information {
                    let _ = writeln!(out, "  eve key-bit accuracy: {info:.6}");
                }
            }
            ProtocolReport::Task { config, report } => {
                let _ = writeln!(out, "task protocol: {} rounds, seed {}", config.rounds, config.rng_seed);
                let _ = writeln!(out, "  Pi_chi fail rate = {:.6} +/- {:.6} over {} check rounds (alarm above {})",
                    report.pi_chi_fail_rate, report.pi_chi_stderr, report.check_round_count,
                    report.pi_chi_alarm_threshold);
                let _ = writeln!(out, "  layer 1: {} rounds, {} key bits, {} secret bits, {} violations",
                    report.layer1_round_count, report.layer1_key_bits.len(),
                    report.layer1_secret_bits.len(), report.layer1_key_violations);
                let _ = writeln!(out, "  layer 2: {} rounds, {} key bits, {} error events",
                    report.layer2_round_count, report.layer2_key_bits.len(), report.layer2_error_events);
                let _ = writeln!(out, "  co-sifted: {} rounds, {} violations",
                    report.cosifted_round_count, report.cosifted_violations);
                if let Some(c) = &report.confidentiality {
                    let _ = writeln!(out, "  MI(b3; s1) = {:.6} bits, MI(b1; k) = {:.6} bits",
                        c.mi_b3_vs_s1, c.mi_b1_vs_k);
                }
            }
        }
        let _ = writeln!(out, "verdict: {}", if v.secure { "SECURE" } else { "EAVESDROPPER DETECTED" });
        out
    }
}

/// Runs every round, sifts, and analyzes.
pub fn run_experiment(cfg: &ExperimentConfig, mode: ExecutionMode) -> Result<ExperimentOutcome, HarnessError> {
    let attack = cfg.attack.as_ref();
    let (verdict, result, rounds) = match &cfg.protocol {
        Protocol::Conference(c) => {
            let run = conferencing::run_conference(c, attack, mode)?;
            let r = &run.report;
            let verdict = Verdict {
                secure: conferencing::detect(r, c),
                statistic: r.s_estimate,
                stderr: r.s_stderr,
                threshold: r.chsh_threshold,
                margin: r.margin,
            };
            let result = ProtocolReport::Conference {
                config: c.clone(),
                report: run.report,
            };
            (verdict, result, RoundLog::Conference(run.records))
        }
        Protocol::Task(t) => {
            let run = task::run_task(t, attack, mode)?;
            let r = &run.report;
            let verdict = Verdict {
                secure: !r.eve_detected,
                statistic: r.pi_chi_fail_rate,
                stderr: r.pi_chi_stderr,
                threshold: r.pi_chi_alarm_threshold,
                margin: r.pi_chi_alarm_threshold - r.pi_chi_fail_rate,
            };
            let result = ProtocolReport::Task {
                config: t.clone(),
                report: run.report,
            };
            (verdict, result, RoundLog::Task(run.records))
        }
    };
    Ok(ExperimentOutcome {
        report: RunReport {
            schema_version: SCHEMA_VERSION,
            verdict,
            attack: cfg.attack.clone(),
            result,
        },
        rounds,
    })
}

fn sign_char(o: Option<i8>) -> char {
    match o {
        Some(v) if v > 0 => '+',
        Some(_) => '-',
        None => '.',
    }
}

#[derive(Serialize)]
struct ConferenceRow {
    round_id: u64,
    alice_pair: &'static str,
    alice_first: i8,
    bob_actions: String,
    bob_outcomes: String,
    alice_final: i8,
    sift: &'static str,
    eve_site: Option<usize>,
    eve_outcome: Option<f64>,
}

#[derive(Serialize)]
struct TaskRow {
    round_id: u64,
    class: &'static str,
    symbols: String,
    bob_actions: String,
    bob_outcomes: String,
    alice_measurement: &'static str,
    alice_outcomes: String,
    pi_chi_pass: Option<bool>,
    sift: &'static str,
    eve_sites: String,
}

fn digits<I: IntoIterator<Item = Option<u8>>>(it: I) -> String {
    it.into_iter()
        .map(|d| d.map_or('.', |d| char::from(b'0' + d)))
        .collect()
}

/// Writes the per-round log as CSV, ordered by round id.
pub fn write_round_log<W: io::Write>(rounds: &RoundLog, w: W) -> Result<(), HarnessError> {
    let mut out = csv::Writer::from_writer(w);
    match rounds {
        RoundLog::Conference(records) => {
            for r in records {
                out.serialize(ConferenceRow {
                    round_id: r.round_id,
                    alice_pair: match r.alice_pair {
                        conferencing::PairChoice::XPair => "X",
                        conferencing::PairChoice::ZPair => "Z",
                    },
                    alice_first: r.alice_first_outcome,
                    bob_actions: r
                        .bob_actions
                        .iter()
                        .map(|a| match a {
                            conferencing::BobAction::Measure => 'M',
                            conferencing::BobAction::Forward => 'F',
                        })
                        .collect(),
                    bob_outcomes: r.bob_outcomes.iter().map(|&o| sign_char(o)).collect(),
                    alice_final: r.alice_final_outcome,
                    sift: match conferencing::classify_round(r) {
                        conferencing::SiftClass::TestRound => "test",
                        conferencing::SiftClass::KeyRound => "key",
                        conferencing::SiftClass::Discard => "discard",
                    },
                    eve_site: r.attack_applied.map(|e| e.site),
                    eve_outcome: r.attack_applied.and_then(|e| e.eve_outcome),
                })?;
            }
        }
        RoundLog::Task(records) => {
            for r in records {
                let symbols = r.encoded.or(r.check_indices).map(|s| s.map(Some));
                let l1 = task::is_layer_key_round(r, task::LAYER1);
                let l2 = task::is_layer_key_round(r, task::LAYER2);
                out.serialize(TaskRow {
                    round_id: r.round_id,
                    class: match r.round_class {
                        task::RoundClass::KeyClass => "key",
                        task::RoundClass::CheckClass => "check",
                    },
                    symbols: symbols.map(digits).unwrap_or_default(),
                    bob_actions: r
                        .bob_actions
                        .iter()
                        .map(|a| match a {
                            task::BobOp::Ctrl => 'C',
                            task::BobOp::Reflect => 'R',
                        })
                        .collect(),
                    bob_outcomes: digits(r.bob_outcomes),
                    alice_measurement: match r.alice_measurement {
                        task::AliceMeasurement::Computational => "computational",
                        task::AliceMeasurement::PiChi => "pi-chi",
                    },
                    alice_outcomes: r.alice_outcomes.map(|a| digits(a.map(Some))).unwrap_or_default(),
                    pi_chi_pass: r.pi_chi_pass,
                    sift: match (l1, l2, task::is_check_round(r)) {
                        (_, _, true) => "check",
                        (true, true, _) => "layer1+layer2",
                        (true, false, _) => "layer1",
                        (false, true, _) => "layer2",
                        _ => "discard",
                    },
                    eve_sites: r
                        .attack_applied
                        .iter()
                        .map(|e| e.site.to_string())
                        .collect::<Vec<_>>()
                        .join(" "),
                })?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub const SUMMARY_JSON: &str = "summary.json";
pub const SUMMARY_TEXT: &str = "summary.txt";
pub const ROUND_LOG: &str = "rounds.csv";

/// Writes `summary.json`, `summary.txt` and, if requested, `rounds.csv` into `dir`.
pub fn write_outputs(outcome: &ExperimentOutcome, dir: &Path, per_round_log: bool) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(SUMMARY_JSON), outcome.report.to_json()?)?;
    fs::write(dir.join(SUMMARY_TEXT), outcome.report.summary_text())?;
    if per_round_log {
        let file = fs::File::create(dir.join(ROUND_LOG))?;
        write_round_log(&outcome.rounds, io::BufWriter::new(file))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_conference_config_gets_defaults() {
        let cfg = parse_config("[conference]\nn_bobs = 3\nrounds = 100000\nrng_seed = 42\n").unwrap();
        let Protocol::Conference(c) = cfg.protocol else {
            panic!("expected conference");
        };
        assert_eq!(c.alice_z_prob, 0.5);
        assert_eq!(c.bob_measure_prob, 0.5);
        assert_eq!(c.chsh_threshold, std::f64::consts::SQRT_2);
        assert_eq!((c.n_bobs, c.rounds, c.rng_seed), (3, 100_000, 42));
        assert!(cfg.attack.is_none());
    }

    #[test]
    fn probability_out_of_range_is_rejected() {
        let err = parse_config("[conference]\nn_bobs = 3\nrounds = 10\nrng_seed = 1\nbob_measure_prob = 1.5\n")
            .unwrap_err();
        assert_eq!(err.path, "conference.bob_measure_prob");
    }

    #[test]
    fn both_protocols_is_rejected() {
        let err = parse_config("[conference]\nn_bobs = 1\nrounds = 1\nrng_seed = 1\n[task]\nrounds = 1\nrng_seed = 1\n")
            .unwrap_err();
        assert!(err.message.contains("exactly one"));
        assert!(parse_config("schema_version = 1\n").is_err());
    }

    #[test]
    fn unknown_keys_report_their_path() {
        let err = parse_config("[conference]\nn_bobs = 1\nrounds = 1\nrng_seed = 1\nbogus = 2\n").unwrap_err();
        assert_eq!(err.path, "conference.bogus");
        assert!(err.message.contains("bogus"));
        let err = parse_config("[task]\nrounds = 1\nrng_seed = 1\n[output]\nformat = \"xml\"\n").unwrap_err();
        assert_eq!(err.path, "output.format");
    }

    #[test]
    fn attack_sections_are_checked() {
        let base = "[conference]\nn_bobs = 2\nrounds = 10\nrng_seed = 1\n";
        let ok = parse_config(&format!("{base}[attack]\nstrategy = \"intercept-resend\"\nbasis = \"x2\"\nlink = 2\n"))
            .unwrap();
        assert_eq!(ok.attack, Some(AttackSpec::intercept_link(EveBasis::X2, 2)));
        let err = parse_config(&format!("{base}[attack]\nstrategy = \"intercept-resend\"\nlink = 0\n")).unwrap_err();
        assert_eq!(err.path, "attack.basis");
        let err = parse_config(&format!("{base}[attack]\nstrategy = \"intercept-resend\"\nbasis = \"z2\"\nlink = 3\n"))
            .unwrap_err();
        assert_eq!(err.path, "attack.link");
        let err = parse_config(&format!("{base}[attack]\nstrategy = \"depolarize\"\np = 2.0\n")).unwrap_err();
        assert_eq!(err.path, "attack.p");

        let task = "[task]\nrounds = 10\nrng_seed = 1\n[attack]\nstrategy = \"intercept-resend\"\nbasis = \"computational\"\n";
        let t = parse_config(task).unwrap().attack.unwrap();
        assert_eq!((t.location, t.targets.as_slice()), (Location::Outbound, &[0, 1, 2, 3][..]));
        let err = parse_config(&format!("{task}targets = [5]\n")).unwrap_err();
        assert_eq!(err.path, "attack.targets");
    }

    #[test]
    fn schema_version_is_checked() {
        let err = parse_config("schema_version = 2\n[task]\nrounds = 1\nrng_seed = 1\n").unwrap_err();
        assert_eq!(err.path, "schema_version");
    }

    #[test]
    fn every_preset_parses() {
        for (name, _) in PRESETS {
            preset(name).unwrap();
        }
        assert!(matches!(preset("nope"), Err(HarnessError::UnknownPreset(_))));
    }

    #[test]
    fn overrides_apply() {
        let cfg = preset("task-honest").unwrap().with_overrides(Some(3), Some(50)).unwrap();
        let Protocol::Task(t) = cfg.protocol else { panic!() };
        assert_eq!((t.rng_seed, t.rounds), (3, 50));
        assert!(preset("task-honest").unwrap().with_overrides(None, Some(0)).is_err());
    }
}
