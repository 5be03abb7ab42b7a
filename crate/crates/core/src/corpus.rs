//! The hemodialysis machine model shipped with the crate.
//!
//! Every unit, scenario and mutant is embedded at build time; the same
//! files live under `corpus/` for editing. The manifest is line oriented:
//!
//! ```text
//! unit MCP0.ebs machine MCP0
//! chain MCP0 MCP1 MCP2 MCP3
//! bound bloodPumpingTime 0 320
//! const SetBloodFlow 100
//! expect MCP0 po-failed=0 closed-violations=0 closed-deadlock=no driven-deadlock=no
//! vacuity-suspect MCP0 inv4
//! scenario scenarios/mbp0_no_flow.scn pass
//! mutant mutants/mbp1_wrong_alarm.ebs replaces MBP1.ebs detected-by=po
//! ```

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::ast::Component;
use crate::config::{strip_comment, CheckConfig};
use crate::project::{LoadError, Project};

macro_rules! embed {
    ($($path:literal),* $(,)?) => {
        &[$(($path, include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/corpus/", $path)))),*]
    };
}

/// Every corpus file as (path relative to `corpus/`, contents).
pub static FILES: &[(&str, &str)] = embed![
    "manifest",
    "CCP0.ebs",
    "CCP1.ebs",
    "CCP2.ebs",
    "CCP3.ebs",
    "CBP0.ebs",
    "CBP1.ebs",
    "CBP2.ebs",
    "CTM0.ebs",
    "CTM1.ebs",
    "CTM2.ebs",
    "MCP0.ebs",
    "MCP1.ebs",
    "MCP2.ebs",
    "MCP3.ebs",
    "MBP0.ebs",
    "MBP1.ebs",
    "MBP2.ebs",
    "MTM0.ebs",
    "MTM1.ebs",
    "MTM2.ebs",
    "MTM3.ebs",
    "scenarios/mbp0_no_flow.scn",
    "scenarios/mbp0_no_flow_wrong_alarm.scn",
    "scenarios/mbp1_flow_69.scn",
    "scenarios/mbp1_flow_70.scn",
    "scenarios/mcp1_volume_400.scn",
    "scenarios/mcp1_volume_401.scn",
    "scenarios/mcp2_tick_310.scn",
    "scenarios/mcp2_tick_311.scn",
    "scenarios/mtm0_preparation_overtemp.scn",
    "scenarios/mtm0_therapy_overtemp.scn",
    "scenarios/mtm1_therapy_undertemp.scn",
    "mutants/mbp1_threshold_minus_one.ebs",
    "mutants/mbp1_wrong_alarm.ebs",
    "mutants/mcp0_dropped_action.ebs",
    "mutants/mcp1_guard_not_strengthened.ebs",
    "mutants/mcp1_guard_plus_one.ebs",
    "mutants/mcp1_wrong_flow.ebs",
    "mutants/mtm1_writes_temperature.ebs",
];

pub fn file(path: &str) -> Option<&'static str> {
    FILES.iter().find(|(p, _)| *p == path).map(|(_, t)| *t)
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("missing corpus file `{0}`")]
    MissingFile(String),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("manifest disagrees with the sources: {0}")]
    Inconsistent(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitKind {
    Context,
    Machine,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unit {
    pub file: String,
    pub kind: UnitKind,
    pub name: String,
}

/// Expected check results for one machine at the default configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expectation {
    pub po_failed: usize,
    pub closed_violations: usize,
    pub closed_deadlock: bool,
    pub driven_deadlock: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioEntry {
    pub file: String,
    pub expect_pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detection {
    /// A proof obligation fails with a counterexample state.
    Po,
    /// Refinement checking against the unit's abstract machine fails.
    Refinement,
}

impl FromStr for Detection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "po" => Ok(Detection::Po),
            "refinement" => Ok(Detection::Refinement),
            _ => Err(format!("unknown detection `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MutantEntry {
    pub file: String,
    /// Unit file the mutant replaces.
    pub replaces: String,
    pub detected_by: Detection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusManifest {
    pub units: Vec<Unit>,
    pub chains: Vec<Vec<String>>,
    pub config: CheckConfig,
    pub expectations: BTreeMap<String, Expectation>,
    pub vacuity_suspect: Vec<(String, String)>,
    pub scenarios: Vec<ScenarioEntry>,
    pub mutants: Vec<MutantEntry>,
}

impl CorpusManifest {
    pub fn parse(text: &str) -> Result<CorpusManifest, CorpusError> {
        let mut m = CorpusManifest {
            units: Vec::new(),
            chains: Vec::new(),
            config: CheckConfig::default(),
            expectations: BTreeMap::new(),
            vacuity_suspect: Vec::new(),
            scenarios: Vec::new(),
            mutants: Vec::new(),
        };
        for (i, raw) in text.lines().enumerate() {
            let line = strip_comment(raw);
            if line.is_empty() {
                continue;
            }
            let err = |message: String| CorpusError::Manifest {
                line: i + 1,
                message,
            };
            if m.config.apply_line(line).map_err(err)? {
                continue;
            }
            let words: Vec<&str> = line.split_whitespace().collect();
            match words[..] {
                ["unit", file, kind, name] => m.units.push(Unit {
                    file: file.into(),
                    kind: match kind {
                        "context" => UnitKind::Context,
                        "machine" => UnitKind::Machine,
                        _ => return Err(err(format!("unknown unit kind `{kind}`"))),
                    },
                    name: name.into(),
                }),
                ["chain", ref rest @ ..] if rest.len() >= 2 => {
                    m.chains.push(rest.iter().map(|s| s.to_string()).collect())
                }
                ["expect", machine, ref fields @ ..] => {
                    let mut e = Expectation {
                        po_failed: 0,
                        closed_violations: 0,
                        closed_deadlock: false,
                        driven_deadlock: false,
                    };
                    for f in fields {
                        let (k, v) = f
                            .split_once('=')
                            .ok_or_else(|| err(format!("expected key=value, found `{f}`")))?;
                        let num = || v.parse().map_err(|_| err(format!("bad number `{v}`")));
                        let yes = || match v {
                            "yes" => Ok(true),
                            "no" => Ok(false),
                            _ => Err(err(format!("expected yes or no, found `{v}`"))),
                        };
                        match k {
                            "po-failed" => e.po_failed = num()?,
                            "closed-violations" => e.closed_violations = num()?,
                            "closed-deadlock" => e.closed_deadlock = yes()?,
                            "driven-deadlock" => e.driven_deadlock = yes()?,
                            _ => return Err(err(format!("unknown key `{k}`"))),
                        }
                    }
                    m.expectations.insert(machine.into(), e);
                }
                ["vacuity-suspect", machine, label] => {
                    m.vacuity_suspect.push((machine.into(), label.into()))
                }
                ["scenario", file, verdict] => m.scenarios.push(ScenarioEntry {
                    file: file.into(),
                    expect_pass: match verdict {
                        "pass" => true,
                        "fail" => false,
                        _ => return Err(err(format!("expected pass or fail, found `{verdict}`"))),
                    },
                }),
                ["mutant", file, "replaces", replaces, detected] => {
                    let d = detected
                        .strip_prefix("detected-by=")
                        .ok_or_else(|| err("expected detected-by=<po|refinement>".into()))?;
                    m.mutants.push(MutantEntry {
                        file: file.into(),
                        replaces: replaces.into(),
                        detected_by: d.parse().map_err(err)?,
                    })
                }
                _ => return Err(err(format!("unrecognized line `{line}`"))),
            }
        }
        Ok(m)
    }

    pub fn machines(&self) -> impl Iterator<Item = &str> {
        self.units
            .iter()
            .filter(|u| u.kind == UnitKind::Machine)
            .map(|u| u.name.as_str())
    }

    /// The chain containing `machine`, if any.
    pub fn chain_of(&self, machine: &str) -> Option<&[String]> {
        self.chains
            .iter()
            .find(|c| c.iter().any(|m| m == machine))
            .map(Vec::as_slice)
    }
}

/// The loaded corpus.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub project: Project,
    pub manifest: CorpusManifest,
}

/// Parses and resolves every embedded unit and checks them against the
/// manifest.
pub fn load_corpus() -> Result<Corpus, CorpusError> {
    let manifest = CorpusManifest::parse(file("manifest").expect("embedded"))?;
    let project = project_with(&manifest, None)?;
    check_manifest(&manifest, &project)?;
    Ok(Corpus { project, manifest })
}

fn project_with(
    manifest: &CorpusManifest,
    replace: Option<(&str, &str)>,
) -> Result<Project, CorpusError> {
    let mut sources = Vec::new();
    for u in &manifest.units {
        let text = match replace {
            Some((target, text)) if target == u.file => text,
            _ => file(&u.file).ok_or_else(|| CorpusError::MissingFile(u.file.clone()))?,
        };
        sources.push((u.file.as_str(), text));
    }
    Ok(Project::from_sources(sources)?)
}

fn check_manifest(m: &CorpusManifest, p: &Project) -> Result<(), CorpusError> {
    let bad = |s: String| Err(CorpusError::Inconsistent(s));
    for u in &m.units {
        let declared = match u.kind {
            UnitKind::Context => p.context(&u.name).is_some(),
            UnitKind::Machine => p.machine(&u.name).is_some(),
        };
        if !declared {
            return bad(format!("{} does not declare {}", u.file, u.name));
        }
    }
    let listed = m.units.len();
    let declared = p.contexts().count() + p.machines().count();
    if listed != declared {
        return bad(format!("{listed} units listed, {declared} declared"));
    }
    let mut seen = std::collections::BTreeSet::new();
    for chain in &m.chains {
        for pair in chain.windows(2) {
            let refines = p
                .machine(&pair[1])
                .and_then(|c| c.refines.as_deref())
                .is_some_and(|a| a == pair[0]);
            if !refines {
                return bad(format!("{} does not refine {}", pair[1], pair[0]));
            }
        }
        for mach in chain {
            if !seen.insert(mach.clone()) {
                return bad(format!("{mach} appears in two chains"));
            }
        }
    }
    for mach in m.machines() {
        if !seen.contains(mach) {
            return bad(format!("{mach} is in no chain"));
        }
        if !m.expectations.contains_key(mach) {
            return bad(format!("{mach} has no expectations"));
        }
    }
    Ok(())
}

impl Corpus {
    /// The corpus with one unit replaced by a mutant.
    pub fn with_mutant(&self, mutant: &MutantEntry) -> Result<Project, CorpusError> {
        let text =
            file(&mutant.file).ok_or_else(|| CorpusError::MissingFile(mutant.file.clone()))?;
        project_with(&self.manifest, Some((&mutant.replaces, text)))
    }

    /// The machine a mutant replaces.
    pub fn mutant_machine(&self, mutant: &MutantEntry) -> Option<&str> {
        self.manifest
            .units
            .iter()
            .find(|u| u.file == mutant.replaces)
            .map(|u| u.name.as_str())
    }

    pub fn scenario_text(&self, entry: &ScenarioEntry) -> Option<&'static str> {
        file(&entry.file)
    }
}

/// Writes every corpus file below `dir`.
pub fn write_corpus(dir: &Path) -> Result<(), CorpusError> {
    for (path, text) in FILES {
        let target = dir.join(path);
        if let Some(parent) = target.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(target, text)?;
    }
    Ok(())
}

/// Units of an embedded file, for tools that want the raw definitions.
pub fn parse_unit(path: &str) -> Option<Vec<Component>> {
    crate::parser::parse_named(path, file(path)?).ok()
}
