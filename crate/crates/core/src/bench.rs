//! Corpus manifests and the bench runner.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;
use similar::{ChangeTag, TextDiff};

use crate::backend::{now_iso8601, Backend, LiveBackend, MockBackend, RecordingBackend, ReplayBackend};
use crate::config::{BackendKind, Config, VerifierKind};
use crate::human::{EditorHuman, HumanIo, NoHuman, ScriptedHuman};
use crate::pipeline::{ProgramRun, Prover};
use crate::prompting::TemplateSet;
use crate::report::{ProgramReport, RunReport};
use crate::verifier::{ProcessVerifier, StubVerifier, Verifier};

/// Timestamp used for every clock reading when `deterministic_clock` is set.
pub const FIXED_TIMESTAMP: &str = "1970-01-01T00:00:00Z";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub name: String,
    pub program: PathBuf,
    pub ground_truth: Option<PathBuf>,
    pub stub_script: Option<PathBuf>,
    pub transcript: Option<PathBuf>,
    pub mock_script: Option<PathBuf>,
    pub human_script: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusManifest {
    pub entries: Vec<ManifestEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    name: Option<String>,
    program: PathBuf,
    ground_truth: Option<PathBuf>,
    stub_script: Option<PathBuf>,
    transcript: Option<PathBuf>,
    mock_script: Option<PathBuf>,
    human_script: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    #[serde(default)]
    entry: Vec<RawEntry>,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("{0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CorpusManifest {
    /// Reads a manifest; relative paths are resolved against its directory
    /// and every referenced file must exist.
    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let bad = |message: String| BenchError::Manifest { path: path.to_path_buf(), message };
        let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
        let raw: RawManifest = toml::from_str(&text).map_err(|e| bad(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: PathBuf| -> Result<PathBuf, BenchError> {
            let full = if p.is_absolute() { p } else { base.join(p) };
            if !full.is_file() {
                return Err(bad(format!("{} does not exist", full.display())));
            }
            Ok(full)
        };
        let mut entries = Vec::new();
        for e in raw.entry {
            let name = match e.name {
                Some(n) => n,
                None => e.program.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
            };
            if entries.iter().any(|x: &ManifestEntry| x.name == name) {
                return Err(bad(format!("duplicate entry name `{name}`")));
            }
            entries.push(ManifestEntry {
                name,
                program: resolve(e.program)?,
                ground_truth: e.ground_truth.map(resolve).transpose()?,
                stub_script: e.stub_script.map(resolve).transpose()?,
                transcript: e.transcript.map(resolve).transpose()?,
                mock_script: e.mock_script.map(resolve).transpose()?,
                human_script: e.human_script.map(resolve).transpose()?,
            });
        }
        Ok(CorpusManifest { entries })
    }
}

/// Lines present in `annotated` but not in `program`, blank lines excluded.
pub fn added_proof_lines(program: &str, annotated: &str) -> usize {
    TextDiff::from_lines(program, annotated)
        .iter_all_changes()
        .filter(|c| c.tag() == ChangeTag::Insert && !c.value().trim().is_empty())
        .count()
}

pub fn clock(config: &Config) -> String {
    if config.deterministic_clock {
        FIXED_TIMESTAMP.to_string()
    } else {
        now_iso8601()
    }
}

fn fixed_clock() -> String {
    FIXED_TIMESTAMP.to_string()
}

/// Backend for one program. Entry-specific files take precedence over the
/// config-wide ones.
pub fn build_backend(
    config: &Config,
    transcript: Option<&Path>,
    mock_script: Option<&Path>,
) -> Result<Box<dyn Backend>, BenchError> {
    let transcript = transcript.or(config.transcript_path.as_deref());
    let inner: Box<dyn Backend> = match config.backend {
        BackendKind::Mock => {
            let path = mock_script
                .or(config.script_path.as_deref())
                .ok_or_else(|| BenchError::Config("mock backend needs `script_path` or a manifest mock_script".into()))?;
            Box::new(MockBackend::load(path).map_err(|e| BenchError::Config(e.to_string()))?)
        }
        BackendKind::Replay => {
            let path = transcript
                .ok_or_else(|| BenchError::Config("replay backend needs `transcript_path` or a manifest transcript".into()))?;
            Box::new(ReplayBackend::load(&config.model, path).map_err(|e| BenchError::Config(e.to_string()))?)
        }
        BackendKind::Live => {
            Box::new(LiveBackend::new(config.backend_config()).map_err(|e| BenchError::Config(e.to_string()))?)
        }
    };
    if !config.record {
        return Ok(inner);
    }
    if config.backend == BackendKind::Replay {
        return Err(BenchError::Config("cannot record while replaying".into()));
    }
    let path = transcript.ok_or_else(|| BenchError::Config("recording needs a transcript path".into()))?;
    let mut rec = RecordingBackend::new(inner, &config.model, path);
    if config.deterministic_clock {
        rec = rec.with_clock(fixed_clock);
    }
    Ok(Box::new(rec))
}

pub fn build_verifier(config: &Config, stub_script: Option<&Path>) -> Result<Box<dyn Verifier>, BenchError> {
    match config.verifier {
        VerifierKind::Real => Ok(Box::new(ProcessVerifier::new(&config.verifier_cmd, config.verify_timeout()))),
        VerifierKind::Stub => {
            let path = stub_script
                .or(config.stub_script.as_deref())
                .ok_or_else(|| BenchError::Config("stub verifier needs `stub_script` or a manifest stub_script".into()))?;
            Ok(Box::new(StubVerifier::load(path).map_err(|e| BenchError::Config(e.to_string()))?))
        }
    }
}

/// Scripted edits if a script is named, otherwise an editor unless the run
/// is non-interactive.
pub fn build_human(config: &Config, human_script: Option<&Path>, interactive: bool) -> Result<Box<dyn HumanIo>, BenchError> {
    if let Some(path) = human_script.or(config.human_script.as_deref()) {
        return Ok(Box::new(ScriptedHuman::load(path).map_err(|e| BenchError::Config(e.to_string()))?));
    }
    if config.non_interactive || !interactive {
        return Ok(Box::new(NoHuman));
    }
    match EditorHuman::new(config.editor_cmd.as_deref()) {
        Ok(h) => Ok(Box::new(h)),
        Err(e) => {
            log::warn!("{e}; continuing without human hand-off");
            Ok(Box::new(NoHuman))
        }
    }
}

pub fn load_templates(config: &Config) -> Result<TemplateSet, BenchError> {
    match &config.fewshot_dir {
        Some(dir) => TemplateSet::load(dir, config.max_prompt_chars).map_err(|e| BenchError::Config(e.to_string())),
        None => {
            let mut t = TemplateSet::builtin();
            t.postcondition.max_prompt_chars = config.max_prompt_chars;
            t.proof.max_prompt_chars = config.max_prompt_chars;
            t.repair.max_prompt_chars = config.max_prompt_chars;
            Ok(t)
        }
    }
}

struct Prepared {
    backend: Box<dyn Backend>,
    verifier: Box<dyn Verifier>,
    human: Box<dyn HumanIo>,
    source: String,
    ground_truth: Option<usize>,
}

fn prepare(entry: &ManifestEntry, config: &Config) -> Result<Prepared, BenchError> {
    let source = std::fs::read_to_string(&entry.program)?;
    let ground_truth = match &entry.ground_truth {
        Some(p) => Some(added_proof_lines(&source, &std::fs::read_to_string(p)?)),
        None => None,
    };
    Ok(Prepared {
        backend: build_backend(config, entry.transcript.as_deref(), entry.mock_script.as_deref())?,
        verifier: build_verifier(config, entry.stub_script.as_deref())?,
        human: build_human(config, entry.human_script.as_deref(), config.jobs == 1)?,
        source,
        ground_truth,
    })
}

fn run_entry(mut p: Prepared, entry: &ManifestEntry, config: &Config, templates: &TemplateSet) -> ProgramReport {
    let prover = Prover {
        backend: p.backend.as_ref(),
        verifier: p.verifier.as_ref(),
        templates,
        policy: config.policy(),
        propagate_eagerly: config.propagate_eagerly,
    };
    let mut run = match prover.prove_program(&entry.name, &p.source, config.granularity, p.human.as_mut()) {
        Ok(run) => run,
        Err(e) => {
            log::error!("{}: {e}", entry.name);
            ProgramRun::aborted(&entry.name, e.to_string())
        }
    };
    if config.deterministic_clock {
        run.wall_time_ms = 0;
    }
    ProgramReport::from_run(&run, p.ground_truth)
}

/// Proves every manifest entry, up to `config.jobs` at a time. Setup errors
/// (unreadable scripts, missing paths) abort the run; failures while
/// proving are recorded per program.
pub fn run_bench(manifest: &CorpusManifest, config: &Config) -> Result<RunReport, BenchError> {
    let started = clock(config);
    let templates = load_templates(config)?;
    let prepared = manifest.entries.iter().map(|e| prepare(e, config)).collect::<Result<Vec<_>, _>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| BenchError::Config(e.to_string()))?;
    let programs: Vec<ProgramReport> = pool.install(|| {
        prepared
            .into_par_iter()
            .zip(manifest.entries.par_iter())
            .map(|(p, e)| run_entry(p, e, config, &templates))
            .collect()
    });
    Ok(RunReport::new(config.clone(), programs, started, clock(config)))
}
