//! The developer in the loop: interface review and proof hand-off.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};

use crate::verifier::{format_diagnostics, Diagnostic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrectionClass {
    Syntax,
    Semantics,
    Both,
}

impl std::str::FromStr for CorrectionClass {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "syntax" => Ok(CorrectionClass::Syntax),
            "semantics" => Ok(CorrectionClass::Semantics),
            "both" => Ok(CorrectionClass::Both),
            other => Err(format!("unknown correction class `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HumanEdit {
    pub text: String,
    pub class: Option<CorrectionClass>,
}

#[derive(Debug, thiserror::Error)]
pub enum HumanError {
    #[error("invalid human script {path}: {message}")]
    Script { path: PathBuf, message: String },
    #[error("editor failed: {0}")]
    Editor(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub trait HumanIo: Send {
    /// Replacement text for the clauses proposed at an internal boundary, or
    /// `None` to keep them. `proposed` is `None` when no proposal exists.
    fn review_interface(&mut self, boundary: usize, proposed: Option<&str>) -> Result<Option<String>, HumanError>;

    /// An edited version of `program`, or `None` to give up on the segment.
    fn fix_segment(
        &mut self,
        segment: usize,
        program: &str,
        diagnostics: &[Diagnostic],
    ) -> Result<Option<HumanEdit>, HumanError>;
}

/// Non-interactive runs: accepts every proposal and never edits.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoHuman;

impl HumanIo for NoHuman {
    fn review_interface(&mut self, _: usize, _: Option<&str>) -> Result<Option<String>, HumanError> {
        Ok(None)
    }

    fn fix_segment(&mut self, _: usize, _: &str, _: &[Diagnostic]) -> Result<Option<HumanEdit>, HumanError> {
        Ok(None)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScriptEntry {
    boundary: Option<usize>,
    segment: Option<usize>,
    text: String,
    class: Option<CorrectionClass>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScriptFile {
    #[serde(default)]
    edit: Vec<ScriptEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Target {
    Boundary(usize),
    Segment(usize),
}

/// Replays an ordered list of edits; each entry is used at most once.
#[derive(Debug, Clone, Default)]
pub struct ScriptedHuman {
    entries: Vec<(Target, HumanEdit, bool)>,
}

impl ScriptedHuman {
    pub fn load(path: &Path) -> Result<Self, HumanError> {
        let bad = |message: String| HumanError::Script { path: path.to_path_buf(), message };
        let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
        Self::parse(&text).map_err(bad)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let file: ScriptFile = toml::from_str(text).map_err(|e| e.to_string())?;
        let mut out = ScriptedHuman::default();
        for (i, e) in file.edit.into_iter().enumerate() {
            let target = match (e.boundary, e.segment) {
                (Some(b), None) => Target::Boundary(b),
                (None, Some(s)) => Target::Segment(s),
                _ => return Err(format!("edit {i}: give exactly one of `boundary` or `segment`")),
            };
            out.entries.push((target, HumanEdit { text: e.text, class: e.class }, false));
        }
        Ok(out)
    }

    pub fn with_segment_edit(mut self, segment: usize, text: &str, class: CorrectionClass) -> Self {
        self.entries.push((Target::Segment(segment), HumanEdit { text: text.to_string(), class: Some(class) }, false));
        self
    }

    pub fn with_interface_edit(mut self, boundary: usize, text: &str) -> Self {
        self.entries.push((Target::Boundary(boundary), HumanEdit { text: text.to_string(), class: None }, false));
        self
    }

    fn take(&mut self, target: Target) -> Option<HumanEdit> {
        let e = self.entries.iter_mut().find(|(t, _, used)| *t == target && !used)?;
        e.2 = true;
        Some(e.1.clone())
    }
}

impl HumanIo for ScriptedHuman {
    fn review_interface(&mut self, boundary: usize, _: Option<&str>) -> Result<Option<String>, HumanError> {
        Ok(self.take(Target::Boundary(boundary)).map(|e| e.text))
    }

    fn fix_segment(&mut self, segment: usize, _: &str, _: &[Diagnostic]) -> Result<Option<HumanEdit>, HumanError> {
        Ok(self.take(Target::Segment(segment)))
    }
}

/// Opens an external editor on a temporary file and reads it back.
#[derive(Debug, Clone)]
pub struct EditorHuman {
    command: Vec<String>,
}

impl EditorHuman {
    /// Uses `editor_cmd` if given, else `$VISUAL`, else `$EDITOR`.
    pub fn new(editor_cmd: Option<&str>) -> Result<Self, HumanError> {
        let cmd = editor_cmd
            .map(str::to_string)
            .or_else(|| std::env::var("VISUAL").ok())
            .or_else(|| std::env::var("EDITOR").ok())
            .filter(|c| !c.trim().is_empty())
            .ok_or_else(|| HumanError::Editor("no editor command configured and $EDITOR is unset".into()))?;
        Ok(EditorHuman { command: cmd.split_whitespace().map(str::to_string).collect() })
    }

    fn edit(&self, initial: &str) -> Result<String, HumanError> {
        let dir = tempfile::tempdir()?;
        let file = dir.path().join("edit.rs");
        std::fs::write(&file, initial)?;
        let (exe, args) = self.command.split_first().expect("editor command is nonempty");
        let status = Command::new(exe)
            .args(args)
            .arg(&file)
            .status()
            .map_err(|e| HumanError::Editor(format!("{exe}: {e}")))?;
        if !status.success() {
            return Err(HumanError::Editor(format!("{exe} exited with {status}")));
        }
        Ok(std::fs::read_to_string(&file)?)
    }

    fn ask_class(&self) -> Result<CorrectionClass, HumanError> {
        let stdin = std::io::stdin();
        loop {
            eprint!("Correction class [syntax/semantics/both] (default semantics): ");
            std::io::stderr().flush()?;
            let mut line = String::new();
            if stdin.lock().read_line(&mut line)? == 0 || line.trim().is_empty() {
                return Ok(CorrectionClass::Semantics);
            }
            match line.parse() {
                Ok(c) => return Ok(c),
                Err(e) => eprintln!("{e}"),
            }
        }
    }
}

impl HumanIo for EditorHuman {
    fn review_interface(&mut self, boundary: usize, proposed: Option<&str>) -> Result<Option<String>, HumanError> {
        let initial = proposed.unwrap_or("");
        let header = format!("// Interface at boundary {boundary}; one clause per line. Save unchanged to accept.\n");
        let edited = self.edit(&format!("{header}{initial}"))?;
        let body: String = edited.lines().filter(|l| !l.trim_start().starts_with("//")).collect::<Vec<_>>().join("\n");
        if body.trim() == initial.trim() {
            return Ok(None);
        }
        Ok(Some(body))
    }

    fn fix_segment(
        &mut self,
        segment: usize,
        program: &str,
        diagnostics: &[Diagnostic],
    ) -> Result<Option<HumanEdit>, HumanError> {
        eprintln!("Segment {segment} needs a manual proof. Verifier output:\n{}", format_diagnostics(diagnostics));
        let edited = self.edit(program)?;
        if edited == program {
            return Ok(None);
        }
        let class = self.ask_class()?;
        Ok(Some(HumanEdit { text: edited, class: Some(class) }))
    }
}
