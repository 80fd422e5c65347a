//! Run reports and their Markdown / JSON renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::human::CorrectionClass;
use crate::pipeline::{OutcomeCategory, ProgramRun, SegmentEntry};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramReport {
    pub name: String,
    pub segments: Vec<SegmentEntry>,
    /// Postcondition, proof and repair queries together.
    pub llm_calls: usize,
    pub postcondition_calls: usize,
    pub interface_lines_edited: usize,
    pub ground_truth_proof_lines: Option<usize>,
    pub wall_time_ms: u64,
    pub error: Option<String>,
}

impl ProgramReport {
    pub fn from_run(run: &ProgramRun, ground_truth_proof_lines: Option<usize>) -> Self {
        ProgramReport {
            name: run.name.clone(),
            segments: run.segments.clone(),
            llm_calls: run.llm_calls(),
            postcondition_calls: run.postcondition_calls,
            interface_lines_edited: run.interface_lines_edited,
            ground_truth_proof_lines,
            wall_time_ms: run.wall_time_ms,
            error: run.error.clone(),
        }
    }

    pub fn fully_verified(&self) -> bool {
        self.error.is_none() && self.segments.iter().all(|s| s.outcome.category != OutcomeCategory::Unverified)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocCounts {
    /// Sum over programs that have a ground-truth file; `None` if none do.
    pub ground_truth_proof_lines: Option<usize>,
    pub human_syntax_lines: usize,
    pub human_semantics_lines: usize,
    pub human_both_lines: usize,
    /// Lines of interface clauses replaced by a human; not part of the above.
    pub human_interface_lines: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub started: String,
    pub finished: String,
    pub config_snapshot: Config,
    pub per_program: Vec<ProgramReport>,
    pub totals: BTreeMap<OutcomeCategory, usize>,
    pub total_segments: usize,
    pub total_llm_calls: usize,
    pub loc: LocCounts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format `{other}`")),
        }
    }
}

impl RunReport {
    pub fn new(config: Config, per_program: Vec<ProgramReport>, started: String, finished: String) -> Self {
        let mut totals: BTreeMap<OutcomeCategory, usize> = OutcomeCategory::ALL.iter().map(|c| (*c, 0)).collect();
        let mut loc = LocCounts::default();
        for p in &per_program {
            for s in &p.segments {
                *totals.entry(s.outcome.category).or_default() += 1;
                if s.outcome.category != OutcomeCategory::AfterHuman {
                    continue;
                }
                let n = s.outcome.human_lines_changed;
                match s.outcome.correction_class.unwrap_or(CorrectionClass::Semantics) {
                    CorrectionClass::Syntax => loc.human_syntax_lines += n,
                    CorrectionClass::Semantics => loc.human_semantics_lines += n,
                    CorrectionClass::Both => loc.human_both_lines += n,
                }
            }
            loc.human_interface_lines += p.interface_lines_edited;
            if let Some(g) = p.ground_truth_proof_lines {
                *loc.ground_truth_proof_lines.get_or_insert(0) += g;
            }
        }
        RunReport {
            schema_version: SCHEMA_VERSION,
            started,
            finished,
            config_snapshot: config,
            total_segments: per_program.iter().map(|p| p.segments.len()).sum(),
            total_llm_calls: per_program.iter().map(|p| p.llm_calls).sum(),
            per_program,
            totals,
            loc,
        }
    }

    /// Category counts cover every category and sum to the segment count.
    pub fn check_partition(&self) -> Result<(), String> {
        let segments: usize = self.per_program.iter().map(|p| p.segments.len()).sum();
        let sum: usize = self.totals.values().sum();
        if self.totals.len() != OutcomeCategory::ALL.len() {
            return Err(format!("{} categories in totals", self.totals.len()));
        }
        if sum != segments || segments != self.total_segments {
            return Err(format!("totals sum to {sum}, {segments} segments, total_segments {}", self.total_segments));
        }
        Ok(())
    }

    pub fn fully_verified(&self) -> bool {
        self.per_program.iter().all(ProgramReport::fully_verified)
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let r: RunReport = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(format!("unsupported schema_version {}", r.schema_version));
        }
        Ok(r)
    }
}

pub fn render_report(report: &RunReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Markdown => render_markdown(report),
    }
}

fn render_markdown(r: &RunReport) -> String {
    let mut out = String::new();
    let verified = r.per_program.iter().filter(|p| p.fully_verified()).count();
    let _ = writeln!(out, "# Run report\n");
    let _ = writeln!(
        out,
        "Programs: {} ({} fully verified). Segments: {}. LLM queries: {}.\n",
        r.per_program.len(),
        verified,
        r.total_segments,
        r.total_llm_calls
    );

    let _ = writeln!(out, "## Table 1: Results by program segments\n");
    let _ = writeln!(out, "| Category | Segments |");
    let _ = writeln!(out, "|---|---:|");
    for c in OutcomeCategory::ALL {
        let _ = writeln!(out, "| {} | {} |", c.label(), r.totals.get(&c).copied().unwrap_or(0));
    }
    let _ = writeln!(out, "| Total | {} |\n", r.total_segments);

    let _ = writeln!(out, "## Table 2: Proof code by line of code\n");
    let _ = writeln!(out, "| Source | Lines |");
    let _ = writeln!(out, "|---|---:|");
    let gt = r.loc.ground_truth_proof_lines.map_or("n/a".to_string(), |n| n.to_string());
    let _ = writeln!(out, "| Ground-truth proof | {gt} |");
    let _ = writeln!(out, "| Human correction: syntax | {} |", r.loc.human_syntax_lines);
    let _ = writeln!(out, "| Human correction: semantics | {} |", r.loc.human_semantics_lines);
    let _ = writeln!(out, "| Human correction: both | {} |", r.loc.human_both_lines);
    let _ = writeln!(out, "| Human interface edits | {} |\n", r.loc.human_interface_lines);

    let _ = writeln!(out, "## Programs\n");
    let _ = writeln!(out, "| Program | Segments | Outcomes | LLM queries | Status |");
    let _ = writeln!(out, "|---|---:|---|---:|---|");
    for p in &r.per_program {
        let outcomes: Vec<&str> = p.segments.iter().map(|s| s.outcome.category.label()).collect();
        let status = match &p.error {
            Some(e) => format!("error: {}", e.replace('|', "\\|")),
            None if p.fully_verified() => "verified".to_string(),
            None => "incomplete".to_string(),
        };
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} |",
            p.name,
            p.segments.len(),
            outcomes.join("; "),
            p.llm_calls,
            status
        );
    }
    out
}

/// Writes `text` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, text: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
