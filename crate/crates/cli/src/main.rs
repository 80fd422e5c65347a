use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};

use invsynth_core::access::{loop_access_sets, loop_preconditions, propagate_invariants};
use invsynth_core::bench::{build_backend, build_human, build_verifier, load_templates, run_bench, CorpusManifest};
use invsynth_core::config::Config;
use invsynth_core::pipeline::Prover;
use invsynth_core::report::{render_report, write_atomic, ReportFormat, RunReport};
use invsynth_core::segmenter::{build_subprogram, segment_function, Granularity};
use invsynth_core::verifier::program_hash;
use invsynth_core::{parse_function, print_function, FunctionAst, SourceProgram};

/// Loop-invariant synthesis for Verus programs.
#[derive(Parser)]
#[command(name = "invsynth", version)]
struct Cli {
    /// Config file (flat TOML). Command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override any config key, e.g. `--set max_repairs=3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the segments of a program.
    Segment {
        file: PathBuf,
        #[arg(long)]
        granularity: Option<Granularity>,
        /// Also print each segment's standalone sub-program.
        #[arg(long)]
        subprograms: bool,
    },
    /// Print read/write sets and propagatable preconditions of each loop.
    Analyze { file: PathBuf },
    /// Prove one program.
    Prove {
        file: PathBuf,
        #[command(flatten)]
        run: RunFlags,
        /// Mock reply script.
        #[arg(long)]
        script: Option<PathBuf>,
        /// Scripted human edits.
        #[arg(long)]
        human_script: Option<PathBuf>,
        /// Write the final program here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Prove every program in a corpus manifest and report.
    Bench {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        run: RunFlags,
        #[arg(long)]
        jobs: Option<usize>,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "markdown")]
        format: ReportFormat,
    },
    /// Re-render a JSON report.
    Report {
        file: PathBuf,
        #[arg(long, default_value = "markdown")]
        format: ReportFormat,
    },
    /// Print the normalized hash stub scripts use to match a program.
    Hash { file: PathBuf },
}

#[derive(Args)]
struct RunFlags {
    /// live, replay or mock.
    #[arg(long)]
    backend: Option<String>,
    /// real or stub.
    #[arg(long)]
    verifier: Option<String>,
    #[arg(long)]
    stub_script: Option<PathBuf>,
    #[arg(long)]
    transcript: Option<PathBuf>,
    /// Append every model exchange to the transcript.
    #[arg(long)]
    record: bool,
    #[arg(long)]
    max_repairs: Option<usize>,
    #[arg(long)]
    propagate_eagerly: bool,
    #[arg(long)]
    non_interactive: bool,
    #[arg(long)]
    granularity: Option<Granularity>,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Usage(anyhow::Error),
    Run(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Run(e)
    }
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn parse_set(item: &str) -> Result<(String, toml::Value)> {
    let (key, raw) = item.split_once('=').ok_or_else(|| anyhow!("`--set {item}`: expected KEY=VALUE"))?;
    let key = key.trim().to_string();
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    Ok((key, value))
}

fn resolve_config(cli: &Cli, extra: toml::Table) -> Result<Config, Failure> {
    let mut overrides = toml::Table::new();
    for item in &cli.set {
        let (k, v) = parse_set(item).map_err(usage)?;
        overrides.insert(k, v);
    }
    overrides.extend(extra);
    Config::resolve(cli.config.as_deref(), &overrides).map_err(usage)
}

fn path_value(p: &Path) -> toml::Value {
    toml::Value::String(p.to_string_lossy().into_owned())
}

impl RunFlags {
    fn overrides(&self) -> toml::Table {
        let mut t = toml::Table::new();
        let mut put = |k: &str, v: toml::Value| {
            t.insert(k.to_string(), v);
        };
        if let Some(b) = &self.backend {
            put("backend", b.clone().into());
        }
        if let Some(v) = &self.verifier {
            put("verifier", v.clone().into());
        }
        if let Some(p) = &self.stub_script {
            put("stub_script", path_value(p));
        }
        if let Some(p) = &self.transcript {
            put("transcript_path", path_value(p));
        }
        if self.record {
            put("record", true.into());
        }
        if let Some(n) = self.max_repairs {
            put("max_repairs", (n as i64).into());
        }
        if self.propagate_eagerly {
            put("propagate_eagerly", true.into());
        }
        if self.non_interactive {
            put("non_interactive", true.into());
        }
        if let Some(g) = self.granularity {
            put("granularity", g.to_string().into());
        }
        t
    }
}

fn read_program(file: &Path) -> Result<(String, FunctionAst), Failure> {
    let text = std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display())).map_err(usage)?;
    let ast = parse_function(&SourceProgram::new(text.clone()))
        .with_context(|| format!("parsing {}", file.display()))
        .map_err(Failure::Run)?;
    Ok((text, ast))
}

fn cmd_segment(cli: &Cli, file: &Path, granularity: Option<Granularity>, subprograms: bool) -> Result<(), Failure> {
    let cfg = resolve_config(cli, toml::Table::new())?;
    let (_, ast) = read_program(file)?;
    let plan = segment_function(&ast, granularity.unwrap_or(cfg.granularity)).context("segmenting")?;
    println!("{} segments", plan.segments().len());
    for seg in plan.segments() {
        let span = match (seg.stmts.first(), seg.stmts.last()) {
            (Some(a), Some(b)) => format!("lines {}-{}", a.span.start, b.span.end),
            _ => "empty".to_string(),
        };
        let live: Vec<&str> = seg.live_vars.iter().map(|v| v.name.as_str()).collect();
        println!("segment {}: {} ({span}); live: {}", seg.id, seg.kind, if live.is_empty() { "-".into() } else { live.join(", ") });
        if subprograms {
            let sub = build_subprogram(seg, &plan).context("building sub-program")?;
            println!("{}", print_function(&sub));
        }
    }
    Ok(())
}

fn cmd_analyze(file: &Path) -> Result<(), Failure> {
    let (_, ast) = read_program(file)?;
    let stmts = &ast.body.stmts;
    let mut n = 0;
    for (i, s) in stmts.iter().enumerate() {
        if !s.is_while() {
            continue;
        }
        let acc = loop_access_sets(s).context("access sets")?;
        let pre = loop_preconditions(&ast.requires, &stmts[..i]);
        let prop = propagate_invariants(&pre, &acc);
        println!("loop {n} (line {}):", s.span.start);
        println!("  reads:  {}", acc.reads.iter().cloned().collect::<Vec<_>>().join(", "));
        println!("  writes: {}", acc.writes.iter().cloned().collect::<Vec<_>>().join(", "));
        println!("  preconditions:");
        for c in &pre {
            println!("    {}", c.raw_text());
        }
        println!("  propagated:");
        for c in &prop {
            println!("    {}", c.raw_text());
        }
        n += 1;
    }
    if n == 0 {
        println!("no top-level loops");
    }
    Ok(())
}

fn cmd_prove(
    cli: &Cli,
    file: &Path,
    run: &RunFlags,
    script: Option<&Path>,
    human_script: Option<&Path>,
    out: Option<&Path>,
) -> Result<bool, Failure> {
    let mut extra = run.overrides();
    if let Some(p) = script {
        extra.insert("script_path".into(), path_value(p));
    }
    if let Some(p) = human_script {
        extra.insert("human_script".into(), path_value(p));
    }
    let cfg = resolve_config(cli, extra)?;
    let (text, _) = read_program(file)?;
    let backend = build_backend(&cfg, None, None).map_err(usage)?;
    let verifier = build_verifier(&cfg, None).map_err(usage)?;
    let mut human = build_human(&cfg, None, true).map_err(usage)?;
    let templates = load_templates(&cfg).map_err(usage)?;
    let prover = Prover {
        backend: backend.as_ref(),
        verifier: verifier.as_ref(),
        templates: &templates,
        policy: cfg.policy(),
        propagate_eagerly: cfg.propagate_eagerly,
    };
    let name = file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let result = prover.prove_program(&name, &text, cfg.granularity, human.as_mut()).context("proving")?;
    for s in &result.segments {
        eprintln!("segment {} ({}): {} [{} LLM calls]", s.id, s.kind, s.outcome.category.label(), s.outcome.llm_calls);
    }
    eprintln!("{} LLM calls in total", result.llm_calls());
    if let Some(e) = &result.error {
        eprintln!("error: {e}");
    }
    if let Some(program) = &result.final_program {
        match out {
            Some(p) => write_atomic(p, program).with_context(|| format!("writing {}", p.display()))?,
            None => print!("{program}"),
        }
    }
    Ok(result.all_verified())
}

fn cmd_bench(
    cli: &Cli,
    manifest: &Path,
    run: &RunFlags,
    jobs: Option<usize>,
    out: Option<&Path>,
    format: ReportFormat,
) -> Result<(), Failure> {
    let mut extra = run.overrides();
    if let Some(j) = jobs {
        extra.insert("jobs".into(), (j as i64).into());
    }
    let cfg = resolve_config(cli, extra)?;
    let manifest = CorpusManifest::load(manifest).map_err(usage)?;
    let report = run_bench(&manifest, &cfg).map_err(usage)?;
    let text = render_report(&report, format);
    match out {
        Some(p) => write_atomic(p, &text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_report(file: &Path, format: ReportFormat) -> Result<(), Failure> {
    let text = std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display())).map_err(usage)?;
    let report = RunReport::from_json(&text).map_err(|e| usage(anyhow!("{}: {e}", file.display())))?;
    print!("{}", render_report(&report, format));
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<bool, Failure> {
    match &cli.command {
        Command::Segment { file, granularity, subprograms } => cmd_segment(cli, file, *granularity, *subprograms).map(|_| true),
        Command::Analyze { file } => cmd_analyze(file).map(|_| true),
        Command::Prove { file, run, script, human_script, out } => {
            cmd_prove(cli, file, run, script.as_deref(), human_script.as_deref(), out.as_deref())
        }
        Command::Bench { manifest, run, jobs, out, format } => {
            cmd_bench(cli, manifest, run, *jobs, out.as_deref(), *format).map(|_| true)
        }
        Command::Report { file, format } => cmd_report(file, *format).map(|_| true),
        Command::Hash { file } => {
            let text = std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display())).map_err(usage)?;
            println!("{}", program_hash(&text));
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
