//! Batch front end: analyzes programs with the concrete and/or abstract
//! engine and reports the dependencies of their results.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use depcore::analysis::{analyze_with, AnalysisOptions};
use depcore::concrete::{run as run_concrete, Limits};
use depcore::oracle::{run_suite, Suite};
use depcore::syntax::{parse_with, Expr, Mode, ParseOptions};
use depcore::{Mark, Marks};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNSANITIZED: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Json(#[from] serde_json::Error),
    #[error("default mode `{0}` is not among the configured modes")]
    DefaultModeUndeclared(String),
    #[error("{0} must be positive")]
    NotPositive(&'static str),
}

/// Settings read from `--config`; absent keys keep their defaults.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub modes: Vec<String>,
    pub default_mode: String,
    pub step_budget: u64,
    pub iteration_cap: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            modes: vec!["T".into(), "S".into()],
            default_mode: "T".into(),
            step_budget: Limits::default().step_budget,
            iteration_cap: AnalysisOptions::default().iteration_cap,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.modes.contains(&self.default_mode) {
            return Err(ConfigError::DefaultModeUndeclared(
                self.default_mode.clone(),
            ));
        }
        if self.step_budget == 0 {
            return Err(ConfigError::NotPositive("step_budget"));
        }
        if self.iteration_cap == 0 {
            return Err(ConfigError::NotPositive("iteration_cap"));
        }
        Ok(())
    }

    fn parse_options(&self) -> ParseOptions {
        ParseOptions {
            default_mode: Mode::new(&self.default_mode),
            modes: Some(self.modes.iter().map(|m| Mode::new(m)).collect()),
        }
    }

    fn limits(&self) -> Limits {
        Limits {
            step_budget: self.step_budget,
            ..Limits::default()
        }
    }

    fn analysis_options(&self) -> AnalysisOptions {
        AnalysisOptions {
            iteration_cap: self.iteration_cap,
            ..AnalysisOptions::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EngineChoice {
    Concrete,
    Abstract,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Concrete,
    Abstract,
}

impl EngineChoice {
    fn engines(self) -> &'static [Engine] {
        match self {
            EngineChoice::Concrete => &[Engine::Concrete],
            EngineChoice::Abstract => &[Engine::Abstract],
            EngineChoice::Both => &[Engine::Concrete, Engine::Abstract],
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Concrete => "concrete",
            Engine::Abstract => "abstract",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

/// One dependency of a result: the trace site, its mode and class, and
/// where the site occurs in the source.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DepEntry {
    pub label: u32,
    pub mode: String,
    pub class: String,
    pub span: String,
}

impl From<&Mark> for DepEntry {
    fn from(m: &Mark) -> Self {
        DepEntry {
            label: m.label.id(),
            mode: m.mode.to_string(),
            class: m.class.to_string(),
            span: m.label.span().to_string(),
        }
    }
}

impl fmt::Display for DepEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ℓ{} mode {} class {} at {}",
            self.label, self.mode, self.class, self.span
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sanitization {
    /// Some class reaches the result in more than one mode.
    pub flagged: bool,
    pub mixed_classes: Vec<String>,
    /// Result marks of a class the program sanitizes, in a mode other
    /// than the one its sanitizer produces.
    pub unsanitized: Vec<DepEntry>,
}

/// The outcome of one engine on one program.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub program: String,
    pub engine: Engine,
    /// Rendering of the final value; absent when the run failed.
    pub value: Option<String>,
    pub deps: Vec<DepEntry>,
    /// Program iterations of the abstract engine.
    pub iterations: Option<usize>,
    /// Abstract engine only: for each trace site, whether it reaches the
    /// final value.
    pub reachability: Option<BTreeMap<u32, bool>>,
    pub sanitization: Sanitization,
    pub error: Option<String>,
}

impl Report {
    fn failed(program: &str, engine: Engine, error: String) -> Self {
        Report {
            program: program.to_string(),
            engine,
            value: None,
            deps: Vec::new(),
            iterations: None,
            reachability: None,
            sanitization: Sanitization::default(),
            error: Some(error),
        }
    }

    pub fn carries_mode(&self, mode: &str) -> bool {
        self.deps.iter().any(|d| d.mode == mode)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} [{}]", self.program, self.engine)?;
        if let Some(err) = &self.error {
            return writeln!(f, "  error: {err}");
        }
        writeln!(f, "  value: {}", self.value.as_deref().unwrap_or("-"))?;
        if self.deps.is_empty() {
            writeln!(f, "  deps: none")?;
        } else {
            writeln!(f, "  deps:")?;
            for d in &self.deps {
                writeln!(f, "    {d}")?;
            }
        }
        if let Some(n) = self.iterations {
            writeln!(f, "  iterations: {n}")?;
        }
        if let Some(reach) = &self.reachability {
            let sites: Vec<String> = reach
                .iter()
                .filter(|(_, r)| **r)
                .map(|(l, _)| format!("ℓ{l}"))
                .collect();
            writeln!(
                f,
                "  reaching sites: {}",
                if sites.is_empty() {
                    "none".into()
                } else {
                    sites.join(", ")
                }
            )?;
        }
        let s = &self.sanitization;
        if s.flagged {
            writeln!(
                f,
                "  sanitization: FLAGGED, mixed modes for {}",
                s.mixed_classes.join(", ")
            )?;
        }
        for d in &s.unsanitized {
            writeln!(f, "  unsanitized: {d}")?;
        }
        Ok(())
    }
}

/// For every class that some `untrace` reclassifies, the modes it
/// reclassifies into.
fn sanitized_modes(e: &Expr) -> BTreeMap<String, BTreeSet<String>> {
    let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    e.walk(&mut |x| {
        if let Expr::Untrace { to, class, .. } = x {
            out.entry(class.to_string())
                .or_default()
                .insert(to.to_string());
        }
    });
    out
}

fn sanitization(e: &Expr, deps: &Marks) -> Sanitization {
    let mut modes: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for m in deps.iter() {
        modes
            .entry(m.class.to_string())
            .or_default()
            .insert(m.mode.to_string());
    }
    let mixed_classes: Vec<String> = modes
        .into_iter()
        .filter(|(_, ms)| ms.len() > 1)
        .map(|(c, _)| c)
        .collect();
    let targets = sanitized_modes(e);
    let unsanitized = deps
        .iter()
        .filter(|m| {
            targets
                .get(m.class.as_str())
                .is_some_and(|to| !to.contains(m.mode.as_str()))
        })
        .map(DepEntry::from)
        .collect();
    Sanitization {
        flagged: !mixed_classes.is_empty(),
        mixed_classes,
        unsanitized,
    }
}

/// Runs the requested engines on one program. A program that does not
/// parse yields one failed report per engine.
pub fn analyze_source(
    program: &str,
    source: &str,
    engine: EngineChoice,
    cfg: &RunConfig,
) -> Vec<Report> {
    let e = match parse_with(source, &cfg.parse_options()) {
        Ok(e) => e,
        Err(err) => {
            return engine
                .engines()
                .iter()
                .map(|&g| Report::failed(program, g, format!("parse error: {err}")))
                .collect()
        }
    };
    engine
        .engines()
        .iter()
        .map(|&g| match g {
            Engine::Concrete => match run_concrete(&e, cfg.limits()) {
                Ok((_, w)) => Report {
                    program: program.to_string(),
                    engine: g,
                    value: Some(w.value.to_string()),
                    deps: w.deps.iter().map(DepEntry::from).collect(),
                    iterations: None,
                    reachability: None,
                    sanitization: sanitization(&e, &w.deps),
                    error: None,
                },
                Err(err) => Report::failed(program, g, err.to_string()),
            },
            Engine::Abstract => match analyze_with(&e, cfg.analysis_options(), None) {
                Ok(r) => {
                    let mut value = r.value.lattice.to_string();
                    if !r.value.objs.is_empty() {
                        let objs: Vec<String> =
                            r.value.objs.iter().map(|l| l.to_string()).collect();
                        value.push_str(&format!(" objects {{{}}}", objs.join(", ")));
                    }
                    Report {
                        program: program.to_string(),
                        engine: g,
                        value: Some(value),
                        deps: r.value.deps.iter().map(DepEntry::from).collect(),
                        iterations: Some(r.iterations),
                        reachability: Some(
                            r.reachability
                                .iter()
                                .map(|(l, d)| (l.id(), !d.is_empty()))
                                .collect(),
                        ),
                        sanitization: sanitization(&e, &r.value.deps),
                        error: None,
                    }
                }
                Err(err) => Report::failed(program, g, err.to_string()),
            },
        })
        .collect()
}

/// Exit status for a set of reports: failures first, then the
/// unsanitized-mode check.
pub fn exit_code(reports: &[Report], deny_unsanitized: Option<&str>) -> i32 {
    if reports.iter().any(|r| r.error.is_some()) {
        EXIT_ERROR
    } else if deny_unsanitized.is_some_and(|m| reports.iter().any(|r| r.carries_mode(m))) {
        EXIT_UNSANITIZED
    } else {
        EXIT_OK
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "depcore",
    version,
    about = "Dependency analysis for a JavaScript-like core language"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analyze a program and report the dependencies of its result.
    Analyze {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = EngineChoice::Both)]
        engine: EngineChoice,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Exit with status 2 when the result carries a mark in this mode.
        #[arg(long, value_name = "MODE")]
        deny_unsanitized: Option<String>,
    },
    /// Run a property suite over generated programs.
    Oracle {
        suite: Suite,
        #[arg(long, default_value_t = 500)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Parses `argv` (including the program name) and executes it, writing
/// reports to `out` and diagnostics to `err`.
pub fn run(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => EXIT_USAGE,
            };
        }
    };
    match cli.command {
        Command::Analyze {
            file,
            engine,
            config,
            format,
            deny_unsanitized,
        } => {
            let cfg = match config.as_deref().map(RunConfig::load).transpose() {
                Ok(cfg) => cfg.unwrap_or_default(),
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    return EXIT_USAGE;
                }
            };
            let program = file.display().to_string();
            let reports = match std::fs::read_to_string(&file) {
                Ok(src) => analyze_source(&program, &src, engine, &cfg),
                Err(e) => engine
                    .engines()
                    .iter()
                    .map(|&g| Report::failed(&program, g, format!("cannot read program: {e}")))
                    .collect(),
            };
            for r in &reports {
                let _ = match format {
                    Format::Text => write!(out, "{r}"),
                    Format::Json => writeln!(
                        out,
                        "{}",
                        serde_json::to_string(r).expect("reports serialize")
                    ),
                };
            }
            exit_code(&reports, deny_unsanitized.as_deref())
        }
        Command::Oracle { suite, cases, seed } => {
            let report = run_suite(suite, cases, seed);
            let _ = writeln!(out, "{report}");
            for c in &report.failures {
                let _ = writeln!(out, "counterexample: {}\n  {}", c.program, c.detail);
            }
            if report.ok() {
                EXIT_OK
            } else {
                EXIT_ERROR
            }
        }
    }
}
