//! Command-line front end. Exit codes: 0 success, 1 internal or data error,
//! 2 usage or configuration error.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::generator::{generate_trace, round_trip_check, GeneratorParams};
use crate::ingest::{
    anonymize, load_roster, parse_export, read_canonical, write_canonical, write_records, FormatConfig,
    MessageLog, Minute, Roster,
};
use crate::report::{analyze_group, AnalysisConfig, GroupThreshold, ThresholdSource};
use crate::sessionizer::{
    aggregate_elbow, build_group_sessions, build_user_sessions, silence_gap_histogram, ElbowAggregation,
    DEFAULT_GROUP_THRESHOLD, DEFAULT_USER_THRESHOLD,
};
use crate::statfit::{rank_frequency, zipf_fit_ranked};
use crate::typology::RoleThresholds;

/// Environment variable naming the default format configuration file.
pub const FORMAT_ENV: &str = "CHATWORK_FORMAT";

#[derive(Debug, Parser)]
#[command(name = "chatwork", version, about = "Group-chat workload characterization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse text exports into anonymized canonical logs.
    Parse(ParseArgs),
    /// Sessionize canonical logs and write one report per group.
    Analyze(AnalyzeArgs),
    /// Zipf fit of per-user message counts.
    Fit(FitArgs),
    /// Write a synthetic ON/OFF trace as a canonical log.
    Generate(GenerateArgs),
    /// Generate, sessionize and compare estimates with ground truth.
    Roundtrip(RoundtripArgs),
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    /// Export files; the group id defaults to the file stem.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Format configuration (TOML).
    #[arg(long, env = FORMAT_ENV)]
    pub format: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Group id; only valid with a single input.
    #[arg(long)]
    pub group: Option<String>,
    /// Overrides the format's timezone offset (local minus UTC, minutes).
    #[arg(long, allow_hyphen_values = true)]
    pub tz_offset: Option<Minute>,
    /// Key for the pseudonym digest.
    #[arg(long, env = "CHATWORK_SALT", default_value = "")]
    pub salt: String,
    /// Rosters with raw member ids; written out pseudonymized.
    #[arg(long)]
    pub roster: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ElbowMode {
    /// Each group uses its own elbow.
    PerGroup,
    /// All groups use the mean of the per-group elbows.
    Mean,
    /// All groups use the elbow of the pooled histogram.
    Pooled,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Canonical log files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_USER_THRESHOLD)]
    pub user_threshold: Minute,
    /// Minutes, or `auto` for the elbow heuristic.
    #[arg(long, default_value = "81")]
    pub group_threshold: String,
    #[arg(long, value_enum, default_value = "per-group")]
    pub elbow_mode: ElbowMode,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub tz_offset: Minute,
    /// Bin width for the messages-per-active-user ratio.
    #[arg(long, default_value_t = 60)]
    pub ratio_bin: Minute,
    /// Roster files (matched to logs by group id).
    #[arg(long)]
    pub roster: Vec<PathBuf>,
    #[arg(long, default_value_t = 10.0)]
    pub session_pct_high: f64,
    #[arg(long, default_value_t = 0.1)]
    pub msg_pct_low: f64,
    #[arg(long, default_value_t = 5.0)]
    pub msg_pct_high: f64,
    /// Also write sessions and the gap histogram as canonical records.
    #[arg(long)]
    pub emit_sessions: bool,
    /// Skip the CSV distributions.
    #[arg(long)]
    pub no_csv: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Canonical log files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Directory for `<group>.rank_frequency.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Generator parameters (TOML); defaults apply to missing keys.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RoundtripArgs {
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_USER_THRESHOLD)]
    pub user_threshold: Minute,
}

#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Internal(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Internal(_) => 1,
        }
    }
}

impl From<crate::Error> for Failure {
    fn from(e: crate::Error) -> Self {
        match e {
            crate::Error::Config(_) | crate::Error::Roster(_) => Failure::Usage(e.into()),
            other => Failure::Internal(other.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Internal(e)
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure::Usage(anyhow!("{msg}"))
}

/// Parses arguments, runs the command and maps failures to exit codes.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Usage(e) | Failure::Internal(e)) = &f;
            eprintln!("error: {e:#}");
            ExitCode::from(f.exit_code())
        }
    }
}

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Parse(a) => cmd_parse(&a),
        Command::Analyze(a) => cmd_analyze(&a),
        Command::Fit(a) => cmd_fit(&a),
        Command::Generate(a) => cmd_generate(&a),
        Command::Roundtrip(a) => cmd_roundtrip(&a),
    }
}

/// Writes through a temporary sibling and renames it into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// Group ids become file names; anything outside `[A-Za-z0-9._-]` maps to `_`.
pub fn file_safe(group: &str) -> String {
    let s: String = group
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') { c } else { '_' })
        .collect();
    if s.is_empty() || s.chars().all(|c| c == '.') {
        "_".into()
    } else {
        s
    }
}

fn ensure_dir(dir: &Path) -> CliResult {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))
        .map_err(Failure::Usage)
}

fn require_input(path: &Path) -> CliResult {
    if !path.is_file() {
        return Err(usage(format!("input {} does not exist", path.display())));
    }
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "group".into())
}

fn load_rosters(paths: &[PathBuf]) -> CliResult<BTreeMap<String, Roster>> {
    let mut out = BTreeMap::new();
    for p in paths {
        require_input(p)?;
        let f = fs::File::open(p).with_context(|| format!("opening {}", p.display()))?;
        let r = load_roster(BufReader::new(f)).map_err(|e| usage(format!("{}: {e}", p.display())))?;
        out.insert(r.group_id.clone(), r);
    }
    Ok(out)
}

fn cmd_parse(a: &ParseArgs) -> CliResult {
    let mut fmt = match &a.format {
        Some(p) => FormatConfig::load(p).map_err(|e| usage(format!("format config: {e}")))?,
        None => FormatConfig::default(),
    };
    if let Some(tz) = a.tz_offset {
        fmt.tz_offset_minutes = tz;
    }
    if a.group.is_some() && a.inputs.len() > 1 {
        return Err(usage("--group needs exactly one input"));
    }
    for p in &a.inputs {
        require_input(p)?;
    }
    let rosters = load_rosters(&a.roster)?;
    ensure_dir(&a.out)?;
    let salt = a.salt.as_bytes();

    for path in &a.inputs {
        let group = a.group.clone().unwrap_or_else(|| stem(path));
        let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let parsed = parse_export(BufReader::new(f), &group, &fmt)
            .with_context(|| format!("parsing {}", path.display()))?;
        let log = anonymize(parsed.log, salt);

        let name = file_safe(&group);
        let mut buf = Vec::new();
        write_canonical(&mut buf, &log)?;
        write_atomic(&a.out.join(format!("{name}.jsonl")), &buf)?;
        let skips = serde_json::to_vec_pretty(&parsed.skips).context("serializing skip report")?;
        write_atomic(&a.out.join(format!("{name}.skips.json")), &skips)?;
        if let Some(r) = rosters.get(&group) {
            let mut buf = Vec::new();
            r.anonymize(salt).write_json(&mut buf)?;
            write_atomic(&a.out.join(format!("{name}.roster.json")), &buf)?;
        }
        println!(
            "{group}: {} messages, {} system lines, {} skipped lines",
            log.len(),
            parsed.skips.system_lines,
            parsed.skips.skipped.len()
        );
    }
    Ok(())
}

fn read_logs(inputs: &[PathBuf]) -> CliResult<Vec<MessageLog>> {
    let mut logs: Vec<MessageLog> = Vec::new();
    for p in inputs {
        require_input(p)?;
        let f = fs::File::open(p).with_context(|| format!("opening {}", p.display()))?;
        let found = read_canonical(BufReader::new(f), &stem(p)).with_context(|| format!("reading {}", p.display()))?;
        for log in found {
            if logs.iter().any(|l| l.group_id == log.group_id) {
                return Err(usage(format!("group {:?} appears in more than one input", log.group_id)));
            }
            logs.push(log);
        }
    }
    Ok(logs)
}

fn group_thresholds(a: &AnalyzeArgs, logs: &[MessageLog]) -> CliResult<Vec<GroupThreshold>> {
    if a.group_threshold != "auto" {
        let m: Minute = a
            .group_threshold
            .parse()
            .map_err(|_| usage(format!("--group-threshold must be minutes or `auto`, got {:?}", a.group_threshold)))?;
        if m <= 0 {
            return Err(usage("--group-threshold must be positive"));
        }
        return Ok(vec![GroupThreshold::fixed(m); logs.len()]);
    }
    if a.elbow_mode == ElbowMode::PerGroup {
        return logs.iter().map(|l| GroupThreshold::elbow_of(l).map_err(Failure::from)).collect();
    }
    let hists: Vec<_> = logs.iter().filter_map(|l| silence_gap_histogram(l).ok()).collect();
    let shared = if hists.is_empty() {
        GroupThreshold {
            minutes: DEFAULT_GROUP_THRESHOLD,
            source: ThresholdSource::DefaultInsufficientData,
        }
    } else if a.elbow_mode == ElbowMode::Mean {
        GroupThreshold {
            minutes: aggregate_elbow(&hists, ElbowAggregation::Mean)?,
            source: ThresholdSource::ElbowMean,
        }
    } else {
        GroupThreshold {
            minutes: aggregate_elbow(&hists, ElbowAggregation::Pooled)?,
            source: ThresholdSource::ElbowPooled,
        }
    };
    Ok(vec![shared; logs.len()])
}

fn cmd_analyze(a: &AnalyzeArgs) -> CliResult {
    if a.user_threshold <= 0 {
        return Err(usage("--user-threshold must be positive"));
    }
    if a.ratio_bin <= 0 {
        return Err(usage("--ratio-bin must be positive"));
    }
    let role_thresholds = RoleThresholds {
        session_pct_high: a.session_pct_high,
        msg_pct_low: a.msg_pct_low,
        msg_pct_high: a.msg_pct_high,
    };
    role_thresholds.validate()?;
    let logs = read_logs(&a.inputs)?;
    let rosters = load_rosters(&a.roster)?;
    let thresholds = group_thresholds(a, &logs)?;
    ensure_dir(&a.out)?;

    let results: Vec<CliResult<String>> = logs
        .par_iter()
        .zip(&thresholds)
        .map(|(log, threshold)| {
            let cfg = AnalysisConfig {
                user_threshold: a.user_threshold,
                group_threshold: *threshold,
                tz_offset_minutes: a.tz_offset,
                ratio_bin_min: a.ratio_bin,
                role_thresholds,
            };
            let report = analyze_group(log, rosters.get(&log.group_id), &cfg)?;
            let dir = a.out.join(file_safe(&log.group_id));
            fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            let mut buf = Vec::new();
            report.write_json(&mut buf)?;
            write_atomic(&dir.join("report.json"), &buf)?;
            if !a.no_csv {
                for (name, body) in report.csv_files()? {
                    write_atomic(&dir.join(name), body.as_bytes())?;
                }
            }
            if a.emit_sessions {
                let mut buf = Vec::new();
                write_records(&mut buf, build_user_sessions(log, cfg.user_threshold))?;
                write_atomic(&dir.join("user_sessions.jsonl"), &buf)?;
                let mut buf = Vec::new();
                write_records(&mut buf, build_group_sessions(log, threshold.minutes))?;
                write_atomic(&dir.join("group_sessions.jsonl"), &buf)?;
                let mut buf = Vec::new();
                if let Ok(h) = silence_gap_histogram(log) {
                    write_records(&mut buf, h.entries())?;
                }
                write_atomic(&dir.join("gap_histogram.jsonl"), &buf)?;
            }
            Ok(format!(
                "{}: {} messages, {} group sessions (threshold {} min, {:?})",
                log.group_id,
                log.len(),
                report.group_layer.sessions.len(),
                threshold.minutes,
                threshold.source
            ))
        })
        .collect();

    let mut first_err = None;
    for r in results {
        match r {
            Ok(line) => println!("{line}"),
            Err(e) => {
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    first_err.map_or(Ok(()), Err)
}

fn cmd_fit(a: &FitArgs) -> CliResult {
    let logs = read_logs(&a.inputs)?;
    if let Some(out) = &a.out {
        ensure_dir(out)?;
    }
    let stdout = std::io::stdout();
    let mut stdout = stdout.lock();
    for log in &logs {
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        for m in log.messages() {
            *counts.entry(m.user_id.clone()).or_default() += 1;
        }
        let ranked = rank_frequency(&counts);
        let fit = zipf_fit_ranked::<f64, _>(&ranked).ok();
        let line = serde_json::json!({ "group": log.group_id, "users": ranked.len(), "zipf_fit": fit });
        writeln!(stdout, "{line}").context("writing to stdout")?;
        if let Some(out) = &a.out {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["rank", "frequency", "fitted_value"]).context("csv")?;
            for r in &ranked {
                let fitted = fit.map(|f| f.predict(r.rank as f64).to_string()).unwrap_or_default();
                w.write_record([r.rank.to_string(), r.frequency.to_string(), fitted])
                    .context("csv")?;
            }
            let bytes = w.into_inner().map_err(|e| anyhow!("{e}"))?;
            write_atomic(&out.join(format!("{}.rank_frequency.csv", file_safe(&log.group_id))), &bytes)?;
        }
    }
    Ok(())
}

fn load_params(path: Option<&Path>, seed: Option<u64>) -> CliResult<GeneratorParams> {
    let mut params = match path {
        Some(p) => {
            require_input(p)?;
            GeneratorParams::load(p).map_err(|e| usage(format!("generator params: {e}")))?
        }
        None => GeneratorParams::default(),
    };
    if let Some(s) = seed {
        params.seed = s;
    }
    params.validate().map_err(|e| usage(format!("generator params: {e}")))?;
    Ok(params)
}

fn cmd_generate(a: &GenerateArgs) -> CliResult {
    let params = load_params(a.params.as_deref(), a.seed)?;
    let log = generate_trace(&params)?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    let mut buf = Vec::new();
    write_canonical(&mut buf, &log)?;
    write_atomic(&a.out, &buf)?;
    println!("{}: {} messages from {} users", params.group, log.len(), log.senders().len());
    Ok(())
}

fn cmd_roundtrip(a: &RoundtripArgs) -> CliResult {
    let params = load_params(a.params.as_deref(), a.seed)?;
    if a.user_threshold <= 0 {
        return Err(usage("--user-threshold must be positive"));
    }
    let report = round_trip_check(&params, a.user_threshold)?;
    let text = serde_json::to_string_pretty(&report).context("serializing report")?;
    println!("{text}");
    Ok(())
}
