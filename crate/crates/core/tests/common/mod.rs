#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chatwork::generator::{generate_trace, DurationDist, GeneratorParams};
use chatwork::ingest::{render_export, FormatConfig};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chatwork"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("CHATWORK_FORMAT").env_remove("CHATWORK_SALT").output().expect("spawn chatwork")
}

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Seed-pinned parameters of the bundled corpus.
pub fn corpus_params() -> Vec<GeneratorParams> {
    vec![
        GeneratorParams {
            group: "alpha".into(),
            n_users: 14,
            horizon_min: 4 * 24 * 60,
            user_activity_skew: 1.2,
            seed: 101,
            ..GeneratorParams::default()
        },
        GeneratorParams {
            group: "beta".into(),
            n_users: 9,
            horizon_min: 3 * 24 * 60,
            off_duration: DurationDist::Lognormal { mu: 4.5, sigma: 0.8 },
            user_activity_skew: 0.5,
            seed: 202,
            ..GeneratorParams::default()
        },
        GeneratorParams {
            group: "gamma".into(),
            n_users: 6,
            horizon_min: 2 * 24 * 60,
            on_duration: DurationDist::Exponential { mean: 8.0 },
            off_duration: DurationDist::Exponential { mean: 300.0 },
            user_activity_skew: 0.0,
            seed: 303,
            ..GeneratorParams::default()
        },
    ]
}

/// Export text and roster document for every corpus group, plus an empty
/// export (`delta`). Each export opens with a system line and every 25th
/// post carries a continuation line.
pub fn build_corpus() -> BTreeMap<String, (String, Option<String>)> {
    let fmt = FormatConfig {
        tz_offset_minutes: -180,
        ..FormatConfig::default()
    };
    let mut out = BTreeMap::new();
    for p in corpus_params() {
        let log = generate_trace(&p).unwrap();
        let rendered = render_export(&log, &fmt).unwrap();
        let mut text = String::new();
        let first_stamp = rendered.split(" - ").next().unwrap();
        text.push_str(&format!("{first_stamp} - user0001 created group \"{}\"\n", p.group));
        for (i, line) in rendered.lines().enumerate() {
            text.push_str(line);
            text.push('\n');
            if i % 25 == 24 {
                text.push_str("segunda linha da mensagem\n");
            }
        }
        let members: Vec<String> = (1..=p.n_users + 3).map(GeneratorParams::user_id).collect();
        let category = if p.user_activity_skew >= 1.0 { "political" } else { "non-political" };
        let roster = serde_json::json!({
            "group": p.group,
            "members": members,
            "admins": ["user0001"],
            "category": category,
        });
        out.insert(p.group.clone(), (text, Some(serde_json::to_string_pretty(&roster).unwrap() + "\n")));
    }
    out.insert("delta".into(), (String::new(), None));
    out
}

pub const FORMAT_TOML: &str = "# Export layout of the bundled corpus\ntz_offset_minutes = -180\n";

/// Writes the corpus into `dir` (exports as `<group>.txt`, rosters as
/// `<group>.roster.json`, plus `format.toml`).
pub fn write_corpus(dir: &Path) {
    fs::create_dir_all(dir).unwrap();
    for (group, (text, roster)) in build_corpus() {
        fs::write(dir.join(format!("{group}.txt")), text).unwrap();
        if let Some(r) = roster {
            fs::write(dir.join(format!("{group}.roster.json")), r).unwrap();
        }
    }
    fs::write(dir.join("format.toml"), FORMAT_TOML).unwrap();
}

/// Every file under `dir`, relative path to bytes.
pub fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        let mut entries: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

/// parse then analyze the corpus in `corpus`, leaving reports in `out`.
pub fn pipeline(corpus: &Path, work: &Path, out: &Path) {
    let canonical = work.join("canonical");
    let mut args: Vec<String> = vec!["parse".into()];
    for g in ["alpha", "beta", "gamma", "delta"] {
        args.push(corpus.join(format!("{g}.txt")).to_string_lossy().into_owned());
    }
    args.extend(["--format".into(), corpus.join("format.toml").to_string_lossy().into_owned()]);
    args.extend(["--out".into(), canonical.to_string_lossy().into_owned()]);
    args.extend(["--salt".into(), "fixture-salt".into()]);
    for g in ["alpha", "beta", "gamma"] {
        args.extend(["--roster".into(), corpus.join(format!("{g}.roster.json")).to_string_lossy().into_owned()]);
    }
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = run(&refs);
    assert!(o.status.success(), "parse failed: {}", String::from_utf8_lossy(&o.stderr));

    let mut args: Vec<String> = vec!["analyze".into()];
    for g in ["alpha", "beta", "gamma", "delta"] {
        args.push(canonical.join(format!("{g}.jsonl")).to_string_lossy().into_owned());
    }
    for g in ["alpha", "beta", "gamma"] {
        args.extend(["--roster".into(), canonical.join(format!("{g}.roster.json")).to_string_lossy().into_owned()]);
    }
    args.extend(["--tz-offset".into(), "-180".into()]);
    args.extend(["--out".into(), out.to_string_lossy().into_owned()]);
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = run(&refs);
    assert!(o.status.success(), "analyze failed: {}", String::from_utf8_lossy(&o.stderr));
}
