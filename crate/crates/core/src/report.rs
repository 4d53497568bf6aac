//! Per-group analysis bundle: every metric layer in one serializable report,
//! plus the raw distributions that are exported as CSV.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::ingest::{MessageLog, Minute, Period, Roster};
use crate::metrics::{
    activity_ratio, content_breakdown, day_period_iat, group_session_metrics, group_toff, message_iat,
    user_metrics, user_session_metrics, user_toff, DayPeriodStats, FlagTally, RatioBin,
};
use crate::sessionizer::{
    build_group_sessions, build_user_sessions, concurrency_profile, elbow_threshold, silence_gap_histogram,
    GapCount, DEFAULT_GROUP_THRESHOLD, DEFAULT_USER_THRESHOLD,
};
use crate::statfit::{ecdf, rank_frequency, summary_stats, zipf_fit_ranked, Summary, ZipfFit};
use crate::typology::{classify_users, RoleThresholds, UserRole};

/// Where the group threshold came from; recorded in the report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdSource {
    Fixed,
    /// Elbow of this group's own gap histogram.
    Elbow,
    /// Mean of the elbows of all analyzed groups.
    ElbowMean,
    /// Elbow of the pooled histogram of all analyzed groups.
    ElbowPooled,
    /// Elbow requested but the group has no silence gaps; default used.
    DefaultInsufficientData,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GroupThreshold {
    pub minutes: Minute,
    pub source: ThresholdSource,
}

impl GroupThreshold {
    pub fn fixed(minutes: Minute) -> Self {
        Self {
            minutes,
            source: ThresholdSource::Fixed,
        }
    }

    /// This group's elbow, or the default when it has no silence gaps.
    pub fn elbow_of(log: &MessageLog) -> Result<Self> {
        match silence_gap_histogram(log) {
            Ok(h) => Ok(Self {
                minutes: elbow_threshold(&h)?,
                source: ThresholdSource::Elbow,
            }),
            Err(crate::Error::InsufficientData(_)) => Ok(Self {
                minutes: DEFAULT_GROUP_THRESHOLD,
                source: ThresholdSource::DefaultInsufficientData,
            }),
            Err(e) => Err(e),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisConfig {
    pub user_threshold: Minute,
    pub group_threshold: GroupThreshold,
    pub tz_offset_minutes: Minute,
    pub ratio_bin_min: Minute,
    pub role_thresholds: RoleThresholds,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            user_threshold: DEFAULT_USER_THRESHOLD,
            group_threshold: GroupThreshold::fixed(DEFAULT_GROUP_THRESHOLD),
            tz_offset_minutes: 0,
            ratio_bin_min: 60,
            role_thresholds: RoleThresholds::default(),
        }
    }
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Summary and CDF of one sample; both absent for an empty sample.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistributionReport {
    pub count: usize,
    pub summary: Option<Summary<f64>>,
    pub cdf: Option<Vec<(f64, f64)>>,
    /// The sample itself, in the order it was produced; exported as CSV.
    #[serde(skip)]
    pub values: Vec<f64>,
}

impl DistributionReport {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Ok(Self {
                count: 0,
                summary: None,
                cdf: None,
                values: Vec::new(),
            });
        }
        Ok(Self {
            count: values.len(),
            summary: Some(summary_stats(values)?),
            cdf: Some(ecdf(values)?.points),
            values: values.to_vec(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContentShare {
    pub messages: u64,
    pub counts: BTreeMap<&'static str, u64>,
    pub pct: BTreeMap<&'static str, f64>,
}

impl From<FlagTally> for ContentShare {
    fn from(t: FlagTally) -> Self {
        let labels = crate::ingest::FLAG_LABELS;
        Self {
            messages: t.messages,
            counts: labels.iter().copied().zip(t.counts()).collect(),
            pct: labels
                .iter()
                .copied()
                .zip(t.percentages().map(round2))
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MessageLayer {
    pub messages: usize,
    pub active_users: usize,
    pub passive_users: Option<usize>,
    pub period: Option<Period>,
    pub iat: DistributionReport,
    pub day_period_iat: [DayPeriodStats; 4],
    pub activity_ratio: Vec<RatioBin>,
    pub content: ContentShare,
    pub content_by_period: BTreeMap<&'static str, ContentShare>,
    pub silence_gaps: Vec<GapCount>,
    pub elbow_min: Option<Minute>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UserRow {
    pub user_id: String,
    pub msg_count: u64,
    pub msg_pct: f64,
    pub group_session_count: u64,
    pub group_session_pct: f64,
    pub user_session_count: u64,
    pub role: UserRole,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankRow {
    pub rank: usize,
    pub user_id: String,
    pub frequency: u64,
    pub fitted: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UserLayer {
    pub users: Vec<UserRow>,
    pub passive: Vec<String>,
    pub role_counts: BTreeMap<UserRole, usize>,
    pub msg_count: DistributionReport,
    pub msg_pct: DistributionReport,
    pub group_session_pct: DistributionReport,
    pub user_session_count: DistributionReport,
    pub user_sessions: usize,
    pub user_session_msg_count: DistributionReport,
    pub user_session_duration: DistributionReport,
    pub user_toff: DistributionReport,
    pub rank_frequency: Vec<RankRow>,
    pub zipf_fit: Option<ZipfFit<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SessionRow {
    pub start: Minute,
    pub msg_count: u64,
    pub msg_coverage_pct: f64,
    pub user_count: u64,
    pub user_coverage_pct: f64,
    pub entropy_norm: f64,
    pub duration_min: Minute,
    pub max_concurrency: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupLayer {
    pub sessions: Vec<SessionRow>,
    pub msg_count: DistributionReport,
    pub msg_coverage_pct: DistributionReport,
    pub user_count: DistributionReport,
    pub user_coverage_pct: DistributionReport,
    pub entropy_norm: DistributionReport,
    pub duration_min: DistributionReport,
    pub group_toff: DistributionReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub group: String,
    pub category: Option<String>,
    pub empty: bool,
    pub config: AnalysisConfig,
    pub message_layer: MessageLayer,
    pub user_layer: UserLayer,
    pub group_layer: GroupLayer,
}

fn floats<T: Copy + Into<f64>>(xs: impl IntoIterator<Item = T>) -> Vec<f64> {
    xs.into_iter().map(Into::into).collect()
}

fn minutes_f(xs: &[Minute]) -> Vec<f64> {
    xs.iter().map(|x| *x as f64).collect()
}

/// Runs every metric layer over one group's log.
pub fn analyze_group(log: &MessageLog, roster: Option<&Roster>, cfg: &AnalysisConfig) -> Result<Report> {
    cfg.role_thresholds.validate()?;
    crate::sessionizer::Thresholds::new(cfg.user_threshold, cfg.group_threshold.minutes)?;
    let tz = cfg.tz_offset_minutes;

    let user_sessions = build_user_sessions(log, cfg.user_threshold);
    let group_sessions = build_group_sessions(log, cfg.group_threshold.minutes);
    let active = log.senders().len();

    // message layer
    let iat = message_iat(log);
    let hist = silence_gap_histogram(log).ok();
    let breakdown = content_breakdown(log, tz);
    let message_layer = MessageLayer {
        messages: log.len(),
        active_users: active,
        passive_users: roster.map(|r| r.passive_count(log)),
        period: log.period(),
        iat: DistributionReport::of(&minutes_f(&iat))?,
        day_period_iat: day_period_iat(log, tz),
        activity_ratio: activity_ratio(log, cfg.ratio_bin_min)?,
        content: breakdown.overall.into(),
        content_by_period: breakdown
            .by_period
            .iter()
            .map(|(p, t)| (p.name(), ContentShare::from(*t)))
            .collect(),
        elbow_min: hist.as_ref().map(elbow_threshold).transpose()?,
        silence_gaps: hist.map(|h| h.entries().to_vec()).unwrap_or_default(),
    };

    // user layer
    let metrics = user_metrics(log, &user_sessions, &group_sessions);
    let roles = classify_users(&metrics, roster, &cfg.role_thresholds)?;
    let mut role_counts: BTreeMap<UserRole, usize> = BTreeMap::new();
    for r in roles.values() {
        *role_counts.entry(*r).or_default() += 1;
    }
    let counts: BTreeMap<String, u64> = metrics.iter().map(|m| (m.user_id.clone(), m.msg_count)).collect();
    let ranked = rank_frequency(&counts);
    let zipf_fit = if ranked.len() >= 2 {
        zipf_fit_ranked::<f64, _>(&ranked).ok()
    } else {
        None
    };
    let session_sizes = user_session_metrics(&user_sessions);
    let user_layer = UserLayer {
        msg_count: DistributionReport::of(&floats(metrics.iter().map(|m| m.msg_count as f64)))?,
        msg_pct: DistributionReport::of(&floats(metrics.iter().map(|m| m.msg_pct)))?,
        group_session_pct: DistributionReport::of(&floats(metrics.iter().map(|m| m.group_session_pct)))?,
        user_session_count: DistributionReport::of(&floats(metrics.iter().map(|m| m.user_session_count as f64)))?,
        user_sessions: user_sessions.len(),
        user_session_msg_count: DistributionReport::of(&floats(session_sizes.iter().map(|s| s.msg_count as f64)))?,
        user_session_duration: DistributionReport::of(&floats(session_sizes.iter().map(|s| s.duration_min as f64)))?,
        user_toff: DistributionReport::of(&minutes_f(&user_toff(&user_sessions)))?,
        rank_frequency: ranked
            .iter()
            .map(|r| RankRow {
                rank: r.rank,
                user_id: r.key.clone(),
                frequency: r.frequency,
                fitted: zipf_fit.map(|f| f.predict(r.rank as f64)),
            })
            .collect(),
        zipf_fit,
        passive: roles
            .iter()
            .filter(|(_, r)| **r == UserRole::Passive)
            .map(|(u, _)| u.clone())
            .collect(),
        role_counts,
        users: metrics
            .iter()
            .map(|m| UserRow {
                user_id: m.user_id.clone(),
                msg_count: m.msg_count,
                msg_pct: round2(m.msg_pct),
                group_session_count: m.group_session_count,
                group_session_pct: round2(m.group_session_pct),
                user_session_count: m.user_session_count,
                role: roles[&m.user_id],
            })
            .collect(),
    };

    // group layer
    let gsm = group_session_metrics(&group_sessions, active, log.len())?;
    let group_layer = GroupLayer {
        msg_count: DistributionReport::of(&floats(gsm.iter().map(|s| s.msg_count as f64)))?,
        msg_coverage_pct: DistributionReport::of(&floats(gsm.iter().map(|s| s.msg_coverage_pct)))?,
        user_count: DistributionReport::of(&floats(gsm.iter().map(|s| s.user_count as f64)))?,
        user_coverage_pct: DistributionReport::of(&floats(gsm.iter().map(|s| s.user_coverage_pct)))?,
        entropy_norm: DistributionReport::of(&floats(gsm.iter().map(|s| s.entropy_norm)))?,
        duration_min: DistributionReport::of(&floats(gsm.iter().map(|s| s.duration_min as f64)))?,
        group_toff: DistributionReport::of(&minutes_f(&group_toff(&group_sessions)))?,
        sessions: gsm
            .iter()
            .zip(&group_sessions)
            .map(|(m, gs)| SessionRow {
                start: m.start,
                msg_count: m.msg_count,
                msg_coverage_pct: round2(m.msg_coverage_pct),
                user_count: m.user_count,
                user_coverage_pct: round2(m.user_coverage_pct),
                entropy_norm: m.entropy_norm,
                duration_min: m.duration_min,
                max_concurrency: concurrency_profile(&user_sessions, gs).max,
            })
            .collect(),
    };

    Ok(Report {
        group: log.group_id.clone(),
        category: roster.and_then(|r| r.category.clone()),
        empty: log.is_empty(),
        config: cfg.clone(),
        message_layer,
        user_layer,
        group_layer,
    })
}

impl Report {
    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, self)?;
        out.write_all(b"\n")?;
        Ok(())
    }

    /// CSV files for external plotting, as `(file name, contents)`, in a
    /// fixed order. Single-column files hold one value per row.
    pub fn csv_files(&self) -> Result<Vec<(&'static str, String)>> {
        fn column(values: impl IntoIterator<Item = f64>) -> Result<String> {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["value"]).map_err(csv_err)?;
            for v in values {
                w.write_record([v.to_string()]).map_err(csv_err)?;
            }
            finish(w)
        }
        fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
            let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        fn csv_err(e: csv::Error) -> crate::Error {
            std::io::Error::other(e.to_string()).into()
        }
        let ml = &self.message_layer;
        let ul = &self.user_layer;
        let gl = &self.group_layer;
        let mut files = vec![
            ("iat.csv", column(ml.iat.values.iter().copied())?),
            ("user_msg_count.csv", column(ul.users.iter().map(|u| u.msg_count as f64))?),
            ("user_session_msg_count.csv", column(ul.user_session_msg_count.values.iter().copied())?),
            ("user_session_duration.csv", column(ul.user_session_duration.values.iter().copied())?),
            ("user_toff.csv", column(ul.user_toff.values.iter().copied())?),
            ("group_session_msg_count.csv", column(gl.sessions.iter().map(|s| s.msg_count as f64))?),
            ("group_session_msg_coverage.csv", column(gl.sessions.iter().map(|s| s.msg_coverage_pct))?),
            ("group_session_user_count.csv", column(gl.sessions.iter().map(|s| s.user_count as f64))?),
            ("group_session_user_coverage.csv", column(gl.sessions.iter().map(|s| s.user_coverage_pct))?),
            ("group_session_entropy.csv", column(gl.sessions.iter().map(|s| s.entropy_norm))?),
            ("group_session_duration.csv", column(gl.sessions.iter().map(|s| s.duration_min as f64))?),
            ("group_toff.csv", column(gl.group_toff.values.iter().copied())?),
        ];

        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["rank", "frequency", "fitted_value"]).map_err(csv_err)?;
        for r in &ul.rank_frequency {
            let fitted = r.fitted.map(|f| f.to_string()).unwrap_or_default();
            w.write_record([r.rank.to_string(), r.frequency.to_string(), fitted])
                .map_err(csv_err)?;
        }
        files.push(("rank_frequency.csv", finish(w)?));

        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["user", "msg_pct", "session_pct", "role"]).map_err(csv_err)?;
        for u in &ul.users {
            w.write_record([
                u.user_id.clone(),
                u.msg_pct.to_string(),
                u.group_session_pct.to_string(),
                u.role.name().to_owned(),
            ])
            .map_err(csv_err)?;
        }
        for p in &ul.passive {
            w.write_record([p.as_str(), "0", "0", UserRole::Passive.name()])
                .map_err(csv_err)?;
        }
        files.push(("roles.csv", finish(w)?));

        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["bin_start", "messages", "active_users", "ratio"]).map_err(csv_err)?;
        for b in &ml.activity_ratio {
            w.write_record([
                b.bin_start.to_string(),
                b.messages.to_string(),
                b.active_users.to_string(),
                b.ratio.to_string(),
            ])
            .map_err(csv_err)?;
        }
        files.push(("activity_ratio.csv", finish(w)?));

        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["gap", "frequency"]).map_err(csv_err)?;
        for g in &ml.silence_gaps {
            w.write_record([g.gap.to_string(), g.frequency.to_string()]).map_err(csv_err)?;
        }
        files.push(("gap_histogram.csv", finish(w)?));
        Ok(files)
    }
}
