//! Message, user and group layer metrics.
//!
//! Percentages are carried at full precision; rounding happens only when a
//! report is serialized.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{ContentFlags, MessageLog, Minute};
use crate::scalar::Scalar;
use crate::sessionizer::{GroupSession, UserSession};

const MINUTES_PER_DAY: Minute = 24 * 60;

/// Gaps between consecutive messages of the pooled stream, `t[j+1] - t[j]`.
pub fn message_iat(log: &MessageLog) -> Vec<Minute> {
    let ts: Vec<Minute> = log.timestamps().collect();
    ts.windows(2).map(|w| w[1] - w[0]).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RatioBin {
    pub bin_start: Minute,
    pub messages: u64,
    pub active_users: u64,
    pub ratio: f64,
}

/// Messages per distinct sender in fixed bins aligned to the epoch. Empty
/// bins are omitted.
pub fn activity_ratio(log: &MessageLog, bin: Minute) -> Result<Vec<RatioBin>> {
    if bin <= 0 {
        return Err(Error::Config(format!("bin width must be positive, got {bin}")));
    }
    let mut bins: BTreeMap<Minute, (u64, BTreeSet<&str>)> = BTreeMap::new();
    for m in log.messages() {
        let start = m.timestamp.div_euclid(bin) * bin;
        let entry = bins.entry(start).or_default();
        entry.0 += 1;
        entry.1.insert(&m.user_id);
    }
    Ok(bins
        .into_iter()
        .map(|(bin_start, (messages, users))| RatioBin {
            bin_start,
            messages,
            active_users: users.len() as u64,
            ratio: messages as f64 / users.len() as f64,
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DayPeriod {
    /// 00:00 to 05:59
    EarlyHours,
    /// 06:00 to 11:59
    Morning,
    /// 12:00 to 17:59
    Afternoon,
    /// 18:00 to 23:59
    Evening,
}

impl DayPeriod {
    pub const ALL: [DayPeriod; 4] = [
        DayPeriod::EarlyHours,
        DayPeriod::Morning,
        DayPeriod::Afternoon,
        DayPeriod::Evening,
    ];

    /// Period of a UTC minute seen at local offset `tz_offset` (local − UTC).
    pub fn of(utc_minute: Minute, tz_offset: Minute) -> Self {
        let local = (utc_minute + tz_offset).rem_euclid(MINUTES_PER_DAY);
        Self::ALL[(local / (6 * 60)) as usize]
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            DayPeriod::EarlyHours => "early_hours",
            DayPeriod::Morning => "morning",
            DayPeriod::Afternoon => "afternoon",
            DayPeriod::Evening => "evening",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DayPeriodStats {
    pub period: DayPeriod,
    /// Absent when no IAT fell into the period.
    pub mean_iat_min: Option<f64>,
    pub sample_count: u64,
}

/// Mean IAT per period of the day. Each gap belongs to the period of its
/// earlier message.
pub fn day_period_iat(log: &MessageLog, tz_offset: Minute) -> [DayPeriodStats; 4] {
    let mut sums = [0i64; 4];
    let mut counts = [0u64; 4];
    let ts: Vec<Minute> = log.timestamps().collect();
    for w in ts.windows(2) {
        let p = DayPeriod::of(w[0], tz_offset).index();
        sums[p] += w[1] - w[0];
        counts[p] += 1;
    }
    DayPeriod::ALL.map(|period| {
        let i = period.index();
        DayPeriodStats {
            period,
            mean_iat_min: (counts[i] > 0).then(|| sums[i] as f64 / counts[i] as f64),
            sample_count: counts[i],
        }
    })
}

/// Per-flag message counts. Flags overlap, so the four counts may add up to
/// more than `messages`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FlagTally {
    pub messages: u64,
    pub text: u64,
    pub media: u64,
    pub emoji: u64,
    pub link: u64,
}

impl FlagTally {
    fn add(&mut self, f: ContentFlags) {
        self.messages += 1;
        self.text += u64::from(f.has_text);
        self.media += u64::from(f.has_media);
        self.emoji += u64::from(f.has_emoji);
        self.link += u64::from(f.has_link);
    }

    pub fn counts(&self) -> [u64; 4] {
        [self.text, self.media, self.emoji, self.link]
    }

    /// Share of messages carrying each flag, in percent, in
    /// `[text, media, emoji, link]` order. All zero for an empty tally.
    pub fn percentages(&self) -> [f64; 4] {
        self.counts().map(|c| {
            if self.messages == 0 {
                0.0
            } else {
                100.0 * c as f64 / self.messages as f64
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContentBreakdown {
    pub overall: FlagTally,
    pub by_period: [(DayPeriod, FlagTally); 4],
}

pub fn content_breakdown(log: &MessageLog, tz_offset: Minute) -> ContentBreakdown {
    let mut overall = FlagTally::default();
    let mut by_period = DayPeriod::ALL.map(|p| (p, FlagTally::default()));
    for m in log.messages() {
        overall.add(m.content);
        by_period[DayPeriod::of(m.timestamp, tz_offset).index()].1.add(m.content);
    }
    ContentBreakdown { overall, by_period }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UserMetrics {
    pub user_id: String,
    pub msg_count: u64,
    pub msg_pct: f64,
    pub group_session_count: u64,
    pub group_session_pct: f64,
    pub user_session_count: u64,
}

fn pct(part: u64, whole: u64) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

/// Per active user: messages, share of messages, group sessions joined,
/// share of group sessions and own session count. Sorted by user id.
pub fn user_metrics(
    log: &MessageLog,
    user_sessions: &[UserSession],
    group_sessions: &[GroupSession],
) -> Vec<UserMetrics> {
    #[derive(Default)]
    struct Acc {
        msgs: u64,
        group_sessions: u64,
        user_sessions: u64,
    }
    let mut acc: BTreeMap<&str, Acc> = BTreeMap::new();
    for m in log.messages() {
        acc.entry(&m.user_id).or_default().msgs += 1;
    }
    for gs in group_sessions {
        for u in gs.per_user_counts.keys() {
            acc.entry(u).or_default().group_sessions += 1;
        }
    }
    for us in user_sessions {
        acc.entry(&us.user_id).or_default().user_sessions += 1;
    }
    let total_msgs = log.len() as u64;
    let total_gs = group_sessions.len() as u64;
    acc.into_iter()
        .map(|(user, a)| UserMetrics {
            user_id: user.to_owned(),
            msg_count: a.msgs,
            msg_pct: pct(a.msgs, total_msgs),
            group_session_count: a.group_sessions,
            group_session_pct: pct(a.group_sessions, total_gs),
            user_session_count: a.user_sessions,
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SessionSize {
    pub msg_count: u64,
    pub duration_min: Minute,
}

pub fn user_session_metrics(user_sessions: &[UserSession]) -> Vec<SessionSize> {
    user_sessions
        .iter()
        .map(|s| SessionSize {
            msg_count: s.message_count() as u64,
            duration_min: s.duration(),
        })
        .collect()
}

/// Silence between consecutive sessions of the same user (end to next
/// start), grouped by user id and chronological within a user.
pub fn user_toff(user_sessions: &[UserSession]) -> Vec<Minute> {
    let mut by_user: BTreeMap<&str, Vec<(Minute, Minute)>> = BTreeMap::new();
    for s in user_sessions {
        by_user.entry(&s.user_id).or_default().push((s.start, s.end));
    }
    by_user
        .into_values()
        .flat_map(|mut spans| {
            spans.sort_unstable();
            spans.windows(2).map(|w| w[1].0 - w[0].1).collect::<Vec<_>>()
        })
        .collect()
}

/// Silence between consecutive group sessions.
pub fn group_toff(group_sessions: &[GroupSession]) -> Vec<Minute> {
    group_sessions.windows(2).map(|w| w[1].start - w[0].end).collect()
}

/// Shannon entropy (base 2) of the shares in `counts`, divided by
/// `log2(participants)`. Zero counts are not participants. A single
/// participant yields 0: one speaker is total dominance.
pub fn normalized_entropy<T: Scalar>(counts: impl IntoIterator<Item = u64>) -> Result<T> {
    let counts: Vec<u64> = counts.into_iter().filter(|c| *c > 0).collect();
    if counts.is_empty() {
        return Err(Error::EmptyInput("entropy of an empty session"));
    }
    if counts.len() == 1 {
        return Ok(T::zero());
    }
    let total = T::of(counts.iter().sum::<u64>());
    let h = counts
        .iter()
        .map(|&c| {
            let p = T::of(c) / total;
            -p * p.log2()
        })
        .fold(T::zero(), |a, b| a + b);
    Ok((h / T::of(counts.len()).log2()).max(T::zero()).min(T::one()))
}

pub fn session_entropy<T: Scalar>(gs: &GroupSession) -> Result<T> {
    normalized_entropy(gs.per_user_counts.values().copied())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupSessionMetrics {
    pub start: Minute,
    pub msg_count: u64,
    pub msg_coverage_pct: f64,
    pub user_count: u64,
    pub user_coverage_pct: f64,
    pub entropy_norm: f64,
    pub duration_min: Minute,
}

pub fn group_session_metrics(
    group_sessions: &[GroupSession],
    active_user_count: usize,
    total_messages: usize,
) -> Result<Vec<GroupSessionMetrics>> {
    group_sessions
        .iter()
        .map(|gs| {
            Ok(GroupSessionMetrics {
                start: gs.start,
                msg_count: gs.message_count as u64,
                msg_coverage_pct: pct(gs.message_count as u64, total_messages as u64),
                user_count: gs.user_count() as u64,
                user_coverage_pct: pct(gs.user_count() as u64, active_user_count as u64),
                entropy_norm: session_entropy(gs)?,
                duration_min: gs.duration(),
            })
        })
        .collect()
}
