//! User and group sessions, the silence-gap histogram, and the elbow rule
//! that picks a group threshold from it.
//!
//! A session is a maximal run of messages in which no gap between
//! consecutive messages exceeds the threshold. A gap exactly equal to the
//! threshold stays inside the session.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{MessageLog, Minute};

pub const DEFAULT_USER_THRESHOLD: Minute = 15;
pub const DEFAULT_GROUP_THRESHOLD: Minute = 81;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thresholds {
    pub user: Minute,
    pub group: Minute,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            user: DEFAULT_USER_THRESHOLD,
            group: DEFAULT_GROUP_THRESHOLD,
        }
    }
}

impl Thresholds {
    pub fn new(user: Minute, group: Minute) -> Result<Self> {
        if user <= 0 || group <= 0 {
            return Err(Error::Config(format!(
                "thresholds must be positive (user {user}, group {group})"
            )));
        }
        Ok(Self { user, group })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UserSession {
    pub user_id: String,
    pub group_id: String,
    pub start: Minute,
    pub end: Minute,
    /// Positions in the originating [`MessageLog`].
    pub message_indices: Vec<usize>,
}

impl UserSession {
    pub fn duration(&self) -> Minute {
        self.end - self.start
    }

    pub fn message_count(&self) -> usize {
        self.message_indices.len()
    }

    pub fn covers(&self, t: Minute) -> bool {
        self.start <= t && t <= self.end
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GroupSession {
    pub group_id: String,
    pub start: Minute,
    pub end: Minute,
    /// Group sessions are contiguous in the log: messages
    /// `first_message .. first_message + message_count`.
    pub first_message: usize,
    pub message_count: usize,
    pub per_user_counts: BTreeMap<String, u64>,
}

impl GroupSession {
    pub fn duration(&self) -> Minute {
        self.end - self.start
    }

    pub fn user_count(&self) -> usize {
        self.per_user_counts.len()
    }

    pub fn message_range(&self) -> std::ops::Range<usize> {
        self.first_message..self.first_message + self.message_count
    }
}

/// Splits each user's messages into maximal runs whose internal gaps are all
/// `<= threshold`. Sessions come out ordered by their first message.
pub fn build_user_sessions(log: &MessageLog, threshold: Minute) -> Vec<UserSession> {
    debug_assert!(threshold > 0, "threshold must be positive");
    let mut sessions: Vec<UserSession> = Vec::new();
    let mut open: HashMap<&str, usize> = HashMap::new();
    for (i, m) in log.messages().iter().enumerate() {
        match open.get(m.user_id.as_str()) {
            Some(&s) if m.timestamp - sessions[s].end <= threshold => {
                let session = &mut sessions[s];
                session.end = m.timestamp;
                session.message_indices.push(i);
            }
            _ => {
                open.insert(&m.user_id, sessions.len());
                sessions.push(UserSession {
                    user_id: m.user_id.clone(),
                    group_id: m.group_id.clone(),
                    start: m.timestamp,
                    end: m.timestamp,
                    message_indices: vec![i],
                });
            }
        }
    }
    sessions
}

/// Splits the pooled group stream at every gap `> threshold`.
pub fn build_group_sessions(log: &MessageLog, threshold: Minute) -> Vec<GroupSession> {
    debug_assert!(threshold > 0, "threshold must be positive");
    let mut sessions: Vec<GroupSession> = Vec::new();
    for (i, m) in log.messages().iter().enumerate() {
        let extend = matches!(sessions.last(), Some(s) if m.timestamp - s.end <= threshold);
        if !extend {
            sessions.push(GroupSession {
                group_id: log.group_id.clone(),
                start: m.timestamp,
                end: m.timestamp,
                first_message: i,
                message_count: 0,
                per_user_counts: BTreeMap::new(),
            });
        }
        let s = sessions.last_mut().expect("session just ensured");
        s.end = m.timestamp;
        s.message_count += 1;
        *s.per_user_counts.entry(m.user_id.clone()).or_default() += 1;
    }
    sessions
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapCount {
    pub gap: Minute,
    pub frequency: u64,
}

/// Distinct positive silence gaps with their occurrence counts, ascending by
/// gap.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapHistogram {
    entries: Vec<GapCount>,
}

impl GapHistogram {
    /// Tallies positive gaps; zero and negative values are ignored.
    pub fn from_gaps(gaps: impl IntoIterator<Item = Minute>) -> Self {
        let mut tally: BTreeMap<Minute, u64> = BTreeMap::new();
        for g in gaps.into_iter().filter(|g| *g > 0) {
            *tally.entry(g).or_default() += 1;
        }
        Self {
            entries: tally
                .into_iter()
                .map(|(gap, frequency)| GapCount { gap, frequency })
                .collect(),
        }
    }

    pub fn entries(&self) -> &[GapCount] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sum of two histograms, for a pooled elbow over several groups.
    pub fn merge(&self, other: &Self) -> Self {
        let mut tally: BTreeMap<Minute, u64> = BTreeMap::new();
        for e in self.entries.iter().chain(&other.entries) {
            *tally.entry(e.gap).or_default() += e.frequency;
        }
        Self {
            entries: tally
                .into_iter()
                .map(|(gap, frequency)| GapCount { gap, frequency })
                .collect(),
        }
    }
}

/// Histogram of the positive gaps between consecutive group messages.
pub fn silence_gap_histogram(log: &MessageLog) -> Result<GapHistogram> {
    if log.len() < 2 {
        return Err(Error::InsufficientData("at least two messages are needed for silence gaps"));
    }
    let ts: Vec<Minute> = log.timestamps().collect();
    let hist = GapHistogram::from_gaps(ts.windows(2).map(|w| w[1] - w[0]));
    if hist.is_empty() {
        return Err(Error::InsufficientData("all messages fall in the same minute"));
    }
    Ok(hist)
}

/// Picks the group threshold where the gap-frequency curve meets the
/// identity line.
///
/// Gap (x) and frequency (y) are both min-max normalized to `[0, 1]`; the
/// result is the smallest gap whose point has `y <= x`. The largest gap
/// always qualifies (`x = 1`), so the search cannot fail. With a constant
/// frequency column every `y` is 0 and the smallest gap wins.
pub fn elbow_threshold(hist: &GapHistogram) -> Result<Minute> {
    let entries = hist.entries();
    let (first, last) = match (entries.first(), entries.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::EmptyInput("gap histogram")),
    };
    if entries.len() == 1 {
        return Ok(first.gap);
    }
    // y <= x compared as (f - f_min) * gap_span <= (g - g_min) * freq_span,
    // in integers, so uniform frequency scaling cannot flip a comparison.
    let gap_span = i128::from(last.gap - first.gap);
    let f_min = entries.iter().map(|e| e.frequency).min().unwrap_or(0);
    let f_max = entries.iter().map(|e| e.frequency).max().unwrap_or(0);
    let freq_span = i128::from(f_max - f_min);
    let chosen = entries.iter().find(|e| {
        if freq_span == 0 {
            return true;
        }
        let y_num = i128::from(e.frequency - f_min) * gap_span;
        let x_num = i128::from(e.gap - first.gap) * freq_span;
        y_num <= x_num
    });
    Ok(chosen.unwrap_or(last).gap)
}

/// How per-group elbows combine into one threshold for a set of groups.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElbowAggregation {
    /// Average of the individual elbows, rounded to the nearest minute.
    Mean,
    /// Elbow of the summed histogram.
    Pooled,
}

pub fn aggregate_elbow(hists: &[GapHistogram], mode: ElbowAggregation) -> Result<Minute> {
    if hists.is_empty() {
        return Err(Error::EmptyInput("no histograms to aggregate"));
    }
    match mode {
        ElbowAggregation::Mean => {
            let elbows = hists.iter().map(elbow_threshold).collect::<Result<Vec<_>>>()?;
            let mean = elbows.iter().sum::<Minute>() as f64 / elbows.len() as f64;
            Ok(mean.round() as Minute)
        }
        ElbowAggregation::Pooled => {
            let pooled = hists.iter().fold(GapHistogram::default(), |acc, h| acc.merge(h));
            elbow_threshold(&pooled)
        }
    }
}

/// Number of open user sessions at every minute of a group session.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConcurrencyProfile {
    pub points: Vec<(Minute, usize)>,
    pub max: usize,
}

/// Counts, for each minute in `[gs.start, gs.end]`, the user sessions of the
/// same group whose `[start, end]` covers it.
pub fn concurrency_profile(user_sessions: &[UserSession], gs: &GroupSession) -> ConcurrencyProfile {
    let width = (gs.end - gs.start + 1) as usize;
    let mut delta = vec![0i64; width + 1];
    for s in user_sessions.iter().filter(|s| s.group_id == gs.group_id) {
        let lo = s.start.max(gs.start);
        let hi = s.end.min(gs.end);
        if lo > hi {
            continue;
        }
        delta[(lo - gs.start) as usize] += 1;
        delta[(hi - gs.start) as usize + 1] -= 1;
    }
    let mut running = 0i64;
    let points: Vec<(Minute, usize)> = (0..width)
        .map(|i| {
            running += delta[i];
            (gs.start + i as Minute, running as usize)
        })
        .collect();
    let max = points.iter().map(|p| p.1).max().unwrap_or(0);
    ConcurrencyProfile { points, max }
}
