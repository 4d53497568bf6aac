//! User roles from the (share of group sessions, share of messages) plane.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Roster;
use crate::metrics::UserMetrics;

/// Cutoffs in percent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoleThresholds {
    /// Users in more than this share of group sessions are frequent participants.
    pub session_pct_high: f64,
    /// Below this share of messages a frequent participant is audience.
    pub msg_pct_low: f64,
    /// At or above this share of messages a user is a heavy poster.
    pub msg_pct_high: f64,
}

impl Default for RoleThresholds {
    fn default() -> Self {
        Self {
            session_pct_high: 10.0,
            msg_pct_low: 0.1,
            msg_pct_high: 5.0,
        }
    }
}

impl RoleThresholds {
    pub fn validate(&self) -> Result<()> {
        let in_range = |v: f64| v > 0.0 && v < 100.0;
        if !(in_range(self.session_pct_high) && in_range(self.msg_pct_low) && in_range(self.msg_pct_high)) {
            return Err(Error::Config(format!("role thresholds must lie in (0, 100): {self:?}")));
        }
        if self.msg_pct_low >= self.msg_pct_high {
            return Err(Error::Config(format!(
                "msg_pct_low ({}) must be below msg_pct_high ({})",
                self.msg_pct_low, self.msg_pct_high
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserRole {
    /// Many sessions, many messages.
    Host,
    /// Many sessions, almost no messages.
    InterestedAudience,
    /// Heavy poster in few sessions, or a frequent participant with a
    /// moderate share of messages.
    Opinionated,
    /// Everyone else who posted.
    Casual,
    /// Roster member who never posted.
    Passive,
}

impl UserRole {
    pub fn name(self) -> &'static str {
        match self {
            UserRole::Host => "host",
            UserRole::InterestedAudience => "interested_audience",
            UserRole::Opinionated => "opinionated",
            UserRole::Casual => "casual",
            UserRole::Passive => "passive",
        }
    }
}

/// Role of one active user.
///
/// | sessions \ messages | `< low`             | `[low, high)` | `>= high`   |
/// |---------------------|---------------------|---------------|-------------|
/// | `> session_high`    | interested audience | opinionated   | host        |
/// | otherwise           | casual              | casual        | opinionated |
pub fn classify_user(m: &UserMetrics, th: &RoleThresholds) -> UserRole {
    if m.msg_count == 0 {
        return UserRole::Passive;
    }
    let frequent = m.group_session_pct > th.session_pct_high;
    match (frequent, m.msg_pct) {
        (true, p) if p < th.msg_pct_low => UserRole::InterestedAudience,
        (true, p) if p >= th.msg_pct_high => UserRole::Host,
        (true, _) => UserRole::Opinionated,
        (false, p) if p >= th.msg_pct_high => UserRole::Opinionated,
        (false, _) => UserRole::Casual,
    }
}

/// Assigns a role to every sender and, when a roster is given, every member
/// who never posted (passive).
pub fn classify_users(
    metrics: &[UserMetrics],
    roster: Option<&Roster>,
    th: &RoleThresholds,
) -> Result<BTreeMap<String, UserRole>> {
    th.validate()?;
    let mut roles: BTreeMap<String, UserRole> = metrics
        .iter()
        .map(|m| (m.user_id.clone(), classify_user(m, th)))
        .collect();
    if let Some(r) = roster {
        for member in &r.members {
            roles.entry(member.clone()).or_insert(UserRole::Passive);
        }
    }
    Ok(roles)
}
