use std::collections::BTreeSet;
use std::fmt;

use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minutes since the Unix epoch. The model has no sub-minute resolution.
pub type Minute = i64;

/// Which kinds of content a message carries. Flags are independent; a
/// message may combine several.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContentFlags {
    pub has_text: bool,
    pub has_media: bool,
    pub has_emoji: bool,
    pub has_link: bool,
}

/// Canonical label of each flag, in serialization order.
pub const FLAG_LABELS: [&str; 4] = ["text", "media", "emoji", "link"];

impl ContentFlags {
    pub const TEXT: Self = Self::only(0);
    pub const MEDIA: Self = Self::only(1);
    pub const EMOJI: Self = Self::only(2);
    pub const LINK: Self = Self::only(3);

    const fn only(i: usize) -> Self {
        Self {
            has_text: i == 0,
            has_media: i == 1,
            has_emoji: i == 2,
            has_link: i == 3,
        }
    }

    pub fn as_array(&self) -> [bool; 4] {
        [self.has_text, self.has_media, self.has_emoji, self.has_link]
    }

    pub fn from_array(a: [bool; 4]) -> Self {
        Self {
            has_text: a[0],
            has_media: a[1],
            has_emoji: a[2],
            has_link: a[3],
        }
    }

    pub fn union(self, other: Self) -> Self {
        let (a, b) = (self.as_array(), other.as_array());
        Self::from_array([a[0] | b[0], a[1] | b[1], a[2] | b[2], a[3] | b[3]])
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn count(&self) -> usize {
        self.as_array().iter().filter(|f| **f).count()
    }

    pub fn labels(&self) -> impl Iterator<Item = &'static str> {
        let a = self.as_array();
        FLAG_LABELS
            .iter()
            .zip(a)
            .filter_map(|(l, set)| set.then_some(*l))
    }

    pub fn from_label(label: &str) -> Option<Self> {
        FLAG_LABELS
            .iter()
            .position(|l| *l == label)
            .map(Self::only)
    }
}

impl Serialize for ContentFlags {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.count()))?;
        for label in self.labels() {
            seq.serialize_element(label)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for ContentFlags {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct FlagsVisitor;

        impl<'de> Visitor<'de> for FlagsVisitor {
            type Value = ContentFlags;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "an array of content labels {FLAG_LABELS:?}")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<Self::Value, A::Error> {
                let mut flags = ContentFlags::default();
                while let Some(label) = seq.next_element::<String>()? {
                    let f = ContentFlags::from_label(&label)
                        .ok_or_else(|| de::Error::unknown_variant(&label, &FLAG_LABELS))?;
                    flags = flags.union(f);
                }
                Ok(flags)
            }
        }

        deserializer.deserialize_seq(FlagsVisitor)
    }
}

/// One user post. Field order matches the canonical record layout.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    #[serde(rename = "ts_min")]
    pub timestamp: Minute,
    #[serde(rename = "user")]
    pub user_id: String,
    #[serde(rename = "group")]
    pub group_id: String,
    #[serde(rename = "flags")]
    pub content: ContentFlags,
    pub text_len: u32,
}

impl Message {
    /// Builds a message; an empty flag set is recorded as (empty) text so that
    /// every message carries at least one flag.
    pub fn new(
        group_id: impl Into<String>,
        user_id: impl Into<String>,
        timestamp: Minute,
        content: ContentFlags,
        text_len: u32,
    ) -> Self {
        let content = if content.is_empty() {
            ContentFlags::TEXT
        } else {
            content
        };
        Self {
            group_id: group_id.into(),
            user_id: user_id.into(),
            timestamp,
            content,
            text_len,
        }
    }
}

/// Inclusive observation window in minutes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Period {
    pub start: Minute,
    pub end: Minute,
}

impl Period {
    pub fn contains(&self, t: Minute) -> bool {
        self.start <= t && t <= self.end
    }

    pub fn len_minutes(&self) -> Minute {
        self.end - self.start
    }
}

/// The time-ordered messages of one group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MessageLog {
    pub group_id: String,
    messages: Vec<Message>,
    period: Option<Period>,
}

impl MessageLog {
    /// Sorts the messages by timestamp (stable, so same-minute messages keep
    /// input order) and spans the period over them.
    pub fn new(group_id: impl Into<String>, mut messages: Vec<Message>) -> Self {
        messages.sort_by_key(|m| m.timestamp);
        let period = match (messages.first(), messages.last()) {
            (Some(first), Some(last)) => Some(Period {
                start: first.timestamp,
                end: last.timestamp,
            }),
            _ => None,
        };
        Self {
            group_id: group_id.into(),
            messages,
            period,
        }
    }

    pub fn empty(group_id: impl Into<String>) -> Self {
        Self::new(group_id, Vec::new())
    }

    /// Widens the observation window. Every message must fall inside it.
    pub fn with_period(mut self, period: Period) -> Result<Self> {
        if period.start > period.end {
            return Err(Error::Config(format!(
                "period start {} after end {}",
                period.start, period.end
            )));
        }
        if let Some(m) = self.messages.iter().find(|m| !period.contains(m.timestamp)) {
            return Err(Error::Config(format!(
                "message at minute {} outside period [{}, {}]",
                m.timestamp, period.start, period.end
            )));
        }
        self.period = Some(period);
        Ok(self)
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn period(&self) -> Option<Period> {
        self.period
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn timestamps(&self) -> impl Iterator<Item = Minute> + '_ {
        self.messages.iter().map(|m| m.timestamp)
    }

    /// Distinct users that posted at least once.
    pub fn senders(&self) -> BTreeSet<&str> {
        self.messages.iter().map(|m| m.user_id.as_str()).collect()
    }

    pub(crate) fn map_users(self, mut f: impl FnMut(&str) -> String) -> Self {
        let messages = self
            .messages
            .into_iter()
            .map(|m| Message {
                user_id: f(&m.user_id),
                ..m
            })
            .collect();
        Self { messages, ..self }
    }
}
