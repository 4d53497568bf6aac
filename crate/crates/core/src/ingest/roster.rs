use std::collections::BTreeSet;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::anonymize::pseudonym;
use super::model::MessageLog;
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RosterFile {
    group: String,
    members: Vec<String>,
    #[serde(default)]
    admins: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    category: Option<String>,
}

/// Group membership at collection time. `admins ⊆ members`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Roster {
    pub group_id: String,
    pub members: BTreeSet<String>,
    pub admins: BTreeSet<String>,
    pub category: Option<String>,
}

impl Roster {
    pub fn new(
        group_id: impl Into<String>,
        members: impl IntoIterator<Item = String>,
        admins: impl IntoIterator<Item = String>,
        category: Option<String>,
    ) -> Result<Self> {
        let mut set = BTreeSet::new();
        for m in members {
            if !set.insert(m.clone()) {
                return Err(Error::Roster(format!("duplicate member {m:?}")));
            }
        }
        let admins: BTreeSet<String> = admins.into_iter().collect();
        if let Some(a) = admins.iter().find(|a| !set.contains(*a)) {
            return Err(Error::Roster(format!("admin {a:?} is not a member")));
        }
        Ok(Self {
            group_id: group_id.into(),
            members: set,
            admins,
            category,
        })
    }

    /// Members that never posted in `log`.
    pub fn passive_members<'a>(&'a self, log: &MessageLog) -> impl Iterator<Item = &'a str> {
        let senders: BTreeSet<String> = log.senders().into_iter().map(str::to_owned).collect();
        self.members
            .iter()
            .filter(move |m| !senders.contains(*m))
            .map(String::as_str)
    }

    pub fn passive_count(&self, log: &MessageLog) -> usize {
        self.passive_members(log).count()
    }

    /// Same pseudonymization as [`super::anonymize`], so the roster lines up
    /// with an anonymized log.
    pub fn anonymize(&self, salt: &[u8]) -> Self {
        let map = |s: &BTreeSet<String>| s.iter().map(|m| pseudonym(salt, m)).collect();
        Self {
            group_id: self.group_id.clone(),
            members: map(&self.members),
            admins: map(&self.admins),
            category: self.category.clone(),
        }
    }
}

impl Roster {
    /// Writes the roster in the same layout [`load_roster`] reads.
    pub fn write_json<W: std::io::Write>(&self, out: W) -> Result<()> {
        let file = RosterFile {
            group: self.group_id.clone(),
            members: self.members.iter().cloned().collect(),
            admins: self.admins.iter().cloned().collect(),
            category: self.category.clone(),
        };
        serde_json::to_writer_pretty(out, &file)?;
        Ok(())
    }
}

/// Reads a roster document: `{"group", "members", "admins", "category"?}`.
pub fn load_roster<R: Read>(input: R) -> Result<Roster> {
    let file: RosterFile = serde_json::from_reader(input)?;
    Roster::new(file.group, file.members, file.admins, file.category)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{ContentFlags, Message};

    fn log_with_senders(n: usize) -> MessageLog {
        let msgs = (0..n)
            .map(|i| Message::new("N1", format!("m{i}"), i as i64, ContentFlags::TEXT, 1))
            .collect();
        MessageLog::new("N1", msgs)
    }

    #[test]
    fn passive_count_matches_n1() {
        // 137 members of whom 70 posted.
        let members: Vec<String> = (0..137).map(|i| format!("m{i}")).collect();
        let doc = serde_json::json!({ "group": "N1", "members": members, "admins": ["m0"] });
        let roster = load_roster(doc.to_string().as_bytes()).unwrap();
        assert_eq!(roster.passive_count(&log_with_senders(70)), 67);
    }

    #[test]
    fn empty_members() {
        let roster = load_roster(r#"{"group":"g","members":[],"admins":[]}"#.as_bytes()).unwrap();
        assert_eq!(roster.passive_count(&log_with_senders(5)), 0);
    }

    #[test]
    fn unknown_admin_rejected() {
        let err = load_roster(r#"{"group":"g","members":["a"],"admins":["b"]}"#.as_bytes());
        assert!(matches!(err, Err(Error::Roster(_))));
    }

    #[test]
    fn duplicate_member_rejected() {
        let err = load_roster(r#"{"group":"g","members":["a","a"],"admins":[]}"#.as_bytes());
        assert!(matches!(err, Err(Error::Roster(_))));
    }

    #[test]
    fn category_is_optional() {
        let r = load_roster(r#"{"group":"g","members":["a"],"admins":[],"category":"political"}"#.as_bytes())
            .unwrap();
        assert_eq!(r.category.as_deref(), Some("political"));
    }

    #[test]
    fn write_then_load() {
        let r = Roster::new("g", ["b".to_owned(), "a".to_owned()], ["a".to_owned()], Some("x".into())).unwrap();
        let mut buf = Vec::new();
        r.write_json(&mut buf).unwrap();
        assert_eq!(load_roster(buf.as_slice()).unwrap(), r);
    }

    #[test]
    fn anonymized_roster_lines_up_with_log() {
        let roster = Roster::new("g", ["m0".to_owned(), "x".to_owned()], [], None).unwrap();
        let log = crate::ingest::anonymize(log_with_senders(1), b"k");
        assert_eq!(roster.anonymize(b"k").passive_count(&log), 1);
        assert_eq!(roster.passive_count(&log), 2);
    }
}
