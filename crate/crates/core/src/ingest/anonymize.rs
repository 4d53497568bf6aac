use hmac::{Hmac, Mac};
use sha2::Sha256;

use super::model::MessageLog;

/// Keyed one-way pseudonym for a raw identity (name or phone number).
pub fn pseudonym(salt: &[u8], raw: &str) -> String {
    let mut mac = Hmac::<Sha256>::new_from_slice(salt).expect("hmac accepts any key length");
    mac.update(raw.as_bytes());
    let digest = mac.finalize().into_bytes();
    format!("u{}", hex::encode(&digest[..8]))
}

/// Replaces every user id with its pseudonym under `salt`. Ordering and
/// timestamps are untouched.
pub fn anonymize(log: MessageLog, salt: &[u8]) -> MessageLog {
    log.map_users(|raw| pseudonym(salt, raw))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{ContentFlags, Message};

    fn log() -> MessageLog {
        MessageLog::new(
            "g",
            vec![
                Message::new("g", "+55 31 99999-0000", 1, ContentFlags::TEXT, 3),
                Message::new("g", "+55 31 98888-1111", 2, ContentFlags::TEXT, 3),
                Message::new("g", "+55 31 99999-0000", 3, ContentFlags::MEDIA, 0),
            ],
        )
    }

    #[test]
    fn same_identity_same_pseudonym() {
        let a = anonymize(log(), b"salt");
        let m = a.messages();
        assert_eq!(m[0].user_id, m[2].user_id);
        assert_ne!(m[0].user_id, m[1].user_id);
        assert!(!m[0].user_id.contains("9999"));
        assert_eq!(a.timestamps().collect::<Vec<_>>(), [1, 2, 3]);
    }

    #[test]
    fn salt_changes_pseudonym() {
        assert_ne!(pseudonym(b"a", "alice"), pseudonym(b"b", "alice"));
        assert_eq!(pseudonym(b"a", "alice"), pseudonym(b"a", "alice"));
    }

    #[test]
    fn empty_log() {
        let out = anonymize(MessageLog::empty("g"), b"s");
        assert!(out.is_empty());
    }
}
