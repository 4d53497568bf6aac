//! Canonical record format: one JSON object per line,
//! `{"ts_min","user","group","flags","text_len"}`.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::Serialize;

use super::model::{Message, MessageLog};
use crate::error::{Error, Result};

pub fn write_records<W: Write, T: Serialize>(mut out: W, records: impl IntoIterator<Item = T>) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, &r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_canonical<W: Write>(out: W, log: &MessageLog) -> Result<()> {
    write_records(out, log.messages())
}

/// Reads canonical records, one log per distinct group id. An input with no
/// records yields a single empty log named `default_group`.
pub fn read_canonical<R: BufRead>(input: R, default_group: &str) -> Result<Vec<MessageLog>> {
    let mut groups: BTreeMap<String, Vec<Message>> = BTreeMap::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let msg: Message = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: idx + 1,
            reason: e.to_string(),
        })?;
        let msg = Message::new(msg.group_id, msg.user_id, msg.timestamp, msg.content, msg.text_len);
        groups.entry(msg.group_id.clone()).or_default().push(msg);
    }
    if groups.is_empty() {
        return Ok(vec![MessageLog::empty(default_group)]);
    }
    Ok(groups.into_iter().map(|(g, msgs)| MessageLog::new(g, msgs)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{anonymize, ContentFlags};
    use proptest::prelude::*;

    #[test]
    fn record_layout() {
        let log = MessageLog::new(
            "g1",
            vec![Message::new("g1", "u1", 42, ContentFlags::TEXT.union(ContentFlags::EMOJI), 5)],
        );
        let mut buf = Vec::new();
        write_canonical(&mut buf, &log).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "{\"ts_min\":42,\"user\":\"u1\",\"group\":\"g1\",\"flags\":[\"text\",\"emoji\"],\"text_len\":5}\n"
        );
    }

    #[test]
    fn empty_input_gives_empty_default_group() {
        let logs = read_canonical("".as_bytes(), "fallback").unwrap();
        assert_eq!(logs.len(), 1);
        assert_eq!(logs[0].group_id, "fallback");
        assert!(logs[0].is_empty());
    }

    #[test]
    fn bad_record_names_line() {
        let text = "{\"ts_min\":1,\"user\":\"a\",\"group\":\"g\",\"flags\":[\"text\"],\"text_len\":1}\nnope\n";
        assert!(matches!(read_canonical(text.as_bytes(), "g"), Err(Error::Parse { line: 2, .. })));
    }

    fn arb_log() -> impl Strategy<Value = MessageLog> {
        prop::collection::vec((0i64..10_000, 0usize..6, 1u8..16, 0u32..500), 0..40).prop_map(|rows| {
            let msgs = rows
                .into_iter()
                .map(|(t, u, f, len)| {
                    let flags = ContentFlags::from_array([f & 1 != 0, f & 2 != 0, f & 4 != 0, f & 8 != 0]);
                    Message::new("grp", format!("user{u}"), t, flags, len)
                })
                .collect();
            MessageLog::new("grp", msgs)
        })
    }

    proptest! {
        #[test]
        fn anonymized_round_trip_is_lossless(log in arb_log(), salt in prop::collection::vec(any::<u8>(), 0..16)) {
            let log = anonymize(log, &salt);
            let mut buf = Vec::new();
            write_canonical(&mut buf, &log).unwrap();
            let back = read_canonical(buf.as_slice(), "grp").unwrap();
            prop_assert_eq!(back.len(), 1);
            prop_assert_eq!(&back[0], &log);
        }
    }
}
