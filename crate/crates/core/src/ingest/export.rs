//! Parser for line-oriented chat exports such as
//! `12/10/2017, 14:33 - Alice: bom dia`.

use std::io::BufRead;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::classify::{classify_content, text_length};
use super::format::FormatConfig;
use super::model::{Message, MessageLog, Minute};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedLine {
    pub line: usize,
    pub reason: String,
}

/// Lines that did not become messages.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipReport {
    /// Join/leave/subject-change style lines (a header without a speaker).
    pub system_lines: usize,
    pub skipped: Vec<SkippedLine>,
}

#[derive(Clone, Debug)]
pub struct ParsedExport {
    pub log: MessageLog,
    pub skips: SkipReport,
}

enum Header<'a> {
    Post { at: Minute, speaker: &'a str, payload: &'a str },
    System,
}

struct Pending {
    at: Minute,
    speaker: String,
    text: String,
}

enum Last {
    Nothing,
    Post(Pending),
    System,
}

fn parse_header<'a>(line: &'a str, fmt: &FormatConfig) -> Option<Header<'a>> {
    let rest = line.strip_prefix(fmt.timestamp_prefix.as_str())?;
    let cut = rest.find(fmt.timestamp_suffix.as_str())?;
    let stamp = rest[..cut].trim();
    let body = &rest[cut + fmt.timestamp_suffix.len()..];
    let local = NaiveDateTime::parse_from_str(stamp, &fmt.timestamp_format).ok()?;
    // Whole minutes only: seconds are truncated.
    let local_min = local.and_utc().timestamp().div_euclid(60);
    match body.split_once(fmt.speaker_delimiter.as_str()) {
        Some((speaker, payload)) if !speaker.trim().is_empty() => Some(Header::Post {
            at: local_min - fmt.tz_offset_minutes,
            speaker: speaker.trim(),
            payload,
        }),
        _ => Some(Header::System),
    }
}

fn finish(p: Pending, group_id: &str, fmt: &FormatConfig) -> Message {
    let text = p.text.trim_end();
    Message::new(
        group_id,
        p.speaker,
        p.at,
        classify_content(text, fmt),
        text_length(text, fmt),
    )
}

/// Reads an export into a message log.
///
/// Lines that do not start with a timestamp continue the preceding post and
/// are joined to it with a newline. The raw text is discarded once the post
/// is classified. Speaker names are kept verbatim; see
/// [`super::anonymize`].
pub fn parse_export<R: BufRead>(input: R, group_id: &str, fmt: &FormatConfig) -> Result<ParsedExport> {
    let mut skips = SkipReport::default();
    let mut messages = Vec::new();
    let mut last = Last::Nothing;

    for (idx, line) in input.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = if lineno == 1 {
            line.trim_start_matches('\u{feff}').to_owned()
        } else {
            line
        };
        let line = line.trim_end_matches('\r');

        match parse_header(line, fmt) {
            Some(header) => {
                if let Last::Post(p) = std::mem::replace(&mut last, Last::Nothing) {
                    messages.push(finish(p, group_id, fmt));
                }
                last = match header {
                    Header::Post { at, speaker, payload } => Last::Post(Pending {
                        at,
                        speaker: speaker.to_owned(),
                        text: payload.to_owned(),
                    }),
                    Header::System => {
                        skips.system_lines += 1;
                        Last::System
                    }
                };
            }
            None if lineno == 1 => {
                return Err(Error::Parse {
                    line: 1,
                    reason: "first line does not start with a timestamp".into(),
                });
            }
            None => match &mut last {
                Last::Post(p) => {
                    p.text.push('\n');
                    p.text.push_str(line);
                }
                Last::System | Last::Nothing => skips.skipped.push(SkippedLine {
                    line: lineno,
                    reason: "continuation line with no preceding message".into(),
                }),
            },
        }
    }
    if let Last::Post(p) = last {
        messages.push(finish(p, group_id, fmt));
    }

    Ok(ParsedExport {
        log: MessageLog::new(group_id, messages),
        skips,
    })
}

/// Writes a log back out in export layout with placeholder payloads that
/// reproduce each message's content flags. Used to build fixture corpora
/// from synthetic traces; the original text length is not preserved.
pub fn render_export(log: &MessageLog, fmt: &FormatConfig) -> Result<String> {
    use std::fmt::Write;

    const FILLER: &str = "lorem ipsum dolor sit amet consectetur adipiscing elit sed do eiusmod";
    let mut out = String::new();
    for (i, m) in log.messages().iter().enumerate() {
        let local = (m.timestamp + fmt.tz_offset_minutes) * 60;
        let at = chrono::DateTime::from_timestamp(local, 0)
            .ok_or_else(|| Error::Config(format!("minute {} out of range", m.timestamp)))?
            .naive_utc();
        let mut parts: Vec<String> = Vec::new();
        if m.content.has_text {
            let n = (m.text_len as usize).clamp(1, FILLER.len());
            parts.push(FILLER[..n].trim_end().to_owned());
        }
        if m.content.has_link {
            parts.push(format!("https://example.org/{i}"));
        }
        if m.content.has_emoji {
            parts.push("\u{1F600}".to_owned());
        }
        if m.content.has_media {
            let marker = fmt
                .media_markers
                .first()
                .ok_or_else(|| Error::Config("no media marker configured".into()))?;
            parts.push(marker.clone());
        }
        let _ = writeln!(
            out,
            "{}{}{}{}{}{}",
            fmt.timestamp_prefix,
            at.format(&fmt.timestamp_format),
            fmt.timestamp_suffix,
            m.user_id,
            fmt.speaker_delimiter,
            parts.join(" ")
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::ContentFlags;
    use chrono::NaiveDate;

    fn parse(text: &str) -> Result<ParsedExport> {
        parse_export(text.as_bytes(), "g", &FormatConfig::default())
    }

    fn minutes(y: i32, mo: u32, d: u32, h: u32, mi: u32) -> Minute {
        NaiveDate::from_ymd_opt(y, mo, d)
            .unwrap()
            .and_hms_opt(h, mi, 0)
            .unwrap()
            .and_utc()
            .timestamp()
            / 60
    }

    #[test]
    fn single_entry() {
        let out = parse("12/10/2017, 14:33 - Alice: bom dia\n").unwrap();
        let m = &out.log.messages()[0];
        assert_eq!(m.timestamp, minutes(2017, 10, 12, 14, 33));
        assert_eq!(m.user_id, "Alice");
        assert_eq!(m.content, ContentFlags::TEXT);
        assert_eq!(m.text_len, 7);
    }

    #[test]
    fn continuation_lines_join() {
        let out = parse("12/10/2017, 14:33 - Alice: bom dia\ne boa tarde\n").unwrap();
        assert_eq!(out.log.len(), 1);
        assert_eq!(out.log.messages()[0].text_len, 19);
    }

    #[test]
    fn garbage_first_line() {
        match parse("random garbage\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_input() {
        let out = parse("").unwrap();
        assert!(out.log.is_empty());
        assert_eq!(out.skips, SkipReport::default());
    }

    #[test]
    fn system_lines_dropped_and_orphans_reported() {
        let text = "12/10/2017, 14:00 - Bob created group \"x\"\n\
                    stray line\n\
                    12/10/2017, 14:01 - Alice: <Media omitted>\n\
                    12/10/2017, 14:02 - Carol joined using this group's invite link\n";
        let out = parse(text).unwrap();
        assert_eq!(out.log.len(), 1);
        assert_eq!(out.log.messages()[0].content, ContentFlags::MEDIA);
        assert_eq!(out.skips.system_lines, 2);
        assert_eq!(out.skips.skipped.len(), 1);
        assert_eq!(out.skips.skipped[0].line, 2);
    }

    #[test]
    fn timezone_and_seconds() {
        let fmt = FormatConfig {
            timestamp_prefix: "[".into(),
            timestamp_format: "%d/%m/%Y, %H:%M:%S".into(),
            timestamp_suffix: "] ".into(),
            tz_offset_minutes: -180,
            ..FormatConfig::default()
        };
        let out = parse_export("[12/10/2017, 14:33:59] Alice: oi\n".as_bytes(), "g", &fmt).unwrap();
        assert_eq!(out.log.messages()[0].timestamp, minutes(2017, 10, 12, 17, 33));
    }

    #[test]
    fn render_then_parse_keeps_flags() {
        let fmt = FormatConfig::default();
        let flags = [
            ContentFlags::TEXT,
            ContentFlags::MEDIA,
            ContentFlags::EMOJI.union(ContentFlags::LINK),
            ContentFlags::TEXT.union(ContentFlags::MEDIA).union(ContentFlags::EMOJI),
        ];
        let msgs = flags
            .iter()
            .enumerate()
            .map(|(i, f)| Message::new("g", format!("u{i}"), 25_000_000 + i as i64 * 7, *f, 12))
            .collect();
        let log = MessageLog::new("g", msgs);
        let text = render_export(&log, &fmt).unwrap();
        let back = parse_export(text.as_bytes(), "g", &fmt).unwrap().log;
        assert_eq!(back.len(), log.len());
        for (a, b) in back.messages().iter().zip(log.messages()) {
            assert_eq!(a.timestamp, b.timestamp);
            assert_eq!(a.user_id, b.user_id);
            assert_eq!(a.content, b.content);
        }
    }

    #[test]
    fn out_of_order_lines_are_sorted_stably() {
        let text = "12/10/2017, 14:33 - B: x\n12/10/2017, 14:30 - A: y\n12/10/2017, 14:33 - C: z\n";
        let out = parse(text).unwrap();
        let users: Vec<_> = out.log.messages().iter().map(|m| m.user_id.clone()).collect();
        assert_eq!(users, ["A", "B", "C"]);
    }
}
