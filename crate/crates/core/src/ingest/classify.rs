use super::format::FormatConfig;
use super::model::ContentFlags;

const LINK_PREFIXES: [&str; 3] = ["http://", "https://", "www."];

/// Joiners and presentation selectors that glue emoji sequences together.
/// They neither count as text nor on their own as an emoji.
fn is_emoji_glue(c: char) -> bool {
    matches!(c, '\u{200D}' | '\u{FE0E}' | '\u{FE0F}' | '\u{20E3}')
}

fn is_link(token: &str) -> bool {
    let lower = token.to_ascii_lowercase();
    LINK_PREFIXES.iter().any(|p| lower.starts_with(p))
}

/// Removes every configured media marker from `text`.
pub(crate) fn strip_markers<'a>(text: &'a str, fmt: &FormatConfig) -> std::borrow::Cow<'a, str> {
    let mut out = std::borrow::Cow::Borrowed(text);
    for marker in &fmt.media_markers {
        if out.contains(marker.as_str()) {
            out = std::borrow::Cow::Owned(out.replace(marker.as_str(), " "));
        }
    }
    out
}

/// Flags the content kinds present in a message payload.
///
/// An empty payload yields no flags; [`super::Message::new`] records such a
/// message as text.
pub fn classify_content(text: &str, fmt: &FormatConfig) -> ContentFlags {
    let mut flags = ContentFlags {
        has_media: fmt.media_markers.iter().any(|m| text.contains(m.as_str())),
        ..ContentFlags::default()
    };
    let rest = strip_markers(text, fmt);
    for token in rest.split_whitespace() {
        if is_link(token) {
            flags.has_link = true;
            continue;
        }
        for c in token.chars() {
            if fmt.is_emoji(c) {
                flags.has_emoji = true;
            } else if !is_emoji_glue(c) {
                flags.has_text = true;
            }
        }
    }
    flags
}

/// Length in characters of the payload once media markers are removed.
pub(crate) fn text_length(text: &str, fmt: &FormatConfig) -> u32 {
    let rest = strip_markers(text, fmt);
    rest.trim().chars().count().try_into().unwrap_or(u32::MAX)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fmt() -> FormatConfig {
        FormatConfig::default()
    }

    #[test]
    fn media_marker_only() {
        assert_eq!(classify_content("<Media omitted>", &fmt()), ContentFlags::MEDIA);
        assert_eq!(text_length("<Media omitted>", &fmt()), 0);
    }

    #[test]
    fn text_and_link() {
        let f = classify_content("veja https://example.br", &fmt());
        assert_eq!(f, ContentFlags::TEXT.union(ContentFlags::LINK));
        assert_eq!(classify_content("www.example.org", &fmt()), ContentFlags::LINK);
    }

    #[test]
    fn single_emoji() {
        assert_eq!(classify_content("\u{1F600}", &fmt()), ContentFlags::EMOJI);
        // thumbs up with a presentation selector
        assert_eq!(classify_content("\u{1F44D}\u{FE0F}", &fmt()), ContentFlags::EMOJI);
        assert_eq!(
            classify_content("ok \u{1F44D}", &fmt()),
            ContentFlags::TEXT.union(ContentFlags::EMOJI)
        );
    }

    #[test]
    fn marker_not_configured_is_text() {
        let cfg = FormatConfig {
            media_markers: vec![],
            ..fmt()
        };
        assert_eq!(classify_content("<Media omitted>", &cfg), ContentFlags::TEXT);
    }

    #[test]
    fn empty_payload_has_no_flags() {
        assert!(classify_content("   ", &fmt()).is_empty());
    }

    proptest! {
        #[test]
        fn stable_under_trailing_whitespace(s in "\\PC{0,30}", pad in "[ \t\n]{0,5}") {
            let f = fmt();
            prop_assert_eq!(classify_content(&s, &f), classify_content(&format!("{s}{pad}"), &f));
        }
    }
}
