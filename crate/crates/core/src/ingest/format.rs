use std::path::Path;

use chrono::format::{Item, StrftimeItems};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a text export is laid out. Loaded from TOML; every key is optional.
///
/// ```toml
/// timestamp_prefix = ""
/// timestamp_format = "%d/%m/%Y, %H:%M"
/// timestamp_suffix = " - "
/// speaker_delimiter = ": "
/// media_markers = ["<Media omitted>"]
/// emoji_ranges = [[0x1F300, 0x1FAFF], [0x2600, 0x27BF]]
/// tz_offset_minutes = -180
/// ```
///
/// A header line is `prefix + timestamp + suffix + rest`. When `rest`
/// contains the speaker delimiter it is a user post, otherwise a system line.
/// Exported times are local; `tz_offset_minutes` is local minus UTC.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FormatConfig {
    pub timestamp_prefix: String,
    pub timestamp_format: String,
    pub timestamp_suffix: String,
    pub speaker_delimiter: String,
    pub media_markers: Vec<String>,
    pub emoji_ranges: Vec<[u32; 2]>,
    pub tz_offset_minutes: i64,
}

impl Default for FormatConfig {
    fn default() -> Self {
        Self {
            timestamp_prefix: String::new(),
            timestamp_format: "%d/%m/%Y, %H:%M".into(),
            timestamp_suffix: " - ".into(),
            speaker_delimiter: ": ".into(),
            media_markers: vec![
                "<Media omitted>".into(),
                "<Mídia oculta>".into(),
                "<arquivo de mídia oculto>".into(),
            ],
            emoji_ranges: vec![
                [0x1F000, 0x1FAFF],
                [0x2600, 0x27BF],
                [0x2B00, 0x2BFF],
                [0x2190, 0x21FF],
                [0x3030, 0x303D],
            ],
            tz_offset_minutes: 0,
        }
    }
}

impl FormatConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.timestamp_format.is_empty() {
            return Err(Error::Config("timestamp_format is empty".into()));
        }
        if StrftimeItems::new(&self.timestamp_format).any(|i| matches!(i, Item::Error)) {
            return Err(Error::Config(format!(
                "timestamp_format {:?} is not a valid strftime pattern",
                self.timestamp_format
            )));
        }
        if self.timestamp_suffix.is_empty() {
            return Err(Error::Config("timestamp_suffix is empty".into()));
        }
        if self.speaker_delimiter.is_empty() {
            return Err(Error::Config("speaker_delimiter is empty".into()));
        }
        if self.media_markers.iter().any(|m| m.trim().is_empty()) {
            return Err(Error::Config("blank media marker".into()));
        }
        if let Some([lo, hi]) = self.emoji_ranges.iter().find(|[lo, hi]| lo > hi) {
            return Err(Error::Config(format!("emoji range {lo:#x}..{hi:#x} is inverted")));
        }
        Ok(())
    }

    pub fn is_emoji(&self, c: char) -> bool {
        let c = c as u32;
        self.emoji_ranges.iter().any(|[lo, hi]| (*lo..=*hi).contains(&c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_toml_uses_defaults() {
        let cfg = FormatConfig::from_toml("tz_offset_minutes = -180\n").unwrap();
        assert_eq!(cfg.tz_offset_minutes, -180);
        assert_eq!(cfg.timestamp_suffix, " - ");
    }

    #[test]
    fn rejects_bad_config() {
        assert!(FormatConfig::from_toml("timestamp_format = \"%Q\"").is_err());
        assert!(FormatConfig::from_toml("speaker_delimiter = \"\"").is_err());
        assert!(FormatConfig::from_toml("emoji_ranges = [[10, 1]]").is_err());
        assert!(FormatConfig::from_toml("no_such_key = 1").is_err());
    }
}
