//! Chat transcript ingestion: export parsing, content classification,
//! pseudonymization, rosters and the canonical record format.

mod anonymize;
mod canonical;
mod classify;
mod export;
mod format;
mod model;
mod roster;

pub use anonymize::{anonymize, pseudonym};
pub use canonical::{read_canonical, write_canonical, write_records};
pub use classify::classify_content;
pub use export::{parse_export, render_export, ParsedExport, SkipReport, SkippedLine};
pub use format::FormatConfig;
pub use model::{ContentFlags, Message, MessageLog, Minute, Period, FLAG_LABELS};
pub use roster::{load_roster, Roster};
