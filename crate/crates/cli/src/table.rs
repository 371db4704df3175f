//! Tab-delimited result tables with a reproducibility preamble.
//!
//! Every output starts with `#`-prefixed metadata lines (the exact command
//! line, a digest over the arguments and all input bytes, and the tool
//! version) so a result file records how to regenerate itself.  The CSV
//! loader skips `#` lines, which lets written datasets carry the same
//! preamble and still round-trip.

use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance attached to every table this tool writes.
#[derive(Debug, Clone)]
pub struct Metadata {
    pub command: String,
    pub config_sha256: String,
}

impl Metadata {
    pub fn preamble(&self) -> String {
        format!(
            "# command: {}\n# config_sha256: {}\n# version: {}\n",
            self.command, self.config_sha256, VERSION
        )
    }
}

/// Incremental digest over the invocation and every input it reads.
pub struct RunHash {
    hasher: Sha256,
}

impl RunHash {
    /// Seeds the digest with the argument vector, one argument per frame.
    pub fn new(argv: &[String]) -> Self {
        let mut hasher = Sha256::new();
        for arg in argv {
            hasher.update((arg.len() as u64).to_le_bytes());
            hasher.update(arg.as_bytes());
        }
        Self { hasher }
    }

    /// Mixes in the raw bytes of one input (config file, dataset, ...).
    pub fn absorb(&mut self, bytes: &[u8]) {
        self.hasher.update((bytes.len() as u64).to_le_bytes());
        self.hasher.update(bytes);
    }

    pub fn finish(self) -> String {
        let digest = self.hasher.finalize();
        let mut out = String::with_capacity(64);
        for byte in digest {
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }
}

/// Shortest representation that parses back to the same value.
pub fn fmt_float(v: f64) -> String {
    format!("{v}")
}

/// Renders the metadata preamble, a header row, and one line per row,
/// all tab-delimited.
pub fn render_table(meta: &Metadata, columns: &[&str], rows: &[Vec<String>]) -> String {
    render_table_with_notes(meta, &[], columns, rows)
}

/// Like [`render_table`] with extra `# name: value` preamble lines.
pub fn render_table_with_notes(
    meta: &Metadata,
    notes: &[(&str, String)],
    columns: &[&str],
    rows: &[Vec<String>],
) -> String {
    let mut out = meta.preamble();
    for (name, value) in notes {
        out.push_str(&format!("# {name}: {value}\n"));
    }
    out.push_str(&columns.join("\t"));
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), columns.len(), "row width must match header");
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    out
}
