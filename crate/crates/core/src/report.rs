//! Plain-text and CSV rendering of result tables, and atomic file output.

use std::borrow::Cow;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub quantity: String,
    pub value: f64,
    pub unit: String,
    /// Where the value comes from: `formula`, `paper`, `analytic`, ...
    pub source: String,
}

impl ReportRow {
    pub fn new(quantity: impl Into<String>, value: f64, unit: impl Into<String>, source: impl Into<String>) -> Self {
        Self {
            quantity: quantity.into(),
            value,
            unit: unit.into(),
            source: source.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub title: String,
    pub rows: Vec<ReportRow>,
    pub footnotes: Vec<String>,
    /// Echoed as `# key = value` lines.
    pub metadata: Vec<(String, String)>,
}

impl Report {
    pub fn new(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            ..Self::default()
        }
    }

    pub fn push(
        &mut self,
        quantity: impl Into<String>,
        value: f64,
        unit: impl Into<String>,
        source: impl Into<String>,
    ) {
        self.rows.push(ReportRow::new(quantity, value, unit, source));
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.footnotes.push(text.into());
    }

    pub fn get(&self, quantity: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.quantity == quantity).map(|r| r.value)
    }

    pub fn extend(&mut self, other: Report) {
        self.rows.extend(other.rows);
        self.footnotes.extend(other.footnotes);
    }

    pub fn to_text(&self) -> String {
        let qw = self.rows.iter().map(|r| r.quantity.len()).max().unwrap_or(8).max(8);
        let uw = self.rows.iter().map(|r| r.unit.len()).max().unwrap_or(4).max(4);
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.title);
        let _ = writeln!(out, "{}", "=".repeat(self.title.chars().count()));
        let _ = writeln!(out, "{:<qw$}  {:>12}  {:<uw$}  source", "quantity", "value", "unit");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<qw$}  {:>12.4e}  {:<uw$}  {}",
                r.quantity, r.value, r.unit, r.source
            );
        }
        if !self.footnotes.is_empty() {
            out.push('\n');
            for (i, f) in self.footnotes.iter().enumerate() {
                let _ = writeln!(out, "[{}] {}", i + 1, f);
            }
        }
        out
    }

    /// `quantity,value,unit,source` rows after a `#` metadata block.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k} = {v}");
        }
        out.push_str("quantity,value,unit,source\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:e},{},{}",
                csv_field(&r.quantity),
                r.value,
                csv_field(&r.unit),
                csv_field(&r.source)
            );
        }
        out
    }
}

/// Quotes a field when it holds a comma, quote or line break.
pub fn csv_field(s: &str) -> Cow<'_, str> {
    if s.contains([',', '"', '\n', '\r']) {
        Cow::Owned(format!("\"{}\"", s.replace('"', "\"\"")))
    } else {
        Cow::Borrowed(s)
    }
}

/// Writes to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = path.with_file_name(format!(".{file_name}.tmp-{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        e.into()
    })
}
