//! Columnar annotation data model.
//!
//! A [`Record`] is one document: its raw text plus named columns, each an
//! ordered list of [`Annotation`]s. Offsets are Unicode scalar-value indices
//! into the record text, 0-based, and `end` is inclusive.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::Error;

/// Reserved input name for a record's raw text.
pub const TEXT_COLUMN: &str = "text";
/// Column collecting per-record stage failures.
pub const ERRORS_COLUMN: &str = "errors";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationKind {
    Document,
    Sentence,
    Token,
    WordEmbedding,
    NamedEntityTag,
    Chunk,
    Assertion,
    Error,
}

impl AnnotationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AnnotationKind::Document => "document",
            AnnotationKind::Sentence => "sentence",
            AnnotationKind::Token => "token",
            AnnotationKind::WordEmbedding => "word_embedding",
            AnnotationKind::NamedEntityTag => "named_entity_tag",
            AnnotationKind::Chunk => "chunk",
            AnnotationKind::Assertion => "assertion",
            AnnotationKind::Error => "error",
        }
    }
}

impl std::fmt::Display for AnnotationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub kind: AnnotationKind,
    pub begin: usize,
    pub end: usize,
    pub result: String,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector: Option<Vec<f64>>,
}

impl Annotation {
    pub fn new(kind: AnnotationKind, begin: usize, end: usize, result: impl Into<String>) -> Self {
        Annotation {
            kind,
            begin,
            end,
            result: result.into(),
            metadata: BTreeMap::new(),
            vector: None,
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.get(key).map(String::as_str)
    }

    /// Sentence index recorded by the sentence detector and everything downstream of it.
    pub fn sentence_index(&self) -> Option<usize> {
        self.meta("sentence").and_then(|s| s.parse().ok())
    }

    pub fn is_empty_marker(&self) -> bool {
        self.meta("empty") == Some("true")
    }

    /// Checks the offset invariants against the source text.
    pub fn check(&self, text: &CharText<'_>) -> Result<(), String> {
        if self.kind == AnnotationKind::Error || self.is_empty_marker() {
            return Ok(());
        }
        if self.begin > self.end {
            return Err(format!("{} annotation has begin {} > end {}", self.kind, self.begin, self.end));
        }
        if self.end >= text.len() {
            return Err(format!(
                "{} annotation [{}, {}] exceeds text of {} characters",
                self.kind,
                self.begin,
                self.end,
                text.len()
            ));
        }
        if self.kind == AnnotationKind::Token && text.slice(self.begin, self.end) != self.result {
            return Err(format!(
                "token '{}' does not match source slice '{}'",
                self.result,
                text.slice(self.begin, self.end)
            ));
        }
        Ok(())
    }
}

/// Text indexed by Unicode scalar value.
pub struct CharText<'a> {
    text: &'a str,
    /// Byte offset of every char, plus a trailing entry for `text.len()`.
    offsets: Vec<usize>,
}

impl<'a> CharText<'a> {
    pub fn new(text: &'a str) -> Self {
        let mut offsets: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        offsets.push(text.len());
        CharText { text, offsets }
    }

    /// Number of chars.
    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_str(&self) -> &'a str {
        self.text
    }

    /// Inclusive char range `[begin, end]`.
    pub fn slice(&self, begin: usize, end: usize) -> &'a str {
        &self.text[self.offsets[begin]..self.offsets[end + 1]]
    }

    pub fn byte_offset(&self, char_index: usize) -> usize {
        self.offsets[char_index]
    }

    /// Char index of a byte offset that lies on a char boundary.
    pub fn char_index(&self, byte: usize) -> usize {
        self.offsets.partition_point(|&b| b < byte)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub columns: IndexMap<String, Vec<Annotation>>,
}

impl Record {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Record {
            id: id.into(),
            text: text.into(),
            columns: IndexMap::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<&[Annotation]> {
        self.columns.get(name).map(Vec::as_slice)
    }

    pub fn has_errors(&self) -> bool {
        self.columns
            .get(ERRORS_COLUMN)
            .is_some_and(|c| !c.is_empty())
    }

    pub fn push_error(&mut self, stage: &str, message: impl Into<String>) {
        let annotation = Annotation::new(AnnotationKind::Error, 0, 0, message).with_meta("stage", stage);
        self.columns
            .entry(ERRORS_COLUMN.to_string())
            .or_default()
            .push(annotation);
    }

    /// Validates every annotation plus ordering and overlap rules for
    /// sentence and token columns.
    pub fn check(&self) -> Result<(), String> {
        let text = CharText::new(&self.text);
        for (name, column) in &self.columns {
            for a in column {
                a.check(&text).map_err(|e| format!("column '{name}': {e}"))?;
            }
            let ordered_kind = column
                .first()
                .is_some_and(|a| matches!(a.kind, AnnotationKind::Sentence | AnnotationKind::Token));
            if ordered_kind {
                for pair in column.windows(2) {
                    if (pair[0].begin, pair[0].end) >= (pair[1].begin, pair[1].end) || pair[0].end >= pair[1].begin {
                        return Err(format!(
                            "column '{name}': [{}, {}] and [{}, {}] are unsorted or overlap",
                            pair[0].begin, pair[0].end, pair[1].begin, pair[1].end
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Writes one JSON object per line.
pub fn write_jsonl<W: Write>(mut w: W, records: &[Record]) -> Result<(), Error> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads JSON Lines records, skipping blank lines.
pub fn read_jsonl<R: BufRead>(r: R) -> Result<Vec<Record>, Error> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line)
            .map_err(|e| Error::Data(format!("line {}: {}", i + 1, e)))?;
        out.push(record);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn char_text_slices_by_scalar_value() {
        let t = CharText::new("naïve café");
        assert_eq!(t.len(), 10);
        assert_eq!(t.slice(0, 4), "naïve");
        assert_eq!(t.slice(6, 9), "café");
        assert_eq!(t.char_index(t.byte_offset(7)), 7);
    }

    #[test]
    fn token_invariant_is_checked() {
        let mut r = Record::new("d", "sore throat");
        r.columns.insert(
            "token".into(),
            vec![Annotation::new(AnnotationKind::Token, 0, 3, "sore")],
        );
        assert!(r.check().is_ok());
        r.columns.get_mut("token").unwrap()[0].result = "sour".into();
        assert!(r.check().is_err());
    }

    #[test]
    fn overlapping_tokens_are_rejected() {
        let mut r = Record::new("d", "abcdef");
        r.columns.insert(
            "token".into(),
            vec![
                Annotation::new(AnnotationKind::Token, 0, 3, "abcd"),
                Annotation::new(AnnotationKind::Token, 3, 5, "def"),
            ],
        );
        assert!(r.check().is_err());
    }

    #[test]
    fn jsonl_round_trip() {
        let mut r = Record::new("doc-1", "Fever.");
        let mut a = Annotation::new(AnnotationKind::WordEmbedding, 0, 4, "Fever").with_meta("sentence", 0);
        a.vector = Some(vec![0.1, -2.0, 1e-7]);
        r.columns.insert("embeddings".into(), vec![a]);
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &[r.clone(), Record::new("doc-2", "")]).unwrap();
        let back = read_jsonl(&buf[..]).unwrap();
        assert_eq!(back[0], r);
        assert_eq!(back.len(), 2);
        let line = String::from_utf8(buf).unwrap();
        assert!(line.starts_with(r#"{"id":"doc-1","text":"Fever.","columns":{"embeddings":[{"kind":"word_embedding","begin":0,"end":4"#));
    }
}
