//! Assertion status of a target chunk, classified from a token window around it.

mod model;
mod network;
mod stage;

pub use model::{train_assertion, train_assertion_with_vectors, AssertionEpoch, AssertionModel, Prediction};
pub use network::{AssertionDims, AssertionNetwork, ScopeInput};
pub use stage::AssertionStage;

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssertionLabel {
    Present,
    Absent,
    Possible,
    Conditional,
    Hypothetical,
    AssociatedWithSomeoneElse,
}

impl AssertionLabel {
    /// All labels in class-index order.
    pub const ALL: [AssertionLabel; 6] = [
        AssertionLabel::Present,
        AssertionLabel::Absent,
        AssertionLabel::Possible,
        AssertionLabel::Conditional,
        AssertionLabel::Hypothetical,
        AssertionLabel::AssociatedWithSomeoneElse,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AssertionLabel::Present => "present",
            AssertionLabel::Absent => "absent",
            AssertionLabel::Possible => "possible",
            AssertionLabel::Conditional => "conditional",
            AssertionLabel::Hypothetical => "hypothetical",
            AssertionLabel::AssociatedWithSomeoneElse => "associated_with_someone_else",
        }
    }

    /// Short name used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            AssertionLabel::Present => "Present",
            AssertionLabel::Absent => "Absent",
            AssertionLabel::Possible => "Possible",
            AssertionLabel::Conditional => "Conditional",
            AssertionLabel::Hypothetical => "Hypothetical",
            AssertionLabel::AssociatedWithSomeoneElse => "Someone-else",
        }
    }
}

impl fmt::Display for AssertionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AssertionLabel {
    type Err = Error;

    /// Accepts the snake_case names, the table names and `someone_else`, ignoring case.
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        AssertionLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == key || l.display_name().to_ascii_lowercase().replace('-', "_") == key)
            .ok_or_else(|| Error::Data(format!("unknown assertion label '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssertionConfig {
    pub left_window: usize,
    pub right_window: usize,
    pub learning_rate: f64,
    pub dropout: f64,
    pub batch_size: usize,
    pub max_sentence_length: usize,
    pub epochs: usize,
    pub lstm_hidden: usize,
    pub flag_dim: usize,
    pub seed: u64,
}

impl Default for AssertionConfig {
    fn default() -> Self {
        AssertionConfig {
            left_window: 9,
            right_window: 15,
            learning_rate: 0.0012,
            dropout: 0.05,
            batch_size: 64,
            max_sentence_length: 250,
            epochs: 20,
            lstm_hidden: 128,
            flag_dim: 10,
            seed: 42,
        }
    }
}

impl AssertionConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(Error::Config(msg.to_string())) };
        check((0.0..1.0).contains(&self.dropout), "dropout must be in [0, 1)")?;
        check(self.learning_rate > 0.0, "learning_rate must be positive")?;
        check(
            self.batch_size > 0
                && self.max_sentence_length > 0
                && self.epochs > 0
                && self.lstm_hidden > 0
                && self.flag_dim > 0,
            "sizes must be positive",
        )
    }
}

/// A target span in a tokenized sentence, with its gold label when training.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssertionExample {
    pub tokens: Vec<String>,
    pub target_first: usize,
    pub target_last: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<AssertionLabel>,
}

impl AssertionExample {
    pub fn new<S: AsRef<str>>(tokens: &[S], target_first: usize, target_last: usize, label: AssertionLabel) -> Self {
        AssertionExample {
            tokens: tokens.iter().map(|t| t.as_ref().to_string()).collect(),
            target_first,
            target_last,
            label: Some(label),
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.target_first > self.target_last || self.target_last >= self.tokens.len() {
            return Err(Error::Data(format!(
                "target [{}, {}] is not a span of {} tokens",
                self.target_first,
                self.target_last,
                self.tokens.len()
            )));
        }
        Ok(())
    }
}

/// Reads `{"tokens": [...], "target_first": i, "target_last": j, "label": "..."}` lines.
pub fn read_examples<R: BufRead>(r: R) -> Result<Vec<AssertionExample>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let e: AssertionExample =
            serde_json::from_str(&line).map_err(|e| Error::Data(format!("line {}: {e}", i + 1)))?;
        e.check().map_err(|e| Error::Data(format!("line {}: {e}", i + 1)))?;
        out.push(e);
    }
    Ok(out)
}

pub fn load_examples(path: impl AsRef<Path>) -> Result<Vec<AssertionExample>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    read_examples(BufReader::new(file))
}

pub fn write_examples<W: Write>(mut w: W, examples: &[AssertionExample]) -> Result<()> {
    for e in examples {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Inclusive token window around a target plus per-position target flags.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scope {
    pub begin: usize,
    pub end: usize,
    /// One flag per scope position; true inside the target span.
    pub flags: Vec<bool>,
}

impl Scope {
    pub fn indices(&self) -> std::ops::RangeInclusive<usize> {
        self.begin..=self.end
    }

    pub fn len(&self) -> usize {
        self.end - self.begin + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Window of `left_window` tokens before the target's first token and
/// `right_window` after its last, clipped to the sentence. Callers must pass
/// a valid span of a sentence with `n` tokens.
pub fn extract_scope(n: usize, target_first: usize, target_last: usize, config: &AssertionConfig) -> Scope {
    debug_assert!(target_first <= target_last && target_last < n);
    let begin = target_first.saturating_sub(config.left_window);
    let end = (target_last + config.right_window).min(n - 1);
    Scope {
        begin,
        end,
        flags: (begin..=end).map(|i| (target_first..=target_last).contains(&i)).collect(),
    }
}

/// Cuts a sentence longer than `max_len` to a `max_len` window centered on
/// the target. Returns the window start and the target relative to it; a
/// target longer than `max_len` keeps its first `max_len` tokens.
pub fn truncate_around(n: usize, target_first: usize, target_last: usize, max_len: usize) -> (usize, usize, usize, usize) {
    if n <= max_len {
        return (0, n, target_first, target_last);
    }
    let center = (target_first + target_last) / 2;
    let start = center.saturating_sub(max_len / 2).min(n - max_len).min(target_first);
    let last = target_last.min(start + max_len - 1);
    (start, max_len, target_first - start, last - start)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_parse_every_spelling() {
        for l in AssertionLabel::ALL {
            assert_eq!(l.as_str().parse::<AssertionLabel>().unwrap(), l);
            assert_eq!(l.display_name().parse::<AssertionLabel>().unwrap(), l);
            assert_eq!(AssertionLabel::from_index(l.index()), Some(l));
        }
        assert_eq!("someone_else".parse::<AssertionLabel>().unwrap(), AssertionLabel::AssociatedWithSomeoneElse);
        assert!("maybe".parse::<AssertionLabel>().is_err());
        assert_eq!(serde_json::to_string(&AssertionLabel::AssociatedWithSomeoneElse).unwrap(), "\"associated_with_someone_else\"");
    }

    #[test]
    fn scope_examples() {
        let c = AssertionConfig::default();
        let s = extract_scope(30, 12, 12, &c);
        assert_eq!((s.begin, s.end), (3, 27));
        assert_eq!(s.flags.iter().filter(|f| **f).count(), 1);
        assert!(s.flags[9]);
        let s = extract_scope(5, 2, 2, &c);
        assert_eq!((s.begin, s.end), (0, 4));
        let s = extract_scope(7, 0, 6, &c);
        assert_eq!((s.begin, s.end), (0, 6));
        assert!(s.flags.iter().all(|f| *f));
    }

    #[test]
    fn truncation_keeps_the_target() {
        assert_eq!(truncate_around(10, 2, 3, 250), (0, 10, 2, 3));
        let (start, len, f, l) = truncate_around(1000, 500, 501, 250);
        assert_eq!((start, len), (375, 250));
        assert_eq!((f + start, l + start), (500, 501));
        assert_eq!(truncate_around(1000, 995, 999, 250), (750, 250, 245, 249));
        assert_eq!(truncate_around(1000, 0, 0, 250), (0, 250, 0, 0));
        assert_eq!(truncate_around(1000, 10, 600, 250), (10, 250, 0, 249));
    }

    #[test]
    fn examples_jsonl() {
        let text = "{\"tokens\":[\"no\",\"fever\"],\"target_first\":1,\"target_last\":1,\"label\":\"absent\"}\n";
        let ex = read_examples(text.as_bytes()).unwrap();
        assert_eq!(ex[0].label, Some(AssertionLabel::Absent));
        let mut buf = Vec::new();
        write_examples(&mut buf, &ex).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), text);
        let bad = "{\"tokens\":[\"x\"],\"target_first\":0,\"target_last\":1,\"label\":\"absent\"}";
        assert!(read_examples(bad.as_bytes()).unwrap_err().to_string().starts_with("line 1:"));
    }
}
