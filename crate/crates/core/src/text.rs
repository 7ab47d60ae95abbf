//! Deterministic preprocessing: document assembly, sentence detection,
//! tokenization and normalization.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::annotation::{Annotation, AnnotationKind, CharText};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TokenizerRules {
    /// Keep `-` inside a token when both neighbours are alphanumeric ("COVID-19").
    pub keep_internal_hyphens: bool,
    /// Keep `.` and `,` between two digits ("3.5", "1,000").
    pub keep_numeric_separators: bool,
    /// Characters emitted as standalone tokens.
    pub split_characters: BTreeSet<char>,
}

impl Default for TokenizerRules {
    fn default() -> Self {
        TokenizerRules {
            keep_internal_hyphens: true,
            keep_numeric_separators: true,
            split_characters: ".,;:!?()[]{}\"/-".chars().collect(),
        }
    }
}

impl TokenizerRules {
    pub fn validate(&self) -> Result<()> {
        if let Some(c) = self.split_characters.iter().find(|c| c.is_alphanumeric()) {
            return Err(Error::Config(format!("split character '{c}' is alphanumeric")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SentenceRules {
    pub terminators: BTreeSet<char>,
    /// Words that never end a sentence. Matched case-insensitively.
    pub abbreviations: BTreeSet<String>,
}

pub const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "Dr.", "Mr.", "Mrs.", "Ms.", "Prof.", "Jr.", "Sr.", "St.", "e.g.", "i.e.", "vs.", "approx.",
    "Fig.", "Figs.", "Eq.", "Ref.", "al.", "cf.", "ca.", "b.i.d.", "t.i.d.", "q.i.d.", "q.d.",
    "p.o.", "p.r.n.", "a.m.", "p.m.", "Jan.", "Feb.", "Mar.", "Apr.", "Aug.", "Sept.", "Oct.",
    "Nov.", "Dec.",
];

impl Default for SentenceRules {
    fn default() -> Self {
        SentenceRules {
            terminators: ['.', '!', '?'].into_iter().collect(),
            abbreviations: DEFAULT_ABBREVIATIONS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl SentenceRules {
    pub fn validate(&self) -> Result<()> {
        for a in &self.abbreviations {
            match a.chars().last() {
                Some(c) if self.terminators.contains(&c) => {}
                _ => {
                    return Err(Error::Config(format!(
                        "abbreviation '{a}' does not end with a terminator"
                    )))
                }
            }
        }
        Ok(())
    }

    fn is_abbreviation(&self, word: &str) -> bool {
        let word = word.trim_start_matches(|c: char| !c.is_alphanumeric());
        self.abbreviations
            .iter()
            .any(|a| a.eq_ignore_ascii_case(word) || a.to_lowercase() == word.to_lowercase())
    }
}

/// Single document annotation over the trimmed text.
///
/// Empty or whitespace-only text yields an empty-document marker instead of an error.
pub fn assemble(text: &str) -> Annotation {
    let chars: Vec<char> = text.chars().collect();
    let Some(first) = chars.iter().position(|c| !c.is_whitespace()) else {
        return Annotation::new(AnnotationKind::Document, 0, 0, "")
            .with_meta("empty", "true")
            .with_meta("trim_offset", 0);
    };
    let last = chars.iter().rposition(|c| !c.is_whitespace()).unwrap_or(first);
    Annotation::new(
        AnnotationKind::Document,
        first,
        last,
        chars[first..=last].iter().collect::<String>(),
    )
    .with_meta("trim_offset", first)
}

const CLOSERS: &[char] = &['"', '\'', ')', ']', '\u{201d}', '\u{2019}'];

/// Splits a document annotation into sentences.
///
/// A boundary follows a terminator (optionally followed by closing quotes or
/// brackets) that is itself followed by whitespace or the end of the document,
/// unless the word ending there is a known abbreviation.
pub fn detect_sentences(text: &CharText<'_>, document: &Annotation, rules: &SentenceRules) -> Vec<Annotation> {
    if document.is_empty_marker() || text.is_empty() {
        return Vec::new();
    }
    let chars: Vec<char> = text.as_str().chars().collect();
    let (doc_begin, doc_end) = (document.begin, document.end.min(chars.len() - 1));
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    let mut i = doc_begin;
    while i <= doc_end {
        let c = chars[i];
        if start.is_none() && !c.is_whitespace() {
            start = Some(i);
        }
        if rules.terminators.contains(&c) {
            let mut last = i;
            while last < doc_end && CLOSERS.contains(&chars[last + 1]) {
                last += 1;
            }
            let at_boundary = last == doc_end || chars[last + 1].is_whitespace();
            if at_boundary {
                let word_start = (doc_begin..=i)
                    .rev()
                    .find(|&j| chars[j].is_whitespace())
                    .map_or(doc_begin, |j| j + 1);
                let word: String = chars[word_start..=i].iter().collect();
                if !rules.is_abbreviation(&word) {
                    if let Some(s) = start.take() {
                        spans.push((s, last));
                    }
                }
                i = last;
            }
        }
        i += 1;
    }
    if let Some(s) = start {
        let end = (s..=doc_end).rev().find(|&j| !chars[j].is_whitespace()).unwrap_or(s);
        spans.push((s, end));
    }
    spans
        .into_iter()
        .enumerate()
        .map(|(idx, (b, e))| {
            Annotation::new(AnnotationKind::Sentence, b, e, text.slice(b, e)).with_meta("sentence", idx)
        })
        .collect()
}

/// Tokenizes one sentence. Tokens carry the sentence index in metadata.
pub fn tokenize_sentence(
    chars: &[char],
    text: &CharText<'_>,
    sentence: &Annotation,
    sentence_index: usize,
    rules: &TokenizerRules,
) -> Vec<Annotation> {
    let mut spans: Vec<(usize, usize)> = Vec::new();
    let mut p = sentence.begin;
    let end = sentence.end;
    while p <= end {
        if chars[p].is_whitespace() {
            p += 1;
            continue;
        }
        let word_start = p;
        while p <= end && !chars[p].is_whitespace() {
            p += 1;
        }
        split_word(chars, word_start, p - 1, rules, &mut spans);
    }
    spans
        .into_iter()
        .map(|(b, e)| {
            Annotation::new(AnnotationKind::Token, b, e, text.slice(b, e))
                .with_meta("sentence", sentence_index)
        })
        .collect()
}

fn split_word(chars: &[char], begin: usize, end: usize, rules: &TokenizerRules, out: &mut Vec<(usize, usize)>) {
    let mut current: Option<usize> = None;
    for p in begin..=end {
        let c = chars[p];
        let kept_internal = p > begin && p < end && {
            let (l, r) = (chars[p - 1], chars[p + 1]);
            (c == '-' && rules.keep_internal_hyphens && l.is_alphanumeric() && r.is_alphanumeric())
                || ((c == '.' || c == ',')
                    && rules.keep_numeric_separators
                    && l.is_ascii_digit()
                    && r.is_ascii_digit())
        };
        if rules.split_characters.contains(&c) && !kept_internal {
            if let Some(s) = current.take() {
                out.push((s, p - 1));
            }
            out.push((p, p));
        } else if current.is_none() {
            current = Some(p);
        }
    }
    if let Some(s) = current {
        out.push((s, end));
    }
}

/// Tokenizes every sentence of a record.
pub fn tokenize(text: &CharText<'_>, sentences: &[Annotation], rules: &TokenizerRules) -> Vec<Annotation> {
    let chars: Vec<char> = text.as_str().chars().collect();
    sentences
        .iter()
        .enumerate()
        .flat_map(|(i, s)| {
            let idx = s.sentence_index().unwrap_or(i);
            tokenize_sentence(&chars, text, s, idx, rules)
        })
        .collect()
}

/// Strips surrounding non-alphanumeric characters from each token.
///
/// Offsets are narrowed to the kept core, so the result still equals its
/// source slice. Tokens with nothing left are dropped.
pub fn normalize(tokens: &[Annotation]) -> Vec<Annotation> {
    tokens.iter().filter_map(normalize_token).collect()
}

fn normalize_token(token: &Annotation) -> Option<Annotation> {
    let chars: Vec<char> = token.result.chars().collect();
    let lead = chars.iter().position(|c| c.is_alphanumeric())?;
    let trail = chars.len() - 1 - chars.iter().rposition(|c| c.is_alphanumeric())?;
    let mut out = token.clone();
    out.begin = token.begin + lead;
    out.end = token.end - trail;
    out.result = chars[lead..chars.len() - trail].iter().collect();
    Some(out)
}
