//! BIO / BIOES tag codec and the NER converter.
//!
//! Tags have the surface form `PREFIX-LABEL` (single hyphen after the
//! prefix) or `O`. Labels are case-preserving.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{Annotation, AnnotationKind, CharText};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TagScheme {
    #[default]
    Bio,
    Bioes,
}

impl FromStr for TagScheme {
    type Err = TagError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bio" | "iob2" => Ok(TagScheme::Bio),
            "bioes" | "iobes" => Ok(TagScheme::Bioes),
            _ => Err(TagError::UnknownScheme(s.to_string())),
        }
    }
}

impl fmt::Display for TagScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TagScheme::Bio => "BIO",
            TagScheme::Bioes => "BIOES",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Chunk {
    pub first_token: usize,
    pub last_token: usize,
    pub label: String,
}

impl Chunk {
    pub fn new(first_token: usize, last_token: usize, label: impl Into<String>) -> Self {
        Chunk {
            first_token,
            last_token,
            label: label.into(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TagError {
    #[error("overlap at token {0}")]
    Overlap(usize),
    #[error("chunk [{first}, {last}] is outside {n_tokens} tokens")]
    OutOfRange {
        first: usize,
        last: usize,
        n_tokens: usize,
    },
    #[error("empty chunk label")]
    EmptyLabel,
    #[error("invalid tag '{tag}' at position {position} for {scheme}")]
    InvalidTag {
        tag: String,
        position: usize,
        scheme: TagScheme,
    },
    #[error("ill-formed tag sequence at position {position}: {reason}")]
    IllFormed { position: usize, reason: String },
    #[error("length mismatch: {tokens} tokens but {tags} tags")]
    LengthMismatch { tokens: usize, tags: usize },
    #[error("unknown tag scheme '{0}'")]
    UnknownScheme(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Prefix {
    B,
    I,
    E,
    S,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Tag<'a> {
    Outside,
    Entity(Prefix, &'a str),
}

fn parse_tag(tag: &str, scheme: TagScheme) -> Option<Tag<'_>> {
    if tag == "O" {
        return Some(Tag::Outside);
    }
    let (prefix, label) = tag.split_once('-')?;
    if label.is_empty() {
        return None;
    }
    let prefix = match (prefix, scheme) {
        ("B", _) => Prefix::B,
        ("I", _) => Prefix::I,
        ("E", TagScheme::Bioes) => Prefix::E,
        ("S", TagScheme::Bioes) => Prefix::S,
        _ => return None,
    };
    Some(Tag::Entity(prefix, label))
}

/// True when `tag` is lexically valid under `scheme`.
pub fn is_valid_tag(tag: &str, scheme: TagScheme) -> bool {
    parse_tag(tag, scheme).is_some()
}

/// Label carried by a tag, if any.
pub fn tag_label(tag: &str) -> Option<&str> {
    if tag == "O" {
        None
    } else {
        tag.split_once('-').map(|(_, l)| l)
    }
}

/// Encodes non-overlapping chunks as one tag per token.
pub fn encode(chunks: &[Chunk], n_tokens: usize, scheme: TagScheme) -> Result<Vec<String>, TagError> {
    let mut tags = vec!["O".to_string(); n_tokens];
    let mut taken = vec![false; n_tokens];
    for c in chunks {
        if c.label.is_empty() {
            return Err(TagError::EmptyLabel);
        }
        if c.first_token > c.last_token || c.last_token >= n_tokens {
            return Err(TagError::OutOfRange {
                first: c.first_token,
                last: c.last_token,
                n_tokens,
            });
        }
        if let Some(i) = (c.first_token..=c.last_token).find(|&i| taken[i]) {
            return Err(TagError::Overlap(i));
        }
        for i in c.first_token..=c.last_token {
            taken[i] = true;
            let prefix = match scheme {
                TagScheme::Bio if i == c.first_token => "B",
                TagScheme::Bio => "I",
                TagScheme::Bioes if c.first_token == c.last_token => "S",
                TagScheme::Bioes if i == c.first_token => "B",
                TagScheme::Bioes if i == c.last_token => "E",
                TagScheme::Bioes => "I",
            };
            tags[i] = format!("{}-{}", prefix, c.label);
        }
    }
    Ok(tags)
}

/// Strict decoding: every tag must be valid and the sequence well formed.
pub fn decode<S: AsRef<str>>(tags: &[S], scheme: TagScheme) -> Result<Vec<Chunk>, TagError> {
    let mut chunks = Vec::new();
    let mut open: Option<(usize, &str)> = None;
    for (i, raw) in tags.iter().enumerate() {
        let raw = raw.as_ref();
        let tag = parse_tag(raw, scheme).ok_or_else(|| TagError::InvalidTag {
            tag: raw.to_string(),
            position: i,
            scheme,
        })?;
        let ill = |reason: &str| TagError::IllFormed {
            position: i,
            reason: reason.to_string(),
        };
        match (scheme, tag) {
            (_, Tag::Outside) => {
                if let Some((start, label)) = open.take() {
                    if scheme == TagScheme::Bioes {
                        return Err(ill("chunk not closed with E- before O"));
                    }
                    chunks.push(Chunk::new(start, i - 1, label));
                }
            }
            (TagScheme::Bio, Tag::Entity(Prefix::B, label)) => {
                if let Some((start, l)) = open.take() {
                    chunks.push(Chunk::new(start, i - 1, l));
                }
                open = Some((i, label));
            }
            (_, Tag::Entity(Prefix::I, label)) => match open {
                Some((_, l)) if l == label => {}
                Some(_) => return Err(ill("label changes inside a chunk")),
                None => return Err(ill("I- tag without an open chunk")),
            },
            (TagScheme::Bioes, Tag::Entity(Prefix::B, label)) => {
                if open.is_some() {
                    return Err(ill("B- tag inside an open chunk"));
                }
                open = Some((i, label));
            }
            (TagScheme::Bioes, Tag::Entity(Prefix::E, label)) => match open.take() {
                Some((start, l)) if l == label => chunks.push(Chunk::new(start, i, l)),
                Some(_) => return Err(ill("label changes inside a chunk")),
                None => return Err(ill("E- tag without an open chunk")),
            },
            (TagScheme::Bioes, Tag::Entity(Prefix::S, label)) => {
                if open.is_some() {
                    return Err(ill("S- tag inside an open chunk"));
                }
                chunks.push(Chunk::new(i, i, label));
            }
            (TagScheme::Bio, Tag::Entity(Prefix::E | Prefix::S, _)) => unreachable!(),
        }
    }
    if let Some((start, label)) = open {
        if scheme == TagScheme::Bioes {
            return Err(TagError::IllFormed {
                position: tags.len(),
                reason: "chunk not closed at end of sequence".into(),
            });
        }
        chunks.push(Chunk::new(start, tags.len() - 1, label));
    }
    Ok(chunks)
}

/// Total decoding with repairs for unconstrained model output.
///
/// An orphan `I-X`/`E-X` opens a new chunk, a label change closes the open
/// chunk, an unterminated chunk is closed at `O` or at the end, and tags that
/// are not valid for the scheme are read as `O`.
pub fn decode_lenient<S: AsRef<str>>(tags: &[S], scheme: TagScheme) -> Vec<Chunk> {
    let mut chunks = Vec::new();
    let mut open: Option<(usize, &str)> = None;
    fn close(open: &mut Option<(usize, &str)>, end: usize, chunks: &mut Vec<Chunk>) {
        if let Some((start, label)) = open.take() {
            chunks.push(Chunk::new(start, end, label));
        }
    }
    for (i, raw) in tags.iter().enumerate() {
        let tag = parse_tag(raw.as_ref(), scheme).unwrap_or(Tag::Outside);
        match tag {
            Tag::Outside => close(&mut open, i.saturating_sub(1), &mut chunks),
            Tag::Entity(Prefix::B, label) => {
                close(&mut open, i.saturating_sub(1), &mut chunks);
                open = Some((i, label));
            }
            Tag::Entity(Prefix::I, label) => match open {
                Some((_, l)) if l == label => {}
                _ => {
                    close(&mut open, i.saturating_sub(1), &mut chunks);
                    open = Some((i, label));
                }
            },
            Tag::Entity(Prefix::E, label) => {
                if !matches!(open, Some((_, l)) if l == label) {
                    close(&mut open, i.saturating_sub(1), &mut chunks);
                    open = Some((i, label));
                }
                close(&mut open, i, &mut chunks);
            }
            Tag::Entity(Prefix::S, label) => {
                close(&mut open, i.saturating_sub(1), &mut chunks);
                chunks.push(Chunk::new(i, i, label));
            }
        }
    }
    close(&mut open, tags.len().saturating_sub(1), &mut chunks);
    chunks
}

/// Turns per-token tags into character-offset chunk annotations.
///
/// Tokens and tags must be aligned one-to-one; sentence boundaries come from
/// the `sentence` metadata on the tokens. Each chunk's result is the covered
/// source slice and its entity label is stored under `entity`.
pub fn convert_ner(
    text: &CharText<'_>,
    tokens: &[Annotation],
    tags: &[Annotation],
    scheme: TagScheme,
    strict: bool,
) -> Result<Vec<Annotation>, TagError> {
    if tokens.len() != tags.len() {
        return Err(TagError::LengthMismatch {
            tokens: tokens.len(),
            tags: tags.len(),
        });
    }
    let mut out = Vec::new();
    let mut start = 0;
    while start < tokens.len() {
        let sentence = tokens[start].sentence_index();
        let mut end = start + 1;
        while end < tokens.len() && tokens[end].sentence_index() == sentence {
            end += 1;
        }
        let sentence_tags: Vec<&str> = tags[start..end].iter().map(|a| a.result.as_str()).collect();
        let chunks = if strict {
            decode(&sentence_tags, scheme)?
        } else {
            decode_lenient(&sentence_tags, scheme)
        };
        for c in chunks {
            let first = &tokens[start + c.first_token];
            let last = &tokens[start + c.last_token];
            let mut a = Annotation::new(
                AnnotationKind::Chunk,
                first.begin,
                last.end,
                text.slice(first.begin, last.end),
            )
            .with_meta("entity", &c.label)
            .with_meta("first_token", c.first_token)
            .with_meta("last_token", c.last_token);
            if let Some(s) = sentence {
                a = a.with_meta("sentence", s);
            }
            out.push(a);
        }
        start = end;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(tags: &[&str]) -> Vec<String> {
        tags.iter().map(|t| t.to_string()).collect()
    }

    #[test]
    fn encode_examples() {
        assert_eq!(
            encode(&[Chunk::new(0, 2, "GENE")], 4, TagScheme::Bioes).unwrap(),
            s(&["B-GENE", "I-GENE", "E-GENE", "O"])
        );
        assert_eq!(
            encode(&[Chunk::new(1, 1, "GENE")], 3, TagScheme::Bioes).unwrap(),
            s(&["O", "S-GENE", "O"])
        );
        assert_eq!(
            encode(&[Chunk::new(0, 1, "X"), Chunk::new(2, 3, "X")], 4, TagScheme::Bio).unwrap(),
            s(&["B-X", "I-X", "B-X", "I-X"])
        );
    }

    #[test]
    fn encode_rejects_overlap() {
        let err = encode(&[Chunk::new(0, 2, "X"), Chunk::new(2, 3, "Y")], 5, TagScheme::Bio).unwrap_err();
        assert_eq!(err.to_string(), "overlap at token 2");
    }

    #[test]
    fn decode_examples() {
        assert_eq!(
            decode(&["B-GENE", "E-GENE", "O"], TagScheme::Bioes).unwrap(),
            vec![Chunk::new(0, 1, "GENE")]
        );
        assert!(decode(&["O", "O"], TagScheme::Bio).unwrap().is_empty());
        assert_eq!(
            decode(&["B-X", "I-X", "B-X"], TagScheme::Bio).unwrap(),
            vec![Chunk::new(0, 1, "X"), Chunk::new(2, 2, "X")]
        );
    }

    #[test]
    fn strict_decode_reports_position() {
        match decode(&["O", "I-X"], TagScheme::Bio).unwrap_err() {
            TagError::IllFormed { position, .. } => assert_eq!(position, 1),
            e => panic!("{e}"),
        }
        assert!(matches!(
            decode(&["S-X"], TagScheme::Bio),
            Err(TagError::InvalidTag { position: 0, .. })
        ));
        assert!(decode(&["B-X"], TagScheme::Bioes).is_err());
    }

    #[test]
    fn lenient_examples() {
        assert_eq!(decode_lenient(&["I-X", "I-X"], TagScheme::Bio), vec![Chunk::new(0, 1, "X")]);
        assert_eq!(
            decode_lenient(&["B-X", "I-Y"], TagScheme::Bio),
            vec![Chunk::new(0, 0, "X"), Chunk::new(1, 1, "Y")]
        );
        assert_eq!(
            decode_lenient(&["B-X", "I-X", "O", "E-Y", "B-Y"], TagScheme::Bioes),
            vec![Chunk::new(0, 1, "X"), Chunk::new(3, 3, "Y"), Chunk::new(4, 4, "Y")]
        );
        assert!(decode_lenient::<&str>(&[], TagScheme::Bioes).is_empty());
    }

    #[test]
    fn labels_keep_case_and_hyphens() {
        let tags = encode(&[Chunk::new(0, 0, "Gene-Product")], 1, TagScheme::Bioes).unwrap();
        assert_eq!(tags, s(&["S-Gene-Product"]));
        assert_eq!(decode(&tags, TagScheme::Bioes).unwrap()[0].label, "Gene-Product");
    }

    fn tokens_of(text: &str) -> Vec<Annotation> {
        let mut out = Vec::new();
        let mut pos = 0;
        for w in text.split(' ') {
            let n = w.chars().count();
            out.push(Annotation::new(AnnotationKind::Token, pos, pos + n - 1, w).with_meta("sentence", 0));
            pos += n + 1;
        }
        out
    }

    fn tag_annotations(tags: &[&str]) -> Vec<Annotation> {
        tags.iter()
            .map(|t| Annotation::new(AnnotationKind::NamedEntityTag, 0, 0, *t).with_meta("sentence", 0))
            .collect()
    }

    #[test]
    fn converter_builds_character_spans() {
        let text = "severe fever and sore throat";
        let chars = CharText::new(text);
        let tokens = tokens_of(text);
        let tags = tag_annotations(&["B-PROBLEM", "I-PROBLEM", "O", "B-PROBLEM", "I-PROBLEM"]);
        let chunks = convert_ner(&chars, &tokens, &tags, TagScheme::Bio, false).unwrap();
        let got: Vec<_> = chunks.iter().map(|c| (c.result.as_str(), c.begin, c.end)).collect();
        assert_eq!(got, vec![("severe fever", 0, 11), ("sore throat", 17, 27)]);
        assert_eq!(chunks[0].meta("entity"), Some("PROBLEM"));

        let none = convert_ner(&chars, &tokens, &tag_annotations(&["O"; 5]), TagScheme::Bio, false).unwrap();
        assert!(none.is_empty());
        let err = convert_ner(&chars, &tokens, &tag_annotations(&["O"; 4]), TagScheme::Bio, false).unwrap_err();
        assert!(err.to_string().starts_with("length mismatch"));
    }

    fn chunk_sets() -> impl Strategy<Value = (Vec<Chunk>, usize)> {
        (1usize..30).prop_flat_map(|n| {
            proptest::collection::vec((0usize..4, 0usize..3, 0usize..3), 0..10).prop_map(move |spec| {
                let mut chunks = Vec::new();
                let mut pos = 0;
                for (gap, len, label) in spec {
                    let first = pos + gap;
                    let last = first + len;
                    if last >= n {
                        break;
                    }
                    chunks.push(Chunk::new(first, last, ["A", "B", "Gene"][label]));
                    pos = last + 1;
                }
                (chunks, n)
            })
        })
    }

    proptest! {
        #[test]
        fn round_trip((chunks, n) in chunk_sets()) {
            for scheme in [TagScheme::Bio, TagScheme::Bioes] {
                let tags = encode(&chunks, n, scheme).unwrap();
                prop_assert_eq!(tags.len(), n);
                prop_assert_eq!(&decode(&tags, scheme).unwrap(), &chunks);
                prop_assert_eq!(&decode_lenient(&tags, scheme), &chunks);
            }
        }
    }
}
