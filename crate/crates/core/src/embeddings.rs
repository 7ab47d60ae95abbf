//! Pretrained word vectors in the common whitespace-separated text format.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use thiserror::Error;

use crate::nn::Tensor;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("line {line}: expected {expected} values, got {found}")]
    Dimension {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: invalid number '{value}'")]
    Number { line: usize, value: String },
    #[error("embedding file contains no vectors")]
    Empty,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Frozen word-vector table.
#[derive(Clone, Debug)]
pub struct EmbeddingStore {
    dimension: usize,
    vocabulary: HashMap<String, usize>,
    words: Vec<String>,
    matrix: Tensor,
    zero: Vec<f64>,
    pub case_fallback: bool,
    /// Lines whose token was already present (first occurrence wins).
    pub duplicates: usize,
}

/// Result of a lookup: the vector (zeros when not covered) and whether it was found.
#[derive(Clone, Copy, Debug)]
pub struct Lookup<'a> {
    pub vector: &'a [f64],
    pub covered: bool,
}

impl EmbeddingStore {
    /// Builds a store from `(token, vector)` pairs; duplicates keep the first vector.
    pub fn from_entries<I>(dimension: usize, entries: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (String, Vec<f64>)>,
    {
        let mut vocabulary = HashMap::new();
        let mut words = Vec::new();
        let mut data = Vec::new();
        let mut duplicates = 0;
        for (i, (word, vector)) in entries.into_iter().enumerate() {
            if vector.len() != dimension {
                return Err(EmbeddingError::Dimension {
                    line: i + 1,
                    expected: dimension,
                    found: vector.len(),
                });
            }
            if vocabulary.contains_key(&word) {
                duplicates += 1;
                continue;
            }
            vocabulary.insert(word.clone(), words.len());
            words.push(word);
            data.extend(vector);
        }
        let matrix = Tensor::from_vec(&[words.len(), dimension], data).expect("rows match dimension");
        Ok(EmbeddingStore {
            dimension,
            vocabulary,
            words,
            matrix,
            zero: vec![0.0; dimension],
            case_fallback: true,
            duplicates,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EmbeddingError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| EmbeddingError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::read(BufReader::new(file)).map_err(|e| match e {
            EmbeddingError::Io { source, .. } => EmbeddingError::Io {
                path: path.display().to_string(),
                source,
            },
            other => other,
        })
    }

    /// Parses `token v1 v2 ... vD` lines with an optional leading `V D` header.
    pub fn read<R: BufRead>(reader: R) -> Result<Self, EmbeddingError> {
        let mut dimension: Option<usize> = None;
        let mut entries = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|source| EmbeddingError::Io {
                path: String::new(),
                source,
            })?;
            let mut fields = line.split_whitespace();
            let Some(token) = fields.next() else {
                continue;
            };
            let values: Vec<&str> = fields.collect();
            if line_no == 1 && values.len() == 1 {
                if let (Ok(_), Ok(d)) = (token.parse::<usize>(), values[0].parse::<usize>()) {
                    dimension = Some(d);
                    continue;
                }
            }
            let expected = *dimension.get_or_insert(values.len());
            if values.len() != expected {
                return Err(EmbeddingError::Dimension {
                    line: line_no,
                    expected,
                    found: values.len(),
                });
            }
            let vector = values
                .iter()
                .map(|v| {
                    v.parse::<f64>().map_err(|_| EmbeddingError::Number {
                        line: line_no,
                        value: v.to_string(),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            entries.push((token.to_string(), vector));
        }
        match dimension {
            Some(d) if d > 0 && !entries.is_empty() => Self::from_entries(d, entries),
            _ => Err(EmbeddingError::Empty),
        }
    }

    /// Writes the store in the text format, with a `V D` header.
    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.words.len(), self.dimension)?;
        for (i, word) in self.words.iter().enumerate() {
            write!(w, "{word}")?;
            for v in self.matrix.row(i) {
                write!(w, " {v}")?;
            }
            writeln!(w)?;
        }
        w.flush()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Exact match, then lowercase match when `case_fallback` is set, else zeros.
    pub fn lookup(&self, token: &str) -> Lookup<'_> {
        let row = self.vocabulary.get(token).copied().or_else(|| {
            if self.case_fallback {
                self.vocabulary.get(&token.to_lowercase()).copied()
            } else {
                None
            }
        });
        match row {
            Some(r) => Lookup {
                vector: self.matrix.row(r),
                covered: true,
            },
            None => Lookup {
                vector: &self.zero,
                covered: false,
            },
        }
    }

    /// Fraction of tokens with a vector; 1.0 for an empty list.
    pub fn coverage<S: AsRef<str>>(&self, tokens: &[S]) -> f64 {
        if tokens.is_empty() {
            return 1.0;
        }
        let covered = tokens.iter().filter(|t| self.lookup(t.as_ref()).covered).count();
        covered as f64 / tokens.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO: &str = "fever 0.1 0.2 0.3\ncough -1 0 1e-2\n";

    #[test]
    fn loads_headerless_file() {
        let store = EmbeddingStore::read(TWO.as_bytes()).unwrap();
        assert_eq!((store.len(), store.dimension()), (2, 3));
        assert_eq!(store.lookup("cough").vector, &[-1.0, 0.0, 0.01]);
    }

    #[test]
    fn header_is_equivalent() {
        let a = EmbeddingStore::read(TWO.as_bytes()).unwrap();
        let b = EmbeddingStore::read(format!("2 3\n{TWO}").as_bytes()).unwrap();
        for w in ["fever", "cough", "rash"] {
            assert_eq!(a.lookup(w).vector, b.lookup(w).vector);
        }
    }

    #[test]
    fn dimension_mismatch_names_the_line() {
        let err = EmbeddingStore::read("fever 1 2 3\ncough 1 2\n".as_bytes()).unwrap_err();
        assert_eq!(err.to_string(), "line 2: expected 3 values, got 2");
        let err = EmbeddingStore::read("3 3\nfever 1 2 3\ncough 1 2\n".as_bytes()).unwrap_err();
        assert!(err.to_string().starts_with("line 3: expected 3 values"));
    }

    #[test]
    fn duplicates_keep_first() {
        let store = EmbeddingStore::read("a 1\nb 2\na 3\n".as_bytes()).unwrap();
        assert_eq!(store.duplicates, 1);
        assert_eq!(store.lookup("a").vector, &[1.0]);
    }

    #[test]
    fn lookup_rules() {
        let mut store = EmbeddingStore::read(TWO.as_bytes()).unwrap();
        let hit = store.lookup("fever");
        assert!(hit.covered);
        let miss = store.lookup("rash");
        assert!(!miss.covered);
        assert_eq!(miss.vector, &[0.0, 0.0, 0.0]);
        assert_eq!(store.lookup("Fever").vector, store.lookup("fever").vector);
        store.case_fallback = false;
        assert!(!store.lookup("Fever").covered);
    }

    #[test]
    fn coverage_fraction() {
        let store = EmbeddingStore::read(TWO.as_bytes()).unwrap();
        assert_eq!(store.coverage(&["fever", "cough"]), 1.0);
        assert_eq!(store.coverage(&["fever", "x", "y", "z"]), 0.25);
        assert_eq!(store.coverage::<&str>(&[]), 1.0);
    }

    #[test]
    fn write_then_read() {
        let store = EmbeddingStore::read(TWO.as_bytes()).unwrap();
        let mut buf = Vec::new();
        store.write(&mut buf).unwrap();
        let back = EmbeddingStore::read(&buf[..]).unwrap();
        assert_eq!(back.lookup("cough").vector, store.lookup("cough").vector);
    }
}
