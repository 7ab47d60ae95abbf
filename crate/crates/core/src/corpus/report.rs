use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::annotation::{Annotation, AnnotationKind, Record};
use crate::assertion::AssertionLabel;

fn chunks(record: &Record) -> impl Iterator<Item = (&str, &Annotation)> {
    record.columns.iter().flat_map(|(name, column)| {
        column
            .iter()
            .filter(|a| a.kind == AnnotationKind::Chunk)
            .map(move |a| (name.as_str(), a))
    })
}

fn entity(a: &Annotation) -> &str {
    a.meta("entity").unwrap_or("")
}

fn selected_types<'a>(records: &'a [Record], requested: &[String]) -> Vec<String> {
    if !requested.is_empty() {
        return requested.to_vec();
    }
    let found: BTreeSet<&'a str> = records.iter().flat_map(chunks).map(|(_, a)| entity(a)).collect();
    found.into_iter().map(str::to_string).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermCount {
    pub term: String,
    pub count: usize,
}

/// The most frequent chunk texts per entity type.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopTerms {
    pub entity_types: Vec<String>,
    pub terms: Vec<Vec<TermCount>>,
    /// Requested types with no chunks at all.
    pub unknown: Vec<String>,
}

/// Counts chunk texts case-insensitively and shows each term in its most
/// frequent surface form (lexicographically smallest on ties). Terms are
/// ordered by count, then by lowercased text.
pub fn top_terms(records: &[Record], entity_types: &[String], k: usize) -> TopTerms {
    let types = selected_types(records, entity_types);
    let mut counts: Vec<HashMap<String, BTreeMap<&str, usize>>> = vec![HashMap::new(); types.len()];
    for (_, a) in records.iter().flat_map(chunks) {
        if let Some(t) = types.iter().position(|t| t == entity(a)) {
            *counts[t].entry(a.result.to_lowercase()).or_default().entry(a.result.as_str()).or_default() += 1;
        }
    }
    let mut unknown = Vec::new();
    let terms = types
        .iter()
        .zip(counts)
        .map(|(t, forms)| {
            if forms.is_empty() {
                warn!("no chunks of entity type '{t}'");
                unknown.push(t.clone());
            }
            let mut ranked: Vec<(String, usize, &str)> = forms
                .iter()
                .map(|(key, surface)| {
                    let total = surface.values().sum();
                    let shown = surface.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).unwrap().0;
                    (key.clone(), total, *shown)
                })
                .collect();
            ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            ranked
                .into_iter()
                .take(k)
                .map(|(_, count, shown)| TermCount { term: shown.to_string(), count })
                .collect()
        })
        .collect();
    TopTerms { entity_types: types, terms, unknown }
}

impl TopTerms {
    /// One column pair (term, count) per entity type, one row per rank.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("rank");
        for t in &self.entity_types {
            write!(out, "\t{t}\t{t}_count").unwrap();
        }
        out.push('\n');
        let rows = self.terms.iter().map(Vec::len).max().unwrap_or(0);
        for rank in 0..rows {
            write!(out, "{}", rank + 1).unwrap();
            for column in &self.terms {
                match column.get(rank) {
                    Some(tc) => write!(out, "\t{}\t{}", tc.term, tc.count).unwrap(),
                    None => out.push_str("\t\t"),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Chunk counts per document and entity type.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMatrix {
    pub entity_types: Vec<String>,
    pub rows: Vec<(String, Vec<usize>)>,
    pub totals: Vec<usize>,
    /// Totals per chunk column, for pipelines running several NER models.
    pub column_totals: Vec<(String, Vec<usize>)>,
}

/// Rows follow the record order; documents without chunks get a zero row.
pub fn entity_matrix(records: &[Record], entity_types: &[String]) -> EntityMatrix {
    let types = selected_types(records, entity_types);
    let mut totals = vec![0; types.len()];
    let mut by_column: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let rows = records
        .iter()
        .map(|r| {
            let mut row = vec![0; types.len()];
            for (column, a) in chunks(r) {
                if let Some(t) = types.iter().position(|t| t == entity(a)) {
                    row[t] += 1;
                    totals[t] += 1;
                    by_column.entry(column.to_string()).or_insert_with(|| vec![0; types.len()])[t] += 1;
                }
            }
            (r.id.clone(), row)
        })
        .collect();
    EntityMatrix {
        entity_types: types,
        rows,
        totals,
        column_totals: by_column.into_iter().collect(),
    }
}

impl EntityMatrix {
    /// Document rows followed by a `TOTAL` row.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("document");
        for t in &self.entity_types {
            write!(out, "\t{t}").unwrap();
        }
        out.push('\n');
        let total = ("TOTAL".to_string(), self.totals.clone());
        for (id, row) in self.rows.iter().chain(std::iter::once(&total)) {
            out.push_str(id);
            for n in row {
                write!(out, "\t{n}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// One row per chunk column with its per-type counts and overall total.
    pub fn column_totals_tsv(&self) -> String {
        let mut out = String::from("column");
        for t in &self.entity_types {
            write!(out, "\t{t}").unwrap();
        }
        out.push_str("\ttotal\n");
        for (column, row) in &self.column_totals {
            out.push_str(column);
            for n in row {
                write!(out, "\t{n}").unwrap();
            }
            writeln!(out, "\t{}", row.iter().sum::<usize>()).unwrap();
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssertionRow {
    pub document: String,
    pub chunk: String,
    pub entity: String,
    pub assertion: AssertionLabel,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssertionFilter {
    pub rows: Vec<AssertionRow>,
}

/// Assertion annotations whose entity type is in `entity_types` and whose label
/// is in `labels`; an empty filter keeps everything.
pub fn assertion_filter(records: &[Record], entity_types: &[String], labels: &[AssertionLabel]) -> AssertionFilter {
    let mut rows = Vec::new();
    for r in records {
        for a in r.columns.values().flatten().filter(|a| a.kind == AnnotationKind::Assertion) {
            let Ok(label) = a.meta("assertion").unwrap_or(&a.result).parse::<AssertionLabel>() else {
                warn!("document {}: unknown assertion label '{}'", r.id, a.result);
                continue;
            };
            let entity = a.meta("entity").unwrap_or("");
            if (entity_types.is_empty() || entity_types.iter().any(|t| t == entity))
                && (labels.is_empty() || labels.contains(&label))
            {
                rows.push(AssertionRow {
                    document: r.id.clone(),
                    chunk: a.meta("chunk").unwrap_or("").to_string(),
                    entity: entity.to_string(),
                    assertion: label,
                });
            }
        }
    }
    AssertionFilter { rows }
}

impl AssertionFilter {
    /// Two columns: chunk text and assertion label.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("chunk\tassertion\n");
        for row in &self.rows {
            writeln!(out, "{}\t{}", row.chunk, row.assertion.display_name()).unwrap();
        }
        out
    }
}
