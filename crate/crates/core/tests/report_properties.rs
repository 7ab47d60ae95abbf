use std::collections::HashMap;

use clinlp::annotation::{read_jsonl, write_jsonl, Annotation, AnnotationKind, Record};
use clinlp::corpus::{entity_matrix, top_terms};
use proptest::prelude::*;

const TERMS: &[&str] = &["cough", "Cough", "COUGH", "fever", "Fever", "sars", "SARS", "rash"];

fn records() -> impl Strategy<Value = Vec<Record>> {
    let chunk = (prop::sample::select(TERMS), prop::sample::select(vec!["Symptom", "Virus"]), 0usize..2);
    prop::collection::vec(prop::collection::vec(chunk, 0..8), 0..6).prop_map(|docs| {
        docs.into_iter()
            .enumerate()
            .map(|(i, chunks)| {
                let mut r = Record::new(format!("d{i}"), "");
                for (term, entity, column) in chunks {
                    let a = Annotation::new(AnnotationKind::Chunk, 0, 0, term).with_meta("entity", entity);
                    r.columns.entry(format!("ner_chunk_{column}")).or_default().push(a);
                }
                r
            })
            .collect()
    })
}

fn oracle(records: &[Record], entity: &str, k: usize) -> Vec<(String, usize)> {
    let mut forms: HashMap<String, HashMap<String, usize>> = HashMap::new();
    for a in records.iter().flat_map(|r| r.columns.values().flatten()) {
        if a.meta("entity") == Some(entity) {
            *forms.entry(a.result.to_lowercase()).or_default().entry(a.result.clone()).or_default() += 1;
        }
    }
    let mut rows: Vec<(String, usize, String)> = forms
        .into_iter()
        .map(|(key, f)| {
            let best = *f.values().max().unwrap();
            let shown = f.iter().filter(|e| *e.1 == best).map(|e| e.0.clone()).min().unwrap();
            (key, f.values().sum(), shown)
        })
        .collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    rows.into_iter().take(k).map(|r| (r.2, r.1)).collect()
}

proptest! {
    #[test]
    fn top_terms_match_counting_oracle(records in records(), k in 1usize..5) {
        let types = vec!["Symptom".to_string(), "Virus".to_string()];
        let report = top_terms(&records, &types, k);
        for (i, t) in types.iter().enumerate() {
            let got: Vec<(String, usize)> = report.terms[i].iter().map(|c| (c.term.clone(), c.count)).collect();
            prop_assert_eq!(got, oracle(&records, t, k));
        }
    }

    #[test]
    fn matrix_rows_count_every_chunk(records in records()) {
        let m = entity_matrix(&records, &[]);
        prop_assert_eq!(m.rows.len(), records.len());
        for ((id, row), r) in m.rows.iter().zip(&records) {
            prop_assert_eq!(id, &r.id);
            prop_assert_eq!(row.iter().sum::<usize>(), r.columns.values().map(Vec::len).sum::<usize>());
        }
        let by_column: usize = m.column_totals.iter().flat_map(|c| &c.1).sum();
        prop_assert_eq!(by_column, m.totals.iter().sum::<usize>());
    }

    #[test]
    fn reports_are_a_function_of_the_file(records in records()) {
        let mut bytes = Vec::new();
        write_jsonl(&mut bytes, &records).unwrap();
        let a = read_jsonl(bytes.as_slice()).unwrap();
        let b = read_jsonl(bytes.as_slice()).unwrap();
        prop_assert_eq!(top_terms(&a, &[], 10).to_tsv(), top_terms(&b, &[], 10).to_tsv());
        prop_assert_eq!(entity_matrix(&a, &[]).to_tsv(), entity_matrix(&records, &[]).to_tsv());
    }
}
