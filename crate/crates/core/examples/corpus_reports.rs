//! Top terms, the per-document entity matrix and an assertion-filtered listing
//! over a corpus with planted entities.

use clinlp::assertion::AssertionLabel;
use clinlp::corpus::{assertion_filter, entity_matrix, top_terms};
use clinlp::synthetic::{self, DRUG, PROBLEM};

fn main() {
    let records: Vec<_> = synthetic::planted_corpus(8, 6, 3).iter().map(|d| d.gold_record()).collect();
    let types = [PROBLEM.to_string(), DRUG.to_string()];

    println!("{}", top_terms(&records, &types, 5).to_tsv());

    let matrix = entity_matrix(&records, &types);
    println!("{}", matrix.to_tsv());
    println!("{}", matrix.column_totals_tsv());

    let listing = assertion_filter(&records, &[PROBLEM.to_string()], &[AssertionLabel::Absent, AssertionLabel::Hypothetical]);
    print!("{}", listing.to_tsv());
}
