//! Chunk-level and assertion metrics, rendered as a table and as JSON.

use clinlp::assertion::AssertionLabel::*;
use clinlp::eval::{assertion_report, chunk_prf, format_report, token_accuracy, ReportStyle};
use clinlp::tags::{decode, TagScheme};

fn main() {
    let gold = [["B-DRUG", "O", "B-PROBLEM", "I-PROBLEM", "O"], ["O", "B-PROBLEM", "O", "B-DRUG", "O"]];
    let pred = [["B-DRUG", "O", "B-PROBLEM", "O", "O"], ["O", "B-PROBLEM", "O", "B-DRUG", "B-DRUG"]];
    let chunks = |s: &[[&str; 5]; 2]| s.iter().map(|t| decode(t, TagScheme::Bio).unwrap()).collect::<Vec<_>>();
    let mut report = chunk_prf(&chunks(&gold), &chunks(&pred)).unwrap();
    report.token_accuracy = Some(token_accuracy(gold.concat().as_slice(), pred.concat().as_slice()).unwrap());
    println!("{}", format_report(&report, ReportStyle::Table));

    let gold = [Present, Absent, Absent, Possible, Conditional, Hypothetical, AssociatedWithSomeoneElse, Present];
    let pred = [Present, Absent, Present, Possible, Conditional, Possible, AssociatedWithSomeoneElse, Present];
    let report = assertion_report(&gold, &pred).unwrap();
    println!("{}", format_report(&report, ReportStyle::Table));
    println!("{}", format_report(&report, ReportStyle::Json));
}
