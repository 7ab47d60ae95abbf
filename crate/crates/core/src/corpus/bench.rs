use std::fmt::Write;
use std::hash::{DefaultHasher, Hasher};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::annotation::Record;
use crate::pipeline::PipelineModel;
use crate::{Error, Result};

/// Hash of a record's JSON serialization.
pub fn record_digest(record: &Record) -> u64 {
    let bytes = serde_json::to_vec(record).expect("records serialize");
    let mut h = DefaultHasher::new();
    h.write(&bytes);
    h.finish()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub group: String,
    pub workers: usize,
    pub documents: usize,
    pub seconds: f64,
    pub documents_per_second: f64,
    /// Time at the first worker count divided by time at this one.
    pub speedup: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub bytes: usize,
    pub rows: Vec<BenchmarkRow>,
}

impl BenchmarkReport {
    pub fn speedup(&self, group: &str, workers: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.group == group && r.workers == workers)
            .map(|r| r.speedup)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("group\tworkers\tdocuments\tseconds\tdocs_per_second\tspeedup\n");
        for r in &self.rows {
            writeln!(
                out,
                "{}\t{}\t{}\t{:.3}\t{:.1}\t{:.2}",
                r.group, r.workers, r.documents, r.seconds, r.documents_per_second, r.speedup
            )
            .unwrap();
        }
        out
    }
}

/// Times every pipeline at every worker count over `records`, `batch`
/// documents at a time. Outputs are compared by per-document digest across
/// worker counts before any timing is returned.
pub fn benchmark(
    records: &[Record],
    groups: &[(&str, &PipelineModel)],
    worker_counts: &[usize],
    batch: usize,
) -> Result<BenchmarkReport> {
    if worker_counts.is_empty() || worker_counts.contains(&0) {
        return Err(Error::Config("worker counts must be positive".into()));
    }
    let batch = batch.max(1);
    let mut rows = Vec::new();
    for (group, model) in groups {
        let mut reference: Option<(usize, Vec<u64>)> = None;
        let mut base = 0.0;
        for &workers in worker_counts {
            let mut seconds = 0.0;
            let mut digests = Vec::with_capacity(records.len());
            for chunk in records.chunks(batch) {
                let input = chunk.to_vec();
                let start = Instant::now();
                digests.extend(model.map_parallel(input, workers, |r| record_digest(&r))?);
                seconds += start.elapsed().as_secs_f64();
            }
            match &reference {
                None => {
                    reference = Some((workers, digests));
                    base = seconds;
                }
                Some((w0, expected)) => {
                    if let Some(i) = (0..records.len()).find(|&i| expected[i] != digests[i]) {
                        return Err(Error::Equivalence(format!(
                            "group '{group}': document '{}' differs between {w0} and {workers} workers",
                            records[i].id
                        )));
                    }
                }
            }
            rows.push(BenchmarkRow {
                group: group.to_string(),
                workers,
                documents: records.len(),
                seconds,
                documents_per_second: records.len() as f64 / seconds.max(f64::MIN_POSITIVE),
                speedup: base / seconds.max(f64::MIN_POSITIVE),
            });
        }
    }
    Ok(BenchmarkReport {
        bytes: records.iter().map(|r| r.text.len()).sum(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::{Annotation, AnnotationKind};
    use crate::config::PipelineConfig;
    use crate::pipeline::{InputColumn, StageSpec, Transformer};
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    fn records() -> Vec<Record> {
        (0..20).map(|i| Record::new(format!("{i}"), format!("Text {i}. More text."))).collect()
    }

    #[test]
    fn single_worker_count_has_unit_speedup() {
        let model = PipelineConfig::tokenization().build().unwrap();
        let report = benchmark(&records(), &[("tokenization", &model)], &[1], 7).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.rows[0].speedup, 1.0);
        assert_eq!(report.rows[0].documents, 20);
    }

    #[test]
    fn two_rows_per_group() {
        let model = PipelineConfig::tokenization().build().unwrap();
        let groups = [("a", &model), ("b", &model)];
        let report = benchmark(&records(), &groups, &[1, 4], 5).unwrap();
        assert_eq!(report.rows.len(), 4);
        assert!(report.speedup("b", 4).is_some());
        assert_eq!(report.to_tsv().lines().count(), 5);
    }

    struct Flaky(StageSpec, AtomicUsize);

    impl Transformer for Flaky {
        fn spec(&self) -> &StageSpec {
            &self.0
        }

        fn annotate(&self, record: &Record) -> crate::Result<Vec<Annotation>> {
            let n = self.1.fetch_add(1, Ordering::SeqCst);
            Ok(vec![Annotation::new(AnnotationKind::Document, 0, 0, format!("{}{n}", record.id))])
        }
    }

    #[test]
    fn differing_outputs_are_an_equivalence_error() {
        let spec = StageSpec::new("flaky", vec![InputColumn::text()], "out", AnnotationKind::Document);
        let model = PipelineModel::new(vec![Arc::new(Flaky(spec, AtomicUsize::new(0)))], Vec::new()).unwrap();
        let err = benchmark(&records(), &[("flaky", &model)], &[1, 2], 20).unwrap_err();
        assert!(matches!(err, Error::Equivalence(_)), "{err}");
    }
}
