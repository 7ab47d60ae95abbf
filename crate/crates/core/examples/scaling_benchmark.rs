//! Times the tokenization stages at several worker counts over a synthetic
//! corpus. Outputs are compared across worker counts before timings are shown.
//!
//! cargo run --release --example scaling_benchmark -- 2000000

use clinlp::config::PipelineConfig;
use clinlp::corpus::benchmark;
use clinlp::synthetic;

fn main() -> clinlp::Result<()> {
    let bytes = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1_000_000);
    let records = synthetic::corpus_of_size(bytes, 20, 1);
    let tokenization = PipelineConfig::tokenization().build()?;
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let workers: Vec<usize> = [1, 2, 4, 8].into_iter().filter(|&w| w == 1 || w <= cores.max(2)).collect();
    let report = benchmark(&records, &[("tokenization", &tokenization)], &workers, 256)?;
    println!("{} documents, {} bytes, {cores} CPU(s)", records.len(), report.bytes);
    print!("{}", report.to_tsv());
    Ok(())
}
