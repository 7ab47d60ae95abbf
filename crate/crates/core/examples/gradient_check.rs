use clinlp::ner::{EncodedSentence, NerDims, NerNetwork};
use clinlp::nn::{grad_check, GradCheckConfig, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let dims = NerDims { chars: 8, char_dim: 4, char_filters: 5, char_window: 3, word_dim: 3, hidden: 4, labels: 3 };
    let mut net = NerNetwork::new(dims, 0.0, &mut rng);
    let sentence = EncodedSentence {
        char_ids: vec![vec![1, 2, 3], vec![4, 5], vec![6]],
        words: Tensor::from_vec(&[3, 3], vec![0.1, -0.2, 0.3, 0.5, 0.0, -0.4, 0.9, 0.2, 0.1]).unwrap(),
    };
    let batch = [(&sentence, &[0usize, 1, 2][..])];
    let report = grad_check(
        &mut net,
        |n, with_grad| n.loss(&batch, None::<&mut ChaCha8Rng>, with_grad).unwrap(),
        GradCheckConfig::default(),
    );
    for p in &report.params {
        println!("{:<28} {:>6} entries  max relative error {:.2e}", p.name, p.checked, p.max_relative_error);
    }
    println!("passed: {}", report.passed());
}
