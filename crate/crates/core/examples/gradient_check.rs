//! Compares backpropagated gradients of a tiny network with central
//! differences, tensor by tensor.
//!
//! cargo run --release --example gradient_check

use std::sync::Arc;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use repocat::embedding::EmbeddingMatrix;
use repocat::model::{gradient_check, ClassifierConfig, ClassifierModel, TENSOR_NAMES};

fn main() -> repocat::Result<()> {
    let config = ClassifierConfig {
        seq_len: 10,
        embed_dims: 6,
        filters: 4,
        kernel_size: 3,
        pool_size: 2,
        lstm_units: 5,
        hidden_units: 8,
        num_categories: 3,
        dropout_level: 0.0,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let vectors = Array2::from_shape_fn((12, 6), |(i, _)| if i < 2 { 0.0 } else { rng.random_range(-1.0..1.0) });
    let mut model = ClassifierModel::new(config, Arc::new(EmbeddingMatrix::from_array(vectors)?), 1)?;
    for b in [&mut model.params.conv_b, &mut model.params.hidden_b] {
        b.mapv_inplace(|_| rng.random_range(0.05..0.2));
    }
    let ids = [2, 5, 7, 3, 11, 4, 9, 0, 0, 0];
    let report = gradient_check(&model, &ids, 1, 1e-5)?;
    for (name, (a, n)) in TENSOR_NAMES.iter().zip(report.analytic.slices().iter().zip(report.numeric.slices())) {
        let worst = a.iter().zip(n.iter()).map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-8)).fold(0.0, f64::max);
        println!("{name:<8} {:>4} values, max relative error {worst:.2e}", a.len());
    }
    println!("overall {:.2e} at {:?}", report.max_relative_error, report.worst);
    Ok(())
}
