#![allow(dead_code)]

use nssvm::Dataset;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random two-class instance with both labels present.
pub fn random_instance(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Dataset {
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let mut labels: Vec<f64> = (0..m)
        .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
        .collect();
    labels[0] = 1.0;
    labels[m - 1] = -1.0;
    Dataset::from_rows(&rows, labels).unwrap()
}

pub fn dense_rows(d: &Dataset) -> Vec<Vec<f64>> {
    (0..d.m()).map(|i| d.row(i).to_dense(d.n())).collect()
}

/// `y_i y_j <x_i, x_j>` computed from dense copies of the rows.
pub fn gram(d: &Dataset) -> Vec<Vec<f64>> {
    let rows = dense_rows(d);
    let y = d.labels();
    (0..d.m())
        .map(|i| {
            (0..d.m())
                .map(|j| y[i] * y[j] * rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum::<f64>())
                .collect()
        })
        .collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
