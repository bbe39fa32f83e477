//! Prints R² on a fixed hold-out as the training share grows.

use std::collections::BTreeMap;

use hlsqor::dataset::synthetic_generate;
use hlsqor::eval::learning_curve;
use hlsqor::model::{ModelKind, Target};

fn main() {
    let data = synthetic_generate(300, 11, 0.0);
    let fractions = [0.05, 0.1, 0.2, 0.3, 0.5, 0.8, 1.0];
    println!("{:<10} {:>8} {:>8} {:>8}", "fraction", "cp", "latency", "lut");
    let curves: Vec<Vec<(f64, f64)>> = Target::ALL
        .iter()
        .map(|&t| learning_curve(&data, ModelKind::GradientBoost, t, &fractions, &BTreeMap::new(), 11).expect("curve"))
        .collect();
    for (i, f) in fractions.iter().enumerate() {
        println!("{:<10} {:>8.3} {:>8.3} {:>8.3}", f, curves[0][i].1, curves[1][i].1, curves[2][i].1);
    }
}
