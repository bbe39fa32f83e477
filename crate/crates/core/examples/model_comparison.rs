//! Compares the three regressors against a train-mean baseline on a
//! synthetic dataset, using the 120/280 protocol.

use std::collections::BTreeMap;

use hlsqor::dataset::synthetic_generate;
use hlsqor::eval::model_comparison;
use hlsqor::model::Target;

fn main() {
    let n = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(400);
    let data = synthetic_generate(n, 42, 0.05);
    let table = model_comparison(&data, &Target::ALL, &BTreeMap::new(), 42).expect("comparison");
    print!("{}", table.to_table());
}
