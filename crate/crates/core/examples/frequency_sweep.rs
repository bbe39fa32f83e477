//! Sweeps the target clock for one design variant with all other inputs fixed.

use std::collections::BTreeMap;

use hlsqor::dataset::synthetic_generate;
use hlsqor::eval::{default_sweep_freqs, frequency_sweep, sweep_table};
use hlsqor::model::{train, ModelKind, Target};

fn main() {
    let data = synthetic_generate(300, 5, 0.05);
    let models: Vec<_> = Target::ALL
        .iter()
        .map(|&t| train(ModelKind::GradientBoost, &data, t, &BTreeMap::new(), 5).expect("train"))
        .collect();
    let base = &data.records[0].features;
    let rows = frequency_sweep(&models, base, &default_sweep_freqs()).expect("sweep");
    print!("{}", sweep_table(&rows));
}
