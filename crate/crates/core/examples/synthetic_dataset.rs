//! Generates a labelled synthetic dataset and writes it as CSV to stdout.

use hlsqor::dataset::synthetic_generate;

fn main() {
    let mut args = std::env::args().skip(1);
    let n = args.next().and_then(|a| a.parse().ok()).unwrap_or(40);
    let seed = args.next().and_then(|a| a.parse().ok()).unwrap_or(2021);
    let data = synthetic_generate(n, seed, 0.05);
    eprintln!("{} records, designs {:?}", data.len(), data.designs());
    print!("{}", data.to_csv_string());
}
