//! Extracts the 69-slot feature vector for each bundled corpus kernel and
//! prints the non-zero entries.

use std::fs;
use std::path::Path;

use hlsqor::features::{extract_design, input_names};

fn main() {
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/corpus");
    for name in ["average", "sobel", "matrix_mult", "sha_like", "adpcm_like"] {
        let source = fs::read_to_string(corpus.join(format!("{name}.c"))).expect("source");
        let ir = fs::read_to_string(corpus.join(format!("{name}.ll"))).expect("ir");
        let ex = extract_design(Some(&source), &ir, name, 200.0).expect("extract");
        println!("{name}:");
        for (slot, value) in input_names().iter().zip(ex.features.as_input()) {
            if value != 0.0 {
                println!("  {slot:<36} {value}");
            }
        }
        for w in &ex.warnings {
            println!("  warning line {}: {}", w.line, w.message);
        }
    }
}
