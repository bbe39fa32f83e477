use std::fs;
use std::path::Path;

use hlsqor::ir::{ir_features, parse_module, IrError};
use proptest::prelude::*;

#[test]
fn corpus_modules_survive_print_and_reparse() {
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/corpus");
    for name in ["average", "sobel", "matrix_mult", "sha_like", "adpcm_like"] {
        let text = fs::read_to_string(corpus.join(format!("{name}.ll"))).unwrap();
        let module = parse_module(&text).unwrap();
        let printed = module.to_string();
        let again = parse_module(&printed).unwrap();
        assert_eq!(again, module, "{name}");
        assert_eq!(again.to_string(), printed, "{name}");
        let top = module.function(name).unwrap();
        assert_eq!(ir_features(top).unwrap(), ir_features(again.function(name).unwrap()).unwrap());
    }
}

#[test]
fn parse_errors_point_at_the_token() {
    let text = "define i32 @f(i32 %a) {\nentry:\n  %x = add i32 %a, 1\n  %y = frobnicate i32 %x, 2\n  ret i32 %y\n}\n";
    match parse_module(text) {
        Err(IrError::Parse { line, column, token, .. }) => {
            assert_eq!((line, column), (4, 8));
            assert_eq!(token, "frobnicate");
        }
        other => panic!("unexpected {other:?}"),
    }
}

const OPS: [&str; 8] = ["add", "sub", "mul", "xor", "and", "or", "shl", "ashr"];

/// A random function with `blocks.len()` blocks; each block computes a chain of
/// binary ops and branches forward (conditionally or not) or returns.
fn render(blocks: &[(Vec<(usize, u8)>, u8)]) -> (String, usize) {
    let mut out = String::from("define i32 @gen(i32 %p0, i32 %p1) {\n");
    let mut count = 0;
    let mut value = 0;
    for (b, (ops, exit)) in blocks.iter().enumerate() {
        out.push_str(&format!("b{b}:\n"));
        let mut prev = "%p0".to_string();
        for (op, k) in ops {
            out.push_str(&format!("  %v{value} = {} i32 {prev}, {k}\n", OPS[op % OPS.len()]));
            prev = format!("%v{value}");
            value += 1;
            count += 1;
        }
        let later = blocks.len() - b - 1;
        if later == 0 || exit % 3 == 0 {
            out.push_str(&format!("  ret i32 {prev}\n"));
        } else if exit % 3 == 1 {
            out.push_str(&format!("  br label %b{}\n", b + 1 + (*exit as usize % later)));
        } else {
            out.push_str(&format!("  %c{b} = icmp slt i32 {prev}, %p1\n"));
            out.push_str(&format!("  br i1 %c{b}, label %b{}, label %b{}\n", b + 1, blocks.len() - 1));
            count += 1;
        }
        count += 1;
    }
    out.push_str("}\n");
    (out, count)
}

proptest! {
    #[test]
    fn generated_functions_round_trip(
        blocks in prop::collection::vec((prop::collection::vec((0usize..8, 1u8..30), 0..6), any::<u8>()), 1..8),
    ) {
        let (text, count) = render(&blocks);
        let module = parse_module(&text).unwrap();
        let f = module.function("gen").unwrap();
        prop_assert_eq!(f.blocks.len(), blocks.len());
        prop_assert_eq!(f.instructions().count(), count);
        let again = parse_module(&module.to_string()).unwrap();
        prop_assert_eq!(&again, &module);
        let features = ir_features(f).unwrap();
        prop_assert_eq!(features.get("ir_block_count"), Some(blocks.len() as f64));
    }
}
