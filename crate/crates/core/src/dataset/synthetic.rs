//! Synthetic oracle datasets.
//!
//! Each variant is a generated kernel: a C source file with HLS pragmas and a
//! matching LLVM IR module, run through the normal extraction pipeline. The
//! labels are then a fixed function of the extracted features:
//!
//! ```text
//! cp_ns   = 0.8 + 0.35*log2(1 + ir_math_max_per_bb) + 0.1*cdfg_longest_path_len + 420/target_freq_mhz
//! latency = round(2 + src_total_loop_count*src_avg_batch_size*(0.75 + target_freq_mhz/400))
//! luts    = round(40 + 18*ir_math_total + 30*cdfg_fcu_count + 12*ir_logic_total
//!                 + 150*src_num_array_partition_pragmas)
//! ```
//!
//! With noise level `e`, each raw label is multiplied by an independent
//! `1 + e*u`, `u ~ U[-1, 1]`, before rounding. Labels are finally clamped to
//! cp 1.436..=9.371 ns, latency 2..=63536 and luts 4..=60537.
//!
//! A dataset is one design. Its skeleton is drawn once per seed: 1-8
//! sequential loops with bound 2^k (k in 2..=11), 1-4 chained arithmetic ops
//! and 0-2 logic ops per iteration and an optional branch in the body, an
//! element type among i8/i16/i32/float/double, and 0-3 child functions.
//! Every variant then draws its own pragmas and frequency: unroll 2^j
//! (j <= min(k, 5)) per loop, pipelining with probability 1/2 at II 1-3,
//! 0-4 array_partition and 0-2 array_reshape pragmas, an inline pragma on a
//! random number of the children, and a target frequency from
//! [`SWEEP_FREQS_MHZ`].

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Dataset, DesignRecord, Labels};
use crate::features::{extract_design, FeatureVector};

/// Target frequencies of the sweep study, in MHz.
pub const SWEEP_FREQS_MHZ: [f64; 8] = [100.0, 125.0, 150.0, 175.0, 200.0, 225.0, 300.0, 500.0];

pub const DEVICES: [&str; 3] = ["zynq7000", "virtex7", "kintex7"];

const CP_RANGE: (f64, f64) = (1.436, 9.371);
const LATENCY_RANGE: (f64, f64) = (2.0, 63536.0);
const LUT_RANGE: (f64, f64) = (4.0, 60537.0);

/// Noise-free labels of a feature vector.
pub fn ground_truth(features: &FeatureVector) -> Labels {
    labels_with_factors(features, [1.0; 3])
}

fn labels_with_factors(fv: &FeatureVector, factors: [f64; 3]) -> Labels {
    let f = |name: &str| fv.get(name).expect("schema slot");
    let freq = fv.target_freq_mhz;
    let cp = 0.8
        + 0.35 * (1.0 + f("ir_math_max_per_bb")).log2()
        + 0.1 * f("cdfg_longest_path_len")
        + 420.0 / freq;
    let latency = 2.0 + f("src_total_loop_count") * f("src_avg_batch_size") * (0.75 + freq / 400.0);
    let luts = 40.0
        + 18.0 * f("ir_math_total")
        + 30.0 * f("cdfg_fcu_count")
        + 12.0 * f("ir_logic_total")
        + 150.0 * f("src_num_array_partition_pragmas");
    Labels {
        cp_ns: Some((cp * factors[0]).clamp(CP_RANGE.0, CP_RANGE.1)),
        latency_cycles: Some((latency * factors[1]).round().clamp(LATENCY_RANGE.0, LATENCY_RANGE.1) as u64),
        luts: Some((luts * factors[2]).round().clamp(LUT_RANGE.0, LUT_RANGE.1) as u64),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Elem {
    I8,
    I16,
    I32,
    Float,
    Double,
}

impl Elem {
    const ALL: [Elem; 5] = [Elem::I8, Elem::I16, Elem::I32, Elem::Float, Elem::Double];

    fn c_type(self) -> &'static str {
        match self {
            Elem::I8 => "char",
            Elem::I16 => "short",
            Elem::I32 => "int",
            Elem::Float => "float",
            Elem::Double => "double",
        }
    }

    fn ir_type(self) -> &'static str {
        match self {
            Elem::I8 => "i8",
            Elem::I16 => "i16",
            Elem::I32 => "i32",
            Elem::Float => "float",
            Elem::Double => "double",
        }
    }

    fn is_float(self) -> bool {
        matches!(self, Elem::Float | Elem::Double)
    }

    /// Type the arithmetic runs in after widening.
    fn compute_type(self) -> &'static str {
        match self {
            Elem::I8 | Elem::I16 => "i32",
            other => other.ir_type(),
        }
    }

    fn ops(self) -> [&'static str; 3] {
        if self.is_float() {
            ["fadd", "fmul", "fsub"]
        } else {
            ["add", "mul", "sub"]
        }
    }

    fn constant(self) -> &'static str {
        if self.is_float() {
            "1.5"
        } else {
            "3"
        }
    }
}

#[derive(Debug, Clone)]
struct LoopSpec {
    bound: u64,
    unroll: u64,
    pipeline_ii: Option<u32>,
    math_ops: usize,
    logic_ops: usize,
    branch: bool,
}

#[derive(Debug, Clone)]
struct Kernel {
    elem: Elem,
    loops: Vec<LoopSpec>,
    partitions: usize,
    reshapes: usize,
    inlined: usize,
    plain_children: usize,
}

const ARRAYS: usize = 4;

/// The fixed part of a design: what stays the same across its variants.
#[derive(Debug, Clone)]
struct Skeleton {
    elem: Elem,
    /// (log2 bound, math ops, logic ops, branch) per loop
    loops: Vec<(u32, usize, usize, bool)>,
    children: usize,
}

impl Skeleton {
    fn sample(rng: &mut ChaCha8Rng) -> Self {
        let loops = (0..rng.gen_range(1..=8))
            .map(|_| {
                (
                    rng.gen_range(2..=11u32),
                    rng.gen_range(1..=4),
                    rng.gen_range(0..=2),
                    rng.gen_bool(0.3),
                )
            })
            .collect();
        Self {
            elem: *Elem::ALL.choose(rng).expect("non-empty"),
            loops,
            children: rng.gen_range(0..=3),
        }
    }

    /// One pragma configuration of the skeleton.
    fn variant(&self, rng: &mut ChaCha8Rng) -> Kernel {
        let loops = self
            .loops
            .iter()
            .map(|&(k, math_ops, logic_ops, branch)| LoopSpec {
                bound: 1 << k,
                unroll: 1 << rng.gen_range(0..=k.min(5)),
                pipeline_ii: rng.gen_bool(0.5).then(|| rng.gen_range(1..=3)),
                math_ops,
                logic_ops,
                branch,
            })
            .collect();
        let inlined = rng.gen_range(0..=self.children);
        Kernel {
            elem: self.elem,
            loops,
            partitions: rng.gen_range(0..=4),
            reshapes: rng.gen_range(0..=2),
            inlined,
            plain_children: self.children - inlined,
        }
    }
}

impl Kernel {
    fn children(&self) -> usize {
        self.inlined + self.plain_children
    }

    fn c_source(&self) -> String {
        let t = self.elem.c_type();
        let mut s = String::new();
        for c in 0..self.children() {
            let _ = writeln!(s, "void child{c}({t} *p) {{");
            if c < self.inlined {
                s.push_str("#pragma HLS inline\n");
            }
            let _ = writeln!(s, "  p[0] = p[0] * {} + p[1];\n}}\n", self.elem.constant());
        }
        let params: Vec<String> = (0..ARRAYS).map(|a| format!("{t} a{a}[2048]")).collect();
        let _ = writeln!(s, "void top({}) {{", params.join(", "));
        for p in 0..self.partitions {
            let _ = writeln!(s, "#pragma HLS array_partition variable=a{} cyclic factor=2 dim=1", p % ARRAYS);
        }
        for r in 0..self.reshapes {
            let _ = writeln!(s, "#pragma HLS array_reshape variable=a{} block factor=2 dim=1", (r + 2) % ARRAYS);
        }
        for (n, l) in self.loops.iter().enumerate() {
            let _ = writeln!(s, "  L{n}: for (int i = 0; i < {}; i++) {{", l.bound);
            if l.unroll > 1 {
                let _ = writeln!(s, "#pragma HLS unroll factor={}", l.unroll);
            }
            if let Some(ii) = l.pipeline_ii {
                let _ = writeln!(s, "#pragma HLS pipeline II={ii}");
            }
            let a = n % ARRAYS;
            let _ = writeln!(s, "    a{a}[i] = a{a}[i] * {} + a{a}[i];", self.elem.constant());
            if l.branch {
                let _ = writeln!(s, "    if (a{a}[i] > 0) a{a}[i] = a{a}[i] + 1;");
            }
            s.push_str("  }\n");
        }
        for c in 0..self.children() {
            let _ = writeln!(s, "  child{c}(a{});", c % ARRAYS);
        }
        s.push_str("}\n");
        s
    }

    fn ir(&self) -> String {
        let et = self.elem.ir_type();
        let ct = self.elem.compute_type();
        let ops = self.elem.ops();
        let k = self.elem.constant();
        let mut s = String::new();

        for c in 0..self.children() {
            let _ = writeln!(s, "define void @child{c}(ptr %p) {{\nentry:");
            let _ = writeln!(s, "  %q = getelementptr {et}, ptr %p, i32 1");
            let _ = writeln!(s, "  %x = load {et}, ptr %p\n  %y = load {et}, ptr %q");
            let _ = writeln!(s, "  %m = {} {et} %x, {k}\n  %r = {} {et} %m, %y", ops[1], ops[0]);
            let _ = writeln!(s, "  store {et} %r, ptr %p\n  ret void\n}}\n");
        }

        let params: Vec<String> = (0..ARRAYS).map(|a| format!("ptr %a{a}")).collect();
        let _ = writeln!(s, "define void @top({}) {{\nentry:", params.join(", "));
        let header = |n: usize| {
            if n < self.loops.len() {
                format!("l{n}_header")
            } else {
                "exit".to_string()
            }
        };
        let _ = writeln!(s, "  br label %{}", header(0));
        for (n, l) in self.loops.iter().enumerate() {
            let a = n % ARRAYS;
            let pred = if n == 0 { "entry".to_string() } else { header(n - 1) };
            let _ = writeln!(s, "\n{}:", header(n));
            let _ = writeln!(
                s,
                "  %l{n}_i = phi i32 [ 0, %{pred} ], [ %l{n}_next, %l{n}_latch ]"
            );
            let _ = writeln!(s, "  %l{n}_c = icmp slt i32 %l{n}_i, {}", l.bound);
            let _ = writeln!(s, "  br i1 %l{n}_c, label %l{n}_body, label %{}", header(n + 1));

            let _ = writeln!(s, "\nl{n}_body:");
            let mut last = String::new();
            for u in 0..l.unroll {
                let v = format!("%l{n}_u{u}");
                let _ = writeln!(s, "  {v}_idx = add i32 %l{n}_i, {u}");
                let _ = writeln!(s, "  {v}_p = getelementptr {et}, ptr %a{a}, i32 {v}_idx");
                let _ = writeln!(s, "  {v}_x = load {et}, ptr {v}_p");
                let mut cur = format!("{v}_x");
                if !self.elem.is_float() && et != "i32" {
                    let _ = writeln!(s, "  {v}_w = sext {et} {cur} to i32");
                    cur = format!("{v}_w");
                }
                let input = cur.clone();
                for m in 0..l.math_ops {
                    let rhs = if m == 0 { k.to_string() } else { input.clone() };
                    let _ = writeln!(s, "  {v}_m{m} = {} {ct} {cur}, {rhs}", ops[m % ops.len()]);
                    cur = format!("{v}_m{m}");
                }
                let mut idx = format!("{v}_idx");
                for g in 0..l.logic_ops {
                    let op = if g % 2 == 0 { "xor" } else { "and" };
                    let _ = writeln!(s, "  {v}_g{g} = {op} i32 {idx}, 5");
                    idx = format!("{v}_g{g}");
                }
                if !self.elem.is_float() && et != "i32" {
                    let _ = writeln!(s, "  {v}_t = trunc i32 {cur} to {et}");
                    cur = format!("{v}_t");
                }
                let _ = writeln!(s, "  store {et} {cur}, ptr {v}_p");
                last = cur;
            }
            if l.branch {
                let cmp = if self.elem.is_float() {
                    format!("fcmp ogt {et} {last}, 0.0")
                } else {
                    format!("icmp sgt {et} {last}, 0")
                };
                let _ = writeln!(s, "  %l{n}_b = {cmp}");
                let _ = writeln!(s, "  br i1 %l{n}_b, label %l{n}_then, label %l{n}_latch");
                let _ = writeln!(s, "\nl{n}_then:");
                let _ = writeln!(s, "  %l{n}_inc = {} {et} {last}, {k}", ops[0]);
                let _ = writeln!(s, "  store {et} %l{n}_inc, ptr %l{n}_u0_p");
            }
            let _ = writeln!(s, "  br label %l{n}_latch");
            let _ = writeln!(s, "\nl{n}_latch:");
            let _ = writeln!(s, "  %l{n}_next = add i32 %l{n}_i, {}", l.unroll);
            let _ = writeln!(s, "  br label %{}", header(n));
        }
        let _ = writeln!(s, "\nexit:");
        for c in 0..self.children() {
            let _ = writeln!(s, "  call void @child{c}(ptr %a{})", c % ARRAYS);
        }
        s.push_str("  ret void\n}\n");
        s
    }
}

/// Generates `n` labeled variants of one design, `synth`: a kernel skeleton
/// drawn from `seed` under `n` random pragma/frequency configurations.
pub fn synthetic_generate(n: usize, seed: u64, noise_level: f64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let skeleton = Skeleton::sample(&mut rng);
    let records = (0..n)
        .map(|i| {
            let kernel = skeleton.variant(&mut rng);
            let freq = *SWEEP_FREQS_MHZ.choose(&mut rng).expect("non-empty");
            let factors: [f64; 3] = std::array::from_fn(|_| 1.0 + noise_level * rng.gen_range(-1.0..=1.0));
            let features = extract_design(Some(&kernel.c_source()), &kernel.ir(), "top", freq)
                .expect("generated kernels extract cleanly")
                .features;
            DesignRecord {
                design: "synth".to_string(),
                variant: format!("v{i:04}"),
                device: DEVICES[i % DEVICES.len()].to_string(),
                labels: labels_with_factors(&features, factors),
                features,
            }
        })
        .collect();
    Dataset::new(records).expect("variant ids are unique")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_module;
    use crate::source::scan_source;

    #[test]
    fn kernels_parse_and_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let k = Skeleton::sample(&mut rng).variant(&mut rng);
            let scan = scan_source(&k.c_source()).unwrap();
            assert!(scan.warnings.is_empty(), "{:?}", scan.warnings);
            assert_eq!(scan.loops.len(), k.loops.len());
            assert_eq!(scan.features.num_array_partition_pragmas, k.partitions as f64);
            assert_eq!(scan.features.num_inlined_functions, k.inlined as f64);
            let m = parse_module(&k.ir()).unwrap();
            assert_eq!(m.functions.len(), k.children() + 1);
        }
    }

    #[test]
    fn noiseless_labels_follow_the_formula() {
        let ds = synthetic_generate(20, 11, 0.0);
        for r in &ds.records {
            let f = &r.features;
            let g = |n: &str| f.get(n).unwrap();
            let cp = 0.8
                + 0.35 * (1.0 + g("ir_math_max_per_bb")).log2()
                + 0.1 * g("cdfg_longest_path_len")
                + 420.0 / f.target_freq_mhz;
            assert_eq!(r.labels.cp_ns, Some(cp.clamp(1.436, 9.371)));
            assert_eq!(r.labels, ground_truth(f));
        }
    }

    #[test]
    fn deterministic_and_within_ranges() {
        let a = synthetic_generate(60, 5, 0.05);
        assert_eq!(a.to_csv_string(), synthetic_generate(60, 5, 0.05).to_csv_string());
        for r in &a.records {
            let cp = r.labels.cp_ns.unwrap();
            assert!((1.436..=9.371).contains(&cp));
            assert!((2..=63536).contains(&r.labels.latency_cycles.unwrap()));
            assert!((4..=60537).contains(&r.labels.luts.unwrap()));
        }
    }
}
