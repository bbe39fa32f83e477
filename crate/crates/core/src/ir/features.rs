//! Per-function IR statistics.

use std::collections::BTreeSet;

use super::{Category, IrError, IrFunction, Opcode};

pub const IR_SLOT_COUNT: usize = 44;

/// Slot names in vector order: seven category triples, the per-block
/// instruction triple, then twenty scalar counters.
pub const IR_SLOT_NAMES: [&str; IR_SLOT_COUNT] = [
    "ir_math_max_per_bb",
    "ir_math_avg_per_bb",
    "ir_math_total",
    "ir_sext_max_per_bb",
    "ir_sext_avg_per_bb",
    "ir_sext_total",
    "ir_zext_max_per_bb",
    "ir_zext_avg_per_bb",
    "ir_zext_total",
    "ir_logic_max_per_bb",
    "ir_logic_avg_per_bb",
    "ir_logic_total",
    "ir_memory_max_per_bb",
    "ir_memory_avg_per_bb",
    "ir_memory_total",
    "ir_vector_max_per_bb",
    "ir_vector_avg_per_bb",
    "ir_vector_total",
    "ir_other_max_per_bb",
    "ir_other_avg_per_bb",
    "ir_other_total",
    "ir_instr_max_per_bb",
    "ir_instr_avg_per_bb",
    "ir_instr_total",
    "ir_block_count",
    "ir_body_instr_count",
    "ir_load_count",
    "ir_store_count",
    "ir_call_count",
    "ir_branch_count",
    "ir_distinct_operand_types",
    "ir_widest_int_bits",
    "ir_float_op_total",
    "ir_double_op_total",
    "ir_gep_count",
    "ir_phi_count",
    "ir_select_count",
    "ir_cmp_count",
    "ir_switch_count",
    "ir_ret_count",
    "ir_alloca_count",
    "ir_global_access_count",
    "ir_max_operands_per_instr",
    "ir_avg_operands_per_instr",
];

/// The 44 IR features of one function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrFeatures {
    slots: [f64; IR_SLOT_COUNT],
}

impl IrFeatures {
    pub fn from_slots(slots: [f64; IR_SLOT_COUNT]) -> Self {
        Self { slots }
    }

    pub fn slots(&self) -> &[f64; IR_SLOT_COUNT] {
        &self.slots
    }

    /// Looks a slot up by name.
    pub fn get(&self, name: &str) -> Option<f64> {
        IR_SLOT_NAMES.iter().position(|n| *n == name).map(|i| self.slots[i])
    }
}

impl Default for IrFeatures {
    fn default() -> Self {
        Self {
            slots: [0.0; IR_SLOT_COUNT],
        }
    }
}

fn int_width(ty: &str) -> Option<u32> {
    let scalar = match ty.strip_prefix('<').and_then(|t| t.strip_suffix('>')) {
        Some(inner) => inner.split_once(" x ").map_or(inner, |(_, e)| e),
        None => ty,
    };
    scalar.strip_prefix('i')?.parse().ok()
}

fn scalar_of(ty: &str) -> &str {
    match ty.strip_prefix('<').and_then(|t| t.strip_suffix('>')) {
        Some(inner) => inner.split_once(" x ").map_or(inner, |(_, e)| e),
        None => ty,
    }
}

/// Instruction counts per category for every block, in block order.
pub(crate) fn category_counts(function: &IrFunction) -> Vec<[usize; 9]> {
    function
        .blocks
        .iter()
        .map(|b| {
            let mut counts = [0usize; 9];
            for inst in &b.instructions {
                counts[inst.category as usize] += 1;
            }
            counts
        })
        .collect()
}

/// Computes the 44 IR features of a defined function.
pub fn ir_features(function: &IrFunction) -> Result<IrFeatures, IrError> {
    if function.blocks.is_empty() {
        return Err(IrError::EmptyFunction {
            function: function.name.clone(),
        });
    }
    let per_block = category_counts(function);
    let blocks = per_block.len() as f64;
    let mut slots = Vec::with_capacity(IR_SLOT_COUNT);

    let mut triple = |counts: &mut dyn Iterator<Item = usize>| {
        let (mut max, mut total) = (0usize, 0usize);
        for c in counts {
            max = max.max(c);
            total += c;
        }
        slots.extend([max as f64, total as f64 / blocks, total as f64]);
    };
    for cat in Category::COUNTED {
        triple(&mut per_block.iter().map(|c| c[cat as usize]));
    }
    triple(&mut function.blocks.iter().map(|b| b.instructions.len()));

    let insts: Vec<_> = function.instructions().collect();
    let count = |pred: &dyn Fn(Opcode) -> bool| insts.iter().filter(|i| pred(i.opcode)).count() as f64;

    let mut types = BTreeSet::new();
    let mut widest = 0u32;
    let (mut float_ops, mut double_ops, mut globals) = (0usize, 0usize, 0usize);
    let (mut max_ops, mut total_ops) = (0usize, 0usize);
    for inst in &insts {
        if let Some(t) = &inst.operand_type {
            types.insert(t.as_str());
        }
        let mentioned = inst
            .operand_type
            .iter()
            .chain(std::iter::once(&inst.result_type))
            .chain(&inst.call_arg_types);
        for ty in mentioned {
            if let Some(w) = int_width(ty) {
                widest = widest.max(w);
            }
        }
        if inst.category == Category::Math {
            match inst.operand_type.as_deref().map(scalar_of) {
                Some("float") => float_ops += 1,
                Some("double") => double_ops += 1,
                _ => {}
            }
        }
        globals += inst.operand_ids.iter().filter(|o| o.starts_with('@')).count();
        let n = inst.operand_ids.len() + inst.targets.len() + usize::from(inst.callee.is_some());
        max_ops = max_ops.max(n);
        total_ops += n;
    }

    slots.extend([
        blocks,
        insts.iter().filter(|i| !i.opcode.is_terminator()).count() as f64,
        count(&|o| o == Opcode::Load),
        count(&|o| o == Opcode::Store),
        count(&|o| o == Opcode::Call),
        count(&|o| o == Opcode::Br),
        types.len() as f64,
        widest as f64,
        float_ops as f64,
        double_ops as f64,
        count(&|o| o == Opcode::GetElementPtr),
        count(&|o| o == Opcode::Phi),
        count(&|o| o == Opcode::Select),
        count(&|o| matches!(o, Opcode::ICmp | Opcode::FCmp)),
        count(&|o| o == Opcode::Switch),
        count(&|o| o == Opcode::Ret),
        count(&|o| o == Opcode::Alloca),
        globals as f64,
        max_ops as f64,
        total_ops as f64 / insts.len().max(1) as f64,
    ]);
    let slots: [f64; IR_SLOT_COUNT] = slots.try_into().expect("44 IR slots");
    Ok(IrFeatures { slots })
}
