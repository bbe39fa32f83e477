//! Object model, parser and feature extraction for a textual LLVM IR subset.
//!
//! The accepted grammar is documented in `docs/ir-subset.md`. Anything at
//! module level other than `define`/`declare` (globals, metadata, attribute
//! groups, target triples, type definitions) is skipped.

mod features;
mod lexer;
mod opcode;
mod parser;
mod print;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use features::{ir_features, IrFeatures, IR_SLOT_COUNT, IR_SLOT_NAMES};
pub use opcode::{classify_instruction, Category, Opcode};
pub use parser::parse_module;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IrError {
    #[error("{line}:{column}: {message} (at `{token}`)")]
    Parse {
        line: usize,
        column: usize,
        token: String,
        message: String,
    },
    #[error("function @{function}: branch to undefined label %{label}")]
    UnresolvedLabel { function: String, label: String },
    #[error("unknown opcode `{opcode}`")]
    UnknownOpcode { opcode: String },
    #[error("function @{function} has no basic blocks")]
    EmptyFunction { function: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IrInstruction {
    pub opcode: Opcode,
    pub category: Category,
    /// Defined value, with its `%` sigil.
    pub result_id: Option<String>,
    /// Referenced values (`%x`, `@g`), excluding labels and the callee.
    pub operand_ids: Vec<String>,
    /// Canonical type of the produced value (`void` when nothing is produced).
    pub result_type: String,
    /// Canonical type the instruction operates on.
    pub operand_type: Option<String>,
    /// Direct callee of a `call`, without sigil.
    pub callee: Option<String>,
    pub call_arg_types: Vec<String>,
    /// Branch targets of a terminator, in operand order.
    pub targets: Vec<String>,
    /// Predecessor labels named by a `phi`.
    pub incoming_blocks: Vec<String>,
    /// Source text with comments removed; used by the printer.
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasicBlock {
    pub label: String,
    pub instructions: Vec<IrInstruction>,
    pub successor_labels: Vec<String>,
}

impl BasicBlock {
    pub fn terminator(&self) -> Option<&IrInstruction> {
        self.instructions.last().filter(|i| i.opcode.is_terminator())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    pub name: Option<String>,
    pub ty: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IrFunction {
    pub name: String,
    pub return_type: String,
    pub params: Vec<Param>,
    pub blocks: Vec<BasicBlock>,
    pub is_defined: bool,
}

impl IrFunction {
    pub fn entry(&self) -> Option<&BasicBlock> {
        self.blocks.first()
    }

    pub fn block(&self, label: &str) -> Option<&BasicBlock> {
        self.blocks.iter().find(|b| b.label == label)
    }

    pub fn instructions(&self) -> impl Iterator<Item = &IrInstruction> {
        self.blocks.iter().flat_map(|b| b.instructions.iter())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IrModule {
    pub functions: Vec<IrFunction>,
    #[serde(skip)]
    index: BTreeMap<String, usize>,
}

impl IrModule {
    /// Builds a module; function names must be unique.
    pub fn new(functions: Vec<IrFunction>) -> Result<Self, String> {
        let mut index = BTreeMap::new();
        for (i, f) in functions.iter().enumerate() {
            if index.insert(f.name.clone(), i).is_some() {
                return Err(f.name.clone());
            }
        }
        Ok(Self { functions, index })
    }

    pub fn function(&self, name: &str) -> Option<&IrFunction> {
        self.index.get(name).map(|&i| &self.functions[i])
    }

    pub fn defined_functions(&self) -> impl Iterator<Item = &IrFunction> {
        self.functions.iter().filter(|f| f.is_defined)
    }
}
