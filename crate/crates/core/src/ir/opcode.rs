use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::IrError;

/// Instruction family used for feature counting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    Math,
    SignExt,
    ZeroExt,
    Logic,
    Memory,
    Vector,
    Control,
    Cast,
    Other,
}

impl Category {
    pub const ALL: [Category; 9] = [
        Category::Math,
        Category::SignExt,
        Category::ZeroExt,
        Category::Logic,
        Category::Memory,
        Category::Vector,
        Category::Control,
        Category::Cast,
        Category::Other,
    ];

    /// The seven families that get their own feature triple.
    pub const COUNTED: [Category; 7] = [
        Category::Math,
        Category::SignExt,
        Category::ZeroExt,
        Category::Logic,
        Category::Memory,
        Category::Vector,
        Category::Other,
    ];

    pub fn slot_stem(self) -> &'static str {
        match self {
            Category::Math => "math",
            Category::SignExt => "sext",
            Category::ZeroExt => "zext",
            Category::Logic => "logic",
            Category::Memory => "memory",
            Category::Vector => "vector",
            Category::Control => "control",
            Category::Cast => "cast",
            Category::Other => "other",
        }
    }
}

macro_rules! opcodes {
    ($($variant:ident => $text:literal, $cat:ident;)*) => {
        /// Opcodes of the supported IR subset.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum Opcode {
            $($variant,)*
        }

        impl Opcode {
            pub const ALL: &'static [Opcode] = &[$(Opcode::$variant,)*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(Opcode::$variant => $text,)*
                }
            }

            pub fn category(self) -> Category {
                match self {
                    $(Opcode::$variant => Category::$cat,)*
                }
            }
        }

        impl FromStr for Opcode {
            type Err = IrError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($text => Ok(Opcode::$variant),)*
                    _ => Err(IrError::UnknownOpcode { opcode: s.to_string() }),
                }
            }
        }
    };
}

opcodes! {
    Add => "add", Math;
    Sub => "sub", Math;
    Mul => "mul", Math;
    SDiv => "sdiv", Math;
    UDiv => "udiv", Math;
    SRem => "srem", Math;
    URem => "urem", Math;
    FAdd => "fadd", Math;
    FSub => "fsub", Math;
    FMul => "fmul", Math;
    FDiv => "fdiv", Math;
    FRem => "frem", Math;
    FNeg => "fneg", Math;
    SExt => "sext", SignExt;
    ZExt => "zext", ZeroExt;
    And => "and", Logic;
    Or => "or", Logic;
    Xor => "xor", Logic;
    Shl => "shl", Logic;
    LShr => "lshr", Logic;
    AShr => "ashr", Logic;
    Load => "load", Memory;
    Store => "store", Memory;
    Alloca => "alloca", Memory;
    GetElementPtr => "getelementptr", Memory;
    ExtractElement => "extractelement", Vector;
    InsertElement => "insertelement", Vector;
    ShuffleVector => "shufflevector", Vector;
    Br => "br", Control;
    Ret => "ret", Control;
    Switch => "switch", Control;
    Unreachable => "unreachable", Control;
    Trunc => "trunc", Cast;
    FPTrunc => "fptrunc", Cast;
    FPExt => "fpext", Cast;
    BitCast => "bitcast", Cast;
    PtrToInt => "ptrtoint", Cast;
    IntToPtr => "inttoptr", Cast;
    SIToFP => "sitofp", Cast;
    UIToFP => "uitofp", Cast;
    FPToSI => "fptosi", Cast;
    FPToUI => "fptoui", Cast;
    Call => "call", Other;
    Phi => "phi", Other;
    Select => "select", Other;
    ICmp => "icmp", Other;
    FCmp => "fcmp", Other;
}

impl Opcode {
    pub fn is_terminator(self) -> bool {
        matches!(self, Opcode::Br | Opcode::Ret | Opcode::Switch | Opcode::Unreachable)
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Maps an opcode token to its family.
pub fn classify_instruction(opcode: &str) -> Result<Category, IrError> {
    opcode.parse::<Opcode>().map(Opcode::category)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families() {
        let cat = |s| classify_instruction(s).unwrap();
        assert_eq!(cat("add"), Category::Math);
        assert_eq!(cat("fmul"), Category::Math);
        assert_eq!(cat("sext"), Category::SignExt);
        assert_eq!(cat("zext"), Category::ZeroExt);
        assert_eq!(cat("load"), Category::Memory);
        assert_eq!(cat("and"), Category::Logic);
        assert_eq!(cat("extractelement"), Category::Vector);
        assert_eq!(cat("fpext"), Category::Cast);
        assert_eq!(cat("icmp"), Category::Other);
    }

    #[test]
    fn unknown_opcode() {
        assert!(matches!(
            classify_instruction("atomicrmw"),
            Err(IrError::UnknownOpcode { .. })
        ));
    }

    #[test]
    fn table_is_total_and_round_trips() {
        assert_eq!(Opcode::ALL.len(), 47);
        for &op in Opcode::ALL {
            assert_eq!(op.as_str().parse::<Opcode>().unwrap(), op);
            assert_eq!(classify_instruction(op.as_str()).unwrap(), op.category());
            assert_eq!(op.is_terminator(), op.category() == Category::Control);
        }
    }
}
