use std::fmt;

use super::{IrFunction, IrModule, Param};

fn needs_quotes(name: &str) -> bool {
    name.is_empty()
        || !name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '$' | '.' | '_'))
}

fn global(name: &str) -> String {
    if needs_quotes(name) {
        format!("@\"{name}\"")
    } else {
        format!("@{name}")
    }
}

fn label(name: &str) -> String {
    if needs_quotes(name) {
        format!("\"{name}\"")
    } else {
        name.to_string()
    }
}

fn param(p: &Param) -> String {
    match &p.name {
        Some(n) => format!("{} {n}", p.ty),
        None => p.ty.clone(),
    }
}

impl fmt::Display for IrFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params: Vec<String> = self.params.iter().map(param).collect();
        let keyword = if self.is_defined { "define" } else { "declare" };
        write!(
            f,
            "{keyword} {} {}({})",
            self.return_type,
            global(&self.name),
            params.join(", ")
        )?;
        if !self.is_defined {
            return writeln!(f);
        }
        writeln!(f, " {{")?;
        for (i, block) in self.blocks.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            writeln!(f, "{}:", label(&block.label))?;
            for inst in &block.instructions {
                writeln!(f, "  {}", inst.text)?;
            }
        }
        writeln!(f, "}}")
    }
}

impl fmt::Display for IrModule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, func) in self.functions.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{func}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use crate::ir::parse_module;

    #[test]
    fn print_then_reparse() {
        let src = "declare void @sink(i32)\n\ndefine i32 @f(i32 %n) {\n  %c = icmp sgt i32 %n, 0\n  br i1 %c, label %pos, label %neg\npos:\n  call void @sink(i32 %n)\n  ret i32 %n\nneg:\n  ret i32 0\n}\n";
        let m = parse_module(src).unwrap();
        let printed = m.to_string();
        assert_eq!(parse_module(&printed).unwrap(), m);
    }
}
