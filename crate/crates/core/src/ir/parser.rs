use std::collections::{BTreeSet, HashSet};

use super::lexer::{strip_comment, tokenize, TokKind, Token};
use super::{BasicBlock, IrError, IrFunction, IrInstruction, IrModule, Opcode, Param};

/// Parses IR text into an [`IrModule`].
pub fn parse_module(ir_text: &str) -> Result<IrModule, IrError> {
    let lines = logical_lines(ir_text);
    let type_names = named_types(&lines);
    let mut functions = Vec::new();
    let mut current: Option<FunctionBuilder> = None;

    for line in &lines {
        let toks = match tokenize(&line.text) {
            Ok(toks) => toks,
            // module-level constructs outside the subset are skipped
            Err(_) if current.is_none() && !is_header(&line.text) => continue,
            Err(e) => {
                return Err(IrError::Parse {
                    line: line.number,
                    column: e.column,
                    token: e.token,
                    message: "unexpected character".into(),
                })
            }
        };
        let cx = LineCx {
            number: line.number,
            toks: &toks,
        };
        if let Some(label) = &line.label_comment {
            match current.as_mut() {
                Some(f) => f.start_block(label.clone(), &cx)?,
                None => return Err(cx.error(0, "label outside of a function")),
            }
            if toks.is_empty() {
                continue;
            }
        }
        if toks.is_empty() {
            continue;
        }
        match current.as_mut() {
            None => {
                if toks[0].is_word("define") {
                    let (name, return_type, params) = parse_header(&cx, &type_names)?;
                    if !toks.last().is_some_and(|t| t.is_punct('{')) {
                        return Err(cx.error(toks.len() - 1, "expected `{` at end of define"));
                    }
                    current = Some(FunctionBuilder::new(name, return_type, params, line.number));
                } else if toks[0].is_word("declare") {
                    let (name, return_type, params) = parse_header(&cx, &type_names)?;
                    functions.push(IrFunction {
                        name,
                        return_type,
                        params,
                        blocks: Vec::new(),
                        is_defined: false,
                    });
                }
                // globals, metadata, attributes, target info: skipped
            }
            Some(f) => {
                if toks.len() == 1 && toks[0].is_punct('}') {
                    let done = current.take().expect("open function");
                    functions.push(done.finish(&cx)?);
                } else if let Some(label) = label_definition(&toks) {
                    f.start_block(label, &cx)?;
                } else {
                    let inst = parse_instruction(&cx, &line.text, &type_names)?;
                    f.push(inst, &cx)?;
                }
            }
        }
    }
    if let Some(f) = current {
        return Err(IrError::Parse {
            line: f.line,
            column: 1,
            token: format!("@{}", f.name),
            message: "function body is not closed".into(),
        });
    }
    IrModule::new(functions).map_err(|name| IrError::Parse {
        line: 0,
        column: 1,
        token: format!("@{name}"),
        message: "duplicate function name".into(),
    })
}

fn is_header(text: &str) -> bool {
    let first = text.split_whitespace().next();
    first == Some("define") || first == Some("declare")
}

struct LogicalLine {
    number: usize,
    text: String,
    label_comment: Option<String>,
}

/// Strips comments and joins lines with an unclosed `[` or `(`.
fn logical_lines(text: &str) -> Vec<LogicalLine> {
    let mut out = Vec::new();
    let mut pending: Option<(usize, String, i32)> = None;
    for (idx, raw) in text.lines().enumerate() {
        let number = idx + 1;
        let trimmed = raw.trim();
        if let Some(rest) = trimmed.strip_prefix("; <label>:") {
            let label: String = rest
                .chars()
                .take_while(|c| !c.is_whitespace() && *c != ':')
                .collect();
            out.push(LogicalLine {
                number,
                text: String::new(),
                label_comment: Some(label),
            });
            continue;
        }
        let code = strip_comment(raw).trim_end();
        if code.trim_start().is_empty() {
            continue;
        }
        let (start, mut joined, mut depth) = pending.take().unwrap_or((number, String::new(), 0));
        // leading indentation of the first physical line is kept so columns stay accurate
        if joined.is_empty() {
            joined.push_str(code);
        } else {
            joined.push(' ');
            joined.push_str(code.trim_start());
        }
        depth += bracket_balance(code);
        if depth > 0 {
            pending = Some((start, joined, depth));
        } else {
            out.push(LogicalLine {
                number: start,
                text: joined,
                label_comment: None,
            });
        }
    }
    if let Some((start, joined, _)) = pending {
        out.push(LogicalLine {
            number: start,
            text: joined,
            label_comment: None,
        });
    }
    out
}

fn bracket_balance(code: &str) -> i32 {
    let mut depth = 0;
    let mut in_str = false;
    for c in code.chars() {
        match c {
            '"' => in_str = !in_str,
            '[' | '(' if !in_str => depth += 1,
            ']' | ')' if !in_str => depth -= 1,
            _ => {}
        }
    }
    depth
}

/// Names introduced by `%name = type ...`.
fn named_types(lines: &[LogicalLine]) -> HashSet<String> {
    lines
        .iter()
        .filter_map(|l| {
            let toks = tokenize(&l.text).ok()?;
            match toks.as_slice() {
                [Token { kind: TokKind::Local(n), .. }, eq, ty, ..] if eq.is_punct('=') && ty.is_word("type") => {
                    Some(n.clone())
                }
                _ => None,
            }
        })
        .collect()
}

fn label_definition(toks: &[Token]) -> Option<String> {
    match toks {
        [Token { kind: TokKind::Word(w), .. }, colon] if colon.is_punct(':') => Some(w.clone()),
        [Token { kind: TokKind::Str(s), .. }, colon] if colon.is_punct(':') => Some(s.clone()),
        _ => None,
    }
}

struct LineCx<'a> {
    number: usize,
    toks: &'a [Token],
}

impl LineCx<'_> {
    fn error(&self, at: usize, message: impl Into<String>) -> IrError {
        let (column, token) = match self.toks.get(at) {
            Some(t) => (t.column, t.text()),
            None => (
                self.toks.last().map_or(1, |t| t.column + t.text().len()),
                "<end of line>".into(),
            ),
        };
        IrError::Parse {
            line: self.number,
            column,
            token,
            message: message.into(),
        }
    }
}

struct FunctionBuilder {
    name: String,
    return_type: String,
    params: Vec<Param>,
    blocks: Vec<BasicBlock>,
    open: Option<BasicBlock>,
    line: usize,
}

impl FunctionBuilder {
    fn new(name: String, return_type: String, params: Vec<Param>, line: usize) -> Self {
        Self {
            name,
            return_type,
            params,
            blocks: Vec::new(),
            open: None,
            line,
        }
    }

    fn start_block(&mut self, label: String, cx: &LineCx) -> Result<(), IrError> {
        if let Some(b) = &self.open {
            return Err(cx.error(0, format!("block %{} has no terminator", b.label)));
        }
        if self.blocks.iter().any(|b| b.label == label) {
            return Err(cx.error(0, format!("duplicate block label %{label}")));
        }
        self.open = Some(BasicBlock {
            label,
            instructions: Vec::new(),
            successor_labels: Vec::new(),
        });
        Ok(())
    }

    fn implicit_entry_label(&self) -> String {
        // LLVM numbers an unnamed entry block after the unnamed parameters
        let unnamed = self
            .params
            .iter()
            .filter(|p| p.name.as_deref().is_none_or(|n| n[1..].chars().all(|c| c.is_ascii_digit())))
            .count();
        unnamed.to_string()
    }

    fn push(&mut self, inst: IrInstruction, cx: &LineCx) -> Result<(), IrError> {
        if self.open.is_none() {
            if !self.blocks.is_empty() {
                return Err(cx.error(0, "instruction after a terminator must start a labeled block"));
            }
            let label = self.implicit_entry_label();
            self.start_block(label, cx)?;
        }
        let block = self.open.as_mut().expect("open block");
        let terminates = inst.opcode.is_terminator();
        if terminates {
            block.successor_labels = inst.targets.clone();
        }
        block.instructions.push(inst);
        if terminates {
            self.blocks.push(self.open.take().expect("open block"));
        }
        Ok(())
    }

    fn finish(self, cx: &LineCx) -> Result<IrFunction, IrError> {
        if let Some(b) = &self.open {
            return Err(cx.error(0, format!("block %{} has no terminator", b.label)));
        }
        let labels: BTreeSet<&str> = self.blocks.iter().map(|b| b.label.as_str()).collect();
        for block in &self.blocks {
            let refs = block
                .instructions
                .iter()
                .flat_map(|i| i.targets.iter().chain(&i.incoming_blocks));
            for target in refs {
                if !labels.contains(target.as_str()) {
                    return Err(IrError::UnresolvedLabel {
                        function: self.name.clone(),
                        label: target.clone(),
                    });
                }
            }
        }
        Ok(IrFunction {
            name: self.name,
            return_type: self.return_type,
            params: self.params,
            blocks: self.blocks,
            is_defined: true,
        })
    }
}

const PRIMITIVE_TYPES: &[&str] = &[
    "void", "half", "bfloat", "float", "double", "fp128", "x86_fp80", "ppc_fp128", "ptr", "label",
    "metadata", "token", "x86_mmx", "x86_amx", "opaque",
];

fn is_int_type(w: &str) -> bool {
    w.len() > 1 && w.starts_with('i') && w[1..].chars().all(|c| c.is_ascii_digit())
}

fn is_type_start(tok: &Token, type_names: &HashSet<String>) -> bool {
    match &tok.kind {
        TokKind::Word(w) => is_int_type(w) || PRIMITIVE_TYPES.contains(&w.as_str()),
        TokKind::Local(n) => type_names.contains(n),
        TokKind::Punct('<' | '[' | '{') => true,
        _ => false,
    }
}

/// Parses a type at `i`; returns its canonical spelling and the next index.
fn parse_type(
    cx: &LineCx,
    i: usize,
    type_names: &HashSet<String>,
) -> Result<(String, usize), IrError> {
    parse_type_inner(cx, i, type_names, true)
}

fn parse_type_inner(
    cx: &LineCx,
    i: usize,
    type_names: &HashSet<String>,
    allow_fn: bool,
) -> Result<(String, usize), IrError> {
    let toks = cx.toks;
    let tok = toks.get(i).ok_or_else(|| cx.error(i, "expected a type"))?;
    let (mut ty, mut j) = match &tok.kind {
        TokKind::Word(w) if is_int_type(w) || PRIMITIVE_TYPES.contains(&w.as_str()) => (w.clone(), i + 1),
        TokKind::Local(n) => (n.clone(), i + 1),
        TokKind::Punct('<') if toks.get(i + 1).is_some_and(|t| t.is_punct('{')) => {
            let (inner, j) = parse_struct(cx, i + 1, type_names)?;
            expect_punct(cx, j, '>')?;
            (format!("<{inner}>"), j + 1)
        }
        TokKind::Punct(open @ ('<' | '[')) => {
            let close = if *open == '<' { '>' } else { ']' };
            let count = match toks.get(i + 1).map(|t| &t.kind) {
                Some(TokKind::Word(n)) if n.chars().all(|c| c.is_ascii_digit()) => n.clone(),
                _ => return Err(cx.error(i + 1, "expected element count")),
            };
            if !toks.get(i + 2).is_some_and(|t| t.is_word("x")) {
                return Err(cx.error(i + 2, "expected `x`"));
            }
            let (elem, j) = parse_type(cx, i + 3, type_names)?;
            expect_punct(cx, j, close)?;
            (format!("{open}{count} x {elem}{close}"), j + 1)
        }
        TokKind::Punct('{') => parse_struct(cx, i, type_names)?,
        _ => return Err(cx.error(i, "expected a type")),
    };
    loop {
        match toks.get(j) {
            Some(t) if t.is_punct('*') => {
                ty = "ptr".into();
                j += 1;
            }
            Some(t) if t.is_word("addrspace") => {
                expect_punct(cx, j + 1, '(')?;
                expect_punct(cx, j + 3, ')')?;
                j += 4;
            }
            Some(t) if allow_fn && t.is_punct('(') => {
                // function type: `ret (args...)`
                let close = matching(cx, j)?;
                ty = "fn".into();
                j = close + 1;
            }
            _ => break,
        }
    }
    Ok((ty, j))
}

fn parse_struct(
    cx: &LineCx,
    i: usize,
    type_names: &HashSet<String>,
) -> Result<(String, usize), IrError> {
    let mut j = i + 1;
    let mut fields = Vec::new();
    if cx.toks.get(j).is_some_and(|t| t.is_punct('}')) {
        return Ok(("{}".into(), j + 1));
    }
    loop {
        let (field, next) = parse_type(cx, j, type_names)?;
        fields.push(field);
        match cx.toks.get(next) {
            Some(t) if t.is_punct(',') => j = next + 1,
            Some(t) if t.is_punct('}') => return Ok((format!("{{ {} }}", fields.join(", ")), next + 1)),
            _ => return Err(cx.error(next, "expected `,` or `}` in struct type")),
        }
    }
}

fn expect_punct(cx: &LineCx, i: usize, c: char) -> Result<(), IrError> {
    if cx.toks.get(i).is_some_and(|t| t.is_punct(c)) {
        Ok(())
    } else {
        Err(cx.error(i, format!("expected `{c}`")))
    }
}

/// Index of the bracket closing the one at `open`.
fn matching(cx: &LineCx, open: usize) -> Result<usize, IrError> {
    let mut depth = 0;
    for (k, t) in cx.toks.iter().enumerate().skip(open) {
        match t.kind {
            TokKind::Punct('(' | '[' | '{' | '<') => depth += 1,
            TokKind::Punct(')' | ']' | '}' | '>') => {
                depth -= 1;
                if depth == 0 {
                    return Ok(k);
                }
            }
            _ => {}
        }
    }
    Err(cx.error(open, "unbalanced bracket"))
}

/// Splits `toks[from..to]` on commas at bracket depth zero.
fn split_top_level(toks: &[Token], from: usize, to: usize) -> Vec<(usize, usize)> {
    let mut parts = Vec::new();
    let mut depth = 0;
    let mut start = from;
    for k in from..to {
        match toks[k].kind {
            TokKind::Punct('(' | '[' | '{' | '<') => depth += 1,
            TokKind::Punct(')' | ']' | '}' | '>') => depth -= 1,
            TokKind::Punct(',') if depth == 0 => {
                parts.push((start, k));
                start = k + 1;
            }
            _ => {}
        }
    }
    if start < to {
        parts.push((start, to));
    }
    parts
}

fn parse_header(
    cx: &LineCx,
    type_names: &HashSet<String>,
) -> Result<(String, String, Vec<Param>), IrError> {
    let toks = cx.toks;
    let g = toks
        .iter()
        .position(|t| matches!(t.kind, TokKind::Global(_)))
        .ok_or_else(|| cx.error(1, "expected function name"))?;
    let ret_start = (1..g)
        .find(|&k| is_type_start(&toks[k], type_names))
        .ok_or_else(|| cx.error(1, "expected return type"))?;
    let (return_type, _) = parse_type(cx, ret_start, type_names)?;
    let TokKind::Global(name) = &toks[g].kind else { unreachable!() };
    expect_punct(cx, g + 1, '(')?;
    let close = matching(cx, g + 1)?;
    let mut params = Vec::new();
    for (a, b) in split_top_level(toks, g + 2, close) {
        if toks[a].kind == TokKind::Ellipsis {
            continue;
        }
        let (ty, next) = parse_type(cx, a, type_names)?;
        let name = toks[next..b].iter().rev().find_map(|t| match &t.kind {
            TokKind::Local(n) => Some(n.clone()),
            _ => None,
        });
        params.push(Param { name, ty });
    }
    Ok((name[1..].to_string(), return_type, params))
}

const FLAGS: &[&str] = &[
    "nuw", "nsw", "exact", "disjoint", "nneg", "samesign", "inbounds", "volatile", "fast", "nnan",
    "ninf", "nsz", "arcp", "contract", "afn", "reassoc", "inrange", "nusw", "inalloca",
];

fn skip_flags(toks: &[Token], mut i: usize) -> usize {
    while toks.get(i).is_some_and(|t| matches!(&t.kind, TokKind::Word(w) if FLAGS.contains(&w.as_str()))) {
        i += 1;
    }
    i
}

fn vector_len(ty: &str) -> Option<&str> {
    ty.strip_prefix('<')?.split_once(" x ").map(|(n, _)| n)
}

fn element_type(ty: &str) -> String {
    match ty.strip_prefix('<').and_then(|t| t.strip_suffix('>')) {
        Some(inner) => inner.split_once(" x ").map_or(ty, |(_, e)| e).to_string(),
        None => ty.to_string(),
    }
}

fn parse_instruction(
    cx: &LineCx,
    text: &str,
    type_names: &HashSet<String>,
) -> Result<IrInstruction, IrError> {
    let toks = cx.toks;
    let mut i = 0;
    let result_id = match toks {
        [Token { kind: TokKind::Local(r), .. }, eq, ..] if eq.is_punct('=') => {
            i = 2;
            Some(r.clone())
        }
        _ => None,
    };
    while toks.get(i).is_some_and(|t| t.is_word("tail") || t.is_word("musttail") || t.is_word("notail")) {
        i += 1;
    }
    let opcode: Opcode = match toks.get(i).map(|t| &t.kind) {
        Some(TokKind::Word(w)) => w
            .parse()
            .map_err(|_| cx.error(i, format!("unknown opcode `{w}`")))?,
        _ => return Err(cx.error(i, "expected an opcode")),
    };
    let op_pos = i;
    i += 1;

    let mut inst = IrInstruction {
        opcode,
        category: opcode.category(),
        result_id,
        operand_ids: Vec::new(),
        result_type: "void".into(),
        operand_type: None,
        callee: None,
        call_arg_types: Vec::new(),
        targets: Vec::new(),
        incoming_blocks: Vec::new(),
        text: text.trim().to_string(),
    };
    // token positions that are not value operands
    let mut consumed: HashSet<usize> = HashSet::new();

    use Opcode::*;
    match opcode {
        Add | Sub | Mul | SDiv | UDiv | SRem | URem | FAdd | FSub | FMul | FDiv | FRem | FNeg | And
        | Or | Xor | Shl | LShr | AShr | InsertElement | Phi | Load => {
            let (ty, _) = parse_type(cx, skip_flags(toks, i), type_names)?;
            inst.result_type = ty.clone();
            inst.operand_type = Some(ty);
        }
        ICmp | FCmp => {
            let (ty, _) = parse_type(cx, skip_flags(toks, i) + 1, type_names)?;
            inst.result_type = match vector_len(&ty) {
                Some(n) => format!("<{n} x i1>"),
                None => "i1".into(),
            };
            inst.operand_type = Some(ty);
        }
        Select => {
            let parts = split_top_level(toks, skip_flags(toks, i), toks.len());
            let (a, _) = *parts.get(1).ok_or_else(|| cx.error(toks.len(), "select needs three operands"))?;
            let (ty, _) = parse_type(cx, a, type_names)?;
            inst.result_type = ty.clone();
            inst.operand_type = Some(ty);
        }
        SExt | ZExt | Trunc | FPTrunc | FPExt | BitCast | PtrToInt | IntToPtr | SIToFP | UIToFP
        | FPToSI | FPToUI => {
            let (from, _) = parse_type(cx, skip_flags(toks, i), type_names)?;
            let to = (i..toks.len())
                .rev()
                .find(|&k| toks[k].is_word("to"))
                .ok_or_else(|| cx.error(toks.len(), "cast needs `to <type>`"))?;
            let (ty, _) = parse_type(cx, to + 1, type_names)?;
            inst.operand_type = Some(from);
            inst.result_type = ty;
        }
        Store | Switch => {
            let (ty, _) = parse_type(cx, skip_flags(toks, i), type_names)?;
            inst.operand_type = Some(ty);
        }
        Alloca | GetElementPtr => {
            let (ty, _) = parse_type(cx, skip_flags(toks, i), type_names)?;
            inst.operand_type = Some(ty);
            inst.result_type = "ptr".into();
        }
        ExtractElement => {
            let (ty, _) = parse_type(cx, i, type_names)?;
            inst.result_type = element_type(&ty);
            inst.operand_type = Some(ty);
        }
        ShuffleVector => {
            let (ty, _) = parse_type(cx, i, type_names)?;
            let parts = split_top_level(toks, i, toks.len());
            let (m, _) = *parts.get(2).ok_or_else(|| cx.error(toks.len(), "shufflevector needs a mask"))?;
            let (mask, _) = parse_type(cx, m, type_names)?;
            let n = vector_len(&mask).unwrap_or("1");
            inst.result_type = format!("<{n} x {}>", element_type(&ty));
            inst.operand_type = Some(ty);
        }
        Ret => {
            let (ty, _) = parse_type(cx, i, type_names)?;
            if ty != "void" {
                inst.operand_type = Some(ty);
            }
        }
        Br | Unreachable => {}
        Call => {
            let start = (i..toks.len())
                .find(|&k| is_type_start(&toks[k], type_names))
                .ok_or_else(|| cx.error(i, "expected call return type"))?;
            let (ret, mut k) = parse_type_inner(cx, start, type_names, false)?;
            if toks.get(k).is_some_and(|t| t.is_punct('(')) {
                // explicit callee signature, e.g. `call i32 (ptr, ...) @printf`
                k = matching(cx, k)? + 1;
            }
            inst.result_type = ret;
            match toks.get(k).map(|t| &t.kind) {
                Some(TokKind::Global(g)) => {
                    inst.callee = Some(g[1..].to_string());
                    consumed.insert(k);
                    k += 1;
                }
                Some(TokKind::Local(_)) => k += 1,
                _ => return Err(cx.error(k, "expected callee")),
            }
            expect_punct(cx, k, '(')?;
            let close = matching(cx, k)?;
            for (a, _) in split_top_level(toks, k + 1, close) {
                let (ty, next) = parse_type(cx, a, type_names)?;
                inst.call_arg_types.push(ty);
                consumed.extend(a..next);
            }
            // trailing attribute groups and metadata carry no values
            consumed.extend(close + 1..toks.len());
        }
    }

    // labels and phi predecessors
    let mut k = op_pos + 1;
    while k < toks.len() {
        let t = &toks[k];
        if t.is_word("label") {
            if let Some(TokKind::Local(l)) = toks.get(k + 1).map(|t| &t.kind) {
                inst.targets.push(l[1..].to_string());
                consumed.insert(k + 1);
                k += 2;
                continue;
            }
        }
        if opcode == Phi && t.is_punct('[') {
            // [ value , %pred ]
            if let (Some(comma), Some(Token { kind: TokKind::Local(l), .. })) =
                (toks.get(k + 2), toks.get(k + 3))
            {
                if comma.is_punct(',') {
                    inst.incoming_blocks.push(l[1..].to_string());
                    consumed.insert(k + 3);
                }
            }
        }
        k += 1;
    }
    if matches!(opcode, Br | Switch) && inst.targets.is_empty() {
        return Err(cx.error(op_pos, "branch without label targets"));
    }
    if opcode == Br && !matches!(inst.targets.len(), 1 | 2) {
        return Err(cx.error(op_pos, "`br` takes one or two labels"));
    }

    for (k, t) in toks.iter().enumerate().skip(op_pos + 1) {
        if consumed.contains(&k) {
            continue;
        }
        match &t.kind {
            TokKind::Local(n) if !type_names.contains(n) => inst.operand_ids.push(n.clone()),
            TokKind::Global(g) => inst.operand_ids.push(g.clone()),
            _ => {}
        }
    }
    Ok(inst)
}
