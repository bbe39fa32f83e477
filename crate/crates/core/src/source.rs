//! HLS source scanning: `#pragma HLS` directives, `for` loop structure and the
//! 13 source-level features.
//!
//! The scanner understands a constrained token grammar rather than full C++:
//! function definitions (`name(...) {`), `for (init; cond; inc)` headers,
//! brace/statement nesting and pragma lines. Comments, string literals and
//! other preprocessor lines are skipped. Loop trip counts are only recovered
//! when the header uses integer literals (`for (int i = 0; i < 64; i += 2)`).

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of source feature slots.
pub const SOURCE_SLOT_COUNT: usize = 13;

/// Slot names, in vector order.
pub const SOURCE_SLOT_NAMES: [&str; SOURCE_SLOT_COUNT] = [
    "src_max_unroll_factor",
    "src_avg_unroll_factor",
    "src_max_batch_size",
    "src_avg_batch_size",
    "src_num_unrolled_loops",
    "src_num_pipelined_loops",
    "src_max_pipeline_ii",
    "src_avg_pipeline_ii",
    "src_max_pipelined_loop_index",
    "src_num_array_partition_pragmas",
    "src_num_array_reshape_pragmas",
    "src_num_inlined_functions",
    "src_total_loop_count",
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SourceError {
    #[error("line {line}: malformed pragma: {message}")]
    MalformedPragma { line: usize, message: String },
}

/// A non-fatal diagnostic tied to a source line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: warning: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PragmaKind {
    Unroll,
    Pipeline,
    ArrayPartition,
    ArrayReshape,
    Inline,
    FunctionInstantiate,
}

impl PragmaKind {
    fn from_keyword(word: &str) -> Option<Self> {
        match word.to_ascii_lowercase().as_str() {
            "unroll" => Some(Self::Unroll),
            "pipeline" => Some(Self::Pipeline),
            "array_partition" => Some(Self::ArrayPartition),
            "array_reshape" => Some(Self::ArrayReshape),
            "inline" => Some(Self::Inline),
            "function_instantiate" => Some(Self::FunctionInstantiate),
            _ => None,
        }
    }
}

/// Partitioning style of an array pragma. `Complete` is also used for a bare
/// `#pragma HLS unroll`, which fully unrolls the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PartitionStyle {
    Block,
    Cyclic,
    Complete,
}

impl PartitionStyle {
    fn from_keyword(word: &str) -> Option<Self> {
        match word.to_ascii_lowercase().as_str() {
            "block" => Some(Self::Block),
            "cyclic" => Some(Self::Cyclic),
            "complete" => Some(Self::Complete),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PragmaDirective {
    pub kind: PragmaKind,
    pub factor: Option<u64>,
    pub initiation_interval: Option<u64>,
    pub dimension: Option<u64>,
    pub partition_style: Option<PartitionStyle>,
    pub variable: Option<String>,
    /// `off` argument (`pipeline off`, `inline off`, `unroll off=true`).
    pub disabled: bool,
    pub enclosing_function: String,
    pub attached_loop_label: Option<String>,
    pub source_line: usize,
}

/// Output of [`scan_pragmas`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PragmaScan {
    pub pragmas: Vec<PragmaDirective>,
    pub warnings: Vec<Warning>,
}

/// Exact positive rational, kept reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ratio {
    pub numer: u64,
    pub denom: u64,
}

impl Ratio {
    pub fn new(numer: u64, denom: u64) -> Self {
        assert!(denom > 0, "zero denominator");
        let g = gcd(numer, denom).max(1);
        Self {
            numer: numer / g,
            denom: denom / g,
        }
    }

    pub fn to_f64(self) -> f64 {
        self.numer as f64 / self.denom as f64
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopInfo {
    pub label: String,
    pub function: String,
    pub loop_bound: Option<u64>,
    pub unroll_factor: u64,
    /// `loop_bound / unroll_factor` when the bound is known.
    pub batch_size: Option<Ratio>,
    pub pipelined: bool,
    pub initiation_interval: Option<u64>,
    pub nesting_depth: u32,
    pub source_line: usize,
}

/// The 13 HLS-source features.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceFeatures {
    pub max_unroll_factor: f64,
    pub avg_unroll_factor: f64,
    pub max_batch_size: f64,
    pub avg_batch_size: f64,
    pub num_unrolled_loops: f64,
    pub num_pipelined_loops: f64,
    pub max_pipeline_ii: f64,
    pub avg_pipeline_ii: f64,
    /// 1-based source-order index of the pipelined loop with the largest
    /// bound; 0 when nothing is pipelined.
    pub max_pipelined_loop_index: f64,
    pub num_array_partition_pragmas: f64,
    pub num_array_reshape_pragmas: f64,
    pub num_inlined_functions: f64,
    pub total_loop_count: f64,
}

impl SourceFeatures {
    pub fn to_slots(&self) -> [f64; SOURCE_SLOT_COUNT] {
        [
            self.max_unroll_factor,
            self.avg_unroll_factor,
            self.max_batch_size,
            self.avg_batch_size,
            self.num_unrolled_loops,
            self.num_pipelined_loops,
            self.max_pipeline_ii,
            self.avg_pipeline_ii,
            self.max_pipelined_loop_index,
            self.num_array_partition_pragmas,
            self.num_array_reshape_pragmas,
            self.num_inlined_functions,
            self.total_loop_count,
        ]
    }
}

/// Everything extracted from one source file.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceScan {
    pub pragmas: Vec<PragmaDirective>,
    pub loops: Vec<LoopInfo>,
    pub features: SourceFeatures,
    pub warnings: Vec<Warning>,
}

/// Runs the full source pipeline: pragmas, loops, features.
pub fn scan_source(source_text: &str) -> Result<SourceScan, SourceError> {
    let PragmaScan { pragmas, warnings } = scan_pragmas(source_text)?;
    let loops = analyze_loops(source_text, &pragmas);
    let features = source_features(&loops, &pragmas);
    Ok(SourceScan {
        pragmas,
        loops,
        features,
        warnings,
    })
}

/// Parses every recognised `#pragma HLS` line, in file order.
pub fn scan_pragmas(source_text: &str) -> Result<PragmaScan, SourceError> {
    let structure = scan_structure(source_text);
    let mut out = PragmaScan::default();
    for site in structure.pragma_sites {
        let mut words = site.body.split_whitespace();
        match words.next() {
            Some(w) if w.eq_ignore_ascii_case("hls") => {}
            _ => continue,
        }
        let Some(keyword) = words.next() else {
            out.warnings.push(Warning {
                line: site.line,
                message: "empty HLS pragma skipped".into(),
            });
            continue;
        };
        let Some(kind) = PragmaKind::from_keyword(keyword) else {
            out.warnings.push(Warning {
                line: site.line,
                message: format!("unrecognized HLS pragma `{keyword}` skipped"),
            });
            continue;
        };
        let args = parse_args(words.collect::<Vec<_>>().join(" ").as_str());
        let mut directive = build_directive(kind, &args, site.line)?;
        if site.function.is_none() {
            out.warnings.push(Warning {
                line: site.line,
                message: "pragma outside of any function".into(),
            });
        }
        directive.enclosing_function = site.function.unwrap_or_default();
        directive.attached_loop_label = site.loop_label;
        out.pragmas.push(directive);
    }
    Ok(out)
}

/// One `key=value` or bare `word` pragma argument.
#[derive(Debug)]
struct PragmaArg {
    key: String,
    value: Option<String>,
}

fn parse_args(text: &str) -> Vec<PragmaArg> {
    // normalise `factor = 8` into `factor=8`
    let mut normalized = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '=' {
            while normalized.ends_with(' ') {
                normalized.pop();
            }
            normalized.push('=');
            while chars.peek() == Some(&' ') {
                chars.next();
            }
        } else {
            normalized.push(c);
        }
    }
    normalized
        .split_whitespace()
        .map(|word| match word.split_once('=') {
            Some((k, v)) => PragmaArg {
                key: k.to_ascii_lowercase(),
                value: Some(v.to_string()),
            },
            None => PragmaArg {
                key: word.to_ascii_lowercase(),
                value: None,
            },
        })
        .collect()
}

fn parse_count(value: Option<&str>, key: &str, line: usize, min: u64) -> Result<u64, SourceError> {
    let malformed = |detail: &str| SourceError::MalformedPragma {
        line,
        message: format!("`{key}` {detail}"),
    };
    let raw = value.ok_or_else(|| malformed("needs a value"))?;
    let n: u64 = raw
        .parse()
        .map_err(|_| malformed(&format!("has non-integer value `{raw}`")))?;
    if n < min {
        return Err(malformed(&format!("must be at least {min}, got {n}")));
    }
    Ok(n)
}

fn is_true(value: Option<&str>) -> bool {
    value.is_none_or(|v| v.eq_ignore_ascii_case("true") || v == "1")
}

fn build_directive(
    kind: PragmaKind,
    args: &[PragmaArg],
    line: usize,
) -> Result<PragmaDirective, SourceError> {
    let mut d = PragmaDirective {
        kind,
        factor: None,
        initiation_interval: None,
        dimension: None,
        partition_style: None,
        variable: None,
        disabled: false,
        enclosing_function: String::new(),
        attached_loop_label: None,
        source_line: line,
    };
    for arg in args {
        let value = arg.value.as_deref();
        match (kind, arg.key.as_str()) {
            (_, "off") => d.disabled = is_true(value),
            (_, "variable") => d.variable = value.map(str::to_string),
            (PragmaKind::Unroll | PragmaKind::ArrayPartition | PragmaKind::ArrayReshape, "factor") => {
                d.factor = Some(parse_count(value, "factor", line, 1)?)
            }
            (PragmaKind::Pipeline, "ii") => {
                d.initiation_interval = Some(parse_count(value, "II", line, 1)?)
            }
            (PragmaKind::ArrayPartition | PragmaKind::ArrayReshape, "dim") => {
                d.dimension = Some(parse_count(value, "dim", line, 0)?)
            }
            (PragmaKind::ArrayPartition | PragmaKind::ArrayReshape, "type") => {
                let raw = value.unwrap_or("");
                d.partition_style =
                    Some(PartitionStyle::from_keyword(raw).ok_or_else(|| {
                        SourceError::MalformedPragma {
                            line,
                            message: format!("unknown partition type `{raw}`"),
                        }
                    })?);
            }
            (PragmaKind::ArrayPartition | PragmaKind::ArrayReshape, word) if value.is_none() => {
                if let Some(style) = PartitionStyle::from_keyword(word) {
                    d.partition_style = Some(style);
                }
            }
            // remaining options (rewind, region, recursive, ...) do not affect features
            _ => {}
        }
    }

    match kind {
        PragmaKind::Unroll => {
            if d.factor.is_none() {
                d.partition_style = Some(PartitionStyle::Complete);
            }
        }
        PragmaKind::ArrayPartition | PragmaKind::ArrayReshape => {
            match (d.partition_style, d.factor) {
                (None, None) => d.partition_style = Some(PartitionStyle::Complete),
                (None, Some(_)) => {
                    return Err(SourceError::MalformedPragma {
                        line,
                        message: "`factor` given without block/cyclic style".into(),
                    })
                }
                (Some(PartitionStyle::Complete), _) => d.factor = None,
                (Some(_), None) => {
                    return Err(SourceError::MalformedPragma {
                        line,
                        message: "block/cyclic partitioning needs `factor`".into(),
                    })
                }
                (Some(_), Some(_)) => {}
            }
        }
        _ => {}
    }
    Ok(d)
}

/// Builds one [`LoopInfo`] per `for` loop, attaching each loop's pragmas.
pub fn analyze_loops(source_text: &str, pragmas: &[PragmaDirective]) -> Vec<LoopInfo> {
    let structure = scan_structure(source_text);
    structure
        .loops
        .into_iter()
        .map(|raw| {
            let attached = pragmas.iter().filter(|p| {
                !p.disabled
                    && p.enclosing_function == raw.function
                    && p.attached_loop_label.as_deref() == Some(raw.label.as_str())
            });
            let mut unroll_factor = 1;
            let mut pipeline_ii = None;
            for p in attached {
                match p.kind {
                    PragmaKind::Unroll => {
                        unroll_factor = match p.factor {
                            Some(f) => f,
                            None => raw.bound.unwrap_or(1),
                        }
                    }
                    PragmaKind::Pipeline => pipeline_ii = Some(p.initiation_interval.unwrap_or(1)),
                    _ => {}
                }
            }
            LoopInfo {
                batch_size: raw.bound.map(|b| Ratio::new(b, unroll_factor)),
                label: raw.label,
                function: raw.function,
                loop_bound: raw.bound,
                unroll_factor,
                pipelined: pipeline_ii.is_some(),
                initiation_interval: pipeline_ii,
                nesting_depth: raw.nesting_depth,
                source_line: raw.line,
            }
        })
        .collect()
}

fn max_avg(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut max, mut sum, mut n) = (0.0f64, 0.0, 0usize);
    for v in values {
        max = max.max(v);
        sum += v;
        n += 1;
    }
    if n == 0 {
        (0.0, 0.0)
    } else {
        (max, sum / n as f64)
    }
}

/// Aggregates loops and pragmas into the 13 source slots.
pub fn source_features(loops: &[LoopInfo], pragmas: &[PragmaDirective]) -> SourceFeatures {
    let (max_unroll_factor, avg_unroll_factor) = max_avg(loops.iter().map(|l| l.unroll_factor as f64));
    let (max_batch_size, avg_batch_size) =
        max_avg(loops.iter().filter_map(|l| l.batch_size).map(Ratio::to_f64));
    let pipelined = || loops.iter().filter(|l| l.pipelined);
    let (max_pipeline_ii, avg_pipeline_ii) =
        max_avg(pipelined().map(|l| l.initiation_interval.unwrap_or(1) as f64));

    let mut max_pipelined_loop_index = 0usize;
    let mut best_bound = None;
    for (i, l) in loops.iter().enumerate() {
        if !l.pipelined {
            continue;
        }
        let bound = l.loop_bound.unwrap_or(0);
        if best_bound.is_none_or(|b| bound > b) {
            best_bound = Some(bound);
            max_pipelined_loop_index = i + 1;
        }
    }

    let count = |kind: PragmaKind| pragmas.iter().filter(|p| p.kind == kind && !p.disabled).count() as f64;

    SourceFeatures {
        max_unroll_factor,
        avg_unroll_factor,
        max_batch_size,
        avg_batch_size,
        num_unrolled_loops: loops.iter().filter(|l| l.unroll_factor > 1).count() as f64,
        num_pipelined_loops: pipelined().count() as f64,
        max_pipeline_ii,
        avg_pipeline_ii,
        max_pipelined_loop_index: max_pipelined_loop_index as f64,
        num_array_partition_pragmas: count(PragmaKind::ArrayPartition),
        num_array_reshape_pragmas: count(PragmaKind::ArrayReshape),
        num_inlined_functions: count(PragmaKind::Inline),
        total_loop_count: loops.len() as f64,
    }
}

// ---------------------------------------------------------------------------
// structural scan

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i128),
    Punct(&'static str),
    Other,
}

#[derive(Debug)]
struct RawLoop {
    label: String,
    function: String,
    line: usize,
    nesting_depth: u32,
    bound: Option<u64>,
}

#[derive(Debug)]
struct PragmaSite {
    line: usize,
    body: String,
    function: Option<String>,
    loop_label: Option<String>,
}

#[derive(Debug, Default)]
struct Structure {
    loops: Vec<RawLoop>,
    pragma_sites: Vec<PragmaSite>,
}

#[derive(Debug)]
struct LoopScope {
    label: String,
    /// brace depth of the body (braced) or of the header (single statement)
    depth: i32,
    braced: bool,
    awaiting_body: bool,
}

#[derive(Debug)]
enum HeaderState {
    Idle,
    /// saw `for`, waiting for `(`
    ForKeyword { label: Option<String>, line: usize },
    /// collecting `for (...)` tokens
    ForHeader {
        label: Option<String>,
        line: usize,
        paren: i32,
        tokens: Vec<Tok>,
    },
}

#[derive(Debug)]
struct Scanner {
    depth: i32,
    paren: i32,
    function: Option<(String, i32)>,
    candidate: Option<String>,
    pending_function: Option<String>,
    loops: Vec<LoopScope>,
    header: HeaderState,
    recent: Vec<Tok>,
    loop_count: usize,
    out: Structure,
}

const KEYWORDS: &[&str] = &[
    "if", "for", "while", "switch", "return", "sizeof", "do", "else", "case", "default",
];

impl Scanner {
    fn new() -> Self {
        Self {
            depth: 0,
            paren: 0,
            function: None,
            candidate: None,
            pending_function: None,
            loops: Vec::new(),
            header: HeaderState::Idle,
            recent: Vec::new(),
            loop_count: 0,
            out: Structure::default(),
        }
    }

    fn pragma(&mut self, line: usize, body: String) {
        self.out.pragma_sites.push(PragmaSite {
            line,
            body,
            function: self.function.as_ref().map(|(name, _)| name.clone()),
            loop_label: self.loops.last().map(|l| l.label.clone()),
        });
    }

    fn statement_complete(&mut self) {
        while let Some(top) = self.loops.last() {
            if !top.braced && !top.awaiting_body && top.depth == self.depth {
                self.loops.pop();
            } else {
                break;
            }
        }
    }

    fn token(&mut self, tok: Tok, line: usize) {
        match std::mem::replace(&mut self.header, HeaderState::Idle) {
            HeaderState::ForKeyword { label, line: l } => {
                if tok == Tok::Punct("(") {
                    self.header = HeaderState::ForHeader {
                        label,
                        line: l,
                        paren: 1,
                        tokens: Vec::new(),
                    };
                }
                return;
            }
            HeaderState::ForHeader {
                label,
                line: l,
                mut paren,
                mut tokens,
            } => {
                match tok {
                    Tok::Punct("(") => paren += 1,
                    Tok::Punct(")") => paren -= 1,
                    _ => {}
                }
                if paren == 0 {
                    self.open_loop(label, l, &tokens);
                } else {
                    tokens.push(tok);
                    self.header = HeaderState::ForHeader {
                        label,
                        line: l,
                        paren,
                        tokens,
                    };
                }
                return;
            }
            HeaderState::Idle => {}
        }

        // a loop header was just closed; decide whether its body is braced
        if let Some(top) = self.loops.last_mut() {
            if top.awaiting_body {
                top.awaiting_body = false;
                if tok == Tok::Punct("{") {
                    top.braced = true;
                    top.depth = self.depth + 1;
                }
            }
        }

        match &tok {
            Tok::Punct("{") => {
                self.depth += 1;
                if self.function.is_none() {
                    if let Some(name) = self.pending_function.take() {
                        self.function = Some((name, self.depth));
                    }
                }
            }
            Tok::Punct("}") => {
                if let Some(top) = self.loops.last() {
                    if top.braced && top.depth == self.depth {
                        self.loops.pop();
                    }
                }
                self.depth -= 1;
                if let Some((_, fdepth)) = &self.function {
                    if self.depth < *fdepth {
                        self.function = None;
                        self.loops.clear();
                    }
                }
                self.statement_complete();
            }
            Tok::Punct(";") if self.paren == 0 => {
                self.pending_function = None;
                self.statement_complete();
            }
            Tok::Punct("(") => {
                if self.function.is_none() && self.paren == 0 {
                    self.candidate = match self.recent.last() {
                        Some(Tok::Ident(name)) if !KEYWORDS.contains(&name.as_str()) => Some(name.clone()),
                        _ => None,
                    };
                }
                self.paren += 1;
            }
            Tok::Punct(")") => {
                self.paren -= 1;
                if self.function.is_none() && self.paren == 0 {
                    self.pending_function = self.candidate.take();
                }
            }
            Tok::Ident(word) if word == "for" && self.function.is_some() => {
                let label = match self.recent.as_slice() {
                    [.., before, Tok::Ident(name), Tok::Punct(":")]
                        if *before != Tok::Ident("case".into()) && name != "default" =>
                    {
                        Some(name.clone())
                    }
                    [Tok::Ident(name), Tok::Punct(":")] if name != "default" => Some(name.clone()),
                    _ => None,
                };
                self.header = HeaderState::ForKeyword { label, line };
            }
            _ => {}
        }
        self.recent.push(tok);
        if self.recent.len() > 3 {
            self.recent.remove(0);
        }
    }

    fn open_loop(&mut self, label: Option<String>, line: usize, header: &[Tok]) {
        self.loop_count += 1;
        let label = label.unwrap_or_else(|| format!("loop{}", self.loop_count));
        let function = self.function.as_ref().map(|(n, _)| n.clone()).unwrap_or_default();
        self.out.loops.push(RawLoop {
            label: label.clone(),
            function,
            line,
            nesting_depth: self.loops.len() as u32,
            bound: trip_count(header),
        });
        self.loops.push(LoopScope {
            label,
            depth: self.depth,
            braced: false,
            awaiting_body: true,
        });
        self.recent.clear();
    }
}

fn scan_structure(text: &str) -> Structure {
    let mut scanner = Scanner::new();
    let mut in_block_comment = false;
    let mut continued_directive = false;
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        if continued_directive {
            continued_directive = raw_line.trim_end().ends_with('\\');
            continue;
        }
        let trimmed = raw_line.trim_start();
        if !in_block_comment && trimmed.starts_with('#') {
            let directive = trimmed[1..].trim_start();
            if let Some(rest) = directive.strip_prefix("pragma") {
                if rest.is_empty() || rest.starts_with(char::is_whitespace) {
                    let body = strip_trailing_comment(rest).trim().to_string();
                    scanner.pragma(line, body);
                }
            }
            continued_directive = raw_line.trim_end().ends_with('\\');
            continue;
        }
        for tok in tokenize_line(raw_line, &mut in_block_comment) {
            scanner.token(tok, line);
        }
    }
    scanner.out
}

fn strip_trailing_comment(s: &str) -> &str {
    let cut = [s.find("//"), s.find("/*")].into_iter().flatten().min();
    match cut {
        Some(i) => &s[..i],
        None => s,
    }
}

const PUNCT: &[&str] = &[
    "<<=", ">>=", "<=", ">=", "==", "!=", "++", "--", "+=", "-=", "*=", "/=", "&&", "||", "<<",
    ">>", "::", "->", "{", "}", "(", ")", "[", "]", ";", ",", "<", ">", "=", "+", "-", "*", "/",
    "%", "&", "|", "^", "!", "~", "?", ":", ".",
];

fn tokenize_line(line: &str, in_block_comment: &mut bool) -> Vec<Tok> {
    let bytes = line.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if *in_block_comment {
            match line[i..].find("*/") {
                Some(end) => {
                    i += end + 2;
                    *in_block_comment = false;
                    continue;
                }
                None => break,
            }
        }
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if line[i..].starts_with("//") {
            break;
        } else if line[i..].starts_with("/*") {
            *in_block_comment = true;
            i += 2;
        } else if c == b'"' || c == b'\'' {
            i += 1;
            while i < bytes.len() && bytes[i] != c {
                if bytes[i] == b'\\' {
                    i += 1;
                }
                i += 1;
            }
            i += 1;
            toks.push(Tok::Other);
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            toks.push(Tok::Ident(line[start..i].to_string()));
        } else if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'.') {
                i += 1;
            }
            toks.push(parse_int_literal(&line[start..i]).map_or(Tok::Other, Tok::Int));
        } else if let Some(p) = PUNCT.iter().find(|p| line[i..].starts_with(**p)) {
            toks.push(Tok::Punct(p));
            i += p.len();
        } else {
            // non-ASCII or stray character
            i += line[i..].chars().next().map_or(1, char::len_utf8);
            toks.push(Tok::Other);
        }
    }
    toks
}

fn parse_int_literal(text: &str) -> Option<i128> {
    let digits = text.trim_end_matches(['u', 'U', 'l', 'L']);
    if let Some(hex) = digits.strip_prefix("0x").or_else(|| digits.strip_prefix("0X")) {
        i128::from_str_radix(hex, 16).ok()
    } else {
        digits.parse().ok()
    }
}

/// Trip count of a `for` header with literal init/bound and constant step.
fn trip_count(header: &[Tok]) -> Option<u64> {
    let parts: Vec<&[Tok]> = header.split(|t| *t == Tok::Punct(";")).collect();
    let [init, cond, inc] = parts.as_slice() else {
        return None;
    };
    let (var, start) = parse_init(init)?;
    let (op, bound) = parse_cond(cond, &var)?;
    let step = parse_step(inc, &var)?;
    let count = match op {
        "<" if step > 0 && bound > start => (bound - start + step - 1) / step,
        "<=" if step > 0 && bound >= start => (bound - start) / step + 1,
        ">" if step < 0 && start > bound => (start - bound + (-step) - 1) / (-step),
        ">=" if step < 0 && start >= bound => (start - bound) / (-step) + 1,
        "!=" if (bound - start) % step == 0 && (bound - start) / step > 0 => (bound - start) / step,
        _ => return None,
    };
    u64::try_from(count).ok().filter(|&c| c > 0)
}

fn signed_literal(toks: &[Tok]) -> Option<i128> {
    match toks {
        [Tok::Int(v)] => Some(*v),
        [Tok::Punct("-"), Tok::Int(v)] => Some(-*v),
        [Tok::Punct("+"), Tok::Int(v)] => Some(*v),
        _ => None,
    }
}

fn parse_init(toks: &[Tok]) -> Option<(String, i128)> {
    let eq = toks.iter().position(|t| *t == Tok::Punct("="))?;
    let Tok::Ident(var) = toks.get(eq.checked_sub(1)?)? else {
        return None;
    };
    Some((var.clone(), signed_literal(&toks[eq + 1..])?))
}

fn parse_cond(toks: &[Tok], var: &str) -> Option<(&'static str, i128)> {
    const OPS: [&str; 5] = ["<", "<=", ">", ">=", "!="];
    let pos = toks
        .iter()
        .position(|t| matches!(t, Tok::Punct(p) if OPS.contains(p)))?;
    let Tok::Punct(op) = toks[pos] else { return None };
    let (lhs, rhs) = (&toks[..pos], &toks[pos + 1..]);
    let is_var = |side: &[Tok]| matches!(side, [Tok::Ident(v)] if v == var);
    if is_var(lhs) {
        Some((op, signed_literal(rhs)?))
    } else if is_var(rhs) {
        let flipped = match op {
            "<" => ">",
            "<=" => ">=",
            ">" => "<",
            ">=" => "<=",
            other => other,
        };
        Some((flipped, signed_literal(lhs)?))
    } else {
        None
    }
}

fn parse_step(toks: &[Tok], var: &str) -> Option<i128> {
    let v = |t: &Tok| matches!(t, Tok::Ident(name) if name == var);
    match toks {
        [a, Tok::Punct("++")] | [Tok::Punct("++"), a] if v(a) => Some(1),
        [a, Tok::Punct("--")] | [Tok::Punct("--"), a] if v(a) => Some(-1),
        [a, Tok::Punct("+="), rest @ ..] if v(a) => signed_literal(rest).filter(|s| *s != 0),
        [a, Tok::Punct("-="), rest @ ..] if v(a) => signed_literal(rest).filter(|s| *s != 0).map(|s| -s),
        [a, Tok::Punct("="), b, Tok::Punct("+"), rest @ ..] if v(a) && v(b) => {
            signed_literal(rest).filter(|s| *s != 0)
        }
        [a, Tok::Punct("="), b, Tok::Punct("-"), rest @ ..] if v(a) && v(b) => {
            signed_literal(rest).filter(|s| *s != 0).map(|s| -s)
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loops_of(src: &str) -> Vec<LoopInfo> {
        let scan = scan_pragmas(src).unwrap();
        analyze_loops(src, &scan.pragmas)
    }

    #[test]
    fn unroll_factor_inside_function() {
        let src = "void f(int a[64]) {\n  for (int i = 0; i < 64; i++) {\n#pragma HLS unroll factor=8\n    a[i] = 0;\n  }\n}\n";
        let scan = scan_pragmas(src).unwrap();
        assert_eq!(scan.pragmas.len(), 1);
        let p = &scan.pragmas[0];
        assert_eq!(p.kind, PragmaKind::Unroll);
        assert_eq!(p.factor, Some(8));
        assert_eq!(p.enclosing_function, "f");
        assert_eq!(p.attached_loop_label.as_deref(), Some("loop1"));
        assert_eq!(p.source_line, 3);
    }

    #[test]
    fn empty_file_has_no_pragmas() {
        assert!(scan_pragmas("").unwrap().pragmas.is_empty());
    }

    #[test]
    fn pipeline_ii() {
        let scan = scan_pragmas("void g() {\n#pragma HLS pipeline II=2\n}\n").unwrap();
        assert_eq!(scan.pragmas[0].kind, PragmaKind::Pipeline);
        assert_eq!(scan.pragmas[0].initiation_interval, Some(2));
        assert_eq!(scan.pragmas[0].factor, None);
    }

    #[test]
    fn unknown_kind_is_a_warning() {
        let src = "void g() {\n#pragma HLS interface m_axi port=a\n#pragma HLS inline\n}\n";
        let scan = scan_pragmas(src).unwrap();
        assert_eq!(scan.pragmas.len(), 1);
        assert_eq!(scan.warnings.len(), 1);
        assert_eq!(scan.warnings[0].line, 2);
    }

    #[test]
    fn non_hls_pragmas_are_ignored_silently() {
        let scan = scan_pragmas("#pragma once\nvoid g() {}\n").unwrap();
        assert!(scan.pragmas.is_empty() && scan.warnings.is_empty());
    }

    #[test]
    fn malformed_factor_reports_line() {
        let err = scan_pragmas("void f() {\n\n#pragma HLS unroll factor=abc\n}").unwrap_err();
        assert!(matches!(err, SourceError::MalformedPragma { line: 3, .. }));
        let err = scan_pragmas("void f() {\n#pragma HLS pipeline II=0\n}").unwrap_err();
        assert!(matches!(err, SourceError::MalformedPragma { line: 2, .. }));
        let err = scan_pragmas("void f() {\n#pragma HLS array_partition variable=a cyclic\n}").unwrap_err();
        assert!(matches!(err, SourceError::MalformedPragma { line: 2, .. }));
    }

    #[test]
    fn array_pragmas() {
        let src = "void f(int a[16], int b[16]) {\n\
#pragma HLS array_partition variable=a cyclic factor=4 dim=1\n\
#pragma HLS ARRAY_RESHAPE variable=b complete dim=0\n\
#pragma HLS array_partition variable=a type=block factor = 2\n}\n";
        let p = scan_pragmas(src).unwrap().pragmas;
        assert_eq!(p[0].partition_style, Some(PartitionStyle::Cyclic));
        assert_eq!((p[0].factor, p[0].dimension), (Some(4), Some(1)));
        assert_eq!(p[1].kind, PragmaKind::ArrayReshape);
        assert_eq!((p[1].partition_style, p[1].factor), (Some(PartitionStyle::Complete), None));
        assert_eq!(p[1].dimension, Some(0));
        assert_eq!((p[2].partition_style, p[2].factor), (Some(PartitionStyle::Block), Some(2)));
        assert_eq!(p[0].variable.as_deref(), Some("a"));
    }

    #[test]
    fn batch_size_from_unroll() {
        let src = "void f(int a[64]) {\n  for (int i = 0; i < 64; i++) {\n#pragma HLS unroll factor=8\n    a[i] = 0;\n  }\n}\n";
        let loops = loops_of(src);
        assert_eq!(loops.len(), 1);
        assert_eq!(loops[0].loop_bound, Some(64));
        assert_eq!(loops[0].unroll_factor, 8);
        assert_eq!(loops[0].batch_size, Some(Ratio::new(8, 1)));
    }

    #[test]
    fn default_unroll_factor_is_one() {
        let loops = loops_of("void f(int a[64]) {\n for (int i = 0; i < 64; ++i) a[i] = 1;\n}\n");
        assert_eq!(loops[0].unroll_factor, 1);
        assert_eq!(loops[0].batch_size, Some(Ratio::new(64, 1)));
    }

    #[test]
    fn runtime_bound_is_unknown() {
        let loops = loops_of("void f(int *a, int n) {\n for (int i = 0; i < n; i++) { a[i] = 1; }\n}\n");
        assert_eq!(loops[0].loop_bound, None);
        assert_eq!(loops[0].batch_size, None);
    }

    #[test]
    fn trip_count_variants() {
        let bound = |hdr: &str| {
            let src = format!("void f() {{ for ({hdr}) {{ }} }}");
            loops_of(&src)[0].loop_bound
        };
        assert_eq!(bound("int i = 0; i <= 9; i++"), Some(10));
        assert_eq!(bound("int i = 0; i < 10; i += 3"), Some(4));
        assert_eq!(bound("int i = 10; i > 0; i--"), Some(10));
        assert_eq!(bound("int i = 15; i >= 0; i -= 5"), Some(4));
        assert_eq!(bound("i = 0; 32 > i; i = i + 2"), Some(16));
        assert_eq!(bound("int i = 0; i != 8; i++"), Some(8));
        assert_eq!(bound("int i = 0; i < 0x10; i++"), Some(16));
        assert_eq!(bound("int i = 5; i < 5; i++"), None);
        assert_eq!(bound("int i = 0; i < 10; i *= 2"), None);
    }

    #[test]
    fn nesting_and_labels() {
        let src = r#"
int top(int a[8][8]) {
  int s = 0;
  ROW: for (int i = 0; i < 8; i++) {
    COL: for (int j = 0; j < 8; j++) {
#pragma HLS pipeline II=3
      s += a[i][j];
    }
  }
  for (int k = 0; k < 4; k++)
    s += k; // single statement body
  for (int k = 0; k < 2; k++)
    for (int m = 0; m < 2; m++)
      s -= m;
#pragma HLS inline off
  return s;
}
"#;
        let scan = scan_pragmas(src).unwrap();
        assert_eq!(scan.pragmas[0].attached_loop_label.as_deref(), Some("COL"));
        assert_eq!(scan.pragmas[1].attached_loop_label, None);
        assert!(scan.pragmas[1].disabled);
        let loops = analyze_loops(src, &scan.pragmas);
        let labels: Vec<_> = loops.iter().map(|l| l.label.as_str()).collect();
        assert_eq!(labels, ["ROW", "COL", "loop3", "loop4", "loop5"]);
        let depths: Vec<_> = loops.iter().map(|l| l.nesting_depth).collect();
        assert_eq!(depths, [0, 1, 0, 0, 1]);
        assert!(loops[1].pipelined && !loops[0].pipelined);
        assert_eq!(loops[1].initiation_interval, Some(3));
        let f = source_features(&loops, &scan.pragmas);
        assert_eq!(f.num_inlined_functions, 0.0);
        assert_eq!(f.max_pipelined_loop_index, 2.0);
    }

    #[test]
    fn comments_and_strings_do_not_confuse_the_scanner() {
        let src = "/* for (int i = 0; i < 9; i++) { */\nvoid f() {\n  const char *s = \"for (;;) {\";\n  // for (x) {\n  for (int i = 0; i < 3; i++) {}\n}\n";
        let loops = loops_of(src);
        assert_eq!(loops.len(), 1);
        assert_eq!(loops[0].loop_bound, Some(3));
        assert_eq!(loops[0].function, "f");
    }

    #[test]
    fn complete_unroll_uses_bound() {
        let src = "void f() {\n for (int i = 0; i < 16; i++) {\n#pragma HLS unroll\n }\n}\n";
        let loops = loops_of(src);
        assert_eq!(loops[0].unroll_factor, 16);
        assert_eq!(loops[0].batch_size, Some(Ratio::new(1, 1)));
    }

    #[test]
    fn empty_aggregation_is_zero() {
        let f = source_features(&[], &[]);
        assert_eq!(f.to_slots(), [0.0; SOURCE_SLOT_COUNT]);
    }

    fn plain_loop(unroll: u64, bound: Option<u64>) -> LoopInfo {
        LoopInfo {
            label: "l".into(),
            function: "f".into(),
            loop_bound: bound,
            unroll_factor: unroll,
            batch_size: bound.map(|b| Ratio::new(b, unroll)),
            pipelined: false,
            initiation_interval: None,
            nesting_depth: 0,
            source_line: 1,
        }
    }

    #[test]
    fn unroll_aggregation() {
        let loops = [plain_loop(2, Some(16)), plain_loop(8, Some(16))];
        let f = source_features(&loops, &[]);
        assert_eq!(f.max_unroll_factor, 8.0);
        assert_eq!(f.avg_unroll_factor, 5.0);
        assert_eq!(f.num_unrolled_loops, 2.0);
        assert_eq!(f.max_batch_size, 8.0);
        assert_eq!(f.avg_batch_size, 5.0);
    }

    #[test]
    fn single_pipelined_loop() {
        let mut l = plain_loop(1, Some(10));
        l.pipelined = true;
        l.initiation_interval = Some(3);
        let f = source_features(&[l], &[]);
        assert_eq!(f.num_pipelined_loops, 1.0);
        assert_eq!(f.max_pipeline_ii, 3.0);
        assert_eq!(f.avg_pipeline_ii, 3.0);
        assert_eq!(f.max_pipelined_loop_index, 1.0);
    }
}
