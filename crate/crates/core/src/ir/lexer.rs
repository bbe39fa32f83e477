//! Line tokenizer for the IR subset.

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum TokKind {
    /// `%name`, sigil kept
    Local(String),
    /// `@name`, sigil kept
    Global(String),
    /// keyword, type name, number or bare label
    Word(String),
    /// `!name` or `!0`
    Meta(String),
    /// `#0`
    AttrGroup(String),
    Str(String),
    Punct(char),
    Ellipsis,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Token {
    pub kind: TokKind,
    pub column: usize,
}

impl Token {
    pub fn text(&self) -> String {
        match &self.kind {
            TokKind::Local(s) | TokKind::Global(s) | TokKind::Word(s) => s.clone(),
            TokKind::Meta(s) => format!("!{s}"),
            TokKind::AttrGroup(s) => format!("#{s}"),
            TokKind::Str(s) => format!("\"{s}\""),
            TokKind::Punct(c) => c.to_string(),
            TokKind::Ellipsis => "...".into(),
        }
    }

    pub fn is_word(&self, w: &str) -> bool {
        matches!(&self.kind, TokKind::Word(s) if s == w)
    }

    pub fn is_punct(&self, c: char) -> bool {
        self.kind == TokKind::Punct(c)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct LexError {
    pub column: usize,
    pub token: String,
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '-' | '$' | '.' | '_')
}

/// Removes a trailing `;` comment, respecting string literals.
pub(crate) fn strip_comment(line: &str) -> &str {
    let mut in_str = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_str = !in_str,
            ';' if !in_str => return &line[..i],
            _ => {}
        }
    }
    line
}

pub(crate) fn tokenize(line: &str) -> Result<Vec<Token>, LexError> {
    let chars: Vec<(usize, char)> = line.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let take_while = |mut j: usize, pred: &dyn Fn(char) -> bool| {
        while j < chars.len() && pred(chars[j].1) {
            j += 1;
        }
        j
    };
    let slice = |a: usize, b: usize| -> String { chars[a..b].iter().map(|&(_, c)| c).collect() };

    while i < chars.len() {
        let c = chars[i].1;
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let kind = match c {
            '%' | '@' | '!' | '#' => {
                let start = i + 1;
                let (name, end) = if start < chars.len() && chars[start].1 == '"' {
                    let close = take_while(start + 1, &|ch| ch != '"');
                    if close >= chars.len() {
                        return Err(LexError {
                            column,
                            token: slice(i, chars.len()),
                        });
                    }
                    (slice(start + 1, close), close + 1)
                } else {
                    let end = take_while(start, &is_ident_char);
                    (slice(start, end), end)
                };
                i = end;
                match c {
                    '%' if !name.is_empty() => TokKind::Local(format!("%{name}")),
                    '@' if !name.is_empty() => TokKind::Global(format!("@{name}")),
                    '!' => TokKind::Meta(name),
                    '#' if !name.is_empty() => TokKind::AttrGroup(name),
                    _ => {
                        return Err(LexError {
                            column,
                            token: c.to_string(),
                        })
                    }
                }
            }
            '"' => {
                let close = take_while(i + 1, &|ch| ch != '"');
                if close >= chars.len() {
                    return Err(LexError {
                        column,
                        token: slice(i, chars.len()),
                    });
                }
                let s = slice(i + 1, close);
                i = close + 1;
                TokKind::Str(s)
            }
            '.' if line[chars[i].0..].starts_with("...") => {
                i += 3;
                TokKind::Ellipsis
            }
            '(' | ')' | '[' | ']' | '{' | '}' | '<' | '>' | ',' | '=' | '*' | ':' => {
                i += 1;
                TokKind::Punct(c)
            }
            c if is_ident_char(c) || c == '+' => {
                let end = take_while(i + 1, &|ch| is_ident_char(ch) || ch == '+');
                let word = slice(i, end);
                i = end;
                TokKind::Word(word)
            }
            _ => {
                return Err(LexError {
                    column,
                    token: c.to_string(),
                })
            }
        };
        out.push(Token { kind, column });
    }
    Ok(out)
}
