//! A syntactic check that C text has no calls, allocations or aggregates.
//!
//! The scanner tokenizes the whole unit and rejects anything it cannot
//! tokenize, so a pass is never the result of skipping text it did not
//! understand.

use thiserror::Error;

use crate::cgen::CSrc;

const KEYWORDS: &[&str] = &[
    "if", "while", "for", "switch", "return", "sizeof", "do", "else", "int", "double", "float", "char",
    "long", "short", "void", "const", "unsigned", "signed", "_Alignof", "_Generic", "static", "extern",
    "volatile", "restrict", "inline", "struct", "union", "enum", "case", "default", "break", "continue",
    "goto", "typedef",
];

const ALLOC: &[&str] = &["malloc", "calloc", "realloc", "free", "new", "alloca"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScanError {
    #[error("line {line}: unexpected character {ch:?}")]
    BadChar { line: usize, ch: char },
    #[error("line {line}: unterminated {what}")]
    Unterminated { line: usize, what: &'static str },
    #[error("line {line}: unbalanced `{ch}`")]
    Unbalanced { line: usize, ch: char },
}

/// What the scan found. Passes iff every list is empty.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FusionReport {
    /// Callee names, one entry per call expression.
    pub calls: Vec<String>,
    pub allocs: Vec<String>,
    /// Brace-initialized values, by line.
    pub aggregates: Vec<usize>,
    pub directives: Vec<String>,
}

impl FusionReport {
    pub fn passed(&self) -> bool {
        self.calls.is_empty() && self.allocs.is_empty() && self.aggregates.is_empty()
    }
}

impl std::fmt::Display for FusionReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        write!(
            f,
            "{verdict} (calls={}, alloc={}, aggregates={})",
            self.calls.len(),
            self.allocs.len(),
            self.aggregates.len()
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number,
    Str,
    Punct(String),
}

/// Tokens with their lines, and the preprocessor directives.
type Tokens = (Vec<(Tok, usize)>, Vec<String>);

fn tokenize(text: &str) -> Result<Tokens, ScanError> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut directives = Vec::new();
    let mut line = 1;
    let mut at_line_start = true;
    let mut i = 0;
    const PUNCT3: &[&str] = &["<<=", ">>=", "..."];
    const PUNCT2: &[&str] = &[
        "++", "--", "<=", ">=", "==", "!=", "&&", "||", "->", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
        "<<", ">>",
    ];
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            line += 1;
            at_line_start = true;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' && at_line_start {
            let start = i;
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            directives.push(chars[start..i].iter().collect());
            continue;
        }
        at_line_start = false;
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            let start_line = line;
            i += 2;
            loop {
                match chars.get(i) {
                    None => {
                        return Err(ScanError::Unterminated {
                            line: start_line,
                            what: "comment",
                        })
                    }
                    Some('*') if chars.get(i + 1) == Some(&'/') => {
                        i += 2;
                        break;
                    }
                    Some('\n') => {
                        line += 1;
                        i += 1;
                    }
                    Some(_) => i += 1,
                }
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            toks.push((Tok::Ident(chars[start..i].iter().collect()), line));
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            while i < chars.len() {
                let d = chars[i];
                let exp_sign = (d == '+' || d == '-') && matches!(chars[i - 1], 'e' | 'E' | 'p' | 'P');
                if d.is_ascii_alphanumeric() || d == '.' || d == '_' || exp_sign {
                    i += 1;
                } else {
                    break;
                }
            }
            toks.push((Tok::Number, line));
            continue;
        }
        if c == '"' || c == '\'' {
            let what = if c == '"' { "string" } else { "character literal" };
            i += 1;
            loop {
                match chars.get(i) {
                    None | Some('\n') => return Err(ScanError::Unterminated { line, what }),
                    Some('\\') => i += 2,
                    Some(&d) if d == c => {
                        i += 1;
                        break;
                    }
                    Some(_) => i += 1,
                }
            }
            toks.push((Tok::Str, line));
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        if let Some(p) = PUNCT3.iter().find(|p| rest.starts_with(**p)) {
            toks.push((Tok::Punct(p.to_string()), line));
            i += 3;
            continue;
        }
        if let Some(p) = PUNCT2.iter().find(|p| rest.starts_with(**p)) {
            toks.push((Tok::Punct(p.to_string()), line));
            i += 2;
            continue;
        }
        if "{}()[];,.<>=+-*/%!&|^~?:".contains(c) {
            toks.push((Tok::Punct(c.to_string()), line));
            i += 1;
            continue;
        }
        return Err(ScanError::BadChar { line, ch: c });
    }
    Ok((toks, directives))
}

/// Number of C tokens in `text`, excluding comments and directives.
pub fn token_count(text: &str) -> Result<usize, ScanError> {
    Ok(tokenize(text)?.0.len())
}

/// Scans C text.
pub fn scan_text(text: &str) -> Result<FusionReport, ScanError> {
    let (toks, directives) = tokenize(text)?;
    let mut report = FusionReport {
        directives,
        ..Default::default()
    };
    let mut braces: Vec<usize> = Vec::new();
    // For each open parenthesis: does a `{` right after its `)` open a block?
    let mut parens: Vec<(bool, usize)> = Vec::new();
    let mut closed_block_paren = false;
    let mut prev: Option<&Tok> = None;
    for (k, (tok, line)) in toks.iter().enumerate() {
        let next = toks.get(k + 1).map(|t| &t.0);
        match tok {
            Tok::Ident(name) => {
                if ALLOC.contains(&name.as_str()) {
                    report.allocs.push(name.clone());
                }
                let opens = matches!(next, Some(Tok::Punct(p)) if p == "(");
                if opens && !braces.is_empty() && !KEYWORDS.contains(&name.as_str()) {
                    report.calls.push(name.clone());
                }
            }
            Tok::Punct(p) => match p.as_str() {
                "(" => {
                    let block = match prev {
                        Some(Tok::Ident(n)) => {
                            matches!(n.as_str(), "if" | "while" | "for" | "switch") || braces.is_empty()
                        }
                        _ => false,
                    };
                    parens.push((block, *line));
                }
                ")" => {
                    let (block, _) = parens
                        .pop()
                        .ok_or(ScanError::Unbalanced { line: *line, ch: ')' })?;
                    closed_block_paren = block;
                }
                "{" => {
                    let aggregate = match prev {
                        Some(Tok::Punct(q)) => match q.as_str() {
                            "=" | "(" | "," | "[" | "?" | ":" => true,
                            ")" => !closed_block_paren,
                            _ => false,
                        },
                        Some(Tok::Ident(n)) => n == "return",
                        _ => false,
                    };
                    if aggregate {
                        report.aggregates.push(*line);
                    }
                    braces.push(*line);
                }
                "}" => {
                    braces
                        .pop()
                        .ok_or(ScanError::Unbalanced { line: *line, ch: '}' })?;
                }
                _ => {}
            },
            _ => {}
        }
        prev = Some(tok);
    }
    if let Some(line) = braces.pop() {
        return Err(ScanError::Unbalanced { line, ch: '{' });
    }
    if let Some((_, line)) = parens.pop() {
        return Err(ScanError::Unbalanced { line, ch: '(' });
    }
    Ok(report)
}

/// Scans a rendered unit.
pub fn fusion_scan(src: &CSrc) -> Result<FusionReport, ScanError> {
    scan_text(&src.text)
}
