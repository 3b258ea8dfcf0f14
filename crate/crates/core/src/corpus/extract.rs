//! Heuristic C/C++ function extraction.
//!
//! No grammar is involved. The source is lexed into identifiers, literals and
//! punctuation (comments and preprocessor lines are dropped), then every `{`
//! reached at namespace level is classified by the tokens that precede it. A
//! header that contains `identifier ( ... )` opens a function definition whose
//! body runs to the matching `}`. Namespaces, `extern "C"` blocks and
//! class/struct bodies are descended into; every other block is skipped whole.

use crate::error::{Error, Result};

/// One function definition found in a source file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractedFunction {
    pub name: String,
    /// Source text from the first token of the signature through the closing
    /// brace, comments included.
    pub body: String,
    /// 1-based line of the signature start.
    pub line: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Extraction {
    pub functions: Vec<ExtractedFunction>,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TokenKind {
    Ident,
    Literal,
    Punct(u8),
}

#[derive(Debug, Clone, Copy)]
struct Token {
    kind: TokenKind,
    start: usize,
    end: usize,
}

const NOT_A_CALLEE: &[&str] = &[
    "if",
    "while",
    "for",
    "switch",
    "return",
    "sizeof",
    "catch",
    "decltype",
    "alignas",
    "alignof",
    "__attribute__",
    "__declspec",
    "_Alignas",
    "static_assert",
    "_Static_assert",
];

const SCOPE_KEYWORDS: &[&str] = &["namespace", "class", "struct", "union", "extern"];

/// Extracts function definitions from raw bytes, rejecting binary input.
pub fn extract_functions_bytes(bytes: &[u8]) -> Result<Extraction> {
    if bytes.contains(&0) {
        return Err(Error::NotText("input contains NUL bytes".into()));
    }
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::NotText(format!("invalid UTF-8: {e}")))?;
    Ok(extract_functions(text))
}

/// Extracts top-level function definitions from C/C++ source text.
///
/// Unbalanced braces stop the scan; whatever was found before that point is
/// returned together with a diagnostic.
pub fn extract_functions(source: &str) -> Extraction {
    let mut out = Extraction::default();
    let tokens = lex(source, &mut out.diagnostics);
    let src = source.as_bytes();
    let text = |t: &Token| &source[t.start..t.end];

    let mut scope_depth = 0usize;
    let mut header: Vec<usize> = Vec::new();
    let mut i = 0usize;
    while i < tokens.len() {
        let tok = tokens[i];
        match tok.kind {
            TokenKind::Punct(b';') => header.clear(),
            TokenKind::Punct(b'}') => {
                if scope_depth == 0 {
                    out.diagnostics
                        .push(format!("stray '}}' at line {}", line_of(src, tok.start)));
                } else {
                    scope_depth -= 1;
                }
                header.clear();
            }
            TokenKind::Punct(b'{') => {
                let head: Vec<Token> = header.iter().map(|&h| tokens[h]).collect();
                header.clear();
                match classify_header(&head, &text) {
                    Header::Function(name) => match matching_brace(&tokens, i) {
                        Some(close) => {
                            let start = head[0].start;
                            out.functions.push(ExtractedFunction {
                                name,
                                body: source[start..tokens[close].end].to_string(),
                                line: line_of(src, start),
                            });
                            i = close;
                        }
                        None => {
                            out.diagnostics.push(format!(
                                "unbalanced braces: body of '{name}' (line {}) never closes",
                                line_of(src, tok.start)
                            ));
                            break;
                        }
                    },
                    Header::Scope => scope_depth += 1,
                    Header::Opaque => match matching_brace(&tokens, i) {
                        Some(close) => i = close,
                        None => {
                            out.diagnostics.push(format!(
                                "unbalanced braces: block at line {} never closes",
                                line_of(src, tok.start)
                            ));
                            break;
                        }
                    },
                }
            }
            _ => header.push(i),
        }
        i += 1;
    }
    if scope_depth > 0 && !out.diagnostics.iter().any(|d| d.starts_with("unbalanced")) {
        out.diagnostics
            .push(format!("unbalanced braces: {scope_depth} scope(s) left open at end of input"));
    }
    out
}

/// True when `{` and `}` outside comments and literals pair up.
pub fn braces_balanced(source: &str) -> bool {
    let mut sink = Vec::new();
    let mut depth = 0i64;
    for tok in lex(source, &mut sink) {
        match tok.kind {
            TokenKind::Punct(b'{') => depth += 1,
            TokenKind::Punct(b'}') => {
                depth -= 1;
                if depth < 0 {
                    return false;
                }
            }
            _ => {}
        }
    }
    depth == 0
}

enum Header {
    Function(String),
    Scope,
    Opaque,
}

fn classify_header<'a>(head: &[Token], text: &impl Fn(&Token) -> &'a str) -> Header {
    if head.is_empty() {
        return Header::Opaque;
    }
    let mut paren = 0i32;
    for (k, tok) in head.iter().enumerate() {
        match tok.kind {
            TokenKind::Punct(b'(') => {
                if paren == 0 {
                    if let Some(name) = callee_name(head, k, text) {
                        if closes(head, k) {
                            return Header::Function(name);
                        }
                    }
                }
                paren += 1;
            }
            TokenKind::Punct(b')') => paren -= 1,
            // `T x = {` or `T x[] = {` is an initializer.
            TokenKind::Punct(b'=') if paren == 0 => return Header::Opaque,
            _ => {}
        }
    }
    let first_word = head
        .iter()
        .filter(|t| t.kind == TokenKind::Ident)
        .map(text)
        .find(|w| *w != "typedef" && *w != "template" && *w != "export" && *w != "inline");
    match first_word {
        Some(w) if SCOPE_KEYWORDS.contains(&w) => Header::Scope,
        _ => Header::Opaque,
    }
}

/// Name of the identifier immediately before the `(` at `open`, if it can be a
/// function name.
fn callee_name<'a>(head: &[Token], open: usize, text: &impl Fn(&Token) -> &'a str) -> Option<String> {
    let prev = head.get(open.checked_sub(1)?)?;
    match prev.kind {
        TokenKind::Ident => {
            let word = text(prev);
            if NOT_A_CALLEE.contains(&word) || word.as_bytes()[0].is_ascii_digit() {
                None
            } else {
                Some(word.to_string())
            }
        }
        // `operator==(`, `operator()(` and friends.
        TokenKind::Punct(_) => head[..open]
            .iter()
            .rev()
            .take(3)
            .find(|t| t.kind == TokenKind::Ident && text(t) == "operator")
            .map(|_| "operator".to_string()),
        TokenKind::Literal => None,
    }
}

fn closes(head: &[Token], open: usize) -> bool {
    let mut depth = 0i32;
    for tok in &head[open..] {
        match tok.kind {
            TokenKind::Punct(b'(') => depth += 1,
            TokenKind::Punct(b')') => {
                depth -= 1;
                if depth == 0 {
                    return true;
                }
            }
            _ => {}
        }
    }
    false
}

fn matching_brace(tokens: &[Token], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (k, tok) in tokens.iter().enumerate().skip(open) {
        match tok.kind {
            TokenKind::Punct(b'{') => depth += 1,
            TokenKind::Punct(b'}') => {
                depth -= 1;
                if depth == 0 {
                    return Some(k);
                }
            }
            _ => {}
        }
    }
    None
}

fn line_of(src: &[u8], pos: usize) -> usize {
    1 + src[..pos].iter().filter(|&&b| b == b'\n').count()
}

fn is_ident_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'$' || b >= 0x80
}

/// Splits source into identifier, literal and punctuation tokens. Comments and
/// preprocessor directives produce no tokens.
fn lex(source: &str, diagnostics: &mut Vec<String>) -> Vec<Token> {
    let src = source.as_bytes();
    let n = src.len();
    let mut tokens = Vec::new();
    let mut i = 0usize;
    let mut line_start = true;
    while i < n {
        let b = src[i];
        match b {
            b'\n' => {
                line_start = true;
                i += 1;
            }
            b' ' | b'\t' | b'\r' | 0x0b | 0x0c => i += 1,
            b'#' if line_start => {
                // Directive runs to an unescaped newline.
                while i < n && src[i] != b'\n' {
                    if src[i] == b'\\' && i + 1 < n && src[i + 1] == b'\n' {
                        i += 2;
                    } else if src[i] == b'\\' && i + 2 < n && src[i + 1] == b'\r' && src[i + 2] == b'\n' {
                        i += 3;
                    } else {
                        i += 1;
                    }
                }
            }
            b'/' if i + 1 < n && src[i + 1] == b'/' => {
                while i < n && src[i] != b'\n' {
                    i += 1;
                }
            }
            b'/' if i + 1 < n && src[i + 1] == b'*' => {
                let open_line = line_of(src, i);
                i += 2;
                loop {
                    if i + 1 >= n {
                        diagnostics.push(format!("unterminated comment starting at line {open_line}"));
                        i = n;
                        break;
                    }
                    if src[i] == b'*' && src[i + 1] == b'/' {
                        i += 2;
                        break;
                    }
                    i += 1;
                }
            }
            b'"' | b'\'' => {
                line_start = false;
                let start = i;
                i += 1;
                let mut closed = false;
                while i < n {
                    match src[i] {
                        b'\\' => i += 2,
                        c if c == b => {
                            i += 1;
                            closed = true;
                            break;
                        }
                        // Unterminated literals end at the line.
                        b'\n' => break,
                        _ => i += 1,
                    }
                }
                if !closed {
                    diagnostics.push(format!("unterminated literal at line {}", line_of(src, start)));
                }
                let end = i.min(n);
                tokens.push(Token { kind: TokenKind::Literal, start, end });
                i = end;
            }
            c if is_ident_byte(c) => {
                line_start = false;
                let start = i;
                while i < n && is_ident_byte(src[i]) {
                    i += 1;
                }
                tokens.push(Token { kind: TokenKind::Ident, start, end: i });
            }
            c => {
                line_start = false;
                tokens.push(Token { kind: TokenKind::Punct(c), start: i, end: i + 1 });
                i += 1;
            }
        }
    }
    tokens
}
