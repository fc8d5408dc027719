//! Tokenizer for the supported Java subset.

use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    Int(String),
    Float(String),
    Char(String),
    Str(String),
    /// Operators and separators. `>` is always emitted alone so generic
    /// closers never fuse; the expression parser re-joins shift operators.
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn is_punct(&self, p: &str) -> bool {
        matches!(&self.kind, TokenKind::Punct(q) if *q == p)
    }

    pub fn is_ident(&self, name: &str) -> bool {
        matches!(&self.kind, TokenKind::Ident(n) if n == name)
    }

    pub fn ident(&self) -> Option<&str> {
        match &self.kind {
            TokenKind::Ident(n) => Some(n),
            _ => None,
        }
    }
}

// Longest first.
const PUNCTS: [&str; 46] = [
    "<<=", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=", "+=", "-=", "*=", "/=",
    "%=", "&=", "|=", "^=", "<<", "(", ")", "{", "}", "[", "]", ";", ",", ".", "@", "=", "<",
    ">", "!", "~", "?", ":", "+", "-", "*", "/", "&", "|", "^", "%", "#",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if src[i..].starts_with("//") {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if src[i..].starts_with("/*") {
            match src[i + 2..].find("*/") {
                Some(end) => i += end + 4,
                None => return Err(ParseError::at(src, i, "unterminated comment")),
            }
            continue;
        }
        let start = i;
        if src[i..].starts_with("\"\"\"") {
            let body = i + 3;
            match src[body..].find("\"\"\"") {
                Some(end) => {
                    i = body + end + 3;
                    tokens.push(Token {
                        kind: TokenKind::Str(src[body..body + end].to_string()),
                        start,
                        end: i,
                    });
                }
                None => return Err(ParseError::at(src, i, "unterminated text block")),
            }
            continue;
        }
        if c == b'"' || c == b'\'' {
            let quote = c;
            i += 1;
            while i < bytes.len() && bytes[i] != quote {
                if bytes[i] == b'\\' {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'\n' {
                    return Err(ParseError::at(src, start, "unterminated literal"));
                }
                i += 1;
            }
            if i >= bytes.len() {
                return Err(ParseError::at(src, start, "unterminated literal"));
            }
            i += 1;
            let text = src[start + 1..i - 1].to_string();
            let kind = if quote == b'"' { TokenKind::Str(text) } else { TokenKind::Char(text) };
            tokens.push(Token { kind, start, end: i });
            continue;
        }
        if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            let mut float = false;
            if src[i..].starts_with("0x") || src[i..].starts_with("0X") || src[i..].starts_with("0b") || src[i..].starts_with("0B") {
                i += 2;
                while i < bytes.len() && (bytes[i].is_ascii_hexdigit() || bytes[i] == b'_') {
                    i += 1;
                }
            } else {
                while i < bytes.len() {
                    let d = bytes[i];
                    if d.is_ascii_digit() || d == b'_' {
                        i += 1;
                    } else if d == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit) {
                        float = true;
                        i += 1;
                    } else if d == b'.' && !float && !bytes.get(i + 1).is_some_and(|n| n.is_ascii_alphabetic() || *n == b'.') {
                        // `1.` as a float literal
                        float = true;
                        i += 1;
                    } else if (d == b'e' || d == b'E') && i > start {
                        float = true;
                        i += 1;
                        if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
                            i += 1;
                        }
                    } else {
                        break;
                    }
                }
            }
            if i < bytes.len() && matches!(bytes[i], b'l' | b'L' | b'f' | b'F' | b'd' | b'D') {
                if matches!(bytes[i], b'f' | b'F' | b'd' | b'D') {
                    float = true;
                }
                i += 1;
            }
            let text = src[start..i].to_string();
            let kind = if float { TokenKind::Float(text) } else { TokenKind::Int(text) };
            tokens.push(Token { kind, start, end: i });
            continue;
        }
        let ch = src[i..].chars().next().expect("in bounds");
        if ch.is_alphabetic() || ch == '_' || ch == '$' {
            while i < bytes.len() {
                let ch = src[i..].chars().next().expect("in bounds");
                if ch.is_alphanumeric() || ch == '_' || ch == '$' {
                    i += ch.len_utf8();
                } else {
                    break;
                }
            }
            tokens.push(Token { kind: TokenKind::Ident(src[start..i].to_string()), start, end: i });
            continue;
        }
        match PUNCTS.iter().find(|p| src[i..].starts_with(**p)) {
            Some(p) => {
                i += p.len();
                tokens.push(Token { kind: TokenKind::Punct(p), start, end: i });
            }
            None => return Err(ParseError::at(src, i, format!("unexpected character `{ch}`"))),
        }
    }
    tokens.push(Token { kind: TokenKind::Eof, start: src.len(), end: src.len() });
    Ok(tokens)
}
