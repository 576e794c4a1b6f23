use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// Reserved words. `len` and `range` are builtins and cannot be rebound.
pub const KEYWORDS: [&str; 8] = ["for", "in", "if", "else", "true", "false", "len", "range"];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

/// True when `name` is usable as a variable name.
pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_') && !is_keyword(name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenKind {
    Identifier,
    IntegerLiteral,
    Keyword,
    Operator,
    Punctuation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub line: u32,
    pub col: u32,
}

impl Token {
    pub fn is(&self, kind: TokenKind, lexeme: &str) -> bool {
        self.kind == kind && self.lexeme == lexeme
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{}`", self.lexeme)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: unexpected character {found:?}")]
pub struct LexError {
    pub line: u32,
    pub col: u32,
    pub found: char,
}

/// Splits source text into tokens. Whitespace (including newlines) and `#`
/// comments are dropped; the parser recovers statement boundaries from the
/// token line numbers.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut tokens = Vec::new();
    let mut chars = source.chars().peekable();
    let (mut line, mut col) = (1u32, 1u32);

    while let Some(c) = chars.next() {
        let (start_line, start_col) = (line, col);
        let mut lexeme = String::from(c);
        if c == '\n' {
            line += 1;
            col = 1;
            continue;
        }
        col += 1;

        let kind = match c {
            ' ' | '\t' | '\r' => continue,
            '#' => {
                while let Some(&next) = chars.peek() {
                    if next == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
                continue;
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                while let Some(&next) = chars.peek() {
                    if !(next.is_ascii_alphanumeric() || next == '_') {
                        break;
                    }
                    lexeme.push(next);
                    chars.next();
                    col += 1;
                }
                if is_keyword(&lexeme) {
                    TokenKind::Keyword
                } else {
                    TokenKind::Identifier
                }
            }
            '0'..='9' => {
                while let Some(&next) = chars.peek() {
                    if !next.is_ascii_digit() {
                        break;
                    }
                    lexeme.push(next);
                    chars.next();
                    col += 1;
                }
                TokenKind::IntegerLiteral
            }
            '=' | '!' | '<' | '>' => {
                if chars.peek() == Some(&'=') {
                    lexeme.push('=');
                    chars.next();
                    col += 1;
                } else if c == '!' {
                    return Err(LexError {
                        line: start_line,
                        col: start_col,
                        found: c,
                    });
                }
                TokenKind::Operator
            }
            '+' | '-' | '*' | '/' => TokenKind::Operator,
            '(' | ')' | '{' | '}' | '[' | ']' => TokenKind::Punctuation,
            other => {
                return Err(LexError {
                    line: start_line,
                    col: start_col,
                    found: other,
                })
            }
        };
        tokens.push(Token {
            kind,
            lexeme,
            line: start_line,
            col: start_col,
        });
    }
    Ok(tokens)
}
