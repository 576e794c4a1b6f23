use std::fmt;

use thiserror::Error;

use super::ast::*;
use super::lexer::{tokenize, LexError, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: expected ", self.line, self.col)?;
        match self.expected.as_slice() {
            [one] => write!(f, "{one}")?,
            many => write!(f, "one of {}", many.join(", "))?,
        }
        write!(f, ", found {}", self.found)
    }
}

impl std::error::Error for ParseError {}

/// Anything that can go wrong turning source text into a [`Program`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error("lex error at {0}")]
    Lex(#[from] LexError),
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
}

impl SyntaxError {
    pub fn position(&self) -> (u32, u32) {
        match self {
            SyntaxError::Lex(e) => (e.line, e.col),
            SyntaxError::Parse(e) => (e.line, e.col),
        }
    }
}

pub fn parse(source: &str) -> Result<Program, SyntaxError> {
    let tokens = tokenize(source)?;
    let end = end_position(source);
    Parser {
        tokens,
        pos: 0,
        nesting: 0,
        end,
    }
    .program()
    .map_err(SyntaxError::from)
}

/// Position just past the last character of `source`.
fn end_position(source: &str) -> Span {
    let (mut line, mut col) = (1, 1);
    for c in source.chars() {
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    Span::new(line, col)
}

type PResult<T> = Result<T, ParseError>;

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    /// Depth of enclosing `( )`, `[ ]` and if-expression braces; newlines
    /// are insignificant while it is non-zero.
    nesting: u32,
    end: Span,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn prev_line(&self) -> u32 {
        self.pos
            .checked_sub(1)
            .map(|i| self.tokens[i].line)
            .unwrap_or(0)
    }

    /// Whether the next token may continue the current expression.
    fn continues(&self) -> bool {
        match self.peek() {
            Some(t) => self.nesting > 0 || t.line == self.prev_line(),
            None => false,
        }
    }

    fn peek_is(&self, kind: TokenKind, lexeme: &str) -> bool {
        self.peek().is_some_and(|t| t.is(kind, lexeme))
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        self.pos += 1;
        t
    }

    fn error<S: Into<String>>(&self, expected: impl IntoIterator<Item = S>) -> ParseError {
        let (span, found) = match self.peek() {
            Some(t) => (Span::new(t.line, t.col), t.to_string()),
            None => (self.end, "end of input".to_string()),
        };
        ParseError {
            line: span.line,
            col: span.col,
            expected: expected.into_iter().map(Into::into).collect(),
            found,
        }
    }

    fn expect(&mut self, kind: TokenKind, lexeme: &str) -> PResult<Token> {
        if self.peek_is(kind, lexeme) {
            Ok(self.bump())
        } else {
            Err(self.error([format!("`{lexeme}`")]))
        }
    }

    fn expect_ident(&mut self) -> PResult<Token> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => Ok(self.bump()),
            _ => Err(self.error(["identifier"])),
        }
    }

    fn program(mut self) -> PResult<Program> {
        let mut statements = Vec::new();
        while self.peek().is_some() {
            statements.push(self.statement()?);
            self.end_of_statement(false)?;
        }
        Ok(Program { statements })
    }

    fn end_of_statement(&self, in_block: bool) -> PResult<()> {
        match self.peek() {
            None => Ok(()),
            Some(t) if in_block && t.is(TokenKind::Punctuation, "}") => Ok(()),
            Some(t) if t.line > self.prev_line() => Ok(()),
            Some(_) => Err(self.error(["newline"])),
        }
    }

    fn statement(&mut self) -> PResult<Stmt> {
        if self.peek_is(TokenKind::Keyword, "for") {
            let kw = self.bump();
            let binder = self.expect_ident()?.lexeme;
            self.expect(TokenKind::Keyword, "in")?;
            let iterable = self.expr()?;
            self.expect(TokenKind::Punctuation, "{")?;
            let saved = std::mem::replace(&mut self.nesting, 0);
            let mut body = Vec::new();
            while !self.peek_is(TokenKind::Punctuation, "}") {
                if self.peek().is_none() {
                    return Err(self.error(["statement", "`}`"]));
                }
                body.push(self.statement()?);
                self.end_of_statement(true)?;
            }
            if body.is_empty() {
                return Err(self.error(["statement"]));
            }
            self.nesting = saved;
            self.bump();
            return Ok(Stmt {
                kind: StmtKind::ForIn {
                    binder,
                    iterable,
                    body,
                },
                span: Span::new(kw.line, kw.col),
            });
        }
        let target = match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => self.bump(),
            _ => return Err(self.error(["identifier", "`for`"])),
        };
        self.expect(TokenKind::Operator, "=")?;
        let value = self.expr()?;
        Ok(Stmt {
            kind: StmtKind::Assign {
                target: target.lexeme,
                value,
            },
            span: Span::new(target.line, target.col),
        })
    }

    fn binary_op(&self) -> Option<BinOp> {
        if !self.continues() {
            return None;
        }
        let t = self.peek()?;
        if t.kind != TokenKind::Operator {
            return None;
        }
        BinOp::from_symbol(&t.lexeme)
    }

    fn expr(&mut self) -> PResult<Expr> {
        let lhs = self.additive()?;
        match self.binary_op() {
            Some(op) if op.is_comparison() => {
                let tok = self.bump();
                let rhs = self.additive()?;
                if matches!(self.binary_op(), Some(next) if next.is_comparison()) {
                    return Err(self.error(["end of comparison (comparisons do not chain)"]));
                }
                Ok(Expr::new(
                    ExprKind::Binary {
                        op,
                        lhs: Box::new(lhs),
                        rhs: Box::new(rhs),
                    },
                    Span::new(tok.line, tok.col),
                ))
            }
            _ => Ok(lhs),
        }
    }

    fn additive(&mut self) -> PResult<Expr> {
        self.left_assoc(2, Self::multiplicative)
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        self.left_assoc(3, Self::unary)
    }

    fn left_assoc(&mut self, level: u8, next: fn(&mut Self) -> PResult<Expr>) -> PResult<Expr> {
        let mut lhs = next(self)?;
        while let Some(op) = self.binary_op().filter(|op| op.precedence() == level) {
            let tok = self.bump();
            let rhs = next(self)?;
            lhs = Expr::new(
                ExprKind::Binary {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                Span::new(tok.line, tok.col),
            );
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.peek_is(TokenKind::Operator, "-") {
            let tok = self.bump();
            let operand = self.unary()?;
            return Ok(Expr::new(
                ExprKind::Neg(Box::new(operand)),
                Span::new(tok.line, tok.col),
            ));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut expr = self.primary()?;
        while self.continues() && self.peek_is(TokenKind::Punctuation, "[") {
            let open = self.bump();
            self.nesting += 1;
            let index = self.expr()?;
            self.expect(TokenKind::Punctuation, "]")?;
            self.nesting -= 1;
            expr = Expr::new(
                ExprKind::Index {
                    vector: Box::new(expr),
                    index: Box::new(index),
                },
                Span::new(open.line, open.col),
            );
        }
        Ok(expr)
    }

    fn primary(&mut self) -> PResult<Expr> {
        const EXPECTED: [&str; 6] = [
            "integer",
            "identifier",
            "`(`",
            "`-`",
            "`if`",
            "builtin call",
        ];
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error(EXPECTED));
        };
        let span = Span::new(tok.line, tok.col);
        match (tok.kind, tok.lexeme.as_str()) {
            (TokenKind::IntegerLiteral, digits) => {
                let value = digits
                    .parse::<i64>()
                    .map_err(|_| self.error(["integer literal within 64-bit range"]))?;
                self.bump();
                Ok(Expr::new(ExprKind::Int(value), span))
            }
            (TokenKind::Identifier, name) => {
                let name = name.to_string();
                self.bump();
                Ok(Expr::new(ExprKind::Var(name), span))
            }
            (TokenKind::Keyword, "true" | "false") => {
                self.bump();
                Ok(Expr::new(ExprKind::Bool(tok.lexeme == "true"), span))
            }
            (TokenKind::Keyword, "len" | "range") => {
                self.bump();
                let builtin = if tok.lexeme == "len" {
                    Builtin::Len
                } else {
                    Builtin::Range
                };
                self.expect(TokenKind::Punctuation, "(")?;
                self.nesting += 1;
                let arg = self.expr()?;
                self.expect(TokenKind::Punctuation, ")")?;
                self.nesting -= 1;
                Ok(Expr::new(
                    ExprKind::Call {
                        builtin,
                        arg: Box::new(arg),
                    },
                    span,
                ))
            }
            (TokenKind::Keyword, "if") => {
                self.bump();
                self.nesting += 1;
                let cond = self.expr()?;
                let then = self.branch()?;
                self.expect(TokenKind::Keyword, "else")?;
                let otherwise = self.branch()?;
                self.nesting -= 1;
                Ok(Expr::new(
                    ExprKind::IfElse {
                        cond: Box::new(cond),
                        then: Box::new(then),
                        otherwise: Box::new(otherwise),
                    },
                    span,
                ))
            }
            (TokenKind::Punctuation, "(") => {
                self.bump();
                self.nesting += 1;
                let inner = self.expr()?;
                self.expect(TokenKind::Punctuation, ")")?;
                self.nesting -= 1;
                Ok(inner)
            }
            _ => Err(self.error(EXPECTED)),
        }
    }

    /// `{ expr }`: exactly one expression per if-else branch.
    fn branch(&mut self) -> PResult<Expr> {
        self.expect(TokenKind::Punctuation, "{")?;
        let value = self.expr()?;
        self.expect(TokenKind::Punctuation, "}")?;
        Ok(value)
    }
}
