//! Surface syntax: tokens, the unified AST, the parser and the canonical
//! pretty-printer.
//!
//! Statements are `name = expr` and `for name in expr { ... }`, one per line.
//! Expressions cover integer arithmetic, comparisons, indexing, the `len` and
//! `range` builtins and single-expression `if c { a } else { b }`.

mod ast;
mod lexer;
mod parser;
mod printer;

pub use ast::*;
pub use lexer::{is_identifier, is_keyword, tokenize, LexError, Token, TokenKind, KEYWORDS};
pub use parser::{parse, ParseError, SyntaxError};
pub use printer::{pretty_print, print_expr};
