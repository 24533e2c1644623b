//! Tokenizing and parsing of the Java-like source subset into an
//! [`ElementTree`]. A successful parse is what makes a file state
//! error-free.

mod fingerprint;
mod lexer;
mod parser;
mod span;
mod tree;

pub use fingerprint::body_fingerprint;
pub use lexer::{tokenize, LexError, Token, TokenKind};
pub use parser::{parse_unit, ParseError};
pub use span::{position_of, Position, Span};
pub use tree::{Accessibility, ClassDecl, ElementTree, FieldDecl, Fingerprint, MethodDecl, ParamDecl};

/// Canonical JSON for an element tree (stable key order, pretty-printed).
pub fn tree_to_json(tree: &ElementTree) -> String {
    serde_json::to_string_pretty(tree).expect("element trees always serialize")
}
