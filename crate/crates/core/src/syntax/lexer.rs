//! Tokenizer for the Java-like source subset.
//!
//! Comments and whitespace are dropped. `<` and `>` are always emitted as
//! single-character tokens so that nested generic argument lists such as
//! `Map<String, List<Integer>>` close without token splitting.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::span::{Position, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Identifier,
    Keyword,
    Punctuation,
    Literal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub kind: TokenKind,
    pub span: Span,
}

impl Token {
    pub fn is(&self, text: &str) -> bool {
        self.text == text
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at {}:{}", span.start_line, span.start_col)]
pub struct LexError {
    pub message: String,
    pub span: Span,
}

pub(crate) const KEYWORDS: &[&str] = &[
    "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char", "class", "const",
    "continue", "default", "do", "double", "else", "enum", "extends", "final", "finally", "float",
    "for", "goto", "if", "implements", "import", "instanceof", "int", "interface", "long",
    "native", "new", "package", "private", "protected", "public", "return", "short", "static",
    "strictfp", "super", "switch", "synchronized", "this", "throw", "throws", "transient", "try",
    "void", "volatile", "while",
];

const LITERAL_WORDS: &[&str] = &["true", "false", "null"];

// Longest first within each leading character.
const MULTI_PUNCT: &[&str] = &[
    "...", "->", "::", "==", "!=", "&&", "||", "++", "--", "+=", "-=", "*=", "/=", "%=", "&=",
    "|=", "^=",
];

struct Cursor<'s> {
    src: &'s str,
    pos: Position,
}

impl<'s> Cursor<'s> {
    fn rest(&self) -> &'s str {
        &self.src[self.pos.byte..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.rest().chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let ch = self.peek()?;
        self.pos.byte += ch.len_utf8();
        if ch == '\n' {
            self.pos.line += 1;
            self.pos.col = 1;
        } else {
            self.pos.col += 1;
        }
        Some(ch)
    }

    fn bump_n(&mut self, n: usize) {
        for _ in 0..n {
            self.bump();
        }
    }
}

fn is_ident_start(ch: char) -> bool {
    ch == '_' || ch == '$' || ch.is_alphabetic()
}

fn is_ident_continue(ch: char) -> bool {
    ch == '_' || ch == '$' || ch.is_alphanumeric()
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor { src: source, pos: Position::START };
    let mut tokens = Vec::new();

    while let Some(ch) = cur.peek() {
        let start = cur.pos;
        if ch.is_whitespace() {
            cur.bump();
            continue;
        }
        if ch == '/' && cur.peek2() == Some('/') {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        if ch == '/' && cur.peek2() == Some('*') {
            cur.bump_n(2);
            loop {
                if cur.rest().starts_with("*/") {
                    cur.bump_n(2);
                    break;
                }
                if cur.bump().is_none() {
                    return Err(LexError {
                        message: "unterminated comment".into(),
                        span: Span::new(start, cur.pos),
                    });
                }
            }
            continue;
        }

        let kind = if is_ident_start(ch) {
            while cur.peek().is_some_and(is_ident_continue) {
                cur.bump();
            }
            let word = &source[start.byte..cur.pos.byte];
            if KEYWORDS.contains(&word) {
                TokenKind::Keyword
            } else if LITERAL_WORDS.contains(&word) {
                TokenKind::Literal
            } else {
                TokenKind::Identifier
            }
        } else if ch.is_ascii_digit() || (ch == '.' && cur.peek2().is_some_and(|c| c.is_ascii_digit())) {
            lex_number(&mut cur, start.byte);
            TokenKind::Literal
        } else if ch == '"' {
            if cur.rest().starts_with("\"\"\"") {
                cur.bump_n(3);
                loop {
                    if cur.rest().starts_with("\"\"\"") {
                        cur.bump_n(3);
                        break;
                    }
                    match cur.bump() {
                        Some('\\') => {
                            cur.bump();
                        }
                        Some(_) => {}
                        None => {
                            return Err(LexError {
                                message: "unterminated text block".into(),
                                span: Span::new(start, cur.pos),
                            })
                        }
                    }
                }
            } else {
                lex_quoted(&mut cur, '"', start, "unterminated string literal")?;
            }
            TokenKind::Literal
        } else if ch == '\'' {
            lex_quoted(&mut cur, '\'', start, "unterminated character literal")?;
            TokenKind::Literal
        } else if let Some(op) = MULTI_PUNCT.iter().find(|op| cur.rest().starts_with(**op)) {
            cur.bump_n(op.chars().count());
            TokenKind::Punctuation
        } else if "{}()[];,.@=<>!~?:+-*/&|^%".contains(ch) {
            cur.bump();
            TokenKind::Punctuation
        } else {
            cur.bump();
            return Err(LexError {
                message: format!("unexpected character {ch:?}"),
                span: Span::new(start, cur.pos),
            });
        };

        tokens.push(Token {
            text: source[start.byte..cur.pos.byte].to_string(),
            kind,
            span: Span::new(start, cur.pos),
        });
    }
    Ok(tokens)
}

fn lex_number(cur: &mut Cursor<'_>, start: usize) {
    // Hex, octal, binary, decimal and floating forms; suffixes fold in.
    while let Some(c) = cur.peek() {
        if c.is_ascii_alphanumeric() || c == '_' || (c == '.' && cur.peek2().is_some_and(|d| d.is_ascii_digit())) {
            cur.bump();
        } else if (c == '+' || c == '-')
            && matches!(cur.src[..cur.pos.byte].chars().last(), Some('e' | 'E' | 'p' | 'P'))
            && !cur.src[start..].starts_with("0x")
            && !cur.src[start..].starts_with("0X")
        {
            cur.bump();
        } else {
            break;
        }
    }
}

fn lex_quoted(cur: &mut Cursor<'_>, quote: char, start: Position, message: &str) -> Result<(), LexError> {
    cur.bump();
    loop {
        match cur.peek() {
            Some(c) if c == quote => {
                cur.bump();
                return Ok(());
            }
            Some('\\') => {
                cur.bump();
                if cur.peek().is_some_and(|c| c != '\n') {
                    cur.bump();
                }
            }
            Some('\n') | None => {
                return Err(LexError { message: message.into(), span: Span::new(start, cur.pos) })
            }
            Some(_) => {
                cur.bump();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(src: &str) -> Vec<String> {
        tokenize(src).unwrap().into_iter().map(|t| t.text).collect()
    }

    #[test]
    fn minimal_statement() {
        assert_eq!(texts("int a;"), ["int", "a", ";"]);
    }

    #[test]
    fn comments_are_dropped() {
        assert_eq!(texts("int a; // note"), ["int", "a", ";"]);
        assert_eq!(texts("int /* x */ a;"), ["int", "a", ";"]);
    }

    #[test]
    fn unterminated_string_reports_offset_zero() {
        let err = tokenize("\"unterminated").unwrap_err();
        assert_eq!(err.span.start_byte, 0);
        assert!(err.message.contains("string"));
    }

    #[test]
    fn unterminated_comment() {
        let err = tokenize("int a; /* open").unwrap_err();
        assert_eq!(err.span.start_byte, 7);
    }

    #[test]
    fn kinds() {
        let toks = tokenize("public int x = 0x1F + 'c' + \"s\\\"t\" + true;").unwrap();
        let kinds: Vec<_> = toks.iter().map(|t| t.kind).collect();
        use TokenKind::*;
        assert_eq!(
            kinds,
            [Keyword, Keyword, Identifier, Punctuation, Literal, Punctuation, Literal, Punctuation, Literal, Punctuation, Literal, Punctuation]
        );
    }

    #[test]
    fn generics_close_as_single_angles() {
        assert_eq!(texts("Map<K,List<V>>"), ["Map", "<", "K", ",", "List", "<", "V", ">", ">"]);
    }

    #[test]
    fn spans_track_lines_and_columns() {
        let toks = tokenize("a\n  bb").unwrap();
        assert_eq!((toks[1].span.start_line, toks[1].span.start_col), (2, 3));
        assert_eq!((toks[1].span.end_line, toks[1].span.end_col), (2, 5));
        assert_eq!(toks[1].span.start_byte, 4);
    }

    #[test]
    fn floats_and_exponents() {
        assert_eq!(texts("1.5e-3f+2"), ["1.5e-3f", "+", "2"]);
        assert_eq!(texts("a.b"), ["a", ".", "b"]);
        assert_eq!(texts("arr[0].length"), ["arr", "[", "0", "]", ".", "length"]);
        assert_eq!(texts("String... args"), ["String", "...", "args"]);
    }

    #[test]
    fn text_block() {
        assert_eq!(texts("s = \"\"\"\n x \"\"\";"), ["s", "=", "\"\"\"\n x \"\"\"", ";"]);
    }
}
