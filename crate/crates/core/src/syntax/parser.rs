//! Recursive-descent parser for the class/field/method skeleton of a
//! Java-like compilation unit.
//!
//! Package and import lines are skipped. Annotations, type parameters,
//! `extends`/`implements`/`throws` clauses, initializer blocks and nested
//! enum/record/annotation declarations are consumed but not modeled. Method
//! bodies are captured as balanced token runs and fingerprinted.

use std::collections::{BTreeSet, HashSet};

use thiserror::Error;

use super::fingerprint::body_fingerprint;
use super::lexer::{tokenize, LexError, Token, TokenKind};
use super::span::{position_of, Span};
use super::tree::{Accessibility, ClassDecl, ElementTree, FieldDecl, MethodDecl, ParamDecl};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at {}:{}", span.start_line, span.start_col)]
pub struct ParseError {
    pub message: String,
    pub span: Span,
}

impl From<LexError> for ParseError {
    fn from(e: LexError) -> Self {
        ParseError { message: e.message, span: e.span }
    }
}

const NON_ACCESS_MODIFIERS: &[&str] = &[
    "static", "final", "abstract", "native", "synchronized", "transient", "volatile", "strictfp",
    "default",
];

const PRIMITIVES: &[&str] = &["boolean", "byte", "char", "short", "int", "long", "float", "double", "void"];

pub fn parse_unit(source: &str, file_path: &str) -> Result<ElementTree, ParseError> {
    let tokens = tokenize(source)?;
    let eof = Span::point(position_of(source, source.len()));
    let mut parser = Parser { tokens: &tokens, pos: 0, eof };
    let classes = parser.compilation_unit()?;
    Ok(ElementTree { file_path: file_path.to_string(), classes })
}

struct Modifiers {
    accessibility: Accessibility,
    set: BTreeSet<String>,
    span: Option<Span>,
    /// First token of the declaration, annotations included.
    start: Option<Span>,
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    eof: Span,
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos)
    }

    fn nth(&self, n: usize) -> Option<&'t Token> {
        self.tokens.get(self.pos + n)
    }

    fn at(&self, text: &str) -> bool {
        self.peek().is_some_and(|t| t.is(text))
    }

    fn nth_is(&self, n: usize, text: &str) -> bool {
        self.nth(n).is_some_and(|t| t.is(text))
    }

    fn current_span(&self) -> Span {
        self.peek().map_or(self.eof, |t| t.span)
    }

    fn prev_span(&self) -> Span {
        self.tokens[self.pos - 1].span
    }

    fn error(&self, expected: &str) -> ParseError {
        let found = self.peek().map_or_else(|| "end of file".to_string(), |t| format!("'{}'", t.text));
        ParseError { message: format!("expected {expected}, found {found}"), span: self.current_span() }
    }

    fn bump(&mut self) -> &'t Token {
        let tok = &self.tokens[self.pos];
        self.pos += 1;
        tok
    }

    fn expect(&mut self, text: &str) -> Result<&'t Token, ParseError> {
        if self.at(text) {
            Ok(self.bump())
        } else {
            Err(self.error(&format!("'{text}'")))
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<&'t Token, ParseError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => Ok(self.bump()),
            _ => Err(self.error(what)),
        }
    }

    fn skip_until_semicolon(&mut self) -> Result<(), ParseError> {
        while !self.at(";") {
            if self.peek().is_none() {
                return Err(self.error("';'"));
            }
            self.bump();
        }
        self.bump();
        Ok(())
    }

    /// Consumes a balanced `open ... close` run starting at the current token
    /// and returns the index range of the consumed tokens.
    /// Skips a bracketed run starting at `open`. Round, square and curly
    /// brackets inside it must nest properly.
    fn skip_balanced(&mut self, open: &str, close: &str) -> Result<std::ops::Range<usize>, ParseError> {
        let start = self.pos;
        self.expect(open)?;
        let mut stack = vec![close];
        while let Some(&expected) = stack.last() {
            let Some(t) = self.peek() else {
                return Err(self.error(&format!("'{expected}'")));
            };
            match t.text.as_str() {
                c if c == expected => {
                    stack.pop();
                }
                c if c == open => stack.push(close),
                "(" => stack.push(")"),
                "[" => stack.push("]"),
                "{" => stack.push("}"),
                ")" | "]" | "}" => return Err(self.error(&format!("'{expected}'"))),
                _ => {}
            }
            self.bump();
        }
        Ok(start..self.pos)
    }

    fn compilation_unit(&mut self) -> Result<Vec<ClassDecl>, ParseError> {
        if self.at("package") {
            self.skip_until_semicolon()?;
        }
        while self.at("import") {
            self.skip_until_semicolon()?;
        }
        let mut classes = Vec::new();
        while self.peek().is_some() {
            if self.at(";") {
                self.bump();
                continue;
            }
            let mods = self.modifiers()?;
            if let Some(class) = self.type_declaration(mods)? {
                classes.push(class);
            }
        }
        check_unique(classes.iter().map(|c| (("class", c.name.clone(), 0), c.name_span)))?;
        Ok(classes)
    }

    fn annotation(&mut self) -> Result<(), ParseError> {
        self.expect("@")?;
        self.expect_ident("annotation name")?;
        while self.at(".") {
            self.bump();
            self.expect_ident("annotation name")?;
        }
        if self.at("(") {
            self.skip_balanced("(", ")")?;
        }
        Ok(())
    }

    fn modifiers(&mut self) -> Result<Modifiers, ParseError> {
        let mut mods = Modifiers { accessibility: Accessibility::PackagePrivate, set: BTreeSet::new(), span: None, start: None };
        let mut access_seen = false;
        loop {
            let Some(tok) = self.peek() else { break };
            if tok.is("@") && !self.nth_is(1, "interface") {
                mods.start.get_or_insert(tok.span);
                self.annotation()?;
                continue;
            }
            if let Some(access) = Accessibility::from_keyword(&tok.text) {
                if access_seen {
                    return Err(ParseError { message: "conflicting access modifiers".into(), span: tok.span });
                }
                access_seen = true;
                mods.accessibility = access;
            } else if NON_ACCESS_MODIFIERS.contains(&tok.text.as_str()) {
                // `static {` opens an initializer, not a modifier list.
                if tok.is("static") && self.nth_is(1, "{") {
                    break;
                }
                mods.set.insert(tok.text.clone());
            } else {
                break;
            }
            mods.start.get_or_insert(tok.span);
            mods.span = Some(mods.span.map_or(tok.span, |s| s.cover(&tok.span)));
            self.bump();
        }
        Ok(mods)
    }

    /// Parses a class or interface, or skips an enum/record/annotation type.
    fn type_declaration(&mut self, mods: Modifiers) -> Result<Option<ClassDecl>, ParseError> {
        let head = self.current_span();
        if self.at("@") && self.nth_is(1, "interface") {
            self.bump();
            self.bump();
            self.expect_ident("annotation type name")?;
            self.skip_balanced("{", "}")?;
            return Ok(None);
        }
        if self.at("enum") || (self.at("record") && self.nth(1).is_some_and(|t| t.kind == TokenKind::Identifier)) {
            self.bump();
            self.expect_ident("type name")?;
            while !self.at("{") {
                if self.peek().is_none() {
                    return Err(self.error("'{'"));
                }
                if self.at("(") {
                    self.skip_balanced("(", ")")?;
                } else {
                    self.bump();
                }
            }
            self.skip_balanced("{", "}")?;
            return Ok(None);
        }
        let is_interface = if self.at("class") {
            false
        } else if self.at("interface") {
            true
        } else {
            return Err(self.error("class or interface declaration"));
        };
        self.bump();
        let name = self.expect_ident("class name")?;
        if self.at("<") {
            self.skip_balanced("<", ">")?;
        }
        // extends / implements / permits: consumed, not modeled.
        while !self.at("{") {
            if self.peek().is_none() {
                return Err(self.error("'{'"));
            }
            self.bump();
        }
        self.bump();

        let mut class = ClassDecl {
            name: name.text.clone(),
            name_span: name.span,
            is_interface,
            accessibility: mods.accessibility,
            modifiers: mods.set,
            modifiers_span: mods.span,
            span: mods.start.unwrap_or(head),
            fields: Vec::new(),
            methods: Vec::new(),
            classes: Vec::new(),
        };
        self.class_body(&mut class)?;
        class.span = class.span.cover(&self.prev_span());
        Ok(Some(class))
    }

    fn class_body(&mut self, class: &mut ClassDecl) -> Result<(), ParseError> {
        loop {
            match self.peek() {
                None => return Err(self.error("'}'")),
                Some(t) if t.is("}") => {
                    self.bump();
                    break;
                }
                Some(t) if t.is(";") => {
                    self.bump();
                }
                Some(t) if t.is("{") => {
                    self.skip_balanced("{", "}")?;
                }
                Some(t) if t.is("static") && self.nth_is(1, "{") => {
                    self.bump();
                    self.skip_balanced("{", "}")?;
                }
                Some(_) => self.member(class)?,
            }
        }

        check_unique(
            class
                .fields
                .iter()
                .map(|f| (("field", f.name.clone(), 0), f.name_span))
                .chain(class.methods.iter().map(|m| (("method", m.name.clone(), m.arity()), m.name_span)))
                .chain(class.classes.iter().map(|c| (("class", c.name.clone(), 0), c.name_span))),
        )
    }

    fn member(&mut self, class: &mut ClassDecl) -> Result<(), ParseError> {
        let head = self.current_span();
        let mods = self.modifiers()?;
        let start = mods.start.unwrap_or(head);

        if self.at("class")
            || self.at("interface")
            || self.at("enum")
            || (self.at("@") && self.nth_is(1, "interface"))
            || (self.at("record") && self.nth(1).is_some_and(|t| t.kind == TokenKind::Identifier) && self.nth_is(2, "("))
        {
            if let Some(nested) = self.type_declaration(mods)? {
                class.classes.push(nested);
            }
            return Ok(());
        }

        if self.at("<") {
            self.skip_balanced("<", ">")?;
        }

        // Constructor: Identifier '('
        if self.peek().is_some_and(|t| t.kind == TokenKind::Identifier) && self.nth_is(1, "(") {
            let name = self.bump();
            let method = self.method_rest(mods, start, None, name)?;
            class.methods.push(method);
            return Ok(());
        }

        let (type_text, type_span) = self.type_ref("member type")?;
        let name = self.expect_ident("member name")?;
        if self.at("(") {
            let method = self.method_rest(mods, start, Some((type_text, type_span)), name)?;
            class.methods.push(method);
            return Ok(());
        }
        if type_text == "void" {
            return Err(ParseError { message: "field cannot have type void".into(), span: type_span });
        }
        self.field_declarators(class, mods, start, type_text, type_span, name)
    }

    fn method_rest(
        &mut self,
        mods: Modifiers,
        start: Span,
        return_type: Option<(String, Span)>,
        name: &Token,
    ) -> Result<MethodDecl, ParseError> {
        let (params, params_span) = self.parameters()?;
        while self.at("[") && self.nth_is(1, "]") {
            self.bump();
            self.bump();
        }
        if self.at("throws") {
            self.bump();
            self.type_ref("exception type")?;
            while self.at(",") {
                self.bump();
                self.type_ref("exception type")?;
            }
        }
        let (body_fingerprint, body_span) = if self.at("{") {
            let range = self.skip_balanced("{", "}")?;
            let body = &self.tokens[range];
            let span = body[0].span.cover(&body[body.len() - 1].span);
            (Some(body_fingerprint(body)), Some(span))
        } else if self.at("default") {
            self.skip_until_semicolon()?;
            (None, None)
        } else {
            self.expect(";").map_err(|_| self.error("method body or ';'"))?;
            (None, None)
        };
        let (return_type, return_type_span) = match return_type {
            Some((t, s)) => (Some(t), Some(s)),
            None => (None, None),
        };
        Ok(MethodDecl {
            accessibility: mods.accessibility,
            modifiers: mods.set,
            modifiers_span: mods.span,
            return_type,
            return_type_span,
            name: name.text.clone(),
            name_span: name.span,
            params,
            params_span,
            body_fingerprint,
            body_span,
            span: start.cover(&self.prev_span()),
        })
    }

    fn parameters(&mut self) -> Result<(Vec<ParamDecl>, Span), ParseError> {
        let open = self.expect("(")?.span;
        let mut params = Vec::new();
        if !self.at(")") {
            loop {
                params.push(self.parameter()?);
                if self.at(",") {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        let close = self.expect(")").map_err(|_| self.error("',' or ')'"))?.span;
        check_unique(params.iter().map(|p| (("param", p.name.clone(), 0), p.name_span)))?;
        Ok((params, open.cover(&close)))
    }

    fn parameter(&mut self) -> Result<ParamDecl, ParseError> {
        let start = self.current_span();
        loop {
            if self.at("@") {
                self.annotation()?;
            } else if self.at("final") {
                self.bump();
            } else {
                break;
            }
        }
        let (mut type_text, mut type_span) = self.type_ref("parameter type")?;
        let name = self.expect_ident("parameter name")?;
        while self.at("[") && self.nth_is(1, "]") {
            self.bump();
            let close = self.bump();
            type_text.push_str(" [ ]");
            type_span = type_span.cover(&close.span);
        }
        Ok(ParamDecl {
            type_text,
            type_span,
            name: name.text.clone(),
            name_span: name.span,
            span: start.cover(&self.prev_span()),
        })
    }

    /// Type reference: primitive or qualified name with type arguments,
    /// then array dimensions and an optional varargs marker. Returns the
    /// normalized text (tokens joined by single spaces) and its span.
    fn type_ref(&mut self, what: &str) -> Result<(String, Span), ParseError> {
        while self.at("@") {
            self.annotation()?;
        }
        let start = self.pos;
        match self.peek() {
            Some(t) if t.kind == TokenKind::Keyword && PRIMITIVES.contains(&t.text.as_str()) => {
                self.bump();
            }
            Some(t) if t.kind == TokenKind::Identifier => {
                self.bump();
                loop {
                    if self.at("<") {
                        self.type_arguments()?;
                    }
                    if self.at(".") && self.nth(1).is_some_and(|t| t.kind == TokenKind::Identifier) {
                        self.bump();
                        self.bump();
                    } else {
                        break;
                    }
                }
            }
            _ => return Err(self.error(what)),
        }
        while self.at("[") && self.nth_is(1, "]") {
            self.bump();
            self.bump();
        }
        if self.at("...") {
            self.bump();
        }
        let toks = &self.tokens[start..self.pos];
        let text = toks.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" ");
        Ok((text, toks[0].span.cover(&toks[toks.len() - 1].span)))
    }

    fn type_arguments(&mut self) -> Result<(), ParseError> {
        self.expect("<")?;
        if self.at(">") {
            self.bump();
            return Ok(());
        }
        loop {
            if self.at("?") {
                self.bump();
                if self.at("extends") || self.at("super") {
                    self.bump();
                    self.type_ref("type argument")?;
                }
            } else {
                self.type_ref("type argument")?;
            }
            if self.at(",") {
                self.bump();
            } else {
                break;
            }
        }
        self.expect(">").map_err(|_| self.error("',' or '>'"))?;
        Ok(())
    }

    fn field_declarators(
        &mut self,
        class: &mut ClassDecl,
        mods: Modifiers,
        start: Span,
        type_text: String,
        type_span: Span,
        first_name: &Token,
    ) -> Result<(), ParseError> {
        let mut pending = Vec::new();
        let mut name = first_name;
        loop {
            let mut decl_type = type_text.clone();
            let mut decl_type_span = type_span;
            while self.at("[") && self.nth_is(1, "]") {
                self.bump();
                let close = self.bump();
                decl_type.push_str(" [ ]");
                decl_type_span = decl_type_span.cover(&close.span);
            }
            let (initializer, initializer_span) = if self.at("=") {
                self.bump();
                let (text, span) = self.initializer()?;
                (Some(text), Some(span))
            } else {
                (None, None)
            };
            pending.push((decl_type, decl_type_span, name, initializer, initializer_span));
            if self.at(",") {
                self.bump();
                name = self.expect_ident("field name")?;
            } else {
                self.expect(";").map_err(|_| self.error("'=', ',' or ';'"))?;
                break;
            }
        }
        let span = start.cover(&self.prev_span());
        for (type_text, type_span, name, initializer, initializer_span) in pending {
            class.fields.push(FieldDecl {
                accessibility: mods.accessibility,
                modifiers: mods.set.clone(),
                modifiers_span: mods.span,
                type_text,
                type_span,
                name: name.text.clone(),
                name_span: name.span,
                initializer,
                initializer_span,
                span,
            });
        }
        Ok(())
    }

    /// Initializer expression up to `;`, or up to a `,` that starts the next
    /// declarator (`, name =`, `, name ,`, `, name ;`, `, name [`).
    fn initializer(&mut self) -> Result<(String, Span), ParseError> {
        let start = self.pos;
        let mut depth = 0usize;
        loop {
            let Some(tok) = self.peek() else { return Err(self.error("';'")) };
            match tok.text.as_str() {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => {
                    if depth == 0 {
                        return Err(self.error("';'"));
                    }
                    depth -= 1;
                }
                ";" if depth == 0 => break,
                "," if depth == 0 => {
                    let next_declarator = self.nth(1).is_some_and(|t| t.kind == TokenKind::Identifier)
                        && self.nth(2).is_some_and(|t| ["=", ",", ";", "["].contains(&t.text.as_str()));
                    if next_declarator {
                        break;
                    }
                }
                _ => {}
            }
            self.bump();
        }
        if self.pos == start {
            return Err(self.error("initializer expression"));
        }
        let toks = &self.tokens[start..self.pos];
        let text = toks.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" ");
        Ok((text, toks[0].span.cover(&toks[toks.len() - 1].span)))
    }
}

fn check_unique<K>(items: impl Iterator<Item = (K, Span)>) -> Result<(), ParseError>
where
    K: std::hash::Hash + Eq + std::fmt::Debug,
{
    let mut seen = HashSet::new();
    for (key, span) in items {
        if !seen.insert(key) {
            return Err(ParseError { message: "duplicate member declaration".into(), span });
        }
    }
    Ok(())
}
