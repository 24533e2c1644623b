use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::span::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Accessibility {
    Public,
    Protected,
    Private,
    #[default]
    PackagePrivate,
}

impl Accessibility {
    pub fn keyword(self) -> &'static str {
        match self {
            Accessibility::Public => "public",
            Accessibility::Protected => "protected",
            Accessibility::Private => "private",
            Accessibility::PackagePrivate => "package-private",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        match word {
            "public" => Some(Accessibility::Public),
            "protected" => Some(Accessibility::Protected),
            "private" => Some(Accessibility::Private),
            _ => None,
        }
    }
}

impl fmt::Display for Accessibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// FNV-1a 64 digest of a method body's token stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fingerprint(pub u64);

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{:016x}", self.0)
    }
}

impl std::str::FromStr for Fingerprint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let hex = s.strip_prefix("0x").ok_or_else(|| format!("fingerprint {s:?} lacks 0x prefix"))?;
        u64::from_str_radix(hex, 16).map(Fingerprint).map_err(|e| e.to_string())
    }
}

// Hex strings survive JSON consumers that only have 53-bit integers.
impl Serialize for Fingerprint {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Fingerprint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parsed semantic structure of one source file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ElementTree {
    pub file_path: String,
    pub classes: Vec<ClassDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClassDecl {
    pub name: String,
    pub name_span: Span,
    pub is_interface: bool,
    pub accessibility: Accessibility,
    pub modifiers: BTreeSet<String>,
    pub modifiers_span: Option<Span>,
    pub span: Span,
    pub fields: Vec<FieldDecl>,
    pub methods: Vec<MethodDecl>,
    pub classes: Vec<ClassDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FieldDecl {
    pub accessibility: Accessibility,
    pub modifiers: BTreeSet<String>,
    pub modifiers_span: Option<Span>,
    pub type_text: String,
    pub type_span: Span,
    pub name: String,
    pub name_span: Span,
    pub initializer: Option<String>,
    pub initializer_span: Option<Span>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MethodDecl {
    pub accessibility: Accessibility,
    pub modifiers: BTreeSet<String>,
    pub modifiers_span: Option<Span>,
    /// Absent for constructors.
    pub return_type: Option<String>,
    pub return_type_span: Option<Span>,
    pub name: String,
    pub name_span: Span,
    pub params: Vec<ParamDecl>,
    pub params_span: Span,
    /// Absent when the method has no body (`;`).
    pub body_fingerprint: Option<Fingerprint>,
    pub body_span: Option<Span>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ParamDecl {
    pub type_text: String,
    pub type_span: Span,
    pub name: String,
    pub name_span: Span,
    pub span: Span,
}

impl MethodDecl {
    pub fn arity(&self) -> usize {
        self.params.len()
    }

    pub fn is_constructor(&self) -> bool {
        self.return_type.is_none()
    }

    pub fn param_types(&self) -> impl Iterator<Item = &str> {
        self.params.iter().map(|p| p.type_text.as_str())
    }
}

impl ElementTree {
    pub fn empty(file_path: impl Into<String>) -> Self {
        ElementTree { file_path: file_path.into(), classes: Vec::new() }
    }

    /// Looks up a (possibly nested) class by its chain of names.
    pub fn class(&self, chain: &[String]) -> Option<&ClassDecl> {
        let (first, rest) = chain.split_first()?;
        let mut class = self.classes.iter().find(|c| &c.name == first)?;
        for name in rest {
            class = class.classes.iter().find(|c| &c.name == name)?;
        }
        Some(class)
    }

    /// Copy of the tree with every span zeroed, for structural comparison.
    pub fn without_spans(&self) -> ElementTree {
        let mut tree = self.clone();
        for class in &mut tree.classes {
            class.clear_spans();
        }
        tree
    }
}

impl ClassDecl {
    pub fn field(&self, name: &str) -> Option<&FieldDecl> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn method(&self, name: &str, arity: usize) -> Option<&MethodDecl> {
        self.methods.iter().find(|m| m.name == name && m.arity() == arity)
    }

    fn clear_spans(&mut self) {
        let zero = Span::default();
        self.name_span = zero;
        self.modifiers_span = self.modifiers_span.map(|_| zero);
        self.span = zero;
        for f in &mut self.fields {
            f.modifiers_span = f.modifiers_span.map(|_| zero);
            f.type_span = zero;
            f.name_span = zero;
            f.initializer_span = f.initializer_span.map(|_| zero);
            f.span = zero;
        }
        for m in &mut self.methods {
            m.modifiers_span = m.modifiers_span.map(|_| zero);
            m.return_type_span = m.return_type_span.map(|_| zero);
            m.name_span = zero;
            m.params_span = zero;
            m.body_span = m.body_span.map(|_| zero);
            m.span = zero;
            for p in &mut m.params {
                p.type_span = zero;
                p.name_span = zero;
                p.span = zero;
            }
        }
        for c in &mut self.classes {
            c.clear_spans();
        }
    }
}
