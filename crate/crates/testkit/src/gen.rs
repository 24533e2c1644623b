//! Random class models, a printer to source text, and single-attribute
//! mutations that each correspond to exactly one change kind.

use conflict_radar_core::model::{ChangeKind, SemanticPath};
use conflict_radar_core::syntax::Accessibility;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS: &[&str] = &["count", "name", "size", "total", "owner", "limit", "label", "speed", "color", "weight"];
const VERBS: &[&str] = &["get", "set", "update", "compute", "reset", "find", "apply", "check", "load", "store"];
const TYPES: &[&str] = &[
    "int",
    "long",
    "boolean",
    "double",
    "String",
    "char",
    "int[]",
    "List<String>",
    "Map<String, Integer>",
    "Optional<Zebra>",
];
const INITS: &[&str] = &["0", "1", "42", "-7", "\"x\"", "null", "true", "new ArrayList<>()", "a + b * 2", "'c'", "3.5"];
const STATEMENTS: &[&str] = &[
    "int x = 1;",
    "return;",
    "foo(a, b);",
    "if (x > 0) { y++; }",
    "list.add(\"s\");",
    "for (int i = 0; i < n; i++) { sum += i; }",
    "counter = counter + 1;",
    "System.out.println(\"hi\");",
];
const FIELD_MODIFIERS: &[&str] = &["static", "final", "transient", "volatile"];
const METHOD_MODIFIERS: &[&str] = &["static", "final", "synchronized"];
const ACCESS: [Accessibility; 4] =
    [Accessibility::Public, Accessibility::Protected, Accessibility::Private, Accessibility::PackagePrivate];

#[derive(Debug, Clone, PartialEq)]
pub struct FieldModel {
    pub access: Accessibility,
    pub modifiers: Vec<String>,
    pub ty: String,
    pub name: String,
    pub init: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamModel {
    pub ty: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodModel {
    pub access: Accessibility,
    pub modifiers: Vec<String>,
    /// `None` for constructors.
    pub ret: Option<String>,
    pub name: String,
    pub params: Vec<ParamModel>,
    /// `None` for a body-less declaration ending in `;`.
    pub body: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassModel {
    pub access: Accessibility,
    pub is_static: bool,
    pub name: String,
    pub fields: Vec<FieldModel>,
    pub methods: Vec<MethodModel>,
    pub classes: Vec<ClassModel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitModel {
    pub file: String,
    pub classes: Vec<ClassModel>,
    next_id: u32,
}

impl UnitModel {
    fn fresh(&mut self, stem: &str) -> String {
        self.next_id += 1;
        format!("{stem}{}", self.next_id)
    }

    /// Class chains of every class, outermost first.
    pub fn chains(&self) -> Vec<Vec<String>> {
        fn walk(classes: &[ClassModel], prefix: &[String], out: &mut Vec<Vec<String>>) {
            for c in classes {
                let mut chain = prefix.to_vec();
                chain.push(c.name.clone());
                out.push(chain.clone());
                walk(&c.classes, &chain, out);
            }
        }
        let mut out = Vec::new();
        walk(&self.classes, &[], &mut out);
        out
    }

    pub fn class_mut(&mut self, chain: &[String]) -> &mut ClassModel {
        let mut list = &mut self.classes;
        let (last, init) = chain.split_last().expect("non-empty chain");
        for name in init {
            list = &mut list.iter_mut().find(|c| &c.name == name).expect("chain exists").classes;
        }
        list.iter_mut().find(|c| &c.name == last).expect("chain exists")
    }

    pub fn render(&self) -> String {
        let mut w = Writer { out: String::new(), noise: None };
        w.unit(self);
        w.out
    }

    /// Same unit with random whitespace and comments between tokens.
    pub fn render_noisy(&self, rng: &mut impl Rng) -> String {
        let seed = rng.gen();
        let mut w = Writer { out: String::new(), noise: Some(ChaCha8Rng::seed_from_u64(seed)) };
        w.unit(self);
        w.out
    }
}

struct Writer {
    out: String,
    noise: Option<ChaCha8Rng>,
}

impl Writer {
    fn gap(&mut self) {
        let Some(rng) = self.noise.as_mut() else {
            if !self.out.is_empty() && !self.out.ends_with('\n') {
                self.out.push(' ');
            }
            return;
        };
        let gap = match rng.gen_range(0..8) {
            0 => "  ",
            1 => "\n\t",
            2 => " /* note */ ",
            3 => " // trailing\n",
            4 => "\r\n",
            _ => " ",
        };
        self.out.push_str(gap);
    }

    fn tok(&mut self, text: &str) {
        self.gap();
        self.out.push_str(text);
    }

    fn line(&mut self) {
        self.out.push('\n');
    }

    fn unit(&mut self, unit: &UnitModel) {
        self.tok("package demo;");
        self.line();
        self.tok("import java.util.*;");
        self.line();
        for c in &unit.classes {
            self.class(c);
        }
    }

    fn access(&mut self, access: Accessibility) {
        if access != Accessibility::PackagePrivate {
            self.tok(access.keyword());
        }
    }

    fn class(&mut self, c: &ClassModel) {
        self.access(c.access);
        if c.is_static {
            self.tok("static");
        }
        self.tok("class");
        self.tok(&c.name);
        self.tok("{");
        self.line();
        for f in &c.fields {
            self.access(f.access);
            for m in &f.modifiers {
                self.tok(m);
            }
            self.tok(&f.ty);
            self.tok(&f.name);
            if let Some(init) = &f.init {
                self.tok("=");
                self.tok(init);
            }
            self.tok(";");
            self.line();
        }
        for m in &c.methods {
            self.access(m.access);
            for modifier in &m.modifiers {
                self.tok(modifier);
            }
            if let Some(ret) = &m.ret {
                self.tok(ret);
            }
            self.tok(&m.name);
            self.tok("(");
            for (i, p) in m.params.iter().enumerate() {
                if i > 0 {
                    self.tok(",");
                }
                self.tok(&p.ty);
                self.tok(&p.name);
            }
            self.tok(")");
            match &m.body {
                None => self.tok(";"),
                Some(stmts) => {
                    self.tok("{");
                    for s in stmts {
                        self.tok(s);
                    }
                    self.tok("}");
                }
            }
            self.line();
        }
        for nested in &c.classes {
            self.class(nested);
        }
        self.tok("}");
        self.line();
    }
}

/// Size knobs for [`random_unit`].
#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub max_classes: usize,
    pub max_fields: usize,
    pub max_methods: usize,
    pub max_params: usize,
    pub max_depth: usize,
}

impl Default for Shape {
    fn default() -> Self {
        Shape { max_classes: 2, max_fields: 4, max_methods: 4, max_params: 3, max_depth: 2 }
    }
}

pub fn random_unit(rng: &mut impl Rng, file: &str, shape: Shape) -> UnitModel {
    let mut unit = UnitModel { file: file.to_string(), classes: Vec::new(), next_id: 0 };
    let n = rng.gen_range(0..=shape.max_classes);
    for _ in 0..n {
        let class = random_class(rng, &mut unit, shape, 0);
        unit.classes.push(class);
    }
    unit
}

fn pick<'a>(rng: &mut impl Rng, items: &[&'a str]) -> &'a str {
    items.choose(rng).copied().expect("non-empty pool")
}

fn pick_modifiers(rng: &mut impl Rng, pool: &[&str]) -> Vec<String> {
    pool.iter().filter(|_| rng.gen_bool(0.2)).map(|m| m.to_string()).collect()
}

fn random_class(rng: &mut impl Rng, unit: &mut UnitModel, shape: Shape, depth: usize) -> ClassModel {
    let name = unit.fresh(if depth == 0 { "Zebra" } else { "Inner" });
    let mut fields = Vec::new();
    for _ in 0..rng.gen_range(0..=shape.max_fields) {
        let fname = unit.fresh(pick(rng, WORDS));
        fields.push(FieldModel {
            access: *ACCESS.choose(rng).unwrap(),
            modifiers: pick_modifiers(rng, FIELD_MODIFIERS),
            ty: pick(rng, TYPES).to_string(),
            name: fname,
            init: rng.gen_bool(0.5).then(|| pick(rng, INITS).to_string()),
        });
    }
    let mut methods = Vec::new();
    for _ in 0..rng.gen_range(0..=shape.max_methods) {
        let constructor = rng.gen_bool(0.1);
        let mname = if constructor { name.clone() } else { unit.fresh(pick(rng, VERBS)) };
        let arity = rng.gen_range(0..=shape.max_params);
        if constructor && methods.iter().any(|m: &MethodModel| m.name == mname && m.params.len() == arity) {
            continue;
        }
        let params = (0..arity).map(|_| ParamModel { ty: pick(rng, TYPES).to_string(), name: unit.fresh("p") }).collect();
        let body = (!rng.gen_bool(0.1) || constructor)
            .then(|| (0..rng.gen_range(0..3)).map(|_| pick(rng, STATEMENTS).to_string()).collect());
        methods.push(MethodModel {
            access: *ACCESS.choose(rng).unwrap(),
            modifiers: pick_modifiers(rng, METHOD_MODIFIERS),
            ret: (!constructor).then(|| if rng.gen_bool(0.3) { "void".to_string() } else { pick(rng, TYPES).to_string() }),
            name: mname,
            params,
            body,
        });
    }
    let mut classes = Vec::new();
    if depth < shape.max_depth && rng.gen_bool(0.3) {
        classes.push(random_class(rng, unit, shape, depth + 1));
    }
    ClassModel {
        access: *ACCESS.choose(rng).unwrap(),
        is_static: depth > 0 && rng.gen_bool(0.5),
        name,
        fields,
        methods,
        classes,
    }
}

/// Where a mutation landed, as the path the resulting change is keyed by.
#[derive(Debug, Clone, PartialEq)]
pub struct Mutation {
    pub kind: ChangeKind,
    pub path: SemanticPath,
    /// The element's path after the edit; differs from `path` for renames
    /// and arity changes.
    pub new_path: SemanticPath,
}

impl Mutation {
    fn at(kind: ChangeKind, path: SemanticPath) -> Option<Mutation> {
        Some(Mutation { kind, new_path: path.clone(), path })
    }
}

fn class_path(project: &str, file: &str, chain: &[String]) -> SemanticPath {
    let refs: Vec<&str> = chain.iter().map(String::as_str).collect();
    SemanticPath::class(project, file, &refs)
}

fn other<T: Copy + PartialEq>(rng: &mut impl Rng, pool: &[T], current: T) -> T {
    let choices: Vec<T> = pool.iter().copied().filter(|x| *x != current).collect();
    *choices.choose(rng).expect("pool has alternatives")
}

fn other_str(rng: &mut impl Rng, pool: &[&str], current: &str) -> String {
    let choices: Vec<&str> = pool.iter().copied().filter(|x| *x != current).collect();
    choices.choose(rng).expect("pool has alternatives").to_string()
}

/// Applies one random edit that yields exactly one change of `kind`.
/// Returns `None` when the unit has no element the edit could apply to.
pub fn mutate(unit: &mut UnitModel, kind: ChangeKind, project: &str, rng: &mut impl Rng) -> Option<Mutation> {
    use ChangeKind::*;
    let file = unit.file.clone();
    let chains = unit.chains();

    // Candidate (chain, member index[, param index]) triples.
    let mut fields = Vec::new();
    let mut methods = Vec::new();
    let mut params = Vec::new();
    for chain in &chains {
        let c = unit.class_mut(chain);
        for i in 0..c.fields.len() {
            fields.push((chain.clone(), i));
        }
        for (i, m) in c.methods.iter().enumerate() {
            methods.push((chain.clone(), i));
            for k in 0..m.params.len() {
                params.push((chain.clone(), i, k));
            }
        }
    }
    let is_ctor = |unit: &mut UnitModel, chain: &[String], i: usize| unit.class_mut(chain).methods[i].ret.is_none();
    let regular: Vec<(Vec<String>, usize)> = methods.iter().filter(|(c, i)| !is_ctor(unit, c, *i)).cloned().collect();

    match kind {
        FieldRenamed | FieldTypeChanged | FieldValueChanged | FieldAccessibilityChanged => {
            let (chain, i) = fields.choose(rng)?.clone();
            let fresh = unit.fresh(pick(rng, WORDS));
            let f = &mut unit.class_mut(&chain).fields[i];
            let path = class_path(project, &file, &chain).field(&f.name);
            let mut new_path = path.clone();
            match kind {
                FieldRenamed => {
                    new_path = class_path(project, &file, &chain).field(&fresh);
                    f.name = fresh;
                }
                FieldTypeChanged => f.ty = other_str(rng, TYPES, &f.ty),
                FieldValueChanged => {
                    f.init = match &f.init {
                        Some(_) if rng.gen_bool(0.3) => None,
                        Some(old) => Some(other_str(rng, INITS, old)),
                        None => Some(pick(rng, INITS).to_string()),
                    }
                }
                _ => f.access = other(rng, &ACCESS, f.access),
            }
            Some(Mutation { kind, path, new_path })
        }
        MethodRenamed | MethodReturnTypeChanged => {
            let (chain, i) = regular.choose(rng)?.clone();
            let fresh = unit.fresh(pick(rng, VERBS));
            let m = &mut unit.class_mut(&chain).methods[i];
            let path = class_path(project, &file, &chain).method(&m.name, m.params.len());
            if kind == MethodRenamed {
                let new_path = class_path(project, &file, &chain).method(&fresh, m.params.len());
                m.name = fresh;
                return Some(Mutation { kind, path, new_path });
            } else {
                let ret = m.ret.as_deref().unwrap_or("void");
                let mut pool = TYPES.to_vec();
                pool.push("void");
                m.ret = Some(other_str(rng, &pool, ret));
            }
            Mutation::at(kind, path)
        }
        MethodAccessibilityChanged | MethodBodyChanged => {
            let (chain, i) = methods.choose(rng)?.clone();
            let stmt = {
                let id = unit.fresh("t");
                format!("int {id} = {};", unit.next_id)
            };
            let m = &mut unit.class_mut(&chain).methods[i];
            let path = class_path(project, &file, &chain).method(&m.name, m.params.len());
            if kind == MethodAccessibilityChanged {
                m.access = other(rng, &ACCESS, m.access);
            } else {
                match &mut m.body {
                    Some(stmts) => stmts.insert(rng.gen_range(0..=stmts.len()), stmt),
                    None => m.body = Some(vec![stmt]),
                }
            }
            Mutation::at(kind, path)
        }
        ParamRenamed | ParamTypeChanged => {
            let (chain, i, k) = params.choose(rng)?.clone();
            let fresh = unit.fresh("p");
            let m = &mut unit.class_mut(&chain).methods[i];
            let path = class_path(project, &file, &chain).method(&m.name, m.params.len()).param(&m.params[k].name);
            let p = &mut m.params[k];
            if kind == ParamRenamed {
                let new_path = path.member_path().param(&fresh);
                p.name = fresh;
                return Some(Mutation { kind, path, new_path });
            } else {
                p.ty = other_str(rng, TYPES, &p.ty);
            }
            Mutation::at(kind, path)
        }
        ParamAdded | ParamRemoved => {
            let candidates: Vec<_> = methods
                .iter()
                .filter(|(c, i)| {
                    let class = unit.class_mut(c);
                    let m = &class.methods[*i];
                    let target = if kind == ParamAdded { m.params.len() + 1 } else { m.params.len().wrapping_sub(1) };
                    (kind == ParamAdded || !m.params.is_empty())
                        && !class.methods.iter().any(|o| o.name == m.name && o.params.len() == target)
                })
                .cloned()
                .collect();
            let (chain, i) = candidates.choose(rng)?.clone();
            let fresh = unit.fresh("p");
            let m = &mut unit.class_mut(&chain).methods[i];
            let method = class_path(project, &file, &chain).method(&m.name, m.params.len());
            let path = if kind == ParamAdded {
                m.params.push(ParamModel { ty: pick(rng, TYPES).to_string(), name: fresh.clone() });
                method.param(&fresh)
            } else {
                let p = m.params.pop().expect("non-empty");
                method.param(&p.name)
            };
            let new_path = class_path(project, &file, &chain).method(&m.name, m.params.len());
            Some(Mutation { kind, path, new_path })
        }
        ModifierSetChanged => {
            let use_field = !fields.is_empty() && (methods.is_empty() || rng.gen_bool(0.5));
            if use_field {
                let (chain, i) = fields.choose(rng)?.clone();
                let f = &mut unit.class_mut(&chain).fields[i];
                toggle(&mut f.modifiers, pick(rng, FIELD_MODIFIERS));
                Mutation::at(kind, class_path(project, &file, &chain).field(&f.name))
            } else {
                let (chain, i) = methods.choose(rng)?.clone();
                let m = &mut unit.class_mut(&chain).methods[i];
                toggle(&mut m.modifiers, pick(rng, METHOD_MODIFIERS));
                Mutation::at(kind, class_path(project, &file, &chain).method(&m.name, m.params.len()))
            }
        }
        ElementAdded => {
            let chain = chains.choose(rng)?.clone();
            let base = class_path(project, &file, &chain);
            match rng.gen_range(0..3) {
                0 => {
                    let name = unit.fresh(pick(rng, WORDS));
                    let ty = pick(rng, TYPES).to_string();
                    let c = unit.class_mut(&chain);
                    let at = rng.gen_range(0..=c.fields.len());
                    c.fields.insert(at, FieldModel { access: Accessibility::Private, modifiers: vec![], ty, name: name.clone(), init: None });
                    Mutation::at(kind, base.field(&name))
                }
                1 => {
                    let name = unit.fresh(pick(rng, VERBS));
                    let marker = format!("int {} = {};", unit.fresh("t"), unit.next_id);
                    let c = unit.class_mut(&chain);
                    let at = rng.gen_range(0..=c.methods.len());
                    c.methods.insert(at, MethodModel {
                        access: Accessibility::Public,
                        modifiers: vec![],
                        ret: Some("void".into()),
                        name: name.clone(),
                        params: vec![],
                        body: Some(vec![marker]),
                    });
                    Mutation::at(kind, base.method(&name, 0))
                }
                _ => {
                    let name = unit.fresh("Inner");
                    unit.class_mut(&chain).classes.push(ClassModel {
                        access: Accessibility::PackagePrivate,
                        is_static: true,
                        name: name.clone(),
                        fields: vec![],
                        methods: vec![],
                        classes: vec![],
                    });
                    Mutation::at(kind, base.nested(&name))
                }
            }
        }
        ElementRemoved => {
            let use_field = !fields.is_empty() && (methods.is_empty() || rng.gen_bool(0.5));
            if use_field {
                let (chain, i) = fields.choose(rng)?.clone();
                let f = unit.class_mut(&chain).fields.remove(i);
                Mutation::at(kind, class_path(project, &file, &chain).field(&f.name))
            } else {
                let (chain, i) = methods.choose(rng)?.clone();
                let c = unit.class_mut(&chain);
                let m = c.methods.remove(i);
                // A same-name overload left behind would pair up as an arity
                // change instead of a removal.
                if c.methods.iter().any(|o| o.name == m.name) {
                    c.methods.insert(i, m);
                    return None;
                }
                Mutation::at(kind, class_path(project, &file, &chain).method(&m.name, m.params.len()))
            }
        }
    }
}

fn toggle(set: &mut Vec<String>, modifier: &str) {
    match set.iter().position(|m| m == modifier) {
        Some(i) => {
            set.remove(i);
        }
        None => set.push(modifier.to_string()),
    }
}

/// A unit with at least one class, field, method and parameter, so every
/// mutation kind has a target.
pub fn rich_unit(rng: &mut impl Rng, file: &str) -> UnitModel {
    loop {
        let unit = random_unit(rng, file, Shape { max_classes: 3, ..Shape::default() });
        let mut probe = unit.clone();
        let chains = probe.chains();
        let has_param = chains.iter().any(|c| probe.class_mut(c).methods.iter().any(|m| !m.params.is_empty()));
        let has_field = chains.iter().any(|c| !probe.class_mut(c).fields.is_empty());
        let has_regular = chains.iter().any(|c| probe.class_mut(c).methods.iter().any(|m| m.ret.is_some()));
        if has_param && has_field && has_regular {
            return unit;
        }
    }
}
