use conflict_radar_core::syntax::{position_of, ClassDecl, ElementTree, Span};

/// Describes every span that falls outside the source, disagrees with the
/// line/column derived from its byte offsets, or escapes its parent.
pub fn span_violations(tree: &ElementTree, source: &str) -> Vec<String> {
    let mut out = Vec::new();
    let file = Span::new(position_of(source, 0), position_of(source, source.len()));
    for class in &tree.classes {
        check_class(class, &file, source, &mut out);
    }
    out
}

fn check(what: &str, span: &Span, parent: &Span, source: &str, out: &mut Vec<String>) {
    if span.start_byte > span.end_byte || span.end_byte > source.len() {
        out.push(format!("{what}: {span:?} out of bounds"));
        return;
    }
    if position_of(source, span.start_byte) != span.start() || position_of(source, span.end_byte) != span.end() {
        out.push(format!("{what}: {span:?} line/col disagree with offsets"));
    }
    if !parent.contains(span) {
        out.push(format!("{what}: {span:?} escapes parent {parent:?}"));
    }
}

fn check_class(class: &ClassDecl, parent: &Span, source: &str, out: &mut Vec<String>) {
    let here = &class.span;
    check(&format!("class {}", class.name), here, parent, source, out);
    check(&format!("class {} name", class.name), &class.name_span, here, source, out);
    if let Some(m) = &class.modifiers_span {
        check(&format!("class {} modifiers", class.name), m, here, source, out);
    }
    for f in &class.fields {
        let what = format!("field {}", f.name);
        check(&what, &f.span, here, source, out);
        check(&format!("{what} type"), &f.type_span, &f.span, source, out);
        check(&format!("{what} name"), &f.name_span, &f.span, source, out);
        for s in [f.initializer_span, f.modifiers_span].iter().flatten() {
            check(&format!("{what} attribute"), s, &f.span, source, out);
        }
    }
    for m in &class.methods {
        let what = format!("method {}", m.name);
        check(&what, &m.span, here, source, out);
        check(&format!("{what} name"), &m.name_span, &m.span, source, out);
        check(&format!("{what} params"), &m.params_span, &m.span, source, out);
        for s in [m.return_type_span, m.body_span, m.modifiers_span].iter().flatten() {
            check(&format!("{what} attribute"), s, &m.span, source, out);
        }
        for p in &m.params {
            let pw = format!("{what} param {}", p.name);
            check(&pw, &p.span, &m.params_span, source, out);
            check(&format!("{pw} type"), &p.type_span, &p.span, source, out);
            check(&format!("{pw} name"), &p.name_span, &p.span, source, out);
        }
    }
    for nested in &class.classes {
        check_class(nested, here, source, out);
    }
}
