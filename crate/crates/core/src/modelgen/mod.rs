//! Generating Widget skeletons from application models.

pub mod generate;
pub mod model;

use std::rc::Rc;

pub use generate::{generate, GeneratedSource, Hole, TODO_MARK};
pub use model::{load_model, parse_model, ModelError, RappModel};

use crate::syntax::{parse_expr, DoBlock, Expr, ExprKind, FunExpr, Item, Program, WidgetDef, WidgetExpr};

/// The holes marked in generated text: each `// TODO` line names the
/// handler defined on the next line, inside the enclosing `fun`.
pub fn holes_in(text: &str) -> Vec<Hole> {
    let mut out = Vec::new();
    let mut function = String::new();
    let mut lines = text.lines().map(str::trim);
    while let Some(line) = lines.next() {
        if let Some(rest) = line.strip_prefix("fun ") {
            function = rest.split('(').next().unwrap_or("").trim().to_string();
        } else if line == TODO_MARK {
            if let Some(next) = lines.next() {
                let handler = next.split('(').next().unwrap_or("").trim().to_string();
                out.push(Hole { function: function.clone(), handler });
            }
        }
    }
    out
}

/// Replaces the body of every hole with `do { return self }`.
pub fn fill_holes(p: &Program, holes: &[Hole]) -> Program {
    let items = p
        .items
        .iter()
        .map(|item| match item {
            Item::Fun(f) => {
                let names: Vec<&str> =
                    holes.iter().filter(|h| h.function == f.name).map(|h| h.handler.as_str()).collect();
                let mut f = f.clone();
                f.body = fill_expr(&f.body, &names);
                Item::Fun(f)
            }
            other => other.clone(),
        })
        .collect();
    Program { items, entry: p.entry.clone() }
}

fn fill_expr(e: &Rc<Expr>, names: &[&str]) -> Rc<Expr> {
    if names.is_empty() {
        return e.clone();
    }
    let go = |x: &Rc<Expr>| fill_expr(x, names);
    let kind = match &e.kind {
        ExprKind::Widget(w) => {
            let defs = w
                .defs
                .iter()
                .map(|d| match d {
                    WidgetDef::Handler(h) if names.contains(&h.name.as_str()) => {
                        let mut h = h.clone();
                        let body = parse_expr(&format!("do {{ return {} }}", w.self_name)).expect("hole body parses");
                        h.body = Rc::new(body);
                        WidgetDef::Handler(h)
                    }
                    WidgetDef::Handler(h) => {
                        let mut h = h.clone();
                        h.body = go(&h.body);
                        WidgetDef::Handler(h)
                    }
                    WidgetDef::Bind(b) => {
                        let mut b = b.clone();
                        b.expr = go(&b.expr);
                        WidgetDef::Bind(b)
                    }
                })
                .collect();
            ExprKind::Widget(Rc::new(WidgetExpr { parent: go(&w.parent), defs, ..(**w).clone() }))
        }
        ExprKind::Do(d) => {
            let bindings = d
                .bindings
                .iter()
                .map(|b| {
                    let mut b = b.clone();
                    b.expr = go(&b.expr);
                    b
                })
                .collect();
            ExprKind::Do(Rc::new(DoBlock { bindings, ret: go(&d.ret) }))
        }
        ExprKind::Let(x, t, a, b) => ExprKind::Let(x.clone(), t.clone(), go(a), go(b)),
        ExprKind::If(c, a, b) => ExprKind::If(go(c), go(a), go(b)),
        ExprKind::App(f, xs) => ExprKind::App(go(f), xs.iter().map(go).collect()),
        ExprKind::List(xs) => ExprKind::List(xs.iter().map(go).collect()),
        ExprKind::Fun(f) => ExprKind::Fun(Rc::new(FunExpr { body: go(&f.body), ..(**f).clone() })),
        ExprKind::TyAbs(vs, b) => ExprKind::TyAbs(vs.clone(), go(b)),
        _ => return e.clone(),
    };
    Rc::new(Expr { kind, span: e.span })
}
