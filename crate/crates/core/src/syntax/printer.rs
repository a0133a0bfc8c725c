//! Canonical pretty-printer. Output re-parses to an equal tree.

use std::fmt::Write;

use super::ast::*;
use crate::types::{EffectSet, Type};

pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for item in &p.items {
        out.push_str(&print_item(item));
        out.push('\n');
    }
    out
}

pub fn print_item(item: &Item) -> String {
    match item {
        Item::Fun(f) => format!(
            "{}fun {}({}):{} = {}",
            if f.rec_kw { "rec " } else { "" },
            f.name,
            params(&f.params),
            print_type(&f.ret),
            print_expr(&f.body)
        ),
        Item::Val(v) => match &v.ty {
            Some(t) => format!("val {}:{} = {}", v.name, print_type(t), print_expr(&v.body)),
            None => format!("val {} = {}", v.name, print_expr(&v.body)),
        },
        Item::Type(t) => {
            if t.params.is_empty() {
                format!("type {} = {}", t.name, print_type(&t.body))
            } else {
                format!("type {}[{}] = {}", t.name, t.params.join(","), print_type(&t.body))
            }
        }
    }
}

fn params(ps: &[Param]) -> String {
    ps.iter().map(|p| format!("{}:{}", p.name, print_type(&p.ty))).collect::<Vec<_>>().join(", ")
}

// ---- types ----

pub fn print_type(t: &Type) -> String {
    match t {
        Type::Union(a, b) => {
            let left = match **a {
                Type::Fun(..) | Type::Forall(..) | Type::Rec(..) => format!("({})", print_type(a)),
                _ => print_type(a),
            };
            let right = match **b {
                Type::Union(..) | Type::Fun(..) | Type::Forall(..) | Type::Rec(..) => format!("({})", print_type(b)),
                _ => print_type(b),
            };
            format!("{left}+{right}")
        }
        Type::Fun(ps, r) => format!("({})->{}", ps.iter().map(print_type).collect::<Vec<_>>().join(","), print_type(r)),
        Type::Forall(xs, body) => format!("Forall({}){}", xs.join(","), print_type(body)),
        Type::Rec(x, body) => format!("rec {x}.{}", print_type(body)),
        Type::Loc(inner) => match **inner {
            Type::Union(..) | Type::Fun(..) | Type::Forall(..) | Type::Rec(..) => format!("!({})", print_type(inner)),
            _ => format!("!{}", print_type(inner)),
        },
        Type::Member(inner, x) => {
            if is_type_atom(inner) {
                format!("{}.{x}", print_type(inner))
            } else {
                format!("({}).{x}", print_type(inner))
            }
        }
        _ => print_type_atom(t),
    }
}

fn is_type_atom(t: &Type) -> bool {
    match t {
        Type::Cmd(_, x) => x.is_empty(),
        Type::Widget(_) | Type::Union(..) | Type::Fun(..) | Type::Forall(..) | Type::Rec(..) | Type::Loc(_) => false,
        _ => true,
    }
}

fn print_type_atom(t: &Type) -> String {
    match t {
        Type::Str => "str".into(),
        Type::Int => "int".into(),
        Type::Bool => "bool".into(),
        Type::Unit => "*".into(),
        Type::Top => "Top".into(),
        Type::List(t) => format!("[{}]", print_type(t)),
        Type::Record(fs) => format!("{{{}}}", fields(fs, ":")),
        Type::TypeRecord(fs) => format!("{{{{{}}}}}", fields(fs, "=")),
        Type::Cmd(t, x) => format!("<{}>{}", print_type(t), raises(x)),
        Type::Widget(w) => {
            format!("Widget({}){} {{{}}}", print_type(&w.parent), raises(&w.raises), fields(&w.fields, ":"))
        }
        Type::App(n, args) => format!("{n}[{}]", args.iter().map(print_type).collect::<Vec<_>>().join(",")),
        Type::Var(n) => n.clone(),
        other => print_type(other),
    }
}

fn fields(fs: &[(String, Type)], sep: &str) -> String {
    fs.iter().map(|(n, t)| format!("{n}{sep}{}", print_type(t))).collect::<Vec<_>>().join(";")
}

fn raises(x: &EffectSet) -> String {
    if x.is_empty() {
        String::new()
    } else {
        format!(" raises {x}")
    }
}

// ---- expressions ----

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    expr(&mut out, e);
    out
}

fn is_prefix_form(e: &Expr) -> bool {
    matches!(
        e.kind,
        ExprKind::If(..) | ExprKind::Fun(_) | ExprKind::Let(..) | ExprKind::LetRec(..) | ExprKind::TyAbs(..)
    )
}

fn expr(out: &mut String, e: &Expr) {
    match &e.kind {
        ExprKind::If(c, a, b) => {
            out.push_str("if ");
            expr(out, c);
            out.push_str(" then ");
            expr(out, a);
            out.push_str(" else ");
            expr(out, b);
        }
        ExprKind::Fun(f) => {
            let _ = write!(out, "fun({}):{} ", params(&f.params), print_type(&f.ret));
            expr(out, &f.body);
        }
        ExprKind::Let(x, t, e1, e2) => {
            let _ = write!(out, "let {x}:{} = ", print_type(t));
            expr(out, e1);
            out.push_str(" in ");
            expr(out, e2);
        }
        ExprKind::LetRec(bs, body) => {
            out.push_str("letrec ");
            for (i, b) in bs.iter().enumerate() {
                if i > 0 {
                    out.push_str("; ");
                }
                let _ = write!(out, "{}:{} = ", b.name, print_type(&b.ty));
                expr(out, &b.expr);
            }
            out.push_str(" in ");
            expr(out, body);
        }
        ExprKind::TyAbs(xs, body) => {
            let _ = write!(out, "Fun[{}] ", xs.join(","));
            expr(out, body);
        }
        _ => binary(out, e, 1),
    }
}

/// Prints `e` so that it parses back at binary level `min`.
fn binary(out: &mut String, e: &Expr, min: u8) {
    match &e.kind {
        ExprKind::Binary(op, a, b) if op.level() >= min => {
            binary(out, a, op.level());
            let _ = write!(out, " {} ", op.symbol());
            binary(out, b, op.level() + 1);
        }
        ExprKind::Binary(..) => paren(out, e),
        _ if is_prefix_form(e) => paren(out, e),
        _ => postfix(out, e),
    }
}

fn paren(out: &mut String, e: &Expr) {
    out.push('(');
    expr(out, e);
    out.push(')');
}

/// Operand of application, field reference or instantiation.
fn operand(out: &mut String, e: &Expr) {
    if matches!(e.kind, ExprKind::Binary(..)) || is_prefix_form(e) {
        paren(out, e);
    } else {
        postfix(out, e);
    }
}

fn args(out: &mut String, es: &[std::rc::Rc<Expr>]) {
    out.push('(');
    for (i, a) in es.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        expr(out, a);
    }
    out.push(')');
}

fn postfix(out: &mut String, e: &Expr) {
    match &e.kind {
        ExprKind::App(f, a) => {
            operand(out, f);
            args(out, a);
        }
        ExprKind::Field(r, x) => {
            operand(out, r);
            let _ = write!(out, ".{x}");
        }
        ExprKind::TyApp(f, ts) => {
            operand(out, f);
            let _ = write!(out, "[{}]", ts.iter().map(print_type).collect::<Vec<_>>().join(","));
        }
        _ => primary(out, e),
    }
}

fn primary(out: &mut String, e: &Expr) {
    match &e.kind {
        ExprKind::Var(x) => out.push_str(x),
        ExprKind::Const(Const::Int(n)) => {
            let _ = write!(out, "{n}");
        }
        ExprKind::Const(Const::Bool(b)) => {
            let _ = write!(out, "{b}");
        }
        ExprKind::Const(Const::Str(s)) => {
            out.push('\'');
            for c in s.chars() {
                match c {
                    '\'' => out.push_str("\\'"),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\t' => out.push_str("\\t"),
                    c => out.push(c),
                }
            }
            out.push('\'');
        }
        ExprKind::List(es) => {
            out.push('[');
            for (i, x) in es.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                expr(out, x);
            }
            out.push(']');
        }
        ExprKind::EmptyList(t) => {
            let _ = write!(out, "[][{}]", print_type(t));
        }
        ExprKind::Record(fs) => {
            out.push('{');
            for (i, (n, v)) in fs.iter().enumerate() {
                if i > 0 {
                    out.push(';');
                }
                let _ = write!(out, "{n}=");
                if matches!(v.kind, ExprKind::Binary(BinOp::Eq, ..)) {
                    paren(out, v);
                } else {
                    expr(out, v);
                }
            }
            out.push('}');
        }
        ExprKind::Fix(f) => {
            out.push_str("fix(");
            expr(out, f);
            out.push(')');
        }
        ExprKind::Raise(n, a) => {
            let _ = write!(out, "raise {n}");
            args(out, a);
        }
        ExprKind::Top => out.push_str("top"),
        ExprKind::Do(d) => {
            out.push_str("do { ");
            for b in &d.bindings {
                binding(out, b);
                out.push_str("; ");
            }
            out.push_str("return ");
            expr(out, &d.ret);
            out.push_str(" }");
        }
        ExprKind::Widget(w) => widget(out, w),
        _ => paren(out, e),
    }
}

fn binding(out: &mut String, b: &Binding) {
    let arrow = match b.kind {
        BindKind::Perform => "<-",
        BindKind::Value => "=",
    };
    let _ = write!(out, "{}:{} {arrow} ", b.name, print_type(&b.ty));
    expr(out, &b.expr);
}

fn widget(out: &mut String, w: &WidgetExpr) {
    out.push_str("widget ");
    if w.self_name != ANON_SELF {
        out.push_str(&w.self_name);
        if let Some(t) = &w.self_ty {
            let _ = write!(out, ":{}", print_type(t));
        }
        out.push(' ');
    }
    out.push('(');
    expr(out, &w.parent);
    out.push_str(") {");
    for (i, d) in w.defs.iter().enumerate() {
        out.push_str(if i > 0 { "; " } else { " " });
        match d {
            WidgetDef::Bind(b) => binding(out, b),
            WidgetDef::Handler(h) => {
                let _ = write!(out, "{}({}):{} = ", h.name, params(&h.params), print_type(&h.ret));
                expr(out, &h.body);
            }
        }
    }
    out.push_str(if w.defs.is_empty() { "}" } else { " }" });
}
