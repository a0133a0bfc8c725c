//! Removal of surface sugar: handler definitions, value bindings and
//! `letrec`. The result contains only core forms.

use std::rc::Rc;

use super::ast::*;
use crate::types::Type;

pub fn desugar(p: &Program) -> Program {
    let items = p
        .items
        .iter()
        .map(|item| match item {
            Item::Fun(f) => Item::Fun(FunDef { body: desugar_expr(&f.body), ..f.clone() }),
            Item::Val(v) => Item::Val(ValDef { body: desugar_expr(&v.body), ..v.clone() }),
            Item::Type(t) => Item::Type(t.clone()),
        })
        .collect();
    Program { items, entry: p.entry.clone() }
}

/// `do { return e }`
fn ret(e: Rc<Expr>) -> Rc<Expr> {
    let span = e.span;
    Expr::rc(ExprKind::Do(Rc::new(DoBlock { bindings: vec![], ret: e })), span)
}

fn binding(b: &Binding) -> Binding {
    let expr = desugar_expr(&b.expr);
    match b.kind {
        BindKind::Perform => Binding { expr, ..b.clone() },
        BindKind::Value => Binding { kind: BindKind::Perform, expr: ret(expr), ..b.clone() },
    }
}

pub fn desugar_expr(e: &Rc<Expr>) -> Rc<Expr> {
    let span = e.span;
    let d = desugar_expr;
    let kind = match &e.kind {
        ExprKind::Var(_) | ExprKind::Const(_) | ExprKind::EmptyList(_) | ExprKind::Top => return e.clone(),
        ExprKind::List(es) => ExprKind::List(es.iter().map(d).collect()),
        ExprKind::Record(fs) => ExprKind::Record(fs.iter().map(|(n, v)| (n.clone(), d(v))).collect()),
        ExprKind::Field(r, x) => ExprKind::Field(d(r), x.clone()),
        ExprKind::Fun(f) => ExprKind::Fun(Rc::new(FunExpr { body: d(&f.body), ..(**f).clone() })),
        ExprKind::App(f, args) => ExprKind::App(d(f), args.iter().map(d).collect()),
        ExprKind::If(c, a, b) => ExprKind::If(d(c), d(a), d(b)),
        ExprKind::Fix(f) => ExprKind::Fix(d(f)),
        ExprKind::Raise(n, args) => ExprKind::Raise(n.clone(), args.iter().map(d).collect()),
        ExprKind::Do(block) => ExprKind::Do(Rc::new(DoBlock {
            bindings: block.bindings.iter().map(binding).collect(),
            ret: d(&block.ret),
        })),
        ExprKind::Widget(w) => {
            let defs = w
                .defs
                .iter()
                .map(|def| match def {
                    WidgetDef::Bind(b) => WidgetDef::Bind(binding(b)),
                    WidgetDef::Handler(h) => {
                        let ty = Type::fun(h.params.iter().map(|p| p.ty.clone()).collect(), h.ret.clone());
                        let fun = Expr::rc(
                            ExprKind::Fun(Rc::new(FunExpr {
                                params: h.params.clone(),
                                ret: h.ret.clone(),
                                body: d(&h.body),
                            })),
                            h.span,
                        );
                        WidgetDef::Bind(Binding {
                            name: h.name.clone(),
                            ty,
                            kind: BindKind::Perform,
                            expr: ret(fun),
                            span: h.span,
                        })
                    }
                })
                .collect();
            ExprKind::Widget(Rc::new(WidgetExpr {
                self_name: w.self_name.clone(),
                self_ty: w.self_ty.clone(),
                parent: d(&w.parent),
                defs,
            }))
        }
        ExprKind::TyAbs(xs, b) => ExprKind::TyAbs(xs.clone(), d(b)),
        ExprKind::TyApp(f, ts) => ExprKind::TyApp(d(f), ts.clone()),
        ExprKind::Binary(op, a, b) => ExprKind::Binary(*op, d(a), d(b)),
        ExprKind::Let(x, t, a, b) => ExprKind::Let(x.clone(), t.clone(), d(a), d(b)),
        ExprKind::LetRec(bs, body) => return letrec(bs, body, span),
    };
    Rc::new(Expr { kind, span })
}

/// `letrec f1:t1 = e1; ... in b` becomes
/// `let r:{f1:t1;...} = fix(fun(r:{f1:t1;...}):{f1:t1;...} {f1=e1';...}) in b'`
/// where every free `fi` in the bodies is replaced by `r.fi`.
fn letrec(bs: &[RecBinding], body: &Rc<Expr>, span: Span) -> Rc<Expr> {
    let bs: Vec<RecBinding> = bs.iter().map(|b| RecBinding { expr: desugar_expr(&b.expr), ..b.clone() }).collect();
    let body = desugar_expr(body);

    let mut used = Vec::new();
    body.collect_names(&mut used);
    for b in &bs {
        used.push(b.name.clone());
        b.expr.collect_names(&mut used);
    }
    let r = (0..).map(|i| format!("rec_{i}")).find(|c| !used.contains(c)).expect("fresh name");

    let names: Vec<String> = bs.iter().map(|b| b.name.clone()).collect();
    let rec_ty = Type::Record(bs.iter().map(|b| (b.name.clone(), b.ty.clone())).collect());
    let record =
        Expr::rc(ExprKind::Record(bs.iter().map(|b| (b.name.clone(), subst_rec(&b.expr, &names, &r))).collect()), span);
    let fun = Expr::rc(
        ExprKind::Fun(Rc::new(FunExpr {
            params: vec![Param { name: r.clone(), ty: rec_ty.clone() }],
            ret: rec_ty.clone(),
            body: record,
        })),
        span,
    );
    let fix = Expr::rc(ExprKind::Fix(fun), span);
    Expr::rc(ExprKind::Let(r.clone(), rec_ty, fix, subst_rec(&body, &names, &r)), span)
}

/// Replaces free occurrences of each name in `names` by `r.name`. `r` is
/// fresh, so no binder can capture it.
fn subst_rec(e: &Rc<Expr>, names: &[String], r: &str) -> Rc<Expr> {
    if names.is_empty() {
        return e.clone();
    }
    let span = e.span;
    let go = |x: &Rc<Expr>| subst_rec(x, names, r);
    let without =
        |bound: &[&str]| -> Vec<String> { names.iter().filter(|n| !bound.contains(&n.as_str())).cloned().collect() };
    let kind = match &e.kind {
        ExprKind::Var(x) if names.contains(x) => {
            ExprKind::Field(Expr::rc(ExprKind::Var(r.to_string()), span), x.clone())
        }
        ExprKind::Var(_) | ExprKind::Const(_) | ExprKind::EmptyList(_) | ExprKind::Top => return e.clone(),
        ExprKind::List(es) => ExprKind::List(es.iter().map(go).collect()),
        ExprKind::Record(fs) => ExprKind::Record(fs.iter().map(|(n, v)| (n.clone(), go(v))).collect()),
        ExprKind::Field(x, f) => ExprKind::Field(go(x), f.clone()),
        ExprKind::Fun(f) => {
            let bound: Vec<&str> = f.params.iter().map(|p| p.name.as_str()).collect();
            let inner = without(&bound);
            ExprKind::Fun(Rc::new(FunExpr { body: subst_rec(&f.body, &inner, r), ..(**f).clone() }))
        }
        ExprKind::App(f, args) => ExprKind::App(go(f), args.iter().map(go).collect()),
        ExprKind::If(c, a, b) => ExprKind::If(go(c), go(a), go(b)),
        ExprKind::Fix(f) => ExprKind::Fix(go(f)),
        ExprKind::Raise(n, args) => ExprKind::Raise(n.clone(), args.iter().map(go).collect()),
        ExprKind::Do(block) => {
            let mut scope = names.to_vec();
            let mut bindings = Vec::new();
            for b in &block.bindings {
                bindings.push(Binding { expr: subst_rec(&b.expr, &scope, r), ..b.clone() });
                scope.retain(|n| n != &b.name);
            }
            ExprKind::Do(Rc::new(DoBlock { bindings, ret: subst_rec(&block.ret, &scope, r) }))
        }
        ExprKind::Widget(w) => {
            let components: Vec<&str> = w.defs.iter().filter(|d| !is_handler_def(d)).map(|d| d.name()).collect();
            let parent = subst_rec(&w.parent, &without(&components), r);
            let mut scope = without(&[w.self_name.as_str()]);
            let all: Vec<&str> = w.defs.iter().map(|d| d.name()).chain([w.self_name.as_str()]).collect();
            let handler_scope = without(&all);
            let mut defs = Vec::new();
            for def in &w.defs {
                let (s, next) =
                    if is_handler_def(def) { (&handler_scope, None) } else { (&scope, Some(def.name().to_string())) };
                defs.push(match def {
                    WidgetDef::Bind(b) => WidgetDef::Bind(Binding { expr: subst_rec(&b.expr, s, r), ..b.clone() }),
                    WidgetDef::Handler(h) => {
                        let bound: Vec<&str> = h.params.iter().map(|p| p.name.as_str()).collect();
                        let inner: Vec<String> = s.iter().filter(|n| !bound.contains(&n.as_str())).cloned().collect();
                        WidgetDef::Handler(HandlerDef { body: subst_rec(&h.body, &inner, r), ..h.clone() })
                    }
                });
                if let Some(n) = next {
                    scope.retain(|x| x != &n);
                }
            }
            ExprKind::Widget(Rc::new(WidgetExpr { parent, defs, ..(**w).clone() }))
        }
        ExprKind::TyAbs(xs, b) => ExprKind::TyAbs(xs.clone(), go(b)),
        ExprKind::TyApp(f, ts) => ExprKind::TyApp(go(f), ts.clone()),
        ExprKind::Binary(op, a, b) => ExprKind::Binary(*op, go(a), go(b)),
        ExprKind::Let(x, t, a, b) => ExprKind::Let(x.clone(), t.clone(), go(a), subst_rec(b, &without(&[x]), r)),
        ExprKind::LetRec(bs, body) => {
            let bound: Vec<&str> = bs.iter().map(|b| b.name.as_str()).collect();
            let inner = without(&bound);
            ExprKind::LetRec(
                bs.iter().map(|b| RecBinding { expr: subst_rec(&b.expr, &inner, r), ..b.clone() }).collect(),
                subst_rec(body, &inner, r),
            )
        }
    };
    Rc::new(Expr { kind, span })
}

/// Widget definitions with a function type are event handlers; all
/// others are components.
pub fn is_handler_def(d: &WidgetDef) -> bool {
    match d {
        WidgetDef::Handler(_) => true,
        WidgetDef::Bind(b) => matches!(b.ty, Type::Fun(..)),
    }
}

/// True if the expression still contains surface-only forms.
pub fn has_sugar(e: &Expr) -> bool {
    e.any(&|x| match &x.kind {
        ExprKind::LetRec(..) => true,
        ExprKind::Do(d) => d.bindings.iter().any(|b| b.kind == BindKind::Value),
        ExprKind::Widget(w) => w.defs.iter().any(|d| match d {
            WidgetDef::Handler(_) => true,
            WidgetDef::Bind(b) => b.kind == BindKind::Value,
        }),
        _ => false,
    })
}
