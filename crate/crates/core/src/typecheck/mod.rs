//! Static typing of widget programs: the type relation over core
//! expressions, type compatibility and the runnability condition.

pub mod compat;
mod infer;

use std::collections::HashMap;

use crate::diag::Diagnostic;
use crate::externals::ExternalKind;
use crate::syntax::{desugar, Item, Program, Span, TypeDef};
use crate::types::Type;

/// A typing failure at a source position.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{span_line}:{span_col}: {message}")]
pub struct TypeError {
    pub span_line: u32,
    pub span_col: u32,
    pub message: String,
}

impl TypeError {
    pub fn new(span: Span, message: impl Into<String>) -> Self {
        TypeError { span_line: span.line, span_col: span.col, message: message.into() }
    }

    pub fn span(&self) -> Span {
        Span::new(self.span_line, self.span_col)
    }
}

impl From<TypeError> for Diagnostic {
    fn from(e: TypeError) -> Self {
        Diagnostic::new(e.span(), e.message)
    }
}

/// The type inferred for one widget expression.
#[derive(Clone, Debug, PartialEq)]
pub struct WidgetTyping {
    pub span: Span,
    pub self_name: String,
    pub declared: Option<Type>,
    pub actual: Type,
}

/// Outcome of checking a whole program.
#[derive(Clone, Debug, Default)]
pub struct CheckResult {
    pub diagnostics: Vec<Diagnostic>,
    /// Types of the top-level functions and values, in source order.
    pub signatures: Vec<(String, Type)>,
    pub widgets: Vec<WidgetTyping>,
}

impl CheckResult {
    pub fn is_ok(&self) -> bool {
        self.diagnostics.is_empty()
    }

    pub fn signature(&self, name: &str) -> Option<&Type> {
        self.signatures.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }
}

/// Typing context: type definitions, rigid type variables in scope and
/// the value environment (innermost binding last).
#[derive(Clone, Debug)]
pub struct Checker {
    pub(crate) typedefs: HashMap<String, TypeDef>,
    pub(crate) tvars: Vec<String>,
    pub(crate) env: Vec<(String, Type)>,
    builtin_count: usize,
    pub(crate) widgets: Vec<WidgetTyping>,
}

/// Types of the operators available to every program.
pub fn builtin_types() -> Vec<(String, Type)> {
    let t = || Type::var("t");
    let poly = |body: Type| Type::Forall(vec!["t".into()], Box::new(body));
    let loc_t = || Type::Loc(Box::new(t()));
    let mut out = vec![
        ("loc".to_string(), poly(Type::fun(vec![t()], Type::cmd(loc_t())))),
        ("get".to_string(), poly(Type::fun(vec![loc_t()], Type::cmd(t())))),
        ("set".to_string(), poly(Type::fun(vec![loc_t(), t()], Type::cmd(t())))),
        ("head".to_string(), poly(Type::fun(vec![Type::list(t())], t()))),
        ("tail".to_string(), poly(Type::fun(vec![Type::list(t())], Type::list(t())))),
    ];
    for k in ExternalKind::ALL {
        out.push((k.ctor_name().to_string(), k.ctor_type()));
    }
    out
}

impl Default for Checker {
    fn default() -> Self {
        Checker::new(HashMap::new())
    }
}

impl Checker {
    /// A checker holding only the built-in operators.
    pub fn new(typedefs: HashMap<String, TypeDef>) -> Self {
        let env = builtin_types();
        Checker { typedefs, tvars: Vec::new(), builtin_count: env.len(), env, widgets: Vec::new() }
    }

    /// A checker for expressions in the scope of a checked program: its
    /// type definitions and top-level signatures.
    pub fn for_program(p: &Program, result: &CheckResult) -> Self {
        let mut c = Checker::new(typedefs_of(p));
        c.env.extend(result.signatures.iter().cloned());
        c
    }

    pub fn bind(&mut self, name: &str, t: Type) {
        self.env.push((name.to_string(), t));
    }

    pub(crate) fn lookup(&self, x: &str) -> Option<(usize, &Type)> {
        self.env.iter().enumerate().rev().find(|(_, (n, _))| n == x).map(|(i, (_, t))| (i, t))
    }

    /// The external kind constructed by `x`, if `x` names an unshadowed
    /// constructor operator.
    pub(crate) fn builtin_ctor(&self, x: &str) -> Option<ExternalKind> {
        let (i, _) = self.lookup(x)?;
        if i < self.builtin_count {
            ExternalKind::from_ctor(x)
        } else {
            None
        }
    }

    /// Widget typings recorded so far.
    pub fn widget_typings(&self) -> &[WidgetTyping] {
        &self.widgets
    }

    pub(crate) fn record_widget(&mut self, w: WidgetTyping) {
        self.widgets.retain(|o| (o.span.line, o.span.col) != (w.span.line, w.span.col));
        self.widgets.push(w);
    }

    /// Checks that a type only mentions known names, applied to the right
    /// number of arguments, and that recursion is guarded.
    pub fn well_formed(&mut self, t: &Type, span: Span) -> Result<(), TypeError> {
        let err = |m: String| Err(TypeError::new(span, m));
        match t {
            Type::Str | Type::Int | Type::Bool | Type::Unit | Type::Top => Ok(()),
            Type::List(a) | Type::Loc(a) => self.well_formed(a, span),
            Type::Record(fs) | Type::TypeRecord(fs) => {
                no_duplicates(fs.iter().map(|(n, _)| n.as_str()), "field", span)?;
                fs.iter().try_for_each(|(_, t)| self.well_formed(t, span))
            }
            Type::Cmd(a, x) => {
                self.well_formed(a, span)?;
                x.iter().flat_map(|s| s.args.iter()).try_for_each(|t| self.well_formed(t, span))
            }
            Type::Union(a, b) => {
                self.well_formed(a, span)?;
                self.well_formed(b, span)
            }
            Type::Widget(w) => {
                self.well_formed(&w.parent, span)?;
                for t in w.raises.iter().flat_map(|s| s.args.iter()) {
                    self.well_formed(t, span)?;
                }
                no_duplicates(w.fields.iter().map(|(n, _)| n.as_str()), "field", span)?;
                w.fields.iter().try_for_each(|(_, t)| self.well_formed(t, span))
            }
            Type::Fun(ps, r) => {
                ps.iter().try_for_each(|p| self.well_formed(p, span))?;
                self.well_formed(r, span)
            }
            Type::App(n, args) => {
                args.iter().try_for_each(|a| self.well_formed(a, span))?;
                if self.is_tvar(n) {
                    return err(format!("type variable {n} cannot be applied to arguments"));
                }
                let expected = match (self.typedefs.get(n), ExternalKind::from_type(n)) {
                    (Some(d), _) => d.params.len(),
                    (None, Some(k)) => k.type_params().len(),
                    (None, None) => return err(format!("unknown type operator {n}")),
                };
                if expected != args.len() {
                    return err(format!("type {n} expects {expected} arguments, found {}", args.len()));
                }
                Ok(())
            }
            Type::Var(n) => {
                if self.is_tvar(n) {
                    return Ok(());
                }
                let expected = match (self.typedefs.get(n), ExternalKind::from_type(n)) {
                    (Some(d), _) => d.params.len(),
                    (None, Some(k)) => k.type_params().len(),
                    (None, None) => return err(format!("unknown type {n}")),
                };
                if expected != 0 {
                    return err(format!("type {n} expects {expected} arguments"));
                }
                Ok(())
            }
            Type::Rec(x, b) => {
                let mut names = Vec::new();
                unguarded_names(b, &mut names);
                if names.iter().any(|n| n == x) {
                    return err(format!("recursive type variable {x} must occur under a type constructor"));
                }
                self.tvars.push(x.clone());
                let r = self.well_formed(b, span);
                self.tvars.pop();
                r
            }
            Type::Member(inner, x) => {
                self.well_formed(inner, span)?;
                match self.whnf(inner) {
                    Type::TypeRecord(fs) if fs.iter().any(|(n, _)| n == x) => Ok(()),
                    _ => err(format!("type {inner} has no member {x}")),
                }
            }
            Type::Forall(xs, b) => {
                let mark = self.tvars.len();
                self.tvars.extend(xs.iter().cloned());
                let r = self.well_formed(b, span);
                self.tvars.truncate(mark);
                r
            }
        }
    }

    fn check_typedefs(&mut self, defs: &[&TypeDef]) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        for d in defs {
            if ExternalKind::from_type(&d.name).is_some() {
                diags.push(Diagnostic::new(d.span, format!("type {} redefines a built-in widget type", d.name)));
                continue;
            }
            if let Err(e) = no_duplicates(d.params.iter().map(|s| s.as_str()), "type parameter", d.span) {
                diags.push(e.into());
                continue;
            }
            let mark = self.tvars.len();
            self.tvars.extend(d.params.iter().cloned());
            if let Err(e) = self.well_formed(&d.body, d.span) {
                diags.push(e.into());
            }
            self.tvars.truncate(mark);
            if self.reaches_unguarded(&d.name) {
                diags.push(Diagnostic::new(
                    d.span,
                    format!("type {} is not guarded: its recursive use must occur under a type constructor", d.name),
                ));
            }
        }
        diags
    }

    /// True if `name` unfolds to itself without passing a type constructor.
    fn reaches_unguarded(&self, name: &str) -> bool {
        let mut stack = vec![name.to_string()];
        let mut visited: Vec<String> = Vec::new();
        while let Some(n) = stack.pop() {
            let Some(d) = self.typedefs.get(&n) else { continue };
            let mut names = Vec::new();
            unguarded_names(&d.body, &mut names);
            for m in names {
                if d.params.contains(&m) {
                    continue;
                }
                if m == name {
                    return true;
                }
                if !visited.contains(&m) {
                    visited.push(m.clone());
                    stack.push(m);
                }
            }
        }
        false
    }
}

/// Names heading the type without an intervening constructor.
fn unguarded_names(t: &Type, out: &mut Vec<String>) {
    match t {
        Type::Var(n) => out.push(n.clone()),
        Type::App(n, args) => {
            out.push(n.clone());
            args.iter().for_each(|a| unguarded_names(a, out));
        }
        Type::Union(a, b) => {
            unguarded_names(a, out);
            unguarded_names(b, out);
        }
        Type::Member(inner, _) => unguarded_names(inner, out),
        Type::Rec(x, b) => {
            let mut inner = Vec::new();
            unguarded_names(b, &mut inner);
            out.extend(inner.into_iter().filter(|n| n != x));
        }
        Type::Forall(xs, b) => {
            let mut inner = Vec::new();
            unguarded_names(b, &mut inner);
            out.extend(inner.into_iter().filter(|n| !xs.contains(n)));
        }
        _ => {}
    }
}

fn no_duplicates<'a>(names: impl Iterator<Item = &'a str>, what: &str, span: Span) -> Result<(), TypeError> {
    let mut seen: Vec<&str> = Vec::new();
    for n in names {
        if seen.contains(&n) {
            return Err(TypeError::new(span, format!("duplicate {what} {n}")));
        }
        seen.push(n);
    }
    Ok(())
}

fn typedefs_of(p: &Program) -> HashMap<String, TypeDef> {
    p.items
        .iter()
        .filter_map(|i| match i {
            Item::Type(t) => Some((t.name.clone(), t.clone())),
            _ => None,
        })
        .collect()
}

const MAX_PASSES: usize = 20;

/// Type-checks every definition of a program.
pub fn check_program(p: &Program) -> CheckResult {
    let p = desugar(p);
    let mut diags = Vec::new();
    let mut seen_values: Vec<&str> = Vec::new();
    let mut seen_types: Vec<&str> = Vec::new();
    for item in &p.items {
        let seen = if matches!(item, Item::Type(_)) { &mut seen_types } else { &mut seen_values };
        if seen.contains(&item.name()) {
            diags.push(Diagnostic::new(item.span(), format!("duplicate definition of {}", item.name())));
        }
        seen.push(item.name());
    }
    let mut c = Checker::new(typedefs_of(&p));
    let defs: Vec<&TypeDef> =
        p.items.iter().filter_map(|i| if let Item::Type(t) = i { Some(t) } else { None }).collect();
    diags.extend(c.check_typedefs(&defs));
    if !diags.is_empty() {
        return finish(diags, Vec::new(), Vec::new());
    }

    // Declared signatures first; open command annotations gain their
    // effects, and unannotated values their types, over the passes.
    let mut sigs: Vec<Option<Type>> = Vec::new();
    for item in &p.items {
        let sig = match item {
            Item::Fun(f) => {
                let mut ok = true;
                for t in f.params.iter().map(|p| &p.ty).chain(std::iter::once(&f.ret)) {
                    if let Err(e) = c.well_formed(t, f.span) {
                        diags.push(e.into());
                        ok = false;
                    }
                }
                ok.then(|| Type::fun(f.params.iter().map(|p| p.ty.clone()).collect(), f.ret.clone()))
            }
            Item::Val(v) => match &v.ty {
                Some(t) => match c.well_formed(t, v.span) {
                    Ok(()) => Some(t.clone()),
                    Err(e) => {
                        diags.push(e.into());
                        None
                    }
                },
                None => None,
            },
            Item::Type(_) => None,
        };
        sigs.push(sig);
    }
    if !diags.is_empty() {
        return finish(diags, Vec::new(), Vec::new());
    }

    let base = c.env.len();
    let mut pass_diags = Vec::new();
    for _ in 0..MAX_PASSES {
        pass_diags.clear();
        c.widgets.clear();
        let mut changed = false;
        for (idx, item) in p.items.iter().enumerate() {
            c.env.truncate(base);
            for (i, s) in sigs.iter().enumerate() {
                if let Some(t) = s {
                    c.env.push((p.items[i].name().to_string(), t.clone()));
                }
            }
            let new_sig = match item {
                Item::Fun(f) => {
                    let mark = c.env.len();
                    for prm in &f.params {
                        c.bind(&prm.name, prm.ty.clone());
                    }
                    let body = c.infer(&f.body);
                    c.env.truncate(mark);
                    body.and_then(|b| c.check_annot(&f.ret, &b, f.span, &format!("result of {}", f.name)))
                        .map(|r| Type::fun(f.params.iter().map(|p| p.ty.clone()).collect(), r))
                }
                Item::Val(v) => c.infer(&v.body).and_then(|b| match &v.ty {
                    Some(t) => c.check_annot(t, &b, v.span, &format!("value {}", v.name)),
                    None => Ok(b),
                }),
                Item::Type(_) => continue,
            };
            match new_sig {
                Ok(t) => {
                    if sigs[idx].as_ref() != Some(&t) {
                        sigs[idx] = Some(t);
                        changed = true;
                    }
                }
                Err(e) => pass_diags.push(Diagnostic::from(e)),
            }
        }
        if !changed {
            break;
        }
    }
    diags.extend(pass_diags);
    let signatures =
        p.items.iter().zip(&sigs).filter_map(|(i, s)| s.as_ref().map(|t| (i.name().to_string(), t.clone()))).collect();
    finish(diags, signatures, std::mem::take(&mut c.widgets))
}

fn finish(mut diags: Vec<Diagnostic>, signatures: Vec<(String, Type)>, widgets: Vec<WidgetTyping>) -> CheckResult {
    diags.sort_by_key(|d| (d.line, d.col));
    diags.dedup();
    CheckResult { diagnostics: diags, signatures, widgets }
}

/// Checks the program and that its entry has type `<W> raises ∅` for a
/// widget type `W` raising no events.
pub fn check_runnable(p: &Program) -> Vec<Diagnostic> {
    let result = check_program(p);
    if !result.is_ok() {
        return result.diagnostics;
    }
    let entry = &p.entry;
    let Some(item) = p.item(entry) else {
        return vec![Diagnostic::new(Span::new(1, 1), format!("no definition of the entry {entry}"))];
    };
    let span = item.span();
    let c = Checker::new(typedefs_of(p));
    let Some(sig) = result.signature(entry) else {
        return vec![Diagnostic::new(span, format!("entry {entry} has no type"))];
    };
    let cmd = match (item, c.whnf(sig)) {
        (Item::Fun(f), Type::Fun(_, r)) if f.params.is_empty() => *r,
        (Item::Val(_), t) => t,
        _ => {
            return vec![Diagnostic::new(
                span,
                format!("entry {entry} is not a command yielding a widget (found {sig})"),
            )]
        }
    };
    let (w, effects) = match c.whnf(&cmd) {
        Type::Cmd(w, x) if c.is_widget_like(&w) => (*w, x),
        _ => {
            return vec![Diagnostic::new(
                span,
                format!("entry {entry} is not a command yielding a widget (found {sig})"),
            )]
        }
    };
    let mut diags: Vec<Diagnostic> =
        effects.iter().map(|e| Diagnostic::new(span, format!("entry {entry} raises unhandled event {e}"))).collect();
    for e in c.raises_of(&w).iter() {
        diags.push(Diagnostic::new(span, format!("unhandled event {e} escapes to entry {entry} (widget type {w})")));
    }
    diags
}
