//! The type relation over core expressions.

use std::rc::Rc;

use super::{Checker, TypeError, WidgetTyping};
use crate::externals::{ExternalKind, ParamShape};
use crate::syntax::desugar::is_handler_def;
use crate::syntax::{BinOp, Binding, Const, DoBlock, Expr, ExprKind, Span, WidgetDef, WidgetExpr};
use crate::types::{EffectSet, EventSig, SignatureClash, Type, WidgetType};

fn clash(span: Span, c: SignatureClash) -> TypeError {
    TypeError::new(span, format!("event {} has conflicting signatures {} and {}", c.first.name, c.first, c.second))
}

/// Adds effects to the result of a field reached through a command.
fn lift(t: Type, x: &EffectSet) -> Type {
    match t {
        Type::Cmd(inner, x2) => Type::Cmd(inner, x2.union(x)),
        Type::Fun(ps, r) => Type::Fun(ps, Box::new(lift(*r, x))),
        other => Type::Cmd(Box::new(other), x.clone()),
    }
}

impl Checker {
    /// Infers the type of a core expression.
    pub fn infer(&mut self, e: &Expr) -> Result<Type, TypeError> {
        self.infer_hint(e, None)
    }

    /// Infers a type; `hint` is the expected type at argument positions,
    /// used to type list literals whose elements belong to a union.
    fn infer_hint(&mut self, e: &Expr, hint: Option<&Type>) -> Result<Type, TypeError> {
        let span = e.span;
        let err = |m: String| Err(TypeError::new(span, m));
        match &e.kind {
            ExprKind::Var(x) => match self.lookup(x) {
                Some((_, t)) => Ok(t.clone()),
                None => err(format!("unbound variable {x}")),
            },
            ExprKind::Const(Const::Str(_)) => Ok(Type::Str),
            ExprKind::Const(Const::Int(_)) => Ok(Type::Int),
            ExprKind::Const(Const::Bool(_)) => Ok(Type::Bool),
            ExprKind::List(es) => self.infer_list(es, hint, span),
            ExprKind::EmptyList(t) => {
                self.well_formed(t, span)?;
                Ok(Type::list(t.clone()))
            }
            ExprKind::Record(fs) => {
                let mut out: Vec<(String, Type)> = Vec::new();
                for (n, v) in fs {
                    if out.iter().any(|(m, _)| m == n) {
                        return err(format!("duplicate field {n}"));
                    }
                    out.push((n.clone(), self.infer(v)?));
                }
                Ok(Type::Record(out))
            }
            ExprKind::Field(r, x) => {
                let rt = self.infer(r)?;
                self.field_of(&rt, x, span)
            }
            ExprKind::Fun(f) => {
                for p in &f.params {
                    self.well_formed(&p.ty, span)?;
                }
                self.well_formed(&f.ret, span)?;
                let mark = self.env.len();
                for p in &f.params {
                    self.bind(&p.name, p.ty.clone());
                }
                let body = self.infer(&f.body);
                self.env.truncate(mark);
                let ret = self.check_annot(&f.ret, &body?, span, "function result")?;
                Ok(Type::fun(f.params.iter().map(|p| p.ty.clone()).collect(), ret))
            }
            ExprKind::App(f, args) => self.infer_app(f, args, span),
            ExprKind::If(c, a, b) => {
                let ct = self.infer(c)?;
                if !self.type_compatible(&Type::Bool, &ct) {
                    return err(format!("condition must be bool, found {ct}"));
                }
                let (ta, tb) = (self.infer(a)?, self.infer(b)?);
                self.combine(&ta, &tb).map_err(|c| clash(span, c))
            }
            ExprKind::Fix(f) => {
                let ft = self.infer(f)?;
                match self.whnf(&ft) {
                    Type::Fun(ps, r) if ps.len() == 1 && self.type_compatible(&ps[0], &r) => Ok(ps[0].clone()),
                    _ => err(format!("fix expects a function from a type to itself, found {ft}")),
                }
            }
            ExprKind::Raise(n, args) => {
                let mut tys = Vec::new();
                for a in args {
                    tys.push(self.infer(a)?);
                }
                Ok(Type::cmd_raising(Type::Unit, EffectSet::single(EventSig::new(n.clone(), tys))))
            }
            ExprKind::Do(d) => self.infer_do(d, span),
            ExprKind::Widget(w) => self.infer_widget(w, span),
            ExprKind::Top => Ok(Type::cmd(Type::Top)),
            ExprKind::TyAbs(xs, body) => {
                let mark = self.tvars.len();
                self.tvars.extend(xs.iter().cloned());
                let t = self.infer(body);
                self.tvars.truncate(mark);
                Ok(Type::Forall(xs.clone(), Box::new(t?)))
            }
            ExprKind::TyApp(f, ts) => {
                for t in ts {
                    self.well_formed(t, span)?;
                }
                let ft = self.infer(f)?;
                match self.whnf(&ft) {
                    Type::Forall(xs, body) if xs.len() == ts.len() => {
                        Ok(body.subst(&xs.iter().cloned().zip(ts.iter().cloned()).collect::<Vec<_>>()))
                    }
                    Type::Forall(xs, _) => err(format!("expected {} type arguments, found {}", xs.len(), ts.len())),
                    _ => err(format!("type application of a non-polymorphic value of type {ft}")),
                }
            }
            ExprKind::Binary(op, a, b) => {
                let (ta, tb) = (self.infer(a)?, self.infer(b)?);
                self.infer_binary(*op, &ta, &tb, span)
            }
            ExprKind::Let(x, t, e1, e2) => {
                self.well_formed(t, span)?;
                let t1 = self.infer(e1)?;
                let t = self.check_annot(t, &t1, span, &format!("let {x}"))?;
                let mark = self.env.len();
                self.bind(x, t);
                let r = self.infer(e2);
                self.env.truncate(mark);
                r
            }
            ExprKind::LetRec(..) => err("internal error: letrec must be desugared before checking".into()),
        }
    }

    fn infer_list(&mut self, es: &[Rc<Expr>], hint: Option<&Type>, span: Span) -> Result<Type, TypeError> {
        let elem_hint = hint.and_then(|h| match self.whnf(h) {
            Type::List(t) => Some(*t),
            _ => None,
        });
        let mut elem: Option<Type> = elem_hint.clone();
        for (i, el) in es.iter().enumerate() {
            let t = self.infer_hint(el, elem_hint.as_ref())?;
            match &elem {
                None => elem = Some(t),
                Some(want) if self.type_compatible(want, &t) => {}
                Some(want) => {
                    return Err(TypeError::new(
                        el.span,
                        format!("list element {} has type {t}, but the list holds {want}", i + 1),
                    ))
                }
            }
        }
        match elem {
            Some(t) => Ok(Type::list(t)),
            None => Err(TypeError::new(span, "an empty list needs a type: write [][t]")),
        }
    }

    /// Type of field `x` of a value of type `t`. A field of a command's
    /// result is itself a command raising the command's events.
    pub(crate) fn field_of(&self, t: &Type, x: &str, span: Span) -> Result<Type, TypeError> {
        if let Type::Cmd(inner, effects) = self.whnf(t) {
            let ft = self.field_of(&inner, x, span)?;
            return Ok(lift(ft, &effects));
        }
        self.field_type(t, x).ok_or_else(|| TypeError::new(span, format!("no field {x} in type {t}")))
    }

    fn infer_binary(&self, op: BinOp, a: &Type, b: &Type, span: Span) -> Result<Type, TypeError> {
        let both = |t: &Type| self.type_compatible(t, a) && self.type_compatible(t, b);
        match op {
            BinOp::Add if both(&Type::Int) => Ok(Type::Int),
            BinOp::Add if both(&Type::Str) => Ok(Type::Str),
            BinOp::Sub | BinOp::Mul if both(&Type::Int) => Ok(Type::Int),
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge if both(&Type::Int) => Ok(Type::Bool),
            BinOp::Eq if self.type_compatible(a, b) || self.type_compatible(b, a) => Ok(Type::Bool),
            _ => Err(TypeError::new(span, format!("operator {} cannot combine {a} and {b}", op.symbol()))),
        }
    }

    fn infer_app(&mut self, f: &Expr, args: &[Rc<Expr>], span: Span) -> Result<Type, TypeError> {
        let head = match &f.kind {
            ExprKind::TyApp(g, _) => g,
            _ => f,
        };
        let ext = match &head.kind {
            ExprKind::Var(n) => self.builtin_ctor(n),
            _ => None,
        };
        let callee = match &f.kind {
            ExprKind::Var(n) => n.clone(),
            ExprKind::TyApp(g, _) => match &g.kind {
                ExprKind::Var(n) => n.clone(),
                _ => "function".into(),
            },
            _ => "function".into(),
        };
        let ft = self.infer(f)?;
        let (params, ret, pre) = match self.whnf(&ft) {
            Type::Fun(ps, r) => (ps, *r, None),
            Type::Forall(xs, body) => {
                let Type::Fun(ps, r) = self.whnf(&body) else {
                    return Err(TypeError::new(span, format!("{callee} is not a function (type {ft})")));
                };
                if ps.len() != args.len() {
                    return Err(TypeError::new(
                        span,
                        format!("{callee} expects {} arguments, found {}", ps.len(), args.len()),
                    ));
                }
                let mut arg_tys = Vec::new();
                for a in args {
                    arg_tys.push(self.infer(a)?);
                }
                let mut map: Vec<(String, Type)> = Vec::new();
                for (p, a) in ps.iter().zip(&arg_tys) {
                    self.match_type(p, a, &xs, &mut map);
                }
                if let Some(x) = xs.iter().find(|x| !map.iter().any(|(y, _)| y == *x)) {
                    return Err(TypeError::new(
                        span,
                        format!("cannot infer type argument {x} of {callee}; supply it with {callee}[...]"),
                    ));
                }
                let ps: Vec<Type> = ps.iter().map(|p| p.subst(&map)).collect();
                (ps, r.subst(&map), Some(arg_tys))
            }
            _ => return Err(TypeError::new(span, format!("{callee} is not a function (type {ft})"))),
        };
        if params.len() != args.len() {
            return Err(TypeError::new(
                span,
                format!("{callee} expects {} arguments, found {}", params.len(), args.len()),
            ));
        }
        let shapes = ext.map(ExternalKind::param_shapes);
        let mut extra = EffectSet::empty();
        for (i, (p, a)) in params.iter().zip(args).enumerate() {
            let shape = shapes.as_ref().map_or(ParamShape::Plain, |s| s[i]);
            match (shape, self.whnf(p)) {
                (ParamShape::Command, Type::Cmd(want, _)) => {
                    let at = match &pre {
                        Some(ts) => ts[i].clone(),
                        None => self.infer(a)?,
                    };
                    extra = extra.try_union(&self.child_command(&want, &at, a.span)?).map_err(|c| clash(span, c))?;
                }
                (ParamShape::CommandList, Type::List(el)) => {
                    let Type::Cmd(want, _) = self.whnf(&el) else {
                        return Err(TypeError::new(span, "internal error: constructor parameter shape mismatch"));
                    };
                    let effects = match (&a.kind, &pre) {
                        (ExprKind::List(es), None) => {
                            let mut fx = EffectSet::empty();
                            for el in es {
                                let t = self.infer(el)?;
                                fx = fx
                                    .try_union(&self.child_command(&want, &t, el.span)?)
                                    .map_err(|c| clash(span, c))?;
                            }
                            fx
                        }
                        _ => {
                            let at = match &pre {
                                Some(ts) => ts[i].clone(),
                                None => self.infer(a)?,
                            };
                            match self.whnf(&at) {
                                Type::List(t) => self.child_command(&want, &t, a.span)?,
                                _ => {
                                    return Err(TypeError::new(
                                        a.span,
                                        format!(
                                            "argument {} of {callee}: expected a list of commands, found {at}",
                                            i + 1
                                        ),
                                    ))
                                }
                            }
                        }
                    };
                    extra = extra.try_union(&effects).map_err(|c| clash(span, c))?;
                }
                _ => {
                    let at = match &pre {
                        Some(ts) => ts[i].clone(),
                        None => self.infer_hint(a, Some(p))?,
                    };
                    if !self.type_compatible(p, &at) {
                        return Err(TypeError::new(
                            a.span,
                            format!("argument {} of {callee}: expected {p}, found {at}", i + 1),
                        ));
                    }
                }
            }
        }
        if extra.is_empty() {
            return Ok(ret);
        }
        match self.whnf(&ret) {
            Type::Cmd(t, x) => Ok(Type::Cmd(t, x.try_union(&extra).map_err(|c| clash(span, c))?)),
            _ => Ok(ret),
        }
    }

    /// A child-widget command passed to a constructor: it may raise any
    /// events, which the constructed command then raises too.
    fn child_command(&self, want: &Type, actual: &Type, span: Span) -> Result<EffectSet, TypeError> {
        match self.whnf(actual) {
            Type::Cmd(t, x) if self.type_compatible(want, &t) => Ok(x),
            _ => Err(TypeError::new(span, format!("expected a command yielding {want}, found {actual}"))),
        }
    }

    /// First-order matching of a parameter type against an argument type,
    /// binding the quantified variables `xs`.
    fn match_type(&self, p: &Type, a: &Type, xs: &[String], map: &mut Vec<(String, Type)>) {
        match p {
            Type::Var(x) if xs.contains(x) => {
                if !map.iter().any(|(y, _)| y == x) {
                    map.push((x.clone(), a.clone()));
                }
            }
            Type::List(pi) | Type::Loc(pi) => match self.whnf(a) {
                Type::List(ai) | Type::Loc(ai) => self.match_type(pi, &ai, xs, map),
                _ => {}
            },
            Type::Cmd(pi, _) => {
                if let Type::Cmd(ai, _) = self.whnf(a) {
                    self.match_type(pi, &ai, xs, map);
                }
            }
            Type::Fun(ps, r) => {
                if let Type::Fun(qs, s) = self.whnf(a) {
                    for (p, q) in ps.iter().zip(&qs) {
                        self.match_type(p, q, xs, map);
                    }
                    self.match_type(r, &s, xs, map);
                }
            }
            Type::Record(fs) => {
                if let Type::Record(gs) = self.whnf(a) {
                    for (n, t) in fs {
                        if let Some((_, g)) = gs.iter().find(|(m, _)| m == n) {
                            self.match_type(t, g, xs, map);
                        }
                    }
                }
            }
            Type::App(n, ps) => {
                if let Type::App(m, qs) = a {
                    if n == m {
                        for (p, q) in ps.iter().zip(qs) {
                            self.match_type(p, q, xs, map);
                        }
                    }
                }
            }
            _ => {}
        }
    }

    fn infer_do(&mut self, d: &DoBlock, span: Span) -> Result<Type, TypeError> {
        let mark = self.env.len();
        let r = self.infer_do_inner(d, span);
        self.env.truncate(mark);
        r
    }

    fn infer_do_inner(&mut self, d: &DoBlock, span: Span) -> Result<Type, TypeError> {
        let mut effects = EffectSet::empty();
        for b in &d.bindings {
            let (t, x) = self.infer_binding(b)?;
            effects = effects.try_union(&x).map_err(|c| clash(span, c))?;
            self.bind(&b.name, t);
        }
        let rt = self.infer(&d.ret)?;
        Ok(Type::cmd_raising(rt, effects))
    }

    /// Checks `x:t <- e`; returns the refined `t` and the events of `e`.
    fn infer_binding(&mut self, b: &Binding) -> Result<(Type, EffectSet), TypeError> {
        self.well_formed(&b.ty, b.span)?;
        let t = self.infer(&b.expr)?;
        match self.whnf(&t) {
            Type::Cmd(y, x) => Ok((self.check_annot(&b.ty, &y, b.span, &format!("binding {}", b.name))?, x)),
            _ => Err(TypeError::new(b.span, format!("binding {}: expected a command, found {t}", b.name))),
        }
    }

    fn infer_widget(&mut self, w: &WidgetExpr, span: Span) -> Result<Type, TypeError> {
        let mark = self.env.len();
        let r = self.infer_widget_inner(w, span);
        self.env.truncate(mark);
        r
    }

    fn infer_widget_inner(&mut self, w: &WidgetExpr, span: Span) -> Result<Type, TypeError> {
        let mut comps: Vec<&Binding> = Vec::new();
        let mut handlers: Vec<&Binding> = Vec::new();
        for d in &w.defs {
            let WidgetDef::Bind(b) = d else {
                return Err(TypeError::new(d.span(), "internal error: handler sugar must be removed before checking"));
            };
            self.well_formed(&b.ty, b.span)?;
            if is_handler_def(d) {
                handlers.push(b);
            } else {
                comps.push(b);
            }
        }
        let names: Vec<&str> = w.defs.iter().map(|d| d.name()).collect();
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(TypeError::new(w.defs[i].span(), format!("duplicate definition of {n} in widget")));
            }
        }

        // The parent sees the components at their declared types.
        let base = self.env.len();
        for c in &comps {
            self.bind(&c.name, c.ty.clone());
        }
        let pt = self.infer(&w.parent);
        self.env.truncate(base);
        let pt = pt?;
        let (parent, parent_fx) = match self.whnf(&pt) {
            Type::Cmd(p, x) if self.is_widget_like(&p) => (*p, x),
            _ => {
                return Err(TypeError::new(
                    w.parent.span,
                    format!("widget parent must be a command yielding a widget, found {pt}"),
                ))
            }
        };

        let mut sigs = EffectSet::empty();
        for h in &handlers {
            let Type::Fun(ps, _) = &h.ty else { unreachable!("handler types are function types") };
            if sigs.contains_key(&h.name, ps.len()) {
                return Err(TypeError::new(h.span, format!("duplicate handler {}", h.name)));
            }
            sigs = sigs.union(&EffectSet::single(EventSig::new(h.name.clone(), ps.clone())));
        }

        let self_ty = match &w.self_ty {
            Some(t) => {
                self.well_formed(t, span)?;
                t.clone()
            }
            None => Type::Widget(Box::new(WidgetType {
                parent: parent.clone(),
                raises: self.raises_of(&parent).minus(&sigs),
                fields: w
                    .defs
                    .iter()
                    .map(|d| match d {
                        WidgetDef::Bind(b) => (b.name.clone(), b.ty.clone()),
                        WidgetDef::Handler(h) => (h.name.clone(), h.ret.clone()),
                    })
                    .collect(),
            })),
        };
        self.bind(&w.self_name, self_ty);

        let mut fields = Vec::new();
        let mut bind_fx = EffectSet::empty();
        let mut comp_raises = EffectSet::empty();
        for c in &comps {
            let (t, x) = self.infer_binding(c)?;
            bind_fx = bind_fx.try_union(&x).map_err(|e| clash(c.span, e))?;
            comp_raises = comp_raises.try_union(&self.raises_of(&t)).map_err(|e| clash(c.span, e))?;
            self.bind(&c.name, t.clone());
            fields.push((c.name.clone(), t));
        }
        for h in &handlers {
            self.bind(&h.name, h.ty.clone());
        }
        let mut handler_fx = EffectSet::empty();
        for h in &handlers {
            let (t, x) = self.infer_binding(h)?;
            bind_fx = bind_fx.try_union(&x).map_err(|e| clash(h.span, e))?;
            let Type::Fun(_, r) = &t else { unreachable!("handler types are function types") };
            match self.whnf(r) {
                Type::Cmd(y, hx) if *y == Type::Unit || self.is_widget_like(&y) => {
                    handler_fx = handler_fx.try_union(&hx).map_err(|e| clash(h.span, e))?;
                }
                _ => {
                    return Err(TypeError::new(
                        h.span,
                        format!("handler {} must return a command yielding a widget, found {r}", h.name),
                    ))
                }
            }
            fields.push((h.name.clone(), t));
        }

        let all = self
            .raises_of(&parent)
            .try_union(&handler_fx)
            .and_then(|s| s.try_union(&comp_raises))
            .map_err(|e| clash(span, e))?;
        for s in sigs.iter() {
            if let Some(ev) = all.get(&s.name, s.args.len()) {
                let same =
                    ev.args.iter().zip(&s.args).all(|(a, b)| self.type_compatible(a, b) && self.type_compatible(b, a));
                if !same {
                    return Err(TypeError::new(span, format!("handler {s} does not match the raised event {ev}")));
                }
            }
        }
        let actual = Type::Widget(Box::new(WidgetType { parent, raises: all.minus(&sigs), fields }));
        self.record_widget(WidgetTyping {
            span,
            self_name: w.self_name.clone(),
            declared: w.self_ty.clone(),
            actual: actual.clone(),
        });
        let yields = match &w.self_ty {
            Some(d) => self.check_annot(d, &actual, span, "widget")?,
            None => actual,
        };
        let fx = parent_fx.try_union(&bind_fx).map_err(|e| clash(span, e))?;
        Ok(Type::cmd_raising(yields, fx))
    }
}
