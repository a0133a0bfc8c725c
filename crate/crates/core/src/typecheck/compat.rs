//! Type unfolding, compatibility, the `⊕` combination of branch types and
//! refinement of open command annotations.

use super::{Checker, TypeError};
use crate::externals::ExternalKind;
use crate::syntax::Span;
use crate::types::{EffectSet, SignatureClash, Type, WidgetType};

const MAX_UNFOLD: usize = 64;

impl Checker {
    pub(crate) fn is_tvar(&self, n: &str) -> bool {
        self.tvars.iter().any(|v| v == n)
    }

    /// One unfolding step of a user-defined name, a `rec` type or a type
    /// member. External widget names are nominal and do not unfold.
    pub fn unfold(&self, t: &Type) -> Option<Type> {
        match t {
            Type::Var(n) if !self.is_tvar(n) => {
                let d = self.typedefs.get(n)?;
                d.params.is_empty().then(|| d.body.clone())
            }
            Type::App(n, args) if !self.is_tvar(n) => {
                let d = self.typedefs.get(n)?;
                if d.params.len() != args.len() {
                    return None;
                }
                let map: Vec<_> = d.params.iter().cloned().zip(args.iter().cloned()).collect();
                Some(d.body.subst(&map))
            }
            Type::Rec(x, body) => Some(body.subst(&[(x.clone(), t.clone())])),
            Type::Member(inner, x) => match self.whnf(inner) {
                Type::TypeRecord(fs) => fs.iter().find(|(n, _)| n == x).map(|(_, t)| t.clone()),
                _ => None,
            },
            _ => None,
        }
    }

    /// Unfolds until the head is a type constructor.
    pub fn whnf(&self, t: &Type) -> Type {
        let mut cur = t.clone();
        for _ in 0..MAX_UNFOLD {
            match self.unfold(&cur) {
                Some(next) => cur = next,
                None => break,
            }
        }
        cur
    }

    /// Recognizes `Button`, `DB[K,V]` and the other external widget types.
    pub fn external(&self, t: &Type) -> Option<(ExternalKind, Vec<Type>)> {
        let (n, args) = match t {
            Type::Var(n) => (n, Vec::new()),
            Type::App(n, args) => (n, args.clone()),
            _ => return None,
        };
        if self.is_tvar(n) || self.typedefs.contains_key(n) {
            return None;
        }
        let k = ExternalKind::from_type(n)?;
        (k.type_params().len() == args.len()).then_some((k, args))
    }

    /// The widget type a type denotes, if it denotes one.
    pub fn widget_view(&self, t: &Type) -> Option<WidgetType> {
        self.widget_view_at(t, 0)
    }

    fn widget_view_at(&self, t: &Type, depth: usize) -> Option<WidgetType> {
        let t = self.whnf(t);
        match &t {
            Type::Widget(w) => Some((**w).clone()),
            _ => {
                let (k, args) = self.external(&t)?;
                Some(k.widget_type(&args, &|a| self.raises_at(a, depth + 1)))
            }
        }
    }

    /// Events a value of this type may raise: those of a widget type, or
    /// of every branch of a union of widgets.
    pub fn raises_of(&self, t: &Type) -> EffectSet {
        self.raises_at(t, 0)
    }

    fn raises_at(&self, t: &Type, depth: usize) -> EffectSet {
        if depth > MAX_UNFOLD {
            return EffectSet::empty();
        }
        match self.whnf(t) {
            Type::Union(a, b) => self.raises_at(&a, depth + 1).union(&self.raises_at(&b, depth + 1)),
            other => self.widget_view_at(&other, depth).map(|w| w.raises).unwrap_or_default(),
        }
    }

    /// True when the type denotes a widget (or `Top`, or a union of them).
    pub fn is_widget_like(&self, t: &Type) -> bool {
        match self.whnf(t) {
            Type::Top => true,
            Type::Union(a, b) => self.is_widget_like(&a) && self.is_widget_like(&b),
            other => self.widget_view(&other).is_some(),
        }
    }

    /// Field of a record or widget type; widget fields are searched along
    /// the parent chain.
    pub fn field_type(&self, t: &Type, x: &str) -> Option<Type> {
        let mut cur = self.whnf(t);
        for _ in 0..MAX_UNFOLD {
            if let Type::Record(fs) = &cur {
                return fs.iter().find(|(n, _)| n == x).map(|(_, t)| t.clone());
            }
            let w = self.widget_view(&cur)?;
            if let Some((_, ft)) = w.fields.iter().find(|(n, _)| n == x) {
                return Some(ft.clone());
            }
            cur = self.whnf(&w.parent);
        }
        None
    }

    /// Whether a value of type `actual` may be used where `expected` is
    /// required.
    pub fn type_compatible(&self, expected: &Type, actual: &Type) -> bool {
        self.compat(expected, actual, &mut Vec::new())
    }

    fn compat(&self, exp: &Type, act: &Type, seen: &mut Vec<(Type, Type)>) -> bool {
        if exp == act {
            return true;
        }
        if let Type::Union(a, b) = act {
            return self.compat(exp, a, seen) && self.compat(exp, b, seen);
        }
        if let Type::Union(..) = exp {
            if exp.union_branches().into_iter().any(|b| self.compat(b, act, seen)) {
                return true;
            }
        }
        let (eu, au) = (self.unfold(exp), self.unfold(act));
        if eu.is_some() || au.is_some() {
            let key = (exp.clone(), act.clone());
            if seen.contains(&key) {
                return true;
            }
            seen.push(key);
            let e2 = eu.unwrap_or_else(|| exp.clone());
            let a2 = au.unwrap_or_else(|| act.clone());
            let r = self.compat(&e2, &a2, seen);
            seen.pop();
            return r;
        }
        match (exp, act) {
            (Type::Cmd(t, x), Type::Cmd(t2, x2)) => self.compat(t, t2, seen) && self.effects_sub(x2, x, seen),
            (Type::List(a), Type::List(b)) => self.compat(a, b, seen),
            (Type::Loc(a), Type::Loc(b)) => self.compat(a, b, seen) && self.compat(b, a, seen),
            (Type::Record(fs), Type::Record(gs)) => {
                fs.iter().all(|(n, t)| gs.iter().find(|(m, _)| m == n).is_some_and(|(_, g)| self.compat(t, g, seen)))
            }
            (Type::Fun(ps, r), Type::Fun(qs, s)) => {
                ps.len() == qs.len()
                    && ps.iter().zip(qs).all(|(p, q)| self.compat(p, q, seen) && self.compat(q, p, seen))
                    && self.compat(r, s, seen)
            }
            (Type::Forall(xs, b), Type::Forall(ys, c)) => {
                if xs.len() != ys.len() {
                    return false;
                }
                let fresh: Vec<Type> = (0..xs.len()).map(|i| Type::Var(format!("%{i}"))).collect();
                let m1: Vec<_> = xs.iter().cloned().zip(fresh.iter().cloned()).collect();
                let m2: Vec<_> = ys.iter().cloned().zip(fresh.iter().cloned()).collect();
                self.compat(&b.subst(&m1), &c.subst(&m2), seen)
            }
            _ => {
                if let (Some((k1, a1)), Some((k2, a2))) = (self.external(exp), self.external(act)) {
                    if k1 == k2 && a1.iter().zip(&a2).all(|(p, q)| self.compat(p, q, seen) && self.compat(q, p, seen)) {
                        return true;
                    }
                }
                let Some(wa) = self.widget_view(act) else { return false };
                if let Type::Widget(we) = exp {
                    if self.widget_compat(we, &wa, seen) {
                        return true;
                    }
                }
                self.compat(exp, &wa.parent, seen)
            }
        }
    }

    fn widget_compat(&self, we: &WidgetType, wa: &WidgetType, seen: &mut Vec<(Type, Type)>) -> bool {
        self.compat(&we.parent, &wa.parent, seen)
            && self.effects_sub(&wa.raises, &we.raises, seen)
            && we.fields.iter().all(|(n, t)| {
                let found = match wa.fields.iter().find(|(m, _)| m == n) {
                    Some((_, ft)) => Some(ft.clone()),
                    None => self.field_type(&wa.parent, n),
                };
                found.is_some_and(|ft| self.compat(t, &ft, seen))
            })
    }

    fn effects_sub(&self, small: &EffectSet, big: &EffectSet, seen: &mut Vec<(Type, Type)>) -> bool {
        small.iter().all(|s| {
            big.get(&s.name, s.args.len()).is_some_and(|b| {
                b.args.iter().zip(&s.args).all(|(p, q)| self.compat(p, q, seen) && self.compat(q, p, seen))
            })
        })
    }

    /// `α ⊕ β`: commands merge their yields and effects; other types form
    /// a union. Equal types collapse.
    pub fn combine(&self, a: &Type, b: &Type) -> Result<Type, SignatureClash> {
        match (self.whnf(a), self.whnf(b)) {
            (Type::Cmd(t, x), Type::Cmd(t2, x2)) => Ok(Type::Cmd(Box::new(join(&t, &t2)), x.try_union(&x2)?)),
            _ => Ok(join(a, b)),
        }
    }

    /// Gives open command annotations the effects actually inferred. An
    /// annotation `<t>` with no `raises` clause written in a binding,
    /// definition or function-literal return position stands for `<t>`
    /// raising whatever its body raises.
    pub fn refine(&self, declared: &Type, actual: &Type) -> Type {
        match declared {
            Type::Cmd(t, x) if x.is_empty() => match self.whnf(actual) {
                Type::Cmd(_, x2) => Type::Cmd(t.clone(), x2),
                _ => declared.clone(),
            },
            Type::Fun(ps, r) => match self.whnf(actual) {
                Type::Fun(_, r2) => Type::Fun(ps.clone(), Box::new(self.refine(r, &r2))),
                _ => declared.clone(),
            },
            _ => declared.clone(),
        }
    }

    /// Checks `actual` against an annotation, returning the refined
    /// annotation.
    pub(crate) fn check_annot(
        &self,
        declared: &Type,
        actual: &Type,
        span: Span,
        what: &str,
    ) -> Result<Type, TypeError> {
        let refined = self.refine(declared, actual);
        if self.type_compatible(&refined, actual) {
            return Ok(refined);
        }
        let leaked = self.raises_of(actual).minus(&self.raises_of(&refined));
        let mut msg = format!("{what}: expected {declared}, found {actual}");
        if !leaked.is_empty() && self.widget_view(actual).is_some() {
            msg = format!("{what}: leaks unhandled event {leaked} (expected {declared})");
        } else if let (Type::Cmd(_, dx), Type::Cmd(_, ax)) = (self.whnf(&refined), self.whnf(actual)) {
            let extra = ax.minus(&dx);
            if !extra.is_empty() {
                msg = format!("{what}: raises undeclared event {extra} (expected {declared})");
            }
        }
        Err(TypeError::new(span, msg))
    }
}

/// Union of two types, dropping branches already present.
fn join(a: &Type, b: &Type) -> Type {
    if a == b {
        return a.clone();
    }
    let (ab, bb) = (a.union_branches(), b.union_branches());
    if bb.iter().all(|x| ab.contains(x)) {
        return a.clone();
    }
    if ab.iter().all(|x| bb.contains(x)) {
        return b.clone();
    }
    Type::union(a.clone(), b.clone())
}
