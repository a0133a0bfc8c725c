//! Type grammar of the calculus and the event-effect sets attached to
//! command and widget types.

use std::fmt;

/// A type expression.
#[derive(Clone, Debug, PartialEq)]
pub enum Type {
    Str,
    Int,
    Bool,
    /// The unit type `*` yielded by `raise`.
    Unit,
    Top,
    List(Box<Type>),
    Record(Vec<(String, Type)>),
    /// `<t> raises X`
    Cmd(Box<Type>, EffectSet),
    Union(Box<Type>, Box<Type>),
    Widget(Box<WidgetType>),
    Fun(Vec<Type>, Box<Type>),
    /// Type operator application `x[t,...]`.
    App(String, Vec<Type>),
    Rec(String, Box<Type>),
    /// Type variable or named type.
    Var(String),
    TypeRecord(Vec<(String, Type)>),
    Member(Box<Type>, String),
    Forall(Vec<String>, Box<Type>),
    Loc(Box<Type>),
}

/// `Widget(parent) raises X { fields }`
#[derive(Clone, Debug, PartialEq)]
pub struct WidgetType {
    pub parent: Type,
    pub raises: EffectSet,
    pub fields: Vec<(String, Type)>,
}

/// An event signature `x(t,...)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EventSig {
    pub name: String,
    pub args: Vec<Type>,
}

impl EventSig {
    pub fn new(name: impl Into<String>, args: Vec<Type>) -> Self {
        EventSig { name: name.into(), args }
    }

    pub fn key(&self) -> (&str, usize) {
        (&self.name, self.args.len())
    }
}

impl fmt::Display for EventSig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

/// Two signatures share a name and arity but disagree on argument types.
#[derive(Clone, Debug, PartialEq)]
pub struct SignatureClash {
    pub first: EventSig,
    pub second: EventSig,
}

/// A finite set of event signatures, kept sorted by (name, arity).
///
/// Membership is decided on name+arity; a set never holds two signatures
/// with the same key.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EffectSet(Vec<EventSig>);

impl EffectSet {
    pub fn empty() -> Self {
        EffectSet(Vec::new())
    }

    pub fn single(sig: EventSig) -> Self {
        EffectSet(vec![sig])
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &EventSig> {
        self.0.iter()
    }

    pub fn get(&self, name: &str, arity: usize) -> Option<&EventSig> {
        self.0.iter().find(|s| s.key() == (name, arity))
    }

    pub fn contains_key(&self, name: &str, arity: usize) -> bool {
        self.get(name, arity).is_some()
    }

    /// Inserts a signature, reporting a clash if the key is present with
    /// different argument types.
    pub fn try_insert(&mut self, sig: EventSig) -> Result<(), SignatureClash> {
        match self.0.binary_search_by(|s| (s.name.as_str(), s.args.len()).cmp(&sig.key())) {
            Ok(i) => {
                if self.0[i].args == sig.args {
                    Ok(())
                } else {
                    Err(SignatureClash { first: self.0[i].clone(), second: sig })
                }
            }
            Err(i) => {
                self.0.insert(i, sig);
                Ok(())
            }
        }
    }

    pub fn try_union(&self, other: &EffectSet) -> Result<EffectSet, SignatureClash> {
        let mut out = self.clone();
        for s in &other.0 {
            out.try_insert(s.clone())?;
        }
        Ok(out)
    }

    /// Union that keeps the first signature on a key clash.
    pub fn union(&self, other: &EffectSet) -> EffectSet {
        let mut out = self.clone();
        for s in &other.0 {
            let _ = out.try_insert(s.clone());
        }
        out
    }

    /// Removes every signature whose name and arity match `sig`.
    pub fn remove(&mut self, name: &str, arity: usize) -> Option<EventSig> {
        let i = self.0.iter().position(|s| s.key() == (name, arity))?;
        Some(self.0.remove(i))
    }

    pub fn minus(&self, other: &EffectSet) -> EffectSet {
        EffectSet(self.0.iter().filter(|s| !other.contains_key(&s.name, s.args.len())).cloned().collect())
    }

    pub fn names(&self) -> Vec<String> {
        self.0.iter().map(|s| s.to_string()).collect()
    }
}

impl FromIterator<EventSig> for EffectSet {
    fn from_iter<I: IntoIterator<Item = EventSig>>(iter: I) -> Self {
        let mut set = EffectSet::empty();
        for s in iter {
            let _ = set.try_insert(s);
        }
        set
    }
}

impl fmt::Display for EffectSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl Type {
    pub fn cmd(t: Type) -> Type {
        Type::Cmd(Box::new(t), EffectSet::empty())
    }

    pub fn cmd_raising(t: Type, x: EffectSet) -> Type {
        Type::Cmd(Box::new(t), x)
    }

    pub fn list(t: Type) -> Type {
        Type::List(Box::new(t))
    }

    pub fn fun(params: Vec<Type>, ret: Type) -> Type {
        Type::Fun(params, Box::new(ret))
    }

    pub fn union(a: Type, b: Type) -> Type {
        Type::Union(Box::new(a), Box::new(b))
    }

    pub fn var(name: &str) -> Type {
        Type::Var(name.to_string())
    }

    pub fn named(name: &str, args: Vec<Type>) -> Type {
        if args.is_empty() {
            Type::Var(name.to_string())
        } else {
            Type::App(name.to_string(), args)
        }
    }

    /// Flattens a union into its branches, left to right.
    pub fn union_branches(&self) -> Vec<&Type> {
        match self {
            Type::Union(a, b) => {
                let mut v = a.union_branches();
                v.extend(b.union_branches());
                v
            }
            t => vec![t],
        }
    }

    /// Free type variables (named types included).
    pub fn free_vars(&self, out: &mut Vec<String>) {
        match self {
            Type::Str | Type::Int | Type::Bool | Type::Unit | Type::Top => {}
            Type::List(t) | Type::Loc(t) => t.free_vars(out),
            Type::Record(fs) | Type::TypeRecord(fs) => fs.iter().for_each(|(_, t)| t.free_vars(out)),
            Type::Cmd(t, x) => {
                t.free_vars(out);
                x.iter().flat_map(|s| s.args.iter()).for_each(|a| a.free_vars(out));
            }
            Type::Union(a, b) => {
                a.free_vars(out);
                b.free_vars(out);
            }
            Type::Widget(w) => {
                w.parent.free_vars(out);
                w.raises.iter().flat_map(|s| s.args.iter()).for_each(|a| a.free_vars(out));
                w.fields.iter().for_each(|(_, t)| t.free_vars(out));
            }
            Type::Fun(ps, r) => {
                ps.iter().for_each(|p| p.free_vars(out));
                r.free_vars(out);
            }
            Type::App(n, args) => {
                if !out.contains(n) {
                    out.push(n.clone());
                }
                args.iter().for_each(|a| a.free_vars(out));
            }
            Type::Var(n) => {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
            Type::Member(t, _) => t.free_vars(out),
            Type::Rec(x, t) => {
                let mut inner = Vec::new();
                t.free_vars(&mut inner);
                for v in inner {
                    if &v != x && !out.contains(&v) {
                        out.push(v);
                    }
                }
            }
            Type::Forall(xs, t) => {
                let mut inner = Vec::new();
                t.free_vars(&mut inner);
                for v in inner {
                    if !xs.contains(&v) && !out.contains(&v) {
                        out.push(v);
                    }
                }
            }
        }
    }

    pub fn mentions(&self, name: &str) -> bool {
        let mut fv = Vec::new();
        self.free_vars(&mut fv);
        fv.iter().any(|v| v == name)
    }

    /// Capture-avoiding substitution of type variables.
    pub fn subst(&self, map: &[(String, Type)]) -> Type {
        if map.is_empty() {
            return self.clone();
        }
        let go = |t: &Type| t.subst(map);
        match self {
            Type::Str | Type::Int | Type::Bool | Type::Unit | Type::Top => self.clone(),
            Type::List(t) => Type::List(Box::new(go(t))),
            Type::Loc(t) => Type::Loc(Box::new(go(t))),
            Type::Record(fs) => Type::Record(fs.iter().map(|(n, t)| (n.clone(), go(t))).collect()),
            Type::TypeRecord(fs) => Type::TypeRecord(fs.iter().map(|(n, t)| (n.clone(), go(t))).collect()),
            Type::Cmd(t, x) => Type::Cmd(Box::new(go(t)), subst_effects(x, map)),
            Type::Union(a, b) => Type::union(go(a), go(b)),
            Type::Widget(w) => Type::Widget(Box::new(WidgetType {
                parent: go(&w.parent),
                raises: subst_effects(&w.raises, map),
                fields: w.fields.iter().map(|(n, t)| (n.clone(), go(t))).collect(),
            })),
            Type::Fun(ps, r) => Type::fun(ps.iter().map(go).collect(), go(r)),
            Type::App(n, args) => Type::App(n.clone(), args.iter().map(go).collect()),
            Type::Var(n) => match map.iter().find(|(k, _)| k == n) {
                Some((_, t)) => t.clone(),
                None => self.clone(),
            },
            Type::Member(t, x) => Type::Member(Box::new(go(t)), x.clone()),
            Type::Rec(x, body) => {
                let (binders, body) = rename_binders(std::slice::from_ref(x), body, map);
                let inner: Vec<_> = map.iter().filter(|(k, _)| !binders.contains(k)).cloned().collect();
                Type::Rec(binders[0].clone(), Box::new(body.subst(&inner)))
            }
            Type::Forall(xs, body) => {
                let (binders, body) = rename_binders(xs, body, map);
                let inner: Vec<_> = map.iter().filter(|(k, _)| !binders.contains(k)).cloned().collect();
                Type::Forall(binders, Box::new(body.subst(&inner)))
            }
        }
    }
}

fn subst_effects(x: &EffectSet, map: &[(String, Type)]) -> EffectSet {
    x.iter().map(|s| EventSig::new(s.name.clone(), s.args.iter().map(|a| a.subst(map)).collect())).collect()
}

/// Renames binders that would capture a free variable of the substitution.
fn rename_binders(xs: &[String], body: &Type, map: &[(String, Type)]) -> (Vec<String>, Type) {
    let mut captured = Vec::new();
    for (k, t) in map {
        if xs.contains(k) {
            continue;
        }
        t.free_vars(&mut captured);
    }
    let mut binders = Vec::with_capacity(xs.len());
    let mut renames = Vec::new();
    for x in xs {
        if captured.contains(x) {
            let mut i = 1;
            let fresh = loop {
                let cand = format!("{x}{i}");
                if !captured.contains(&cand) && !body.mentions(&cand) && !xs.contains(&cand) {
                    break cand;
                }
                i += 1;
            };
            renames.push((x.clone(), Type::Var(fresh.clone())));
            binders.push(fresh);
        } else {
            binders.push(x.clone());
        }
    }
    (binders, body.subst(&renames))
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::syntax::printer::print_type(self))
    }
}
