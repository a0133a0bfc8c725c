use std::rc::Rc;

use crate::types::Type;

/// Source position (1-based). Positions never take part in AST equality,
/// so a re-parsed tree compares equal to the original.
#[derive(Clone, Copy, Debug, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Span {
    pub fn new(line: u32, col: u32) -> Self {
        Span { line, col }
    }
}

/// Name given to a widget's self reference when the source omits it. It is
/// not a legal identifier, so it can never clash with a user name.
pub const ANON_SELF: &str = "%self";

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Const {
    Str(String),
    Int(i64),
    Bool(bool),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Lt,
    Le,
    Gt,
    Ge,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn level(self) -> u8 {
        match self {
            BinOp::Eq => 1,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 2,
            BinOp::Add | BinOp::Sub => 3,
            BinOp::Mul => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Var(String),
    Const(Const),
    List(Vec<Rc<Expr>>),
    /// `[][t]`
    EmptyList(Type),
    Record(Vec<(String, Rc<Expr>)>),
    Field(Rc<Expr>, String),
    Fun(Rc<FunExpr>),
    App(Rc<Expr>, Vec<Rc<Expr>>),
    If(Rc<Expr>, Rc<Expr>, Rc<Expr>),
    Fix(Rc<Expr>),
    Raise(String, Vec<Rc<Expr>>),
    Do(Rc<DoBlock>),
    Widget(Rc<WidgetExpr>),
    Top,
    /// `Fun[x,...] e`
    TyAbs(Vec<String>, Rc<Expr>),
    /// `e[t,...]`
    TyApp(Rc<Expr>, Vec<Type>),
    Binary(BinOp, Rc<Expr>, Rc<Expr>),
    Let(String, Type, Rc<Expr>, Rc<Expr>),
    /// Surface form only; removed by desugaring.
    LetRec(Vec<RecBinding>, Rc<Expr>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: Type,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FunExpr {
    pub params: Vec<Param>,
    pub ret: Type,
    pub body: Rc<Expr>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BindKind {
    /// `x:t <- e` performs the command `e`.
    Perform,
    /// `x:t = e`, sugar for `x:t <- do { return e }`.
    Value,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Binding {
    pub name: String,
    pub ty: Type,
    pub kind: BindKind,
    pub expr: Rc<Expr>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DoBlock {
    pub bindings: Vec<Binding>,
    pub ret: Rc<Expr>,
}

/// `x(p:t,...):t = e` inside a widget body.
#[derive(Clone, Debug, PartialEq)]
pub struct HandlerDef {
    pub name: String,
    pub params: Vec<Param>,
    pub ret: Type,
    pub body: Rc<Expr>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum WidgetDef {
    Bind(Binding),
    /// Surface form only; removed by desugaring.
    Handler(HandlerDef),
}

impl WidgetDef {
    pub fn name(&self) -> &str {
        match self {
            WidgetDef::Bind(b) => &b.name,
            WidgetDef::Handler(h) => &h.name,
        }
    }

    pub fn span(&self) -> Span {
        match self {
            WidgetDef::Bind(b) => b.span,
            WidgetDef::Handler(h) => h.span,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WidgetExpr {
    pub self_name: String,
    pub self_ty: Option<Type>,
    pub parent: Rc<Expr>,
    pub defs: Vec<WidgetDef>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecBinding {
    pub name: String,
    pub ty: Type,
    pub expr: Rc<Expr>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FunDef {
    pub name: String,
    pub params: Vec<Param>,
    pub ret: Type,
    pub body: Rc<Expr>,
    /// Written with a leading `rec`; all top-level definitions are
    /// recursive regardless.
    pub rec_kw: bool,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValDef {
    pub name: String,
    pub ty: Option<Type>,
    pub body: Rc<Expr>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TypeDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: Type,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Item {
    Fun(FunDef),
    Val(ValDef),
    Type(TypeDef),
}

impl Item {
    pub fn name(&self) -> &str {
        match self {
            Item::Fun(f) => &f.name,
            Item::Val(v) => &v.name,
            Item::Type(t) => &t.name,
        }
    }

    pub fn span(&self) -> Span {
        match self {
            Item::Fun(f) => f.span,
            Item::Val(v) => v.span,
            Item::Type(t) => t.span,
        }
    }
}

pub const DEFAULT_ENTRY: &str = "main";

#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    pub items: Vec<Item>,
    /// Name of the definition whose command is run.
    pub entry: String,
}

impl Program {
    pub fn new(items: Vec<Item>) -> Self {
        Program { items, entry: DEFAULT_ENTRY.to_string() }
    }

    pub fn item(&self, name: &str) -> Option<&Item> {
        self.items.iter().find(|i| !matches!(i, Item::Type(_)) && i.name() == name)
    }

    pub fn type_def(&self, name: &str) -> Option<&TypeDef> {
        self.items.iter().find_map(|i| match i {
            Item::Type(t) if t.name == name => Some(t),
            _ => None,
        })
    }
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    pub fn rc(kind: ExprKind, span: Span) -> Rc<Expr> {
        Rc::new(Expr { kind, span })
    }

    /// True when the expression is in normal form.
    pub fn is_value(&self) -> bool {
        match &self.kind {
            ExprKind::Var(_)
            | ExprKind::Const(_)
            | ExprKind::EmptyList(_)
            | ExprKind::Fun(_)
            | ExprKind::Do(_)
            | ExprKind::Widget(_)
            | ExprKind::Top => true,
            ExprKind::List(es) => es.iter().all(|e| e.is_value()),
            ExprKind::Record(fs) => fs.iter().all(|(_, e)| e.is_value()),
            ExprKind::Raise(_, args) => args.iter().all(|e| e.is_value()),
            ExprKind::Field(..)
            | ExprKind::App(..)
            | ExprKind::If(..)
            | ExprKind::Fix(_)
            | ExprKind::TyAbs(..)
            | ExprKind::TyApp(..)
            | ExprKind::Binary(..)
            | ExprKind::Let(..)
            | ExprKind::LetRec(..) => false,
        }
    }

    /// Calls `f` on every direct sub-expression.
    pub fn for_each_child(&self, f: &mut dyn FnMut(&Rc<Expr>)) {
        match &self.kind {
            ExprKind::Var(_) | ExprKind::Const(_) | ExprKind::EmptyList(_) | ExprKind::Top => {}
            ExprKind::List(es) | ExprKind::Raise(_, es) => es.iter().for_each(f),
            ExprKind::Record(fs) => fs.iter().for_each(|(_, e)| f(e)),
            ExprKind::Field(e, _) | ExprKind::Fix(e) | ExprKind::TyAbs(_, e) | ExprKind::TyApp(e, _) => f(e),
            ExprKind::Fun(fx) => f(&fx.body),
            ExprKind::App(g, args) => {
                f(g);
                args.iter().for_each(f);
            }
            ExprKind::If(a, b, c) => {
                f(a);
                f(b);
                f(c);
            }
            ExprKind::Do(d) => {
                d.bindings.iter().for_each(|b| f(&b.expr));
                f(&d.ret);
            }
            ExprKind::Widget(w) => {
                f(&w.parent);
                for d in &w.defs {
                    match d {
                        WidgetDef::Bind(b) => f(&b.expr),
                        WidgetDef::Handler(h) => f(&h.body),
                    }
                }
            }
            ExprKind::Binary(_, a, b) | ExprKind::Let(_, _, a, b) => {
                f(a);
                f(b);
            }
            ExprKind::LetRec(bs, body) => {
                bs.iter().for_each(|b| f(&b.expr));
                f(body);
            }
        }
    }

    /// True if any node (this one included) satisfies `pred`.
    pub fn any(&self, pred: &dyn Fn(&Expr) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        let mut found = false;
        self.for_each_child(&mut |c| {
            if !found && c.any(pred) {
                found = true;
            }
        });
        found
    }

    /// Every identifier occurring in the expression, bound or free.
    pub fn collect_names(&self, out: &mut Vec<String>) {
        let mut push = |n: &str| {
            if !out.iter().any(|o| o == n) {
                out.push(n.to_string());
            }
        };
        match &self.kind {
            ExprKind::Var(x) => push(x),
            ExprKind::Fun(fx) => fx.params.iter().for_each(|p| push(&p.name)),
            ExprKind::Do(d) => d.bindings.iter().for_each(|b| push(&b.name)),
            ExprKind::Widget(w) => {
                push(&w.self_name);
                for d in &w.defs {
                    push(d.name());
                    if let WidgetDef::Handler(h) = d {
                        h.params.iter().for_each(|p| push(&p.name));
                    }
                }
            }
            ExprKind::Let(x, ..) => push(x),
            ExprKind::LetRec(bs, _) => bs.iter().for_each(|b| push(&b.name)),
            _ => {}
        }
        self.for_each_child(&mut |c| c.collect_names(out));
    }
}
