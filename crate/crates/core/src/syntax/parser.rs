//! Recursive-descent parser for programs, expressions and types.

use std::rc::Rc;

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::ParseError;
use crate::types::{EffectSet, EventSig, Type, WidgetType};

const KEYWORDS: &[&str] = &[
    "if", "then", "else", "fun", "let", "letrec", "in", "Fun", "fix", "raise", "do", "return", "widget", "top", "true",
    "false", "val", "type", "rec", "raises", "Widget", "Forall", "Top",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let mut p = Parser::new(src)?;
    let mut items = Vec::new();
    loop {
        while p.eat_sym(";") {}
        if p.at_eof() {
            break;
        }
        items.push(p.item()?);
    }
    Ok(Program::new(items))
}

pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(Rc::try_unwrap(e).unwrap_or_else(|rc| (*rc).clone()))
}

pub fn parse_type(src: &str) -> Result<Type, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.ty()?;
    p.expect_eof()?;
    Ok(t)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(src: &str) -> PResult<Self> {
        Ok(Parser { toks: lex(src)?, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    fn err<T>(&self, expected: &[&str]) -> PResult<T> {
        let sp = self.span();
        Err(ParseError {
            line: sp.line,
            col: sp.col,
            message: format!("unexpected {}", self.peek().describe()),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if self.is_kw(k) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(&[s])
        }
    }

    /// Accepts `>` also when the lexer glued it to a following `=`.
    fn expect_close_angle(&mut self) -> PResult<()> {
        if self.eat_sym(">") {
            return Ok(());
        }
        if self.is_sym(">=") {
            self.toks[self.pos].tok = Tok::Sym("=");
            let sp = &mut self.toks[self.pos].span;
            sp.col += 1;
            return Ok(());
        }
        self.err(&[">"])
    }

    fn expect_kw(&mut self, k: &str) -> PResult<()> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            self.err(&[k])
        }
    }

    fn expect_eof(&self) -> PResult<()> {
        if self.at_eof() {
            Ok(())
        } else {
            self.err(&["end of input"])
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek() {
            Tok::Ident(s) if !is_keyword(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => self.err(&["identifier"]),
        }
    }

    /// Field names may be keywords (`contact.val`).
    fn field_name(&mut self) -> PResult<String> {
        match self.peek() {
            Tok::Ident(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => self.err(&["field name"]),
        }
    }

    fn is_ident(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if !is_keyword(s))
    }

    // ---- items ----

    fn item(&mut self) -> PResult<Item> {
        let span = self.span();
        if self.eat_kw("rec") {
            self.expect_kw("fun")?;
            return self.fun_item(span, true);
        }
        if self.eat_kw("fun") {
            return self.fun_item(span, false);
        }
        if self.eat_kw("val") {
            let name = self.ident()?;
            let ty = if self.eat_sym(":") { Some(self.ty()?) } else { None };
            self.expect_sym("=")?;
            let body = self.expr()?;
            return Ok(Item::Val(ValDef { name, ty, body, span }));
        }
        if self.eat_kw("type") {
            let name = self.ident()?;
            let mut params = Vec::new();
            if self.eat_sym("[") {
                params = self.ident_list("]")?;
            }
            self.expect_sym("=")?;
            let body = self.ty()?;
            return Ok(Item::Type(TypeDef { name, params, body, span }));
        }
        self.err(&["fun", "rec", "val", "type"])
    }

    fn fun_item(&mut self, span: Span, rec_kw: bool) -> PResult<Item> {
        let name = self.ident()?;
        self.expect_sym("(")?;
        let params = self.params()?;
        self.expect_sym(":")?;
        let ret = self.ty()?;
        self.expect_sym("=")?;
        let body = self.expr()?;
        Ok(Item::Fun(FunDef { name, params, ret, body, rec_kw, span }))
    }

    /// Parameters after the opening parenthesis, through `)`.
    fn params(&mut self) -> PResult<Vec<Param>> {
        let mut ps = Vec::new();
        if self.eat_sym(")") {
            return Ok(ps);
        }
        loop {
            let name = self.ident()?;
            self.expect_sym(":")?;
            let ty = self.ty()?;
            ps.push(Param { name, ty });
            if self.eat_sym(")") {
                return Ok(ps);
            }
            self.expect_sym(",")?;
        }
    }

    fn ident_list(&mut self, close: &str) -> PResult<Vec<String>> {
        let mut xs = Vec::new();
        if self.eat_sym(close) {
            return Ok(xs);
        }
        loop {
            xs.push(self.ident()?);
            if self.eat_sym(close) {
                return Ok(xs);
            }
            self.expect_sym(",")?;
        }
    }

    // ---- types ----

    pub fn ty(&mut self) -> PResult<Type> {
        let mut t = self.ty_prefix()?;
        while self.eat_sym("+") {
            let rhs = self.ty_prefix()?;
            t = Type::union(t, rhs);
        }
        Ok(t)
    }

    fn ty_prefix(&mut self) -> PResult<Type> {
        if self.eat_sym("!") {
            return Ok(Type::Loc(Box::new(self.ty_prefix()?)));
        }
        if self.eat_kw("rec") {
            let x = self.ident()?;
            self.expect_sym(".")?;
            let body = self.ty()?;
            return Ok(Type::Rec(x, Box::new(body)));
        }
        if self.eat_kw("Forall") {
            self.expect_sym("(")?;
            let xs = self.ident_list(")")?;
            let body = self.ty()?;
            return Ok(Type::Forall(xs, Box::new(body)));
        }
        let mut t = self.ty_atom()?;
        while self.is_sym(".") {
            self.bump();
            let x = self.field_name()?;
            t = Type::Member(Box::new(t), x);
        }
        Ok(t)
    }

    fn ty_list(&mut self, close: &str) -> PResult<Vec<Type>> {
        let mut ts = Vec::new();
        if self.eat_sym(close) {
            return Ok(ts);
        }
        loop {
            ts.push(self.ty()?);
            if self.eat_sym(close) {
                return Ok(ts);
            }
            self.expect_sym(",")?;
        }
    }

    fn raises(&mut self) -> PResult<EffectSet> {
        let mut set = EffectSet::empty();
        if !self.eat_kw("raises") {
            return Ok(set);
        }
        loop {
            let name = self.ident()?;
            self.expect_sym("(")?;
            let args = self.ty_list(")")?;
            set.try_insert(EventSig::new(name, args)).map_err(|c| {
                let sp = self.span();
                ParseError {
                    line: sp.line,
                    col: sp.col,
                    message: format!("conflicting event signatures {} and {}", c.first, c.second),
                    expected: vec![],
                }
            })?;
            let more = self.is_sym(",")
                && matches!(self.peek_at(1), Tok::Ident(s) if !is_keyword(s))
                && matches!(self.peek_at(2), Tok::Sym("("));
            if !more {
                return Ok(set);
            }
            self.bump();
        }
    }

    fn ty_fields(&mut self, sep_is_eq: bool) -> PResult<Vec<(String, Type)>> {
        let mut fs = Vec::new();
        loop {
            if self.eat_sym("}") {
                return Ok(fs);
            }
            let name = self.field_name()?;
            self.expect_sym(if sep_is_eq { "=" } else { ":" })?;
            fs.push((name, self.ty()?));
            if !self.eat_sym(";") && !self.is_sym("}") {
                return self.err(&[";", "}"]);
            }
        }
    }

    fn ty_atom(&mut self) -> PResult<Type> {
        match self.peek().clone() {
            Tok::Sym("*") => {
                self.bump();
                Ok(Type::Unit)
            }
            Tok::Sym("[") => {
                self.bump();
                let t = self.ty()?;
                self.expect_sym("]")?;
                Ok(Type::list(t))
            }
            Tok::Sym("{") => {
                self.bump();
                if self.eat_sym("{") {
                    let fs = self.ty_fields(true)?;
                    self.expect_sym("}")?;
                    Ok(Type::TypeRecord(fs))
                } else {
                    Ok(Type::Record(self.ty_fields(false)?))
                }
            }
            Tok::Sym("<") => {
                self.bump();
                let t = self.ty()?;
                self.expect_close_angle()?;
                let x = self.raises()?;
                Ok(Type::Cmd(Box::new(t), x))
            }
            Tok::Sym("(") => {
                self.bump();
                let ts = self.ty_list(")")?;
                if self.eat_sym("->") {
                    let r = self.ty()?;
                    Ok(Type::fun(ts, r))
                } else if ts.len() == 1 {
                    Ok(ts.into_iter().next().unwrap())
                } else {
                    self.err(&["->"])
                }
            }
            Tok::Ident(s) => match s.as_str() {
                "str" => {
                    self.bump();
                    Ok(Type::Str)
                }
                "int" => {
                    self.bump();
                    Ok(Type::Int)
                }
                "bool" => {
                    self.bump();
                    Ok(Type::Bool)
                }
                "Top" => {
                    self.bump();
                    Ok(Type::Top)
                }
                "Widget" => {
                    self.bump();
                    self.expect_sym("(")?;
                    let parent = self.ty()?;
                    self.expect_sym(")")?;
                    let raises = self.raises()?;
                    self.expect_sym("{")?;
                    let fields = self.ty_fields(false)?;
                    Ok(Type::Widget(Box::new(WidgetType { parent, raises, fields })))
                }
                _ if !is_keyword(&s) => {
                    self.bump();
                    if self.eat_sym("[") {
                        let args = self.ty_list("]")?;
                        Ok(Type::App(s, args))
                    } else {
                        Ok(Type::Var(s))
                    }
                }
                _ => self.err(&["type"]),
            },
            _ => self.err(&["type"]),
        }
    }

    // ---- expressions ----

    pub fn expr(&mut self) -> PResult<Rc<Expr>> {
        let span = self.span();
        if self.eat_kw("if") {
            let c = self.expr()?;
            self.expect_kw("then")?;
            let a = self.expr()?;
            self.expect_kw("else")?;
            let b = self.expr()?;
            return Ok(Expr::rc(ExprKind::If(c, a, b), span));
        }
        if self.is_kw("fun") {
            self.bump();
            self.expect_sym("(")?;
            let params = self.params()?;
            self.expect_sym(":")?;
            let ret = self.ty()?;
            let body = self.expr()?;
            return Ok(Expr::rc(ExprKind::Fun(Rc::new(FunExpr { params, ret, body })), span));
        }
        if self.eat_kw("let") {
            let x = self.ident()?;
            self.expect_sym(":")?;
            let t = self.ty()?;
            self.expect_sym("=")?;
            let e1 = self.expr()?;
            self.expect_kw("in")?;
            let e2 = self.expr()?;
            return Ok(Expr::rc(ExprKind::Let(x, t, e1, e2), span));
        }
        if self.eat_kw("letrec") {
            let mut bs = Vec::new();
            loop {
                let name = self.ident()?;
                self.expect_sym(":")?;
                let ty = self.ty()?;
                self.expect_sym("=")?;
                let expr = self.expr()?;
                bs.push(RecBinding { name, ty, expr });
                self.eat_sym(";");
                if self.eat_kw("in") {
                    break;
                }
                if !self.is_ident() {
                    return self.err(&["in", "identifier"]);
                }
            }
            let body = self.expr()?;
            return Ok(Expr::rc(ExprKind::LetRec(bs, body), span));
        }
        if self.eat_kw("Fun") {
            self.expect_sym("[")?;
            let xs = self.ident_list("]")?;
            let body = self.expr()?;
            return Ok(Expr::rc(ExprKind::TyAbs(xs, body), span));
        }
        self.binary(1)
    }

    /// Expression without a top-level `=`, used for record field values.
    fn expr_no_eq(&mut self) -> PResult<Rc<Expr>> {
        if self.is_kw("if") || self.is_kw("fun") || self.is_kw("let") || self.is_kw("letrec") || self.is_kw("Fun") {
            return self.expr();
        }
        self.binary(2)
    }

    fn binop_here(&self) -> Option<BinOp> {
        match self.peek() {
            Tok::Sym("+") => Some(BinOp::Add),
            Tok::Sym("-") => Some(BinOp::Sub),
            Tok::Sym("*") => Some(BinOp::Mul),
            Tok::Sym("=") => Some(BinOp::Eq),
            Tok::Sym("<") => Some(BinOp::Lt),
            Tok::Sym("<=") => Some(BinOp::Le),
            Tok::Sym(">") => Some(BinOp::Gt),
            Tok::Sym(">=") => Some(BinOp::Ge),
            _ => None,
        }
    }

    fn binary(&mut self, min_level: u8) -> PResult<Rc<Expr>> {
        let mut lhs = self.postfix()?;
        while let Some(op) = self.binop_here() {
            if op.level() < min_level {
                break;
            }
            let span = self.span();
            self.bump();
            let rhs = self.binary(op.level() + 1)?;
            lhs = Expr::rc(ExprKind::Binary(op, lhs, rhs), span);
        }
        Ok(lhs)
    }

    fn args(&mut self) -> PResult<Vec<Rc<Expr>>> {
        let mut args = Vec::new();
        if self.eat_sym(")") {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if self.eat_sym(")") {
                return Ok(args);
            }
            self.expect_sym(",")?;
        }
    }

    fn postfix(&mut self) -> PResult<Rc<Expr>> {
        let mut e = self.primary()?;
        loop {
            let span = self.span();
            if self.eat_sym("(") {
                let args = self.args()?;
                e = Expr::rc(ExprKind::App(e, args), span);
            } else if self.eat_sym(".") {
                let x = self.field_name()?;
                e = Expr::rc(ExprKind::Field(e, x), span);
            } else if self.eat_sym("[") {
                let ts = self.ty_list("]")?;
                e = Expr::rc(ExprKind::TyApp(e, ts), span);
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> PResult<Rc<Expr>> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::rc(ExprKind::Const(Const::Int(n)), span))
            }
            Tok::Sym("-") if matches!(self.peek_at(1), Tok::Int(_)) => {
                self.bump();
                let Tok::Int(n) = self.bump() else { unreachable!() };
                Ok(Expr::rc(ExprKind::Const(Const::Int(-n)), span))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::rc(ExprKind::Const(Const::Str(s)), span))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Sym("[") => {
                self.bump();
                if self.eat_sym("]") {
                    if !self.eat_sym("[") {
                        return self.err(&["[ (element type of the empty list)"]);
                    }
                    let t = self.ty()?;
                    self.expect_sym("]")?;
                    return Ok(Expr::rc(ExprKind::EmptyList(t), span));
                }
                let mut es = Vec::new();
                loop {
                    es.push(self.expr()?);
                    if self.eat_sym("]") {
                        break;
                    }
                    self.expect_sym(",")?;
                }
                Ok(Expr::rc(ExprKind::List(es), span))
            }
            Tok::Sym("{") => {
                self.bump();
                let mut fs = Vec::new();
                loop {
                    if self.eat_sym("}") {
                        break;
                    }
                    let name = self.field_name()?;
                    self.expect_sym("=")?;
                    fs.push((name, self.expr_no_eq()?));
                    if !self.eat_sym(";") && !self.is_sym("}") {
                        return self.err(&[";", "}"]);
                    }
                }
                Ok(Expr::rc(ExprKind::Record(fs), span))
            }
            Tok::Ident(s) => match s.as_str() {
                "true" | "false" => {
                    self.bump();
                    Ok(Expr::rc(ExprKind::Const(Const::Bool(s == "true")), span))
                }
                "top" => {
                    self.bump();
                    Ok(Expr::rc(ExprKind::Top, span))
                }
                "fix" => {
                    self.bump();
                    self.expect_sym("(")?;
                    let e = self.expr()?;
                    self.expect_sym(")")?;
                    Ok(Expr::rc(ExprKind::Fix(e), span))
                }
                "raise" => {
                    self.bump();
                    let name = self.ident()?;
                    self.expect_sym("(")?;
                    let args = self.args()?;
                    Ok(Expr::rc(ExprKind::Raise(name, args), span))
                }
                "do" => {
                    self.bump();
                    self.do_block(span)
                }
                "widget" => {
                    self.bump();
                    self.widget(span)
                }
                _ if !is_keyword(&s) => {
                    self.bump();
                    Ok(Expr::rc(ExprKind::Var(s), span))
                }
                _ => self.err(&["expression"]),
            },
            _ => self.err(&["expression"]),
        }
    }

    fn binding(&mut self) -> PResult<Binding> {
        let span = self.span();
        let name = self.ident()?;
        self.expect_sym(":")?;
        let ty = self.ty()?;
        let kind = if self.eat_sym("<-") {
            BindKind::Perform
        } else if self.eat_sym("=") {
            BindKind::Value
        } else {
            return self.err(&["<-", "="]);
        };
        let expr = self.expr()?;
        Ok(Binding { name, ty, kind, expr, span })
    }

    fn do_block(&mut self, span: Span) -> PResult<Rc<Expr>> {
        self.expect_sym("{")?;
        let mut bindings = Vec::new();
        loop {
            if self.eat_kw("return") {
                break;
            }
            if !self.is_ident() {
                return self.err(&["return", "binding"]);
            }
            bindings.push(self.binding()?);
            self.eat_sym(";");
        }
        let ret = self.expr()?;
        self.eat_sym(";");
        self.expect_sym("}")?;
        Ok(Expr::rc(ExprKind::Do(Rc::new(DoBlock { bindings, ret })), span))
    }

    fn widget(&mut self, span: Span) -> PResult<Rc<Expr>> {
        let mut self_name = ANON_SELF.to_string();
        let mut self_ty = None;
        if self.is_ident() {
            self_name = self.ident()?;
            if self.eat_sym(":") {
                self_ty = Some(self.ty()?);
            }
        }
        self.expect_sym("(")?;
        let parent = self.expr()?;
        self.expect_sym(")")?;
        self.expect_sym("{")?;
        let mut defs = Vec::new();
        loop {
            while self.eat_sym(";") {}
            if self.eat_sym("}") {
                break;
            }
            if !self.is_ident() {
                return self.err(&["definition", "}"]);
            }
            if matches!(self.peek_at(1), Tok::Sym("(")) {
                let dspan = self.span();
                let name = self.ident()?;
                self.expect_sym("(")?;
                let params = self.params()?;
                self.expect_sym(":")?;
                let ret = self.ty()?;
                self.expect_sym("=")?;
                let body = self.expr()?;
                defs.push(WidgetDef::Handler(HandlerDef { name, params, ret, body, span: dspan }));
            } else {
                defs.push(WidgetDef::Bind(self.binding()?));
            }
        }
        Ok(Expr::rc(ExprKind::Widget(Rc::new(WidgetExpr { self_name, self_ty, parent, defs })), span))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_of_operators() {
        let e = parse_expr("a + b * c = d").unwrap();
        let ExprKind::Binary(BinOp::Eq, lhs, _) = &e.kind else { panic!("{e:?}") };
        let ExprKind::Binary(BinOp::Add, _, m) = &lhs.kind else { panic!() };
        assert!(matches!(m.kind, ExprKind::Binary(BinOp::Mul, ..)));
    }

    #[test]
    fn postfix_chain() {
        let e = parse_expr("n.move(x,y)").unwrap();
        let ExprKind::App(f, args) = &e.kind else { panic!() };
        assert!(matches!(&f.kind, ExprKind::Field(_, m) if m == "move"));
        assert_eq!(args.len(), 2);
    }

    #[test]
    fn typed_empty_list_and_instantiation() {
        let e = parse_expr("head[Record](contacts) = [][Record]").unwrap();
        let ExprKind::Binary(_, l, r) = &e.kind else { panic!() };
        assert!(matches!(&l.kind, ExprKind::App(f, _) if matches!(f.kind, ExprKind::TyApp(..))));
        assert_eq!(r.kind, ExprKind::EmptyList(Type::var("Record")));
    }

    #[test]
    fn empty_list_requires_type() {
        assert!(parse_expr("[]").is_err());
    }

    #[test]
    fn command_type_with_raises() {
        let t = parse_type("Widget(Button) raises add() { push:(int)-><*> raises add() }").unwrap();
        let Type::Widget(w) = t else { panic!() };
        assert_eq!(w.raises.len(), 1);
        let (_, push) = &w.fields[0];
        assert_eq!(
            *push,
            Type::fun(vec![Type::Int], Type::cmd_raising(Type::Unit, EffectSet::single(EventSig::new("add", vec![]))))
        );
    }

    #[test]
    fn raises_list_stops_before_next_parameter_type() {
        let t = parse_type("(<int> raises a(), int)->int").unwrap();
        let Type::Fun(ps, _) = t else { panic!() };
        assert_eq!(ps.len(), 2);
    }

    #[test]
    fn glued_close_angle_and_equals() {
        let p = parse_program("val x:<int>= do { return 1 }").unwrap();
        assert_eq!(p.items.len(), 1);
    }

    #[test]
    fn syntax_error_reports_position_and_expectation() {
        let err = parse_program("fun f(x:int):int =\n  if x then").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(!err.expected.is_empty());
    }

    #[test]
    fn anonymous_self() {
        let e = parse_expr("widget (button('a')) {}").unwrap();
        let ExprKind::Widget(w) = &e.kind else { panic!() };
        assert_eq!(w.self_name, ANON_SELF);
    }
}
