use std::collections::HashSet;

use super::lexer::{lex, Tok, Token};
use super::{
    Arrow, BranchExpr, GlobalDef, LocalDef, Param, ParamKind, PayloadExpr, ProcDef, ProtocolFile, SessionSpec,
    SortDecl, SurfaceError, TypeExpr,
};
use crate::ast::Role;
use crate::typecheck::{Expr, Pos, ProcessTerm, RecvArm, Term};

type PResult<T> = Result<T, SurfaceError>;

/// Parses a whole `.mpst` file. Syntax errors stop at the first offending
/// token; duplicate definitions are all reported.
pub fn parse_protocol_file(text: &str) -> Result<ProtocolFile, Vec<SurfaceError>> {
    let toks = lex(text).map_err(|e| vec![SurfaceError::Lex { pos: e.pos, message: e.message }])?;
    let mut p = Parser { toks, i: 0 };
    let file = p.file().map_err(|e| vec![e])?;
    let dups = duplicates(&file);
    if dups.is_empty() {
        Ok(file)
    } else {
        Err(dups)
    }
}

fn duplicates(file: &ProtocolFile) -> Vec<SurfaceError> {
    let mut errors = Vec::new();
    let mut check = |kind: &'static str, items: Vec<(&String, Pos)>| {
        let mut seen = HashSet::new();
        for (name, pos) in items {
            if !seen.insert(name.clone()) {
                errors.push(SurfaceError::Duplicate { pos, kind, name: name.clone() });
            }
        }
    };
    check("sort", file.sorts.iter().map(|s| (&s.name, s.pos)).collect());
    check("global type", file.globals.iter().map(|g| (&g.name, g.pos)).collect());
    check("local type", file.locals.iter().map(|l| (&l.name, l.pos)).collect());
    check("process", file.procs.iter().map(|p| (&p.name, p.pos)).collect());
    for g in &file.globals {
        check("parameter", g.params.iter().map(|p| (&p.name, g.pos)).collect());
    }
    for p in &file.procs {
        check("session variable", p.sessions.iter().map(|s| (&s.var, s.pos)).collect());
    }
    errors
}

const RESERVED: &[&str] = &["end", "rec", "send", "recv", "loop", "recur", "if", "else", "let"];

struct Parser {
    toks: Vec<Token>,
    i: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.i + n).min(self.toks.len() - 1)].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        Err(SurfaceError::Syntax {
            pos: self.pos(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().to_string(),
        })
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok) -> PResult<Token> {
        if self.peek() == t {
            Ok(self.bump())
        } else {
            self.error(&[&t.to_string()])
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn keyword(&mut self, kw: &str) -> PResult<Token> {
        if self.is_kw(kw) {
            Ok(self.bump())
        } else {
            self.error(&[&format!("`{kw}`")])
        }
    }

    fn ident(&mut self, what: &str) -> PResult<(String, Pos)> {
        match self.peek() {
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                let s = s.clone();
                let pos = self.pos();
                self.bump();
                Ok((s, pos))
            }
            _ => self.error(&[what]),
        }
    }

    fn file(&mut self) -> PResult<ProtocolFile> {
        let mut file = ProtocolFile::default();
        loop {
            match self.peek() {
                Tok::Eof => return Ok(file),
                Tok::Ident(kw) => match kw.as_str() {
                    "sort" => file.sorts.push(self.sort_decl()?),
                    "global" => file.globals.push(self.global_def()?),
                    "local" => file.locals.push(self.local_def()?),
                    "proc" => file.procs.push(self.proc_def()?),
                    _ => return self.error(&["`sort`", "`global`", "`local`", "`proc`"]),
                },
                _ => return self.error(&["`sort`", "`global`", "`local`", "`proc`"]),
            }
        }
    }

    fn sort_decl(&mut self) -> PResult<SortDecl> {
        let pos = self.keyword("sort")?.pos;
        let (name, _) = self.ident("sort name")?;
        let mut payload = PayloadExpr::None;
        if self.eat(&Tok::LParen) {
            payload = match self.peek() {
                Tok::Ident(s) if s == "int" => {
                    self.bump();
                    PayloadExpr::Int
                }
                Tok::Ident(s) if s == "string" => {
                    self.bump();
                    PayloadExpr::String
                }
                Tok::Ident(s) if s == "endpoint" => {
                    self.bump();
                    self.expect(&Tok::LBracket)?;
                    let (role, _) = self.ident("role")?;
                    self.expect(&Tok::Comma)?;
                    let proto = self.type_expr()?;
                    self.expect(&Tok::RBracket)?;
                    PayloadExpr::Endpoint { role, proto }
                }
                _ => return self.error(&["`int`", "`string`", "`endpoint`"]),
            };
            self.expect(&Tok::RParen)?;
        }
        self.expect(&Tok::Semi)?;
        Ok(SortDecl { pos, name, payload })
    }

    fn global_def(&mut self) -> PResult<GlobalDef> {
        let pos = self.keyword("global")?.pos;
        let (name, _) = self.ident("protocol name")?;
        let mut params = Vec::new();
        if self.eat(&Tok::LBracket) {
            loop {
                let (pname, _) = self.ident("parameter name")?;
                self.expect(&Tok::Colon)?;
                let kind = if self.is_kw("role") {
                    ParamKind::Role
                } else if self.is_kw("protocol") {
                    ParamKind::Protocol
                } else {
                    return self.error(&["`role`", "`protocol`"]);
                };
                self.bump();
                params.push(Param { name: pname, kind });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(&Tok::RBracket)?;
        }
        self.expect(&Tok::Eq)?;
        let body = self.type_expr()?;
        self.expect(&Tok::Semi)?;
        Ok(GlobalDef { pos, name, params, body })
    }

    fn local_def(&mut self) -> PResult<LocalDef> {
        let pos = self.keyword("local")?.pos;
        let (name, _) = self.ident("local type name")?;
        self.keyword("of")?;
        let of = self.type_ref()?;
        self.expect(&Tok::At)?;
        let (role, _) = self.ident("role")?;
        self.expect(&Tok::Eq)?;
        let body = self.type_expr()?;
        self.expect(&Tok::Semi)?;
        Ok(LocalDef { pos, name, of, role, body })
    }

    fn type_ref(&mut self) -> PResult<TypeExpr> {
        let (name, pos) = self.ident("protocol name")?;
        let args = self.type_args()?;
        Ok(TypeExpr::Ref { pos, name, args })
    }

    fn type_args(&mut self) -> PResult<Vec<TypeExpr>> {
        let mut args = Vec::new();
        if self.eat(&Tok::LBracket) {
            loop {
                args.push(self.type_expr()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(&Tok::RBracket)?;
        }
        Ok(args)
    }

    fn type_expr(&mut self) -> PResult<TypeExpr> {
        let pos = self.pos();
        if self.is_kw("end") {
            self.bump();
            return Ok(TypeExpr::End { pos });
        }
        if self.is_kw("rec") {
            self.bump();
            let (var, _) = self.ident("recursion variable")?;
            self.expect(&Tok::Dot)?;
            let body = self.type_expr()?;
            return Ok(TypeExpr::Rec { pos, var, body: Box::new(body) });
        }
        let (name, _) = match self.ident("type expression") {
            Ok(x) => x,
            Err(_) => return self.error(&["`end`", "`rec`", "role", "type name"]),
        };
        if self.eat(&Tok::Arrow) {
            let (to, _) = self.ident("role")?;
            let arrow = match self.peek() {
                Tok::Colon => Arrow::Global,
                Tok::Bang => Arrow::Send,
                Tok::Question => Arrow::Recv,
                _ => return self.error(&["`:`", "`!`", "`?`"]),
            };
            self.bump();
            let branches = self.branches()?;
            return Ok(TypeExpr::Com { pos, arrow, from: name, to, branches });
        }
        let args = self.type_args()?;
        Ok(TypeExpr::Ref { pos, name, args })
    }

    fn branches(&mut self) -> PResult<Vec<BranchExpr>> {
        if self.eat(&Tok::LBrace) {
            let mut out = vec![self.branch()?];
            while self.eat(&Tok::Comma) {
                out.push(self.branch()?);
            }
            self.expect(&Tok::RBrace)?;
            Ok(out)
        } else {
            Ok(vec![self.branch()?])
        }
    }

    fn branch(&mut self) -> PResult<BranchExpr> {
        let (sort, pos) = self.ident("sort name")?;
        self.expect(&Tok::Dot)?;
        let cont = self.type_expr()?;
        Ok(BranchExpr { pos, sort, cont })
    }

    fn proc_def(&mut self) -> PResult<ProcDef> {
        let head = self.keyword("proc")?;
        let (name, _) = self.ident("process name")?;
        self.keyword("plays")?;
        let mut sessions = Vec::new();
        loop {
            let (role, pos) = self.ident("role")?;
            self.keyword("in")?;
            let proto = self.type_ref()?;
            let var = if self.is_kw("as") {
                self.bump();
                self.ident("session variable")?.0
            } else {
                "s".to_string()
            };
            sessions.push(SessionSpec { pos, role, proto, var });
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(&Tok::LBrace)?;
        let default = sessions[0].var.clone();
        let body = self.process(&default)?;
        let close = self.expect(&Tok::RBrace)?;
        Ok(ProcDef { pos: head.pos, name, sessions, body, span: head.start..close.end })
    }

    fn at_process_end(&self) -> bool {
        matches!(self.peek(), Tok::RBrace | Tok::Comma | Tok::Eof)
    }

    fn process(&mut self, default: &str) -> PResult<ProcessTerm> {
        let pos = self.pos();
        if self.at_process_end() {
            return Ok(ProcessTerm::new(pos, Term::End));
        }
        let mut session = default.to_string();
        if let (Tok::Ident(x), Tok::Dot, Tok::Ident(kw)) = (self.peek(), self.peek_at(1), self.peek_at(2)) {
            if matches!(kw.as_str(), "send" | "recv" | "loop") {
                session = x.clone();
                self.bump();
                self.bump();
            }
        }
        let kw = match self.peek() {
            Tok::Ident(k) => k.clone(),
            _ => return self.error(&["process"]),
        };
        let term = match kw.as_str() {
            "end" => {
                self.bump();
                self.eat(&Tok::Semi);
                Term::End
            }
            "send" => {
                self.bump();
                let (to, _) = self.ident("role")?;
                let payload = self.expr()?;
                if !self.eat(&Tok::Semi) && !self.at_process_end() {
                    return self.error(&["`;`"]);
                }
                let cont = self.process(default)?;
                Term::Send { session, to: Role::new(to), payload, cont: Box::new(cont) }
            }
            "recv" => {
                self.bump();
                let (from, _) = self.ident("role")?;
                self.expect(&Tok::LBrace)?;
                let mut arms = vec![self.arm(default)?];
                while self.eat(&Tok::Comma) {
                    arms.push(self.arm(default)?);
                }
                self.expect(&Tok::RBrace)?;
                Term::Recv { session, from: Role::new(from), arms }
            }
            "loop" => {
                self.bump();
                let (label, _) = self.ident("loop label")?;
                self.expect(&Tok::LBrace)?;
                let body = self.process(default)?;
                self.expect(&Tok::RBrace)?;
                Term::Loop { session, label, body: Box::new(body) }
            }
            "recur" => {
                self.bump();
                let (label, _) = self.ident("loop label")?;
                let mut session = None;
                if self.eat(&Tok::LParen) {
                    session = Some(self.ident("session variable")?.0);
                    self.expect(&Tok::RParen)?;
                }
                let mut cont = None;
                if self.eat(&Tok::Semi) && !self.at_process_end() {
                    cont = Some(Box::new(self.process(default)?));
                }
                Term::Recur { label, session, cont }
            }
            "if" => {
                self.bump();
                let cond = self.expr()?;
                self.expect(&Tok::LBrace)?;
                let then = self.process(default)?;
                self.expect(&Tok::RBrace)?;
                self.keyword("else")?;
                self.expect(&Tok::LBrace)?;
                let els = self.process(default)?;
                self.expect(&Tok::RBrace)?;
                Term::If { cond, then: Box::new(then), els: Box::new(els) }
            }
            "let" => {
                self.bump();
                let (name, _) = self.ident("variable")?;
                self.expect(&Tok::Eq)?;
                let value = self.expr()?;
                self.expect(&Tok::Semi)?;
                let cont = self.process(default)?;
                Term::Let { name, value, cont: Box::new(cont) }
            }
            _ => return self.error(&["`send`", "`recv`", "`loop`", "`recur`", "`end`", "`if`", "`let`"]),
        };
        Ok(ProcessTerm::new(pos, term))
    }

    fn arm(&mut self, default: &str) -> PResult<RecvArm> {
        let (sort, pos) = self.ident("sort name")?;
        let mut var = None;
        if self.eat(&Tok::LParen) {
            let (v, _) = self.ident("variable")?;
            if v != "_" {
                var = Some(v);
            }
            self.expect(&Tok::RParen)?;
        }
        self.expect(&Tok::Arrow)?;
        let body = self.process(default)?;
        Ok(RecvArm { pos, sort, var, body })
    }

    fn expr(&mut self) -> PResult<Expr> {
        let lhs = self.sum()?;
        if self.eat(&Tok::Lt) {
            let rhs = self.sum()?;
            return Ok(Expr::Lt(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn sum(&mut self) -> PResult<Expr> {
        let mut lhs = self.postfix()?;
        while self.eat(&Tok::Minus) {
            let rhs = self.postfix()?;
            lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.atom()?;
        while self.peek() == &Tok::Dot && matches!(self.peek_at(1), Tok::Ident(_)) {
            self.bump();
            let (field, _) = self.ident("field name")?;
            e = Expr::Field { base: Box::new(e), field };
        }
        Ok(e)
    }

    fn atom(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::Int(n))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Str(s))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(&Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(_) => {
                let (name, _) = self.ident("expression")?;
                if name.starts_with(|c: char| c.is_ascii_uppercase()) {
                    let mut args = Vec::new();
                    if self.eat(&Tok::LParen) {
                        if self.peek() != &Tok::RParen {
                            loop {
                                args.push(self.expr()?);
                                if !self.eat(&Tok::Comma) {
                                    break;
                                }
                            }
                        }
                        self.expect(&Tok::RParen)?;
                    }
                    Ok(Expr::NewSort { sort: name, args })
                } else {
                    Ok(Expr::Var(name))
                }
            }
            _ => self.error(&["expression"]),
        }
    }
}
