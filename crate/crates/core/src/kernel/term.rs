//! Applicative terms: parsing, bracket abstraction, evaluation.
//!
//! Grammar (source text accepted by [`parse_term`]):
//!
//! ```text
//! term  := '<' ident+ '>' term          abstraction, scope runs to the end
//!        | app
//! app   := atom atom*                   application, left-associative
//! atom  := 'k' | 's'
//!        | ident                        environment-bound name
//!        | set-literal                  fin{…}, cofin{…}, union(…,…), inter(…,…),
//!                                       comp(…), double(…), doubleplus1(…),
//!                                       prog(n), per(head=BITS;pattern=BITS)
//!        | 'stream' '(' stream-body ')' const c | poly c0 c1 … | periodic v0 v1 …
//!                                       | patch i:v … base stream-body
//!        | '(' term ')'
//! ```
//!
//! Abstraction is compiled away by bracket abstraction before evaluation:
//!
//! ```text
//! ⟨x⟩x        = s k k
//! ⟨x⟩c        = k c                for an atom c ≠ x (constants, other names)
//! ⟨x⟩(u v)    = s (⟨x⟩u) (⟨x⟩v)
//! ```
//!
//! The application clause is used for *every* application, even when `x`
//! does not occur in it.  That keeps the defining property of the
//! compilation: `(⟨x₁…x_{n+1}⟩t) a₁ … a_n` is always defined (partial
//! applications of `s` and `k` never diverge), and applying the final
//! argument yields `t[x̄ := ā]` up to the model's equality.  There is no
//! η-collapse: `⟨x⟩(u x)` does not simplify to `u`.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{PcaError, Result};
use crate::kernel::backend::{Literal, PcaBackend, StreamExpr};
use crate::kernel::desc::{EvPer, SetDesc};
use crate::kernel::fuel::Meter;
use crate::kernel::nat::Nat;

/// An applicative term.  `Abs` survives parsing and is removed by
/// [`elaborate`]; the evaluator only sees the other constructors.
#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    Var(String),
    K,
    S,
    Lit(Literal),
    App(Box<Term>, Box<Term>),
    Abs(Vec<String>, Box<Term>),
}

impl Term {
    pub fn app(u: Term, v: Term) -> Term {
        Term::App(Box::new(u), Box::new(v))
    }

    /// `s k k`, the compiled identity.
    pub fn skk() -> Term {
        Term::app(Term::app(Term::S, Term::K), Term::K)
    }

    /// Capture-free substitution of a closed term for a variable.
    pub fn subst(&self, x: &str, a: &Term) -> Term {
        match self {
            Term::Var(y) if y == x => a.clone(),
            Term::Var(_) | Term::K | Term::S | Term::Lit(_) => self.clone(),
            Term::App(u, v) => Term::app(u.subst(x, a), v.subst(x, a)),
            Term::Abs(vs, _) if vs.iter().any(|v| v == x) => self.clone(),
            Term::Abs(vs, body) => Term::Abs(vs.clone(), Box::new(body.subst(x, a))),
        }
    }
}

impl PartialEq for Literal {
    fn eq(&self, other: &Self) -> bool {
        // Syntactic comparison via the exact display form.
        self.to_string() == other.to_string()
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(t: &Term, f: &mut fmt::Formatter<'_>, parens_app: bool) -> fmt::Result {
            match t {
                Term::Var(x) => write!(f, "{x}"),
                Term::K => write!(f, "k"),
                Term::S => write!(f, "s"),
                Term::Lit(l) => write!(f, "{l}"),
                Term::App(u, v) => {
                    if parens_app {
                        write!(f, "(")?;
                    }
                    go(u, f, false)?;
                    write!(f, " ")?;
                    go(v, f, true)?;
                    if parens_app {
                        write!(f, ")")?;
                    }
                    Ok(())
                }
                Term::Abs(vs, body) => {
                    if parens_app {
                        write!(f, "(")?;
                    }
                    write!(f, "<")?;
                    for (i, v) in vs.iter().enumerate() {
                        if i > 0 {
                            write!(f, " ")?;
                        }
                        write!(f, "{v}")?;
                    }
                    write!(f, "> ")?;
                    go(body, f, false)?;
                    if parens_app {
                        write!(f, ")")?;
                    }
                    Ok(())
                }
            }
        }
        go(self, f, false)
    }
}

/// Bracket abstraction of one variable over an `Abs`-free term.
fn abstract_var(x: &str, t: &Term) -> Term {
    match t {
        Term::Var(y) if y == x => Term::skk(),
        Term::Var(_) | Term::K | Term::S | Term::Lit(_) => Term::app(Term::K, t.clone()),
        Term::App(u, v) => Term::app(
            Term::app(Term::S, abstract_var(x, u)),
            abstract_var(x, v),
        ),
        Term::Abs(..) => unreachable!("abstract_var runs on elaborated terms"),
    }
}

/// Expand every abstraction into `k`/`s` applications.
pub fn elaborate(t: &Term) -> Term {
    match t {
        Term::Var(_) | Term::K | Term::S | Term::Lit(_) => t.clone(),
        Term::App(u, v) => Term::app(elaborate(u), elaborate(v)),
        Term::Abs(vs, body) => {
            let mut acc = elaborate(body);
            for v in vs.iter().rev() {
                acc = abstract_var(v, &acc);
            }
            acc
        }
    }
}

/// Name → element bindings for evaluation.
pub type TermEnv<E> = BTreeMap<String, E>;

/// Evaluate a term left to right in a backend.  Abstractions are
/// elaborated first; literals go through [`PcaBackend::literal`].
pub fn eval_term<B: PcaBackend>(
    t: &Term,
    env: &TermEnv<B::Elem>,
    backend: &B,
    meter: &Meter,
) -> Result<B::Elem> {
    fn go<B: PcaBackend>(
        t: &Term,
        env: &TermEnv<B::Elem>,
        backend: &B,
        meter: &Meter,
    ) -> Result<B::Elem> {
        match t {
            Term::Var(x) => env
                .get(x)
                .cloned()
                .ok_or_else(|| PcaError::UnknownName(x.clone())),
            Term::K => Ok(backend.k()),
            Term::S => Ok(backend.s()),
            Term::Lit(l) => backend.literal(l),
            Term::App(u, v) => {
                let a = go(u, env, backend, meter)?;
                let b = go(v, env, backend, meter)?;
                backend.apply(&a, &b, meter)
            }
            Term::Abs(..) => unreachable!("elaborated before evaluation"),
        }
    }
    go(&elaborate(t), env, backend, meter)
}

// ---------------------------------------------------------------------------
// Tokenizer
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    /// A digit run; the raw text is kept because bit strings such as
    /// `0110` must not lose leading zeros.
    Num { raw: String, value: Nat },
    LParen,
    RParen,
    LBrace,
    RBrace,
    LAngle,
    RAngle,
    Comma,
    Colon,
    Semi,
    Eq,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "{s}"),
            Tok::Num { raw, .. } => write!(f, "{raw}"),
            Tok::LParen => write!(f, "("),
            Tok::RParen => write!(f, ")"),
            Tok::LBrace => write!(f, "{{"),
            Tok::RBrace => write!(f, "}}"),
            Tok::LAngle => write!(f, "<"),
            Tok::RAngle => write!(f, ">"),
            Tok::Comma => write!(f, ","),
            Tok::Colon => write!(f, ":"),
            Tok::Semi => write!(f, ";"),
            Tok::Eq => write!(f, "="),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn perr(line: usize, col: usize, msg: impl Into<String>) -> PcaError {
    PcaError::Parse {
        line,
        col,
        msg: msg.into(),
    }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl Lexer<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }
}

fn tokenize(src: &str) -> Result<Vec<Spanned>> {
    let mut lex = Lexer {
        chars: src.chars().peekable(),
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    while let Some(c) = lex.peek() {
        let (tline, tcol) = (lex.line, lex.col);
        if c.is_whitespace() {
            lex.bump();
            continue;
        }
        let tok = match c {
            '(' | ')' | '{' | '}' | '<' | '>' | ',' | ':' | ';' | '=' => {
                lex.bump();
                match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '<' => Tok::LAngle,
                    '>' => Tok::RAngle,
                    ',' => Tok::Comma,
                    ':' => Tok::Colon,
                    ';' => Tok::Semi,
                    _ => Tok::Eq,
                }
            }
            c if c.is_ascii_digit() => {
                let mut raw = String::new();
                while let Some(d) = lex.peek() {
                    if d.is_ascii_digit() {
                        raw.push(lex.bump().unwrap());
                    } else {
                        break;
                    }
                }
                let value: Nat = raw.parse().expect("digit run");
                Tok::Num { raw, value }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut name = String::new();
                while let Some(d) = lex.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' || d == '\'' {
                        name.push(lex.bump().unwrap());
                    } else {
                        break;
                    }
                }
                Tok::Ident(name)
            }
            other => return Err(perr(tline, tcol, format!("unexpected character {other:?}"))),
        };
        out.push(Spanned {
            tok,
            line: tline,
            col: tcol,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|s| (s.line, s.col))
            .unwrap_or(self.end)
    }

    fn next(&mut self) -> Option<Spanned> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<()> {
        let (l, c) = self.here();
        match self.next() {
            Some(s) if &s.tok == want => Ok(()),
            Some(s) => Err(perr(s.line, s.col, format!("expected {what}, found `{}`", s.tok))),
            None => Err(perr(l, c, format!("expected {what}, found end of input"))),
        }
    }

    fn fail<T>(&self, msg: impl Into<String>) -> Result<T> {
        let (l, c) = self.here();
        Err(perr(l, c, msg))
    }

    fn term(&mut self) -> Result<Term> {
        if self.peek() == Some(&Tok::LAngle) {
            self.next();
            let mut vars = Vec::new();
            loop {
                match self.peek() {
                    Some(Tok::Ident(x)) => {
                        let x = x.clone();
                        if x == "k" || x == "s" {
                            return self.fail(format!("`{x}` is a combinator, not a bindable name"));
                        }
                        vars.push(x);
                        self.next();
                    }
                    Some(Tok::RAngle) if !vars.is_empty() => {
                        self.next();
                        break;
                    }
                    _ => return self.fail("expected bound variable or `>`"),
                }
            }
            let body = self.term()?;
            return Ok(Term::Abs(vars, Box::new(body)));
        }
        self.application()
    }

    fn application(&mut self) -> Result<Term> {
        let mut acc = match self.atom()? {
            Some(t) => t,
            None => return self.fail("expected a term"),
        };
        while let Some(t) = self.atom()? {
            acc = Term::app(acc, t);
        }
        Ok(acc)
    }

    /// One atom, or `None` when the lookahead cannot start an atom.
    fn atom(&mut self) -> Result<Option<Term>> {
        let tok = match self.peek() {
            Some(t) => t.clone(),
            None => return Ok(None),
        };
        match tok {
            Tok::LParen => {
                self.next();
                let t = self.term()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(Some(t))
            }
            Tok::LAngle => {
                // An abstraction in argument position must be parenthesised;
                // at the head of a term, `term()` already caught it.
                self.fail("abstraction in argument position needs parentheses")
            }
            Tok::Ident(name) => {
                match name.as_str() {
                    "k" => {
                        self.next();
                        Ok(Some(Term::K))
                    }
                    "s" => {
                        self.next();
                        Ok(Some(Term::S))
                    }
                    "stream" if self.nth_is(1, &Tok::LParen) => {
                        self.next();
                        self.expect(&Tok::LParen, "`(`")?;
                        let e = self.stream_body()?;
                        self.expect(&Tok::RParen, "`)`")?;
                        Ok(Some(Term::Lit(Literal::Stream(e))))
                    }
                    "fin" | "cofin" if self.nth_is(1, &Tok::LBrace) => {
                        Ok(Some(Term::Lit(Literal::Set(self.desc()?))))
                    }
                    "union" | "inter" | "comp" | "double" | "doubleplus1" | "prog" | "per"
                        if self.nth_is(1, &Tok::LParen) =>
                    {
                        Ok(Some(Term::Lit(Literal::Set(self.desc()?))))
                    }
                    _ => {
                        self.next();
                        Ok(Some(Term::Var(name)))
                    }
                }
            }
            Tok::Num { .. } => self.fail(
                "bare number: naturals only occur inside fin{…}, cofin{…}, prog(…), per(…) or stream(…)",
            ),
            _ => Ok(None),
        }
    }

    fn nth_is(&self, off: usize, want: &Tok) -> bool {
        self.toks.get(self.pos + off).map(|s| &s.tok) == Some(want)
    }

    fn nat(&mut self) -> Result<Nat> {
        match self.next() {
            Some(Spanned {
                tok: Tok::Num { value, .. },
                ..
            }) => Ok(value),
            Some(s) => Err(perr(s.line, s.col, format!("expected a natural, found `{}`", s.tok))),
            None => {
                let (l, c) = self.end;
                Err(perr(l, c, "expected a natural, found end of input"))
            }
        }
    }

    /// `fin{…}` / `cofin{…}` brace bodies.
    fn nat_set(&mut self) -> Result<std::collections::BTreeSet<Nat>> {
        self.expect(&Tok::LBrace, "`{`")?;
        let mut out = std::collections::BTreeSet::new();
        if self.peek() == Some(&Tok::RBrace) {
            self.next();
            return Ok(out);
        }
        loop {
            out.insert(self.nat()?);
            match self.next() {
                Some(Spanned { tok: Tok::Comma, .. }) => continue,
                Some(Spanned { tok: Tok::RBrace, .. }) => break,
                Some(s) => return Err(perr(s.line, s.col, format!("expected `,` or `}}`, found `{}`", s.tok))),
                None => {
                    let (l, c) = self.end;
                    return Err(perr(l, c, "unclosed `{`"));
                }
            }
        }
        Ok(out)
    }

    /// Raw 0/1 run (possibly empty when `stop` follows immediately).
    fn bits(&mut self, stop: &Tok) -> Result<Vec<bool>> {
        if self.peek() == Some(stop) {
            return Ok(Vec::new());
        }
        let (l, c) = self.here();
        match self.next() {
            Some(Spanned {
                tok: Tok::Num { raw, .. },
                ..
            }) => raw
                .chars()
                .map(|ch| match ch {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    _ => Err(perr(l, c, "bit strings use only 0 and 1")),
                })
                .collect(),
            _ => Err(perr(l, c, "expected a bit string")),
        }
    }

    fn desc(&mut self) -> Result<SetDesc> {
        let (l, c) = self.here();
        let head = match self.next() {
            Some(Spanned {
                tok: Tok::Ident(h), ..
            }) => h,
            Some(s) => return Err(perr(s.line, s.col, format!("expected a set description, found `{}`", s.tok))),
            None => return Err(perr(l, c, "expected a set description")),
        };
        match head.as_str() {
            "fin" => Ok(SetDesc::Fin(self.nat_set()?)),
            "cofin" => Ok(SetDesc::Cofin(self.nat_set()?)),
            "union" | "inter" => {
                self.expect(&Tok::LParen, "`(`")?;
                let a = self.desc()?;
                self.expect(&Tok::Comma, "`,`")?;
                let b = self.desc()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(if head == "union" {
                    SetDesc::Union(Box::new(a), Box::new(b))
                } else {
                    SetDesc::Inter(Box::new(a), Box::new(b))
                })
            }
            "comp" | "double" | "doubleplus1" => {
                self.expect(&Tok::LParen, "`(`")?;
                let a = self.desc()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(match head.as_str() {
                    "comp" => SetDesc::Comp(Box::new(a)),
                    "double" => SetDesc::Double(Box::new(a)),
                    _ => SetDesc::DoublePlusOne(Box::new(a)),
                })
            }
            "prog" => {
                self.expect(&Tok::LParen, "`(`")?;
                let n = self.nat()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(SetDesc::Prog(n))
            }
            "per" => {
                self.expect(&Tok::LParen, "`(`")?;
                self.keyword("head")?;
                self.expect(&Tok::Eq, "`=`")?;
                let h = self.bits(&Tok::Semi)?;
                self.expect(&Tok::Semi, "`;`")?;
                self.keyword("pattern")?;
                self.expect(&Tok::Eq, "`=`")?;
                let p = self.bits(&Tok::RParen)?;
                self.expect(&Tok::RParen, "`)`")?;
                let ev = EvPer::from_parts(h, p)
                    .map_err(|e| perr(l, c, format!("invalid per(): {e}")))?;
                Ok(SetDesc::Per(ev))
            }
            other => Err(perr(l, c, format!("unknown set description `{other}`"))),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        let (l, c) = self.here();
        match self.next() {
            Some(Spanned {
                tok: Tok::Ident(h), ..
            }) if h == kw => Ok(()),
            Some(s) => Err(perr(s.line, s.col, format!("expected `{kw}`, found `{}`", s.tok))),
            None => Err(perr(l, c, format!("expected `{kw}`"))),
        }
    }

    fn stream_body(&mut self) -> Result<StreamExpr> {
        let (l, c) = self.here();
        let head = match self.next() {
            Some(Spanned {
                tok: Tok::Ident(h), ..
            }) => h,
            _ => return Err(perr(l, c, "expected const | poly | periodic | patch")),
        };
        match head.as_str() {
            "const" => Ok(StreamExpr::Const(self.nat()?)),
            "poly" => {
                let mut cs = Vec::new();
                while matches!(self.peek(), Some(Tok::Num { .. })) {
                    cs.push(self.nat()?);
                }
                Ok(StreamExpr::Poly(cs))
            }
            "periodic" => {
                let mut vs = Vec::new();
                while matches!(self.peek(), Some(Tok::Num { .. })) {
                    vs.push(self.nat()?);
                }
                if vs.is_empty() {
                    return self.fail("periodic needs at least one value");
                }
                Ok(StreamExpr::Periodic(vs))
            }
            "patch" => {
                let mut ps = Vec::new();
                loop {
                    match self.peek() {
                        Some(Tok::Num { .. }) => {
                            let i = self.nat()?;
                            self.expect(&Tok::Colon, "`:`")?;
                            let v = self.nat()?;
                            ps.push((i, v));
                        }
                        Some(Tok::Ident(h)) if h == "base" => {
                            self.next();
                            break;
                        }
                        _ => return self.fail("expected `i:v` patch or `base`"),
                    }
                }
                let base = self.stream_body()?;
                Ok(StreamExpr::Patch(ps, Box::new(base)))
            }
            other => Err(perr(l, c, format!("unknown stream form `{other}`"))),
        }
    }
}

/// Parse a complete term; trailing input is an error.
pub fn parse_term(src: &str) -> Result<Term> {
    let toks = tokenize(src)?;
    let end = toks
        .last()
        .map(|s| (s.line, s.col + s.tok.to_string().len()))
        .unwrap_or((1, 1));
    let mut p = Parser { toks, pos: 0, end };
    let t = p.term()?;
    if let Some(s) = p.next() {
        return Err(perr(s.line, s.col, format!("unexpected `{}` after term", s.tok)));
    }
    Ok(t)
}

/// Parse a set-description literal on its own (CLI argument form).
pub fn parse_desc(src: &str) -> Result<SetDesc> {
    let toks = tokenize(src)?;
    let end = toks
        .last()
        .map(|s| (s.line, s.col + s.tok.to_string().len()))
        .unwrap_or((1, 1));
    let mut p = Parser { toks, pos: 0, end };
    let d = p.desc()?;
    if let Some(s) = p.next() {
        return Err(perr(s.line, s.col, format!("unexpected `{}` after description", s.tok)));
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::backend::HostFun;
    use crate::kernel::fuel::Fuel;
    use proptest::prelude::*;
    use std::sync::Arc;

    // -- a minimal closed-term combinator calculus, used as a backend to
    //    test abstraction and the trait defaults before the real models --

    #[derive(Clone, Debug, PartialEq, Eq)]
    enum CTerm {
        K,
        S,
        Atom(u32),
        App(Arc<CTerm>, Arc<CTerm>),
    }

    fn capp(u: &CTerm, v: &CTerm) -> CTerm {
        CTerm::App(Arc::new(u.clone()), Arc::new(v.clone()))
    }

    /// Spine decomposition: head + argument list.
    fn spine(t: &CTerm) -> (CTerm, Vec<CTerm>) {
        match t {
            CTerm::App(u, v) => {
                let (h, mut args) = spine(u);
                args.push((**v).clone());
                (h, args)
            }
            other => (other.clone(), Vec::new()),
        }
    }

    fn rebuild(head: CTerm, args: &[CTerm]) -> CTerm {
        args.iter().fold(head, |acc, a| capp(&acc, a))
    }

    /// Normalize under the K/S reduction rules, metered.
    fn normalize(t: &CTerm, meter: &Meter) -> Result<CTerm> {
        meter.tick("combinator reduction")?;
        let (head, args) = spine(t);
        match head {
            CTerm::K if args.len() >= 2 => {
                let rest = rebuild(args[0].clone(), &args[2..]);
                normalize(&rest, meter)
            }
            CTerm::S if args.len() >= 3 => {
                let xz = capp(&args[0], &args[2]);
                let yz = capp(&args[1], &args[2]);
                let rest = rebuild(capp(&xz, &yz), &args[3..]);
                normalize(&rest, meter)
            }
            head => {
                let mut norm_args = Vec::with_capacity(args.len());
                for a in &args {
                    norm_args.push(normalize(a, meter)?);
                }
                Ok(rebuild(head, &norm_args))
            }
        }
    }

    struct TermCalculus;

    impl PcaBackend for TermCalculus {
        type Elem = CTerm;

        fn name(&self) -> &'static str {
            "term-calculus"
        }

        fn apply(&self, a: &CTerm, b: &CTerm, meter: &Meter) -> Result<CTerm> {
            normalize(&capp(a, b), meter)
        }

        fn k(&self) -> CTerm {
            CTerm::K
        }

        fn s(&self) -> CTerm {
            CTerm::S
        }

        fn pair_elems(&self, _: &CTerm, _: &CTerm) -> Result<CTerm> {
            unimplemented!("not used in these tests")
        }

        fn unpair_elems(&self, _: &CTerm) -> Result<(CTerm, CTerm)> {
            unimplemented!("not used in these tests")
        }

        fn seq_elems(&self, _: &[CTerm]) -> Result<CTerm> {
            unimplemented!("not used in these tests")
        }

        fn seq_nth(&self, _: &CTerm, _: usize, _: usize) -> Result<CTerm> {
            unimplemented!("not used in these tests")
        }

        fn bool_probes(&self) -> (CTerm, CTerm) {
            (CTerm::Atom(0), CTerm::Atom(1))
        }

        fn decide_bool_probe(&self, r: &CTerm, _meter: &Meter) -> Result<bool> {
            match r {
                CTerm::Atom(0) => Ok(true),
                CTerm::Atom(1) => Ok(false),
                other => Err(PcaError::MalformedStep(format!(
                    "boolean probe produced {other:?}"
                ))),
            }
        }

        fn agree(&self, a: &CTerm, b: &CTerm, _prefix: u64, meter: &Meter) -> Result<bool> {
            Ok(normalize(a, meter)? == normalize(b, meter)?)
        }

        fn literal(&self, lit: &Literal) -> Result<CTerm> {
            Err(crate::kernel::backend::unsupported_literal(self.name(), lit))
        }

        fn from_host_fun(&self, _label: &str, _f: HostFun<CTerm>) -> CTerm {
            unimplemented!("not used in these tests")
        }

        fn show(&self, e: &CTerm, _stage_cap: u64) -> String {
            format!("{e:?}")
        }
    }

    fn eval_closed(t: &Term, atoms: &TermEnv<CTerm>) -> Result<CTerm> {
        eval_term(t, atoms, &TermCalculus, &Fuel::new(16, 4096).meter())
    }

    fn atoms_env() -> TermEnv<CTerm> {
        let mut env = TermEnv::new();
        env.insert("a".into(), CTerm::Atom(10));
        env.insert("b".into(), CTerm::Atom(11));
        env.insert("c".into(), CTerm::Atom(12));
        env
    }

    #[test]
    fn parses_application_left_associatively() {
        let t = parse_term("k a b").unwrap();
        assert_eq!(
            t,
            Term::app(
                Term::app(Term::K, Term::Var("a".into())),
                Term::Var("b".into())
            )
        );
    }

    #[test]
    fn parses_literals_and_round_trips_display() {
        for src in [
            "k fin{2,4} fin{9}",
            "s (k fin{1}) cofin{}",
            "union(fin{1},cofin{2})",
            "per(head=;pattern=10)",
            "per(head=01;pattern=1)",
            "double(comp(fin{0}))",
            "doubleplus1(fin{3})",
            "prog(17)",
            "stream(const 3)",
            "stream(poly 1 2 3)",
            "stream(periodic 1 0 2)",
            "stream(patch 0:5 2:9 base const 3)",
            "<x y> x (k y)",
            "<x> x",
        ] {
            let t = parse_term(src).unwrap();
            let printed = t.to_string();
            let again = parse_term(&printed).unwrap();
            assert_eq!(t, again, "round-trip through `{printed}` from `{src}`");
        }
    }

    #[test]
    fn abstraction_scope_runs_to_the_end() {
        let t = parse_term("<x> x k").unwrap();
        assert_eq!(
            t,
            Term::Abs(
                vec!["x".into()],
                Box::new(Term::app(Term::Var("x".into()), Term::K))
            )
        );
    }

    #[test]
    fn parse_errors_carry_positions() {
        match parse_term("k fin{2,") {
            Err(PcaError::Parse { line: 1, col, .. }) => assert!(col >= 8),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse_term("k 5") {
            Err(PcaError::Parse { line: 1, col: 3, .. }) => {}
            other => panic!("expected bare-number error, got {other:?}"),
        }
        match parse_term("<k> k") {
            Err(PcaError::Parse { .. }) => {}
            other => panic!("expected combinator-binding error, got {other:?}"),
        }
        match parse_term("") {
            Err(PcaError::Parse { .. }) => {}
            other => panic!("expected empty-input error, got {other:?}"),
        }
    }

    #[test]
    fn elaborate_identity_is_skk() {
        let t = elaborate(&parse_term("<x> x").unwrap());
        assert_eq!(t, Term::skk());
    }

    #[test]
    fn elaborate_two_variable_projection() {
        // ⟨x y⟩x = ⟨x⟩(k x) … applications always use the s-rule, so the
        // inner step gives k x ↦ s (k k) (s k k).
        let t = elaborate(&parse_term("<x y> x").unwrap());
        let expected = Term::app(
            Term::app(Term::S, Term::app(Term::K, Term::K)),
            Term::skk(),
        );
        assert_eq!(t, expected);
    }

    #[test]
    fn projections_select_their_argument() {
        let env = atoms_env();
        let fst = eval_closed(&parse_term("(<x y> x) a b").unwrap(), &env).unwrap();
        let snd = eval_closed(&parse_term("(<x y> y) a b").unwrap(), &env).unwrap();
        assert_eq!(fst, CTerm::Atom(10));
        assert_eq!(snd, CTerm::Atom(11));
    }

    #[test]
    fn backend_default_booleans_select() {
        let bk = TermCalculus;
        let meter = Fuel::new(16, 4096).meter();
        let t = bk.truth();
        let f = bk.falsity();
        assert!(bk.as_bool(&t, &meter).unwrap());
        assert!(!bk.as_bool(&f, &meter).unwrap());
        // The case combinator is application of the boolean itself.
        let picked = bk
            .apply_many(&t, &[CTerm::Atom(7), CTerm::Atom(8)], &meter)
            .unwrap();
        assert_eq!(picked, CTerm::Atom(7));
    }

    #[test]
    fn partial_abstraction_applications_are_defined() {
        // (⟨x y⟩t) a must be defined even when t is a stuck application:
        // every application clause compiles through s, whose partial
        // applications never reduce further.
        let env = atoms_env();
        let t = parse_term("(<x y> a b c) a").unwrap();
        assert!(eval_closed(&t, &env).is_ok());
    }

    // Random Abs-free bodies over variables {x, y} and the atoms.
    fn arb_body(depth: u32) -> BoxedStrategy<Term> {
        let leaf = prop_oneof![
            Just(Term::Var("x".into())),
            Just(Term::Var("y".into())),
            Just(Term::K),
            Just(Term::S),
            Just(Term::Var("a".into())),
            Just(Term::Var("b".into())),
        ];
        leaf.prop_recursive(depth, 16, 2, |inner| {
            (inner.clone(), inner)
                .prop_map(|(u, v)| Term::app(u, v))
                .boxed()
        })
        .boxed()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(96))]

        /// The defining property of bracket abstraction: applying the
        /// compiled abstraction equals substituting and evaluating, up to
        /// shared divergence at the fuel bound.
        #[test]
        fn beta_property(body in arb_body(3)) {
            let env = atoms_env();
            let abstracted = Term::Abs(vec!["x".into(), "y".into()], Box::new(body.clone()));
            let applied = Term::app(
                Term::app(abstracted, Term::Var("a".into())),
                Term::Var("b".into()),
            );
            let substituted = body
                .subst("x", &Term::Var("a".into()))
                .subst("y", &Term::Var("b".into()));
            let lhs = eval_closed(&applied, &env);
            let rhs = eval_closed(&substituted, &env);
            match (lhs, rhs) {
                (Ok(l), Ok(r)) => prop_assert_eq!(l, r),
                (Err(PcaError::Exhausted(_)), Err(PcaError::Exhausted(_))) => {}
                // An exhausted side and a converged side can both happen at
                // a fixed fuel bound only through the compiled term needing
                // more steps; re-check with a bigger meter.
                (l, r) => {
                    let meter = Fuel::new(16, 1 << 20).meter();
                    let l2 = eval_term(&applied, &env, &TermCalculus, &meter);
                    let r2 = eval_term(&substituted, &env, &TermCalculus, &meter);
                    match (l2, r2) {
                        (Ok(l2), Ok(r2)) => prop_assert_eq!(l2, r2),
                        (Err(PcaError::Exhausted(_)), Err(PcaError::Exhausted(_))) => {}
                        other => prop_assert!(false, "disagreement: {:?} (small-fuel {:?} vs {:?})", other, l, r),
                    }
                }
            }
        }
    }
}
