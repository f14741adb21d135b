//! Hand-rolled recursive-descent parser for the pure-Prolog subset.
//!
//! Grammar: clauses `head.` or `head :- b1, ..., bn.`; variables start with
//! an uppercase letter or `_`; list sugar `[a,b|T]`; infix `+` and `*`
//! (with `*` binding tighter) parsed as ordinary functors; `%` line
//! comments; `%% query:` and `%% mode:` directives.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{
    ArgShape, Atom, Clause, Mode, ModeDecl, Program, QueryPattern, Symbol, Term,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("arity clash: predicate {name} used with arities {first} and {second}")]
    ArityClash { name: String, first: usize, second: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    Var(String),
    Punct(char), // ( ) [ ] , | + * .
    Neck,        // :-
    Directive(String), // full text after %%
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src: src.as_bytes(), pos: 0, line: 1, col: 1 }
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.src.get(self.pos).copied()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<u8> {
        self.src.get(self.pos + 1).copied()
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax { line: self.line, col: self.col, msg: msg.into() }
    }

    fn tokens(mut self) -> Result<Vec<Spanned>, ParseError> {
        let mut out = Vec::new();
        loop {
            while matches!(self.peek(), Some(c) if c.is_ascii_whitespace()) {
                self.bump();
            }
            let (line, col) = (self.line, self.col);
            let Some(c) = self.peek() else { break };
            match c {
                b'%' => {
                    if self.peek2() == Some(b'%') {
                        // directive line
                        self.bump();
                        self.bump();
                        let mut text = String::new();
                        while let Some(c) = self.peek() {
                            if c == b'\n' {
                                break;
                            }
                            text.push(self.bump().unwrap() as char);
                        }
                        out.push(Spanned { tok: Tok::Directive(text), line, col });
                    } else {
                        while let Some(c) = self.peek() {
                            if c == b'\n' {
                                break;
                            }
                            self.bump();
                        }
                    }
                }
                b'(' | b')' | b'[' | b']' | b',' | b'|' | b'+' | b'*' | b'.' => {
                    self.bump();
                    out.push(Spanned { tok: Tok::Punct(c as char), line, col });
                }
                b':' => {
                    self.bump();
                    if self.peek() == Some(b'-') {
                        self.bump();
                        out.push(Spanned { tok: Tok::Neck, line, col });
                    } else {
                        return Err(self.error("expected ':-'"));
                    }
                }
                c if c.is_ascii_lowercase() || c.is_ascii_digit() => {
                    let mut name = String::new();
                    while let Some(c) = self.peek() {
                        if c.is_ascii_alphanumeric() || c == b'_' {
                            name.push(self.bump().unwrap() as char);
                        } else {
                            break;
                        }
                    }
                    out.push(Spanned { tok: Tok::Name(name), line, col });
                }
                c if c.is_ascii_uppercase() || c == b'_' => {
                    let mut name = String::new();
                    while let Some(c) = self.peek() {
                        if c.is_ascii_alphanumeric() || c == b'_' {
                            name.push(self.bump().unwrap() as char);
                        } else {
                            break;
                        }
                    }
                    out.push(Spanned { tok: Tok::Var(name), line, col });
                }
                other => {
                    return Err(self.error(format!("unexpected character '{}'", other as char)));
                }
            }
        }
        Ok(out)
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    /// Counter for anonymous `_` variables, scoped per clause.
    anon: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.toks.get(self.pos)
    }

    fn bump(&mut self) -> Option<Spanned> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, msg: impl Into<String>) -> ParseError {
        match self.peek() {
            Some(s) => ParseError::Syntax { line: s.line, col: s.col, msg: msg.into() },
            None => {
                let (line, col) = self
                    .toks
                    .last()
                    .map(|s| (s.line, s.col))
                    .unwrap_or((1, 1));
                ParseError::Syntax { line, col, msg: format!("{} (unexpected end of input)", msg.into()) }
            }
        }
    }

    fn expect_punct(&mut self, c: char) -> Result<(), ParseError> {
        match self.peek() {
            Some(s) if s.tok == Tok::Punct(c) => {
                self.bump();
                Ok(())
            }
            _ => Err(self.error_here(format!("expected '{c}'"))),
        }
    }

    // expr := mul (('+') mul)*
    fn term(&mut self) -> Result<Term, ParseError> {
        let mut lhs = self.mul_term()?;
        while matches!(self.peek(), Some(s) if s.tok == Tok::Punct('+')) {
            self.bump();
            let rhs = self.mul_term()?;
            lhs = Term::app("+", vec![lhs, rhs]);
        }
        Ok(lhs)
    }

    fn mul_term(&mut self) -> Result<Term, ParseError> {
        let mut lhs = self.primary()?;
        while matches!(self.peek(), Some(s) if s.tok == Tok::Punct('*')) {
            self.bump();
            let rhs = self.primary()?;
            lhs = Term::app("*", vec![lhs, rhs]);
        }
        Ok(lhs)
    }

    fn primary(&mut self) -> Result<Term, ParseError> {
        let Some(s) = self.peek().cloned() else {
            return Err(self.error_here("expected a term"));
        };
        match s.tok {
            Tok::Var(name) => {
                self.bump();
                if name == "_" {
                    self.anon += 1;
                    Ok(Term::var(format!("_G{}", self.anon)))
                } else {
                    Ok(Term::var(name))
                }
            }
            Tok::Name(name) => {
                self.bump();
                if matches!(self.peek(), Some(s) if s.tok == Tok::Punct('(')) {
                    self.bump();
                    let mut args = vec![self.term()?];
                    while matches!(self.peek(), Some(s) if s.tok == Tok::Punct(',')) {
                        self.bump();
                        args.push(self.term()?);
                    }
                    self.expect_punct(')')?;
                    Ok(Term::app(name, args))
                } else {
                    Ok(Term::constant(name))
                }
            }
            Tok::Punct('[') => {
                self.bump();
                if matches!(self.peek(), Some(s) if s.tok == Tok::Punct(']')) {
                    self.bump();
                    return Ok(Term::nil());
                }
                let mut items = vec![self.term()?];
                while matches!(self.peek(), Some(s) if s.tok == Tok::Punct(',')) {
                    self.bump();
                    items.push(self.term()?);
                }
                let tail = if matches!(self.peek(), Some(s) if s.tok == Tok::Punct('|')) {
                    self.bump();
                    self.term()?
                } else {
                    Term::nil()
                };
                self.expect_punct(']')?;
                Ok(items.into_iter().rev().fold(tail, |acc, t| Term::cons(t, acc)))
            }
            Tok::Punct('(') => {
                self.bump();
                let t = self.term()?;
                self.expect_punct(')')?;
                Ok(t)
            }
            _ => Err(self.error_here("expected a term")),
        }
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        let t = self.term()?;
        match t {
            Term::Comp(sym, args) => Ok(Atom { pred: sym, args }),
            Term::Var(_) => Err(self.error_here("expected an atom, found a variable")),
        }
    }

    fn clause(&mut self) -> Result<Clause, ParseError> {
        self.anon = 0;
        let head = self.atom()?;
        let mut body = Vec::new();
        if matches!(self.peek(), Some(s) if s.tok == Tok::Neck) {
            self.bump();
            body.push(self.atom()?);
            while matches!(self.peek(), Some(s) if s.tok == Tok::Punct(',')) {
                self.bump();
                body.push(self.atom()?);
            }
        }
        self.expect_punct('.')?;
        Ok(Clause { head, body })
    }
}

fn parse_directive(text: &str, line: usize) -> Result<Directive, ParseError> {
    let text = text.trim();
    let err = |msg: &str| ParseError::Syntax { line, col: 1, msg: msg.to_string() };
    let (kind, rest) = text
        .split_once(':')
        .ok_or_else(|| err("directive must be '%% query: ...' or '%% mode: ...'"))?;
    let rest = rest.trim().trim_end_matches('.');
    let open = rest.find('(').ok_or_else(|| err("directive needs pred(...)"))?;
    let close = rest.rfind(')').ok_or_else(|| err("directive needs closing ')'"))?;
    let pred_name = rest[..open].trim().to_string();
    let items: Vec<&str> = rest[open + 1..close]
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    match kind.trim() {
        "query" => {
            let mut shapes = Vec::new();
            for item in &items {
                shapes.push(match *item {
                    "ground" => ArgShape::Ground,
                    "free" => ArgShape::Free,
                    "nillist" => ArgShape::NilList,
                    "nillist_ground" => ArgShape::NilListGround,
                    "any" => ArgShape::Any,
                    other => return Err(err(&format!("unknown query shape '{other}'"))),
                });
            }
            let arity = shapes.len();
            Ok(Directive::Query(QueryPattern {
                pred: Symbol::new(pred_name, arity),
                shapes,
            }))
        }
        "mode" => {
            let mut modes = Vec::new();
            for item in &items {
                modes.push(match *item {
                    "in" => Mode::In,
                    "out" => Mode::Out,
                    other => return Err(err(&format!("unknown mode '{other}'"))),
                });
            }
            let arity = modes.len();
            Ok(Directive::Mode(ModeDecl {
                pred: Symbol::new(pred_name, arity),
                modes,
            }))
        }
        other => Err(err(&format!("unknown directive '{other}'"))),
    }
}

enum Directive {
    Query(QueryPattern),
    Mode(ModeDecl),
}

/// Parse a complete program file.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let toks = Lexer::new(text).tokens()?;
    let mut program = Program::default();
    let mut parser = Parser { toks: Vec::new(), pos: 0, anon: 0 };
    let mut clause_toks: Vec<Spanned> = Vec::new();
    for t in toks {
        match t.tok {
            Tok::Directive(text) => match parse_directive(&text, t.line)? {
                Directive::Query(q) => program.queries.push(q),
                Directive::Mode(m) => program.modes.push(m),
            },
            Tok::Punct('.') => {
                clause_toks.push(t);
                parser.toks = std::mem::take(&mut clause_toks);
                parser.pos = 0;
                program.clauses.push(parser.clause()?);
            }
            _ => clause_toks.push(t),
        }
    }
    if !clause_toks.is_empty() {
        parser.toks = clause_toks;
        parser.pos = 0;
        parser.clause()?; // will report the missing '.'
    }
    check_arities(&program)?;
    Ok(program)
}

/// Predicates must keep one arity throughout the program and directives.
fn check_arities(p: &Program) -> Result<(), ParseError> {
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut check = |sym: &Symbol| -> Result<(), ParseError> {
        match seen.get(&sym.name) {
            Some(&a) if a != sym.arity => Err(ParseError::ArityClash {
                name: sym.name.clone(),
                first: a,
                second: sym.arity,
            }),
            Some(_) => Ok(()),
            None => {
                seen.insert(sym.name.clone(), sym.arity);
                Ok(())
            }
        }
    };
    for c in &p.clauses {
        check(&c.head.pred)?;
        for b in &c.body {
            check(&b.pred)?;
        }
    }
    for q in &p.queries {
        check(&q.pred)?;
    }
    for m in &p.modes {
        check(&m.pred)?;
    }
    Ok(())
}

/// Parse a single term (used by the CLI for queries).
pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let toks = Lexer::new(text).tokens()?;
    let mut parser = Parser { toks, pos: 0, anon: 0 };
    let t = parser.term()?;
    if parser.peek().is_some() {
        return Err(parser.error_here("trailing input after term"));
    }
    Ok(t)
}

/// Parse a single atom.
pub fn parse_atom(text: &str) -> Result<Atom, ParseError> {
    let toks = Lexer::new(text).tokens()?;
    let mut parser = Parser { toks, pos: 0, anon: 0 };
    let a = parser.atom()?;
    if parser.peek().is_some() {
        return Err(parser.error_here("trailing input after atom"));
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_fact() {
        let p = parse_program("p(a).").unwrap();
        assert_eq!(p.clauses.len(), 1);
        assert_eq!(p.clauses[0].head.pred, Symbol::new("p", 1));
        assert!(p.clauses[0].body.is_empty());
    }

    #[test]
    fn derivative_program() {
        let src = "
            d(der(u),1).
            d(der(A),0) :- number(A).
            d(der(X+Y),DX+DY) :- d(der(X),DX), d(der(Y),DY).
            d(der(X*Y),X*DY+Y*DX) :- d(der(X),DX), d(der(Y),DY).
            d(der(der(X)),DDX) :- d(der(X),DX), d(der(DX),DDX).
        ";
        let p = parse_program(src).unwrap();
        assert_eq!(p.clauses.len(), 5);
        let preds = p.predicates();
        assert!(preds.contains(&Symbol::new("d", 2)));
        assert!(preds.contains(&Symbol::new("number", 1)));
        // X*DY+Y*DX parses with * tighter than +
        let head = &p.clauses[3].head;
        if let Term::Comp(plus, args) = &head.args[1] {
            assert_eq!(plus.name, "+");
            assert!(matches!(&args[0], Term::Comp(s, _) if s.name == "*"));
        } else {
            panic!("expected + at top of {head}");
        }
    }

    #[test]
    fn malformed_input() {
        let e = parse_program("p(X :-").unwrap_err();
        assert!(matches!(e, ParseError::Syntax { .. }));
    }

    #[test]
    fn list_sugar() {
        let t = parse_term("[a,b|T]").unwrap();
        assert_eq!(
            t,
            Term::cons(
                Term::constant("a"),
                Term::cons(Term::constant("b"), Term::var("T"))
            )
        );
        assert_eq!(parse_term("[]").unwrap(), Term::nil());
    }

    #[test]
    fn directives() {
        let src = "
            %% query: permute(nillist_ground, free).
            %% mode: permute(in, out).
            permute([],[]).
        ";
        let p = parse_program(src).unwrap();
        assert_eq!(p.queries.len(), 1);
        assert_eq!(
            p.queries[0].shapes,
            vec![ArgShape::NilListGround, ArgShape::Free]
        );
        assert_eq!(p.modes[0].modes, vec![Mode::In, Mode::Out]);
    }

    #[test]
    fn arity_clash() {
        let e = parse_program("p(a). p(a,b).").unwrap_err();
        assert!(matches!(e, ParseError::ArityClash { .. }));
    }

    #[test]
    fn comments_ignored() {
        let p = parse_program("% a comment\np(a). % trailing\n").unwrap();
        assert_eq!(p.clauses.len(), 1);
    }

    #[test]
    fn round_trip() {
        let src = "
            %% query: permute(nillist_ground, free).
            permute([],[]).
            permute(L,[El|T]) :- delete(El,L,L1), permute(L1,T).
            delete(X,[X|T],T).
            delete(X,[H|T],[H|T1]) :- delete(X,T,T1).
        ";
        let p = parse_program(src).unwrap();
        let p2 = parse_program(&p.to_source()).unwrap();
        assert_eq!(p.clauses.len(), p2.clauses.len());
        for (a, b) in p.clauses.iter().zip(&p2.clauses) {
            assert!(crate::syntax::variant_eq(&a.head, &b.head));
        }
        assert_eq!(p.queries, p2.queries);
    }
}
