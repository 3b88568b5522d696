//! Textual `.tc` format for systems: parser and canonical renderer.
//!
//! The format is line-oriented; `#` starts a comment. One declaration per
//! line:
//!
//! ```text
//! sort P
//! fun f : P P -> P
//! fun c : -> P
//! var x y : P
//! eq f(x,y) = f(y,x)
//! neq x != y
//! out f(x,y) f(y,x)
//! ```
//!
//! The presence of `out` lines marks a dispersion problem; term coding and
//! dispersion share the one format. User identifiers start with a letter;
//! names starting with `_` are reserved for generated variables and symbols,
//! which the parser accepts so canonical output round-trips.

use std::fmt::Write as _;

use thiserror::Error;

use crate::ir::{
    validate_system, Constraint, FuncSymbol, SortDecl, System, Term, ValidationReport, VarDecl,
};

/// Position of a token in the source text. Line and column are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

/// Syntax error with its location.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at {}:{}", span.line, span.column)]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
}

/// Parse or validation failure for a `.tc` file.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("validation failed:\n{0}")]
    Validation(ValidationReport),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Colon,
    Arrow,
    Equal,
    NotEqual,
}

struct Lexer<'a> {
    line: &'a str,
    line_no: usize,
    pos: usize,
    toks: Vec<(Tok, SourceSpan)>,
}

impl<'a> Lexer<'a> {
    fn run(line: &'a str, line_no: usize) -> Result<Vec<(Tok, SourceSpan)>, ParseError> {
        let mut lx = Lexer {
            line,
            line_no,
            pos: 0,
            toks: Vec::new(),
        };
        lx.lex()?;
        Ok(lx.toks)
    }

    fn span(&self, start: usize, len: usize) -> SourceSpan {
        SourceSpan {
            line: self.line_no,
            column: start + 1,
            length: len.max(1),
        }
    }

    fn lex(&mut self) -> Result<(), ParseError> {
        let bytes = self.line.as_bytes();
        while self.pos < bytes.len() {
            let c = bytes[self.pos] as char;
            match c {
                '#' => break,
                ' ' | '\t' | '\r' => self.pos += 1,
                '(' => self.push1(Tok::LParen),
                ')' => self.push1(Tok::RParen),
                ',' => self.push1(Tok::Comma),
                ':' => self.push1(Tok::Colon),
                '=' => self.push1(Tok::Equal),
                '!' => {
                    if bytes.get(self.pos + 1) == Some(&b'=') {
                        let span = self.span(self.pos, 2);
                        self.toks.push((Tok::NotEqual, span));
                        self.pos += 2;
                    } else {
                        return Err(ParseError {
                            span: self.span(self.pos, 1),
                            message: "expected != after !".into(),
                        });
                    }
                }
                '-' => {
                    if bytes.get(self.pos + 1) == Some(&b'>') {
                        let span = self.span(self.pos, 2);
                        self.toks.push((Tok::Arrow, span));
                        self.pos += 2;
                    } else {
                        return Err(ParseError {
                            span: self.span(self.pos, 1),
                            message: "expected -> after -".into(),
                        });
                    }
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let start = self.pos;
                    while self.pos < bytes.len() {
                        let c = bytes[self.pos] as char;
                        if c.is_ascii_alphanumeric() || c == '_' {
                            self.pos += 1;
                        } else {
                            break;
                        }
                    }
                    let ident = self.line[start..self.pos].to_string();
                    let span = self.span(start, self.pos - start);
                    self.toks.push((Tok::Ident(ident), span));
                }
                other => {
                    return Err(ParseError {
                        span: self.span(self.pos, 1),
                        message: format!("unexpected character {other:?}"),
                    });
                }
            }
        }
        Ok(())
    }

    fn push1(&mut self, t: Tok) {
        let span = self.span(self.pos, 1);
        self.toks.push((t, span));
        self.pos += 1;
    }
}

const KEYWORDS: &[&str] = &["sort", "fun", "var", "eq", "neq", "out"];

struct LineParser {
    toks: Vec<(Tok, SourceSpan)>,
    idx: usize,
    line_no: usize,
    line_len: usize,
}

impl LineParser {
    fn eol_span(&self) -> SourceSpan {
        SourceSpan {
            line: self.line_no,
            column: self.line_len + 1,
            length: 1,
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.idx).map(|(t, _)| t)
    }

    fn next(&mut self) -> Option<(Tok, SourceSpan)> {
        let t = self.toks.get(self.idx).cloned();
        self.idx += 1;
        t
    }

    fn err_here(&self, message: impl Into<String>) -> ParseError {
        let span = self
            .toks
            .get(self.idx)
            .map(|(_, s)| *s)
            .unwrap_or_else(|| self.eol_span());
        ParseError {
            span,
            message: message.into(),
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.next() {
            Some((Tok::Ident(name), span)) => {
                if KEYWORDS.contains(&name.as_str()) {
                    Err(ParseError {
                        span,
                        message: format!("keyword {name} cannot be used as {what}"),
                    })
                } else {
                    Ok(name)
                }
            }
            Some((_, span)) => Err(ParseError {
                span,
                message: format!("expected {what}"),
            }),
            None => Err(ParseError {
                span: self.eol_span(),
                message: format!("expected {what}"),
            }),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        match self.next() {
            Some((t, _)) if t == tok => Ok(()),
            Some((_, span)) => Err(ParseError {
                span,
                message: format!("expected {what}"),
            }),
            None => Err(ParseError {
                span: self.eol_span(),
                message: format!("expected {what}"),
            }),
        }
    }

    fn at_end(&self) -> bool {
        self.idx >= self.toks.len()
    }

    fn expect_end(&mut self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.err_here("unexpected trailing input"))
        }
    }

    /// term := IDENT | IDENT "(" term ("," term)* ")"
    /// Bare identifiers are resolved against declarations after parsing.
    fn term(&mut self) -> Result<RawTerm, ParseError> {
        let name = self.expect_ident("a term")?;
        if self.peek() == Some(&Tok::LParen) {
            self.next();
            let mut args = Vec::new();
            if self.peek() == Some(&Tok::RParen) {
                self.next();
                return Ok(RawTerm::App(name, args));
            }
            loop {
                args.push(self.term()?);
                match self.next() {
                    Some((Tok::Comma, _)) => continue,
                    Some((Tok::RParen, _)) => break,
                    Some((_, span)) => {
                        return Err(ParseError {
                            span,
                            message: "expected , or ) in argument list".into(),
                        })
                    }
                    None => {
                        return Err(ParseError {
                            span: self.eol_span(),
                            message: "unclosed ( in term".into(),
                        })
                    }
                }
            }
            Ok(RawTerm::App(name, args))
        } else {
            Ok(RawTerm::Ident(name))
        }
    }
}

/// Terms before identifier resolution: a bare identifier may be a variable
/// or a 0-ary function symbol.
#[derive(Debug, Clone)]
enum RawTerm {
    Ident(String),
    App(String, Vec<RawTerm>),
}

enum RawDecl {
    Sort(String),
    Fun(String, Vec<String>, String),
    Vars(Vec<String>, String),
    Eq(RawTerm, RawTerm),
    Neq(RawTerm, RawTerm),
    Out(Vec<RawTerm>),
}

/// Parses `.tc` text into a validated [`System`].
pub fn parse(text: &str) -> Result<System, DslError> {
    let mut decls = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let toks = Lexer::run(line, line_no)?;
        if toks.is_empty() {
            continue;
        }
        let line_len = line.trim_end().len();
        let mut p = LineParser {
            toks,
            idx: 0,
            line_no,
            line_len,
        };
        let (head, head_span) = match p.next() {
            Some((Tok::Ident(name), span)) => (name, span),
            Some((_, span)) => {
                return Err(ParseError {
                    span,
                    message: "expected a declaration keyword".into(),
                }
                .into())
            }
            None => unreachable!(),
        };
        let decl = match head.as_str() {
            "sort" => {
                let name = p.expect_ident("a sort name")?;
                p.expect_end()?;
                RawDecl::Sort(name)
            }
            "fun" => {
                let name = p.expect_ident("a function name")?;
                p.expect(Tok::Colon, ": after function name")?;
                let mut args = Vec::new();
                loop {
                    match p.peek() {
                        Some(Tok::Arrow) => {
                            p.next();
                            break;
                        }
                        Some(Tok::Ident(_)) => args.push(p.expect_ident("an argument sort")?),
                        _ => return Err(p.err_here("expected argument sort or ->").into()),
                    }
                }
                let result = p.expect_ident("a result sort")?;
                p.expect_end()?;
                RawDecl::Fun(name, args, result)
            }
            "var" => {
                let mut names = vec![p.expect_ident("a variable name")?];
                while matches!(p.peek(), Some(Tok::Ident(_))) {
                    names.push(p.expect_ident("a variable name")?);
                }
                p.expect(Tok::Colon, ": after variable names")?;
                let sort = p.expect_ident("a sort name")?;
                p.expect_end()?;
                RawDecl::Vars(names, sort)
            }
            "eq" => {
                let lhs = p.term()?;
                p.expect(Tok::Equal, "= between equation sides")?;
                let rhs = p.term()?;
                p.expect_end()?;
                RawDecl::Eq(lhs, rhs)
            }
            "neq" => {
                let lhs = p.term()?;
                p.expect(Tok::NotEqual, "!= between disequality sides")?;
                let rhs = p.term()?;
                p.expect_end()?;
                RawDecl::Neq(lhs, rhs)
            }
            "out" => {
                let mut terms = vec![p.term()?];
                while !p.at_end() {
                    terms.push(p.term()?);
                }
                RawDecl::Out(terms)
            }
            other => {
                return Err(ParseError {
                    span: head_span,
                    message: format!("unknown declaration {other}"),
                }
                .into())
            }
        };
        decls.push((decl, head_span));
    }

    let mut sys = System::default();
    for (decl, _) in &decls {
        match decl {
            RawDecl::Sort(name) => sys.sorts.push(SortDecl { name: name.clone() }),
            RawDecl::Fun(name, args, result) => sys.funcs.push(FuncSymbol {
                name: name.clone(),
                arg_sorts: args.clone(),
                result_sort: result.clone(),
            }),
            RawDecl::Vars(names, sort) => {
                for n in names {
                    sys.vars.push(VarDecl {
                        name: n.clone(),
                        sort: sort.clone(),
                    });
                }
            }
            _ => {}
        }
    }

    for (decl, span) in &decls {
        match decl {
            RawDecl::Eq(l, r) => {
                let lhs = resolve(l, &sys, *span)?;
                let rhs = resolve(r, &sys, *span)?;
                sys.equations.push(Constraint::eq(lhs, rhs));
            }
            RawDecl::Neq(l, r) => {
                let lhs = resolve(l, &sys, *span)?;
                let rhs = resolve(r, &sys, *span)?;
                sys.disequalities.push(Constraint::neq(lhs, rhs));
            }
            RawDecl::Out(terms) => {
                for t in terms {
                    let t = resolve(t, &sys, *span)?;
                    sys.outputs.push(t);
                }
            }
            _ => {}
        }
    }

    let report = validate_system(&sys);
    if !report.ok() {
        return Err(DslError::Validation(report));
    }
    Ok(sys)
}

fn resolve(raw: &RawTerm, sys: &System, span: SourceSpan) -> Result<Term, ParseError> {
    match raw {
        RawTerm::Ident(name) => {
            if sys.var(name).is_some() {
                Ok(Term::Var(name.clone()))
            } else if sys.func(name).is_some() {
                Ok(Term::App(name.clone(), vec![]))
            } else {
                Err(ParseError {
                    span,
                    message: format!("undeclared identifier {name}"),
                })
            }
        }
        RawTerm::App(name, args) => {
            let args = args
                .iter()
                .map(|a| resolve(a, sys, span))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Term::App(name.clone(), args))
        }
    }
}

/// Renders a system in canonical form: sections in a fixed order, declaration
/// order preserved within each section. `parse(render(s))` is structurally
/// equal to `s` for every valid system.
pub fn render(sys: &System) -> String {
    let mut out = String::new();
    for s in &sys.sorts {
        writeln!(out, "sort {}", s.name).unwrap();
    }
    for f in &sys.funcs {
        write!(out, "fun {} :", f.name).unwrap();
        for a in &f.arg_sorts {
            write!(out, " {a}").unwrap();
        }
        writeln!(out, " -> {}", f.result_sort).unwrap();
    }
    for v in &sys.vars {
        writeln!(out, "var {} : {}", v.name, v.sort).unwrap();
    }
    for c in &sys.equations {
        writeln!(out, "eq {} = {}", c.lhs, c.rhs).unwrap();
    }
    for c in &sys.disequalities {
        writeln!(out, "neq {} != {}", c.lhs, c.rhs).unwrap();
    }
    if !sys.outputs.is_empty() {
        write!(out, "out").unwrap();
        for t in &sys.outputs {
            write!(out, " {t}").unwrap();
        }
        writeln!(out).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::{gen, ExampleId};

    #[test]
    fn parse_simple_system() {
        let sys = parse("sort P\nfun f : P P -> P\nvar x y : P\neq f(x,y) = f(y,x)\n").unwrap();
        assert_eq!(sys.equations.len(), 1);
        assert_eq!(sys.vars.len(), 2);
    }

    #[test]
    fn parse_steiner_file_matches_generator() {
        let text = "\
sort P
fun f : P P -> P
var x y : P
eq f(x,x) = x
eq f(x,y) = f(y,x)
eq f(x,f(x,y)) = y
";
        let sys = parse(text).unwrap();
        assert_eq!(sys, gen(&ExampleId::SteinerQuasigroup).unwrap());
    }

    #[test]
    fn unclosed_paren_is_an_error_with_span() {
        let err = parse("sort P\nfun f : P -> P\nvar x : P\neq f(x = x\n").unwrap_err();
        match err {
            DslError::Parse(e) => assert_eq!(e.span.line, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let sys = parse("# comment\nsort P\n\nvar x : P # trailing\n").unwrap();
        assert_eq!(sys.vars.len(), 1);
    }

    #[test]
    fn constants_render_bare_and_reparse() {
        let text = "sort B\nfun c : -> B\nvar x : B\nneq c != x\n";
        let sys = parse(text).unwrap();
        assert_eq!(sys.disequalities[0].lhs, Term::app("c", vec![]));
        let again = parse(&render(&sys)).unwrap();
        assert_eq!(sys, again);
    }

    #[test]
    fn crlf_tolerated() {
        let sys = parse("sort P\r\nvar x : P\r\n").unwrap();
        assert_eq!(sys.vars.len(), 1);
    }

    #[test]
    fn all_generated_examples_round_trip() {
        for id in ExampleId::all() {
            let sys = gen(&id).unwrap();
            let text = render(&sys);
            let back = parse(&text).unwrap_or_else(|e| panic!("{id:?}: {e}"));
            assert_eq!(sys, back, "round trip failed for {id:?}");
        }
    }

    #[test]
    fn declarations_only_renders_without_constraints() {
        let sys = parse("sort P\nvar x : P\n").unwrap();
        let text = render(&sys);
        assert!(!text.contains("eq"));
        assert_eq!(parse(&text).unwrap(), sys);
    }

    mod roundtrip {
        use super::*;
        use crate::ir::{Constraint, FuncSymbol, SortDecl, System, Term, VarDecl};
        use proptest::prelude::*;

        /// Builds an arbitrary valid system from a byte recipe: a couple of
        /// sorts, a few typed symbols and variables, and random well-typed
        /// constraints and outputs.
        fn system_from_recipe(bytes: &[u8]) -> System {
            let mut i = 0usize;
            let mut next = || {
                let b = bytes.get(i).copied().unwrap_or(0);
                i += 1;
                b as usize
            };
            let num_sorts = 1 + next() % 2;
            let sorts: Vec<String> = (0..num_sorts).map(|k| format!("S{k}")).collect();
            let num_funcs = next() % 3;
            let funcs: Vec<FuncSymbol> = (0..num_funcs)
                .map(|k| {
                    let arity = next() % 3;
                    FuncSymbol {
                        name: format!("f{k}"),
                        arg_sorts: (0..arity).map(|_| sorts[next() % num_sorts].clone()).collect(),
                        result_sort: sorts[next() % num_sorts].clone(),
                    }
                })
                .collect();
            // One variable per sort guarantees every sort is inhabited.
            let mut vars: Vec<VarDecl> = sorts
                .iter()
                .map(|s| VarDecl {
                    name: format!("v{s}"),
                    sort: s.clone(),
                })
                .collect();
            for k in 0..next() % 3 {
                vars.push(VarDecl {
                    name: format!("w{k}"),
                    sort: sorts[next() % num_sorts].clone(),
                });
            }
            let sys_skel = System {
                sorts: sorts.iter().map(|s| SortDecl { name: s.clone() }).collect(),
                funcs: funcs.clone(),
                vars: vars.clone(),
                ..System::default()
            };
            fn term_of_sort(
                sys: &System,
                sort: &str,
                depth: usize,
                next: &mut dyn FnMut() -> usize,
            ) -> Term {
                let candidates: Vec<&FuncSymbol> = sys
                    .funcs
                    .iter()
                    .filter(|f| f.result_sort == sort)
                    .collect();
                if depth > 0 && !candidates.is_empty() && next() % 2 == 0 {
                    let f = candidates[next() % candidates.len()];
                    let args = f
                        .arg_sorts
                        .iter()
                        .map(|s| term_of_sort(sys, s, depth - 1, next))
                        .collect();
                    Term::App(f.name.clone(), args)
                } else {
                    let vs: Vec<&VarDecl> =
                        sys.vars.iter().filter(|v| v.sort == sort).collect();
                    Term::Var(vs[next() % vs.len()].name.clone())
                }
            }
            let mut sys = sys_skel.clone();
            for _ in 0..next() % 3 {
                let sort = &sorts[next() % num_sorts];
                let lhs = term_of_sort(&sys_skel, sort, 2, &mut next);
                let rhs = term_of_sort(&sys_skel, sort, 2, &mut next);
                sys.equations.push(Constraint::eq(lhs, rhs));
            }
            for _ in 0..next() % 2 {
                let sort = &sorts[next() % num_sorts];
                let lhs = term_of_sort(&sys_skel, sort, 1, &mut next);
                let rhs = term_of_sort(&sys_skel, sort, 1, &mut next);
                if lhs != rhs {
                    sys.disequalities.push(Constraint::neq(lhs, rhs));
                }
            }
            for _ in 0..next() % 3 {
                let sort = &sorts[next() % num_sorts];
                sys.outputs.push(term_of_sort(&sys_skel, sort, 2, &mut next));
            }
            sys
        }

        proptest! {
            #[test]
            fn parse_render_round_trip(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
                let sys = system_from_recipe(&bytes);
                prop_assert!(crate::ir::validate_system(&sys).ok());
                let text = render(&sys);
                let back = parse(&text).expect("canonical text parses");
                prop_assert_eq!(sys, back);
            }
        }
    }
}
