use std::collections::HashMap;

use num_bigint::BigUint;
use thiserror::Error;

use crate::registry::Registry;
use crate::term::{OpSymbol, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected {found}, expected {expected}")]
    Unexpected { found: String, expected: &'static str },
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("`{name}` takes {expected} argument(s), got {got}")]
    Arity { name: String, expected: usize, got: usize },
    #[error("invalid character `{0}`")]
    InvalidChar(char),
}

/// A parsed term together with the source names of its variables.
#[derive(Debug, Clone)]
pub struct Parsed {
    pub term: Term,
    /// `vars[i]` is the name that became variable `i`.
    pub vars: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigUint),
    Ident(String),
    Plus,
    Monus,
    Star,
    Slash,
    Percent,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Bar,
    Comma,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(n) => format!("number {n}"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::End => "end of input".into(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::Plus => "+",
            Tok::Monus => "-.",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Percent => "%",
            Tok::Caret => "^",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Bar => "|",
            Tok::Comma => ",",
            _ => "",
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Pos {
    line: usize,
    column: usize,
}

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let (mut line, mut column) = (1usize, 1usize);
    while let Some(&c) = chars.peek() {
        let pos = Pos { line, column };
        let err = |kind| ParseError {
            line: pos.line,
            column: pos.column,
            kind,
        };
        if c == '\n' {
            chars.next();
            line += 1;
            column = 1;
            continue;
        }
        if c.is_whitespace() {
            chars.next();
            column += 1;
            continue;
        }
        if c == '#' {
            while chars.peek().is_some_and(|&c| c != '\n') {
                chars.next();
            }
            continue;
        }
        if c.is_ascii_digit() {
            let mut digits = String::new();
            while let Some(&d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                digits.push(d);
                chars.next();
                column += 1;
            }
            let n = digits.parse::<BigUint>().expect("decimal digits");
            out.push((Tok::Num(n), pos));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut name = String::new();
            while let Some(&d) = chars.peek().filter(|d| d.is_alphanumeric() || **d == '_') {
                name.push(d);
                chars.next();
                column += 1;
            }
            out.push((Tok::Ident(name), pos));
            continue;
        }
        chars.next();
        column += 1;
        let tok = match c {
            '+' => Tok::Plus,
            '∸' => Tok::Monus,
            '-' => {
                if chars.peek() == Some(&'.') {
                    chars.next();
                    column += 1;
                    Tok::Monus
                } else {
                    return Err(err(ParseErrorKind::Unexpected {
                        found: "`-`".into(),
                        expected: "`-.` (truncated subtraction)",
                    }));
                }
            }
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '%' => Tok::Percent,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            '|' => Tok::Bar,
            ',' => Tok::Comma,
            other => return Err(err(ParseErrorKind::InvalidChar(other))),
        };
        out.push((tok, pos));
    }
    out.push((Tok::End, Pos { line, column }));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    registry: Option<&'a Registry>,
    vars: Vec<String>,
    index: HashMap<String, u32>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if t != Tok::End {
            self.at += 1;
        }
        t
    }

    fn error_at(&self, pos: Pos, kind: ParseErrorKind) -> ParseError {
        ParseError {
            line: pos.line,
            column: pos.column,
            kind,
        }
    }

    fn unexpected(&self, expected: &'static str) -> ParseError {
        self.error_at(
            self.pos(),
            ParseErrorKind::Unexpected {
                found: self.peek().describe(),
                expected,
            },
        )
    }

    fn expect(&mut self, tok: Tok, expected: &'static str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn sum(&mut self) -> Result<Term, ParseError> {
        let mut lhs = self.product()?;
        loop {
            let sym = match self.peek() {
                Tok::Plus => OpSymbol::Add,
                Tok::Monus => OpSymbol::Monus,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.product()?;
            lhs = Term::op(sym, vec![lhs, rhs]).expect("binary");
        }
    }

    fn product(&mut self) -> Result<Term, ParseError> {
        let mut lhs = self.power()?;
        loop {
            let sym = match self.peek() {
                Tok::Star => OpSymbol::Mul,
                Tok::Slash => OpSymbol::Div,
                Tok::Percent => OpSymbol::Mod,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.power()?;
            lhs = Term::op(sym, vec![lhs, rhs]).expect("binary");
        }
    }

    fn power(&mut self) -> Result<Term, ParseError> {
        let two_literal = matches!(self.peek(), Tok::Num(n) if *n == BigUint::from(2u32));
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let exponent = self.power()?;
        Ok(if two_literal {
            Term::exp2(exponent)
        } else {
            Term::pow(base, exponent)
        })
    }

    fn atom(&mut self) -> Result<Term, ParseError> {
        let pos = self.pos();
        if !matches!(self.peek(), Tok::Num(_) | Tok::LParen | Tok::LBracket | Tok::Ident(_)) {
            return Err(self.unexpected("a term"));
        }
        match self.bump() {
            Tok::Num(n) => Ok(Term::constant(n)),
            Tok::LParen => {
                let t = self.sum()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(t)
            }
            Tok::LBracket => {
                let a = self.sum()?;
                self.expect(Tok::Bar, "`|`")?;
                let b = self.sum()?;
                self.expect(Tok::RBracket, "`]`")?;
                Ok(Term::pair(a, b))
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    self.call(name, pos)
                } else {
                    Ok(self.variable(name))
                }
            }
            _ => unreachable!("checked by the caller"),
        }
    }

    fn variable(&mut self, name: String) -> Term {
        let next = self.vars.len() as u32;
        let i = *self.index.entry(name.clone()).or_insert_with(|| {
            self.vars.push(name);
            next
        });
        Term::var(i)
    }

    fn resolve(&self, name: &str) -> Option<OpSymbol> {
        if let Some(id) = self.registry.and_then(|r| r.lookup(name)) {
            return Some(OpSymbol::Ext(id));
        }
        match name {
            "exp2" | "sq" | "double" | "succ" | "pair" | "pow" | "L" | "R" | "l" | "r" | "h" | "g" => {
                OpSymbol::from_name(name)
            }
            _ => {
                let id = name.strip_prefix("ext")?.parse::<u32>().ok()?;
                match self.registry {
                    Some(r) if r.get(id).is_none() => None,
                    _ => Some(OpSymbol::Ext(id)),
                }
            }
        }
    }

    fn call(&mut self, name: String, pos: Pos) -> Result<Term, ParseError> {
        let sym = self
            .resolve(&name)
            .ok_or_else(|| self.error_at(pos, ParseErrorKind::UnknownFunction(name.clone())))?;
        self.expect(Tok::LParen, "`(`")?;
        let mut args = vec![self.sum()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            args.push(self.sum()?);
        }
        self.expect(Tok::RParen, "`,` or `)`")?;
        if args.len() != sym.arity() {
            return Err(self.error_at(
                pos,
                ParseErrorKind::Arity {
                    name,
                    expected: sym.arity(),
                    got: args.len(),
                },
            ));
        }
        Ok(Term::op(sym, args).expect("arity checked"))
    }
}

fn parse_inner(src: &str, registry: Option<&Registry>) -> Result<Parsed, ParseError> {
    let mut p = Parser {
        toks: lex(src)?,
        at: 0,
        registry,
        vars: Vec::new(),
        index: HashMap::new(),
    };
    let term = p.sum()?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected("an operator or end of input"));
    }
    Ok(Parsed { term, vars: p.vars })
}

/// Parses a term over the builtin symbols.
pub fn parse(src: &str) -> Result<Term, ParseError> {
    parse_inner(src, None).map(|p| p.term)
}

/// Parses a term that may call symbols registered in `registry`.
pub fn parse_with_registry(src: &str, registry: &Registry) -> Result<Term, ParseError> {
    parse_inner(src, Some(registry)).map(|p| p.term)
}

/// Parses a term and reports which name became which variable index.
pub fn parse_with_names(src: &str, registry: Option<&Registry>) -> Result<Parsed, ParseError> {
    parse_inner(src, registry)
}

/// Parses one term per non-blank line. Error positions refer to the file.
pub fn parse_file(text: &str, registry: Option<&Registry>) -> Result<Vec<Parsed>, ParseError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let parsed = parse_inner(body, registry).map_err(|mut e| {
            e.line += i;
            e
        })?;
        out.push(parsed);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Term {
        parse(s).unwrap_or_else(|e| panic!("{s}: {e}"))
    }

    #[test]
    fn precedence_and_associativity() {
        let (x, y, z) = (Term::var(0), Term::var(1), Term::var(2));
        assert_eq!(p("x -. y -. z"), Term::monus(Term::monus(x.clone(), y.clone()), z.clone()));
        assert_eq!(p("x + y * z"), Term::add(x.clone(), Term::mul(y.clone(), z.clone())));
        assert_eq!(p("x ^ y ^ z"), Term::pow(x.clone(), Term::pow(y.clone(), z.clone())));
        assert_eq!(p("x % y + z"), Term::add(Term::modulo(x.clone(), y.clone()), z.clone()));
        assert_eq!(p("x ∸ y"), Term::monus(x.clone(), y.clone()));
    }

    #[test]
    fn two_literal_base_is_exp2() {
        let x = Term::var(0);
        assert_eq!(p("2^x"), Term::exp2(x.clone()));
        assert_eq!(p("exp2(x)"), Term::exp2(x.clone()));
        assert_eq!(p("3^x"), Term::pow(Term::constant(3u32), x.clone()));
        assert_eq!(p("(2)^x"), Term::pow(Term::constant(2u32), x.clone()));
        assert_eq!(p("pow(2, x)"), Term::pow(Term::constant(2u32), x));
    }

    #[test]
    fn monus_identity_inner_term() {
        let (x, y) = (Term::var(0), Term::var(1));
        let e = Term::exp2(Term::add(x.clone(), y.clone()));
        let expect = Term::modulo(Term::add(e.clone(), x), Term::add(e, y));
        assert_eq!(p("(2^(x+y) + x) % (2^(x+y) + y)"), expect);
    }

    #[test]
    fn function_forms() {
        let x = Term::var(0);
        assert_eq!(p("[x | x]"), Term::pair(x.clone(), x.clone()));
        assert_eq!(p("L(R(x))"), Term::left(Term::right(x.clone())));
        assert_eq!(p("l(r(x))"), Term::left(Term::right(x.clone())));
        assert_eq!(p("sq(double(succ(x)))"), Term::square(Term::double(Term::succ(x.clone()))));
        assert_eq!(p("h(x, g(x, 1))"), Term::h(x.clone(), Term::g(x.clone(), Term::constant(1u32))));
        assert_eq!(p("ext2(x)"), Term::ext(2, x));
    }

    #[test]
    fn variables_numbered_by_first_occurrence() {
        let parsed = parse_with_names("b + a + b", None).unwrap();
        assert_eq!(parsed.vars, vec!["b".to_string(), "a".to_string()]);
        assert_eq!(parsed.term, Term::add(Term::add(Term::var(0), Term::var(1)), Term::var(0)));
    }

    #[test]
    fn registered_names() {
        let mut reg = Registry::new();
        let id = reg.define_unary("f0", p("2 * (x + 1)")).unwrap();
        assert_eq!(parse_with_registry("f0(y)", &reg).unwrap(), Term::ext(id, Term::var(0)));
        let err = parse("f0(y)").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownFunction("f0".into()));
        assert!(parse_with_registry("ext7(x)", &reg).is_err());
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse("x +\n  * y").unwrap_err();
        assert_eq!((e.line, e.column), (2, 3));
        let e = parse("foo(x)").unwrap_err();
        assert_eq!((e.line, e.column), (1, 1));
        assert_eq!(e.kind, ParseErrorKind::UnknownFunction("foo".into()));
        let e = parse("exp2(x, y)").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Arity { expected: 1, got: 2, .. }));
        let e = parse("x - y").unwrap_err();
        assert_eq!((e.line, e.column), (1, 3));
        assert!(parse("(x + y").is_err());
        assert!(parse("x y").is_err());
        assert!(parse("").is_err());
    }

    #[test]
    fn comments_and_files() {
        assert_eq!(p("x + 1 # successor"), Term::add(Term::var(0), Term::constant(1u32)));
        let file = "# header\nx + y\n\n2^x # tower\nx -. \n";
        let err = parse_file(file, None).unwrap_err();
        assert_eq!(err.line, 5);
        let ok = parse_file("# header\nx + y\n\n2^x # tower\n", None).unwrap();
        assert_eq!(ok.len(), 2);
        assert_eq!(ok[1].term, Term::exp2(Term::var(0)));
    }
}
