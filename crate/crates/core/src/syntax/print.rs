use std::fmt::Write;

use crate::registry::Registry;
use crate::term::{OpSymbol, Term, TermKind};

/// Printed name of variable `i`: `x`, `y`, `z`, then `x3`, `x4`, ...
pub fn var_name(i: u32) -> String {
    match i {
        0 => "x".into(),
        1 => "y".into(),
        2 => "z".into(),
        _ => format!("x{i}"),
    }
}

const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const POWER: u8 = 3;
const ATOM: u8 = 4;

fn precedence(t: &Term) -> u8 {
    match t.kind() {
        TermKind::Op(sym, children) => match sym {
            OpSymbol::Add | OpSymbol::Monus => SUM,
            OpSymbol::Mul | OpSymbol::Div | OpSymbol::Mod => PRODUCT,
            OpSymbol::Exp2 => POWER,
            OpSymbol::Pow if children[0].as_const().is_none_or(|c| *c != 2u32.into()) => POWER,
            _ => ATOM,
        },
        _ => ATOM,
    }
}

struct Printer<'a> {
    registry: Option<&'a Registry>,
    out: String,
}

impl Printer<'_> {
    fn operand(&mut self, t: &Term, parens: bool) {
        if parens {
            self.out.push('(');
            self.term(t);
            self.out.push(')');
        } else {
            self.term(t);
        }
    }

    fn infix(&mut self, op: &str, level: u8, a: &Term, b: &Term) {
        // Sums and products associate left; powers associate right.
        let (left_parens, right_parens) = if level == POWER {
            (precedence(a) <= POWER, precedence(b) < POWER)
        } else {
            (precedence(a) < level, precedence(b) <= level)
        };
        self.operand(a, left_parens);
        self.out.push_str(op);
        self.operand(b, right_parens);
    }

    fn call(&mut self, name: &str, args: &[Term]) {
        self.out.push_str(name);
        self.out.push('(');
        for (i, a) in args.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            self.term(a);
        }
        self.out.push(')');
    }

    fn term(&mut self, t: &Term) {
        match t.kind() {
            TermKind::Const(c) => write!(self.out, "{c}").expect("string write"),
            TermKind::Var(i) => self.out.push_str(&var_name(*i)),
            TermKind::Op(sym, ch) => match sym {
                OpSymbol::Add => self.infix(" + ", SUM, &ch[0], &ch[1]),
                OpSymbol::Monus => self.infix(" -. ", SUM, &ch[0], &ch[1]),
                OpSymbol::Mul => self.infix(" * ", PRODUCT, &ch[0], &ch[1]),
                OpSymbol::Div => self.infix(" / ", PRODUCT, &ch[0], &ch[1]),
                OpSymbol::Mod => self.infix(" % ", PRODUCT, &ch[0], &ch[1]),
                OpSymbol::Exp2 => {
                    self.out.push_str("2^");
                    self.operand(&ch[0], precedence(&ch[0]) < POWER);
                }
                OpSymbol::Pow => {
                    if precedence(t) == POWER {
                        self.infix("^", POWER, &ch[0], &ch[1]);
                    } else {
                        // `2^e` would read back as exp2
                        self.call("pow", ch);
                    }
                }
                OpSymbol::Pair => {
                    self.out.push('[');
                    self.term(&ch[0]);
                    self.out.push_str(" | ");
                    self.term(&ch[1]);
                    self.out.push(']');
                }
                OpSymbol::Left => self.call("L", ch),
                OpSymbol::Right => self.call("R", ch),
                OpSymbol::Ext(id) => match self.registry.and_then(|r| r.name_of(*id)) {
                    Some(name) => self.call(name, ch),
                    None => self.call(&format!("ext{id}"), ch),
                },
                other => self.call(other.name(), ch),
            },
        }
    }
}

/// Prints a term with minimal parentheses; `parse(print(t))` rebuilds `t`
/// when variables appear in index order.
pub fn print(t: &Term) -> String {
    print_with(t, None)
}

/// Like [`print`], using registered names for registry symbols.
pub fn print_with(t: &Term, registry: Option<&Registry>) -> String {
    let mut p = Printer {
        registry,
        out: String::new(),
    };
    p.term(t);
    p.out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;
    use proptest::prelude::*;
    use std::collections::HashMap;

    fn v(i: u32) -> Term {
        Term::var(i)
    }

    #[test]
    fn examples() {
        assert_eq!(print(&Term::pair(v(0), Term::constant(1u32))), "[x | 1]");
        let sq = Term::modulo(
            Term::exp2(Term::add(v(0), v(0))),
            Term::add(Term::exp2(v(0)), v(0)),
        );
        assert_eq!(print(&sq), "2^(x + x) % (2^x + x)");
        assert_eq!(print(&Term::monus(v(0), Term::monus(v(1), v(2)))), "x -. (y -. z)");
        assert_eq!(print(&Term::monus(Term::monus(v(0), v(1)), v(2))), "x -. y -. z");
    }

    #[test]
    fn powers() {
        assert_eq!(print(&Term::pow(Term::constant(2u32), v(0))), "pow(2, x)");
        assert_eq!(print(&Term::pow(Term::constant(3u32), v(0))), "3^x");
        assert_eq!(print(&Term::pow(Term::pow(v(0), v(1)), v(2))), "(x^y)^z");
        assert_eq!(print(&Term::pow(v(0), Term::pow(v(1), v(2)))), "x^y^z");
        assert_eq!(print(&Term::exp2(Term::exp2(v(0)))), "2^2^x");
        assert_eq!(print(&Term::pow(Term::exp2(v(0)), v(1))), "(2^x)^y");
    }

    #[test]
    fn registry_names() {
        let mut reg = Registry::new();
        let id = reg.define_unary("f0", Term::double(Term::succ(v(0)))).unwrap();
        let t = Term::ext(id, v(0));
        assert_eq!(print_with(&t, Some(&reg)), "f0(x)");
        assert_eq!(print(&t), "ext0(x)");
    }

    fn leaf() -> impl Strategy<Value = Term> {
        prop_oneof![(0u32..4).prop_map(Term::var), (0u64..40).prop_map(Term::constant)]
    }

    pub(crate) fn arb_term() -> impl Strategy<Value = Term> {
        leaf().prop_recursive(5, 40, 2, |inner| {
            let syms: Vec<OpSymbol> = OpSymbol::BUILTIN.to_vec();
            (proptest::sample::select(syms), inner.clone(), inner).prop_map(|(s, a, b)| {
                let args = if s.arity() == 1 { vec![a] } else { vec![a, b] };
                Term::op(s, args).unwrap()
            })
        })
    }

    /// Renames variables to first-occurrence order, which is what the parser assigns.
    fn normalize(t: &Term) -> Term {
        let mut order: Vec<u32> = Vec::new();
        fn walk(t: &Term, order: &mut Vec<u32>) {
            match t.kind() {
                TermKind::Var(i) if !order.contains(i) => order.push(*i),
                TermKind::Op(_, ch) => ch.iter().for_each(|c| walk(c, order)),
                _ => {}
            }
        }
        walk(t, &mut order);
        let map: HashMap<u32, Term> = order.iter().enumerate().map(|(n, &i)| (i, Term::var(n as u32))).collect();
        t.substitute(&map)
    }

    proptest! {
        #[test]
        fn round_trip(t in arb_term()) {
            let t = normalize(&t);
            let text = print(&t);
            let back = parse(&text).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?;
            prop_assert_eq!(&back, &t, "{}", text);
            prop_assert_eq!(print(&back), text);
        }
    }
}
