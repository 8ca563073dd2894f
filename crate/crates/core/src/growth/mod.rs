//! Growth certificates for unary terms over small sub-bases, and bounded
//! enumeration evidence that a function lies outside a closure.
//!
//! Each certificate is computed by structural induction and promises a
//! shape of the term's values:
//!
//! | sub-basis            | certificate  | predicate on `t(a)`                       |
//! |----------------------|--------------|-------------------------------------------|
//! | `mod, 2^x`           | `B`          | power of two, or `<= max(B, a)`           |
//! | `+, 2^x`             | tag          | constant, or strictly increasing          |
//! | `+, mod`             | `(A, B)`     | `< A a + B`                               |
//! | `double, mod, 2^x`   | `(A, B)`     | power of two, or `<= A max(B, a)`         |
//!
//! Predicates are checked with exact symbolic values ([`TowerNat`]), so
//! towers such as `2^2^2^a` at `a = 2000` are decided, not skipped.

pub mod refute;
pub mod sample;

use std::fmt;
use std::ops::RangeInclusive;

use num_bigint::BigUint;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::registry::Registry;
use crate::report::{ser_big, VerificationReport};
use crate::term::{OpSymbol, Signature, Term, TermKind};
use crate::tower::{TowerEvaluator, TowerNat};

pub use refute::{refute_membership, Outcome, RefutationEvidence, RefuteConfig};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertError {
    #[error("symbol `{symbol}` is outside the sub-basis {allowed}")]
    SignatureViolation { symbol: OpSymbol, allowed: Signature },
    #[error("certificates are for unary terms; found variables {0:?}")]
    NonUnary(Vec<u32>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Monotonicity {
    Constant,
    StrictlyIncreasing,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum GrowthCertificate {
    ModExp {
        #[serde(serialize_with = "ser_big")]
        b: BigUint,
    },
    AddExp {
        tag: Monotonicity,
    },
    AddMod {
        #[serde(serialize_with = "ser_big")]
        a: BigUint,
        #[serde(serialize_with = "ser_big")]
        b: BigUint,
    },
    DoubleModExp {
        #[serde(serialize_with = "ser_big")]
        a: BigUint,
        #[serde(serialize_with = "ser_big")]
        b: BigUint,
    },
}

impl fmt::Display for GrowthCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrowthCertificate::ModExp { b } => write!(f, "B={b}"),
            GrowthCertificate::AddExp { tag } => write!(f, "{tag:?}"),
            GrowthCertificate::AddMod { a, b } | GrowthCertificate::DoubleModExp { a, b } => write!(f, "A={a} B={b}"),
        }
    }
}

/// Which certificate family to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Lemma {
    ModExp,
    AddExp,
    AddMod,
    DoubleModExp,
}

impl Lemma {
    pub const ALL: [Lemma; 4] = [Lemma::ModExp, Lemma::AddExp, Lemma::AddMod, Lemma::DoubleModExp];

    pub fn signature(self) -> Signature {
        use OpSymbol::*;
        match self {
            Lemma::ModExp => Signature::new([Mod, Exp2]),
            Lemma::AddExp => Signature::new([Add, Exp2]),
            Lemma::AddMod => Signature::new([Add, Mod]),
            Lemma::DoubleModExp => Signature::new([Double, Mod, Exp2]),
        }
    }

    pub fn from_name(name: &str) -> Option<Lemma> {
        Some(match name {
            "mod-exp" => Lemma::ModExp,
            "add-exp" => Lemma::AddExp,
            "add-mod" => Lemma::AddMod,
            "double-mod-exp" => Lemma::DoubleModExp,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Lemma::ModExp => "mod-exp",
            Lemma::AddExp => "add-exp",
            Lemma::AddMod => "add-mod",
            Lemma::DoubleModExp => "double-mod-exp",
        }
    }

    pub fn certify(self, t: &Term) -> Result<GrowthCertificate, CertError> {
        match self {
            Lemma::ModExp => certify_mod_exp(t),
            Lemma::AddExp => certify_add_exp(t),
            Lemma::AddMod => certify_add_mod(t),
            Lemma::DoubleModExp => certify_double_mod_exp(t),
        }
    }
}

fn check_shape(t: &Term, allowed: &Signature) -> Result<(), CertError> {
    let extra: Vec<u32> = t.free_vars().into_iter().filter(|&v| v != 0).collect();
    if !extra.is_empty() {
        return Err(CertError::NonUnary(extra));
    }
    match t.symbols().into_iter().find(|s| !allowed.contains(*s)) {
        Some(symbol) => Err(CertError::SignatureViolation {
            symbol,
            allowed: allowed.clone(),
        }),
        None => Ok(()),
    }
}

/// Folds a certificate value bottom-up over the DAG.
fn fold<V: Clone>(t: &Term, mut f: impl FnMut(&TermKind, &[V]) -> V) -> V {
    let mut memo: std::collections::HashMap<u64, V> = std::collections::HashMap::new();
    for node in t.postorder() {
        let ch: Vec<V> = node.children().iter().map(|c| memo[&c.id()].clone()).collect();
        let v = f(node.kind(), &ch);
        memo.insert(node.id(), v);
    }
    memo.remove(&t.id()).expect("root visited")
}

/// `c -> c`, `x -> 0`, `2^t -> 0`, `t1 mod t2 -> max(B1, B2)`.
pub fn certify_mod_exp(t: &Term) -> Result<GrowthCertificate, CertError> {
    check_shape(t, &Lemma::ModExp.signature())?;
    let b = fold(t, |k, ch: &[BigUint]| match k {
        TermKind::Const(c) => c.clone(),
        TermKind::Var(_) => BigUint::zero(),
        TermKind::Op(OpSymbol::Exp2, _) => BigUint::zero(),
        TermKind::Op(_, _) => ch[0].clone().max(ch[1].clone()),
    });
    Ok(GrowthCertificate::ModExp { b })
}

/// Constant exactly when no variable occurs.
pub fn certify_add_exp(t: &Term) -> Result<GrowthCertificate, CertError> {
    check_shape(t, &Lemma::AddExp.signature())?;
    let tag = if t.free_vars().is_empty() {
        Monotonicity::Constant
    } else {
        Monotonicity::StrictlyIncreasing
    };
    Ok(GrowthCertificate::AddExp { tag })
}

/// `c -> (0, c+1)`, `x -> (1, 1)`, `t1 + t2 -> (A1+A2, B1+B2)`, `t1 mod t2 -> (A1, B1)`.
pub fn certify_add_mod(t: &Term) -> Result<GrowthCertificate, CertError> {
    check_shape(t, &Lemma::AddMod.signature())?;
    let (a, b) = fold(t, |k, ch: &[(BigUint, BigUint)]| match k {
        TermKind::Const(c) => (BigUint::zero(), c + 1u32),
        TermKind::Var(_) => (1u32.into(), 1u32.into()),
        TermKind::Op(OpSymbol::Add, _) => (&ch[0].0 + &ch[1].0, &ch[0].1 + &ch[1].1),
        TermKind::Op(_, _) => ch[0].clone(),
    });
    Ok(GrowthCertificate::AddMod { a, b })
}

/// `c -> (1, c)`, `x -> (1, 0)`, `double(t) -> (2A, B)`, `2^t -> (1, 0)`,
/// `t1 mod t2 -> (max(A1, A2), max(B1, B2))`.
pub fn certify_double_mod_exp(t: &Term) -> Result<GrowthCertificate, CertError> {
    check_shape(t, &Lemma::DoubleModExp.signature())?;
    let (a, b) = fold(t, |k, ch: &[(BigUint, BigUint)]| match k {
        TermKind::Const(c) => (1u32.into(), c.clone()),
        TermKind::Var(_) => (1u32.into(), BigUint::zero()),
        TermKind::Op(OpSymbol::Double, _) => (&ch[0].0 << 1u32, ch[0].1.clone()),
        TermKind::Op(OpSymbol::Exp2, _) => (1u32.into(), BigUint::zero()),
        TermKind::Op(_, _) => (ch[0].0.clone().max(ch[1].0.clone()), ch[0].1.clone().max(ch[1].1.clone())),
    });
    Ok(GrowthCertificate::DoubleModExp { a, b })
}

/// Whether the certificate's predicate holds at `a`, given `t(a)` and, for
/// the monotonicity tag, `t(a + 1)` and `t(0)`.
fn predicate(cert: &GrowthCertificate, a: u64, v: &TowerNat, next: &TowerNat, first: &TowerNat) -> bool {
    let a_t = TowerNat::from_u64(a);
    let big = |n: &BigUint| TowerNat::from_biguint(n);
    match cert {
        GrowthCertificate::ModExp { b } => v.is_power_of_two() || *v <= big(b).max(a_t),
        GrowthCertificate::AddExp { tag: Monotonicity::Constant } => v == first,
        GrowthCertificate::AddExp {
            tag: Monotonicity::StrictlyIncreasing,
        } => v < next,
        GrowthCertificate::AddMod { a: ca, b: cb } => {
            let bound = big(ca).mul(&a_t).expect("small factors").add(&big(cb));
            *v < bound
        }
        GrowthCertificate::DoubleModExp { a: ca, b: cb } => {
            let bound = big(ca).mul(&big(cb).max(a_t)).expect("small factors");
            v.is_power_of_two() || *v <= bound
        }
    }
}

fn describe(cert: &GrowthCertificate, a: u64) -> String {
    match cert {
        GrowthCertificate::ModExp { b } => format!("a power of two or <= {}", b.clone().max(a.into())),
        GrowthCertificate::AddExp { tag: Monotonicity::Constant } => "t(0)".into(),
        GrowthCertificate::AddExp { .. } => "< t(a+1)".into(),
        GrowthCertificate::AddMod { a: ca, b: cb } => format!("< {}", ca * a + cb),
        GrowthCertificate::DoubleModExp { a: ca, b: cb } => {
            format!("a power of two or <= {}", ca * cb.clone().max(a.into()))
        }
    }
}

/// Evaluates the predicate of `cert` at every `a` in `range`.
pub fn check_certificate(t: &Term, cert: &GrowthCertificate, range: RangeInclusive<u64>) -> VerificationReport {
    let registry = Registry::new();
    let ev = TowerEvaluator::new(&registry);
    let (lo, hi) = (*range.start(), *range.end());
    let at = |a: u64| ev.eval(t, &[TowerNat::from_u64(a)]);
    let first = at(0);
    let rows: Vec<(u64, Result<bool, String>)> = (lo..=hi)
        .into_par_iter()
        .map(|a| {
            let r = match (at(a), at(a + 1), &first) {
                (Ok(v), Ok(next), Ok(first)) => Ok(predicate(cert, a, &v, &next, first)),
                (Err(e), _, _) | (_, Err(e), _) => Err(e.to_string()),
                (_, _, Err(e)) => Err(e.to_string()),
            };
            (a, r)
        })
        .collect();
    let mut report = VerificationReport::new(format!("{cert} for {t} on [{lo}, {hi}]"));
    for (a, r) in rows {
        match r {
            Ok(true) => report.record_pass(),
            Ok(false) => {
                let v = at(a).expect("evaluated above");
                report.record_mismatch(vec![a], describe(cert, a), v);
            }
            Err(reason) => report.record_inconclusive(vec![a], reason),
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    fn p(s: &str) -> Term {
        parse(s).unwrap()
    }

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn mod_exp_examples() {
        assert_eq!(certify_mod_exp(&p("2^x % (x % 7)")).unwrap(), GrowthCertificate::ModExp { b: big(7) });
        assert_eq!(certify_mod_exp(&p("x")).unwrap(), GrowthCertificate::ModExp { b: big(0) });
        assert_eq!(certify_mod_exp(&p("2^x")).unwrap(), GrowthCertificate::ModExp { b: big(0) });
        assert!(matches!(
            certify_mod_exp(&p("x + 1")),
            Err(CertError::SignatureViolation { symbol: OpSymbol::Add, .. })
        ));
        assert!(matches!(certify_mod_exp(&p("x % y")), Err(CertError::NonUnary(_))));
    }

    #[test]
    fn add_exp_examples() {
        let inc = GrowthCertificate::AddExp {
            tag: Monotonicity::StrictlyIncreasing,
        };
        assert_eq!(certify_add_exp(&p("2^(x+2) + x")).unwrap(), inc);
        assert_eq!(
            certify_add_exp(&p("2^(1+1)")).unwrap(),
            GrowthCertificate::AddExp { tag: Monotonicity::Constant }
        );
        assert_eq!(certify_add_exp(&p("x")).unwrap(), inc);
    }

    #[test]
    fn add_mod_examples() {
        assert_eq!(certify_add_mod(&p("(x + 3) % 5 + x")).unwrap(), GrowthCertificate::AddMod { a: big(2), b: big(6) });
        assert_eq!(certify_add_mod(&p("7")).unwrap(), GrowthCertificate::AddMod { a: big(0), b: big(8) });
        assert_eq!(certify_add_mod(&p("x % 2")).unwrap(), GrowthCertificate::AddMod { a: big(1), b: big(1) });
    }

    #[test]
    fn double_mod_exp_examples() {
        let c = |a, b| GrowthCertificate::DoubleModExp { a: big(a), b: big(b) };
        assert_eq!(certify_double_mod_exp(&p("double(double(x))")).unwrap(), c(4, 0));
        assert_eq!(certify_double_mod_exp(&p("double(x) % 6")).unwrap(), c(2, 6));
        assert_eq!(certify_double_mod_exp(&p("2^(double(x))")).unwrap(), c(1, 0));
    }

    #[test]
    fn checks_pass_and_fail() {
        let t = p("2^x % (x % 7)");
        let r = check_certificate(&t, &certify_mod_exp(&t).unwrap(), 0..=1000);
        assert!(r.passed(), "{r}");
        assert_eq!(r.points_checked, 1001);

        let fake = GrowthCertificate::ModExp { b: big(5) };
        let r = check_certificate(&p("x + 1"), &fake, 0..=100);
        assert!(!r.passed());
        assert_eq!(r.first_mismatch().unwrap().point, vec![5]);
        assert!(r.mismatches.iter().any(|m| m.point == vec![6] && m.actual == "7"));

        let t = p("(x + 3) % 5 + x");
        let r = check_certificate(&t, &GrowthCertificate::AddMod { a: big(2), b: big(6) }, 0..=10_000);
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn towers_are_decided() {
        let t = p("2^2^2^x + x");
        let r = check_certificate(&t, &certify_add_exp(&t).unwrap(), 0..=2000);
        assert!(r.passed(), "{r}");
        let t = p("2^2^x % (2^x % 5)");
        let r = check_certificate(&t, &certify_mod_exp(&t).unwrap(), 0..=2000);
        assert!(r.passed(), "{r}");
        let t = p("double(2^2^double(x)) % 2^x");
        let r = check_certificate(&t, &certify_double_mod_exp(&t).unwrap(), 0..=2000);
        assert!(r.passed(), "{r}");
    }
}
