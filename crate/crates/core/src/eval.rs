//! Exact big-number evaluation under the usual conventions on the naturals:
//! `0^0 = 1`, `x / 0 = 0`, `x mod 0 = x` (hence `x mod 1 = 0`).
//!
//! Evaluation is guarded by [`EvalLimits`]. Exponentials are rejected before
//! the value is allocated, so a tower such as `2^2^2^x` fails fast with
//! [`EvalError::LimitExceeded`] instead of exhausting memory.

use std::collections::HashMap;
use std::fmt;
use std::ops::RangeInclusive;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::arith;
use crate::bases::g::{g_case, GCase};
use crate::bases::h::eval_h;
use crate::registry::Registry;
use crate::term::{ExtId, OpSymbol, Term, TermKind};

/// Resource bounds for a single evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EvalLimits {
    /// Cap on the bit length of any intermediate value.
    pub max_bits: u64,
    /// Cap on evaluated nodes per call, including registered bodies.
    pub max_steps: u64,
}

impl Default for EvalLimits {
    fn default() -> Self {
        EvalLimits {
            max_bits: 1 << 26,
            max_steps: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Limit {
    Bits,
    Steps,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("limit exceeded: {0:?}")]
    LimitExceeded(Limit),
    #[error("unbound variable x{0}")]
    UnboundVariable(u32),
    #[error("symbol ext#{0} is not registered")]
    UnknownSymbol(ExtId),
    #[error("g needs a registered unary basis")]
    MissingUnaryBasis,
    #[error("value cannot be decided symbolically")]
    Undetermined,
}

impl EvalError {
    /// Errors that reflect resource or representation bounds rather than a
    /// malformed input.
    pub fn is_inconclusive(&self) -> bool {
        matches!(self, EvalError::LimitExceeded(_) | EvalError::Undetermined)
    }
}

/// Values of variables `x0, x1, ...`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Env(Vec<BigUint>);

impl Env {
    pub fn new(values: Vec<BigUint>) -> Self {
        Env(values)
    }

    pub fn from_u64s(values: &[u64]) -> Self {
        Env(values.iter().map(|&v| BigUint::from(v)).collect())
    }

    pub fn get(&self, index: u32) -> Option<&BigUint> {
        self.0.get(index as usize)
    }

    pub fn values(&self) -> &[BigUint] {
        &self.0
    }
}

impl From<Vec<BigUint>> for Env {
    fn from(v: Vec<BigUint>) -> Self {
        Env(v)
    }
}

fn check_bits(v: BigUint, lim: &EvalLimits) -> Result<BigUint, EvalError> {
    if v.bits() > lim.max_bits {
        Err(EvalError::LimitExceeded(Limit::Bits))
    } else {
        Ok(v)
    }
}

/// Applies a builtin symbol other than `g` to already evaluated arguments.
pub fn apply(sym: OpSymbol, args: &[BigUint], lim: &EvalLimits) -> Result<BigUint, EvalError> {
    use OpSymbol::*;
    let too_big = || EvalError::LimitExceeded(Limit::Bits);
    let a = &args[0];
    let value = match sym {
        Add => a + &args[1],
        Mod => {
            let b = &args[1];
            if b.is_zero() {
                a.clone()
            } else {
                a % b
            }
        }
        Exp2 => {
            if *a >= BigUint::from(lim.max_bits) {
                return Err(too_big());
            }
            BigUint::one() << a.to_u64().ok_or_else(too_big)?
        }
        Monus => {
            let b = &args[1];
            if a > b {
                a - b
            } else {
                BigUint::zero()
            }
        }
        Mul | Square => {
            let b = if sym == Square { a } else { &args[1] };
            if !a.is_zero() && !b.is_zero() && a.bits() + b.bits() - 1 > lim.max_bits {
                return Err(too_big());
            }
            a * b
        }
        Div => {
            let b = &args[1];
            if b.is_zero() {
                BigUint::zero()
            } else {
                a / b
            }
        }
        Pow => {
            let b = &args[1];
            if b.is_zero() || a.is_one() {
                BigUint::one()
            } else if a.is_zero() {
                BigUint::zero()
            } else {
                let e = b.to_u64().ok_or_else(too_big)?;
                if (a.bits() - 1).saturating_mul(e) >= lim.max_bits {
                    return Err(too_big());
                }
                a.pow(u32::try_from(e).map_err(|_| too_big())?)
            }
        }
        Double => a << 1u32,
        Succ => a + 1u32,
        Pair => {
            let b = &args[1];
            if 2 * a.bits().max(b.bits()) + 2 > lim.max_bits.saturating_add(2) {
                return Err(too_big());
            }
            arith::pair(a, b)
        }
        Left => arith::unpair_left(a),
        Right => arith::unpair_right(a),
        H => eval_h(a, &args[1], lim)?,
        G => return Err(EvalError::MissingUnaryBasis),
        Ext(id) => return Err(EvalError::UnknownSymbol(id)),
    };
    check_bits(value, lim)
}

/// A term flattened into children-first order, ready for repeated evaluation.
#[derive(Debug, Clone)]
pub struct Plan {
    nodes: Vec<PlanNode>,
}

#[derive(Debug, Clone)]
enum PlanNode {
    Const(BigUint),
    Var(u32),
    Op(OpSymbol, Vec<usize>),
}

impl Plan {
    pub fn new(t: &Term) -> Plan {
        let order = t.postorder();
        let index: HashMap<u64, usize> = order.iter().enumerate().map(|(i, n)| (n.id(), i)).collect();
        let nodes = order
            .iter()
            .map(|n| match n.kind() {
                TermKind::Const(c) => PlanNode::Const(c.clone()),
                TermKind::Var(v) => PlanNode::Var(*v),
                TermKind::Op(s, cs) => PlanNode::Op(*s, cs.iter().map(|c| index[&c.id()]).collect()),
            })
            .collect();
        Plan { nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Evaluates terms that may use registered symbols and `g`.
pub struct Evaluator<'r> {
    limits: EvalLimits,
    registry: &'r Registry,
    bodies: Vec<Plan>,
}

static EMPTY_REGISTRY: std::sync::LazyLock<Registry> = std::sync::LazyLock::new(Registry::new);

impl Evaluator<'static> {
    pub fn new(limits: EvalLimits) -> Self {
        Evaluator::with_registry(limits, &EMPTY_REGISTRY)
    }
}

impl<'r> Evaluator<'r> {
    pub fn with_registry(limits: EvalLimits, registry: &'r Registry) -> Self {
        let bodies = registry.defs().map(|(_, d)| Plan::new(&d.body)).collect();
        Evaluator {
            limits,
            registry,
            bodies,
        }
    }

    pub fn limits(&self) -> &EvalLimits {
        &self.limits
    }

    pub fn registry(&self) -> &Registry {
        self.registry
    }

    pub fn eval(&self, t: &Term, env: &Env) -> Result<BigUint, EvalError> {
        self.eval_plan(&Plan::new(t), env)
    }

    pub fn eval_plan(&self, plan: &Plan, env: &Env) -> Result<BigUint, EvalError> {
        let mut steps = 0u64;
        self.run(plan, env.values(), &mut steps)
    }

    fn run(&self, plan: &Plan, env: &[BigUint], steps: &mut u64) -> Result<BigUint, EvalError> {
        let mut values: Vec<BigUint> = Vec::with_capacity(plan.nodes.len());
        for node in &plan.nodes {
            *steps += 1;
            if *steps > self.limits.max_steps {
                return Err(EvalError::LimitExceeded(Limit::Steps));
            }
            let v = match node {
                PlanNode::Const(c) => check_bits(c.clone(), &self.limits)?,
                PlanNode::Var(i) => env
                    .get(*i as usize)
                    .cloned()
                    .ok_or(EvalError::UnboundVariable(*i))?,
                PlanNode::Op(sym, children) => {
                    let args: Vec<&BigUint> = children.iter().map(|&c| &values[c]).collect();
                    self.apply_node(*sym, &args, steps)?
                }
            };
            values.push(v);
        }
        values.pop().ok_or(EvalError::Undetermined)
    }

    fn call_ext(&self, id: ExtId, arg: &BigUint, steps: &mut u64) -> Result<BigUint, EvalError> {
        let plan = self.bodies.get(id as usize).ok_or(EvalError::UnknownSymbol(id))?;
        self.run(plan, std::slice::from_ref(arg), steps)
    }

    fn apply_node(&self, sym: OpSymbol, args: &[&BigUint], steps: &mut u64) -> Result<BigUint, EvalError> {
        match sym {
            OpSymbol::Ext(id) => self.call_ext(id, args[0], steps),
            OpSymbol::G => {
                let basis = self.registry.g_basis().ok_or(EvalError::MissingUnaryBasis)?;
                let (x, y) = (args[0], args[1]);
                match g_case(x, y, basis.len()) {
                    GCase::Iterate(i) => self.call_ext(basis[i], x, steps),
                    GCase::Split => check_bits(arith::pair(&(x >> 1u32), &(y >> 1u32)), &self.limits),
                    GCase::Zero => Ok(BigUint::zero()),
                }
            }
            _ => {
                let owned: Vec<BigUint> = args.iter().map(|a| (*a).clone()).collect();
                apply(sym, &owned, &self.limits)
            }
        }
    }
}

/// Evaluates a term over the builtin symbols.
pub fn eval(t: &Term, env: &Env, lim: &EvalLimits) -> Result<BigUint, EvalError> {
    Evaluator::new(*lim).eval(t, env)
}

/// A rectangular grid of points, one inclusive range per variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    ranges: Vec<RangeInclusive<u64>>,
}

impl Grid {
    pub fn new(ranges: Vec<RangeInclusive<u64>>) -> Self {
        Grid { ranges }
    }

    /// The same range for each of `dims` variables.
    pub fn square(range: RangeInclusive<u64>, dims: usize) -> Self {
        Grid {
            ranges: vec![range; dims],
        }
    }

    pub fn dims(&self) -> usize {
        self.ranges.len()
    }

    pub fn ranges(&self) -> &[RangeInclusive<u64>] {
        &self.ranges
    }

    pub fn len(&self) -> u64 {
        self.ranges
            .iter()
            .map(|r| if r.is_empty() { 0 } else { r.end() - r.start() + 1 })
            .product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Points in lexicographic order (first variable slowest).
    pub fn points(&self) -> Vec<Vec<u64>> {
        if self.is_empty() {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(self.len() as usize);
        let mut cur: Vec<u64> = self.ranges.iter().map(|r| *r.start()).collect();
        loop {
            out.push(cur.clone());
            let mut k = self.ranges.len();
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                if cur[k] < *self.ranges[k].end() {
                    cur[k] += 1;
                    break;
                }
                cur[k] = *self.ranges[k].start();
            }
        }
    }

    pub fn envs(&self) -> Vec<Env> {
        self.points().iter().map(|p| Env::from_u64s(p)).collect()
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ranges.is_empty() {
            return f.write_str("{()}");
        }
        let parts: Vec<String> = self.ranges.iter().map(|r| format!("[{},{}]", r.start(), r.end())).collect();
        f.write_str(&parts.join("x"))
    }
}

impl Serialize for Grid {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[u64; 2]> = self.ranges.iter().map(|r| [*r.start(), *r.end()]).collect();
        pairs.serialize(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridRow {
    pub point: Vec<u64>,
    pub value: BigUint,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("at point {point:?}: {source}")]
pub struct GridError {
    pub point: Vec<u64>,
    pub source: EvalError,
}

/// Evaluates `t` at every grid point, in parallel; results are in point order.
pub fn eval_points(t: &Term, grid: &Grid, ev: &Evaluator<'_>) -> Vec<(Vec<u64>, Result<BigUint, EvalError>)> {
    let plan = Plan::new(t);
    grid.points()
        .into_par_iter()
        .map(|p| {
            let r = ev.eval_plan(&plan, &Env::from_u64s(&p));
            (p, r)
        })
        .collect()
}

/// Table of `(point, value)` rows; the first failing point aborts the table.
pub fn eval_grid(t: &Term, grid: &Grid, ev: &Evaluator<'_>) -> Result<Vec<GridRow>, GridError> {
    eval_points(t, grid, ev)
        .into_iter()
        .map(|(point, r)| match r {
            Ok(value) => Ok(GridRow { point, value }),
            Err(source) => Err(GridError { point, source }),
        })
        .collect()
}

/// SHA-256 over the value vector of a term at a list of probe environments.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fingerprint([u8; 32]);

impl Fingerprint {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fingerprint({})", &hex::encode(self.0)[..16])
    }
}

/// Failed probes contribute a distinguished marker instead of aborting.
pub fn fingerprint(t: &Term, probes: &[Env], ev: &Evaluator<'_>) -> Fingerprint {
    let plan = Plan::new(t);
    let mut hasher = Sha256::new();
    for env in probes {
        match ev.eval_plan(&plan, env) {
            Ok(v) => {
                let bytes = v.to_bytes_le();
                hasher.update([b'v']);
                hasher.update((bytes.len() as u64).to_le_bytes());
                hasher.update(&bytes);
            }
            Err(_) => hasher.update([b'!']),
        }
    }
    Fingerprint(hasher.finalize().into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    fn ev(src: &str, env: &[u64]) -> Result<BigUint, EvalError> {
        eval(&parse(src).unwrap(), &Env::from_u64s(env), &EvalLimits::default())
    }

    fn n(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn convention_examples() {
        assert_eq!(ev("x % 0", &[7]), Ok(n(7)));
        assert_eq!(ev("0^0", &[]), Ok(n(1)));
        assert_eq!(ev("2^(x+x) % (2^x + x)", &[3]), Ok(n(9)));
        assert_eq!(ev("5 / 0", &[]), Ok(n(0)));
    }

    #[test]
    fn convention_suite() {
        for x in 0..=100u64 {
            assert_eq!(ev("x % 0", &[x]), Ok(n(x)));
            assert_eq!(ev("x % 1", &[x]), Ok(n(0)));
            assert_eq!(ev("x / 0", &[x]), Ok(n(0)));
            assert_eq!(ev("x ^ 0", &[x]), Ok(n(1)));
            assert_eq!(ev("0 ^ x", &[x]), Ok(n(u64::from(x == 0))));
        }
    }

    #[test]
    fn division_and_remainder_cohere() {
        let q = parse("x / y").unwrap();
        let r = parse("x % y").unwrap();
        let lim = EvalLimits::default();
        for x in 0..=100u64 {
            for y in 1..=100u64 {
                let env = Env::from_u64s(&[x, y]);
                let q = eval(&q, &env, &lim).unwrap();
                let r = eval(&r, &env, &lim).unwrap();
                assert_eq!(n(y) * q + &r, n(x));
                assert!(r < n(y));
            }
        }
    }

    #[test]
    fn exp2_guard_triggers_before_allocation() {
        let lim = EvalLimits {
            max_bits: 64,
            max_steps: 100,
        };
        let t = parse("2^x").unwrap();
        assert_eq!(eval(&t, &Env::from_u64s(&[63]), &lim), Ok(n(1 << 63)));
        assert_eq!(
            eval(&t, &Env::from_u64s(&[64]), &lim),
            Err(EvalError::LimitExceeded(Limit::Bits))
        );
        // 2^2^2^2^x needs 2^256 bits at x = 3.
        let tower = parse("2^2^2^2^x").unwrap();
        assert!(eval(&tower, &Env::from_u64s(&[2]), &EvalLimits::default()).is_ok());
        assert!(eval(&tower, &Env::from_u64s(&[3]), &EvalLimits::default()).is_err());
    }

    #[test]
    fn step_cap_applies() {
        let lim = EvalLimits {
            max_bits: 1 << 20,
            max_steps: 3,
        };
        assert_eq!(
            eval(&parse("x + 1 + 2").unwrap(), &Env::from_u64s(&[0]), &lim),
            Err(EvalError::LimitExceeded(Limit::Steps))
        );
    }

    #[test]
    fn limits_never_change_a_returned_value() {
        let t = parse("2^(x+x) % (2^x + x) + pow(x, 3)").unwrap();
        for x in 0..40u64 {
            let big = eval(&t, &Env::from_u64s(&[x]), &EvalLimits::default()).unwrap();
            let small = eval(
                &t,
                &Env::from_u64s(&[x]),
                &EvalLimits {
                    max_bits: 48,
                    max_steps: 1000,
                },
            );
            match small {
                Ok(v) => assert_eq!(v, big),
                Err(e) => assert_eq!(e, EvalError::LimitExceeded(Limit::Bits)),
            }
        }
    }

    #[test]
    fn unbound_variable() {
        assert_eq!(ev("x + y", &[1]), Err(EvalError::UnboundVariable(1)));
    }

    #[test]
    fn pairing_symbols() {
        assert_eq!(ev("pair(1, 2)", &[]), Ok(n(7)));
        assert_eq!(ev("[L(x) | R(x)]", &[12345]), Ok(n(12345)));
        for x in 0..=100u64 {
            for y in (0..=100u64).step_by(7) {
                assert_eq!(ev("L([x | y])", &[x, y]), Ok(n(x)));
                assert_eq!(ev("R([x | y])", &[x, y]), Ok(n(y)));
            }
        }
    }

    #[test]
    fn grid_examples() {
        let rows = eval_grid(&parse("x + y").unwrap(), &Grid::square(0..=1, 2), &Evaluator::new(EvalLimits::default())).unwrap();
        let flat: Vec<(Vec<u64>, u64)> = rows.iter().map(|r| (r.point.clone(), r.value.to_u64().unwrap())).collect();
        assert_eq!(
            flat,
            vec![(vec![0, 0], 0), (vec![0, 1], 1), (vec![1, 0], 1), (vec![1, 1], 2)]
        );
        let rows = eval_grid(
            &parse("x % y").unwrap(),
            &Grid::new(vec![0..=2, 0..=1]),
            &Evaluator::new(EvalLimits::default()),
        )
        .unwrap();
        let vals: Vec<u64> = rows.iter().map(|r| r.value.to_u64().unwrap()).collect();
        assert_eq!(vals, vec![0, 0, 1, 0, 2, 0]);
    }

    #[test]
    fn grid_error_carries_point() {
        let lim = EvalLimits {
            max_bits: 8,
            max_steps: 100,
        };
        let err = eval_grid(&parse("2^x").unwrap(), &Grid::square(0..=9, 1), &Evaluator::new(lim)).unwrap_err();
        assert_eq!(err.point, vec![8]);
    }

    #[test]
    fn fingerprint_examples() {
        let e = Evaluator::new(EvalLimits::default());
        let unary: Vec<Env> = (0..8).map(|v| Env::from_u64s(&[v])).collect();
        let fp = |s: &str, p: &[Env]| fingerprint(&parse(s).unwrap(), p, &e);
        assert_eq!(fp("x + x", &unary), fp("double(x)", &unary));
        assert_ne!(fp("x", &unary), fp("x + 1", &unary));
        let binary = Grid::square(0..=7, 2).envs();
        assert_eq!(
            fp("((2^(x+y) + x) % (2^(x+y) + y)) % (2^(x+y) + x)", &binary),
            fp("x -. y", &binary)
        );
    }

    #[test]
    fn fingerprint_absorbs_failures() {
        let lim = EvalLimits {
            max_bits: 16,
            max_steps: 100,
        };
        let e = Evaluator::new(lim);
        let probes: Vec<Env> = (0..20).map(|v| Env::from_u64s(&[v])).collect();
        let a = fingerprint(&parse("2^x").unwrap(), &probes, &e);
        let b = fingerprint(&parse("2^x + 0").unwrap(), &probes, &e);
        assert_eq!(a, b);
        assert_ne!(a, fingerprint(&parse("x").unwrap(), &probes, &e));
    }
}
