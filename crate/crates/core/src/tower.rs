//! Exact naturals with symbolic bit positions.
//!
//! A [`TowerNat`] is `low + 2^e1 + 2^e2 + ...` where `low < 2^LOW_BITS` and the
//! exponents are distinct, at least `LOW_BITS`, and themselves `TowerNat`s.
//! The form is canonical, so structural equality is numeric equality and the
//! derived `Hash` is usable for deduplication.
//!
//! Addition, `2^x`, comparison and parity are total. Remainders are exact
//! whenever the divisor is an ordinary number whose odd part can be factored,
//! a single power of two, or within a factor two of the dividend. Everything
//! else reports [`EvalError::Undetermined`]. This lets the growth checks and
//! the enumerator work with towers such as `2^2^2^2000` without materializing
//! them.

use std::borrow::Cow;
use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::arith;
use crate::bases::g::{g_case, GCase};
use crate::bases::h::eval_h;
use crate::eval::{self, EvalError, EvalLimits};
use crate::registry::Registry;
use crate::term::{OpSymbol, Term, TermKind};

/// Values below `2^LOW_BITS` are stored as plain integers.
pub const LOW_BITS: u64 = 1024;

/// Largest run of bit positions a borrow may expand into.
const BORROW_SPAN: u64 = 4096;

/// Bit cap used when an operation needs a fully materialized argument.
const MATERIALIZE_BITS: u64 = 1 << 16;

/// Bit cap for the plain-integer fallback of `-`, `mod`, `*` and `/`.
const FALLBACK_BITS: u64 = 1 << 12;

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum TowerNat {
    Small(u64),
    Wide(Arc<Wide>),
}

#[derive(PartialEq, Eq, Hash)]
pub struct Wide {
    low: BigUint,
    /// strictly descending
    high: Vec<TowerNat>,
}

type TResult = Result<TowerNat, EvalError>;

fn undetermined<T>() -> Result<T, EvalError> {
    Err(EvalError::Undetermined)
}

impl TowerNat {
    pub fn zero() -> Self {
        TowerNat::Small(0)
    }

    pub fn one() -> Self {
        TowerNat::Small(1)
    }

    pub fn from_u64(v: u64) -> Self {
        TowerNat::Small(v)
    }

    pub fn from_biguint(v: &BigUint) -> Self {
        match v.to_u64() {
            Some(s) => TowerNat::Small(s),
            None => from_parts(v.clone(), Vec::new()),
        }
    }

    fn low(&self) -> Cow<'_, BigUint> {
        match self {
            TowerNat::Small(v) => Cow::Owned(BigUint::from(*v)),
            TowerNat::Wide(w) => Cow::Borrowed(&w.low),
        }
    }

    fn high(&self) -> &[TowerNat] {
        match self {
            TowerNat::Small(_) => &[],
            TowerNat::Wide(w) => &w.high,
        }
    }

    /// True when the value is below `2^LOW_BITS` and so held as an integer.
    pub fn is_exact(&self) -> bool {
        self.high().is_empty()
    }

    pub fn to_biguint(&self) -> Option<BigUint> {
        self.is_exact().then(|| self.low().into_owned())
    }

    /// Materializes values up to `max_bits` bits.
    pub fn to_biguint_bounded(&self, max_bits: u64) -> Option<BigUint> {
        if self.is_exact() {
            return Some(self.low().into_owned());
        }
        let top = self.high()[0].to_u64()?;
        if top >= max_bits {
            return None;
        }
        let mut v = self.low().into_owned();
        for e in self.high() {
            v.set_bit(e.to_u64()?, true);
        }
        Some(v)
    }

    pub fn to_u64(&self) -> Option<u64> {
        match self {
            TowerNat::Small(v) => Some(*v),
            TowerNat::Wide(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, TowerNat::Small(0))
    }

    pub fn is_odd(&self) -> bool {
        match self {
            TowerNat::Small(v) => v & 1 == 1,
            TowerNat::Wide(w) => w.low.bit(0),
        }
    }

    pub fn is_power_of_two(&self) -> bool {
        self.pow2_exponent().is_some()
    }

    /// `Some(e)` when the value is exactly `2^e`.
    pub fn pow2_exponent(&self) -> Option<TowerNat> {
        match self {
            TowerNat::Small(v) => v.is_power_of_two().then(|| TowerNat::Small(u64::from(v.trailing_zeros()))),
            TowerNat::Wide(w) => {
                if w.high.is_empty() {
                    (w.low.count_ones() == 1).then(|| TowerNat::Small(w.low.trailing_zeros().unwrap_or(0)))
                } else if w.high.len() == 1 && w.low.is_zero() {
                    Some(w.high[0].clone())
                } else {
                    None
                }
            }
        }
    }

    pub fn succ(&self) -> TowerNat {
        self.add(&TowerNat::one())
    }

    pub fn add(&self, other: &TowerNat) -> TowerNat {
        if let (TowerNat::Small(a), TowerNat::Small(b)) = (self, other) {
            if let Some(s) = a.checked_add(*b) {
                return TowerNat::Small(s);
            }
        }
        let low = self.low().into_owned() + other.low().as_ref();
        let mut high = self.high().to_vec();
        for e in other.high() {
            insert_exponent(&mut high, e.clone());
        }
        from_parts(low, high)
    }

    pub fn double(&self) -> TowerNat {
        self.add(self)
    }

    pub fn exp2(e: &TowerNat) -> TowerNat {
        match e {
            TowerNat::Small(k) if *k < LOW_BITS => {
                if *k < 64 {
                    TowerNat::Small(1 << k)
                } else {
                    from_parts(BigUint::one() << *k, Vec::new())
                }
            }
            _ => TowerNat::Wide(Arc::new(Wide {
                low: BigUint::zero(),
                high: vec![e.clone()],
            })),
        }
    }

    /// `Ok(None)` when `other > self`.
    pub fn checked_sub(&self, other: &TowerNat) -> Result<Option<TowerNat>, EvalError> {
        if self < other {
            return Ok(None);
        }
        if let (TowerNat::Small(a), TowerNat::Small(b)) = (self, other) {
            return Ok(Some(TowerNat::Small(a - b)));
        }
        if let Some((a, b)) = materialize_both(self, other) {
            return Ok(Some(TowerNat::from_biguint(&(a - b))));
        }
        let (ha, hb) = (self.high(), other.high());
        let mut rest = Vec::with_capacity(ha.len());
        let mut j = 0;
        for e in ha {
            if j < hb.len() && hb[j] == *e {
                j += 1;
            } else {
                rest.push(e.clone());
            }
        }
        if j != hb.len() {
            return undetermined();
        }
        let (al, bl) = (self.low(), other.low());
        if al >= bl {
            return Ok(Some(from_parts(al.into_owned() - bl.as_ref(), rest)));
        }
        // Borrow from the smallest remaining power: 2^m - d = (2^m - 2^L) + (2^L - d).
        let Some(m) = rest.pop() else {
            return undetermined();
        };
        let m = match m.to_u64() {
            Some(m) if m - LOW_BITS <= BORROW_SPAN => m,
            _ => return undetermined(),
        };
        let d = bl.into_owned() - al.as_ref();
        let low = (BigUint::one() << LOW_BITS) - d;
        for p in (LOW_BITS..m).rev() {
            rest.push(TowerNat::Small(p));
        }
        Ok(Some(from_parts(low, rest)))
    }

    pub fn monus(&self, other: &TowerNat) -> TResult {
        Ok(self.checked_sub(other)?.unwrap_or_else(TowerNat::zero))
    }

    /// `self mod m`, with `x mod 0 = x`.
    pub fn modulo(&self, m: &TowerNat) -> TResult {
        if let (TowerNat::Small(a), TowerNat::Small(b)) = (self, m) {
            return Ok(TowerNat::Small(if *b == 0 { *a } else { a % b }));
        }
        if m.is_zero() || self < m {
            return Ok(self.clone());
        }
        if m.is_exact() {
            return Ok(TowerNat::from_biguint(&self.residue(&m.low())?));
        }
        if let Some(e) = m.pow2_exponent() {
            // keep the components strictly below 2^e; low < 2^LOW_BITS <= 2^e
            let high: Vec<TowerNat> = self.high().iter().filter(|x| **x < e).cloned().collect();
            return Ok(from_parts(self.low().into_owned(), high));
        }
        if *self < m.double() {
            return Ok(self.checked_sub(m)?.expect("self >= m"));
        }
        if let Some((a, b)) = materialize_both(self, m) {
            return Ok(TowerNat::from_biguint(&(a % b)));
        }
        undetermined()
    }

    /// `self mod k` for an ordinary `k > 0`.
    pub fn residue(&self, k: &BigUint) -> Result<BigUint, EvalError> {
        debug_assert!(!k.is_zero());
        let mut acc = self.low().as_ref() % k;
        for e in self.high() {
            acc = (acc + pow2_residue(e, k)?) % k;
        }
        Ok(acc)
    }

    /// `self * 2^s`.
    fn shl(&self, s: &TowerNat) -> TowerNat {
        if let (Some(v), Some(k)) = (self.to_biguint(), s.to_u64()) {
            if k <= LOW_BITS {
                return from_parts(v << k, Vec::new());
            }
        }
        let mut high: Vec<TowerNat> = Vec::new();
        for e in self.high() {
            insert_exponent(&mut high, e.add(s));
        }
        let low = self.low();
        for p in 0..low.bits() {
            if low.bit(p) {
                insert_exponent(&mut high, TowerNat::Small(p).add(s));
            }
        }
        from_parts(BigUint::zero(), high)
    }

    /// `floor(self / 2^s)`.
    fn shr(&self, s: &TowerNat) -> TResult {
        let mut out = match s.to_u64() {
            Some(k) if k < LOW_BITS => TowerNat::from_biguint(&(self.low().as_ref() >> k)),
            _ => TowerNat::zero(),
        };
        for e in self.high() {
            if e >= s {
                let shifted = e.checked_sub(s)?.expect("e >= s");
                out = out.add(&TowerNat::exp2(&shifted));
            }
        }
        Ok(out)
    }

    pub fn mul(&self, other: &TowerNat) -> TResult {
        if self.is_zero() || other.is_zero() {
            return Ok(TowerNat::zero());
        }
        if let (TowerNat::Small(a), TowerNat::Small(b)) = (self, other) {
            let p = u128::from(*a) * u128::from(*b);
            return Ok(match u64::try_from(p) {
                Ok(v) => TowerNat::Small(v),
                Err(_) => TowerNat::from_biguint(&BigUint::from(p)),
            });
        }
        if let (Some(a), Some(b)) = (self.to_biguint(), other.to_biguint()) {
            return Ok(from_parts(a * b, Vec::new()));
        }
        if let Some(e) = self.pow2_exponent() {
            return Ok(other.shl(&e));
        }
        if let Some(e) = other.pow2_exponent() {
            return Ok(self.shl(&e));
        }
        if let Some((a, b)) = materialize_both(self, other) {
            return Ok(TowerNat::from_biguint(&(a * b)));
        }
        undetermined()
    }

    pub fn div(&self, other: &TowerNat) -> TResult {
        if other.is_zero() || self < other {
            return Ok(TowerNat::zero());
        }
        if let (Some(a), Some(b)) = (self.to_biguint(), other.to_biguint()) {
            return Ok(TowerNat::from_biguint(&(a / b)));
        }
        if let Some(e) = other.pow2_exponent() {
            return self.shr(&e);
        }
        if let Some((a, b)) = materialize_both(self, other) {
            return Ok(TowerNat::from_biguint(&(a / b)));
        }
        undetermined()
    }

    pub fn pow(&self, e: &TowerNat) -> TResult {
        if e.is_zero() || *self == TowerNat::one() {
            return Ok(TowerNat::one());
        }
        if self.is_zero() {
            return Ok(TowerNat::zero());
        }
        if let Some(s) = self.pow2_exponent() {
            return Ok(TowerNat::exp2(&s.mul(e)?));
        }
        if let (Some(a), Some(k)) = (self.to_biguint(), e.to_u64()) {
            if (a.bits() - 1).saturating_mul(k) < 2 * LOW_BITS {
                return Ok(from_parts(a.pow(k as u32), Vec::new()));
            }
        }
        undetermined()
    }
}

impl Ord for TowerNat {
    fn cmp(&self, other: &Self) -> Ordering {
        if let (TowerNat::Small(a), TowerNat::Small(b)) = (self, other) {
            return a.cmp(b);
        }
        let (ha, hb) = (self.high(), other.high());
        for (a, b) in ha.iter().zip(hb) {
            match a.cmp(b) {
                Ordering::Equal => {}
                ord => return ord,
            }
        }
        ha.len().cmp(&hb.len()).then_with(|| self.low().cmp(&other.low()))
    }
}

impl PartialOrd for TowerNat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for TowerNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TowerNat::Small(v) => write!(f, "{v}"),
            TowerNat::Wide(w) => {
                let mut parts: Vec<String> = w.high.iter().map(|e| format!("2^({e})")).collect();
                if w.high.is_empty() || !w.low.is_zero() {
                    parts.push(w.low.to_string());
                }
                f.write_str(&parts.join(" + "))
            }
        }
    }
}

impl fmt::Debug for TowerNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TowerNat({self})")
    }
}

fn insert_exponent(high: &mut Vec<TowerNat>, e: TowerNat) {
    match high.binary_search_by(|probe| e.cmp(probe)) {
        Ok(i) => {
            let e = high.remove(i);
            insert_exponent(high, e.succ());
        }
        Err(i) => high.insert(i, e),
    }
}

/// Canonicalizes `low + sum 2^high` where `low` may exceed `2^LOW_BITS`.
fn from_parts(mut low: BigUint, mut high: Vec<TowerNat>) -> TowerNat {
    if low.bits() > LOW_BITS {
        let top = &low >> LOW_BITS;
        low -= &top << LOW_BITS;
        for p in 0..top.bits() {
            if top.bit(p) {
                insert_exponent(&mut high, TowerNat::Small(LOW_BITS + p));
            }
        }
    }
    if high.is_empty() {
        if let Some(v) = low.to_u64() {
            return TowerNat::Small(v);
        }
    }
    TowerNat::Wide(Arc::new(Wide { low, high }))
}

/// `2^e mod k` for an arbitrary exponent.
fn pow2_residue(e: &TowerNat, k: &BigUint) -> Result<BigUint, EvalError> {
    if k.is_one() {
        return Ok(BigUint::zero());
    }
    let two = BigUint::from(2u32);
    if let Some(n) = e.to_biguint() {
        return Ok(two.modpow(&n, k));
    }
    // e >= 2^LOW_BITS exceeds the 2-adic valuation of any ordinary k.
    let s = k.trailing_zeros().unwrap_or(0);
    let odd = k >> s;
    if odd.is_one() {
        return Ok(BigUint::zero());
    }
    let lambda = carmichael(&odd).ok_or(EvalError::Undetermined)?;
    let r = e.residue(&lambda)?;
    let t = two.modpow(&r, &odd);
    // x = 0 mod 2^s and x = t mod odd
    let inv2: BigUint = (&odd + 1u32) >> 1u32;
    let y = (t * inv2.modpow(&BigUint::from(s), &odd)) % &odd;
    Ok(y << s)
}

fn materialize_both(a: &TowerNat, b: &TowerNat) -> Option<(BigUint, BigUint)> {
    Some((a.to_biguint_bounded(FALLBACK_BITS)?, b.to_biguint_bounded(FALLBACK_BITS)?))
}

/// Carmichael function of an odd number, when it can be factored.
fn carmichael(odd: &BigUint) -> Option<BigUint> {
    let factors = factorize(odd)?;
    let mut lambda = BigUint::one();
    for (p, k) in factors {
        let pk = BigUint::from(p).pow(k - 1) * (p - 1);
        lambda = lambda.lcm(&pk);
    }
    Some(lambda)
}

const TRIAL_LIMIT: u64 = 1 << 16;

fn factorize(n: &BigUint) -> Option<Vec<(u64, u32)>> {
    if let Some(v) = n.to_u64() {
        return Some(factor_u64(v));
    }
    let mut rest = n.clone();
    let mut out: Vec<(u64, u32)> = Vec::new();
    let mut p = 3u64;
    while p < TRIAL_LIMIT {
        let mut k = 0;
        while (&rest % p).is_zero() {
            rest /= p;
            k += 1;
        }
        if k > 0 {
            out.push((p, k));
        }
        if let Some(v) = rest.to_u64() {
            for (q, e) in factor_u64(v) {
                merge_factor(&mut out, q, e);
            }
            return Some(out);
        }
        p += 2;
    }
    None
}

fn merge_factor(out: &mut Vec<(u64, u32)>, p: u64, k: u32) {
    match out.iter_mut().find(|(q, _)| *q == p) {
        Some(entry) => entry.1 += k,
        None => out.push((p, k)),
    }
}

fn factor_u64(n: u64) -> Vec<(u64, u32)> {
    let mut primes = Vec::new();
    let mut stack = vec![n];
    while let Some(m) = stack.pop() {
        if m <= 1 {
            continue;
        }
        if m % 2 == 0 {
            primes.push(2);
            stack.push(m / 2);
            continue;
        }
        if is_prime_u64(m) {
            primes.push(m);
            continue;
        }
        let small = (3..1000u64).step_by(2).find(|p| m % p == 0);
        let d = small.unwrap_or_else(|| pollard_rho(m));
        stack.push(d);
        stack.push(m / d);
    }
    primes.sort_unstable();
    let mut out: Vec<(u64, u32)> = Vec::new();
    for p in primes {
        merge_factor(&mut out, p, 1);
    }
    out
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((u128::from(a) * u128::from(b)) % u128::from(m)) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller-Rabin for 64-bit inputs.
fn is_prime_u64(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for p in BASES {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// A non-trivial factor of an odd composite.
fn pollard_rho(n: u64) -> u64 {
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut y, mut d) = (2u64, 2u64, 1u64);
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = x.abs_diff(y).gcd(&n);
        }
        if d != n {
            return d;
        }
        c += 1;
    }
}

fn materialize(v: &TowerNat) -> Result<BigUint, EvalError> {
    v.to_biguint_bounded(MATERIALIZE_BITS).ok_or(EvalError::Undetermined)
}

fn native(sym: OpSymbol, args: &[&TowerNat]) -> TResult {
    let owned = args.iter().map(|a| materialize(a)).collect::<Result<Vec<_>, _>>()?;
    let lim = EvalLimits {
        max_bits: MATERIALIZE_BITS,
        max_steps: u64::MAX,
    };
    let v = eval::apply(sym, &owned, &lim).map_err(|e| match e {
        EvalError::LimitExceeded(_) => EvalError::Undetermined,
        other => other,
    })?;
    Ok(TowerNat::from_biguint(&v))
}

/// `h` with its first three guards decided symbolically.
fn apply_h(x: &TowerNat, y: &TowerNat) -> TResult {
    if x == y {
        return Ok(TowerNat::exp2(x));
    }
    if *y == TowerNat::exp2(x) || *x == TowerNat::exp2(y) {
        return native(OpSymbol::H, &[x, y]);
    }
    // The remaining guards need odd arguments (powers of 3 and 5).
    if !x.is_odd() || !y.is_odd() {
        return Ok(TowerNat::zero());
    }
    let (a, b) = (materialize(x)?, materialize(y)?);
    let lim = EvalLimits {
        max_bits: MATERIALIZE_BITS,
        max_steps: u64::MAX,
    };
    eval_h(&a, &b, &lim)
        .map(|v| TowerNat::from_biguint(&v))
        .map_err(|_| EvalError::Undetermined)
}

/// Applies a symbol to tower values. `g` and registered symbols need a
/// registry; see [`TowerEvaluator`].
pub fn apply(sym: OpSymbol, args: &[&TowerNat]) -> TResult {
    use OpSymbol::*;
    let a = args[0];
    match sym {
        Add => Ok(a.add(args[1])),
        Mod => a.modulo(args[1]),
        Exp2 => Ok(TowerNat::exp2(a)),
        Monus => a.monus(args[1]),
        Mul => a.mul(args[1]),
        Div => a.div(args[1]),
        Pow => a.pow(args[1]),
        Square => a.mul(a),
        Double => Ok(a.double()),
        Succ => Ok(a.succ()),
        H => apply_h(a, args[1]),
        Pair | Left | Right => native(sym, args),
        G => Err(EvalError::MissingUnaryBasis),
        Ext(id) => Err(EvalError::UnknownSymbol(id)),
    }
}

/// Evaluates terms to [`TowerNat`]s, with registered symbols and `g`.
pub struct TowerEvaluator<'r> {
    registry: &'r Registry,
    max_steps: u64,
}

impl<'r> TowerEvaluator<'r> {
    pub fn new(registry: &'r Registry) -> Self {
        TowerEvaluator {
            registry,
            max_steps: 10_000_000,
        }
    }

    pub fn eval(&self, t: &Term, env: &[TowerNat]) -> TResult {
        let mut steps = 0;
        self.eval_inner(t, env, &mut steps)
    }

    fn eval_inner(&self, t: &Term, env: &[TowerNat], steps: &mut u64) -> TResult {
        let mut memo: HashMap<u64, TowerNat> = HashMap::new();
        for node in t.postorder() {
            *steps += 1;
            if *steps > self.max_steps {
                return Err(EvalError::LimitExceeded(eval::Limit::Steps));
            }
            let v = match node.kind() {
                TermKind::Const(c) => TowerNat::from_biguint(c),
                TermKind::Var(i) => env.get(*i as usize).cloned().ok_or(EvalError::UnboundVariable(*i))?,
                TermKind::Op(sym, children) => {
                    let args: Vec<&TowerNat> = children.iter().map(|c| &memo[&c.id()]).collect();
                    self.apply(*sym, &args, steps)?
                }
            };
            memo.insert(node.id(), v);
        }
        Ok(memo.remove(&t.id()).expect("root evaluated"))
    }

    fn call(&self, id: crate::term::ExtId, arg: &TowerNat, steps: &mut u64) -> TResult {
        let def = self.registry.get(id).ok_or(EvalError::UnknownSymbol(id))?;
        self.eval_inner(&def.body, std::slice::from_ref(arg), steps)
    }

    pub(crate) fn apply(&self, sym: OpSymbol, args: &[&TowerNat], steps: &mut u64) -> TResult {
        match sym {
            OpSymbol::Ext(id) => self.call(id, args[0], steps),
            OpSymbol::G => {
                let basis = self.registry.g_basis().ok_or(EvalError::MissingUnaryBasis)?;
                let (x, y) = (materialize(args[0])?, materialize(args[1])?);
                match g_case(&x, &y, basis.len()) {
                    GCase::Iterate(i) => self.call(basis[i], args[0], steps),
                    GCase::Split => Ok(TowerNat::from_biguint(&arith::pair(&(&x >> 1u32), &(&y >> 1u32)))),
                    GCase::Zero => Ok(TowerNat::zero()),
                }
            }
            _ => apply(sym, args),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(v: u64) -> TowerNat {
        TowerNat::from_u64(v)
    }

    fn big(v: &BigUint) -> TowerNat {
        TowerNat::from_biguint(v)
    }

    fn pow2(e: u64) -> BigUint {
        BigUint::one() << e
    }

    #[test]
    fn exact_values_agree_with_biguint() {
        let a = pow2(3000) + 12345u32;
        let b = pow2(1500) * 3u32 + 7u32;
        let ta = big(&a);
        let tb = big(&b);
        assert!(!ta.is_exact());
        assert_eq!(ta.add(&tb).to_biguint_bounded(1 << 20), Some(&a + &b));
        assert_eq!(ta.modulo(&tb).unwrap_or_else(|_| panic!()).to_biguint_bounded(1 << 20), Some(&a % &b));
        assert_eq!(ta.cmp(&tb), a.cmp(&b));
        assert_eq!(ta.checked_sub(&tb).unwrap().unwrap().to_biguint_bounded(1 << 20), Some(&a - &b));
    }

    #[test]
    fn carries_propagate_through_exponents() {
        // 2^(2^2000) + 2^(2^2000) = 2^(2^2000 + 1)
        let e = TowerNat::exp2(&t(2000));
        let p = TowerNat::exp2(&e);
        let sum = p.add(&p);
        assert_eq!(sum, TowerNat::exp2(&e.succ()));
        assert!(sum > p);
        assert!(sum.is_power_of_two());
        assert_eq!(sum.pow2_exponent(), Some(e.succ()));
    }

    #[test]
    fn residues_of_towers() {
        // 2^(2^2000) mod 7: 2^2000 mod 3 = 1, so 2^(2^2000) = 2^1 = 2 (mod 7).
        let tower = TowerNat::exp2(&TowerNat::exp2(&t(2000)));
        assert_eq!(tower.modulo(&t(7)).unwrap(), t(2));
        // modulo 12 = 4 * 3: 0 mod 4, and 2^even = 1 mod 3 -> 4
        assert_eq!(tower.modulo(&t(12)).unwrap(), t(4));
        // check against direct modpow for an exponent we can hold
        let e = pow2(2000);
        let direct = BigUint::from(2u32).modpow(&e, &BigUint::from(1000u32));
        assert_eq!(tower.modulo(&t(1000)).unwrap(), big(&direct));
    }

    #[test]
    fn power_of_two_moduli_keep_low_components() {
        let e1 = TowerNat::exp2(&t(3000));
        let e2 = TowerNat::exp2(&t(2000));
        let a = TowerNat::exp2(&e1).add(&TowerNat::exp2(&e2)).add(&t(5));
        let m = TowerNat::exp2(&e1);
        assert_eq!(a.modulo(&m).unwrap(), TowerNat::exp2(&e2).add(&t(5)));
        assert_eq!(m.modulo(&a).unwrap(), m);
        assert_eq!(m.modulo(&TowerNat::exp2(&e2)).unwrap(), t(0));
    }

    #[test]
    fn remainder_within_twice_the_modulus() {
        let p = TowerNat::exp2(&TowerNat::exp2(&t(1200)));
        let a = p.add(&t(9));
        let b = p.add(&t(4));
        assert_eq!(a.modulo(&b).unwrap(), t(5));
        assert_eq!(b.modulo(&a).unwrap(), b);
    }

    #[test]
    fn borrow_across_a_small_exponent() {
        let a = big(&(pow2(1030) + 3u32));
        let b = t(10);
        let expect = pow2(1030) + 3u32 - 10u32;
        assert_eq!(a.checked_sub(&b).unwrap().unwrap().to_biguint_bounded(1 << 20), Some(expect));
    }

    #[test]
    fn factorization_helpers() {
        assert_eq!(factor_u64(360), vec![(2, 3), (3, 2), (5, 1)]);
        assert_eq!(factor_u64(1_000_000_007), vec![(1_000_000_007, 1)]);
        let semi = 4_294_967_291u64 * 3; // 2^32 - 5 is prime
        assert_eq!(factor_u64(semi), vec![(3, 1), (4_294_967_291, 1)]);
        assert_eq!(carmichael(&BigUint::from(15u32)), Some(BigUint::from(4u32)));
    }

    #[test]
    fn mul_div_by_powers_of_two() {
        let e = TowerNat::exp2(&t(5000));
        let p = TowerNat::exp2(&e);
        let three = t(3);
        let prod = p.mul(&three).unwrap();
        assert_eq!(prod.div(&p).unwrap(), three);
        assert_eq!(p.mul(&p).unwrap(), TowerNat::exp2(&e.double()));
    }

    proptest! {
        #[test]
        fn arithmetic_matches_biguint(a in 0u64..u64::MAX, b in 1u64..u64::MAX, s1 in 0u64..2500, s2 in 0u64..2500) {
            let x = (BigUint::from(a) << s1) + b;
            let y = (BigUint::from(b) << s2) + a;
            let (tx, ty) = (big(&x), big(&y));
            prop_assert_eq!(tx.cmp(&ty), x.cmp(&y));
            prop_assert_eq!(tx.add(&ty).to_biguint_bounded(1 << 20), Some(&x + &y));
            prop_assert_eq!(tx.double().to_biguint_bounded(1 << 20), Some(&x << 1u32));
            if let Ok(r) = tx.modulo(&ty) {
                prop_assert_eq!(r.to_biguint_bounded(1 << 20), Some(&x % &y));
            }
            if let Ok(Some(d)) = tx.checked_sub(&ty) {
                prop_assert_eq!(d.to_biguint_bounded(1 << 20), Some(&x - &y));
            }
            let sm = (b % 5000) + 1;
            prop_assert_eq!(tx.modulo(&t(sm)).unwrap(), t((&x % sm).to_u64().unwrap()));
        }
    }
}
