//! Hash-consed arithmetic terms.
//!
//! A [`Term`] is an immutable expression over constants, indexed variables and
//! the operation symbols of [`OpSymbol`]. Every term is built through a global
//! interner, so structurally equal terms are the same allocation: equality is
//! a pointer comparison and the DAG size of a term is simply the number of
//! distinct nodes reachable from it.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::hash::{BuildHasher, Hash, Hasher};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, LazyLock, Mutex, Weak};

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a user-registered unary symbol in a [`crate::Registry`].
pub type ExtId = u32;

/// Operation symbols. Every symbol has a fixed arity of one or two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OpSymbol {
    /// `x + y`
    Add,
    /// `x mod y`, with `x mod 0 = x`
    Mod,
    /// `2^x`
    Exp2,
    /// truncated subtraction `max(x - y, 0)`
    Monus,
    Mul,
    /// `floor(x / y)`, with `x / 0 = 0`
    Div,
    /// `x^y`, with `0^0 = 1`
    Pow,
    Square,
    Double,
    Succ,
    /// Cantor pairing `[x | y] = (x+y)(x+y+1)/2 + x`
    Pair,
    /// left inverse of the pairing
    Left,
    /// right inverse of the pairing
    Right,
    /// the five-case single binary basis operation
    H,
    /// the pairing-based single binary basis operation over a registered unary basis
    G,
    /// a unary symbol defined in a registry
    Ext(ExtId),
}

impl OpSymbol {
    /// All symbols except registry-defined ones, in enumeration order.
    pub const BUILTIN: [OpSymbol; 15] = [
        OpSymbol::Add,
        OpSymbol::Mod,
        OpSymbol::Exp2,
        OpSymbol::Monus,
        OpSymbol::Mul,
        OpSymbol::Div,
        OpSymbol::Pow,
        OpSymbol::Square,
        OpSymbol::Double,
        OpSymbol::Succ,
        OpSymbol::Pair,
        OpSymbol::Left,
        OpSymbol::Right,
        OpSymbol::H,
        OpSymbol::G,
    ];

    pub fn arity(self) -> usize {
        use OpSymbol::*;
        match self {
            Exp2 | Square | Double | Succ | Left | Right | Ext(_) => 1,
            Add | Mod | Monus | Mul | Div | Pow | Pair | H | G => 2,
        }
    }

    /// Short lowercase name, used in signatures and reports.
    pub fn name(self) -> &'static str {
        use OpSymbol::*;
        match self {
            Add => "add",
            Mod => "mod",
            Exp2 => "exp2",
            Monus => "monus",
            Mul => "mul",
            Div => "div",
            Pow => "pow",
            Square => "sq",
            Double => "double",
            Succ => "succ",
            Pair => "pair",
            Left => "left",
            Right => "right",
            H => "h",
            G => "g",
            Ext(_) => "ext",
        }
    }

    /// Inverse of [`OpSymbol::name`], with a few aliases.
    pub fn from_name(name: &str) -> Option<OpSymbol> {
        use OpSymbol::*;
        Some(match name {
            "add" | "+" => Add,
            "mod" | "%" => Mod,
            "exp2" => Exp2,
            "monus" | "-." => Monus,
            "mul" | "*" => Mul,
            "div" | "/" => Div,
            "pow" | "^" => Pow,
            "sq" | "square" => Square,
            "double" => Double,
            "succ" => Succ,
            "pair" => Pair,
            "left" | "l" | "L" => Left,
            "right" | "r" | "R" => Right,
            "h" => H,
            "g" => G,
            _ => return None,
        })
    }

    pub fn is_commutative(self) -> bool {
        matches!(self, OpSymbol::Add | OpSymbol::Mul)
    }
}

impl fmt::Display for OpSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpSymbol::Ext(id) => write!(f, "ext#{id}"),
            s => f.write_str(s.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("{symbol} takes {expected} argument(s), got {got}")]
    ArityMismatch {
        symbol: OpSymbol,
        expected: usize,
        got: usize,
    },
}

/// The set of symbols a term may use. Constants are always admitted, as are
/// variables below the optional bound.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    symbols: BTreeSet<OpSymbol>,
    max_vars: Option<u32>,
}

impl Signature {
    pub fn new(symbols: impl IntoIterator<Item = OpSymbol>) -> Self {
        Signature {
            symbols: symbols.into_iter().collect(),
            max_vars: None,
        }
    }

    /// `{x + y, x mod y, 2^x}`
    pub fn minimal() -> Self {
        Signature::new([OpSymbol::Add, OpSymbol::Mod, OpSymbol::Exp2])
    }

    /// Every builtin symbol.
    pub fn extended() -> Self {
        Signature::new(OpSymbol::BUILTIN)
    }

    pub fn with_max_vars(mut self, n: u32) -> Self {
        self.max_vars = Some(n);
        self
    }

    pub fn max_vars(&self) -> Option<u32> {
        self.max_vars
    }

    pub fn contains(&self, sym: OpSymbol) -> bool {
        self.symbols.contains(&sym)
    }

    pub fn symbols(&self) -> impl Iterator<Item = OpSymbol> + '_ {
        self.symbols.iter().copied()
    }

    pub fn is_subset(&self, other: &Signature) -> bool {
        self.symbols.is_subset(&other.symbols)
            && match (self.max_vars, other.max_vars) {
                (_, None) => true,
                (Some(a), Some(b)) => a <= b,
                (None, Some(_)) => false,
            }
    }

    /// Parses a comma-separated list of symbol names, e.g. `add,mod,exp2`.
    pub fn parse_list(list: &str) -> Result<Signature, String> {
        let mut symbols = BTreeSet::new();
        for part in list.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let sym = OpSymbol::from_name(part).ok_or_else(|| format!("unknown symbol `{part}`"))?;
            symbols.insert(sym);
        }
        Ok(Signature {
            symbols,
            max_vars: None,
        })
    }

    pub fn names(&self) -> Vec<String> {
        self.symbols.iter().map(|s| s.to_string()).collect()
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.names().join(", "))
    }
}

/// The shape of a term node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TermKind {
    Const(BigUint),
    Var(u32),
    Op(OpSymbol, Vec<Term>),
}

struct Node {
    id: u64,
    kind: TermKind,
    tree_size: u64,
}

/// An immutable, hash-consed term. Cloning is cheap.
#[derive(Clone)]
pub struct Term(Arc<Node>);

/// Tree and DAG node counts of a term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermSize {
    pub tree_nodes: u64,
    pub dag_nodes: u64,
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

impl Eq for Term {}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.id.hash(state);
    }
}

impl Term {
    /// Builds a term node, checking the arity of operation nodes.
    pub fn build(kind: TermKind) -> Result<Term, TermError> {
        if let TermKind::Op(symbol, children) = &kind {
            if children.len() != symbol.arity() {
                return Err(TermError::ArityMismatch {
                    symbol: *symbol,
                    expected: symbol.arity(),
                    got: children.len(),
                });
            }
        }
        Ok(interner::intern(kind))
    }

    pub fn op(symbol: OpSymbol, children: Vec<Term>) -> Result<Term, TermError> {
        Term::build(TermKind::Op(symbol, children))
    }

    pub fn constant(value: impl Into<BigUint>) -> Term {
        interner::intern(TermKind::Const(value.into()))
    }

    pub fn var(index: u32) -> Term {
        interner::intern(TermKind::Var(index))
    }

    fn mk1(symbol: OpSymbol, a: Term) -> Term {
        debug_assert_eq!(symbol.arity(), 1);
        interner::intern(TermKind::Op(symbol, vec![a]))
    }

    fn mk2(symbol: OpSymbol, a: Term, b: Term) -> Term {
        debug_assert_eq!(symbol.arity(), 2);
        interner::intern(TermKind::Op(symbol, vec![a, b]))
    }

    pub fn add(a: Term, b: Term) -> Term {
        Term::mk2(OpSymbol::Add, a, b)
    }
    pub fn modulo(a: Term, b: Term) -> Term {
        Term::mk2(OpSymbol::Mod, a, b)
    }
    pub fn exp2(a: Term) -> Term {
        Term::mk1(OpSymbol::Exp2, a)
    }
    pub fn monus(a: Term, b: Term) -> Term {
        Term::mk2(OpSymbol::Monus, a, b)
    }
    pub fn mul(a: Term, b: Term) -> Term {
        Term::mk2(OpSymbol::Mul, a, b)
    }
    pub fn div(a: Term, b: Term) -> Term {
        Term::mk2(OpSymbol::Div, a, b)
    }
    pub fn pow(a: Term, b: Term) -> Term {
        Term::mk2(OpSymbol::Pow, a, b)
    }
    pub fn square(a: Term) -> Term {
        Term::mk1(OpSymbol::Square, a)
    }
    pub fn double(a: Term) -> Term {
        Term::mk1(OpSymbol::Double, a)
    }
    pub fn succ(a: Term) -> Term {
        Term::mk1(OpSymbol::Succ, a)
    }
    pub fn pair(a: Term, b: Term) -> Term {
        Term::mk2(OpSymbol::Pair, a, b)
    }
    pub fn left(a: Term) -> Term {
        Term::mk1(OpSymbol::Left, a)
    }
    pub fn right(a: Term) -> Term {
        Term::mk1(OpSymbol::Right, a)
    }
    pub fn h(a: Term, b: Term) -> Term {
        Term::mk2(OpSymbol::H, a, b)
    }
    pub fn g(a: Term, b: Term) -> Term {
        Term::mk2(OpSymbol::G, a, b)
    }
    pub fn ext(id: ExtId, a: Term) -> Term {
        Term::mk1(OpSymbol::Ext(id), a)
    }

    pub fn kind(&self) -> &TermKind {
        &self.0.kind
    }

    /// Unique node identity, stable for the lifetime of the node.
    pub fn id(&self) -> u64 {
        self.0.id
    }

    pub fn symbol(&self) -> Option<OpSymbol> {
        match &self.0.kind {
            TermKind::Op(s, _) => Some(*s),
            _ => None,
        }
    }

    pub fn children(&self) -> &[Term] {
        match &self.0.kind {
            TermKind::Op(_, c) => c,
            _ => &[],
        }
    }

    pub fn as_const(&self) -> Option<&BigUint> {
        match &self.0.kind {
            TermKind::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_var(&self) -> Option<u32> {
        match &self.0.kind {
            TermKind::Var(v) => Some(*v),
            _ => None,
        }
    }

    /// Number of nodes when the term is unfolded into a tree (saturating).
    pub fn tree_size(&self) -> u64 {
        self.0.tree_size
    }

    pub fn size(&self) -> TermSize {
        TermSize {
            tree_nodes: self.tree_size(),
            dag_nodes: self.postorder().len() as u64,
        }
    }

    /// Distinct subterms, children before parents.
    pub fn postorder(&self) -> Vec<Term> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        let mut stack = vec![(self.clone(), false)];
        while let Some((t, expanded)) = stack.pop() {
            if expanded {
                out.push(t);
                continue;
            }
            if !seen.insert(t.id()) {
                continue;
            }
            stack.push((t.clone(), true));
            for c in t.children().iter().rev() {
                if !seen.contains(&c.id()) {
                    stack.push((c.clone(), false));
                }
            }
        }
        out
    }

    pub fn free_vars(&self) -> BTreeSet<u32> {
        self.postorder().iter().filter_map(Term::as_var).collect()
    }

    /// One past the largest variable index, or 0 for closed terms.
    pub fn var_count(&self) -> u32 {
        self.free_vars().last().map_or(0, |v| v + 1)
    }

    /// Simultaneous substitution; variables missing from `assignment` are kept.
    pub fn substitute(&self, assignment: &HashMap<u32, Term>) -> Term {
        let mut memo: HashMap<u64, Term> = HashMap::new();
        for t in self.postorder() {
            let replaced = match t.kind() {
                TermKind::Const(_) => t.clone(),
                TermKind::Var(v) => assignment.get(v).cloned().unwrap_or_else(|| t.clone()),
                TermKind::Op(sym, children) => {
                    let new_children: Vec<Term> = children.iter().map(|c| memo[&c.id()].clone()).collect();
                    if new_children.iter().zip(children).all(|(a, b)| a == b) {
                        t.clone()
                    } else {
                        interner::intern(TermKind::Op(*sym, new_children))
                    }
                }
            };
            memo.insert(t.id(), replaced);
        }
        memo.remove(&self.id()).expect("root is part of its own postorder")
    }

    /// Substitutes `replacement` for variable 0.
    pub fn compose(&self, replacement: &Term) -> Term {
        self.substitute(&HashMap::from([(0, replacement.clone())]))
    }

    pub fn conforms(&self, sig: &Signature) -> bool {
        self.postorder().iter().all(|t| match t.kind() {
            TermKind::Const(_) => true,
            TermKind::Var(v) => sig.max_vars().is_none_or(|n| *v < n),
            TermKind::Op(s, _) => sig.contains(*s),
        })
    }

    /// Symbols occurring in the term.
    pub fn symbols(&self) -> BTreeSet<OpSymbol> {
        self.postorder().iter().filter_map(Term::symbol).collect()
    }

    /// Rebuilds this node with new children (same symbol).
    pub fn with_children(&self, children: Vec<Term>) -> Result<Term, TermError> {
        match self.kind() {
            TermKind::Op(sym, _) => Term::op(*sym, children),
            _ => Ok(self.clone()),
        }
    }

    /// Subterm at a child-index path, if it exists.
    pub fn at(&self, path: &[usize]) -> Option<&Term> {
        let mut cur = self;
        for &i in path {
            cur = cur.children().get(i)?;
        }
        Some(cur)
    }

    /// Replaces the subterm at `path`, rebuilding the spine.
    pub fn replace_at(&self, path: &[usize], replacement: Term) -> Option<Term> {
        match path.split_first() {
            None => Some(replacement),
            Some((&i, rest)) => {
                let child = self.children().get(i)?;
                let new_child = child.replace_at(rest, replacement)?;
                let mut children = self.children().to_vec();
                children[i] = new_child;
                self.with_children(children).ok()
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::syntax::print(self))
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Term({})", crate::syntax::print(self))
    }
}

mod interner {
    use super::*;

    const SHARDS: usize = 16;

    #[derive(PartialEq, Eq, Hash)]
    enum Key {
        Const(BigUint),
        Var(u32),
        Op(OpSymbol, Vec<u64>),
    }

    struct Shard {
        map: HashMap<Key, Weak<Node>>,
        sweep_at: usize,
    }

    static NEXT_ID: AtomicU64 = AtomicU64::new(0);
    static HASHER: LazyLock<std::collections::hash_map::RandomState> =
        LazyLock::new(std::collections::hash_map::RandomState::new);
    static SHARD_TABLE: LazyLock<Vec<Mutex<Shard>>> = LazyLock::new(|| {
        (0..SHARDS)
            .map(|_| {
                Mutex::new(Shard {
                    map: HashMap::new(),
                    sweep_at: 4096,
                })
            })
            .collect()
    });

    fn key_of(kind: &TermKind) -> Key {
        match kind {
            TermKind::Const(c) => Key::Const(c.clone()),
            TermKind::Var(v) => Key::Var(*v),
            TermKind::Op(s, children) => Key::Op(*s, children.iter().map(Term::id).collect()),
        }
    }

    pub(super) fn intern(kind: TermKind) -> Term {
        let key = key_of(&kind);
        let shard_index = (HASHER.hash_one(&key) as usize) % SHARDS;
        let mut shard = SHARD_TABLE[shard_index].lock().unwrap_or_else(|e| e.into_inner());
        if let Some(existing) = shard.map.get(&key).and_then(Weak::upgrade) {
            drop(shard);
            return Term(existing);
        }
        let tree_size = match &kind {
            TermKind::Op(_, children) => children
                .iter()
                .fold(1u64, |acc, c| acc.saturating_add(c.tree_size())),
            _ => 1,
        };
        let node = Arc::new(Node {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            kind,
            tree_size,
        });
        shard.map.insert(key, Arc::downgrade(&node));
        if shard.map.len() >= shard.sweep_at {
            shard.map.retain(|_, w| w.strong_count() > 0);
            shard.sweep_at = (shard.map.len() * 2).max(4096);
        }
        Term(node)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Term {
        Term::var(0)
    }
    fn y() -> Term {
        Term::var(1)
    }

    #[test]
    fn build_checks_arity() {
        let t = Term::op(OpSymbol::Add, vec![x(), Term::constant(1u32)]).unwrap();
        assert_eq!(t, Term::add(x(), Term::constant(1u32)));
        let err = Term::op(OpSymbol::Exp2, vec![x(), y()]).unwrap_err();
        assert_eq!(
            err,
            TermError::ArityMismatch {
                symbol: OpSymbol::Exp2,
                expected: 1,
                got: 2
            }
        );
        let zero = Term::build(TermKind::Const(BigUint::from(0u32))).unwrap();
        assert_eq!(zero.as_const(), Some(&BigUint::from(0u32)));
    }

    #[test]
    fn structurally_equal_terms_share_a_node() {
        let a = Term::modulo(Term::exp2(Term::add(x(), y())), Term::constant(7u32));
        let b = Term::modulo(Term::exp2(Term::add(x(), y())), Term::constant(7u32));
        assert_eq!(a.id(), b.id());
        assert_ne!(a, Term::modulo(Term::exp2(Term::add(y(), x())), Term::constant(7u32)));
    }

    #[test]
    fn free_vars_examples() {
        assert_eq!(Term::add(x(), Term::constant(1u32)).free_vars(), BTreeSet::from([0]));
        assert_eq!(Term::exp2(Term::modulo(x(), y())).free_vars(), BTreeSet::from([0, 1]));
        assert!(Term::constant(7u32).free_vars().is_empty());
    }

    #[test]
    fn substitute_examples() {
        let two = Term::constant(2u32);
        let t = Term::add(x(), y()).substitute(&HashMap::from([(1, two.clone())]));
        assert_eq!(t, Term::add(x(), two));
        let xx = Term::add(x(), x());
        assert_eq!(x().substitute(&HashMap::from([(0, xx.clone())])), xx);
        let three = Term::constant(3u32);
        let d = Term::pair(x(), x());
        assert_eq!(d.compose(&three), Term::pair(three.clone(), three));
    }

    #[test]
    fn size_examples() {
        assert_eq!(
            Term::constant(5u32).size(),
            TermSize {
                tree_nodes: 1,
                dag_nodes: 1
            }
        );
        assert_eq!(
            Term::add(x(), x()).size(),
            TermSize {
                tree_nodes: 3,
                dag_nodes: 2
            }
        );
        let sq = Term::modulo(Term::exp2(Term::add(x(), x())), Term::add(Term::exp2(x()), x()));
        assert_eq!(
            sq.size(),
            TermSize {
                tree_nodes: 9,
                dag_nodes: 6
            }
        );
    }

    #[test]
    fn conforms_examples() {
        let min = Signature::minimal();
        let sq = Term::modulo(Term::exp2(Term::add(x(), x())), Term::add(Term::exp2(x()), x()));
        assert!(sq.conforms(&min));
        assert!(!Term::monus(x(), y()).conforms(&min));
        assert!(x().conforms(&Signature::new([])));
        assert!(!y().conforms(&Signature::new([]).with_max_vars(1)));
    }

    #[test]
    fn replace_at_rebuilds_spine() {
        let t = Term::add(Term::double(x()), y());
        let r = t.replace_at(&[0], Term::add(x(), x())).unwrap();
        assert_eq!(r, Term::add(Term::add(x(), x()), y()));
        assert!(t.replace_at(&[5], x()).is_none());
    }

    #[test]
    fn signature_parse_list() {
        let s = Signature::parse_list("mod, exp2").unwrap();
        assert!(s.contains(OpSymbol::Mod) && s.contains(OpSymbol::Exp2) && !s.contains(OpSymbol::Add));
        assert!(Signature::parse_list("mod,frob").is_err());
        assert!(s.is_subset(&Signature::minimal()));
    }

    #[test]
    fn concurrent_construction_yields_one_node() {
        let terms: Vec<Term> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..8)
                .map(|_| {
                    scope.spawn(|| {
                        Term::modulo(Term::exp2(Term::add(Term::var(3), Term::constant(99u32))), Term::var(4))
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        assert!(terms.windows(2).all(|w| w[0].id() == w[1].id()));
    }
}
