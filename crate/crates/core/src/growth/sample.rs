//! Seeded random unary terms over a sub-basis.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::term::{OpSymbol, Signature, Term};

/// Draws unary terms (variable `x` only) of tree size at most `max_size`
/// with constants at most `max_const`.
pub struct TermSampler {
    unary: Vec<OpSymbol>,
    binary: Vec<OpSymbol>,
    max_size: usize,
    max_const: u64,
    /// `feasible[n]`: some term has tree size exactly `n`
    feasible: Vec<bool>,
    rng: ChaCha8Rng,
}

impl TermSampler {
    pub fn new(sig: &Signature, max_size: usize, max_const: u64, seed: u64) -> Self {
        let unary: Vec<OpSymbol> = sig.symbols().filter(|s| s.arity() == 1).collect();
        let binary: Vec<OpSymbol> = sig.symbols().filter(|s| s.arity() == 2).collect();
        let mut feasible = vec![false; max_size.max(1) + 1];
        for n in 1..feasible.len() {
            feasible[n] = n == 1
                || (!unary.is_empty() && feasible[n - 1])
                || (!binary.is_empty() && n >= 3 && (1..n - 1).any(|k| feasible[k] && feasible[n - 1 - k]));
        }
        TermSampler {
            unary,
            binary,
            max_size: max_size.max(1),
            max_const,
            feasible,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// A term whose size is drawn uniformly from the reachable sizes.
    pub fn sample(&mut self) -> Term {
        let sizes: Vec<usize> = (1..=self.max_size).filter(|&n| self.feasible[n]).collect();
        let n = *sizes.choose(&mut self.rng).expect("size 1 is always reachable");
        self.sized(n)
    }

    fn sized(&mut self, n: usize) -> Term {
        if n == 1 {
            return if self.rng.gen_bool(0.5) {
                Term::var(0)
            } else {
                Term::constant(self.rng.gen_range(0..=self.max_const))
            };
        }
        let mut shapes: Vec<(OpSymbol, usize)> = Vec::new();
        if self.feasible[n - 1] {
            shapes.extend(self.unary.iter().map(|&s| (s, 0)));
        }
        for k in 1..n.saturating_sub(1) {
            if self.feasible[k] && self.feasible[n - 1 - k] {
                shapes.extend(self.binary.iter().map(|&s| (s, k)));
            }
        }
        let (sym, k) = *shapes.choose(&mut self.rng).expect("n is reachable");
        let children = if sym.arity() == 1 {
            vec![self.sized(n - 1)]
        } else {
            vec![self.sized(k), self.sized(n - 1 - k)]
        };
        Term::op(sym, children).expect("arity respected")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_symbols() {
        let sig = Signature::new([OpSymbol::Mod, OpSymbol::Exp2]);
        let mut s = TermSampler::new(&sig, 12, 10, 7);
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..500 {
            let t = s.sample();
            assert!(t.tree_size() <= 12);
            assert!(t.conforms(&sig));
            assert!(t.free_vars().iter().all(|&v| v == 0));
            seen.insert(t.tree_size());
        }
        assert_eq!(seen.len(), 12);
    }

    #[test]
    fn binary_only_sizes_are_odd() {
        let sig = Signature::new([OpSymbol::Add, OpSymbol::Mod]);
        let mut s = TermSampler::new(&sig, 12, 10, 1);
        for _ in 0..200 {
            assert_eq!(s.sample().tree_size() % 2, 1);
        }
    }

    #[test]
    fn seeded() {
        let sig = Signature::new([OpSymbol::Double, OpSymbol::Mod, OpSymbol::Exp2]);
        let a: Vec<String> = {
            let mut s = TermSampler::new(&sig, 12, 10, 42);
            (0..50).map(|_| s.sample().to_string()).collect()
        };
        let b: Vec<String> = {
            let mut s = TermSampler::new(&sig, 12, 10, 42);
            (0..50).map(|_| s.sample().to_string()).collect()
        };
        assert_eq!(a, b);
    }
}
