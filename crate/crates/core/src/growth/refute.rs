//! Bounded bottom-up enumeration of a closure, looking for a term that
//! agrees with a target.
//!
//! Terms are enumerated by tree size, then by symbol, and merged into
//! semantic classes keyed by their values on a probe grid. Only one
//! representative per class is extended, so the search covers every value
//! vector reachable within the size bound. A probe value that cannot be
//! decided is kept as a marker in the key and propagates upward; such
//! classes are counted in the evidence.
//!
//! A grid match is confirmed on a larger grid before it is reported.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::eval::Grid;
use crate::lower::lower_monus;
use crate::registry::Registry;
use crate::syntax::parse;
use crate::term::{OpSymbol, Signature, Term, TermKind};
use crate::tower::{self, TowerEvaluator, TowerNat};

const CHUNK: usize = 1 << 14;

pub const DEFAULT_BUDGET: u64 = 20_000_000;
pub const DEFAULT_MAX_CLASSES: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RefuteError {
    #[error("target has {0} variables; the enumerator handles one or two")]
    TargetArity(usize),
    #[error("target is not determined at probe {0:?}")]
    TargetUndetermined(Vec<u64>),
    #[error("symbol `{0}` cannot be enumerated")]
    Unsupported(OpSymbol),
    #[error("planted term `{0}` is outside the signature or uses extra variables")]
    BadPlant(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

#[derive(Debug, Clone)]
pub struct RefuteConfig {
    pub target: Term,
    pub sig: Signature,
    pub max_size: usize,
    pub max_const: u64,
    /// candidate terms examined before the search is cut short
    pub budget: u64,
    pub max_classes: usize,
    /// known witnesses; their subterms join the enumeration at their size
    pub planted: Vec<Term>,
}

impl RefuteConfig {
    pub fn new(target: Term, sig: Signature, max_size: usize, max_const: u64) -> Self {
        RefuteConfig {
            target,
            sig,
            max_size,
            max_const,
            budget: DEFAULT_BUDGET,
            max_classes: DEFAULT_MAX_CLASSES,
            planted: Vec::new(),
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_plant(mut self, t: Term) -> Self {
        self.planted.push(t);
        self
    }

    fn arity(&self) -> usize {
        self.target.free_vars().last().map_or(1, |&v| v as usize + 1)
    }

    /// `{0..7}^2` for binary targets, `{0..15}` for unary ones.
    pub fn probes(&self) -> Grid {
        match self.arity() {
            1 => Grid::square(0..=15, 1),
            n => Grid::square(0..=7, n),
        }
    }

    /// `{0..12}^2` for binary targets, `{0..63}` for unary ones.
    pub fn confirmation(&self) -> Grid {
        match self.arity() {
            1 => Grid::square(0..=63, 1),
            n => Grid::square(0..=12, n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Outcome {
    NotFoundUpToBound,
    Found,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Bounds {
    pub max_size: usize,
    pub max_const: u64,
    pub budget: u64,
    pub max_classes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RefutationEvidence {
    pub target: String,
    pub signature: Vec<String>,
    pub bounds: Bounds,
    pub probes: Grid,
    pub confirmation: Grid,
    pub classes_enumerated: u64,
    pub candidates_examined: u64,
    /// classes with a probe value that could not be decided
    pub undetermined_classes: u64,
    /// grid matches that failed or could not be decided on the confirmation grid
    pub rejected_matches: u64,
    /// the budget or class cap ended the regular enumeration early
    pub truncated: bool,
    /// largest size whose regular enumeration completed
    pub complete_through_size: usize,
    pub planted: Vec<String>,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_size: Option<u64>,
    #[serde(skip)]
    pub witness_term: Option<Term>,
}

impl RefutationEvidence {
    pub fn found(&self) -> bool {
        self.outcome == Outcome::Found
    }
}

impl fmt::Display for RefutationEvidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} for {} over {{{}}}: size <= {}, consts <= {}, {} classes, {} candidates",
            self.outcome,
            self.target,
            self.signature.join(", "),
            self.bounds.max_size,
            self.bounds.max_const,
            self.classes_enumerated,
            self.candidates_examined
        )?;
        if self.truncated {
            write!(f, ", truncated after size {}", self.complete_through_size)?;
        }
        if self.undetermined_classes > 0 {
            write!(f, ", {} undetermined classes", self.undetermined_classes)?;
        }
        if let Some(w) = &self.witness {
            write!(f, ", witness {w}")?;
        }
        Ok(())
    }
}

type Values = Arc<[Option<TowerNat>]>;

enum Origin {
    Leaf(Term),
    Op(OpSymbol, u32, u32),
    Planted(Term),
}

struct Class {
    values: Values,
    origin: Origin,
}

struct Search<'c> {
    cfg: &'c RefuteConfig,
    target: Vec<TowerNat>,
    classes: Vec<Class>,
    index: HashMap<Values, u32>,
    levels: Vec<Vec<u32>>,
    ev: Evidence,
}

#[derive(Default)]
struct Evidence {
    candidates: u64,
    undetermined: u64,
    rejected: u64,
    truncated: bool,
    complete_through: usize,
    witness: Option<Term>,
}

enum Step {
    Continue,
    Stop,
}

impl Search<'_> {
    fn rebuild(&self, id: u32) -> Term {
        match &self.classes[id as usize].origin {
            Origin::Leaf(t) | Origin::Planted(t) => t.clone(),
            Origin::Op(sym, a, b) => {
                let mut ch = vec![self.rebuild(*a)];
                if sym.arity() == 2 {
                    ch.push(self.rebuild(*b));
                }
                Term::op(*sym, ch).expect("enumerated with the right arity")
            }
        }
    }

    fn matches(&self, values: &[Option<TowerNat>]) -> bool {
        values.iter().zip(&self.target).all(|(v, t)| v.as_ref().is_none_or(|v| v == t))
    }

    /// Confirms a grid match on the larger grid.
    fn confirm(&self, t: &Term) -> bool {
        let reg = Registry::new();
        let ev = TowerEvaluator::new(&reg);
        self.cfg.confirmation().points().into_par_iter().all(|p| {
            let env: Vec<TowerNat> = p.iter().map(|&v| TowerNat::from_u64(v)).collect();
            match (ev.eval(&self.cfg.target, &env), ev.eval(t, &env)) {
                (Ok(a), Ok(b)) => a == b,
                _ => false,
            }
        })
    }

    /// Adds a class unless its value vector is known. Stops on a confirmed match.
    fn insert(&mut self, size: usize, values: Values, origin: Origin) -> Step {
        if self.index.contains_key(&values) {
            return Step::Continue;
        }
        let id = self.classes.len() as u32;
        if values.iter().any(Option::is_none) {
            self.ev.undetermined += 1;
        }
        let candidate = self.matches(&values);
        self.index.insert(values.clone(), id);
        self.classes.push(Class { values, origin });
        self.levels[size].push(id);
        if candidate {
            let t = self.rebuild(id);
            if self.confirm(&t) {
                self.ev.witness = Some(t);
                return Step::Stop;
            }
            self.ev.rejected += 1;
        }
        Step::Continue
    }

    fn over_limits(&self) -> bool {
        self.ev.candidates >= self.cfg.budget || self.classes.len() >= self.cfg.max_classes
    }

    fn apply_values(&self, sym: OpSymbol, a: u32, b: u32) -> Values {
        let va = &self.classes[a as usize].values;
        let vb = &self.classes[b as usize].values;
        (0..va.len())
            .map(|i| {
                let x = va[i].as_ref()?;
                let args: Vec<&TowerNat> = if sym.arity() == 1 {
                    vec![x]
                } else {
                    vec![x, vb[i].as_ref()?]
                };
                tower::apply(sym, &args).ok()
            })
            .collect()
    }

    fn flush(&mut self, size: usize, buf: &mut Vec<(OpSymbol, u32, u32)>) -> Step {
        let computed: Vec<Values> = buf.par_iter().map(|&(s, a, b)| self.apply_values(s, a, b)).collect();
        for ((sym, a, b), values) in buf.drain(..).zip(computed) {
            if self.over_limits() {
                self.ev.truncated = true;
                return Step::Stop;
            }
            self.ev.candidates += 1;
            if let Step::Stop = self.insert(size, values, Origin::Op(sym, a, b)) {
                return Step::Stop;
            }
        }
        Step::Continue
    }

    /// Regular candidates of tree size `n`.
    fn level(&mut self, n: usize, probes: &[Vec<u64>]) -> Step {
        if n == 1 {
            let leaves = (0..self.cfg.arity() as u32)
                .map(|v| (Term::var(v), probes.iter().map(|p| Some(TowerNat::from_u64(p[v as usize]))).collect()))
                .chain((0..=self.cfg.max_const).map(|c| (Term::constant(c), vec![Some(TowerNat::from_u64(c)); probes.len()])))
                .collect::<Vec<(Term, Vec<Option<TowerNat>>)>>();
            for (t, values) in leaves {
                self.ev.candidates += 1;
                if let Step::Stop = self.insert(1, values.into(), Origin::Leaf(t)) {
                    return Step::Stop;
                }
            }
            return Step::Continue;
        }
        let mut buf = Vec::with_capacity(CHUNK);
        let symbols: Vec<OpSymbol> = self.cfg.sig.symbols().collect();
        for sym in symbols {
            let splits: Vec<(usize, usize)> = if sym.arity() == 1 {
                vec![(n - 1, 0)]
            } else {
                (1..n - 1).map(|k| (k, n - 1 - k)).collect()
            };
            for (k1, k2) in splits {
                if sym.is_commutative() && k1 > k2 {
                    continue;
                }
                let left = self.levels[k1].clone();
                let right = if sym.arity() == 1 { vec![0] } else { self.levels[k2].clone() };
                for &a in &left {
                    for &b in &right {
                        if sym.is_commutative() && k1 == k2 && b < a {
                            continue;
                        }
                        buf.push((sym, a, b));
                        if buf.len() == CHUNK {
                            if let Step::Stop = self.flush(n, &mut buf) {
                                return Step::Stop;
                            }
                        }
                    }
                }
            }
        }
        self.flush(n, &mut buf)
    }

    fn plant(&mut self, n: usize, subterms: &[(usize, Term)], probes: &[Vec<u64>]) -> Step {
        let reg = Registry::new();
        let ev = TowerEvaluator::new(&reg);
        for (size, t) in subterms {
            if *size != n {
                continue;
            }
            let values: Vec<Option<TowerNat>> = probes
                .iter()
                .map(|p| {
                    let env: Vec<TowerNat> = p.iter().map(|&v| TowerNat::from_u64(v)).collect();
                    ev.eval(t, &env).ok()
                })
                .collect();
            if let Step::Stop = self.insert(n, values.into(), Origin::Planted(t.clone())) {
                return Step::Stop;
            }
        }
        Step::Continue
    }
}

fn check_config(cfg: &RefuteConfig) -> Result<(), RefuteError> {
    let arity = cfg.arity();
    if !(1..=2).contains(&arity) {
        return Err(RefuteError::TargetArity(arity));
    }
    if let Some(s) = cfg.sig.symbols().find(|s| matches!(s, OpSymbol::G | OpSymbol::Ext(_))) {
        return Err(RefuteError::Unsupported(s));
    }
    for p in &cfg.planted {
        let extra = p.free_vars().into_iter().any(|v| v as usize >= arity);
        if extra || !p.conforms(&cfg.sig) {
            return Err(RefuteError::BadPlant(p.to_string()));
        }
    }
    Ok(())
}

/// Searches for a term over `cfg.sig` that equals `cfg.target`.
pub fn refute_membership(cfg: &RefuteConfig) -> Result<RefutationEvidence, RefuteError> {
    check_config(cfg)?;
    let probes = cfg.probes().points();
    let reg = Registry::new();
    let tev = TowerEvaluator::new(&reg);
    let target = probes
        .iter()
        .map(|p| {
            let env: Vec<TowerNat> = p.iter().map(|&v| TowerNat::from_u64(v)).collect();
            tev.eval(&cfg.target, &env).map_err(|_| RefuteError::TargetUndetermined(p.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut subterms: Vec<(usize, Term)> = Vec::new();
    for p in &cfg.planted {
        for s in p.postorder() {
            if !matches!(s.kind(), TermKind::Const(_) | TermKind::Var(_)) && !subterms.iter().any(|(_, t)| *t == s) {
                subterms.push((s.tree_size() as usize, s));
            }
        }
    }

    let mut search = Search {
        cfg,
        target,
        classes: Vec::new(),
        index: HashMap::new(),
        levels: vec![Vec::new(); cfg.max_size + 1],
        ev: Evidence::default(),
    };
    // planted leaves may use constants above the bound
    let planted_leaves: Vec<Term> = cfg
        .planted
        .iter()
        .flat_map(|p| p.postorder())
        .filter(|s| matches!(s.kind(), TermKind::Const(_) | TermKind::Var(_)))
        .collect();
    for n in 1..=cfg.max_size {
        if !search.ev.truncated {
            if let Step::Stop = search.level(n, &probes) {
                if search.ev.witness.is_some() {
                    break;
                }
            } else {
                search.ev.complete_through = n;
            }
        }
        let leaves: Vec<(usize, Term)> = if n == 1 {
            planted_leaves.iter().map(|t| (1, t.clone())).collect()
        } else {
            Vec::new()
        };
        let plant_step = search.plant(n, if n == 1 { &leaves } else { &subterms }, &probes);
        if let Step::Stop = plant_step {
            break;
        }
    }

    let ev = search.ev;
    let witness_term = ev.witness;
    Ok(RefutationEvidence {
        target: cfg.target.to_string(),
        signature: cfg.sig.names(),
        bounds: Bounds {
            max_size: cfg.max_size,
            max_const: cfg.max_const,
            budget: cfg.budget,
            max_classes: cfg.max_classes,
        },
        probes: cfg.probes(),
        confirmation: cfg.confirmation(),
        classes_enumerated: search.classes.len() as u64,
        candidates_examined: ev.candidates,
        undetermined_classes: ev.undetermined,
        rejected_matches: ev.rejected,
        truncated: ev.truncated,
        complete_through_size: ev.complete_through,
        planted: cfg.planted.iter().map(Term::to_string).collect(),
        outcome: if witness_term.is_some() {
            Outcome::Found
        } else {
            Outcome::NotFoundUpToBound
        },
        witness: witness_term.as_ref().map(Term::to_string),
        witness_size: witness_term.as_ref().map(Term::tree_size),
        witness_term,
    })
}

/// What a preset run is expected to produce, if anything.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Expectation {
    NotFound,
    Found,
    Open,
}

#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub config: RefuteConfig,
    pub expected: Expectation,
}

pub const PRESET_NAMES: [&str; 7] = [
    "sum-mod-exp",
    "mod2-add-exp",
    "exp-add-mod",
    "square-double-mod-exp",
    "monus-planted",
    "mod2-synthesis",
    "mod-add-div-exp",
];

fn sig(symbols: &[OpSymbol]) -> Signature {
    Signature::new(symbols.iter().copied())
}

/// A preconfigured search.
pub fn preset(name: &str) -> Result<Preset, RefuteError> {
    use OpSymbol::*;
    let p = |s: &str| parse(s).expect("fixed text");
    let (description, config, expected) = match name {
        "sum-mod-exp" => (
            "x + y over {mod, exp2}",
            RefuteConfig::new(p("x + y"), sig(&[Mod, Exp2]), 9, 3),
            Expectation::NotFound,
        ),
        "mod2-add-exp" => (
            "x % 2 over {add, exp2}",
            RefuteConfig::new(p("x % 2"), sig(&[Add, Exp2]), 9, 3),
            Expectation::NotFound,
        ),
        "exp-add-mod" => (
            "2^x over {add, mod}",
            RefuteConfig::new(p("2^x"), sig(&[Add, Mod]), 9, 3),
            Expectation::NotFound,
        ),
        "square-double-mod-exp" => (
            "x * x over {double, mod, exp2}",
            RefuteConfig::new(p("x * x"), sig(&[Double, Mod, Exp2]), 9, 3),
            Expectation::NotFound,
        ),
        "monus-planted" => {
            let w = lower_monus(Term::var(0), Term::var(1));
            (
                "x -. y over {add, mod, exp2} with the lowered monus planted",
                RefuteConfig::new(p("x -. y"), sig(&[Add, Mod, Exp2]), w.tree_size() as usize, 3)
                    .with_budget(2_000_000)
                    .with_plant(w),
                Expectation::Found,
            )
        }
        "mod2-synthesis" => (
            "2^(x % 2) over {add, div, exp2} with the halving identity planted",
            RefuteConfig::new(p("2^(x % 2)"), sig(&[Add, Div, Exp2]), 11, 3)
                .with_plant(p("2^x / 2^(x/2 + x/2)")),
            Expectation::Found,
        ),
        "mod-add-div-exp" => (
            "x % y over {add, div, exp2}; open",
            RefuteConfig::new(p("x % y"), sig(&[Add, Div, Exp2]), 9, 3).with_budget(5_000_000),
            Expectation::Open,
        ),
        other => return Err(RefuteError::UnknownPreset(other.to_string())),
    };
    let name = PRESET_NAMES.iter().find(|n| **n == name).expect("matched above");
    Ok(Preset {
        name,
        description,
        config,
        expected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Term {
        parse(s).unwrap()
    }

    #[test]
    fn finds_small_witnesses() {
        use OpSymbol::*;
        let cfg = RefuteConfig::new(p("x + x"), sig(&[Double]), 3, 1);
        let ev = refute_membership(&cfg).unwrap();
        assert_eq!(ev.outcome, Outcome::Found);
        assert_eq!(ev.witness.as_deref(), Some("double(x)"));

        let cfg = RefuteConfig::new(p("y + x + 1"), sig(&[Add]), 5, 1);
        let ev = refute_membership(&cfg).unwrap();
        assert!(ev.found());
        assert_eq!(ev.witness_size, Some(5));
    }

    #[test]
    fn dedup_keeps_one_class_per_value() {
        use OpSymbol::*;
        let cfg = RefuteConfig::new(p("x * y"), sig(&[Add]), 3, 0);
        let ev = refute_membership(&cfg).unwrap();
        assert_eq!(ev.outcome, Outcome::NotFoundUpToBound);
        // x, y, 0, x+x, x+y, y+y (x+0 = x, 0+0 = 0)
        assert_eq!(ev.classes_enumerated, 6);
        assert!(!ev.truncated);
    }

    #[test]
    fn budget_truncates_and_plants_still_enter() {
        use OpSymbol::*;
        let cfg = RefuteConfig::new(p("x + x + x + x + x"), sig(&[Add, Mod]), 9, 1)
            .with_budget(50)
            .with_plant(p("x + x + x + x + x"));
        let ev = refute_membership(&cfg).unwrap();
        assert!(ev.truncated);
        assert!(ev.found());
        assert_eq!(ev.witness_size, Some(9));
    }

    #[test]
    fn deterministic_json() {
        let a = refute_membership(&preset("exp-add-mod").unwrap().config).unwrap();
        let b = refute_membership(&preset("exp-add-mod").unwrap().config).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn rejects_bad_configs() {
        use OpSymbol::*;
        assert!(matches!(
            refute_membership(&RefuteConfig::new(p("x + y + z"), sig(&[Add]), 3, 1)),
            Err(RefuteError::TargetArity(3))
        ));
        assert!(matches!(
            refute_membership(&RefuteConfig::new(p("x"), sig(&[G]), 3, 1)),
            Err(RefuteError::Unsupported(G))
        ));
        let cfg = RefuteConfig::new(p("x"), sig(&[Add]), 3, 1).with_plant(p("x % 2"));
        assert!(matches!(refute_membership(&cfg), Err(RefuteError::BadPlant(_))));
        assert!(preset("nope").is_err());
    }
}
