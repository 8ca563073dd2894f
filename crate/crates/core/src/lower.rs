//! Lowering of extended terms to the basis `{x + y, x mod y, 2^x}`.
//!
//! | symbol      | replacement                                                  |
//! |-------------|--------------------------------------------------------------|
//! | `double(u)` | `u + u`                                                      |
//! | `succ(u)`   | `u + 1`                                                      |
//! | `sq(u)`     | `2^(u + u) % (2^u + u)`                                      |
//! | `u -. v`    | `((2^(u+v) + u) % (2^(u+v) + v)) % (2^(u+v) + u)`            |
//! | `2uv`       | `(u + v)^2 -. (u^2 + v^2)`                                   |
//! | `u / v`     | `(2(u+1)(u -. u % v)) % (2(u+1)v -. 1)`                      |
//! | `u * v`     | `(2uv) / 2`                                                  |
//!
//! Every replacement is itself fully lowered, so a single bottom-up pass
//! suffices. `pow`, pairing, `h`, `g` and registered symbols have no
//! replacement and are rejected.

use std::collections::HashMap;
use std::fmt;
use std::sync::LazyLock;

use serde::Serialize;
use thiserror::Error;

use crate::bases::rewrite_postorder;
use crate::eval::{Evaluator, Grid};
use crate::report::{verify_equivalence, VerificationReport};
use crate::term::{OpSymbol, Signature, Term, TermSize};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LowerError {
    #[error("no lowering for symbol `{0}`")]
    UnsupportedSymbol(OpSymbol),
    #[error("target signature lacks `{0}`, which lowered terms need")]
    TargetTooSmall(OpSymbol),
    #[error("trace step {step} does not apply: {reason}")]
    Replay { step: usize, reason: String },
}

fn x() -> Term {
    Term::var(0)
}

fn y() -> Term {
    Term::var(1)
}

fn one() -> Term {
    Term::constant(1u32)
}

/// `2^(u+u) mod (2^u + u) = u^2`
pub fn lower_square(u: Term) -> Term {
    Term::modulo(
        Term::exp2(Term::add(u.clone(), u.clone())),
        Term::add(Term::exp2(u.clone()), u),
    )
}

/// `((2^(u+v) + u) mod (2^(u+v) + v)) mod (2^(u+v) + u) = u -. v`
pub fn lower_monus(u: Term, v: Term) -> Term {
    let e = Term::exp2(Term::add(u.clone(), v.clone()));
    let eu = Term::add(e.clone(), u);
    let ev = Term::add(e, v);
    Term::modulo(Term::modulo(eu.clone(), ev), eu)
}

/// `(u + v)^2 -. (u^2 + v^2) = 2uv`
pub fn lower_double_product(u: Term, v: Term) -> Term {
    lower_monus(
        lower_square(Term::add(u.clone(), v.clone())),
        Term::add(lower_square(u), lower_square(v)),
    )
}

/// `(2(u+1)(u -. u mod v)) mod (2(u+1)v -. 1) = floor(u / v)`
pub fn lower_div(u: Term, v: Term) -> Term {
    let u1 = Term::add(u.clone(), one());
    let numerator = lower_double_product(u1.clone(), lower_monus(u.clone(), Term::modulo(u, v.clone())));
    let denominator = lower_monus(lower_double_product(u1, v), one());
    Term::modulo(numerator, denominator)
}

/// `floor(2uv / 2) = uv`
pub fn lower_product(u: Term, v: Term) -> Term {
    lower_div(lower_double_product(u, v), Term::constant(2u32))
}

/// A replacement for one symbol. The template uses `x` and `y` for the
/// first and second argument.
#[derive(Debug, Clone)]
pub struct RewriteRule {
    pub name: String,
    pub source: OpSymbol,
    pub template: Term,
    /// The identity the template realizes.
    pub citation: String,
}

impl RewriteRule {
    pub fn new(name: &str, source: OpSymbol, template: Term, citation: &str) -> Self {
        assert!(
            template.var_count() as usize <= source.arity(),
            "template of {name} uses more variables than {source} has arguments"
        );
        RewriteRule {
            name: name.to_string(),
            source,
            template,
            citation: citation.to_string(),
        }
    }

    /// Distinct nodes in the template, bounding the growth of one application.
    pub fn template_nodes(&self) -> u64 {
        self.template.size().dag_nodes
    }

    pub fn instantiate(&self, args: &[Term]) -> Term {
        let map: HashMap<u32, Term> = args.iter().cloned().enumerate().map(|(i, a)| (i as u32, a)).collect();
        self.template.substitute(&map)
    }
}

/// The rule used for each lowered symbol.
#[derive(Debug, Clone)]
pub struct RuleSet {
    rules: Vec<RewriteRule>,
}

static STANDARD_RULES: LazyLock<RuleSet> = LazyLock::new(|| RuleSet {
    rules: vec![
        RewriteRule::new("double", OpSymbol::Double, Term::add(x(), x()), "2x = x + x"),
        RewriteRule::new("succ", OpSymbol::Succ, Term::add(x(), one()), "succ(x) = x + 1"),
        RewriteRule::new("square", OpSymbol::Square, lower_square(x()), "x^2 = 2^(x+x) mod (2^x + x)"),
        RewriteRule::new(
            "monus",
            OpSymbol::Monus,
            lower_monus(x(), y()),
            "x -. y = ((2^(x+y) + x) mod (2^(x+y) + y)) mod (2^(x+y) + x)",
        ),
        RewriteRule::new(
            "div",
            OpSymbol::Div,
            lower_div(x(), y()),
            "floor(x/y) = (2(x+1)(x -. x mod y)) mod (2(x+1)y -. 1), with 2ab = (a+b)^2 -. (a^2 + b^2)",
        ),
        RewriteRule::new("product", OpSymbol::Mul, lower_product(x(), y()), "xy = floor(2xy / 2)"),
    ],
});

impl RuleSet {
    pub fn standard() -> RuleSet {
        STANDARD_RULES.clone()
    }

    pub fn rules(&self) -> &[RewriteRule] {
        &self.rules
    }

    pub fn rule_for(&self, sym: OpSymbol) -> Option<&RewriteRule> {
        self.rules.iter().find(|r| r.source == sym)
    }

    pub fn by_name(&self, name: &str) -> Option<&RewriteRule> {
        self.rules.iter().find(|r| r.name == name)
    }

    /// Replaces the rule for `rule.source`.
    pub fn with_rule(mut self, rule: RewriteRule) -> RuleSet {
        self.rules.retain(|r| r.source != rule.source);
        self.rules.push(rule);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub rule: String,
    /// Child-index path of the first occurrence of the rewritten subterm.
    pub position: Vec<usize>,
    pub before: TermSize,
    pub after: TermSize,
}

/// The rewrites performed by [`lower`], in order. Each step rewrites every
/// occurrence of the subterm found at `position`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoweringTrace {
    pub steps: Vec<TraceStep>,
}

impl LoweringTrace {
    /// Re-applies the steps to `input`.
    pub fn replay(&self, input: &Term, rules: &RuleSet) -> Result<Term, LowerError> {
        let mut current = input.clone();
        for (i, step) in self.steps.iter().enumerate() {
            let fail = |reason: String| LowerError::Replay { step: i, reason };
            let rule = rules.by_name(&step.rule).ok_or_else(|| fail(format!("unknown rule {}", step.rule)))?;
            let node = current
                .at(&step.position)
                .ok_or_else(|| fail(format!("no subterm at {:?}", step.position)))?
                .clone();
            if node.symbol() != Some(rule.source) {
                return Err(fail(format!("expected {} at {:?}, found {node}", rule.source, step.position)));
            }
            let replacement = rule.instantiate(node.children());
            current = replace_all(&current, &node, &replacement);
        }
        Ok(current)
    }

    /// One JSON object per step.
    pub fn to_json_lines(&self) -> String {
        self.steps
            .iter()
            .map(|s| serde_json::to_string(s).expect("plain data") + "\n")
            .collect()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

impl fmt::Display for LoweringTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.steps {
            writeln!(
                f,
                "{:<8} at {:?}: tree {} -> {}, dag {} -> {}",
                s.rule, s.position, s.before.tree_nodes, s.after.tree_nodes, s.before.dag_nodes, s.after.dag_nodes
            )?;
        }
        Ok(())
    }
}

fn replace_all(t: &Term, from: &Term, to: &Term) -> Term {
    rewrite_postorder::<()>(t, |node, ch| {
        Ok(if node == from {
            to.clone()
        } else {
            node.with_children(ch.to_vec()).expect("same arity")
        })
    })
    .expect("infallible")
}

/// Path of the leftmost occurrence of each distinct subterm.
fn first_positions(t: &Term) -> HashMap<u64, Vec<usize>> {
    let mut out = HashMap::new();
    let mut stack = vec![(t.clone(), Vec::new())];
    while let Some((node, path)) = stack.pop() {
        if out.contains_key(&node.id()) {
            continue;
        }
        for (i, c) in node.children().iter().enumerate().rev() {
            if !out.contains_key(&c.id()) {
                let mut p = path.clone();
                p.push(i);
                stack.push((c.clone(), p));
            }
        }
        out.insert(node.id(), path);
    }
    out
}

/// Lowers `t` to the minimal basis with the standard rules.
pub fn lower(t: &Term) -> Result<(Term, LoweringTrace), LowerError> {
    lower_to(t, &Signature::minimal(), &RuleSet::standard())
}

/// Lowers every symbol outside `target`. `target` must contain the minimal
/// basis.
pub fn lower_to(t: &Term, target: &Signature, rules: &RuleSet) -> Result<(Term, LoweringTrace), LowerError> {
    for sym in [OpSymbol::Add, OpSymbol::Mod, OpSymbol::Exp2] {
        if !target.contains(sym) {
            return Err(LowerError::TargetTooSmall(sym));
        }
    }
    for sym in t.symbols() {
        if !target.contains(sym) && rules.rule_for(sym).is_none() {
            return Err(LowerError::UnsupportedSymbol(sym));
        }
    }
    let positions = first_positions(t);
    let mut done: HashMap<u64, Term> = HashMap::new();
    let mut lowered: HashMap<Term, Term> = HashMap::new();
    let mut current = t.clone();
    let mut trace = LoweringTrace::default();
    for node in t.postorder() {
        let ch: Vec<Term> = node.children().iter().map(|c| done[&c.id()].clone()).collect();
        let rebuilt = node.with_children(ch.clone()).expect("same arity");
        let Some(sym) = node.symbol().filter(|s| !target.contains(*s)) else {
            done.insert(node.id(), rebuilt);
            continue;
        };
        let rule = rules.rule_for(sym).expect("checked above");
        let out = lowered
            .entry(rebuilt.clone())
            .or_insert_with(|| rule.instantiate(&ch))
            .clone();
        // A node whose children lowered to an already rewritten subterm needs
        // no step of its own if that rewrite already covered it.
        let next = replace_all(&current, &rebuilt, &out);
        if next != current {
            let before = current.size();
            current = next;
            trace.steps.push(TraceStep {
                rule: rule.name.clone(),
                position: positions[&node.id()].clone(),
                before,
                after: current.size(),
            });
        }
        done.insert(node.id(), out);
    }
    let result = done.remove(&t.id()).expect("root visited");
    debug_assert_eq!(result, current);
    Ok((result, trace))
}

/// Compares `t` with its lowering on `grid`.
pub fn verify_lowering(t: &Term, grid: &Grid, ev: &Evaluator<'_>) -> Result<VerificationReport, LowerError> {
    verify_lowering_with(t, &RuleSet::standard(), grid, ev)
}

pub fn verify_lowering_with(t: &Term, rules: &RuleSet, grid: &Grid, ev: &Evaluator<'_>) -> Result<VerificationReport, LowerError> {
    let (low, _) = lower_to(t, &Signature::minimal(), rules)?;
    Ok(verify_equivalence(&format!("lowering of {t}"), t, &low, grid, ev))
}
