//! Terms over arithmetic substitution bases.
//!
//! The crate evaluates terms exactly under the conventions `0^0 = 1`,
//! `x / 0 = 0` and `x mod 0 = x`, lowers extended operations into the
//! basis `{x + y, x mod y, 2^x}`, computes and checks growth certificates
//! for small sub-bases, searches closures by bounded enumeration, and builds
//! bases made of one unary family or a single binary operation.
//!
//! ```
//! use basisforge::{eval, parse, Env, EvalLimits};
//! use num_bigint::BigUint;
//!
//! let t = parse("2^(x+x) % (2^x + x)").unwrap();
//! let v = eval(&t, &Env::from_u64s(&[3]), &EvalLimits::default()).unwrap();
//! assert_eq!(v, BigUint::from(9u32));
//! ```

pub mod arith;
pub mod bases;
pub mod cli;
pub mod eval;
pub mod growth;
pub mod lower;
pub mod registry;
pub mod report;
pub mod syntax;
pub mod term;
pub mod tower;

pub use eval::{eval, Env, EvalError, EvalLimits, Evaluator, Grid};
pub use lower::{lower, lower_to, verify_lowering, LowerError, LoweringTrace, RuleSet};
pub use registry::Registry;
pub use report::{Status, VerificationReport};
pub use syntax::{parse, print, ParseError};
pub use term::{OpSymbol, Signature, Term, TermKind, TermSize};
pub use tower::{TowerEvaluator, TowerNat};
