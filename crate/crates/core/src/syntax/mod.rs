//! Text syntax for terms.
//!
//! ```text
//! expr  := sum
//! sum   := prod (("+" | "-." | "∸") prod)*
//! prod  := power (("*" | "/" | "%") power)*
//! power := atom ("^" power)?            right associative; a literal 2 base is exp2
//! atom  := number | ident | ident "(" expr ("," expr)* ")" | "(" expr ")" | "[" expr "|" expr "]"
//! ```
//!
//! Function names are `exp2 sq double succ pair pow L R h g`, the lowercase
//! aliases `l r`, `extN` for registry slot `N`, and any name registered in a
//! [`Registry`](crate::registry::Registry). Other identifiers are variables,
//! numbered in order of first occurrence. `#` starts a comment.

mod parse;
mod print;

pub use parse::{parse, parse_file, parse_with_names, parse_with_registry, ParseError, Parsed};
pub use print::{print, print_with, var_name};
