//! Runs every preconfigured refutation search and prints the evidence.
//!
//! `cargo run --release --example refute_search [preset...]`

use std::time::Instant;

use basisforge::growth::refute::{preset, PRESET_NAMES};
use basisforge::growth::refute_membership;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let names: Vec<&str> = if args.is_empty() {
        PRESET_NAMES.to_vec()
    } else {
        args.iter().map(String::as_str).collect()
    };
    for name in names {
        let p = preset(name).expect("known preset");
        let start = Instant::now();
        let ev = refute_membership(&p.config).expect("valid preset");
        println!("{name} ({:?} expected): {ev} [{:.1?}]", p.expected, start.elapsed());
    }
}
