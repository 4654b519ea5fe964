//! Free-marginal multirater kappa on a few small rating tables.
//!
//! cargo run --example kappa

use linkstudy::evaluation::kappa::{binary_counts, randolph_kappa};

fn main() {
    let tables: [(&str, Vec<Vec<bool>>); 4] = [
        ("unanimous", vec![vec![true, true, true], vec![false, false, false]]),
        ("split pair", vec![vec![true, false], vec![false, true]]),
        ("mostly agree", vec![vec![true, true, false], vec![true, true, true], vec![false, false, false]]),
        ("uneven raters", vec![vec![true, true], vec![true, true, true, false], vec![false]]),
    ];
    for (name, items) in tables {
        let counts: Vec<[u32; 2]> = items.into_iter().map(binary_counts).collect();
        match randolph_kappa(&counts, 2) {
            Ok(Some(k)) => println!("{name:<14} {counts:?} -> {k:+.4}"),
            Ok(None) => println!("{name:<14} {counts:?} -> undefined"),
            Err(e) => println!("{name:<14} error: {e}"),
        }
    }
}
