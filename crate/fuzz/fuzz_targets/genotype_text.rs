#![no_main]

use std::collections::HashSet;

use libfuzzer_sys::fuzz_target;
use mrsbo::encoding::{Scheme, SearchSpace};

fuzz_target!(|data: &[u8]| {
    let Some((&which, body)) = data.split_first() else {
        return;
    };
    let Ok(text) = std::str::from_utf8(body) else {
        return;
    };
    let scheme = [Scheme::Plain, Scheme::Flag, Scheme::Size][which as usize % 3];
    let space = SearchSpace::sine(scheme);
    if let Ok(g) = space.parse_genotype(text) {
        assert_eq!(space.parse_genotype(&g.to_string()).unwrap(), g);
        let decoded = g.decode();
        if g.is_feasible() {
            assert!(decoded.is_ok());
        }
        let seen: HashSet<_> = [g.clone()].into_iter().collect();
        assert_eq!(g.penalty(&seen), g.len());
    }
});
