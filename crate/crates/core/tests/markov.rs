mod common;

use common::*;
use hfz2::{Computation, Config};

/// Four-strand stabilizations need slices above the default limit at T = 6.
fn wide() -> Config {
    Config { max_slice_dim: 20_000_000, ..Config::default() }
}

#[test]
fn homfly_is_a_markov_invariant() {
    for s in MARKOV_CORPUS {
        let w = word(s);
        let base = homfly(s, 6);
        for v in w.markov_variants() {
            let t = Computation::new(&v, &wide()).unwrap().homfly_tables(6).unwrap().0;
            assert_eq!(t.entries, base.entries, "{s} vs {v}");
        }
    }
}

#[test]
fn mirror_of_amphichiral_knot_agrees() {
    let w = word("3;1,-2,1,-2");
    let a = homfly("3;1,-2,1,-2", 4);
    let b = hfz2::pipeline::homfly_table(&w.mirror(), 4).unwrap().0;
    assert_eq!(a.entries, b.entries);
}

#[test]
fn chiral_knot_is_detected_by_its_mirror() {
    let w = word("2;1,1,1");
    let a = homfly("2;1,1,1", 3);
    let b = hfz2::pipeline::homfly_table(&w.mirror(), 3).unwrap().0;
    assert_ne!(a.entries, b.entries);
}
