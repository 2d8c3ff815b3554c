mod common;

use common::*;
use hfz2::gf2kernel::{check_slice_identities, MonomialCache};

#[test]
fn differentials_square_to_zero_and_commute() {
    for s in CORPUS {
        let c = computation(s);
        c.expanded().check_identities().unwrap_or_else(|e| panic!("{s}: {e:?}"));
        let cache = MonomialCache::new(c.spec.nvars);
        for x in (c.x_min()..=6).step_by(2) {
            check_slice_identities(c.expanded(), x, &cache).unwrap_or_else(|e| panic!("{s} x={x}: {e:?}"));
        }
    }
}

#[test]
fn unreduced_complexes_satisfy_identities() {
    for s in ["2;1,1,1", "3;1,-2"] {
        let w = word(s);
        let d = hfz2::braid::build_marked_diagram(&w);
        let spec = hfz2::mfbuild::assemble(&d, &w.closure_stats()).unwrap();
        spec.expand().check_identities().unwrap_or_else(|e| panic!("{s}: {e:?}"));
    }
}

#[test]
fn diagrams_glue() {
    for s in MARKOV_CORPUS {
        assert!(hfz2::braid::build_marked_diagram(&word(s)).check_gluing(), "{s}");
    }
}
