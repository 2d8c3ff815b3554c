mod common;

use common::*;
use hfz2::analysis::{detect_unlink, hilbert_p_b};
use hfz2::Verdict;

#[test]
fn hilbert_degree_counts_components() {
    for (s, comps) in [("2;1,1,1", 1), ("2;1,1", 2), ("3;", 3), ("3;1,-2", 1)] {
        let w = word(s);
        let r = hilbert_p_b(&homfly(s, 9), &w).unwrap();
        assert_eq!(r.components, comps, "{s}");
        assert_eq!(r.polynomial.degree().unwrap() + 1, comps, "{s}");
        for (row, fit) in &r.rows {
            assert!(fit.verified_through - fit.stable_from >= w.strands() as i32 + 2, "{s} {row}");
        }
    }
}

#[test]
fn hopf_hilbert_polynomial() {
    let r = hilbert_p_b(&homfly("2;1,1", 8), &word("2;1,1")).unwrap();
    assert_eq!(r.polynomial.to_string(), "4*T + 4");
}

#[test]
fn unlinks_are_consistent() {
    for m in 1..=3 {
        let s = format!("{m};");
        let r = detect_unlink(&homfly(&s, 8), m, 16).unwrap();
        assert_eq!(r.verdict, Verdict::UnlinkConsistent, "{s}");
        assert_eq!(r.m, m);
    }
}

#[test]
fn non_trivial_links_have_persistent_witnesses() {
    for (s, m) in [("2;1,1", 2), ("2;1,1,1", 1)] {
        let small = detect_unlink(&homfly(s, 4), m, 8).unwrap();
        let large = detect_unlink(&homfly(s, 8), m, 16).unwrap();
        assert_eq!(small.verdict, Verdict::NotUnlink, "{s}");
        let w = small.witness.clone().unwrap();
        assert_ne!(w.found, w.expected);
        assert_eq!(large.verdict, Verdict::NotUnlink, "{s}");
        assert_eq!(large.witness, small.witness, "{s}");
    }
}

#[test]
fn hopf_witness() {
    let w = detect_unlink(&homfly("2;1,1", 4), 2, 8).unwrap().witness.unwrap();
    assert_eq!((w.i, w.j, w.x, w.expected, w.found), (2, 0, -2, 0, 1));
}
