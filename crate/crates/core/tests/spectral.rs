mod common;

use common::*;
use hfz2::pipeline::regrade_e2;

fn kh_pairs(rows: &[(i32, i32)]) -> std::collections::BTreeMap<Vec<i32>, u64> {
    rows.iter().map(|&(h, q)| (vec![h, q], 1)).collect()
}

#[test]
fn hopf_e2_and_khovanov() {
    let c = computation("2;1,1");
    let e2 = c.e2_table(5).unwrap();
    assert_eq!(e2.entries, entries(&[&[0, -4, 4, 1], &[0, -4, 6, 1], &[0, 0, 0, 1], &[0, 0, 2, 1]]));
    assert_eq!(c.khovanov_table(None).unwrap().entries, kh_pairs(&[(0, 0), (0, 2), (2, 4), (2, 6)]));
}

#[test]
fn trefoil_e2_and_khovanov() {
    let c = computation("2;1,1,1");
    let e2 = c.e2_table(5).unwrap();
    let expected = entries(&[
        &[1, -3, 2, 1], &[1, -3, 4, 1], &[1, 1, -2, 1],
        &[1, 1, 0, 1], &[3, -3, -2, 1], &[3, -3, 0, 1],
    ]);
    assert_eq!(e2.entries, expected);
    let kh = c.khovanov_table(None).unwrap();
    assert_eq!(kh.entries, kh_pairs(&[(0, 1), (0, 3), (2, 5), (2, 7), (3, 7), (3, 9)]));
}

#[test]
fn figure_eight_e2_and_khovanov() {
    let c = computation("3;1,-2,1,-2");
    let e2 = c.e2_table(5).unwrap();
    let expected = entries(&[
        &[-3, 1, 4, 1], &[-3, 1, 6, 1], &[-1, -3, 4, 1], &[-1, -3, 6, 1], &[-1, -1, 2, 1],
        &[-1, -1, 4, 1], &[-1, 1, 0, 1], &[-1, 1, 2, 1], &[1, -3, 0, 1], &[1, -3, 2, 1],
    ]);
    assert_eq!(e2.entries, expected);
    let kh = c.khovanov_table(None).unwrap();
    let expected = kh_pairs(&[
        (-2, -5), (-2, -3), (-1, -3), (-1, -1), (0, -1),
        (0, 1), (1, 1), (1, 3), (2, 3), (2, 5),
    ]);
    assert_eq!(kh.entries, expected);
}

#[test]
fn regraded_e2_matches_khovanov_on_corpus() {
    for s in CORPUS {
        let c = computation(s);
        let e2 = regrade_e2(&c.e2_table(6).unwrap());
        assert_eq!(e2.entries, c.khovanov_table(None).unwrap().entries, "{s}");
    }
}

#[test]
fn khovanov_q_gradings_have_link_parity() {
    for s in CORPUS {
        let w = word(s);
        let parity = (w.components() as i32) % 2;
        let kh = computation(s).khovanov_table(None).unwrap();
        assert!(kh.entries.keys().all(|k| k[1].rem_euclid(2) == parity), "{s}");
    }
}

#[test]
fn khovanov_q_cutoff_is_enforced() {
    let err = computation("2;1,1,1").khovanov_table(Some(5)).unwrap_err();
    assert!(matches!(err, hfz2::pipeline::PipelineError::Cutoff { .. }));
}

#[test]
fn homotopy_identity_on_every_component() {
    for s in CORPUS {
        let w = word(s);
        for comp in 0..w.components() {
            let r = hfz2::pipeline::verify_homotopy_identity(&w, comp, 6).unwrap();
            assert!(r.holds, "{s} component {comp}: {:?}", r.first_failure);
            assert!(r.x_squared_zero_on_e2, "{s} component {comp}");
            assert!(r.nontrivial_slices > 0, "{s} component {comp}");
        }
    }
}
