mod common;

use common::*;
use hfz2::pipeline::PipelineError;
use hfz2::{Computation, Config, Marking};

#[test]
fn unknot_through_t10() {
    let t = homfly("1;", 10);
    let mut expected = std::collections::BTreeMap::new();
    for x in (0..=20).step_by(2) {
        expected.insert(vec![1, -1, x], 1);
        if x >= 2 {
            expected.insert(vec![-1, -1, x], 1);
        }
    }
    assert_eq!(t.entries, expected);
}

#[test]
fn unlinks_follow_binomial_pattern() {
    for m in 1..=3 {
        let s = format!("{m};");
        assert_eq!(homfly(&s, 8).entries, unlink_table(m, 8), "{s}");
    }
}

#[test]
fn unknot_representatives_agree() {
    let u = homfly("1;", 6);
    for s in ["2;1", "2;-1", "3;1,-2", "3;-1,2", "2;1,1,-1"] {
        assert_eq!(homfly(s, 6).entries, u.entries, "{s}");
    }
}

#[test]
fn hopf_table() {
    let expected = entries(&[
        &[0, -4, 4, 1], &[0, -4, 6, 2], &[0, -4, 8, 3],
        &[0, 0, 0, 1], &[0, 0, 2, 1], &[0, 0, 4, 1], &[0, 0, 6, 1], &[0, 0, 8, 1],
        &[2, -4, 0, 1], &[2, -4, 2, 3], &[2, -4, 4, 5], &[2, -4, 6, 7], &[2, -4, 8, 9],
        &[2, 0, -2, 1], &[2, 0, 0, 1], &[2, 0, 2, 1], &[2, 0, 4, 1], &[2, 0, 6, 1], &[2, 0, 8, 1],
        &[4, -4, -2, 1], &[4, -4, 0, 2], &[4, -4, 2, 3], &[4, -4, 4, 4], &[4, -4, 6, 5], &[4, -4, 8, 6],
    ]);
    assert_eq!(homfly("2;1,1", 4).entries, expected);
}

#[test]
fn trefoil_table() {
    let t = homfly("2;1,1,1", 4);
    let mut expected = entries(&[&[1, 1, -2, 1], &[3, -3, -2, 1], &[3, 1, -4, 1], &[5, -3, -4, 1]]);
    for x in (-2..=8).step_by(2) {
        expected.insert(vec![1, 1, x], 1);
        expected.insert(vec![3, 1, x], 1);
        expected.insert(vec![5, -3, x], 1);
        if x >= 0 {
            expected.insert(vec![3, -3, x], 2);
        }
        if x >= 2 {
            expected.insert(vec![1, -3, x], 1);
        }
    }
    expected.insert(vec![3, 1, -4], 1);
    expected.insert(vec![5, -3, -4], 1);
    assert_eq!(t.entries, expected);
}

#[test]
fn presentations_and_markings_agree() {
    for s in ["2;1,1,1", "2;1,1", "3;1,-2"] {
        let w = word(s);
        let tables: Vec<_> = [(0, Marking::PerArc), (1, Marking::PerArc), (0, Marking::Endpoints), (1, Marking::Endpoints)]
            .into_iter()
            .map(|(variant, marking)| {
                let c = Computation::new(&w, &Config { variant, marking, ..Config::default() }).unwrap();
                (c.homfly_tables(5).unwrap(), c.e2_table(4).unwrap(), c.khovanov_table(None).unwrap())
            })
            .collect();
        assert!(tables.iter().all(|t| *t == tables[0]), "{s}");
    }
}

#[test]
fn cache_does_not_change_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cached = Config { cache_dir: Some(dir.path().into()), ..Config::default() };
    let w = word("2;1,1,1");
    let fresh = Computation::new(&w, &Config::default()).unwrap().homfly_tables(5).unwrap();
    let c = Computation::new(&w, &cached).unwrap();
    assert_eq!(c.homfly_tables(5).unwrap(), fresh);
    assert_eq!(c.homfly_tables(5).unwrap(), fresh);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 9);
}

#[test]
fn resource_limit_is_reported() {
    let config = Config { max_slice_dim: 50, ..Config::default() };
    let err = Computation::new(&word("2;1,1,1"), &config).unwrap().homfly_tables(6).unwrap_err();
    assert!(matches!(err, PipelineError::Resource(_)));
}

#[test]
fn negative_cutoff_rejected() {
    assert!(matches!(
        computation("1;").homfly_tables(-1),
        Err(PipelineError::Cutoff { .. })
    ));
}

#[test]
fn base_ring_variables_agree_on_each_component() {
    for s in ["2;1,1,1", "2;1,1", "3;1,-2"] {
        let c = computation(s);
        let w = word(s);
        let d = hfz2::braid::build_marked_diagram(&w);
        for comp in 0..w.components() {
            let vars: Vec<usize> = (0..d.nvars).filter(|&v| d.component_of_variable[v] == comp).collect();
            for pair in vars.windows(2) {
                assert!(c.actions_agree(pair[0], pair[1], 4).unwrap(), "{s} vars {pair:?}");
            }
        }
    }
}
