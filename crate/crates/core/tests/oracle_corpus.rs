use capmod::oracles::{brute_force_modulus, compare_case, default_corpus_dir, load_corpus};

#[test]
fn corpus_loads_and_is_small() {
    let cases = load_corpus(&default_corpus_dir()).unwrap();
    assert!(cases.len() >= 10);
    assert!(cases.iter().all(|c| c.vertices <= 12));
}

#[test]
fn oracle_reproduces_closed_forms() {
    for case in load_corpus(&default_corpus_dir()).unwrap() {
        let r = brute_force_modulus(&case, case.p).unwrap();
        assert!(r.value - r.lower_bound <= 1e-9 * r.value, "{}: {r:?}", case.name);
        if let Some(x) = case.expected {
            assert!((r.value - x).abs() <= 1e-8 * x, "{}: {} vs {x}", case.name, r.value);
        }
    }
}

#[test]
fn solver_matches_oracle_on_corpus() {
    for case in load_corpus(&default_corpus_dir()).unwrap() {
        let c = compare_case(&case, 1e-8).unwrap();
        println!(
            "{:<18} p={:<4} oracle={:.12} solver={:.12} rel={:.2e}",
            c.case, c.p, c.oracle, c.solver, c.relative_error
        );
        assert!(c.relative_error <= 1e-6, "{c:?}");
    }
}
