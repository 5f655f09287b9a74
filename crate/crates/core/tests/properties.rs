use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use satgnn_core::generator::gen_formula;
use satgnn_core::wl::indistinguishable;
use satgnn_core::{
    emit_dimacs, encode, enumerate_models, feasible_bruteforce, parse_dimacs, solve, Formula, FormulaPermutation,
    SolveBudget, SolveStatus,
};

fn formula(max_n: usize, max_m: usize) -> impl Strategy<Value = Formula> {
    (3..=max_n, 1..=max_m, any::<u64>()).prop_map(|(n, m, seed)| {
        let cap = 8 * n * (n - 1) * (n - 2) / 6;
        gen_formula(3, n, m.min(cap), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    })
}

/// Canonical clause multiset under a variable relabelling.
fn relabelled(f: &Formula, perm: &[usize]) -> Vec<Vec<i64>> {
    let mut rows: Vec<Vec<i64>> = f
        .clauses()
        .iter()
        .map(|c| {
            let mut lits: Vec<i64> = c
                .literals()
                .iter()
                .map(|l| {
                    let v = perm[l.var() as usize - 1] as i64 + 1;
                    if l.is_positive() { v } else { -v }
                })
                .collect();
            lits.sort_unstable();
            lits
        })
        .collect();
    rows.sort();
    rows
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Graph isomorphism of two formula graphs: clause order is free, so it
/// suffices to search variable relabellings.
fn isomorphic(f: &Formula, h: &Formula) -> bool {
    if f.num_vars() != h.num_vars() || f.num_clauses() != h.num_clauses() {
        return false;
    }
    let target = relabelled(h, &(0..h.num_vars()).collect::<Vec<_>>());
    permutations(f.num_vars()).iter().any(|p| relabelled(f, p) == target)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn dimacs_round_trip_keeps_clause_order(f in formula(9, 30)) {
        let back = parse_dimacs(&emit_dimacs(&f)).unwrap();
        // unused variables are squeezed out on parse; undo that
        let original = |v: u32| back.renaming().map_or(v, |r| r[v as usize - 1]);
        let restored: Vec<Vec<i64>> = back
            .clauses()
            .iter()
            .map(|c| c.literals().iter().map(|l| i64::from(original(l.var())) * if l.is_positive() { 1 } else { -1 }).collect())
            .collect();
        let expected: Vec<Vec<i64>> =
            f.clauses().iter().map(|c| c.literals().iter().map(|l| l.to_dimacs()).collect()).collect();
        prop_assert_eq!(restored, expected);
        prop_assert_eq!(back.renaming().is_none(), f.occurring_vars() == f.num_vars());
    }

    #[test]
    fn solver_enumeration_and_program_agree(f in formula(10, 60)) {
        let sat = !enumerate_models(&f).unwrap().is_empty();
        prop_assert_eq!(feasible_bruteforce(&encode(&f)).unwrap(), sat);
        let r = solve(&f, SolveBudget::UNLIMITED);
        prop_assert_eq!(r.status, if sat { SolveStatus::Sat } else { SolveStatus::Unsat });
        if let Some(w) = r.model {
            prop_assert!(f.evaluate(&w).unwrap());
        }
    }

    #[test]
    fn satisfying_worlds_are_feasible_points(f in formula(8, 30)) {
        let milp = encode(&f);
        for w in enumerate_models(&f).unwrap() {
            prop_assert!(milp.satisfied_by(w.values()));
        }
    }

    #[test]
    fn wl_ignores_relabelling(f in formula(10, 40), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let perm = FormulaPermutation::random(f.num_clauses(), f.num_vars(), &mut rng);
        let g = f.apply_permutation(&perm).unwrap();
        prop_assert!(indistinguishable(&f, &g));
        // models move with the variables
        prop_assert_eq!(enumerate_models(&f).unwrap().len(), enumerate_models(&g).unwrap().len());
    }

    #[test]
    fn wl_never_separates_isomorphic_pairs(f in formula(5, 6), h in formula(5, 6)) {
        if isomorphic(&f, &h) {
            prop_assert!(indistinguishable(&f, &h));
        }
        if !indistinguishable(&f, &h) {
            prop_assert!(!isomorphic(&f, &h));
        }
    }
}

#[test]
fn isomorphism_oracle_sanity() {
    let f = Formula::from_dimacs_clauses(3, &[&[1, 2, -3], &[-1, 3, 4]]).unwrap();
    let g = Formula::from_dimacs_clauses(3, &[&[-2, 4, 1], &[3, -4, 2]]).unwrap();
    let h = Formula::from_dimacs_clauses(3, &[&[1, 2, 3], &[-1, 3, 4]]).unwrap();
    assert!(isomorphic(&f, &g));
    assert!(!isomorphic(&f, &h));
}
