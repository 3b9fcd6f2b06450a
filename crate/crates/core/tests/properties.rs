//! Invariants checked on random inputs: containment is a preorder sound for
//! models, substitution is functorial, the completion's reindexing is
//! functorial and the unit is an order embedding.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use proptest::prelude::*;

use excomp::completion::{complete, CompleteOptions, Completed};
use excomp::fincat::projection_class;
use excomp::fixtures;
use excomp::lattice::Lattice;
use excomp::syntactic::{
    cq_contains, eval_on_model, parse_formula, reindex_syntactic, sample_pairs, ExistentialFormula, Model, SampleBounds,
    Signature, Substitution,
};

fn graph() -> Signature {
    Signature::new(&[("E", 2), ("R", 1)])
}

const BOUNDS: SampleBounds = SampleBounds { max_context: 2, max_vars: 4, max_atoms: 3 };

fn sample(seed: u64, n: usize) -> Vec<ExistentialFormula> {
    sample_pairs(&graph(), seed, n, &BOUNDS).into_iter().flat_map(|(l, r)| [l, r]).collect()
}

/// A model from bitmasks: bit `i` of `e` is the `i`-th pair in row-major order.
fn model(size: usize, e: u64, r: u64) -> Model {
    let mut relations = BTreeMap::new();
    let pairs = (0..size * size).filter(|i| e >> i & 1 == 1).map(|i| vec![i / size, i % size]);
    relations.insert("E".to_string(), pairs.collect::<BTreeSet<_>>());
    relations.insert("R".to_string(), (0..size).filter(|i| r >> i & 1 == 1).map(|i| vec![i]).collect());
    Model { size, relations }
}

fn context(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn f2_completion() -> &'static Completed {
    static PE: OnceLock<Completed> = OnceLock::new();
    PE.get_or_init(|| {
        let (p, _, _) = fixtures::f2();
        let lambda = projection_class(p.base());
        complete(&p, &lambda, CompleteOptions::default()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn containment_is_a_preorder(seed in any::<u64>()) {
        let phis = sample(seed, 12);
        for a in &phis {
            prop_assert!(cq_contains(a, a).unwrap().is_some(), "{a} is not below itself");
        }
        for a in &phis {
            for b in phis.iter().filter(|b| b.context == a.context) {
                for c in phis.iter().filter(|c| c.context == a.context) {
                    if cq_contains(a, b).unwrap().is_some() && cq_contains(b, c).unwrap().is_some() {
                        prop_assert!(cq_contains(a, c).unwrap().is_some(), "{a} <= {b} <= {c}");
                    }
                }
            }
        }
    }

    #[test]
    fn containment_is_sound_for_models(seed in any::<u64>(), size in 1usize..=3, e in any::<u64>(), r in any::<u64>(), env in any::<u64>()) {
        let m = model(size, e, r);
        for (lhs, rhs) in sample_pairs(&graph(), seed, 6, &BOUNDS) {
            let env: Vec<usize> = (0..lhs.context.len()).map(|i| (env >> (2 * i)) as usize % size).collect();
            if cq_contains(&lhs, &rhs).unwrap().is_some() && eval_on_model(&lhs, &m, &env).unwrap() {
                prop_assert!(eval_on_model(&rhs, &m, &env).unwrap(), "{lhs} holds but {rhs} fails in {m}");
            }
        }
    }

    #[test]
    fn printing_then_parsing_is_the_identity(seed in any::<u64>()) {
        for phi in sample(seed, 5) {
            let back = parse_formula(&graph(), &phi.to_string(), &phi.context).unwrap();
            prop_assert_eq!(back.canonical(), phi.clone().canonical());
        }
    }

    #[test]
    fn substitution_is_functorial(seed in any::<u64>(), k in 1usize..=3, j in 1usize..=3, maps in any::<[u8; 6]>()) {
        for phi in sample(seed, 3) {
            let (u, v) = (context("u", k), context("v", j));
            let tau = Substitution::new(v.clone(), phi.context.clone(), (0..phi.context.len()).map(|i| maps[i] as usize % j).collect()).unwrap();
            let sigma = Substitution::new(u.clone(), v, (0..j).map(|i| maps[3 + i] as usize % k).collect()).unwrap();
            let both = reindex_syntactic(&sigma.then(&tau).unwrap(), &phi).unwrap();
            let stepwise = reindex_syntactic(&sigma, &reindex_syntactic(&tau, &phi).unwrap()).unwrap();
            prop_assert_eq!(both, stepwise);
            let id = reindex_syntactic(&Substitution::identity(phi.context.clone()), &phi).unwrap();
            prop_assert_eq!(id, phi.clone().canonical());
        }
    }

    #[test]
    fn completion_reindexing_is_functorial(i in any::<usize>(), j in any::<usize>(), k in any::<usize>()) {
        let pe = f2_completion();
        let c = pe.base();
        let f = i % c.num_arrows();
        let next: Vec<_> = c.arrows().into_iter().filter(|&g| c.src(g) == c.tgt(f)).collect();
        let g = next[j % next.len()];
        let gf = c.compose(g, f);
        let (rf, rg, rgf) = (pe.reindex[f].as_ref().unwrap(), pe.reindex[g].as_ref().unwrap(), pe.reindex[gf].as_ref().unwrap());
        let x = k % pe.fibers[c.tgt(g)].len();
        prop_assert_eq!(rgf[x], rf[rg[x]]);
    }

    #[test]
    fn powerset_meets_form_a_semilattice(n in 1usize..6, a in any::<usize>(), b in any::<usize>(), c in any::<usize>()) {
        let l = Lattice::powerset((0..n).map(|i| i.to_string()).collect());
        let (a, b, c) = (a % l.size(), b % l.size(), c % l.size());
        prop_assert_eq!(l.meet(a, b), l.meet(b, a));
        prop_assert_eq!(l.meet(l.meet(a, b), c), l.meet(a, l.meet(b, c)));
        prop_assert_eq!(l.meet(a, a), a);
        prop_assert_eq!(l.meet(a, l.top()), a);
        prop_assert_eq!(l.leq(a, b), l.meet(a, b) == a);
    }
}

#[test]
fn unit_is_an_order_embedding() {
    for (p, _, _) in [fixtures::f0(), fixtures::f1(), fixtures::f2()] {
        let lambda = projection_class(p.base());
        let pe = complete(&p, &lambda, CompleteOptions::default()).unwrap();
        for a in p.base().objects() {
            let fib = p.fiber(a);
            for x in fib.elements() {
                for y in fib.elements() {
                    assert_eq!(fib.leq(x, y), pe.fibers[a].leq(pe.iota(a, x), pe.iota(a, y)));
                }
            }
        }
    }
}
