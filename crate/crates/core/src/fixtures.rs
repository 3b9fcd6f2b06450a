//! Built-in fixture doctrines used by the tests, the acceptance suite and the
//! CLI's generated descriptors.

use std::collections::HashMap;
use std::sync::Arc;

use crate::doctrine::{powerset_doctrine, Doctrine, Elementary, Existential, Exists, Reindex};
use crate::fincat::{projection_class, ArrowClass, ArrowInfo, Category, Literals, Product, TableSpec};
use crate::lattice::Lattice;

pub type Fixture = (Doctrine, Existential, Elementary);

/// Names `1, X, X2, …` for the powers of a two-element set.
pub fn power_names(n_max: usize) -> Vec<String> {
    (0..=n_max)
        .map(|i| match i {
            0 => "1".to_string(),
            1 => "X".to_string(),
            k => format!("X{k}"),
        })
        .collect()
}

/// Finite sets `1, X, …, X^n_max`, `X = {0, 1}`, with every arrow a tuple of
/// literals `0`, `1`, `xi`, `!xi`. Arrows out of `X` are all functions.
pub fn boolean_powers(n_max: usize) -> Category {
    Category::powers(n_max, Literals { constants: true, negations: true }, power_names(n_max))
        .expect("well-formed powers")
}

/// Poset `0 ≤ 1 ≤ … ≤ n-1` as a category; products are minima, the terminal
/// is the top.
pub fn chain_category(n: usize) -> Category {
    let mut arrows = Vec::new();
    let mut index = HashMap::new();
    for i in 0..n {
        for j in i..n {
            index.insert((i, j), arrows.len());
            arrows.push(ArrowInfo { name: format!("{i}<={j}"), src: i, tgt: j });
        }
    }
    let mut compose = Vec::new();
    for i in 0..n {
        for j in i..n {
            for k in j..n {
                compose.push((index[&(j, k)], index[&(i, j)], index[&(i, k)]));
            }
        }
    }
    let mut products = Vec::new();
    for a in 0..n {
        for b in 0..n {
            let m = a.min(b);
            products.push(Product { left: a, right: b, object: m, pr1: index[&(m, a)], pr2: index[&(m, b)] });
        }
    }
    Category::from_table(TableSpec {
        objects: (0..n).map(|i| i.to_string()).collect(),
        identities: (0..n).map(|i| index[&(i, i)]).collect(),
        arrows,
        compose,
        terminal: n - 1,
        products,
    })
    .expect("well-formed chain")
}

/// The constant doctrine with fiber `fiber` and identity reindexing, over a
/// base whose products are all idempotent (`A×A = A`), with ∃ = id along Λ.
pub fn constant_doctrine(base: Category, fiber: Lattice, lambda: Option<ArrowClass>) -> Fixture {
    let base = Arc::new(base);
    let n = fiber.size();
    let table = vec![(0..n).collect::<Vec<_>>(); base.num_arrows()];
    let lambda = lambda.unwrap_or_else(|| projection_class(&base));
    let exists = lambda.members().iter().map(|&f| (f, (0..n).collect())).collect();
    let delta = base
        .objects()
        .map(|a| base.find_product(a, a).map(|_| fiber.top()))
        .collect();
    let fibers = vec![fiber; base.num_objects()];
    let p = Doctrine::new(base, fibers, Reindex::Table(table)).expect("well-formed constant doctrine");
    (p, Existential { lambda, exists: Exists::Table(exists) }, Elementary { delta })
}

/// F0: one object, one arrow, two-element fiber.
pub fn f0() -> Fixture {
    let base = Category::from_table(TableSpec {
        objects: vec!["*".into()],
        arrows: vec![ArrowInfo { name: "id".into(), src: 0, tgt: 0 }],
        identities: vec![0],
        compose: vec![(0, 0, 0)],
        terminal: 0,
        products: vec![Product { left: 0, right: 0, object: 0, pr1: 0, pr2: 0 }],
    })
    .expect("well-formed point");
    constant_doctrine(base, Lattice::chain(2), None)
}

/// F1: the chain `0 ≤ 1 ≤ 2` with constant two-element fibers.
pub fn f1() -> Fixture {
    constant_doctrine(chain_category(3), Lattice::chain(2), None)
}

/// F2: the powerset doctrine on `1, X, X2`.
pub fn f2() -> Fixture {
    powerset(2)
}

/// Powerset doctrine on `1, X, …, X^n`.
pub fn powerset(n_max: usize) -> Fixture {
    powerset_doctrine(Arc::new(boolean_powers(n_max))).expect("concrete base")
}

/// A base with a non-identity idempotent `e: A → A`, only the unit products
/// declared, Λ the identities and two-element fibers. The transformation with
/// component `e` at `A` is natural on the identity functor, so it exercises
/// uniqueness of lax-morphism 2-cells.
pub fn idempotent() -> Fixture {
    let arrows = vec![
        ArrowInfo { name: "id1".into(), src: 0, tgt: 0 },
        ArrowInfo { name: "idA".into(), src: 1, tgt: 1 },
        ArrowInfo { name: "e".into(), src: 1, tgt: 1 },
        ArrowInfo { name: "!".into(), src: 1, tgt: 0 },
    ];
    let mut compose = vec![(0, 0, 0), (3, 1, 3), (3, 2, 3), (0, 3, 3)];
    for (g, f, gf) in [(1, 1, 1), (1, 2, 2), (2, 1, 2), (2, 2, 2)] {
        compose.push((g, f, gf));
    }
    let base = Category::from_table(TableSpec {
        objects: vec!["1".into(), "A".into()],
        arrows,
        identities: vec![0, 1],
        compose,
        terminal: 0,
        products: vec![
            Product { left: 0, right: 0, object: 0, pr1: 0, pr2: 0 },
            Product { left: 1, right: 0, object: 1, pr1: 1, pr2: 3 },
            Product { left: 0, right: 1, object: 1, pr1: 3, pr2: 1 },
        ],
    })
    .expect("well-formed idempotent base");
    let lambda = ArrowClass::identities(&base);
    constant_doctrine(base, Lattice::chain(2), Some(lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fincat::{check_arrow_class, check_category};

    #[test]
    fn fixture_bases_are_categories() {
        for (p, e, _) in [f0(), f1(), f2(), idempotent()] {
            assert_eq!(check_category(p.base()), Ok(()));
            check_arrow_class(p.base(), &e.lambda).unwrap();
        }
    }

    #[test]
    fn chain_projection_class_is_everything() {
        let c = chain_category(3);
        assert_eq!(projection_class(&c).len(), c.num_arrows());
        let cov = check_arrow_class(&c, &projection_class(&c)).unwrap();
        assert!(cov.missing.is_empty());
    }

    #[test]
    fn broken_associativity_is_reported() {
        // Two parallel arrows u, v: 0 → 1 and w: 1 → 1 idempotent with a bad table.
        let arrows = vec![
            ArrowInfo { name: "i0".into(), src: 0, tgt: 0 },
            ArrowInfo { name: "i1".into(), src: 1, tgt: 1 },
            ArrowInfo { name: "u".into(), src: 0, tgt: 1 },
            ArrowInfo { name: "v".into(), src: 0, tgt: 1 },
            ArrowInfo { name: "s".into(), src: 1, tgt: 1 },
        ];
        let mut compose = vec![(0, 0, 0), (1, 1, 1), (2, 0, 2), (3, 0, 3), (1, 2, 2), (1, 3, 3)];
        compose.extend([(1, 4, 4), (4, 1, 4), (4, 4, 1), (4, 2, 3), (4, 3, 3)]);
        let c = Category::from_table(TableSpec {
            objects: vec!["0".into(), "1".into()],
            arrows,
            identities: vec![0, 1],
            compose,
            terminal: 1,
            products: vec![],
        })
        .unwrap();
        let v = check_category(&c).unwrap_err();
        let v = v.violation().unwrap();
        assert_eq!(v.law, "associativity");
        assert_eq!(v.witness["h"], "s");
    }
}
