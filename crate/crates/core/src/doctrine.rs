//! Primary doctrines over finite categories: fibers, reindexing, existential
//! and elementary structure, 1-cells and 2-cells, with exhaustive checkers.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde_json::json;

use crate::error::{input, violation, Check, Result};
use crate::fincat::{
    check_arrow_class, check_functor, check_nattrans, check_preserves_products, projection_class, Arr,
    ArrowClass, Category, Functor, Obj,
};
use crate::lattice::{check_map, check_semilattice, Elem, Lattice};

/// A fiberwise function indexed by arrows or objects.
pub type FiberFn = Arc<dyn Fn(usize, Elem) -> Elem + Send + Sync>;

#[derive(Clone)]
pub enum Reindex {
    /// `table[f][β] = P_f(β)`.
    Table(Vec<Vec<Elem>>),
    /// Inverse image along the point map of a concrete base.
    Preimage,
    Computed(FiberFn),
}

impl fmt::Debug for Reindex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reindex::Table(t) => f.debug_tuple("Table").field(&t.len()).finish(),
            Reindex::Preimage => f.write_str("Preimage"),
            Reindex::Computed(_) => f.write_str("Computed"),
        }
    }
}

/// A primary doctrine: a meet-semilattice per object and a reindexing map per
/// arrow, contravariant.
#[derive(Clone, Debug)]
pub struct Doctrine {
    base: Arc<Category>,
    fibers: Vec<Lattice>,
    reindex: Reindex,
}

impl Doctrine {
    pub fn new(base: Arc<Category>, fibers: Vec<Lattice>, reindex: Reindex) -> Result<Doctrine> {
        if fibers.len() != base.num_objects() {
            return Err(input("one fiber per object is required"));
        }
        match &reindex {
            Reindex::Table(t) => {
                if t.len() != base.num_arrows() {
                    return Err(input("one reindexing map per arrow is required"));
                }
                for f in 0..base.num_arrows() {
                    let (s, d) = (base.src(f), base.tgt(f));
                    if t[f].len() != fibers[d].size() || t[f].iter().any(|&x| !fibers[s].contains(x)) {
                        return Err(input(format!("reindexing along {} is ill-typed", base.arrow_name(f))));
                    }
                }
            }
            Reindex::Preimage => {
                for a in base.objects() {
                    let pts = base.carrier(a).ok_or_else(|| input("preimage reindexing needs a concrete base"))?;
                    if fibers[a].size() != 1usize << pts {
                        return Err(input(format!("fiber over {} is not a powerset", base.object_name(a))));
                    }
                }
            }
            Reindex::Computed(_) => {}
        }
        Ok(Doctrine { base, fibers, reindex })
    }

    pub fn base(&self) -> &Category {
        &self.base
    }

    pub fn base_arc(&self) -> Arc<Category> {
        self.base.clone()
    }

    pub fn fiber(&self, a: Obj) -> &Lattice {
        &self.fibers[a]
    }

    pub fn fibers(&self) -> &[Lattice] {
        &self.fibers
    }

    pub fn reindex_kind(&self) -> &Reindex {
        &self.reindex
    }

    /// `P_f(β)` for `f: A → B`, `β ∈ P(B)`.
    pub fn reindex(&self, f: Arr, beta: Elem) -> Elem {
        match &self.reindex {
            Reindex::Table(t) => t[f][beta],
            Reindex::Preimage => {
                let func = self.base.function(f).expect("concrete base");
                let mut out = 0;
                for (p, &q) in func.iter().enumerate() {
                    if beta >> q & 1 == 1 {
                        out |= 1 << p;
                    }
                }
                out
            }
            Reindex::Computed(h) => h(f, beta),
        }
    }

    /// Element name qualified by nothing; fibers carry their own labels.
    pub fn name(&self, a: Obj, x: Elem) -> String {
        self.fibers[a].name(x)
    }
}

/// Exhaustive check of the primary-doctrine laws.
pub fn check_primary(p: &Doctrine) -> Check {
    let c = p.base();
    for a in c.objects() {
        check_semilattice(p.fiber(a))?;
    }
    let arrows = c.arrows();
    for &f in &arrows {
        let (s, d) = (c.src(f), c.tgt(f));
        for beta in p.fiber(d).elements() {
            if !p.fiber(s).contains(p.reindex(f, beta)) {
                return Err(input(format!("reindexing along {} leaves the fiber", c.arrow_name(f))));
            }
        }
        check_map(p.fiber(d), p.fiber(s), &|b| p.reindex(f, b)).map_err(|e| match e {
            crate::error::Failure::Violation(mut v) => {
                v.detail = format!("along {}: {}", c.arrow_name(f), v.detail);
                v.witness = json!({ "arrow": c.arrow_name(f), "inner": v.witness });
                crate::error::Failure::Violation(v)
            }
            other => other,
        })?;
    }
    for a in c.objects() {
        let i = c.id(a);
        for beta in p.fiber(a).elements() {
            if p.reindex(i, beta) != beta {
                return Err(violation(
                    "reindex-identity",
                    format!("reindexing along the identity of {} moves {}", c.object_name(a), p.name(a, beta)),
                    json!({ "object": c.object_name(a), "element": p.name(a, beta) }),
                ));
            }
        }
    }
    for &f in &arrows {
        for &g in arrows.iter().filter(|&&g| c.src(g) == c.tgt(f)) {
            let gf = c.compose(g, f);
            for beta in p.fiber(c.tgt(g)).elements() {
                if p.reindex(gf, beta) != p.reindex(f, p.reindex(g, beta)) {
                    return Err(violation(
                        "reindex-functoriality",
                        format!(
                            "reindexing along {} o {} differs from the composite of reindexings at {}",
                            c.arrow_name(g),
                            c.arrow_name(f),
                            p.name(c.tgt(g), beta)
                        ),
                        json!({ "g": c.arrow_name(g), "f": c.arrow_name(f), "element": p.name(c.tgt(g), beta) }),
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Adjunction `l ⊣ P_f` on every pair of elements.
pub fn check_adjunction(p: &Doctrine, f: Arr, l: &dyn Fn(Elem) -> Elem, law: &str) -> Check {
    let c = p.base();
    let (s, d) = (c.src(f), c.tgt(f));
    for alpha in p.fiber(s).elements() {
        let la = l(alpha);
        if !p.fiber(d).contains(la) {
            return Err(input(format!("left adjoint along {} leaves the fiber", c.arrow_name(f))));
        }
        for beta in p.fiber(d).elements() {
            let lhs = p.fiber(d).leq(la, beta);
            let rhs = p.fiber(s).leq(alpha, p.reindex(f, beta));
            if lhs != rhs {
                return Err(violation(
                    law,
                    format!(
                        "along {}: left adjoint of {} is {}, which is {}below {} while {} is {}below its reindexing",
                        c.arrow_name(f),
                        p.name(s, alpha),
                        p.name(d, la),
                        if lhs { "" } else { "not " },
                        p.name(d, beta),
                        p.name(s, alpha),
                        if rhs { "" } else { "not " },
                    ),
                    json!({ "arrow": c.arrow_name(f), "alpha": p.name(s, alpha), "beta": p.name(d, beta) }),
                ));
            }
        }
    }
    Ok(())
}

/// Left adjoint to `P_f`: for each α the least β with `α ≤ P_f(β)`, when all
/// of these exist and the adjunction verifies.
pub fn find_left_adjoint(p: &Doctrine, f: Arr) -> Option<Vec<Elem>> {
    let c = p.base();
    let (s, d) = (c.src(f), c.tgt(f));
    let (fs, fd) = (p.fiber(s), p.fiber(d));
    let table: Option<Vec<Elem>> = fs
        .elements()
        .map(|alpha| {
            let cands: Vec<Elem> = fd.elements().filter(|&b| fs.leq(alpha, p.reindex(f, b))).collect();
            cands.iter().copied().find(|&m| cands.iter().all(|&b| fd.leq(m, b)))
        })
        .collect();
    let table = table?;
    check_adjunction(p, f, &|a| table[a], "adjunction").ok()?;
    Some(table)
}

#[derive(Clone)]
pub enum Exists {
    /// `table[f]` for tabulated arrows.
    Table(HashMap<Arr, Vec<Elem>>),
    /// Direct image along the point map of a concrete base.
    Image,
    Computed(FiberFn),
}

impl fmt::Debug for Exists {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exists::Table(t) => f.debug_tuple("Table").field(&t.len()).finish(),
            Exists::Image => f.write_str("Image"),
            Exists::Computed(_) => f.write_str("Computed"),
        }
    }
}

/// Left adjoints `∃_f` along the arrows of a class Λ.
#[derive(Clone, Debug)]
pub struct Existential {
    pub lambda: ArrowClass,
    pub exists: Exists,
}

impl Existential {
    /// `∃_f(α)`, or `None` when `f ∉ Λ` or the table lacks it.
    pub fn apply(&self, base: &Category, f: Arr, alpha: Elem) -> Option<Elem> {
        if !self.lambda.contains(f) {
            return None;
        }
        match &self.exists {
            Exists::Table(t) => t.get(&f).and_then(|row| row.get(alpha).copied()),
            Exists::Image => {
                let func = base.function(f)?;
                let mut out = 0;
                for (p, &q) in func.iter().enumerate() {
                    if alpha >> p & 1 == 1 {
                        out |= 1 << q;
                    }
                }
                Some(out)
            }
            Exists::Computed(h) => Some(h(f, alpha)),
        }
    }

    pub fn exists(&self, base: &Category, f: Arr, alpha: Elem) -> Result<Elem> {
        self.apply(base, f, alpha)
            .ok_or_else(|| input(format!("no existential quantifier along {}", base.arrow_name(f))))
    }
}

/// Arrow-class size below which Beck–Chevalley is also checked on every
/// pullback square found by exhaustive search.
const BC_SEARCH_ARROWS: usize = 200;

/// Adjunction along every arrow of Λ, Beck–Chevalley on every chosen square
/// (and on every square the category reveals by search when small), and
/// Frobenius reciprocity.
pub fn check_existential(p: &Doctrine, e: &Existential) -> Check {
    let c = p.base();
    check_arrow_class(c, &e.lambda)?;
    for &f in e.lambda.members() {
        let row: Vec<Elem> = p.fiber(c.src(f)).elements().map(|a| e.exists(c, f, a)).collect::<Result<_>>()?;
        check_adjunction(p, f, &|a| row[a], "exists-adjunction")?;
    }
    let search = c.num_arrows() <= BC_SEARCH_ARROWS;
    let all = c.arrows();
    for &g in e.lambda.members() {
        for &f in all.iter().filter(|&&f| c.tgt(f) == c.tgt(g)) {
            let mut squares: Vec<_> = c.choose_pullback(&e.lambda, g, f).into_iter().collect();
            if search {
                squares.extend(c.search_pullbacks(&e.lambda, g, f));
            }
            for sq in squares {
                for beta in p.fiber(c.src(g)).elements() {
                    let lhs = e.exists(c, sq.g_star, p.reindex(sq.f_star, beta))?;
                    let rhs = p.reindex(f, e.exists(c, g, beta)?);
                    if lhs != rhs {
                        return Err(violation(
                            "beck-chevalley",
                            format!(
                                "square of {} along {} through {}: {} vs {} at {}",
                                c.arrow_name(g),
                                c.arrow_name(f),
                                c.object_name(sq.apex),
                                p.name(c.src(f), lhs),
                                p.name(c.src(f), rhs),
                                p.name(c.src(g), beta)
                            ),
                            json!({
                                "g": c.arrow_name(g),
                                "f": c.arrow_name(f),
                                "g_star": c.arrow_name(sq.g_star),
                                "f_star": c.arrow_name(sq.f_star),
                                "element": p.name(c.src(g), beta)
                            }),
                        ));
                    }
                }
            }
        }
    }
    for &f in e.lambda.members() {
        let (s, d) = (c.src(f), c.tgt(f));
        for alpha in p.fiber(d).elements() {
            let pa = p.reindex(f, alpha);
            for beta in p.fiber(s).elements() {
                let lhs = e.exists(c, f, p.fiber(s).meet(pa, beta))?;
                let rhs = p.fiber(d).meet(alpha, e.exists(c, f, beta)?);
                if lhs != rhs {
                    return Err(violation(
                        "frobenius",
                        format!(
                            "along {} with {} and {}: {} vs {}",
                            c.arrow_name(f),
                            p.name(d, alpha),
                            p.name(s, beta),
                            p.name(d, lhs),
                            p.name(d, rhs)
                        ),
                        json!({ "arrow": c.arrow_name(f), "alpha": p.name(d, alpha), "beta": p.name(s, beta) }),
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Fibered equality: `delta[A] = δ_A ∈ P(A×A)` where declared.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Elementary {
    pub delta: Vec<Option<Elem>>,
}

/// Which instances of the elementary conditions were checked and which were
/// skipped because the base lacks the products they live on.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ElementaryCoverage {
    pub checked: Vec<String>,
    pub skipped: Vec<String>,
}

/// Diagonal `⟨id, id⟩: A → A×A`.
pub fn diagonal(c: &Category, a: Obj) -> Result<Arr> {
    let p = *c.product(a, a)?;
    c.pair(&p, c.id(a), c.id(a)).ok_or_else(|| input("diagonal has no mediating arrow"))
}

/// The two adjunction conditions on δ, on every instance whose products the
/// base declares.
pub fn check_elementary(p: &Doctrine, el: &Elementary) -> Result<ElementaryCoverage> {
    let c = p.base();
    if el.delta.len() != c.num_objects() {
        return Err(input("one diagonal entry per object is required"));
    }
    let mut cov = ElementaryCoverage::default();
    for a in c.objects() {
        let Some(d) = el.delta[a] else {
            if c.find_product(a, a).is_some() {
                return Err(input(format!("missing δ for {}", c.object_name(a))));
            }
            cov.skipped.push(format!("(i) at {}", c.object_name(a)));
            continue;
        };
        let aa = *c.product(a, a)?;
        if !p.fiber(aa.object).contains(d) {
            return Err(input(format!("δ for {} is not an element of its fiber", c.object_name(a))));
        }
        let diag = diagonal(c, a)?;
        check_adjunction(p, diag, &|x| p.fiber(aa.object).meet(p.reindex(aa.pr1, x), d), "elementary-diagonal")?;
        cov.checked.push(format!("(i) at {}", c.object_name(a)));
        for x in c.objects() {
            let label = format!("(ii) at {}, {}", c.object_name(x), c.object_name(a));
            let parts = (|| -> Result<(Arr, Arr, Arr, Obj)> {
                let xa = *c.product(x, a)?;
                let xaa = *c.product(xa.object, a)?;
                let objs = [x, a, a];
                let e = c.tuple(xa.object, &[xa.pr1, xa.pr2, xa.pr2], &objs)?;
                let p12 = xaa.pr1;
                let p23 = c.tuple(xaa.object, &[c.proj(&objs, 1)?, c.proj(&objs, 2)?], &[a, a])?;
                Ok((e, p12, p23, xaa.object))
            })();
            let Ok((e, p12, p23, top)) = parts else {
                cov.skipped.push(label);
                continue;
            };
            let pd = p.reindex(p23, d);
            check_adjunction(p, e, &|x| p.fiber(top).meet(p.reindex(p12, x), pd), "elementary-parameter")?;
            cov.checked.push(label);
        }
    }
    Ok(cov)
}

/// `∃_f(α) = ∃_{pr₂}(P_{f×id}(δ_B) ∧ P_{pr₁}(α))` for `f: A → B`, built from
/// the fibered equality and quantifiers along product projections, then
/// checked to be left adjoint to `P_f`.
pub fn derived_exists(p: &Doctrine, e: &Existential, el: &Elementary, f: Arr) -> Result<Vec<Elem>> {
    let c = p.base();
    let (a, b) = (c.src(f), c.tgt(f));
    let ab = *c.product(a, b)?;
    let bb = *c.product(b, b)?;
    let fxid = c
        .pair(&bb, c.compose(f, ab.pr1), ab.pr2)
        .ok_or_else(|| input("product has no mediating arrow"))?;
    let d = el.delta[b].ok_or_else(|| input(format!("missing δ for {}", c.object_name(b))))?;
    let eq = p.reindex(fxid, d);
    let table: Vec<Elem> = p
        .fiber(a)
        .elements()
        .map(|alpha| e.exists(c, ab.pr2, p.fiber(ab.object).meet(eq, p.reindex(ab.pr1, alpha))))
        .collect::<Result<_>>()?;
    check_adjunction(p, f, &|x| table[x], "derived-exists")?;
    Ok(table)
}

#[derive(Clone)]
pub enum FiberMap {
    Identity,
    /// `table[A][α] = b_A(α)`.
    Table(Vec<Vec<Elem>>),
    Computed(FiberFn),
}

impl fmt::Debug for FiberMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FiberMap::Identity => f.write_str("Identity"),
            FiberMap::Table(t) => f.debug_tuple("Table").field(t).finish(),
            FiberMap::Computed(_) => f.write_str("Computed"),
        }
    }
}

impl FiberMap {
    pub fn apply(&self, a: Obj, x: Elem) -> Elem {
        match self {
            FiberMap::Identity => x,
            FiberMap::Table(t) => t[a][x],
            FiberMap::Computed(h) => h(a, x),
        }
    }
}

/// A 1-cell `(F, b): P → R`.
#[derive(Clone, Debug)]
pub struct Morphism {
    pub functor: Functor,
    pub b: FiberMap,
}

impl Morphism {
    pub fn identity() -> Morphism {
        Morphism { functor: Functor::Identity, b: FiberMap::Identity }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MorphismKind {
    Primary,
    Existential,
    Elementary,
}

/// Structure a 1-cell check may need beyond the two doctrines.
#[derive(Clone, Copy, Default)]
pub struct Extra<'a> {
    pub existential: Option<(&'a Existential, &'a Existential)>,
    pub elementary: Option<(&'a Elementary, &'a Elementary)>,
}

/// Checks a 1-cell: functor laws and product preservation, fiberwise top and
/// meet preservation, naturality, and the flagged extra condition.
pub fn check_morphism(kind: MorphismKind, p: &Doctrine, r: &Doctrine, m: &Morphism, extra: Extra<'_>) -> Check {
    let (c, d) = (p.base(), r.base());
    let rename = |law: &'static str| {
        move |e: crate::error::Failure| match e {
            crate::error::Failure::Violation(mut v) => {
                v.law = format!("{law}: {}", v.law);
                crate::error::Failure::Violation(v)
            }
            other => other,
        }
    };
    check_functor(c, d, &m.functor).map_err(rename("morphism-functor"))?;
    check_preserves_products(c, d, &m.functor).map_err(rename("morphism-products"))?;
    for a in c.objects() {
        let fa = m.functor.obj(a);
        check_map(p.fiber(a), r.fiber(fa), &|x| m.b.apply(a, x)).map_err(|e| match e {
            crate::error::Failure::Violation(mut v) => {
                v.detail = format!("at {}: {}", c.object_name(a), v.detail);
                v.law = format!("morphism-fiber {}", v.law);
                crate::error::Failure::Violation(v)
            }
            other => other,
        })?;
    }
    for f in c.arrows() {
        let (a, b) = (c.src(f), c.tgt(f));
        let ff = m.functor.arr(f);
        for beta in p.fiber(b).elements() {
            let lhs = m.b.apply(a, p.reindex(f, beta));
            let rhs = r.reindex(ff, m.b.apply(b, beta));
            if lhs != rhs {
                return Err(violation(
                    "morphism-naturality",
                    format!("at {} and {}", c.arrow_name(f), p.name(b, beta)),
                    json!({ "arrow": c.arrow_name(f), "element": p.name(b, beta) }),
                ));
            }
        }
    }
    match kind {
        MorphismKind::Primary => {}
        MorphismKind::Existential => {
            let (ep, er) = extra.existential.ok_or_else(|| input("existential structure required"))?;
            for &f in ep.lambda.members() {
                let (a, b) = (c.src(f), c.tgt(f));
                let ff = m.functor.arr(f);
                for alpha in p.fiber(a).elements() {
                    let lhs = m.b.apply(b, ep.exists(c, f, alpha)?);
                    let rhs = er.exists(d, ff, m.b.apply(a, alpha))?;
                    if lhs != rhs {
                        return Err(violation(
                            "morphism-exists",
                            format!("quantifier along {} not preserved at {}", c.arrow_name(f), p.name(a, alpha)),
                            json!({ "arrow": c.arrow_name(f), "element": p.name(a, alpha) }),
                        ));
                    }
                }
            }
        }
        MorphismKind::Elementary => {
            let (dp, dr) = extra.elementary.ok_or_else(|| input("elementary structure required"))?;
            for a in c.objects() {
                let Some(delta) = dp.delta[a] else { continue };
                let aa = *c.product(a, a)?;
                let fa = m.functor.obj(a);
                let faa = *d.product(fa, fa)?;
                let cmp = d
                    .pair(&faa, m.functor.arr(aa.pr1), m.functor.arr(aa.pr2))
                    .ok_or_else(|| input("target product has no mediating arrow"))?;
                let rd = dr.delta[fa].ok_or_else(|| input("missing δ in the target"))?;
                if m.b.apply(aa.object, delta) != r.reindex(cmp, rd) {
                    return Err(violation(
                        "morphism-delta",
                        format!("δ at {} is not preserved", c.object_name(a)),
                        json!({ "object": c.object_name(a) }),
                    ));
                }
            }
        }
    }
    Ok(())
}

/// A 2-cell `θ: (F, b) ⇒ (G, c)`: θ natural and `b_A(α) ≤ R_{θ_A}(c_A(α))`.
pub fn check_two_cell(p: &Doctrine, r: &Doctrine, m1: &Morphism, m2: &Morphism, theta: &[Arr]) -> Check {
    let (c, d) = (p.base(), r.base());
    check_nattrans(c, d, &m1.functor, &m2.functor, theta)?;
    for a in c.objects() {
        let fa = m1.functor.obj(a);
        for alpha in p.fiber(a).elements() {
            let lhs = m1.b.apply(a, alpha);
            let rhs = r.reindex(theta[a], m2.b.apply(a, alpha));
            if !r.fiber(fa).leq(lhs, rhs) {
                return Err(violation(
                    "two-cell",
                    format!("at {} and {}", c.object_name(a), p.name(a, alpha)),
                    json!({ "object": c.object_name(a), "element": p.name(a, alpha) }),
                ));
            }
        }
    }
    Ok(())
}

/// Vertical composite of 2-cells `θ: F ⇒ G`, `κ: G ⇒ H`.
pub fn vertical(d: &Category, theta: &[Arr], kappa: &[Arr]) -> Vec<Arr> {
    theta.iter().zip(kappa).map(|(&t, &k)| d.compose(k, t)).collect()
}

/// Point labels for `X^n`: `*`, then `0`/`1`, then bit tuples.
pub fn point_labels(n: usize) -> Vec<String> {
    match n {
        0 => vec!["*".to_string()],
        1 => vec!["0".to_string(), "1".to_string()],
        _ => (0..1usize << n)
            .map(|p| {
                let bits: Vec<String> = (0..n).map(|i| (p >> i & 1).to_string()).collect();
                format!("({})", bits.join(","))
            })
            .collect(),
    }
}

/// Powerset doctrine on a concrete finite-set base: preimage reindexing,
/// direct image along the projection class, diagonal subsets as δ.
pub fn powerset_doctrine(base: Arc<Category>) -> Result<(Doctrine, Existential, Elementary)> {
    let mut fibers = Vec::new();
    for a in base.objects() {
        let pts = base
            .carrier(a)
            .ok_or_else(|| input("powerset doctrine needs arrows that are functions on finite carriers"))?;
        let n = pts.trailing_zeros() as usize;
        fibers.push(Lattice::powerset(point_labels(n)));
    }
    let lambda = projection_class(&base);
    let mut delta = Vec::new();
    for a in base.objects() {
        delta.push(match base.find_product(a, a) {
            None => None,
            Some(aa) => {
                let (l, r) = (base.function(aa.pr1).unwrap(), base.function(aa.pr2).unwrap());
                let mut mask = 0usize;
                for q in 0..l.len() {
                    if l[q] == r[q] {
                        mask |= 1 << q;
                    }
                }
                Some(mask)
            }
        });
    }
    let doctrine = Doctrine::new(base, fibers, Reindex::Preimage)?;
    Ok((doctrine, Existential { lambda, exists: Exists::Image }, Elementary { delta }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn powerset_doctrine_on_boolean_square() {
        let (p, e, el) = fixtures::f2();
        let c = p.base();
        let x2 = c.object_by_name("X2").unwrap();
        assert_eq!(p.fiber(x2).size(), 16);
        assert_eq!(check_primary(&p), Ok(()));
        assert_eq!(check_existential(&p, &e), Ok(()));
        let cov = check_elementary(&p, &el).unwrap();
        assert!(cov.checked.contains(&"(i) at X".to_string()));
        let pr1 = c.arrow_by_name("X2>X[x1]").unwrap();
        let zero = p.fiber(1).by_name("{0}").unwrap();
        assert_eq!(p.name(x2, p.reindex(pr1, zero)), "{(0,0),(0,1)}");
        assert_eq!(p.name(x2, el.delta[1].unwrap()), "{(0,0),(1,1)}");
    }

    #[test]
    fn left_adjoint_along_projection_is_image() {
        let (p, e, _) = fixtures::f2();
        let c = p.base();
        let pr1 = c.arrow_by_name("X2>X[x1]").unwrap();
        let x2 = c.object_by_name("X2").unwrap();
        let alpha = p.fiber(x2).by_name("{(0,0),(0,1)}").unwrap();
        let adj = find_left_adjoint(&p, pr1).unwrap();
        assert_eq!(p.name(1, adj[alpha]), "{0}");
        // Independent oracle: minimum over all β whose preimage contains α.
        let above: Vec<Elem> = (0..4).filter(|&b| {
            let pre = (0..4).filter(|q| b >> (q & 1) & 1 == 1).fold(0, |m, q| m | 1 << q);
            alpha & !pre == 0
        }).collect();
        assert_eq!(above.iter().copied().min_by_key(|b| b.count_ones()), Some(adj[alpha]));
        for a in p.fiber(x2).elements() {
            assert_eq!(Some(adj[a]), e.apply(c, pr1, a));
        }
        let id = c.id(1);
        assert_eq!(find_left_adjoint(&p, id).unwrap(), (0..4).collect::<Vec<_>>());
        let bang = c.arrow_by_name("X>1[]").unwrap();
        assert_eq!(find_left_adjoint(&p, bang).unwrap()[3], 1);
    }

    #[test]
    fn left_adjoints_exist_exactly_for_meet_preserving_reindexing() {
        let (p, _, _) = fixtures::f2();
        for f in p.base().arrows() {
            assert!(find_left_adjoint(&p, f).is_some(), "{}", p.base().arrow_name(f));
        }
        // Sending everything to the empty set loses the top, so ⊤ has nothing above it.
        let bad = Doctrine::new(p.base_arc(), p.fibers().to_vec(), Reindex::Computed(Arc::new(|_, _| 0))).unwrap();
        let bang = p.base().arrow_by_name("X>1[]").unwrap();
        assert_eq!(find_left_adjoint(&bad, bang), None);
    }

    #[test]
    fn derived_exists_matches_image() {
        let (p, e, el) = fixtures::f2();
        let c = p.base();
        let zero = c.arrow_by_name("1>X[0]").unwrap();
        let t = derived_exists(&p, &e, &el, zero).unwrap();
        assert_eq!(p.name(1, t[1]), "{0}");
        assert_eq!(t, find_left_adjoint(&p, zero).unwrap());
        let pr = c.arrow_by_name("X>1[]").unwrap();
        let t = derived_exists(&p, &e, &el, pr).unwrap();
        assert_eq!(t, (0..4).map(|a| e.apply(c, pr, a).unwrap()).collect::<Vec<_>>());
        let id = c.id(1);
        assert_eq!(derived_exists(&p, &e, &el, id).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn constant_top_quantifier_breaks_adjunction() {
        let (p, e, _) = fixtures::f2();
        let c = p.base_arc();
        let fibers = p.fibers().to_vec();
        let bad = Existential {
            lambda: e.lambda.clone(),
            exists: Exists::Computed(Arc::new(move |f, _| fibers[c.tgt(f)].top())),
        };
        let err = check_existential(&p, &bad).unwrap_err();
        assert_eq!(err.violation().unwrap().law, "exists-adjunction");
    }

    #[test]
    fn full_diagonal_fails_condition_one() {
        let (p, _, el) = fixtures::f2();
        let mut bad = el.clone();
        bad.delta[1] = Some(p.fiber(2).top());
        let err = check_elementary(&p, &bad).unwrap_err();
        assert_eq!(err.violation().unwrap().law, "elementary-diagonal");
    }

    #[test]
    fn poset_fixture_is_elementary_and_existential() {
        let (p, e, el) = fixtures::f1();
        assert_eq!(check_primary(&p), Ok(()));
        assert_eq!(check_existential(&p, &e), Ok(()));
        assert!(check_elementary(&p, &el).unwrap().skipped.is_empty());
        let (p, e, el) = fixtures::f0();
        assert_eq!(check_primary(&p), Ok(()));
        assert_eq!(check_existential(&p, &e), Ok(()));
        assert!(check_elementary(&p, &el).is_ok());
    }

    #[test]
    fn broken_functoriality_is_named() {
        let (p, _, _) = fixtures::f2();
        let c = p.base_arc();
        let not = c.arrow_by_name("X>X[!x1]").unwrap();
        let inner = p.clone();
        let bad = Doctrine::new(
            c.clone(),
            p.fibers().to_vec(),
            Reindex::Computed(Arc::new(move |f, b| if f == not { b } else { inner.reindex(f, b) })),
        )
        .unwrap();
        let err = check_primary(&bad).unwrap_err();
        assert_eq!(err.violation().unwrap().law, "reindex-functoriality");
    }

    #[test]
    fn identity_morphism_and_two_cell() {
        let (p, e, el) = fixtures::f2();
        let id = Morphism::identity();
        for kind in [MorphismKind::Primary, MorphismKind::Existential, MorphismKind::Elementary] {
            let extra = Extra { existential: Some((&e, &e)), elementary: Some((&el, &el)) };
            assert_eq!(check_morphism(kind, &p, &p, &id, extra), Ok(()));
        }
        let ids: Vec<Arr> = p.base().objects().map(|a| p.base().id(a)).collect();
        assert_eq!(check_two_cell(&p, &p, &id, &id, &ids), Ok(()));
        assert_eq!(vertical(p.base(), &ids, &ids), ids);
    }

    #[test]
    fn constant_top_fiber_map_fails() {
        let (p, _, el) = fixtures::f2();
        let fibers = p.fibers().to_vec();
        // Constant ⊤ everywhere is a primary 1-cell; it is caught only by δ.
        let everywhere = Morphism {
            functor: Functor::Identity,
            b: FiberMap::Computed(Arc::new(move |a, _| fibers[a].top())),
        };
        assert_eq!(check_morphism(MorphismKind::Primary, &p, &p, &everywhere, Extra::default()), Ok(()));
        let extra = Extra { existential: None, elementary: Some((&el, &el)) };
        let err = check_morphism(MorphismKind::Elementary, &p, &p, &everywhere, extra).unwrap_err();
        assert_eq!(err.violation().unwrap().law, "morphism-delta");
        // Constant ⊤ on the fiber over X alone breaks naturality along X → 1.
        let top_x = p.fiber(1).top();
        let at_x = Morphism {
            functor: Functor::Identity,
            b: FiberMap::Computed(Arc::new(move |a, x| if a == 1 { top_x } else { x })),
        };
        let err = check_morphism(MorphismKind::Primary, &p, &p, &at_x, Extra::default()).unwrap_err();
        assert_eq!(err.violation().unwrap().law, "morphism-naturality");
    }
}
