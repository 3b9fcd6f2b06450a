//! Parameterised partial equivalence relations and functional relations over
//! an elementary doctrine, read in its existential completion: the objects and
//! morphisms of the exact completion, their composition, and a desk-scale
//! check of the category laws.
//!
//! Relations are stored in the base doctrine `P` with an explicit parameter
//! object standing for the quantified variables. Two readings are provided:
//! the clause-by-clause one over `P`, whose witnesses are base arrows found by
//! exhaustive search, and the one inside `P^e`, where the parameter becomes an
//! existential quantifier. The second implies the first; they agree when every
//! parameter is the terminal object.

use serde::Serialize;
use serde_json::json;

use crate::completion::{Ctx, Raw};
use crate::doctrine::{diagonal, Doctrine, Elementary};
use crate::error::{input, resource, violation, Failure, Result};
use crate::fincat::{Arr, ArrowClass, Category, Obj};
use crate::lattice::Elem;

/// `(A, ρ)` with `ρ ∈ P((A×A)×C)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PerObject {
    pub name: String,
    pub a: Obj,
    pub c: Obj,
    pub rho: Elem,
}

/// `φ ∈ P((A×B)×E)` between two objects.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PerMorphism {
    pub src: PerObject,
    pub tgt: PerObject,
    pub e: Obj,
    pub phi: Elem,
}

/// Symmetry witness `f: (A×A)×C → C` and transitivity witness
/// `g: ((A×A)×A)×C → C`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ObjectWitnesses {
    pub f: Arr,
    pub g: Arr,
}

/// Witnesses for the five morphism clauses: strictness `⟨f1, f2⟩`, the two
/// congruences `h` and `k`, single-valuedness `l`, totality `⟨g1, g2⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MorphismWitnesses {
    pub f1: Arr,
    pub f2: Arr,
    pub h: Arr,
    pub k: Arr,
    pub l: Arr,
    pub g1: Arr,
    pub g2: Arr,
}

/// Signature of a composition rule, so that mutants can be injected.
pub type ComposeFn = dyn Fn(&Exact<'_>, &PerMorphism, &PerMorphism) -> Result<PerMorphism>;

/// An elementary doctrine together with its completion context.
pub struct Exact<'a> {
    p: &'a Doctrine,
    el: &'a Elementary,
    ctx: Ctx<'a>,
}

impl<'a> Exact<'a> {
    pub fn new(p: &'a Doctrine, el: &'a Elementary, lambda: &'a ArrowClass) -> Exact<'a> {
        Exact { p, el, ctx: Ctx::new(p, lambda) }
    }

    pub fn doctrine(&self) -> &Doctrine {
        self.p
    }

    pub fn ctx(&self) -> &Ctx<'a> {
        &self.ctx
    }

    fn base(&self) -> &Category {
        self.p.base()
    }

    fn prod(&self, objs: &[Obj]) -> Result<Obj> {
        self.base().product_of(objs)
    }

    /// Projections out of `prod(objs)`.
    fn projs(&self, objs: &[Obj]) -> Result<Vec<Arr>> {
        (0..objs.len()).map(|i| self.base().proj(objs, i)).collect()
    }

    /// `P_{⟨fs⟩}(x)` for `x` over `prod(objs)`.
    fn rx(&self, src: Obj, fs: &[Arr], objs: &[Obj], x: Elem) -> Result<Elem> {
        Ok(self.p.reindex(self.base().tuple(src, fs, objs)?, x))
    }

    fn search(&self, s: Obj, t: Obj, lhs: Elem, rhs: impl Fn(Arr) -> Result<Elem>) -> Result<Option<Arr>> {
        let fib = self.p.fiber(s);
        for w in self.base().hom(s, t).iter().copied() {
            if fib.leq(lhs, rhs(w)?) {
                return Ok(Some(w));
            }
        }
        Ok(None)
    }

    pub fn object_name(&self, o: &PerObject) -> String {
        let c = self.base();
        let rel = self.p.name(self.prod(&[o.a, o.a, o.c]).unwrap_or(o.a), o.rho);
        format!("{} = ({}, {} over {})", o.name, c.object_name(o.a), rel, c.object_name(o.c))
    }

    pub fn morphism_name(&self, m: &PerMorphism) -> String {
        let rel = self.p.name(self.prod(&[m.src.a, m.tgt.a, m.e]).unwrap_or(m.src.a), m.phi);
        format!("{} -> {}: {} over {}", m.src.name, m.tgt.name, rel, self.base().object_name(m.e))
    }

    fn object_witness(&self, o: &PerObject) -> serde_json::Value {
        json!({ "object": self.object_name(o) })
    }

    fn morphism_witness(&self, m: &PerMorphism) -> serde_json::Value {
        json!({ "morphism": self.morphism_name(m) })
    }

    fn check_object_shape(&self, o: &PerObject) -> Result<Obj> {
        let s = self.prod(&[o.a, o.a, o.c])?;
        if !self.p.fiber(s).contains(o.rho) {
            return Err(input(format!("relation of {} is not an element of its fiber", o.name)));
        }
        Ok(s)
    }

    fn check_morphism_shape(&self, m: &PerMorphism) -> Result<Obj> {
        self.check_object_shape(&m.src)?;
        self.check_object_shape(&m.tgt)?;
        let s = self.prod(&[m.src.a, m.tgt.a, m.e])?;
        if !self.p.fiber(s).contains(m.phi) {
            return Err(input("relation of a morphism is not an element of its fiber"));
        }
        Ok(s)
    }

    /// Both object clauses over `P`, with witnesses searched in arrow order.
    pub fn check_object(&self, o: &PerObject) -> Result<ObjectWitnesses> {
        let (a, c) = (o.a, o.c);
        let s3 = self.check_object_shape(o)?;
        let o3 = [a, a, c];
        let p3 = self.projs(&o3)?;
        let f = self
            .search(s3, c, o.rho, |f| self.rx(s3, &[p3[1], p3[0], f], &o3, o.rho))?
            .ok_or_else(|| violation("object-clause-1", format!("{} is not symmetric", o.name), self.object_witness(o)))?;
        let o4 = [a, a, a, c];
        let s4 = self.prod(&o4)?;
        let p4 = self.projs(&o4)?;
        let lhs = self.p.fiber(s4).meet(
            self.rx(s4, &[p4[0], p4[1], p4[3]], &o3, o.rho)?,
            self.rx(s4, &[p4[1], p4[2], p4[3]], &o3, o.rho)?,
        );
        let g = self
            .search(s4, c, lhs, |g| self.rx(s4, &[p4[0], p4[2], g], &o3, o.rho))?
            .ok_or_else(|| violation("object-clause-2", format!("{} is not transitive", o.name), self.object_witness(o)))?;
        Ok(ObjectWitnesses { f, g })
    }

    /// The five morphism clauses over `P`; the first failing one is reported.
    pub fn check_morphism(&self, m: &PerMorphism) -> Result<MorphismWitnesses> {
        let (a, b, e) = (m.src.a, m.tgt.a, m.e);
        let (c, d) = (m.src.c, m.tgt.c);
        let (rho, sigma, phi) = (m.src.rho, m.tgt.rho, m.phi);
        let fail = |clause: usize, what: &str| violation(&format!("morphism-clause-{clause}"), format!("{}: {what}", self.morphism_name(m)), self.morphism_witness(m));
        let abe = [a, b, e];
        let s = self.check_morphism_shape(m)?;
        let p = self.projs(&abe)?;
        let f1 = self.search(s, c, phi, |f| self.rx(s, &[p[0], p[0], f], &[a, a, c], rho))?;
        let f2 = self.search(s, d, phi, |f| self.rx(s, &[p[1], p[1], f], &[b, b, d], sigma))?;
        let (Some(f1), Some(f2)) = (f1, f2) else { return Err(fail(1, "not strict")) };

        let o = [a, a, b, c, e];
        let s = self.prod(&o)?;
        let p = self.projs(&o)?;
        let lhs = self.p.fiber(s).meet(self.rx(s, &[p[0], p[1], p[3]], &[a, a, c], rho)?, self.rx(s, &[p[1], p[2], p[4]], &abe, phi)?);
        let h = self.search(s, e, lhs, |h| self.rx(s, &[p[0], p[2], h], &abe, phi))?.ok_or_else(|| fail(2, "not a congruence in the source"))?;

        let o = [a, b, b, d, e];
        let s = self.prod(&o)?;
        let p = self.projs(&o)?;
        let lhs = self.p.fiber(s).meet(self.rx(s, &[p[1], p[2], p[3]], &[b, b, d], sigma)?, self.rx(s, &[p[0], p[1], p[4]], &abe, phi)?);
        let k = self.search(s, e, lhs, |k| self.rx(s, &[p[0], p[2], k], &abe, phi))?.ok_or_else(|| fail(3, "not a congruence in the target"))?;

        let o = [a, b, b, e];
        let s = self.prod(&o)?;
        let p = self.projs(&o)?;
        let lhs = self.p.fiber(s).meet(self.rx(s, &[p[0], p[1], p[3]], &abe, phi)?, self.rx(s, &[p[0], p[2], p[3]], &abe, phi)?);
        let l = self.search(s, d, lhs, |l| self.rx(s, &[p[1], p[2], l], &[b, b, d], sigma))?.ok_or_else(|| fail(4, "not single-valued"))?;

        let o = [a, c];
        let s = self.prod(&o)?;
        let p = self.projs(&o)?;
        let lhs = self.rx(s, &[p[0], p[0], p[1]], &[a, a, c], rho)?;
        let be = self.prod(&[b, e])?;
        let (q1, q2) = (self.base().proj(&[b, e], 0)?, self.base().proj(&[b, e], 1)?);
        let w = self
            .search(s, be, lhs, |w| {
                let cat = self.base();
                self.rx(s, &[p[0], cat.compose(q1, w), cat.compose(q2, w)], &abe, phi)
            })?
            .ok_or_else(|| fail(5, "not total"))?;
        let (g1, g2) = (self.base().compose(q1, w), self.base().compose(q2, w));
        Ok(MorphismWitnesses { f1, f2, h, k, l, g1, g2 })
    }

    /// `(pr: (A×B)×E → A×B, φ)`, the relation as an element of `P^e(A×B)`.
    pub fn packaged(&self, a: Obj, b: Obj, e: Obj, phi: Elem) -> Result<Raw> {
        let ab = self.prod(&[a, b])?;
        Ok((self.base().product(ab, e)?.pr1, phi))
    }

    fn re(&self, f: Arr, x: Raw) -> Result<Raw> {
        self.ctx.reindex(f, x).ok_or_else(|| {
            resource(format!("base lacks the pullback needed to reindex along {}", self.base().arrow_name(f)))
        })
    }

    fn meet(&self, x: Raw, y: Raw) -> Result<Raw> {
        self.ctx.meet(x, y).ok_or_else(|| resource("base lacks the pullback needed for a meet"))
    }

    fn pe_leq(&self, x: Raw, y: Raw) -> bool {
        self.ctx.leq(x, y).is_some()
    }

    /// Symmetry and transitivity of the packaged relation inside `P^e`.
    pub fn object_in_completion(&self, o: &PerObject) -> Result<bool> {
        self.check_object_shape(o)?;
        let a = o.a;
        let r = self.packaged(a, a, o.c, o.rho)?;
        let c = self.base();
        let aa = [a, a];
        let s2 = self.prod(&aa)?;
        let p2 = self.projs(&aa)?;
        let swap = c.tuple(s2, &[p2[1], p2[0]], &aa)?;
        if !self.pe_leq(r, self.re(swap, r)?) {
            return Ok(false);
        }
        let aaa = [a, a, a];
        let s3 = self.prod(&aaa)?;
        let p3 = self.projs(&aaa)?;
        let pair = |i: usize, j: usize| c.tuple(s3, &[p3[i], p3[j]], &aa);
        let lhs = self.meet(self.re(pair(0, 1)?, r)?, self.re(pair(1, 2)?, r)?)?;
        Ok(self.pe_leq(lhs, self.re(pair(0, 2)?, r)?))
    }

    /// The morphism clauses inside `P^e`: the packaged relation is strict,
    /// compatible with both relations, single-valued and entire. Returns the
    /// first failing clause.
    pub fn morphism_in_completion(&self, m: &PerMorphism) -> Result<Option<usize>> {
        self.check_morphism_shape(m)?;
        let c = self.base();
        let (a, b) = (m.src.a, m.tgt.a);
        let phi = self.packaged(a, b, m.e, m.phi)?;
        let rho = self.packaged(a, a, m.src.c, m.src.rho)?;
        let sigma = self.packaged(b, b, m.tgt.c, m.tgt.rho)?;
        let ab = [a, b];
        let s = self.prod(&ab)?;
        let p = self.projs(&ab)?;
        let strict = self.meet(self.re(c.tuple(s, &[p[0], p[0]], &[a, a])?, rho)?, self.re(c.tuple(s, &[p[1], p[1]], &[b, b])?, sigma)?)?;
        if !self.pe_leq(phi, strict) {
            return Ok(Some(1));
        }
        let aab = [a, a, b];
        let s = self.prod(&aab)?;
        let p = self.projs(&aab)?;
        let lhs = self.meet(self.re(c.tuple(s, &[p[0], p[1]], &[a, a])?, rho)?, self.re(c.tuple(s, &[p[1], p[2]], &ab)?, phi)?)?;
        if !self.pe_leq(lhs, self.re(c.tuple(s, &[p[0], p[2]], &ab)?, phi)?) {
            return Ok(Some(2));
        }
        let abb = [a, b, b];
        let s = self.prod(&abb)?;
        let p = self.projs(&abb)?;
        let lhs = self.meet(self.re(c.tuple(s, &[p[1], p[2]], &[b, b])?, sigma)?, self.re(c.tuple(s, &[p[0], p[1]], &ab)?, phi)?)?;
        if !self.pe_leq(lhs, self.re(c.tuple(s, &[p[0], p[2]], &ab)?, phi)?) {
            return Ok(Some(3));
        }
        let lhs = self.meet(self.re(c.tuple(s, &[p[0], p[1]], &ab)?, phi)?, self.re(c.tuple(s, &[p[0], p[2]], &ab)?, phi)?)?;
        if !self.pe_leq(lhs, self.re(c.tuple(s, &[p[1], p[2]], &[b, b])?, sigma)?) {
            return Ok(Some(4));
        }
        let defined = self.re(diagonal(c, a)?, rho)?;
        let pa = c.proj(&ab, 0)?;
        if !self.ctx.lambda().contains(pa) {
            return Err(input("projection out of A×B is not in the arrow class"));
        }
        if !self.pe_leq(defined, self.ctx.exists(pa, phi)) {
            return Ok(Some(5));
        }
        Ok(None)
    }

    /// Both readings of one candidate: whether the clauses over `P` hold, and
    /// the first clause failing inside `P^e`. The second reading passing while
    /// the first fails is always an error, and so is any disagreement when all
    /// parameters are terminal.
    pub fn cross_check(&self, m: &PerMorphism) -> Result<(bool, Option<usize>)> {
        let over_p = match self.check_morphism(m) {
            Ok(_) => true,
            Err(Failure::Violation(_)) => false,
            Err(e) => return Err(e),
        };
        let in_pe = self.morphism_in_completion(m)?;
        let t = self.base().terminal();
        let trivial = m.e == t && m.src.c == t && m.tgt.c == t;
        if (in_pe.is_none() && !over_p) || (trivial && over_p != in_pe.is_none()) {
            return Err(violation(
                "exact-readings",
                format!("{}: clauses over P {}, inside P^e {}", self.morphism_name(m), over_p, in_pe.is_none()),
                self.morphism_witness(m),
            ));
        }
        Ok((over_p, in_pe))
    }

    /// Equality of morphisms: mutual order of the packaged relations in `P^e(A×B)`.
    pub fn same_class(&self, m: &PerMorphism, n: &PerMorphism) -> Result<bool> {
        if m.src != n.src || m.tgt != n.tgt {
            return Ok(false);
        }
        let x = self.packaged(m.src.a, m.tgt.a, m.e, m.phi)?;
        let y = self.packaged(n.src.a, n.tgt.a, n.e, n.phi)?;
        Ok(self.ctx.equiv(x, y))
    }

    /// `(A, ρ)` read as a relation from `A` to itself with parameter `C`.
    pub fn identity(&self, o: &PerObject) -> PerMorphism {
        PerMorphism { src: o.clone(), tgt: o.clone(), e: o.c, phi: o.rho }
    }

    /// `(A, δ_A)` with the terminal parameter.
    pub fn diagonal_object(&self, name: &str, a: Obj) -> Result<PerObject> {
        let c = self.base();
        let t = c.terminal();
        let d = self.el.delta.get(a).copied().flatten().ok_or_else(|| input(format!("missing δ for {}", c.object_name(a))))?;
        let aa = c.product_of(&[a, a])?;
        let rho = self.p.reindex(c.product(aa, t)?.pr1, d);
        Ok(PerObject { name: name.to_string(), a, c: t, rho })
    }

    /// Graph `δ_B(u(a), b)` of a base arrow `u: A → B`, with the terminal parameter.
    pub fn graph(&self, u: Arr, src: &PerObject, tgt: &PerObject) -> Result<PerMorphism> {
        let c = self.base();
        let (a, b) = (src.a, tgt.a);
        if c.src(u) != a || c.tgt(u) != b {
            return Err(input("arrow does not connect the two carriers"));
        }
        let t = c.terminal();
        let d = self.el.delta.get(b).copied().flatten().ok_or_else(|| input(format!("missing δ for {}", c.object_name(b))))?;
        let o = [a, b, t];
        let s = self.prod(&o)?;
        let p = self.projs(&o)?;
        let phi = self.rx(s, &[c.compose(u, p[0]), p[1]], &[b, b], d)?;
        Ok(PerMorphism { src: src.clone(), tgt: tgt.clone(), e: t, phi })
    }

    /// Every candidate relation between two objects over one parameter.
    pub fn candidates(&self, src: &PerObject, tgt: &PerObject, e: Obj) -> Result<Vec<PerMorphism>> {
        let s = self.prod(&[src.a, tgt.a, e])?;
        Ok(self
            .p
            .fiber(s)
            .elements()
            .map(|phi| PerMorphism { src: src.clone(), tgt: tgt.clone(), e, phi })
            .collect())
    }
}

/// Composite with parameter `(B×E)×E′` and relation
/// `P_{⟨pr_A, pr_B, pr_E⟩}(φ) ∧ P_{⟨pr_B, pr_C, pr_E′⟩}(ψ)`: the middle
/// variable is absorbed into the parameter.
pub fn compose(x: &Exact<'_>, phi: &PerMorphism, psi: &PerMorphism) -> Result<PerMorphism> {
    compose_with(x, phi, psi, true)
}

/// A broken composition rule that forgets the second relation.
pub fn compose_forgetful(x: &Exact<'_>, phi: &PerMorphism, psi: &PerMorphism) -> Result<PerMorphism> {
    compose_with(x, phi, psi, false)
}

fn compose_with(x: &Exact<'_>, phi: &PerMorphism, psi: &PerMorphism, use_second: bool) -> Result<PerMorphism> {
    if phi.tgt != psi.src {
        return Err(input(format!("cannot compose {} after {}", x.morphism_name(psi), x.morphism_name(phi))));
    }
    let c = x.base();
    let (a, b, cc) = (phi.src.a, phi.tgt.a, psi.tgt.a);
    let (e, e2) = (phi.e, psi.e);
    let param = [b, e, e2];
    let m = c.product_of(&param)?;
    let ac = c.product_of(&[a, cc])?;
    let outer = *c.product(ac, m)?;
    let s = outer.object;
    let pa = c.compose(c.proj(&[a, cc], 0)?, outer.pr1);
    let pc = c.compose(c.proj(&[a, cc], 1)?, outer.pr1);
    let pb = c.compose(c.proj(&param, 0)?, outer.pr2);
    let pe = c.compose(c.proj(&param, 1)?, outer.pr2);
    let pe2 = c.compose(c.proj(&param, 2)?, outer.pr2);
    let left = x.rx(s, &[pa, pb, pe], &[a, b, e], phi.phi)?;
    let rel = if use_second {
        let right = x.rx(s, &[pb, pc, pe2], &[b, cc, e2], psi.phi)?;
        x.p.fiber(s).meet(left, right)
    } else {
        left
    };
    Ok(PerMorphism { src: phi.src.clone(), tgt: psi.tgt.clone(), e: m, phi: rel })
}

/// Morphism classes between two listed objects.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HomReport {
    pub src: usize,
    pub tgt: usize,
    pub candidates: usize,
    pub morphisms: usize,
    pub classes: usize,
    /// Classes of packaged candidates that are functional relations inside `P^e`.
    pub functional_relations: usize,
    /// Candidates accepted over `P` but rejected inside `P^e`.
    pub divergent: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassRep {
    pub id: usize,
    pub src: usize,
    pub tgt: usize,
    pub relation: String,
    pub parameter: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CategoryReport {
    pub objects: Vec<String>,
    pub homs: Vec<HomReport>,
    pub classes: Vec<ClassRep>,
    /// `(first, second, composite)` by class id, composite `second ∘ first`.
    pub composition: Vec<(usize, usize, usize)>,
    pub identities: Vec<usize>,
    pub triples: usize,
}

/// Enumerates morphism classes between the listed objects with the listed
/// parameters, checks both readings on every candidate, and verifies closure
/// under `compose`, identity, associativity and independence of
/// representatives. `budget` bounds the number of candidates.
pub fn verify_category(
    x: &Exact<'_>,
    objects: &[PerObject],
    params: &[Obj],
    budget: usize,
    compose: &ComposeFn,
) -> Result<CategoryReport> {
    let mut report = CategoryReport { objects: objects.iter().map(|o| x.object_name(o)).collect(), ..Default::default() };
    for o in objects {
        x.check_object(o)?;
        if !x.object_in_completion(o)? && o.c == x.base().terminal() {
            return Err(violation("exact-readings", format!("{} fails inside P^e", o.name), x.object_witness(o)));
        }
    }
    let n = objects.len();
    let mut seen = 0usize;
    // valid[i][j]: accepted candidates; reps[i][j]: class representatives.
    let mut valid = vec![vec![Vec::new(); n]; n];
    let mut reps: Vec<Vec<Vec<(usize, PerMorphism)>>> = vec![vec![Vec::new(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut hom = HomReport { src: i, tgt: j, candidates: 0, morphisms: 0, classes: 0, functional_relations: 0, divergent: 0 };
            let mut functional: Vec<PerMorphism> = Vec::new();
            for &e in params {
                for cand in x.candidates(&objects[i], &objects[j], e)? {
                    seen += 1;
                    if seen > budget {
                        report.homs.push(hom);
                        return Err(resource(format!(
                            "more than {budget} candidate relations; partial report: {}",
                            serde_json::to_string(&report).unwrap_or_default()
                        )));
                    }
                    hom.candidates += 1;
                    let (over_p, in_pe) = x.cross_check(&cand)?;
                    if over_p && in_pe.is_some() {
                        hom.divergent += 1;
                    }
                    if in_pe.is_none() && !contains_class(x, &functional, &cand)? {
                        functional.push(cand.clone());
                    }
                    if over_p {
                        hom.morphisms += 1;
                        if !contains_class(x, reps[i][j].iter().map(|r| &r.1), &cand)? {
                            let id = report.classes.len();
                            report.classes.push(ClassRep {
                                id,
                                src: i,
                                tgt: j,
                                relation: x.p.name(x.prod(&[cand.src.a, cand.tgt.a, e])?, cand.phi),
                                parameter: x.base().object_name(e).to_string(),
                            });
                            reps[i][j].push((id, cand.clone()));
                        }
                        valid[i][j].push(cand);
                    }
                }
            }
            hom.classes = reps[i][j].len();
            hom.functional_relations = functional.len();
            report.homs.push(hom);
        }
    }
    let class_of = |m: &PerMorphism, i: usize, j: usize| -> Result<Option<usize>> {
        for (id, r) in &reps[i][j] {
            if x.same_class(r, m)? {
                return Ok(Some(*id));
            }
        }
        Ok(None)
    };
    for (i, o) in objects.iter().enumerate() {
        let id = x.identity(o);
        x.check_morphism(&id)?;
        let cls = class_of(&id, i, i)?.ok_or_else(|| {
            violation("exact-identity", format!("identity on {} is not among the enumerated classes", o.name), x.object_witness(o))
        })?;
        report.identities.push(cls);
        for j in 0..n {
            for (_, f) in &reps[i][j] {
                let left = compose(x, &id, f)?;
                if !x.same_class(&left, f)? {
                    return Err(violation("exact-left-identity", x.morphism_name(f), x.morphism_witness(f)));
                }
            }
            for (_, f) in &reps[j][i] {
                let right = compose(x, f, &id)?;
                if !x.same_class(&right, f)? {
                    return Err(violation("exact-right-identity", x.morphism_name(f), x.morphism_witness(f)));
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for (fi, f) in &reps[i][j] {
                    for (gi, g) in &reps[j][k] {
                        let gf = compose(x, f, g)?;
                        let detail = || format!("{} then {}", x.morphism_name(f), x.morphism_name(g));
                        let witness = || json!({ "first": x.morphism_name(f), "second": x.morphism_name(g) });
                        match x.check_morphism(&gf) {
                            Ok(_) => {}
                            Err(Failure::Violation(v)) => {
                                return Err(violation("exact-composition-closed", format!("{}: {}", detail(), v.law), witness()))
                            }
                            Err(e) => return Err(e),
                        }
                        let cls = class_of(&gf, i, k)?.ok_or_else(|| violation("exact-composition-closed", detail(), witness()))?;
                        report.composition.push((*fi, *gi, cls));
                    }
                }
            }
        }
    }
    let table: std::collections::HashMap<(usize, usize), usize> =
        report.composition.iter().map(|&(f, g, h)| ((f, g), h)).collect();
    // Representative independence on every accepted candidate.
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for f in &valid[i][j] {
                    let fc = class_of(f, i, j)?.expect("accepted candidates have classes");
                    for g in &valid[j][k] {
                        let gc = class_of(g, j, k)?.expect("accepted candidates have classes");
                        let gf = compose(x, f, g)?;
                        if class_of(&gf, i, k)? != Some(table[&(fc, gc)]) {
                            return Err(violation(
                                "exact-compose-well-defined",
                                format!("{} then {}", x.morphism_name(f), x.morphism_name(g)),
                                json!({ "first": x.morphism_name(f), "second": x.morphism_name(g) }),
                            ));
                        }
                    }
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    for (_, f) in &reps[i][j] {
                        for (_, g) in &reps[j][k] {
                            for (_, h) in &reps[k][l] {
                                let left = compose(x, &compose(x, f, g)?, h)?;
                                let right = compose(x, f, &compose(x, g, h)?)?;
                                if !x.same_class(&left, &right)? {
                                    return Err(violation(
                                        "exact-associativity",
                                        format!("{}, {}, {}", x.morphism_name(f), x.morphism_name(g), x.morphism_name(h)),
                                        json!({ "f": x.morphism_name(f), "g": x.morphism_name(g), "h": x.morphism_name(h) }),
                                    ));
                                }
                                report.triples += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(report)
}

fn contains_class<'m>(x: &Exact<'_>, reps: impl IntoIterator<Item = &'m PerMorphism>, m: &PerMorphism) -> Result<bool> {
    for r in reps {
        if x.same_class(r, m)? {
            return Ok(true);
        }
    }
    Ok(false)
}
