//! The five commands. Each one records its checks on a [`Recorder`] and
//! stops at the first failure.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use excomp::completion::{
    check_algebra, check_completed, check_elementary_completion, check_kz_comparison, check_lax_idempotent_instance,
    check_monad, check_quotient, check_triangles, complete, counit, elementary_completion, existential_from_algebra,
    check_action_is_counit, Algebra, CompleteOptions, Completed, Tower, DEFAULT_BUDGET,
};
use excomp::doctrine::{check_elementary, check_existential, check_primary, FiberMap, Morphism};
use excomp::error::{input, resource};
use excomp::exactcomp::{compose, verify_category, Exact};
use excomp::fincat::{check_arrow_class, check_category, projection_class, ArrowClass, Functor};
use excomp::io::{
    build_cell, completion_dump, read_json, table_map, ActionFile, DoctrineFile, Loaded, MapDecl, PairFile, PerFile,
    QueryFile, SCHEMA_VERSION,
};
use excomp::syntactic::{
    canonical_model, check_cq_pairs, compare_with_completion, cq_contains, describe_hom, parse_formula, sample_pairs,
    FragmentBounds, SampleBounds, Signature,
};
use excomp::Result;

use crate::report::Recorder;

/// Default bound on candidate relations in the exact-completion checks.
pub const EXACT_BUDGET: usize = 10_000;

pub struct Common {
    pub seed: u64,
    pub budget: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Common {
    fn budget(&self) -> usize {
        self.budget.unwrap_or(DEFAULT_BUDGET)
    }
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v).expect("serialisable dump");
    std::fs::write(path, text + "\n").map_err(|e| input(format!("cannot write {}: {e}", path.display())))
}

fn category_checks(rec: &mut Recorder, l: &Loaded) -> Result<()> {
    let c = l.doctrine.base();
    rec.check("category", check_category(c))?;
    let cov = rec.check("arrow-class", check_arrow_class(c, &l.lambda))?;
    rec.put("objects", json!(c.num_objects()));
    rec.put("arrows", json!(c.num_arrows()));
    rec.put("uncovered_pullbacks", json!(cov.missing.len()));
    Ok(())
}

pub fn check(rec: &mut Recorder, file: &Path, primary: bool, existential: bool, elementary: bool) -> Result<()> {
    let l = DoctrineFile::load(file)?;
    let all = !(primary || existential || elementary);
    category_checks(rec, &l)?;
    if all || primary {
        rec.check("primary", check_primary(&l.doctrine))?;
    }
    if all || existential {
        match &l.existential {
            Some(e) => rec.check("existential", check_existential(&l.doctrine, e))?,
            None if existential => return rec.check("existential", Err(input("the descriptor declares no quantifiers"))),
            None => {}
        }
    }
    if all || elementary {
        match &l.elementary {
            Some(el) => {
                let cov = rec.check("elementary", check_elementary(&l.doctrine, el))?;
                rec.put("elementary_checked", json!(cov.checked));
                rec.put("elementary_skipped", json!(cov.skipped));
            }
            None if elementary => return rec.check("elementary", Err(input("the descriptor declares no diagonals"))),
            None => {}
        }
    }
    Ok(())
}

fn load_lambda(l: &Loaded, choice: Option<&str>) -> Result<ArrowClass> {
    let c = l.doctrine.base();
    match choice {
        None => Ok(l.lambda.clone()),
        Some("projections") => Ok(projection_class(c)),
        Some("identities") => Ok(ArrowClass::identities(c)),
        Some(path) => {
            let names: Vec<String> = read_json(Path::new(path))?;
            let gens = names
                .iter()
                .map(|n| c.arrow_by_name(n).ok_or_else(|| input(format!("unknown arrow {n}"))))
                .collect::<Result<Vec<_>>>()?;
            Ok(ArrowClass::closed(c, gens))
        }
    }
}

fn class_counts(pe: &Completed) -> Value {
    let c = pe.base();
    c.objects().map(|a| (c.object_name(a).to_string(), json!(pe.fibers[a].len()))).collect::<serde_json::Map<_, _>>().into()
}

pub fn complete_cmd(rec: &mut Recorder, common: &Common, file: &Path, lambda: Option<&str>, twice: bool, partial: bool) -> Result<()> {
    let l = DoctrineFile::load(file)?;
    let lambda = load_lambda(&l, lambda)?;
    rec.check("arrow-class", check_arrow_class(l.doctrine.base(), &lambda))?;
    let opts = CompleteOptions { allow_partial: partial, budget: common.budget() };
    let pe = rec.check("complete", complete(&l.doctrine, &lambda, opts))?;
    rec.put("classes", class_counts(&pe));
    rec.check("quotient", check_quotient(&pe))?;
    if pe.missing.is_empty() {
        rec.check("completion-primary-existential", check_completed(&pe))?;
    } else {
        rec.put("missing_reindex", json!(pe.missing.iter().map(|&f| pe.base().arrow_name(f)).collect::<Vec<_>>()));
    }
    if let Some(out) = &common.out {
        write_json(out, &completion_dump(&pe))?;
    }
    if twice {
        let t = rec.check("complete-twice", Tower::build(&l.doctrine, &lambda, 2, common.budget()))?;
        rec.put("classes_twice", class_counts(&t.levels[1]));
    }
    Ok(())
}

fn record_suite(rec: &mut Recorder, checks: Vec<(&'static str, Result<()>)>) -> Result<()> {
    for (name, c) in checks {
        rec.check(name, c)?;
    }
    Ok(())
}

fn need_existential(l: &Loaded) -> Result<&excomp::doctrine::Existential> {
    l.existential.as_ref().ok_or_else(|| input("the descriptor declares no quantifiers"))
}

/// An action `P^e → P` from its description.
fn build_action(decl: &MapDecl, l: &Loaded, pe: &Completed) -> Result<Morphism> {
    match decl {
        MapDecl::Named(n) if n == "counit" => counit(pe, need_existential(l)?),
        MapDecl::Named(n) if n == "constant-top" => {
            let tops: Vec<_> = l.doctrine.fibers().iter().map(|f| f.top()).collect();
            Ok(Morphism { functor: Functor::Identity, b: FiberMap::Computed(std::sync::Arc::new(move |a, _| tops[a])) })
        }
        MapDecl::Named(n) => Err(input(format!("unknown action {n}"))),
        MapDecl::Table(rows) => {
            let d = pe.doctrine()?;
            let t = table_map(rows, &d, &l.doctrine, &|a, x| Ok(pe.fibers[a].lattice.by_name(x)))?;
            Ok(Morphism { functor: Functor::Identity, b: FiberMap::Table(t) })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Monad,
    Adjunction,
    Algebra,
    Kz,
    Elementary,
}

pub fn laws(rec: &mut Recorder, common: &Common, file: &Path, suite: Suite) -> Result<()> {
    let dir = file.parent().unwrap_or(Path::new(".")).to_path_buf();
    let raw: Value = read_json(file)?;
    let budget = common.budget();
    match suite {
        Suite::Monad => {
            let l = DoctrineFile::load(file)?;
            record_suite(rec, check_monad(&l.doctrine, &l.lambda, budget)?)
        }
        Suite::Adjunction => {
            let l = DoctrineFile::load(file)?;
            record_suite(rec, check_triangles(&l.doctrine, l.existential.as_ref(), &l.lambda, budget)?)
        }
        Suite::Elementary => {
            let l = DoctrineFile::load(file)?;
            let pe = complete(&l.doctrine, &l.lambda, CompleteOptions { allow_partial: false, budget })?;
            let ec = rec.check("elementary-completion", elementary_completion(&pe))?;
            let r = rec.check("elementary-completion-laws", check_elementary_completion(&pe, &ec))?;
            rec.put("adjunctions", json!(r.adjunctions));
            rec.put("identity_instances", json!(r.identity_instances));
            rec.put("elementary_checked", json!(r.coverage.checked));
            rec.put("elementary_skipped", json!(r.coverage.skipped));
            Ok(())
        }
        Suite::Algebra => {
            let (l, decl) = if raw.get("action").is_some() {
                let a: ActionFile = serde_json::from_value(raw).map_err(|e| input(format!("{}: {e}", file.display())))?;
                (DoctrineFile::load(&dir.join(&a.doctrine))?, a.action)
            } else {
                (DoctrineFile::load(file)?, MapDecl::Named("counit".into()))
            };
            let t = Tower::build(&l.doctrine, &l.lambda, 2, budget)?;
            let action = build_action(&decl, &l, &t.levels[0])?;
            rec.check("algebra", check_algebra(&t, &action))?;
            let e = rec.check("algebra-existential", existential_from_algebra(&t.levels[0], &action))?;
            rec.check("algebra-existential-laws", check_existential(&l.doctrine, &e))?;
            rec.check("algebra-action-is-counit", check_action_is_counit(&t.levels[0], &action, &e))?;
            if let Some(orig) = &l.existential {
                let c = l.doctrine.base();
                for &f in orig.lambda.members() {
                    for x in l.doctrine.fiber(c.src(f)).elements() {
                        if e.apply(c, f, x) != orig.apply(c, f, x) {
                            return rec.check("algebra-round-trip", Err(excomp::error::violation(
                                "algebra-round-trip",
                                format!("quantifier along {} differs at {}", c.arrow_name(f), l.doctrine.name(c.src(f), x)),
                                json!({ "arrow": c.arrow_name(f), "element": l.doctrine.name(c.src(f), x) }),
                            )));
                        }
                    }
                }
                rec.check::<()>("algebra-round-trip", Ok(()))?;
            }
            Ok(())
        }
        Suite::Kz => {
            let pairs: Vec<(Loaded, Loaded, Vec<MapDecl>)> = if raw.get("pairs").is_some() {
                let pf: PairFile = serde_json::from_value(raw).map_err(|e| input(format!("{}: {e}", file.display())))?;
                pf.pairs
                    .into_iter()
                    .map(|p| Ok((DoctrineFile::load(&dir.join(&p.source))?, DoctrineFile::load(&dir.join(&p.target))?, p.cells)))
                    .collect::<Result<_>>()?
            } else {
                let l = DoctrineFile::load(file)?;
                vec![(l.clone(), l, vec![MapDecl::Named("identity".into())])]
            };
            let mut log = Vec::new();
            for (i, (src, tgt, cells)) in pairs.iter().enumerate() {
                let ts = Tower::build(&src.doctrine, &src.lambda, 2, budget)?;
                let tt = Tower::build(&tgt.doctrine, &tgt.lambda, 2, budget)?;
                rec.check(&format!("pair-{i}-kz-comparison-source"), check_kz_comparison(&ts))?;
                rec.check(&format!("pair-{i}-kz-comparison-target"), check_kz_comparison(&tt))?;
                let za = counit(&ts.levels[0], need_existential(src)?)?;
                let zb = counit(&tt.levels[0], need_existential(tgt)?)?;
                let (pa, ra) = (Algebra { tower: &ts, action: &za }, Algebra { tower: &tt, action: &zb });
                for (j, cell) in cells.iter().enumerate() {
                    let m = build_cell(cell, &src.doctrine, &tgt.doctrine)?;
                    let r = rec.check(&format!("pair-{i}-cell-{j}-lax-unique"), check_lax_idempotent_instance(&pa, &ra, &m, budget))?;
                    log.push(json!({
                        "pair": i, "cell": j, "natural": r.natural, "two_cells": r.two_cells,
                        "coherent": r.coherent, "rejected_by_unit": r.rejected_by_unit,
                    }));
                }
            }
            rec.put("uniqueness", Value::Array(log));
            Ok(())
        }
    }
}

/// `C,B,A`: context length, bound variables, atoms.
fn parse_bounds(sig: &Signature, s: &str) -> Result<FragmentBounds> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|_| input(format!("bad bounds {s}; expected CONTEXT,BOUND,ATOMS"))))
        .collect::<Result<_>>()?;
    let [max_context, max_bound, max_atoms] = parts[..] else {
        return Err(input(format!("bad bounds {s}; expected CONTEXT,BOUND,ATOMS")));
    };
    Ok(FragmentBounds { signature: sig.clone(), max_context, max_bound, max_atoms })
}

pub struct CqArgs<'a> {
    pub signature: &'a Path,
    pub query: Option<&'a Path>,
    pub compare: Option<&'a str>,
    pub sample: Option<usize>,
    pub max_model: usize,
}

pub fn cq(rec: &mut Recorder, common: &Common, a: CqArgs<'_>) -> Result<()> {
    let sig: Signature = read_json(a.signature)?;
    if a.query.is_none() && a.compare.is_none() && a.sample.is_none() {
        return Err(input("give a query file, --compare-completion or --sample"));
    }
    if let Some(q) = a.query {
        let q: QueryFile = read_json(q)?;
        let lhs = rec.check("parse-lhs", parse_formula(&sig, &q.lhs, &q.context))?;
        let rhs = rec.check("parse-rhs", parse_formula(&sig, &q.rhs, &q.context))?;
        let hom = rec.check("containment", cq_contains(&lhs, &rhs))?;
        rec.put("lhs", json!(lhs.to_string()));
        rec.put("rhs", json!(rhs.to_string()));
        match hom {
            Some(h) => {
                rec.put("verdict", json!("contained"));
                rec.put("witness", json!(describe_hom(&lhs, &rhs, &h)));
            }
            None => {
                let (model, env) = canonical_model(&sig, &lhs);
                rec.put("verdict", json!("not contained"));
                rec.put("countermodel", json!({ "model": model, "environment": env, "description": model.to_string() }));
            }
        }
    }
    if let Some(b) = a.compare {
        let bounds = parse_bounds(&sig, b)?;
        let r = rec.check("syntactic-isomorphism", compare_with_completion(&bounds, common.budget.unwrap_or(1_000_000)))?;
        rec.put("comparison", json!(r));
    }
    if let Some(n) = a.sample {
        let bounds = SampleBounds { max_context: 2, max_vars: 4, max_atoms: 3 };
        let pairs = sample_pairs(&sig, common.seed, n, &bounds);
        let r = rec.check("cq-sampled", check_cq_pairs(&sig, &pairs, a.max_model))?;
        rec.put("sampled", json!(r));
    }
    Ok(())
}

pub fn exact(rec: &mut Recorder, common: &Common, doctrine: &Path, candidates: &Path, verify: bool) -> Result<()> {
    let budget = common.budget.unwrap_or(EXACT_BUDGET);
    if budget == 0 {
        return Err(resource("a budget of 0 admits no candidates"));
    }
    let l = DoctrineFile::load(doctrine)?;
    let el = l.elementary.as_ref().ok_or_else(|| input("the exact completion needs diagonals"))?;
    let x = Exact::new(&l.doctrine, el, &l.lambda);
    let per: PerFile = read_json(candidates)?;
    let set = per.resolve(&x)?;
    let c = l.doctrine.base();
    let mut objs = Vec::new();
    for o in &set.objects {
        let w = rec.check(&format!("object {}", o.name), x.check_object(o))?;
        objs.push(json!({ "object": x.object_name(o), "symmetry": c.arrow_name(w.f), "transitivity": c.arrow_name(w.g) }));
    }
    rec.put("objects", Value::Array(objs));
    let mut ms = Vec::new();
    for m in &set.morphisms {
        let name = x.morphism_name(m);
        let w = rec.check(&format!("morphism {name}"), x.check_morphism(m))?;
        let (_, in_pe) = rec.check(&format!("readings {name}"), x.cross_check(m))?;
        ms.push(json!({
            "morphism": name,
            "witnesses": {
                "f1": c.arrow_name(w.f1), "f2": c.arrow_name(w.f2), "h": c.arrow_name(w.h), "k": c.arrow_name(w.k),
                "l": c.arrow_name(w.l), "g1": c.arrow_name(w.g1), "g2": c.arrow_name(w.g2),
            },
            "functional_in_completion": in_pe.is_none(),
        }));
    }
    rec.put("morphisms", Value::Array(ms));
    if verify {
        let r = rec.check("category-laws", verify_category(&x, &set.objects, &set.parameters, budget, &compose))?;
        let dump = json!({
            "schema_version": SCHEMA_VERSION,
            "objects": r.objects,
            "parameters": set.parameters.iter().map(|&p| c.object_name(p)).collect::<Vec<_>>(),
            "homs": r.homs,
            "classes": r.classes,
            "identities": r.identities,
            "composition": r.composition,
            "associativity_triples": r.triples,
        });
        if let Some(out) = &common.out {
            write_json(out, &dump)?;
        }
        rec.put("category", dump);
    }
    Ok(())
}
