//! JSON descriptors for categories, doctrines, signatures, queries, PER
//! candidates, algebra actions and 1-cell pairs, and the dumps written by
//! the command line.
//!
//! Everything in a file is referred to by name. A doctrine file either
//! spells out its category and fibers or names a generated fixture and
//! overrides parts of it, which is how the mutants are written.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::completion::Completed;
use crate::doctrine::{diagonal, find_left_adjoint, Doctrine, Elementary, Existential, Exists, FiberMap, Morphism, Reindex};
use crate::error::{input, Result};
use crate::exactcomp::{Exact, PerMorphism, PerObject};
use crate::fincat::{projection_class, Arr, ArrowClass, ArrowInfo, Category, Functor, Literals, Obj, Product, TableSpec};
use crate::fixtures;
use crate::lattice::{Elem, Lattice};
use crate::syntactic::Signature;

/// Version stamped on every report and dump.
pub const SCHEMA_VERSION: u32 = 1;

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn relative(base: &Path, p: &str) -> PathBuf {
    let path = Path::new(p);
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrowDecl {
    pub name: String,
    pub src: String,
    pub tgt: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductDecl {
    pub left: String,
    pub right: String,
    pub object: String,
    pub pr1: String,
    pub pr2: String,
}

/// A category: an explicit table, the powers of a two-element set, or a chain.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CategoryFile {
    /// Identity arrows are given per object; compositions with identities may
    /// be omitted.
    Table {
        objects: Vec<String>,
        arrows: Vec<ArrowDecl>,
        identities: BTreeMap<String, String>,
        #[serde(default)]
        compose: Vec<[String; 3]>,
        terminal: String,
        #[serde(default)]
        products: Vec<ProductDecl>,
    },
    Powers {
        n_max: usize,
        #[serde(default = "yes")]
        constants: bool,
        #[serde(default = "yes")]
        negations: bool,
    },
    Chain {
        size: usize,
    },
}

fn yes() -> bool {
    true
}

impl CategoryFile {
    pub fn build(&self) -> Result<Category> {
        match self {
            CategoryFile::Powers { n_max, constants, negations } => {
                Category::powers(*n_max, Literals { constants: *constants, negations: *negations }, fixtures::power_names(*n_max))
            }
            CategoryFile::Chain { size } => {
                if *size == 0 {
                    return Err(input("a chain needs at least one object"));
                }
                Ok(fixtures::chain_category(*size))
            }
            CategoryFile::Table { objects, arrows, identities, compose, terminal, products } => {
                let obj = |n: &str| {
                    objects.iter().position(|o| o == n).ok_or_else(|| input(format!("unknown object {n}")))
                };
                let arr = |n: &str| {
                    arrows.iter().position(|a| a.name == n).ok_or_else(|| input(format!("unknown arrow {n}")))
                };
                let infos = arrows
                    .iter()
                    .map(|a| Ok(ArrowInfo { name: a.name.clone(), src: obj(&a.src)?, tgt: obj(&a.tgt)? }))
                    .collect::<Result<Vec<_>>>()?;
                let ids = objects
                    .iter()
                    .map(|o| arr(identities.get(o).ok_or_else(|| input(format!("no identity for {o}")))?))
                    .collect::<Result<Vec<_>>>()?;
                let mut table = Vec::new();
                for [g, f, gf] in compose {
                    table.push((arr(g)?, arr(f)?, arr(gf)?));
                }
                let declared: std::collections::HashSet<(Arr, Arr)> = table.iter().map(|&(g, f, _)| (g, f)).collect();
                for (i, a) in infos.iter().enumerate() {
                    for (g, f) in [(ids[a.tgt], i), (i, ids[a.src])] {
                        if !declared.contains(&(g, f)) {
                            table.push((g, f, i));
                        }
                    }
                }
                table.sort_unstable();
                table.dedup();
                let products = products
                    .iter()
                    .map(|p| {
                        Ok(Product { left: obj(&p.left)?, right: obj(&p.right)?, object: obj(&p.object)?, pr1: arr(&p.pr1)?, pr2: arr(&p.pr2)? })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Category::from_table(TableSpec {
                    objects: objects.clone(),
                    arrows: infos,
                    identities: ids,
                    compose: table,
                    terminal: obj(terminal)?,
                    products,
                })
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CategoryRef {
    Path(String),
    Inline(CategoryFile),
}

/// A finite meet-semilattice: a chain, a powerset, or an explicit meet table.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum LatticeDecl {
    Chain(usize),
    Powerset(Vec<String>),
    Table { names: Vec<String>, top: String, meet: Vec<Vec<String>> },
}

impl LatticeDecl {
    pub fn build(&self) -> Result<Lattice> {
        match self {
            LatticeDecl::Chain(n) if *n > 0 => Ok(Lattice::chain(*n)),
            LatticeDecl::Chain(_) => Err(input("a fiber must contain a top element")),
            LatticeDecl::Powerset(labels) if labels.len() < 32 => Ok(Lattice::powerset(labels.clone())),
            LatticeDecl::Powerset(_) => Err(input("powerset fiber has too many points")),
            LatticeDecl::Table { names, top, meet } => {
                let idx = |n: &str| names.iter().position(|x| x == n).ok_or_else(|| input(format!("unknown element {n}")));
                if meet.len() != names.len() || meet.iter().any(|r| r.len() != names.len()) {
                    return Err(input("meet table must be square over the elements"));
                }
                let flat = meet.iter().flatten().map(|n| idx(n)).collect::<Result<Vec<_>>>()?;
                Lattice::table(names.clone(), idx(top)?, flat)
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReindexDecl {
    /// `identity` or `preimage`.
    Named(String),
    /// Per arrow, image of each element of the target fiber. Identity arrows
    /// may be omitted.
    Table(BTreeMap<String, BTreeMap<String, String>>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaDecl {
    /// `projections` or `identities`.
    Named(String),
    /// Generators, closed under composition and the chosen pullbacks.
    Arrows(Vec<String>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExistsDecl {
    /// `image`, `left-adjoints`, `constant-top` or `none`.
    Named(String),
    Table(BTreeMap<String, BTreeMap<String, String>>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaDecl {
    /// `derived` or `none`.
    Named(String),
    /// Per object; objects left out keep their default.
    Table(BTreeMap<String, String>),
}

/// A doctrine descriptor.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoctrineFile {
    /// `f0`, `f1`, `f2`, `powerset:N` or `idempotent`.
    #[serde(default)]
    pub generated: Option<String>,
    #[serde(default)]
    pub category: Option<CategoryRef>,
    /// Fiber for objects not listed in `fibers`.
    #[serde(default)]
    pub fiber: Option<LatticeDecl>,
    #[serde(default)]
    pub fibers: BTreeMap<String, LatticeDecl>,
    #[serde(default)]
    pub reindex: Option<ReindexDecl>,
    /// Arrows along which reindexing is replaced by the identity map.
    #[serde(default)]
    pub reindex_identity: Vec<String>,
    #[serde(default)]
    pub lambda: Option<LambdaDecl>,
    #[serde(default)]
    pub exists: Option<ExistsDecl>,
    #[serde(default)]
    pub delta: Option<DeltaDecl>,
}

/// A loaded doctrine with whatever structure the descriptor provides.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub doctrine: Doctrine,
    pub lambda: ArrowClass,
    pub existential: Option<Existential>,
    pub elementary: Option<Elementary>,
}

fn element(p: &Doctrine, a: Obj, name: &str) -> Result<Elem> {
    p.fiber(a)
        .by_name(name)
        .ok_or_else(|| input(format!("{name} is not an element of the fiber over {}", p.base().object_name(a))))
}

fn object(c: &Category, name: &str) -> Result<Obj> {
    c.object_by_name(name).ok_or_else(|| input(format!("unknown object {name}")))
}

fn arrow(c: &Category, name: &str) -> Result<Arr> {
    c.arrow_by_name(name).ok_or_else(|| input(format!("unknown arrow {name}")))
}

/// The built-in fixture with the given name.
pub fn generated(name: &str) -> Result<fixtures::Fixture> {
    match name {
        "f0" => Ok(fixtures::f0()),
        "f1" => Ok(fixtures::f1()),
        "f2" => Ok(fixtures::f2()),
        "idempotent" => Ok(fixtures::idempotent()),
        other => match other.strip_prefix("powerset:").map(str::parse::<usize>) {
            Some(Ok(n)) if (1..=5).contains(&n) => Ok(fixtures::powerset(n)),
            _ => Err(input(format!("unknown generated fixture {other}"))),
        },
    }
}

/// Derived δ: the left adjoint along the diagonal applied to ⊤, where the
/// square and the adjoint exist.
pub fn derived_delta(p: &Doctrine) -> Elementary {
    let c = p.base();
    let delta = c
        .objects()
        .map(|a| {
            let d = diagonal(c, a).ok()?;
            let l = find_left_adjoint(p, d)?;
            Some(l[p.fiber(a).top()])
        })
        .collect();
    Elementary { delta }
}

impl DoctrineFile {
    pub fn load(path: &Path) -> Result<Loaded> {
        let file: DoctrineFile = read_json(path)?;
        file.build(path.parent().unwrap_or(Path::new(".")))
    }

    pub fn build(&self, dir: &Path) -> Result<Loaded> {
        let (mut p, mut ex, mut el, mut lambda) = match &self.generated {
            Some(name) => {
                if self.category.is_some() || self.fiber.is_some() || !self.fibers.is_empty() || self.reindex.is_some() {
                    return Err(input("a generated doctrine cannot also declare its category, fibers or reindexing"));
                }
                let (p, e, el) = generated(name)?;
                let lambda = e.lambda.clone();
                (p, Some(e), Some(el), lambda)
            }
            None => {
                let p = self.explicit(dir)?;
                let lambda = projection_class(p.base());
                (p, None, None, lambda)
            }
        };
        if !self.reindex_identity.is_empty() {
            let c = p.base();
            let mut swapped = Vec::new();
            for n in &self.reindex_identity {
                let f = arrow(c, n)?;
                if p.fiber(c.src(f)) != p.fiber(c.tgt(f)) {
                    return Err(input(format!("identity reindexing along {n} needs equal fibers")));
                }
                swapped.push(f);
            }
            let inner = p.clone();
            p = Doctrine::new(
                p.base_arc(),
                p.fibers().to_vec(),
                Reindex::Computed(Arc::new(move |f, b| if swapped.contains(&f) { b } else { inner.reindex(f, b) })),
            )?;
        }
        if let Some(l) = &self.lambda {
            let c = p.base();
            lambda = match l {
                LambdaDecl::Named(n) if n == "projections" => projection_class(c),
                LambdaDecl::Named(n) if n == "identities" => ArrowClass::identities(c),
                LambdaDecl::Named(n) => return Err(input(format!("unknown arrow class {n}"))),
                LambdaDecl::Arrows(names) => {
                    let gens = names.iter().map(|n| arrow(c, n)).collect::<Result<Vec<_>>>()?;
                    ArrowClass::closed(c, gens)
                }
            };
            if let Some(e) = &mut ex {
                e.lambda = lambda.clone();
            }
        }
        match &self.exists {
            None => {}
            Some(ExistsDecl::Named(n)) => {
                let c = p.base();
                ex = match n.as_str() {
                    "none" => None,
                    "image" => {
                        if c.is_table() {
                            return Err(input("direct images need a concrete base"));
                        }
                        Some(Existential { lambda: lambda.clone(), exists: Exists::Image })
                    }
                    "left-adjoints" => {
                        let mut t = HashMap::new();
                        for &f in lambda.members() {
                            let row = find_left_adjoint(&p, f)
                                .ok_or_else(|| input(format!("no left adjoint along {}", c.arrow_name(f))))?;
                            t.insert(f, row);
                        }
                        Some(Existential { lambda: lambda.clone(), exists: Exists::Table(t) })
                    }
                    "constant-top" => {
                        let (base, fibers) = (p.base_arc(), p.fibers().to_vec());
                        Some(Existential {
                            lambda: lambda.clone(),
                            exists: Exists::Computed(Arc::new(move |f, _| fibers[base.tgt(f)].top())),
                        })
                    }
                    other => return Err(input(format!("unknown quantifier rule {other}"))),
                };
            }
            Some(ExistsDecl::Table(rows)) => {
                let c = p.base();
                let mut t = HashMap::new();
                for (name, map) in rows {
                    let f = arrow(c, name)?;
                    let (s, d) = (c.src(f), c.tgt(f));
                    let mut row = vec![None; p.fiber(s).size()];
                    for (x, y) in map {
                        row[element(&p, s, x)?] = Some(element(&p, d, y)?);
                    }
                    let row = row
                        .into_iter()
                        .collect::<Option<Vec<_>>>()
                        .ok_or_else(|| input(format!("quantifier along {name} is not total")))?;
                    t.insert(f, row);
                }
                ex = Some(Existential { lambda: lambda.clone(), exists: Exists::Table(t) });
            }
        }
        match &self.delta {
            None => {
                if el.is_none() {
                    el = Some(derived_delta(&p));
                }
            }
            Some(DeltaDecl::Named(n)) if n == "derived" => el = Some(derived_delta(&p)),
            Some(DeltaDecl::Named(n)) if n == "none" => el = None,
            Some(DeltaDecl::Named(n)) => return Err(input(format!("unknown diagonal rule {n}"))),
            Some(DeltaDecl::Table(map)) => {
                let mut e = el.take().unwrap_or_else(|| derived_delta(&p));
                let c = p.base();
                for (o, x) in map {
                    let a = object(c, o)?;
                    let aa = c.product(a, a)?.object;
                    e.delta[a] = Some(element(&p, aa, x)?);
                }
                el = Some(e);
            }
        }
        Ok(Loaded { doctrine: p, lambda, existential: ex, elementary: el })
    }

    fn explicit(&self, dir: &Path) -> Result<Doctrine> {
        let cat = match &self.category {
            None => return Err(input("a doctrine needs a category or a generated fixture")),
            Some(CategoryRef::Inline(c)) => c.build()?,
            Some(CategoryRef::Path(p)) => read_json::<CategoryFile>(&relative(dir, p))?.build()?,
        };
        let base = Arc::new(cat);
        let c = &*base;
        for name in self.fibers.keys() {
            object(c, name)?;
        }
        let fibers = c
            .objects()
            .map(|a| {
                let decl = self.fibers.get(c.object_name(a)).or(self.fiber.as_ref());
                decl.ok_or_else(|| input(format!("no fiber for {}", c.object_name(a))))?.build()
            })
            .collect::<Result<Vec<_>>>()?;
        let reindex = match &self.reindex {
            None => return Err(input("a doctrine needs a reindexing rule")),
            Some(ReindexDecl::Named(n)) if n == "preimage" => Reindex::Preimage,
            Some(ReindexDecl::Named(n)) if n == "identity" => {
                let mut t = Vec::new();
                for f in 0..c.num_arrows() {
                    if fibers[c.src(f)] != fibers[c.tgt(f)] {
                        return Err(input(format!("identity reindexing along {} needs equal fibers", c.arrow_name(f))));
                    }
                    t.push(fibers[c.tgt(f)].elements().collect());
                }
                Reindex::Table(t)
            }
            Some(ReindexDecl::Named(n)) => return Err(input(format!("unknown reindexing rule {n}"))),
            Some(ReindexDecl::Table(rows)) => {
                let mut t: Vec<Option<Vec<Elem>>> = vec![None; c.num_arrows()];
                for (name, map) in rows {
                    let f = arrow(c, name)?;
                    let (s, d) = (c.src(f), c.tgt(f));
                    let mut row = vec![None; fibers[d].size()];
                    for (y, x) in map {
                        let yi = fibers[d].by_name(y).ok_or_else(|| input(format!("unknown element {y}")))?;
                        let xi = fibers[s].by_name(x).ok_or_else(|| input(format!("unknown element {x}")))?;
                        row[yi] = Some(xi);
                    }
                    t[f] = Some(row.into_iter().collect::<Option<Vec<_>>>().ok_or_else(|| input(format!("reindexing along {name} is not total")))?);
                }
                for a in c.objects() {
                    let i = c.id(a);
                    if t[i].is_none() {
                        t[i] = Some(fibers[a].elements().collect());
                    }
                }
                Reindex::Table(
                    t.into_iter()
                        .enumerate()
                        .map(|(f, r)| r.ok_or_else(|| input(format!("no reindexing along {}", c.arrow_name(f)))))
                        .collect::<Result<_>>()?,
                )
            }
        };
        Doctrine::new(base.clone(), fibers, reindex)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryFile {
    pub context: Vec<String>,
    pub lhs: String,
    pub rhs: String,
}

pub fn load_signature(path: &Path) -> Result<Signature> {
    read_json(path)
}

/// A fiber map: `counit`, `constant-top`, `identity`, or explicit images per
/// object keyed by element names.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MapDecl {
    Named(String),
    Table(BTreeMap<String, BTreeMap<String, String>>),
}

/// An algebra structure for a doctrine: an action from its completion.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionFile {
    pub doctrine: String,
    pub action: MapDecl,
}

/// 1-cells between two algebras, both given by doctrine files over the same
/// base; the base functor is the identity.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairDecl {
    pub source: String,
    pub target: String,
    pub cells: Vec<MapDecl>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairFile {
    pub pairs: Vec<PairDecl>,
}

/// A fiber map between two doctrines on one base. `counit` is handled by
/// the caller, since it needs the completion.
pub fn build_cell(decl: &MapDecl, src: &Doctrine, tgt: &Doctrine) -> Result<Morphism> {
    let c = src.base();
    if c.num_objects() != tgt.base().num_objects() {
        return Err(input("the two doctrines live on different bases"));
    }
    let b = match decl {
        MapDecl::Named(n) if n == "identity" => {
            if src.fibers() != tgt.fibers() {
                return Err(input("identity fiber maps need equal fibers"));
            }
            FiberMap::Identity
        }
        MapDecl::Named(n) if n == "constant-top" => {
            let tops: Vec<Elem> = tgt.fibers().iter().map(|l| l.top()).collect();
            FiberMap::Computed(Arc::new(move |a, _| tops[a]))
        }
        MapDecl::Named(n) => return Err(input(format!("unknown 1-cell {n}"))),
        MapDecl::Table(rows) => FiberMap::Table(table_map(rows, src, tgt, &|a, x| Ok(src.fiber(a).by_name(x)))?),
    };
    Ok(Morphism { functor: Functor::Identity, b })
}

/// Per-object tables of a fiber map, from element names.
pub fn table_map(
    rows: &BTreeMap<String, BTreeMap<String, String>>,
    src: &Doctrine,
    tgt: &Doctrine,
    src_elem: &dyn Fn(Obj, &str) -> Result<Option<Elem>>,
) -> Result<Vec<Vec<Elem>>> {
    let c = src.base();
    let mut out = Vec::new();
    for a in c.objects() {
        let name = c.object_name(a);
        let row = rows.get(name).ok_or_else(|| input(format!("no images given over {name}")))?;
        let size = src.fiber(a).size();
        let mut v = vec![None; size];
        for (x, y) in row {
            let xi = src_elem(a, x)?.ok_or_else(|| input(format!("{x} is not an element over {name}")))?;
            v[xi] = Some(element(tgt, a, y)?);
        }
        out.push(v.into_iter().collect::<Option<Vec<_>>>().ok_or_else(|| input(format!("map over {name} is not total")))?);
    }
    Ok(out)
}

/// A candidate object: `relation` is `delta`, `top` or an element name of
/// `P((A×A)×C)`; the parameter defaults to the terminal object.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerObjectDecl {
    pub name: String,
    pub carrier: String,
    #[serde(default)]
    pub parameter: Option<String>,
    pub relation: String,
}

/// A candidate morphism: `relation` is `identity`, `graph:<arrow>` or an
/// element name of `P((A×B)×E)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerMorphismDecl {
    pub src: String,
    pub tgt: String,
    #[serde(default)]
    pub parameter: Option<String>,
    pub relation: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerFile {
    pub objects: Vec<PerObjectDecl>,
    #[serde(default)]
    pub morphisms: Vec<PerMorphismDecl>,
    /// Parameter objects for enumeration; defaults to the terminal object.
    #[serde(default)]
    pub parameters: Vec<String>,
}

/// Resolved candidates.
pub struct PerSet {
    pub objects: Vec<PerObject>,
    pub morphisms: Vec<PerMorphism>,
    pub parameters: Vec<Obj>,
}

impl PerFile {
    pub fn resolve(&self, x: &Exact<'_>) -> Result<PerSet> {
        let p = x.doctrine();
        let c = p.base();
        let t = c.terminal();
        let mut objects: Vec<PerObject> = Vec::new();
        for o in &self.objects {
            if objects.iter().any(|q| q.name == o.name) {
                return Err(input(format!("object {} is declared twice", o.name)));
            }
            let a = object(c, &o.carrier)?;
            let pc = o.parameter.as_deref().map_or(Ok(t), |n| object(c, n))?;
            let s = c.product_of(&[a, a, pc])?;
            let rho = match o.relation.as_str() {
                "delta" => {
                    if pc != t {
                        return Err(input("the diagonal relation takes the terminal parameter"));
                    }
                    x.diagonal_object(&o.name, a)?.rho
                }
                "top" => p.fiber(s).top(),
                name => element(p, s, name)?,
            };
            objects.push(PerObject { name: o.name.clone(), a, c: pc, rho });
        }
        let find = |n: &str| objects.iter().find(|o| o.name == n).cloned().ok_or_else(|| input(format!("unknown candidate object {n}")));
        let mut morphisms = Vec::new();
        for m in &self.morphisms {
            let (src, tgt) = (find(&m.src)?, find(&m.tgt)?);
            let morphism = if m.relation == "identity" {
                if src != tgt || m.parameter.is_some() {
                    return Err(input("identity needs equal endpoints and no parameter"));
                }
                x.identity(&src)
            } else if let Some(u) = m.relation.strip_prefix("graph:") {
                if m.parameter.is_some() {
                    return Err(input("graphs take the terminal parameter"));
                }
                x.graph(arrow(c, u)?, &src, &tgt)?
            } else {
                let e = m.parameter.as_deref().map_or(Ok(t), |n| object(c, n))?;
                let s = c.product_of(&[src.a, tgt.a, e])?;
                PerMorphism { phi: element(p, s, &m.relation)?, src, tgt, e }
            };
            morphisms.push(morphism);
        }
        let parameters = if self.parameters.is_empty() {
            vec![t]
        } else {
            self.parameters.iter().map(|n| object(c, n)).collect::<Result<_>>()?
        };
        Ok(PerSet { objects, morphisms, parameters })
    }
}

/// Fibers, order, meets, reindexing and quantifiers of a completion, by name.
pub fn completion_dump(pe: &Completed) -> Value {
    let c = pe.base();
    let fibers: Vec<Value> = c
        .objects()
        .map(|a| {
            let f = &pe.fibers[a];
            let n = f.len();
            let names: Vec<String> = (0..n).map(|k| pe.class_name(a, k)).collect();
            let order: Vec<Vec<u8>> = (0..n).map(|i| (0..n).map(|j| u8::from(f.leq(i, j))).collect()).collect();
            let meet: Vec<Vec<Elem>> = (0..n).map(|i| (0..n).map(|j| f.lattice.meet(i, j)).collect()).collect();
            json!({ "object": c.object_name(a), "classes": names, "raw_pairs": f.raws.len(), "order": order, "meet": meet })
        })
        .collect();
    let reindex: BTreeMap<String, Option<&Vec<Elem>>> =
        (0..c.num_arrows()).map(|f| (c.arrow_name(f), pe.reindex[f].as_ref())).collect();
    let exists: BTreeMap<String, &Vec<Elem>> = pe.exists.iter().map(|(&f, row)| (c.arrow_name(f), row)).collect();
    let missing: Vec<String> = pe.missing.iter().map(|&f| c.arrow_name(f)).collect();
    json!({
        "schema_version": SCHEMA_VERSION,
        "fibers": fibers,
        "reindex": reindex,
        "exists": exists,
        "missing_reindex": missing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doctrine::{check_existential, check_primary};

    fn parse(text: &str) -> Result<Loaded> {
        let f: DoctrineFile = serde_json::from_str(text).map_err(|e| input(e.to_string()))?;
        f.build(Path::new("."))
    }

    #[test]
    fn explicit_chain_matches_the_generated_one() {
        let text = r#"{
            "category": {"kind": "table", "objects": ["0", "1", "2"],
              "arrows": [{"name": "i0", "src": "0", "tgt": "0"}, {"name": "i1", "src": "1", "tgt": "1"},
                         {"name": "i2", "src": "2", "tgt": "2"}, {"name": "a", "src": "0", "tgt": "1"},
                         {"name": "b", "src": "1", "tgt": "2"}, {"name": "ba", "src": "0", "tgt": "2"}],
              "identities": {"0": "i0", "1": "i1", "2": "i2"},
              "compose": [["b", "a", "ba"]],
              "terminal": "2",
              "products": []},
            "fiber": {"chain": 2},
            "reindex": "identity"
        }"#;
        let l = parse(text).unwrap();
        assert_eq!(check_primary(&l.doctrine), Ok(()));
        assert_eq!(l.elementary.unwrap().delta, vec![None, None, None]);
        let g = parse(r#"{"generated": "f1"}"#).unwrap();
        assert_eq!(g.doctrine.base().num_arrows(), 6);
        assert!(g.existential.is_some());
    }

    #[test]
    fn derived_quantifiers_and_diagonals() {
        let l = parse(r#"{"category": {"kind": "powers", "n_max": 2}, "fiber": {"chain": 2}, "reindex": "preimage"}"#);
        assert!(l.is_err(), "chain fibers are not powersets");
        let (p, e, el) = fixtures::f2();
        let l = parse(r#"{"category": {"kind": "powers", "n_max": 2}, "fibers": {"1": {"powerset": ["*"]}, "X": {"powerset": ["0", "1"]}, "X2": {"powerset": ["(0,0)", "(1,0)", "(0,1)", "(1,1)"]}}, "reindex": "preimage", "exists": "left-adjoints"}"#).unwrap();
        assert_eq!(l.elementary.as_ref().unwrap().delta, el.delta);
        let ex = l.existential.unwrap();
        assert_eq!(check_existential(&l.doctrine, &ex), Ok(()));
        for &f in e.lambda.members() {
            for a in p.fiber(p.base().src(f)).elements() {
                assert_eq!(ex.apply(p.base(), f, a), e.apply(p.base(), f, a));
            }
        }
    }

    #[test]
    fn overrides_and_errors() {
        let l = parse(r#"{"generated": "f2", "delta": {"X": "{(0,0),(1,0),(0,1),(1,1)}"}}"#).unwrap();
        assert_eq!(l.elementary.unwrap().delta[1], Some(15));
        assert!(parse(r#"{"generated": "f9"}"#).is_err());
        assert!(parse(r#"{"generated": "f2", "bogus": 1}"#).is_err());
        assert!(parse(r#"{"generated": "f2", "delta": {"X": "{(2,2)}"}}"#).is_err());
        assert!(parse(r#"{"generated": "f2", "fiber": {"chain": 2}}"#).is_err());
    }
}
