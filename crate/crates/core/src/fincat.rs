//! Finite categories with designated products, arrow classes closed under
//! pullback, functors and natural transformations.
//!
//! Two storage backends share one interface. `Table` holds an explicit
//! composition table (fixtures read from disk). `Powers` is a subcategory of
//! finite sets on the powers `X^0 .. X^n` of a two-element set, with arrows
//! the tuples of literals (coordinates, optionally negated
//! coordinates and constants). Its arrows are numbered arithmetically, so
//! hom-sets far too large for a table still have stable indices.

use std::borrow::Cow;
use std::collections::HashMap;

use serde_json::json;

use crate::error::{input, violation, Check, Result};

pub type Obj = usize;
pub type Arr = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrowInfo {
    pub name: String,
    pub src: Obj,
    pub tgt: Obj,
}

/// A declared binary product `object = left × right`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Product {
    pub left: Obj,
    pub right: Obj,
    pub object: Obj,
    pub pr1: Arr,
    pub pr2: Arr,
}

/// Pullback of `g: B → A` along `f: C → A`. `g_star: apex → C` is the leg
/// opposite `g` (it stays in the arrow class), `f_star: apex → B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Square {
    pub apex: Obj,
    pub g_star: Arr,
    pub f_star: Arr,
}

#[derive(Debug, Clone)]
struct Table {
    arrows: Vec<ArrowInfo>,
    identities: Vec<Arr>,
    compose: HashMap<(Arr, Arr), Arr>,
    hom: Vec<Vec<Vec<Arr>>>,
    by_name: HashMap<String, Arr>,
}

/// Literal alphabet for the `Powers` backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Literals {
    pub constants: bool,
    pub negations: bool,
}

#[derive(Debug, Clone)]
struct Powers {
    n_max: usize,
    lits: Literals,
    /// `offsets[n * (n_max + 1) + m]` is the first index of `hom(X^n, X^m)`.
    offsets: Vec<usize>,
    total: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Lit {
    Const(u8),
    Coord { index: usize, negated: bool },
}

impl Powers {
    fn radix(&self, n: usize) -> usize {
        let c = if self.lits.constants { 2 } else { 0 };
        let q = if self.lits.negations { 2 } else { 1 };
        c + n * q
    }

    fn hom_len(&self, n: usize, m: usize) -> usize {
        self.radix(n).pow(m as u32)
    }

    fn offset(&self, n: usize, m: usize) -> usize {
        self.offsets[n * (self.n_max + 1) + m]
    }

    fn decode_lit(&self, code: usize) -> Lit {
        let c = if self.lits.constants { 2 } else { 0 };
        if code < c {
            return Lit::Const(code as u8);
        }
        let j = code - c;
        if self.lits.negations {
            Lit::Coord { index: j / 2, negated: j % 2 == 1 }
        } else {
            Lit::Coord { index: j, negated: false }
        }
    }

    fn encode_lit(&self, lit: Lit) -> usize {
        let c = if self.lits.constants { 2 } else { 0 };
        match lit {
            Lit::Const(v) => v as usize,
            Lit::Coord { index, negated } => {
                if self.lits.negations {
                    c + 2 * index + usize::from(negated)
                } else {
                    c + index
                }
            }
        }
    }

    fn shape(&self, f: Arr) -> (usize, usize) {
        let side = self.n_max + 1;
        let mut best = 0;
        for (k, &off) in self.offsets.iter().enumerate() {
            let (n, m) = (k / side, k % side);
            if off <= f && f < off + self.hom_len(n, m) {
                best = k;
                break;
            }
        }
        (best / side, best % side)
    }

    fn decode(&self, f: Arr) -> (usize, usize, Vec<Lit>) {
        let (n, m) = self.shape(f);
        let r = self.radix(n);
        let mut code = f - self.offset(n, m);
        let mut lits = Vec::with_capacity(m);
        for _ in 0..m {
            lits.push(self.decode_lit(code % r));
            code /= r;
        }
        (n, m, lits)
    }

    fn encode(&self, n: usize, lits: &[Lit]) -> Arr {
        let r = self.radix(n);
        let mut code = 0;
        for lit in lits.iter().rev() {
            code = code * r + self.encode_lit(*lit);
        }
        self.offset(n, lits.len()) + code
    }

    fn identity(&self, n: usize) -> Arr {
        let lits: Vec<Lit> = (0..n).map(|index| Lit::Coord { index, negated: false }).collect();
        self.encode(n, &lits)
    }

    fn compose(&self, g: Arr, f: Arr) -> Option<Arr> {
        let (n, m, fl) = self.decode(f);
        let (m2, _, gl) = self.decode(g);
        if m != m2 {
            return None;
        }
        let lits: Vec<Lit> = gl
            .iter()
            .map(|l| match *l {
                Lit::Const(v) => Lit::Const(v),
                Lit::Coord { index, negated } => {
                    let inner = fl[index];
                    if !negated {
                        inner
                    } else {
                        match inner {
                            Lit::Const(v) => Lit::Const(1 - v),
                            Lit::Coord { index, negated } => Lit::Coord { index, negated: !negated },
                        }
                    }
                }
            })
            .collect();
        Some(self.encode(n, &lits))
    }

    fn lit_name(lit: Lit) -> String {
        match lit {
            Lit::Const(v) => v.to_string(),
            Lit::Coord { index, negated } => {
                format!("{}x{}", if negated { "!" } else { "" }, index + 1)
            }
        }
    }

    fn parse_lit(&self, s: &str, n: usize) -> Option<Lit> {
        match s {
            "0" if self.lits.constants => Some(Lit::Const(0)),
            "1" if self.lits.constants => Some(Lit::Const(1)),
            _ => {
                let (negated, rest) = match s.strip_prefix('!') {
                    Some(r) if self.lits.negations => (true, r),
                    Some(_) => return None,
                    None => (false, s),
                };
                let index: usize = rest.strip_prefix('x')?.parse().ok()?;
                if index == 0 || index > n {
                    return None;
                }
                Some(Lit::Coord { index: index - 1, negated })
            }
        }
    }

    fn eval(lits: &[Lit], point: usize) -> usize {
        let mut out = 0;
        for (i, lit) in lits.iter().enumerate() {
            let bit = match *lit {
                Lit::Const(v) => v as usize,
                Lit::Coord { index, negated } => ((point >> index) & 1) ^ usize::from(negated),
            };
            out |= bit << i;
        }
        out
    }
}

#[derive(Debug, Clone)]
enum Backend {
    Table(Table),
    Powers(Powers),
}

/// A finite category with a terminal object and a (possibly partial) table of
/// designated binary products.
#[derive(Debug, Clone)]
pub struct Category {
    objects: Vec<String>,
    object_index: HashMap<String, Obj>,
    backend: Backend,
    terminal: Obj,
    products: Vec<Product>,
    product_index: HashMap<(Obj, Obj), usize>,
}

/// Raw declaration of a table-backed category, by index.
#[derive(Debug, Clone, Default)]
pub struct TableSpec {
    pub objects: Vec<String>,
    pub arrows: Vec<ArrowInfo>,
    pub identities: Vec<Arr>,
    pub compose: Vec<(Arr, Arr, Arr)>,
    pub terminal: Obj,
    pub products: Vec<Product>,
}

impl Category {
    /// Builds a table-backed category. Only structural sanity is checked here
    /// (indices in range, well-typed entries); the category laws are left to
    /// [`check_category`].
    pub fn from_table(spec: TableSpec) -> Result<Category> {
        let n_obj = spec.objects.len();
        let n_arr = spec.arrows.len();
        if n_obj == 0 {
            return Err(input("category has no objects"));
        }
        let mut by_name = HashMap::new();
        for (i, a) in spec.arrows.iter().enumerate() {
            if a.src >= n_obj || a.tgt >= n_obj {
                return Err(input(format!("arrow {} has a dangling endpoint", a.name)));
            }
            if by_name.insert(a.name.clone(), i).is_some() {
                return Err(input(format!("duplicate arrow name {}", a.name)));
            }
        }
        if spec.identities.len() != n_obj {
            return Err(input("every object needs exactly one identity"));
        }
        for (o, &i) in spec.identities.iter().enumerate() {
            if i >= n_arr {
                return Err(input(format!("identity of {} is a dangling arrow", spec.objects[o])));
            }
        }
        let mut compose = HashMap::new();
        for &(g, f, gf) in &spec.compose {
            if g >= n_arr || f >= n_arr || gf >= n_arr {
                return Err(input("composition entry names a dangling arrow"));
            }
            let (gi, fi, gfi) = (&spec.arrows[g], &spec.arrows[f], &spec.arrows[gf]);
            if gi.src != fi.tgt {
                return Err(input(format!(
                    "composition entry {} o {} is not composable",
                    gi.name, fi.name
                )));
            }
            if gfi.src != fi.src || gfi.tgt != gi.tgt {
                return Err(input(format!(
                    "composite {} o {} = {} has the wrong type",
                    gi.name, fi.name, gfi.name
                )));
            }
            if let Some(prev) = compose.insert((g, f), gf) {
                if prev != gf {
                    return Err(input(format!(
                        "composition entry {} o {} is declared twice",
                        gi.name, fi.name
                    )));
                }
            }
        }
        if spec.terminal >= n_obj {
            return Err(input("terminal object is dangling"));
        }
        let mut hom = vec![vec![Vec::new(); n_obj]; n_obj];
        for (i, a) in spec.arrows.iter().enumerate() {
            hom[a.src][a.tgt].push(i);
        }
        let mut object_index = HashMap::new();
        for (i, o) in spec.objects.iter().enumerate() {
            if object_index.insert(o.clone(), i).is_some() {
                return Err(input(format!("duplicate object name {o}")));
            }
        }
        let table = Table {
            arrows: spec.arrows,
            identities: spec.identities,
            compose,
            hom,
            by_name,
        };
        let mut cat = Category {
            objects: spec.objects,
            object_index,
            backend: Backend::Table(table),
            terminal: spec.terminal,
            products: Vec::new(),
            product_index: HashMap::new(),
        };
        for p in spec.products {
            cat.declare_product(p)?;
        }
        Ok(cat)
    }

    /// The powers `X^0 .. X^n_max` of a two-element set. All binary products
    /// that stay within `n_max` are declared.
    pub fn powers(n_max: usize, lits: Literals, object_names: Vec<String>) -> Result<Category> {
        if object_names.len() != n_max + 1 {
            return Err(input("one name per power is required"));
        }
        let side = n_max + 1;
        let mut p = Powers {
            n_max,
            lits,
            offsets: vec![0; side * side],
            total: 0,
        };
        let mut acc = 0usize;
        for n in 0..side {
            for m in 0..side {
                p.offsets[n * side + m] = acc;
                acc += p.hom_len(n, m);
            }
        }
        p.total = acc;
        let mut object_index = HashMap::new();
        for (i, o) in object_names.iter().enumerate() {
            object_index.insert(o.clone(), i);
        }
        let mut products = Vec::new();
        for a in 0..side {
            for b in 0..side - a {
                let pr1: Vec<Lit> = (0..a).map(|index| Lit::Coord { index, negated: false }).collect();
                let pr2: Vec<Lit> =
                    (a..a + b).map(|index| Lit::Coord { index, negated: false }).collect();
                products.push(Product {
                    left: a,
                    right: b,
                    object: a + b,
                    pr1: p.encode(a + b, &pr1),
                    pr2: p.encode(a + b, &pr2),
                });
            }
        }
        let mut cat = Category {
            objects: object_names,
            object_index,
            backend: Backend::Powers(p),
            terminal: 0,
            products: Vec::new(),
            product_index: HashMap::new(),
        };
        for pr in products {
            cat.declare_product(pr)?;
        }
        Ok(cat)
    }

    fn declare_product(&mut self, p: Product) -> Result<()> {
        let n = self.objects.len();
        if p.left >= n || p.right >= n || p.object >= n {
            return Err(input("product declaration names a dangling object"));
        }
        if p.pr1 >= self.num_arrows() || p.pr2 >= self.num_arrows() {
            return Err(input("product declaration names a dangling arrow"));
        }
        if self.src(p.pr1) != p.object || self.tgt(p.pr1) != p.left {
            return Err(input(format!(
                "pr1 of {}x{} has the wrong type",
                self.objects[p.left], self.objects[p.right]
            )));
        }
        if self.src(p.pr2) != p.object || self.tgt(p.pr2) != p.right {
            return Err(input(format!(
                "pr2 of {}x{} has the wrong type",
                self.objects[p.left], self.objects[p.right]
            )));
        }
        if self.product_index.contains_key(&(p.left, p.right)) {
            return Err(input(format!(
                "product {}x{} declared twice",
                self.objects[p.left], self.objects[p.right]
            )));
        }
        self.product_index.insert((p.left, p.right), self.products.len());
        self.products.push(p);
        Ok(())
    }

    pub fn is_table(&self) -> bool {
        matches!(self.backend, Backend::Table(_))
    }

    pub fn num_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn num_arrows(&self) -> usize {
        match &self.backend {
            Backend::Table(t) => t.arrows.len(),
            Backend::Powers(p) => p.total,
        }
    }

    pub fn objects(&self) -> std::ops::Range<Obj> {
        0..self.objects.len()
    }

    pub fn object_name(&self, a: Obj) -> &str {
        &self.objects[a]
    }

    pub fn object_by_name(&self, name: &str) -> Option<Obj> {
        self.object_index.get(name).copied()
    }

    pub fn arrow_name(&self, f: Arr) -> String {
        match &self.backend {
            Backend::Table(t) => t.arrows[f].name.clone(),
            Backend::Powers(p) => {
                let (n, m, lits) = p.decode(f);
                let body: Vec<String> = lits.into_iter().map(Powers::lit_name).collect();
                format!("{}>{}[{}]", self.objects[n], self.objects[m], body.join(","))
            }
        }
    }

    pub fn arrow_by_name(&self, name: &str) -> Option<Arr> {
        match &self.backend {
            Backend::Table(t) => t.by_name.get(name).copied(),
            Backend::Powers(p) => {
                let (head, body) = name.strip_suffix(']')?.split_once('[')?;
                let (s, t) = head.split_once('>')?;
                let (n, m) = (self.object_by_name(s)?, self.object_by_name(t)?);
                let lits: Vec<Lit> = if body.is_empty() {
                    Vec::new()
                } else {
                    body.split(',').map(|l| p.parse_lit(l, n)).collect::<Option<_>>()?
                };
                if lits.len() != m {
                    return None;
                }
                Some(p.encode(n, &lits))
            }
        }
    }

    pub fn src(&self, f: Arr) -> Obj {
        match &self.backend {
            Backend::Table(t) => t.arrows[f].src,
            Backend::Powers(p) => p.shape(f).0,
        }
    }

    pub fn tgt(&self, f: Arr) -> Obj {
        match &self.backend {
            Backend::Table(t) => t.arrows[f].tgt,
            Backend::Powers(p) => p.shape(f).1,
        }
    }

    pub fn id(&self, a: Obj) -> Arr {
        match &self.backend {
            Backend::Table(t) => t.identities[a],
            Backend::Powers(p) => p.identity(a),
        }
    }

    pub fn is_identity(&self, f: Arr) -> bool {
        self.src(f) == self.tgt(f) && self.id(self.src(f)) == f
    }

    /// `g ∘ f`, or `None` when undefined.
    pub fn try_compose(&self, g: Arr, f: Arr) -> Option<Arr> {
        match &self.backend {
            Backend::Table(t) => t.compose.get(&(g, f)).copied(),
            Backend::Powers(p) => p.compose(g, f),
        }
    }

    /// `g ∘ f` on a validated category.
    ///
    /// # Panics
    /// When the pair is not composable or the table lacks the entry; run
    /// [`check_category`] first on untrusted input.
    pub fn compose(&self, g: Arr, f: Arr) -> Arr {
        self.try_compose(g, f).unwrap_or_else(|| {
            panic!(
                "composite {} o {} is undefined",
                self.arrow_name(g),
                self.arrow_name(f)
            )
        })
    }

    pub fn hom(&self, a: Obj, b: Obj) -> Cow<'_, [Arr]> {
        match &self.backend {
            Backend::Table(t) => Cow::Borrowed(&t.hom[a][b]),
            Backend::Powers(p) => {
                let off = p.offset(a, b);
                Cow::Owned((off..off + p.hom_len(a, b)).collect())
            }
        }
    }

    pub fn hom_len(&self, a: Obj, b: Obj) -> usize {
        match &self.backend {
            Backend::Table(t) => t.hom[a][b].len(),
            Backend::Powers(p) => p.hom_len(a, b),
        }
    }

    /// Every arrow, grouped by source then target.
    pub fn arrows(&self) -> Vec<Arr> {
        let mut out = Vec::new();
        for a in self.objects() {
            for b in self.objects() {
                out.extend_from_slice(&self.hom(a, b));
            }
        }
        out
    }

    pub fn terminal(&self) -> Obj {
        self.terminal
    }

    pub fn to_terminal(&self, a: Obj) -> Result<Arr> {
        self.hom(a, self.terminal)
            .first()
            .copied()
            .ok_or_else(|| input(format!("no arrow from {} to the terminal", self.objects[a])))
    }

    pub fn products(&self) -> &[Product] {
        &self.products
    }

    pub fn find_product(&self, a: Obj, b: Obj) -> Option<&Product> {
        self.product_index.get(&(a, b)).map(|&i| &self.products[i])
    }

    pub fn product(&self, a: Obj, b: Obj) -> Result<&Product> {
        self.find_product(a, b).ok_or_else(|| {
            input(format!(
                "missing product {}x{}",
                self.objects[a], self.objects[b]
            ))
        })
    }

    /// Number of points of an object when it is a concrete finite set.
    pub fn carrier(&self, a: Obj) -> Option<usize> {
        match &self.backend {
            Backend::Table(_) => None,
            Backend::Powers(_) => Some(1usize << a),
        }
    }

    /// Point map of an arrow between concrete finite sets.
    pub fn function(&self, f: Arr) -> Option<Vec<usize>> {
        match &self.backend {
            Backend::Table(_) => None,
            Backend::Powers(p) => {
                let (n, _, lits) = p.decode(f);
                Some((0..1usize << n).map(|pt| Powers::eval(&lits, pt)).collect())
            }
        }
    }

    /// For a powers arrow `X^n → X^m` built from plain coordinates, the input
    /// coordinate read by each output coordinate. Such arrows are variable
    /// substitutions.
    pub fn substitution(&self, f: Arr) -> Option<Vec<usize>> {
        match &self.backend {
            Backend::Table(_) => None,
            Backend::Powers(p) => p
                .decode(f)
                .2
                .into_iter()
                .map(|lit| match lit {
                    Lit::Coord { index, negated: false } => Some(index),
                    _ => None,
                })
                .collect(),
        }
    }

    /// The powers arrow `X^n → X^m` whose output coordinate `j` reads input
    /// coordinate `map[j]`.
    pub fn from_substitution(&self, n: Obj, map: &[usize]) -> Option<Arr> {
        match &self.backend {
            Backend::Table(_) => None,
            Backend::Powers(p) => {
                if n > p.n_max || map.len() > p.n_max || map.iter().any(|&i| i >= n) {
                    return None;
                }
                let lits: Vec<Lit> = map.iter().map(|&index| Lit::Coord { index, negated: false }).collect();
                Some(p.encode(n, &lits))
            }
        }
    }

    /// Mediating arrow `⟨f, g⟩` into a declared product.
    pub fn pair(&self, p: &Product, f: Arr, g: Arr) -> Option<Arr> {
        if self.src(f) != self.src(g) || self.tgt(f) != p.left || self.tgt(g) != p.right {
            return None;
        }
        match &self.backend {
            Backend::Powers(pw) => {
                let (n, _, mut fl) = pw.decode(f);
                let (_, _, gl) = pw.decode(g);
                fl.extend(gl);
                Some(pw.encode(n, &fl))
            }
            Backend::Table(_) => {
                let x = self.src(f);
                self.hom(x, p.object).iter().copied().find(|&w| {
                    self.try_compose(p.pr1, w) == Some(f) && self.try_compose(p.pr2, w) == Some(g)
                })
            }
        }
    }

    /// Left-nested product `((A1 × A2) × A3) × …`; the empty list gives the
    /// terminal object.
    pub fn product_of(&self, objs: &[Obj]) -> Result<Obj> {
        match objs.len() {
            0 => Ok(self.terminal),
            1 => Ok(objs[0]),
            k => {
                let head = self.product_of(&objs[..k - 1])?;
                Ok(self.product(head, objs[k - 1])?.object)
            }
        }
    }

    /// Projection from the left-nested product of `objs` onto factor `i`.
    pub fn proj(&self, objs: &[Obj], i: usize) -> Result<Arr> {
        let k = objs.len();
        if i >= k {
            return Err(input("projection index out of range"));
        }
        if k == 1 {
            return Ok(self.id(objs[0]));
        }
        let head = self.product_of(&objs[..k - 1])?;
        let p = *self.product(head, objs[k - 1])?;
        if i == k - 1 {
            Ok(p.pr2)
        } else {
            Ok(self.compose(self.proj(&objs[..k - 1], i)?, p.pr1))
        }
    }

    /// Tuple `⟨f1, …, fk⟩: src → ((B1 × B2) × …)` from components `fi: src → Bi`.
    pub fn tuple(&self, src: Obj, fs: &[Arr], objs: &[Obj]) -> Result<Arr> {
        if fs.len() != objs.len() {
            return Err(input("tuple arity mismatch"));
        }
        for (&f, &b) in fs.iter().zip(objs) {
            if self.src(f) != src || self.tgt(f) != b {
                return Err(input(format!("tuple component {} is ill-typed", self.arrow_name(f))));
            }
        }
        match fs.len() {
            0 => self.to_terminal(src),
            1 => Ok(fs[0]),
            k => {
                let head = self.tuple(src, &fs[..k - 1], &objs[..k - 1])?;
                let p = *self.product(self.product_of(&objs[..k - 1])?, objs[k - 1])?;
                self.pair(&p, head, fs[k - 1])
                    .ok_or_else(|| input("product has no mediating arrow for a cone"))
            }
        }
    }

    /// Every `w` with `f ∘ w = h`, in index order. On the powers backend the
    /// equation is solved literal by literal instead of scanning the hom-set.
    pub fn factorizations(&self, f: Arr, h: Arr) -> Vec<Arr> {
        if self.tgt(f) != self.tgt(h) {
            return Vec::new();
        }
        let (b, d) = (self.src(h), self.src(f));
        match &self.backend {
            Backend::Table(_) => self
                .hom(b, d)
                .iter()
                .copied()
                .filter(|&w| self.try_compose(f, w) == Some(h))
                .collect(),
            Backend::Powers(p) => {
                let (_, _, fl) = p.decode(f);
                let (_, _, hl) = p.decode(h);
                let mut fixed: Vec<Option<Lit>> = vec![None; d];
                for (l, target) in fl.iter().zip(&hl) {
                    match *l {
                        Lit::Const(c) => {
                            if *target != Lit::Const(c) {
                                return Vec::new();
                            }
                        }
                        Lit::Coord { index, negated } => {
                            let want = if !negated {
                                *target
                            } else {
                                match *target {
                                    Lit::Const(v) => Lit::Const(1 - v),
                                    Lit::Coord { index, negated } => Lit::Coord { index, negated: !negated },
                                }
                            };
                            match fixed[index] {
                                Some(prev) if prev != want => return Vec::new(),
                                _ => fixed[index] = Some(want),
                            }
                        }
                    }
                }
                let r = p.radix(b);
                let free: Vec<usize> = (0..d).filter(|&i| fixed[i].is_none()).collect();
                let count = r.pow(free.len() as u32);
                let mut out = Vec::with_capacity(count);
                let mut lits: Vec<Lit> = fixed.iter().map(|l| l.unwrap_or(Lit::Const(0))).collect();
                for mut code in 0..count {
                    for &i in &free {
                        lits[i] = p.decode_lit(code % r);
                        code /= r;
                    }
                    out.push(p.encode(b, &lits));
                }
                out.sort_unstable();
                out
            }
        }
    }

    /// Whether `sq` is a pullback of `g` along `f`, by exhaustive search over
    /// all competing cones.
    pub fn is_pullback(&self, g: Arr, f: Arr, sq: &Square) -> bool {
        let (b, c) = (self.src(g), self.src(f));
        if self.src(sq.g_star) != sq.apex
            || self.src(sq.f_star) != sq.apex
            || self.tgt(sq.g_star) != c
            || self.tgt(sq.f_star) != b
        {
            return false;
        }
        if self.compose(f, sq.g_star) != self.compose(g, sq.f_star) {
            return false;
        }
        let mut order: Vec<Obj> = vec![self.terminal];
        order.extend(self.objects().filter(|&z| z != self.terminal));
        for z in order {
            let to_apex = self.hom(z, sq.apex);
            for &u in self.hom(z, c).iter() {
                for &v in self.hom(z, b).iter() {
                    if self.compose(f, u) != self.compose(g, v) {
                        continue;
                    }
                    let n = to_apex
                        .iter()
                        .filter(|&&m| {
                            self.compose(sq.g_star, m) == u && self.compose(sq.f_star, m) == v
                        })
                        .take(2)
                        .count();
                    if n != 1 {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Canonical pullback of a designated projection `pr_A: A×K → A` (or
    /// `pr_A: K×A → A`) along `f: C → A`: apex `C×K` (resp. `K×C`) with legs
    /// `pr_C` and `⟨f∘pr_C, pr_K⟩`.
    pub fn canonical_projection_pullback(&self, pr: Arr, f: Arr) -> Result<Square> {
        let c = self.src(f);
        if self.tgt(f) != self.tgt(pr) {
            return Err(input("projection and arrow are not co-targeted"));
        }
        let mut missing = None;
        for p in &self.products {
            if p.pr1 == pr {
                match self.find_product(c, p.right) {
                    Some(q) => {
                        let f_star = self
                            .pair(p, self.compose(f, q.pr1), q.pr2)
                            .ok_or_else(|| input("product has no mediating arrow for a cone"))?;
                        return Ok(Square { apex: q.object, g_star: q.pr1, f_star });
                    }
                    None => missing = Some((c, p.right)),
                }
            } else if p.pr2 == pr {
                match self.find_product(p.left, c) {
                    Some(q) => {
                        let f_star = self
                            .pair(p, q.pr1, self.compose(f, q.pr2))
                            .ok_or_else(|| input("product has no mediating arrow for a cone"))?;
                        return Ok(Square { apex: q.object, g_star: q.pr2, f_star });
                    }
                    None => missing = Some((p.left, c)),
                }
            }
        }
        match missing {
            Some((x, y)) => Err(input(format!(
                "missing product {}x{}",
                self.objects[x], self.objects[y]
            ))),
            None => Err(input(format!(
                "{} is not a designated projection",
                self.arrow_name(pr)
            ))),
        }
    }

    /// The fixed pullback chooser for `g ∈ Λ` along `f`. Identities pull back
    /// trivially, designated projections canonically, composites of
    /// projections by pasting; table categories fall back to brute-force search.
    pub fn choose_pullback(&self, lambda: &ArrowClass, g: Arr, f: Arr) -> Option<Square> {
        self.choose_pullback_depth(lambda, g, f, 0)
    }

    fn choose_pullback_depth(&self, lambda: &ArrowClass, g: Arr, f: Arr, depth: usize) -> Option<Square> {
        if self.tgt(g) != self.tgt(f) || depth > 8 {
            return None;
        }
        if self.is_identity(g) {
            let c = self.src(f);
            return Some(Square { apex: c, g_star: self.id(c), f_star: f });
        }
        if self.is_identity(f) {
            let b = self.src(g);
            return Some(Square { apex: b, g_star: g, f_star: self.id(b) });
        }
        if let Ok(sq) = self.canonical_projection_pullback(g, f) {
            if lambda.contains(sq.g_star) {
                return Some(sq);
            }
        }
        // Paste along a factorisation g = g1 ∘ g2 through a designated projection.
        let a = self.tgt(g);
        for p in &self.products {
            for g1 in [p.pr1, p.pr2] {
                if self.tgt(g1) != a || self.is_identity(g1) || !lambda.contains(g1) {
                    continue;
                }
                for &g2 in self.hom(self.src(g), self.src(g1)).iter() {
                    if self.is_identity(g2) || !lambda.contains(g2) || self.compose(g1, g2) != g {
                        continue;
                    }
                    let Some(s1) = self.choose_pullback_depth(lambda, g1, f, depth + 1) else { continue };
                    let Some(s2) = self.choose_pullback_depth(lambda, g2, s1.f_star, depth + 1) else { continue };
                    return Some(Square {
                        apex: s2.apex,
                        g_star: self.compose(s1.g_star, s2.g_star),
                        f_star: s2.f_star,
                    });
                }
            }
        }
        if self.is_table() {
            return self.search_pullbacks(lambda, g, f).into_iter().next();
        }
        None
    }

    /// Every pullback square of `g` along `f` whose leg opposite `g` lies in
    /// `lambda`, in index order.
    pub fn search_pullbacks(&self, lambda: &ArrowClass, g: Arr, f: Arr) -> Vec<Square> {
        let (b, c) = (self.src(g), self.src(f));
        let mut out = Vec::new();
        for apex in self.objects() {
            for &g_star in self.hom(apex, c).iter() {
                if !lambda.contains(g_star) {
                    continue;
                }
                let fg = self.compose(f, g_star);
                for &f_star in self.hom(apex, b).iter() {
                    if self.compose(g, f_star) != fg {
                        continue;
                    }
                    let sq = Square { apex, g_star, f_star };
                    if self.is_pullback(g, f, &sq) {
                        out.push(sq);
                    }
                }
            }
        }
        out
    }
}

/// Exhaustive check of the category laws, the terminal object and every
/// declared product.
pub fn check_category(cat: &Category) -> Check {
    for a in cat.objects() {
        let i = cat.id(a);
        if cat.src(i) != a || cat.tgt(i) != a {
            return Err(violation(
                "identity",
                format!("identity of {} is not an endomorphism of it", cat.object_name(a)),
                json!({ "object": cat.object_name(a) }),
            ));
        }
    }
    let arrows = cat.arrows();
    for &f in &arrows {
        let (s, t) = (cat.src(f), cat.tgt(f));
        for &g in &arrows {
            if cat.src(g) != t {
                continue;
            }
            match cat.try_compose(g, f) {
                Some(gf) if cat.src(gf) == s && cat.tgt(gf) == cat.tgt(g) => {}
                _ => {
                    return Err(violation(
                        "composition",
                        format!("{} o {} is undefined", cat.arrow_name(g), cat.arrow_name(f)),
                        json!({ "g": cat.arrow_name(g), "f": cat.arrow_name(f) }),
                    ))
                }
            }
        }
        if cat.compose(cat.id(t), f) != f || cat.compose(f, cat.id(s)) != f {
            return Err(violation(
                "identity",
                format!("identity law fails at {}", cat.arrow_name(f)),
                json!({ "arrow": cat.arrow_name(f) }),
            ));
        }
    }
    for &f in &arrows {
        for &g in &arrows {
            if cat.src(g) != cat.tgt(f) {
                continue;
            }
            let gf = cat.compose(g, f);
            for &h in &arrows {
                if cat.src(h) != cat.tgt(g) {
                    continue;
                }
                if cat.compose(cat.compose(h, g), f) != cat.compose(h, gf) {
                    return Err(violation(
                        "associativity",
                        format!(
                            "({} o {}) o {} differs from {} o ({} o {})",
                            cat.arrow_name(h),
                            cat.arrow_name(g),
                            cat.arrow_name(f),
                            cat.arrow_name(h),
                            cat.arrow_name(g),
                            cat.arrow_name(f)
                        ),
                        json!({ "h": cat.arrow_name(h), "g": cat.arrow_name(g), "f": cat.arrow_name(f) }),
                    ));
                }
            }
        }
    }
    for a in cat.objects() {
        if cat.hom_len(a, cat.terminal()) != 1 {
            return Err(violation(
                "terminal",
                format!(
                    "{} has {} arrows to the terminal object",
                    cat.object_name(a),
                    cat.hom_len(a, cat.terminal())
                ),
                json!({ "object": cat.object_name(a) }),
            ));
        }
    }
    for p in cat.products() {
        check_product(cat, p)?;
    }
    Ok(())
}

/// Universal property of one declared product, by enumeration of cones.
pub fn check_product(cat: &Category, p: &Product) -> Check {
    for x in cat.objects() {
        let to_obj = cat.hom(x, p.object);
        for &f in cat.hom(x, p.left).iter() {
            for &g in cat.hom(x, p.right).iter() {
                let n = to_obj
                    .iter()
                    .filter(|&&w| cat.compose(p.pr1, w) == f && cat.compose(p.pr2, w) == g)
                    .take(2)
                    .count();
                if n != 1 {
                    return Err(violation(
                        "product",
                        format!(
                            "cone ({}, {}) has {} mediating arrows into {}x{}",
                            cat.arrow_name(f),
                            cat.arrow_name(g),
                            n,
                            cat.object_name(p.left),
                            cat.object_name(p.right)
                        ),
                        json!({ "f": cat.arrow_name(f), "g": cat.arrow_name(g) }),
                    ));
                }
            }
        }
    }
    Ok(())
}

/// A class Λ of arrows: identities, closed under composition, and closed under
/// the pullbacks the category actually has.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrowClass {
    members: Vec<bool>,
    list: Vec<Arr>,
}

impl ArrowClass {
    pub fn new(cat: &Category, members: impl IntoIterator<Item = Arr>) -> ArrowClass {
        let mut flags = vec![false; cat.num_arrows()];
        for f in members {
            flags[f] = true;
        }
        let list = flags.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect();
        ArrowClass { members: flags, list }
    }

    /// Only the identities.
    pub fn identities(cat: &Category) -> ArrowClass {
        ArrowClass::new(cat, cat.objects().map(|a| cat.id(a)))
    }

    pub fn contains(&self, f: Arr) -> bool {
        self.members.get(f).copied().unwrap_or(false)
    }

    pub fn members(&self) -> &[Arr] {
        &self.list
    }

    pub fn len(&self) -> usize {
        self.list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.list.is_empty()
    }

    /// Members with the given target, sorted by (source, index).
    pub fn into_object(&self, cat: &Category, a: Obj) -> Vec<Arr> {
        let mut v: Vec<Arr> = self.list.iter().copied().filter(|&g| cat.tgt(g) == a).collect();
        v.sort_by_key(|&g| (cat.src(g), g));
        v
    }

    /// Closure under composition.
    pub fn closed(cat: &Category, seed: impl IntoIterator<Item = Arr>) -> ArrowClass {
        let mut flags = vec![false; cat.num_arrows()];
        let mut list: Vec<Arr> = Vec::new();
        for f in seed.into_iter().chain(cat.objects().map(|a| cat.id(a))) {
            if !flags[f] {
                flags[f] = true;
                list.push(f);
            }
        }
        let mut changed = true;
        while changed {
            changed = false;
            let snapshot = list.clone();
            for &f in &snapshot {
                for &g in &snapshot {
                    if cat.src(g) != cat.tgt(f) {
                        continue;
                    }
                    let gf = cat.compose(g, f);
                    if !flags[gf] {
                        flags[gf] = true;
                        list.push(gf);
                        changed = true;
                    }
                }
            }
        }
        ArrowClass::new(cat, list)
    }
}

/// Smallest class containing the identities and every designated projection,
/// closed under composition.
pub fn projection_class(cat: &Category) -> ArrowClass {
    let seed: Vec<Arr> = cat.products().iter().flat_map(|p| [p.pr1, p.pr2]).collect();
    ArrowClass::closed(cat, seed)
}

/// Pairs `(g, f)` with `g ∈ Λ` for which the category has no chosen pullback.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PullbackCoverage {
    pub missing: Vec<(Arr, Arr)>,
}

/// Verifies the arrow-class invariants: identities, closure under
/// composition, and for every `g ∈ Λ` and co-targeted `f` whose pullback the
/// chooser finds, a genuine pullback square with its opposite leg in Λ.
/// Pairs without a pullback are returned rather than reported, since products
/// may be partial.
pub fn check_arrow_class(cat: &Category, lambda: &ArrowClass) -> Result<PullbackCoverage> {
    for a in cat.objects() {
        if !lambda.contains(cat.id(a)) {
            return Err(violation(
                "arrow-class-identity",
                format!("identity of {} is not in the class", cat.object_name(a)),
                json!({ "object": cat.object_name(a) }),
            ));
        }
    }
    for &f in lambda.members() {
        for &g in lambda.members() {
            if cat.src(g) == cat.tgt(f) && !lambda.contains(cat.compose(g, f)) {
                return Err(violation(
                    "arrow-class-composition",
                    format!("{} o {} is not in the class", cat.arrow_name(g), cat.arrow_name(f)),
                    json!({ "g": cat.arrow_name(g), "f": cat.arrow_name(f) }),
                ));
            }
        }
    }
    let mut coverage = PullbackCoverage::default();
    let all = cat.arrows();
    for &g in lambda.members() {
        for &f in all.iter().filter(|&&f| cat.tgt(f) == cat.tgt(g)) {
            match cat.choose_pullback(lambda, g, f) {
                None => coverage.missing.push((g, f)),
                Some(sq) => {
                    if !lambda.contains(sq.g_star) || !cat.is_pullback(g, f, &sq) {
                        return Err(violation(
                            "arrow-class-pullback",
                            format!(
                                "chosen square for {} along {} is not a pullback in the class",
                                cat.arrow_name(g),
                                cat.arrow_name(f)
                            ),
                            json!({ "g": cat.arrow_name(g), "f": cat.arrow_name(f) }),
                        ));
                    }
                }
            }
        }
    }
    Ok(coverage)
}

/// A functor between finite categories; `Identity` avoids materialising the
/// arrow map of large categories.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Functor {
    Identity,
    Map { objects: Vec<Obj>, arrows: Vec<Arr> },
}

impl Functor {
    pub fn obj(&self, a: Obj) -> Obj {
        match self {
            Functor::Identity => a,
            Functor::Map { objects, .. } => objects[a],
        }
    }

    pub fn arr(&self, f: Arr) -> Arr {
        match self {
            Functor::Identity => f,
            Functor::Map { arrows, .. } => arrows[f],
        }
    }

    /// `self ∘ first`.
    pub fn after(&self, first: &Functor, src: &Category) -> Functor {
        match (self, first) {
            (Functor::Identity, _) => first.clone(),
            (_, Functor::Identity) => self.clone(),
            _ => Functor::Map {
                objects: src.objects().map(|a| self.obj(first.obj(a))).collect(),
                arrows: (0..src.num_arrows()).map(|f| self.arr(first.arr(f))).collect(),
            },
        }
    }
}

fn check_functor_shape(src: &Category, tgt: &Category, func: &Functor) -> Check {
    if let Functor::Map { objects, arrows } = func {
        if objects.len() != src.num_objects() || arrows.len() != src.num_arrows() {
            return Err(input("functor maps do not cover the source category"));
        }
        if objects.iter().any(|&o| o >= tgt.num_objects()) || arrows.iter().any(|&f| f >= tgt.num_arrows()) {
            return Err(input("functor maps into dangling target indices"));
        }
    } else if src.num_objects() != tgt.num_objects() || src.num_arrows() != tgt.num_arrows() {
        return Err(input("identity functor between categories of different shape"));
    }
    Ok(())
}

/// Typing, identities and composition, by enumeration.
pub fn check_functor(src: &Category, tgt: &Category, func: &Functor) -> Check {
    check_functor_shape(src, tgt, func)?;
    let arrows = src.arrows();
    for &f in &arrows {
        let ff = func.arr(f);
        if tgt.src(ff) != func.obj(src.src(f)) || tgt.tgt(ff) != func.obj(src.tgt(f)) {
            return Err(violation(
                "functor-typing",
                format!("image of {} has the wrong endpoints", src.arrow_name(f)),
                json!({ "arrow": src.arrow_name(f) }),
            ));
        }
    }
    for a in src.objects() {
        if func.arr(src.id(a)) != tgt.id(func.obj(a)) {
            return Err(violation(
                "functor-identity",
                format!("identity of {} is not preserved", src.object_name(a)),
                json!({ "object": src.object_name(a) }),
            ));
        }
    }
    for &f in &arrows {
        for &g in &arrows {
            if src.src(g) != src.tgt(f) {
                continue;
            }
            if func.arr(src.compose(g, f)) != tgt.compose(func.arr(g), func.arr(f)) {
                return Err(violation(
                    "functor-composition",
                    format!(
                        "{} o {} is not preserved",
                        src.arrow_name(g),
                        src.arrow_name(f)
                    ),
                    json!({ "g": src.arrow_name(g), "f": src.arrow_name(f) }),
                ));
            }
        }
    }
    Ok(())
}

/// Every declared product is sent to a product: the comparison arrow
/// `⟨F pr1, F pr2⟩` into the designated target product is invertible.
pub fn check_preserves_products(src: &Category, tgt: &Category, func: &Functor) -> Check {
    for p in src.products() {
        let q = tgt.product(func.obj(p.left), func.obj(p.right))?;
        let fo = func.obj(p.object);
        let c = tgt
            .pair(q, func.arr(p.pr1), func.arr(p.pr2))
            .ok_or_else(|| input("target product has no mediating arrow"))?;
        let invertible = tgt.hom(q.object, fo).iter().any(|&d| {
            tgt.compose(c, d) == tgt.id(q.object) && tgt.compose(d, c) == tgt.id(fo)
        });
        if !invertible {
            return Err(violation(
                "functor-products",
                format!(
                    "product {}x{} is not preserved",
                    src.object_name(p.left),
                    src.object_name(p.right)
                ),
                json!({ "left": src.object_name(p.left), "right": src.object_name(p.right) }),
            ));
        }
    }
    Ok(())
}

/// Naturality of `theta: F ⇒ G`, one component per source object.
pub fn check_nattrans(src: &Category, tgt: &Category, f: &Functor, g: &Functor, theta: &[Arr]) -> Check {
    if theta.len() != src.num_objects() {
        return Err(input("natural transformation needs one component per object"));
    }
    for a in src.objects() {
        let t = theta[a];
        if t >= tgt.num_arrows() || tgt.src(t) != f.obj(a) || tgt.tgt(t) != g.obj(a) {
            return Err(violation(
                "nat-typing",
                format!("component at {} has the wrong type", src.object_name(a)),
                json!({ "object": src.object_name(a) }),
            ));
        }
    }
    for h in src.arrows() {
        let (a, b) = (src.src(h), src.tgt(h));
        if tgt.compose(theta[b], f.arr(h)) != tgt.compose(g.arr(h), theta[a]) {
            return Err(violation(
                "naturality",
                format!("naturality square at {} does not commute", src.arrow_name(h)),
                json!({ "arrow": src.arrow_name(h) }),
            ));
        }
    }
    Ok(())
}

/// All natural transformations `F ⇒ G`, by backtracking over components with
/// naturality pruning. `limit` bounds the number of search nodes.
pub fn enumerate_nattrans(
    src: &Category,
    tgt: &Category,
    f: &Functor,
    g: &Functor,
    limit: usize,
) -> Result<Vec<Vec<Arr>>> {
    let objs: Vec<Obj> = src.objects().collect();
    let arrows = src.arrows();
    let mut out = Vec::new();
    let mut current: Vec<Option<Arr>> = vec![None; objs.len()];
    let mut nodes = 0usize;
    fn consistent(src: &Category, tgt: &Category, f: &Functor, g: &Functor, arrows: &[Arr], cur: &[Option<Arr>]) -> bool {
        arrows.iter().all(|&h| {
            match (cur[src.src(h)], cur[src.tgt(h)]) {
                (Some(ta), Some(tb)) => tgt.compose(tb, f.arr(h)) == tgt.compose(g.arr(h), ta),
                _ => true,
            }
        })
    }
    #[allow(clippy::too_many_arguments)]
    fn go(
        i: usize,
        src: &Category,
        tgt: &Category,
        f: &Functor,
        g: &Functor,
        arrows: &[Arr],
        cur: &mut Vec<Option<Arr>>,
        out: &mut Vec<Vec<Arr>>,
        nodes: &mut usize,
        limit: usize,
    ) -> Result<()> {
        if i == cur.len() {
            out.push(cur.iter().map(|c| c.unwrap()).collect());
            return Ok(());
        }
        for &t in tgt.hom(f.obj(i), g.obj(i)).iter() {
            *nodes += 1;
            if *nodes > limit {
                return Err(crate::error::resource(format!(
                    "natural transformation enumeration exceeded {limit} nodes"
                )));
            }
            cur[i] = Some(t);
            if consistent(src, tgt, f, g, arrows, cur) {
                go(i + 1, src, tgt, f, g, arrows, cur, out, nodes, limit)?;
            }
            cur[i] = None;
        }
        Ok(())
    }
    go(0, src, tgt, f, g, &arrows, &mut current, &mut out, &mut nodes, limit)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn one_object() -> Category {
        Category::from_table(TableSpec {
            objects: vec!["*".into()],
            arrows: vec![ArrowInfo { name: "id".into(), src: 0, tgt: 0 }],
            identities: vec![0],
            compose: vec![(0, 0, 0)],
            terminal: 0,
            products: vec![Product { left: 0, right: 0, object: 0, pr1: 0, pr2: 0 }],
        })
        .unwrap()
    }

    fn boolean(n: usize) -> Category {
        let names = (0..=n)
            .map(|i| match i {
                0 => "1".to_string(),
                1 => "X".to_string(),
                k => format!("X{k}"),
            })
            .collect();
        Category::powers(n, Literals { constants: true, negations: true }, names).unwrap()
    }

    #[test]
    fn one_object_category_passes() {
        assert_eq!(check_category(&one_object()), Ok(()));
        assert_eq!(projection_class(&one_object()).members(), &[0]);
    }

    #[test]
    fn powers_hom_sizes_and_names_round_trip() {
        let c = boolean(2);
        assert_eq!(c.hom_len(1, 1), 4);
        assert_eq!(c.hom_len(1, 2), 16);
        assert_eq!(c.hom_len(2, 1), 6);
        assert_eq!(c.num_arrows(), 71);
        for f in 0..c.num_arrows() {
            assert_eq!(c.arrow_by_name(&c.arrow_name(f)), Some(f));
        }
        assert_eq!(check_category(&c), Ok(()));
    }

    #[test]
    fn powers_composition_matches_functions() {
        let c = boolean(2);
        for f in c.arrows() {
            for &g in c.arrows().iter().filter(|&&g| c.src(g) == c.tgt(f)) {
                let (ff, gf) = (c.function(f).unwrap(), c.function(g).unwrap());
                let composite: Vec<usize> = ff.iter().map(|&p| gf[p]).collect();
                assert_eq!(c.function(c.compose(g, f)).unwrap(), composite);
            }
        }
    }

    #[test]
    fn factorizations_match_hom_scan() {
        let c = boolean(2);
        for f in c.arrows() {
            for h in c.arrows().into_iter().filter(|&h| c.tgt(h) == c.tgt(f)) {
                let scan: Vec<Arr> = c
                    .hom(c.src(h), c.src(f))
                    .iter()
                    .copied()
                    .filter(|&w| c.compose(f, w) == h)
                    .collect();
                assert_eq!(c.factorizations(f, h), scan);
            }
        }
    }

    #[test]
    fn pullback_along_identity_and_terminal() {
        let c = boolean(2);
        let lam = projection_class(&c);
        let pr1 = c.product(1, 1).unwrap().pr1;
        let sq = c.canonical_projection_pullback(pr1, c.id(1)).unwrap();
        assert_eq!(sq.apex, 2);
        assert!(c.is_pullback(pr1, c.id(1), &sq));
        let bang = c.to_terminal(1).unwrap();
        let sq = c.choose_pullback(&lam, bang, c.id(0)).unwrap();
        assert_eq!((sq.apex, sq.g_star, sq.f_star), (1, bang, c.id(1)));
    }

    #[test]
    fn pullback_of_projection_along_point_has_apex_x() {
        let c = boolean(2);
        let lam = projection_class(&c);
        let pr1 = c.product(1, 1).unwrap().pr1;
        let zero = c.arrow_by_name("1>X[0]").unwrap();
        let sq = c.choose_pullback(&lam, pr1, zero).unwrap();
        assert_eq!(sq.apex, 1);
        assert!(c.is_pullback(pr1, zero, &sq));
        // Independent oracle: every pullback square the category has, found by search.
        let found = c.search_pullbacks(&lam, pr1, zero);
        assert!(!found.is_empty());
        assert!(found.iter().all(|s| s.apex == 1));
        let image: Vec<usize> = c.function(sq.f_star).unwrap();
        assert_eq!(image, vec![0b00, 0b10]);
    }

    #[test]
    fn projection_class_of_boolean_square() {
        let c = boolean(2);
        let lam = projection_class(&c);
        let names: Vec<String> = lam.members().iter().map(|&f| c.arrow_name(f)).collect();
        for expected in ["1>1[]", "X>X[x1]", "X2>X2[x1,x2]", "X2>X[x1]", "X2>X[x2]", "X>1[]", "X2>1[]"] {
            assert!(names.contains(&expected.to_string()), "{expected} missing from {names:?}");
        }
        assert_eq!(lam.len(), 7);
        let again = ArrowClass::closed(&c, lam.members().iter().copied());
        assert_eq!(again, lam);
    }

    #[test]
    fn boolean_square_lacks_pullbacks_into_cubes() {
        let c = boolean(2);
        let lam = projection_class(&c);
        let cov = check_arrow_class(&c, &lam).unwrap();
        assert!(!cov.missing.is_empty());
        for &(g, f) in &cov.missing {
            assert!(c.search_pullbacks(&lam, g, f).is_empty());
        }
    }

    #[test]
    fn identity_functor_and_transformation_pass() {
        let c = boolean(2);
        assert_eq!(check_functor(&c, &c, &Functor::Identity), Ok(()));
        let ids: Vec<Arr> = c.objects().map(|a| c.id(a)).collect();
        assert_eq!(check_nattrans(&c, &c, &Functor::Identity, &Functor::Identity, &ids), Ok(()));
        let all = enumerate_nattrans(&c, &c, &Functor::Identity, &Functor::Identity, 100_000).unwrap();
        assert_eq!(all, vec![ids]);
    }

    #[test]
    fn constant_functor_with_broken_identity_fails() {
        let c = boolean(2);
        let x = 1;
        let not = c.arrow_by_name("X>X[!x1]").unwrap();
        let func = Functor::Map {
            objects: vec![x; 3],
            arrows: (0..c.num_arrows()).map(|_| not).collect(),
        };
        let err = check_functor(&c, &c, &func).unwrap_err();
        assert_eq!(err.violation().unwrap().law, "functor-identity");
    }

    #[test]
    fn dangling_arrow_is_input_error() {
        let err = Category::from_table(TableSpec {
            objects: vec!["*".into()],
            arrows: vec![ArrowInfo { name: "id".into(), src: 0, tgt: 3 }],
            identities: vec![0],
            compose: vec![],
            terminal: 0,
            products: vec![],
        })
        .unwrap_err();
        assert!(matches!(err, crate::error::Failure::Input(_)));
    }
}
