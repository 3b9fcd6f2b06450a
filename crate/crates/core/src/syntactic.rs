//! The relational conjunctive fragment: formulas, substitution, containment
//! of existential conjunctive formulas by homomorphism search, evaluation on
//! finite models, and the syntactic doctrine whose completion order is
//! containment.
//!
//! Only single-sorted, axiom-free signatures without function symbols are
//! handled, so entailment of conjunctions is inclusion of atom sets.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::completion::{quotient_fiber, Ctx, Raw};
use crate::doctrine::{Doctrine, Reindex};
use crate::error::{input, resource, violation, Failure, Result};
use crate::fincat::{projection_class, ArrowClass, Category, Literals, Obj};
use crate::lattice::{Elem, Lattice};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Signature {
    pub predicates: BTreeMap<String, usize>,
}

impl Signature {
    pub fn new(preds: &[(&str, usize)]) -> Signature {
        Signature { predicates: preds.iter().map(|&(n, a)| (n.to_string(), a)).collect() }
    }
}

/// `pred(args)`, with arguments as positions in the formula's variable list.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub pred: String,
    pub args: Vec<usize>,
}

/// A conjunction of atoms over a context; `⊤` is the empty set.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConjunctiveFormula {
    pub context: Vec<String>,
    pub atoms: BTreeSet<Atom>,
}

/// `∃ y1…yk. matrix`, with the matrix over the context followed by the bound
/// variables. Bound variables are kept in a canonical order, so equal normal
/// forms mean formulas equal up to renaming.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExistentialFormula {
    pub context: Vec<String>,
    pub bound: usize,
    pub atoms: BTreeSet<Atom>,
}

fn write_atoms(f: &mut fmt::Formatter<'_>, atoms: &BTreeSet<Atom>, names: &[String]) -> fmt::Result {
    if atoms.is_empty() {
        return write!(f, "T");
    }
    for (i, a) in atoms.iter().enumerate() {
        if i > 0 {
            write!(f, " & ")?;
        }
        let args: Vec<&str> = a.args.iter().map(|&v| names[v].as_str()).collect();
        write!(f, "{}({})", a.pred, args.join(","))?;
    }
    Ok(())
}

impl fmt::Display for ConjunctiveFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_atoms(f, &self.atoms, &self.context)
    }
}

impl fmt::Display for ExistentialFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = self.variables();
        if self.bound > 0 {
            write!(f, "exists {}. ", names[self.context.len()..].join(","))?;
        }
        write_atoms(f, &self.atoms, &names)
    }
}

/// `y1, y2, …`, skipping names taken by the context.
fn bound_names(context: &[String], k: usize) -> Vec<String> {
    (1..).map(|i| format!("y{i}")).filter(|n| !context.contains(n)).take(k).collect()
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for i in 0..k {
        let mut next = Vec::new();
        for p in &out {
            for pos in 0..=i {
                let mut q = p.clone();
                q.insert(pos, i);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

impl ExistentialFormula {
    pub fn conjunctive(phi: ConjunctiveFormula) -> ExistentialFormula {
        ExistentialFormula { context: phi.context, bound: 0, atoms: phi.atoms }
    }

    /// Context names followed by the bound names used for printing.
    pub fn variables(&self) -> Vec<String> {
        let mut v = self.context.clone();
        v.extend(bound_names(&self.context, self.bound));
        v
    }

    pub fn num_vars(&self) -> usize {
        self.context.len() + self.bound
    }

    pub fn is_conjunctive(&self) -> bool {
        self.bound == 0
    }

    pub fn matrix(&self) -> ConjunctiveFormula {
        ConjunctiveFormula { context: self.variables(), atoms: self.atoms.clone() }
    }

    /// Renames bound variables to the order giving the least sorted atom list.
    pub fn canonical(mut self) -> ExistentialFormula {
        let n = self.context.len();
        if self.bound > 1 && self.bound <= 6 {
            let best = permutations(self.bound)
                .into_iter()
                .map(|p| {
                    let atoms: BTreeSet<Atom> = self
                        .atoms
                        .iter()
                        .map(|a| Atom {
                            pred: a.pred.clone(),
                            args: a.args.iter().map(|&v| if v < n { v } else { n + p[v - n] }).collect(),
                        })
                        .collect();
                    atoms
                })
                .min_by(|x, y| x.iter().cmp(y.iter()))
                .expect("at least one permutation");
            self.atoms = best;
        }
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownPredicate(String),
    ArityMismatch { pred: String, expected: usize, found: usize },
    UnboundVariable(String),
    DuplicateBoundVariable(String),
}

/// A parse failure at a 1-based character column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub column: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let col = self.column;
        match &self.kind {
            ParseErrorKind::Syntax(m) => write!(f, "syntax error at column {col}: {m}"),
            ParseErrorKind::UnknownPredicate(p) => write!(f, "unknown predicate {p} at column {col}"),
            ParseErrorKind::ArityMismatch { pred, expected, found } => {
                write!(f, "{pred} takes {expected} arguments, found {found} at column {col}")
            }
            ParseErrorKind::UnboundVariable(v) => write!(f, "unbound variable {v} at column {col}"),
            ParseErrorKind::DuplicateBoundVariable(v) => write!(f, "variable {v} bound twice at column {col}"),
        }
    }
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Failure {
        input(e.to_string())
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Name(String),
    LParen,
    RParen,
    Comma,
    And,
    Dot,
}

fn lex(text: &str) -> std::result::Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        match c {
            ' ' | '\t' | '\n' | '\r' => {}
            '(' => out.push((Tok::LParen, col)),
            ')' => out.push((Tok::RParen, col)),
            ',' => out.push((Tok::Comma, col)),
            '&' => out.push((Tok::And, col)),
            '.' => out.push((Tok::Dot, col)),
            c if c.is_alphanumeric() || c == '_' => {
                let start = i;
                while i + 1 < chars.len() && (chars[i + 1].is_alphanumeric() || chars[i + 1] == '_' || chars[i + 1] == '\'') {
                    i += 1;
                }
                out.push((Tok::Name(chars[start..=i].iter().collect()), col));
            }
            other => {
                return Err(ParseError { kind: ParseErrorKind::Syntax(format!("unexpected character {other:?}")), column: col })
            }
        }
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    sig: &'a Signature,
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    /// Every variable: the context first, then bound variables in binding order.
    vars: Vec<String>,
    n_context: usize,
    scope: Vec<usize>,
    atoms: BTreeSet<Atom>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn column(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |&(_, c)| c)
    }

    fn err<T>(&self, kind: ParseErrorKind) -> std::result::Result<T, ParseError> {
        Err(ParseError { kind, column: self.column() })
    }

    fn expect(&mut self, t: Tok, what: &str) -> std::result::Result<(), ParseError> {
        if self.peek() == Some(&t) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(ParseErrorKind::Syntax(format!("expected {what}")))
        }
    }

    fn name(&mut self) -> std::result::Result<(String, usize), ParseError> {
        match self.toks.get(self.pos) {
            Some((Tok::Name(n), c)) => {
                let out = (n.clone(), *c);
                self.pos += 1;
                Ok(out)
            }
            _ => self.err(ParseErrorKind::Syntax("expected a name".into())),
        }
    }

    fn formula(&mut self) -> std::result::Result<(), ParseError> {
        self.unit()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            self.unit()?;
        }
        Ok(())
    }

    fn unit(&mut self) -> std::result::Result<(), ParseError> {
        let (name, col) = self.name()?;
        if name == "exists" {
            let depth = self.scope.len();
            loop {
                let (v, vcol) = self.name()?;
                if self.vars.contains(&v) {
                    return Err(ParseError { kind: ParseErrorKind::DuplicateBoundVariable(v), column: vcol });
                }
                self.scope.push(self.vars.len());
                self.vars.push(v);
                if self.peek() == Some(&Tok::Comma) {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            self.expect(Tok::Dot, "'.' after the bound variables")?;
            self.formula()?;
            self.scope.truncate(depth);
            return Ok(());
        }
        if name == "T" && self.peek() != Some(&Tok::LParen) {
            return Ok(());
        }
        let Some(&arity) = self.sig.predicates.get(&name) else {
            return Err(ParseError { kind: ParseErrorKind::UnknownPredicate(name), column: col });
        };
        self.expect(Tok::LParen, "'('")?;
        let mut args = Vec::new();
        if self.peek() != Some(&Tok::RParen) {
            loop {
                let (v, vcol) = self.name()?;
                let found = (0..self.n_context).chain(self.scope.iter().copied()).find(|&i| self.vars[i] == v);
                match found {
                    Some(i) => args.push(i),
                    None => return Err(ParseError { kind: ParseErrorKind::UnboundVariable(v), column: vcol }),
                }
                if self.peek() == Some(&Tok::Comma) {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "')'")?;
        if args.len() != arity {
            return Err(ParseError {
                kind: ParseErrorKind::ArityMismatch { pred: name, expected: arity, found: args.len() },
                column: col,
            });
        }
        self.atoms.insert(Atom { pred: name, args });
        Ok(())
    }
}

fn check_context(context: &[String]) -> Result<()> {
    let set: BTreeSet<&String> = context.iter().collect();
    if set.len() != context.len() {
        return Err(input("context lists a variable twice"));
    }
    Ok(())
}

/// Parses `T | atom | formula & formula | exists vars. formula` in a context.
/// Existential quantifiers are pulled to the front, which is sound because
/// bound variables must be fresh.
pub fn parse_formula(sig: &Signature, text: &str, context: &[String]) -> Result<ExistentialFormula> {
    check_context(context)?;
    let toks = lex(text)?;
    let end = text.chars().count() + 1;
    let mut p = Parser {
        sig,
        toks,
        pos: 0,
        end,
        vars: context.to_vec(),
        n_context: context.len(),
        scope: Vec::new(),
        atoms: BTreeSet::new(),
    };
    p.formula()?;
    if p.pos != p.toks.len() {
        return Err(p.err::<()>(ParseErrorKind::Syntax("unexpected input after the formula".into())).unwrap_err().into());
    }
    Ok(ExistentialFormula { context: context.to_vec(), bound: p.vars.len() - context.len(), atoms: p.atoms }.canonical())
}

/// Parses a formula without quantifiers.
pub fn parse_conjunctive(sig: &Signature, text: &str, context: &[String]) -> Result<ConjunctiveFormula> {
    let phi = parse_formula(sig, text, context)?;
    if !phi.is_conjunctive() {
        return Err(input("expected a formula without quantifiers"));
    }
    Ok(phi.matrix())
}

/// `ψ ⊢ φ` in the axiom-free conjunctive fragment: every atom of `φ` is in `ψ`.
pub fn entails_conj(psi: &ConjunctiveFormula, phi: &ConjunctiveFormula) -> Result<bool> {
    if psi.context != phi.context {
        return Err(input("formulas live in different contexts"));
    }
    Ok(phi.atoms.is_subset(&psi.atoms))
}

/// A substitution from context `source` to context `target`: target variable
/// `j` is replaced by source variable `map[j]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Substitution {
    pub source: Vec<String>,
    pub target: Vec<String>,
    pub map: Vec<usize>,
}

impl Substitution {
    pub fn new(source: Vec<String>, target: Vec<String>, map: Vec<usize>) -> Result<Substitution> {
        check_context(&source)?;
        check_context(&target)?;
        if map.len() != target.len() || map.iter().any(|&i| i >= source.len()) {
            return Err(input("substitution is not total on its target context"));
        }
        Ok(Substitution { source, target, map })
    }

    pub fn identity(context: Vec<String>) -> Substitution {
        let map = (0..context.len()).collect();
        Substitution { source: context.clone(), target: context, map }
    }

    /// `next ∘ self`: first `self`, then `next`.
    pub fn then(&self, next: &Substitution) -> Result<Substitution> {
        if self.target != next.source {
            return Err(input("substitutions are not composable"));
        }
        Ok(Substitution {
            source: self.source.clone(),
            target: next.target.clone(),
            map: next.map.iter().map(|&j| self.map[j]).collect(),
        })
    }
}

/// Applies a substitution to a formula over its target context.
pub fn reindex_syntactic(sigma: &Substitution, phi: &ExistentialFormula) -> Result<ExistentialFormula> {
    if phi.context != sigma.target {
        return Err(input("formula context differs from the substitution's target"));
    }
    let (m, n) = (sigma.target.len(), sigma.source.len());
    let atoms = phi
        .atoms
        .iter()
        .map(|a| Atom {
            pred: a.pred.clone(),
            args: a.args.iter().map(|&v| if v < m { sigma.map[v] } else { n + v - m }).collect(),
        })
        .collect();
    Ok(ExistentialFormula { context: sigma.source.clone(), bound: phi.bound, atoms }.canonical())
}

/// Homomorphism from the variables of `phi2` to those of `phi1`, fixing the
/// context, with every atom of `phi2` sent into `phi1`. Its existence means
/// `phi1 ≤ phi2`. Assignments are tried in lexicographic order.
pub fn cq_contains(phi1: &ExistentialFormula, phi2: &ExistentialFormula) -> Result<Option<Vec<usize>>> {
    if phi1.context != phi2.context {
        return Err(input("formulas live in different contexts"));
    }
    let n = phi2.context.len();
    let mut h: Vec<Option<usize>> = (0..phi2.num_vars()).map(|v| (v < n).then_some(v)).collect();
    // Atoms of phi2 grouped by the last variable they need.
    let mut due: Vec<Vec<&Atom>> = vec![Vec::new(); phi2.num_vars() + 1];
    for a in &phi2.atoms {
        let last = a.args.iter().copied().filter(|&v| v >= n).max().map_or(0, |v| v + 1 - n);
        due[last].push(a);
    }
    let ok = |h: &[Option<usize>], atoms: &[&Atom]| {
        atoms.iter().all(|a| {
            let args = a.args.iter().map(|&v| h[v].expect("assigned")).collect();
            phi1.atoms.contains(&Atom { pred: a.pred.clone(), args })
        })
    };
    if !ok(&h, &due[0]) {
        return Ok(None);
    }
    fn search(
        k: usize,
        n: usize,
        range: usize,
        h: &mut Vec<Option<usize>>,
        due: &[Vec<&Atom>],
        ok: &dyn Fn(&[Option<usize>], &[&Atom]) -> bool,
    ) -> bool {
        if n + k == h.len() {
            return true;
        }
        for t in 0..range {
            h[n + k] = Some(t);
            if ok(h, &due[k + 1]) && search(k + 1, n, range, h, due, ok) {
                return true;
            }
        }
        h[n + k] = None;
        false
    }
    if search(0, n, phi1.num_vars(), &mut h, &due, &ok) {
        Ok(Some(h.into_iter().map(|v| v.expect("assigned")).collect()))
    } else {
        Ok(None)
    }
}

/// `z↦y` style rendering of a homomorphism on bound variables.
pub fn describe_hom(phi1: &ExistentialFormula, phi2: &ExistentialFormula, h: &[usize]) -> String {
    let (v1, v2) = (phi1.variables(), phi2.variables());
    let parts: Vec<String> = (phi2.context.len()..h.len()).map(|v| format!("{}↦{}", v2[v], v1[h[v]])).collect();
    if parts.is_empty() {
        "identity".to_string()
    } else {
        parts.join(", ")
    }
}

/// A finite interpretation of the signature on `{0, …, size-1}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Model {
    pub size: usize,
    pub relations: BTreeMap<String, BTreeSet<Vec<usize>>>,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "size {}", self.size)?;
        for (p, tuples) in &self.relations {
            let ts: Vec<String> = tuples
                .iter()
                .map(|t| if t.len() == 1 { t[0].to_string() } else { format!("({})", t.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")) })
                .collect();
            write!(f, ", {p}={{{}}}", ts.join(","))?;
        }
        Ok(())
    }
}

/// Satisfaction with existential witnesses searched exhaustively.
pub fn eval_on_model(phi: &ExistentialFormula, model: &Model, env: &[usize]) -> Result<bool> {
    if env.len() != phi.context.len() || env.iter().any(|&x| x >= model.size) {
        return Err(input("environment does not assign every context variable in the model"));
    }
    for a in &phi.atoms {
        if !model.relations.contains_key(&a.pred) {
            return Err(input(format!("model does not interpret {}", a.pred)));
        }
    }
    let mut val: Vec<usize> = env.to_vec();
    val.resize(phi.num_vars(), 0);
    let holds = |val: &[usize]| {
        phi.atoms.iter().all(|a| model.relations[&a.pred].contains(&a.args.iter().map(|&v| val[v]).collect::<Vec<_>>()))
    };
    fn go(k: usize, val: &mut Vec<usize>, size: usize, holds: &dyn Fn(&[usize]) -> bool) -> bool {
        if k == val.len() {
            return holds(val);
        }
        (0..size).any(|x| {
            val[k] = x;
            go(k + 1, val, size, holds)
        })
    }
    if phi.bound > 0 && model.size == 0 {
        return Ok(false);
    }
    Ok(go(phi.context.len(), &mut val, model.size, &holds))
}

/// The matrix of `phi` as a structure on its variables, with the context
/// assigned to itself.
pub fn canonical_model(sig: &Signature, phi: &ExistentialFormula) -> (Model, Vec<usize>) {
    let mut relations: BTreeMap<String, BTreeSet<Vec<usize>>> =
        sig.predicates.keys().map(|p| (p.clone(), BTreeSet::new())).collect();
    for a in &phi.atoms {
        relations.entry(a.pred.clone()).or_default().insert(a.args.clone());
    }
    (Model { size: phi.num_vars(), relations }, (0..phi.context.len()).collect())
}

/// Compact model for exhaustive search: relation `r` as a bitmask over the
/// tuples of the domain in mixed radix.
struct Packed<'a> {
    size: usize,
    preds: Vec<(&'a str, usize)>,
    masks: Vec<u64>,
}

impl Packed<'_> {
    fn holds(&self, atoms: &[(usize, Vec<usize>)], val: &[usize]) -> bool {
        atoms.iter().all(|(p, args)| {
            let code = args.iter().rev().fold(0, |acc, &v| acc * self.size + val[v]);
            self.masks[*p] >> code & 1 == 1
        })
    }

    fn satisfies(&self, atoms: &[(usize, Vec<usize>)], n_context: usize, n_vars: usize, env: &[usize]) -> bool {
        let mut val = env.to_vec();
        val.resize(n_vars, 0);
        fn go(k: usize, val: &mut Vec<usize>, m: &Packed<'_>, atoms: &[(usize, Vec<usize>)]) -> bool {
            if k == val.len() {
                return m.holds(atoms, val);
            }
            (0..m.size).any(|x| {
                val[k] = x;
                go(k + 1, val, m, atoms)
            })
        }
        go(n_context, &mut val, self, atoms)
    }

    fn unpack(&self) -> Model {
        let mut relations = BTreeMap::new();
        for (i, &(p, ar)) in self.preds.iter().enumerate() {
            let mut set = BTreeSet::new();
            for code in 0..self.size.pow(ar as u32) {
                if self.masks[i] >> code & 1 == 1 {
                    let mut t = Vec::with_capacity(ar);
                    let mut c = code;
                    for _ in 0..ar {
                        t.push(c % self.size);
                        c /= self.size;
                    }
                    set.insert(t);
                }
            }
            relations.insert(p.to_string(), set);
        }
        Model { size: self.size, relations }
    }
}

fn resolve(sig: &Signature, phi: &ExistentialFormula) -> Result<Vec<(usize, Vec<usize>)>> {
    phi.atoms
        .iter()
        .map(|a| {
            let i = sig
                .predicates
                .keys()
                .position(|p| *p == a.pred)
                .ok_or_else(|| input(format!("{} is not in the signature", a.pred)))?;
            Ok((i, a.args.clone()))
        })
        .collect()
}

/// A model of at most `max_size` elements and an environment satisfying
/// `phi1` but not `phi2`, if one exists.
pub fn small_countermodel(
    sig: &Signature,
    phi1: &ExistentialFormula,
    phi2: &ExistentialFormula,
    max_size: usize,
) -> Result<Option<(Model, Vec<usize>)>> {
    if phi1.context != phi2.context {
        return Err(input("formulas live in different contexts"));
    }
    let (a1, a2) = (resolve(sig, phi1)?, resolve(sig, phi2)?);
    let preds: Vec<(&str, usize)> = sig.predicates.iter().map(|(p, &a)| (p.as_str(), a)).collect();
    let n = phi1.context.len();
    for size in 0..=max_size {
        if size == 0 && n > 0 {
            continue;
        }
        let widths: Vec<usize> = preds.iter().map(|&(_, a)| size.pow(a as u32)).collect();
        let total_bits: usize = widths.iter().sum();
        if widths.iter().any(|&w| w > 63) || total_bits > 24 {
            return Err(resource(format!("models of size {size} are too many to enumerate")));
        }
        for code in 0u64..1 << total_bits {
            let mut masks = Vec::with_capacity(widths.len());
            let mut shift = 0;
            for &w in &widths {
                masks.push(code >> shift & ((1u64 << w) - 1));
                shift += w;
            }
            let m = Packed { size, preds: preds.clone(), masks };
            let mut env = vec![0; n];
            loop {
                if m.satisfies(&a1, n, phi1.num_vars(), &env) && !m.satisfies(&a2, n, phi2.num_vars(), &env) {
                    return Ok(Some((m.unpack(), env)));
                }
                // Next environment in mixed radix.
                let mut i = 0;
                while i < n && env[i] + 1 == size {
                    env[i] = 0;
                    i += 1;
                }
                if i == n {
                    break;
                }
                env[i] += 1;
            }
        }
    }
    Ok(None)
}

/// Shape of randomly drawn formula pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SampleBounds {
    pub max_context: usize,
    /// Context plus bound variables of each formula.
    pub max_vars: usize,
    pub max_atoms: usize,
}

fn random_formula(rng: &mut ChaCha8Rng, sig: &Signature, context: &[String], bounds: &SampleBounds) -> ExistentialFormula {
    let n = context.len();
    let bound = rng.gen_range(0..=bounds.max_vars - n);
    let vars = n + bound;
    let preds: Vec<(&String, &usize)> = sig.predicates.iter().collect();
    let mut atoms = BTreeSet::new();
    if vars > 0 || preds.iter().any(|(_, &a)| a == 0) {
        for _ in 0..rng.gen_range(0..=bounds.max_atoms) {
            let (p, &ar) = preds[rng.gen_range(0..preds.len())];
            if vars == 0 && ar > 0 {
                continue;
            }
            atoms.insert(Atom { pred: p.clone(), args: (0..ar).map(|_| rng.gen_range(0..vars)).collect() });
        }
    }
    ExistentialFormula { context: context.to_vec(), bound, atoms }.canonical()
}

/// Seeded pairs in a shared context. Every other pair derives its right side
/// from the left by dropping atoms and abstracting a variable, so contained
/// and non-contained pairs are both well represented.
pub fn sample_pairs(sig: &Signature, seed: u64, count: usize, bounds: &SampleBounds) -> Vec<(ExistentialFormula, ExistentialFormula)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let n = rng.gen_range(0..=bounds.max_context.min(bounds.max_vars));
        let context: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        let lhs = random_formula(&mut rng, sig, &context, bounds);
        let rhs = if i % 2 == 0 {
            random_formula(&mut rng, sig, &context, bounds)
        } else {
            generalize(&mut rng, &lhs, bounds)
        };
        out.push((lhs, rhs));
    }
    out
}

fn generalize(rng: &mut ChaCha8Rng, phi: &ExistentialFormula, bounds: &SampleBounds) -> ExistentialFormula {
    let mut atoms: BTreeSet<Atom> = phi.atoms.iter().filter(|_| rng.gen_bool(0.7)).cloned().collect();
    let mut bound = phi.bound;
    let n = phi.context.len();
    if phi.num_vars() < bounds.max_vars && n > 0 && rng.gen_bool(0.5) {
        // Replace some occurrences of a context variable by a fresh bound one.
        let x = rng.gen_range(0..n);
        let fresh = phi.num_vars();
        bound += 1;
        atoms = atoms
            .into_iter()
            .map(|a| Atom {
                pred: a.pred,
                args: a.args.into_iter().map(|v| if v == x && rng.gen_bool(0.6) { fresh } else { v }).collect(),
            })
            .collect();
    }
    ExistentialFormula { context: phi.context.clone(), bound, atoms }.canonical()
}

/// Counts from a containment cross-check.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CqReport {
    pub pairs: usize,
    pub contained: usize,
}

/// Homomorphism search agrees with the canonical-model test and with
/// exhaustive model checking up to `max_model` elements, on every pair.
pub fn check_cq_pairs(sig: &Signature, pairs: &[(ExistentialFormula, ExistentialFormula)], max_model: usize) -> Result<CqReport> {
    let mut report = CqReport::default();
    for (l, r) in pairs {
        let hom = cq_contains(l, r)?;
        let (model, env) = canonical_model(sig, l);
        let canonical = eval_on_model(r, &model, &env)?;
        let counter = small_countermodel(sig, l, r, max_model)?;
        let witness = json!({ "lhs": l.to_string(), "rhs": r.to_string(), "context": l.context });
        if hom.is_some() != canonical {
            return Err(violation("cq-canonical-model", format!("{l} vs {r}"), witness));
        }
        if hom.is_some() != counter.is_none() {
            return Err(violation("cq-small-models", format!("{l} vs {r}"), witness));
        }
        report.pairs += 1;
        report.contained += usize::from(hom.is_some());
    }
    Ok(report)
}

/// The syntactic doctrine truncated to contexts of at most `max_vars`
/// variables: contexts are the powers `X^0 … X^max_vars` with arrows the
/// variable substitutions, and the fiber over `n` variables is all atom sets
/// over `v1 … vn`, ordered by reverse inclusion.
#[derive(Clone, Debug)]
pub struct SyntacticDoctrine {
    pub signature: Signature,
    pub doctrine: Doctrine,
    pub lambda: ArrowClass,
    atoms: Vec<Vec<Atom>>,
    index: Vec<HashMap<Atom, usize>>,
}

/// Every atom over `n` variables, by predicate then arguments.
pub fn atoms_over(sig: &Signature, n: usize) -> Vec<Atom> {
    let mut out = Vec::new();
    for (p, &ar) in &sig.predicates {
        let count = n.pow(ar as u32);
        for code in 0..count {
            let mut args = Vec::with_capacity(ar);
            let mut c = code;
            for _ in 0..ar {
                args.push(c % n.max(1));
                c /= n.max(1);
            }
            args.reverse();
            out.push(Atom { pred: p.clone(), args });
        }
    }
    out.sort();
    out
}

fn context_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("v{i}")).collect()
}

pub fn syntactic_doctrine(sig: &Signature, max_vars: usize) -> Result<SyntacticDoctrine> {
    let names: Vec<String> = (0..=max_vars).map(|n| format!("({})", context_names(n).join(","))).collect();
    let base = Arc::new(Category::powers(max_vars, Literals { constants: false, negations: false }, names)?);
    let atoms: Vec<Vec<Atom>> = (0..=max_vars).map(|n| atoms_over(sig, n)).collect();
    if atoms.iter().any(|a| a.len() > 62) {
        return Err(resource("too many atoms for the truncated syntactic doctrine"));
    }
    let index: Vec<HashMap<Atom, usize>> =
        atoms.iter().map(|v| v.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect()).collect();
    let fibers = atoms
        .iter()
        .enumerate()
        .map(|(n, v)| {
            let vars = context_names(n);
            let labels = v
                .iter()
                .map(|a| {
                    let args: Vec<&str> = a.args.iter().map(|&i| vars[i].as_str()).collect();
                    format!("{}({})", a.pred, args.join(","))
                })
                .collect();
            Lattice::Subsets { points: v.len(), dual: true, labels }
        })
        .collect();
    let (b, at, ix) = (base.clone(), atoms.clone(), index.clone());
    let reindex = Reindex::Computed(Arc::new(move |f, beta: Elem| {
        let (src, tgt) = (b.src(f), b.tgt(f));
        let map = b.substitution(f).expect("substitution arrow");
        let mut out = 0;
        for (i, a) in at[tgt].iter().enumerate() {
            if beta >> i & 1 == 1 {
                let img = Atom { pred: a.pred.clone(), args: a.args.iter().map(|&v| map[v]).collect() };
                out |= 1 << ix[src][&img];
            }
        }
        out
    }));
    let doctrine = Doctrine::new(base.clone(), fibers, reindex)?;
    let lambda = projection_class(&base);
    Ok(SyntacticDoctrine { signature: sig.clone(), doctrine, lambda, atoms, index })
}

impl SyntacticDoctrine {
    /// The completion element `(pr: X^{n+k} → X^n, matrix)` of a formula.
    pub fn raw(&self, phi: &ExistentialFormula) -> Result<Raw> {
        let c = self.doctrine.base();
        let (n, k) = (phi.context.len(), phi.bound);
        if n + k >= self.atoms.len() {
            return Err(input(format!("formula needs {} variables, the truncation has {}", n + k, self.atoms.len() - 1)));
        }
        let pr = c.product(n, k)?.pr1;
        let mut mask = 0;
        for a in &phi.atoms {
            let i = self.index[n + k]
                .get(a)
                .ok_or_else(|| input(format!("{} is not in the signature", a.pred)))?;
            mask |= 1 << i;
        }
        Ok((pr, mask))
    }

    pub fn atoms(&self, n: Obj) -> &[Atom] {
        &self.atoms[n]
    }
}

/// Bounds of the enumerated fragment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FragmentBounds {
    pub signature: Signature,
    pub max_context: usize,
    pub max_bound: usize,
    pub max_atoms: usize,
}

/// Every formula of the fragment in context `v1 … vn`, deduplicated by normal form.
pub fn enumerate_fragment(b: &FragmentBounds, n: usize) -> Vec<ExistentialFormula> {
    let context = context_names(n);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for k in 0..=b.max_bound {
        let all = atoms_over(&b.signature, n + k);
        let mut chosen: Vec<usize> = Vec::new();
        fn rec(
            start: usize,
            all: &[Atom],
            chosen: &mut Vec<usize>,
            max: usize,
            emit: &mut dyn FnMut(&[usize]),
        ) {
            emit(chosen);
            if chosen.len() == max {
                return;
            }
            for i in start..all.len() {
                chosen.push(i);
                rec(i + 1, all, chosen, max, emit);
                chosen.pop();
            }
        }
        rec(0, &all, &mut chosen, b.max_atoms, &mut |sel| {
            let phi = ExistentialFormula {
                context: context.clone(),
                bound: k,
                atoms: sel.iter().map(|&i| all[i].clone()).collect(),
            }
            .canonical();
            let key = (phi.bound, phi.atoms.iter().cloned().collect::<Vec<_>>());
            if seen.insert(key) {
                out.push(phi);
            }
        });
    }
    out
}

/// Outcome of comparing the completion order with containment.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CompareReport {
    pub formulas: Vec<usize>,
    pub classes: Vec<usize>,
    pub pairs: usize,
    pub contained: usize,
}

/// On every pair of fragment formulas in a shared context, containment equals
/// the completion order: both the raw order and the order of their classes in
/// the completion fiber built over the truncated syntactic doctrine.
pub fn compare_with_completion(b: &FragmentBounds, budget: usize) -> Result<CompareReport> {
    let syn = syntactic_doctrine(&b.signature, b.max_context + b.max_bound)?;
    let ctx = Ctx::new(&syn.doctrine, &syn.lambda);
    let mut report = CompareReport::default();
    let fragments: Vec<Vec<ExistentialFormula>> = (0..=b.max_context).map(|n| enumerate_fragment(b, n)).collect();
    let pairs: usize = fragments.iter().map(|f| f.len() * f.len()).sum();
    if pairs > budget {
        return Err(resource(format!("{pairs} formula pairs exceed the budget of {budget}")));
    }
    for (n, formulas) in fragments.iter().enumerate() {
        let classes = quotient_fiber(&ctx, n, budget)?;
        report.formulas.push(formulas.len());
        report.classes.push(classes.len());
        let raws: Vec<Raw> = formulas.iter().map(|phi| syn.raw(phi)).collect::<Result<_>>()?;
        for (i, x) in formulas.iter().enumerate() {
            for (j, y) in formulas.iter().enumerate() {
                let cq = cq_contains(x, y)?.is_some();
                let raw = ctx.leq(raws[i], raws[j]).is_some();
                let (ci, cj) = (classes.class(raws[i]), classes.class(raws[j]));
                let class = match (ci, cj) {
                    (Some(ci), Some(cj)) => classes.leq(ci, cj),
                    _ => return Err(input("fragment formula outside the completion fiber")),
                };
                if cq != raw || cq != class {
                    return Err(violation(
                        "syntactic-isomorphism",
                        format!("{x} vs {y}: containment {cq}, completion order {raw}, class order {class}"),
                        json!({ "lhs": x.to_string(), "rhs": y.to_string(), "context": x.context }),
                    ));
                }
                report.pairs += 1;
                report.contained += usize::from(cq);
            }
        }
    }
    Ok(report)
}

/// Containment against the raw completion order on sampled pairs, for
/// fragments too large to quotient.
pub fn compare_sampled(sig: &Signature, pairs: &[(ExistentialFormula, ExistentialFormula)]) -> Result<CompareReport> {
    let max_vars = pairs.iter().map(|(l, r)| l.num_vars().max(r.num_vars())).max().unwrap_or(0);
    let syn = syntactic_doctrine(sig, max_vars)?;
    let ctx = Ctx::new(&syn.doctrine, &syn.lambda);
    let mut report = CompareReport::default();
    for (x, y) in pairs {
        let cq = cq_contains(x, y)?.is_some();
        let raw = ctx.leq(syn.raw(x)?, syn.raw(y)?).is_some();
        if cq != raw {
            return Err(violation(
                "syntactic-isomorphism",
                format!("{x} vs {y}: containment {cq}, completion order {raw}"),
                json!({ "lhs": x.to_string(), "rhs": y.to_string(), "context": x.context }),
            ));
        }
        report.pairs += 1;
        report.contained += usize::from(cq);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doctrine::check_primary;

    fn ctx(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn graph() -> Signature {
        Signature::new(&[("E", 2), ("R", 1)])
    }

    #[test]
    fn parse_examples() {
        let sig = graph();
        let top = parse_formula(&sig, "T", &ctx(&["x"])).unwrap();
        assert!(top.atoms.is_empty() && top.is_conjunctive());
        let two = parse_conjunctive(&sig, "E(x,y) & E(y,y)", &ctx(&["x", "y"])).unwrap();
        assert_eq!(two.atoms.len(), 2);
        let ex = parse_formula(&sig, "exists y. E(x,y) & R(y)", &ctx(&["x"])).unwrap();
        assert_eq!(ex.bound, 1);
        assert_eq!(ex.to_string(), "exists y1. E(x,y1) & R(y1)");
        for phi in [top, ex, ExistentialFormula::conjunctive(two)] {
            assert_eq!(parse_formula(&sig, &phi.to_string(), &phi.context).unwrap(), phi);
        }
    }

    #[test]
    fn parse_errors_are_distinct_and_positioned() {
        let sig = graph();
        let c = ctx(&["x"]);
        let kind = |t: &str| {
            let toks = lex(t).unwrap();
            let mut p = Parser { sig: &sig, toks, pos: 0, end: t.len() + 1, vars: c.clone(), n_context: 1, scope: vec![], atoms: BTreeSet::new() };
            p.formula().unwrap_err()
        };
        assert_eq!(kind("Q(x)"), ParseError { kind: ParseErrorKind::UnknownPredicate("Q".into()), column: 1 });
        assert!(matches!(kind("R(x,x)").kind, ParseErrorKind::ArityMismatch { expected: 1, found: 2, .. }));
        assert_eq!(kind("R(x) & R(z)"), ParseError { kind: ParseErrorKind::UnboundVariable("z".into()), column: 10 });
        assert!(matches!(kind("exists x. R(x)").kind, ParseErrorKind::DuplicateBoundVariable(_)));
        assert!(matches!(kind("exists y. R(y) & exists y. R(y)").kind, ParseErrorKind::DuplicateBoundVariable(_)));
        let err = parse_formula(&sig, "R(x) R(x)", &c).unwrap_err();
        assert!(err.to_string().contains("column 6"), "{err}");
        // A bound variable is out of scope after its conjunct group ends only
        // at the end of the formula, since the body extends to the right.
        assert!(parse_formula(&sig, "exists y. R(y) & E(x,y)", &c).is_ok());
    }

    #[test]
    fn conjunctive_entailment() {
        let sig = Signature::new(&[("R", 1), ("S", 1)]);
        let c = ctx(&["x"]);
        let rs = parse_conjunctive(&sig, "R(x) & S(x)", &c).unwrap();
        let r = parse_conjunctive(&sig, "R(x)", &c).unwrap();
        let s = parse_conjunctive(&sig, "S(x)", &c).unwrap();
        let top = parse_conjunctive(&sig, "T", &c).unwrap();
        assert!(entails_conj(&rs, &r).unwrap());
        assert!(entails_conj(&r, &top).unwrap());
        assert!(!entails_conj(&r, &s).unwrap());
        // The countermodel R = {0}, S = ∅ separates them.
        let m = Model { size: 1, relations: [("R".to_string(), [vec![0]].into()), ("S".to_string(), BTreeSet::new())].into() };
        let (re, se) = (ExistentialFormula::conjunctive(r.clone()), ExistentialFormula::conjunctive(s));
        assert!(eval_on_model(&re, &m, &[0]).unwrap() && !eval_on_model(&se, &m, &[0]).unwrap());
        assert!(entails_conj(&r, &parse_conjunctive(&sig, "T", &ctx(&["y"])).unwrap()).is_err());
    }

    #[test]
    fn substitution_examples() {
        let sig = graph();
        let xy = ctx(&["x", "y"]);
        let phi = parse_formula(&sig, "E(x,y)", &xy).unwrap();
        assert_eq!(reindex_syntactic(&Substitution::identity(xy.clone()), &phi).unwrap(), phi);
        let sigma = Substitution::new(ctx(&["x"]), xy, vec![0, 0]).unwrap();
        assert_eq!(reindex_syntactic(&sigma, &phi).unwrap().to_string(), "E(x,x)");
    }

    #[test]
    fn containment_examples() {
        let sig = graph();
        let c = ctx(&["x"]);
        let loopy = parse_formula(&sig, "exists y. E(x,y) & E(y,y)", &c).unwrap();
        let edge = parse_formula(&sig, "exists z. E(x,z)", &c).unwrap();
        let h = cq_contains(&loopy, &edge).unwrap().unwrap();
        assert_eq!(h, vec![0, 1]);
        assert_eq!(describe_hom(&loopy, &edge, &h), "y1↦y1");
        // Independent count: of the 2 targets for z only y works.
        let working: Vec<usize> = (0..2).filter(|&t| loopy.atoms.contains(&Atom { pred: "E".into(), args: vec![0, t] })).collect();
        assert_eq!(working, vec![1]);
        assert_eq!(cq_contains(&edge, &loopy).unwrap(), None);
        let (m, env) = canonical_model(&sig, &edge);
        assert_eq!(m.relations["E"], [vec![0, 1]].into());
        assert!(eval_on_model(&edge, &m, &env).unwrap());
        assert!(!eval_on_model(&loopy, &m, &env).unwrap());
        assert!(cq_contains(&loopy, &loopy).unwrap().is_some());
    }

    #[test]
    fn evaluation_examples() {
        let sig = graph();
        let c = ctx(&["x"]);
        let phi = parse_formula(&sig, "exists y. E(x,y)", &c).unwrap();
        let m = Model { size: 2, relations: [("E".to_string(), [vec![0, 1]].into()), ("R".to_string(), BTreeSet::new())].into() };
        assert!(eval_on_model(&phi, &m, &[0]).unwrap());
        assert!(!eval_on_model(&phi, &m, &[1]).unwrap());
        assert!(eval_on_model(&parse_formula(&sig, "T", &c).unwrap(), &m, &[1]).unwrap());
        assert!(eval_on_model(&phi, &m, &[]).is_err());
    }

    #[test]
    fn truncated_doctrine_is_primary() {
        let sig = Signature::new(&[("R", 1), ("S", 1)]);
        let syn = syntactic_doctrine(&sig, 2).unwrap();
        assert_eq!(check_primary(&syn.doctrine), Ok(()));
        assert_eq!(syn.doctrine.fiber(2).size(), 16);
    }

    #[test]
    fn empty_signature_collapses_nonempty_contexts() {
        let b = FragmentBounds { signature: Signature::default(), max_context: 2, max_bound: 1, max_atoms: 2 };
        let r = compare_with_completion(&b, 100_000).unwrap();
        // With no closed terms, ⊤ does not entail ∃y.⊤ in the empty context:
        // the empty model separates them. Every other context has one class.
        assert_eq!(r.classes, vec![2, 1, 1]);
        let top = ExistentialFormula { context: vec![], bound: 0, atoms: BTreeSet::new() };
        let some = ExistentialFormula { context: vec![], bound: 1, atoms: BTreeSet::new() };
        assert_eq!(cq_contains(&top, &some).unwrap(), None);
        let (m, env) = canonical_model(&Signature::default(), &top);
        assert_eq!(m.size, 0);
        assert!(!eval_on_model(&some, &m, &env).unwrap());
    }

    #[test]
    fn unary_fragment_agrees_with_completion() {
        let b = FragmentBounds { signature: Signature::new(&[("R", 1)]), max_context: 2, max_bound: 1, max_atoms: 2 };
        let r = compare_with_completion(&b, 1_000_000).unwrap();
        assert!(r.pairs > 0 && r.contained > 0 && r.contained < r.pairs);
    }

    #[test]
    fn sampled_graph_pairs_agree() {
        let sig = Signature::new(&[("E", 2)]);
        let bounds = SampleBounds { max_context: 1, max_vars: 3, max_atoms: 3 };
        let pairs = sample_pairs(&sig, 7, 200, &bounds);
        let r = compare_sampled(&sig, &pairs).unwrap();
        assert_eq!(r.pairs, 200);
        assert!(r.contained > 0);
    }
}
