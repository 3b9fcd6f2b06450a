//! Finite meet-semilattices with top. The order is always read off the meet.

use serde_json::json;

use crate::error::{input, resource, violation, Check, Result};

pub type Elem = usize;

/// Largest `size³` an exhaustive law check will attempt.
const CHECK_LIMIT: u128 = 1 << 30;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Lattice {
    /// Explicit meet table, row-major `meet[a * n + b]`.
    Table { names: Vec<String>, top: Elem, meet: Vec<Elem> },
    /// Subsets of `points` labelled points, as bitmasks. With `dual` unset
    /// the meet is intersection (a powerset); with `dual` set the meet is
    /// union and the top is the empty set (conjunctions of atoms).
    Subsets { points: usize, dual: bool, labels: Vec<String> },
}

impl Lattice {
    pub fn table(names: Vec<String>, top: Elem, meet: Vec<Elem>) -> Result<Lattice> {
        let n = names.len();
        if n == 0 {
            return Err(input("a fiber must contain a top element"));
        }
        if top >= n {
            return Err(input("top is not an element"));
        }
        if meet.len() != n * n || meet.iter().any(|&m| m >= n) {
            return Err(input("meet table is not a total map into the elements"));
        }
        Ok(Lattice::Table { names, top, meet })
    }

    /// The two-element chain `⊥ < ⊤`, elements `0 = ⊥`, `1 = ⊤`.
    pub fn chain(n: usize) -> Lattice {
        let names = match n {
            2 => vec!["bot".to_string(), "top".to_string()],
            3 => vec!["bot".to_string(), "mid".to_string(), "top".to_string()],
            _ => (0..n).map(|i| i.to_string()).collect(),
        };
        let meet = (0..n * n).map(|k| (k / n).min(k % n)).collect();
        Lattice::Table { names, top: n - 1, meet }
    }

    pub fn powerset(labels: Vec<String>) -> Lattice {
        Lattice::Subsets { points: labels.len(), dual: false, labels }
    }

    pub fn size(&self) -> usize {
        match self {
            Lattice::Table { names, .. } => names.len(),
            Lattice::Subsets { points, .. } => 1usize << points,
        }
    }

    pub fn elements(&self) -> std::ops::Range<Elem> {
        0..self.size()
    }

    pub fn contains(&self, a: Elem) -> bool {
        a < self.size()
    }

    pub fn top(&self) -> Elem {
        match self {
            Lattice::Table { top, .. } => *top,
            Lattice::Subsets { points, dual: false, .. } => (1usize << points) - 1,
            Lattice::Subsets { dual: true, .. } => 0,
        }
    }

    pub fn meet(&self, a: Elem, b: Elem) -> Elem {
        match self {
            Lattice::Table { names, meet, .. } => meet[a * names.len() + b],
            Lattice::Subsets { dual: false, .. } => a & b,
            Lattice::Subsets { dual: true, .. } => a | b,
        }
    }

    pub fn meet_all(&self, xs: impl IntoIterator<Item = Elem>) -> Elem {
        xs.into_iter().fold(self.top(), |acc, x| self.meet(acc, x))
    }

    pub fn leq(&self, a: Elem, b: Elem) -> bool {
        self.meet(a, b) == a
    }

    pub fn try_leq(&self, a: Elem, b: Elem) -> Result<bool> {
        for x in [a, b] {
            if !self.contains(x) {
                return Err(input(format!("{x} is not an element of the lattice")));
            }
        }
        Ok(self.leq(a, b))
    }

    pub fn name(&self, a: Elem) -> String {
        match self {
            Lattice::Table { names, .. } => names[a].clone(),
            Lattice::Subsets { points, dual, labels } => {
                let parts: Vec<&str> =
                    (0..*points).filter(|i| a >> i & 1 == 1).map(|i| labels[i].as_str()).collect();
                if *dual {
                    if parts.is_empty() {
                        "T".to_string()
                    } else {
                        parts.join(" & ")
                    }
                } else {
                    format!("{{{}}}", parts.join(","))
                }
            }
        }
    }

    pub fn by_name(&self, name: &str) -> Option<Elem> {
        match self {
            Lattice::Table { names, .. } => names.iter().position(|n| n == name),
            Lattice::Subsets { points, dual, labels } => {
                let body = if *dual {
                    if name.trim() == "T" {
                        return Some(0);
                    }
                    name.to_string()
                } else {
                    name.trim().strip_prefix('{')?.strip_suffix('}')?.to_string()
                };
                let sep = if *dual { '&' } else { ',' };
                let mut mask = 0usize;
                if body.trim().is_empty() {
                    return Some(mask);
                }
                // Point labels may themselves contain commas, e.g. `(0,1)`.
                let mut rest = body.trim();
                while !rest.is_empty() {
                    let i = (0..*points)
                        .filter(|&i| rest.starts_with(labels[i].as_str()))
                        .max_by_key(|&i| labels[i].len())?;
                    mask |= 1 << i;
                    rest = rest[labels[i].len()..].trim_start();
                    if let Some(r) = rest.strip_prefix(sep) {
                        rest = r.trim_start();
                    } else if !rest.is_empty() {
                        return None;
                    }
                }
                Some(mask)
            }
        }
    }
}

/// Exhaustive check of the semilattice laws and of the induced partial order.
pub fn check_semilattice(l: &Lattice) -> Check {
    let n = l.size();
    if (n as u128).pow(3) > CHECK_LIMIT {
        return Err(resource(format!("lattice with {n} elements is too large to check")));
    }
    let top = l.top();
    for a in l.elements() {
        if l.meet(a, a) != a {
            return Err(violation("meet-idempotent", format!("{} ^ itself differs", l.name(a)), json!({ "a": l.name(a) })));
        }
        if l.meet(a, top) != a {
            return Err(violation("meet-unit", format!("{} ^ top differs", l.name(a)), json!({ "a": l.name(a) })));
        }
        for b in l.elements() {
            if l.meet(a, b) != l.meet(b, a) {
                return Err(violation(
                    "meet-commutative",
                    format!("{} ^ {} is not symmetric", l.name(a), l.name(b)),
                    json!({ "a": l.name(a), "b": l.name(b) }),
                ));
            }
            if a != b && l.leq(a, b) && l.leq(b, a) {
                return Err(violation(
                    "order-antisymmetric",
                    format!("{} and {} are mutually below", l.name(a), l.name(b)),
                    json!({ "a": l.name(a), "b": l.name(b) }),
                ));
            }
            for c in l.elements() {
                if l.meet(l.meet(a, b), c) != l.meet(a, l.meet(b, c)) {
                    return Err(violation(
                        "meet-associative",
                        format!("meet of {}, {}, {} depends on bracketing", l.name(a), l.name(b), l.name(c)),
                        json!({ "a": l.name(a), "b": l.name(b), "c": l.name(c) }),
                    ));
                }
            }
        }
    }
    Ok(())
}

/// A map of fibers preserves top and binary meets.
pub fn check_map(src: &Lattice, tgt: &Lattice, h: &dyn Fn(Elem) -> Elem) -> Check {
    if (src.size() as u128).pow(2) > CHECK_LIMIT {
        return Err(resource("map domain too large to check"));
    }
    for a in src.elements() {
        if !tgt.contains(h(a)) {
            return Err(input(format!("image of {} is not an element", src.name(a))));
        }
    }
    if h(src.top()) != tgt.top() {
        return Err(violation(
            "map-top",
            format!("top is sent to {}", tgt.name(h(src.top()))),
            json!({ "image": tgt.name(h(src.top())) }),
        ));
    }
    for a in src.elements() {
        for b in src.elements() {
            let lhs = h(src.meet(a, b));
            let rhs = tgt.meet(h(a), h(b));
            if lhs != rhs {
                return Err(violation(
                    "map-meet",
                    format!(
                        "image of {} ^ {} is {} but the meet of images is {}",
                        src.name(a),
                        src.name(b),
                        tgt.name(lhs),
                        tgt.name(rhs)
                    ),
                    json!({ "a": src.name(a), "b": src.name(b) }),
                ));
            }
        }
    }
    Ok(())
}

/// Monotonicity, checked directly rather than inferred from meet preservation.
pub fn check_monotone(src: &Lattice, tgt: &Lattice, h: &dyn Fn(Elem) -> Elem) -> Check {
    for a in src.elements() {
        for b in src.elements() {
            if src.leq(a, b) && !tgt.leq(h(a), h(b)) {
                return Err(violation(
                    "monotone",
                    format!("{} <= {} but images are not ordered", src.name(a), src.name(b)),
                    json!({ "a": src.name(a), "b": src.name(b) }),
                ));
            }
        }
    }
    Ok(())
}
