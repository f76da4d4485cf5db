//! Finite lattice expansions: abstract algebras given by tables, complex
//! algebras of frames, normality, homomorphisms and isomorphism search.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bitset::{PointSet, MAX_POINTS};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::polarity::{Concept, Polarity, Sort};
use crate::syntax::{json_error, signature_from_value, Family, Signature, Variance};

/// Largest operation table built eagerly.
pub const MAX_TABLE: usize = 1 << 22;

/// An `n`-ary operation on `0..size`, tabulated in mixed radix with the
/// first argument most significant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpTable {
    pub arity: usize,
    pub size: usize,
    pub table: Vec<usize>,
}

impl OpTable {
    pub fn index(&self, args: &[usize]) -> usize {
        debug_assert_eq!(args.len(), self.arity);
        args.iter().fold(0, |acc, &a| acc * self.size + a)
    }

    pub fn apply(&self, args: &[usize]) -> usize {
        self.table[self.index(args)]
    }

    /// Tabulates `f` over all argument tuples.
    pub fn tabulate(arity: usize, size: usize, mut f: impl FnMut(&[usize]) -> Result<usize>) -> Result<Self> {
        let len = table_len(arity, size)?;
        let mut table = Vec::with_capacity(len);
        let mut args = vec![0; arity];
        for _ in 0..len {
            table.push(f(&args)?);
            for k in (0..arity).rev() {
                args[k] += 1;
                if args[k] < size {
                    break;
                }
                args[k] = 0;
            }
        }
        Ok(OpTable { arity, size, table })
    }
}

fn table_len(arity: usize, size: usize) -> Result<usize> {
    let len = (0..arity).try_fold(1usize, |acc, _| acc.checked_mul(size));
    match len {
        Some(l) if l <= MAX_TABLE => Ok(l),
        _ => Err(Error::CapExceeded {
            what: "operation table",
            required: (size as u128).saturating_pow(arity as u32),
            cap: MAX_TABLE as u128,
        }),
    }
}

/// Visits every tuple in `0..size` of the given length, lexicographically.
pub fn for_each_args(arity: usize, size: usize, mut visit: impl FnMut(&[usize]) -> bool) -> bool {
    if arity > 0 && size == 0 {
        return true;
    }
    let mut args = vec![0; arity];
    loop {
        if !visit(&args) {
            return false;
        }
        let mut k = arity;
        loop {
            if k == 0 {
                return true;
            }
            k -= 1;
            args[k] += 1;
            if args[k] < size {
                break;
            }
            args[k] = 0;
        }
    }
}

/// A finite bounded lattice on `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    /// `up[a] = {b | a ≤ b}`.
    up: Vec<PointSet>,
    /// `down[a] = {b | b ≤ a}`.
    down: Vec<PointSet>,
    meet: Vec<usize>,
    join: Vec<usize>,
    bottom: usize,
    top: usize,
}

impl Lattice {
    /// Builds the lattice from an order relation given as `leq(a, b)`,
    /// which must be a partial order with all binary meets and joins.
    pub fn from_order(n: usize, leq: impl Fn(usize, usize) -> bool) -> Result<Self> {
        if n == 0 {
            return Err(Error::Algebra("a lattice needs at least one element".into()));
        }
        if n > MAX_POINTS {
            return Err(Error::Size(format!("{n} elements, at most {MAX_POINTS} supported")));
        }
        let mut up = vec![PointSet::EMPTY; n];
        let mut down = vec![PointSet::EMPTY; n];
        for a in 0..n {
            for b in 0..n {
                if leq(a, b) {
                    up[a].insert(b);
                    down[b].insert(a);
                }
            }
        }
        for a in 0..n {
            if !up[a].contains(a) {
                return Err(Error::Algebra(format!("order is not reflexive at element {a}")));
            }
            for b in up[a].iter() {
                if b != a && up[b].contains(a) {
                    return Err(Error::Algebra(format!("order is not antisymmetric at {a}, {b}")));
                }
                if !up[b].is_subset(up[a]) {
                    return Err(Error::Algebra(format!("order is not transitive through {b}")));
                }
            }
        }
        let mut meet = vec![0; n * n];
        let mut join = vec![0; n * n];
        for a in 0..n {
            for b in 0..n {
                let lower = down[a].intersect(down[b]);
                let glb = lower
                    .iter()
                    .find(|&c| lower.is_subset(down[c]))
                    .ok_or_else(|| Error::Algebra(format!("elements {a} and {b} have no meet")))?;
                let upper = up[a].intersect(up[b]);
                let lub = upper
                    .iter()
                    .find(|&c| upper.is_subset(up[c]))
                    .ok_or_else(|| Error::Algebra(format!("elements {a} and {b} have no join")))?;
                meet[a * n + b] = glb;
                join[a * n + b] = lub;
            }
        }
        let full = PointSet::full(n);
        let bottom = (0..n).find(|&a| up[a] == full).expect("finite lattice has a bottom");
        let top = (0..n).find(|&a| down[a] == full).expect("finite lattice has a top");
        Ok(Lattice {
            up,
            down,
            meet,
            join,
            bottom,
            top,
        })
    }

    pub fn len(&self) -> usize {
        self.up.len()
    }

    pub fn is_empty(&self) -> bool {
        self.up.is_empty()
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.up[a].contains(b)
    }

    pub fn up_set(&self, a: usize) -> PointSet {
        self.up[a]
    }

    pub fn down_set(&self, a: usize) -> PointSet {
        self.down[a]
    }

    pub fn meet(&self, a: usize, b: usize) -> usize {
        self.meet[a * self.len() + b]
    }

    pub fn join(&self, a: usize, b: usize) -> usize {
        self.join[a * self.len() + b]
    }

    pub fn bottom(&self) -> usize {
        self.bottom
    }

    pub fn top(&self) -> usize {
        self.top
    }
}

/// A finite LE-algebra: a bounded lattice with one table per connective.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteAlgebra {
    pub names: Vec<String>,
    pub lattice: Lattice,
    pub signature: Signature,
    /// One table per connective, in signature order.
    pub ops: Vec<OpTable>,
}

impl FiniteAlgebra {
    pub fn new(names: Vec<String>, lattice: Lattice, signature: Signature, ops: Vec<OpTable>) -> Result<Self> {
        let n = lattice.len();
        if names.len() != n {
            return Err(Error::Algebra(format!("{} names for {n} elements", names.len())));
        }
        if ops.len() != signature.connectives.len() {
            return Err(Error::Algebra(format!(
                "{} tables for {} connectives",
                ops.len(),
                signature.connectives.len()
            )));
        }
        for (c, t) in signature.connectives.iter().zip(&ops) {
            if t.arity != c.arity || t.size != n || t.table.len() != table_len(t.arity, n)? {
                return Err(Error::Algebra(format!("table of `{}` has the wrong shape", c.name)));
            }
            if t.table.iter().any(|&r| r >= n) {
                return Err(Error::Algebra(format!("table of `{}` leaves the carrier", c.name)));
            }
        }
        Ok(FiniteAlgebra {
            names,
            lattice,
            signature,
            ops,
        })
    }

    pub fn len(&self) -> usize {
        self.lattice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lattice.is_empty()
    }

    pub fn op(&self, index: usize, args: &[usize]) -> usize {
        self.ops[index].apply(args)
    }

    pub fn op_by_name(&self, name: &str, args: &[usize]) -> Result<usize> {
        let i = self.signature.position(name).ok_or_else(|| Error::UnknownName {
            kind: "connective",
            name: name.to_string(),
        })?;
        if args.len() != self.ops[i].arity || args.iter().any(|&a| a >= self.len()) {
            return Err(Error::Size(format!("bad arguments {args:?} for `{name}`")));
        }
        Ok(self.op(i, args))
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| json_error(&e))?;
        FiniteAlgebra::from_value(&value, text)
    }

    /// Reads `{"signature", "elements", "leq", "meet"?, "join"?, "ops"}`.
    /// `leq` pairs generate the order by reflexive-transitive closure;
    /// optional `meet`/`join` entries `[a, b, result]` are verified.
    pub fn from_value(value: &Value, text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            #[serde(default)]
            signature: Option<Value>,
            elements: Vec<String>,
            leq: Vec<(String, String)>,
            #[serde(default)]
            meet: Option<Vec<(String, String, String)>>,
            #[serde(default)]
            join: Option<Vec<(String, String, String)>>,
            #[serde(default)]
            ops: BTreeMap<String, Vec<Vec<String>>>,
        }
        let raw: Raw = serde_json::from_value(value.clone())
            .map_err(|e| Error::Algebra(format!("algebra file: {e}")))?;
        let signature = match &raw.signature {
            Some(v) => signature_from_value(v, text)?,
            None => Signature::default(),
        };
        let mut seen = std::collections::BTreeSet::new();
        if let Some(d) = raw.elements.iter().find(|e| !seen.insert(e.as_str())) {
            return Err(Error::Algebra(format!("duplicate element `{d}`")));
        }
        let n = raw.elements.len();
        if n > MAX_POINTS {
            return Err(Error::Size(format!("{n} elements, at most {MAX_POINTS} supported")));
        }
        let idx = |name: &str| -> Result<usize> {
            raw.elements
                .iter()
                .position(|e| e == name)
                .ok_or_else(|| Error::UnknownName {
                    kind: "element",
                    name: name.to_string(),
                })
        };
        let mut up = vec![PointSet::EMPTY; n];
        for a in 0..n {
            up[a].insert(a);
        }
        for (a, b) in &raw.leq {
            let (a, b) = (idx(a)?, idx(b)?);
            up[a].insert(b);
        }
        // Reflexive-transitive closure.
        loop {
            let mut changed = false;
            for a in 0..n {
                let closed = up[a].iter().fold(up[a], |acc, b| acc.union(up[b]));
                if closed != up[a] {
                    up[a] = closed;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let lattice = Lattice::from_order(n, |a, b| up[a].contains(b))?;
        for (label, given, get) in [
            ("meet", &raw.meet, Lattice::meet as fn(&Lattice, usize, usize) -> usize),
            ("join", &raw.join, Lattice::join),
        ] {
            for (a, b, r) in given.iter().flatten() {
                let (ia, ib, ir) = (idx(a)?, idx(b)?, idx(r)?);
                if get(&lattice, ia, ib) != ir {
                    return Err(Error::Algebra(format!(
                        "{label}({a}, {b}) is `{}` in the order, not `{r}`",
                        raw.elements[get(&lattice, ia, ib)]
                    )));
                }
            }
        }
        for name in raw.ops.keys() {
            if signature.get(name).is_none() {
                return Err(Error::UnknownName {
                    kind: "connective",
                    name: name.clone(),
                });
            }
        }
        let mut ops = Vec::new();
        for c in &signature.connectives {
            let len = table_len(c.arity, n)?;
            let mut table: Vec<Option<usize>> = vec![None; len];
            let probe = OpTable {
                arity: c.arity,
                size: n,
                table: Vec::new(),
            };
            for entry in raw.ops.get(&c.name).map(Vec::as_slice).unwrap_or(&[]) {
                if entry.len() != c.arity + 1 {
                    return Err(Error::Algebra(format!(
                        "entry {entry:?} of `{}` needs {} arguments and a result",
                        c.name, c.arity
                    )));
                }
                let ids = entry.iter().map(|e| idx(e)).collect::<Result<Vec<_>>>()?;
                let slot = &mut table[probe.index(&ids[..c.arity])];
                if slot.is_some_and(|r| r != ids[c.arity]) {
                    return Err(Error::Algebra(format!("conflicting entries for `{}` at {entry:?}", c.name)));
                }
                *slot = Some(ids[c.arity]);
            }
            let table = table
                .into_iter()
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| Error::Algebra(format!("table of `{}` is not total", c.name)))?;
            ops.push(OpTable {
                arity: c.arity,
                size: n,
                table,
            });
        }
        FiniteAlgebra::new(raw.elements, lattice, signature, ops)
    }

    pub fn to_value(&self) -> Value {
        let n = self.len();
        let name = |i: usize| self.names[i].clone();
        let leq: Vec<[String; 2]> = (0..n)
            .flat_map(|a| self.lattice.up_set(a).iter().map(move |b| (a, b)))
            .map(|(a, b)| [name(a), name(b)])
            .collect();
        let ops: serde_json::Map<String, Value> = self
            .signature
            .connectives
            .iter()
            .zip(&self.ops)
            .map(|(c, t)| {
                let mut entries = Vec::new();
                for_each_args(t.arity, n, |args| {
                    let mut e: Vec<String> = args.iter().map(|&a| name(a)).collect();
                    e.push(name(t.apply(args)));
                    entries.push(e);
                    true
                });
                (c.name.clone(), serde_json::to_value(entries).expect("strings serialize"))
            })
            .collect();
        serde_json::json!({
            "signature": self.signature,
            "elements": self.names,
            "leq": leq,
            "ops": ops,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("algebra serializes")
    }

    /// The chain `0 < 1 < .. < n-1` over the empty signature.
    pub fn chain(n: usize) -> Self {
        let lattice = Lattice::from_order(n, |a, b| a <= b).expect("chains are lattices");
        FiniteAlgebra::new(
            (0..n).map(|i| i.to_string()).collect(),
            lattice,
            Signature::default(),
            Vec::new(),
        )
        .expect("well formed")
    }
}

/// The complex algebra of a compatible frame: its concepts with the
/// operations induced by the relations.
#[derive(Debug, Clone)]
pub struct ComplexAlgebra {
    pub concepts: Vec<Concept>,
    index: HashMap<PointSet, usize>,
    pub algebra: FiniteAlgebra,
}

impl ComplexAlgebra {
    pub fn build(frame: &Frame, cap: usize) -> Result<Self> {
        frame.require_compatible()?;
        Self::build_unchecked(frame, cap)
    }

    /// Builds without checking compatibility; fails if some operation
    /// leaves the concepts.
    pub fn build_unchecked(frame: &Frame, cap: usize) -> Result<Self> {
        let p = &frame.polarity;
        let concepts = p.enumerate_concepts(cap)?;
        let index = Polarity::extent_index(&concepts);
        let n = concepts.len();
        if n > MAX_POINTS {
            return Err(Error::CapExceeded {
                what: "complex algebra elements",
                required: n as u128,
                cap: MAX_POINTS as u128,
            });
        }
        let lattice = Lattice::from_order(n, |a, b| concepts[a].extent.is_subset(concepts[b].extent))?;
        let mut ops = Vec::new();
        for (c, rel) in frame.signature.connectives.iter().zip(frame.relations()) {
            let table = OpTable::tabulate(c.arity, n, |args| {
                let sets: Vec<PointSet> = args
                    .iter()
                    .zip(&c.order_type)
                    .map(|(&a, v)| {
                        let k = &concepts[a];
                        match (c.family, v) {
                            (Family::G, Variance::One) | (Family::F, Variance::Partial) => k.intent,
                            (Family::G, Variance::Partial) | (Family::F, Variance::One) => k.extent,
                        }
                    })
                    .collect();
                let section = rel.section(0, &sets);
                let extent = match c.family {
                    Family::G => section,
                    Family::F => p.down(section),
                };
                let concept = match c.family {
                    Family::G => p.concept_of_extent(section),
                    Family::F => p.concept_of_intent(section),
                };
                let stable = match c.family {
                    Family::G => concept.extent == section,
                    Family::F => concept.intent == section,
                };
                if !stable {
                    return Err(Error::Incompatible(format!(
                        "R_{} section at {args:?} is not stable",
                        c.name
                    )));
                }
                Ok(index[&extent])
            })?;
            ops.push(table);
        }
        let names = (0..n).map(|i| format!("c{i}")).collect();
        let algebra = FiniteAlgebra::new(names, lattice, frame.signature.clone(), ops)?;
        Ok(ComplexAlgebra {
            concepts,
            index,
            algebra,
        })
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn index_of(&self, c: &Concept) -> Option<usize> {
        self.index.get(&c.extent).copied().filter(|&i| self.concepts[i] == *c)
    }

    pub fn index_of_extent(&self, extent: PointSet) -> Option<usize> {
        self.index.get(&extent).copied()
    }

    pub fn bottom(&self) -> usize {
        self.algebra.lattice.bottom()
    }

    pub fn top(&self) -> usize {
        self.algebra.lattice.top()
    }

    /// `{u}↓` as a concept index: the concept generated by a `U`-point.
    pub fn of_u_point(&self, p: &Polarity, u: usize) -> usize {
        self.index[&p.down(PointSet::singleton(u))]
    }

    /// `{w}↑↓` as a concept index: the concept generated by a `W`-point.
    pub fn of_w_point(&self, p: &Polarity, w: usize) -> usize {
        self.index[&p.closure(Sort::W, PointSet::singleton(w))]
    }
}

/// A failed normality equation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalityViolation {
    pub connective: String,
    pub coordinate: usize,
    /// Arguments at which the equation fails; `pair` holds the two values
    /// combined at `coordinate` (absent for the bound equation).
    pub args: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pair: Option<(String, String)>,
    pub expected: String,
    pub actual: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalityReport {
    pub normal: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub violation: Option<NormalityViolation>,
}

type BinOp = fn(&Lattice, usize, usize) -> usize;

/// Checks that every `f` preserves `∨`/`⊥` in its monotone coordinates and
/// sends `∧`/`⊤` to `∨`/`⊥` in its antitone ones, and dually for `g`.
pub fn verify_normality(a: &FiniteAlgebra) -> NormalityReport {
    let l = &a.lattice;
    let n = a.len();
    for (ci, c) in a.signature.connectives.iter().enumerate() {
        let t = &a.ops[ci];
        for (k, v) in c.order_type.iter().enumerate() {
            // Which lattice operation combines arguments at k, which one
            // combines results, and which bound goes in and comes out.
            let (arg_op, res_op, bound_in, bound_out): (BinOp, BinOp, usize, usize) =
                match (c.family, v) {
                    (Family::F, Variance::One) => (Lattice::join, Lattice::join, l.bottom(), l.bottom()),
                    (Family::F, Variance::Partial) => (Lattice::meet, Lattice::join, l.top(), l.bottom()),
                    (Family::G, Variance::One) => (Lattice::meet, Lattice::meet, l.top(), l.top()),
                    (Family::G, Variance::Partial) => (Lattice::join, Lattice::meet, l.bottom(), l.top()),
                };
            let mut found = None;
            for_each_args(c.arity - 1, n, |rest| {
                let mut args: Vec<usize> = rest.to_vec();
                args.insert(k, bound_in);
                let got = t.apply(&args);
                if got != bound_out {
                    found = Some((args, None, bound_out, got));
                    return false;
                }
                true
            });
            if found.is_none() {
                for_each_args(c.arity - 1, n, |rest| {
                    let mut args: Vec<usize> = rest.to_vec();
                    args.insert(k, 0);
                    for x in 0..n {
                        for y in 0..n {
                            args[k] = x;
                            let fx = t.apply(&args);
                            args[k] = y;
                            let fy = t.apply(&args);
                            args[k] = arg_op(l, x, y);
                            let got = t.apply(&args);
                            let expected = res_op(l, fx, fy);
                            if got != expected {
                                found = Some((args.clone(), Some((x, y)), expected, got));
                                return false;
                            }
                        }
                    }
                    true
                });
            }
            if let Some((args, pair, expected, actual)) = found {
                let name = |i: usize| a.names[i].clone();
                return NormalityReport {
                    normal: false,
                    violation: Some(NormalityViolation {
                        connective: c.name.clone(),
                        coordinate: k,
                        args: args.iter().map(|&i| name(i)).collect(),
                        pair: pair.map(|(x, y)| (name(x), name(y))),
                        expected: name(expected),
                        actual: name(actual),
                    }),
                };
            }
        }
    }
    NormalityReport {
        normal: true,
        violation: None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomomorphismReport {
    pub homomorphism: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failure: Option<String>,
}

impl HomomorphismReport {
    fn fail(msg: String) -> Self {
        HomomorphismReport {
            homomorphism: false,
            failure: Some(msg),
        }
    }
}

/// Checks that `h: A → B` preserves bounds, binary meets and joins (hence
/// all meets and joins, the algebras being finite) and every operation.
pub fn check_complete_homomorphism(h: &[usize], a: &FiniteAlgebra, b: &FiniteAlgebra) -> Result<HomomorphismReport> {
    if h.len() != a.len() {
        return Err(Error::Size(format!("map has {} entries for {} elements", h.len(), a.len())));
    }
    if let Some(&x) = h.iter().find(|&&x| x >= b.len()) {
        return Err(Error::Size(format!("map value {x} is outside the target")));
    }
    if a.signature != b.signature {
        return Err(Error::Signature("algebras have different signatures".into()));
    }
    let (la, lb) = (&a.lattice, &b.lattice);
    let na = |i: usize| a.names[i].as_str();
    if h[la.bottom()] != lb.bottom() {
        return Ok(HomomorphismReport::fail(format!("bottom {} is not sent to bottom", na(la.bottom()))));
    }
    if h[la.top()] != lb.top() {
        return Ok(HomomorphismReport::fail(format!("top {} is not sent to top", na(la.top()))));
    }
    for x in 0..a.len() {
        for y in 0..a.len() {
            if h[la.meet(x, y)] != lb.meet(h[x], h[y]) {
                return Ok(HomomorphismReport::fail(format!("meet of {} and {} is not preserved", na(x), na(y))));
            }
            if h[la.join(x, y)] != lb.join(h[x], h[y]) {
                return Ok(HomomorphismReport::fail(format!("join of {} and {} is not preserved", na(x), na(y))));
            }
        }
    }
    for (ci, c) in a.signature.connectives.iter().enumerate() {
        let mut bad = None;
        for_each_args(c.arity, a.len(), |args| {
            let image: Vec<usize> = args.iter().map(|&x| h[x]).collect();
            if h[a.op(ci, args)] != b.op(ci, &image) {
                bad = Some(args.to_vec());
                return false;
            }
            true
        });
        if let Some(args) = bad {
            let shown: Vec<&str> = args.iter().map(|&x| na(x)).collect();
            return Ok(HomomorphismReport::fail(format!(
                "`{}` is not preserved at ({})",
                c.name,
                shown.join(", ")
            )));
        }
    }
    Ok(HomomorphismReport {
        homomorphism: true,
        failure: None,
    })
}

/// Elements in increasing order of down-set size, each paired with two
/// earlier elements whose join it is, when such a pair exists.
fn join_plan(l: &Lattice) -> Vec<(usize, Option<(usize, usize)>)> {
    let mut order: Vec<usize> = (0..l.len()).collect();
    order.sort_by_key(|&x| (l.down_set(x).len(), x));
    let mut placed = PointSet::EMPTY;
    let mut plan = Vec::with_capacity(order.len());
    for &x in &order {
        let below = placed.intersect(l.down_set(x));
        let mut pair = None;
        'outer: for a in below.iter() {
            for b in below.iter() {
                if l.join(a, b) == x {
                    pair = Some((a, b));
                    break 'outer;
                }
            }
        }
        plan.push((x, pair));
        placed.insert(x);
    }
    plan
}

/// Searches for maps `A → B` by backtracking: join-decomposable elements
/// are forced, the rest range over `candidates`, and partial maps must
/// preserve order (and reflect it when `reflect`). Calls `accept` on every
/// complete map that passes `check`; stops when `accept` returns false.
fn search_maps(
    a: &FiniteAlgebra,
    b: &FiniteAlgebra,
    reflect: bool,
    injective: bool,
    candidates: &dyn Fn(usize) -> PointSet,
    accept: &mut dyn FnMut(&[usize]) -> bool,
    check: &dyn Fn(&[usize]) -> bool,
) {
    let plan = join_plan(&a.lattice);
    let mut map = vec![usize::MAX; a.len()];
    fn consistent(a: &FiniteAlgebra, b: &FiniteAlgebra, map: &[usize], x: usize, y: usize, reflect: bool, used: PointSet, injective: bool) -> bool {
        if injective && used.contains(y) {
            return false;
        }
        for (z, &img) in map.iter().enumerate() {
            if img == usize::MAX {
                continue;
            }
            let ab = a.lattice.leq(z, x);
            let ba = a.lattice.leq(x, z);
            if ab && !b.lattice.leq(img, y) || ba && !b.lattice.leq(y, img) {
                return false;
            }
            if reflect && (!ab && b.lattice.leq(img, y) || !ba && b.lattice.leq(y, img)) {
                return false;
            }
        }
        true
    }
    #[allow(clippy::too_many_arguments)]
    fn go(
        depth: usize,
        plan: &[(usize, Option<(usize, usize)>)],
        a: &FiniteAlgebra,
        b: &FiniteAlgebra,
        reflect: bool,
        injective: bool,
        used: PointSet,
        map: &mut Vec<usize>,
        candidates: &dyn Fn(usize) -> PointSet,
        accept: &mut dyn FnMut(&[usize]) -> bool,
        check: &dyn Fn(&[usize]) -> bool,
    ) -> bool {
        if depth == plan.len() {
            if check(map) {
                return accept(map);
            }
            return true;
        }
        let (x, pair) = plan[depth];
        let options = match pair {
            Some((p, q)) => PointSet::singleton(b.lattice.join(map[p], map[q])),
            None => candidates(x),
        };
        for y in options.iter() {
            if consistent(a, b, map, x, y, reflect, used, injective) {
                map[x] = y;
                let keep = go(depth + 1, plan, a, b, reflect, injective, used.with(y), map, candidates, accept, check);
                map[x] = usize::MAX;
                if !keep {
                    return false;
                }
            }
        }
        true
    }
    go(0, &plan, a, b, reflect, injective, PointSet::EMPTY, &mut map, candidates, accept, check);
}

/// All complete homomorphisms `A → B`, in lexicographic search order, up to
/// `limit`.
pub fn homomorphisms(a: &FiniteAlgebra, b: &FiniteAlgebra, limit: usize) -> Result<Vec<Vec<usize>>> {
    if a.signature != b.signature {
        return Err(Error::Signature("algebras have different signatures".into()));
    }
    let mut out = Vec::new();
    if limit == 0 {
        return Ok(out);
    }
    let full = PointSet::full(b.len());
    let (la, lb) = (&a.lattice, &b.lattice);
    let candidates = |x: usize| {
        if x == la.bottom() {
            PointSet::singleton(lb.bottom())
        } else if x == la.top() {
            PointSet::singleton(lb.top())
        } else {
            full
        }
    };
    let check = |h: &[usize]| check_complete_homomorphism(h, a, b).map(|r| r.homomorphism).unwrap_or(false);
    search_maps(a, b, false, false, &candidates, &mut |h| {
        out.push(h.to_vec());
        out.len() < limit
    }, &check);
    Ok(out)
}

/// An isomorphism `A → B` if one exists, found by backtracking over
/// order-isomorphisms seeded by down-set and up-set sizes.
pub fn find_isomorphism(a: &FiniteAlgebra, b: &FiniteAlgebra) -> Option<Vec<usize>> {
    if a.len() != b.len() || a.signature != b.signature {
        return None;
    }
    let (la, lb) = (&a.lattice, &b.lattice);
    let rank = |l: &Lattice, x: usize| (l.down_set(x).len(), l.up_set(x).len());
    let mut by_rank: HashMap<(usize, usize), PointSet> = HashMap::new();
    for y in 0..b.len() {
        by_rank.entry(rank(lb, y)).or_default().insert(y);
    }
    let candidates = |x: usize| by_rank.get(&rank(la, x)).copied().unwrap_or_default();
    let check = |h: &[usize]| check_complete_homomorphism(h, a, b).map(|r| r.homomorphism).unwrap_or(false);
    let mut found = None;
    search_maps(a, b, true, true, &candidates, &mut |h| {
        found = Some(h.to_vec());
        false
    }, &check);
    found
}

/// The product algebra, with elements in lexicographic order of their
/// component tuples.
pub fn product(factors: &[&FiniteAlgebra]) -> Result<FiniteAlgebra> {
    let signature = match factors.first() {
        Some(f) => f.signature.clone(),
        None => Signature::default(),
    };
    if factors.iter().any(|f| f.signature != signature) {
        return Err(Error::Signature("factors have different signatures".into()));
    }
    let sizes: Vec<usize> = factors.iter().map(|f| f.len()).collect();
    let n = sizes.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s)).filter(|&n| n <= MAX_POINTS);
    let n = n.ok_or_else(|| Error::Size(format!("product of sizes {sizes:?} exceeds {MAX_POINTS} elements")))?;
    let decode = |mut x: usize| -> Vec<usize> {
        let mut parts = vec![0; sizes.len()];
        for k in (0..sizes.len()).rev() {
            parts[k] = x % sizes[k];
            x /= sizes[k];
        }
        parts
    };
    let encode = |parts: &[usize]| parts.iter().zip(&sizes).fold(0, |acc, (&p, &s)| acc * s + p);
    let coords: Vec<Vec<usize>> = (0..n).map(decode).collect();
    let lattice = Lattice::from_order(n, |x, y| {
        factors
            .iter()
            .enumerate()
            .all(|(k, f)| f.lattice.leq(coords[x][k], coords[y][k]))
    })?;
    let names = coords
        .iter()
        .map(|c| {
            let parts: Vec<&str> = c.iter().zip(factors).map(|(&i, f)| f.names[i].as_str()).collect();
            format!("({})", parts.join(","))
        })
        .collect();
    let mut ops = Vec::new();
    for (ci, c) in signature.connectives.iter().enumerate() {
        ops.push(OpTable::tabulate(c.arity, n, |args| {
            let parts: Vec<usize> = factors
                .iter()
                .enumerate()
                .map(|(k, f)| {
                    let comp: Vec<usize> = args.iter().map(|&x| coords[x][k]).collect();
                    f.op(ci, &comp)
                })
                .collect();
            Ok(encode(&parts))
        })?);
    }
    FiniteAlgebra::new(names, lattice, signature, ops)
}
