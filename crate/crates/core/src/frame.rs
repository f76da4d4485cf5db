//! LE-frames: a polarity plus one relation per connective, section
//! operators and compatibility checking.
//!
//! A relation is stored with its zeroth coordinate first. For `g` the
//! zeroth coordinate lives in `W` and coordinate `i` in `U` (order type 1)
//! or `W` (order type ∂); for `f` everything is swapped.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bitset::{for_each_tuple, PointSet};
use crate::error::{Error, Result};
use crate::polarity::{Polarity, Sort};
use crate::syntax::{json_error, signature_from_value, Connective, Family, Signature, Variance};

/// Largest number of cells a dense relation may occupy.
const MAX_CELLS: usize = 1 << 24;

/// Sorts of the coordinates of a connective's relation, zeroth first.
pub fn relation_sorts(conn: &Connective) -> Vec<Sort> {
    let (head, same) = match conn.family {
        Family::G => (Sort::W, Sort::U),
        Family::F => (Sort::U, Sort::W),
    };
    std::iter::once(head)
        .chain(conn.order_type.iter().map(|v| match v {
            Variance::One => same,
            Variance::Partial => same.dual(),
        }))
        .collect()
}

/// A finite relation over a product of sorts, with dense per-coordinate
/// fibers so that sections are intersections of precomputed sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    sorts: Vec<Sort>,
    dims: Vec<usize>,
    tuples: Vec<Vec<usize>>,
    /// `fibers[k][idx]`: the coordinate-`k` values completing the tuple of
    /// the other coordinates encoded by `idx` (mixed radix, coordinate
    /// order).
    fibers: Vec<Vec<PointSet>>,
}

impl Relation {
    pub fn new(sorts: Vec<Sort>, dims: Vec<usize>, tuples: impl IntoIterator<Item = Vec<usize>>) -> Result<Self> {
        assert_eq!(sorts.len(), dims.len());
        let cells = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d.max(1)));
        if cells.is_none_or(|c| c > MAX_CELLS) {
            return Err(Error::Size(format!("relation over {dims:?} is too large")));
        }
        let mut fibers: Vec<Vec<PointSet>> = (0..dims.len())
            .map(|k| vec![PointSet::EMPTY; other_count(&dims, k)])
            .collect();
        let mut list: Vec<Vec<usize>> = Vec::new();
        for t in tuples {
            if t.len() != dims.len() {
                return Err(Error::Size(format!(
                    "tuple {t:?} has {} coordinates, expected {}",
                    t.len(),
                    dims.len()
                )));
            }
            if let Some(k) = (0..t.len()).find(|&k| t[k] >= dims[k]) {
                return Err(Error::Size(format!("coordinate {k} of tuple {t:?} is out of range")));
            }
            for (k, fiber) in fibers.iter_mut().enumerate() {
                fiber[other_index(&dims, k, &t)].insert(t[k]);
            }
            list.push(t);
        }
        list.sort();
        list.dedup();
        Ok(Relation {
            sorts,
            dims,
            tuples: list,
            fibers,
        })
    }

    /// The empty relation for a connective over a polarity.
    pub fn empty_for(conn: &Connective, p: &Polarity) -> Self {
        let sorts = relation_sorts(conn);
        let dims = sorts.iter().map(|&s| p.len(s)).collect();
        Relation::new(sorts, dims, []).expect("empty relation fits")
    }

    /// Number of non-zeroth coordinates.
    pub fn arity(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn sorts(&self) -> &[Sort] {
        &self.sorts
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Tuples in lexicographic order.
    pub fn tuples(&self) -> &[Vec<usize>] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn contains(&self, tuple: &[usize]) -> bool {
        tuple.len() == self.dims.len()
            && tuple.iter().zip(&self.dims).all(|(&x, &d)| x < d)
            && self.fibers[0][other_index(&self.dims, 0, tuple)].contains(tuple[0])
    }

    /// Section along coordinate `k`: the `x` with `(.., x, ..) ∈ R` for all
    /// choices of the other coordinates from `others` (given in coordinate
    /// order, skipping `k`). Any empty argument gives the full sort.
    pub fn section(&self, k: usize, others: &[PointSet]) -> PointSet {
        debug_assert_eq!(others.len() + 1, self.dims.len());
        let dims: Vec<usize> = other_dims(&self.dims, k);
        let fiber = &self.fibers[k];
        let mut acc = PointSet::full(self.dims[k]);
        for_each_tuple(others, |t| {
            acc = acc.intersect(fiber[radix(&dims, t)]);
            !acc.is_empty()
        });
        acc
    }

    /// Checked [`Relation::section`].
    pub fn try_section(&self, k: usize, others: &[PointSet]) -> Result<PointSet> {
        if k >= self.dims.len() {
            return Err(Error::Size(format!(
                "coordinate {k} out of range for a relation with {} coordinates",
                self.dims.len()
            )));
        }
        if others.len() + 1 != self.dims.len() {
            return Err(Error::Sort(format!(
                "expected {} arguments, got {}",
                self.dims.len() - 1,
                others.len()
            )));
        }
        for (m, (arg, &d)) in others.iter().zip(other_dims(&self.dims, k).iter()).enumerate() {
            if !arg.fits(d) {
                return Err(Error::Sort(format!(
                    "argument {m} {arg:?} is not a subset of a sort of size {d}"
                )));
            }
        }
        Ok(self.section(k, others))
    }

    /// `R⁽⁰⁾[args]`.
    pub fn section_zero(&self, args: &[PointSet]) -> Result<PointSet> {
        self.try_section(0, args)
    }

    /// `R⁽ⁱ⁾[head, rest]`: the section along coordinate `i ≥ 1`, with `head`
    /// in the zeroth coordinate and `rest` filling coordinates `1..=n`
    /// other than `i`.
    pub fn section_i(&self, i: usize, head: PointSet, rest: &[PointSet]) -> Result<PointSet> {
        if i == 0 || i > self.arity() {
            return Err(Error::Size(format!(
                "section index {i} must lie in 1..={}",
                self.arity()
            )));
        }
        let mut others = Vec::with_capacity(rest.len() + 1);
        others.push(head);
        others.extend_from_slice(rest);
        self.try_section(i, &others)
    }
}

fn other_dims(dims: &[usize], k: usize) -> Vec<usize> {
    dims.iter()
        .enumerate()
        .filter(|&(m, _)| m != k)
        .map(|(_, &d)| d)
        .collect()
}

fn other_count(dims: &[usize], k: usize) -> usize {
    other_dims(dims, k).iter().product()
}

fn radix(dims: &[usize], t: &[usize]) -> usize {
    t.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

fn other_index(dims: &[usize], k: usize, tuple: &[usize]) -> usize {
    dims.iter()
        .zip(tuple)
        .enumerate()
        .filter(|&(m, _)| m != k)
        .fold(0, |acc, (_, (&d, &x))| acc * d + x)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub polarity: Polarity,
    pub signature: Signature,
    /// One relation per connective, in signature order.
    relations: Vec<Relation>,
}

impl Frame {
    /// Builds a frame from index tuples, one list per connective in
    /// signature order. Compatibility is not checked.
    pub fn new(polarity: Polarity, signature: Signature, relations: Vec<Vec<Vec<usize>>>) -> Result<Self> {
        if relations.len() != signature.connectives.len() {
            return Err(Error::Frame(format!(
                "{} relations given for {} connectives",
                relations.len(),
                signature.connectives.len()
            )));
        }
        let relations = signature
            .connectives
            .iter()
            .zip(relations)
            .map(|(c, tuples)| {
                let sorts = relation_sorts(c);
                let dims = sorts.iter().map(|&s| polarity.len(s)).collect();
                Relation::new(sorts, dims, tuples)
                    .map_err(|e| Error::Frame(format!("relation `{}`: {e}", c.name)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Frame {
            polarity,
            signature,
            relations,
        })
    }

    /// A frame over a pure-lattice signature.
    pub fn bare(polarity: Polarity) -> Self {
        Frame {
            polarity,
            signature: Signature::default(),
            relations: Vec::new(),
        }
    }

    /// The frame with `R_box = N` over the `box` signature.
    pub fn with_box_equal_to_n(polarity: Polarity) -> Self {
        let tuples = polarity.pairs().into_iter().map(|(w, u)| vec![w, u]).collect();
        Frame::new(polarity, Signature::box_only(), vec![tuples]).expect("N fits its own sorts")
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn relation_at(&self, index: usize) -> &Relation {
        &self.relations[index]
    }

    pub fn relation(&self, name: &str) -> Result<&Relation> {
        self.signature
            .position(name)
            .map(|i| &self.relations[i])
            .ok_or_else(|| Error::UnknownName {
                kind: "connective",
                name: name.to_string(),
            })
    }

    /// Renders a tuple of a relation by point names.
    pub fn tuple_names(&self, rel: &Relation, tuple: &[usize]) -> Vec<String> {
        tuple
            .iter()
            .zip(rel.sorts())
            .map(|(&x, &s)| self.polarity.names(s)[x].clone())
            .collect()
    }

    pub fn check_compatibility(&self) -> CompatibilityReport {
        for (c, rel) in self.signature.connectives.iter().zip(&self.relations) {
            for k in 0..rel.dims.len() {
                let others: Vec<PointSet> = other_sorts(rel, k)
                    .into_iter()
                    .map(|s| self.polarity.full(s))
                    .collect();
                let mut found = None;
                for_each_tuple(&others, |points| {
                    let singletons: Vec<PointSet> = points.iter().map(|&x| PointSet::singleton(x)).collect();
                    let section = rel.section(k, &singletons);
                    let closure = self.polarity.closure(rel.sorts[k], section);
                    if closure != section {
                        found = Some((points.to_vec(), section, closure));
                        return false;
                    }
                    true
                });
                if let Some((points, section, closure)) = found {
                    let sort = rel.sorts[k];
                    return CompatibilityReport::fail(CompatibilityViolation {
                        connective: c.name.clone(),
                        coordinate: k,
                        replaced: None,
                        points: self.point_names(&other_sorts(rel, k), &points),
                        sort,
                        set: self.set_names(sort, section),
                        closure: self.set_names(sort, closure),
                        section: None,
                    });
                }
            }
        }
        CompatibilityReport::pass()
    }

    /// Compatibility via invariance of sections under closure: for each pair
    /// of coordinates `i ≠ j`, every `Z` in coordinate `i` and points in the
    /// remaining coordinates, the `j`-section at `Z` equals the `j`-section
    /// at the closure of `Z`. Nullary relations have no such pair and are
    /// checked for stability directly.
    pub fn check_compatibility_alt(&self) -> Result<CompatibilityReport> {
        const MAX_SUBSET_SORT: usize = 20;
        for (c, rel) in self.signature.connectives.iter().zip(&self.relations) {
            let sorts = &rel.sorts;
            if rel.arity() == 0 {
                let section = rel.section(0, &[]);
                let closure = self.polarity.closure(sorts[0], section);
                if closure != section {
                    return Ok(CompatibilityReport::fail(CompatibilityViolation {
                        connective: c.name.clone(),
                        coordinate: 0,
                        replaced: None,
                        points: Vec::new(),
                        sort: sorts[0],
                        set: self.set_names(sorts[0], section),
                        closure: self.set_names(sorts[0], closure),
                        section: None,
                    }));
                }
                continue;
            }
            for i in 0..sorts.len() {
                let n_i = self.polarity.len(sorts[i]);
                if n_i > MAX_SUBSET_SORT {
                    return Err(Error::Size(format!(
                        "alternative compatibility check enumerates subsets of a sort of size {n_i}"
                    )));
                }
                for j in (0..sorts.len()).filter(|&j| j != i) {
                    // Coordinates other than i and j take points.
                    let rest: Vec<usize> = (0..sorts.len()).filter(|&m| m != i && m != j).collect();
                    let rest_sets: Vec<PointSet> =
                        rest.iter().map(|&m| self.polarity.full(sorts[m])).collect();
                    for z in PointSet::subsets(n_i) {
                        let closed = self.polarity.closure(sorts[i], z);
                        if closed == z {
                            continue;
                        }
                        let mut found = None;
                        for_each_tuple(&rest_sets, |points| {
                            let args = |at_i: PointSet| -> Vec<PointSet> {
                                let mut it = points.iter();
                                (0..sorts.len())
                                    .filter(|&m| m != j)
                                    .map(|m| {
                                        if m == i {
                                            at_i
                                        } else {
                                            PointSet::singleton(*it.next().unwrap())
                                        }
                                    })
                                    .collect()
                            };
                            let a = rel.section(j, &args(z));
                            let b = rel.section(j, &args(closed));
                            if a != b {
                                found = Some((points.to_vec(), a, b));
                                return false;
                            }
                            true
                        });
                        if let Some((points, a, b)) = found {
                            let rest_sorts: Vec<Sort> = rest.iter().map(|&m| sorts[m]).collect();
                            return Ok(CompatibilityReport::fail(CompatibilityViolation {
                                connective: c.name.clone(),
                                coordinate: j,
                                replaced: Some(i),
                                points: self.point_names(&rest_sorts, &points),
                                sort: sorts[i],
                                set: self.set_names(sorts[i], z),
                                closure: self.set_names(sorts[i], closed),
                                section: Some((self.set_names(sorts[j], a), self.set_names(sorts[j], b))),
                            }));
                        }
                    }
                }
            }
        }
        Ok(CompatibilityReport::pass())
    }

    /// Fails with [`Error::Incompatible`] unless the frame is compatible.
    pub fn require_compatible(&self) -> Result<()> {
        match self.check_compatibility().violation {
            None => Ok(()),
            Some(v) => Err(Error::Incompatible(v.to_string())),
        }
    }

    fn point_names(&self, sorts: &[Sort], points: &[usize]) -> Vec<String> {
        sorts
            .iter()
            .zip(points)
            .map(|(&s, &x)| self.polarity.names(s)[x].clone())
            .collect()
    }

    fn set_names(&self, sort: Sort, set: PointSet) -> Vec<String> {
        set.iter().map(|x| self.polarity.names(sort)[x].clone()).collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| json_error(&e))?;
        Frame::from_value(&value, text)
    }

    pub fn from_value(value: &Value, text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            #[serde(default)]
            signature: Option<Value>,
            #[serde(rename = "W")]
            w: Vec<String>,
            #[serde(rename = "U")]
            u: Vec<String>,
            #[serde(rename = "N")]
            n: Vec<(String, String)>,
            #[serde(default)]
            relations: BTreeMap<String, Vec<Vec<String>>>,
        }
        let raw: Raw = serde_json::from_value(value.clone())
            .map_err(|e| Error::Frame(format!("frame file: {e}")))?;
        let signature = match &raw.signature {
            Some(v) => signature_from_value(v, text)?,
            None => Signature::default(),
        };
        let lookup = |names: &[String], sort: Sort, name: &str| -> Result<usize> {
            names.iter().position(|n| n == name).ok_or_else(|| Error::UnknownName {
                kind: match sort {
                    Sort::W => "W-point",
                    Sort::U => "U-point",
                },
                name: name.to_string(),
            })
        };
        let pairs = raw
            .n
            .iter()
            .map(|(w, u)| Ok((lookup(&raw.w, Sort::W, w)?, lookup(&raw.u, Sort::U, u)?)))
            .collect::<Result<Vec<_>>>()?;
        let polarity = Polarity::new(raw.w.clone(), raw.u.clone(), pairs)?;
        for name in raw.relations.keys() {
            if signature.get(name).is_none() {
                return Err(Error::UnknownName {
                    kind: "connective",
                    name: name.clone(),
                });
            }
        }
        let mut relations = Vec::new();
        for c in &signature.connectives {
            let sorts = relation_sorts(c);
            let mut tuples = Vec::new();
            for t in raw.relations.get(&c.name).map(Vec::as_slice).unwrap_or(&[]) {
                if t.len() != sorts.len() {
                    return Err(Error::Sort(format!(
                        "relation `{}` expects {} coordinates, got {:?}",
                        c.name,
                        sorts.len(),
                        t
                    )));
                }
                let idx = t
                    .iter()
                    .zip(&sorts)
                    .map(|(name, &s)| lookup(polarity.names(s), s, name))
                    .collect::<Result<Vec<_>>>()?;
                tuples.push(idx);
            }
            relations.push(tuples);
        }
        Frame::new(polarity, signature, relations)
    }

    pub fn to_value(&self) -> Value {
        let p = &self.polarity;
        let relations: serde_json::Map<String, Value> = self
            .signature
            .connectives
            .iter()
            .zip(&self.relations)
            .map(|(c, r)| {
                let tuples: Vec<Vec<String>> = r.tuples().iter().map(|t| self.tuple_names(r, t)).collect();
                (c.name.clone(), serde_json::to_value(tuples).expect("strings serialize"))
            })
            .collect();
        let n: Vec<[String; 2]> = p
            .pairs()
            .into_iter()
            .map(|(w, u)| [p.names(Sort::W)[w].clone(), p.names(Sort::U)[u].clone()])
            .collect();
        serde_json::json!({
            "signature": self.signature,
            "W": p.names(Sort::W),
            "U": p.names(Sort::U),
            "N": n,
            "relations": relations,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("frame serializes")
    }
}

fn other_sorts(rel: &Relation, k: usize) -> Vec<Sort> {
    rel.sorts
        .iter()
        .enumerate()
        .filter(|&(m, _)| m != k)
        .map(|(_, &s)| s)
        .collect()
}

/// A witness of incompatibility.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompatibilityViolation {
    pub connective: String,
    /// Coordinate along which the offending section is taken.
    pub coordinate: usize,
    /// For the closure-invariance check, the coordinate holding the set.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub replaced: Option<usize>,
    /// Points fixed in the remaining coordinates, in coordinate order.
    pub points: Vec<String>,
    /// Sort of `set`.
    pub sort: Sort,
    /// The non-stable set and its closure.
    pub set: Vec<String>,
    pub closure: Vec<String>,
    /// For the closure-invariance check, the two differing sections.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub section: Option<(Vec<String>, Vec<String>)>,
}

impl std::fmt::Display for CompatibilityViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let set = |v: &[String]| format!("{{{}}}", v.join(", "));
        match (&self.replaced, &self.section) {
            (Some(i), Some((a, b))) => write!(
                f,
                "R_{} sections along coordinate {} differ at {} = {} and at its closure {} (points [{}]): {} vs {}",
                self.connective,
                self.coordinate,
                i,
                set(&self.set),
                set(&self.closure),
                self.points.join(", "),
                set(a),
                set(b)
            ),
            _ => write!(
                f,
                "R_{} section along coordinate {} at [{}] is {}, not stable (closure {})",
                self.connective,
                self.coordinate,
                self.points.join(", "),
                set(&self.set),
                set(&self.closure)
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    pub compatible: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub violation: Option<CompatibilityViolation>,
}

impl CompatibilityReport {
    fn pass() -> Self {
        CompatibilityReport {
            compatible: true,
            violation: None,
        }
    }

    fn fail(v: CompatibilityViolation) -> Self {
        CompatibilityReport {
            compatible: false,
            violation: Some(v),
        }
    }
}
