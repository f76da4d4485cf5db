//! p-morphisms `(S, T): F1 → F2` with `S ⊆ W1 × U2` and `T ⊆ U1 × W2`:
//! verification, the dual homomorphism `F2⁺ → F1⁺`, dualization of
//! homomorphisms, and surjectivity/injectivity.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::algebra::{check_complete_homomorphism, ComplexAlgebra};
use crate::bitset::{for_each_tuple, PointSet};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::polarity::{Concept, Sort};
use crate::syntax::{json_error, Family};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PMorphism {
    /// `s[w] = {u ∈ U2 | w S u}` for `w ∈ W1`.
    s: Vec<PointSet>,
    /// `t[u] = {w ∈ W2 | u T w}` for `u ∈ U1`.
    t: Vec<PointSet>,
    n_u2: usize,
    n_w2: usize,
}

impl PMorphism {
    /// Builds `(S, T)` from index pairs; out-of-sort pairs are errors.
    pub fn new(
        source: &Frame,
        target: &Frame,
        s_pairs: impl IntoIterator<Item = (usize, usize)>,
        t_pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let (p1, p2) = (&source.polarity, &target.polarity);
        let mut s = vec![PointSet::EMPTY; p1.w_len()];
        for (w, u) in s_pairs {
            if w >= p1.w_len() || u >= p2.u_len() {
                return Err(Error::Sort(format!("S pair ({w}, {u}) is not in W1 × U2")));
            }
            s[w].insert(u);
        }
        let mut t = vec![PointSet::EMPTY; p1.u_len()];
        for (u, w) in t_pairs {
            if u >= p1.u_len() || w >= p2.w_len() {
                return Err(Error::Sort(format!("T pair ({u}, {w}) is not in U1 × W2")));
            }
            t[u].insert(w);
        }
        Ok(PMorphism {
            s,
            t,
            n_u2: p2.u_len(),
            n_w2: p2.w_len(),
        })
    }

    /// `(N, N⁻¹)`, the identity on a frame.
    pub fn identity(frame: &Frame) -> Self {
        let p = &frame.polarity;
        let pairs = p.pairs();
        PMorphism::new(frame, frame, pairs.iter().copied(), pairs.iter().map(|&(w, u)| (u, w)))
            .expect("N fits its own sorts")
    }

    pub fn s_pairs(&self) -> Vec<(usize, usize)> {
        self.s
            .iter()
            .enumerate()
            .flat_map(|(w, us)| us.iter().map(move |u| (w, u)))
            .collect()
    }

    pub fn t_pairs(&self) -> Vec<(usize, usize)> {
        self.t
            .iter()
            .enumerate()
            .flat_map(|(u, ws)| ws.iter().map(move |w| (u, w)))
            .collect()
    }

    /// `S⁽⁰⁾[Y] = {w ∈ W1 | ∀u ∈ Y. w S u}` for `Y ⊆ U2`.
    pub fn s0(&self, y: PointSet) -> PointSet {
        (0..self.s.len()).filter(|&w| y.is_subset(self.s[w])).collect()
    }

    /// `S⁽¹⁾[X] = {u ∈ U2 | ∀w ∈ X. w S u}` for `X ⊆ W1`.
    pub fn s1(&self, x: PointSet) -> PointSet {
        x.iter().fold(PointSet::full(self.n_u2), |acc, w| acc.intersect(self.s[w]))
    }

    /// `T⁽⁰⁾[X] = {u ∈ U1 | ∀w ∈ X. u T w}` for `X ⊆ W2`.
    pub fn t0(&self, x: PointSet) -> PointSet {
        (0..self.t.len()).filter(|&u| x.is_subset(self.t[u])).collect()
    }

    /// `T⁽¹⁾[Y] = {w ∈ W2 | ∀u ∈ Y. u T w}` for `Y ⊆ U1`.
    pub fn t1(&self, y: PointSet) -> PointSet {
        y.iter().fold(PointSet::full(self.n_w2), |acc, u| acc.intersect(self.t[u]))
    }

    /// Reads `{"S": [[w1, u2], ..], "T": [[u1, w2], ..]}`.
    pub fn from_json(text: &str, source: &Frame, target: &Frame) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            #[serde(rename = "S")]
            s: Vec<(String, String)>,
            #[serde(rename = "T")]
            t: Vec<(String, String)>,
        }
        let value: Value = serde_json::from_str(text).map_err(|e| json_error(&e))?;
        let raw: Raw = serde_json::from_value(value).map_err(|e| Error::Frame(format!("morphism file: {e}")))?;
        let (p1, p2) = (&source.polarity, &target.polarity);
        let find = |frame: &str, names: &[String], sort: &'static str, name: &str| -> Result<usize> {
            names.iter().position(|n| n == name).ok_or_else(|| {
                Error::Sort(format!("`{name}` is not a {sort}-point of the {frame} frame"))
            })
        };
        let s = raw
            .s
            .iter()
            .map(|(w, u)| {
                Ok((
                    find("source", p1.names(Sort::W), "W", w)?,
                    find("target", p2.names(Sort::U), "U", u)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let t = raw
            .t
            .iter()
            .map(|(u, w)| {
                Ok((
                    find("source", p1.names(Sort::U), "U", u)?,
                    find("target", p2.names(Sort::W), "W", w)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        PMorphism::new(source, target, s, t)
    }

    pub fn to_value(&self, source: &Frame, target: &Frame) -> Value {
        let (p1, p2) = (&source.polarity, &target.polarity);
        let s: Vec<[&str; 2]> = self
            .s_pairs()
            .into_iter()
            .map(|(w, u)| [p1.names(Sort::W)[w].as_str(), p2.names(Sort::U)[u].as_str()])
            .collect();
        let t: Vec<[&str; 2]> = self
            .t_pairs()
            .into_iter()
            .map(|(u, w)| [p1.names(Sort::U)[u].as_str(), p2.names(Sort::W)[w].as_str()])
            .collect();
        serde_json::json!({ "S": s, "T": t })
    }
}

/// The earliest violated condition, with the sets that disagree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PMorphismViolation {
    pub condition: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub connective: Option<String>,
    /// Point (or point tuple) at which the condition fails.
    pub at: Vec<String>,
    /// Human-readable statement of the failing comparison.
    pub detail: String,
}

/// A failure of `(T⁽⁰⁾[⟦a⟧])↓ = S⁽⁰⁾[⦅a⦆]`, found first at a target
/// `W`-point (where `a` is generated by the point), then at a concept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EqualMapsWitness {
    pub at: String,
    pub left: Vec<String>,
    pub right: Vec<String>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PMorphismReport {
    pub pmorphism: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub violation: Option<PMorphismViolation>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub equal_maps: Option<EqualMapsWitness>,
}

fn names(frame: &Frame, sort: Sort, set: PointSet) -> Vec<String> {
    set.iter().map(|i| frame.polarity.names(sort)[i].clone()).collect()
}

/// Verifies conditions p2 to p7 in order, and checks the identity
/// `(T⁽⁰⁾[⟦a⟧])↓ = S⁽⁰⁾[⦅a⦆]` on target points and concepts as a
/// diagnostic.
pub fn check_pmorphism(d: &PMorphism, source: &Frame, target: &Frame, cap: usize) -> Result<PMorphismReport> {
    if source.signature != target.signature {
        return Err(Error::Signature("source and target frames have different signatures".into()));
    }
    if d.s.len() != source.polarity.w_len()
        || d.t.len() != source.polarity.u_len()
        || d.n_u2 != target.polarity.u_len()
        || d.n_w2 != target.polarity.w_len()
    {
        return Err(Error::Sort("relations do not match the frames' sorts".into()));
    }
    let violation = first_violation(d, source, target);
    let equal_maps = equal_maps_witness(d, source, target, cap)?;
    Ok(PMorphismReport {
        pmorphism: violation.is_none(),
        violation,
        equal_maps,
    })
}

fn first_violation(d: &PMorphism, src: &Frame, tgt: &Frame) -> Option<PMorphismViolation> {
    let (p1, p2) = (&src.polarity, &tgt.polarity);
    let fail = |condition: &str, at: Vec<String>, detail: String| {
        Some(PMorphismViolation {
            condition: condition.to_string(),
            connective: None,
            at,
            detail,
        })
    };
    let w1 = |w: usize| p1.names(Sort::W)[w].clone();
    let u1 = |u: usize| p1.names(Sort::U)[u].clone();
    let w2 = |w: usize| p2.names(Sort::W)[w].clone();
    let u2 = |u: usize| p2.names(Sort::U)[u].clone();

    // p2
    for u in 0..p2.u_len() {
        let x = d.s0(PointSet::singleton(u));
        if !p1.is_stable(Sort::W, x) {
            return fail("p2", vec![u2(u)], format!(
                "S^(0)[{}] = {} is not stable in the source (closure {})",
                u2(u), p1.show(Sort::W, x), p1.show(Sort::W, p1.closure(Sort::W, x))
            ));
        }
    }
    for w in 0..p1.w_len() {
        let y = d.s1(PointSet::singleton(w));
        if !p2.is_stable(Sort::U, y) {
            return fail("p2", vec![w1(w)], format!(
                "S^(1)[{}] = {} is not stable in the target (closure {})",
                w1(w), p2.show(Sort::U, y), p2.show(Sort::U, p2.closure(Sort::U, y))
            ));
        }
    }
    // p3
    for w in 0..p2.w_len() {
        let y = d.t0(PointSet::singleton(w));
        if !p1.is_stable(Sort::U, y) {
            return fail("p3", vec![w2(w)], format!(
                "T^(0)[{}] = {} is not stable in the source (closure {})",
                w2(w), p1.show(Sort::U, y), p1.show(Sort::U, p1.closure(Sort::U, y))
            ));
        }
    }
    for u in 0..p1.u_len() {
        let x = d.t1(PointSet::singleton(u));
        if !p2.is_stable(Sort::W, x) {
            return fail("p3", vec![u1(u)], format!(
                "T^(1)[{}] = {} is not stable in the target (closure {})",
                u1(u), p2.show(Sort::W, x), p2.show(Sort::W, p2.closure(Sort::W, x))
            ));
        }
    }
    // p4
    for w in 0..p2.w_len() {
        let left = p1.down(d.t0(PointSet::singleton(w)));
        let right = d.s0(p2.up(PointSet::singleton(w)));
        if !left.is_subset(right) {
            return fail("p4", vec![w2(w)], format!(
                "(T^(0)[{0}])↓ = {1} ⊄ {2} = S^(0)[{0}↑]",
                w2(w), p1.show(Sort::W, left), p1.show(Sort::W, right)
            ));
        }
    }
    // p5
    for w in 0..p1.w_len() {
        let left = d.t0(p2.down(d.s1(PointSet::singleton(w))));
        let right = p1.up(PointSet::singleton(w));
        if !left.is_subset(right) {
            return fail("p5", vec![w1(w)], format!(
                "T^(0)[(S^(1)[{0}])↓] = {1} ⊄ {2} = {0}↑",
                w1(w), p1.show(Sort::U, left), p1.show(Sort::U, right)
            ));
        }
    }
    // p6 then p7
    for family in [Family::F, Family::G] {
        for (ci, c) in src.signature.connectives.iter().enumerate() {
            if c.family != family {
                continue;
            }
            let (r1, r2) = (src.relation_at(ci), tgt.relation_at(ci));
            let sorts = &r2.sorts()[1..];
            let full: Vec<PointSet> = sorts.iter().map(|&s| p2.full(s)).collect();
            let mut found = None;
            for_each_tuple(&full, |pts| {
                let singles: Vec<PointSet> = pts.iter().map(|&x| PointSet::singleton(x)).collect();
                let args: Vec<PointSet> = sorts
                    .iter()
                    .zip(&singles)
                    .map(|(&s, &x)| match s {
                        Sort::W => p1.down(d.t0(x)),
                        Sort::U => p1.up(d.s0(x)),
                    })
                    .collect();
                let right = r1.section(0, &args);
                let left = match family {
                    Family::F => d.t0(p2.down(r2.section(0, &singles))),
                    Family::G => d.s0(p2.up(r2.section(0, &singles))),
                };
                if left != right {
                    found = Some((pts.to_vec(), left, right));
                    return false;
                }
                true
            });
            if let Some((pts, left, right)) = found {
                let at: Vec<String> = sorts
                    .iter()
                    .zip(&pts)
                    .map(|(&s, &x)| p2.names(s)[x].clone())
                    .collect();
                let (condition, sort, lhs) = match family {
                    Family::F => ("p6", Sort::U, format!("T^(0)[(R_{}^(0)[..])↓]", c.name)),
                    Family::G => ("p7", Sort::W, format!("S^(0)[(R_{}^(0)[..])↑]", c.name)),
                };
                return Some(PMorphismViolation {
                    condition: condition.to_string(),
                    connective: Some(c.name.clone()),
                    detail: format!(
                        "{} at ({}): {} = {} ≠ {} on the source side",
                        c.name,
                        at.join(", "),
                        lhs,
                        p1.show(sort, left),
                        p1.show(sort, right)
                    ),
                    at,
                });
            }
        }
    }
    None
}

fn equal_maps_witness(d: &PMorphism, src: &Frame, tgt: &Frame, cap: usize) -> Result<Option<EqualMapsWitness>> {
    let (p1, p2) = (&src.polarity, &tgt.polarity);
    for w in 0..p2.w_len() {
        let left = p1.down(d.t0(PointSet::singleton(w)));
        let right = d.s0(p2.up(PointSet::singleton(w)));
        if left != right {
            let at = p2.names(Sort::W)[w].clone();
            return Ok(Some(EqualMapsWitness {
                detail: format!(
                    "(T^(0)[{at}])↓ = {} ≠ {} = S^(0)[{at}↑]",
                    p1.show(Sort::W, left),
                    p1.show(Sort::W, right)
                ),
                at,
                left: names(src, Sort::W, left),
                right: names(src, Sort::W, right),
            }));
        }
    }
    for a in p2.enumerate_concepts(cap)? {
        let left = p1.down(d.t0(a.extent));
        let right = d.s0(a.intent);
        if left != right {
            let at = p2.show_concept(&a);
            return Ok(Some(EqualMapsWitness {
                detail: format!(
                    "(T^(0)[⟦a⟧])↓ = {} ≠ {} = S^(0)[⦅a⦆] at a = {at}",
                    p1.show(Sort::W, left),
                    p1.show(Sort::W, right)
                ),
                at,
                left: names(src, Sort::W, left),
                right: names(src, Sort::W, right),
            }));
        }
    }
    Ok(None)
}

fn require_pmorphism(d: &PMorphism, source: &Frame, target: &Frame, cap: usize) -> Result<()> {
    let report = check_pmorphism(d, source, target, cap)?;
    match report.violation {
        None => Ok(()),
        Some(v) => Err(Error::NotPMorphism(format!("{} fails: {}", v.condition, v.detail))),
    }
}

/// `h(a) = (S⁽⁰⁾[⦅a⦆], T⁽⁰⁾[⟦a⟧])` as a map from target concepts to source
/// concepts, by concept index.
pub fn dual_hom(
    d: &PMorphism,
    source: &Frame,
    source_algebra: &ComplexAlgebra,
    target: &Frame,
    target_algebra: &ComplexAlgebra,
    cap: usize,
) -> Result<Vec<usize>> {
    require_pmorphism(d, source, target, cap)?;
    target_algebra
        .concepts
        .iter()
        .map(|a| {
            let image = Concept {
                extent: d.s0(a.intent),
                intent: d.t0(a.extent),
            };
            source_algebra.index_of(&image).ok_or_else(|| {
                Error::NotPMorphism(format!(
                    "image of {} is not a concept of the source",
                    target.polarity.show_concept(a)
                ))
            })
        })
        .collect()
}

/// `(S_h, T_h): F2 → F1` for a complete homomorphism `h: F1⁺ → F2⁺`, with
/// `w S_h u ⟺ w ∈ ⟦h(u↓↑)⟧` and `u T_h w ⟺ u ∈ ⦅h(w↑↓)⦆`.
pub fn dual_pmorphism(
    h: &[usize],
    f1: &Frame,
    a1: &ComplexAlgebra,
    f2: &Frame,
    a2: &ComplexAlgebra,
) -> Result<PMorphism> {
    let report = check_complete_homomorphism(h, &a1.algebra, &a2.algebra)?;
    if let Some(msg) = report.failure {
        return Err(Error::NotHomomorphism(msg));
    }
    let p1 = &f1.polarity;
    let mut s = Vec::new();
    for u in 0..p1.u_len() {
        let image = a2.concepts[h[a1.of_u_point(p1, u)]];
        s.extend(image.extent.iter().map(|w| (w, u)));
    }
    let mut t = Vec::new();
    for w in 0..p1.w_len() {
        let image = a2.concepts[h[a1.of_w_point(p1, w)]];
        t.extend(image.intent.iter().map(|u| (u, w)));
    }
    PMorphism::new(f2, f1, s, t)
}

/// Distinct target concepts have distinct `S⁽⁰⁾`-images.
pub fn is_surjective(d: &PMorphism, source: &Frame, target: &Frame, target_algebra: &ComplexAlgebra, cap: usize) -> Result<bool> {
    require_pmorphism(d, source, target, cap)?;
    let mut seen = HashSet::new();
    Ok(target_algebra.concepts.iter().all(|a| seen.insert(d.s0(a.intent))))
}

/// Every source concept's extent is `S⁽⁰⁾[⦅b⦆]` for some target concept `b`.
pub fn is_injective(
    d: &PMorphism,
    source: &Frame,
    source_algebra: &ComplexAlgebra,
    target: &Frame,
    target_algebra: &ComplexAlgebra,
    cap: usize,
) -> Result<bool> {
    require_pmorphism(d, source, target, cap)?;
    let images: HashSet<PointSet> = target_algebra.concepts.iter().map(|b| d.s0(b.intent)).collect();
    Ok(source_algebra.concepts.iter().all(|a| images.contains(&a.extent)))
}
