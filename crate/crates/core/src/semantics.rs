//! Valuations into complex algebras, satisfaction and co-satisfaction, and
//! validity of sequents on models, frames and algebras.

use std::collections::BTreeMap;

use crate::algebra::{ComplexAlgebra, FiniteAlgebra};
use crate::bitset::{for_each_tuple, PointSet};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::polarity::{Concept, Sort};
use crate::syntax::{Family, Formula, Sequent, Variance};

/// Default bound on the number of valuations a validity check may visit.
pub const DEFAULT_BUDGET: u128 = 1_000_000;

/// An assignment of concepts to proposition names.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Valuation {
    pub assignment: BTreeMap<String, Concept>,
}

impl Valuation {
    pub fn new() -> Self {
        Valuation::default()
    }

    pub fn with(mut self, prop: &str, value: Concept) -> Self {
        self.assignment.insert(prop.to_string(), value);
        self
    }

    pub fn get(&self, prop: &str) -> Result<Concept> {
        self.assignment
            .get(prop)
            .copied()
            .ok_or_else(|| Error::Unassigned(prop.to_string()))
    }
}

/// A frame with a valuation into its complex algebra.
#[derive(Debug, Clone)]
pub struct Model<'a> {
    pub frame: &'a Frame,
    pub valuation: Valuation,
}

impl<'a> Model<'a> {
    /// Fails unless every assigned value is a concept of the frame.
    pub fn new(frame: &'a Frame, valuation: Valuation) -> Result<Self> {
        let p = &frame.polarity;
        for (prop, c) in &valuation.assignment {
            if !c.extent.fits(p.w_len()) || !c.intent.fits(p.u_len()) || p.up(c.extent) != c.intent || p.down(c.intent) != c.extent {
                return Err(Error::Formula(format!("value of `{prop}` is not a concept")));
            }
        }
        Ok(Model { frame, valuation })
    }

    /// Builds the model assigning concept indices of `algebra`.
    pub fn from_indices(frame: &'a Frame, algebra: &ComplexAlgebra, values: &BTreeMap<String, usize>) -> Self {
        let assignment = values
            .iter()
            .map(|(p, &i)| (p.clone(), algebra.concepts[i]))
            .collect();
        Model {
            frame,
            valuation: Valuation { assignment },
        }
    }
}

/// The value of a formula, computed from relation sections.
pub fn eval_formula(m: &Model, phi: &Formula) -> Result<Concept> {
    let fr = m.frame;
    let p = &fr.polarity;
    Ok(match phi {
        Formula::Prop(name) => m.valuation.get(name)?,
        Formula::Top => p.concept_of_extent(p.full(Sort::W)),
        Formula::Bot => p.concept_of_intent(p.full(Sort::U)),
        Formula::And(l, r) => {
            let (a, b) = (eval_formula(m, l)?, eval_formula(m, r)?);
            p.concept_of_extent(a.extent.intersect(b.extent))
        }
        Formula::Or(l, r) => {
            let (a, b) = (eval_formula(m, l)?, eval_formula(m, r)?);
            p.concept_of_intent(a.intent.intersect(b.intent))
        }
        Formula::Conn(name, args) => {
            let c = fr.signature.get(name).ok_or_else(|| Error::UnknownName {
                kind: "connective",
                name: name.clone(),
            })?;
            if args.len() != c.arity {
                return Err(Error::Formula(format!("`{name}` expects {} arguments", c.arity)));
            }
            let rel = fr.relation(name)?;
            let sets = args
                .iter()
                .zip(&c.order_type)
                .map(|(a, v)| {
                    let k = eval_formula(m, a)?;
                    Ok(match (c.family, v) {
                        (Family::G, Variance::One) | (Family::F, Variance::Partial) => k.intent,
                        (Family::G, Variance::Partial) | (Family::F, Variance::One) => k.extent,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let section = rel.section(0, &sets);
            match c.family {
                Family::G => Concept {
                    extent: section,
                    intent: p.up(section),
                },
                Family::F => Concept {
                    extent: p.down(section),
                    intent: section,
                },
            }
        }
    })
}

/// The value of a formula in a finite algebra under an assignment of
/// element indices.
pub fn eval_in_algebra(a: &FiniteAlgebra, phi: &Formula, values: &BTreeMap<String, usize>) -> Result<usize> {
    let l = &a.lattice;
    Ok(match phi {
        Formula::Prop(name) => *values.get(name).ok_or_else(|| Error::Unassigned(name.clone()))?,
        Formula::Top => l.top(),
        Formula::Bot => l.bottom(),
        Formula::And(x, y) => l.meet(eval_in_algebra(a, x, values)?, eval_in_algebra(a, y, values)?),
        Formula::Or(x, y) => l.join(eval_in_algebra(a, x, values)?, eval_in_algebra(a, y, values)?),
        Formula::Conn(name, args) => {
            let vals = args
                .iter()
                .map(|x| eval_in_algebra(a, x, values))
                .collect::<Result<Vec<_>>>()?;
            a.op_by_name(name, &vals)?
        }
    })
}

fn check_point(m: &Model, sort: Sort, x: usize) -> Result<()> {
    if x < m.frame.polarity.len(sort) {
        Ok(())
    } else {
        Err(Error::UnknownName {
            kind: match sort {
                Sort::W => "W-point",
                Sort::U => "U-point",
            },
            name: x.to_string(),
        })
    }
}

/// `M, w ⊩ φ`.
pub fn satisfies(m: &Model, w: usize, phi: &Formula) -> Result<bool> {
    check_point(m, Sort::W, w)?;
    Ok(eval_formula(m, phi)?.extent.contains(w))
}

/// `M, u ≻ φ`.
pub fn cosatisfies(m: &Model, u: usize, phi: &Formula) -> Result<bool> {
    check_point(m, Sort::U, u)?;
    Ok(eval_formula(m, phi)?.intent.contains(u))
}

/// `M, w ⊩ φ` by the recursive pointwise clauses, without building sets
/// of concepts. Used as an oracle for [`satisfies`].
pub fn satisfies_by_clauses(m: &Model, w: usize, phi: &Formula) -> Result<bool> {
    check_point(m, Sort::W, w)?;
    sat(m, w, phi)
}

/// `M, u ≻ φ` by the recursive pointwise clauses.
pub fn cosatisfies_by_clauses(m: &Model, u: usize, phi: &Formula) -> Result<bool> {
    check_point(m, Sort::U, u)?;
    cosat(m, u, phi)
}

fn all<T>(items: impl IntoIterator<Item = T>, mut pred: impl FnMut(T) -> Result<bool>) -> Result<bool> {
    for x in items {
        if !pred(x)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn sat(m: &Model, w: usize, phi: &Formula) -> Result<bool> {
    let p = &m.frame.polarity;
    match phi {
        Formula::Prop(name) => Ok(m.valuation.get(name)?.extent.contains(w)),
        Formula::Top => Ok(true),
        Formula::Bot => Ok((0..p.u_len()).all(|u| p.incident(w, u))),
        Formula::And(l, r) => Ok(sat(m, w, l)? && sat(m, w, r)?),
        // w ⊩ φ ∨ ψ iff w N u for every u co-satisfying φ ∨ ψ.
        Formula::Or(..) => all(0..p.u_len(), |u| Ok(!cosat(m, u, phi)? || p.incident(w, u))),
        Formula::Conn(name, args) => {
            let c = m.frame.signature.get(name).ok_or_else(|| Error::UnknownName {
                kind: "connective",
                name: name.clone(),
            })?;
            match c.family {
                Family::F => all(0..p.u_len(), |u| Ok(!cosat(m, u, phi)? || p.incident(w, u))),
                Family::G => {
                    // For every ū in U^ε with u_i ≻ φ_i (ε = 1) or
                    // u_i ⊩ φ_i (ε = ∂), R_g(w, ū).
                    let rel = m.frame.relation(name)?;
                    let sorts: Vec<Sort> = rel.sorts()[1..].to_vec();
                    let full: Vec<PointSet> = sorts.iter().map(|&s| p.full(s)).collect();
                    let mut result = Ok(true);
                    for_each_tuple(&full, |pts| {
                        let mut tuple = vec![w];
                        tuple.extend_from_slice(pts);
                        if rel.contains(&tuple) {
                            return true;
                        }
                        match premises_hold(m, &sorts, pts, args) {
                            Ok(true) => {
                                result = Ok(false);
                                false
                            }
                            Ok(false) => true,
                            Err(e) => {
                                result = Err(e);
                                false
                            }
                        }
                    });
                    result
                }
            }
        }
    }
}

fn cosat(m: &Model, u: usize, phi: &Formula) -> Result<bool> {
    let p = &m.frame.polarity;
    match phi {
        Formula::Prop(name) => Ok(m.valuation.get(name)?.intent.contains(u)),
        Formula::Bot => Ok(true),
        Formula::Top => Ok((0..p.w_len()).all(|w| p.incident(w, u))),
        Formula::Or(l, r) => Ok(cosat(m, u, l)? && cosat(m, u, r)?),
        Formula::And(..) => all(0..p.w_len(), |w| Ok(!sat(m, w, phi)? || p.incident(w, u))),
        Formula::Conn(name, args) => {
            let c = m.frame.signature.get(name).ok_or_else(|| Error::UnknownName {
                kind: "connective",
                name: name.clone(),
            })?;
            match c.family {
                Family::G => all(0..p.w_len(), |w| Ok(!sat(m, w, phi)? || p.incident(w, u))),
                Family::F => {
                    let rel = m.frame.relation(name)?;
                    let sorts: Vec<Sort> = rel.sorts()[1..].to_vec();
                    let full: Vec<PointSet> = sorts.iter().map(|&s| p.full(s)).collect();
                    let mut result = Ok(true);
                    for_each_tuple(&full, |pts| {
                        let mut tuple = vec![u];
                        tuple.extend_from_slice(pts);
                        if rel.contains(&tuple) {
                            return true;
                        }
                        match premises_hold(m, &sorts, pts, args) {
                            Ok(true) => {
                                result = Ok(false);
                                false
                            }
                            Ok(false) => true,
                            Err(e) => {
                                result = Err(e);
                                false
                            }
                        }
                    });
                    result
                }
            }
        }
    }
}

/// Whether each point satisfies (W-sort) or co-satisfies (U-sort) the
/// matching argument.
fn premises_hold(m: &Model, sorts: &[Sort], pts: &[usize], args: &[Formula]) -> Result<bool> {
    for ((&s, &x), a) in sorts.iter().zip(pts).zip(args) {
        let ok = match s {
            Sort::W => sat(m, x, a)?,
            Sort::U => cosat(m, x, a)?,
        };
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Every point satisfying the left side satisfies the right side.
pub fn model_validates(m: &Model, s: &Sequent) -> Result<bool> {
    Ok(eval_formula(m, &s.lhs)?.extent.is_subset(eval_formula(m, &s.rhs)?.extent))
}

/// The co-satisfaction form: every point co-satisfying the right side
/// co-satisfies the left side.
pub fn model_validates_by_intents(m: &Model, s: &Sequent) -> Result<bool> {
    Ok(eval_formula(m, &s.rhs)?.intent.is_subset(eval_formula(m, &s.lhs)?.intent))
}

/// Outcome of a validity check over all valuations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Validity {
    pub valid: bool,
    /// The first failing assignment of element (concept) indices, in
    /// enumeration order.
    pub counter: Option<BTreeMap<String, usize>>,
    pub valuations_checked: u128,
}

/// Visits all assignments of `0..size` to `props` (first prop most
/// significant), stopping at the first one where `holds` is false.
fn search_valuations(
    props: &[String],
    size: usize,
    budget: u128,
    mut holds: impl FnMut(&BTreeMap<String, usize>) -> Result<bool>,
) -> Result<Validity> {
    let required = (size as u128).checked_pow(props.len() as u32).unwrap_or(u128::MAX);
    if required > budget {
        return Err(Error::CapExceeded {
            what: "valuation enumeration",
            required,
            cap: budget,
        });
    }
    let mut values: BTreeMap<String, usize> = props.iter().map(|p| (p.clone(), 0)).collect();
    let mut checked = 0u128;
    loop {
        checked += 1;
        if !holds(&values)? {
            return Ok(Validity {
                valid: false,
                counter: Some(values),
                valuations_checked: checked,
            });
        }
        let mut k = props.len();
        loop {
            if k == 0 {
                return Ok(Validity {
                    valid: true,
                    counter: None,
                    valuations_checked: checked,
                });
            }
            k -= 1;
            let v = values.get_mut(&props[k]).unwrap();
            *v += 1;
            if *v < size {
                break;
            }
            *v = 0;
        }
    }
}

/// Validity of a sequent on a frame: extent inclusion under every
/// valuation of the propositions it mentions, evaluated on the frame.
pub fn frame_validates(frame: &Frame, algebra: &ComplexAlgebra, s: &Sequent, budget: u128) -> Result<Validity> {
    let props: Vec<String> = s.props().into_iter().collect();
    search_valuations(&props, algebra.len(), budget, |values| {
        let m = Model::from_indices(frame, algebra, values);
        model_validates(&m, s)
    })
}

/// Validity of a sequent on a finite algebra: `V(lhs) ≤ V(rhs)` for every
/// assignment.
pub fn algebra_validates(a: &FiniteAlgebra, s: &Sequent, budget: u128) -> Result<Validity> {
    let props: Vec<String> = s.props().into_iter().collect();
    search_valuations(&props, a.len(), budget, |values| {
        Ok(a.lattice.leq(
            eval_in_algebra(a, &s.lhs, values)?,
            eval_in_algebra(a, &s.rhs, values)?,
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polarity::{Polarity, DEFAULT_CONCEPT_CAP};
    use crate::syntax::{parse_formula, parse_sequent, Signature};
    use proptest::prelude::*;

    fn n1() -> Polarity {
        Polarity::new(
            vec!["a1".into(), "b1".into()],
            vec!["x1".into(), "y1".into()],
            [(0, 0), (1, 1)],
        )
        .unwrap()
    }

    fn morphism2_f1() -> Frame {
        Frame::new(n1(), Signature::box_only(), vec![vec![vec![0, 1], vec![1, 0]]]).unwrap()
    }

    fn atom_a() -> Concept {
        Concept {
            extent: PointSet::singleton(0),
            intent: PointSet::singleton(0),
        }
    }

    fn f(text: &str) -> Formula {
        parse_formula(text, &Signature::box_only()).unwrap()
    }

    fn seq(text: &str) -> Sequent {
        parse_sequent(text, &Signature::box_only()).unwrap()
    }

    #[test]
    fn eval_on_swap_frame() {
        let fr = morphism2_f1();
        let m = Model::new(&fr, Valuation::new().with("p", atom_a())).unwrap();
        let top = eval_formula(&m, &Formula::Top).unwrap();
        assert_eq!(top.extent, fr.polarity.full(Sort::W));
        assert_eq!(top.intent, fr.polarity.up(fr.polarity.full(Sort::W)));
        let bp = eval_formula(&m, &f("box p")).unwrap();
        assert_eq!(bp.extent, PointSet::singleton(1));
        assert_eq!(bp.intent, PointSet::singleton(1));
        assert_eq!(eval_formula(&m, &f("p /\\ p")).unwrap(), atom_a());
        assert!(matches!(eval_formula(&m, &f("q")), Err(Error::Unassigned(_))));
    }

    #[test]
    fn satisfaction_on_swap_frame() {
        let fr = morphism2_f1();
        let m = Model::new(&fr, Valuation::new().with("p", atom_a())).unwrap();
        assert!(!satisfies(&m, 0, &f("box p")).unwrap());
        assert!(satisfies(&m, 1, &f("box p")).unwrap());
        for w in 0..2 {
            assert!(satisfies(&m, w, &Formula::Top).unwrap());
            assert!(cosatisfies(&m, w, &Formula::Bot).unwrap());
        }
        assert!(satisfies(&m, 2, &Formula::Top).is_err());
        assert!(!model_validates(&m, &seq("box p |- p")).unwrap());
        assert!(model_validates(&m, &seq("box box p |- p")).unwrap());
        assert!(model_validates(&m, &seq("p |- p")).unwrap());
    }

    #[test]
    fn non_concepts_are_rejected() {
        let fr = morphism2_f1();
        let bad = Concept {
            extent: PointSet::singleton(0),
            intent: PointSet::singleton(1),
        };
        assert!(Model::new(&fr, Valuation::new().with("p", bad)).is_err());
    }

    #[test]
    fn frame_validity_examples() {
        let id = Frame::with_box_equal_to_n(n1());
        let a = ComplexAlgebra::build(&id, DEFAULT_CONCEPT_CAP).unwrap();
        assert!(frame_validates(&id, &a, &seq("box p |- p"), DEFAULT_BUDGET).unwrap().valid);

        let fr = morphism2_f1();
        let a = ComplexAlgebra::build(&fr, DEFAULT_CONCEPT_CAP).unwrap();
        let v = frame_validates(&fr, &a, &seq("box p |- p"), DEFAULT_BUDGET).unwrap();
        assert!(!v.valid);
        let counter = v.counter.unwrap();
        assert_eq!(a.concepts[counter["p"]], atom_a());
        assert!(frame_validates(&fr, &a, &seq("p |- top"), DEFAULT_BUDGET).unwrap().valid);
        assert!(frame_validates(&fr, &a, &seq("box box p |- p"), DEFAULT_BUDGET).unwrap().valid);
    }

    #[test]
    fn budget_is_enforced() {
        let fr = morphism2_f1();
        let a = ComplexAlgebra::build(&fr, DEFAULT_CONCEPT_CAP).unwrap();
        let s = seq("p /\\ q |- r");
        assert!(frame_validates(&fr, &a, &s, 64).is_ok());
        let err = frame_validates(&fr, &a, &s, 63).unwrap_err();
        assert!(matches!(err, Error::CapExceeded { required: 64, cap: 63, .. }));
    }

    #[test]
    fn valuations_are_enumerated_first_prop_most_significant() {
        let a = FiniteAlgebra::chain(3);
        // Fails exactly when p > q; the first such assignment is p=1, q=0.
        let v = algebra_validates(&a, &parse_sequent("p |- q", &Signature::default()).unwrap(), 100).unwrap();
        let c = v.counter.unwrap();
        assert_eq!((c["p"], c["q"]), (1, 0));
        assert_eq!(v.valuations_checked, 4);
    }

    fn frame_strategy() -> impl Strategy<Value = Frame> {
        (1usize..=3, 1usize..=3, any::<u64>(), any::<u64>()).prop_filter_map("compatible", |(w, u, nb, rb)| {
            let p = Polarity::from_matrix(w, u, |i, j| nb >> (i * u + j) & 1 == 1);
            let tuples = (0..w)
                .flat_map(|i| (0..u).map(move |j| (i, j)))
                .filter(|&(i, j)| rb >> (i * u + j) & 1 == 1)
                .map(|(i, j)| vec![i, j])
                .collect();
            let fr = Frame::new(p, Signature::box_only(), vec![tuples]).unwrap();
            fr.check_compatibility().compatible.then_some(fr)
        })
    }

    fn formula_strategy() -> impl Strategy<Value = Formula> {
        let leaf = prop_oneof![
            Just(Formula::prop("p")),
            Just(Formula::prop("q")),
            Just(Formula::Top),
            Just(Formula::Bot),
        ];
        leaf.prop_recursive(3, 16, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
                inner.prop_map(|a| Formula::conn("box", vec![a])),
            ]
        })
    }

    #[test]
    fn clauses_agree_on_mixed_signatures() {
        use crate::random::{random_formula, random_frame};
        use crate::syntax::Connective;
        use rand::{Rng, SeedableRng};
        let sig = Signature::new(vec![
            Connective::new("box", Family::G, vec![Variance::One]),
            Connective::new("dia", Family::F, vec![Variance::One]),
            Connective::new("l", Family::G, vec![Variance::Partial, Variance::One]),
            Connective::new("r", Family::F, vec![Variance::One, Variance::Partial]),
            Connective::new("e", Family::G, vec![]),
            Connective::new("o", Family::F, vec![]),
        ])
        .unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..150 {
            let fr = random_frame(&mut rng, &sig, 3, 3, 30);
            let a = ComplexAlgebra::build(&fr, DEFAULT_CONCEPT_CAP).unwrap();
            let val = Valuation::new()
                .with("p", a.concepts[rng.gen_range(0..a.len())])
                .with("q", a.concepts[rng.gen_range(0..a.len())]);
            let m = Model::new(&fr, val).unwrap();
            for _ in 0..10 {
                let phi = random_formula(&mut rng, &sig, &["p", "q"], 4);
                for w in 0..fr.polarity.w_len() {
                    assert_eq!(satisfies(&m, w, &phi).unwrap(), satisfies_by_clauses(&m, w, &phi).unwrap(), "{phi}");
                }
                for u in 0..fr.polarity.u_len() {
                    assert_eq!(cosatisfies(&m, u, &phi).unwrap(), cosatisfies_by_clauses(&m, u, &phi).unwrap(), "{phi}");
                }
                let values = ["p", "q"]
                    .into_iter()
                    .map(|k| (k.to_string(), a.index_of(&m.valuation.assignment[k]).unwrap()))
                    .collect();
                assert_eq!(
                    eval_formula(&m, &phi).unwrap(),
                    a.concepts[eval_in_algebra(&a.algebra, &phi, &values).unwrap()]
                );
            }
        }
    }

    proptest! {
        #[test]
        fn clauses_agree_with_sections(fr in frame_strategy(), phi in formula_strategy(), vp in any::<usize>(), vq in any::<usize>()) {
            let a = ComplexAlgebra::build(&fr, DEFAULT_CONCEPT_CAP).unwrap();
            let val = Valuation::new()
                .with("p", a.concepts[vp % a.len()])
                .with("q", a.concepts[vq % a.len()]);
            let m = Model::new(&fr, val).unwrap();
            for w in 0..fr.polarity.w_len() {
                prop_assert_eq!(satisfies(&m, w, &phi).unwrap(), satisfies_by_clauses(&m, w, &phi).unwrap());
            }
            for u in 0..fr.polarity.u_len() {
                prop_assert_eq!(cosatisfies(&m, u, &phi).unwrap(), cosatisfies_by_clauses(&m, u, &phi).unwrap());
            }
        }

        #[test]
        fn extent_and_intent_validity_agree(fr in frame_strategy(), l in formula_strategy(), r in formula_strategy(), vp in any::<usize>(), vq in any::<usize>()) {
            let a = ComplexAlgebra::build(&fr, DEFAULT_CONCEPT_CAP).unwrap();
            let val = Valuation::new()
                .with("p", a.concepts[vp % a.len()])
                .with("q", a.concepts[vq % a.len()]);
            let m = Model::new(&fr, val).unwrap();
            let s = Sequent::new(l, r);
            prop_assert_eq!(model_validates(&m, &s).unwrap(), model_validates_by_intents(&m, &s).unwrap());
        }

        #[test]
        fn frame_and_algebra_validity_agree(fr in frame_strategy(), l in formula_strategy(), r in formula_strategy()) {
            let a = ComplexAlgebra::build(&fr, DEFAULT_CONCEPT_CAP).unwrap();
            let s = Sequent::new(l, r);
            let by_frame = frame_validates(&fr, &a, &s, DEFAULT_BUDGET).unwrap();
            let by_algebra = algebra_validates(&a.algebra, &s, DEFAULT_BUDGET).unwrap();
            prop_assert_eq!(by_frame, by_algebra);
        }
    }
}
