//! Seeded generators for polarities, compatible frames, formulas and
//! sequents, plus exhaustive formula enumeration.

use rand::Rng;

use crate::bitset::{for_each_tuple, PointSet};
use crate::frame::{relation_sorts, Frame};
use crate::polarity::{Polarity, Sort};
use crate::syntax::{Family, Formula, Sequent, Signature, Variance};

/// A polarity with each pair incident independently with probability
/// `density`.
pub fn random_polarity<R: Rng>(rng: &mut R, w: usize, u: usize, density: f64) -> Polarity {
    let bits: Vec<bool> = (0..w * u).map(|_| rng.gen_bool(density)).collect();
    Polarity::from_matrix(w, u, |i, j| bits[i * u + j])
}

/// Random index tuples over the given sorts, each kept with probability
/// `density`.
fn random_tuples<R: Rng>(rng: &mut R, p: &Polarity, sorts: &[Sort], density: f64) -> Vec<Vec<usize>> {
    let all: Vec<PointSet> = sorts.iter().map(|&s| p.full(s)).collect();
    let mut out = Vec::new();
    for_each_tuple(&all, |t| {
        if rng.gen_bool(density) {
            out.push(t.to_vec());
        }
        true
    });
    out
}

/// A relation that is compatible on every polarity: `N` (or its converse)
/// for unary monotone connectives, the full relation otherwise.
fn fallback_tuples(p: &Polarity, family: Family, order_type: &[Variance], sorts: &[Sort]) -> Vec<Vec<usize>> {
    match (family, order_type) {
        (Family::G, [Variance::One]) => p.pairs().into_iter().map(|(w, u)| vec![w, u]).collect(),
        (Family::F, [Variance::One]) => p.pairs().into_iter().map(|(w, u)| vec![u, w]).collect(),
        _ => {
            let all: Vec<PointSet> = sorts.iter().map(|&s| p.full(s)).collect();
            let mut out = Vec::new();
            for_each_tuple(&all, |t| {
                out.push(t.to_vec());
                true
            });
            out
        }
    }
}

/// A compatible frame over `sig` with `|W| ∈ 1..=max_w`, `|U| ∈ 1..=max_u`.
/// Relations are drawn by rejection sampling, one connective at a time;
/// after `attempts` failures a connective falls back to a relation that is
/// compatible by construction.
pub fn random_frame<R: Rng>(rng: &mut R, sig: &Signature, max_w: usize, max_u: usize, attempts: usize) -> Frame {
    let w = rng.gen_range(1..=max_w.max(1));
    let u = rng.gen_range(1..=max_u.max(1));
    let density = rng.gen_range(0.2..0.8);
    let p = random_polarity(rng, w, u, density);
    random_frame_on(rng, p, sig, attempts)
}

/// A compatible frame on a given polarity; see [`random_frame`].
pub fn random_frame_on<R: Rng>(rng: &mut R, p: Polarity, sig: &Signature, attempts: usize) -> Frame {
    let mut relations = Vec::new();
    for c in &sig.connectives {
        let sorts = relation_sorts(c);
        let single = Signature::new(vec![c.clone()]).expect("connective of a valid signature");
        let mut chosen = None;
        for _ in 0..attempts {
            let density = rng.gen_range(0.1..0.9);
            let tuples = random_tuples(rng, &p, &sorts, density);
            let fr = Frame::new(p.clone(), single.clone(), vec![tuples.clone()]).expect("tuples fit");
            if fr.check_compatibility().compatible {
                chosen = Some(tuples);
                break;
            }
        }
        relations.push(chosen.unwrap_or_else(|| fallback_tuples(&p, c.family, &c.order_type, &sorts)));
    }
    Frame::new(p, sig.clone(), relations).expect("tuples fit")
}

/// A random formula of depth at most `depth` (atoms have depth 1).
pub fn random_formula<R: Rng>(rng: &mut R, sig: &Signature, props: &[&str], depth: usize) -> Formula {
    let nullary: Vec<&str> = sig
        .connectives
        .iter()
        .filter(|c| c.arity == 0)
        .map(|c| c.name.as_str())
        .collect();
    let leaf = |rng: &mut R| -> Formula {
        let choices = props.len() + 2 + nullary.len();
        let k = rng.gen_range(0..choices);
        if k < props.len() {
            Formula::prop(props[k])
        } else if k == props.len() {
            Formula::Top
        } else if k == props.len() + 1 {
            Formula::Bot
        } else {
            Formula::conn(nullary[k - props.len() - 2], vec![])
        }
    };
    if depth <= 1 || rng.gen_bool(0.25) {
        return leaf(rng);
    }
    let positive: Vec<_> = sig.connectives.iter().filter(|c| c.arity > 0).collect();
    let kinds = 2 + positive.len();
    match rng.gen_range(0..kinds) {
        0 => Formula::and(
            random_formula(rng, sig, props, depth - 1),
            random_formula(rng, sig, props, depth - 1),
        ),
        1 => Formula::or(
            random_formula(rng, sig, props, depth - 1),
            random_formula(rng, sig, props, depth - 1),
        ),
        k => {
            let c = positive[k - 2];
            let args = (0..c.arity)
                .map(|_| random_formula(rng, sig, props, depth - 1))
                .collect();
            Formula::conn(&c.name, args)
        }
    }
}

pub fn random_sequent<R: Rng>(rng: &mut R, sig: &Signature, props: &[&str], depth: usize) -> Sequent {
    Sequent::new(
        random_formula(rng, sig, props, depth),
        random_formula(rng, sig, props, depth),
    )
}

/// Every formula of depth at most `depth` (atoms have depth 1), layer by
/// layer in a fixed order.
pub fn all_formulas(sig: &Signature, props: &[&str], depth: usize) -> Vec<Formula> {
    if depth == 0 {
        return Vec::new();
    }
    let mut leaves: Vec<Formula> = props.iter().map(|p| Formula::prop(p)).collect();
    leaves.push(Formula::Top);
    leaves.push(Formula::Bot);
    for c in sig.connectives.iter().filter(|c| c.arity == 0) {
        leaves.push(Formula::conn(&c.name, vec![]));
    }
    let mut all = leaves;
    for _ in 1..depth {
        let prev = all.clone();
        let mut next = all.clone();
        // Only build nodes with at least one child of maximal depth, so
        // every formula appears once.
        let max = prev.iter().map(Formula::depth).max().unwrap_or(0);
        let is_max = |f: &Formula| f.depth() == max;
        for l in &prev {
            for r in &prev {
                if is_max(l) || is_max(r) {
                    next.push(Formula::and(l.clone(), r.clone()));
                    next.push(Formula::or(l.clone(), r.clone()));
                }
            }
        }
        for c in sig.connectives.iter().filter(|c| c.arity > 0) {
            let mut args = vec![0usize; c.arity];
            loop {
                let children: Vec<Formula> = args.iter().map(|&i| prev[i].clone()).collect();
                if children.iter().any(is_max) {
                    next.push(Formula::conn(&c.name, children));
                }
                let mut k = c.arity;
                loop {
                    if k == 0 {
                        break;
                    }
                    k -= 1;
                    args[k] += 1;
                    if args[k] < prev.len() {
                        break;
                    }
                    args[k] = 0;
                }
                if args.iter().all(|&a| a == 0) {
                    break;
                }
            }
        }
        all = next;
    }
    all
}
