//! Coproducts of frames and filter-ideal frames of finite algebras.

use crate::algebra::{check_complete_homomorphism, verify_normality, ComplexAlgebra, FiniteAlgebra};
use crate::bitset::{for_each_tuple, PointSet};
use crate::error::{Error, Result};
use crate::frame::{relation_sorts, Frame};
use crate::polarity::{Concept, Polarity, Sort};
use crate::syntax::Family;

/// The disjoint union of frames over one signature. Point names are
/// tagged with the 1-based component index (`"2:a"`); every pair and
/// every relation tuple that mixes components is added.
pub fn coproduct(frames: &[&Frame]) -> Result<Frame> {
    let first = frames
        .first()
        .ok_or_else(|| Error::Frame("the coproduct needs at least one frame".into()))?;
    let signature = first.signature.clone();
    if frames.iter().any(|f| f.signature != signature) {
        return Err(Error::Signature("coproduct components have different signatures".into()));
    }
    // Component and local index of every point, per sort.
    let layout = |sort: Sort| -> Vec<(usize, usize)> {
        frames
            .iter()
            .enumerate()
            .flat_map(|(i, f)| (0..f.polarity.len(sort)).map(move |x| (i, x)))
            .collect()
    };
    let (ws, us) = (layout(Sort::W), layout(Sort::U));
    let tag = |sort: Sort, &(i, x): &(usize, usize)| format!("{}:{}", i + 1, frames[i].polarity.names(sort)[x]);
    let w_names = ws.iter().map(|p| tag(Sort::W, p)).collect();
    let u_names = us.iter().map(|p| tag(Sort::U, p)).collect();
    let mut pairs = Vec::new();
    for (w, &(i, lw)) in ws.iter().enumerate() {
        for (u, &(j, lu)) in us.iter().enumerate() {
            if i != j || frames[i].polarity.incident(lw, lu) {
                pairs.push((w, u));
            }
        }
    }
    let polarity = Polarity::new(w_names, u_names, pairs)?;
    let mut relations = Vec::new();
    for (ci, c) in signature.connectives.iter().enumerate() {
        let sorts = relation_sorts(c);
        let parts: Vec<&Vec<(usize, usize)>> = sorts
            .iter()
            .map(|s| match s {
                Sort::W => &ws,
                Sort::U => &us,
            })
            .collect();
        let full: Vec<PointSet> = sorts.iter().map(|&s| polarity.full(s)).collect();
        let mut tuples = Vec::new();
        for_each_tuple(&full, |t| {
            let comps: Vec<(usize, usize)> = t.iter().zip(&parts).map(|(&x, p)| p[x]).collect();
            let i = comps[0].0;
            let keep = if comps.iter().all(|&(j, _)| j == i) {
                let local: Vec<usize> = comps.iter().map(|&(_, x)| x).collect();
                frames[i].relation_at(ci).contains(&local)
            } else {
                true
            };
            if keep {
                tuples.push(t.to_vec());
            }
            true
        });
        relations.push(tuples);
    }
    Frame::new(polarity, signature, relations)
}

/// The filters of a finite lattice, one principal filter `↑a` per element
/// in element order.
pub fn filters(a: &FiniteAlgebra) -> Vec<PointSet> {
    (0..a.len()).map(|x| a.lattice.up_set(x)).collect()
}

/// The ideals of a finite lattice, `↓a` per element in element order.
pub fn ideals(a: &FiniteAlgebra) -> Vec<PointSet> {
    (0..a.len()).map(|x| a.lattice.down_set(x)).collect()
}

/// The filter-ideal frame of a normal algebra: filters `↑a` (named
/// `↑a`), ideals `↓a`, `F N I` iff `F ∩ I ≠ ∅`, `R_f(I, X̄)` iff
/// `f(ā) ∈ I` for some `ā ∈ X̄`, and `R_g(F, Ȳ)` iff `g(ā) ∈ F` for some
/// `ā ∈ Ȳ`. Coordinates range over filters or ideals by sort.
pub fn filter_ideal_frame(a: &FiniteAlgebra) -> Result<Frame> {
    if let Some(v) = verify_normality(a).violation {
        return Err(Error::NotNormal(format!(
            "`{}` fails at coordinate {} with arguments ({})",
            v.connective,
            v.coordinate,
            v.args.join(", ")
        )));
    }
    let fs = filters(a);
    let is = ideals(a);
    let w_names = a.names.iter().map(|n| format!("↑{n}")).collect();
    let u_names = a.names.iter().map(|n| format!("↓{n}")).collect();
    let mut pairs = Vec::new();
    for (f, fset) in fs.iter().enumerate() {
        for (i, iset) in is.iter().enumerate() {
            if !fset.intersect(*iset).is_empty() {
                pairs.push((f, i));
            }
        }
    }
    let polarity = Polarity::new(w_names, u_names, pairs)?;
    let mut relations = Vec::new();
    for (ci, c) in a.signature.connectives.iter().enumerate() {
        let sorts = relation_sorts(c);
        let full: Vec<PointSet> = sorts.iter().map(|&s| polarity.full(s)).collect();
        let set_of = |s: Sort, x: usize| match s {
            Sort::W => fs[x],
            Sort::U => is[x],
        };
        let mut tuples = Vec::new();
        for_each_tuple(&full, |t| {
            let head = set_of(sorts[0], t[0]);
            let args: Vec<PointSet> = sorts[1..].iter().zip(&t[1..]).map(|(&s, &x)| set_of(s, x)).collect();
            let hit = !for_each_tuple(&args, |elems| !head.contains(a.op(ci, elems)));
            if hit {
                tuples.push(t.to_vec());
            }
            true
        });
        debug_assert!(matches!(c.family, Family::F | Family::G));
        relations.push(tuples);
    }
    Frame::new(polarity, a.signature.clone(), relations)
}

/// The filter-ideal frame of a frame's complex algebra.
pub fn filter_ideal_extension(frame: &Frame, cap: usize) -> Result<Frame> {
    let algebra = ComplexAlgebra::build(frame, cap)?;
    filter_ideal_frame(&algebra.algebra)
}

/// The map `c ↦ ({↑a ∋ c}, {↓a ∋ c})` from `A` into the complex algebra of
/// its filter-ideal frame, by concept index. It is an isomorphism for
/// every finite normal `A`; this returns an error if it is not.
pub fn canonical_embedding(a: &FiniteAlgebra, star: &Frame, star_algebra: &ComplexAlgebra) -> Result<Vec<usize>> {
    let fs = filters(a);
    let is = ideals(a);
    let h = (0..a.len())
        .map(|c| {
            let concept = Concept {
                extent: (0..fs.len()).filter(|&f| fs[f].contains(c)).collect(),
                intent: (0..is.len()).filter(|&i| is[i].contains(c)).collect(),
            };
            star_algebra.index_of(&concept).ok_or_else(|| {
                Error::Algebra(format!(
                    "element `{}` does not give a concept {}",
                    a.names[c],
                    star.polarity.show_concept(&concept)
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = check_complete_homomorphism(&h, a, &star_algebra.algebra)?;
    if let Some(msg) = report.failure {
        return Err(Error::NotHomomorphism(msg));
    }
    let mut hit = PointSet::EMPTY;
    for &x in &h {
        hit.insert(x);
    }
    if hit.len() != star_algebra.len() || h.len() != star_algebra.len() {
        return Err(Error::Algebra("the canonical map is not a bijection".into()));
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{find_isomorphism, homomorphisms, product, Lattice, OpTable};
    use crate::morphism::{check_pmorphism, dual_pmorphism, is_injective, is_surjective};
    use crate::polarity::DEFAULT_CONCEPT_CAP;
    use crate::random::random_frame;
    use crate::syntax::{Connective, Signature, Variance};
    use rand::SeedableRng;

    const CAP: usize = DEFAULT_CONCEPT_CAP;

    fn pol(w: &[&str], u: &[&str], n: &[(usize, usize)]) -> Polarity {
        Polarity::new(
            w.iter().map(|s| s.to_string()).collect(),
            u.iter().map(|s| s.to_string()).collect(),
            n.iter().copied(),
        )
        .unwrap()
    }

    /// The two coproduct components: `N_i = {(a_i,x_i),(b_i,y_i)}` and
    /// `R_i = {(a_i,y_i),(b_i,x_i)}`.
    fn components() -> (Frame, Frame) {
        let f = |i: usize| {
            let a = format!("a{i}");
            let b = format!("b{i}");
            let x = format!("x{i}");
            let y = format!("y{i}");
            Frame::new(
                pol(&[&a, &b], &[&x, &y], &[(0, 0), (1, 1)]),
                Signature::box_only(),
                vec![vec![vec![0, 1], vec![1, 0]]],
            )
            .unwrap()
        };
        (f(1), f(2))
    }

    #[test]
    fn coproduct_of_example_frames() {
        let (f1, f2) = components();
        let c = coproduct(&[&f1, &f2]).unwrap();
        assert_eq!(c.polarity.pairs().len(), 12);
        assert_eq!(c.relation("box").unwrap().len(), 12);
        assert_eq!(c.polarity.names(Sort::W)[2], "2:a2");
        assert!(c.check_compatibility().compatible);
        let alg = ComplexAlgebra::build(&c, CAP).unwrap();
        assert_eq!(alg.len(), 16);
        let a1 = ComplexAlgebra::build(&f1, CAP).unwrap();
        let a2 = ComplexAlgebra::build(&f2, CAP).unwrap();
        let prod = product(&[&a1.algebra, &a2.algebra]).unwrap();
        assert!(find_isomorphism(&alg.algebra, &prod).is_some());
    }

    #[test]
    fn coproduct_of_one_frame_renames() {
        let (f1, _) = components();
        let c = coproduct(&[&f1]).unwrap();
        assert_eq!(c.polarity.pairs(), f1.polarity.pairs());
        assert_eq!(c.relations(), f1.relations());
        assert_eq!(c.polarity.names(Sort::U)[1], "1:y1");
    }

    #[test]
    fn coproduct_rejects_mixed_signatures() {
        let (f1, _) = components();
        let bare = Frame::bare(f1.polarity.clone());
        assert!(matches!(coproduct(&[&f1, &bare]), Err(Error::Signature(_))));
    }

    /// Exhaustive scan for filters: nonempty, upward closed and closed
    /// under binary meets.
    fn filters_by_scan(a: &FiniteAlgebra) -> Vec<PointSet> {
        let l = &a.lattice;
        PointSet::subsets(a.len())
            .filter(|s| !s.is_empty())
            .filter(|s| s.iter().all(|x| l.up_set(x).is_subset(*s)))
            .filter(|s| s.iter().all(|x| s.iter().all(|y| s.contains(l.meet(x, y)))))
            .collect()
    }

    fn ideals_by_scan(a: &FiniteAlgebra) -> Vec<PointSet> {
        let l = &a.lattice;
        PointSet::subsets(a.len())
            .filter(|s| !s.is_empty())
            .filter(|s| s.iter().all(|x| l.down_set(x).is_subset(*s)))
            .filter(|s| s.iter().all(|x| s.iter().all(|y| s.contains(l.join(x, y)))))
            .collect()
    }

    fn sorted(mut v: Vec<PointSet>) -> Vec<PointSet> {
        v.sort();
        v
    }

    #[test]
    fn filters_and_ideals_are_principal() {
        let (f1, _) = components();
        let four = ComplexAlgebra::build(&f1, CAP).unwrap().algebra;
        for a in [FiniteAlgebra::chain(1), FiniteAlgebra::chain(2), FiniteAlgebra::chain(5), four] {
            assert_eq!(sorted(filters(&a)), sorted(filters_by_scan(&a)));
            assert_eq!(sorted(ideals(&a)), sorted(ideals_by_scan(&a)));
        }
        let two = FiniteAlgebra::chain(2);
        assert_eq!(filters(&two), vec![PointSet::full(2), PointSet::singleton(1)]);
        assert_eq!(ideals(&two).len(), 2);
    }

    #[test]
    fn filter_ideal_frames_of_small_algebras() {
        let two = FiniteAlgebra::chain(2);
        let f = filter_ideal_frame(&two).unwrap();
        // ↑a N ↓b iff a ≤ b.
        assert_eq!(f.polarity.pairs(), vec![(0, 0), (0, 1), (1, 1)]);
        let alg = ComplexAlgebra::build(&f, CAP).unwrap();
        assert_eq!(alg.len(), 2);

        let one = FiniteAlgebra::chain(1);
        let f = filter_ideal_frame(&one).unwrap();
        assert_eq!(f.polarity.pairs(), vec![(0, 0)]);
    }

    #[test]
    fn swap_algebra_is_recovered() {
        let f1 = Frame::new(
            pol(&["a1", "b1"], &["x1", "y1"], &[(0, 0), (1, 1)]),
            Signature::box_only(),
            vec![vec![vec![0, 1], vec![1, 0]]],
        )
        .unwrap();
        let a = ComplexAlgebra::build(&f1, CAP).unwrap().algebra;
        let star = filter_ideal_frame(&a).unwrap();
        assert!(star.check_compatibility().compatible);
        let sa = ComplexAlgebra::build(&star, CAP).unwrap();
        let h = canonical_embedding(&a, &star, &sa).unwrap();
        assert!(check_complete_homomorphism(&h, &a, &sa.algebra).unwrap().homomorphism);
        assert!(find_isomorphism(&a, &sa.algebra).is_some());
    }

    #[test]
    fn extensions_of_example_frames() {
        let f2 = Frame::with_box_equal_to_n(pol(&["a2"], &["x2", "y2"], &[(0, 0)]));
        let e = filter_ideal_extension(&f2, CAP).unwrap();
        assert_eq!((e.polarity.w_len(), e.polarity.u_len()), (2, 2));

        let (f1, _) = components();
        let e = filter_ideal_extension(&f1, CAP).unwrap();
        assert_eq!((e.polarity.w_len(), e.polarity.u_len()), (4, 4));
        let a = ComplexAlgebra::build(&f1, CAP).unwrap().algebra;
        for (f, i) in e.polarity.pairs() {
            assert!(a.lattice.leq(f, i));
        }
        assert_eq!(e.polarity.pairs().len(), 9);

        let empty = Frame::new(pol(&["a"], &["x"], &[]), Signature::box_only(), vec![vec![]]).unwrap();
        assert!(empty.check_compatibility().compatible);
        let e = filter_ideal_extension(&empty, CAP).unwrap();
        let a = ComplexAlgebra::build(&empty, CAP).unwrap().algebra;
        // R★(F, I) holds iff box maps something of I into F.
        for t in e.relation("box").unwrap().tuples() {
            let (fset, iset) = (filters(&a)[t[0]], ideals(&a)[t[1]]);
            assert!(iset.iter().any(|x| fset.contains(a.op(0, &[x]))));
        }
    }

    #[test]
    fn non_normal_algebras_are_rejected() {
        let lattice = Lattice::from_order(2, |x, y| x <= y).unwrap();
        let a = FiniteAlgebra::new(
            vec!["0".into(), "1".into()],
            lattice,
            Signature::box_only(),
            vec![OpTable { arity: 1, size: 2, table: vec![0, 0] }],
        )
        .unwrap();
        assert!(matches!(filter_ideal_frame(&a), Err(Error::NotNormal(_))));
    }

    fn mixed_signature() -> Signature {
        Signature::new(vec![
            Connective::new("box", Family::G, vec![Variance::One]),
            Connective::new("dia", Family::F, vec![Variance::One]),
            Connective::new("neg", Family::G, vec![Variance::Partial]),
            Connective::new("lneg", Family::F, vec![Variance::Partial]),
        ])
        .unwrap()
    }

    /// `((R★_f)⁽⁰⁾[X])↓` is the set of filters containing `f[X]`, and dually
    /// `((R★_g)⁽⁰⁾[Y])↑` is the set of ideals containing `g[Y]`, for unary
    /// connectives of either order type.
    #[test]
    fn section_identities_of_filter_ideal_frames() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let sig = mixed_signature();
        for _ in 0..30 {
            let fr = random_frame(&mut rng, &sig, 3, 3, 20);
            let a = ComplexAlgebra::build(&fr, CAP).unwrap().algebra;
            let star = filter_ideal_frame(&a).unwrap();
            assert!(star.check_compatibility().compatible);
            let p = &star.polarity;
            let (fs, is) = (filters(&a), ideals(&a));
            for (ci, c) in sig.connectives.iter().enumerate() {
                let rel = star.relation_at(ci);
                let arg_sort = rel.sorts()[1];
                for x in 0..a.len() {
                    let arg = match arg_sort {
                        Sort::W => fs[x],
                        Sort::U => is[x],
                    };
                    let image: PointSet = arg.iter().map(|e| a.op(ci, &[e])).collect();
                    let section = rel.section(0, &[PointSet::singleton(x)]);
                    match c.family {
                        Family::F => {
                            let expected: PointSet = (0..fs.len()).filter(|&g| image.is_subset(fs[g])).collect();
                            assert_eq!(p.down(section), expected);
                        }
                        Family::G => {
                            let expected: PointSet = (0..is.len()).filter(|&j| image.is_subset(is[j])).collect();
                            assert_eq!(p.up(section), expected);
                        }
                    }
                }
            }
            let sa = ComplexAlgebra::build(&star, CAP).unwrap();
            canonical_embedding(&a, &star, &sa).unwrap();
        }
    }

    /// An injective (surjective) homomorphism `A → B` dualizes to a
    /// surjective (injective) p-morphism between the filter-ideal frames.
    #[test]
    fn arrows_reverse_between_filter_ideal_frames() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        let sig = Signature::box_only();
        let mut seen = (0, 0);
        for _ in 0..60 {
            let fa = random_frame(&mut rng, &sig, 3, 3, 20);
            let fb = random_frame(&mut rng, &sig, 3, 3, 20);
            let a = ComplexAlgebra::build(&fa, CAP).unwrap().algebra;
            let b = ComplexAlgebra::build(&fb, CAP).unwrap().algebra;
            let (sa_frame, sb_frame) = (filter_ideal_frame(&a).unwrap(), filter_ideal_frame(&b).unwrap());
            let sa = ComplexAlgebra::build(&sa_frame, CAP).unwrap();
            let sb = ComplexAlgebra::build(&sb_frame, CAP).unwrap();
            let ea = canonical_embedding(&a, &sa_frame, &sa).unwrap();
            let eb = canonical_embedding(&b, &sb_frame, &sb).unwrap();
            for h in homomorphisms(&a, &b, 6).unwrap() {
                // Transport h to the complex algebras of the frames.
                let mut moved = vec![0; sa.len()];
                for x in 0..a.len() {
                    moved[ea[x]] = eb[h[x]];
                }
                let d = dual_pmorphism(&moved, &sa_frame, &sa, &sb_frame, &sb).unwrap();
                assert!(check_pmorphism(&d, &sb_frame, &sa_frame, CAP).unwrap().pmorphism);
                let injective_h = {
                    let mut s = PointSet::EMPTY;
                    h.iter().for_each(|&y| s.insert(y));
                    s.len() == h.len()
                };
                let surjective_h = (0..b.len()).all(|y| h.contains(&y));
                if injective_h {
                    seen.0 += 1;
                    assert!(is_surjective(&d, &sb_frame, &sa_frame, &sa, CAP).unwrap());
                }
                if surjective_h {
                    seen.1 += 1;
                    assert!(is_injective(&d, &sb_frame, &sb, &sa_frame, &sa, CAP).unwrap());
                }
            }
        }
        assert!(seen.0 > 0 && seen.1 > 0, "{seen:?}");
    }
}
