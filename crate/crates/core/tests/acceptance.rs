//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use lekit::algebra::{check_complete_homomorphism, find_isomorphism, homomorphisms, product, ComplexAlgebra, FiniteAlgebra};
use lekit::bitset::{for_each_tuple, PointSet};
use lekit::cli::{
    falsify_coproduct, falsify_generated_subframe, falsify_pmorphic_image, BuiltinCondition, ClosureCondition,
};
use lekit::constructions::{canonical_embedding, coproduct, filter_ideal_extension, filter_ideal_frame};
use lekit::fol::{eval_fo, standard_translate, Var};
use lekit::frame::{relation_sorts, Frame};
use lekit::morphism::{check_pmorphism, dual_hom, dual_pmorphism, is_injective, is_surjective, PMorphism};
use lekit::polarity::{Polarity, Sort, DEFAULT_CONCEPT_CAP};
use lekit::random::{all_formulas, random_frame, random_sequent};
use lekit::semantics::{algebra_validates, cosatisfies, frame_validates, satisfies, Model, DEFAULT_BUDGET};
use lekit::syntax::{Connective, Family, Sequent, Signature, Variance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CAP: usize = DEFAULT_CONCEPT_CAP;

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn mixed() -> Signature {
    Signature::new(vec![
        Connective::new("box", Family::G, vec![Variance::One]),
        Connective::new("dia", Family::F, vec![Variance::One]),
        Connective::new("imp", Family::G, vec![Variance::Partial, Variance::One]),
        Connective::new("fus", Family::F, vec![Variance::One, Variance::Partial]),
    ])
    .unwrap()
}

fn example(name: &str) -> Frame {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name);
    Frame::from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn morphism(name: &str, source: &Frame, target: &Frame) -> PMorphism {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name);
    PMorphism::from_json(&std::fs::read_to_string(path).unwrap(), source, target).unwrap()
}

fn injective(h: &[usize]) -> bool {
    let mut seen = PointSet::EMPTY;
    h.iter().all(|&x| {
        let fresh = !seen.contains(x);
        seen.insert(x);
        fresh
    })
}

fn surjective(h: &[usize], size: usize) -> bool {
    (0..size).all(|y| h.contains(&y))
}

fn golden() -> Outcome {
    // Coproduct example.
    let (c1, c2) = (example("coproduct_F1.json"), example("coproduct_F2.json"));
    let sum = coproduct(&[&c1, &c2]).map_err(err)?;
    ensure(sum.polarity.pairs().len() == 12, || format!("|∐N| = {}", sum.polarity.pairs().len()))?;
    let sa = ComplexAlgebra::build(&sum, CAP).map_err(err)?;
    ensure(sa.len() == 16, || format!("{} coproduct concepts", sa.len()))?;

    // Generated subframe: F2 → F1 with the repaired T.
    let (m1, m2) = (example("morphism1_F1.json"), example("morphism1_F2.json"));
    let d = morphism("morphism1_ST.json", &m2, &m1);
    let r = check_pmorphism(&d, &m2, &m1, CAP).map_err(err)?;
    ensure(r.pmorphism, || format!("morphism1: {r:?}"))?;
    let (a1, a2) = (ComplexAlgebra::build(&m1, CAP).map_err(err)?, ComplexAlgebra::build(&m2, CAP).map_err(err)?);
    ensure(is_injective(&d, &m2, &a2, &m1, &a1, CAP).map_err(err)?, || "morphism1 not injective".into())?;
    ensure(!is_surjective(&d, &m2, &m1, &a1, CAP).map_err(err)?, || "morphism1 surjective".into())?;
    let (p1, p2) = (&m1.polarity, &m2.polarity);
    let s = PointSet::singleton;
    ensure(
        p2.down(d.t0(s(0))) == s(0)
            && d.s0(p1.up(s(0))) == s(0)
            && p2.down(d.t0(s(1))).is_empty()
            && d.s0(p1.up(s(1))).is_empty()
            && d.s0(s(0)) == s(0)
            && d.s0(s(1)).is_empty(),
        || "morphism1 stated witnesses".into(),
    )?;
    let literal = morphism("morphism1_ST_literal.json", &m2, &m1);
    let lr = check_pmorphism(&literal, &m2, &m1, CAP).map_err(err)?;
    ensure(lr.violation.as_ref().is_some_and(|v| v.condition == "p3"), || format!("literal T: {lr:?}"))?;

    // P-morphic image: S = T = ∅.
    let (i1, i2) = (example("morphism2_F1.json"), example("morphism2_F2.json"));
    let empty = morphism("morphism2_ST.json", &i1, &i2);
    ensure(check_pmorphism(&empty, &i1, &i2, CAP).map_err(err)?.pmorphism, || "morphism2 rejected".into())?;
    let (b1, b2) = (ComplexAlgebra::build(&i1, CAP).map_err(err)?, ComplexAlgebra::build(&i2, CAP).map_err(err)?);
    ensure(is_surjective(&empty, &i1, &i2, &b2, CAP).map_err(err)?, || "morphism2 not surjective".into())?;
    ensure(!is_injective(&empty, &i1, &b1, &i2, &b2, CAP).map_err(err)?, || "morphism2 injective".into())?;

    // Non-morphism.
    let full = morphism("nonmorphism_ST.json", &i1, &i2);
    let nr = check_pmorphism(&full, &i1, &i2, CAP).map_err(err)?;
    ensure(!nr.pmorphism, || "nonmorphism accepted".into())?;
    let w = nr.equal_maps.ok_or("no equal-maps witness")?;
    ensure(w.detail == "(T^(0)[a2])↓ = ∅ ≠ {a1, b1} = S^(0)[a2↑]", || w.detail.clone())?;

    // Non-definability examples.
    let cond = |b| ClosureCondition::Builtin(b);
    let f1 = falsify_coproduct(&cond(BuiltinCondition::REqualsNComplement), &[&c1, &c2]).map_err(err)?;
    ensure(f1.confirmed && f1.notes.iter().any(|n| n == "(W1×U2)∪(W2×U1) ⊆ N ∩ R"), || format!("{f1:?}"))?;
    let f2 = falsify_generated_subframe(&cond(BuiltinCondition::EveryUHasNonRW), &m2, &m1, &d, CAP).map_err(err)?;
    ensure(f2.confirmed, || format!("{f2:?}"))?;
    let f3 = falsify_pmorphic_image(&cond(BuiltinCondition::RComplementSubsetN), &i1, &i2, &empty, CAP).map_err(err)?;
    ensure(f3.confirmed, || format!("{f3:?}"))?;
    Ok("4 examples, 3 falsifier verdicts; literal T of the subframe example fails p3 (repaired T ships)".into())
}

fn bridge() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let sig = mixed();
    let mut valid = 0;
    for i in 0..200 {
        let frame = random_frame(&mut rng, &sig, 4, 4, 20);
        let alg = ComplexAlgebra::build(&frame, CAP).map_err(err)?;
        let s = random_sequent(&mut rng, &sig, &["p", "q"], 3);
        let by_frame = frame_validates(&frame, &alg, &s, DEFAULT_BUDGET).map_err(err)?;
        let by_algebra = algebra_validates(&alg.algebra, &s, DEFAULT_BUDGET).map_err(err)?;
        ensure(by_frame.valid == by_algebra.valid, || format!("pair {i}: {s}"))?;
        valid += by_frame.valid as usize;
    }
    Ok(format!("200 pairs agree ({valid} valid)"))
}

/// Every relation over the given sorts, as tuple lists.
fn all_relations(p: &Polarity, sorts: &[Sort]) -> Vec<Vec<Vec<usize>>> {
    let full: Vec<PointSet> = sorts.iter().map(|&s| p.full(s)).collect();
    let mut cells = Vec::new();
    for_each_tuple(&full, |t| {
        cells.push(t.to_vec());
        true
    });
    (0u64..1 << cells.len())
        .map(|mask| (0..cells.len()).filter(|&i| mask >> i & 1 == 1).map(|i| cells[i].clone()).collect())
        .collect()
}

fn all_polarities(w: usize, u: usize) -> Vec<Polarity> {
    (0u64..1 << (w * u))
        .map(|mask| Polarity::from_matrix(w, u, |i, j| mask >> (i * u + j) & 1 == 1))
        .collect()
}

fn translation() -> Outcome {
    let sig = Signature::box_only();
    let formulas = all_formulas(&sig, &["p"], 3);
    let translated: Vec<_> = formulas
        .iter()
        .map(|phi| {
            (
                standard_translate(&sig, phi, Var::w(0)).unwrap(),
                standard_translate(&sig, phi, Var::u(0)).unwrap(),
            )
        })
        .collect();
    let mut frames = 0;
    let mut checks = 0u64;
    for p in all_polarities(2, 2) {
        for rel in all_relations(&p, &[Sort::W, Sort::U]) {
            let frame = Frame::new(p.clone(), sig.clone(), vec![rel]).map_err(err)?;
            if !frame.check_compatibility().compatible {
                continue;
            }
            frames += 1;
            let alg = ComplexAlgebra::build(&frame, CAP).map_err(err)?;
            for v in 0..alg.len() {
                let m = Model::from_indices(&frame, &alg, &BTreeMap::from([("p".to_string(), v)]));
                for (phi, (tx, ty)) in formulas.iter().zip(&translated) {
                    for w in 0..2 {
                        let env = BTreeMap::from([(Var::w(0), w)]);
                        ensure(satisfies(&m, w, phi).map_err(err)? == eval_fo(&m, tx, &env).map_err(err)?, || {
                            format!("{phi} at w{w}")
                        })?;
                    }
                    for u in 0..2 {
                        let env = BTreeMap::from([(Var::u(0), u)]);
                        ensure(cosatisfies(&m, u, phi).map_err(err)? == eval_fo(&m, ty, &env).map_err(err)?, || {
                            format!("{phi} at u{u}")
                        })?;
                    }
                    checks += 4;
                }
            }
        }
    }
    Ok(format!("{} formulas on {frames} frames, {checks} point checks agree", formulas.len()))
}

/// Random p-morphisms by rejection sampling of relation pairs.
fn sampled_pmorphisms(rng: &mut ChaCha8Rng, sig: &Signature, wanted: usize) -> Vec<(Frame, Frame, PMorphism)> {
    let mut found = Vec::new();
    while found.len() < wanted {
        let f1 = random_frame(rng, sig, 3, 3, 20);
        let f2 = random_frame(rng, sig, 3, 3, 20);
        for _ in 0..50 {
            let density = rng.gen_range(0.1..0.9);
            let mut s = Vec::new();
            for w in 0..f1.polarity.w_len() {
                for u in 0..f2.polarity.u_len() {
                    if rng.gen_bool(density) {
                        s.push((w, u));
                    }
                }
            }
            let mut t = Vec::new();
            for u in 0..f1.polarity.u_len() {
                for w in 0..f2.polarity.w_len() {
                    if rng.gen_bool(density) {
                        t.push((u, w));
                    }
                }
            }
            let d = PMorphism::new(&f1, &f2, s, t).unwrap();
            if check_pmorphism(&d, &f1, &f2, CAP).unwrap().pmorphism {
                found.push((f1, f2, d));
                break;
            }
        }
    }
    found
}

fn duality() -> Outcome {
    let round_trip = |d: &PMorphism, f1: &Frame, f2: &Frame| -> Result<(), String> {
        let a1 = ComplexAlgebra::build(f1, CAP).map_err(err)?;
        let a2 = ComplexAlgebra::build(f2, CAP).map_err(err)?;
        let h = dual_hom(d, f1, &a1, f2, &a2, CAP).map_err(err)?;
        let back = dual_pmorphism(&h, f2, &a2, f1, &a1).map_err(err)?;
        ensure(&back == d, || "(S,T) round trip".into())
    };
    let (m1, m2) = (example("morphism1_F1.json"), example("morphism1_F2.json"));
    round_trip(&morphism("morphism1_ST.json", &m2, &m1), &m2, &m1)?;
    let (i1, i2) = (example("morphism2_F1.json"), example("morphism2_F2.json"));
    round_trip(&morphism("morphism2_ST.json", &i1, &i2), &i1, &i2)?;

    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let sig = Signature::box_only();
    for (f1, f2, d) in sampled_pmorphisms(&mut rng, &sig, 50) {
        round_trip(&d, &f1, &f2)?;
    }

    let mut homs = 0;
    while homs < 50 {
        let f1 = random_frame(&mut rng, &sig, 3, 3, 20);
        let f2 = random_frame(&mut rng, &sig, 3, 3, 20);
        let a1 = ComplexAlgebra::build(&f1, CAP).map_err(err)?;
        let a2 = ComplexAlgebra::build(&f2, CAP).map_err(err)?;
        if a1.len() > 8 || a2.len() > 8 {
            continue;
        }
        let all = homomorphisms(&a1.algebra, &a2.algebra, 16).map_err(err)?;
        if all.is_empty() {
            continue;
        }
        let h = &all[rng.gen_range(0..all.len())];
        let d = dual_pmorphism(h, &f1, &a1, &f2, &a2).map_err(err)?;
        ensure(check_pmorphism(&d, &f2, &f1, CAP).map_err(err)?.pmorphism, || "dual is not a p-morphism".into())?;
        let back = dual_hom(&d, &f2, &a2, &f1, &a1, CAP).map_err(err)?;
        ensure(&back == h, || format!("h round trip: {h:?} vs {back:?}"))?;
        homs += 1;
    }
    Ok("2 golden + 50 sampled p-morphisms, 50 homomorphisms round-trip".into())
}

/// A sequent valid on every premise frame, drawn from at most 30 tries.
fn valid_sequent(rng: &mut ChaCha8Rng, sig: &Signature, premises: &[&Frame]) -> Result<Option<Sequent>, String> {
    let algebras = premises
        .iter()
        .map(|f| ComplexAlgebra::build(f, CAP).map_err(err))
        .collect::<Result<Vec<_>, _>>()?;
    for _ in 0..30 {
        let s = random_sequent(rng, sig, &["p", "q"], 3);
        let mut ok = true;
        for (f, a) in premises.iter().zip(&algebras) {
            if !frame_validates(f, a, &s, DEFAULT_BUDGET).map_err(err)?.valid {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(Some(s));
        }
    }
    Ok(None)
}

fn validates(f: &Frame, s: &Sequent) -> Result<bool, String> {
    let a = ComplexAlgebra::build(f, CAP).map_err(err)?;
    Ok(frame_validates(f, &a, s, DEFAULT_BUDGET).map_err(err)?.valid)
}

/// A p-morphism `source → target` dual to a homomorphism
/// `target⁺ → source⁺` with the given injectivity or surjectivity.
fn dual_with(
    rng: &mut ChaCha8Rng,
    source: &Frame,
    target: &Frame,
    want_injective_hom: bool,
) -> Result<Option<PMorphism>, String> {
    let sa = ComplexAlgebra::build(source, CAP).map_err(err)?;
    let ta = ComplexAlgebra::build(target, CAP).map_err(err)?;
    let homs: Vec<Vec<usize>> = homomorphisms(&ta.algebra, &sa.algebra, 64)
        .map_err(err)?
        .into_iter()
        .filter(|h| if want_injective_hom { injective(h) } else { surjective(h, sa.len()) })
        .collect();
    if homs.is_empty() {
        return Ok(None);
    }
    let h = &homs[rng.gen_range(0..homs.len())];
    Ok(Some(dual_pmorphism(h, target, &ta, source, &sa).map_err(err)?))
}

fn preservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let sig = Signature::box_only();
    let mut applied = [0usize; 4];
    for trial in 0..500 {
        let item = trial % 4;
        match item {
            0 | 1 => {
                // Item 1: (S,T): F ↠ G from an injective G⁺ → F⁺. Item 2:
                // (S,T): G ↪ F from a surjective F⁺ → G⁺. Resample until
                // such a homomorphism exists.
                let mut picked = None;
                for _ in 0..50 {
                    let f = random_frame(&mut rng, &sig, 4, 4, 20);
                    let g = random_frame(&mut rng, &sig, 3, 3, 20);
                    let (source, target) = if item == 0 { (f, g) } else { (g, f) };
                    if let Some(d) = dual_with(&mut rng, &source, &target, item == 0)? {
                        picked = Some((source, target, d));
                        break;
                    }
                }
                let Some((source, target, d)) = picked else {
                    continue;
                };
                let (source, target) = (&source, &target);
                ensure(check_pmorphism(&d, source, target, CAP).map_err(err)?.pmorphism, || {
                    format!("trial {trial}: dual is not a p-morphism")
                })?;
                let sa = ComplexAlgebra::build(source, CAP).map_err(err)?;
                let ta = ComplexAlgebra::build(target, CAP).map_err(err)?;
                if item == 0 {
                    ensure(is_surjective(&d, source, target, &ta, CAP).map_err(err)?, || format!("trial {trial}: not surjective"))?;
                } else {
                    ensure(is_injective(&d, source, &sa, target, &ta, CAP).map_err(err)?, || format!("trial {trial}: not injective"))?;
                }
                // The image (item 1) or the subframe (item 2) inherits validity
                // from F.
                let (premise, conclusion) = if item == 0 { (source, target) } else { (target, source) };
                if let Some(s) = valid_sequent(&mut rng, &sig, &[premise])? {
                    ensure(validates(conclusion, &s)?, || format!("trial {trial}: item {} fails on {s}", item + 1))?;
                    applied[item] += 1;
                }
            }
            2 => {
                let f1 = random_frame(&mut rng, &sig, 4, 4, 20);
                let f2 = random_frame(&mut rng, &sig, 4, 4, 20);
                if let Some(s) = valid_sequent(&mut rng, &sig, &[&f1, &f2])? {
                    let sum = coproduct(&[&f1, &f2]).map_err(err)?;
                    ensure(validates(&sum, &s)?, || format!("trial {trial}: item 3 fails on {s}"))?;
                    applied[2] += 1;
                }
            }
            _ => {
                let f = random_frame(&mut rng, &sig, 4, 4, 20);
                let star = filter_ideal_extension(&f, CAP).map_err(err)?;
                if let Some(s) = valid_sequent(&mut rng, &sig, &[&star])? {
                    ensure(validates(&f, &s)?, || format!("trial {trial}: item 4 fails on {s}"))?;
                    applied[3] += 1;
                }
            }
        }
    }
    Ok(format!(
        "500 trials, non-vacuous per item: {} / {} / {} / {}",
        applied[0], applied[1], applied[2], applied[3]
    ))
}

fn canonical() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let sig = mixed();
    let mut done = 0;
    let mut tries = 0;
    while done < 30 {
        tries += 1;
        ensure(tries < 10_000, || format!("only {done} algebras of size ≤ 8 found"))?;
        let f = random_frame(&mut rng, &sig, 3, 3, 20);
        let a: FiniteAlgebra = ComplexAlgebra::build(&f, CAP).map_err(err)?.algebra;
        if a.len() > 8 {
            continue;
        }
        let star = filter_ideal_frame(&a).map_err(err)?;
        ensure(star.check_compatibility().compatible, || "filter-ideal frame is incompatible".into())?;
        let sa = ComplexAlgebra::build(&star, CAP).map_err(err)?;
        let iso = find_isomorphism(&a, &sa.algebra).ok_or("no isomorphism found")?;
        ensure(check_complete_homomorphism(&iso, &a, &sa.algebra).map_err(err)?.homomorphism, || "search result is not a homomorphism".into())?;
        canonical_embedding(&a, &star, &sa).map_err(err)?;
        done += 1;
    }
    Ok("30 algebras of size ≤ 8 over {box, dia, imp, fus}".into())
}

fn compatibility() -> Outcome {
    let mut connectives = Vec::new();
    for family in [Family::F, Family::G] {
        for e in [Variance::One, Variance::Partial] {
            connectives.push(Connective::new("c", family, vec![e]));
            for e2 in [Variance::One, Variance::Partial] {
                connectives.push(Connective::new("c", family, vec![e, e2]));
            }
        }
    }
    let mut checked = 0u64;
    let mut compatible = 0u64;
    for p in all_polarities(2, 2) {
        for c in &connectives {
            let sig = Signature::new(vec![c.clone()]).unwrap();
            for rel in all_relations(&p, &relation_sorts(c)) {
                let frame = Frame::new(p.clone(), sig.clone(), vec![rel]).map_err(err)?;
                let a = frame.check_compatibility().compatible;
                let b = frame.check_compatibility_alt().map_err(err)?.compatible;
                ensure(a == b, || format!("disagreement on {}", frame.to_json()))?;
                checked += 1;
                compatible += a as u64;
            }
        }
    }
    Ok(format!("{checked} relations, {compatible} compatible, zero disagreements"))
}

fn coproduct_law() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let sig = mixed();
    for i in 0..20 {
        let f1 = random_frame(&mut rng, &sig, 3, 3, 20);
        let f2 = random_frame(&mut rng, &sig, 3, 3, 20);
        let sum = coproduct(&[&f1, &f2]).map_err(err)?;
        ensure(sum.check_compatibility().compatible, || format!("pair {i}: coproduct incompatible"))?;
        let left = ComplexAlgebra::build(&sum, CAP).map_err(err)?;
        let a1 = ComplexAlgebra::build(&f1, CAP).map_err(err)?;
        let a2 = ComplexAlgebra::build(&f2, CAP).map_err(err)?;
        let right = product(&[&a1.algebra, &a2.algebra]).map_err(err)?;
        let iso = find_isomorphism(&left.algebra, &right).ok_or_else(|| format!("pair {i}: no isomorphism"))?;
        ensure(check_complete_homomorphism(&iso, &left.algebra, &right).map_err(err)?.homomorphism, || format!("pair {i}: not a homomorphism"))?;
    }
    Ok("20 pairs over {box, dia, imp, fus}".into())
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("golden examples", Duration::from_secs(1), golden),
        ("frame/algebra validity bridge", Duration::from_secs(30), bridge),
        ("standard translation faithfulness", Duration::from_secs(60), translation),
        ("duality round trips", Duration::from_secs(60), duality),
        ("preservation suite", Duration::from_secs(300), preservation),
        ("filter-ideal frames recover finite algebras", Duration::from_secs(120), canonical),
        ("compatibility definitions agree", Duration::from_secs(120), compatibility),
        ("coproduct algebra law", Duration::from_secs(120), coproduct_law),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let (status, detail) = match result {
            Ok(detail) if elapsed <= *limit => ("PASS", detail),
            Ok(detail) => ("FAIL", format!("{detail}; took {elapsed:.2?}, limit {limit:?}")),
            Err(e) => ("FAIL", e),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("[{status}] {}. {name}: {detail} ({:.2?})", i + 1, elapsed);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
