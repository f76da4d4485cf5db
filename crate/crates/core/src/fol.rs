//! Standard translation into two-sorted first-order logic, a sort checker
//! and a finite evaluator.
//!
//! The text format is parenthesized prefix notation: `(forall_w x0 φ)`,
//! `(exists_u y1 φ)`, `(N x0 y0)`, `(R_box x0 y1)`, `(P_ext_p x0)`,
//! `(P_int_p y0)`, `(= x0 x0)`, `(and φ ψ ...)`, `(implies φ ψ)`,
//! `(not φ)` and `true`. Variables of sort W are `x0, x1, ...` and
//! variables of sort U are `y0, y1, ...`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bitset::PointSet;
use crate::error::{Error, Result};
use crate::frame::relation_sorts;
use crate::polarity::Sort;
use crate::semantics::Model;
use crate::syntax::{Family, Formula, Sequent, Signature, Variance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub sort: Sort,
    pub index: usize,
}

impl Var {
    pub fn w(index: usize) -> Self {
        Var { sort: Sort::W, index }
    }

    pub fn u(index: usize) -> Self {
        Var { sort: Sort::U, index }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sort {
            Sort::W => write!(f, "x{}", self.index),
            Sort::U => write!(f, "y{}", self.index),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FoFormula {
    True,
    Eq(Var, Var),
    /// `N(x, y)` with `x` of sort W and `y` of sort U.
    N(Var, Var),
    /// `R_c(v0, v1, ...)` for the relation of connective `c`.
    Rel(String, Vec<Var>),
    PExt(String, Var),
    PInt(String, Var),
    Not(Box<FoFormula>),
    And(Vec<FoFormula>),
    Implies(Box<FoFormula>, Box<FoFormula>),
    Forall(Var, Box<FoFormula>),
    Exists(Var, Box<FoFormula>),
}

impl FoFormula {
    pub fn implies(a: FoFormula, b: FoFormula) -> Self {
        FoFormula::Implies(Box::new(a), Box::new(b))
    }

    pub fn forall(v: Var, body: FoFormula) -> Self {
        FoFormula::Forall(v, Box::new(body))
    }

    pub fn forall_all(vars: &[Var], body: FoFormula) -> Self {
        vars.iter().rev().fold(body, |acc, &v| FoFormula::forall(v, acc))
    }

    /// Free variables, in first-occurrence order.
    pub fn free_vars(&self) -> Vec<Var> {
        fn go(phi: &FoFormula, bound: &mut Vec<Var>, out: &mut Vec<Var>) {
            let see = |v: &Var, bound: &Vec<Var>, out: &mut Vec<Var>| {
                if !bound.contains(v) && !out.contains(v) {
                    out.push(*v);
                }
            };
            match phi {
                FoFormula::True => {}
                FoFormula::Eq(a, b) | FoFormula::N(a, b) => {
                    see(a, bound, out);
                    see(b, bound, out);
                }
                FoFormula::Rel(_, vs) => vs.iter().for_each(|v| see(v, bound, out)),
                FoFormula::PExt(_, v) | FoFormula::PInt(_, v) => see(v, bound, out),
                FoFormula::Not(a) => go(a, bound, out),
                FoFormula::And(parts) => parts.iter().for_each(|p| go(p, bound, out)),
                FoFormula::Implies(a, b) => {
                    go(a, bound, out);
                    go(b, bound, out);
                }
                FoFormula::Forall(v, body) | FoFormula::Exists(v, body) => {
                    bound.push(*v);
                    go(body, bound, out);
                    bound.pop();
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }
}

impl fmt::Display for FoFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FoFormula::True => write!(f, "true"),
            FoFormula::Eq(a, b) => write!(f, "(= {a} {b})"),
            FoFormula::N(a, b) => write!(f, "(N {a} {b})"),
            FoFormula::Rel(name, vs) => {
                write!(f, "(R_{name}")?;
                for v in vs {
                    write!(f, " {v}")?;
                }
                write!(f, ")")
            }
            FoFormula::PExt(p, v) => write!(f, "(P_ext_{p} {v})"),
            FoFormula::PInt(p, v) => write!(f, "(P_int_{p} {v})"),
            FoFormula::Not(a) => write!(f, "(not {a})"),
            FoFormula::And(parts) => {
                write!(f, "(and")?;
                for p in parts {
                    write!(f, " {p}")?;
                }
                write!(f, ")")
            }
            FoFormula::Implies(a, b) => write!(f, "(implies {a} {b})"),
            FoFormula::Forall(v, body) => write!(f, "(forall_{} {v} {body})", sort_tag(v.sort)),
            FoFormula::Exists(v, body) => write!(f, "(exists_{} {v} {body})", sort_tag(v.sort)),
        }
    }
}

fn sort_tag(sort: Sort) -> &'static str {
    match sort {
        Sort::W => "w",
        Sort::U => "u",
    }
}

/// Fresh variables, one counter per sort.
#[derive(Clone, Debug, Default)]
pub struct Fresh {
    next_w: usize,
    next_u: usize,
}

impl Fresh {
    /// A generator whose variables avoid every variable in `used`.
    pub fn avoiding(used: &[Var]) -> Self {
        let mut fresh = Fresh::default();
        for v in used {
            match v.sort {
                Sort::W => fresh.next_w = fresh.next_w.max(v.index + 1),
                Sort::U => fresh.next_u = fresh.next_u.max(v.index + 1),
            }
        }
        fresh
    }

    pub fn var(&mut self, sort: Sort) -> Var {
        let counter = match sort {
            Sort::W => &mut self.next_w,
            Sort::U => &mut self.next_u,
        };
        let v = Var { sort, index: *counter };
        *counter += 1;
        v
    }
}

/// `ST_v(φ)`: the translation at a variable of sort W describes
/// satisfaction, at sort U co-satisfaction. Fresh variables avoid `v`.
pub fn standard_translate(sig: &Signature, phi: &Formula, v: Var) -> Result<FoFormula> {
    phi.check(sig)?;
    Ok(translate_with(sig, phi, v, &mut Fresh::avoiding(&[v])))
}

/// `ST_v(φ)` drawing bound variables from `fresh`. `φ` must already be
/// well formed over `sig`.
pub fn translate_with(sig: &Signature, phi: &Formula, v: Var, fresh: &mut Fresh) -> FoFormula {
    match (v.sort, phi) {
        (Sort::W, Formula::Bot) => {
            let y = fresh.var(Sort::U);
            FoFormula::forall(y, FoFormula::N(v, y))
        }
        (Sort::U, Formula::Bot) => FoFormula::Eq(v, v),
        (Sort::W, Formula::Top) => FoFormula::Eq(v, v),
        (Sort::U, Formula::Top) => {
            let x = fresh.var(Sort::W);
            FoFormula::forall(x, FoFormula::N(x, v))
        }
        (Sort::W, Formula::Prop(p)) => FoFormula::PExt(p.clone(), v),
        (Sort::U, Formula::Prop(p)) => FoFormula::PInt(p.clone(), v),
        (Sort::W, Formula::And(a, b)) => FoFormula::And(vec![
            translate_with(sig, a, v, fresh),
            translate_with(sig, b, v, fresh),
        ]),
        (Sort::U, Formula::Or(a, b)) => FoFormula::And(vec![
            translate_with(sig, a, v, fresh),
            translate_with(sig, b, v, fresh),
        ]),
        // The W-side of joins and f-formulas and the U-side of meets and
        // g-formulas go through the other sort.
        (Sort::W, Formula::Or(..)) => via_polar(sig, phi, v, fresh),
        (Sort::U, Formula::And(..)) => via_polar(sig, phi, v, fresh),
        (sort, Formula::Conn(name, args)) => {
            let c = sig.get(name).expect("formula checked against the signature");
            match (sort, c.family) {
                (Sort::W, Family::G) | (Sort::U, Family::F) => {
                    let vars: Vec<Var> = c
                        .order_type
                        .iter()
                        .map(|e| fresh.var(argument_sort(c.family, *e)))
                        .collect();
                    let parts: Vec<FoFormula> = args
                        .iter()
                        .zip(&vars)
                        .map(|(a, &x)| translate_with(sig, a, x, fresh))
                        .collect();
                    let mut rel_args = vec![v];
                    rel_args.extend(&vars);
                    let atom = FoFormula::Rel(name.clone(), rel_args);
                    if vars.is_empty() {
                        atom
                    } else {
                        let antecedent = if parts.len() == 1 {
                            parts.into_iter().next().unwrap()
                        } else {
                            FoFormula::And(parts)
                        };
                        FoFormula::forall_all(&vars, FoFormula::implies(antecedent, atom))
                    }
                }
                _ => via_polar(sig, phi, v, fresh),
            }
        }
    }
}

/// Sort of the quantified variable at an argument coordinate.
fn argument_sort(family: Family, e: Variance) -> Sort {
    let base = match family {
        Family::G => Sort::U,
        Family::F => Sort::W,
    };
    match e {
        Variance::One => base,
        Variance::Partial => base.dual(),
    }
}

/// `∀y[ST_y(φ) → xNy]` at sort W, `∀x[ST_x(φ) → xNy]` at sort U.
fn via_polar(sig: &Signature, phi: &Formula, v: Var, fresh: &mut Fresh) -> FoFormula {
    let other = fresh.var(v.sort.dual());
    let inner = translate_with(sig, phi, other, fresh);
    let n = match v.sort {
        Sort::W => FoFormula::N(v, other),
        Sort::U => FoFormula::N(other, v),
    };
    FoFormula::forall(other, FoFormula::implies(inner, n))
}

/// The three equivalent first-order shapes of a sequent `φ ⊢ ψ`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SequentForm {
    /// `∀x[ST_x(φ) → ST_x(ψ)]`
    #[default]
    ImplX,
    /// `∀y[ST_y(ψ) → ST_y(φ)]`
    ImplY,
    /// `∀x∀y[(ST_x(φ) ∧ ST_y(ψ)) → xNy]`
    Pairing,
}

impl SequentForm {
    pub const ALL: [SequentForm; 3] = [SequentForm::ImplX, SequentForm::ImplY, SequentForm::Pairing];
}

pub fn translate_sequent(sig: &Signature, s: &Sequent, form: SequentForm) -> Result<FoFormula> {
    s.lhs.check(sig)?;
    s.rhs.check(sig)?;
    let mut fresh = Fresh::default();
    Ok(match form {
        SequentForm::ImplX => {
            let x = fresh.var(Sort::W);
            let l = translate_with(sig, &s.lhs, x, &mut fresh);
            let r = translate_with(sig, &s.rhs, x, &mut fresh);
            FoFormula::forall(x, FoFormula::implies(l, r))
        }
        SequentForm::ImplY => {
            let y = fresh.var(Sort::U);
            let r = translate_with(sig, &s.rhs, y, &mut fresh);
            let l = translate_with(sig, &s.lhs, y, &mut fresh);
            FoFormula::forall(y, FoFormula::implies(r, l))
        }
        SequentForm::Pairing => {
            let x = fresh.var(Sort::W);
            let y = fresh.var(Sort::U);
            let l = translate_with(sig, &s.lhs, x, &mut fresh);
            let r = translate_with(sig, &s.rhs, y, &mut fresh);
            FoFormula::forall_all(&[x, y], FoFormula::implies(FoFormula::And(vec![l, r]), FoFormula::N(x, y)))
        }
    })
}

/// Checks that every atom's arguments have the sorts its symbol expects.
pub fn check_sorts(sig: &Signature, phi: &FoFormula) -> Result<()> {
    let expect = |v: &Var, sort: Sort, what: &str| -> Result<()> {
        if v.sort == sort {
            Ok(())
        } else {
            Err(Error::Sort(format!("{what} expects a variable of sort {sort:?}, got `{v}`")))
        }
    };
    match phi {
        FoFormula::True => Ok(()),
        FoFormula::Eq(a, b) => {
            if a.sort == b.sort {
                Ok(())
            } else {
                Err(Error::Sort(format!("equality between `{a}` and `{b}`")))
            }
        }
        FoFormula::N(a, b) => {
            expect(a, Sort::W, "N")?;
            expect(b, Sort::U, "N")
        }
        FoFormula::Rel(name, vs) => {
            let c = sig.get(name).ok_or_else(|| Error::UnknownName {
                kind: "connective",
                name: name.clone(),
            })?;
            let sorts = relation_sorts(c);
            if sorts.len() != vs.len() {
                return Err(Error::Sort(format!(
                    "R_{name} takes {} arguments, got {}",
                    sorts.len(),
                    vs.len()
                )));
            }
            let what = format!("R_{name}");
            vs.iter().zip(sorts).try_for_each(|(v, s)| expect(v, s, &what))
        }
        FoFormula::PExt(p, v) => expect(v, Sort::W, &format!("P_ext_{p}")),
        FoFormula::PInt(p, v) => expect(v, Sort::U, &format!("P_int_{p}")),
        FoFormula::Not(a) => check_sorts(sig, a),
        FoFormula::And(parts) => parts.iter().try_for_each(|p| check_sorts(sig, p)),
        FoFormula::Implies(a, b) => {
            check_sorts(sig, a)?;
            check_sorts(sig, b)
        }
        FoFormula::Forall(_, body) | FoFormula::Exists(_, body) => check_sorts(sig, body),
    }
}

/// Tarskian evaluation over the model's two-sorted structure. `env`
/// assigns point indices to the free variables. Sorts are checked first.
pub fn eval_fo(m: &Model, phi: &FoFormula, env: &BTreeMap<Var, usize>) -> Result<bool> {
    let frame = m.frame;
    check_sorts(&frame.signature, phi)?;
    for (v, &x) in env {
        if x >= frame.polarity.len(v.sort) {
            return Err(Error::Size(format!("`{v}` is assigned point {x}, out of range")));
        }
    }
    let mut env = env.clone();
    eval(m, phi, &mut env)
}

fn eval(m: &Model, phi: &FoFormula, env: &mut BTreeMap<Var, usize>) -> Result<bool> {
    let look = |env: &BTreeMap<Var, usize>, v: &Var| env.get(v).copied().ok_or_else(|| Error::Unbound(v.to_string()));
    Ok(match phi {
        FoFormula::True => true,
        FoFormula::Eq(a, b) => look(env, a)? == look(env, b)?,
        FoFormula::N(a, b) => m.frame.polarity.incident(look(env, a)?, look(env, b)?),
        FoFormula::Rel(name, vs) => {
            let rel = m.frame.relation(name)?;
            let t = vs.iter().map(|v| look(env, v)).collect::<Result<Vec<_>>>()?;
            rel.contains(&t)
        }
        FoFormula::PExt(p, v) => m.valuation.get(p)?.extent.contains(look(env, v)?),
        FoFormula::PInt(p, v) => m.valuation.get(p)?.intent.contains(look(env, v)?),
        FoFormula::Not(a) => !eval(m, a, env)?,
        FoFormula::And(parts) => {
            for p in parts {
                if !eval(m, p, env)? {
                    return Ok(false);
                }
            }
            true
        }
        FoFormula::Implies(a, b) => !eval(m, a, env)? || eval(m, b, env)?,
        FoFormula::Forall(v, body) | FoFormula::Exists(v, body) => {
            let universal = matches!(phi, FoFormula::Forall(..));
            let saved = env.get(v).copied();
            let mut result = universal;
            for x in PointSet::full(m.frame.polarity.len(v.sort)).iter() {
                env.insert(*v, x);
                if eval(m, body, env)? != universal {
                    result = !universal;
                    break;
                }
            }
            match saved {
                Some(x) => env.insert(*v, x),
                None => env.remove(v),
            };
            result
        }
    })
}
