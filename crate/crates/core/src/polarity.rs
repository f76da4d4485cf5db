//! Finite polarities `(W, U, N)`, their Galois maps and concept lattices.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::bitset::{PointSet, MAX_POINTS};
use crate::error::{Error, Result};

/// Default cap on the number of concepts a polarity may have.
pub const DEFAULT_CONCEPT_CAP: usize = 1 << 16;

/// The two sorts of a polarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sort {
    W,
    U,
}

impl Sort {
    pub fn dual(self) -> Sort {
        match self {
            Sort::W => Sort::U,
            Sort::U => Sort::W,
        }
    }
}

/// A Galois-stable pair: `extent↑ = intent` and `intent↓ = extent`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Concept {
    pub extent: PointSet,
    pub intent: PointSet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polarity {
    w_names: Vec<String>,
    u_names: Vec<String>,
    /// `rows[w]` is `{u | w N u}`.
    rows: Vec<PointSet>,
    /// `cols[u]` is `{w | w N u}`.
    cols: Vec<PointSet>,
}

impl Polarity {
    pub fn new(
        w_names: Vec<String>,
        u_names: Vec<String>,
        incidence: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        for (sort, names) in [("W", &w_names), ("U", &u_names)] {
            if names.len() > MAX_POINTS {
                return Err(Error::Size(format!(
                    "{sort} has {} points, at most {MAX_POINTS} are supported",
                    names.len()
                )));
            }
            let distinct: BTreeSet<&String> = names.iter().collect();
            if distinct.len() != names.len() {
                return Err(Error::Frame(format!("duplicate point name in {sort}")));
            }
        }
        let mut rows = vec![PointSet::EMPTY; w_names.len()];
        let mut cols = vec![PointSet::EMPTY; u_names.len()];
        for (w, u) in incidence {
            if w >= w_names.len() || u >= u_names.len() {
                return Err(Error::Size(format!("incidence pair ({w}, {u}) out of range")));
            }
            rows[w].insert(u);
            cols[u].insert(w);
        }
        Ok(Polarity {
            w_names,
            u_names,
            rows,
            cols,
        })
    }

    /// Builds a polarity from a boolean matrix with generated names.
    pub fn from_matrix(n_w: usize, n_u: usize, incident: impl Fn(usize, usize) -> bool) -> Self {
        let pairs: Vec<(usize, usize)> = (0..n_w)
            .flat_map(|w| (0..n_u).map(move |u| (w, u)))
            .filter(|&(w, u)| incident(w, u))
            .collect();
        Polarity::new(
            (0..n_w).map(|i| format!("w{i}")).collect(),
            (0..n_u).map(|i| format!("u{i}")).collect(),
            pairs,
        )
        .expect("generated polarity is well formed")
    }

    pub fn w_len(&self) -> usize {
        self.w_names.len()
    }

    pub fn u_len(&self) -> usize {
        self.u_names.len()
    }

    pub fn len(&self, sort: Sort) -> usize {
        match sort {
            Sort::W => self.w_len(),
            Sort::U => self.u_len(),
        }
    }

    pub fn names(&self, sort: Sort) -> &[String] {
        match sort {
            Sort::W => &self.w_names,
            Sort::U => &self.u_names,
        }
    }

    pub fn full(&self, sort: Sort) -> PointSet {
        PointSet::full(self.len(sort))
    }

    pub fn index_of(&self, sort: Sort, name: &str) -> Option<usize> {
        self.names(sort).iter().position(|n| n == name)
    }

    pub fn incident(&self, w: usize, u: usize) -> bool {
        self.rows[w].contains(u)
    }

    /// All pairs of `N`, in row-major order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (0..self.w_len())
            .flat_map(|w| self.rows[w].iter().map(move |u| (w, u)))
            .collect()
    }

    /// `N↑[X] = {u | ∀w ∈ X. w N u}`.
    pub fn up(&self, x: PointSet) -> PointSet {
        x.iter()
            .fold(self.full(Sort::U), |acc, w| acc.intersect(self.rows[w]))
    }

    /// `N↓[Y] = {w | ∀u ∈ Y. w N u}`.
    pub fn down(&self, y: PointSet) -> PointSet {
        y.iter()
            .fold(self.full(Sort::W), |acc, u| acc.intersect(self.cols[u]))
    }

    /// Checked variant of [`Polarity::up`].
    pub fn try_up(&self, x: PointSet) -> Result<PointSet> {
        self.check_fits(Sort::W, x)?;
        Ok(self.up(x))
    }

    /// Checked variant of [`Polarity::down`].
    pub fn try_down(&self, y: PointSet) -> Result<PointSet> {
        self.check_fits(Sort::U, y)?;
        Ok(self.down(y))
    }

    pub fn check_fits(&self, sort: Sort, set: PointSet) -> Result<()> {
        if set.fits(self.len(sort)) {
            Ok(())
        } else {
            Err(Error::Size(format!(
                "{set:?} is not a subset of {sort:?} (size {})",
                self.len(sort)
            )))
        }
    }

    /// The Galois closure of a set of the given sort.
    pub fn closure(&self, sort: Sort, set: PointSet) -> PointSet {
        match sort {
            Sort::W => self.down(self.up(set)),
            Sort::U => self.up(self.down(set)),
        }
    }

    /// The image of a set under the Galois map leaving its sort.
    pub fn polar(&self, sort: Sort, set: PointSet) -> PointSet {
        match sort {
            Sort::W => self.up(set),
            Sort::U => self.down(set),
        }
    }

    pub fn is_stable(&self, sort: Sort, set: PointSet) -> bool {
        self.closure(sort, set) == set
    }

    pub fn is_stable_extent(&self, x: PointSet) -> bool {
        self.is_stable(Sort::W, x)
    }

    pub fn is_stable_intent(&self, y: PointSet) -> bool {
        self.is_stable(Sort::U, y)
    }

    pub fn concept_of_extent(&self, x: PointSet) -> Concept {
        let intent = self.up(x);
        Concept {
            extent: self.down(intent),
            intent,
        }
    }

    pub fn concept_of_intent(&self, y: PointSet) -> Concept {
        let extent = self.down(y);
        Concept {
            extent,
            intent: self.up(extent),
        }
    }

    /// All concepts, ordered by the bit pattern of their extents (bottom
    /// first, top last).
    pub fn enumerate_concepts(&self, cap: usize) -> Result<Vec<Concept>> {
        // Extents are exactly the intersections of attribute extents
        // `{u}↓`, the empty intersection being `W`.
        let mut extents: BTreeSet<u64> = BTreeSet::new();
        let top = self.full(Sort::W);
        extents.insert(top.bits());
        let mut frontier = vec![top];
        while let Some(x) = frontier.pop() {
            for u in 0..self.u_len() {
                let y = x.intersect(self.cols[u]);
                if extents.insert(y.bits()) {
                    if extents.len() > cap {
                        return Err(Error::CapExceeded {
                            what: "concept enumeration",
                            required: extents.len() as u128,
                            cap: cap as u128,
                        });
                    }
                    frontier.push(y);
                }
            }
        }
        Ok(extents
            .into_iter()
            .map(|bits| {
                let extent = PointSet::from_bits(bits);
                Concept {
                    extent,
                    intent: self.up(extent),
                }
            })
            .collect())
    }

    /// Map from each concept extent to its position in `concepts`.
    pub fn extent_index(concepts: &[Concept]) -> HashMap<PointSet, usize> {
        concepts
            .iter()
            .enumerate()
            .map(|(i, c)| (c.extent, i))
            .collect()
    }

    /// Renders a point set by point names, e.g. `{a1, b1}` or `∅`.
    pub fn show(&self, sort: Sort, set: PointSet) -> String {
        if set.is_empty() {
            return "∅".to_string();
        }
        let names = self.names(sort);
        let parts: Vec<&str> = set.iter().map(|i| names[i].as_str()).collect();
        format!("{{{}}}", parts.join(", "))
    }

    pub fn show_concept(&self, c: &Concept) -> String {
        format!(
            "({}, {})",
            self.show(Sort::W, c.extent),
            self.show(Sort::U, c.intent)
        )
    }
}
