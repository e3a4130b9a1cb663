use std::collections::btree_map::{self, BTreeMap};
use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::value::{fmt_rat, Rat, Store};

/// Finite-support subprobability distribution over stores.
///
/// Zero weights are never stored, so structural equality is equality of
/// distributions. Iteration follows store order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Dist(BTreeMap<Store, Rat>);

impl Dist {
    /// The least distribution, mapping every store to 0.
    pub fn bottom() -> Self {
        Dist(BTreeMap::new())
    }

    pub fn point(store: Store) -> Self {
        Dist([(store, Rat::one())].into())
    }

    pub fn is_bottom(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Weight of `store`, zero when absent.
    pub fn get(&self, store: &Store) -> Rat {
        self.0.get(store).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn iter(&self) -> btree_map::Iter<'_, Store, Rat> {
        self.0.iter()
    }

    pub fn stores(&self) -> impl Iterator<Item = &Store> {
        self.0.keys()
    }

    pub fn mass(&self) -> Rat {
        self.0.values().fold(Rat::zero(), |acc, w| acc + w)
    }

    /// Adds `w` to the weight of `store`.
    pub(crate) fn push(&mut self, store: Store, w: Rat) {
        if w.is_zero() {
            return;
        }
        match self.0.entry(store) {
            btree_map::Entry::Vacant(e) => {
                e.insert(w);
            }
            btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += w;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &Rat) -> Dist {
        if c.is_zero() {
            return Dist::bottom();
        }
        Dist(self.0.iter().map(|(s, w)| (s.clone(), w * c)).collect())
    }

    /// Pointwise sum. Fails when the result would have mass above 1.
    pub fn add(&self, other: &Dist) -> Result<Dist> {
        let sum = self.add_unchecked(other);
        if sum.mass() > Rat::one() {
            return Err(Error::MassOverflow(fmt_rat(&self.mass()), fmt_rat(&other.mass())));
        }
        Ok(sum)
    }

    pub(crate) fn add_unchecked(&self, other: &Dist) -> Dist {
        let (mut big, small) = if self.len() >= other.len() {
            (self.clone(), other)
        } else {
            (other.clone(), self)
        };
        for (s, w) in small.iter() {
            big.push(s.clone(), w.clone());
        }
        big
    }

    /// Pointwise order: `self(s) <= other(s)` for every store.
    pub fn leq(&self, other: &Dist) -> bool {
        self.0.iter().all(|(s, w)| *w <= other.get(s))
    }

    /// First store (in store order) where `self(s) > other(s)`.
    pub fn leq_witness(&self, other: &Dist) -> Option<(Store, Rat, Rat)> {
        self.0
            .iter()
            .find(|(s, w)| **w > other.get(s))
            .map(|(s, w)| (s.clone(), w.clone(), other.get(s)))
    }

    /// Marginal on `vars`: each store is restricted to the variables of
    /// `vars` it binds and weights of equal restrictions are summed.
    pub fn project(&self, vars: &BTreeSet<String>) -> Dist {
        let mut out = Dist::bottom();
        for (s, w) in self.iter() {
            out.push(s.restrict(|v| vars.contains(v)), w.clone());
        }
        out
    }

    /// Restriction of the distribution to stores accepted by `keep`.
    pub fn filter<F: Fn(&Store) -> bool>(&self, keep: F) -> Dist {
        Dist(
            self.0
                .iter()
                .filter(|(s, _)| keep(s))
                .map(|(s, w)| (s.clone(), w.clone()))
                .collect(),
        )
    }

    /// Union of the variables bound by any store.
    pub fn vars(&self) -> BTreeSet<String> {
        self.stores().flat_map(|s| s.vars().cloned()).collect()
    }
}

impl FromIterator<(Store, Rat)> for Dist {
    /// Sums weights of repeated stores.
    fn from_iter<I: IntoIterator<Item = (Store, Rat)>>(iter: I) -> Self {
        let mut d = Dist::bottom();
        for (s, w) in iter {
            d.push(s, w);
        }
        d
    }
}

impl<'a> IntoIterator for &'a Dist {
    type Item = (&'a Store, &'a Rat);
    type IntoIter = btree_map::Iter<'a, Store, Rat>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl serde::Serialize for Dist {
    /// A list of `{ "store": {..}, "weight": "n/d" }` rows in store order.
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(serde::Serialize)]
        struct Row<'a> {
            store: &'a Store,
            weight: String,
        }
        s.collect_seq(self.0.iter().map(|(store, w)| Row {
            store,
            weight: fmt_rat(w),
        }))
    }
}

/// Half the L1 distance, computed exactly.
pub fn total_variation(a: &Dist, b: &Dist) -> Rat {
    let stores: BTreeSet<&Store> = a.stores().chain(b.stores()).collect();
    let sum = stores
        .into_iter()
        .fold(Rat::zero(), |acc, s| acc + (a.get(s) - b.get(s)).abs());
    sum / Rat::from_integer(2.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::rat;

    fn s(q: i64, b: bool) -> Store {
        Store::new().with("q", q).with("b", b)
    }

    #[test]
    fn bottom_projects_to_bottom() {
        let vars: BTreeSet<String> = ["q".to_string()].into();
        assert!(Dist::bottom().project(&vars).is_bottom());
        assert_eq!(Dist::bottom().mass(), rat(0, 1));
    }

    #[test]
    fn add_merges_and_checks_mass() {
        let a: Dist = [(s(0, true), rat(1, 2))].into_iter().collect();
        let b: Dist = [(s(0, true), rat(1, 4)), (s(1, false), rat(1, 4))].into_iter().collect();
        let sum = a.add(&b).unwrap();
        assert_eq!(sum.get(&s(0, true)), rat(3, 4));
        assert_eq!(sum.mass(), rat(1, 1));
        assert!(matches!(sum.add(&b), Err(Error::MassOverflow(..))));
    }

    #[test]
    fn scale_half_of_target_row() {
        let target: Dist = [(s(0, true), rat(1, 2))].into_iter().collect();
        assert_eq!(target.scale(&rat(1, 2)).get(&s(0, true)), rat(1, 4));
        assert!(target.scale(&rat(0, 1)).is_bottom());
    }

    #[test]
    fn leq_is_pointwise() {
        let a: Dist = [(s(0, true), rat(1, 8))].into_iter().collect();
        let b: Dist = [(s(0, true), rat(3, 16)), (s(2, false), rat(1, 16))].into_iter().collect();
        assert!(a.leq(&b));
        assert!(!b.leq(&a));
        assert_eq!(b.leq_witness(&a).unwrap().0, s(2, false));
        assert!(Dist::bottom().leq(&a));
    }

    #[test]
    fn projection_sums_collapsed_stores() {
        let d: Dist = [
            (s(0, true).with("p", 1), rat(1, 8)),
            (s(0, true).with("p", 2), rat(1, 16)),
            (s(1, false).with("p", 0), rat(1, 8)),
        ]
        .into_iter()
        .collect();
        let vars: BTreeSet<String> = ["b".to_string(), "q".to_string()].into();
        let proj = d.project(&vars);
        assert_eq!(proj.get(&s(0, true)), rat(3, 16));
        assert_eq!(proj.mass(), d.mass());
    }

    #[test]
    fn tv_distance() {
        let a: Dist = [(s(0, true), rat(1, 2))].into_iter().collect();
        let b: Dist = [(s(0, true), rat(1, 4)), (s(1, true), rat(1, 4))].into_iter().collect();
        assert_eq!(total_variation(&a, &b), rat(1, 4));
        assert_eq!(total_variation(&a, &a), rat(0, 1));
    }
}
