//! Pauli-product algebra: the single shared representation of multi-site
//! Pauli operators used by Hamiltonian term lists, the truncated-string
//! engine, and the dense reference evolver.
//!
//! A [`PauliProduct`] is a tensor product of single-site Pauli operators
//! (identity on every unlisted site), stored as a sorted factor list. The
//! only algebra the crate needs is multiplication with its i-power phase and
//! the (anti)commutation parity, both implemented here.

use crate::error::{Error, Result};
use smallvec::SmallVec;
use std::fmt;

/// One Pauli axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum Axis {
    X = 0,
    Y = 1,
    Z = 2,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn to_char(self) -> char {
        match self {
            Axis::X => 'X',
            Axis::Y => 'Y',
            Axis::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Result<Axis> {
        match c {
            'X' | 'x' => Ok(Axis::X),
            'Y' | 'y' => Ok(Axis::Y),
            'Z' | 'z' => Ok(Axis::Z),
            other => Err(Error::Format(format!("unknown Pauli axis {other:?}"))),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// σ_a · σ_b on one site: returns (power of i in the phase, resulting axis;
/// `None` when a == b and the product is the identity).
///
/// Convention: σ_x σ_y = i σ_z and cyclic, so unequal axes give phase ±i.
pub fn mul_single(a: Axis, b: Axis) -> (u8, Option<Axis>) {
    use Axis::*;
    match (a, b) {
        (X, X) | (Y, Y) | (Z, Z) => (0, None),
        (X, Y) => (1, Some(Z)),
        (Y, Z) => (1, Some(X)),
        (Z, X) => (1, Some(Y)),
        (Y, X) => (3, Some(Z)),
        (Z, Y) => (3, Some(X)),
        (X, Z) => (3, Some(Y)),
    }
}

type Factors = SmallVec<[(u16, Axis); 4]>;

/// A product of single-site Pauli operators with +1 prefactor; identity on
/// all sites not listed. Factors are sorted by site; a site appears at most
/// once.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliProduct {
    factors: Factors,
}

impl PauliProduct {
    /// The identity operator (empty factor list).
    pub fn identity() -> Self {
        PauliProduct {
            factors: Factors::new(),
        }
    }

    /// A single-site Pauli operator.
    pub fn single(site: usize, axis: Axis) -> Self {
        let mut factors = Factors::new();
        factors.push((site as u16, axis));
        PauliProduct { factors }
    }

    /// Build from (site, axis) pairs in any order; rejects duplicate sites.
    pub fn new(factors: impl IntoIterator<Item = (usize, Axis)>) -> Result<Self> {
        let mut list: Factors = factors
            .into_iter()
            .map(|(site, axis)| (site as u16, axis))
            .collect();
        list.sort_unstable_by_key(|&(site, _)| site);
        for w in list.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::invalid(format!(
                    "site {} listed twice in Pauli product",
                    w[0].0
                )));
            }
        }
        Ok(PauliProduct { factors: list })
    }

    /// Number of non-identity factors.
    pub fn weight(&self) -> usize {
        self.factors.len()
    }

    pub fn is_identity(&self) -> bool {
        self.factors.is_empty()
    }

    /// Sorted (site, axis) factors.
    pub fn factors(&self) -> &[(u16, Axis)] {
        &self.factors
    }

    /// The axis acting on `site`, if any.
    pub fn axis_on(&self, site: usize) -> Option<Axis> {
        self.factors
            .binary_search_by_key(&(site as u16), |&(s, _)| s)
            .ok()
            .map(|idx| self.factors[idx].1)
    }

    /// Largest site index with a non-identity factor.
    pub fn max_site(&self) -> Option<usize> {
        self.factors.last().map(|&(s, _)| s as usize)
    }

    /// True when `self` and `other` commute. Two Pauli products commute iff
    /// the number of shared sites carrying different axes is even.
    pub fn commutes_with(&self, other: &PauliProduct) -> bool {
        self.anticommuting_overlap(other) % 2 == 0
    }

    /// Number of shared sites on which the two products carry different axes.
    pub fn anticommuting_overlap(&self, other: &PauliProduct) -> usize {
        let mut count = 0;
        let (mut i, mut j) = (0, 0);
        while i < self.factors.len() && j < other.factors.len() {
            let (si, ai) = self.factors[i];
            let (sj, aj) = other.factors[j];
            match si.cmp(&sj) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    if ai != aj {
                        count += 1;
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        count
    }

    /// Operator product `self · other` as (power of i mod 4, product).
    pub fn multiply(&self, other: &PauliProduct) -> (u8, PauliProduct) {
        let mut phase = 0u8;
        let mut factors = Factors::new();
        let (mut i, mut j) = (0, 0);
        while i < self.factors.len() || j < other.factors.len() {
            match (self.factors.get(i), other.factors.get(j)) {
                (Some(&(si, ai)), Some(&(sj, aj))) if si == sj => {
                    let (p, axis) = mul_single(ai, aj);
                    phase = (phase + p) % 4;
                    if let Some(axis) = axis {
                        factors.push((si, axis));
                    }
                    i += 1;
                    j += 1;
                }
                (Some(&(si, ai)), Some(&(sj, _))) if si < sj => {
                    factors.push((si, ai));
                    i += 1;
                }
                (Some(_), Some(&(sj, aj))) => {
                    factors.push((sj, aj));
                    j += 1;
                }
                (Some(&(si, ai)), None) => {
                    factors.push((si, ai));
                    i += 1;
                }
                (None, Some(&(sj, aj))) => {
                    factors.push((sj, aj));
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        (phase, PauliProduct { factors })
    }
}

impl fmt::Display for PauliProduct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "I");
        }
        for &(site, axis) in &self.factors {
            write!(f, "{}{}", axis.to_char(), site)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_site_products() {
        assert_eq!(mul_single(Axis::X, Axis::Y), (1, Some(Axis::Z)));
        assert_eq!(mul_single(Axis::Y, Axis::X), (3, Some(Axis::Z)));
        assert_eq!(mul_single(Axis::Z, Axis::Z), (0, None));
    }

    #[test]
    fn duplicate_sites_rejected() {
        assert!(PauliProduct::new([(1, Axis::X), (1, Axis::Z)]).is_err());
    }

    #[test]
    fn product_and_phase() {
        // (X0 Z2) · (Y0 Z1) = (XY)0 Z1 Z2 = i Z0 Z1 Z2.
        let a = PauliProduct::new([(0, Axis::X), (2, Axis::Z)]).unwrap();
        let b = PauliProduct::new([(0, Axis::Y), (1, Axis::Z)]).unwrap();
        let (phase, prod) = a.multiply(&b);
        assert_eq!(phase, 1);
        assert_eq!(
            prod,
            PauliProduct::new([(0, Axis::Z), (1, Axis::Z), (2, Axis::Z)]).unwrap()
        );
    }

    #[test]
    fn self_product_is_identity() {
        let a = PauliProduct::new([(0, Axis::X), (3, Axis::Y), (7, Axis::Z)]).unwrap();
        let (phase, prod) = a.multiply(&a);
        assert_eq!(phase, 0);
        assert!(prod.is_identity());
    }

    #[test]
    fn commutation_parity() {
        let a = PauliProduct::new([(0, Axis::X), (1, Axis::X)]).unwrap();
        let b = PauliProduct::new([(0, Axis::Z), (1, Axis::Z)]).unwrap();
        // Two anticommuting overlaps → commute.
        assert!(a.commutes_with(&b));
        let c = PauliProduct::single(0, Axis::Z);
        assert!(!a.commutes_with(&c));
        // Disjoint supports always commute.
        let d = PauliProduct::single(9, Axis::Y);
        assert!(a.commutes_with(&d));
    }

    #[test]
    fn product_consistency_with_commutation() {
        // For Pauli products, AB = ±BA; the sign is read off the phase
        // difference and must match the anticommuting-overlap parity.
        let cases = [
            (vec![(0, Axis::X)], vec![(0, Axis::Y)]),
            (vec![(0, Axis::X), (1, Axis::Y)], vec![(1, Axis::Z)]),
            (
                vec![(0, Axis::X), (1, Axis::Y), (2, Axis::Z)],
                vec![(0, Axis::Y), (2, Axis::X)],
            ),
        ];
        for (fa, fb) in cases {
            let a = PauliProduct::new(fa).unwrap();
            let b = PauliProduct::new(fb).unwrap();
            let (p_ab, ab) = a.multiply(&b);
            let (p_ba, ba) = b.multiply(&a);
            assert_eq!(ab, ba);
            let same_sign = (4 + p_ab - p_ba) % 4 == 0;
            assert_eq!(same_sign, a.commutes_with(&b));
        }
    }

    #[test]
    fn display_and_ordering() {
        let p = PauliProduct::new([(3, Axis::Y), (0, Axis::Z)]).unwrap();
        assert_eq!(p.to_string(), "Z0Y3");
        assert_eq!(PauliProduct::identity().to_string(), "I");
        assert_eq!(p.axis_on(3), Some(Axis::Y));
        assert_eq!(p.axis_on(1), None);
        assert_eq!(p.max_site(), Some(3));
    }
}
