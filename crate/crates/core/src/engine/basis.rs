//! Enumeration and closed-form indexing of the truncated Pauli-string basis.
//!
//! Admission rule: besides the identity, a string may carry at most two
//! non-identity factors on nuclear sites; three-factor strings are admitted
//! only when one factor sits on the central spin (site 0). An optional
//! extension admits explicitly listed nuclear site triples.
//!
//! The enumeration order is deterministic and blocked by site set, which
//! lets pulses act on contiguous slices:
//!
//! 1. identity (index 0)
//! 2. weight-1 strings, site-major: site 0 first, axes X,Y,Z
//! 3. nuclear-nuclear pairs, pair-major (packed upper triangle), axes row-major
//! 4. center-nuclear pairs, nucleus-major
//! 5. center + nuclear-pair triples, pair-major
//! 6. listed nuclear triples (extension), list order

use crate::error::{Error, Result};
use crate::pauli::{Axis, PauliProduct};
use sha2::{Digest, Sha256};

/// Default cap on the number of admitted strings.
pub const DEFAULT_MAX_STRINGS: usize = 10_000_000;

/// Admission policy for [`enumerate_basis`].
#[derive(Debug, Clone)]
pub struct TruncationRule {
    /// Hard cap on basis size; exceeding it is a capacity error.
    pub max_strings: usize,
    /// Extra admitted nuclear site triples (1-based nuclear site indices,
    /// each strictly increasing). Default empty: nuclear three-spin
    /// correlations are dropped.
    pub nuclear_triples: Vec<[u16; 3]>,
}

impl Default for TruncationRule {
    fn default() -> Self {
        TruncationRule {
            max_strings: DEFAULT_MAX_STRINGS,
            nuclear_triples: Vec::new(),
        }
    }
}

/// The admitted strings with bidirectional string ↔ index maps.
#[derive(Debug, Clone)]
pub struct TruncatedBasis {
    n_nuclei: usize,
    strings: Vec<PauliProduct>,
    /// Sorted copy of the admitted nuclear triples.
    nuclear_triples: Vec<[u16; 3]>,
}

/// Closed-form basis size for `n` nuclei without triple extensions:
/// 1 + 3(n+1) + 9·C(n,2) + 9n + 27·C(n,2).
pub fn basis_size(n_nuclei: usize) -> usize {
    let n = n_nuclei;
    let pairs = n * n.saturating_sub(1) / 2;
    1 + 3 * (n + 1) + 9 * pairs + 9 * n + 27 * pairs
}

/// Enumerate the truncated basis for `n_nuclei` nuclei plus the central
/// spin at site 0.
pub fn enumerate_basis(n_nuclei: usize, rule: &TruncationRule) -> Result<TruncatedBasis> {
    if n_nuclei == 0 {
        return Err(Error::invalid("basis needs at least one nucleus"));
    }
    if n_nuclei + 1 > u16::MAX as usize {
        return Err(Error::CapacityExceeded(format!(
            "site indices are 16-bit; {} sites requested",
            n_nuclei + 1
        )));
    }
    let mut triples = rule.nuclear_triples.clone();
    triples.sort_unstable();
    triples.dedup();
    for t in &triples {
        if !(t[0] < t[1] && t[1] < t[2]) {
            return Err(Error::invalid(format!(
                "nuclear triple {t:?} must be strictly increasing"
            )));
        }
        if t[0] < 1 || (t[2] as usize) > n_nuclei {
            return Err(Error::invalid(format!(
                "nuclear triple {t:?} out of range 1..={n_nuclei}"
            )));
        }
    }
    let size = basis_size(n_nuclei) + 27 * triples.len();
    if size > rule.max_strings {
        return Err(Error::CapacityExceeded(format!(
            "basis for {n_nuclei} nuclei needs {size} strings, budget is {}",
            rule.max_strings
        )));
    }

    let n = n_nuclei as u16;
    let mut strings = Vec::with_capacity(size);
    strings.push(PauliProduct::identity());
    // Weight-1 strings.
    for site in 0..=n {
        for axis in Axis::ALL {
            strings.push(PauliProduct::single(site as usize, axis));
        }
    }
    // Nuclear-nuclear pairs.
    for i in 1..=n {
        for j in (i + 1)..=n {
            for a in Axis::ALL {
                for b in Axis::ALL {
                    strings.push(
                        PauliProduct::new([(i as usize, a), (j as usize, b)])
                            .expect("distinct sites"),
                    );
                }
            }
        }
    }
    // Center-nuclear pairs.
    for j in 1..=n {
        for a in Axis::ALL {
            for b in Axis::ALL {
                strings.push(
                    PauliProduct::new([(0, a), (j as usize, b)]).expect("distinct sites"),
                );
            }
        }
    }
    // Center + nuclear pair triples.
    for i in 1..=n {
        for j in (i + 1)..=n {
            for a in Axis::ALL {
                for b in Axis::ALL {
                    for c in Axis::ALL {
                        strings.push(
                            PauliProduct::new([(0, a), (i as usize, b), (j as usize, c)])
                                .expect("distinct sites"),
                        );
                    }
                }
            }
        }
    }
    // Extension: listed nuclear triples.
    for t in &triples {
        for a in Axis::ALL {
            for b in Axis::ALL {
                for c in Axis::ALL {
                    strings.push(
                        PauliProduct::new([
                            (t[0] as usize, a),
                            (t[1] as usize, b),
                            (t[2] as usize, c),
                        ])
                        .expect("distinct sites"),
                    );
                }
            }
        }
    }
    debug_assert_eq!(strings.len(), size);
    Ok(TruncatedBasis {
        n_nuclei,
        strings,
        nuclear_triples: triples,
    })
}

impl TruncatedBasis {
    pub fn n_nuclei(&self) -> usize {
        self.n_nuclei
    }

    /// Total site count including the central spin.
    pub fn n_sites(&self) -> usize {
        self.n_nuclei + 1
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn strings(&self) -> &[PauliProduct] {
        &self.strings
    }

    pub fn string(&self, index: usize) -> &PauliProduct {
        &self.strings[index]
    }

    pub fn nuclear_triples(&self) -> &[[u16; 3]] {
        &self.nuclear_triples
    }

    fn pair_index(&self, i: u16, j: u16) -> usize {
        // Packed upper triangle over 0-based nuclear indices.
        let n = self.n_nuclei;
        let u = (i - 1) as usize;
        let v = (j - 1) as usize;
        u * n - u * (u + 1) / 2 + (v - u - 1)
    }

    pub(crate) fn offset_nuclear_pairs(&self) -> usize {
        1 + 3 * (self.n_nuclei + 1)
    }

    pub(crate) fn offset_center_pairs(&self) -> usize {
        let pairs = self.n_nuclei * (self.n_nuclei - 1) / 2;
        self.offset_nuclear_pairs() + 9 * pairs
    }

    pub(crate) fn offset_center_triples(&self) -> usize {
        self.offset_center_pairs() + 9 * self.n_nuclei
    }

    pub(crate) fn offset_listed_triples(&self) -> usize {
        let pairs = self.n_nuclei * (self.n_nuclei - 1) / 2;
        self.offset_center_triples() + 27 * pairs
    }

    pub(crate) fn pair_slot(&self, i: u16, j: u16) -> usize {
        self.pair_index(i, j)
    }

    /// Closed-form index of an admitted string; `None` when the string is
    /// truncated out (or out of site range).
    pub fn index_of(&self, p: &PauliProduct) -> Option<usize> {
        let f = p.factors();
        let n = self.n_nuclei as u16;
        match f.len() {
            0 => Some(0),
            1 => {
                let (s, a) = f[0];
                if s > n {
                    return None;
                }
                Some(1 + 3 * s as usize + a.index())
            }
            2 => {
                let (s1, a1) = f[0];
                let (s2, a2) = f[1];
                if s2 > n {
                    return None;
                }
                if s1 == 0 {
                    Some(
                        self.offset_center_pairs()
                            + 9 * (s2 - 1) as usize
                            + 3 * a1.index()
                            + a2.index(),
                    )
                } else {
                    Some(
                        self.offset_nuclear_pairs()
                            + 9 * self.pair_index(s1, s2)
                            + 3 * a1.index()
                            + a2.index(),
                    )
                }
            }
            3 => {
                let (s1, a1) = f[0];
                let (s2, a2) = f[1];
                let (s3, a3) = f[2];
                if s3 > n {
                    return None;
                }
                if s1 == 0 {
                    Some(
                        self.offset_center_triples()
                            + 27 * self.pair_index(s2, s3)
                            + 9 * a1.index()
                            + 3 * a2.index()
                            + a3.index(),
                    )
                } else {
                    let slot = self
                        .nuclear_triples
                        .binary_search(&[s1, s2, s3])
                        .ok()?;
                    Some(
                        self.offset_listed_triples()
                            + 27 * slot
                            + 9 * a1.index()
                            + 3 * a2.index()
                            + a3.index(),
                    )
                }
            }
            _ => None,
        }
    }

    /// Whether the string is admitted by the truncation rule.
    pub fn admits(&self, p: &PauliProduct) -> bool {
        self.index_of(p).is_some()
    }

    /// Hash identifying the basis content (admission rule + site count).
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(b"truncated-basis v1\n");
        hasher.update(self.n_nuclei.to_le_bytes());
        for t in &self.nuclear_triples {
            hasher.update(t[0].to_le_bytes());
            hasher.update(t[1].to_le_bytes());
            hasher.update(t[2].to_le_bytes());
        }
        hex_string(&hasher.finalize())
    }
}

pub(crate) fn hex_string(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn closed_form_counts() {
        assert_eq!(basis_size(1), 16);
        assert_eq!(basis_size(2), 64);
        let b1 = enumerate_basis(1, &TruncationRule::default()).unwrap();
        assert_eq!(b1.len(), 16);
        let b2 = enumerate_basis(2, &TruncationRule::default()).unwrap();
        assert_eq!(b2.len(), 64);
    }

    #[test]
    fn large_count_matches_exhaustive_rule_enumeration() {
        // Independently enumerate the admission rule for 99 nuclei and
        // compare against the closed form and the builder.
        let n: u16 = 99;
        let mut count: usize = 1; // identity
        count += 3 * (n as usize + 1); // weight 1
        let mut seen = HashSet::new();
        for i in 1..=n {
            for j in 1..=n {
                if i < j {
                    seen.insert((i, j));
                }
            }
        }
        count += 9 * seen.len(); // nuclear pairs
        count += 9 * n as usize; // center pairs
        count += 27 * seen.len(); // center triples
        assert_eq!(count, basis_size(n as usize));
        let b = enumerate_basis(n as usize, &TruncationRule::default()).unwrap();
        assert_eq!(b.len(), count);
    }

    #[test]
    fn index_roundtrip_everywhere() {
        let rule = TruncationRule {
            nuclear_triples: vec![[1, 3, 5], [2, 3, 4]],
            ..TruncationRule::default()
        };
        let b = enumerate_basis(5, &rule).unwrap();
        assert_eq!(b.len(), basis_size(5) + 54);
        for (i, s) in b.strings().iter().enumerate() {
            assert_eq!(b.index_of(s), Some(i), "string {s} at position {i}");
        }
        // All enumerated strings are distinct.
        let set: HashSet<_> = b.strings().iter().cloned().collect();
        assert_eq!(set.len(), b.len());
    }

    #[test]
    fn admission_rule_boundaries() {
        let b = enumerate_basis(4, &TruncationRule::default()).unwrap();
        // Nuclear triple not listed → rejected.
        let triple = PauliProduct::new([(1, Axis::X), (2, Axis::X), (3, Axis::X)]).unwrap();
        assert!(!b.admits(&triple));
        // Center + pair is admitted.
        let with_center =
            PauliProduct::new([(0, Axis::Z), (2, Axis::Y), (4, Axis::X)]).unwrap();
        assert!(b.admits(&with_center));
        // Weight 4 always rejected.
        let four = PauliProduct::new([
            (0, Axis::Z),
            (1, Axis::X),
            (2, Axis::X),
            (3, Axis::X),
        ])
        .unwrap();
        assert!(!b.admits(&four));
        // Out-of-range site rejected.
        let outside = PauliProduct::single(9, Axis::X);
        assert!(!b.admits(&outside));
        // Identity at index 0.
        assert_eq!(b.index_of(&PauliProduct::identity()), Some(0));

        // Listing the triple admits all 27 axis combinations.
        let rule = TruncationRule {
            nuclear_triples: vec![[1, 2, 3]],
            ..TruncationRule::default()
        };
        let b = enumerate_basis(4, &rule).unwrap();
        assert!(b.admits(&triple));
        for s in b.strings().iter().skip(basis_size(4)) {
            assert_eq!(s.weight(), 3);
            assert!(s.factors().iter().all(|&(site, _)| site >= 1));
        }
    }

    #[test]
    fn capacity_budget_enforced() {
        let rule = TruncationRule {
            max_strings: 100,
            ..TruncationRule::default()
        };
        let err = enumerate_basis(10, &rule).unwrap_err();
        match err {
            Error::CapacityExceeded(msg) => {
                assert!(msg.contains(&basis_size(10).to_string()), "{msg}");
            }
            other => panic!("expected capacity error, got {other}"),
        }
    }

    #[test]
    fn invalid_triples_rejected() {
        let bad_order = TruncationRule {
            nuclear_triples: vec![[3, 2, 1]],
            ..TruncationRule::default()
        };
        assert!(enumerate_basis(4, &bad_order).is_err());
        let out_of_range = TruncationRule {
            nuclear_triples: vec![[1, 2, 9]],
            ..TruncationRule::default()
        };
        assert!(enumerate_basis(4, &out_of_range).is_err());
        let has_center = TruncationRule {
            nuclear_triples: vec![[0, 1, 2]],
            ..TruncationRule::default()
        };
        assert!(enumerate_basis(4, &has_center).is_err());
    }

    #[test]
    fn hash_tracks_rule() {
        let a = enumerate_basis(3, &TruncationRule::default()).unwrap();
        let b = enumerate_basis(4, &TruncationRule::default()).unwrap();
        assert_ne!(a.content_hash(), b.content_hash());
        let c = enumerate_basis(3, &TruncationRule::default()).unwrap();
        assert_eq!(a.content_hash(), c.content_hash());
        let rule = TruncationRule {
            nuclear_triples: vec![[1, 2, 3]],
            ..TruncationRule::default()
        };
        let d = enumerate_basis(3, &rule).unwrap();
        assert_ne!(a.content_hash(), d.content_hash());
    }
}
