//! Precomputed commutator action tables.
//!
//! The flow of expectation-value coefficients under a Hamiltonian
//! H = Σ ω_h·h (h Pauli products, ω_h real, rad/s) is
//!
//!   dc_P/dt = −i·Σ_h ω_h·⟨[P, h]⟩.
//!
//! When P and h anticommute, P·h = i^s·Q with s odd, so [P,h] = 2·i^s·Q
//! and the contribution is (±2ω_h)·c_Q — a real linear flow. The table
//! stores those structure coefficients as index triples, compiled once and
//! reused for every step. Contributions whose result string Q falls
//! outside the truncated basis are dropped (that is the truncation).

use super::basis::{hex_string, TruncatedBasis};
use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianTerms;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use std::io::{Read, Write};

/// Storage order of the compiled triples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableLayout {
    /// Rows keyed by target string: each row lists (source, weight) pairs
    /// and the step kernel gathers `dc[target] = Σ w·c[source]`. Default:
    /// writes are sequential.
    ByTarget,
    /// Rows keyed by source string: the step kernel scatters
    /// `dc[target] += w·c[source]`. Available for layout benchmarking.
    BySource,
}

/// Compiled commutator flow in compressed sparse rows.
#[derive(Debug, Clone)]
pub struct ActionTable {
    layout: TableLayout,
    n_strings: usize,
    row_ptr: Vec<u64>,
    /// Partner index per entry: source for [`TableLayout::ByTarget`] rows,
    /// target for [`TableLayout::BySource`] rows.
    index: Vec<u32>,
    weight: Vec<f64>,
    basis_hash: String,
    hamiltonian_hash: String,
    /// max over strings of Σ|w| feeding that string (stability proxy Λ, rad/s).
    lambda: f64,
    /// Fraction of total commutator magnitude lost to truncation.
    dropped_fraction: f64,
}

/// Compile the commutator action of `h` on `basis` (target-grouped rows).
pub fn precompute_action(h: &HamiltonianTerms, basis: &TruncatedBasis) -> Result<ActionTable> {
    precompute_action_with_layout(h, basis, TableLayout::ByTarget)
}

/// Compile with an explicit storage layout.
pub fn precompute_action_with_layout(
    h: &HamiltonianTerms,
    basis: &TruncatedBasis,
    layout: TableLayout,
) -> Result<ActionTable> {
    if h.n_sites() > basis.n_sites() {
        return Err(Error::invalid(format!(
            "hamiltonian spans {} sites but basis covers {}",
            h.n_sites(),
            basis.n_sites()
        )));
    }
    if basis.len() > u32::MAX as usize {
        return Err(Error::CapacityExceeded(
            "basis too large for 32-bit string indices".into(),
        ));
    }
    let terms = h.terms();
    // Inverted index: site → indices of Hamiltonian terms acting on it.
    let mut terms_on_site: Vec<Vec<u32>> = vec![Vec::new(); basis.n_sites()];
    for (ti, (p, _)) in terms.iter().enumerate() {
        for &(site, _) in p.factors() {
            terms_on_site[site as usize].push(ti as u32);
        }
    }

    // Per-target rows, built in parallel; only terms sharing a site with
    // the target can anticommute with it.
    struct Row {
        entries: Vec<(u32, f64)>,
        kept: f64,
        dropped: f64,
    }
    let rows: Vec<Row> = (0..basis.len())
        .into_par_iter()
        .map(|t| {
            let target = basis.string(t);
            let mut candidates: Vec<u32> = Vec::new();
            for &(site, _) in target.factors() {
                candidates.extend_from_slice(&terms_on_site[site as usize]);
            }
            candidates.sort_unstable();
            candidates.dedup();
            let mut entries: Vec<(u32, f64)> = Vec::new();
            let mut kept = 0.0;
            let mut dropped = 0.0;
            for ti in candidates {
                let (term, omega) = &terms[ti as usize];
                let (phase, product) = target.multiply(term);
                if phase % 2 == 0 {
                    continue; // commutes: no contribution
                }
                // P·h = i^s·Q, s odd: dc_P/dt += w·c_Q with
                // w = 2ω for s = 1 and −2ω for s = 3.
                let w = if phase == 1 { 2.0 * omega } else { -2.0 * omega };
                match basis.index_of(&product) {
                    Some(src) => {
                        entries.push((src as u32, w));
                        kept += w.abs();
                    }
                    None => dropped += w.abs(),
                }
            }
            entries.sort_unstable_by_key(|e| e.0);
            // Merge duplicate sources produced by different terms.
            let mut merged: Vec<(u32, f64)> = Vec::with_capacity(entries.len());
            for (src, w) in entries {
                match merged.last_mut() {
                    Some(last) if last.0 == src => last.1 += w,
                    _ => merged.push((src, w)),
                }
            }
            Row {
                entries: merged,
                kept,
                dropped,
            }
        })
        .collect();

    let mut lambda = 0.0f64;
    let mut kept_total = 0.0;
    let mut dropped_total = 0.0;
    let n_entries: usize = rows.iter().map(|r| r.entries.len()).sum();
    let mut row_ptr = Vec::with_capacity(basis.len() + 1);
    let mut index = Vec::with_capacity(n_entries);
    let mut weight = Vec::with_capacity(n_entries);
    row_ptr.push(0u64);
    for row in &rows {
        let row_sum: f64 = row.entries.iter().map(|e| e.1.abs()).sum();
        lambda = lambda.max(row_sum);
        kept_total += row.kept;
        dropped_total += row.dropped;
        for &(src, w) in &row.entries {
            index.push(src);
            weight.push(w);
        }
        row_ptr.push(index.len() as u64);
    }
    let total = kept_total + dropped_total;
    let dropped_fraction = if total > 0.0 { dropped_total / total } else { 0.0 };

    let by_target = ActionTable {
        layout: TableLayout::ByTarget,
        n_strings: basis.len(),
        row_ptr,
        index,
        weight,
        basis_hash: basis.content_hash(),
        hamiltonian_hash: h.content_hash(),
        lambda,
        dropped_fraction,
    };
    Ok(match layout {
        TableLayout::ByTarget => by_target,
        TableLayout::BySource => by_target.transposed(),
    })
}

impl ActionTable {
    pub fn layout(&self) -> TableLayout {
        self.layout
    }

    pub fn n_strings(&self) -> usize {
        self.n_strings
    }

    pub fn n_entries(&self) -> usize {
        self.index.len()
    }

    pub fn basis_hash(&self) -> &str {
        &self.basis_hash
    }

    pub fn hamiltonian_hash(&self) -> &str {
        &self.hamiltonian_hash
    }

    /// Stability proxy Λ: largest Σ|w| feeding any single string (rad/s).
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Fraction of commutator magnitude dropped by truncation (diagnostic).
    pub fn dropped_fraction(&self) -> f64 {
        self.dropped_fraction
    }

    #[cfg(test)]
    pub(crate) fn rows(&self) -> (&[u64], &[u32], &[f64]) {
        (&self.row_ptr, &self.index, &self.weight)
    }

    /// Re-store the same flow in the other layout.
    pub fn transposed(&self) -> ActionTable {
        let n = self.n_strings;
        let mut counts = vec![0u64; n + 1];
        for &p in &self.index {
            counts[p as usize + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut row_ptr = counts.clone();
        let mut index = vec![0u32; self.index.len()];
        let mut weight = vec![0.0f64; self.weight.len()];
        for row in 0..n {
            for e in self.row_ptr[row] as usize..self.row_ptr[row + 1] as usize {
                let partner = self.index[e] as usize;
                let slot = row_ptr[partner] as usize;
                index[slot] = row as u32;
                weight[slot] = self.weight[e];
                row_ptr[partner] += 1;
            }
        }
        ActionTable {
            layout: match self.layout {
                TableLayout::ByTarget => TableLayout::BySource,
                TableLayout::BySource => TableLayout::ByTarget,
            },
            n_strings: n,
            row_ptr: counts,
            index,
            weight,
            basis_hash: self.basis_hash.clone(),
            hamiltonian_hash: self.hamiltonian_hash.clone(),
            lambda: self.lambda,
            dropped_fraction: self.dropped_fraction,
        }
    }

    /// Apply the flow once: `out = M·c` (the right-hand side dc/dt).
    pub fn apply(&self, c: &[f64], out: &mut [f64]) {
        assert_eq!(c.len(), self.n_strings);
        assert_eq!(out.len(), self.n_strings);
        match self.layout {
            TableLayout::ByTarget => {
                for t in 0..self.n_strings {
                    let lo = self.row_ptr[t] as usize;
                    let hi = self.row_ptr[t + 1] as usize;
                    let mut acc = 0.0;
                    for e in lo..hi {
                        acc += self.weight[e] * c[self.index[e] as usize];
                    }
                    out[t] = acc;
                }
            }
            TableLayout::BySource => {
                out.fill(0.0);
                for s in 0..self.n_strings {
                    let v = c[s];
                    if v == 0.0 {
                        continue;
                    }
                    let lo = self.row_ptr[s] as usize;
                    let hi = self.row_ptr[s + 1] as usize;
                    for e in lo..hi {
                        out[self.index[e] as usize] += self.weight[e] * v;
                    }
                }
            }
        }
    }

    // ---- cache serialization -------------------------------------------

    /// Write the versioned binary cache representation.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let header = format!(
            "spinlayer-action-table v1\nversion={}\nlayout={}\nn_strings={}\nn_entries={}\nbasis_hash={}\nhamiltonian_hash={}\nlambda={:.17e}\ndropped_fraction={:.17e}\nend-header\n",
            env!("CARGO_PKG_VERSION"),
            match self.layout {
                TableLayout::ByTarget => "by-target",
                TableLayout::BySource => "by-source",
            },
            self.n_strings,
            self.index.len(),
            self.basis_hash,
            self.hamiltonian_hash,
            self.lambda,
            self.dropped_fraction,
        );
        w.write_all(header.as_bytes())?;
        for v in &self.row_ptr {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in &self.index {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in &self.weight {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Read a cache written by [`ActionTable::write_to`], refusing hash or
    /// version mismatches.
    pub fn read_from(
        mut r: impl Read,
        expect_basis_hash: &str,
        expect_hamiltonian_hash: &str,
    ) -> Result<ActionTable> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let header_end = find_subsequence(&bytes, b"end-header\n")
            .ok_or_else(|| Error::Format("action-table cache: missing header".into()))?
            + b"end-header\n".len();
        let header = std::str::from_utf8(&bytes[..header_end])
            .map_err(|_| Error::Format("action-table cache: header is not UTF-8".into()))?;
        let mut lines = header.lines();
        if lines.next() != Some("spinlayer-action-table v1") {
            return Err(Error::Format(
                "action-table cache: unrecognized magic line".into(),
            ));
        }
        let mut fields = std::collections::HashMap::new();
        for line in lines {
            if line == "end-header" {
                break;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("action-table cache: bad line {line:?}")))?;
            fields.insert(k.to_string(), v.to_string());
        }
        let get = |k: &str| -> Result<&String> {
            fields
                .get(k)
                .ok_or_else(|| Error::Format(format!("action-table cache: missing field {k}")))
        };
        let version = get("version")?;
        if version != env!("CARGO_PKG_VERSION") {
            return Err(Error::CacheMismatch(format!(
                "cache written by version {version}, this is {}",
                env!("CARGO_PKG_VERSION")
            )));
        }
        let basis_hash = get("basis_hash")?.clone();
        let hamiltonian_hash = get("hamiltonian_hash")?.clone();
        if basis_hash != expect_basis_hash {
            return Err(Error::CacheMismatch(format!(
                "cache basis hash {basis_hash} does not match requested {expect_basis_hash}"
            )));
        }
        if hamiltonian_hash != expect_hamiltonian_hash {
            return Err(Error::CacheMismatch(format!(
                "cache hamiltonian hash {hamiltonian_hash} does not match requested {expect_hamiltonian_hash}"
            )));
        }
        let layout = match get("layout")?.as_str() {
            "by-target" => TableLayout::ByTarget,
            "by-source" => TableLayout::BySource,
            other => {
                return Err(Error::Format(format!(
                    "action-table cache: unknown layout {other}"
                )))
            }
        };
        let n_strings: usize = get("n_strings")?
            .parse()
            .map_err(|_| Error::Format("action-table cache: bad n_strings".into()))?;
        let n_entries: usize = get("n_entries")?
            .parse()
            .map_err(|_| Error::Format("action-table cache: bad n_entries".into()))?;
        let lambda: f64 = get("lambda")?
            .parse()
            .map_err(|_| Error::Format("action-table cache: bad lambda".into()))?;
        let dropped_fraction: f64 = get("dropped_fraction")?
            .parse()
            .map_err(|_| Error::Format("action-table cache: bad dropped_fraction".into()))?;

        let body = &bytes[header_end..];
        let need = (n_strings + 1) * 8 + n_entries * 4 + n_entries * 8;
        if body.len() != need {
            return Err(Error::Format(format!(
                "action-table cache: body is {} bytes, expected {need}",
                body.len()
            )));
        }
        let mut offset = 0usize;
        let mut row_ptr = Vec::with_capacity(n_strings + 1);
        for _ in 0..=n_strings {
            row_ptr.push(u64::from_le_bytes(
                body[offset..offset + 8].try_into().unwrap(),
            ));
            offset += 8;
        }
        let mut index = Vec::with_capacity(n_entries);
        for _ in 0..n_entries {
            index.push(u32::from_le_bytes(
                body[offset..offset + 4].try_into().unwrap(),
            ));
            offset += 4;
        }
        let mut weight = Vec::with_capacity(n_entries);
        for _ in 0..n_entries {
            weight.push(f64::from_le_bytes(
                body[offset..offset + 8].try_into().unwrap(),
            ));
            offset += 8;
        }
        if row_ptr.last().copied() != Some(n_entries as u64) {
            return Err(Error::Format(
                "action-table cache: row pointers inconsistent with entry count".into(),
            ));
        }
        Ok(ActionTable {
            layout,
            n_strings,
            row_ptr,
            index,
            weight,
            basis_hash,
            hamiltonian_hash,
            lambda,
            dropped_fraction,
        })
    }

    /// Stable cache key for this (basis, Hamiltonian, code version) triple.
    pub fn cache_key(basis_hash: &str, hamiltonian_hash: &str) -> String {
        let mut hasher = Sha256::new();
        hasher.update(b"action-table-key v1\n");
        hasher.update(basis_hash.as_bytes());
        hasher.update(b"\n");
        hasher.update(hamiltonian_hash.as_bytes());
        hasher.update(b"\n");
        hasher.update(env!("CARGO_PKG_VERSION").as_bytes());
        hex_string(&hasher.finalize())[..32].to_string()
    }
}

fn find_subsequence(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack
        .windows(needle.len())
        .position(|window| window == needle)
}
