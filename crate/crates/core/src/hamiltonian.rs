//! Sparse Pauli-product Hamiltonians for each experimental frame.
//!
//! All Hamiltonians are stored as merged, canonically sorted lists of
//! (PauliProduct, real coefficient in rad/s). Spin operators are σ/2, so a
//! physical term like γB·I_z appears with Pauli coefficient γB/2; the
//! builders do these conversions so callers only ever see physical
//! parameters.
//!
//! Site conventions: [`build_secular_hamiltonian`] and
//! [`build_novel_hamiltonian`] produce systems where site 0 is the NV
//! electron and sites 1..=n are nuclei. [`build_nuclear_dipolar`] produces a
//! nuclear-only system with sites 0..n (no NV), as used by the layer-dynamics
//! and Floquet protocols.

use crate::error::{Error, Result};
use crate::geometry::{frame_from_z, CouplingSet, SpinLayout};
use crate::pauli::{Axis, PauliProduct};
use sha2::{Digest, Sha256};

/// Coefficients with magnitude below this (rad/s) are dropped when terms are
/// finalized: sub-nanohertz couplings are numerically indistinguishable from
/// the floating-point residue of exact zeros (e.g. magic-angle pairs), and
/// every physical coupling in scope is ≥ mHz.
pub const COEFFICIENT_FLOOR: f64 = 1e-9;

/// A Hermitian operator as a merged list of Pauli-product terms with real
/// angular-frequency coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianTerms {
    n_sites: usize,
    terms: Vec<(PauliProduct, f64)>,
}

impl HamiltonianTerms {
    /// Empty operator on `n_sites` spins.
    pub fn new(n_sites: usize) -> Self {
        HamiltonianTerms {
            n_sites,
            terms: Vec::new(),
        }
    }

    /// Accumulate one term. Duplicate products are allowed here; they merge
    /// in [`Self::finalize`].
    pub fn add(&mut self, product: PauliProduct, coefficient: f64) -> Result<()> {
        if let Some(max_site) = product.max_site() {
            if max_site >= self.n_sites {
                return Err(Error::invalid(format!(
                    "term {product} references site {max_site}, but the system has \
                     {} sites",
                    self.n_sites
                )));
            }
        }
        self.terms.push((product, coefficient));
        Ok(())
    }

    /// Merge duplicate products, drop coefficients below
    /// [`COEFFICIENT_FLOOR`], and sort canonically. Idempotent; every
    /// builder returns finalized lists.
    pub fn finalize(mut self) -> Self {
        self.terms.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(PauliProduct, f64)> = Vec::with_capacity(self.terms.len());
        for (product, coefficient) in self.terms.drain(..) {
            match merged.last_mut() {
                Some((last, sum)) if *last == product => *sum += coefficient,
                _ => merged.push((product, coefficient)),
            }
        }
        merged.retain(|&(_, c)| c.abs() >= COEFFICIENT_FLOOR);
        HamiltonianTerms {
            n_sites: self.n_sites,
            terms: merged,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn terms(&self) -> &[(PauliProduct, f64)] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of an exact product, or 0 when absent.
    pub fn coefficient(&self, product: &PauliProduct) -> f64 {
        self.terms
            .binary_search_by(|(p, _)| p.cmp(product))
            .map(|idx| self.terms[idx].1)
            .unwrap_or(0.0)
    }

    /// All coefficients multiplied by `alpha` (the time-rescaling partner:
    /// evolving for α·t under H equals evolving for t under α·H).
    pub fn scaled(&self, alpha: f64) -> Self {
        HamiltonianTerms {
            n_sites: self.n_sites,
            terms: self
                .terms
                .iter()
                .map(|(p, c)| (p.clone(), c * alpha))
                .collect(),
        }
    }

    /// Sum of two operators on the same site count.
    pub fn plus(&self, other: &HamiltonianTerms) -> Result<Self> {
        if self.n_sites != other.n_sites {
            return Err(Error::invalid(format!(
                "cannot add Hamiltonians on {} and {} sites",
                self.n_sites, other.n_sites
            )));
        }
        let mut out = self.clone();
        out.terms.extend(other.terms.iter().cloned());
        Ok(out.finalize())
    }

    /// Re-index every site by `offset` (embedding a nuclear-only operator
    /// into a system with the NV at site 0 uses offset 1) and set the new
    /// total site count.
    pub fn shifted(&self, offset: usize, n_sites: usize) -> Result<Self> {
        let mut out = HamiltonianTerms::new(n_sites);
        for (product, c) in &self.terms {
            let moved = PauliProduct::new(
                product
                    .factors()
                    .iter()
                    .map(|&(s, a)| (s as usize + offset, a)),
            )?;
            out.add(moved, *c)?;
        }
        Ok(out.finalize())
    }

    /// Add detuning terms Σ δ_i·I_z over the given sites (δ in rad/s acting
    /// on I_z = σ_z/2).
    pub fn with_z_detunings(&self, detunings: &[(usize, f64)]) -> Result<Self> {
        let mut out = self.clone();
        for &(site, delta) in detunings {
            out.add(PauliProduct::single(site, Axis::Z), delta / 2.0)?;
        }
        Ok(out.finalize())
    }

    /// Canonical text form: one line per term, `sites axes coefficient`,
    /// sites comma-separated, sorted; header records the site count.
    pub fn to_text(&self) -> String {
        let mut out = format!("# spinlayer hamiltonian v1 sites={}\n", self.n_sites);
        for (product, c) in &self.terms {
            if product.is_identity() {
                out.push_str(&format!("- I {c:.17e}\n"));
                continue;
            }
            let sites: Vec<String> = product
                .factors()
                .iter()
                .map(|&(s, _)| s.to_string())
                .collect();
            let axes: String = product.factors().iter().map(|&(_, a)| a.to_char()).collect();
            out.push_str(&format!("{} {} {:.17e}\n", sites.join(","), axes, c));
        }
        out
    }

    /// SHA-256 of the canonical text form; cache keys and run manifests use
    /// this to identify a Hamiltonian.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_text().as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Σ|c| over all terms — a crude overall frequency scale used for step
    /// sizing diagnostics.
    pub fn total_abs_coefficient(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.abs()).sum()
    }
}

/// Which form of the nuclear dipole-dipole interaction to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DipolarMode {
    /// Secular (flip-flop) form J·(I_z I_z − ½(I_x I_x + I_y I_y)), valid
    /// when the Larmor frequency dominates the couplings.
    SecularFlipFlop,
    /// Full point-dipole tensor Σ_αβ D_αβ I_α I_β (recomputed from
    /// positions; 9 products per pair).
    Full,
    /// No nuclear-nuclear interaction.
    None,
}

/// Options for [`build_secular_hamiltonian`].
#[derive(Debug, Clone)]
pub struct SecularOptions {
    /// Nuclear-nuclear interaction form.
    pub dipolar_mode: DipolarMode,
    /// Optional transverse NV drive: adds Ω·S_y (Ω in rad/s).
    pub spin_lock: Option<f64>,
}

impl Default for SecularOptions {
    fn default() -> Self {
        SecularOptions {
            dipolar_mode: DipolarMode::SecularFlipFlop,
            spin_lock: None,
        }
    }
}

fn check_sizes(layout: &SpinLayout, couplings: &CouplingSet) -> Result<()> {
    if layout.n_nuclei() != couplings.n_nuclei() {
        return Err(Error::invalid(format!(
            "layout has {} nuclei but coupling set has {}",
            layout.n_nuclei(),
            couplings.n_nuclei()
        )));
    }
    Ok(())
}

/// Secular NV-layer Hamiltonian (site 0 = NV, sites 1..=n nuclei):
///
/// H = γ_N B Σ I_z^i + S_z Σ_i (A_zx I_x + A_zy I_y + A_zz I_z)^i + H_nn
///     [+ Ω S_y when a spin lock is requested]
///
/// with the NV as an effective two-level system on its {m_s = 0, m_s = −1}
/// transition, so S_z = (σ_z − 1)/2. The −1/2 shift folds hyperfine
/// contributions into nuclear single-site terms; only the NV's Z axis (plus
/// the optional drive) ever appears on site 0.
pub fn build_secular_hamiltonian(
    layout: &SpinLayout,
    couplings: &CouplingSet,
    options: &SecularOptions,
) -> Result<HamiltonianTerms> {
    check_sizes(layout, couplings)?;
    let n = couplings.n_nuclei();
    let mut h = HamiltonianTerms::new(n + 1);

    // Nuclear Zeeman: γ_N B · I_z = (larmor/2) σ_z.
    let larmor = couplings.larmor();
    for i in 0..n {
        h.add(PauliProduct::single(i + 1, Axis::Z), larmor / 2.0)?;
    }

    // Hyperfine: S_z A·I = (σ_z^NV − 1)/2 · Σ_α A_zα σ_α/2
    //          = Σ_α (A_zα/4)·σ_z^NV σ_α − (A_zα/4)·σ_α.
    for i in 0..n {
        let a = couplings.hyperfine(i);
        for (axis, &a_component) in Axis::ALL.iter().zip(a.iter()) {
            h.add(
                PauliProduct::new([(0, Axis::Z), (i + 1, *axis)])?,
                a_component / 4.0,
            )?;
            h.add(PauliProduct::single(i + 1, *axis), -a_component / 4.0)?;
        }
    }

    // Nuclear-nuclear interaction, embedded at sites 1..=n.
    if options.dipolar_mode != DipolarMode::None {
        let nn = build_nuclear_dipolar(layout, couplings, options.dipolar_mode)?;
        let embedded = nn.shifted(1, n + 1)?;
        for (p, c) in embedded.terms() {
            h.add(p.clone(), *c)?;
        }
    }

    // Spin-lock drive Ω·S_y = (Ω/2)·σ_y on the NV.
    if let Some(omega) = options.spin_lock {
        if omega < 0.0 {
            return Err(Error::invalid("spin-lock amplitude must be >= 0"));
        }
        h.add(PauliProduct::single(0, Axis::Y), omega / 2.0)?;
    }

    Ok(h.finalize())
}

/// Nuclear-only dipole-dipole Hamiltonian over sites 0..n (no NV site).
///
/// Secular mode emits, per coupled pair, J·(I_z I_z − ½ I_x I_x − ½ I_y I_y)
/// (Pauli coefficients J/4, −J/8, −J/8); full mode recomputes the complete
/// point-dipole tensor from the layout positions. Pairs whose coupling
/// merges/floors to zero (magic angle, cutoff) emit nothing.
pub fn build_nuclear_dipolar(
    layout: &SpinLayout,
    couplings: &CouplingSet,
    mode: DipolarMode,
) -> Result<HamiltonianTerms> {
    check_sizes(layout, couplings)?;
    let n = couplings.n_nuclei();
    let mut h = HamiltonianTerms::new(n);
    match mode {
        DipolarMode::None => {}
        DipolarMode::SecularFlipFlop => {
            for (i, j, j_ij) in couplings.pairs() {
                if j_ij == 0.0 {
                    continue;
                }
                h.add(PauliProduct::new([(i, Axis::Z), (j, Axis::Z)])?, j_ij / 4.0)?;
                h.add(PauliProduct::new([(i, Axis::X), (j, Axis::X)])?, -j_ij / 8.0)?;
                h.add(PauliProduct::new([(i, Axis::Y), (j, Axis::Y)])?, -j_ij / 8.0)?;
            }
        }
        DipolarMode::Full => {
            let (x_hat, y_hat, z_hat) = frame_from_z(layout.field_axis)?;
            for (i, j, j_secular) in couplings.pairs() {
                // Respect cutoffs/overrides: a pair zeroed in the coupling
                // set stays absent in full mode too.
                if j_secular == 0.0 {
                    continue;
                }
                let r = layout.nuclear_positions[j] - layout.nuclear_positions[i];
                let r_m = r.norm() * crate::constants::NM_TO_M;
                let b = crate::constants::MU_0 / (4.0 * crate::constants::PI)
                    * layout.nuclear_gyromagnetic_ratio
                    * layout.nuclear_gyromagnetic_ratio
                    * crate::constants::HBAR
                    / (r_m * r_m * r_m);
                let n_hat = r * (1.0 / r.norm());
                let components = [n_hat.dot(x_hat), n_hat.dot(y_hat), n_hat.dot(z_hat)];
                for (ai, axis_i) in Axis::ALL.iter().enumerate() {
                    for (aj, axis_j) in Axis::ALL.iter().enumerate() {
                        let delta = if ai == aj { 1.0 } else { 0.0 };
                        let d = b * (delta - 3.0 * components[ai] * components[aj]);
                        h.add(
                            PauliProduct::new([(i, *axis_i), (j, *axis_j)])?,
                            d / 4.0,
                        )?;
                    }
                }
            }
        }
    }
    Ok(h.finalize())
}

/// Spin-lock-frame Hamiltonian: the secular Hamiltonian plus the drive term
/// Ω·S_y on the NV. Ω = γ_N·B (the Hartmann-Hahn match) makes NV-nuclear
/// flip-flops resonant, but any Ω ≥ 0 is accepted.
pub fn build_novel_hamiltonian(
    layout: &SpinLayout,
    couplings: &CouplingSet,
    omega: f64,
) -> Result<HamiltonianTerms> {
    build_secular_hamiltonian(
        layout,
        couplings,
        &SecularOptions {
            dipolar_mode: DipolarMode::SecularFlipFlop,
            spin_lock: if omega == 0.0 { None } else { Some(omega) },
        },
    )
}
