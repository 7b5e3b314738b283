//! Exact dense engine: state vectors and density operators for small spin
//! systems (up to [`MAX_DENSE_SITES`] sites).
//!
//! This engine is the ground truth the truncated product-basis engine is
//! validated against, and it hosts the polarization-transfer and
//! time-crystal studies directly. States live in the computational basis
//! described in [`build`]: site 0 is the most significant bit and bit value
//! 0 means spin up.

pub mod build;
pub mod linalg;

use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianTerms;
use crate::pauli::{Axis, PauliProduct};
use build::{hamiltonian_matrix, rotation_2x2, rotation_about_phase_2x2, site_mask, PauliAction};
use linalg::{dagger, eigh, expm, matmul, matvec, unitarity_error};
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest dense system accepted (4096-dimensional Hilbert space).
pub const MAX_DENSE_SITES: usize = 12;

fn check_site_count(n_sites: usize) -> Result<()> {
    if n_sites == 0 {
        return Err(Error::invalid("dense state needs at least one site"));
    }
    if n_sites > MAX_DENSE_SITES {
        return Err(Error::CapacityExceeded(format!(
            "dense engine supports at most {MAX_DENSE_SITES} sites, got {n_sites}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone)]
enum Repr {
    Pure(Array1<Complex64>),
    Density(Array2<Complex64>),
}

/// A dense quantum state: pure vector or density operator.
#[derive(Debug, Clone)]
pub struct DenseState {
    n_sites: usize,
    repr: Repr,
}

impl DenseState {
    /// Computational basis state given by `bits` (site 0 = most significant
    /// bit, bit 0 = spin up).
    pub fn pure_from_bits(n_sites: usize, bits: usize) -> Result<Self> {
        check_site_count(n_sites)?;
        let dim = 1usize << n_sites;
        if bits >= dim {
            return Err(Error::invalid(format!(
                "basis index {bits} out of range for {n_sites} sites"
            )));
        }
        let mut v = Array1::zeros(dim);
        v[bits] = Complex64::new(1.0, 0.0);
        Ok(DenseState {
            n_sites,
            repr: Repr::Pure(v),
        })
    }

    /// All sites spin-up (σ_z = +1 everywhere).
    pub fn all_up(n_sites: usize) -> Result<Self> {
        Self::pure_from_bits(n_sites, 0)
    }

    /// Pure state from an explicit amplitude vector (must be normalized to
    /// 1e−10).
    pub fn from_vector(n_sites: usize, v: Array1<Complex64>) -> Result<Self> {
        check_site_count(n_sites)?;
        if v.len() != 1usize << n_sites {
            return Err(Error::invalid(format!(
                "vector length {} does not match {} sites",
                v.len(),
                n_sites
            )));
        }
        let norm: f64 = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!(
                "state vector norm {norm} is not 1"
            )));
        }
        Ok(DenseState {
            n_sites,
            repr: Repr::Pure(v),
        })
    }

    /// Site 0 polarized up, all other sites maximally mixed:
    /// |0⟩⟨0| ⊗ 1/2^{n−1}.
    pub fn nv_up_nuclei_mixed(n_sites: usize) -> Result<Self> {
        let mut bloch = vec![[0.0, 0.0, 0.0]; n_sites];
        bloch[0] = [0.0, 0.0, 1.0];
        Self::product_density(&bloch)
    }

    /// Product state with one Bloch vector per site:
    /// ρ_i = (1 + b·σ)/2. `|b| ≤ 1` required.
    pub fn product_density(bloch: &[[f64; 3]]) -> Result<Self> {
        check_site_count(bloch.len())?;
        let mut rho = Array2::from_elem((1, 1), Complex64::new(1.0, 0.0));
        for b in bloch {
            let len = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
            if len > 1.0 + 1e-12 {
                return Err(Error::invalid(format!(
                    "Bloch vector length {len} exceeds 1"
                )));
            }
            let site = ndarray::arr2(&[
                [
                    Complex64::new((1.0 + b[2]) / 2.0, 0.0),
                    Complex64::new(b[0] / 2.0, -b[1] / 2.0),
                ],
                [
                    Complex64::new(b[0] / 2.0, b[1] / 2.0),
                    Complex64::new((1.0 - b[2]) / 2.0, 0.0),
                ],
            ]);
            rho = linalg::kron(&rho, &site);
        }
        Ok(DenseState {
            n_sites: bloch.len(),
            repr: Repr::Density(rho),
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_sites
    }

    pub fn is_density(&self) -> bool {
        matches!(self.repr, Repr::Density(_))
    }

    /// Amplitude vector, if in pure mode.
    pub fn vector(&self) -> Option<&Array1<Complex64>> {
        match &self.repr {
            Repr::Pure(v) => Some(v),
            Repr::Density(_) => None,
        }
    }

    /// Density matrix, if in density mode.
    pub fn density_matrix(&self) -> Option<&Array2<Complex64>> {
        match &self.repr {
            Repr::Density(r) => Some(r),
            Repr::Pure(_) => None,
        }
    }

    /// Promote a pure state to its density operator in place (no-op in
    /// density mode).
    pub fn to_density(&mut self) {
        if let Repr::Pure(v) = &self.repr {
            let dim = v.len();
            let mut rho = Array2::zeros((dim, dim));
            for i in 0..dim {
                for j in 0..dim {
                    rho[(i, j)] = v[i] * v[j].conj();
                }
            }
            self.repr = Repr::Density(rho);
        }
    }

    /// Density operator as a matrix, regardless of mode (copies).
    pub fn density(&self) -> Array2<Complex64> {
        let mut s = self.clone();
        s.to_density();
        match s.repr {
            Repr::Density(r) => r,
            Repr::Pure(_) => unreachable!(),
        }
    }

    /// Tr ρ² (1 for pure states).
    pub fn purity(&self) -> f64 {
        match &self.repr {
            Repr::Pure(_) => 1.0,
            Repr::Density(r) => {
                // Tr(ρρ) = Σ_{ij} ρ_ij ρ_ji = Σ_{ij} |ρ_ij|² for Hermitian ρ.
                r.iter().map(|c| c.norm_sqr()).sum()
            }
        }
    }

    /// ⟨P⟩ for a Pauli product (real part; states are Hermitian).
    pub fn expectation(&self, p: &PauliProduct) -> f64 {
        if let Some(max) = p.max_site() {
            assert!(
                (max as usize) < self.n_sites,
                "observable site {max} out of range for {} sites",
                self.n_sites
            );
        }
        let action = PauliAction::compile(p, self.n_sites);
        let dim = self.dim();
        let mut acc = C_ZERO;
        match &self.repr {
            Repr::Pure(v) => {
                for c in 0..dim {
                    acc += v[c ^ action.flip_mask].conj() * action.phase(c) * v[c];
                }
            }
            Repr::Density(r) => {
                for c in 0..dim {
                    acc += r[(c, c ^ action.flip_mask)] * action.phase(c);
                }
            }
        }
        acc.re
    }

    /// Conjugate by an arbitrary unitary on the full space.
    pub fn apply_unitary(&mut self, u: &Array2<Complex64>) {
        assert_eq!(u.dim(), (self.dim(), self.dim()), "unitary dimension");
        match &mut self.repr {
            Repr::Pure(v) => {
                let mut out = vec![C_ZERO; v.len()];
                matvec(u, v.as_slice().unwrap(), &mut out);
                *v = Array1::from_vec(out);
            }
            Repr::Density(r) => {
                let tmp = matmul(u, r);
                *r = matmul(&tmp, &dagger(u));
            }
        }
    }

    /// Apply a 2×2 unitary to one site in place.
    pub fn apply_single_qubit(&mut self, site: usize, u: &[[Complex64; 2]; 2]) {
        assert!(site < self.n_sites, "site out of range");
        let mask = site_mask(self.n_sites, site);
        let dim = self.dim();
        match &mut self.repr {
            Repr::Pure(v) => {
                let s = v.as_slice_mut().unwrap();
                for i in 0..dim {
                    if i & mask == 0 {
                        let j = i | mask;
                        let (a, b) = (s[i], s[j]);
                        s[i] = u[0][0] * a + u[0][1] * b;
                        s[j] = u[1][0] * a + u[1][1] * b;
                    }
                }
            }
            Repr::Density(r) => {
                let s = r.as_slice_mut().unwrap();
                // Left multiply by U: mix row pairs within each column.
                for i in 0..dim {
                    if i & mask == 0 {
                        let j = i | mask;
                        for c in 0..dim {
                            let (a, b) = (s[i * dim + c], s[j * dim + c]);
                            s[i * dim + c] = u[0][0] * a + u[0][1] * b;
                            s[j * dim + c] = u[1][0] * a + u[1][1] * b;
                        }
                    }
                }
                // Right multiply by U†: mix column pairs within each row.
                for c in 0..dim {
                    if c & mask == 0 {
                        let d = c | mask;
                        for row in 0..dim {
                            let (a, b) = (s[row * dim + c], s[row * dim + d]);
                            s[row * dim + c] = a * u[0][0].conj() + b * u[0][1].conj();
                            s[row * dim + d] = a * u[1][0].conj() + b * u[1][1].conj();
                        }
                    }
                }
            }
        }
    }

    /// Rotation exp(−i·angle/2·σ_axis) on one site.
    pub fn apply_rotation(&mut self, site: usize, axis: Axis, angle: f64) {
        self.apply_single_qubit(site, &rotation_2x2(axis, angle));
    }

    /// Rotation about the equatorial axis at azimuth `phi` on one site.
    pub fn apply_rotation_about_phase(&mut self, site: usize, phi: f64, angle: f64) {
        self.apply_single_qubit(site, &rotation_about_phase_2x2(phi, angle));
    }

    /// Optical re-initialization of `site` to spin-up:
    /// ρ → |0⟩⟨0|_site ⊗ Tr_site(ρ). Promotes pure states to density mode,
    /// since the output is generally mixed. Marginals of the other sites
    /// are unchanged; the map is idempotent.
    pub fn laser_reset(&mut self, site: usize) {
        assert!(site < self.n_sites, "site out of range");
        self.to_density();
        let dim = self.dim();
        let m = site_mask(self.n_sites, site);
        if let Repr::Density(r) = &mut self.repr {
            let s = r.as_slice_mut().unwrap();
            // Fold the excited-level diagonal block into the ground block…
            for a in 0..dim {
                if a & m != 0 {
                    continue;
                }
                for b in 0..dim {
                    if b & m != 0 {
                        continue;
                    }
                    let add = s[(a | m) * dim + (b | m)];
                    s[a * dim + b] += add;
                }
            }
            // …then clear every entry touching the excited level.
            for a in 0..dim {
                for b in 0..dim {
                    if (a | b) & m != 0 {
                        s[a * dim + b] = C_ZERO;
                    }
                }
            }
        }
    }

    /// Partial trace over one site; the result is a density operator over
    /// the remaining sites (with their relative order preserved).
    pub fn trace_out_site(&self, site: usize) -> Result<DenseState> {
        assert!(site < self.n_sites, "site out of range");
        if self.n_sites == 1 {
            return Err(Error::invalid("cannot trace out the only site"));
        }
        let rho = self.density();
        let m = site_mask(self.n_sites, site);
        let pos = m.trailing_zeros() as usize;
        let low = m - 1;
        let insert = |r: usize, v: usize| ((r & !low) << 1) | (v << pos) | (r & low);
        let half = self.dim() / 2;
        let mut out = Array2::zeros((half, half));
        for a in 0..half {
            for b in 0..half {
                out[(a, b)] =
                    rho[(insert(a, 0), insert(b, 0))] + rho[(insert(a, 1), insert(b, 1))];
            }
        }
        Ok(DenseState {
            n_sites: self.n_sites - 1,
            repr: Repr::Density(out),
        })
    }

    /// Check density-mode invariants: Hermitian and unit trace to 1e−10,
    /// eigenvalues ≥ −1e−8. Pure mode checks normalization instead.
    pub fn validate_density(&self) -> Result<()> {
        match &self.repr {
            Repr::Pure(v) => {
                let norm: f64 = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > 1e-10 {
                    return Err(Error::invalid(format!("pure-state norm {norm} is not 1")));
                }
                Ok(())
            }
            Repr::Density(r) => {
                let dim = r.nrows();
                let mut defect = 0.0f64;
                for i in 0..dim {
                    for j in 0..dim {
                        defect = defect.max((r[(i, j)] - r[(j, i)].conj()).norm());
                    }
                }
                if defect > 1e-10 {
                    return Err(Error::invalid(format!(
                        "density operator Hermiticity defect {defect:.3e}"
                    )));
                }
                let trace: Complex64 = (0..dim).map(|i| r[(i, i)]).sum();
                if (trace.re - 1.0).abs() > 1e-10 || trace.im.abs() > 1e-10 {
                    return Err(Error::invalid(format!(
                        "density operator trace {trace} is not 1"
                    )));
                }
                let (eigenvalues, _) = eigh(r)?;
                if let Some(min) = eigenvalues.first() {
                    if *min < -1e-8 {
                        return Err(Error::invalid(format!(
                            "density operator has negative eigenvalue {min:.3e}"
                        )));
                    }
                }
                Ok(())
            }
        }
    }
}

/// Conjugate `state` by exp(−iHt) computed with the scaled-and-squared
/// matrix exponential. Ground-truth propagator; unitarity of the computed
/// exponential is verified to 1e−9.
pub fn evolve_dense(state: &mut DenseState, h: &HamiltonianTerms, t_s: f64) -> Result<()> {
    if h.n_sites() != state.n_sites() {
        return Err(Error::invalid(format!(
            "hamiltonian has {} sites but state has {}",
            h.n_sites(),
            state.n_sites()
        )));
    }
    check_site_count(state.n_sites())?;
    let mut a = hamiltonian_matrix(h);
    a.mapv_inplace(|v| v * Complex64::new(0.0, -t_s));
    let u = expm(&a);
    let err = unitarity_error(&u);
    if err > 1e-9 {
        return Err(Error::ConvergenceFailure(format!(
            "matrix exponential unitarity error {err:.3e} exceeds 1e-9"
        )));
    }
    state.apply_unitary(&u);
    Ok(())
}

/// Spectral decomposition of a (time-independent) Hamiltonian, for cheap
/// repeated propagation: U(t) = V·diag(e^{−iλt})·V†.
#[derive(Debug, Clone)]
pub struct EigenPropagator {
    n_sites: usize,
    eigenvalues: Vec<f64>,
    vectors: Array2<Complex64>,
    vectors_dagger: Array2<Complex64>,
}

impl EigenPropagator {
    pub fn from_terms(h: &HamiltonianTerms) -> Result<Self> {
        check_site_count(h.n_sites())?;
        let m = hamiltonian_matrix(h);
        Self::from_matrix(h.n_sites(), &m)
    }

    /// Decompose an explicit Hermitian matrix over `n_sites` sites.
    pub fn from_matrix(n_sites: usize, m: &Array2<Complex64>) -> Result<Self> {
        check_site_count(n_sites)?;
        if m.dim() != (1 << n_sites, 1 << n_sites) {
            return Err(Error::invalid("matrix dimension does not match site count"));
        }
        let (eigenvalues, vectors) = eigh(m)?;
        let vectors_dagger = dagger(&vectors);
        Ok(EigenPropagator {
            n_sites,
            eigenvalues,
            vectors,
            vectors_dagger,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_sites
    }

    /// Eigenvalues in ascending order (rad/s).
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenvector matrix V (columns are eigenvectors).
    pub fn vectors(&self) -> &Array2<Complex64> {
        &self.vectors
    }

    /// V†.
    pub fn vectors_dagger(&self) -> &Array2<Complex64> {
        &self.vectors_dagger
    }

    /// Per-eigenstate phases e^{−iλt}.
    pub fn phases(&self, t_s: f64) -> Vec<Complex64> {
        self.eigenvalues
            .iter()
            .map(|&l| Complex64::from_polar(1.0, -l * t_s))
            .collect()
    }

    /// Full propagator U(t) = V·diag(e^{−iλt})·V†.
    pub fn unitary(&self, t_s: f64) -> Array2<Complex64> {
        let phases = self.phases(t_s);
        let dim = self.dim();
        let mut scaled = self.vectors.clone();
        for i in 0..dim {
            for j in 0..dim {
                scaled[(i, j)] *= phases[j];
            }
        }
        matmul(&scaled, &self.vectors_dagger)
    }

    /// Evolve `state` for `t_s` seconds.
    pub fn evolve(&self, state: &mut DenseState, t_s: f64) {
        assert_eq!(state.n_sites(), self.n_sites, "site count mismatch");
        let phases = self.phases(t_s);
        match &mut state.repr {
            Repr::Pure(v) => {
                let mut w = vec![C_ZERO; v.len()];
                matvec(&self.vectors_dagger, v.as_slice().unwrap(), &mut w);
                for (wi, p) in w.iter_mut().zip(phases.iter()) {
                    *wi *= p;
                }
                let mut out = vec![C_ZERO; v.len()];
                matvec(&self.vectors, &w, &mut out);
                *v = Array1::from_vec(out);
            }
            Repr::Density(r) => {
                // ρ ← V (phases ∘ (V†ρV) ∘ phases†) V†
                let tmp = matmul(&self.vectors_dagger, r);
                let mut tilde = matmul(&tmp, &self.vectors);
                let dim = self.dim();
                for i in 0..dim {
                    for j in 0..dim {
                        tilde[(i, j)] *= phases[i] * phases[j].conj();
                    }
                }
                let tmp = matmul(&self.vectors, &tilde);
                *r = matmul(&tmp, &self.vectors_dagger);
            }
        }
    }
}

/// Distribution family for quasi-static detuning noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingLaw {
    /// Zero-mean normal with standard deviation √2/T2.
    Normal,
    /// Uniform on [−√6/T2, √6/T2] (same standard deviation √2/T2).
    Uniform,
}

/// Quasi-static dephasing model: every free-evolution segment of every
/// sample path draws fresh z detunings at the √2/T2 scale; observables are
/// averaged over `n_samples` paths.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DephasingModel {
    /// Coherence time in seconds (`f64::INFINITY` disables the noise).
    pub t2_s: f64,
    pub sampling_law: SamplingLaw,
    pub n_samples: usize,
    pub seed: u64,
    /// If set, one shared detuning per segment is applied to every site
    /// instead of independent per-site draws.
    pub common_mode: bool,
}

impl DephasingModel {
    pub fn new(t2_s: f64, sampling_law: SamplingLaw, n_samples: usize, seed: u64) -> Self {
        DephasingModel {
            t2_s,
            sampling_law,
            n_samples,
            seed,
            common_mode: false,
        }
    }

    /// A model whose draws are all exactly zero (single path).
    pub fn noiseless() -> Self {
        Self::new(f64::INFINITY, SamplingLaw::Normal, 1, 0)
    }

    /// Detuning standard deviation Δ = √2/T2 in rad/s (0 for infinite T2).
    pub fn detuning_scale(&self) -> f64 {
        if self.t2_s.is_finite() {
            std::f64::consts::SQRT_2 / self.t2_s
        } else {
            0.0
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t2_s > 0.0) {
            return Err(Error::invalid("dephasing T2 must be positive"));
        }
        if self.n_samples == 0 {
            return Err(Error::invalid("dephasing needs at least one sample path"));
        }
        Ok(())
    }
}

/// Per-path detuning stream. Each call to [`DetuningPath::next_segment`]
/// yields the z detunings (rad/s) for one free-evolution segment.
pub struct DetuningPath {
    rng: ChaCha12Rng,
    scale: f64,
    law: SamplingLaw,
    n_sites_drawn: usize,
    common_mode: bool,
    path_index: u64,
}

impl DetuningPath {
    /// Stream for path `path_index`, derived deterministically from
    /// (model seed, path index).
    pub fn for_path(model: &DephasingModel, n_sites_drawn: usize, path_index: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(model.seed);
        rng.set_stream(path_index);
        DetuningPath {
            rng,
            scale: model.detuning_scale(),
            law: model.sampling_law,
            n_sites_drawn,
            common_mode: model.common_mode,
            path_index,
        }
    }

    pub fn path_index(&self) -> u64 {
        self.path_index
    }

    fn draw(&mut self) -> f64 {
        match self.law {
            SamplingLaw::Normal => {
                // Box–Muller on (0,1] × [0,1).
                let u1: f64 = 1.0 - self.rng.gen::<f64>();
                let u2: f64 = self.rng.gen();
                self.scale
                    * (-2.0 * u1.ln()).sqrt()
                    * (2.0 * std::f64::consts::PI * u2).cos()
            }
            SamplingLaw::Uniform => {
                (self.rng.gen::<f64>() * 2.0 - 1.0) * 3.0f64.sqrt() * self.scale
            }
        }
    }

    /// Fresh detunings for the next free-evolution segment, one per drawn
    /// site (all equal when the model is common-mode).
    pub fn next_segment(&mut self) -> Vec<f64> {
        if self.common_mode {
            let d = self.draw();
            vec![d; self.n_sites_drawn]
        } else {
            (0..self.n_sites_drawn).map(|_| self.draw()).collect()
        }
    }
}

/// Run `run` once per sample path and average the returned traces
/// (element-wise, in path order — deterministic for a given seed
/// regardless of thread count). Because expectation values are linear in
/// the density operator, averaging measured traces equals measuring the
/// averaged state.
pub fn dephasing_average<F>(
    model: &DephasingModel,
    n_sites_drawn: usize,
    run: F,
) -> Result<Vec<f64>>
where
    F: Fn(&mut DetuningPath) -> Vec<f64> + Sync,
{
    model.validate()?;
    let traces: Vec<Vec<f64>> = (0..model.n_samples as u64)
        .into_par_iter()
        .map(|path_index| {
            let mut path = DetuningPath::for_path(model, n_sites_drawn, path_index);
            run(&mut path)
        })
        .collect();
    let len = traces[0].len();
    for t in &traces {
        if t.len() != len {
            return Err(Error::invalid(
                "all dephasing sample paths must produce traces of equal length",
            ));
        }
    }
    let mut mean = vec![0.0f64; len];
    for t in &traces {
        for (m, v) in mean.iter_mut().zip(t.iter()) {
            *m += v;
        }
    }
    let inv = 1.0 / model.n_samples as f64;
    for m in &mut mean {
        *m *= inv;
    }
    Ok(mean)
}
