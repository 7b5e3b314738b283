//! The truncated expectation-value state and its propagation: Taylor
//! stepping through action tables, exact pulses, optical reset, readout.

use super::basis::TruncatedBasis;
use super::table::ActionTable;
use crate::dense::build::{rotation_2x2, rotation_about_phase_2x2};
use crate::error::{Error, Result};
use crate::pauli::{Axis, PauliProduct};
use num_complex::Complex64;

/// Hard ceiling on Δt·Λ per step; [`step`] refuses anything larger.
pub const HARD_DT_LAMBDA_BOUND: f64 = 0.1;

/// Integrator controls for [`evolve`].
#[derive(Debug, Clone, Copy)]
pub struct StepControls {
    /// Taylor expansion order K.
    pub order: usize,
    /// Target Δt·Λ per step; must not exceed [`HARD_DT_LAMBDA_BOUND`].
    pub dt_lambda_bound: f64,
}

impl Default for StepControls {
    fn default() -> Self {
        StepControls {
            order: 4,
            dt_lambda_bound: 0.05,
        }
    }
}

impl StepControls {
    /// High-accuracy profile for oracle comparisons (order 6).
    pub fn high_accuracy() -> Self {
        StepControls {
            order: 6,
            dt_lambda_bound: 0.05,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(Error::invalid("Taylor order must be at least 1"));
        }
        if !(self.dt_lambda_bound > 0.0) || self.dt_lambda_bound > HARD_DT_LAMBDA_BOUND {
            return Err(Error::invalid(format!(
                "dt·lambda bound must lie in (0, {HARD_DT_LAMBDA_BOUND}]"
            )));
        }
        Ok(())
    }
}

/// Coefficient state: `c[i] = ⟨basis.string(i)⟩`, all real.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedState {
    c: Vec<f64>,
}

impl TruncatedState {
    /// Everything unpolarized: only the identity coefficient is set.
    pub fn unpolarized(basis: &TruncatedBasis) -> Self {
        let mut c = vec![0.0; basis.len()];
        c[0] = 1.0;
        TruncatedState { c }
    }

    /// Central spin polarized up (⟨Z₀⟩ = 1), nuclei unpolarized.
    pub fn nv_polarized(basis: &TruncatedBasis) -> Self {
        let mut bloch = vec![[0.0; 3]; basis.n_sites()];
        bloch[0] = [0.0, 0.0, 1.0];
        Self::product(basis, &bloch).expect("shapes match by construction")
    }

    /// Product state from one Bloch vector per site: every admitted string's
    /// expectation factorizes as Π_site b[site][axis].
    pub fn product(basis: &TruncatedBasis, bloch: &[[f64; 3]]) -> Result<Self> {
        if bloch.len() != basis.n_sites() {
            return Err(Error::invalid(format!(
                "need {} Bloch vectors, got {}",
                basis.n_sites(),
                bloch.len()
            )));
        }
        for b in bloch {
            let len = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
            if len > 1.0 + 1e-12 {
                return Err(Error::invalid(format!(
                    "Bloch vector length {len} exceeds 1"
                )));
            }
        }
        let c = basis
            .strings()
            .iter()
            .map(|p| {
                p.factors()
                    .iter()
                    .map(|&(site, axis)| bloch[site as usize][axis.index()])
                    .product()
            })
            .collect();
        Ok(TruncatedState { c })
    }

    /// Adopt an explicit coefficient vector (identity slot must be 1).
    pub fn from_coefficients(basis: &TruncatedBasis, c: Vec<f64>) -> Result<Self> {
        if c.len() != basis.len() {
            return Err(Error::invalid(format!(
                "coefficient vector length {} does not match basis size {}",
                c.len(),
                basis.len()
            )));
        }
        if (c[0] - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(
                "identity coefficient must be 1 (trace normalization)",
            ));
        }
        Ok(TruncatedState { c })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.c
    }

    pub fn coefficient(&self, index: usize) -> f64 {
        self.c[index]
    }

    /// ⟨P⟩ for an admitted string; non-admitted observables are query errors.
    pub fn expectation(&self, basis: &TruncatedBasis, p: &PauliProduct) -> Result<f64> {
        basis
            .index_of(p)
            .map(|i| self.c[i])
            .ok_or_else(|| Error::invalid(format!("observable {p} is not admitted by the basis")))
    }

    /// Mean ⟨Z⟩ over a set of sites.
    pub fn mean_z(
        &self,
        basis: &TruncatedBasis,
        sites: impl IntoIterator<Item = usize>,
    ) -> Result<f64> {
        let mut sum = 0.0;
        let mut count = 0usize;
        for site in sites {
            sum += self.expectation(basis, &PauliProduct::single(site, Axis::Z))?;
            count += 1;
        }
        if count == 0 {
            return Err(Error::invalid("site average over an empty set"));
        }
        Ok(sum / count as f64)
    }

    /// Σ c² over all admitted strings (conserved by the exact flow).
    pub fn purity_proxy(&self) -> f64 {
        self.c.iter().map(|v| v * v).sum()
    }

    /// Runtime sanity check: trace slot exactly 1, single-site coefficients
    /// within 1 + 1e−6 (larger violations signal step-size failure).
    pub fn validate(&self, basis: &TruncatedBasis) -> Result<()> {
        if (self.c[0] - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "identity coefficient drifted to {}",
                self.c[0]
            )));
        }
        let weight1_end = 1 + 3 * basis.n_sites();
        for (i, v) in self.c[1..weight1_end].iter().enumerate() {
            if v.abs() > 1.0 + 1e-6 {
                return Err(Error::StepSize(format!(
                    "single-site coefficient {} = {v} exceeds physical bound; reduce step size",
                    basis.string(1 + i)
                )));
            }
        }
        Ok(())
    }

    // ---- pulses ---------------------------------------------------------

    /// Instantaneous rotation exp(−i·angle/2·σ_axis) on every listed site.
    /// Exact: the truncated basis is closed under single-site conjugation.
    pub fn apply_pulse(
        &mut self,
        basis: &TruncatedBasis,
        sites: &[usize],
        axis: Axis,
        angle: f64,
    ) {
        let m = conjugation_matrix(&rotation_2x2(axis, angle));
        self.apply_pulse_matrix(basis, sites, &m);
    }

    /// Rotation about the equatorial axis at azimuth `phi` on every listed
    /// site.
    pub fn apply_pulse_phase(
        &mut self,
        basis: &TruncatedBasis,
        sites: &[usize],
        phi: f64,
        angle: f64,
    ) {
        let m = conjugation_matrix(&rotation_about_phase_2x2(phi, angle));
        self.apply_pulse_matrix(basis, sites, &m);
    }

    fn apply_pulse_matrix(&mut self, basis: &TruncatedBasis, sites: &[usize], m: &M3) {
        let n_sites = basis.n_sites();
        for &s in sites {
            assert!(s < n_sites, "pulsed site {s} out of range");
        }
        let mut pulsed = vec![false; n_sites];
        for &s in sites {
            pulsed[s] = true;
        }
        let eye = identity_m3();
        let pick = |site: usize| -> &M3 { if pulsed[site] { m } else { &eye } };
        let n = basis.n_nuclei();

        // Weight-1 blocks.
        for site in 0..n_sites {
            if pulsed[site] {
                let base = 1 + 3 * site;
                transform1(&mut self.c[base..base + 3], m);
            }
        }
        // Nuclear-nuclear pair blocks.
        let o2 = basis.offset_nuclear_pairs();
        for i in 1..=n as u16 {
            for j in (i + 1)..=n as u16 {
                if pulsed[i as usize] || pulsed[j as usize] {
                    let base = o2 + 9 * basis.pair_slot(i, j);
                    transform2(
                        &mut self.c[base..base + 9],
                        pick(i as usize),
                        pick(j as usize),
                    );
                }
            }
        }
        // Center-nuclear pair blocks.
        let o3 = basis.offset_center_pairs();
        for j in 1..=n {
            if pulsed[0] || pulsed[j] {
                let base = o3 + 9 * (j - 1);
                transform2(&mut self.c[base..base + 9], pick(0), pick(j));
            }
        }
        // Center + nuclear pair triples.
        let o4 = basis.offset_center_triples();
        for i in 1..=n as u16 {
            for j in (i + 1)..=n as u16 {
                if pulsed[0] || pulsed[i as usize] || pulsed[j as usize] {
                    let base = o4 + 27 * basis.pair_slot(i, j);
                    transform3(
                        &mut self.c[base..base + 27],
                        pick(0),
                        pick(i as usize),
                        pick(j as usize),
                    );
                }
            }
        }
        // Listed nuclear triples.
        let o5 = basis.offset_listed_triples();
        for (slot, t) in basis.nuclear_triples().iter().enumerate() {
            if pulsed[t[0] as usize] || pulsed[t[1] as usize] || pulsed[t[2] as usize] {
                let base = o5 + 27 * slot;
                transform3(
                    &mut self.c[base..base + 27],
                    pick(t[0] as usize),
                    pick(t[1] as usize),
                    pick(t[2] as usize),
                );
            }
        }
    }

    // ---- optical reset ----------------------------------------------------

    /// Optical re-initialization of the central spin to |0⟩:
    /// nuclear-only strings are unchanged, c(Z₀⊗Q) ← c(Q), and strings with
    /// X₀/Y₀ vanish. Exactly representable in the truncated basis.
    pub fn apply_laser_reset(&mut self, basis: &TruncatedBasis) {
        let n = basis.n_nuclei();
        // Central weight-1 block: (X₀, Y₀, Z₀) ← (0, 0, 1).
        self.c[1] = 0.0;
        self.c[2] = 0.0;
        self.c[3] = 1.0;
        // Center-nuclear pairs: Z₀ row copies the nuclear weight-1 block.
        let o3 = basis.offset_center_pairs();
        for j in 1..=n {
            let base = o3 + 9 * (j - 1);
            for b in 0..3 {
                self.c[base + b] = 0.0; // X₀ row
                self.c[base + 3 + b] = 0.0; // Y₀ row
                self.c[base + 6 + b] = self.c[1 + 3 * j + b]; // Z₀ row ← c(σ_b on j)
            }
        }
        // Center triples: Z₀ slice copies the nuclear pair block.
        let o2 = basis.offset_nuclear_pairs();
        let o4 = basis.offset_center_triples();
        for i in 1..=n as u16 {
            for j in (i + 1)..=n as u16 {
                let pair = basis.pair_slot(i, j);
                let tri = o4 + 27 * pair;
                let nn = o2 + 9 * pair;
                for bc in 0..9 {
                    self.c[tri + bc] = 0.0; // X₀ slice
                    self.c[tri + 9 + bc] = 0.0; // Y₀ slice
                    self.c[tri + 18 + bc] = self.c[nn + bc]; // Z₀ slice
                }
            }
        }
    }
}

// ---- single-site conjugation ------------------------------------------

type M3 = [[f64; 3]; 3];

fn identity_m3() -> M3 {
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
}

type C2 = [[Complex64; 2]; 2];

fn mul2(a: &C2, b: &C2) -> C2 {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn dagger2(a: &C2) -> C2 {
    [
        [a[0][0].conj(), a[1][0].conj()],
        [a[0][1].conj(), a[1][1].conj()],
    ]
}

/// The real 3×3 matrix N with U†σ_a U = Σ_b N[a][b]·σ_b, so that pulse
/// application is c'(…σ_a…) = Σ_b N[a][b]·c(…σ_b…).
fn conjugation_matrix(u: &C2) -> M3 {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let sigma: [C2; 3] = [
        [[zero, one], [one, zero]],
        [[zero, -i], [i, zero]],
        [[one, zero], [zero, -one]],
    ];
    let ud = dagger2(u);
    let mut m = [[0.0; 3]; 3];
    for (a, sa) in sigma.iter().enumerate() {
        let conj = mul2(&ud, &mul2(sa, u));
        for (b, sb) in sigma.iter().enumerate() {
            let prod = mul2(sb, &conj);
            let tr = prod[0][0] + prod[1][1];
            debug_assert!(tr.im.abs() < 1e-12);
            m[a][b] = 0.5 * tr.re;
        }
    }
    m
}

fn transform1(c: &mut [f64], m: &M3) {
    let old = [c[0], c[1], c[2]];
    for a in 0..3 {
        c[a] = m[a][0] * old[0] + m[a][1] * old[1] + m[a][2] * old[2];
    }
}

fn transform2(c: &mut [f64], m1: &M3, m2: &M3) {
    let mut old = [0.0; 9];
    old.copy_from_slice(c);
    for a in 0..3 {
        for b in 0..3 {
            let mut acc = 0.0;
            for ap in 0..3 {
                for bp in 0..3 {
                    acc += m1[a][ap] * m2[b][bp] * old[3 * ap + bp];
                }
            }
            c[3 * a + b] = acc;
        }
    }
}

fn transform3(c: &mut [f64], m1: &M3, m2: &M3, m3: &M3) {
    let mut old = [0.0; 27];
    old.copy_from_slice(c);
    for a in 0..3 {
        for b in 0..3 {
            for d in 0..3 {
                let mut acc = 0.0;
                for ap in 0..3 {
                    for bp in 0..3 {
                        for dp in 0..3 {
                            acc += m1[a][ap]
                                * m2[b][bp]
                                * m3[d][dp]
                                * old[9 * ap + 3 * bp + dp];
                        }
                    }
                }
                c[9 * a + 3 * b + d] = acc;
            }
        }
    }
}

// ---- stepping -----------------------------------------------------------

/// One order-K Taylor step of size `dt_s`; errors if Δt·Λ exceeds the hard
/// stability bound.
pub fn step(
    state: &mut TruncatedState,
    table: &ActionTable,
    dt_s: f64,
    order: usize,
) -> Result<()> {
    let mut k_prev = vec![0.0; state.c.len()];
    let mut k_cur = vec![0.0; state.c.len()];
    check_step(table, dt_s, 1.0)?;
    step_inner(state, table, dt_s, order, 1.0, &mut k_prev, &mut k_cur);
    Ok(())
}

fn check_step(table: &ActionTable, dt_s: f64, alpha: f64) -> Result<()> {
    let dt_lambda = dt_s.abs() * alpha.abs() * table.lambda();
    if dt_lambda > HARD_DT_LAMBDA_BOUND * (1.0 + 1e-12) {
        return Err(Error::StepSize(format!(
            "Δt·Λ = {dt_lambda:.3e} exceeds the stability bound {HARD_DT_LAMBDA_BOUND}; subdivide"
        )));
    }
    Ok(())
}

fn step_inner(
    state: &mut TruncatedState,
    table: &ActionTable,
    dt_s: f64,
    order: usize,
    alpha: f64,
    k_prev: &mut Vec<f64>,
    k_cur: &mut Vec<f64>,
) {
    k_prev.copy_from_slice(&state.c);
    let mut factor = 1.0f64;
    for k in 1..=order {
        table.apply(k_prev, k_cur);
        if alpha != 1.0 {
            for v in k_cur.iter_mut() {
                *v *= alpha;
            }
        }
        factor *= dt_s / k as f64;
        for (ci, kv) in state.c.iter_mut().zip(k_cur.iter()) {
            *ci += factor * kv;
        }
        std::mem::swap(k_prev, k_cur);
    }
}

/// Number of steps [`evolve`] would take for duration `t_s`.
pub fn steps_for(table: &ActionTable, t_s: f64, controls: &StepControls) -> usize {
    if t_s == 0.0 || table.lambda() == 0.0 {
        return 1;
    }
    ((t_s.abs() * table.lambda() / controls.dt_lambda_bound).ceil() as usize).max(1)
}

/// Propagate for `t_s` seconds, subdividing to honor the stability bound.
pub fn evolve(
    state: &mut TruncatedState,
    table: &ActionTable,
    t_s: f64,
    controls: &StepControls,
) -> Result<()> {
    if t_s < 0.0 {
        return Err(Error::invalid("evolution time must be non-negative"));
    }
    let n_steps = steps_for(table, t_s, controls);
    evolve_with_steps(state, table, t_s, n_steps, controls)
}

/// Propagate with an explicit step count (shared across a sweep family).
pub fn evolve_with_steps(
    state: &mut TruncatedState,
    table: &ActionTable,
    t_s: f64,
    n_steps: usize,
    controls: &StepControls,
) -> Result<()> {
    evolve_scaled(state, table, 1.0, t_s, n_steps, controls)
}

/// Propagate under the coefficient-rescaled flow α·H for base duration
/// `t_base_s`, realizing evolution time α·t_base with the same step count
/// and memory access pattern for every α of a sweep family.
pub fn evolve_scaled(
    state: &mut TruncatedState,
    table: &ActionTable,
    alpha: f64,
    t_base_s: f64,
    n_steps: usize,
    controls: &StepControls,
) -> Result<()> {
    controls.validate()?;
    if t_base_s < 0.0 {
        return Err(Error::invalid("evolution time must be non-negative"));
    }
    if n_steps == 0 {
        return Err(Error::invalid("step count must be at least 1"));
    }
    if t_base_s == 0.0 {
        return Ok(());
    }
    let dt = t_base_s / n_steps as f64;
    check_step(table, dt, alpha)?;
    let mut k_prev = vec![0.0; state.c.len()];
    let mut k_cur = vec![0.0; state.c.len()];
    for _ in 0..n_steps {
        step_inner(
            state,
            table,
            dt,
            controls.order,
            alpha,
            &mut k_prev,
            &mut k_cur,
        );
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{evolve_dense, DenseState};
    use crate::engine::basis::{enumerate_basis, TruncationRule};
    use crate::engine::table::precompute_action;
    use crate::geometry::{build_chain, CouplingSet, GridOptions, SpinLayout, Vec3};
    use crate::hamiltonian::{
        build_secular_hamiltonian, HamiltonianTerms, SecularOptions,
    };
    use approx::assert_abs_diff_eq;

    fn nuclear_z_field(n_sites: usize, site: usize, omega: f64) -> HamiltonianTerms {
        let mut h = HamiltonianTerms::new(n_sites);
        h.add(PauliProduct::single(site, Axis::Z), omega / 2.0)
            .unwrap();
        h.finalize()
    }

    /// NV + one nucleus at 1 nm in a 600 G field: complete-basis testbed.
    fn one_nucleus_system() -> (SpinLayout, HamiltonianTerms) {
        let mut opts = GridOptions::default();
        opts.field_tesla = 0.06;
        let mut layout = crate::geometry::build_layer_grid_with(
            1, 1, 0.3, 1.0, 0.0, 1, &opts,
        )
        .unwrap();
        layout.field_axis = Vec3::Z;
        let couplings = CouplingSet::from_layout(&layout).unwrap();
        let h =
            build_secular_hamiltonian(&layout, &couplings, &SecularOptions::default()).unwrap();
        (layout, h)
    }

    #[test]
    fn product_state_coefficients() {
        let basis = enumerate_basis(2, &TruncationRule::default()).unwrap();
        let bloch = [[0.0, 0.0, 1.0], [0.6, 0.0, 0.8], [0.0, -0.5, 0.0]];
        let s = TruncatedState::product(&basis, &bloch).unwrap();
        assert_eq!(s.coefficient(0), 1.0);
        let x1 = PauliProduct::single(1, Axis::X);
        assert_abs_diff_eq!(s.expectation(&basis, &x1).unwrap(), 0.6, epsilon = 1e-15);
        let z0z1 = PauliProduct::new([(0, Axis::Z), (1, Axis::Z)]).unwrap();
        assert_abs_diff_eq!(
            s.expectation(&basis, &z0z1).unwrap(),
            0.8,
            epsilon = 1e-15
        );
        let pair = PauliProduct::new([(1, Axis::X), (2, Axis::Y)]).unwrap();
        assert_abs_diff_eq!(
            s.expectation(&basis, &pair).unwrap(),
            0.6 * -0.5,
            epsilon = 1e-15
        );
        let triple = PauliProduct::new([(0, Axis::Z), (1, Axis::Z), (2, Axis::Y)]).unwrap();
        assert_abs_diff_eq!(
            s.expectation(&basis, &triple).unwrap(),
            0.8 * -0.5,
            epsilon = 1e-15
        );
        s.validate(&basis).unwrap();
    }

    #[test]
    fn larmor_rotation_reaches_antipode() {
        // Spec example for the stepper: ω·I_z on one nucleus, start along
        // +x, after t = π/ω the polarization is −x within 1e−6.
        let basis = enumerate_basis(1, &TruncationRule::default()).unwrap();
        let omega = 2.0 * std::f64::consts::PI * 0.5e6;
        let h = nuclear_z_field(2, 1, omega);
        let table = precompute_action(&h, &basis).unwrap();
        let mut s = TruncatedState::product(
            &basis,
            &[[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]],
        )
        .unwrap();
        evolve(
            &mut s,
            &table,
            std::f64::consts::PI / omega,
            &StepControls::default(),
        )
        .unwrap();
        let x1 = PauliProduct::single(1, Axis::X);
        assert_abs_diff_eq!(
            s.expectation(&basis, &x1).unwrap(),
            -1.0,
            epsilon = 1e-6
        );
        assert_eq!(s.coefficient(0), 1.0, "trace slot untouched");
        s.validate(&basis).unwrap();
    }

    #[test]
    fn zero_time_is_identity() {
        let basis = enumerate_basis(1, &TruncationRule::default()).unwrap();
        let h = nuclear_z_field(2, 1, 1.0e6);
        let table = precompute_action(&h, &basis).unwrap();
        let s0 = TruncatedState::nv_polarized(&basis);
        let mut s = s0.clone();
        evolve(&mut s, &table, 0.0, &StepControls::default()).unwrap();
        assert_eq!(s, s0);
        // Δt = 0 single step too.
        step(&mut s, &table, 0.0, 4).unwrap();
        assert_eq!(s, s0);
    }

    #[test]
    fn step_size_guard() {
        let basis = enumerate_basis(1, &TruncationRule::default()).unwrap();
        let omega = 1.0e6;
        let h = nuclear_z_field(2, 1, omega);
        let table = precompute_action(&h, &basis).unwrap();
        let mut s = TruncatedState::nv_polarized(&basis);
        // Λ = ω; a single step with dt·Λ = 0.2 must be refused.
        let err = step(&mut s, &table, 0.2 / omega, 4).unwrap_err();
        assert!(matches!(err, Error::StepSize(_)), "{err}");
        // And the same via explicit step counts.
        let err = evolve_with_steps(
            &mut s,
            &table,
            1.0 / omega,
            2,
            &StepControls::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::StepSize(_)), "{err}");
        // Negative times are rejected.
        let err = evolve(&mut s, &table, -1.0, &StepControls::default()).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)), "{err}");
    }

    #[test]
    fn semigroup_property() {
        let (_, h) = one_nucleus_system();
        let basis = enumerate_basis(1, &TruncationRule::default()).unwrap();
        let table = precompute_action(&h, &basis).unwrap();
        let mut bloch = vec![[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]];
        bloch[0] = [1.0, 0.0, 0.0];
        let s0 = TruncatedState::product(&basis, &bloch).unwrap();
        let t = 4.0e-6;
        let controls = StepControls::default();
        let mut once = s0.clone();
        evolve(&mut once, &table, 2.0 * t, &controls).unwrap();
        let mut twice = s0.clone();
        evolve(&mut twice, &table, t, &controls).unwrap();
        evolve(&mut twice, &table, t, &controls).unwrap();
        for i in 0..basis.len() {
            assert!(
                (once.coefficient(i) - twice.coefficient(i)).abs() < 1e-8,
                "string {i}: {} vs {}",
                once.coefficient(i),
                twice.coefficient(i)
            );
        }
    }

    #[test]
    fn rescaling_identity() {
        // evolve with (α·t, H) equals evolve with (t, α·H) to 1e−10.
        let (_, h) = one_nucleus_system();
        let basis = enumerate_basis(1, &TruncationRule::default()).unwrap();
        let table = precompute_action(&h, &basis).unwrap();
        let mut s0 = TruncatedState::nv_polarized(&basis);
        s0.apply_pulse(&basis, &[0], Axis::Y, std::f64::consts::FRAC_PI_2);
        let controls = StepControls::default();
        let t_base = 6.0e-6;
        let alpha = 0.37;
        let n_steps = steps_for(&table, t_base, &controls);

        let mut scaled = s0.clone();
        evolve_scaled(&mut scaled, &table, alpha, t_base, n_steps, &controls).unwrap();
        let mut direct = s0.clone();
        evolve_with_steps(&mut direct, &table, alpha * t_base, n_steps, &controls).unwrap();
        for i in 0..basis.len() {
            assert!(
                (scaled.coefficient(i) - direct.coefficient(i)).abs() < 1e-10,
                "string {i}: {} vs {}",
                scaled.coefficient(i),
                direct.coefficient(i)
            );
        }
    }

    #[test]
    fn sweep_family_shares_step_count() {
        // A family {α_k·t₀} runs with one shared step count; each member
        // matches its individually-stepped counterpart.
        let (_, h) = one_nucleus_system();
        let basis = enumerate_basis(1, &TruncationRule::default()).unwrap();
        let table = precompute_action(&h, &basis).unwrap();
        let controls = StepControls::default();
        let t0 = 2.0e-6;
        let alphas: Vec<f64> = (1..=8).map(|k| k as f64 / 8.0).collect();
        let n_shared = steps_for(&table, t0, &controls); // α_max = 1
        let mut s0 = TruncatedState::nv_polarized(&basis);
        s0.apply_pulse(&basis, &[0], Axis::Y, std::f64::consts::FRAC_PI_2);
        let z0 = PauliProduct::single(0, Axis::Z);
        for &alpha in &alphas {
            let mut a = s0.clone();
            evolve_scaled(&mut a, &table, alpha, t0, n_shared, &controls).unwrap();
            let mut b = s0.clone();
            evolve(&mut b, &table, alpha * t0, &controls).unwrap();
            assert!(
                (a.expectation(&basis, &z0).unwrap() - b.expectation(&basis, &z0).unwrap())
                    .abs()
                    < 1e-8,
                "alpha {alpha}"
            );
        }
    }

    #[test]
    fn pulse_trivialities() {
        let basis = enumerate_basis(3, &TruncationRule::default()).unwrap();
        let bloch = [
            [0.0, 0.0, 1.0],
            [0.5, 0.2, 0.3],
            [-0.4, 0.1, 0.6],
            [0.0, 0.9, 0.1],
        ];
        let s0 = TruncatedState::product(&basis, &bloch).unwrap();

        // π about X on all nuclei: Z and Y negate, X unchanged.
        let mut s = s0.clone();
        s.apply_pulse(&basis, &[1, 2, 3], Axis::X, std::f64::consts::PI);
        for site in 1..=3 {
            for (axis, sign) in [(Axis::X, 1.0), (Axis::Y, -1.0), (Axis::Z, -1.0)] {
                let p = PauliProduct::single(site, axis);
                assert_abs_diff_eq!(
                    s.expectation(&basis, &p).unwrap(),
                    sign * s0.expectation(&basis, &p).unwrap(),
                    epsilon = 1e-12
                );
            }
        }

        // π/2 about Y on the center: c(Z₀) moves into c(X₀).
        let mut s = s0.clone();
        s.apply_pulse(&basis, &[0], Axis::Y, std::f64::consts::FRAC_PI_2);
        assert_abs_diff_eq!(
            s.expectation(&basis, &PauliProduct::single(0, Axis::X))
                .unwrap(),
            s0.expectation(&basis, &PauliProduct::single(0, Axis::Z))
                .unwrap(),
            epsilon = 1e-12
        );

        // A full 2π turn about an arbitrary equatorial axis is the identity.
        let mut s = s0.clone();
        s.apply_pulse_phase(&basis, &[0, 1, 2, 3], 0.73, 2.0 * std::f64::consts::PI);
        for i in 0..basis.len() {
            assert_abs_diff_eq!(s.coefficient(i), s0.coefficient(i), epsilon = 1e-12);
        }

        // Pulses preserve Σc² exactly (orthogonal conjugation).
        let mut s = s0.clone();
        s.apply_pulse_phase(&basis, &[0, 2], 1.1, 0.77);
        assert_abs_diff_eq!(s.purity_proxy(), s0.purity_proxy(), epsilon = 1e-12);
        assert_eq!(s.coefficient(0), 1.0);
    }

    #[test]
    fn pulses_match_dense_oracle() {
        // Arbitrary-phase pulse on the complete 2-site basis agrees with
        // dense conjugation observable by observable.
        let basis = enumerate_basis(1, &TruncationRule::default()).unwrap();
        let bloch = [[0.3, -0.2, 0.5], [0.1, 0.7, -0.4]];
        let mut trunc = TruncatedState::product(&basis, &bloch).unwrap();
        let mut dense = DenseState::product_density(&bloch).unwrap();
        let (phi, angle) = (0.9, 2.3);
        trunc.apply_pulse_phase(&basis, &[0], phi, angle);
        dense.apply_rotation_about_phase(0, phi, angle);
        trunc.apply_pulse(&basis, &[1], Axis::X, 1.234);
        dense.apply_rotation(1, Axis::X, 1.234);
        for (i, p) in basis.strings().iter().enumerate() {
            assert_abs_diff_eq!(
                trunc.coefficient(i),
                dense.expectation(p),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn complete_basis_matches_dense_for_arbitrary_sequence() {
        // NV + 1 nucleus: the truncated basis is the full Pauli basis, so a
        // pulse-and-evolve sequence must track the dense oracle to 1e−8.
        let (_, h) = one_nucleus_system();
        let basis = enumerate_basis(1, &TruncationRule::default()).unwrap();
        let table = precompute_action(&h, &basis).unwrap();
        assert_eq!(table.dropped_fraction(), 0.0);
        let controls = StepControls::high_accuracy();

        let bloch = [[0.0, 0.0, 1.0], [0.2, -0.1, 0.35]];
        let mut trunc = TruncatedState::product(&basis, &bloch).unwrap();
        let mut dense = DenseState::product_density(&bloch).unwrap();

        let script: [(f64, usize, Axis, f64); 3] = [
            (2.0e-6, 0, Axis::Y, std::f64::consts::FRAC_PI_2),
            (1.3e-6, 1, Axis::X, std::f64::consts::PI),
            (0.7e-6, 0, Axis::X, 1.1),
        ];
        for &(t, site, axis, angle) in &script {
            evolve(&mut trunc, &table, t, &controls).unwrap();
            evolve_dense(&mut dense, &h, t).unwrap();
            trunc.apply_pulse(&basis, &[site], axis, angle);
            dense.apply_rotation(site, axis, angle);
        }
        for (i, p) in basis.strings().iter().enumerate() {
            assert!(
                (trunc.coefficient(i) - dense.expectation(p)).abs() < 1e-8,
                "{p}: truncated {} vs dense {}",
                trunc.coefficient(i),
                dense.expectation(p)
            );
        }
        // Purity proxy conserved to 1e−6 on the complete basis.
        let s0 = TruncatedState::product(&basis, &bloch).unwrap();
        assert!((trunc.purity_proxy() - s0.purity_proxy()).abs() < 1e-6);
    }

    #[test]
    fn laser_reset_matches_dense() {
        let (_, h) = one_nucleus_system();
        let basis = enumerate_basis(1, &TruncationRule::default()).unwrap();
        let table = precompute_action(&h, &basis).unwrap();
        let controls = StepControls::high_accuracy();
        let bloch = [[0.0, 0.0, 1.0], [0.4, 0.1, 0.2]];
        let mut trunc = TruncatedState::product(&basis, &bloch).unwrap();
        let mut dense = DenseState::product_density(&bloch).unwrap();

        // Entangle, then reset the center.
        trunc.apply_pulse(&basis, &[0], Axis::Y, std::f64::consts::FRAC_PI_2);
        dense.apply_rotation(0, Axis::Y, std::f64::consts::FRAC_PI_2);
        evolve(&mut trunc, &table, 3.0e-6, &controls).unwrap();
        evolve_dense(&mut dense, &h, 3.0e-6).unwrap();
        trunc.apply_laser_reset(&basis);
        dense.laser_reset(0);

        for (i, p) in basis.strings().iter().enumerate() {
            assert!(
                (trunc.coefficient(i) - dense.expectation(p)).abs() < 1e-8,
                "{p}: truncated {} vs dense {}",
                trunc.coefficient(i),
                dense.expectation(p)
            );
        }
        assert_eq!(trunc.coefficient(0), 1.0);
        assert_abs_diff_eq!(
            trunc
                .expectation(&basis, &PauliProduct::single(0, Axis::Z))
                .unwrap(),
            1.0,
            epsilon = 1e-12
        );
        // Idempotent.
        let once = trunc.clone();
        trunc.apply_laser_reset(&basis);
        assert_eq!(trunc, once);
    }

    #[test]
    fn deterministic_replay() {
        let (_, h) = one_nucleus_system();
        let basis = enumerate_basis(1, &TruncationRule::default()).unwrap();
        let table = precompute_action(&h, &basis).unwrap();
        let run = || {
            let mut s = TruncatedState::nv_polarized(&basis);
            s.apply_pulse(&basis, &[0], Axis::Y, std::f64::consts::FRAC_PI_2);
            evolve(&mut s, &table, 5.0e-6, &StepControls::default()).unwrap();
            s
        };
        let a = run();
        let b = run();
        assert_eq!(a, b, "same schedule must replay bit-identically");
    }

    #[test]
    fn observable_queries() {
        let basis = enumerate_basis(3, &TruncationRule::default()).unwrap();
        let s = TruncatedState::nv_polarized(&basis);
        // Admitted observables.
        assert_eq!(
            s.expectation(&basis, &PauliProduct::single(0, Axis::Z))
                .unwrap(),
            1.0
        );
        assert_eq!(s.mean_z(&basis, 1..=3).unwrap(), 0.0);
        // Non-admitted observable → query error.
        let triple = PauliProduct::new([(1, Axis::Z), (2, Axis::Z), (3, Axis::Z)]).unwrap();
        assert!(s.expectation(&basis, &triple).is_err());
        // Validation catches corrupted states.
        let mut c = s.coefficients().to_vec();
        c[1] = 1.5;
        let bad = TruncatedState::from_coefficients(&basis, c).unwrap();
        assert!(matches!(bad.validate(&basis), Err(Error::StepSize(_))));
    }

    #[test]
    fn truncated_run_stays_physical_with_truncation_active() {
        // Three nuclei close together: truncation is active; single-site
        // coefficients must stay within the physical bound.
        let layout = build_chain(3, 0.3, 0.8).unwrap();
        let couplings = CouplingSet::from_layout(&layout).unwrap();
        let h =
            build_secular_hamiltonian(&layout, &couplings, &SecularOptions::default()).unwrap();
        let basis = enumerate_basis(3, &TruncationRule::default()).unwrap();
        let table = precompute_action(&h, &basis).unwrap();
        assert!(table.dropped_fraction() > 0.0);
        let mut s = TruncatedState::nv_polarized(&basis);
        s.apply_pulse(&basis, &[0], Axis::Y, std::f64::consts::FRAC_PI_2);
        evolve(&mut s, &table, 20.0e-6, &StepControls::default()).unwrap();
        s.validate(&basis).unwrap();
        assert_eq!(s.coefficient(0), 1.0);
    }
}
