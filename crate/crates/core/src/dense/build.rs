//! Computational-basis conventions and Pauli-operator actions for the dense
//! evolver.
//!
//! Basis ordering: site 0 occupies the most significant bit, so for an
//! n-site system basis index `b` assigns site `s` the bit `(n−1−s)`. Bit
//! value 0 means spin up (σ_z = +1); for the NV qubit, bit 0 is the m_s = 0
//! level.

use crate::hamiltonian::HamiltonianTerms;
use crate::pauli::{Axis, PauliProduct};
use ndarray::Array2;
use num_complex::Complex64;

/// Bit mask selecting `site` within an `n_sites` system.
#[inline]
pub fn site_mask(n_sites: usize, site: usize) -> usize {
    debug_assert!(site < n_sites);
    1usize << (n_sites - 1 - site)
}

/// Compiled form of a Pauli product: basis index `col` maps to
/// `col ^ flip_mask` with phase `i^{y_count} · (−1)^{popcount(col & sign_mask)}`.
#[derive(Debug, Clone, Copy)]
pub struct PauliAction {
    pub flip_mask: usize,
    sign_mask: usize,
    y_count: u32,
}

impl PauliAction {
    pub fn compile(p: &PauliProduct, n_sites: usize) -> Self {
        let mut flip_mask = 0usize;
        let mut sign_mask = 0usize;
        let mut y_count = 0u32;
        for &(site, axis) in p.factors() {
            let mask = site_mask(n_sites, site as usize);
            match axis {
                Axis::X => flip_mask |= mask,
                Axis::Y => {
                    flip_mask |= mask;
                    sign_mask |= mask;
                    y_count += 1;
                }
                Axis::Z => sign_mask |= mask,
            }
        }
        PauliAction {
            flip_mask,
            sign_mask,
            y_count,
        }
    }

    /// Phase picked up on basis column `col`: P|col⟩ = phase·|col ^ flip_mask⟩.
    #[inline]
    pub fn phase(&self, col: usize) -> Complex64 {
        let mut re_im = match self.y_count % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        if (col & self.sign_mask).count_ones() % 2 == 1 {
            re_im = -re_im;
        }
        re_im
    }
}

/// Dense matrix of one Pauli product.
pub fn pauli_matrix(p: &PauliProduct, n_sites: usize) -> Array2<Complex64> {
    let dim = 1usize << n_sites;
    let action = PauliAction::compile(p, n_sites);
    let mut m = Array2::zeros((dim, dim));
    for col in 0..dim {
        m[(col ^ action.flip_mask, col)] = action.phase(col);
    }
    m
}

/// Dense matrix of a Hamiltonian term list (rad/s).
pub fn hamiltonian_matrix(h: &HamiltonianTerms) -> Array2<Complex64> {
    let dim = 1usize << h.n_sites();
    let mut m = Array2::zeros((dim, dim));
    for (p, c) in h.terms() {
        let action = PauliAction::compile(p, h.n_sites());
        for col in 0..dim {
            m[(col ^ action.flip_mask, col)] += action.phase(col) * *c;
        }
    }
    m
}

/// 2×2 rotation exp(−i·angle/2·σ_axis).
pub fn rotation_2x2(axis: Axis, angle: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = ((angle / 2.0).sin(), (angle / 2.0).cos());
    let zero = Complex64::new(0.0, 0.0);
    match axis {
        Axis::X => [
            [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
            [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
        ],
        Axis::Y => [
            [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
            [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
        ],
        Axis::Z => [
            [Complex64::new(c, -s), zero],
            [zero, Complex64::new(c, s)],
        ],
    }
}

/// 2×2 rotation exp(−i·angle/2·(cos φ·σ_x + sin φ·σ_y)) about an equatorial
/// axis at azimuth `phi`.
pub fn rotation_about_phase_2x2(phi: f64, angle: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = ((angle / 2.0).sin(), (angle / 2.0).cos());
    [
        [
            Complex64::new(c, 0.0),
            Complex64::new(0.0, -s) * Complex64::from_polar(1.0, -phi),
        ],
        [
            Complex64::new(0.0, -s) * Complex64::from_polar(1.0, phi),
            Complex64::new(c, 0.0),
        ],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::linalg::{matmul, max_abs_diff, unitarity_error};
    use crate::pauli::PauliProduct;

    #[test]
    fn single_site_matrices() {
        // On one site the three compiled actions reproduce the textbook
        // matrices.
        let x = pauli_matrix(&PauliProduct::single(0, Axis::X), 1);
        let y = pauli_matrix(&PauliProduct::single(0, Axis::Y), 1);
        let z = pauli_matrix(&PauliProduct::single(0, Axis::Z), 1);
        assert_eq!(x[(0, 1)], Complex64::new(1.0, 0.0));
        assert_eq!(x[(1, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(y[(0, 1)], Complex64::new(0.0, -1.0));
        assert_eq!(y[(1, 0)], Complex64::new(0.0, 1.0));
        assert_eq!(z[(0, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(z[(1, 1)], Complex64::new(-1.0, 0.0));
        // σ_x σ_y = i σ_z as matrices.
        let xy = matmul(&x, &y);
        let mut iz = z.clone();
        iz.mapv_inplace(|v| v * Complex64::new(0.0, 1.0));
        assert!(max_abs_diff(&xy, &iz) < 1e-15);
    }

    #[test]
    fn site_zero_is_most_significant() {
        // Z on site 0 of a 2-site system: diag(+1, +1, −1, −1).
        let z0 = pauli_matrix(&PauliProduct::single(0, Axis::Z), 2);
        assert_eq!(z0[(0, 0)].re, 1.0);
        assert_eq!(z0[(1, 1)].re, 1.0);
        assert_eq!(z0[(2, 2)].re, -1.0);
        assert_eq!(z0[(3, 3)].re, -1.0);
        let z1 = pauli_matrix(&PauliProduct::single(1, Axis::Z), 2);
        assert_eq!(z1[(1, 1)].re, -1.0);
        assert_eq!(z1[(2, 2)].re, 1.0);
    }

    #[test]
    fn product_matrix_matches_factor_product() {
        let p = PauliProduct::new([(0, Axis::Y), (2, Axis::X)]).unwrap();
        let full = pauli_matrix(&p, 3);
        let y0 = pauli_matrix(&PauliProduct::single(0, Axis::Y), 3);
        let x2 = pauli_matrix(&PauliProduct::single(2, Axis::X), 3);
        assert!(max_abs_diff(&full, &matmul(&y0, &x2)) < 1e-15);
    }

    #[test]
    fn rotations_are_unitary_and_special_cases() {
        for axis in Axis::ALL {
            let r = rotation_2x2(axis, 0.0);
            assert_eq!(r[0][0], Complex64::new(1.0, 0.0));
            assert_eq!(r[1][1], Complex64::new(1.0, 0.0));
        }
        // A π rotation about X is −i·σ_x.
        let r = rotation_2x2(Axis::X, std::f64::consts::PI);
        assert!((r[0][1] - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        assert!(r[0][0].norm() < 1e-15);
        // Phase-axis rotation at φ = 0 is the X rotation; at φ = π/2 the Y.
        let rx = rotation_about_phase_2x2(0.0, 1.234);
        let rx_ref = rotation_2x2(Axis::X, 1.234);
        let ry = rotation_about_phase_2x2(std::f64::consts::FRAC_PI_2, 1.234);
        let ry_ref = rotation_2x2(Axis::Y, 1.234);
        for i in 0..2 {
            for j in 0..2 {
                assert!((rx[i][j] - rx_ref[i][j]).norm() < 1e-15);
                assert!((ry[i][j] - ry_ref[i][j]).norm() < 1e-15);
            }
        }
        // Embedded as a full matrix it stays unitary.
        let mut m = Array2::zeros((2, 2));
        let r = rotation_about_phase_2x2(0.7, 2.1);
        for i in 0..2 {
            for j in 0..2 {
                m[(i, j)] = r[i][j];
            }
        }
        assert!(unitarity_error(&m) < 1e-15);
    }
}
