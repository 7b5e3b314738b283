//! Dense complex linear algebra kernels: GEMM-backed multiplication, a
//! scaled-and-squared Taylor matrix exponential, and a cyclic Jacobi
//! eigensolver for Hermitian matrices.
//!
//! Matrices are `ndarray::Array2<Complex64>` in standard (row-major) layout.

use crate::error::{Error, Result};
use ndarray::Array2;
use num_complex::Complex64;

const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `alpha·A·B + beta·C → C` via the tuned complex GEMM kernel.
pub fn matmul_into(
    alpha: Complex64,
    a: &Array2<Complex64>,
    b: &Array2<Complex64>,
    beta: Complex64,
    c: &mut Array2<Complex64>,
) {
    let (m, k) = a.dim();
    let (k2, n) = b.dim();
    assert_eq!(k, k2, "inner dimensions must agree");
    assert_eq!(c.dim(), (m, n), "output dimensions must agree");
    let a_slice = a.as_slice().expect("matmul operands must be contiguous");
    let b_slice = b.as_slice().expect("matmul operands must be contiguous");
    let c_slice = c.as_slice_mut().expect("matmul output must be contiguous");
    // Complex64 is repr(C) { re: f64, im: f64 }, layout-identical to [f64; 2].
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [alpha.re, alpha.im],
            a_slice.as_ptr() as *const [f64; 2],
            k as isize,
            1,
            b_slice.as_ptr() as *const [f64; 2],
            n as isize,
            1,
            [beta.re, beta.im],
            c_slice.as_mut_ptr() as *mut [f64; 2],
            n as isize,
            1,
        );
    }
}

/// `A·B`.
pub fn matmul(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
    let mut out = Array2::zeros((a.nrows(), b.ncols()));
    matmul_into(C_ONE, a, b, C_ZERO, &mut out);
    out
}

/// `A·x → out` (plain loops; adequate for the vector sizes used here).
pub fn matvec(a: &Array2<Complex64>, x: &[Complex64], out: &mut [Complex64]) {
    let (m, n) = a.dim();
    assert_eq!(x.len(), n, "vector length must match columns");
    assert_eq!(out.len(), m, "output length must match rows");
    let a_slice = a.as_slice().expect("matvec operand must be contiguous");
    for (i, o) in out.iter_mut().enumerate() {
        let row = &a_slice[i * n..(i + 1) * n];
        let mut acc = C_ZERO;
        for (aij, xj) in row.iter().zip(x.iter()) {
            acc += aij * xj;
        }
        *o = acc;
    }
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
    let (am, an) = a.dim();
    let (bm, bn) = b.dim();
    let mut out = Array2::zeros((am * bm, an * bn));
    for i in 0..am {
        for j in 0..an {
            let aij = a[(i, j)];
            if aij == C_ZERO {
                continue;
            }
            for p in 0..bm {
                for q in 0..bn {
                    out[(i * bm + p, j * bn + q)] = aij * b[(p, q)];
                }
            }
        }
    }
    out
}

/// Conjugate transpose.
pub fn dagger(a: &Array2<Complex64>) -> Array2<Complex64> {
    let (m, n) = a.dim();
    let mut out = Array2::zeros((n, m));
    for i in 0..m {
        for j in 0..n {
            out[(j, i)] = a[(i, j)].conj();
        }
    }
    out
}

/// Identity matrix.
pub fn identity(n: usize) -> Array2<Complex64> {
    Array2::from_diag_elem(n, C_ONE)
}

/// Largest column sum of absolute values (the induced 1-norm).
pub fn one_norm(a: &Array2<Complex64>) -> f64 {
    let (m, n) = a.dim();
    let mut best = 0.0f64;
    for j in 0..n {
        let mut sum = 0.0;
        for i in 0..m {
            sum += a[(i, j)].norm();
        }
        best = best.max(sum);
    }
    best
}

/// Largest absolute entry of `A − B`.
pub fn max_abs_diff(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// ‖U†U − 𝟙‖_max: how far `u` is from unitary.
pub fn unitarity_error(u: &Array2<Complex64>) -> f64 {
    let gram = matmul(&dagger(u), u);
    max_abs_diff(&gram, &identity(u.nrows()))
}

/// Matrix exponential e^A by scaling-and-squaring with a Taylor polynomial.
///
/// The argument is scaled by 2^−s until its 1-norm is ≤ 0.5, expanded to
/// order 16 (remainder < 1e−19 at that radius), then squared s times. For
/// the anti-Hermitian arguments used in time evolution this keeps the
/// result unitary to well below 1e−9.
pub fn expm(a: &Array2<Complex64>) -> Array2<Complex64> {
    assert_eq!(a.nrows(), a.ncols(), "expm needs a square matrix");
    let n = a.nrows();
    let norm = one_norm(a);
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scale = Complex64::new(2f64.powi(-(s as i32)), 0.0);
    let b = a.mapv(|x| x * scale);

    // Horner evaluation of Σ_{k≤16} B^k / k!.
    const ORDER: usize = 16;
    let mut p = identity(n);
    let mut tmp = Array2::zeros((n, n));
    for k in (1..=ORDER).rev() {
        // p ← I + (B/k)·p
        let coeff = Complex64::new(1.0 / k as f64, 0.0);
        matmul_into(coeff, &b, &p, C_ZERO, &mut tmp);
        std::mem::swap(&mut p, &mut tmp);
        for i in 0..n {
            p[(i, i)] += C_ONE;
        }
    }
    for _ in 0..s {
        let sq = matmul(&p, &p);
        p = sq;
    }
    p
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order with the matching orthonormal
/// eigenvector columns: `A = V · diag(λ) · V†`. Quadratically convergent;
/// intended for the ≤ 1024-dimensional systems this crate works with.
pub fn eigh(a: &Array2<Complex64>) -> Result<(Vec<f64>, Array2<Complex64>)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::invalid("eigh needs a square matrix"));
    }
    let scale = one_norm(a);
    let herm_defect = max_abs_diff(a, &dagger(a));
    if herm_defect > 1e-10 * scale.max(1.0) {
        return Err(Error::invalid(format!(
            "eigh input is not Hermitian (defect {herm_defect:.3e})"
        )));
    }
    let mut m = a.clone();
    // Symmetrize to kill round-off asymmetry.
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
        m[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
    }
    let mut v = identity(n);
    let tol = 1e-14 * scale.max(f64::MIN_POSITIVE);
    const MAX_SWEEPS: usize = 60;
    for _sweep in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[(p, q)].norm());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let beta = apq.norm();
                if beta <= tol * 1e-2 {
                    continue;
                }
                let phase = apq / beta; // e^{iφ}
                let alpha = m[(p, p)].re;
                let gamma = m[(q, q)].re;
                let d = (alpha - gamma) / (2.0 * beta);
                let t = if d == 0.0 {
                    1.0
                } else {
                    d.signum() / (d.abs() + (d * d + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let s_phase = phase * s; // s·e^{iφ}
                // Column update: M ← M·U, V ← V·U with
                // U[p,p]=c, U[p,q]=−s·e^{iφ}, U[q,p]=s·e^{−iφ}, U[q,q]=c.
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = mkp * c + mkq * s_phase.conj();
                    m[(k, q)] = mkq * c - mkp * s_phase;
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c + vkq * s_phase.conj();
                    v[(k, q)] = vkq * c - vkp * s_phase;
                }
                // Row update: M ← U†·M.
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = mpk * c + mqk * s_phase;
                    m[(q, k)] = mqk * c - mpk * s_phase.conj();
                }
                m[(p, q)] = C_ZERO;
                m[(q, p)] = C_ZERO;
                m[(p, p)] = Complex64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = Complex64::new(m[(q, q)].re, 0.0);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let eigenvalues: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&i, &j| eigenvalues[i].total_cmp(&eigenvalues[j]));
    let sorted_vals: Vec<f64> = order.iter().map(|&i| eigenvalues[i]).collect();
    let mut sorted_vecs = Array2::zeros((n, n));
    for (new_col, &old_col) in order.iter().enumerate() {
        for r in 0..n {
            sorted_vecs[(r, new_col)] = v[(r, old_col)];
        }
    }
    Ok((sorted_vals, sorted_vecs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rng_stream(seed: u64) -> impl FnMut() -> f64 {
        let mut state = seed | 1;
        move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        }
    }

    fn random_hermitian(n: usize, seed: u64) -> Array2<Complex64> {
        let mut next = rng_stream(seed);
        let mut a = Array2::from_shape_fn((n, n), |_| Complex64::new(next(), next()));
        let ad = dagger(&a);
        a += &ad;
        a
    }

    #[test]
    fn matmul_against_naive() {
        let mut next = rng_stream(7);
        let a = Array2::from_shape_fn((5, 4), |_| Complex64::new(next(), next()));
        let b = Array2::from_shape_fn((4, 6), |_| Complex64::new(next(), next()));
        let fast = matmul(&a, &b);
        let mut slow = Array2::zeros((5, 6));
        for i in 0..5 {
            for j in 0..6 {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..4 {
                    acc += a[(i, k)] * b[(k, j)];
                }
                slow[(i, j)] = acc;
            }
        }
        assert!(max_abs_diff(&fast, &slow) < 1e-13);
    }

    #[test]
    fn expm_matches_single_qubit_rotation() {
        // exp(−iθ/2·σ_x) = [[cos θ/2, −i sin θ/2], [−i sin θ/2, cos θ/2]].
        let theta = 0.7371;
        let half = Complex64::new(0.0, -theta / 2.0);
        let mut a = Array2::zeros((2, 2));
        a[(0, 1)] = half;
        a[(1, 0)] = half;
        let u = expm(&a);
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        assert_relative_eq!(u[(0, 0)].re, c, max_relative = 1e-14);
        assert_relative_eq!(u[(0, 1)].im, -s, max_relative = 1e-14);
        assert!(unitarity_error(&u) < 1e-14);
    }

    #[test]
    fn expm_zero_is_identity() {
        let z: Array2<Complex64> = Array2::zeros((8, 8));
        assert!(max_abs_diff(&expm(&z), &identity(8)) < 1e-15);
    }

    #[test]
    fn expm_unitarity_for_large_argument() {
        // Anti-Hermitian argument with norm ~40 exercises many squarings.
        let h = random_hermitian(16, 99);
        let a = h.mapv(|x| x * Complex64::new(0.0, -2.5));
        let u = expm(&a);
        assert!(
            unitarity_error(&u) < 1e-9,
            "unitarity error {}",
            unitarity_error(&u)
        );
    }

    #[test]
    fn expm_additivity() {
        // e^{A(s+t)} = e^{As}·e^{At} for commuting (same-A) arguments.
        let h = random_hermitian(8, 3);
        let a1 = h.mapv(|x| x * Complex64::new(0.0, -0.4));
        let a2 = h.mapv(|x| x * Complex64::new(0.0, -1.1));
        let a12 = h.mapv(|x| x * Complex64::new(0.0, -1.5));
        let prod = matmul(&expm(&a1), &expm(&a2));
        assert!(max_abs_diff(&prod, &expm(&a12)) < 1e-12);
    }

    #[test]
    fn eigh_reconstructs_matrix() {
        let a = random_hermitian(24, 42);
        let (vals, vecs) = eigh(&a).unwrap();
        assert!(unitarity_error(&vecs) < 1e-11);
        // A·V = V·diag(λ)
        let av = matmul(&a, &vecs);
        let mut vl = vecs.clone();
        for (j, &lambda) in vals.iter().enumerate() {
            for i in 0..24 {
                vl[(i, j)] = vecs[(i, j)] * lambda;
            }
        }
        let defect = max_abs_diff(&av, &vl);
        assert!(
            defect < 1e-10 * one_norm(&a),
            "eigen residual {defect:.3e}"
        );
        let mut sorted = vals.clone();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(vals, sorted);
    }

    #[test]
    fn eigh_agrees_with_expm() {
        // exp(−iAt) = V·diag(e^{−iλt})·V†.
        let a = random_hermitian(12, 11);
        let t = 0.37;
        let (vals, vecs) = eigh(&a).unwrap();
        let mut phases = Array2::zeros((12, 12));
        for (j, &lambda) in vals.iter().enumerate() {
            phases[(j, j)] = Complex64::from_polar(1.0, -lambda * t);
        }
        let via_eig = matmul(&matmul(&vecs, &phases), &dagger(&vecs));
        let via_expm = expm(&a.mapv(|x| x * Complex64::new(0.0, -t)));
        assert!(max_abs_diff(&via_eig, &via_expm) < 1e-11);
    }

    #[test]
    fn eigh_rejects_non_hermitian() {
        let mut a: Array2<Complex64> = Array2::zeros((3, 3));
        a[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(eigh(&a).is_err());
    }
}
