//! Dense complex linear algebra kernel: Kronecker products, Hermitian
//! eigendecomposition, exponentials of skew-Hermitian generators, norms and
//! commutators.
//!
//! Everything here is self-contained and sized for desk-scale problems
//! (dimensions up to a few thousand, with the heavy eigensolves done on
//! excitation blocks of at most a few hundred). The eigensolver is a complex
//! Householder tridiagonalization followed by implicit QL with Wilkinson
//! shifts, in the tred2/tql2 lineage.

use num_complex::Complex64 as C64;
use thiserror::Error;

/// Centralized tolerance record. `structural` guards decompositions and
/// unitarity (scaled by dimension where noted), `arithmetic` guards exact
/// algebraic identities evaluated in floating point.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub structural: f64,
    pub arithmetic: f64,
    /// Kronecker products refuse to build matrices larger than this.
    pub max_kron_dim: usize,
    /// Iterations per eigenvalue before the QL sweep is declared stuck.
    pub eig_max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            structural: 1e-10,
            arithmetic: 1e-13,
            max_kron_dim: 8192,
            eig_max_iter: 50,
        }
    }
}

pub const TOL: Tolerances = Tolerances {
    structural: 1e-10,
    arithmetic: 1e-13,
    max_kron_dim: 8192,
    eig_max_iter: 50,
};

#[derive(Debug, Error)]
pub enum AlgebraError {
    #[error("dimension mismatch: ({0}x{1}) vs ({2}x{3})")]
    DimMismatch(usize, usize, usize, usize),
    #[error("matrix must be square, got {0}x{1}")]
    NotSquare(usize, usize),
    #[error("matrix is not Hermitian: ‖A - A†‖_F = {0:.3e} exceeds {1:.3e}")]
    NotHermitian(f64, f64),
    #[error("matrix is not skew-Hermitian: ‖K + K†‖_F = {0:.3e} exceeds {1:.3e}")]
    NotSkewHermitian(f64, f64),
    #[error("QL iteration failed to converge within {0} sweeps on eigenvalue {1}")]
    NoConvergence(usize, usize),
    #[error("Kronecker product dimension {0} exceeds the configured cap {1}")]
    DimOverflow(usize, usize),
    #[error("non-finite entry at ({0},{1})")]
    NonFinite(usize, usize),
}

/// Dense complex matrix, row-major. Immutable in spirit: every operation
/// returns a fresh matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    pub fn diag(entries: &[C64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &z) in entries.iter().enumerate() {
            m.data[i * n + i] = z;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn check_finite(&self) -> Result<(), AlgebraError> {
        for i in 0..self.rows {
            for j in 0..self.cols {
                let z = self.get(i, j);
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(AlgebraError::NonFinite(i, j));
                }
            }
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "add: shape mismatch");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "sub: shape mismatch");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, z: C64) -> Self {
        let data = self.data.iter().map(|a| a * z).collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }

    /// Matrix product. Panics on shape mismatch (a programming error, not a
    /// runtime condition).
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul: inner dimensions differ");
        let (n, k, m) = (self.rows, self.cols, other.cols);
        let mut out = vec![C64::new(0.0, 0.0); n * m];
        for i in 0..n {
            for p in 0..k {
                let a = self.data[i * k + p];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let row = &other.data[p * m..(p + 1) * m];
                let dst = &mut out[i * m..(i + 1) * m];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        ComplexMatrix { rows: n, cols: m, data: out }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.get(i, j).conj();
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }

    /// ‖A - A†‖_F.
    pub fn hermiticity_defect(&self) -> f64 {
        self.sub(&self.adjoint()).frobenius_norm()
    }

    /// ‖U†U - I‖_F.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.rows;
        self.adjoint().matmul(self).sub(&Self::identity(n)).frobenius_norm()
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "apply: length mismatch");
        let mut out = vec![C64::new(0.0, 0.0); self.rows];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            out[i] = row.iter().zip(v).map(|(a, x)| a * x).sum();
        }
        out
    }

    /// Copy of the principal submatrix selected by `idx` (rows and columns).
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), idx.len(), |i, j| self.get(idx[i], idx[j]))
    }
}

/// Kronecker product a ⊗ b with the row-major convention
/// `(a⊗b)[i_a*rb + i_b, j_a*cb + j_b] = a[i_a,j_a] * b[i_b,j_b]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, AlgebraError> {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    if rows.max(cols) > TOL.max_kron_dim {
        return Err(AlgebraError::DimOverflow(rows.max(cols), TOL.max_kron_dim));
    }
    let mut out = ComplexMatrix::zeros(rows, cols);
    for ia in 0..a.rows {
        for ja in 0..a.cols {
            let av = a.get(ia, ja);
            if av.re == 0.0 && av.im == 0.0 {
                continue;
            }
            for ib in 0..b.rows {
                for jb in 0..b.cols {
                    out.set(ia * b.rows + ib, ja * b.cols + jb, av * b.get(ib, jb));
                }
            }
        }
    }
    Ok(out)
}

/// ab - ba.
pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, AlgebraError> {
    if !a.is_square() {
        return Err(AlgebraError::NotSquare(a.rows, a.cols));
    }
    if (a.rows, a.cols) != (b.rows, b.cols) {
        return Err(AlgebraError::DimMismatch(a.rows, a.cols, b.rows, b.cols));
    }
    Ok(a.matmul(b).sub(&b.matmul(a)))
}

/// Eigendecomposition of a Hermitian matrix: eigenvalues ascending,
/// eigenvector columns orthonormal, A = V diag(λ) V†.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigen {
    /// Rebuild V diag(λ) V† (used by tests as the reconstruction oracle).
    pub fn reconstruct(&self) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let lam = ComplexMatrix::diag(
            &self.eigenvalues.iter().map(|&l| C64::new(l, 0.0)).collect::<Vec<_>>(),
        );
        v.matmul(&lam).matmul(&v.adjoint())
    }

    /// V diag(f(λ)) V† for a scalar function of the spectrum.
    pub fn map_spectrum(&self, mut f: impl FnMut(f64) -> C64) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let d = ComplexMatrix::diag(
            &self.eigenvalues.iter().map(|&l| f(l)).collect::<Vec<_>>(),
        );
        v.matmul(&d).matmul(&v.adjoint())
    }
}

/// Hermitian eigendecomposition by complex Householder reduction to real
/// tridiagonal form followed by implicit QL with Wilkinson shifts.
pub fn hermitian_eig(a: &ComplexMatrix) -> Result<HermitianEigen, AlgebraError> {
    if !a.is_square() {
        return Err(AlgebraError::NotSquare(a.rows, a.cols));
    }
    a.check_finite()?;
    let scale = a.frobenius_norm();
    let defect = a.hermiticity_defect();
    if defect > TOL.structural * scale.max(1e-300) && scale > 0.0 {
        return Err(AlgebraError::NotHermitian(defect, TOL.structural * scale));
    }
    let n = a.rows;
    if n == 0 {
        return Ok(HermitianEigen { eigenvalues: vec![], eigenvectors: ComplexMatrix::zeros(0, 0) });
    }

    // Working copy, symmetrized so rounding in the input cannot leak through.
    let mut m = ComplexMatrix::from_fn(n, n, |i, j| {
        (a.get(i, j) + a.get(j, i).conj()) * 0.5
    });
    let mut q = ComplexMatrix::identity(n);

    // Householder reduction. After step k the column k below the subdiagonal
    // is zero and the subdiagonal entry may still be complex.
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let mut v: Vec<C64> = (0..len).map(|r| m.get(k + 1 + r, k)).collect();
        let norm_x = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm_x == 0.0 {
            continue;
        }
        let alpha = v[0];
        let phase = if alpha.norm() > 0.0 { alpha / alpha.norm() } else { C64::new(1.0, 0.0) };
        v[0] += phase * norm_x;
        let vnorm_sqr: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm_sqr == 0.0 {
            continue;
        }
        let tau = 2.0 / vnorm_sqr;

        // p = tau * M22 * v over the trailing block
        let mut p = vec![C64::new(0.0, 0.0); len];
        for r in 0..len {
            let mut acc = C64::new(0.0, 0.0);
            for c in 0..len {
                acc += m.get(k + 1 + r, k + 1 + c) * v[c];
            }
            p[r] = acc * tau;
        }
        let vp: C64 = v.iter().zip(&p).map(|(vi, pi)| vi.conj() * pi).sum();
        let kappa = vp * (tau / 2.0);
        let w: Vec<C64> = p.iter().zip(&v).map(|(pi, vi)| pi - kappa * vi).collect();
        // M22 <- M22 - v w† - w v†
        for r in 0..len {
            for c in 0..len {
                let delta = v[r] * w[c].conj() + w[r] * v[c].conj();
                let cur = m.get(k + 1 + r, k + 1 + c);
                m.set(k + 1 + r, k + 1 + c, cur - delta);
            }
        }
        // Column k (and its mirror row): H x = -phase * norm_x * e1.
        m.set(k + 1, k, -phase * norm_x);
        m.set(k, k + 1, (-phase * norm_x).conj());
        for r in 1..len {
            m.set(k + 1 + r, k, C64::new(0.0, 0.0));
            m.set(k, k + 1 + r, C64::new(0.0, 0.0));
        }
        // Q <- Q H (right-multiply by the reflector)
        for i in 0..n {
            let mut s = C64::new(0.0, 0.0);
            for c in 0..len {
                s += q.get(i, k + 1 + c) * v[c];
            }
            s *= tau;
            for c in 0..len {
                let cur = q.get(i, k + 1 + c);
                q.set(i, k + 1 + c, cur - s * v[c].conj());
            }
        }
    }

    // Absorb the residual phases of the subdiagonal into a diagonal unitary
    // so the tridiagonal matrix becomes real symmetric.
    let mut d: Vec<f64> = (0..n).map(|i| m.get(i, i).re).collect();
    let mut e: Vec<f64> = vec![0.0; n];
    let mut dph = vec![C64::new(1.0, 0.0); n];
    for k in 0..n - 1 {
        let g = m.get(k + 1, k);
        let mag = g.norm();
        e[k] = mag;
        dph[k + 1] = if mag > 0.0 { g * dph[k] / mag } else { dph[k] };
    }
    for j in 0..n {
        for i in 0..n {
            let cur = q.get(i, j);
            q.set(i, j, cur * dph[j]);
        }
    }

    // Implicit QL with Wilkinson shifts (tql2 lineage), rotations accumulated
    // into the complex columns of Q.
    ql_implicit(&mut d, &mut e, &mut q)?;

    // Sort ascending with eigenvector columns.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| q.get(i, order[j]));
    Ok(HermitianEigen { eigenvalues, eigenvectors })
}

fn ql_implicit(d: &mut [f64], e: &mut [f64], q: &mut ComplexMatrix) -> Result<(), AlgebraError> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    let eps = f64::EPSILON;
    for l in 0..n {
        let mut iter = 0;
        loop {
            // first negligible off-diagonal at or after l
            let mut msub = l;
            while msub + 1 < n {
                let dd = d[msub].abs() + d[msub + 1].abs();
                if e[msub].abs() <= eps * dd {
                    break;
                }
                msub += 1;
            }
            if msub == l {
                break;
            }
            iter += 1;
            if iter > TOL.eig_max_iter {
                return Err(AlgebraError::NoConvergence(TOL.eig_max_iter, l));
            }
            // Wilkinson shift
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let r0 = g.hypot(1.0);
            g = d[msub] - d[l] + e[l] / (g + if g >= 0.0 { r0 } else { -r0 });
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0f64;
            let mut underflow = false;
            for i in (l..msub).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                let r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[msub] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                f = (d[i] - g) * s + 2.0 * c * b;
                p = s * f;
                d[i + 1] = g + p;
                g = c * f - b;
                // rotate eigenvector columns i, i+1
                for row in 0..q.rows() {
                    let zi1 = q.get(row, i + 1);
                    let zi = q.get(row, i);
                    q.set(row, i + 1, zi * s + zi1 * c);
                    q.set(row, i, zi * c - zi1 * s);
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[msub] = 0.0;
        }
    }
    Ok(())
}

/// exp(k) for skew-Hermitian k, computed through the Hermitian
/// eigendecomposition of i·k; the result is unitary by construction.
pub fn expm_skew(k: &ComplexMatrix) -> Result<ComplexMatrix, AlgebraError> {
    if !k.is_square() {
        return Err(AlgebraError::NotSquare(k.rows, k.cols));
    }
    let scale = k.frobenius_norm();
    let defect = k.add(&k.adjoint()).frobenius_norm();
    if scale > 0.0 && defect > TOL.structural * scale {
        return Err(AlgebraError::NotSkewHermitian(defect, TOL.structural * scale));
    }
    let h = k.scale(C64::new(0.0, 1.0)); // i k is Hermitian
    let eig = hermitian_eig(&h)?;
    // k = V (-i Λ) V†  ⇒  exp(k) = V diag(e^{-iλ}) V†
    Ok(eig.map_spectrum(|lam| C64::from_polar(1.0, -lam)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
        let a = random_matrix(rng, n);
        a.add(&a.adjoint()).scale(c(0.5, 0.0))
    }

    fn random_skew(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
        let a = random_matrix(rng, n);
        a.sub(&a.adjoint()).scale(c(0.5, 0.0))
    }

    #[test]
    fn kron_identity_case() {
        let i2 = ComplexMatrix::identity(2);
        let i3 = ComplexMatrix::identity(3);
        let k = kron(&i2, &i3).unwrap();
        assert_eq!(k, ComplexMatrix::identity(6));
    }

    #[test]
    fn kron_diagonal_product() {
        let a = ComplexMatrix::diag(&[c(1.0, 0.0), c(2.0, 0.0)]);
        let b = ComplexMatrix::diag(&[c(3.0, 0.0), c(4.0, 0.0)]);
        let k = kron(&a, &b).unwrap();
        let expect = ComplexMatrix::diag(&[c(3.0, 0.0), c(4.0, 0.0), c(6.0, 0.0), c(8.0, 0.0)]);
        assert_eq!(k, expect);
    }

    #[test]
    fn kron_mixed_product_identity() {
        // (a⊗I)(I⊗b) = a⊗b, checked entrywise against direct multiplication
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_matrix(&mut rng, 3);
        let b = random_matrix(&mut rng, 3);
        let i3 = ComplexMatrix::identity(3);
        let lhs = kron(&a, &i3).unwrap().matmul(&kron(&i3, &b).unwrap());
        let rhs = kron(&a, &b).unwrap();
        assert!(lhs.sub(&rhs).max_abs() <= 1e-13);
    }

    #[test]
    fn kron_associative() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..5 {
            let a = random_matrix(&mut rng, 2);
            let b = random_matrix(&mut rng, 3);
            let d = random_matrix(&mut rng, 2);
            let lhs = kron(&kron(&a, &b).unwrap(), &d).unwrap();
            let rhs = kron(&a, &kron(&b, &d).unwrap()).unwrap();
            assert!(lhs.sub(&rhs).max_abs() <= 1e-13);
        }
    }

    #[test]
    fn kron_dimension_cap() {
        let a = ComplexMatrix::identity(200);
        let b = ComplexMatrix::identity(200);
        assert!(matches!(kron(&a, &b), Err(AlgebraError::DimOverflow(..))));
    }

    #[test]
    fn eig_diagonal_permutation() {
        let a = ComplexMatrix::diag(&[c(3.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]);
        let eig = hermitian_eig(&a).unwrap();
        assert!((eig.eigenvalues[0] - 1.0).abs() < 1e-12);
        assert!((eig.eigenvalues[1] - 2.0).abs() < 1e-12);
        assert!((eig.eigenvalues[2] - 3.0).abs() < 1e-12);
        let recon = eig.reconstruct();
        assert!(recon.sub(&a).frobenius_norm() <= 1e-10 * a.frobenius_norm());
    }

    #[test]
    fn eig_pauli_x_spectrum() {
        let mut a = ComplexMatrix::zeros(2, 2);
        a.set(0, 1, c(1.0, 0.0));
        a.set(1, 0, c(1.0, 0.0));
        let eig = hermitian_eig(&a).unwrap();
        assert!((eig.eigenvalues[0] + 1.0).abs() < 1e-12);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eig_reconstruction_random_8x8() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let a = random_hermitian(&mut rng, 8);
        let eig = hermitian_eig(&a).unwrap();
        let recon = eig.reconstruct();
        assert!(recon.sub(&a).frobenius_norm() <= 1e-10 * a.frobenius_norm());
        let v = &eig.eigenvectors;
        assert!(v.unitarity_defect() <= 1e-10 * 8.0);
        for w in eig.eigenvalues.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let mut a = ComplexMatrix::zeros(2, 2);
        a.set(0, 1, c(1.0, 0.0));
        assert!(matches!(hermitian_eig(&a), Err(AlgebraError::NotHermitian(..))));
    }

    #[test]
    fn eig_degenerate_spectrum() {
        // repeated eigenvalues: projector structure must still reconstruct
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = expm_skew(&random_skew(&mut rng, 6)).unwrap();
        let d = ComplexMatrix::diag(&[
            c(2.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(-1.0, 0.0), c(-1.0, 0.0), c(5.0, 0.0),
        ]);
        let a = u.matmul(&d).matmul(&u.adjoint());
        let eig = hermitian_eig(&a).unwrap();
        assert!(eig.reconstruct().sub(&a).frobenius_norm() <= 1e-10 * a.frobenius_norm());
    }

    #[test]
    fn expm_zero_is_identity() {
        let k = ComplexMatrix::zeros(4, 4);
        let u = expm_skew(&k).unwrap();
        assert!(u.sub(&ComplexMatrix::identity(4)).max_abs() <= 1e-14);
    }

    #[test]
    fn expm_diagonal_phases() {
        let theta = 0.37;
        let k = ComplexMatrix::diag(&[c(0.0, theta), c(0.0, 2.0 * theta)]);
        let u = expm_skew(&k).unwrap();
        assert!((u.get(0, 0) - C64::from_polar(1.0, theta)).norm() <= 1e-13);
        assert!((u.get(1, 1) - C64::from_polar(1.0, 2.0 * theta)).norm() <= 1e-13);
    }

    #[test]
    fn expm_matches_taylor_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let k = random_skew(&mut rng, 6);
        let u = expm_skew(&k).unwrap();
        // order-20 Taylor sum of exp(k)
        let mut sum = ComplexMatrix::identity(6);
        let mut term = ComplexMatrix::identity(6);
        for p in 1..=20 {
            term = term.matmul(&k).scale(c(1.0 / p as f64, 0.0));
            sum = sum.add(&term);
        }
        assert!(u.sub(&sum).frobenius_norm() <= 1e-10);
        assert!(u.unitarity_defect() <= 1e-10 * 6.0);
    }

    #[test]
    fn expm_rejects_non_skew() {
        let a = ComplexMatrix::identity(3);
        assert!(matches!(expm_skew(&a), Err(AlgebraError::NotSkewHermitian(..))));
    }

    #[test]
    fn commutator_self_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_matrix(&mut rng, 4);
        assert!(commutator(&a, &a).unwrap().max_abs() <= 1e-14);
    }

    #[test]
    fn commutator_diagonals_commute() {
        let a = ComplexMatrix::diag(&[c(1.0, 0.0), c(2.0, 0.0)]);
        let b = ComplexMatrix::diag(&[c(3.0, 0.0), c(4.0, 0.0)]);
        assert!(commutator(&a, &b).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn commutator_dim_mismatch() {
        let a = ComplexMatrix::identity(2);
        let b = ComplexMatrix::identity(3);
        assert!(commutator(&a, &b).is_err());
    }

    #[test]
    fn eig_clustered_spectrum() {
        // eigenvalues separated by less than sqrt(eps) stress the QL shift
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let u = expm_skew(&random_skew(&mut rng, 12)).unwrap();
        let mut vals = vec![1.0; 12];
        vals[1] = 1.0 + 1e-13;
        vals[2] = 1.0 + 2e-13;
        vals[3] = 5.0;
        vals[4] = 5.0;
        vals[5] = -2.0;
        let d = ComplexMatrix::diag(&vals.iter().map(|&v| c(v, 0.0)).collect::<Vec<_>>());
        let a = u.matmul(&d).matmul(&u.adjoint());
        let eig = hermitian_eig(&a).unwrap();
        assert!(eig.reconstruct().sub(&a).frobenius_norm() <= 1e-10 * a.frobenius_norm());
        assert!(eig.eigenvectors.unitarity_defect() <= 1e-10 * 12.0);
    }

    #[test]
    fn eig_hundred_dim_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let a = random_hermitian(&mut rng, 100);
        let eig = hermitian_eig(&a).unwrap();
        assert!(eig.reconstruct().sub(&a).frobenius_norm() <= 1e-10 * a.frobenius_norm());
        assert!(eig.eigenvectors.unitarity_defect() <= 1e-10 * 100.0);
        for w in eig.eigenvalues.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn unitarity_across_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for n in [2usize, 5, 16, 40] {
            let k = random_skew(&mut rng, n).scale(c(2.0, 0.0));
            let u = expm_skew(&k).unwrap();
            assert!(
                u.unitarity_defect() <= 1e-10 * n as f64,
                "unitarity defect too large at n={n}"
            );
        }
    }
}
