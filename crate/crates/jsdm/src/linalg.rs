//! Dense complex linear-algebra helpers shared by every module.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{JsdmError, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Eigenpairs of a Hermitian matrix sorted by descending eigenvalue.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

/// (A + A^H) / 2.
pub fn hermitize(a: &CMat) -> CMat {
    let mut h = a + a.adjoint();
    h.scale_mut(0.5);
    h
}

/// ‖A − A^H‖_F / ‖A‖_F (0 for the zero matrix).
pub fn hermitian_defect(a: &CMat) -> f64 {
    let n = a.norm();
    if n == 0.0 {
        return 0.0;
    }
    (a - a.adjoint()).norm() / n
}

/// Rejects matrices whose relative Hermitian defect exceeds `tol`.
pub fn check_hermitian(a: &CMat, tol: f64) -> Result<()> {
    if !a.is_square() {
        return Err(JsdmError::invalid(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let d = hermitian_defect(a);
    if d > tol {
        return Err(JsdmError::NotHermitian(d));
    }
    Ok(())
}

/// Multiplies each column by a unit phase so that its largest-magnitude
/// entry is real and positive. Ties go to the lowest row index.
pub fn fix_phases(v: &mut CMat) {
    for mut col in v.column_iter_mut() {
        let mut best = 0usize;
        let mut best_abs = -1.0;
        for (i, z) in col.iter().enumerate() {
            let a = z.norm();
            if a > best_abs * (1.0 + 1e-12) {
                best_abs = a;
                best = i;
            }
        }
        if best_abs > 0.0 {
            let ph = col[best].conj() / best_abs;
            for z in col.iter_mut() {
                *z *= ph;
            }
        }
    }
}

/// Eigendecomposition of a Hermitian matrix, descending order, with the
/// deterministic phase convention of [`fix_phases`].
pub fn herm_eig(a: &CMat) -> HermEig {
    let n = a.nrows();
    if n == 0 {
        return HermEig { values: vec![], vectors: CMat::zeros(0, 0) };
    }
    let eig = SymmetricEigen::new(hermitize(a));
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps the solver order for exactly equal eigenvalues.
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    fix_phases(&mut vectors);
    HermEig { values, vectors }
}

/// Eigenvalues only, descending.
pub fn herm_eigvals(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 {
        return vec![];
    }
    let mut v: Vec<f64> = SymmetricEigen::new(hermitize(a)).eigenvalues.iter().copied().collect();
    v.sort_by(|x, y| y.partial_cmp(x).unwrap());
    v
}

/// Re tr(A).
pub fn re_trace(a: &CMat) -> f64 {
    a.diagonal().iter().map(|z| z.re).sum()
}

/// Re tr(A B) without forming the product.
pub fn trace_prod(a: &CMat, b: &CMat) -> f64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut s = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let x = a[(i, j)];
            let y = b[(j, i)];
            s += x.re * y.re - x.im * y.im;
        }
    }
    s
}

/// Inverse of a Hermitian positive definite matrix (Cholesky, LU fallback).
pub fn hpd_inverse(a: &CMat) -> Result<CMat> {
    let h = hermitize(a);
    if let Some(ch) = h.clone().cholesky() {
        return Ok(hermitize(&ch.inverse()));
    }
    h.try_inverse()
        .map(|x| hermitize(&x))
        .ok_or_else(|| JsdmError::Singular("Hermitian matrix is not invertible".into()))
}

/// General square inverse.
pub fn inverse(a: &CMat) -> Result<CMat> {
    a.clone()
        .try_inverse()
        .ok_or_else(|| JsdmError::Singular(format!("{}x{} matrix is not invertible", a.nrows(), a.ncols())))
}

/// log det of a Hermitian positive definite matrix (natural log).
pub fn log_det_hpd(a: &CMat) -> Result<f64> {
    let ch = hermitize(a)
        .cholesky()
        .ok_or_else(|| JsdmError::Singular("matrix is not positive definite".into()))?;
    Ok(2.0 * ch.l_dirty().diagonal().iter().map(|z| z.re.ln()).sum::<f64>())
}

/// ‖B^H B − I‖_F.
pub fn orthonormality_defect(b: &CMat) -> f64 {
    let g = b.adjoint() * b;
    (g - CMat::identity(b.ncols(), b.ncols())).norm()
}

/// Column `m` of the length-`n` unitary Fourier basis with eigen-association
/// matching circulant matrices: entries exp(+j 2π ℓ m / n)/√n, so a circulant
/// matrix with first column c maps it to DFT(c)[m] times itself.
pub fn fourier_column(n: usize, m: usize) -> CVec {
    let s = 1.0 / (n as f64).sqrt();
    CVec::from_fn(n, |l, _| {
        let ph = 2.0 * std::f64::consts::PI * ((l * m) % n) as f64 / n as f64;
        C64::from_polar(s, ph)
    })
}

/// Unitary n×n Fourier matrix built from [`fourier_column`].
pub fn fourier_matrix(n: usize) -> CMat {
    fourier_columns(n, &(0..n).collect::<Vec<_>>())
}

/// Selected Fourier columns.
pub fn fourier_columns(n: usize, idx: &[usize]) -> CMat {
    let mut f = CMat::zeros(n, idx.len());
    for (k, &m) in idx.iter().enumerate() {
        f.set_column(k, &fourier_column(n, m));
    }
    f
}

/// Kronecker product.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// max_{i,j} |A_ij|.
pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Real diagonal matrix as complex.
pub fn diag_real(d: &[f64]) -> CMat {
    CMat::from_diagonal(&CVec::from_iterator(d.len(), d.iter().map(|&x| C64::new(x, 0.0))))
}

/// U diag(d) U^H.
pub fn reconstruct(u: &CMat, d: &[f64]) -> CMat {
    let mut ud = u.clone();
    for (k, mut col) in ud.column_iter_mut().enumerate() {
        col.scale_mut(d[k]);
    }
    hermitize(&(ud * u.adjoint()))
}

/// Orthonormal basis of the orthogonal complement of span(X). The span is
/// delimited by the singular values above `rel_tol`·σ_max.
pub fn orthogonal_complement(x: &CMat, rel_tol: f64) -> CMat {
    let m = x.nrows();
    if x.ncols() == 0 {
        return CMat::identity(m, m);
    }
    let svd = x.clone().svd(true, false);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| smax > 0.0 && svd.singular_values[i] > rel_tol * smax)
        .collect();
    let mut q = CMat::zeros(m, keep.len());
    for (k, &i) in keep.iter().enumerate() {
        q.set_column(k, &u.column(i));
    }
    // The projector onto the complement has eigenvalues that are exactly 0 or 1
    // up to rounding, so its unit-eigenvalue eigenvectors form a stable basis.
    let proj = CMat::identity(m, m) - &q * q.adjoint();
    let eig = herm_eig(&proj);
    let dim = m - keep.len();
    eig.vectors.columns(0, dim).into_owned()
}

/// Standard circularly-symmetric complex Gaussian matrix CN(0, 1) entries.
pub fn complex_gaussian<R: rand::Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(rand_distr::StandardNormal);
        let im: f64 = rng.sample(rand_distr::StandardNormal);
        C64::new(s * re, s * im)
    })
}

/// Horizontal concatenation of column blocks.
pub fn hstack(blocks: &[CMat]) -> CMat {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut off = 0;
    for b in blocks {
        out.view_mut((0, off), (rows, b.ncols())).copy_from(b);
        off += b.ncols();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eig_sorted_and_reconstructs() {
        let a = CMat::from_fn(5, 5, |i, j| C64::new((i + j) as f64, i as f64 - j as f64));
        let e = herm_eig(&a);
        for w in e.values.windows(2) {
            assert!(w[0] >= w[1]);
        }
        let r = reconstruct(&e.vectors, &e.values);
        assert!((r - hermitize(&a)).norm() < 1e-10);
    }

    #[test]
    fn phase_convention_positive_real() {
        let a = CMat::from_fn(4, 4, |i, j| C64::new(1.0 / (1 + i + j) as f64, 0.3 * (i as f64 - j as f64)));
        let e = herm_eig(&a);
        for col in e.vectors.column_iter() {
            let big = col.iter().max_by(|x, y| x.norm().partial_cmp(&y.norm()).unwrap()).unwrap();
            assert!(big.im.abs() < 1e-14 && big.re > 0.0);
        }
    }

    #[test]
    fn fourier_unitary() {
        let f = fourier_matrix(7);
        assert!(orthonormality_defect(&f) < 1e-12);
    }

    #[test]
    fn trace_prod_matches_product() {
        let a = CMat::from_fn(3, 4, |i, j| C64::new(i as f64, j as f64));
        let b = CMat::from_fn(4, 3, |i, j| C64::new(j as f64 - 1.0, i as f64 * 0.5));
        assert!((trace_prod(&a, &b) - re_trace(&(&a * &b))).abs() < 1e-12);
    }

    #[test]
    fn complement_is_orthogonal() {
        let x = CMat::from_fn(6, 2, |i, j| C64::new((i * j) as f64 + 1.0, i as f64));
        let c = orthogonal_complement(&x, 1e-10);
        assert_eq!(c.ncols(), 4);
        assert!((x.adjoint() * &c).norm() < 1e-10);
        assert!(orthonormality_defect(&c) < 1e-10);
    }

    #[test]
    fn log_det_of_diagonal() {
        let d = diag_real(&[1.0, 2.0, 4.0]);
        assert!((log_det_hpd(&d).unwrap() - 8f64.ln()).abs() < 1e-12);
    }
}
