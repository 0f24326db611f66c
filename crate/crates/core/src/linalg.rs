//! Dense linear algebra on complex matrices, backed by system LAPACK.
//!
//! Matrices are nalgebra `DMatrix<Complex64>`, which is column-major and can be
//! handed to LAPACK without copying layout.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

fn lapack_status(routine: &'static str, info: i32) -> Result<()> {
    if info == 0 {
        Ok(())
    } else {
        Err(Error::Lapack { routine, info })
    }
}

fn heevd(m: &CMat, vectors: bool) -> Result<(Vec<f64>, CMat)> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "eigensolver needs a square matrix");
    if n == 0 {
        return Ok((Vec::new(), CMat::zeros(0, 0)));
    }
    let mut a = m.clone();
    let mut w = vec![0.0; n];
    let jobz = if vectors { b'V' } else { b'N' };
    let ni = n as i32;
    let mut info = 0;
    let mut work = vec![ZERO; 1];
    let mut rwork = vec![0.0; 1];
    let mut iwork = vec![0i32; 1];
    unsafe {
        lapack::zheevd(
            jobz,
            b'L',
            ni,
            a.as_mut_slice(),
            ni,
            &mut w,
            &mut work,
            -1,
            &mut rwork,
            -1,
            &mut iwork,
            -1,
            &mut info,
        );
    }
    lapack_status("zheevd", info)?;
    let lwork = work[0].re as i32;
    let lrwork = rwork[0] as i32;
    let liwork = iwork[0];
    let mut work = vec![ZERO; lwork.max(1) as usize];
    let mut rwork = vec![0.0; lrwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        lapack::zheevd(
            jobz,
            b'L',
            ni,
            a.as_mut_slice(),
            ni,
            &mut w,
            &mut work,
            lwork,
            &mut rwork,
            lrwork,
            &mut iwork,
            liwork,
            &mut info,
        );
    }
    lapack_status("zheevd", info)?;
    Ok((w, a))
}

/// Ascending eigenvalues of a Hermitian matrix (lower triangle is read).
pub fn eigvalsh(m: &CMat) -> Result<Vec<f64>> {
    heevd(m, false).map(|(w, _)| w)
}

/// Ascending eigenvalues and orthonormal eigenvectors (as columns).
pub fn eigh(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    heevd(m, true)
}

/// Full singular value decomposition `m = u · diag(s) · vh`, `s` descending.
pub fn svd(m: &CMat) -> Result<(CMat, Vec<f64>, CMat)> {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Ok((CMat::identity(rows, rows), Vec::new(), CMat::identity(cols, cols)));
    }
    let mut a = m.clone();
    let mut s = vec![0.0; k];
    let mut u = CMat::zeros(rows, rows);
    let mut vh = CMat::zeros(cols, cols);
    let mut rwork = vec![0.0; 5 * k];
    let mut info = 0;
    let mut work = vec![ZERO; 1];
    let (r, c) = (rows as i32, cols as i32);
    unsafe {
        lapack::zgesvd(
            b'A',
            b'A',
            r,
            c,
            a.as_mut_slice(),
            r,
            &mut s,
            u.as_mut_slice(),
            r,
            vh.as_mut_slice(),
            c,
            &mut work,
            -1,
            &mut rwork,
            &mut info,
        );
    }
    lapack_status("zgesvd", info)?;
    let lwork = work[0].re as i32;
    let mut work = vec![ZERO; lwork.max(1) as usize];
    unsafe {
        lapack::zgesvd(
            b'A',
            b'A',
            r,
            c,
            a.as_mut_slice(),
            r,
            &mut s,
            u.as_mut_slice(),
            r,
            vh.as_mut_slice(),
            c,
            &mut work,
            lwork,
            &mut rwork,
            &mut info,
        );
    }
    lapack_status("zgesvd", info)?;
    Ok((u, s, vh))
}

/// Eigenvalues of a real symmetric tridiagonal matrix lying in `[lo, hi]`,
/// ascending. `off` holds the `n - 1` off-diagonal entries.
pub fn tridiagonal_eigvals_in(diag: &[f64], off: &[f64], lo: f64, hi: f64) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    assert_eq!(off.len() + 1, n);
    let wanted = sturm_count(diag, off, hi) - sturm_count(diag, off, lo);
    if wanted * 8 < n {
        return tridiagonal_bisect(diag, off, lo, hi);
    }
    // all eigenvalues by root-free QR beat bisection once many fall in range
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    let mut info = 0;
    unsafe {
        lapack::dsterf(n as i32, &mut d, &mut e, &mut info);
    }
    lapack_status("dsterf", info)?;
    d.retain(|l| *l >= lo && *l <= hi);
    Ok(d)
}

/// Number of eigenvalues below `x`.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0f64;
    for i in 0..diag.len() {
        let e2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        q = diag[i] - x - e2 / q;
        if q == 0.0 {
            q = -f64::EPSILON * (diag[i].abs() + x.abs() + 1.0);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn tridiagonal_bisect(diag: &[f64], off: &[f64], lo: f64, hi: f64) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    let mut m = 0;
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; 1];
    let mut work = vec![0.0; 5 * n];
    let mut iwork = vec![0i32; 5 * n];
    let mut ifail = vec![0i32; n];
    let mut info = 0;
    unsafe {
        lapack::dstevx(
            b'N', b'V', n as i32, &mut d, &mut e, lo, hi, 0, 0, 0.0, &mut m, &mut w, &mut z, 1, &mut work, &mut iwork,
            &mut ifail, &mut info,
        );
    }
    lapack_status("dstevx", info)?;
    w.truncate(m as usize);
    Ok(w)
}

/// `op(a) · b` through BLAS, with `op` the conjugate transpose when `adjoint_a`.
pub fn gemm(a: &CMat, adjoint_a: bool, b: &CMat) -> CMat {
    let (m, k) = if adjoint_a { (a.ncols(), a.nrows()) } else { (a.nrows(), a.ncols()) };
    assert_eq!(k, b.nrows(), "inner dimensions must agree");
    let n = b.ncols();
    let mut c = CMat::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    let trans = if adjoint_a { b'C' } else { b'N' };
    unsafe {
        blas::zgemm(
            trans,
            b'N',
            m as i32,
            n as i32,
            k as i32,
            ONE,
            a.as_slice(),
            a.nrows().max(1) as i32,
            b.as_slice(),
            b.nrows().max(1) as i32,
            ZERO,
            c.as_mut_slice(),
            m as i32,
        );
    }
    c
}

/// `q† · g · q`.
pub fn congruence(q: &CMat, g: &CMat) -> CMat {
    gemm(q, true, &gemm(g, false, q))
}

/// `‖A − A†‖_F / ‖A‖_F`, zero for the zero matrix.
pub fn hermitian_residual(m: &CMat) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.adjoint()).norm() / norm
}

/// Replaces `m` by its Hermitian part.
pub fn symmetrize(m: &mut CMat) {
    let h = (&*m + m.adjoint()) * C64::new(0.5, 0.0);
    *m = h;
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Orthonormal basis (columns) of the orthogonal complement of the column
/// span of `c`, whose columns must be linearly independent.
pub fn orthogonal_complement(c: &CMat) -> Result<CMat> {
    let n = c.nrows();
    let r = c.ncols();
    let (u, _, _) = svd(c)?;
    Ok(u.columns(r, n - r).into_owned())
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_and_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped onto `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (x.iter().map(|t| mid + half * t).collect(), w.iter().map(|v| v * half).collect())
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Wraps an angle to `(-π, π]`.
pub fn wrap_phase(phi: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut p = phi.rem_euclid(two_pi);
    if p > std::f64::consts::PI {
        p -= two_pi;
    }
    p
}
