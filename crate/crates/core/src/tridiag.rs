//! Symmetric tridiagonal eigensolver backed by LAPACK's divide-and-conquer
//! routine (dstevd). The discrete radial Laplacian is tridiagonal after
//! symmetrization, so this is the whole linear-algebra surface of the crate.

use crate::error::{Error, Result};

extern "C" {
    fn dstevd_(
        jobz: *const u8,
        n: *const i32,
        d: *mut f64,
        e: *mut f64,
        z: *mut f64,
        ldz: *const i32,
        work: *mut f64,
        lwork: *const i32,
        iwork: *mut i32,
        liwork: *const i32,
        info: *mut i32,
    );
}

/// Eigendecomposition of the symmetric tridiagonal matrix with diagonal `diag`
/// and off-diagonal `off` (len n-1). Returns ascending eigenvalues and the
/// eigenvector matrix in column-major layout (column k = eigenvector k).
pub fn eigh_tridiagonal(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    if off.len() + 1 != n || n == 0 {
        return Err(Error::NumericalFailure("tridiagonal shape mismatch".into()));
    }
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    let mut z = vec![0.0f64; n * n];
    let ni = n as i32;
    let lwork = (1 + 4 * n + n * n) as i32;
    let liwork = (3 + 5 * n) as i32;
    let mut work = vec![0.0f64; lwork as usize];
    let mut iwork = vec![0i32; liwork as usize];
    let mut info: i32 = 0;
    unsafe {
        dstevd_(
            b"V".as_ptr(),
            &ni,
            d.as_mut_ptr(),
            e.as_mut_ptr(),
            z.as_mut_ptr(),
            &ni,
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::NumericalFailure(format!("dstevd info = {info}")));
    }
    Ok((d, z))
}
