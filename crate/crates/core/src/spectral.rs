//! Discrete functional calculus for the radial Laplacian.
//!
//! The operator -Δ_rad = -(f'' + (d-1)/r f') is discretized in flux form on the
//! grid cells, which makes it self-adjoint with respect to the grid quadrature
//! weights. Diagonalizing once per grid gives the propagator multipliers,
//! fractional derivatives D^s, Littlewood-Paley blocks and Sobolev/Besov norms,
//! all acting through the frequency variable sqrt(λ_k).

use crate::error::{Error, Result};
use crate::field::RadialField;
use crate::grid::RadialGrid;
use crate::tridiag::eigh_tridiagonal;
use rayon::prelude::*;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

/// Floor for eigenvalues entering negative powers.
const LAMBDA_FLOOR: f64 = 1e-12;

/// Eigenpairs of the discrete radial Laplacian with a Dirichlet wall at R_max
/// and the natural regularity condition (zero flux) at the origin.
///
/// Degrees of freedom are the nodes 0..N-2; the wall node carries the value 0.
/// Eigenvectors are orthonormal in the weighted inner product of the grid.
pub struct SpectralBasis {
    pub grid: Arc<RadialGrid>,
    /// Ascending positive eigenvalues λ_k.
    pub eigenvalues: Vec<f64>,
    /// sqrt(λ_k), the discrete frequency variable.
    pub freq: Vec<f64>,
    /// Row k = eigenvector e_k sampled on the DOF nodes (length m).
    rows: Vec<f64>,
    /// DOF count m = N-1.
    pub m: usize,
}

impl SpectralBasis {
    /// Solve the symmetrized tridiagonal eigenproblem for `grid`.
    pub fn build(grid: Arc<RadialGrid>) -> Result<Self> {
        if grid.n < 64 {
            return Err(Error::InvalidParams(format!(
                "spectral basis needs N >= 64 nodes, got {}",
                grid.n
            )));
        }
        let m = grid.n - 1;
        let h = grid.h;
        let d = grid.d as i32;
        // Face conductances a_{i+1/2} = r_{i+1/2}^{d-1}; the origin face vanishes.
        let face = |i: usize| -> f64 { (grid.r[i] + 0.5 * h).powi(d - 1) };
        let w = &grid.weights;
        let mut diag = Vec::with_capacity(m);
        let mut off = Vec::with_capacity(m - 1);
        for i in 0..m {
            let a_left = if i == 0 { 0.0 } else { face(i - 1) };
            let a_right = face(i);
            diag.push((a_left + a_right) / (h * w[i]));
            if i + 1 < m {
                off.push(-face(i) / (h * (w[i] * w[i + 1]).sqrt()));
            }
        }
        let (eigenvalues, z) = eigh_tridiagonal(&diag, &off)?;
        if eigenvalues[0] <= 0.0 {
            return Err(Error::NumericalFailure(format!(
                "nonpositive eigenvalue {} under Dirichlet wall",
                eigenvalues[0]
            )));
        }
        // Unsymmetrize: e_k[i] = v_k[i] / sqrt(w_i), stored row-major.
        let inv_sqrt_w: Vec<f64> = (0..m).map(|i| 1.0 / w[i].sqrt()).collect();
        let mut rows = vec![0.0f64; m * m];
        rows.par_chunks_mut(m).enumerate().for_each(|(k, row)| {
            for i in 0..m {
                row[i] = z[k * m + i] * inv_sqrt_w[i];
            }
        });
        let freq = eigenvalues.iter().map(|l| l.sqrt()).collect();
        Ok(SpectralBasis { grid, eigenvalues, freq, rows, m })
    }

    /// Build with a binary eigenpair cache under `dir` (see README for layout).
    pub fn build_cached(grid: Arc<RadialGrid>, dir: &Path) -> Result<Self> {
        let name = format!(
            "basis-d{}-N{}-R{:.6}-dirichlet.bin",
            grid.d, grid.n, grid.r_max
        );
        let path = dir.join(name);
        if path.exists() {
            if let Ok(basis) = Self::load_cache(&path, grid.clone()) {
                return Ok(basis);
            }
        }
        let basis = Self::build(grid)?;
        std::fs::create_dir_all(dir)?;
        basis.save_cache(&path)?;
        Ok(basis)
    }

    fn save_cache(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(b"RWLBAS01")?;
        f.write_all(&(self.grid.d as u64).to_le_bytes())?;
        f.write_all(&(self.grid.n as u64).to_le_bytes())?;
        f.write_all(&self.grid.r_max.to_le_bytes())?;
        f.write_all(&(self.m as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(8 * self.m);
        for v in &self.eigenvalues {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        f.write_all(&buf)?;
        let mut buf = Vec::with_capacity(8 * 1024 * 1024);
        for v in &self.rows {
            buf.extend_from_slice(&v.to_le_bytes());
            if buf.len() >= 8 * 1024 * 1024 {
                f.write_all(&buf)?;
                buf.clear();
            }
        }
        f.write_all(&buf)?;
        Ok(())
    }

    fn load_cache(path: &Path, grid: Arc<RadialGrid>) -> Result<Self> {
        let mut f = std::fs::File::open(path)?;
        let mut head = [0u8; 8 + 8 + 8 + 8 + 8];
        f.read_exact(&mut head)?;
        if &head[0..8] != b"RWLBAS01" {
            return Err(Error::NumericalFailure("bad basis cache magic".into()));
        }
        let d = u64::from_le_bytes(head[8..16].try_into().unwrap()) as u32;
        let n = u64::from_le_bytes(head[16..24].try_into().unwrap()) as usize;
        let r_max = f64::from_le_bytes(head[24..32].try_into().unwrap());
        let m = u64::from_le_bytes(head[32..40].try_into().unwrap()) as usize;
        if d != grid.d || n != grid.n || (r_max - grid.r_max).abs() > 1e-12 || m != grid.n - 1 {
            return Err(Error::NumericalFailure("basis cache key mismatch".into()));
        }
        let mut read_f64s = |count: usize| -> Result<Vec<f64>> {
            let mut bytes = vec![0u8; count * 8];
            f.read_exact(&mut bytes)?;
            Ok(bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect())
        };
        let eigenvalues = read_f64s(m)?;
        let rows = read_f64s(m * m)?;
        let freq = eigenvalues.iter().map(|l: &f64| l.sqrt()).collect();
        Ok(SpectralBasis { grid, eigenvalues, freq, rows, m })
    }

    /// Eigenvector k as a full grid field (wall node = 0).
    pub fn mode_field(&self, k: usize) -> RadialField {
        let mut values = vec![0.0; self.grid.n];
        values[..self.m].copy_from_slice(&self.rows[k * self.m..(k + 1) * self.m]);
        RadialField { grid: self.grid.clone(), values }
    }

    /// Modal coefficients c_k = <f, e_k>_w.
    pub fn to_modes(&self, f: &RadialField) -> Vec<f64> {
        let wf: Vec<f64> = (0..self.m)
            .map(|i| self.grid.weights[i] * f.values[i])
            .collect();
        self.rows
            .par_chunks(self.m)
            .map(|row| row.iter().zip(&wf).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Synthesize a grid field from modal coefficients.
    pub fn from_modes(&self, coeffs: &[f64]) -> RadialField {
        assert_eq!(coeffs.len(), self.m);
        let nchunks = rayon::current_num_threads().max(1);
        let chunk = (self.m + nchunks - 1) / nchunks;
        let partials: Vec<Vec<f64>> = (0..nchunks)
            .into_par_iter()
            .map(|c| {
                let mut acc = vec![0.0f64; self.m];
                let lo = c * chunk;
                let hi = ((c + 1) * chunk).min(self.m);
                for k in lo..hi {
                    let ck = coeffs[k];
                    if ck == 0.0 {
                        continue;
                    }
                    let row = &self.rows[k * self.m..(k + 1) * self.m];
                    for i in 0..self.m {
                        acc[i] += ck * row[i];
                    }
                }
                acc
            })
            .collect();
        let mut values = vec![0.0; self.grid.n];
        for part in partials {
            for i in 0..self.m {
                values[i] += part[i];
            }
        }
        RadialField { grid: self.grid.clone(), values }
    }

    /// Apply a frequency multiplier g(sqrt(λ_k)) mode-wise.
    pub fn apply_multiplier(&self, f: &RadialField, g: impl Fn(f64) -> f64) -> RadialField {
        let mut coeffs = self.to_modes(f);
        for (c, &xi) in coeffs.iter_mut().zip(&self.freq) {
            *c *= g(xi);
        }
        self.from_modes(&coeffs)
    }

    /// Fractional derivative D^s f = Σ λ_k^{s/2} <f, e_k> e_k.
    pub fn fractional_derivative(&self, f: &RadialField, s: f64) -> Result<RadialField> {
        if s < 0.0 && self.eigenvalues[0] < LAMBDA_FLOOR {
            return Err(Error::IllConditioned(format!(
                "negative order {s} with eigenvalue {} below the floor",
                self.eigenvalues[0]
            )));
        }
        let mut coeffs = self.to_modes(f);
        for (c, &l) in coeffs.iter_mut().zip(&self.eigenvalues) {
            *c *= l.max(LAMBDA_FLOOR).powf(0.5 * s);
        }
        Ok(self.from_modes(&coeffs))
    }

    /// Homogeneous Sobolev norm (Σ λ_k^s |<f,e_k>|^2)^{1/2}.
    pub fn sobolev_norm(&self, f: &RadialField, s: f64) -> f64 {
        let coeffs = self.to_modes(f);
        coeffs
            .iter()
            .zip(&self.eigenvalues)
            .map(|(c, &l)| l.powf(s) * c * c)
            .sum::<f64>()
            .sqrt()
    }

    /// Sobolev norm straight from modal coefficients.
    pub fn sobolev_norm_of_modes(&self, coeffs: &[f64], s: f64) -> f64 {
        coeffs
            .iter()
            .zip(&self.eigenvalues)
            .map(|(c, &l)| l.powf(s) * c * c)
            .sum::<f64>()
            .sqrt()
    }

    /// Dyadic indices j whose block (2^{j-1}, 2^{j+1}) intersects the spectrum.
    pub fn resolved_band(&self) -> (i32, i32) {
        let lo = self.freq[0];
        let hi = self.freq[self.m - 1];
        let j_min = (lo.log2() - 1.0).ceil() as i32;
        let j_max = (hi.log2() + 1.0).floor() as i32;
        (j_min, j_max)
    }
}

/// Smooth Littlewood-Paley bump: 1 on [0,1], quintic descent on [1,2], 0 after.
#[derive(Debug, Clone, Copy, Default)]
pub struct LPProfile;

impl LPProfile {
    pub fn bump(&self, x: f64) -> f64 {
        if x <= 1.0 {
            1.0
        } else if x >= 2.0 {
            0.0
        } else {
            let t = x - 1.0;
            1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
        }
    }

    /// Block multiplier ψ(ξ) = φ(ξ) - φ(2ξ), supported on (1/2, 2).
    pub fn block(&self, x: f64) -> f64 {
        self.bump(x) - self.bump(2.0 * x)
    }
}

/// Littlewood-Paley projection P_N f with N = 2^j.
pub fn lp_project(f: &RadialField, n_dyadic: f64, basis: &SpectralBasis, profile: &LPProfile) -> RadialField {
    basis.apply_multiplier(f, |xi| profile.block(xi / n_dyadic))
}

/// Block L² masses ‖P_N f‖_{L²(r^{d-1}dr)} for every resolved dyadic index.
pub fn lp_block_l2(
    f: &RadialField,
    basis: &SpectralBasis,
    profile: &LPProfile,
) -> Vec<(i32, f64)> {
    let coeffs = basis.to_modes(f);
    let (j_min, j_max) = basis.resolved_band();
    (j_min..=j_max)
        .map(|j| {
            let n = 2.0f64.powi(j);
            let mass: f64 = coeffs
                .iter()
                .zip(&basis.freq)
                .map(|(c, &xi)| {
                    let p = profile.block(xi / n);
                    p * p * c * c
                })
                .sum();
            (j, mass.sqrt())
        })
        .collect()
}

/// Homogeneous Besov norm Ḃ^s_{r,q} by dyadic block sums; r = 2 uses modal
/// block masses, other r take the block L^r norm on the grid.
pub fn besov_norm(
    f: &RadialField,
    s: f64,
    r: f64,
    q: f64,
    basis: &SpectralBasis,
    profile: &LPProfile,
) -> f64 {
    let (j_min, j_max) = basis.resolved_band();
    let mut terms = Vec::new();
    if (r - 2.0).abs() < 1e-14 {
        for (j, mass) in lp_block_l2(f, basis, profile) {
            terms.push(2.0f64.powi(j).powf(s) * mass);
        }
    } else {
        for j in j_min..=j_max {
            let n = 2.0f64.powi(j);
            let block = lp_project(f, n, basis, profile);
            let mass = block.lq_norm(r, 0.0).unwrap_or(0.0);
            terms.push(n.powf(s) * mass);
        }
    }
    terms.iter().map(|t| t.powf(q)).sum::<f64>().powf(1.0 / q)
}

/// Bernstein ratio ‖D^s P_N f‖ / (N^s ‖P_N f‖).
pub fn bernstein_check(
    f: &RadialField,
    n_dyadic: f64,
    s: f64,
    basis: &SpectralBasis,
    profile: &LPProfile,
) -> Result<f64> {
    let coeffs = basis.to_modes(f);
    let mut block_sq = 0.0;
    let mut deriv_sq = 0.0;
    for (c, (&xi, &l)) in coeffs.iter().zip(basis.freq.iter().zip(&basis.eigenvalues)) {
        let p = profile.block(xi / n_dyadic) * c;
        block_sq += p * p;
        deriv_sq += l.max(LAMBDA_FLOOR).powf(s) * p * p;
    }
    if block_sq == 0.0 {
        return Err(Error::EmptyBlock(n_dyadic));
    }
    Ok((deriv_sq.sqrt()) / (n_dyadic.powf(s) * block_sq.sqrt()))
}
