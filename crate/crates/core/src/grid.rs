use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Uniform radial grid on [0, R_max] carrying the measure r^{d-1} dr.
///
/// Node i sits at r_i = i * h with h = R_max / (N-1). The quadrature weight of a
/// node is the exact integral of r^{d-1} over its half-open cell
/// [r_i - h/2, r_i + h/2] ∩ [0, R_max], so the weights telescope: summing them
/// reproduces R_max^d / d to machine precision, and the same weights symmetrize
/// the discrete radial Laplacian used by the spectral module.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialGrid {
    pub d: u32,
    pub n: usize,
    pub r_max: f64,
    pub h: f64,
    pub r: Vec<f64>,
    /// Exact cell integrals of r^{d-1}.
    pub weights: Vec<f64>,
}

impl PartialEq for RadialGrid {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d && self.n == other.n && self.r_max == other.r_max
    }
}

/// Antiderivative of r^{d-1}: r^d / d.
#[inline]
fn cell_primitive(r: f64, d: u32) -> f64 {
    r.powi(d as i32) / d as f64
}

impl RadialGrid {
    pub fn new(d: u32, n: usize, r_max: f64) -> Result<Arc<Self>> {
        if d % 2 == 0 || d < 3 {
            return Err(Error::InvalidParams(format!("grid dimension d = {d} must be odd >= 3")));
        }
        if n < 16 {
            return Err(Error::InvalidParams(format!("grid needs at least 16 nodes, got {n}")));
        }
        if !(r_max > 0.0) {
            return Err(Error::InvalidParams(format!("R_max = {r_max} must be positive")));
        }
        let h = r_max / (n - 1) as f64;
        let r: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            let a = (r[i] - 0.5 * h).max(0.0);
            let b = (r[i] + 0.5 * h).min(r_max);
            weights.push(cell_primitive(b, d) - cell_primitive(a, d));
        }
        Ok(Arc::new(RadialGrid { d, n, r_max, h, r, weights }))
    }

    /// Index of the grid node closest to radius `r`, clamped to the grid.
    pub fn snap(&self, r: f64) -> usize {
        ((r / self.h).round() as isize).clamp(0, self.n as isize - 1) as usize
    }

    /// Quadrature of `integrand` values over [r_k, R_max] where r_k is the node
    /// closest to `r_min`. The first cell is clipped at r_k so constants
    /// integrate to (R_max^d - r_k^d)/d exactly.
    pub fn integrate_from(&self, values: &[f64], r_min: f64) -> Result<f64> {
        if values.len() != self.n {
            return Err(Error::GridMismatch);
        }
        if r_min < -1e-12 || r_min > self.r_max + 1e-12 {
            return Err(Error::RegionError { lo: r_min, hi: self.r_max });
        }
        let k = self.snap(r_min);
        let mut acc = 0.0;
        for i in (k..self.n).rev() {
            let w = if i == k {
                let b = (self.r[i] + 0.5 * self.h).min(self.r_max);
                cell_primitive(b, self.d) - cell_primitive(self.r[i], self.d)
            } else {
                self.weights[i]
            };
            acc += w * values[i];
        }
        Ok(acc)
    }

    /// Full-range quadrature ∫_0^{R_max} f r^{d-1} dr of sampled node values.
    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.n {
            return Err(Error::GridMismatch);
        }
        Ok(values.iter().zip(&self.weights).map(|(v, w)| v * w).sum())
    }

    /// Centered second-order radial derivative. Smooth radial data has
    /// ∂_r f(0) = 0 by parity; the outer end uses a one-sided stencil.
    pub fn derivative(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.n {
            return Err(Error::GridMismatch);
        }
        let n = self.n;
        let mut out = vec![0.0; n];
        out[0] = 0.0;
        for i in 1..n - 1 {
            out[i] = (values[i + 1] - values[i - 1]) / (2.0 * self.h);
        }
        out[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * self.h);
        Ok(out)
    }
}
