use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Model parameters for the focusing wave equation u_tt - Δu = |u|^{p-1} u
/// in odd dimension d with odd integer exponent p.
///
/// Derived quantities:
///   s_p  = d/2 - 2/(p-1)        critical Sobolev regularity
///   q_p  = d(p-1)/2             critical Lebesgue exponent
///   beta = (d-2)/2 * (p - (d+2)/(d-2))   channel exponent
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub d: u32,
    pub p: u32,
    pub s_p: f64,
    pub q_p: f64,
    pub beta: f64,
}

impl ModelParams {
    pub fn new(d: u32, p: u32) -> Result<Self> {
        if d % 2 == 0 || d < 3 {
            return Err(Error::InvalidParams(format!(
                "dimension d = {d} must be an odd integer >= 3"
            )));
        }
        if p % 2 == 0 || p < 3 {
            return Err(Error::InvalidParams(format!(
                "exponent p = {p} must be an odd integer >= 3"
            )));
        }
        let df = d as f64;
        let pf = p as f64;
        let s_p = df / 2.0 - 2.0 / (pf - 1.0);
        let q_p = df * (pf - 1.0) / 2.0;
        let beta = (df - 2.0) / 2.0 * (pf - (df + 2.0) / (df - 2.0));
        Ok(ModelParams { d, p, s_p, q_p, beta })
    }

    /// Scaling weight a_p = 2/(p-1): u -> λ^{-a_p} u(t/λ, x/λ) preserves the flow.
    pub fn a_p(&self) -> f64 {
        2.0 / (self.p as f64 - 1.0)
    }

    /// True when the nonlinearity is energy-supercritical (s_p > 1).
    pub fn supercritical(&self) -> bool {
        self.s_p > 1.0
    }
}
