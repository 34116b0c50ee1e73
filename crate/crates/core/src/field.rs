use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use std::sync::Arc;

/// A sampled radial function on a grid.
#[derive(Debug, Clone)]
pub struct RadialField {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<f64>,
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::GridMismatch);
        }
        Ok(RadialField { grid, values })
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let n = grid.n;
        RadialField { grid, values: vec![0.0; n] }
    }

    /// Sample a closure at the grid nodes.
    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.r.iter().map(|&r| f(r)).collect();
        RadialField { grid, values }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn same_grid(&self, other: &RadialField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn scaled(&self, a: f64) -> RadialField {
        RadialField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| a * v).collect(),
        }
    }

    pub fn add(&self, other: &RadialField) -> Result<RadialField> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Ok(RadialField { grid: self.grid.clone(), values })
    }

    pub fn sub(&self, other: &RadialField) -> Result<RadialField> {
        self.add(&other.scaled(-1.0))
    }

    /// Radial derivative by centered differences (parity at r=0, one-sided at R_max).
    pub fn derivative(&self) -> RadialField {
        let values = self.grid.derivative(&self.values).expect("own grid");
        RadialField { grid: self.grid.clone(), values }
    }

    /// Weighted L^q norm (∫ |f|^q r^{d-1} dr)^{1/q} over [r_min, R_max].
    pub fn lq_norm(&self, q: f64, r_min: f64) -> Result<f64> {
        let vals: Vec<f64> = self.values.iter().map(|v| v.abs().powf(q)).collect();
        Ok(self.grid.integrate_from(&vals, r_min)?.powf(1.0 / q))
    }
}

/// Weighted pairing ∫_{r_min}^{R_max} f g r^{d-1} dr by the grid quadrature.
pub fn weighted_l2(f: &RadialField, g: &RadialField, r_min: f64) -> Result<f64> {
    if !f.same_grid(g) {
        return Err(Error::GridMismatch);
    }
    let prod: Vec<f64> = f.values.iter().zip(&g.values).map(|(a, b)| a * b).collect();
    f.grid.integrate_from(&prod, r_min)
}

/// Exterior Ḣ¹ seminorm squared: ∫_{r_min}^{R_max} (∂_r f)^2 r^{d-1} dr.
pub fn h1_seminorm_sq(f: &RadialField, r_min: f64) -> Result<f64> {
    let df = f.derivative();
    let sq: Vec<f64> = df.values.iter().map(|v| v * v).collect();
    f.grid.integrate_from(&sq, r_min)
}

/// A (position, velocity) pair (u, ∂_t u) on one grid.
#[derive(Debug, Clone)]
pub struct StatePair {
    pub pos: RadialField,
    pub vel: RadialField,
}

impl StatePair {
    pub fn new(pos: RadialField, vel: RadialField) -> Result<Self> {
        if !pos.same_grid(&vel) {
            return Err(Error::GridMismatch);
        }
        Ok(StatePair { pos, vel })
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        StatePair { pos: RadialField::zeros(grid.clone()), vel: RadialField::zeros(grid) }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.pos.grid
    }

    pub fn is_finite(&self) -> bool {
        self.pos.is_finite() && self.vel.is_finite()
    }

    pub fn scaled(&self, a: f64) -> StatePair {
        StatePair { pos: self.pos.scaled(a), vel: self.vel.scaled(a) }
    }

    pub fn add(&self, other: &StatePair) -> Result<StatePair> {
        Ok(StatePair { pos: self.pos.add(&other.pos)?, vel: self.vel.add(&other.vel)? })
    }

    pub fn sub(&self, other: &StatePair) -> Result<StatePair> {
        Ok(StatePair { pos: self.pos.sub(&other.pos)?, vel: self.vel.sub(&other.vel)? })
    }
}

/// Exterior energy norm ‖(u, u_t)‖_{Ḣ¹ × L²(r ≥ r_min)}.
pub fn energy_pair_norm(s: &StatePair, r_min: f64) -> Result<f64> {
    let grad = h1_seminorm_sq(&s.pos, r_min)?;
    let kin = weighted_l2(&s.vel, &s.vel, r_min)?;
    Ok((grad + kin).sqrt())
}
