//! Embedded Dormand-Prince 5(4) integrator for small ODE systems.

use crate::error::{Error, Result};

/// Butcher tableau of DOPRI5.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
/// 5th-order weights (same as the last A row) and 4th-order embedded weights.
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub max_steps: usize,
    /// Abort when the state norm exceeds this cap (escape detection).
    pub escape: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-10, atol: 1e-12, max_step: 0.1, max_steps: 2_000_000, escape: 1e12 }
    }
}

/// Integrate y' = f(t, y) from t0 to t1 (either direction). `observe` receives
/// every accepted (t, y). Returns the final state.
pub fn integrate<const D: usize>(
    f: &dyn Fn(f64, &[f64; D]) -> [f64; D],
    t0: f64,
    t1: f64,
    y0: [f64; D],
    opt: &OdeOptions,
    observe: &mut dyn FnMut(f64, &[f64; D]),
) -> Result<[f64; D]> {
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0;
    let mut h = (opt.max_step * 1e-2).min((t1 - t0).abs()).max(1e-12) * dir;
    observe(t, &y);
    let mut k = [[0.0f64; D]; 7];
    for _ in 0..opt.max_steps {
        if (t - t1) * dir >= 0.0 {
            return Ok(y);
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        k[0] = f(t, &y);
        for stage in 0..6 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(stage + 1) {
                let a = A[stage][j];
                if a != 0.0 {
                    for i in 0..D {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            k[stage + 1] = f(t + C[stage] * h, &ys);
        }
        let mut y5 = y;
        let mut err: f64 = 0.0;
        for i in 0..D {
            let mut dy5 = 0.0;
            let mut dy4 = 0.0;
            for (j, kj) in k.iter().enumerate() {
                dy5 += B5[j] * kj[i];
                dy4 += B4[j] * kj[i];
            }
            y5[i] += h * dy5;
            let sc = opt.atol + opt.rtol * y[i].abs().max(y5[i].abs());
            let e = h * (dy5 - dy4) / sc;
            err += e * e;
        }
        let err = (err / D as f64).sqrt();
        if err <= 1.0 {
            t += h;
            y = y5;
            observe(t, &y);
            if y.iter().any(|v| !v.is_finite() || v.abs() > opt.escape) {
                return Err(Error::ShootFailure);
            }
        }
        let scale = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
        h = (h * scale).clamp(-opt.max_step, opt.max_step);
        if h == 0.0 {
            break;
        }
    }
    Err(Error::NumericalFailure("ODE step budget exhausted".into()))
}
