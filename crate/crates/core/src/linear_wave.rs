//! Free radial wave flow, exact in the discrete basis, plus Duhamel integrals
//! and exterior-energy windows.

use crate::error::{Error, Result};
use crate::field::{energy_pair_norm, RadialField, StatePair};
use crate::model::ModelParams;
use crate::spectral::SpectralBasis;

/// Modal representation of a state: position and velocity coefficients.
#[derive(Debug, Clone)]
pub struct ModalState {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl ModalState {
    pub fn from_state(s: &StatePair, basis: &SpectralBasis) -> ModalState {
        ModalState { a: basis.to_modes(&s.pos), b: basis.to_modes(&s.vel) }
    }

    pub fn to_state(&self, basis: &SpectralBasis) -> StatePair {
        StatePair { pos: basis.from_modes(&self.a), vel: basis.from_modes(&self.b) }
    }

    /// Rotate every mode by time t:
    /// (a, b) -> (a cos(tω) + b sin(tω)/ω, -a ω sin(tω) + b cos(tω)), ω = sqrt(λ).
    pub fn rotate(&mut self, t: f64, basis: &SpectralBasis) {
        for k in 0..basis.m {
            let om = basis.freq[k];
            let (s, c) = (t * om).sin_cos();
            let (a, b) = (self.a[k], self.b[k]);
            self.a[k] = a * c + b * s / om;
            self.b[k] = -a * om * s + b * c;
        }
    }

    /// Conserved modal energy Σ (λ a² + b²); equals gradient + kinetic energy
    /// in the flux-form discrete calculus.
    pub fn energy(&self, basis: &SpectralBasis) -> f64 {
        (0..basis.m)
            .map(|k| basis.eigenvalues[k] * self.a[k] * self.a[k] + self.b[k] * self.b[k])
            .sum()
    }
}

/// Evolve a state by the free flow S(t); exact mode-by-mode.
pub fn free_flow(s0: &StatePair, t: f64, basis: &SpectralBasis) -> StatePair {
    let mut modal = ModalState::from_state(s0, basis);
    modal.rotate(t, basis);
    modal.to_state(basis)
}

/// Total (kinetic + gradient) free energy of a state in the discrete calculus.
pub fn free_energy(s: &StatePair, basis: &SpectralBasis) -> f64 {
    ModalState::from_state(s, basis).energy(basis)
}

/// Duhamel integral ∫_{t0}^{t1} sin((t1-s)√-Δ)/√-Δ h(s) ds together with its
/// time derivative, by composite Simpson over `steps` intervals (rounded up to
/// even). The source provider returns h(s) on the shared grid.
pub fn duhamel(
    source: &dyn Fn(f64) -> RadialField,
    t0: f64,
    t1: f64,
    basis: &SpectralBasis,
    steps: usize,
) -> Result<StatePair> {
    if t1 < t0 {
        return Err(Error::PreconditionError(format!("t1 = {t1} < t0 = {t0}")));
    }
    let m = basis.m;
    let steps = steps.max(2) + steps % 2;
    let dt = (t1 - t0) / steps as f64;
    let mut pos = vec![0.0f64; m];
    let mut vel = vec![0.0f64; m];
    for j in 0..=steps {
        let s = t0 + j as f64 * dt;
        let h = source(s);
        if !h.is_finite() {
            return Err(Error::SourceError(s));
        }
        let coeffs = basis.to_modes(&h);
        let w = if j == 0 || j == steps {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let tau = t1 - s;
        for k in 0..m {
            let om = basis.freq[k];
            let (sn, cs) = (tau * om).sin_cos();
            pos[k] += w * sn / om * coeffs[k];
            vel[k] += w * cs * coeffs[k];
        }
    }
    let scale = dt / 3.0;
    for k in 0..m {
        pos[k] *= scale;
        vel[k] *= scale;
    }
    Ok(ModalState { a: pos, b: vel }.to_state(basis))
}

/// Exterior energy ∫_{R+|t|}^{R_max} ((∂_r u)² + u_t²) r^{d-1} dr.
pub fn exterior_energy(s: &StatePair, r_cut: f64, t: f64) -> Result<f64> {
    let lo = r_cut + t.abs();
    let grid = s.grid();
    if lo >= grid.r_max {
        return Err(Error::RegionError { lo, hi: grid.r_max });
    }
    let du = s.pos.derivative();
    let dens: Vec<f64> = du
        .values
        .iter()
        .zip(&s.vel.values)
        .map(|(a, b)| a * a + b * b)
        .collect();
    grid.integrate_from(&dens, lo)
}

/// A time-stamped sequence of states sharing one grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StatePair>,
    pub params: ModelParams,
}

impl Trajectory {
    pub fn new(params: ModelParams) -> Self {
        Trajectory { times: Vec::new(), states: Vec::new(), params }
    }

    pub fn push(&mut self, t: f64, s: StatePair) -> Result<()> {
        if let Some(&last) = self.times.last() {
            if t <= last {
                return Err(Error::PreconditionError(format!(
                    "times must increase: {t} after {last}"
                )));
            }
        }
        self.times.push(t);
        self.states.push(s);
        Ok(())
    }

    pub fn last_state(&self) -> Option<&StatePair> {
        self.states.last()
    }
}

/// The decay curve t ↦ ‖state(t)‖_{H(r ≥ R + |t|)} along a trajectory.
/// Diagnostic only: reports the curve and whether its tail trend is monotone.
pub fn exterior_vanishing_scan(traj: &Trajectory, r_cut: f64) -> Vec<(f64, f64)> {
    traj.times
        .iter()
        .zip(&traj.states)
        .filter_map(|(&t, s)| {
            energy_pair_norm(s, r_cut + t.abs()).ok().map(|v| (t, v))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::weighted_l2;
    use crate::grid::RadialGrid;
    use std::sync::Arc;

    fn setup(d: u32, n: usize, r_max: f64) -> (Arc<RadialGrid>, SpectralBasis) {
        let g = RadialGrid::new(d, n, r_max).unwrap();
        let b = SpectralBasis::build(g.clone()).unwrap();
        (g, b)
    }

    fn bump_state(g: &Arc<RadialGrid>, center: f64, width: f64) -> StatePair {
        let pos = RadialField::from_fn(g.clone(), |r| {
            let x = (r - center) / width;
            if x.abs() < 1.0 {
                (1.0 - x * x).powi(4)
            } else {
                0.0
            }
        });
        StatePair::new(pos, RadialField::zeros(g.clone())).unwrap()
    }

    #[test]
    fn identity_at_t_zero() {
        let (g, b) = setup(7, 257, 8.0);
        let s = bump_state(&g, 3.0, 1.0);
        let s2 = free_flow(&s, 0.0, &b);
        // Projection onto the modal span only; bump vanishes at the wall.
        let diff: f64 = s
            .pos
            .values
            .iter()
            .zip(&s2.pos.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-10, "identity failure {diff}");
    }

    #[test]
    fn single_mode_eigenflow() {
        let (g, b) = setup(7, 129, 4.0);
        let k = 11;
        let st = StatePair::new(b.mode_field(k), RadialField::zeros(g)).unwrap();
        let t = 0.37;
        let out = free_flow(&st, t, &b);
        let om = b.freq[k];
        let e = b.mode_field(k);
        for i in 0..b.m {
            assert!((out.pos.values[i] - (t * om).cos() * e.values[i]).abs() < 1e-10);
            assert!((out.vel.values[i] + om * (t * om).sin() * e.values[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn group_law() {
        let (g, b) = setup(7, 257, 8.0);
        let s = bump_state(&g, 3.0, 1.0);
        let one = free_flow(&free_flow(&s, 0.7, &b), 1.1, &b);
        let two = free_flow(&s, 1.8, &b);
        let num: f64 = one
            .pos
            .values
            .iter()
            .zip(&two.pos.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let den: f64 = two.pos.values.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(num / den < 1e-10, "group law violated: {}", num / den);
    }

    #[test]
    fn time_reversal() {
        let (g, b) = setup(7, 257, 8.0);
        let s = bump_state(&g, 3.0, 1.0);
        let back = free_flow(&free_flow(&s, 2.5, &b), -2.5, &b);
        let num: f64 = s
            .pos
            .values
            .iter()
            .zip(&back.pos.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let den: f64 = s.pos.values.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(num / den < 1e-10);
    }

    #[test]
    fn energy_conserved_over_long_horizon() {
        let (g, b) = setup(7, 257, 8.0);
        let s = bump_state(&g, 3.0, 1.0);
        let e0 = free_energy(&s, &b);
        for &t in &[0.5, 1.5, 4.0] {
            let e = free_energy(&free_flow(&s, t, &b), &b);
            assert!(((e - e0) / e0).abs() < 1e-10, "t={t} drift {}", (e - e0) / e0);
        }
    }

    #[test]
    fn finite_speed_of_propagation() {
        let (g, b) = setup(7, 513, 8.0);
        // C-infinity bump: spectral content beyond the cone decays fast.
        let pos = RadialField::from_fn(g.clone(), |r| {
            let x = (r - 2.0) / 0.8;
            if x.abs() < 1.0 {
                (1.0 - 1.0 / (1.0 - x * x)).exp()
            } else {
                0.0
            }
        });
        let s = StatePair::new(pos, RadialField::zeros(g.clone())).unwrap(); // supported in r <= 2.8
        let t = 1.5;
        let out = free_flow(&s, t, &b);
        let support = 2.8;
        // The lattice front smears over ~(t/h)^{1/3} cells; just past the cone
        // the leak is small, a few cells further it collapses.
        let leak_past = |offset: f64| {
            out.pos
                .values
                .iter()
                .zip(g.r.iter())
                .filter(|(_, &r)| r >= support + t + offset)
                .map(|(v, _)| v.abs())
                .fold(0.0f64, f64::max)
        };
        let amp = out.pos.sup_norm();
        assert!(leak_past(2.0 * g.h) / amp < 1e-5, "leak {}", leak_past(2.0 * g.h) / amp);
        assert!(leak_past(10.0 * g.h) / amp < 1e-8, "leak {}", leak_past(10.0 * g.h) / amp);
    }

    #[test]
    fn duhamel_zero_source() {
        let (g, b) = setup(7, 129, 4.0);
        let zero = RadialField::zeros(g.clone());
        let out = duhamel(&|_t| zero.clone(), 0.0, 1.0, &b, 16).unwrap();
        assert!(out.pos.sup_norm() < 1e-15 && out.vel.sup_norm() < 1e-15);
    }

    #[test]
    fn duhamel_constant_single_mode_source() {
        let (_g, b) = setup(7, 129, 4.0);
        let k = 7;
        let e = b.mode_field(k);
        let t1 = 0.9;
        let out = duhamel(&|_t| e.clone(), 0.0, t1, &b, 256).unwrap();
        let lam = b.eigenvalues[k];
        let expect = (1.0 - (t1 * lam.sqrt()).cos()) / lam;
        let coeff = b.to_modes(&out.pos)[k];
        assert!(
            ((coeff - expect) / expect).abs() < 1e-7,
            "got {coeff} expect {expect}"
        );
    }

    #[test]
    fn duhamel_quadrature_order() {
        let (g, b) = setup(7, 129, 4.0);
        let e = b.mode_field(5);
        let g2 = g.clone();
        let src = move |t: f64| {
            RadialField::new(
                g2.clone(),
                e.values.iter().map(|v| v * (1.3 * t).sin()).collect(),
            )
            .unwrap()
        };
        let fine = duhamel(&src, 0.0, 1.0, &b, 512).unwrap();
        let c_ref = b.to_modes(&fine.pos)[5];
        let err = |steps: usize| {
            let out = duhamel(&src, 0.0, 1.0, &b, steps).unwrap();
            (b.to_modes(&out.pos)[5] - c_ref).abs()
        };
        let (e1, e2) = (err(8), err(16));
        assert!(e1 / e2 > 4.0, "quadrature refinement gain {}", e1 / e2);
    }

    #[test]
    fn exterior_energy_basics() {
        let (g, b) = setup(7, 513, 8.0);
        let zero = StatePair::zeros(g.clone());
        assert_eq!(exterior_energy(&zero, 1.0, 0.0).unwrap(), 0.0);

        // Compact support in r <= 2.8 measured at R = 4 vanishes.
        let s = bump_state(&g, 2.0, 0.8);
        assert!(exterior_energy(&s, 4.0, 0.0).unwrap() < 1e-20);

        // t = 0, R = 0 captures gradient + kinetic energy; cross-check the
        // modal energy within the O(h²) agreement of the two gradient rules.
        let e_win = exterior_energy(&s, 0.0, 0.0).unwrap();
        let e_modal = free_energy(&s, &b);
        assert!(
            ((e_win - e_modal) / e_modal).abs() < 5e-3,
            "window {e_win} modal {e_modal}"
        );

        // Region outside the grid errors.
        assert!(matches!(
            exterior_energy(&s, 7.0, 2.0),
            Err(Error::RegionError { .. })
        ));
    }

    #[test]
    fn scan_of_zero_trajectory_is_zero() {
        let (g, _b) = setup(7, 129, 4.0);
        let params = ModelParams::new(7, 3).unwrap();
        let mut traj = Trajectory::new(params);
        for i in 0..4 {
            traj.push(i as f64 * 0.5, StatePair::zeros(g.clone())).unwrap();
        }
        let curve = exterior_vanishing_scan(&traj, 1.0);
        assert!(curve.iter().all(|(_, v)| *v == 0.0));
    }

    #[test]
    fn outgoing_wave_scan_stabilizes_d3() {
        // Strong Huygens in odd dimension: after the wave passes, the window
        // norm settles to a plateau.
        let (g, b) = setup(3, 513, 16.0);
        let s = bump_state(&g, 3.0, 1.0);
        let params = ModelParams::new(3, 5).unwrap();
        let mut traj = Trajectory::new(params);
        for i in 0..=10 {
            let t = i as f64 * 0.5;
            traj.push(t, free_flow(&s, t, &b)).unwrap();
        }
        let curve = exterior_vanishing_scan(&traj, 1.0);
        let tail: Vec<f64> = curve.iter().rev().take(3).map(|(_, v)| *v).collect();
        let spread = (tail[0] - tail[2]).abs() / tail[0].max(1e-30);
        assert!(spread < 0.25, "no plateau: tail {tail:?}");
    }

    #[test]
    fn velocity_only_state_pairs_with_l2() {
        let (g, _b) = setup(7, 257, 8.0);
        let vel = RadialField::from_fn(g.clone(), |r| (-(r - 3.0) * (r - 3.0)).exp());
        let s = StatePair::new(RadialField::zeros(g.clone()), vel.clone()).unwrap();
        let e = exterior_energy(&s, 1.0, 0.0).unwrap();
        let l2 = weighted_l2(&vel, &vel, 1.0).unwrap();
        assert!((e - l2).abs() < 1e-12 * l2);
    }
}
