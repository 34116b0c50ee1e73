//! Focusing nonlinear flow u_tt - Δu = |u|^{p-1} u by Strang splitting with the
//! exact spectral linear sub-flow, plus conserved-energy, virial, critical-norm,
//! space-time norm, blow-up and scattering diagnostics.

use crate::error::{Error, Result};
use crate::field::{h1_seminorm_sq, weighted_l2, RadialField, StatePair};
use crate::linear_wave::{free_flow, ModalState, Trajectory};
use crate::model::ModelParams;
use crate::spectral::SpectralBasis;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Snapshot stride in steps.
    pub save_every: usize,
    /// Sup-norm cap for blow-up detection.
    pub blowup_threshold: f64,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig { dt: 1e-3, t_end: 8.0, save_every: 100, blowup_threshold: 1e6 }
    }
}

impl EvolveConfig {
    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || self.t_end < self.dt || !(self.blowup_threshold > 0.0) {
            return Err(Error::PreconditionError(format!(
                "bad evolve config: dt = {}, T = {}, threshold = {}",
                self.dt, self.t_end, self.blowup_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    BlowupDetected,
    CausalityStop,
}

/// Per-snapshot scalar diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct HistoryRow {
    pub t: f64,
    pub energy: f64,
    pub critical_norm: f64,
    pub y: f64,
    pub y_prime: f64,
    pub sup_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub outcome: Outcome,
    pub blowup_time: Option<f64>,
    /// Refined estimate from a dt/2 rerun (levine experiment).
    pub blowup_time_refined: Option<f64>,
    /// Max relative deviation of the scheme's conserved energy over snapshots.
    pub energy_drift: f64,
    pub history: Vec<HistoryRow>,
}

fn nonlinearity(u: &[f64], p: u32, out: &mut [f64]) {
    let pm1 = (p - 1) as i32;
    for (o, &v) in out.iter_mut().zip(u) {
        *o = v.abs().powi(pm1) * v;
    }
}

/// Scheme-consistent energy: modal kinetic + modal gradient + grid potential.
fn modal_energy(modal: &ModalState, u_phys: &RadialField, p: u32, basis: &SpectralBasis) -> f64 {
    let lin: f64 = (0..basis.m)
        .map(|k| basis.eigenvalues[k] * modal.a[k] * modal.a[k] + modal.b[k] * modal.b[k])
        .sum();
    let pot: Vec<f64> = u_phys
        .values
        .iter()
        .map(|&v| v.abs().powi(p as i32 + 1))
        .collect();
    let pot = u_phys.grid.integrate(&pot).unwrap_or(f64::NAN);
    0.5 * lin - pot / (p as f64 + 1.0)
}

/// Evolve by Strang splitting: half kick on the velocity, exact free flow,
/// half kick. Stops early on blow-up or when the causality budget runs out.
pub fn evolve(
    s0: &StatePair,
    params: &ModelParams,
    cfg: &EvolveConfig,
    basis: &SpectralBasis,
) -> Result<(Trajectory, RunReport)> {
    cfg.validate()?;
    if !s0.is_finite() {
        return Err(Error::PreconditionError("initial state not finite".into()));
    }
    let grid = s0.grid();
    // Causality budget: the wall reflection must not re-enter the run.
    let tiny = 1e-13 * s0.pos.sup_norm().max(s0.vel.sup_norm()).max(1e-300);
    let support = grid
        .r
        .iter()
        .enumerate()
        .rev()
        .find(|(i, _)| s0.pos.values[*i].abs() > tiny || s0.vel.values[*i].abs() > tiny)
        .map(|(_, &r)| r)
        .unwrap_or(0.0);
    let budget = grid.r_max - support;
    let t_run = cfg.t_end.min(budget);
    let causality_truncated = cfg.t_end > budget;

    let n_steps = (t_run / cfg.dt).round().max(1.0) as usize;
    let dt = t_run / n_steps as f64;

    let mut modal = ModalState::from_state(s0, basis);
    let mut u = basis.from_modes(&modal.a);
    let mut traj = Trajectory::new(*params);
    let mut history = Vec::new();
    let mut outcome = if causality_truncated { Outcome::CausalityStop } else { Outcome::Completed };
    let mut blowup_time = None;
    let mut kick = vec![0.0; grid.n];

    let mut e0 = f64::NAN;
    let mut drift: f64 = 0.0;

    let record =
        |t: f64, modal: &ModalState, u: &RadialField, e0: &mut f64, drift: &mut f64,
         history: &mut Vec<HistoryRow>, traj: &mut Trajectory|
         -> Result<()> {
            let vel = basis.from_modes(&modal.b);
            let state = StatePair::new(u.clone(), vel)?;
            let energy = modal_energy(modal, u, params.p, basis);
            if e0.is_nan() {
                *e0 = energy;
            } else if e0.abs() > 1e-300 {
                *drift = drift.max(((energy - *e0) / *e0).abs());
            }
            let y = weighted_l2(&state.pos, &state.pos, 0.0)?;
            let y_prime = 2.0 * weighted_l2(&state.pos, &state.vel, 0.0)?;
            history.push(HistoryRow {
                t,
                energy,
                critical_norm: critical_norm(&state, params, basis),
                y,
                y_prime,
                sup_norm: state.pos.sup_norm(),
            });
            traj.push(t, state)?;
            Ok(())
        };

    record(0.0, &modal, &u, &mut e0, &mut drift, &mut history, &mut traj)?;

    // First half kick.
    nonlinearity(&u.values, params.p, &mut kick);
    let half = basis.to_modes(&RadialField::new(grid.clone(), kick.clone())?);
    for k in 0..basis.m {
        modal.b[k] += 0.5 * dt * half[k];
    }

    for step in 1..=n_steps {
        modal.rotate(dt, basis);
        u = basis.from_modes(&modal.a);
        let t = step as f64 * dt;

        let sup = u.sup_norm();
        if !sup.is_finite() || sup > cfg.blowup_threshold {
            outcome = Outcome::BlowupDetected;
            blowup_time = Some(t - dt);
            break;
        }

        nonlinearity(&u.values, params.p, &mut kick);
        let halfk = basis.to_modes(&RadialField::new(grid.clone(), kick.clone())?);
        // Close the Strang step.
        for k in 0..basis.m {
            modal.b[k] += 0.5 * dt * halfk[k];
        }
        let due = step % cfg.save_every == 0 || step == n_steps;
        if due {
            record(t, &modal, &u, &mut e0, &mut drift, &mut history, &mut traj)?;
        }
        if step < n_steps {
            // Open the next step with the same kick field.
            for k in 0..basis.m {
                modal.b[k] += 0.5 * dt * halfk[k];
            }
        }
    }

    let report = RunReport {
        outcome,
        blowup_time,
        blowup_time_refined: None,
        energy_drift: drift,
        history,
    };
    Ok((traj, report))
}

/// Conserved energy E = ∫ (½ u_t² + ½ (∂_r u)² - |u|^{p+1}/(p+1)) r^{d-1} dr.
pub fn conserved_energy(s: &StatePair, params: &ModelParams) -> f64 {
    let kin = weighted_l2(&s.vel, &s.vel, 0.0).unwrap_or(f64::NAN);
    let grad = h1_seminorm_sq(&s.pos, 0.0).unwrap_or(f64::NAN);
    let pvals: Vec<f64> = s
        .pos
        .values
        .iter()
        .map(|&v| v.abs().powi(params.p as i32 + 1))
        .collect();
    let pot = s.pos.grid.integrate(&pvals).unwrap_or(f64::NAN);
    0.5 * kin + 0.5 * grad - pot / (params.p as f64 + 1.0)
}

/// Virial quantities (y, y', y'') = (∫u², 2∫u u_t, 2∫u_t² - 2∫|∇u|² + 2∫|u|^{p+1}).
pub fn virial(s: &StatePair, params: &ModelParams) -> (f64, f64, f64) {
    let y = weighted_l2(&s.pos, &s.pos, 0.0).unwrap_or(f64::NAN);
    let y_prime = 2.0 * weighted_l2(&s.pos, &s.vel, 0.0).unwrap_or(f64::NAN);
    let kin = weighted_l2(&s.vel, &s.vel, 0.0).unwrap_or(f64::NAN);
    let grad = h1_seminorm_sq(&s.pos, 0.0).unwrap_or(f64::NAN);
    let pvals: Vec<f64> = s
        .pos
        .values
        .iter()
        .map(|&v| v.abs().powi(params.p as i32 + 1))
        .collect();
    let pot = s.pos.grid.integrate(&pvals).unwrap_or(f64::NAN);
    (y, y_prime, 2.0 * kin - 2.0 * grad + 2.0 * pot)
}

/// Virial with the gradient term in the spectral calculus; consistent with
/// the flow's own discretization, which matters because the gradient and
/// kinetic terms cancel strongly near virial-stationary states.
pub fn virial_with_basis(
    s: &StatePair,
    params: &ModelParams,
    basis: &SpectralBasis,
) -> (f64, f64, f64) {
    let y = weighted_l2(&s.pos, &s.pos, 0.0).unwrap_or(f64::NAN);
    let y_prime = 2.0 * weighted_l2(&s.pos, &s.vel, 0.0).unwrap_or(f64::NAN);
    let kin = weighted_l2(&s.vel, &s.vel, 0.0).unwrap_or(f64::NAN);
    let a = basis.to_modes(&s.pos);
    let grad: f64 = a
        .iter()
        .zip(&basis.eigenvalues)
        .map(|(c, &l)| l * c * c)
        .sum();
    let pvals: Vec<f64> = s
        .pos
        .values
        .iter()
        .map(|&v| v.abs().powi(params.p as i32 + 1))
        .collect();
    let pot = s.pos.grid.integrate(&pvals).unwrap_or(f64::NAN);
    (y, y_prime, 2.0 * kin - 2.0 * grad + 2.0 * pot)
}

/// Convexity margin (4/(p+3)) y y'' - (y')² for zero-energy states.
pub fn cauchy_schwarz_check(s: &StatePair, params: &ModelParams) -> Result<f64> {
    let e = conserved_energy(s, params);
    let kin = weighted_l2(&s.vel, &s.vel, 0.0)?;
    let grad = h1_seminorm_sq(&s.pos, 0.0)?;
    let scale = 0.5 * kin + 0.5 * grad + 1e-300;
    if e.abs() > 1e-6 * scale {
        return Err(Error::PreconditionError(format!(
            "state energy {e} not within tolerance of zero (scale {scale})"
        )));
    }
    let (y, yp, ypp) = virial(s, params);
    Ok(4.0 / (params.p as f64 + 3.0) * y * ypp - yp * yp)
}

/// Critical norm ‖u‖_{Ḣ^{s_p}} ⊕ ‖u_t‖_{Ḣ^{s_p-1}}.
pub fn critical_norm(s: &StatePair, params: &ModelParams, basis: &SpectralBasis) -> f64 {
    let a = basis.sobolev_norm(&s.pos, params.s_p);
    let b = basis.sobolev_norm(&s.vel, params.s_p - 1.0);
    (a * a + b * b).sqrt()
}

/// Space-time norm ‖u‖_{S_p} = (∫ ‖u(t)‖_{L^{2d(p-1)/3}}^{2(p-1)} dt)^{1/(2(p-1))}
/// by trapezoid over the trajectory snapshots, optionally subsampled by `stride`.
pub fn sp_norm_strided(traj: &Trajectory, params: &ModelParams, stride: usize) -> f64 {
    let q = 2.0 * params.d as f64 * (params.p as f64 - 1.0) / 3.0;
    let a = 2.0 * (params.p as f64 - 1.0);
    let idx: Vec<usize> = (0..traj.times.len()).step_by(stride.max(1)).collect();
    if idx.len() < 2 {
        return 0.0;
    }
    let vals: Vec<(f64, f64)> = idx
        .iter()
        .map(|&i| {
            let v = traj.states[i].pos.lq_norm(q, 0.0).unwrap_or(0.0).powf(a);
            (traj.times[i], v)
        })
        .collect();
    let mut acc = 0.0;
    for w in vals.windows(2) {
        acc += 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1);
    }
    acc.powf(1.0 / a)
}

pub fn sp_norm(traj: &Trajectory, params: &ModelParams) -> f64 {
    sp_norm_strided(traj, params, 1)
}

/// Fit a free-wave profile to the tail of a completed trajectory: pull the
/// final state back to t = 0 by the free flow and report the critical-norm
/// residual curve t ↦ ‖state(t) - S(t) profile‖.
pub fn scattering_fit(
    traj: &Trajectory,
    basis: &SpectralBasis,
) -> Result<(StatePair, Vec<(f64, f64)>)> {
    let last = traj
        .last_state()
        .ok_or_else(|| Error::PreconditionError("empty trajectory".into()))?;
    if !last.is_finite() {
        return Err(Error::PreconditionError(
            "trajectory blew up; no scattering profile".into(),
        ));
    }
    let t_end = *traj.times.last().unwrap();
    let profile = free_flow(last, -t_end, basis);
    let params = traj.params;
    let mut residual = Vec::with_capacity(traj.times.len());
    for (&t, state) in traj.times.iter().zip(&traj.states) {
        let lin = free_flow(&profile, t, basis);
        let diff = state.sub(&lin)?;
        residual.push((t, critical_norm(&diff, &params, basis)));
    }
    Ok((profile, residual))
}

/// Negative-energy breakdown experiment: requires E(s0) < 0, runs the flow and
/// refines the detected blow-up time with a dt/2 rerun.
pub fn levine_experiment(
    s0: &StatePair,
    params: &ModelParams,
    cfg: &EvolveConfig,
    basis: &SpectralBasis,
) -> Result<RunReport> {
    let e = conserved_energy(s0, params);
    if e >= 0.0 {
        return Err(Error::PreconditionError(format!(
            "levine experiment needs negative energy, got E = {e}"
        )));
    }
    let (_, mut report) = evolve(s0, params, cfg, basis)?;
    if report.outcome == Outcome::BlowupDetected {
        let fine = EvolveConfig { dt: 0.5 * cfg.dt, ..cfg.clone() };
        let (_, fine_report) = evolve(s0, params, &fine, basis)?;
        report.blowup_time_refined = fine_report.blowup_time;
    }
    Ok(report)
}

/// Amplitude that zeroes the conserved energy of (A·shape, 0):
/// A = [ (p+1) ‖∇shape‖² / (2 ∫ |shape|^{p+1}) ]^{1/(p-1)}.
pub fn zero_energy_amplitude(shape: &RadialField, params: &ModelParams) -> Result<f64> {
    let grad = h1_seminorm_sq(shape, 0.0)?;
    let pvals: Vec<f64> = shape
        .values
        .iter()
        .map(|&v| v.abs().powi(params.p as i32 + 1))
        .collect();
    let pot = shape.grid.integrate(&pvals)?;
    if pot <= 0.0 {
        return Err(Error::PreconditionError("shape has no potential mass".into()));
    }
    Ok(((params.p as f64 + 1.0) * grad / (2.0 * pot)).powf(1.0 / (params.p as f64 - 1.0)))
}

/// The exact ODE blow-up constant c_p with u(t) = c_p (T-t)^{-2/(p-1)} solving
/// u'' = u^p.
pub fn ode_blowup_constant(p: u32) -> f64 {
    let pf = p as f64;
    (2.0 * (pf + 1.0) / ((pf - 1.0) * (pf - 1.0))).powf(1.0 / (pf - 1.0))
}
