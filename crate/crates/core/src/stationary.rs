//! The singular stationary family Z_ℓ by stable-manifold shooting.
//!
//! In log radius s = log r with φ(s) = r Z(r), the elliptic equation
//! Z'' + (d-1)/r Z' + |Z|^{p-1} Z = 0 becomes
//!     φ̈ + (d-4) φ̇ - (d-3) φ + |φ|^{p-1} φ e^{-(p-3)s} = 0,
//! a planar system with a hyperbolic origin (eigenvalues 1 and -(d-3)).
//! Seeding on the stable direction and marching backward in s constructs a
//! profile with r^{d-2} Z(r) → ℓ at infinity and a non-L^{q_p} singularity
//! at the origin.

use crate::error::{Error, Result};
use crate::ode::{integrate, OdeOptions};
use serde::Serialize;

/// Right-hand side of the planar system: (φ, φ̇) = (x, y).
pub fn ode_rhs(s: f64, x: f64, y: f64, d: u32, p: u32) -> (f64, f64) {
    let df = d as f64;
    let nl = x.abs().powi(p as i32 - 1) * x * (-(p as f64 - 3.0) * s).exp();
    (y, -(df - 4.0) * y + (df - 3.0) * x - nl)
}

/// Jacobian of the rhs at the origin; eigenvalues are 1 and -(d-3).
pub fn linearization_eigenvalues(d: u32) -> (f64, f64) {
    // μ² + (d-4)μ - (d-3) = 0.
    let b = d as f64 - 4.0;
    let c = -(d as f64 - 3.0);
    let disc = (b * b - 4.0 * c).sqrt();
    ((-b + disc) / 2.0, (-b - disc) / 2.0)
}

/// A numerically constructed stationary profile on a uniform log-radius grid.
#[derive(Debug, Clone, Serialize)]
pub struct StationaryProfile {
    pub d: u32,
    pub p: u32,
    /// Uniform log-radius nodes, ascending.
    pub s: Vec<f64>,
    /// φ(s) = r Z(r).
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    /// r = e^s.
    pub r: Vec<f64>,
    /// Z(r) = φ(s) / r.
    pub z: Vec<f64>,
    /// Requested stable-manifold amplitude.
    pub x0: f64,
    /// Scaling parameter applied so far.
    pub lam: f64,
    /// Measured limit of r^{d-2} Z(r).
    pub ell: f64,
    /// Fitted forward decay exponent of φ (≈ -(d-3)).
    pub forward_rate: f64,
}

impl StationaryProfile {
    pub fn ds(&self) -> f64 {
        self.s[1] - self.s[0]
    }

    fn from_samples(
        d: u32,
        p: u32,
        s: Vec<f64>,
        phi: Vec<f64>,
        dphi: Vec<f64>,
        x0: f64,
        lam: f64,
        ell: f64,
        forward_rate: f64,
    ) -> Self {
        let r: Vec<f64> = s.iter().map(|v| v.exp()).collect();
        let z: Vec<f64> = phi.iter().zip(&r).map(|(f, r)| f / r).collect();
        StationaryProfile { d, p, s, phi, dphi, r, z, x0, lam, ell, forward_rate }
    }
}

/// March the planar system across a uniform grid, storing (φ, φ̇) per node.
fn march_on_grid(
    d: u32,
    p: u32,
    start: [f64; 2],
    s_nodes: &[f64],
    opt: &OdeOptions,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let f = move |s: f64, y: &[f64; 2]| {
        let (dx, dy) = ode_rhs(s, y[0], y[1], d, p);
        [dx, dy]
    };
    let mut phi = Vec::with_capacity(s_nodes.len());
    let mut dphi = Vec::with_capacity(s_nodes.len());
    let mut state = start;
    phi.push(state[0]);
    dphi.push(state[1]);
    for w in s_nodes.windows(2) {
        state = integrate(&f, w[0], w[1], state, opt, &mut |_, _| {})?;
        phi.push(state[0]);
        dphi.push(state[1]);
    }
    Ok((phi, dphi))
}

/// Component of (x, y) along the unstable direction (1, 1).
fn unstable_component(x: f64, y: f64, d: u32) -> f64 {
    ((d as f64 - 3.0) * x + y) / (d as f64 - 2.0)
}

/// Construct the stationary profile with asymptotic amplitude x0 by seeding on
/// the stable direction at s0, correcting the seed so the forward trajectory
/// tracks the manifold, then marching backward to s_min.
pub fn shoot_stable(
    x0: f64,
    d: u32,
    p: u32,
    s0: f64,
    s_min: f64,
    ds: f64,
) -> Result<StationaryProfile> {
    if d % 2 == 0 || d < 5 || p % 2 == 0 || p < 3 {
        return Err(Error::InvalidParams(format!(
            "shooting needs odd d >= 5 and odd p >= 3, got d={d} p={p}"
        )));
    }
    if s_min >= s0 {
        return Err(Error::InvalidParams("s_min must lie below s0".into()));
    }
    if x0.abs() > 0.1 {
        return Err(Error::InvalidParams(format!(
            "seed amplitude |x0| = {} above the empirical cap 0.1",
            x0.abs()
        )));
    }
    let df = d as f64;
    let decay = df - 3.0;
    let n_back = ((s0 - s_min) / ds).round() as usize;
    let ds = (s0 - s_min) / n_back as f64;
    // Forward span: at least four e-foldings of the stable decay.
    let span_fwd = (4.0 / decay).max(4.0);
    let n_fwd = (span_fwd / ds).ceil() as usize;
    let s1 = s0 + n_fwd as f64 * ds;

    if x0 == 0.0 {
        let total = n_back + n_fwd + 1;
        let s: Vec<f64> = (0..total).map(|i| s_min + i as f64 * ds).collect();
        return Ok(StationaryProfile::from_samples(
            d,
            p,
            s,
            vec![0.0; total],
            vec![0.0; total],
            0.0,
            1.0,
            0.0,
            f64::NAN,
        ));
    }

    let eps = x0 * (-decay * s0).exp();
    let opt = OdeOptions { rtol: 1e-12, atol: 1e-16, max_step: 0.05, ..Default::default() };
    let f = move |s: f64, y: &[f64; 2]| {
        let (dx, dy) = ode_rhs(s, y[0], y[1], d, p);
        [dx, dy]
    };

    // Newton (secant) correction along the unstable direction so the forward
    // trajectory stays on the manifold over [s0, s1].
    let shoot_fwd = |eta: f64| -> Result<f64> {
        let seed = [eps + eta, -decay * eps + eta];
        let end = integrate(&f, s0, s1, seed, &opt, &mut |_, _| {})?;
        Ok(unstable_component(end[0], end[1], d))
    };
    let mut eta0 = 0.0;
    let mut g0 = shoot_fwd(eta0)?;
    let mut eta1 = 1e-3 * eps.abs().max(1e-12);
    let mut g1 = shoot_fwd(eta1)?;
    for _ in 0..60 {
        if g1.abs() < 1e-16 * eps.abs().max(1e-300) || (g1 - g0).abs() < 1e-300 {
            break;
        }
        let eta2 = eta1 - g1 * (eta1 - eta0) / (g1 - g0);
        eta0 = eta1;
        g0 = g1;
        eta1 = eta2;
        g1 = shoot_fwd(eta1)?;
    }
    let seed = [eps + eta1, -decay * eps + eta1];

    // Forward samples for the tail and the decay-rate fit.
    let s_fwd: Vec<f64> = (0..=n_fwd).map(|i| s0 + i as f64 * ds).collect();
    let (phi_fwd, dphi_fwd) = march_on_grid(d, p, seed, &s_fwd, &opt)?;

    // Fitted decay exponent of |φ| over the forward window.
    let pairs: Vec<(f64, f64)> = s_fwd
        .iter()
        .zip(&phi_fwd)
        .filter(|(_, f)| f.abs() > 1e-280)
        .map(|(&s, &f)| (s, f.abs().ln()))
        .collect();
    let forward_rate = slope(&pairs);

    // Backward march from the seed.
    let s_back: Vec<f64> = (0..=n_back).map(|i| s0 - i as f64 * ds).collect();
    let (phi_back, dphi_back) = march_on_grid(d, p, seed, &s_back, &opt)?;

    // Assemble ascending arrays on [s_min, s1].
    let total = n_back + n_fwd + 1;
    let mut s = Vec::with_capacity(total);
    let mut phi = Vec::with_capacity(total);
    let mut dphi = Vec::with_capacity(total);
    for i in (1..=n_back).rev() {
        s.push(s_back[i]);
        phi.push(phi_back[i]);
        dphi.push(dphi_back[i]);
    }
    for i in 0..=n_fwd {
        s.push(s_fwd[i]);
        phi.push(phi_fwd[i]);
        dphi.push(dphi_fwd[i]);
    }

    // Measured ℓ: r^{d-2} Z = e^{(d-3)s} φ(s) at the far end.
    let ell = (decay * s1).exp() * phi_fwd[n_fwd];
    Ok(StationaryProfile::from_samples(
        d, p, s, phi, dphi, x0, 1.0, ell, forward_rate,
    ))
}

/// Least-squares slope of y against x.
fn slope(pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len() as f64;
    if pairs.len() < 2 {
        return f64::NAN;
    }
    let sx: f64 = pairs.iter().map(|p| p.0).sum();
    let sy: f64 = pairs.iter().map(|p| p.1).sum();
    let sxx: f64 = pairs.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pairs.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Max interior relative residual of Z'' + (d-1)/r Z' + |Z|^{p-1} Z with
/// derivatives from fourth-order differences in log radius.
///
/// Near the singularity the profile oscillates, so |Z| passes through zero
/// where |Z''| peaks; the residual is therefore normalized by the local term
/// magnitude max(|Z''|, (d-1)|Z'|/r, |Z|^p) with a unit floor.
pub fn elliptic_residual(profile: &StationaryProfile) -> f64 {
    elliptic_residual_on(profile, f64::NEG_INFINITY, f64::INFINITY)
}

/// Residual restricted to log-radius range [s_lo, s_hi].
pub fn elliptic_residual_on(profile: &StationaryProfile, s_lo: f64, s_hi: f64) -> f64 {
    let n = profile.s.len();
    if n < 5 {
        return f64::NAN;
    }
    let ds = profile.ds();
    let d = profile.d as f64;
    let p = profile.p as i32;
    let mut worst: f64 = 0.0;
    for i in 2..n - 2 {
        if profile.s[i] < s_lo || profile.s[i] > s_hi {
            continue;
        }
        let z = &profile.z;
        let zs = (-z[i + 2] + 8.0 * z[i + 1] - 8.0 * z[i - 1] + z[i - 2]) / (12.0 * ds);
        let zss = (-z[i + 2] + 16.0 * z[i + 1] - 30.0 * z[i] + 16.0 * z[i - 1] - z[i - 2])
            / (12.0 * ds * ds);
        let r = profile.r[i];
        let zr = zs / r;
        let zrr = (zss - zs) / (r * r);
        let nl = z[i].abs().powi(p - 1) * z[i];
        let res = zrr + (d - 1.0) / r * zr + nl;
        let scale = 1.0f64
            .max(zrr.abs())
            .max(((d - 1.0) / r * zr).abs())
            .max(nl.abs());
        worst = worst.max(res.abs() / scale);
    }
    worst
}

/// Tail fit: ℓ = extrapolated limit of r^{d-2} Z and the exponential rate of
/// the correction, reported as the power of r (expected d - p(d-2)).
pub fn fit_tail(profile: &StationaryProfile) -> Result<(f64, f64)> {
    let decay = profile.d as f64 - 3.0;
    let s_hi = *profile.s.last().unwrap();
    if s_hi.exp() < 10.0 {
        return Err(Error::RangeError("profile must extend to r >= 10".into()));
    }
    if profile.phi.iter().all(|v| *v == 0.0) {
        return Ok((0.0, f64::NAN));
    }
    let f = |s: f64, phi: f64| (decay * s).exp() * phi;
    // Aitken extrapolation of f(s) = ℓ + C e^{ρ s} from three spaced samples.
    let ds = profile.ds();
    let stride = (1.0 / ds).round().max(1.0) as usize;
    let n = profile.s.len();
    let (i3, i2, i1) = (n - 1, n - 1 - stride, n - 1 - 2 * stride);
    let f1 = f(profile.s[i1], profile.phi[i1]);
    let f2 = f(profile.s[i2], profile.phi[i2]);
    let f3 = f(profile.s[i3], profile.phi[i3]);
    let q = (f3 - f2) / (f2 - f1);
    let ell = if q.is_finite() && q.abs() < 1.0 && (f2 - f1).abs() > 0.0 {
        f3 + (f3 - f2) * q / (1.0 - q)
    } else {
        f3
    };
    // Log-log slope of |f(s) - ℓ| over a window of moderate s, where the
    // correction is above integrator noise.
    let mut pairs = Vec::new();
    for (i, &s) in profile.s.iter().enumerate() {
        if s < 0.0 || s > 1.2 {
            continue;
        }
        let corr = (f(s, profile.phi[i]) - ell).abs();
        if corr > 1e-13 * ell.abs().max(1e-300) {
            pairs.push((s, corr.ln()));
        }
    }
    if pairs.len() < 4 {
        return Err(Error::RangeError("tail correction below noise floor".into()));
    }
    // log-log slope of |r^{d-2} Z - ℓ| against r, expected d - p(d-2).
    let rate = slope(&pairs);
    Ok((ell, rate))
}

/// Singularity certificate near r = 0.
///
/// Backward in s the trajectory oscillates with growing amplitude (the flow is
/// anti-damped toward the origin), so the no-decay certificate is a windowed
/// amplitude: over every unit s-window near s_min, max |φ e^{-as}| stays above
/// a positive floor.
#[derive(Debug, Clone, Serialize)]
pub struct SingularityReport {
    /// Curve s ↦ φ(s) e^{-a s} with a = (p-3)/(p+1), near s_min.
    pub curve: Vec<(f64, f64)>,
    /// Smallest unit-window amplitude of |φ e^{-as}| over the reported range.
    pub floor: f64,
    /// ∫_ε^1 |Z|^{q_p} r^{d-1} dr for ε spanning three decades.
    pub lq_trend: Vec<(f64, f64)>,
    /// Increasing without saturation.
    pub diverging: bool,
    pub trivial: bool,
}

pub fn singularity_diagnostic(profile: &StationaryProfile) -> Result<SingularityReport> {
    let s_min = profile.s[0];
    if s_min > -8.0 {
        return Err(Error::RangeError(format!(
            "diagnostic needs s_min <= -8, got {s_min}"
        )));
    }
    if profile.phi.iter().all(|v| *v == 0.0) {
        return Ok(SingularityReport {
            curve: Vec::new(),
            floor: 0.0,
            lq_trend: Vec::new(),
            diverging: false,
            trivial: true,
        });
    }
    let a = (profile.p as f64 - 3.0) / (profile.p as f64 + 1.0);
    let window = s_min + 3.0;
    let curve: Vec<(f64, f64)> = profile
        .s
        .iter()
        .zip(&profile.phi)
        .filter(|(&s, _)| s <= window)
        .map(|(&s, &f)| (s, f * (-a * s).exp()))
        .collect();
    // Windowed amplitude floor over unit s-intervals.
    let mut floor = f64::INFINITY;
    let mut lo = s_min;
    while lo + 1.0 <= window + 1e-12 {
        let amp = curve
            .iter()
            .filter(|(s, _)| *s >= lo && *s < lo + 1.0)
            .map(|(_, v)| v.abs())
            .fold(0.0f64, f64::max);
        floor = floor.min(amp);
        lo += 1.0;
    }

    // ∫_ε^1 |Z|^{q_p} r^{d-1} dr = ∫_{ln ε}^0 |Z|^{q_p} e^{d s} ds by trapezoid.
    let q_p = profile.d as f64 * (profile.p as f64 - 1.0) / 2.0;
    let ds = profile.ds();
    let integrand: Vec<f64> = profile
        .s
        .iter()
        .zip(&profile.z)
        .map(|(&s, &z)| z.abs().powf(q_p) * (profile.d as f64 * s).exp())
        .collect();
    let upper = profile.s.iter().position(|&s| s >= 0.0).unwrap_or(profile.s.len() - 1);
    let mut lq_trend = Vec::new();
    for dec in 0..4 {
        let eps = 10.0f64.powi(-(dec + 1));
        let s_lo = eps.ln();
        if s_lo < s_min {
            break;
        }
        let lower = profile.s.iter().position(|&s| s >= s_lo).unwrap();
        let mut acc = 0.0;
        for i in lower..upper {
            acc += 0.5 * ds * (integrand[i] + integrand[i + 1]);
        }
        lq_trend.push((eps, acc));
    }
    let mut diverging = lq_trend.len() >= 3;
    for w in lq_trend.windows(2) {
        if w[1].1 <= w[0].1 {
            diverging = false;
        }
    }
    if lq_trend.len() >= 3 {
        let first = lq_trend[1].1 - lq_trend[0].1;
        let last = lq_trend[lq_trend.len() - 1].1 - lq_trend[lq_trend.len() - 2].1;
        if last < 0.5 * first {
            diverging = false;
        }
    }
    Ok(SingularityReport { curve, floor, lq_trend, diverging, trivial: false })
}

/// Rescale Z_λ(r) = λ^{-2/(p-1)} Z(r/λ); on the log grid this is an exact
/// relabeling s → s + ln λ with φ → λ^{1-2/(p-1)} φ.
pub fn rescale(profile: &StationaryProfile, lam: f64) -> Result<StationaryProfile> {
    if !(lam > 0.0) {
        return Err(Error::InvalidParams(format!("scale λ = {lam} must be positive")));
    }
    let a_p = 2.0 / (profile.p as f64 - 1.0);
    let shift = lam.ln();
    let factor = lam.powf(1.0 - a_p);
    let s: Vec<f64> = profile.s.iter().map(|v| v + shift).collect();
    let phi: Vec<f64> = profile.phi.iter().map(|v| factor * v).collect();
    let dphi: Vec<f64> = profile.dphi.iter().map(|v| factor * v).collect();
    let ell = profile.ell * lam.powf(profile.d as f64 - 2.0 - a_p);
    Ok(StationaryProfile::from_samples(
        profile.d,
        profile.p,
        s,
        phi,
        dphi,
        profile.x0,
        profile.lam * lam,
        ell,
        profile.forward_rate,
    ))
}
