//! Independent reference solutions used to validate the variational solver:
//! the p=2 eigen-ODE on ball and annulus (shooting), the closed-form Sobolev
//! constant, the instanton quotient for the critical-exponent bound, and the
//! 1D interval extremal problem.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::error::Error;
use crate::fields::Field;
use crate::geometry::{ball_volume, gamma_half, sphere_measure, Grid, GridKind};
use crate::Result;

/// Which domain a radial eigenmode belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadialDomain {
    Ball,
    Annulus,
}

/// First eigenmode with angular index 1 of the Neumann problem, as a radial
/// profile: g solves g″ + (N−1)/r g′ + (Λ₂ − (N−1)/r²) g = 0 with g′(1) = 0,
/// regular at r=0 (ball) or g′(ρ)=0 (annulus). Normalized to max g = 1.
#[derive(Debug, Clone)]
pub struct RadialMode {
    pub lambda2: f64,
    pub domain: RadialDomain,
    pub dim: usize,
    pub inner_radius: f64,
    pub r: Vec<f64>,
    pub g: Vec<f64>,
    pub gprime: Vec<f64>,
}

impl RadialMode {
    /// Linear interpolation of the profile at radius `x`.
    pub fn eval(&self, x: f64) -> f64 {
        hermite(&self.r, &self.g, &self.gprime, x).0
    }

    pub fn eval_deriv(&self, x: f64) -> f64 {
        hermite(&self.r, &self.g, &self.gprime, x).1
    }

    /// Lift to the 2D chart as g(r)·cosθ, the eigenfunction of Eq-type
    /// separation in the ball/annulus chart.
    pub fn lift(&self, grid: Arc<Grid>) -> Result<Field> {
        if grid.kind == GridKind::Interval {
            return Err(Error::GridMismatch(
                "radial modes lift onto 2D charts only".into(),
            ));
        }
        Ok(Field::from_fn(grid, |r, t| self.eval(r) * t.cos()))
    }

    /// Profile dump as CSV columns (r, g, gprime).
    pub fn write_profile_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "r,g,gprime")?;
        for k in 0..self.r.len() {
            writeln!(
                w,
                "{:.17e},{:.17e},{:.17e}",
                self.r[k], self.g[k], self.gprime[k]
            )?;
        }
        Ok(())
    }
}

/// Cubic Hermite interpolation of (value, derivative) samples, returning the
/// interpolant and its derivative at x. Piecewise-linear interpolation is not
/// accurate enough here: kinks of size O(h²) become O(h²/Δr²) noise under the
/// discrete Laplacian of a lifted mode, which floors the Euler-Lagrange
/// residual on fine grids.
fn hermite(xs: &[f64], ys: &[f64], ds: &[f64], x: f64) -> (f64, f64) {
    let n = xs.len();
    if x <= xs[0] {
        return (ys[0] + (x - xs[0]) * ds[0], ds[0]);
    }
    if x >= xs[n - 1] {
        return (ys[n - 1] + (x - xs[n - 1]) * ds[n - 1], ds[n - 1]);
    }
    let mut lo = 0;
    let mut hi = n - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if xs[mid] <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let h = xs[hi] - xs[lo];
    let t = (x - xs[lo]) / h;
    let (t2, t3) = (t * t, t * t * t);
    let value = (2.0 * t3 - 3.0 * t2 + 1.0) * ys[lo]
        + (t3 - 2.0 * t2 + t) * h * ds[lo]
        + (-2.0 * t3 + 3.0 * t2) * ys[hi]
        + (t3 - t2) * h * ds[hi];
    let deriv = (6.0 * t2 - 6.0 * t) * ys[lo] / h
        + (3.0 * t2 - 4.0 * t + 1.0) * ds[lo]
        + (-6.0 * t2 + 6.0 * t) * ys[hi] / h
        + (3.0 * t2 - 2.0 * t) * ds[hi];
    (value, deriv)
}

/// RK4 integration of the mode ODE from (r0, g0, h0) to r=1, storing the
/// trajectory. Returns (r, g, g′) samples.
fn integrate_mode(
    n: usize,
    lambda: f64,
    r0: f64,
    g0: f64,
    h0: f64,
    steps: usize,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let nm1 = (n - 1) as f64;
    let rhs = |r: f64, g: f64, h: f64| -> (f64, f64) {
        (h, -nm1 / r * h - (lambda - nm1 / (r * r)) * g)
    };
    let dt = (1.0 - r0) / steps as f64;
    let mut r = r0;
    let mut g = g0;
    let mut h = h0;
    let mut rs = Vec::with_capacity(steps + 1);
    let mut gs = Vec::with_capacity(steps + 1);
    let mut hs = Vec::with_capacity(steps + 1);
    rs.push(r);
    gs.push(g);
    hs.push(h);
    for _ in 0..steps {
        let (k1g, k1h) = rhs(r, g, h);
        let (k2g, k2h) = rhs(r + dt / 2.0, g + dt / 2.0 * k1g, h + dt / 2.0 * k1h);
        let (k3g, k3h) = rhs(r + dt / 2.0, g + dt / 2.0 * k2g, h + dt / 2.0 * k2h);
        let (k4g, k4h) = rhs(r + dt, g + dt * k3g, h + dt * k3h);
        g += dt / 6.0 * (k1g + 2.0 * k2g + 2.0 * k3g + k4g);
        h += dt / 6.0 * (k1h + 2.0 * k2h + 2.0 * k3h + k4h);
        r += dt;
        rs.push(r);
        gs.push(g);
        hs.push(h);
    }
    (rs, gs, hs)
}

const SHOOT_STEPS: usize = 4000;

/// Bisect the first positive root of `shoot(Λ) = g′(1)`.
fn first_eigenvalue(
    shoot: &dyn Fn(f64) -> f64,
    lam_start: f64,
    lam_step: f64,
    tol: f64,
) -> Result<f64> {
    let mut lam_lo = lam_start;
    let mut f_lo = shoot(lam_lo);
    let mut lam_hi = lam_lo;
    let mut bracketed = false;
    for _ in 0..10_000 {
        lam_hi += lam_step;
        let f_hi = shoot(lam_hi);
        if f_lo.signum() != f_hi.signum() {
            bracketed = true;
            break;
        }
        lam_lo = lam_hi;
        f_lo = f_hi;
    }
    if !bracketed {
        return Err(Error::Numerical(
            "no sign change of g'(1) found while scanning the spectral parameter".into(),
        ));
    }
    let mut lo = lam_lo;
    let mut hi = lam_hi;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if shoot(mid).signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// First angular-index-1 Neumann eigenvalue of the unit ball in R^N, with
/// its radial profile, by shooting from the regular (Frobenius g ~ r)
/// behavior at the origin.
pub fn neumann_mode_ball(n: usize, tol: f64) -> Result<RadialMode> {
    if n < 2 {
        return Err(Error::UnsupportedDimension(n));
    }
    let delta = 1e-6;
    let shoot = |lam: f64| -> f64 {
        let (_, _, hs) = integrate_mode(n, lam, delta, delta, 1.0, SHOOT_STEPS);
        *hs.last().unwrap()
    };
    let lambda2 = first_eigenvalue(&shoot, 1e-3, 0.5, tol)?;
    let (r, mut g, mut h) = integrate_mode(n, lambda2, delta, delta, 1.0, SHOOT_STEPS);
    let gmax = g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for v in g.iter_mut() {
        *v /= gmax;
    }
    for v in h.iter_mut() {
        *v /= gmax;
    }
    Ok(RadialMode {
        lambda2,
        domain: RadialDomain::Ball,
        dim: n,
        inner_radius: 0.0,
        r,
        g,
        gprime: h,
    })
}

/// Annulus analogue: shooting from g(ρ)=1, g′(ρ)=0 to g′(1)=0.
pub fn neumann_mode_annulus(n: usize, rho: f64, tol: f64) -> Result<RadialMode> {
    if n < 2 {
        return Err(Error::UnsupportedDimension(n));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Parameter(format!(
            "annulus inner radius must lie in (0,1), got {rho}"
        )));
    }
    let shoot = |lam: f64| -> f64 {
        let (_, _, hs) = integrate_mode(n, lam, rho, 1.0, 0.0, SHOOT_STEPS);
        *hs.last().unwrap()
    };
    let lambda2 = first_eigenvalue(&shoot, 1e-3, 0.25, tol)?;
    let (r, mut g, mut h) = integrate_mode(n, lambda2, rho, 1.0, 0.0, SHOOT_STEPS);
    let gmax = g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for v in g.iter_mut() {
        *v /= gmax;
    }
    for v in h.iter_mut() {
        *v /= gmax;
    }
    Ok(RadialMode {
        lambda2,
        domain: RadialDomain::Annulus,
        dim: n,
        inner_radius: rho,
        r,
        g,
        gprime: h,
    })
}

/// Maximum over the radial interval of f(r) = r^N g′(r) − r^{N−1} g(r);
/// expected strictly negative away from r=0 for the ball mode.
pub fn f_monotonicity(mode: &RadialMode) -> Result<f64> {
    if mode.domain != RadialDomain::Ball {
        return Err(Error::Parameter(
            "f-monotonicity applies to the ball mode".into(),
        ));
    }
    let n = mode.dim as i32;
    let mut max = f64::NEG_INFINITY;
    for k in 1..mode.r.len() {
        let r = mode.r[k];
        let f = r.powi(n) * mode.gprime[k] - r.powi(n - 1) * mode.g[k];
        max = max.max(f);
    }
    Ok(max)
}

/// Best Sobolev constant S = π N(N−2) (Γ(N/2)/Γ(N))^{2/N} for N ≥ 3.
pub fn sobolev_constant(n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::Parameter(format!(
            "the Sobolev constant needs N >= 3, got N = {n}"
        )));
    }
    let gamma_n: f64 = (1..n).map(|k| k as f64).product(); // Γ(N) = (N−1)!
    let ratio = gamma_half(n as u32) / gamma_n;
    Ok(PI * (n * (n - 2)) as f64 * ratio.powf(2.0 / n as f64))
}

/// Parameters of the instanton test-function computation.
#[derive(Debug, Clone, Serialize)]
pub struct InstantonSpec {
    /// Dimension N ≥ 3.
    pub n: usize,
    /// Concentration scale ε > 0.
    pub eps: f64,
    /// Radial quadrature resolution (number of graded intervals).
    pub resolution: usize,
}

impl InstantonSpec {
    pub fn new(n: usize, eps: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::Parameter(format!(
                "instantons need N >= 3, got N = {n}"
            )));
        }
        if eps <= 0.0 {
            return Err(Error::Parameter(format!("eps must be positive, got {eps}")));
        }
        Ok(InstantonSpec {
            n,
            eps,
            resolution: 4000,
        })
    }
}

/// Area of the angular section at chord distance s from a boundary point:
/// A(s) = ω_{N−2} ∫₀^{arccos(s/2)} sin^{N−2}α dα, so that for radial f about
/// x₀ ∈ ∂B, ∫_B f(|x−x₀|) dx = ∫₀² f(s) s^{N−1} A(s) ds.
fn boundary_section(n: usize, s: f64) -> f64 {
    let a0 = (s / 2.0).clamp(-1.0, 1.0).acos();
    match n {
        3 => 2.0 * PI * (1.0 - s / 2.0),
        4 => 2.0 * PI * (a0 - a0.sin() * a0.cos()),
        _ => {
            // Simpson on the angular integral for general N
            let m = 64;
            let h = a0 / m as f64;
            let f = |a: f64| a.sin().powi(n as i32 - 2);
            let mut acc = f(0.0) + f(a0);
            for k in 1..m {
                acc += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
            }
            sphere_measure(n - 2) * acc * h / 3.0
        }
    }
}

/// Integrate a radial profile about a boundary point over the ball with a
/// geometrically graded grid resolving scales down to `s_min`.
fn boundary_radial_integral(
    n: usize,
    f: &dyn Fn(f64) -> f64,
    s_min: f64,
    intervals: usize,
) -> f64 {
    // grading: s_k = s_min · q^k up to 2, preceded by one flat cell [0, s_min]
    let q = (2.0 / s_min).powf(1.0 / intervals as f64);
    let weight = |s: f64| f(s) * s.powi(n as i32 - 1) * boundary_section(n, s);
    // leading cell: integrand ~ s^{N-1}, use the midpoint value
    let mut total = weight(s_min / 2.0) * s_min;
    let mut a = s_min;
    for _ in 0..intervals {
        let b = (a * q).min(2.0);
        // 3-point Simpson per graded interval
        let m = 0.5 * (a + b);
        total += (b - a) / 6.0 * (weight(a) + 4.0 * weight(m) + weight(b));
        a = b;
    }
    total
}

fn instanton_quotient_at(spec: &InstantonSpec, intervals: usize) -> f64 {
    let n = spec.n;
    let eps = spec.eps;
    let nf = n as f64;
    let amp = (nf * (nf - 2.0) * eps * eps).powf((nf - 2.0) / 4.0);
    let u = move |s: f64| amp / (eps * eps + s * s).powf((nf - 2.0) / 2.0);
    let grad2 = move |s: f64| {
        let du = (nf - 2.0) * amp * s / (eps * eps + s * s).powf(nf / 2.0);
        du * du
    };
    let p_crit = 2.0 * nf / (nf - 2.0);
    let s_min = eps * 1e-4;
    let vol = ball_volume(n);
    let a_eps = boundary_radial_integral(n, &u, s_min, intervals) / vol;
    let energy = boundary_radial_integral(n, &grad2, s_min, intervals);
    let lp = boundary_radial_integral(n, &|s| (u(s) - a_eps).abs().powf(p_crit), s_min, intervals);
    energy / lp.powf(2.0 / p_crit)
}

/// Quotient ‖∇v_ε‖₂²/‖v_ε‖_{2*}² of the recentered boundary instanton
/// v_ε = u_ε − a_ε over the unit ball; expected strictly below S/2^{2/N}.
pub fn instanton_quotient(spec: &InstantonSpec) -> Result<f64> {
    if spec.n < 3 {
        return Err(Error::Parameter(format!(
            "instantons need N >= 3, got N = {}",
            spec.n
        )));
    }
    if spec.eps <= 0.0 {
        return Err(Error::Parameter("eps must be positive".into()));
    }
    let fine = instanton_quotient_at(spec, spec.resolution);
    let coarse = instanton_quotient_at(spec, spec.resolution / 2);
    let drift = (fine - coarse).abs() / fine.abs();
    if drift > 1e-4 {
        return Err(Error::Numerical(format!(
            "instanton quadrature not resolved: half-resolution drift {drift:.2e} \
             (eps = {} too small for resolution {})",
            spec.eps, spec.resolution
        )));
    }
    Ok(fine)
}

/// Cartesian-grid cross-check of the instanton quotient (N = 3 only):
/// uniform cubic cells with centers inside the ball. Much less accurate than
/// the graded radial quadrature; used only to validate it.
pub fn instanton_quotient_cartesian(spec: &InstantonSpec, cells_per_axis: usize) -> Result<f64> {
    if spec.n != 3 {
        return Err(Error::Parameter(
            "the Cartesian cross-check is implemented for N = 3".into(),
        ));
    }
    let eps = spec.eps;
    let amp = (3.0 * eps * eps).powf(0.25);
    let h = 2.0 / cells_per_axis as f64;
    let x0 = [0.0, 0.0, 1.0];
    let mut mass = 0.0;
    let mut vol = 0.0;
    let mut energy = 0.0;
    let mut centers: Vec<(f64, f64)> = Vec::new(); // (s², cell volume) pairs
    for ix in 0..cells_per_axis {
        let x = -1.0 + (ix as f64 + 0.5) * h;
        for iy in 0..cells_per_axis {
            let y = -1.0 + (iy as f64 + 0.5) * h;
            for iz in 0..cells_per_axis {
                let z = -1.0 + (iz as f64 + 0.5) * h;
                if x * x + y * y + z * z >= 1.0 {
                    continue;
                }
                let s2 = (x - x0[0]).powi(2) + (y - x0[1]).powi(2) + (z - x0[2]).powi(2);
                let d = eps * eps + s2;
                let cellv = h * h * h;
                mass += amp / d.sqrt() * cellv;
                let du = amp * s2.sqrt() / d.powf(1.5);
                energy += du * du * cellv;
                vol += cellv;
                centers.push((s2, cellv));
            }
        }
    }
    let a_eps = mass / vol;
    let mut lp = 0.0;
    for (s2, cellv) in centers {
        let v = amp / (eps * eps + s2).sqrt() - a_eps;
        lp += v.abs().powi(6) * cellv;
    }
    Ok(energy / lp.powf(1.0 / 3.0))
}

/// Result of the 1D interval anchor problem.
#[derive(Debug)]
pub struct IntervalExtremal {
    pub lambda: f64,
    pub u: Field,
    /// ‖u + u∘σ‖₂ / ‖u‖₂ with σ the reflection x ↦ −x; 0 for odd u.
    pub oddness_defect: f64,
    pub converged: bool,
}

/// Minimize ‖u′‖₂²/‖u‖_p² with ∫u = 0 on (−1,1), multi-start with
/// asymmetric perturbations, and measure the oddness of the minimizer.
pub fn interval_extremal(p: f64, m: usize, seed: u64) -> Result<IntervalExtremal> {
    if p < 2.0 {
        return Err(Error::Parameter(format!(
            "interval problem needs p >= 2, got {p}"
        )));
    }
    use crate::geometry::{reflection_permutation, HalfSpace};
    use crate::solver::{minimize, Domain, GridSpec, InitMode, ProblemSpec, Subspace};

    let mut best: Option<crate::solver::SolveResult> = None;
    // one smooth odd start plus asymmetric random restarts
    for k in 0..4 {
        let spec = ProblemSpec {
            grid: GridSpec {
                domain: Domain::Interval,
                dim: 1,
                m_r: m,
                m_theta: 1,
            },
            p,
            subspace: Subspace::Full,
            init: if k == 0 {
                InitMode::Oracle
            } else {
                InitMode::RandomSeeded
            },
            tol_quotient: 1e-11,
            // near the oddness transition the descent converges slowly; the
            // residual floor there sits just above 1e-8
            tol_residual: 1e-7,
            max_iters: 30_000,
            seed: seed.wrapping_add(k),
        };
        let res = minimize(&spec)?;
        let better = match &best {
            None => true,
            Some(b) => res.converged && (!b.converged || res.lambda < b.lambda - 1e-12),
        };
        if better {
            best = Some(res);
        }
    }
    let best = best.expect("at least one start ran");
    let refl = reflection_permutation(&best.u.grid, HalfSpace::PositiveHalfLine)?;
    let reflected = best.u.compose(&refl);
    let norm = crate::fields::lp_norm(&best.u, 2.0)?;
    let sum = Field::new(
        best.u.grid.clone(),
        best.u
            .values
            .iter()
            .zip(&reflected.values)
            .map(|(a, b)| a + b)
            .collect(),
    )?;
    let defect = crate::fields::lp_norm(&sum, 2.0)? / norm;
    Ok(IntervalExtremal {
        lambda: best.lambda,
        u: best.u,
        oddness_defect: defect,
        converged: best.converged,
    })
}
