//! Minimization of the quotient ‖∇u‖₂²/‖u‖_p² over the zero-average space
//! and its restricted subspaces, by preconditioned projected gradient
//! descent; continuation in p; and the search for the antisymmetry-breaking
//! exponent.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::fields::{
    apply_laplacian, dirichlet_energy, inner_l2, lp_norm, project_zero_average, Field,
};
use crate::geometry::{
    build_annulus_grid, build_ball_grid, build_interval_grid, reflection_permutation, Grid,
    GridKind, HalfSpace, ReflectionPermutation, Side,
};
use crate::linalg::NeumannSolver;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Domain {
    Ball,
    Annulus { rho: f64 },
    Interval,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridSpec {
    pub domain: Domain,
    /// Ambient dimension N (1 for the interval; 2 selects the full disc).
    pub dim: usize,
    pub m_r: usize,
    pub m_theta: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<Arc<Grid>> {
        let grid = match self.domain {
            Domain::Ball => build_ball_grid(self.dim, self.m_r, self.m_theta)?,
            Domain::Annulus { rho } => {
                build_annulus_grid(self.dim, rho, self.m_r, self.m_theta)?
            }
            Domain::Interval => build_interval_grid(self.m_r)?,
        };
        Ok(Arc::new(grid))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subspace {
    /// All zero-average fields (H_za); the quotient value is Λ_p.
    Full,
    /// Antisymmetric under the reflection across the hyperplane
    /// perpendicular to the chart axis (Λ′_p).
    Antisymmetric,
    /// Zero on and below the equatorial line; Dirichlet problem on the
    /// half-domain (Λ̂_p).
    DirichletHalf,
    /// Angular averages only: radial candidates, used to construct the
    /// radial critical point probed by the second-variation check.
    Radial,
}

#[derive(Debug, Clone)]
pub enum InitMode {
    /// The p=2 shooting-oracle mode g(r)cosθ plus 1% seeded noise
    /// (interval: sin(πx/2) plus noise).
    Oracle,
    /// Seeded random noise.
    RandomSeeded,
    /// A caller-supplied starting field on the same grid.
    Supplied(Field),
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub grid: GridSpec,
    pub p: f64,
    pub subspace: Subspace,
    pub init: InitMode,
    /// Relative quotient stagnation tolerance over the stagnation window.
    pub tol_quotient: f64,
    /// Scaled Euler-Lagrange residual tolerance.
    pub tol_residual: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl ProblemSpec {
    pub fn config_json(&self) -> serde_json::Value {
        serde_json::json!({
            "grid": self.grid,
            "p": self.p,
            "subspace": self.subspace,
            "init": match &self.init {
                InitMode::Oracle => "oracle",
                InitMode::RandomSeeded => "random-seeded",
                InitMode::Supplied(_) => "supplied",
            },
            "tol_quotient": self.tol_quotient,
            "tol_residual": self.tol_residual,
            "max_iters": self.max_iters,
            "seed": self.seed,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.p < 2.0 {
            return Err(Error::Parameter(format!(
                "exponent p must satisfy p >= 2, got {}",
                self.p
            )));
        }
        if self.grid.domain != Domain::Interval && self.grid.dim >= 3 {
            let p_crit = 2.0 * self.grid.dim as f64 / (self.grid.dim as f64 - 2.0);
            if self.p > p_crit + 1e-12 {
                return Err(Error::Parameter(format!(
                    "p = {} exceeds the critical exponent 2* = {p_crit} for N = {}",
                    self.p, self.grid.dim
                )));
            }
        }
        if self.subspace == Subspace::DirichletHalf
            && !(self.grid.domain == Domain::Ball && self.grid.dim == 2)
        {
            return Err(Error::SymmetryMismatch(
                "the Dirichlet half-domain subspace is supported on the disc".into(),
            ));
        }
        if self.subspace == Subspace::Radial && self.grid.domain == Domain::Interval {
            return Err(Error::SymmetryMismatch(
                "the radial subspace needs a 2D chart".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct SolveResult {
    /// Minimizer, normalized to ‖∇u‖₂ = 1 and axis-aligned (θ = 0).
    pub u: Field,
    /// Λ_p (or Λ′_p / Λ̂_p per subspace): the achieved quotient.
    pub lambda: f64,
    pub lambda_p: f64,
    pub mu_p: f64,
    pub residual_l2: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Flag raised when ‖u‖_∞ grows past the concentration ceiling
    /// (near-critical p for N ≥ 3).
    pub concentration_flag: bool,
    /// Quotient value at each accepted descent step.
    pub trace: Vec<f64>,
}

impl SolveResult {
    pub fn summary_json(&self, spec: &ProblemSpec) -> serde_json::Value {
        serde_json::json!({
            "config": spec.config_json(),
            "lambda": self.lambda,
            "lambda_p": self.lambda_p,
            "mu_p": self.mu_p,
            "residual_l2": self.residual_l2,
            "iterations": self.iterations,
            "converged": self.converged,
            "concentration_flag": self.concentration_flag,
        })
    }
}

/// The subspace projection applied after every solver step. Projections may
/// be enriched during the run by symmetrization restarts (`extra` holds
/// reflections to symmetrize or antisymmetrize against).
struct Projector {
    grid: Arc<Grid>,
    subspace: Subspace,
    /// Reflection for the antisymmetric subspace / the Dirichlet mask side.
    refl: Option<ReflectionPermutation>,
    /// Dirichlet-half free-node mask.
    free: Option<Vec<bool>>,
    /// (reflection, sign): +1 symmetrize, −1 antisymmetrize; applied in order.
    extra: Vec<(ReflectionPermutation, f64)>,
}

impl Projector {
    fn new(grid: Arc<Grid>, subspace: Subspace) -> Result<Self> {
        let mut refl = None;
        let mut free = None;
        match subspace {
            Subspace::Antisymmetric => {
                let hs = match grid.kind {
                    GridKind::DiscFull => HalfSpace::DiscSector { angle: PI / 2.0 },
                    GridKind::BallAxisym | GridKind::AnnulusAxisym => HalfSpace::UpperEquator,
                    GridKind::Interval => HalfSpace::PositiveHalfLine,
                };
                refl = Some(reflection_permutation(&grid, hs)?);
            }
            Subspace::DirichletHalf => {
                let r = reflection_permutation(&grid, HalfSpace::DiscSector { angle: 0.0 })?;
                free = Some(
                    (0..grid.node_count())
                        .map(|k| r.side[k] == Side::Interior)
                        .collect(),
                );
                refl = Some(r);
            }
            _ => {}
        }
        Ok(Projector {
            grid,
            subspace,
            refl,
            free,
            extra: Vec::new(),
        })
    }

    fn apply(&self, x: &mut Vec<f64>) {
        match self.subspace {
            Subspace::Full => zero_mean(&self.grid, x),
            Subspace::Antisymmetric => {
                let refl = self.refl.as_ref().unwrap();
                antisymmetrize(refl, x);
            }
            Subspace::DirichletHalf => {
                let free = self.free.as_ref().unwrap();
                for (v, &f) in x.iter_mut().zip(free) {
                    if !f {
                        *v = 0.0;
                    }
                }
            }
            Subspace::Radial => {
                angular_average(&self.grid, x);
                zero_mean(&self.grid, x);
            }
        }
        for (refl, sign) in &self.extra {
            let old = x.clone();
            for k in 0..x.len() {
                x[k] = 0.5 * (old[k] + sign * old[refl.sigma[k]]);
            }
        }
    }
}

fn zero_mean(grid: &Grid, x: &mut [f64]) {
    let vol: f64 = grid.weights.iter().sum();
    let mean: f64 = x
        .iter()
        .zip(&grid.weights)
        .map(|(v, w)| v * w)
        .sum::<f64>()
        / vol;
    for v in x.iter_mut() {
        *v -= mean;
    }
}

fn antisymmetrize(refl: &ReflectionPermutation, x: &mut Vec<f64>) {
    let old = x.clone();
    for k in 0..x.len() {
        x[k] = 0.5 * (old[k] - old[refl.sigma[k]]);
    }
}

fn angular_average(grid: &Grid, x: &mut [f64]) {
    let mt = grid.m_theta.max(1);
    for i in 0..grid.m_r {
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..mt {
            let k = i * mt + j;
            num += x[k] * grid.weights[k];
            den += grid.weights[k];
        }
        let avg = num / den;
        for j in 0..mt {
            x[i * mt + j] = avg;
        }
    }
}

fn initial_field(spec: &ProblemSpec, grid: &Arc<Grid>) -> Result<Field> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let base = match &spec.init {
        InitMode::Supplied(f) => {
            if f.values.len() != grid.node_count() {
                return Err(Error::GridMismatch(
                    "supplied initial field does not match the grid".into(),
                ));
            }
            f.clone()
        }
        InitMode::RandomSeeded => Field::new(
            grid.clone(),
            (0..grid.node_count()).map(|_| rng.gen::<f64>() - 0.5).collect(),
        )?,
        InitMode::Oracle => {
            let mut f = match grid.kind {
                GridKind::Interval => {
                    Field::from_fn(grid.clone(), |x, _| (PI * x / 2.0).sin())
                }
                _ => {
                    let mode = match spec.grid.domain {
                        Domain::Annulus { rho } => {
                            crate::oracles::neumann_mode_annulus(spec.grid.dim, rho, 1e-8)?
                        }
                        _ => crate::oracles::neumann_mode_ball(spec.grid.dim, 1e-8)?,
                    };
                    mode.lift(grid.clone())?
                }
            };
            // 1% seeded noise: avoids the radial saddle and the zero field
            // while biasing toward the p=2 branch
            let amp = 0.01 * f.linf();
            for v in f.values.iter_mut() {
                *v += amp * (rng.gen::<f64>() - 0.5);
            }
            f
        }
    };
    Ok(base)
}

/// Quotient on raw values (no zero-average requirement; used for all
/// subspaces including Dirichlet-half).
fn raw_quotient(u: &Field, p: f64) -> Result<f64> {
    let norm = lp_norm(u, p)?;
    if norm == 0.0 {
        return Err(Error::DegenerateInput("candidate vanished".into()));
    }
    Ok(dirichlet_energy(u) / (norm * norm))
}

/// Scaled EL residual valid for every subspace: for the Dirichlet half
/// problem μ_p = 0 and the residual is evaluated on free nodes only.
fn subspace_residual(u: &Field, p: f64, projector: &Projector) -> Result<(f64, f64, f64)> {
    let mut v = u.clone();
    v.scale(1.0 / dirichlet_energy(&v).sqrt());
    let quotient = raw_quotient(&v, p)?;
    let lambda_p = quotient.powf(p / 2.0);
    let grid = &v.grid;
    let dirichlet = projector.subspace == Subspace::DirichletHalf;
    let mu_p = if dirichlet {
        0.0
    } else {
        let signed: f64 = v
            .values
            .iter()
            .zip(&grid.weights)
            .map(|(x, w)| x.abs().powf(p - 2.0) * x * w)
            .sum();
        -(lambda_p / grid.volume()) * signed
    };
    let lap = apply_laplacian(&v);
    let mut res2 = 0.0;
    let mut force2 = 0.0;
    for k in 0..v.values.len() {
        if dirichlet && !projector.free.as_ref().unwrap()[k] {
            continue;
        }
        let force = lambda_p * v.values[k].abs().powf(p - 2.0) * v.values[k];
        let r = lap.values[k] - force - mu_p;
        res2 += r * r * grid.weights[k];
        force2 += force * force * grid.weights[k];
    }
    Ok((lambda_p, mu_p, (res2 / force2).sqrt()))
}

struct DescentState {
    u: Field,
    quotient: f64,
    trace: Vec<f64>,
    iterations: usize,
    concentration_flag: bool,
}

/// Run preconditioned projected descent from `u0` until stagnation+residual
/// or the iteration budget runs out. Returns the state and whether the
/// termination test passed.
fn descend(
    spec: &ProblemSpec,
    projector: &Projector,
    solver: &NeumannSolver,
    u0: Field,
    budget: usize,
    state: &mut DescentState,
) -> Result<bool> {
    let p = spec.p;
    let grid = u0.grid.clone();
    let normalize_p = |f: &mut Field| -> Result<()> {
        let n = lp_norm(f, p)?;
        if n == 0.0 {
            return Err(Error::DegenerateInput(
                "iterate vanished under projection".into(),
            ));
        }
        f.scale(1.0 / n);
        Ok(())
    };
    let mut u = u0;
    projector.apply(&mut u.values);
    normalize_p(&mut u)?;
    let mut quotient = raw_quotient(&u, p)?;
    let window = 10usize;
    let ceiling = 100.0 / grid.volume().powf(1.0 / p);
    let mut done = false;
    for _ in 0..budget {
        state.iterations += 1;
        // L² gradient of the quotient at ‖u‖_p = 1, up to the factor 2:
        // (−Δu) − R·|u|^{p−2}u, projected onto the subspace
        let lap = apply_laplacian(&u);
        let mut gvals = vec![0.0; u.values.len()];
        for k in 0..gvals.len() {
            let w = u.values[k].abs().powf(p - 2.0) * u.values[k];
            gvals[k] = lap.values[k] - quotient * w;
        }
        projector.apply(&mut gvals);
        let g = Field::new(grid.clone(), gvals)?;
        // precondition with the Neumann (or masked) inverse
        let mut d = solver.solve(&g, 1e-6, 4000)?;
        projector.apply(&mut d.values);
        let slope = inner_l2(&g, &d); // = a(d,d) ≥ 0
        if slope <= 0.0 {
            done = true; // gradient annihilated by the projection: stationary
        }
        // Armijo backtracking, factor ½, initial step 1
        let mut step = 1.0;
        let mut accepted = false;
        if !done {
            for _ in 0..50 {
                let mut trial = u.clone();
                for (t, dv) in trial.values.iter_mut().zip(&d.values) {
                    *t -= step * dv;
                }
                projector.apply(&mut trial.values);
                if normalize_p(&mut trial).is_err() {
                    step *= 0.5;
                    continue;
                }
                let q = raw_quotient(&trial, p)?;
                if q <= quotient - 1e-4 * step * slope {
                    u = trial;
                    quotient = q;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
        }
        state.trace.push(quotient);
        if u.linf() > ceiling {
            state.concentration_flag = true;
        }
        // termination: quotient stagnation over the window + small residual
        let n = state.trace.len();
        let stagnant = !accepted
            || (n > window
                && (state.trace[n - 1 - window] - state.trace[n - 1]).abs()
                    <= spec.tol_quotient * quotient);
        if stagnant {
            let (_, _, residual) = subspace_residual(&u, p, projector)?;
            if residual <= spec.tol_residual {
                done = true;
            } else if !accepted {
                // line search failed and the residual is still large: the
                // iteration cannot make further progress at this resolution
                break;
            }
        }
        if done {
            break;
        }
    }
    state.u = u;
    state.quotient = quotient;
    Ok(done)
}

/// Align the axis of the current iterate with θ = 0 (disc rotation /
/// axisym flip); fix the overall sign so the axis value is positive.
fn align_for_output(u: &Field, subspace: Subspace) -> Result<Field> {
    let mut out = match (u.grid.kind, subspace) {
        (GridKind::Interval, _) | (_, Subspace::Radial) | (_, Subspace::DirichletHalf) => {
            u.clone()
        }
        _ => crate::diagnostics::align_axis(u)?.0,
    };
    // deterministic sign: largest-|value| node positive
    let mut pick = 0.0_f64;
    for &v in &out.values {
        if v.abs() > pick.abs() {
            pick = v;
        }
    }
    if pick < 0.0 {
        out.scale(-1.0);
    }
    Ok(out)
}

/// Minimize the quotient per the spec. Descent runs in the requested
/// subspace; for the full subspace on a symmetric chart, a symmetrization
/// restart follows initial convergence: the iterate is axis-aligned and the
/// H_z (axis-mirror) and equatorial-antisymmetry symmetrizations are adopted
/// when they do not raise the quotient, after which descent resumes under
/// the enriched projection. The reported quotient is always the achieved
/// value of an admissible candidate in the requested subspace.
pub fn minimize(spec: &ProblemSpec) -> Result<SolveResult> {
    spec.validate()?;
    let grid = spec.grid.build()?;
    let mut projector = Projector::new(grid.clone(), spec.subspace)?;
    let solver = match &projector.free {
        Some(free) => NeumannSolver::with_mask(grid.clone(), free.clone())?,
        None => NeumannSolver::new(grid.clone()),
    };
    let u0 = initial_field(spec, &grid)?;
    let mut state = DescentState {
        u: u0.clone(),
        quotient: f64::INFINITY,
        trace: Vec::new(),
        iterations: 0,
        concentration_flag: false,
    };
    let mut converged = descend(
        spec,
        &projector,
        &solver,
        u0,
        spec.max_iters,
        &mut state,
    )?;

    // symmetrization restart (full subspace, 2D charts)
    if spec.subspace == Subspace::Full && grid.kind != GridKind::Interval {
        let aligned = align_for_output(&state.u, spec.subspace)?;
        let q_aligned = raw_quotient(&aligned, spec.p)?;
        let mut best = aligned;
        let mut best_q = q_aligned;
        let accept = 1.0 + 100.0 * spec.tol_quotient;
        // H_z: mirror symmetry about the axis line
        let mirrors: Vec<(HalfSpace, f64)> = match grid.kind {
            GridKind::DiscFull => vec![
                (HalfSpace::DiscSector { angle: 0.0 }, 1.0),
                (HalfSpace::DiscSector { angle: PI / 2.0 }, -1.0),
            ],
            _ => vec![(HalfSpace::UpperEquator, -1.0)],
        };
        for (hs, sign) in mirrors {
            let refl = reflection_permutation(&grid, hs)?;
            let mut cand = best.clone();
            for k in 0..cand.values.len() {
                cand.values[k] = 0.5 * (best.values[k] + sign * best.values[refl.sigma[k]]);
            }
            zero_mean(&grid, &mut cand.values);
            if cand.linf() == 0.0 {
                continue;
            }
            let q = raw_quotient(&cand, spec.p)?;
            if q <= best_q * accept {
                best = cand;
                best_q = q;
                projector.extra.push((refl, sign));
            }
        }
        if !projector.extra.is_empty() || best_q < state.quotient {
            let remaining = spec.max_iters.saturating_sub(state.iterations).max(200);
            converged = descend(spec, &projector, &solver, best, remaining, &mut state)?;
        }
    }

    let mut u = align_for_output(&state.u, spec.subspace)?;
    u.scale(1.0 / dirichlet_energy(&u).sqrt());
    if spec.subspace != Subspace::DirichletHalf {
        u = project_zero_average(&u); // exact re-projection after round-off
        u.scale(1.0 / dirichlet_energy(&u).sqrt());
    }
    let lambda = raw_quotient(&u, spec.p)?;
    let (lambda_p, mu_p, residual_l2) = subspace_residual(&u, spec.p, &projector)?;
    Ok(SolveResult {
        u,
        lambda,
        lambda_p,
        mu_p,
        residual_l2,
        iterations: state.iterations,
        converged: converged && residual_l2 <= spec.tol_residual,
        concentration_flag: state.concentration_flag,
        trace: state.trace,
    })
}

/// Solve a sequence of exponents with warm starts: each entry reuses the
/// previous minimizer as its initial field. Non-convergence is recorded
/// per entry and the sweep continues.
pub fn sweep_p(spec: &ProblemSpec, p_values: &[f64]) -> Result<Vec<SolveResult>> {
    let mut out = Vec::with_capacity(p_values.len());
    let mut warm: Option<Field> = None;
    for &p in p_values {
        let mut s = spec.clone();
        s.p = p;
        if let Some(w) = &warm {
            s.init = InitMode::Supplied(w.clone());
        }
        let res = minimize(&s)?;
        warm = Some(res.u.clone());
        out.push(res);
    }
    Ok(out)
}

/// Result of the antisymmetry-breaking search.
#[derive(Debug, Clone, Serialize)]
pub struct BreakResult {
    /// Smallest bracketed exponent where Λ′_p − Λ_p exceeds gap_tol.
    pub p_star: f64,
    /// All (p, Λ′_p − Λ_p) pairs probed.
    pub gap_table: Vec<(f64, f64)>,
}

/// Bisect for the smallest p where the antisymmetric infimum exceeds the
/// full infimum by more than `gap_tol`. Full-space solves are multi-start
/// (oracle init plus three random seeds, best quotient kept).
pub fn find_antisymmetry_break(
    spec: &ProblemSpec,
    p_lo: f64,
    p_hi: f64,
    gap_tol: f64,
) -> Result<BreakResult> {
    if spec.grid.dim != 2 || spec.grid.domain == Domain::Interval {
        return Err(Error::Parameter(
            "the antisymmetry-breaking search is defined on N=2 domains".into(),
        ));
    }
    if p_lo < 2.0 || p_hi <= p_lo {
        return Err(Error::Parameter(format!(
            "invalid bracket [{p_lo}, {p_hi}]"
        )));
    }
    let mut table: Vec<(f64, f64)> = Vec::new();
    let gap_at = |p: f64, table: &mut Vec<(f64, f64)>| -> Result<f64> {
        let mut best_full: Option<f64> = None;
        for k in 0..4 {
            let mut s = spec.clone();
            s.p = p;
            s.subspace = Subspace::Full;
            s.init = if k == 0 {
                InitMode::Oracle
            } else {
                InitMode::RandomSeeded
            };
            s.seed = spec.seed.wrapping_add(k);
            let r = minimize(&s)?;
            let cur = best_full.unwrap_or(f64::INFINITY);
            if r.lambda < cur {
                best_full = Some(r.lambda);
            }
        }
        let full = best_full.unwrap();
        let mut s = spec.clone();
        s.p = p;
        s.subspace = Subspace::Antisymmetric;
        s.init = InitMode::Oracle;
        let anti = minimize(&s)?.lambda;
        let gap = anti - full;
        table.push((p, gap));
        Ok(gap)
    };
    let g_lo = gap_at(p_lo, &mut table)?;
    let g_hi = gap_at(p_hi, &mut table)?;
    if g_lo - gap_tol >= 0.0 || g_hi - gap_tol < 0.0 {
        return Err(Error::Bracket {
            p_lo,
            p_hi,
            table,
        });
    }
    let mut lo = p_lo;
    let mut hi = p_hi;
    while hi - lo > 0.25 {
        let mid = 0.5 * (lo + hi);
        let g = gap_at(mid, &mut table)?;
        if g - gap_tol < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    table.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(BreakResult {
        p_star: hi,
        gap_table: table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disc_spec(p: f64, m: usize) -> ProblemSpec {
        ProblemSpec {
            grid: GridSpec {
                domain: Domain::Ball,
                dim: 2,
                m_r: m,
                m_theta: m,
            },
            p,
            subspace: Subspace::Full,
            init: InitMode::Oracle,
            tol_quotient: 1e-10,
            tol_residual: 1e-7,
            max_iters: 4000,
            seed: 7,
        }
    }

    #[test]
    fn disc_p2_matches_the_oracle() {
        let res = minimize(&disc_spec(2.0, 64)).unwrap();
        assert!(res.converged);
        let expect = crate::oracles::neumann_mode_ball(2, 1e-10).unwrap().lambda2;
        assert!(
            (res.lambda - expect).abs() / expect < 2e-3,
            "Λ = {}, oracle {expect}",
            res.lambda
        );
        // descent trace never increases
        for w in res.trace.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn validation_rejects_bad_specs() {
        let mut s = disc_spec(1.5, 32);
        assert!(matches!(minimize(&s), Err(Error::Parameter(_))));
        s = disc_spec(7.0, 32);
        s.grid.dim = 3;
        assert!(matches!(minimize(&s), Err(Error::Parameter(_))));
        s = disc_spec(3.0, 32);
        s.grid.domain = Domain::Interval;
        s.grid.dim = 1;
        s.subspace = Subspace::DirichletHalf;
        assert!(matches!(minimize(&s), Err(Error::SymmetryMismatch(_))));
    }

    #[test]
    fn reproducible_runs_are_bit_identical() {
        let mut s = disc_spec(3.0, 32);
        s.init = InitMode::RandomSeeded;
        let a = minimize(&s).unwrap();
        let b = minimize(&s).unwrap();
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.lambda.to_bits(), b.lambda.to_bits());
        assert_eq!(a.u.values, b.u.values);
    }

    #[test]
    fn antisymmetric_subspace_is_exactly_closed() {
        let mut s = disc_spec(3.0, 32);
        s.subspace = Subspace::Antisymmetric;
        let res = minimize(&s).unwrap();
        // Λ ≤ Λ′ and the result is exactly antisymmetric on the grid
        let full = minimize(&disc_spec(3.0, 32)).unwrap();
        assert!(full.lambda <= res.lambda * (1.0 + 1e-6));
        let refl = reflection_permutation(
            &res.u.grid,
            HalfSpace::DiscSector { angle: PI / 2.0 },
        )
        .unwrap();
        for k in 0..res.u.values.len() {
            let s = res.u.values[k] + res.u.values[refl.sigma[k]];
            assert!(s.abs() <= 1e-12, "not antisymmetric at node {k}: {s}");
        }
    }

    #[test]
    fn radial_subspace_produces_a_radial_critical_point() {
        let mut s = disc_spec(3.0, 32);
        s.subspace = Subspace::Radial;
        let res = minimize(&s).unwrap();
        assert!(res.converged, "residual {}", res.residual_l2);
        let g = &res.u.grid;
        for i in 0..g.m_r {
            let v0 = res.u.values[g.node(i, 0)];
            for j in 1..g.m_theta {
                assert!((res.u.values[g.node(i, j)] - v0).abs() <= 1e-12);
            }
        }
        // the radial value is strictly above the true minimum
        let full = minimize(&disc_spec(3.0, 32)).unwrap();
        assert!(res.lambda > full.lambda * 1.05);
    }

    #[test]
    fn dirichlet_half_solve_is_supported_on_the_disc() {
        let mut s = disc_spec(8.0, 32);
        s.subspace = Subspace::DirichletHalf;
        let res = minimize(&s).unwrap();
        assert!(res.lambda > 0.0);
        assert_eq!(res.mu_p, 0.0);
        // pinned nodes are exactly zero
        let refl = reflection_permutation(
            &res.u.grid,
            HalfSpace::DiscSector { angle: 0.0 },
        )
        .unwrap();
        for k in 0..res.u.values.len() {
            if refl.side[k] != Side::Interior {
                assert_eq!(res.u.values[k], 0.0);
            }
        }
    }

    #[test]
    fn interval_p2_matches_the_closed_form() {
        let s = ProblemSpec {
            grid: GridSpec {
                domain: Domain::Interval,
                dim: 1,
                m_r: 256,
                m_theta: 1,
            },
            p: 2.0,
            subspace: Subspace::Full,
            init: InitMode::Oracle,
            tol_quotient: 1e-11,
            tol_residual: 1e-8,
            max_iters: 8000,
            seed: 3,
        };
        let res = minimize(&s).unwrap();
        let expect = PI * PI / 4.0;
        assert!(
            (res.lambda - expect).abs() / expect < 1e-4,
            "Λ = {}",
            res.lambda
        );
    }

    #[test]
    fn sweep_warm_starts_and_records_everything() {
        let s = disc_spec(2.0, 32);
        let out = sweep_p(&s, &[2.0, 2.5, 3.0]).unwrap();
        assert_eq!(out.len(), 3);
        for r in &out {
            assert!(r.lambda > 0.0 && r.lambda.is_finite());
        }
    }
}
