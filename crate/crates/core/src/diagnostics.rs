//! Structural diagnostics for computed minimizers: axis detection, angular
//! monotonicity, axial-derivative positivity, nodal-domain counts,
//! antisymmetry defect and the separability (rank-1) defect, aggregated into
//! a single symmetry report.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::Error;
use crate::fields::{cartesian_partials, lp_norm, Field};
use crate::geometry::{reflection_permutation, GridKind, HalfSpace};
use crate::Result;

/// Detected symmetry axis in the chart plane.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Axis {
    /// Angle of e in the chart (disc: any grid angle; axisym: 0 or π).
    pub angle: f64,
    /// Unit vector (cos angle, sin angle) in the chart plane.
    pub e: [f64; 2],
    /// Nearest angular grid index.
    pub grid_index: usize,
    /// True when the first moment vanished and the boundary-max fallback was
    /// used (e.g. for radial fields, whose axis is not well defined).
    pub undefined: bool,
}

/// Locate the symmetry axis: primary method is the normalized first moment
/// m = ∫ u·x dx; fallback, when the moment vanishes, is the location of the
/// maximum of u on the outermost node row.
pub fn detect_axis(u: &Field) -> Result<Axis> {
    let g = &u.grid;
    if g.kind == GridKind::Interval {
        return Err(Error::GridMismatch("axis detection needs a 2D chart".into()));
    }
    if u.values.iter().all(|&v| v == u.values[0]) {
        return Err(Error::DegenerateInput("constant field has no axis".into()));
    }
    let mut mx = 0.0;
    let mut my = 0.0;
    let mut abs_mass = 0.0;
    for i in 0..g.m_r {
        for j in 0..g.m_theta {
            let k = g.node(i, j);
            let v = u.values[k] * g.weights[k];
            let (s, c) = g.theta[j].sin_cos();
            mx += v * g.r[i] * c;
            my += v * g.r[i] * s;
            abs_mass += u.values[k].abs() * g.weights[k];
        }
    }
    let axisym = g.kind != GridKind::DiscFull;
    let moment_norm = if axisym { mx.abs() } else { (mx * mx + my * my).sqrt() };
    let undefined = moment_norm < 1e-8 * abs_mass;
    let angle = if !undefined {
        if axisym {
            if mx >= 0.0 {
                0.0
            } else {
                PI
            }
        } else {
            my.atan2(mx).rem_euclid(2.0 * PI)
        }
    } else {
        // boundary-max fallback
        let i = g.m_r - 1;
        let mut best = (0usize, f64::NEG_INFINITY);
        for j in 0..g.m_theta {
            let v = u.values[g.node(i, j)];
            if v > best.1 {
                best = (j, v);
            }
        }
        if axisym {
            if best.0 < g.m_theta / 2 {
                0.0
            } else {
                PI
            }
        } else {
            g.theta[best.0]
        }
    };
    let grid_index = if axisym {
        if angle == 0.0 {
            0
        } else {
            g.m_theta - 1
        }
    } else {
        ((angle / g.dtheta).round() as usize) % g.m_theta
    };
    Ok(Axis {
        angle,
        e: [angle.cos(), angle.sin()],
        grid_index,
        undefined,
    })
}

/// Rotate a disc field by −k grid angles (node permutation), so that the
/// direction previously at grid angle k moves to θ = 0.
pub fn rotate_disc_field(u: &Field, k: usize) -> Result<Field> {
    let g = &u.grid;
    if g.kind != GridKind::DiscFull {
        return Err(Error::GridMismatch("rotation permutes disc grids only".into()));
    }
    let mt = g.m_theta;
    let mut values = vec![0.0; u.values.len()];
    for i in 0..g.m_r {
        for j in 0..mt {
            values[g.node(i, j)] = u.values[g.node(i, (j + k) % mt)];
        }
    }
    Ok(Field {
        grid: u.grid.clone(),
        values,
        zero_average: u.zero_average,
    })
}

/// Align the detected axis with θ = 0: a grid rotation on the disc, an
/// equatorial flip on axisymmetric charts. Returns the aligned field and the
/// axis found.
pub fn align_axis(u: &Field) -> Result<(Field, Axis)> {
    let axis = detect_axis(u)?;
    let aligned = if u.grid.kind == GridKind::DiscFull {
        rotate_disc_field(u, axis.grid_index)?
    } else if axis.angle > PI / 2.0 {
        let refl = reflection_permutation(&u.grid, HalfSpace::UpperEquator)?;
        u.compose(&refl)
    } else {
        u.clone()
    };
    Ok((aligned, axis))
}

/// Max positive part of the discrete ∂u/∂θ over cells with angle in (0, π)
/// (and, on the disc, of −∂u/∂θ on (π, 2π)); 0 means u is monotone from the
/// axis at θ = 0 toward θ = π.
pub fn theta_monotonicity(u: &Field) -> f64 {
    let g = &u.grid;
    let mt = g.m_theta;
    let mut worst = 0.0_f64;
    for i in 0..g.m_r {
        for j in 0..mt {
            let jn = (j + 1) % mt;
            if g.kind != GridKind::DiscFull && jn == 0 {
                continue;
            }
            let slope = (u.values[g.node(i, jn)] - u.values[g.node(i, j)]) / g.dtheta;
            // midpoint angle of the (j, j+1) pair
            let mid = if g.kind == GridKind::DiscFull {
                (j as f64 + 0.5) * g.dtheta
            } else {
                (g.theta[j] + g.theta[jn.max(j)]) / 2.0
            };
            let violation = if mid < PI { slope } else { -slope };
            worst = worst.max(violation);
        }
    }
    worst
}

/// Min of ∂_e u over nodes farther than ~1.5 cells (chart Euclidean
/// distance) from the poles ±e (and ±ρe on the annulus), with the axis
/// already aligned at θ = 0.
pub fn axial_positivity(u: &Field) -> Result<f64> {
    let g = &u.grid;
    let (de, _) = cartesian_partials(u)?;
    let cell = g.dr.max(g.r[g.m_r - 1] * g.dtheta);
    let cut = 1.5 * cell;
    let mut poles: Vec<(f64, f64)> = vec![(1.0, 0.0), (1.0, PI)];
    if g.kind == GridKind::AnnulusAxisym {
        poles.push((g.inner_radius, 0.0));
        poles.push((g.inner_radius, PI));
    }
    let mut min = f64::INFINITY;
    for i in 0..g.m_r {
        for j in 0..g.m_theta {
            let (r, t) = (g.r[i], g.theta[j]);
            let near_pole = poles.iter().any(|&(pr, pt)| {
                let d2 = r * r + pr * pr - 2.0 * r * pr * (t - pt).cos();
                d2.max(0.0).sqrt() < cut
            });
            if near_pole {
                continue;
            }
            min = min.min(de.values[g.node(i, j)]);
        }
    }
    if min == f64::INFINITY {
        return Err(Error::Parameter(
            "pole exclusion removed every node; grid too coarse".into(),
        ));
    }
    Ok(min)
}

/// Sign of the mirror extension used when counting nodal domains on an
/// axisymmetric chart: the chart is half a meridian section, and the other
/// half carries ±the chart values depending on the field's parity under the
/// azimuthal mirror (u itself is even, ∂_τ u is odd).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MirrorParity {
    Even,
    Odd,
}

/// Count connected components of {v > band} ∪ {v < −band} with
/// band = zero_band·‖v‖_∞, by flood fill with 4-neighbor chart adjacency
/// (angular wrap on the disc; mirror extension to the full meridian section
/// on axisymmetric charts).
pub fn nodal_count(v: &Field, zero_band: f64, parity: MirrorParity) -> Result<usize> {
    let g = &v.grid;
    let band = zero_band * v.linf();
    if v.values.iter().all(|x| x.abs() <= band) {
        return Err(Error::DegenerateInput(
            "all nodes inside the zero band".into(),
        ));
    }
    // assemble the sign matrix (rows: radius, cols: angle on a closed ring)
    let (mr, cols, wrap, sgn): (usize, usize, bool, Vec<i8>) = match g.kind {
        GridKind::Interval => {
            let s = v.values.iter().map(|&x| trisign(x, band)).collect();
            (1, g.m_r, false, s)
        }
        GridKind::DiscFull => {
            let s = v.values.iter().map(|&x| trisign(x, band)).collect();
            (g.m_r, g.m_theta, true, s)
        }
        GridKind::BallAxisym | GridKind::AnnulusAxisym => {
            // extended meridian: columns j in 0..mt are the chart, columns
            // mt..2mt its mirror image with the parity sign
            let mt = g.m_theta;
            let flip = match parity {
                MirrorParity::Even => 1.0,
                MirrorParity::Odd => -1.0,
            };
            let mut s = vec![0i8; g.m_r * 2 * mt];
            for i in 0..g.m_r {
                for j in 0..mt {
                    s[i * 2 * mt + j] = trisign(v.values[g.node(i, j)], band);
                    s[i * 2 * mt + (2 * mt - 1 - j)] =
                        trisign(flip * v.values[g.node(i, j)], band);
                }
            }
            (g.m_r, 2 * mt, true, s)
        }
    };
    // flood fill
    let idx = |i: usize, j: usize| i * cols + j;
    let mut seen = vec![false; sgn.len()];
    let mut count = 0usize;
    let mut stack = Vec::new();
    for start in 0..sgn.len() {
        if seen[start] || sgn[start] == 0 {
            continue;
        }
        count += 1;
        stack.push(start);
        seen[start] = true;
        while let Some(k) = stack.pop() {
            let (i, j) = (k / cols, k % cols);
            let mut push = |kk: usize| {
                if !seen[kk] && sgn[kk] == sgn[k] {
                    seen[kk] = true;
                    stack.push(kk);
                }
            };
            if i > 0 {
                push(idx(i - 1, j));
            }
            if i + 1 < mr {
                push(idx(i + 1, j));
            }
            if cols > 1 {
                if j > 0 {
                    push(idx(i, j - 1));
                } else if wrap {
                    push(idx(i, cols - 1));
                }
                if j + 1 < cols {
                    push(idx(i, j + 1));
                } else if wrap {
                    push(idx(i, 0));
                }
            }
        }
    }
    Ok(count)
}

fn trisign(x: f64, band: f64) -> i8 {
    if x > band {
        1
    } else if x < -band {
        -1
    } else {
        0
    }
}

/// ‖u + u∘σ‖₂ / (2‖u‖₂) for the reflection across the hyperplane
/// perpendicular to the (already aligned) axis; 0 for antisymmetric u.
pub fn antisymmetry_defect(u: &Field) -> Result<f64> {
    let hs = match u.grid.kind {
        GridKind::DiscFull => HalfSpace::DiscSector { angle: PI / 2.0 },
        GridKind::BallAxisym | GridKind::AnnulusAxisym => HalfSpace::UpperEquator,
        GridKind::Interval => HalfSpace::PositiveHalfLine,
    };
    let refl = reflection_permutation(&u.grid, hs)?;
    let reflected = u.compose(&refl);
    let norm = lp_norm(u, 2.0)?;
    if norm == 0.0 {
        return Err(Error::DegenerateInput("field is identically zero".into()));
    }
    let mut sum2 = 0.0;
    for k in 0..u.values.len() {
        let s = u.values[k] + reflected.values[k];
        sum2 += s * s * u.grid.weights[k];
    }
    Ok(sum2.sqrt() / (2.0 * norm))
}

/// Separability defect: weighted SVD of the chart value matrix;
/// defect = √(1 − σ₁²/Σσ_k²), ~0 iff u(r,θ) = R(r)Θ(θ).
pub fn rank1_defect(u: &Field) -> Result<f64> {
    let g = &u.grid;
    if g.kind == GridKind::Interval {
        return Err(Error::GridMismatch("rank-1 defect needs a 2D chart".into()));
    }
    if u.linf() == 0.0 {
        return Err(Error::DegenerateInput("field is identically zero".into()));
    }
    // the quadrature weight is separable (w_ij = a_i b_j), so scaling by √w
    // turns L²-orthogonality into matrix orthogonality
    let mut m = DMatrix::zeros(g.m_r, g.m_theta);
    for i in 0..g.m_r {
        for j in 0..g.m_theta {
            let k = g.node(i, j);
            m[(i, j)] = u.values[k] * g.weights[k].sqrt();
        }
    }
    let svd = m.svd(false, false);
    let total: f64 = svd.singular_values.iter().map(|s| s * s).sum();
    let top = svd
        .singular_values
        .iter()
        .fold(0.0_f64, |a, &s| a.max(s * s));
    Ok((1.0 - top / total).max(0.0).sqrt())
}

/// Aggregate report over all diagnostics for a converged minimizer.
#[derive(Debug, Clone, Serialize)]
pub struct SymmetryReport {
    pub axis_angle: f64,
    pub axis_undefined: bool,
    pub theta_monotonicity_max_violation: f64,
    pub axial_derivative_min: f64,
    pub antisymmetry_defect: f64,
    pub foliated_schwarz_defect: f64,
    pub nodal_count_u: usize,
    pub nodal_count_dtau: usize,
    pub rank1_defect: f64,
    pub mu_p_abs: f64,
}

/// Run every diagnostic on u (aligned internally) at exponent p.
pub fn full_report(u: &Field, p: f64) -> Result<SymmetryReport> {
    let (aligned, axis) = align_axis(u)?;
    let el = crate::variational::el_residual(&aligned, p)?;
    let (_, dtau) = cartesian_partials(&aligned)?;
    Ok(SymmetryReport {
        axis_angle: axis.angle,
        axis_undefined: axis.undefined,
        theta_monotonicity_max_violation: theta_monotonicity(&aligned),
        axial_derivative_min: axial_positivity(&aligned)?,
        antisymmetry_defect: antisymmetry_defect(&aligned)?,
        foliated_schwarz_defect: crate::polarization::foliated_schwarz_defect(&aligned)?,
        nodal_count_u: nodal_count(&aligned, 1e-4, MirrorParity::Even)?,
        nodal_count_dtau: nodal_count(&dtau, 1e-4, MirrorParity::Odd)?,
        rank1_defect: rank1_defect(&aligned)?,
        mu_p_abs: el.mu_p.abs(),
    })
}
