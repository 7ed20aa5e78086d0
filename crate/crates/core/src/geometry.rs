//! Discrete domains with quadrature weights and exact reflection symmetries.
//!
//! All grids are cell-centered in the radial coordinate so that no node sits
//! on the r=0 (or sinθ=0) coordinate singularity of the polar Laplacian.
//! Angular layouts differ by chart:
//!
//! * `disc-full` (N=2 ball): θ uniform on [0,2π) with a node at θ=0, so
//!   reflections across grid-aligned lines through the origin are exact node
//!   permutations,
//! * `ball-axisym` / `annulus-axisym` (N≥2): θ cell-centered on [0,π]; the
//!   (N−2)-sphere measure constant is folded into the weights so integrals
//!   are over the full domain, not the reduced chart,
//! * `interval`: uniform cell-centered nodes on (−1,1), M even so x ↦ −x is
//!   a node permutation.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridKind {
    BallAxisym,
    DiscFull,
    AnnulusAxisym,
    Interval,
}

/// An undirected edge of the Dirichlet-energy quadratic form.
///
/// The discrete energy is `Σ_edges coeff · (u_a − u_b)²`, and the discrete
/// Neumann Laplacian is defined as the adjoint of this form, so the discrete
/// integration-by-parts identity holds exactly.
#[derive(Debug, Clone, Copy)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub coeff: f64,
}

#[derive(Debug)]
pub struct Grid {
    pub kind: GridKind,
    /// Ambient dimension N (1 for the interval).
    pub dim: usize,
    /// Inner radius ρ (0 for ball / disc / interval).
    pub inner_radius: f64,
    pub m_r: usize,
    pub m_theta: usize,
    /// Radial node coordinates (interval: the x coordinates on (−1,1)).
    pub r: Vec<f64>,
    /// Angular node coordinates (empty for the interval).
    pub theta: Vec<f64>,
    /// Quadrature weight per node; Σ weights = |Ω|.
    pub weights: Vec<f64>,
    pub edges: Vec<Edge>,
    pub dr: f64,
    pub dtheta: f64,
}

/// Measure of the unit sphere S^n ⊂ R^{n+1}.
pub(crate) fn sphere_measure(n: usize) -> f64 {
    2.0 * PI.powf((n as f64 + 1.0) / 2.0) / gamma_half(n as u32 + 1)
}

/// Γ(k/2) for positive integer k.
pub(crate) fn gamma_half(k: u32) -> f64 {
    match k {
        0 => f64::INFINITY,
        1 => PI.sqrt(),
        2 => 1.0,
        _ => (k as f64 / 2.0 - 1.0) * gamma_half(k - 2),
    }
}

/// |B^N|, the volume of the unit ball in R^N.
pub fn ball_volume(n: usize) -> f64 {
    PI.powf(n as f64 / 2.0) / gamma_half(n as u32 + 2)
}

impl Grid {
    pub fn node_count(&self) -> usize {
        self.m_r * self.m_theta.max(1)
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> usize {
        i * self.m_theta + j
    }

    /// Total measure |Ω| of the continuum domain represented by the grid
    /// (the quadrature weights sum to this up to the scheme's accuracy;
    /// for disc, interval and N=2 annulus the sum is exact).
    pub fn volume(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Grid metadata as a JSON record.
    pub fn metadata_json(&self) -> serde_json::Value {
        serde_json::json!({
            "kind": self.kind,
            "dim": self.dim,
            "inner_radius": self.inner_radius,
            "m_r": self.m_r,
            "m_theta": self.m_theta,
        })
    }

    /// Node table as CSV columns (i, j, r, theta, weight).
    pub fn write_node_table<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "i,j,r,theta,weight")?;
        if self.kind == GridKind::Interval {
            for i in 0..self.m_r {
                writeln!(w, "{},0,{:.17e},0,{:.17e}", i, self.r[i], self.weights[i])?;
            }
            return Ok(());
        }
        for i in 0..self.m_r {
            for j in 0..self.m_theta {
                writeln!(
                    w,
                    "{},{},{:.17e},{:.17e},{:.17e}",
                    i,
                    j,
                    self.r[i],
                    self.theta[j],
                    self.weights[self.node(i, j)]
                )?;
            }
        }
        Ok(())
    }

    /// All reflection half-spaces the grid supports exactly.
    ///
    /// On the disc these are the M_θ/2 grid-aligned lines through the origin,
    /// each with both choices of side; axisymmetric charts support the
    /// equatorial reflection; the interval supports x ↦ −x.
    pub fn compatible_half_spaces(&self) -> Vec<HalfSpace> {
        match self.kind {
            GridKind::DiscFull => (0..self.m_theta)
                .map(|k| HalfSpace::DiscSector {
                    angle: k as f64 * self.dtheta,
                })
                .collect(),
            GridKind::BallAxisym | GridKind::AnnulusAxisym => {
                if self.m_theta % 2 == 0 {
                    vec![HalfSpace::UpperEquator]
                } else {
                    vec![]
                }
            }
            GridKind::Interval => vec![HalfSpace::PositiveHalfLine],
        }
    }
}

fn build_axisym(
    kind: GridKind,
    n: usize,
    rho: f64,
    m_r: usize,
    m_theta: usize,
) -> Grid {
    let omega = sphere_measure(n - 2); // measure of S^{N-2}; S^0 has measure 2
    let dr = (1.0 - rho) / m_r as f64;
    let dtheta = PI / m_theta as f64;
    let r: Vec<f64> = (0..m_r).map(|i| rho + (i as f64 + 0.5) * dr).collect();
    let theta: Vec<f64> = (0..m_theta).map(|j| (j as f64 + 0.5) * dtheta).collect();
    let pw = |x: f64| x.powi(n as i32 - 2); // sin^{N-2}
    // evaluate sines at the mirror-reduced angle so the equatorial reflection
    // θ ↦ π−θ preserves weights and edge coefficients bit-exactly
    let sin_node = |j: usize| ((j.min(m_theta - 1 - j) as f64 + 0.5) * dtheta).sin();
    let sin_face = |k: usize| ((k.min(m_theta - k) as f64) * dtheta).sin();
    let mut weights = vec![0.0; m_r * m_theta];
    for i in 0..m_r {
        for j in 0..m_theta {
            weights[i * m_theta + j] =
                omega * r[i].powi(n as i32 - 1) * pw(sin_node(j)) * dr * dtheta;
        }
    }
    let mut edges = Vec::with_capacity(2 * m_r * m_theta);
    for i in 0..m_r.saturating_sub(1) {
        let rf = rho + (i as f64 + 1.0) * dr; // face radius
        for j in 0..m_theta {
            edges.push(Edge {
                a: i * m_theta + j,
                b: (i + 1) * m_theta + j,
                coeff: omega * rf.powi(n as i32 - 1) * pw(sin_node(j)) * dtheta / dr,
            });
        }
    }
    for i in 0..m_r {
        for j in 0..m_theta - 1 {
            edges.push(Edge {
                a: i * m_theta + j,
                b: i * m_theta + j + 1,
                coeff: omega * r[i].powi(n as i32 - 3) * pw(sin_face(j + 1)) * dr / dtheta,
            });
        }
    }
    Grid {
        kind,
        dim: n,
        inner_radius: rho,
        m_r,
        m_theta,
        r,
        theta,
        weights,
        edges,
        dr,
        dtheta,
    }
}

fn build_disc_full(m_r: usize, m_theta: usize) -> Grid {
    let dr = 1.0 / m_r as f64;
    let dtheta = 2.0 * PI / m_theta as f64;
    let r: Vec<f64> = (0..m_r).map(|i| (i as f64 + 0.5) * dr).collect();
    let theta: Vec<f64> = (0..m_theta).map(|j| j as f64 * dtheta).collect();
    let mut weights = vec![0.0; m_r * m_theta];
    for i in 0..m_r {
        for j in 0..m_theta {
            weights[i * m_theta + j] = r[i] * dr * dtheta;
        }
    }
    let mut edges = Vec::with_capacity(2 * m_r * m_theta);
    for i in 0..m_r - 1 {
        let rf = (i as f64 + 1.0) * dr;
        for j in 0..m_theta {
            edges.push(Edge {
                a: i * m_theta + j,
                b: (i + 1) * m_theta + j,
                coeff: rf * dtheta / dr,
            });
        }
    }
    for i in 0..m_r {
        for j in 0..m_theta {
            let jn = (j + 1) % m_theta;
            edges.push(Edge {
                a: i * m_theta + j,
                b: i * m_theta + jn,
                coeff: dr / (r[i] * dtheta),
            });
        }
    }
    Grid {
        kind: GridKind::DiscFull,
        dim: 2,
        inner_radius: 0.0,
        m_r,
        m_theta,
        r,
        theta,
        weights,
        edges,
        dr,
        dtheta,
    }
}

/// Discretize the unit ball B ⊂ R^N.
///
/// For N=2 this is a full polar grid on the disc; for N≥3 it is the
/// axisymmetric (r,θ) chart with the S^{N-2} measure folded into the weights.
pub fn build_ball_grid(n: usize, m_r: usize, m_theta: usize) -> Result<Grid> {
    if n < 2 {
        return Err(Error::UnsupportedDimension(n));
    }
    if m_r < 8 || m_theta < 8 {
        return Err(Error::Parameter(format!(
            "resolution too small: M_r={m_r}, M_theta={m_theta} (need >= 8)"
        )));
    }
    if n == 2 {
        if m_theta % 4 != 0 {
            return Err(Error::Parameter(format!(
                "disc-full requires M_theta divisible by 4, got {m_theta}"
            )));
        }
        Ok(build_disc_full(m_r, m_theta))
    } else {
        Ok(build_axisym(GridKind::BallAxisym, n, 0.0, m_r, m_theta))
    }
}

/// Discretize the annulus {ρ < |x| < 1} in the axisymmetric chart.
pub fn build_annulus_grid(n: usize, rho: f64, m_r: usize, m_theta: usize) -> Result<Grid> {
    if n < 2 {
        return Err(Error::UnsupportedDimension(n));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Parameter(format!(
            "annulus inner radius must lie in (0,1), got {rho}"
        )));
    }
    if m_r < 8 || m_theta < 8 {
        return Err(Error::Parameter(format!(
            "resolution too small: M_r={m_r}, M_theta={m_theta} (need >= 8)"
        )));
    }
    Ok(build_axisym(GridKind::AnnulusAxisym, n, rho, m_r, m_theta))
}

/// Discretize the interval (−1, 1) with M even cell-centered nodes.
pub fn build_interval_grid(m: usize) -> Result<Grid> {
    if m < 16 {
        return Err(Error::Parameter(format!("interval needs M >= 16, got {m}")));
    }
    if m % 2 != 0 {
        return Err(Error::Parameter(format!("interval needs M even, got {m}")));
    }
    let dx = 2.0 / m as f64;
    let r: Vec<f64> = (0..m).map(|i| -1.0 + (i as f64 + 0.5) * dx).collect();
    let weights = vec![dx; m];
    let edges = (0..m - 1)
        .map(|i| Edge {
            a: i,
            b: i + 1,
            coeff: 1.0 / dx,
        })
        .collect();
    Ok(Grid {
        kind: GridKind::Interval,
        dim: 1,
        inner_radius: 0.0,
        m_r: m,
        m_theta: 1,
        r,
        theta: vec![],
        weights,
        edges,
        dr: dx,
        dtheta: 0.0,
    })
}

/// A closed half-space with the origin on its boundary hyperplane, in the
/// representations the grids support exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum HalfSpace {
    /// Disc: boundary line at `angle`; the interior is the open sector of
    /// angles in (angle, angle + π).
    DiscSector { angle: f64 },
    /// Axisymmetric charts: the half containing the north pole; the
    /// reflection is θ ↦ π − θ.
    UpperEquator,
    /// Interval: {x ≥ 0}; the reflection is x ↦ −x.
    PositiveHalfLine,
}

/// Which side of the reflecting hyperplane a node lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Interior,
    Boundary,
    Exterior,
}

/// An involutive, weight-preserving node permutation realizing a reflection.
#[derive(Debug, Clone)]
pub struct ReflectionPermutation {
    pub half_space: HalfSpace,
    /// σ(k) for every node index k; σ∘σ = identity.
    pub sigma: Vec<usize>,
    /// Nodes on the reflecting hyperplane (σ-fixed).
    pub fixed: Vec<usize>,
    /// Side classification per node relative to the half-space interior.
    pub side: Vec<Side>,
}

/// Build the exact reflection permutation for a compatible grid / half-space
/// pair.
pub fn reflection_permutation(grid: &Grid, half_space: HalfSpace) -> Result<ReflectionPermutation> {
    let n = grid.node_count();
    let mut sigma = vec![0usize; n];
    let mut side = vec![Side::Exterior; n];
    match (grid.kind, half_space) {
        (GridKind::DiscFull, HalfSpace::DiscSector { angle }) => {
            let steps_f = angle / grid.dtheta;
            let k = steps_f.round();
            if (steps_f - k).abs() > 1e-9 {
                return Err(Error::SymmetryMismatch(format!(
                    "line angle {angle} is not a multiple of the angular spacing"
                )));
            }
            let mt = grid.m_theta;
            let k = (k as i64).rem_euclid(mt as i64) as usize;
            for i in 0..grid.m_r {
                for j in 0..mt {
                    let jr = ((2 * k + mt) as i64 - j as i64).rem_euclid(mt as i64) as usize;
                    sigma[grid.node(i, j)] = grid.node(i, jr);
                    let s = (j + mt - k) % mt;
                    side[grid.node(i, j)] = if s == 0 || s == mt / 2 {
                        Side::Boundary
                    } else if s < mt / 2 {
                        Side::Interior
                    } else {
                        Side::Exterior
                    };
                }
            }
        }
        (GridKind::BallAxisym | GridKind::AnnulusAxisym, HalfSpace::UpperEquator) => {
            let mt = grid.m_theta;
            if mt % 2 != 0 {
                return Err(Error::SymmetryMismatch(
                    "equatorial reflection needs an even angular node count".into(),
                ));
            }
            for i in 0..grid.m_r {
                for j in 0..mt {
                    sigma[grid.node(i, j)] = grid.node(i, mt - 1 - j);
                    side[grid.node(i, j)] = if j < mt / 2 {
                        Side::Interior
                    } else {
                        Side::Exterior
                    };
                }
            }
        }
        (GridKind::Interval, HalfSpace::PositiveHalfLine) => {
            let m = grid.m_r;
            for i in 0..m {
                sigma[i] = m - 1 - i;
                side[i] = if i >= m / 2 {
                    Side::Interior
                } else {
                    Side::Exterior
                };
            }
        }
        (kind, hs) => {
            return Err(Error::SymmetryMismatch(format!(
                "grid kind {kind:?} does not support half-space {hs:?}"
            )));
        }
    }
    let fixed = (0..n).filter(|&k| sigma[k] == k).collect();
    Ok(ReflectionPermutation {
        half_space,
        sigma,
        fixed,
        side,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disc_area_is_pi() {
        let g = build_ball_grid(2, 64, 128).unwrap();
        assert!((g.volume() - PI).abs() / PI < 1e-3);
    }

    #[test]
    fn ball_volume_n3() {
        let g = build_ball_grid(3, 64, 64).unwrap();
        let exact = 4.0 * PI / 3.0;
        assert!((g.volume() - exact).abs() / exact < 1e-3);
    }

    #[test]
    fn disc_rejects_bad_angular_count() {
        assert!(matches!(
            build_ball_grid(2, 64, 126),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn ball_rejects_dimension_one() {
        assert!(matches!(
            build_ball_grid(1, 64, 64),
            Err(Error::UnsupportedDimension(1))
        ));
    }

    #[test]
    fn annulus_volumes() {
        let g = build_annulus_grid(2, 0.5, 64, 128).unwrap();
        let exact = PI * (1.0 - 0.25);
        assert!((g.volume() - exact).abs() / exact < 1e-3);

        let g = build_annulus_grid(3, 0.3, 64, 64).unwrap();
        let exact = 4.0 * PI / 3.0 * (1.0 - 0.027);
        assert!((g.volume() - exact).abs() / exact < 1e-3);

        assert!(matches!(
            build_annulus_grid(2, 1.2, 64, 64),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn interval_is_exact() {
        let g = build_interval_grid(256).unwrap();
        assert!((g.volume() - 2.0).abs() < 1e-12);
        let g = build_interval_grid(16).unwrap();
        for (i, &x) in g.r.iter().enumerate() {
            let expect = (2.0 * i as f64 + 1.0) / 16.0 - 1.0;
            assert!((x - expect).abs() < 1e-14);
        }
        assert!(matches!(build_interval_grid(15), Err(Error::Parameter(_))));
    }

    #[test]
    fn quadrature_error_shrinks_under_refinement() {
        let err = |m: usize| {
            let g = build_ball_grid(3, m, m).unwrap();
            (g.volume() - 4.0 * PI / 3.0).abs()
        };
        let e1 = err(32);
        let e2 = err(64);
        assert!(e2 < e1 / 3.0, "e1={e1}, e2={e2}");
    }

    #[test]
    fn disc_reflection_matches_closed_form() {
        let g = build_ball_grid(2, 16, 128).unwrap();
        let refl = reflection_permutation(&g, HalfSpace::DiscSector { angle: 0.0 }).unwrap();
        for i in 0..g.m_r {
            for j in 0..g.m_theta {
                let expect = g.node(i, (g.m_theta - j) % g.m_theta);
                assert_eq!(refl.sigma[g.node(i, j)], expect);
            }
        }
    }

    #[test]
    fn interval_reflection_matches_closed_form() {
        let g = build_interval_grid(256).unwrap();
        let refl = reflection_permutation(&g, HalfSpace::PositiveHalfLine).unwrap();
        for i in 0..256 {
            assert_eq!(refl.sigma[i], 255 - i);
        }
    }

    #[test]
    fn incompatible_line_angle_is_rejected() {
        let g = build_ball_grid(2, 16, 128).unwrap();
        let res = reflection_permutation(
            &g,
            HalfSpace::DiscSector {
                angle: PI / 3.0,
            },
        );
        assert!(matches!(res, Err(Error::SymmetryMismatch(_))));
    }

    fn check_involution_and_weights(g: &Grid, refl: &ReflectionPermutation) {
        for k in 0..g.node_count() {
            assert_eq!(refl.sigma[refl.sigma[k]], k);
            assert!(
                (g.weights[refl.sigma[k]] - g.weights[k]).abs() <= 1e-15 * g.weights[k].abs(),
                "weight not preserved at node {k}"
            );
        }
        // edge set maps onto itself with equal coefficients
        use std::collections::HashMap;
        let mut map: HashMap<(usize, usize), f64> = HashMap::new();
        for e in &g.edges {
            let key = (e.a.min(e.b), e.a.max(e.b));
            map.insert(key, e.coeff);
        }
        for e in &g.edges {
            let (a, b) = (refl.sigma[e.a], refl.sigma[e.b]);
            let key = (a.min(b), a.max(b));
            let c = map
                .get(&key)
                .unwrap_or_else(|| panic!("edge image ({a},{b}) missing"));
            assert!((c - e.coeff).abs() <= 1e-12 * e.coeff.abs());
        }
    }

    #[test]
    fn reflections_are_weight_preserving_involutions() {
        let g = build_ball_grid(2, 12, 32).unwrap();
        for hs in g.compatible_half_spaces() {
            let refl = reflection_permutation(&g, hs).unwrap();
            check_involution_and_weights(&g, &refl);
        }
        let g = build_ball_grid(3, 12, 16).unwrap();
        let refl = reflection_permutation(&g, HalfSpace::UpperEquator).unwrap();
        check_involution_and_weights(&g, &refl);
        let g = build_annulus_grid(2, 0.4, 12, 16).unwrap();
        let refl = reflection_permutation(&g, HalfSpace::UpperEquator).unwrap();
        check_involution_and_weights(&g, &refl);
        let g = build_interval_grid(32).unwrap();
        let refl = reflection_permutation(&g, HalfSpace::PositiveHalfLine).unwrap();
        check_involution_and_weights(&g, &refl);
    }
}
