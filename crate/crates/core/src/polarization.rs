//! Two-point rearrangement (polarization) with respect to half-spaces
//! through the origin, its exact integral identities, and the
//! foliated-Schwarz symmetry defect.

use serde::Serialize;

use crate::error::Error;
use crate::fields::{dirichlet_energy, integrate, lp_norm, Field};
use crate::geometry::{reflection_permutation, GridKind, HalfSpace, Side};
use crate::Result;

/// Trichotomy of a field against a half-space reflection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolarizationCase {
    /// u ≥ u∘σ on the H side (polarization leaves u unchanged).
    StrictAbove,
    /// u ≤ u∘σ on the H side (polarization swaps the two sides).
    StrictBelow,
    /// u = u∘σ (reflection-symmetric).
    Symmetric,
    Mixed,
}

#[derive(Debug, Clone, Serialize)]
pub struct PolarizationReport {
    pub half_space: HalfSpace,
    /// Relative changes of ∫u, ∫|u|^{p−2}u and ∫|u|^p under polarization;
    /// all are exact multiset rearrangements, so these vanish to round-off.
    pub delta_mean: f64,
    pub delta_signed_power: f64,
    pub delta_lp: f64,
    pub energy_before: f64,
    pub energy_after: f64,
    pub case: PolarizationCase,
}

/// u_H: node-wise max{u, u∘σ_H} on the H side, min on the other side;
/// nodes on ∂H are fixed by σ and unchanged.
pub fn polarize(u: &Field, half_space: HalfSpace) -> Result<Field> {
    let refl = reflection_permutation(&u.grid, half_space)?;
    let mut values = u.values.clone();
    for k in 0..values.len() {
        let m = u.values[refl.sigma[k]];
        match refl.side[k] {
            Side::Interior => values[k] = u.values[k].max(m),
            Side::Exterior => values[k] = u.values[k].min(m),
            Side::Boundary => {}
        }
    }
    Ok(Field {
        grid: u.grid.clone(),
        values,
        zero_average: u.zero_average,
    })
}

/// Classify u against σ_H up to a node-wise tolerance.
fn classify(u: &Field, half_space: HalfSpace, tol: f64) -> Result<PolarizationCase> {
    let refl = reflection_permutation(&u.grid, half_space)?;
    let mut above = true;
    let mut below = true;
    for k in 0..u.values.len() {
        if refl.side[k] != Side::Interior {
            continue;
        }
        let d = u.values[k] - u.values[refl.sigma[k]];
        if d < -tol {
            above = false;
        }
        if d > tol {
            below = false;
        }
    }
    Ok(match (above, below) {
        (true, true) => PolarizationCase::Symmetric,
        (true, false) => PolarizationCase::StrictAbove,
        (false, true) => PolarizationCase::StrictBelow,
        (false, false) => PolarizationCase::Mixed,
    })
}

/// The preserved-integral identities and the energy pair for u vs u_H.
pub fn polarization_identities(u: &Field, half_space: HalfSpace, p: f64) -> Result<PolarizationReport> {
    let uh = polarize(u, half_space)?;
    let signed_power = |f: &Field| -> f64 {
        f.values
            .iter()
            .zip(&f.grid.weights)
            .map(|(v, w)| v.abs().powf(p - 2.0) * v * w)
            .sum()
    };
    let lpp = |f: &Field| lp_norm(f, p).map(|n| n.powf(p));
    let rel = |a: f64, b: f64| -> f64 {
        let scale = a.abs().max(b.abs()).max(1e-300);
        (a - b).abs() / scale
    };
    // absolute scales for the signed deltas: both ∫u and ∫|u|^{p−2}u of a
    // sign-changing field nearly cancel, so normalize by ∫|u| resp.
    // ∫|u|^{p−1} instead of the (vanishing) values themselves
    let abs_mass: f64 = u
        .values
        .iter()
        .zip(&u.grid.weights)
        .map(|(v, w)| v.abs() * w)
        .sum();
    let abs_power_mass: f64 = u
        .values
        .iter()
        .zip(&u.grid.weights)
        .map(|(v, w)| v.abs().powf(p - 1.0) * w)
        .sum();
    let case = classify(u, half_space, 1e-8 * u.linf())?;
    Ok(PolarizationReport {
        half_space,
        delta_mean: (integrate(&uh) - integrate(u)).abs() / abs_mass.max(1e-300),
        delta_signed_power: (signed_power(&uh) - signed_power(u)).abs()
            / abs_power_mass.max(1e-300),
        delta_lp: rel(lpp(&uh)?, lpp(u)?),
        energy_before: dirichlet_energy(u),
        energy_after: dirichlet_energy(&uh),
        case,
    })
}

/// Distance of u from its polarizations over all compatible half-spaces
/// containing the detected axis: max_H ‖u_H − u‖₂ / ‖u‖₂; zero iff u is
/// discretely foliated Schwarz symmetric about that axis.
pub fn foliated_schwarz_defect(u: &Field) -> Result<f64> {
    if u.linf() == 0.0 {
        return Err(Error::DegenerateInput("field is identically zero".into()));
    }
    if u.grid.kind == GridKind::Interval {
        return Err(Error::GridMismatch(
            "foliated Schwarz symmetry is defined on 2D charts".into(),
        ));
    }
    let axis = crate::diagnostics::detect_axis(u)?;
    let norm = lp_norm(u, 2.0)?;
    let mut worst = 0.0_f64;
    for hs in u.grid.compatible_half_spaces() {
        // keep only half-spaces whose closed half contains the axis direction
        let contains = match hs {
            HalfSpace::DiscSector { angle } => {
                let rel = (axis.angle - angle).rem_euclid(2.0 * std::f64::consts::PI);
                rel <= std::f64::consts::PI + 1e-12
            }
            HalfSpace::UpperEquator => axis.angle < std::f64::consts::FRAC_PI_2,
            HalfSpace::PositiveHalfLine => true,
        };
        if !contains {
            continue;
        }
        let uh = polarize(u, hs)?;
        let mut diff2 = 0.0;
        for k in 0..u.values.len() {
            let d = uh.values[k] - u.values[k];
            diff2 += d * d * u.grid.weights[k];
        }
        worst = worst.max(diff2.sqrt() / norm);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::project_zero_average;
    use crate::geometry::build_ball_grid;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn disc(m_r: usize, m_t: usize) -> Arc<crate::geometry::Grid> {
        Arc::new(build_ball_grid(2, m_r, m_t).unwrap())
    }

    #[test]
    fn polarize_fixes_aligned_fields_and_swaps_reversed_ones() {
        let g = disc(16, 32);
        let u = Field::from_fn(g.clone(), |r, t| r * t.cos());
        // u = x₁ is symmetric-decreasing toward the interior of the sector
        // with boundary line at 3π/2, whose interior angles surround θ = 0
        let hs = HalfSpace::DiscSector {
            angle: 1.5 * std::f64::consts::PI,
        };
        let uh = polarize(&u, hs).unwrap();
        assert_eq!(uh.values, u.values);

        // fully reversed field: −x₁ gets swapped onto the H side
        let mut v = u.clone();
        v.scale(-1.0);
        let vh = polarize(&v, hs).unwrap();
        let refl = reflection_permutation(&g, hs).unwrap();
        for k in 0..g.node_count() {
            match refl.side[k] {
                Side::Interior => assert_eq!(vh.values[k], v.values[refl.sigma[k]]),
                Side::Boundary => assert_eq!(vh.values[k], v.values[k]),
                Side::Exterior => assert_eq!(vh.values[k], v.values[refl.sigma[k]]),
            }
        }
        assert_eq!(
            classify(&v, hs, 1e-8).unwrap(),
            PolarizationCase::StrictBelow
        );
    }

    #[test]
    fn polarize_is_idempotent() {
        let g = disc(12, 24);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let u = Field::new(
            g.clone(),
            (0..g.node_count()).map(|_| rng.gen::<f64>() - 0.5).collect(),
        )
        .unwrap();
        for hs in g.compatible_half_spaces() {
            let once = polarize(&u, hs).unwrap();
            let twice = polarize(&once, hs).unwrap();
            assert_eq!(once.values, twice.values);
        }
    }

    #[test]
    fn identities_hold_for_random_fields() {
        let g = disc(12, 24);
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..20 {
            let u = project_zero_average(
                &Field::new(
                    g.clone(),
                    (0..g.node_count()).map(|_| rng.gen::<f64>() - 0.5).collect(),
                )
                .unwrap(),
            );
            for hs in g.compatible_half_spaces() {
                for p in [2.0, 2.7, 4.0] {
                    let rep = polarization_identities(&u, hs, p).unwrap();
                    assert!(rep.delta_mean <= 1e-12, "mean delta {}", rep.delta_mean);
                    assert!(
                        rep.delta_signed_power <= 1e-12,
                        "signed power delta {}",
                        rep.delta_signed_power
                    );
                    assert!(rep.delta_lp <= 1e-12, "lp delta {}", rep.delta_lp);
                    assert!(
                        rep.energy_after <= rep.energy_before * (1.0 + 1e-12),
                        "energy increased: {} -> {}",
                        rep.energy_before,
                        rep.energy_after
                    );
                }
            }
        }
    }

    #[test]
    fn four_node_energy_strictly_decreases() {
        // hand computation on four nodes across the line θ = 0: the inner
        // mirror pair is misordered (−1 inside, +1 outside) while the outer
        // pair is ordered (+1 inside, −1 outside). Polarization swaps only the
        // inner pair, so both radial edges go from (±1 − ∓1)² = 4 to 0 and
        // every other edge keeps its value: the energy drops by exactly
        // 4(c₅ + c₅′) for the two radial edge coefficients.
        let g = disc(12, 24);
        let hs = HalfSpace::DiscSector { angle: 0.0 };
        let (j_in, j_out) = (5, 24 - 5); // mirror pair across θ = 0
        let mut values = vec![0.0; g.node_count()];
        values[g.node(5, j_in)] = -1.0;
        values[g.node(5, j_out)] = 1.0;
        values[g.node(6, j_in)] = 1.0;
        values[g.node(6, j_out)] = -1.0;
        let u = Field::new(g.clone(), values).unwrap();
        let rep = polarization_identities(&u, hs, 2.0).unwrap();
        assert!(
            rep.energy_after < rep.energy_before * 0.99,
            "{} -> {}",
            rep.energy_before,
            rep.energy_after
        );
        assert_eq!(rep.case, PolarizationCase::Mixed);
        // the drop is exactly the two radial edge contributions
        let mut expected_drop = 0.0;
        for e in &g.edges {
            let pairs = [
                (g.node(5, j_in), g.node(6, j_in)),
                (g.node(5, j_out), g.node(6, j_out)),
            ];
            if pairs.contains(&(e.a, e.b)) || pairs.contains(&(e.b, e.a)) {
                expected_drop += 4.0 * e.coeff;
            }
        }
        assert!(expected_drop > 0.0);
        let drop = rep.energy_before - rep.energy_after;
        assert!((drop - expected_drop).abs() <= 1e-12 * expected_drop);
    }

    #[test]
    fn foliated_schwarz_defect_examples() {
        let g = disc(24, 48);
        let u = Field::from_fn(g.clone(), |r, t| (2.0 - r) * r * t.cos());
        assert!(foliated_schwarz_defect(&u).unwrap() <= 1e-12);

        let v = Field::from_fn(g.clone(), |r, t| (2.0 - r) * r * (2.0 * t).cos());
        assert!(foliated_schwarz_defect(&v).unwrap() > 0.1);

        let zero = Field::constant(g, 0.0);
        assert!(matches!(
            foliated_schwarz_defect(&zero),
            Err(Error::DegenerateInput(_))
        ));
    }
}
