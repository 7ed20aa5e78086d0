//! Grid functions and the discrete calculus: integrals, L^p norms, the
//! edge-sum Dirichlet energy, the adjoint Neumann Laplacian, zero-average
//! projection and chart-aware Cartesian partial derivatives.

use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::error::Error;
use crate::geometry::{Grid, GridKind, ReflectionPermutation};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroAverage {
    Yes,
    No,
    Unknown,
}

/// A scalar function on a grid.
#[derive(Debug, Clone)]
pub struct Field {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
    pub zero_average: ZeroAverage,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::GridMismatch(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        Ok(Field {
            grid,
            values,
            zero_average: ZeroAverage::Unknown,
        })
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Self {
        let n = grid.node_count();
        Field {
            grid,
            values: vec![c; n],
            zero_average: if c == 0.0 {
                ZeroAverage::Yes
            } else {
                ZeroAverage::No
            },
        }
    }

    /// Sample a function of (r, θ). For the interval the first argument is x
    /// and the second is 0.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = vec![0.0; grid.node_count()];
        if grid.kind == GridKind::Interval {
            for i in 0..grid.m_r {
                values[i] = f(grid.r[i], 0.0);
            }
        } else {
            for i in 0..grid.m_r {
                for j in 0..grid.m_theta {
                    values[grid.node(i, j)] = f(grid.r[i], grid.theta[j]);
                }
            }
        }
        Field {
            grid,
            values,
            zero_average: ZeroAverage::Unknown,
        }
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.values {
            *v *= c;
        }
    }

    /// f ∘ σ for a reflection permutation of the same grid.
    pub fn compose(&self, refl: &ReflectionPermutation) -> Field {
        let values = refl.sigma.iter().map(|&k| self.values[k]).collect();
        Field {
            grid: self.grid.clone(),
            values,
            zero_average: self.zero_average,
        }
    }
}

/// Σ w_k f_k.
pub fn integrate(f: &Field) -> f64 {
    f.values
        .iter()
        .zip(&f.grid.weights)
        .map(|(v, w)| v * w)
        .sum()
}

/// Weighted inner product Σ w_k f_k g_k (the discrete L² pairing).
pub fn inner_l2(f: &Field, g: &Field) -> f64 {
    f.values
        .iter()
        .zip(&g.values)
        .zip(&f.grid.weights)
        .map(|((a, b), w)| a * b * w)
        .sum()
}

/// (Σ w |f|^p)^{1/p}.
pub fn lp_norm(f: &Field, p: f64) -> Result<f64> {
    if p < 1.0 {
        return Err(Error::Parameter(format!("L^p norm needs p >= 1, got {p}")));
    }
    let s: f64 = f
        .values
        .iter()
        .zip(&f.grid.weights)
        .map(|(v, w)| v.abs().powf(p) * w)
        .sum();
    Ok(s.powf(1.0 / p))
}

/// The edge-sum quadratic form Σ c_e (f_a − f_b)², discretizing ∫|∇f|².
pub fn dirichlet_energy(f: &Field) -> f64 {
    f.grid
        .edges
        .iter()
        .map(|e| {
            let d = f.values[e.a] - f.values[e.b];
            e.coeff * d * d
        })
        .sum()
}

/// The associated bilinear form Σ c_e (f_a − f_b)(g_a − g_b).
pub fn dirichlet_form(f: &Field, g: &Field) -> f64 {
    f.grid
        .edges
        .iter()
        .map(|e| e.coeff * (f.values[e.a] - f.values[e.b]) * (g.values[e.a] - g.values[e.b]))
        .sum()
}

/// Subtract the mean so that ∫ f = 0.
pub fn project_zero_average(f: &Field) -> Field {
    let mean = integrate(f) / f.grid.volume();
    let values = f.values.iter().map(|v| v - mean).collect();
    Field {
        grid: f.grid.clone(),
        values,
        zero_average: ZeroAverage::Yes,
    }
}

/// Node-wise −Δf, defined as the adjoint of the Dirichlet form:
/// ∫ g (−Δf) = a(f, g) exactly for all g.
pub fn apply_laplacian(f: &Field) -> Field {
    let mut out = vec![0.0; f.values.len()];
    for e in &f.grid.edges {
        let t = e.coeff * (f.values[e.a] - f.values[e.b]);
        out[e.a] += t;
        out[e.b] -= t;
    }
    for (o, w) in out.iter_mut().zip(&f.grid.weights) {
        *o /= w;
    }
    Field {
        grid: f.grid.clone(),
        values: out,
        zero_average: ZeroAverage::Yes, // Neumann compatibility: ∫(−Δf) = 0
    }
}

/// Radial derivative by central differences, second-order one-sided at the
/// radial boundaries.
fn radial_derivative(f: &Field) -> Vec<f64> {
    let g = &f.grid;
    let (mr, mt) = (g.m_r, g.m_theta.max(1));
    let dr = g.dr;
    let mut out = vec![0.0; f.values.len()];
    let v = |i: usize, j: usize| f.values[i * mt + j];
    for j in 0..mt {
        for i in 0..mr {
            // third-order one-sided stencils at the first and last rows: the
            // tangential derivative near the axis is a fine cancellation of
            // u_r and u_θ/r, and a second-order end stencil leaves sign noise
            // above the default nodal-count band there
            out[i * mt + j] = if i == 0 {
                if mr >= 4 {
                    (-11.0 * v(0, j) + 18.0 * v(1, j) - 9.0 * v(2, j) + 2.0 * v(3, j)) / (6.0 * dr)
                } else if mr == 3 {
                    (-3.0 * v(0, j) + 4.0 * v(1, j) - v(2, j)) / (2.0 * dr)
                } else {
                    (v(1, j) - v(0, j)) / dr
                }
            } else if i == mr - 1 {
                if mr >= 4 {
                    (11.0 * v(mr - 1, j) - 18.0 * v(mr - 2, j) + 9.0 * v(mr - 3, j)
                        - 2.0 * v(mr - 4, j))
                        / (6.0 * dr)
                } else {
                    (3.0 * v(mr - 1, j) - 4.0 * v(mr - 2, j) + v(mr - 3, j)) / (2.0 * dr)
                }
            } else {
                (v(i + 1, j) - v(i - 1, j)) / (2.0 * dr)
            };
        }
    }
    out
}

/// Tangential derivative ∇f·e_θ by chord-corrected central differences
/// (exact for fields linear in the chart plane). Axisymmetric charts use the
/// mirror extension across θ = 0 and θ = π.
fn tangential_derivative(f: &Field) -> Vec<f64> {
    let g = &f.grid;
    let (mr, mt) = (g.m_r, g.m_theta);
    let dt = g.dtheta;
    let chord = 2.0 * dt.sin();
    let mut out = vec![0.0; f.values.len()];
    let v = |i: usize, j: usize| f.values[i * mt + j];
    for i in 0..mr {
        let ri = g.r[i];
        for j in 0..mt {
            let diff = match g.kind {
                GridKind::DiscFull => v(i, (j + 1) % mt) - v(i, (j + mt - 1) % mt),
                _ => {
                    // mirror ghost values across the axis
                    let up = if j + 1 < mt { v(i, j + 1) } else { v(i, mt - 1) };
                    let dn = if j > 0 { v(i, j - 1) } else { v(i, 0) };
                    up - dn
                }
            };
            out[i * mt + j] = diff / (ri * chord);
        }
    }
    out
}

/// Cartesian partial derivatives in the chart plane: (∂f/∂x_e, ∂f/∂x_τ)
/// where e is the chart's north-pole direction (θ = 0) and τ ⊥ e.
pub fn cartesian_partials(f: &Field) -> Result<(Field, Field)> {
    match f.grid.kind {
        GridKind::Interval => Err(Error::GridMismatch(
            "cartesian partials need a 2D chart grid".into(),
        )),
        _ => {
            let ur = radial_derivative(f);
            let ut = tangential_derivative(f); // already divided by r
            let g = &f.grid;
            let mut de = vec![0.0; f.values.len()];
            let mut dtau = vec![0.0; f.values.len()];
            for i in 0..g.m_r {
                for j in 0..g.m_theta {
                    let k = g.node(i, j);
                    let (s, c) = g.theta[j].sin_cos();
                    de[k] = ur[k] * c - ut[k] * s;
                    dtau[k] = ur[k] * s + ut[k] * c;
                }
            }
            Ok((
                Field {
                    grid: f.grid.clone(),
                    values: de,
                    zero_average: ZeroAverage::Unknown,
                },
                Field {
                    grid: f.grid.clone(),
                    values: dtau,
                    zero_average: ZeroAverage::Unknown,
                },
            ))
        }
    }
}

/// Dump as CSV columns (r, theta, value).
pub fn write_field_csv<W: Write>(f: &Field, mut w: W) -> Result<()> {
    writeln!(w, "r,theta,value")?;
    let g = &f.grid;
    if g.kind == GridKind::Interval {
        for i in 0..g.m_r {
            writeln!(w, "{:.17e},0,{:.17e}", g.r[i], f.values[i])?;
        }
        return Ok(());
    }
    for i in 0..g.m_r {
        for j in 0..g.m_theta {
            writeln!(
                w,
                "{:.17e},{:.17e},{:.17e}",
                g.r[i],
                g.theta[j],
                f.values[g.node(i, j)]
            )?;
        }
    }
    Ok(())
}

/// Load a field from the CSV format written by [`write_field_csv`],
/// checking node coordinates against the supplied grid.
pub fn read_field_csv<R: BufRead>(grid: Arc<Grid>, r: R) -> Result<Field> {
    let mut values = Vec::with_capacity(grid.node_count());
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parameter("empty field CSV".into()))??;
    if header.trim() != "r,theta,value" {
        return Err(Error::Parameter(format!(
            "unexpected field CSV header: {header}"
        )));
    }
    for (row, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split(',');
        let parse = |s: Option<&str>| -> Result<f64> {
            s.ok_or_else(|| Error::Parameter(format!("short row {row} in field CSV")))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parameter(format!("bad number in field CSV row {row}: {e}")))
        };
        let rv = parse(it.next())?;
        let tv = parse(it.next())?;
        let val = parse(it.next())?;
        let k = values.len();
        if k >= grid.node_count() {
            return Err(Error::GridMismatch("field CSV has too many rows".into()));
        }
        let (i, j) = (k / grid.m_theta.max(1), k % grid.m_theta.max(1));
        let want_r = grid.r[i];
        let want_t = if grid.theta.is_empty() { 0.0 } else { grid.theta[j] };
        if (rv - want_r).abs() > 1e-9 || (tv - want_t).abs() > 1e-9 {
            return Err(Error::GridMismatch(format!(
                "node coordinates at row {row} do not match the grid"
            )));
        }
        values.push(val);
    }
    if values.len() != grid.node_count() {
        return Err(Error::GridMismatch(format!(
            "field CSV has {} rows, grid has {} nodes",
            values.len(),
            grid.node_count()
        )));
    }
    Field::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{
        build_ball_grid, build_interval_grid, reflection_permutation, HalfSpace,
    };
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn disc(m_r: usize, m_t: usize) -> Arc<Grid> {
        Arc::new(build_ball_grid(2, m_r, m_t).unwrap())
    }

    #[test]
    fn integrate_basics() {
        let g = disc(64, 128);
        let one = Field::constant(g.clone(), 1.0);
        assert!((integrate(&one) - PI).abs() / PI < 1e-3);
        let zero = Field::constant(g.clone(), 0.0);
        assert_eq!(integrate(&zero), 0.0);
        let cos = Field::from_fn(g.clone(), |_, t| t.cos());
        assert!(integrate(&cos).abs() < 1e-12);
    }

    #[test]
    fn lp_norm_basics() {
        let g = disc(64, 128);
        let c = Field::constant(g.clone(), -3.0);
        let expect = 3.0 * g.volume().powf(1.0 / 4.0);
        assert!((lp_norm(&c, 4.0).unwrap() - expect).abs() < 1e-12);

        let cos = Field::from_fn(g.clone(), |_, t| t.cos());
        let expect = (PI / 2.0_f64).sqrt();
        assert!((lp_norm(&cos, 2.0).unwrap() - expect).abs() / expect < 1e-3);

        assert!(matches!(
            lp_norm(&cos, 0.5),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn dirichlet_energy_basics() {
        let g = disc(128, 128);
        let c = Field::constant(g.clone(), 5.0);
        assert_eq!(dirichlet_energy(&c), 0.0);
        // x1 = r cosθ has |∇x1|² = 1, so the energy is the area; the edge
        // sum misses the outer half-cell (x1 has nonzero boundary slope),
        // an O(Δr) deficit that is absent for Neumann-compatible fields
        let x1 = Field::from_fn(g.clone(), |r, t| r * t.cos());
        assert!((dirichlet_energy(&x1) - PI).abs() / PI < 1e-2);
    }

    #[test]
    fn zero_average_projection() {
        let g = disc(32, 64);
        let f = Field::constant(g.clone(), 5.0);
        let p = project_zero_average(&f);
        assert!(p.linf() < 1e-13);

        let f = Field::from_fn(g.clone(), |_, t| 1.0 + t.cos());
        let p = project_zero_average(&f);
        let q = project_zero_average(&p);
        for (a, b) in p.values.iter().zip(&q.values) {
            assert!((a - b).abs() < 1e-14);
        }
        let cos = Field::from_fn(g.clone(), |_, t| t.cos());
        let diff: f64 = p
            .values
            .iter()
            .zip(&cos.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }

    #[test]
    fn laplacian_is_adjoint_of_energy_form() {
        let g = disc(24, 48);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let f = Field::new(
                g.clone(),
                (0..g.node_count()).map(|_| rng.gen::<f64>() - 0.5).collect(),
            )
            .unwrap();
            let h = Field::new(
                g.clone(),
                (0..g.node_count()).map(|_| rng.gen::<f64>() - 0.5).collect(),
            )
            .unwrap();
            let lap = apply_laplacian(&f);
            let lhs = inner_l2(&h, &lap);
            let rhs = dirichlet_form(&f, &h);
            assert!(
                (lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()),
                "adjoint mismatch: {lhs} vs {rhs}"
            );
            assert!(integrate(&lap).abs() < 1e-10);
        }
    }

    #[test]
    fn laplacian_of_constant_is_zero() {
        let g = disc(16, 32);
        let c = Field::constant(g, 3.0);
        assert_eq!(apply_laplacian(&c).linf(), 0.0);
    }

    #[test]
    fn reflection_preserves_energy_and_norms() {
        let g = disc(16, 32);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = Field::new(
            g.clone(),
            (0..g.node_count()).map(|_| rng.gen::<f64>() - 0.5).collect(),
        )
        .unwrap();
        for hs in g.compatible_half_spaces() {
            let refl = reflection_permutation(&g, hs).unwrap();
            let fs = f.compose(&refl);
            assert!((dirichlet_energy(&fs) - dirichlet_energy(&f)).abs() < 1e-12);
            for p in [2.0, 2.7, 4.0] {
                assert!(
                    (lp_norm(&fs, p).unwrap() - lp_norm(&f, p).unwrap()).abs() < 1e-12
                );
            }
            // applying the reflection twice returns the field bit-exactly
            let back = fs.compose(&refl);
            assert_eq!(back.values, f.values);
        }
    }

    #[test]
    fn partials_of_linear_field_are_exact() {
        let g = disc(32, 64);
        let x1 = Field::from_fn(g.clone(), |r, t| r * t.cos());
        let (de, dtau) = cartesian_partials(&x1).unwrap();
        for k in 0..g.node_count() {
            assert!((de.values[k] - 1.0).abs() < 1e-10, "de={}", de.values[k]);
            assert!(dtau.values[k].abs() < 1e-10);
        }
    }

    #[test]
    fn partials_of_radial_field_follow_chain_rule() {
        let g = disc(32, 64);
        let f = Field::from_fn(g.clone(), |r, _| r * r);
        let (_, dtau) = cartesian_partials(&f).unwrap();
        // ∂_τ f = (x_τ / r) g'(r) = sinθ · 2r
        for i in 1..g.m_r - 1 {
            for j in 0..g.m_theta {
                let expect = g.theta[j].sin() * 2.0 * g.r[i];
                assert!(
                    (dtau.values[g.node(i, j)] - expect).abs() < 1e-3,
                    "at ({i},{j})"
                );
            }
        }
        // vanishes on the axis x_τ = 0
        for i in 0..g.m_r {
            assert!(dtau.values[g.node(i, 0)].abs() < 1e-12);
        }
    }

    #[test]
    fn field_csv_round_trip() {
        let g = disc(12, 16);
        let f = Field::from_fn(g.clone(), |r, t| r * (2.0 * t).cos());
        let mut buf = Vec::new();
        write_field_csv(&f, &mut buf).unwrap();
        let back = read_field_csv(g.clone(), &buf[..]).unwrap();
        for (a, b) in f.values.iter().zip(&back.values) {
            assert!((a - b).abs() < 1e-15);
        }
        // wrong grid is rejected
        let g2 = disc(12, 32);
        assert!(read_field_csv(g2, &buf[..]).is_err());
    }

    #[test]
    fn interval_round_trip_and_energy() {
        let g = Arc::new(build_interval_grid(64).unwrap());
        let f = Field::from_fn(g.clone(), |x, _| x);
        // telescoping sum: (M−1) edges × coeff (1/Δx) × (Δx)² = 2 − Δx
        assert!((dirichlet_energy(&f) - (2.0 - g.dr)).abs() < 1e-12);
        let mut buf = Vec::new();
        write_field_csv(&f, &mut buf).unwrap();
        let back = read_field_csv(g, &buf[..]).unwrap();
        assert_eq!(back.values.len(), 64);
    }
}
