//! Linear solves shared by the descent preconditioner and the
//! second-variation probe: a conjugate-gradient solver for the discrete
//! Neumann problem (with optional Dirichlet mask) and a dense generalized
//! eigensolve for the small Ritz systems.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::Error;
use crate::fields::{Field, ZeroAverage};
use crate::geometry::Grid;
use crate::Result;

/// Conjugate-gradient solver for `−Δ x = b` with the edge-sum Neumann
/// Laplacian, in the quadrature-weighted inner product where the operator is
/// self-adjoint. Without a mask the operator has the constant kernel, so both
/// the right-hand side and the iterates are kept zero-average. With a
/// Dirichlet mask, constrained nodes are pinned to zero and the restricted
/// operator is positive definite.
pub struct NeumannSolver {
    grid: Arc<Grid>,
    /// Jacobi diagonal (Σ_e c_e)/w_k per node.
    diag: Vec<f64>,
    /// `free[k] = false` pins node k to zero (Dirichlet mask).
    free: Option<Vec<bool>>,
}

impl NeumannSolver {
    pub fn new(grid: Arc<Grid>) -> Self {
        let diag = jacobi_diagonal(&grid);
        NeumannSolver {
            grid,
            diag,
            free: None,
        }
    }

    /// Restrict the solve to the nodes marked `true`; the rest are pinned
    /// to zero (used for the Dirichlet half-domain subspace).
    pub fn with_mask(grid: Arc<Grid>, free: Vec<bool>) -> Result<Self> {
        if free.len() != grid.node_count() {
            return Err(Error::GridMismatch(format!(
                "mask has {} entries, grid has {} nodes",
                free.len(),
                grid.node_count()
            )));
        }
        if !free.iter().any(|&f| f) {
            return Err(Error::DegenerateInput("Dirichlet mask pins every node".into()));
        }
        let diag = jacobi_diagonal(&grid);
        Ok(NeumannSolver {
            grid,
            diag,
            free: Some(free),
        })
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for e in &self.grid.edges {
            let t = e.coeff * (x[e.a] - x[e.b]);
            out[e.a] += t;
            out[e.b] -= t;
        }
        for (o, w) in out.iter_mut().zip(&self.grid.weights) {
            *o /= w;
        }
        if let Some(free) = &self.free {
            for (o, &f) in out.iter_mut().zip(free) {
                if !f {
                    *o = 0.0;
                }
            }
        }
    }

    fn project(&self, x: &mut [f64]) {
        match &self.free {
            Some(free) => {
                for (v, &f) in x.iter_mut().zip(free) {
                    if !f {
                        *v = 0.0;
                    }
                }
            }
            None => {
                let vol: f64 = self.grid.weights.iter().sum();
                let mean: f64 = x
                    .iter()
                    .zip(&self.grid.weights)
                    .map(|(v, w)| v * w)
                    .sum::<f64>()
                    / vol;
                for v in x.iter_mut() {
                    *v -= mean;
                }
            }
        }
    }

    /// Preconditioned CG. `tol` is relative to the right-hand-side norm.
    pub fn solve(&self, rhs: &Field, tol: f64, max_iter: usize) -> Result<Field> {
        if !Arc::ptr_eq(&rhs.grid, &self.grid)
            && rhs.values.len() != self.grid.node_count()
        {
            return Err(Error::GridMismatch("rhs lives on a different grid".into()));
        }
        let w = &self.grid.weights;
        let dot = |a: &[f64], b: &[f64]| -> f64 {
            a.iter().zip(b).zip(w).map(|((x, y), wt)| x * y * wt).sum()
        };
        let n = rhs.values.len();
        let mut b = rhs.values.clone();
        self.project(&mut b);
        let bnorm = dot(&b, &b).sqrt();
        let mut x = vec![0.0; n];
        if bnorm == 0.0 {
            return Field::new(self.grid.clone(), x);
        }
        let mut r = b;
        let mut z: Vec<f64> = r.iter().zip(&self.diag).map(|(v, d)| v / d).collect();
        self.project(&mut z);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut ap = vec![0.0; n];
        for _ in 0..max_iter {
            self.apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if pap <= 0.0 {
                return Err(Error::Numerical(
                    "CG curvature is not positive; operator lost definiteness".into(),
                ));
            }
            let alpha = rz / pap;
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            if dot(&r, &r).sqrt() <= tol * bnorm {
                self.project(&mut x);
                let mut f = Field::new(self.grid.clone(), x)?;
                if self.free.is_none() {
                    f.zero_average = ZeroAverage::Yes;
                }
                return Ok(f);
            }
            for ((zk, rk), d) in z.iter_mut().zip(&r).zip(&self.diag) {
                *zk = rk / d;
            }
            self.project(&mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..n {
                p[k] = z[k] + beta * p[k];
            }
        }
        Err(Error::Numerical(format!(
            "CG did not reach tolerance {tol} within {max_iter} iterations"
        )))
    }
}

fn jacobi_diagonal(grid: &Grid) -> Vec<f64> {
    let mut d = vec![0.0; grid.node_count()];
    for e in &grid.edges {
        d[e.a] += e.coeff;
        d[e.b] += e.coeff;
    }
    for (dk, w) in d.iter_mut().zip(&grid.weights) {
        *dk /= w;
        if *dk <= 0.0 {
            // isolated node (cannot happen on the built grids); keep the
            // preconditioner well defined anyway
            *dk = 1.0;
        }
    }
    d
}

/// Smallest eigenpair of the generalized symmetric problem `A y = λ B y`
/// with B symmetric positive definite, for the small dense Ritz systems.
/// Returns (λ_min, y).
pub fn smallest_generalized_eigenpair(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(f64, Vec<f64>)> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || b.ncols() != n {
        return Err(Error::Parameter("eigensolve needs square matrices of equal size".into()));
    }
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("Ritz mass matrix is not positive definite".into()))?;
    // transform to the standard problem L⁻¹ A L⁻ᵀ ỹ = λ ỹ
    let l = chol.l();
    let linv_a = l
        .clone()
        .solve_lower_triangular(a)
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let m = l
        .solve_lower_triangular(&linv_a.transpose())
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    // symmetrize against round-off before the eigensolve
    let m = (&m + m.transpose()) * 0.5;
    let eig = m.symmetric_eigen();
    let (idx, &lam) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.partial_cmp(y.1).unwrap())
        .ok_or_else(|| Error::Numerical("empty eigenproblem".into()))?;
    let ytilde = eig.eigenvectors.column(idx).into_owned();
    // back-substitute y = L⁻ᵀ ỹ
    let y = chol
        .l()
        .transpose()
        .solve_upper_triangular(&ytilde)
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    Ok((lam, y.iter().copied().collect()))
}
