//! Finite-difference operators on the monodomain grid and on the two
//! overlapping subdomains.
//!
//! Global dofs are `x_j = j * dx`, `j = 1..=M`, with homogeneous Dirichlet
//! ends at `j = 0` and `j = M + 1`. Subdomain 1 owns globals `1..=N`,
//! subdomain 2 owns globals `M-N+1..=M`; their overlap holds `K - 1` shared
//! dofs plus the two interdomain boundary points.

use crate::error::{invalid, Result};
use crate::matrix::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Subdomain {
    One,
    Two,
}

impl Subdomain {
    pub const BOTH: [Subdomain; 2] = [Subdomain::One, Subdomain::Two];

    pub fn other(self) -> Subdomain {
        match self {
            Subdomain::One => Subdomain::Two,
            Subdomain::Two => Subdomain::One,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Subdomain::One => 0,
            Subdomain::Two => 1,
        }
    }
}

/// Overlapping-grid geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n: usize,
    overlap: usize,
    nu: f64,
}

impl GridSpec {
    pub fn new(n: usize, overlap: usize, nu: f64) -> Result<Self> {
        if overlap < 1 || overlap > n {
            return invalid(format!("overlap K={overlap} must satisfy 1 <= K <= N={n}"));
        }
        if !(nu > 0.0 && nu.is_finite()) {
            return invalid(format!("diffusivity nu={nu} must be positive"));
        }
        Ok(GridSpec { n, overlap, nu })
    }

    /// Unit diffusivity, the convention used by the nondimensional sweeps.
    pub fn unit(n: usize, overlap: usize) -> Result<Self> {
        Self::new(n, overlap, 1.0)
    }

    /// Dofs per subdomain.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn overlap(&self) -> usize {
        self.overlap
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Global dof count `M = 2N - K + 1`.
    pub fn global_dofs(&self) -> usize {
        2 * self.n + 1 - self.overlap
    }

    pub fn dx(&self) -> f64 {
        1.0 / (self.global_dofs() + 1) as f64
    }

    pub fn overlap_width(&self) -> f64 {
        self.overlap as f64 * self.dx()
    }

    /// First global dof (0-based) owned by a subdomain.
    pub fn offset(&self, sub: Subdomain) -> usize {
        match sub {
            Subdomain::One => 0,
            Subdomain::Two => self.global_dofs() - self.n,
        }
    }

    /// Timestep giving the nondimensional step `s = nu dt / dx^2`.
    pub fn dt_from_s(&self, s: f64) -> f64 {
        s * self.dx() * self.dx() / self.nu
    }

    pub fn s_from_dt(&self, dt: f64) -> f64 {
        self.nu * dt / (self.dx() * self.dx())
    }
}

/// Tridiagonal `(2, -1) / dx^2` operator on `dofs` interior points.
pub fn second_difference(dofs: usize, dx: f64) -> Result<DenseMatrix> {
    if dofs < 1 {
        return invalid("second difference needs at least one dof");
    }
    if !(dx > 0.0) {
        return invalid(format!("grid spacing dx={dx} must be positive"));
    }
    let h2 = 1.0 / (dx * dx);
    let mut a = DenseMatrix::zeros(dofs, dofs);
    for i in 0..dofs {
        a[(i, i)] = 2.0 * h2;
        if i > 0 {
            a[(i, i - 1)] = -h2;
        }
        if i + 1 < dofs {
            a[(i, i + 1)] = -h2;
        }
    }
    Ok(a)
}

fn restriction(grid: &GridSpec, sub: Subdomain) -> DenseMatrix {
    let mut r = DenseMatrix::zeros(grid.n, grid.global_dofs());
    let off = grid.offset(sub);
    for i in 0..grid.n {
        r[(i, off + i)] = 1.0;
    }
    r
}

/// `(R1, R2)`, each `N x M`.
pub fn restrictions(grid: &GridSpec) -> (DenseMatrix, DenseMatrix) {
    (
        restriction(grid, Subdomain::One),
        restriction(grid, Subdomain::Two),
    )
}

/// `B_ij = (I - R_i^T R_i) R_j^T`, an `M x N` map placing subdomain `j`
/// values at the global dofs outside subdomain `i`.
pub fn pick_operator(grid: &GridSpec, i: Subdomain) -> DenseMatrix {
    let r_i = restriction(grid, i);
    let r_j = restriction(grid, i.other());
    let m = grid.global_dofs();
    let complement = DenseMatrix::identity(m)
        .add_scaled(&r_i.transpose().matmul(&r_i).expect("R^T R"), -1.0)
        .expect("same shape");
    complement
        .matmul(&r_j.transpose())
        .expect("(I - R^T R) R^T")
}

/// Assembled operators of the two-subdomain problem for one timestep size.
#[derive(Debug, Clone)]
pub struct CouplingSet {
    pub grid: GridSpec,
    pub dt: f64,
    pub beta0: f64,
    /// Global `M x M` second difference.
    pub a: DenseMatrix,
    /// Restrictions `R1, R2`.
    pub r: [DenseMatrix; 2],
    /// Restricted operators `A_i = R_i A R_i^T`.
    pub a_sub: [DenseMatrix; 2],
    /// Pick operators `B12, B21`.
    pub b: [DenseMatrix; 2],
    /// Helmholtz matrices `H_i = beta0 I + nu dt A_i`.
    pub h: [DenseMatrix; 2],
    /// Couplings `J12 = -nu dt R1 A B12` and `J21`.
    pub j: [DenseMatrix; 2],
}

pub fn coupling_matrices(grid: &GridSpec, dt: f64, beta0: f64) -> Result<CouplingSet> {
    if !(dt > 0.0 && dt.is_finite()) {
        return invalid(format!("timestep dt={dt} must be positive"));
    }
    if !(beta0 > 0.0) {
        return invalid(format!("beta0={beta0} must be positive"));
    }
    let a = second_difference(grid.global_dofs(), grid.dx())?;
    let (r1, r2) = restrictions(grid);
    let r = [r1, r2];
    let b = [
        pick_operator(grid, Subdomain::One),
        pick_operator(grid, Subdomain::Two),
    ];
    let nu_dt = grid.nu * dt;
    let eye = DenseMatrix::identity(grid.n);
    let mut a_sub = Vec::with_capacity(2);
    let mut h = Vec::with_capacity(2);
    let mut j = Vec::with_capacity(2);
    for s in 0..2 {
        let ai = r[s].matmul(&a)?.matmul(&r[s].transpose())?;
        h.push(eye.scaled(beta0).add_scaled(&ai, nu_dt)?);
        j.push(r[s].matmul(&a)?.matmul(&b[s])?.scaled(-nu_dt));
        a_sub.push(ai);
    }
    let pair = |mut v: Vec<DenseMatrix>| {
        let second = v.pop().expect("two entries");
        [v.pop().expect("two entries"), second]
    };
    Ok(CouplingSet {
        grid: *grid,
        dt,
        beta0,
        a,
        r,
        a_sub: pair(a_sub),
        b,
        h: pair(h),
        j: pair(j),
    })
}

/// Dense `H_i^{-1}` and `H_i^{-1} J_ij` blocks, the building blocks of the
/// predictor and corrector matrices.
#[derive(Debug, Clone)]
pub struct SolvedBlocks {
    pub h_inv: [DenseMatrix; 2],
    pub h_inv_j: [DenseMatrix; 2],
}

impl CouplingSet {
    pub fn solved_blocks(&self) -> Result<SolvedBlocks> {
        let mut h_inv = Vec::with_capacity(2);
        let mut h_inv_j = Vec::with_capacity(2);
        for s in 0..2 {
            let lu = self.h[s].lu()?;
            let n = self.grid.n;
            let mut inv = DenseMatrix::zeros(n, n);
            let mut inv_j = DenseMatrix::zeros(n, n);
            let mut col = vec![0.0; n];
            for c in 0..n {
                col.fill(0.0);
                col[c] = 1.0;
                lu.solve_in_place(&mut col);
                for r in 0..n {
                    inv[(r, c)] = col[r];
                }
                let jc = self.j[s].column(c);
                if jc.iter().any(|&v| v != 0.0) {
                    let x = lu.solve(&jc);
                    for r in 0..n {
                        inv_j[(r, c)] = x[r];
                    }
                }
            }
            h_inv.push(inv);
            h_inv_j.push(inv_j);
        }
        let second_inv = h_inv.pop().unwrap();
        let second_j = h_inv_j.pop().unwrap();
        Ok(SolvedBlocks {
            h_inv: [h_inv.pop().unwrap(), second_inv],
            h_inv_j: [h_inv_j.pop().unwrap(), second_j],
        })
    }
}
