//! Matrix-free time integrators: the monodomain BDFk stepper and the
//! singlerate and multirate Schwarz predictor-corrector loops.
//!
//! Overlapping-grid states use the same flat block layouts as the growth
//! matrices, so one step of [`run_singlerate`] or [`run_multirate`] can be
//! compared directly against `G z`.

use crate::coeffs::{bdf_weights, ext_weights, multirate_weights, BdfWeights, SchemeSpec};
use crate::discretize::{GridSpec, Subdomain};
use crate::error::{invalid, Error, Result};
use crate::layout::{singlerate_layout, BlockLayout};
use crate::multirate::{multirate_layout, MultirateSpec};

/// Norm above which a run is declared to have blown up.
pub const OVERFLOW_NORM: f64 = 1e100;

/// Fraction of a trajectory treated as startup transient by
/// [`estimate_growth_rate`].
pub const TRANSIENT_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Time of each recorded state, starting with the initial one.
    pub times: Vec<f64>,
    /// Max-norm of each recorded state.
    pub norms: Vec<f64>,
    pub final_state: Vec<f64>,
    /// Set when the run stopped because a norm exceeded [`OVERFLOW_NORM`].
    /// The offending state is not recorded.
    pub overflowed: bool,
}

impl Trajectory {
    fn start(t0: f64, state: &[f64]) -> Self {
        Trajectory {
            times: vec![t0],
            norms: vec![max_norm(state)],
            final_state: state.to_vec(),
            overflowed: false,
        }
    }

    /// Records `state`; returns false when the run must stop.
    fn record(&mut self, t: f64, state: Vec<f64>) -> Result<bool> {
        if state.iter().any(|v| v.is_nan()) {
            return Err(Error::NonFinite(format!("state became NaN at t={t}")));
        }
        let norm = max_norm(&state);
        if !(norm <= OVERFLOW_NORM) {
            self.overflowed = true;
            return Ok(false);
        }
        self.times.push(t);
        self.norms.push(norm);
        self.final_state = state;
        Ok(true)
    }

    /// Number of completed steps.
    pub fn steps(&self) -> usize {
        self.norms.len() - 1
    }
}

pub fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// `(norm[last] / norm[last - window])^(1/window)`.
pub fn empirical_growth_rate(traj: &Trajectory, window: usize) -> Result<f64> {
    let len = traj.norms.len();
    if window == 0 || window >= len {
        return invalid(format!(
            "window {window} needs at least {} recorded norms",
            window + 1
        ));
    }
    let last = traj.norms[len - 1];
    let first = traj.norms[len - 1 - window];
    if !(first > 0.0 && last > 0.0) || !first.is_finite() || !last.is_finite() {
        return Err(Error::NonFinite(format!(
            "growth rate from norms {first} and {last}"
        )));
    }
    Ok(((last.ln() - first.ln()) / window as f64).exp())
}

/// Growth rate over the trajectory with the first [`TRANSIENT_FRACTION`]
/// of the steps discarded.
pub fn estimate_growth_rate(traj: &Trajectory) -> Result<f64> {
    let steps = traj.steps();
    let skip = (steps as f64 * TRANSIENT_FRACTION).floor() as usize;
    empirical_growth_rate(traj, steps - skip)
}

/// Boundary value `gamma(t)` imposed at the right end of the monodomain.
pub struct BoundarySignal {
    f: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl BoundarySignal {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        BoundarySignal { f: Box::new(f) }
    }

    pub fn zero() -> Self {
        Self::new(|_| 0.0)
    }

    pub fn at(&self, t: f64) -> f64 {
        (self.f)(t)
    }
}

impl std::fmt::Debug for BoundarySignal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("BoundarySignal")
    }
}

/// Thomas solver for `beta0 I + r T` with `T = tridiag(-1, 2, -1)`.
#[derive(Debug, Clone)]
struct HelmholtzSolver {
    off: f64,
    inv_pivot: Vec<f64>,
    upper: Vec<f64>,
}

impl HelmholtzSolver {
    fn new(dofs: usize, beta0: f64, r: f64) -> Result<Self> {
        let diag = beta0 + 2.0 * r;
        let off = -r;
        let mut inv_pivot = Vec::with_capacity(dofs);
        let mut upper = Vec::with_capacity(dofs);
        let mut prev_upper = 0.0;
        for i in 0..dofs {
            let pivot = if i == 0 {
                diag
            } else {
                diag - off * prev_upper
            };
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::Singular { column: i });
            }
            inv_pivot.push(1.0 / pivot);
            prev_upper = off / pivot;
            upper.push(prev_upper);
        }
        Ok(HelmholtzSolver {
            off,
            inv_pivot,
            upper,
        })
    }

    fn solve_in_place(&self, b: &mut [f64]) {
        let n = b.len();
        b[0] *= self.inv_pivot[0];
        for i in 1..n {
            b[i] = (b[i] - self.off * b[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            b[i] -= self.upper[i] * b[i + 1];
        }
    }
}

/// Monodomain BDFk integrator on `dofs` interior points of `[0, 1]` with
/// `u(0) = 0` and `u(1) = gamma(t)`.
#[derive(Debug, Clone)]
pub struct Monodomain {
    dofs: usize,
    dx: f64,
    nu: f64,
    dt: f64,
    bdf: BdfWeights,
    solver: HelmholtzSolver,
}

impl Monodomain {
    pub fn new(dofs: usize, nu: f64, dt: f64, k: usize) -> Result<Self> {
        if dofs < 1 {
            return invalid("monodomain needs at least one dof");
        }
        if !(dt > 0.0 && dt.is_finite()) || !(nu > 0.0 && nu.is_finite()) {
            return invalid(format!("dt={dt} and nu={nu} must be positive"));
        }
        let bdf = bdf_weights(k)?;
        let dx = 1.0 / (dofs + 1) as f64;
        let solver = HelmholtzSolver::new(dofs, bdf.beta0(), nu * dt / (dx * dx))?;
        Ok(Monodomain {
            dofs,
            dx,
            nu,
            dt,
            bdf,
            solver,
        })
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Grid points `x_j = j dx`, `j = 1..=dofs`.
    pub fn nodes(&self) -> Vec<f64> {
        (1..=self.dofs).map(|j| j as f64 * self.dx).collect()
    }

    /// `u^n` from `history = [u^{n-1}, u^{n-2}, ...]` (at least `k` levels)
    /// and the boundary value `gamma(t^n)`.
    pub fn step(&self, history: &[Vec<f64>], gamma: f64) -> Result<Vec<f64>> {
        let k = self.bdf.order();
        if history.len() < k {
            return invalid(format!(
                "BDF{k} needs {k} history levels, got {}",
                history.len()
            ));
        }
        let mut u = vec![0.0; self.dofs];
        for (l, level) in history.iter().take(k).enumerate() {
            if level.len() != self.dofs {
                return Err(Error::Dimension(format!(
                    "history level of length {} on {} dofs",
                    level.len(),
                    self.dofs
                )));
            }
            let beta = self.bdf.history(l + 1);
            for (ui, hi) in u.iter_mut().zip(level) {
                *ui -= beta * hi;
            }
        }
        u[self.dofs - 1] += self.nu * self.dt * gamma / (self.dx * self.dx);
        self.solver.solve_in_place(&mut u);
        Ok(u)
    }

    /// Runs `steps` steps from `history = [u^0, u^{-1}, ...]` at `t0`.
    pub fn run(
        &self,
        history: &[Vec<f64>],
        t0: f64,
        steps: usize,
        boundary: &BoundarySignal,
    ) -> Result<Trajectory> {
        let k = self.bdf.order();
        if history.len() < k {
            return invalid(format!(
                "BDF{k} needs {k} initial levels, got {}",
                history.len()
            ));
        }
        let mut levels: Vec<Vec<f64>> = history[..k].to_vec();
        let mut traj = Trajectory::start(t0, &levels[0]);
        for n in 1..=steps {
            let t = t0 + n as f64 * self.dt;
            let next = self.step(&levels, boundary.at(t))?;
            levels.pop();
            levels.insert(0, next.clone());
            if !traj.record(t, next)? {
                break;
            }
        }
        Ok(traj)
    }
}

/// Monodomain step as a free function over an explicit grid.
pub fn monodomain_step(
    history: &[Vec<f64>],
    nu: f64,
    dt: f64,
    k: usize,
    t_n: f64,
    boundary: &BoundarySignal,
) -> Result<Vec<f64>> {
    let dofs = history.first().map_or(0, Vec::len);
    Monodomain::new(dofs, nu, dt, k)?.step(history, boundary.at(t_n))
}

/// Per-subdomain Helmholtz solve and interface coupling at one timestep.
#[derive(Debug, Clone)]
struct SubdomainOps {
    grid: GridSpec,
    dt: f64,
    solvers: [HelmholtzSolver; 2],
}

impl SubdomainOps {
    fn new(grid: &GridSpec, dt: f64, beta0: f64) -> Result<Self> {
        let dx = grid.dx();
        let r = grid.nu() * dt / (dx * dx);
        let s = HelmholtzSolver::new(grid.n(), beta0, r)?;
        Ok(SubdomainOps {
            grid: *grid,
            dt,
            solvers: [s.clone(), s],
        })
    }

    /// `J_ij u_j`: place the values of `u_j` outside subdomain `i` on the
    /// global grid, apply the global second difference on `i`'s rows and
    /// scale by `-nu dt`.
    fn couple(&self, i: Subdomain, u_other: &[f64], out: &mut [f64]) {
        let g = &self.grid;
        let (n, m) = (g.n(), g.global_dofs());
        let off_i = g.offset(i);
        let off_j = g.offset(i.other());
        let outside = |idx: usize| idx < off_i || idx >= off_i + n;
        let value = |idx: isize| -> f64 {
            if idx < 0 || idx as usize >= m {
                return 0.0;
            }
            let idx = idx as usize;
            if outside(idx) && idx >= off_j && idx < off_j + n {
                u_other[idx - off_j]
            } else {
                0.0
            }
        };
        let inv_dx2 = 1.0 / (g.dx() * g.dx());
        let scale = -g.nu() * self.dt * inv_dx2;
        for (r, o) in out.iter_mut().enumerate() {
            let gi = (off_i + r) as isize;
            let stencil = 2.0 * value(gi) - value(gi - 1) - value(gi + 1);
            *o = scale * stencil;
        }
    }

    /// `H_i^{-1} (rhs + J_ij u_other)`.
    fn solve_with_coupling(&self, i: Subdomain, mut rhs: Vec<f64>, u_other: &[f64]) -> Vec<f64> {
        let mut cpl = vec![0.0; rhs.len()];
        self.couple(i, u_other, &mut cpl);
        for (r, c) in rhs.iter_mut().zip(&cpl) {
            *r += c;
        }
        self.solvers[i.index()].solve_in_place(&mut rhs);
        rhs
    }
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    if a != 0.0 {
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi += a * xi;
        }
    }
}

fn check_state(layout: &BlockLayout, z: &[f64]) -> Result<()> {
    if z.len() != layout.dim() {
        return Err(Error::Dimension(format!(
            "state of length {} for a layout of dimension {}",
            z.len(),
            layout.dim()
        )));
    }
    Ok(())
}

/// Applies `Q` corrector passes with the blended final pass of
/// [`SchemeSpec::blends_final_corrector`]. `pass` maps one iterate of the
/// current-level unknowns to the next.
fn corrector_passes(
    scheme: &SchemeSpec,
    mut current: Vec<Vec<f64>>,
    mut pass: impl FnMut(&[Vec<f64>]) -> Vec<Vec<f64>>,
) -> Vec<Vec<f64>> {
    let blend = scheme.blends_final_corrector();
    let plain = if blend { scheme.q - 2 } else { scheme.q };
    for _ in 0..plain {
        current = pass(&current);
    }
    if blend {
        let gamma = scheme.gamma_blend;
        let next = pass(&current);
        let blended: Vec<Vec<f64>> = next
            .iter()
            .zip(&current)
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| gamma * x + (1.0 - gamma) * y)
                    .collect()
            })
            .collect();
        current = pass(&blended);
    }
    current
}

/// Explicit singlerate Schwarz PC loop on the eight-block layout.
pub fn run_singlerate(
    scheme: &SchemeSpec,
    grid: &GridSpec,
    dt: f64,
    initial: &[f64],
    steps: usize,
) -> Result<Trajectory> {
    scheme.validate()?;
    if steps < 1 {
        return invalid("need at least one step");
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return invalid(format!("timestep dt={dt} must be positive"));
    }
    let layout = singlerate_layout(grid.n());
    check_state(&layout, initial)?;
    let bdf = bdf_weights(scheme.k)?;
    let ext = ext_weights(scheme.m)?;
    let ops = SubdomainOps::new(grid, dt, bdf.beta0())?;
    let n = grid.n();
    let block = |z: &[f64], d: Subdomain, lag: usize| -> Vec<f64> {
        let b = 2 * lag + d.index();
        z[b * n..(b + 1) * n].to_vec()
    };

    let mut z = initial.to_vec();
    let mut traj = Trajectory::start(0.0, &z);
    for step in 1..=steps {
        // History right-hand sides -sum beta_l u^{n-l} and extrapolations.
        let mut hist = [vec![0.0; n], vec![0.0; n]];
        let mut extrap = [vec![0.0; n], vec![0.0; n]];
        for d in Subdomain::BOTH {
            for l in 1..=3 {
                let level = block(&z, d, l - 1);
                axpy(&mut hist[d.index()], -bdf.history(l), &level);
                axpy(&mut extrap[d.index()], ext.get(l), &level);
            }
        }
        let predicted: Vec<Vec<f64>> = Subdomain::BOTH
            .iter()
            .map(|&d| {
                ops.solve_with_coupling(d, hist[d.index()].clone(), &extrap[d.other().index()])
            })
            .collect();
        let current = corrector_passes(scheme, predicted, |u| {
            Subdomain::BOTH
                .iter()
                .map(|&d| {
                    ops.solve_with_coupling(d, hist[d.index()].clone(), &u[d.other().index()])
                })
                .collect()
        });

        let mut next = Vec::with_capacity(z.len());
        next.extend_from_slice(&current[0]);
        next.extend_from_slice(&current[1]);
        next.extend_from_slice(&z[..6 * n]);
        z = next;
        if !traj.record(step as f64 * dt, z.clone())? {
            break;
        }
    }
    Ok(traj)
}

/// Explicit multirate Schwarz PC loop on [`multirate_layout`]; subdomain
/// one is coarse and subdomain two takes `eta` sub-steps.
pub fn run_multirate(spec: &MultirateSpec, initial: &[f64], steps: usize) -> Result<Trajectory> {
    spec.validate()?;
    if steps < 1 {
        return invalid("need at least one step");
    }
    let (n, eta) = (spec.grid.n(), spec.eta);
    let layout = multirate_layout(n, eta)?;
    check_state(&layout, initial)?;
    let bdf = bdf_weights(spec.scheme.k)?;
    let k = bdf.order();
    let weights = multirate_weights(eta, spec.scheme.m)?;
    let coarse_ops = SubdomainOps::new(&spec.grid, spec.dt_c, bdf.beta0())?;
    let fine_ops = SubdomainOps::new(&spec.grid, spec.dt_f(), bdf.beta0())?;
    const C: Subdomain = Subdomain::One;
    const F: Subdomain = Subdomain::Two;
    let pos = |d: Subdomain, lag: usize| layout.expect_position(d, lag) * n;

    let mut z = initial.to_vec();
    let mut traj = Trajectory::start(0.0, &z);
    for step in 1..=steps {
        // Shift the history by one coarse step; the current level is set below.
        let mut w = vec![0.0; z.len()];
        for label in &layout.blocks {
            if label.lag >= eta {
                let src = pos(label.domain, label.lag - eta);
                let dst = pos(label.domain, label.lag);
                w[dst..dst + n].copy_from_slice(&z[src..src + n]);
            }
        }
        let get = |w: &[f64], d: Subdomain, lag: usize| w[pos(d, lag)..pos(d, lag) + n].to_vec();
        let bdf_rhs = |w: &[f64], d: Subdomain, lag: usize, spacing: usize| {
            let mut r = vec![0.0; n];
            for l in 1..=k {
                let start = pos(d, lag + l * spacing);
                axpy(&mut r, -bdf.history(l), &w[start..start + n]);
            }
            r
        };
        let put = |w: &mut [f64], d: Subdomain, lag: usize, v: &[f64]| {
            let p = pos(d, lag);
            w[p..p + n].copy_from_slice(v);
        };

        // Predictor: fine sub-steps, then the coarse step from fine history.
        for i in 1..=eta {
            let lag = eta - i;
            let mut bc = vec![0.0; n];
            for (j, &a) in weights.pred_fine[i - 1].iter().enumerate() {
                axpy(&mut bc, a, &get(&w, C, (j + 1) * eta));
            }
            let u = fine_ops.solve_with_coupling(F, bdf_rhs(&w, F, lag, 1), &bc);
            put(&mut w, F, lag, &u);
        }
        let mut bc = vec![0.0; n];
        for (j, &a) in weights.pred_coarse.iter().enumerate() {
            axpy(&mut bc, a, &get(&w, F, eta + j));
        }
        let uc = coarse_ops.solve_with_coupling(C, bdf_rhs(&w, C, 0, eta), &bc);
        put(&mut w, C, 0, &uc);

        // Current-level unknowns: coarse t^n, then fine lags 0..eta-1.
        let unpack = |w: &[f64]| -> Vec<Vec<f64>> {
            let mut cur = vec![get(w, C, 0)];
            cur.extend((0..eta).map(|lag| get(w, F, lag)));
            cur
        };
        let current = unpack(&w);
        let history = w.clone();
        let current = corrector_passes(&spec.scheme, current, |cur| {
            let mut v = history.clone();
            put(&mut v, C, 0, &cur[0]);
            for lag in 0..eta {
                put(&mut v, F, lag, &cur[1 + lag]);
            }
            for i in 1..eta {
                let lag = eta - i;
                let mut bc = vec![0.0; n];
                for (j, &g) in weights.corr_fine[i - 1].iter().enumerate() {
                    axpy(&mut bc, g, &get(&v, C, j * eta));
                }
                let u = fine_ops.solve_with_coupling(F, bdf_rhs(&v, F, lag, 1), &bc);
                put(&mut v, F, lag, &u);
            }
            let uc = coarse_ops.solve_with_coupling(C, bdf_rhs(&v, C, 0, eta), &get(&v, F, 0));
            let uf = fine_ops.solve_with_coupling(F, bdf_rhs(&v, F, 0, 1), &get(&v, C, 0));
            put(&mut v, C, 0, &uc);
            put(&mut v, F, 0, &uf);
            unpack(&v)
        });
        put(&mut w, C, 0, &current[0]);
        for lag in 0..eta {
            put(&mut w, F, lag, &current[1 + lag]);
        }
        z = w;
        if !traj.record(step as f64 * spec.dt_c, z.clone())? {
            break;
        }
    }
    Ok(traj)
}
