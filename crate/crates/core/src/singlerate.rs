//! Singlerate predictor, corrector and growth matrices on the eight-block
//! layout of [`singlerate_layout`].
//!
//! Every block of `P` and `C` is one of `0`, `I`, `-beta_l H_i^{-1}`,
//! `alpha_l H_i^{-1} J_ij` or `H_i^{-1} J_ij`. The oldest history level is
//! carried only so it can be shifted out; its coupling column is zero.

use crate::coeffs::{bdf_weights, ext_weights, BdfWeights, ExtWeights, SchemeSpec};
use crate::discretize::{coupling_matrices, GridSpec, SolvedBlocks, Subdomain};
use crate::error::{invalid, Result};
use crate::layout::{singlerate_layout, BlockLayout};
use crate::matrix::DenseMatrix;

/// History levels referenced by the predictor (`n-1`, `n-2`, `n-3`).
const HISTORY_LEVELS: usize = 3;

/// Timestep metadata attached to a growth matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Timestep {
    Single { dt: f64 },
    Multi { dt_c: f64, eta: usize },
}

/// Propagator `z^n = G z^{n-1}` together with the layout and the inputs
/// that produced it.
#[derive(Debug, Clone)]
pub struct GrowthMatrix {
    pub matrix: DenseMatrix,
    pub layout: BlockLayout,
    pub scheme: SchemeSpec,
    pub grid: GridSpec,
    pub timestep: Timestep,
}

impl GrowthMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn apply(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.matrix.matvec(z)
    }
}

/// Operators shared by `P` and `C` for one `(scheme, grid, dt)`.
pub(crate) struct SinglerateOperators {
    n: usize,
    bdf: BdfWeights,
    ext: ExtWeights,
    blocks: SolvedBlocks,
}

impl SinglerateOperators {
    pub(crate) fn new(scheme: &SchemeSpec, grid: &GridSpec, dt: f64) -> Result<Self> {
        scheme.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return invalid(format!("timestep dt={dt} must be positive"));
        }
        let bdf = bdf_weights(scheme.k)?;
        let ext = ext_weights(scheme.m)?;
        let blocks = coupling_matrices(grid, dt, bdf.beta0())?.solved_blocks()?;
        Ok(SinglerateOperators {
            n: grid.n(),
            bdf,
            ext,
            blocks,
        })
    }

    /// Block index of subdomain `d` at history level `lag` (0 = current).
    fn at(d: Subdomain, lag: usize) -> usize {
        2 * lag + d.index()
    }

    pub(crate) fn predictor(&self) -> DenseMatrix {
        let n = self.n;
        let mut p = DenseMatrix::zeros(8 * n, 8 * n);
        for d in Subdomain::BOTH {
            let own = &self.blocks.h_inv[d.index()];
            let coupling = &self.blocks.h_inv_j[d.index()];
            let row = Self::at(d, 0);
            // Input z^{n-1} holds level n-l at block index of lag l-1.
            for l in 1..=HISTORY_LEVELS {
                let beta = self.bdf.history(l);
                if beta != 0.0 {
                    p.set_block(n, row, Self::at(d, l - 1), own, -beta);
                }
                let alpha = self.ext.get(l);
                if alpha != 0.0 {
                    p.set_block(n, row, Self::at(d.other(), l - 1), coupling, alpha);
                }
            }
        }
        shift_history(&mut p, n);
        p
    }

    pub(crate) fn corrector(&self) -> DenseMatrix {
        let n = self.n;
        let mut c = DenseMatrix::zeros(8 * n, 8 * n);
        for d in Subdomain::BOTH {
            let row = Self::at(d, 0);
            c.set_block(
                n,
                row,
                Self::at(d.other(), 0),
                &self.blocks.h_inv_j[d.index()],
                1.0,
            );
            for l in 1..=HISTORY_LEVELS {
                let beta = self.bdf.history(l);
                if beta != 0.0 {
                    c.set_block(n, row, Self::at(d, l), &self.blocks.h_inv[d.index()], -beta);
                }
            }
        }
        for i in 2 * n..8 * n {
            c[(i, i)] = 1.0;
        }
        c
    }
}

/// History rows of the predictor: level `n-l` of the output is level
/// `n-l` of the input, which sits one level higher in the input layout.
fn shift_history(p: &mut DenseMatrix, n: usize) {
    for i in 2 * n..8 * n {
        p[(i, i - 2 * n)] = 1.0;
    }
}

pub fn predictor_matrix(scheme: &SchemeSpec, grid: &GridSpec, dt: f64) -> Result<DenseMatrix> {
    Ok(SinglerateOperators::new(scheme, grid, dt)?.predictor())
}

pub fn corrector_matrix(scheme: &SchemeSpec, grid: &GridSpec, dt: f64) -> Result<DenseMatrix> {
    Ok(SinglerateOperators::new(scheme, grid, dt)?.corrector())
}

/// `C^Q P`, or with an even `Q >= 2` and `gamma < 1` the blended final
/// corrector `C (gamma C + (1 - gamma) I) C^{Q-2} P`.
pub(crate) fn compose_growth(
    predictor: DenseMatrix,
    corrector: &DenseMatrix,
    scheme: &SchemeSpec,
) -> Result<DenseMatrix> {
    let plain_passes = if scheme.blends_final_corrector() {
        scheme.q - 2
    } else {
        scheme.q
    };
    let mut g = predictor;
    for _ in 0..plain_passes {
        g = corrector.matmul(&g)?;
    }
    if scheme.blends_final_corrector() {
        let gamma = scheme.gamma_blend;
        let blended = corrector
            .matmul(&g)?
            .scaled(gamma)
            .add_scaled(&g, 1.0 - gamma)?;
        g = corrector.matmul(&blended)?;
    }
    Ok(g)
}

pub fn growth_matrix_singlerate(
    scheme: &SchemeSpec,
    grid: &GridSpec,
    dt: f64,
) -> Result<GrowthMatrix> {
    let ops = SinglerateOperators::new(scheme, grid, dt)?;
    let matrix = compose_growth(ops.predictor(), &ops.corrector(), scheme)?;
    Ok(GrowthMatrix {
        matrix,
        layout: singlerate_layout(grid.n()),
        scheme: *scheme,
        grid: *grid,
        timestep: Timestep::Single { dt },
    })
}
