//! Multirate predictor, corrector and growth matrices for an integer
//! timestep ratio `eta = dt_c / dt_f`.
//!
//! Subdomain one is the coarse grid (one step of `dt_c`), subdomain two the
//! fine grid (`eta` sub-steps of `dt_f`). States live on
//! [`multirate_layout`]; lags are counted in fine sub-steps.
//!
//! Predictor stages act on a wider layout ([`extended_layout`]) that holds
//! the previous coarse level shifted back by `eta` sub-steps next to the
//! rows being produced, so every stage is square. The composed predictor
//! embeds the input, applies the stages and drops the levels that fall
//! out of the history window. Corrector stages are square on the state
//! layout itself.

use crate::coeffs::{bdf_weights, multirate_weights, BdfWeights, MultirateWeightTable, SchemeSpec};
use crate::discretize::{coupling_matrices, GridSpec, Subdomain};
use crate::error::{invalid, Result};
use crate::layout::BlockLayout;
use crate::matrix::DenseMatrix;
use crate::singlerate::{compose_growth, GrowthMatrix, Timestep};

const COARSE: Subdomain = Subdomain::One;
const FINE: Subdomain = Subdomain::Two;

/// History levels kept in the state.
const HISTORY_LEVELS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultirateSpec {
    pub scheme: SchemeSpec,
    pub grid: GridSpec,
    pub eta: usize,
    pub dt_c: f64,
}

impl MultirateSpec {
    pub fn new(scheme: SchemeSpec, grid: GridSpec, eta: usize, dt_c: f64) -> Result<Self> {
        let spec = MultirateSpec {
            scheme,
            grid,
            eta,
            dt_c,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Spec whose coarse step corresponds to the nondimensional `s`.
    pub fn from_s(scheme: SchemeSpec, grid: GridSpec, eta: usize, s: f64) -> Result<Self> {
        Self::new(scheme, grid, eta, grid.dt_from_s(s))
    }

    pub fn validate(&self) -> Result<()> {
        self.scheme.validate()?;
        if self.eta < 1 {
            return invalid("timestep ratio eta must be at least 1");
        }
        if !(self.dt_c > 0.0 && self.dt_c.is_finite()) {
            return invalid(format!("coarse timestep {} must be positive", self.dt_c));
        }
        Ok(())
    }

    pub fn dt_f(&self) -> f64 {
        self.dt_c / self.eta as f64
    }
}

/// State layout: three full levels (coarse, fine and the `eta - 1` fine
/// sub-levels) followed by the pair at `n-3`.
pub fn multirate_layout(block_size: usize, eta: usize) -> Result<BlockLayout> {
    if eta < 1 {
        return invalid("timestep ratio eta must be at least 1");
    }
    Ok(BlockLayout::with_levels(block_size, eta, HISTORY_LEVELS))
}

/// Working layout of the predictor stages: one level deeper than
/// [`multirate_layout`].
pub fn extended_layout(block_size: usize, eta: usize) -> Result<BlockLayout> {
    if eta < 1 {
        return invalid("timestep ratio eta must be at least 1");
    }
    Ok(BlockLayout::with_levels(
        block_size,
        eta,
        HISTORY_LEVELS + 1,
    ))
}

/// `H^{-1}` and `H^{-1} J` for both grids at their own timesteps.
pub(crate) struct MultirateOperators {
    pub(crate) eta: usize,
    pub(crate) n: usize,
    pub(crate) bdf: BdfWeights,
    pub(crate) weights: MultirateWeightTable,
    pub(crate) h_inv: [DenseMatrix; 2],
    pub(crate) h_inv_j: [DenseMatrix; 2],
    pub(crate) layout: BlockLayout,
    pub(crate) extended: BlockLayout,
}

impl MultirateOperators {
    pub(crate) fn new(spec: &MultirateSpec) -> Result<Self> {
        spec.validate()?;
        let bdf = bdf_weights(spec.scheme.k)?;
        let weights = multirate_weights(spec.eta, spec.scheme.m)?;
        let coarse = coupling_matrices(&spec.grid, spec.dt_c, bdf.beta0())?.solved_blocks()?;
        let fine = coupling_matrices(&spec.grid, spec.dt_f(), bdf.beta0())?.solved_blocks()?;
        let [hc, _] = coarse.h_inv;
        let [_, hf] = fine.h_inv;
        let [hcj, _] = coarse.h_inv_j;
        let [_, hfj] = fine.h_inv_j;
        let n = spec.grid.n();
        Ok(MultirateOperators {
            eta: spec.eta,
            n,
            bdf,
            weights,
            h_inv: [hc, hf],
            h_inv_j: [hcj, hfj],
            layout: multirate_layout(n, spec.eta)?,
            extended: extended_layout(n, spec.eta)?,
        })
    }

    fn h_inv(&self, d: Subdomain) -> &DenseMatrix {
        &self.h_inv[d.index()]
    }

    fn h_inv_j(&self, d: Subdomain) -> &DenseMatrix {
        &self.h_inv_j[d.index()]
    }

    /// Adds `-beta_l H^{-1}` on the `k` history blocks of `d`, spaced
    /// `spacing` sub-steps apart and starting `spacing` after `lag`.
    fn add_bdf_history(
        &self,
        m: &mut DenseMatrix,
        layout: &BlockLayout,
        row: usize,
        d: Subdomain,
        lag: usize,
        spacing: usize,
    ) {
        for l in 1..=self.bdf.order() {
            let col = layout.expect_position(d, lag + l * spacing);
            m.add_to_block(self.n, row, col, self.h_inv(d), -self.bdf.history(l));
        }
    }

    /// Predictor stage `i` on the extended layout.
    pub(crate) fn predictor_stage(&self, i: usize) -> DenseMatrix {
        let (n, eta) = (self.n, self.eta);
        let w = &self.extended;
        let mut p = DenseMatrix::identity(w.dim());
        let ext_fine = &self.weights.pred_fine[i - 1];

        let fine_lag = eta - i;
        let row = w.expect_position(FINE, fine_lag);
        p.clear_block_row(n, row);
        self.add_bdf_history(&mut p, w, row, FINE, fine_lag, 1);
        for (j, &alpha) in ext_fine.iter().enumerate() {
            let col = w.expect_position(COARSE, (j + 1) * eta);
            p.add_to_block(n, row, col, self.h_inv_j(FINE), alpha);
        }

        if i == eta {
            let row = w.expect_position(COARSE, 0);
            p.clear_block_row(n, row);
            self.add_bdf_history(&mut p, w, row, COARSE, 0, eta);
            for (j, &alpha) in self.weights.pred_coarse.iter().enumerate() {
                let col = w.expect_position(FINE, eta + j);
                p.add_to_block(n, row, col, self.h_inv_j(COARSE), alpha);
            }
        }
        p
    }

    /// Corrector stage `i` on the state layout.
    pub(crate) fn corrector_stage(&self, i: usize) -> DenseMatrix {
        let (n, eta) = (self.n, self.eta);
        let l = &self.layout;
        let mut c = DenseMatrix::identity(l.dim());
        if i < eta {
            let fine_lag = eta - i;
            let row = l.expect_position(FINE, fine_lag);
            c.clear_block_row(n, row);
            self.add_bdf_history(&mut c, l, row, FINE, fine_lag, 1);
            for (j, &gamma) in self.weights.corr_fine[i - 1].iter().enumerate() {
                let col = l.expect_position(COARSE, j * eta);
                c.add_to_block(n, row, col, self.h_inv_j(FINE), gamma);
            }
        } else {
            for d in Subdomain::BOTH {
                let row = l.expect_position(d, 0);
                let spacing = if d == COARSE { eta } else { 1 };
                c.clear_block_row(n, row);
                self.add_bdf_history(&mut c, l, row, d, 0, spacing);
                let col = l.expect_position(d.other(), 0);
                c.add_to_block(n, row, col, self.h_inv_j(d), 1.0);
            }
        }
        c
    }

    /// Embedding of a state at `t^{n-1}` into the extended layout at `t^n`.
    fn embedding(&self) -> DenseMatrix {
        let n = self.n;
        let mut e = DenseMatrix::zeros(self.extended.dim(), self.layout.dim());
        for (b, label) in self.layout.blocks.iter().enumerate() {
            let target = self
                .extended
                .expect_position(label.domain, label.lag + self.eta);
            for r in 0..n {
                e[(target * n + r, b * n + r)] = 1.0;
            }
        }
        e
    }

    /// Applies `P_eta ... P_1` to the embedded input and keeps the layout's
    /// blocks.
    pub(crate) fn predictor(&self) -> Result<DenseMatrix> {
        let n = self.n;
        let mut x = self.embedding();
        for i in 1..=self.eta {
            x = self.predictor_stage(i).matmul(&x)?;
        }
        let mut p = DenseMatrix::zeros(self.layout.dim(), self.layout.dim());
        for (b, label) in self.layout.blocks.iter().enumerate() {
            let src = self.extended.expect_position(label.domain, label.lag);
            for r in 0..n {
                p.row_mut(b * n + r).copy_from_slice(x.row(src * n + r));
            }
        }
        Ok(p)
    }

    pub(crate) fn corrector(&self) -> Result<DenseMatrix> {
        let mut c = self.corrector_stage(1);
        for i in 2..=self.eta {
            c = self.corrector_stage(i).matmul(&c)?;
        }
        Ok(c)
    }
}

fn check_stage(spec: &MultirateSpec, i: usize) -> Result<()> {
    if i < 1 || i > spec.eta {
        return invalid(format!("stage {i} outside 1..={}", spec.eta));
    }
    Ok(())
}

/// Stage `P_i` on [`extended_layout`]: identity except the block row of the
/// fine sub-level `t^{n-1+i/eta}` (and for `i = eta` also the coarse `t^n`).
pub fn predictor_stage(spec: &MultirateSpec, i: usize) -> Result<DenseMatrix> {
    check_stage(spec, i)?;
    Ok(MultirateOperators::new(spec)?.predictor_stage(i))
}

/// Stage `C_i` on [`multirate_layout`].
pub fn corrector_stage(spec: &MultirateSpec, i: usize) -> Result<DenseMatrix> {
    check_stage(spec, i)?;
    Ok(MultirateOperators::new(spec)?.corrector_stage(i))
}

pub fn predictor_matrix_multirate(spec: &MultirateSpec) -> Result<DenseMatrix> {
    MultirateOperators::new(spec)?.predictor()
}

pub fn corrector_matrix_multirate(spec: &MultirateSpec) -> Result<DenseMatrix> {
    MultirateOperators::new(spec)?.corrector()
}

/// `G = C^Q P` with `C = C_eta ... C_1` and `P = P_eta ... P_1`, using the
/// same blended final corrector as the singlerate scheme.
pub fn growth_matrix_multirate(spec: &MultirateSpec) -> Result<GrowthMatrix> {
    let ops = MultirateOperators::new(spec)?;
    let matrix = compose_growth(ops.predictor()?, &ops.corrector()?, &spec.scheme)?;
    Ok(GrowthMatrix {
        matrix,
        layout: ops.layout,
        scheme: spec.scheme,
        grid: spec.grid,
        timestep: Timestep::Multi {
            dt_c: spec.dt_c,
            eta: spec.eta,
        },
    })
}
