//! Temporal scheme coefficients.
//!
//! Time is measured in units of the (coarse) timestep with `t^n = 0`, so the
//! history levels sit at `-1, -2, ...` and fine sub-levels at `-1 + i/eta`.

use crate::error::{invalid, Result};

/// Highest BDF / extrapolation order supported.
pub const MAX_ORDER: usize = 3;

/// Temporal scheme selection: BDF order, extrapolation order, corrector count
/// and the blend weight applied to the final corrector when `q` is even.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeSpec {
    pub k: usize,
    pub m: usize,
    pub q: usize,
    pub gamma_blend: f64,
}

impl SchemeSpec {
    pub fn new(k: usize, m: usize, q: usize, gamma_blend: f64) -> Result<Self> {
        let spec = SchemeSpec {
            k,
            m,
            q,
            gamma_blend,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Original scheme (no final-corrector blend).
    pub fn original(k: usize, m: usize, q: usize) -> Result<Self> {
        Self::new(k, m, q, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_ORDER).contains(&self.k) {
            return invalid(format!("BDF order k={} outside 1..={MAX_ORDER}", self.k));
        }
        if !(1..=self.k).contains(&self.m) {
            return invalid(format!(
                "extrapolation order m={} outside 1..=k={}",
                self.m, self.k
            ));
        }
        if !(0.0..=1.0).contains(&self.gamma_blend) {
            return invalid(format!("gamma={} outside [0, 1]", self.gamma_blend));
        }
        Ok(())
    }

    /// Whether the final corrector uses the blended neighbour data.
    pub fn blends_final_corrector(&self) -> bool {
        self.q >= 2 && self.q % 2 == 0 && self.gamma_blend < 1.0
    }
}

/// BDF weights `beta_0..beta_k`; `beta_0` multiplies `u^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BdfWeights {
    pub beta: Vec<f64>,
}

impl BdfWeights {
    pub fn order(&self) -> usize {
        self.beta.len() - 1
    }

    pub fn beta0(&self) -> f64 {
        self.beta[0]
    }

    /// `beta_l` for `l >= 1`, zero past the order.
    pub fn history(&self, l: usize) -> f64 {
        self.beta.get(l).copied().unwrap_or(0.0)
    }
}

/// Extrapolation weights `alpha_1..alpha_m` applied to `u^{n-1}..u^{n-m}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtWeights {
    pub alpha: Vec<f64>,
}

impl ExtWeights {
    pub fn order(&self) -> usize {
        self.alpha.len()
    }

    /// `alpha_l` for `l >= 1`, zero past the order.
    pub fn get(&self, l: usize) -> f64 {
        if l == 0 {
            return 0.0;
        }
        self.alpha.get(l - 1).copied().unwrap_or(0.0)
    }
}

/// Predictor and corrector weights for a timestep ratio `eta`.
///
/// Rows are indexed by the fine sub-step `i = 1..=eta` (stored at `i - 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct MultirateWeightTable {
    pub eta: usize,
    pub m: usize,
    /// Fine sub-step `i` extrapolates from coarse `t^{n-1}, .., t^{n-m}` to `t^{n-1+i/eta}`.
    pub pred_fine: Vec<Vec<f64>>,
    /// Coarse step extrapolates from fine `t^{n-1-(j-1)/eta}`, `j = 1..m`, to `t^n`.
    pub pred_coarse: Vec<f64>,
    /// Fine sub-step `i` interpolates coarse `(t^n, t^{n-1}, t^{n-2})` at `t^{n-1+i/eta}`.
    pub corr_fine: Vec<[f64; 3]>,
}

fn check_order(name: &str, order: usize) -> Result<()> {
    if !(1..=MAX_ORDER).contains(&order) {
        return invalid(format!("{name} order {order} outside 1..={MAX_ORDER}"));
    }
    Ok(())
}

/// Weights of the derivatives `0..=max_deriv` at `target` from values at
/// `nodes` (Fornberg's recursion). Row `d` holds the `d`-th derivative weights.
pub fn fornberg_weights(nodes: &[f64], target: f64, max_deriv: usize) -> Result<Vec<Vec<f64>>> {
    check_distinct(nodes)?;
    let n = nodes.len();
    let mut c = vec![vec![0.0; n]; max_deriv + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - target;
    for i in 1..n {
        let mn = i.min(max_deriv);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - target;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for d in (1..=mn).rev() {
                    c[d][i] = c1 * (d as f64 * c[d - 1][i - 1] - c5 * c[d][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for d in (1..=mn).rev() {
                c[d][j] = (c4 * c[d][j] - d as f64 * c[d - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    Ok(c)
}

fn check_distinct(nodes: &[f64]) -> Result<()> {
    if nodes.is_empty() {
        return invalid("at least one node is required");
    }
    if nodes.iter().any(|x| !x.is_finite()) {
        return invalid("nodes must be finite");
    }
    let lo = nodes.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = nodes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scale = (hi - lo).max(hi.abs()).max(lo.abs());
    let tol = 1e-12 * scale;
    for (i, a) in nodes.iter().enumerate() {
        for b in &nodes[i + 1..] {
            if (a - b).abs() <= tol {
                return invalid(format!("duplicate interpolation nodes {a} and {b}"));
            }
        }
    }
    Ok(())
}

/// Lagrange weights `w` with `sum_j w_j p(nodes_j) = p(target)` for every
/// polynomial of degree below `nodes.len()`, via the barycentric form.
pub fn lagrange_weights(nodes: &[f64], target: f64) -> Result<Vec<f64>> {
    check_distinct(nodes)?;
    if !target.is_finite() {
        return invalid("target must be finite");
    }
    let n = nodes.len();
    if let Some(hit) = nodes.iter().position(|&x| x == target) {
        let mut w = vec![0.0; n];
        w[hit] = 1.0;
        return Ok(w);
    }
    let bary: Vec<f64> = (0..n)
        .map(|j| {
            1.0 / (0..n)
                .filter(|&i| i != j)
                .map(|i| nodes[j] - nodes[i])
                .product::<f64>()
        })
        .collect();
    let node_poly: f64 = nodes.iter().map(|x| target - x).product();
    Ok((0..n)
        .map(|j| node_poly * bary[j] / (target - nodes[j]))
        .collect())
}

pub fn bdf_weights(k: usize) -> Result<BdfWeights> {
    check_order("BDF", k)?;
    let nodes: Vec<f64> = (0..=k).map(|l| -(l as f64)).collect();
    let mut rows = fornberg_weights(&nodes, 0.0, 1)?;
    Ok(BdfWeights {
        beta: rows.swap_remove(1),
    })
}

pub fn ext_weights(m: usize) -> Result<ExtWeights> {
    check_order("extrapolation", m)?;
    let nodes: Vec<f64> = (1..=m).map(|l| -(l as f64)).collect();
    Ok(ExtWeights {
        alpha: lagrange_weights(&nodes, 0.0)?,
    })
}

pub fn multirate_weights(eta: usize, m: usize) -> Result<MultirateWeightTable> {
    if eta < 1 {
        return invalid("timestep ratio eta must be at least 1");
    }
    check_order("extrapolation", m)?;
    let eta_f = eta as f64;
    let sub_time = |i: usize| -1.0 + i as f64 / eta_f;

    let coarse_history: Vec<f64> = (1..=m).map(|j| -(j as f64)).collect();
    let pred_fine = (1..=eta)
        .map(|i| lagrange_weights(&coarse_history, sub_time(i)))
        .collect::<Result<Vec<_>>>()?;

    let fine_history: Vec<f64> = (1..=m).map(|j| -1.0 - (j - 1) as f64 / eta_f).collect();
    let pred_coarse = lagrange_weights(&fine_history, 0.0)?;

    let interp_nodes: &[f64] = if m <= 2 {
        &[0.0, -1.0]
    } else {
        &[0.0, -1.0, -2.0]
    };
    let corr_fine = (1..=eta)
        .map(|i| {
            let w = lagrange_weights(interp_nodes, sub_time(i))?;
            let mut row = [0.0; 3];
            row[..w.len()].copy_from_slice(&w);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(MultirateWeightTable {
        eta,
        m,
        pred_fine,
        pred_coarse,
        corr_fine,
    })
}
