//! Block layouts of the stacked two-subdomain state vectors.

use std::fmt;

use crate::discretize::Subdomain;

/// One `N`-sized block of the state: a subdomain at the time level
/// `t^{n - lag/eta}`. Singlerate layouts use `eta = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockLabel {
    pub domain: Subdomain,
    /// Lag behind `t^n`, in fine sub-steps.
    pub lag: usize,
    pub eta: usize,
}

impl fmt::Display for BlockLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = match self.domain {
            Subdomain::One => "1",
            Subdomain::Two => "2",
        };
        let whole = self.lag / self.eta;
        let frac = self.lag % self.eta;
        match (whole, frac) {
            (0, 0) => write!(f, "u{d}(n)"),
            (w, 0) => write!(f, "u{d}(n-{w})"),
            _ => {
                let num = self.lag;
                let g = gcd(num, self.eta);
                write!(f, "u{d}(n-{}/{})", num / g, self.eta / g)
            }
        }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Ordered block labels with common block size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockLayout {
    pub block_size: usize,
    pub eta: usize,
    pub blocks: Vec<BlockLabel>,
}

impl BlockLayout {
    /// Layout with `levels` full time levels (each the coarse/One block, the
    /// fine/Two block and the `eta - 1` fine sub-levels below it) followed by
    /// one trailing `(One, Two)` pair.
    pub(crate) fn with_levels(block_size: usize, eta: usize, levels: usize) -> Self {
        let mut blocks = Vec::with_capacity(levels * (eta + 1) + 2);
        let label = |domain, lag| BlockLabel { domain, lag, eta };
        for j in 0..levels {
            blocks.push(label(Subdomain::One, j * eta));
            blocks.push(label(Subdomain::Two, j * eta));
            for i in 1..eta {
                blocks.push(label(Subdomain::Two, j * eta + i));
            }
        }
        blocks.push(label(Subdomain::One, levels * eta));
        blocks.push(label(Subdomain::Two, levels * eta));
        BlockLayout {
            block_size,
            eta,
            blocks,
        }
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn dim(&self) -> usize {
        self.blocks.len() * self.block_size
    }

    pub fn position(&self, domain: Subdomain, lag: usize) -> Option<usize> {
        self.blocks
            .iter()
            .position(|b| b.domain == domain && b.lag == lag)
    }

    pub(crate) fn expect_position(&self, domain: Subdomain, lag: usize) -> usize {
        self.position(domain, lag)
            .unwrap_or_else(|| panic!("layout has no block {domain:?} at lag {lag}"))
    }

    /// Slice of a flat state vector belonging to block `b`.
    pub fn block_slice<'a>(&self, state: &'a [f64], b: usize) -> &'a [f64] {
        &state[b * self.block_size..(b + 1) * self.block_size]
    }

    /// State vector with the same block values repeated at every level.
    pub fn replicate(&self, per_domain: &[Vec<f64>; 2]) -> Vec<f64> {
        let mut z = Vec::with_capacity(self.dim());
        for b in &self.blocks {
            z.extend_from_slice(&per_domain[b.domain.index()]);
        }
        z
    }
}

/// The eight-block singlerate layout
/// `(u1^n, u2^n, u1^{n-1}, u2^{n-1}, u1^{n-2}, u2^{n-2}, u1^{n-3}, u2^{n-3})`.
pub fn singlerate_layout(block_size: usize) -> BlockLayout {
    BlockLayout::with_levels(block_size, 1, 3)
}
