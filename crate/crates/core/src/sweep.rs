//! Stability sweeps over the nondimensional timestep `s = nu dt_c / dx^2`,
//! the CSV record format and the figure bundles.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;

use crate::coeffs::SchemeSpec;
use crate::discretize::GridSpec;
use crate::error::{invalid, Error, Result};
use crate::matrix::DenseMatrix;
use crate::multirate::{MultirateOperators, MultirateSpec};
use crate::singlerate::SinglerateOperators;
use crate::spectral::{spectral_radius, StabilityPoint, DEFAULT_TOL};

/// Column header of the sweep CSV.
pub const CSV_COLUMNS: &str = "k,m,Q,gamma,eta,N,K,s,rho,stable";

/// Log-spaced sample of `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SRange {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for SRange {
    fn default() -> Self {
        SRange {
            min: 1e-2,
            max: 1e6,
            points: 200,
        }
    }
}

impl SRange {
    pub fn new(min: f64, max: f64, points: usize) -> Result<Self> {
        let r = SRange { min, max, points };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min > 0.0 && self.min.is_finite() && self.max.is_finite()) {
            return invalid(format!(
                "s range [{}, {}] must be positive and finite",
                self.min, self.max
            ));
        }
        if self.max < self.min {
            return invalid(format!("s_max={} below s_min={}", self.max, self.min));
        }
        if self.points < 2 {
            return invalid("an s range needs at least two points");
        }
        Ok(())
    }

    /// Ascending sample with exact endpoints.
    pub fn values(&self) -> Vec<f64> {
        let (lo, hi) = (self.min.log10(), self.max.log10());
        let last = self.points - 1;
        (0..self.points)
            .map(|i| match i {
                0 => self.min,
                i if i == last => self.max,
                i => 10f64.powf(lo + (hi - lo) * i as f64 / last as f64),
            })
            .collect()
    }
}

/// Everything that selects a growth matrix except `Q` and `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCase {
    pub k: usize,
    pub m: usize,
    pub gamma: f64,
    pub eta: usize,
    pub grid: GridSpec,
}

impl SweepCase {
    pub fn new(
        k: usize,
        m: usize,
        gamma: f64,
        eta: usize,
        n: usize,
        overlap: usize,
    ) -> Result<Self> {
        let case = SweepCase {
            k,
            m,
            gamma,
            eta,
            grid: GridSpec::unit(n, overlap)?,
        };
        case.scheme(0)?;
        if eta < 1 {
            return invalid("timestep ratio eta must be at least 1");
        }
        Ok(case)
    }

    pub fn scheme(&self, q: usize) -> Result<SchemeSpec> {
        SchemeSpec::new(self.k, self.m, q, self.gamma)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub cases: Vec<SweepCase>,
    pub qs: Vec<usize>,
    pub s: SRange,
}

impl SweepSpec {
    /// Cartesian product of the given parameter lists.
    pub fn product(
        orders: &[(usize, usize)],
        qs: &[usize],
        gammas: &[f64],
        etas: &[usize],
        grids: &[(usize, usize)],
        s: SRange,
    ) -> Result<Self> {
        let mut cases = Vec::new();
        for &(k, m) in orders {
            for &gamma in gammas {
                for &eta in etas {
                    for &(n, overlap) in grids {
                        cases.push(SweepCase::new(k, m, gamma, eta, n, overlap)?);
                    }
                }
            }
        }
        let spec = SweepSpec {
            cases,
            qs: qs.to_vec(),
            s,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.s.validate()?;
        if self.cases.is_empty() || self.qs.is_empty() {
            return invalid("sweep has no cases");
        }
        Ok(())
    }

    pub fn row_count(&self) -> usize {
        self.cases.len() * self.qs.len() * self.s.points
    }
}

/// One CSV record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub k: usize,
    pub m: usize,
    pub q: usize,
    pub gamma: f64,
    pub eta: usize,
    pub n: usize,
    pub overlap: usize,
    pub s: f64,
    pub rho: f64,
    pub stable: bool,
}

impl SweepRow {
    fn new(case: &SweepCase, q: usize, point: StabilityPoint) -> Self {
        SweepRow {
            k: case.k,
            m: case.m,
            q,
            gamma: case.gamma,
            eta: case.eta,
            n: case.grid.n(),
            overlap: case.grid.overlap(),
            s: point.s,
            rho: point.rho,
            stable: point.stable,
        }
    }

    fn order(&self, other: &Self) -> std::cmp::Ordering {
        (self.k, self.m, self.q)
            .cmp(&(other.k, other.m, other.q))
            .then(self.gamma.total_cmp(&other.gamma))
            .then((self.eta, self.n, self.overlap).cmp(&(other.eta, other.n, other.overlap)))
            .then(self.s.total_cmp(&other.s))
    }
}

impl fmt::Display for SweepRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{},{},{},{},{},{}",
            self.k,
            self.m,
            self.q,
            self.gamma,
            self.eta,
            self.n,
            self.overlap,
            self.s,
            self.rho,
            u8::from(self.stable)
        )
    }
}

impl FromStr for SweepRow {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 10 {
            return invalid(format!("expected 10 fields, got {}: {line}", fields.len()));
        }
        fn int(s: &str) -> Result<usize> {
            s.parse()
                .map_err(|_| Error::InvalidArgument(format!("bad integer {s:?}")))
        }
        fn real(s: &str) -> Result<f64> {
            s.parse()
                .map_err(|_| Error::InvalidArgument(format!("bad number {s:?}")))
        }
        let stable = match fields[9] {
            "0" => false,
            "1" => true,
            other => return invalid(format!("bad stability flag {other:?}")),
        };
        Ok(SweepRow {
            k: int(fields[0])?,
            m: int(fields[1])?,
            q: int(fields[2])?,
            gamma: real(fields[3])?,
            eta: int(fields[4])?,
            n: int(fields[5])?,
            overlap: int(fields[6])?,
            s: real(fields[7])?,
            rho: real(fields[8])?,
            stable,
        })
    }
}

/// Predictor and corrector of one case at one `s`.
fn operators(case: &SweepCase, s: f64) -> Result<(DenseMatrix, DenseMatrix)> {
    let dt = case.grid.dt_from_s(s);
    let scheme = case.scheme(1)?;
    if case.eta == 1 {
        let ops = SinglerateOperators::new(&scheme, &case.grid, dt)?;
        Ok((ops.predictor(), ops.corrector()))
    } else {
        let ops = MultirateOperators::new(&MultirateSpec::new(scheme, case.grid, case.eta, dt)?)?;
        Ok((ops.predictor()?, ops.corrector()?))
    }
}

/// Spectral radii at one `s` for every `Q` in `qs`, sharing the corrector
/// powers between them.
pub fn evaluate_point(case: &SweepCase, qs: &[usize], s: f64) -> Result<Vec<StabilityPoint>> {
    let (p, c) = operators(case, s)?;
    let q_max = qs.iter().copied().max().unwrap_or(0);
    // powers[j] = C^j P
    let mut powers = vec![p];
    for j in 1..=q_max {
        let next = c.matmul(&powers[j - 1])?;
        powers.push(next);
    }
    qs.iter()
        .map(|&q| {
            let scheme = case.scheme(q)?;
            let rho = if scheme.blends_final_corrector() {
                let gamma = scheme.gamma_blend;
                let blended = powers[q - 1]
                    .scaled(gamma)
                    .add_scaled(&powers[q - 2], 1.0 - gamma)?;
                spectral_radius(&c.matmul(&blended)?, DEFAULT_TOL)?
            } else {
                spectral_radius(&powers[q], DEFAULT_TOL)?
            };
            Ok(StabilityPoint::new(s, rho))
        })
        .collect()
}

/// Single-point stability classification.
pub fn radius(case: &SweepCase, q: usize, s: f64) -> Result<StabilityPoint> {
    Ok(evaluate_point(case, &[q], s)?[0])
}

/// Evaluates the whole sweep on the rayon pool; rows come back in
/// lexicographic parameter order, then ascending `s`.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let s_values = spec.s.values();
    let tasks: Vec<(&SweepCase, f64)> = spec
        .cases
        .iter()
        .flat_map(|c| s_values.iter().map(move |&s| (c, s)))
        .collect();
    let chunks = tasks
        .par_iter()
        .map(|&(case, s)| {
            let points = evaluate_point(case, &spec.qs, s)?;
            Ok(spec
                .qs
                .iter()
                .zip(points)
                .map(|(&q, pt)| SweepRow::new(case, q, pt))
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<SweepRow> = chunks.into_iter().flatten().collect();
    rows.sort_by(SweepRow::order);
    Ok(rows)
}

/// Largest `s` such that it and every smaller sampled `s` are stable.
/// `points` must be sorted by ascending `s`.
pub fn max_stable_s(points: &[StabilityPoint]) -> Option<f64> {
    points.iter().take_while(|p| p.stable).last().map(|p| p.s)
}

/// [`max_stable_s`] for one `Q`, scanning upward and stopping at the
/// first unstable sample.
pub fn scan_max_stable_s(case: &SweepCase, q: usize, s_values: &[f64]) -> Result<Option<f64>> {
    Ok(scan_max_stable_s_by_q(case, &[q], s_values)?[0])
}

/// [`scan_max_stable_s`] for several `Q` at once. Operators are shared
/// between the `Q` values still stable at each sample.
pub fn scan_max_stable_s_by_q(
    case: &SweepCase,
    qs: &[usize],
    s_values: &[f64],
) -> Result<Vec<Option<f64>>> {
    let mut best = vec![None; qs.len()];
    let mut alive: Vec<usize> = (0..qs.len()).collect();
    for &s in s_values {
        if alive.is_empty() {
            break;
        }
        let active: Vec<usize> = alive.iter().map(|&i| qs[i]).collect();
        let points = evaluate_point(case, &active, s)?;
        let mut still = Vec::with_capacity(alive.len());
        for (&i, pt) in alive.iter().zip(&points) {
            if pt.stable {
                best[i] = Some(s);
                still.push(i);
            }
        }
        alive = still;
    }
    Ok(best)
}

pub fn write_csv<W: Write>(mut out: W, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(out, "# schwarz-pc {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "{CSV_COLUMNS}")?;
    for row in rows {
        writeln!(out, "{row}")?;
    }
    out.flush()
}

/// Parses a file written by [`write_csv`]; comment lines are skipped.
pub fn read_csv<R: BufRead>(input: R) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    let mut header_seen = false;
    for line in input.lines() {
        let line = line.map_err(|e| Error::InvalidArgument(format!("reading CSV: {e}")))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            if line != CSV_COLUMNS {
                return invalid(format!("unexpected CSV header {line:?}"));
            }
            header_seen = true;
            continue;
        }
        rows.push(line.parse()?);
    }
    if !header_seen {
        return invalid("CSV has no header");
    }
    Ok(rows)
}

/// Parameter sets behind each published figure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bundle {
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Fig10,
    Fig11,
    Fig12,
}

const ALL_ORDERS: [(usize, usize); 6] = [(1, 1), (2, 1), (2, 2), (3, 1), (3, 2), (3, 3)];
const HIGH_ORDERS: [(usize, usize); 3] = [(2, 2), (3, 2), (3, 3)];
const ETAS: [usize; 6] = [1, 2, 3, 4, 5, 10];

impl Bundle {
    pub const ALL: [Bundle; 7] = [
        Bundle::Fig5,
        Bundle::Fig6,
        Bundle::Fig7,
        Bundle::Fig8,
        Bundle::Fig10,
        Bundle::Fig11,
        Bundle::Fig12,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Bundle::Fig5 => "fig5",
            Bundle::Fig6 => "fig6",
            Bundle::Fig7 => "fig7",
            Bundle::Fig8 => "fig8",
            Bundle::Fig10 => "fig10",
            Bundle::Fig11 => "fig11",
            Bundle::Fig12 => "fig12",
        }
    }

    pub fn spec(self, s: SRange) -> Result<SweepSpec> {
        let qs: Vec<usize> = (0..=7).collect();
        let base = [(32, 5)];
        match self {
            Bundle::Fig5 => SweepSpec::product(&ALL_ORDERS, &qs, &[1.0], &[1], &base, s),
            Bundle::Fig6 => SweepSpec::product(
                &HIGH_ORDERS,
                &qs,
                &[1.0],
                &[1],
                &[(32, 3), (32, 5), (32, 7)],
                s,
            ),
            Bundle::Fig7 => SweepSpec::product(
                &HIGH_ORDERS,
                &qs,
                &[1.0],
                &[1],
                &[(32, 5), (65, 10), (98, 15)],
                s,
            ),
            Bundle::Fig8 => SweepSpec::product(&[(3, 3)], &qs, &[1.0, 0.5], &[1], &base, s),
            Bundle::Fig10 => SweepSpec::product(&ALL_ORDERS, &qs, &[1.0], &[2], &base, s),
            Bundle::Fig11 => SweepSpec::product(&[(3, 3)], &qs, &[1.0], &ETAS, &base, s),
            Bundle::Fig12 => SweepSpec::product(&[(3, 3)], &qs, &[1.0], &ETAS, &[(32, 10)], s),
        }
    }
}

impl fmt::Display for Bundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Bundle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Bundle::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown bundle {s:?}")))
    }
}
