//! Robust decoding for two equally likely components under Gaussian noise with values
//! on a quantized grid.
//!
//! Every bin carries `P = P₁ + P₂ + P₃` real query rows, each repeated `N` times: binary
//! indexing rows `B`, Rademacher verification rows `V`, and the pairwise sums `C` of
//! the rows of `D = [B; V]`. Denoising turns each row into at most two grid values,
//! the consecutive summation check aligns them into two consistent sets, and the
//! peeling engine runs on those sets with the binary index plus verification as its
//! singleton test.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::decode::{to_output, DecodeOutput};
use crate::design::{build_bipartite, BipartiteDesign};
use crate::emdenoise::{estimate_centers, EmConfig};
use crate::error::{Error, Result};
use crate::model::{QuantizedAlphabet, SparseVector};
use crate::peeling::{self, Diagnostics, PeelingCode, Verdict};
use crate::simulate::RobustMeasurementSet;
use crate::{mix, rng_from_seed};

/// `⌈log₂ n⌉`, at least 1.
pub fn index_bits(n: usize) -> usize {
    (usize::BITS - (n.max(2) - 1).leading_zeros()) as usize
}

/// The shared per-bin matrices. `B` is implicit: row `i` (0-based) of column `j` is
/// bit `P₁ − 1 − i` of `j`, most significant first.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustBinMatrices {
    n: usize,
    p1: usize,
    p2: usize,
    /// `V`, row-major `P₂ × n`, entries ±1.
    signs: Vec<i8>,
    /// Row pairs `(a, b)`, `a < b`, of `D` summed by each `C` row, lexicographic.
    pairs: Vec<(usize, usize)>,
}

impl RobustBinMatrices {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p1(&self) -> usize {
        self.p1
    }

    pub fn p2(&self) -> usize {
        self.p2
    }

    pub fn p3(&self) -> usize {
        self.pairs.len()
    }

    /// Rows of `D`.
    pub fn d_rows(&self) -> usize {
        self.p1 + self.p2
    }

    pub fn rows(&self) -> usize {
        self.d_rows() + self.p3()
    }

    pub fn b(&self, i: usize, j: usize) -> i64 {
        ((j >> (self.p1 - 1 - i)) & 1) as i64
    }

    pub fn v(&self, i: usize, j: usize) -> i64 {
        self.signs[i * self.n + j] as i64
    }

    /// Entry of `D = [B; V]`.
    pub fn d(&self, row: usize, j: usize) -> i64 {
        if row < self.p1 {
            self.b(row, j)
        } else {
            self.v(row - self.p1, j)
        }
    }

    /// Entry of any of the `P` rows, in the order `B`, `V`, `C`.
    pub fn entry(&self, row: usize, j: usize) -> i64 {
        if row < self.d_rows() {
            self.d(row, j)
        } else {
            let (a, b) = self.pairs[row - self.d_rows()];
            self.d(a, j) + self.d(b, j)
        }
    }

    pub fn pair(&self, c_row: usize) -> (usize, usize) {
        self.pairs[c_row]
    }

    /// Index among the `C` rows of the sum of `D` rows `a < b`.
    pub fn pair_index(&self, a: usize, b: usize) -> usize {
        debug_assert!(a < b && b < self.d_rows());
        let r = self.d_rows();
        a * (2 * r - a - 1) / 2 + (b - a - 1)
    }

    /// Largest absolute entry a row can have.
    pub fn row_bound(&self, row: usize) -> i64 {
        if row < self.d_rows() {
            1
        } else {
            2
        }
    }
}

pub fn build_robust_matrices(n: usize, p2: usize, seed: u64) -> Result<RobustBinMatrices> {
    if n < 2 || p2 == 0 {
        return Err(Error::InvalidParameter(
            "robust matrices need n >= 2 and P2 >= 1".into(),
        ));
    }
    let p1 = index_bits(n);
    let mut rng = rng_from_seed(seed);
    let signs = (0..p2 * n)
        .map(|_| if rng.random_bool(0.5) { 1 } else { -1 })
        .collect();
    let r = p1 + p2;
    let pairs = (0..r)
        .flat_map(|a| (a + 1..r).map(move |b| (a, b)))
        .collect();
    Ok(RobustBinMatrices {
        n,
        p1,
        p2,
        signs,
        pairs,
    })
}

/// How many verification rows to use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum P2Rule {
    /// `⌈factor·log₂ n⌉`, at least 1.
    LogFactor(f64),
    Fixed(usize),
}

impl P2Rule {
    pub fn rows(&self, n: usize) -> usize {
        match *self {
            P2Rule::LogFactor(f) => ((f * (n as f64).log2()).ceil() as usize).max(1),
            P2Rule::Fixed(k) => k.max(1),
        }
    }
}

/// Serialized form of a robust plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustPlanSpec {
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub d: usize,
    #[serde(rename = "N")]
    pub repetitions: usize,
    #[serde(rename = "P2_rule")]
    pub p2_rule: P2Rule,
    pub delta: f64,
    pub b: u32,
    pub sigma: f64,
    pub seed: u64,
}

impl RobustPlanSpec {
    pub fn build(&self) -> Result<RobustQueryPlan> {
        if self.repetitions < 3 {
            return Err(Error::InvalidParameter("N must be at least 3".into()));
        }
        if self.sigma.is_nan() || self.sigma < 0.0 {
            return Err(Error::InvalidParameter("sigma must be non-negative".into()));
        }
        let design = build_bipartite(self.n, self.m, self.d, mix(self.seed, 0))?;
        let matrices = build_robust_matrices(self.n, self.p2_rule.rows(self.n), mix(self.seed, 1))?;
        Ok(RobustQueryPlan {
            design,
            matrices,
            repetitions: self.repetitions,
            alphabet: QuantizedAlphabet::new(self.delta, self.b)?,
            sigma: self.sigma,
            em: EmConfig::default(),
            spec: *self,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustQueryPlan {
    pub design: BipartiteDesign,
    pub matrices: RobustBinMatrices,
    pub repetitions: usize,
    pub alphabet: QuantizedAlphabet,
    pub sigma: f64,
    pub em: EmConfig,
    pub spec: RobustPlanSpec,
}

impl RobustQueryPlan {
    pub fn n(&self) -> usize {
        self.design.n()
    }

    pub fn bins(&self) -> usize {
        self.design.bins()
    }

    pub fn rows(&self) -> usize {
        self.matrices.rows()
    }

    /// Total measurements `M·N·P`.
    pub fn measurements(&self) -> usize {
        self.bins() * self.repetitions * self.rows()
    }

    /// Noise-free value of every `(bin, row)` for one real vector, bin-major.
    pub fn bin_inner_products(&self, vector: &SparseVector) -> Vec<f64> {
        let p = self.rows();
        let mut out = vec![0.0; self.bins() * p];
        for &(j, beta) in vector.entries() {
            let col: Vec<f64> = (0..p)
                .map(|row| self.matrices.entry(row, j) as f64 * beta.re)
                .collect();
            for &bin in self.design.bins_of(j) {
                let cell = &mut out[bin as usize * p..(bin as usize + 1) * p];
                for (acc, c) in cell.iter_mut().zip(&col) {
                    *acc += c;
                }
            }
        }
        out
    }
}

/// Grid levels (multiples of `Δ`) of the two centers of every row of one bin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenoisedBin {
    pub rows: Vec<(i64, i64)>,
}

/// Denoises every row of a bin. `None` when some center is off the `Δ` grid.
pub fn denoise_bin(
    plan: &RobustQueryPlan,
    measurements: &RobustMeasurementSet,
    bin: usize,
) -> Result<Option<DenoisedBin>> {
    let support = plan.design.coords_of(bin).len().max(1) as i64;
    let delta = plan.alphabet.delta;
    let mut rows = Vec::with_capacity(plan.rows());
    for row in 0..plan.rows() {
        let bound = (support * plan.alphabet.b as i64 * plan.matrices.row_bound(row)).max(1);
        let alphabet = QuantizedAlphabet::new(delta, bound.min(u32::MAX as i64) as u32)?;
        let est = estimate_centers(
            measurements.samples(bin, row),
            plan.sigma,
            &alphabet,
            &plan.em,
        )?;
        let (lo, hi) = est.pair();
        match (alphabet.level(lo, 1e-9), alphabet.level(hi, 1e-9)) {
            (Some(a), Some(b)) => rows.push((a, b)),
            _ => return Ok(None),
        }
    }
    Ok(Some(DenoisedBin { rows }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AlignmentNotes {
    /// Checks where both the straight and the crossed matching fit.
    pub ambiguous: usize,
}

/// Aligns the `D`-row centers into two consistent sets using the `C`-row centers.
/// `None` when some check fits neither matching.
pub fn consecutive_summation_check(
    d_rows: &[(i64, i64)],
    sums: impl Fn(usize, usize) -> (i64, i64),
    notes: &mut AlignmentNotes,
) -> Option<(Vec<i64>, Vec<i64>)> {
    let mut first: Vec<i64> = d_rows.iter().map(|r| r.0).collect();
    let mut second: Vec<i64> = d_rows.iter().map(|r| r.1).collect();
    let mut t: Option<usize> = None;
    for s in 0..d_rows.len() {
        if first[s] == second[s] {
            continue;
        }
        if let Some(t) = t {
            let c = sums(t, s);
            let fits = |a: i64, b: i64| (a, b) == c || (b, a) == c;
            let straight = fits(first[t] + first[s], second[t] + second[s]);
            let crossed = fits(first[t] + second[s], second[t] + first[s]);
            match (straight, crossed) {
                (true, true) => notes.ambiguous += 1,
                (true, false) => {}
                (false, true) => std::mem::swap(&mut first[s], &mut second[s]),
                (false, false) => return None,
            }
        }
        t = Some(s);
    }
    Some((first, second))
}

/// Binary indexing plus verification on one consistent set of grid levels.
pub fn robust_singleton_index(
    set: &[i64],
    matrices: &RobustBinMatrices,
    on_bin: impl Fn(usize) -> bool,
    b: u32,
) -> Verdict {
    if set.iter().all(|&y| y == 0) {
        return Verdict::Zeroton;
    }
    let p1 = matrices.p1();
    let mut level = 0i64;
    let mut j = 0usize;
    for (i, &y) in set[..p1].iter().enumerate() {
        if y == 0 {
            continue;
        }
        if level == 0 {
            level = y;
        } else if y != level {
            return Verdict::Multiton;
        }
        j |= 1 << (p1 - 1 - i);
    }
    if level == 0 {
        // the first coordinate has no set bits; read the value off the first sign row
        level = set[p1] * matrices.v(0, 0);
    }
    if level == 0 || level.unsigned_abs() > b as u64 || j >= matrices.n() || !on_bin(j) {
        return Verdict::Multiton;
    }
    let verified = (0..matrices.p2()).all(|i| set[p1 + i] == level * matrices.v(i, j));
    if !verified {
        return Verdict::Multiton;
    }
    Verdict::Singleton {
        coord: j,
        value: Complex64::new(level as f64, 0.0),
    }
}

/// The robust code. Values travel through the engine as grid levels.
pub struct RobustCode<'a> {
    plan: &'a RobustQueryPlan,
    sets: Vec<Vec<Vec<i64>>>,
}

impl RobustCode<'_> {
    pub fn sets(&self) -> &[Vec<Vec<i64>>] {
        &self.sets
    }
}

impl PeelingCode for RobustCode<'_> {
    type Residual = Vec<i64>;

    fn bins(&self) -> usize {
        self.plan.bins()
    }

    fn bins_of(&self, coord: usize) -> &[u32] {
        self.plan.design.bins_of(coord)
    }

    fn groups(&self, bin: usize) -> &[Vec<i64>] {
        &self.sets[bin]
    }

    fn classify(&self, bin: usize, r: &Vec<i64>) -> Verdict {
        robust_singleton_index(
            r,
            &self.plan.matrices,
            |j| self.plan.design.contains(bin, j),
            self.plan.alphabet.b,
        )
    }

    fn subtract(&self, r: &mut Vec<i64>, coord: usize, value: Complex64) {
        let a = value.re.round() as i64;
        for (row, y) in r.iter_mut().enumerate() {
            *y -= a * self.plan.matrices.d(row, coord);
        }
    }

    fn same_value(&self, a: Complex64, b: Complex64) -> bool {
        a == b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustDiagnostics {
    #[serde(flatten)]
    pub peeling: Diagnostics,
    pub denoise_failures: usize,
    pub inconsistent_bins: usize,
    pub ambiguous_checks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustDecodeOutput {
    pub estimates: Vec<SparseVector>,
    pub diagnostics: RobustDiagnostics,
}

/// Denoises and aligns every bin; bins that fail either step carry no sets.
pub fn build_robust_code<'a>(
    plan: &'a RobustQueryPlan,
    measurements: &RobustMeasurementSet,
) -> Result<(RobustCode<'a>, usize, usize, usize)> {
    if measurements.bins != plan.bins()
        || measurements.rows != plan.rows()
        || measurements.repetitions != plan.repetitions
    {
        return Err(Error::InvalidParameter(format!(
            "measurement set (M={}, P={}, N={}) does not match the plan (M={}, P={}, N={})",
            measurements.bins,
            measurements.rows,
            measurements.repetitions,
            plan.bins(),
            plan.rows(),
            plan.repetitions
        )));
    }
    let r = plan.matrices.d_rows();
    let (mut failures, mut inconsistent) = (0, 0);
    let mut notes = AlignmentNotes::default();
    let mut sets = Vec::with_capacity(plan.bins());
    for bin in 0..plan.bins() {
        let Some(denoised) = denoise_bin(plan, measurements, bin)? else {
            failures += 1;
            sets.push(Vec::new());
            continue;
        };
        let (d_rows, c_rows) = denoised.rows.split_at(r);
        let sums = |a: usize, b: usize| c_rows[plan.matrices.pair_index(a, b)];
        match consecutive_summation_check(d_rows, sums, &mut notes) {
            Some((first, second)) => {
                if first == second {
                    sets.push(vec![first]);
                } else {
                    sets.push(vec![first, second]);
                }
            }
            None => {
                inconsistent += 1;
                sets.push(Vec::new());
            }
        }
    }
    Ok((RobustCode { plan, sets }, failures, inconsistent, notes.ambiguous))
}

/// Decodes the two components. On failure the estimates are empty.
pub fn robust_decode(
    plan: &RobustQueryPlan,
    measurements: &RobustMeasurementSet,
) -> Result<RobustDecodeOutput> {
    let (code, denoise_failures, inconsistent_bins, ambiguous_checks) =
        build_robust_code(plan, measurements)?;
    let mut result = peeling::run(&code, 2);
    let delta = plan.alphabet.delta;
    for est in &mut result.estimates {
        for e in est.iter_mut() {
            e.1 *= delta;
        }
    }
    let out: DecodeOutput = to_output(plan.n(), result)?;
    Ok(RobustDecodeOutput {
        estimates: out.estimates,
        diagnostics: RobustDiagnostics {
            peeling: out.diagnostics,
            denoise_failures,
            inconsistent_bins,
            ambiguous_checks,
        },
    })
}
