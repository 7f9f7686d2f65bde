//! Noiseless decoder: summation checks, ratio tests, singleton graph, giant
//! components and guess-and-check peeling.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::design::{NoiselessQueryPlan, RatioVectors};
use crate::error::{Error, Result};
use crate::model::SparseVector;
use crate::peeling::{self, Diagnostics, PeelingCode, SingletonBall, SingletonGraph, Verdict};
use crate::simulate::{BinMeasurements, MeasurementSet};

pub use crate::peeling::{connected_components, giant_components, Outcome};

/// Floating-point thresholds of the noiseless primitives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative slack of `y3 = y1 + y2`.
    pub summation: f64,
    /// Relative slack of `|y1| = |y2|`.
    pub modulus: f64,
    /// Slack of the phase integrality test, as a fraction of `n`.
    pub phase: f64,
    /// Zeroton threshold relative to the group's value scale.
    pub zeroton: f64,
    /// Relative slack when comparing recovered values.
    pub value: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            summation: 1e-9,
            modulus: 1e-9,
            phase: 1e-6,
            zeroton: 1e-9,
            value: 1e-6,
        }
    }
}

/// A pair of index measurements certified to come from one component, possibly after
/// peeling. `scale` is the largest magnitude seen by this residual and sets the
/// zeroton threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistentPair {
    pub bin: usize,
    pub y1: Complex64,
    pub y2: Complex64,
    pub scale: f64,
}

impl ConsistentPair {
    pub fn new(bin: usize, y1: Complex64, y2: Complex64) -> Self {
        ConsistentPair {
            bin,
            y1,
            y2,
            scale: y1.norm().max(y2.norm()),
        }
    }
}

fn close(a: Complex64, b: Complex64, rel: f64) -> bool {
    (a - b).norm() <= rel * a.norm().max(b.norm()).max(1.0)
}

/// All `(type-I, type-II, verification)` triplets with `y3 = y1 + y2`, as distinct pairs.
pub fn summation_check(bin: usize, m: &BinMeasurements<'_>, tol: f64) -> Vec<ConsistentPair> {
    let mut pairs: Vec<ConsistentPair> = Vec::new();
    for &y1 in m.type_one {
        for &y2 in m.type_two {
            let passes = m
                .verification
                .iter()
                .any(|&y3| (y3 - (y1 + y2)).norm() <= tol * y3.norm().max(1.0));
            if passes
                && !pairs
                    .iter()
                    .any(|p| close(p.y1, y1, tol) && close(p.y2, y2, tol))
            {
                pairs.push(ConsistentPair::new(bin, y1, y2));
            }
        }
    }
    pairs
}

/// Singleton detection from the modulus equality and the integrality of
/// `n·∠(y2/y1)/2π`. `on_bin` decides whether a candidate coordinate lies on the bin.
pub fn ratio_test(
    pair: &ConsistentPair,
    vectors: &RatioVectors,
    on_bin: impl Fn(usize) -> bool,
    tol: &Tolerances,
) -> Verdict {
    let (a1, a2) = (pair.y1.norm(), pair.y2.norm());
    if a1.max(a2) <= tol.zeroton * pair.scale || pair.scale == 0.0 {
        return Verdict::Zeroton;
    }
    if (a1 - a2).abs() > tol.modulus * a1 {
        return Verdict::Multiton;
    }
    let n = vectors.n();
    let mut k = n as f64 * (pair.y2 / pair.y1).arg() / (2.0 * PI);
    if k < 0.0 {
        k += n as f64;
    }
    let k_hat = k.round();
    if (k - k_hat).abs() > tol.phase * n as f64 {
        return Verdict::Multiton;
    }
    let j = (k_hat as usize) % n;
    if !on_bin(j) {
        return Verdict::Multiton;
    }
    Verdict::Singleton {
        coord: j,
        value: pair.y1 / vectors.r1[j],
    }
}

/// Subtracts the contribution of `(coord, value)` from both index measurements.
pub fn peel(pair: &mut ConsistentPair, coord: usize, value: Complex64, vectors: &RatioVectors) {
    let c1 = vectors.r1[coord] * value;
    let c2 = vectors.r2[coord] * value;
    pair.scale = pair.scale.max(c1.norm());
    pair.y1 -= c1;
    pair.y2 -= c2;
}

/// The noiseless code: consistent pairs per bin with the ratio test as classifier.
pub struct NoiselessCode<'a> {
    plan: &'a NoiselessQueryPlan,
    pairs: Vec<Vec<ConsistentPair>>,
    tol: Tolerances,
}

impl<'a> NoiselessCode<'a> {
    pub fn new(
        plan: &'a NoiselessQueryPlan,
        measurements: &MeasurementSet,
        tol: Tolerances,
    ) -> Result<Self> {
        check_shape(plan, measurements)?;
        let pairs = (0..plan.bins())
            .map(|i| summation_check(i, &measurements.bin(i), tol.summation))
            .collect();
        Ok(NoiselessCode { plan, pairs, tol })
    }

    pub fn pairs(&self) -> &[Vec<ConsistentPair>] {
        &self.pairs
    }
}

impl PeelingCode for NoiselessCode<'_> {
    type Residual = ConsistentPair;

    fn bins(&self) -> usize {
        self.plan.bins()
    }

    fn bins_of(&self, coord: usize) -> &[u32] {
        self.plan.design.bins_of(coord)
    }

    fn groups(&self, bin: usize) -> &[ConsistentPair] {
        &self.pairs[bin]
    }

    fn classify(&self, bin: usize, r: &ConsistentPair) -> Verdict {
        ratio_test(
            r,
            &self.plan.vectors,
            |j| self.plan.design.contains(bin, j),
            &self.tol,
        )
    }

    fn subtract(&self, r: &mut ConsistentPair, coord: usize, value: Complex64) {
        peel(r, coord, value, &self.plan.vectors);
    }

    fn same_value(&self, a: Complex64, b: Complex64) -> bool {
        (a - b).norm() <= self.tol.value * a.norm().max(b.norm())
    }
}

fn check_shape(plan: &NoiselessQueryPlan, m: &MeasurementSet) -> Result<()> {
    if m.n != plan.n() || m.bins != plan.bins() || m.r != plan.r || m.v != plan.v {
        return Err(Error::InvalidParameter(format!(
            "measurement set (n={}, M={}, R={}, V={}) does not match the plan (n={}, M={}, R={}, V={})",
            m.n,
            m.bins,
            m.r,
            m.v,
            plan.n(),
            plan.bins(),
            plan.r,
            plan.v
        )));
    }
    if m.values.len() != plan.measurements() {
        return Err(Error::DimensionMismatch {
            expected: plan.measurements(),
            got: m.values.len(),
        });
    }
    Ok(())
}

/// Singleton balls of a noiseless code, deduplicated by `(coord, value)`.
pub fn find_singletons(code: &NoiselessCode<'_>) -> Vec<SingletonBall> {
    peeling::Engine::new(code).find_singletons()
}

pub fn build_singleton_graph(code: &NoiselessCode<'_>, balls: Vec<SingletonBall>) -> SingletonGraph {
    peeling::Engine::new(code).build_singleton_graph(balls)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutput {
    pub estimates: Vec<SparseVector>,
    pub diagnostics: Diagnostics,
}

/// Decodes `l` components. A failure yields `l` empty vectors and a non-success
/// outcome in the diagnostics.
pub fn decode(
    plan: &NoiselessQueryPlan,
    measurements: &MeasurementSet,
    l: usize,
) -> Result<DecodeOutput> {
    decode_with(plan, measurements, l, Tolerances::default())
}

pub fn decode_with(
    plan: &NoiselessQueryPlan,
    measurements: &MeasurementSet,
    l: usize,
    tol: Tolerances,
) -> Result<DecodeOutput> {
    if l == 0 {
        return Err(Error::InvalidParameter("L must be positive".into()));
    }
    let code = NoiselessCode::new(plan, measurements, tol)?;
    let result = peeling::run(&code, l);
    to_output(plan.n(), result)
}

pub(crate) fn to_output(n: usize, result: peeling::PeelResult) -> Result<DecodeOutput> {
    let estimates = result
        .estimates
        .into_iter()
        .map(|entries| SparseVector::from_entries(n, entries))
        .collect::<Result<Vec<_>>>()?;
    Ok(DecodeOutput {
        estimates,
        diagnostics: result.diagnostics,
    })
}
