//! Experiment runners behind the command-line modes.
//!
//! Every trial derives its seed as `mix(master, trial)` and splits it again into
//! plan (`mix(seed, 0)`), model (`mix(seed, 1)`) and measurement (`mix(seed, 2)`)
//! streams. Trials run on a rayon pool and are collected in trial order, so rows
//! depend only on the configuration, never on scheduling.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decode::decode;
use crate::design::{bins_for, PlanSpec};
use crate::devo::{optimize_params, FrontierRow, SearchRanges};
use crate::model::{
    evaluate, generate_mixture, MixtureModel, MixtureSpec, QuantizedAlphabet, ValueSource,
    ValueTolerance,
};
use crate::robust::{index_bits, robust_decode, P2Rule, RobustPlanSpec};
use crate::simulate::{sample_measurements, sample_robust_measurements, MeasurementSet};
use crate::{mix, Error, Result};

/// A scalar or a list in JSON; either way a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sweep<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> Sweep<T> {
    pub fn values(&self) -> Vec<T> {
        match self {
            Sweep::One(v) => vec![v.clone()],
            Sweep::Many(v) => v.clone(),
        }
    }
}

/// Fixed code parameters or `"auto"` to run the optimizer first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DesignChoice {
    Auto(AutoTag),
    Fixed(FixedDesign),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedDesign {
    pub d: usize,
    #[serde(rename = "R", default = "default_r")]
    pub r: usize,
    #[serde(rename = "V", default = "default_r")]
    pub v: usize,
    /// `M / K`.
    pub c: f64,
}

fn default_r() -> usize {
    3
}

impl Default for DesignChoice {
    fn default() -> Self {
        DesignChoice::Fixed(FixedDesign {
            d: 15,
            r: 3,
            v: 3,
            c: 3.71,
        })
    }
}

/// Configuration shared by all modes. Each mode reads the fields it needs and
/// ignores the rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "L")]
    pub l: usize,
    pub n: Sweep<usize>,
    /// Total sparsity, split evenly across components.
    #[serde(rename = "K")]
    pub k: Sweep<usize>,
    pub design: DesignChoice,
    /// Sweep of `M / K`; replaces the design's `c` when present.
    pub m_over_k: Option<Vec<f64>>,
    pub trials: usize,
    pub seed: u64,
    /// Worker threads; `None` uses all cores, or one for the runtime modes.
    pub jobs: Option<usize>,
    pub out: Option<String>,

    /// Robust repetitions `N`. When absent, `N = ⌈f·log₂ n⌉` for each `f` in
    /// `repetition_factor`.
    #[serde(rename = "N")]
    pub repetitions: Option<Vec<usize>>,
    pub repetition_factor: Vec<f64>,
    /// Verification rows `P₂ = ⌈p2_factor·log₂ n⌉`.
    pub p2_factor: f64,
    pub delta: f64,
    pub b: u32,
    pub sigma: f64,
    pub perturbation: Vec<f64>,

    pub p_max: f64,
    pub theta: f64,
    pub ranges: SearchRanges,

    /// `single-run` decodes with the robust decoder instead of the noiseless one.
    pub robust: bool,
    /// `single-run` writes its measurement set here as JSON.
    pub measurements_out: Option<String>,
    /// `single-run` decodes this measurement set instead of sampling a fresh one.
    pub measurements_in: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            l: 2,
            n: Sweep::One(10_000),
            k: Sweep::One(100),
            design: DesignChoice::default(),
            m_over_k: None,
            trials: 100,
            seed: 0,
            jobs: None,
            out: None,
            repetitions: None,
            repetition_factor: vec![1.0],
            p2_factor: 0.3,
            delta: 1.0,
            b: 5,
            sigma: 0.2,
            perturbation: vec![0.0, 0.1, 0.2, 0.3, 0.4],
            p_max: 1e-5,
            theta: 2.0,
            ranges: SearchRanges::default(),
            robust: false,
            measurements_out: None,
            measurements_in: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.l == 0 {
            return Err(Error::InvalidParameter("L must be positive".into()));
        }
        if self.jobs == Some(0) {
            return Err(Error::InvalidParameter("jobs must be at least 1".into()));
        }
        Ok(())
    }

    /// Resolves the design, running the optimizer for `"auto"`.
    pub fn resolve_design(&self) -> Result<FixedDesign> {
        match &self.design {
            DesignChoice::Fixed(f) => Ok(*f),
            DesignChoice::Auto(_) => {
                let w = vec![1.0 / self.l as f64; self.l];
                let best = optimize_params(&w, &w, self.p_max, self.theta, &self.ranges)
                    .best
                    .ok_or_else(|| {
                        Error::InvalidParameter("no feasible design in the search ranges".into())
                    })?;
                Ok(FixedDesign {
                    d: best.params.d,
                    r: best.params.r,
                    v: best.params.v,
                    c: best.params.c,
                })
            }
        }
    }

    fn c_values(&self, design: &FixedDesign) -> Vec<f64> {
        self.m_over_k.clone().unwrap_or_else(|| vec![design.c])
    }

    fn repetitions_for(&self, n: usize) -> Vec<usize> {
        match &self.repetitions {
            Some(v) => v.clone(),
            None => self
                .repetition_factor
                .iter()
                .map(|f| (f * (n as f64).log2()).ceil() as usize)
                .collect(),
        }
    }
}

/// Runs `trials` closures on a pool of `jobs` threads and returns results in trial
/// order. Trial `t` receives `mix(master, t)`.
pub fn run_trials<T, F>(trials: usize, master: u64, jobs: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        (0..trials as u64)
            .into_par_iter()
            .map(|t| f(mix(master, t)))
            .collect()
    }))
}

/// What one trial produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub success: bool,
    pub false_discoveries: usize,
    /// True non-zeros recovered with the right value.
    pub recovered: usize,
    pub total: usize,
    pub decode_ns: u64,
    /// The decoder reported a failure signal.
    pub failed: bool,
    pub component_sizes: Vec<usize>,
}

impl TrialRecord {
    pub fn unrecovered_fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            (self.total - self.recovered) as f64 / self.total as f64
        }
    }
}

fn score(
    truth: &MixtureModel,
    estimates: &[crate::SparseVector],
    decode_ns: u64,
    failed: bool,
    component_sizes: Vec<usize>,
) -> TrialRecord {
    let report = evaluate(truth, estimates, ValueTolerance::for_model(truth));
    let recovered = report
        .components
        .iter()
        .zip(&report.permutation)
        .enumerate()
        .map(|(l, (c, _))| (c.exact_fraction * truth.vectors[l].nnz() as f64).round() as usize)
        .sum();
    TrialRecord {
        success: report.success,
        false_discoveries: report.false_discoveries(),
        recovered,
        total: truth.total_sparsity(),
        decode_ns,
        failed,
        component_sizes,
    }
}

/// One noiseless instance: `L` components sharing `K` non-zeros, `M = round(c·K)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiselessInstance {
    pub l: usize,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub r: usize,
    pub v: usize,
    pub c: f64,
}

impl NoiselessInstance {
    pub fn bins(&self) -> usize {
        bins_for(self.c, self.k)
    }

    pub fn plan_spec(&self, seed: u64) -> PlanSpec {
        PlanSpec {
            n: self.n,
            m: self.bins(),
            d: self.d,
            r: self.r,
            v: self.v,
            seed: mix(seed, 0),
        }
    }

    pub fn model(&self, seed: u64) -> Result<MixtureModel> {
        let spec = MixtureSpec::balanced(self.n, self.l, self.k, ValueSource::ContinuousComplex, 0.0);
        generate_mixture(&spec, mix(seed, 1))
    }

    pub fn trial(&self, seed: u64) -> Result<TrialRecord> {
        let plan = self.plan_spec(seed).build()?;
        let model = self.model(seed)?;
        let ms = sample_measurements(&plan, &model, mix(seed, 2))?.without_labels();
        let start = Instant::now();
        let out = decode(&plan, &ms, self.l)?;
        let ns = start.elapsed().as_nanos() as u64;
        Ok(score(
            &model,
            &out.estimates,
            ns,
            out.diagnostics.failed(),
            out.diagnostics.component_sizes,
        ))
    }
}

/// One robust instance with `L = 2`. With `perturbation = Some(level)` values are
/// drawn off the grid and success means recovering their nearest symbols.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustInstance {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub c: f64,
    pub repetitions: usize,
    pub p2: P2Rule,
    pub delta: f64,
    pub b: u32,
    pub sigma: f64,
    pub perturbation: Option<f64>,
}

impl RobustInstance {
    pub fn plan_spec(&self, seed: u64) -> RobustPlanSpec {
        RobustPlanSpec {
            n: self.n,
            m: bins_for(self.c, self.k),
            d: self.d,
            repetitions: self.repetitions,
            p2_rule: self.p2,
            delta: self.delta,
            b: self.b,
            sigma: self.sigma,
            seed: mix(seed, 0),
        }
    }

    pub fn p1(&self) -> usize {
        index_bits(self.n)
    }

    pub fn p2_rows(&self) -> usize {
        self.p2.rows(self.n)
    }

    pub fn p3(&self) -> usize {
        let p = self.p1() + self.p2_rows();
        p * (p - 1) / 2
    }

    pub fn measurements(&self) -> usize {
        bins_for(self.c, self.k) * self.repetitions * (self.p1() + self.p2_rows() + self.p3())
    }

    pub fn trial(&self, seed: u64) -> Result<TrialRecord> {
        let alphabet = QuantizedAlphabet::new(self.delta, self.b)?;
        let plan = self.plan_spec(seed).build()?;
        let source = match self.perturbation {
            Some(level) if level > 0.0 => ValueSource::Perturbed { alphabet, level },
            _ => ValueSource::Quantized { alphabet },
        };
        let spec = MixtureSpec::balanced(self.n, 2, self.k, source, self.sigma);
        let model = generate_mixture(&spec, mix(seed, 1))?;
        let ms = sample_robust_measurements(&plan, &model, mix(seed, 2))?;
        let start = Instant::now();
        let out = robust_decode(&plan, &ms)?;
        let ns = start.elapsed().as_nanos() as u64;
        let truth = model.quantized(&alphabet)?;
        Ok(score(
            &truth,
            &out.estimates,
            ns,
            out.diagnostics.peeling.failed(),
            out.diagnostics.peeling.component_sizes,
        ))
    }
}

/// Mean and nearest-rank percentiles of decode times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Timing {
    pub mean_ns: f64,
    pub p50: u64,
    pub p95: u64,
}

impl Timing {
    pub fn of(samples: &[u64]) -> Timing {
        if samples.is_empty() {
            return Timing {
                mean_ns: 0.0,
                p50: 0,
                p95: 0,
            };
        }
        let mut s = samples.to_vec();
        s.sort_unstable();
        let rank = |p: f64| s[((p * s.len() as f64).ceil() as usize).clamp(1, s.len()) - 1];
        Timing {
            mean_ns: s.iter().map(|&x| x as f64).sum::<f64>() / s.len() as f64,
            p50: rank(0.5),
            p95: rank(0.95),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    #[serde(rename = "L")]
    pub l: usize,
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub d: usize,
    #[serde(rename = "R")]
    pub r: usize,
    #[serde(rename = "V")]
    pub v: usize,
    #[serde(rename = "M")]
    pub bins: usize,
    pub m: usize,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeRow {
    #[serde(rename = "L")]
    pub l: usize,
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub d: usize,
    #[serde(rename = "R")]
    pub r: usize,
    #[serde(rename = "V")]
    pub v: usize,
    #[serde(rename = "M")]
    pub bins: usize,
    pub m: usize,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_decode_ns: f64,
    pub p50: u64,
    pub p95: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustRow {
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub repetitions: usize,
    #[serde(rename = "P1")]
    pub p1: usize,
    #[serde(rename = "P2")]
    pub p2: usize,
    #[serde(rename = "P3")]
    pub p3: usize,
    #[serde(rename = "M")]
    pub bins: usize,
    pub m: usize,
    pub successes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustRuntimeRow {
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub repetitions: usize,
    #[serde(rename = "P1")]
    pub p1: usize,
    #[serde(rename = "P2")]
    pub p2: usize,
    #[serde(rename = "P3")]
    pub p3: usize,
    #[serde(rename = "M")]
    pub bins: usize,
    pub m: usize,
    pub successes: usize,
    pub mean_decode_ns: f64,
    pub p50: u64,
    pub p95: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationRow {
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub perturbation: f64,
    pub d: usize,
    #[serde(rename = "N")]
    pub repetitions: usize,
    #[serde(rename = "P2")]
    pub p2: usize,
    #[serde(rename = "M")]
    pub bins: usize,
    pub m: usize,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleRunRow {
    pub decoder: String,
    #[serde(rename = "L")]
    pub l: usize,
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub bins: usize,
    pub m: usize,
    pub success: bool,
    pub false_discoveries: usize,
    pub recovered: usize,
    pub decode_ns: u64,
}

/// A sweep point's trials, with the row-level statistics the modes report.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult<P> {
    pub point: P,
    pub records: Vec<TrialRecord>,
}

impl<P> PointResult<P> {
    pub fn successes(&self) -> usize {
        self.records.iter().filter(|r| r.success).count()
    }

    pub fn success_rate(&self) -> f64 {
        self.successes() as f64 / self.records.len().max(1) as f64
    }

    pub fn timing(&self) -> Timing {
        let t: Vec<u64> = self.records.iter().map(|r| r.decode_ns).collect();
        Timing::of(&t)
    }

    /// False discoveries summed over successful trials.
    pub fn false_discoveries(&self) -> usize {
        self.records.iter().map(|r| r.false_discoveries).sum()
    }
}

fn collect<P: Copy + Sync, F>(point: P, trials: usize, master: u64, jobs: Option<usize>, f: F) -> Result<PointResult<P>>
where
    F: Fn(&P, u64) -> Result<TrialRecord> + Sync + Send,
{
    let records = run_trials(trials, master, jobs, |seed| f(&point, seed))?
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(PointResult { point, records })
}

/// Noiseless instances of a sweep over `n`, `K` and `M/K`, in that nesting order.
pub fn noiseless_points(cfg: &ExperimentConfig) -> Result<Vec<NoiselessInstance>> {
    let design = cfg.resolve_design()?;
    let mut out = Vec::new();
    for n in cfg.n.values() {
        for k in cfg.k.values() {
            for c in cfg.c_values(&design) {
                out.push(NoiselessInstance {
                    l: cfg.l,
                    n,
                    k,
                    d: design.d,
                    r: design.r,
                    v: design.v,
                    c,
                });
            }
        }
    }
    Ok(out)
}

pub fn run_noiseless(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<Vec<PointResult<NoiselessInstance>>> {
    cfg.validate()?;
    noiseless_points(cfg)?
        .into_iter()
        .map(|p| collect(p, cfg.trials, cfg.seed, jobs, |p, s| p.trial(s)))
        .collect()
}

fn phase_row(p: &PointResult<NoiselessInstance>) -> PhaseRow {
    let i = &p.point;
    PhaseRow {
        l: i.l,
        n: i.n,
        k: i.k,
        d: i.d,
        r: i.r,
        v: i.v,
        bins: i.bins(),
        m: (2 * i.r + i.v) * i.bins(),
        trials: p.records.len(),
        successes: p.successes(),
        success_rate: p.success_rate(),
    }
}

pub fn noiseless_phase(cfg: &ExperimentConfig) -> Result<Vec<PhaseRow>> {
    Ok(run_noiseless(cfg, cfg.jobs)?.iter().map(phase_row).collect())
}

/// Like [`noiseless_phase`] with decode timings. Runs one trial at a time unless
/// `jobs` is set, so timings are not skewed by contention.
pub fn noiseless_runtime(cfg: &ExperimentConfig) -> Result<Vec<RuntimeRow>> {
    let results = run_noiseless(cfg, Some(cfg.jobs.unwrap_or(1)))?;
    Ok(results
        .iter()
        .map(|p| {
            let base = phase_row(p);
            let t = p.timing();
            RuntimeRow {
                l: base.l,
                n: base.n,
                k: base.k,
                d: base.d,
                r: base.r,
                v: base.v,
                bins: base.bins,
                m: base.m,
                trials: base.trials,
                successes: base.successes,
                success_rate: base.success_rate,
                mean_decode_ns: t.mean_ns,
                p50: t.p50,
                p95: t.p95,
            }
        })
        .collect())
}

/// Robust instances of a sweep over `n`, `K`, `M/K` and `N`.
pub fn robust_points(cfg: &ExperimentConfig) -> Result<Vec<RobustInstance>> {
    let design = cfg.resolve_design()?;
    let mut out = Vec::new();
    for n in cfg.n.values() {
        for k in cfg.k.values() {
            for c in cfg.c_values(&design) {
                for reps in cfg.repetitions_for(n) {
                    out.push(RobustInstance {
                        n,
                        k,
                        d: design.d,
                        c,
                        repetitions: reps,
                        p2: P2Rule::LogFactor(cfg.p2_factor),
                        delta: cfg.delta,
                        b: cfg.b,
                        sigma: cfg.sigma,
                        perturbation: None,
                    });
                }
            }
        }
    }
    Ok(out)
}

pub fn run_robust(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<Vec<PointResult<RobustInstance>>> {
    cfg.validate()?;
    robust_points(cfg)?
        .into_iter()
        .map(|p| collect(p, cfg.trials, cfg.seed, jobs, |p, s| p.trial(s)))
        .collect()
}

fn robust_row(p: &PointResult<RobustInstance>) -> RobustRow {
    let i = &p.point;
    RobustRow {
        n: i.n,
        k: i.k,
        repetitions: i.repetitions,
        p1: i.p1(),
        p2: i.p2_rows(),
        p3: i.p3(),
        bins: bins_for(i.c, i.k),
        m: i.measurements(),
        successes: p.successes(),
    }
}

pub fn robust_sample(cfg: &ExperimentConfig) -> Result<Vec<RobustRow>> {
    Ok(run_robust(cfg, cfg.jobs)?.iter().map(robust_row).collect())
}

pub fn robust_runtime(cfg: &ExperimentConfig) -> Result<Vec<RobustRuntimeRow>> {
    let results = run_robust(cfg, Some(cfg.jobs.unwrap_or(1)))?;
    Ok(results
        .iter()
        .map(|p| {
            let b = robust_row(p);
            let t = p.timing();
            RobustRuntimeRow {
                n: b.n,
                k: b.k,
                repetitions: b.repetitions,
                p1: b.p1,
                p2: b.p2,
                p3: b.p3,
                bins: b.bins,
                m: b.m,
                successes: b.successes,
                mean_decode_ns: t.mean_ns,
                p50: t.p50,
                p95: t.p95,
            }
        })
        .collect())
}

/// Perturbation sweep with `d = round(5·M/K)`, one row per `(M/K, level)`.
pub fn run_perturbation(cfg: &ExperimentConfig) -> Result<Vec<PointResult<RobustInstance>>> {
    cfg.validate()?;
    let mut points = Vec::new();
    for p in robust_points(cfg)? {
        for &level in &cfg.perturbation {
            points.push(RobustInstance {
                d: ((5.0 * p.c).round() as usize).max(1),
                perturbation: Some(level),
                ..p
            });
        }
    }
    points
        .into_iter()
        .map(|p| collect(p, cfg.trials, cfg.seed, cfg.jobs, |p, s| p.trial(s)))
        .collect()
}

pub fn perturbation(cfg: &ExperimentConfig) -> Result<Vec<PerturbationRow>> {
    Ok(run_perturbation(cfg)?
        .iter()
        .map(|p| {
            let i = &p.point;
            PerturbationRow {
                n: i.n,
                k: i.k,
                perturbation: i.perturbation.unwrap_or(0.0),
                d: i.d,
                repetitions: i.repetitions,
                p2: i.p2_rows(),
                bins: bins_for(i.c, i.k),
                m: i.measurements(),
                trials: p.records.len(),
                successes: p.successes(),
                success_rate: p.success_rate(),
            }
        })
        .collect())
}

/// The optimizer's frontier, sorted by `m/K` then `d` then `c`.
pub fn devo_optimize(cfg: &ExperimentConfig) -> Result<Vec<FrontierRow>> {
    if cfg.l == 0 {
        return Err(Error::InvalidParameter("L must be positive".into()));
    }
    let w = vec![1.0 / cfg.l as f64; cfg.l];
    let mut frontier = optimize_params(&w, &w, cfg.p_max, cfg.theta, &cfg.ranges).frontier;
    frontier.sort_by(|a, b| {
        a.cost()
            .cmp(&b.cost())
            .then(a.params.d.cmp(&b.params.d))
            .then(a.c_index.cmp(&b.c_index))
    });
    Ok(frontier.iter().map(FrontierRow::from).collect())
}

/// One trial at `mix(seed, 0)` with the first sweep values. Returns the row and the
/// sampled (or loaded) noiseless measurement set, if any.
pub fn single_run(cfg: &ExperimentConfig) -> Result<(SingleRunRow, Option<MeasurementSet>)> {
    cfg.validate()?;
    let seed = mix(cfg.seed, 0);
    if cfg.robust {
        let p = *robust_points(cfg)?
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty sweep".into()))?;
        let rec = p.trial(seed)?;
        return Ok((
            SingleRunRow {
                decoder: "robust".into(),
                l: 2,
                n: p.n,
                k: p.k,
                bins: bins_for(p.c, p.k),
                m: p.measurements(),
                success: rec.success,
                false_discoveries: rec.false_discoveries,
                recovered: rec.recovered,
                decode_ns: rec.decode_ns,
            },
            None,
        ));
    }
    let p = *noiseless_points(cfg)?
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty sweep".into()))?;
    let plan = p.plan_spec(seed).build()?;
    let model = p.model(seed)?;
    let ms = match &cfg.measurements_in {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Format(format!("{path}: {e}")))?;
            serde_json::from_str(&text)?
        }
        None => sample_measurements(&plan, &model, mix(seed, 2))?.without_labels(),
    };
    let start = Instant::now();
    let out = decode(&plan, &ms, p.l)?;
    let ns = start.elapsed().as_nanos() as u64;
    let rec = score(&model, &out.estimates, ns, out.diagnostics.failed(), Vec::new());
    Ok((
        SingleRunRow {
            decoder: "noiseless".into(),
            l: p.l,
            n: p.n,
            k: p.k,
            bins: p.bins(),
            m: plan.measurements(),
            success: rec.success,
            false_discoveries: rec.false_discoveries,
            recovered: rec.recovered,
            decode_ns: rec.decode_ns,
        },
        Some(ms),
    ))
}
