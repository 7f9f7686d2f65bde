//! Density evolution for the noiseless code and the grid search over `(d, R, V, c)`.
//!
//! All edge statistics use the Poisson approximation of bin loads with mean
//! `λ = K_ℓ d / M`. [`edge_binomial`] gives the finite-`K` counterpart for checks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Probability that a bin yields a consistent pair of a given color:
/// `[1 − (1−q)^V][1 − (1−q)^R]²`.
pub fn bin_color_prob(q: f64, r: usize, v: usize) -> f64 {
    (1.0 - (1.0 - q).powi(v as i32)) * (1.0 - (1.0 - q).powi(r as i32)).powi(2)
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Fraction of edges whose bin holds exactly `k` color-ℓ elements and a consistent
/// pair of that color: `Q λ^(k−1) e^(−λ) / (k−1)!`.
pub fn edge_poisson(lambda: f64, q_bin: f64, k: usize) -> f64 {
    assert!(k >= 1);
    q_bin * lambda.powi(k as i32 - 1) * (-lambda).exp() / factorial(k - 1)
}

/// Finite-`K` version of [`edge_poisson`]: the other `K_ℓ − 1` elements each land in
/// the bin with probability `d/M`.
pub fn edge_binomial(k_l: usize, m: usize, d: usize, q_bin: f64, k: usize) -> f64 {
    assert!(k >= 1 && k_l >= 1);
    let p = d as f64 / m as f64;
    let others = k_l - 1;
    let j = k - 1;
    if j > others {
        return 0.0;
    }
    let log_choose = ln_choose(others, j);
    q_bin * (log_choose + j as f64 * p.ln() + (others - j) as f64 * (1.0 - p).ln()).exp()
}

fn ln_choose(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

/// Bin-perspective fraction `ξ_k = Q λ^k e^(−λ) / k!`.
pub fn bin_poisson(lambda: f64, q_bin: f64, k: usize) -> f64 {
    q_bin * lambda.powi(k as i32) * (-lambda).exp() / factorial(k)
}

/// Probability that an element is a singleton in at least one of its `d` bins.
pub fn singleton_prob(d: usize, rho1: f64) -> f64 {
    1.0 - (1.0 - rho1).powi(d as i32)
}

/// Probability that an element of a doubleton is a singleton elsewhere, given it sits
/// in at least one doubleton. `None` when `ρ₂ = 0`.
pub fn doubleton_cond(d: usize, rho1: f64, rho2: f64) -> Option<f64> {
    let d = d as i32;
    let den = 1.0 - (1.0 - rho2).powi(d);
    if den <= 0.0 {
        return None;
    }
    let num = 1.0 - (1.0 - rho1).powi(d) - (1.0 - rho2).powi(d) + (1.0 - rho1 - rho2).powi(d);
    Some(num / den)
}

/// Expected strong doubletons per bin: `ξ₂ q_d²`.
pub fn strong_rate(xi2: f64, qd: f64) -> f64 {
    xi2 * qd * qd
}

/// Positive root of `ζ + e^(−θ ζ) = 1`, or 0 when `θ ≤ 1`.
pub fn giant_fraction(theta_r: f64) -> f64 {
    if theta_r <= 1.0 {
        return 0.0;
    }
    if !theta_r.is_finite() {
        return 1.0;
    }
    let g = |z: f64| z + (-theta_r * z).exp() - 1.0;
    let (mut lo, mut hi) = (1e-15, 1.0);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One density-evolution step `f(t) = (1 − Q(e^(−λt) − e^(−λ)))^(d−1)`.
pub fn evolution_map(t: f64, d: usize, lambda: f64, q_bin: f64) -> f64 {
    (1.0 - q_bin * ((-lambda * t).exp() - (-lambda).exp())).powi(d as i32 - 1)
}

/// Derivative test `(d−1) Q λ e^(−λt) > 1`.
pub fn slope_condition(t: f64, d: usize, lambda: f64, q_bin: f64) -> bool {
    (d as f64 - 1.0) * q_bin * lambda * (-lambda * t).exp() > 1.0
}

pub const FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evolution {
    pub p_star: f64,
    pub iterations: usize,
    pub diverged: bool,
}

/// Iterates the map from `p2` until successive values differ by less than `stop_tol`.
pub fn evolve(
    p2: f64,
    d: usize,
    lambda: f64,
    q_bin: f64,
    max_iters: usize,
    stop_tol: f64,
) -> Evolution {
    let mut p = p2;
    let mut iterations = 0;
    while iterations < max_iters {
        let next = evolution_map(p, d, lambda, q_bin);
        iterations += 1;
        let moved = (next - p).abs();
        p = next;
        if moved < stop_tol {
            break;
        }
    }
    if p > p2 {
        return Evolution {
            p_star: p2,
            iterations,
            diverged: true,
        };
    }
    Evolution {
        p_star: p.max(FLOOR),
        iterations,
        diverged: false,
    }
}

/// Code parameters. `shares[ℓ] = K_ℓ / K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignParams {
    pub weights: Vec<f64>,
    pub shares: Vec<f64>,
    pub d: usize,
    #[serde(rename = "R")]
    pub r: usize,
    #[serde(rename = "V")]
    pub v: usize,
    pub c: f64,
}

impl DesignParams {
    pub fn balanced(l: usize, d: usize, r: usize, v: usize, c: f64) -> Self {
        DesignParams {
            weights: vec![1.0 / l as f64; l],
            shares: vec![1.0 / l as f64; l],
            d,
            r,
            v,
            c,
        }
    }

    pub fn l(&self) -> usize {
        self.weights.len()
    }

    pub fn lambda(&self, l: usize) -> f64 {
        self.d as f64 * self.shares[l] / self.c
    }

    pub fn m_over_k(&self) -> f64 {
        (2 * self.r + self.v) as f64 * self.c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionResult {
    pub q_bin: f64,
    pub lambda: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub qs: f64,
    pub qd: f64,
    pub nu: f64,
    pub giant_ratio: f64,
    pub zeta: f64,
    pub p2: f64,
    pub p_star: f64,
    pub iterations: usize,
    pub diverged: bool,
    pub qd_defined: bool,
    pub slope_ok_at_p2: bool,
    pub slope_ok_at_floor: bool,
}

impl EvolutionResult {
    pub fn feasible(&self, p_max: f64, theta: f64) -> bool {
        !self.diverged
            && self.p_star <= p_max
            && self.giant_ratio > theta
            && self.slope_ok_at_p2
            && self.slope_ok_at_floor
    }

    pub fn giant_size(&self) -> f64 {
        self.zeta * self.qs
    }
}

/// Evaluates every closed form for component `l`.
pub fn evaluate_component(params: &DesignParams, l: usize) -> EvolutionResult {
    let q_bin = bin_color_prob(params.weights[l], params.r, params.v);
    let lambda = params.lambda(l);
    let d = params.d;
    let rho1 = edge_poisson(lambda, q_bin, 1);
    let rho2 = edge_poisson(lambda, q_bin, 2);
    let qs = singleton_prob(d, rho1);
    let qd_opt = doubleton_cond(d, rho1, rho2);
    let qd = qd_opt.unwrap_or(0.0);
    let nu = strong_rate(bin_poisson(lambda, q_bin, 2), qd);
    let giant_ratio = if qs > 0.0 {
        2.0 * params.c * nu / (params.shares[l] * qs)
    } else {
        0.0
    };
    let zeta = giant_fraction(giant_ratio);
    let p2 = 1.0 - zeta * qs;
    let ev = evolve(p2, d, lambda, q_bin, 10_000, 1e-12);
    EvolutionResult {
        q_bin,
        lambda,
        rho1,
        rho2,
        qs,
        qd,
        nu,
        giant_ratio,
        zeta,
        p2,
        p_star: ev.p_star,
        iterations: ev.iterations,
        diverged: ev.diverged,
        qd_defined: qd_opt.is_some(),
        slope_ok_at_p2: slope_condition(p2, d, lambda, q_bin),
        slope_ok_at_floor: slope_condition(ev.p_star, d, lambda, q_bin),
    }
}

pub fn evaluate_params(params: &DesignParams) -> Vec<EvolutionResult> {
    (0..params.l()).map(|l| evaluate_component(params, l)).collect()
}

/// Inclusive search grid. `c` runs over `c_min + k·c_step` up to `c_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchRanges {
    pub d: (usize, usize),
    #[serde(rename = "R")]
    pub r: (usize, usize),
    #[serde(rename = "V")]
    pub v: (usize, usize),
    pub c_min: f64,
    pub c_max: f64,
    pub c_step: f64,
}

impl Default for SearchRanges {
    fn default() -> Self {
        SearchRanges {
            d: (11, 18),
            r: (1, 12),
            v: (1, 12),
            c_min: 0.5,
            c_max: 8.0,
            c_step: 0.01,
        }
    }
}

/// Smallest feasible `c` of one `(d, R, V)` and its worst component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub params: DesignParams,
    /// `c / c_step` on the grid; `m/K` is compared exactly as `(2R+V)·c_index`.
    pub c_index: usize,
    pub worst: EvolutionResult,
}

impl Candidate {
    pub fn cost(&self) -> usize {
        (2 * self.params.r + self.params.v) * self.c_index
    }
}

/// One CSV row of the search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierRow {
    pub d: usize,
    #[serde(rename = "R")]
    pub r: usize,
    #[serde(rename = "V")]
    pub v: usize,
    pub c: f64,
    #[serde(rename = "m_over_K")]
    pub m_over_k: f64,
    pub p_star: f64,
    pub zeta: f64,
    pub qs: f64,
    pub giant_ratio: f64,
}

impl From<&Candidate> for FrontierRow {
    fn from(c: &Candidate) -> Self {
        FrontierRow {
            d: c.params.d,
            r: c.params.r,
            v: c.params.v,
            c: c.params.c,
            m_over_k: c.params.m_over_k(),
            p_star: c.worst.p_star,
            zeta: c.worst.zeta,
            qs: c.worst.qs,
            giant_ratio: c.worst.giant_ratio,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub best: Option<Candidate>,
    /// Every `(d, R, V)` with a feasible `c`, in `(d, R, V)` order.
    pub frontier: Vec<Candidate>,
}

/// Minimizes `(2R+V)·c` subject to `p* ≤ p_max`, a giant-component ratio above
/// `theta` and the derivative condition at `p₂` and `p*`, for every component. Ties go
/// to smaller `d`, then smaller `c`.
pub fn optimize_params(
    weights: &[f64],
    shares: &[f64],
    p_max: f64,
    theta: f64,
    ranges: &SearchRanges,
) -> Optimum {
    let c_count = ((ranges.c_max - ranges.c_min) / ranges.c_step).round() as usize + 1;
    let c_offset = (ranges.c_min / ranges.c_step).round() as usize;
    let mut tuples = Vec::new();
    for d in ranges.d.0..=ranges.d.1 {
        for r in ranges.r.0..=ranges.r.1 {
            for v in ranges.v.0..=ranges.v.1 {
                tuples.push((d, r, v));
            }
        }
    }
    let frontier: Vec<Candidate> = tuples
        .par_iter()
        .filter_map(|&(d, r, v)| {
            (0..c_count).find_map(|k| {
                // rounded so grid values print as typed (3.78, not 3.7800000000000002)
                let c = ((c_offset + k) as f64 * ranges.c_step * 1e9).round() / 1e9;
                let params = DesignParams {
                    weights: weights.to_vec(),
                    shares: shares.to_vec(),
                    d,
                    r,
                    v,
                    c,
                };
                let results = evaluate_params(&params);
                if !results.iter().all(|e| e.feasible(p_max, theta)) {
                    return None;
                }
                let worst = *results
                    .iter()
                    .max_by(|a, b| a.p_star.total_cmp(&b.p_star))
                    .expect("at least one component");
                Some(Candidate {
                    params,
                    c_index: c_offset + k,
                    worst,
                })
            })
        })
        .collect();
    let best = frontier
        .iter()
        .min_by(|a, b| {
            a.cost()
                .cmp(&b.cost())
                .then(a.params.d.cmp(&b.params.d))
                .then(a.c_index.cmp(&b.c_index))
        })
        .cloned();
    Optimum { best, frontier }
}
