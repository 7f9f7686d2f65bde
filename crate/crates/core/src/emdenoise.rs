//! Center estimation for a two-component, equally weighted Gaussian mixture with known
//! `σ` and centers on the grid `{kΔ : |k| ≤ b}`: snapped sample mean, moment estimate of
//! the half-gap, EM refinement and a final snap to the half grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::QuantizedAlphabet;

/// Nearest point of the half grid `{kΔ/2 : |k| ≤ 2b}`; ties go toward smaller magnitude.
pub fn snap_half_grid(x: f64, alphabet: &QuantizedAlphabet) -> f64 {
    let half = alphabet.delta / 2.0;
    snap_to_step(x, half, 2.0 * alphabet.b as f64)
}

/// Nearest point of the achievable grid `{kΔ : |k| ≤ b}`, zero included. Ties as in
/// [`snap_half_grid`].
pub fn snap_grid(x: f64, alphabet: &QuantizedAlphabet) -> f64 {
    snap_to_step(x, alphabet.delta, alphabet.b as f64)
}

fn snap_to_step(x: f64, step: f64, kmax: f64) -> f64 {
    let t = x / step;
    let lo = t.floor();
    let hi = lo + 1.0;
    let k = if (t - lo) < (hi - t) {
        lo
    } else if (t - lo) > (hi - t) {
        hi
    } else if lo.abs() <= hi.abs() {
        lo
    } else {
        hi
    };
    k.clamp(-kmax, kmax) * step
}

/// Snapped mean of the first-stage samples.
pub fn snap_mean(samples: &[f64], alphabet: &QuantizedAlphabet) -> f64 {
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    snap_half_grid(mean, alphabet)
}

/// Moment estimate `sqrt(max(0, mean(ỹ²) − σ²))` of the half-gap.
pub fn mom_theta0(centered: &[f64], sigma: f64) -> f64 {
    let m2 = centered.iter().map(|y| y * y).sum::<f64>() / centered.len() as f64;
    (m2 - sigma * sigma).max(0.0).sqrt()
}

/// Posterior probability that a centered sample came from `+θ`.
pub fn responsibility(y: f64, theta: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        let s = y * theta;
        return if s > 0.0 {
            1.0
        } else if s < 0.0 {
            0.0
        } else {
            0.5
        };
    }
    1.0 / (1.0 + (-2.0 * y * theta / (sigma * sigma)).exp())
}

/// One M step: `θ' = (2 Σ p(ỹ|θ) ỹ − Σ ỹ) / N₃`.
pub fn em_step(centered: &[f64], sigma: f64, theta: f64) -> f64 {
    let (weighted, plain) = centered.iter().fold((0.0, 0.0), |(w, s), &y| {
        (w + responsibility(y, theta, sigma) * y, s + y)
    });
    (2.0 * weighted - plain) / centered.len() as f64
}

/// Runs up to `iterations` EM steps from `theta0`, stopping early once a step moves
/// less than `stop`. Returns `(θ_T, steps run)`.
pub fn em_refine(
    centered: &[f64],
    sigma: f64,
    theta0: f64,
    iterations: usize,
    stop: f64,
) -> (f64, usize) {
    let mut theta = theta0;
    for t in 0..iterations {
        let next = em_step(centered, sigma, theta);
        let moved = (next - theta).abs();
        theta = next;
        if moved < stop {
            return (theta, t + 1);
        }
    }
    (theta, iterations)
}

/// How the samples are divided among the mean, moment and EM stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Split {
    /// Three nearly equal parts, earlier parts taking the remainder.
    Thirds,
    /// Explicit `(N₁, N₂)`; `N₃` takes the rest.
    Counts(usize, usize),
}

impl Split {
    pub fn sizes(&self, n: usize) -> Result<(usize, usize, usize)> {
        let sizes = match *self {
            Split::Thirds => {
                let base = n / 3;
                let rem = n % 3;
                (base + (rem > 0) as usize, base + (rem > 1) as usize, base)
            }
            Split::Counts(n1, n2) => (n1, n2, n.saturating_sub(n1 + n2)),
        };
        if sizes.0 == 0 || sizes.1 == 0 || sizes.2 == 0 || sizes.0 + sizes.1 + sizes.2 != n {
            return Err(Error::EmptySplit(sizes));
        }
        Ok(sizes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmConfig {
    pub split: Split,
    pub iterations: usize,
    /// Early stop threshold in units of `Δ`.
    pub stop: f64,
    /// Re-estimate both centers from all samples with a 2-means pass after EM.
    pub recenter: bool,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            split: Split::Thirds,
            iterations: 20,
            stop: 1e-8,
            recenter: true,
        }
    }
}

impl EmConfig {
    /// The estimator exactly as staged in the analysis, without the 2-means pass.
    pub fn staged() -> Self {
        EmConfig {
            recenter: false,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Centers {
    Single { mu: f64 },
    Pair { low: f64, high: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CenterEstimate {
    pub centers: Centers,
    pub mu_hat: f64,
    pub theta0: f64,
    pub iterations: usize,
    pub theta_t: f64,
}

impl CenterEstimate {
    /// Both centers, the single center duplicated.
    pub fn pair(&self) -> (f64, f64) {
        match self.centers {
            Centers::Single { mu } => (mu, mu),
            Centers::Pair { low, high } => (low, high),
        }
    }

    pub fn is_single(&self) -> bool {
        matches!(self.centers, Centers::Single { .. })
    }
}

/// Estimates the one or two centers behind `samples`.
pub fn estimate_centers(
    samples: &[f64],
    sigma: f64,
    alphabet: &QuantizedAlphabet,
    config: &EmConfig,
) -> Result<CenterEstimate> {
    let (n1, n2, _) = config.split.sizes(samples.len())?;
    let delta = alphabet.delta;
    let mu_hat = snap_mean(&samples[..n1], alphabet);
    let centered: Vec<f64> = samples[n1..].iter().map(|y| y - mu_hat).collect();
    let theta0 = mom_theta0(&centered[..n2], sigma);
    let single = |mu| CenterEstimate {
        centers: Centers::Single { mu },
        mu_hat,
        theta0,
        iterations: 0,
        theta_t: theta0,
    };
    // with recentering, the single/pair decision and the final centers use every sample
    let pooled = config.recenter.then(|| {
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let spread: Vec<f64> = samples.iter().map(|y| y - mean).collect();
        (mean, mom_theta0(&spread, sigma))
    });
    match pooled {
        Some((mean, theta_all)) if theta_all < delta / 4.0 => {
            return Ok(single(snap_grid(mean, alphabet)))
        }
        None if theta0 < delta / 4.0 => return Ok(single(mu_hat)),
        _ => {}
    }
    let (theta_t, iterations) = if theta0 >= delta / 4.0 {
        em_refine(
            &centered[n2..],
            sigma,
            theta0,
            config.iterations,
            config.stop * delta,
        )
    } else {
        (theta0, 0)
    };
    let half_gap = snap_half_grid(theta_t.abs(), alphabet);
    let (mut low, mut high) = (mu_hat - half_gap, mu_hat + half_gap);
    if let Some((mean, theta_all)) = pooled {
        // each cluster mean goes straight to the grid of achievable values, so the
        // two centers never disagree on parity
        let spread = theta_t.abs().max(theta_all).max(delta / 2.0);
        if let Some((lo, hi)) = two_means(samples, mean - spread, mean + spread) {
            low = snap_grid(lo, alphabet);
            high = snap_grid(hi, alphabet);
        }
    }
    let centers = if low == high {
        Centers::Single { mu: low }
    } else {
        Centers::Pair { low, high }
    };
    Ok(CenterEstimate {
        centers,
        mu_hat,
        theta0,
        iterations,
        theta_t,
    })
}

/// Lloyd iterations for two 1-D clusters. `None` when a cluster empties.
fn two_means(samples: &[f64], mut lo: f64, mut hi: f64) -> Option<(f64, f64)> {
    for _ in 0..100 {
        let cut = (lo + hi) / 2.0;
        let (mut sl, mut nl, mut sh, mut nh) = (0.0, 0usize, 0.0, 0usize);
        for &y in samples {
            if y < cut {
                sl += y;
                nl += 1;
            } else {
                sh += y;
                nh += 1;
            }
        }
        if nl == 0 || nh == 0 {
            return None;
        }
        let (nlo, nhi) = (sl / nl as f64, sh / nh as f64);
        if nlo == lo && nhi == hi {
            break;
        }
        lo = nlo;
        hi = nhi;
    }
    Some((lo, hi))
}
