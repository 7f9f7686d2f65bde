//! Measurement generation: every scalar measurement independently picks a component
//! with probability `q_ℓ`, evaluates the designed query against it and adds Gaussian
//! noise when `σ > 0`.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::design::NoiselessQueryPlan;
use crate::error::{Error, Result};
use crate::model::MixtureModel;
use crate::rng_from_seed;
use crate::robust::RobustQueryPlan;

/// Query roles inside a noiseless bin, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    TypeOne,
    TypeTwo,
    Verification,
}

/// Noiseless-plan measurements. Per bin the layout is `R` type-I values, `R` type-II
/// values, then `V` verification values. `labels` holds the hidden component of every
/// measurement and exists for evaluation only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet {
    pub n: usize,
    pub bins: usize,
    pub r: usize,
    pub v: usize,
    pub values: Vec<Complex64>,
    #[serde(default)]
    pub labels: Vec<u8>,
}

impl MeasurementSet {
    fn stride(&self) -> usize {
        2 * self.r + self.v
    }

    pub fn bin(&self, i: usize) -> BinMeasurements<'_> {
        let s = self.stride();
        let vals = &self.values[i * s..(i + 1) * s];
        BinMeasurements {
            type_one: &vals[..self.r],
            type_two: &vals[self.r..2 * self.r],
            verification: &vals[2 * self.r..],
        }
    }

    /// Hidden label of measurement `rep` of `role` in bin `i`.
    pub fn label(&self, i: usize, role: Role, rep: usize) -> Option<u8> {
        let off = match role {
            Role::TypeOne => 0,
            Role::TypeTwo => self.r,
            Role::Verification => 2 * self.r,
        };
        self.labels.get(i * self.stride() + off + rep).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Measurement set without the hidden labels, as a decoder would receive it.
    pub fn without_labels(&self) -> Self {
        MeasurementSet {
            labels: Vec::new(),
            ..self.clone()
        }
    }

    /// One CSV row per measurement: `bin,role,rep,label,re,im`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin,role,rep,label,re,im\n");
        for i in 0..self.bins {
            for (role, name, reps) in [
                (Role::TypeOne, "type1", self.r),
                (Role::TypeTwo, "type2", self.r),
                (Role::Verification, "verify", self.v),
            ] {
                let b = self.bin(i);
                let vals = match role {
                    Role::TypeOne => b.type_one,
                    Role::TypeTwo => b.type_two,
                    Role::Verification => b.verification,
                };
                for (rep, y) in vals.iter().enumerate().take(reps) {
                    let label = self
                        .label(i, role, rep)
                        .map_or(String::new(), |l| l.to_string());
                    let _ = writeln!(out, "{i},{name},{rep},{label},{:e},{:e}", y.re, y.im);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BinMeasurements<'a> {
    pub type_one: &'a [Complex64],
    pub type_two: &'a [Complex64],
    pub verification: &'a [Complex64],
}

/// Noise-free inner products of one component with every bin's three query vectors.
pub fn bin_inner_products(
    plan: &NoiselessQueryPlan,
    vector: &crate::model::SparseVector,
) -> Vec<[Complex64; 3]> {
    let zero = Complex64::new(0.0, 0.0);
    let mut ips = vec![[zero; 3]; plan.bins()];
    let rv = &plan.vectors;
    for &(j, beta) in vector.entries() {
        let contrib = [rv.r1[j] * beta, rv.r2[j] * beta, rv.r3[j] * beta];
        for &b in plan.design.bins_of(j) {
            let acc = &mut ips[b as usize];
            for k in 0..3 {
                acc[k] += contrib[k];
            }
        }
    }
    ips
}

fn check_model(n: usize, model: &MixtureModel) -> Result<()> {
    if model.n != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: model.n,
        });
    }
    if model.l() > u8::MAX as usize {
        return Err(Error::InvalidParameter("at most 255 components".into()));
    }
    Ok(())
}

fn label_sampler(model: &MixtureModel) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(&model.weights).map_err(|e| Error::InvalidParameter(e.to_string()))
}

/// Samples every measurement of a noiseless plan. With `σ > 0` each of the real and
/// imaginary parts receives independent `N(0, σ²)` noise.
pub fn sample_measurements(
    plan: &NoiselessQueryPlan,
    model: &MixtureModel,
    seed: u64,
) -> Result<MeasurementSet> {
    check_model(plan.n(), model)?;
    let ips: Vec<Vec<[Complex64; 3]>> = model
        .vectors
        .iter()
        .map(|v| bin_inner_products(plan, v))
        .collect();
    let labels_dist = label_sampler(model)?;
    let noise = (model.sigma > 0.0)
        .then(|| Normal::new(0.0, model.sigma).expect("sigma is finite and positive"));
    let mut rng = rng_from_seed(seed);
    let (r, v) = (plan.r, plan.v);
    let stride = 2 * r + v;
    let total = stride * plan.bins();
    let mut values = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    // the row index is picked per draw by the label, so there is no iterator to zip
    #[allow(clippy::needless_range_loop)]
    for i in 0..plan.bins() {
        for slot in 0..stride {
            let role = if slot < r {
                0
            } else if slot < 2 * r {
                1
            } else {
                2
            };
            let l = labels_dist.sample(&mut rng);
            let mut y = ips[l][i][role];
            if let Some(noise) = &noise {
                y += Complex64::new(noise.sample(&mut rng), noise.sample(&mut rng));
            }
            values.push(y);
            labels.push(l as u8);
        }
    }
    Ok(MeasurementSet {
        n: plan.n(),
        bins: plan.bins(),
        r,
        v,
        values,
        labels,
    })
}

/// Robust-plan measurements: per bin, `P` query rows with `N` real repetitions each,
/// stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustMeasurementSet {
    pub bins: usize,
    pub rows: usize,
    pub repetitions: usize,
    pub values: Vec<f64>,
    #[serde(default)]
    pub labels: Vec<u8>,
}

impl RobustMeasurementSet {
    pub fn samples(&self, bin: usize, row: usize) -> &[f64] {
        let start = (bin * self.rows + row) * self.repetitions;
        &self.values[start..start + self.repetitions]
    }

    pub fn sample_labels(&self, bin: usize, row: usize) -> Option<&[u8]> {
        let start = (bin * self.rows + row) * self.repetitions;
        self.labels.get(start..start + self.repetitions)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Samples a robust plan against a real-valued model.
pub fn sample_robust_measurements(
    plan: &RobustQueryPlan,
    model: &MixtureModel,
    seed: u64,
) -> Result<RobustMeasurementSet> {
    check_model(plan.n(), model)?;
    if model
        .vectors
        .iter()
        .any(|v| v.entries().iter().any(|&(_, x)| x.im != 0.0))
    {
        return Err(Error::InvalidParameter(
            "robust plans need a real-valued model".into(),
        ));
    }
    let rows = plan.rows();
    let per_component: Vec<Vec<f64>> = model
        .vectors
        .iter()
        .map(|v| plan.bin_inner_products(v))
        .collect();
    let labels_dist = label_sampler(model)?;
    let noise = (model.sigma > 0.0)
        .then(|| Normal::new(0.0, model.sigma).expect("sigma is finite and positive"));
    let mut rng = rng_from_seed(seed);
    let reps = plan.repetitions;
    let total = plan.bins() * rows * reps;
    let mut values = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    #[allow(clippy::needless_range_loop)]
    for cell in 0..plan.bins() * rows {
        for _ in 0..reps {
            let l = labels_dist.sample(&mut rng);
            let mut y = per_component[l][cell];
            if let Some(noise) = &noise {
                y += noise.sample(&mut rng);
            }
            values.push(y);
            labels.push(l as u8);
        }
    }
    Ok(RobustMeasurementSet {
        bins: plan.bins(),
        rows,
        repetitions: reps,
        values,
        labels,
    })
}

/// Draws a label index with the given weights; exposed for the label-frequency test.
pub fn draw_label<R: Rng>(dist: &WeightedIndex<f64>, rng: &mut R) -> usize {
    dist.sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{assemble_plan, build_bipartite, build_ratio_vectors, PlanSpec};
    use crate::model::{generate_mixture, MixtureSpec, SparseVector, ValueSource};

    fn plan(n: usize, m: usize, d: usize, r: usize, v: usize, seed: u64) -> NoiselessQueryPlan {
        PlanSpec { n, m, d, r, v, seed }.build().unwrap()
    }

    fn model(n: usize, l: usize, k: usize, seed: u64) -> MixtureModel {
        let spec = MixtureSpec::balanced(n, l, k, ValueSource::ContinuousComplex, 0.0);
        generate_mixture(&spec, seed).unwrap()
    }

    #[test]
    fn zero_model_gives_zero_measurements() {
        let p = plan(50, 10, 3, 2, 2, 1);
        let zero = MixtureModel::new(
            vec![SparseVector::zeros(50), SparseVector::zeros(50)],
            vec![0.5, 0.5],
            0.0,
            None,
        )
        .unwrap();
        let ms = sample_measurements(&p, &zero, 3).unwrap();
        assert_eq!(ms.len(), p.measurements());
        assert!(ms.values.iter().all(|y| *y == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn single_component_always_passes_summation() {
        let p = plan(200, 40, 3, 3, 3, 2);
        let ms = sample_measurements(&p, &model(200, 1, 20, 4), 5).unwrap();
        for i in 0..p.bins() {
            let b = ms.bin(i);
            for &y1 in b.type_one {
                for &y2 in b.type_two {
                    for &y3 in b.verification {
                        assert!((y3 - (y1 + y2)).norm() <= 1e-12 * y3.norm().max(1.0));
                    }
                }
            }
        }
    }

    #[test]
    fn sparse_inner_products_match_dense_queries() {
        let design = build_bipartite(60, 12, 3, 8).unwrap();
        let p = assemble_plan(design, build_ratio_vectors(60, 9), 2, 2).unwrap();
        let m = model(60, 2, 16, 10);
        let ms = sample_measurements(&p, &m, 11).unwrap();
        let dense: Vec<Vec<Complex64>> = m.vectors.iter().map(SparseVector::to_dense).collect();
        for i in 0..p.bins() {
            let mask: Vec<bool> = (0..60).map(|j| p.design.contains(i, j)).collect();
            let query = |r: &[Complex64], l: usize| -> Complex64 {
                (0..60)
                    .filter(|&j| mask[j])
                    .map(|j| r[j] * dense[l][j])
                    .sum()
            };
            let b = ms.bin(i);
            for (rep, &y) in b.type_one.iter().enumerate() {
                let l = ms.label(i, Role::TypeOne, rep).unwrap() as usize;
                let want = query(&p.vectors.r1, l);
                assert!((y - want).norm() <= 1e-12 * want.norm().max(1.0));
            }
            for (rep, &y) in b.verification.iter().enumerate() {
                let l = ms.label(i, Role::Verification, rep).unwrap() as usize;
                let want = query(&p.vectors.r3, l);
                assert!((y - want).norm() <= 1e-12 * want.norm().max(1.0));
            }
        }
    }

    #[test]
    fn label_frequencies_follow_the_weights() {
        let p = plan(30, 2000, 2, 3, 3, 1);
        let v = |s| generate_mixture(&MixtureSpec::balanced(30, 3, 9, ValueSource::ContinuousComplex, 0.0), s)
            .unwrap()
            .vectors;
        let m = MixtureModel::new(v(3), vec![0.2, 0.3, 0.5], 0.0, None).unwrap();
        let ms = sample_measurements(&p, &m, 17).unwrap();
        let mut counts = [0f64; 3];
        for &l in &ms.labels {
            counts[l as usize] += 1.0;
        }
        let total = ms.labels.len() as f64;
        // chi-square with 2 degrees of freedom; 13.8 is the 0.999 quantile
        let chi2: f64 = counts
            .iter()
            .zip(&m.weights)
            .map(|(&c, &q)| (c - q * total).powi(2) / (q * total))
            .sum();
        assert!(chi2 < 13.8, "chi2 = {chi2}");
    }

    #[test]
    fn sampling_is_deterministic_and_checks_dimensions() {
        let p = plan(40, 8, 2, 1, 1, 1);
        let m = model(40, 2, 6, 2);
        assert_eq!(sample_measurements(&p, &m, 1).unwrap(), sample_measurements(&p, &m, 1).unwrap());
        let wrong = model(41, 2, 6, 2);
        assert!(matches!(sample_measurements(&p, &wrong, 1), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn csv_has_one_row_per_measurement() {
        let p = plan(40, 4, 2, 2, 1, 1);
        let ms = sample_measurements(&p, &model(40, 2, 6, 2), 3).unwrap();
        let csv = ms.to_csv();
        assert_eq!(csv.lines().count(), 1 + ms.len());
        let back: MeasurementSet = serde_json::from_str(&serde_json::to_string(&ms).unwrap()).unwrap();
        assert_eq!(back, ms);
    }
}
