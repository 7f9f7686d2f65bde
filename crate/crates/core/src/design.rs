//! Noiseless query design: a d-left-regular bipartite graph between coordinates and
//! bins, plus the ratio-test vectors shared by every bin.
//!
//! Query vectors are never materialized densely. The measurement of coordinate set
//! `h` under role `k` is `Σ_{j ∈ h} r_k[j] β_j`, i.e. the rows of the measurement
//! matrix are `r_k diag(h)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{mix, rng_from_seed};

/// Coordinate-to-bin association. Each coordinate has exactly `d` distinct bins.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteDesign {
    n: usize,
    m: usize,
    d: usize,
    /// `adjacency[j*d..(j+1)*d]` are the bins of coordinate `j`, in draw order.
    adjacency: Vec<u32>,
    bin_offsets: Vec<usize>,
    /// Coordinates of every bin, ascending within a bin.
    bin_coords: Vec<u32>,
}

impl BipartiteDesign {
    pub fn from_adjacency(n: usize, m: usize, d: usize, adjacency: Vec<u32>) -> Result<Self> {
        if d == 0 || m == 0 {
            return Err(Error::InvalidParameter("d and M must be positive".into()));
        }
        if d > m {
            return Err(Error::DegreeTooLarge { d, m });
        }
        if adjacency.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                got: adjacency.len(),
            });
        }
        let mut counts = vec![0usize; m + 1];
        for (j, bins) in adjacency.chunks(d).enumerate() {
            for (k, &b) in bins.iter().enumerate() {
                if b as usize >= m || bins[..k].contains(&b) {
                    return Err(Error::InvalidParameter(format!(
                        "coordinate {j} has an invalid or repeated bin {b}"
                    )));
                }
                counts[b as usize + 1] += 1;
            }
        }
        for i in 0..m {
            counts[i + 1] += counts[i];
        }
        let bin_offsets = counts.clone();
        let mut fill = counts;
        let mut bin_coords = vec![0u32; n * d];
        for (j, bins) in adjacency.chunks(d).enumerate() {
            for &b in bins {
                bin_coords[fill[b as usize]] = j as u32;
                fill[b as usize] += 1;
            }
        }
        Ok(BipartiteDesign {
            n,
            m,
            d,
            adjacency,
            bin_offsets,
            bin_coords,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bins(&self) -> usize {
        self.m
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn bins_of(&self, coord: usize) -> &[u32] {
        &self.adjacency[coord * self.d..(coord + 1) * self.d]
    }

    pub fn coords_of(&self, bin: usize) -> &[u32] {
        &self.bin_coords[self.bin_offsets[bin]..self.bin_offsets[bin + 1]]
    }

    pub fn contains(&self, bin: usize, coord: usize) -> bool {
        coord < self.n && self.bins_of(coord).contains(&(bin as u32))
    }
}

/// Draws a design: each coordinate picks `d` bins uniformly without replacement.
pub fn build_bipartite(n: usize, m: usize, d: usize, seed: u64) -> Result<BipartiteDesign> {
    if d > m {
        return Err(Error::DegreeTooLarge { d, m });
    }
    if d == 0 {
        return Err(Error::InvalidParameter("d must be positive".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut adjacency = Vec::with_capacity(n * d);
    for _ in 0..n {
        adjacency.extend(index::sample(&mut rng, m, d).iter().map(|b| b as u32));
    }
    BipartiteDesign::from_adjacency(n, m, d, adjacency)
}

/// Ratio-test vectors: `r1` uniform on the unit circle, `r2[j] = r1[j] W^j` with
/// `W = e^{i2π/n}`, and `r3 = r1 + r2`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioVectors {
    pub r1: Vec<Complex64>,
    pub r2: Vec<Complex64>,
    pub r3: Vec<Complex64>,
}

impl RatioVectors {
    pub fn n(&self) -> usize {
        self.r1.len()
    }
}

/// `W^j` computed from the integer exponent so that phases do not drift with `n`.
pub fn fourier_phase(j: usize, n: usize) -> Complex64 {
    let k = (j % n) as f64;
    Complex64::from_polar(1.0, 2.0 * PI * k / n as f64)
}

pub fn build_ratio_vectors(n: usize, seed: u64) -> RatioVectors {
    let mut rng = rng_from_seed(seed);
    let r1: Vec<Complex64> = (0..n)
        .map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI)))
        .collect();
    let r2: Vec<Complex64> = r1
        .iter()
        .enumerate()
        .map(|(j, &r)| r * fourier_phase(j, n))
        .collect();
    let r3 = r1.iter().zip(&r2).map(|(a, b)| a + b).collect();
    RatioVectors { r1, r2, r3 }
}

/// The serialized form of a noiseless plan; everything else is regenerated from `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanSpec {
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub d: usize,
    #[serde(rename = "R")]
    pub r: usize,
    #[serde(rename = "V")]
    pub v: usize,
    pub seed: u64,
}

impl PlanSpec {
    pub fn build(&self) -> Result<NoiselessQueryPlan> {
        let design = build_bipartite(self.n, self.m, self.d, mix(self.seed, 0))?;
        let vectors = build_ratio_vectors(self.n, mix(self.seed, 1));
        let mut plan = assemble_plan(design, vectors, self.r, self.v)?;
        plan.seed = Some(self.seed);
        Ok(plan)
    }
}

/// Number of bins for a real multiple `c` of the sparsity: `round(c·K)`, at least 1.
pub fn bins_for(c: f64, k: usize) -> usize {
    ((c * k as f64).round() as usize).max(1)
}

/// Bipartite design, ratio vectors and repetition schedule. Bin `i` is queried `R`
/// times with `r1 diag(h_i)`, `R` times with `r2 diag(h_i)` and `V` times with
/// `r3 diag(h_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiselessQueryPlan {
    pub design: BipartiteDesign,
    pub vectors: RatioVectors,
    pub r: usize,
    pub v: usize,
    pub seed: Option<u64>,
}

impl NoiselessQueryPlan {
    pub fn n(&self) -> usize {
        self.design.n()
    }

    pub fn bins(&self) -> usize {
        self.design.bins()
    }

    /// Total measurement count `(2R + V)·M`.
    pub fn measurements(&self) -> usize {
        (2 * self.r + self.v) * self.design.bins()
    }

    pub fn spec(&self) -> Option<PlanSpec> {
        self.seed.map(|seed| PlanSpec {
            n: self.n(),
            m: self.bins(),
            d: self.design.degree(),
            r: self.r,
            v: self.v,
            seed,
        })
    }
}

pub fn assemble_plan(
    design: BipartiteDesign,
    vectors: RatioVectors,
    r: usize,
    v: usize,
) -> Result<NoiselessQueryPlan> {
    if r == 0 || v == 0 {
        return Err(Error::InvalidParameter("R and V must be at least 1".into()));
    }
    if vectors.n() != design.n() {
        return Err(Error::DimensionMismatch {
            expected: design.n(),
            got: vectors.n(),
        });
    }
    Ok(NoiselessQueryPlan {
        design,
        vectors,
        r,
        v,
        seed: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_design_realizes_the_worked_biadjacency() {
        // columns of the 3x5 example biadjacency, as (bin, bin) per coordinate
        let adjacency = vec![1, 2, 0, 2, 0, 1, 1, 2, 0, 1];
        let design = BipartiteDesign::from_adjacency(5, 3, 2, adjacency).unwrap();
        let rows: Vec<Vec<u32>> = (0..3).map(|i| design.coords_of(i).to_vec()).collect();
        assert_eq!(rows, vec![vec![1, 2, 4], vec![0, 2, 3, 4], vec![0, 1, 3]]);
        assert!((0..5).all(|j| design.bins_of(j).len() == 2));
        // random draws have the same column weights
        let random = build_bipartite(5, 3, 2, 11).unwrap();
        let total: usize = (0..3).map(|i| random.coords_of(i).len()).sum();
        assert_eq!(total, 10);
    }

    #[test]
    fn single_edge_design() {
        let design = build_bipartite(1, 1, 1, 0).unwrap();
        assert_eq!(design.bins_of(0), &[0]);
        assert_eq!(design.coords_of(0), &[0]);
    }

    #[test]
    fn large_design_is_left_regular() {
        let m = bins_for(3.71, 1000);
        assert_eq!(m, 3710);
        let design = build_bipartite(10_000, m, 15, 5).unwrap();
        for j in 0..10_000 {
            let bins = design.bins_of(j);
            assert_eq!(bins.len(), 15);
            let mut sorted = bins.to_vec();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), 15);
            for &b in bins {
                assert!(design.coords_of(b as usize).contains(&(j as u32)));
            }
        }
        let edges: usize = (0..m).map(|i| design.coords_of(i).len()).sum();
        let mean = edges as f64 / m as f64;
        assert!((mean - 10_000.0 * 15.0 / m as f64).abs() < 1e-9);
    }

    #[test]
    fn degree_larger_than_bins_is_rejected() {
        assert_eq!(build_bipartite(4, 2, 3, 0), Err(Error::DegreeTooLarge { d: 3, m: 2 }));
    }

    #[test]
    fn ratio_vectors_encode_the_coordinate_in_the_phase() {
        let rv = build_ratio_vectors(8, 3);
        // third coordinate (index 2): relative phase 2·2π/8
        let ratio = rv.r2[2] / rv.r1[2];
        assert!((ratio.arg() - 2.0 * 2.0 * PI / 8.0).abs() < 1e-12);
        assert_eq!(rv.r2[0], rv.r1[0]);
        for n in [1usize, 7, 1000, 65_536] {
            let rv = build_ratio_vectors(n, 9);
            let worst = rv.r1.iter().map(|r| (r.norm() - 1.0).abs()).fold(0.0, f64::max);
            assert!(worst < 1e-12);
            for j in 0..n {
                assert_eq!(rv.r3[j], rv.r1[j] + rv.r2[j]);
            }
        }
    }

    #[test]
    fn measurement_counts_follow_the_schedule() {
        let design = build_bipartite(10, 1, 1, 0).unwrap();
        let plan = assemble_plan(design, build_ratio_vectors(10, 0), 1, 1).unwrap();
        assert_eq!(plan.measurements(), 3);
        let k = 10_000;
        for (c, r, v, expected) in [(3.71, 3, 3, 33.39), (2.52, 5, 5, 37.80)] {
            let m = bins_for(c, k);
            let design = build_bipartite(20, m, 2, 0).unwrap();
            let plan = assemble_plan(design, build_ratio_vectors(20, 0), r, v).unwrap();
            assert!((plan.measurements() as f64 / k as f64 - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn plan_spec_regenerates_identically() {
        let spec = PlanSpec { n: 100, m: 20, d: 3, r: 2, v: 2, seed: 77 };
        let a = spec.build().unwrap();
        assert_eq!(a, spec.build().unwrap());
        assert_eq!(a.spec(), Some(spec));
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"M\":20"));
        assert_eq!(serde_json::from_str::<PlanSpec>(&json).unwrap(), spec);
    }
}
