//! Code-agnostic peeling engine shared by the noiseless and the robust decoders.
//!
//! A code exposes, per bin, a list of consistent groups (measurement sets certified to
//! come from one unknown component) and three primitives on their residuals: a
//! singleton classifier, subtraction of a recovered element, and value comparison.
//! The engine finds singleton balls, links them through strong doubletons, seeds one
//! color per giant component and colors the rest by guess-and-check.

use std::collections::{HashMap, VecDeque};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    Zeroton,
    Singleton { coord: usize, value: Complex64 },
    Multiton,
}

pub trait PeelingCode {
    type Residual: Clone;

    fn bins(&self) -> usize;
    fn bins_of(&self, coord: usize) -> &[u32];
    /// Consistent groups of a bin, before any peeling.
    fn groups(&self, bin: usize) -> &[Self::Residual];
    fn classify(&self, bin: usize, residual: &Self::Residual) -> Verdict;
    fn subtract(&self, residual: &mut Self::Residual, coord: usize, value: Complex64);
    fn same_value(&self, a: Complex64, b: Complex64) -> bool;
}

/// A recovered non-zero element before its color is known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingletonBall {
    pub coord: usize,
    pub value: Complex64,
    pub bin: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SingletonGraph {
    pub balls: Vec<SingletonBall>,
    /// One edge per strong doubleton, stored as `(a, b)` with `a < b`.
    pub edges: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Outcome {
    Success,
    TooFewComponents { found: usize },
    ValueConflict { color: usize, coord: usize },
    /// The same element was colored twice. Components never share a value at a
    /// coordinate, so two seeds came from one component.
    SharedElement { coord: usize },
}

/// Decoder diagnostics. `component_sizes` lists the largest components, descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub singletons: usize,
    pub edges: usize,
    pub component_sizes: Vec<usize>,
    pub peel_steps: usize,
    pub ratio_tests: usize,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Diagnostics {
    pub fn failed(&self) -> bool {
        self.outcome != Outcome::Success
    }
}

/// Number of component sizes kept in [`Diagnostics`].
pub const REPORTED_COMPONENTS: usize = 16;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub ratio_tests: usize,
    pub peel_steps: usize,
}

/// Ball lookup by coordinate and value.
struct BallIndex {
    by_coord: HashMap<usize, Vec<usize>>,
}

impl BallIndex {
    fn new() -> Self {
        BallIndex {
            by_coord: HashMap::new(),
        }
    }

    fn find<C: PeelingCode>(
        &self,
        code: &C,
        balls: &[SingletonBall],
        coord: usize,
        value: Complex64,
    ) -> Option<usize> {
        self.by_coord
            .get(&coord)?
            .iter()
            .copied()
            .find(|&b| code.same_value(balls[b].value, value))
    }

    fn insert(&mut self, coord: usize, idx: usize) {
        self.by_coord.entry(coord).or_default().push(idx);
    }
}

pub struct Engine<'a, C: PeelingCode> {
    code: &'a C,
    offsets: Vec<usize>,
    verdicts: Vec<Verdict>,
    pub counters: Counters,
}

impl<'a, C: PeelingCode> Engine<'a, C> {
    /// Classifies every consistent group once.
    pub fn new(code: &'a C) -> Self {
        let mut offsets = Vec::with_capacity(code.bins() + 1);
        let mut verdicts = Vec::new();
        offsets.push(0);
        for bin in 0..code.bins() {
            for g in code.groups(bin) {
                verdicts.push(code.classify(bin, g));
            }
            offsets.push(verdicts.len());
        }
        let counters = Counters {
            ratio_tests: verdicts.len(),
            peel_steps: 0,
        };
        Engine {
            code,
            offsets,
            verdicts,
            counters,
        }
    }

    fn group_range(&self, bin: usize) -> std::ops::Range<usize> {
        self.offsets[bin]..self.offsets[bin + 1]
    }

    /// Singleton balls of the unpeeled groups, deduplicated by `(coord, value)`.
    pub fn find_singletons(&self) -> Vec<SingletonBall> {
        let mut balls = Vec::new();
        let mut index = BallIndex::new();
        for bin in 0..self.code.bins() {
            for g in self.group_range(bin) {
                if let Verdict::Singleton { coord, value } = self.verdicts[g] {
                    if index.find(self.code, &balls, coord, value).is_none() {
                        index.insert(coord, balls.len());
                        balls.push(SingletonBall { coord, value, bin });
                    }
                }
            }
        }
        balls
    }

    /// Peels every ball from the non-singleton groups of its bins and links it to the
    /// ball the residual exposes, when that ball is already known.
    pub fn build_singleton_graph(&mut self, balls: Vec<SingletonBall>) -> SingletonGraph {
        let mut index = BallIndex::new();
        for (i, b) in balls.iter().enumerate() {
            index.insert(b.coord, i);
        }
        let mut edges = Vec::new();
        for (a, ball) in balls.iter().enumerate() {
            for &bin in self.code.bins_of(ball.coord) {
                let bin = bin as usize;
                for (k, g) in self.group_range(bin).enumerate() {
                    if !matches!(self.verdicts[g], Verdict::Multiton) {
                        continue;
                    }
                    let mut res = self.code.groups(bin)[k].clone();
                    self.code.subtract(&mut res, ball.coord, ball.value);
                    self.counters.ratio_tests += 1;
                    if let Verdict::Singleton { coord, value } = self.code.classify(bin, &res) {
                        if coord == ball.coord {
                            continue;
                        }
                        if let Some(b) = index.find(self.code, &balls, coord, value) {
                            if a < b {
                                edges.push((a, b));
                            }
                        }
                    }
                }
            }
        }
        SingletonGraph { balls, edges }
    }

    /// Colors the graph outward from `seeds` (ball indices per color) by guess-and-check.
    /// Returns the recovered `(coord, value)` map per color.
    pub fn iterative_decode(
        &mut self,
        graph: &SingletonGraph,
        seeds: &[Vec<usize>],
    ) -> Result<Vec<HashMap<usize, Complex64>>, Outcome> {
        let l = seeds.len();
        let mut colored: Vec<HashMap<usize, Complex64>> = vec![HashMap::new(); l];
        let mut queue = VecDeque::new();
        for (c, seed) in seeds.iter().enumerate() {
            for &b in seed {
                let ball = graph.balls[b];
                self.color(&mut colored, &mut queue, c, ball.coord, ball.value)?;
            }
        }
        // residual and peeled coordinates per (group, color)
        let mut residuals: HashMap<usize, (C::Residual, Vec<usize>)> = HashMap::new();
        while let Some((coord, value, c)) = queue.pop_front() {
            for &bin in self.code.bins_of(coord) {
                let bin = bin as usize;
                for (k, g) in self.group_range(bin).enumerate() {
                    let (res, peeled) = residuals
                        .entry(g * l + c)
                        .or_insert_with(|| (self.code.groups(bin)[k].clone(), Vec::new()));
                    if peeled.contains(&coord) {
                        continue;
                    }
                    self.code.subtract(res, coord, value);
                    peeled.push(coord);
                    self.counters.peel_steps += 1;
                    self.counters.ratio_tests += 1;
                    if let Verdict::Singleton { coord: j, value: v } = self.code.classify(bin, res)
                    {
                        // a singleton at a coordinate already peeled here means the
                        // color guess was wrong
                        if peeled.contains(&j) {
                            continue;
                        }
                        self.color(&mut colored, &mut queue, c, j, v)?;
                    }
                }
            }
        }
        Ok(colored)
    }

    fn color(
        &self,
        colored: &mut [HashMap<usize, Complex64>],
        queue: &mut VecDeque<(usize, Complex64, usize)>,
        c: usize,
        coord: usize,
        value: Complex64,
    ) -> Result<(), Outcome> {
        match colored[c].get(&coord) {
            Some(&old) if self.code.same_value(old, value) => Ok(()),
            Some(_) => Err(Outcome::ValueConflict { color: c, coord }),
            None => {
                let shared = colored.iter().enumerate().any(|(other, m)| {
                    other != c && m.get(&coord).is_some_and(|&v| self.code.same_value(v, value))
                });
                if shared {
                    return Err(Outcome::SharedElement { coord });
                }
                colored[c].insert(coord, value);
                queue.push_back((coord, value, c));
                Ok(())
            }
        }
    }
}

/// Connected components of the singleton graph, largest first; equal sizes are
/// ordered by smallest ball coordinate.
pub fn connected_components(graph: &SingletonGraph) -> Vec<Vec<usize>> {
    let mut dsu = Dsu::new(graph.balls.len());
    for &(a, b) in &graph.edges {
        dsu.union(a, b);
    }
    let mut by_root: HashMap<usize, Vec<usize>> = HashMap::new();
    for b in 0..graph.balls.len() {
        by_root.entry(dsu.find(b)).or_default().push(b);
    }
    let mut comps: Vec<(usize, Vec<usize>)> = by_root
        .into_values()
        .map(|members| {
            let min = members.iter().map(|&b| graph.balls[b].coord).min().unwrap_or(0);
            (min, members)
        })
        .collect();
    comps.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.0.cmp(&b.0)));
    comps.into_iter().map(|(_, m)| m).collect()
}

/// The `L` largest components, or the failure outcome when fewer exist. A warning is
/// returned when rank `L` ties with rank `L + 1`.
pub fn giant_components(
    components: &[Vec<usize>],
    l: usize,
) -> Result<(Vec<Vec<usize>>, Option<String>), Outcome> {
    if components.len() < l {
        return Err(Outcome::TooFewComponents {
            found: components.len(),
        });
    }
    let warning = (l > 0 && components.len() > l && components[l - 1].len() == components[l].len())
        .then(|| {
            format!(
                "components at rank {l} and {} tie at size {}",
                l + 1,
                components[l].len()
            )
        });
    Ok((components[..l].to_vec(), warning))
}

struct Dsu {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }
}

/// Per-color recovered entries sorted by coordinate, plus diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct PeelResult {
    pub estimates: Vec<Vec<(usize, Complex64)>>,
    pub diagnostics: Diagnostics,
}

/// Runs the whole pipeline for `l` colors. On failure the estimates are empty.
pub fn run<C: PeelingCode>(code: &C, l: usize) -> PeelResult {
    let mut engine = Engine::new(code);
    let balls = engine.find_singletons();
    let graph = engine.build_singleton_graph(balls);
    let components = connected_components(&graph);
    let mut diagnostics = Diagnostics {
        singletons: graph.balls.len(),
        edges: graph.edges.len(),
        component_sizes: components
            .iter()
            .take(REPORTED_COMPONENTS)
            .map(Vec::len)
            .collect(),
        peel_steps: 0,
        ratio_tests: 0,
        outcome: Outcome::Success,
        warnings: Vec::new(),
    };
    // With a single color every singleton already carries the right label, so
    // all of them seed the peel rather than the largest component alone.
    let seeded = if l == 1 && !graph.balls.is_empty() {
        Ok((vec![(0..graph.balls.len()).collect()], None))
    } else {
        giant_components(&components, l)
    };
    let result = seeded.and_then(|(seeds, warning)| {
        diagnostics.warnings.extend(warning);
        engine.iterative_decode(&graph, &seeds)
    });
    diagnostics.peel_steps = engine.counters.peel_steps;
    diagnostics.ratio_tests = engine.counters.ratio_tests;
    let estimates = match result {
        Ok(colored) => colored
            .into_iter()
            .map(|m| {
                let mut v: Vec<(usize, Complex64)> = m.into_iter().collect();
                v.sort_by_key(|e| e.0);
                v
            })
            .collect(),
        Err(outcome) => {
            diagnostics.outcome = outcome;
            vec![Vec::new(); l]
        }
    };
    PeelResult {
        estimates,
        diagnostics,
    }
}
