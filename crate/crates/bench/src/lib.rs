//! Fixtures shared by the benchmarks: fully sampled instances ready to decode.

use mixcolor_core::design::NoiselessQueryPlan;
use mixcolor_core::harness::{NoiselessInstance, RobustInstance};
use mixcolor_core::robust::{P2Rule, RobustQueryPlan};
use mixcolor_core::{generate_mixture, mix, MixtureSpec, QuantizedAlphabet, ValueSource};
use mixcolor_core::simulate::{
    sample_measurements, sample_robust_measurements, MeasurementSet, RobustMeasurementSet,
};

/// Reference noiseless parameters for `L = 2` at the given size.
pub fn noiseless_instance(n: usize, k: usize) -> NoiselessInstance {
    NoiselessInstance { l: 2, n, k, d: 15, r: 3, v: 3, c: 3.71 }
}

pub fn noiseless_fixture(n: usize, k: usize, seed: u64) -> (NoiselessQueryPlan, MeasurementSet) {
    let inst = noiseless_instance(n, k);
    let plan = inst.plan_spec(seed).build().expect("valid plan");
    let model = inst.model(seed).expect("valid model");
    let ms = sample_measurements(&plan, &model, mix(seed, 2))
        .expect("shapes match")
        .without_labels();
    (plan, ms)
}

/// The robust timing regime: `d = 15`, `M = 3K`, `N = log₂ n`.
pub fn robust_instance(n: usize, k: usize) -> RobustInstance {
    RobustInstance {
        n,
        k,
        d: 15,
        c: 3.0,
        repetitions: n.ilog2() as usize,
        p2: P2Rule::LogFactor(0.3),
        delta: 1.0,
        b: 5,
        sigma: 0.2,
        perturbation: None,
    }
}

pub fn robust_fixture(n: usize, k: usize, seed: u64) -> (RobustQueryPlan, RobustMeasurementSet) {
    let inst = robust_instance(n, k);
    let plan = inst.plan_spec(seed).build().expect("valid plan");
    let alphabet = QuantizedAlphabet::new(inst.delta, inst.b).expect("valid alphabet");
    let spec = MixtureSpec::balanced(n, 2, k, ValueSource::Quantized { alphabet }, inst.sigma);
    let model = generate_mixture(&spec, mix(seed, 1)).expect("valid model");
    let ms = sample_robust_measurements(&plan, &model, mix(seed, 2)).expect("shapes match");
    (plan, ms)
}
