//! Closed-form click probabilities for thinned photon-number statistics.
//!
//! With n pairs per pulse, each photon of an arm independently lands on
//! detector k of that arm with probability `q_k` (or is lost). The
//! probability that none of a detector subset S fires is
//!
//! `Π_{k∈S}(1 − d_k) · (1 − Σ_{k∈S∩signal} q_k)ⁿ · (1 − Σ_{k∈S∩idler} q_k)ⁿ`
//!
//! and inclusion-exclusion over subsets gives the probability that every
//! detector of a mask fires.

use super::DetectorSpec;
use crate::spectrum::Arm;

/// Probability, averaged over `pmf`, that every detector in `mask` fires.
pub fn all_click_probability(pmf: &[f64], detectors: &[DetectorSpec], mask: u8) -> f64 {
    let total: f64 = pmf.iter().sum();
    let mut acc = 0.0;
    let mut sub = mask;
    loop {
        let sign = if sub.count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
        acc += sign * none_click_probability(pmf, detectors, sub) / total;
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & mask;
    }
    acc
}

/// Probability, for an unnormalised `pmf`, that no detector in `subset` fires.
fn none_click_probability(pmf: &[f64], detectors: &[DetectorSpec], subset: u8) -> f64 {
    let (mut qs, mut qi, mut dark) = (0.0, 0.0, 1.0);
    for (k, d) in detectors.iter().enumerate() {
        if subset & (1 << k) != 0 {
            match d.arm {
                Arm::Signal => qs += d.routing,
                Arm::Idler => qi += d.routing,
            }
            dark *= 1.0 - d.dark_prob;
        }
    }
    let miss = (1.0 - qs) * (1.0 - qi);
    let mut pow = 1.0;
    let mut sum = 0.0;
    for p in pmf {
        sum += p * pow;
        pow *= miss;
    }
    dark * sum
}

/// Accidental-inclusive `P(s ∧ i) / (P(s) P(i))` for a two-detector layout.
pub fn pair_g2si(pmf: &[f64], detectors: &[DetectorSpec]) -> f64 {
    let ps = all_click_probability(pmf, detectors, 0b01);
    let pi = all_click_probability(pmf, detectors, 0b10);
    all_click_probability(pmf, detectors, 0b11) / (ps * pi)
}

/// `P(1 ∧ 2 ∧ i) P(i) / (P(1 ∧ i) P(2 ∧ i))` for the HBT layout.
pub fn hbt_g2h(pmf: &[f64], detectors: &[DetectorSpec]) -> f64 {
    let t = all_click_probability(pmf, detectors, 0b111);
    let i = all_click_probability(pmf, detectors, 0b100);
    let a = all_click_probability(pmf, detectors, 0b101);
    let b = all_click_probability(pmf, detectors, 0b110);
    t * i / (a * b)
}
