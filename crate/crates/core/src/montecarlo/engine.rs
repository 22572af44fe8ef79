//! Block-parallel pulse simulation.
//!
//! Pulses are grouped into fixed blocks of [`BLOCK_PULSES`]. Every
//! (point, block, channel) triple owns a ChaCha8 stream:
//!
//! ```text
//! rng = ChaCha8Rng::seed_from_u64(seed); rng.set_stream(point << 40 | block << 8 | channel)
//! ```
//!
//! so results do not depend on how blocks are distributed over threads.
//! Inside a block only pulses carrying at least one event are visited:
//! generators jump between them with geometric gaps. Events are
//! `(pulse offset, detector mask)` pairs, OR-merged per pulse and
//! histogrammed by click pattern.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::{Error, Result};

pub const BLOCK_PULSES: u64 = 1 << 20;
/// Dark counts of detector k use channel `DARK_CHANNEL_BASE + k`.
pub const DARK_CHANNEL_BASE: u8 = 0x80;
pub const MAX_DETECTORS: usize = 4;

/// Number of pulses per click pattern; index bit k set means detector k clicked.
pub type MaskHistogram = [u64; 1 << MAX_DETECTORS];

#[derive(Debug, Clone, Copy)]
pub struct BlockStreams {
    seed: u64,
    point: u64,
    block: u64,
}

impl BlockStreams {
    pub fn rng(&self, channel: u8) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream((self.point << 40) | (self.block << 8) | channel as u64);
        rng
    }
}

/// Visit the pulses of a block on which a Bernoulli(p) event fires.
pub fn for_each_hit(rng: &mut ChaCha8Rng, p: f64, len: u64, mut f: impl FnMut(&mut ChaCha8Rng, u64)) {
    if !(p > 0.0) {
        return;
    }
    if p >= 1.0 {
        (0..len).for_each(|pos| f(rng, pos));
        return;
    }
    // inverse-transform geometric gaps: ⌊ln U / ln(1 − p)⌋
    let inv_log_q = 1.0 / (-p).ln_1p();
    let gap = |rng: &mut ChaCha8Rng| ((1.0 - rng.random::<f64>()).ln() * inv_log_q) as u64;
    let mut pos = gap(rng);
    while pos < len {
        f(rng, pos);
        pos = pos.saturating_add(1).saturating_add(gap(rng));
    }
}

/// Pair-number sampler restricted to pulses with n ≥ 1.
#[derive(Debug, Clone)]
pub struct PairSampler {
    /// Probability that a pulse carries at least one pair.
    pub p_any: f64,
    index: Option<WeightedIndex<f64>>,
}

impl PairSampler {
    /// `pmf[n]` is the probability of n pairs; it is renormalised.
    pub fn new(pmf: &[f64]) -> Result<Self> {
        if pmf.is_empty() || pmf.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidParameter("pair distribution needs finite non-negative entries".into()));
        }
        let total: f64 = pmf.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidParameter("pair distribution sums to zero".into()));
        }
        let excited: f64 = pmf[1..].iter().sum();
        let index = if excited > 0.0 {
            Some(WeightedIndex::new(&pmf[1..]).map_err(|e| Error::InvalidParameter(e.to_string()))?)
        } else {
            None
        };
        Ok(Self {
            p_any: excited / total,
            index,
        })
    }

    /// Call `f(rng, pulse, n)` for every pulse of the block with n ≥ 1 pairs.
    pub fn for_each_pulse(&self, rng: &mut ChaCha8Rng, len: u64, mut f: impl FnMut(&mut ChaCha8Rng, u64, u64)) {
        let Some(index) = &self.index else { return };
        for_each_hit(rng, self.p_any, len, |rng, pos| {
            let n = 1 + index.sample(rng) as u64;
            f(rng, pos, n);
        });
    }
}

/// Run `n_pulses` pulses. `generate(streams, len, events)` appends the
/// source-driven events of one block; dark counts are added here.
pub fn simulate<G>(n_pulses: u64, seed: u64, point: u64, dark_prob: &[f64], generate: G) -> MaskHistogram
where
    G: Fn(&BlockStreams, u64, &mut Vec<(u64, u8)>) + Sync,
{
    assert!(dark_prob.len() <= MAX_DETECTORS);
    assert!(point < 1 << 24);
    let n_blocks = n_pulses.div_ceil(BLOCK_PULSES);
    (0..n_blocks)
        .into_par_iter()
        .map(|block| {
            let streams = BlockStreams { seed, point, block };
            let len = BLOCK_PULSES.min(n_pulses - block * BLOCK_PULSES);
            let mut events = Vec::new();
            generate(&streams, len, &mut events);
            for (k, &d) in dark_prob.iter().enumerate() {
                let mut rng = streams.rng(DARK_CHANNEL_BASE + k as u8);
                for_each_hit(&mut rng, d, len, |_, pos| events.push((pos, 1 << k)));
            }
            histogram(len, events)
        })
        .reduce(|| [0; 1 << MAX_DETECTORS], add)
}

fn histogram(len: u64, mut events: Vec<(u64, u8)>) -> MaskHistogram {
    let mut h = [0u64; 1 << MAX_DETECTORS];
    events.sort_unstable_by_key(|e| e.0);
    let mut k = 0;
    let mut distinct = 0;
    while k < events.len() {
        let pos = events[k].0;
        let mut mask = 0u8;
        while k < events.len() && events[k].0 == pos {
            mask |= events[k].1;
            k += 1;
        }
        h[mask as usize] += 1;
        distinct += 1;
    }
    h[0] += len - distinct;
    h
}

fn add(mut a: MaskHistogram, b: MaskHistogram) -> MaskHistogram {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_merges_same_pulse() {
        let h = histogram(10, vec![(3, 1), (1, 2), (3, 2), (7, 1)]);
        assert_eq!(h[0], 7);
        assert_eq!(h[1], 1);
        assert_eq!(h[2], 1);
        assert_eq!(h[3], 1);
    }

    #[test]
    fn streams_are_distinct_and_stable() {
        let a = BlockStreams { seed: 7, point: 0, block: 0 };
        let b = BlockStreams { seed: 7, point: 0, block: 1 };
        let (mut r1, mut r2, mut r3) = (a.rng(0), a.rng(1), b.rng(0));
        let x: u64 = r1.random();
        assert_ne!(x, r2.random::<u64>());
        assert_ne!(x, r3.random::<u64>());
        assert_eq!(x, a.rng(0).random::<u64>());
    }

    #[test]
    fn bernoulli_hits_match_rate() {
        let mut rng = BlockStreams { seed: 1, point: 0, block: 0 }.rng(0);
        let mut hits = 0u64;
        for_each_hit(&mut rng, 0.01, 1_000_000, |_, _| hits += 1);
        // binomial σ ≈ 99.5
        assert!((hits as f64 - 10_000.0).abs() < 500.0, "{hits}");
        let mut all = 0;
        for_each_hit(&mut rng, 1.0, 1000, |_, _| all += 1);
        assert_eq!(all, 1000);
    }

    #[test]
    fn partial_last_block() {
        let h = simulate(BLOCK_PULSES + 17, 3, 0, &[1.0], |_, _, _| {});
        assert_eq!(h[1], BLOCK_PULSES + 17);
        assert_eq!(h.iter().sum::<u64>(), BLOCK_PULSES + 17);
    }

    #[test]
    fn sampler_rejects_bad_pmf() {
        assert!(PairSampler::new(&[]).is_err());
        assert!(PairSampler::new(&[0.0, 0.0]).is_err());
        assert!(PairSampler::new(&[0.5, -0.1]).is_err());
        assert_eq!(PairSampler::new(&[1.0]).unwrap().p_any, 0.0);
        assert_eq!(PairSampler::new(&[0.0, 1.0]).unwrap().p_any, 1.0);
    }
}
