//! Counter-based randomness.
//!
//! Every random draw is a pure function of `(master seed, trial index,
//! step, purpose, counter)`: keys are derived by hashing with the SplitMix64
//! finalizer, and a draw is the finalizer applied to `key ^ counter`. No
//! state is carried between draws, so trials can run on any thread in any
//! order and still reproduce bit for bit.

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// Purpose tags keep the coin, push and pull streams of one step disjoint.
const TAG_TRIAL: u64 = 0x7472_6961_6c00_0001;
const TAG_STEP: u64 = 0x7374_6570_0000_0002;
const TAG_COIN: u64 = 0x636f_696e_0000_0003;
const TAG_PUSH: u64 = 0x7075_7368_0000_0004;
const TAG_PULL: u64 = 0x7075_6c6c_0000_0005;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn derive(key: u64, tag: u64, word: u64) -> u64 {
    mix64(key ^ mix64(tag.wrapping_add(word.wrapping_mul(GOLDEN_GAMMA))))
}

/// Random stream of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialStream {
    key: u64,
}

impl TrialStream {
    pub fn new(seed: u64, trial_index: u64) -> Self {
        TrialStream { key: derive(mix64(seed.wrapping_add(GOLDEN_GAMMA)), TAG_TRIAL, trial_index) }
    }

    /// Stream for synchronous step `step` (1-based by convention).
    pub fn step(&self, step: u64) -> StepStream {
        let key = derive(self.key, TAG_STEP, step);
        StepStream { coin: derive(key, TAG_COIN, 0), push: derive(key, TAG_PUSH, 0), pull: derive(key, TAG_PULL, 0) }
    }
}

/// Draws available within one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepStream {
    coin: u64,
    push: u64,
    pull: u64,
}

impl StepStream {
    /// Uniform in `[0, 1)` for the forcing coin on arc `arc`.
    #[inline]
    pub fn coin(&self, arc: usize) -> f64 {
        unit(mix64(self.coin ^ (arc as u64).wrapping_mul(GOLDEN_GAMMA)))
    }

    /// Neighbor slot in `0..degree` chosen by `vertex` when pushing.
    #[inline]
    pub fn push_choice(&self, vertex: usize, degree: usize) -> usize {
        bounded(mix64(self.push ^ (vertex as u64).wrapping_mul(GOLDEN_GAMMA)), degree)
    }

    /// Neighbor slot in `0..degree` chosen by `vertex` when pulling.
    #[inline]
    pub fn pull_choice(&self, vertex: usize, degree: usize) -> usize {
        bounded(mix64(self.pull ^ (vertex as u64).wrapping_mul(GOLDEN_GAMMA)), degree)
    }
}

#[inline]
fn unit(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

// multiply-shift range reduction
#[inline]
fn bounded(x: u64, range: usize) -> usize {
    ((x as u128 * range as u128) >> 64) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_pure_functions_of_their_keys() {
        let a = TrialStream::new(7, 3).step(2);
        let b = TrialStream::new(7, 3).step(2);
        assert_eq!(a, b);
        assert_eq!(a.coin(11), b.coin(11));
        assert_ne!(TrialStream::new(7, 3), TrialStream::new(7, 4));
        assert_ne!(TrialStream::new(7, 3), TrialStream::new(8, 3));
        assert_ne!(a, TrialStream::new(7, 3).step(3));
    }

    #[test]
    fn coins_look_uniform() {
        let s = TrialStream::new(1, 0).step(1);
        let n = 200_000;
        let mut buckets = [0usize; 10];
        let mut sum = 0.0;
        for arc in 0..n {
            let u = s.coin(arc);
            assert!((0.0..1.0).contains(&u));
            buckets[(u * 10.0) as usize] += 1;
            sum += u;
        }
        assert!((sum / n as f64 - 0.5).abs() < 0.005);
        // chi-square with 9 dof; 27.9 is the 0.999 quantile
        let expected = n as f64 / 10.0;
        let chi2: f64 = buckets.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 27.9, "chi2 = {chi2}");
    }

    #[test]
    fn choices_stay_in_range_and_cover() {
        let s = TrialStream::new(99, 5).step(1);
        let mut seen = [false; 7];
        for v in 0..1000 {
            let c = s.push_choice(v, 7);
            seen[c] = true;
            assert!(s.pull_choice(v, 7) < 7);
        }
        assert!(seen.iter().all(|&x| x));
    }
}
