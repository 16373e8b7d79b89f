use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{invalid, Result};
use crate::lattice::{Configuration, GridShape};

/// Identifies the uniform construction; recorded with every estimate.
pub const RNG_ID: &str = "chacha8-stream=trial-word=2*site-u53-v1";

const SCALE: f64 = 1.0 / (1u64 << 53) as f64;

/// Per-site uniforms in `[0, 1)` for one `(master_seed, trial_index)`.
/// Site `i` takes the 64-bit word at position `2i` of ChaCha8 keyed by the
/// seed with stream `trial_index`, so any site can be regenerated alone.
#[derive(Clone, Debug)]
pub struct UniformField {
    rng: ChaCha8Rng,
}

fn key(master_seed: u64) -> [u8; 32] {
    let mut k = [0u8; 32];
    k[..8].copy_from_slice(&master_seed.to_le_bytes());
    k
}

impl UniformField {
    pub fn new(master_seed: u64, trial_index: u64) -> Self {
        let mut rng = ChaCha8Rng::from_seed(key(master_seed));
        rng.set_stream(trial_index);
        UniformField { rng }
    }

    /// The raw 53-bit integer behind the uniform of `site`.
    pub fn bits_at(&mut self, site: usize) -> u64 {
        self.rng.set_word_pos(2 * site as u128);
        self.rng.next_u64() >> 11
    }

    pub fn uniform_at(&mut self, site: usize) -> f64 {
        self.bits_at(site) as f64 * SCALE
    }

    /// Uniforms of sites `0..out.len()`.
    pub fn fill(&mut self, out: &mut [f64]) {
        self.rng.set_word_pos(0);
        for x in out.iter_mut() {
            *x = (self.rng.next_u64() >> 11) as f64 * SCALE;
        }
    }

    fn fill_bits(&mut self, count: usize, threshold: u64) -> Vec<u64> {
        self.rng.set_word_pos(0);
        let mut words = vec![0u64; count.div_ceil(64)];
        for (w, word) in words.iter_mut().enumerate() {
            let len = (count - 64 * w).min(64);
            let mut acc = 0u64;
            for b in 0..len {
                if self.rng.next_u64() >> 11 < threshold {
                    acc |= 1 << b;
                }
            }
            *word = acc;
        }
        words
    }
}

/// `u < p` for `u = m 2^{-53}` is `m < ceil(p 2^53)`.
pub(crate) fn threshold_bits(p: f64) -> u64 {
    (p * (1u64 << 53) as f64).ceil() as u64
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return invalid(format!("p must be in [0, 1], got {p}"));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleMode {
    #[default]
    Direct,
    CoupledField,
}

/// `A = {v : U(v) < p}` for the field of `(master_seed, trial_index)`.
pub fn sample_config(
    shape: &GridShape,
    p: f64,
    master_seed: u64,
    trial_index: u64,
    mode: SampleMode,
) -> Result<Configuration> {
    check_p(p)?;
    let mut field = UniformField::new(master_seed, trial_index);
    match mode {
        SampleMode::Direct => {
            let words = field.fill_bits(shape.site_count(), threshold_bits(p));
            Configuration::from_words(shape, words)
        }
        SampleMode::CoupledField => {
            let mut values = vec![0.0; shape.site_count()];
            field.fill(&mut values);
            Ok(threshold_field(shape, &values, p))
        }
    }
}

/// Thresholds a materialized field at `p`.
pub fn threshold_field(shape: &GridShape, values: &[f64], p: f64) -> Configuration {
    debug_assert_eq!(values.len(), shape.site_count());
    let mut words = vec![0u64; values.len().div_ceil(64)];
    for (i, &u) in values.iter().enumerate() {
        if u < p {
            words[i / 64] |= 1 << (i % 64);
        }
    }
    Configuration::from_words(shape, words).expect("word count matches shape")
}
