use serde::Serialize;

use crate::dynamics::{semi_percolates_with, ClosureEngine};
use crate::error::{Error, Result};
use crate::lattice::{build_structure, BootstrapStructure, Configuration};

use super::rng::check_p;

pub const MAX_EXACT_SITES: usize = 22;

/// `counts[k]` = number of initial sets of size `k` that semi-percolate.
pub fn percolating_counts(structure: &BootstrapStructure) -> Result<Vec<u64>> {
    let shape = structure.shape();
    let sites = shape.site_count();
    if sites > MAX_EXACT_SITES {
        return Err(Error::TooLarge(format!(
            "{sites} sites exceed the exact limit of {MAX_EXACT_SITES}"
        )));
    }
    let mut engine = ClosureEngine::new();
    let mut counts = vec![0u64; sites + 1];
    for mask in 0u64..(1u64 << sites) {
        let config = Configuration::from_words(shape, vec![mask])?;
        if semi_percolates_with(&mut engine, structure, config)? {
            counts[mask.count_ones() as usize] += 1;
        }
    }
    Ok(counts)
}

/// `sum_k counts[k] p^k (1-p)^{sites-k}`.
pub fn probability_from_counts(counts: &[u64], p: f64) -> f64 {
    let sites = counts.len() - 1;
    counts
        .iter()
        .enumerate()
        .map(|(k, &c)| c as f64 * p.powi(k as i32) * (1.0 - p).powi((sites - k) as i32))
        .sum()
}

/// Exact semi-percolation probability on the padded structure.
pub fn exact_p_small(n: usize, d: usize, ell: usize, r: usize, p: f64) -> Result<f64> {
    check_p(p)?;
    let structure = build_structure(n, d, ell, r, true)?;
    Ok(probability_from_counts(&percolating_counts(&structure)?, p))
}

/// Independent recomputation: subsets visited in decreasing order, each
/// weighted directly.
pub fn exact_p_small_reversed(n: usize, d: usize, ell: usize, r: usize, p: f64) -> Result<f64> {
    check_p(p)?;
    let structure = build_structure(n, d, ell, r, true)?;
    let shape = structure.shape();
    let sites = shape.site_count();
    if sites > MAX_EXACT_SITES {
        return Err(Error::TooLarge(format!(
            "{sites} sites exceed the exact limit of {MAX_EXACT_SITES}"
        )));
    }
    let mut engine = ClosureEngine::new();
    let mut total = 0.0;
    for mask in (0u64..(1u64 << sites)).rev() {
        let config = Configuration::from_words(shape, vec![mask])?;
        if semi_percolates_with(&mut engine, &structure, config)? {
            let k = mask.count_ones() as i32;
            total += p.powi(k) * (1.0 - p).powi(sites as i32 - k);
        }
    }
    Ok(total)
}

/// All up-sets of `{0,1}^k` as bitmasks over the `2^k` points.
pub fn up_sets(k: usize) -> Vec<u64> {
    assert!(k <= 4, "up-set enumeration is limited to 4 coordinates");
    let points = 1usize << k;
    let mut out = Vec::new();
    for set in 0u64..(1u64 << points) {
        let closed =
            (0..points).all(|x| set >> x & 1 == 0 || (0..k).all(|j| set >> (x | 1 << j) & 1 == 1));
        if closed {
            out.push(set);
        }
    }
    out
}

/// Product-measure probability of a set of points of `{0,1}^k`.
pub fn set_probability(set: u64, k: usize, p: f64) -> f64 {
    (0..1usize << k)
        .filter(|&x| set >> x & 1 == 1)
        .map(|x| {
            let ones = x.count_ones() as i32;
            p.powi(ones) * (1.0 - p).powi(k as i32 - ones)
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HarrisReport {
    pub site_count: usize,
    pub p: f64,
    pub up_sets: usize,
    pub pairs: usize,
    pub min_slack: f64,
    pub violations: usize,
}

/// Checks `P(E ∩ F) >= P(E) P(F)` for every pair of up-sets on
/// `site_count <= 4` coordinates.
pub fn verify_harris(site_count: usize, p: f64) -> Result<HarrisReport> {
    check_p(p)?;
    if site_count > 4 {
        return Err(Error::TooLarge(format!(
            "{site_count} sites; exhaustive check supports at most 4"
        )));
    }
    let sets = up_sets(site_count);
    let probs: Vec<f64> = sets
        .iter()
        .map(|&s| set_probability(s, site_count, p))
        .collect();
    let mut min_slack = f64::INFINITY;
    let mut violations = 0;
    for (i, &e) in sets.iter().enumerate() {
        for (j, &f) in sets.iter().enumerate() {
            let slack = set_probability(e & f, site_count, p) - probs[i] * probs[j];
            min_slack = min_slack.min(slack);
            if slack < -1e-15 {
                violations += 1;
            }
        }
    }
    Ok(HarrisReport {
        site_count,
        p,
        up_sets: sets.len(),
        pairs: sets.len() * sets.len(),
        min_slack,
        violations,
    })
}
