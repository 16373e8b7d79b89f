//! Bootstrap closure and the percolation predicates.
//!
//! The engine keeps one counter byte per site and processes infections one
//! synchronous generation at a time, so the generation at which a site is
//! infected equals the first `t` with the site in `A_t`. Every site enters a
//! generation queue at most once, when its counter reaches its threshold.

use crate::error::{invalid, Error, Result};
use crate::lattice::{BootstrapStructure, Configuration, GridShape, ThresholdRule};

/// Generation value for sites that never become infected.
pub const NEVER: u32 = u32::MAX;

const INFECTED: u8 = u8::MAX;

#[derive(Clone, Debug, PartialEq)]
pub struct ClosureResult {
    pub final_config: Configuration,
    /// Synchronous generations until the fixed point.
    pub rounds: usize,
    pub infected_count: usize,
    /// First generation each site is infected at, or [`NEVER`].
    pub generation: Vec<u32>,
}

impl ClosureResult {
    pub fn generation_of(&self, index: usize) -> Option<u32> {
        match self.generation[index] {
            NEVER => None,
            g => Some(g),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClosureStats {
    pub rounds: usize,
    pub infected_count: usize,
}

/// Reusable scratch space for closures over regions of any shape.
#[derive(Debug, Default)]
pub struct ClosureEngine {
    counters: Vec<u8>,
    current: Vec<u32>,
    next: Vec<u32>,
}

impl ClosureEngine {
    pub fn new() -> Self {
        Self::default()
    }

    /// Bytes of scratch memory currently held.
    pub fn heap_bytes(&self) -> usize {
        self.counters.capacity() + 4 * (self.current.capacity() + self.next.capacity())
    }

    /// Grows `state` in place to its closure under `structure`.
    pub fn run(
        &mut self,
        structure: &BootstrapStructure,
        state: &mut Configuration,
    ) -> Result<ClosureStats> {
        self.run_inner(structure, state, None)
    }

    /// Like [`run`](Self::run), also writing per-site generations.
    pub fn run_with_generations(
        &mut self,
        structure: &BootstrapStructure,
        state: &mut Configuration,
        generation: &mut Vec<u32>,
    ) -> Result<ClosureStats> {
        self.run_inner(structure, state, Some(generation))
    }

    fn run_inner(
        &mut self,
        structure: &BootstrapStructure,
        state: &mut Configuration,
        mut generation: Option<&mut Vec<u32>>,
    ) -> Result<ClosureStats> {
        let shape = structure.shape();
        if state.shape() != shape {
            return Err(Error::ShapeMismatch);
        }
        let n = shape.site_count();
        self.counters.clear();
        self.counters.resize(n, 0);
        self.current.clear();
        self.next.clear();
        if let Some(g) = generation.as_deref_mut() {
            g.clear();
            g.resize(n, NEVER);
        }

        let mut infected = 0usize;
        for i in state.iter_ones() {
            self.counters[i] = INFECTED;
            infected += 1;
            if let Some(g) = generation.as_deref_mut() {
                g[i] = 0;
            }
        }

        // Generation 0 is read straight from the bit array; nothing is
        // written to `state` until the pass is over.
        let counters = &mut self.counters;
        let next = &mut self.next;
        for i in state.iter_ones() {
            shape.for_each_neighbor(i, |w| {
                let c = &mut counters[w];
                if *c != INFECTED {
                    *c += 1;
                    if *c >= structure.threshold_at(w) {
                        *c = INFECTED;
                        next.push(w as u32);
                    }
                }
            });
        }

        let mut rounds = 0usize;
        while !self.next.is_empty() {
            rounds += 1;
            std::mem::swap(&mut self.current, &mut self.next);
            self.next.clear();
            infected += self.current.len();
            for &i in &self.current {
                state.set(i as usize, true);
                if let Some(g) = generation.as_deref_mut() {
                    g[i as usize] = rounds as u32;
                }
            }
            let counters = &mut self.counters;
            let next = &mut self.next;
            for &i in &self.current {
                shape.for_each_neighbor(i as usize, |w| {
                    let c = &mut counters[w];
                    if *c != INFECTED {
                        *c += 1;
                        if *c >= structure.threshold_at(w) {
                            *c = INFECTED;
                            next.push(w as u32);
                        }
                    }
                });
            }
        }

        Ok(ClosureStats {
            rounds,
            infected_count: infected,
        })
    }
}

/// The closure `[A]` of `initial`, with synchronous generation numbers.
pub fn closure(structure: &BootstrapStructure, initial: &Configuration) -> Result<ClosureResult> {
    let mut state = initial.clone();
    let mut generation = Vec::new();
    let stats =
        ClosureEngine::new().run_with_generations(structure, &mut state, &mut generation)?;
    Ok(ClosureResult {
        final_config: state,
        rounds: stats.rounds,
        infected_count: stats.infected_count,
        generation,
    })
}

fn check_semi_rule(structure: &BootstrapStructure) -> Result<()> {
    if let ThresholdRule::Uniform { .. } = structure.rule() {
        if structure.shape().doubled_axes() > 0 {
            return invalid("semi-percolation needs the modified rule when ell > 0");
        }
    }
    Ok(())
}

/// Whether every site of the core layer `[n]^d x 1^ell` is set.
pub fn core_layer_full(config: &Configuration) -> bool {
    let shape = config.shape();
    (0..shape.site_count())
        .step_by(1 << shape.doubled_axes())
        .filter(|&i| shape.in_core_layer(i))
        .all(|i| config.get(i))
}

/// Whether `[A]` contains the unpadded core layer `[n]^d x 1^ell`.
pub fn semi_percolates(structure: &BootstrapStructure, initial: &Configuration) -> Result<bool> {
    let mut engine = ClosureEngine::new();
    semi_percolates_with(&mut engine, structure, initial.clone())
}

/// [`semi_percolates`] reusing an engine and consuming the configuration.
pub fn semi_percolates_with(
    engine: &mut ClosureEngine,
    structure: &BootstrapStructure,
    mut state: Configuration,
) -> Result<bool> {
    check_semi_rule(structure)?;
    engine.run(structure, &mut state)?;
    Ok(core_layer_full(&state))
}

/// An axis-aligned box of sites, 1-based inclusive bounds on every axis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SiteBox {
    pub lo: Vec<usize>,
    pub hi: Vec<usize>,
}

impl SiteBox {
    pub fn new(lo: Vec<usize>, hi: Vec<usize>) -> Self {
        Self { lo, hi }
    }

    /// The rectangle `[s]^d x [2]^ell`.
    pub fn cube(s: usize, d: usize, ell: usize) -> Self {
        let lo = vec![1; d + ell];
        let mut hi = vec![s; d];
        hi.extend(std::iter::repeat_n(2, ell));
        Self { lo, hi }
    }

    fn validate(&self, shape: &GridShape) -> Result<()> {
        if self.lo.len() != shape.axes() || self.hi.len() != shape.axes() {
            return invalid("box dimension does not match the region");
        }
        for axis in 0..shape.axes() {
            let (lo, hi) = (self.lo[axis], self.hi[axis]);
            if lo < 1 || lo > hi || hi > shape.extents()[axis] {
                return invalid(format!("box {self:?} is not contained in the region"));
            }
            if axis >= shape.dim() && (lo, hi) != (1, 2) {
                return invalid("a rectangle must span every doubled axis");
            }
        }
        Ok(())
    }
}

/// Runs the closure of `initial ∩ S` inside `S` only and reports whether it
/// covers `S ∩ ([n]^d x 1^ell)`.
pub fn internally_semi_spanned(
    structure: &BootstrapStructure,
    subregion: &SiteBox,
    initial: &Configuration,
) -> Result<bool> {
    let shape = structure.shape();
    if initial.shape() != shape {
        return Err(Error::ShapeMismatch);
    }
    check_semi_rule(structure)?;
    subregion.validate(shape)?;
    let d = shape.dim();
    let ell = shape.doubled_axes();

    let long: Vec<usize> = (0..d)
        .map(|a| subregion.hi[a] - subregion.lo[a] + 1)
        .collect();
    let sub_shape = GridShape::new(long, ell, false)?;
    let sub_structure = BootstrapStructure::new(sub_shape.clone(), structure.rule())?;

    // The rule depends only on the doubled coordinates, which the box keeps
    // unchanged, so thresholds carry over site by site.
    let offset: usize = (0..d)
        .map(|a| (subregion.lo[a] - 1) * shape.strides()[a])
        .sum();
    let to_global = |local: usize| -> usize {
        let mut g = offset + (local & shape.layer_mask());
        for a in 0..d {
            let c = (local / sub_shape.strides()[a]) % sub_shape.extents()[a];
            g += c * shape.strides()[a];
        }
        g
    };

    let mut state = Configuration::empty(&sub_shape);
    for local in 0..sub_shape.site_count() {
        if initial.get(to_global(local)) {
            state.set(local, true);
        }
    }
    ClosureEngine::new().run(&sub_structure, &mut state)?;

    Ok((0..sub_shape.site_count())
        .step_by(1 << ell)
        .filter(|&local| shape.in_core_layer(to_global(local)))
        .all(|local| state.get(local)))
}
