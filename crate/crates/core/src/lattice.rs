//! Grid regions `[n_1] x ... x [n_d] x [2]^ell`, site indexing and the
//! threshold fields of the standard and modified bootstrap structures.
//!
//! Coordinates are 1-based. Sites are indexed row-major with the long axes
//! first and the doubled axes last, so the last axis has stride 1. Because
//! every doubled axis has extent 2, the low `ell` bits of a site index are
//! exactly its doubled coordinates minus one.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Regions above this many sites are rejected.
pub const MAX_SITES: usize = 1 << 31;

/// Shape of a region: `d` long axes, `ell` doubled axes of extent 2, and an
/// optional one-site padding on every long axis.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ShapeDef", into = "ShapeDef")]
pub struct GridShape {
    long_extents: Vec<usize>,
    doubled_axes: usize,
    padded: bool,
    extents: Vec<usize>,
    strides: Vec<usize>,
    site_count: usize,
}

#[derive(Serialize, Deserialize)]
struct ShapeDef {
    long_extents: Vec<usize>,
    doubled_axes: usize,
    padded: bool,
}

impl TryFrom<ShapeDef> for GridShape {
    type Error = Error;
    fn try_from(def: ShapeDef) -> Result<Self> {
        GridShape::new(def.long_extents, def.doubled_axes, def.padded)
    }
}

impl From<GridShape> for ShapeDef {
    fn from(s: GridShape) -> Self {
        ShapeDef {
            long_extents: s.long_extents,
            doubled_axes: s.doubled_axes,
            padded: s.padded,
        }
    }
}

impl GridShape {
    pub fn new(long_extents: Vec<usize>, doubled_axes: usize, padded: bool) -> Result<Self> {
        if long_extents.is_empty() {
            return invalid("a region needs at least one long axis");
        }
        if long_extents.contains(&0) {
            return invalid("long extents must be positive");
        }
        let mut extents: Vec<usize> = long_extents
            .iter()
            .map(|&e| if padded { e + 1 } else { e })
            .collect();
        extents.extend(std::iter::repeat_n(2, doubled_axes));

        let mut site_count: usize = 1;
        for &e in &extents {
            site_count = site_count
                .checked_mul(e)
                .filter(|&c| c <= MAX_SITES)
                .ok_or_else(|| Error::Overflow(format!("extents {extents:?}")))?;
        }

        let mut strides = vec![1usize; extents.len()];
        for axis in (0..extents.len().saturating_sub(1)).rev() {
            strides[axis] = strides[axis + 1] * extents[axis + 1];
        }

        Ok(Self {
            long_extents,
            doubled_axes,
            padded,
            extents,
            strides,
            site_count,
        })
    }

    /// `[n]^d x [2]^ell`, padded to `[n+1]^d x [2]^ell` on request.
    pub fn cube(n: usize, d: usize, ell: usize, padded: bool) -> Result<Self> {
        if d == 0 {
            return invalid("dimension must be at least 1");
        }
        Self::new(vec![n; d], ell, padded)
    }

    /// Number of long axes.
    pub fn dim(&self) -> usize {
        self.long_extents.len()
    }

    pub fn doubled_axes(&self) -> usize {
        self.doubled_axes
    }

    pub fn padded(&self) -> bool {
        self.padded
    }

    /// Extents of the unpadded core along the long axes.
    pub fn core_extents(&self) -> &[usize] {
        &self.long_extents
    }

    /// Extents of the whole region, long axes first.
    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn axes(&self) -> usize {
        self.extents.len()
    }

    pub fn site_count(&self) -> usize {
        self.site_count
    }

    pub(crate) fn layer_mask(&self) -> usize {
        (1usize << self.doubled_axes) - 1
    }

    pub fn contains(&self, coords: &[usize]) -> bool {
        coords.len() == self.extents.len()
            && coords
                .iter()
                .zip(&self.extents)
                .all(|(&c, &e)| c >= 1 && c <= e)
    }

    pub fn index_of(&self, coords: &[usize]) -> Result<usize> {
        if !self.contains(coords) {
            return Err(Error::OutOfRegion(coords.to_vec()));
        }
        Ok(coords
            .iter()
            .zip(&self.strides)
            .map(|(&c, &s)| (c - 1) * s)
            .sum())
    }

    pub fn coords_of(&self, index: usize) -> Vec<usize> {
        debug_assert!(index < self.site_count);
        self.extents
            .iter()
            .zip(&self.strides)
            .map(|(&e, &s)| (index / s) % e + 1)
            .collect()
    }

    /// Whether the site lies in the core layer `[n]^d x 1^ell`.
    pub fn in_core_layer(&self, index: usize) -> bool {
        if index & self.layer_mask() != 0 {
            return false;
        }
        (0..self.dim())
            .all(|axis| (index / self.strides[axis]) % self.extents[axis] < self.long_extents[axis])
    }

    /// Calls `f` for every neighbor of `index` in the induced grid graph.
    #[inline]
    pub fn for_each_neighbor(&self, index: usize, mut f: impl FnMut(usize)) {
        let d = self.dim();
        for axis in 0..d {
            let s = self.strides[axis];
            let c = (index / s) % self.extents[axis];
            if c > 0 {
                f(index - s);
            }
            if c + 1 < self.extents[axis] {
                f(index + s);
            }
        }
        for axis in d..self.extents.len() {
            f(index ^ self.strides[axis]);
        }
    }

    pub fn neighbors(&self, index: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(2 * self.axes());
        self.for_each_neighbor(index, |w| out.push(w));
        out
    }
}

/// Per-site infection thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ThresholdRule {
    /// Every site has threshold `r`.
    Uniform { r: usize },
    /// Sites whose last `ell` coordinates are all 1 have threshold `r`, all
    /// others `r + ell`.
    ModifiedStar { r: usize, ell: usize },
}

impl ThresholdRule {
    pub fn base(&self) -> usize {
        match *self {
            ThresholdRule::Uniform { r } | ThresholdRule::ModifiedStar { r, .. } => r,
        }
    }
}

/// A region together with its threshold field.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BootstrapStructure {
    shape: GridShape,
    rule: ThresholdRule,
}

impl BootstrapStructure {
    pub fn new(shape: GridShape, rule: ThresholdRule) -> Result<Self> {
        let (r, extra) = match rule {
            ThresholdRule::Uniform { r } => (r, 0),
            ThresholdRule::ModifiedStar { r, ell } => {
                if ell != shape.doubled_axes() {
                    return invalid(format!(
                        "rule has ell = {ell} but the region has {} doubled axes",
                        shape.doubled_axes()
                    ));
                }
                (r, ell)
            }
        };
        if r == 0 {
            return invalid("threshold r must be at least 1");
        }
        if r + extra > u8::MAX as usize {
            return invalid("thresholds above 255 are not supported");
        }
        Ok(Self { shape, rule })
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn rule(&self) -> ThresholdRule {
        self.rule
    }

    #[inline]
    pub fn threshold_at(&self, index: usize) -> u8 {
        match self.rule {
            ThresholdRule::Uniform { r } => r as u8,
            ThresholdRule::ModifiedStar { r, ell } => {
                if index & self.shape.layer_mask() == 0 {
                    r as u8
                } else {
                    (r + ell) as u8
                }
            }
        }
    }

    pub fn threshold_of(&self, site: &[usize]) -> Result<usize> {
        let index = self.shape.index_of(site)?;
        Ok(self.threshold_at(index) as usize)
    }
}

/// The modified structure `C*` over `[n(+1)]^d x [2]^ell` with base threshold `r`.
pub fn build_structure(
    n: usize,
    d: usize,
    ell: usize,
    r: usize,
    padded: bool,
) -> Result<BootstrapStructure> {
    if n == 0 {
        return invalid("n must be positive");
    }
    let shape = GridShape::cube(n, d, ell, padded)?;
    BootstrapStructure::new(shape, ThresholdRule::ModifiedStar { r, ell })
}

/// A set of infected sites, one bit per site.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Configuration {
    shape: GridShape,
    bits: Vec<u64>,
}

impl Configuration {
    pub fn empty(shape: &GridShape) -> Self {
        Self {
            shape: shape.clone(),
            bits: vec![0; shape.site_count().div_ceil(64)],
        }
    }

    pub fn full(shape: &GridShape) -> Self {
        let mut c = Self::empty(shape);
        c.bits.fill(u64::MAX);
        c.clear_tail();
        c
    }

    pub fn from_sites<'a>(
        shape: &GridShape,
        sites: impl IntoIterator<Item = &'a [usize]>,
    ) -> Result<Self> {
        let mut c = Self::empty(shape);
        for s in sites {
            let i = shape.index_of(s)?;
            c.set(i, true);
        }
        Ok(c)
    }

    pub fn from_indices(shape: &GridShape, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut c = Self::empty(shape);
        for i in indices {
            c.set(i, true);
        }
        c
    }

    /// Builds from raw words; bits past the site count are cleared.
    pub fn from_words(shape: &GridShape, words: Vec<u64>) -> Result<Self> {
        if words.len() != shape.site_count().div_ceil(64) {
            return Err(Error::ShapeMismatch);
        }
        let mut c = Self {
            shape: shape.clone(),
            bits: words,
        };
        c.clear_tail();
        Ok(c)
    }

    fn clear_tail(&mut self) {
        let rem = self.shape.site_count() % 64;
        if rem != 0 {
            if let Some(last) = self.bits.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn words(&self) -> &[u64] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.shape.site_count()
    }

    pub fn is_empty(&self) -> bool {
        self.shape.site_count() == 0
    }

    #[inline]
    pub fn get(&self, index: usize) -> bool {
        (self.bits[index >> 6] >> (index & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, index: usize, value: bool) {
        let mask = 1u64 << (index & 63);
        if value {
            self.bits[index >> 6] |= mask;
        } else {
            self.bits[index >> 6] &= !mask;
        }
    }

    pub fn is_infected(&self, site: &[usize]) -> Result<bool> {
        Ok(self.get(self.shape.index_of(site)?))
    }

    pub fn set_site(&mut self, site: &[usize], value: bool) -> Result<()> {
        let i = self.shape.index_of(site)?;
        self.set(i, value);
        Ok(())
    }

    /// Number of infected sites.
    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().flat_map(|(wi, &w)| {
            let mut word = w;
            std::iter::from_fn(move || {
                if word == 0 {
                    None
                } else {
                    let tz = word.trailing_zeros() as usize;
                    word &= word - 1;
                    Some(wi * 64 + tz)
                }
            })
        })
    }

    pub fn is_subset_of(&self, other: &Configuration) -> bool {
        self.shape == other.shape && self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    pub fn union_with(&mut self, other: &Configuration) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch);
        }
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
        Ok(())
    }

    /// Bytes held by the bit array.
    pub fn heap_bytes(&self) -> usize {
        self.bits.len() * std::mem::size_of::<u64>()
    }
}
