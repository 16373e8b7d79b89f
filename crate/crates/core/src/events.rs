//! Detectors for diagonal growth, gap-crossing and growth events on explicit
//! configurations.
//!
//! A set is occupied when it contains at least one site of the given
//! configuration (the initial set, not its closure). Coordinates are 1-based.
//! `U_i(t, s)` is the slab `[s]^{t-1} x {i} x [s]^{d-t} x 1^ell` and
//! `V_i^(j)(t, s)` the same slab on layer `1^ell + e_j`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{BootstrapStructure, Configuration, GridShape};
use crate::lgaps::has_lgap;

/// Position of a gap and the vector of side lengths reached while crossing it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawGap", into = "RawGap")]
pub struct GapVector {
    a: usize,
    bvec: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGap {
    a: usize,
    bvec: Vec<usize>,
}

impl TryFrom<RawGap> for GapVector {
    type Error = Error;
    fn try_from(raw: RawGap) -> Result<Self> {
        GapVector::new(raw.a, raw.bvec)
    }
}

impl From<GapVector> for RawGap {
    fn from(g: GapVector) -> Self {
        RawGap {
            a: g.a,
            bvec: g.bvec,
        }
    }
}

impl GapVector {
    pub fn new(a: usize, bvec: Vec<usize>) -> Result<Self> {
        if a < 2 {
            return invalid(format!("a must be at least 2, got {a}"));
        }
        if bvec.is_empty() {
            return invalid("bvec needs d - 1 >= 1 entries");
        }
        if bvec.contains(&0) {
            return invalid("bvec entries are 1-based");
        }
        let b = *bvec.iter().max().expect("nonempty");
        if b < a + 3 {
            return invalid(format!("need max(bvec) >= a + 3, got a = {a}, b = {b}"));
        }
        Ok(GapVector { a, bvec })
    }

    pub fn a(&self) -> usize {
        self.a
    }

    pub fn bvec(&self) -> &[usize] {
        &self.bvec
    }

    pub fn b(&self) -> usize {
        *self.bvec.iter().max().expect("validated nonempty")
    }

    pub fn dim(&self) -> usize {
        self.bvec.len() + 1
    }
}

/// Growth from the seed site to `[B]^d x 1^ell` across the listed gaps.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawGrowth", into = "RawGrowth")]
pub struct GrowthSpec {
    big_b: usize,
    gaps: Vec<GapVector>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrowth {
    big_b: usize,
    gaps: Vec<GapVector>,
}

impl TryFrom<RawGrowth> for GrowthSpec {
    type Error = Error;
    fn try_from(raw: RawGrowth) -> Result<Self> {
        GrowthSpec::new(raw.big_b, raw.gaps)
    }
}

impl From<GrowthSpec> for RawGrowth {
    fn from(g: GrowthSpec) -> Self {
        RawGrowth {
            big_b: g.big_b,
            gaps: g.gaps,
        }
    }
}

impl GrowthSpec {
    pub fn new(big_b: usize, gaps: Vec<GapVector>) -> Result<Self> {
        if big_b < 2 {
            return invalid(format!("B must be at least 2, got {big_b}"));
        }
        if let Some(first) = gaps.first() {
            if gaps.iter().any(|g| g.dim() != first.dim()) {
                return invalid("all gap vectors must have the same length");
            }
        }
        for w in gaps.windows(2) {
            if w[1].a < w[0].b() {
                return invalid(format!(
                    "gaps overlap or are out of order: b = {} > next a = {}",
                    w[0].b(),
                    w[1].a
                ));
            }
        }
        if let Some(last) = gaps.last() {
            if last.b() > big_b {
                return invalid(format!("last b = {} exceeds B = {big_b}", last.b()));
            }
        }
        Ok(GrowthSpec { big_b, gaps })
    }

    pub fn big_b(&self) -> usize {
        self.big_b
    }

    pub fn gaps(&self) -> &[GapVector] {
        &self.gaps
    }
}

/// Occupancy queries on one configuration.
struct Probe<'a> {
    config: &'a Configuration,
    shape: &'a GridShape,
    d: usize,
    ell: usize,
}

impl<'a> Probe<'a> {
    fn new(config: &'a Configuration, structure: &'a BootstrapStructure) -> Result<Self> {
        let shape = structure.shape();
        if config.shape() != shape {
            return Err(Error::ShapeMismatch);
        }
        Ok(Probe {
            config,
            shape,
            d: shape.dim(),
            ell: shape.doubled_axes(),
        })
    }

    fn require_extent(&self, axis: usize, value: usize) -> Result<()> {
        if value > self.shape.extents()[axis] {
            let mut coords = vec![1; self.shape.axes()];
            coords[axis] = value;
            return Err(Error::OutOfRegion(coords));
        }
        Ok(())
    }

    /// Whether `ranges[0] x ... x ranges[d-1] x layer` holds an infected site.
    /// `layer = 0` is `1^ell`, `layer = j` is `1^ell + e_j`.
    fn occupied(&self, ranges: &[(usize, usize)], layer: usize) -> bool {
        debug_assert_eq!(ranges.len(), self.d);
        if ranges.iter().any(|&(lo, hi)| lo > hi || lo == 0) {
            return false;
        }
        let strides = self.shape.strides();
        let layer_offset = if layer == 0 {
            0
        } else {
            strides[self.d + layer - 1]
        };
        let mut coords: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        loop {
            let idx: usize = coords
                .iter()
                .zip(strides)
                .map(|(&c, &s)| (c - 1) * s)
                .sum::<usize>()
                + layer_offset;
            if self.config.get(idx) {
                return true;
            }
            let mut axis = self.d;
            loop {
                if axis == 0 {
                    return false;
                }
                axis -= 1;
                if coords[axis] < ranges[axis].1 {
                    coords[axis] += 1;
                    break;
                }
                coords[axis] = ranges[axis].0;
            }
        }
    }

    fn site(&self, long: &[usize]) -> bool {
        let idx: usize = long
            .iter()
            .zip(self.shape.strides())
            .map(|(&c, &s)| (c - 1) * s)
            .sum();
        self.config.get(idx)
    }

    /// Ranges of `U_i(t, s)`, `t` 0-based.
    fn slab(&self, t: usize, i: usize, s: usize) -> Vec<(usize, usize)> {
        (0..self.d)
            .map(|axis| if axis == t { (i, i) } else { (1, s) })
            .collect()
    }

    /// Outcomes of `U_i(t, side(i))` for `first <= i <= last` and of
    /// `V_i^(j)(t, side(i))` for `first <= i < last`.
    fn sequence(
        &self,
        t: usize,
        first: usize,
        last: usize,
        side: impl Fn(usize) -> usize,
    ) -> (Vec<bool>, Vec<Vec<bool>>) {
        if first > last {
            return (Vec::new(), Vec::new());
        }
        let u = (first..=last)
            .map(|i| self.occupied(&self.slab(t, i, side(i)), 0))
            .collect();
        let v = (first..last)
            .map(|i| {
                let slab = self.slab(t, i, side(i));
                (1..=self.ell).map(|j| self.occupied(&slab, j)).collect()
            })
            .collect();
        (u, v)
    }

    fn no_gap(&self, t: usize, first: usize, last: usize, side: impl Fn(usize) -> usize) -> bool {
        let (u, v) = self.sequence(t, first, last, side);
        !has_lgap(&u, &v)
    }

    fn diagonal(&self, a: usize, b: usize) -> bool {
        (0..self.d).all(|t| self.no_gap(t, a + 1, b, |i| i - 1))
    }
}

/// `D_a^b`: in every direction the slabs `U_i(t, i-1)`, `a < i <= b`, with
/// their layer companions, have no L-gap.
pub fn detect_d(
    config: &Configuration,
    structure: &BootstrapStructure,
    a: usize,
    b: usize,
) -> Result<bool> {
    let probe = Probe::new(config, structure)?;
    if a < 2 || b < a {
        return invalid(format!("need 2 <= a <= b, got a = {a}, b = {b}"));
    }
    for axis in 0..probe.d {
        probe.require_extent(axis, b)?;
    }
    Ok(probe.diagonal(a, b))
}

/// Raw ingredients of clause (iii) for direction `t` (0-based, `t < d - 1`):
/// the `U` and `V` outcome sequences it tests.
pub fn transverse_sequence(
    config: &Configuration,
    structure: &BootstrapStructure,
    gap: &GapVector,
    t: usize,
) -> Result<(Vec<bool>, Vec<Vec<bool>>)> {
    let probe = Probe::new(config, structure)?;
    check_gap(&probe, gap)?;
    if t + 1 >= probe.d {
        return invalid(format!("direction {t} is not transverse"));
    }
    let a = gap.a;
    Ok(probe.sequence(t, a + 1, gap.b(), |_| a))
}

fn check_gap(probe: &Probe<'_>, gap: &GapVector) -> Result<()> {
    if gap.dim() != probe.d {
        return invalid(format!(
            "gap vector has dimension {}, region has {}",
            gap.dim(),
            probe.d
        ));
    }
    for axis in 0..probe.d {
        probe.require_extent(axis, gap.b())?;
    }
    Ok(())
}

/// The seven clauses of the gap-crossing event, in order.
pub fn t_clauses(
    config: &Configuration,
    structure: &BootstrapStructure,
    gap: &GapVector,
) -> Result<[bool; 7]> {
    let probe = Probe::new(config, structure)?;
    check_gap(&probe, gap)?;
    Ok(t_clauses_with(&probe, gap))
}

fn t_clauses_with(probe: &Probe<'_>, gap: &GapVector) -> [bool; 7] {
    let d = probe.d;
    let a = gap.a;
    let b = gap.b();
    let last = d - 1;
    let base = |level: usize| -> Vec<(usize, usize)> {
        let mut r: Vec<(usize, usize)> = gap.bvec.iter().map(|&x| (1, x - 1)).collect();
        r.push((level, level));
        r
    };

    let c1 = !probe.occupied(&base(a + 1), 0) && !probe.occupied(&base(a + 2), 0);
    let c2 = (1..=probe.ell).all(|j| !probe.occupied(&base(a + 1), j));
    let c3 = (0..last).all(|t| probe.no_gap(t, a + 1, b, |_| a));
    let c4 = (0..last).all(|t| probe.occupied(&probe.slab(t, b, a), 0));
    let mut corner = gap.bvec.clone();
    corner.push(a + 2);
    let c5 = probe.site(&corner);
    let c6 = probe.no_gap(last, a + 3, b, |_| b);
    let c7 = probe.occupied(&probe.slab(last, b, b), 0);
    [c1, c2, c3, c4, c5, c6, c7]
}

pub fn detect_t(
    config: &Configuration,
    structure: &BootstrapStructure,
    gap: &GapVector,
) -> Result<bool> {
    Ok(t_clauses(config, structure, gap)?.iter().all(|&c| c))
}

/// Sites every growth event needs infected: the seed `1^d`, the sites
/// `x^(t)` (coordinate `t` equal to 2) and `y^(t)` (coordinate `t` equal to 1,
/// all other long coordinates equal to `B`), all on layer `1^ell`.
pub fn growth_anchor_sites(shape: &GridShape, big_b: usize) -> Result<Vec<usize>> {
    let d = shape.dim();
    let ell = shape.doubled_axes();
    let mut sites = Vec::with_capacity(2 * d + 1);
    let mut push = |long: Vec<usize>| -> Result<()> {
        let mut coords = long;
        coords.extend(std::iter::repeat_n(1, ell));
        sites.push(shape.index_of(&coords)?);
        Ok(())
    };
    push(vec![1; d])?;
    for t in 0..d {
        let mut x = vec![1; d];
        x[t] = 2;
        push(x)?;
    }
    for t in 0..d {
        let mut y = vec![big_b; d];
        y[t] = 1;
        push(y)?;
    }
    Ok(sites)
}

pub fn detect_growth(
    config: &Configuration,
    structure: &BootstrapStructure,
    spec: &GrowthSpec,
) -> Result<bool> {
    let probe = Probe::new(config, structure)?;
    if let Some(g) = spec.gaps.first() {
        if g.dim() != probe.d {
            return invalid(format!(
                "gap vectors have dimension {}, region has {}",
                g.dim(),
                probe.d
            ));
        }
    }
    for axis in 0..probe.d {
        probe.require_extent(axis, spec.big_b)?;
    }
    let anchors = growth_anchor_sites(probe.shape, spec.big_b)?;
    if !anchors.iter().all(|&s| config.get(s)) {
        return Ok(false);
    }
    let mut from = 2;
    for gap in &spec.gaps {
        if !probe.diagonal(from, gap.a) || !t_clauses_with(&probe, gap).iter().all(|&c| c) {
            return Ok(false);
        }
        from = gap.b();
    }
    Ok(probe.diagonal(from, spec.big_b))
}

/// Every valid growth specification with the given `B` in dimension `d`,
/// including the one with no gaps.
pub fn enumerate_growth_specs(big_b: usize, d: usize) -> Result<Vec<GrowthSpec>> {
    if d < 2 {
        return invalid("growth specifications need d >= 2");
    }
    if big_b < 2 {
        return invalid(format!("B must be at least 2, got {big_b}"));
    }
    // All vectors in [B]^{d-1}, grouped by their maximum.
    let mut by_max: Vec<Vec<Vec<usize>>> = vec![Vec::new(); big_b + 1];
    let total = big_b.pow(d as u32 - 1);
    for code in 0..total {
        let mut v = Vec::with_capacity(d - 1);
        let mut c = code;
        for _ in 0..d - 1 {
            v.push(c % big_b + 1);
            c /= big_b;
        }
        let m = *v.iter().max().expect("d >= 2");
        by_max[m].push(v);
    }

    fn extend(
        start: usize,
        big_b: usize,
        by_max: &[Vec<Vec<usize>>],
        prefix: &mut Vec<GapVector>,
        out: &mut Vec<GrowthSpec>,
    ) {
        out.push(GrowthSpec {
            big_b,
            gaps: prefix.clone(),
        });
        for a in start..=big_b.saturating_sub(3) {
            for b in a + 3..=big_b {
                for v in &by_max[b] {
                    prefix.push(GapVector { a, bvec: v.clone() });
                    extend(b, big_b, by_max, prefix, out);
                    prefix.pop();
                }
            }
        }
    }

    let mut out = Vec::new();
    extend(2, big_b, &by_max, &mut Vec::new(), &mut out);
    Ok(out)
}
