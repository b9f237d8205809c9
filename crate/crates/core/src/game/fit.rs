//! Exact fitting of cubes into one bin on an integer grid: inserting one cube
//! among fixed ones, and re-laying out a whole bin.
//!
//! All coordinates are scaled by a common denominator first, so every
//! comparison is an exact integer comparison.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};

use crate::geometry::{CubeClass, PlacedCube};
use crate::rat::Rat;

/// Search nodes a single repack may visit.
pub const DEFAULT_NODE_BUDGET: u64 = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitError {
    Budget,
    Overflow,
    Cap { items: usize, cap: usize },
}

pub(crate) struct Scale {
    den: BigInt,
}

impl Scale {
    pub(crate) fn new<'a>(rats: impl IntoIterator<Item = &'a Rat>) -> Self {
        let den = rats.into_iter().fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
        Scale { den }
    }

    pub(crate) fn int(&self, r: &Rat) -> Result<i128, FitError> {
        (r.numer() * (&self.den / r.denom()))
            .to_i128()
            .ok_or(FitError::Overflow)
    }

    pub(crate) fn one(&self) -> Result<i128, FitError> {
        self.den.to_i128().ok_or(FitError::Overflow)
    }

    pub(crate) fn rat(&self, x: i128) -> Rat {
        Rat::new(BigInt::from(x), self.den.clone())
    }
}

/// An axis-parallel box on the grid: base point and side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct IntCube {
    pub lo: Vec<i128>,
    pub side: i128,
}

impl IntCube {
    fn overlaps(&self, other: &IntCube) -> bool {
        self.lo
            .iter()
            .zip(&other.lo)
            .all(|(&a, &b)| a < b + other.side && b < a + self.side)
    }
}

/// First base point (lexicographic over the candidate lists) where a cube of
/// `side` fits among `fixed`.
///
/// Candidates per coordinate are `0` and the upper ends of the fixed cubes.
/// This is complete: any free position can be pushed towards the origin one
/// axis at a time, and each push stops at `0` or at some upper end.
pub(crate) fn insert_int(fixed: &[IntCube], side: i128, one: i128, d: usize) -> Option<Vec<i128>> {
    let limit = one - side;
    if limit < 0 {
        return None;
    }
    let words = fixed.len().div_ceil(64).max(1);
    // per dimension: candidate value and the set of fixed cubes it collides with
    let mut dims: Vec<Vec<(i128, Vec<u64>)>> = Vec::with_capacity(d);
    for i in 0..d {
        let mut vals: Vec<i128> = core::iter::once(0)
            .chain(fixed.iter().map(|c| c.lo[i] + c.side))
            .filter(|&v| v <= limit)
            .collect();
        vals.sort_unstable();
        vals.dedup();
        let cands = vals
            .into_iter()
            .map(|v| {
                let mut mask = vec![0u64; words];
                for (j, c) in fixed.iter().enumerate() {
                    if v < c.lo[i] + c.side && c.lo[i] < v + side {
                        mask[j / 64] |= 1 << (j % 64);
                    }
                }
                (v, mask)
            })
            .collect();
        dims.push(cands);
    }
    let mut point = vec![0i128; d];
    let all = vec![u64::MAX; words];
    if insert_dfs(&dims, 0, &all, &mut point) {
        Some(point)
    } else {
        None
    }
}

fn insert_dfs(dims: &[Vec<(i128, Vec<u64>)>], i: usize, acc: &[u64], point: &mut [i128]) -> bool {
    if i == dims.len() {
        return acc.iter().all(|&w| w == 0);
    }
    for (v, mask) in &dims[i] {
        let next: Vec<u64> = acc.iter().zip(mask).map(|(a, b)| a & b).collect();
        point[i] = *v;
        if insert_dfs(dims, i + 1, &next, point) {
            return true;
        }
    }
    false
}

/// A base point for `class` inside a bin already holding `fixed`, if any.
pub fn find_insertion(fixed: &[PlacedCube], class: &CubeClass) -> Result<Option<Vec<Rat>>, FitError> {
    let scale = Scale::new(
        fixed
            .iter()
            .flat_map(|c| c.base().iter().chain(core::iter::once(c.side())))
            .chain(core::iter::once(class.side())),
    );
    let one = scale.one()?;
    let cubes = fixed
        .iter()
        .map(|c| {
            Ok(IntCube {
                lo: c.base().iter().map(|b| scale.int(b)).collect::<Result<_, _>>()?,
                side: scale.int(c.side())?,
            })
        })
        .collect::<Result<Vec<_>, FitError>>()?;
    let side = scale.int(class.side())?;
    Ok(insert_int(&cubes, side, one, class.d()).map(|p| p.into_iter().map(|x| scale.rat(x)).collect()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RepackOutcome {
    /// Base points in input order.
    Packed(Vec<Vec<Rat>>),
    /// Proven impossible; the reason names the argument used.
    Infeasible(&'static str),
}

impl RepackOutcome {
    pub fn is_packed(&self) -> bool {
        matches!(self, RepackOutcome::Packed(_))
    }
}

/// Decides whether the given cubes fit together in one bin. The search is
/// exhaustive; see [`corner_search`] and [`normal_pattern_search`].
///
/// The volume and grid-point rejections run before `cap` is enforced, so
/// large hopeless sets are answered without search.
pub fn repack(classes: &[CubeClass], d: usize, cap: usize, budget: u64) -> Result<RepackOutcome, FitError> {
    let scale = Scale::new(classes.iter().map(|c| c.side()));
    let one = scale.one()?;
    let sides = classes
        .iter()
        .map(|c| scale.int(c.side()))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(reason) = quick_reject(&sides, one, d) {
        return Ok(RepackOutcome::Infeasible(reason));
    }
    if classes.len() > cap {
        return Err(FitError::Cap {
            items: classes.len(),
            cap,
        });
    }
    match repack_int(&sides, one, d, budget)? {
        None => Ok(RepackOutcome::Infeasible("exhaustive search")),
        Some(pos) => Ok(RepackOutcome::Packed(
            pos.into_iter()
                .map(|p| p.into_iter().map(|x| scale.rat(x)).collect())
                .collect(),
        )),
    }
}

fn volume_exceeds(sides: &[i128], one: i128, d: usize) -> bool {
    // sum side^d > one^d, compared in Rat to avoid overflow
    let total: Rat = sides
        .iter()
        .map(|&s| Rat::new(s, one).pow(d as u32))
        .sum();
    total > Rat::one()
}

/// Cubes of side above `1/(q+1)` each contain a point of the grid
/// `{j/(q+1)}^d, 1 <= j <= q`, so at most `q^d` of them fit.
fn grid_point_bound_fails(sides: &[i128], one: i128, d: usize) -> bool {
    let n = sides.len() as u128;
    let mut q: i128 = 1;
    loop {
        let big = sides.iter().filter(|&&s| s * (q + 1) > one).count() as u128;
        let room = (q as u128).saturating_pow(d as u32);
        if big > room {
            return true;
        }
        if room >= n {
            return false;
        }
        q += 1;
    }
}

fn quick_reject(sides: &[i128], one: i128, d: usize) -> Option<&'static str> {
    if volume_exceeds(sides, one, d) {
        Some("total volume exceeds the bin")
    } else if grid_point_bound_fails(sides, one, d) {
        Some("too many cubes above a grid spacing")
    } else {
        None
    }
}

pub(crate) fn repack_int(sides: &[i128], one: i128, d: usize, budget: u64) -> Result<Option<Vec<Vec<i128>>>, FitError> {
    if sides.is_empty() {
        return Ok(Some(Vec::new()));
    }
    if quick_reject(sides, one, d).is_some() {
        return Ok(None);
    }
    let mut nodes = 0u64;
    if let Some(layout) = corner_search(sides, one, d, &mut nodes, budget)? {
        return Ok(Some(layout));
    }
    if d == 2 {
        return Ok(None);
    }
    normal_pattern_search(sides, one, d, &mut nodes, budget)
}

/// Matches a layout of cubes back to the input order by side.
fn assign_by_side(sides: &[i128], cubes: &[IntCube]) -> Vec<Vec<i128>> {
    let mut used = vec![false; cubes.len()];
    sides
        .iter()
        .map(|&s| {
            let j = (0..cubes.len())
                .find(|&j| !used[j] && cubes[j].side == s)
                .expect("one cube per side");
            used[j] = true;
            cubes[j].lo.clone()
        })
        .collect()
}

/// Builds a packing cube by cube, each pushed against the origin or against
/// cubes already placed. Any packing can be compacted towards the origin, and
/// in the plane the blocking relation of a compacted packing is acyclic, so
/// placing cubes in a topological order reaches it: the search is complete
/// for `d = 2`. In higher dimensions a negative answer is rechecked by
/// [`normal_pattern_search`].
fn corner_search(
    sides: &[i128],
    one: i128,
    d: usize,
    nodes: &mut u64,
    budget: u64,
) -> Result<Option<Vec<Vec<i128>>>, FitError> {
    let mut kinds: Vec<(i128, usize)> = Vec::new();
    let mut sorted = sides.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    for s in sorted {
        match kinds.last_mut() {
            Some((t, n)) if *t == s => *n += 1,
            _ => kinds.push((s, 1)),
        }
    }
    let mut search = Corners {
        one,
        d,
        kinds,
        placed: Vec::new(),
        failed: BTreeSet::new(),
        nodes,
        budget,
    };
    Ok(search.run()?.then(|| assign_by_side(sides, &search.placed)))
}

struct Corners<'a> {
    one: i128,
    d: usize,
    kinds: Vec<(i128, usize)>,
    placed: Vec<IntCube>,
    failed: BTreeSet<Vec<(i128, Vec<i128>)>>,
    nodes: &'a mut u64,
    budget: u64,
}

impl Corners<'_> {
    fn key(&self) -> Vec<(i128, Vec<i128>)> {
        let mut k: Vec<_> = self.placed.iter().map(|c| (c.side, c.lo.clone())).collect();
        k.sort_unstable();
        k
    }

    /// Positions where a cube of `side` fits and every coordinate is 0 or
    /// rests on the far face of a placed cube that blocks it.
    fn supported(&self, side: i128) -> Vec<Vec<i128>> {
        let limit = self.one - side;
        let mut axes: Vec<Vec<i128>> = Vec::with_capacity(self.d);
        for i in 0..self.d {
            let mut v: Vec<i128> = core::iter::once(0)
                .chain(self.placed.iter().map(|c| c.lo[i] + c.side))
                .filter(|&x| x <= limit)
                .collect();
            v.sort_unstable();
            v.dedup();
            axes.push(v);
        }
        let mut out = Vec::new();
        let mut idx = vec![0usize; self.d];
        if axes.iter().any(|a| a.is_empty()) {
            return out;
        }
        loop {
            let lo: Vec<i128> = idx.iter().enumerate().map(|(i, &j)| axes[i][j]).collect();
            let cube = IntCube { lo, side };
            if !self.placed.iter().any(|p| p.overlaps(&cube)) && self.rests(&cube) {
                out.push(cube.lo);
            }
            let mut i = self.d;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                idx[i] += 1;
                if idx[i] < axes[i].len() {
                    break;
                }
                idx[i] = 0;
            }
        }
    }

    fn rests(&self, cube: &IntCube) -> bool {
        (0..self.d).all(|i| {
            cube.lo[i] == 0
                || self.placed.iter().any(|p| {
                    p.lo[i] + p.side == cube.lo[i]
                        && (0..self.d)
                            .filter(|&j| j != i)
                            .all(|j| p.lo[j] < cube.lo[j] + cube.side && cube.lo[j] < p.lo[j] + p.side)
                })
        })
    }

    fn run(&mut self) -> Result<bool, FitError> {
        if self.kinds.iter().all(|k| k.1 == 0) {
            return Ok(true);
        }
        *self.nodes += 1;
        if *self.nodes > self.budget {
            return Err(FitError::Budget);
        }
        let key = self.key();
        if self.failed.contains(&key) {
            return Ok(false);
        }
        // space only shrinks: a cube with no free spot now never gets one
        for &(side, n) in &self.kinds {
            if n > 0 && insert_int(&self.placed, side, self.one, self.d).is_none() {
                self.failed.insert(key);
                return Ok(false);
            }
        }
        for t in 0..self.kinds.len() {
            let (side, n) = self.kinds[t];
            if n == 0 {
                continue;
            }
            for lo in self.supported(side) {
                self.placed.push(IntCube { lo, side });
                self.kinds[t].1 -= 1;
                if self.run()? {
                    return Ok(true);
                }
                self.kinds[t].1 += 1;
                self.placed.pop();
            }
        }
        self.failed.insert(key);
        Ok(false)
    }
}

/// Exhaustive search over normal patterns: every coordinate is a sum of
/// sides of other cubes. Complete in every dimension.
fn normal_pattern_search(
    sides: &[i128],
    one: i128,
    d: usize,
    nodes: &mut u64,
    budget: u64,
) -> Result<Option<Vec<Vec<i128>>>, FitError> {
    let mut order: Vec<usize> = (0..sides.len()).collect();
    order.sort_by(|&a, &b| sides[b].cmp(&sides[a]).then(a.cmp(&b)));

    // subset sums of all sides; a superset of each item's normal set
    let mut sums: BTreeSet<i128> = BTreeSet::new();
    sums.insert(0);
    for &s in sides {
        let next: Vec<i128> = sums.iter().map(|&x| x + s).filter(|&x| x < one).collect();
        sums.extend(next);
    }
    let sums: Vec<i128> = sums.into_iter().collect();

    let mut placed: Vec<IntCube> = Vec::with_capacity(sides.len());
    let found = place(&order, sides, &sums, one, d, 0, &mut placed, nodes, budget)?;
    Ok(found.then(|| {
        let mut out = vec![Vec::new(); sides.len()];
        for (pos, &i) in order.iter().enumerate() {
            out[i] = placed[pos].lo.clone();
        }
        out
    }))
}

#[allow(clippy::too_many_arguments)]
fn place(
    order: &[usize],
    sides: &[i128],
    sums: &[i128],
    one: i128,
    d: usize,
    depth: usize,
    placed: &mut Vec<IntCube>,
    nodes: &mut u64,
    budget: u64,
) -> Result<bool, FitError> {
    if depth == order.len() {
        return Ok(true);
    }
    *nodes += 1;
    if *nodes > budget {
        return Err(FitError::Budget);
    }
    let side = sides[order[depth]];
    let limit = one - side;
    let cands: Vec<i128> = sums.iter().copied().take_while(|&v| v <= limit).collect();
    // identical cubes are interchangeable: keep their positions increasing
    let floor = (depth > 0 && sides[order[depth - 1]] == side).then(|| placed[depth - 1].lo.clone());
    let mut idx = vec![0usize; d];
    loop {
        let lo: Vec<i128> = idx.iter().map(|&j| cands[j]).collect();
        let in_order = floor.as_ref().is_none_or(|f| lo > *f);
        if in_order {
            let cube = IntCube { lo, side };
            if !placed.iter().any(|p| p.overlaps(&cube)) {
                placed.push(cube);
                if place(order, sides, sums, one, d, depth + 1, placed, nodes, budget)? {
                    return Ok(true);
                }
                placed.pop();
            }
        }
        // next index tuple, last coordinate fastest
        let mut i = d;
        loop {
            if i == 0 {
                return Ok(false);
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < cands.len() {
                break;
            }
            idx[i] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{verify_bin, Bin};

    fn c(k: u32, eps: Rat, d: usize) -> CubeClass {
        CubeClass::new(k, eps, d).unwrap()
    }

    #[test]
    fn insertion_finds_the_free_slot() {
        let e = Rat::new(1, 9);
        let cls = c(3, e.clone(), 2);
        let side = cls.side().clone();
        let grid = [(0u32, 0u32), (1, 0), (0, 1)];
        let fixed: Vec<PlacedCube> = grid
            .iter()
            .map(|&(a, b)| PlacedCube::new(cls.clone(), vec![&side * Rat::from(a), &side * Rat::from(b)]).unwrap())
            .collect();
        let pos = find_insertion(&fixed, &cls).unwrap().unwrap();
        assert_eq!(pos, vec![side.clone(), side.clone()]);
        let mut all = fixed.clone();
        all.push(PlacedCube::new(cls.clone(), pos).unwrap());
        assert!(find_insertion(&all, &cls).unwrap().is_none());
    }

    #[test]
    fn insertion_respects_a_centered_obstacle() {
        // a 2/5 cube in the middle leaves 3/10 strips: another 2/5 cube cannot enter
        let mid = c(3, Rat::new(1, 5), 2);
        let centered = PlacedCube::new(mid.clone(), vec![Rat::new(3, 10), Rat::new(3, 10)]).unwrap();
        assert!(find_insertion(&[centered], &mid).unwrap().is_none());
        // but both fit after a re-layout
        assert!(repack(&[mid.clone(), mid], 2, 12, DEFAULT_NODE_BUDGET).unwrap().is_packed());
    }

    #[test]
    fn repack_examples() {
        let e = Rat::new(1, 9);
        // four class-3 cubes fit, five do not
        let four = vec![c(3, e.clone(), 2); 4];
        let RepackOutcome::Packed(pos) = repack(&four, 2, 12, DEFAULT_NODE_BUDGET).unwrap() else {
            panic!("four fit")
        };
        let bin = Bin::with_cubes(
            2,
            four.iter().zip(pos).map(|(k, p)| PlacedCube::new(k.clone(), p).unwrap()).collect(),
        )
        .unwrap();
        assert!(verify_bin(&bin).is_ok());
        let five = vec![c(3, e.clone(), 2); 5];
        assert_eq!(
            repack(&five, 2, 12, DEFAULT_NODE_BUDGET).unwrap(),
            RepackOutcome::Infeasible("too many cubes above a grid spacing")
        );
        // one class-2 cube plus three class-4 cubes at eps = 1/16
        let e = Rat::new(1, 16);
        let mut mix = vec![c(2, e.clone(), 2)];
        mix.extend(vec![c(4, e.clone(), 2); 3]);
        assert!(repack(&mix, 2, 12, DEFAULT_NODE_BUDGET).unwrap().is_packed());
        // hopeless sets are rejected before the cap applies
        assert!(!repack(&five, 2, 4, DEFAULT_NODE_BUDGET).unwrap().is_packed());
        let small = vec![c(4, e, 2); 5];
        assert!(matches!(
            repack(&small, 2, 4, DEFAULT_NODE_BUDGET),
            Err(FitError::Cap { items: 5, cap: 4 })
        ));
    }

    #[test]
    fn exhaustive_infeasibility() {
        // a 3/5 cube leaves room for five 3/10 cubes; the sixth passes the cheap
        // volume and grid tests and only the search rules it out
        let big = c(2, Rat::new(1, 5), 2);
        let small = c(4, Rat::new(1, 5), 2);
        let mut items = vec![big.clone()];
        items.extend(vec![small.clone(); 5]);
        assert!(repack(&items, 2, 12, DEFAULT_NODE_BUDGET).unwrap().is_packed());
        items.push(small);
        assert_eq!(
            repack(&items, 2, 12, DEFAULT_NODE_BUDGET).unwrap(),
            RepackOutcome::Infeasible("exhaustive search")
        );
        assert!(repack(&[big, c(3, Rat::zero(), 2)], 2, 12, DEFAULT_NODE_BUDGET).unwrap().is_packed());
    }
}
