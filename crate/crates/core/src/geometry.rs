//! Open intervals, axis-parallel hypercubes and unit bins over exact rationals.
//!
//! Every cube is open, so two cubes that only share boundary points are
//! disjoint. Nothing here rounds.

use alloc::boxed::Box;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};

use crate::rat::Rat;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GeometryError {
    #[error("empty interval ({}, {})", .0 .0, .0 .1)]
    EmptyInterval(Box<(Rat, Rat)>),
    #[error("cube class needs k >= 2, got {0}")]
    ClassTooSmall(u32),
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("epsilon must be non-negative, got {0}")]
    NegativeEpsilon(Rat),
    #[error("side (1+eps)/k = {0} exceeds the unit bin")]
    SideTooLarge(Rat),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Open interval `(lo, hi)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Interval {
    lo: Rat,
    hi: Rat,
}

impl Interval {
    pub fn new(lo: Rat, hi: Rat) -> Result<Self, GeometryError> {
        if lo >= hi {
            return Err(GeometryError::EmptyInterval(Box::new((lo, hi))));
        }
        Ok(Interval { lo, hi })
    }

    pub fn lo(&self) -> &Rat {
        &self.lo
    }

    pub fn hi(&self) -> &Rat {
        &self.hi
    }

    pub fn length(&self) -> Rat {
        &self.hi - &self.lo
    }
}

/// True iff the open intervals have empty intersection.
pub fn intervals_disjoint(a: &Interval, b: &Interval) -> bool {
    a.hi <= b.lo || b.hi <= a.lo
}

/// The cube shape `Q_k^d(eps)`: an open cube of side `(1+eps)/k` in dimension `d`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CubeClass {
    k: u32,
    epsilon: Rat,
    d: usize,
    side: Rat,
}

impl CubeClass {
    /// `eps = 0` is accepted (degenerate side `1/k`); callers that need a
    /// strictly positive epsilon check it themselves.
    pub fn new(k: u32, epsilon: Rat, d: usize) -> Result<Self, GeometryError> {
        if k < 2 {
            return Err(GeometryError::ClassTooSmall(k));
        }
        if d == 0 {
            return Err(GeometryError::ZeroDimension);
        }
        if epsilon.is_negative() {
            return Err(GeometryError::NegativeEpsilon(epsilon));
        }
        let side = (Rat::one() + &epsilon) / Rat::from(k);
        if side > Rat::one() {
            return Err(GeometryError::SideTooLarge(side));
        }
        Ok(CubeClass { k, epsilon, d, side })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn epsilon(&self) -> &Rat {
        &self.epsilon
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn side(&self) -> &Rat {
        &self.side
    }

    /// `((1+eps)/k)^d`.
    pub fn volume(&self) -> Rat {
        self.side.pow(self.d as u32)
    }
}

/// A class-`k` cube at an exact base point.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PlacedCube {
    class: CubeClass,
    base: Vec<Rat>,
}

impl PlacedCube {
    /// Only the length of `base` is checked; containment in the unit bin is
    /// reported by [`verify_bin`].
    pub fn new(class: CubeClass, base: Vec<Rat>) -> Result<Self, GeometryError> {
        if base.len() != class.d {
            return Err(GeometryError::DimensionMismatch {
                expected: class.d,
                got: base.len(),
            });
        }
        Ok(PlacedCube { class, base })
    }

    pub fn class(&self) -> &CubeClass {
        &self.class
    }

    pub fn k(&self) -> u32 {
        self.class.k
    }

    pub fn d(&self) -> usize {
        self.class.d
    }

    pub fn base(&self) -> &[Rat] {
        &self.base
    }

    pub fn side(&self) -> &Rat {
        &self.class.side
    }

    /// Upper end of the cube in dimension `i`.
    pub fn end(&self, i: usize) -> Rat {
        &self.base[i] + &self.class.side
    }

    /// The open interval occupied in dimension `i`.
    pub fn interval(&self, i: usize) -> Interval {
        Interval {
            lo: self.base[i].clone(),
            hi: self.end(i),
        }
    }

    pub fn intervals(&self) -> Vec<Interval> {
        (0..self.d()).map(|i| self.interval(i)).collect()
    }

    pub fn is_contained(&self) -> bool {
        let one = Rat::one();
        self.base
            .iter()
            .all(|b| !b.is_negative() && b + &self.class.side <= one)
    }

    pub fn volume(&self) -> Rat {
        self.class.volume()
    }
}

/// Disjoint iff some dimension separates the two open cubes.
pub fn cubes_disjoint(a: &PlacedCube, b: &PlacedCube) -> Result<bool, GeometryError> {
    if a.d() != b.d() {
        return Err(GeometryError::DimensionMismatch {
            expected: a.d(),
            got: b.d(),
        });
    }
    Ok(cubes_disjoint_unchecked(a, b))
}

pub(crate) fn cubes_disjoint_unchecked(a: &PlacedCube, b: &PlacedCube) -> bool {
    (0..a.d()).any(|i| {
        let a_hi = a.end(i);
        let b_hi = b.end(i);
        a_hi <= b.base[i] || b_hi <= a.base[i]
    })
}

pub fn cube_volume(c: &PlacedCube) -> Rat {
    c.volume()
}

/// A unit bin `[0,1]^d` holding placed cubes. Disjointness is not enforced on
/// insertion; see [`verify_bin`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bin {
    d: usize,
    cubes: Vec<PlacedCube>,
}

impl Bin {
    pub fn new(d: usize) -> Self {
        Bin {
            d,
            cubes: Vec::new(),
        }
    }

    pub fn with_cubes(d: usize, cubes: Vec<PlacedCube>) -> Result<Self, GeometryError> {
        let mut bin = Bin::new(d);
        for c in cubes {
            bin.push(c)?;
        }
        Ok(bin)
    }

    pub fn push(&mut self, cube: PlacedCube) -> Result<(), GeometryError> {
        if cube.d() != self.d {
            return Err(GeometryError::DimensionMismatch {
                expected: self.d,
                got: cube.d(),
            });
        }
        self.cubes.push(cube);
        Ok(())
    }

    pub fn remove(&mut self, index: usize) -> PlacedCube {
        self.cubes.remove(index)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn cubes(&self) -> &[PlacedCube] {
        &self.cubes
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// True iff `cube` is inside the bin and disjoint from every cube here.
    pub fn fits(&self, cube: &PlacedCube) -> bool {
        cube.d() == self.d
            && cube.is_contained()
            && self.cubes.iter().all(|c| cubes_disjoint_unchecked(c, cube))
    }
}

pub fn occupied_volume(bin: &Bin) -> Rat {
    bin.cubes.iter().map(PlacedCube::volume).sum()
}

/// Outcome of [`verify_bin`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinReport {
    pub containment_ok: bool,
    pub disjoint_ok: bool,
    /// Smallest index of a cube sticking out of `[0,1]^d`.
    pub first_uncontained: Option<usize>,
    /// Lexicographically smallest overlapping pair `(i, j)`, `i < j`.
    pub offending_pair: Option<(usize, usize)>,
}

impl BinReport {
    pub fn is_ok(&self) -> bool {
        self.containment_ok && self.disjoint_ok
    }
}

/// Above this many cubes the pairwise scan is replaced by a sweep over the
/// first coordinate.
pub const SWEEP_THRESHOLD: usize = 48;

/// Checks containment and pairwise disjointness with exact arithmetic.
pub fn verify_bin(bin: &Bin) -> BinReport {
    let first_uncontained = bin.cubes.iter().position(|c| !c.is_contained());
    let offending_pair = first_overlap_any(&bin.cubes, bin.cubes.len() > SWEEP_THRESHOLD);
    BinReport {
        containment_ok: first_uncontained.is_none(),
        disjoint_ok: offending_pair.is_none(),
        first_uncontained,
        offending_pair,
    }
}

/// Every cube as integer `(lo, hi)` pairs over one common denominator.
/// Comparisons between scaled integers are exactly the rational ones.
fn scaled<T>(cubes: &[PlacedCube], conv: impl Fn(BigInt) -> Option<T>) -> Option<Vec<Vec<(T, T)>>> {
    let mut den = BigInt::one();
    for c in cubes {
        den = den.lcm(c.side().denom());
        for b in c.base() {
            den = den.lcm(b.denom());
        }
    }
    cubes
        .iter()
        .map(|c| {
            let side = c.side().numer() * (&den / c.side().denom());
            c.base()
                .iter()
                .map(|b| {
                    let lo = b.numer() * (&den / b.denom());
                    let hi = &lo + &side;
                    Some((conv(lo)?, conv(hi)?))
                })
                .collect()
        })
        .collect()
}

fn boxes_overlap<T: Ord>(a: &[(T, T)], b: &[(T, T)]) -> bool {
    a.iter().zip(b).all(|(x, y)| x.1 > y.0 && y.1 > x.0)
}

fn first_overlap<T: Ord>(boxes: &[Vec<(T, T)>], sweep: bool) -> Option<(usize, usize)> {
    if !sweep {
        for i in 0..boxes.len() {
            for j in i + 1..boxes.len() {
                if boxes_overlap(&boxes[i], &boxes[j]) {
                    return Some((i, j));
                }
            }
        }
        return None;
    }
    // sort-and-sweep on dimension 0; only pairs whose first-coordinate
    // intervals overlap get the full test
    let mut order: Vec<usize> = (0..boxes.len()).collect();
    order.sort_by(|&a, &b| boxes[a][0].0.cmp(&boxes[b][0].0).then(a.cmp(&b)));
    let mut best: Option<(usize, usize)> = None;
    for (pos, &i) in order.iter().enumerate() {
        for &j in &order[pos + 1..] {
            if boxes[j][0].0 >= boxes[i][0].1 {
                break;
            }
            if boxes_overlap(&boxes[i], &boxes[j]) {
                let pair = (i.min(j), i.max(j));
                if best.is_none_or(|b| pair < b) {
                    best = Some(pair);
                }
            }
        }
    }
    best
}

fn first_overlap_any(cubes: &[PlacedCube], sweep: bool) -> Option<(usize, usize)> {
    if cubes.first().is_none_or(|c| c.d() == 0) {
        return None;
    }
    match scaled(cubes, |x| x.to_i128()) {
        Some(b) => first_overlap(&b, sweep),
        None => first_overlap(&scaled(cubes, Some).expect("BigInt never fails"), sweep),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn r(n: i64, d: i64) -> Rat {
        Rat::new(n, d)
    }

    fn iv(a: Rat, b: Rat) -> Interval {
        Interval::new(a, b).unwrap()
    }

    fn cube(k: u32, eps: Rat, base: Vec<Rat>) -> PlacedCube {
        let d = base.len();
        PlacedCube::new(CubeClass::new(k, eps, d).unwrap(), base).unwrap()
    }

    #[test]
    fn interval_examples() {
        assert!(intervals_disjoint(&iv(r(0, 1), r(1, 2)), &iv(r(1, 2), r(1, 1))));
        assert!(!intervals_disjoint(
            &iv(r(10, 27), r(20, 27)),
            &iv(r(17, 27), r(27, 27))
        ));
        assert!(intervals_disjoint(&iv(r(0, 1), r(5, 9)), &iv(r(17, 27), r(1, 1))));
        assert!(Interval::new(r(1, 2), r(1, 2)).is_err());
    }

    #[test]
    fn cube_disjointness_examples() {
        let e = r(1, 9);
        let a = cube(3, e.clone(), vec![r(0, 1), r(0, 1)]);
        assert!(!cubes_disjoint(&a, &a).unwrap());
        let b = cube(3, e.clone(), vec![r(10, 27), r(0, 1)]);
        assert!(cubes_disjoint(&a, &b).unwrap());
        // words (2,1) and (3,1) of class 3
        let w21 = cube(3, e.clone(), vec![r(10, 27), r(0, 1)]);
        let w31 = cube(3, e.clone(), vec![r(17, 27), r(0, 1)]);
        assert!(!cubes_disjoint(&w21, &w31).unwrap());
        let c1 = cube(3, e, vec![r(0, 1)]);
        assert!(matches!(
            cubes_disjoint(&a, &c1),
            Err(GeometryError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn volume_examples() {
        assert_eq!(
            cube(2, Rat::zero(), vec![Rat::zero(); 3]).volume(),
            r(1, 8)
        );
        assert_eq!(cube(2, r(1, 3), vec![Rat::zero(); 2]).volume(), r(4, 9));
        assert_eq!(cube(3, r(1, 9), vec![Rat::zero(); 2]).volume(), r(100, 729));
    }

    #[test]
    fn class_validation() {
        assert!(CubeClass::new(1, Rat::zero(), 2).is_err());
        assert!(CubeClass::new(2, r(-1, 2), 2).is_err());
        assert!(CubeClass::new(2, r(3, 2), 2).is_err());
        assert!(CubeClass::new(2, Rat::one(), 2).is_ok());
        assert!(CubeClass::new(2, Rat::zero(), 0).is_err());
    }

    #[test]
    fn verify_bin_examples() {
        let empty = Bin::new(2);
        assert!(verify_bin(&empty).is_ok());
        assert_eq!(occupied_volume(&empty), Rat::zero());

        let c = cube(3, r(1, 9), vec![r(0, 1), r(0, 1)]);
        let twin = Bin::with_cubes(2, vec![c.clone(), c]).unwrap();
        let rep = verify_bin(&twin);
        assert!(!rep.disjoint_ok);
        assert_eq!(rep.offending_pair, Some((0, 1)));

        let out = Bin::with_cubes(2, vec![cube(2, r(1, 3), vec![r(1, 2), r(0, 1)])]).unwrap();
        let rep = verify_bin(&out);
        assert!(!rep.containment_ok);
        assert_eq!(rep.first_uncontained, Some(0));
    }

    #[test]
    fn occupied_volume_mixed() {
        let a = cube(2, Rat::zero(), vec![r(0, 1), r(0, 1)]);
        let b = cube(2, Rat::zero(), vec![r(1, 2), r(0, 1), r(0, 1)]);
        // dimension differs, so use two separate d=2/d=3 checks
        assert!(Bin::with_cubes(2, vec![a.clone(), b]).is_err());
        let quarter = a;
        let eighth_side = cube(4, Rat::zero(), vec![r(1, 2), r(1, 2)]);
        let mut bin = Bin::new(2);
        bin.push(quarter).unwrap();
        bin.push(eighth_side.clone()).unwrap();
        bin.push(cube(4, Rat::zero(), vec![r(3, 4), r(1, 2)])).unwrap();
        // 1/4 + 1/16 + 1/16
        assert_eq!(occupied_volume(&bin), r(3, 8));
    }

    #[test]
    fn sweep_agrees_with_pairwise_on_large_grid() {
        let e = Rat::zero();
        let side = r(1, 8);
        let mut cubes = Vec::new();
        for i in 0..8 {
            for j in 0..8 {
                cubes.push(cube(
                    8,
                    e.clone(),
                    vec![&side * Rat::from(i as u32), &side * Rat::from(j as u32)],
                ));
            }
        }
        let bin = Bin::with_cubes(2, cubes.clone()).unwrap();
        assert!(verify_bin(&bin).is_ok());
        cubes.push(cube(8, e, vec![r(1, 16), r(3, 16)]));
        let bin = Bin::with_cubes(2, cubes.clone()).unwrap();
        assert_eq!(first_overlap_any(&cubes, true), first_overlap_any(&cubes, false));
        // rational pairwise scan as the reference
        let naive = (0..cubes.len())
            .flat_map(|i| (i + 1..cubes.len()).map(move |j| (i, j)))
            .find(|&(i, j)| !cubes_disjoint(&cubes[i], &cubes[j]).unwrap());
        assert_eq!(naive, Some((1, 64)));
        assert_eq!(verify_bin(&bin).offending_pair, Some((1, 64)));
    }
}
