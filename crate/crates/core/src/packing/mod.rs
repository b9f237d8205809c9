//! Placing words as cubes: base-point coordinates, the packing induced by a
//! separated family, homogeneous grid bins, and the weight functional.

mod drivers;

pub use drivers::{
    lemma_a_driver, lemma_b_driver, ClassStat, Construction, DriverOptions, LemmaReport,
};

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::ControlFlow;

use num_bigint::BigUint;

use crate::geometry::{verify_bin, Bin, BinReport, CubeClass, GeometryError, PlacedCube};
use crate::languages::{LanguageError, SeparatedFamily, Word};
use crate::rat::Rat;

/// Most cubes `Selection::All` will materialize.
pub const MATERIALIZE_CAP: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PackingError {
    #[error("base coordinate needs k >= 2 and 1 <= j <= k, got k = {k}, j = {j}")]
    CoordinateIndex { k: u32, j: u32 },
    #[error("epsilon = {epsilon} outside the allowed range ({reason})")]
    EpsilonOutOfRange { epsilon: Rat, reason: &'static str },
    #[error("gap inequality y(k-1) < x'(k') fails for classes {k} < {k2}")]
    GapViolated { k: u32, k2: u32 },
    #[error("packing failed verification: {0:?}")]
    Verification(BinReport),
    #[error("selecting all words needs {0} cubes, above the materialization cap")]
    TooLarge(BigUint),
    #[error("word {0:?} is not in its class language")]
    WordNotInLanguage(Word),
    #[error("cubes in one typed packing must share epsilon and dimension")]
    MixedCubes,
    #[error(transparent)]
    Language(#[from] LanguageError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

fn check_open_range(k: u32, eps: &Rat) -> Result<(), PackingError> {
    if !eps.is_positive() {
        return Err(PackingError::EpsilonOutOfRange {
            epsilon: eps.clone(),
            reason: "epsilon must be positive",
        });
    }
    if *eps >= Rat::new(1, k as i64 - 1) {
        return Err(PackingError::EpsilonOutOfRange {
            epsilon: eps.clone(),
            reason: "base coordinates need epsilon < 1/(k-1)",
        });
    }
    Ok(())
}

/// `x^(k)(j)`: `(j-1)(1+eps)/k` for `j < k`, and `1 - (1+eps)/k` for `j = k`.
pub fn base_coordinate(k: u32, j: u32, eps: &Rat) -> Result<Rat, PackingError> {
    if k < 2 || j == 0 || j > k {
        return Err(PackingError::CoordinateIndex { k, j });
    }
    check_open_range(k, eps)?;
    Ok(base_coordinate_unchecked(k, j, eps))
}

fn base_coordinate_unchecked(k: u32, j: u32, eps: &Rat) -> Rat {
    let side = (Rat::one() + eps) / Rat::from(k);
    if j < k {
        side * Rat::from(j - 1)
    } else {
        Rat::one() - side
    }
}

/// `y^(k)(j) = x^(k)(j) + (1+eps)/k`.
pub fn end_coordinate(k: u32, j: u32, eps: &Rat) -> Result<Rat, PackingError> {
    let x = base_coordinate(k, j, eps)?;
    Ok(x + (Rat::one() + eps) / Rat::from(k))
}

/// `y^(k)(k-1) < x^(k')(k')`: the last gapped slot of class `k` ends before
/// the top slot of class `k'` starts.
pub fn gap_holds(k: u32, k2: u32, eps: &Rat) -> bool {
    let side = (Rat::one() + eps) / Rat::from(k);
    let y = side * Rat::from(k - 1);
    let x = Rat::one() - (Rat::one() + eps) / Rat::from(k2);
    y < x
}

/// The cube `x^(k)[w] + Q_k^d(eps)`.
pub fn place_word(word: &Word, eps: &Rat) -> Result<PlacedCube, PackingError> {
    let k = word.k();
    check_open_range(k, eps)?;
    let base = word
        .letters()
        .iter()
        .map(|&j| base_coordinate_unchecked(k, j, eps))
        .collect();
    let class = CubeClass::new(k, eps.clone(), word.d())?;
    Ok(PlacedCube::new(class, base)?)
}

/// Which words of each language become cubes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selection {
    /// Every word; refused above [`MATERIALIZE_CAP`] cubes.
    All,
    /// The first `n` words of each language in lexicographic order.
    PerClassBudget(usize),
    /// Exactly these words, each checked for membership.
    Words(Vec<Word>),
}

/// A verified single-bin packing in which every cube is a copy of some
/// `Q_k^d(eps)` with one common `eps`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedPacking {
    d: usize,
    epsilon: Rat,
    bin: Bin,
    nu: BTreeMap<u32, u64>,
    weight: Rat,
}

impl TypedPacking {
    /// Derives the class counts and weight from a bin, which must verify.
    pub fn from_bin(bin: Bin) -> Result<Self, PackingError> {
        let report = verify_bin(&bin);
        if !report.is_ok() {
            return Err(PackingError::Verification(report));
        }
        let d = bin.d();
        let epsilon = match bin.cubes().first() {
            Some(c) => c.class().epsilon().clone(),
            None => Rat::zero(),
        };
        if bin.cubes().iter().any(|c| *c.class().epsilon() != epsilon) {
            return Err(PackingError::MixedCubes);
        }
        let mut nu = BTreeMap::new();
        for c in bin.cubes() {
            *nu.entry(c.k()).or_insert(0u64) += 1;
        }
        let weight = weight_from_counts(d, &nu);
        Ok(TypedPacking {
            d,
            epsilon,
            bin,
            nu,
            weight,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn epsilon(&self) -> &Rat {
        &self.epsilon
    }

    pub fn bin(&self) -> &Bin {
        &self.bin
    }

    /// `nu_k`: copies of `Q_k^d(eps)` per class.
    pub fn nu(&self) -> &BTreeMap<u32, u64> {
        &self.nu
    }

    pub fn nu_k(&self, k: u32) -> u64 {
        self.nu.get(&k).copied().unwrap_or(0)
    }

    /// `K(U)`: classes present.
    pub fn classes(&self) -> Vec<u32> {
        self.nu.iter().filter(|(_, &n)| n > 0).map(|(&k, _)| k).collect()
    }

    pub fn k_max(&self) -> Option<u32> {
        self.classes().last().copied()
    }

    /// `w(U) = sum_k nu_k / (k-1)^d`.
    pub fn weight(&self) -> &Rat {
        &self.weight
    }

    /// The weight summed cube by cube, as an independent route.
    pub fn weight_by_cubes(&self) -> Rat {
        self.bin
            .cubes()
            .iter()
            .map(|c| Rat::from(BigUint::from(c.k() - 1).pow(self.d as u32)).recip())
            .sum()
    }

    pub fn len(&self) -> usize {
        self.bin.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bin.is_empty()
    }
}

fn weight_from_counts(d: usize, nu: &BTreeMap<u32, u64>) -> Rat {
    nu.iter()
        .map(|(&k, &n)| Rat::from(n) / Rat::from(BigUint::from(k - 1).pow(d as u32)))
        .sum()
}

/// The packing `U_eps(L)`: one cube `Q(w)` for every selected word.
///
/// `eps` must satisfy `0 < eps <= k_max^-2`, and the gap inequality is checked
/// for every pair of classes before anything is placed. The result is
/// verified; a failure means the family was not gapped and separated.
pub fn build_u(
    family: &SeparatedFamily,
    eps: &Rat,
    selection: &Selection,
) -> Result<TypedPacking, PackingError> {
    let d = family.d;
    if let Some(k_max) = family.max_class() {
        if !eps.is_positive() || *eps > Rat::new(1, (k_max as i64).pow(2)) {
            return Err(PackingError::EpsilonOutOfRange {
                epsilon: eps.clone(),
                reason: "need 0 < epsilon <= k_max^-2",
            });
        }
    }
    for (i, &k) in family.classes.iter().enumerate() {
        for &k2 in &family.classes[i + 1..] {
            if !gap_holds(k, k2, eps) {
                return Err(PackingError::GapViolated { k, k2 });
            }
        }
    }

    let mut words: Vec<Word> = Vec::new();
    match selection {
        Selection::All => {
            let total: BigUint = family.languages.iter().map(|l| l.len()).sum();
            if total > BigUint::from(MATERIALIZE_CAP) {
                return Err(PackingError::TooLarge(total));
            }
            for l in &family.languages {
                for w in l.words(None) {
                    words.push(Word::new(l.k(), w)?);
                }
            }
        }
        Selection::PerClassBudget(n) => {
            for l in &family.languages {
                let mut taken = 0;
                let _ = l.for_each_word(|w| {
                    if taken >= *n {
                        return ControlFlow::Break(());
                    }
                    words.push(Word::new(l.k(), w.to_vec()).expect("language words are valid"));
                    taken += 1;
                    ControlFlow::Continue(())
                });
            }
        }
        Selection::Words(ws) => {
            for w in ws {
                let ok = w.d() == d
                    && family
                        .language(w.k())
                        .is_some_and(|l| l.contains(w.letters()));
                if !ok {
                    return Err(PackingError::WordNotInLanguage(w.clone()));
                }
                words.push(w.clone());
            }
        }
    }

    let mut bin = Bin::new(d);
    for w in &words {
        bin.push(place_word(w, eps)?)?;
    }
    let mut packing = TypedPacking::from_bin(bin)?;
    packing.epsilon = eps.clone();
    Ok(packing)
}

/// A bin holding `(k-1)^d` class-`k` cubes on the grid `i (1+eps)/k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomogeneousBin {
    pub k: u32,
    pub d: usize,
    pub epsilon: Rat,
    pub bin: Bin,
}

/// Base of grid slot `slot` (mixed radix `k-1`, last coordinate fastest).
pub fn grid_slot_base(k: u32, d: usize, eps: &Rat, slot: u64) -> Vec<Rat> {
    let side = (Rat::one() + eps) / Rat::from(k);
    let radix = (k - 1) as u64;
    let mut digits = vec![0u64; d];
    let mut s = slot;
    for i in (0..d).rev() {
        digits[i] = s % radix;
        s /= radix;
    }
    digits.iter().map(|&g| &side * Rat::from(g)).collect()
}

/// `(k-1)^d` as a `u64`, if it fits.
pub fn grid_capacity(k: u32, d: usize) -> Option<u64> {
    ((k - 1) as u64).checked_pow(d as u32)
}

/// Validates `0 < eps <= 1/(k-1)`, the range where the grid fits.
pub fn check_homogeneous_epsilon(k: u32, eps: &Rat) -> Result<(), PackingError> {
    if k < 2 {
        return Err(PackingError::CoordinateIndex { k, j: 0 });
    }
    if !eps.is_positive() || *eps > Rat::new(1, k as i64 - 1) {
        return Err(PackingError::EpsilonOutOfRange {
            epsilon: eps.clone(),
            reason: "homogeneous bins need 0 < epsilon <= 1/(k-1)",
        });
    }
    Ok(())
}

pub fn build_homogeneous(k: u32, d: usize, eps: &Rat) -> Result<HomogeneousBin, PackingError> {
    check_homogeneous_epsilon(k, eps)?;
    let cap = grid_capacity(k, d).filter(|&c| c <= MATERIALIZE_CAP).ok_or_else(|| {
        PackingError::TooLarge(BigUint::from(k - 1).pow(d as u32))
    })?;
    let class = CubeClass::new(k, eps.clone(), d)?;
    let mut bin = Bin::new(d);
    for slot in 0..cap {
        bin.push(PlacedCube::new(class.clone(), grid_slot_base(k, d, eps, slot))?)?;
    }
    let report = verify_bin(&bin);
    if !report.is_ok() {
        return Err(PackingError::Verification(report));
    }
    Ok(HomogeneousBin {
        k,
        d,
        epsilon: eps.clone(),
        bin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{cubes_disjoint, intervals_disjoint, occupied_volume, Interval};
    use crate::languages::{warmup_family, Language};

    fn r(n: i64, d: i64) -> Rat {
        Rat::new(n, d)
    }

    #[test]
    fn base_coordinate_examples() {
        let e = r(1, 9);
        for k in 2..6 {
            assert_eq!(base_coordinate(k, 1, &e).unwrap(), Rat::zero());
            assert_eq!(end_coordinate(k, k, &e).unwrap(), Rat::one());
        }
        assert_eq!(base_coordinate(3, 2, &e).unwrap(), r(10, 27));
        assert_eq!(base_coordinate(3, 3, &e).unwrap(), r(17, 27));
        assert_eq!(end_coordinate(3, 2, &e).unwrap(), r(20, 27));
        assert!(base_coordinate(3, 4, &e).is_err());
        assert!(base_coordinate(3, 0, &e).is_err());
        assert!(base_coordinate(3, 1, &r(1, 2)).is_err());
        assert!(base_coordinate(3, 1, &Rat::zero()).is_err());
    }

    #[test]
    fn ordering_chain_holds() {
        for k in 2..9u32 {
            let e = Rat::new(1, (k as i64).pow(2));
            let x = |j| base_coordinate(k, j, &e).unwrap();
            let y = |j| end_coordinate(k, j, &e).unwrap();
            assert_eq!(x(1), Rat::zero());
            for j in 1..k - 1 {
                assert_eq!(y(j), x(j + 1));
                assert!(x(j) < y(j));
            }
            assert!(x(k - 1) < x(k));
            assert!(x(k) < y(k - 1));
            assert!(y(k - 1) < y(k));
            assert_eq!(y(k), Rat::one());
        }
    }

    #[test]
    fn place_word_examples() {
        let e = r(1, 9);
        let w = Word::new(3, vec![2, 3]).unwrap();
        let c = place_word(&w, &e).unwrap();
        assert_eq!(c.base(), &[r(10, 27), r(17, 27)]);
        let ones = Word::new(4, vec![1, 1, 1]).unwrap();
        assert!(place_word(&ones, &r(1, 16)).unwrap().base().iter().all(Rat::is_zero));
        // cube equals the product of the slot intervals
        for (i, &j) in w.letters().iter().enumerate() {
            let slot = Interval::new(
                base_coordinate(3, j, &e).unwrap(),
                end_coordinate(3, j, &e).unwrap(),
            )
            .unwrap();
            assert_eq!(c.interval(i), slot);
        }
    }

    #[test]
    fn overlapping_slot_pair_gives_overlapping_cubes() {
        let e = r(1, 9);
        let a = place_word(&Word::new(3, vec![2, 1]).unwrap(), &e).unwrap();
        let b = place_word(&Word::new(3, vec![3, 1]).unwrap(), &e).unwrap();
        assert!(!cubes_disjoint(&a, &b).unwrap());
        assert!(!intervals_disjoint(&a.interval(0), &b.interval(0)));
    }

    #[test]
    fn warmup_u_d3() {
        let fam = warmup_family(3).unwrap();
        let u = build_u(&fam, &r(1, 9), &Selection::All).unwrap();
        assert_eq!(u.len(), 5);
        assert_eq!(u.nu_k(2), 1);
        assert_eq!(u.nu_k(3), 4);
        assert_eq!(u.classes(), vec![2, 3]);
        assert_eq!(u.k_max(), Some(3));
        assert_eq!(*u.weight(), r(3, 2));
        assert_eq!(u.weight_by_cubes(), r(3, 2));
        assert!(verify_bin(u.bin()).is_ok());
    }

    #[test]
    fn build_u_rejects_bad_epsilon_and_bad_words() {
        let fam = warmup_family(3).unwrap();
        assert!(matches!(
            build_u(&fam, &r(1, 8), &Selection::All),
            Err(PackingError::EpsilonOutOfRange { .. })
        ));
        assert!(build_u(&fam, &Rat::zero(), &Selection::All).is_err());
        let stray = Word::new(3, vec![3, 3, 3]).unwrap();
        assert!(matches!(
            build_u(&fam, &r(1, 9), &Selection::Words(vec![stray])),
            Err(PackingError::WordNotInLanguage(_))
        ));
    }

    #[test]
    fn build_u_refuses_non_separated_family() {
        let l2 = Language::explicit(2, 2, vec![vec![2, 1]]).unwrap();
        let l3 = Language::explicit(3, 2, vec![vec![1, 3]]).unwrap();
        let fam = SeparatedFamily::explicit(2, vec![l2, l3]).unwrap();
        assert!(build_u(&fam, &r(1, 9), &Selection::All).is_ok());
        let l2 = Language::explicit(2, 2, vec![vec![1, 1]]).unwrap();
        let l3 = Language::explicit(3, 2, vec![vec![2, 2]]).unwrap();
        let fam = SeparatedFamily::explicit(2, vec![l2, l3]).unwrap();
        assert!(matches!(
            build_u(&fam, &r(1, 9), &Selection::All),
            Err(PackingError::Verification(_))
        ));
    }

    #[test]
    fn budget_selection_takes_lexicographic_prefix() {
        let fam = warmup_family(4).unwrap();
        let u = build_u(&fam, &r(1, 16), &Selection::PerClassBudget(3)).unwrap();
        assert_eq!(u.nu_k(2), 1);
        assert_eq!(u.nu_k(3), 3);
        assert_eq!(u.nu_k(4), 3);
        assert_eq!(*u.weight(), u.weight_by_cubes());
    }

    #[test]
    fn homogeneous_examples() {
        let h = build_homogeneous(2, 2, &r(1, 3)).unwrap();
        assert_eq!(h.bin.len(), 1);
        assert_eq!(*h.bin.cubes()[0].side(), r(2, 3));
        let h = build_homogeneous(3, 2, &r(1, 9)).unwrap();
        assert_eq!(h.bin.len(), 4);
        assert_eq!(occupied_volume(&h.bin), r(400, 729));
        // boundary epsilon = 1/(k-1): cubes touch, still a packing
        let h = build_homogeneous(3, 2, &r(1, 2)).unwrap();
        assert_eq!(occupied_volume(&h.bin), Rat::one());
        assert!(build_homogeneous(3, 2, &r(3, 5)).is_err());
        assert!(build_homogeneous(3, 2, &Rat::zero()).is_err());
    }

    #[test]
    fn gap_holds_at_s_minus_two() {
        for s in 3..10u32 {
            let e = Rat::new(1, (s as i64).pow(2));
            for k in 2..s {
                for k2 in k + 1..=s {
                    assert!(gap_holds(k, k2, &e));
                }
            }
        }
        // large epsilon breaks it: k=2, k'=3, eps=1/2: y=3/4, x=1/2
        assert!(!gap_holds(2, 3, &r(1, 2)));
    }
}
