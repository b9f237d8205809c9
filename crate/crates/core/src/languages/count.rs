//! Counting core words that are not bad.
//!
//! A core word over `[k] \ {k-1}` on `|F|` positions is bad for an avoid set
//! `J` if it never uses letter `k` on `J`. Inclusion-exclusion over subsets
//! `T` of the avoid sets gives the exact number of words bad for none:
//!
//! `sum_T (-1)^|T| (k-2)^|U_T| (k-1)^(|F| - |U_T|)`, `U_T` the union of `T`.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{Signed, Zero};
use rand::Rng;

use super::{core_alphabet, is_bad_word, LanguageError};

/// Default cap on the number of inclusion-exclusion terms.
pub const DEFAULT_TERM_CAP: u64 = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountMode {
    /// Exact count; fails if there are more than `term_cap` terms.
    Exact { term_cap: u64 },
    /// Exact when within `term_cap`, otherwise a Monte Carlo estimate.
    Auto { term_cap: u64, samples: u64, seed: u64 },
}

impl CountMode {
    pub fn exact() -> Self {
        CountMode::Exact {
            term_cap: DEFAULT_TERM_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GoodWordCount {
    Exact(BigUint),
    Estimate {
        good: u64,
        samples: u64,
        /// `(k-1)^|F|`, the number of candidate words.
        total: BigUint,
    },
}

impl GoodWordCount {
    pub fn exact_value(&self) -> Option<&BigUint> {
        match self {
            GoodWordCount::Exact(n) => Some(n),
            GoodWordCount::Estimate { .. } => None,
        }
    }
}

/// Small bitset over core positions.
#[derive(Clone)]
struct Bits(Vec<u64>);

impl Bits {
    fn from_positions(len: usize, pos: &[usize]) -> Self {
        let mut b = vec![0u64; len.div_ceil(64).max(1)];
        for &p in pos {
            b[p / 64] |= 1 << (p % 64);
        }
        Bits(b)
    }

    fn union(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a | b).collect())
    }

    fn count(&self) -> u32 {
        self.0.iter().map(|w| w.count_ones()).sum()
    }
}

/// Number of good words of length `f_len` over `[k] \ {k-1}` for the given
/// avoid sets (positions into the core word).
pub fn count_good_words(
    k: u32,
    f_len: usize,
    j_sets: &[Vec<usize>],
    mode: CountMode,
) -> Result<GoodWordCount, LanguageError> {
    if k < 2 {
        return Err(LanguageError::ClassTooSmall(k));
    }
    if j_sets.iter().flatten().any(|&p| p >= f_len) {
        return Err(LanguageError::Invalid("avoid position outside the core"));
    }
    let term_cap = match mode {
        CountMode::Exact { term_cap } | CountMode::Auto { term_cap, .. } => term_cap,
    };
    let terms_fit = j_sets.len() < 64 && (1u64 << j_sets.len()) <= term_cap;
    if terms_fit {
        return Ok(GoodWordCount::Exact(inclusion_exclusion(k, f_len, j_sets)));
    }
    match mode {
        CountMode::Exact { term_cap } => Err(LanguageError::TermCapExceeded {
            sets: j_sets.len(),
            cap: term_cap,
        }),
        CountMode::Auto { samples, seed, .. } => {
            let mut rng = crate::rng::stream(seed, "good-words");
            Ok(estimate_good_words(k, f_len, j_sets, samples, &mut rng))
        }
    }
}

fn inclusion_exclusion(k: u32, f_len: usize, j_sets: &[Vec<usize>]) -> BigUint {
    let bits: Vec<Bits> = j_sets
        .iter()
        .map(|s| Bits::from_positions(f_len, s))
        .collect();
    let empty = Bits::from_positions(f_len, &[]);
    let hit_free = BigInt::from(k - 2);
    let any = BigInt::from(k - 1);
    let mut total = BigInt::zero();
    // depth-first over subsets, carrying the running union
    let mut stack: Vec<(usize, Bits, bool)> = vec![(0, empty, false)];
    while let Some((next, union, odd)) = stack.pop() {
        let u = union.count();
        let term = hit_free.pow(u) * any.pow(f_len as u32 - u);
        if odd {
            total -= term;
        } else {
            total += term;
        }
        for (i, b) in bits.iter().enumerate().skip(next) {
            stack.push((i + 1, union.union(b), !odd));
        }
    }
    debug_assert!(!total.is_negative());
    total.to_biguint().unwrap_or_default()
}

/// Monte Carlo estimate from `samples` uniform candidate words.
pub fn estimate_good_words<R: Rng + ?Sized>(
    k: u32,
    f_len: usize,
    j_sets: &[Vec<usize>],
    samples: u64,
    rng: &mut R,
) -> GoodWordCount {
    let alphabet = core_alphabet(k);
    let mut v = vec![0u32; f_len];
    let mut good = 0;
    for _ in 0..samples {
        for x in v.iter_mut() {
            *x = alphabet[rng.gen_range(0..alphabet.len())];
        }
        if j_sets.iter().all(|s| !is_bad_word(&v, k, s)) {
            good += 1;
        }
    }
    GoodWordCount::Estimate {
        good,
        samples,
        total: BigUint::from(k - 1).pow(f_len as u32),
    }
}

/// `good / samples * total`, for reporting.
pub fn estimate_value(good: u64, samples: u64, total: &BigUint) -> f64 {
    if samples == 0 {
        return 0.0;
    }
    let t = BigInt::from_biguint(Sign::Plus, total.clone());
    let t: f64 = num_traits::ToPrimitive::to_f64(&t).unwrap_or(f64::INFINITY);
    t * good as f64 / samples as f64
}

#[cfg(test)]
mod tests {
    use super::super::brute_force_good;
    use super::*;

    #[test]
    fn worked_example() {
        // k=3, F={1,2,3}, J(2,3)={1,2}: 8 words over {1,3}, 2 of them avoid 3 on both
        let n = count_good_words(3, 3, &[vec![0, 1]], CountMode::exact()).unwrap();
        assert_eq!(n, GoodWordCount::Exact(BigUint::from(6u32)));
    }

    #[test]
    fn no_avoid_sets() {
        let n = count_good_words(2, 5, &[], CountMode::exact()).unwrap();
        assert_eq!(n, GoodWordCount::Exact(BigUint::from(1u32)));
        let n = count_good_words(4, 3, &[], CountMode::exact()).unwrap();
        assert_eq!(n, GoodWordCount::Exact(BigUint::from(27u32)));
    }

    #[test]
    fn cap_errors_and_auto_falls_back() {
        let sets: Vec<Vec<usize>> = (0..5).map(|i| vec![i]).collect();
        let err = count_good_words(7, 6, &sets, CountMode::Exact { term_cap: 8 });
        assert!(matches!(err, Err(LanguageError::TermCapExceeded { sets: 5, cap: 8 })));
        let est = count_good_words(
            7,
            6,
            &sets,
            CountMode::Auto { term_cap: 8, samples: 20_000, seed: 3 },
        )
        .unwrap();
        let GoodWordCount::Estimate { good, samples, total } = est else {
            panic!("expected estimate")
        };
        assert_eq!(total, BigUint::from(6u32.pow(6)));
        // every one of the first five positions must be 7: (1/6)^5 * 6^6 = 6 words
        let exact = brute_force_good(7, 6, &sets);
        assert_eq!(exact, BigUint::from(6u32));
        let est = estimate_value(good, samples, &total);
        assert!(est < 60.0, "estimate {est}");
    }

    #[test]
    fn empty_avoid_set_makes_everything_bad() {
        let n = count_good_words(3, 2, &[vec![]], CountMode::exact()).unwrap();
        assert_eq!(n, GoodWordCount::Exact(BigUint::zero()));
    }
}
