use alloc::vec::Vec;

use rand::seq::index;

use super::LanguageError;
use crate::rat::Rat;

/// Coordinate sets `F_1, ..., F_m` of size `ceil(d/2)` with small pairwise
/// intersections. Sets are sorted, 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FSets {
    pub d: usize,
    pub sets: Vec<Vec<usize>>,
    /// Every pairwise intersection is strictly below this.
    pub threshold: Rat,
    /// Whole-family draws made, the last one accepted.
    pub attempts: u64,
}

impl FSets {
    pub fn size(&self) -> usize {
        self.d.div_ceil(2)
    }

    pub fn max_pairwise_intersection(&self) -> usize {
        max_intersection(&self.sets)
    }

    pub fn rejections(&self) -> u64 {
        self.attempts.saturating_sub(1)
    }

    /// Re-checks both invariants from scratch.
    pub fn check(&self) -> bool {
        let r = self.size();
        self.sets
            .iter()
            .all(|s| s.len() == r && s.windows(2).all(|w| w[0] < w[1]) && s.iter().all(|&c| c < self.d))
            && pairs(&self.sets).all(|(a, b)| Rat::from(intersection(a, b) as u64) < self.threshold)
    }
}

/// `7d/26`.
pub fn default_threshold(d: usize) -> Rat {
    Rat::new(7 * d as i64, 26)
}

fn intersection(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

fn pairs(sets: &[Vec<usize>]) -> impl Iterator<Item = (&Vec<usize>, &Vec<usize>)> {
    sets.iter()
        .enumerate()
        .flat_map(move |(i, a)| sets[i + 1..].iter().map(move |b| (a, b)))
}

fn max_intersection(sets: &[Vec<usize>]) -> usize {
    pairs(sets).map(|(a, b)| intersection(a, b)).max().unwrap_or(0)
}

/// Draws `count` independent uniform `ceil(d/2)`-subsets of `[d]` until all
/// pairwise intersections are below `threshold`, redrawing the whole family
/// on any violation. Deterministic in `seed`.
pub fn sample_f_sets(
    d: usize,
    count: usize,
    seed: u64,
    threshold: &Rat,
    budget: u64,
) -> Result<FSets, LanguageError> {
    if d < 2 {
        return Err(LanguageError::Invalid("F-set sampling needs d >= 2"));
    }
    let r = d.div_ceil(2);
    let mut rng = crate::rng::stream(seed, "fsets");
    let mut best = usize::MAX;
    for attempt in 1..=budget {
        let sets: Vec<Vec<usize>> = (0..count)
            .map(|_| {
                let mut s = index::sample(&mut rng, d, r).into_vec();
                s.sort_unstable();
                s
            })
            .collect();
        let worst = max_intersection(&sets);
        best = best.min(worst);
        if count < 2 || Rat::from(worst as u64) < *threshold {
            let out = FSets {
                d,
                sets,
                threshold: threshold.clone(),
                attempts: attempt,
            };
            debug_assert!(out.check());
            return Ok(out);
        }
    }
    Err(LanguageError::FSetBudgetExhausted {
        d,
        count,
        attempts: budget,
        best_max_intersection: best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn d2_forces_disjoint_singletons() {
        let t = default_threshold(2);
        for seed in 0..20 {
            let f = sample_f_sets(2, 2, seed, &t, 1000).unwrap();
            assert!(f.check());
            let mut all: Vec<usize> = f.sets.concat();
            all.sort();
            assert_eq!(all, vec![0, 1]);
        }
    }

    #[test]
    fn d8_needs_many_rejections() {
        let t = default_threshold(8);
        let f = sample_f_sets(8, 8, 11, &t, 200_000).unwrap();
        assert!(f.check());
        assert!(f.max_pairwise_intersection() <= 2);
        assert!(f.rejections() > 10, "rejections {}", f.rejections());
        // a tiny budget reports the diagnostic instead
        let err = sample_f_sets(8, 8, 11, &t, 3).unwrap_err();
        assert!(matches!(
            err,
            LanguageError::FSetBudgetExhausted { d: 8, count: 8, attempts: 3, .. }
        ));
    }

    #[test]
    fn deterministic_in_seed() {
        let t = default_threshold(20);
        let a = sample_f_sets(20, 5, 42, &t, 10_000).unwrap();
        let b = sample_f_sets(20, 5, 42, &t, 10_000).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn d100_with_the_sets_actually_used() {
        // only F_2..F_S enter the construction; S = 5 at d = 100
        let t = default_threshold(100);
        let f = sample_f_sets(100, 4, 1, &t, 10_000).unwrap();
        assert!(f.check());
        assert!(f.sets.iter().all(|s| s.len() == 50));
    }
}
