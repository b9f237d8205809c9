//! Families of gapped languages that are pairwise separated, and the two ways
//! of building them: the explicit warm-up family and the randomized
//! good-word construction over sampled coordinate sets.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
use rand::Rng;

use super::fsets::{default_threshold, sample_f_sets, FSets};
use super::{
    are_separated, for_each_good_word, is_gapped, sampled_separation, AvoidSet, Language,
    LanguageError, SeparationCheck,
};
use crate::rat::Rat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyKind {
    /// One fixed coordinate per class carries the class letter.
    Warmup,
    /// Randomized construction over classes `2..=S`.
    Consecutive,
    /// Randomized construction over powers of two `2, 4, ..., 2^(S'-1)`.
    PowersOfTwo,
    /// Supplied by the caller.
    Explicit,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Warmup => "warmup",
            FamilyKind::Consecutive => "consecutive",
            FamilyKind::PowersOfTwo => "powers-of-two",
            FamilyKind::Explicit => "explicit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BuildMode {
    /// Materialize every good core word.
    Enumerate,
    /// Keep the good-word predicate and count exactly.
    Implicit,
    /// Enumerate classes `k <= 3` that fit under the cap, implicit otherwise.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyOptions {
    /// Pairwise `F`-set intersection bound; `7d/26` when `None`.
    pub threshold: Option<Rat>,
    pub fset_budget: u64,
    /// Largest `(k-1)^|F|` that enumerate mode will materialize.
    pub enumerate_cap: u64,
}

impl Default for FamilyOptions {
    fn default() -> Self {
        FamilyOptions {
            threshold: None,
            fset_budget: 200_000,
            enumerate_cap: 1 << 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairCheck {
    pub k: u32,
    pub k2: u32,
    pub check: Result<SeparationCheck, LanguageError>,
}

impl PairCheck {
    pub fn separated(&self) -> bool {
        matches!(&self.check, Ok(c) if c.separated)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyCertificate {
    pub gapped: Vec<(u32, bool)>,
    pub pairs: Vec<PairCheck>,
}

impl FamilyCertificate {
    pub fn is_ok(&self) -> bool {
        self.gapped.iter().all(|g| g.1) && self.pairs.iter().all(PairCheck::separated)
    }
}

/// A family `(L_k)` indexed by an increasing list of classes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SeparatedFamily {
    pub d: usize,
    pub kind: FamilyKind,
    pub classes: Vec<u32>,
    pub languages: Vec<Language>,
    pub fsets: Option<FSets>,
    pub seed: Option<u64>,
}

impl SeparatedFamily {
    /// Wraps caller-supplied languages; classes must be strictly increasing.
    pub fn explicit(d: usize, languages: Vec<Language>) -> Result<Self, LanguageError> {
        for w in languages.windows(2) {
            if w[0].k() >= w[1].k() {
                return Err(LanguageError::ClassOrder(w[0].k(), w[1].k()));
            }
        }
        if let Some(l) = languages.iter().find(|l| l.d() != d) {
            return Err(LanguageError::DimensionMismatch(d, l.d()));
        }
        Ok(SeparatedFamily {
            d,
            kind: FamilyKind::Explicit,
            classes: languages.iter().map(Language::k).collect(),
            languages,
            fsets: None,
            seed: None,
        })
    }

    pub fn language(&self, k: u32) -> Option<&Language> {
        self.languages.iter().find(|l| l.k() == k)
    }

    pub fn max_class(&self) -> Option<u32> {
        self.classes.last().copied()
    }

    /// `sum_k |L_k| / (k-1)^d` over the full languages.
    pub fn weight(&self) -> Rat {
        self.languages
            .iter()
            .map(|l| {
                let den = BigUint::from(l.k() - 1).pow(self.d as u32);
                Rat::from(l.len()) / Rat::from(den)
            })
            .sum()
    }

    /// Gapped check per language and separation check per ordered pair.
    pub fn certify(&self) -> FamilyCertificate {
        let gapped = self
            .languages
            .iter()
            .map(|l| (l.k(), is_gapped(l).gapped))
            .collect();
        let mut pairs = Vec::new();
        for (i, a) in self.languages.iter().enumerate() {
            for b in &self.languages[i + 1..] {
                pairs.push(PairCheck {
                    k: a.k(),
                    k2: b.k(),
                    check: are_separated(a, b),
                });
            }
        }
        FamilyCertificate { gapped, pairs }
    }

    /// Random full-word pairs per class pair; the first failing pair if any.
    pub fn sampled_check<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        samples_per_pair: u32,
    ) -> Option<(u32, u32, Vec<u32>, Vec<u32>)> {
        for (i, a) in self.languages.iter().enumerate() {
            for b in &self.languages[i + 1..] {
                if let Some((w, w2)) = sampled_separation(a, b, rng, samples_per_pair) {
                    return Some((a.k(), b.k(), w, w2));
                }
            }
        }
        None
    }
}

/// `2, 3, ..., s`.
pub fn consecutive_classes(s: u32) -> Vec<u32> {
    (2..=s).collect()
}

/// `2^(k-1)` for `2 <= k <= s_prime`, i.e. `2, 4, ..., 2^(s_prime - 1)`.
pub fn power_of_two_classes(s_prime: u32) -> Vec<u32> {
    (2..=s_prime).map(|k| 1u32 << (k - 1)).collect()
}

/// The warm-up family over classes `2..=d`: `L_k` holds the words with
/// letter `k` at coordinate `k` (1-based) and letters below `k` elsewhere.
pub fn warmup_family(d: usize) -> Result<SeparatedFamily, LanguageError> {
    if d < 2 {
        return Err(LanguageError::Invalid("warm-up family needs d >= 2"));
    }
    let classes: Vec<u32> = consecutive_classes(d as u32);
    let coords: Vec<usize> = classes.iter().map(|&k| k as usize - 1).collect();
    warmup_with_coords(d, &classes, &coords)
}

/// Warm-up construction for arbitrary increasing classes: the `i`-th class
/// gets coordinate `i`. Needs at most `d` classes.
pub fn warmup_family_for_classes(d: usize, classes: &[u32]) -> Result<SeparatedFamily, LanguageError> {
    if classes.len() > d {
        return Err(LanguageError::Invalid("more classes than coordinates"));
    }
    let coords: Vec<usize> = (0..classes.len()).collect();
    warmup_with_coords(d, classes, &coords)
}

fn warmup_with_coords(
    d: usize,
    classes: &[u32],
    coords: &[usize],
) -> Result<SeparatedFamily, LanguageError> {
    let languages = classes
        .iter()
        .zip(coords)
        .map(|(&k, &c)| Language::product(k, d, vec![c], vec![vec![k]]))
        .collect::<Result<Vec<_>, _>>()?;
    let mut fam = SeparatedFamily::explicit(d, languages)?;
    fam.kind = FamilyKind::Warmup;
    Ok(fam)
}

/// Randomized construction: sample one coordinate set `F` per class, then let
/// `L_k` be the good words over `[k] \ {k-1}` on `F_k` times `[k-1]` on the
/// rest, where a word is good if for every smaller class `l` it has letter
/// `k` somewhere on `F_k \ F_l`.
pub fn build_separated_family(
    d: usize,
    classes: &[u32],
    kind: FamilyKind,
    seed: u64,
    mode: BuildMode,
    opts: &FamilyOptions,
) -> Result<SeparatedFamily, LanguageError> {
    if d < 2 {
        return Err(LanguageError::Invalid("family construction needs d >= 2"));
    }
    if classes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LanguageError::Invalid("classes must be strictly increasing"));
    }
    if let Some(&k) = classes.iter().find(|&&k| k < 2) {
        return Err(LanguageError::ClassTooSmall(k));
    }
    let threshold = opts.threshold.clone().unwrap_or_else(|| default_threshold(d));
    let fsets = sample_f_sets(d, classes.len(), seed, &threshold, opts.fset_budget)?;

    let mut languages = Vec::with_capacity(classes.len());
    for (c, &k) in classes.iter().enumerate() {
        let f = &fsets.sets[c];
        let avoid: Vec<AvoidSet> = (0..c)
            .map(|e| AvoidSet {
                against: classes[e],
                positions: f
                    .iter()
                    .enumerate()
                    .filter(|(_, x)| fsets.sets[e].binary_search(x).is_err())
                    .map(|(p, _)| p)
                    .collect(),
            })
            .collect();
        let candidates = BigUint::from(k - 1).pow(f.len() as u32);
        let fits = candidates <= BigUint::from(opts.enumerate_cap);
        let enumerate = match mode {
            BuildMode::Enumerate => {
                if !fits {
                    return Err(LanguageError::EnumerateCapExceeded {
                        k,
                        size: candidates,
                        cap: opts.enumerate_cap,
                    });
                }
                true
            }
            BuildMode::Implicit => false,
            BuildMode::Auto => fits && k <= 3,
        };
        let lang = if enumerate {
            let sets: Vec<&[usize]> = avoid.iter().map(|a| a.positions.as_slice()).collect();
            let mut words = Vec::new();
            let _ = for_each_good_word(k, f.len(), &sets, &mut |w: &[u32]| {
                words.push(w.to_vec());
                core::ops::ControlFlow::Continue(())
            });
            Language::product(k, d, f.clone(), words)?
        } else {
            Language::good_words(k, d, f.clone(), avoid)?
        };
        languages.push(lang);
    }
    let fam = SeparatedFamily {
        d,
        kind,
        classes: classes.to_vec(),
        languages,
        fsets: Some(fsets),
        seed: Some(seed),
    };
    if !fam.certify().is_ok() {
        return Err(LanguageError::Invalid("constructed family failed certification"));
    }
    Ok(fam)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn warmup_sizes_and_weight() {
        let f = warmup_family(3).unwrap();
        assert_eq!(f.classes, vec![2, 3]);
        assert_eq!(f.languages[0].words(None), vec![vec![1, 2, 1]]);
        assert_eq!(f.languages[1].len(), BigUint::from(4u32));
        assert_eq!(f.weight(), Rat::new(3, 2));
        assert!(f.certify().is_ok());
        assert_eq!(warmup_family(4).unwrap().weight(), Rat::new(11, 6));
        let f2 = warmup_family(2).unwrap();
        assert_eq!(f2.languages[0].words(None), vec![vec![1, 2]]);
        assert_eq!(f2.weight(), Rat::one());
    }

    #[test]
    fn class_sets() {
        assert_eq!(consecutive_classes(4), vec![2, 3, 4]);
        assert_eq!(power_of_two_classes(4), vec![2, 4, 8]);
        assert!(power_of_two_classes(1).is_empty());
    }

    #[test]
    fn randomized_family_d4() {
        for seed in 0..10 {
            let f = build_separated_family(
                4,
                &[2, 3],
                FamilyKind::Consecutive,
                seed,
                BuildMode::Enumerate,
                &FamilyOptions::default(),
            )
            .unwrap();
            assert!(f.certify().is_ok());
            // L_2: the all-2 core word times 1s, one word
            assert_eq!(f.languages[0].len(), BigUint::from(1u32));
            for l in &f.languages {
                let k = BigUint::from(l.k() - 1);
                assert_eq!(l.len(), l.core_count() * k.pow(l.free_count() as u32));
            }
        }
    }

    #[test]
    fn enumerate_cap() {
        let opts = FamilyOptions {
            enumerate_cap: 4,
            ..FamilyOptions::default()
        };
        let err = build_separated_family(
            10,
            &[2, 3],
            FamilyKind::Consecutive,
            1,
            BuildMode::Enumerate,
            &opts,
        )
        .unwrap_err();
        assert!(matches!(err, LanguageError::EnumerateCapExceeded { k: 3, .. }));
    }

    #[test]
    fn explicit_family_order_is_checked() {
        let a = Language::explicit(3, 2, vec![]).unwrap();
        let b = Language::explicit(2, 2, vec![]).unwrap();
        assert!(SeparatedFamily::explicit(2, vec![a, b]).is_err());
    }
}
