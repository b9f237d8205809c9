use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use super::{build_u, PackingError, Selection, TypedPacking};
use crate::languages::{
    build_separated_family, count_good_words, estimate_value, power_of_two_classes,
    warmup_family, warmup_family_for_classes, BuildMode, CountMode, Core, FamilyKind,
    FamilyOptions, GoodWordCount, SeparatedFamily, DEFAULT_TERM_CAP,
};
use crate::params::{class_bound_s, class_bound_s_prime, lemma_a_target, LogBase};
use crate::rat::Rat;

/// Dimension from which the consecutive-class targets are asserted.
pub const DEFAULT_D0_A: usize = 512;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DriverOptions {
    pub seed: u64,
    pub log_base: LogBase,
    pub epsilon_override: Option<Rat>,
    /// Targets are asserted only for `d >= d0`.
    pub d0: usize,
    pub mode: BuildMode,
    /// Cubes materialized per class.
    pub budget_per_class: usize,
    pub family: FamilyOptions,
    /// Samples per class when a good-word count has too many terms.
    pub estimate_samples: u64,
}

impl DriverOptions {
    /// Defaults for the consecutive-class driver.
    pub fn lemma_a() -> Self {
        DriverOptions {
            seed: 0,
            log_base: LogBase::Natural,
            epsilon_override: None,
            d0: DEFAULT_D0_A,
            mode: BuildMode::Auto,
            budget_per_class: 64,
            family: FamilyOptions::default(),
            estimate_samples: 100_000,
        }
    }

    /// Defaults for the power-of-two driver. Its `log d` target needs
    /// astronomically large `d`, so nothing is asserted unless `d0` is lowered.
    pub fn lemma_b() -> Self {
        DriverOptions {
            d0: usize::MAX,
            ..Self::lemma_a()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Construction {
    Randomized,
    /// The one-coordinate warm-up family, with the reason the randomized
    /// construction was not used.
    WarmupFallback { reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassStat {
    pub k: u32,
    /// `|F_k|`; 1 for warm-up classes.
    pub f_size: usize,
    /// Exact core count when available.
    pub core_count: Option<BigUint>,
    /// `|L_k| / (k-1)^d`, exact when the count is.
    pub class_weight: Option<Rat>,
    /// Estimated or exact class weight as a float.
    pub class_weight_f64: f64,
    /// Fraction of candidate core words that were removed as bad.
    pub bad_fraction: f64,
    pub materialized: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub d: usize,
    pub kind: FamilyKind,
    pub construction: Construction,
    pub log_base: LogBase,
    /// `S` or `S'` as computed from `d`.
    pub s: i64,
    pub epsilon: Rat,
    pub classes: Vec<u32>,
    pub fset_attempts: Option<u64>,
    pub max_intersection: Option<usize>,
    pub threshold: Option<Rat>,
    pub class_stats: Vec<ClassStat>,
    /// Weight of the full family, when every count is exact.
    pub full_weight: Option<Rat>,
    /// The same weight recomputed from `|L_k|` directly.
    pub full_weight_check: Option<Rat>,
    pub full_weight_f64: f64,
    /// The verified materialized sub-packing.
    pub packing: TypedPacking,
    /// `d / (5 log d)` or `log d`.
    pub target: f64,
    /// `(10/11)(S-1)` or `(10/11)(S'-1)`.
    pub guarantee: Rat,
    pub target_met: bool,
    pub guarantee_met: bool,
    /// Every class lost at most 1/11 of its candidates.
    pub bad_fraction_ok: bool,
    /// `weight >= ln(d-1)`, reported for warm-up fallbacks.
    pub harmonic_bound_ok: Option<bool>,
    pub d0: usize,
    /// The family the packing was drawn from.
    pub family: SeparatedFamily,
}

impl LemmaReport {
    pub fn asserted(&self) -> bool {
        self.d >= self.d0
    }

    /// False only when an asserted target is missed or the two weight
    /// computations disagree.
    pub fn passed(&self) -> bool {
        let consistent = match (&self.full_weight, &self.full_weight_check) {
            (Some(a), Some(b)) => a == b,
            _ => true,
        };
        let packing_ok = *self.packing.weight() == self.packing.weight_by_cubes();
        let targets = !self.asserted()
            || (self.target_met && self.guarantee_met && self.bad_fraction_ok);
        consistent && packing_ok && targets
    }
}

/// Builds the consecutive-class packing for dimension `d`: `S` from `d`,
/// `eps = S^-2`, the randomized family over `2..=S`, and a verified
/// sub-packing. Falls back to the warm-up family when `S < 2` or the
/// construction fails.
pub fn lemma_a_driver(d: usize, opts: &DriverOptions) -> Result<LemmaReport, PackingError> {
    check_d(d)?;
    let s = class_bound_s(d, opts.log_base);
    let attempt = if s >= 2 {
        let classes: Vec<u32> = (2..=s as u32).collect();
        build_separated_family(
            d,
            &classes,
            FamilyKind::Consecutive,
            opts.seed,
            opts.mode,
            &opts.family,
        )
        .map_err(|e| e.to_string())
    } else {
        Err(alloc::format!("S = {s} < 2"))
    };
    let (family, construction) = match attempt {
        Ok(f) => (f, Construction::Randomized),
        Err(reason) => (warmup_family(d)?, Construction::WarmupFallback { reason }),
    };
    let k_max = family.max_class().unwrap_or(2) as i64;
    let eps = opts
        .epsilon_override
        .clone()
        .unwrap_or_else(|| Rat::new(1, k_max * k_max));
    let target = lemma_a_target(d, opts.log_base);
    finish(d, s, family, construction, eps, target, opts)
}

/// The power-of-two variant: `S'` from `d`, classes `2, 4, ..., 2^(S'-1)`,
/// `eps = 2^(-2(S'-1))`. Falls back to a warm-up family over the powers of
/// two up to `d` when `S' < 2` or the construction fails.
pub fn lemma_b_driver(d: usize, opts: &DriverOptions) -> Result<LemmaReport, PackingError> {
    check_d(d)?;
    let s = class_bound_s_prime(d, opts.log_base).unwrap_or(0);
    let attempt = if s >= 2 {
        build_separated_family(
            d,
            &power_of_two_classes(s as u32),
            FamilyKind::PowersOfTwo,
            opts.seed,
            opts.mode,
            &opts.family,
        )
        .map_err(|e| e.to_string())
    } else {
        Err(alloc::format!("S' = {s} < 2"))
    };
    let (family, construction) = match attempt {
        Ok(f) => (f, Construction::Randomized),
        Err(reason) => {
            let classes: Vec<u32> = (1..)
                .map(|i| 1u32 << i)
                .take_while(|&t| t as usize <= d.max(2))
                .take(d)
                .collect();
            (
                warmup_family_for_classes(d, &classes)?,
                Construction::WarmupFallback { reason },
            )
        }
    };
    let k_max = family.max_class().unwrap_or(2) as i64;
    let eps = opts
        .epsilon_override
        .clone()
        .unwrap_or_else(|| Rat::new(1, k_max * k_max));
    let target = opts.log_base.log(d as f64);
    finish(d, s, family, construction, eps, target, opts)
}

fn check_d(d: usize) -> Result<(), PackingError> {
    if d < 2 {
        return Err(PackingError::Language(
            crate::languages::LanguageError::Invalid("drivers need d >= 2"),
        ));
    }
    Ok(())
}

fn finish(
    d: usize,
    s: i64,
    family: SeparatedFamily,
    construction: Construction,
    eps: Rat,
    target: f64,
    opts: &DriverOptions,
) -> Result<LemmaReport, PackingError> {
    let packing = build_u(&family, &eps, &Selection::PerClassBudget(opts.budget_per_class))?;

    let mut class_stats = Vec::with_capacity(family.languages.len());
    for (idx, lang) in family.languages.iter().enumerate() {
        let k = lang.k();
        let f_size = lang.core_coords().len();
        let candidates = BigUint::from(k - 1).pow(f_size as u32);
        let count = match lang.core() {
            Core::Words(ws) => GoodWordCount::Exact(BigUint::from(ws.len())),
            Core::Good { avoid } => {
                let sets: Vec<Vec<usize>> = avoid.iter().map(|a| a.positions.clone()).collect();
                let mode = CountMode::Auto {
                    term_cap: DEFAULT_TERM_CAP,
                    samples: opts.estimate_samples,
                    seed: opts.seed.wrapping_add(idx as u64),
                };
                count_good_words(k, f_size, &sets, mode)?
            }
        };
        let (core_count, class_weight, fraction) = match &count {
            GoodWordCount::Exact(n) => {
                let w = Rat::from(n.clone()) / Rat::from(candidates.clone());
                let f = w.to_f64();
                (Some(n.clone()), Some(w), f)
            }
            GoodWordCount::Estimate { good, samples, total } => {
                let f = estimate_value(*good, *samples, total) / big_f64(total);
                (None, None, f)
            }
        };
        // the warm-up core is a single fixed letter, so nothing is "removed"
        let bad_fraction = match lang.core() {
            Core::Good { .. } => 1.0 - fraction,
            Core::Words(_) => 0.0,
        };
        class_stats.push(ClassStat {
            k,
            f_size,
            core_count,
            class_weight,
            class_weight_f64: fraction,
            bad_fraction,
            materialized: packing.nu_k(k),
        });
    }

    let full_weight: Option<Rat> = class_stats
        .iter()
        .map(|c| c.class_weight.clone())
        .collect::<Option<Vec<_>>>()
        .map(|v| v.into_iter().sum());
    let full_weight_check = full_weight.as_ref().map(|_| family.weight());
    let full_weight_f64 = class_stats.iter().map(|c| c.class_weight_f64).sum::<f64>();
    let guarantee = Rat::new(10, 11) * Rat::from(s.max(1) as u64 - 1);
    let guarantee_met = match &full_weight {
        Some(w) => *w >= guarantee,
        None => full_weight_f64 >= guarantee.to_f64(),
    };
    let target_met = full_weight_f64 >= target;
    let bad_fraction_ok = class_stats.iter().all(|c| c.bad_fraction <= 1.0 / 11.0);
    let harmonic_bound_ok = match (&construction, family.kind) {
        (Construction::WarmupFallback { .. }, FamilyKind::Warmup) if d >= 2 => {
            Some(full_weight_f64 >= libm::log((d - 1) as f64) - 1e-12)
        }
        _ => None,
    };
    let (fset_attempts, max_intersection, threshold) = match &family.fsets {
        Some(f) => (
            Some(f.attempts),
            Some(f.max_pairwise_intersection()),
            Some(f.threshold.clone()),
        ),
        None => (None, None, None),
    };

    Ok(LemmaReport {
        d,
        kind: family.kind,
        construction,
        log_base: opts.log_base,
        s,
        epsilon: eps,
        classes: family.classes.clone(),
        fset_attempts,
        max_intersection,
        threshold,
        class_stats,
        full_weight,
        full_weight_check,
        full_weight_f64,
        packing,
        target,
        guarantee,
        target_met,
        guarantee_met,
        bad_fraction_ok,
        harmonic_bound_ok,
        d0: opts.d0,
        family,
    })
}

fn big_f64(n: &BigUint) -> f64 {
    n.to_f64().unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::verify_bin;
    use alloc::vec;

    #[test]
    fn small_d_falls_back_to_warmup() {
        let r = lemma_a_driver(6, &DriverOptions::lemma_a()).unwrap();
        assert!(matches!(r.construction, Construction::WarmupFallback { .. }));
        assert_eq!(r.classes, vec![2, 3, 4, 5, 6]);
        assert_eq!(r.epsilon, Rat::new(1, 36));
        // 1 + 1/2 + 1/3 + 1/4 + 1/5
        assert_eq!(r.full_weight, Some(Rat::new(137, 60)));
        assert_eq!(r.full_weight_check, r.full_weight);
        assert_eq!(r.harmonic_bound_ok, Some(true));
        assert!(verify_bin(r.packing.bin()).is_ok());
        assert!(!r.asserted());
        assert!(r.passed());
    }

    #[test]
    fn randomized_at_d100() {
        let r = lemma_a_driver(100, &DriverOptions::lemma_a()).unwrap();
        assert_eq!(r.construction, Construction::Randomized);
        assert_eq!(r.s, 5);
        assert_eq!(r.classes, vec![2, 3, 4, 5]);
        assert_eq!(r.epsilon, Rat::new(1, 25));
        assert_eq!(r.full_weight, r.full_weight_check);
        assert!(r.guarantee_met);
        assert!(r.bad_fraction_ok);
        assert!(verify_bin(r.packing.bin()).is_ok());
        assert_eq!(r.packing.classes(), vec![2, 3, 4, 5]);
    }

    #[test]
    fn lemma_b_fallback_uses_powers_of_two() {
        let r = lemma_b_driver(10, &DriverOptions::lemma_b()).unwrap();
        assert!(matches!(r.construction, Construction::WarmupFallback { .. }));
        assert_eq!(r.classes, vec![2, 4, 8]);
        assert_eq!(r.epsilon, Rat::new(1, 64));
        assert!(r.classes.iter().all(|k| k.is_power_of_two()));
        assert!(verify_bin(r.packing.bin()).is_ok());
        assert!(r.passed());
    }

    #[test]
    fn epsilon_override_is_validated() {
        let mut o = DriverOptions::lemma_a();
        o.epsilon_override = Some(Rat::new(1, 2));
        assert!(lemma_a_driver(5, &o).is_err());
        o.epsilon_override = Some(Rat::new(1, 100));
        assert_eq!(lemma_a_driver(5, &o).unwrap().epsilon, Rat::new(1, 100));
    }
}
