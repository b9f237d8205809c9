use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};

use super::{GameConfig, GameError};
use crate::geometry::CubeClass;
use crate::packing::{check_homogeneous_epsilon, grid_slot_base, TypedPacking, MATERIALIZE_CAP};
use crate::rat::Rat;

/// `(1 - 1/k)^d + 1/l^d < (1 - 1/l)^d`, checked in integers as
/// `l^d (k-1)^d + k^d < (l-1)^d k^d`.
pub fn prop1_check(k: u64, ell: u64, d: u32) -> Result<bool, GameError> {
    if d < 2 || k < 2 || ell < k + 1 {
        return Err(GameError::Precondition("needs d >= 2, k >= 2 and l >= k + 1"));
    }
    let p = |x: u64| BigUint::from(x).pow(d);
    Ok(p(ell) * p(k - 1) + p(k) < p(ell - 1) * p(k))
}

/// `sum volumes <= l^d + (1-l)^d`, the sufficient condition for packing cubes
/// of largest side `l` into one bin.
pub fn meir_moser_predicate(volumes: &[Rat], ell: &Rat, d: usize) -> Result<bool, GameError> {
    if !ell.is_positive() || *ell > Rat::one() {
        return Err(GameError::Precondition("largest side must lie in (0, 1]"));
    }
    let total: Rat = volumes.iter().sum();
    Ok(total <= ell.pow(d as u32) + (Rat::one() - ell).pow(d as u32))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prop2Report {
    pub d: usize,
    pub bins: usize,
    /// Bins with occupied volume below `2^-d`.
    pub sparse_bins: usize,
    pub total_volume: Rat,
    /// `2^d * total volume + 1`.
    pub bin_bound: Rat,
    /// Whether the caller certified the configuration as Nash; without it the
    /// counts are reported but nothing is asserted.
    pub nash_certified: bool,
}

impl Prop2Report {
    pub fn holds(&self) -> bool {
        !self.nash_certified || (self.sparse_bins <= 1 && Rat::from(self.bins as u64) <= self.bin_bound)
    }
}

pub fn prop2_property_check(config: &GameConfig, nash_certified: bool) -> Prop2Report {
    let d = config.d();
    let half = Rat::new(1, 2).pow(d as u32);
    let vols = config.bin_volumes();
    let total: Rat = vols.values().sum();
    Prop2Report {
        d,
        bins: vols.len(),
        sparse_bins: vols.values().filter(|v| **v < half).count(),
        bin_bound: Rat::from(BigUint::one() << d) * &total + Rat::one(),
        total_volume: total,
        nash_certified,
    }
}

/// A configuration whose bins each hold `(k-1)^d` cubes of a single class,
/// all with one `eps`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomogeneousType {
    pub epsilon: Rat,
    pub bins_per_class: BTreeMap<u32, usize>,
}

impl HomogeneousType {
    pub fn power_of_two(&self) -> bool {
        self.bins_per_class.keys().all(|k| k.is_power_of_two())
    }
}

pub fn homogeneous_type(config: &GameConfig) -> Option<HomogeneousType> {
    let d = config.d();
    let mut epsilon: Option<Rat> = None;
    let mut bins_per_class = BTreeMap::new();
    for (_, members) in config.bins() {
        let first = &config.items()[members[0]];
        if members.iter().any(|&i| config.items()[i] != *first) {
            return None;
        }
        if epsilon.get_or_insert_with(|| first.epsilon().clone()) != first.epsilon() {
            return None;
        }
        let full = BigUint::from(first.k() - 1).pow(d as u32);
        if BigUint::from(members.len()) != full {
            return None;
        }
        *bins_per_class.entry(first.k()).or_insert(0) += 1;
    }
    Some(HomogeneousType {
        epsilon: epsilon?,
        bins_per_class,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InstanceOptions {
    /// Most items either configuration may hold.
    pub item_cap: u64,
}

impl Default for InstanceOptions {
    fn default() -> Self {
        InstanceOptions {
            item_cap: MATERIALIZE_CAP,
        }
    }
}

/// `P` is `n` copies of one packing; `P'` regroups the same items into full
/// homogeneous bins. Both share one item list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnarchyInstance {
    pub n: u64,
    /// `n` is the product of `(k-1)^d` when that fits the cap, else the
    /// least multiple keeping every regrouping exact.
    pub minimal_n: bool,
    pub p: GameConfig,
    pub p_prime: GameConfig,
    pub ratio: Rat,
    pub weight: Rat,
}

fn choose_n(u: &TypedPacking, opts: &InstanceOptions) -> Result<(u64, bool), GameError> {
    let d = u.d() as u32;
    let per_copy = u.len() as u128;
    let fits = |n: &BigUint| {
        n.to_u128()
            .and_then(|n| n.checked_mul(per_copy))
            .filter(|&items| items <= opts.item_cap as u128)
    };
    let product: BigUint = u.classes().iter().map(|&k| BigUint::from(k - 1).pow(d)).product();
    if fits(&product).is_some() {
        return Ok((product.to_u64().expect("fits the cap"), false));
    }
    let minimal = u.classes().iter().fold(BigUint::one(), |acc, &k| {
        let cell = BigUint::from(k - 1).pow(d);
        let g = cell.gcd(&BigUint::from(u.nu_k(k)));
        acc.lcm(&(cell / g))
    });
    match fits(&minimal) {
        Some(_) => Ok((minimal.to_u64().expect("fits the cap"), true)),
        None => Err(GameError::TooLarge(
            minimal.to_u128().map_or(u128::MAX, |n| n.saturating_mul(per_copy)),
        )),
    }
}

pub fn poa_instance(u: &TypedPacking, opts: &InstanceOptions) -> Result<AnarchyInstance, GameError> {
    if u.is_empty() {
        return Err(GameError::Precondition("packing is empty"));
    }
    let d = u.d();
    let eps = u.epsilon().clone();
    let k_max = u.k_max().expect("nonempty");
    for &k in &u.classes() {
        if check_homogeneous_epsilon(k, &eps).is_err() {
            return Err(GameError::EpsilonTooLarge { epsilon: eps, k_max });
        }
    }
    let (n, minimal_n) = choose_n(u, opts)?;

    let mut items: Vec<CubeClass> = Vec::new();
    let mut assignment = Vec::new();
    let mut positions = Vec::new();
    for copy in 0..n {
        for c in u.bin().cubes() {
            items.push(c.class().clone());
            assignment.push(copy);
            positions.push(c.base().to_vec());
        }
    }
    let p = GameConfig::new(d, items.clone(), assignment, positions)?;

    // item indices per class, then fill homogeneous bins slot by slot
    let mut by_class: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, c) in items.iter().enumerate() {
        by_class.entry(c.k()).or_default().push(i);
    }
    let mut assignment = alloc::vec![0u64; items.len()];
    let mut positions = alloc::vec![Vec::new(); items.len()];
    let mut next_bin = 0u64;
    for (&k, members) in &by_class {
        let cell = (k as u64 - 1).pow(d as u32);
        for chunk in members.chunks(cell as usize) {
            debug_assert_eq!(chunk.len() as u64, cell);
            for (slot, &i) in chunk.iter().enumerate() {
                assignment[i] = next_bin;
                positions[i] = grid_slot_base(k, d, &eps, slot as u64);
            }
            next_bin += 1;
        }
    }
    let p_prime = GameConfig::new(d, items, assignment, positions)?;
    let ratio = Rat::from(next_bin) / Rat::from(n);
    Ok(AnarchyInstance {
        n,
        minimal_n,
        p,
        p_prime,
        ratio,
        weight: u.weight().clone(),
    })
}

/// As [`poa_instance`], for packings whose classes are all powers of two.
pub fn spoa_instance(u: &TypedPacking, opts: &InstanceOptions) -> Result<AnarchyInstance, GameError> {
    if let Some(k) = u.classes().into_iter().find(|k| !k.is_power_of_two()) {
        return Err(GameError::NotPowerOfTwo(k));
    }
    poa_instance(u, opts)
}
