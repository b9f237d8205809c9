//! Online bounded-space packing: the adversarial instance built from a typed
//! packing, its counting lower bound and offline certificate, a harness that
//! checks every step of an algorithm exactly, and a baseline algorithm.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::geometry::{cubes_disjoint, verify_bin, Bin, CubeClass, GeometryError, PlacedCube};
use crate::packing::{grid_capacity, grid_slot_base, TypedPacking};
use crate::rat::Rat;

/// Largest instance the harness and the offline certificate will expand.
pub const ITEM_CAP: u64 = 1 << 22;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OnlineError {
    #[error("the packing has no cubes")]
    EmptyPacking,
    #[error("M must be at least 1")]
    ZeroM,
    #[error("scale C = {c} does not make C * nu_{k} divisible by (k-1)^d")]
    Divisibility { c: BigUint, k: u32 },
    #[error("scale C = {c} gives fewer than 2M bins' worth of class {k}")]
    ScaleTooSmall { c: BigUint, k: u32 },
    #[error("segment order must list each class of the packing exactly once")]
    BadOrder,
    #[error("instance needs {0} items, above the expansion cap")]
    TooLarge(BigUint),
    #[error("invalid instance: {0}")]
    InvalidInstance(&'static str),
    #[error("step {step}: {violation}")]
    Contract { step: u64, violation: Violation },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Violation {
    #[error("bin {0} is not open")]
    NotOpen(u64),
    #[error("bin {0} was closed and cannot be reused")]
    ClosedBinReused(u64),
    #[error("placement leaves the unit bin")]
    Uncontained,
    #[error("placement overlaps cube {0} of the target bin")]
    Overlap(usize),
    #[error("base point has the wrong dimension")]
    DimensionMismatch,
    #[error("{open} bins open, more than M = {m}")]
    TooManyOpen { open: usize, m: usize },
}

/// A run of `count` copies of `Q_k^d(eps)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Segment {
    pub k: u32,
    pub count: u64,
}

/// An online input: segments of identical cubes, all with one `eps`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub d: usize,
    pub epsilon: Rat,
    pub segments: Vec<Segment>,
}

impl Instance {
    pub fn new(d: usize, epsilon: Rat, segments: Vec<Segment>) -> Result<Self, OnlineError> {
        for s in &segments {
            CubeClass::new(s.k, epsilon.clone(), d)?;
        }
        Ok(Instance {
            d,
            epsilon,
            segments,
        })
    }

    pub fn len(&self) -> u64 {
        self.segments.iter().map(|s| s.count).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Item classes in arrival order.
    pub fn items(&self) -> impl Iterator<Item = u32> + '_ {
        self.segments
            .iter()
            .flat_map(|s| core::iter::repeat_n(s.k, s.count as usize))
    }

    pub fn class(&self, k: u32) -> Result<CubeClass, OnlineError> {
        Ok(CubeClass::new(k, self.epsilon.clone(), self.d)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum SegmentOrder {
    #[default]
    Ascending,
    Descending,
    Custom(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Scale {
    /// `C = 2MN` with `N = prod (k-1)^d`.
    #[default]
    Full,
    /// The smallest `C` meeting the divisibility and `2M` conditions.
    Minimal,
    Custom(BigUint),
}

/// The adversarial instance in symbolic form, before expansion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdversaryPlan {
    pub d: usize,
    pub epsilon: Rat,
    pub m: u32,
    /// `prod_{k in K(U)} (k-1)^d`.
    pub n: BigUint,
    /// Copies of `U` the instance is made of.
    pub c: BigUint,
    pub nu: BTreeMap<u32, u64>,
    pub weight: Rat,
    /// `(k, C * nu_k)` in arrival order.
    pub segments: Vec<(u32, BigUint)>,
    /// `ceil((C/2) w(U))`, valid for every algorithm with at most `M` open bins.
    pub certificate: BigUint,
    /// `sum_k (C nu_k / (k-1)^d - M)`: the per-segment bound before halving.
    pub segment_bound: BigUint,
    /// Bins of the offline certificate: `C`.
    pub offline_bins: BigUint,
}

impl AdversaryPlan {
    pub fn total_items(&self) -> BigUint {
        self.segments.iter().map(|(_, n)| n).sum()
    }

    /// Expands the counts, refusing anything above [`ITEM_CAP`] items.
    pub fn instance(&self) -> Result<Instance, OnlineError> {
        let total = self.total_items();
        if total > BigUint::from(ITEM_CAP) {
            return Err(OnlineError::TooLarge(total));
        }
        let segments = self
            .segments
            .iter()
            .map(|(k, n)| Segment {
                k: *k,
                count: n.to_u64().expect("bounded by the cap"),
            })
            .collect();
        Instance::new(self.d, self.epsilon.clone(), segments)
    }

    /// `certificate / C`, which is at least `w(U)/2`.
    pub fn certified_ratio(&self) -> Rat {
        Rat::from(self.certificate.clone()) / Rat::from(self.c.clone())
    }
}

fn class_cap(k: u32, d: usize) -> BigUint {
    BigUint::from(k - 1).pow(d as u32)
}

/// Checks that `C nu_k` is a multiple of `(k-1)^d` and that the quotient is
/// at least `2M` for every class.
fn check_scale(u: &TypedPacking, m: u32, c: &BigUint) -> Result<(), OnlineError> {
    for (&k, &nu) in u.nu() {
        let (q, r) = (c * nu).div_rem(&class_cap(k, u.d()));
        if !r.is_zero() {
            return Err(OnlineError::Divisibility { c: c.clone(), k });
        }
        if q < BigUint::from(2 * m) {
            return Err(OnlineError::ScaleTooSmall { c: c.clone(), k });
        }
    }
    Ok(())
}

/// Smallest valid scale: a multiple of `lcm_k (k-1)^d / gcd((k-1)^d, nu_k)`
/// large enough that every class fills `2M` bins.
pub fn minimal_scale(u: &TypedPacking, m: u32) -> BigUint {
    let d = u.d();
    let base = u.nu().iter().fold(BigUint::one(), |acc, (&k, &nu)| {
        let cap = class_cap(k, d);
        let g = cap.gcd(&BigUint::from(nu));
        acc.lcm(&(cap / g))
    });
    let mult = u
        .nu()
        .iter()
        .map(|(&k, &nu)| {
            let need = class_cap(k, d) * (2 * m);
            need.div_ceil(&(&base * nu))
        })
        .max()
        .unwrap_or_else(BigUint::one)
        .max(BigUint::one());
    base * mult
}

/// `ceil((C/2) w(U))` after validating `C`.
pub fn lower_bound_certificate(u: &TypedPacking, m: u32, c: &BigUint) -> Result<BigUint, OnlineError> {
    if m == 0 {
        return Err(OnlineError::ZeroM);
    }
    check_scale(u, m, c)?;
    let half = Rat::from(c.clone()) * u.weight() / Rat::from(2u32);
    Ok(half.ceil().to_biguint().expect("nonnegative"))
}

/// Builds the instance: for each class of `U`, in the given order, a segment
/// of `C nu_k` copies of `Q_k^d(eps)`.
pub fn adversarial_plan(
    u: &TypedPacking,
    m: u32,
    scale: &Scale,
    order: &SegmentOrder,
) -> Result<AdversaryPlan, OnlineError> {
    if u.is_empty() {
        return Err(OnlineError::EmptyPacking);
    }
    if m == 0 {
        return Err(OnlineError::ZeroM);
    }
    let d = u.d();
    let classes = u.classes();
    let n: BigUint = classes.iter().map(|&k| class_cap(k, d)).product();
    let c = match scale {
        Scale::Full => &n * (2 * m),
        Scale::Minimal => minimal_scale(u, m),
        Scale::Custom(c) => c.clone(),
    };
    let certificate = lower_bound_certificate(u, m, &c)?;
    let ordered: Vec<u32> = match order {
        SegmentOrder::Ascending => classes.clone(),
        SegmentOrder::Descending => classes.iter().rev().copied().collect(),
        SegmentOrder::Custom(v) => {
            let mut sorted = v.clone();
            sorted.sort_unstable();
            if sorted != classes {
                return Err(OnlineError::BadOrder);
            }
            v.clone()
        }
    };
    let segments: Vec<(u32, BigUint)> = ordered.iter().map(|&k| (k, &c * u.nu_k(k))).collect();
    let segment_bound = segments
        .iter()
        .map(|(k, f)| f / class_cap(*k, d) - BigUint::from(m))
        .sum();
    Ok(AdversaryPlan {
        d,
        epsilon: u.epsilon().clone(),
        m,
        n,
        c: c.clone(),
        nu: u.nu().clone(),
        weight: u.weight().clone(),
        segments,
        certificate,
        segment_bound,
        offline_bins: c,
    })
}

/// Plan and expanded instance in one call.
pub fn adversarial_instance(
    u: &TypedPacking,
    m: u32,
    scale: &Scale,
) -> Result<(Instance, AdversaryPlan), OnlineError> {
    let plan = adversarial_plan(u, m, scale, &SegmentOrder::Ascending)?;
    Ok((plan.instance()?, plan))
}

/// An offline packing of an instance: bins plus, for every item in arrival
/// order, the bin and cube index that holds it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OfflineCertificate {
    pub bins: Vec<Bin>,
    pub assignment: Vec<(usize, usize)>,
}

impl OfflineCertificate {
    /// Every bin verifies, and items map one-to-one onto cubes of their class.
    pub fn check(&self, instance: &Instance) -> bool {
        if !self.bins.iter().all(|b| verify_bin(b).is_ok()) {
            return false;
        }
        let mut used: Vec<Vec<bool>> = self.bins.iter().map(|b| vec![false; b.len()]).collect();
        let mut n = 0usize;
        for (k, &(b, i)) in instance.items().zip(&self.assignment) {
            n += 1;
            let Some(cube) = self.bins.get(b).and_then(|bin| bin.cubes().get(i)) else {
                return false;
            };
            if cube.k() != k || *cube.class().epsilon() != instance.epsilon || used[b][i] {
                return false;
            }
            used[b][i] = true;
        }
        n == self.assignment.len() && n as u64 == instance.len()
    }
}

/// The item-to-copy rearrangement: the `j`-th class-`k` item goes to copy
/// `j / nu_k` of `U`, at that copy's `(j mod nu_k)`-th class-`k` cube.
pub fn offline_certificate(u: &TypedPacking, plan: &AdversaryPlan) -> Result<OfflineCertificate, OnlineError> {
    let total = &plan.c * BigUint::from(u.len());
    if total > BigUint::from(ITEM_CAP) {
        return Err(OnlineError::TooLarge(total));
    }
    let copies = plan.c.to_usize().expect("bounded by the cap");
    let mut slots: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, c) in u.bin().cubes().iter().enumerate() {
        slots.entry(c.k()).or_default().push(i);
    }
    let bins = vec![u.bin().clone(); copies];
    let mut seen: BTreeMap<u32, usize> = BTreeMap::new();
    let mut assignment = Vec::new();
    let instance = plan.instance()?;
    for k in instance.items() {
        let s = &slots[&k];
        let j = seen.entry(k).or_insert(0);
        assignment.push((*j / s.len(), s[*j % s.len()]));
        *j += 1;
    }
    Ok(OfflineCertificate { bins, assignment })
}

/// An open bin as seen by an algorithm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpenBin {
    pub id: u64,
    pub bin: Bin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Existing(u64),
    New,
}

/// Where to put the current item, and which bins to close afterwards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub target: Target,
    pub base: Vec<Rat>,
    pub close: Vec<u64>,
}

/// An online algorithm with at most `M` open bins. It sees the open bins and
/// the current item only.
pub trait BoundedSpaceAlgorithm {
    fn name(&self) -> &str;

    /// `new_id` is the id a new bin would get.
    fn decide(&mut self, item: &CubeClass, open: &[OpenBin], new_id: u64) -> Decision;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    pub item: u64,
    pub bin: u64,
    pub base: Vec<Rat>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentStat {
    pub k: u32,
    pub items: u64,
    pub new_bins: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatioReport {
    pub algorithm: String,
    pub m: u32,
    pub bins_used: u64,
    pub segments: Vec<SegmentStat>,
    pub opt_upper_bound: Option<BigUint>,
    pub certified_lower_bound: Option<BigUint>,
    /// `bins_used / opt_upper_bound`.
    pub ratio: Option<Rat>,
}

impl RatioReport {
    /// Fills the bounds from the plan the instance was expanded from.
    pub fn attach(&mut self, plan: &AdversaryPlan) {
        self.opt_upper_bound = Some(plan.offline_bins.clone());
        self.certified_lower_bound = Some(plan.certificate.clone());
        self.ratio = Some(Rat::from(self.bins_used) / Rat::from(plan.offline_bins.clone()));
    }

    pub fn bound_holds(&self) -> Option<bool> {
        self.certified_lower_bound
            .as_ref()
            .map(|lb| BigUint::from(self.bins_used) >= *lb)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunResult {
    pub report: RatioReport,
    pub trace: Vec<Placement>,
    pub closed: Vec<OpenBin>,
    pub open_at_end: Vec<OpenBin>,
    pub max_open: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    pub record_trace: bool,
    pub keep_closed: bool,
}

/// Runs `alg` on `instance`, checking every decision exactly: the target bin
/// is open, the cube lies in the bin and misses every cube already there, and
/// after the requested closes at most `M` bins remain open.
pub fn run_bounded_space<A: BoundedSpaceAlgorithm + ?Sized>(
    alg: &mut A,
    instance: &Instance,
    m: u32,
    opts: RunOptions,
) -> Result<RunResult, OnlineError> {
    if m == 0 {
        return Err(OnlineError::ZeroM);
    }
    if instance.len() > ITEM_CAP {
        return Err(OnlineError::TooLarge(BigUint::from(instance.len())));
    }
    let mut open: Vec<OpenBin> = Vec::new();
    let mut closed_ids: Vec<u64> = Vec::new();
    let mut closed = Vec::new();
    let mut trace = Vec::new();
    let mut next_id = 0u64;
    let mut max_open = 0;
    let mut segments = Vec::new();
    let mut step = 0u64;

    for seg in &instance.segments {
        let class = instance.class(seg.k)?;
        let before = next_id;
        for _ in 0..seg.count {
            let fail = |violation| OnlineError::Contract { step, violation };
            let dec = alg.decide(&class, &open, next_id);
            if dec.base.len() != instance.d {
                return Err(fail(Violation::DimensionMismatch));
            }
            let cube = PlacedCube::new(class.clone(), dec.base.clone())?;
            if !cube.is_contained() {
                return Err(fail(Violation::Uncontained));
            }
            let idx = match dec.target {
                Target::New => {
                    open.push(OpenBin {
                        id: next_id,
                        bin: Bin::new(instance.d),
                    });
                    next_id += 1;
                    open.len() - 1
                }
                Target::Existing(id) => match open.iter().position(|b| b.id == id) {
                    Some(i) => i,
                    None if closed_ids.contains(&id) => return Err(fail(Violation::ClosedBinReused(id))),
                    None => return Err(fail(Violation::NotOpen(id))),
                },
            };
            if let Some(j) = open[idx]
                .bin
                .cubes()
                .iter()
                .position(|c| !cubes_disjoint(c, &cube).unwrap_or(false))
            {
                return Err(fail(Violation::Overlap(j)));
            }
            let bin_id = open[idx].id;
            open[idx].bin.push(cube)?;
            max_open = max_open.max(open.len());
            for id in &dec.close {
                let Some(i) = open.iter().position(|b| b.id == *id) else {
                    return Err(fail(Violation::NotOpen(*id)));
                };
                let b = open.remove(i);
                closed_ids.push(b.id);
                if opts.keep_closed {
                    closed.push(b);
                }
            }
            if open.len() > m as usize {
                return Err(fail(Violation::TooManyOpen {
                    open: open.len(),
                    m: m as usize,
                }));
            }
            if opts.record_trace {
                trace.push(Placement {
                    item: step,
                    bin: bin_id,
                    base: dec.base,
                });
            }
            step += 1;
        }
        segments.push(SegmentStat {
            k: seg.k,
            items: seg.count,
            new_bins: next_id - before,
        });
    }

    Ok(RunResult {
        report: RatioReport {
            algorithm: alg.name().into(),
            m,
            bins_used: next_id,
            segments,
            opt_upper_bound: None,
            certified_lower_bound: None,
            ratio: None,
        },
        trace,
        closed,
        open_at_end: open,
        max_open,
    })
}

/// One open bin per class, filled slot by slot on the `(k-1)^d` grid and
/// closed when full. When a new bin would exceed `M` open bins, the bin of
/// the least recently used class is closed.
#[derive(Debug, Clone)]
pub struct ClassHarmonic {
    m: usize,
    /// `(class, bin id, next slot)`, least recently used first.
    bins: Vec<(u32, u64, u64)>,
}

impl ClassHarmonic {
    pub fn new(m: u32) -> Self {
        ClassHarmonic {
            m: m.max(1) as usize,
            bins: Vec::new(),
        }
    }
}

impl BoundedSpaceAlgorithm for ClassHarmonic {
    fn name(&self) -> &str {
        "class-harmonic"
    }

    fn decide(&mut self, item: &CubeClass, open: &[OpenBin], new_id: u64) -> Decision {
        let (k, d, eps) = (item.k(), item.d(), item.epsilon());
        let cap = grid_capacity(k, d).unwrap_or(u64::MAX);
        self.bins.retain(|(_, id, _)| open.iter().any(|b| b.id == *id));
        let (target, bin_id, slot) = match self.bins.iter().position(|&(c, _, _)| c == k) {
            Some(i) => {
                let (_, id, slot) = self.bins.remove(i);
                (Target::Existing(id), id, slot)
            }
            None => (Target::New, new_id, 0),
        };
        let mut close = Vec::new();
        if slot + 1 >= cap {
            close.push(bin_id);
        } else {
            self.bins.push((k, bin_id, slot + 1));
        }
        while self.bins.len() > self.m {
            close.push(self.bins.remove(0).1);
        }
        Decision {
            target,
            base: grid_slot_base(k, d, eps, slot),
            close,
        }
    }
}

/// The most pairwise-disjoint cubes of side `(1+eps)/k` with bases drawn from
/// `{i s} u {1 - (i+1) s}` in every coordinate. Stops early once `target`
/// cubes are found.
pub fn max_cubes_on_candidates(k: u32, d: usize, eps: &Rat, target: usize) -> Result<usize, OnlineError> {
    let class = CubeClass::new(k, eps.clone(), d)?;
    let side = class.side().clone();
    let mut coords: Vec<Rat> = Vec::new();
    let mut i = 0u32;
    loop {
        let lo = &side * Rat::from(i);
        if &lo + &side > Rat::one() {
            break;
        }
        coords.push(lo.clone());
        coords.push(Rat::one() - &side * Rat::from(i + 1));
        i += 1;
    }
    coords.sort();
    coords.dedup();
    let mut cands: Vec<PlacedCube> = Vec::new();
    let total = coords.len().pow(d as u32);
    for mut idx in 0..total {
        let mut base = vec![Rat::zero(); d];
        for b in base.iter_mut() {
            *b = coords[idx % coords.len()].clone();
            idx /= coords.len();
        }
        cands.push(PlacedCube::new(class.clone(), base)?);
    }
    let n = cands.len();
    let conflict: Vec<Vec<bool>> = (0..n)
        .map(|a| (0..n).map(|b| a != b && !cubes_disjoint(&cands[a], &cands[b]).unwrap_or(true)).collect())
        .collect();
    let mut best = 0;
    let mut chosen = Vec::new();
    independent_set(&conflict, 0, &mut chosen, &mut best, target);
    Ok(best)
}

fn independent_set(conflict: &[Vec<bool>], from: usize, chosen: &mut Vec<usize>, best: &mut usize, target: usize) {
    *best = (*best).max(chosen.len());
    if *best >= target || chosen.len() + (conflict.len() - from) <= *best {
        return;
    }
    for v in from..conflict.len() {
        if chosen.iter().all(|&u| !conflict[u][v]) {
            chosen.push(v);
            independent_set(conflict, v + 1, chosen, best, target);
            chosen.pop();
            if *best >= target {
                return;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::languages::warmup_family;
    use crate::packing::{build_u, Selection};

    fn warmup_u3() -> TypedPacking {
        build_u(&warmup_family(3).unwrap(), &Rat::new(1, 9), &Selection::All).unwrap()
    }

    #[test]
    fn full_scale_numbers_d3() {
        let u = warmup_u3();
        for m in 1..=2u32 {
            let plan = adversarial_plan(&u, m, &Scale::Full, &SegmentOrder::Ascending).unwrap();
            assert_eq!(plan.n, BigUint::from(8u32));
            assert_eq!(plan.c, BigUint::from(16 * m));
            assert_eq!(
                plan.segments,
                vec![(2, BigUint::from(16 * m)), (3, BigUint::from(64 * m))]
            );
            assert_eq!(plan.certificate, BigUint::from(12 * m));
            assert_eq!(plan.offline_bins, BigUint::from(16 * m));
            assert_eq!(plan.certified_ratio(), Rat::new(3, 4));
        }
    }

    #[test]
    fn scale_validation() {
        let u = warmup_u3();
        // nu_3 = 4, (k-1)^d = 8: C must be even, and C * 4 / 8 >= 2M
        assert!(matches!(
            lower_bound_certificate(&u, 1, &BigUint::from(3u32)),
            Err(OnlineError::Divisibility { k: 3, .. })
        ));
        assert!(matches!(
            lower_bound_certificate(&u, 1, &BigUint::from(2u32)),
            Err(OnlineError::ScaleTooSmall { k: 3, .. })
        ));
        assert_eq!(minimal_scale(&u, 1), BigUint::from(4u32));
        assert_eq!(lower_bound_certificate(&u, 1, &BigUint::from(4u32)).unwrap(), BigUint::from(3u32));
    }

    #[test]
    fn offline_certificate_verifies() {
        let u = warmup_u3();
        let plan = adversarial_plan(&u, 1, &Scale::Full, &SegmentOrder::Ascending).unwrap();
        let cert = offline_certificate(&u, &plan).unwrap();
        assert_eq!(cert.bins.len(), 16);
        assert!(cert.check(&plan.instance().unwrap()));
        let mut broken = cert.clone();
        broken.assignment[1] = broken.assignment[0];
        assert!(!broken.check(&plan.instance().unwrap()));
    }

    #[test]
    fn baseline_meets_bound_d3() {
        let u = warmup_u3();
        for m in 1..=2u32 {
            let (inst, plan) = adversarial_instance(&u, m, &Scale::Full).unwrap();
            let mut alg = ClassHarmonic::new(m);
            let mut run = run_bounded_space(&mut alg, &inst, m, RunOptions::default()).unwrap();
            run.report.attach(&plan);
            assert!(run.max_open <= m as usize);
            assert_eq!(run.report.bound_holds(), Some(true));
            // 16M class-2 bins, 64M/8 class-3 bins
            assert_eq!(run.report.bins_used, 24 * m as u64);
            for s in &run.report.segments {
                let bound = plan.c.clone() * plan.nu[&s.k] / class_cap(s.k, 3) - BigUint::from(m);
                assert!(BigUint::from(s.new_bins) >= bound);
            }
        }
    }

    #[test]
    fn homogeneous_stream_uses_ceiling_bins() {
        let eps = Rat::new(1, 9);
        for n in [1u64, 7, 8, 9, 17] {
            let inst = Instance::new(3, eps.clone(), vec![Segment { k: 3, count: n }]).unwrap();
            let run = run_bounded_space(&mut ClassHarmonic::new(1), &inst, 1, RunOptions::default()).unwrap();
            assert_eq!(run.report.bins_used, n.div_ceil(8));
        }
        let empty = Instance::new(3, eps, vec![]).unwrap();
        let run = run_bounded_space(&mut ClassHarmonic::new(1), &empty, 1, RunOptions::default()).unwrap();
        assert_eq!(run.report.bins_used, 0);
    }

    #[test]
    fn alternating_classes_thrash_with_m1() {
        // classes 3 and 4 each leave room behind, and each switch evicts it
        let segs: Vec<Segment> = (0..10).map(|i| Segment { k: 3 + (i % 2), count: 1 }).collect();
        let inst = Instance::new(2, Rat::new(1, 16), segs).unwrap();
        let run = run_bounded_space(&mut ClassHarmonic::new(1), &inst, 1, RunOptions::default()).unwrap();
        assert_eq!(run.report.bins_used, 10);
        // with M = 2 both bins stay open
        let run = run_bounded_space(&mut ClassHarmonic::new(2), &inst, 2, RunOptions::default()).unwrap();
        assert_eq!(run.report.bins_used, 3);
    }

    struct Greedy;
    impl BoundedSpaceAlgorithm for Greedy {
        fn name(&self) -> &str {
            "never-closes"
        }
        fn decide(&mut self, item: &CubeClass, _open: &[OpenBin], _new_id: u64) -> Decision {
            Decision {
                target: Target::New,
                base: vec![Rat::zero(); item.d()],
                close: vec![],
            }
        }
    }

    struct Stacker;
    impl BoundedSpaceAlgorithm for Stacker {
        fn name(&self) -> &str {
            "stacker"
        }
        fn decide(&mut self, item: &CubeClass, open: &[OpenBin], _new_id: u64) -> Decision {
            Decision {
                target: open.first().map_or(Target::New, |b| Target::Existing(b.id)),
                base: vec![Rat::zero(); item.d()],
                close: vec![],
            }
        }
    }

    #[test]
    fn harness_catches_violations() {
        let inst = Instance::new(2, Rat::new(1, 9), vec![Segment { k: 3, count: 2 }]).unwrap();
        let err = run_bounded_space(&mut Greedy, &inst, 1, RunOptions::default()).unwrap_err();
        assert!(matches!(
            err,
            OnlineError::Contract { step: 1, violation: Violation::TooManyOpen { open: 2, m: 1 } }
        ));
        let err = run_bounded_space(&mut Stacker, &inst, 1, RunOptions::default()).unwrap_err();
        assert!(matches!(
            err,
            OnlineError::Contract { step: 1, violation: Violation::Overlap(0) }
        ));
    }

    #[test]
    fn candidate_search_caps_at_grid_capacity() {
        for (k, d) in [(2u32, 2usize), (3, 2), (3, 3), (4, 2)] {
            let eps = Rat::new(1, (k * k) as i64);
            let cap = grid_capacity(k, d).unwrap() as usize;
            assert_eq!(max_cubes_on_candidates(k, d, &eps, cap + 1).unwrap(), cap);
        }
        // without the epsilon slack one more row fits
        assert_eq!(max_cubes_on_candidates(3, 2, &Rat::zero(), 10).unwrap(), 9);
    }
}
