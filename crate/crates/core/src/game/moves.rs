use alloc::collections::btree_map::Entry;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::Rng;

use super::fit::{find_insertion, repack, RepackOutcome, Scale, DEFAULT_NODE_BUDGET};
use super::{item_cost, GameConfig, GameError};
use crate::geometry::CubeClass;
use crate::rat::Rat;
use crate::rng::stream;

/// How a migrating item is fitted into its target bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeasibilityMode {
    /// Residents keep their positions; the newcomer needs a free spot.
    Insertion,
    /// The target bin may be laid out again from scratch.
    Repack { cap: usize, node_budget: u64 },
}

impl FeasibilityMode {
    pub fn repack(cap: usize) -> Self {
        FeasibilityMode::Repack {
            cap,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FeasibilityMode::Insertion => "insertion",
            FeasibilityMode::Repack { .. } => "repack",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MoveProposal {
    pub item: usize,
    pub from: u64,
    pub to: u64,
    pub mode: FeasibilityMode,
    pub cost_before: Rat,
    pub cost_after: Rat,
    /// New base points for every item that changes position: just the mover
    /// under insertion, the whole target bin under repack.
    pub layout: Vec<(usize, Vec<Rat>)>,
}

/// New base points keyed by item.
pub(crate) type Layout = Vec<(usize, Vec<Rat>)>;

/// Fits `arrivals` into `target` (an existing bin id, or a fresh one when it
/// holds nothing), leaving out `departing` residents. Returns the new
/// positions of everything that moves or is re-laid.
pub(crate) fn fit_into(
    config: &GameConfig,
    target: Option<u64>,
    departing: &[usize],
    arrivals: &[usize],
    mode: FeasibilityMode,
) -> Result<Option<Layout>, GameError> {
    let residents: Vec<usize> = target
        .map(|t| config.members(t).into_iter().filter(|i| !departing.contains(i)).collect())
        .unwrap_or_default();
    let mut arrivals = arrivals.to_vec();
    arrivals.sort_by(|&a, &b| config.items()[b].side().cmp(config.items()[a].side()).then(a.cmp(&b)));
    match mode {
        FeasibilityMode::Insertion => {
            let mut fixed: Vec<_> = residents.iter().map(|&i| config.cube(i)).collect();
            let mut out = Vec::with_capacity(arrivals.len());
            for &a in &arrivals {
                let class = &config.items()[a];
                match find_insertion(&fixed, class)? {
                    None => return Ok(None),
                    Some(base) => {
                        fixed.push(
                            crate::geometry::PlacedCube::new(class.clone(), base.clone())
                                .expect("base has the class dimension"),
                        );
                        out.push((a, base));
                    }
                }
            }
            Ok(Some(out))
        }
        FeasibilityMode::Repack { cap, node_budget } => {
            let all: Vec<usize> = residents.iter().chain(&arrivals).copied().collect();
            let classes: Vec<CubeClass> = all.iter().map(|&i| config.items()[i].clone()).collect();
            match repack(&classes, config.d(), cap, node_budget)? {
                RepackOutcome::Infeasible(_) => Ok(None),
                RepackOutcome::Packed(pos) => Ok(Some(all.into_iter().zip(pos).collect())),
            }
        }
    }
}

/// Walks all strictly improving unilateral moves, in item then bin order,
/// until `visit` returns false. Moving to an empty bin costs 1 and never
/// improves, so only occupied bins are targets.
///
/// Items of one class in one bin share their options, and bins with equal
/// contents answer a fit query alike, so each distinct question is asked once.
fn scan_moves(
    config: &GameConfig,
    mode: FeasibilityMode,
    mut visit: impl FnMut(MoveProposal) -> bool,
) -> Result<usize, GameError> {
    let vols: Vec<Rat> = config.items().iter().map(|c| c.volume()).collect();
    let scale = Scale::new(vols.iter());
    let ivol = vols.iter().map(|v| scale.int(v)).collect::<Result<Vec<_>, _>>()?;

    let mut class_ids: BTreeMap<&CubeClass, usize> = BTreeMap::new();
    let class_of: Vec<usize> = config
        .items()
        .iter()
        .map(|c| {
            let n = class_ids.len();
            *class_ids.entry(c).or_insert(n)
        })
        .collect();

    let bins = config.bins();
    let mut bin_vol: BTreeMap<u64, i128> = BTreeMap::new();
    let mut signature: BTreeMap<u64, usize> = BTreeMap::new();
    let mut sigs: BTreeMap<Vec<(usize, &[Rat])>, usize> = BTreeMap::new();
    for (&b, members) in &bins {
        bin_vol.insert(b, members.iter().map(|&i| ivol[i]).sum());
        let mut key: Vec<(usize, &[Rat])> = members
            .iter()
            .map(|&i| (class_of[i], config.positions()[i].as_slice()))
            .collect();
        key.sort();
        let n = sigs.len();
        signature.insert(b, *sigs.entry(key).or_insert(n));
    }
    // bins by volume, fullest first
    let mut by_volume: Vec<(i128, u64)> = bin_vol.iter().map(|(&b, &v)| (v, b)).collect();
    by_volume.sort_unstable_by(|a, b| b.cmp(a));

    let mut fits: BTreeMap<(usize, usize), bool> = BTreeMap::new();
    let mut options: BTreeMap<(u64, usize), Vec<u64>> = BTreeMap::new();
    let mut checked = 0;
    for item in 0..config.len() {
        let from = config.bin_of(item);
        let group = (from, class_of[item]);
        if let Entry::Vacant(slot) = options.entry(group) {
            let need = bin_vol[&from] - ivol[item];
            let mut targets = Vec::new();
            for &(v, to) in &by_volume {
                if v <= need {
                    break;
                }
                if to == from {
                    continue;
                }
                checked += 1;
                let key = (signature[&to], class_of[item]);
                let ok = match fits.get(&key) {
                    Some(&ok) => ok,
                    None => {
                        let ok = fit_into(config, Some(to), &[], &[item], mode)?.is_some();
                        fits.insert(key, ok);
                        ok
                    }
                };
                if ok {
                    targets.push(to);
                }
            }
            targets.sort_unstable();
            slot.insert(targets);
        }
        for &to in &options[&group] {
            let layout = fit_into(config, Some(to), &[], &[item], mode)?.expect("fit cached as feasible");
            let proposal = MoveProposal {
                item,
                from,
                to,
                mode,
                cost_before: item_cost(config, item),
                cost_after: &vols[item] / &(config.bin_volume(to) + &vols[item]),
                layout,
            };
            if !visit(proposal) {
                return Ok(checked);
            }
        }
    }
    Ok(checked)
}

pub fn improving_moves(config: &GameConfig, mode: FeasibilityMode) -> Result<Vec<MoveProposal>, GameError> {
    let mut out = Vec::new();
    scan_moves(config, mode, |m| {
        out.push(m);
        true
    })?;
    Ok(out)
}

/// Applies a proposal and re-verifies the touched bins.
pub fn apply_move(config: &GameConfig, proposal: &MoveProposal) -> Result<GameConfig, GameError> {
    if config.bin_of(proposal.item) != proposal.from {
        return Err(GameError::Invalid("proposal does not match the configuration"));
    }
    let mut next = config.clone();
    for (i, base) in &proposal.layout {
        next.set(*i, proposal.to, base.clone());
    }
    if !crate::geometry::verify_bin(&next.bin(proposal.to)).is_ok() {
        return Err(GameError::BadBin(proposal.to));
    }
    Ok(next)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NashCertificate {
    pub mode: FeasibilityMode,
    pub is_nash: bool,
    /// Bin and class-group pairs whose volumes allowed a gain, each settled geometrically.
    pub checked: usize,
    pub improving: Option<MoveProposal>,
    pub note: &'static str,
}

const INSERTION_NOTE: &str =
    "insertion: residents stay fixed; candidate positions are exhaustive for axis-parallel cubes";
const REPACK_NOTE: &str = "repack: target bin re-laid by exhaustive search";

pub fn is_nash(config: &GameConfig, mode: FeasibilityMode) -> Result<NashCertificate, GameError> {
    let mut first = None;
    let checked = scan_moves(config, mode, |m| {
        first = Some(m);
        false
    })?;
    Ok(NashCertificate {
        mode,
        is_nash: first.is_none(),
        checked,
        improving: first,
        note: match mode {
            FeasibilityMode::Insertion => INSERTION_NOTE,
            FeasibilityMode::Repack { .. } => REPACK_NOTE,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// First improving move in item then bin order.
    First,
    /// Move with the lowest cost after the move, ties to the first.
    Best,
    /// Uniform among improving moves.
    Random(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DynamicsResult {
    pub config: GameConfig,
    pub steps: Vec<MoveProposal>,
    pub converged: bool,
    /// The descending bin-volume vector rose lexicographically at every step.
    pub potential_ok: bool,
}

fn potential(config: &GameConfig) -> Vec<Rat> {
    let mut v: Vec<Rat> = config.bin_volumes().into_values().collect();
    v.sort_by(|a, b| b.cmp(a));
    v
}

pub fn best_response_dynamics(
    config: &GameConfig,
    mode: FeasibilityMode,
    policy: Policy,
    max_steps: usize,
) -> Result<DynamicsResult, GameError> {
    let mut rng = match policy {
        Policy::Random(seed) => Some(stream(seed, "dynamics")),
        _ => None,
    };
    let mut cur = config.clone();
    let mut steps = Vec::new();
    let mut potential_ok = true;
    let mut pot = potential(&cur);
    loop {
        let chosen = match policy {
            Policy::First => {
                let mut first = None;
                scan_moves(&cur, mode, |m| {
                    first = Some(m);
                    false
                })?;
                first
            }
            Policy::Best => {
                let mut best: Option<MoveProposal> = None;
                scan_moves(&cur, mode, |m| {
                    if best.as_ref().is_none_or(|b| m.cost_after < b.cost_after) {
                        best = Some(m);
                    }
                    true
                })?;
                best
            }
            Policy::Random(_) => {
                let mut all = improving_moves(&cur, mode)?;
                if all.is_empty() {
                    None
                } else {
                    let r = rng.as_mut().expect("seeded for random policy");
                    Some(all.swap_remove(r.gen_range(0..all.len())))
                }
            }
        };
        let Some(m) = chosen else {
            cur.verify()?;
            return Ok(DynamicsResult {
                config: cur,
                steps,
                converged: true,
                potential_ok,
            });
        };
        if steps.len() == max_steps {
            cur.verify()?;
            return Ok(DynamicsResult {
                config: cur,
                steps,
                converged: false,
                potential_ok,
            });
        }
        cur = apply_move(&cur, &m)?;
        let next = potential(&cur);
        potential_ok &= next > pot;
        pot = next;
        steps.push(m);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packing::build_homogeneous;
    use alloc::vec;

    fn homogeneous(ks: &[u32], d: usize, eps: Rat) -> GameConfig {
        let bins: Vec<_> = ks
            .iter()
            .map(|&k| build_homogeneous(k, d, &eps).unwrap().bin)
            .collect();
        GameConfig::from_bins(d, &bins).unwrap()
    }

    #[test]
    fn homogeneous_pair_is_nash() {
        let cfg = homogeneous(&[2, 3], 2, Rat::new(1, 9));
        assert!(improving_moves(&cfg, FeasibilityMode::Insertion).unwrap().is_empty());
        let cert = is_nash(&cfg, FeasibilityMode::repack(12)).unwrap();
        assert!(cert.is_nash);
    }

    #[test]
    fn lone_cube_joins_a_fuller_bin() {
        let eps = Rat::new(1, 9);
        let full = build_homogeneous(3, 2, &eps).unwrap().bin;
        let cls = full.cubes()[0].class().clone();
        let mut items = Vec::new();
        let mut assignment = Vec::new();
        let mut positions = Vec::new();
        for c in full.cubes().iter().take(3) {
            items.push(cls.clone());
            assignment.push(0);
            positions.push(c.base().to_vec());
        }
        items.push(cls.clone());
        assignment.push(1);
        positions.push(vec![Rat::zero(); 2]);
        let cfg = GameConfig::new(2, items, assignment, positions).unwrap();
        let moves = improving_moves(&cfg, FeasibilityMode::Insertion).unwrap();
        assert_eq!(moves.len(), 1);
        assert_eq!((moves[0].item, moves[0].to), (3, 0));
        assert_eq!(moves[0].cost_before, Rat::one());
        assert_eq!(moves[0].cost_after, Rat::new(1, 4));
        assert!(!is_nash(&cfg, FeasibilityMode::Insertion).unwrap().is_nash);

        let res = best_response_dynamics(&cfg, FeasibilityMode::Insertion, Policy::Best, 10).unwrap();
        assert!(res.converged && res.potential_ok);
        assert_eq!(res.steps.len(), 1);
        assert_eq!(super::super::social_cost(&res.config), 1);
    }

    #[test]
    fn single_bin_has_no_moves() {
        let cfg = homogeneous(&[3], 2, Rat::new(1, 9));
        assert!(is_nash(&cfg, FeasibilityMode::Insertion).unwrap().is_nash);
        let res = best_response_dynamics(&cfg, FeasibilityMode::Insertion, Policy::First, 5).unwrap();
        assert!(res.converged && res.steps.is_empty());
    }

    #[test]
    fn two_half_bins_merge() {
        // two class-3 bins with two cubes each at d = 2
        let eps = Rat::new(1, 9);
        let full = build_homogeneous(3, 2, &eps).unwrap().bin;
        let cls = full.cubes()[0].class().clone();
        let pos: Vec<Vec<Rat>> = full.cubes().iter().take(2).map(|c| c.base().to_vec()).collect();
        let cfg = GameConfig::new(
            2,
            vec![cls; 4],
            vec![0, 0, 1, 1],
            vec![pos[0].clone(), pos[1].clone(), pos[0].clone(), pos[1].clone()],
        )
        .unwrap();
        for policy in [Policy::First, Policy::Best, Policy::Random(3)] {
            let res = best_response_dynamics(&cfg, FeasibilityMode::Insertion, policy, 10).unwrap();
            assert!(res.converged && res.potential_ok);
            assert!(is_nash(&res.config, FeasibilityMode::Insertion).unwrap().is_nash);
            assert!(super::super::social_cost(&res.config) <= 2);
        }
    }
}
