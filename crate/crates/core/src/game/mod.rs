//! The selfish hypercube bin packing game: an item pays its volume divided by
//! the occupied volume of its bin, and moves only if that strictly lowers its
//! cost.

mod fit;
mod instances;
mod moves;
mod strong;

pub use fit::{find_insertion, repack, FitError, RepackOutcome, DEFAULT_NODE_BUDGET};
pub use instances::{
    homogeneous_type, meir_moser_predicate, poa_instance, prop1_check, prop2_property_check,
    spoa_instance, AnarchyInstance, HomogeneousType, InstanceOptions, Prop2Report,
};
pub use moves::{
    apply_move, best_response_dynamics, improving_moves, is_nash, DynamicsResult, FeasibilityMode,
    MoveProposal, NashCertificate, Policy,
};
pub use strong::{
    is_strong_nash, Coalition, CoalitionTarget, StrongNashCertificate, StrongOptions,
    DEFAULT_ASSIGNMENT_LIMIT,
};

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::geometry::{verify_bin, Bin, CubeClass, GeometryError, PlacedCube};
use crate::rat::Rat;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GameError {
    #[error("invalid configuration: {0}")]
    Invalid(&'static str),
    #[error("bin {0} fails geometric verification")]
    BadBin(u64),
    #[error("repack search needs {items} items, above the cap {cap}")]
    RepackCapExceeded { items: usize, cap: usize },
    #[error("repack search ran out of its node budget")]
    RepackBudget,
    #[error("coordinates do not fit the integer grid")]
    CoordinateOverflow,
    #[error("coalition search would visit about {0} assignments, above the limit")]
    CoalitionLimit(u128),
    #[error("class {0} is not a power of two")]
    NotPowerOfTwo(u32),
    #[error("epsilon = {epsilon} exceeds 1/(k_max - 1) for k_max = {k_max}")]
    EpsilonTooLarge { epsilon: Rat, k_max: u32 },
    #[error("instance needs {0} items, above the cap")]
    TooLarge(u128),
    #[error("{0}")]
    Precondition(&'static str),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl From<FitError> for GameError {
    fn from(e: FitError) -> Self {
        match e {
            FitError::Budget => GameError::RepackBudget,
            FitError::Overflow => GameError::CoordinateOverflow,
            FitError::Cap { items, cap } => GameError::RepackCapExceeded { items, cap },
        }
    }
}

/// A configuration: every item's cube, bin and base point.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GameConfig {
    d: usize,
    items: Vec<CubeClass>,
    assignment: Vec<u64>,
    positions: Vec<Vec<Rat>>,
}

impl GameConfig {
    /// Validates shapes and that every bin passes [`verify_bin`].
    pub fn new(
        d: usize,
        items: Vec<CubeClass>,
        assignment: Vec<u64>,
        positions: Vec<Vec<Rat>>,
    ) -> Result<Self, GameError> {
        if items.len() != assignment.len() || items.len() != positions.len() {
            return Err(GameError::Invalid("items, assignment and positions differ in length"));
        }
        if items.iter().any(|c| c.d() != d) || positions.iter().any(|p| p.len() != d) {
            return Err(GameError::Invalid("dimension mismatch"));
        }
        let cfg = GameConfig {
            d,
            items,
            assignment,
            positions,
        };
        cfg.verify()?;
        Ok(cfg)
    }

    /// Items numbered bin by bin, bins numbered from 0.
    pub fn from_bins(d: usize, bins: &[Bin]) -> Result<Self, GameError> {
        let mut items = Vec::new();
        let mut assignment = Vec::new();
        let mut positions = Vec::new();
        for (b, bin) in bins.iter().enumerate() {
            for c in bin.cubes() {
                items.push(c.class().clone());
                assignment.push(b as u64);
                positions.push(c.base().to_vec());
            }
        }
        Self::new(d, items, assignment, positions)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn items(&self) -> &[CubeClass] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn assignment(&self) -> &[u64] {
        &self.assignment
    }

    pub fn positions(&self) -> &[Vec<Rat>] {
        &self.positions
    }

    pub fn bin_of(&self, item: usize) -> u64 {
        self.assignment[item]
    }

    /// Nonempty bins and their items, in increasing id order.
    pub fn bins(&self) -> BTreeMap<u64, Vec<usize>> {
        let mut m: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for (i, &b) in self.assignment.iter().enumerate() {
            m.entry(b).or_default().push(i);
        }
        m
    }

    pub fn members(&self, bin: u64) -> Vec<usize> {
        (0..self.items.len()).filter(|&i| self.assignment[i] == bin).collect()
    }

    pub fn cube(&self, item: usize) -> PlacedCube {
        PlacedCube::new(self.items[item].clone(), self.positions[item].clone())
            .expect("lengths checked on construction")
    }

    pub fn bin(&self, id: u64) -> Bin {
        let cubes = self.members(id).into_iter().map(|i| self.cube(i)).collect();
        Bin::with_cubes(self.d, cubes).expect("dimensions checked on construction")
    }

    pub fn to_bins(&self) -> Vec<(u64, Bin)> {
        self.bins().keys().map(|&b| (b, self.bin(b))).collect()
    }

    pub fn bin_volume(&self, id: u64) -> Rat {
        self.members(id).iter().map(|&i| self.items[i].volume()).sum()
    }

    pub fn bin_volumes(&self) -> BTreeMap<u64, Rat> {
        let mut m: BTreeMap<u64, Rat> = BTreeMap::new();
        for (i, &b) in self.assignment.iter().enumerate() {
            *m.entry(b).or_insert_with(Rat::zero) += self.items[i].volume();
        }
        m
    }

    /// Smallest id not in use.
    pub fn fresh_bin_id(&self) -> u64 {
        self.assignment.iter().max().map_or(0, |m| m + 1)
    }

    pub fn verify(&self) -> Result<(), GameError> {
        for (id, bin) in self.to_bins() {
            if !verify_bin(&bin).is_ok() {
                return Err(GameError::BadBin(id));
            }
        }
        Ok(())
    }

    pub(crate) fn set(&mut self, item: usize, bin: u64, base: Vec<Rat>) {
        self.assignment[item] = bin;
        self.positions[item] = base;
    }
}

/// `vol(item) / vol(its bin)`.
pub fn item_cost(config: &GameConfig, item: usize) -> Rat {
    config.items[item].volume() / config.bin_volume(config.bin_of(item))
}

/// Number of nonempty bins.
pub fn social_cost(config: &GameConfig) -> usize {
    config.bins().len()
}

/// The costs of the items in each bin add up to 1, so all costs add up to
/// the social cost. Checked exactly.
pub fn costs_sum_to_social_cost(config: &GameConfig) -> bool {
    let vols = config.bin_volumes();
    let total: Rat = (0..config.len())
        .map(|i| config.items[i].volume() / &vols[&config.bin_of(i)])
        .sum();
    total == Rat::from(social_cost(config) as u64)
}
