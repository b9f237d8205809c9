//! Exhaustive search for a coalition whose members all gain by moving
//! together.
//!
//! A member that stays put only adds volume for others, and a deviation by a
//! coalition is still a deviation when the stayers are dropped, so every
//! member is taken to move. Non-members keep their bins and, under insertion,
//! their positions.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::fit::Scale;
use super::moves::{fit_into, FeasibilityMode};
use super::{GameConfig, GameError};
use crate::rat::Rat;

/// Search nodes allowed before giving up with [`GameError::CoalitionLimit`].
pub const DEFAULT_ASSIGNMENT_LIMIT: u64 = 200_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StrongOptions {
    pub cap: usize,
    pub mode: FeasibilityMode,
    pub assignment_limit: u64,
}

impl StrongOptions {
    pub fn new(cap: usize, mode: FeasibilityMode) -> Self {
        StrongOptions {
            cap,
            mode,
            assignment_limit: DEFAULT_ASSIGNMENT_LIMIT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CoalitionTarget {
    Existing(u64),
    /// Fresh bins, numbered in order of first use.
    New(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coalition {
    pub members: Vec<(usize, CoalitionTarget)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrongNashCertificate {
    pub strong: bool,
    pub max_size: usize,
    pub mode: FeasibilityMode,
    /// Coalitions where every member gains by volume and geometry was checked.
    pub coalitions_checked: u64,
    /// Partial and complete joint assignments visited.
    pub assignments_checked: u64,
    pub witness: Option<Coalition>,
}

struct Search<'a> {
    config: &'a GameConfig,
    opts: StrongOptions,
    ids: Vec<u64>,
    src: Vec<usize>,
    vol: Vec<i128>,
    bin_vol: Vec<i128>,
    suffix_max: Vec<i128>,
    // running state; targets index `ids` first, then fresh bins
    members: Vec<(usize, usize)>,
    departed: Vec<i128>,
    arrived: Vec<i128>,
    fresh: usize,
    cache: BTreeMap<(usize, Vec<usize>, Vec<usize>), bool>,
    nodes: u64,
    geometric: u64,
}

impl Search<'_> {
    fn after(&self, t: usize) -> i128 {
        let base = self.bin_vol.get(t).copied().unwrap_or(0);
        base - self.departed[t] + self.arrived[t]
    }

    /// Whether every member could still gain if the open slots were filled
    /// with the largest remaining items, all arriving where they help most.
    fn hopeful(&self, next: usize) -> bool {
        let slots = (self.opts.cap - self.members.len()) as i128;
        let extra = slots * self.suffix_max.get(next).copied().unwrap_or(0);
        self.members
            .iter()
            .all(|&(i, t)| self.after(t) + extra > self.bin_vol[self.src[i]])
    }

    fn all_gain(&self) -> bool {
        self.members
            .iter()
            .all(|&(i, t)| self.after(t) > self.bin_vol[self.src[i]])
    }

    fn feasible(&mut self) -> Result<bool, GameError> {
        let mut targets: Vec<usize> = self.members.iter().map(|&(_, t)| t).collect();
        targets.sort_unstable();
        targets.dedup();
        for t in targets {
            let arrivals: Vec<usize> = self.members.iter().filter(|m| m.1 == t).map(|m| m.0).collect();
            let departing: Vec<usize> = if t < self.ids.len() {
                self.members.iter().filter(|m| self.src[m.0] == t).map(|m| m.0).collect()
            } else {
                Vec::new()
            };
            // fresh bins are interchangeable
            let key_t = if t < self.ids.len() { t } else { usize::MAX };
            let key = (key_t, departing.clone(), arrivals.clone());
            let ok = match self.cache.get(&key) {
                Some(&ok) => ok,
                None => {
                    let target = (t < self.ids.len()).then(|| self.ids[t]);
                    let ok = fit_into(self.config, target, &departing, &arrivals, self.opts.mode)?.is_some();
                    self.cache.insert(key, ok);
                    ok
                }
            };
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn dfs(&mut self, next: usize) -> Result<bool, GameError> {
        if self.members.len() == self.opts.cap {
            return Ok(false);
        }
        for j in next..self.src.len() {
            let slots = self.ids.len() + self.fresh + 1;
            for t in 0..slots {
                if t == self.src[j] {
                    continue;
                }
                self.nodes += 1;
                if self.nodes > self.opts.assignment_limit {
                    return Err(GameError::CoalitionLimit(self.nodes as u128));
                }
                let opened = t == self.ids.len() + self.fresh;
                if opened {
                    self.fresh += 1;
                    self.departed.push(0);
                    self.arrived.push(0);
                }
                self.members.push((j, t));
                self.departed[self.src[j]] += self.vol[j];
                self.arrived[t] += self.vol[j];

                let mut found = false;
                if self.hopeful(j + 1) {
                    if self.all_gain() {
                        self.geometric += 1;
                        found = self.feasible()?;
                    }
                    if !found {
                        found = self.dfs(j + 1)?;
                    }
                }
                if found {
                    return Ok(true);
                }

                self.arrived[t] -= self.vol[j];
                self.departed[self.src[j]] -= self.vol[j];
                self.members.pop();
                if opened {
                    self.fresh -= 1;
                    self.departed.pop();
                    self.arrived.pop();
                }
            }
        }
        Ok(false)
    }
}

pub fn is_strong_nash(config: &GameConfig, opts: StrongOptions) -> Result<StrongNashCertificate, GameError> {
    if opts.cap == 0 {
        return Err(GameError::Precondition("coalition cap must be at least 1"));
    }
    let vols: Vec<Rat> = config.items().iter().map(|c| c.volume()).collect();
    let scale = Scale::new(vols.iter());
    let vol = vols
        .iter()
        .map(|v| scale.int(v))
        .collect::<Result<Vec<_>, _>>()?;
    let ids: Vec<u64> = config.bins().into_keys().collect();
    let index: BTreeMap<u64, usize> = ids.iter().enumerate().map(|(i, &b)| (b, i)).collect();
    let src: Vec<usize> = config.assignment().iter().map(|b| index[b]).collect();
    let mut bin_vol = vec![0i128; ids.len()];
    for (i, &s) in src.iter().enumerate() {
        bin_vol[s] += vol[i];
    }
    let mut suffix_max = vec![0i128; vol.len() + 1];
    for i in (0..vol.len()).rev() {
        suffix_max[i] = suffix_max[i + 1].max(vol[i]);
    }
    let n_bins = ids.len();
    let mut search = Search {
        config,
        opts,
        ids,
        src,
        vol,
        bin_vol,
        suffix_max,
        members: Vec::new(),
        departed: vec![0; n_bins],
        arrived: vec![0; n_bins],
        fresh: 0,
        cache: BTreeMap::new(),
        nodes: 0,
        geometric: 0,
    };
    let found = search.dfs(0)?;
    let witness = found.then(|| Coalition {
        members: search
            .members
            .iter()
            .map(|&(i, t)| {
                let target = if t < search.ids.len() {
                    CoalitionTarget::Existing(search.ids[t])
                } else {
                    CoalitionTarget::New(t - search.ids.len())
                };
                (i, target)
            })
            .collect(),
    });
    Ok(StrongNashCertificate {
        strong: !found,
        max_size: opts.cap,
        mode: opts.mode,
        coalitions_checked: search.geometric,
        assignments_checked: search.nodes,
        witness,
    })
}
