//! Words over `[k]^d`, languages of such words, and the gapped/separated
//! predicates that make the cubes of a family pairwise disjoint.
//!
//! Coordinates are 0-based throughout; letters are 1-based (`1..=k`).
//!
//! A [`Language`] is stored in product form: a sorted set `F` of *core*
//! coordinates carrying the letters of a core word, and the remaining *free*
//! coordinates ranging over all of `[k-1]`. An arbitrary word set is the
//! special case `F = [d]`.

mod count;
mod family;
mod fsets;

pub use count::{
    count_good_words, estimate_good_words, estimate_value, CountMode, GoodWordCount,
    DEFAULT_TERM_CAP,
};
pub use family::{
    build_separated_family, consecutive_classes, power_of_two_classes, warmup_family,
    warmup_family_for_classes, BuildMode, FamilyCertificate, FamilyKind, FamilyOptions,
    PairCheck, SeparatedFamily,
};
pub use fsets::{default_threshold, sample_f_sets, FSets};

use alloc::vec;
use alloc::vec::Vec;
use core::ops::ControlFlow;

use num_bigint::BigUint;
use num_traits::One;
use rand::Rng;

/// Maximum number of core-word pairs the exhaustive separation check visits.
pub const SEPARATION_PAIR_CAP: u128 = 20_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LanguageError {
    #[error("alphabet bound k must be >= 2, got {0}")]
    ClassTooSmall(u32),
    #[error("word has length {got}, expected {expected}")]
    WrongLength { expected: usize, got: usize },
    #[error("letter {letter} outside [1, {k}]")]
    LetterOutOfRange { letter: u32, k: u32 },
    #[error("core coordinate {0} is out of range or repeated")]
    BadCoreCoordinate(usize),
    #[error("core word letter {letter} is not allowed (k = {k})")]
    BadCoreLetter { letter: u32, k: u32 },
    #[error("separation needs k < k', got {0} and {1}")]
    ClassOrder(u32, u32),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("exhaustive separation check needs {0} core pairs, above the cap")]
    SeparationUndecided(u128),
    #[error("F-set sampling gave up after {attempts} attempts (d = {d}, {count} sets, smallest max intersection seen {best_max_intersection}); threshold too tight for this d")]
    FSetBudgetExhausted {
        d: usize,
        count: usize,
        attempts: u64,
        best_max_intersection: usize,
    },
    #[error("enumerating class {k} needs (k-1)^|F| = {size} core words, above the cap {cap}")]
    EnumerateCapExceeded { k: u32, size: BigUint, cap: u64 },
    #[error("inclusion-exclusion needs 2^{sets} terms, above the cap {cap}")]
    TermCapExceeded { sets: usize, cap: u64 },
    #[error("{0}")]
    Invalid(&'static str),
}

/// A word `w in [k]^d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    k: u32,
    letters: Vec<u32>,
}

impl Word {
    pub fn new(k: u32, letters: Vec<u32>) -> Result<Self, LanguageError> {
        if k < 2 {
            return Err(LanguageError::ClassTooSmall(k));
        }
        if let Some(&letter) = letters.iter().find(|&&l| l == 0 || l > k) {
            return Err(LanguageError::LetterOutOfRange { letter, k });
        }
        Ok(Word { k, letters })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn d(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[u32] {
        &self.letters
    }
}

/// One avoid set of a good-word core: the positions (into the core
/// coordinates) of `J(l, k) = F_k \ F_l` for a smaller class `l`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AvoidSet {
    pub against: u32,
    pub positions: Vec<usize>,
}

/// The core part of a language.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Core {
    /// Explicit core words, sorted lexicographically and deduplicated.
    Words(Vec<Vec<u32>>),
    /// Every word over `[k] \ {k-1}` that is not bad, i.e. that has letter `k`
    /// somewhere on each avoid set.
    Good { avoid: Vec<AvoidSet> },
}

/// Which of `k-1`, `k` a language misses at one coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Missed {
    KMinusOne,
    K,
    Both,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GappedCertificate {
    pub gapped: bool,
    /// `None` at a coordinate where both `k-1` and `k` occur.
    pub per_coordinate: Vec<Option<Missed>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeparationMethod {
    /// One side is empty.
    Vacuous,
    /// The larger class hits its letter on a coordinate set that is free in
    /// the smaller language, for every core word.
    Structural,
    /// Every pair of core words was checked.
    Exhaustive { core_pairs: u128 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparationCheck {
    pub separated: bool,
    pub method: SeparationMethod,
    /// A full word pair `(w, w')` with no separating coordinate.
    pub witness: Option<(Vec<u32>, Vec<u32>)>,
}

/// A `k`-language in product form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Language {
    k: u32,
    d: usize,
    core_coords: Vec<usize>,
    core: Core,
}

impl Language {
    /// Arbitrary word set: every coordinate is a core coordinate.
    pub fn explicit(k: u32, d: usize, words: Vec<Vec<u32>>) -> Result<Self, LanguageError> {
        Self::product(k, d, (0..d).collect(), words)
    }

    /// `core_words x [k-1]^([d] \ core_coords)`.
    pub fn product(
        k: u32,
        d: usize,
        core_coords: Vec<usize>,
        mut core_words: Vec<Vec<u32>>,
    ) -> Result<Self, LanguageError> {
        check_k(k)?;
        check_coords(d, &core_coords)?;
        for w in &core_words {
            if w.len() != core_coords.len() {
                return Err(LanguageError::WrongLength {
                    expected: core_coords.len(),
                    got: w.len(),
                });
            }
            if let Some(&letter) = w.iter().find(|&&l| l == 0 || l > k) {
                return Err(LanguageError::LetterOutOfRange { letter, k });
            }
        }
        core_words.sort();
        core_words.dedup();
        Ok(Language {
            k,
            d,
            core_coords,
            core: Core::Words(core_words),
        })
    }

    /// Good words over `[k] \ {k-1}` on `core_coords`, free elsewhere.
    pub fn good_words(
        k: u32,
        d: usize,
        core_coords: Vec<usize>,
        avoid: Vec<AvoidSet>,
    ) -> Result<Self, LanguageError> {
        check_k(k)?;
        check_coords(d, &core_coords)?;
        for a in &avoid {
            if a.positions.iter().any(|&p| p >= core_coords.len()) {
                return Err(LanguageError::Invalid("avoid position outside the core"));
            }
        }
        Ok(Language {
            k,
            d,
            core_coords,
            core: Core::Good { avoid },
        })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn core_coords(&self) -> &[usize] {
        &self.core_coords
    }

    pub fn core(&self) -> &Core {
        &self.core
    }

    pub fn is_free(&self, coord: usize) -> bool {
        self.core_coords.binary_search(&coord).is_err()
    }

    pub fn free_count(&self) -> usize {
        self.d - self.core_coords.len()
    }

    /// Exact number of core words.
    pub fn core_count(&self) -> BigUint {
        match &self.core {
            Core::Words(ws) => BigUint::from(ws.len()),
            Core::Good { avoid } => {
                let sets: Vec<Vec<usize>> = avoid.iter().map(|a| a.positions.clone()).collect();
                match count_good_words(self.k, self.core_coords.len(), &sets, CountMode::exact())
                {
                    Ok(GoodWordCount::Exact(n)) => n,
                    _ => brute_force_good(self.k, self.core_coords.len(), &sets),
                }
            }
        }
    }

    /// `|L| = |core| * (k-1)^(d - |F|)`.
    pub fn len(&self) -> BigUint {
        self.core_count() * BigUint::from(self.k - 1).pow(self.free_count() as u32)
    }

    pub fn is_empty(&self) -> bool {
        match &self.core {
            Core::Words(ws) => ws.is_empty(),
            Core::Good { avoid } => {
                // k = 2 has alphabet {2}; otherwise an empty avoid set is unhittable
                avoid.iter().any(|a| a.positions.is_empty())
            }
        }
    }

    pub fn contains(&self, word: &[u32]) -> bool {
        if word.len() != self.d || word.iter().any(|&l| l == 0 || l > self.k) {
            return false;
        }
        let mut core = Vec::with_capacity(self.core_coords.len());
        let mut ci = 0;
        for (i, &l) in word.iter().enumerate() {
            if ci < self.core_coords.len() && self.core_coords[ci] == i {
                core.push(l);
                ci += 1;
            } else if l > self.k - 1 {
                return false;
            }
        }
        self.core_contains(&core)
    }

    pub fn core_contains(&self, core: &[u32]) -> bool {
        match &self.core {
            Core::Words(ws) => ws.binary_search_by(|w| w.as_slice().cmp(core)).is_ok(),
            Core::Good { avoid } => {
                core.len() == self.core_coords.len()
                    && core.iter().all(|&l| l >= 1 && l <= self.k && l != self.k - 1)
                    && avoid
                        .iter()
                        .all(|a| !is_bad_word(core, self.k, &a.positions))
            }
        }
    }

    /// Visits core words in lexicographic order.
    pub fn for_each_core_word<F>(&self, mut f: F) -> ControlFlow<()>
    where
        F: FnMut(&[u32]) -> ControlFlow<()>,
    {
        match &self.core {
            Core::Words(ws) => {
                for w in ws {
                    f(w)?;
                }
                ControlFlow::Continue(())
            }
            Core::Good { avoid } => {
                let sets: Vec<&[usize]> = avoid.iter().map(|a| a.positions.as_slice()).collect();
                for_each_good_word(self.k, self.core_coords.len(), &sets, &mut f)
            }
        }
    }

    pub fn core_words(&self, limit: Option<usize>) -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        let _ = self.for_each_core_word(|w| {
            if limit.is_some_and(|l| out.len() >= l) {
                return ControlFlow::Break(());
            }
            out.push(w.to_vec());
            ControlFlow::Continue(())
        });
        out
    }

    /// Visits full words in lexicographic order.
    pub fn for_each_word<F>(&self, mut f: F) -> ControlFlow<()>
    where
        F: FnMut(&[u32]) -> ControlFlow<()>,
    {
        let mut buf = vec![0u32; self.d];
        match &self.core {
            Core::Words(ws) => self.dfs_words(0, 0, 0, ws.len(), ws, &mut buf, &mut f),
            Core::Good { avoid } => {
                let mut hit = vec![false; avoid.len()];
                // last core position of each avoid set
                let last: Vec<Option<usize>> =
                    avoid.iter().map(|a| a.positions.iter().copied().max()).collect();
                let member: Vec<Vec<usize>> = (0..self.core_coords.len())
                    .map(|p| {
                        (0..avoid.len())
                            .filter(|&s| avoid[s].positions.contains(&p))
                            .collect()
                    })
                    .collect();
                if last.iter().any(Option::is_none) {
                    return ControlFlow::Continue(());
                }
                let last: Vec<usize> = last.into_iter().flatten().collect();
                self.dfs_good(0, 0, &last, &member, &mut hit, &mut buf, &mut f)
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn dfs_words<F>(
        &self,
        pos: usize,
        cpos: usize,
        lo: usize,
        hi: usize,
        ws: &[Vec<u32>],
        buf: &mut [u32],
        f: &mut F,
    ) -> ControlFlow<()>
    where
        F: FnMut(&[u32]) -> ControlFlow<()>,
    {
        if lo >= hi {
            return ControlFlow::Continue(());
        }
        if pos == self.d {
            return f(buf);
        }
        if cpos < self.core_coords.len() && self.core_coords[cpos] == pos {
            let mut start = lo;
            while start < hi {
                let letter = ws[start][cpos];
                let mut end = start;
                while end < hi && ws[end][cpos] == letter {
                    end += 1;
                }
                buf[pos] = letter;
                self.dfs_words(pos + 1, cpos + 1, start, end, ws, buf, f)?;
                start = end;
            }
            ControlFlow::Continue(())
        } else {
            for letter in 1..self.k {
                buf[pos] = letter;
                self.dfs_words(pos + 1, cpos, lo, hi, ws, buf, f)?;
            }
            ControlFlow::Continue(())
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn dfs_good<F>(
        &self,
        pos: usize,
        cpos: usize,
        last: &[usize],
        member: &[Vec<usize>],
        hit: &mut [bool],
        buf: &mut [u32],
        f: &mut F,
    ) -> ControlFlow<()>
    where
        F: FnMut(&[u32]) -> ControlFlow<()>,
    {
        if pos == self.d {
            return f(buf);
        }
        if cpos < self.core_coords.len() && self.core_coords[cpos] == pos {
            for letter in core_alphabet(self.k) {
                buf[pos] = letter;
                let mut newly = Vec::new();
                if letter == self.k {
                    for &s in &member[cpos] {
                        if !hit[s] {
                            hit[s] = true;
                            newly.push(s);
                        }
                    }
                }
                // every set whose last position is here must be hit by now
                let feasible = member[cpos]
                    .iter()
                    .all(|&s| hit[s] || last[s] != cpos);
                let r = if feasible {
                    self.dfs_good(pos + 1, cpos + 1, last, member, hit, buf, f)
                } else {
                    ControlFlow::Continue(())
                };
                for s in newly {
                    hit[s] = false;
                }
                r?;
            }
            ControlFlow::Continue(())
        } else {
            for letter in 1..self.k {
                buf[pos] = letter;
                self.dfs_good(pos + 1, cpos, last, member, hit, buf, f)?;
            }
            ControlFlow::Continue(())
        }
    }

    /// Up to `limit` full words in lexicographic order.
    pub fn words(&self, limit: Option<usize>) -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        let _ = self.for_each_word(|w| {
            if limit.is_some_and(|l| out.len() >= l) {
                return ControlFlow::Break(());
            }
            out.push(w.to_vec());
            ControlFlow::Continue(())
        });
        out
    }

    /// Uniform core word; `None` if the core looks empty (good-word rejection
    /// sampling gave up after `attempts` draws).
    pub fn sample_core_word<R: Rng + ?Sized>(&self, rng: &mut R, attempts: u32) -> Option<Vec<u32>> {
        match &self.core {
            Core::Words(ws) if ws.is_empty() => None,
            Core::Words(ws) => Some(ws[rng.gen_range(0..ws.len())].clone()),
            Core::Good { .. } => {
                let alphabet = core_alphabet(self.k);
                for _ in 0..attempts {
                    let v: Vec<u32> = (0..self.core_coords.len())
                        .map(|_| alphabet[rng.gen_range(0..alphabet.len())])
                        .collect();
                    if self.core_contains(&v) {
                        return Some(v);
                    }
                }
                None
            }
        }
    }

    /// Random word: uniform core word, uniform free letters.
    pub fn sample_word<R: Rng + ?Sized>(&self, rng: &mut R, attempts: u32) -> Option<Vec<u32>> {
        let core = self.sample_core_word(rng, attempts)?;
        Some(self.assemble(&core, |_| rng.gen_range(1..self.k)))
    }

    /// Full word from a core word, with `free(i)` at free coordinate `i`.
    pub fn assemble(&self, core: &[u32], mut free: impl FnMut(usize) -> u32) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.d);
        let mut ci = 0;
        for i in 0..self.d {
            if ci < self.core_coords.len() && self.core_coords[ci] == i {
                out.push(core[ci]);
                ci += 1;
            } else {
                out.push(free(i));
            }
        }
        out
    }

    /// Letters that occur at core position `p` (restricted to `k-1` and `k`).
    fn core_presence(&self, p: usize) -> (bool, bool) {
        let km1 = self.k - 1;
        match &self.core {
            Core::Words(ws) => (
                ws.iter().any(|w| w[p] == km1),
                ws.iter().any(|w| w[p] == self.k),
            ),
            // the alphabet excludes k-1; setting any position of a good word
            // to k keeps it good, so k occurs iff the core is nonempty
            Core::Good { .. } => (false, !self.is_empty()),
        }
    }
}

fn check_k(k: u32) -> Result<(), LanguageError> {
    if k < 2 {
        Err(LanguageError::ClassTooSmall(k))
    } else {
        Ok(())
    }
}

fn check_coords(d: usize, coords: &[usize]) -> Result<(), LanguageError> {
    for (i, &c) in coords.iter().enumerate() {
        if c >= d || (i > 0 && coords[i - 1] >= c) {
            return Err(LanguageError::BadCoreCoordinate(c));
        }
    }
    Ok(())
}

/// `[k] \ {k-1}` in increasing order.
pub fn core_alphabet(k: u32) -> Vec<u32> {
    (1..=k).filter(|&l| l != k - 1).collect()
}

/// True iff `v` avoids letter `k` on every position of `j`.
pub fn is_bad_word(v: &[u32], k: u32, j: &[usize]) -> bool {
    j.iter().all(|&p| v[p] != k)
}

fn for_each_good_word<F>(k: u32, len: usize, sets: &[&[usize]], f: &mut F) -> ControlFlow<()>
where
    F: FnMut(&[u32]) -> ControlFlow<()>,
{
    if sets.iter().any(|s| s.is_empty()) {
        return ControlFlow::Continue(());
    }
    let alphabet = core_alphabet(k);
    let last: Vec<usize> = sets.iter().map(|s| *s.iter().max().unwrap()).collect();
    let member: Vec<Vec<usize>> = (0..len)
        .map(|p| (0..sets.len()).filter(|&s| sets[s].contains(&p)).collect())
        .collect();
    let mut hit = vec![false; sets.len()];
    let mut buf = vec![0u32; len];
    good_dfs(0, k, &alphabet, &last, &member, &mut hit, &mut buf, f)
}

#[allow(clippy::too_many_arguments)]
fn good_dfs<F>(
    pos: usize,
    k: u32,
    alphabet: &[u32],
    last: &[usize],
    member: &[Vec<usize>],
    hit: &mut [bool],
    buf: &mut [u32],
    f: &mut F,
) -> ControlFlow<()>
where
    F: FnMut(&[u32]) -> ControlFlow<()>,
{
    if pos == buf.len() {
        return f(buf);
    }
    for &letter in alphabet {
        buf[pos] = letter;
        let mut newly = Vec::new();
        if letter == k {
            for &s in &member[pos] {
                if !hit[s] {
                    hit[s] = true;
                    newly.push(s);
                }
            }
        }
        let feasible = member[pos].iter().all(|&s| hit[s] || last[s] != pos);
        let r = if feasible {
            good_dfs(pos + 1, k, alphabet, last, member, hit, buf, f)
        } else {
            ControlFlow::Continue(())
        };
        for s in newly {
            hit[s] = false;
        }
        r?;
    }
    ControlFlow::Continue(())
}

/// Counts good words by plain enumeration of `([k] \ {k-1})^len`.
pub(crate) fn brute_force_good(k: u32, len: usize, sets: &[Vec<usize>]) -> BigUint {
    let mut n = BigUint::from(0u32);
    let alphabet = core_alphabet(k);
    let mut v = vec![0usize; len];
    let mut word = vec![alphabet[0]; len];
    loop {
        if sets.iter().all(|s| !is_bad_word(&word, k, s)) {
            n += BigUint::one();
        }
        let mut i = 0;
        loop {
            if i == len {
                return n;
            }
            v[i] += 1;
            if v[i] < alphabet.len() {
                word[i] = alphabet[v[i]];
                break;
            }
            v[i] = 0;
            word[i] = alphabet[0];
            i += 1;
        }
    }
}

/// Checks the gapped property: at each coordinate the language misses `k-1`
/// or misses `k`.
pub fn is_gapped(lang: &Language) -> GappedCertificate {
    let empty = lang.is_empty();
    let mut per_coordinate = Vec::with_capacity(lang.d);
    let mut cpos = 0;
    for i in 0..lang.d {
        let (has_km1, has_k) = if empty {
            (false, false)
        } else if cpos < lang.core_coords.len() && lang.core_coords[cpos] == i {
            let p = lang.core_presence(cpos);
            cpos += 1;
            p
        } else {
            // free letters range over [k-1]
            (true, false)
        };
        per_coordinate.push(match (has_km1, has_k) {
            (false, false) => Some(Missed::Both),
            (false, true) => Some(Missed::KMinusOne),
            (true, false) => Some(Missed::K),
            (true, true) => None,
        });
    }
    GappedCertificate {
        gapped: per_coordinate.iter().all(Option::is_some),
        per_coordinate,
    }
}

/// Checks that every `w in small`, `w' in large` have a coordinate with
/// `w_i < k` and `w'_i = k'`.
///
/// Only core words matter: a free coordinate of `small` always carries a
/// letter below `k`, and a free coordinate of `large` can always avoid `k'`.
pub fn are_separated(small: &Language, large: &Language) -> Result<SeparationCheck, LanguageError> {
    if small.k >= large.k {
        return Err(LanguageError::ClassOrder(small.k, large.k));
    }
    if small.d != large.d {
        return Err(LanguageError::DimensionMismatch(small.d, large.d));
    }
    if small.is_empty() || large.is_empty() {
        return Ok(SeparationCheck {
            separated: true,
            method: SeparationMethod::Vacuous,
            witness: None,
        });
    }
    if let Core::Good { avoid } = &large.core {
        let structural = avoid.iter().any(|a| {
            a.positions
                .iter()
                .all(|&p| small.is_free(large.core_coords[p]))
        });
        if structural {
            return Ok(SeparationCheck {
                separated: true,
                method: SeparationMethod::Structural,
                witness: None,
            });
        }
    }
    let pairs = small.core_count() * large.core_count();
    let pairs: u128 = u128::try_from(pairs).unwrap_or(u128::MAX);
    if pairs > SEPARATION_PAIR_CAP {
        return Err(LanguageError::SeparationUndecided(pairs));
    }
    let small_cores = small.core_words(None);
    let (k, k2) = (small.k, large.k);
    let mut witness = None;
    let _ = large.for_each_core_word(|c2| {
        // coordinates where the large word carries k'
        let hits: Vec<usize> = large
            .core_coords
            .iter()
            .zip(c2)
            .filter(|(_, &l)| l == k2)
            .map(|(&i, _)| i)
            .collect();
        for c in &small_cores {
            let ok = hits.iter().any(|&i| match small.core_coords.binary_search(&i) {
                Err(_) => true,
                Ok(p) => c[p] < k,
            });
            if !ok {
                witness = Some((small.assemble(c, |_| 1), large.assemble(c2, |_| 1)));
                return ControlFlow::Break(());
            }
        }
        ControlFlow::Continue(())
    });
    Ok(SeparationCheck {
        separated: witness.is_none(),
        method: SeparationMethod::Exhaustive { core_pairs: pairs },
        witness,
    })
}

/// True iff the full words `w` (class `k`) and `w2` (class `k2`) have a
/// separating coordinate.
pub fn words_separated(w: &[u32], k: u32, w2: &[u32], k2: u32) -> bool {
    w.iter().zip(w2).any(|(&a, &b)| a < k && b == k2)
}

/// Draws `samples` random word pairs and checks each directly. Returns the
/// first failing pair, if any.
pub fn sampled_separation<R: Rng + ?Sized>(
    small: &Language,
    large: &Language,
    rng: &mut R,
    samples: u32,
) -> Option<(Vec<u32>, Vec<u32>)> {
    for _ in 0..samples {
        let (Some(w), Some(w2)) = (small.sample_word(rng, 10_000), large.sample_word(rng, 10_000))
        else {
            return None;
        };
        if !words_separated(&w, small.k, &w2, large.k) {
            return Some((w, w2));
        }
    }
    None
}
