//! JSON file formats. Every rational is a `"num/den"` string.

use std::collections::BTreeSet;
use std::path::Path;

use hcpack_core::game::GameConfig;
use hcpack_core::geometry::{Bin, CubeClass, PlacedCube};
use hcpack_core::languages::{AvoidSet, Core, FSets, FamilyKind, Language, SeparatedFamily};
use hcpack_core::online::{AdversaryPlan, Instance, Segment};
use hcpack_core::packing::TypedPacking;
use hcpack_core::Rat;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::manifest::RunManifest;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid content: {0}")]
    Invalid(String),
}

fn invalid(e: impl std::fmt::Display) -> FormatError {
    FormatError::Invalid(e.to_string())
}

/// Serde adapters for [`Rat`] as `"num/den"`.
pub mod rat {
    use hcpack_core::Rat;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rat, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(r)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(|_| D::Error::custom(format!("bad rational `{s}`")))
    }

    pub mod vec {
        use hcpack_core::Rat;
        use serde::ser::SerializeSeq;
        use serde::{de::Error, Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(v: &[Rat], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for r in v {
                seq.serialize_element(&r.to_string())?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rat>, D::Error> {
            Vec::<String>::deserialize(d)?
                .iter()
                .map(|s| s.parse().map_err(|_| D::Error::custom(format!("bad rational `{s}`"))))
                .collect()
        }
    }

    pub mod option {
        use hcpack_core::Rat;
        use serde::{de::Error, Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(r: &Option<Rat>, s: S) -> Result<S::Ok, S::Error> {
            match r {
                Some(r) => s.collect_str(r),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rat>, D::Error> {
            Option::<String>::deserialize(d)?
                .map(|s| s.parse().map_err(|_| D::Error::custom(format!("bad rational `{s}`"))))
                .transpose()
        }
    }
}

/// Serde adapter for big integers as decimal strings.
pub mod big {
    use num_bigint::BigUint;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(n: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(n)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(|_| D::Error::custom(format!("bad integer `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeRecord {
    pub k: u32,
    #[serde(with = "rat")]
    pub epsilon: Rat,
    #[serde(with = "rat::vec")]
    pub base: Vec<Rat>,
}

impl CubeRecord {
    fn from_cube(c: &PlacedCube) -> Self {
        CubeRecord {
            k: c.k(),
            epsilon: c.class().epsilon().clone(),
            base: c.base().to_vec(),
        }
    }

    fn class(&self, d: usize) -> Result<CubeClass, FormatError> {
        CubeClass::new(self.k, self.epsilon.clone(), d).map_err(invalid)
    }

    fn to_cube(&self, d: usize) -> Result<PlacedCube, FormatError> {
        if self.base.len() != d {
            return Err(FormatError::Invalid(format!(
                "base has {} coordinates in dimension {d}",
                self.base.len()
            )));
        }
        PlacedCube::new(self.class(d)?, self.base.clone()).map_err(invalid)
    }
}

/// One bin of cubes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackingFile {
    pub d: usize,
    pub cubes: Vec<CubeRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
}

impl PackingFile {
    pub fn from_bin(bin: &Bin) -> Self {
        PackingFile {
            d: bin.d(),
            cubes: bin.cubes().iter().map(CubeRecord::from_cube).collect(),
            manifest: None,
        }
    }

    /// The bin as written; overlap is not checked here.
    pub fn to_bin(&self) -> Result<Bin, FormatError> {
        if self.d == 0 {
            return Err(invalid("dimension must be positive"));
        }
        let cubes = self
            .cubes
            .iter()
            .map(|c| c.to_cube(self.d))
            .collect::<Result<Vec<_>, _>>()?;
        Bin::with_cubes(self.d, cubes).map_err(invalid)
    }

    /// The bin as a typed packing; fails unless it verifies.
    pub fn to_typed(&self) -> Result<TypedPacking, FormatError> {
        TypedPacking::from_bin(self.to_bin()?).map_err(invalid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigCube {
    pub item: usize,
    pub k: u32,
    #[serde(with = "rat")]
    pub epsilon: Rat,
    #[serde(with = "rat::vec")]
    pub base: Vec<Rat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigBin {
    pub id: u64,
    pub cubes: Vec<ConfigCube>,
}

/// A game configuration: bins of cubes carrying item ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigFile {
    pub d: usize,
    pub bins: Vec<ConfigBin>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
}

impl ConfigFile {
    pub fn from_config(config: &GameConfig) -> Self {
        let bins = config
            .bins()
            .into_iter()
            .map(|(id, members)| ConfigBin {
                id,
                cubes: members
                    .into_iter()
                    .map(|i| {
                        let c = &config.items()[i];
                        ConfigCube {
                            item: i,
                            k: c.k(),
                            epsilon: c.epsilon().clone(),
                            base: config.positions()[i].clone(),
                        }
                    })
                    .collect(),
            })
            .collect();
        ConfigFile {
            d: config.d(),
            bins,
            manifest: None,
        }
    }

    /// Item ids must be exactly `0..n`; every bin must verify.
    pub fn to_config(&self) -> Result<GameConfig, FormatError> {
        let n: usize = self.bins.iter().map(|b| b.cubes.len()).sum();
        let mut slots: Vec<Option<(CubeClass, u64, Vec<Rat>)>> = vec![None; n];
        let mut ids = BTreeSet::new();
        for bin in &self.bins {
            if !ids.insert(bin.id) {
                return Err(FormatError::Invalid(format!("bin id {} repeated", bin.id)));
            }
            for c in &bin.cubes {
                let rec = CubeRecord {
                    k: c.k,
                    epsilon: c.epsilon.clone(),
                    base: c.base.clone(),
                };
                let cube = rec.to_cube(self.d)?;
                let slot = slots
                    .get_mut(c.item)
                    .ok_or_else(|| FormatError::Invalid(format!("item id {} out of range 0..{n}", c.item)))?;
                if slot.is_some() {
                    return Err(FormatError::Invalid(format!("item id {} repeated", c.item)));
                }
                *slot = Some((cube.class().clone(), bin.id, cube.base().to_vec()));
            }
        }
        let mut items = Vec::with_capacity(n);
        let mut assignment = Vec::with_capacity(n);
        let mut positions = Vec::with_capacity(n);
        for (class, bin, base) in slots.into_iter().flatten() {
            items.push(class);
            assignment.push(bin);
            positions.push(base);
        }
        GameConfig::new(self.d, items, assignment, positions).map_err(invalid)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub k: u32,
    pub count: u64,
}

/// The bounds an instance was generated with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub m: u32,
    #[serde(with = "big")]
    pub n: num_bigint::BigUint,
    #[serde(with = "big")]
    pub c: num_bigint::BigUint,
    #[serde(with = "rat")]
    pub weight: Rat,
    #[serde(with = "big")]
    pub certified_lower_bound: num_bigint::BigUint,
    #[serde(with = "big")]
    pub offline_bins: num_bigint::BigUint,
}

impl PlanRecord {
    pub fn from_plan(plan: &AdversaryPlan) -> Self {
        PlanRecord {
            m: plan.m,
            n: plan.n.clone(),
            c: plan.c.clone(),
            weight: plan.weight.clone(),
            certified_lower_bound: plan.certificate.clone(),
            offline_bins: plan.offline_bins.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub d: usize,
    #[serde(with = "rat")]
    pub epsilon: Rat,
    pub segments: Vec<SegmentRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<PlanRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
}

impl InstanceFile {
    pub fn from_instance(inst: &Instance, plan: Option<&AdversaryPlan>) -> Self {
        InstanceFile {
            d: inst.d,
            epsilon: inst.epsilon.clone(),
            segments: inst
                .segments
                .iter()
                .map(|s| SegmentRecord { k: s.k, count: s.count })
                .collect(),
            plan: plan.map(PlanRecord::from_plan),
            manifest: None,
        }
    }

    pub fn to_instance(&self) -> Result<Instance, FormatError> {
        let segments = self
            .segments
            .iter()
            .map(|s| Segment { k: s.k, count: s.count })
            .collect();
        Instance::new(self.d, self.epsilon.clone(), segments).map_err(invalid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageRecord {
    pub k: u32,
    /// Core coordinates, 0-based.
    #[serde(rename = "F")]
    pub f: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub core_words: Option<Vec<Vec<u32>>>,
    /// Set for good-word cores: the predicate follows from the seeded
    /// coordinate sets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub core_predicate_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyFile {
    pub d: usize,
    pub kind: String,
    pub classes: Vec<u32>,
    pub seed: Option<u64>,
    pub fsets: Option<Vec<Vec<usize>>>,
    #[serde(default, with = "rat::option", skip_serializing_if = "Option::is_none")]
    pub fset_threshold: Option<Rat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fset_attempts: Option<u64>,
    pub languages: Vec<LanguageRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
}

fn kind_from_name(s: &str) -> Result<FamilyKind, FormatError> {
    [
        FamilyKind::Warmup,
        FamilyKind::Consecutive,
        FamilyKind::PowersOfTwo,
        FamilyKind::Explicit,
    ]
    .into_iter()
    .find(|k| k.name() == s)
    .ok_or_else(|| FormatError::Invalid(format!("unknown family kind `{s}`")))
}

impl FamilyFile {
    pub fn from_family(fam: &SeparatedFamily) -> Self {
        let languages = fam
            .languages
            .iter()
            .map(|l| {
                let (core_words, core_predicate_seed) = match l.core() {
                    Core::Words(ws) => (Some(ws.clone()), None),
                    Core::Good { .. } => (None, Some(fam.seed.unwrap_or(0))),
                };
                LanguageRecord {
                    k: l.k(),
                    f: l.core_coords().to_vec(),
                    core_words,
                    core_predicate_seed,
                }
            })
            .collect();
        FamilyFile {
            d: fam.d,
            kind: fam.kind.name().to_string(),
            classes: fam.classes.clone(),
            seed: fam.seed,
            fsets: fam.fsets.as_ref().map(|f| f.sets.clone()),
            fset_threshold: fam.fsets.as_ref().map(|f| f.threshold.clone()),
            fset_attempts: fam.fsets.as_ref().map(|f| f.attempts),
            languages,
            manifest: None,
        }
    }

    pub fn to_family(&self) -> Result<SeparatedFamily, FormatError> {
        let mut languages = Vec::with_capacity(self.languages.len());
        for (idx, rec) in self.languages.iter().enumerate() {
            let lang = match (&rec.core_words, rec.core_predicate_seed) {
                (Some(words), None) => Language::product(rec.k, self.d, rec.f.clone(), words.clone()),
                (None, Some(_)) => {
                    // J(l, k) = F_k \ F_l for every earlier class l
                    let avoid = self.languages[..idx]
                        .iter()
                        .map(|prev| AvoidSet {
                            against: prev.k,
                            positions: rec
                                .f
                                .iter()
                                .enumerate()
                                .filter(|(_, x)| !prev.f.contains(x))
                                .map(|(p, _)| p)
                                .collect(),
                        })
                        .collect();
                    Language::good_words(rec.k, self.d, rec.f.clone(), avoid)
                }
                _ => {
                    return Err(invalid(
                        "a language needs exactly one of core_words and core_predicate_seed",
                    ))
                }
            }
            .map_err(invalid)?;
            languages.push(lang);
        }
        let mut fam = SeparatedFamily::explicit(self.d, languages).map_err(invalid)?;
        if fam.classes != self.classes {
            return Err(invalid("classes disagree with the languages"));
        }
        fam.kind = kind_from_name(&self.kind)?;
        fam.seed = self.seed;
        fam.fsets = match (&self.fsets, &self.fset_threshold, self.fset_attempts) {
            (Some(sets), Some(threshold), Some(attempts)) => Some(FSets {
                d: self.d,
                sets: sets.clone(),
                threshold: threshold.clone(),
                attempts,
            }),
            (None, _, _) => None,
            _ => return Err(invalid("fsets need a threshold and an attempt count")),
        };
        Ok(fam)
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<String, FormatError> {
    let text = to_json(value);
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|source| FormatError::Io {
                path: parent.display().to_string(),
                source,
            })?;
        }
    }
    std::fs::write(path, &text).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use hcpack_core::game::poa_instance;
    use hcpack_core::game::InstanceOptions;
    use hcpack_core::languages::{build_separated_family, warmup_family, BuildMode, FamilyOptions};
    use hcpack_core::packing::{build_u, Selection};

    fn warmup_u() -> TypedPacking {
        build_u(&warmup_family(3).unwrap(), &Rat::new(1, 9), &Selection::All).unwrap()
    }

    #[test]
    fn rationals_are_strings() {
        let file = PackingFile::from_bin(warmup_u().bin());
        let v: serde_json::Value = serde_json::from_str(&to_json(&file)).unwrap();
        assert_eq!(v["cubes"][0]["epsilon"], "1/9");
        assert_eq!(v["cubes"][0]["base"][0], "0/1");
    }

    #[test]
    fn packing_round_trips() {
        let u = warmup_u();
        let text = to_json(&PackingFile::from_bin(u.bin()));
        let back: PackingFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_typed().unwrap(), u);
        assert_eq!(to_json(&back), text);
    }

    #[test]
    fn config_round_trips() {
        let inst = poa_instance(&warmup_u(), &InstanceOptions::default()).unwrap();
        let text = to_json(&ConfigFile::from_config(&inst.p_prime));
        let back: ConfigFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_config().unwrap(), inst.p_prime);
        assert_eq!(to_json(&back), text);
    }

    #[test]
    fn config_rejects_repeated_items() {
        let text = r#"{"d":1,"bins":[{"id":0,"cubes":[
            {"item":0,"k":2,"epsilon":"1/9","base":["0"]},
            {"item":0,"k":2,"epsilon":"1/9","base":["0"]}]}]}"#;
        let file: ConfigFile = serde_json::from_str(text).unwrap();
        assert!(file.to_config().is_err());
    }

    #[test]
    fn overlapping_packing_is_rejected_as_typed() {
        let text = r#"{"d":1,"cubes":[
            {"k":2,"epsilon":"1/9","base":["0/1"]},
            {"k":2,"epsilon":"1/9","base":["1/9"]}]}"#;
        let file: PackingFile = serde_json::from_str(text).unwrap();
        assert!(file.to_bin().is_ok());
        assert!(file.to_typed().is_err());
    }

    #[test]
    fn bad_rational_is_a_parse_error() {
        let text = r#"{"d":1,"cubes":[{"k":2,"epsilon":"1/0","base":["0"]}]}"#;
        assert!(serde_json::from_str::<PackingFile>(text).is_err());
    }

    #[test]
    fn families_round_trip() {
        let warm = warmup_family(4).unwrap();
        let random = build_separated_family(
            8,
            &[2, 3, 4],
            FamilyKind::Consecutive,
            7,
            BuildMode::Auto,
            &FamilyOptions::default(),
        )
        .unwrap();
        for fam in [warm, random] {
            let text = to_json(&FamilyFile::from_family(&fam));
            let back: FamilyFile = serde_json::from_str(&text).unwrap();
            assert_eq!(back.to_family().unwrap(), fam);
            assert_eq!(to_json(&back), text);
        }
    }

    #[test]
    fn instance_round_trips() {
        let text = r#"{"d":3,"epsilon":"1/9","segments":[{"k":2,"count":16},{"k":3,"count":64}]}"#;
        let file: InstanceFile = serde_json::from_str(text).unwrap();
        let inst = file.to_instance().unwrap();
        assert_eq!(inst.len(), 80);
        assert_eq!(InstanceFile::from_instance(&inst, None), file);
    }
}
