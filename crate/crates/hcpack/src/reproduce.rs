//! The end-to-end pipeline: for each dimension build the packings, run the
//! adversary against the class-harmonic baseline, and build the anarchy
//! instances. Everything is computed in memory first, so a bundle can be
//! compared before it touches the disk.

use std::collections::BTreeMap;
use std::path::Path;

use hcpack_core::game::{
    is_nash, is_strong_nash, poa_instance, prop1_check, spoa_instance, FeasibilityMode, InstanceOptions,
    StrongOptions,
};
use hcpack_core::online::{
    adversarial_plan, offline_certificate, run_bounded_space, ClassHarmonic, RunOptions, Scale,
    SegmentOrder,
};
use hcpack_core::packing::{lemma_a_driver, lemma_b_driver, DriverOptions, LemmaReport, TypedPacking};
use hcpack_core::params::LogBase;
use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::format::{to_json, ConfigFile, FamilyFile, InstanceFile, PackingFile};
use crate::manifest::RunManifest;
use crate::report;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReproduceOptions {
    pub d_list: Vec<usize>,
    pub seed: u64,
    pub log_base: LogBase,
    pub m: u32,
    pub coalition_cap: usize,
    /// Cubes materialized per class of each packing.
    pub budget_per_class: usize,
    /// Above this many items the adversary switches to the minimal scale.
    pub full_scale_items: u64,
    /// Item cap for the anarchy instances; above it the smallest exact `N` is used.
    pub instance_items: u64,
    /// Strong-equilibrium checks are skipped above this many items.
    pub strong_items: usize,
    /// Configurations are written out up to this many items.
    pub config_items: usize,
    pub prop1_kmax: u64,
    pub prop1_dmax: u32,
}

impl Default for ReproduceOptions {
    fn default() -> Self {
        ReproduceOptions {
            d_list: vec![2, 3, 4],
            seed: 0,
            log_base: LogBase::Natural,
            m: 1,
            coalition_cap: 3,
            budget_per_class: 4096,
            full_scale_items: 20_000,
            instance_items: 4096,
            strong_items: 48,
            config_items: 2000,
            prop1_kmax: 30,
            prop1_dmax: 10,
        }
    }
}

/// One row of the summary table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub d: usize,
    #[serde(rename = "S")]
    pub s: Option<i64>,
    pub construction: Option<String>,
    pub epsilon: Option<String>,
    /// `|L_k|` per class, as decimal strings.
    pub language_sizes: BTreeMap<u32, String>,
    pub weight: Option<String>,
    pub packing_weight: Option<String>,
    pub m: u32,
    pub scale: Option<String>,
    pub certified_lower_bound: Option<String>,
    pub measured_bins: Option<u64>,
    pub offline_bins: Option<String>,
    pub ratio_vs_offline: Option<String>,
    pub poa_ratio: Option<String>,
    pub poa_nash: Option<bool>,
    pub spoa_ratio: Option<String>,
    pub spoa_strong: Option<bool>,
    /// Assertions of the asymptotic targets were in force at this `d`.
    pub asymptotic_asserted: bool,
    pub errors: Vec<String>,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prop1Sweep {
    pub checked: u64,
    pub failures: Vec<(u64, u64, u32)>,
}

/// `prop1_check` for every `2 <= k < l <= kmax`, `2 <= d <= dmax`.
pub fn prop1_sweep(kmax: u64, dmax: u32) -> Prop1Sweep {
    let mut checked = 0;
    let mut failures = Vec::new();
    for d in 2..=dmax {
        for k in 2..kmax {
            for ell in k + 1..=kmax {
                checked += 1;
                if !prop1_check(k, ell, d).unwrap_or(false) {
                    failures.push((k, ell, d));
                }
            }
        }
    }
    Prop1Sweep { checked, failures }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bundle {
    /// Relative path to file contents.
    pub files: BTreeMap<String, String>,
    pub rows: Vec<SummaryRow>,
    pub manifest: RunManifest,
}

impl Bundle {
    /// No stage reported a failed verification.
    pub fn verified(&self) -> bool {
        self.rows.iter().all(|r| r.failures.is_empty())
    }

    /// Hash of the manifest, which lists the hash of every other file.
    pub fn digest(&self) -> String {
        crate::manifest::sha256_hex(self.files["manifest.json"].as_bytes())
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        for (name, text) in &self.files {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(path, text)?;
        }
        Ok(())
    }
}

struct Stage<'a> {
    opts: &'a ReproduceOptions,
    base: &'a RunManifest,
    files: BTreeMap<String, String>,
}

impl Stage<'_> {
    fn put_json(&mut self, name: String, mut body: Value) {
        if let Value::Object(map) = &mut body {
            map.insert("manifest".into(), serde_json::to_value(self.base).expect("manifest"));
        }
        self.files.insert(name, to_json(&body));
    }

    fn put<T: Serialize>(&mut self, name: String, value: &T) {
        self.files.insert(name, to_json(value));
    }
}

pub fn reproduce(opts: &ReproduceOptions, base: &RunManifest) -> Bundle {
    let mut stage = Stage {
        opts,
        base,
        files: BTreeMap::new(),
    };
    let rows: Vec<SummaryRow> = opts.d_list.iter().map(|&d| dimension(&mut stage, d)).collect();

    let sweep = prop1_sweep(opts.prop1_kmax, opts.prop1_dmax);
    stage.put_json(
        "prop1.json".into(),
        json!({
            "kmax": opts.prop1_kmax,
            "dmax": opts.prop1_dmax,
            "checked": sweep.checked,
            "failures": sweep.failures,
            "holds": sweep.failures.is_empty(),
        }),
    );
    stage.put_json("summary.json".into(), json!({ "rows": rows }));
    stage.files.insert("summary.csv".into(), summary_csv(&rows));

    let mut manifest = base.clone();
    for (name, text) in &stage.files {
        manifest.add_output(name, text);
    }
    stage.files.insert("manifest.json".into(), to_json(&manifest));
    Bundle {
        files: stage.files,
        rows,
        manifest,
    }
}

fn dimension(stage: &mut Stage<'_>, d: usize) -> SummaryRow {
    let opts = stage.opts;
    let mut row = SummaryRow {
        d,
        s: None,
        construction: None,
        epsilon: None,
        language_sizes: BTreeMap::new(),
        weight: None,
        packing_weight: None,
        m: opts.m,
        scale: None,
        certified_lower_bound: None,
        measured_bins: None,
        offline_bins: None,
        ratio_vs_offline: None,
        poa_ratio: None,
        poa_nash: None,
        spoa_ratio: None,
        spoa_strong: None,
        asymptotic_asserted: false,
        errors: Vec::new(),
        failures: Vec::new(),
    };
    let dir = format!("d{d}");
    let driver = DriverOptions {
        seed: opts.seed,
        log_base: opts.log_base,
        budget_per_class: opts.budget_per_class,
        ..DriverOptions::lemma_a()
    };

    match lemma_a_driver(d, &driver) {
        Ok(rep) => {
            fill_from_lemma(&mut row, &rep);
            stage.put_json(format!("{dir}/lemma_a.json"), report::lemma(&rep));
            stage.put(format!("{dir}/family.json"), &FamilyFile::from_family(&rep.family));
            stage.put(format!("{dir}/packing.json"), &PackingFile::from_bin(rep.packing.bin()));
            adversary(stage, &mut row, &rep.packing, &dir);
            poa(stage, &mut row, &rep.packing, &dir);
        }
        Err(e) => row.errors.push(format!("lemma A driver: {e}")),
    }

    let driver_b = DriverOptions {
        seed: opts.seed,
        log_base: opts.log_base,
        budget_per_class: opts.budget_per_class,
        ..DriverOptions::lemma_b()
    };
    match lemma_b_driver(d, &driver_b) {
        Ok(rep) => {
            if rep.asserted() && !rep.passed() {
                row.failures.push("power-of-two driver missed an asserted target".into());
            }
            stage.put_json(format!("{dir}/lemma_b.json"), report::lemma(&rep));
            spoa(stage, &mut row, &rep.packing, &dir);
        }
        Err(e) => row.errors.push(format!("lemma B driver: {e}")),
    }
    row
}

fn fill_from_lemma(row: &mut SummaryRow, rep: &LemmaReport) {
    row.s = Some(rep.s);
    row.construction = Some(match &rep.construction {
        hcpack_core::packing::Construction::Randomized => rep.kind.name().to_string(),
        hcpack_core::packing::Construction::WarmupFallback { .. } => "warmup-fallback".to_string(),
    });
    row.epsilon = Some(rep.epsilon.to_string());
    row.language_sizes = rep
        .family
        .languages
        .iter()
        .map(|l| (l.k(), l.len().to_string()))
        .collect();
    row.weight = rep.full_weight.as_ref().map(|w| w.to_string());
    row.packing_weight = Some(rep.packing.weight().to_string());
    row.asymptotic_asserted = rep.asserted();
    if !rep.passed() {
        row.failures.push("consecutive-class driver failed its checks".into());
    }
}

fn adversary(stage: &mut Stage<'_>, row: &mut SummaryRow, u: &TypedPacking, dir: &str) {
    let opts = stage.opts;
    let full = match adversarial_plan(u, opts.m, &Scale::Full, &SegmentOrder::Ascending) {
        Ok(p) => p,
        Err(e) => {
            row.errors.push(format!("adversary: {e}"));
            return;
        }
    };
    let (plan, scale) = if full.total_items() <= BigUint::from(opts.full_scale_items) {
        (full, "full")
    } else {
        match adversarial_plan(u, opts.m, &Scale::Minimal, &SegmentOrder::Ascending) {
            Ok(p) => (p, "minimal"),
            Err(e) => {
                row.errors.push(format!("adversary: {e}"));
                return;
            }
        }
    };
    row.scale = Some(scale.into());
    row.certified_lower_bound = Some(plan.certificate.to_string());
    row.offline_bins = Some(plan.offline_bins.to_string());
    let inst = match plan.instance() {
        Ok(i) => i,
        Err(e) => {
            row.errors.push(format!("adversary: {e}"));
            return;
        }
    };
    stage.put(format!("{dir}/instance.json"), &InstanceFile::from_instance(&inst, Some(&plan)));

    let offline_ok = offline_certificate(u, &plan).map(|c| c.check(&inst));
    let run = run_bounded_space(&mut ClassHarmonic::new(opts.m), &inst, opts.m, RunOptions::default());
    let mut body = json!({ "scale": scale, "plan": report::plan(&plan) });
    match &offline_ok {
        Ok(ok) => {
            body["offline_certificate_ok"] = json!(ok);
            if !ok {
                row.failures.push("offline certificate did not verify".into());
            }
        }
        Err(e) => row.errors.push(format!("offline certificate: {e}")),
    }
    match run {
        Ok(mut run) => {
            run.report.attach(&plan);
            row.measured_bins = Some(run.report.bins_used);
            row.ratio_vs_offline = run.report.ratio.as_ref().map(|r| r.to_string());
            if run.report.bound_holds() == Some(false) {
                row.failures.push("baseline beat the certified lower bound".into());
            }
            body["run"] = report::ratio(&run.report);
            body["max_open"] = json!(run.max_open);
        }
        Err(e) => {
            row.failures.push(format!("baseline run: {e}"));
        }
    }
    stage.put_json(format!("{dir}/adversary.json"), body);
}

fn poa(stage: &mut Stage<'_>, row: &mut SummaryRow, u: &TypedPacking, dir: &str) {
    let opts = stage.opts;
    let inst = match poa_instance(u, &InstanceOptions { item_cap: opts.instance_items }) {
        Ok(i) => i,
        Err(e) => {
            row.errors.push(format!("PoA instance: {e}"));
            return;
        }
    };
    row.poa_ratio = Some(inst.ratio.to_string());
    if inst.ratio != inst.weight {
        row.failures.push("PoA ratio differs from the weight".into());
    }
    let mut body = json!({ "instance": report::anarchy(&inst) });
    match is_nash(&inst.p_prime, FeasibilityMode::Insertion) {
        Ok(cert) => {
            row.poa_nash = Some(cert.is_nash);
            if !cert.is_nash {
                row.failures.push("P' is not Nash".into());
            }
            body["p_prime_nash"] = report::nash(&cert);
        }
        Err(e) => row.errors.push(format!("PoA Nash check: {e}")),
    }
    if inst.p.len() <= opts.config_items {
        stage.put(format!("{dir}/poa_p.json"), &ConfigFile::from_config(&inst.p));
        stage.put(format!("{dir}/poa_p_prime.json"), &ConfigFile::from_config(&inst.p_prime));
    }
    stage.put_json(format!("{dir}/poa.json"), body);
}

fn spoa(stage: &mut Stage<'_>, row: &mut SummaryRow, u: &TypedPacking, dir: &str) {
    let opts = stage.opts;
    let inst = match spoa_instance(u, &InstanceOptions { item_cap: opts.instance_items }) {
        Ok(i) => i,
        Err(e) => {
            row.errors.push(format!("SPoA instance: {e}"));
            return;
        }
    };
    row.spoa_ratio = Some(inst.ratio.to_string());
    if inst.ratio != inst.weight {
        row.failures.push("SPoA ratio differs from the weight".into());
    }
    let mut body = json!({ "instance": report::anarchy(&inst) });
    if inst.p_prime.len() <= opts.strong_items {
        let strong_opts = StrongOptions::new(opts.coalition_cap, FeasibilityMode::Insertion);
        match is_strong_nash(&inst.p_prime, strong_opts) {
            Ok(cert) => {
                row.spoa_strong = Some(cert.strong);
                if !cert.strong {
                    row.failures.push("SPoA P' is not strong".into());
                }
                body["p_prime_strong"] = report::strong(&cert);
            }
            Err(e) => row.errors.push(format!("strong check: {e}")),
        }
    } else {
        body["p_prime_strong"] = json!({ "skipped": format!("more than {} items", opts.strong_items) });
    }
    stage.put_json(format!("{dir}/spoa.json"), body);
}

/// The human view of the summary.
pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(
        "d,S,epsilon,language_sizes,weight,certified_lower_bound,measured_bins,poa_ratio\n",
    );
    let o = |x: &Option<String>| x.clone().unwrap_or_default();
    for r in rows {
        let sizes: Vec<String> = r.language_sizes.iter().map(|(k, n)| format!("{k}:{n}")).collect();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.d,
            r.s.map(|s| s.to_string()).unwrap_or_default(),
            o(&r.epsilon),
            sizes.join(";"),
            o(&r.weight),
            o(&r.certified_lower_bound),
            r.measured_bins.map(|b| b.to_string()).unwrap_or_default(),
            o(&r.poa_ratio),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_dimensional_row() {
        let opts = ReproduceOptions {
            d_list: vec![3],
            ..ReproduceOptions::default()
        };
        let base = RunManifest::new(vec!["reproduce".into()], 0, LogBase::Natural, false);
        let bundle = reproduce(&opts, &base);
        let row = &bundle.rows[0];
        assert_eq!(row.weight.as_deref(), Some("3/2"));
        assert_eq!(row.poa_ratio.as_deref(), Some("3/2"));
        assert_eq!(row.certified_lower_bound.as_deref(), Some("12"));
        assert_eq!(row.language_sizes[&3], "4");
        assert!(bundle.verified(), "{row:?}");
        assert!(bundle.files.contains_key("d3/packing.json"));
    }

    #[test]
    fn small_prop1_sweep() {
        let s = prop1_sweep(6, 3);
        assert_eq!(s.checked, 2 * 10);
        assert!(s.failures.is_empty());
    }
}
