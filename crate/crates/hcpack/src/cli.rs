//! Command line. Every command prints a JSON report on stdout.
//!
//! Exit codes: 0 when the command ran and everything it checked held, 1 when
//! a verification failed, 2 on bad input.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hcpack_core::game::{
    best_response_dynamics, is_nash, is_strong_nash, poa_instance, spoa_instance, FeasibilityMode,
    InstanceOptions, Policy, StrongOptions, DEFAULT_NODE_BUDGET,
};
use hcpack_core::geometry::verify_bin;
use hcpack_core::languages::warmup_family;
use hcpack_core::online::{
    adversarial_plan, run_bounded_space, ClassHarmonic, RunOptions, Scale, SegmentOrder,
};
use hcpack_core::packing::{
    build_u, lemma_a_driver, lemma_b_driver, DriverOptions, Selection, MATERIALIZE_CAP,
};
use hcpack_core::params::LogBase;
use hcpack_core::Rat;
use num_bigint::BigUint;
use serde_json::{json, Value};

use crate::format::{read_json, write_json, ConfigFile, FamilyFile, InstanceFile, PackingFile};
use crate::manifest::{normalize_command, RunManifest};
use crate::report;
use crate::reproduce::{prop1_sweep, reproduce, ReproduceOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_BAD_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "hcpack", version, about = "Hypercube packing lower bounds, adversaries and equilibria")]
pub struct Cli {
    /// Seed every random stage derives its stream from.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Base of the unsubscripted log in the class-count formulas.
    #[arg(long, global = true, default_value = "natural", value_parser = parse_log_base)]
    pub log_base: LogBase,
    /// Directory relative output paths are resolved against.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Record the wall-clock time in manifests.
    #[arg(long, global = true)]
    pub timestamp: bool,
    #[command(subcommand)]
    pub command: Command,
}

fn parse_log_base(s: &str) -> Result<LogBase, String> {
    s.parse().map_err(|e: &str| e.to_string())
}

fn parse_rat(s: &str) -> Result<Rat, String> {
    s.parse().map_err(|_| format!("`{s}` is not a rational p/q"))
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build and check single-bin packings.
    #[command(subcommand)]
    Pack(PackCommand),
    /// Adversarial instances for bounded-space algorithms.
    #[command(subcommand)]
    Online(OnlineCommand),
    /// Equilibria of the selfish packing game.
    #[command(subcommand)]
    Game(GameCommand),
    /// Run every stage for a list of dimensions and write a report bundle.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PackMode {
    Warmup,
    #[value(name = "lemmaA")]
    LemmaA,
    #[value(name = "lemmaB")]
    LemmaB,
}

#[derive(Debug, Subcommand)]
pub enum PackCommand {
    /// Build a packing from a language family.
    Build {
        #[arg(long)]
        d: usize,
        #[arg(long, value_enum)]
        mode: PackMode,
        #[arg(long, default_value = "packing.json")]
        out: PathBuf,
        /// Also write the language family.
        #[arg(long)]
        family_out: Option<PathBuf>,
        /// Defaults to the largest value the classes allow.
        #[arg(long, value_parser = parse_rat)]
        epsilon: Option<Rat>,
        /// Cubes materialized per class.
        #[arg(long, default_value_t = 64)]
        budget: usize,
    },
    /// Check containment and disjointness of a packing.
    Verify {
        packing: PathBuf,
    },
    /// Class counts and weight of a packing.
    Weight {
        packing: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScaleArg {
    /// `C = 2MN`.
    Full,
    Minimal,
    Custom(BigUint),
}

fn parse_scale(s: &str) -> Result<ScaleArg, String> {
    match s {
        "full" => Ok(ScaleArg::Full),
        "minimal" => Ok(ScaleArg::Minimal),
        _ => s
            .parse()
            .map(ScaleArg::Custom)
            .map_err(|_| format!("scale must be `full`, `minimal` or a positive integer, got `{s}`")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrderArg {
    Asc,
    Desc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgArg {
    ClassHarmonic,
}

#[derive(Debug, Subcommand)]
pub enum OnlineCommand {
    /// Build the adversarial item sequence for a packing.
    Adversary {
        #[arg(long)]
        packing: PathBuf,
        #[arg(long = "M", alias = "m")]
        m: u32,
        #[arg(long, default_value = "full", value_parser = parse_scale)]
        scale: ScaleArg,
        #[arg(long, value_enum, default_value = "asc")]
        order: OrderArg,
        #[arg(long, default_value = "instance.json")]
        out: PathBuf,
    },
    /// Run an online algorithm on an instance.
    Run {
        #[arg(long, value_enum, default_value = "class-harmonic")]
        alg: AlgArg,
        #[arg(long)]
        instance: PathBuf,
        #[arg(long = "M", alias = "m")]
        m: u32,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Insertion,
    Repack,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct ModeArgs {
    /// How a bin may take in a newcomer.
    #[arg(long, value_enum, default_value = "insertion")]
    pub mode: ModeArg,
    /// Most cubes a repacked bin may hold.
    #[arg(long, default_value_t = 12)]
    pub repack_cap: usize,
}

impl ModeArgs {
    fn mode(&self) -> FeasibilityMode {
        match self.mode {
            ModeArg::Insertion => FeasibilityMode::Insertion,
            ModeArg::Repack => FeasibilityMode::Repack {
                cap: self.repack_cap,
                node_budget: DEFAULT_NODE_BUDGET,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    First,
    Best,
    Random,
}

#[derive(Debug, Subcommand)]
pub enum GameCommand {
    /// Check whether a configuration is a Nash equilibrium.
    NashCheck {
        config: PathBuf,
        #[command(flatten)]
        mode: ModeArgs,
    },
    /// Run improvement dynamics from a configuration.
    Dynamics {
        config: PathBuf,
        #[arg(long, value_enum, default_value = "best")]
        policy: PolicyArg,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
        #[command(flatten)]
        mode: ModeArgs,
        #[arg(long, default_value = "dynamics.json")]
        out: PathBuf,
    },
    /// Build the anarchy instance of a packing.
    Poa {
        #[arg(long)]
        packing: PathBuf,
        #[arg(long, default_value_t = MATERIALIZE_CAP)]
        item_cap: u64,
    },
    /// Build the strong anarchy instance of a packing.
    Spoa {
        #[arg(long)]
        packing: PathBuf,
        #[arg(long, default_value_t = 3)]
        coalition_cap: usize,
        #[arg(long, default_value_t = MATERIALIZE_CAP)]
        item_cap: u64,
    },
    /// Check the class gap inequality over a grid of (k, l, d).
    Prop1 {
        #[arg(long, default_value_t = 100)]
        kmax: u64,
        #[arg(long, default_value_t = 20)]
        dmax: u32,
    },
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Dimensions to run, comma separated.
    #[arg(long = "d", value_delimiter = ',', default_values_t = [2usize, 3, 4])]
    pub d_list: Vec<usize>,
    #[arg(long = "M", alias = "m", default_value_t = 1)]
    pub m: u32,
    #[arg(long, default_value_t = 3)]
    pub coalition_cap: usize,
}

/// Shared state for one invocation.
struct Ctx {
    out_dir: PathBuf,
    manifest: RunManifest,
}

impl Ctx {
    fn path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.out_dir.join(p)
        }
    }

    fn manifest_with_inputs(&self, inputs: &[&Path]) -> Result<RunManifest> {
        let mut m = self.manifest.clone();
        for p in inputs {
            m.add_input(p).with_context(|| format!("reading {}", p.display()))?;
        }
        Ok(m)
    }
}

/// Failures the caller should see as exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct BadInput(pub String);

fn bad(e: impl std::fmt::Display) -> anyhow::Error {
    BadInput(e.to_string()).into()
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_BAD_INPUT } else { EXIT_OK };
        }
    };
    let command = normalize_command(args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()));
    let ctx = Ctx {
        out_dir: cli.out_dir.clone().unwrap_or_else(|| PathBuf::from(".")),
        manifest: RunManifest::new(command, cli.seed, cli.log_base, cli.timestamp),
    };
    match dispatch(&cli, &ctx) {
        Ok((value, ok)) => {
            // a closed pipe on stdout is not a failure of the command
            let mut out = std::io::stdout().lock();
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&value).expect("report"));
            if ok {
                EXIT_OK
            } else {
                EXIT_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_BAD_INPUT
        }
    }
}

fn dispatch(cli: &Cli, ctx: &Ctx) -> Result<(Value, bool)> {
    match &cli.command {
        Command::Pack(c) => pack(cli, ctx, c),
        Command::Online(c) => online(ctx, c),
        Command::Game(c) => game(cli, ctx, c),
        Command::Reproduce(a) => {
            let opts = ReproduceOptions {
                d_list: a.d_list.clone(),
                seed: cli.seed,
                log_base: cli.log_base,
                m: a.m,
                coalition_cap: a.coalition_cap,
                ..ReproduceOptions::default()
            };
            if opts.m == 0 || opts.coalition_cap == 0 {
                bail!(BadInput("M and the coalition cap must be positive".into()));
            }
            let bundle = reproduce(&opts, &ctx.manifest);
            bundle
                .write(&ctx.out_dir)
                .with_context(|| format!("writing bundle to {}", ctx.out_dir.display()))?;
            let value = json!({
                "out_dir": ctx.out_dir.display().to_string(),
                "digest": bundle.digest(),
                "verified": bundle.verified(),
                "rows": bundle.rows,
            });
            Ok((value, bundle.verified()))
        }
    }
}

fn read_packing(path: &Path) -> Result<PackingFile> {
    read_json(path).map_err(bad)
}

fn pack(cli: &Cli, ctx: &Ctx, cmd: &PackCommand) -> Result<(Value, bool)> {
    match cmd {
        PackCommand::Build {
            d,
            mode,
            out,
            family_out,
            epsilon,
            budget,
        } => {
            let (family, packing, mut body) = match mode {
                PackMode::Warmup => {
                    let fam = warmup_family(*d).map_err(bad)?;
                    let k = fam.max_class().unwrap_or(2) as i64;
                    let eps = epsilon.clone().unwrap_or_else(|| Rat::new(1, k * k));
                    let u = build_u(&fam, &eps, &Selection::PerClassBudget(*budget)).map_err(bad)?;
                    let body = json!({
                        "mode": "warmup",
                        "full_weight": fam.weight().to_string(),
                        "packing": report::packing(&u),
                    });
                    (fam, u, body)
                }
                PackMode::LemmaA | PackMode::LemmaB => {
                    let base = if *mode == PackMode::LemmaA {
                        DriverOptions::lemma_a()
                    } else {
                        DriverOptions::lemma_b()
                    };
                    let opts = DriverOptions {
                        seed: cli.seed,
                        log_base: cli.log_base,
                        epsilon_override: epsilon.clone(),
                        budget_per_class: *budget,
                        ..base
                    };
                    let rep = if *mode == PackMode::LemmaA {
                        lemma_a_driver(*d, &opts)
                    } else {
                        lemma_b_driver(*d, &opts)
                    }
                    .map_err(bad)?;
                    let mut body = report::lemma(&rep);
                    body["mode"] = json!(if *mode == PackMode::LemmaA { "lemmaA" } else { "lemmaB" });
                    (rep.family, rep.packing, body)
                }
            };
            let verified = verify_bin(packing.bin()).is_ok();
            let mut file = PackingFile::from_bin(packing.bin());
            file.manifest = Some(ctx.manifest.clone());
            let path = ctx.path(out);
            write_json(&path, &file)?;
            body["out"] = json!(path.display().to_string());
            if let Some(f) = family_out {
                let mut ff = FamilyFile::from_family(&family);
                ff.manifest = Some(ctx.manifest.clone());
                let fpath = ctx.path(f);
                write_json(&fpath, &ff)?;
                body["family_out"] = json!(fpath.display().to_string());
            }
            body["verified"] = json!(verified);
            let passed = body.get("passed").and_then(Value::as_bool).unwrap_or(true);
            Ok((body, verified && passed))
        }
        PackCommand::Verify { packing } => {
            let bin = read_packing(packing)?.to_bin().map_err(bad)?;
            let rep = verify_bin(&bin);
            Ok((
                json!({ "file": packing.display().to_string(), "cubes": bin.len(), "report": report::bin_report(&rep) }),
                rep.is_ok(),
            ))
        }
        PackCommand::Weight { packing } => {
            let bin = read_packing(packing)?.to_bin().map_err(bad)?;
            let rep = verify_bin(&bin);
            if !rep.is_ok() {
                return Ok((json!({ "report": report::bin_report(&rep) }), false));
            }
            let u = hcpack_core::packing::TypedPacking::from_bin(bin).map_err(bad)?;
            Ok((report::packing(&u), true))
        }
    }
}

fn online(ctx: &Ctx, cmd: &OnlineCommand) -> Result<(Value, bool)> {
    match cmd {
        OnlineCommand::Adversary {
            packing,
            m,
            scale,
            order,
            out,
        } => {
            let u = read_packing(packing)?.to_typed().map_err(bad)?;
            let scale = match scale {
                ScaleArg::Full => Scale::Full,
                ScaleArg::Minimal => Scale::Minimal,
                ScaleArg::Custom(c) => Scale::Custom(c.clone()),
            };
            let order = match order {
                OrderArg::Asc => SegmentOrder::Ascending,
                OrderArg::Desc => SegmentOrder::Descending,
            };
            let plan = adversarial_plan(&u, *m, &scale, &order).map_err(bad)?;
            let inst = plan.instance().map_err(bad)?;
            let mut file = InstanceFile::from_instance(&inst, Some(&plan));
            file.manifest = Some(ctx.manifest_with_inputs(&[packing])?);
            let path = ctx.path(out);
            write_json(&path, &file)?;
            let mut body = report::plan(&plan);
            body["out"] = json!(path.display().to_string());
            Ok((body, true))
        }
        OnlineCommand::Run {
            alg: AlgArg::ClassHarmonic,
            instance,
            m,
            report: report_path,
        } => {
            let file: InstanceFile = read_json(instance).map_err(bad)?;
            let inst = file.to_instance().map_err(bad)?;
            let (mut body, ok) = match run_bounded_space(&mut ClassHarmonic::new(*m), &inst, *m, RunOptions::default()) {
                Ok(run) => {
                    let mut rep = run.report;
                    if let Some(plan) = &file.plan {
                        if plan.m == *m {
                            rep.opt_upper_bound = Some(plan.offline_bins.clone());
                            rep.certified_lower_bound = Some(plan.certified_lower_bound.clone());
                            rep.ratio = Some(Rat::from(rep.bins_used) / Rat::from(plan.offline_bins.clone()));
                        }
                    }
                    let ok = rep.bound_holds() != Some(false);
                    let mut body = report::ratio(&rep);
                    body["max_open"] = json!(run.max_open);
                    (body, ok)
                }
                Err(hcpack_core::online::OnlineError::ZeroM) => return Err(bad("M must be positive")),
                Err(e) => (json!({ "error": e.to_string() }), false),
            };
            body["manifest"] = serde_json::to_value(ctx.manifest_with_inputs(&[instance])?)?;
            if let Some(p) = report_path {
                let path = ctx.path(p);
                write_json(&path, &body)?;
            }
            Ok((body, ok))
        }
    }
}

fn game(cli: &Cli, ctx: &Ctx, cmd: &GameCommand) -> Result<(Value, bool)> {
    match cmd {
        GameCommand::NashCheck { config, mode } => {
            let file: ConfigFile = read_json(config).map_err(bad)?;
            let cfg = file.to_config().map_err(bad)?;
            let cert = is_nash(&cfg, mode.mode()).map_err(bad)?;
            Ok((report::nash(&cert), cert.is_nash))
        }
        GameCommand::Dynamics {
            config,
            policy,
            max_steps,
            mode,
            out,
        } => {
            let file: ConfigFile = read_json(config).map_err(bad)?;
            let cfg = file.to_config().map_err(bad)?;
            let policy = match policy {
                PolicyArg::First => Policy::First,
                PolicyArg::Best => Policy::Best,
                PolicyArg::Random => Policy::Random(cli.seed),
            };
            let res = best_response_dynamics(&cfg, mode.mode(), policy, *max_steps).map_err(bad)?;
            let mut end = ConfigFile::from_config(&res.config);
            end.manifest = Some(ctx.manifest_with_inputs(&[config])?);
            let path = ctx.path(out);
            write_json(&path, &end)?;
            let body = json!({
                "steps": res.steps.iter().map(report::move_proposal).collect::<Vec<_>>(),
                "converged": res.converged,
                "potential_ok": res.potential_ok,
                "bins_before": hcpack_core::game::social_cost(&cfg),
                "bins_after": hcpack_core::game::social_cost(&res.config),
                "out": path.display().to_string(),
            });
            Ok((body, res.potential_ok))
        }
        GameCommand::Poa { packing, item_cap } => {
            let u = read_packing(packing)?.to_typed().map_err(bad)?;
            let inst = poa_instance(&u, &InstanceOptions { item_cap: *item_cap }).map_err(bad)?;
            let cert = is_nash(&inst.p_prime, FeasibilityMode::Insertion).map_err(bad)?;
            let written = write_pair(ctx, packing, &inst.p, &inst.p_prime, "poa")?;
            let ok = cert.is_nash && inst.ratio == inst.weight;
            let body = json!({
                "instance": report::anarchy(&inst),
                "p_prime_nash": report::nash(&cert),
                "written": written,
            });
            Ok((body, ok))
        }
        GameCommand::Spoa {
            packing,
            coalition_cap,
            item_cap,
        } => {
            if *coalition_cap == 0 {
                return Err(bad("coalition cap must be positive"));
            }
            let u = read_packing(packing)?.to_typed().map_err(bad)?;
            let inst = spoa_instance(&u, &InstanceOptions { item_cap: *item_cap }).map_err(bad)?;
            let cert = is_strong_nash(&inst.p_prime, StrongOptions::new(*coalition_cap, FeasibilityMode::Insertion))
                .map_err(bad)?;
            let written = write_pair(ctx, packing, &inst.p, &inst.p_prime, "spoa")?;
            let ok = cert.strong && inst.ratio == inst.weight;
            let body = json!({
                "instance": report::anarchy(&inst),
                "p_prime_strong": report::strong(&cert),
                "written": written,
            });
            Ok((body, ok))
        }
        GameCommand::Prop1 { kmax, dmax } => {
            if *kmax < 3 || *dmax < 2 {
                return Err(bad("need kmax >= 3 and dmax >= 2"));
            }
            let s = prop1_sweep(*kmax, *dmax);
            let ok = s.failures.is_empty();
            Ok((
                json!({ "kmax": kmax, "dmax": dmax, "checked": s.checked, "failures": s.failures, "holds": ok }),
                ok,
            ))
        }
    }
}

fn write_pair(
    ctx: &Ctx,
    input: &Path,
    p: &hcpack_core::game::GameConfig,
    p_prime: &hcpack_core::game::GameConfig,
    prefix: &str,
) -> Result<Vec<String>> {
    let manifest = ctx.manifest_with_inputs(&[input])?;
    let mut written = Vec::new();
    for (name, cfg) in [("p", p), ("p_prime", p_prime)] {
        let mut file = ConfigFile::from_config(cfg);
        file.manifest = Some(manifest.clone());
        let path = ctx.path(Path::new(&format!("{prefix}_{name}.json")));
        write_json(&path, &file)?;
        written.push(path.display().to_string());
    }
    Ok(written)
}
