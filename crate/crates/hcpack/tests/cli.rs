use std::path::Path;
use std::process::{Command, Output};

fn hcpack(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hcpack"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .output()
        .unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn pack_adversary_and_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = hcpack(d, &["pack", "build", "--d", "3", "--mode", "warmup", "--out", "packing.json"]);
    assert_eq!(out.status.code(), Some(0));
    let packing = d.join("packing.json");
    let p = packing.to_str().unwrap();

    let w = hcpack(d, &["pack", "weight", p]);
    assert_eq!(json(&w)["weight"], "3/2");

    let adv = hcpack(d, &["online", "adversary", "--packing", p, "--M", "1", "--scale", "full", "--out", "instance.json"]);
    assert_eq!(adv.status.code(), Some(0));
    assert_eq!(json(&adv)["certified_lower_bound"], "12");

    let inst = d.join("instance.json");
    let run = hcpack(d, &["online", "run", "--alg", "class-harmonic", "--instance", inst.to_str().unwrap(), "--M", "1", "--report", "report.json"]);
    assert_eq!(run.status.code(), Some(0));
    assert_eq!(json(&run)["bound_holds"], true);
    assert!(d.join("report.json").exists());
}

#[test]
fn game_commands() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    hcpack(d, &["pack", "build", "--d", "3", "--mode", "warmup"]);
    let p = d.join("packing.json");
    let poa = hcpack(d, &["game", "poa", "--packing", p.to_str().unwrap()]);
    assert_eq!(poa.status.code(), Some(0));
    assert_eq!(json(&poa)["instance"]["ratio"], "3/2");

    // the optimal side of the pair is not an equilibrium
    let not_nash = hcpack(d, &["game", "nash-check", d.join("poa_p.json").to_str().unwrap()]);
    assert_eq!(not_nash.status.code(), Some(1));
    let nash = hcpack(d, &["game", "nash-check", d.join("poa_p_prime.json").to_str().unwrap()]);
    assert_eq!(nash.status.code(), Some(0));

    let dynamics = hcpack(d, &["game", "dynamics", "--policy", "best", "--seed", "4", d.join("poa_p.json").to_str().unwrap()]);
    assert_eq!(dynamics.status.code(), Some(0));
    assert_eq!(json(&dynamics)["converged"], true);
    let end = d.join("dynamics.json");
    assert_eq!(hcpack(d, &["game", "nash-check", end.to_str().unwrap()]).status.code(), Some(0));

    let prop1 = hcpack(d, &["game", "prop1", "--kmax", "20", "--dmax", "6"]);
    assert_eq!(json(&prop1)["holds"], true);
}

#[test]
fn spoa_on_power_of_two_packing() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = hcpack(d, &["pack", "build", "--d", "2", "--mode", "lemmaB", "--out", "p2.json", "--family-out", "f2.json"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(d.join("f2.json").exists());
    let s = hcpack(d, &["game", "spoa", "--packing", d.join("p2.json").to_str().unwrap(), "--coalition-cap", "3"]);
    assert_eq!(s.status.code(), Some(0));
    assert_eq!(json(&s)["p_prime_strong"]["strong"], true);
}

#[test]
fn overlapping_packing_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let bad = d.join("bad.json");
    std::fs::write(
        &bad,
        r#"{"d":2,"cubes":[{"k":2,"epsilon":"1/4","base":["0/1","0/1"]},{"k":2,"epsilon":"1/4","base":["1/4","1/4"]}]}"#,
    )
    .unwrap();
    let out = hcpack(d, &["pack", "verify", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["report"]["offending_pair"], serde_json::json!([0, 1]));
}

#[test]
fn bad_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let garbage = d.join("garbage.json");
    std::fs::write(&garbage, "{not json").unwrap();
    assert_eq!(hcpack(d, &["pack", "verify", garbage.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(hcpack(d, &["pack", "verify", "/no/such/file.json"]).status.code(), Some(2));
    assert_eq!(hcpack(d, &["pack", "build", "--d", "3", "--mode", "nope"]).status.code(), Some(2));
    assert_eq!(hcpack(d, &["--log-base", "10", "game", "prop1"]).status.code(), Some(2));
    assert_eq!(hcpack(d, &["game", "prop1", "--kmax", "2"]).status.code(), Some(2));
}

#[test]
fn log_base_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    hcpack(d, &["--log-base", "2", "pack", "build", "--d", "64", "--mode", "lemmaB"]);
    let text = std::fs::read_to_string(d.join("packing.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["manifest"]["log_base"], "2");
    assert!(v["manifest"].get("timestamp").is_none());
}
