//! Binary-level acceptance: deterministic reports, exit codes, and the
//! artifact files each subcommand produces.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ckyform"))
}

fn run_in(dir: &Path, args: &[&str]) -> std::process::Output {
    bin()
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

#[test]
fn criterion_10_reports_are_byte_identical() {
    let tmp = std::env::temp_dir().join(format!("ckyform-det-{}", std::process::id()));
    let (a, b) = (tmp.join("a"), tmp.join("b"));
    for (cmd, extra) in [
        ("check-div", vec![]),
        ("verify", vec!["--order", "8"]),
        ("hk", vec!["--order", "10"]),
    ] {
        for dir in [&a, &b] {
            let mut args = vec![cmd, "--spacetime", "ads", "--seed", "42", "--no-timing"];
            args.extend(extra.iter());
            let out = run_in(dir, &args);
            assert!(out.status.success(), "{cmd} failed: {out:?}");
        }
        let ra = std::fs::read(a.join("report.json")).unwrap();
        let rb = std::fs::read(b.join("report.json")).unwrap();
        assert_eq!(ra, rb, "{cmd}: reports differ between identical runs");
    }
    std::fs::remove_dir_all(&tmp).ok();
    println!("ACCEPTANCE 10 (byte-identical reports): PASS");
}

#[test]
fn exit_codes_follow_the_contract() {
    let tmp = std::env::temp_dir().join(format!("ckyform-exit-{}", std::process::id()));
    // 2: config errors, before any computation
    let out = run_in(&tmp.join("x"), &["check-cky", "--spacetime", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    let bad = tmp.join("bad.toml");
    std::fs::create_dir_all(&tmp).unwrap();
    std::fs::write(&bad, "unknown_key = 1\n").unwrap();
    let out = bin()
        .args(["verify", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(tmp.join("y"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // 0: a passing run
    let out = run_in(
        &tmp.join("ok"),
        &["check-div", "--spacetime", "minkowski", "--no-timing"],
    );
    assert_eq!(out.status.code(), Some(0));

    // 1: an identity fails (an ellipsoid is not of constant expansion)
    let cfg = tmp.join("ell.toml");
    std::fs::write(
        &cfg,
        "spacetime = \"minkowski\"\norder = 10\n[surface]\nkind = \"ellipsoid\"\n",
    )
    .unwrap();
    let out = bin()
        .args(["verify", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.join("z"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{out:?}");

    // ... unless the failure is declared expected
    let cfg2 = tmp.join("ell2.toml");
    std::fs::write(
        &cfg2,
        "spacetime = \"minkowski\"\norder = 10\n[surface]\nkind = \"ellipsoid\"\n[suite]\nexpect_fail = [\"cmc\"]\n",
    )
    .unwrap();
    let out = bin()
        .args(["verify", "--config"])
        .arg(&cfg2)
        .arg("--out")
        .arg(tmp.join("z2"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");

    // 3: runtime geometry error (reversed orientation kills the expansion)
    let cfg3 = tmp.join("flip.toml");
    std::fs::write(
        &cfg3,
        "spacetime = \"minkowski\"\norder = 8\n[surface]\nkind = \"cap\"\nflip_orientation = true\n",
    )
    .unwrap();
    let out = bin()
        .args(["verify", "--config"])
        .arg(&cfg3)
        .arg("--out")
        .arg(tmp.join("z3"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{out:?}");
    std::fs::remove_dir_all(&tmp).ok();
}

#[test]
fn artifacts_are_written() {
    let tmp = std::env::temp_dir().join(format!("ckyform-art-{}", std::process::id()));
    // mesh dump: header plus order^2 rows
    let out = run_in(
        &tmp.join("mesh"),
        &["mesh-dump", "--surface", "cap", "--order", "6"],
    );
    assert!(out.status.success());
    let csv = std::fs::read_to_string(tmp.join("mesh").join("mesh.csv")).unwrap();
    assert!(csv.starts_with("u1,u2,x0,x1,x2,x3,weight"));
    assert_eq!(csv.lines().count(), 1 + 36);

    // flow: trace with the documented columns and a report
    let out = run_in(
        &tmp.join("flow"),
        &[
            "flow",
            "--spacetime",
            "minkowski",
            "--order",
            "8",
            "--no-timing",
        ],
    );
    assert!(out.status.success(), "{out:?}");
    let trace = std::fs::read_to_string(tmp.join("flow").join("trace.csv")).unwrap();
    assert!(trace.starts_with("s,F_value,max_x0,shear,boundary_residual"));
    assert!(trace.lines().count() > 100);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.join("flow").join("report.json")).unwrap())
            .unwrap();
    assert!(report["version"].is_string());
    assert!(report["items"].as_array().unwrap().iter().all(|i| {
        i["name"].is_string()
            && i["paper_anchor"].is_string()
            && i["residual"].is_number()
            && i["pass"].is_boolean()
            && i["seconds"].is_number()
    }));
    std::fs::remove_dir_all(&tmp).ok();
}

#[test]
fn check_cky_reports_full_catalog() {
    let tmp = std::env::temp_dir().join(format!("ckyform-cat-{}", std::process::id()));
    let out = run_in(
        &tmp,
        &[
            "check-cky",
            "--spacetime",
            "minkowski",
            "--points",
            "25",
            "--no-timing",
        ],
    );
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.join("report.json")).unwrap()).unwrap();
    let items = report["items"].as_array().unwrap();
    // 20 catalog forms + 3 composites + the negative control
    assert!(items.len() >= 21, "got {} items", items.len());
    assert!(items.iter().all(|i| i["pass"].as_bool().unwrap()));
    std::fs::remove_dir_all(&tmp).ok();
}
