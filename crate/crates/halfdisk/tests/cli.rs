use std::path::PathBuf;
use std::process::Command;

use halfdisk::cli::run;
use serde_json::Value;

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("halfdisk").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn call_file(args: &[&str], file: &str) -> (i32, String, String) {
    let path = golden(file);
    let mut all: Vec<&str> = args.to_vec();
    let p = path.to_str().unwrap();
    all.push(p);
    call(&all)
}

/// Compares with `<name>.out.json`; `UPDATE_GOLDEN=1` rewrites it.
fn check_golden(actual: &str, name: &str) {
    let path = golden(&format!("{name}.out.json"));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
    }
    let expected =
        std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing {}", path.display()));
    assert_eq!(actual, expected, "golden mismatch for {name}");
}

fn parse(s: &str) -> Value {
    serde_json::from_str(s).expect("report is JSON")
}

#[test]
fn golden_reports() {
    let cases: &[(&[&str], &str, &str)] = &[
        (&["index"], "index_cubic.json", "index_cubic"),
        (&["compare"], "compare_reparam.json", "compare_reparam"),
        (&["tangency"], "tangency_meeting.json", "tangency_meeting"),
        (&["reflect"], "reflect_eta.json", "reflect_eta"),
        (
            &["adjunction"],
            "adjunction_config.json",
            "adjunction_config",
        ),
        (
            &["adjunction", "--walk", "40", "--seed", "7"],
            "adjunction_config.json",
            "adjunction_walk",
        ),
    ];
    for (args, input, name) in cases {
        let (code, out, err) = call_file(args, input);
        assert_eq!(code, 0, "{name}: {err}");
        check_golden(&out, name);
    }
}

#[test]
fn index_both_methods_agree() {
    let (code, out, _) = call_file(&["index", "--method", "both"], "index_cubic.json");
    assert_eq!(code, 0);
    let v = parse(&out);
    assert_eq!(v["index"], 3);
    assert_eq!(v["agree"], true);
    assert!(v["linking"]["residual"].as_f64().unwrap() < 0.1);
}

#[test]
fn tangent_maslov_from_flags() {
    let (code, out, _) = call(&["maslov", "--tangent", "-g", "0", "-s", "1"]);
    assert_eq!(code, 0);
    assert_eq!(parse(&out)["maslov"], 2);
    let (code, out, _) = call(&["maslov", "--tangent", "-g", "2", "-s", "3"]);
    assert_eq!(code, 0);
    assert_eq!(parse(&out)["maslov"], -10);
    let (code, _, _) = call(&["maslov", "--tangent", "-g", "1"]);
    assert_eq!(code, 2);
}

#[test]
fn adjunction_verdicts() {
    let (_, out, _) = call_file(&["adjunction"], "adjunction_config.json");
    assert_eq!(parse(&out)["verdict"], "equal");
    let (_, out, _) = call_file(
        &["adjunction", "--walk", "200", "--surgery", "different"],
        "adjunction_config.json",
    );
    let v = parse(&out);
    assert_eq!(v["all_equal"], true);
    assert!(!v["walk"].as_array().unwrap().is_empty());
}

#[test]
fn schema_errors_carry_pointers() {
    let (code, _, err) = call_file(&["index"], "bad_coeff.json");
    assert_eq!(code, 2);
    check_golden(&err, "bad_coeff");
    let (code, _, err) = call_file(&["index"], "bad_field.json");
    assert_eq!(code, 2);
    assert_eq!(parse(&err)["error"]["pointer"], "/payload/u2/coefs");
    let (code, _, err) = call_file(&["compare"], "bad_field.json");
    assert_eq!(code, 2);
    assert_eq!(parse(&err)["error"]["pointer"], "/kind");
}

#[test]
fn exit_codes() {
    let (code, _, _) = call(&["index", "/nonexistent/file.json"]);
    assert_eq!(code, 2);
    let (code, _, _) = call(&["no-such-command"]);
    assert_eq!(code, 2);
    let (code, out, _) = call(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("smooth-cusp"));
    // Undersampled traces: the computation fails, not the input.
    let (code, _, err) = call_file(
        &["index", "--method", "linking", "--samples", "8"],
        "index_cubic.json",
    );
    assert_eq!(code, 1);
    assert_eq!(parse(&err)["error"]["kind"], "internal");
    // Cusp for the index: a precondition.
    let dir = std::env::temp_dir().join("halfdisk-cli-test-cusp.json");
    std::fs::write(
        &dir,
        r#"{"u1":{"dim":2,"coeffs":[[[0,0],[0,0],[1,0]],[[0,0],[0,0],[0,0],[1,0]]]},"u2":{"dim":2,"coeffs":[[[0,0],[1,0]],[[0,0]]]}}"#,
    )
    .unwrap();
    let (code, _, err) = call(&["index", dir.to_str().unwrap()]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn emitted_inputs_are_fixed_points() {
    let cases: &[(&str, &str)] = &[
        ("index", "index_cubic.json"),
        ("compare", "compare_reparam.json"),
        ("tangency", "tangency_meeting.json"),
        ("reflect", "reflect_eta.json"),
        ("perturb", "perturb_eta.json"),
        ("smooth-cusp", "cusp_eta.json"),
        ("adjunction", "adjunction_config.json"),
    ];
    let tmp = std::env::temp_dir();
    for (cmd, input) in cases {
        let (code, first, err) = call_file(&["--emit-input", cmd], input);
        assert_eq!(code, 0, "{cmd}: {err}");
        let path = tmp.join(format!("halfdisk-emit-{input}"));
        std::fs::write(&path, &first).unwrap();
        let (code, second, _) = call(&["--emit-input", cmd, path.to_str().unwrap()]);
        assert_eq!(code, 0);
        assert_eq!(first, second, "{cmd} normalization is not idempotent");
        let v = parse(&first);
        assert_eq!(v["version"], "halfdisk/1");
    }
}

#[test]
fn truncation_flag_is_recorded() {
    let (_, out, _) = call_file(
        &["--emit-input", "index", "--truncation", "12"],
        "index_cubic.json",
    );
    let v = parse(&out);
    assert_eq!(v["payload"]["u1"]["order"], 12);
    let (code, out, _) = call_file(
        &["index", "--truncation", "12", "--arithmetic", "float"],
        "index_cubic.json",
    );
    assert_eq!(code, 0);
    assert_eq!(parse(&out)["index"], 3);
}

#[test]
fn perturbation_report() {
    let (code, out, err) = call_file(&["perturb", "--grid", "32"], "perturb_eta.json");
    assert_eq!(code, 0, "{err}");
    let v = parse(&out);
    assert!(v["residual"].as_f64().unwrap() < 1e-6);
    assert_eq!(v["origin_error"].as_f64().unwrap(), 0.0);
    assert!(v["ratio"].as_f64().unwrap() <= 0.9);
}

#[test]
fn cusp_report_and_dump() {
    let dir = std::env::temp_dir().join("halfdisk-cli-dump");
    let (code, out, err) = call_file(
        &[
            "smooth-cusp",
            "--grid",
            "64",
            "--dump",
            dir.to_str().unwrap(),
        ],
        "cusp_coupled.json",
    );
    assert_eq!(code, 0, "{err}");
    let v = parse(&out);
    assert!(v["radius"].as_f64().unwrap() > 0.0);
    let dump: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("w2.json")).unwrap()).unwrap();
    assert_eq!(dump["h"], 1.0 / 64.0);
    assert_eq!(dump["values"].as_array().unwrap().len(), 129 * 129);
}

#[test]
fn environment_seed_overrides_flag() {
    let exe = env!("CARGO_BIN_EXE_halfdisk");
    let input = golden("adjunction_config.json");
    let run_with = |env: Option<&str>, seed: &str| {
        let mut cmd = Command::new(exe);
        cmd.args(["adjunction", "--walk", "60", "--seed", seed])
            .arg(&input);
        cmd.env_remove("HALFDISK_SEED");
        if let Some(e) = env {
            cmd.env("HALFDISK_SEED", e);
        }
        let out = cmd.output().unwrap();
        assert!(out.status.success());
        String::from_utf8(out.stdout).unwrap()
    };
    let a = run_with(None, "11");
    let b = run_with(Some("11"), "99");
    let c = run_with(None, "99");
    assert_eq!(a, b);
    assert_ne!(a, c);
    let bad = Command::new(exe)
        .args(["maslov", "--tangent", "-g", "0", "-s", "1"])
        .env("HALFDISK_SEED", "x")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
