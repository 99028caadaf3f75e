use std::fs;

use radial_entanglement::cache::{ModeCache, CACHE_DIR_ENV};
use radial_entanglement::cli::{read_sweep_csv, run, CSV_HEADER};
use radial_entanglement::*;

fn path_arg(p: &std::path::Path) -> String {
    p.to_str().unwrap().to_string()
}

#[test]
fn radius_sweep_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let args = [
        "radent",
        "sweep",
        "--axis",
        "radius",
        "--dim",
        "3",
        "--sites",
        "60",
        "--trace-range",
        "5:30",
        "--emit",
        "csv",
        "--out",
    ];
    let mut argv: Vec<String> = args.iter().map(|s| s.to_string()).collect();
    argv.push(path_arg(&out));
    assert_eq!(run(&argv), 0);
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    assert_eq!(lines.count(), 26);
    let rows = read_sweep_csv(&text).unwrap();
    assert!(rows
        .windows(2)
        .all(|w| w[0].s < w[1].s && w[0].radius < w[1].radius));
    assert!(rows
        .iter()
        .all(|r| r.dim == 3.0 && r.sites == 60 && r.e1 < r.s));

    // The same run again is byte-identical.
    let again = dir.path().join("again.csv");
    argv.pop();
    argv.push(path_arg(&again));
    assert_eq!(run(&argv), 0);
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());

    let fit_out = dir.path().join("fit.csv");
    assert_eq!(
        run([
            "radent",
            "fit",
            "--from",
            &path_arg(&out),
            "--out",
            &path_arg(&fit_out)
        ]),
        0
    );
    let fit = fs::read_to_string(&fit_out).unwrap();
    let row: Vec<&str> = fit.lines().nth(1).unwrap().split(',').collect();
    let r2: f64 = row[6].parse().unwrap();
    assert!(r2 > 0.999, "{fit}");
}

#[test]
fn config_file_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    let out = dir.path().join("one.json");
    fs::write(
        &cfg,
        format!(
            "# small run\ndim = 3\nsites = 16\ntrace = 6\nemit = json\nout = {}\n",
            out.display()
        ),
    )
    .unwrap();
    assert_eq!(
        run([
            "radent",
            "entropy",
            "--config",
            &path_arg(&cfg),
            "--mass",
            "0.5"
        ]),
        0
    );
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    for key in [
        "S",
        "E1",
        "per_l",
        "tail_S",
        "tail_E1",
        "l_switch",
        "converged",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["mu"], 0.5);
    assert_eq!(v["N"], 16);
    let direct = total_entanglement(
        &ModelParams::new(3.0, 0.5, 16),
        Partition::new(6, 16).unwrap(),
        &EntanglementConfig::default(),
    )
    .unwrap();
    let s = v["S"].as_f64().unwrap();
    assert!((s - direct.S).abs() <= 1e-11 * direct.S);

    fs::write(&cfg, "dim = 3\nsites = 16\nwidth = 6\n").unwrap();
    assert_eq!(
        run([
            "radent",
            "entropy",
            "--config",
            &path_arg(&cfg),
            "--trace",
            "4"
        ]),
        9
    );
}

#[test]
fn emit_both_writes_two_files() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("pair");
    let code = run([
        "radent",
        "entropy",
        "--dim",
        "2.5",
        "--sites",
        "12",
        "--trace",
        "5",
        "--emit",
        "both",
        "--out",
        &path_arg(&base),
    ]);
    assert_eq!(code, 0);
    assert!(base.with_extension("csv").exists());
    assert!(base.with_extension("json").exists());
}

#[test]
fn selftest_and_majorization_commands() {
    assert_eq!(run(["radent", "selftest"]), 0);
    assert_eq!(
        run([
            "radent",
            "majorization",
            "--dim",
            "3",
            "--sites",
            "20",
            "--traces",
            "5,10",
            "--k-max",
            "20"
        ]),
        0
    );
    assert_eq!(
        run(["radent", "rg", "--dim", "3", "--sites", "16", "--masses", "0,1", "--trace", "6"]),
        0
    );
}

#[test]
fn cache_hits_corruption_and_versions() {
    let dir = tempfile::tempdir().unwrap();
    let params = ModelParams::new(3.0, 0.0, 14);
    let part = Partition::new(6, 14).unwrap();
    let cfg = EntanglementConfig::default();

    let cold = ModeCache::open(dir.path()).unwrap();
    let a = total_entanglement_with(&params, part, &cfg, &cold).unwrap();
    assert!(cold.reductions() > 0);
    assert_eq!(cold.hits(), 0);

    let warm = ModeCache::open(dir.path()).unwrap();
    let b = total_entanglement_with(&params, part, &cfg, &warm).unwrap();
    assert_eq!(warm.reductions(), 0);
    assert_eq!(a, b);
    let plain = total_entanglement(&params, part, &cfg).unwrap();
    assert_eq!(a, plain);

    // Damage one record: it is recomputed, not trusted.
    let victim = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|x| x == "xi"))
        .unwrap();
    let mut bytes = fs::read(&victim).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0xff;
    fs::write(&victim, bytes).unwrap();
    let repaired = ModeCache::open(dir.path()).unwrap();
    let c = total_entanglement_with(&params, part, &cfg, &repaired).unwrap();
    assert_eq!(repaired.discarded(), 1);
    assert_eq!(repaired.reductions(), 1);
    assert_eq!(a, c);

    let bumped = ModeCache::with_version(dir.path(), "999.0.0").unwrap();
    total_entanglement_with(&params, part, &cfg, &bumped).unwrap();
    assert_eq!(bumped.hits(), 0);
    assert!(bumped.reductions() > 0);
}

#[test]
fn cli_cache_flag_matches_cold_run() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let cold = dir.path().join("cold.json");
    let warm = dir.path().join("warm.json");
    let plain = dir.path().join("plain.json");
    let base = [
        "radent", "entropy", "--dim", "3", "--sites", "18", "--trace", "7", "--emit", "json",
    ];
    let with = |out: &std::path::Path, cached: bool| {
        let mut v: Vec<String> = base.iter().map(|s| s.to_string()).collect();
        v.extend(["--out".to_string(), path_arg(out)]);
        if cached {
            v.extend(["--cache".to_string(), path_arg(&cache)]);
        }
        v
    };
    assert!(std::env::var_os(CACHE_DIR_ENV).is_none());
    assert_eq!(run(with(&cold, true)), 0);
    assert_eq!(run(with(&warm, true)), 0);
    assert_eq!(run(with(&plain, false)), 0);
    assert_eq!(fs::read(&cold).unwrap(), fs::read(&warm).unwrap());
    assert_eq!(fs::read(&cold).unwrap(), fs::read(&plain).unwrap());
}
