use std::path::Path;
use std::process::{Command, Output};

fn setsum(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_setsum"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn version_prints() {
    let out = Command::new(env!("CARGO_BIN_EXE_setsum"))
        .arg("version")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("setsum "));
}

#[test]
fn dry_run_echoes_every_default() {
    let tmp = tempfile::tempdir().unwrap();
    let out = setsum(&["selfnorm", "--dry-run", "--n", "1024"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for key in [
        "law = \"pareto:2\"",
        "n = 1024",
        "ks_tolerance",
        "raikov_band",
        "raikov_control = \"rademacher\"",
        "work_cap",
    ] {
        assert!(text.contains(key), "missing {key} in\n{text}");
    }
    assert!(
        std::fs::read_dir(tmp.path()).unwrap().next().is_none(),
        "dry run wrote files"
    );
}

#[test]
fn usage_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "reps = 10\nbogus_key = 1\n").unwrap();
    let out = setsum(
        &["lemma2", "--config", cfg.to_str().unwrap()],
        &tmp.path().join("o"),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus_key"));
    let out = setsum(
        &["fclt", "--n", "4096", "--reps", "100000000"],
        &tmp.path().join("o"),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("1677721600000000"));
    let out = setsum(&["counterexample", "--r", "9..2"], &tmp.path().join("o"));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn counterexample_schema_and_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let args = [
        "counterexample",
        "--p",
        "1",
        "--d",
        "1",
        "--r",
        "2..4",
        "--reps",
        "1500",
        "--seed",
        "7",
    ];
    let (a, b, c) = (
        tmp.path().join("a"),
        tmp.path().join("b"),
        tmp.path().join("c"),
    );
    let run_a = setsum(&args, &a);
    assert_eq!(
        run_a.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&run_a.stdout)
    );
    let mut single = args.to_vec();
    single.extend(["--threads", "1"]);
    assert_eq!(setsum(&single, &b).status.code(), Some(0));
    let mut many = args.to_vec();
    many.extend(["--threads", "8"]);
    assert_eq!(setsum(&many, &c).status.code(), Some(0));
    let csv = String::from_utf8(read(&a, "counterexample.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "r,n_r,beta_r,k_r,eps_r,f_r,oracle,se,verdict"
    );
    assert_eq!(csv.lines().count(), 4);
    for name in [
        "summary.json",
        "reports.csv",
        "counterexample.csv",
        "measure.csv",
        "manifest.txt",
    ] {
        assert_eq!(
            read(&a, name),
            read(&b, name),
            "{name} differs across thread counts"
        );
        assert_eq!(
            read(&a, name),
            read(&c, name),
            "{name} differs across reruns"
        );
    }
    let manifest = String::from_utf8(read(&a, "manifest.txt")).unwrap();
    assert!(manifest
        .lines()
        .all(|l| l.len() > 66 && l.as_bytes()[64] == b' '));
    assert!(!manifest.contains("runtime.json"));
    assert!(a.join("runtime.json").exists());
}

#[test]
fn fail_and_inconclusive_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = setsum(
        &["lemma2", "--reps", "400", "--ladder", "8,16,32"],
        &tmp.path().join("l2"),
    );
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let cfg = tmp.path().join("weak.toml");
    std::fs::write(
        &cfg,
        "kind = \"counterexample\"\nrs = [2]\nreps = 300\nse_multiplier = 1.0\n",
    )
    .unwrap();
    let out = setsum(
        &["counterexample", "--config", cfg.to_str().unwrap()],
        &tmp.path().join("ce"),
    );
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
}

#[test]
fn fclt_example_row() {
    let tmp = tempfile::tempdir().unwrap();
    let out = setsum(
        &[
            "fclt",
            "--law",
            "gaussian:1",
            "--d",
            "2",
            "--n",
            "32",
            "--regions",
            "quadrant:0.5,0.5",
            "--reps",
            "2000",
        ],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let ks = String::from_utf8(read(tmp.path(), "ks.csv")).unwrap();
    let mut lines = ks.lines();
    assert_eq!(
        lines.next().unwrap(),
        "region,lambda,variance,ks,tolerance,verdict"
    );
    assert!(lines
        .next()
        .unwrap()
        .starts_with("\"quadrant:0.5,0.5\",0.25,0.25,"));
}
