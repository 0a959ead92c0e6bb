use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use critchain::sweep::config::parse_list;
use critchain::sweep::csv::read_body;
use critchain::sweep::figures::{fig3_g_max, FIG_PHIS};
use critchain::SystemParams;

fn critchain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_critchain"))
        .args(args)
        .env_remove("CRITCHAIN_JOBS")
        .output()
        .expect("spawn critchain")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path());
    let missing = dir.path().join("missing.cfg");
    let cases: Vec<Vec<&str>> = vec![
        vec![],
        vec!["fig9"],
        vec!["fig3", "--bogus"],
        vec!["fig3", "--out", out, "--g", "abc"],
        vec!["fig3", "--out", out, "--config", path(&missing)],
        vec!["sweep", "--out", out, "--regime", "lossless"],
        vec!["sweep", "--out", out, "--regime", "nowhere", "--axis", "g=0.1:0.5:5"],
        vec!["sweep", "--out", out, "--axis", "g=0.5:0.1:5"],
        vec!["sweep", "--out", out, "--axis", "g=0.1:0.5:5", "--jobs", "0"],
        vec!["check", "--out", out, "--inject-fault", "nothing"],
    ];
    for args in cases {
        let o = critchain(&args);
        assert_eq!(
            o.status.code(),
            Some(1),
            "args {args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    assert_eq!(critchain(&["--help"]).status.code(), Some(0));
    assert_eq!(critchain(&["--version"]).status.code(), Some(0));
}

#[test]
fn sweep_reproduces_the_lossless_figure() {
    let dir = tempfile::tempdir().unwrap();
    let fig = dir.path().join("fig");
    let sw = dir.path().join("sweep");
    let o = critchain(&["fig3", "--out", path(&fig), "--points", "21", "--no-svg", "--jobs", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!fig.join("fig3.svg").exists());

    let g_max = fig3_g_max(&SystemParams::default());
    let axis = format!("g=0.01:{g_max:?}:21");
    let phis = FIG_PHIS.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",");
    let o = critchain(&[
        "sweep",
        "--out",
        path(&sw),
        "--regime",
        "lossless",
        "--axis",
        &axis,
        "--phi",
        &phis,
        "--jobs",
        "1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(sw.join("sweep.svg").exists());

    let a = fs::read_to_string(fig.join("fig3.csv")).unwrap();
    let b = fs::read_to_string(sw.join("sweep.csv")).unwrap();
    let (ha, ra) = read_body(&a).unwrap();
    let (hb, rb) = read_body(&b).unwrap();
    assert_eq!(ha, hb);
    assert_eq!(ra, rb);
    assert_eq!(ra.len(), 21 * FIG_PHIS.len());
}

#[test]
fn csv_header_reruns_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    let o = critchain(&[
        "sweep",
        "--out",
        path(&first),
        "--regime",
        "cavity",
        "--kappa-ph",
        "0.2",
        "--axis",
        "g=0.1:0.8:7",
        "--phi",
        "0,0.25pi",
        "--no-svg",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = first.join("sweep.csv");
    let o = critchain(&["sweep", "--config", path(&csv), "--out", path(&second), "--no-svg"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(&csv).unwrap(), fs::read(second.join("sweep.csv")).unwrap());
}

#[test]
fn jobs_from_environment_do_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let serial = dir.path().join("serial");
    let parallel = dir.path().join("parallel");
    let args = |out: &Path| {
        vec![
            "sweep".to_string(),
            "--out".into(),
            path(out).into(),
            "--regime".into(),
            "chain".into(),
            "--axis".into(),
            "eta=0.3:30:9:log".into(),
            "--axis".into(),
            "kappa_ph=0.1:0.5:3".into(),
        ]
    };
    let o = Command::new(env!("CARGO_BIN_EXE_critchain"))
        .args(args(&serial))
        .arg("--jobs")
        .arg("1")
        .output()
        .unwrap();
    assert!(o.status.success());
    let o = Command::new(env!("CARGO_BIN_EXE_critchain"))
        .args(args(&parallel))
        .env("CRITCHAIN_JOBS", "4")
        .output()
        .unwrap();
    assert!(o.status.success());
    for name in ["sweep.csv", "sweep.svg"] {
        assert_eq!(
            fs::read(serial.join(name)).unwrap(),
            fs::read(parallel.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# cavity sweep\n[run]\ncommand = sweep\nregime = cavity\nphi = 0\n\n[params]\nkappa_ph = 0.3\n\n[axis.g]\nmin = 0.1\nmax = 0.5\ncount = 3\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = critchain(&[
        "sweep",
        "--config",
        path(&cfg),
        "--out",
        path(&out),
        "--phi",
        "0,0.5pi",
        "--no-svg",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(text.contains("kappa_ph = 0.3"));
    let (header, rows) = read_body(&text).unwrap();
    assert_eq!(&header[..2], &["g", "phi"]);
    assert_eq!(rows.len(), 6);
    let phis: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(phis[..2], parse_list("0,0.5pi").unwrap()[..]);
}

#[test]
fn spectrum_figure_flags_unconverged_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig2");
    let o = critchain(&[
        "fig2",
        "--out",
        path(&out),
        "--g",
        "1.2",
        "--points",
        "11",
        "--nmax",
        "40",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_body(&fs::read_to_string(out.join("fig2.csv")).unwrap()).unwrap();
    let flag = header.iter().position(|h| h == "flag").unwrap();
    assert_eq!(rows.len(), 11);
    assert!(rows.iter().any(|r| r[flag].contains("NOGROUND")));
    assert!(out.join("fig2a.svg").exists() && out.join("fig2b.svg").exists());
}
