use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowsparse"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_owned()
}

fn small_scene(dir: &TempDir, seed: &str) -> (String, String, String) {
    let (map, gt, est) = (p(dir, "map.json"), p(dir, "gt.txt"), p(dir, "est.txt"));
    ok(&[
        "generate",
        "--seed",
        seed,
        "--points",
        "300",
        "--keyframes",
        "20",
        "--out",
        &map,
        "--gt",
        &gt,
        "--est",
        &est,
    ]);
    (map, gt, est)
}

fn json(text: &str) -> serde_json::Value {
    serde_json::from_str(text).expect("valid json")
}

#[test]
fn generate_is_deterministic() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let (ma, ga, _) = small_scene(&a, "9");
    let (mb, gb, _) = small_scene(&b, "9");
    assert_eq!(std::fs::read(ma).unwrap(), std::fs::read(mb).unwrap());
    assert_eq!(std::fs::read(ga).unwrap(), std::fs::read(gb).unwrap());
}

#[test]
fn flow_pipeline_end_to_end() {
    let dir = TempDir::new().unwrap();
    let (map, gt, est) = small_scene(&dir, "1");
    let (out, report, dimacs) = (
        p(&dir, "sparse.json"),
        p(&dir, "report.json"),
        p(&dir, "net.min"),
    );
    ok(&[
        "sparsify",
        "--map",
        &map,
        "--capacity-m",
        "20",
        "--out",
        &out,
        "--report",
        &report,
        "--dump-dimacs",
        &dimacs,
    ]);
    let r = json(&std::fs::read_to_string(&report).unwrap());
    assert_eq!(r["strategy"], "flow");
    assert_eq!(r["input_points"], 300);
    let kept = r["kept_points"].as_u64().unwrap();
    assert!(kept > 0 && kept < 300);
    assert!(r["timings"]["solve_ms"].is_number());
    assert!(r["mp_percent"].as_f64().unwrap() > 0.0);
    let net = std::fs::read_to_string(&dimacs).unwrap();
    assert!(net.lines().any(|l| l.starts_with("p min ")));

    let m = json(&ok(&["metrics", "--map", &out]));
    assert_eq!(m["points"].as_u64().unwrap(), kept);
    assert!(m["c"].as_f64().unwrap() >= 2.0);

    let t = json(&ok(&[
        "metrics", "--est", &est, "--gt", &gt, "--align", "rigid",
    ]));
    assert_eq!(t["trajectory"]["associated"], 20);
    assert!(t["trajectory"]["ate_rms"].as_f64().unwrap() > 0.0);
    let same = json(&ok(&[
        "metrics", "--est", &gt, "--gt", &gt, "--align", "none",
    ]));
    assert_eq!(same["trajectory"]["ate_rms"], 0.0);
    assert_eq!(same["trajectory"]["ate_rot_rms_deg"], 0.0);
}

#[test]
fn baseline_strategies_respect_budget() {
    let dir = TempDir::new().unwrap();
    let (map, _, _) = small_scene(&dir, "2");
    for s in ["topm", "grid", "radius"] {
        let r = json(&ok(&[
            "sparsify",
            "--map",
            &map,
            "--strategy",
            s,
            "--budget",
            "50",
        ]));
        assert_eq!(r["kept_points"], 50, "{s}");
        assert_eq!(r["budget"], 50);
    }
}

#[test]
fn invalid_input_exits_nonzero() {
    let dir = TempDir::new().unwrap();
    let (map, _, _) = small_scene(&dir, "3");
    let no_m = run(&["sparsify", "--map", &map]);
    assert!(!no_m.status.success());
    assert!(String::from_utf8_lossy(&no_m.stderr).contains("--capacity-m"));
    assert!(!run(&["sparsify", "--map", &map, "--strategy", "grid"])
        .status
        .success());
    assert!(!run(&["sparsify", "--map", &map, "--capacity-m", "0"])
        .status
        .success());
    assert!(!run(&[
        "sparsify",
        "--map",
        &map,
        "--capacity-m",
        "5",
        "--theta-ratio",
        "2"
    ])
    .status
    .success());

    let broken = p(&dir, "broken.json");
    std::fs::write(&broken, "{\"keyframes\": [").unwrap();
    let out = run(&["sparsify", "--map", &broken, "--capacity-m", "5"]);
    assert!(!out.status.success());
    assert!(!Path::new(&p(&dir, "missing.json")).exists());
    assert!(!run(&["metrics", "--map", &p(&dir, "missing.json")])
        .status
        .success());
    assert!(!run(&[
        "generate",
        "--out",
        &p(&dir, "x.json"),
        "--gt",
        &p(&dir, "x.txt")
    ])
    .status
    .success());
}

#[test]
fn compare_csv_is_stable_and_sorted() {
    let args = [
        "compare",
        "--seeds",
        "2",
        "--points",
        "200",
        "--keyframes",
        "12",
        "--capacities",
        "10,20",
    ];
    let text = ok(&args);
    let mut lines = text.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("# flowsparse compare seeds=0..2"));
    let header = lines.next().unwrap();
    assert!(header.starts_with("seed,strategy,capacity_m,budget,kept_points"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2 * 2 * 4);
    let cols = header.split(',').count();
    assert!(rows.iter().all(|r| r.len() == cols));
    assert_eq!(rows[0][..3], ["0", "flow", "10"]);
    assert_eq!(rows[3][..3], ["0", "radius", "10"]);
    assert_eq!(rows[15][..3], ["1", "radius", "20"]);
    // baselines use the flow kept count as budget
    assert!(rows.iter().all(|r| r[1] == "flow" || r[3] == r[4]));

    let strip = |t: &str| -> Vec<String> {
        t.lines()
            .map(|l| l.rsplitn(3, ',').nth(2).unwrap_or(l).to_owned())
            .collect()
    };
    assert_eq!(strip(&text), strip(&ok(&args)));
}
