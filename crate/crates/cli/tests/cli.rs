use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hibsa::trace::read_trace_csv;
use hibsa_cli::runner::mean_std;
use hibsa_cli::{parse_config, ProblemSpec, EXIT_CHECK, EXIT_CONFIG, EXIT_OK, EXIT_SOLVER};
use tempfile::TempDir;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hibsa-cli"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> u8 {
    out.status.code().expect("exit code") as u8
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

const BILINEAR: &str = r#"
experiment = "bilinear"
seeds = [0, 1]

[problem]
dim = 6

[solver]
rho = 1.0
schedule = "fig1"
max_iter = 300
"#;

const JAMMING: &str = r#"
experiment = "jamming"
seeds = [3, 4, 5]

[problem]
users = 3
channels = 2
snr_db = 1.0

[solver]
rho = 0.2
schedule = "constant"
beta = 0.05
gamma = 0.0
surrogate = "proximal_linear"
surrogate_scale = 0.05
max_iter = 500
"#;

fn shipped_configs() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut paths: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    paths.sort();
    paths
}

#[test]
fn shipped_configs_validate() {
    let paths = shipped_configs();
    assert_eq!(paths.len(), 4);
    for p in paths {
        let out = cli(&["validate", p.to_str().unwrap()]);
        assert_eq!(code(&out), EXIT_OK, "{}: {}", p.display(), stderr(&out));
        assert!(stdout(&out).starts_with("ok: "));
    }
}

#[test]
fn missing_rho_is_named() {
    let dir = TempDir::new().unwrap();
    let text = BILINEAR.replace("rho = 1.0\n", "");
    let out = cli(&["validate", write_config(&dir, "c.toml", &text).to_str().unwrap()]);
    assert_eq!(code(&out), EXIT_CONFIG);
    assert!(
        stderr(&out).contains("missing required key `solver.rho`"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn kappa_two_is_rejected() {
    let dir = TempDir::new().unwrap();
    let text = BILINEAR.replace("rho = 1.0\n", "rho = 1.0\nkappa = 2\n");
    let out = cli(&["validate", write_config(&dir, "c.toml", &text).to_str().unwrap()]);
    assert_eq!(code(&out), EXIT_CONFIG);
    assert!(stderr(&out).contains("kappa must exceed 2"), "{}", stderr(&out));
}

#[test]
fn every_violation_is_reported() {
    let text = r#"
experiment = "jamming"
seeds = [1, 1]
colour = "blue"

[problem]
users = 0
snr_db = "loud"
extra = 1

[solver]
kappa = 1.5
schedule = "sometimes"
surrogate = "proximal_linear"
"#;
    let err = parse_config(text).unwrap_err();
    let all = err.violations.join("\n");
    for needle in [
        "unknown key `colour`",
        "`seeds` must not repeat",
        "`problem.users` must be a positive integer",
        "missing required key `problem.channels`",
        "`problem.snr_db` must be a finite number",
        "unknown key `problem.extra`",
        "missing required key `solver.rho`",
        "kappa must exceed 2",
        "unknown schedule `sometimes`",
        "missing required key `solver.surrogate_scale`",
    ] {
        assert!(all.contains(needle), "no `{needle}` in:\n{all}");
    }
    assert_eq!(err.violations.len(), 10, "{all}");

    assert!(
        parse_config("experiment = \"chess\"\n[problem]\n[solver]\nrho = 1\n")
            .unwrap_err()
            .violations[0]
            .contains("unknown experiment `chess`")
    );
    assert!(parse_config("experiment = [").unwrap_err().violations[0].starts_with("malformed config"));
    assert!(
        parse_config(&BILINEAR.replace("max_iter = 300", "max_iter = 300\nbeta = 2.0"))
            .unwrap_err()
            .violations[0]
            .contains("only apply to the constant schedule")
    );
}

#[test]
fn defaults_fill_optional_keys() {
    let text =
        "experiment = \"robust\"\n[problem]\ndim = 2\nsamples = 10\nlambda = 1.0\n[solver]\nrho = 0.5\n";
    let c = parse_config(text).unwrap();
    assert_eq!(c.seeds, (0..10).collect::<Vec<u64>>());
    assert_eq!(c.presets, vec!["hibsa".to_string()]);
    assert_eq!(c.output_dir, PathBuf::from("results/robust"));
    assert_eq!(c.solver.base.kappa, 3.0);
    assert_eq!(c.solver.base.schedule, hibsa::Schedule::Auto);
    assert!(
        matches!(c.problem, ProblemSpec::Robust { flip, ref prior, .. } if flip == 0.0 && prior == &vec![0.5, 0.5])
    );
}

fn read_trace(path: &Path) -> Vec<hibsa::IterateTrace> {
    read_trace_csv(BufReader::new(fs::File::open(path).unwrap())).unwrap()
}

fn summary(path: &Path) -> Vec<(String, String, f64, f64)> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (
                f[0].to_string(),
                f[1].to_string(),
                f[3].parse().unwrap(),
                f[4].parse().unwrap(),
            )
        })
        .collect()
}

#[test]
fn bilinear_run_writes_diverging_and_converging_traces() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, "b.toml", BILINEAR);
    let out_dir = dir.path().join("out");
    let out = cli(&[
        "run",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--check",
    ]);
    assert_eq!(code(&out), EXIT_OK, "{}", stderr(&out));
    assert!(stdout(&out).contains("check [PASS] gda gap grows: 2/2 seeds"));

    for seed in 0..2 {
        let gda = read_trace(&out_dir.join(format!("gda_seed{seed}.csv")));
        let fig1 = read_trace(&out_dir.join(format!("hibsa-fig1_seed{seed}.csv")));
        assert!(gda.last().unwrap().gap_norm > gda[0].gap_norm);
        assert!(fig1.last().unwrap().gap_norm < fig1[0].gap_norm);
        assert_eq!(fig1.len(), 300);
    }
    let runs = fs::read_to_string(out_dir.join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 5);
    assert!(runs.starts_with(hibsa_cli::runner::RUNS_HEADER));
}

#[test]
fn summary_matches_recomputation_from_traces() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, "j.toml", JAMMING);
    let out_dir = dir.path().join("out");
    let out = cli(&[
        "run",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), EXIT_OK, "{}", stderr(&out));
    let rows = summary(&out_dir.join("summary.csv"));
    assert_eq!(rows.len(), 8);
    for preset in ["hibsa", "frozen"] {
        let traces: Vec<_> = [3, 4, 5]
            .iter()
            .map(|s| read_trace(&out_dir.join(format!("{preset}_seed{s}.csv"))))
            .collect();
        let column = |f: fn(&hibsa::IterateTrace) -> f64| -> Vec<f64> {
            traces.iter().map(|t| f(t.last().unwrap())).collect()
        };
        for (quantity, values) in [
            ("iterations", column(|r| r.iter as f64)),
            ("final_objective", column(|r| r.objective)),
            ("final_gap_norm", column(|r| r.gap_norm)),
            // the jamming objective is minus the sum rate
            ("sum_rate", column(|r| -r.objective)),
        ] {
            let row = rows.iter().find(|r| r.0 == preset && r.1 == quantity).unwrap();
            let (mean, std) = mean_std(&values);
            assert!(
                (row.2 - mean).abs() <= 1e-12 * mean.abs().max(1.0),
                "{preset} {quantity}"
            );
            assert!(
                (row.3 - std).abs() <= 1e-12 * std.abs().max(1.0),
                "{preset} {quantity}"
            );
        }
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, "j.toml", JAMMING);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let out = cli(&["run", config.to_str().unwrap(), "--out", d.to_str().unwrap()]);
        assert_eq!(code(&out), EXIT_OK);
    }
    let mut names: Vec<_> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 8);
    for n in names {
        assert_eq!(
            fs::read(a.join(&n)).unwrap(),
            fs::read(b.join(&n)).unwrap(),
            "{n:?}"
        );
    }
}

#[test]
fn flags_override_the_config() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, "b.toml", BILINEAR);
    let out_dir = dir.path().join("out");
    let out = cli(&[
        "run",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--seeds",
        "3",
        "--preset",
        "gda",
    ]);
    assert_eq!(code(&out), EXIT_OK, "{}", stderr(&out));
    let mut names: Vec<String> = fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "gda_seed0.csv",
            "gda_seed1.csv",
            "gda_seed2.csv",
            "runs.csv",
            "summary.csv"
        ]
    );

    let out = cli(&[
        "run",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--preset",
        "adam",
    ]);
    assert_eq!(code(&out), EXIT_CONFIG);
    assert!(stderr(&out).contains("unknown preset `adam`"));
}

#[test]
fn solver_failure_exits_two() {
    let dir = TempDir::new().unwrap();
    let text = JAMMING.replace("max_iter = 500", "max_iter = 500\nenforce_conditions = true");
    let config = write_config(&dir, "j.toml", &text);
    let out = cli(&[
        "run",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), EXIT_SOLVER);
    assert!(stderr(&out).contains("run failed"));
}

#[test]
fn threshold_miss_exits_three() {
    let dir = TempDir::new().unwrap();
    let text = BILINEAR.replace("max_iter = 300", "max_iter = 1");
    let config = write_config(&dir, "b.toml", &text);
    let out = cli(&[
        "run",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
        "--check",
    ]);
    assert_eq!(code(&out), EXIT_CHECK);
    assert!(stdout(&out).contains("check [FAIL] gda gap grows"));
}

#[test]
fn gradcheck_passes_on_every_problem() {
    let dir = TempDir::new().unwrap();
    let robust = "experiment = \"robust\"\n[problem]\ndim = 3\nsamples = 40\nflip = 0.1\nlambda = 1.0\n[solver]\nrho = 0.5\n";
    let maxmin =
        "experiment = \"maxmin\"\n[problem]\nusers = 3\nchannels = 2\nsnr_db = 5.0\n[solver]\nrho = 1.0\n";
    for (name, text) in [("b", BILINEAR), ("j", JAMMING), ("r", robust), ("m", maxmin)] {
        let config = write_config(&dir, &format!("{name}.toml"), text);
        let out = cli(&["gradcheck", config.to_str().unwrap(), "--seeds", "2"]);
        assert_eq!(code(&out), EXIT_OK, "{name}: {}{}", stdout(&out), stderr(&out));
        assert_eq!(stdout(&out).matches("[PASS]").count(), 2);
    }
}

#[test]
fn maxmin_and_robust_checks_pass_on_small_runs() {
    let dir = TempDir::new().unwrap();
    let maxmin = r#"
experiment = "maxmin"
seeds = [0, 1, 2, 3]

[problem]
users = 3
channels = 2
snr_db = 5.0
nu = [1.0, 5.0]

[solver]
rho = 1.0
schedule = "constant"
beta = 1.0
gamma = 1e-3
max_iter = 3000
"#;
    let robust = r#"
experiment = "robust"
seeds = [0, 1]

[problem]
dim = 3
samples = 100
flip = 0.25
lambda = 1.0

[solver]
rho = 0.1
max_iter = 3000
"#;
    for (name, text, checks) in [("m", maxmin, 2), ("r", robust, 1)] {
        let config = write_config(&dir, &format!("{name}.toml"), text);
        let out = cli(&[
            "run",
            config.to_str().unwrap(),
            "--out",
            dir.path().join(name).to_str().unwrap(),
            "--check",
        ]);
        assert_eq!(code(&out), EXIT_OK, "{name}: {}{}", stdout(&out), stderr(&out));
        assert_eq!(stdout(&out).matches("[PASS]").count(), checks, "{}", stdout(&out));
    }
    assert!(!dir.path().join("m").join("lse-nu5_seed0.csv").exists());
    assert!(dir.path().join("m").join("hibsa_seed0.csv").exists());
}
