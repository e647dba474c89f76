use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fvx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fvx"))
        .args(args)
        .output()
        .expect("spawn fvx")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const DAM: &str = "\
[model]
system = swe1d

[grid]
nx = 64

[initial]
name = dambreak1d

[boundary]
kind = wall

[time]
t_end = 0.1

[output]
snapshot_every_steps = 5
";

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("case.ini");
    fs::write(&path, text).unwrap();
    path
}

fn snapshots(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "fvx"))
        .collect();
    files.sort();
    files
}

#[test]
fn run_writes_snapshots_and_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), DAM);
    let out_dir = dir.path().join("out");
    let out = fvx(&["run", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(snapshots(&out_dir).len() >= 2);
    let csv = fs::read_to_string(out_dir.join("fvx_diagnostics.csv")).unwrap();
    assert!(csv.starts_with("time,mass,potential,kinetic,energy,enstrophy,min_h,max_wavespeed\n"));
}

#[test]
fn output_dir_defaults_next_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &DAM.replace("[output]", "[output]\ndir = results"));
    let out = fvx(&["run", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(!snapshots(&dir.path().join("results")).is_empty());
}

#[test]
fn config_errors_exit_2_with_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &DAM.replace("t_end = 0.1", "t_end = 0.1\ncfl = 1.5"));
    let out = fvx(&["run", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 15"), "{}", stderr(&out));
}

#[test]
fn missing_files_exit_4() {
    let out = fvx(&["run", "/nonexistent/case.ini"]);
    assert_eq!(code(&out), 4);
    let out = fvx(&["compare", "/nonexistent/a.fvx", "/nonexistent/b.fvx"]);
    assert_eq!(code(&out), 4);
}

#[test]
fn blow_up_exits_3_and_keeps_the_last_valid_state() {
    let dir = tempfile::tempdir().unwrap();
    let text = DAM.replace("t_end = 0.1", "t_end = 10\nmode = fixed\nfixed_dt = 2");
    let cfg = write_config(dir.path(), &text);
    let out_dir = dir.path().join("out");
    let out = fvx(&["run", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    let snaps = snapshots(&out_dir);
    assert!(!snaps.is_empty());
    let last = fvx(&["compare", snaps.last().unwrap().to_str().unwrap(), snaps[0].to_str().unwrap()]);
    assert_eq!(code(&last), 0, "{}", stderr(&last));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&fvx(&["frobnicate"])), 1);
    assert_eq!(code(&fvx(&["oracle", "sod1d"])), 1);
    assert_eq!(code(&fvx(&["--help"])), 0);
}

#[test]
fn oracle_prints_profiles() {
    let out = fvx(&["oracle", "dambreak1d", "--t", "0.1", "--nx", "16"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,h,hu"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 16);
    assert_eq!(rows[0][1], 1.0);
    assert_eq!(rows[15][1], 0.35);

    let out = fvx(&["oracle", "sod1d", "--t", "0.2", "--nx", "8"]);
    assert!(stdout(&out).starts_with("x,rho,u,p\n"));

    assert_eq!(code(&fvx(&["oracle", "noh", "--t", "1", "--nx", "8"])), 2);
}

#[test]
fn compare_same_file_and_across_resolutions() {
    let dir = tempfile::tempdir().unwrap();
    let fine = dir.path().join("fine.fvx");
    let coarse = dir.path().join("coarse.fvx");
    for (nx, path) in [("256", &fine), ("128", &coarse)] {
        let out = fvx(&["oracle", "dambreak1d", "--t", "0.1", "--nx", nx, "--snapshot", path.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    let same = fvx(&["compare", coarse.to_str().unwrap(), coarse.to_str().unwrap()]);
    assert_eq!(stdout(&same).trim().parse::<f64>().unwrap(), 0.0);

    let cross = fvx(&["compare", coarse.to_str().unwrap(), fine.to_str().unwrap()]);
    assert_eq!(code(&cross), 0, "{}", stderr(&cross));
    let err: f64 = stdout(&cross).trim().parse().unwrap();
    assert!(err > 0.0 && err < 1e-3, "{err}");

    let mut bytes = fs::read(&coarse).unwrap();
    bytes[0] = b'X';
    fs::write(&coarse, bytes).unwrap();
    let bad = fvx(&["compare", coarse.to_str().unwrap(), fine.to_str().unwrap()]);
    assert_eq!(code(&bad), 4);
    assert!(stderr(&bad).contains("bad magic"), "{}", stderr(&bad));
}

#[test]
fn bench_reports_one_row_per_resolution() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[model]\nsystem = swe2d\n[grid]\nnx = 100\nny = 100\n[initial]\nname = gaussian2d\n[time]\nt_end = 1\n";
    let cfg = write_config(dir.path(), text);
    let out = fvx(&["bench", cfg.to_str().unwrap(), "--resolutions", "50,200,400", "--steps", "3"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("resolution,wall_seconds,cell_updates_per_second"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.iter().map(|r| r[0]).collect::<Vec<_>>(), [50.0, 200.0, 400.0]);
    assert!(rows.windows(2).all(|w| w[1][1] >= w[0][1]), "{rows:?}");
}

#[test]
fn thread_cap_from_the_environment() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_fvx"))
            .args(["oracle", "sod1d", "--t", "0.1", "--nx", "4"])
            .env("FVX_THREADS", threads)
            .output()
            .unwrap()
    };
    assert_eq!(code(&run("1")), 0);
    assert_eq!(code(&run("0")), 0);
    assert_eq!(code(&run("many")), 1);
}
