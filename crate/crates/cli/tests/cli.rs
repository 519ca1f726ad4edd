use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use stieltjes_cuts::fixtures::example1_instance;
use stieltjes_cuts::instances::{read_file, write_file};

fn stieltjes(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stieltjes"))
        .args(args)
        .env_remove("STIELTJES_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect()
}

fn field(row: &[String], header: &str) -> String {
    let i = stieltjes_cuts::models::CSV_HEADER
        .iter()
        .position(|h| *h == header)
        .unwrap();
    row[i].clone()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(stieltjes(&["--help"]).status.code(), Some(0));
    assert_eq!(stieltjes(&["solve", "--help"]).status.code(), Some(0));
    assert_eq!(stieltjes(&["--bogus"]).status.code(), Some(2));
    assert_eq!(stieltjes(&["gen", "--grid", "6"]).status.code(), Some(2));
    let bad_tol = stieltjes(&[
        "solve",
        "--model",
        "poly",
        "--instance",
        "x.json",
        "--tol",
        "0",
    ]);
    assert_eq!(bad_tol.status.code(), Some(2));
    let two_models = stieltjes(&[
        "solve",
        "--model",
        "poly",
        "--model",
        "exact",
        "--instance",
        "x.json",
    ]);
    assert_eq!(two_models.status.code(), Some(2));
}

#[test]
fn gen_writes_one_file_per_seed_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a");
    let args = [
        "gen", "--grid", "6", "--sigma2", "0.5", "--seeds", "1..5", "-o",
    ];
    let o = stieltjes(&[&args[..], &[out.to_str().unwrap()]].concat());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut names: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names.len(), 5);
    for (seed, name) in (1..=5).zip(&names) {
        assert!(name.ends_with(&format!("seed{seed}.json")), "{name}");
        let inst = read_file(out.join(name)).unwrap();
        assert_eq!(inst.n(), 36);
        assert_eq!(inst.meta.seed, Some(seed));
    }

    let again = dir.path().join("b");
    let o = stieltjes(&[&args[..], &[again.to_str().unwrap()]].concat());
    assert!(o.status.success());
    for name in &names {
        assert_eq!(
            fs::read(out.join(name)).unwrap(),
            fs::read(again.join(name)).unwrap()
        );
    }
}

#[test]
fn seed_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_stieltjes"))
        .args(["gen", "--grid", "4", "--sigma2", "2", "--grids", "-o"])
        .arg(dir.path())
        .env("STIELTJES_SEED", "42")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir
        .path()
        .join("grid4-sigma2-2-mu-0.12-k16-seed42.json")
        .exists());
    let y = fs::read_to_string(dir.path().join("grid4-sigma2-2-mu-0.12-k16-seed42-y.csv")).unwrap();
    assert_eq!(y.lines().count(), 4);
}

#[test]
fn solve_example_with_poly_and_exact() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("example1.json");
    write_file(&example1_instance(), &inst).unwrap();
    let results = dir.path().join("results.csv");
    for model in ["poly", "exact", "pers-b", "sfm"] {
        let o = stieltjes(&[
            "solve",
            "--model",
            model,
            "--instance",
            inst.to_str().unwrap(),
            "-o",
            results.to_str().unwrap(),
        ]);
        assert!(
            o.status.success(),
            "{model}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let rows = csv_rows(&results);
    assert_eq!(rows.len(), 4);
    for row in &rows {
        assert_eq!(field(row, "instance_id"), "example1");
        assert_eq!(field(row, "status"), "optimal");
        let objective: f64 = field(row, "objective").parse().unwrap();
        assert!((objective + 9.2).abs() < 1e-9);
    }
    let poly = &rows[0];
    let bound: f64 = field(poly, "bound").parse().unwrap();
    let gap: f64 = field(poly, "rel_gap").parse().unwrap();
    assert!((bound + 9.2).abs() < 1e-4, "{bound}");
    assert!(gap <= 1e-6, "{gap}");
}

#[test]
fn solve_fans_out_and_keeps_failed_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = stieltjes(&[
        "gen",
        "--grid",
        "6",
        "--sigma2",
        "2",
        "--seeds",
        "1..3",
        "-o",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let mut files: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path().to_string_lossy().into_owned())
        .collect();
    files.sort();
    let broken = dir.path().join("broken.json");
    fs::write(&broken, "{ not json").unwrap();
    files.push(broken.to_string_lossy().into_owned());

    let results = dir.path().join("out.csv");
    let mut args = vec![
        "solve",
        "--model",
        "pers-c",
        "--jobs",
        "2",
        "-o",
        results.to_str().unwrap(),
        "--instance",
    ];
    args.extend(files.iter().map(String::as_str));
    let start = std::time::Instant::now();
    let o = stieltjes(&args);
    assert!(start.elapsed().as_secs_f64() < 30.0);
    assert_eq!(o.status.code(), Some(1));
    let rows = csv_rows(&results);
    assert_eq!(rows.len(), 4);
    for (row, file) in rows.iter().zip(&files) {
        let stem = Path::new(file).file_stem().unwrap().to_string_lossy();
        assert_eq!(field(row, "instance_id"), stem);
        assert_eq!(field(row, "model"), "pers-c");
    }
    assert_eq!(field(&rows[3], "status"), "failed");

    // appending again keeps a single header
    let o = stieltjes(&[
        "solve",
        "--model",
        "pers-c",
        "-o",
        results.to_str().unwrap(),
        "--instance",
        &files[0],
    ]);
    assert!(o.status.success());
    let text = fs::read_to_string(&results).unwrap();
    assert_eq!(text.matches("instance_id").count(), 1);
    assert_eq!(csv_rows(&results).len(), 5);
}

#[test]
fn solve_without_output_prints_csv() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("example1.json");
    write_file(&example1_instance(), &inst).unwrap();
    let o = stieltjes(&[
        "solve",
        "--model",
        "exact",
        "--instance",
        inst.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text
        .starts_with("instance_id,model,status,objective,bound,rel_gap,time_s,rounds,cuts_added"));
    assert!(text.contains("example1,exact,optimal"));
}

#[test]
fn verify_passes_and_catches_injected_fault() {
    let o = stieltjes(&["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).lines().all(|l| l.contains("PASS")));

    let o = stieltjes(&["verify", "--suite", "hull", "--n", "5"]);
    assert_eq!(o.status.code(), Some(0));

    let o = stieltjes(&[
        "verify",
        "--suite",
        "supermodular",
        "--trials",
        "20",
        "--inject-fault",
        "rho-sign",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("FAIL"));
    assert!(out.contains("\"suite\": \"supermodular\""));

    assert_eq!(
        stieltjes(&["verify", "--suite", "nope"]).status.code(),
        Some(2)
    );
}

#[test]
fn report_groups_and_averages() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let mut text =
        String::from("instance_id,model,status,objective,bound,rel_gap,time_s,rounds,cuts_added\n");
    for (s2, mu) in [("0.5", "0.25"), ("2", "0.12")] {
        for seed in 1..=5 {
            for (model, status) in [
                ("pers-c", "solved"),
                ("pers-b", "optimal"),
                ("poly", "optimal"),
            ] {
                let gap = if model == "pers-c" {
                    seed as f64 * 0.01
                } else {
                    0.0
                };
                text.push_str(&format!(
                    "grid6-sigma2-{s2}-mu-{mu}-k36-seed{seed},{model},{status},1,1,{gap},{seed},{seed},0\n"
                ));
            }
        }
    }
    fs::write(&path, text).unwrap();
    let table = dir.path().join("table.csv");
    let o = stieltjes(&[
        "report",
        path.to_str().unwrap(),
        "--csv",
        table.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 7);
    let rows: Vec<Vec<String>> = csv::Reader::from_path(&table)
        .unwrap()
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    assert_eq!(rows.len(), 6);
    // seeds 1..=5: mean time 3, mean pers-c gap 0.03
    assert_eq!(rows[0][..3], ["0.5", "pers-c", "5"]);
    assert_eq!(rows[0][3], "3.000");
    assert_eq!(rows[0][4], "3.00e-2");
    assert_eq!(rows[1][5], "5");
    assert_eq!(rows[5][..2], ["2", "poly"]);

    let empty = dir.path().join("empty.csv");
    fs::write(
        &empty,
        "instance_id,model,status,objective,bound,rel_gap,time_s,rounds,cuts_added\n",
    )
    .unwrap();
    let o = stieltjes(&["report", empty.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 1);
}
