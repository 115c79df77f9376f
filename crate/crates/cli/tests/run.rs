use hplane_cli::config::*;
use hplane_cli::io::{obj_string, parse_obj};
use hplane_cli::run::{run, REPORT_FILE};
use hplane_core::mesh::{flat_disk, geodesic_sphere};
use std::fs;

fn small(command: Command) -> RunConfig {
    let mut cfg = RunConfig::new(command);
    cfg.radii = vec![2.0, 2.5];
    cfg.curve.samples = 64;
    cfg.solver.init_edge_length = 0.25;
    cfg
}

fn files(dir: &std::path::Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    v.sort();
    v
}

#[test]
fn obj_round_trip() {
    for m in [flat_disk(1.0, 0.3).unwrap(), geodesic_sphere(1.0, 1, true).unwrap()] {
        let text = obj_string(&m);
        assert!(text.lines().any(|l| l.starts_with("f ")));
        let back = parse_obj(&text).unwrap();
        assert_eq!(back, m);
    }
    assert!(parse_obj("v 0 0\n").is_err());
    assert!(parse_obj("v 0 0 0\nf 0 1 2\n").is_err());
}

#[test]
fn exhaust_writes_stage_meshes_csv_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(Command::Exhaust);
    cfg.h = Some(0.4);
    let rep = run(&cfg, dir.path());
    assert_eq!(rep.exit_code, 0, "{:?}", rep.error);
    assert_eq!(files(dir.path()), vec!["diagnostics.csv", REPORT_FILE, "stage_1.obj", "stage_2.obj"]);
    let csv = fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    assert!(csv.starts_with("stage,radius,vertices"));
    assert_eq!(csv.lines().count(), 3);
    let report = fs::read_to_string(dir.path().join(REPORT_FILE)).unwrap();
    assert!(report.contains("exit_code = 0") && report.contains("[config]") && report.contains("hplane_core"), "{report}");
    let mesh = parse_obj(&fs::read_to_string(dir.path().join("stage_2.obj")).unwrap()).unwrap();
    assert!(mesh.num_vertices() > 100);
}

#[test]
fn verify_reports_every_check() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(Command::Verify);
    cfg.h = Some(0.2);
    let rep = run(&cfg, dir.path());
    let names: Vec<&str> = rep.checks.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(names, ["containment", "maximum_principle", "maximum_principle", "graph_near_infinity", "embedded"]);
    assert_eq!(rep.exit_code == 0, rep.checks.iter().all(|c| c.pass));
    assert!(rep.checks[..3].iter().all(|c| c.pass), "{:?}", rep.checks);
    // At r = 2.5 the boundary sits above the default collar height.
    let graph = &rep.checks[3];
    assert!(!graph.pass && graph.note.as_deref().unwrap().starts_with("inconclusive"));
    assert_eq!(rep.exit_code, 3);
}

#[test]
fn failures_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // Validation: missing h.
    let rep = run(&small(Command::Pair), dir.path());
    assert_eq!(rep.exit_code, 1);
    assert!(dir.path().join(REPORT_FILE).exists());
    // Solver failure: coaxial circles too far apart to span an annulus.
    let mut cfg = small(Command::Annulus);
    cfg.annulus.axis_distance = 0.3;
    cfg.annulus.half_height = 1.5;
    let rep = run(&cfg, dir.path());
    assert_eq!(rep.exit_code, 2, "{:?}", rep.error);
    assert!(rep.error.unwrap().contains("solver failure"));
}

#[test]
fn annulus_and_sweep_commands() {
    let dir = tempfile::tempdir().unwrap();
    let rep = run(&small(Command::Annulus), dir.path());
    assert_eq!(rep.exit_code, 0, "{:?}", rep.error);
    assert!(files(dir.path()).contains(&"annulus.obj".to_string()));
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(Command::Sweep);
    cfg.h_list = Some(vec![0.3, -0.3, 0.0]);
    let rep = run(&cfg, dir.path());
    assert_eq!(rep.exit_code, 0, "{:?}", rep.error);
    let leaves = fs::read_to_string(dir.path().join("leaves.csv")).unwrap();
    assert!(leaves.contains("0,-0.3,leaf_0.obj"), "{leaves}");
}

#[test]
fn binary_exit_codes_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_hplane");
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "command = \"exhaust\"\nh = 1.0\n").unwrap();
    let st = std::process::Command::new(bin).arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(st.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&st.stderr).contains("(-1, 1)"));
    fs::write(
        &cfg,
        "command = \"exhaust\"\nh = 0.2\nradii = [2.0]\n[curve]\nkind = \"circle\"\nsamples = 64\n[solver]\ninit_edge_length = 0.3\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let st = std::process::Command::new(bin)
        .args(["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "18446744073709551615", "--threads", "2"])
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(0), "{}", String::from_utf8_lossy(&st.stderr));
    let report = fs::read_to_string(out.join(REPORT_FILE)).unwrap();
    assert!(report.contains("seed = \"18446744073709551615\"") && report.contains("threads = 2"), "{report}");
    assert_eq!(files(dir.path()), vec!["out", "run.toml"]);
}
