use std::path::PathBuf;
use std::process::Command;

fn out_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("arrayscat-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn arrayscat(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_arrayscat")).args(args).output().unwrap()
}

#[test]
fn bands_writes_csv_with_provenance() {
    let dir = out_dir("bands");
    let out = arrayscat(&["bands", "--set", "q_grid=16", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("bands.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("# arrayscat "));
    assert_eq!(lines[1], "# command: bands");
    assert!(lines[2].starts_with("# config_sha256: ") && lines[2].len() == 17 + 64);
    assert_eq!(lines[4], "qx,qy,delta2,domain");
    assert_eq!(lines.len(), 5 + 16 * 16);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("critical_points.json")).unwrap()).unwrap();
    assert!(report["data"]["points"].as_array().is_some_and(|p| !p.is_empty()));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn json_format_switch() {
    let dir = out_dir("json");
    let out = arrayscat(&["bands", "--set", "q_grid=8", "--format", "json", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("bands.json")).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 64);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = out_dir("bad");
    let d = dir.to_str().unwrap();
    for args in [
        vec!["smatrix", "--set", "energy_window.n_points=0", "--out", d],
        vec!["bands", "--set", "no_such_key=1", "--out", d],
        vec!["bands", "--set", "lattice.spacing_d=-1", "--out", d],
    ] {
        let out = arrayscat(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert!(!dir.exists());
}

#[test]
fn smatrix_rows_follow_the_window() {
    let dir = out_dir("smatrix");
    let out = arrayscat(&[
        "smatrix",
        "--set",
        "energy_window={\"lo\":2.3,\"hi\":2.4,\"n_points\":2}",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("smatrix.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(5).collect();
    assert_eq!(rows.len(), 2);
    std::fs::remove_dir_all(dir).unwrap();
}
