use std::path::Path;
use std::process::{Command, Output};

use asst::export::{parse_plane, parse_table};

fn asst(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asst")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn transform_writes_conventional_planes_into_new_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("nested/dir");
    let o = asst(&["transform", "--signal", "two-chirps", "--n", "256", "--sigma", "1", "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for stem in ["cwt_conventional", "sst1_conventional", "sst2_conventional"] {
        assert!(out.join(format!("{stem}.png")).exists());
        let plane = parse_plane(&read(out.join(format!("{stem}.csv")))).unwrap();
        assert_eq!(plane.times.len(), 256);
        assert_eq!(plane.meta.get("sigma"), Some("1"));
        assert_eq!(plane.meta.get("signal"), Some("two-chirps"));
    }
    assert!(!out.join("cwt_adaptive.csv").exists());
}

#[test]
fn transform_with_estimated_width_writes_adaptive_planes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = asst(&["transform", "--signal", "three-component", "--estimate-sigma", "--out", path(tmp.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for stem in ["cwt_adaptive", "sst1_adaptive", "sst2_adaptive", "sst2_conventional"] {
        assert!(tmp.path().join(format!("{stem}.csv")).exists(), "{stem}");
    }
    let track = parse_table(&read(tmp.path().join("sigma_track.csv"))).unwrap();
    assert_eq!(track.rows.len(), 512);
    let plane = parse_plane(&read(tmp.path().join("sst2_adaptive.csv"))).unwrap();
    assert_eq!(plane.meta.get("phase_rule"), Some("adaptive"));
}

#[test]
fn transform_accepts_a_supplied_track() {
    let tmp = tempfile::tempdir().unwrap();
    let track = tmp.path().join("track.csv");
    let body: String = (0..128).map(|n| format!("{}\n", 1.0 + n as f64 / 256.0)).collect();
    std::fs::write(&track, format!("sigma\n{body}")).unwrap();
    let o = asst(&[
        "transform", "--signal", "two-chirps", "--n", "128", "--sigma-track", path(&track), "--out", path(tmp.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(tmp.path().join("sst2_adaptive.csv").exists());

    std::fs::write(&track, "sigma\n1\n2\n").unwrap();
    let o = asst(&[
        "transform", "--signal", "two-chirps", "--n", "128", "--sigma-track", path(&track), "--out", path(tmp.path()),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn estimate_columns_depend_on_laws() {
    let tmp = tempfile::tempdir().unwrap();
    let o = asst(&["estimate", "--signal", "two-chirps", "--laws", "12,50;34,64", "--out", path(tmp.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = parse_table(&read(tmp.path().join("sigma_track.csv"))).unwrap();
    assert_eq!(t.columns, ["t", "sigma_u", "C", "sigma_est", "sigma1", "sigma2"]);
    assert_eq!(t.meta.get("laws"), Some("12,50;34,64"));
    let s = parse_table(&read(tmp.path().join("separability.csv"))).unwrap();
    assert_eq!(s.columns, ["b", "sigma1", "sigma2", "margin_1"]);

    let tmp = tempfile::tempdir().unwrap();
    let o = asst(&["estimate", "--signal", "two-chirps", "--out", path(tmp.path())]);
    assert!(o.status.success());
    let t = parse_table(&read(tmp.path().join("sigma_track.csv"))).unwrap();
    assert_eq!(t.columns, ["t", "sigma_u", "C", "sigma_est"]);
    assert!(!tmp.path().join("separability.csv").exists());
}

#[test]
fn malformed_laws_report_position() {
    let tmp = tempfile::tempdir().unwrap();
    let o = asst(&["estimate", "--signal", "two-chirps", "--laws", "12,50;x,64", "--out", path(tmp.path())]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("position 6"), "{err}");
}

#[test]
fn separate_three_component_writes_components_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let o = asst(&["separate", "--signal", "three-component", "--components", "3", "--band", "2", "--out", path(tmp.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for k in 1..=3 {
        let c = parse_table(&read(tmp.path().join(format!("component_{k}.csv")))).unwrap();
        assert_eq!(c.columns, ["t", "real", "imag", "ridge_Hz"]);
        assert_eq!(c.rows.len(), 512);
    }
    let r = parse_table(&read(tmp.path().join("report.csv"))).unwrap();
    assert_eq!(r.columns, ["component", "truth", "rmse", "if_error"]);
    assert_eq!(r.rows.len(), 3);
    assert_eq!(r.column("truth").unwrap(), [1.0, 2.0, 3.0]);
}

#[test]
fn separate_csv_input_without_truth_has_no_report() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("tone.csv");
    let n = 128;
    let body: String =
        (0..n).map(|k| format!("{}\n", (2.0 * std::f64::consts::PI * 30.0 * k as f64 / n as f64).cos())).collect();
    std::fs::write(&input, format!("# sample_rate={n}\n{body}")).unwrap();
    let out = tmp.path().join("out");
    let o = asst(&["separate", "--signal", path(&input), "--components", "3", "--band", "20", "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("warning: found 1 of 3"), "{err}");
    assert!(out.join("component_1.csv").exists());
    assert!(!out.join("component_2.csv").exists());
    assert!(!out.join("report.csv").exists());
}

#[test]
fn csv_input_needs_a_sample_rate() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("x.csv");
    std::fs::write(&input, "0\n1\n0\n-1\n").unwrap();
    let o = asst(&["estimate", "--signal", path(&input), "--out", path(tmp.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sample rate"));
}

#[test]
fn unwritable_output_is_a_computation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let o = asst(&["transform", "--signal", "two-chirps", "--n", "64", "--out", path(&blocker.join("sub"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["separate", "--signal", "two-chirps", "--components", "2", "--snr", "12", "--seed", "5", "--out"];
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        let mut v = args.to_vec();
        v.push(path(d));
        assert!(asst(&v).status.success());
    }
    for name in ["sigma_track.csv", "sst2_adaptive.csv", "component_1.csv", "component_2.csv", "report.csv"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
}
