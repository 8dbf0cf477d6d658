use std::path::Path;
use std::process::Command;

fn geofuse(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_geofuse")).args(args).output().unwrap()
}

fn code(args: &[&str]) -> i32 {
    geofuse(args).status.code().unwrap()
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

#[test]
fn stage_commands_chain_together() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = d.display().to_string();
    assert_eq!(code(&["synth", "--out", &out, "--hours", "120", "--seed", "3"]), 0);
    assert_eq!(
        code(&["fuse", "--stations", &p(d, "stations.csv"), "--observations", &p(d, "observations.csv"), "--out", &p(d, "fused.csv")]),
        0
    );
    assert_eq!(code(&["graph", "--stations", &p(d, "stations.csv"), "--out", &p(d, "adjacency.csv")]), 0);
    let train = [
        "train", "--fused", &p(d, "fused.csv"), "--adjacency", &p(d, "adjacency.csv"), "--model-out", &p(d, "model.ckpt"),
        "--history-out", &p(d, "history.csv"), "--epochs", "2", "--set", "predicted_target=pm25", "--set", "channels=4,2,4",
    ];
    assert_eq!(code(&train), 0);
    assert_eq!(
        code(&["predict", "--model", &p(d, "model.ckpt"), "--fused", &p(d, "fused.csv"), "--out", &p(d, "forecast.csv")]),
        0
    );
    let forecast = std::fs::read_to_string(d.join("forecast.csv")).unwrap();
    assert_eq!(forecast.lines().count(), 1 + 3 * 15);
    assert_eq!(
        code(&["evaluate", "--model", &p(d, "model.ckpt"), "--fused", &p(d, "fused.csv"), "--out", &p(d, "metrics.csv")]),
        0
    );
    assert!(std::fs::read_to_string(d.join("metrics.csv")).unwrap().contains("persistence"));
    assert_eq!(
        code(&["report", "--stations", &p(d, "stations.csv"), "--raw", &p(d, "observations.csv"), "--fused", &p(d, "fused.csv"), "--out", &p(d, "report")]),
        0
    );
    for f in ["variance.csv", "kde_pm25.csv", "overlay_temp.csv"] {
        assert!(d.join("report").join(f).exists(), "{f}");
    }
    let history = std::fs::read_to_string(d.join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 3);
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "flavour = mint\n").unwrap();
    assert_eq!(code(&["run-all", "--config", &cfg.display().to_string()]), 2);
    assert_eq!(code(&["run-all"]), 2);
    assert_eq!(code(&["fuse", "--stations", "x", "--observations", "y", "--out", "z", "--shape-c", "-1"]), 2);
}

#[test]
fn missing_input_exits_three() {
    assert_eq!(code(&["fuse", "--stations", "/nonexistent/s.csv", "--observations", "/nonexistent/o.csv", "--out", "/tmp/x.csv"]), 3);
}

#[test]
fn unfusable_step_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("stations.csv"), "station_id,source_id,x,y,targets\na,m,0,0,t\nb,m,1,0,t\n").unwrap();
    std::fs::write(
        d.join("observations.csv"),
        "timestamp,station_id,target_id,value\n2020-01-01T00:00:00,a,t,\n2020-01-01T00:00:00,b,t,\n",
    )
    .unwrap();
    assert_eq!(
        code(&["fuse", "--stations", &p(d, "stations.csv"), "--observations", &p(d, "observations.csv"), "--out", &p(d, "f.csv")]),
        4
    );
}

#[test]
fn bad_adjacency_exits_five() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = d.display().to_string();
    assert_eq!(code(&["synth", "--out", &out, "--hours", "40"]), 0);
    assert_eq!(
        code(&["fuse", "--stations", &p(d, "stations.csv"), "--observations", &p(d, "observations.csv"), "--out", &p(d, "fused.csv")]),
        0
    );
    std::fs::write(d.join("adjacency.csv"), "station_id,a,b\na,0,1\nb,0.5,0\n").unwrap();
    let c = code(&[
        "train", "--fused", &p(d, "fused.csv"), "--adjacency", &p(d, "adjacency.csv"), "--model-out", &p(d, "m.ckpt"),
        "--set", "predicted_target=pm25",
    ]);
    assert_eq!(c, 5);
}
