use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use microevo::tensor_io::{read_json, read_sequences, read_tensor};
use serde_json::Value;

fn microevo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_microevo"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = microevo(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn code(args: &[&str]) -> i32 {
    microevo(args).status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn grain_growth_batch_shape_and_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        ok(&["simulate", "--kind", "grain-growth", "--count", "2", "--grid", "64", "--frames", "200", "--out", s(dir)]);
    }
    let (dims, _) = read_tensor(a.join("grain-growth.msev")).unwrap();
    assert_eq!(dims, [2, 200, 1, 64, 64]);
    let ta = fs::read(a.join("grain-growth.msev")).unwrap();
    assert_eq!(ta, fs::read(b.join("grain-growth.msev")).unwrap());

    let run: Value = read_json(a.join("run.json")).unwrap();
    assert_eq!(run["command"], "simulate");
    assert_eq!(run["config"]["grain_growth"]["n_grains"], 100);
    let manifest: Value = read_json(a.join("grain-growth.json")).unwrap();
    assert_eq!(manifest["sim_kind"], "grain-growth");
    assert_eq!(manifest["members"][1]["seed"], 1);

    let c = tmp.path().join("c");
    ok(&["simulate", "--from-manifest", s(&a.join("grain-growth.json")), "--out", s(&c)]);
    assert_eq!(ta, fs::read(c.join("grain-growth.msev")).unwrap());
}

#[test]
fn config_file_with_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("sim.json");
    fs::write(
        &cfg,
        r#"{"kind": "spinodal", "count": 3, "mix_c0": true,
            "spinodal": {"height": 12, "width": 10, "frames_to_record": 3, "frame_interval": 2.0}}"#,
    )
    .unwrap();
    let out = tmp.path().join("o");
    ok(&["--config", s(&cfg), "simulate", "--frames", "4", "--seed", "5", "--out", s(&out)]);
    let (dims, _) = read_tensor(out.join("spinodal.msev")).unwrap();
    assert_eq!(dims, [3, 4, 1, 12, 10]);
    let m: Value = read_json(out.join("spinodal.json")).unwrap();
    let seeds: Vec<u64> = m["members"].as_array().unwrap().iter().map(|x| x["seed"].as_u64().unwrap()).collect();
    assert_eq!(seeds, vec![5, 6, 7]);
    for member in m["members"].as_array().unwrap() {
        let c0 = member["c0"].as_f64().unwrap();
        assert!(c0 == 0.5 || (0.30..=0.40).contains(&c0));
    }
    let again = tmp.path().join("again");
    ok(&["simulate", "--from-manifest", s(&out.join("spinodal.json")), "--out", s(&again)]);
    assert_eq!(
        fs::read(out.join("spinodal.msev")).unwrap(),
        fs::read(again.join("spinodal.msev")).unwrap()
    );
}

#[test]
fn invalid_inputs_fail_before_writing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("never");

    let cfg = tmp.path().join("quench.json");
    fs::write(&cfg, r#"{"kind": "spinodal", "spinodal": {"omega": 0.2, "rt": 0.1}}"#).unwrap();
    let res = microevo(&["--config", s(&cfg), "simulate", "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("quench"));

    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"kind": "grain-growth", "n_grain": 5}"#).unwrap();
    assert_eq!(code(&["--config", s(&bad), "simulate", "--out", s(&out)]), 2);
    assert_eq!(code(&["simulate", "--bogus", "--out", s(&out)]), 2);
    assert_eq!(code(&["simulate", "--kind", "grain-growth", "--dt", "0.3", "--out", s(&out)]), 2);
    assert_eq!(code(&["simulate", "--kind", "grain-growth", "--mix-c0", "--out", s(&out)]), 2);
    assert!(!out.exists());

    let empty = tmp.path().join("empty");
    fs::create_dir(&empty).unwrap();
    assert_eq!(code(&["dataset", "--input", s(&empty), "--out", s(&out)]), 2);
    assert!(!out.exists());

    assert_eq!(code(&["score", "--pred", "/nonexistent/p.msev", "--truth", "/nonexistent/t.msev"]), 4);
}

fn small_trajectories(dir: &Path) {
    ok(&[
        "simulate", "--kind", "grain-growth", "--count", "12", "--grid", "16", "--n-grains", "6", "--frames", "30",
        "--stride", "2", "--out", s(dir),
    ]);
}

#[test]
fn dataset_baseline_score_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let traj = tmp.path().join("traj");
    small_trajectories(&traj);
    let data = tmp.path().join("data");
    let stdout = ok(&[
        "dataset", "--input", s(&traj), "--input-len", "5", "--output-len", "10", "--stride", "5",
        "--test-stride", "15", "--split-counts", "8,2,2", "--out", s(&data),
    ]);
    assert!(stdout.contains("train: 32 clips from 8 trajectories"), "{stdout}");
    assert!(stdout.contains("validation: 8 clips from 2 trajectories"), "{stdout}");
    assert!(stdout.contains("test: 4 clips from 2 trajectories"), "{stdout}");
    let manifest: Value = read_json(data.join("dataset.json")).unwrap();
    let train: Vec<String> = serde_json::from_value(manifest["splits"]["train"]["trajectories"].clone()).unwrap();
    let test: Vec<String> = serde_json::from_value(manifest["splits"]["test"]["trajectories"].clone()).unwrap();
    assert!(train.iter().all(|t| !test.contains(t)));

    // provenance reconstructs the source frames
    let (_, sources) = read_sequences(traj.join("grain-growth.msev")).unwrap();
    let (_, inputs) = read_sequences(data.join("train_inputs.msev")).unwrap();
    let prov = manifest["splits"]["train"]["provenance"].as_array().unwrap();
    for (clip, p) in inputs.iter().zip(prov) {
        let id = p["trajectory"].as_str().unwrap();
        let b: usize = id.rsplit('#').next().unwrap().parse().unwrap();
        let start = p["start"].as_u64().unwrap() as usize;
        assert_eq!(clip.as_slice(), &sources[b][start..start + 5]);
    }

    let base = tmp.path().join("base");
    ok(&["baseline", "--dataset", s(&data), "--split", "validation", "--out", s(&base)]);
    let (pd, _) = read_tensor(base.join("validation_persistence.msev")).unwrap();
    let (td, _) = read_tensor(data.join("validation_targets.msev")).unwrap();
    assert_eq!(pd, td);

    let scores = tmp.path().join("scores");
    ok(&[
        "score", "--pred", s(&base.join("validation_persistence.msev")), "--truth",
        s(&data.join("validation_targets.msev")), "--every", "3", "--csv", "--out", s(&scores),
    ]);
    let dataset: Value = read_json(scores.join("dataset_report.json")).unwrap();
    let frames: Vec<u64> = dataset["rmse"].as_array().unwrap().iter().map(|p| p[0].as_u64().unwrap()).collect();
    assert_eq!(frames, vec![0, 3, 6, 9]);
    let clips: Vec<Value> = (0..8)
        .map(|b| read_json(scores.join("clips").join(format!("clip_{b:04}.json"))).unwrap())
        .collect();
    for i in 0..frames.len() {
        let mean = clips.iter().map(|c| c["rmse"][i][1].as_f64().unwrap()).sum::<f64>() / 8.0;
        assert!((dataset["rmse"][i][1].as_f64().unwrap() - mean).abs() < 1e-12);
    }
    assert!(scores.join("dataset_report.csv").is_file());

    let same = tmp.path().join("same");
    let truth = data.join("validation_targets.msev");
    ok(&["score", "--pred", s(&truth), "--truth", s(&truth), "--out", s(&same)]);
    let r: Value = read_json(same.join("dataset_report.json")).unwrap();
    assert!(r["rmse"].as_array().unwrap().iter().all(|p| p[1].as_f64().unwrap() == 0.0));

    let mismatch = microevo(&[
        "score", "--pred", s(&data.join("train_targets.msev")), "--truth", s(&truth), "--out", s(&same),
    ]);
    assert_eq!(mismatch.status.code(), Some(2));
}

#[test]
fn overlapping_plan_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let traj = tmp.path().join("traj");
    small_trajectories(&traj);
    let cfg = tmp.path().join("plan.json");
    fs::write(
        &cfg,
        r#"{"plan": {"train": ["grain-growth#0", "grain-growth#1"], "test": ["grain-growth#1"]},
            "clip": {"input_len": 5, "output_len": 10, "stride": 5}}"#,
    )
    .unwrap();
    let out = tmp.path().join("out");
    let res = microevo(&["--config", s(&cfg), "dataset", "--input", s(&traj), "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("both"));
    assert!(!out.exists());
}

#[test]
fn static_truth_gives_zero_persistence_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("flat.json");
    fs::write(
        &cfg,
        r#"{"kind": "spinodal", "count": 2,
            "spinodal": {"height": 8, "width": 8, "noise_amp": 0.0, "frame_interval": 1.0, "frames_to_record": 20}}"#,
    )
    .unwrap();
    let traj = tmp.path().join("traj");
    ok(&["--config", s(&cfg), "simulate", "--out", s(&traj)]);
    let data = tmp.path().join("data");
    ok(&[
        "dataset", "--input", s(&traj), "--input-len", "4", "--output-len", "8", "--split-counts", "0,0,2",
        "--test-stride", "4", "--out", s(&data),
    ]);
    let base = tmp.path().join("base");
    ok(&["baseline", "--dataset", s(&data), "--out", s(&base)]);
    let scores = tmp.path().join("scores");
    ok(&[
        "score", "--pred", s(&base.join("test_persistence.msev")), "--truth", s(&data.join("test_targets.msev")),
        "--every", "1", "--out", s(&scores),
    ]);
    let r: Value = read_json(scores.join("dataset_report.json")).unwrap();
    assert_eq!(r["clips"], 6);
    assert!(r["rmse"].as_array().unwrap().iter().all(|p| p[1].as_f64().unwrap() == 0.0));
}

#[test]
fn render_selection() {
    let tmp = tempfile::tempdir().unwrap();
    let traj = tmp.path().join("traj");
    ok(&[
        "simulate", "--kind", "grain-growth", "--grid", "16", "--n-grains", "5", "--frames", "100", "--stride", "1",
        "--out", s(&traj),
    ]);
    let tensor = traj.join("grain-growth.msev");
    let img = tmp.path().join("img");
    ok(&["render", "--tensor", s(&tensor), "--frames", "11,25,50,75,100", "--clip-range", "0,0.6", "--out", s(&img)]);
    let mut names: Vec<String> = fs::read_dir(&img)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".pgm"))
        .collect();
    names.sort();
    assert_eq!(names, ["clip0_t011.pgm", "clip0_t025.pgm", "clip0_t050.pgm", "clip0_t075.pgm", "clip0_t100.pgm"]);
    let bytes = fs::read(img.join("clip0_t011.pgm")).unwrap();
    assert!(bytes.starts_with(b"P5\n16 16\n255\n"));
    let (_, seqs) = read_sequences(&tensor).unwrap();
    let expected = microevo::tensor_io::encode_pgm(&seqs[0][10], Some((0.0, 0.6)));
    assert_eq!(bytes, expected);

    let none = tmp.path().join("none");
    assert_eq!(code(&["render", "--tensor", s(&tensor), "--frames", "101", "--out", s(&none)]), 2);
    assert_eq!(code(&["render", "--tensor", s(&tensor), "--frames", "0", "--out", s(&none)]), 2);
    assert_eq!(code(&["render", "--tensor", s(&tensor), "--clips", "1", "--out", s(&none)]), 2);
    assert!(!none.exists());
}
