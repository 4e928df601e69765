use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_dronesurvey");

fn demo(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../demo")
        .join(name)
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Run {
    let out = Command::new(BIN)
        .args(args)
        .env_remove("DRONESURVEY_OUT_DIR")
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

/// A design file with 40 transects covering 0.76 km² in total.
fn survey_design(dir: &Path) -> PathBuf {
    let features: Vec<Value> = (1..=40)
        .map(|k| {
            serde_json::json!({
                "type": "Feature",
                "properties": {"transect_id": format!("T{k}"), "covered_area_km2": 0.019},
                "geometry": {"type": "LineString", "coordinates": [[0.0, 350.0 * k as f64], [350.0, 350.0 * k as f64]]},
            })
        })
        .collect();
    let doc = serde_json::json!({"type": "FeatureCollection", "features": features});
    write(dir, "design.geojson", &doc.to_string())
}

/// 21 animals on 9 of the transects.
fn survey_sightings(dir: &Path) -> PathBuf {
    let mut s = String::from("transect_id,species,count,x_m,y_m,timestamp,observer\n");
    for (t, n) in [
        (2, 5),
        (5, 3),
        (9, 3),
        (14, 2),
        (17, 2),
        (23, 2),
        (28, 2),
        (31, 1),
        (38, 1),
    ] {
        s += &format!(
            "T{t},roe_deer,{n},100,{},2024-10-26T07:30:00Z,obs_A\n",
            350 * t
        );
    }
    s += "T3,red_fox,1,100,1050,2024-10-26T07:31:00Z,obs_A\n";
    write(dir, "sightings.csv", &s)
}

#[test]
fn plan_hits_target_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let r = run(&[
            "plan",
            "--region",
            p(&demo("region.geojson")),
            "--launch-points",
            p(&demo("launch_points.csv")),
            "--target-coverage",
            "17",
            "--seed",
            "11",
            "--out",
            p(out),
        ]);
        assert_eq!(r.code, 0, "{}", r.stderr);
    }
    let s = json(&a.join("design_summary.json"));
    let f = s["covered_fraction"].as_f64().unwrap();
    assert!((0.16..=0.19).contains(&f), "{f}");
    for name in ["design.geojson", "design_summary.json"] {
        assert_eq!(
            std::fs::read(a.join(name)).unwrap(),
            std::fs::read(b.join(name)).unwrap()
        );
    }
    let d = json(&a.join("design.geojson"));
    let props = &d["features"][0]["properties"];
    for k in [
        "flight_id",
        "order_in_flight",
        "heading",
        "swath_width_m",
        "covered_area_km2",
    ] {
        assert!(props.get(k).is_some(), "{k}");
    }
}

#[test]
fn plan_zero_target_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(&[
        "plan",
        "--region",
        p(&demo("region.geojson")),
        "--launch-points",
        p(&demo("launch_points.csv")),
        "--target-coverage",
        "0",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let d = json(&dir.path().join("design.geojson"));
    assert_eq!(d["features"].as_array().unwrap().len(), 0);
}

#[test]
fn plan_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let far = write(dir.path(), "far.csv", "x_m,y_m\n0,0\n");
    let r = run(&[
        "plan",
        "--region",
        p(&demo("region.geojson")),
        "--launch-points",
        p(&far),
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(r.code, 3, "{}", r.stderr);
    let lonlat = write(
        dir.path(),
        "lonlat.geojson",
        r#"{"type":"Feature","properties":{"crs_note":"WGS84"},"geometry":{"type":"Polygon","coordinates":[[[15.1,47.2],[15.2,47.2],[15.2,47.3],[15.1,47.2]]]}}"#,
    );
    let r = run(&[
        "plan",
        "--region",
        p(&lonlat),
        "--launch-points",
        p(&far),
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("longitude"), "{}", r.stderr);
    let tiny = write(
        dir.path(),
        "tiny.geojson",
        r#"{"type":"Feature","properties":{"crs_note":"m"},"geometry":{"type":"Polygon","coordinates":[[[1000,1000],[1200,1000],[1200,1200],[1000,1200],[1000,1000]]]}}"#,
    );
    let r = run(&[
        "plan",
        "--region",
        p(&tiny),
        "--launch-points",
        p(&far),
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(r.code, 3, "{}", r.stderr);
    let r = run(&[
        "plan",
        "--region",
        p(&demo("region.geojson")),
        "--launch-points",
        p(&demo("launch_points.csv")),
        "--transect-length",
        "300",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(r.code, 2);
    let r = run(&[
        "plan",
        "--region",
        p(&dir.path().join("missing.geojson")),
        "--launch-points",
        p(&far),
    ]);
    assert_eq!(r.code, 2);
}

#[test]
fn estimate_naive_matches_division() {
    let dir = tempfile::tempdir().unwrap();
    let design = survey_design(dir.path());
    let sightings = survey_sightings(dir.path());
    let r = run(&[
        "estimate",
        "--design",
        p(&design),
        "--sightings",
        p(&sightings),
        "--species",
        "roe_deer",
        "--method",
        "naive",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let e = json(&dir.path().join("estimates.json"));
    let d = e[0]["density_per_km2"].as_f64().unwrap();
    assert!((d - 21.0 / 0.76).abs() < 1e-9);
    assert!((d - 27.63).abs() < 0.005);
    assert!(r.stdout.contains("zero fraction 77.5%"), "{}", r.stdout);
}

#[test]
fn estimate_all_emits_three_rows() {
    let dir = tempfile::tempdir().unwrap();
    let design = survey_design(dir.path());
    let sightings = survey_sightings(dir.path());
    let r = run(&[
        "estimate",
        "--design",
        p(&design),
        "--sightings",
        p(&sightings),
        "--species",
        "roe_deer",
        "--method",
        "all",
        "--seed",
        "4",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let csv = std::fs::read_to_string(dir.path().join("estimates.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let methods: Vec<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(methods, ["naive", "bootstrap", "zinb"]);
}

#[test]
fn estimate_empty_sightings() {
    let dir = tempfile::tempdir().unwrap();
    let design = survey_design(dir.path());
    let empty = write(
        dir.path(),
        "empty.csv",
        "transect_id,species,count,x_m,y_m,timestamp,observer\n",
    );
    let r = run(&[
        "estimate",
        "--design",
        p(&design),
        "--sightings",
        p(&empty),
        "--method",
        "naive",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(
        json(&dir.path().join("estimates.json"))[0]["density_per_km2"],
        0.0
    );
    // ZINB cannot be fitted to all-zero data; the other methods are still written.
    let r = run(&[
        "estimate",
        "--design",
        p(&design),
        "--sightings",
        p(&empty),
        "--method",
        "all",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(r.code, 4, "{}", r.stderr);
    assert_eq!(
        json(&dir.path().join("estimates.json"))
            .as_array()
            .unwrap()
            .len(),
        2
    );
}

#[test]
fn estimate_unknown_transect_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let design = survey_design(dir.path());
    let bad = write(
        dir.path(),
        "bad.csv",
        "transect_id,species,count,x_m,y_m,timestamp,observer\nT99,roe_deer,1,0,0,2024-10-26T07:30:00Z,a\n",
    );
    let r = run(&[
        "estimate",
        "--design",
        p(&design),
        "--sightings",
        p(&bad),
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("T99"), "{}", r.stderr);
}

fn rem_files(dir: &Path, encounters: usize) -> (PathBuf, PathBuf, PathBuf) {
    let mut deps = String::from(
        "camera_id,x_m,y_m,start,end,detection_radius_m,detection_angle_rad,mount_height_m\n",
    );
    for k in 0..22 {
        deps += &format!(
            "CT{k:02},{},{},2024-10-01T00:00:00Z,2024-10-31T00:00:00Z,10,0.7,0.5\n",
            350 * k,
            0
        );
    }
    let mut seqs = String::from("camera_id,start,end,group_size\n");
    for k in 0..encounters {
        let day = 1 + k % 28;
        seqs += &format!(
            "CT{:02},2024-10-{day:02}T03:00:00Z,2024-10-{day:02}T03:00:40Z,1\n",
            k % 22
        );
    }
    let params = "day_range_km_per_day = 1.0\ndetection_radius_km = 0.01\ndetection_angle_rad = 0.7\nuse_group_size = false\n";
    (
        write(dir, "deployments.csv", &deps),
        write(dir, "sequences.csv", &seqs),
        write(dir, "params.txt", params),
    )
}

#[test]
fn rem_formula_and_adequacy() {
    let dir = tempfile::tempdir().unwrap();
    for (y, verdict) in [(113, "adequate"), (40, "marginal"), (0, "inadequate")] {
        let (d, s, params) = rem_files(dir.path(), y);
        let r = run(&[
            "rem",
            "--deployments",
            p(&d),
            "--sequences",
            p(&s),
            "--params",
            p(&params),
            "--out",
            p(dir.path()),
        ]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        assert!(
            r.stdout.contains(&format!("adequacy {verdict}")),
            "{}",
            r.stdout
        );
        let e = json(&dir.path().join("rem_estimate.json"));
        let expect = y as f64 / 660.0 * std::f64::consts::PI / (1.0 * 0.01 * 2.7);
        assert!((e["density_per_km2"].as_f64().unwrap() - expect).abs() < 1e-9);
        if y == 113 {
            assert!((expect - 19.92).abs() < 0.005);
        }
        if y == 0 {
            assert!(
                r.stderr.contains("inadequate") || r.stderr.contains("no encounters"),
                "{}",
                r.stderr
            );
        }
    }
}

#[test]
fn rem_missing_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let (d, s, _) = rem_files(dir.path(), 5);
    let params = write(
        dir.path(),
        "p.txt",
        "day_range_km_per_day = 1.0\ndetection_angle_rad = 0.7\nuse_group_size = false\n",
    );
    let r = run(&[
        "rem",
        "--deployments",
        p(&d),
        "--sequences",
        p(&s),
        "--params",
        p(&params),
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("detection_radius_km"), "{}", r.stderr);
}

fn densities(dir: &Path, rows: &[(&str, &str, f64)]) -> PathBuf {
    let mut s = String::from("survey_unit,method,density\n");
    for (u, m, d) in rows {
        s += &format!("{u},{m},{d}\n");
    }
    write(dir, "densities.csv", &s)
}

fn full_table() -> Vec<(&'static str, &'static str, f64)> {
    let units = ["A_Oct", "A_Nov", "B_Oct", "B_Nov", "C_Oct", "C_Nov"];
    let methods = ["rem", "naive", "bootstrap", "zinb"];
    let mut rows = Vec::new();
    for (i, u) in units.iter().enumerate() {
        for (j, m) in methods.iter().enumerate() {
            rows.push((
                *u,
                *m,
                20.0 + 3.0 * i as f64 + 5.0 * j as f64 + ((i * 7 + j * 3) % 5) as f64,
            ));
        }
    }
    rows
}

#[test]
fn compare_balanced_table() {
    let dir = tempfile::tempdir().unwrap();
    let f = densities(dir.path(), &full_table());
    let r = run(&["compare", "--densities", p(&f), "--out", p(dir.path())]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let a = json(&dir.path().join("anova.json"));
    let df: Vec<u64> = a["terms"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["df"].as_u64().unwrap())
        .collect();
    assert_eq!(df, [3, 5]);
    assert_eq!(a["residual_df"], 15);
    let t = json(&dir.path().join("tukey.json"));
    assert_eq!(t["pairs"].as_array().unwrap().len(), 6);
    assert!(dir.path().join("anova.txt").exists() && dir.path().join("tukey.txt").exists());
}

#[test]
fn compare_error_paths() {
    let dir = tempfile::tempdir().unwrap();
    let mut rows = full_table();
    rows.retain(|r| !(r.0 == "B_Nov" && r.1 == "zinb"));
    let f = densities(dir.path(), &rows);
    let r = run(&["compare", "--densities", p(&f), "--out", p(dir.path())]);
    assert_eq!(r.code, 2);
    assert!(
        r.stderr.contains("B_Nov") && r.stderr.contains("zinb"),
        "{}",
        r.stderr
    );
    let flat: Vec<_> = full_table()
        .into_iter()
        .map(|(u, m, _)| (u, m, 25.0))
        .collect();
    let f = densities(dir.path(), &flat);
    let r = run(&["compare", "--densities", p(&f), "--out", p(dir.path())]);
    assert_eq!(r.code, 4, "{}", r.stderr);
}

#[test]
fn simulate_example_config() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let start = std::time::Instant::now();
    let r = run(&[
        "simulate",
        "--config",
        p(&demo("simulate_drone.conf")),
        "--out",
        p(&a),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(start.elapsed().as_secs() < 60);
    let r = run(&[
        "simulate",
        "--config",
        p(&demo("simulate_drone.conf")),
        "--out",
        p(&b),
    ]);
    assert_eq!(r.code, 0);
    assert_eq!(
        std::fs::read(a.join("report.json")).unwrap(),
        std::fs::read(b.join("report.json")).unwrap()
    );
    let rep = json(&a.join("report.json"));
    assert!(rep["ci_coverage"].as_f64().is_some());

    // The simulated files flow through the estimate command unchanged.
    let r = run(&[
        "estimate",
        "--design",
        p(&a.join("design.geojson")),
        "--sightings",
        p(&a.join("sightings.csv")),
        "--method",
        "naive",
        "--out",
        p(&a),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let counts = std::fs::read_to_string(a.join("transect_counts.csv")).unwrap();
    let total: u64 = counts
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap())
        .sum();
    let sightings = std::fs::read_to_string(a.join("sightings.csv"))
        .unwrap()
        .lines()
        .count() as u64
        - 1;
    assert_eq!(total, sightings);
}

#[test]
fn simulate_single_replicate_marks_coverage_na() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(demo("simulate_drone.conf")).unwrap();
    let text = text.replace("replicates = 100", "replicates = 1").replace(
        "region.file = region.geojson",
        &format!("region.file = {}", p(&demo("region.geojson"))),
    );
    let conf = write(dir.path(), "one.conf", &text);
    let r = run(&["simulate", "--config", p(&conf), "--out", p(dir.path())]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = json(&dir.path().join("report.json"));
    assert_eq!(rep["ci_coverage"], "n/a");
    assert!(rep["relative_bias"].as_f64().is_some());
}

#[test]
fn simulated_camera_data_reproduces_replicate_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write(
        dir.path(),
        "cam.conf",
        "seed = 3\nreplicates = 2\nregion.width_m = 1600\nregion.height_m = 1200\nworld.true_density = 20\n\
         survey = camera\ncamera.count = 6\ncamera.spacing_m = 400\ncamera.duration_days = 4\n\
         camera.detection_radius_m = 10\ncamera.detection_angle_rad = 0.7\nmovement.speed_km_per_day = 1\n\
         rem.day_range_km_per_day = 1\nrem.detection_radius_km = 0.01\nrem.detection_angle_rad = 0.7\n\
         rem.use_group_size = false\n",
    );
    let r = run(&["simulate", "--config", p(&conf), "--out", p(dir.path())]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let r = run(&[
        "rem",
        "--deployments",
        p(&dir.path().join("deployments.csv")),
        "--sequences",
        p(&dir.path().join("sequences.csv")),
        "--params",
        p(&dir.path().join("rem_params.txt")),
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = json(&dir.path().join("report.json"));
    let est = json(&dir.path().join("rem_estimate.json"));
    assert_eq!(rep["estimates"][0], est["density_per_km2"]);
}

#[test]
fn simulate_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write(
        dir.path(),
        "bad.conf",
        "seed = 1\nworld.true_density = -3\nregion.width_m = 1000\nregion.height_m = 1000\n",
    );
    assert_eq!(
        run(&["simulate", "--config", p(&conf), "--out", p(dir.path())]).code,
        2
    );
}

fn plot_input(dir: &Path) -> PathBuf {
    let mut s =
        String::from("survey_unit,method,density_per_km2,se,ci_low,ci_high,n_units,diagnostics\n");
    for (u, _, _) in full_table().iter().step_by(4) {
        s += &format!("{u},rem,20.5,2,16.5,24.5,22,\n{u},naive,30,,,,40,\n{u},bootstrap,30.4,4,22,38.5,40,\n{u},zinb,31,5,21,41,40,\n");
    }
    write(dir, "est.csv", &s)
}

#[test]
fn plot_groups_and_formats() {
    let dir = tempfile::tempdir().unwrap();
    let input = plot_input(dir.path());
    let svg = dir.path().join("fig.svg");
    let csv = dir.path().join("fig.csv");
    assert_eq!(
        run(&["plot", "--estimates", p(&input), "--out", p(&svg)]).code,
        0
    );
    assert_eq!(
        run(&["plot", "--estimates", p(&input), "--out", p(&csv)]).code,
        0
    );
    let svg = std::fs::read_to_string(svg).unwrap();
    assert_eq!(svg.matches(r#"class="bar""#).count(), 24);
    assert_eq!(svg.matches(r#"class="unit""#).count(), 6);
    // Naive bars carry no whiskers.
    assert_eq!(svg.matches(r#"class="whisker""#).count(), 18);
    // Every number in the CSV is the one drawn in the SVG.
    let drawn: Vec<String> = svg
        .split("data-density=\"")
        .skip(1)
        .map(|s| s.split('"').next().unwrap().to_string())
        .collect();
    let table = std::fs::read_to_string(csv).unwrap();
    let listed: Vec<String> = table
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().to_string())
        .collect();
    assert_eq!(drawn, listed);
}

#[test]
fn plot_single_and_malformed() {
    let dir = tempfile::tempdir().unwrap();
    let one = write(
        dir.path(),
        "one.json",
        r#"{"method":"naive","density_per_km2":27.6,"se":null,"ci_low":null,"ci_high":null,"n_units":40,"diagnostics":{}}"#,
    );
    let out = dir.path().join("one.svg");
    assert_eq!(
        run(&["plot", "--estimates", p(&one), "--out", p(&out)]).code,
        0
    );
    let svg = std::fs::read_to_string(out).unwrap();
    assert_eq!(svg.matches(r#"class="bar""#).count(), 1);
    assert!(!svg.contains("whisker"));
    let bad = write(dir.path(), "bad.csv", "method,density_per_km2\nnaive,abc\n");
    assert_eq!(
        run(&[
            "plot",
            "--estimates",
            p(&bad),
            "--out",
            p(&dir.path().join("x.svg"))
        ])
        .code,
        2
    );
    assert_eq!(
        run(&[
            "plot",
            "--estimates",
            p(&one),
            "--out",
            p(&dir.path().join("x.png"))
        ])
        .code,
        2
    );
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(BIN)
        .args([
            "plan",
            "--region",
            p(&demo("region.geojson")),
            "--launch-points",
            p(&demo("launch_points.csv")),
            "-q",
        ])
        .env("DRONESURVEY_OUT_DIR", dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.path().join("design_summary.json").exists());
}

#[test]
fn usage_errors_are_exit_2() {
    assert_eq!(run(&["estimate"]).code, 2);
    assert_eq!(run(&["frobnicate"]).code, 2);
    assert_eq!(run(&["--help"]).code, 0);
}
