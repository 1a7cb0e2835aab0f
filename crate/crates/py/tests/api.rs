use stplan_py::api;

#[test]
fn preset_text_runs_and_reports_metrics() {
    let toml = api::preset("empty", 1, 0, 2.5, false).unwrap();
    let out = api::run_episode(&toml).unwrap();
    assert_eq!(out["metrics"]["success"], true);
    assert_eq!(out["metrics"]["collisions"], 0);
    assert!(out["trace"].as_array().is_some_and(|t| !t.is_empty()));
    assert!(api::preset("nope", 0, 0, 2.5, false).is_err());
    assert!(api::run_episode("sim_dt = 1").is_err());
}

#[test]
fn solve_instance_sides_agree() {
    for seed in 0..10 {
        let v = api::solve_instance(seed, 5, 3).unwrap();
        assert_eq!(v["bnb"]["feasible"], v["enumerate"]["feasible"]);
        if v["bnb"]["feasible"] == true {
            let (a, b) = (v["bnb"]["objective"].as_f64().unwrap(), v["enumerate"]["objective"].as_f64().unwrap());
            assert!((a - b).abs() <= 1e-6 * (1.0 + b.abs()), "seed {seed}: {a} vs {b}");
        }
    }
}

#[test]
fn trefoil_starts_on_its_curve() {
    let p = api::trefoil([0.0, 0.0, 2.0], 1.0, 1.0, 0.0, 0.0);
    let q = api::trefoil([0.0, 0.0, 2.0], 1.0, 1.0, 0.0, 1e-6);
    assert!(p.iter().zip(q).all(|(a, b)| (a - b).abs() < 1e-4));
}
