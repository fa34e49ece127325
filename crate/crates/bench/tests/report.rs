use mhdmg::{coarsest, observed_orders, RunConfig, RunReport, SolveRecord, StepRecord};

fn solve(mean_of: &[usize]) -> SolveRecord {
    SolveRecord {
        mesh: 60,
        coarse: 15,
        levels: 3,
        variant: "coupled".into(),
        re: 16.0,
        rem: 4.0,
        newton_steps: mean_of.len(),
        linear: mean_of.to_vec(),
        wall_seconds: 0.1,
        failure: None,
    }
}

#[test]
fn empty_report_is_header_only() {
    let csv = RunReport::Steps(Vec::new()).to_csv_string();
    assert_eq!(csv.lines().count(), 1);
    assert!(csv.starts_with("step,t,newton_steps"));
}

#[test]
fn mean_is_total_over_newton_steps() {
    let r = solve(&[6, 7, 6]);
    assert_eq!(r.total_linear(), 19);
    assert!((r.mean_linear() - 19.0 / 3.0).abs() < 1e-15);
    assert_eq!(r.ha(), 8.0);
    assert_eq!(solve(&[]).mean_linear(), 0.0);
}

#[test]
fn csv_is_deterministic_and_round_trips_floats() {
    let step = StepRecord {
        step: 1,
        t: 0.1,
        newton_steps: 2,
        max_newton_per_solve: 2,
        linear_iterations: 5,
        fluid_cfl: 1.0 / 3.0,
        alfven_cfl: std::f64::consts::PI,
        reconnection_rate: -1e-300,
        drift: 0.0,
        wall_seconds: 1.5,
    };
    let report = RunReport::Steps(vec![step.clone()]);
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    mhdmg::emit_csv(&report, &a).unwrap();
    mhdmg::emit_csv(&report, &b).unwrap();
    let text = std::fs::read(&a).unwrap();
    assert_eq!(text, std::fs::read(&b).unwrap());
    let text = String::from_utf8(text).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let parsed: Vec<f64> = [1, 5, 6, 7].iter().map(|&i| row[i].parse().unwrap()).collect();
    assert_eq!(parsed, vec![step.t, step.fluid_cfl, step.alfven_cfl, step.reconnection_rate]);
    // 17 significant digits
    assert_eq!(row[5], "3.3333333333333331e-1");
}

#[test]
fn solve_rows_record_status() {
    let mut bad = solve(&[200]);
    bad.failure = Some("linear solver stalled".into());
    let csv = RunReport::Solves(vec![solve(&[6, 7]), bad]).to_csv_string();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[1].ends_with(",ok"));
    assert!(lines[1].contains(",6;7,"));
    assert!(lines[2].ends_with(",linear solver stalled"));
}

#[test]
fn observed_orders_of_a_power_law() {
    let h = [0.5, 0.25, 0.125];
    let e: Vec<f64> = h.iter().map(|h: &f64| 3.0 * h.powi(3)).collect();
    for o in observed_orders(&h, &e) {
        assert!((o - 3.0).abs() < 1e-12);
    }
}

#[test]
fn config_file_overrides_flags() {
    let flags = RunConfig { mesh: Some(40), re: Some(4.0), variant: Some("purist".into()), ..Default::default() };
    let file = RunConfig::from_toml("mesh = 80\ncycle = [3, 3]\n").unwrap();
    let cfg = flags.overridden_by(&file);
    assert_eq!(cfg.mesh, Some(80));
    assert_eq!(cfg.cycle, Some([3, 3]));
    assert_eq!(cfg.re, Some(4.0));
    assert_eq!(cfg.variant.as_deref(), Some("purist"));
}

#[test]
fn config_rejects_unknown_keys_and_bad_variants() {
    assert!(RunConfig::from_toml("mesh = 8\nsmoother = \"jacobi\"\n").is_err());
    let cfg = RunConfig::from_toml("variant = \"nonsense\"").unwrap();
    assert!(cfg.variants(&[]).is_err());
    let all = RunConfig::from_toml("variant = \"all\"").unwrap();
    assert_eq!(all.variants(&[]).unwrap().len(), 3);
}

#[test]
fn coarsest_grid_arithmetic() {
    assert_eq!(coarsest(120, 4).unwrap(), 15);
    assert_eq!(coarsest(80, 3).unwrap(), 20);
    assert!(coarsest(120, 5).is_err());
    assert!(coarsest(8, 0).is_err());
}
