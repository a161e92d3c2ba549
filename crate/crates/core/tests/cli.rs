mod common;

use std::fs;

use common::{birthweight, data_path, prostate, run_cli, run_trace};
use stepgate::cli::{PerturbReport, EXIT_COMPUTE, EXIT_OK, EXIT_USAGE};
use stepgate::{SimReport, StepTrace};

#[test]
fn select_prostate_l2() {
    let t = run_trace(&["select", "--manifest", &prostate(), "--method", "l2", "--alpha", "0.05"]);
    assert_eq!(t.selected, ["lcavol", "lweight", "svi"]);
    // selection stops at the first failure, which is still recorded
    assert_eq!(t.evaluations.len(), 4);
    assert_eq!(t.evaluations[3].chosen_covariate, "lbph");
    assert!(!t.evaluations[3].included);
}

#[test]
fn rank_lists_every_covariate() {
    let t = run_trace(&["rank", "--manifest", &prostate(), "--method", "l2"]);
    assert_eq!(t.evaluations.len(), 8);
    assert_eq!(t.evaluations[7].chosen_covariate, "gleason");
    let ks: Vec<usize> = t.evaluations.iter().map(|e| e.k0).collect();
    assert_eq!(ks, [8, 7, 6, 5, 4, 3, 2, 1]);
}

#[test]
fn table_and_json_agree() {
    let m = prostate();
    for method in ["l2", "m"] {
        let (code, table, _) = run_cli(&["rank", "--manifest", &m, "--method", method]);
        assert_eq!(code, EXIT_OK);
        let t = run_trace(&["rank", "--manifest", &m, "--method", method]);
        let rows: Vec<&str> = table.lines().filter(|l| l.trim_start().starts_with(char::is_numeric)).collect();
        assert_eq!(rows.len(), t.evaluations.len());
        for (row, e) in rows.iter().zip(&t.evaluations) {
            let fields: Vec<&str> = row.split_whitespace().collect();
            assert_eq!(fields[1], e.chosen_covariate);
            assert_eq!(fields[2], e.k0.to_string());
            assert_eq!(fields[3], format!("{:.4}", e.statistic));
            assert_eq!(fields[4], format!("{:.4}", e.p_value));
        }
    }
}

#[test]
fn json_round_trips() {
    let (_, out, _) = run_cli(&["rank", "--manifest", &prostate(), "--method", "m", "--format", "json"]);
    let t: StepTrace = serde_json::from_str(&out).unwrap();
    assert_eq!(serde_json::to_string_pretty(&t).unwrap().trim(), out.trim());

    let (_, out, _) = run_cli(&["perturb", "--manifest", &prostate(), "--perturb", "1=10", "--format", "json"]);
    let r: PerturbReport = serde_json::from_str(&out).unwrap();
    assert_eq!(serde_json::to_string_pretty(&r).unwrap().trim(), out.trim());
    assert_eq!(r.index, 1);

    let (_, out, _) = run_cli(&["simulate", "--n", "40", "--k", "3", "--reps", "20", "--format", "json"]);
    let s: SimReport = serde_json::from_str(&out).unwrap();
    assert_eq!(serde_json::to_string_pretty(&s).unwrap().trim(), out.trim());
}

#[test]
fn perturb_to_same_value_changes_nothing() {
    let (code, out, _) =
        run_cli(&["perturb", "--manifest", &prostate(), "--perturb", "1=-0.43078", "--format", "json"]);
    assert_eq!(code, EXIT_OK);
    let r: PerturbReport = serde_json::from_str(&out).unwrap();
    assert_eq!(r.before, r.after);
    assert!(r.order_diff.is_empty());
}

#[test]
fn perturb_l2_order() {
    let (_, out, _) = run_cli(&["perturb", "--manifest", &prostate(), "--perturb", "1=10", "--format", "json"]);
    let r: PerturbReport = serde_json::from_str(&out).unwrap();
    assert_eq!(r.after.order(), ["lcavol", "svi", "age", "lbph", "lweight", "pgg45", "lcp", "gleason"]);
    assert_eq!(r.after.selected, ["lcavol"]);
}

#[test]
fn birthweight_select() {
    let t = run_trace(&["select", "--manifest", &birthweight(), "--alpha", "0.05"]);
    assert_eq!(t.selected, ["ui", "Race-2", "smoke"]);
}

#[test]
fn simulate_is_deterministic() {
    let args = [
        "simulate",
        "--experiment",
        "null",
        "--n",
        "50",
        "--k",
        "5",
        "--reps",
        "200",
        "--seed",
        "7",
        "--format",
        "json",
    ];
    let (c1, a, _) = run_cli(&args);
    let (c2, b, _) = run_cli(&args);
    assert_eq!((c1, c2), (EXIT_OK, EXIT_OK));
    assert_eq!(a, b);
    let (_, other, _) =
        run_cli(&["simulate", "--n", "50", "--k", "5", "--reps", "200", "--seed", "8", "--format", "json"]);
    assert_ne!(a, other);
}

#[test]
fn simulate_noise_table() {
    let (code, out, _) = run_cli(&["simulate", "--experiment", "noise", "--n", "60", "--k", "2", "--reps", "100"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("inclusion rate"), "{out}");
}

#[test]
fn usage_errors_exit_2() {
    let m = prostate();
    for args in [
        vec!["simulate", "--reps", "0"],
        vec!["simulate", "--n", "5", "--k", "4"],
        vec!["simulate", "--alpha", "1.5"],
        vec!["rank", "--manifest", &m, "--alpha", "0"],
        vec!["rank", "--manifest", &m, "--method", "l3"],
        vec!["perturb", "--manifest", &m, "--perturb", "1:10"],
        vec!["frobnicate"],
        vec![],
    ] {
        let (code, _, err) = run_cli(&args);
        assert_eq!(code, EXIT_USAGE, "{args:?}: {err}");
        assert!(!err.is_empty());
    }
}

#[test]
fn compute_errors_exit_1_with_class() {
    let (code, _, err) = run_cli(&["perturb", "--manifest", &prostate(), "--perturb", "98=1"]);
    assert_eq!(code, EXIT_COMPUTE);
    assert!(err.contains("IndexError"), "{err}");

    let missing = data_path("no-such.manifest").display().to_string();
    let (code, _, err) = run_cli(&["rank", "--manifest", &missing]);
    assert_eq!(code, EXIT_COMPUTE);
    assert!(err.contains("IoError"), "{err}");
}

#[test]
fn empty_covariate_set() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("d.csv"), "y,x\n1,2\n2,3\n4,1\n").unwrap();
    let manifest = dir.path().join("d.manifest");
    fs::write(&manifest, "name = empty\nfile = d.csv\nresponse = y\ncovariates =\n").unwrap();
    let m = manifest.display().to_string();
    let (code, out, err) = run_cli(&["rank", "--manifest", &m]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("k = 0"), "{out}");
    let t = run_trace(&["rank", "--manifest", &m]);
    assert!(t.evaluations.is_empty());
}

#[test]
fn data_flag_overrides_manifest_file() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("copy.csv");
    fs::copy(data_path("prostate.csv"), &csv).unwrap();
    let a = run_trace(&["rank", "--manifest", &prostate()]);
    let b = run_trace(&["rank", "--manifest", &prostate(), "--data", &csv.display().to_string()]);
    assert_eq!(a, b);
}

#[test]
fn standardize_flag_leaves_tables_unchanged() {
    let a = run_trace(&["rank", "--manifest", &prostate()]);
    let b = run_trace(&["rank", "--manifest", &prostate(), "--standardize"]);
    assert_eq!(a.order(), b.order());
    for (x, y) in a.p_values().iter().zip(b.p_values()) {
        assert!((x - y).abs() < 1e-9);
    }
    assert!(b.config.standardize);
}

#[test]
fn fixed_sigma_and_huber() {
    let t = run_trace(&["rank", "--manifest", &prostate(), "--method", "m", "--sigma", "0.7"]);
    assert!(t.evaluations.iter().all(|e| e.sigma == Some(0.7)));
    let h = run_trace(&["rank", "--manifest", &prostate(), "--method", "m", "--rho", "huber", "--c", "1.345"]);
    assert_eq!(h.order()[0], "lcavol");
    let d = run_trace(&["rank", "--manifest", &prostate(), "--method", "m"]);
    let l = run_trace(&["rank", "--manifest", &prostate(), "--method", "m", "--rho", "logcosh"]);
    assert_eq!(d, l);
}

#[test]
fn help_exits_0() {
    let (code, out, _) = run_cli(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("simulate"));
}

#[test]
fn command_functions_report_exit_codes() {
    use clap::Parser;
    use stepgate::cli::{cmd_rank, cmd_simulate, Cli, Command};

    let parse = |args: &[&str]| Cli::try_parse_from(std::iter::once("stepgate").chain(args.iter().copied())).unwrap();
    match parse(&["simulate", "--reps", "0"]).command {
        Command::Simulate(a) => assert_eq!(cmd_simulate(&a).unwrap_err().exit_code(), EXIT_USAGE),
        _ => unreachable!(),
    }
    match parse(&["rank", "--manifest", &prostate()]).command {
        Command::Rank(a) => assert!(cmd_rank(&a).unwrap().contains("gleason")),
        _ => unreachable!(),
    }
}
