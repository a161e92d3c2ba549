#![allow(dead_code)]

use std::path::PathBuf;

use stepgate::cli;
use stepgate::StepTrace;

pub fn data_path(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(file)
}

pub fn prostate() -> String {
    data_path("prostate.manifest").display().to_string()
}

pub fn birthweight() -> String {
    data_path("birthweight.manifest").display().to_string()
}

/// Runs the CLI in-process: (exit code, stdout, stderr).
pub fn run_cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("stepgate").chain(args.iter().copied());
    let code = cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

pub fn run_trace(args: &[&str]) -> StepTrace {
    let mut full = args.to_vec();
    full.extend(["--format", "json"]);
    let (code, out, err) = run_cli(&full);
    assert_eq!(code, 0, "stderr: {err}");
    serde_json::from_str(&out).unwrap()
}

/// Residual sum of squares by the normal equations, solved with Gauss-Jordan
/// elimination and partial pivoting. Independent of the QR path under test.
pub fn normal_equations_ss(columns: &[&[f64]], y: &[f64]) -> f64 {
    let p = columns.len();
    let mut a = vec![vec![0.0; p + 1]; p];
    for i in 0..p {
        for j in 0..p {
            a[i][j] = columns[i].iter().zip(columns[j]).map(|(u, v)| u * v).sum();
        }
        a[i][p] = columns[i].iter().zip(y).map(|(u, v)| u * v).sum();
    }
    for col in 0..p {
        let pivot = (col..p).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs())).unwrap();
        a.swap(col, pivot);
        let d = a[col][col];
        for v in a[col].iter_mut() {
            *v /= d;
        }
        for r in 0..p {
            if r != col {
                let f = a[r][col];
                let row = a[col].clone();
                for (x, rv) in a[r].iter_mut().zip(row) {
                    *x -= f * rv;
                }
            }
        }
    }
    let beta: Vec<f64> = a.iter().map(|row| row[p]).collect();
    (0..y.len())
        .map(|i| {
            let fit: f64 = (0..p).map(|j| beta[j] * columns[j][i]).sum();
            (y[i] - fit).powi(2)
        })
        .sum()
}
