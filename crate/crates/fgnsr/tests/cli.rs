//! End-to-end checks of the command-line binary: file round trips, exit
//! codes, and determinism of the emitted reports.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fgnsr::io::{read_matrix, read_meta};
use tempfile::tempdir;

fn fgnsr_cmd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fgnsr"))
        .args(args)
        .output()
        .expect("binary should run")
}

fn run_ok(args: &[&str]) {
    let out = fgnsr_cmd(args);
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn exit_code(args: &[&str]) -> i32 {
    fgnsr_cmd(args).status.code().expect("exit code")
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

#[test]
fn generate_writes_matrix_and_sidecar() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("inst.fgnm");
    run_ok(&[
        "generate", "--kind", "middlepoint", "--m", "50", "--r", "10", "--eps", "0", "--seed",
        "3", "--out", path_str(&out),
    ]);
    let matrix = read_matrix(&out).unwrap();
    assert_eq!((matrix.rows(), matrix.cols()), (50, 55));

    let meta = read_meta(&dir.path().join("inst.fgnm.meta.json")).unwrap();
    assert_eq!(meta.n, 55);
    assert_eq!(meta.r, 10);
    assert_eq!(meta.k_true.len(), 10);

    // regenerating with the same flags reproduces the file byte for byte
    let again = dir.path().join("again.fgnm");
    run_ok(&[
        "generate", "--kind", "middlepoint", "--m", "50", "--r", "10", "--eps", "0", "--seed",
        "3", "--out", path_str(&again),
    ]);
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn csv_and_binary_outputs_agree() {
    let dir = tempdir().unwrap();
    let bin = dir.path().join("inst.fgnm");
    let csv = dir.path().join("inst.csv");
    for (path, format) in [(&bin, "bin"), (&csv, "csv")] {
        run_ok(&[
            "generate", "--kind", "scaled", "--m", "20", "--r", "4", "--eps", "0.1", "--alpha",
            "4", "--seed", "9", "--out", path_str(path), "--format", format,
        ]);
    }
    let a = read_matrix(&bin).unwrap();
    let b = read_matrix(&csv).unwrap();
    assert_eq!((a.rows(), a.cols()), (b.rows(), b.cols()));
    for (x, y) in a.data().iter().zip(b.data()) {
        assert!((x - y).abs() <= 1e-15, "{x} vs {y}");
    }
}

#[test]
fn unmix_recovers_noiseless_instance_end_to_end() {
    let dir = tempdir().unwrap();
    let inst = dir.path().join("inst.fgnm");
    run_ok(&[
        "generate", "--kind", "middlepoint", "--m", "30", "--r", "5", "--eps", "0", "--seed",
        "11", "--out", path_str(&inst),
    ]);
    let meta = read_meta(&dir.path().join("inst.fgnm.meta.json")).unwrap();
    let mut want = meta.k_true.clone();
    want.sort_unstable();

    for algorithm in ["fgnsr", "spa"] {
        let report_path = dir.path().join(format!("{algorithm}.json"));
        run_ok(&[
            "unmix", "--input", path_str(&inst), "--algorithm", algorithm, "--r", "5",
            "--maxiter", "600", "--out", path_str(&report_path),
        ]);
        let report: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
        let mut got: Vec<usize> = report["indices"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_u64().unwrap() as usize)
            .collect();
        got.sort_unstable();
        assert_eq!(got, want, "{algorithm} did not recover the sidecar K_true");
        let rel_error = report["rel_error_pct"].as_f64().unwrap();
        assert!(rel_error < 1e-3, "{algorithm} relative error {rel_error}");
    }
}

#[test]
fn singleton_preselection_changes_nothing() {
    let dir = tempdir().unwrap();
    let inst = dir.path().join("inst.fgnm");
    run_ok(&[
        "generate", "--kind", "middlepoint", "--m", "20", "--r", "4", "--eps", "0.05", "--seed",
        "13", "--out", path_str(&inst),
    ]);
    let n = read_matrix(&inst).unwrap().cols();
    let labels_path = dir.path().join("labels.txt");
    let labels: String = (0..n).map(|j| format!("{j}\n")).collect();
    fs::write(&labels_path, labels).unwrap();

    let plain = dir.path().join("plain.json");
    let pre = dir.path().join("pre.json");
    run_ok(&[
        "unmix", "--input", path_str(&inst), "--algorithm", "spa", "--r", "4", "--out",
        path_str(&plain),
    ]);
    run_ok(&[
        "unmix", "--input", path_str(&inst), "--algorithm", "spa", "--r", "4", "--labels",
        path_str(&labels_path), "--out", path_str(&pre),
    ]);
    let read_indices = |p: &Path| -> Vec<u64> {
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap();
        v["indices"].as_array().unwrap().iter().map(|x| x.as_u64().unwrap()).collect()
    };
    assert_eq!(read_indices(&plain), read_indices(&pre));
}

#[test]
fn project_reports_the_clamped_pivot_and_active_set() {
    let dir = tempdir().unwrap();
    let vec_path = dir.path().join("x.csv");
    let w_path = dir.path().join("w.csv");
    let out = dir.path().join("proj.json");

    // feasible row passes through untouched
    fs::write(&vec_path, "0.5,0.3\n").unwrap();
    fs::write(&w_path, "1,1\n").unwrap();
    run_ok(&[
        "project", "--input", path_str(&vec_path), "--weights", path_str(&w_path), "--pivot",
        "0", "--out", path_str(&out),
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["active_set_size"].as_u64().unwrap(), 0);
    assert_eq!(report["z"][0].as_f64().unwrap(), 0.5);
    assert_eq!(report["z"][1].as_f64().unwrap(), 0.3);

    // the weighted coupling example
    fs::write(&vec_path, "0.4,1.0\n").unwrap();
    fs::write(&w_path, "1,2\n").unwrap();
    run_ok(&[
        "project", "--input", path_str(&vec_path), "--weights", path_str(&w_path), "--pivot",
        "0", "--out", path_str(&out),
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!((report["t_star"].as_f64().unwrap() - 0.48).abs() < 1e-15);
    assert!((report["z"][1].as_f64().unwrap() - 0.96).abs() < 1e-15);

    // mismatched lengths are an input error
    fs::write(&w_path, "1,2,3\n").unwrap();
    let code = exit_code(&[
        "project", "--input", path_str(&vec_path), "--weights", path_str(&w_path), "--pivot",
        "0", "--out", path_str(&out),
    ]);
    assert_eq!(code, 2);
}

#[test]
fn sweep_report_shape_and_determinism() {
    let dir = tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |out: &Path| {
        vec![
            "sweep".to_string(),
            "--kind".into(), "middlepoint".into(),
            "--m".into(), "30".into(),
            "--r".into(), "5".into(),
            "--eps-list".into(), "0,0.01,0.02".into(),
            "--trials".into(), "5".into(),
            "--algorithms".into(), "spa,snpa".into(),
            "--out".into(), out.to_str().unwrap().to_string(),
        ]
    };
    for out in [&a, &b] {
        let argv = args(out);
        let argv: Vec<&str> = argv.iter().map(String::as_str).collect();
        run_ok(&argv);
    }

    let text = fs::read_to_string(&a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "algorithm,eps,trial_seed,index_recovery,mrsa_mean,rel_measure,runtime_seconds");
    assert_eq!(lines.len(), 1 + 2 * 3 * 5, "2 algorithms x 3 eps x 5 trials");

    // noiseless rows recover everything
    for line in &lines[1..] {
        let fields: Vec<&str> = line.split(',').collect();
        if fields[1] == "0" {
            assert_eq!(fields[3], "1", "noiseless recovery should be exact: {line}");
        }
    }

    // identical bytes modulo the runtime column
    let strip_runtime = |text: &str| -> Vec<String> {
        text.lines()
            .map(|l| l.rsplit_once(',').map(|(head, _)| head.to_string()).unwrap_or_default())
            .collect()
    };
    assert_eq!(
        strip_runtime(&text),
        strip_runtime(&fs::read_to_string(&b).unwrap()),
        "sweep output is not deterministic"
    );
}

#[test]
fn bad_inputs_exit_two_and_solver_failures_exit_three() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("out.json");

    // missing file
    assert_eq!(
        exit_code(&[
            "unmix", "--input", "/nonexistent.fgnm", "--algorithm", "spa", "--r", "2", "--out",
            path_str(&out)
        ]),
        2
    );

    // malformed CSV
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "1,banana\n").unwrap();
    assert_eq!(
        exit_code(&[
            "unmix", "--input", path_str(&bad), "--algorithm", "spa", "--r", "1", "--out",
            path_str(&out)
        ]),
        2
    );

    // rank-1 data cannot supply two columns: a solver-side failure
    let rank1 = dir.path().join("rank1.csv");
    fs::write(&rank1, "1,2\n2,4\n").unwrap();
    assert_eq!(
        exit_code(&[
            "unmix", "--input", path_str(&rank1), "--algorithm", "spa", "--r", "2", "--out",
            path_str(&out)
        ]),
        3
    );

    // bad mu-mode string
    let good = dir.path().join("good.csv");
    fs::write(&good, "1,0\n0,1\n").unwrap();
    assert_eq!(
        exit_code(&[
            "unmix", "--input", path_str(&good), "--algorithm", "fgnsr", "--r", "1",
            "--mu-mode", "sideways", "--out", path_str(&out)
        ]),
        2
    );
}
