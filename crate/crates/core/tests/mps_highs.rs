//! Feeds written MPS files to HiGHS through its Python bindings. Skipped
//! when `python3 -c "import highspy"` fails.

use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use satgnn_core::generator::gen_formula;
use satgnn_core::{encode, enumerate_models, to_mps};

const SCRIPT: &str = r#"
import sys, highspy
for path in sys.argv[1:]:
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.readModel(path)
    h.run()
    print(h.modelStatusToString(h.getModelStatus()))
"#;

fn highs_available() -> bool {
    Command::new("python3").args(["-c", "import highspy"]).output().is_ok_and(|o| o.status.success())
}

#[test]
fn highs_agrees_on_feasibility() {
    if !highs_available() {
        eprintln!("highspy not importable, skipping");
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut paths = Vec::new();
    let mut expected = Vec::new();
    for i in 0..40 {
        let n = rng.gen_range(4..=10usize);
        let m = rng.gen_range(n..=7 * n);
        let f = gen_formula(3, n, m, &mut rng).unwrap();
        let path = tmp.path().join(format!("f{i}.mps"));
        std::fs::write(&path, to_mps(&encode(&f), &format!("f{i}"))).unwrap();
        paths.push(path);
        expected.push(!enumerate_models(&f).unwrap().is_empty());
    }
    let out = Command::new("python3").arg("-c").arg(SCRIPT).args(&paths).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let statuses: Vec<String> = String::from_utf8_lossy(&out.stdout).lines().map(str::to_string).collect();
    assert_eq!(statuses.len(), expected.len());
    for (status, sat) in statuses.iter().zip(&expected) {
        let feasible = status == "Optimal";
        assert!(feasible || status == "Infeasible", "unexpected status {status}");
        assert_eq!(feasible, *sat);
    }
}
