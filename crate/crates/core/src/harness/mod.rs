//! Parameter sweeps, scaling-law fits and up-arrow density estimates.

mod config;
mod density;
mod fit;
mod sweep;

pub use config::{ExperimentConfig, ExperimentKind};
pub use density::{decreasing_in_inverse_q, estimate_uparrow_density, DensityEstimate, Z95};
pub use fit::{
    fit_scaling, fit_summary, fit_summary_file, least_squares, parse_summary, FitReport, PredictorFit,
    SummaryRow, INDETERMINATE, MAX_CENSORED_FRACTION, MIN_WINNING_R2, PREDICTORS,
};
pub use sweep::{
    csv_header_line, run_sweep, threads_from_env, with_thread_cap, write_atomic, CellRecord, SweepManifest,
    MANIFEST_FILE, SUMMARY_FILE, THREADS_ENV,
};

#[cfg(test)]
mod tests {
    use super::*;

    fn config(kind: &str, dir: &std::path::Path, extra: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(&format!(
            r#"{{"kind": "{kind}", "family": "east1d", "output_dir": {:?} {extra}}}"#,
            dir.to_str().unwrap()
        ))
        .unwrap()
    }

    #[test]
    fn exact_sweep_over_lengths() {
        let dir = tempfile::tempdir().unwrap();
        let c = config("exact", dir.path(), r#", "q": [0.3], "sizes": [2, 3, 4, 5, 6, 7, 8]"#);
        let m = run_sweep(&c).unwrap();
        assert!(m.is_complete());
        assert_eq!(m.cells.len(), 7);
        let mut gaps = Vec::new();
        for cell in &m.cells {
            let text = std::fs::read_to_string(dir.path().join(&cell.file)).unwrap();
            let v: serde_json::Value = serde_json::from_str(&text).unwrap();
            gaps.push(v["report"]["gap"].as_f64().unwrap());
        }
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
        assert!(dir.path().join(MANIFEST_FILE).exists());
    }

    #[test]
    fn reruns_are_byte_identical() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let extra = r#", "q": [0.5, 0.3], "sizes": [6], "trials": 50, "t_max": 1000, "seed": 9"#;
        for kind in ["kcm", "bootstrap"] {
            run_sweep(&config(kind, a.path(), extra)).unwrap();
            run_sweep(&config(kind, b.path(), extra)).unwrap();
        }
        let mut files: Vec<_> = std::fs::read_dir(a.path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .filter(|n| n.to_str().unwrap().ends_with(".csv"))
            .collect();
        files.sort();
        assert_eq!(files.len(), 5);
        for f in files {
            let x = std::fs::read(a.path().join(&f)).unwrap();
            let y = std::fs::read(b.path().join(&f)).unwrap();
            assert_eq!(x, y, "{f:?}");
            assert!(String::from_utf8(x).unwrap().starts_with("# kcm-lab v"));
        }
    }

    #[test]
    fn empty_q_list_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(run_sweep(&config("kcm", dir.path(), r#", "q": []"#)).is_err());
    }

    #[test]
    fn failing_cells_give_a_partial_manifest() {
        let dir = tempfile::tempdir().unwrap();
        // width 20 is beyond the exact solver's state cap
        let c = config("exact", dir.path(), r#", "q": [0.3], "sizes": [3, 20]"#);
        let m = run_sweep(&c).unwrap();
        assert_eq!(m.status, "partial");
        assert_eq!(m.cells[0].status, "ok");
        assert_eq!(m.cells[1].status, "failed");
        assert!(m.cells[1].error.is_some());
        let manifest = std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
        assert!(manifest.contains("\"partial\""));
    }
}
