use std::fmt::Write as _;
use std::path::Path;

use esm_core::residuals::residual_report;
use esm_verify::scenario::{FieldSpec, MetricSpec, PhiSpec};
use esm_verify::{model, Overrides, Scenario};

fn bundled(name: &str) -> Scenario {
    Scenario::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"))).unwrap()
}

fn write_samples(dir: &Path, file: &str, values: &[f64]) -> Option<String> {
    let mut text = String::new();
    for v in values {
        writeln!(text, "{v}").unwrap();
    }
    std::fs::write(dir.join(file), text).unwrap();
    Some(file.to_string())
}

#[test]
fn sampled_files_reproduce_analytic_fields() {
    let analytic = bundled("ufold");
    let ov = Overrides::default();
    let cfg = model::configuration(&analytic, &ov).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut sampled = analytic.clone();
    sampled.base_dir = dir.path().to_path_buf();
    sampled.doc.phi = Some(PhiSpec::Sampled { values: Vec::new(), file: write_samples(dir.path(), "phi.txt", cfg.phi.values()) });
    sampled.doc.v =
        Some(FieldSpec::Sampled { values: Vec::new(), file: write_samples(dir.path(), "v.txt", cfg.v.data()), scale: 1.0 });
    let metric: Vec<f64> = cfg.metric.values().iter().flat_map(|g| g.iter().flatten().copied()).collect();
    sampled.doc.metric = Some(MetricSpec::Sampled { values: metric, file: None });
    let reloaded = model::configuration(&sampled, &ov).unwrap();
    assert_eq!(reloaded.phi.values(), cfg.phi.values());
    assert_eq!(reloaded.v.data(), cfg.v.data());
    assert_eq!(residual_report(&reloaded, false).unwrap(), residual_report(&cfg, false).unwrap());
}

#[test]
fn sampled_fields_cannot_be_refined() {
    let mut s = bundled("vacuum");
    s.doc.phi = Some(PhiSpec::Sampled { values: vec![0.3; 4096], file: None });
    assert!(model::configuration(&s, &Overrides::default()).is_ok());
    let refined = Overrides { refine: Some(2), ..Overrides::default() };
    assert!(model::configuration(&s, &refined).is_err());
}

#[test]
fn sample_counts_are_checked() {
    let mut s = bundled("vacuum");
    s.doc.phi = Some(PhiSpec::Sampled { values: vec![0.3; 17], file: None });
    assert!(model::configuration(&s, &Overrides::default()).is_err());
}
