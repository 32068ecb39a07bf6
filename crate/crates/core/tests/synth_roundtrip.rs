use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use courtside::features::{build_matrix, schema, FeatureConfig};
use courtside::ingest::{hr_compliance_filter, load_dataset, LoadOptions, PhaseSet};
use courtside::labels::{season_labels, LabelConfig};
use courtside::synth::{generate_cohort, synthesize, CohortSpec, Truth, TRUTH_FILE};

fn small_spec(seed: u64) -> CohortSpec {
    CohortSpec {
        subjects: 6,
        days_per_phase: vec![0, 6, 4],
        hr_interval_secs: 600,
        ..CohortSpec::default()
    }
    .with_seed(seed)
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

#[test]
fn written_cohort_loads_cleanly_and_matches_memory() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec(3);
    let truth = generate_cohort(&spec, dir.path()).unwrap();
    let loaded = load_dataset(dir.path(), &LoadOptions::default()).unwrap();
    assert!(loaded.diagnostics.is_empty(), "{:?}", loaded.diagnostics);
    let (memory, _) = synthesize(&spec).unwrap();
    assert_eq!(loaded.subjects, memory.subjects);
    assert_eq!(Truth::read(&dir.path().join(TRUTH_FILE)).unwrap(), truth);
}

#[test]
fn same_seed_writes_identical_trees() {
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    generate_cohort(&small_spec(9), a.path()).unwrap();
    generate_cohort(&small_spec(9), b.path()).unwrap();
    generate_cohort(&small_spec(10), c.path()).unwrap();
    let (ta, tb, tc) = (tree(a.path()), tree(b.path()), tree(c.path()));
    assert!(!ta.is_empty());
    assert_eq!(ta, tb);
    assert_ne!(ta, tc);
}

#[test]
fn labels_agree_with_planted_classes() {
    for seed in 0..5 {
        let spec = small_spec(seed);
        let (dataset, truth) = synthesize(&spec).unwrap();
        let labels = season_labels(&dataset, &LabelConfig::default());
        for (id, subject) in &truth.subjects {
            if subject.matches == 0 {
                assert!(!labels.contains_key(id));
                continue;
            }
            assert_eq!(labels[id].class.code(), subject.class, "seed {seed} {id}");
        }
    }
}

/// Per-class sample means of planted features stay within three standard
/// errors of the generator means over 1000 subject-days.
#[test]
fn planted_means_are_recovered() {
    let spec = CohortSpec {
        subjects: 10,
        class_proportions: [0.5, 0.5],
        days_per_phase: vec![14, 46, 10, 30],
        hr_interval_secs: 60,
        ..CohortSpec::default()
    }
    .with_seed(21);
    let (raw, truth) = synthesize(&spec).unwrap();
    let (dataset, _) = hr_compliance_filter(&raw, 1440);
    let all: PhaseSet = "1,2,3,4".parse().unwrap();
    let matrix = build_matrix(&dataset, &spec.phase_config, &all, &FeatureConfig::default());
    assert_eq!(matrix.len(), 1000);

    for feature in [schema::HRV, schema::BREATHING_RATE, schema::VO2MAX, schema::HR_MIN, schema::TOTAL_SEDENTARY_TIME] {
        let j = matrix.index_of(feature).unwrap();
        for class in [0u8, 1] {
            let values: Vec<f64> = matrix
                .rows
                .iter()
                .filter(|r| truth.subjects[&r.subject_id].class == class)
                .filter_map(|r| r.values[j])
                .collect();
            let planted = spec.feature(feature).for_class(class);
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let tol = 3.0 * planted.sd / n.sqrt();
            assert!(n >= 400.0, "{feature} class {class}: {n} values");
            assert!((mean - planted.mean).abs() <= tol, "{feature} class {class}: {mean} vs {} ± {tol}", planted.mean);
        }
    }
}
