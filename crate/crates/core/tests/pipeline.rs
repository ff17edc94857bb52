use misgraph::analyze::{analyze, AnalysisConfig, Precision};
use misgraph::pipeline::{run_pipeline, PipelineConfig, Stage};
use misgraph::report::AnalysisReport;
use misgraph::simulate::{covariate_design, simulate, MechanismKind};
use misgraph::{Category, Dataset, Error, VariableMeta};
use ndarray::Array2;

fn mnar_data(seed: u64) -> Dataset {
    simulate(&covariate_design(MechanismKind::MNAR, 3000, 0.3, 1.5, 0.6, seed)).unwrap().0
}

#[test]
fn mnar_self_arc_with_covariate_witness() {
    let out = run_pipeline(&mnar_data(4), &PipelineConfig::default()).unwrap();
    let self_arc = out.arcs.iter().find(|a| a.is_self_arc()).expect("self-arc");
    assert_eq!(self_arc.observation_var, "target");
    assert_eq!(self_arc.completeness_var, "target_complete");
    assert!(self_arc.p_value < 1e-6);
    let finding = out.findings.iter().find(|f| f.variable == "target").expect("finding");
    assert_eq!(finding.witnesses, vec!["covariate".to_string()]);
    assert!(!out.arcs.iter().any(|a| a.observation_var == "noise"));
    assert_eq!(out.member_seeds.len(), 25);
    assert!(out.lambdas.iter().all(|&l| l > 0.0 && l < 0.2));
}

#[test]
fn complete_data_has_no_arcs() {
    let x = Array2::from_shape_fn((200, 3), |(i, j)| ((i * 37 + j * 11) % 101) as f64 + j as f64 * (i as f64).sqrt());
    let vars = ["a", "b", "c"].map(|n| VariableMeta::observation(n, Category::Other)).to_vec();
    let out = run_pipeline(&Dataset::complete(vars, x).unwrap(), &PipelineConfig::default()).unwrap();
    assert!(out.augmented.indicators.is_empty());
    assert!(out.arcs.is_empty() && out.findings.is_empty());
}

#[test]
fn same_seed_same_output_different_seed_different_members() {
    let d = mnar_data(9);
    let cfg = PipelineConfig { seed: 77, ..PipelineConfig::default() };
    let a = run_pipeline(&d, &cfg).unwrap();
    let b = run_pipeline(&d, &cfg).unwrap();
    assert_eq!(a.table, b.table);
    assert_eq!(a.arcs, b.arcs);
    let c = run_pipeline(&d, &PipelineConfig { seed: 78, ..cfg }).unwrap();
    assert_ne!(a.table, c.table);
}

#[test]
fn single_precision_tracks_double() {
    let d = mnar_data(5);
    let cfg = PipelineConfig::default();
    let a = run_pipeline(&d, &cfg).unwrap();
    let b = run_pipeline(&d.cast::<f32>(), &cfg).unwrap();
    for (x, y) in a.table.edges.iter().zip(&b.table.edges) {
        assert!((x.pooled_rho - y.pooled_rho as f64).abs() < 2e-3, "{} vs {}", x.pooled_rho, y.pooled_rho);
    }
    let mut na: Vec<_> = a.arcs.iter().map(|a| (&a.observation_var, &a.completeness_var)).collect();
    let mut nb: Vec<_> = b.arcs.iter().map(|a| (&a.observation_var, &a.completeness_var)).collect();
    na.sort();
    nb.sort();
    assert_eq!(na, nb);
}

#[test]
fn degenerate_column_reported_at_transform_stage() {
    let mut x = Array2::from_shape_fn((50, 2), |(i, j)| (i * (j + 2)) as f64);
    x.column_mut(1).fill(3.0);
    let mut mask = Array2::from_elem((50, 2), true);
    mask[[0, 1]] = false;
    let vars = ["a", "flat"].map(|n| VariableMeta::observation(n, Category::Other)).to_vec();
    let d = Dataset::new(vars, x, mask).unwrap();
    let err = run_pipeline(&d, &PipelineConfig::default()).unwrap_err();
    assert!(matches!(err.stage, Stage::Transform | Stage::Fit), "{err}");
    match err.source {
        Error::DegenerateColumn { name, .. } => assert_eq!(name.as_deref(), Some("flat")),
        e => panic!("unexpected {e}"),
    }
}

#[test]
fn analyze_writes_outputs_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("data.csv");
    mnar_data(2).write_csv(std::fs::File::create(&input).unwrap(), "NA").unwrap();
    let mut cfg = AnalysisConfig::new(&input, dir.path().join("out"));
    std::fs::create_dir_all(&cfg.out_dir).unwrap();
    cfg.seed = 3;
    cfg.n_imputations = 5;
    cfg.dump_imputations = true;
    let report = analyze(&cfg).unwrap();
    for f in ["report.json", "arcs.csv", "graph.dot", "imputation_000.csv", "imputation_004.csv"] {
        assert!(cfg.out_dir.join(f).exists(), "{f}");
    }
    let back = AnalysisReport::read(&cfg.out_dir.join("report.json")).unwrap();
    assert_eq!(back, report);
    assert_eq!(report.run.n_rows, 3000);

    cfg.precision = Precision::F32;
    cfg.dump_imputations = false;
    let r32 = analyze(&cfg).unwrap();
    assert_eq!(r32.run.precision, "f32");
}

#[test]
fn analyze_leaves_nothing_on_failure() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.csv");
    std::fs::write(&input, "a,b\n1,2\n3,oops\n").unwrap();
    let cfg = AnalysisConfig::new(&input, dir.path());
    let err = analyze(&cfg).unwrap_err();
    assert_eq!(err.stage, Stage::Parse);
    assert!(matches!(err.source, Error::Cell { row: 2, .. }), "{err}");
    assert!(!dir.path().join("report.json").exists());
}
