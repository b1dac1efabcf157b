use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use oeo_cli::config::BuiltObjective;
use oeo_cli::{
    load_experiment, run_experiment, summarize_dir, summarize_traces, AlgorithmSettings, ExperimentFile, TraceSummary,
    SUMMARY_HEADER,
};
use oeo_core::baselines::PsoConfig;
use oeo_core::{OeoConfig, TRACE_HEADER};

fn oeo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oeo")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn run(cost: f64, alg: &str) -> TraceSummary {
    TraceSummary {
        algorithm: alg.into(),
        objective: "sphere5d".into(),
        seed: 0,
        final_cost: cost,
        wall_seconds: 1.0,
    }
}

#[test]
fn one_seed_writes_trace_summary_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "one.toml",
        "algorithm = \"OEO\"\nseeds = [7]\nmax_evaluations = 300\n[objective]\nkind = \"sphere\"\ndims = 5\n",
    );
    let out = tmp.path().join("out");
    let o = oeo(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut names: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names, ["OEO__sphere5d__seed7.csv", "manifest.jsonl", "summary.csv"]);

    let trace = fs::read_to_string(out.join("OEO__sphere5d__seed7.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some(TRACE_HEADER));
    let last = lines.last().unwrap();
    assert_eq!(last.split(',').nth(1), Some("300"));

    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().next(), Some(SUMMARY_HEADER));
    assert_eq!(summary.lines().count(), 2);
    let manifest = fs::read_to_string(out.join("manifest.jsonl")).unwrap();
    assert_eq!(manifest.lines().count(), 1);
}

#[test]
fn baseline_traces_leave_adaptive_columns_empty() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "b.toml",
        "algorithms = [\"PSO\", \"Bat\", \"RandomSearch\"]\nseeds = [1]\nmax_evaluations = 200\n[objective]\nkind = \"ackley\"\ndims = 3\n",
    );
    let exp = load_experiment(Path::new(&cfg)).unwrap();
    let (dir, entries) = run_experiment(&exp, Some(&tmp.path().join("o"))).unwrap();
    assert_eq!(entries.len(), 3);
    for e in entries {
        assert_eq!(e.evaluations, 200);
        let text = fs::read_to_string(dir.join(&e.trace_file)).unwrap();
        assert!(text.lines().skip(1).all(|l| l.ends_with(",,,,")), "{}", e.trace_file);
    }
}

#[test]
fn comparison_summary_has_one_row_per_algorithm() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "cmp.toml",
        "algorithms = [\"OEO\", \"M-OEO\", \"PSO\"]\nseed_count = 20\nmax_evaluations = 400\n[objective]\nkind = \"rastrigin\"\ndims = 2\n",
    );
    let exp = load_experiment(Path::new(&cfg)).unwrap();
    let (dir, _) = run_experiment(&exp, Some(&tmp.path().join("o"))).unwrap();
    let rows = summarize_dir(&dir).unwrap();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert_eq!(r.runs, 20);
        assert!(r.cost_std >= 0.0 && r.cost_mean >= r.best_cost);
        assert!(r.mean_wall_seconds > 0.0);
    }
    let csv = fs::read_to_string(dir.join("summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn summary_examples() {
    let one = summarize_traces(&[run(5.0, "OEO")]);
    assert_eq!((one[0].cost_mean, one[0].cost_std, one[0].best_cost), (5.0, 0.0, 5.0));
    let two = summarize_traces(&[run(4.0, "OEO"), run(6.0, "OEO")]);
    assert_eq!((two[0].cost_mean, two[0].cost_std, two[0].best_cost), (5.0, 1.0, 4.0));
}

#[test]
fn summary_is_permutation_invariant() {
    let costs = [0.1, 1e-9, 3.7, 2.2, 1e6, -4.0, 0.3, 0.30000000000000004];
    let runs: Vec<TraceSummary> = costs
        .iter()
        .enumerate()
        .map(|(i, c)| run(*c, if i % 2 == 0 { "OEO" } else { "PSO" }))
        .collect();
    let reference = summarize_traces(&runs);
    let mut perm = runs.clone();
    for k in 0..20 {
        perm.rotate_left(3);
        perm.swap(k % 8, (k * 5 + 1) % 8);
        assert_eq!(summarize_traces(&perm), reference);
    }
}

#[test]
fn summarize_rejects_malformed_traces() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "OEO__sphere5d__seed0.csv",
        &format!("{TRACE_HEADER}\n0,10,5,0.3,0.16,0.2,10\n1,11,6,0.3,0.16,0.2,10\n"),
    );
    let o = oeo(&["summarize", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("non-increasing"));

    write(tmp.path(), "OEO__sphere5d__seed0.csv", "iteration,cost\n0,1\n");
    assert!(summarize_dir(tmp.path()).is_err());

    write(
        tmp.path(),
        "OEO__sphere5d__seed0.csv",
        &format!("{TRACE_HEADER}\n0,10,5,0.3,0.16,0.2,10\n1,11,4.5,0.3,0.16,0.2,10\n"),
    );
    let rows = summarize_dir(tmp.path()).unwrap();
    assert_eq!(rows[0].best_cost, 4.5);
    assert_eq!(rows[0].mean_wall_seconds, 0.0);
}

#[test]
fn invalid_configs_exit_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("unknown algorithm", "algorithm = \"Tabu\"\nseeds = [0]\nmax_evaluations = 100\n[objective]\nkind = \"sphere\"\ndims = 2\n"),
        ("no seeds", "algorithm = \"OEO\"\nseeds = []\nmax_evaluations = 100\n[objective]\nkind = \"sphere\"\ndims = 2\n"),
        ("unknown key", "algorithm = \"OEO\"\nseeds = [0]\nmax_evaluations = 100\ncolour = 1\n[objective]\nkind = \"sphere\"\ndims = 2\n"),
        ("budget below cluster count", "algorithm = \"OEO\"\nseeds = [0]\nmax_evaluations = 5\n[objective]\nkind = \"sphere\"\ndims = 2\n"),
        ("hybrid on a landscape", "algorithm = \"OEO-GD\"\nseeds = [0]\nmax_evaluations = 100\n[objective]\nkind = \"sphere\"\ndims = 2\n"),
        ("missing landscape file", "algorithm = \"OEO\"\nseeds = [0]\nmax_evaluations = 100\n[objective]\nkind = \"landscape\"\npath = \"nope.toml\"\n"),
        ("bad override", "algorithm = \"PSO\"\nseeds = [0]\nmax_evaluations = 100\n[objective]\nkind = \"sphere\"\ndims = 2\n[pso]\nswarm_size = 1\n"),
        ("proposer in hybrid", "algorithm = \"OEO-GD\"\nseeds = [0]\nmax_evaluations = 100\n[objective]\nkind = \"wgtcsp\"\n[hybrid]\nproposer = { kind = \"none\" }\n"),
    ];
    for (what, text) in cases {
        let cfg = write(tmp.path(), "bad.toml", text);
        let o = oeo(&["run", &cfg, "--out", tmp.path().join("o").to_str().unwrap()]);
        assert_eq!(
            o.status.code(),
            Some(2),
            "{what}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn unwritable_output_exits_with_code_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "ok.toml",
        "algorithm = \"PSO\"\nseeds = [0]\nmax_evaluations = 100\n[objective]\nkind = \"sphere\"\ndims = 2\n",
    );
    let blocker = write(tmp.path(), "a_file", "");
    let o = oeo(&["run", &cfg, "--out", &format!("{blocker}/sub")]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn overrides_merge_over_presets() {
    let text = r#"
algorithms = ["OEO", "M-OEO", "PSO", "GPSO"]
seeds = [0]
max_evaluations = 900
[objective]
kind = "wgtcsp"
target_class = 2
[objective.synthetic]
trials = 3
channels = 3
[oeo]
update_method = { tag = "ClusterMean" }
b_start = 0.5
[m_oeo]
fixed_a = 0.4
[pso]
inertia = 0.5
[hybrid]
inner_steps = 3
"#;
    let exp = ExperimentFile::parse(text)
        .unwrap()
        .expand(Path::new("."), "t")
        .unwrap();
    let by = |alg: &str| exp.runs.iter().find(|r| r.algorithm == alg).unwrap().settings.clone();
    match by("OEO") {
        AlgorithmSettings::Oeo(c) => {
            assert_eq!(c.update_method, oeo_core::UpdateMethod::ClusterMean);
            assert_eq!(c.b_start, 0.5);
            assert_eq!(c.max_evaluations, 900);
            assert_eq!(c.m1, OeoConfig::oeo(1).m1);
        }
        other => panic!("{other:?}"),
    }
    match by("M-OEO") {
        AlgorithmSettings::Oeo(c) => {
            assert_eq!(c.fixed_a, Some(0.4));
            assert_eq!(c.update_method, OeoConfig::m_oeo(1).update_method);
        }
        other => panic!("{other:?}"),
    }
    match by("GPSO") {
        AlgorithmSettings::Hybrid(h) => {
            assert_eq!(h.inner_steps, 3);
            assert_eq!(h.target_class, oeo_core::wgtcsp::TargetClass::Second);
            match &h.proposer {
                oeo_core::wgtcsp::Proposer::Pso(p) => {
                    assert_eq!(p.inertia, 0.5);
                    assert_eq!(p.reinit_period, Some(6));
                    assert_eq!(p.c1, PsoConfig::default().c1);
                }
                other => panic!("{other:?}"),
            }
        }
        other => panic!("{other:?}"),
    }
    match exp.runs[0].objective.build().unwrap() {
        BuiltObjective::Trials(t, _) => assert_eq!((t.n(), t.channels()), (3, 3)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn landscape_file_is_inlined_into_the_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = oeo_core::benchmarks::LandscapeSpec::gaussian(2, 3, 2, 4).unwrap();
    write(tmp.path(), "land.toml", &toml::to_string(&spec).unwrap());
    let cfg = write(
        tmp.path(),
        "l.toml",
        "algorithm = \"OEO\"\nseeds = [0]\nmax_evaluations = 200\noutput_dir = \"res\"\n[objective]\nkind = \"landscape\"\npath = \"land.toml\"\n",
    );
    let exp = load_experiment(Path::new(&cfg)).unwrap();
    assert_eq!(exp.output_dir, tmp.path().join("res"));
    let (dir, entries) = run_experiment(&exp, None).unwrap();
    assert_eq!(entries[0].trace_file, format!("OEO__{}__seed0.csv", spec.label()));
    // The replay no longer needs the landscape file.
    fs::remove_file(tmp.path().join("land.toml")).unwrap();
    let replayed = oeo_cli::replay_manifest(&dir.join("manifest.jsonl"), &tmp.path().join("again")).unwrap();
    assert_eq!(replayed[0].final_cost, entries[0].final_cost);
}

#[test]
fn trial_set_file_objective() {
    let tmp = tempfile::tempdir().unwrap();
    let set = oeo_core::wgtcsp::TrialSet::synthetic(&oeo_core::wgtcsp::SyntheticTrials {
        trials: 4,
        channels: 3,
        ..Default::default()
    })
    .unwrap();
    write(tmp.path(), "trials.txt", &set.to_text());
    let cfg = write(
        tmp.path(),
        "w.toml",
        "algorithms = [\"GD\", \"OEO-GD\"]\nseeds = [0, 1]\nmax_evaluations = 300\n[objective]\nkind = \"wgtcsp\"\npath = \"trials.txt\"\n",
    );
    let exp = load_experiment(Path::new(&cfg)).unwrap();
    let (_, entries) = run_experiment(&exp, Some(&tmp.path().join("o"))).unwrap();
    assert_eq!(entries.len(), 4);
    assert!(entries.iter().all(|e| e.evaluations <= 300 && e.final_cost < 0.0));
    assert!(entries[0].trace_file.contains("wgtcsp_trials"));
}

#[test]
fn bench_list_names_every_benchmark() {
    let o = oeo(&["bench-list"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    for name in ["sphere", "rastrigin", "ackley", "griewank", "gaussian", "penalty"] {
        assert!(text.contains(name), "{name}");
    }
}
