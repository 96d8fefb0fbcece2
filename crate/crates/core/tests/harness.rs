mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use alien_concepts::fitting::FitParams;
use alien_concepts::geometry::{rotate_shape, Angle, Catalog, PrimId};
use alien_concepts::harness::{
    assets_dir, bayesian_prediction, bundled_trial_paths, infer_trial, prepare_trial,
    render_figure, render_parts, resolve_trial, sampling_grammar, Archetype, ComparisonReport,
    HarnessError, ItemTag, PredictionReport, SamplerSettings, SvgStyle, TrialSpec,
    REPORT_SCHEMA_VERSION,
};
use tempfile::TempDir;

const GOLDEN: [&str; 5] = ["bar", "diamond", "big_triangle", "trapezoid", "chevron"];

fn alien(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_alien"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = alien(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn error_kind(out: &Output) -> String {
    assert!(!out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).expect("stderr is JSON");
    v["error"].as_str().unwrap().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_trials() -> Vec<PathBuf> {
    let paths = bundled_trial_paths(&assets_dir()).unwrap();
    paths
        .into_iter()
        .filter(|p| ["t01", "t04", "t06"].iter().any(|id| s(p).contains(id)))
        .collect()
}

#[test]
fn predict_then_compare_on_synthetic_responses() {
    let dir = TempDir::new().unwrap();
    let pools = dir.path().join("pools");
    let trials = small_trials();
    let mut args = vec![
        "--steps",
        "1500",
        "--seed",
        "3",
        "infer",
        "--out-dir",
        s(&pools),
    ];
    args.extend(trials.iter().map(|p| s(p)));
    ok(&args);
    let report = dir.path().join("bayes.json");
    let responses = dir.path().join("responses.csv");
    let mut predict = vec!["predict", "--pools", s(&pools), "--out", s(&report)];
    predict.extend(trials.iter().map(|p| s(p)));
    ok(&predict);
    let mut synth = vec![
        "--seed",
        "5",
        "synthesize",
        "--pools",
        s(&pools),
        "--out",
        s(&responses),
    ];
    synth.extend(trials.iter().map(|p| s(p)));
    ok(&synth);
    let cmp = dir.path().join("cmp.json");
    let scatter = dir.path().join("scatter.csv");
    ok(&[
        "compare",
        "--report",
        s(&report),
        "--responses",
        s(&responses),
        "--out",
        s(&cmp),
        "--scatter",
        s(&scatter),
    ]);

    let parsed = PredictionReport::from_json(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(parsed.schema_version, REPORT_SCHEMA_VERSION);
    assert_eq!(parsed.trials.len(), 3);
    let comparison: ComparisonReport =
        serde_json::from_str(&std::fs::read_to_string(&cmp).unwrap()).unwrap();
    assert_eq!(comparison.trials.len(), 3);
    for t in &comparison.trials {
        let r = t.r.expect("defined correlation");
        assert!((-1.0..=1.0).contains(&r));
    }
    assert!(comparison.average_r.unwrap() > 0.8);
    let rows = std::fs::read_to_string(&scatter).unwrap();
    assert!(rows.starts_with("trial_id,item_id,tag,model,observed,n_total\n"));
    assert_eq!(
        rows.lines().count(),
        1 + comparison
            .trials
            .iter()
            .map(|t| t.points.len())
            .sum::<usize>()
    );

    let gcm = dir.path().join("gcm.json");
    let mut gcm_args = vec!["predict", "--model", "string-gcm", "--out", s(&gcm)];
    gcm_args.extend(trials.iter().map(|p| s(p)));
    ok(&gcm_args);
    ok(&["compare", "--report", s(&gcm), "--responses", s(&responses)]);
}

#[test]
fn infer_is_reproducible_by_seed() {
    let dir = TempDir::new().unwrap();
    let trial = &small_trials()[0];
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        ok(&[
            "--steps",
            "800",
            "infer",
            "--seed",
            seed,
            "--out-dir",
            s(&out),
            s(trial),
        ]);
        std::fs::read(out.join("t01-fixed-configuration.json")).unwrap()
    };
    let (a, b, c) = (run("a", "7"), run("b", "7"), run("c", "8"));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn fit_without_responses_fails_with_missing_data() {
    let dir = TempDir::new().unwrap();
    let out = alien(&["fit", "--responses", s(&dir.path().join("absent.csv"))]);
    assert_eq!(error_kind(&out), "MissingData");
}

#[test]
fn predict_without_pools_fails_with_missing_pool() {
    let dir = TempDir::new().unwrap();
    let out = alien(&["predict", "--pools", s(dir.path()), s(&small_trials()[0])]);
    assert_eq!(error_kind(&out), "MissingPool");
}

fn spec_with(test_figure: serde_json::Value) -> TrialSpec {
    let mut v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&small_trials()[0]).unwrap()).unwrap();
    v["test"][0]["figure"] = test_figure;
    serde_json::from_value(v).unwrap()
}

#[test]
fn malformed_trials_are_rejected_with_specific_errors() {
    let cat = Catalog::builtin();
    let foreign = spec_with(serde_json::json!({"parts": {"placements": [{"prim": "kite"}]}}));
    assert!(
        matches!(resolve_trial(foreign, &cat, true), Err(HarnessError::UnknownPrimitive(p)) if p == "kite")
    );
    let overlapping =
        spec_with(serde_json::json!({"parts": {"placements": [{"prim": "p1"}, {"prim": "p1"}]}}));
    let err = resolve_trial(overlapping, &cat, true).unwrap_err();
    assert_eq!(err.kind(), "InvalidFigure");
    let sixth = spec_with(serde_json::json!({"program": "(attach* p1 p5 1)"}));
    assert_eq!(
        resolve_trial(sixth, &cat, true).unwrap_err().kind(),
        "UnknownPrimitive"
    );

    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    let spec = spec_with(serde_json::json!({"parts": {"placements": [{"prim": "kite"}]}}));
    std::fs::write(&bad, spec.to_json()).unwrap();
    assert_eq!(
        error_kind(&alien(&["enumerate", s(&bad)])),
        "UnknownPrimitive"
    );
}

#[test]
fn bundled_trials_cover_every_archetype_and_are_well_tagged() {
    let trials = common::trials();
    assert!(trials.len() >= 10);
    for a in [
        Archetype::FixedConfiguration,
        Archetype::FreeCombination,
        Archetype::OrientationSelective,
        Archetype::Repetition,
    ] {
        assert!(
            trials.iter().any(|t| t.spec.archetype == Some(a)),
            "{a:?} missing"
        );
    }
    for t in trials {
        let u = &t.universe;
        let rotations = |x: u32| Angle::ALL.map(|a| u.rotate(x, a));
        for (item, &y) in t.spec.test.iter().zip(&t.test) {
            let is_example = t.training.contains(&y);
            let turned_example = t.training.iter().any(|&x| rotations(x).contains(&y));
            match item.tag {
                Some(ItemTag::Identity) => assert!(is_example, "{}: {}", t.id(), item.id),
                Some(ItemTag::Rotated) => {
                    assert!(turned_example && !is_example, "{}: {}", t.id(), item.id)
                }
                Some(ItemTag::NovelConfiguration) => {
                    assert!(!turned_example, "{}: {}", t.id(), item.id)
                }
                _ => assert!(!is_example, "{}: {}", t.id(), item.id),
            }
        }
    }
}

#[test]
fn identity_beats_inconsistent_items_under_default_parameters() {
    let params = FitParams::default();
    for t in common::trials() {
        let pool = infer_trial(t, &sampling_grammar(), &SamplerSettings::desk(), 0).unwrap();
        let pred = bayesian_prediction(t, &prepare_trial(t, &pool).unwrap(), &params);
        let q_of = |tag| {
            pred.items
                .iter()
                .filter(move |i| i.tag == Some(tag))
                .map(|i| i.q)
        };
        let identity = q_of(ItemTag::Identity).fold(f64::INFINITY, f64::min);
        for q in q_of(ItemTag::Inconsistent) {
            assert!(
                identity >= q,
                "{}: identity {identity:.3}, inconsistent {q:.3}",
                t.id()
            );
        }
    }
}

#[test]
fn primitive_drawings_match_golden_files() {
    let cat = Catalog::builtin();
    for name in GOLDEN {
        let prim = cat.get(name).unwrap();
        let svg = render_parts(
            &[(PrimId(0), prim.shape.cells().to_vec())],
            &SvgStyle::default(),
        );
        let golden =
            std::fs::read_to_string(assets_dir().join("golden").join(format!("{name}.svg")))
                .unwrap();
        assert_eq!(svg, golden, "{name}");
        let cli = ok(&["render", "--primitive", name]);
        assert_eq!(String::from_utf8(cli.stdout).unwrap(), golden);
    }
}

#[test]
fn drawings_are_deterministic_and_follow_rotation() {
    let t = common::trial("t07-orientation-selective");
    let u = &t.universe;
    let style = SvgStyle {
        color_parts: true,
        ..SvgStyle::default()
    };
    for &x in &t.training {
        assert_eq!(render_figure(u, x, &style), render_figure(u, x, &style));
        let turned = u.rotate(x, Angle::R90);
        let expected = rotate_shape(&u.figure(x).figure.shape, Angle::R90);
        assert_eq!(u.figure(turned).figure.shape, expected);
        let cells = expected.cells().to_vec();
        assert_eq!(
            render_figure(u, turned, &SvgStyle::default())
                .matches("<path")
                .count(),
            u.part_count(turned),
        );
        assert!(!cells.is_empty());
    }
}
