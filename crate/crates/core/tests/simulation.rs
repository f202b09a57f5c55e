use indexmap::IndexMap;
use lords_lab::dgp::{build_paper_scm, build_randomized_scm, cols, derive_noise_sds, ground_truth, PaperCoefficients};
use lords_lab::rtm::correlation;
use lords_lab::scm::{simulate, simulate_intervention, to_natural_units, validate_scm, Dataset, ScmSpec, Units};
use proptest::prelude::*;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sd(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

#[test]
fn paper_order_is_time_order() {
    let scm = validate_scm(build_paper_scm()).unwrap();
    assert_eq!(scm.names().collect::<Vec<_>>(), ["X", "M0", "Y0", "Hall", "Diet", "Y1", "dY"]);

    // Shuffled listing still sorts into a valid order.
    let mut spec = build_paper_scm();
    spec.nodes.reverse();
    let scm = validate_scm(spec).unwrap();
    let pos = |n: &str| scm.index_of(n).unwrap();
    assert!(pos("X") < pos("M0") && pos("M0") < pos("Y0") && pos("Y0") < pos("Y1"));
    assert!(pos("Diet") < pos("Y1") && pos("Y1") < pos("dY"));
}

#[test]
fn standardized_marginals() {
    let scm = validate_scm(build_paper_scm()).unwrap();
    let ds = simulate(&scm, 10_000, 77).unwrap();
    for name in ["X", "M0", "Y0", "Y1"] {
        let c = ds.column(name).unwrap();
        assert!(mean(c).abs() < 0.05, "{name} mean {}", mean(c));
        assert!((sd(c) - 1.0).abs() < 0.05, "{name} sd {}", sd(c));
    }
}

/// Brute-force check of the covariance-algebra noise scales: a large sample
/// must have unit variance within three standard errors.
#[test]
fn monte_carlo_confirms_noise_scales() {
    let sds = derive_noise_sds(&PaperCoefficients::PAPER).unwrap();
    assert!((sds["M0"] - 0.8660).abs() < 1e-4);
    assert!((sds["Y0"] - 0.7937).abs() < 1e-4);
    assert!((sds["Y1"] - 0.6874).abs() < 1e-4);

    let n = 400_000;
    let scm = validate_scm(build_paper_scm()).unwrap();
    let ds = simulate(&scm, n, 2024).unwrap();
    // Var of a sample variance of N(0,1) data is about 2/n.
    let tol = 3.0 * (2.0 / n as f64).sqrt();
    for name in ["M0", "Y0", "Y1"] {
        let v = sd(ds.column(name).unwrap()).powi(2);
        assert!((v - 1.0).abs() < tol, "{name} variance {v}");
    }
    let c = |a: &str, b: &str| correlation(ds.column(a).unwrap(), ds.column(b).unwrap());
    assert!((c("X", "Y0") - 0.5).abs() < 0.01);
    assert!((c("Y0", "Y1") - 0.685).abs() < 0.01);
    assert!((c("M0", "Y0") + 0.05).abs() < 0.01);
}

#[test]
fn copies_and_difference_are_exact() {
    let scm = validate_scm(build_paper_scm()).unwrap();
    let std = simulate(&scm, 5_000, 3).unwrap();
    let nat = to_natural_units(&std, &scm).unwrap();
    for ds in [&std, &nat] {
        let x = ds.column(cols::X).unwrap();
        assert_eq!(x, ds.column(cols::HALL).unwrap());
        assert_eq!(x, ds.column(cols::DIET).unwrap());
        let (y0, y1, dy) = (ds.column("Y0").unwrap(), ds.column("Y1").unwrap(), ds.column("dY").unwrap());
        for i in 0..ds.n() {
            assert!((dy[i] - (y1[i] - y0[i])).abs() <= 1e-12 * y1[i].abs().max(1.0));
        }
    }
}

#[test]
fn natural_unit_mapping() {
    let scm = validate_scm(build_paper_scm()).unwrap();
    let mut cols_in = IndexMap::new();
    cols_in.insert("X".to_string(), vec![1.0, -1.0]);
    cols_in.insert("M0".to_string(), vec![0.0, 1.0]);
    cols_in.insert("Y0".to_string(), vec![0.0, 1.0]);
    cols_in.insert("Y1".to_string(), vec![0.5, -1.0]);
    cols_in.insert("dY".to_string(), vec![0.5, -2.0]);
    let ds = Dataset::new(cols_in, Units::Standardized).unwrap();
    let nat = to_natural_units(&ds, &scm).unwrap();
    assert_eq!(nat.column("Y0").unwrap(), &[80.0, 90.0]);
    assert_eq!(nat.column("M0").unwrap(), &[30.0, 40.0]);
    assert_eq!(nat.column("Y1").unwrap(), &[85.0, 70.0]);
    assert_eq!(nat.column("dY").unwrap(), &[5.0, -20.0]);
    assert_eq!(nat.column("X").unwrap(), &[1.0, -1.0]);
}

fn mean_y1_kg(spec: &ScmSpec, forced: &[(&str, f64)], seed: u64) -> f64 {
    let scm = validate_scm(spec.clone()).unwrap();
    let forced: IndexMap<String, f64> = forced.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    let ds = simulate_intervention(&scm, 1_000_000, seed, &forced).unwrap();
    mean(to_natural_units(&ds, &scm).unwrap().column("Y1").unwrap())
}

/// Interventional simulation is the second, data-based oracle for the
/// path-traced ground truth.
#[test]
fn interventions_agree_with_path_tracing() {
    let spec = build_paper_scm();
    let truth = ground_truth(&spec).unwrap();
    let tce = mean_y1_kg(&spec, &[("X", 1.0)], 5) - mean_y1_kg(&spec, &[("X", -1.0)], 5);
    assert!((tce - 10.0).abs() < 0.1, "tce {tce}");
    assert!((tce - truth.tce_kg).abs() < 0.1);
    let cde = mean_y1_kg(&spec, &[("X", 1.0), ("Y0", 0.0)], 6)
        - mean_y1_kg(&spec, &[("X", -1.0), ("Y0", 0.0)], 6);
    assert!((cde - 5.0).abs() < 0.1, "cde {cde}");
    assert!((cde - truth.cde_kg).abs() < 0.1);
}

#[test]
fn forcing_exposure_leaves_non_descendants_alone() {
    let scm = validate_scm(build_randomized_scm()).unwrap();
    let obs = simulate(&scm, 1_000, 8).unwrap();
    let mut forced = IndexMap::new();
    forced.insert("X".to_string(), 1.0);
    let int = simulate_intervention(&scm, 1_000, 8, &forced).unwrap();
    // In the randomized model M0 and Y0 do not descend from X.
    assert_eq!(obs.column("M0").unwrap(), int.column("M0").unwrap());
    assert_eq!(obs.column("Y0").unwrap(), int.column("Y0").unwrap());
    assert!(int.column("Diet").unwrap().iter().all(|&v| v == 1.0));
}

#[test]
fn randomized_exposure_is_uncorrelated_with_baseline() {
    let n = 10_000;
    let scm = validate_scm(build_randomized_scm()).unwrap();
    let ds = simulate(&scm, n, 99).unwrap();
    let r = correlation(ds.column("X").unwrap(), ds.column("Y0").unwrap());
    assert!(r.abs() < 3.0 / (n as f64).sqrt());
    assert!((sd(ds.column("Y0").unwrap()) - 1.0).abs() < 0.05);
}

#[test]
fn shipped_model_file_matches_builder() {
    let text = include_str!("../models/lords_paradox.json");
    let spec = ScmSpec::from_json(text).unwrap();
    assert_eq!(spec, build_paper_scm());
    assert_eq!(spec.rescale["Y0"], (80.0, 10.0));
    assert_eq!(spec.rescale["Y1"], (80.0, 10.0));
    assert_eq!(spec.rescale["M0"], (30.0, 10.0));
}

#[test]
fn spec_json_accepts_compact_form() {
    let text = r#"{"nodes":[
        {"name":"A","kind":"symmetric_binary"},
        {"name":"B","kind":"linear_gaussian","parents":["A"],"coefficients":[0.3],"noise_sd":0.5}
    ],"rescale":{"B":[10,2]}}"#;
    let scm = validate_scm(ScmSpec::from_json(text).unwrap()).unwrap();
    let ds = to_natural_units(&simulate(&scm, 100, 1).unwrap(), &scm).unwrap();
    assert_eq!(ds.n(), 100);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn simulation_is_a_pure_function(seed in any::<u64>(), n in 1usize..300) {
        let scm = validate_scm(build_paper_scm()).unwrap();
        prop_assert_eq!(simulate(&scm, n, seed).unwrap(), simulate(&scm, n, seed).unwrap());
    }

    #[test]
    fn spec_json_round_trip(coefs in prop::array::uniform7(-0.3f64..0.3)) {
        let c = PaperCoefficients {
            x_to_m0: coefs[0], x_to_y0: coefs[1], m0_to_y0: coefs[2], x_to_y1: coefs[3],
            m0_to_y1: coefs[4], y0_to_y1: coefs[5], diet_to_y1: coefs[6],
        };
        let spec = lords_lab::dgp::build_scm(&c).unwrap();
        prop_assert_eq!(ScmSpec::from_json(&spec.to_json().unwrap()).unwrap(), spec);
    }
}
