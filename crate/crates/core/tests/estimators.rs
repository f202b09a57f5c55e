use lords_lab::dgp::{build_paper_scm, build_randomized_scm, build_scm, cols, PaperCoefficients};
use lords_lab::estimators::*;
use lords_lab::ols::ols;
use lords_lab::scm::{simulate, to_natural_units, validate_scm, Dataset, ScmSpec, Units};
use lords_lab::LabError;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn natural(spec: ScmSpec, n: usize, seed: u64) -> Dataset {
    let scm = validate_scm(spec).unwrap();
    to_natural_units(&simulate(&scm, n, seed).unwrap(), &scm).unwrap()
}

#[test]
fn ancova_coefficient_on_standardized_scale() {
    // Normal equations with Cov(X,Y1)=0.5, Cov(Y0,Y1)=0.685, Cov(X,Y0)=0.5:
    // b_X = (0.5 - 0.5*0.685) / 0.75 = 0.21.
    let scm = validate_scm(build_paper_scm()).unwrap();
    let ds = simulate(&scm, 400_000, 31).unwrap();
    let fit = ols(
        ds.column("Y1").unwrap(),
        &[("X", ds.column("X").unwrap()), ("Y0", ds.column("Y0").unwrap())],
    )
    .unwrap();
    assert!((fit.coef("X") - 0.21).abs() < 0.005, "{}", fit.coef("X"));
    assert!((fit.coef("Y0") - 0.58).abs() < 0.005);
}

#[test]
fn positivity_violation_is_a_singular_design() {
    let ds = natural(build_paper_scm(), 500, 1);
    let err = ols(
        ds.column("Y1").unwrap(),
        &[("X", ds.column("X").unwrap()), ("Diet", ds.column("Diet").unwrap())],
    )
    .unwrap_err();
    assert!(matches!(err, LabError::SingularDesign { term } if term == "Diet"));
}

/// One dataset is a single draw from the sampling distribution, so each
/// estimate is checked against its population value at four sampling SDs
/// (SD taken from the 95% interval width).
#[test]
fn paper_dataset_estimates_near_population_values() {
    let ds = natural(build_paper_scm(), 10_000, 4242);
    let set = EstimateSet::compute(&ds, 80.0).unwrap();
    let near = |v: f64, centre: f64, lo: f64, hi: f64| (v - centre).abs() < 4.0 * (hi - lo) / 3.92;
    assert!(near(set.approach1_kg, 0.0, -0.3, 0.3), "{set:?}");
    assert!(near(set.approach2_kg, 4.2, 3.9, 4.5), "{set:?}");
    assert!(near(set.gcomp_cde_kg, 5.0, 4.7, 5.3), "{set:?}");
    assert!(near(set.approach4_kg, 4.2, 3.9, 4.5), "{set:?}");
    assert!(near(set.approach5_kg, 10.0, 9.7, 10.4), "{set:?}");
    assert!(near(set.gcomp_tce_kg, 10.0, 9.7, 10.4), "{set:?}");
    assert!(set.approach1_kg < set.approach2_kg);
    assert!(set.approach2_kg < set.gcomp_cde_kg);
    assert!(set.gcomp_cde_kg < set.approach5_kg);
    assert!((set.gcomp_tce_kg - set.approach5_kg).abs() < 0.1);
}

#[test]
fn interaction_term_is_null_on_paper_model() {
    let ds = natural(build_paper_scm(), 10_000, 17);
    let fit = approach2_ancova(&ds, true).unwrap();
    assert!(fit.coef(INTERACTION).abs() < 3.0 * fit.se(INTERACTION));
}

#[test]
fn cde_is_flat_in_baseline_value() {
    let ds = natural(build_paper_scm(), 10_000, 23);
    let at80 = gcomp_cde(&ds, 80.0).unwrap();
    for y0 in [60.0, 70.0, 90.0, 120.0] {
        assert!((gcomp_cde(&ds, y0).unwrap() - at80).abs() < 1e-8);
    }
}

/// With the M0 -> Y1 edge removed there is nothing to standardize over, so
/// g-computation and ANCOVA target the same direct effect (here 7 kg by
/// path tracing); a brute-force average over replications confirms both.
#[test]
fn gcomp_cde_matches_ancova_without_mediator_outcome_confounding() {
    let spec = build_scm(&PaperCoefficients {
        m0_to_y1: 0.0,
        ..PaperCoefficients::PAPER
    })
    .unwrap();
    let reps = 40;
    let (mut g, mut a) = (0.0, 0.0);
    for seed in 0..reps {
        let ds = natural(spec.clone(), 10_000, 1000 + seed);
        g += gcomp_cde(&ds, 80.0).unwrap();
        a += approach2_ancova(&ds, false).unwrap().coef(cols::X);
    }
    let (g, a) = (g / reps as f64, a / reps as f64);
    assert!((g - a).abs() < 0.1, "g {g} a {a}");
    assert!((g - 7.0).abs() < 0.1);
}

#[test]
fn randomized_model_change_score_is_unbiased() {
    let ds = natural(build_randomized_scm(), 200_000, 5);
    let a1 = approach1_change_score(&ds).unwrap();
    let a2 = approach2_ancova(&ds, false).unwrap().coef(cols::X);
    let did = did_means(&ds).unwrap();
    assert!((a1 - 7.0).abs() < 0.15, "{a1}");
    assert!((a2 - 7.0).abs() < 0.15, "{a2}");
    assert!((did - a1).abs() < 1e-8);
}

#[test]
fn zero_model_follow_up_is_null() {
    let ds = natural(build_scm(&PaperCoefficients::zero()).unwrap(), 10_000, 12);
    let x = boy_indicator(&ds).unwrap();
    let fit = ols(ds.column("Y1").unwrap(), &[("X", &x)]).unwrap();
    assert!(fit.coef("X").abs() < 3.0 * fit.se("X"));
    assert_eq!(approach5_follow_up(&ds).unwrap(), fit.coef("X"));
}

#[test]
fn irrelevant_baseline_does_not_move_the_contrast() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 20_000;
    let x: Vec<f64> = (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    let y1: Vec<f64> = x
        .iter()
        .map(|v| 80.0 + 3.0 * v + 10.0 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let y0: Vec<f64> = (0..n).map(|_| 80.0 + 10.0 * rng.sample::<f64, _>(StandardNormal)).collect();
    let ds = Dataset::from_columns([("X", x), ("Y0", y0), ("Y1", y1)], Units::Natural).unwrap();
    let a2 = approach2_ancova(&ds, false).unwrap();
    let a5 = approach5_follow_up(&ds).unwrap();
    assert!((a2.coef("X") - a5).abs() < 2.0 * a2.se("X"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Subtracting Y0 from both sides of the ANCOVA changes only the Y0
    /// coefficient (by exactly one); the change-score regression on binary X
    /// is the group-mean difference-in-difference.
    #[test]
    fn exact_identities(seed in any::<u64>(), n in 20usize..400) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::with_capacity(n);
        let mut y0 = Vec::with_capacity(n);
        let mut y1 = Vec::with_capacity(n);
        for i in 0..n {
            let xi = if i < 2 { [1.0, -1.0][i] } else if rng.random::<bool>() { 1.0 } else { -1.0 };
            let a = 80.0 + 10.0 * rng.sample::<f64, _>(StandardNormal) + 3.0 * xi;
            x.push(xi);
            y0.push(a);
            y1.push(20.0 + 0.6 * a + 2.0 * xi + 8.0 * rng.sample::<f64, _>(StandardNormal));
        }
        let ds = Dataset::from_columns([("X", x), ("Y0", y0), ("Y1", y1)], Units::Natural).unwrap();
        let a2 = approach2_ancova(&ds, false).unwrap();
        let a4 = approach4_change_adjusted(&ds).unwrap();
        prop_assert!((a2.coef("X") - a4.coef("X")).abs() < 1e-8);
        prop_assert!((a2.coef("Y0") - 1.0 - a4.coef("Y0")).abs() < 1e-8);
        prop_assert!((did_means(&ds).unwrap() - approach1_change_score(&ds).unwrap()).abs() < 1e-8);
    }
}
