mod common;

use common::*;
use copula_impute::kernels::substream;
use copula_impute::regression::*;
use copula_impute::ChainConfig;
use rand::Rng;

#[test]
fn complete_data_matches_conjugate_posterior() {
    let (y, x1, x2) = dataset(300, 51);
    let t = table(&y, &x1.iter().map(|&v| Some(v)).collect::<Vec<_>>(), &x2);
    let spec = RegressionSpec::new("y", &["x1", "x2"]);
    let draws = gibbs_regress(&t, &spec, &ChainConfig::new(4000, 1, 500, 2)).unwrap();
    assert_eq!(draws.len(), 3500);
    let oracle = closed_form_mean(&y, &x1, &x2, [0.0; 3], [1e-4; 3]);
    for k in 0..3 {
        let c = draws.coefficient(k);
        let se = batch_se(&c);
        assert!((sample_mean(&c) - oracle[k]).abs() < 3.0 * se, "coef {k}");
    }
}

#[test]
fn informative_prior_pulls_the_mean() {
    let (y, x1, x2) = dataset(40, 52);
    let t = table(&y, &x1.iter().map(|&v| Some(v)).collect::<Vec<_>>(), &x2);
    let mut spec = RegressionSpec::new("y", &["x1", "x2"]);
    spec.prior_mean = Some(vec![0.0, 10.0, 0.0]);
    spec.prior_precision = Some(vec![1e-4, 1e3, 1e-4]);
    let draws = gibbs_regress(&t, &spec, &ChainConfig::new(2000, 1, 200, 3)).unwrap();
    let oracle = closed_form_mean(&y, &x1, &x2, [0.0, 10.0, 0.0], [1e-4, 1e3, 1e-4]);
    assert!(oracle[1] > 9.0 && oracle[1] < 10.0);
    for k in 0..3 {
        let c = draws.coefficient(k);
        assert!((sample_mean(&c) - oracle[k]).abs() < 3.0 * batch_se(&c), "coef {k}");
    }
}

#[test]
fn regression_is_seed_deterministic() {
    let (y, x1, x2) = dataset(80, 53);
    let mut rng = substream(53, 1);
    let x1m: Vec<Option<f64>> = x1.iter().map(|&v| (rng.random::<f64>() > 0.2).then_some(v)).collect();
    let t = table(&y, &x1m, &x2);
    let spec = RegressionSpec::new("y", &["x1", "x2"]);
    let cfg = ChainConfig::new(200, 2, 10, 4);
    assert_eq!(gibbs_regress(&t, &spec, &cfg).unwrap(), gibbs_regress(&t, &spec, &cfg).unwrap());
}

#[test]
fn bad_specs_are_config_errors() {
    use copula_impute::ErrorClass;
    let (y, x1, x2) = dataset(30, 54);
    let t = table(&y, &x1.iter().map(|&v| Some(v)).collect::<Vec<_>>(), &x2);
    let cfg = ChainConfig::new(10, 1, 0, 1);
    let bad = [
        RegressionSpec::new("y", &["nope"]),
        RegressionSpec::new("y", &["y"]),
        RegressionSpec { prior_mean: Some(vec![0.0]), ..RegressionSpec::new("y", &["x1"]) },
        RegressionSpec { shape: 0.0, ..RegressionSpec::new("y", &["x1"]) },
    ];
    for spec in bad {
        assert_eq!(gibbs_regress(&t, &spec, &cfg).unwrap_err().class(), ErrorClass::Config);
    }
}

#[test]
fn summaries_and_csv() {
    let (y, x1, x2) = dataset(50, 55);
    let t = table(&y, &x1.iter().map(|&v| Some(v)).collect::<Vec<_>>(), &x2);
    let draws = gibbs_regress(&t, &RegressionSpec::new("y", &["x1"]), &ChainConfig::new(100, 1, 10, 5)).unwrap();
    let s = summarize_posterior(&draws, 0.9).unwrap();
    let names: Vec<&str> = s.iter().map(|p| p.parameter.as_str()).collect();
    assert_eq!(names, [INTERCEPT, "x1", ERROR_VARIANCE]);
    assert!(s.iter().all(|p| p.lower <= p.mean && p.mean <= p.upper && p.sd > 0.0));
    let mut buf = Vec::new();
    draws.write_csv(&mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 90 * 3);
}
