mod common;

use pairrank::estimator::{fit, FitDetail};
use pairrank::{find_zero_crossing, fit_prl, Error, EstimatorKind, FitSettings};

#[test]
fn dispatch_matches_the_direct_fits() {
    let d = common::extreme_value(40, 3);
    let s = FitSettings { seed: 7, ..Default::default() };

    let e = fit(EstimatorKind::Prl, &d, &s).unwrap();
    let direct = fit_prl(&d, &s.prl()).unwrap();
    assert_eq!(e.beta, direct.beta_hat);
    assert_eq!(e.detail, FitDetail::Sphere(direct));
    assert!(!e.censored);

    let e = fit(EstimatorKind::Score, &d, &s).unwrap();
    assert_eq!(e.detail, FitDetail::ZeroCross(find_zero_crossing(&d, &s.score()).unwrap()));

    let e = fit(EstimatorKind::Cox, &d, &s).unwrap();
    assert!(matches!(e.detail, FitDetail::Cox(_)));
}

#[test]
fn delta_column_selects_the_weighted_variants() {
    let d = common::extreme_value(40, 4);
    let c = d.with_delta((0..40).map(|i| (i % 4 != 0) as u8).collect()).unwrap();
    let s = FitSettings::default();
    for kind in [EstimatorKind::Prl, EstimatorKind::Score, EstimatorKind::Cox] {
        assert!(fit(kind, &c, &s).unwrap().censored, "{kind}");
    }
    assert!(matches!(fit(EstimatorKind::Pdr4, &c, &s), Err(Error::Unsupported { .. })));
}

#[test]
fn settings_reject_unknown_fields() {
    let ok: FitSettings = serde_json::from_str(r#"{"seed": 3, "n_starts": 5}"#).unwrap();
    assert_eq!((ok.seed, ok.n_starts), (3, 5));
    assert!(serde_json::from_str::<FitSettings>(r#"{"seeds": 3}"#).is_err());
    assert!("pdr5".parse::<EstimatorKind>().is_err());
}
