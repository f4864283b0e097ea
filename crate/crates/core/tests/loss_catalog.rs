mod common;

use common::{fd_delta, psi};
use proptest::prelude::*;
use relf_core::loss::{EnsembleSpec, LossError, LossKind, LossSpec};

fn any_kind() -> impl Strategy<Value = LossKind> {
    prop::sample::select(LossKind::ALL.to_vec())
}

fn any_loss() -> impl Strategy<Value = LossSpec> {
    (any_kind(), 0.1f64..10.0).prop_map(|(kind, s)| {
        if kind.uses_scale() {
            LossSpec::new(kind, s).unwrap()
        } else {
            LossSpec::with_default_scale(kind)
        }
    })
}

proptest! {
    #[test]
    fn phi_and_delta_are_even(loss in any_loss(), e in -1e3f64..1e3) {
        prop_assert_eq!(loss.phi(e), loss.phi(-e));
        prop_assert_eq!(loss.delta(e), loss.delta(-e));
    }

    #[test]
    fn phi_is_zero_at_origin_and_nonnegative(loss in any_loss(), e in -1e3f64..1e3) {
        prop_assert_eq!(loss.phi(0.0), 0.0);
        prop_assert!(loss.phi(e) >= 0.0);
    }

    #[test]
    fn delta_is_positive_and_non_increasing(loss in any_loss(), a in 0.0f64..50.0, b in 0.0f64..50.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(loss.delta(hi) > 0.0 || loss.kind == LossKind::Welsch);
        prop_assert!(loss.delta(hi) <= loss.delta(lo) * (1.0 + 1e-12));
    }

    #[test]
    fn delta_matches_written_out_influence(loss in any_loss(), e in prop_oneof![-20.0f64..-1e-3, 1e-3f64..20.0]) {
        let expect = psi(&loss, e) / e;
        prop_assert!((loss.delta(e) - expect).abs() <= 1e-12 * expect.abs().max(1.0));
    }

    #[test]
    fn delta_times_residual_is_derivative(loss in any_loss(), e in -20.0f64..20.0) {
        prop_assert!((loss.derivative(e) - psi(&loss, e)).abs() <= 1e-12 * psi(&loss, e).abs().max(1.0));
    }

    #[test]
    fn loss_text_round_trips(loss in any_loss()) {
        let back: LossSpec = loss.to_string().parse().unwrap();
        prop_assert_eq!(back, loss);
    }

    #[test]
    fn ensemble_text_round_trips(picks in prop::sample::subsequence(vec![0usize, 1, 2, 3, 4], 1..=5), s in 0.2f64..5.0) {
        let losses: Vec<LossSpec> = picks
            .iter()
            .map(|&i| {
                let kind = LossKind::ALL[i];
                LossSpec::new(kind, if kind.uses_scale() { s } else { 1.0 }).unwrap()
            })
            .collect();
        let ens = EnsembleSpec::new(losses).unwrap();
        let back: EnsembleSpec = ens.to_string().parse().unwrap();
        prop_assert_eq!(back, ens);
    }
}

#[test]
fn finite_difference_grid() {
    for kind in LossKind::ALL {
        let scales: &[f64] = if kind.uses_scale() {
            &[0.5, 1.0, 2.0]
        } else {
            &[1.0]
        };
        for &scale in scales {
            let loss = LossSpec::new(kind, scale).unwrap();
            for k in (-1000..=1000).filter(|&k| k != 0) {
                let e = f64::from(k) * 0.01;
                let diff = (loss.delta(e) - fd_delta(&loss, e, 1e-6)).abs();
                assert!(diff <= 1e-5, "{loss} at {e}: {diff}");
            }
        }
    }
}

#[test]
fn welsch_decays_beyond_six_scales() {
    for sigma in [0.5, 1.0, 1.5, 3.0] {
        let loss = LossSpec::welsch(sigma);
        let at_zero = loss.delta(0.0);
        for m in [6.0, 7.5, 10.0, 100.0] {
            assert!(loss.delta(m * sigma) <= 1e-6 * at_zero);
            assert!(loss.delta(-m * sigma) <= 1e-6 * at_zero);
        }
    }
}

#[test]
fn boundedness_split() {
    for kind in LossKind::ALL {
        let loss = LossSpec::with_default_scale(kind);
        if kind == LossKind::Welsch {
            assert!(loss.phi(1e6) <= 1.0);
            assert!(loss.phi(1e300) <= 1.0);
        } else {
            assert!(loss.phi(1e6) > 1e3, "{loss}");
        }
    }
}

#[test]
fn delta_at_zero_is_the_limit() {
    for kind in LossKind::ALL {
        for scale in [0.5, 1.0, 2.0] {
            let Ok(loss) = LossSpec::new(kind, scale) else {
                continue;
            };
            let near = loss.delta(1e-7);
            assert!((loss.delta(0.0) - near).abs() <= 1e-6 * near, "{loss}");
            assert_eq!(loss.delta(0.0), loss.delta_at_zero());
        }
    }
}

#[test]
fn extreme_residuals_stay_finite() {
    for kind in LossKind::ALL {
        let loss = LossSpec::with_default_scale(kind);
        for e in [1e-300, 1e-8, 1e8, 1e154, 1e300] {
            assert!(loss.phi(e).is_finite(), "{loss} phi({e})");
            assert!(
                loss.delta(e).is_finite() && loss.delta(e) >= 0.0,
                "{loss} delta({e})"
            );
        }
    }
}

#[test]
fn ensemble_parse_errors() {
    assert!(matches!(
        "".parse::<EnsembleSpec>(),
        Err(LossError::EmptyEnsemble)
    ));
    assert!(matches!(
        "welsch,welsch".parse::<EnsembleSpec>(),
        Err(LossError::DuplicateLoss(_))
    ));
    assert!("welsch:1,welsch:2".parse::<EnsembleSpec>().is_ok());
    assert!(matches!(
        "welsch:0".parse::<EnsembleSpec>(),
        Err(LossError::NonPositiveScale { .. })
    ));
    assert!(matches!(
        "cauchy".parse::<EnsembleSpec>(),
        Err(LossError::UnknownKind(_))
    ));
    assert!(matches!(
        "l1l2:2".parse::<EnsembleSpec>(),
        Err(LossError::ScaleNotApplicable(_))
    ));
    assert!("welsch:abc".parse::<EnsembleSpec>().is_err());
}
