//! Full-size runs of the analytic checks plus hand-evaluated cases.

use hyperclass::baselines::lr_step;
use hyperclass::hyperclass::{adapt, AdaptConfig, HyperClassParams, ParamSet};
use hyperclass::linear::{LabeledSet, LinearClassifier};
use hyperclass::theory::{
    check_hc_first_step, check_kstep_span, check_lr_update, gradcheck_all, hc_first_step_prediction,
    TOL_FIT, TOL_IDENTITY, TOL_SPAN,
};

fn find<'a>(r: &'a hyperclass::theory::TheoryCheckReport, name: &str) -> &'a hyperclass::theory::CheckResult {
    r.checks.iter().find(|c| c.name == name).unwrap_or_else(|| panic!("no check {name}"))
}

#[test]
fn gradients_match_finite_differences() {
    let r = gradcheck_all(16, 200, 0).unwrap();
    for name in ["bce", "bce_l2", "transductive"] {
        let c = find(&r, name);
        assert_eq!(c.trials, 200);
        assert!(c.residual <= TOL_FIT, "{name}: {}", c.residual);
    }
    assert!(r.pass(), "{r:#?}");
}

#[test]
fn lr_update_identity_and_span() {
    let r = check_lr_update(16, 200, 0).unwrap();
    assert!(r.pass(), "{r:#?}");
    assert!(r.checks.iter().all(|c| c.trials == 200));
    assert!(r.checks.iter().any(|c| c.tolerance == TOL_IDENTITY));
    assert!(r.checks.iter().any(|c| c.tolerance == TOL_SPAN));
}

#[test]
fn lr_step_hand_case() {
    let mut s = LabeledSet::new(4);
    s.push(&[1.0, 0.0, 0.0, 0.0], true).unwrap();
    let mut clf = LinearClassifier::zeros(4);
    lr_step(&mut clf, &s, 1.0, 0.0).unwrap();
    assert_eq!(clf.weights, vec![0.5, 0.0, 0.0, 0.0]);
    assert!(check_lr_update(1, 10, 0).is_err());
}

#[test]
fn hyperclass_first_step_identity() {
    let r = check_hc_first_step(16, 200, 0).unwrap();
    assert!(r.pass(), "{r:#?}");
}

#[test]
fn first_step_hand_cases() {
    let step = AdaptConfig {
        steps: 1,
        inner_lr: 1.0,
        l2_weight: 0.0,
        adapt_set: ParamSet::ALL,
        ..AdaptConfig::default()
    };
    let one = |x: &[f64], y: bool| {
        let mut s = LabeledSet::new(x.len());
        s.push(x, y).unwrap();
        s
    };
    // v₀ = 0, P₀ = I, x = e₁ positive → ΔW = e₁
    let p = HyperClassParams {
        v: vec![0.0; 3],
        ..HyperClassParams::identity(3)
    };
    let w = adapt(&p, &one(&[1.0, 0.0, 0.0], true), &step).unwrap().composed_weights();
    assert_eq!(w, vec![1.0, 0.0, 0.0]);
    // negative sample: λ = α − 1 = −1/2 at W = 0
    let w = adapt(&p, &one(&[1.0, 0.0, 0.0], false), &step).unwrap().composed_weights();
    assert_eq!(w, vec![-1.0, 0.0, 0.0]);

    // general parameters, both labels: prediction equals the observed step
    let q = HyperClassParams {
        dim: 2,
        v: vec![0.4, -0.3],
        p: vec![0.9, 0.2, -0.1, 1.1],
        b: vec![0.05, -0.02],
    };
    for y in [true, false] {
        let x = [0.7, -0.5];
        let (pred, _) = hc_first_step_prediction(&q, &x, y);
        let w0 = q.composed_weights();
        let w1 = adapt(&q, &one(&x, y), &step).unwrap().composed_weights();
        for i in 0..2 {
            assert!((w1[i] - w0[i] - pred[i]).abs() <= TOL_IDENTITY);
        }
    }
}

#[test]
fn kstep_span_fits_the_term_families() {
    let k1 = check_kstep_span(16, 4, 1, 50, 0).unwrap();
    assert!(k1.fit.residual <= TOL_IDENTITY, "k=1 residual {}", k1.fit.residual);
    for k in 2..=5 {
        let r = check_kstep_span(16, 4, k, 100, 0).unwrap();
        assert_eq!(r.trials.len(), 100);
        assert!(r.fit.pass, "k={k}: residual {}", r.fit.residual);
        for t in &r.trials {
            assert!(t.relative_residual >= 0.0);
            assert!(t.reduced_residual + 1e-12 >= t.relative_residual);
            assert_eq!(t.beta1.len(), 4);
        }
    }
}

#[test]
fn theory_checks_are_seed_reproducible() {
    let a = check_kstep_span(12, 3, 3, 10, 5).unwrap();
    let b = check_kstep_span(12, 3, 3, 10, 5).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let a = gradcheck_all(8, 10, 5).unwrap();
    let b = gradcheck_all(8, 10, 5).unwrap();
    assert_eq!(a, b);
}
