//! Numerical checks of the analytic structure of the inner-loop updates:
//! the logistic-regression step stays in the span of the support, the first
//! HyperClass step decomposes into a projected and a support-aligned part,
//! several steps stay inside a small family of support-derived directions,
//! and the analytic gradients agree with central finite differences.
//!
//! Everything here runs in `f64`. Trials draw from per-trial seeds and may run
//! in parallel; results are collected in trial order.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::lr_step;
use crate::episode::derive_seed;
use crate::error::{Error, Result};
use crate::hyperclass::{
    adapt, bce_objective, grads, AdaptConfig, HyperClassParams, ParamSet, TransductiveLoss,
};
use crate::linear::{dot, norm, sigmoid, FeatureSet, LabeledSet, LinearClassifier};

/// Exact algebraic identities.
pub const TOL_IDENTITY: f64 = 1e-10;
/// Span-membership residuals.
pub const TOL_SPAN: f64 = 1e-8;
/// Least-squares fits and finite differences.
pub const TOL_FIT: f64 = 1e-6;
/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    /// Worst residual over trials; `pass` ⇔ `residual <= tolerance`.
    pub residual: f64,
    pub median_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub trials: usize,
}

impl CheckResult {
    fn from_residuals(name: &str, residuals: &[f64], tolerance: f64) -> Self {
        let residual = residuals.iter().copied().fold(0.0, f64::max);
        let residual = if residuals.iter().any(|r| r.is_nan()) {
            f64::NAN
        } else {
            residual
        };
        Self {
            name: name.into(),
            residual,
            median_residual: median(residuals),
            tolerance,
            pass: residual <= tolerance,
            trials: residuals.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryCheckReport {
    pub name: String,
    pub dim: usize,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl TheoryCheckReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, trial as u64))
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

fn random_params(rng: &mut ChaCha8Rng, d: usize) -> HyperClassParams {
    let s = 1.0 / (d as f64).sqrt();
    HyperClassParams {
        dim: d,
        v: gaussian(rng, d, s),
        p: gaussian(rng, d * d, s),
        b: gaussian(rng, d, s),
    }
}

/// `n` Gaussian samples, labels alternating from positive.
fn random_support(rng: &mut ChaCha8Rng, d: usize, n: usize) -> LabeledSet {
    let mut s = LabeledSet::new(d);
    for k in 0..n {
        s.push(&gaussian(rng, d, 1.0), k % 2 == 0).expect("matching dims");
    }
    s
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Component of `y` orthogonal to the column span of `cols` (full column rank).
fn out_of_span(cols: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let d = y.len();
    let a = DMatrix::from_fn(d, cols.len(), |i, j| cols[j][i]);
    let q = a.qr().q();
    let yv = DVector::from_column_slice(y);
    let proj = &q * (q.transpose() * &yv);
    (yv - proj).iter().copied().collect()
}

fn check_dim(dim: usize, trials: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::InvalidConfig(
            "span checks need dim >= 2 to be informative".into(),
        ));
    }
    if trials < 1 {
        return Err(Error::InvalidConfig("at least one trial is required".into()));
    }
    Ok(())
}

/// Logistic-regression step: (a) one gradient step equals the closed form
/// `(1/n)[Σ_pos αx − Σ_neg (1−α)x]` with `α = 1 − σ(Wᵀx)`; (b) the change has
/// no component outside the span of the support.
pub fn check_lr_update(dim: usize, trials: usize, seed: u64) -> Result<TheoryCheckReport> {
    check_dim(dim, trials)?;
    let rows: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let n = rng.random_range(1..dim);
            let support = random_support(&mut rng, dim, n);
            let w0 = gaussian(&mut rng, dim, 1.0);
            let mut clf = LinearClassifier::new(w0.clone());
            lr_step(&mut clf, &support, 1.0, 0.0)?;
            let dw = sub(&clf.weights, &w0);
            let mut closed = vec![0.0; dim];
            for (x, y) in support.iter() {
                let alpha = 1.0 - sigmoid(dot(&w0, x));
                let c = if y { alpha } else { -(1.0 - alpha) } / n as f64;
                for (o, xi) in closed.iter_mut().zip(x) {
                    *o += c * xi;
                }
            }
            let identity = max_abs(&sub(&dw, &closed)) / max_abs(&closed).max(1.0);
            let cols: Vec<Vec<f64>> = support.features().rows().map(<[f64]>::to_vec).collect();
            let span = norm(&out_of_span(&cols, &dw)) / norm(&dw).max(f64::MIN_POSITIVE);
            Ok((identity, span))
        })
        .collect::<Result<_>>()?;
    let (a, b): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
    Ok(TheoryCheckReport {
        name: "lr_update".into(),
        dim,
        seed,
        checks: vec![
            CheckResult::from_residuals("closed_form_step", &a, TOL_IDENTITY),
            CheckResult::from_residuals("support_span_residual", &b, TOL_SPAN),
        ],
    })
}

fn single(x: &[f64], y: bool) -> LabeledSet {
    let mut s = LabeledSet::new(x.len());
    s.push(x, y).expect("matching dims");
    s
}

fn first_step_config() -> AdaptConfig {
    AdaptConfig {
        steps: 1,
        inner_lr: 1.0,
        l2_weight: 0.0,
        adapt_set: ParamSet::ALL,
        ..AdaptConfig::default()
    }
}

/// Predicted first-step change `λP₀P₀ᵀx + Cx`, `C = λ(‖v₀‖²+1) + λ²v₀ᵀP₀ᵀx`,
/// and its projected part `λP₀P₀ᵀx`.
pub fn hc_first_step_prediction(params: &HyperClassParams, x: &[f64], positive: bool) -> (Vec<f64>, Vec<f64>) {
    let z = dot(&params.composed_weights(), x);
    let alpha = 1.0 - sigmoid(z);
    let lambda = if positive { alpha } else { alpha - 1.0 };
    let ptx = params.pt_mul(x);
    let ppt: Vec<f64> = params.p_mul(&ptx).iter().map(|u| lambda * u).collect();
    let vv = dot(&params.v, &params.v);
    let c = lambda * (vv + 1.0) + lambda * lambda * dot(&params.v, &ptx);
    let full = ppt.iter().zip(x).map(|(u, xi)| u + c * xi).collect();
    (full, ppt)
}

fn orthonormal(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = a.qr().q();
    (0..d * d).map(|k| q[(k / d, k % d)]).collect()
}

/// First HyperClass step from a single sample (`lr = 1`, no L2, all blocks
/// adapted), on alternating positive and negative samples: the observed
/// change equals the closed form; its part orthogonal to `x` equals that of
/// `λP₀P₀ᵀx`; and with an orthogonal `P₀` the change is colinear with `x`.
pub fn check_hc_first_step(dim: usize, trials: usize, seed: u64) -> Result<TheoryCheckReport> {
    check_dim(dim, trials)?;
    let cfg = first_step_config();
    let rows: Vec<[f64; 3]> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let positive = t % 2 == 0;
            let params = random_params(&mut rng, dim);
            let x = gaussian(&mut rng, dim, 1.0);
            let observed = sub(&adapt(&params, &single(&x, positive), &cfg)?.composed_weights(), &params.composed_weights());
            let (pred, ppt) = hc_first_step_prediction(&params, &x, positive);
            let identity = max_abs(&sub(&observed, &pred)) / max_abs(&pred).max(1.0);
            let col = vec![x.clone()];
            let off = sub(&out_of_span(&col, &observed), &out_of_span(&col, &ppt));
            let off_span = norm(&off) / norm(&observed).max(1.0);

            let ortho = HyperClassParams {
                p: orthonormal(&mut rng, dim),
                ..params
            };
            let dw = sub(&adapt(&ortho, &single(&x, positive), &cfg)?.composed_weights(), &ortho.composed_weights());
            let along = dot(&dw, &x).abs() / norm(&x);
            let across = norm(&out_of_span(&col, &dw));
            Ok([identity, off_span, across.atan2(along)])
        })
        .collect::<Result<_>>()?;
    let col = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<_>>();
    Ok(TheoryCheckReport {
        name: "hc_first_step".into(),
        dim,
        seed,
        checks: vec![
            CheckResult::from_residuals("closed_form_step", &col(0), TOL_IDENTITY),
            CheckResult::from_residuals("out_of_span_component", &col(1), TOL_SPAN),
            CheckResult::from_residuals("orthogonal_p_angle_rad", &col(2), TOL_SPAN),
        ],
    })
}

/// Least-squares fit of `W_k − W₀` onto the five direction families
/// `{W₀, P₀P₀ᵀx_i, x_i, ΣW₀, ΣP₀P₀ᵀx_i}`, with `Σ = X̃ᵀX̃` built from
/// zero-centered support features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KStepDecomposition {
    pub k: usize,
    /// Coefficient of `W₀`.
    pub beta0: f64,
    pub beta1: Vec<f64>,
    pub beta2: Vec<f64>,
    pub beta3: f64,
    pub beta4: Vec<f64>,
    pub relative_residual: f64,
    /// Residual of the fit without the two `Σ` families.
    pub reduced_residual: f64,
    pub numerical_rank: usize,
    pub columns: usize,
    /// `σ_max / σ_min` over all singular values of the basis.
    pub condition_number: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KStepReport {
    pub dim: usize,
    pub support_size: usize,
    pub k: usize,
    pub seed: u64,
    pub fit: CheckResult,
    /// Trials in which dropping the `Σ` families raised the residual by more
    /// than round-off.
    pub reduced_strictly_larger: usize,
    pub trials: Vec<KStepDecomposition>,
}

impl KStepReport {
    pub fn strictly_larger_fraction(&self) -> f64 {
        self.reduced_strictly_larger as f64 / self.trials.len() as f64
    }
}

/// Margin by which the reduced residual must exceed the full one to count
/// as strictly larger rather than round-off.
pub const STRICT_MARGIN: f64 = 1e-9;

struct Fit {
    coef: Vec<f64>,
    relative_residual: f64,
    rank: usize,
    condition: f64,
}

/// Minimum-norm least squares through a rank-truncated SVD.
fn lstsq(cols: &[Vec<f64>], y: &[f64]) -> Fit {
    let d = y.len();
    let m = cols.len();
    let a = DMatrix::from_fn(d, m, |i, j| cols[j][i]);
    let svd = a.clone().svd(true, true);
    let s_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let s_min = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    let eps = (d.max(m) as f64) * f64::EPSILON * s_max;
    let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
    let yv = DVector::from_column_slice(y);
    let beta = svd.solve(&yv, eps).expect("u and v were computed");
    let r = &a * &beta - &yv;
    Fit {
        coef: beta.iter().copied().collect(),
        relative_residual: r.norm() / yv.norm().max(f64::MIN_POSITIVE),
        rank,
        condition: if s_min > 0.0 { s_max / s_min } else { f64::INFINITY },
    }
}

fn kstep_trial(dim: usize, n: usize, k: usize, rng: &mut ChaCha8Rng) -> Result<KStepDecomposition> {
    // the W₀ family stands in for P₀v₀, which requires b₀ = 0
    let params = HyperClassParams {
        b: vec![0.0; dim],
        ..random_params(rng, dim)
    };
    let support = random_support(rng, dim, n);
    let cfg = AdaptConfig {
        steps: k,
        inner_lr: 0.5,
        l2_weight: 0.0,
        adapt_set: ParamSet::ALL,
        ..AdaptConfig::default()
    };
    let w0 = params.composed_weights();
    let target = sub(&adapt(&params, &support, &cfg)?.composed_weights(), &w0);

    let xs: Vec<Vec<f64>> = support.features().rows().map(<[f64]>::to_vec).collect();
    let mean = support.features().mean().expect("non-empty support");
    let centered: Vec<Vec<f64>> = xs.iter().map(|x| sub(x, &mean)).collect();
    let sigma = |u: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for c in &centered {
            let s = dot(c, u);
            for (o, ci) in out.iter_mut().zip(c) {
                *o += s * ci;
            }
        }
        out
    };
    let ppt: Vec<Vec<f64>> = xs.iter().map(|x| params.p_mul(&params.pt_mul(x))).collect();
    let mut cols = vec![w0.clone()];
    cols.extend(ppt.iter().cloned());
    cols.extend(xs.iter().cloned());
    let reduced = lstsq(&cols, &target);
    cols.push(sigma(&w0));
    cols.extend(ppt.iter().map(|u| sigma(u)));
    let full = lstsq(&cols, &target);
    let c = &full.coef;
    Ok(KStepDecomposition {
        k,
        beta0: c[0],
        beta1: c[1..1 + n].to_vec(),
        beta2: c[1 + n..1 + 2 * n].to_vec(),
        beta3: c[1 + 2 * n],
        beta4: c[2 + 2 * n..].to_vec(),
        relative_residual: full.relative_residual,
        reduced_residual: reduced.relative_residual,
        numerical_rank: full.rank,
        columns: cols.len(),
        condition_number: full.condition,
    })
}

/// Fit `k`-step adapted weights (all blocks, `b₀ = 0`, no L2) onto the five
/// direction families; pass when every relative residual is at most
/// [`TOL_FIT`]. The basis is rank deficient by construction, so the fit uses
/// a truncated pseudo-inverse and reports rank and conditioning instead of
/// redrawing.
pub fn check_kstep_span(dim: usize, support_size: usize, k: usize, trials: usize, seed: u64) -> Result<KStepReport> {
    check_dim(dim, trials)?;
    if !(1..=5).contains(&k) {
        return Err(Error::InvalidConfig("k must lie in 1..=5".into()));
    }
    if support_size < 1 || support_size >= dim {
        return Err(Error::InvalidConfig(
            "support_size must be in 1..dim for the span test to be informative".into(),
        ));
    }
    let stream = derive_seed(seed, k as u64);
    let trials: Vec<KStepDecomposition> = (0..trials)
        .into_par_iter()
        .map(|t| kstep_trial(dim, support_size, k, &mut trial_rng(stream, t)))
        .collect::<Result<_>>()?;
    let residuals: Vec<f64> = trials.iter().map(|t| t.relative_residual).collect();
    let strictly = trials
        .iter()
        .filter(|t| t.reduced_residual > t.relative_residual + STRICT_MARGIN)
        .count();
    Ok(KStepReport {
        dim,
        support_size,
        k,
        seed,
        fit: CheckResult::from_residuals(&format!("k{k}_span_residual"), &residuals, TOL_FIT),
        reduced_strictly_larger: strictly,
        trials,
    })
}

/// Blockwise relative error `‖a − f‖∞ / max(‖a‖∞, ‖f‖∞)`, worst block.
fn rel_error(analytic: [&[f64]; 3], numeric: [&[f64]; 3]) -> f64 {
    analytic
        .iter()
        .zip(numeric.iter())
        .map(|(a, f)| {
            let scale = max_abs(a).max(max_abs(f));
            let diff = max_abs(&sub(a, f));
            if scale < 1e-12 {
                diff
            } else {
                diff / scale
            }
        })
        .fold(0.0, f64::max)
}

fn block_mut(q: &mut HyperClassParams, block: usize) -> &mut Vec<f64> {
    match block {
        0 => &mut q.v,
        1 => &mut q.p,
        _ => &mut q.b,
    }
}

/// Central differences of `f` over every coordinate of `(v, P, b)`.
fn finite_differences(params: &HyperClassParams, f: &dyn Fn(&HyperClassParams) -> f64) -> [Vec<f64>; 3] {
    let mut p = params.clone();
    let mut out = [Vec::new(), Vec::new(), Vec::new()];
    for (block, slot) in out.iter_mut().enumerate() {
        for i in 0..block_mut(&mut p, block).len() {
            let orig = block_mut(&mut p, block)[i];
            block_mut(&mut p, block)[i] = orig + FD_STEP;
            let up = f(&p);
            block_mut(&mut p, block)[i] = orig - FD_STEP;
            let down = f(&p);
            block_mut(&mut p, block)[i] = orig;
            slot.push((up - down) / (2.0 * FD_STEP));
        }
    }
    out
}

fn to_features(s: &LabeledSet, label: bool) -> FeatureSet {
    s.with_label(label)
}

/// Analytic gradients against central differences for the BCE objective,
/// BCE + L2, the transductive objective (both unlabeled-term variants), the
/// `v = 0` structural zero of `∇P`, and the transductive loss at `W = 0`.
pub fn gradcheck_all(dim: usize, trials: usize, seed: u64) -> Result<TheoryCheckReport> {
    if dim < 1 || dim > 16 {
        return Err(Error::InvalidConfig(
            "finite-difference checks are limited to 1 <= dim <= 16".into(),
        ));
    }
    if trials < 1 {
        return Err(Error::InvalidConfig("at least one trial is required".into()));
    }
    let rows: Vec<[f64; 6]> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let params = random_params(&mut rng, dim);
            let batch = random_support(&mut rng, dim, 6);
            let mut out = [0.0; 6];
            for (slot, l2) in [(0usize, 0.0), (1, 1e-2)] {
                let g = grads(&params, &batch, l2)?;
                let fd = finite_differences(&params, &|q| bce_objective(q, &batch, l2));
                out[slot] = rel_error([&g.dv, &g.dp, &g.db], [&fd[0], &fd[1], &fd[2]]);
            }
            let support = to_features(&random_support(&mut rng, dim, 3), true);
            let unlabeled = to_features(&random_support(&mut rng, dim, 5), true);
            for (slot, full_entropy) in [(2usize, false), (3, true)] {
                let loss = TransductiveLoss {
                    entropy_weight: 0.5,
                    full_entropy,
                };
                let g = loss.grads(&params, &support, &unlabeled, 1e-3)?;
                let fd = finite_differences(&params, &|q| {
                    loss.objective(q, &support, &unlabeled, 1e-3).expect("validated shapes")
                });
                out[slot] = rel_error([&g.dv, &g.dp, &g.db], [&fd[0], &fd[1], &fd[2]]);
            }
            // v = 0 makes ∇P vanish identically
            let zero_v = HyperClassParams {
                v: vec![0.0; dim],
                ..params.clone()
            };
            let g = grads(&zero_v, &batch, 0.0)?;
            let fd = finite_differences(&zero_v, &|q| bce_objective(q, &batch, 0.0));
            out[4] = max_abs(&g.dp).max(max_abs(&fd[1]));
            // W = 0: every query probability is 1/2
            let zero = HyperClassParams::zeros(dim);
            let loss = TransductiveLoss::default();
            let value = loss.objective(&zero, &support, &unlabeled, 0.0)?;
            let ln2 = std::f64::consts::LN_2;
            let g = loss.grads(&zero, &support, &unlabeled, 0.0)?;
            let fd = finite_differences(&zero, &|q| loss.objective(q, &support, &unlabeled, 0.0).expect("validated shapes"));
            out[5] = (value - (0.5 * ln2 + ln2 / 4.0))
                .abs()
                .max(rel_error([&g.dv, &g.dp, &g.db], [&fd[0], &fd[1], &fd[2]]));
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let col = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<_>>();
    Ok(TheoryCheckReport {
        name: "gradcheck".into(),
        dim,
        seed,
        checks: vec![
            CheckResult::from_residuals("bce", &col(0), TOL_FIT),
            CheckResult::from_residuals("bce_l2", &col(1), TOL_FIT),
            CheckResult::from_residuals("transductive", &col(2), TOL_FIT),
            CheckResult::from_residuals("transductive_full_entropy", &col(3), TOL_FIT),
            CheckResult::from_residuals("zero_v_dp_abs", &col(4), TOL_SPAN),
            CheckResult::from_residuals("transductive_at_half", &col(5), TOL_FIT),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lr_step_on_e1_is_half_e1() {
        let mut clf = LinearClassifier::zeros(3);
        lr_step(&mut clf, &single(&[1.0, 0.0, 0.0], true), 1.0, 0.0).unwrap();
        assert_eq!(clf.weights, vec![0.5, 0.0, 0.0]);
    }

    #[test]
    fn first_step_prediction_at_identity() {
        // v = 0, P = I, b = 0, x = e₁ positive: λ = 1/2, C = 1/2, ΔW = e₁
        let params = HyperClassParams {
            v: vec![0.0; 3],
            ..HyperClassParams::identity(3)
        };
        let (pred, _) = hc_first_step_prediction(&params, &[1.0, 0.0, 0.0], true);
        assert_eq!(pred, vec![1.0, 0.0, 0.0]);
        let observed = adapt(&params, &single(&[1.0, 0.0, 0.0], true), &first_step_config())
            .unwrap()
            .composed_weights();
        assert_eq!(observed, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn small_runs_pass() {
        assert!(check_lr_update(6, 10, 1).unwrap().pass());
        assert!(check_hc_first_step(6, 10, 1).unwrap().pass());
        assert!(gradcheck_all(5, 4, 1).unwrap().pass());
        let k1 = check_kstep_span(8, 3, 1, 5, 1).unwrap();
        assert!(k1.fit.residual <= TOL_IDENTITY);
        assert!(check_kstep_span(8, 3, 3, 5, 1).unwrap().fit.pass);
    }

    #[test]
    fn preconditions() {
        assert!(check_lr_update(1, 5, 0).is_err());
        assert!(check_kstep_span(8, 8, 2, 5, 0).is_err());
        assert!(check_kstep_span(8, 3, 6, 5, 0).is_err());
        assert!(gradcheck_all(32, 1, 0).is_err());
    }

    #[test]
    fn median_and_nan_handling() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        let r = CheckResult::from_residuals("x", &[0.0, f64::NAN], 1.0);
        assert!(!r.pass);
    }
}
