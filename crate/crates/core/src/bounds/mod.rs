//! Ergodicity, concentration and truncation bounds.
//!
//! Everything here is driven by a weight sequence `{d_k}` (see
//! [`WeightSequence`]) and the column-sum functions `β**_k(t)` of the
//! similarity-transformed reduced generator. Their infimum over `k`,
//! `β**(t)`, is the logarithmic-norm decay rate: solutions from two initial
//! distributions approach each other at least as fast as
//! `exp(-∫ β**(u) du)` in the `D`-weighted norm.
//!
//! A pair `(M, β)` with `exp(-∫_s^t β**) <= M·exp(-β(t-s))` ([`EnvelopeConstants`])
//! turns the time integral into closed forms for the tail bounds and the
//! truncation bound.

mod weights;

use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::model::Rates;
use crate::solver::ProbabilitySnapshot;

pub use weights::WeightSequence;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("invalid weight sequence: {0}")]
    InvalidWeights(String),
    #[error("malformed weight document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("not ergodic with these weights: fitted beta = {beta}")]
    NotErgodicWithTheseWeights { beta: f64 },
    #[error("invalid envelope constants M = {m}, beta = {beta}")]
    InvalidEnvelope { m: f64, beta: f64 },
    #[error("truncation window ({n1}, {n2}) must satisfy n1 < 0 < n2")]
    InvalidWindow { n1: i64, n2: i64 },
    #[error("truncation accuracy not achievable: {0}")]
    NotAchievable(String),
    #[error("weight quotient still decreasing at k = {k_probe}; raise the probe depth")]
    DecreasingQuotient { k_probe: i64 },
    #[error("mean-error bound needs weight ratios >= 1 on both sides")]
    VoidMeanBound,
}

/// `M ≥ 1`, `β > 0` with `exp(-∫_s^t β**(u) du) <= M·exp(-β(t-s))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopeConstants {
    pub m: f64,
    pub beta: f64,
}

impl EnvelopeConstants {
    pub fn new(m: f64, beta: f64) -> Result<Self, BoundsError> {
        if !(m.is_finite() && m >= 1.0 && beta.is_finite() && beta > 0.0) {
            return Err(BoundsError::InvalidEnvelope { m, beta });
        }
        Ok(EnvelopeConstants { m, beta })
    }

    /// `M·exp(-β·t)`
    pub fn decay(&self, t: f64) -> f64 {
        self.m * (-self.beta * t).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeStrategy {
    /// `β = min_t β**(t)`, `M = 1`.
    Pointwise,
    /// `β` = period mean of `β**`, `M` absorbs the worst excursion below it.
    PeriodAverage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Contraction,
    TailLeft,
    TailRight,
    TailTwoSided,
    Truncation,
    MeanError,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    #[serde(serialize_with = "exact_decimal")]
    pub value: f64,
    pub inputs_digest: String,
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} = {:e} [{}]", self.kind, self.value, self.inputs_digest)
    }
}

fn exact_decimal<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{v:e}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailSide {
    Left,
    Right,
    Both,
}

/// Grid resolution per period for envelope fitting.
pub const ENVELOPE_GRID: usize = 10_000;
const GOLDEN_TOL: f64 = 1e-12;

/// `β**_k(t)`, the negated `k`-th column sum of the weighted reduced generator.
///
/// May be negative; only the time integral of the infimum needs to diverge.
pub fn beta_kk(rates: &impl Rates, w: &WeightSequence, k: i64, t: f64) -> f64 {
    assert!(k != 0, "beta_kk is defined for k != 0");
    let lam = |i| rates.birth_rate(i, t);
    let mu = |i| rates.death_rate(i, t);
    match k {
        k if k < -1 => lam(k) + mu(k + 1) - w.ratio(k + 1, k) * lam(k + 1) - w.ratio(k - 1, k) * mu(k),
        -1 => lam(-1) + mu(0) - w.ratio(1, -1) * lam(0) - w.ratio(-2, -1) * mu(-1),
        1 => lam(0) + mu(1) - w.ratio(2, 1) * lam(1) - w.ratio(-1, 1) * mu(0),
        k => lam(k - 1) + mu(k) - w.ratio(k + 1, k) * lam(k) - w.ratio(k - 1, k) * mu(k - 1),
    }
}

/// Indices `k` whose `β**_k` values cover every distinct value; beyond
/// `max(K0, H) + 1` both rates and weight ratios stop depending on `k`.
fn distinct_indices(rates: &impl Rates, w: &WeightSequence) -> Vec<i64> {
    let reach = w.head_len().max(rates.horizon()) + 2;
    let mut ks: Vec<i64> = (-reach..=reach).filter(|k| *k != 0).collect();
    if let Some((n1, n2)) = rates.window() {
        ks.retain(|k| (n1..=n2).contains(k));
        ks.extend(
            [n1, n1 + 1, n2 - 1, n2]
                .into_iter()
                .filter(|k| *k != 0 && (n1..=n2).contains(k)),
        );
        ks.sort_unstable();
        ks.dedup();
    }
    ks
}

/// `β**(t) = inf_{k≠0} β**_k(t)`, evaluated exactly.
///
/// For a truncated model the infimum runs over the window only: coordinates
/// outside it are identically zero.
pub fn beta_inf(rates: &impl Rates, w: &WeightSequence, t: f64) -> f64 {
    distinct_indices(rates, w)
        .into_iter()
        .map(|k| beta_kk(rates, w, k, t))
        .fold(f64::INFINITY, f64::min)
}

/// Fits `(M, β)` for rates that are periodic with the given period.
pub fn fit_envelope(
    rates: &impl Rates,
    w: &WeightSequence,
    strategy: EnvelopeStrategy,
    period: f64,
) -> Result<EnvelopeConstants, BoundsError> {
    assert!(period > 0.0, "period must be positive");
    let ks = distinct_indices(rates, w);
    let f = |t: f64| {
        ks.iter()
            .map(|&k| beta_kk(rates, w, k, t))
            .fold(f64::INFINITY, f64::min)
    };
    let n = ENVELOPE_GRID;
    let grid_t = |i: usize| period * i as f64 / n as f64;
    let values: Vec<f64> = (0..=n).map(|i| f(grid_t(i))).collect();

    let (m, beta) = match strategy {
        EnvelopeStrategy::Pointwise => {
            let (imin, vmin) = values
                .iter()
                .copied()
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
            let lo = grid_t(imin.saturating_sub(1));
            let hi = grid_t((imin + 1).min(n));
            let (_, refined) = golden_section_min(&f, lo, hi, GOLDEN_TOL);
            (1.0, vmin.min(refined))
        }
        EnvelopeStrategy::PeriodAverage => {
            // cumulative Simpson integral at the even nodes
            let h = period / n as f64;
            let mut integral = vec![0.0; n / 2 + 1];
            for j in 0..n / 2 {
                let (a, b, c) = (values[2 * j], values[2 * j + 1], values[2 * j + 2]);
                integral[j + 1] = integral[j] + h / 3.0 * (a + 4.0 * b + c);
            }
            let beta = integral[n / 2] / period;
            // h(t) = β·t − ∫_0^t β** is periodic, so the worst excursion over
            // any s <= t is max h − min h.
            let (lo, hi) = integral
                .iter()
                .enumerate()
                .map(|(j, g)| beta * grid_t(2 * j) - g)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            ((hi - lo).max(0.0).exp(), beta)
        }
    };
    if beta.is_nan() || beta <= 0.0 {
        return Err(BoundsError::NotErgodicWithTheseWeights { beta });
    }
    EnvelopeConstants::new(m, beta)
}

fn golden_section_min(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// `∫_s^t β**(u) du` by composite Simpson with at least `panels_per_unit`
/// panels per unit time.
pub fn integrate_beta_inf(rates: &impl Rates, w: &WeightSequence, s: f64, t: f64, panels_per_unit: usize) -> f64 {
    if t <= s {
        return 0.0;
    }
    let ks = distinct_indices(rates, w);
    let f = |u: f64| {
        ks.iter()
            .map(|&k| beta_kk(rates, w, k, u))
            .fold(f64::INFINITY, f64::min)
    };
    let mut n = (((t - s) * panels_per_unit as f64).ceil() as usize).max(2);
    n += n % 2;
    let h = (t - s) / n as f64;
    let inner = (1..n).map(|i| {
        let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
        weight * f(s + h * i as f64)
    });
    h / 3.0 * (f(s) + f(t) + inner.sum::<f64>())
}

/// `Σ_{k≠0} |p_k − q_k|·Σ_{j=min(1,k)}^{max(-1,k)} d_j`, the weighted
/// distance of the two distributions with the origin eliminated.
pub fn weighted_initial_norm(w: &WeightSequence, p: &ProbabilitySnapshot, q: &ProbabilitySnapshot) -> f64 {
    let lo = p.n1().min(q.n1());
    let hi = p.n2().max(q.n2());
    weights::neumaier_sum((lo..=hi).filter(|k| *k != 0).filter_map(|k| {
        let diff = (p.prob(k) - q.prob(k)).abs();
        (diff > 0.0).then(|| diff * w.cumulative(k))
    }))
}

/// `Σ_{k≠0} p_k·Σ_{j} d_j`, the weighted norm of a distribution's reduction.
fn weighted_mass(w: &WeightSequence, p: &ProbabilitySnapshot) -> f64 {
    weights::neumaier_sum(
        p.states()
            .filter(|(k, pk)| *k != 0 && *pk > 0.0)
            .map(|(k, pk)| pk * w.cumulative(k)),
    )
}

/// Contraction bound `M·exp(-βt)·‖D(z_p(0) − z_q(0))‖`.
pub fn contraction_bound(
    w: &WeightSequence,
    env: &EnvelopeConstants,
    p0: &ProbabilitySnapshot,
    q0: &ProbabilitySnapshot,
    t: f64,
) -> BoundReport {
    let norm = weighted_initial_norm(w, p0, q0);
    let value = if norm == 0.0 { 0.0 } else { env.decay(t) * norm };
    BoundReport {
        kind: BoundKind::Contraction,
        value,
        inputs_digest: format!("M={:e};beta={:e};norm0={norm:e};t={t:e}", env.m, env.beta),
    }
}

/// Contraction bound with the exact decay `exp(-∫_0^t β**(u) du)`.
pub fn contraction_bound_integrated(
    rates: &impl Rates,
    w: &WeightSequence,
    p0: &ProbabilitySnapshot,
    q0: &ProbabilitySnapshot,
    t: f64,
) -> BoundReport {
    let norm = weighted_initial_norm(w, p0, q0);
    let exponent = integrate_beta_inf(rates, w, 0.0, t, ENVELOPE_GRID);
    let value = if norm == 0.0 { 0.0 } else { (-exponent).exp() * norm };
    BoundReport {
        kind: BoundKind::Contraction,
        value,
        inputs_digest: format!("integral={exponent:e};norm0={norm:e};t={t:e}"),
    }
}

/// Concentration bounds for `Pr(X(t) <= -N)`, `Pr(X(t) >= N)` or
/// `Pr(|X(t)| >= N)` (the sum of the two). `t = ∞` gives the limiting form.
pub fn tail_bound(
    rates: &impl Rates,
    w: &WeightSequence,
    env: &EnvelopeConstants,
    p0: &ProbabilitySnapshot,
    n: i64,
    t: f64,
    side: TailSide,
) -> BoundReport {
    assert!(n >= 1, "tail threshold must be positive");
    let norm0 = weighted_mass(w, p0);
    let source = w.d(-1) * rates.death_bound(0) + w.d(1) * rates.birth_bound(0);
    let transient = if norm0 == 0.0 {
        0.0
    } else {
        (-env.beta * t).exp() * norm0
    };
    let numerator = env.m * (transient + source / env.beta);
    let left = numerator / w.cumulative(-n);
    let right = numerator / w.cumulative(n);
    let (kind, value) = match side {
        TailSide::Left => (BoundKind::TailLeft, left),
        TailSide::Right => (BoundKind::TailRight, right),
        TailSide::Both => (BoundKind::TailTwoSided, left + right),
    };
    BoundReport {
        kind,
        value,
        inputs_digest: format!(
            "M={:e};beta={:e};norm0={norm0:e};source={source:e};N={n};t={t:e}",
            env.m, env.beta
        ),
    }
}

/// Truncation bound, split into its parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationBound {
    pub n1: i64,
    pub n2: i64,
    /// Bound on `‖p(t) − p*(t)‖₁`.
    pub value: f64,
    /// Bound on `‖D(z(t) − z*(t))‖`, before the `1/min(d_{-1}, d_1)` conversion.
    pub weighted: f64,
    pub left_term: f64,
    pub right_term: f64,
}

impl TruncationBound {
    pub fn report(&self) -> BoundReport {
        BoundReport {
            kind: BoundKind::Truncation,
            value: self.value,
            inputs_digest: format!(
                "N1={};N2={};weighted={:e};left={:e};right={:e}",
                self.n1, self.n2, self.weighted, self.left_term, self.right_term
            ),
        }
    }
}

/// Distance between the process and its truncation to `n1..=n2`, both
/// started at 0. `env` certifies the full process under `w`, `env_star` the
/// truncated one under `w_star`.
///
/// Partial sums of the weights are carried in the log domain: their
/// magnitudes run from 1 to beyond `1e20` for realistic windows.
pub fn truncation_bound(
    rates: &impl Rates,
    w: &WeightSequence,
    w_star: &WeightSequence,
    env: &EnvelopeConstants,
    env_star: &EnvelopeConstants,
    n1: i64,
    n2: i64,
) -> Result<TruncationBound, BoundsError> {
    if !(n1 < 0 && n2 > 0) {
        return Err(BoundsError::InvalidWindow { n1, n2 });
    }
    let source = rates.death_bound(0) * w_star.d(-1) + rates.birth_bound(0) * w_star.d(1);
    let prefactor = 2.0 * env.m * env_star.m * source / (env_star.beta * env.beta);
    let edge_term = |ln_num: f64, rate: f64, ln_den: f64| {
        if rate == 0.0 {
            0.0
        } else {
            (ln_num + rate.ln() - ln_den).exp()
        }
    };
    let left_term = edge_term(w.ln_cumulative(n1 - 1), rates.death_bound(n1), w_star.ln_cumulative(n1));
    let right_term = edge_term(w.ln_cumulative(n2 + 1), rates.birth_bound(n2), w_star.ln_cumulative(n2));
    let weighted = prefactor * (left_term + right_term);
    let d_min = w.d(-1).min(w.d(1));
    Ok(TruncationBound {
        n1,
        n2,
        value: 2.0 * weighted / d_min,
        weighted,
        left_term,
        right_term,
    })
}

/// `W = inf_{k>=1} min(Σ_{j=-k}^{-1} d_j / k, Σ_{j=1}^{k} d_j / k)`.
///
/// Both quotients are non-decreasing once `d_{k+1}` exceeds the running
/// average inside a geometric tail, so probing up to that point is exhaustive.
pub fn w_constant(w: &WeightSequence, k_probe: i64) -> Result<f64, BoundsError> {
    if w.pos_ratio() < 1.0 || w.neg_ratio() < 1.0 {
        return Err(BoundsError::VoidMeanBound);
    }
    let probe = k_probe.max(w.head_len()).max(1);
    let quotient = |k: i64, sign: i64| w.cumulative(sign * k) / k as f64;
    for sign in [-1, 1] {
        if quotient(probe + 1, sign) < quotient(probe, sign) {
            return Err(BoundsError::DecreasingQuotient { k_probe: probe });
        }
    }
    Ok((1..=probe)
        .flat_map(|k| [quotient(k, -1), quotient(k, 1)])
        .fold(f64::INFINITY, f64::min))
}

/// Truncation error of the mean: `Σ|k|·|p_k − p*_k| <= weighted / W`.
pub fn mean_error_bound(weighted: f64, w_const: f64) -> BoundReport {
    assert!(w_const > 0.0, "W must be positive");
    BoundReport {
        kind: BoundKind::MeanError,
        value: weighted / w_const,
        inputs_digest: format!("weighted={weighted:e};W={w_const:e}"),
    }
}

/// Smallest symmetric window `(-N, N)` whose truncation bound is `<= eps`.
pub fn plan_truncation(
    rates: &impl Rates,
    w: &WeightSequence,
    w_star: &WeightSequence,
    env: &EnvelopeConstants,
    env_star: &EnvelopeConstants,
    eps: f64,
) -> Result<(i64, i64), BoundsError> {
    if !(w_star.pos_ratio() > w.pos_ratio() && w_star.neg_ratio() > w.neg_ratio()) {
        return Err(BoundsError::NotAchievable(format!(
            "truncated-process weights must grow strictly faster (ratios {} / {} vs {} / {})",
            w_star.neg_ratio(),
            w_star.pos_ratio(),
            w.neg_ratio(),
            w.pos_ratio()
        )));
    }
    let value = |n: i64| truncation_bound(rates, w, w_star, env, env_star, -n, n).map(|b| b.value);
    if value(1)? <= eps {
        return Ok((-1, 1));
    }
    let mut hi = 2i64;
    while value(hi)? > eps {
        if hi >= 1 << 40 {
            return Err(BoundsError::NotAchievable(format!(
                "bound still above {eps:e} at N = {hi}"
            )));
        }
        hi *= 2;
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if value(mid)? <= eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((-hi, hi))
}

/// Time after which the contraction bound falls below `eps`.
pub fn convergence_time(env: &EnvelopeConstants, norm0: f64, eps: f64) -> f64 {
    assert!(norm0 > 0.0 && eps > 0.0, "norm0 and eps must be positive");
    ((env.m * norm0 / eps).ln() / env.beta).max(0.0)
}
