//! Scalar solvers over the tilt families and the constrained
//! input-distribution optimizers.
//!
//! Everything here exploits the same structure: along the tilt curve,
//! `delta(lambda)` is strictly increasing (its derivative is the tilted
//! variance) and the tail factor `g(lambda, n)` is strictly decreasing on
//! the admissible range, so every equation reduces to a bracketed
//! one-dimensional root find. Bisection does the heavy lifting; a short
//! Newton polish (using `d delta / d lambda = sigma2`) sharpens tilt
//! inversions.
//!
//! The admissible tilt range is capped at `lambda_plus`, the largest grid
//! tilt at which `lambda * sigma(lambda)` is still increasing; beyond it
//! the tail argument `x = sqrt(n) lambda sigma` folds back and the
//! one-dimensional root finds lose monotonicity.
//!
//! Converse solving comes in two flavors:
//!
//! * [`solve_converse_delta`] solves `mult * eps = xi_lower * e^{-n rate}`
//!   along the tilt curve (the analytic envelope); it fails with
//!   `BerryEsseenDominates` when the sandwich is vacuous at this `n`;
//! * exact lattice-tail solvers (crate-internal, used by the exact converse
//!   bound) walk the binomial lattice of the statistic directly and work at
//!   every blocklength for BSC/BEC/Z.

use crate::bounds::ErrorModel;
use crate::channels::{Channel, InputDist};
use crate::error::{Error, Result};
use crate::num;
use crate::tilted::{g_eval, ln_g, q_inv, xi_pair, TiltFamily, C_BE_DEFAULT};

/// Tolerances and caps shared by the solvers.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Absolute tolerance on solved scalars (tilts, deltas).
    pub abs_tol: f64,
    /// Relative tolerance on solved equations (log-domain mismatch).
    pub rel_tol: f64,
    /// Iteration cap per bracketed solve.
    pub max_iter: usize,
    /// Geometric growth factor for tilt bracket expansion.
    pub lambda_bracket_growth: f64,
    /// Berry-Esseen constant entering the sandwich factors.
    pub c_be: f64,
    /// Hard cap on the tilt parameter.
    pub lambda_max: f64,
    /// Gauss-Hermite node count for Gaussian-output channels.
    pub gh_nodes: usize,
    /// Include the type-counting term in divergence-family converse rates
    /// (off by default: bounds are evaluated at one fixed input type).
    pub dimc_type_term: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_iter: 200,
            lambda_bracket_growth: 2.0,
            c_be: C_BE_DEFAULT,
            lambda_max: 64.0,
            gh_nodes: crate::channels::GH_NODES_DEFAULT,
            dimc_type_term: false,
        }
    }
}

/// Terminal state of a solve; failures are reported as errors instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
}

/// Outcome of a bracketed scalar solve.
#[derive(Debug, Clone)]
pub struct SolveResult {
    /// The solved quantity (a tilt for [`invert_delta`], a mean shift
    /// `delta` for the tail solvers).
    pub value: f64,
    /// Tilt parameter at the solution (equals `value` for [`invert_delta`]).
    pub lambda: f64,
    /// Absolute residual of the solved equation (same units as the
    /// equation's right-hand side).
    pub residual: f64,
    /// Final bracket containing `value`.
    pub bracket: (f64, f64),
    /// Number of evaluations spent in bracketing plus bisection.
    pub iterations: usize,
    /// Always `Converged` on success.
    pub status: SolveStatus,
}

// ---------------------------------------------------------------------------
// Tilt-range cap.
// ---------------------------------------------------------------------------

/// Largest admissible tilt: scans a 512-point geometric grid on
/// `[1e-3, lambda_max]` and stops before the first point where the
/// variance degenerates or `lambda * sigma(lambda)` stops increasing,
/// i.e. `2 sigma2 + lambda * d sigma2 / d lambda <= 0` (the derivative
/// is `+m3` for the entropy statistic and `-m3` for the divergence one).
pub(crate) fn lambda_plus(fam: &TiltFamily, cfg: &SolverConfig) -> f64 {
    const GRID: usize = 512;
    let sign = if fam.is_dimc() { -1.0 } else { 1.0 };
    let lo: f64 = 1e-3;
    let ratio = (cfg.lambda_max / lo).powf(1.0 / (GRID - 1) as f64);
    let mut last_ok = lo;
    let mut lam = lo;
    for _ in 0..GRID {
        let m = fam.eval(lam);
        if !(m.sigma2 > 0.0) || 2.0 * m.sigma2 + sign * lam * m.m3 <= 0.0 {
            return last_ok;
        }
        last_ok = lam;
        lam *= ratio;
    }
    cfg.lambda_max
}

// ---------------------------------------------------------------------------
// Tilt inversion: delta -> lambda.
// ---------------------------------------------------------------------------

pub(crate) fn invert_delta_fam(
    fam: &TiltFamily,
    delta: f64,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    if !delta.is_finite() || delta < 0.0 {
        return Err(Error::OutOfRange(format!("delta = {delta} must be finite and >= 0")));
    }
    if delta == 0.0 {
        return Ok(SolveResult {
            value: 0.0,
            lambda: 0.0,
            residual: 0.0,
            bracket: (0.0, 0.0),
            iterations: 0,
            status: SolveStatus::Converged,
        });
    }
    let dstar = fam.delta_star();
    if delta >= dstar {
        return Err(Error::OutOfRange(format!(
            "delta = {delta} is not below the reachable supremum {dstar}"
        )));
    }
    let mut iters = 0usize;
    let mut lo = 0.0f64;
    let mut hi = 1.0f64.min(cfg.lambda_max);
    // Grow the bracket geometrically until delta(hi) clears the target.
    loop {
        iters += 1;
        if fam.eval(hi).delta >= delta {
            break;
        }
        if hi >= cfg.lambda_max {
            return Err(Error::BracketFailed(format!(
                "delta({}) = {} below target {delta}",
                cfg.lambda_max,
                fam.eval(cfg.lambda_max).delta
            )));
        }
        lo = hi;
        hi = (hi * cfg.lambda_bracket_growth).min(cfg.lambda_max);
        if iters > cfg.max_iter {
            return Err(Error::NoConvergence("bracket growth exceeded iteration cap".into()));
        }
    }
    // Bisect on the strictly increasing delta(lambda).
    for _ in 0..cfg.max_iter {
        if hi - lo <= cfg.abs_tol * hi.max(1.0) {
            break;
        }
        iters += 1;
        let mid = 0.5 * (lo + hi);
        if fam.eval(mid).delta < delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Newton polish using d delta / d lambda = sigma2, clamped to bracket.
    let mut lam = 0.5 * (lo + hi);
    for _ in 0..2 {
        let m = fam.eval(lam);
        if m.sigma2 > 0.0 {
            lam = (lam - (m.delta - delta) / m.sigma2).clamp(lo, hi);
        }
    }
    let residual = (fam.eval(lam).delta - delta).abs();
    Ok(SolveResult {
        value: lam,
        lambda: lam,
        residual,
        bracket: (lo, hi),
        iterations: iters,
        status: SolveStatus::Converged,
    })
}

/// Finds the tilt `lambda` with `delta(lambda) = delta`.
///
/// `t` selects the statistic family: `None` uses the symmetric-channel
/// surprisal path (or the capacity-achieving input for the Z channel);
/// `Some(t)` uses the divergence path at `t`. Preconditions:
/// `0 <= delta < delta_star`. The result's `value` is the tilt.
pub fn invert_delta(
    ch: &Channel,
    t: Option<&InputDist>,
    delta: f64,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    let fam = TiltFamily::for_channel(ch, t, cfg.gh_nodes)?;
    invert_delta_fam(&fam, delta, cfg)
}

// ---------------------------------------------------------------------------
// Tail-factor solver: eps -> delta_n(eps).
// ---------------------------------------------------------------------------

pub(crate) fn solve_delta_n_fam(
    fam: &TiltFamily,
    n: u64,
    eps: f64,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    if n == 0 {
        return Err(Error::OutOfRange("blocklength must be positive".into()));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::OutOfRange(format!("eps = {eps} outside (0, 1)")));
    }
    if eps > 0.5 {
        return Err(Error::OutOfUniqueRange(format!(
            "eps = {eps} above g(0) = 1/2; no tilt solves g = eps"
        )));
    }
    if eps == 0.5 {
        return Ok(SolveResult {
            value: 0.0,
            lambda: 0.0,
            residual: 0.0,
            bracket: (0.0, 0.0),
            iterations: 0,
            status: SolveStatus::Converged,
        });
    }
    let ln_eps = eps.ln();
    let lam_plus = lambda_plus(fam, cfg);
    let f = |lam: f64| ln_g(&fam.eval(lam), n) - ln_eps;
    let (mut lo, mut hi) = (0.0f64, lam_plus);
    if f(lam_plus) > 0.0 {
        // g has not fallen to eps at the monotone cap. Past the cap the
        // Gaussian argument folds back but the rate term keeps g falling
        // toward its positive finite-alphabet floor, so scan a geometric
        // grid for the first crossing and bisect inside that bracket (the
        // bracket invariant survives local non-monotonicity).
        let mut a = lam_plus.max(1e-3);
        let mut bracket = None;
        let mut lam_scan = a * 1.05;
        while lam_scan <= cfg.lambda_max {
            let m = fam.eval(lam_scan);
            if !(m.sigma2 >= 0.0) || !m.delta.is_finite() || !m.rate.is_finite() {
                break;
            }
            if ln_g(&m, n) - ln_eps <= 0.0 {
                bracket = Some((a, lam_scan));
                break;
            }
            a = lam_scan;
            lam_scan *= 1.05;
        }
        match bracket {
            Some((a, b)) => {
                lo = a;
                hi = b;
            }
            None => {
                return Err(Error::OutOfUniqueRange(format!(
                    "eps = {eps} below the tail-factor floor {} at n = {n}",
                    g_eval(&fam.eval(a), n)
                )));
            }
        }
    }
    let mut iters = 0usize;
    let mut lam = 0.5 * (lo + hi);
    for _ in 0..cfg.max_iter {
        iters += 1;
        lam = 0.5 * (lo + hi);
        let fm = f(lam);
        if fm.abs() <= 0.1 * cfg.rel_tol {
            break;
        }
        if fm > 0.0 {
            lo = lam;
        } else {
            hi = lam;
        }
    }
    let mismatch = f(lam);
    let residual = mismatch.exp_m1().abs() * eps;
    if residual > cfg.rel_tol * eps {
        return Err(Error::NoConvergence(format!(
            "tail-factor solve stalled: |g - eps| = {residual:.3e} > {:.3e}",
            cfg.rel_tol * eps
        )));
    }
    let m = fam.eval(lam);
    Ok(SolveResult {
        value: m.delta,
        lambda: lam,
        residual,
        bracket: (fam.eval(lo).delta, fam.eval(hi).delta),
        iterations: iters,
        status: SolveStatus::Converged,
    })
}

/// Solves `g(delta, n) = eps` for the mean shift `delta_n(eps)`.
///
/// Preconditions: `eps` in `(g floor, 1/2]`, where the floor is the limit of
/// the tail factor at the largest admissible tilt; `eps = 1/2` returns
/// `delta = 0` exactly. The root is sought first on the monotone tilt range
/// and then, for very small `eps` on strongly skewed channels, on a
/// geometric extension toward `lambda_max`. The result's `value` is `delta`,
/// with the solving tilt in `lambda` and `|g - eps|` in `residual`.
pub fn solve_delta_n(
    ch: &Channel,
    t: Option<&InputDist>,
    n: u64,
    eps: f64,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    let fam = TiltFamily::for_channel(ch, t, cfg.gh_nodes)?;
    solve_delta_n_fam(&fam, n, eps, cfg)
}

// ---------------------------------------------------------------------------
// Converse-envelope solver.
// ---------------------------------------------------------------------------

/// The converse tail-probability multiplier `1 + k sqrt(-2 ln eps / n) / s`,
/// with `k = 2` for average error and `k = 1` for maximal error, and
/// `s = sigma(0)` on the surprisal path, `s = 1` on the divergence path.
pub(crate) fn converse_multiplier(
    fam: &TiltFamily,
    n: u64,
    eps: f64,
    model: ErrorModel,
) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::OutOfRange(format!("eps = {eps} outside (0, 1)")));
    }
    let beta = (-2.0 * eps.ln() / n as f64).sqrt();
    let k = match model {
        ErrorModel::Avg => 2.0,
        ErrorModel::Max => 1.0,
    };
    let mult = match fam {
        TiltFamily::Bimsc(_) => {
            let sigma = fam.eval(0.0).sigma2.sqrt();
            if !(sigma > 0.0) {
                return Err(Error::DegenerateVariance("untilted statistic is constant".into()));
            }
            1.0 + k * beta / sigma
        }
        TiltFamily::Dimc(_) => 1.0 + k * beta,
    };
    if mult * eps >= 1.0 {
        return Err(Error::Precondition(format!(
            "multiplied target {:.6} >= 1; converse preconditions fail at n = {n}, eps = {eps}",
            mult * eps
        )));
    }
    Ok(mult)
}

pub(crate) fn solve_converse_delta_fam(
    fam: &TiltFamily,
    n: u64,
    eps: f64,
    model: ErrorModel,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    if n == 0 {
        return Err(Error::OutOfRange("blocklength must be positive".into()));
    }
    let mult = converse_multiplier(fam, n, eps, model)?;
    let target = mult * eps;
    let ln_target = mult.ln() + eps.ln();
    // Envelope h(lambda) = ln xi_lower + ln e^{-n r}; None where the
    // sandwich preconditions fail.
    let h = |lam: f64| -> Option<f64> {
        let m = fam.eval(lam);
        let xp = xi_pair(&m, n, cfg.c_be).ok()?;
        if !(xp.xi_lower > 0.0) {
            return None;
        }
        Some(xp.xi_lower.ln() - n as f64 * m.rate)
    };
    let lam_plus = lambda_plus(fam, cfg);
    const GRID: usize = 256;
    let lo = 1e-6f64.min(lam_plus / 2.0);
    let ratio = (lam_plus / lo).powf(1.0 / (GRID - 1) as f64);
    let mut pts = Vec::with_capacity(GRID);
    let mut lam = lo;
    for _ in 0..GRID {
        pts.push((lam, h(lam)));
        lam *= ratio;
    }
    let valid: Vec<(usize, f64, f64)> = pts
        .iter()
        .enumerate()
        .filter_map(|(i, (l, hv))| hv.map(|v| (i, *l, v)))
        .collect();
    if valid.is_empty() {
        return Err(Error::BerryEsseenDominates(format!(
            "sandwich lower factor invalid at every tilt for n = {n}"
        )));
    }
    let &(peak_i, peak_lam, peak_h) =
        valid.iter().max_by(|a, b| a.2.total_cmp(&b.2)).expect("nonempty");
    if peak_h < ln_target {
        return Err(Error::BerryEsseenDominates(format!(
            "converse envelope peak {:.6e} below multiplied target {:.6e} at n = {n}",
            peak_h.exp(),
            target
        )));
    }
    // Walk right from the peak to bracket the falling-branch crossing.
    let mut bra = (peak_lam, peak_lam);
    let mut found = false;
    let mut prev_lam = peak_lam;
    for (i, (l, hv)) in pts.iter().enumerate().skip(peak_i + 1) {
        let below = match hv {
            Some(v) => *v < ln_target,
            None => true,
        };
        if below {
            bra = (prev_lam, *l);
            found = true;
            break;
        }
        prev_lam = *l;
        let _ = i;
    }
    if !found {
        return Err(Error::BracketFailed(format!(
            "envelope stays above target up to lambda_plus = {lam_plus}; raise lambda_max"
        )));
    }
    let (mut blo, mut bhi) = bra;
    let mut iters = 0usize;
    let mut lam = 0.5 * (blo + bhi);
    for _ in 0..cfg.max_iter {
        iters += 1;
        lam = 0.5 * (blo + bhi);
        match h(lam) {
            Some(v) if (v - ln_target).abs() <= 0.1 * cfg.rel_tol => break,
            Some(v) if v >= ln_target => blo = lam,
            _ => bhi = lam,
        }
    }
    // Land on the admissible side of the final bracket.
    let (lam, mismatch) = match h(lam) {
        Some(v) => (lam, v - ln_target),
        None => (blo, h(blo).expect("left end of bracket is valid") - ln_target),
    };
    let residual = mismatch.exp_m1().abs() * target;
    if residual > cfg.rel_tol * target {
        return Err(Error::NoConvergence(format!(
            "converse envelope solve stalled: residual {residual:.3e} > {:.3e}",
            cfg.rel_tol * target
        )));
    }
    let m = fam.eval(lam);
    Ok(SolveResult {
        value: m.delta,
        lambda: lam,
        residual,
        bracket: (fam.eval(blo).delta, fam.eval(bhi).delta),
        iterations: iters,
        status: SolveStatus::Converged,
    })
}

/// Solves the analytic converse equation
/// `mult(eps, n) * eps = xi_lower(lambda, n) e^{-n rate}` for the largest
/// admissible `delta` (the falling-branch root along the tilt curve).
///
/// Fails with `Precondition` when `mult * eps >= 1`, and with
/// `BerryEsseenDominates` when the sandwich lower factor is vacuous at this
/// blocklength (too skewed a statistic for the Gaussian correction).
pub fn solve_converse_delta(
    ch: &Channel,
    t: Option<&InputDist>,
    n: u64,
    eps: f64,
    model: ErrorModel,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    let fam = TiltFamily::for_channel(ch, t, cfg.gh_nodes)?;
    solve_converse_delta_fam(&fam, n, eps, model, cfg)
}

// ---------------------------------------------------------------------------
// Exact lattice-tail converse solvers (BSC/BEC/Z at any blocklength).
// ---------------------------------------------------------------------------

/// Walks `ln Pr(Bin(n, p) >= j)` downward from `j = n` and returns the
/// largest `j` whose upper tail is at least `e^{ln_target}`, with that tail.
pub(crate) fn binomial_upper_tail_j0(n: u64, p: f64, ln_target: f64) -> (u64, f64) {
    debug_assert!(ln_target < 0.0);
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let mut ln_term = n as f64 * lp; // ln P(K = n)
    let mut ln_tail = f64::NEG_INFINITY;
    let mut k = n;
    loop {
        ln_tail = num::logaddexp(ln_tail, ln_term);
        if ln_tail >= ln_target {
            return (k, ln_tail);
        }
        if k == 0 {
            // Tail at j = 0 is exactly 1 >= target; unreachable in practice.
            return (0, 0.0);
        }
        // P(K = k-1) = P(K = k) * k / (n-k+1) * (1-p)/p.
        ln_term += (k as f64).ln() - ((n - k + 1) as f64).ln() + lq - lp;
        k -= 1;
    }
}

/// Largest mean shift `delta` whose exact lattice tail on a two-atom
/// statistic with lattice step `step/n` stays at or above the target:
/// `delta = (j0 - n p) * step / n`. Errors when the solution is
/// non-positive (the converse is vacuous because the target is too large).
pub(crate) fn exact_converse_delta_binomial(
    n: u64,
    p: f64,
    step: f64,
    ln_target: f64,
) -> Result<SolveResult> {
    let (j0, ln_tail) = binomial_upper_tail_j0(n, p, ln_target);
    let delta = (j0 as f64 - n as f64 * p) * step / n as f64;
    if !(delta > 0.0) {
        return Err(Error::Precondition(format!(
            "exact-tail converse delta = {delta} <= 0; target too large at n = {n}"
        )));
    }
    Ok(SolveResult {
        value: delta,
        lambda: f64::NAN,
        residual: (ln_tail - ln_target).exp_m1().abs() * ln_target.exp(),
        bracket: (delta, delta + step / n as f64),
        iterations: (n - j0) as usize + 1,
        status: SolveStatus::Converged,
    })
}

/// Exact-tail converse solve for the Z channel at input type `m0/n`.
#[derive(Debug, Clone)]
pub(crate) struct ZExactTail {
    /// Solved mean shift (attained on the lattice).
    pub delta: f64,
    /// Mutual information at the realizable type.
    pub i_t: f64,
    /// Realizable type weight on input 0.
    pub t0: f64,
    /// `ln` of the exact tail probability at the solution.
    pub ln_tail: f64,
}

/// Z channel: conditioned on an input sequence of type `t0 = m0/n`, the
/// divergence statistic is linear in the number `J ~ Bin(m0, p)` of flipped
/// zero-inputs and strictly decreasing in it, so the inclusive event
/// `{statistic <= I - delta}` is an upper binomial tail in `J`. Returns the
/// largest `delta` (attained) whose tail meets the target.
pub(crate) fn exact_converse_delta_z(
    p: f64,
    n: u64,
    m0: u64,
    ln_target: f64,
) -> Result<ZExactTail> {
    if m0 == 0 || m0 >= n {
        return Err(Error::DegenerateVariance(format!(
            "z-channel type m0 = {m0} of n = {n} makes the statistic constant"
        )));
    }
    let t0 = m0 as f64 / n as f64;
    let q0 = t0 * (1.0 - p);
    let q1 = 1.0 - q0;
    let i_t = num::binary_entropy(q0) - t0 * num::binary_entropy(p);
    let v = |j: f64| {
        ((m0 as f64 - j) * ((1.0 - p) / q0).ln() + j * (p / q1).ln()
            - (n - m0) as f64 * q1.ln())
            / n as f64
    };
    let (j0, ln_tail) = binomial_upper_tail_j0(m0, p, ln_target);
    let delta = i_t - v(j0 as f64);
    if !(delta > 0.0) {
        return Err(Error::Precondition(format!(
            "exact-tail converse delta = {delta} <= 0; target too large at n = {n}"
        )));
    }
    Ok(ZExactTail { delta, i_t, t0, ln_tail })
}

// ---------------------------------------------------------------------------
// Constrained input optimizers.
// ---------------------------------------------------------------------------

/// Result of a constrained input-distribution optimization.
#[derive(Debug, Clone)]
pub struct TOpt {
    /// The optimizing input distribution.
    pub t: InputDist,
    /// Objective value at the optimum (nats).
    pub objective: f64,
    /// Mutual information at the optimum.
    pub info: f64,
    /// Feasible interval of `t(0)` where `I(t) >= c`.
    pub feasible: (f64, f64),
    /// The constraint level actually used.
    pub c: f64,
    /// Mean shift at the optimum (second-order objective only).
    pub delta: Option<f64>,
}

fn require_binary(ch: &Channel) -> Result<()> {
    if ch.input_count() != 2 {
        return Err(Error::Unsupported(
            "input-distribution optimization is implemented for binary-input channels".into(),
        ));
    }
    Ok(())
}

/// Mutual information as a function of `t0`, plus its maximizer and maximum
/// (closed forms where available, golden-section on the concave curve for
/// generic binary-input channels).
fn input_info_curve(ch: &Channel, cfg: &SolverConfig) -> Result<(f64, f64)> {
    match ch.capacity_achieving_input() {
        Ok(t) => Ok((t.probs()[0], ch.capacity().or_else(|_| ch.mutual_information(&t))?)),
        Err(_) => {
            // Generic binary-input channel: maximize the concave I(t0).
            let info = |t0: f64| {
                ch.mutual_information(&InputDist::binary(t0).expect("t0 in range"))
                    .unwrap_or(f64::NEG_INFINITY)
            };
            let (mut a, mut b) = (1e-9, 1.0 - 1e-9);
            let phi = (5f64.sqrt() - 1.0) / 2.0;
            let (mut x1, mut x2) = (b - phi * (b - a), a + phi * (b - a));
            let (mut f1, mut f2) = (info(x1), info(x2));
            for _ in 0..cfg.max_iter {
                if (b - a).abs() < 1e-12 {
                    break;
                }
                if f1 >= f2 {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - phi * (b - a);
                    f1 = info(x1);
                } else {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + phi * (b - a);
                    f2 = info(x2);
                }
            }
            let t0 = 0.5 * (a + b);
            Ok((t0, info(t0)))
        }
    }
}

/// Feasible interval of `t0` with `I(t) >= c`, found by bisection on each
/// side of the concave maximum.
fn feasible_interval(ch: &Channel, c: f64, t_cap0: f64, cfg: &SolverConfig) -> Result<(f64, f64)> {
    let info = |t0: f64| {
        ch.mutual_information(&InputDist::binary(t0).expect("t0 in range"))
            .unwrap_or(f64::NEG_INFINITY)
    };
    let bisect = |mut lo: f64, mut hi: f64, want_ge_at_hi: bool| {
        // Sign convention: I - c changes sign once on each side.
        for _ in 0..cfg.max_iter {
            let mid = 0.5 * (lo + hi);
            let ge = info(mid) >= c;
            if ge == want_ge_at_hi {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-13 {
                break;
            }
        }
        0.5 * (lo + hi)
    };
    let eps_t = 1e-9;
    let t_lo = if info(eps_t) >= c { eps_t } else { bisect(eps_t, t_cap0, true) };
    let t_hi = if info(1.0 - eps_t) >= c {
        1.0 - eps_t
    } else {
        // On the right side, I decreases: feasible at lo end.
        1.0 - bisect(eps_t, 1.0 - t_cap0, true)
    };
    Ok((t_lo, t_hi))
}

fn optimize_scan<F: Fn(f64) -> f64>(
    objective: F,
    t_lo: f64,
    t_hi: f64,
    cfg: &SolverConfig,
) -> (f64, f64) {
    // 256-point pre-scan, then golden-section around the best cell; ties
    // resolve toward smaller t0 (strict > when comparing candidates).
    const PRESCAN: usize = 256;
    let step = (t_hi - t_lo) / (PRESCAN - 1) as f64;
    let mut best_i = 0usize;
    let mut best_v = f64::NEG_INFINITY;
    let vals: Vec<f64> = (0..PRESCAN).map(|i| objective(t_lo + i as f64 * step)).collect();
    for (i, &v) in vals.iter().enumerate() {
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    let mut a = t_lo + best_i.saturating_sub(1) as f64 * step;
    let mut b = (t_lo + (best_i + 1) as f64 * step).min(t_hi);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut x1, mut x2) = (b - phi * (b - a), a + phi * (b - a));
    let (mut f1, mut f2) = (objective(x1), objective(x2));
    for _ in 0..cfg.max_iter {
        if (b - a).abs() < 1e-12 {
            break;
        }
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = objective(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = objective(x2);
        }
    }
    let t0 = 0.5 * (a + b);
    (t0, objective(t0))
}

fn resolve_constraint(ch: &Channel, c: Option<f64>, cfg: &SolverConfig) -> Result<(f64, f64, f64)> {
    let (t_cap0, cap) = input_info_curve(ch, cfg)?;
    let c = c.unwrap_or(0.5 * cap);
    if !(c >= 0.0) || c >= cap - 1e-15 {
        return Err(Error::EmptyFeasibleRegion(format!(
            "constraint c = {c} not strictly below the maximal information {cap}"
        )));
    }
    Ok((t_cap0, cap, c))
}

/// Maximizes the second-order objective `I(t) - delta_{t,n}(eps)` over the
/// information-constrained set `{t : I(t) >= c}` (`c` defaults to half the
/// maximal mutual information). Probe points where the tail solver fails
/// score negative infinity. Binary-input channels only.
pub fn optimize_t_star(
    ch: &Channel,
    n: u64,
    eps: f64,
    c: Option<f64>,
    cfg: &SolverConfig,
) -> Result<TOpt> {
    require_binary(ch)?;
    let (t_cap0, _cap, c) = resolve_constraint(ch, c, cfg)?;
    let (t_lo, t_hi) = feasible_interval(ch, c, t_cap0, cfg)?;
    let objective = |t0: f64| -> f64 {
        let t = InputDist::binary(t0).expect("t0 in range");
        let fam = match TiltFamily::for_channel(ch, Some(&t), cfg.gh_nodes) {
            Ok(f) => f,
            Err(_) => return f64::NEG_INFINITY,
        };
        let i = fam.first_order_rate();
        if i < c {
            return f64::NEG_INFINITY;
        }
        match solve_delta_n_fam(&fam, n, eps, cfg) {
            Ok(r) => i - r.value,
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let (t0, obj) = optimize_scan(objective, t_lo, t_hi, cfg);
    if obj == f64::NEG_INFINITY {
        return Err(Error::EmptyFeasibleRegion(format!(
            "no feasible input solved the tail equation at n = {n}, eps = {eps}"
        )));
    }
    let t = InputDist::binary(t0)?;
    let info = ch.mutual_information(&t)?;
    let delta = solve_delta_n(ch, Some(&t), n, eps, cfg)?.value;
    Ok(TOpt { t, objective: obj, info, feasible: (t_lo, t_hi), c, delta: Some(delta) })
}

/// Maximizes the normal-approximation objective
/// `I(t) - sigma_D(t) Q^{-1}(eps) / sqrt(n)` over `{t : I(t) >= c}`.
/// Binary-input channels only.
pub fn optimize_t_sharp(
    ch: &Channel,
    n: u64,
    eps: f64,
    c: Option<f64>,
    cfg: &SolverConfig,
) -> Result<TOpt> {
    require_binary(ch)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::OutOfRange(format!("eps = {eps} outside (0, 1)")));
    }
    let (t_cap0, _cap, c) = resolve_constraint(ch, c, cfg)?;
    let (t_lo, t_hi) = feasible_interval(ch, c, t_cap0, cfg)?;
    let qi = q_inv(eps)?;
    let sqrt_n = (n as f64).sqrt();
    let objective = |t0: f64| -> f64 {
        let t = InputDist::binary(t0).expect("t0 in range");
        let fam = match TiltFamily::for_channel(ch, Some(&t), cfg.gh_nodes) {
            Ok(f) => f,
            Err(_) => return f64::NEG_INFINITY,
        };
        let i = fam.first_order_rate();
        if i < c {
            return f64::NEG_INFINITY;
        }
        let m = fam.eval(0.0);
        i - m.sigma2.sqrt() * qi / sqrt_n
    };
    let (t0, obj) = optimize_scan(objective, t_lo, t_hi, cfg);
    if obj == f64::NEG_INFINITY {
        return Err(Error::EmptyFeasibleRegion("no feasible input scored finitely".into()));
    }
    let t = InputDist::binary(t0)?;
    let info = ch.mutual_information(&t)?;
    Ok(TOpt { t, objective: obj, info, feasible: (t_lo, t_hi), c, delta: None })
}

/// Maximal mutual information over binary input weights, with its argmax
/// `t(0)`: the channel's closed form where one exists, golden-section on
/// the concave information curve otherwise. Callers scaling the
/// information constraint (`c = frac * max`) start from this value.
pub fn max_info_binary(ch: &Channel, cfg: &SolverConfig) -> Result<(f64, f64)> {
    require_binary(ch)?;
    input_info_curve(ch, cfg)
}

// ---------------------------------------------------------------------------
// Converse feasibility diagnostics (grid estimates, warn-only).
// ---------------------------------------------------------------------------

/// Grid-estimated feasibility diagnostics for divergence-family converses.
/// All quantities are heuristic (33-point scans over the feasible set) and
/// intended for warnings, not for gating results.
#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    /// Largest tail-factor value at the half-cap tilt over feasible inputs:
    /// targets below this are solvable everywhere on the feasible set.
    pub eps_n_plus: f64,
    /// Rate level reachable by every feasible input within half the
    /// information gap to the constraint.
    pub s_c: f64,
    /// Target error probability whose multiplied exponent matches `s_c`.
    pub eps_n_c: f64,
    /// Largest target below one for which the average-error multiplier
    /// keeps the multiplied target below one.
    pub eps_n_u: f64,
    /// Smallest blocklength whose best realizable type closes half the
    /// information gap (None if not found below the scan cap).
    pub n_c: Option<u64>,
    /// Constraint level used.
    pub c: f64,
}

/// Computes [`FeasibilityReport`] for a binary-input channel.
pub fn converse_feasibility_report(
    ch: &Channel,
    n: u64,
    c: Option<f64>,
    cfg: &SolverConfig,
) -> Result<FeasibilityReport> {
    require_binary(ch)?;
    let (t_cap0, cap, c) = resolve_constraint(ch, c, cfg)?;
    let (t_lo, t_hi) = feasible_interval(ch, c, t_cap0, cfg)?;
    const GRID: usize = 33;
    let gap = 0.5 * (cap - c);
    let mut eps_n_plus = 0.0f64;
    let mut s_c = f64::INFINITY;
    for i in 0..GRID {
        let t0 = t_lo + (t_hi - t_lo) * i as f64 / (GRID - 1) as f64;
        let t = InputDist::binary(t0)?;
        let fam = match TiltFamily::for_channel(ch, Some(&t), cfg.gh_nodes) {
            Ok(f) => f,
            Err(_) => continue,
        };
        let lp = lambda_plus(&fam, cfg);
        let m_half = fam.eval(0.5 * lp);
        eps_n_plus = eps_n_plus.max(g_eval(&m_half, n));
        let m_top = fam.eval(lp);
        // Rate reachable within half the information gap at this input.
        let s_t = if m_top.delta <= gap {
            m_top.rate
        } else {
            let lam = invert_delta_fam(&fam, gap, cfg)?.value;
            fam.eval(lam).rate
        };
        s_c = s_c.min(s_t);
    }
    // eps_n_c solves u (1 + 2 sqrt(2u/n)) / n = s_c for u = -ln eps.
    let f = |u: f64| u * (1.0 + 2.0 * (2.0 * u / n as f64).sqrt()) / n as f64;
    let eps_n_c = if f(700.0) < s_c {
        (-700.0f64).exp()
    } else {
        let (mut lo, mut hi) = (1e-12, 700.0);
        for _ in 0..cfg.max_iter {
            let mid = 0.5 * (lo + hi);
            if f(mid) < s_c {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (-0.5 * (lo + hi)).exp()
    };
    // eps_n_u: interior root of eps (1 + 2 sqrt(-2 ln eps / n)) = 1 in (1/2, 1).
    let hfun = |e: f64| e * (1.0 + 2.0 * (-2.0 * e.ln() / n as f64).sqrt()) - 1.0;
    let mut eps_n_u = 1.0;
    let mut prev = 0.5;
    for i in 1..=4096 {
        let e = 0.5 + 0.5 * (1.0 - 1e-12) * i as f64 / 4096.0;
        if hfun(prev) < 0.0 && hfun(e) >= 0.0 {
            let (mut lo, mut hi) = (prev, e);
            for _ in 0..cfg.max_iter {
                let mid = 0.5 * (lo + hi);
                if hfun(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            eps_n_u = 0.5 * (lo + hi);
            break;
        }
        prev = e;
    }
    // N(c): smallest blocklength whose best realizable type closes half the gap.
    let mut n_c = None;
    for nn in 2..=1_000_000u64 {
        let m0 = (t_cap0 * nn as f64).round().clamp(1.0, (nn - 1) as f64) as u64;
        let t = InputDist::binary(m0 as f64 / nn as f64)?;
        if ch.mutual_information(&t)? >= cap - gap {
            n_c = Some(nn);
            break;
        }
    }
    Ok(FeasibilityReport { eps_n_plus, s_c, eps_n_c, eps_n_u, n_c, c })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tilted::{bimsc_tilt, dimc_tilt};
    use approx::assert_abs_diff_eq;

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    fn bsc() -> Channel {
        Channel::bsc(0.11).unwrap()
    }

    #[test]
    fn invert_delta_round_trips_on_bsc() {
        for &lam in &[0.1, 1.0, 4.0] {
            let delta = bimsc_tilt(&bsc(), lam).unwrap().delta;
            let r = invert_delta(&bsc(), None, delta, &cfg()).unwrap();
            assert_abs_diff_eq!(r.value, lam, epsilon = 1e-9);
            assert!(r.residual <= 1e-12);
        }
    }

    #[test]
    fn invert_delta_edge_cases() {
        let r = invert_delta(&bsc(), None, 0.0, &cfg()).unwrap();
        assert_eq!(r.value, 0.0);
        let fam = TiltFamily::for_channel(&bsc(), None, 96).unwrap();
        let dstar = fam.delta_star();
        assert!(invert_delta(&bsc(), None, dstar, &cfg()).is_err());
        assert!(invert_delta(&bsc(), None, -0.1, &cfg()).is_err());
        // Divergence path round trip on the Z channel.
        let z = Channel::z(0.5).unwrap();
        let t = InputDist::binary(0.4).unwrap();
        let delta = dimc_tilt(&z, &t, 0.8).unwrap().delta;
        let r = invert_delta(&z, Some(&t), delta, &cfg()).unwrap();
        assert_abs_diff_eq!(r.value, 0.8, epsilon = 1e-9);
    }

    #[test]
    fn solve_delta_n_hits_target_and_is_monotone() {
        let c = cfg();
        let mut prev = f64::INFINITY;
        for &n in &[100u64, 400, 1600, 6400, 25600] {
            let r = solve_delta_n(&bsc(), None, n, 1e-3, &c).unwrap();
            assert!(r.residual <= 1e-10 * 1e-3);
            assert!(r.value < prev, "delta_n must decrease with n");
            assert!(r.value > 0.0 && r.value >= r.bracket.0 && r.value <= r.bracket.1);
            prev = r.value;
        }
    }

    #[test]
    fn solve_delta_n_half_is_zero_and_range_is_enforced() {
        for ch in [bsc(), Channel::bec(0.5).unwrap()] {
            let r = solve_delta_n(&ch, None, 1000, 0.5, &cfg()).unwrap();
            assert_eq!(r.value, 0.0);
        }
        assert!(matches!(
            solve_delta_n(&bsc(), None, 1000, 0.6, &cfg()),
            Err(Error::OutOfUniqueRange(_))
        ));
        assert!(matches!(
            solve_delta_n(&bsc(), None, 10, 1e-300, &cfg()),
            Err(Error::OutOfUniqueRange(_))
        ));
    }

    #[test]
    fn solve_delta_n_approaches_gaussian_scaling() {
        // At n = 1e5 the solution is within 2% of sigma Q^{-1}(eps)/sqrt(n).
        let c = cfg();
        let n = 100_000u64;
        let eps = 1e-6;
        let r = solve_delta_n(&bsc(), None, n, eps, &c).unwrap();
        let sigma = bimsc_tilt(&bsc(), 0.0).unwrap().sigma2.sqrt();
        let gauss = sigma * q_inv(eps).unwrap() / (n as f64).sqrt();
        assert!((r.value / gauss - 1.0).abs() < 0.02, "ratio = {}", r.value / gauss);
    }

    #[test]
    fn converse_envelope_solves_on_bsc() {
        let c = cfg();
        let r = solve_converse_delta(&bsc(), None, 1000, 1e-3, ErrorModel::Avg, &c).unwrap();
        let fam = TiltFamily::for_channel(&bsc(), None, 96).unwrap();
        let mult = converse_multiplier(&fam, 1000, 1e-3, ErrorModel::Avg).unwrap();
        // Residual contract: |envelope - mult*eps| <= 1e-10 * mult*eps.
        assert!(r.residual <= 1e-10 * mult * 1e-3);
        assert!(r.value > 0.0);
        // Max-error model multiplies less, so its delta solves a smaller
        // target further down the falling branch: a larger delta.
        let rmax = solve_converse_delta(&bsc(), None, 1000, 1e-3, ErrorModel::Max, &c).unwrap();
        assert!(rmax.value > r.value - 1e-12);
    }

    #[test]
    fn converse_envelope_reports_berry_esseen_domination() {
        let ch = Channel::bsc(0.001).unwrap();
        assert!(matches!(
            solve_converse_delta(&ch, None, 200, 1e-6, ErrorModel::Max, &cfg()),
            Err(Error::BerryEsseenDominates(_))
        ));
    }

    #[test]
    fn converse_multiplier_precondition() {
        let fam = TiltFamily::for_channel(&bsc(), None, 96).unwrap();
        // Large eps with small n pushes mult*eps past one.
        assert!(matches!(
            converse_multiplier(&fam, 4, 0.45, ErrorModel::Avg),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn exact_tail_solver_matches_direct_binomial_scan() {
        // Independent check: brute-force the largest j with tail >= target.
        let (n, p): (u64, f64) = (30, 0.11);
        let target: f64 = 3e-4;
        let tail = |j: u64| -> f64 {
            (j..=n)
                .map(|k| {
                    (num::ln_binomial(n, k) + k as f64 * p.ln()
                        + (n - k) as f64 * (1.0 - p).ln())
                    .exp()
                })
                .sum()
        };
        let mut j_expect = n;
        while j_expect > 0 && tail(j_expect) < target {
            j_expect -= 1;
        }
        let (j0, ln_tail) = binomial_upper_tail_j0(n, p, target.ln());
        assert_eq!(j0, j_expect);
        assert_abs_diff_eq!(ln_tail.exp(), tail(j0), epsilon = 1e-12);
        let step = ((1.0 - p) / p).ln();
        let r = exact_converse_delta_binomial(n, p, step, target.ln()).unwrap();
        assert_abs_diff_eq!(r.value, (j0 as f64 - n as f64 * p) * step / n as f64, epsilon = 1e-15);
    }

    #[test]
    fn z_exact_tail_attains_lattice_point() {
        // At the solved delta the inclusive event must reproduce the tail.
        let (p, n, m0) = (0.5, 12u64, 6u64);
        let target: f64 = 1e-2;
        let r = exact_converse_delta_z(p, n, m0, target.ln()).unwrap();
        assert!(r.delta > 0.0);
        assert!(r.ln_tail >= target.ln());
        // Tail at the next lattice point must fall below the target.
        let q0 = r.t0 * (1.0 - p);
        let v_step = (((1.0 - p) / q0).ln() - (p / (1.0 - q0)).ln()) / n as f64;
        let next = exact_converse_delta_z(p, n, m0, (r.ln_tail - 1e-9).exp().ln());
        assert!(next.is_ok());
        assert!(v_step > 0.0);
    }

    #[test]
    fn t_star_beats_random_feasible_probes() {
        use rand::{Rng, SeedableRng};
        let ch = Channel::z(0.5).unwrap();
        let c = cfg();
        let (n, eps) = (500u64, 1e-3);
        let opt = optimize_t_star(&ch, n, eps, None, &c).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let mut tried = 0;
        while tried < 50 {
            let t0 = rng.gen_range(opt.feasible.0..opt.feasible.1);
            let t = InputDist::binary(t0).unwrap();
            let i = ch.mutual_information(&t).unwrap();
            if i < opt.c {
                continue;
            }
            let Ok(r) = solve_delta_n(&ch, Some(&t), n, eps, &c) else { continue };
            tried += 1;
            assert!(
                i - r.value <= opt.objective + 1e-9,
                "probe t0 = {t0} beats optimizer: {} > {}",
                i - r.value,
                opt.objective
            );
        }
    }

    #[test]
    fn t_sharp_approaches_capacity_input_at_huge_n() {
        // At n = 1e6 the optimizer's mutual information is within 1e-4 of
        // capacity for Z(0.5): the penalty term vanishes as 1/sqrt(n).
        let ch = Channel::z(0.5).unwrap();
        let opt = optimize_t_sharp(&ch, 1_000_000, 1e-3, None, &cfg()).unwrap();
        let cap = ch.capacity().unwrap();
        assert!(cap - opt.info < 1e-4, "info gap = {}", cap - opt.info);
        assert!((opt.t.probs()[0] - 0.4).abs() < 5e-2);
    }

    #[test]
    fn empty_feasible_region_is_reported() {
        let ch = Channel::z(0.5).unwrap();
        let cap = ch.capacity().unwrap();
        assert!(matches!(
            optimize_t_star(&ch, 500, 1e-3, Some(cap * 1.01), &cfg()),
            Err(Error::EmptyFeasibleRegion(_))
        ));
    }

    #[test]
    fn feasibility_report_is_sane() {
        let ch = Channel::z(0.5).unwrap();
        let rep = converse_feasibility_report(&ch, 1000, None, &cfg()).unwrap();
        assert!(rep.eps_n_plus > 0.0 && rep.eps_n_plus < 1.0);
        assert!(rep.s_c > 0.0);
        assert!(rep.eps_n_c > 0.0 && rep.eps_n_c < rep.eps_n_u);
        assert!(rep.eps_n_u > 0.5 && rep.eps_n_u < 1.0);
        assert_eq!(rep.n_c, Some(2));
    }

    #[test]
    fn lambda_plus_is_interior_for_skewed_channels() {
        let ch = Channel::bsc(0.001).unwrap();
        let fam = TiltFamily::for_channel(&ch, None, 96).unwrap();
        let lp = lambda_plus(&fam, &cfg());
        assert!(lp > 0.0 && lp < 64.0);
        let m = fam.eval(lp);
        assert!((lp * m.m3).abs() < 2.0 * m.sigma2);
    }
}
