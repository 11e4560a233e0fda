//! Named finite-blocklength rate curves: approximations, converses, and
//! achievability bounds.
//!
//! This module assembles the tilt/solver/mirror machinery into the named
//! curves a user plots against blocklength `n` at error probability `eps`:
//!
//! * **SO** ([`so_rate`]): the second-order approximation
//!   `max_t [I(t;P) - delta_{t,n}(eps)]`, which on the symmetric path is
//!   capacity minus the solved mean shift.
//! * **NEP** ([`nep_rate`]): `SO - ln(eps)/n + ln P(B)/n`, with `P(B)` the
//!   outer-mirror bound evaluated at the solved shift.
//! * **Normal / NormalLn** ([`normal_rate`]): the Gaussian approximation
//!   `C - sigma Q^{-1}(eps) / sqrt(n)` (divergence path: maximized over
//!   feasible inputs), plus an optional `ln n / (2n)` third-order correction
//!   calibrated to the binary symmetric channel.
//! * **Exact converse** ([`exact_converse`]): the non-asymptotic converse
//!   with its tail condition solved exactly on the lattice for binary
//!   symmetric / erasure / Z channels at any blocklength, or through the
//!   lower sandwich envelope for Gaussian and generic channels; available
//!   for average and maximal error models.
//! * **Jar achievability** ([`jar_achievability`], [`jar_rate`]): the
//!   linear-coding (symmetric path) / constant-type random-coding
//!   (divergence path) achievability whose error bound is the upper sandwich
//!   factor plus the Berry-Esseen remainder.
//! * **DT** ([`dt_pe`], [`dt_rate`]): the dependence-testing achievability
//!   specialized to the Z channel, evaluated in the log domain.
//!
//! All rates are carried in nats; conversion to bits happens exactly once at
//! the serialization boundary through [`RateBound::rate_bits`].
//!
//! Divergence-path converses are evaluated at the solved optimal input,
//! rounded to the nearest realizable type `round(t0 * n) / n`; the
//! type-counting term `|X| ln(n+1) / n` is omitted by default (single-type
//! codebooks) and restored by [`SolverConfig::dimc_type_term`].

use std::f64::consts::LN_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::channels::{Channel, InputDist};
use crate::error::{Error, Result};
use crate::mirror::{p_outer_jar, MirrorSelect};
use crate::num;
use crate::solve::{
    converse_multiplier, exact_converse_delta_binomial, exact_converse_delta_z, invert_delta_fam,
    lambda_plus, optimize_t_sharp, optimize_t_star, solve_converse_delta_fam, solve_delta_n_fam,
    SolverConfig,
};
use crate::tilted::{ln_g, q_inv, xi_upper_only, TiltFamily, TiltedMoments};

/// Whether a converse bound controls the average or the maximal error
/// probability over messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorModel {
    Avg,
    Max,
}

/// The named rate curves this crate can evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundName {
    So,
    Nep,
    Normal,
    NormalLn,
    ExactConverseAvg,
    ExactConverseMax,
    JarAchievability,
    DtZ,
}

impl BoundName {
    /// Every supported name, in canonical emission order.
    pub const ALL: [BoundName; 8] = [
        BoundName::So,
        BoundName::Nep,
        BoundName::Normal,
        BoundName::NormalLn,
        BoundName::ExactConverseAvg,
        BoundName::ExactConverseMax,
        BoundName::JarAchievability,
        BoundName::DtZ,
    ];

    /// Stable lowercase identifier used in CSV/JSON output and CLI flags.
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundName::So => "so",
            BoundName::Nep => "nep",
            BoundName::Normal => "normal",
            BoundName::NormalLn => "normal_ln",
            BoundName::ExactConverseAvg => "exact_converse_avg",
            BoundName::ExactConverseMax => "exact_converse_max",
            BoundName::JarAchievability => "jar_achievability",
            BoundName::DtZ => "dt_z",
        }
    }

    /// Parses a name, accepting `-` for `_` and ignoring ASCII case.
    pub fn parse(s: &str) -> Result<BoundName> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        BoundName::ALL
            .iter()
            .copied()
            .find(|b| b.as_str() == norm)
            .ok_or_else(|| Error::OutOfRange(format!("unknown bound name '{s}'")))
    }

    /// True for names that carry an achieved error bound (code existence
    /// statements rather than converses or approximations).
    pub fn is_achievability(&self) -> bool {
        matches!(self, BoundName::JarAchievability | BoundName::DtZ)
    }
}

impl fmt::Display for BoundName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Solver diagnostics attached to an evaluated bound.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundMeta {
    /// Input weight `t(0)` actually used on the divergence path (after any
    /// rounding to a realizable type); `None` on the symmetric path.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    /// Solved mean shift `delta`, when the bound has one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Tilt parameter at the solution, when meaningful.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// `ln` of the outer-mirror probability bound entering the rate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ln_mirror: Option<f64>,
    /// Achieved word-error bound, for achievability names.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pe_bound: Option<f64>,
    /// Total solver evaluations spent.
    pub iterations: usize,
}

/// One evaluated point of a named curve.
///
/// Invariant (checked by the test suites on their grids, not clamped here):
/// converse and approximation rates do not exceed capacity by more than
/// 1e-9, and achievability names carry `meta.pe_bound <= eps`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateBound {
    pub name: BoundName,
    pub n: u64,
    pub eps: f64,
    /// The rate in nats per channel use.
    pub rate_nats: f64,
    pub meta: BoundMeta,
}

impl RateBound {
    /// The rate in bits per channel use; the only place nats become bits.
    pub fn rate_bits(&self) -> f64 {
        self.rate_nats / LN_2
    }
}

// ---------------------------------------------------------------------------
// Error-probability schedules.
// ---------------------------------------------------------------------------

/// How the target error probability depends on the blocklength across a
/// curve sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "snake_case")]
pub enum EpsilonSpec {
    /// Constant `eps` for every `n`.
    FixedEps(f64),
    /// `eps_n = g(delta)` at fixed mean shift `delta`: the error probability
    /// the tail approximation assigns to `delta` at each blocklength.
    FixedDelta(f64),
    /// Polynomial decay `eps_n = n^{-a} / (2 sqrt(pi a ln n)) *
    /// (1 - 1 / (2 a ln n))`, `a > 0`.
    Poly(f64),
    /// Subexponential decay `eps_n = e^{-n^a} / (2 sqrt(pi n^a)) *
    /// (1 - 1 / (2 n^a))`, `a` in (0, 1).
    Subexp(f64),
}

impl EpsilonSpec {
    /// The target error probability at blocklength `n`.
    ///
    /// `FixedDelta` evaluates `g` on the symmetric path directly; on the
    /// divergence path it seeds the input with the capacity-achieving
    /// distribution, then re-centers once at the optimal input for the
    /// seeded probability (the fixed-point is flat enough that one
    /// refinement determines `eps_n` to curve accuracy).
    pub fn eps_at(&self, ch: &Channel, n: u64, cfg: &SolverConfig) -> Result<f64> {
        if n == 0 {
            return Err(Error::OutOfRange("blocklength must be positive".into()));
        }
        let nf = n as f64;
        let eps = match *self {
            EpsilonSpec::FixedEps(e) => {
                if !(e > 0.0 && e < 1.0) {
                    return Err(Error::OutOfRange(format!("eps = {e} outside (0, 1)")));
                }
                e
            }
            EpsilonSpec::FixedDelta(d) => {
                if !(d.is_finite() && d > 0.0) {
                    return Err(Error::OutOfRange(format!("delta = {d} must be positive")));
                }
                if ch.is_bimsc() {
                    g_at_delta(&TiltFamily::for_channel(ch, None, cfg.gh_nodes)?, n, d, cfg)?
                } else {
                    let seed_t = ch.capacity_achieving_input()?;
                    let seed =
                        g_at_delta(&TiltFamily::for_channel(ch, Some(&seed_t), cfg.gh_nodes)?, n, d, cfg)?;
                    let opt = optimize_t_star(ch, n, seed, None, cfg)?;
                    g_at_delta(&TiltFamily::for_channel(ch, Some(&opt.t), cfg.gh_nodes)?, n, d, cfg)?
                }
            }
            EpsilonSpec::Poly(a) => {
                if !(a.is_finite() && a > 0.0) {
                    return Err(Error::OutOfRange(format!("poly exponent a = {a} must be positive")));
                }
                let l = nf.ln();
                if 2.0 * a * l <= 1.0 {
                    return Err(Error::Precondition(format!(
                        "poly schedule needs 2 a ln n > 1; got {:.4} at n = {n}",
                        2.0 * a * l
                    )));
                }
                nf.powf(-a) / (2.0 * (std::f64::consts::PI * a * l).sqrt())
                    * (1.0 - 1.0 / (2.0 * a * l))
            }
            EpsilonSpec::Subexp(a) => {
                if !(a.is_finite() && a > 0.0 && a < 1.0) {
                    return Err(Error::OutOfRange(format!("subexp exponent a = {a} outside (0, 1)")));
                }
                let na = nf.powf(a);
                if 2.0 * na <= 1.0 {
                    return Err(Error::Precondition(format!(
                        "subexp schedule vanishes at n = {n}, a = {a}"
                    )));
                }
                (-na).exp() / (2.0 * (std::f64::consts::PI * na).sqrt()) * (1.0 - 1.0 / (2.0 * na))
            }
        };
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Precondition(format!(
                "error-probability schedule produced eps = {eps} at n = {n}"
            )));
        }
        Ok(eps)
    }
}

/// `g` evaluated at a fixed mean shift on one tilt family.
fn g_at_delta(fam: &TiltFamily, n: u64, delta: f64, cfg: &SolverConfig) -> Result<f64> {
    let lam = invert_delta_fam(fam, delta, cfg)?.value;
    Ok(ln_g(&fam.eval(lam), n).exp())
}

// ---------------------------------------------------------------------------
// Approximation curves: SO, NEP, Normal.
// ---------------------------------------------------------------------------

/// Second-order approximation `max_t [I(t;P) - delta_{t,n}(eps)]`; on the
/// symmetric path `C - delta_n(eps)` directly.
pub fn so_rate(ch: &Channel, n: u64, eps: f64, c: Option<f64>, cfg: &SolverConfig) -> Result<RateBound> {
    let (rate, meta) = so_point(ch, n, eps, c, cfg)?;
    Ok(RateBound { name: BoundName::So, n, eps, rate_nats: rate, meta })
}

fn so_point(
    ch: &Channel,
    n: u64,
    eps: f64,
    c: Option<f64>,
    cfg: &SolverConfig,
) -> Result<(f64, BoundMeta)> {
    if ch.is_bimsc() {
        let fam = TiltFamily::for_channel(ch, None, cfg.gh_nodes)?;
        let r = solve_delta_n_fam(&fam, n, eps, cfg)?;
        let rate = fam.first_order_rate() - r.value;
        Ok((
            rate,
            BoundMeta {
                delta: Some(r.value),
                lambda: Some(r.lambda),
                iterations: r.iterations,
                ..BoundMeta::default()
            },
        ))
    } else {
        let opt = optimize_t_star(ch, n, eps, c, cfg)?;
        Ok((
            opt.objective,
            BoundMeta { t0: Some(opt.t.probs()[0]), delta: opt.delta, ..BoundMeta::default() },
        ))
    }
}

/// NEP approximation: the SO value corrected by `-ln(eps)/n + ln P(B)/n`,
/// with `P(B)` the outer-mirror bound at the solved shift (and, on the
/// divergence path, at the optimizing input).
pub fn nep_rate(ch: &Channel, n: u64, eps: f64, c: Option<f64>, cfg: &SolverConfig) -> Result<RateBound> {
    let nf = n as f64;
    let (so, mut meta, t) = if ch.is_bimsc() {
        let (so, meta) = so_point(ch, n, eps, None, cfg)?;
        (so, meta, None)
    } else {
        let opt = optimize_t_star(ch, n, eps, c, cfg)?;
        let meta =
            BoundMeta { t0: Some(opt.t.probs()[0]), delta: opt.delta, ..BoundMeta::default() };
        (opt.objective, meta, Some(opt.t))
    };
    let delta = meta.delta.expect("second-order solve always reports delta");
    let mirror = p_outer_jar(ch, t.as_ref(), n, delta, MirrorSelect::Auto, cfg)?;
    meta.ln_mirror = Some(mirror.log_prob);
    let rate = so - eps.ln() / nf + mirror.log_prob / nf;
    Ok(RateBound { name: BoundName::Nep, n, eps, rate_nats: rate, meta })
}

/// Gaussian (normal) approximation `C - sigma Q^{-1}(eps) / sqrt(n)`. On the
/// divergence path the expression is maximized over feasible inputs. With
/// `plus_ln` the third-order `ln n / (2n)` correction is added; that
/// calibration is specific to the binary symmetric channel and rejected
/// elsewhere.
pub fn normal_rate(
    ch: &Channel,
    n: u64,
    eps: f64,
    plus_ln: bool,
    c: Option<f64>,
    cfg: &SolverConfig,
) -> Result<RateBound> {
    if n == 0 {
        return Err(Error::OutOfRange("blocklength must be positive".into()));
    }
    if plus_ln && !matches!(ch, Channel::Bsc { .. }) {
        return Err(Error::Unsupported(
            "the ln n/(2n) correction is calibrated for the binary symmetric channel only".into(),
        ));
    }
    let nf = n as f64;
    let (rate, meta) = if ch.is_bimsc() {
        let fam = TiltFamily::for_channel(ch, None, cfg.gh_nodes)?;
        let sigma = fam.eval(0.0).sigma2.sqrt();
        if !(sigma > 0.0) {
            return Err(Error::DegenerateVariance("untilted statistic is constant".into()));
        }
        (fam.first_order_rate() - sigma * q_inv(eps)? / nf.sqrt(), BoundMeta::default())
    } else {
        let opt = optimize_t_sharp(ch, n, eps, c, cfg)?;
        (opt.objective, BoundMeta { t0: Some(opt.t.probs()[0]), ..BoundMeta::default() })
    };
    let rate = if plus_ln { rate + nf.ln() / (2.0 * nf) } else { rate };
    let name = if plus_ln { BoundName::NormalLn } else { BoundName::Normal };
    Ok(RateBound { name, n, eps, rate_nats: rate, meta })
}

// ---------------------------------------------------------------------------
// Exact converse.
// ---------------------------------------------------------------------------

/// Non-asymptotic converse at `(n, eps)`.
///
/// The tail condition "largest `delta` whose tail still exceeds the
/// multiplied target" is solved exactly on the lattice for binary
/// symmetric, erasure, and Z channels, and through the lower sandwich
/// envelope for Gaussian and generic channels. The resulting rate is
///
/// * symmetric path (average): `C - delta - [ln eps - ln P(B)
///   + ln(-2 ln eps / (sigma^2 n)) - ln(1 + sqrt(-2 ln eps / n)/sigma)] / n`;
/// * symmetric path (maximal): `C - delta - [ln eps
///   + ln(sqrt(-2 ln eps / n)/sigma) - ln P(B)] / n`;
/// * divergence path (average): `I(t) - delta - [ln eps - ln P(B)] / n
///   - [ln(-2 ln eps / n) - ln(1 + sqrt(-2 ln eps / n))] / n`;
/// * divergence path (maximal): `I(t) - delta - [ln eps - ln P(B)] / n
///   - ln(sqrt(-2 ln eps / n)) / n`;
///
/// plus `|X| ln(n+1) / n` on the divergence path when
/// [`SolverConfig::dimc_type_term`] is set. The divergence path evaluates at
/// the second-order-optimal input rounded to the nearest realizable type.
pub fn exact_converse(
    ch: &Channel,
    n: u64,
    eps: f64,
    model: ErrorModel,
    c: Option<f64>,
    cfg: &SolverConfig,
) -> Result<RateBound> {
    if n == 0 {
        return Err(Error::OutOfRange("blocklength must be positive".into()));
    }
    let nf = n as f64;
    let u = -eps.ln();
    let beta = (2.0 * u / nf).sqrt();
    let name = match model {
        ErrorModel::Avg => BoundName::ExactConverseAvg,
        ErrorModel::Max => BoundName::ExactConverseMax,
    };

    // Solve the tail condition for delta and gather the pieces.
    struct Solved {
        anchor: f64,
        delta: f64,
        lambda: Option<f64>,
        ln_mirror: f64,
        sigma0: Option<f64>,
        t0: Option<f64>,
        iterations: usize,
    }
    let solved = match ch {
        Channel::Bsc { p } => {
            let fam = TiltFamily::for_channel(ch, None, cfg.gh_nodes)?;
            let mult = converse_multiplier(&fam, n, eps, model)?;
            let step = ((1.0 - p) / p).ln();
            let ex = exact_converse_delta_binomial(n, *p, step, (mult * eps).ln())?;
            Solved {
                anchor: fam.first_order_rate(),
                delta: ex.value,
                lambda: None,
                ln_mirror: 0.0,
                sigma0: Some(fam.eval(0.0).sigma2.sqrt()),
                t0: None,
                iterations: ex.iterations,
            }
        }
        Channel::Bec { p } => {
            let fam = TiltFamily::for_channel(ch, None, cfg.gh_nodes)?;
            let mult = converse_multiplier(&fam, n, eps, model)?;
            let ex = exact_converse_delta_binomial(n, *p, LN_2, (mult * eps).ln())?;
            let mirror = p_outer_jar(ch, None, n, ex.value, MirrorSelect::Auto, cfg)?;
            Solved {
                anchor: fam.first_order_rate(),
                delta: ex.value,
                lambda: None,
                ln_mirror: mirror.log_prob,
                sigma0: Some(fam.eval(0.0).sigma2.sqrt()),
                t0: None,
                iterations: ex.iterations,
            }
        }
        Channel::Z { p } => {
            let opt = optimize_t_star(ch, n, eps, c, cfg)?;
            let m0 = ((opt.t.probs()[0] * nf).round() as u64).clamp(1, n - 1);
            let t_n = InputDist::binary(m0 as f64 / nf)?;
            let fam = TiltFamily::for_channel(ch, Some(&t_n), cfg.gh_nodes)?;
            let mult = converse_multiplier(&fam, n, eps, model)?;
            let zx = exact_converse_delta_z(*p, n, m0, (mult * eps).ln())?;
            debug_assert!(zx.ln_tail >= (mult * eps).ln(), "solved tail misses its target");
            let mirror = p_outer_jar(ch, Some(&t_n), n, zx.delta, MirrorSelect::Auto, cfg)?;
            Solved {
                anchor: zx.i_t,
                delta: zx.delta,
                lambda: None,
                ln_mirror: mirror.log_prob,
                sigma0: None,
                t0: Some(zx.t0),
                iterations: 0,
            }
        }
        Channel::Biagc { .. } => {
            let fam = TiltFamily::for_channel(ch, None, cfg.gh_nodes)?;
            let r = solve_converse_delta_fam(&fam, n, eps, model, cfg)?;
            Solved {
                anchor: fam.first_order_rate(),
                delta: r.value,
                lambda: Some(r.lambda),
                ln_mirror: 0.0,
                sigma0: Some(fam.eval(0.0).sigma2.sqrt()),
                t0: None,
                iterations: r.iterations,
            }
        }
        Channel::Generic { .. } => {
            let opt = optimize_t_star(ch, n, eps, c, cfg)?;
            let m0 = ((opt.t.probs()[0] * nf).round() as u64).clamp(1, n - 1);
            let t_n = InputDist::binary(m0 as f64 / nf)?;
            let fam = TiltFamily::for_channel(ch, Some(&t_n), cfg.gh_nodes)?;
            let r = solve_converse_delta_fam(&fam, n, eps, model, cfg)?;
            Solved {
                anchor: fam.first_order_rate(),
                delta: r.value,
                lambda: Some(r.lambda),
                ln_mirror: 0.0,
                sigma0: None,
                t0: Some(m0 as f64 / nf),
                iterations: r.iterations,
            }
        }
    };

    // Assemble the rate display for the family and error model.
    let correction = match (solved.sigma0, model) {
        (Some(sigma), ErrorModel::Avg) => {
            eps.ln() - solved.ln_mirror + (2.0 * u / (sigma * sigma * nf)).ln()
                - (beta / sigma).ln_1p()
        }
        (Some(sigma), ErrorModel::Max) => eps.ln() + (beta / sigma).ln() - solved.ln_mirror,
        (None, ErrorModel::Avg) => {
            eps.ln() - solved.ln_mirror + (2.0 * u / nf).ln() - beta.ln_1p()
        }
        (None, ErrorModel::Max) => eps.ln() - solved.ln_mirror + beta.ln(),
    };
    let type_term = if solved.sigma0.is_none() && cfg.dimc_type_term {
        ch.input_count() as f64 * (nf + 1.0).ln() / nf
    } else {
        0.0
    };
    let rate = solved.anchor - solved.delta - correction / nf + type_term;
    Ok(RateBound {
        name,
        n,
        eps,
        rate_nats: rate,
        meta: BoundMeta {
            t0: solved.t0,
            delta: Some(solved.delta),
            lambda: solved.lambda,
            ln_mirror: Some(solved.ln_mirror),
            pe_bound: None,
            iterations: solved.iterations,
        },
    })
}

// ---------------------------------------------------------------------------
// Jar achievability.
// ---------------------------------------------------------------------------

/// Direct evaluation of the coding achievability at one mean shift `delta`:
/// returns `(rate_nats, pe_bound)` where
///
/// * symmetric path: `pe = (xi_upper + 2(1-C_BE) M / (sqrt(n) sigma^3))
///   e^{-n r}` and `rate = C - delta - r + ln(2(1-C_BE) M / (sqrt(n)
///   sigma^3)) / n`;
/// * divergence path (at `t` rounded to a realizable type): same `pe` on the
///   divergence moments and `rate = I(t) - delta - r - [(0.5 + |X|)
///   ln(n+1) - ln(2(1-C_BE) M / (sqrt(n) sigma^3))] / n`.
///
/// `t = None` selects the symmetric path for symmetric channels and the
/// uniform input otherwise.
pub fn jar_achievability(
    ch: &Channel,
    t: Option<&InputDist>,
    n: u64,
    delta: f64,
    cfg: &SolverConfig,
) -> Result<(f64, f64)> {
    let uniform;
    let (fam, t0) = match t {
        None if ch.is_bimsc() => (TiltFamily::for_channel(ch, None, cfg.gh_nodes)?, None),
        None => {
            uniform = InputDist::uniform(ch.input_count())?;
            round_dimc_family(ch, &uniform, n, cfg)?
        }
        Some(t) if ch.is_bimsc() && t.probs().iter().all(|&w| (w - 0.5).abs() < 1e-12) => {
            (TiltFamily::for_channel(ch, None, cfg.gh_nodes)?, None)
        }
        Some(t) => round_dimc_family(ch, t, n, cfg)?,
    };
    let lam = invert_delta_fam(&fam, delta, cfg)?.value;
    let m = fam.eval(lam);
    jar_point(&fam, &m, n, t0.is_some(), ch.input_count(), cfg)
}

/// Rounds `t` to the nearest realizable type and builds the divergence
/// family there.
fn round_dimc_family(
    ch: &Channel,
    t: &InputDist,
    n: u64,
    cfg: &SolverConfig,
) -> Result<(TiltFamily, Option<f64>)> {
    if t.len() != 2 {
        // Non-binary types round per-coordinate; unsupported until an
        // optimizer exists for them.
        return Err(Error::Unsupported(
            "divergence-path achievability is implemented for binary-input channels".into(),
        ));
    }
    let m0 = ((t.probs()[0] * n as f64).round() as u64).clamp(1, n - 1);
    let t_n = InputDist::binary(m0 as f64 / n as f64)?;
    Ok((TiltFamily::for_channel(ch, Some(&t_n), cfg.gh_nodes)?, Some(m0 as f64 / n as f64)))
}

/// Rate and error bound of the jar achievability at solved moments `m`.
fn jar_point(
    fam: &TiltFamily,
    m: &TiltedMoments,
    n: u64,
    dimc: bool,
    inputs: usize,
    cfg: &SolverConfig,
) -> Result<(f64, f64)> {
    let nf = n as f64;
    let xi = xi_upper_only(m, n, cfg.c_be)?;
    let extra = 2.0 * (1.0 - cfg.c_be) * m.m3abs / (nf.sqrt() * m.sigma2 * m.sigma2.sqrt());
    let pe = (xi + extra) * (-nf * m.rate).exp();
    let rate = if dimc {
        fam.first_order_rate()
            - m.delta
            - m.rate
            - ((0.5 + inputs as f64) * (nf + 1.0).ln() - extra.ln()) / nf
    } else {
        fam.first_order_rate() - m.delta - m.rate + extra.ln() / nf
    };
    Ok((rate, pe))
}

/// Jar achievability as a curve point: the best rate whose error bound does
/// not exceed `eps`, found by walking the tilt grid to the first crossing of
/// `pe(delta) = eps` and bisecting onto the feasible side. The divergence
/// path evaluates at the second-order-optimal input rounded to the nearest
/// realizable type.
pub fn jar_rate(ch: &Channel, n: u64, eps: f64, c: Option<f64>, cfg: &SolverConfig) -> Result<RateBound> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::OutOfRange(format!(
            "eps = {eps} outside (0, 1/2); the error bound never drops below 1/2 at delta = 0"
        )));
    }
    let (fam, t0) = if ch.is_bimsc() {
        (TiltFamily::for_channel(ch, None, cfg.gh_nodes)?, None)
    } else {
        let opt = optimize_t_star(ch, n, eps, c, cfg)?;
        round_dimc_family(ch, &opt.t, n, cfg)?
    };
    let inputs = ch.input_count();
    let nf = n as f64;
    let ln_target = eps.ln();
    // ln pe(lambda) - ln eps; decreasing to -infinity as the rate term grows.
    let h = |lam: f64| -> Option<f64> {
        let m = fam.eval(lam);
        if !(m.sigma2 > 0.0) {
            return None;
        }
        let xi = xi_upper_only(&m, n, cfg.c_be).ok()?;
        let extra = 2.0 * (1.0 - cfg.c_be) * m.m3abs / (nf.sqrt() * m.sigma2 * m.sigma2.sqrt());
        Some((xi + extra).ln() - nf * m.rate - ln_target)
    };
    let lam_hi = lambda_plus(&fam, cfg);
    let lam_lo = (1e-8f64).min(lam_hi / 2.0);
    let ratio = (lam_hi / lam_lo).powf(1.0 / 255.0);
    let grid: Vec<f64> = (0..256).map(|k| lam_lo * ratio.powi(k)).collect();
    let mut iterations = 0usize;
    let mut prev = 0.0f64; // pe(0+) >= 1/2 > eps, so lambda = 0 is infeasible.
    let mut bracket = None;
    let mut first_err = None;
    for &lam in &grid {
        iterations += 1;
        match h(lam) {
            Some(v) if v <= 0.0 => {
                bracket = Some((prev, lam));
                break;
            }
            Some(_) => prev = lam,
            None => {
                if first_err.is_none() {
                    first_err = Some(lam);
                }
            }
        }
    }
    let (mut lo, mut hi) = bracket.ok_or_else(|| {
        match first_err {
            Some(lam) => Error::BerryEsseenDominates(format!(
                "achievability factor undefined from lambda = {lam:.6} before the error bound \
                 reached eps = {eps} at n = {n}"
            )),
            None => Error::BracketFailed(format!(
                "error bound stays above eps = {eps} over the admissible tilt range at n = {n}"
            )),
        }
    })?;
    // Invariant: h(hi) <= 0 (feasible); lo is infeasible or undefined.
    for _ in 0..cfg.max_iter {
        if hi - lo <= cfg.abs_tol {
            break;
        }
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        match h(mid) {
            Some(v) if v <= 0.0 => hi = mid,
            _ => lo = mid,
        }
    }
    let lam = hi;
    let m = fam.eval(lam);
    let (rate, pe) = jar_point(&fam, &m, n, t0.is_some(), inputs, cfg)?;
    Ok(RateBound {
        name: BoundName::JarAchievability,
        n,
        eps,
        rate_nats: rate,
        meta: BoundMeta {
            t0,
            delta: Some(m.delta),
            lambda: Some(lam),
            ln_mirror: None,
            pe_bound: Some(pe),
            iterations,
        },
    })
}

// ---------------------------------------------------------------------------
// Dependence-testing achievability (Z channel).
// ---------------------------------------------------------------------------

/// Log of the dependence-testing error bound for the Z channel at rate
/// `rate_bits` (bits per use) with `m` inputs set to the noisy symbol:
///
/// `pe <= sum_{i=0}^m C(m,i) (1-p)^{m-i} p^i min{1, (M-1) C(n-m+i, i) /
/// C(n, m)}`, `M = 2^{n rate_bits}`,
///
/// evaluated entirely in the log domain. Returns `-inf` when `M = 1`.
pub fn dt_ln_pe(ch: &Channel, n: u64, rate_bits: f64, m: u64) -> Result<f64> {
    let p = match ch {
        Channel::Z { p } => *p,
        _ => {
            return Err(Error::Unsupported(
                "the dependence-testing bound is implemented for the Z channel".into(),
            ))
        }
    };
    if n == 0 || m > n {
        return Err(Error::OutOfRange(format!("need 0 <= m <= n; got m = {m}, n = {n}")));
    }
    if !(rate_bits.is_finite() && rate_bits >= 0.0) {
        return Err(Error::OutOfRange(format!("rate = {rate_bits} must be non-negative")));
    }
    let x = n as f64 * rate_bits * LN_2;
    if x == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let ln_m_minus_1 = x + (-(-x).exp()).ln_1p();
    let ln_cnm = num::ln_binomial(n, m);
    let mut terms = Vec::with_capacity(m as usize + 1);
    for i in 0..=m {
        let ln_binom = num::ln_binomial(m, i) + (m - i) as f64 * (1.0 - p).ln() + i as f64 * p.ln();
        let ln_ratio = (ln_m_minus_1 + num::ln_binomial(n - m + i, i) - ln_cnm).min(0.0);
        terms.push(ln_binom + ln_ratio);
    }
    Ok(num::log_sum_exp(&terms))
}

/// Dependence-testing achievability as a curve point: the largest rate whose
/// error bound stays at or below `eps`, with the noisy-symbol count `m`
/// taken from the second-order-optimal input rounded to the lattice.
pub fn dt_rate(ch: &Channel, n: u64, eps: f64, c: Option<f64>, cfg: &SolverConfig) -> Result<RateBound> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::OutOfRange(format!("eps = {eps} outside (0, 1)")));
    }
    let opt = optimize_t_star(ch, n, eps, c, cfg)?;
    let m0 = ((opt.t.probs()[0] * n as f64).round() as u64).clamp(1, n - 1);
    let ln_target = eps.ln();
    // pe is continuous and nondecreasing in the rate; expand an upper edge
    // then bisect, keeping `lo` feasible (pe(0) = 0 <= eps).
    let mut lo = 0.0f64;
    let mut hi = (ch.capacity()? / LN_2).max(1.0 / n as f64);
    let mut iterations = 0usize;
    while dt_ln_pe(ch, n, hi, m0)? <= ln_target {
        lo = hi;
        hi *= 2.0;
        iterations += 1;
        if hi > 64.0 {
            return Err(Error::BracketFailed(format!(
                "error bound never exceeds eps = {eps} at n = {n} (all rates feasible)"
            )));
        }
    }
    for _ in 0..cfg.max_iter {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let v = dt_ln_pe(ch, n, mid, m0)?;
        if v <= ln_target {
            lo = mid;
        } else {
            hi = mid;
        }
        if (v - ln_target).abs() <= 1e-12 && v <= ln_target {
            lo = mid;
            break;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let pe = dt_ln_pe(ch, n, lo, m0)?.exp();
    Ok(RateBound {
        name: BoundName::DtZ,
        n,
        eps,
        rate_nats: lo * LN_2,
        meta: BoundMeta {
            t0: Some(m0 as f64 / n as f64),
            delta: None,
            lambda: None,
            ln_mirror: None,
            pe_bound: Some(pe),
            iterations,
        },
    })
}

// ---------------------------------------------------------------------------
// Dispatch.
// ---------------------------------------------------------------------------

/// Evaluates one named curve at `(n, eps)`. `c` is the mutual-information
/// floor handed to the divergence-path input optimizers (default: half the
/// maximal mutual information).
pub fn eval_bound(
    ch: &Channel,
    name: BoundName,
    n: u64,
    eps: f64,
    c: Option<f64>,
    cfg: &SolverConfig,
) -> Result<RateBound> {
    match name {
        BoundName::So => so_rate(ch, n, eps, c, cfg),
        BoundName::Nep => nep_rate(ch, n, eps, c, cfg),
        BoundName::Normal => normal_rate(ch, n, eps, false, c, cfg),
        BoundName::NormalLn => normal_rate(ch, n, eps, true, c, cfg),
        BoundName::ExactConverseAvg => exact_converse(ch, n, eps, ErrorModel::Avg, c, cfg),
        BoundName::ExactConverseMax => exact_converse(ch, n, eps, ErrorModel::Max, c, cfg),
        BoundName::JarAchievability => jar_rate(ch, n, eps, c, cfg),
        BoundName::DtZ => dt_rate(ch, n, eps, c, cfg),
    }
}
