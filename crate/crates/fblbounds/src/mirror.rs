//! Upper bounds on the probability of the outer mirror image of the jar:
//! the output event `B` whose probability enters the expansion and exact
//! converse formulas as `ln P(B) / n`.
//!
//! `P(B) <= 1` always holds, so the trivial bound `log_prob = 0` is always
//! available and is the only one offered for the BSC, the binary-input
//! Gaussian channel, and generic matrices. Two channels admit sharper
//! closed evaluations:
//!
//! * **BEC**: conditioned on the input, the jar event depends only on the
//!   erasure pattern, and `P(B)` coincides with the tail factor `g` at the
//!   same mean shift. The value is the `g`-approximation of the true tail
//!   (exact enumeration agrees within the sandwich slack, not pointwise),
//!   which is exactly what the downstream formulas consume: it makes the
//!   expansion formula collapse onto the second-order one.
//! * **Z channel**: `B` is contained in an entropy tail of the output
//!   marginal, bounded by a pure Chernoff exponent (prefactors dropped;
//!   exponent-only keeps the bound valid). The tail side follows the sign
//!   of `q_t(0) - 1/2`. The two branches approach a common positive
//!   exponent as `q_t(0) -> 1/2` (the surprisal shift and its variance
//!   vanish together, leaving a fixed count-space deviation `delta / L`);
//!   exactly at `q_t(0) = 1/2` the surprisal shift is zero and the formula
//!   returns the valid but loose trivial value.

use crate::channels::{Channel, InputDist};
use crate::error::{Error, Result};
use crate::solve::{invert_delta_fam, SolverConfig};
use crate::tilted::{entropy_tail_rate, ln_g, TailSide, TiltFamily};

/// How the mirror probability was bounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MirrorMethod {
    /// `P(B) <= 1`.
    Trivial,
    /// BEC: `P(B)` evaluated as the tail factor `g` at the requested shift.
    BecExact,
    /// Z channel: Chernoff exponent of an output entropy tail.
    ZEntropyTail,
}

/// Method selector for [`p_outer_jar`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MirrorSelect {
    /// Pick the sharpest method available for the channel.
    Auto,
    /// Force the trivial bound.
    Trivial,
}

/// An upper bound on `ln P(B)`.
#[derive(Debug, Clone, Copy)]
pub struct MirrorBound {
    /// Upper bound on `ln P(B)`; always `<= 0`.
    pub log_prob: f64,
    /// The method that produced it.
    pub method: MirrorMethod,
}

impl MirrorBound {
    const TRIVIAL: MirrorBound = MirrorBound { log_prob: 0.0, method: MirrorMethod::Trivial };
}

/// Bounds `ln P(B)` for the outer mirror image of the jar at mean shift
/// `delta` and blocklength `n`.
///
/// `t` selects the input distribution where it matters (the Z channel);
/// `None` uses the capacity-achieving input. Symmetric channels ignore `t`:
/// their mirror event is input-independent. With [`MirrorSelect::Auto`] the
/// BEC gets the exact-`g` evaluation and the Z channel the entropy-tail
/// exponent; everything else (and [`MirrorSelect::Trivial`]) returns the
/// trivial bound.
pub fn p_outer_jar(
    ch: &Channel,
    t: Option<&InputDist>,
    n: u64,
    delta: f64,
    select: MirrorSelect,
    cfg: &SolverConfig,
) -> Result<MirrorBound> {
    if n == 0 {
        return Err(Error::OutOfRange("blocklength must be positive".into()));
    }
    if !delta.is_finite() || delta < 0.0 {
        return Err(Error::OutOfRange(format!("delta = {delta} must be finite and >= 0")));
    }
    if select == MirrorSelect::Trivial {
        return Ok(MirrorBound::TRIVIAL);
    }
    match ch {
        Channel::Bec { .. } => {
            let fam = TiltFamily::for_channel(ch, None, cfg.gh_nodes)?;
            let lam = invert_delta_fam(&fam, delta, cfg)?.value;
            Ok(MirrorBound {
                log_prob: ln_g(&fam.eval(lam), n).min(0.0),
                method: MirrorMethod::BecExact,
            })
        }
        Channel::Z { p } => {
            let t_owned;
            let t = match t {
                Some(t) => {
                    ch.check_input(t)?;
                    t
                }
                None => {
                    t_owned = ch.capacity_achieving_input()?;
                    &t_owned
                }
            };
            let t0 = t.probs()[0];
            if !(t0 > 0.0 && t0 < 1.0) {
                return Err(Error::DegenerateVariance(format!(
                    "z-channel mirror needs both inputs used, got t0 = {t0}"
                )));
            }
            let q = ch.output_marginal(t)?;
            let q0 = q[0];
            // Threshold slope: the jar shift `delta` maps onto an output
            // surprisal shift through the ratio of the two lattice steps.
            let l_gap = ((1.0 - q0) / (p * t0)).ln();
            let signed = delta * ((1.0 - q0) / q0).ln() / l_gap;
            let (delta_p, side) = if signed >= 0.0 {
                (signed, TailSide::Left)
            } else {
                (-signed, TailSide::Right)
            };
            let rate = entropy_tail_rate(&q, delta_p, side)?;
            Ok(MirrorBound {
                log_prob: -(n as f64) * rate,
                method: MirrorMethod::ZEntropyTail,
            })
        }
        _ => Ok(MirrorBound::TRIVIAL),
    }
}
