//! Channel models and input distributions.
//!
//! Five channel families are supported, all memoryless with discrete inputs:
//!
//! * `Bsc { p }`: binary symmetric channel, crossover probability `p`;
//! * `Bec { p }`: binary erasure channel, erasure probability `p`;
//! * `Biagc { sigma2 }`: binary-input additive Gaussian channel with inputs
//!   `+1/-1` and noise variance `sigma2` (continuous output, handled by
//!   Gauss-Hermite quadrature);
//! * `Z { p }`: Z channel, where input 1 is received noiselessly and input 0
//!   flips to output 1 with probability `p`;
//! * `Generic { matrix }`: arbitrary discrete channel given by a
//!   row-stochastic transition matrix (rows = inputs, columns = outputs).
//!
//! The first three are symmetric with uniform capacity-achieving input; the
//! conditional-entropy statistic machinery treats them as one family. The Z
//! and generic channels go through the per-input divergence statistics.
//! All information quantities are in nats.

use crate::error::{Error, Result};
use crate::num;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// Tolerance for validating that probabilities sum to one.
pub const PROB_SUM_TOL: f64 = 1e-9;

/// Default number of Gauss-Hermite nodes for Gaussian-output channels.
pub const GH_NODES_DEFAULT: usize = 96;

/// A discrete-input memoryless channel.
#[derive(Debug, Clone, PartialEq)]
pub enum Channel {
    /// Binary symmetric channel with crossover probability `p` in (0, 1/2).
    Bsc { p: f64 },
    /// Binary erasure channel with erasure probability `p` in (0, 1).
    Bec { p: f64 },
    /// Binary-input additive Gaussian channel, inputs +1/-1, noise variance
    /// `sigma2` > 0. SNR in dB is `-10 log10(sigma2)`.
    Biagc { sigma2: f64 },
    /// Z channel with crossover probability `p` in (0, 1): input 0 is
    /// received as 1 with probability `p`; input 1 is received noiselessly.
    Z { p: f64 },
    /// Arbitrary discrete channel; `matrix[x][y]` is `P(y | x)`.
    Generic { matrix: Vec<Vec<f64>> },
}

/// A validated input distribution (probability vector over channel inputs).
#[derive(Debug, Clone, PartialEq)]
pub struct InputDist(Vec<f64>);

impl InputDist {
    /// Validates non-negativity and unit sum (within [`PROB_SUM_TOL`]), then
    /// renormalizes exactly so downstream sums start from a clean vector.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::DimensionMismatch("empty input distribution".into()));
        }
        if probs.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::OutOfRange(
                "input probabilities must be finite and non-negative".into(),
            ));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::OutOfRange(format!(
                "input probabilities sum to {sum}, expected 1 within {PROB_SUM_TOL}"
            )));
        }
        Ok(InputDist(probs.into_iter().map(|p| p / sum).collect()))
    }

    /// Uniform distribution over `k` inputs.
    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::DimensionMismatch("zero-size input alphabet".into()));
        }
        Ok(InputDist(vec![1.0 / k as f64; k]))
    }

    /// Binary distribution (t0, 1 - t0) with `t0` in [0, 1].
    pub fn binary(t0: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t0) {
            return Err(Error::OutOfRange(format!("t0 = {t0} outside [0, 1]")));
        }
        Ok(InputDist(vec![t0, 1.0 - t0]))
    }

    /// The probability vector.
    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    /// Number of inputs.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// True when the alphabet is empty (never, for a validated value).
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// JSON channel description accepted by the CLI and `Channel::from_json`.
///
/// Numeric fields accept either JSON numbers or decimal strings, so specs
/// written by tools that stringify floats still load. Exactly one of
/// `sigma2`/`snr_db` must be present for the Gaussian channel.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    /// One of "bsc", "bec", "biagc", "z", "generic".
    pub kind: String,
    /// Crossover/erasure probability for bsc/bec/z.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<FlexF64>,
    /// Noise variance for biagc.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<FlexF64>,
    /// SNR in dB for biagc (alternative to sigma2).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<FlexF64>,
    /// Row-stochastic transition matrix for generic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<FlexF64>>>,
}

/// A float that deserializes from either a JSON number or a decimal string.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FlexF64 {
    Num(f64),
    Str(String),
}

impl FlexF64 {
    fn value(&self) -> Result<f64> {
        match self {
            FlexF64::Num(x) => Ok(*x),
            FlexF64::Str(s) => s
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidSpec(format!("cannot parse number from {s:?}"))),
        }
    }
}

impl Channel {
    /// Binary symmetric channel; requires `p` in (0, 1/2).
    pub fn bsc(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 0.5) {
            return Err(Error::OutOfRange(format!("bsc p = {p} outside (0, 1/2)")));
        }
        Ok(Channel::Bsc { p })
    }

    /// Binary erasure channel; requires `p` in (0, 1).
    pub fn bec(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::OutOfRange(format!("bec p = {p} outside (0, 1)")));
        }
        Ok(Channel::Bec { p })
    }

    /// Binary-input additive Gaussian channel from a noise variance.
    pub fn biagc(sigma2: f64) -> Result<Self> {
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(Error::OutOfRange(format!("biagc sigma2 = {sigma2} must be positive")));
        }
        Ok(Channel::Biagc { sigma2 })
    }

    /// Binary-input additive Gaussian channel from an SNR in dB
    /// (`sigma2 = 10^(-snr_db/10)` with unit input power).
    pub fn biagc_from_snr_db(snr_db: f64) -> Result<Self> {
        if !snr_db.is_finite() {
            return Err(Error::OutOfRange("snr_db must be finite".into()));
        }
        Channel::biagc(10f64.powf(-snr_db / 10.0))
    }

    /// Z channel; requires `p` in (0, 1).
    pub fn z(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::OutOfRange(format!("z p = {p} outside (0, 1)")));
        }
        Ok(Channel::Z { p })
    }

    /// Generic discrete channel from a row-stochastic matrix. Rows are
    /// validated (non-negative, unit sum within [`PROB_SUM_TOL`]) and then
    /// renormalized exactly.
    pub fn generic(matrix: Vec<Vec<f64>>) -> Result<Self> {
        if matrix.len() < 2 {
            return Err(Error::DimensionMismatch(
                "generic channel needs at least two inputs".into(),
            ));
        }
        let cols = matrix[0].len();
        if cols < 2 {
            return Err(Error::DimensionMismatch(
                "generic channel needs at least two outputs".into(),
            ));
        }
        let mut rows = Vec::with_capacity(matrix.len());
        for (x, row) in matrix.into_iter().enumerate() {
            if row.len() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "row {x} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            if row.iter().any(|&p| !p.is_finite() || p < 0.0) {
                return Err(Error::OutOfRange(format!(
                    "row {x} has a negative or non-finite probability"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > PROB_SUM_TOL {
                return Err(Error::OutOfRange(format!(
                    "row {x} sums to {sum}, expected 1 within {PROB_SUM_TOL}"
                )));
            }
            rows.push(row.into_iter().map(|p| p / sum).collect());
        }
        Ok(Channel::Generic { matrix: rows })
    }

    /// Parses a channel from its JSON spec.
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ChannelSpec =
            serde_json::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        Channel::from_spec(&spec)
    }

    /// Builds a channel from a parsed [`ChannelSpec`].
    pub fn from_spec(spec: &ChannelSpec) -> Result<Self> {
        let p = |field: &Option<FlexF64>| -> Result<f64> {
            field
                .as_ref()
                .ok_or_else(|| Error::InvalidSpec(format!("kind {:?} requires field \"p\"", spec.kind)))?
                .value()
        };
        match spec.kind.as_str() {
            "bsc" => Channel::bsc(p(&spec.p)?),
            "bec" => Channel::bec(p(&spec.p)?),
            "z" => Channel::z(p(&spec.p)?),
            "biagc" => match (&spec.sigma2, &spec.snr_db) {
                (Some(s), None) => Channel::biagc(s.value()?),
                (None, Some(s)) => Channel::biagc_from_snr_db(s.value()?),
                (Some(_), Some(_)) => Err(Error::InvalidSpec(
                    "biagc takes exactly one of sigma2/snr_db, got both".into(),
                )),
                (None, None) => Err(Error::InvalidSpec("biagc requires sigma2 or snr_db".into())),
            },
            "generic" => {
                let m = spec
                    .matrix
                    .as_ref()
                    .ok_or_else(|| Error::InvalidSpec("generic requires field \"matrix\"".into()))?;
                let rows: Result<Vec<Vec<f64>>> = m
                    .iter()
                    .map(|row| row.iter().map(FlexF64::value).collect())
                    .collect();
                Channel::generic(rows?)
            }
            other => Err(Error::InvalidSpec(format!("unknown channel kind {other:?}"))),
        }
    }

    /// Serializes this channel back to its JSON spec.
    pub fn to_spec(&self) -> ChannelSpec {
        let mut spec = ChannelSpec {
            kind: self.kind_name().into(),
            p: None,
            sigma2: None,
            snr_db: None,
            matrix: None,
        };
        match self {
            Channel::Bsc { p } | Channel::Bec { p } | Channel::Z { p } => {
                spec.p = Some(FlexF64::Num(*p));
            }
            Channel::Biagc { sigma2 } => spec.sigma2 = Some(FlexF64::Num(*sigma2)),
            Channel::Generic { matrix } => {
                spec.matrix =
                    Some(matrix.iter().map(|r| r.iter().map(|&p| FlexF64::Num(p)).collect()).collect());
            }
        }
        spec
    }

    /// Short kind tag: "bsc", "bec", "biagc", "z", or "generic".
    pub fn kind_name(&self) -> &'static str {
        match self {
            Channel::Bsc { .. } => "bsc",
            Channel::Bec { .. } => "bec",
            Channel::Biagc { .. } => "biagc",
            Channel::Z { .. } => "z",
            Channel::Generic { .. } => "generic",
        }
    }

    /// Number of channel inputs.
    pub fn input_count(&self) -> usize {
        match self {
            Channel::Generic { matrix } => matrix.len(),
            _ => 2,
        }
    }

    /// Number of channel outputs; `None` for the continuous-output Gaussian.
    pub fn output_count(&self) -> Option<usize> {
        match self {
            Channel::Bsc { .. } | Channel::Z { .. } => Some(2),
            Channel::Bec { .. } => Some(3),
            Channel::Biagc { .. } => None,
            Channel::Generic { matrix } => Some(matrix[0].len()),
        }
    }

    /// True for the symmetric binary-input family (BSC, BEC, BIAGC) whose
    /// conditional-entropy statistic under uniform input drives the fast path.
    pub fn is_bimsc(&self) -> bool {
        matches!(self, Channel::Bsc { .. } | Channel::Bec { .. } | Channel::Biagc { .. })
    }

    /// Transition matrix for discrete-output channels. BEC output order is
    /// `[0, erasure, 1]`. Errors with `Unsupported` for the Gaussian channel.
    pub fn transition_matrix(&self) -> Result<Vec<Vec<f64>>> {
        match self {
            Channel::Bsc { p } => Ok(vec![vec![1.0 - p, *p], vec![*p, 1.0 - p]]),
            Channel::Bec { p } => Ok(vec![vec![1.0 - p, *p, 0.0], vec![0.0, *p, 1.0 - p]]),
            Channel::Z { p } => Ok(vec![vec![1.0 - p, *p], vec![0.0, 1.0]]),
            Channel::Generic { matrix } => Ok(matrix.clone()),
            Channel::Biagc { .. } => Err(Error::Unsupported(
                "biagc has a continuous output alphabet; no transition matrix".into(),
            )),
        }
    }

    /// Validates that `t` matches this channel's input alphabet.
    pub fn check_input(&self, t: &InputDist) -> Result<()> {
        if t.len() != self.input_count() {
            return Err(Error::DimensionMismatch(format!(
                "input distribution has {} entries, channel has {} inputs",
                t.len(),
                self.input_count()
            )));
        }
        Ok(())
    }

    /// Output marginal `q_t(y) = sum_x t(x) P(y|x)` for discrete-output
    /// channels; `Unsupported` for the Gaussian channel.
    pub fn output_marginal(&self, t: &InputDist) -> Result<Vec<f64>> {
        self.check_input(t)?;
        let m = self.transition_matrix()?;
        let cols = m[0].len();
        let mut q = vec![0.0; cols];
        for (tx, row) in t.probs().iter().zip(&m) {
            for (qy, py) in q.iter_mut().zip(row) {
                *qy += tx * py;
            }
        }
        Ok(q)
    }

    /// Mutual information `I(t; P)` in nats for input distribution `t`.
    pub fn mutual_information(&self, t: &InputDist) -> Result<f64> {
        self.check_input(t)?;
        match self {
            Channel::Biagc { sigma2 } => Ok(biagc_mutual_information(*sigma2, t, GH_NODES_DEFAULT)),
            _ => {
                let m = self.transition_matrix()?;
                let q = self.output_marginal(t)?;
                let mut i = 0.0;
                for (tx, row) in t.probs().iter().zip(&m) {
                    if *tx == 0.0 {
                        continue;
                    }
                    for (py, qy) in row.iter().zip(&q) {
                        if *py > 0.0 {
                            i += tx * py * (py / qy).ln();
                        }
                    }
                }
                Ok(i.max(0.0))
            }
        }
    }

    /// Channel capacity in nats. Closed forms for BSC/BEC/Z; Gauss-Hermite
    /// quadrature for the Gaussian channel; `Unsupported` for generic
    /// channels (no closed form; optimize mutual information externally).
    pub fn capacity(&self) -> Result<f64> {
        match self {
            Channel::Bsc { p } => Ok(2f64.ln() - num::binary_entropy(*p)),
            Channel::Bec { p } => Ok((1.0 - p) * 2f64.ln()),
            Channel::Biagc { sigma2 } => {
                let t = InputDist::uniform(2)?;
                Ok(biagc_mutual_information(*sigma2, &t, GH_NODES_DEFAULT))
            }
            Channel::Z { p } => {
                // C = ln(1 + (1-p) p^{p/(1-p)}).
                let s = (p / (1.0 - p) * p.ln()).exp();
                Ok(((1.0 - p) * s).ln_1p())
            }
            Channel::Generic { .. } => Err(Error::Unsupported(
                "no closed-form capacity for generic channels".into(),
            )),
        }
    }

    /// Capacity-achieving input distribution: uniform for the symmetric
    /// family, closed form for the Z channel, `Unsupported` for generic.
    pub fn capacity_achieving_input(&self) -> Result<InputDist> {
        match self {
            Channel::Bsc { .. } | Channel::Bec { .. } | Channel::Biagc { .. } => {
                InputDist::uniform(2)
            }
            Channel::Z { p } => {
                // t0 = 1 / (1 - p + p^{-p/(1-p)}); the induced output marginal
                // is q0 = (1-p) / (1 - p + p^{-p/(1-p)}).
                let inv_s = (-p / (1.0 - p) * p.ln()).exp();
                InputDist::binary(1.0 / (1.0 - p + inv_s))
            }
            Channel::Generic { .. } => Err(Error::Unsupported(
                "no closed-form capacity-achieving input for generic channels".into(),
            )),
        }
    }
}

/// Mutual information for the Gaussian channel at input distribution `t`,
/// by Gauss-Hermite quadrature with `nodes` points:
/// `I(t) = -sum_x t(x) E_{Y|x}[ln q_t(Y) - ln p(Y|x)]`, where the
/// log-likelihood ratios reduce to stable two-term log-sum-exp expressions
/// in `2y/sigma2`.
pub(crate) fn biagc_mutual_information(sigma2: f64, t: &InputDist, nodes: usize) -> f64 {
    let (t0, t1) = (t.probs()[0], t.probs()[1]);
    let (lt0, lt1) = (t0.ln(), t1.ln());
    let sigma = sigma2.sqrt();
    let (u, w) = gauss_hermite(nodes);
    let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
    let mut i = 0.0;
    for (ui, wi) in u.iter().zip(w) {
        let pi = wi * inv_sqrt_pi;
        if t0 > 0.0 {
            // X = +1: V = -ln(t0 + t1 e^{-2y/sigma2}), y ~ N(1, sigma2).
            let y = 1.0 + std::f64::consts::SQRT_2 * sigma * ui;
            i += t0 * pi * -num::logaddexp(lt0, lt1 - 2.0 * y / sigma2);
        }
        if t1 > 0.0 {
            // X = -1: V = -ln(t0 e^{2y/sigma2} + t1), y ~ N(-1, sigma2).
            let y = -1.0 + std::f64::consts::SQRT_2 * sigma * ui;
            i += t1 * pi * -num::logaddexp(lt0 + 2.0 * y / sigma2, lt1);
        }
    }
    i.max(0.0)
}

/// Gauss-Hermite nodes and weights (physicists' convention: weights sum to
/// sqrt(pi)), cached for the default and doubled sizes.
pub(crate) fn gauss_hermite(n: usize) -> (&'static [f64], &'static [f64]) {
    static CACHE_96: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    static CACHE_192: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    static CACHE_OTHER: OnceLock<std::sync::Mutex<std::collections::HashMap<usize, &'static (Vec<f64>, Vec<f64>)>>> =
        OnceLock::new();
    let cached: &'static (Vec<f64>, Vec<f64>) = match n {
        96 => CACHE_96.get_or_init(|| gauss_hermite_rule(96)),
        192 => CACHE_192.get_or_init(|| gauss_hermite_rule(192)),
        _ => {
            let map = CACHE_OTHER.get_or_init(Default::default);
            let mut guard = map.lock().expect("gauss-hermite cache poisoned");
            *guard
                .entry(n)
                .or_insert_with(|| Box::leak(Box::new(gauss_hermite_rule(n))))
        }
    };
    (&cached.0, &cached.1)
}

/// Computes the n-point Gauss-Hermite rule by the Golub-Welsch method:
/// eigendecompose the symmetric tridiagonal Jacobi matrix with off-diagonal
/// entries sqrt(i/2); nodes are the eigenvalues and each weight is
/// sqrt(pi) times the squared first component of the unit eigenvector.
fn gauss_hermite_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature rule needs at least one node");
    let mut j = nalgebra::DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        let b = (i as f64 / 2.0).sqrt();
        j[(i - 1, i)] = b;
        j[(i, i - 1)] = b;
    }
    let eig = nalgebra::SymmetricEigen::new(j);
    let mu0 = std::f64::consts::PI.sqrt();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let node = eig.eigenvalues[k];
            let v0 = eig.eigenvectors[(0, k)];
            (node, mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn parameter_domains_are_enforced() {
        assert!(Channel::bsc(0.0).is_err());
        assert!(Channel::bsc(0.5).is_err());
        assert!(Channel::bsc(0.11).is_ok());
        assert!(Channel::bec(1.0).is_err());
        assert!(Channel::z(0.0).is_err());
        assert!(Channel::biagc(0.0).is_err());
        assert!(Channel::biagc(f64::NAN).is_err());
        assert!(Channel::generic(vec![vec![0.5, 0.5]]).is_err());
        assert!(Channel::generic(vec![vec![0.6, 0.3], vec![0.5, 0.5]]).is_err());
    }

    #[test]
    fn input_dist_validates_and_renormalizes() {
        assert!(InputDist::new(vec![0.5, 0.6]).is_err());
        assert!(InputDist::new(vec![-0.1, 1.1]).is_err());
        let t = InputDist::new(vec![0.25, 0.75 + 4e-10]).unwrap();
        let sum: f64 = t.probs().iter().sum();
        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-16);
    }

    #[test]
    fn bsc_capacity_matches_frozen_value() {
        // ln 2 - H_b(0.11), evaluated independently to 16 digits.
        let c = Channel::bsc(0.11).unwrap().capacity().unwrap();
        assert_abs_diff_eq!(c, 0.3466318436412791, epsilon = 1e-15);
    }

    #[test]
    fn bec_capacity_is_one_minus_p_bits() {
        let c = Channel::bec(0.05).unwrap().capacity().unwrap();
        assert_abs_diff_eq!(c, 0.95 * LN2, epsilon = 1e-15);
    }

    #[test]
    fn z_capacity_and_optimal_input_closed_forms() {
        // At p = 1/2: p^{p/(1-p)} = 1/2, so C = ln(5/4), t0 = 2/5, q0 = 1/5.
        let ch = Channel::z(0.5).unwrap();
        assert_abs_diff_eq!(ch.capacity().unwrap(), 1.25f64.ln(), epsilon = 1e-15);
        let t = ch.capacity_achieving_input().unwrap();
        assert_abs_diff_eq!(t.probs()[0], 0.4, epsilon = 1e-15);
        let q = ch.output_marginal(&t).unwrap();
        assert_abs_diff_eq!(q[0], 0.2, epsilon = 1e-15);
        // Consistency: I at the optimal input equals the capacity formula.
        assert_abs_diff_eq!(ch.mutual_information(&t).unwrap(), ch.capacity().unwrap(), epsilon = 1e-14);
    }

    #[test]
    fn z_optimal_input_matches_derivative_root() {
        // Independent route: dI/dt0 = (1-p) ln((1-q0)/q0) - H_b(p) has a
        // unique root in t0; bisect it and compare with the closed form.
        for &p in &[0.1, 0.5, 0.9] {
            let ch = Channel::z(p).unwrap();
            let hb = num::binary_entropy(p);
            let d = |t0: f64| {
                let q0 = t0 * (1.0 - p);
                (1.0 - p) * ((1.0 - q0) / q0).ln() - hb
            };
            let (mut lo, mut hi) = (1e-12, 1.0 - 1e-12);
            assert!(d(lo) > 0.0 && d(hi) < 0.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if d(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let t_closed = ch.capacity_achieving_input().unwrap().probs()[0];
            assert_abs_diff_eq!(t_closed, 0.5 * (lo + hi), epsilon = 1e-10);
            // The root is the maximizer: I there must match capacity.
            let i = ch.mutual_information(&InputDist::binary(t_closed).unwrap()).unwrap();
            assert_abs_diff_eq!(i, ch.capacity().unwrap(), epsilon = 1e-13);
        }
    }

    #[test]
    fn mutual_information_symmetric_channels_at_uniform_is_capacity() {
        let t = InputDist::uniform(2).unwrap();
        for ch in [
            Channel::bsc(0.11).unwrap(),
            Channel::bec(0.05).unwrap(),
            Channel::biagc_from_snr_db(-3.52).unwrap(),
        ] {
            assert_abs_diff_eq!(
                ch.mutual_information(&t).unwrap(),
                ch.capacity().unwrap(),
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn bec_mutual_information_scales_input_entropy() {
        let ch = Channel::bec(0.3).unwrap();
        let t = InputDist::binary(0.2).unwrap();
        assert_abs_diff_eq!(
            ch.mutual_information(&t).unwrap(),
            0.7 * num::binary_entropy(0.2),
            epsilon = 1e-14
        );
    }

    #[test]
    fn gauss_hermite_rule_reproduces_gaussian_moments() {
        for &n in &[8usize, 96, 192] {
            let (u, w) = gauss_hermite(n);
            let sqrt_pi = std::f64::consts::PI.sqrt();
            let m0: f64 = w.iter().sum();
            let m2: f64 = u.iter().zip(w).map(|(ui, wi)| wi * ui * ui).sum();
            let m4: f64 = u.iter().zip(w).map(|(ui, wi)| wi * ui.powi(4)).sum();
            assert_abs_diff_eq!(m0, sqrt_pi, epsilon = 1e-12);
            assert_abs_diff_eq!(m2, sqrt_pi / 2.0, epsilon = 1e-12);
            assert_abs_diff_eq!(m4, 0.75 * sqrt_pi, epsilon = 1e-11);
        }
    }

    #[test]
    fn biagc_capacity_converges_in_node_count() {
        let t = InputDist::uniform(2).unwrap();
        // High-noise channel: wide analyticity strip, machine-level
        // node-doubling agreement, frozen against an independent quadrature.
        let sigma2 = 10f64.powf(3.52 / 10.0);
        let c96 = biagc_mutual_information(sigma2, &t, 96);
        let c192 = biagc_mutual_information(sigma2, &t, 192);
        assert_abs_diff_eq!(c96, c192, epsilon = 1e-13);
        assert_abs_diff_eq!(c96, 0.1829581786316262, epsilon = 1e-12);
        // Low-noise channel: the integrand's analyticity strip narrows, so
        // 96 nodes converge only to ~1e-7; document that honest limit.
        let sigma2 = 10f64.powf(-9.63 / 10.0);
        let c96 = biagc_mutual_information(sigma2, &t, 96);
        let c192 = biagc_mutual_information(sigma2, &t, 192);
        assert_abs_diff_eq!(c96, c192, epsilon = 1e-6);
        assert!((c96 - c192).abs() > 1e-12, "tolerance can be tightened");
        assert!(c96 > 0.0 && c96 < LN2);
        // Low-noise limit approaches 1 bit.
        let c = biagc_mutual_information(1e-3, &t, 96);
        assert!(c > 0.999 * LN2);
    }

    #[test]
    fn channel_spec_round_trip_and_string_coercion() {
        let ch = Channel::from_json(r#"{"kind":"bsc","p":"0.11"}"#).unwrap();
        assert_eq!(ch, Channel::bsc(0.11).unwrap());
        let ch = Channel::from_json(r#"{"kind":"biagc","snr_db":-3.52}"#).unwrap();
        assert!(matches!(ch, Channel::Biagc { .. }));
        let ch = Channel::from_json(
            r#"{"kind":"generic","matrix":[["0.9","0.1"],[0.2,0.8]]}"#,
        )
        .unwrap();
        assert_eq!(ch.input_count(), 2);
        // Round trip through to_spec.
        let z = Channel::z(0.001).unwrap();
        let text = serde_json::to_string(&z.to_spec()).unwrap();
        assert_eq!(Channel::from_json(&text).unwrap(), z);
        // Rejections.
        assert!(Channel::from_json(r#"{"kind":"nope"}"#).is_err());
        assert!(Channel::from_json(r#"{"kind":"bsc"}"#).is_err());
        assert!(Channel::from_json(r#"{"kind":"biagc","sigma2":1.0,"snr_db":0.0}"#).is_err());
        assert!(Channel::from_json(r#"{"kind":"bsc","p":0.11,"extra":1}"#).is_err());
    }

    #[test]
    fn output_marginals_match_hand_computation() {
        let ch = Channel::z(0.5).unwrap();
        let q = ch.output_marginal(&InputDist::uniform(2).unwrap()).unwrap();
        assert_abs_diff_eq!(q[0], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(q[1], 0.75, epsilon = 1e-15);
        let bec = Channel::bec(0.3).unwrap();
        let q = bec.output_marginal(&InputDist::binary(0.6).unwrap()).unwrap();
        assert_abs_diff_eq!(q[0], 0.6 * 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(q[1], 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(q[2], 0.4 * 0.7, epsilon = 1e-15);
    }
}
