//! Brute-force exact computations on small instances.
//!
//! Nothing here is fast or asymptotically clever; everything is an exact
//! finite enumeration in plain probability space, deliberately built on a
//! different route than the analytic machinery it validates:
//!
//! * [`exact_tail_bimsc`]: the conditional-surprisal tail
//!   `Pr{ -(1/n) ln p(X^n|Y^n) > H(X|Y) + delta }` (strict, matching the
//!   converse event) as an explicit binomial sum, for BSC and BEC;
//! * [`exact_tail_dimc`]: the divergence tail
//!   `Pr{ (1/n) ln (p(Y^n|X^n)/q_t(Y^n)) <= I(t;P) - delta | X^n = x^n }`
//!   (inclusive, matching the type-conditioned converse event) by direct
//!   convolution of per-position atom lists;
//! * [`exact_mirror`]: the probability under `q_t` of the union, over all
//!   input sequences of type `t`, of the outer mirror images of their jars;
//! * [`exact_mirror_bimsc`]: the same union over all input sequences for
//!   symmetric channels, where it reduces to a per-position extreme
//!   surprisal tail.
//!
//! Events sit on lattices, so every threshold comparison carries a small
//! explicit slack (1e-12 of the threshold scale, far below any atom gap)
//! choosing the side the defining event dictates: strict events exclude
//! boundary atoms, inclusive events keep them.

use crate::channels::{Channel, InputDist};
use crate::error::{Error, Result};
use crate::num;

/// Result of an exact enumeration.
#[derive(Debug, Clone, Copy)]
pub struct TailResult {
    /// Exact probability of the event.
    pub prob: f64,
    /// Number of enumerated terms inside the event.
    pub terms: usize,
}

/// Largest blocklength accepted by the binomial-sum oracles.
pub const MAX_N_BINOMIAL: u64 = 30;
/// Largest blocklength accepted by the convolution/enumeration oracles.
pub const MAX_N_ENUM: u64 = 14;
/// Atom-count guard for the convolution oracles.
const MAX_ATOMS: usize = 2_000_000;
/// Relative slack applied to lattice threshold comparisons.
const THRESH_SLACK: f64 = 1e-12;
/// Merge tolerance for equal atom values during convolution.
const MERGE_TOL: f64 = 1e-14;

fn check_n(n: u64, cap: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::OutOfRange("blocklength must be positive".into()));
    }
    if n > cap {
        return Err(Error::TooLarge(format!(
            "exact enumeration capped at n = {cap}, got {n}"
        )));
    }
    Ok(())
}

fn slack(thresh: f64) -> f64 {
    THRESH_SLACK * thresh.abs().max(1.0)
}

// ---------------------------------------------------------------------------
// Binomial-sum tails for the two-atom symmetric channels.
// ---------------------------------------------------------------------------

/// Exact `Pr{ -(1/n) ln p(X^n|Y^n) > H(X|Y) + delta }` for BSC and BEC.
///
/// The surprisal is a two-atom lattice walk (flip count for the BSC,
/// erasure count for the BEC, both with step `L`), so the strict event is
/// `{ K > n p + n delta / L }` for `K ~ Bin(n, p)`, summed in the log
/// domain. `n` is capped at [`MAX_N_BINOMIAL`].
pub fn exact_tail_bimsc(ch: &Channel, n: u64, delta: f64) -> Result<TailResult> {
    check_n(n, MAX_N_BINOMIAL)?;
    if !delta.is_finite() || delta < 0.0 {
        return Err(Error::OutOfRange(format!("delta = {delta} must be finite and >= 0")));
    }
    let (p, step) = match ch {
        Channel::Bsc { p } => (*p, ((1.0 - p) / p).ln()),
        Channel::Bec { p } => (*p, std::f64::consts::LN_2),
        _ => {
            return Err(Error::Unsupported(format!(
                "binomial surprisal oracle covers bsc/bec, not {}",
                ch.kind_name()
            )))
        }
    };
    // Strict count threshold; the slack keeps exactly-attained lattice
    // points out of the event despite float roundoff.
    let c = n as f64 * p + n as f64 * delta / step;
    let k_min = ((c + slack(c)).floor() as i64 + 1).max(0) as u64;
    let mut ln_terms = Vec::new();
    for k in k_min..=n {
        ln_terms
            .push(num::ln_binomial(n, k) + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln());
    }
    let prob = if ln_terms.is_empty() { 0.0 } else { num::log_sum_exp(&ln_terms).exp() };
    Ok(TailResult { prob, terms: ln_terms.len() })
}

// ---------------------------------------------------------------------------
// Convolution machinery.
// ---------------------------------------------------------------------------

/// Convolves sorted `(value, prob)` atom lists one position at a time,
/// merging values that coincide within [`MERGE_TOL`].
fn convolve<'a>(positions: impl Iterator<Item = &'a [(f64, f64)]>) -> Result<Vec<(f64, f64)>> {
    let mut acc: Vec<(f64, f64)> = vec![(0.0, 1.0)];
    for atoms in positions {
        let mut next = Vec::with_capacity(acc.len() * atoms.len());
        for &(v, pr) in &acc {
            for &(dv, dp) in atoms {
                next.push((v + dv, pr * dp));
            }
        }
        if next.len() > MAX_ATOMS {
            return Err(Error::TooLarge(format!(
                "convolution support exceeded {MAX_ATOMS} atoms"
            )));
        }
        next.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(next.len());
        for (v, pr) in next {
            match merged.last_mut() {
                Some((mv, mp)) if (v - *mv).abs() <= MERGE_TOL * v.abs().max(1.0) => *mp += pr,
                _ => merged.push((v, pr)),
            }
        }
        acc = merged;
    }
    Ok(acc)
}

/// Per-input atom lists of the divergence statistic `ln(p(y|x)/q(y))`
/// weighted by the conditional law, for a discrete channel.
fn divergence_atoms(ch: &Channel, q: &[f64]) -> Result<Vec<Vec<(f64, f64)>>> {
    let matrix = ch.transition_matrix()?;
    let lists = matrix
        .iter()
        .map(|row| {
            row.iter()
                .zip(q)
                .filter(|(p, _)| **p > 0.0)
                .map(|(p, qy)| ((p / qy).ln(), *p))
                .collect()
        })
        .collect();
    Ok(lists)
}

/// Counts `round(t_x n)` per input, requiring each to be integral within
/// 1e-9 and the counts to sum to `n`.
fn type_counts(t: &InputDist, n: u64) -> Result<Vec<u64>> {
    let mut counts = Vec::with_capacity(t.len());
    let mut total = 0u64;
    for &tx in t.probs() {
        let m = tx * n as f64;
        if (m - m.round()).abs() > 1e-9 {
            return Err(Error::Precondition(format!(
                "input type weight {tx} is not a multiple of 1/{n}"
            )));
        }
        let m = m.round() as u64;
        counts.push(m);
        total += m;
    }
    if total != n {
        return Err(Error::Precondition(format!(
            "type counts sum to {total}, expected {n}"
        )));
    }
    Ok(counts)
}

fn dimc_tail_from_counts(ch: &Channel, counts: &[u64], n: u64, delta: f64) -> Result<TailResult> {
    if !delta.is_finite() {
        return Err(Error::OutOfRange(format!("delta = {delta} must be finite")));
    }
    let t = InputDist::new(counts.iter().map(|&m| m as f64 / n as f64).collect())?;
    let q = ch.output_marginal(&t)?;
    let info = ch.mutual_information(&t)?;
    let lists = divergence_atoms(ch, &q)?;
    let positions = counts
        .iter()
        .enumerate()
        .flat_map(|(x, &m)| std::iter::repeat(lists[x].as_slice()).take(m as usize));
    let atoms = convolve(positions)?;
    if atoms.last().expect("nonempty").0 - atoms[0].0 <= MERGE_TOL {
        return Err(Error::DegenerateVariance(
            "divergence statistic is constant for this type".into(),
        ));
    }
    // Inclusive event S <= n (I - delta); slack keeps boundary atoms in.
    let thresh = n as f64 * (info - delta);
    let cut = thresh + slack(thresh);
    let mut prob = 0.0;
    let mut terms = 0;
    for &(v, pr) in atoms.iter().take_while(|(v, _)| *v <= cut) {
        let _ = v;
        prob += pr;
        terms += 1;
    }
    Ok(TailResult { prob, terms })
}

/// Exact type-conditioned divergence tail
/// `Pr{ (1/n) ln (p(Y^n|X^n)/q_t(Y^n)) <= I(t;P) - delta | X^n = x^n }`
/// for any `x^n` of type `t` (the value is permutation-invariant).
///
/// Discrete channels only; `n` capped at [`MAX_N_ENUM`]; `t n` must be
/// integral.
pub fn exact_tail_dimc(ch: &Channel, t: &InputDist, n: u64, delta: f64) -> Result<TailResult> {
    check_n(n, MAX_N_ENUM)?;
    ch.check_input(t)?;
    let counts = type_counts(t, n)?;
    dimc_tail_from_counts(ch, &counts, n, delta)
}

/// Sequence-order variant of [`exact_tail_dimc`]: the type and the
/// conditional law are read off the explicit input sequence. Exists to
/// check that the computation is invariant under reordering.
pub fn exact_tail_dimc_seq(ch: &Channel, seq: &[usize], delta: f64) -> Result<TailResult> {
    let n = seq.len() as u64;
    check_n(n, MAX_N_ENUM)?;
    let k = ch.input_count();
    let mut counts = vec![0u64; k];
    for &x in seq {
        if x >= k {
            return Err(Error::OutOfRange(format!("input symbol {x} outside alphabet of {k}")));
        }
        counts[x] += 1;
    }
    let t = InputDist::new(counts.iter().map(|&m| m as f64 / n as f64).collect())?;
    let q = ch.output_marginal(&t)?;
    let info = ch.mutual_information(&t)?;
    let lists = divergence_atoms(ch, &q)?;
    let atoms = convolve(seq.iter().map(|&x| lists[x].as_slice()))?;
    if atoms.last().expect("nonempty").0 - atoms[0].0 <= MERGE_TOL {
        return Err(Error::DegenerateVariance(
            "divergence statistic is constant for this sequence".into(),
        ));
    }
    let thresh = n as f64 * (info - delta);
    let cut = thresh + slack(thresh);
    let mut prob = 0.0;
    let mut terms = 0;
    for &(_, pr) in atoms.iter().take_while(|(v, _)| *v <= cut) {
        prob += pr;
        terms += 1;
    }
    Ok(TailResult { prob, terms })
}

// ---------------------------------------------------------------------------
// Exact mirror-set probabilities.
// ---------------------------------------------------------------------------

/// Exact probability, under the i.i.d. output marginal `q_t`, of the union
/// over all input sequences of type `t` of the outer mirror images of their
/// jars: the set of `y^n` for which some type-`t` sequence `x^n` satisfies
/// `-inf < (1/n) ln (p(y^n|x^n)/q_t(y^n)) <= I(t;P) - delta`.
///
/// For each `y^n` the minimum of `ln p(y^n|x^n)` over type-`t` sequences is
/// found combinatorially: positions where one input cannot produce `y_i`
/// are forced to the other, and the remaining zero-count budget is spent on
/// the positions with the smallest likelihood gap. Binary-input discrete
/// channels, `n` capped at [`MAX_N_ENUM`].
pub fn exact_mirror(ch: &Channel, t: &InputDist, n: u64, delta: f64) -> Result<TailResult> {
    check_n(n, MAX_N_ENUM)?;
    ch.check_input(t)?;
    if ch.input_count() != 2 {
        return Err(Error::Unsupported(
            "mirror enumeration is implemented for binary-input channels".into(),
        ));
    }
    if !delta.is_finite() {
        return Err(Error::OutOfRange(format!("delta = {delta} must be finite")));
    }
    let counts = type_counts(t, n)?;
    let (n0, n1) = (counts[0], counts[1]);
    let t = InputDist::new(vec![n0 as f64 / n as f64, n1 as f64 / n as f64])?;
    let q = ch.output_marginal(&t)?;
    let info = ch.mutual_information(&t)?;
    let matrix = ch.transition_matrix()?;
    let ny = q.len();
    if (ny as f64).powi(n as i32) > MAX_ATOMS as f64 {
        return Err(Error::TooLarge(format!(
            "output enumeration {ny}^{n} exceeds {MAX_ATOMS}"
        )));
    }
    let thresh = n as f64 * (info - delta);
    let cut = thresh + slack(thresh);
    let mut prob = 0.0;
    let mut terms = 0usize;
    let mut y = vec![0usize; n as usize];
    'outer: loop {
        // Weight under q_t; skip outputs with zero marginal mass.
        let mut ln_q = 0.0;
        let mut reachable = true;
        for &yi in &y {
            if q[yi] > 0.0 {
                ln_q += q[yi].ln();
            } else {
                reachable = false;
                break;
            }
        }
        if reachable {
            if let Some(min_ln_p) = min_type_likelihood(&matrix, &y, n0, n1) {
                if min_ln_p - ln_q <= cut {
                    prob += ln_q.exp();
                    terms += 1;
                }
            }
        }
        // Odometer over Y^n.
        for i in 0..y.len() {
            y[i] += 1;
            if y[i] < ny {
                continue 'outer;
            }
            y[i] = 0;
        }
        break;
    }
    Ok(TailResult { prob, terms })
}

/// Minimum of `ln p(y^n|x^n)` over binary `x^n` with exactly `n0` zeros,
/// restricted to sequences that can produce `y^n`; `None` when no such
/// sequence exists.
fn min_type_likelihood(matrix: &[Vec<f64>], y: &[usize], n0: u64, n1: u64) -> Option<f64> {
    let mut forced = 0.0f64;
    let (mut forced0, mut forced1) = (0u64, 0u64);
    let mut gaps: Vec<(f64, f64)> = Vec::with_capacity(y.len()); // (c0 - c1, c1)
    for &yi in y {
        let (p0, p1) = (matrix[0][yi], matrix[1][yi]);
        match (p0 > 0.0, p1 > 0.0) {
            (true, true) => gaps.push((p0.ln() - p1.ln(), p1.ln())),
            (true, false) => {
                forced += p0.ln();
                forced0 += 1;
            }
            (false, true) => {
                forced += p1.ln();
                forced1 += 1;
            }
            (false, false) => return None,
        }
    }
    if forced0 > n0 || forced1 > n1 {
        return None;
    }
    let extra0 = (n0 - forced0) as usize;
    gaps.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut total = forced;
    for (i, (gap, c1)) in gaps.into_iter().enumerate() {
        total += c1;
        if i < extra0 {
            total += gap;
        }
    }
    Some(total)
}

/// Exact probability, under the true output marginal at uniform input, of
/// the union over all `x^n` of the symmetric-channel mirror sets: outputs
/// `y^n` for which some `x^n` with `p(x^n|y^n) > 0` has
/// `-(1/n) ln p(x^n|y^n) > H(X|Y) + delta` (strict).
///
/// The per-position worst-case posterior surprisal makes this an i.i.d.
/// tail, evaluated by convolution. Discrete symmetric channels only.
pub fn exact_mirror_bimsc(ch: &Channel, n: u64, delta: f64) -> Result<TailResult> {
    check_n(n, MAX_N_BINOMIAL)?;
    if !ch.is_bimsc() {
        return Err(Error::NotSymmetric(format!(
            "mirror-union oracle needs a symmetric channel, got {}",
            ch.kind_name()
        )));
    }
    if !delta.is_finite() || delta < 0.0 {
        return Err(Error::OutOfRange(format!("delta = {delta} must be finite and >= 0")));
    }
    let matrix = ch.transition_matrix()?;
    let t = InputDist::uniform(2)?;
    let q = ch.output_marginal(&t)?;
    // Per output letter: the largest posterior surprisal over inputs that
    // can produce it, and the letter's marginal mass; entropy alongside.
    let mut atoms = Vec::new();
    let mut h = 0.0;
    for (yi, &qy) in q.iter().enumerate() {
        if qy <= 0.0 {
            continue;
        }
        let mut worst = f64::NEG_INFINITY;
        for row in matrix.iter() {
            let post = 0.5 * row[yi] / qy;
            if post > 0.0 {
                worst = worst.max(-post.ln());
                h += qy * post * (-post.ln());
            }
        }
        atoms.push((worst, qy));
    }
    let others = convolve(std::iter::repeat(atoms.as_slice()).take(n as usize))?;
    let thresh = n as f64 * (h + delta);
    let cut = thresh + slack(thresh);
    let mut prob = 0.0;
    let mut terms = 0;
    for &(v, pr) in others.iter() {
        if v > cut {
            prob += pr;
            terms += 1;
        }
    }
    Ok(TailResult { prob, terms })
}
