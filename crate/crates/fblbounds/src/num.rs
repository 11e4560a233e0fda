//! Small numeric helpers shared across modules: stable log-domain
//! arithmetic and entropy primitives. Everything is in nats.

/// ln(e^a + e^b) without overflow.
pub(crate) fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// ln(sum_i e^{x_i}) over a slice; NEG_INFINITY on an empty or all-(-inf) slice.
pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = xs.iter().map(|&x| (x - hi).exp()).sum();
    hi + sum.ln()
}

/// ln(1 + e^a), stable for large |a|.
pub(crate) fn softplus(a: f64) -> f64 {
    if a <= 0.0 {
        a.exp().ln_1p()
    } else {
        a + (-a).exp().ln_1p()
    }
}

/// -p ln p with the convention 0 ln 0 = 0.
pub(crate) fn neg_xlnx(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        -p * p.ln()
    }
}

/// Binary entropy in nats: H_b(p) = -p ln p - (1-p) ln(1-p).
pub(crate) fn binary_entropy(p: f64) -> f64 {
    neg_xlnx(p) + neg_xlnx(1.0 - p)
}

/// Shannon entropy in nats of a probability vector (zeros allowed).
pub(crate) fn entropy(probs: &[f64]) -> f64 {
    probs.iter().map(|&p| neg_xlnx(p)).sum()
}

/// ln C(n, k) via the log-gamma function.
pub(crate) fn ln_binomial(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    let (n, k) = (n as f64, k as f64);
    statrs::function::gamma::ln_gamma(n + 1.0)
        - statrs::function::gamma::ln_gamma(k + 1.0)
        - statrs::function::gamma::ln_gamma(n - k + 1.0)
}
