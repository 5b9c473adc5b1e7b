//! Rank-correlation metric used to score meta-model quality.
//!
//! A surrogate only needs to order candidate solutions the way the original
//! fitness function does, so the quality measure is Spearman's rho between
//! the two evaluation vectors rather than any pointwise error.

use crate::error::{Error, Result};

/// Average ranks (1-based) with ties sharing the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share the average 1-based rank
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = shared;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation of two equally long vectors.
///
/// Ranks use the average-rank convention for ties and the result is the
/// Pearson correlation of the rank vectors, which reduces to the classical
/// `1 - 6*sum(d^2)/(q(q^2-1))` form when no ties are present. Zero variance
/// in either rank vector is reported as [`Error::UndefinedCorrelation`].
pub fn spearman_rho(o: &[f64], a: &[f64]) -> Result<f64> {
    if o.len() != a.len() {
        return Err(Error::VectorLength(o.len(), a.len()));
    }
    if o.len() < 2 {
        return Err(Error::TooFewValues(o.len()));
    }
    if o.iter().chain(a.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let ra = average_ranks(o);
    let rb = average_ranks(a);
    let q = o.len() as f64;
    let mean = (q + 1.0) / 2.0;
    let mut num = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for i in 0..o.len() {
        let da = ra[i] - mean;
        let db = rb[i] - mean;
        num += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if var_a == 0.0 || var_b == 0.0 {
        return Err(Error::UndefinedCorrelation);
    }
    // single sqrt of the exact product keeps rho(x, x) == 1.0 bit-exact
    let rho = num / (var_a * var_b).sqrt();
    Ok(rho.clamp(-1.0, 1.0))
}
