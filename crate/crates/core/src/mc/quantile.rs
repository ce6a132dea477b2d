use crate::error::{Error, Result};

/// Zero-based index of the `⌈alpha · n⌉`-th order statistic.
///
/// `alpha · n` is snapped to the nearest integer when it is within rounding
/// noise of one, so `0.999 · 10^7` selects the 9 990 000-th value.
pub fn order_statistic_index(n: usize, alpha: f64) -> usize {
    let target = alpha * n as f64;
    let nearest = target.round();
    let rank = if (target - nearest).abs() <= 1e-9 * target.max(1.0) { nearest } else { target.ceil() };
    (rank as usize).clamp(1, n) - 1
}

/// Empirical `alpha`-quantile of an ascending sample (lower order statistic
/// at `⌈alpha · n⌉`).
pub fn var_quantile(sorted_losses: &[f64], alpha: f64) -> Result<f64> {
    if sorted_losses.is_empty() {
        return Err(Error::Degenerate("empty loss sample".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain("alpha", alpha, "must lie in (0, 1)"));
    }
    debug_assert!(sorted_losses.windows(2).all(|w| w[0] <= w[1]), "sample must be sorted");
    Ok(sorted_losses[order_statistic_index(sorted_losses.len(), alpha)])
}

/// Rank offset `j = ⌈sqrt(n α (1 − α))⌉`, one binomial standard deviation
/// of the rank of the `alpha`-quantile. The standard error of the quantile
/// is estimated as `(x[i + j] − x[i − j]) / 2`.
pub(crate) fn quantile_rank_spread(n: usize, alpha: f64) -> usize {
    ((n as f64 * alpha * (1.0 - alpha)).sqrt().ceil() as usize).max(1)
}

pub(crate) fn bracketing_ranks(n: usize, alpha: f64) -> [usize; 3] {
    let centre = order_statistic_index(n, alpha);
    let spread = quantile_rank_spread(n, alpha);
    [centre.saturating_sub(spread), centre, (centre + spread).min(n - 1)]
}
