//! Shared floating-point helpers: compensated summation and tolerance tests.

/// Kahan–Babuška–Neumaier compensated sum.
///
/// Carries a running correction term so that cancellation and absorption
/// errors stay near one ulp of the true sum even for long streams; the
/// correction is folded in once at the end.
pub(crate) fn neumaier_sum<I>(values: I) -> f64
where
    I: IntoIterator<Item = f64>,
{
    let mut sum = 0.0;
    let mut compensation = 0.0;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            compensation += (sum - t) + x;
        } else {
            compensation += (x - t) + sum;
        }
        sum = t;
    }
    if sum.is_finite() {
        sum + compensation
    } else {
        // Once the accumulator saturates, the correction term degenerates to
        // `inf - inf`; the saturated value itself is the honest answer.
        sum
    }
}

/// Relative closeness with an absolute floor of one:
/// `|a - b| <= tol * max(1, |a|, |b|)`.
///
/// The floor keeps the test meaningful near zero without a separate
/// absolute-tolerance knob.
pub(crate) fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
