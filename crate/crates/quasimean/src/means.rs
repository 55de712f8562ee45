//! Quasi-arithmetic means over validated samples.
//!
//! The central operation is [`quasi_mean`]: push every sample value through a
//! generator `f`, average the transformed values, and pull the average back
//! through `f⁻¹`. [`weighted_quasi_mean`] replaces the plain average with a
//! convex combination. Each generator gets a numerically hardened path rather
//! than a literal transform-average-invert: logs are averaged for the
//! geometric mean, the exponential mean shifts by the maximum before
//! exponentiating, and power-family means rescale by an extreme element so
//! intermediate powers stay representable. All accumulation uses compensated
//! summation over value-sorted input, which makes every mean here invariant
//! to input order down to the last bit.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::generators::{Generator, GeneratorError};
use crate::numeric::neumaier_sum;

/// Weights must sum to one within this absolute tolerance.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// Relative tolerance used by [`is_internal`], scaled by `max(1, |max(x)|)`.
pub const INTERNALITY_RTOL: f64 = 1e-9;

/// A nonempty sample of finite reals, in the order supplied by the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample(Vec<f64>);

/// Errors from constructing a [`Sample`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SampleError {
    #[error("sample must contain at least one value")]
    Empty,
    #[error("sample value at index {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
}

impl Sample {
    /// Validate and wrap a list of values: nonempty, all finite.
    pub fn new(values: Vec<f64>) -> Result<Self, SampleError> {
        if values.is_empty() {
            return Err(SampleError::Empty);
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(SampleError::NonFinite { index, value });
            }
        }
        Ok(Sample(values))
    }

    /// Sample of `n` copies of one value.
    pub fn constant(value: f64, n: usize) -> Result<Self, SampleError> {
        Self::new(vec![value; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        // Kept for API symmetry; the constructor rejects empty input.
        self.0.is_empty()
    }

    /// Smallest and largest value. Total order is safe: values are finite.
    pub fn bounds(&self) -> (f64, f64) {
        let mut min = self.0[0];
        let mut max = self.0[0];
        for &v in &self.0[1..] {
            min = min.min(v);
            max = max.max(v);
        }
        (min, max)
    }

    fn sorted(&self) -> Vec<f64> {
        let mut v = self.0.clone();
        v.sort_by(f64::total_cmp);
        v
    }
}

/// Nonnegative weights summing to one within [`WEIGHT_SUM_TOLERANCE`].
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

/// Errors from constructing a [`WeightVector`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeightError {
    #[error("weight at index {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
    #[error("weight at index {index} is negative ({value})")]
    Negative { index: usize, value: f64 },
    #[error("weights sum to {sum}, not 1 (tolerance {WEIGHT_SUM_TOLERANCE:e})")]
    SumNotOne { sum: f64 },
    #[error("weights with sum {sum} cannot be renormalized")]
    Unnormalizable { sum: f64 },
}

impl WeightVector {
    /// Validate and wrap weights: finite, nonnegative, summing to one.
    pub fn new(weights: Vec<f64>) -> Result<Self, WeightError> {
        for (index, &value) in weights.iter().enumerate() {
            if !value.is_finite() {
                return Err(WeightError::NonFinite { index, value });
            }
            if value < 0.0 {
                return Err(WeightError::Negative { index, value });
            }
        }
        let sum = neumaier_sum(weights.iter().copied());
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(WeightError::SumNotOne { sum });
        }
        Ok(WeightVector(weights))
    }

    /// Scale raw nonnegative weights so they sum to one, then validate.
    /// Fails when the raw sum is zero or not representable.
    pub fn renormalized(weights: Vec<f64>) -> Result<Self, WeightError> {
        for (index, &value) in weights.iter().enumerate() {
            if !value.is_finite() {
                return Err(WeightError::NonFinite { index, value });
            }
            if value < 0.0 {
                return Err(WeightError::Negative { index, value });
            }
        }
        let sum = neumaier_sum(weights.iter().copied());
        if sum <= 0.0 || !sum.is_finite() {
            return Err(WeightError::Unnormalizable { sum });
        }
        Self::new(weights.into_iter().map(|w| w / sum).collect())
    }

    /// Uniform weights `1/n` repeated `n` times.
    pub fn uniform(n: usize) -> Result<Self, WeightError> {
        Self::renormalized(vec![1.0; n.max(1)])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Errors from computing a mean.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeanError {
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error("sample has {values} values but the weight vector has {weights}")]
    LengthMismatch { values: usize, weights: usize },
    #[error("unknown mean {name:?} (expected arithmetic, quadratic, geometric, harmonic, power:<alpha>, or exponential)")]
    UnknownName { name: String },
    #[error("mean is not representable in f64 (intermediate overflow)")]
    Overflow,
}

/// The classical named means and their generators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeanName {
    Arithmetic,
    Quadratic,
    Geometric,
    Harmonic,
    Power(f64),
    Exponential,
}

impl MeanName {
    /// Generator whose quasi-arithmetic mean this name denotes.
    pub fn generator(self) -> Generator {
        match self {
            MeanName::Arithmetic => Generator::Identity,
            MeanName::Quadratic => Generator::Square,
            MeanName::Geometric => Generator::Log,
            MeanName::Harmonic => Generator::Reciprocal,
            MeanName::Power(alpha) => Generator::Power(alpha),
            MeanName::Exponential => Generator::Exp,
        }
    }
}

impl fmt::Display for MeanName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeanName::Arithmetic => f.write_str("arithmetic"),
            MeanName::Quadratic => f.write_str("quadratic"),
            MeanName::Geometric => f.write_str("geometric"),
            MeanName::Harmonic => f.write_str("harmonic"),
            MeanName::Power(alpha) => write!(f, "power:{alpha}"),
            MeanName::Exponential => f.write_str("exponential"),
        }
    }
}

impl FromStr for MeanName {
    type Err = MeanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let name = match s {
            "arithmetic" => MeanName::Arithmetic,
            "quadratic" => MeanName::Quadratic,
            "geometric" => MeanName::Geometric,
            "harmonic" => MeanName::Harmonic,
            "exponential" => MeanName::Exponential,
            other => match other.strip_prefix("power:") {
                Some(raw) => {
                    let alpha: f64 = raw.parse().map_err(|_| MeanError::UnknownName {
                        name: s.to_owned(),
                    })?;
                    MeanName::Power(alpha)
                }
                None => {
                    return Err(MeanError::UnknownName {
                        name: s.to_owned(),
                    })
                }
            },
        };
        name.generator().validate()?;
        Ok(name)
    }
}

/// Quasi-arithmetic mean of `s` under `g`: `f⁻¹` of the average of `f(xᵢ)`.
///
/// Every sample value must lie in `g`'s domain. The result lies between the
/// sample minimum and maximum up to rounding.
pub fn quasi_mean(s: &Sample, g: Generator) -> Result<f64, MeanError> {
    g.validate()?;
    check_domain(s.values(), g)?;
    let result = unweighted_mean(&s.sorted(), g);
    if result.is_finite() {
        Ok(result)
    } else {
        Err(MeanError::Overflow)
    }
}

/// Weighted quasi-arithmetic mean: `f⁻¹(Σ qᵢ f(xᵢ))`.
///
/// Requires one weight per value. With uniform weights this agrees with
/// [`quasi_mean`] to within accumulation-order rounding.
pub fn weighted_quasi_mean(
    s: &Sample,
    w: &WeightVector,
    g: Generator,
) -> Result<f64, MeanError> {
    g.validate()?;
    if s.len() != w.len() {
        return Err(MeanError::LengthMismatch {
            values: s.len(),
            weights: w.len(),
        });
    }
    check_domain(s.values(), g)?;
    let mut pairs: Vec<(f64, f64)> = s
        .values()
        .iter()
        .copied()
        .zip(w.values().iter().copied())
        .collect();
    pairs.sort_by(|a, b| f64::total_cmp(&a.0, &b.0).then(f64::total_cmp(&a.1, &b.1)));
    let result = weighted_mean(&pairs, g);
    if result.is_finite() {
        Ok(result)
    } else {
        Err(MeanError::Overflow)
    }
}

/// Mean selected by name; equivalent to [`quasi_mean`] with the name's
/// generator.
pub fn named_mean(s: &Sample, name: MeanName) -> Result<f64, MeanError> {
    quasi_mean(s, name.generator())
}

/// Sample median: middle value of the sorted sample, or the average of the
/// two middle values for even lengths.
pub fn median(s: &Sample) -> f64 {
    let sorted = s.sorted();
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        sorted[n / 2 - 1].midpoint(sorted[n / 2])
    }
}

/// Cauchy internality test: `min(x) - tol <= value <= max(x) + tol` with
/// `tol = INTERNALITY_RTOL * max(1, |max(x)|)`.
pub fn is_internal(s: &Sample, value: f64) -> bool {
    let (min, max) = s.bounds();
    let tol = INTERNALITY_RTOL * max.abs().max(1.0);
    value >= min - tol && value <= max + tol
}

fn check_domain(values: &[f64], g: Generator) -> Result<(), MeanError> {
    let domain = g.domain();
    for &x in values {
        if !domain.contains(x) {
            return Err(MeanError::Generator(GeneratorError::Domain {
                generator: g,
                value: x,
                domain,
            }));
        }
    }
    Ok(())
}

/// Mean over a value-sorted slice; inputs are already domain-checked.
fn unweighted_mean(sorted: &[f64], g: Generator) -> f64 {
    let n = sorted.len() as f64;
    match g {
        // Divide before summing so partial sums never exceed max|x|.
        Generator::Identity => neumaier_sum(sorted.iter().map(|x| x / n)),
        // Mean of logs, not log of product: the product over- or underflows
        // long before the log-sum leaves the representable range.
        Generator::Log => {
            let log_sum = neumaier_sum(sorted.iter().map(|x| x.ln()));
            (log_sum / n).exp()
        }
        // Shift by the maximum (log-sum-exp) so every exponent is <= 0.
        Generator::Exp => {
            let shift = sorted[sorted.len() - 1];
            let sum = neumaier_sum(sorted.iter().map(|x| (x - shift).exp()));
            shift + (sum / n).ln()
        }
        Generator::Square => scaled_power_mean(sorted, 2.0, n),
        Generator::Reciprocal => scaled_power_mean(sorted, -1.0, n),
        Generator::Power(alpha) => scaled_power_mean(sorted, alpha, n),
    }
}

/// Power mean through `m · (mean((x/m)^α))^(1/α)` where `m` is the largest
/// value for `α > 0` and the smallest for `α < 0`. Every ratio power then
/// lies in `(0, 1]`, so nothing overflows even when raw `x^α` would.
fn scaled_power_mean(sorted: &[f64], alpha: f64, n: f64) -> f64 {
    let scale = if alpha > 0.0 {
        sorted[sorted.len() - 1]
    } else {
        sorted[0]
    };
    if scale == 0.0 {
        // Only reachable for the square generator with an all-zero sample.
        return 0.0;
    }
    let sum = neumaier_sum(sorted.iter().map(|x| (x / scale).powf(alpha)));
    scale * (sum / n).powf(alpha.recip())
}

/// Weighted mean over `(value, weight)` pairs sorted by value. Zero-weight
/// pairs are skipped: their terms vanish analytically, and skipping them
/// avoids `0 · ∞` when a transformed value saturates.
fn weighted_mean(pairs: &[(f64, f64)], g: Generator) -> f64 {
    let support = || pairs.iter().copied().filter(|&(_, q)| q > 0.0);
    match g {
        Generator::Identity => neumaier_sum(support().map(|(x, q)| q * x)),
        Generator::Log => {
            let log_sum = neumaier_sum(support().map(|(x, q)| q * x.ln()));
            log_sum.exp()
        }
        Generator::Exp => {
            let shift = support().map(|(x, _)| x).fold(f64::MIN, f64::max);
            let sum = neumaier_sum(support().map(|(x, q)| q * (x - shift).exp()));
            shift + sum.ln()
        }
        Generator::Square => weighted_power_mean(pairs, 2.0),
        Generator::Reciprocal => weighted_power_mean(pairs, -1.0),
        Generator::Power(alpha) => weighted_power_mean(pairs, alpha),
    }
}

fn weighted_power_mean(pairs: &[(f64, f64)], alpha: f64) -> f64 {
    let support = || pairs.iter().copied().filter(|&(_, q)| q > 0.0);
    let scale = if alpha > 0.0 {
        support().map(|(x, _)| x).fold(f64::MIN, f64::max)
    } else {
        support().map(|(x, _)| x).fold(f64::MAX, f64::min)
    };
    if scale == 0.0 {
        return 0.0;
    }
    let sum = neumaier_sum(support().map(|(x, q)| q * (x / scale).powf(alpha)));
    scale * sum.powf(alpha.recip())
}
