//! Generator functions for quasi-arithmetic means.
//!
//! A generator is a continuous, strictly monotone map `f` on an interval,
//! paired with its inverse. Averaging through a generator — apply `f`,
//! average, apply `f⁻¹` — produces the whole classical family of means:
//! the identity gives the arithmetic mean, the square the quadratic mean,
//! the logarithm the geometric mean, the reciprocal the harmonic mean,
//! powers the power means, and the exponential the soft-max-like
//! exponential mean.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Interval a generator accepts (or produces).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interval {
    /// `(-∞, ∞)`
    AllReals,
    /// `[0, ∞)`
    NonNegative,
    /// `(0, ∞)`
    Positive,
}

impl Interval {
    /// Whether a finite `x` lies inside the interval.
    pub fn contains(self, x: f64) -> bool {
        if !x.is_finite() {
            return false;
        }
        match self {
            Interval::AllReals => true,
            Interval::NonNegative => x >= 0.0,
            Interval::Positive => x > 0.0,
        }
    }

    fn describe(self) -> &'static str {
        match self {
            Interval::AllReals => "all reals",
            Interval::NonNegative => "[0, ∞)",
            Interval::Positive => "(0, ∞)",
        }
    }
}

/// Monotonicity direction of a generator on its domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// A strictly monotone generator `f` with a closed-form inverse.
///
/// `Power(alpha)` requires a finite, nonzero exponent; `alpha = 0` has no
/// strictly monotone power map (that limit is covered by [`Generator::Log`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Generator {
    /// `f(x) = x` on all reals.
    Identity,
    /// `f(x) = x²` on `[0, ∞)`.
    Square,
    /// `f(x) = ln x` on `(0, ∞)`.
    Log,
    /// `f(x) = 1/x` on `(0, ∞)`; strictly decreasing.
    Reciprocal,
    /// `f(x) = x^α` on `(0, ∞)`; decreasing when `α < 0`.
    Power(f64),
    /// `f(x) = eˣ` on all reals.
    Exp,
}

/// Errors from evaluating or constructing a generator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeneratorError {
    /// The argument lies outside the generator's domain.
    #[error("{value} is outside the domain {} of the {generator} generator", domain.describe())]
    Domain {
        generator: Generator,
        value: f64,
        domain: Interval,
    },
    /// The argument to the inverse lies outside the generator's image.
    #[error("{value} is outside the image {} of the {generator} generator", image.describe())]
    Image {
        generator: Generator,
        value: f64,
        image: Interval,
    },
    /// A power generator was built with a zero or non-finite exponent.
    #[error("power generator needs a finite nonzero exponent, got {alpha}")]
    BadExponent { alpha: f64 },
    /// A generator name could not be parsed.
    #[error("unknown generator {name:?} (expected identity, square, log, reciprocal, power:<alpha>, or exp)")]
    UnknownName { name: String },
}

impl Generator {
    /// Domain on which the generator is defined and strictly monotone.
    pub fn domain(self) -> Interval {
        match self {
            Generator::Identity | Generator::Exp => Interval::AllReals,
            Generator::Square => Interval::NonNegative,
            Generator::Log | Generator::Reciprocal | Generator::Power(_) => Interval::Positive,
        }
    }

    /// Image of the domain under the generator; the inverse is defined here.
    pub fn image(self) -> Interval {
        match self {
            Generator::Identity | Generator::Log => Interval::AllReals,
            Generator::Square => Interval::NonNegative,
            Generator::Reciprocal | Generator::Power(_) | Generator::Exp => Interval::Positive,
        }
    }

    /// Direction of monotonicity. Only the reciprocal and negative powers
    /// decrease; everything else increases.
    pub fn direction(self) -> Direction {
        match self {
            Generator::Reciprocal => Direction::Decreasing,
            Generator::Power(alpha) if alpha < 0.0 => Direction::Decreasing,
            _ => Direction::Increasing,
        }
    }

    /// Validate constructor parameters (the power exponent).
    pub fn validate(self) -> Result<(), GeneratorError> {
        match self {
            Generator::Power(alpha) if alpha == 0.0 || !alpha.is_finite() => {
                Err(GeneratorError::BadExponent { alpha })
            }
            _ => Ok(()),
        }
    }

    /// Apply the generator. Fails with [`GeneratorError::Domain`] when `x`
    /// is outside the domain (non-finite inputs are always outside).
    pub fn forward(self, x: f64) -> Result<f64, GeneratorError> {
        self.validate()?;
        if !self.domain().contains(x) {
            return Err(GeneratorError::Domain {
                generator: self,
                value: x,
                domain: self.domain(),
            });
        }
        Ok(match self {
            Generator::Identity => x,
            Generator::Square => x * x,
            Generator::Log => x.ln(),
            Generator::Reciprocal => x.recip(),
            Generator::Power(alpha) => x.powf(alpha),
            Generator::Exp => x.exp(),
        })
    }

    /// Apply the inverse map. Fails with [`GeneratorError::Image`] when `y`
    /// is outside the image of the domain.
    pub fn inverse(self, y: f64) -> Result<f64, GeneratorError> {
        self.validate()?;
        if !self.image().contains(y) {
            return Err(GeneratorError::Image {
                generator: self,
                value: y,
                image: self.image(),
            });
        }
        Ok(match self {
            Generator::Identity => y,
            Generator::Square => y.sqrt(),
            Generator::Log => y.exp(),
            Generator::Reciprocal => y.recip(),
            Generator::Power(alpha) => y.powf(alpha.recip()),
            Generator::Exp => y.ln(),
        })
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Identity => f.write_str("identity"),
            Generator::Square => f.write_str("square"),
            Generator::Log => f.write_str("log"),
            Generator::Reciprocal => f.write_str("reciprocal"),
            Generator::Power(alpha) => write!(f, "power:{alpha}"),
            Generator::Exp => f.write_str("exp"),
        }
    }
}

impl FromStr for Generator {
    type Err = GeneratorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let gen = match s {
            "identity" => Generator::Identity,
            "square" => Generator::Square,
            "log" => Generator::Log,
            "reciprocal" => Generator::Reciprocal,
            "exp" => Generator::Exp,
            other => match other.strip_prefix("power:") {
                Some(raw) => {
                    let alpha: f64 = raw.parse().map_err(|_| GeneratorError::UnknownName {
                        name: s.to_owned(),
                    })?;
                    Generator::Power(alpha)
                }
                None => {
                    return Err(GeneratorError::UnknownName {
                        name: s.to_owned(),
                    })
                }
            },
        };
        gen.validate()?;
        Ok(gen)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn forward_matches_hand_values() {
        assert_eq!(Generator::Identity.forward(-3.5).unwrap(), -3.5);
        assert_eq!(Generator::Square.forward(3.0).unwrap(), 9.0);
        assert_eq!(Generator::Log.forward(1.0).unwrap(), 0.0);
        assert_eq!(Generator::Reciprocal.forward(4.0).unwrap(), 0.25);
        assert_eq!(Generator::Power(3.0).forward(2.0).unwrap(), 8.0);
        assert_eq!(Generator::Exp.forward(0.0).unwrap(), 1.0);
    }

    #[test]
    fn inverse_matches_hand_values() {
        assert_eq!(Generator::Square.inverse(9.0).unwrap(), 3.0);
        assert_eq!(Generator::Log.inverse(0.0).unwrap(), 1.0);
        assert_eq!(Generator::Reciprocal.inverse(0.25).unwrap(), 4.0);
        assert_eq!(Generator::Power(3.0).inverse(8.0).unwrap(), 2.0);
        assert_eq!(Generator::Exp.inverse(1.0).unwrap(), 0.0);
    }

    #[test]
    fn domain_violations_are_rejected() {
        assert!(matches!(
            Generator::Log.forward(0.0),
            Err(GeneratorError::Domain { value, .. }) if value == 0.0
        ));
        assert!(matches!(
            Generator::Square.forward(-1.0),
            Err(GeneratorError::Domain { .. })
        ));
        assert!(matches!(
            Generator::Reciprocal.forward(-2.0),
            Err(GeneratorError::Domain { .. })
        ));
        assert!(matches!(
            Generator::Power(0.5).forward(0.0),
            Err(GeneratorError::Domain { .. })
        ));
        // Square accepts the boundary point, log does not.
        assert_eq!(Generator::Square.forward(0.0).unwrap(), 0.0);
    }

    #[test]
    fn image_violations_are_rejected() {
        assert!(matches!(
            Generator::Exp.inverse(0.0),
            Err(GeneratorError::Image { .. })
        ));
        assert!(matches!(
            Generator::Square.inverse(-1.0),
            Err(GeneratorError::Image { .. })
        ));
        assert!(matches!(
            Generator::Reciprocal.inverse(0.0),
            Err(GeneratorError::Image { .. })
        ));
        assert_eq!(Generator::Square.inverse(0.0).unwrap(), 0.0);
    }

    #[test]
    fn non_finite_inputs_are_domain_errors() {
        for g in [
            Generator::Identity,
            Generator::Square,
            Generator::Log,
            Generator::Reciprocal,
            Generator::Power(2.0),
            Generator::Exp,
        ] {
            assert!(g.forward(f64::NAN).is_err());
            assert!(g.forward(f64::INFINITY).is_err());
            assert!(g.inverse(f64::NAN).is_err());
        }
    }

    #[test]
    fn zero_or_non_finite_power_exponent_is_rejected() {
        assert!(matches!(
            Generator::Power(0.0).forward(2.0),
            Err(GeneratorError::BadExponent { .. })
        ));
        assert!(Generator::Power(f64::NAN).inverse(2.0).is_err());
        assert!("power:0".parse::<Generator>().is_err());
        assert!("power:inf".parse::<Generator>().is_err());
    }

    #[test]
    fn names_round_trip() {
        for name in ["identity", "square", "log", "reciprocal", "power:-2.5", "exp"] {
            let g: Generator = name.parse().unwrap();
            assert_eq!(g.to_string(), name);
        }
        assert!("median".parse::<Generator>().is_err());
        assert!("power:abc".parse::<Generator>().is_err());
    }

    #[test]
    fn directions() {
        assert_eq!(Generator::Identity.direction(), Direction::Increasing);
        assert_eq!(Generator::Reciprocal.direction(), Direction::Decreasing);
        assert_eq!(Generator::Power(-2.0).direction(), Direction::Decreasing);
        assert_eq!(Generator::Power(0.5).direction(), Direction::Increasing);
        assert_eq!(Generator::Exp.direction(), Direction::Increasing);
    }

    fn all_generators() -> Vec<Generator> {
        vec![
            Generator::Identity,
            Generator::Square,
            Generator::Log,
            Generator::Reciprocal,
            Generator::Power(-2.0),
            Generator::Power(0.5),
            Generator::Power(3.0),
            Generator::Exp,
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        // inverse(forward(x)) returns to x within 1e-12 relative on a range
        // where neither side over- or underflows.
        #[test]
        fn round_trip_is_tight(idx in 0usize..8, x in 1e-6f64..1e6) {
            let g = all_generators()[idx];
            // exp overflows past ~709, so keep its probe inside a safe band.
            let x = if matches!(g, Generator::Exp) { x.min(500.0) } else { x };
            let y = g.forward(x).unwrap();
            let back = g.inverse(y).unwrap();
            prop_assert!(
                (back - x).abs() <= 1e-12 * x.abs().max(1.0),
                "{g}: {x} -> {y} -> {back}"
            );
        }

        // forward is strictly monotone in its stated direction.
        #[test]
        fn forward_is_strictly_monotone(idx in 0usize..8, a in 1e-3f64..1e3, gap in 1e-3f64..10.0) {
            let g = all_generators()[idx];
            // Keep exp inside its finite range so both probes stay comparable.
            let a = if matches!(g, Generator::Exp) { a.min(500.0) } else { a };
            let b = a + gap;
            let fa = g.forward(a).unwrap();
            let fb = g.forward(b).unwrap();
            match g.direction() {
                Direction::Increasing => prop_assert!(fa < fb, "{g}: f({a})={fa} !< f({b})={fb}"),
                Direction::Decreasing => prop_assert!(fa > fb, "{g}: f({a})={fa} !> f({b})={fb}"),
            }
        }
    }
}
