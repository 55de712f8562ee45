//! Randomized audits of the defining mean axioms.
//!
//! An [`AggregatorRef`] names something that turns a list of reals into one
//! real — a quasi-arithmetic mean, the median, or a caller-supplied closure.
//! Each check draws seeded random samples and probes one law: reflexivity,
//! symmetry, monotonicity, continuity (a spot Lipschitz bound), block
//! associativity, and internality. Every check derives its generator stream
//! from the seed and its own axiom id, so calling a check directly yields the
//! identical outcome to running it inside [`full_audit`], and two audits with
//! the same seed agree exactly.
//!
//! The associativity check is the discriminating one: all quasi-arithmetic
//! means pass it, while the median — which satisfies the other five — fails
//! it. [`find_median_counterexample`] produces a small exact witness of that
//! failure by exhaustive search instead of sampling.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::chisini::Evaluator;
use crate::generators::{GeneratorError, Interval};
use crate::means::{self, MeanError, MeanName, Sample, SampleError};
use crate::numeric::rel_close;

/// Value-range policy for drawing audit samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainPolicy {
    /// Draw log-uniformly from `[1e-3, 1e3]`.
    Positive,
    /// Draw uniformly from `[-1e3, 1e3]`.
    AllReals,
}

impl DomainPolicy {
    fn interval(self) -> Interval {
        match self {
            DomainPolicy::Positive => Interval::Positive,
            DomainPolicy::AllReals => Interval::AllReals,
        }
    }
}

/// An aggregator under audit.
#[derive(Clone)]
pub enum AggregatorRef {
    /// A named quasi-arithmetic mean.
    Mean(MeanName),
    /// The sample median.
    Median,
    /// A caller-supplied variadic evaluator: it must accept any sample length
    /// the audit draws (1 through the configured maximum) and return a finite
    /// real for in-policy values.
    Custom {
        name: String,
        domain: DomainPolicy,
        eval: Evaluator,
    },
}

impl AggregatorRef {
    /// Wrap a closure for auditing.
    pub fn custom<F>(name: impl Into<String>, domain: DomainPolicy, eval: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        AggregatorRef::Custom {
            name: name.into(),
            domain,
            eval: Arc::new(eval),
        }
    }

    /// Display name used in reports.
    pub fn name(&self) -> String {
        match self {
            AggregatorRef::Mean(name) => name.to_string(),
            AggregatorRef::Median => "median".to_owned(),
            AggregatorRef::Custom { name, .. } => name.clone(),
        }
    }

    /// Where audit samples for this aggregator are drawn from.
    pub fn domain_policy(&self) -> DomainPolicy {
        match self {
            AggregatorRef::Mean(name) => match name.generator().domain() {
                Interval::AllReals => DomainPolicy::AllReals,
                Interval::NonNegative | Interval::Positive => DomainPolicy::Positive,
            },
            AggregatorRef::Median => DomainPolicy::AllReals,
            AggregatorRef::Custom { domain, .. } => *domain,
        }
    }

    /// Apply the aggregator to a value list.
    pub fn evaluate(&self, values: &[f64]) -> Result<f64, AuditError> {
        match self {
            AggregatorRef::Mean(name) => {
                let s = Sample::new(values.to_vec())?;
                Ok(means::named_mean(&s, *name)?)
            }
            AggregatorRef::Median => {
                let s = Sample::new(values.to_vec())?;
                Ok(means::median(&s))
            }
            AggregatorRef::Custom { name, domain, eval } => {
                for &v in values {
                    if !domain.interval().contains(v) {
                        return Err(AuditError::Domain {
                            name: name.clone(),
                            value: v,
                        });
                    }
                }
                let out = eval(values);
                if !out.is_finite() {
                    return Err(AuditError::NonFiniteAggregate {
                        name: name.clone(),
                        value: out,
                    });
                }
                Ok(out)
            }
        }
    }
}

impl std::fmt::Debug for AggregatorRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AggregatorRef::Mean(name) => f.debug_tuple("Mean").field(name).finish(),
            AggregatorRef::Median => f.write_str("Median"),
            AggregatorRef::Custom { name, domain, .. } => f
                .debug_struct("Custom")
                .field("name", name)
                .field("domain", domain)
                .finish_non_exhaustive(),
        }
    }
}

impl FromStr for AggregatorRef {
    type Err = AuditError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "median" {
            return Ok(AggregatorRef::Median);
        }
        s.parse::<MeanName>()
            .map(AggregatorRef::Mean)
            .map_err(|_| AuditError::UnknownTarget { name: s.to_owned() })
    }
}

/// The six audited axioms, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axiom {
    Reflexivity,
    Symmetry,
    Monotonicity,
    ContinuitySpot,
    Associativity,
    Internality,
}

impl Axiom {
    pub const ALL: [Axiom; 6] = [
        Axiom::Reflexivity,
        Axiom::Symmetry,
        Axiom::Monotonicity,
        Axiom::ContinuitySpot,
        Axiom::Associativity,
        Axiom::Internality,
    ];

    /// Stream id separating this axiom's random draws from the others'.
    fn stream(self) -> u64 {
        match self {
            Axiom::Reflexivity => 1,
            Axiom::Symmetry => 2,
            Axiom::Monotonicity => 3,
            Axiom::ContinuitySpot => 4,
            Axiom::Associativity => 5,
            Axiom::Internality => 6,
        }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Axiom::Reflexivity => "reflexivity",
            Axiom::Symmetry => "symmetry",
            Axiom::Monotonicity => "monotonicity",
            Axiom::ContinuitySpot => "continuity-spot",
            Axiom::Associativity => "associativity",
            Axiom::Internality => "internality",
        })
    }
}

/// Result of one check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// The check could not run to completion (evaluator error).
    Error,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Error => "error",
        })
    }
}

/// Concrete data reproducing a violation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    /// The sample that exposed the violation.
    pub sample: Vec<f64>,
    /// A second derived sample when the axiom compares two evaluations
    /// (permuted, perturbed, or block-replaced).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterpart: Option<Vec<f64>>,
    /// Block length for the associativity check.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub lhs: f64,
    pub rhs: f64,
    pub delta: f64,
}

/// Outcome of one axiom check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomOutcome {
    pub axiom: Axiom,
    pub verdict: Verdict,
    /// Trials requested (and run, unless the check errored).
    pub trials: u32,
    /// Trials skipped because a derived sample exited the domain.
    pub skipped: u32,
    /// First violation found, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    /// Monotonicity only: whether every trial increased strictly.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strict: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl AxiomOutcome {
    fn from_witness(
        axiom: Axiom,
        trials: u32,
        skipped: u32,
        witness: Option<Witness>,
        strict: Option<bool>,
    ) -> Self {
        AxiomOutcome {
            axiom,
            verdict: if witness.is_some() {
                Verdict::Fail
            } else {
                Verdict::Pass
            },
            trials,
            skipped,
            witness,
            strict,
            error: None,
        }
    }

    fn from_error(axiom: Axiom, trials: u32, err: &AuditError) -> Self {
        AxiomOutcome {
            axiom,
            verdict: Verdict::Error,
            trials,
            skipped: 0,
            witness: None,
            strict: None,
            error: Some(err.to_string()),
        }
    }
}

/// Full six-axiom audit report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub target: String,
    pub trials: u32,
    pub seed: u64,
    /// One outcome per axiom, in [`Axiom::ALL`] order.
    pub outcomes: Vec<AxiomOutcome>,
}

impl AxiomReport {
    pub fn outcome(&self, axiom: Axiom) -> &AxiomOutcome {
        self.outcomes
            .iter()
            .find(|o| o.axiom == axiom)
            .expect("report carries every axiom")
    }

    pub fn all_pass(&self) -> bool {
        self.outcomes.iter().all(|o| o.verdict == Verdict::Pass)
    }

    pub fn failed(&self) -> Vec<Axiom> {
        self.outcomes
            .iter()
            .filter(|o| o.verdict != Verdict::Pass)
            .map(|o| o.axiom)
            .collect()
    }
}

/// Tolerances for the six checks. Relative tolerances apply with an absolute
/// floor of one (`tol · max(1, |·|)`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Reflexivity: `|M(c,…,c) - c| ≤ tol · max(1, |c|)`.
    pub reflexivity: f64,
    /// Symmetry: relative disagreement between permuted evaluations.
    pub symmetry: f64,
    /// Monotonicity: absolute decrease allowed before failing.
    pub monotonicity: f64,
    /// Continuity: Lipschitz factor `L` in `|Δ| ≤ L·h`.
    pub continuity_lipschitz: f64,
    /// Associativity: relative disagreement after block replacement.
    pub associativity: f64,
    /// Internality: relative slack beyond the sample bounds.
    pub internality: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            reflexivity: 1e-9,
            symmetry: 1e-12,
            monotonicity: 1e-12,
            continuity_lipschitz: 1e6,
            associativity: 1e-9,
            internality: 1e-9,
        }
    }
}

impl Tolerances {
    /// All tolerances must be strictly positive and finite.
    pub fn validate(&self) -> Result<(), AuditError> {
        let fields = [
            ("reflexivity", self.reflexivity),
            ("symmetry", self.symmetry),
            ("monotonicity", self.monotonicity),
            ("continuity_lipschitz", self.continuity_lipschitz),
            ("associativity", self.associativity),
            ("internality", self.internality),
        ];
        for (name, value) in fields {
            if !(value > 0.0 && value.is_finite()) {
                return Err(AuditError::BadTolerance { name, value });
            }
        }
        Ok(())
    }
}

/// Audit parameters. `max_len` bounds drawn sample lengths (min 2 applies to
/// the multi-value checks; associativity always draws lengths 3..=10).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditConfig {
    pub trials: u32,
    pub seed: u64,
    pub max_len: usize,
    pub tolerances: Tolerances,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            trials: 500,
            seed: 0,
            max_len: 16,
            tolerances: Tolerances::default(),
        }
    }
}

impl AuditConfig {
    fn checked(&self) -> Result<&Self, AuditError> {
        if self.trials == 0 {
            return Err(AuditError::ZeroTrials);
        }
        self.tolerances.validate()?;
        Ok(self)
    }
}

/// Errors from running audits.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuditError {
    #[error(transparent)]
    Mean(#[from] MeanError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error("{value} is outside the {name} aggregator's domain")]
    Domain { name: String, value: f64 },
    #[error("aggregator {name} returned a non-finite value ({value})")]
    NonFiniteAggregate { name: String, value: f64 },
    #[error("no associativity counterexample exists in the searched space")]
    NoWitnessFound,
    #[error("counterexample search needs max_n >= 3, got {0}")]
    SearchTooSmall(usize),
    #[error("unknown audit target {name:?} (expected a mean name or \"median\")")]
    UnknownTarget { name: String },
    #[error("trials must be at least 1")]
    ZeroTrials,
    #[error("tolerance {name} must be positive and finite, got {value}")]
    BadTolerance { name: &'static str, value: f64 },
}

fn rng_for(seed: u64, axiom: Axiom) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(axiom.stream());
    rng
}

fn draw_value(rng: &mut ChaCha8Rng, policy: DomainPolicy) -> f64 {
    match policy {
        DomainPolicy::Positive => 10f64.powf(rng.random_range(-3.0..=3.0)),
        DomainPolicy::AllReals => rng.random_range(-1e3..=1e3),
    }
}

fn draw_sample(rng: &mut ChaCha8Rng, policy: DomainPolicy, len: usize) -> Vec<f64> {
    (0..len).map(|_| draw_value(rng, policy)).collect()
}

/// M(c, …, c) = c within tolerance, for random constants and lengths.
pub fn check_reflexivity(a: &AggregatorRef, trials: u32, seed: u64) -> Result<AxiomOutcome, AuditError> {
    check_reflexivity_with(a, &AuditConfig { trials, seed, ..AuditConfig::default() })
}

pub fn check_reflexivity_with(
    a: &AggregatorRef,
    cfg: &AuditConfig,
) -> Result<AxiomOutcome, AuditError> {
    let cfg = cfg.checked()?;
    let mut rng = rng_for(cfg.seed, Axiom::Reflexivity);
    let policy = a.domain_policy();
    let mut witness = None;
    for _ in 0..cfg.trials {
        let n = rng.random_range(1..=cfg.max_len);
        let c = draw_value(&mut rng, policy);
        let v = a.evaluate(&vec![c; n])?;
        if (v - c).abs() > cfg.tolerances.reflexivity * c.abs().max(1.0) && witness.is_none() {
            witness = Some(Witness {
                sample: vec![c; n],
                counterpart: None,
                k: None,
                lhs: v,
                rhs: c,
                delta: (v - c).abs(),
            });
        }
    }
    Ok(AxiomOutcome::from_witness(
        Axiom::Reflexivity,
        cfg.trials,
        0,
        witness,
        None,
    ))
}

/// Permuting the sample leaves the value unchanged within tolerance.
pub fn check_symmetry(a: &AggregatorRef, trials: u32, seed: u64) -> Result<AxiomOutcome, AuditError> {
    check_symmetry_with(a, &AuditConfig { trials, seed, ..AuditConfig::default() })
}

pub fn check_symmetry_with(
    a: &AggregatorRef,
    cfg: &AuditConfig,
) -> Result<AxiomOutcome, AuditError> {
    let cfg = cfg.checked()?;
    let mut rng = rng_for(cfg.seed, Axiom::Symmetry);
    let policy = a.domain_policy();
    let mut witness = None;
    for _ in 0..cfg.trials {
        let n = rng.random_range(2..=cfg.max_len);
        let sample = draw_sample(&mut rng, policy, n);
        let mut permuted = sample.clone();
        permuted.shuffle(&mut rng);
        let lhs = a.evaluate(&sample)?;
        let rhs = a.evaluate(&permuted)?;
        if !rel_close(lhs, rhs, cfg.tolerances.symmetry) && witness.is_none() {
            witness = Some(Witness {
                sample,
                counterpart: Some(permuted),
                k: None,
                lhs,
                rhs,
                delta: (lhs - rhs).abs(),
            });
        }
    }
    Ok(AxiomOutcome::from_witness(
        Axiom::Symmetry,
        cfg.trials,
        0,
        witness,
        None,
    ))
}

/// Raising one value must not lower the result (beyond rounding slack); the
/// outcome also reports whether the increase was strict in every trial.
pub fn check_monotonicity(a: &AggregatorRef, trials: u32, seed: u64) -> Result<AxiomOutcome, AuditError> {
    check_monotonicity_with(a, &AuditConfig { trials, seed, ..AuditConfig::default() })
}

pub fn check_monotonicity_with(
    a: &AggregatorRef,
    cfg: &AuditConfig,
) -> Result<AxiomOutcome, AuditError> {
    let cfg = cfg.checked()?;
    let mut rng = rng_for(cfg.seed, Axiom::Monotonicity);
    let policy = a.domain_policy();
    let mut witness = None;
    let mut strict = true;
    for _ in 0..cfg.trials {
        let n = rng.random_range(2..=cfg.max_len);
        let sample = draw_sample(&mut rng, policy, n);
        let i = rng.random_range(0..n);
        let delta = (1e-3 * sample[i].abs()).max(1e-6);
        let mut perturbed = sample.clone();
        perturbed[i] += delta;
        let lhs = a.evaluate(&sample)?;
        let rhs = a.evaluate(&perturbed)?;
        if rhs < lhs - cfg.tolerances.monotonicity && witness.is_none() {
            witness = Some(Witness {
                sample,
                counterpart: Some(perturbed),
                k: None,
                lhs,
                rhs,
                delta: lhs - rhs,
            });
            strict = false;
            continue;
        }
        strict &= rhs > lhs;
    }
    Ok(AxiomOutcome::from_witness(
        Axiom::Monotonicity,
        cfg.trials,
        0,
        witness,
        Some(strict),
    ))
}

/// Spot Lipschitz bound: nudging one coordinate by `h ∈ {1e-4, 1e-6}` moves
/// the value by at most `L·h`.
pub fn check_continuity_spot(a: &AggregatorRef, trials: u32, seed: u64) -> Result<AxiomOutcome, AuditError> {
    check_continuity_spot_with(a, &AuditConfig { trials, seed, ..AuditConfig::default() })
}

pub fn check_continuity_spot_with(
    a: &AggregatorRef,
    cfg: &AuditConfig,
) -> Result<AxiomOutcome, AuditError> {
    let cfg = cfg.checked()?;
    let mut rng = rng_for(cfg.seed, Axiom::ContinuitySpot);
    let policy = a.domain_policy();
    let lipschitz = cfg.tolerances.continuity_lipschitz;
    let mut witness = None;
    for _ in 0..cfg.trials {
        let n = rng.random_range(2..=cfg.max_len);
        let sample = draw_sample(&mut rng, policy, n);
        let i = rng.random_range(0..n);
        let lhs = a.evaluate(&sample)?;
        for h in [1e-4, 1e-6] {
            let mut nudged = sample.clone();
            nudged[i] += h;
            let rhs = a.evaluate(&nudged)?;
            if (rhs - lhs).abs() > lipschitz * h && witness.is_none() {
                witness = Some(Witness {
                    sample: sample.clone(),
                    counterpart: Some(nudged),
                    k: None,
                    lhs,
                    rhs,
                    delta: (rhs - lhs).abs(),
                });
            }
        }
    }
    Ok(AxiomOutcome::from_witness(
        Axiom::ContinuitySpot,
        cfg.trials,
        0,
        witness,
        None,
    ))
}

/// Block associativity: replacing the first `k` values by their own
/// aggregate leaves the overall value unchanged within tolerance. Trials
/// where the replacement value exits the domain are counted as skipped.
pub fn check_associativity(a: &AggregatorRef, trials: u32, seed: u64) -> Result<AxiomOutcome, AuditError> {
    check_associativity_with(a, &AuditConfig { trials, seed, ..AuditConfig::default() })
}

pub fn check_associativity_with(
    a: &AggregatorRef,
    cfg: &AuditConfig,
) -> Result<AxiomOutcome, AuditError> {
    let cfg = cfg.checked()?;
    let mut rng = rng_for(cfg.seed, Axiom::Associativity);
    let policy = a.domain_policy();
    let mut witness = None;
    let mut skipped = 0;
    for _ in 0..cfg.trials {
        let n = rng.random_range(3..=10);
        let k = rng.random_range(1..n);
        let sample = draw_sample(&mut rng, policy, n);
        let block_value = a.evaluate(&sample[..k])?;
        let lhs = a.evaluate(&sample)?;
        let mut replaced = vec![block_value; k];
        replaced.extend_from_slice(&sample[k..]);
        let rhs = match a.evaluate(&replaced) {
            Ok(v) => v,
            // The block aggregate left the domain the aggregator accepts;
            // the law cannot be probed on this draw.
            Err(AuditError::Domain { .. })
            | Err(AuditError::Mean(MeanError::Generator(GeneratorError::Domain { .. }))) => {
                skipped += 1;
                continue;
            }
            Err(other) => return Err(other),
        };
        if !rel_close(lhs, rhs, cfg.tolerances.associativity) && witness.is_none() {
            witness = Some(Witness {
                sample,
                counterpart: Some(replaced),
                k: Some(k),
                lhs,
                rhs,
                delta: (lhs - rhs).abs(),
            });
        }
    }
    Ok(AxiomOutcome::from_witness(
        Axiom::Associativity,
        cfg.trials,
        skipped,
        witness,
        None,
    ))
}

/// The value lies between the sample minimum and maximum, with relative
/// slack scaled by `max(1, |max|)`.
pub fn check_internality(a: &AggregatorRef, trials: u32, seed: u64) -> Result<AxiomOutcome, AuditError> {
    check_internality_with(a, &AuditConfig { trials, seed, ..AuditConfig::default() })
}

pub fn check_internality_with(
    a: &AggregatorRef,
    cfg: &AuditConfig,
) -> Result<AxiomOutcome, AuditError> {
    let cfg = cfg.checked()?;
    let mut rng = rng_for(cfg.seed, Axiom::Internality);
    let policy = a.domain_policy();
    let mut witness = None;
    for _ in 0..cfg.trials {
        let n = rng.random_range(2..=cfg.max_len);
        let sample = draw_sample(&mut rng, policy, n);
        let value = a.evaluate(&sample)?;
        let min = sample.iter().copied().fold(f64::MAX, f64::min);
        let max = sample.iter().copied().fold(f64::MIN, f64::max);
        let tol = cfg.tolerances.internality * max.abs().max(1.0);
        if (value < min - tol || value > max + tol) && witness.is_none() {
            let bound = if value < min { min } else { max };
            witness = Some(Witness {
                sample,
                counterpart: None,
                k: None,
                lhs: value,
                rhs: bound,
                delta: (value - bound).abs(),
            });
        }
    }
    Ok(AxiomOutcome::from_witness(
        Axiom::Internality,
        cfg.trials,
        0,
        witness,
        None,
    ))
}

fn run_check(a: &AggregatorRef, axiom: Axiom, cfg: &AuditConfig) -> Result<AxiomOutcome, AuditError> {
    match axiom {
        Axiom::Reflexivity => check_reflexivity_with(a, cfg),
        Axiom::Symmetry => check_symmetry_with(a, cfg),
        Axiom::Monotonicity => check_monotonicity_with(a, cfg),
        Axiom::ContinuitySpot => check_continuity_spot_with(a, cfg),
        Axiom::Associativity => check_associativity_with(a, cfg),
        Axiom::Internality => check_internality_with(a, cfg),
    }
}

/// Run all six checks. Check-level errors become `Error` verdicts rather
/// than aborting the report.
pub fn full_audit(a: &AggregatorRef, trials: u32, seed: u64) -> AxiomReport {
    full_audit_with(a, &AuditConfig { trials, seed, ..AuditConfig::default() })
}

pub fn full_audit_with(a: &AggregatorRef, cfg: &AuditConfig) -> AxiomReport {
    let outcomes = Axiom::ALL
        .iter()
        .map(|&axiom| {
            run_check(a, axiom, cfg)
                .unwrap_or_else(|err| AxiomOutcome::from_error(axiom, cfg.trials, &err))
        })
        .collect();
    AxiomReport {
        target: a.name(),
        trials: cfg.trials,
        seed: cfg.seed,
        outcomes,
    }
}

/// Exact witness that the median violates block associativity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MedianCounterexample {
    /// Strictly increasing sample drawn from the grid.
    pub sample: Vec<f64>,
    /// Length of the replaced prefix block.
    pub k: usize,
    /// Median of the block.
    pub block_value: f64,
    /// The sample after block replacement.
    pub replaced: Vec<f64>,
    /// Median of the original sample.
    pub lhs: f64,
    /// Median of the replaced sample.
    pub rhs: f64,
}

/// Search for a median associativity counterexample by exhaustive
/// enumeration.
///
/// The space searched is every strictly increasing sample of odd length
/// `n ≤ max_n` drawn from the distinct grid values, with every odd block
/// length `k < n`; odd lengths keep both medians single order statistics, so
/// the witness is exact and free of any even-length averaging. Subsets are
/// visited shortest-first in lexicographic order and the first violation is
/// returned.
pub fn find_median_counterexample(
    max_n: usize,
    value_grid: &[f64],
) -> Result<MedianCounterexample, AuditError> {
    if max_n < 3 {
        return Err(AuditError::SearchTooSmall(max_n));
    }
    let mut grid: Vec<f64> = value_grid.iter().copied().filter(|v| v.is_finite()).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let tol = Tolerances::default().associativity;
    for n in (3..=max_n.min(grid.len())).step_by(2) {
        let mut idx: Vec<usize> = (0..n).collect();
        loop {
            let subset: Vec<f64> = idx.iter().map(|&i| grid[i]).collect();
            for k in (1..n).step_by(2) {
                let block_value = subset[k / 2]; // median of the sorted prefix
                let lhs = subset[n / 2];
                let mut replaced = vec![block_value; k];
                replaced.extend_from_slice(&subset[k..]);
                let rhs = means::median(&Sample::new(replaced.clone()).expect("nonempty finite"));
                if !rel_close(lhs, rhs, tol) {
                    return Ok(MedianCounterexample {
                        sample: subset,
                        k,
                        block_value,
                        replaced,
                        lhs,
                        rhs,
                    });
                }
            }
            // Advance to the next combination in lexicographic order.
            let mut i = n;
            while i > 0 && idx[i - 1] == grid.len() - n + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..n {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    Err(AuditError::NoWitnessFound)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean(name: MeanName) -> AggregatorRef {
        AggregatorRef::Mean(name)
    }

    #[test]
    fn classical_means_pass_every_axiom() {
        for name in [
            MeanName::Arithmetic,
            MeanName::Geometric,
            MeanName::Power(-2.0),
            MeanName::Exponential,
        ] {
            let report = full_audit(&mean(name), 100, 0);
            assert!(report.all_pass(), "{name}: {:?}", report.failed());
        }
    }

    #[test]
    fn median_fails_associativity_and_nothing_else() {
        let report = full_audit(&AggregatorRef::Median, 300, 0);
        assert_eq!(report.failed(), vec![Axiom::Associativity], "{report:?}");
        let outcome = report.outcome(Axiom::Associativity);
        assert_eq!(outcome.verdict, Verdict::Fail);
        let witness = outcome.witness.as_ref().expect("failure carries a witness");
        // The witness must reproduce: medians of the original and the
        // block-replaced sample really disagree.
        let s = Sample::new(witness.sample.clone()).unwrap();
        let r = Sample::new(witness.counterpart.clone().unwrap()).unwrap();
        let lhs = means::median(&s);
        let rhs = means::median(&r);
        assert_eq!(lhs, witness.lhs);
        assert_eq!(rhs, witness.rhs);
        assert!(!rel_close(lhs, rhs, 1e-9));
    }

    #[test]
    fn audits_are_deterministic() {
        let a = full_audit(&mean(MeanName::Geometric), 50, 42);
        let b = full_audit(&mean(MeanName::Geometric), 50, 42);
        assert_eq!(a, b);
    }

    #[test]
    fn direct_checks_match_audit_components() {
        let a = AggregatorRef::Median;
        let report = full_audit(&a, 80, 7);
        assert_eq!(
            &check_symmetry(&a, 80, 7).unwrap(),
            report.outcome(Axiom::Symmetry)
        );
        assert_eq!(
            &check_associativity(&a, 80, 7).unwrap(),
            report.outcome(Axiom::Associativity)
        );
    }

    #[test]
    fn running_sum_fails_the_expected_axioms() {
        // A plain sum is symmetric, monotone, and continuous, but it is not
        // reflexive, internal, or block-associative. Summing in sorted order
        // keeps the symmetry comparison bit-exact.
        let sum = AggregatorRef::custom("running-sum", DomainPolicy::AllReals, |v: &[f64]| {
            let mut v = v.to_vec();
            v.sort_by(f64::total_cmp);
            v.iter().sum()
        });
        let report = full_audit(&sum, 200, 0);
        assert_eq!(
            report.failed(),
            vec![Axiom::Reflexivity, Axiom::Associativity, Axiom::Internality],
            "{report:?}"
        );
        assert_eq!(report.outcome(Axiom::Monotonicity).strict, Some(true));
    }

    #[test]
    fn domain_exits_are_skipped_not_failed() {
        // mean - 1 dips below the positive domain whenever a block averages
        // under 1, so some associativity trials must be skipped.
        let shifted = AggregatorRef::custom("shifted-mean", DomainPolicy::Positive, |v: &[f64]| {
            v.iter().sum::<f64>() / v.len() as f64 - 1.0
        });
        let outcome = check_associativity(&shifted, 200, 0).unwrap();
        assert!(outcome.skipped > 0, "{outcome:?}");
        assert!(outcome.skipped < outcome.trials, "{outcome:?}");
    }

    #[test]
    fn evaluator_errors_become_error_verdicts() {
        let broken = AggregatorRef::custom("broken", DomainPolicy::AllReals, |_: &[f64]| f64::NAN);
        let report = full_audit(&broken, 10, 0);
        for outcome in &report.outcomes {
            assert_eq!(outcome.verdict, Verdict::Error, "{outcome:?}");
            assert!(outcome.error.as_deref().unwrap_or("").contains("broken"));
        }
    }

    #[test]
    fn median_counterexample_matches_hand_check() {
        let w = find_median_counterexample(5, &[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap();
        assert_eq!(w.sample, vec![1.0, 2.0, 3.0, 4.0, 100.0]);
        assert_eq!(w.k, 3);
        assert_eq!(w.block_value, 2.0); // median(1, 2, 3)
        assert_eq!(w.replaced, vec![2.0, 2.0, 2.0, 4.0, 100.0]);
        assert_eq!(w.lhs, 3.0);
        assert_eq!(w.rhs, 2.0);
    }

    #[test]
    fn counterexample_search_reports_exhaustion() {
        assert!(matches!(
            find_median_counterexample(3, &[1.0, 1.0, 1.0]),
            Err(AuditError::NoWitnessFound)
        ));
        assert!(matches!(
            find_median_counterexample(5, &[0.0, 1.0]),
            Err(AuditError::NoWitnessFound)
        ));
        // Size-3 subsets admit only k = 1, which never violates the law.
        assert!(matches!(
            find_median_counterexample(5, &[0.0, 1.0, 2.0, 3.0]),
            Err(AuditError::NoWitnessFound)
        ));
        assert!(matches!(
            find_median_counterexample(2, &[1.0, 2.0, 3.0]),
            Err(AuditError::SearchTooSmall(2))
        ));
    }

    #[test]
    fn counterexample_witness_is_genuine_on_other_grids() {
        let w = find_median_counterexample(7, &[1.0, 2.0, 100.0, 101.0, 200.0]).unwrap();
        let lhs = means::median(&Sample::new(w.sample.clone()).unwrap());
        let rhs = means::median(&Sample::new(w.replaced.clone()).unwrap());
        assert_eq!(lhs, w.lhs);
        assert_eq!(rhs, w.rhs);
        assert!((lhs - rhs).abs() > 1e-9);
        // Block medians of sorted prefixes are order statistics.
        assert_eq!(w.block_value, w.sample[w.k / 2]);
    }

    #[test]
    fn audit_targets_parse() {
        assert!(matches!(
            "median".parse::<AggregatorRef>(),
            Ok(AggregatorRef::Median)
        ));
        assert!(matches!(
            "harmonic".parse::<AggregatorRef>(),
            Ok(AggregatorRef::Mean(MeanName::Harmonic))
        ));
        assert!(matches!(
            "power:3".parse::<AggregatorRef>(),
            Ok(AggregatorRef::Mean(MeanName::Power(a))) if a == 3.0
        ));
        assert!(matches!(
            "midrange".parse::<AggregatorRef>(),
            Err(AuditError::UnknownTarget { .. })
        ));
    }

    #[test]
    fn zero_trials_is_rejected() {
        assert!(matches!(
            check_reflexivity(&AggregatorRef::Median, 0, 0),
            Err(AuditError::ZeroTrials)
        ));
        let report = full_audit(&AggregatorRef::Median, 0, 0);
        assert!(report.outcomes.iter().all(|o| o.verdict == Verdict::Error));
    }

    #[test]
    fn bad_tolerances_are_rejected() {
        let cfg = AuditConfig {
            tolerances: Tolerances {
                symmetry: -1.0,
                ..Tolerances::default()
            },
            ..AuditConfig::default()
        };
        assert!(matches!(
            check_symmetry_with(&AggregatorRef::Median, &cfg),
            Err(AuditError::BadTolerance { name: "symmetry", .. })
        ));
    }
}
