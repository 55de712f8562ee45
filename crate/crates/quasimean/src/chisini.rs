//! Chisini-consistent aggregation: solve `M(μ, …, μ) = M(x₁, …, xₙ)` for μ.
//!
//! An aggregate `M` induces a mean by asking which constant sample leaves the
//! aggregate unchanged. For the five built-in aggregates the answer has a
//! closed form (sum → arithmetic, product → geometric, sum of squares →
//! quadratic, sum of inverses → harmonic, sum of exponentials → exponential
//! mean). Custom aggregates are handled numerically: scan the diagonal on an
//! expanding interval around the sample, bracket sign changes, and bisect.
//!
//! Nothing here assumes the induced value is internal — a consistent solution
//! can land outside the sample range, and [`ChisiniSolution::internal`]
//! reports exactly that per root.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::generators::{Generator, Interval};
use crate::means::{self, MeanError, Sample};
use crate::numeric::neumaier_sum;

/// Caller-supplied aggregate evaluator. Must be a deterministic, total
/// function of the value list returning a finite real.
pub type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Number of equally spaced diagonal probes per scan window.
const GRID_POINTS: usize = 1024;
/// The scan window doubles this many times before the solver gives up.
const MAX_EXPANSIONS: i32 = 20;
/// At or past this many grid sign changes the diagonal is declared too
/// oscillatory to resolve.
const MAX_CROSSINGS: usize = 32;
const MAX_BISECT_ITERS: usize = 200;
/// Bracket-width target, relative with an absolute floor of one.
const ROOT_XTOL_REL: f64 = 1e-12;
/// Residual acceptance threshold, relative to `max(1, |target|)`.
const RESIDUAL_RTOL: f64 = 1e-9;
/// Roots closer than this fraction of the sample range are merged.
const ROOT_MERGE_RTOL: f64 = 1e-9;

/// The aggregate being inverted.
#[derive(Clone)]
pub enum AggregateForm {
    /// `Σ xᵢ` on finite reals.
    Sum,
    /// `Π xᵢ` on positive reals.
    Product,
    /// `Σ xᵢ²` on nonnegative reals.
    SumOfSquares,
    /// `Σ 1/xᵢ` on positive reals.
    SumOfInverses,
    /// `Σ e^{xᵢ}` on finite reals.
    SumOfExponentials,
    /// Caller-supplied evaluator on finite reals.
    Custom(Evaluator),
}

impl AggregateForm {
    /// Interval every argument must lie in.
    pub fn domain(&self) -> Interval {
        match self {
            AggregateForm::Sum
            | AggregateForm::SumOfExponentials
            | AggregateForm::Custom(_) => Interval::AllReals,
            AggregateForm::Product | AggregateForm::SumOfInverses => Interval::Positive,
            AggregateForm::SumOfSquares => Interval::NonNegative,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            AggregateForm::Sum => "sum",
            AggregateForm::Product => "product",
            AggregateForm::SumOfSquares => "sum-squares",
            AggregateForm::SumOfInverses => "sum-inverses",
            AggregateForm::SumOfExponentials => "sum-exp",
            AggregateForm::Custom(_) => "custom",
        }
    }

    /// Parse a built-in aggregate name.
    pub fn parse_builtin(s: &str) -> Result<Self, ChisiniError> {
        match s {
            "sum" => Ok(AggregateForm::Sum),
            "product" => Ok(AggregateForm::Product),
            "sum-squares" => Ok(AggregateForm::SumOfSquares),
            "sum-inverses" => Ok(AggregateForm::SumOfInverses),
            "sum-exp" => Ok(AggregateForm::SumOfExponentials),
            other => Err(ChisiniError::UnknownName {
                name: other.to_owned(),
            }),
        }
    }
}

impl fmt::Debug for AggregateForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AggregateForm::Sum => "Sum",
            AggregateForm::Product => "Product",
            AggregateForm::SumOfSquares => "SumOfSquares",
            AggregateForm::SumOfInverses => "SumOfInverses",
            AggregateForm::SumOfExponentials => "SumOfExponentials",
            AggregateForm::Custom(_) => "Custom(..)",
        })
    }
}

impl fmt::Display for AggregateForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An aggregate with a fixed arity.
#[derive(Debug, Clone)]
pub struct AggregateSpec {
    form: AggregateForm,
    arity: usize,
}

impl AggregateSpec {
    pub fn new(form: AggregateForm, arity: usize) -> Result<Self, ChisiniError> {
        if arity == 0 {
            return Err(ChisiniError::ZeroArity);
        }
        Ok(AggregateSpec { form, arity })
    }

    /// Wrap a closure as a custom aggregate.
    pub fn custom<F>(f: F, arity: usize) -> Result<Self, ChisiniError>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::new(AggregateForm::Custom(Arc::new(f)), arity)
    }

    pub fn form(&self) -> &AggregateForm {
        &self.form
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Evaluate the aggregate on a full argument list.
    ///
    /// Built-in aggregates may saturate to ±∞ when the true value exceeds the
    /// f64 range; a custom evaluator returning a non-finite value is an
    /// [`ChisiniError::EvaluatorFailure`].
    pub fn evaluate(&self, values: &[f64]) -> Result<f64, ChisiniError> {
        if values.len() != self.arity {
            return Err(ChisiniError::ArityMismatch {
                expected: self.arity,
                actual: values.len(),
            });
        }
        self.check_domain(values)?;
        let raw = evaluate_raw(&self.form, values);
        if matches!(self.form, AggregateForm::Custom(_)) && !raw.is_finite() {
            return Err(ChisiniError::EvaluatorFailure { value: raw });
        }
        Ok(raw)
    }

    fn check_domain(&self, values: &[f64]) -> Result<(), ChisiniError> {
        let domain = self.form.domain();
        for &v in values {
            if !domain.contains(v) {
                return Err(ChisiniError::Domain {
                    form: self.form.name(),
                    value: v,
                    domain,
                });
            }
        }
        Ok(())
    }
}

/// How confidently the solver resolved the root set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    /// Exactly one root, with the diagonal strictly monotone where scanned.
    Unique,
    /// Two or more distinct roots.
    Multiple,
    /// No root found anywhere in the expanded scan range.
    None,
    /// The diagonal is too oscillatory (or too flat) for the scan resolution
    /// to certify the root set.
    UndeterminedResolution,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            SolveStatus::Unique => "unique",
            SolveStatus::Multiple => "multiple",
            SolveStatus::None => "none",
            SolveStatus::UndeterminedResolution => "undetermined-resolution",
        })
    }
}

/// Roots of the consistency equation for one aggregate and sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ChisiniSolution {
    /// Roots in ascending order. Empty for `None` and for an unresolvable
    /// oscillatory diagonal.
    pub roots: Vec<f64>,
    pub status: SolveStatus,
    /// Per-root Cauchy internality (`means::is_internal`), parallel to
    /// `roots`. A consistent value need not be internal.
    pub internal: Vec<bool>,
    /// Aggregate value of the sample. Built-ins saturate to ±∞ on overflow.
    pub target: f64,
}

/// Errors from Chisini solving.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChisiniError {
    #[error("{value} is outside the {form} aggregate domain ({domain:?})")]
    Domain {
        form: &'static str,
        value: f64,
        domain: Interval,
    },
    #[error("aggregate expects {expected} values, got {actual}")]
    ArityMismatch { expected: usize, actual: usize },
    #[error("aggregate arity must be at least 1")]
    ZeroArity,
    #[error("custom aggregate returned a non-finite value ({value})")]
    EvaluatorFailure { value: f64 },
    #[error("custom aggregate is not a deterministic function of its input (residual {residual} on a constant sample)")]
    EvaluatorInconsistent { residual: f64 },
    #[error("bisection stalled after {iterations} iterations on [{lo}, {hi}] without meeting the residual tolerance")]
    NonConvergence { lo: f64, hi: f64, iterations: usize },
    #[error(transparent)]
    Mean(#[from] MeanError),
    #[error("unknown aggregate {name:?} (expected sum, product, sum-squares, sum-inverses, or sum-exp)")]
    UnknownName { name: String },
}

/// Evaluate the diagonal `M(μ, …, μ)` with `n` copies of `μ`.
///
/// `μ` must lie in the aggregate's domain. Custom aggregates must match their
/// declared arity and return a finite value; built-ins accept any `n ≥ 1` and
/// may saturate to ±∞.
pub fn diagonal(m: &AggregateSpec, mu: f64, n: usize) -> Result<f64, ChisiniError> {
    if n == 0 {
        return Err(ChisiniError::ZeroArity);
    }
    if matches!(m.form, AggregateForm::Custom(_)) && n != m.arity {
        return Err(ChisiniError::ArityMismatch {
            expected: m.arity,
            actual: n,
        });
    }
    let domain = m.form.domain();
    if !domain.contains(mu) {
        return Err(ChisiniError::Domain {
            form: m.form.name(),
            value: mu,
            domain,
        });
    }
    let raw = evaluate_raw(&m.form, &vec![mu; n]);
    if matches!(m.form, AggregateForm::Custom(_)) && !raw.is_finite() {
        return Err(ChisiniError::EvaluatorFailure { value: raw });
    }
    Ok(raw)
}

/// Solve `M(μ, …, μ) = M(x₁, …, xₙ)` for μ.
///
/// Built-in aggregates use their closed forms (falling back to the numerically
/// stable mean path when the raw aggregate value saturates) and always report
/// a unique root. Custom aggregates are solved by scanning the diagonal over
/// an interval centred on the sample that doubles up to 20 times, bracketing
/// sign changes on a 1024-point grid, and bisecting each bracket.
pub fn chisini_solve(m: &AggregateSpec, s: &Sample) -> Result<ChisiniSolution, ChisiniError> {
    if s.len() != m.arity {
        return Err(ChisiniError::ArityMismatch {
            expected: m.arity,
            actual: s.len(),
        });
    }
    match &m.form {
        AggregateForm::Custom(_) => solve_custom(m, s),
        _ => solve_builtin(m, s),
    }
}

fn evaluate_raw(form: &AggregateForm, values: &[f64]) -> f64 {
    match form {
        AggregateForm::Sum => neumaier_sum(values.iter().copied()),
        AggregateForm::Product => values.iter().product(),
        AggregateForm::SumOfSquares => neumaier_sum(values.iter().map(|x| x * x)),
        AggregateForm::SumOfInverses => neumaier_sum(values.iter().map(|x| x.recip())),
        AggregateForm::SumOfExponentials => neumaier_sum(values.iter().map(|x| x.exp())),
        AggregateForm::Custom(f) => f(values),
    }
}

fn solve_builtin(m: &AggregateSpec, s: &Sample) -> Result<ChisiniSolution, ChisiniError> {
    let target = m.evaluate(s.values())?;
    let n = s.len() as f64;
    let root = match algebraic_root(&m.form, target, n) {
        Some(r) if r.is_finite() => r,
        // The raw aggregate value saturated (or lost all precision in the
        // subnormal range); recompute through the stable mean path, which
        // never materializes the raw aggregate.
        _ => means::quasi_mean(s, builtin_generator(&m.form))?,
    };
    Ok(ChisiniSolution {
        internal: vec![means::is_internal(s, root)],
        roots: vec![root],
        status: SolveStatus::Unique,
        target,
    })
}

/// Closed-form root from the raw aggregate value, when that value is usable.
fn algebraic_root(form: &AggregateForm, target: f64, n: f64) -> Option<f64> {
    if !target.is_finite() {
        return None;
    }
    match form {
        AggregateForm::Sum => Some(target / n),
        AggregateForm::SumOfSquares => Some((target / n).sqrt()),
        // These three divide by or take logs/powers of the target, which is
        // positive in exact arithmetic; bail out when it underflowed.
        AggregateForm::Product => {
            (target >= f64::MIN_POSITIVE).then(|| target.powf(n.recip()))
        }
        AggregateForm::SumOfInverses => (target >= f64::MIN_POSITIVE).then(|| n / target),
        AggregateForm::SumOfExponentials => {
            (target >= f64::MIN_POSITIVE).then(|| (target / n).ln())
        }
        AggregateForm::Custom(_) => None,
    }
}

fn builtin_generator(form: &AggregateForm) -> Generator {
    match form {
        AggregateForm::Sum => Generator::Identity,
        AggregateForm::Product => Generator::Log,
        AggregateForm::SumOfSquares => Generator::Square,
        AggregateForm::SumOfInverses => Generator::Reciprocal,
        AggregateForm::SumOfExponentials => Generator::Exp,
        AggregateForm::Custom(_) => unreachable!("custom aggregates have no generator"),
    }
}

struct GridScan {
    /// Grid points where the residual is exactly zero.
    zeros: Vec<f64>,
    /// `(lo, hi, f(lo), f(hi))` intervals with a strict sign change.
    brackets: Vec<(f64, f64, f64, f64)>,
    crossings: usize,
    monotone: bool,
}

fn solve_custom(m: &AggregateSpec, s: &Sample) -> Result<ChisiniSolution, ChisiniError> {
    let target = m.evaluate(s.values())?;
    let n = s.len();
    let residual = |mu: f64| -> Result<f64, ChisiniError> { Ok(diagonal(m, mu, n)? - target) };
    let residual_tol = RESIDUAL_RTOL * target.abs().max(1.0);

    let (min, max) = s.bounds();
    let center = min.midpoint(max);
    let mut half = (max / 2.0 - min / 2.0).abs();

    if half == 0.0 {
        // Constant sample: the diagonal at that constant is the target by
        // definition, so the residual can only be nonzero for an evaluator
        // that is not a function of its input.
        let r = residual(center)?;
        if r.abs() > residual_tol {
            return Err(ChisiniError::EvaluatorInconsistent { residual: r });
        }
        return Ok(ChisiniSolution {
            roots: vec![center],
            status: SolveStatus::Unique,
            internal: vec![true],
            target,
        });
    }

    for _ in 0..=MAX_EXPANSIONS {
        let lo = center - half;
        let hi = center + half;
        if !lo.is_finite() || !hi.is_finite() {
            break;
        }
        let scan = scan_grid(&residual, lo, hi)?;
        if scan.crossings >= MAX_CROSSINGS {
            return Ok(ChisiniSolution {
                roots: vec![],
                status: SolveStatus::UndeterminedResolution,
                internal: vec![],
                target,
            });
        }
        if !scan.zeros.is_empty() || !scan.brackets.is_empty() {
            let mut roots = scan.zeros.clone();
            for &(blo, bhi, flo, fhi) in &scan.brackets {
                roots.push(bisect(&residual, blo, bhi, flo, fhi, residual_tol)?);
            }
            roots.sort_by(f64::total_cmp);
            let roots = merge_roots(roots, max - min);
            let internal = roots.iter().map(|&r| means::is_internal(s, r)).collect();
            let status = if roots.len() > 1 {
                SolveStatus::Multiple
            } else if scan.monotone {
                SolveStatus::Unique
            } else {
                // One root on a non-monotone diagonal: the grid cannot rule
                // out further roots between probes.
                SolveStatus::UndeterminedResolution
            };
            return Ok(ChisiniSolution {
                roots,
                status,
                internal,
                target,
            });
        }
        half *= 2.0;
    }

    Ok(ChisiniSolution {
        roots: vec![],
        status: SolveStatus::None,
        internal: vec![],
        target,
    })
}

fn scan_grid(
    residual: &impl Fn(f64) -> Result<f64, ChisiniError>,
    lo: f64,
    hi: f64,
) -> Result<GridScan, ChisiniError> {
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let mut zeros = Vec::new();
    let mut brackets = Vec::new();
    let mut increasing = true;
    let mut decreasing = true;
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..GRID_POINTS {
        // Pin both endpoints exactly so roots sitting on them are not lost
        // to step rounding.
        let x = if i == 0 {
            lo
        } else if i == GRID_POINTS - 1 {
            hi
        } else {
            lo + step * i as f64
        };
        let f = residual(x)?;
        if f == 0.0 {
            zeros.push(x);
        }
        if let Some((px, pf)) = prev {
            if pf != 0.0 && f != 0.0 && (pf > 0.0) != (f > 0.0) {
                brackets.push((px, x, pf, f));
            }
            if f <= pf {
                increasing = false;
            }
            if f >= pf {
                decreasing = false;
            }
        }
        prev = Some((x, f));
    }
    Ok(GridScan {
        crossings: zeros.len() + brackets.len(),
        zeros,
        brackets,
        monotone: increasing || decreasing,
    })
}

fn bisect(
    residual: &impl Fn(f64) -> Result<f64, ChisiniError>,
    mut lo: f64,
    mut hi: f64,
    mut flo: f64,
    mut fhi: f64,
    residual_tol: f64,
) -> Result<f64, ChisiniError> {
    let mut iterations = 0;
    while iterations < MAX_BISECT_ITERS {
        iterations += 1;
        let mid = lo.midpoint(hi);
        if mid <= lo || mid >= hi {
            break; // adjacent floats; no further progress possible
        }
        let fmid = residual(mid)?;
        if fmid == 0.0 {
            return Ok(mid);
        }
        if (fmid > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
            fhi = fmid;
        }
        if hi - lo <= ROOT_XTOL_REL * mid.abs().max(1.0)
            && flo.abs().min(fhi.abs()) <= residual_tol
        {
            break;
        }
    }
    let (x, fx) = if flo.abs() <= fhi.abs() {
        (lo, flo)
    } else {
        (hi, fhi)
    };
    if fx.abs() <= residual_tol {
        Ok(x)
    } else {
        // The bracket pinched down without the residual ever meeting the
        // tolerance — a jump discontinuity, not a root.
        Err(ChisiniError::NonConvergence { lo, hi, iterations })
    }
}

/// Collapse roots closer than `ROOT_MERGE_RTOL` of the sample range; the
/// first (smallest) representative of each cluster survives.
fn merge_roots(sorted: Vec<f64>, range: f64) -> Vec<f64> {
    let tol = ROOT_MERGE_RTOL * range;
    let mut out: Vec<f64> = Vec::new();
    for r in sorted {
        match out.last() {
            Some(&last) if r - last <= tol => {}
            _ => out.push(r),
        }
    }
    out
}
