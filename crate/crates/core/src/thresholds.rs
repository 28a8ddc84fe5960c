//! Monotonicity checking, the critical probability of a monotone function
//! (the bias at which it becomes balanced), and the assembled
//! lower-bound pipeline for monotone transitive functions.

use crate::error::{Error, Result};
use crate::measures::{bias_polynomial, influence_vector, variation};
use crate::model::{ProductSpace, TabulatedFunction};
use crate::optimal::optimal_expected_cost;
use crate::value::Value;
use crate::verify::VerificationReport;

/// Exponent of the best known randomized strategy for the recursive
/// AND-OR function: `log2((1 + sqrt(33)) / 4)`. Kept for report
/// annotation.
pub fn random_child_exponent() -> f64 {
    ((1.0 + 33f64.sqrt()) / 4.0).log2()
}

/// The bias at which a monotone function is balanced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalProbability {
    pub p_star: f64,
    /// Interval with a guaranteed sign change of `Pr_p[f=1] - 1/2`.
    pub bracket: (f64, f64),
    /// `|Pr_{p*}[f=1] - 1/2|`.
    pub residual: f64,
}

/// Componentwise monotonicity on a `{-1,1}` cube with boolean outputs:
/// raising any coordinate never lowers the output. Checked exhaustively
/// over covering pairs.
pub fn is_monotone(f: &TabulatedFunction) -> Result<bool> {
    let space = f.space();
    if !space.is_binary_pm_cube() {
        return Err(Error::Unsupported(
            "monotonicity needs a {-1,1} cube domain".into(),
        ));
    }
    let one = f
        .outputs()
        .label_index("1")
        .ok_or_else(|| Error::Unsupported("monotonicity needs outputs labelled -1/1".into()))?
        as u32;
    let minus = f
        .outputs()
        .label_index("-1")
        .ok_or_else(|| Error::Unsupported("monotonicity needs outputs labelled -1/1".into()))?
        as u32;
    for x in space.points() {
        for i in 0..space.n() {
            if space.digit(x, i) == 0 {
                let above = space.with_digit(x, i, 1);
                if f.value(x) == one && f.value(above) == minus {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Default residual tolerance for the critical-probability solver.
pub const CRITICAL_DEFAULT_TOL: f64 = 1e-12;

/// Bisection for the bias `p*` with `Pr_{p*}[f = 1] = 1/2`. Requires a
/// monotone nonconstant function, for which `Pr_p[f=1]` is continuous and
/// increasing in `p`, so the root is bracketed by `(0, 1)`.
pub fn critical_probability(f: &TabulatedFunction, tol: f64) -> Result<CriticalProbability> {
    if f.is_constant() {
        return Err(Error::Unsupported(
            "a constant function has no critical probability".into(),
        ));
    }
    if !is_monotone(f)? {
        return Err(Error::Unsupported(
            "bisection needs a monotone function: Pr_p[f=1] may not be monotone in p".into(),
        ));
    }
    let bp = bias_polynomial(f)?;
    let residual_at = |p: f64| bp.evaluate(&Value::float(p)).to_f64() - 0.5;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    debug_assert!(residual_at(lo) < 0.0 && residual_at(hi) > 0.0);
    let mut mid = 0.5;
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let r = residual_at(mid);
        if r == 0.0 {
            break;
        }
        if r < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < f64::EPSILON * 2.0 {
            break;
        }
    }
    let residual = residual_at(mid).abs();
    if residual > tol {
        return Err(Error::Invalid(format!(
            "critical-probability residual {residual:e} above tolerance {tol:e}"
        )));
    }
    Ok(CriticalProbability {
        p_star: mid,
        bracket: (lo, hi),
        residual,
    })
}

/// How transitivity is asserted for the pipeline: taken on faith from the
/// caller, or spot-checked from a set of generating automorphisms.
#[derive(Debug, Clone)]
pub enum TransitivityEvidence {
    Asserted,
    /// Coordinate permutations (images, 0-based) expected to generate a
    /// transitive automorphism group of `f`.
    Generators(Vec<Vec<usize>>),
}

/// Full pipeline report for the query lower bound of a monotone
/// transitive function at its critical probability.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundReport {
    pub critical: CriticalProbability,
    pub n: usize,
    /// Variance of `f` at the critical bias; 1 up to the solver residual.
    pub variance_at_critical: Value,
    pub total_influence: Value,
    /// The exact minimum expected query count at the critical bias.
    pub optimal_cost: Value,
    /// `1 <= (Inf(f)/n) * Delta(f)`.
    pub chain_product: VerificationReport,
    /// `1 <= (2 sqrt(pq)/n) * Delta(f)^{3/2}`.
    pub chain_power: VerificationReport,
    /// `n^{2/3} / (4pq)^{1/3} <= Delta(f)`.
    pub formula_bound: VerificationReport,
    /// `max_i |Inf_i - Inf/n|`: zero for a transitive function.
    pub influence_spread: f64,
    pub influences_equal: bool,
}

impl LowerBoundReport {
    pub fn all_hold(&self) -> bool {
        self.chain_product.holds
            && self.chain_power.holds
            && self.formula_bound.holds
            && self.influences_equal
    }
}

fn check_automorphism(f: &TabulatedFunction, perm: &[usize]) -> Result<bool> {
    let space = f.space();
    let n = space.n();
    if perm.len() != n {
        return Err(Error::Invalid(format!(
            "permutation has {} entries, expected {n}",
            perm.len()
        )));
    }
    let mut seen = vec![false; n];
    for &img in perm {
        if img >= n || seen[img] {
            return Err(Error::Invalid("not a permutation".into()));
        }
        seen[img] = true;
    }
    for x in space.points() {
        let digits: Vec<usize> = (0..n).map(|i| space.digit(x, perm[i])).collect();
        let permuted = space.encode(&digits)?;
        if f.value(x) != f.value(permuted) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn generators_act_transitively(n: usize, perms: &[Vec<usize>]) -> bool {
    // Orbit of coordinate 0 under the generated group.
    let mut reached = vec![false; n];
    reached[0] = true;
    let mut frontier = vec![0usize];
    while let Some(i) = frontier.pop() {
        for perm in perms {
            for next in [perm[i], perm.iter().position(|&v| v == i).unwrap()] {
                if !reached[next] {
                    reached[next] = true;
                    frontier.push(next);
                }
            }
        }
    }
    reached.iter().all(|&r| r)
}

/// Runs the lower-bound pipeline: solve for the critical bias, re-tabulate
/// the measures there, and verify the two chain inequalities and the final
/// closed-form bound against the exact optimal cost. For transitive `f`
/// the influence vector must be flat; the spread is reported.
pub fn lower_bound_pipeline(
    f: &TabulatedFunction,
    tol: f64,
    transitivity: TransitivityEvidence,
) -> Result<LowerBoundReport> {
    if let TransitivityEvidence::Generators(perms) = &transitivity {
        for perm in perms {
            if !check_automorphism(f, perm)? {
                return Err(Error::Invalid(
                    "a supplied generator is not an automorphism of f".into(),
                ));
            }
        }
        if !generators_act_transitively(f.space().n(), perms) {
            return Err(Error::Invalid(
                "the supplied generators do not act transitively on coordinates".into(),
            ));
        }
    }
    let critical = critical_probability(f, tol)?;
    let n = f.space().n();
    let p = critical.p_star;
    let q = 1.0 - p;
    let space_at = ProductSpace::biased_cube(n, &Value::float(p))?;
    let f_at = f.with_space(space_at)?;

    let variance_at_critical = variation(&f_at);
    let inf = influence_vector(&f_at)?;
    let total = inf.total().clone();
    let (cost, _) = optimal_expected_cost(&f_at)?;
    let delta = cost.to_f64();

    let chain_product = VerificationReport::new(
        "chain-product",
        Value::one(),
        Value::float(total.to_f64() / n as f64 * delta),
    );
    let chain_power = VerificationReport::new(
        "chain-power",
        Value::one(),
        Value::float(2.0 * (p * q).sqrt() / n as f64 * delta.powf(1.5)),
    );
    let formula_bound = VerificationReport::new(
        "formula-bound",
        Value::float((n as f64).powf(2.0 / 3.0) / (4.0 * p * q).powf(1.0 / 3.0)),
        cost.clone(),
    );

    let mean = total.to_f64() / n as f64;
    let influence_spread = inf
        .values()
        .iter()
        .map(|v| (v.to_f64() - mean).abs())
        .fold(0.0f64, f64::max);
    let influences_equal = influence_spread <= 1e-9;

    Ok(LowerBoundReport {
        critical,
        n,
        variance_at_critical,
        total_influence: total,
        optimal_cost: cost,
        chain_product,
        chain_power,
        formula_bound,
        influence_spread,
        influences_equal,
    })
}

/// Strict monotonicity of `p -> Pr_p[f=1]` over a grid, for test support
/// and diagnostics.
pub fn bias_curve_strictly_increasing(f: &TabulatedFunction, grid: usize) -> Result<bool> {
    let bp = bias_polynomial(f)?;
    let mut prev = bp.evaluate(&Value::float(0.0)).to_f64();
    for k in 1..=grid {
        let p = k as f64 / grid as f64;
        let cur = bp.evaluate(&Value::float(p)).to_f64();
        if cur <= prev {
            return Ok(false);
        }
        prev = cur;
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::OutputSpace;

    fn cube_fn(n: usize, labels: &[&str]) -> TabulatedFunction {
        let space = ProductSpace::uniform_cube(n).unwrap();
        let outputs = OutputSpace::boolean(vec!["-1".into(), "1".into()]).unwrap();
        TabulatedFunction::from_labels(space, outputs, labels).unwrap()
    }

    fn maj3() -> TabulatedFunction {
        cube_fn(3, &["-1", "-1", "-1", "1", "-1", "1", "1", "1"])
    }

    #[test]
    fn monotone_classification() {
        assert!(is_monotone(&cube_fn(2, &["-1", "-1", "-1", "1"])).unwrap());
        assert!(is_monotone(&maj3()).unwrap());
        assert!(!is_monotone(&cube_fn(2, &["-1", "1", "1", "-1"])).unwrap());
        assert!(is_monotone(&cube_fn(1, &["1", "1"])).unwrap());
    }

    #[test]
    fn critical_probability_of_maj3_is_half() {
        let cp = critical_probability(&maj3(), CRITICAL_DEFAULT_TOL).unwrap();
        assert!((cp.p_star - 0.5).abs() < 1e-12);
        assert!(cp.residual <= CRITICAL_DEFAULT_TOL);
        assert!(cp.bracket.0 < cp.p_star && cp.p_star < cp.bracket.1 || cp.residual == 0.0);
    }

    #[test]
    fn critical_probability_of_and2() {
        let and = cube_fn(2, &["-1", "-1", "-1", "1"]);
        let cp = critical_probability(&and, CRITICAL_DEFAULT_TOL).unwrap();
        assert!((cp.p_star - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn critical_probability_refusals() {
        let c = cube_fn(2, &["1", "1", "1", "1"]);
        assert!(critical_probability(&c, 1e-12).is_err());
        let xor = cube_fn(2, &["-1", "1", "1", "-1"]);
        assert!(critical_probability(&xor, 1e-12).is_err());
    }

    #[test]
    fn pipeline_on_maj3() {
        let report = lower_bound_pipeline(
            &maj3(),
            CRITICAL_DEFAULT_TOL,
            TransitivityEvidence::Asserted,
        )
        .unwrap();
        assert!((report.variance_at_critical.to_f64() - 1.0).abs() < 4.0 * CRITICAL_DEFAULT_TOL);
        assert!((report.optimal_cost.to_f64() - 2.5).abs() < 1e-12);
        // 3^{2/3} / 1 ~ 2.08 <= 5/2.
        assert!(report.formula_bound.holds);
        assert!(report.chain_product.holds);
        assert!(report.chain_power.holds);
        assert!(report.influences_equal);
        assert!(report.all_hold());
    }

    #[test]
    fn pipeline_refuses_non_monotone() {
        let xor = cube_fn(2, &["-1", "1", "1", "-1"]);
        assert!(lower_bound_pipeline(&xor, 1e-12, TransitivityEvidence::Asserted).is_err());
    }

    #[test]
    fn pipeline_checks_generators() {
        // The 3-cycle generates a transitive group and is an automorphism.
        let ok = lower_bound_pipeline(
            &maj3(),
            1e-12,
            TransitivityEvidence::Generators(vec![vec![1, 2, 0]]),
        );
        assert!(ok.is_ok());
        // A non-automorphism is rejected.
        let dictator_like = cube_fn(2, &["-1", "-1", "1", "1"]);
        let bad = lower_bound_pipeline(
            &dictator_like,
            1e-12,
            TransitivityEvidence::Generators(vec![vec![1, 0]]),
        );
        assert!(bad.is_err());
    }

    #[test]
    fn bias_curve_monotone_for_monotone_f() {
        assert!(bias_curve_strictly_increasing(&maj3(), 100).unwrap());
    }

    #[test]
    fn automorphism_check_direction() {
        // x1 AND x2 is invariant under swapping the two coordinates.
        let and = cube_fn(2, &["-1", "-1", "-1", "1"]);
        assert!(check_automorphism(&and, &[1, 0]).unwrap());
        // The dictator on x1 is not.
        let dict = cube_fn(2, &["-1", "-1", "1", "1"]);
        assert!(!check_automorphism(&dict, &[1, 0]).unwrap());
    }

    #[test]
    fn exponent_constant() {
        assert!((random_child_exponent() - 0.753).abs() < 1e-3);
    }
}
