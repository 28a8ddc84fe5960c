//! Machine-checking of the inequalities relating variation, influences,
//! and decision-tree cost, including the equality cases, the semimetric
//! defect correction, and the hybrid-input decomposition that underlies
//! them.
//!
//! Every check produces a [`VerificationReport`] with both sides of the
//! inequality, the slack, and pass/equality flags. In rational mode the
//! verdicts are exact; in float mode a slack below `1e-9` counts as a
//! violation and `|slack| <= 1e-9 * max(1, |lhs|)` counts as equality.

use serde::de::Error as _;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::measures::{
    covariance, covariation, influence_vector, total_influence, variation, InfluenceVector,
};
use crate::model::{
    MetricKind, OutputSpace, PointIndex, TabulatedFunction, DEFAULT_ENUMERATION_CAP,
};
use crate::optimal::optimal_expected_cost;
use crate::thresholds::is_monotone;
use crate::tree::{DecisionTree, RandomizedTree};
use crate::value::{Value, FLOAT_SLACK_TOL};

/// Outcome of checking one inequality instance `lhs <= rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub inequality: String,
    pub lhs: Value,
    pub rhs: Value,
    pub slack: Value,
    pub holds: bool,
    pub equality: bool,
    pub witness: Option<String>,
}

impl VerificationReport {
    pub fn new(inequality: &str, lhs: Value, rhs: Value) -> Self {
        let slack = &rhs - &lhs;
        let (holds, equality) = if slack.is_exact() {
            (!slack.is_negative(), slack.is_zero())
        } else {
            let s = slack.to_f64();
            let scale = lhs.to_f64().abs().max(1.0);
            (s >= -FLOAT_SLACK_TOL, s.abs() <= FLOAT_SLACK_TOL * scale)
        };
        VerificationReport {
            inequality: inequality.to_string(),
            lhs,
            rhs,
            slack,
            holds,
            equality,
            witness: None,
        }
    }

    pub fn with_witness(mut self, witness: impl Into<String>) -> Self {
        self.witness = Some(witness.into());
        self
    }

    /// "rational" when both sides are exact, "float" otherwise.
    pub fn mode(&self) -> &'static str {
        if self.lhs.is_exact() && self.rhs.is_exact() {
            "rational"
        } else {
            "float"
        }
    }
}

impl Serialize for VerificationReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("VerificationReport", 8)?;
        s.serialize_field("inequality", &self.inequality)?;
        s.serialize_field("lhs", &self.lhs.to_string())?;
        s.serialize_field("rhs", &self.rhs.to_string())?;
        s.serialize_field("slack", &self.slack.to_string())?;
        s.serialize_field("holds", &self.holds)?;
        s.serialize_field("equality", &self.equality)?;
        s.serialize_field("mode", self.mode())?;
        match &self.witness {
            None => s.serialize_field("witness", &None::<serde_json::Value>)?,
            Some(w) => {
                s.serialize_field("witness", &serde_json::json!({ "description": w }))?
            }
        }
        s.end()
    }
}

impl<'de> Deserialize<'de> for VerificationReport {
    fn deserialize<D: Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            inequality: String,
            lhs: String,
            rhs: String,
            slack: String,
            holds: bool,
            equality: bool,
            #[allow(dead_code)]
            mode: String,
            witness: Option<serde_json::Value>,
        }
        let raw = Raw::deserialize(deserializer)?;
        let parse = |s: &str| Value::parse(s).map_err(D::Error::custom);
        Ok(VerificationReport {
            inequality: raw.inequality,
            lhs: parse(&raw.lhs)?,
            rhs: parse(&raw.rhs)?,
            slack: parse(&raw.slack)?,
            holds: raw.holds,
            equality: raw.equality,
            witness: raw.witness.and_then(|w| {
                w.get("description")
                    .and_then(|d| d.as_str())
                    .map(String::from)
            }),
        })
    }
}

fn require_computes(tree: &DecisionTree, f: &TabulatedFunction) -> Result<()> {
    if !tree.computes(f)? {
        return Err(Error::Invalid("tree does not compute the function".into()));
    }
    Ok(())
}

fn require_rt_computes(rt: &RandomizedTree, f: &TabulatedFunction) -> Result<()> {
    if !rt.computes(f)? {
        return Err(Error::Invalid(
            "a randomized-tree branch does not compute the function".into(),
        ));
    }
    Ok(())
}

fn weighted_influence_sum(delta: &[Value], inf: &InfluenceVector) -> Value {
    delta
        .iter()
        .zip(inf.values())
        .map(|(d, i)| d * i)
        .sum()
}

/// The main inequality: for a tree computing `f` into a metric space,
/// `Vr[f] <= sum_i delta_i(T) Inf_i(f)`.
pub fn check_main(tree: &DecisionTree, f: &TabulatedFunction) -> Result<VerificationReport> {
    if f.outputs().kind() != MetricKind::Metric {
        return Err(Error::Unsupported(
            "main inequality needs a metric output space; use check_semimetric".into(),
        ));
    }
    require_computes(tree, f)?;
    let lhs = variation(f);
    let rhs = weighted_influence_sum(&tree.delta(), &influence_vector(f)?);
    Ok(VerificationReport::new("main", lhs, rhs))
}

/// `Delta(f) >= Vr[f] / Inf_max(f)` for nonconstant `f` into a metric
/// space; reported as `Vr/Inf_max <= Delta(f)`.
pub fn check_imax_corollary(f: &TabulatedFunction) -> Result<VerificationReport> {
    if f.outputs().kind() != MetricKind::Metric {
        return Err(Error::Unsupported(
            "the influence-maximum bound needs a metric output space".into(),
        ));
    }
    let inf = influence_vector(f)?;
    if inf.max().is_zero() {
        return Err(Error::Skipped(
            "constant function: max influence is zero, the ratio is undefined".into(),
        ));
    }
    let lhs = variation(f) / inf.max();
    let (cost, _) = optimal_expected_cost(f)?;
    Ok(VerificationReport::new("imax-corollary", lhs, cost))
}

/// Two-function version: for a randomized tree computing `f`,
/// `|CoVr[f,g]| <= sum_i delta_i(T) Inf_i(g)`.
pub fn check_two_function(
    rt: &RandomizedTree,
    f: &TabulatedFunction,
    g: &TabulatedFunction,
) -> Result<VerificationReport> {
    if f.outputs().kind() != MetricKind::Metric {
        return Err(Error::Unsupported(
            "the two-function inequality needs a metric output space; use check_semimetric"
                .into(),
        ));
    }
    require_rt_computes(rt, f)?;
    let lhs = covariation(f, g)?.abs();
    let rhs = weighted_influence_sum(&rt.delta(), &influence_vector(g)?);
    Ok(VerificationReport::new("two-function", lhs, rhs))
}

/// Covariance variant: for `f` with range in `[-1, 1]` computed by the
/// randomized tree, `|Cov[f,g]| <= sum_i delta_i(T) Inf_i^{rho1}(g)`.
pub fn check_covariance(
    rt: &RandomizedTree,
    f: &TabulatedFunction,
    g: &TabulatedFunction,
) -> Result<VerificationReport> {
    require_rt_computes(rt, f)?;
    let one = Value::one();
    for x in f.space().points() {
        let v = f.numeric_value(x)?;
        if v.abs() > one {
            return Err(Error::Invalid(format!(
                "f takes the value {v} outside [-1, 1]"
            )));
        }
    }
    let lhs = covariance(f, g)?.abs();
    let g_rho1 = g.with_outputs(OutputSpace::rho1(g.outputs().labels().to_vec())?)?;
    let rhs = weighted_influence_sum(&rt.delta(), &influence_vector(&g_rho1)?);
    Ok(VerificationReport::new("covariance", lhs, rhs))
}

/// Worst ratio of endpoint distance to path length over `k`-step label
/// sequences; measures how badly a distance fails the triangle inequality.
#[derive(Debug, Clone, PartialEq)]
pub enum Defect {
    Finite(Value),
    /// Some sequence has positive endpoint distance along a zero-length
    /// path; the corrected inequality is vacuous.
    Unbounded,
}

impl Defect {
    pub fn is_unbounded(&self) -> bool {
        matches!(self, Defect::Unbounded)
    }

    pub fn as_value(&self) -> Option<&Value> {
        match self {
            Defect::Finite(v) => Some(v),
            Defect::Unbounded => None,
        }
    }

    pub fn to_value(&self) -> Value {
        match self {
            Defect::Finite(v) => v.clone(),
            Defect::Unbounded => Value::float(f64::INFINITY),
        }
    }
}

/// Maximum defect `rho(z_0, z_k) / sum_t rho(z_{t-1}, z_t)` over all
/// sequences in `Z^{k+1}`, with `0/0 = 1`. A positive numerator over a
/// zero denominator is reported as [`Defect::Unbounded`].
pub fn defect(outputs: &OutputSpace, k: usize) -> Result<Defect> {
    defect_with_cap(outputs, k, DEFAULT_ENUMERATION_CAP)
}

pub fn defect_with_cap(outputs: &OutputSpace, k: usize, cap: u64) -> Result<Defect> {
    if k == 0 {
        return Err(Error::Invalid("defect needs k >= 1".into()));
    }
    let z = outputs.len();
    let sequences = (z as u128).checked_pow(k as u32 + 1).unwrap_or(u128::MAX);
    if sequences > cap as u128 {
        return Err(Error::CapExceeded {
            points: sequences,
            cap,
        });
    }
    // Every constant sequence has defect 0/0 = 1.
    let mut best = Value::one();
    let mut seq = vec![0usize; k + 1];
    loop {
        let num = outputs.dist(seq[0], seq[k]);
        let mut den = Value::zero();
        for t in 1..=k {
            den = den + outputs.dist(seq[t - 1], seq[t]);
        }
        if den.is_zero() {
            if !num.is_zero() {
                return Ok(Defect::Unbounded);
            }
            // 0/0 = 1, already covered by the initial value.
        } else {
            let ratio = num / &den;
            if ratio > best {
                best = ratio;
            }
        }
        // Advance the sequence counter.
        let mut pos = k + 1;
        loop {
            if pos == 0 {
                return Ok(Defect::Finite(best));
            }
            pos -= 1;
            seq[pos] += 1;
            if seq[pos] < z {
                break;
            }
            seq[pos] = 0;
        }
    }
}

/// Semimetric version: `|CoVr[f,g]| <= Def_k(rho) sum_i delta_i(T)
/// Inf_i(g)` with `k` the longest path in any branch of the randomized
/// tree. For metric outputs the defect is 1 (the triangle inequality was
/// validated at construction) and this reduces to the two-function check.
///
/// The bound is guaranteed for `g = f` (the telescoped chain has at most
/// `k` steps) and for metric outputs; for two distinct functions into a
/// genuine semimetric the crossover term `d(f(x), g(x))` would need its
/// own defect correction, and instances violating the `Def_k` form exist.
/// The report states what was computed either way.
pub fn check_semimetric(
    rt: &RandomizedTree,
    f: &TabulatedFunction,
    g: &TabulatedFunction,
) -> Result<VerificationReport> {
    require_rt_computes(rt, f)?;
    if f.outputs() != g.outputs() {
        return Err(Error::SpaceMismatch(
            "the semimetric check needs a shared output space".into(),
        ));
    }
    let k = rt.max_depth();
    let def = match f.outputs().kind() {
        MetricKind::Metric => Defect::Finite(Value::one()),
        MetricKind::Semimetric => {
            if k == 0 {
                Defect::Finite(Value::one())
            } else {
                defect(f.outputs(), k)?
            }
        }
    };
    let lhs = covariation(f, g)?.abs();
    let base = weighted_influence_sum(&rt.delta(), &influence_vector(g)?);
    let report = match &def {
        Defect::Finite(d) => {
            VerificationReport::new("semimetric", lhs, d * &base)
        }
        Defect::Unbounded => VerificationReport::new(
            "semimetric",
            lhs,
            Value::float(f64::INFINITY),
        )
        .with_witness(format!(
            "Def_{k} is unbounded (positive distance over a zero-length path); \
             the inequality holds vacuously"
        )),
    };
    Ok(report)
}

/// Reports for the real-valued rho2 variance bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealCorollaryReport {
    /// `Var[f] <= k sum_i delta_i(T) Inf_i^{rho2}(f)`.
    pub bound: VerificationReport,
    /// `Var[f] / k^2 <= Inf_max^{rho2}(f)`: some coordinate is influential.
    pub influential_coordinate: VerificationReport,
}

/// Checks the rho2 variance bound for a numeric-valued `f` computed by
/// `rt`, with `k` the longest branch depth.
pub fn check_real_corollary(
    rt: &RandomizedTree,
    f: &TabulatedFunction,
) -> Result<RealCorollaryReport> {
    require_rt_computes(rt, f)?;
    let f2 = f.with_outputs(OutputSpace::rho2(f.outputs().labels().to_vec())?)?;
    let var = variation(&f2);
    let inf = influence_vector(&f2)?;
    let k = rt.max_depth() as i64;
    let rhs = Value::from_int(k) * weighted_influence_sum(&rt.delta(), &inf);
    let bound = VerificationReport::new("real-corollary", var.clone(), rhs);
    // A leaf tree forces f constant, so Var = 0 and any coordinate works.
    let lhs2 = if k == 0 {
        Value::zero()
    } else {
        var / Value::from_int(k * k)
    };
    let influential =
        VerificationReport::new("real-corollary-infmax", lhs2, inf.max().clone());
    Ok(RealCorollaryReport {
        bound,
        influential_coordinate: influential,
    })
}

/// `Vr[f] <= Inf(f)`: the variance/variation bound by total influence.
/// Valid for any metric output space, and for rho2 on numeric labels.
pub fn check_efron_stein(f: &TabulatedFunction) -> Result<VerificationReport> {
    let kind_ok = f.outputs().kind() == MetricKind::Metric
        || f.outputs().metric_name() == "rho2";
    if !kind_ok {
        return Err(Error::Unsupported(
            "the variance bound needs a metric output space or rho2".into(),
        ));
    }
    let lhs = variation(f);
    let rhs = total_influence(f)?;
    Ok(VerificationReport::new("efron-stein", lhs, rhs))
}

/// For separated trees the main inequality is an equality, for metric and
/// semimetric outputs alike. Refuses trees that are not separated.
pub fn check_separated_equality(
    tree: &DecisionTree,
    f: &TabulatedFunction,
) -> Result<VerificationReport> {
    require_computes(tree, f)?;
    if !tree.is_separated() {
        return Err(Error::Unsupported(
            "tree is not separated; the equality case does not apply".into(),
        ));
    }
    let lhs = variation(f);
    let rhs = weighted_influence_sum(&tree.delta(), &influence_vector(f)?);
    Ok(VerificationReport::new("separated-equality", lhs, rhs))
}

/// The hybrid chain for one input pair: `u[t]` agrees with `x` on the
/// coordinates the tree reads after step `t` and with `y` elsewhere, so
/// `u[s] = y`, `f(u[0]) = f(x)`, and the telescoped step distances bound
/// `d(f(x), f(y))` whenever the distance is a metric.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridTrace {
    pub x: PointIndex,
    pub y: PointIndex,
    /// Coordinates read by the tree on input `x`, in order.
    pub query_sequence: Vec<usize>,
    /// `u[0..=s]`.
    pub hybrids: Vec<PointIndex>,
    /// `d(f(u[t-1]), f(u[t]))` for `t = 1..=s`.
    pub step_distances: Vec<Value>,
}

impl HybridTrace {
    pub fn total_step_distance(&self) -> Value {
        self.step_distances.iter().sum()
    }
}

pub fn hybrid_trace(
    tree: &DecisionTree,
    f: &TabulatedFunction,
    x: PointIndex,
    y: PointIndex,
) -> Result<HybridTrace> {
    require_computes(tree, f)?;
    let space = f.space();
    space.check_point(x)?;
    space.check_point(y)?;
    let seq = tree.evaluate(x).queried;
    let s = seq.len();
    let mut hybrids = Vec::with_capacity(s + 1);
    for t in 0..=s {
        // Start from y and overwrite the coordinates still owed to x.
        let mut u = y;
        for &i in &seq[t..] {
            u = space.with_digit(u, i, space.digit(x, i));
        }
        hybrids.push(u);
    }
    debug_assert_eq!(hybrids[s], y);
    debug_assert_eq!(f.value(hybrids[0]), f.value(x));
    let step_distances = (1..=s)
        .map(|t| {
            f.outputs()
                .dist(f.value(hybrids[t - 1]) as usize, f.value(hybrids[t]) as usize)
                .clone()
        })
        .collect();
    Ok(HybridTrace {
        x,
        y,
        query_sequence: seq,
        hybrids,
        step_distances,
    })
}

/// Second, independent route to the main inequality's right-hand side:
/// averaging the hybrid step distances over all input pairs gives exactly
/// `sum_i delta_i(T) Inf_i(f)`.
pub fn hybrid_aggregate(tree: &DecisionTree, f: &TabulatedFunction) -> Result<Value> {
    require_computes(tree, f)?;
    let space = f.space();
    let outs = f.outputs();
    let mut total = Value::zero();
    for x in space.points() {
        let px = space.point_probability(x)?;
        let seq = tree.evaluate(x).queried;
        for y in space.points() {
            let mut u = y;
            for &i in &seq {
                u = space.with_digit(u, i, space.digit(x, i));
            }
            // Walk u[0] -> u[s] by handing coordinates back to y.
            let mut sum = Value::zero();
            let mut prev = f.value(u) as usize;
            for &i in &seq {
                u = space.with_digit(u, i, space.digit(y, i));
                let cur = f.value(u) as usize;
                if cur != prev {
                    sum = sum + outs.dist(prev, cur);
                }
                prev = cur;
            }
            if !sum.is_zero() {
                total = total + &px * space.point_probability(y)? * sum;
            }
        }
    }
    Ok(total)
}

/// The closed-form query lower bound for monotone transitive functions at
/// their critical probability: `n^{2/3} / (4pq)^{1/3}`, or
/// `(v-1)^{4/3} / (16pq)^{1/3}` for a `v`-vertex graph property.
pub fn lower_bound_formula(n: u64, p: f64, graph_vertices: Option<u64>) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || p == 0.0 || p == 1.0 {
        return Err(Error::Invalid(format!("bias {p} outside (0, 1)")));
    }
    let q = 1.0 - p;
    Ok(match graph_vertices {
        Some(v) => ((v - 1) as f64).powf(4.0 / 3.0) / (16.0 * p * q).powf(1.0 / 3.0),
        None => (n as f64).powf(2.0 / 3.0) / (4.0 * p * q).powf(1.0 / 3.0),
    })
}

/// Binary entropy `H(p) = -p log2 p - (1-p) log2 (1-p)`.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    term(p) + term(1.0 - p)
}

/// For monotone `f` on a p-biased binary cube with boolean outputs:
/// `Inf(f) <= 2 sqrt(p q Delta(f))`.
pub fn check_os_inequality(f: &TabulatedFunction) -> Result<VerificationReport> {
    if !is_monotone(f)? {
        return Err(Error::Unsupported(
            "the monotone query bound needs a monotone function".into(),
        ));
    }
    let space = f.space();
    let first = space.coord(0);
    if (1..space.n()).any(|i| space.coord(i) != first) {
        return Err(Error::Unsupported(
            "the monotone query bound needs a single shared bias".into(),
        ));
    }
    let p = first.weight(1).to_f64();
    let q = 1.0 - p;
    let lhs = total_influence(f)?;
    let (cost, _) = optimal_expected_cost(f)?;
    let rhs = Value::float(2.0 * (p * q * cost.to_f64()).sqrt());
    Ok(VerificationReport::new("os", lhs, rhs))
}

/// Raw value of the logarithmic influence sum `sum_i Inf_i / ln(1 /
/// Inf_i)`, with zero-influence terms contributing 0 and influence-1 terms
/// making the sum unbounded. No verdict is attached: the inequality it
/// appears in has an unspecified constant.
pub fn talagrand_diagnostic(f: &TabulatedFunction) -> Result<Value> {
    let inf = influence_vector(f)?;
    let mut sum = 0.0f64;
    for v in inf.values() {
        if v.is_zero() {
            continue;
        }
        let x = v.to_f64();
        if x >= 1.0 {
            return Ok(Value::float(f64::INFINITY));
        }
        sum += x / (1.0 / x).ln();
    }
    Ok(Value::float(sum))
}

/// Approximation lower bound: any randomized tree computing some `f` with
/// `E d(f, g) <= eps` needs at least `(Vr[g] - 2 eps) / Inf_max(g)`
/// expected queries.
pub fn approximation_lower_bound(g: &TabulatedFunction, eps: &Value) -> Result<Value> {
    let inf = influence_vector(g)?;
    if inf.max().is_zero() {
        return Err(Error::Skipped(
            "constant function: max influence is zero".into(),
        ));
    }
    Ok((variation(g) - Value::from_int(2) * eps) / inf.max())
}
