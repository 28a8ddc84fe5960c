//! Probabilistic functionals of tabulated functions: variation, influences
//! under the output space's distance, covariation, covariance, and the
//! bias polynomial. Everything here is computed exactly by enumeration;
//! results are rational whenever the inputs are.
//!
//! Influence follows the rerandomizing convention: coordinate i's
//! influence is the expected output distance between an input and the same
//! input with coordinate i resampled from its marginal. On the uniform
//! binary cube with the doubled discrete distance this coincides with the
//! classical flip probability; at other biases it differs from the
//! flip-based convention by a factor of `4 p (1-p)` (see
//! [`pivotal_probability`]).

use crate::error::{Error, Result};
use crate::model::TabulatedFunction;
use crate::value::Value;

/// Per-coordinate influences plus their total and maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceVector {
    values: Vec<Value>,
    metric_tag: String,
    total: Value,
    max: Value,
}

impl InfluenceVector {
    fn new(values: Vec<Value>, metric_tag: String) -> Self {
        let total: Value = values.iter().sum();
        let max = values
            .iter()
            .cloned()
            .reduce(|a, b| if b > a { b } else { a })
            .unwrap_or_else(Value::zero);
        InfluenceVector {
            values,
            metric_tag,
            total,
            max,
        }
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn get(&self, i: usize) -> &Value {
        &self.values[i]
    }

    /// Which distance the influences were computed under.
    pub fn metric_tag(&self) -> &str {
        &self.metric_tag
    }

    pub fn total(&self) -> &Value {
        &self.total
    }

    pub fn max(&self) -> &Value {
        &self.max
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Expected output distance between two independent inputs:
/// the double sum over points of `mu(x) mu(y) d(f(x), f(y))`, aggregated
/// by output label. For the boolean distance this is `4 Pr[f=1] Pr[f=-1]`,
/// the variance of a ±1 function; under rho2 on numeric labels it is the
/// ordinary variance.
pub fn variation(f: &TabulatedFunction) -> Value {
    let masses = output_masses(f);
    let outs = f.outputs();
    let mut total = Value::zero();
    for (z1, m1) in masses.iter().enumerate() {
        if m1.is_zero() {
            continue;
        }
        for (z2, m2) in masses.iter().enumerate() {
            if z2 == z1 || m2.is_zero() {
                continue;
            }
            total = total + m1 * m2 * outs.dist(z1, z2);
        }
    }
    total
}

/// Probability mass landing on each output label.
pub fn output_masses(f: &TabulatedFunction) -> Vec<Value> {
    let mut masses = vec![Value::zero(); f.outputs().len()];
    for x in f.space().points() {
        let p = f
            .space()
            .point_probability(x)
            .expect("enumerated point is in range");
        let z = f.value(x) as usize;
        masses[z] = &masses[z] + &p;
    }
    masses
}

/// Influence of coordinate `i`: expected output distance when coordinate
/// `i` is rerandomized, `E d(f(x), f(x with coord i resampled))`.
pub fn influence(f: &TabulatedFunction, i: usize) -> Result<Value> {
    let space = f.space();
    if i >= space.n() {
        return Err(Error::OutOfRange {
            what: "coordinate",
            index: i as u64,
        });
    }
    let outs = f.outputs();
    let mut total = Value::zero();
    for x in space.points() {
        let px = space.point_probability(x).expect("point in range");
        let zx = f.value(x) as usize;
        let here = space.digit(x, i);
        for a in 0..space.arity(i) {
            if a == here {
                continue;
            }
            let za = f.value(space.with_digit(x, i, a)) as usize;
            if za == zx {
                continue;
            }
            total = total + &px * space.coord(i).weight(a) * outs.dist(zx, za);
        }
    }
    Ok(total)
}

/// All coordinate influences at once.
pub fn influence_vector(f: &TabulatedFunction) -> Result<InfluenceVector> {
    let values = (0..f.space().n())
        .map(|i| influence(f, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(InfluenceVector::new(
        values,
        f.outputs().metric_name().to_string(),
    ))
}

pub fn total_influence(f: &TabulatedFunction) -> Result<Value> {
    Ok(influence_vector(f)?.total().clone())
}

/// Probability that flipping coordinate `i` changes the output, on binary
/// coordinates: `Pr[f(x) != f(x xor i)]`. This is the flip-based influence
/// convention; the rerandomizing boolean influence equals
/// `4 p (1-p)` times this quantity.
pub fn pivotal_probability(f: &TabulatedFunction, i: usize) -> Result<Value> {
    let space = f.space();
    if i >= space.n() {
        return Err(Error::OutOfRange {
            what: "coordinate",
            index: i as u64,
        });
    }
    if space.arity(i) != 2 {
        return Err(Error::Unsupported(
            "pivotal probability needs a binary coordinate".into(),
        ));
    }
    let mut total = Value::zero();
    for x in space.points() {
        let flipped = space.with_digit(x, i, 1 - space.digit(x, i));
        if f.value(x) != f.value(flipped) {
            total = total + space.point_probability(x).expect("point in range");
        }
    }
    Ok(total)
}

/// Two-function variation
/// `CoVr[f,g] = E d(f(x), g(y)) - E d(f(x), g(x))` over independent
/// `x, y`; `CoVr[f,f]` is the variation of `f`.
pub fn covariation(f: &TabulatedFunction, g: &TabulatedFunction) -> Result<Value> {
    if f.space() != g.space() {
        return Err(Error::SpaceMismatch(
            "covariation needs a shared input space".into(),
        ));
    }
    if f.outputs() != g.outputs() {
        return Err(Error::SpaceMismatch(
            "covariation needs a shared output space".into(),
        ));
    }
    let outs = f.outputs();
    let fm = output_masses(f);
    let gm = output_masses(g);
    let mut cross = Value::zero();
    for (z1, m1) in fm.iter().enumerate() {
        if m1.is_zero() {
            continue;
        }
        for (z2, m2) in gm.iter().enumerate() {
            if z2 == z1 || m2.is_zero() {
                continue;
            }
            cross = cross + m1 * m2 * outs.dist(z1, z2);
        }
    }
    let mut diag = Value::zero();
    for x in f.space().points() {
        let zf = f.value(x) as usize;
        let zg = g.value(x) as usize;
        if zf != zg {
            diag = diag
                + f.space().point_probability(x).expect("point in range") * outs.dist(zf, zg);
        }
    }
    Ok(cross - diag)
}

/// Expected value of a numeric-valued function.
pub fn expectation(f: &TabulatedFunction) -> Result<Value> {
    let mut total = Value::zero();
    for x in f.space().points() {
        total = total
            + f.space().point_probability(x).expect("point in range") * f.numeric_value(x)?;
    }
    Ok(total)
}

/// Ordinary covariance `E[f g] - E[f] E[g]` of numeric-valued functions
/// on a shared space.
pub fn covariance(f: &TabulatedFunction, g: &TabulatedFunction) -> Result<Value> {
    if f.space() != g.space() {
        return Err(Error::SpaceMismatch(
            "covariance needs a shared input space".into(),
        ));
    }
    let mut prod = Value::zero();
    for x in f.space().points() {
        prod = prod
            + f.space().point_probability(x).expect("point in range")
                * f.numeric_value(x)?
                * g.numeric_value(x)?;
    }
    Ok(prod - expectation(f)? * expectation(g)?)
}

/// Counts behind `Pr_p[f = 1]` as a polynomial in the bias `p`: entry `k`
/// is the number of points with exactly `k` coordinates equal to `+1` that
/// map to output `1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiasPolynomial {
    counts: Vec<u64>,
}

impl BiasPolynomial {
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> usize {
        self.counts.len() - 1
    }

    /// `Pr_p[f = 1] = sum_k c_k p^k (1-p)^(n-k)`; exact for exact `p`.
    pub fn evaluate(&self, p: &Value) -> Value {
        let n = self.n() as i32;
        let q = Value::one() - p;
        let mut total = Value::zero();
        for (k, &c) in self.counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let term = p.powi(k as i32) * q.powi(n - k as i32) * Value::from_int(c as i64);
            total = total + term;
        }
        total
    }
}

/// Requires a `{-1,1}`-cube domain and `{-1,1}`-labelled outputs.
pub fn bias_polynomial(f: &TabulatedFunction) -> Result<BiasPolynomial> {
    let space = f.space();
    if !space.is_binary_pm_cube() {
        return Err(Error::Unsupported(
            "bias polynomial needs a {-1,1} cube domain".into(),
        ));
    }
    let one = f
        .outputs()
        .label_index("1")
        .ok_or_else(|| Error::Unsupported("bias polynomial needs outputs labelled -1/1".into()))?
        as u32;
    let mut counts = vec![0u64; space.n() + 1];
    for x in space.points() {
        if f.value(x) == one {
            let ones = (0..space.n()).filter(|&i| space.digit(x, i) == 1).count();
            counts[ones] += 1;
        }
    }
    Ok(BiasPolynomial { counts })
}

/// Pr over the product measure that `f` outputs the label `1`.
pub fn probability_of_one(f: &TabulatedFunction) -> Result<Value> {
    let one = f
        .outputs()
        .label_index("1")
        .ok_or_else(|| Error::Unsupported("function has no output labelled 1".into()))?;
    Ok(output_masses(f)[one].clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_function, OutputSpace, ProductSpace};
    use std::sync::Arc;

    fn cube_fn(n: usize, labels: &[&str]) -> TabulatedFunction {
        let space = ProductSpace::uniform_cube(n).unwrap();
        let outputs = OutputSpace::boolean(vec!["-1".into(), "1".into()]).unwrap();
        TabulatedFunction::from_labels(space, outputs, labels).unwrap()
    }

    fn figure1() -> TabulatedFunction {
        parse_function(
            "space 3\n\
             coord 1 values -1 1 weights 1/2 1/2\n\
             coord 2 values -1 1 weights 1/2 1/2\n\
             coord 3 values -1 1 weights 1/2 1/2\n\
             outputs -1 0 2 rho2\n\
             values 0 2 -1 -1 -1 2 -1 0\n",
        )
        .unwrap()
    }

    #[test]
    fn variation_of_constant_is_zero() {
        let c = cube_fn(2, &["1", "1", "1", "1"]);
        assert_eq!(variation(&c), Value::zero());
    }

    #[test]
    fn variation_figure1_is_three_halves() {
        assert_eq!(variation(&figure1()), Value::ratio(3, 2));
    }

    #[test]
    fn variation_maj3_balanced() {
        let maj = cube_fn(3, &["-1", "-1", "-1", "1", "-1", "1", "1", "1"]);
        assert_eq!(variation(&maj), Value::one());
    }

    #[test]
    fn influence_of_dictator() {
        let dict = cube_fn(2, &["-1", "-1", "1", "1"]);
        assert_eq!(influence(&dict, 0).unwrap(), Value::one());
        assert_eq!(influence(&dict, 1).unwrap(), Value::zero());
        let iv = influence_vector(&dict).unwrap();
        assert_eq!(iv.total(), &Value::one());
        assert_eq!(iv.max(), &Value::one());
        assert_eq!(iv.metric_tag(), "boolean");
    }

    #[test]
    fn influence_figure1_fixture_values() {
        let f = figure1();
        let iv = influence_vector(&f).unwrap();
        assert_eq!(
            iv.values(),
            &[Value::ratio(1, 8), Value::ratio(7, 8), Value::ratio(7, 8)]
        );
        assert_eq!(iv.metric_tag(), "rho2");
    }

    #[test]
    fn influence_and2_both_halves() {
        let and = cube_fn(2, &["-1", "-1", "-1", "1"]);
        // Oracle: on the uniform cube the rerandomized influence equals the
        // pivotal probability (computed by the independent flip route).
        for i in 0..2 {
            assert_eq!(influence(&and, i).unwrap(), Value::ratio(1, 2));
            assert_eq!(pivotal_probability(&and, i).unwrap(), Value::ratio(1, 2));
        }
    }

    #[test]
    fn influence_out_of_range() {
        let and = cube_fn(2, &["-1", "-1", "-1", "1"]);
        assert!(influence(&and, 2).is_err());
    }

    #[test]
    fn covariation_of_f_with_itself_is_variation() {
        let xor = cube_fn(2, &["-1", "1", "1", "-1"]);
        assert_eq!(covariation(&xor, &xor).unwrap(), variation(&xor));
    }

    #[test]
    fn covariation_with_constant_is_zero() {
        let c = cube_fn(2, &["1", "1", "1", "1"]);
        let and = cube_fn(2, &["-1", "-1", "-1", "1"]);
        assert_eq!(covariation(&c, &and).unwrap(), Value::zero());
    }

    #[test]
    fn covariation_xor_and() {
        let xor = cube_fn(2, &["-1", "1", "1", "-1"]);
        let and = cube_fn(2, &["-1", "-1", "-1", "1"]);
        // Oracle: direct 4x4 point-pair sum.
        let mut cross = Value::zero();
        for x in xor.space().points() {
            for y in xor.space().points() {
                cross = cross
                    + xor.space().point_probability(x).unwrap()
                        * xor.space().point_probability(y).unwrap()
                        * xor
                            .outputs()
                            .dist(xor.value(x) as usize, and.value(y) as usize);
            }
        }
        let mut diag = Value::zero();
        for x in xor.space().points() {
            diag = diag
                + xor.space().point_probability(x).unwrap()
                    * xor
                        .outputs()
                        .dist(xor.value(x) as usize, and.value(x) as usize);
        }
        let expected = cross - diag;
        assert_eq!(covariation(&xor, &and).unwrap(), expected);
        assert_eq!(expected, Value::ratio(-1, 2));
    }

    #[test]
    fn covariance_examples() {
        let dict1 = cube_fn(2, &["-1", "-1", "1", "1"]);
        assert_eq!(covariance(&dict1, &dict1).unwrap(), Value::one());
        let dict2 = cube_fn(2, &["-1", "1", "-1", "1"]);
        assert_eq!(covariance(&dict1, &dict2).unwrap(), Value::zero());

        let maj = cube_fn(3, &["-1", "-1", "-1", "1", "-1", "1", "1", "1"]);
        let x1 = cube_fn(3, &["-1", "-1", "-1", "-1", "1", "1", "1", "1"]);
        assert_eq!(covariance(&maj, &x1).unwrap(), Value::ratio(1, 2));
    }

    #[test]
    fn covariance_needs_numeric_outputs() {
        let space = ProductSpace::uniform_cube(1).unwrap();
        let outputs = OutputSpace::discrete(vec!["a".into(), "b".into()]).unwrap();
        let f = TabulatedFunction::from_labels(space, outputs, &["a", "b"]).unwrap();
        assert!(covariance(&f, &f).is_err());
    }

    #[test]
    fn bias_polynomial_counts() {
        let and3 = cube_fn(3, &["-1", "-1", "-1", "-1", "-1", "-1", "-1", "1"]);
        assert_eq!(bias_polynomial(&and3).unwrap().counts(), &[0, 0, 0, 1]);

        let maj = cube_fn(3, &["-1", "-1", "-1", "1", "-1", "1", "1", "1"]);
        let bp = bias_polynomial(&maj).unwrap();
        assert_eq!(bp.counts(), &[0, 0, 3, 1]);
        // Exact agreement with the enumerated probability at several biases.
        for p in [Value::zero(), Value::ratio(1, 4), Value::ratio(1, 2), Value::ratio(3, 4), Value::one()] {
            let space = ProductSpace::biased_cube(3, &p).unwrap();
            let fp = maj.with_space(space).unwrap();
            assert_eq!(bp.evaluate(&p), probability_of_one(&fp).unwrap());
        }
    }

    #[test]
    fn variation_under_rho2_is_variance() {
        let f = figure1();
        // E[f^2] - E[f]^2, computed directly from numeric outputs.
        let mut ef = Value::zero();
        let mut ef2 = Value::zero();
        for x in f.space().points() {
            let p = f.space().point_probability(x).unwrap();
            let v = f.numeric_value(x).unwrap().clone();
            ef = ef + &p * &v;
            ef2 = ef2 + &p * &v * &v;
        }
        assert_eq!(variation(&f), ef2 - &ef * &ef);
    }

    #[test]
    fn influence_ignores_irrelevant_coordinate_under_any_metric() {
        // f depends only on coordinate 2 of a 3-valued coordinate space.
        let c3 = crate::model::CoordDomain::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![Value::ratio(1, 2), Value::ratio(1, 4), Value::ratio(1, 4)],
        )
        .unwrap();
        let c2 = crate::model::CoordDomain::uniform(vec!["x".into(), "y".into()]).unwrap();
        let space = Arc::new(ProductSpace::new(vec![c3, c2]).unwrap());
        let outputs = OutputSpace::discrete(vec!["0".into(), "1".into()]).unwrap();
        let f = TabulatedFunction::from_labels(
            space,
            outputs,
            &["0", "1", "0", "1", "0", "1"],
        )
        .unwrap();
        assert_eq!(influence(&f, 0).unwrap(), Value::zero());
        assert!(influence(&f, 1).unwrap() > Value::zero());
    }
}
