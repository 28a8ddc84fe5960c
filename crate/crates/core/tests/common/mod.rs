//! Shared fixtures and independent oracles for the integration suites.
//!
//! Everything here recomputes quantities by a route different from the
//! library's own (raw double sums, point enumeration, closed forms) so the
//! tests cross-validate rather than echo the implementation.

#![allow(dead_code)]
// Symmetric-matrix fills below index both halves deliberately.
#![allow(clippy::needless_range_loop)]

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use treeinf::model::{OutputSpace, ProductSpace, TabulatedFunction};
use treeinf::tree::{DecisionTree, Node};
use treeinf::value::Value;

pub fn boolean_outputs() -> Arc<OutputSpace> {
    OutputSpace::boolean(vec!["-1".into(), "1".into()]).unwrap()
}

/// Boolean function on the `p`-biased `n`-cube from a truth-table code
/// (bit `i` of `code` is the output at point index `i`).
pub fn cube_fn_code(n: usize, p: &Value, code: u64) -> TabulatedFunction {
    let space = ProductSpace::biased_cube(n, p).unwrap();
    let table: Vec<u32> = (0..(1u64 << n)).map(|i| (code >> i & 1) as u32).collect();
    TabulatedFunction::new(space, boolean_outputs(), table).unwrap()
}

/// All `2^(2^n)` boolean functions at `n` (intended for `n <= 3`).
pub fn all_boolean_fns(n: usize, p: &Value) -> impl Iterator<Item = TabulatedFunction> + '_ {
    let count = 1u64 << (1 << n);
    (0..count).map(move |code| cube_fn_code(n, p, code))
}

/// Oracle: per-coordinate query probabilities by full point enumeration,
/// independent of the path-summation route in the library.
pub fn delta_by_enumeration(t: &DecisionTree) -> Vec<Value> {
    let space = t.space();
    let mut acc = vec![Value::zero(); space.n()];
    for x in space.points() {
        let p = space.point_probability(x).unwrap();
        for i in t.evaluate(x).queried {
            acc[i] = &acc[i] + &p;
        }
    }
    acc
}

/// Oracle: variation as the raw double sum over all point pairs.
pub fn variation_double_sum(f: &TabulatedFunction) -> Value {
    let space = f.space();
    let mut total = Value::zero();
    for x in space.points() {
        let px = space.point_probability(x).unwrap();
        for y in space.points() {
            let d = f.outputs().dist(f.value(x) as usize, f.value(y) as usize);
            if !d.is_zero() {
                total = total + &px * space.point_probability(y).unwrap() * d;
            }
        }
    }
    total
}

/// Oracle: total influence term by term via the rerandomized pair space,
/// written as an explicit sum over (rest, a, b) triples.
pub fn influence_pair_sum(f: &TabulatedFunction, i: usize) -> Value {
    let space = f.space();
    let mut total = Value::zero();
    for x in space.points() {
        // Only count x where coordinate i sits at value 0 .. to enumerate
        // each off-i assignment once.
        if space.digit(x, i) != 0 {
            continue;
        }
        let mut rest = space.point_probability(x).unwrap();
        rest = rest / space.coord(i).weight(0);
        for a in 0..space.arity(i) {
            for b in 0..space.arity(i) {
                let za = f.value(space.with_digit(x, i, a)) as usize;
                let zb = f.value(space.with_digit(x, i, b)) as usize;
                if za != zb {
                    total = total
                        + &rest
                            * space.coord(i).weight(a)
                            * space.coord(i).weight(b)
                            * f.outputs().dist(za, zb);
                }
            }
        }
    }
    total
}

/// A uniformly random decision tree over `space`: queries a random unused
/// coordinate or stops early. Leaves are random output indices.
pub fn random_tree(
    space: &Arc<ProductSpace>,
    outputs: &Arc<OutputSpace>,
    rng: &mut ChaCha8Rng,
) -> DecisionTree {
    fn gen(
        space: &Arc<ProductSpace>,
        n_outputs: usize,
        unused: &mut Vec<usize>,
        rng: &mut ChaCha8Rng,
    ) -> Node {
        if unused.is_empty() || rng.gen_bool(0.35) {
            return Node::Leaf(rng.gen_range(0..n_outputs) as u32);
        }
        let pick = rng.gen_range(0..unused.len());
        let coord = unused.swap_remove(pick);
        let children = (0..space.arity(coord))
            .map(|_| gen(space, n_outputs, unused, rng))
            .collect();
        unused.push(coord);
        Node::Query { coord, children }
    }
    let mut unused: Vec<usize> = (0..space.n()).collect();
    let root = gen(space, outputs.len(), &mut unused, rng);
    DecisionTree::new(space.clone(), outputs.clone(), root).unwrap()
}

/// A random product space with exact rational weights.
pub fn random_space(rng: &mut ChaCha8Rng) -> Arc<ProductSpace> {
    let n = rng.gen_range(1..=3);
    let coords = (0..n)
        .map(|_| {
            let arity = rng.gen_range(2..=3);
            let raw: Vec<i64> = (0..arity).map(|_| rng.gen_range(1..=6)).collect();
            let total: i64 = raw.iter().sum();
            let values = (0..arity).map(|a| format!("v{a}")).collect();
            let weights = raw.iter().map(|&r| Value::ratio(r, total)).collect();
            treeinf::model::CoordDomain::new(values, weights).unwrap()
        })
        .collect();
    Arc::new(ProductSpace::new(coords).unwrap())
}

/// A random exact metric space: random rational distances pushed through
/// the shortest-path closure, which forces the triangle inequality.
pub fn random_metric_outputs(rng: &mut ChaCha8Rng) -> Arc<OutputSpace> {
    let k = rng.gen_range(2..=4);
    let mut d = vec![vec![Value::zero(); k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let raw = Value::ratio(rng.gen_range(1..=8), rng.gen_range(1..=4));
            d[i][j] = raw.clone();
            d[j][i] = raw;
        }
    }
    for m in 0..k {
        for i in 0..k {
            for j in 0..k {
                let via = &d[i][m] + &d[m][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    let labels = (0..k).map(|i| format!("z{i}")).collect();
    Arc::new(OutputSpace::new(labels, d, treeinf::model::MetricKind::Metric).unwrap())
}

/// Exact expected query count of the random-child strategy on a uniform
/// random input of the recursive AND-OR function, by the closed recursion
/// on (probability of 1, conditional costs) at each level.
pub fn fk_exact_mean_cost(k: u32) -> Value {
    // (p, c1, c0): Pr[value = 1] and expected cost given the value.
    let mut p = Value::ratio(1, 2);
    let mut c1 = Value::one();
    let mut c0 = Value::one();
    for _ in 0..k {
        // AND of two independent copies, random child first.
        let q = Value::one() - &p;
        let p_and = &p * &p;
        let and_c1 = Value::from_int(2) * &c1;
        let mass0 = &q * &c0 + &p * &q * (&c1 + &c0);
        let and_c0 = mass0 / (Value::one() - &p_and);
        // OR of two independent AND gates, random child first.
        let q_and = Value::one() - &p_and;
        let p_or = Value::one() - &q_and * &q_and;
        let mass1 = &p_and * &and_c1 + &q_and * &p_and * (&and_c0 + &and_c1);
        let or_c1 = mass1 / &p_or;
        let or_c0 = Value::from_int(2) * &and_c0;
        p = p_or;
        c1 = or_c1;
        c0 = or_c0;
    }
    &p * &c1 + (Value::one() - &p) * &c0
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
