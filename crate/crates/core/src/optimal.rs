//! Minimum expected cost and minimum depth over all decision trees
//! computing a function, with witnessing trees, plus a brute-force
//! enumerator of all such trees for cross-validation.
//!
//! The recursion runs over restrictions of the function: the cost of a
//! constant restriction is 0; otherwise it is the best over relevant free
//! coordinates i of `1 + sum_a mu_i(a) * cost(restriction with i := a)`
//! (expected cost), or `1 + max_a` (depth). States are memoized by the
//! restriction's signature: the induced subfunction's table together with
//! the equivalence classes of its free coordinate domains, so restrictions
//! inducing the same subfunction over interchangeable coordinates share
//! one memo entry.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{ProductSpace, TabulatedFunction};
use crate::tree::{DecisionTree, Node};
use crate::value::Value;

/// One restriction of the ambient function: each coordinate fixed to a
/// value index or left free.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Restriction {
    assignment: Vec<Option<usize>>,
}

impl Restriction {
    pub fn all_free(n: usize) -> Self {
        Restriction {
            assignment: vec![None; n],
        }
    }

    pub fn assign(&self, coord: usize, value: usize) -> Self {
        let mut next = self.clone();
        next.assignment[coord] = Some(value);
        next
    }

    pub fn free_coords(&self) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(i, a)| a.is_none().then_some(i))
            .collect()
    }
}

/// Memo key: the subfunction's truth table over its free coordinates plus
/// the domain classes of those coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Signature {
    classes: Vec<u32>,
    table: Vec<u32>,
}

#[derive(Clone)]
enum Choice {
    Constant(u32),
    /// Position in the (ascending) free-coordinate list.
    Query(usize),
}

struct Dp<'a> {
    f: &'a TabulatedFunction,
    space: &'a Arc<ProductSpace>,
    /// Domain equivalence class per coordinate: index of the first
    /// coordinate with identical values and weights.
    coord_class: Vec<u32>,
}

impl<'a> Dp<'a> {
    fn new(f: &'a TabulatedFunction) -> Self {
        let space = f.space();
        let mut coord_class = Vec::with_capacity(space.n());
        for i in 0..space.n() {
            let class = (0..i)
                .find(|&j| space.coord(j) == space.coord(i))
                .unwrap_or(i);
            coord_class.push(class as u32);
        }
        Dp {
            f,
            space,
            coord_class,
        }
    }

    /// The induced subfunction's table, enumerated over the free
    /// coordinates in ascending order with the last one varying fastest.
    fn subtable(&self, r: &Restriction) -> (Vec<usize>, Vec<u32>) {
        let free = r.free_coords();
        let mut size = 1usize;
        for &i in &free {
            size *= self.space.arity(i);
        }
        let mut digits = vec![0usize; self.space.n()];
        for (i, a) in r.assignment.iter().enumerate() {
            if let Some(v) = a {
                digits[i] = *v;
            }
        }
        let mut table = Vec::with_capacity(size);
        let mut counter = vec![0usize; free.len()];
        loop {
            for (pos, &i) in free.iter().enumerate() {
                digits[i] = counter[pos];
            }
            let x = self.space.encode(&digits).expect("digits in range");
            table.push(self.f.value(x));
            // Mixed-radix increment, last free coordinate fastest.
            let mut pos = free.len();
            loop {
                if pos == 0 {
                    return (free, table);
                }
                pos -= 1;
                counter[pos] += 1;
                if counter[pos] < self.space.arity(free[pos]) {
                    break;
                }
                counter[pos] = 0;
            }
        }
    }

    fn signature(&self, free: &[usize], table: &[u32]) -> Signature {
        Signature {
            classes: free.iter().map(|&i| self.coord_class[i]).collect(),
            table: table.to_vec(),
        }
    }

    /// Positions in `free` whose coordinate the subfunction depends on.
    fn relevant_positions(&self, free: &[usize], table: &[u32]) -> Vec<usize> {
        let mut strides = vec![1usize; free.len()];
        for p in (0..free.len().saturating_sub(1)).rev() {
            strides[p] = strides[p + 1] * self.space.arity(free[p + 1]);
        }
        (0..free.len())
            .filter(|&p| {
                let arity = self.space.arity(free[p]);
                let stride = strides[p];
                (0..table.len()).any(|idx| {
                    let a = (idx / stride) % arity;
                    a + 1 < arity && table[idx] != table[idx + stride]
                })
            })
            .collect()
    }
}

fn solve_expected(
    dp: &Dp,
    r: &Restriction,
    memo: &mut HashMap<Signature, (Value, Choice)>,
) -> Value {
    let (free, table) = dp.subtable(r);
    let sig = dp.signature(&free, &table);
    if let Some((cost, _)) = memo.get(&sig) {
        return cost.clone();
    }
    let relevant = dp.relevant_positions(&free, &table);
    let entry = if relevant.is_empty() {
        (Value::zero(), Choice::Constant(table[0]))
    } else {
        let mut best: Option<(Value, usize)> = None;
        for &p in &relevant {
            let coord = free[p];
            let mut cost = Value::one();
            for a in 0..dp.space.arity(coord) {
                let child = solve_expected(dp, &r.assign(coord, a), memo);
                cost = cost + dp.space.coord(coord).weight(a) * &child;
            }
            // Ties keep the earliest (lowest-index) coordinate.
            let better = match &best {
                None => true,
                Some((b, _)) => cost < *b,
            };
            if better {
                best = Some((cost, p));
            }
        }
        let (cost, p) = best.expect("nonconstant restriction has a relevant coordinate");
        (cost, Choice::Query(p))
    };
    let cost = entry.0.clone();
    memo.insert(sig, entry);
    cost
}

fn solve_depth(dp: &Dp, r: &Restriction, memo: &mut HashMap<Signature, (u32, Choice)>) -> u32 {
    let (free, table) = dp.subtable(r);
    let sig = dp.signature(&free, &table);
    if let Some((cost, _)) = memo.get(&sig) {
        return *cost;
    }
    let relevant = dp.relevant_positions(&free, &table);
    let entry = if relevant.is_empty() {
        (0, Choice::Constant(table[0]))
    } else {
        let mut best: Option<(u32, usize)> = None;
        for &p in &relevant {
            let coord = free[p];
            let mut worst = 0u32;
            for a in 0..dp.space.arity(coord) {
                worst = worst.max(solve_depth(dp, &r.assign(coord, a), memo));
            }
            let cost = 1 + worst;
            if best.as_ref().is_none_or(|(b, _)| cost < *b) {
                best = Some((cost, p));
            }
        }
        let (cost, p) = best.expect("nonconstant restriction has a relevant coordinate");
        (cost, Choice::Query(p))
    };
    let cost = entry.0;
    memo.insert(sig, entry);
    cost
}

fn rebuild_witness<C>(dp: &Dp, r: &Restriction, memo: &HashMap<Signature, (C, Choice)>) -> Node {
    let (free, table) = dp.subtable(r);
    let sig = dp.signature(&free, &table);
    match &memo.get(&sig).expect("memo populated during solve").1 {
        Choice::Constant(z) => Node::Leaf(*z),
        Choice::Query(p) => {
            let coord = free[*p];
            let children = (0..dp.space.arity(coord))
                .map(|a| rebuild_witness(dp, &r.assign(coord, a), memo))
                .collect();
            Node::Query { coord, children }
        }
    }
}

/// Minimum of the expected query count over all decision trees computing
/// `f`, with one optimal tree as witness. Ties between equally good query
/// coordinates resolve to the lowest index, so the witness is
/// deterministic.
pub fn optimal_expected_cost(f: &TabulatedFunction) -> Result<(Value, DecisionTree)> {
    let dp = Dp::new(f);
    let root = Restriction::all_free(f.space().n());
    let mut memo = HashMap::new();
    let cost = solve_expected(&dp, &root, &mut memo);
    let witness = DecisionTree::new(
        f.space().clone(),
        f.outputs().clone(),
        rebuild_witness(&dp, &root, &memo),
    )?;
    Ok((cost, witness))
}

/// Minimum depth over all decision trees computing `f`, with witness.
pub fn optimal_depth(f: &TabulatedFunction) -> Result<(u32, DecisionTree)> {
    let dp = Dp::new(f);
    let root = Restriction::all_free(f.space().n());
    let mut memo = HashMap::new();
    let cost = solve_depth(&dp, &root, &mut memo);
    let witness = DecisionTree::new(
        f.space().clone(),
        f.outputs().clone(),
        rebuild_witness(&dp, &root, &memo),
    )?;
    Ok((cost, witness))
}

/// Upper bound on the number of variables accepted by
/// [`enumerate_all_ddts`].
pub const ENUMERATION_MAX_VARS: usize = 4;

/// Every decision tree computing `f` that queries only variables the
/// current restriction depends on, without duplicates. Children are in
/// canonical (value-index) order. Refuses spaces beyond 4 binary
/// coordinates; the counts explode quickly.
pub fn enumerate_all_ddts(f: &TabulatedFunction) -> Result<Vec<DecisionTree>> {
    let space = f.space();
    if space.n() > ENUMERATION_MAX_VARS {
        return Err(Error::Unsupported(format!(
            "tree enumeration is limited to {ENUMERATION_MAX_VARS} variables, got {}",
            space.n()
        )));
    }
    if (0..space.n()).any(|i| space.arity(i) != 2) {
        return Err(Error::Unsupported(
            "tree enumeration needs binary coordinates".into(),
        ));
    }
    let dp = Dp::new(f);
    let mut memo: HashMap<Restriction, Vec<Node>> = HashMap::new();
    let nodes = enum_nodes(&dp, &Restriction::all_free(space.n()), &mut memo);
    nodes
        .into_iter()
        .map(|root| DecisionTree::new(space.clone(), f.outputs().clone(), root))
        .collect()
}

fn enum_nodes(dp: &Dp, r: &Restriction, memo: &mut HashMap<Restriction, Vec<Node>>) -> Vec<Node> {
    if let Some(nodes) = memo.get(r) {
        return nodes.clone();
    }
    let (free, table) = dp.subtable(r);
    let relevant = dp.relevant_positions(&free, &table);
    let mut out = Vec::new();
    if relevant.is_empty() {
        out.push(Node::Leaf(table[0]));
    } else {
        for &p in &relevant {
            let coord = free[p];
            let per_child: Vec<Vec<Node>> = (0..dp.space.arity(coord))
                .map(|a| enum_nodes(dp, &r.assign(coord, a), memo))
                .collect();
            let mut combos: Vec<Vec<Node>> = vec![Vec::new()];
            for child_list in &per_child {
                let mut next = Vec::with_capacity(combos.len() * child_list.len());
                for combo in &combos {
                    for c in child_list {
                        let mut extended = combo.clone();
                        extended.push(c.clone());
                        next.push(extended);
                    }
                }
                combos = next;
            }
            for children in combos {
                out.push(Node::Query { coord, children });
            }
        }
    }
    memo.insert(r.clone(), out.clone());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{OutputSpace, ProductSpace};

    fn cube_fn(n: usize, labels: &[&str]) -> TabulatedFunction {
        let space = ProductSpace::uniform_cube(n).unwrap();
        let outputs = OutputSpace::boolean(vec!["-1".into(), "1".into()]).unwrap();
        TabulatedFunction::from_labels(space, outputs, labels).unwrap()
    }

    fn xor(n: usize) -> TabulatedFunction {
        let space = ProductSpace::uniform_cube(n).unwrap();
        let outputs = OutputSpace::boolean(vec!["-1".into(), "1".into()]).unwrap();
        TabulatedFunction::tabulate(space.clone(), outputs, |x| {
            let ones = (0..n).filter(|&i| space.digit(x, i) == 1).count();
            (ones % 2) as u32
        })
        .unwrap()
    }

    #[test]
    fn constant_function_costs_nothing() {
        let c = cube_fn(2, &["1", "1", "1", "1"]);
        let (cost, witness) = optimal_expected_cost(&c).unwrap();
        assert_eq!(cost, Value::zero());
        assert!(witness.root().is_leaf());
        let (d, witness) = optimal_depth(&c).unwrap();
        assert_eq!(d, 0);
        assert!(witness.computes(&c).unwrap());
    }

    #[test]
    fn xor_reads_everything() {
        for n in 1..=3 {
            let f = xor(n);
            let (cost, witness) = optimal_expected_cost(&f).unwrap();
            assert_eq!(cost, Value::from_int(n as i64));
            assert!(witness.computes(&f).unwrap());
            let (d, _) = optimal_depth(&f).unwrap();
            assert_eq!(d, n as u32);
        }
    }

    #[test]
    fn and2_expected_cost() {
        let and = cube_fn(2, &["-1", "-1", "-1", "1"]);
        let (cost, witness) = optimal_expected_cost(&and).unwrap();
        assert_eq!(cost, Value::ratio(3, 2));
        assert!(witness.computes(&and).unwrap());
        assert_eq!(witness.expected_cost(), cost);
    }

    #[test]
    fn maj3_expected_cost() {
        let maj = cube_fn(3, &["-1", "-1", "-1", "1", "-1", "1", "1", "1"]);
        let (cost, witness) = optimal_expected_cost(&maj).unwrap();
        assert_eq!(cost, Value::ratio(5, 2));
        assert!(witness.computes(&maj).unwrap());
    }

    #[test]
    fn sel_depth_is_two() {
        let sel = cube_fn(3, &["-1", "1", "-1", "1", "-1", "-1", "1", "1"]);
        let (d, witness) = optimal_depth(&sel).unwrap();
        assert_eq!(d, 2);
        assert!(witness.computes(&sel).unwrap());
    }

    #[test]
    fn witness_ties_break_to_lowest_coordinate() {
        let f = xor(2);
        let (_, witness) = optimal_expected_cost(&f).unwrap();
        match witness.root() {
            Node::Query { coord, .. } => assert_eq!(*coord, 0),
            Node::Leaf(_) => panic!("xor witness cannot be a leaf"),
        }
    }

    #[test]
    fn enumeration_counts() {
        // Dictator on one variable: exactly the single-query tree.
        let dict = cube_fn(1, &["-1", "1"]);
        assert_eq!(enumerate_all_ddts(&dict).unwrap().len(), 1);
        // Constant on one variable: only the leaf.
        let c = cube_fn(1, &["1", "1"]);
        let trees = enumerate_all_ddts(&c).unwrap();
        assert_eq!(trees.len(), 1);
        assert!(trees[0].root().is_leaf());
        // AND2: hand enumeration gives exactly two trees (root x1 or x2,
        // the false branch is forced constant either way).
        let and = cube_fn(2, &["-1", "-1", "-1", "1"]);
        let trees = enumerate_all_ddts(&and).unwrap();
        assert_eq!(trees.len(), 2);
        for t in &trees {
            assert!(t.computes(&and).unwrap());
        }
    }

    #[test]
    fn enumeration_agrees_with_dp_on_small_functions() {
        // All 16 functions on 2 variables.
        for code in 0u32..16 {
            let labels: Vec<&str> = (0..4)
                .map(|i| if code >> i & 1 == 1 { "1" } else { "-1" })
                .collect();
            let f = cube_fn(2, &labels);
            let (cost, _) = optimal_expected_cost(&f).unwrap();
            let best = enumerate_all_ddts(&f)
                .unwrap()
                .into_iter()
                .map(|t| t.expected_cost())
                .reduce(|a, b| if b < a { b } else { a })
                .unwrap();
            assert_eq!(cost, best, "disagreement on function {code}");
        }
    }

    #[test]
    fn enumeration_refuses_large_spaces() {
        let f = xor(5);
        assert!(enumerate_all_ddts(&f).is_err());
    }

    #[test]
    fn depth_never_below_expected_cost() {
        for code in 0u32..=255 {
            let labels: Vec<&str> = (0..8)
                .map(|i| if code >> i & 1 == 1 { "1" } else { "-1" })
                .collect();
            let f = cube_fn(3, &labels);
            let (cost, _) = optimal_expected_cost(&f).unwrap();
            let (d, _) = optimal_depth(&f).unwrap();
            assert!(cost <= Value::from_int(d as i64));
            assert!(d <= 3);
        }
    }
}
