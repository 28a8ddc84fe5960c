//! Generators for the named function families used throughout the test
//! and acceptance suites, each with its canonical tree where one exists,
//! plus monotone graph properties on edge variables and a randomized
//! evaluation-cost estimator for the recursive AND-OR function.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{OutputSpace, PointIndex, ProductSpace, TabulatedFunction};
use crate::tree::{compose_disjoint, DecisionTree, Node};
use crate::value::Value;

/// The `figure1` fixture tree: three variables, outputs `{-1, 0, 2}`,
/// with the second and third coordinates each queried twice.
pub const FIXTURE3_TREE: &str = "(q 1 (-1 (q 2 (-1 (q 3 (-1 (leaf 0)) (1 (leaf 2)))) (1 (leaf -1)))) (1 (q 3 (-1 (leaf -1)) (1 (q 2 (-1 (leaf 2)) (1 (leaf 0)))))))";

const FIXTURE3_VALUES: [&str; 8] = ["0", "2", "-1", "-1", "-1", "2", "-1", "0"];

/// A named function family with its parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FamilySpec {
    And(usize),
    Or(usize),
    Xor(usize),
    Maj(usize),
    Sel,
    /// OR of `tribes` disjoint ANDs of `width` variables each.
    Tribes { width: usize, tribes: usize },
    /// The recursive AND-OR function on `4^k` variables.
    RecursiveFk(u32),
    Graph { vertices: usize, property: GraphProperty },
    Dictator(usize),
    Constant(usize),
    Figure1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphProperty {
    Nonempty,
    Triangle,
    Connectivity,
}

impl GraphProperty {
    pub fn name(&self) -> &'static str {
        match self {
            GraphProperty::Nonempty => "nonempty",
            GraphProperty::Triangle => "triangle",
            GraphProperty::Connectivity => "connectivity",
        }
    }
}

impl FamilySpec {
    /// Parses the CLI form `name[:params]`, e.g. `and:2`, `tribes:2,2`
    /// (width first), `fk:1`, `graph:connectivity,4`, `figure1`.
    pub fn parse(s: &str) -> Result<FamilySpec> {
        let (name, params) = match s.split_once(':') {
            Some((n, p)) => (n, Some(p)),
            None => (s, None),
        };
        let bad = || Error::Invalid(format!("unrecognized family {s:?}"));
        let int = |p: Option<&str>| -> Result<usize> {
            p.and_then(|t| t.parse().ok()).ok_or_else(bad)
        };
        Ok(match name {
            "and" => FamilySpec::And(int(params)?),
            "or" => FamilySpec::Or(int(params)?),
            "xor" => FamilySpec::Xor(int(params)?),
            "maj" => FamilySpec::Maj(int(params)?),
            "sel" => FamilySpec::Sel,
            "tribes" => {
                let (w, s) = params.and_then(|p| p.split_once(',')).ok_or_else(bad)?;
                FamilySpec::Tribes {
                    width: w.parse().map_err(|_| bad())?,
                    tribes: s.parse().map_err(|_| bad())?,
                }
            }
            "fk" => FamilySpec::RecursiveFk(int(params)? as u32),
            "graph" => {
                let (prop, v) = params.and_then(|p| p.split_once(',')).ok_or_else(bad)?;
                let property = match prop {
                    "nonempty" => GraphProperty::Nonempty,
                    "triangle" => GraphProperty::Triangle,
                    "connectivity" => GraphProperty::Connectivity,
                    _ => return Err(Error::Invalid(format!("unknown graph property {prop:?}"))),
                };
                FamilySpec::Graph {
                    vertices: v.parse().map_err(|_| bad())?,
                    property,
                }
            }
            "dictator" => FamilySpec::Dictator(int(params)?),
            "constant" => FamilySpec::Constant(int(params)?),
            "figure1" => FamilySpec::Figure1,
            _ => return Err(bad()),
        })
    }

    pub fn descriptor(&self) -> String {
        match self {
            FamilySpec::And(n) => format!("and:{n}"),
            FamilySpec::Or(n) => format!("or:{n}"),
            FamilySpec::Xor(n) => format!("xor:{n}"),
            FamilySpec::Maj(n) => format!("maj:{n}"),
            FamilySpec::Sel => "sel".into(),
            FamilySpec::Tribes { width, tribes } => format!("tribes:{width},{tribes}"),
            FamilySpec::RecursiveFk(k) => format!("fk:{k}"),
            FamilySpec::Graph {
                vertices,
                property,
            } => format!("graph:{},{vertices}", property.name()),
            FamilySpec::Dictator(n) => format!("dictator:{n}"),
            FamilySpec::Constant(n) => format!("constant:{n}"),
            FamilySpec::Figure1 => "figure1".into(),
        }
    }
}

fn boolean_outputs() -> Result<Arc<OutputSpace>> {
    OutputSpace::boolean(vec!["-1".into(), "1".into()])
}

/// Read-once chain for AND: follow `1` edges, bail out to `-1` on the
/// first `-1`.
fn and_chain(n: usize, next: usize) -> Node {
    if next == n {
        Node::Leaf(1)
    } else {
        Node::Query {
            coord: next,
            children: vec![Node::Leaf(0), and_chain(n, next + 1)],
        }
    }
}

fn or_chain(n: usize, next: usize) -> Node {
    if next == n {
        Node::Leaf(0)
    } else {
        Node::Query {
            coord: next,
            children: vec![or_chain(n, next + 1), Node::Leaf(1)],
        }
    }
}

/// Full tree for parity: query every coordinate along every path.
fn xor_full(n: usize, next: usize, ones: u32) -> Node {
    if next == n {
        Node::Leaf(ones % 2)
    } else {
        Node::Query {
            coord: next,
            children: vec![xor_full(n, next + 1, ones), xor_full(n, next + 1, ones + 1)],
        }
    }
}

/// Builds the family's function on the `p`-biased cube, together with its
/// canonical tree where one is defined (none for parity beyond the full
/// tree, for larger majorities, and for graph properties — parity's
/// canonical tree IS the full tree).
pub fn build(
    spec: &FamilySpec,
    p: &Value,
) -> Result<(TabulatedFunction, Option<DecisionTree>)> {
    match spec {
        FamilySpec::And(n) => {
            let (f, space, outs) = boolean_family(*n, p, |digits| digits.iter().all(|&d| d == 1))?;
            let tree = DecisionTree::new(space, outs, and_chain(*n, 0))?;
            Ok((f, Some(tree)))
        }
        FamilySpec::Or(n) => {
            let (f, space, outs) = boolean_family(*n, p, |digits| digits.contains(&1))?;
            let tree = DecisionTree::new(space, outs, or_chain(*n, 0))?;
            Ok((f, Some(tree)))
        }
        FamilySpec::Xor(n) => {
            let (f, space, outs) =
                boolean_family(*n, p, |digits| digits.iter().filter(|&&d| d == 1).count() % 2 == 1)?;
            let tree = DecisionTree::new(space, outs, xor_full(*n, 0, 0))?;
            Ok((f, Some(tree)))
        }
        FamilySpec::Maj(n) => {
            if n % 2 == 0 {
                return Err(Error::Invalid("majority needs an odd variable count".into()));
            }
            let (f, space, outs) = boolean_family(*n, p, |digits| {
                digits.iter().filter(|&&d| d == 1).count() * 2 > digits.len()
            })?;
            let tree = if *n == 3 {
                // Query x1 and x2; x3 breaks ties.
                let tie = |low: Node, high: Node| Node::Query {
                    coord: 2,
                    children: vec![low, high],
                };
                let root = Node::Query {
                    coord: 0,
                    children: vec![
                        Node::Query {
                            coord: 1,
                            children: vec![Node::Leaf(0), tie(Node::Leaf(0), Node::Leaf(1))],
                        },
                        Node::Query {
                            coord: 1,
                            children: vec![tie(Node::Leaf(0), Node::Leaf(1)), Node::Leaf(1)],
                        },
                    ],
                };
                Some(DecisionTree::new(space, outs, root)?)
            } else {
                None
            };
            Ok((f, tree))
        }
        FamilySpec::Sel => {
            let (f, space, outs) =
                boolean_family(3, p, |d| if d[0] == 1 { d[1] == 1 } else { d[2] == 1 })?;
            let pick = |coord: usize| Node::Query {
                coord,
                children: vec![Node::Leaf(0), Node::Leaf(1)],
            };
            let root = Node::Query {
                coord: 0,
                children: vec![pick(2), pick(1)],
            };
            Ok((f, Some(DecisionTree::new(space, outs, root)?)))
        }
        FamilySpec::Tribes { width, tribes } => {
            let (w, s) = (*width, *tribes);
            if w == 0 || s == 0 {
                return Err(Error::Invalid("tribes parameters must be positive".into()));
            }
            let n = w
                .checked_mul(s)
                .ok_or_else(|| Error::Invalid("tribes size overflow".into()))?;
            let (f, _, _) = boolean_family(n, p, |digits| {
                digits.chunks(w).any(|tribe| tribe.iter().all(|&d| d == 1))
            })?;
            // Canonical tree: OR chain over the tribes, each node replaced
            // by a read-once AND tree for that tribe.
            let (or_f, or_tree) = build(&FamilySpec::Or(s), p)?;
            let _ = or_f;
            let (and_f, and_tree) = build(&FamilySpec::And(w), p)?;
            let and_tree = and_tree.expect("and always has a canonical tree");
            let or_tree = or_tree.expect("or always has a canonical tree");
            let factors: Vec<(DecisionTree, TabulatedFunction)> = (0..s)
                .map(|_| (and_tree.clone(), and_f.clone()))
                .collect();
            let composed = compose_disjoint(&or_tree, &factors)?;
            Ok((f, Some(composed)))
        }
        FamilySpec::RecursiveFk(k) => {
            if *k > 2 {
                return Err(Error::CapExceeded {
                    points: (2u128).pow(4u32.pow(*k)),
                    cap: crate::model::DEFAULT_ENUMERATION_CAP,
                });
            }
            let n = 4usize.pow(*k);
            let (f, _, _) = boolean_family(n, p, |digits| {
                let bits: Vec<bool> = digits.iter().map(|&d| d == 1).collect();
                fk_eval(*k, &bits)
            })?;
            Ok((f, None))
        }
        FamilySpec::Graph {
            vertices,
            property,
        } => Ok((graph_property(*vertices, *property, p)?, None)),
        FamilySpec::Dictator(n) => {
            if *n == 0 {
                return Err(Error::Invalid("dictator needs at least one variable".into()));
            }
            let (f, space, outs) = boolean_family(*n, p, |digits| digits[0] == 1)?;
            let root = Node::Query {
                coord: 0,
                children: vec![Node::Leaf(0), Node::Leaf(1)],
            };
            Ok((f, Some(DecisionTree::new(space, outs, root)?)))
        }
        FamilySpec::Constant(n) => {
            let (f, space, outs) = boolean_family(*n, p, |_| true)?;
            Ok((f, Some(DecisionTree::new(space, outs, Node::Leaf(1))?)))
        }
        FamilySpec::Figure1 => {
            let space = ProductSpace::biased_cube(3, p)?;
            let outputs = OutputSpace::rho2(vec!["-1".into(), "0".into(), "2".into()])?;
            let f = TabulatedFunction::from_labels(
                space.clone(),
                outputs.clone(),
                &FIXTURE3_VALUES,
            )?;
            let tree = crate::tree::parse_tree(FIXTURE3_TREE, space, outputs)?;
            Ok((f, Some(tree)))
        }
    }
}

type FamilyParts = (TabulatedFunction, Arc<ProductSpace>, Arc<OutputSpace>);

fn boolean_family(
    n: usize,
    p: &Value,
    truth: impl Fn(&[usize]) -> bool,
) -> Result<FamilyParts> {
    if n == 0 {
        return Err(Error::Invalid("family needs at least one variable".into()));
    }
    let space = ProductSpace::biased_cube(n, p)?;
    let outputs = boolean_outputs()?;
    let f = TabulatedFunction::tabulate(space.clone(), outputs.clone(), |x| {
        let digits: Vec<usize> = (0..n).map(|i| space.digit(x, i)).collect();
        truth(&digits) as u32
    })?;
    Ok((f, space, outputs))
}

/// Edge list of the complete graph on `v` vertices in coordinate order:
/// `(0,1), (0,2), ..., (0,v-1), (1,2), ...`.
pub fn edge_list(v: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::with_capacity(v * (v - 1) / 2);
    for i in 0..v {
        for j in (i + 1)..v {
            edges.push((i, j));
        }
    }
    edges
}

/// A monotone graph property as a boolean function on the
/// `C(v,2)` edge variables of a `v`-vertex graph, edge present iff its
/// variable is `1`.
pub fn graph_property(
    v: usize,
    property: GraphProperty,
    p: &Value,
) -> Result<TabulatedFunction> {
    if !(2..=6).contains(&v) {
        return Err(Error::Unsupported(
            "graph properties are supported for 2 <= v <= 6".into(),
        ));
    }
    let edges = edge_list(v);
    let space = ProductSpace::biased_cube(edges.len(), p)?;
    let outputs = boolean_outputs()?;
    TabulatedFunction::tabulate(space.clone(), outputs, |x| {
        let present: Vec<bool> = (0..edges.len()).map(|e| space.digit(x, e) == 1).collect();
        let holds = match property {
            GraphProperty::Nonempty => present.iter().any(|&e| e),
            GraphProperty::Triangle => {
                let adj = adjacency(v, &edges, &present);
                (0..v).any(|a| {
                    ((a + 1)..v)
                        .any(|b| adj[a][b] && ((b + 1)..v).any(|c| adj[a][c] && adj[b][c]))
                })
            }
            GraphProperty::Connectivity => connected(v, &edges, &present),
        };
        holds as u32
    })
}

fn adjacency(v: usize, edges: &[(usize, usize)], present: &[bool]) -> Vec<Vec<bool>> {
    let mut adj = vec![vec![false; v]; v];
    for (e, &(i, j)) in edges.iter().enumerate() {
        if present[e] {
            adj[i][j] = true;
            adj[j][i] = true;
        }
    }
    adj
}

fn connected(v: usize, edges: &[(usize, usize)], present: &[bool]) -> bool {
    let mut parent: Vec<usize> = (0..v).collect();
    fn find(parent: &mut [usize], mut a: usize) -> usize {
        while parent[a] != a {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        a
    }
    for (e, &(i, j)) in edges.iter().enumerate() {
        if present[e] {
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            parent[ri] = rj;
        }
    }
    let root = find(&mut parent, 0);
    (1..v).all(|i| find(&mut parent, i) == root)
}

/// Applies a vertex permutation to an edge-variable point: edge `{i,j}`
/// moves to `{sigma(i), sigma(j)}`. Used to spot-check relabelling
/// invariance.
pub fn permute_graph_point(
    f: &TabulatedFunction,
    v: usize,
    sigma: &[usize],
    x: PointIndex,
) -> Result<PointIndex> {
    let edges = edge_list(v);
    let space = f.space();
    if edges.len() != space.n() || sigma.len() != v {
        return Err(Error::Invalid("permutation does not fit the space".into()));
    }
    let index_of = |a: usize, b: usize| {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        edges
            .iter()
            .position(|&(i, j)| (i, j) == (a, b))
            .expect("edge exists")
    };
    let mut digits = vec![0usize; space.n()];
    for (e, &(i, j)) in edges.iter().enumerate() {
        digits[index_of(sigma[i], sigma[j])] = space.digit(x, e);
    }
    space.encode(&digits)
}

/// Structural evaluation of the recursive AND-OR function
/// `f_k = (f^1 and f^2) or (f^3 and f^4)` on `4^k` bits (`true` = 1).
pub fn fk_eval(k: u32, bits: &[bool]) -> bool {
    debug_assert_eq!(bits.len(), 4usize.pow(k));
    if k == 0 {
        return bits[0];
    }
    let quarter = bits.len() / 4;
    let sub = |i: usize| fk_eval(k - 1, &bits[i * quarter..(i + 1) * quarter]);
    (sub(0) && sub(1)) || (sub(2) && sub(3))
}

/// Query count of evaluating `f_k` on `bits` with the classic randomized
/// strategy: at every gate, evaluate a uniformly random child first and
/// skip the sibling when the first child decides the gate.
pub fn random_child_cost(k: u32, bits: &[bool], rng: &mut impl Rng) -> u64 {
    fn and_gate<R: Rng>(k: u32, bits: &[bool], lo: usize, hi: usize, rng: &mut R) -> (bool, u64) {
        let quarter = bits.len() / 4;
        let (first, second) = if rng.gen_bool(0.5) { (lo, hi) } else { (hi, lo) };
        let (v1, c1) = go(k - 1, &bits[first * quarter..(first + 1) * quarter], rng);
        if !v1 {
            return (false, c1);
        }
        let (v2, c2) = go(k - 1, &bits[second * quarter..(second + 1) * quarter], rng);
        (v1 && v2, c1 + c2)
    }
    fn go<R: Rng>(k: u32, bits: &[bool], rng: &mut R) -> (bool, u64) {
        if k == 0 {
            return (bits[0], 1);
        }
        let (first, second) = if rng.gen_bool(0.5) {
            ((0, 1), (2, 3))
        } else {
            ((2, 3), (0, 1))
        };
        let (v1, c1) = and_gate(k, bits, first.0, first.1, rng);
        if v1 {
            return (true, c1);
        }
        let (v2, c2) = and_gate(k, bits, second.0, second.1, rng);
        (v1 || v2, c1 + c2)
    }
    debug_assert_eq!(bits.len(), 4usize.pow(k));
    go(k, bits, rng).1
}

/// Monte Carlo summary of the randomized evaluation cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostStats {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// Mean query count over `samples` uniform random inputs, with fresh
/// strategy randomness per sample. Deterministic for a fixed seed. `k` up
/// to 6 (4096 variables) is evaluated structurally, never tabulated.
pub fn random_child_mean_cost(k: u32, samples: u64, seed: u64) -> Result<CostStats> {
    if k > 6 {
        return Err(Error::Unsupported(
            "randomized cost sampling is limited to k <= 6".into(),
        ));
    }
    if samples == 0 {
        return Err(Error::Invalid("need at least one sample".into()));
    }
    let n = 4usize.pow(k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    let mut bits = vec![false; n];
    for _ in 0..samples {
        for b in bits.iter_mut() {
            *b = rng.gen_bool(0.5);
        }
        let cost = random_child_cost(k, &bits, &mut rng) as f64;
        sum += cost;
        sum_sq += cost * cost;
    }
    let mean = sum / samples as f64;
    let variance = (sum_sq / samples as f64 - mean * mean).max(0.0);
    let std_error = (variance / samples as f64).sqrt();
    Ok(CostStats {
        mean,
        std_error,
        samples,
    })
}
