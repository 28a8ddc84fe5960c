//! Deterministic and randomized decision trees over a product space.
//!
//! A tree queries one coordinate per internal node, with one child per
//! value of that coordinate, and never repeats a coordinate on a
//! root-leaf path. Leaves carry output labels. The cost measures live
//! here: the per-coordinate query probabilities `delta_i` (probability
//! over a random input that coordinate i is read), their sum (the
//! expected number of queries), and the worst-case depth.
//!
//! Trees are immutable after construction; a [`DecisionTree`] always
//! validates its structure against its space and output space.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{OutputSpace, PointIndex, ProductSpace, TabulatedFunction};
use crate::value::Value;

/// Tree structure: either a leaf holding an output index or a query node
/// with one child per value of the queried coordinate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Leaf(u32),
    Query { coord: usize, children: Vec<Node> },
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf(_))
    }
}

/// A validated deterministic decision tree.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    space: Arc<ProductSpace>,
    outputs: Arc<OutputSpace>,
    root: Node,
}

/// Result of running a tree on one input: the leaf's output index and the
/// coordinates read, in query order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluation {
    pub output: u32,
    pub queried: Vec<usize>,
}

impl Evaluation {
    pub fn cost(&self) -> usize {
        self.queried.len()
    }
}

/// Witness that a tree is not separated: two subtrees (addressed by their
/// child-index paths from the root) computing different values on `point`
/// while both reading some shared coordinate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparationWitness {
    pub subtree_a: Vec<usize>,
    pub subtree_b: Vec<usize>,
    pub point: PointIndex,
    pub shared_coord: usize,
}

impl DecisionTree {
    pub fn new(space: Arc<ProductSpace>, outputs: Arc<OutputSpace>, root: Node) -> Result<Self> {
        let mut on_path = vec![false; space.n()];
        validate_node(&root, &space, &outputs, &mut on_path)?;
        Ok(DecisionTree {
            space,
            outputs,
            root,
        })
    }

    /// A single leaf.
    pub fn leaf(
        space: Arc<ProductSpace>,
        outputs: Arc<OutputSpace>,
        label: &str,
    ) -> Result<Self> {
        let z = outputs
            .label_index(label)
            .ok_or_else(|| Error::Invalid(format!("unknown output label {label:?}")))?;
        Self::new(space, outputs, Node::Leaf(z as u32))
    }

    pub fn space(&self) -> &Arc<ProductSpace> {
        &self.space
    }

    pub fn outputs(&self) -> &Arc<OutputSpace> {
        &self.outputs
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Follows the root-leaf path dictated by `x`.
    pub fn evaluate(&self, x: PointIndex) -> Evaluation {
        self.eval_node(&self.root, x)
    }

    /// True iff the tree agrees with `f` on every point.
    pub fn computes(&self, f: &TabulatedFunction) -> Result<bool> {
        if **f.space() != *self.space {
            return Err(Error::SpaceMismatch(
                "tree and function live on different spaces".into(),
            ));
        }
        if **f.outputs() != *self.outputs {
            return Err(Error::SpaceMismatch(
                "tree and function use different output spaces".into(),
            ));
        }
        Ok(self
            .space
            .points()
            .all(|x| self.evaluate(x).output == f.value(x)))
    }

    /// Tabulates the function this tree computes.
    pub fn tabulate(&self) -> TabulatedFunction {
        TabulatedFunction::tabulate(self.space.clone(), self.outputs.clone(), |x| {
            self.evaluate(x).output
        })
        .expect("a validated tree always tabulates")
    }

    /// Per-coordinate query probabilities, by summing root-leaf path
    /// probabilities (product of edge weights) over the paths that read
    /// each coordinate. Exact in rational mode.
    pub fn delta(&self) -> Vec<Value> {
        let mut acc = vec![Value::zero(); self.space.n()];
        let mut path = Vec::new();
        self.delta_walk(&self.root, Value::one(), &mut path, &mut acc);
        acc
    }

    fn delta_walk(&self, node: &Node, prob: Value, path: &mut Vec<usize>, acc: &mut [Value]) {
        match node {
            Node::Leaf(_) => {
                for &i in path.iter() {
                    acc[i] = &acc[i] + &prob;
                }
            }
            Node::Query { coord, children } => {
                path.push(*coord);
                for (a, child) in children.iter().enumerate() {
                    let w = self.space.coord(*coord).weight(a);
                    self.delta_walk(child, &prob * w, path, acc);
                }
                path.pop();
            }
        }
    }

    /// Expected number of coordinates read on a random input; the sum of
    /// the delta vector.
    pub fn expected_cost(&self) -> Value {
        self.delta().iter().sum()
    }

    /// Length of the longest root-leaf path.
    pub fn depth(&self) -> usize {
        depth_of(&self.root)
    }

    pub fn leaf_count(&self) -> u64 {
        leaves_of(&self.root)
    }

    /// True iff no coordinate labels two distinct query nodes anywhere.
    pub fn is_read_once(&self) -> bool {
        let mut seen = vec![0u32; self.space.n()];
        count_queries(&self.root, &mut seen);
        seen.iter().all(|&c| c <= 1)
    }

    /// True iff for every two subtrees and every input on which they
    /// compute different values, the variable sets they read on that input
    /// are disjoint. Every node roots a subtree, viewed as a tree on the
    /// full space; the scan includes a subtree paired with itself and with
    /// its ancestors.
    pub fn is_separated(&self) -> bool {
        self.separation_witness().is_none()
    }

    /// First violation of the separated condition found, if any.
    pub fn separation_witness(&self) -> Option<SeparationWitness> {
        let mut subtrees = Vec::new();
        collect_subtrees(&self.root, &mut Vec::new(), &mut subtrees);
        for x in self.space.points() {
            let evals: Vec<Evaluation> = subtrees
                .iter()
                .map(|(_, node)| self.eval_node(node, x))
                .collect();
            for a in 0..subtrees.len() {
                for b in (a + 1)..subtrees.len() {
                    if evals[a].output == evals[b].output {
                        continue;
                    }
                    if let Some(&shared) = evals[a]
                        .queried
                        .iter()
                        .find(|i| evals[b].queried.contains(i))
                    {
                        return Some(SeparationWitness {
                            subtree_a: subtrees[a].0.clone(),
                            subtree_b: subtrees[b].0.clone(),
                            point: x,
                            shared_coord: shared,
                        });
                    }
                }
            }
        }
        None
    }

    fn eval_node(&self, mut node: &Node, x: PointIndex) -> Evaluation {
        let mut queried = Vec::new();
        loop {
            match node {
                Node::Leaf(z) => {
                    return Evaluation {
                        output: *z,
                        queried,
                    }
                }
                Node::Query { coord, children } => {
                    queried.push(*coord);
                    node = &children[self.space.digit(x, *coord)];
                }
            }
        }
    }

    /// Renders the tree in the file grammar, with 1-based coordinates.
    pub fn to_grammar(&self) -> String {
        let mut out = String::new();
        write_node(&self.root, self, &mut out);
        out
    }
}

impl fmt::Display for DecisionTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_grammar())
    }
}

fn validate_node(
    node: &Node,
    space: &ProductSpace,
    outputs: &OutputSpace,
    on_path: &mut [bool],
) -> Result<()> {
    match node {
        Node::Leaf(z) => {
            if *z as usize >= outputs.len() {
                return Err(Error::OutOfRange {
                    what: "leaf output index",
                    index: *z as u64,
                });
            }
            Ok(())
        }
        Node::Query { coord, children } => {
            if *coord >= space.n() {
                return Err(Error::OutOfRange {
                    what: "queried coordinate",
                    index: *coord as u64,
                });
            }
            if on_path[*coord] {
                return Err(Error::Invalid(format!(
                    "coordinate {} repeats on a root-leaf path",
                    coord + 1
                )));
            }
            if children.len() != space.arity(*coord) {
                return Err(Error::Invalid(format!(
                    "query on coordinate {} has {} children, expected {}",
                    coord + 1,
                    children.len(),
                    space.arity(*coord)
                )));
            }
            on_path[*coord] = true;
            for child in children {
                validate_node(child, space, outputs, on_path)?;
            }
            on_path[*coord] = false;
            Ok(())
        }
    }
}

fn depth_of(node: &Node) -> usize {
    match node {
        Node::Leaf(_) => 0,
        Node::Query { children, .. } => 1 + children.iter().map(depth_of).max().unwrap_or(0),
    }
}

fn leaves_of(node: &Node) -> u64 {
    match node {
        Node::Leaf(_) => 1,
        Node::Query { children, .. } => children.iter().map(leaves_of).sum(),
    }
}

fn count_queries(node: &Node, seen: &mut [u32]) {
    if let Node::Query { coord, children } = node {
        seen[*coord] += 1;
        for c in children {
            count_queries(c, seen);
        }
    }
}

fn collect_subtrees<'a>(
    node: &'a Node,
    path: &mut Vec<usize>,
    out: &mut Vec<(Vec<usize>, &'a Node)>,
) {
    out.push((path.clone(), node));
    if let Node::Query { children, .. } = node {
        for (a, child) in children.iter().enumerate() {
            path.push(a);
            collect_subtrees(child, path, out);
            path.pop();
        }
    }
}

fn write_node(node: &Node, tree: &DecisionTree, out: &mut String) {
    match node {
        Node::Leaf(z) => {
            out.push_str("(leaf ");
            out.push_str(tree.outputs.label(*z as usize));
            out.push(')');
        }
        Node::Query { coord, children } => {
            out.push_str(&format!("(q {}", coord + 1));
            for (a, child) in children.iter().enumerate() {
                out.push_str(&format!(" ({} ", tree.space.coord(*coord).values()[a]));
                write_node(child, tree, out);
                out.push(')');
            }
            out.push(')');
        }
    }
}

/// Replaces each query node of `outer` by the factor tree for that
/// coordinate, grafting outer subtrees onto the factor's leaves. Factor
/// `j`'s output labels must be exactly the value labels of `outer`'s
/// coordinate `j`; factor input spaces become consecutive coordinate
/// blocks of the returned tree's space.
pub fn compose_disjoint(
    outer: &DecisionTree,
    factors: &[(DecisionTree, TabulatedFunction)],
) -> Result<DecisionTree> {
    if factors.len() != outer.space.n() {
        return Err(Error::SpaceMismatch(format!(
            "outer space has {} coordinates but {} factors were given",
            outer.space.n(),
            factors.len()
        )));
    }
    for (j, (t, f)) in factors.iter().enumerate() {
        if !t.computes(f)? {
            return Err(Error::Invalid(format!(
                "factor {} tree does not compute its function",
                j + 1
            )));
        }
        if f.outputs().labels() != outer.space.coord(j).values() {
            return Err(Error::SpaceMismatch(format!(
                "factor {} output labels do not match outer coordinate {} values",
                j + 1,
                j + 1
            )));
        }
    }
    // Concatenate factor coordinate blocks.
    let mut coords = Vec::new();
    let mut offsets = Vec::with_capacity(factors.len());
    for (t, _) in factors {
        offsets.push(coords.len());
        coords.extend(t.space().coords().iter().cloned());
    }
    let cap = outer.space.cap();
    let space = Arc::new(ProductSpace::with_cap(coords, cap)?);

    fn graft(
        node: &Node,
        factors: &[(DecisionTree, TabulatedFunction)],
        offsets: &[usize],
    ) -> Node {
        match node {
            Node::Leaf(z) => Node::Leaf(*z),
            Node::Query { coord, children } => {
                let j = *coord;
                let continuations: Vec<Node> = children
                    .iter()
                    .map(|c| graft(c, factors, offsets))
                    .collect();
                splice(factors[j].0.root(), offsets[j], &continuations)
            }
        }
    }

    // Shift a factor tree's coordinates and replace its leaves by the
    // continuation for the value the leaf outputs.
    fn splice(node: &Node, offset: usize, continuations: &[Node]) -> Node {
        match node {
            Node::Leaf(z) => continuations[*z as usize].clone(),
            Node::Query { coord, children } => Node::Query {
                coord: coord + offset,
                children: children
                    .iter()
                    .map(|c| splice(c, offset, continuations))
                    .collect(),
            },
        }
    }

    let root = graft(outer.root(), factors, &offsets);
    DecisionTree::new(space, outer.outputs.clone(), root)
}

/// A probability distribution over decision trees.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomizedTree {
    branches: Vec<(Value, DecisionTree)>,
}

impl RandomizedTree {
    pub fn new(branches: Vec<(Value, DecisionTree)>) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::Invalid(
                "randomized tree needs at least one branch".into(),
            ));
        }
        for (p, _) in &branches {
            if p.is_negative() {
                return Err(Error::Invalid(format!("negative branch probability {p}")));
            }
        }
        let total: Value = branches.iter().map(|(p, _)| p).sum();
        let ok = if total.is_exact() {
            total == Value::one()
        } else {
            (total.to_f64() - 1.0).abs() <= 1e-12
        };
        if !ok {
            return Err(Error::Invalid(format!(
                "branch probabilities sum to {total}, not 1"
            )));
        }
        let first = &branches[0].1;
        for (_, t) in &branches[1..] {
            if t.space() != first.space() || t.outputs() != first.outputs() {
                return Err(Error::SpaceMismatch(
                    "randomized tree branches disagree on space or outputs".into(),
                ));
            }
        }
        Ok(RandomizedTree { branches })
    }

    /// The one-branch distribution concentrated on `tree`.
    pub fn single(tree: DecisionTree) -> Self {
        RandomizedTree {
            branches: vec![(Value::one(), tree)],
        }
    }

    pub fn branches(&self) -> &[(Value, DecisionTree)] {
        &self.branches
    }

    pub fn space(&self) -> &Arc<ProductSpace> {
        self.branches[0].1.space()
    }

    pub fn outputs(&self) -> &Arc<OutputSpace> {
        self.branches[0].1.outputs()
    }

    /// True iff every branch computes `f`.
    pub fn computes(&self, f: &TabulatedFunction) -> Result<bool> {
        for (_, t) in &self.branches {
            if !t.computes(f)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Probability-weighted average of the per-branch delta vectors.
    pub fn delta(&self) -> Vec<Value> {
        let n = self.space().n();
        let mut acc = vec![Value::zero(); n];
        for (p, t) in &self.branches {
            for (i, d) in t.delta().into_iter().enumerate() {
                acc[i] = &acc[i] + &(p * &d);
            }
        }
        acc
    }

    pub fn expected_cost(&self) -> Value {
        self.delta().iter().sum()
    }

    /// Length of the longest path in any branch.
    pub fn max_depth(&self) -> usize {
        self.branches
            .iter()
            .map(|(_, t)| t.depth())
            .max()
            .unwrap_or(0)
    }
}

/// Parses the tree grammar
/// `tree := "(" "leaf" label ")" | "(" "q" coord branch+ ")"`,
/// `branch := "(" value tree ")"`, with 1-based coordinates.
pub fn parse_tree(
    text: &str,
    space: Arc<ProductSpace>,
    outputs: Arc<OutputSpace>,
) -> Result<DecisionTree> {
    let tokens = tokenize(text);
    let mut pos = 0usize;
    let root = parse_node(&tokens, &mut pos, &space, &outputs)?;
    if pos != tokens.len() {
        return Err(Error::Parse {
            line: tokens.get(pos).map(|t| t.line).unwrap_or(0),
            message: "trailing tokens after tree".into(),
        });
    }
    DecisionTree::new(space, outputs, root)
}

struct Token {
    text: String,
    line: usize,
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        let spaced = content.replace('(', " ( ").replace(')', " ) ");
        for t in spaced.split_whitespace() {
            tokens.push(Token {
                text: t.to_string(),
                line: lineno + 1,
            });
        }
    }
    tokens
}

fn expect<'a>(tokens: &'a [Token], pos: &mut usize, what: &str) -> Result<&'a Token> {
    let t = tokens.get(*pos).ok_or_else(|| Error::Parse {
        line: tokens.last().map(|t| t.line).unwrap_or(0),
        message: format!("unexpected end of input, wanted {what}"),
    })?;
    *pos += 1;
    Ok(t)
}

fn parse_node(
    tokens: &[Token],
    pos: &mut usize,
    space: &ProductSpace,
    outputs: &OutputSpace,
) -> Result<Node> {
    let open = expect(tokens, pos, "'('")?;
    if open.text != "(" {
        return Err(Error::Parse {
            line: open.line,
            message: format!("expected '(', found {:?}", open.text),
        });
    }
    let head = expect(tokens, pos, "'leaf' or 'q'")?;
    match head.text.as_str() {
        "leaf" => {
            let label = expect(tokens, pos, "output label")?;
            let z = outputs
                .label_index(&label.text)
                .ok_or_else(|| Error::Parse {
                    line: label.line,
                    message: format!("unknown output label {:?}", label.text),
                })?;
            let close = expect(tokens, pos, "')'")?;
            if close.text != ")" {
                return Err(Error::Parse {
                    line: close.line,
                    message: format!("expected ')', found {:?}", close.text),
                });
            }
            Ok(Node::Leaf(z as u32))
        }
        "q" => {
            let c = expect(tokens, pos, "coordinate index")?;
            let line = c.line;
            let coord1: usize = c.text.parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad coordinate index {:?}", c.text),
            })?;
            if coord1 == 0 || coord1 > space.n() {
                return Err(Error::Parse {
                    line,
                    message: format!("coordinate {coord1} outside 1..={}", space.n()),
                });
            }
            let coord = coord1 - 1;
            let arity = space.arity(coord);
            let mut children: Vec<Option<Node>> = vec![None; arity];
            loop {
                let t = expect(tokens, pos, "branch or ')'")?;
                if t.text == ")" {
                    break;
                }
                if t.text != "(" {
                    return Err(Error::Parse {
                        line: t.line,
                        message: format!("expected '(' or ')', found {:?}", t.text),
                    });
                }
                let v = expect(tokens, pos, "value label")?;
                let vline = v.line;
                let a = space
                    .coord(coord)
                    .value_index(&v.text)
                    .ok_or_else(|| Error::Parse {
                        line: vline,
                        message: format!(
                            "value {:?} is not in the domain of coordinate {coord1}",
                            v.text
                        ),
                    })?;
                if children[a].is_some() {
                    return Err(Error::Parse {
                        line: vline,
                        message: format!("duplicate branch for value {:?}", v.text),
                    });
                }
                children[a] = Some(parse_node(tokens, pos, space, outputs)?);
                let close = expect(tokens, pos, "')'")?;
                if close.text != ")" {
                    return Err(Error::Parse {
                        line: close.line,
                        message: format!("expected ')' closing branch, found {:?}", close.text),
                    });
                }
            }
            let children = children
                .into_iter()
                .enumerate()
                .map(|(a, c)| {
                    c.ok_or_else(|| Error::Parse {
                        line,
                        message: format!(
                            "missing branch for value {:?} of coordinate {coord1}",
                            space.coord(coord).values()[a]
                        ),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Node::Query { coord, children })
        }
        other => Err(Error::Parse {
            line: head.line,
            message: format!("expected 'leaf' or 'q', found {other:?}"),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_function;

    pub(crate) const FIGURE1_TREE: &str = "(q 1 (-1 (q 2 (-1 (q 3 (-1 (leaf 0)) (1 (leaf 2)))) (1 (leaf -1)))) (1 (q 3 (-1 (leaf -1)) (1 (q 2 (-1 (leaf 2)) (1 (leaf 0)))))))";

    fn figure1() -> (TabulatedFunction, DecisionTree) {
        let text = "space 3\n\
             coord 1 values -1 1 weights 1/2 1/2\n\
             coord 2 values -1 1 weights 1/2 1/2\n\
             coord 3 values -1 1 weights 1/2 1/2\n\
             outputs -1 0 2 rho2\n\
             values 0 2 -1 -1 -1 2 -1 0\n";
        let f = parse_function(text).unwrap();
        let t = parse_tree(FIGURE1_TREE, f.space().clone(), f.outputs().clone()).unwrap();
        (f, t)
    }

    fn and2() -> (TabulatedFunction, DecisionTree) {
        let text = "space 2\n\
             coord 1 values -1 1 weights 1/2 1/2\n\
             coord 2 values -1 1 weights 1/2 1/2\n\
             outputs -1 1 boolean\n\
             values -1 -1 -1 1\n";
        let f = parse_function(text).unwrap();
        let t = parse_tree(
            "(q 1 (-1 (leaf -1)) (1 (q 2 (-1 (leaf -1)) (1 (leaf 1)))))",
            f.space().clone(),
            f.outputs().clone(),
        )
        .unwrap();
        (f, t)
    }

    fn maj3() -> (TabulatedFunction, DecisionTree) {
        let text = "space 3\n\
             coord 1 values -1 1 weights 1/2 1/2\n\
             coord 2 values -1 1 weights 1/2 1/2\n\
             coord 3 values -1 1 weights 1/2 1/2\n\
             outputs -1 1 boolean\n\
             values -1 -1 -1 1 -1 1 1 1\n";
        let f = parse_function(text).unwrap();
        // Query x1 and x2; query x3 only if they disagree.
        let t = parse_tree(
            "(q 1 (-1 (q 2 (-1 (leaf -1)) (1 (q 3 (-1 (leaf -1)) (1 (leaf 1)))))) \
                  (1 (q 2 (-1 (q 3 (-1 (leaf -1)) (1 (leaf 1)))) (1 (leaf 1)))))",
            f.space().clone(),
            f.outputs().clone(),
        )
        .unwrap();
        (f, t)
    }

    #[test]
    fn evaluate_figure1_paths() {
        let (f, t) = figure1();
        let s = f.space();
        // x = (-1,-1,1) reads all three coordinates and lands on leaf 2.
        let x = s.encode(&[0, 0, 1]).unwrap();
        let ev = t.evaluate(x);
        assert_eq!(f.outputs().label(ev.output as usize), "2");
        assert_eq!(ev.queried, vec![0, 1, 2]);
        // x = (-1,1,*) stops after two queries on leaf -1.
        for third in 0..2 {
            let x = s.encode(&[0, 1, third]).unwrap();
            let ev = t.evaluate(x);
            assert_eq!(f.outputs().label(ev.output as usize), "-1");
            assert_eq!(ev.queried, vec![0, 1]);
        }
    }

    #[test]
    fn leaf_evaluates_without_queries() {
        let (f, _) = and2();
        let t = DecisionTree::leaf(f.space().clone(), f.outputs().clone(), "1").unwrap();
        let ev = t.evaluate(PointIndex(0));
        assert_eq!(ev.queried, Vec::<usize>::new());
        assert_eq!(t.depth(), 0);
        assert_eq!(t.expected_cost(), Value::zero());
    }

    #[test]
    fn computes_checks_the_whole_table() {
        let (f, t) = figure1();
        assert!(t.computes(&f).unwrap());
        let (g, gt) = and2();
        assert!(gt.computes(&g).unwrap());
        let leaf = DecisionTree::leaf(g.space().clone(), g.outputs().clone(), "1").unwrap();
        assert!(!leaf.computes(&g).unwrap());
        assert!(leaf.computes(&f).is_err());
    }

    #[test]
    fn tabulate_round_trip() {
        let (_, t) = figure1();
        let f2 = t.tabulate();
        assert!(t.computes(&f2).unwrap());
    }

    #[test]
    fn delta_figure1_fixture_values() {
        let (_, t) = figure1();
        let d = t.delta();
        assert_eq!(
            d,
            vec![Value::one(), Value::ratio(3, 4), Value::ratio(3, 4)]
        );
        assert_eq!(t.expected_cost(), Value::ratio(5, 2));
        assert_eq!(t.depth(), 3);
    }

    #[test]
    fn delta_maj3() {
        let (f, t) = maj3();
        assert!(t.computes(&f).unwrap());
        let d = t.delta();
        // Root coordinate always read; x2 always read; x3 read iff x1 != x2.
        assert_eq!(d, vec![Value::one(), Value::one(), Value::ratio(1, 2)]);
        assert_eq!(t.expected_cost(), Value::ratio(5, 2));
    }

    #[test]
    fn read_once_and_separated() {
        let (_, and_tree) = and2();
        assert!(and_tree.is_read_once());
        assert!(and_tree.is_separated());
        assert_eq!(and_tree.depth(), 2);

        let (_, fig) = figure1();
        assert!(!fig.is_read_once()); // x2 and x3 each queried twice

        let (_, maj) = maj3();
        assert!(!maj.is_separated());
        let w = maj.separation_witness().unwrap();
        assert!(!w.subtree_a.is_empty() || !w.subtree_b.is_empty());
    }

    #[test]
    fn compose_or_of_ands_is_tribes() {
        let (and_f, and_t) = and2();
        let or_text = "space 2\n\
             coord 1 values -1 1 weights 1/2 1/2\n\
             coord 2 values -1 1 weights 1/2 1/2\n\
             outputs -1 1 boolean\n\
             values -1 1 1 1\n";
        let or_f = parse_function(or_text).unwrap();
        let or_t = parse_tree(
            "(q 1 (-1 (q 2 (-1 (leaf -1)) (1 (leaf 1)))) (1 (leaf 1)))",
            or_f.space().clone(),
            or_f.outputs().clone(),
        )
        .unwrap();
        let composed = compose_disjoint(
            &or_t,
            &[(and_t.clone(), and_f.clone()), (and_t, and_f)],
        )
        .unwrap();
        assert_eq!(composed.space().n(), 4);
        // Tribes truth table: f = 1 iff x1 = x2 = 1 or x3 = x4 = 1.
        let tab = composed.tabulate();
        for x in tab.space().points() {
            let d = tab.space().decode(x).unwrap();
            let expect = (d[0] == 1 && d[1] == 1) || (d[2] == 1 && d[3] == 1);
            assert_eq!(tab.label(x) == "1", expect);
        }
        assert!(composed.is_separated());
        assert!(!composed.is_read_once());
    }

    #[test]
    fn single_query_outer_composes_to_factor() {
        let (g, gt) = and2();
        let id_text =
            "space 1\ncoord 1 values -1 1 weights 1/2 1/2\noutputs -1 1 boolean\nvalues -1 1\n";
        let id_f = parse_function(id_text).unwrap();
        let id_t = parse_tree(
            "(q 1 (-1 (leaf -1)) (1 (leaf 1)))",
            id_f.space().clone(),
            id_f.outputs().clone(),
        )
        .unwrap();
        let composed = compose_disjoint(&id_t, &[(gt.clone(), g.clone())]).unwrap();
        assert_eq!(composed.tabulate().table(), g.table());
    }

    #[test]
    fn randomized_tree_averages_delta() {
        let (f, _) = and2();
        let t1 = parse_tree(
            "(q 1 (-1 (leaf -1)) (1 (q 2 (-1 (leaf -1)) (1 (leaf 1)))))",
            f.space().clone(),
            f.outputs().clone(),
        )
        .unwrap();
        let t2 = parse_tree(
            "(q 2 (-1 (leaf -1)) (1 (q 1 (-1 (leaf -1)) (1 (leaf 1)))))",
            f.space().clone(),
            f.outputs().clone(),
        )
        .unwrap();
        assert_eq!(t1.delta(), vec![Value::one(), Value::ratio(1, 2)]);
        let rt = RandomizedTree::new(vec![
            (Value::ratio(1, 2), t1.clone()),
            (Value::ratio(1, 2), t2),
        ])
        .unwrap();
        assert!(rt.computes(&f).unwrap());
        assert_eq!(rt.delta(), vec![Value::ratio(3, 4), Value::ratio(3, 4)]);

        let single = RandomizedTree::single(t1.clone());
        assert_eq!(single.delta(), t1.delta());
    }

    #[test]
    fn grammar_round_trip() {
        let (f, t) = figure1();
        let text = t.to_grammar();
        let back = parse_tree(&text, f.space().clone(), f.outputs().clone()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn parser_rejects_malformed_trees() {
        let (f, _) = and2();
        let sp = f.space().clone();
        let os = f.outputs().clone();
        // Repeated coordinate on a path.
        assert!(parse_tree(
            "(q 1 (-1 (q 1 (-1 (leaf -1)) (1 (leaf 1)))) (1 (leaf 1)))",
            sp.clone(),
            os.clone()
        )
        .is_err());
        // Missing branch.
        assert!(parse_tree("(q 1 (-1 (leaf -1)))", sp.clone(), os.clone()).is_err());
        // Unknown leaf label.
        assert!(parse_tree("(leaf 7)", sp.clone(), os.clone()).is_err());
        // Unknown value label.
        assert!(parse_tree("(q 1 (0 (leaf -1)) (1 (leaf 1)))", sp, os).is_err());
    }
}
