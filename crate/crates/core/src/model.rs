//! Product probability spaces, output (semi)metric spaces, tabulated
//! functions, and the line-oriented function file format.
//!
//! A [`ProductSpace`] is a finite product `X_1 x ... x X_n` of labelled
//! value sets, each carrying a probability weight vector. Points are
//! addressed by a canonical mixed-radix [`PointIndex`]: coordinate 1 is the
//! most significant digit and coordinate n varies fastest, so for a 2-bit
//! space with values `(v0, v1)` per coordinate the order is
//! `(v0,v0), (v0,v1), (v1,v0), (v1,v1)`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::value::Value;

/// Default limit on the number of enumerable points.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 24;

/// Tolerance for "weights sum to 1" in float mode.
const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Canonical index of one point of a product set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PointIndex(pub u64);

impl PointIndex {
    pub fn as_usize(self) -> usize {
        self.0 as usize
    }
}

/// One coordinate domain: labelled values with probability weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordDomain {
    values: Vec<String>,
    weights: Vec<Value>,
}

impl CoordDomain {
    pub fn new(values: Vec<String>, weights: Vec<Value>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Invalid("coordinate needs at least one value".into()));
        }
        if values.len() != weights.len() {
            return Err(Error::Invalid(format!(
                "{} values but {} weights",
                values.len(),
                weights.len()
            )));
        }
        for (v, w) in values.iter().zip(&weights) {
            if w.is_negative() {
                return Err(Error::Invalid(format!("negative weight {w} for value {v}")));
            }
        }
        for (i, v) in values.iter().enumerate() {
            if values[..i].contains(v) {
                return Err(Error::Invalid(format!("duplicate value label {v:?}")));
            }
        }
        let sum: Value = weights.iter().sum();
        let ok = if sum.is_exact() {
            sum == Value::one()
        } else {
            (sum.to_f64() - 1.0).abs() <= WEIGHT_SUM_TOL
        };
        if !ok {
            return Err(Error::Invalid(format!("weights sum != 1 (got {sum})")));
        }
        Ok(CoordDomain { values, weights })
    }

    pub fn uniform(values: Vec<String>) -> Result<Self> {
        let k = values.len() as i64;
        let weights = vec![Value::ratio(1, k.max(1)); values.len()];
        CoordDomain::new(values, weights)
    }

    pub fn arity(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }

    pub fn weight(&self, a: usize) -> &Value {
        &self.weights[a]
    }

    pub fn weights(&self) -> &[Value] {
        &self.weights
    }

    pub fn value_index(&self, label: &str) -> Option<usize> {
        self.values.iter().position(|v| v == label)
    }

    pub fn is_exact(&self) -> bool {
        self.weights.iter().all(Value::is_exact)
    }
}

/// An n-wise product probability space over finite coordinate domains.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductSpace {
    coords: Vec<CoordDomain>,
    strides: Vec<u64>,
    point_count: u64,
    cap: u64,
}

impl ProductSpace {
    pub fn new(coords: Vec<CoordDomain>) -> Result<Self> {
        Self::with_cap(coords, DEFAULT_ENUMERATION_CAP)
    }

    pub fn with_cap(coords: Vec<CoordDomain>, cap: u64) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Invalid("space needs at least one coordinate".into()));
        }
        let mut count: u128 = 1;
        for c in &coords {
            count = count.saturating_mul(c.arity() as u128);
        }
        if count > cap as u128 {
            return Err(Error::CapExceeded { points: count, cap });
        }
        let mut strides = vec![1u64; coords.len()];
        for i in (0..coords.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * coords[i + 1].arity() as u64;
        }
        Ok(ProductSpace {
            coords,
            strides,
            point_count: count as u64,
            cap,
        })
    }

    /// The `p`-biased cube: `n` coordinates with values `-1, 1` weighted
    /// `1-p, p`.
    pub fn biased_cube(n: usize, p: &Value) -> Result<Arc<Self>> {
        if p.is_negative() || (Value::one() - p).is_negative() {
            return Err(Error::Invalid(format!("bias {p} outside [0, 1]")));
        }
        let coord = CoordDomain::new(
            vec!["-1".into(), "1".into()],
            vec![Value::one() - p, p.clone()],
        )?;
        Ok(Arc::new(ProductSpace::new(vec![coord; n])?))
    }

    pub fn uniform_cube(n: usize) -> Result<Arc<Self>> {
        Self::biased_cube(n, &Value::ratio(1, 2))
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn coord(&self, i: usize) -> &CoordDomain {
        &self.coords[i]
    }

    pub fn coords(&self) -> &[CoordDomain] {
        &self.coords
    }

    pub fn arity(&self, i: usize) -> usize {
        self.coords[i].arity()
    }

    pub fn point_count(&self) -> u64 {
        self.point_count
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    /// Coordinates with a single value; legal but degenerate.
    pub fn degenerate_coords(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.arity(i) < 2).collect()
    }

    pub fn is_exact(&self) -> bool {
        self.coords.iter().all(CoordDomain::is_exact)
    }

    /// True if every coordinate is the two-point domain `{-1, 1}`.
    pub fn is_binary_pm_cube(&self) -> bool {
        self.coords
            .iter()
            .all(|c| c.values() == ["-1".to_string(), "1".to_string()])
    }

    pub fn points(&self) -> impl Iterator<Item = PointIndex> {
        (0..self.point_count).map(PointIndex)
    }

    pub fn encode(&self, digits: &[usize]) -> Result<PointIndex> {
        if digits.len() != self.n() {
            return Err(Error::Invalid(format!(
                "expected {} digits, got {}",
                self.n(),
                digits.len()
            )));
        }
        let mut idx = 0u64;
        for (i, &d) in digits.iter().enumerate() {
            if d >= self.arity(i) {
                return Err(Error::OutOfRange {
                    what: "value index",
                    index: d as u64,
                });
            }
            idx += d as u64 * self.strides[i];
        }
        Ok(PointIndex(idx))
    }

    pub fn decode(&self, x: PointIndex) -> Result<Vec<usize>> {
        self.check_point(x)?;
        Ok((0..self.n()).map(|i| self.digit(x, i)).collect())
    }

    pub fn check_point(&self, x: PointIndex) -> Result<()> {
        if x.0 >= self.point_count {
            return Err(Error::OutOfRange {
                what: "point index",
                index: x.0,
            });
        }
        Ok(())
    }

    /// Value index of coordinate `i` at point `x` (no bounds check on `x`).
    pub fn digit(&self, x: PointIndex, i: usize) -> usize {
        ((x.0 / self.strides[i]) % self.arity(i) as u64) as usize
    }

    /// The point equal to `x` with coordinate `i` set to value index `a`.
    pub fn with_digit(&self, x: PointIndex, i: usize, a: usize) -> PointIndex {
        let old = self.digit(x, i) as u64;
        PointIndex(x.0 - old * self.strides[i] + a as u64 * self.strides[i])
    }

    /// Product measure of the single point `x`.
    pub fn point_probability(&self, x: PointIndex) -> Result<Value> {
        self.check_point(x)?;
        let mut p = Value::one();
        for i in 0..self.n() {
            p = p * self.coords[i].weight(self.digit(x, i));
        }
        Ok(p)
    }

    /// Human-readable tuple of value labels at `x`.
    pub fn point_labels(&self, x: PointIndex) -> Vec<&str> {
        (0..self.n())
            .map(|i| self.coords[i].values()[self.digit(x, i)].as_str())
            .collect()
    }
}

/// Whether a distance table was validated as a metric or only as a
/// semimetric (symmetric, nonnegative, zero diagonal).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    Metric,
    Semimetric,
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricKind::Metric => write!(f, "metric"),
            MetricKind::Semimetric => write!(f, "semimetric"),
        }
    }
}

/// A finite output set with a distance table.
///
/// Distances must be symmetric and nonnegative with a zero diagonal.
/// `kind = Metric` additionally requires the triangle inequality, checked
/// over every triple at construction. Zero distance between distinct labels
/// is allowed (pseudo-metrics).
#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpace {
    labels: Vec<String>,
    numeric: Option<Vec<Value>>,
    dist: Vec<Value>,
    kind: MetricKind,
    metric_name: String,
}

impl OutputSpace {
    pub fn new(labels: Vec<String>, dist_rows: Vec<Vec<Value>>, kind: MetricKind) -> Result<Self> {
        Self::with_name(labels, dist_rows, kind, "custom")
    }

    fn with_name(
        labels: Vec<String>,
        dist_rows: Vec<Vec<Value>>,
        kind: MetricKind,
        name: &str,
    ) -> Result<Self> {
        let k = labels.len();
        if k == 0 {
            return Err(Error::Invalid("output space needs at least one label".into()));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::Invalid(format!("duplicate output label {l:?}")));
            }
        }
        if dist_rows.len() != k || dist_rows.iter().any(|r| r.len() != k) {
            return Err(Error::Invalid(format!("distance table must be {k}x{k}")));
        }
        let mut dist = Vec::with_capacity(k * k);
        for row in &dist_rows {
            dist.extend(row.iter().cloned());
        }
        for i in 0..k {
            if !dist[i * k + i].is_zero() {
                return Err(Error::Invalid(format!(
                    "nonzero self-distance for label {:?}",
                    labels[i]
                )));
            }
            for j in 0..k {
                if dist[i * k + j].is_negative() {
                    return Err(Error::Invalid(format!(
                        "negative distance between {:?} and {:?}",
                        labels[i], labels[j]
                    )));
                }
                if dist[i * k + j] != dist[j * k + i] {
                    return Err(Error::Invalid(format!(
                        "asymmetric distance between {:?} and {:?}",
                        labels[i], labels[j]
                    )));
                }
            }
        }
        if kind == MetricKind::Metric {
            if let Some((i, j, l)) = triangle_violation(&dist, k) {
                return Err(Error::Invalid(format!(
                    "triangle inequality fails: d({a},{c}) > d({a},{b}) + d({b},{c})",
                    a = labels[i],
                    b = labels[j],
                    c = labels[l],
                )));
            }
        }
        let numeric = labels
            .iter()
            .map(|l| Value::parse(l).ok())
            .collect::<Option<Vec<_>>>();
        Ok(OutputSpace {
            labels,
            numeric,
            dist,
            kind,
            metric_name: name.to_string(),
        })
    }

    /// `d(z, z') = 1` for distinct labels.
    pub fn discrete(labels: Vec<String>) -> Result<Arc<Self>> {
        let k = labels.len();
        let rows = table(k, |i, j| {
            if i == j {
                Value::zero()
            } else {
                Value::one()
            }
        });
        Ok(Arc::new(Self::with_name(
            labels,
            rows,
            MetricKind::Metric,
            "discrete",
        )?))
    }

    /// `d(z, z') = 2` for distinct labels; on `{-1, 1}` this is `|z - z'|`,
    /// the convention under which variation equals variance.
    pub fn boolean(labels: Vec<String>) -> Result<Arc<Self>> {
        let k = labels.len();
        let rows = table(k, |i, j| {
            if i == j {
                Value::zero()
            } else {
                Value::from_int(2)
            }
        });
        Ok(Arc::new(Self::with_name(
            labels,
            rows,
            MetricKind::Metric,
            "boolean",
        )?))
    }

    /// `rho_1(z, z') = |z - z'|` on numeric labels.
    pub fn rho1(labels: Vec<String>) -> Result<Arc<Self>> {
        let nums = parse_numeric(&labels)?;
        let rows = table(labels.len(), |i, j| (&nums[i] - &nums[j]).abs());
        Ok(Arc::new(Self::with_name(
            labels,
            rows,
            MetricKind::Metric,
            "rho1",
        )?))
    }

    /// `rho_2(z, z') = (z - z')^2 / 2` on numeric labels. Constructed as a
    /// semimetric: the squared distance violates the triangle inequality on
    /// most label sets.
    pub fn rho2(labels: Vec<String>) -> Result<Arc<Self>> {
        let nums = parse_numeric(&labels)?;
        let rows = table(labels.len(), |i, j| {
            let d = &nums[i] - &nums[j];
            &d * &d * Value::ratio(1, 2)
        });
        Ok(Arc::new(Self::with_name(
            labels,
            rows,
            MetricKind::Semimetric,
            "rho2",
        )?))
    }

    /// Builds one of the named distance tables over the given labels.
    pub fn builtin(name: &str, labels: Vec<String>) -> Result<Arc<Self>> {
        match name {
            "discrete" => Self::discrete(labels),
            "boolean" => Self::boolean(labels),
            "rho1" => Self::rho1(labels),
            "rho2" => Self::rho2(labels),
            _ => Err(Error::Invalid(format!("unknown builtin metric {name:?}"))),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, z: usize) -> &str {
        &self.labels[z]
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn dist(&self, z1: usize, z2: usize) -> &Value {
        &self.dist[z1 * self.labels.len() + z2]
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    /// Name of the distance: one of the built-ins or "custom".
    pub fn metric_name(&self) -> &str {
        &self.metric_name
    }

    /// Numeric interpretations of the labels, if every label parses.
    pub fn numeric(&self) -> Option<&[Value]> {
        self.numeric.as_deref()
    }

    pub fn is_exact(&self) -> bool {
        self.dist.iter().all(Value::is_exact)
    }

    /// First triple violating the triangle inequality, if any.
    pub fn triangle_violation(&self) -> Option<(usize, usize, usize)> {
        triangle_violation(&self.dist, self.labels.len())
    }
}

fn table(k: usize, f: impl Fn(usize, usize) -> Value) -> Vec<Vec<Value>> {
    (0..k).map(|i| (0..k).map(|j| f(i, j)).collect()).collect()
}

fn parse_numeric(labels: &[String]) -> Result<Vec<Value>> {
    labels
        .iter()
        .map(|l| {
            Value::parse(l).map_err(|_| {
                Error::Invalid(format!("label {l:?} is not numeric"))
            })
        })
        .collect()
}

fn triangle_violation(dist: &[Value], k: usize) -> Option<(usize, usize, usize)> {
    for i in 0..k {
        for j in 0..k {
            for l in 0..k {
                if dist[i * k + l] > &dist[i * k + j] + &dist[j * k + l] {
                    return Some((i, j, l));
                }
            }
        }
    }
    None
}

/// A function given by its full table of outputs, one per point.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedFunction {
    space: Arc<ProductSpace>,
    outputs: Arc<OutputSpace>,
    table: Vec<u32>,
}

impl TabulatedFunction {
    pub fn new(
        space: Arc<ProductSpace>,
        outputs: Arc<OutputSpace>,
        table: Vec<u32>,
    ) -> Result<Self> {
        if table.len() as u64 != space.point_count() {
            return Err(Error::Invalid(format!(
                "table has {} entries but the space has {} points",
                table.len(),
                space.point_count()
            )));
        }
        if let Some(&bad) = table.iter().find(|&&z| z as usize >= outputs.len()) {
            return Err(Error::OutOfRange {
                what: "output index",
                index: bad as u64,
            });
        }
        Ok(TabulatedFunction {
            space,
            outputs,
            table,
        })
    }

    pub fn from_labels(
        space: Arc<ProductSpace>,
        outputs: Arc<OutputSpace>,
        labels: &[&str],
    ) -> Result<Self> {
        let table = labels
            .iter()
            .map(|l| {
                outputs
                    .label_index(l)
                    .map(|z| z as u32)
                    .ok_or_else(|| Error::Invalid(format!("unknown output label {l:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(space, outputs, table)
    }

    /// Tabulates `f(point) = eval(point)` over the whole space.
    pub fn tabulate(
        space: Arc<ProductSpace>,
        outputs: Arc<OutputSpace>,
        mut eval: impl FnMut(PointIndex) -> u32,
    ) -> Result<Self> {
        let table = space.points().map(&mut eval).collect();
        Self::new(space, outputs, table)
    }

    pub fn space(&self) -> &Arc<ProductSpace> {
        &self.space
    }

    pub fn outputs(&self) -> &Arc<OutputSpace> {
        &self.outputs
    }

    pub fn table(&self) -> &[u32] {
        &self.table
    }

    /// Output index at `x`.
    pub fn value(&self, x: PointIndex) -> u32 {
        self.table[x.as_usize()]
    }

    pub fn label(&self, x: PointIndex) -> &str {
        self.outputs.label(self.value(x) as usize)
    }

    /// Numeric output at `x`; errors if the output labels are not numbers.
    pub fn numeric_value(&self, x: PointIndex) -> Result<&Value> {
        let nums = self
            .outputs
            .numeric()
            .ok_or_else(|| Error::Unsupported("output labels are not numeric".into()))?;
        Ok(&nums[self.value(x) as usize])
    }

    pub fn is_constant(&self) -> bool {
        self.table.windows(2).all(|w| w[0] == w[1])
    }

    pub fn is_exact(&self) -> bool {
        self.space.is_exact() && self.outputs.is_exact()
    }

    /// Reinterprets the function under a different distance on the same
    /// labels, remapping the table if the new space orders them differently.
    pub fn with_outputs(&self, outputs: Arc<OutputSpace>) -> Result<Self> {
        let remap = self
            .outputs
            .labels()
            .iter()
            .map(|l| {
                outputs
                    .label_index(l)
                    .map(|z| z as u32)
                    .ok_or_else(|| Error::SpaceMismatch(format!("label {l:?} missing")))
            })
            .collect::<Result<Vec<_>>>()?;
        let table = self.table.iter().map(|&z| remap[z as usize]).collect();
        Self::new(self.space.clone(), outputs, table)
    }

    /// The same table over a new space with identical shape (used to move a
    /// function to a different bias).
    pub fn with_space(&self, space: Arc<ProductSpace>) -> Result<Self> {
        if space.point_count() != self.space.point_count()
            || space.n() != self.space.n()
            || (0..space.n()).any(|i| space.arity(i) != self.space.arity(i))
        {
            return Err(Error::SpaceMismatch(
                "new space has a different shape".into(),
            ));
        }
        Self::new(space, self.outputs.clone(), self.table.clone())
    }
}

const RESERVED: &[&str] = &[
    "metric",
    "semimetric",
    "discrete",
    "boolean",
    "rho1",
    "rho2",
    "dist",
];

/// Parses the line-oriented function file format:
///
/// ```text
/// space <n>
/// coord <i> values <v1> <v2> ... weights <w1> <w2> ...
/// outputs <z1> <z2> ... <metric|semimetric> dist <row-major table>
/// values <one output label per point, canonical order>
/// ```
///
/// The `outputs` line may name a built-in (`discrete`, `boolean`, `rho1`,
/// `rho2`) in place of an explicit table. Weights and distances accept
/// `a/b` fractions or decimals; `#` starts a comment. The `values` table
/// may continue onto following lines.
pub fn parse_function(text: &str) -> Result<TabulatedFunction> {
    parse_function_with_cap(text, DEFAULT_ENUMERATION_CAP)
}

pub fn parse_function_with_cap(text: &str, cap: u64) -> Result<TabulatedFunction> {
    let mut n: Option<usize> = None;
    let mut coords: Vec<Option<CoordDomain>> = Vec::new();
    let mut outputs: Option<Arc<OutputSpace>> = None;
    let mut value_tokens: Vec<String> = Vec::new();
    let mut values_line = 0usize;
    let mut in_values = false;

    let fail = |line: usize, message: String| Error::Parse { line, message };

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if in_values {
            // The values table continues to the end of the file.
            value_tokens.extend(tokens.iter().map(|t| t.to_string()));
            continue;
        }
        match tokens[0] {
            "space" => {
                if tokens.len() != 2 {
                    return Err(fail(line, "expected: space <n>".into()));
                }
                let k: usize = tokens[1]
                    .parse()
                    .map_err(|_| fail(line, format!("bad coordinate count {:?}", tokens[1])))?;
                if k == 0 {
                    return Err(fail(line, "space must have at least 1 coordinate".into()));
                }
                n = Some(k);
                coords = vec![None; k];
            }
            "coord" => {
                let k = n.ok_or_else(|| fail(line, "coord before space header".into()))?;
                let idx: usize = tokens
                    .get(1)
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| fail(line, "expected: coord <i> values ... weights ...".into()))?;
                if idx == 0 || idx > k {
                    return Err(fail(line, format!("coordinate {idx} outside 1..={k}")));
                }
                if coords[idx - 1].is_some() {
                    return Err(fail(line, format!("coordinate {idx} declared twice")));
                }
                let vpos = tokens.iter().position(|&t| t == "values");
                let wpos = tokens.iter().position(|&t| t == "weights");
                let (vpos, wpos) = match (vpos, wpos) {
                    (Some(v), Some(w)) if v < w => (v, w),
                    _ => return Err(fail(line, "expected: coord <i> values ... weights ...".into())),
                };
                let values: Vec<String> =
                    tokens[vpos + 1..wpos].iter().map(|t| t.to_string()).collect();
                let weights = tokens[wpos + 1..]
                    .iter()
                    .map(|t| Value::parse(t))
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| fail(line, e.to_string()))?;
                if values.len() != weights.len() {
                    return Err(fail(
                        line,
                        format!("{} values but {} weights", values.len(), weights.len()),
                    ));
                }
                let dom = CoordDomain::new(values, weights).map_err(|e| fail(line, e.to_string()))?;
                coords[idx - 1] = Some(dom);
            }
            "outputs" => {
                if outputs.is_some() {
                    return Err(fail(line, "outputs declared twice".into()));
                }
                let rest = &tokens[1..];
                let stop = rest
                    .iter()
                    .position(|t| RESERVED.contains(t))
                    .ok_or_else(|| {
                        fail(
                            line,
                            "outputs line needs a metric kind or builtin name after the labels"
                                .into(),
                        )
                    })?;
                if stop == 0 {
                    return Err(fail(line, "outputs line has no labels".into()));
                }
                let labels: Vec<String> = rest[..stop].iter().map(|t| t.to_string()).collect();
                let spec = rest[stop];
                let os = match spec {
                    "discrete" | "boolean" | "rho1" | "rho2" => {
                        if rest.len() > stop + 1 {
                            return Err(fail(
                                line,
                                format!("unexpected tokens after builtin {spec:?}"),
                            ));
                        }
                        OutputSpace::builtin(spec, labels).map_err(|e| fail(line, e.to_string()))?
                    }
                    "metric" | "semimetric" => {
                        let kind = if spec == "metric" {
                            MetricKind::Metric
                        } else {
                            MetricKind::Semimetric
                        };
                        if rest.get(stop + 1) != Some(&"dist") {
                            return Err(fail(line, "expected dist after metric kind".into()));
                        }
                        let k = labels.len();
                        let nums = rest[stop + 2..]
                            .iter()
                            .map(|t| Value::parse(t))
                            .collect::<Result<Vec<_>>>()
                            .map_err(|e| fail(line, e.to_string()))?;
                        if nums.len() != k * k {
                            return Err(fail(
                                line,
                                format!("expected {} distances, got {}", k * k, nums.len()),
                            ));
                        }
                        let rows = nums.chunks(k).map(|c| c.to_vec()).collect();
                        Arc::new(
                            OutputSpace::new(labels, rows, kind)
                                .map_err(|e| fail(line, e.to_string()))?,
                        )
                    }
                    _ => unreachable!(),
                };
                outputs = Some(os);
            }
            "values" => {
                values_line = line;
                in_values = true;
                value_tokens.extend(tokens[1..].iter().map(|t| t.to_string()));
            }
            other => {
                return Err(fail(line, format!("unknown directive {other:?}")));
            }
        }
    }

    let n = n.ok_or_else(|| fail(0, "missing space header".into()))?;
    let coords = coords
        .into_iter()
        .enumerate()
        .map(|(i, c)| c.ok_or_else(|| fail(0, format!("coordinate {} never declared", i + 1))))
        .collect::<Result<Vec<_>>>()?;
    debug_assert_eq!(coords.len(), n);
    let outputs = outputs.ok_or_else(|| fail(0, "missing outputs line".into()))?;
    if !in_values {
        return Err(fail(0, "missing values line".into()));
    }
    let space = Arc::new(ProductSpace::with_cap(coords, cap)?);
    if value_tokens.len() as u64 != space.point_count() {
        return Err(fail(
            values_line,
            format!(
                "expected {} output values, got {}",
                space.point_count(),
                value_tokens.len()
            ),
        ));
    }
    let refs: Vec<&str> = value_tokens.iter().map(|s| s.as_str()).collect();
    TabulatedFunction::from_labels(space, outputs, &refs).map_err(|e| match e {
        Error::Invalid(m) => fail(values_line, m),
        other => other,
    })
}

impl FromStr for TabulatedFunction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_function(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor2_file() -> &'static str {
        "space 2\n\
         coord 1 values -1 1 weights 1/2 1/2\n\
         coord 2 values -1 1 weights 1/2 1/2\n\
         outputs -1 1 boolean\n\
         values -1 1 1 -1\n"
    }

    #[test]
    fn parse_xor2_round_trip() {
        let f = parse_function(xor2_file()).unwrap();
        assert_eq!(f.space().n(), 2);
        assert_eq!(f.space().point_count(), 4);
        let labels: Vec<&str> = f.space().points().map(|x| f.label(x)).collect();
        assert_eq!(labels, vec!["-1", "1", "1", "-1"]);
        assert!(f.is_exact());
    }

    #[test]
    fn figure1_fixture_from_file() {
        let text = "# three uniform coordinates, real outputs under rho2\n\
             space 3\n\
             coord 1 values -1 1 weights 1/2 1/2\n\
             coord 2 values -1 1 weights 1/2 1/2\n\
             coord 3 values -1 1 weights 1/2 1/2\n\
             outputs -1 0 2 rho2\n\
             values 0 2 -1 -1 -1 2 -1 0\n";
        let f = parse_function(text).unwrap();
        // E[f] = 0 over the uniform measure.
        let mean: Value = f
            .space()
            .points()
            .map(|x| {
                f.space().point_probability(x).unwrap() * f.numeric_value(x).unwrap().clone()
            })
            .sum();
        assert!(mean.is_zero());
        assert_eq!(f.outputs().kind(), MetricKind::Semimetric);
    }

    #[test]
    fn bad_weight_sum_reports_line() {
        let text = "space 1\ncoord 1 values a b weights 0.3 0.6\noutputs a b discrete\nvalues a b\n";
        match parse_function(text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("sum != 1"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_output_label_reports_line() {
        let text = "space 1\ncoord 1 values -1 1 weights 1/2 1/2\noutputs -1 1 boolean\nvalues -1 2\n";
        match parse_function(text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 4);
                assert!(message.contains("unknown output label"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_value_count_reports_line() {
        let text = "space 2\ncoord 1 values -1 1 weights 1/2 1/2\ncoord 2 values -1 1 weights 1/2 1/2\noutputs -1 1 boolean\nvalues -1 1 1\n";
        match parse_function(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn point_encoding_order() {
        // For n = 2 binary coordinates the canonical order is
        // (v0,v0), (v0,v1), (v1,v0), (v1,v1).
        let space = ProductSpace::uniform_cube(2).unwrap();
        assert_eq!(space.encode(&[0, 0]).unwrap(), PointIndex(0));
        assert_eq!(space.encode(&[0, 1]).unwrap(), PointIndex(1));
        assert_eq!(space.encode(&[1, 0]).unwrap(), PointIndex(2));
        assert_eq!(space.encode(&[1, 1]).unwrap(), PointIndex(3));
        for x in space.points() {
            let digits = space.decode(x).unwrap();
            assert_eq!(space.encode(&digits).unwrap(), x);
        }
    }

    #[test]
    fn biased_cube_probabilities() {
        let space = ProductSpace::biased_cube(3, &Value::ratio(1, 2)).unwrap();
        for x in space.points() {
            assert_eq!(space.point_probability(x).unwrap(), Value::ratio(1, 8));
        }
        let space = ProductSpace::biased_cube(2, &Value::ratio(1, 3)).unwrap();
        let pp = space.encode(&[1, 1]).unwrap();
        assert_eq!(space.point_probability(pp).unwrap(), Value::ratio(1, 9));
        let total: Value = space
            .points()
            .map(|x| space.point_probability(x).unwrap())
            .sum();
        assert_eq!(total, Value::one());
    }

    #[test]
    fn rho2_rejects_metric_kind() {
        let labels: Vec<String> = vec!["0".into(), "1".into(), "2".into()];
        // rho2 distances on {0,1,2}: d(0,2) = 2 > d(0,1) + d(1,2) = 1.
        let nums: Vec<Value> = labels.iter().map(|l| Value::parse(l).unwrap()).collect();
        let rows = table(3, |i, j| {
            let d = &nums[i] - &nums[j];
            &d * &d * Value::ratio(1, 2)
        });
        assert!(OutputSpace::new(labels.clone(), rows.clone(), MetricKind::Metric).is_err());
        let semi = OutputSpace::new(labels.clone(), rows, MetricKind::Semimetric).unwrap();
        assert_eq!(semi.kind(), MetricKind::Semimetric);
        let builtin = OutputSpace::rho2(labels).unwrap();
        assert_eq!(builtin.dist(0, 2), &Value::from_int(2));
        assert!(builtin.triangle_violation().is_some());
    }

    #[test]
    fn output_space_rejects_bad_tables() {
        let labels: Vec<String> = vec!["a".into(), "b".into()];
        let asym = vec![
            vec![Value::zero(), Value::one()],
            vec![Value::from_int(2), Value::zero()],
        ];
        assert!(OutputSpace::new(labels.clone(), asym, MetricKind::Semimetric).is_err());
        let neg = vec![
            vec![Value::zero(), Value::from_int(-1)],
            vec![Value::from_int(-1), Value::zero()],
        ];
        assert!(OutputSpace::new(labels.clone(), neg, MetricKind::Semimetric).is_err());
        // Zero distance between distinct labels is a legal pseudo-metric.
        let pseudo = vec![
            vec![Value::zero(), Value::zero()],
            vec![Value::zero(), Value::zero()],
        ];
        assert!(OutputSpace::new(labels, pseudo, MetricKind::Metric).is_ok());
    }

    #[test]
    fn degenerate_coordinate_is_flagged() {
        let c1 = CoordDomain::new(vec!["only".into()], vec![Value::one()]).unwrap();
        let c2 = CoordDomain::uniform(vec!["-1".into(), "1".into()]).unwrap();
        let space = ProductSpace::new(vec![c1, c2]).unwrap();
        assert_eq!(space.degenerate_coords(), vec![0]);
    }

    #[test]
    fn cap_is_enforced() {
        let c = CoordDomain::uniform(vec!["-1".into(), "1".into()]).unwrap();
        assert!(matches!(
            ProductSpace::with_cap(vec![c; 5], 16),
            Err(Error::CapExceeded { .. })
        ));
    }
}
