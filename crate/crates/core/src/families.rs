//! Generators for three classical moving-graph families: the Dixon-1 motions
//! of `K_{m,n}`, the Dixon-2 motion of `K_{4,4}`, and the 8-vertex, 13-edge
//! graph `S2` that has a collision-free L-model without satisfying the
//! partition condition.
//!
//! Generators emit motion formulas as [`MotionExpr`](crate::MotionExpr) trees
//! built from text, so a generated graph saves to exactly the formulas below.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::expr::MotionExpr;
use crate::motion::{EdgeId, Graph, Interval, Motion, MovingGraph, VertexId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FamilyError {
    #[error("{0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, FamilyError> {
    Err(FamilyError::Invalid(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    fn prefix(self) -> &'static str {
        match self {
            Sign::Plus => "",
            Sign::Minus => "-",
        }
    }
}

impl FromStr for Sign {
    type Err = FamilyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "+" | "+1" | "1" => Ok(Sign::Plus),
            "-" | "-1" => Ok(Sign::Minus),
            other => invalid(format!("bad sign `{other}`, expected + or -")),
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// Dixon-1 parameters. `a[i-1]` and `sx[i-1]` belong to `p_i`, `b[j-1]` and
/// `sy[j-1]` to `q_j`; `p_0` and `q_0` have implicit radius offset 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Dixon1Params {
    pub m: usize,
    pub n: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub sx: Vec<Sign>,
    pub sy: Vec<Sign>,
}

impl Dixon1Params {
    /// `a_i = i`, `b_j = j`, all signs positive.
    pub fn uniform(m: usize, n: usize) -> Self {
        Dixon1Params {
            m,
            n,
            a: (1..m).map(|i| i as f64).collect(),
            b: (1..n).map(|j| j as f64).collect(),
            sx: vec![Sign::Plus; m.saturating_sub(1)],
            sy: vec![Sign::Plus; n.saturating_sub(1)],
        }
    }

    pub fn validate(&self) -> Result<(), FamilyError> {
        if self.m == 0 || self.n == 0 {
            return invalid("m and n must be positive");
        }
        check_offsets("a", &self.a, self.m)?;
        check_offsets("b", &self.b, self.n)?;
        if self.sx.len() != self.m - 1 {
            return invalid(format!(
                "sx needs {} signs, got {}",
                self.m - 1,
                self.sx.len()
            ));
        }
        if self.sy.len() != self.n - 1 {
            return invalid(format!(
                "sy needs {} signs, got {}",
                self.n - 1,
                self.sy.len()
            ));
        }
        Ok(())
    }

    pub fn p(&self, i: usize) -> VertexId {
        VertexId(i)
    }

    pub fn q(&self, j: usize) -> VertexId {
        VertexId(self.m + j)
    }

    /// The edge `q_j p_i`.
    pub fn edge(&self, j: usize, i: usize) -> EdgeId {
        EdgeId(j * self.m + i)
    }
}

fn check_offsets(name: &str, values: &[f64], count: usize) -> Result<(), FamilyError> {
    if values.len() != count - 1 {
        return invalid(format!(
            "{name} needs {} values, got {}",
            count - 1,
            values.len()
        ));
    }
    if values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return invalid(format!("{name} values must be positive"));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return invalid(format!("{name} values must be strictly increasing"));
    }
    Ok(())
}

/// `K_{m,n}` with `p_0 = (sin t, 0)`, `p_i = (±sqrt(a_i + sin²t), 0)`,
/// `q_0 = (0, cos t)`, `q_j = (0, ±sqrt(b_j + cos²t))`.
///
/// Vertices are `p0..p{m-1}` then `q0..q{n-1}`; edges run `(q0,p0), (q0,p1), …,
/// (q{n-1},p{m-1})`.
pub fn dixon1(p: &Dixon1Params) -> Result<MovingGraph, FamilyError> {
    p.validate()?;
    let mut labels = Vec::with_capacity(p.m + p.n);
    let mut motions = Vec::with_capacity(p.m + p.n);
    for i in 0..p.m {
        labels.push(format!("p{i}"));
        let x = if i == 0 {
            "sin(t)".to_string()
        } else {
            format!("{}sqrt({}+sin(t)^2)", p.sx[i - 1].prefix(), p.a[i - 1])
        };
        motions.push(motion(&x, "0"));
    }
    for j in 0..p.n {
        labels.push(format!("q{j}"));
        let y = if j == 0 {
            "cos(t)".to_string()
        } else {
            format!("{}sqrt({}+cos(t)^2)", p.sy[j - 1].prefix(), p.b[j - 1])
        };
        motions.push(motion("0", &y));
    }
    let edges: Vec<(String, String)> = (0..p.n)
        .flat_map(|j| (0..p.m).map(move |i| (format!("q{j}"), format!("p{i}"))))
        .collect();
    build(&labels, &edges, motions)
}

/// The collision pairs of a Dixon-1 graph, read off from the sign and index
/// rules rather than computed from the motion:
///
/// 1. `p_0` hits every edge at `q_0` except `p_0 q_0`;
/// 2. `p_i` (`i > 0`) hits `p_k q_0` for `k > i` with `p_k`, `p_i` on the same side of the y-axis;
/// 3. `q_0` hits every edge at `p_0` except `p_0 q_0`;
/// 4. `q_i` (`i > 0`) hits `q_k p_0` for `k > i` with `q_k`, `q_i` on the same side of the x-axis.
///
/// Rule 4 is sometimes stated with a product of `p` coordinates; those are all
/// zero on the y-axis, so only the `q` reading makes sense.
///
/// Pairs come back in canonical (vertex, edge) order, indexed as in [`dixon1`].
pub fn dixon1_rule_pairs(p: &Dixon1Params) -> Vec<(VertexId, EdgeId)> {
    let mut pairs = Vec::new();
    for i in 0..p.m {
        for j in 0..p.n {
            for k in 0..p.m {
                let hit = match (i, j) {
                    (0, 0) => k > 0,
                    (i, 0) if i > 0 => k > i && p.sx[i - 1] == p.sx[k - 1],
                    _ => false,
                };
                if hit {
                    pairs.push((p.p(i), p.edge(j, k)));
                }
            }
        }
    }
    for j in 0..p.n {
        for l in 0..p.n {
            for i in 0..p.m {
                let hit = i == 0
                    && match j {
                        0 => l > 0,
                        j => l > j && p.sy[j - 1] == p.sy[l - 1],
                    };
                if hit {
                    pairs.push((p.q(j), p.edge(l, i)));
                }
            }
        }
    }
    pairs.sort();
    pairs
}

/// Dixon-2 parameters. The fourth distance `c` is not free: the defining
/// equations force `c² = b² + d² - a²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dixon2Params {
    pub a: f64,
    pub b: f64,
    pub d: f64,
}

impl Dixon2Params {
    pub fn new(a: f64, b: f64, d: f64) -> Result<Self, FamilyError> {
        let p = Dixon2Params { a, b, d };
        p.validate()?;
        Ok(p)
    }

    pub fn c(&self) -> f64 {
        (self.b * self.b + self.d * self.d - self.a * self.a).sqrt()
    }

    pub fn validate(&self) -> Result<(), FamilyError> {
        let Dixon2Params { a, b, d } = *self;
        if ![a, b, d].iter().all(|v| v.is_finite() && *v > 0.0) {
            return invalid("a, b, d must be positive");
        }
        if b <= a {
            return invalid(format!("need b > a, got a = {a}, b = {b}"));
        }
        if d <= a {
            return invalid(format!("need d > a, got a = {a}, d = {d}"));
        }
        if self.c() <= d {
            return invalid(format!("need c > d, got c = {}, d = {d}", self.c()));
        }
        Ok(())
    }
}

/// `K_{4,4}` on vertices `1..8`, edges `(1,5), (1,6), …, (4,8)`.
pub fn dixon2(p: &Dixon2Params) -> Result<MovingGraph, FamilyError> {
    p.validate()?;
    let Dixon2Params { a, b, d } = *p;
    let root_b = format!("sqrt({b}^2-{a}^2*sin(t)^2)");
    let root_d = format!("sqrt({d}^2-{a}^2*cos(t)^2)");
    let x1 = format!("({}+{root_b})/2", scaled(a, "cos(t)"));
    let y1 = format!("({}+{root_d})/2", scaled(a, "sin(t)"));
    let x2 = format!("(-{}+{root_b})/2", scaled(a, "cos(t)"));
    let y2 = format!("(-{}+{root_d})/2", scaled(a, "sin(t)"));
    let neg = |s: &str| format!("-{s}");
    let motions = vec![
        motion(&x1, &y1),
        motion(&neg(&x1), &y1),
        motion(&neg(&x1), &neg(&y1)),
        motion(&x1, &neg(&y1)),
        motion(&x2, &y2),
        motion(&neg(&x2), &y2),
        motion(&neg(&x2), &neg(&y2)),
        motion(&x2, &neg(&y2)),
    ];
    let labels: Vec<String> = (1..=8).map(|i| i.to_string()).collect();
    let edges: Vec<(String, String)> = (1..=4)
        .flat_map(|i| (5..=8).map(move |j| (i.to_string(), j.to_string())))
        .collect();
    build(&labels, &edges, motions)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct S2Params {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for S2Params {
    fn default() -> Self {
        S2Params {
            a: 1.0,
            b: 11.0 / 5.0,
            c: 3.0 / 2.0,
        }
    }
}

impl S2Params {
    pub fn validate(&self) -> Result<(), FamilyError> {
        let S2Params { a, b, c } = *self;
        if ![a, b, c].iter().all(|v| v.is_finite() && *v > 0.0) {
            return invalid("a, b, c must be positive");
        }
        if b * b <= a * a {
            return invalid(format!("need b² > a², got a = {a}, b = {b}"));
        }
        if c * c <= a * a {
            return invalid(format!("need c² > a², got a = {a}, c = {c}"));
        }
        Ok(())
    }
}

pub const S2_EDGES: [(&str, &str); 13] = [
    ("v1", "v2"),
    ("v1", "v4"),
    ("v1", "v5"),
    ("v8", "v2"),
    ("v8", "v4"),
    ("v8", "v5"),
    ("v3", "v2"),
    ("v3", "v4"),
    ("v3", "v5"),
    ("v1", "v7"),
    ("v7", "v6"),
    ("v5", "v6"),
    ("v4", "v6"),
];

pub fn s2(p: &S2Params) -> Result<MovingGraph, FamilyError> {
    p.validate()?;
    let S2Params { a, b, c } = *p;
    let rb = format!("sqrt({b}^2-{a}^2*sin(t)^2)");
    let rc = format!("sqrt({c}^2-{a}^2*cos(t)^2)");
    let cos = scaled(a, "cos(t)");
    let sin = scaled(a, "sin(t)");
    let cos3 = scaled(3.0 * a, "cos(t)");
    let motions = vec![
        motion(&format!("-{cos}-{rb}"), &format!("-{sin}-{rc}")),
        motion(&format!("{cos}-{rb}"), &format!("-{sin}+{rc}")),
        motion(&format!("{cos}+{rb}"), &format!("{sin}+{rc}")),
        motion(&format!("-{cos}+{rb}"), &format!("-{sin}+{rc}")),
        motion(&format!("-{cos}+{rb}"), &format!("{sin}-{rc}")),
        motion(&format!("-{cos3}+{rb}"), &format!("-{sin}-{rc}")),
        motion(&format!("-{cos3}-{rb}"), &format!("-{sin}-3*{rc}")),
        motion(&format!("-{cos}-{rb}"), &format!("{sin}+{rc}")),
    ];
    let labels: Vec<String> = (1..=8).map(|i| format!("v{i}")).collect();
    let edges: Vec<(String, String)> = S2_EDGES
        .iter()
        .map(|(u, v)| (u.to_string(), v.to_string()))
        .collect();
    build(&labels, &edges, motions)
}

fn scaled(coef: f64, term: &str) -> String {
    if coef == 1.0 {
        term.to_string()
    } else {
        format!("{coef}*{term}")
    }
}

fn motion(x: &str, y: &str) -> Motion {
    Motion {
        x: MotionExpr::parse(x).expect("generated x formula parses"),
        y: MotionExpr::parse(y).expect("generated y formula parses"),
    }
}

fn build(
    labels: &[String],
    edges: &[(String, String)],
    motions: Vec<Motion>,
) -> Result<MovingGraph, FamilyError> {
    let graph = Graph::new(labels, edges).expect("generated topology is valid");
    Ok(MovingGraph::new(graph, motions, Interval::default()).expect("one motion per vertex"))
}
