//! Vector norms, their induced matrix norms, and matrix measures
//! (logarithmic norms).
//!
//! Three families are supported: weighted L1/L2/L∞ norms, quadratic norms
//! `|x|_P = sqrt(xᵀPx)`, and structured norms built by applying an outer
//! norm to the vector of block norms of a partitioned state.
//!
//! The structured measure is reported as the hierarchical bound
//! `μ_outer(Ã)`, where `Ã` has the inner-norm *measures* of the diagonal
//! blocks on its diagonal and the induced cross-block norms off the diagonal.
//! Using measures (rather than norms) on the diagonal is what makes
//! `μ_G(A) ≤ μ_outer(Ã)` hold; the outer norm must be monotone, so it is
//! restricted to the weighted Lp family.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matcore::{lambda_max, max_singular, norm2, spd_inv_sqrt, spd_sqrt, Mat, SYMMETRY_TOL};
use crate::transact;

/// Supported Lp exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Lp {
    One,
    Two,
    Inf,
}

impl Lp {
    pub fn exponent(self) -> f64 {
        match self {
            Lp::One => 1.0,
            Lp::Two => 2.0,
            Lp::Inf => f64::INFINITY,
        }
    }

    pub fn from_exponent(p: f64) -> Result<Self> {
        if p == 1.0 {
            Ok(Lp::One)
        } else if p == 2.0 {
            Ok(Lp::Two)
        } else if p == f64::INFINITY {
            Ok(Lp::Inf)
        } else {
            Err(Error::UnsupportedNorm(format!("p = {p} (only 1, 2 and inf are supported)")))
        }
    }
}

/// Quadratic norm `sqrt(xᵀPx)` with cached `P^{1/2}` and `P^{-1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    p: Mat,
    root: Mat,
    inv_root: Mat,
}

impl QuadraticForm {
    pub fn new(p: &Mat) -> Result<Self> {
        if !p.is_square() || !p.is_symmetric(SYMMETRY_TOL) {
            return invalid("quadratic norm matrix must be square and symmetric");
        }
        let p = p.symmetrized();
        let root = spd_sqrt(&p)?;
        let inv_root = spd_inv_sqrt(&p)?;
        Ok(Self { p, root, inv_root })
    }

    /// Norm `|Θx|_2`, canonicalized to `P = ΘᵀΘ`.
    pub fn from_factor(theta: &Mat) -> Result<Self> {
        if !theta.is_square() {
            return invalid("norm factor must be square");
        }
        Self::new(&(&theta.transpose() * theta).symmetrized())
    }

    pub fn matrix(&self) -> &Mat {
        &self.p
    }

    pub fn root(&self) -> &Mat {
        &self.root
    }

    pub fn inv_root(&self) -> &Mat {
        &self.inv_root
    }

    fn is_diagonal(&self) -> bool {
        let n = self.p.rows();
        (0..n).all(|i| (0..n).all(|j| i == j || self.p[(i, j)] == 0.0))
    }
}

/// Structured norm: outer norm of the block-norm vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Structured {
    partition: Vec<usize>,
    inner: Vec<NormSpec>,
    outer: Box<NormSpec>,
}

impl Structured {
    pub fn partition(&self) -> &[usize] {
        &self.partition
    }

    pub fn inner(&self) -> &[NormSpec] {
        &self.inner
    }

    pub fn outer(&self) -> &NormSpec {
        &self.outer
    }

    /// Start index of each block.
    pub fn offsets(&self) -> Vec<usize> {
        self.partition
            .iter()
            .scan(0, |acc, &n| {
                let start = *acc;
                *acc += n;
                Some(start)
            })
            .collect()
    }

    fn block_norms(&self, x: &[f64]) -> Vec<f64> {
        self.offsets()
            .iter()
            .zip(&self.partition)
            .zip(&self.inner)
            .map(|((&o, &n), spec)| spec.eval_unchecked(&x[o..o + n]))
            .collect()
    }
}

/// Description of a vector norm on R^n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NormSpecRepr", into = "NormSpecRepr")]
pub enum NormSpec {
    WeightedLp { p: Lp, weights: Vec<f64> },
    Quadratic(QuadraticForm),
    Structured(Structured),
}

impl NormSpec {
    pub fn weighted(p: Lp, weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return invalid("weight vector must be non-empty");
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return invalid("weights must be finite and strictly positive");
        }
        Ok(NormSpec::WeightedLp { p, weights })
    }

    /// Unweighted Lp norm on R^n.
    pub fn lp(p: Lp, n: usize) -> Self {
        assert!(n > 0);
        NormSpec::WeightedLp { p, weights: vec![1.0; n] }
    }

    pub fn euclidean(n: usize) -> Self {
        Self::lp(Lp::Two, n)
    }

    pub fn quadratic(p: &Mat) -> Result<Self> {
        Ok(NormSpec::Quadratic(QuadraticForm::new(p)?))
    }

    pub fn quadratic_factor(theta: &Mat) -> Result<Self> {
        Ok(NormSpec::Quadratic(QuadraticForm::from_factor(theta)?))
    }

    pub fn structured(partition: Vec<usize>, inner: Vec<NormSpec>, outer: NormSpec) -> Result<Self> {
        if partition.is_empty() || partition.contains(&0) {
            return invalid("structured partition sizes must be positive");
        }
        if inner.len() != partition.len() {
            return invalid(format!(
                "structured norm has {} blocks but {} inner norms",
                partition.len(),
                inner.len()
            ));
        }
        for (k, (spec, &n)) in inner.iter().zip(&partition).enumerate() {
            if matches!(spec, NormSpec::Structured(_)) {
                return invalid("structured norms cannot be nested");
            }
            if spec.dim() != n {
                return invalid(format!("inner norm {k} has dimension {} but block size {n}", spec.dim()));
            }
        }
        match &outer {
            NormSpec::WeightedLp { weights, .. } if weights.len() == partition.len() => {}
            NormSpec::WeightedLp { .. } => return invalid("outer norm dimension must equal the block count"),
            _ => {
                return Err(Error::UnsupportedNorm(
                    "outer norm of a structured norm must be a (monotone) weighted Lp norm".into(),
                ))
            }
        }
        Ok(NormSpec::Structured(Structured { partition, inner, outer: Box::new(outer) }))
    }

    pub fn dim(&self) -> usize {
        match self {
            NormSpec::WeightedLp { weights, .. } => weights.len(),
            NormSpec::Quadratic(q) => q.p.rows(),
            NormSpec::Structured(s) => s.partition.iter().sum(),
        }
    }

    /// Short human-readable tag, e.g. `lp1[3]` or `quadratic[2]`.
    pub fn label(&self) -> String {
        match self {
            NormSpec::WeightedLp { p, weights } => {
                let p = match p {
                    Lp::One => "1",
                    Lp::Two => "2",
                    Lp::Inf => "inf",
                };
                format!("lp{p}[{}]", weights.len())
            }
            NormSpec::Quadratic(q) => format!("quadratic[{}]", q.p.rows()),
            NormSpec::Structured(s) => format!("structured[{}]", s.partition.len()),
        }
    }

    /// True for norms whose unit ball is an ellipsoid (weighted L2 or quadratic).
    pub fn is_quadratic(&self) -> bool {
        matches!(self, NormSpec::Quadratic(_) | NormSpec::WeightedLp { p: Lp::Two, .. })
    }

    pub(crate) fn shape(&self) -> Option<Shape> {
        match self {
            NormSpec::WeightedLp { p: Lp::One, weights } => Some(Shape::L1(weights.clone())),
            NormSpec::WeightedLp { p: Lp::Inf, weights } => Some(Shape::LInf(weights.clone())),
            NormSpec::WeightedLp { p: Lp::Two, weights } => Some(Shape::Quad(QuadraticForm {
                p: Mat::diag(weights),
                root: Mat::diag(&weights.iter().map(|w| w.sqrt()).collect::<Vec<_>>()),
                inv_root: Mat::diag(&weights.iter().map(|w| 1.0 / w.sqrt()).collect::<Vec<_>>()),
            })),
            NormSpec::Quadratic(q) => Some(Shape::Quad(q.clone())),
            NormSpec::Structured(_) => None,
        }
    }

    fn eval_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            NormSpec::WeightedLp { p: Lp::One, weights } => {
                weights.iter().zip(x).map(|(w, v)| w * v.abs()).sum()
            }
            NormSpec::WeightedLp { p: Lp::Two, weights } => {
                weights.iter().zip(x).map(|(w, v)| w * v * v).sum::<f64>().sqrt()
            }
            NormSpec::WeightedLp { p: Lp::Inf, weights } => {
                weights.iter().zip(x).fold(0.0, |m, (w, v)| m.max(w * v.abs()))
            }
            NormSpec::Quadratic(q) => norm2(&q.root.matvec(x)),
            NormSpec::Structured(s) => s.outer.eval_unchecked(&s.block_norms(x)),
        }
    }
}

/// Flattened view of a non-structured norm used by the closed forms.
#[derive(Debug, Clone)]
pub(crate) enum Shape {
    L1(Vec<f64>),
    LInf(Vec<f64>),
    Quad(QuadraticForm),
}

impl Shape {
    pub(crate) fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Shape::L1(w) => w.iter().zip(x).map(|(w, v)| w * v.abs()).sum(),
            Shape::LInf(w) => w.iter().zip(x).fold(0.0, |m, (w, v)| m.max(w * v.abs())),
            Shape::Quad(q) => norm2(&q.root.matvec(x)),
        }
    }

    /// Dual norm: sup of bᵀx over the unit ball.
    pub(crate) fn dual(&self, b: &[f64]) -> f64 {
        match self {
            Shape::L1(w) => w.iter().zip(b).fold(0.0, |m, (w, v)| m.max(v.abs() / w)),
            Shape::LInf(w) => w.iter().zip(b).map(|(w, v)| v.abs() / w).sum(),
            Shape::Quad(q) => norm2(&q.inv_root.matvec(b)),
        }
    }

    /// Diagonal of P when the quadratic form is diagonal.
    pub(crate) fn diagonal_quadratic(&self) -> Option<Vec<f64>> {
        match self {
            Shape::Quad(q) if q.is_diagonal() => Some((0..q.p.rows()).map(|i| q.p[(i, i)]).collect()),
            _ => None,
        }
    }

    fn induced(&self, a: &Mat) -> f64 {
        let n = a.rows();
        match self {
            Shape::L1(w) => (0..n)
                .map(|j| (0..n).map(|i| w[i] * a[(i, j)].abs()).sum::<f64>() / w[j])
                .fold(0.0, f64::max),
            Shape::LInf(w) => (0..n)
                .map(|i| w[i] * (0..n).map(|j| a[(i, j)].abs() / w[j]).sum::<f64>())
                .fold(0.0, f64::max),
            Shape::Quad(q) => max_singular(&(&(&q.root * a) * &q.inv_root)),
        }
    }

    fn measure(&self, a: &Mat) -> f64 {
        let n = a.rows();
        match self {
            Shape::L1(w) => (0..n)
                .map(|j| {
                    a[(j, j)]
                        + (0..n).filter(|&i| i != j).map(|i| w[i] / w[j] * a[(i, j)].abs()).sum::<f64>()
                })
                .fold(f64::NEG_INFINITY, f64::max),
            Shape::LInf(w) => (0..n)
                .map(|i| {
                    a[(i, i)]
                        + (0..n).filter(|&j| j != i).map(|j| w[i] / w[j] * a[(i, j)].abs()).sum::<f64>()
                })
                .fold(f64::NEG_INFINITY, f64::max),
            Shape::Quad(q) => {
                let pa = &q.p * a;
                let s = &pa + &pa.transpose();
                let m = &(&q.inv_root * &s) * &q.inv_root;
                0.5 * lambda_max(&m.symmetrized()).expect("symmetric by construction")
            }
        }
    }
}

fn check_vec(spec: &NormSpec, x: &[f64]) -> Result<()> {
    if x.len() != spec.dim() {
        return invalid(format!("vector of length {} for a norm on R^{}", x.len(), spec.dim()));
    }
    Ok(())
}

fn check_square(spec: &NormSpec, a: &Mat) -> Result<()> {
    if !a.is_square() || a.rows() != spec.dim() {
        return invalid(format!(
            "expected a {n}x{n} matrix, got {}x{}",
            a.rows(),
            a.cols(),
            n = spec.dim()
        ));
    }
    Ok(())
}

pub fn norm_eval(spec: &NormSpec, x: &[f64]) -> Result<f64> {
    check_vec(spec, x)?;
    Ok(spec.eval_unchecked(x))
}

/// Induced matrix norm of a square matrix.
///
/// Exact for the weighted Lp and quadratic families. For structured norms this
/// is the outer norm of the matrix of block norms, which is an upper bound.
pub fn induced_matrix_norm(spec: &NormSpec, a: &Mat) -> Result<f64> {
    check_square(spec, a)?;
    match spec.shape() {
        Some(shape) => Ok(shape.induced(a)),
        None => {
            let NormSpec::Structured(s) = spec else { unreachable!() };
            let k = s.partition.len();
            let offsets = s.offsets();
            let mut reduced = Mat::zeros(k, k);
            for i in 0..k {
                for j in 0..k {
                    let blk = a.block(offsets[i], offsets[j], s.partition[i], s.partition[j]);
                    reduced[(i, j)] = cross_block_norm(&s.inner[j], &s.inner[i], &blk)?.value;
                }
            }
            induced_matrix_norm(&s.outer, &reduced)
        }
    }
}

/// How a measure value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureMethod {
    ClosedForm,
    LimitOracle,
    HierarchicalBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureResult {
    pub value: f64,
    pub method: MeasureMethod,
}

/// Matrix measure `μ(A) = lim_{h→0+} (‖I + hA‖ − 1)/h` in closed form.
pub fn matrix_measure(spec: &NormSpec, a: &Mat) -> Result<MeasureResult> {
    check_square(spec, a)?;
    match spec.shape() {
        Some(shape) => Ok(MeasureResult { value: shape.measure(a), method: MeasureMethod::ClosedForm }),
        None => {
            let NormSpec::Structured(s) = spec else { unreachable!() };
            let reduced = structured_reduced(a, spec)?;
            let value = matrix_measure(&s.outer, &reduced)?.value;
            Ok(MeasureResult { value, method: MeasureMethod::HierarchicalBound })
        }
    }
}

/// Finite-difference evaluation of the measure definition, with one
/// Richardson step over `h` and `h/2`. Intended as an independent check of
/// [`matrix_measure`].
///
/// For structured norms the induced norm has no closed form, so the quotient
/// is maximised over sampled directions instead; the result is then a lower
/// estimate of the true measure.
pub fn measure_limit_oracle(spec: &NormSpec, a: &Mat, h: f64) -> Result<f64> {
    check_square(spec, a)?;
    if !(1e-8..=1e-3).contains(&h) {
        return invalid(format!("oracle step h = {h} outside [1e-8, 1e-3]"));
    }
    let n = a.rows();
    let quotient = |h: f64| -> f64 {
        let shifted = &Mat::identity(n) + &a.scale(h);
        (induced_matrix_norm(spec, &shifted).expect("validated") - 1.0) / h
    };
    match spec {
        NormSpec::Structured(_) => Ok(directional_oracle(spec, a, h)),
        _ => Ok(2.0 * quotient(0.5 * h) - quotient(h)),
    }
}

fn directional_oracle(spec: &NormSpec, a: &Mat, h: f64) -> f64 {
    let n = a.rows();
    let rate = |x: &[f64]| -> f64 {
        let nx = spec.eval_unchecked(x);
        if nx == 0.0 {
            return f64::NEG_INFINITY;
        }
        let ax = a.matvec(x);
        let q = |h: f64| {
            let y: Vec<f64> = x.iter().zip(&ax).map(|(xi, ai)| xi + h * ai).collect();
            (spec.eval_unchecked(&y) - nx) / (h * nx)
        };
        2.0 * q(0.5 * h) - q(h)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d75_6f72);
    let mut candidates: Vec<(f64, Vec<f64>)> = (0..2000)
        .map(|_| {
            let x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            (rate(&x), x)
        })
        .collect();
    // Sparse directions catch maximizers on faces of polyhedral balls.
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        candidates.push((rate(&e), e));
    }
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0));
    candidates.truncate(8);

    let mut best = f64::NEG_INFINITY;
    for (mut val, mut x) in candidates {
        let mut step = 0.3;
        for _ in 0..400 {
            let trial: Vec<f64> = x
                .iter()
                .map(|v| v + step * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
                .collect();
            let r = rate(&trial);
            if r > val {
                val = r;
                x = trial;
            } else {
                step *= 0.98;
            }
        }
        best = best.max(val);
    }
    best
}

/// Measure induced by the time-varying quadratic norm `|x|_{P(t)}`:
/// `½ λ_max(P^{-1/2}(PA + AᵀP + Ṗ)P^{-1/2})`.
pub fn tv_quadratic_measure(p: &Mat, p_dot: &Mat, a: &Mat) -> Result<f64> {
    let n = p.rows();
    if !p.is_square() || p_dot.rows() != n || p_dot.cols() != n || a.rows() != n || a.cols() != n {
        return invalid("tv_quadratic_measure dimension mismatch");
    }
    if !p.is_symmetric(SYMMETRY_TOL) || !p_dot.is_symmetric(SYMMETRY_TOL) {
        return invalid("P and dP/dt must be symmetric");
    }
    let r = spd_inv_sqrt(&p.symmetrized())?;
    let pa = p * a;
    let inner = &(&pa + &pa.transpose()) + &p_dot.symmetrized();
    Ok(0.5 * lambda_max(&(&(&r * &inner) * &r).symmetrized())?)
}

/// Induced norm of a block between two (possibly different) norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBound {
    pub value: f64,
    /// False when the value is a chained upper bound rather than the exact sup.
    pub exact: bool,
}

/// `sup_{|x|_from = 1} |Bx|_to` for a rectangular `B`.
///
/// Exact when the source is weighted-L1, the target is weighted-L∞, or both
/// are quadratic. Other combinations are bounded by chaining through the
/// Euclidean norm on each side.
pub fn cross_block_norm(from: &NormSpec, to: &NormSpec, b: &Mat) -> Result<NormBound> {
    let (Some(fs), Some(ts)) = (from.shape(), to.shape()) else {
        return Err(Error::UnsupportedNorm("cross_block_norm needs non-structured norms".into()));
    };
    if b.cols() != from.dim() || b.rows() != to.dim() {
        return invalid(format!(
            "block is {}x{} but maps R^{} to R^{}",
            b.rows(),
            b.cols(),
            from.dim(),
            to.dim()
        ));
    }
    let value = match (&fs, &ts) {
        (Shape::L1(xi), _) => {
            (0..b.cols()).map(|j| ts.eval(&b.column(j)) / xi[j]).fold(0.0, f64::max)
        }
        (_, Shape::LInf(eta)) => {
            (0..b.rows()).map(|i| eta[i] * fs.dual(b.row(i))).fold(0.0, f64::max)
        }
        (Shape::Quad(qf), Shape::Quad(qt)) => max_singular(&(&(qt.root() * b) * qf.inv_root())),
        _ => {
            let into_euclid = transact::beta_exact(from, &NormSpec::euclidean(from.dim()))?.value;
            let out_of_euclid = transact::beta_exact(&NormSpec::euclidean(to.dim()), to)?.value;
            return Ok(NormBound { value: out_of_euclid * max_singular(b) * into_euclid, exact: false });
        }
    };
    Ok(NormBound { value, exact: true })
}

/// Reduced K×K matrix of a block-partitioned `A` under a structured norm:
/// inner measures of the diagonal blocks on the diagonal, induced
/// cross-block norms elsewhere.
pub fn structured_reduced(a: &Mat, spec: &NormSpec) -> Result<Mat> {
    let NormSpec::Structured(s) = spec else {
        return invalid("structured_reduced needs a structured norm");
    };
    check_square(spec, a)?;
    let k = s.partition.len();
    let offsets = s.offsets();
    let mut reduced = Mat::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let blk = a.block(offsets[i], offsets[j], s.partition[i], s.partition[j]);
            reduced[(i, j)] = if i == j {
                matrix_measure(&s.inner[i], &blk)?.value
            } else {
                cross_block_norm(&s.inner[j], &s.inner[i], &blk)?.value
            };
        }
    }
    Ok(reduced)
}

// JSON representation.

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ExponentRepr {
    Num(f64),
    Word(String),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum NormSpecRepr {
    Lp {
        p: ExponentRepr,
        weights: Vec<f64>,
    },
    Quadratic {
        #[serde(rename = "P", default, skip_serializing_if = "Option::is_none")]
        p: Option<Mat>,
        #[serde(rename = "Theta", default, skip_serializing_if = "Option::is_none")]
        theta: Option<Mat>,
    },
    Structured {
        partition: Vec<usize>,
        inner: Vec<NormSpec>,
        outer: Box<NormSpec>,
    },
}

impl TryFrom<NormSpecRepr> for NormSpec {
    type Error = Error;

    fn try_from(repr: NormSpecRepr) -> Result<Self> {
        match repr {
            NormSpecRepr::Lp { p, weights } => {
                let p = match p {
                    ExponentRepr::Num(v) => Lp::from_exponent(v)?,
                    ExponentRepr::Word(w) if w.eq_ignore_ascii_case("inf") => Lp::Inf,
                    ExponentRepr::Word(w) => return Err(Error::UnsupportedNorm(format!("p = {w:?}"))),
                };
                NormSpec::weighted(p, weights)
            }
            NormSpecRepr::Quadratic { p: Some(p), theta: None } => NormSpec::quadratic(&p),
            NormSpecRepr::Quadratic { p: None, theta: Some(t) } => NormSpec::quadratic_factor(&t),
            NormSpecRepr::Quadratic { .. } => invalid("quadratic norm needs exactly one of \"P\" or \"Theta\""),
            NormSpecRepr::Structured { partition, inner, outer } => {
                NormSpec::structured(partition, inner, *outer)
            }
        }
    }
}

impl From<NormSpec> for NormSpecRepr {
    fn from(spec: NormSpec) -> Self {
        match spec {
            NormSpec::WeightedLp { p, weights } => NormSpecRepr::Lp {
                p: match p {
                    Lp::One => ExponentRepr::Num(1.0),
                    Lp::Two => ExponentRepr::Num(2.0),
                    Lp::Inf => ExponentRepr::Word("inf".into()),
                },
                weights,
            },
            NormSpec::Quadratic(q) => NormSpecRepr::Quadratic { p: Some(q.p), theta: None },
            NormSpec::Structured(s) => {
                NormSpecRepr::Structured { partition: s.partition, inner: s.inner, outer: s.outer }
            }
        }
    }
}
