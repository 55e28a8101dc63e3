//! Transaction coefficients `β_ab = sup_{|x|_a = 1} |x|_b` between norms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matcore::{lambda_max, norm2};
use crate::norms::{induced_matrix_norm, norm_eval, NormSpec, Shape};
use crate::par::{max_indexed, Exec};

/// Largest dimension for which sign-vertex enumeration is attempted.
pub const MAX_VERTEX_DIM: usize = 20;

const SAMPLE_CHUNK: usize = 1024;

/// Provenance of a transaction coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaKind {
    /// Attained supremum.
    Exact,
    /// Valid upper bound that may be loose.
    PaperBound,
    /// Monte-Carlo estimate from below; never valid in a certificate.
    SampledLower,
    /// Supplied by the caller without verification.
    Asserted,
}

impl BetaKind {
    /// Whether a coefficient of this kind may back a guaranteed rate.
    pub fn is_sound(self) -> bool {
        !matches!(self, BetaKind::SampledLower)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Prop4Variant {
    /// Factor `n^{1/q} − n^{1/p}` as printed; unsound for small n.
    Literal,
    /// Factor `n^{1/q − 1/p}`.
    Corrected,
}

/// Which inequality of the weighted-Lp comparison to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Prop4Direction {
    /// `|x|_{p,ξ} ≤ β |x|_{q,η}`.
    QToP,
    /// `|x|_{q,η} ≤ β |x|_{p,ξ}`.
    PToQ,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaResult {
    pub value: f64,
    pub kind: BetaKind,
    pub from: String,
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<Prop4Variant>,
}

impl BetaResult {
    fn new(value: f64, kind: BetaKind, from: &NormSpec, to: &NormSpec) -> Self {
        Self { value, kind, from: from.label(), to: to.label(), variant: None }
    }

    /// Wraps a caller-supplied constant.
    pub fn asserted(value: f64, from: impl Into<String>, to: impl Into<String>) -> Result<Self> {
        if !(value.is_finite() && value > 0.0) {
            return invalid(format!("transaction coefficient must be positive, got {value}"));
        }
        Ok(Self { value, kind: BetaKind::Asserted, from: from.into(), to: to.into(), variant: None })
    }
}

fn check_dims(from: &NormSpec, to: &NormSpec) -> Result<()> {
    if from.dim() != to.dim() {
        return invalid(format!("norms act on R^{} and R^{}", from.dim(), to.dim()));
    }
    Ok(())
}

fn unsupported(from: &NormSpec, to: &NormSpec) -> Error {
    Error::UnsupportedPair { from: from.label(), to: to.label() }
}

/// Max over sign vectors `s` (first sign fixed) of `f(s)`.
fn max_over_signs(n: usize, f: impl Fn(&[f64]) -> f64 + Sync + Send) -> f64 {
    let count = 1usize << (n - 1);
    max_indexed(Exec::default(), count, |mask| {
        let s: Vec<f64> = (0..n).map(|i| if i > 0 && mask >> (i - 1) & 1 == 1 { -1.0 } else { 1.0 }).collect();
        f(&s)
    })
}

/// Exact transaction coefficient for non-structured pairs.
///
/// Every pair of weighted L1/L2/L∞ and quadratic norms is covered. Pairs that
/// need a vertex search (L∞ to a non-diagonal quadratic, or a non-diagonal
/// quadratic to L1) are limited to `n ≤ 20`.
pub fn beta_exact(from: &NormSpec, to: &NormSpec) -> Result<BetaResult> {
    check_dims(from, to)?;
    let (Some(fs), Some(ts)) = (from.shape(), to.shape()) else {
        return Err(unsupported(from, to));
    };
    let n = from.dim();
    let basis = |i: usize| {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        e
    };
    let value = match (&fs, &ts) {
        (Shape::Quad(qf), Shape::Quad(qt)) => {
            let m = &(qf.inv_root() * qt.matrix()) * qf.inv_root();
            lambda_max(&m.symmetrized())?.max(0.0).sqrt()
        }
        (Shape::L1(xi), _) => (0..n).map(|i| ts.eval(&basis(i)) / xi[i]).fold(0.0, f64::max),
        (_, Shape::LInf(eta)) => (0..n).map(|i| eta[i] * fs.dual(&basis(i))).fold(0.0, f64::max),
        (Shape::LInf(xi), Shape::L1(eta)) => eta.iter().zip(xi).map(|(e, x)| e / x).sum(),
        (Shape::LInf(xi), Shape::Quad(qt)) => match ts.diagonal_quadratic() {
            Some(p) => p.iter().zip(xi).map(|(p, x)| p / (x * x)).sum::<f64>().sqrt(),
            None if n <= MAX_VERTEX_DIM => max_over_signs(n, |s| {
                let v: Vec<f64> = s.iter().zip(xi).map(|(s, x)| s / x).collect();
                norm2(&qt.root().matvec(&v))
            }),
            None => return Err(unsupported(from, to)),
        },
        (Shape::Quad(qf), Shape::L1(eta)) => match fs.diagonal_quadratic() {
            Some(p) => eta.iter().zip(&p).map(|(e, p)| e * e / p).sum::<f64>().sqrt(),
            None if n <= MAX_VERTEX_DIM => max_over_signs(n, |s| {
                let v: Vec<f64> = s.iter().zip(eta).map(|(s, e)| s * e).collect();
                norm2(&qf.inv_root().matvec(&v))
            }),
            None => return Err(unsupported(from, to)),
        },
    };
    Ok(BetaResult::new(value, BetaKind::Exact, from, to))
}

/// Best available sound coefficient.
///
/// Tries [`beta_exact`], then the structured-norm bound when both sides share
/// a partition, then chaining through the Euclidean norm.
pub fn beta(from: &NormSpec, to: &NormSpec) -> Result<BetaResult> {
    check_dims(from, to)?;
    if from == to {
        return Ok(BetaResult::new(1.0, BetaKind::Exact, from, to));
    }
    match (from, to) {
        (NormSpec::Structured(a), NormSpec::Structured(b)) if a.partition() == b.partition() => {
            let tau_s = beta(a.outer(), b.outer())?.value;
            let taus = a
                .inner()
                .iter()
                .zip(b.inner())
                .map(|(x, y)| beta(x, y).map(|r| r.value))
                .collect::<Result<Vec<_>>>()?;
            let mut r = prop5_structured(tau_s, &taus, a.outer())?;
            r.from = from.label();
            r.to = to.label();
            Ok(r)
        }
        (NormSpec::Structured(_), _) | (_, NormSpec::Structured(_)) => Err(unsupported(from, to)),
        _ => match beta_exact(from, to) {
            Ok(r) => Ok(r),
            Err(Error::UnsupportedPair { .. }) => {
                let e = NormSpec::euclidean(from.dim());
                let value = beta_exact(from, &e)?.value * beta_exact(&e, to)?.value;
                Ok(BetaResult::new(value, BetaKind::PaperBound, from, to))
            }
            Err(other) => Err(other),
        },
    }
}

fn weight_exponent(p: f64) -> f64 {
    // The weighted L∞ norm is max ξ_i|x_i|, so its weights enter linearly.
    if p.is_infinite() {
        1.0
    } else {
        1.0 / p
    }
}

/// Comparison bound between `|·|_{p,ξ}` and `|·|_{q,η}` for `p > q ≥ 1`.
pub fn prop4_bound(
    p: f64,
    xi: &[f64],
    q: f64,
    eta: &[f64],
    direction: Prop4Direction,
    variant: Prop4Variant,
) -> Result<BetaResult> {
    if !(q >= 1.0 && p > q) || q.is_infinite() {
        return invalid(format!("need p > q >= 1 with q finite, got p = {p}, q = {q}"));
    }
    if xi.len() != eta.len() || xi.is_empty() {
        return invalid("weight vectors must be non-empty and of equal length");
    }
    if xi.iter().chain(eta).any(|w| !(w.is_finite() && *w > 0.0)) {
        return invalid("weights must be finite and strictly positive");
    }
    let n = xi.len() as f64;
    let wp = weight_exponent(p);
    let inv_p = if p.is_infinite() { 0.0 } else { 1.0 / p };
    let label = |p: f64| if p.is_infinite() { "lpinf".to_string() } else { format!("lp{p}") };
    let (value, from, to, variant) = match direction {
        Prop4Direction::QToP => {
            let m = xi.iter().zip(eta).map(|(x, e)| x.powf(wp) / e.powf(1.0 / q)).fold(0.0, f64::max);
            (m, label(q), label(p), None)
        }
        Prop4Direction::PToQ => {
            let m = xi.iter().zip(eta).map(|(x, e)| e.powf(1.0 / q) / x.powf(wp)).fold(0.0, f64::max);
            let factor = match variant {
                Prop4Variant::Literal => n.powf(1.0 / q) - n.powf(inv_p),
                Prop4Variant::Corrected => n.powf(1.0 / q - inv_p),
            };
            (m * factor, label(p), label(q), Some(variant))
        }
    };
    let dim = xi.len();
    Ok(BetaResult {
        value,
        kind: BetaKind::PaperBound,
        from: format!("{from}[{dim}]"),
        to: format!("{to}[{dim}]"),
        variant,
    })
}

/// Bound between two structured norms on the same partition:
/// `τ_S · ‖diag(τ_k)‖_S`, with `τ_S` the outer coefficient and `τ_k` the
/// per-block coefficients, measured in the source outer norm `S`.
pub fn prop5_structured(tau_s: f64, inner_taus: &[f64], outer: &NormSpec) -> Result<BetaResult> {
    if !(tau_s > 0.0) || inner_taus.iter().any(|t| !(*t > 0.0)) {
        return invalid("structured transaction coefficients must be positive");
    }
    let u = crate::matcore::Mat::diag(inner_taus);
    let value = tau_s * induced_matrix_norm(outer, &u)?;
    Ok(BetaResult {
        value,
        kind: BetaKind::PaperBound,
        from: format!("structured[{}]", inner_taus.len()),
        to: format!("structured[{}]", inner_taus.len()),
        variant: None,
    })
}

/// Monte-Carlo lower estimate of `β(from → to)` from Gaussian directions.
///
/// Samples are drawn in chunks, each from its own ChaCha stream, so the
/// result depends only on `seed` and not on the execution strategy.
pub fn sampled_sup(from: &NormSpec, to: &NormSpec, n_samples: usize, seed: u64, exec: Exec) -> Result<BetaResult> {
    check_dims(from, to)?;
    if n_samples == 0 {
        return invalid("n_samples must be positive");
    }
    let n = from.dim();
    let chunks = n_samples.div_ceil(SAMPLE_CHUNK);
    let value = max_indexed(exec, chunks, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        let len = SAMPLE_CHUNK.min(n_samples - c * SAMPLE_CHUNK);
        let mut best = 0.0f64;
        let mut x = vec![0.0; n];
        for _ in 0..len {
            for v in x.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            let a = norm_eval(from, &x).expect("dimension checked");
            if a > 0.0 {
                best = best.max(norm_eval(to, &x).expect("dimension checked") / a);
            }
        }
        best
    });
    Ok(BetaResult::new(value, BetaKind::SampledLower, from, to))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{max_singular, Mat};
    use crate::norms::Lp;
    use rand::Rng;

    const CHUA_XI: [f64; 3] = [1.0, 3.4042, 1.0369];

    fn theta(v: &[&[f64]]) -> Mat {
        Mat::from_rows(v).unwrap().inverse().unwrap()
    }

    fn ex1_norms() -> (NormSpec, NormSpec, Mat, Mat) {
        let t1 = theta(&[&[0.707, 0.447], &[0.707, 0.894]]);
        let t2 = theta(&[&[0.998, 0.322], &[0.0618, 0.947]]);
        (NormSpec::quadratic_factor(&t1).unwrap(), NormSpec::quadratic_factor(&t2).unwrap(), t1, t2)
    }

    fn random_spec(rng: &mut ChaCha8Rng, n: usize, family: usize) -> NormSpec {
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.3..3.0)).collect();
        match family {
            0 => NormSpec::weighted(Lp::One, w).unwrap(),
            1 => NormSpec::weighted(Lp::Two, w).unwrap(),
            2 => NormSpec::weighted(Lp::Inf, w).unwrap(),
            _ => {
                let b = Mat::new(n, n, (0..n * n).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
                NormSpec::quadratic(&(&(&b.transpose() * &b) + &Mat::identity(n).scale(0.2))).unwrap()
            }
        }
    }

    fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| StandardNormal.sample(rng)).collect()
    }

    #[test]
    fn identical_norms() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for family in 0..4 {
            let s = random_spec(&mut rng, 3, family);
            assert!((beta_exact(&s, &s).unwrap().value - 1.0).abs() < 1e-10);
            let sampled = sampled_sup(&s, &s, 500, 1, Exec::Parallel).unwrap().value;
            assert!((sampled - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_pair_matches_singular_value() {
        let (n1, n2, t1, t2) = ex1_norms();
        let b21 = beta_exact(&n2, &n1).unwrap();
        let b12 = beta_exact(&n1, &n2).unwrap();
        assert_eq!(b21.kind, BetaKind::Exact);
        let oracle21 = max_singular(&(&t1 * &t2.inverse().unwrap()));
        let oracle12 = max_singular(&(&t2 * &t1.inverse().unwrap()));
        assert!((b21.value - oracle21).abs() < 1e-8);
        assert!((b12.value - oracle12).abs() < 1e-8);
        assert!((b21.value - 3.6563).abs() < 1e-3, "{}", b21.value);
        assert!((b12.value - 1.2489).abs() < 1e-3, "{}", b12.value);
        let s = sampled_sup(&n2, &n1, 100_000, 7, Exec::Parallel).unwrap().value;
        assert!(s <= b21.value * (1.0 + 1e-12) && s >= 0.98 * b21.value);
    }

    #[test]
    fn weighted_one_and_euclidean() {
        let w1 = NormSpec::weighted(Lp::One, CHUA_XI.to_vec()).unwrap();
        let e = NormSpec::euclidean(3);
        assert!((beta_exact(&w1, &e).unwrap().value - 1.0).abs() < 1e-12);
        let norm_xi = CHUA_XI.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((beta_exact(&e, &w1).unwrap().value - norm_xi).abs() < 1e-12);
        assert!((norm_xi - 3.6965).abs() < 1e-4);
        let s = sampled_sup(&w1, &e, 100_000, 3, Exec::Parallel).unwrap().value;
        assert!((0.98..=1.0 + 1e-12).contains(&s));
    }

    #[test]
    fn prop4_examples() {
        let corrected = Prop4Variant::Corrected;
        let r = prop4_bound(f64::INFINITY, &[1.0; 3], 1.0, &[1.0; 3], Prop4Direction::PToQ, corrected).unwrap();
        assert!((r.value - 3.0).abs() < 1e-12);
        let r = prop4_bound(2.0, &[1.0; 4], 1.0, &[1.0; 4], Prop4Direction::PToQ, corrected).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
        let s = sampled_sup(&NormSpec::euclidean(4), &NormSpec::lp(Lp::One, 4), 100_000, 5, Exec::Parallel)
            .unwrap()
            .value;
        assert!((0.99 * 2.0..=2.0).contains(&s), "{s}");

        let lit = prop4_bound(2.0, &[4.0], 1.0, &[3.0], Prop4Direction::PToQ, Prop4Variant::Literal).unwrap();
        assert_eq!(lit.value, 0.0);
        let cor = prop4_bound(2.0, &[4.0], 1.0, &[3.0], Prop4Direction::PToQ, corrected).unwrap();
        assert!((cor.value - 1.5).abs() < 1e-12);
        assert!(prop4_bound(1.0, &[1.0], 2.0, &[1.0], Prop4Direction::QToP, corrected).is_err());
    }

    #[test]
    fn prop5_examples() {
        let inf = NormSpec::lp(Lp::Inf, 2);
        let one = NormSpec::lp(Lp::One, 2);
        assert_eq!(prop5_structured(1.0, &[1.0, 1.0], &inf).unwrap().value, 1.0);
        assert_eq!(prop5_structured(2.0, &[3.0, 5.0], &inf).unwrap().value, 10.0);
        assert_eq!(prop5_structured(1.0, &[1.0, 4.0], &one).unwrap().value, 4.0);
    }

    #[test]
    fn structured_beta_is_sound() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for case in 0..10 {
            let mk = |rng: &mut ChaCha8Rng, c: usize| {
                NormSpec::structured(
                    vec![2, 1],
                    vec![random_spec(rng, 2, c % 4), random_spec(rng, 1, (c + 2) % 4)],
                    random_spec(rng, 2, c % 3),
                )
                .unwrap()
            };
            let a = mk(&mut rng, case);
            let b = mk(&mut rng, case + 1);
            let r = beta(&a, &b).unwrap();
            assert_eq!(r.kind, BetaKind::PaperBound);
            for _ in 0..1000 {
                let x = gaussian(&mut rng, 3);
                assert!(norm_eval(&b, &x).unwrap() <= r.value * norm_eval(&a, &x).unwrap() * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn sampling_is_strategy_independent() {
        let (n1, n2, _, _) = ex1_norms();
        let a = sampled_sup(&n1, &n2, 5000, 42, Exec::Sequential).unwrap();
        let b = sampled_sup(&n1, &n2, 5000, 42, Exec::Parallel).unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(a.kind, BetaKind::SampledLower);
    }

    #[test]
    fn vertex_search_beyond_limit_is_rejected() {
        let n = MAX_VERTEX_DIM + 1;
        let mut p = Mat::identity(n);
        p[(0, 1)] = 0.1;
        p[(1, 0)] = 0.1;
        let q = NormSpec::quadratic(&p).unwrap();
        assert!(matches!(beta_exact(&NormSpec::lp(Lp::Inf, n), &q), Err(Error::UnsupportedPair { .. })));
        assert_eq!(beta_exact(&q, &NormSpec::lp(Lp::Inf, n)).unwrap().kind, BetaKind::Exact);
    }

    mod props {
        use super::*;
        use proptest::prelude::{any, prop_assert, proptest, ProptestConfig};

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(100))]

            #[test]
            fn soundness_and_reciprocity(seed in any::<u64>(), fa in 0usize..4, fb in 0usize..4, n in 1usize..5) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = random_spec(&mut rng, n, fa);
                let b = random_spec(&mut rng, n, fb);
                let ab = beta_exact(&a, &b).unwrap().value;
                let ba = beta_exact(&b, &a).unwrap().value;
                prop_assert!(ab * ba >= 1.0 - 1e-9);
                for _ in 0..1000 {
                    let x = gaussian(&mut rng, n);
                    prop_assert!(norm_eval(&b, &x).unwrap() <= ab * norm_eval(&a, &x).unwrap() * (1.0 + 1e-9));
                }
                let s = sampled_sup(&a, &b, 2000, seed, Exec::Sequential).unwrap().value;
                prop_assert!(s <= ab * (1.0 + 1e-9));
            }

            #[test]
            fn ordering_against_prop4(seed in any::<u64>(), n in 1usize..6, pair in 0usize..3) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let xi: Vec<f64> = (0..n).map(|_| rng.random_range(0.3..3.0)).collect();
                let eta: Vec<f64> = (0..n).map(|_| rng.random_range(0.3..3.0)).collect();
                let (lp, lq) = [(Lp::Two, Lp::One), (Lp::Inf, Lp::One), (Lp::Inf, Lp::Two)][pair];
                let sp = NormSpec::weighted(lp, xi.clone()).unwrap();
                let sq = NormSpec::weighted(lq, eta.clone()).unwrap();
                for (dir, from, to) in [(Prop4Direction::QToP, &sq, &sp), (Prop4Direction::PToQ, &sp, &sq)] {
                    let bound = prop4_bound(lp.exponent(), &xi, lq.exponent(), &eta, dir, Prop4Variant::Corrected)
                        .unwrap()
                        .value;
                    let exact = beta_exact(from, to).unwrap().value;
                    let sampled = sampled_sup(from, to, 2000, seed, Exec::Sequential).unwrap().value;
                    prop_assert!(sampled <= exact * (1.0 + 1e-9) + 1e-9);
                    prop_assert!(exact <= bound * (1.0 + 1e-9) + 1e-9, "{exact} > {bound}");
                }
            }

            #[test]
            fn quadratic_factor_invariance(seed in any::<u64>(), angle in 0.0f64..6.3) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let rand2 = |rng: &mut ChaCha8Rng| {
                    let m = Mat::new(2, 2, (0..4).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
                    &m + &Mat::identity(2).scale(3.0)
                };
                let ta = rand2(&mut rng);
                let tb = rand2(&mut rng);
                let rot = Mat::from_rows(&[[angle.cos(), -angle.sin()], [angle.sin(), angle.cos()]]).unwrap();
                let a = NormSpec::quadratic_factor(&ta).unwrap();
                let b = NormSpec::quadratic_factor(&(&rot * &tb)).unwrap();
                let expected = max_singular(&(&tb * &ta.inverse().unwrap()));
                prop_assert!((beta_exact(&a, &b).unwrap().value - expected).abs() <= 1e-8 * (1.0 + expected));
            }
        }
    }
}
