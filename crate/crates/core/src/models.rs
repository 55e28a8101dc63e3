//! Concrete systems: the Chua circuit, graph Laplacians, blinking networks
//! and the two-mode linear examples.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matcore::{kron, sym_eig, Mat};
use crate::simsw::{LinearField, SwitchedSystem, VectorField};
use crate::switchsig::{ModeId, SwitchingSignal};

/// Chua circuit parameters. Defaults give the double-scroll attractor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChuaParams {
    pub p: f64,
    pub q: f64,
    #[serde(rename = "G")]
    pub g: f64,
    pub m0: f64,
    pub m1: f64,
}

impl Default for ChuaParams {
    fn default() -> Self {
        Self { p: 9.0, q: 7.0, g: 0.7, m0: -0.5, m1: -0.8 }
    }
}

impl ChuaParams {
    /// Piecewise-linear diode characteristic.
    pub fn nonlinearity(&self, w1: f64) -> f64 {
        self.m0 * w1 + 0.5 * (self.m1 - self.m0) * ((w1 + 1.0).abs() - (w1 - 1.0).abs())
    }

    /// Slope of the characteristic: `m1` inside `|w1| < 1`, `m0` outside.
    pub fn slope(&self, w1: f64) -> f64 {
        if w1.abs() < 1.0 {
            self.m1
        } else {
            self.m0
        }
    }

    pub fn field(&self, w: &[f64], out: &mut [f64]) {
        out[0] = self.p * (self.g * (w[1] - w[0]) - self.nonlinearity(w[0]));
        out[1] = self.g * (w[0] - w[1]) + w[2];
        out[2] = -self.q * w[1];
    }

    /// Jacobian for a given slope of the characteristic.
    pub fn jacobian_for_slope(&self, slope: f64) -> Mat {
        Mat::from_rows(&[
            [self.p * (-self.g - slope), self.p * self.g, 0.0],
            [self.g, -self.g, 1.0],
            [0.0, -self.q, 0.0],
        ])
        .expect("3x3")
    }

    pub fn jacobian(&self, w: &[f64]) -> Mat {
        self.jacobian_for_slope(self.slope(w[0]))
    }

    /// The two Jacobians the circuit can take, `[at m0, at m1]`.
    pub fn jacobians(&self) -> [Mat; 2] {
        [self.jacobian_for_slope(self.m0), self.jacobian_for_slope(self.m1)]
    }
}

/// Single Chua node as a vector field.
#[derive(Debug, Clone, Copy, Default)]
pub struct ChuaField(pub ChuaParams);

impl VectorField for ChuaField {
    fn dim(&self) -> usize {
        3
    }

    fn eval(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        self.0.field(x, out);
    }

    fn jacobian(&self, _t: f64, x: &[f64]) -> Mat {
        self.0.jacobian(x)
    }
}

/// Graph on nodes `0..nodes`; an edge `[j, i]` is a link from `j` to `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Graph {
    pub nodes: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(default)]
    pub undirected: bool,
}

impl Graph {
    /// Circulant graph: node `i` linked to `i ± o` for each offset.
    pub fn circulant(nodes: usize, offsets: &[usize]) -> Self {
        let mut edges = Vec::new();
        for i in 0..nodes {
            for &o in offsets {
                let j = (i + o) % nodes;
                if i != j && !edges.contains(&[j.min(i), j.max(i)]) {
                    edges.push([i.min(j), i.max(j)]);
                }
            }
        }
        Self { nodes, edges, undirected: true }
    }

    fn validate(&self) -> Result<()> {
        if self.nodes < 2 {
            return Err(Error::UnsupportedGraph("need at least two nodes".into()));
        }
        for &[a, b] in &self.edges {
            if a >= self.nodes || b >= self.nodes {
                return Err(Error::UnsupportedGraph(format!("edge [{a}, {b}] references a missing node")));
            }
            if a == b {
                return Err(Error::UnsupportedGraph(format!("self-loop at node {a}")));
            }
        }
        Ok(())
    }
}

/// Laplacian with `L_ij = −1` for a link `j → i` and `L_ii = −Σ_j L_ij`.
/// Undirected edges add links both ways; repeated edges count once.
pub fn laplacian(graph: &Graph) -> Result<Mat> {
    graph.validate()?;
    let n = graph.nodes;
    let mut l = Mat::zeros(n, n);
    for &[j, i] in &graph.edges {
        l[(i, j)] = -1.0;
        if graph.undirected {
            l[(j, i)] = -1.0;
        }
    }
    for i in 0..n {
        let s: f64 = (0..n).filter(|&j| j != i).map(|j| l[(i, j)]).sum();
        l[(i, i)] = -s;
    }
    Ok(l)
}

/// Algebraic connectivity: second-smallest eigenvalue of a symmetric Laplacian.
pub fn lambda2(l: &Mat) -> Result<f64> {
    if !l.is_square() || l.rows() < 2 {
        return Err(Error::UnsupportedGraph("Laplacian must be square with at least two nodes".into()));
    }
    if !l.is_symmetric(0.0) {
        return Err(Error::UnsupportedGraph("algebraic connectivity needs an undirected graph".into()));
    }
    Ok(sym_eig(l)?.values[1])
}

/// Blinking network `ẋ = F(x) − kσ(t)(L ⊗ Γ)x` of Chua nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlinkNetConfig {
    #[serde(default)]
    pub chua: ChuaParams,
    pub graph: Graph,
    pub k: f64,
    /// Inner coupling; identity when absent.
    #[serde(default, rename = "Gamma", skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Mat>,
}

impl BlinkNetConfig {
    pub fn gamma(&self) -> Mat {
        self.gamma.clone().unwrap_or_else(|| Mat::identity(3))
    }
}

pub const COUPLING_OFF: ModeId = ModeId(0);
pub const COUPLING_ON: ModeId = ModeId(1);

/// Network field for one value of σ: identical nodes plus optional coupling.
#[derive(Clone)]
pub struct NetworkField {
    node: Arc<dyn VectorField>,
    nodes: usize,
    /// `k(L ⊗ Γ)` when coupled.
    coupling: Option<Mat>,
}

impl VectorField for NetworkField {
    fn dim(&self) -> usize {
        self.node.dim() * self.nodes
    }

    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let d = self.node.dim();
        for i in 0..self.nodes {
            self.node.eval(t, &x[d * i..d * (i + 1)], &mut out[d * i..d * (i + 1)]);
        }
        if let Some(c) = &self.coupling {
            for (i, o) in out.iter_mut().enumerate() {
                *o -= c.row(i).iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            }
        }
    }

    fn jacobian(&self, t: f64, x: &[f64]) -> Mat {
        let (n, d) = (self.dim(), self.node.dim());
        let mut j = Mat::zeros(n, n);
        for i in 0..self.nodes {
            j.set_block(d * i, d * i, &self.node.jacobian(t, &x[d * i..d * (i + 1)]));
        }
        match &self.coupling {
            Some(c) => &j - c,
            None => j,
        }
    }
}

/// Two-mode network of identical nodes: mode 0 uncoupled, mode 1 coupled
/// through `k(L ⊗ Γ)`.
pub fn blink_network(node: Arc<dyn VectorField>, graph: &Graph, k: f64, gamma: &Mat) -> Result<SwitchedSystem> {
    let d = node.dim();
    if gamma.rows() != d || gamma.cols() != d {
        return invalid(format!("inner coupling matrix must be {d}x{d}"));
    }
    if !(k.is_finite() && k >= 0.0) {
        return invalid(format!("coupling strength must be finite and nonnegative, got {k}"));
    }
    let l = laplacian(graph)?;
    let off = NetworkField { node: node.clone(), nodes: graph.nodes, coupling: None };
    let on = NetworkField { node, nodes: graph.nodes, coupling: Some(kron(&l, gamma).scale(k)) };
    SwitchedSystem::new(
        [(COUPLING_OFF, Arc::new(off) as Arc<dyn VectorField>), (COUPLING_ON, Arc::new(on) as Arc<dyn VectorField>)]
            .into(),
    )
}

/// Blinking network of Chua nodes.
pub fn blink_network_field(cfg: &BlinkNetConfig) -> Result<SwitchedSystem> {
    blink_network(Arc::new(ChuaField(cfg.chua)), &cfg.graph, cfg.k, &cfg.gamma())
}

/// Coupling schedule: off for `duty_off·T`, then on for the rest of each period.
pub fn blink_signal(period: f64, duty_off: f64) -> Result<SwitchingSignal> {
    if !(period > 0.0) || !(0.0..=1.0).contains(&duty_off) {
        return invalid("need period > 0 and duty_off in [0, 1]");
    }
    let mut segs = Vec::new();
    if duty_off > 0.0 {
        segs.push((COUPLING_OFF, duty_off * period));
    }
    if duty_off < 1.0 {
        segs.push((COUPLING_ON, (1.0 - duty_off) * period));
    }
    SwitchingSignal::new(segs, true, 0.0)
}

/// Mean distance of node states from their centroid.
pub fn sync_error(x: &[f64], nodes: usize, node_dim: usize) -> f64 {
    assert_eq!(x.len(), nodes * node_dim, "state length does not match the network");
    let mut mean = vec![0.0; node_dim];
    for i in 0..nodes {
        for d in 0..node_dim {
            mean[d] += x[i * node_dim + d] / nodes as f64;
        }
    }
    (0..nodes)
        .map(|i| (0..node_dim).map(|d| (x[i * node_dim + d] - mean[d]).powi(2)).sum::<f64>().sqrt())
        .sum::<f64>()
        / nodes as f64
}

/// Transverse variational matrix `Df − kλσΓ`.
pub fn variational_mode_matrix(df: &Mat, k: f64, lambda: f64, sigma: f64, gamma: &Mat) -> Mat {
    df - &gamma.scale(k * lambda * sigma)
}

/// Which version of the second example's first matrix to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ex2Variant {
    /// Sign of `a21` chosen so the matrix is Hurwitz and the mode average is as printed.
    #[default]
    Corrected,
    /// Entries exactly as printed; this matrix is not Hurwitz.
    AsPrinted,
}

/// Constants quoted for an example, kept next to the data for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotedConstants {
    pub alpha: [f64; 2],
    pub beta12: f64,
    pub beta21: f64,
    pub rate: Option<f64>,
}

/// Two-mode linear example `ẋ = A(r)x + B` with one analysis norm per mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LtvExample {
    pub a1: Mat,
    pub a2: Mat,
    pub b: Vec<f64>,
    pub theta1: Mat,
    pub theta2: Mat,
    pub dwell: f64,
    pub quoted: QuotedConstants,
}

impl LtvExample {
    pub fn system(&self) -> Result<SwitchedSystem> {
        SwitchedSystem::linear(
            [
                (ModeId(1), LinearField::new(self.a1.clone(), self.b.clone())?),
                (ModeId(2), LinearField::new(self.a2.clone(), self.b.clone())?),
            ]
            .into(),
        )
    }

    pub fn signal(&self) -> SwitchingSignal {
        SwitchingSignal::alternating(ModeId(1), self.dwell, ModeId(2), self.dwell, 0.0).expect("positive dwell")
    }

    pub fn mode_matrices(&self) -> BTreeMap<ModeId, Mat> {
        [(ModeId(1), self.a1.clone()), (ModeId(2), self.a2.clone())].into()
    }
}

fn rows(r: [[f64; 2]; 2]) -> Mat {
    Mat::from_rows(&r).expect("2x2")
}

/// First example: both modes Hurwitz, 1 s dwells. `Θ_i` are inverses of the
/// listed eigenvector-like matrices and the norms are `|Θ_i x|₂`.
pub fn ltv_example1(b: [f64; 2]) -> LtvExample {
    LtvExample {
        a1: rows([[0.0, -1.0], [2.0, -3.0]]),
        a2: rows([[0.0, -11.0], [2.0, -33.0]]),
        b: b.to_vec(),
        theta1: rows([[0.707, 0.447], [0.707, 0.894]]).inverse().expect("invertible"),
        theta2: rows([[0.998, 0.322], [0.0618, 0.947]]).inverse().expect("invertible"),
        dwell: 1.0,
        quoted: QuotedConstants { alpha: [-1.0, -0.6807], beta12: 1.796, beta21: 1.05, rate: None },
    }
}

/// Second example: the second mode is unstable, 2 s dwells.
pub fn ltv_example2(variant: Ex2Variant) -> LtvExample {
    let a21 = match variant {
        Ex2Variant::Corrected => 2.4538,
        Ex2Variant::AsPrinted => -2.4538,
    };
    LtvExample {
        a1: rows([[-1.3481, -2.9306], [a21, -1.2755]]),
        a2: rows([[-11.2237, 7.0628], [-1.7413, 1.5119]]),
        b: vec![0.0, 0.0],
        theta1: rows([[0.3797, 0.0061], [0.0061, 0.4534]]),
        theta2: rows([[0.0644, -0.1475], [-0.1475, 0.8267]]),
        dwell: 2.0,
        quoted: QuotedConstants { alpha: [-2.6178, 0.9188], beta12: 1.9079, beta21: 10.4207, rate: Some(1.1010) },
    }
}

/// Average of the second example's mode matrices as quoted.
pub fn ltv_example2_mean_quoted() -> Mat {
    rows([[-6.2859, 2.0661], [0.3562, 0.1182]])
}
