//! Feedforward ReLU networks, input polytopes, output halfspaces and
//! interval bound propagation.
//!
//! A network with `n` layers maps `z_0 = x` through
//! `ẑ_i = W[i-1] z_{i-1} + b[i-1]`, `z_i = max(0, ẑ_i)` for hidden layers
//! and `z_n = ẑ_n` for the output layer.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::oracle::simplex::{self, LinearProgram, LpOutcome};

/// One affine layer `ẑ = W z + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReluNetwork {
    layers: Vec<Layer>,
}

/// Pre- and post-activation values of one forward pass, indexed by layer
/// `0..=n`. Layer 0 holds the input in both slots.
#[derive(Debug, Clone, PartialEq)]
pub struct Activations {
    pub pre: Vec<DVector<f64>>,
    pub post: Vec<DVector<f64>>,
}

impl Activations {
    pub fn output(&self) -> &DVector<f64> {
        self.post.last().expect("activations always hold the input layer")
    }

    fn is_linear(&self, layer: usize) -> bool {
        layer == 0 || layer + 1 == self.pre.len()
    }

    /// Positive part of the splitting, `λ⁺ = z`. The input and the output
    /// carry no activation and split as `max(v, 0)`.
    pub fn positive(&self, layer: usize) -> DVector<f64> {
        if self.is_linear(layer) {
            self.pre[layer].map(|v| v.max(0.0))
        } else {
            self.post[layer].clone()
        }
    }

    /// Negative part of the splitting, `λ⁻ = z − ẑ`; `max(−v, 0)` for the
    /// input and the output.
    pub fn negative(&self, layer: usize) -> DVector<f64> {
        if self.is_linear(layer) {
            self.pre[layer].map(|v| (-v).max(0.0))
        } else {
            &self.post[layer] - &self.pre[layer]
        }
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct LayerFile {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

#[derive(Debug, Deserialize, Serialize)]
struct NetworkFile {
    layers: Vec<LayerFile>,
}

impl ReluNetwork {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidNetwork("a network needs at least one layer".into()));
        }
        for (i, layer) in layers.iter().enumerate() {
            let (rows, cols) = layer.weights.shape();
            if rows == 0 || cols == 0 {
                return Err(Error::InvalidNetwork(format!("layer {i} has an empty weight matrix")));
            }
            if layer.bias.len() != rows {
                return Err(Error::InvalidNetwork(format!(
                    "layer {i}: bias length {} does not match {rows} rows",
                    layer.bias.len()
                )));
            }
            if i > 0 && layers[i - 1].weights.nrows() != cols {
                return Err(Error::InvalidNetwork(format!(
                    "layer {i} expects {cols} inputs but layer {} produces {}",
                    i - 1,
                    layers[i - 1].weights.nrows()
                )));
            }
            if layer.weights.iter().chain(layer.bias.iter()).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("network parameters"));
            }
        }
        Ok(Self { layers })
    }

    /// Builds a network from row-major weight rows and biases.
    pub fn from_rows(layers: &[(Vec<Vec<f64>>, Vec<f64>)]) -> Result<Self> {
        let layers = layers
            .iter()
            .map(|(rows, bias)| {
                let nrows = rows.len();
                let ncols = rows.first().map_or(0, Vec::len);
                if rows.iter().any(|r| r.len() != ncols) {
                    return Err(Error::InvalidNetwork("ragged weight matrix".into()));
                }
                Ok(Layer {
                    weights: DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]),
                    bias: DVector::from_column_slice(bias),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Number of affine layers `n`.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Layer widths `h_0 … h_n`.
    pub fn dims(&self) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.layers.len() + 1);
        dims.push(self.layers[0].weights.ncols());
        dims.extend(self.layers.iter().map(|l| l.weights.nrows()));
        dims
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].weights.nrows()
    }

    /// Neurons carrying a ReLU, i.e. every neuron of layers `1..n`.
    pub fn hidden_count(&self) -> usize {
        self.dims()[1..self.depth()].iter().sum()
    }

    pub fn forward(&self, x: &DVector<f64>) -> Result<Activations> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), got: x.len() });
        }
        let n = self.depth();
        let mut pre = Vec::with_capacity(n + 1);
        let mut post = Vec::with_capacity(n + 1);
        pre.push(x.clone());
        post.push(x.clone());
        for (i, layer) in self.layers.iter().enumerate() {
            let zhat = &layer.weights * &post[i] + &layer.bias;
            let z = if i + 1 < n { zhat.map(|v| v.max(0.0)) } else { zhat.clone() };
            pre.push(zhat);
            post.push(z);
        }
        Ok(Activations { pre, post })
    }

    /// Network output `f(x)`.
    pub fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.forward(x)?.output().clone())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: NetworkFile = serde_json::from_str(text)?;
        let layers: Vec<_> = file.layers.into_iter().map(|l| (l.weights, l.bias)).collect();
        Self::from_rows(&layers)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// JSON with every number printed to 17 significant digits.
    pub fn to_json_string(&self) -> String {
        let num = |v: f64| format!("{v:.16e}");
        let mut out = String::from("{\"layers\": [");
        for (li, layer) in self.layers.iter().enumerate() {
            if li > 0 {
                out.push(',');
            }
            out.push_str("\n  {\"weights\": [");
            for r in 0..layer.weights.nrows() {
                if r > 0 {
                    out.push_str(", ");
                }
                let row: Vec<String> = layer.weights.row(r).iter().map(|&v| num(v)).collect();
                let _ = write!(out, "[{}]", row.join(", "));
            }
            let bias: Vec<String> = layer.bias.iter().map(|&v| num(v)).collect();
            let _ = write!(out, "], \"bias\": [{}]}}", bias.join(", "));
        }
        out.push_str("\n]}\n");
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }
}

/// Draws a network whose weights and biases are i.i.d. uniform on `[-1, 1]`.
///
/// The generator is ChaCha8 seeded through `seed_from_u64(seed)`; entries are
/// drawn layer by layer, weights in row-major order followed by the bias.
pub fn random_network(dims: &[usize], seed: u64) -> Result<ReluNetwork> {
    if dims.len() < 2 {
        return Err(Error::InvalidNetwork("need at least an input and an output width".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = dims
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let mut weights = DMatrix::zeros(fan_out, fan_in);
            for r in 0..fan_out {
                for c in 0..fan_in {
                    weights[(r, c)] = rng.gen_range(-1.0..=1.0);
                }
            }
            let bias = DVector::from_fn(fan_out, |_, _| rng.gen_range(-1.0..=1.0));
            Layer { weights, bias }
        })
        .collect();
    ReluNetwork::new(layers)
}

/// Axis-aligned box `lo ≤ x ≤ hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputBox {
    pub lo: DVector<f64>,
    pub hi: DVector<f64>,
}

impl InputBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite()) {
            return Err(Error::UnboundedInput("box bounds must be finite with lo ≤ hi".into()));
        }
        Ok(Self { lo: DVector::from_vec(lo), hi: DVector::from_vec(hi) })
    }

    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        x.len() == self.dim()
            && x.iter().zip(self.lo.iter().zip(self.hi.iter())).all(|(v, (l, h))| *v >= l - tol && *v <= h + tol)
    }

    /// All `2^dim` corners, enumerated with coordinate 0 as the fastest bit.
    pub fn corners(&self) -> Vec<DVector<f64>> {
        let n = self.dim();
        (0..1usize << n)
            .map(|mask| {
                DVector::from_fn(n, |j, _| if mask >> j & 1 == 1 { self.hi[j] } else { self.lo[j] })
            })
            .collect()
    }
}

/// Polytope `{x | A x ≤ a}`, optionally remembered as the box it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct InputPolytope {
    a_mat: DMatrix<f64>,
    a_rhs: DVector<f64>,
    bounding_box: InputBox,
    is_box: bool,
}

impl InputPolytope {
    /// Builds a polytope and checks it is non-empty and bounded by solving
    /// a pair of LPs per coordinate.
    pub fn new(a_mat: DMatrix<f64>, a_rhs: DVector<f64>) -> Result<Self> {
        if a_mat.nrows() != a_rhs.len() {
            return Err(Error::DimensionMismatch { expected: a_mat.nrows(), got: a_rhs.len() });
        }
        if a_mat.nrows() == 0 {
            return Err(Error::UnboundedInput("no input constraints".into()));
        }
        if a_mat.iter().chain(a_rhs.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("input polytope"));
        }
        let h0 = a_mat.ncols();
        let mut lo = vec![0.0; h0];
        let mut hi = vec![0.0; h0];
        for j in 0..h0 {
            for (sign, slot) in [(1.0, &mut lo[j]), (-1.0, &mut hi[j])] {
                let mut c = vec![0.0; h0];
                c[j] = sign;
                let lp = LinearProgram::free_vars(c, &a_mat, &a_rhs);
                match simplex::solve(&lp) {
                    LpOutcome::Optimal { value, .. } => *slot = sign * value,
                    LpOutcome::Infeasible => {
                        return Err(Error::UnboundedInput("input polytope is empty".into()))
                    }
                    LpOutcome::Unbounded => {
                        return Err(Error::UnboundedInput(format!("coordinate {j} is unbounded")))
                    }
                }
            }
        }
        let bounding_box = InputBox::new(lo, hi)?;
        Ok(Self { a_mat, a_rhs, bounding_box, is_box: false })
    }

    /// Halfspace form of a box: the `h_0` negated lower bounds `−x_j ≤ −lo_j`
    /// come first, followed by the `h_0` upper bounds `x_j ≤ hi_j`.
    pub fn from_box(bx: &InputBox) -> Self {
        let n = bx.dim();
        let mut a_mat = DMatrix::zeros(2 * n, n);
        let mut a_rhs = DVector::zeros(2 * n);
        for j in 0..n {
            a_mat[(j, j)] = -1.0;
            a_rhs[j] = -bx.lo[j];
            a_mat[(n + j, j)] = 1.0;
            a_rhs[n + j] = bx.hi[j];
        }
        Self { a_mat, a_rhs, bounding_box: bx.clone(), is_box: true }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a_mat
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.a_rhs
    }

    pub fn num_rows(&self) -> usize {
        self.a_mat.nrows()
    }

    pub fn dim(&self) -> usize {
        self.a_mat.ncols()
    }

    /// The box itself for box inputs, otherwise the tightest enclosing box.
    pub fn bounding_box(&self) -> &InputBox {
        &self.bounding_box
    }

    pub fn is_box(&self) -> bool {
        self.is_box
    }

    /// Largest violation `max_j (A_j x − a_j)⁺`.
    pub fn violation(&self, x: &DVector<f64>) -> f64 {
        (&self.a_mat * x - &self.a_rhs).iter().fold(0.0_f64, |m, &v| m.max(v))
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        x.len() == self.dim() && self.violation(x) <= tol
    }

    /// Euclidean projection onto the polytope by Dykstra's alternating
    /// projections over the halfspaces.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        if self.violation(x) <= 0.0 {
            return x.clone();
        }
        let m = self.num_rows();
        let mut y = x.clone();
        let mut incr = vec![DVector::zeros(x.len()); m];
        for _ in 0..10_000 {
            let mut moved = 0.0_f64;
            for i in 0..m {
                let row = self.a_mat.row(i).transpose();
                let nrm2 = row.norm_squared();
                if nrm2 == 0.0 {
                    continue;
                }
                let w = &y + &incr[i];
                let excess = row.dot(&w) - self.a_rhs[i];
                let next = if excess > 0.0 { &w - &row * (excess / nrm2) } else { w.clone() };
                incr[i] = &w - &next;
                moved = moved.max((&next - &y).amax());
                y = next;
            }
            if moved < 1e-14 {
                break;
            }
        }
        y
    }
}

/// Output specification `c̄ᵀ y ≥ d`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputHalfspace {
    pub c: DVector<f64>,
    pub d: f64,
}

impl OutputHalfspace {
    pub fn new(c: Vec<f64>, d: f64) -> Result<Self> {
        if c.iter().all(|v| *v == 0.0) {
            return Err(Error::InvalidNetwork("output normal must be nonzero".into()));
        }
        if c.iter().any(|v| !v.is_finite()) || !d.is_finite() {
            return Err(Error::NonFinite("output halfspace"));
        }
        Ok(Self { c: DVector::from_vec(c), d })
    }

    pub fn objective(&self, y: &DVector<f64>) -> f64 {
        self.c.dot(y)
    }
}

/// Interval bounds per layer `0..=n`. For `i ≥ 1` the post-activation
/// bounds are the pre-activation bounds clipped at zero; layer 0 carries the
/// input box in both slots.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronBounds {
    pub pre_lower: Vec<DVector<f64>>,
    pub pre_upper: Vec<DVector<f64>>,
    pub post_lower: Vec<DVector<f64>>,
    pub post_upper: Vec<DVector<f64>>,
}

impl NeuronBounds {
    pub fn layers(&self) -> usize {
        self.pre_lower.len()
    }

    /// Whether every recorded value of `acts` lies inside the bounds.
    pub fn contains(&self, acts: &Activations, tol: f64) -> bool {
        (0..self.layers()).all(|i| {
            let inside = |v: &DVector<f64>, lo: &DVector<f64>, hi: &DVector<f64>| {
                v.iter().zip(lo.iter().zip(hi.iter())).all(|(x, (l, h))| *x >= l - tol && *x <= h + tol)
            };
            let post = if i == 0 { acts.post[0].clone() } else { acts.positive(i) };
            inside(&acts.pre[i], &self.pre_lower[i], &self.pre_upper[i])
                && inside(&post, &self.post_lower[i], &self.post_upper[i])
        })
    }
}

pub fn propagate_bounds(net: &ReluNetwork, bx: &InputBox) -> Result<NeuronBounds> {
    if bx.dim() != net.input_dim() {
        return Err(Error::DimensionMismatch { expected: net.input_dim(), got: bx.dim() });
    }
    let mut bounds = NeuronBounds {
        pre_lower: vec![bx.lo.clone()],
        pre_upper: vec![bx.hi.clone()],
        post_lower: vec![bx.lo.clone()],
        post_upper: vec![bx.hi.clone()],
    };
    for layer in net.layers() {
        let w_pos = layer.weights.map(|v| v.max(0.0));
        let w_neg = layer.weights.map(|v| v.min(0.0));
        let l = bounds.post_lower.last().expect("non-empty");
        let u = bounds.post_upper.last().expect("non-empty");
        let lo = &w_pos * l + &w_neg * u + &layer.bias;
        let hi = &w_pos * u + &w_neg * l + &layer.bias;
        bounds.post_lower.push(lo.map(|v| v.max(0.0)));
        bounds.post_upper.push(hi.map(|v| v.max(0.0)));
        bounds.pre_lower.push(lo);
        bounds.pre_upper.push(hi);
    }
    Ok(bounds)
}

/// The four-layer network from the rank/exactness case study; its minimum
/// over `[-1, 1]²` is `-2` and is attained at all four corners.
pub fn case_study_network() -> ReluNetwork {
    ReluNetwork::from_rows(&[
        (
            vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, 1.0], vec![-1.0, -1.0]],
            vec![0.0; 4],
        ),
        (
            vec![
                vec![1.0, 0.0, 0.0, 0.0],
                vec![-1.0, 1.0, 0.0, 0.0],
                vec![0.0, 0.0, 1.0, 0.0],
                vec![0.0, 0.0, -1.0, 1.0],
            ],
            vec![2.1, 0.0, 2.1, 0.0],
        ),
        (vec![vec![1.0, 1.0, 0.0, 0.0], vec![-1.0, -1.0, 1.0, 1.0]], vec![0.0, 0.0]),
        (vec![vec![-1.0, -1.0]], vec![2.1]),
    ])
    .expect("case-study network is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn case_study_forward_pass() {
        let net = case_study_network();
        let acts = net.forward(&DVector::from_vec(vec![1.0, -1.0])).unwrap();
        assert_eq!(acts.post[1].as_slice(), &[0.0, 2.0, 0.0, 0.0]);
        assert_abs_diff_eq!(acts.post[2].as_slice(), [2.1, 2.0, 2.1, 0.0].as_slice(), epsilon = 1e-12);
        assert_abs_diff_eq!(acts.post[3].as_slice(), [4.1, 0.0].as_slice(), epsilon = 1e-12);
        assert_abs_diff_eq!(acts.output()[0], -2.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_weights_give_bias() {
        let net = ReluNetwork::from_rows(&[(vec![vec![0.0, 0.0], vec![0.0, 0.0]], vec![3.0, -1.0])]).unwrap();
        let acts = net.forward(&DVector::from_vec(vec![0.3, -7.0])).unwrap();
        assert_eq!(acts.pre[1].as_slice(), &[3.0, -1.0]);
        // single layer is the output layer: no clipping
        assert_eq!(acts.post[1].as_slice(), &[3.0, -1.0]);
    }

    #[test]
    fn hidden_identity_clips_negative_input() {
        let net = ReluNetwork::from_rows(&[(vec![vec![1.0]], vec![0.0]), (vec![vec![1.0]], vec![0.0])]).unwrap();
        let acts = net.forward(&DVector::from_vec(vec![-5.0])).unwrap();
        assert_eq!(acts.post[1][0], 0.0);
        assert_eq!(acts.pre[1][0], -5.0);
    }

    #[test]
    fn forward_rejects_wrong_length() {
        let net = case_study_network();
        assert!(matches!(
            net.forward(&DVector::from_vec(vec![1.0])),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let err = ReluNetwork::from_rows(&[(vec![vec![1.0, 2.0]], vec![0.0]), (vec![vec![1.0, 1.0]], vec![0.0])]);
        assert!(err.is_err());
    }

    #[test]
    fn random_network_is_seeded_and_bounded() {
        let a = random_network(&[2, 10, 1], 7).unwrap();
        let b = random_network(&[2, 10, 1], 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, random_network(&[2, 10, 1], 8).unwrap());
        for layer in a.layers() {
            assert!(layer.weights.iter().chain(layer.bias.iter()).all(|v| (-1.0..=1.0).contains(v)));
        }
        let c = random_network(&[3, 4, 4, 2], 1).unwrap();
        let shapes: Vec<_> = c.layers().iter().map(|l| l.weights.shape()).collect();
        assert_eq!(shapes, vec![(4, 3), (4, 4), (2, 4)]);
        assert!(random_network(&[], 0).is_err());
        assert!(random_network(&[3], 0).is_err());
    }

    #[test]
    fn interval_bounds_examples() {
        let bx = InputBox::uniform(2, -1.0, 1.0).unwrap();
        let ident = ReluNetwork::from_rows(&[
            (vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0, 0.0]),
            (vec![vec![1.0, 1.0]], vec![0.0]),
        ])
        .unwrap();
        let b = propagate_bounds(&ident, &bx).unwrap();
        assert_eq!(b.pre_lower[1].as_slice(), &[-1.0, -1.0]);
        assert_eq!(b.pre_upper[1].as_slice(), &[1.0, 1.0]);
        assert_eq!(b.post_lower[1].as_slice(), &[0.0, 0.0]);
        assert_eq!(b.post_upper[1].as_slice(), &[1.0, 1.0]);

        let sum = ReluNetwork::from_rows(&[(vec![vec![1.0, 1.0]], vec![0.0])]).unwrap();
        let b = propagate_bounds(&sum, &bx).unwrap();
        assert_eq!((b.pre_lower[1][0], b.pre_upper[1][0]), (-2.0, 2.0));

        let b = propagate_bounds(&case_study_network(), &bx).unwrap();
        assert_eq!(b.pre_lower[1].as_slice(), &[-2.0; 4]);
        assert_eq!(b.pre_upper[1].as_slice(), &[2.0; 4]);
    }

    #[test]
    fn box_halfspaces_follow_canonical_order() {
        let bx = InputBox::uniform(2, -1.0, 0.1).unwrap();
        let poly = InputPolytope::from_box(&bx);
        assert_eq!(poly.rhs().as_slice(), &[1.0, 1.0, 0.1, 0.1]);
        assert_eq!(poly.matrix()[(0, 0)], -1.0);
        assert_eq!(poly.matrix()[(3, 1)], 1.0);
    }

    #[test]
    fn general_polytope_bounding_box() {
        // triangle x ≥ 0, y ≥ 0, x + y ≤ 1
        let a = DMatrix::from_row_slice(3, 2, &[-1.0, 0.0, 0.0, -1.0, 1.0, 1.0]);
        let poly = InputPolytope::new(a, DVector::from_vec(vec![0.0, 0.0, 1.0])).unwrap();
        let bb = poly.bounding_box();
        assert_abs_diff_eq!(bb.lo.as_slice(), [0.0, 0.0].as_slice(), epsilon = 1e-12);
        assert_abs_diff_eq!(bb.hi.as_slice(), [1.0, 1.0].as_slice(), epsilon = 1e-12);
        let p = poly.project(&DVector::from_vec(vec![1.0, 1.0]));
        assert_abs_diff_eq!(p.as_slice(), [0.5, 0.5].as_slice(), epsilon = 1e-9);
    }

    #[test]
    fn unbounded_polytope_is_rejected() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        assert!(matches!(
            InputPolytope::new(a, DVector::from_vec(vec![1.0])),
            Err(Error::UnboundedInput(_))
        ));
        let empty = DMatrix::<f64>::zeros(0, 2);
        assert!(InputPolytope::new(empty, DVector::zeros(0)).is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let net = random_network(&[2, 5, 1], 3).unwrap();
        let text = net.to_json_string();
        assert!(text.contains("e"));
        assert_eq!(ReluNetwork::from_json_str(&text).unwrap(), net);
    }
}
