#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relucert::lifting::LiftingLayout;
use relucert::network::{InputBox, InputPolytope, ReluNetwork};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_point(bx: &InputBox, rng: &mut impl Rng) -> DVector<f64> {
    DVector::from_fn(bx.dim(), |j, _| rng.gen_range(bx.lo[j]..=bx.hi[j]))
}

/// Lifted forward pass at `x`, with input slacks `a − A x`.
pub fn lifted_point(net: &ReluNetwork, input: &InputPolytope, layout: &LiftingLayout, x: &DVector<f64>) -> DVector<f64> {
    let acts = net.forward(x).unwrap();
    let slacks: Vec<f64> = if layout.slacks() == 0 {
        Vec::new()
    } else {
        (input.rhs() - input.matrix() * x).iter().copied().collect()
    };
    layout.lift(&acts, &slacks).unwrap()
}

/// `[λ; ξ]` with the corner entry last.
pub fn factor(lam: &DVector<f64>, xi: f64) -> DVector<f64> {
    let mut v = lam.scale(xi).resize_vertically(lam.len() + 1, 0.0);
    v[lam.len()] = xi;
    v
}

pub fn gram(factors: &[DVector<f64>]) -> DMatrix<f64> {
    let n = factors[0].len();
    factors.iter().fold(DMatrix::zeros(n, n), |m, f| m + f * f.transpose())
}

/// Positive weights with unit sum of squares.
pub fn unit_weights(k: usize, rng: &mut impl Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
    let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    raw.into_iter().map(|v| v / norm).collect()
}

/// Naive min over a regular `side × side` grid of the box.
pub fn grid_min(net: &ReluNetwork, bx: &InputBox, c: &DVector<f64>, side: usize) -> f64 {
    let mut best = f64::INFINITY;
    for a in 0..side {
        for b in 0..side {
            let t = [a as f64 / (side - 1) as f64, b as f64 / (side - 1) as f64];
            let x = DVector::from_fn(2, |j, _| bx.lo[j] + t[j] * (bx.hi[j] - bx.lo[j]));
            best = best.min(c.dot(&net.eval(&x).unwrap()));
        }
    }
    best
}

/// Min of a one-hidden-layer, two-input network over a box: the function is
/// affine on every cell of the line arrangement, so a vertex attains it.
pub fn vertex_min_2d(net: &ReluNetwork, bx: &InputBox, c: &DVector<f64>) -> f64 {
    assert_eq!(net.depth(), 2);
    let first = &net.layers()[0];
    let mut lines: Vec<([f64; 2], f64)> = (0..first.weights.nrows())
        .map(|r| ([first.weights[(r, 0)], first.weights[(r, 1)]], -first.bias[r]))
        .collect();
    for j in 0..2 {
        let mut e = [0.0; 2];
        e[j] = 1.0;
        lines.push((e, bx.lo[j]));
        lines.push((e, bx.hi[j]));
    }
    let mut best = f64::INFINITY;
    for p in 0..lines.len() {
        for q in p + 1..lines.len() {
            let ((a, s), (b, t)) = (lines[p], lines[q]);
            let det = a[0] * b[1] - a[1] * b[0];
            if det.abs() < 1e-12 {
                continue;
            }
            let x = DVector::from_vec(vec![(s * b[1] - t * a[1]) / det, (a[0] * t - b[0] * s) / det]);
            if bx.contains(&x, 1e-12) {
                let clipped = DVector::from_fn(2, |j, _| x[j].clamp(bx.lo[j], bx.hi[j]));
                best = best.min(c.dot(&net.eval(&clipped).unwrap()));
            }
        }
    }
    best
}
