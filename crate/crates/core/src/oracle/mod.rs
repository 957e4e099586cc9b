//! Exact verification by activation-pattern enumeration.
//!
//! Fixing the state of every hidden ReLU turns the network into an affine
//! map on the region where that state holds, so the verification minimum is
//! the smallest value over all feasible pattern LPs. The LPs are solved by
//! the dense simplex in [`simplex`], which shares no code with the conic
//! solver.

pub mod simplex;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::network::{Activations, InputBox, InputPolytope, NeuronBounds, OutputHalfspace, ReluNetwork};
use simplex::{LinearProgram, LpOutcome};

/// Largest number of hidden neurons `exact_verify` will enumerate.
pub const MAX_HIDDEN: usize = 22;

/// ACTIVE/INACTIVE flag per hidden neuron, layer-major over layers `1..n`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActivationPattern(pub Vec<bool>);

impl ActivationPattern {
    /// Pattern number `index` in lexicographic order (INACTIVE < ACTIVE,
    /// first hidden neuron most significant).
    pub fn from_index(index: u64, hidden: usize) -> Self {
        Self((0..hidden).map(|k| index >> (hidden - 1 - k) & 1 == 1).collect())
    }

    /// The pattern realised by a forward pass (`ẑ ≥ 0` counts as ACTIVE).
    pub fn of_forward_pass(net: &ReluNetwork, acts: &Activations) -> Self {
        Self((1..net.depth()).flat_map(|i| acts.pre[i].iter().map(|&v| v >= 0.0).collect::<Vec<_>>()).collect())
    }

    /// Whether every neuron's pre-activation sign agrees with the pattern up
    /// to `tol` (neurons sitting at zero are consistent with both states).
    pub fn consistent_with(&self, net: &ReluNetwork, acts: &Activations, tol: f64) -> bool {
        let mut k = 0;
        for i in 1..net.depth() {
            for &v in acts.pre[i].iter() {
                let ok = if self.0[k] { v >= -tol } else { v <= tol };
                if !ok {
                    return false;
                }
                k += 1;
            }
        }
        true
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// LP over the input for one pattern; the network objective is
/// `lp.c · x + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternLp {
    pub lp: LinearProgram,
    pub offset: f64,
}

pub fn pattern_lp(
    net: &ReluNetwork,
    input: &InputPolytope,
    output: &OutputHalfspace,
    pattern: &ActivationPattern,
) -> Result<PatternLp> {
    if pattern.len() != net.hidden_count() {
        return Err(Error::DimensionMismatch { expected: net.hidden_count(), got: pattern.len() });
    }
    if output.c.len() != net.output_dim() {
        return Err(Error::DimensionMismatch { expected: net.output_dim(), got: output.c.len() });
    }
    let h0 = net.input_dim();
    let mut lp = LinearProgram::free_vars(vec![0.0; h0], input.matrix(), input.rhs());
    // post-activation of the current layer as an affine map of x
    let mut lin = DMatrix::<f64>::identity(h0, h0);
    let mut off = DVector::<f64>::zeros(h0);
    let n = net.depth();
    let mut k = 0;
    for (i, layer) in net.layers().iter().enumerate() {
        let mut pre_lin = &layer.weights * &lin;
        let mut pre_off = &layer.weights * &off + &layer.bias;
        if i + 1 < n {
            for j in 0..pre_lin.nrows() {
                let row: Vec<f64> = pre_lin.row(j).iter().copied().collect();
                if pattern.0[k] {
                    lp.push_row(row.iter().map(|v| -v).collect(), pre_off[j]);
                } else {
                    lp.push_row(row, -pre_off[j]);
                    pre_lin.row_mut(j).fill(0.0);
                    pre_off[j] = 0.0;
                }
                k += 1;
            }
        }
        lin = pre_lin;
        off = pre_off;
    }
    lp.c = (lin.transpose() * &output.c).iter().copied().collect();
    Ok(PatternLp { lp, offset: output.c.dot(&off) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub opt: f64,
    pub argmin: DVector<f64>,
    pub pattern: ActivationPattern,
    pub patterns_feasible: usize,
}

impl OracleResult {
    /// Safe iff the verification minimum is at least the output threshold.
    pub fn is_safe(&self, output: &OutputHalfspace) -> bool {
        self.opt >= output.d
    }
}

#[derive(Debug, Clone, Default)]
pub struct OracleOptions {
    /// Skip patterns that contradict interval bounds before solving their LP.
    pub prune_with: Option<NeuronBounds>,
}

pub fn exact_verify(net: &ReluNetwork, input: &InputPolytope, output: &OutputHalfspace) -> Result<OracleResult> {
    exact_verify_with(net, input, output, &OracleOptions::default())
}

pub fn exact_verify_with(
    net: &ReluNetwork,
    input: &InputPolytope,
    output: &OutputHalfspace,
    opts: &OracleOptions,
) -> Result<OracleResult> {
    if input.dim() != net.input_dim() {
        return Err(Error::DimensionMismatch { expected: net.input_dim(), got: input.dim() });
    }
    let hidden = net.hidden_count();
    if hidden > MAX_HIDDEN {
        return Err(Error::BudgetExceeded { hidden, limit: MAX_HIDDEN });
    }
    let stable: Option<Vec<(bool, bool)>> = opts.prune_with.as_ref().map(|b| {
        (1..net.depth())
            .flat_map(|i| {
                b.pre_lower[i].iter().zip(b.pre_upper[i].iter()).map(|(&l, &u)| (u >= 0.0, l <= 0.0)).collect::<Vec<_>>()
            })
            .collect()
    });

    let mut best: Option<(f64, Vec<f64>, ActivationPattern)> = None;
    let mut feasible = 0;
    for index in 0..1u64 << hidden {
        let pattern = ActivationPattern::from_index(index, hidden);
        if let Some(st) = &stable {
            let contradicts = pattern.0.iter().zip(st).any(|(&on, &(can_on, can_off))| if on { !can_on } else { !can_off });
            if contradicts {
                continue;
            }
        }
        let plp = pattern_lp(net, input, output, &pattern)?;
        match simplex::solve(&plp.lp) {
            LpOutcome::Optimal { value, x } => {
                feasible += 1;
                let value = value + plp.offset;
                if best.as_ref().is_none_or(|(v, _, _)| value < *v) {
                    best = Some((value, x, pattern));
                }
            }
            LpOutcome::Infeasible => {}
            LpOutcome::Unbounded => return Err(Error::LpUnbounded),
        }
    }
    let (_, x, pattern) = best.ok_or(Error::UnboundedInput("no activation pattern is feasible".into()))?;
    let argmin = DVector::from_vec(x);
    // report the objective of the actual forward pass at the LP vertex
    let opt = output.objective(&net.eval(&argmin)?);
    Ok(OracleResult { opt, argmin, pattern, patterns_feasible: feasible })
}

/// Smallest objective `c̄ᵀ f(x)` over `count` points of the box: the corners
/// first, then a Halton sequence under a seeded random shift. Sample sets are
/// nested in `count`, so the bound never increases as `count` grows.
pub fn sample_upper_bound(
    net: &ReluNetwork,
    bx: &InputBox,
    output: &OutputHalfspace,
    count: usize,
    seed: u64,
) -> Result<f64> {
    sample_points(bx, count, seed)
        .iter()
        .map(|x| net.eval(x).map(|y| output.objective(&y)))
        .try_fold(f64::INFINITY, |m, v| v.map(|v| m.min(v)))
}

pub fn sample_points(bx: &InputBox, count: usize, seed: u64) -> Vec<DVector<f64>> {
    let dim = bx.dim();
    let mut pts: Vec<DVector<f64>> = if dim <= 16 { bx.corners() } else { Vec::new() };
    pts.truncate(count);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    let bases = first_primes(dim);
    let mut index = 1u64;
    while pts.len() < count {
        let p = DVector::from_fn(dim, |j, _| {
            let u = (radical_inverse(index, bases[j]) + shift[j]).fract();
            bx.lo[j] + u * (bx.hi[j] - bx.lo[j])
        });
        pts.push(p);
        index += 1;
    }
    pts
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

fn first_primes(n: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(n);
    let mut k = 2u64;
    while primes.len() < n {
        if primes.iter().take_while(|&&p| p * p <= k).all(|&p| !k.is_multiple_of(p)) {
            primes.push(k);
        }
        k += 1;
    }
    primes
}
