//! Flat indexing of the lifted variable
//! `λ = (λ⁺_0, …, λ⁺_n, λ⁻_0, …, λ⁻_n, s)` and expansion of layer-local
//! rows into rows acting on all of `λ`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::network::{Activations, InputPolytope, OutputHalfspace, ReluNetwork};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftingLayout {
    dims: Vec<usize>,
    offsets: Vec<usize>,
    neurons: usize,
    slacks: usize,
}

impl LiftingLayout {
    pub fn new(dims: &[usize], num_slacks: usize) -> Self {
        let mut offsets = Vec::with_capacity(dims.len());
        let mut acc = 0;
        for &h in dims {
            offsets.push(acc);
            acc += h;
        }
        Self { dims: dims.to_vec(), offsets, neurons: acc, slacks: num_slacks }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// `N = Σ h_i`, counting input coordinates as neurons.
    pub fn neurons(&self) -> usize {
        self.neurons
    }

    pub fn slacks(&self) -> usize {
        self.slacks
    }

    /// Length of `λ`, `2N + m`.
    pub fn dim(&self) -> usize {
        2 * self.neurons + self.slacks
    }

    /// Index of the homogenising `1` in the moment matrix.
    pub fn corner(&self) -> usize {
        self.dim()
    }

    pub fn pos(&self, layer: usize, j: usize) -> usize {
        debug_assert!(j < self.dims[layer]);
        self.offsets[layer] + j
    }

    pub fn neg(&self, layer: usize, j: usize) -> usize {
        debug_assert!(j < self.dims[layer]);
        self.neurons + self.offsets[layer] + j
    }

    pub fn slack(&self, k: usize) -> usize {
        debug_assert!(k < self.slacks);
        2 * self.neurons + k
    }

    /// Same neuron blocks with `extra` more slack columns appended.
    pub fn with_extra_slacks(&self, extra: usize) -> Self {
        Self { slacks: self.slacks + extra, ..self.clone() }
    }

    /// Every `(layer, neuron)` pair in layer-major order.
    pub fn neuron_ids(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.dims.iter().enumerate().flat_map(|(i, &h)| (0..h).map(move |j| (i, j)))
    }

    /// Assembles `λ` from a forward pass and explicit slack values.
    pub fn lift(&self, acts: &Activations, slacks: &[f64]) -> Result<DVector<f64>> {
        if slacks.len() != self.slacks {
            return Err(Error::DimensionMismatch { expected: self.slacks, got: slacks.len() });
        }
        let mut lam = DVector::zeros(self.dim());
        for (i, &h) in self.dims.iter().enumerate() {
            let (p, n) = (acts.positive(i), acts.negative(i));
            for j in 0..h {
                lam[self.pos(i, j)] = p[j];
                lam[self.neg(i, j)] = n[j];
            }
        }
        for (k, &s) in slacks.iter().enumerate() {
            lam[self.slack(k)] = s;
        }
        Ok(lam)
    }

    /// Input in `λ` coordinates: `λ⁺_0 − λ⁻_0`.
    pub fn input_of(&self, lam: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.dims[0], |j, _| lam[self.pos(0, j)] - lam[self.neg(0, j)])
    }
}

pub fn build_layout(net: &ReluNetwork, num_slacks: usize) -> LiftingLayout {
    LiftingLayout::new(&net.dims(), num_slacks)
}

/// Sparse row `Σ coeffs · λ` with right-hand side `rhs`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LiftedRow {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl LiftedRow {
    /// Builds a row, summing duplicate indices and dropping zeros.
    pub fn new(entries: impl IntoIterator<Item = (usize, f64)>, rhs: f64) -> Self {
        let mut coeffs: Vec<(usize, f64)> = entries.into_iter().collect();
        coeffs.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
        for (i, v) in coeffs {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => merged.push((i, v)),
            }
        }
        merged.retain(|e| e.1 != 0.0);
        Self { coeffs: merged, rhs }
    }

    pub fn coeff(&self, index: usize) -> f64 {
        self.coeffs.iter().find(|e| e.0 == index).map_or(0.0, |e| e.1)
    }

    pub fn dot(&self, lam: &DVector<f64>) -> f64 {
        self.coeffs.iter().map(|&(i, v)| v * lam[i]).sum()
    }

    /// Row residual `coeffs·λ − rhs`.
    pub fn residual(&self, lam: &DVector<f64>) -> f64 {
        self.dot(lam) - self.rhs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|&(i, v)| (i, v * factor)).collect(), rhs: self.rhs * factor }
    }

    /// Row restricted to indices below `limit` (drops slack columns when
    /// `limit = 2N`).
    pub fn truncated(&self, limit: usize) -> Self {
        Self { coeffs: self.coeffs.iter().copied().filter(|e| e.0 < limit).collect(), rhs: self.rhs }
    }
}

/// `Ā_row (λ⁺_0 − λ⁻_0) + s_k = a_i`; with `slack = None` the row is the
/// slack-free form of `Ā_row x ≤ a_i`.
pub fn expand_input_row(a_row: &[f64], a_i: f64, layout: &LiftingLayout, slack: Option<usize>) -> Result<LiftedRow> {
    if a_row.len() != layout.dims()[0] {
        return Err(Error::DimensionMismatch { expected: layout.dims()[0], got: a_row.len() });
    }
    let mut entries: Vec<(usize, f64)> = Vec::with_capacity(2 * a_row.len() + 1);
    for (j, &v) in a_row.iter().enumerate() {
        entries.push((layout.pos(0, j), v));
        entries.push((layout.neg(0, j), -v));
    }
    if let Some(k) = slack {
        if k >= layout.slacks() {
            return Err(Error::SlackOutOfRange { index: k, count: layout.slacks() });
        }
        entries.push((layout.slack(k), 1.0));
    }
    Ok(LiftedRow::new(entries, a_i))
}

/// Every input row of `input`, row `k` paired with slack `k`.
pub fn expand_input_rows(input: &InputPolytope, layout: &LiftingLayout, with_slacks: bool) -> Result<Vec<LiftedRow>> {
    (0..input.num_rows())
        .map(|k| {
            let row: Vec<f64> = input.matrix().row(k).iter().copied().collect();
            expand_input_row(&row, input.rhs()[k], layout, with_slacks.then_some(k))
        })
        .collect()
}

/// `λ⁺_{i+1,j} − λ⁻_{i+1,j} − W[i]_{j,*} λ⁺_{i,*} = b[i]_j`. The input
/// layer can be negative, so for `i = 0` the weights act on `λ⁺_0 − λ⁻_0`.
pub fn expand_network_row(net: &ReluNetwork, layer: usize, neuron: usize, layout: &LiftingLayout) -> Result<LiftedRow> {
    let l = net.layers().get(layer).ok_or(Error::LayerOutOfRange { layer, layers: net.depth() })?;
    if neuron >= l.weights.nrows() {
        return Err(Error::DimensionMismatch { expected: l.weights.nrows(), got: neuron });
    }
    let mut entries = vec![(layout.pos(layer + 1, neuron), 1.0), (layout.neg(layer + 1, neuron), -1.0)];
    for (k, &w) in l.weights.row(neuron).iter().enumerate() {
        entries.push((layout.pos(layer, k), -w));
        if layer == 0 {
            entries.push((layout.neg(0, k), w));
        }
    }
    Ok(LiftedRow::new(entries, l.bias[neuron]))
}

pub fn expand_network_rows(net: &ReluNetwork, layout: &LiftingLayout) -> Result<Vec<LiftedRow>> {
    let mut rows = Vec::new();
    for (i, layer) in net.layers().iter().enumerate() {
        for j in 0..layer.weights.nrows() {
            rows.push(expand_network_row(net, i, j, layout)?);
        }
    }
    Ok(rows)
}

/// `c̄ᵀ(λ⁺_n − λ⁻_n)` as a row; the right-hand side is unused.
pub fn objective_vector(output: &OutputHalfspace, layout: &LiftingLayout) -> Result<LiftedRow> {
    let n = layout.dims().len() - 1;
    if output.c.len() != layout.dims()[n] {
        return Err(Error::DimensionMismatch { expected: layout.dims()[n], got: output.c.len() });
    }
    let entries = output.c.iter().enumerate().flat_map(|(j, &c)| [(layout.pos(n, j), c), (layout.neg(n, j), -c)]);
    Ok(LiftedRow::new(entries, 0.0))
}
