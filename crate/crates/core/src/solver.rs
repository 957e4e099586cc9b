//! Over-relaxed consensus ADMM for linear objectives over symmetric matrices
//! in PSD, the non-negative orthant, or their intersection.
//!
//! The matrix is vectorised with `svec` (off-diagonals scaled by √2) and
//! every inequality `⟨P, M⟩ ≥ q` gets a slack `t ≥ 0`, so the affine set is
//! `E w = f` with `w = (svec(M), t)`. The iteration keeps one copy of `w` in
//! the affine set and one copy per cone:
//!
//! ```text
//! x  = Π_E(½(z₁ − u₁ + z₂ − u₂) − c/(2ρ))
//! zᵢ = Π_Kᵢ(x̂ᵢ + uᵢ),   uᵢ += x̂ᵢ − zᵢ
//! ```
//!
//! with `K₁ = S⁺ × ℝ₊` and `K₂ = 𝒩 × ℝ₊`. Rows of `E` are normalised and
//! `(E Eᵀ)⁺` is formed once, so the affine projection is exact and changing
//! `ρ` costs nothing.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::formulations::{Cone, ConicProgram, Sense};

const SQRT2: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_iter: usize,
    /// Initial penalty; adapted to balance primal and dual residuals.
    pub rho: f64,
    pub adaptive_rho: bool,
    pub check_interval: usize,
    /// Over-relaxation factor in `(0, 2)`.
    pub alpha: f64,
    /// Anderson acceleration memory; zero disables it.
    pub anderson_memory: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { eps_abs: 1e-5, eps_rel: 1e-5, max_iter: 200_000, rho: 1.0, adaptive_rho: true, check_interval: 10, alpha: 1.6, anderson_memory: 10 }
    }
}

impl SolverConfig {
    pub fn with_tolerance(eps: f64) -> Self {
        Self { eps_abs: eps, eps_rel: eps, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_abs > 0.0 && self.eps_rel > 0.0) {
            return Err(Error::Config("solver tolerances must be positive".into()));
        }
        if !(self.rho > 0.0) || !(self.alpha > 0.0 && self.alpha < 2.0) || self.check_interval == 0 {
            return Err(Error::Config("invalid solver parameters".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    InfeasibleLikely,
}

impl SolveStatus {
    pub fn name(self) -> &'static str {
        match self {
            Self::Optimal => "OPTIMAL",
            Self::MaxIter => "MAX_ITER",
            Self::InfeasibleLikely => "INFEASIBLE_LIKELY",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    /// Affine-feasible iterate; within the residuals of each cone.
    pub m: DMatrix<f64>,
    pub objective: f64,
    /// Dual objective estimate at the final iterate.
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub status: SolveStatus,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Frobenius-nearest PSD matrix: eigenvalues clipped at zero.
pub fn project_psd(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !s.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("project_psd input"));
    }
    let sym = (s + s.transpose()) * 0.5;
    Ok(psd_part(sym))
}

fn psd_part(sym: DMatrix<f64>) -> DMatrix<f64> {
    let n = sym.nrows();
    let eig = SymmetricEigen::new(sym);
    let mut out = DMatrix::zeros(n, n);
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam > 0.0 {
            let v = eig.eigenvectors.column(k);
            out.ger(lam, &v, &v, 1.0);
        }
    }
    out
}

/// Entrywise `max(S, 0)`.
pub fn project_nonneg(s: &DMatrix<f64>) -> DMatrix<f64> {
    s.map(|v| v.max(0.0))
}

/// Position of entry `(i, j)`, `i ≤ j`, in the upper-triangle packing.
fn tri_index(i: usize, j: usize) -> usize {
    j * (j + 1) / 2 + i
}

pub fn svec(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows();
    let mut v = DVector::zeros(n * (n + 1) / 2);
    for j in 0..n {
        for i in 0..=j {
            v[tri_index(i, j)] = if i == j { m[(i, i)] } else { SQRT2 * 0.5 * (m[(i, j)] + m[(j, i)]) };
        }
    }
    v
}

pub fn smat(v: &[f64], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let x = v[tri_index(i, j)];
            if i == j {
                m[(i, i)] = x;
            } else {
                m[(i, j)] = x / SQRT2;
                m[(j, i)] = x / SQRT2;
            }
        }
    }
    m
}

type SparseRow = Vec<(usize, f64)>;

/// The affine set `E w = f` with normalised rows and a cached `(E Eᵀ)⁺`.
struct AffineSet {
    rows: Vec<SparseRow>,
    rhs: DVector<f64>,
    gram_pinv: DMatrix<f64>,
}

impl AffineSet {
    fn new(mut rows: Vec<SparseRow>, mut rhs: Vec<f64>, len: usize) -> Self {
        for (row, b) in rows.iter_mut().zip(rhs.iter_mut()) {
            let norm = row.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|e| e.1 /= norm);
                *b /= norm;
            }
        }
        let r = rows.len();
        // scatter each row once for the Gram products
        let mut scratch = vec![0.0; len];
        let mut gram = DMatrix::zeros(r, r);
        for a in 0..r {
            for &(k, v) in &rows[a] {
                scratch[k] = v;
            }
            for b in a..r {
                let g: f64 = rows[b].iter().map(|&(k, v)| v * scratch[k]).sum();
                gram[(a, b)] = g;
                gram[(b, a)] = g;
            }
            for &(k, _) in &rows[a] {
                scratch[k] = 0.0;
            }
        }
        let eig = SymmetricEigen::new(gram);
        let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let cut = top * 1e-11;
        let mut pinv = DMatrix::zeros(r, r);
        for (k, &lam) in eig.eigenvalues.iter().enumerate() {
            if lam > cut {
                let v = eig.eigenvectors.column(k);
                pinv.ger(1.0 / lam, &v, &v, 1.0);
            }
        }
        Self { rows, rhs: DVector::from_vec(rhs), gram_pinv: pinv }
    }

    fn apply(&self, w: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.rows.len(), self.rows.iter().map(|row| row.iter().map(|&(k, v)| v * w[k]).sum()))
    }

    fn apply_transpose_add(&self, y: &DVector<f64>, out: &mut [f64], factor: f64) {
        for (row, &yi) in self.rows.iter().zip(y.iter()) {
            let s = factor * yi;
            if s != 0.0 {
                for &(k, v) in row {
                    out[k] += s * v;
                }
            }
        }
    }

    /// Euclidean projection of `w` onto `{E w = f}`, in place.
    fn project(&self, w: &mut [f64]) {
        let r = self.apply(w) - &self.rhs;
        let y = &self.gram_pinv * r;
        self.apply_transpose_add(&y, w, -1.0);
    }

    /// Least-squares multipliers `ν = (E Eᵀ)⁺ E g` and the part of `g`
    /// outside the row space of `E`.
    fn split(&self, g: &[f64]) -> (DVector<f64>, Vec<f64>) {
        let nu = &self.gram_pinv * self.apply(g);
        let mut rest = g.to_vec();
        self.apply_transpose_add(&nu, &mut rest, -1.0);
        (nu, rest)
    }
}

/// The cone pieces of one consensus copy.
#[derive(Clone, Copy, PartialEq)]
enum MatrixCone {
    Free,
    Psd,
    Mask,
}

struct Layout {
    n: usize,
    nv: usize,
    nonneg_mask: Vec<bool>,
    /// Orthonormal basis of the PSD face the equalities confine `M` to.
    face: Option<DMatrix<f64>>,
}

impl Layout {
    fn project(&self, cone: MatrixCone, w: &mut [f64]) {
        let (mat, slack) = w.split_at_mut(self.nv);
        slack.iter_mut().for_each(|v| *v = v.max(0.0));
        match cone {
            MatrixCone::Free => {}
            MatrixCone::Mask => {
                for (v, &m) in mat.iter_mut().zip(&self.nonneg_mask) {
                    if m && *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            MatrixCone::Psd => {
                let m = smat(mat, self.n);
                let p = match &self.face {
                    Some(q) => {
                        let inner = psd_part(q.transpose() * m * q);
                        q * inner * q.transpose()
                    }
                    None => psd_part(m),
                };
                mat.copy_from_slice(svec(&p).as_slice());
            }
        }
    }
}

/// Vectors `u = [V; −v]` with `uᵀ M u = 0` for every PSD `M` that satisfies
/// both `Vλ = v` and `⟨VᵀV, Λ⟩ = v²` (with the corner fixed to one).
pub fn implied_null_vectors(prog: &ConicProgram) -> Vec<DVector<f64>> {
    use std::collections::HashMap;
    if !prog.corner_fix {
        return Vec::new();
    }
    let corner = prog.corner();
    let mut linear: HashMap<Vec<usize>, Vec<(Vec<f64>, f64)>> = HashMap::new();
    for c in prog.constraints.iter().filter(|c| c.sense == Sense::Eq) {
        if !c.coeffs.entries.is_empty() && c.coeffs.entries.iter().all(|&(i, j, _)| j == corner && i < corner) {
            let support = c.coeffs.entries.iter().map(|e| e.0).collect();
            let coeffs = c.coeffs.entries.iter().map(|e| 2.0 * e.2).collect();
            linear.entry(support).or_default().push((coeffs, c.rhs));
        }
    }
    let mut out = Vec::new();
    for c in prog.constraints.iter().filter(|c| c.sense == Sense::Eq) {
        if c.coeffs.entries.is_empty() || c.coeffs.entries.iter().any(|e| e.1 == corner) {
            continue;
        }
        let mut support: Vec<usize> = c.coeffs.entries.iter().flat_map(|e| [e.0, e.1]).collect();
        support.sort_unstable();
        support.dedup();
        let Some(cands) = linear.get(&support) else { continue };
        for (coeffs, v) in cands {
            let row = crate::lifting::LiftedRow::new(support.iter().copied().zip(coeffs.iter().copied()), *v);
            let quad = crate::formulations::SymSparse::self_quad(&row);
            let scale = 1.0 + c.rhs.abs();
            let matches = quad.entries.len() == c.coeffs.entries.len()
                && quad.entries.iter().zip(&c.coeffs.entries).all(|(a, b)| a.0 == b.0 && a.1 == b.1 && (a.2 - b.2).abs() <= 1e-12 * (1.0 + a.2.abs()))
                && (v * v - c.rhs).abs() <= 1e-12 * scale;
            if matches {
                let mut u = DVector::zeros(prog.dim);
                for (&k, &w) in support.iter().zip(coeffs) {
                    u[k] = w;
                }
                u[corner] = -v;
                out.push(u);
                break;
            }
        }
    }
    out
}

/// Orthonormal basis of the complement of [`implied_null_vectors`], or
/// `None` when there is nothing to reduce.
fn face_basis(prog: &ConicProgram) -> Option<DMatrix<f64>> {
    let nulls = implied_null_vectors(prog);
    if nulls.is_empty() {
        return None;
    }
    let n = prog.dim;
    let mut gram = DMatrix::zeros(n, n);
    for u in &nulls {
        let u = u / u.norm();
        gram.ger(1.0, &u, &u, 1.0);
    }
    let eig = SymmetricEigen::new(gram);
    let top = eig.eigenvalues.amax();
    let keep: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k] <= 1e-9 * top).collect();
    if keep.len() == n {
        return None;
    }
    Some(DMatrix::from_fn(n, keep.len(), |i, j| eig.eigenvectors[(i, keep[j])]))
}

struct Admm<'a> {
    affine: &'a AffineSet,
    layout: &'a Layout,
    c: &'a [f64],
    alpha: f64,
    len: usize,
    cone1: MatrixCone,
    cone2: MatrixCone,
}

impl Admm<'_> {
    /// One over-relaxed iteration from `state = (z₁, u₁, z₂, u₂)`; writes the
    /// affine iterate to `x` and the new state to `out`.
    fn step(&self, state: &[f64], rho: f64, x: &mut [f64], out: &mut [f64]) {
        let len = self.len;
        let (z1, rest) = state.split_at(len);
        let (u1, rest) = rest.split_at(len);
        let (z2, u2) = rest.split_at(len);
        for k in 0..len {
            x[k] = 0.5 * (z1[k] - u1[k] + z2[k] - u2[k]) - self.c[k] / (2.0 * rho);
        }
        self.affine.project(x);
        for (block, cone) in [(0, self.cone1), (2, self.cone2)] {
            let z = &state[block * len..(block + 1) * len];
            let u = &state[(block + 1) * len..(block + 2) * len];
            let (zo, uo) = out[block * len..(block + 2) * len].split_at_mut(len);
            for k in 0..len {
                let xh = self.alpha * x[k] + (1.0 - self.alpha) * z[k];
                uo[k] = xh + u[k];
                zo[k] = uo[k];
            }
            self.layout.project(cone, zo);
            for k in 0..len {
                uo[k] -= zo[k];
            }
        }
    }
}

/// Type-II Anderson acceleration over a fixed-point map, with a ring buffer
/// of iterate and residual differences and an incrementally kept Gram matrix.
struct Anderson {
    memory: usize,
    df: Vec<Vec<f64>>,
    dg: Vec<Vec<f64>>,
    gram: DMatrix<f64>,
    filled: usize,
    slot: usize,
    last_f: Vec<f64>,
    last_g: Vec<f64>,
    has_last: bool,
}

impl Anderson {
    fn new(memory: usize, dim: usize) -> Self {
        Self {
            memory,
            df: vec![vec![0.0; dim]; memory],
            dg: vec![vec![0.0; dim]; memory],
            gram: DMatrix::zeros(memory, memory),
            filled: 0,
            slot: 0,
            last_f: vec![0.0; if memory > 0 { dim } else { 0 }],
            last_g: vec![0.0; if memory > 0 { dim } else { 0 }],
            has_last: false,
        }
    }

    fn reset(&mut self) {
        self.filled = 0;
        self.slot = 0;
        self.has_last = false;
    }

    /// Records `f = T(s)`, `g = f − s` and writes the extrapolated point to
    /// `out`; returns false when no extrapolation is available.
    fn extrapolate(&mut self, f: &[f64], g: &[f64], out: &mut [f64]) -> bool {
        if self.memory == 0 {
            return false;
        }
        if self.has_last {
            let s = self.slot;
            for k in 0..f.len() {
                self.df[s][k] = f[k] - self.last_f[k];
                self.dg[s][k] = g[k] - self.last_g[k];
            }
            self.filled = (self.filled + 1).min(self.memory);
            for a in 0..self.filled {
                let v = dot(&self.dg[a], &self.dg[s]);
                self.gram[(a, s)] = v;
                self.gram[(s, a)] = v;
            }
            self.slot = (s + 1) % self.memory;
        }
        self.last_f.copy_from_slice(f);
        self.last_g.copy_from_slice(g);
        self.has_last = true;
        let k = self.filled;
        if k == 0 {
            return false;
        }
        let mut gram = self.gram.view((0, 0), (k, k)).into_owned();
        let rhs = DVector::from_fn(k, |a, _| dot(&self.dg[a], g));
        let reg = 1e-10 * gram.diagonal().amax().max(1e-300);
        for a in 0..k {
            gram[(a, a)] += reg;
        }
        let Some(chol) = gram.cholesky() else { return false };
        let gamma = chol.solve(&rhs);
        if !gamma.iter().all(|v| v.is_finite()) {
            return false;
        }
        out.copy_from_slice(f);
        for (a, &w) in gamma.iter().enumerate() {
            for (o, d) in out.iter_mut().zip(&self.df[a]) {
                *o -= w * d;
            }
        }
        true
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn solve(prog: &ConicProgram, cfg: &SolverConfig) -> Result<SolveResult> {
    solve_logged(prog, cfg, None)
}

/// [`solve`] that also writes `iter,primal,dual,gap,objective,rho` CSV lines
/// at every residual check.
pub fn solve_logged(prog: &ConicProgram, cfg: &SolverConfig, mut log: Option<&mut dyn Write>) -> Result<SolveResult> {
    cfg.validate()?;
    if prog.cone == Cone::CompletelyPositive {
        return Err(Error::UnsupportedCone(prog.cone));
    }
    let n = prog.dim;
    let nv = n * (n + 1) / 2;
    if prog.objective.max_index().unwrap_or(0) >= n || prog.constraints.iter().any(|c| c.coeffs.max_index().unwrap_or(0) >= n) {
        return Err(Error::DimensionMismatch { expected: n, got: n + 1 });
    }
    let svec_entry = |i: usize, j: usize, v: f64| if i == j { (tri_index(i, i), v) } else { (tri_index(i, j), SQRT2 * v) };

    let mut nonneg_mask = vec![prog.cone.includes_nonneg(); nv];
    let mut rows: Vec<SparseRow> = Vec::new();
    let mut rhs = Vec::new();
    let mut slack_rows = Vec::new();
    for c in &prog.constraints {
        let row: SparseRow = c.coeffs.entries.iter().map(|&(i, j, v)| svec_entry(i, j, v)).collect();
        match c.sense {
            Sense::Eq => {
                rows.push(row);
                rhs.push(c.rhs);
            }
            Sense::Ge => {
                if c.rhs == 0.0 && row.len() == 1 && row[0].1 > 0.0 {
                    nonneg_mask[row[0].0] = true;
                } else {
                    slack_rows.push(rows.len());
                    rows.push(row);
                    rhs.push(c.rhs);
                }
            }
        }
    }
    if prog.corner_fix {
        rows.push(vec![(tri_index(n - 1, n - 1), 1.0)]);
        rhs.push(1.0);
    }
    let slacks = slack_rows.len();
    for (k, &r) in slack_rows.iter().enumerate() {
        rows[r].push((nv + k, -1.0));
    }
    let len = nv + slacks;
    let affine = AffineSet::new(rows, rhs, len);
    let face = if prog.corner_fix && prog.cone.includes_psd() { face_basis(prog) } else { None };
    let layout = Layout { n, nv, nonneg_mask, face };

    let mut c = vec![0.0; len];
    for &(i, j, v) in &prog.objective.entries {
        let (k, s) = svec_entry(i, j, v);
        c[k] += s;
    }
    let c_norm = norm(&c);

    let cone1 = if prog.cone.includes_psd() { MatrixCone::Psd } else { MatrixCone::Free };
    let cone2 = MatrixCone::Mask;

    let admm = Admm { affine: &affine, layout: &layout, c: &c, alpha: cfg.alpha, len, cone1, cone2 };
    let mut rho = cfg.rho;
    let mut x = vec![0.0; len];
    // state (z₁, u₁, z₂, u₂)
    let mut state = vec![0.0; 4 * len];
    let mut next = vec![0.0; 4 * len];
    let mut anderson = Anderson::new(cfg.anderson_memory, 4 * len);
    let mut g = vec![0.0; 4 * len];
    let mut plain = vec![0.0; 4 * len];
    // residual norm before the last extrapolated step, if one is pending
    let mut pending: Option<f64> = None;

    let mut status = SolveStatus::MaxIter;
    let mut iterations = cfg.max_iter;
    let mut primal_residual = f64::INFINITY;
    let mut dual_residual = f64::INFINITY;
    let mut dual_objective = f64::NEG_INFINITY;
    let mut last_adapt = 0;

    for it in 1..=cfg.max_iter {
        admm.step(&state, rho, &mut x, &mut next);
        for k in 0..4 * len {
            g[k] = next[k] - state[k];
        }
        let g_norm = norm(&g);
        if let Some(previous) = pending.take() {
            if !(g_norm <= previous) {
                // extrapolation made things worse: resume from the plain iterate
                std::mem::swap(&mut state, &mut plain);
                anderson.reset();
                continue;
            }
        }
        let dz_sq: f64 = g[..len].iter().chain(&g[2 * len..3 * len]).map(|v| v * v).sum();
        let (z1, rest) = next.split_at(len);
        let (u1, rest) = rest.split_at(len);
        let (z2, u2) = rest.split_at(len);

        if it % cfg.check_interval == 0 || it == cfg.max_iter {
            let r1: f64 = x.iter().zip(z1).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            let r2: f64 = x.iter().zip(z2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            primal_residual = r1.max(r2).sqrt();
            let grad: Vec<f64> = (0..len).map(|k| c[k] + rho * (u1[k] + u2[k])).collect();
            let (nu, rest) = affine.split(&grad);
            dual_residual = norm(&rest);
            dual_objective = affine.rhs.dot(&nu);
            let pobj = dot(&c, &x);
            let gap = (pobj - dual_objective).abs();
            let x_norm = norm(&x);
            let step = rho * dz_sq.sqrt();

            if let Some(out) = log.as_deref_mut() {
                writeln!(out, "{it},{primal_residual:.6e},{dual_residual:.6e},{gap:.6e},{pobj:.12e},{rho:.3e}")?;
            }
            if !x_norm.is_finite() || x_norm > 1e12 {
                status = SolveStatus::InfeasibleLikely;
                iterations = it;
                break;
            }
            let p_tol = cfg.eps_abs + cfg.eps_rel * x_norm.max(norm(z1)).max(norm(z2));
            let u_norm = rho * (norm(u1) + norm(u2));
            let d_tol = cfg.eps_abs + cfg.eps_rel * c_norm.max(u_norm);
            let gap_tol = cfg.eps_abs + cfg.eps_rel * (pobj.abs() + dual_objective.abs());
            if primal_residual <= p_tol && dual_residual <= d_tol && step <= d_tol && gap <= gap_tol {
                status = SolveStatus::Optimal;
                iterations = it;
                break;
            }

            if cfg.adaptive_rho && it - last_adapt >= 50 {
                let p_rel = primal_residual / p_tol;
                let d_rel = dual_residual.max(step) / d_tol;
                let ratio = (p_rel / d_rel.max(1e-300)).sqrt();
                if !(0.2..=5.0).contains(&ratio) {
                    let new_rho = (rho * ratio).clamp(1e-6, 1e6);
                    let scale = rho / new_rho;
                    for k in (len..2 * len).chain(3 * len..4 * len) {
                        next[k] *= scale;
                    }
                    rho = new_rho;
                    last_adapt = it;
                    anderson.reset();
                    std::mem::swap(&mut state, &mut next);
                    continue;
                }
            }
        }

        if anderson.extrapolate(&next, &g, &mut state) {
            pending = Some(g_norm);
            std::mem::swap(&mut plain, &mut next);
        } else {
            std::mem::swap(&mut state, &mut next);
        }
    }

    // inconsistent equalities leave the projected point off the affine set
    let consistency = (affine.apply(&x) - &affine.rhs).amax();
    if consistency > 1e-6 * (1.0 + affine.rhs.amax()) {
        status = SolveStatus::InfeasibleLikely;
    }
    let m = smat(&x[..nv], n);
    let objective = prog.objective.inner(&m);
    Ok(SolveResult { m, objective, dual_objective, primal_residual, dual_residual, iterations, status })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulations::{Constraint, ConstraintClass, SymSparse};
    use approx::assert_abs_diff_eq;

    #[test]
    fn psd_projection_examples() {
        let d = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let p = project_psd(&d).unwrap();
        assert_abs_diff_eq!(p, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]), epsilon = 1e-14);
        let id = DMatrix::<f64>::identity(4, 4);
        assert_abs_diff_eq!(project_psd(&id).unwrap(), id, epsilon = 1e-14);
        let mut bad = id.clone();
        bad[(0, 1)] = f64::NAN;
        assert!(matches!(project_psd(&bad), Err(Error::NonFinite(_))));
    }

    #[test]
    fn nonneg_projection_example() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, -2.0, -2.0, 3.0]);
        assert_eq!(project_nonneg(&s), DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 3.0]));
    }

    #[test]
    fn svec_round_trip_preserves_inner_products() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 5.0, 3.0, 5.0, 6.0]);
        let b = DMatrix::from_row_slice(3, 3, &[0.5, -1.0, 0.0, -1.0, 2.0, 1.5, 0.0, 1.5, -3.0]);
        assert_abs_diff_eq!(svec(&a).dot(&svec(&b)), a.dot(&b), epsilon = 1e-12);
        assert_abs_diff_eq!(smat(svec(&a).as_slice(), 3), a, epsilon = 1e-14);
    }

    fn trace_program() -> ConicProgram {
        // min M00 s.t. M00 + M11 = 1, M ⪰ 0
        let mut prog = ConicProgram::raw(2, Cone::Psd);
        prog.objective = SymSparse::entry(0, 0);
        prog.push(Constraint::eq(SymSparse::new([(0, 0, 1.0), (1, 1, 1.0)]), 1.0, ConstraintClass::NwLin));
        prog
    }

    #[test]
    fn trace_constrained_minimum_is_zero() {
        let res = solve(&trace_program(), &SolverConfig::default()).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        assert_abs_diff_eq!(res.objective, 0.0, epsilon = 1e-4);
        assert_abs_diff_eq!(res.m[(1, 1)], 1.0, epsilon = 1e-4);
    }

    #[test]
    fn inequality_with_slack() {
        // min M00 + M11 s.t. M00 ≥ 2, M11 ≥ 1
        let mut prog = ConicProgram::raw(2, Cone::Psd);
        prog.objective = SymSparse::new([(0, 0, 1.0), (1, 1, 1.0)]);
        prog.push(Constraint::ge(SymSparse::entry(0, 0), 2.0, ConstraintClass::BoundCuts));
        prog.push(Constraint::ge(SymSparse::entry(1, 1), 1.0, ConstraintClass::BoundCuts));
        let res = solve(&prog, &SolverConfig::with_tolerance(1e-8)).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        assert_abs_diff_eq!(res.objective, 3.0, epsilon = 1e-6);
    }

    #[test]
    fn inconsistent_equalities_are_flagged() {
        let mut prog = trace_program();
        prog.push(Constraint::eq(SymSparse::new([(0, 0, 1.0), (1, 1, 1.0)]), 2.0, ConstraintClass::NwLin));
        let res = solve(&prog, &SolverConfig { max_iter: 2000, ..SolverConfig::default() }).unwrap();
        assert_eq!(res.status, SolveStatus::InfeasibleLikely);
    }

    #[test]
    fn completely_positive_cone_is_rejected() {
        let mut prog = trace_program();
        prog.cone = Cone::CompletelyPositive;
        assert!(matches!(solve(&prog, &SolverConfig::default()), Err(Error::UnsupportedCone(_))));
    }

    #[test]
    fn iteration_log_lines() {
        let mut buf = Vec::new();
        let cfg = SolverConfig { check_interval: 5, ..SolverConfig::default() };
        let res = solve_logged(&trace_program(), &cfg, Some(&mut buf)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), res.iterations / 5);
        assert!(text.lines().all(|l| l.split(',').count() == 6));
    }
}
