//! Non-negative factorisation of a solved moment matrix and the exactness
//! certificate built from its factors.
//!
//! A factorisation `M ≈ Σ x⁽ᵏ⁾x⁽ᵏ⁾ᵀ` with `x⁽ᵏ⁾ = (λ⁽ᵏ⁾, ξ⁽ᵏ⁾) ≥ 0` splits the
//! relaxed solution into scaled forward passes; each factor with a
//! non-negligible corner weight `ξ⁽ᵏ⁾` names a candidate input.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::ops::RangeInclusive;

use crate::error::{Error, Result};
use crate::lifting::LiftingLayout;
use crate::network::{InputPolytope, OutputHalfspace, ReluNetwork};
use crate::solver::{SolveResult, SolveStatus};

#[derive(Debug, Clone, PartialEq)]
pub struct FactorConfig {
    pub restarts: usize,
    pub seed: u64,
    /// Outer alternating sweeps per restart.
    pub max_outer: usize,
    /// Projected-gradient steps per subproblem.
    pub max_inner: usize,
    /// Stop a restart once the max entrywise residual is below this.
    pub target_residual: f64,
}

impl Default for FactorConfig {
    fn default() -> Self {
        Self { restarts: 10, seed: 0, max_outer: 3000, max_inner: 30, target_residual: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Factorization {
    /// One non-negative factor per column.
    pub factors: DMatrix<f64>,
    /// `max |M − X Xᵀ|` against the input matrix.
    pub residual: f64,
}

impl Factorization {
    pub fn rank(&self) -> usize {
        self.factors.ncols()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.factors * self.factors.transpose()
    }

    /// Corner entries `ξ⁽ᵏ⁾`.
    pub fn corner_weights(&self) -> Vec<f64> {
        let d = self.factors.nrows() - 1;
        self.factors.row(d).iter().copied().collect()
    }
}

pub fn max_entry_residual(m: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
    (m - x * x.transpose()).amax()
}

fn lambda_max(s: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(s.clone()).eigenvalues.max().max(0.0)
}

/// Projected gradient (FISTA) on `‖M − W Hᵀ‖² + α‖W − H‖²` over `W ≥ 0`.
fn update_factor(m: &DMatrix<f64>, h: &DMatrix<f64>, w: &mut DMatrix<f64>, alpha: f64, steps: usize) {
    let hth = h.transpose() * h;
    let mh = m * h;
    let lip = 2.0 * (lambda_max(&hth) + alpha);
    if lip <= 0.0 {
        return;
    }
    let mut y = w.clone();
    let mut t = 1.0f64;
    for _ in 0..steps {
        let grad = (&y * &hth - &mh + (&y - h) * alpha) * 2.0;
        let next = (&y - grad / lip).map(|v| v.max(0.0));
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &next + (&next - &*w) * ((t - 1.0) / t_next);
        y.apply(|v| *v = v.max(0.0));
        *w = next;
        t = t_next;
    }
}

/// Symmetric non-negative factorisation `M ≈ X Xᵀ`, `X ∈ ℝ^{n×K}_{≥0}`, by
/// penalised alternating non-negative least squares with seeded restarts.
/// Negative entries of `M` are clipped before fitting; the residual is
/// measured against `M` itself.
pub fn nonneg_factorize(m: &DMatrix<f64>, rank: usize, cfg: &FactorConfig) -> Result<Factorization> {
    if rank == 0 {
        return Err(Error::ZeroRank);
    }
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
    }
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("moment matrix"));
    }
    let sym = (m + m.transpose()) * 0.5;
    let target = sym.map(|v| v.max(0.0));
    let n = sym.nrows();
    let mean = target.mean().max(1e-12);
    let scale = 2.0 * (mean / rank as f64).sqrt();
    let alpha = target.max().max(1e-12);

    let mut best: Option<Factorization> = None;
    for restart in 0..cfg.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(restart as u64));
        let mut w = DMatrix::from_fn(n, rank, |_, _| scale * rng.gen::<f64>());
        let mut h = w.clone();
        for outer in 0..cfg.max_outer {
            update_factor(&target, &h, &mut w, alpha, cfg.max_inner);
            update_factor(&target, &w, &mut h, alpha, cfg.max_inner);
            if outer % 20 == 19 && max_entry_residual(&sym, &((&w + &h) * 0.5)) <= cfg.target_residual {
                break;
            }
        }
        let x = ((&w + &h) * 0.5).map(|v| v.max(0.0));
        let residual = max_entry_residual(&sym, &x);
        if best.as_ref().is_none_or(|b| residual < b.residual) {
            best = Some(Factorization { factors: x, residual });
        }
        if residual <= cfg.target_residual {
            break;
        }
    }
    Ok(best.expect("at least one restart"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtractedInput {
    pub factor: usize,
    pub xi: f64,
    pub input: Vec<f64>,
    /// Full normalised lifted vector `λ⁽ᵏ⁾ / ξ⁽ᵏ⁾`.
    #[serde(skip)]
    pub lifted: DVector<f64>,
}

/// Reads `(λ⁺_0 − λ⁻_0) / ξ` off every factor with `ξ ≥ 1e-6`.
pub fn extract_inputs(fac: &Factorization, layout: &LiftingLayout) -> Result<Vec<ExtractedInput>> {
    if fac.factors.nrows() != layout.dim() + 1 {
        return Err(Error::DimensionMismatch { expected: layout.dim() + 1, got: fac.factors.nrows() });
    }
    let d = layout.dim();
    let out: Vec<ExtractedInput> = (0..fac.rank())
        .filter_map(|k| {
            let col = fac.factors.column(k);
            let xi = col[d];
            (xi >= 1e-6).then(|| {
                let lifted = DVector::from_fn(d, |i, _| col[i] / xi);
                ExtractedInput { factor: k, xi, input: layout.input_of(&lifted).iter().copied().collect(), lifted }
            })
        })
        .collect();
    if out.is_empty() {
        return Err(Error::NegligibleWeights);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Exact,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub factor: usize,
    pub xi: f64,
    /// Input read off the factor.
    pub raw_input: Vec<f64>,
    /// `raw_input` projected onto the input set; the forward pass runs here.
    pub input: Vec<f64>,
    pub repair_distance: f64,
    pub objective: f64,
    pub pattern_consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub verdict: Verdict,
    pub rank: Option<usize>,
    pub relaxation_objective: f64,
    pub witnesses: Vec<Witness>,
    pub residual: f64,
    pub objective_gap: f64,
    pub xi_squared_sum: f64,
    pub note: String,
}

impl Certificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serialises")
    }

    pub fn min_witness_objective(&self) -> Option<f64> {
        self.witnesses.iter().map(|w| w.objective).min_by(f64::total_cmp)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertifyConfig {
    pub factor: FactorConfig,
    /// Max entrywise factorisation residual accepted.
    pub residual_threshold: f64,
    /// Max distance between a factor's input and the input set.
    pub repair_tolerance: f64,
    /// Max deviation between a factor's normalised neurons and the forward
    /// pass at its input.
    pub pattern_tolerance: f64,
    /// Max gap between the best witness and the relaxation value.
    pub objective_tolerance: f64,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            factor: FactorConfig::default(),
            residual_threshold: 5e-4,
            repair_tolerance: 1e-2,
            pattern_tolerance: 2e-2,
            objective_tolerance: 1e-3,
        }
    }
}

fn inconclusive(relaxation_objective: f64, note: impl Into<String>) -> Certificate {
    Certificate {
        verdict: Verdict::Inconclusive,
        rank: None,
        relaxation_objective,
        witnesses: Vec::new(),
        residual: f64::INFINITY,
        objective_gap: f64::INFINITY,
        xi_squared_sum: f64::NAN,
        note: note.into(),
    }
}

fn witnesses_for(
    net: &ReluNetwork,
    layout: &LiftingLayout,
    input: &InputPolytope,
    output: &OutputHalfspace,
    fac: &Factorization,
    cfg: &CertifyConfig,
) -> Result<Vec<Witness>> {
    let mut out = Vec::new();
    for ex in extract_inputs(fac, layout)? {
        let raw = DVector::from_vec(ex.input.clone());
        let x = input.project(&raw);
        let acts = net.forward(&x)?;
        let slacks: Vec<f64> = (input.rhs() - input.matrix() * &x).iter().copied().collect();
        let lam = layout.lift(&acts, &slacks)?;
        let neurons = 2 * layout.neurons();
        let deviation = (0..neurons).map(|i| (lam[i] - ex.lifted[i]).abs()).fold(0.0, f64::max);
        out.push(Witness {
            factor: ex.factor,
            xi: ex.xi,
            repair_distance: (&x - &raw).norm(),
            raw_input: ex.input,
            input: x.iter().copied().collect(),
            objective: output.objective(acts.output()),
            pattern_consistent: deviation <= cfg.pattern_tolerance,
        });
    }
    Ok(out)
}

/// Tries each rank in `ranks`; the verdict is EXACT at the first rank whose
/// factorisation fits, whose witnesses are feasible and consistent forward
/// passes, whose best witness attains the relaxation value and whose corner
/// weights satisfy `Σ ξ² ≈ 1`.
pub fn certify(
    net: &ReluNetwork,
    relaxation: &SolveResult,
    layout: &LiftingLayout,
    input: &InputPolytope,
    output: &OutputHalfspace,
    ranks: RangeInclusive<usize>,
    cfg: &CertifyConfig,
) -> Certificate {
    let value = relaxation.objective;
    if relaxation.status != SolveStatus::Optimal {
        return inconclusive(value, format!("relaxation status {}", relaxation.status));
    }
    if relaxation.m.nrows() != layout.dim() + 1 {
        return inconclusive(value, "moment matrix does not match the layout");
    }
    let mut fallback: Option<Certificate> = None;
    for k in ranks {
        let Ok(fac) = nonneg_factorize(&relaxation.m, k, &cfg.factor) else { continue };
        let xi_squared_sum: f64 = fac.corner_weights().iter().map(|x| x * x).sum();
        let witnesses = witnesses_for(net, layout, input, output, &fac, cfg).unwrap_or_default();
        let best = witnesses.iter().map(|w| w.objective).min_by(f64::total_cmp).unwrap_or(f64::INFINITY);
        let gap = (best - value).abs();
        let mut problems = Vec::new();
        if fac.residual > cfg.residual_threshold {
            problems.push(format!("residual {:.3e}", fac.residual));
        }
        if witnesses.is_empty() {
            problems.push("no factor with positive corner weight".to_string());
        }
        if witnesses.iter().any(|w| w.repair_distance > cfg.repair_tolerance) {
            problems.push("witness outside the input set".to_string());
        }
        if witnesses.iter().any(|w| !w.pattern_consistent) {
            problems.push("witness inconsistent with its forward pass".to_string());
        }
        if gap > cfg.objective_tolerance {
            problems.push(format!("objective gap {gap:.3e}"));
        }
        if (xi_squared_sum - 1.0).abs() > cfg.residual_threshold {
            problems.push(format!("corner weights sum to {xi_squared_sum:.6}"));
        }
        let cert = Certificate {
            verdict: if problems.is_empty() { Verdict::Exact } else { Verdict::Inconclusive },
            rank: Some(k),
            relaxation_objective: value,
            witnesses,
            residual: fac.residual,
            objective_gap: gap,
            xi_squared_sum,
            note: problems.join("; "),
        };
        if cert.verdict == Verdict::Exact {
            return cert;
        }
        if fallback.as_ref().is_none_or(|f| cert.residual < f.residual) {
            fallback = Some(cert);
        }
    }
    fallback.unwrap_or_else(|| inconclusive(value, "empty rank range"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_is_recovered() {
        let v = DVector::from_vec(vec![0.3, 1.2, 0.0, 0.7, 1.0]);
        let m = &v * v.transpose();
        let fac = nonneg_factorize(&m, 1, &FactorConfig::default()).unwrap();
        assert!(fac.residual <= 1e-8, "{}", fac.residual);
        let x = fac.factors.column(0);
        assert!((x - &v).amax() <= 1e-6);
    }

    #[test]
    fn identity_splits_into_unit_vectors() {
        let fac = nonneg_factorize(&DMatrix::identity(3, 3), 3, &FactorConfig::default()).unwrap();
        assert!(fac.residual <= 1e-8, "{}", fac.residual);
    }

    #[test]
    fn zero_rank_is_rejected() {
        assert!(matches!(nonneg_factorize(&DMatrix::identity(2, 2), 0, &FactorConfig::default()), Err(Error::ZeroRank)));
    }

    #[test]
    fn residual_is_recomputed_independently() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0]);
        let fac = nonneg_factorize(&m, 2, &FactorConfig { restarts: 2, ..FactorConfig::default() }).unwrap();
        let direct = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .map(|(i, j)| {
                let s: f64 = (0..2).map(|k| fac.factors[(i, k)] * fac.factors[(j, k)]).sum();
                (m[(i, j)] - s).abs()
            })
            .fold(0.0, f64::max);
        assert_eq!(fac.residual, direct);
        assert!(fac.factors.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn negligible_weights_are_an_error() {
        let layout = LiftingLayout::new(&[1, 1], 0);
        let mut factors = DMatrix::from_element(5, 1, 0.5);
        factors[(4, 0)] = 0.0;
        let fac = Factorization { factors, residual: 0.0 };
        assert!(matches!(extract_inputs(&fac, &layout), Err(Error::NegligibleWeights)));
    }
}
