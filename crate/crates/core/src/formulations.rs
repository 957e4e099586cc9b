//! Conic programs over the bordered moment matrix `M = [[Λ, λ], [λᵀ, 1]]`.
//!
//! Every constraint reads `⟨P, M⟩ = q` or `⟨P, M⟩ ≥ q` for a sparse
//! symmetric `P` and carries a [`ConstraintClass`] tag so that experiments
//! can drop whole classes without rebuilding. The builders produce the
//! completely positive program, its doubly non-negative (0-SOS) relaxation
//! and three baseline relaxations from the literature.

use nalgebra::{DMatrix, DVector};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lifting::{
    build_layout, expand_input_rows, expand_network_rows, objective_vector, LiftedRow,
    LiftingLayout,
};
use crate::network::{InputPolytope, NeuronBounds, OutputHalfspace, ReluNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cone {
    /// The completely positive cone; not tractable, only relaxed.
    CompletelyPositive,
    Psd,
    /// Doubly non-negative: PSD and entrywise non-negative.
    PsdNonneg,
    NonnegOnly,
}

impl Cone {
    pub fn name(self) -> &'static str {
        match self {
            Self::CompletelyPositive => "CP",
            Self::Psd => "PSD",
            Self::PsdNonneg => "PSD_NONNEG",
            Self::NonnegOnly => "NONNEG",
        }
    }

    pub fn includes_psd(self) -> bool {
        matches!(self, Self::Psd | Self::PsdNonneg)
    }

    pub fn includes_nonneg(self) -> bool {
        matches!(self, Self::PsdNonneg | Self::NonnegOnly)
    }
}

impl FromStr for Cone {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "CP" => Self::CompletelyPositive,
            "PSD" => Self::Psd,
            "PSD_NONNEG" => Self::PsdNonneg,
            "NONNEG" => Self::NonnegOnly,
            other => return Err(Error::Config(format!("unknown cone {other}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstraintClass {
    InputLin,
    InputSelfQuad,
    NwLin,
    NwSelfQuad,
    ReluComp,
    NonnegLambda,
    NonnegMatrix,
    BoundCuts,
    Triangle,
    CrossQuad,
}

impl ConstraintClass {
    pub const ALL: [Self; 10] = [
        Self::InputLin,
        Self::InputSelfQuad,
        Self::NwLin,
        Self::NwSelfQuad,
        Self::ReluComp,
        Self::NonnegLambda,
        Self::NonnegMatrix,
        Self::BoundCuts,
        Self::Triangle,
        Self::CrossQuad,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::InputLin => "INPUT_LIN",
            Self::InputSelfQuad => "INPUT_SELFQUAD",
            Self::NwLin => "NW_LIN",
            Self::NwSelfQuad => "NW_SELFQUAD",
            Self::ReluComp => "RELU_COMP",
            Self::NonnegLambda => "NONNEG_LAMBDA",
            Self::NonnegMatrix => "NONNEG_MATRIX",
            Self::BoundCuts => "BOUND_CUTS",
            Self::Triangle => "TRIANGLE",
            Self::CrossQuad => "CROSS_QUAD",
        }
    }
}

impl fmt::Display for ConstraintClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConstraintClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown constraint class {s}")))
    }
}

/// Sparse symmetric matrix stored as upper-triangle triplets `(i, j, v)`
/// with `i ≤ j`, meaning `P_ij = P_ji = v`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SymSparse {
    pub entries: Vec<(usize, usize, f64)>,
}

impl SymSparse {
    /// Accumulates entries (either triangle), merging duplicates.
    pub fn new(entries: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut e: Vec<(usize, usize, f64)> = entries.into_iter().map(|(i, j, v)| (i.min(j), i.max(j), v)).collect();
        e.sort_by_key(|a| (a.0, a.1));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(e.len());
        for (i, j, v) in e {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => merged.push((i, j, v)),
            }
        }
        merged.retain(|t| t.2 != 0.0);
        Self { entries: merged }
    }

    /// `P` with `P[k, corner] = P[corner, k] = row_k / 2`, so that
    /// `⟨P, M⟩ = row · λ`.
    pub fn border(row: &LiftedRow, corner: usize) -> Self {
        Self::new(row.coeffs.iter().map(|&(k, v)| (k, corner, 0.5 * v)))
    }

    /// `VᵀV` on the `Λ` block, so that `⟨P, M⟩ = ⟨VᵀV, Λ⟩`.
    pub fn self_quad(row: &LiftedRow) -> Self {
        Self::cross(row, row)
    }

    /// Symmetrised `V_iᵀ V_j` on the `Λ` block.
    pub fn cross(a: &LiftedRow, b: &LiftedRow) -> Self {
        let mut out = Vec::with_capacity(a.coeffs.len() * b.coeffs.len());
        for &(k, u) in &a.coeffs {
            for &(l, w) in &b.coeffs {
                let v = if k == l { u * w } else { 0.5 * u * w };
                out.push((k, l, v));
            }
        }
        Self::new(out)
    }

    /// Unit coefficient on the single entry `M_ij`.
    pub fn entry(i: usize, j: usize) -> Self {
        let v = if i == j { 1.0 } else { 0.5 };
        Self { entries: vec![(i.min(j), i.max(j), v)] }
    }

    pub fn plus(&self, other: &Self, factor: f64) -> Self {
        Self::new(self.entries.iter().copied().chain(other.entries.iter().map(|&(i, j, v)| (i, j, factor * v))))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { entries: self.entries.iter().map(|&(i, j, v)| (i, j, v * factor)).collect() }
    }

    pub fn inner(&self, m: &DMatrix<f64>) -> f64 {
        self.entries.iter().map(|&(i, j, v)| if i == j { v * m[(i, i)] } else { v * (m[(i, j)] + m[(j, i)]) }).sum()
    }

    pub fn to_dense(&self, n: usize) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(n, n);
        for &(i, j, v) in &self.entries {
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
        d
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.iter().map(|t| t.1).max()
    }

    fn remap(&self, f: impl Fn(usize) -> usize) -> Self {
        Self::new(self.entries.iter().map(|&(i, j, v)| (f(i), f(j), v)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: SymSparse,
    pub sense: Sense,
    pub rhs: f64,
    pub class: ConstraintClass,
}

impl Constraint {
    pub fn eq(coeffs: SymSparse, rhs: f64, class: ConstraintClass) -> Self {
        Self { coeffs, sense: Sense::Eq, rhs, class }
    }

    pub fn ge(coeffs: SymSparse, rhs: f64, class: ConstraintClass) -> Self {
        Self { coeffs, sense: Sense::Ge, rhs, class }
    }

    pub fn value(&self, m: &DMatrix<f64>) -> f64 {
        self.coeffs.inner(m)
    }

    /// Violation: `|⟨P,M⟩ − q|` for equalities, `(q − ⟨P,M⟩)⁺` otherwise.
    pub fn violation(&self, m: &DMatrix<f64>) -> f64 {
        let v = self.value(m) - self.rhs;
        match self.sense {
            Sense::Eq => v.abs(),
            Sense::Ge => (-v).max(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicProgram {
    /// Side length of the matrix variable (`d + 1` for moment programs).
    pub dim: usize,
    pub objective: SymSparse,
    pub constraints: Vec<Constraint>,
    pub cone: Cone,
    /// Whether `M[d, d] = 1` is imposed on the last diagonal entry.
    pub corner_fix: bool,
    pub layout: Option<LiftingLayout>,
}

impl ConicProgram {
    /// Program on an arbitrary symmetric matrix, without the border convention.
    pub fn raw(dim: usize, cone: Cone) -> Self {
        Self { dim, objective: SymSparse::default(), constraints: Vec::new(), cone, corner_fix: false, layout: None }
    }

    /// Empty moment program for `layout`, with the corner fixed to one.
    pub fn moment(layout: LiftingLayout, cone: Cone) -> Self {
        Self {
            dim: layout.dim() + 1,
            objective: SymSparse::default(),
            constraints: Vec::new(),
            cone,
            corner_fix: true,
            layout: Some(layout),
        }
    }

    pub fn corner(&self) -> usize {
        self.dim - 1
    }

    pub fn set_objective_row(&mut self, row: &LiftedRow) {
        self.objective = SymSparse::border(row, self.corner());
    }

    pub fn push(&mut self, c: Constraint) {
        self.constraints.push(c);
    }

    /// Adds `Vλ = v` together with its self-quadratic partner `⟨VᵀV, Λ⟩ = v²`.
    pub fn add_linear_pair(&mut self, row: &LiftedRow, lin: ConstraintClass, quad: ConstraintClass) {
        let corner = self.corner();
        self.push(Constraint::eq(SymSparse::border(row, corner), row.rhs, lin));
        self.push(Constraint::eq(SymSparse::self_quad(row), row.rhs * row.rhs, quad));
    }

    /// Adds `Vλ ≤ v` as a plain inequality on the border.
    pub fn add_border_le(&mut self, row: &LiftedRow, class: ConstraintClass) {
        let corner = self.corner();
        self.push(Constraint::ge(SymSparse::border(&row.scaled(-1.0), corner), -row.rhs, class));
    }

    /// Adds `λ_k ≥ 0` for every `k < d`.
    pub fn add_border_nonneg(&mut self) {
        let corner = self.corner();
        for k in 0..corner {
            self.push(Constraint::ge(SymSparse::entry(k, corner), 0.0, ConstraintClass::NonnegLambda));
        }
    }

    pub fn count(&self, class: ConstraintClass) -> usize {
        self.constraints.iter().filter(|c| c.class == class).count()
    }

    /// Number of equality constraints including the corner fix.
    pub fn num_equalities(&self) -> usize {
        self.constraints.iter().filter(|c| c.sense == Sense::Eq).count() + usize::from(self.corner_fix)
    }

    pub fn num_inequalities(&self) -> usize {
        self.constraints.iter().filter(|c| c.sense == Sense::Ge).count()
    }

    pub fn objective_value(&self, m: &DMatrix<f64>) -> f64 {
        self.objective.inner(m)
    }

    /// Largest violation over all linear constraints and the corner fix.
    pub fn max_violation(&self, m: &DMatrix<f64>) -> f64 {
        let corner = if self.corner_fix { (m[(self.corner(), self.corner())] - 1.0).abs() } else { 0.0 };
        self.constraints.iter().map(|c| c.violation(m)).fold(corner, f64::max)
    }

    /// Re-embeds the program after appending `extra` slack columns to its
    /// layout; the corner moves to the new last index.
    pub fn with_extra_slacks(&self, extra: usize) -> Result<Self> {
        let layout = self.layout.as_ref().ok_or_else(|| Error::Config("program has no lifting layout".into()))?;
        let old_corner = self.corner();
        let f = |k: usize| if k >= old_corner { k + extra } else { k };
        Ok(Self {
            dim: self.dim + extra,
            objective: self.objective.remap(f),
            constraints: self
                .constraints
                .iter()
                .map(|c| Constraint { coeffs: c.coeffs.remap(f), ..c.clone() })
                .collect(),
            cone: self.cone,
            corner_fix: self.corner_fix,
            layout: Some(layout.with_extra_slacks(extra)),
        })
    }

    /// Text dump: `dim`, `cone`, `corner_fix`, objective triplets and one
    /// block per constraint with its sense, tag, rhs and triplets.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dim {}", self.dim);
        let _ = writeln!(s, "cone {}", self.cone.name());
        let _ = writeln!(s, "corner_fix {}", u8::from(self.corner_fix));
        let _ = writeln!(s, "objective {}", self.objective.entries.len());
        for &(i, j, v) in &self.objective.entries {
            let _ = writeln!(s, "{i} {j} {v:.17e}");
        }
        let _ = writeln!(s, "constraints {}", self.constraints.len());
        for c in &self.constraints {
            let sense = match c.sense {
                Sense::Eq => "EQ",
                Sense::Ge => "GE",
            };
            let _ = writeln!(s, "{} {} {:.17e} {}", sense, c.class.name(), c.rhs, c.coeffs.entries.len());
            for &(i, j, v) in &c.coeffs.entries {
                let _ = writeln!(s, "{i} {j} {v:.17e}");
            }
        }
        s
    }

    /// Parses [`ConicProgram::dump`] output. The layout is not serialised.
    pub fn parse_dump(text: &str) -> Result<Self> {
        let bad = |what: &str| Error::Config(format!("malformed program dump: {what}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let mut header = |key: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| bad(key))?;
            line.strip_prefix(key).map(|r| r.trim().to_string()).ok_or_else(|| bad(key))
        };
        let dim: usize = header("dim")?.parse().map_err(|_| bad("dim"))?;
        let cone: Cone = header("cone")?.parse()?;
        let corner_fix = header("corner_fix")? == "1";
        let nobj: usize = header("objective")?.parse().map_err(|_| bad("objective"))?;
        let mut rest = text.lines().filter(|l| !l.trim().is_empty()).skip(4);
        let triplets = |n: usize, rest: &mut dyn Iterator<Item = &str>| -> Result<SymSparse> {
            let mut e = Vec::with_capacity(n);
            for _ in 0..n {
                let line = rest.next().ok_or_else(|| bad("triplet"))?;
                let f: Vec<&str> = line.split_whitespace().collect();
                if f.len() != 3 {
                    return Err(bad("triplet"));
                }
                e.push((
                    f[0].parse().map_err(|_| bad("index"))?,
                    f[1].parse().map_err(|_| bad("index"))?,
                    f[2].parse().map_err(|_| bad("value"))?,
                ));
            }
            Ok(SymSparse { entries: e })
        };
        let objective = triplets(nobj, &mut rest)?;
        let ncons: usize = rest
            .next()
            .and_then(|l| l.strip_prefix("constraints"))
            .and_then(|r| r.trim().parse().ok())
            .ok_or_else(|| bad("constraints"))?;
        let mut constraints = Vec::with_capacity(ncons);
        for _ in 0..ncons {
            let line = rest.next().ok_or_else(|| bad("constraint header"))?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(bad("constraint header"));
            }
            let sense = match f[0] {
                "EQ" => Sense::Eq,
                "GE" => Sense::Ge,
                _ => return Err(bad("sense")),
            };
            let class: ConstraintClass = f[1].parse()?;
            let rhs: f64 = f[2].parse().map_err(|_| bad("rhs"))?;
            let n: usize = f[3].parse().map_err(|_| bad("count"))?;
            constraints.push(Constraint { coeffs: triplets(n, &mut rest)?, sense, rhs, class });
        }
        Ok(Self { dim, objective, constraints, cone, corner_fix, layout: None })
    }
}

/// Rank-one moment matrix `[λ; 1][λ; 1]ᵀ`.
pub fn rank_one_moment(lam: &DVector<f64>) -> DMatrix<f64> {
    let mut v = lam.clone().resize_vertically(lam.len() + 1, 0.0);
    v[lam.len()] = 1.0;
    &v * v.transpose()
}

/// Input rows, network rows and complementarity of the completely positive
/// reformulation. Input row `k` uses slack column `k` of `layout`.
pub fn build_cpp_constraints(net: &ReluNetwork, input: &InputPolytope, layout: &LiftingLayout) -> Result<ConicProgram> {
    if input.num_rows() == 0 {
        return Err(Error::UnboundedInput("no input constraints".into()));
    }
    if input.dim() != net.input_dim() {
        return Err(Error::DimensionMismatch { expected: net.input_dim(), got: input.dim() });
    }
    if layout.dims() != net.dims().as_slice() || layout.slacks() < input.num_rows() {
        return Err(Error::Config("layout does not cover the network and input slacks".into()));
    }
    let mut prog = ConicProgram::moment(layout.clone(), Cone::CompletelyPositive);
    for row in expand_input_rows(input, layout, true)? {
        prog.add_linear_pair(&row, ConstraintClass::InputLin, ConstraintClass::InputSelfQuad);
    }
    for row in expand_network_rows(net, layout)? {
        prog.add_linear_pair(&row, ConstraintClass::NwLin, ConstraintClass::NwSelfQuad);
    }
    add_complementarity(&mut prog, layout);
    Ok(prog)
}

fn add_complementarity(prog: &mut ConicProgram, layout: &LiftingLayout) {
    for (i, j) in layout.neuron_ids() {
        prog.push(Constraint::eq(SymSparse::entry(layout.pos(i, j), layout.neg(i, j)), 0.0, ConstraintClass::ReluComp));
    }
}

/// Doubly non-negative (0-SOS) relaxation of the completely positive program.
pub fn build_0sos(net: &ReluNetwork, input: &InputPolytope, output: &OutputHalfspace) -> Result<ConicProgram> {
    let layout = build_layout(net, input.num_rows());
    let mut prog = build_cpp_constraints(net, input, &layout)?;
    prog.cone = Cone::PsdNonneg;
    prog.set_objective_row(&objective_vector(output, &layout)?);
    // implied by the cone, listed so that dropping Λ ≥ 0 keeps λ ≥ 0
    prog.add_border_nonneg();
    Ok(prog)
}

/// Lifted SDP relaxation with input box products, `λ⁺(û − λ⁺) ≥ 0` cuts,
/// network rows and complementarity, over the PSD cone with `λ ≥ 0`.
pub fn build_sdr(
    net: &ReluNetwork,
    input: &InputPolytope,
    output: &OutputHalfspace,
    bounds: &NeuronBounds,
) -> Result<ConicProgram> {
    if bounds.layers() != net.depth() + 1 {
        return Err(Error::Config("bounds do not match the network".into()));
    }
    if input.dim() != net.input_dim() {
        return Err(Error::DimensionMismatch { expected: net.input_dim(), got: input.dim() });
    }
    let layout = build_layout(net, 0);
    let mut prog = ConicProgram::moment(layout.clone(), Cone::Psd);
    let corner = prog.corner();
    prog.set_objective_row(&objective_vector(output, &layout)?);

    // (l + u) x − x² − u l ≥ 0 per input coordinate
    for i in 0..net.input_dim() {
        let (l, u) = (bounds.pre_lower[0][i], bounds.pre_upper[0][i]);
        let sel = LiftedRow::new([(layout.pos(0, i), 1.0), (layout.neg(0, i), -1.0)], 0.0);
        let p = SymSparse::border(&sel.scaled(l + u), corner).plus(&SymSparse::self_quad(&sel), -1.0);
        prog.push(Constraint::ge(p, u * l, ConstraintClass::CrossQuad));
    }
    // û λ⁺ − Λ[λ⁺, λ⁺] ≥ 0 per hidden neuron
    for i in 1..net.depth() {
        for j in 0..layout.dims()[i] {
            let k = layout.pos(i, j);
            let uhat = bounds.pre_upper[i][j];
            let p = SymSparse::border(&LiftedRow::new([(k, uhat)], 0.0), corner).plus(&SymSparse::entry(k, k), -1.0);
            prog.push(Constraint::ge(p, 0.0, ConstraintClass::BoundCuts));
        }
    }
    for row in expand_network_rows(net, &layout)? {
        prog.push(Constraint::eq(SymSparse::border(&row, corner), row.rhs, ConstraintClass::NwLin));
    }
    add_complementarity(&mut prog, &layout);
    prog.add_border_nonneg();
    Ok(prog)
}

/// Atomic-constraint form of the quadratic-constraint relaxation: pairwise
/// products of input halfspaces, network rows, complementarity, `λ ≥ 0` and
/// `Λ[λ⁺, λ⁻ᵀ] ≥ 0`, over the PSD cone.
pub fn build_qc(net: &ReluNetwork, input: &InputPolytope, output: &OutputHalfspace) -> Result<ConicProgram> {
    if input.dim() != net.input_dim() {
        return Err(Error::DimensionMismatch { expected: net.input_dim(), got: input.dim() });
    }
    let layout = build_layout(net, 0);
    let mut prog = ConicProgram::moment(layout.clone(), Cone::Psd);
    let corner = prog.corner();
    prog.set_objective_row(&objective_vector(output, &layout)?);
    let rows = expand_input_rows(input, &layout, false)?;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            prog.push(cross_quadratic(&rows[i], &rows[j], corner));
        }
    }
    for row in expand_network_rows(net, &layout)? {
        prog.push(Constraint::eq(SymSparse::border(&row, corner), row.rhs, ConstraintClass::NwLin));
    }
    add_complementarity(&mut prog, &layout);
    prog.add_border_nonneg();
    let ids: Vec<_> = layout.neuron_ids().collect();
    for &a in &ids {
        for &b in &ids {
            if a != b {
                let p = SymSparse::entry(layout.pos(a.0, a.1), layout.neg(b.0, b.1));
                prog.push(Constraint::ge(p, 0.0, ConstraintClass::NonnegMatrix));
            }
        }
    }
    Ok(prog)
}

/// [`build_sdr`] plus the upper triangle facet for every hidden neuron with
/// `l̂ < 0 < û`.
pub fn build_triangle_sdr(
    net: &ReluNetwork,
    input: &InputPolytope,
    output: &OutputHalfspace,
    bounds: &NeuronBounds,
) -> Result<ConicProgram> {
    let mut prog = build_sdr(net, input, output, bounds)?;
    let layout = prog.layout.clone().expect("sdr programs carry a layout");
    for i in 1..net.depth() {
        for j in 0..layout.dims()[i] {
            if let Some(row) = triangle_cut(&layout, bounds, i, j) {
                prog.add_border_le(&row, ConstraintClass::Triangle);
            }
        }
    }
    Ok(prog)
}

/// Triangle cut `λ⁺ ≤ (u − l)/(û − l̂)·((λ⁺ − λ⁻) − l̂) + l` written as
/// `Vλ ≤ v`; `None` for stable neurons and degenerate intervals.
pub fn triangle_cut(layout: &LiftingLayout, bounds: &NeuronBounds, i: usize, j: usize) -> Option<LiftedRow> {
    let (lh, uh) = (bounds.pre_lower[i][j], bounds.pre_upper[i][j]);
    if !(lh < 0.0 && uh > 0.0) || uh - lh < 1e-9 {
        return None;
    }
    let (l, u) = (bounds.post_lower[i][j], bounds.post_upper[i][j]);
    let slope = (u - l) / (uh - lh);
    let (p, n) = (layout.pos(i, j), layout.neg(i, j));
    // λ⁺ − slope (λ⁺ − λ⁻) ≤ l − slope l̂
    Some(LiftedRow::new([(p, 1.0 - slope), (n, slope)], l - slope * lh))
}

/// The four bound inequalities per neuron of layers `1..=n`, as `Vλ ≤ v`:
/// `ẑ ≤ û`, `λ⁺ ≤ u`, `ẑ ≥ l̂`, `λ⁺ ≥ l` with `ẑ = λ⁺ − λ⁻`.
pub fn strengthening_rows(layout: &LiftingLayout, bounds: &NeuronBounds) -> Vec<LiftedRow> {
    let mut rows = Vec::new();
    for i in 1..layout.dims().len() {
        for j in 0..layout.dims()[i] {
            let (p, n) = (layout.pos(i, j), layout.neg(i, j));
            rows.push(LiftedRow::new([(p, 1.0), (n, -1.0)], bounds.pre_upper[i][j]));
            rows.push(LiftedRow::new([(p, 1.0)], bounds.post_upper[i][j]));
            rows.push(LiftedRow::new([(p, -1.0), (n, 1.0)], -bounds.pre_lower[i][j]));
            rows.push(LiftedRow::new([(p, -1.0)], -bounds.post_lower[i][j]));
        }
    }
    rows
}

/// Adds the bound inequalities. In paired mode every inequality gets a fresh
/// slack `s` and enters as the pair `Vλ + s = v`, `⟨[V 1]ᵀ[V 1], Λ⟩ = v²`;
/// otherwise it is a plain border inequality.
pub fn add_strengthening_bounds(prog: &ConicProgram, bounds: &NeuronBounds, paired: bool) -> Result<ConicProgram> {
    let layout = prog.layout.clone().ok_or_else(|| Error::Config("program has no lifting layout".into()))?;
    if bounds.layers() != layout.dims().len() {
        return Err(Error::Config("bounds do not match the program layout".into()));
    }
    let rows = strengthening_rows(&layout, bounds);
    if !paired {
        let mut out = prog.clone();
        for row in &rows {
            out.add_border_le(row, ConstraintClass::BoundCuts);
        }
        return Ok(out);
    }
    let first = layout.slacks();
    let mut out = prog.with_extra_slacks(rows.len())?;
    let grown = out.layout.clone().expect("layout kept");
    for (k, row) in rows.iter().enumerate() {
        let mut entries = row.coeffs.clone();
        entries.push((grown.slack(first + k), 1.0));
        let paired_row = LiftedRow::new(entries, row.rhs);
        out.add_linear_pair(&paired_row, ConstraintClass::BoundCuts, ConstraintClass::BoundCuts);
    }
    Ok(out)
}

/// Linearised product `(v_i − V_iλ)(v_j − V_jλ) ≥ 0` of two slack-free
/// inequalities `V_iλ ≤ v_i`, `V_jλ ≤ v_j`.
pub fn cross_quadratic(a: &LiftedRow, b: &LiftedRow, corner: usize) -> Constraint {
    let lin = LiftedRow::new(
        a.coeffs.iter().map(|&(k, v)| (k, -b.rhs * v)).chain(b.coeffs.iter().map(|&(k, v)| (k, -a.rhs * v))),
        0.0,
    );
    let p = SymSparse::cross(a, b).plus(&SymSparse::border(&lin, corner), 1.0);
    Constraint::ge(p, -a.rhs * b.rhs, ConstraintClass::CrossQuad)
}

/// Drops every constraint tagged `class`. Dropping `NONNEG_MATRIX` from a
/// doubly non-negative program relaxes the cone to PSD; `λ ≥ 0` stays.
pub fn ablate(prog: &ConicProgram, class: ConstraintClass) -> Result<ConicProgram> {
    let mut out = prog.clone();
    let before = out.constraints.len();
    out.constraints.retain(|c| c.class != class);
    let mut changed = out.constraints.len() != before;
    if class == ConstraintClass::NonnegMatrix {
        match out.cone {
            Cone::PsdNonneg => {
                out.cone = Cone::Psd;
                changed = true;
            }
            Cone::NonnegOnly | Cone::CompletelyPositive => return Err(Error::UnknownClass(class)),
            Cone::Psd => {}
        }
    }
    if !changed {
        return Err(Error::UnknownClass(class));
    }
    Ok(out)
}
