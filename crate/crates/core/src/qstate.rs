//! Polarization-qubit state algebra for up to four photons.
//!
//! Every state carries the list of optical modes it lives on, kept in
//! ascending order. Basis index bit `n - 1 - k` encodes the polarization of
//! the `k`-th listed mode (first listed mode is the most significant bit),
//! with `H = 0` and `V = 1`. For the four-photon state on modes `0,1,2,3`
//! that is the lexicographic order `|HHHH⟩, |HHHV⟩, ..., |VVVV⟩`.
//!
//! Bell states follow `Ψ± = (|HV⟩ ± |VH⟩)/√2`, `Φ± = (|HH⟩ ± |VV⟩)/√2`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Highest number of photons a state may carry.
pub const MAX_MODES: usize = 4;

const NORM_TOL: f64 = 1e-12;
/// Tolerance for density-operator validity checks.
pub const STATE_TOL: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BellLabel {
    PsiPlus,
    PsiMinus,
    PhiPlus,
    PhiMinus,
}

impl BellLabel {
    pub const ALL: [BellLabel; 4] = [
        BellLabel::PsiPlus,
        BellLabel::PsiMinus,
        BellLabel::PhiPlus,
        BellLabel::PhiMinus,
    ];

    /// Amplitudes over `|HH⟩, |HV⟩, |VH⟩, |VV⟩`.
    pub fn amplitudes(self) -> [C64; 4] {
        let h = FRAC_1_SQRT_2;
        match self {
            BellLabel::PsiPlus => [ZERO, c(h), c(h), ZERO],
            BellLabel::PsiMinus => [ZERO, c(h), c(-h), ZERO],
            BellLabel::PhiPlus => [c(h), ZERO, ZERO, c(h)],
            BellLabel::PhiMinus => [c(h), ZERO, ZERO, c(-h)],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BellLabel::PsiPlus => "psi_plus",
            BellLabel::PsiMinus => "psi_minus",
            BellLabel::PhiPlus => "phi_plus",
            BellLabel::PhiMinus => "phi_minus",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.as_str() == s)
    }
}

impl fmt::Display for BellLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Orientation of a linear polarization analyzer, in degrees, reduced to
/// `[0, 180)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(from = "f64", into = "f64")]
pub struct AnalyzerAngle(f64);

impl AnalyzerAngle {
    pub fn new(degrees: f64) -> Self {
        let mut d = degrees.rem_euclid(180.0);
        // rem_euclid can round up to exactly 180 for tiny negative inputs
        if d >= 180.0 {
            d -= 180.0;
        }
        AnalyzerAngle(d)
    }

    pub fn degrees(self) -> f64 {
        self.0
    }

    pub fn radians(self) -> f64 {
        self.0.to_radians()
    }

    /// Transmitted ("+") polarization `cos φ |H⟩ + sin φ |V⟩`.
    pub fn plus_vector(self) -> [C64; 2] {
        let (s, c0) = self.radians().sin_cos();
        [c(c0), c(s)]
    }

    /// Reflected ("−") polarization `−sin φ |H⟩ + cos φ |V⟩`.
    pub fn minus_vector(self) -> [C64; 2] {
        let (s, c0) = self.radians().sin_cos();
        [c(-s), c(c0)]
    }

    /// `P₊ − P₋` for this analyzer as a 2×2 matrix.
    pub fn observable(self) -> DMatrix<C64> {
        let t = 2.0 * self.radians();
        DMatrix::from_row_slice(2, 2, &[c(t.cos()), c(t.sin()), c(t.sin()), c(-t.cos())])
    }
}

impl From<f64> for AnalyzerAngle {
    fn from(d: f64) -> Self {
        AnalyzerAngle::new(d)
    }
}

impl From<AnalyzerAngle> for f64 {
    fn from(a: AnalyzerAngle) -> f64 {
        a.0
    }
}

fn check_mode(m: usize) -> Result<()> {
    if m >= MAX_MODES {
        Err(Error::InvalidMode(m))
    } else {
        Ok(())
    }
}

fn check_modes(modes: &[usize]) -> Result<()> {
    for (i, &m) in modes.iter().enumerate() {
        check_mode(m)?;
        if modes[..i].contains(&m) {
            return Err(Error::DuplicateMode(m));
        }
    }
    Ok(())
}

#[inline]
fn bit(index: usize, pos: usize, n: usize) -> usize {
    (index >> (n - 1 - pos)) & 1
}

/// Splits a basis index into the sub-index over `positions` (in the given
/// order) and the sub-index over all remaining positions (ascending).
fn split_index(index: usize, n: usize, positions: &[usize]) -> (usize, usize) {
    let mut sub = 0;
    for &p in positions {
        sub = (sub << 1) | bit(index, p, n);
    }
    let mut rest = 0;
    for p in (0..n).filter(|p| !positions.contains(p)) {
        rest = (rest << 1) | bit(index, p, n);
    }
    (sub, rest)
}

/// Reorders qubits so that `modes` becomes ascending, permuting amplitudes.
fn sort_qubits(modes: &[usize], amps: &[C64]) -> (Vec<usize>, Vec<C64>) {
    let n = modes.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&p| modes[p]);
    let sorted: Vec<usize> = order.iter().map(|&p| modes[p]).collect();
    let mut out = vec![ZERO; amps.len()];
    for (idx, &a) in amps.iter().enumerate() {
        let mut new = 0;
        for &p in &order {
            new = (new << 1) | bit(idx, p, n);
        }
        out[new] = a;
    }
    (sorted, out)
}

/// Pure polarization state of 1 to 4 photons.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    modes: Vec<usize>,
    amps: Vec<C64>,
}

impl Ket {
    /// Builds a state from amplitudes over the listed modes. The modes may
    /// be given in any order; the stored state is reordered to ascending.
    pub fn new(modes: &[usize], amps: Vec<C64>) -> Result<Self> {
        if modes.is_empty() || modes.len() > MAX_MODES {
            return Err(Error::PhotonCount {
                expected: MAX_MODES,
                got: modes.len(),
            });
        }
        check_modes(modes)?;
        if amps.len() != 1 << modes.len() {
            return Err(Error::Config(format!(
                "{} amplitudes for {} photons",
                amps.len(),
                modes.len()
            )));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::OutOfRange {
                name: "norm",
                value: norm,
                lo: 1.0,
                hi: 1.0,
            });
        }
        let (modes, amps) = sort_qubits(modes, &amps);
        Ok(Ket { modes, amps })
    }

    /// Like [`Ket::new`] but rescales the amplitudes to unit norm first.
    pub fn normalized(modes: &[usize], mut amps: Vec<C64>) -> Result<Self> {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Config("zero vector cannot be normalized".into()));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Ket::new(modes, amps)
    }

    /// Single photon `h|H⟩ + v|V⟩` in `mode`.
    pub fn single(mode: usize, h: C64, v: C64) -> Result<Self> {
        Ket::normalized(&[mode], vec![h, v])
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn num_photons(&self) -> usize {
        self.modes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn position(&self, mode: usize) -> Result<usize> {
        self.modes
            .iter()
            .position(|&m| m == mode)
            .ok_or(Error::MissingMode(mode))
    }

    /// Tensor product on disjoint mode sets.
    pub fn tensor(&self, other: &Ket) -> Result<Ket> {
        if let Some(&m) = self.modes.iter().find(|m| other.modes.contains(m)) {
            return Err(Error::OverlappingModes(m));
        }
        let mut modes = self.modes.clone();
        modes.extend_from_slice(&other.modes);
        if modes.len() > MAX_MODES {
            return Err(Error::PhotonCount {
                expected: MAX_MODES,
                got: modes.len(),
            });
        }
        let amps: Vec<C64> = self
            .amps
            .iter()
            .flat_map(|&a| other.amps.iter().map(move |&b| a * b))
            .collect();
        let (modes, amps) = sort_qubits(&modes, &amps);
        Ok(Ket { modes, amps })
    }

    /// `⟨self|other⟩`; both states must live on the same modes.
    pub fn inner(&self, other: &Ket) -> Result<C64> {
        if self.modes != other.modes {
            return Err(Error::Config(
                "inner product of states on different modes".into(),
            ));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn with_global_phase(&self, theta: f64) -> Ket {
        let ph = C64::from_polar(1.0, theta);
        Ket {
            modes: self.modes.clone(),
            amps: self.amps.iter().map(|a| a * ph).collect(),
        }
    }

    /// Contracts `⟨bra|` on the two listed modes; returns the unnormalized
    /// residual amplitudes over the remaining modes (ascending).
    fn contract_pair(
        &self,
        pair: (usize, usize),
        bra: &[C64; 4],
    ) -> Result<(Vec<usize>, Vec<C64>)> {
        let pa = self.position(pair.0)?;
        let pb = self.position(pair.1)?;
        if pa == pb {
            return Err(Error::DuplicateMode(pair.0));
        }
        let n = self.num_photons();
        let rest_modes: Vec<usize> = self
            .modes
            .iter()
            .copied()
            .filter(|&m| m != pair.0 && m != pair.1)
            .collect();
        let mut residual = vec![ZERO; 1 << rest_modes.len()];
        for (idx, &a) in self.amps.iter().enumerate() {
            let (sub, rest) = split_index(idx, n, &[pa, pb]);
            residual[rest] += bra[sub].conj() * a;
        }
        Ok((rest_modes, residual))
    }
}

/// Maximally entangled two-photon state on `(mode_a, mode_b)`; the first
/// listed mode is the left factor in the Bell-state definition.
pub fn make_bell(label: BellLabel, mode_a: usize, mode_b: usize) -> Result<Ket> {
    check_mode(mode_a)?;
    check_mode(mode_b)?;
    if mode_a == mode_b {
        return Err(Error::DuplicateMode(mode_a));
    }
    Ket::new(&[mode_a, mode_b], label.amplitudes().to_vec())
}

/// Tensor product of two states on disjoint modes.
pub fn tensor(a: &Ket, b: &Ket) -> Result<Ket> {
    a.tensor(b)
}

/// One term of a Bell-basis expansion.
#[derive(Clone, Debug)]
pub struct BellTerm {
    pub label: BellLabel,
    pub coefficient: C64,
    /// Normalized state of the remaining modes, phased so its first
    /// non-negligible amplitude is real and positive. `None` when the
    /// coefficient vanishes.
    pub residual: Option<Ket>,
}

/// Expands a four-photon state in the Bell basis of `pair`:
/// `|ψ⟩ = Σ_k c_k |B_k⟩_pair ⊗ |r_k⟩_rest`.
///
/// Residual phases are fixed so that Bell-state residuals come out in the
/// standard form, which puts the relative signs into the coefficients.
pub fn bell_decompose(state: &Ket, pair: (usize, usize)) -> Result<Vec<BellTerm>> {
    if state.num_photons() != 4 {
        return Err(Error::PhotonCount {
            expected: 4,
            got: state.num_photons(),
        });
    }
    BellLabel::ALL
        .iter()
        .map(|&label| {
            let (rest_modes, residual) = state.contract_pair(pair, &label.amplitudes())?;
            let norm = residual.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-14 {
                return Ok(BellTerm {
                    label,
                    coefficient: ZERO,
                    residual: None,
                });
            }
            let lead = residual
                .iter()
                .find(|a| a.norm() > 1e-9 * norm)
                .copied()
                .unwrap_or(ONE);
            let phase = lead / lead.norm();
            let coefficient = phase * norm;
            let amps = residual.iter().map(|a| a / coefficient).collect();
            Ok(BellTerm {
                label,
                coefficient,
                residual: Some(Ket::normalized(&rest_modes, amps)?),
            })
        })
        .collect()
}

/// Result of projecting a pair onto one Bell state.
#[derive(Clone, Debug)]
pub struct BsmProjection {
    pub probability: f64,
    /// `None` flags a zero-probability outcome.
    pub post_state: Option<Ket>,
}

pub fn project_bsm(state: &Ket, outcome: BellLabel, pair: (usize, usize)) -> Result<BsmProjection> {
    if state.num_photons() != 4 {
        return Err(Error::PhotonCount {
            expected: 4,
            got: state.num_photons(),
        });
    }
    let (rest_modes, residual) = state.contract_pair(pair, &outcome.amplitudes())?;
    let probability: f64 = residual.iter().map(|a| a.norm_sqr()).sum();
    if probability < 1e-28 {
        return Ok(BsmProjection {
            probability: 0.0,
            post_state: None,
        });
    }
    Ok(BsmProjection {
        probability,
        post_state: Some(Ket::normalized(&rest_modes, residual)?),
    })
}

/// Density operator over the polarization basis of 1 to 4 photons.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOp {
    modes: Vec<usize>,
    matrix: DMatrix<C64>,
}

impl DensityOp {
    pub fn from_ket(ket: &Ket) -> Self {
        let v = nalgebra::DVector::from_column_slice(&ket.amps);
        DensityOp {
            modes: ket.modes.clone(),
            matrix: &v * v.adjoint(),
        }
    }

    pub fn maximally_mixed(modes: &[usize]) -> Result<Self> {
        check_modes(modes)?;
        let mut modes = modes.to_vec();
        modes.sort_unstable();
        let d = 1 << modes.len();
        Ok(DensityOp {
            modes,
            matrix: DMatrix::identity(d, d) / c(d as f64),
        })
    }

    /// Validated constructor. `modes` must be ascending.
    pub fn from_matrix(modes: &[usize], matrix: DMatrix<C64>) -> Result<Self> {
        check_modes(modes)?;
        if modes.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Config(
                "density operator modes must be ascending".into(),
            ));
        }
        let d = 1 << modes.len();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::Config(format!("expected {d}x{d} matrix")));
        }
        let rho = DensityOp {
            modes: modes.to_vec(),
            matrix,
        };
        rho.validate()?;
        Ok(rho)
    }

    /// Two-photon state with Pauli correlation tensor `diag(txx, tyy, tzz)`
    /// and maximally mixed marginals: `(I + Σ t_k σ_k⊗σ_k)/4`.
    pub fn bell_diagonal(mode_a: usize, mode_b: usize, t: [f64; 3]) -> Result<Self> {
        if mode_a >= mode_b {
            return Err(Error::Config(
                "bell_diagonal expects mode_a < mode_b".into(),
            ));
        }
        let i = C64::i();
        let sx = DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        let sy = DMatrix::from_row_slice(2, 2, &[ZERO, -i, i, ZERO]);
        let sz = DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
        let mut m = DMatrix::<C64>::identity(4, 4);
        for (s, tk) in [sx, sy, sz].iter().zip(t) {
            m += s.kronecker(s) * c(tk);
        }
        DensityOp::from_matrix(&[mode_a, mode_b], m / c(4.0))
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn num_photons(&self) -> usize {
        self.modes.len()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Checks trace, Hermiticity and positivity within [`STATE_TOL`].
    pub fn validate(&self) -> Result<()> {
        let tr = self.matrix.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::OutOfRange {
                name: "trace",
                value: tr.re,
                lo: 1.0,
                hi: 1.0,
            });
        }
        let herm = (&self.matrix - self.matrix.adjoint()).camax();
        if herm > STATE_TOL {
            return Err(Error::Config(format!(
                "matrix not Hermitian (deviation {herm:e})"
            )));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -STATE_TOL {
            return Err(Error::Config(format!(
                "matrix not positive (eigenvalue {min_eig:e})"
            )));
        }
        Ok(())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Convex combination `Σ w_i ρ_i`; weights are renormalized.
    pub fn mixture(parts: &[(f64, &DensityOp)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Config("empty mixture".into()))?
            .1;
        let total: f64 = parts.iter().map(|p| p.0).sum();
        if total <= 0.0 {
            return Err(Error::Config("mixture weights sum to zero".into()));
        }
        let mut m = DMatrix::<C64>::zeros(first.matrix.nrows(), first.matrix.ncols());
        for (w, rho) in parts {
            if rho.modes != first.modes {
                return Err(Error::Config("mixture of states on different modes".into()));
            }
            if *w < 0.0 {
                return Err(Error::Config("negative mixture weight".into()));
            }
            m += &rho.matrix * c(*w / total);
        }
        Ok(DensityOp {
            modes: first.modes.clone(),
            matrix: m,
        })
    }

    fn positions(&self, modes: &[usize]) -> Result<Vec<usize>> {
        modes
            .iter()
            .map(|&m| {
                self.modes
                    .iter()
                    .position(|&x| x == m)
                    .ok_or(Error::MissingMode(m))
            })
            .collect()
    }

    /// Tensor product with a state on disjoint modes.
    pub fn tensor(&self, other: &DensityOp) -> Result<DensityOp> {
        if let Some(&m) = self.modes.iter().find(|m| other.modes.contains(m)) {
            return Err(Error::OverlappingModes(m));
        }
        let mut modes = self.modes.clone();
        modes.extend_from_slice(&other.modes);
        let n = modes.len();
        let m = self.matrix.kronecker(&other.matrix);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&p| modes[p]);
        let perm = |idx: usize| order.iter().fold(0, |acc, &p| (acc << 1) | bit(idx, p, n));
        let d = 1 << n;
        let mut out = DMatrix::<C64>::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                out[(perm(i), perm(j))] = m[(i, j)];
            }
        }
        modes.sort_unstable();
        Ok(DensityOp { modes, matrix: out })
    }

    /// Embeds an operator acting on `targets` (in that order) into the full
    /// space of this state.
    pub fn lift(&self, op: &DMatrix<C64>, targets: &[usize]) -> Result<DMatrix<C64>> {
        let pos = self.positions(targets)?;
        let n = self.num_photons();
        let d = 1 << n;
        let mut full = DMatrix::<C64>::zeros(d, d);
        for i in 0..d {
            let (si, ri) = split_index(i, n, &pos);
            for j in 0..d {
                let (sj, rj) = split_index(j, n, &pos);
                if ri == rj {
                    full[(i, j)] = op[(si, sj)];
                }
            }
        }
        Ok(full)
    }

    /// Trace over every mode not in `keep`.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityOp> {
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        let pos = self.positions(&keep)?;
        let n = self.num_photons();
        let dk = 1 << keep.len();
        let mut out = DMatrix::<C64>::zeros(dk, dk);
        for i in 0..(1 << n) {
            let (si, ri) = split_index(i, n, &pos);
            for j in 0..(1 << n) {
                let (sj, rj) = split_index(j, n, &pos);
                if ri == rj {
                    out[(si, sj)] += self.matrix[(i, j)];
                }
            }
        }
        Ok(DensityOp {
            modes: keep,
            matrix: out,
        })
    }

    /// `Tr[ρ · op]` for an operator on `targets`.
    pub fn expectation(&self, op: &DMatrix<C64>, targets: &[usize]) -> Result<f64> {
        let full = self.lift(op, targets)?;
        Ok((&self.matrix * full).trace().re)
    }

    /// Applies a projector (or any Kraus operator) on `targets`; returns the
    /// outcome weight and the renormalized state (`None` if the weight is 0).
    pub fn apply_projector(
        &self,
        op: &DMatrix<C64>,
        targets: &[usize],
    ) -> Result<(f64, Option<DensityOp>)> {
        let full = self.lift(op, targets)?;
        let m = &full * &self.matrix * full.adjoint();
        let p = m.trace().re;
        if p < 1e-15 {
            return Ok((p.max(0.0), None));
        }
        Ok((
            p,
            Some(DensityOp {
                modes: self.modes.clone(),
                matrix: m / c(p),
            }),
        ))
    }

    /// `⟨ψ|ρ|ψ⟩` for a pure state on the same modes.
    pub fn overlap_with(&self, ket: &Ket) -> Result<f64> {
        if ket.modes != self.modes {
            return Err(Error::Config("overlap of states on different modes".into()));
        }
        let v = nalgebra::DVector::from_column_slice(&ket.amps);
        Ok((v.adjoint() * &self.matrix * &v)[(0, 0)].re)
    }

    /// Conjugates the state by a unitary acting on `targets`.
    pub fn transform(&self, unitary: &DMatrix<C64>, targets: &[usize]) -> Result<DensityOp> {
        let full = self.lift(unitary, targets)?;
        Ok(DensityOp {
            modes: self.modes.clone(),
            matrix: &full * &self.matrix * full.adjoint(),
        })
    }
}

/// Rank-one projector `|v⟩⟨v|` on one qubit.
fn projector(v: [C64; 2]) -> DMatrix<C64> {
    let col = nalgebra::DVector::from_column_slice(&v);
    &col * col.adjoint()
}

#[derive(Clone, Debug)]
pub struct PolarizationMeasurement {
    pub prob_plus: f64,
    pub prob_minus: f64,
    pub plus_state: Option<DensityOp>,
    pub minus_state: Option<DensityOp>,
}

/// Two-channel polarizing measurement of `mode` at `angle`.
pub fn measure_polarization(
    rho: &DensityOp,
    mode: usize,
    angle: AnalyzerAngle,
) -> Result<PolarizationMeasurement> {
    let (prob_plus, plus_state) = rho.apply_projector(&projector(angle.plus_vector()), &[mode])?;
    let (prob_minus, minus_state) =
        rho.apply_projector(&projector(angle.minus_vector()), &[mode])?;
    Ok(PolarizationMeasurement {
        prob_plus,
        prob_minus,
        plus_state,
        minus_state,
    })
}

/// Joint outcome probabilities `[p₊₊, p₊₋, p₋₊, p₋₋]` for analyzers on the
/// two modes of a two-photon state (first mode at `phi0`).
pub fn joint_probabilities(
    rho: &DensityOp,
    phi0: AnalyzerAngle,
    phi3: AnalyzerAngle,
) -> Result<[f64; 4]> {
    if rho.num_photons() != 2 {
        return Err(Error::PhotonCount {
            expected: 2,
            got: rho.num_photons(),
        });
    }
    let (m0, m1) = (rho.modes[0], rho.modes[1]);
    let vecs = |a: AnalyzerAngle| [a.plus_vector(), a.minus_vector()];
    let mut out = [0.0; 4];
    for (i, u) in vecs(phi0).into_iter().enumerate() {
        for (j, w) in vecs(phi3).into_iter().enumerate() {
            let op = projector(u).kronecker(&projector(w));
            out[2 * i + j] = rho.expectation(&op, &[m0, m1])?.max(0.0);
        }
    }
    Ok(out)
}

/// Polarization correlation `E(φ0, φ3) = Tr[ρ (O_φ0 ⊗ O_φ3)]`.
pub fn correlation_qm(rho: &DensityOp, phi0: AnalyzerAngle, phi3: AnalyzerAngle) -> Result<f64> {
    if rho.num_photons() != 2 {
        return Err(Error::PhotonCount {
            expected: 2,
            got: rho.num_photons(),
        });
    }
    let op = phi0.observable().kronecker(&phi3.observable());
    rho.expectation(&op, &[rho.modes[0], rho.modes[1]])
}

/// Singlet correlation `−cos 2(φ0 − φ3)`.
pub fn singlet_correlation(phi0: AnalyzerAngle, phi3: AnalyzerAngle) -> f64 {
    -(2.0 * (phi0.radians() - phi3.radians())).cos()
}

/// Werner mixture with singlet fidelity `f`:
/// `p |Ψ⁻⟩⟨Ψ⁻| + (1 − p) I/4`, `p = (4f − 1)/3`.
pub fn werner(f: f64, mode_a: usize, mode_b: usize) -> Result<DensityOp> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::OutOfRange {
            name: "fidelity",
            value: f,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let p = (4.0 * f - 1.0) / 3.0;
    let pure = DensityOp::from_ket(&make_bell(BellLabel::PsiMinus, mode_a, mode_b)?);
    let mixed = DensityOp::maximally_mixed(&[mode_a, mode_b])?;
    let matrix = pure.matrix * c(p) + mixed.matrix * c(1.0 - p);
    DensityOp::from_matrix(&pure.modes, matrix)
}

/// `⟨B|ρ|B⟩` for a two-photon state and Bell state `B`.
pub fn fidelity(rho: &DensityOp, target: BellLabel) -> Result<f64> {
    if rho.num_photons() != 2 {
        return Err(Error::PhotonCount {
            expected: 2,
            got: rho.num_photons(),
        });
    }
    let ket = make_bell(target, rho.modes[0], rho.modes[1])?;
    rho.overlap_with(&ket)
}
