//! Dense complex linear algebra on small qubit registers.
//!
//! Basis index convention: qubit 1 is the most significant bit, so the
//! tensor slot order is `1 ⊗ 2 ⊗ … ⊗ n`. Every register in this crate has at
//! most four qubits, which keeps all matrices at or below 16×16.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::PauliWord;

/// Tolerance for algebraic identities (hermiticity, involution, normalisation).
pub const ALGEBRA_TOL: f64 = 1e-9;
/// Branches with probability at or below this are reported as unreachable.
pub const BRANCH_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Square complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Operator {
    dim: usize,
    entries: Vec<Complex64>,
}

impl Operator {
    pub fn from_entries(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Ok(Operator { dim, entries })
    }

    pub fn zeros(dim: usize) -> Self {
        Operator {
            dim,
            entries: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.entries[i * dim + i] = ONE;
        }
        m
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.entries[i * values.len() + i] = Complex64::new(v, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn matmul(&self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.entries[k * n..(k + 1) * n];
                let dst = &mut out[i * n..(i + 1) * n];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Operator { dim: n, entries: out }
    }

    pub fn kron(&self, rhs: &Operator) -> Operator {
        let (n, m) = (self.dim, rhs.dim);
        let d = n * m;
        let mut out = vec![ZERO; d * d];
        for i in 0..n {
            for j in 0..n {
                let a = self.entries[i * n + j];
                for k in 0..m {
                    for l in 0..m {
                        out[(i * m + k) * d + j * m + l] = a * rhs.entries[k * m + l];
                    }
                }
            }
        }
        Operator { dim: d, entries: out }
    }

    pub fn adjoint(&self) -> Operator {
        let n = self.dim;
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                out[j * n + i] = self.entries[i * n + j].conj();
            }
        }
        Operator { dim: n, entries: out }
    }

    pub fn scale(&self, factor: Complex64) -> Operator {
        Operator {
            dim: self.dim,
            entries: self.entries.iter().map(|&z| z * factor).collect(),
        }
    }

    pub fn scale_real(&self, factor: f64) -> Operator {
        self.scale(Complex64::new(factor, 0.0))
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() <= ALGEBRA_TOL
    }

    /// `max |M² − I|`.
    pub fn involution_defect(&self) -> f64 {
        self.matmul(self).max_abs_diff(&Operator::identity(self.dim))
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        &self.matmul(other) - &other.matmul(self)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn zip_with(&self, rhs: &Operator, f: impl Fn(Complex64, Complex64) -> Complex64) -> Operator {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        Operator {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.matmul(rhs)
    }
}

fn qubit_count(dim: usize) -> Option<usize> {
    dim.is_power_of_two().then(|| dim.trailing_zeros() as usize)
}

/// Pure state on a qubit register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if qubit_count(amplitudes.len()).is_none() {
            return Err(Error::InvalidState(format!(
                "length {} is not a power of two",
                amplitudes.len()
            )));
        }
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > ALGEBRA_TOL {
            return Err(Error::InvalidState(format!("squared norm is {norm}")));
        }
        Ok(StateVector { amplitudes })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        StateVector { amplitudes }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn num_qubits(&self) -> usize {
        qubit_count(self.dim()).unwrap_or(0)
    }

    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let amplitudes = self
            .amplitudes
            .iter()
            .flat_map(|&a| other.amplitudes.iter().map(move |&b| a * b))
            .collect();
        StateVector { amplitudes }
    }

    /// Re-labels qubits: qubit `k` (1-based) in `self` becomes qubit
    /// `order[k-1]` in the result.
    pub fn permute_qubits(&self, order: &[usize]) -> Result<StateVector> {
        let n = self.num_qubits();
        check_slots(order, n)?;
        if order.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: order.len(),
            });
        }
        let mut out = vec![ZERO; self.dim()];
        for (idx, &amp) in self.amplitudes.iter().enumerate() {
            let mut target = 0usize;
            for (k, &dest) in order.iter().enumerate() {
                let bit = (idx >> (n - 1 - k)) & 1;
                target |= bit << (n - dest);
            }
            out[target] = amp;
        }
        Ok(StateVector { amplitudes: out })
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn density(&self) -> DensityOperator {
        let n = self.dim();
        let mut entries = vec![ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                entries[i * n + j] = self.amplitudes[i] * self.amplitudes[j].conj();
            }
        }
        DensityOperator(Operator { dim: n, entries })
    }
}

/// Mixed state: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Operator", into = "Operator")]
pub struct DensityOperator(Operator);

impl DensityOperator {
    pub fn new(op: Operator) -> Result<Self> {
        if qubit_count(op.dim).is_none() {
            return Err(Error::InvalidState(format!(
                "dimension {} is not a power of two",
                op.dim
            )));
        }
        let herm = op.hermiticity_defect();
        if herm > ALGEBRA_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = op.trace();
        if (tr.re - 1.0).abs() > ALGEBRA_TOL || tr.im.abs() > ALGEBRA_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}")));
        }
        if !is_positive_semidefinite(&op, ALGEBRA_TOL) {
            return Err(Error::InvalidState(
                "operator has a negative eigenvalue below -1e-9".into(),
            ));
        }
        Ok(DensityOperator(op))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityOperator(Operator::identity(dim).scale_real(1.0 / dim as f64))
    }

    pub fn operator(&self) -> &Operator {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn num_qubits(&self) -> usize {
        qubit_count(self.0.dim).unwrap_or(0)
    }

    /// Convex combination `weight·self + (1 − weight)·other`.
    pub fn mix(&self, other: &DensityOperator, weight: f64) -> DensityOperator {
        DensityOperator(&self.0.scale_real(weight) + &other.0.scale_real(1.0 - weight))
    }

    /// Reduced state on the given 1-based qubits (kept in ascending order).
    pub fn partial_trace_keep(&self, keep: &[usize]) -> Result<DensityOperator> {
        let n = self.num_qubits();
        check_slots(keep, n)?;
        let mut keep: Vec<usize> = keep.to_vec();
        keep.sort_unstable();
        let traced: Vec<usize> = (1..=n).filter(|q| !keep.contains(q)).collect();
        let kd = 1usize << keep.len();
        let td = 1usize << traced.len();
        let compose = |kept_bits: usize, traced_bits: usize| -> usize {
            let mut idx = 0usize;
            for (j, &q) in keep.iter().enumerate() {
                idx |= ((kept_bits >> (keep.len() - 1 - j)) & 1) << (n - q);
            }
            for (j, &q) in traced.iter().enumerate() {
                idx |= ((traced_bits >> (traced.len() - 1 - j)) & 1) << (n - q);
            }
            idx
        };
        let mut out = Operator::zeros(kd);
        for r in 0..kd {
            for c in 0..kd {
                let mut acc = ZERO;
                for t in 0..td {
                    acc += self.0.get(compose(r, t), compose(c, t));
                }
                out.entries[r * kd + c] = acc;
            }
        }
        Ok(DensityOperator(out))
    }

    /// Depolarizing channel on the leading `qubits` qubits:
    /// `ρ → visibility·ρ + (1 − visibility)·(I/d ⊗ Tr_lead ρ)`.
    pub fn depolarize_leading(&self, qubits: usize, visibility: f64) -> DensityOperator {
        if visibility == 1.0 {
            return self.clone();
        }
        let n = self.num_qubits();
        assert!(qubits <= n);
        let ld = 1usize << qubits;
        let rd = 1usize << (n - qubits);
        let d = self.0.dim;
        // Tr over the leading factor.
        let mut rest = vec![ZERO; rd * rd];
        for a in 0..ld {
            for r in 0..rd {
                for c in 0..rd {
                    rest[r * rd + c] += self.0.entries[(a * rd + r) * d + a * rd + c];
                }
            }
        }
        let mut out = self.0.scale_real(visibility);
        let w = (1.0 - visibility) / ld as f64;
        for a in 0..ld {
            for r in 0..rd {
                for c in 0..rd {
                    out.entries[(a * rd + r) * d + a * rd + c] += rest[r * rd + c] * w;
                }
            }
        }
        DensityOperator(out)
    }

    /// Ginibre-distributed random mixed state on `2^qubits` dimensions.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, qubits: usize) -> DensityOperator {
        let d = 1usize << qubits;
        let g = Operator {
            dim: d,
            entries: (0..d * d)
                .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect(),
        };
        let m = g.matmul(&g.adjoint());
        let tr = m.trace().re;
        let mut op = m.scale_real(1.0 / tr);
        // Remove round-off asymmetry.
        op = (&op + &op.adjoint()).scale_real(0.5);
        DensityOperator(op)
    }
}

impl TryFrom<Operator> for DensityOperator {
    type Error = Error;
    fn try_from(op: Operator) -> Result<Self> {
        DensityOperator::new(op)
    }
}

impl From<DensityOperator> for Operator {
    fn from(d: DensityOperator) -> Operator {
        d.0
    }
}

/// Positive semidefiniteness via Cholesky of `M + tol·I`.
fn is_positive_semidefinite(m: &Operator, tol: f64) -> bool {
    let n = m.dim;
    let mut l = vec![ZERO; n * n];
    for j in 0..n {
        let mut diag = m.get(j, j).re + tol;
        for k in 0..j {
            diag -= l[j * n + k].norm_sqr();
        }
        if diag <= 0.0 {
            return false;
        }
        let ljj = diag.sqrt();
        l[j * n + j] = Complex64::new(ljj, 0.0);
        for i in (j + 1)..n {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = s / ljj;
        }
    }
    true
}

/// Eigenprojectors of a dichotomic observable.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorPair {
    pub plus: Operator,
    pub minus: Operator,
}

impl ProjectorPair {
    pub fn for_outcome(&self, outcome: i8) -> &Operator {
        if outcome >= 0 {
            &self.plus
        } else {
            &self.minus
        }
    }
}

fn check_slots(slots: &[usize], total: usize) -> Result<()> {
    for (i, &s) in slots.iter().enumerate() {
        if s == 0 || s > total {
            return Err(Error::SlotOutOfRange { slot: s, total });
        }
        if slots[..i].contains(&s) {
            return Err(Error::DuplicateSlot(s));
        }
    }
    Ok(())
}

/// Embeds `word` on the 1-based qubit `slots` of a `total_qubits` register,
/// identity elsewhere. `word[k]` acts on `slots[k]`.
pub fn tensor_embed(word: &PauliWord, slots: &[usize], total_qubits: usize) -> Result<Operator> {
    if word.len() != slots.len() {
        return Err(Error::WordLengthMismatch {
            letters: word.len(),
            slots: slots.len(),
        });
    }
    check_slots(slots, total_qubits)?;
    let mut letters = vec![crate::pauli::Pauli::I; total_qubits];
    for (&p, &s) in word.letters().iter().zip(slots) {
        letters[s - 1] = p;
    }
    Ok(letters
        .iter()
        .fold(Operator::identity(1), |acc, p| acc.kron(&p.matrix())))
}

/// `(I ± M)/2` for a Hermitian involution `M`.
pub fn dichotomic_projectors(obs: &Operator) -> Result<ProjectorPair> {
    let herm = obs.hermiticity_defect();
    if herm > ALGEBRA_TOL {
        return Err(Error::NotHermitian(herm));
    }
    let inv = obs.involution_defect();
    if inv > ALGEBRA_TOL {
        return Err(Error::NotDichotomic(inv));
    }
    let id = Operator::identity(obs.dim());
    Ok(ProjectorPair {
        plus: (&id + obs).scale_real(0.5),
        minus: (&id - obs).scale_real(0.5),
    })
}

/// `Tr(ρ·M)`; fails if the imaginary part exceeds the algebra tolerance.
pub fn expectation(state: &DensityOperator, obs: &Operator) -> Result<f64> {
    if state.dim() != obs.dim() {
        return Err(Error::DimensionMismatch {
            expected: state.dim(),
            found: obs.dim(),
        });
    }
    let n = obs.dim();
    let rho = state.operator();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += rho.get(i, k) * obs.get(k, i);
        }
    }
    if acc.im.abs() > ALGEBRA_TOL {
        return Err(Error::ImaginaryResidue(acc.im.abs()));
    }
    Ok(acc.re)
}

/// Result of a projective (Lüders) update on one outcome branch.
#[derive(Debug, Clone)]
pub enum Branch {
    Reached {
        probability: f64,
        state: DensityOperator,
    },
    /// Probability at or below [`BRANCH_TOL`].
    Unreachable { probability: f64 },
}

impl Branch {
    pub fn probability(&self) -> f64 {
        match self {
            Branch::Reached { probability, .. } | Branch::Unreachable { probability } => {
                *probability
            }
        }
    }

    pub fn state(&self) -> Option<&DensityOperator> {
        match self {
            Branch::Reached { state, .. } => Some(state),
            Branch::Unreachable { .. } => None,
        }
    }
}

/// Lüders rule `ρ → PρP / Tr(PρP)`.
pub fn luders_update(state: &DensityOperator, proj: &Operator) -> Result<Branch> {
    if state.dim() != proj.dim() {
        return Err(Error::DimensionMismatch {
            expected: state.dim(),
            found: proj.dim(),
        });
    }
    let herm = proj.hermiticity_defect();
    if herm > ALGEBRA_TOL {
        return Err(Error::NotHermitian(herm));
    }
    let idem = proj.matmul(proj).max_abs_diff(proj);
    if idem > ALGEBRA_TOL {
        return Err(Error::NotProjector(idem));
    }
    Ok(luders_unchecked(state, proj))
}

/// [`luders_update`] without re-validating a projector already known good.
pub(crate) fn luders_unchecked(state: &DensityOperator, proj: &Operator) -> Branch {
    // PρP = P·(Pρ)† for Hermitian P and ρ; left products skip P's zeros.
    let sandwiched = proj.matmul(&proj.matmul(state.operator()).adjoint());
    let probability = sandwiched.trace().re.clamp(0.0, 1.0);
    if probability <= BRANCH_TOL {
        return Branch::Unreachable { probability };
    }
    let mut post = sandwiched.scale_real(1.0 / probability);
    post = (&post + &post.adjoint()).scale_real(0.5);
    Branch::Reached {
        probability,
        state: DensityOperator(post),
    }
}
