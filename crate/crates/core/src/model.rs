//! The Peres–Mermin scenario: nine two-qubit observables on Alice's photon,
//! their seven primed copies on Bob's, the six measured sequences and the
//! twelve remote-correlation terms.
//!
//! Qubit roles in the four-qubit register (slot order 1⊗2⊗3⊗4):
//! 1 = Alice spatial mode, 2 = Alice polarization, 3 = Bob spatial mode,
//! 4 = Bob polarization. `|0⟩` is H / the first path, `|1⟩` is V / the second.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    dichotomic_projectors, tensor_embed, Operator, ProjectorPair, StateVector, ALGEBRA_TOL,
};
use crate::pauli::{Pauli, PauliWord};

pub const NUM_QUBITS: usize = 4;
pub const DIM: usize = 1 << NUM_QUBITS;
pub const ALICE_QUBITS: [usize; 2] = [1, 2];
pub const BOB_QUBITS: [usize; 2] = [3, 4];

/// One of the nine observables of the square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Observable {
    A,
    B,
    C,
    #[serde(rename = "a")]
    SmallA,
    #[serde(rename = "b")]
    SmallB,
    #[serde(rename = "c")]
    SmallC,
    #[serde(rename = "alpha")]
    Alpha,
    #[serde(rename = "beta")]
    Beta,
    #[serde(rename = "gamma")]
    Gamma,
}

impl Observable {
    pub const ALL: [Observable; 9] = [
        Observable::A,
        Observable::B,
        Observable::C,
        Observable::SmallA,
        Observable::SmallB,
        Observable::SmallC,
        Observable::Alpha,
        Observable::Beta,
        Observable::Gamma,
    ];

    /// Observables Bob can measure (as primed copies).
    pub const BOB: [Observable; 7] = [
        Observable::A,
        Observable::B,
        Observable::C,
        Observable::SmallA,
        Observable::SmallB,
        Observable::Alpha,
        Observable::Gamma,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Position within [`Observable::BOB`], if Bob has this observable.
    pub fn bob_index(self) -> Option<usize> {
        Self::BOB.iter().position(|&o| o == self)
    }

    /// Pauli word over (spatial mode, polarization).
    pub fn word(self) -> PauliWord {
        use Pauli::*;
        let (s, p) = match self {
            Observable::A => (Z, I),
            Observable::B => (I, Z),
            Observable::C => (Z, Z),
            Observable::SmallA => (I, X),
            Observable::SmallB => (X, I),
            Observable::SmallC => (X, X),
            Observable::Alpha => (Z, X),
            Observable::Beta => (X, Z),
            Observable::Gamma => (Y, Y),
        };
        PauliWord::new(vec![s, p])
    }

    pub fn ascii(self) -> &'static str {
        match self {
            Observable::A => "A",
            Observable::B => "B",
            Observable::C => "C",
            Observable::SmallA => "a",
            Observable::SmallB => "b",
            Observable::SmallC => "c",
            Observable::Alpha => "alpha",
            Observable::Beta => "beta",
            Observable::Gamma => "gamma",
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Observable::Alpha => "α",
            Observable::Beta => "β",
            Observable::Gamma => "γ",
            other => other.ascii(),
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Observable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Observable::ALL
            .into_iter()
            .find(|o| o.ascii() == s || o.symbol() == s)
            .ok_or_else(|| Error::UnknownLabel(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Alice,
    Bob,
}

/// An observable together with the laboratory it is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObservableLabel {
    pub observable: Observable,
    pub party: Party,
}

impl ObservableLabel {
    pub fn alice(observable: Observable) -> Self {
        ObservableLabel {
            observable,
            party: Party::Alice,
        }
    }

    /// Bob's primed copy; fails for `c` and `β`, which Bob never measures.
    pub fn bob(observable: Observable) -> Result<Self> {
        if observable.bob_index().is_none() {
            return Err(Error::UnknownLabel(format!("{}'", observable.ascii())));
        }
        Ok(ObservableLabel {
            observable,
            party: Party::Bob,
        })
    }

    pub fn qubits(self) -> [usize; 2] {
        match self.party {
            Party::Alice => ALICE_QUBITS,
            Party::Bob => BOB_QUBITS,
        }
    }

    pub fn ascii(self) -> String {
        match self.party {
            Party::Alice => self.observable.ascii().to_string(),
            Party::Bob => format!("{}'", self.observable.ascii()),
        }
    }
}

impl fmt::Display for ObservableLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.party {
            Party::Alice => write!(f, "{}", self.observable),
            Party::Bob => write!(f, "{}'", self.observable),
        }
    }
}

impl FromStr for ObservableLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.strip_suffix('\'') {
            Some(base) => ObservableLabel::bob(base.parse().map_err(|_| {
                Error::UnknownLabel(s.to_string())
            })?),
            None => Ok(ObservableLabel::alice(s.parse()?)),
        }
    }
}

/// 16-dimensional operator for a registered label.
pub fn build_observable(label: ObservableLabel) -> Operator {
    tensor_embed(&label.observable.word(), &label.qubits(), NUM_QUBITS)
        .expect("registered labels embed on valid slots")
}

/// The six measured sequences, in the order they appear in χ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ContextId {
    #[serde(rename = "C-A-B")]
    Cab,
    #[serde(rename = "c-b-a")]
    Cba,
    #[serde(rename = "beta-gamma-alpha")]
    BetaGammaAlpha,
    #[serde(rename = "alpha-A-a")]
    AlphaAa,
    #[serde(rename = "beta-b-B")]
    BetaBb,
    #[serde(rename = "c-gamma-C")]
    CGammaC,
}

impl ContextId {
    pub const ALL: [ContextId; 6] = [
        ContextId::Cab,
        ContextId::Cba,
        ContextId::BetaGammaAlpha,
        ContextId::AlphaAa,
        ContextId::BetaBb,
        ContextId::CGammaC,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn labels(self) -> [Observable; 3] {
        use Observable::*;
        match self {
            ContextId::Cab => [C, A, B],
            ContextId::Cba => [SmallC, SmallB, SmallA],
            ContextId::BetaGammaAlpha => [Beta, Gamma, Alpha],
            ContextId::AlphaAa => [Alpha, A, SmallA],
            ContextId::BetaBb => [Beta, SmallB, B],
            ContextId::CGammaC => [SmallC, Gamma, C],
        }
    }

    pub fn chi_sign(self) -> i8 {
        match self {
            ContextId::CGammaC => -1,
            _ => 1,
        }
    }

    pub fn ascii(self) -> String {
        self.labels().map(|o| o.ascii()).join("-")
    }

    pub fn symbol(self) -> String {
        self.labels().map(|o| o.symbol()).concat()
    }
}

impl fmt::Display for ContextId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.symbol())
    }
}

impl FromStr for ContextId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ContextId::ALL
            .into_iter()
            .find(|c| c.ascii() == s || c.symbol() == s)
            .ok_or_else(|| Error::UnknownSequence(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextSequence {
    pub id: ContextId,
    pub labels: [Observable; 3],
    pub chi_sign: i8,
}

pub fn context_table() -> [ContextSequence; 6] {
    ContextId::ALL.map(|id| ContextSequence {
        id,
        labels: id.labels(),
        chi_sign: id.chi_sign(),
    })
}

/// One remote-correlation term: Alice's outcome at `position` (2 or 3) of
/// `sequence` against Bob's primed copy of the same observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct STerm {
    pub sequence: ContextId,
    pub position: u8,
    pub observable: Observable,
    /// Sign of the ideal-state prediction for this correlator.
    pub fixed_sign: i8,
}

impl STerm {
    pub fn alice_label(&self) -> ObservableLabel {
        ObservableLabel::alice(self.observable)
    }

    pub fn bob_label(&self) -> ObservableLabel {
        ObservableLabel::bob(self.observable).expect("S-terms use Bob observables")
    }

    pub fn id(&self) -> String {
        format!(
            "{}{}'@{}",
            self.observable.ascii(),
            self.observable.ascii(),
            self.sequence.ascii()
        )
    }
}

/// Ideal-state sign of `⟨X X'⟩`: single-qubit observables anticorrelate
/// across a singlet, two-qubit words correlate.
fn frozen_fixed_sign(o: Observable) -> i8 {
    match o {
        Observable::A | Observable::B | Observable::SmallA | Observable::SmallB => -1,
        _ => 1,
    }
}

pub fn s_term_table() -> [STerm; 12] {
    use ContextId::*;
    use Observable::*;
    let rows = [
        (Cab, 2, A),
        (Cab, 3, B),
        (Cba, 2, SmallB),
        (Cba, 3, SmallA),
        (BetaGammaAlpha, 2, Gamma),
        (BetaGammaAlpha, 3, Alpha),
        (AlphaAa, 2, A),
        (AlphaAa, 3, SmallA),
        (BetaBb, 2, SmallB),
        (BetaBb, 3, B),
        (CGammaC, 2, Gamma),
        (CGammaC, 3, C),
    ];
    rows.map(|(sequence, position, observable)| STerm {
        sequence,
        position,
        observable,
        fixed_sign: frozen_fixed_sign(observable),
    })
}

/// `(|0⟩⊗|1⟩ − e^{iφ}|1⟩⊗|0⟩)/√2`; `φ = 0` is the singlet.
pub fn phased_singlet(phase: f64) -> StateVector {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let zero = Complex64::new(0.0, 0.0);
    StateVector::new(vec![
        zero,
        Complex64::new(h, 0.0),
        -Complex64::from_polar(h, phase),
        zero,
    ])
    .expect("normalized")
}

/// `|ψ_φ⟩₁₃ ⊗ |ψ_φ⟩₂₄` in slot order 1⊗2⊗3⊗4.
pub fn hyperentangled_state(phase: f64) -> StateVector {
    let pair = phased_singlet(phase);
    // pair ⊗ pair is ordered (1,3,2,4): send qubit 2 of that product to slot 3
    // and qubit 3 to slot 2.
    pair.tensor(&pair)
        .permute_qubits(&[1, 3, 2, 4])
        .expect("valid permutation")
}

pub fn build_ideal_state() -> StateVector {
    hyperentangled_state(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextAlgebra {
    pub commuting: bool,
    pub product_sign: i8,
}

/// Checks pairwise commutation and that the ordered product is `±I`.
pub fn verify_context_algebra(seq: &ContextSequence) -> Result<ContextAlgebra> {
    let ops = seq.labels.map(|o| build_observable(ObservableLabel::alice(o)));
    let mut commuting = true;
    for i in 0..3 {
        for j in (i + 1)..3 {
            if ops[i].commutator(&ops[j]).max_abs() > ALGEBRA_TOL {
                commuting = false;
            }
        }
    }
    if !commuting {
        return Err(Error::InvalidState(format!(
            "sequence {} contains non-commuting observables",
            seq.id
        )));
    }
    let product = ops[0].matmul(&ops[1]).matmul(&ops[2]);
    let id = Operator::identity(DIM);
    let product_sign = if product.max_abs_diff(&id) <= ALGEBRA_TOL {
        1
    } else if product.max_abs_diff(&id.scale_real(-1.0)) <= ALGEBRA_TOL {
        -1
    } else {
        return Err(Error::InvalidState(format!(
            "product of sequence {} is not ±I",
            seq.id
        )));
    };
    Ok(ContextAlgebra {
        commuting,
        product_sign,
    })
}

/// Precomputed operators and projectors for every label.
pub struct Registry {
    alice: Vec<(Operator, ProjectorPair)>,
    bob: Vec<(Operator, ProjectorPair)>,
}

impl Registry {
    fn build() -> Self {
        let make = |label: ObservableLabel| {
            let op = build_observable(label);
            let proj = dichotomic_projectors(&op).expect("registered observables are dichotomic");
            (op, proj)
        };
        Registry {
            alice: Observable::ALL
                .iter()
                .map(|&o| make(ObservableLabel::alice(o)))
                .collect(),
            bob: Observable::BOB
                .iter()
                .map(|&o| make(ObservableLabel::bob(o).unwrap()))
                .collect(),
        }
    }

    pub fn get() -> &'static Registry {
        static REGISTRY: OnceLock<Registry> = OnceLock::new();
        REGISTRY.get_or_init(Registry::build)
    }

    fn entry(&self, label: ObservableLabel) -> &(Operator, ProjectorPair) {
        match label.party {
            Party::Alice => &self.alice[label.observable.index()],
            Party::Bob => {
                &self.bob[label
                    .observable
                    .bob_index()
                    .expect("Bob labels are validated at construction")]
            }
        }
    }

    pub fn operator(&self, label: ObservableLabel) -> &Operator {
        &self.entry(label).0
    }

    pub fn projectors(&self, label: ObservableLabel) -> &ProjectorPair {
        &self.entry(label).1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableEntry {
    pub name: String,
    pub party: Party,
    pub word: PauliWord,
    pub qubits: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceEntry {
    pub id: ContextId,
    pub labels: [Observable; 3],
    pub chi_sign: i8,
}

/// Serializable view of the whole scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistryDocument {
    pub qubit_roles: [String; 4],
    pub observables: Vec<ObservableEntry>,
    pub sequences: Vec<SequenceEntry>,
    pub s_terms: Vec<STerm>,
}

pub fn registry_document() -> RegistryDocument {
    let entry = |label: ObservableLabel| ObservableEntry {
        name: label.ascii(),
        party: label.party,
        word: label.observable.word(),
        qubits: label.qubits(),
    };
    let observables = Observable::ALL
        .iter()
        .map(|&o| entry(ObservableLabel::alice(o)))
        .chain(
            Observable::BOB
                .iter()
                .map(|&o| entry(ObservableLabel::bob(o).unwrap())),
        )
        .collect();
    RegistryDocument {
        qubit_roles: [
            "alice spatial mode".into(),
            "alice polarization".into(),
            "bob spatial mode".into(),
            "bob polarization".into(),
        ],
        observables,
        sequences: context_table()
            .iter()
            .map(|s| SequenceEntry {
                id: s.id,
                labels: s.labels,
                chi_sign: s.chi_sign,
            })
            .collect(),
        s_terms: s_term_table().to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{expectation, DensityOperator};

    fn all_labels() -> Vec<ObservableLabel> {
        Observable::ALL
            .iter()
            .map(|&o| ObservableLabel::alice(o))
            .chain(Observable::BOB.iter().map(|&o| ObservableLabel::bob(o).unwrap()))
            .collect()
    }

    #[test]
    fn a_is_z_on_qubit_one() {
        let a = build_observable(ObservableLabel::alice(Observable::A));
        let naive = Pauli::Z
            .matrix()
            .kron(&Operator::identity(8));
        assert!(a.max_abs_diff(&naive) < 1e-15);
    }

    #[test]
    fn gamma_prime_is_yy_on_bob() {
        let g = build_observable(ObservableLabel::bob(Observable::Gamma).unwrap());
        let naive = Operator::identity(4).kron(&Pauli::Y.matrix()).kron(&Pauli::Y.matrix());
        assert!(g.max_abs_diff(&naive) < 1e-15);
    }

    #[test]
    fn c_equals_a_times_b() {
        let r = Registry::get();
        let a = r.operator(ObservableLabel::alice(Observable::A));
        let b = r.operator(ObservableLabel::alice(Observable::B));
        let c = r.operator(ObservableLabel::alice(Observable::C));
        assert!(a.matmul(b).max_abs_diff(c) < 1e-15);
    }

    #[test]
    fn all_observables_are_dichotomic() {
        for label in all_labels() {
            let m = build_observable(label);
            assert!(m.hermiticity_defect() <= 1e-9, "{label}");
            assert!(m.involution_defect() <= 1e-9, "{label}");
            assert!(!label.observable.word().is_identity());
        }
    }

    #[test]
    fn bob_has_no_c_or_beta() {
        assert!(ObservableLabel::bob(Observable::SmallC).is_err());
        assert!(ObservableLabel::bob(Observable::Beta).is_err());
        assert!("beta'".parse::<ObservableLabel>().is_err());
        assert_eq!(
            "gamma'".parse::<ObservableLabel>().unwrap(),
            ObservableLabel::bob(Observable::Gamma).unwrap()
        );
        assert!("delta".parse::<ObservableLabel>().is_err());
    }

    #[test]
    fn ideal_state_properties() {
        let psi = build_ideal_state();
        let norm: f64 = psi.amplitudes().iter().map(|z| z.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        let rho = psi.density();
        let reduced = rho.partial_trace_keep(&[1, 2]).unwrap();
        assert!(reduced
            .operator()
            .max_abs_diff(DensityOperator::maximally_mixed(4).operator())
            < 1e-12);
        let r = Registry::get();
        let aa = r
            .operator(ObservableLabel::alice(Observable::A))
            .matmul(r.operator(ObservableLabel::bob(Observable::A).unwrap()));
        assert!((expectation(&rho, &aa).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn ideal_state_is_antisymmetric_under_partner_swaps() {
        let psi = build_ideal_state();
        for order in [[3, 2, 1, 4], [1, 4, 3, 2]] {
            let swapped = psi.permute_qubits(&order).unwrap();
            assert!((swapped.inner(&psi).re + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn slot_order_is_self_consistent() {
        let s = phased_singlet(0.0);
        // (2,4) ⊗ (1,3): factor k of the product lands on slot order[k].
        let alt = s.tensor(&s).permute_qubits(&[2, 4, 1, 3]).unwrap();
        let direct = build_ideal_state();
        for (x, y) in alt.amplitudes().iter().zip(direct.amplitudes()) {
            assert!((x - y).norm() < 1e-15);
        }
        // Direct amplitude construction: ψ(q1,q3)·ψ(q2,q4).
        let psi = |x: usize, y: usize| match (x, y) {
            (0, 1) => std::f64::consts::FRAC_1_SQRT_2,
            (1, 0) => -std::f64::consts::FRAC_1_SQRT_2,
            _ => 0.0,
        };
        for idx in 0..16 {
            let q = |k: usize| (idx >> (4 - k)) & 1;
            let expected = psi(q(1), q(3)) * psi(q(2), q(4));
            assert!((direct.amplitudes()[idx].re - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn context_table_signs() {
        let t = context_table();
        assert_eq!(t.len(), 6);
        let signs: Vec<i8> = t.iter().map(|s| s.chi_sign).collect();
        assert_eq!(signs, vec![1, 1, 1, 1, 1, -1]);
        assert_eq!(ContextId::CGammaC.chi_sign(), -1);
        assert_eq!(ContextId::Cab.chi_sign(), 1);
        assert_eq!(ContextId::Cab.symbol(), "CAB");
        assert_eq!(ContextId::BetaGammaAlpha.symbol(), "βγα");
    }

    #[test]
    fn context_algebra() {
        let expected = [1, 1, 1, 1, 1, -1];
        for (seq, &sign) in context_table().iter().zip(&expected) {
            let alg = verify_context_algebra(seq).unwrap();
            assert!(alg.commuting);
            assert_eq!(alg.product_sign, sign, "{}", seq.id);
        }
    }

    #[test]
    fn non_commuting_sequence_is_rejected() {
        let bad = ContextSequence {
            id: ContextId::Cab,
            labels: [Observable::A, Observable::SmallB, Observable::B],
            chi_sign: 1,
        };
        assert!(verify_context_algebra(&bad).is_err());
    }

    #[test]
    fn alice_and_bob_observables_commute() {
        let r = Registry::get();
        let mut pairs = 0;
        for &a in &Observable::ALL {
            for &b in &Observable::BOB {
                let x = r.operator(ObservableLabel::alice(a));
                let y = r.operator(ObservableLabel::bob(b).unwrap());
                assert!(x.commutator(y).max_abs() <= 1e-9);
                pairs += 1;
            }
        }
        assert_eq!(pairs, 63);
    }

    #[test]
    fn s_terms_match_printed_layout() {
        let t = s_term_table();
        assert_eq!(t.len(), 12);
        for seq in ContextId::ALL {
            let terms: Vec<_> = t.iter().filter(|s| s.sequence == seq).collect();
            assert_eq!(terms.len(), 2);
            assert_eq!(terms[0].position, 2);
            assert_eq!(terms[1].position, 3);
            assert_eq!(terms[0].observable, seq.labels()[1]);
            assert_eq!(terms[1].observable, seq.labels()[2]);
        }
        assert_eq!(t[0].observable, Observable::A);
        assert_eq!(t[1].observable, Observable::B);
    }

    #[test]
    fn fixed_signs_regenerate_from_ideal_state() {
        let rho = build_ideal_state().density();
        let r = Registry::get();
        for term in s_term_table() {
            let op = r
                .operator(term.alice_label())
                .matmul(r.operator(term.bob_label()));
            let e = expectation(&rho, &op).unwrap();
            assert!((e.abs() - 1.0).abs() < 1e-9, "{}", term.id());
            assert_eq!(e.signum() as i8, term.fixed_sign, "{}", term.id());
        }
    }

    #[test]
    fn pauli_products_commute_with_embedding() {
        // embed(w1)·embed(w2) = phase·embed(w1·w2) for every ordered pair.
        for &x in &Observable::ALL {
            for &y in &Observable::ALL {
                let (phase, w) = x.word().mul(&y.word());
                let lhs = build_observable(ObservableLabel::alice(x))
                    .matmul(&build_observable(ObservableLabel::alice(y)));
                let rhs = tensor_embed(&w, &ALICE_QUBITS, NUM_QUBITS)
                    .unwrap()
                    .scale(phase);
                assert!(lhs.max_abs_diff(&rhs) <= 1e-9, "{x}{y}");
            }
        }
        // Disjoint slots: Alice word on (1,2) times Bob word on (3,4).
        for &x in &Observable::ALL {
            for &y in &Observable::BOB {
                let lhs = build_observable(ObservableLabel::alice(x))
                    .matmul(&build_observable(ObservableLabel::bob(y).unwrap()));
                let joined = PauliWord::new(
                    x.word()
                        .letters()
                        .iter()
                        .chain(y.word().letters())
                        .copied()
                        .collect(),
                );
                let rhs = tensor_embed(&joined, &[1, 2, 3, 4], NUM_QUBITS).unwrap();
                assert!(lhs.max_abs_diff(&rhs) <= 1e-9);
            }
        }
    }

    #[test]
    fn registry_json_round_trips() {
        let doc = registry_document();
        assert_eq!(doc.observables.len(), 16);
        let json = serde_json::to_string(&doc).unwrap();
        let back: RegistryDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(back, doc);
        assert!(json.contains("\"word\":\"YY\""));
    }

    #[test]
    fn labels_parse_both_spellings() {
        assert_eq!("α".parse::<Observable>().unwrap(), Observable::Alpha);
        assert_eq!("alpha".parse::<Observable>().unwrap(), Observable::Alpha);
        assert_eq!("cγC".parse::<ContextId>().unwrap(), ContextId::CGammaC);
        assert_eq!("c-gamma-C".parse::<ContextId>().unwrap(), ContextId::CGammaC);
    }
}
