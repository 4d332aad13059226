//! Sequential-measurement engine.
//!
//! Alice's three observables are applied as successive Lüders updates in
//! sequence order. An optional depolarizing channel of strength
//! `visibility` acts on Alice's two qubits before her second and third
//! measurements. Bob's single projector is applied to the same branch; it
//! commutes with every Alice step, so where it is placed does not matter.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{luders_unchecked, Branch, DensityOperator, Operator};
use crate::model::{
    context_table, s_term_table, ContextId, Observable, ObservableLabel, Registry, STerm, DIM,
};

/// Classical bound on `χ` for noncontextual models.
pub const NCHV_BOUND: f64 = 4.0;
/// Classical bound on `ω` for local models.
pub const LHV_BOUND: f64 = 16.0;

/// How the twelve remote correlators enter `S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignMode {
    /// `Σ |⟨X X'⟩|`.
    #[default]
    Absolute,
    /// `Σ fixed_sign · ⟨X X'⟩`.
    #[serde(rename = "fixed")]
    FixedSign,
}

impl SignMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SignMode::Absolute => "absolute",
            SignMode::FixedSign => "fixed",
        }
    }

    /// Contribution of one signed correlator to `S`.
    pub fn contribution(self, signed: f64, fixed_sign: i8) -> f64 {
        match self {
            SignMode::Absolute => signed.abs(),
            SignMode::FixedSign => f64::from(fixed_sign) * signed,
        }
    }
}

impl FromStr for SignMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "absolute" | "abs" => Ok(SignMode::Absolute),
            "fixed" | "fixed-sign" => Ok(SignMode::FixedSign),
            other => Err(Error::Config(format!("unknown sign mode `{other}`"))),
        }
    }
}

impl fmt::Display for SignMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One Alice sequence plus an optional Bob setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MeasurementPlan {
    pub sequence: ContextId,
    bob: Option<Observable>,
}

impl MeasurementPlan {
    pub fn alice_only(sequence: ContextId) -> Self {
        MeasurementPlan {
            sequence,
            bob: None,
        }
    }

    pub fn with_bob(sequence: ContextId, bob: Observable) -> Result<Self> {
        ObservableLabel::bob(bob)?;
        Ok(MeasurementPlan {
            sequence,
            bob: Some(bob),
        })
    }

    pub fn bob(&self) -> Option<ObservableLabel> {
        self.bob.map(|o| ObservableLabel::bob(o).expect("validated"))
    }

    pub fn id(&self) -> String {
        match self.bob {
            Some(b) => format!("{}|{}'", self.sequence.ascii(), b.ascii()),
            None => self.sequence.ascii(),
        }
    }

    /// Stable small integer used to derive per-plan RNG streams.
    pub fn stream_index(&self) -> u64 {
        let bob = self.bob.and_then(|o| o.bob_index()).map_or(0, |i| i + 1);
        (self.sequence.index() * 8 + bob) as u64
    }

    /// The twelve plans needed for `S`, in S-term order.
    pub fn s_plans() -> Vec<MeasurementPlan> {
        s_term_table()
            .iter()
            .map(|t| MeasurementPlan::with_bob(t.sequence, t.observable).unwrap())
            .collect()
    }

    pub fn chi_plans() -> Vec<MeasurementPlan> {
        ContextId::ALL.iter().map(|&c| Self::alice_only(c)).collect()
    }

    /// Every sequence with every Bob setting, plus Alice-only plans.
    pub fn all() -> Vec<MeasurementPlan> {
        let mut out = Vec::with_capacity(48);
        for seq in ContextId::ALL {
            out.push(Self::alice_only(seq));
            for b in Observable::BOB {
                out.push(Self::with_bob(seq, b).unwrap());
            }
        }
        out
    }
}

impl fmt::Display for MeasurementPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

impl TryFrom<String> for MeasurementPlan {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MeasurementPlan> for String {
    fn from(p: MeasurementPlan) -> String {
        p.id()
    }
}

impl FromStr for MeasurementPlan {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once('|') {
            Some((seq, bob)) => {
                let label: ObservableLabel = bob.parse()?;
                if label.party != crate::model::Party::Bob {
                    return Err(Error::UnknownLabel(bob.to_string()));
                }
                MeasurementPlan::with_bob(seq.parse()?, label.observable)
            }
            None => Ok(MeasurementPlan::alice_only(s.parse()?)),
        }
    }
}

/// Outcomes of one run: Alice's three in measurement order, Bob's if present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OutcomeTuple {
    pub alice: [i8; 3],
    pub bob: Option<i8>,
}

fn bit(o: i8) -> usize {
    usize::from(o < 0)
}

fn sign(bit: usize) -> i8 {
    if bit == 0 {
        1
    } else {
        -1
    }
}

impl OutcomeTuple {
    /// Index in the distribution's entry order (`+1` before `−1`, Alice first).
    pub fn index(&self) -> usize {
        let a = bit(self.alice[0]) << 2 | bit(self.alice[1]) << 1 | bit(self.alice[2]);
        match self.bob {
            Some(b) => a << 1 | bit(b),
            None => a,
        }
    }

    pub fn from_index(index: usize, with_bob: bool) -> Self {
        let (a, bob) = if with_bob {
            (index >> 1, Some(sign(index & 1)))
        } else {
            (index, None)
        };
        OutcomeTuple {
            alice: [sign((a >> 2) & 1), sign((a >> 1) & 1), sign(a & 1)],
            bob,
        }
    }

    pub fn get(&self, position: Position) -> Option<i8> {
        match position {
            Position::First => Some(self.alice[0]),
            Position::Second => Some(self.alice[1]),
            Position::Third => Some(self.alice[2]),
            Position::Bob => self.bob,
        }
    }
}

/// Outcome slot within a joint distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Position {
    #[serde(rename = "1")]
    First,
    #[serde(rename = "2")]
    Second,
    #[serde(rename = "3")]
    Third,
    #[serde(rename = "B")]
    Bob,
}

impl Position {
    pub fn alice(position: u8) -> Position {
        match position {
            1 => Position::First,
            2 => Position::Second,
            3 => Position::Third,
            other => panic!("Alice position {other} out of range"),
        }
    }

    pub const ALICE: [Position; 3] = [Position::First, Position::Second, Position::Third];
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Position::First => "1",
            Position::Second => "2",
            Position::Third => "3",
            Position::Bob => "B",
        })
    }
}

/// Exact outcome probabilities for one plan. Entries with zero probability
/// are kept so the table always has 8 (or 16, with Bob) rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    pub plan: MeasurementPlan,
    probabilities: Vec<f64>,
}

impl JointDistribution {
    pub fn from_probabilities(plan: MeasurementPlan, probabilities: Vec<f64>) -> Result<Self> {
        let expected = Self::size_for(&plan);
        if probabilities.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: probabilities.len(),
            });
        }
        Ok(JointDistribution {
            plan,
            probabilities,
        })
    }

    pub fn size_for(plan: &MeasurementPlan) -> usize {
        if plan.bob.is_some() {
            16
        } else {
            8
        }
    }

    pub fn has_bob(&self) -> bool {
        self.plan.bob.is_some()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn probability(&self, tuple: &OutcomeTuple) -> f64 {
        self.probabilities[tuple.index()]
    }

    pub fn entries(&self) -> impl Iterator<Item = (OutcomeTuple, f64)> + '_ {
        let with_bob = self.has_bob();
        self.probabilities
            .iter()
            .enumerate()
            .map(move |(i, &p)| (OutcomeTuple::from_index(i, with_bob), p))
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// Distribution of Alice's triple, indexed as in [`OutcomeTuple::index`].
    pub fn alice_marginal(&self) -> [f64; 8] {
        let mut out = [0.0; 8];
        for (t, p) in self.entries() {
            out[OutcomeTuple { bob: None, ..t }.index()] += p;
        }
        out
    }

    /// `[P(+1), P(−1)]` for Bob, if he measured.
    pub fn bob_marginal(&self) -> Option<[f64; 2]> {
        self.has_bob().then(|| {
            let mut out = [0.0; 2];
            for (t, p) in self.entries() {
                out[bit(t.bob.unwrap())] += p;
            }
            out
        })
    }
}

/// Expectation of the product of the outcomes at `positions`.
pub fn correlator(dist: &JointDistribution, positions: &[Position]) -> Result<f64> {
    if positions.contains(&Position::Bob) && !dist.has_bob() {
        return Err(Error::MissingPosition("B".into()));
    }
    Ok(dist
        .entries()
        .map(|(t, p)| {
            let prod: i8 = positions.iter().map(|&pos| t.get(pos).unwrap()).product();
            f64::from(prod) * p
        })
        .sum())
}

/// Where Bob's projector sits relative to Alice's three measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BobPlacement {
    BeforeAlice,
    AfterFirst,
    AfterSecond,
    AfterAlice,
}

#[derive(Clone, Copy)]
enum Step<'a> {
    Measure { op: &'a ProjectorRef<'a>, slot: usize },
    Depolarize,
}

struct ProjectorRef<'a> {
    plus: &'a Operator,
    minus: &'a Operator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiTerm {
    pub sequence: ContextId,
    pub chi_sign: i8,
    /// `⟨o₁ o₂ o₃⟩` for the sequence.
    pub correlator: f64,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiReport {
    pub terms: Vec<ChiTerm>,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct STermValue {
    pub term: STerm,
    /// Signed `⟨X X'⟩` measured within the term's sequence.
    pub signed: f64,
    pub absolute: f64,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SReport {
    pub mode: SignMode,
    pub terms: Vec<STermValue>,
    pub total: f64,
}

/// `χ`, `S` and `ω` with per-term breakdowns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorReport {
    pub chi: ChiReport,
    pub s: SReport,
    pub omega: f64,
    pub chi_violates_nchv: bool,
    pub omega_violates_lhv: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoSignalingReport {
    /// Largest total-variation distance between Bob's marginals across sequences.
    pub bob_deviation: f64,
    /// Largest total-variation distance between Alice's triple marginals
    /// across Bob settings (including no Bob measurement).
    pub alice_deviation: f64,
    pub max_deviation: f64,
}

pub(crate) fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Evaluates measurement plans under an optional between-measurement
/// depolarizing channel on Alice's qubits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Engine {
    visibility: f64,
}

impl Default for Engine {
    fn default() -> Self {
        Engine { visibility: 1.0 }
    }
}

impl Engine {
    pub fn ideal() -> Self {
        Self::default()
    }

    pub fn with_visibility(visibility: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&visibility) {
            return Err(Error::ParameterOutOfRange {
                name: "visibility",
                value: visibility,
                range: "[0, 1]",
            });
        }
        Ok(Engine { visibility })
    }

    pub fn visibility(&self) -> f64 {
        self.visibility
    }

    pub fn run_plan(&self, state: &DensityOperator, plan: &MeasurementPlan) -> Result<JointDistribution> {
        self.run_plan_with(state, plan, BobPlacement::BeforeAlice)
    }

    pub fn run_plan_with(
        &self,
        state: &DensityOperator,
        plan: &MeasurementPlan,
        placement: BobPlacement,
    ) -> Result<JointDistribution> {
        if state.dim() != DIM {
            return Err(Error::DimensionMismatch {
                expected: DIM,
                found: state.dim(),
            });
        }
        let registry = Registry::get();
        let alice: Vec<ProjectorRef> = plan
            .sequence
            .labels()
            .iter()
            .map(|&o| {
                let p = registry.projectors(ObservableLabel::alice(o));
                ProjectorRef {
                    plus: &p.plus,
                    minus: &p.minus,
                }
            })
            .collect();
        let bob = plan.bob().map(|label| {
            let p = registry.projectors(label);
            ProjectorRef {
                plus: &p.plus,
                minus: &p.minus,
            }
        });

        let mut steps: Vec<Step> = vec![
            Step::Measure { op: &alice[0], slot: 0 },
            Step::Depolarize,
            Step::Measure { op: &alice[1], slot: 1 },
            Step::Depolarize,
            Step::Measure { op: &alice[2], slot: 2 },
        ];
        if let Some(b) = bob.as_ref() {
            let at = match placement {
                BobPlacement::BeforeAlice => 0,
                BobPlacement::AfterFirst => 1,
                BobPlacement::AfterSecond => 3,
                BobPlacement::AfterAlice => 5,
            };
            steps.insert(at, Step::Measure { op: b, slot: 3 });
        }

        let mut probabilities = vec![0.0; JointDistribution::size_for(plan)];
        let mut outcomes = [1i8; 4];
        self.descend(state, &steps, 1.0, &mut outcomes, &mut |o, p| {
            let tuple = OutcomeTuple {
                alice: [o[0], o[1], o[2]],
                bob: plan.bob.map(|_| o[3]),
            };
            probabilities[tuple.index()] += p;
        });
        JointDistribution::from_probabilities(*plan, probabilities)
    }

    fn descend(
        &self,
        state: &DensityOperator,
        steps: &[Step],
        weight: f64,
        outcomes: &mut [i8; 4],
        emit: &mut dyn FnMut(&[i8; 4], f64),
    ) {
        let Some((step, rest)) = steps.split_first() else {
            emit(outcomes, weight);
            return;
        };
        match *step {
            Step::Depolarize => {
                let next = state.depolarize_leading(2, self.visibility);
                self.descend(&next, rest, weight, outcomes, emit);
            }
            Step::Measure { op, slot } => {
                for (outcome, proj) in [(1i8, op.plus), (-1i8, op.minus)] {
                    outcomes[slot] = outcome;
                    match luders_unchecked(state, proj) {
                        Branch::Reached { probability, state } => {
                            self.descend(&state, rest, weight * probability, outcomes, emit)
                        }
                        // Keep the row; everything below it has probability zero.
                        Branch::Unreachable { .. } => {
                            self.emit_zero(rest, outcomes, emit);
                        }
                    }
                }
            }
        }
    }

    fn emit_zero(&self, steps: &[Step], outcomes: &mut [i8; 4], emit: &mut dyn FnMut(&[i8; 4], f64)) {
        match steps.split_first() {
            None => emit(outcomes, 0.0),
            Some((Step::Depolarize, rest)) => self.emit_zero(rest, outcomes, emit),
            Some((Step::Measure { slot, .. }, rest)) => {
                for o in [1i8, -1] {
                    outcomes[*slot] = o;
                    self.emit_zero(rest, outcomes, emit);
                }
            }
        }
    }

    pub fn evaluate_chi(&self, state: &DensityOperator) -> Result<ChiReport> {
        let mut terms = Vec::with_capacity(6);
        for seq in context_table() {
            let dist = self.run_plan(state, &MeasurementPlan::alice_only(seq.id))?;
            let c = correlator(&dist, &Position::ALICE)?;
            terms.push(ChiTerm {
                sequence: seq.id,
                chi_sign: seq.chi_sign,
                correlator: c,
                contribution: f64::from(seq.chi_sign) * c,
            });
        }
        let total = terms.iter().map(|t| t.contribution).sum();
        Ok(ChiReport { terms, total })
    }

    pub fn evaluate_s(&self, state: &DensityOperator, mode: SignMode) -> Result<SReport> {
        let mut terms = Vec::with_capacity(12);
        for term in s_term_table() {
            let plan = MeasurementPlan::with_bob(term.sequence, term.observable)?;
            let dist = self.run_plan(state, &plan)?;
            let signed = correlator(&dist, &[Position::alice(term.position), Position::Bob])?;
            terms.push(STermValue {
                term,
                signed,
                absolute: signed.abs(),
                contribution: mode.contribution(signed, term.fixed_sign),
            });
        }
        let total = terms.iter().map(|t| t.contribution).sum();
        Ok(SReport { mode, terms, total })
    }

    pub fn evaluate_omega(&self, state: &DensityOperator, mode: SignMode) -> Result<CorrelatorReport> {
        let chi = self.evaluate_chi(state)?;
        let s = self.evaluate_s(state, mode)?;
        Ok(CorrelatorReport::new(chi, s))
    }

    pub fn no_signaling_report(&self, state: &DensityOperator) -> Result<NoSignalingReport> {
        let mut dists = Vec::new();
        for plan in MeasurementPlan::all() {
            dists.push(self.run_plan(state, &plan)?);
        }
        Ok(no_signaling_from(&dists, |d| d.bob_marginal(), |d| d.alice_marginal()))
    }
}

/// Maximum pairwise total-variation distances of the marginals.
pub(crate) fn no_signaling_from<T>(
    items: &[T],
    bob: impl Fn(&T) -> Option<[f64; 2]>,
    alice: impl Fn(&T) -> [f64; 8],
) -> NoSignalingReport
where
    T: HasPlan,
{
    let mut bob_dev: f64 = 0.0;
    let mut alice_dev: f64 = 0.0;
    for (i, x) in items.iter().enumerate() {
        for y in &items[i + 1..] {
            let (px, py) = (x.plan(), y.plan());
            if px.bob.is_some() && px.bob == py.bob && px.sequence != py.sequence {
                let (mx, my) = (bob(x).unwrap(), bob(y).unwrap());
                bob_dev = bob_dev.max(total_variation(&mx, &my));
            }
            if px.sequence == py.sequence && px.bob != py.bob {
                alice_dev = alice_dev.max(total_variation(&alice(x), &alice(y)));
            }
        }
    }
    NoSignalingReport {
        bob_deviation: bob_dev,
        alice_deviation: alice_dev,
        max_deviation: bob_dev.max(alice_dev),
    }
}

pub(crate) trait HasPlan {
    fn plan(&self) -> &MeasurementPlan;
}

impl HasPlan for JointDistribution {
    fn plan(&self) -> &MeasurementPlan {
        &self.plan
    }
}

impl CorrelatorReport {
    pub fn new(chi: ChiReport, s: SReport) -> Self {
        let omega = chi.total + s.total;
        CorrelatorReport {
            chi_violates_nchv: chi.total > NCHV_BOUND,
            omega_violates_lhv: omega > LHV_BOUND,
            chi,
            s,
            omega,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::expectation;
    use crate::model::{build_ideal_state, verify_context_algebra};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ideal() -> DensityOperator {
        build_ideal_state().density()
    }

    #[test]
    fn cab_on_ideal_state_is_uniform_on_even_triples() {
        let d = Engine::ideal()
            .run_plan(&ideal(), &MeasurementPlan::alice_only(ContextId::Cab))
            .unwrap();
        assert_eq!(d.len(), 8);
        for (t, p) in d.entries() {
            let prod: i8 = t.alice.iter().product();
            let expected = if prod == 1 { 0.25 } else { 0.0 };
            assert!((p - expected).abs() < 1e-12, "{t:?} {p}");
        }
        assert!((correlator(&d, &Position::ALICE).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cgc_supported_on_odd_triples() {
        let d = Engine::ideal()
            .run_plan(&ideal(), &MeasurementPlan::alice_only(ContextId::CGammaC))
            .unwrap();
        for (t, p) in d.entries() {
            if t.alice.iter().product::<i8>() == 1 {
                assert!(p.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bob_b_anticorrelates_with_third_outcome() {
        let plan = MeasurementPlan::with_bob(ContextId::Cab, Observable::B).unwrap();
        let d = Engine::ideal().run_plan(&ideal(), &plan).unwrap();
        assert_eq!(d.len(), 16);
        for (t, p) in d.entries() {
            if p > 1e-12 {
                assert_eq!(t.alice[2] * t.bob.unwrap(), -1);
            }
        }
        assert!((correlator(&d, &[Position::Third, Position::Bob]).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_distribution_correlator_is_zero() {
        let d = JointDistribution::from_probabilities(
            MeasurementPlan::alice_only(ContextId::Cab),
            vec![0.125; 8],
        )
        .unwrap();
        assert_eq!(correlator(&d, &Position::ALICE).unwrap(), 0.0);
    }

    #[test]
    fn correlator_rejects_missing_bob() {
        let d = Engine::ideal()
            .run_plan(&ideal(), &MeasurementPlan::alice_only(ContextId::Cab))
            .unwrap();
        assert!(matches!(
            correlator(&d, &[Position::First, Position::Bob]),
            Err(Error::MissingPosition(_))
        ));
    }

    #[test]
    fn signed_probability_rule_matches_correlator() {
        // P1 − P2 + … with rows ordered so the product sign alternates.
        let d = Engine::ideal()
            .run_plan(&DensityOperator::random(&mut ChaCha8Rng::seed_from_u64(3), 4), &MeasurementPlan::alice_only(ContextId::Cab))
            .unwrap();
        let signed: f64 = d
            .entries()
            .map(|(t, p)| f64::from(t.alice.iter().product::<i8>()) * p)
            .sum();
        assert!((signed - correlator(&d, &Position::ALICE).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn ideal_chi_s_omega() {
        let e = Engine::ideal();
        let rho = ideal();
        let chi = e.evaluate_chi(&rho).unwrap();
        assert!((chi.total - 6.0).abs() < 1e-9);
        for mode in [SignMode::Absolute, SignMode::FixedSign] {
            let s = e.evaluate_s(&rho, mode).unwrap();
            assert!((s.total - 12.0).abs() < 1e-9);
        }
        let r = e.evaluate_omega(&rho, SignMode::Absolute).unwrap();
        assert!((r.omega - 18.0).abs() < 1e-9);
        assert!(r.omega_violates_lhv && r.chi_violates_nchv);
        assert!(r.chi.total > NCHV_BOUND);
    }

    #[test]
    fn maximally_mixed_values() {
        let e = Engine::ideal();
        let rho = DensityOperator::maximally_mixed(DIM);
        let r = e.evaluate_omega(&rho, SignMode::Absolute).unwrap();
        assert!((r.chi.total - 6.0).abs() < 1e-9);
        assert!(r.s.total.abs() < 1e-9);
        assert!((r.omega - 6.0).abs() < 1e-9);
        assert!(!r.omega_violates_lhv);
        let f = e.evaluate_s(&rho, SignMode::FixedSign).unwrap();
        assert!(f.total.abs() < 1e-9);
    }

    #[test]
    fn no_signaling_ideal() {
        let r = Engine::ideal().no_signaling_report(&ideal()).unwrap();
        assert!(r.max_deviation <= 1e-10, "{r:?}");
    }

    #[test]
    fn product_constraint_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let e = Engine::ideal();
        for _ in 0..100 {
            let rho = DensityOperator::random(&mut rng, 4);
            for seq in context_table() {
                let d = e.run_plan(&rho, &MeasurementPlan::alice_only(seq.id)).unwrap();
                let c = correlator(&d, &Position::ALICE).unwrap();
                let sign = verify_context_algebra(&seq).unwrap().product_sign;
                assert!((c - f64::from(sign)).abs() <= 1e-9);
                assert!((d.total() - 1.0).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn undisturbed_remote_correlator() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = Registry::get();
        let e = Engine::ideal();
        for _ in 0..20 {
            let rho = DensityOperator::random(&mut rng, 4);
            for term in s_term_table() {
                let plan = MeasurementPlan::with_bob(term.sequence, term.observable).unwrap();
                let d = e.run_plan(&rho, &plan).unwrap();
                let inside =
                    correlator(&d, &[Position::alice(term.position), Position::Bob]).unwrap();
                let op = r.operator(term.alice_label()).matmul(r.operator(term.bob_label()));
                let plain = expectation(&rho, &op).unwrap();
                assert!((inside - plain).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn plan_ids_round_trip() {
        for plan in MeasurementPlan::all() {
            assert_eq!(plan.id().parse::<MeasurementPlan>().unwrap(), plan);
        }
        assert!("C-A-B|c'".parse::<MeasurementPlan>().is_err());
        let streams: std::collections::HashSet<u64> =
            MeasurementPlan::all().iter().map(|p| p.stream_index()).collect();
        assert_eq!(streams.len(), 48);
    }

    #[test]
    fn visibility_range_checked() {
        assert!(Engine::with_visibility(1.1).is_err());
        assert!(Engine::with_visibility(-0.1).is_err());
    }
}
