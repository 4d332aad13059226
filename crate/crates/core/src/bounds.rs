//! Exhaustive hidden-variable sweeps.
//!
//! Strategies are deterministic: every outcome is `±1`. All sweep arithmetic
//! is integer; the reported maximum is an `i32`.
//!
//! Strategy ordering (for witnesses): an assignment index `i` maps bit `k`
//! to outcome `+1` when clear and `−1` when set. Bob indices are scanned
//! ascending, then per-sequence Alice triples in sequence order, each
//! triple index having position 1 as its most significant bit.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{context_table, s_term_table, ContextId, Observable, STerm};
use crate::sequential::SignMode;

const NUM_SEQ: usize = 6;
const NUM_BOB: usize = 7;
const NUM_ALICE: usize = 9;

fn outcome(index: usize, bit: usize) -> i8 {
    if (index >> bit) & 1 == 0 {
        1
    } else {
        -1
    }
}

fn triple(index: usize) -> [i8; 3] {
    [outcome(index, 2), outcome(index, 1), outcome(index, 0)]
}

fn bob_assignment(index: usize) -> [i8; NUM_BOB] {
    std::array::from_fn(|k| outcome(index, k))
}

/// One outcome per Alice observable, used in every context it appears in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NchvAssignment {
    /// Indexed by [`Observable::index`].
    pub values: [i8; NUM_ALICE],
}

impl NchvAssignment {
    pub fn from_index(index: usize) -> Self {
        NchvAssignment {
            values: std::array::from_fn(|k| outcome(index, k)),
        }
    }

    pub fn value(&self, o: Observable) -> i8 {
        self.values[o.index()]
    }

    pub fn chi(&self) -> i32 {
        context_table()
            .iter()
            .map(|s| {
                let p: i8 = s.labels.iter().map(|&o| self.value(o)).product();
                i32::from(s.chi_sign) * i32::from(p)
            })
            .sum()
    }

    /// Per-sequence responses implied by this assignment.
    pub fn lift(&self) -> [[i8; 3]; NUM_SEQ] {
        ContextId::ALL.map(|c| c.labels().map(|o| self.value(o)))
    }
}

/// Alice answers per announced sequence; Bob per own setting only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    /// Indexed by [`ContextId::index`]; outcomes in measurement order.
    pub alice: [[i8; 3]; NUM_SEQ],
    /// Indexed by [`Observable::bob_index`].
    pub bob: [i8; NUM_BOB],
}

impl DeterministicStrategy {
    pub fn bob_value(&self, o: Observable) -> i8 {
        self.bob[o.bob_index().expect("Bob observable")]
    }
}

fn term_value(term: &STerm, alice: &[i8; 3], bob: &[i8; NUM_BOB], mode: SignMode) -> i32 {
    let a = alice[usize::from(term.position) - 1];
    let b = bob[term.observable.bob_index().expect("Bob observable")];
    match mode {
        // |⟨XX'⟩| of a deterministic pair is always 1.
        SignMode::Absolute => 1,
        SignMode::FixedSign => i32::from(term.fixed_sign) * i32::from(a) * i32::from(b),
    }
}

/// χ-term plus the two S-terms of `sequence`.
pub fn sequence_contribution(
    sequence: ContextId,
    alice: &[i8; 3],
    bob: &[i8; NUM_BOB],
    mode: SignMode,
) -> i32 {
    let chi = i32::from(sequence.chi_sign()) * alice.iter().map(|&x| i32::from(x)).product::<i32>();
    let s: i32 = s_term_table()
        .iter()
        .filter(|t| t.sequence == sequence)
        .map(|t| term_value(t, alice, bob, mode))
        .sum();
    chi + s
}

/// `χ + S` of a deterministic strategy.
pub fn evaluate_strategy(strategy: &DeterministicStrategy, mode: SignMode) -> i32 {
    let chi: i32 = ContextId::ALL
        .iter()
        .map(|&c| {
            let p: i8 = strategy.alice[c.index()].iter().product();
            i32::from(c.chi_sign()) * i32::from(p)
        })
        .sum();
    let s: i32 = s_term_table()
        .iter()
        .map(|t| term_value(t, &strategy.alice[t.sequence.index()], &strategy.bob, mode))
        .sum();
    chi + s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelClass {
    /// Noncontextual assignments, χ only.
    Nchv,
    /// Local: Alice may answer per sequence, Bob per setting.
    Lhv,
    /// Local with Alice's first outcome shared by sequences with the same
    /// first observable.
    LhvPastOnly,
    /// Local and noncontextual.
    NcLocal,
}

impl ModelClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelClass::Nchv => "nchv",
            ModelClass::Lhv => "lhv",
            ModelClass::LhvPastOnly => "lhv-past-only",
            ModelClass::NcLocal => "nc-local",
        }
    }
}

impl fmt::Display for ModelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nchv" => Ok(ModelClass::Nchv),
            "lhv" => Ok(ModelClass::Lhv),
            "lhv-past-only" => Ok(ModelClass::LhvPastOnly),
            "nc-local" => Ok(ModelClass::NcLocal),
            other => Err(Error::Config(format!("unknown model class `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Witness {
    Nchv(NchvAssignment),
    Strategy(DeterministicStrategy),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub model_class: ModelClass,
    /// `None` for the χ-only sweep.
    pub sign_mode: Option<SignMode>,
    pub maximum: i32,
    pub witness: Witness,
    pub maximizer_count: u64,
    pub sweep_size: u64,
}

impl BoundReport {
    pub fn maximum_value(&self) -> f64 {
        f64::from(self.maximum)
    }

    /// Re-evaluates the witness with the class objective.
    pub fn witness_value(&self) -> i32 {
        match (&self.witness, self.sign_mode) {
            (Witness::Nchv(a), None) => a.chi(),
            (Witness::Nchv(a), Some(mode)) => match self.model_class {
                ModelClass::NcLocal => panic!("nc-local witnesses carry a strategy"),
                _ => evaluate_strategy(
                    &DeterministicStrategy {
                        alice: a.lift(),
                        bob: [1; NUM_BOB],
                    },
                    mode,
                ),
            },
            (Witness::Strategy(s), Some(mode)) => evaluate_strategy(s, mode),
            (Witness::Strategy(s), None) => evaluate_strategy(s, SignMode::FixedSign),
        }
    }
}

/// Running maximum with count; first-seen wins ties, so merging partial
/// results in ascending partition order is deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaxTracker<W> {
    pub best: i32,
    pub witness: Option<W>,
    pub count: u64,
}

impl<W: Copy> MaxTracker<W> {
    pub fn new() -> Self {
        MaxTracker {
            best: i32::MIN,
            witness: None,
            count: 0,
        }
    }

    pub fn offer(&mut self, value: i32, multiplicity: u64, witness: impl FnOnce() -> W) {
        if value > self.best {
            self.best = value;
            self.witness = Some(witness());
            self.count = multiplicity;
        } else if value == self.best {
            self.count += multiplicity;
        }
    }

    /// Combines with a tracker covering a later partition.
    pub fn merge(self, later: MaxTracker<W>) -> MaxTracker<W> {
        if later.best > self.best {
            later
        } else if later.best < self.best {
            self
        } else {
            MaxTracker {
                count: self.count + later.count,
                ..self
            }
        }
    }
}

impl<W: Copy> Default for MaxTracker<W> {
    fn default() -> Self {
        Self::new()
    }
}

/// Maximum of χ over all 512 noncontextual assignments.
pub fn enumerate_nchv_chi() -> BoundReport {
    let mut t = MaxTracker::new();
    for i in 0..(1usize << NUM_ALICE) {
        let a = NchvAssignment::from_index(i);
        t.offer(a.chi(), 1, || a);
    }
    BoundReport {
        model_class: ModelClass::Nchv,
        sign_mode: None,
        maximum: t.best,
        witness: Witness::Nchv(t.witness.unwrap()),
        maximizer_count: t.count,
        sweep_size: 1 << NUM_ALICE,
    }
}

/// Best triple for one sequence under a fixed Bob assignment:
/// `(value, first maximizing triple index, number of maximizers)`.
/// `first` restricts position 1 when set.
fn best_triple(seq: ContextId, bob: &[i8; NUM_BOB], mode: SignMode, first: Option<i8>) -> (i32, usize, u64) {
    let mut best = (i32::MIN, 0usize, 0u64);
    for idx in 0..8 {
        let t = triple(idx);
        if first.is_some_and(|f| f != t[0]) {
            continue;
        }
        let v = sequence_contribution(seq, &t, bob, mode);
        if v > best.0 {
            best = (v, idx, 1);
        } else if v == best.0 {
            best.2 += 1;
        }
    }
    best
}

/// Per-Bob-assignment optimum of the decomposed LHV objective.
fn lhv_for_bob(bob_index: usize, mode: SignMode, past_only: bool) -> MaxTracker<DeterministicStrategy> {
    let bob = bob_assignment(bob_index);
    let mut alice = [[1i8; 3]; NUM_SEQ];
    let mut total = 0i32;
    let mut count = 1u64;

    // Groups of sequences whose first outcome must agree.
    let groups: Vec<Vec<ContextId>> = if past_only {
        let mut g: Vec<(Observable, Vec<ContextId>)> = Vec::new();
        for c in ContextId::ALL {
            let first = c.labels()[0];
            match g.iter_mut().find(|(o, _)| *o == first) {
                Some((_, v)) => v.push(c),
                None => g.push((first, vec![c])),
            }
        }
        g.into_iter().map(|(_, v)| v).collect()
    } else {
        ContextId::ALL.iter().map(|&c| vec![c]).collect()
    };

    for group in &groups {
        if group.len() == 1 {
            let (v, idx, n) = best_triple(group[0], &bob, mode, None);
            total += v;
            count *= n;
            alice[group[0].index()] = triple(idx);
            continue;
        }
        // Shared first outcome: try +1 then −1.
        let mut best: Option<(i32, Vec<usize>, u64)> = None;
        let mut tied = 0u64;
        for first in [1i8, -1] {
            let parts: Vec<_> = group
                .iter()
                .map(|&c| best_triple(c, &bob, mode, Some(first)))
                .collect();
            let v: i32 = parts.iter().map(|p| p.0).sum();
            let n: u64 = parts.iter().map(|p| p.2).product();
            let idxs: Vec<usize> = parts.iter().map(|p| p.1).collect();
            match &best {
                Some((b, _, _)) if v < *b => {}
                Some((b, _, _)) if v == *b => tied += n,
                _ => {
                    best = Some((v, idxs, n));
                    tied = n;
                }
            }
        }
        let (v, idxs, _) = best.unwrap();
        total += v;
        count *= tied;
        for (&c, idx) in group.iter().zip(idxs) {
            alice[c.index()] = triple(idx);
        }
    }
    let mut t = MaxTracker::new();
    t.offer(total, count, || DeterministicStrategy { alice, bob });
    t
}

/// Maximum of `χ + S` over local deterministic strategies, decomposed per
/// Bob assignment and per sequence (2⁷ × (2³)⁶ strategies).
pub fn enumerate_lhv_omega(mode: SignMode, past_only: bool) -> BoundReport {
    enumerate_lhv_partitioned(mode, past_only, 1)
}

/// Same sweep split into `parts` contiguous Bob-index ranges and merged.
pub fn enumerate_lhv_partitioned(mode: SignMode, past_only: bool, parts: usize) -> BoundReport {
    let n = 1usize << NUM_BOB;
    let parts = parts.clamp(1, n);
    let chunk = n.div_ceil(parts);
    let merged = (0..n)
        .step_by(chunk)
        .map(|start| {
            (start..(start + chunk).min(n))
                .map(|b| lhv_for_bob(b, mode, past_only))
                .fold(MaxTracker::new(), MaxTracker::merge)
        })
        .fold(MaxTracker::new(), MaxTracker::merge);
    BoundReport {
        model_class: if past_only {
            ModelClass::LhvPastOnly
        } else {
            ModelClass::Lhv
        },
        sign_mode: Some(mode),
        maximum: merged.best,
        witness: Witness::Strategy(merged.witness.unwrap()),
        maximizer_count: merged.count,
        sweep_size: (1u64 << NUM_BOB) * (1u64 << (3 * NUM_SEQ)),
    }
}

/// Maximum of fixed-sign `χ + S` with noncontextual Alice and local Bob.
pub fn noncontextual_local_omega() -> BoundReport {
    noncontextual_local_restricted(|_| true)
}

/// As [`noncontextual_local_omega`], restricted to Bob indices accepted by `keep`.
pub fn noncontextual_local_restricted(keep: impl Fn(usize) -> bool) -> BoundReport {
    let mut t = MaxTracker::new();
    let mut size = 0u64;
    for b in (0..(1usize << NUM_BOB)).filter(|&b| keep(b)) {
        let bob = bob_assignment(b);
        for a in 0..(1usize << NUM_ALICE) {
            let s = DeterministicStrategy {
                alice: NchvAssignment::from_index(a).lift(),
                bob,
            };
            size += 1;
            t.offer(evaluate_strategy(&s, SignMode::FixedSign), 1, || s);
        }
    }
    BoundReport {
        model_class: ModelClass::NcLocal,
        sign_mode: Some(SignMode::FixedSign),
        maximum: t.best,
        witness: Witness::Strategy(t.witness.expect("non-empty sweep")),
        maximizer_count: t.count,
        sweep_size: size,
    }
}

/// Bob index with every outcome `+1`.
pub const BOB_ALL_PLUS: usize = 0;

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_strategy(rng: &mut impl Rng) -> DeterministicStrategy {
        DeterministicStrategy {
            alice: std::array::from_fn(|_| triple(rng.random_range(0..8))),
            bob: bob_assignment(rng.random_range(0..128)),
        }
    }

    fn witness_16() -> DeterministicStrategy {
        // Noncontextual all-(+1) Alice, Bob −1 on A',B',a',b'.
        let mut bob = [1i8; NUM_BOB];
        for o in [Observable::A, Observable::B, Observable::SmallA, Observable::SmallB] {
            bob[o.bob_index().unwrap()] = -1;
        }
        DeterministicStrategy {
            alice: [[1; 3]; NUM_SEQ],
            bob,
        }
    }

    #[test]
    fn nchv_maximum_is_four() {
        let r = enumerate_nchv_chi();
        assert_eq!(r.maximum, 4);
        assert_eq!(r.sweep_size, 512);
        assert_eq!(r.witness_value(), 4);
        // Frozen from the full sweep.
        assert_eq!(r.maximizer_count, 96);
    }

    #[test]
    fn all_plus_assignment_scores_four() {
        assert_eq!(NchvAssignment::from_index(0).chi(), 4);
    }

    #[test]
    fn all_plus_strategy_fixed_sign() {
        let s = DeterministicStrategy {
            alice: [[1; 3]; NUM_SEQ],
            bob: [1; NUM_BOB],
        };
        // χ = 4, S = 4·(+1) + 8·(−1).
        assert_eq!(evaluate_strategy(&s, SignMode::FixedSign), 0);
        assert_eq!(evaluate_strategy(&s, SignMode::Absolute), 16);
    }

    #[test]
    fn sixteen_witness() {
        assert_eq!(evaluate_strategy(&witness_16(), SignMode::FixedSign), 16);
    }

    #[test]
    fn single_flip_costs_two() {
        let base = witness_16();
        for term in s_term_table() {
            let mut flipped = base;
            flipped.alice[term.sequence.index()][usize::from(term.position) - 1] *= -1;
            // Flipping an S-observed outcome also flips that sequence's χ-term,
            // so isolate the S effect by flipping position 1 in compensation.
            flipped.alice[term.sequence.index()][0] *= -1;
            assert_eq!(
                evaluate_strategy(&flipped, SignMode::FixedSign),
                evaluate_strategy(&base, SignMode::FixedSign) - 2
            );
        }
    }

    #[test]
    fn lhv_fixed_sign_sweep() {
        let r = enumerate_lhv_omega(SignMode::FixedSign, false);
        assert_eq!(r.sweep_size, 1 << 25);
        assert_eq!(r.witness_value(), r.maximum);
        // Position 1 never enters S, so each sequence reaches 1 + 2 for every
        // Bob assignment, with one maximizing triple.
        assert_eq!(r.maximum, 18);
        assert_eq!(r.maximizer_count, 128);
    }

    #[test]
    fn lhv_absolute_sweep() {
        let r = enumerate_lhv_omega(SignMode::Absolute, false);
        assert_eq!(r.witness_value(), r.maximum);
        assert_eq!(r.maximum, 18);
        assert_eq!(r.maximizer_count, 128 * 4u64.pow(6));
    }

    #[test]
    fn lhv_past_only_sweep() {
        let r = enumerate_lhv_omega(SignMode::FixedSign, true);
        assert_eq!(r.model_class, ModelClass::LhvPastOnly);
        assert_eq!(r.witness_value(), r.maximum);
        if let Witness::Strategy(s) = r.witness {
            assert_eq!(s.alice[ContextId::Cba.index()][0], s.alice[ContextId::CGammaC.index()][0]);
            assert_eq!(
                s.alice[ContextId::BetaGammaAlpha.index()][0],
                s.alice[ContextId::BetaBb.index()][0]
            );
        }
        assert_eq!(r.maximum, 18);
        assert_eq!(r.maximizer_count, 32);
    }

    #[test]
    fn nc_local_sweep() {
        let r = noncontextual_local_omega();
        assert_eq!(r.maximum, 16);
        assert_eq!(r.sweep_size, 512 * 128);
        assert_eq!(r.witness_value(), 16);
        assert_eq!(r.maximizer_count, 96);
        // Witness: χ-maximizing assignment with sign-matched Bob.
        let Witness::Strategy(s) = r.witness else { panic!() };
        let chi: i32 = ContextId::ALL
            .iter()
            .map(|&c| i32::from(c.chi_sign()) * i32::from(s.alice[c.index()].iter().product::<i8>()))
            .sum();
        assert_eq!(chi, 4);
        for t in s_term_table() {
            let a = s.alice[t.sequence.index()][usize::from(t.position) - 1];
            assert_eq!(t.fixed_sign * a * s.bob_value(t.observable), 1);
        }
    }

    #[test]
    fn nc_local_bob_all_plus() {
        let r = noncontextual_local_restricted(|b| b == BOB_ALL_PLUS);
        assert_eq!(r.sweep_size, 512);
        // Frozen from the sub-sweep: Alice can absorb Bob's signs, so the
        // restriction costs nothing.
        assert_eq!(r.maximum, 16);
        assert_eq!(r.maximizer_count, 2);
    }

    #[test]
    fn decomposition_matches_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..1000 {
            let s = random_strategy(&mut rng);
            for mode in [SignMode::FixedSign, SignMode::Absolute] {
                let parts: i32 = ContextId::ALL
                    .iter()
                    .map(|&c| sequence_contribution(c, &s.alice[c.index()], &s.bob, mode))
                    .sum();
                assert_eq!(parts, evaluate_strategy(&s, mode));
            }
        }
    }

    #[test]
    fn random_subsample_never_beats_sweep() {
        let max = enumerate_lhv_omega(SignMode::FixedSign, false).maximum;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100_000 {
            assert!(evaluate_strategy(&random_strategy(&mut rng), SignMode::FixedSign) <= max);
        }
    }

    #[test]
    fn mixtures_never_beat_vertices() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let (x, y) = (random_strategy(&mut rng), random_strategy(&mut rng));
            let w: f64 = rng.random();
            let vx = f64::from(evaluate_strategy(&x, SignMode::FixedSign));
            let vy = f64::from(evaluate_strategy(&y, SignMode::FixedSign));
            let mixed = w * vx + (1.0 - w) * vy;
            assert!(mixed <= vx.max(vy) + 1e-12);
        }
    }

    #[test]
    fn partitioned_sweeps_agree() {
        let whole = enumerate_lhv_omega(SignMode::FixedSign, true);
        for parts in [2, 3, 7, 128] {
            assert_eq!(enumerate_lhv_partitioned(SignMode::FixedSign, true, parts), whole);
        }
    }

    #[test]
    fn report_json_round_trip() {
        let r = enumerate_lhv_omega(SignMode::FixedSign, false);
        let json = serde_json::to_string(&r).unwrap();
        let back: BoundReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
