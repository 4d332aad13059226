//! Finite-shot sampling, estimators with standard errors, and significance.
//!
//! Each configuration (measurement plan) draws from its own ChaCha20 stream:
//! the master seed selects the key and [`MeasurementPlan::stream_index`] the
//! stream, so results do not depend on the order configurations are run in.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{s_term_table, ContextId, STerm};
use crate::noise::NoiseModel;
use crate::sequential::{
    total_variation, JointDistribution, MeasurementPlan, OutcomeTuple, Position, SignMode,
};

/// Default emitted shots per configuration.
pub const DEFAULT_SHOTS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigCounts {
    pub plan: MeasurementPlan,
    /// Pairs emitted by the source.
    pub emitted: u64,
    /// Pairs surviving detection losses; equals the sum of `counts`.
    pub recorded: u64,
    /// Indexed like the plan's [`JointDistribution`].
    pub counts: Vec<u64>,
}

impl ConfigCounts {
    fn alice_marginal(&self) -> [u64; 8] {
        let with_bob = self.plan.bob().is_some();
        let mut out = [0; 8];
        for (i, &n) in self.counts.iter().enumerate() {
            let t = OutcomeTuple::from_index(i, with_bob);
            out[OutcomeTuple { bob: None, ..t }.index()] += n;
        }
        out
    }

    fn bob_plus(&self) -> Option<u64> {
        self.plan.bob().map(|_| self.counts.iter().step_by(2).sum())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountsTable {
    pub seed: u64,
    pub detection_efficiency: f64,
    pub configs: Vec<ConfigCounts>,
}

impl CountsTable {
    pub fn get(&self, plan: &MeasurementPlan) -> Option<&ConfigCounts> {
        self.configs.iter().find(|c| c.plan == *plan)
    }
}

/// Multinomial draw from `dist` after outcome-independent thinning.
pub fn sample_distribution(
    dist: &JointDistribution,
    shots: u64,
    seed: u64,
    efficiency: f64,
) -> Result<ConfigCounts> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    if !(efficiency > 0.0 && efficiency <= 1.0) {
        return Err(Error::ParameterOutOfRange {
            name: "detection_efficiency",
            value: efficiency,
            range: "(0, 1]",
        });
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(dist.plan.stream_index());

    let recorded = if efficiency < 1.0 {
        Binomial::new(shots, efficiency)
            .expect("efficiency validated")
            .sample(&mut rng)
    } else {
        shots
    };

    // Sequential conditional binomials.
    let probs = dist.probabilities();
    let last_nonzero = probs.iter().rposition(|&p| p > 0.0);
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = recorded;
    let mut mass: f64 = probs.iter().sum();
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 || p <= 0.0 {
            continue;
        }
        if Some(i) == last_nonzero {
            counts[i] = remaining;
            break;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let n = Binomial::new(remaining, q).expect("q in [0, 1]").sample(&mut rng);
        counts[i] = n;
        remaining -= n;
        mass -= p;
    }
    Ok(ConfigCounts {
        plan: dist.plan,
        emitted: shots,
        recorded,
        counts,
    })
}

/// Samples one plan of the full noisy pipeline.
pub fn sample_counts(model: &NoiseModel, plan: &MeasurementPlan, shots: u64, seed: u64) -> Result<ConfigCounts> {
    let (state, engine) = model.prepare()?;
    let dist = engine.run_plan(&state, plan)?;
    sample_distribution(&dist, shots, seed, model.detection_efficiency)
}

/// Samples every plan in `plans` with independent derived streams.
pub fn sample_table(
    model: &NoiseModel,
    plans: &[MeasurementPlan],
    shots: u64,
    seed: u64,
) -> Result<CountsTable> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    let (state, engine) = model.prepare()?;
    let configs = plans
        .iter()
        .map(|plan| {
            let dist = engine.run_plan(&state, plan)?;
            sample_distribution(&dist, shots, seed, model.detection_efficiency)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CountsTable {
        seed,
        detection_efficiency: model.detection_efficiency,
        configs,
    })
}

/// The eighteen configurations the estimator needs: six Alice-only runs
/// for `χ` and twelve (sequence, Bob) runs for `S`.
pub fn standard_plans() -> Vec<MeasurementPlan> {
    let mut v = MeasurementPlan::chi_plans();
    v.extend(MeasurementPlan::s_plans());
    v
}

/// Empirical frequencies of one configuration. `shots = ∞` for exact
/// probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Observed {
    pub plan: MeasurementPlan,
    pub frequencies: Vec<f64>,
    pub shots: f64,
}

impl Observed {
    pub fn from_counts(c: &ConfigCounts) -> Result<Self> {
        if c.recorded == 0 {
            return Err(Error::NoRecordedShots(c.plan.id()));
        }
        let k = c.recorded as f64;
        Ok(Observed {
            plan: c.plan,
            frequencies: c.counts.iter().map(|&n| n as f64 / k).collect(),
            shots: k,
        })
    }

    pub fn exact(dist: &JointDistribution) -> Self {
        Observed {
            plan: dist.plan,
            frequencies: dist.probabilities().to_vec(),
            shots: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub standard_error: f64,
    /// Recorded shots feeding the estimate; `None` in the exact limit.
    pub shots: Option<u64>,
}

/// Where the χ-terms are read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChiSource {
    /// Alice-only runs, disjoint from the S runs.
    #[default]
    Dedicated,
    /// Pool the two Bob-tagged runs of each sequence, ignoring Bob.
    Marginalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EstimateOptions {
    pub sign_mode: SignMode,
    pub chi_source: ChiSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiTermEstimate {
    pub sequence: ContextId,
    pub chi_sign: i8,
    pub correlator: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct STermEstimate {
    pub term: STerm,
    pub signed: Estimate,
    pub contribution: Estimate,
    /// Absolute mode only: `|⟨XX'⟩|` is within 3 SE of zero, where the
    /// delta-method error is unreliable and the estimator biased upward.
    pub biased_near_zero: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub options: EstimateOptions,
    pub chi_terms: Vec<ChiTermEstimate>,
    pub s_terms: Vec<STermEstimate>,
    pub chi: Estimate,
    pub s: Estimate,
    pub omega: Estimate,
}

/// Linear functional of the observed frequencies: per configuration, a
/// weight for each outcome row.
#[derive(Debug, Clone, Default)]
struct Functional(BTreeMap<usize, Vec<f64>>);

impl Functional {
    fn single(config: usize, weights: Vec<f64>) -> Self {
        Functional(BTreeMap::from([(config, weights)]))
    }

    fn scaled(mut self, factor: f64) -> Self {
        for w in self.0.values_mut() {
            w.iter_mut().for_each(|x| *x *= factor);
        }
        self
    }

    fn add(&mut self, other: &Functional) {
        for (&k, w) in &other.0 {
            let e = self.0.entry(k).or_insert_with(|| vec![0.0; w.len()]);
            e.iter_mut().zip(w).for_each(|(a, b)| *a += b);
        }
    }

    /// Value and standard error: per configuration the multinomial variance
    /// of the weighted row, summed over independent configurations.
    fn evaluate(&self, obs: &[Observed]) -> Estimate {
        let mut value = 0.0;
        let mut var = 0.0;
        let mut shots = 0u64;
        let mut exact = false;
        for (&k, w) in &self.0 {
            let o = &obs[k];
            let mean: f64 = w.iter().zip(&o.frequencies).map(|(a, p)| a * p).sum();
            let second: f64 = w.iter().zip(&o.frequencies).map(|(a, p)| a * a * p).sum();
            value += mean;
            var += ((second - mean * mean).max(0.0)) / o.shots;
            if o.shots.is_finite() {
                shots += o.shots as u64;
            } else {
                exact = true;
            }
        }
        Estimate {
            value,
            standard_error: var.sqrt(),
            shots: (!exact).then_some(shots),
        }
    }
}

fn product_weights(with_bob: bool, positions: &[Position]) -> Vec<f64> {
    let n = if with_bob { 16 } else { 8 };
    (0..n)
        .map(|i| {
            let t = OutcomeTuple::from_index(i, with_bob);
            f64::from(positions.iter().map(|&p| t.get(p).unwrap()).product::<i8>())
        })
        .collect()
}

pub fn estimate(table: &CountsTable, options: EstimateOptions) -> Result<EstimateReport> {
    let obs = table
        .configs
        .iter()
        .map(Observed::from_counts)
        .collect::<Result<Vec<_>>>()?;
    estimate_observed(&obs, options)
}

/// χ, S and ω with errors from per-configuration frequencies.
pub fn estimate_observed(obs: &[Observed], options: EstimateOptions) -> Result<EstimateReport> {
    let find = |plan: MeasurementPlan| -> Result<usize> {
        obs.iter()
            .position(|o| o.plan == plan)
            .ok_or_else(|| Error::MissingConfiguration(plan.id()))
    };

    let mut chi_terms = Vec::with_capacity(6);
    let mut chi_f = Functional::default();
    for seq in ContextId::ALL {
        let f = match options.chi_source {
            ChiSource::Dedicated => Functional::single(
                find(MeasurementPlan::alice_only(seq))?,
                product_weights(false, &Position::ALICE),
            ),
            ChiSource::Marginalized => {
                let idx: Vec<usize> = s_term_table()
                    .iter()
                    .filter(|t| t.sequence == seq)
                    .map(|t| find(MeasurementPlan::with_bob(t.sequence, t.observable)?))
                    .collect::<Result<_>>()?;
                let total: f64 = idx.iter().map(|&k| obs[k].shots).sum();
                let mut f = Functional::default();
                for &k in &idx {
                    // Exact inputs: equal weights.
                    let w = if total.is_finite() {
                        obs[k].shots / total
                    } else {
                        1.0 / idx.len() as f64
                    };
                    f.add(&Functional::single(k, product_weights(true, &Position::ALICE)).scaled(w));
                }
                f
            }
        };
        chi_terms.push(ChiTermEstimate {
            sequence: seq,
            chi_sign: seq.chi_sign(),
            correlator: f.evaluate(obs),
        });
        chi_f.add(&f.scaled(f64::from(seq.chi_sign())));
    }

    let mut s_terms = Vec::with_capacity(12);
    let mut s_f = Functional::default();
    for term in s_term_table() {
        let k = find(MeasurementPlan::with_bob(term.sequence, term.observable)?)?;
        let f = Functional::single(
            k,
            product_weights(true, &[Position::alice(term.position), Position::Bob]),
        );
        let signed = f.evaluate(obs);
        // Absolute mode: delta method, d|E|/dE = sign(E).
        let factor = match options.sign_mode {
            SignMode::Absolute => {
                if signed.value < 0.0 {
                    -1.0
                } else {
                    1.0
                }
            }
            SignMode::FixedSign => f64::from(term.fixed_sign),
        };
        let contrib_f = f.scaled(factor);
        let contribution = contrib_f.evaluate(obs);
        s_terms.push(STermEstimate {
            term,
            signed,
            contribution,
            biased_near_zero: options.sign_mode == SignMode::Absolute
                && signed.value.abs() <= 3.0 * signed.standard_error,
        });
        s_f.add(&contrib_f);
    }

    let mut omega_f = chi_f.clone();
    omega_f.add(&s_f);
    Ok(EstimateReport {
        options,
        chi_terms,
        s_terms,
        chi: chi_f.evaluate(obs),
        s: s_f.evaluate(obs),
        omega: omega_f.evaluate(obs),
    })
}

/// Number of standard errors by which `value` exceeds `bound`.
pub fn significance(value: f64, standard_error: f64, bound: f64) -> Result<f64> {
    if standard_error.is_nan() || standard_error <= 0.0 {
        return Err(Error::NonPositiveError(standard_error));
    }
    Ok((value - bound) / standard_error)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledNoSignaling {
    /// Largest pairwise total-variation distance between empirical marginals.
    pub max_deviation: f64,
    /// Largest |z| of a marginal cell against the pooled marginal of all
    /// configurations that share it.
    pub max_z: f64,
    pub comparisons: usize,
}

/// No-signaling check on sampled counts. Bob's marginal is compared across
/// sequences for each setting; Alice's triple marginal across Bob settings
/// (and the Alice-only run) for each sequence.
pub fn sampled_no_signaling(table: &CountsTable) -> Result<SampledNoSignaling> {
    let mut max_dev: f64 = 0.0;
    let mut max_z: f64 = 0.0;
    let mut comparisons = 0usize;

    let mut z_test = |cells: &[(u64, u64)]| {
        // cells: (hits, trials) per configuration for one event.
        let hits: u64 = cells.iter().map(|c| c.0).sum();
        let trials: u64 = cells.iter().map(|c| c.1).sum();
        let p = hits as f64 / trials as f64;
        for &(h, n) in cells {
            let se = (p * (1.0 - p) * (1.0 / n as f64 - 1.0 / trials as f64)).max(0.0).sqrt();
            let d = h as f64 / n as f64 - p;
            comparisons += 1;
            if d == 0.0 {
                continue;
            }
            let z = if se > 0.0 { d.abs() / se } else { f64::INFINITY };
            max_z = max_z.max(z);
        }
    };

    let recorded = |c: &ConfigCounts| -> Result<u64> {
        if c.recorded == 0 {
            Err(Error::NoRecordedShots(c.plan.id()))
        } else {
            Ok(c.recorded)
        }
    };

    // Bob marginals per setting.
    let mut by_setting: BTreeMap<String, Vec<&ConfigCounts>> = BTreeMap::new();
    for c in &table.configs {
        if let Some(b) = c.plan.bob() {
            by_setting.entry(b.ascii()).or_default().push(c);
        }
    }
    for group in by_setting.values() {
        let cells = group
            .iter()
            .map(|c| Ok((c.bob_plus().unwrap(), recorded(c)?)))
            .collect::<Result<Vec<_>>>()?;
        for (i, x) in cells.iter().enumerate() {
            for y in &cells[i + 1..] {
                let px = x.0 as f64 / x.1 as f64;
                let py = y.0 as f64 / y.1 as f64;
                max_dev = max_dev.max((px - py).abs());
            }
        }
        if cells.len() > 1 {
            z_test(&cells);
        }
    }

    // Alice marginals per sequence.
    let mut by_seq: BTreeMap<ContextId, Vec<&ConfigCounts>> = BTreeMap::new();
    for c in &table.configs {
        by_seq.entry(c.plan.sequence).or_default().push(c);
    }
    for group in by_seq.values() {
        if group.len() < 2 {
            continue;
        }
        let margs = group
            .iter()
            .map(|c| Ok((c.alice_marginal(), recorded(c)?)))
            .collect::<Result<Vec<_>>>()?;
        let freqs: Vec<Vec<f64>> = margs
            .iter()
            .map(|(m, n)| m.iter().map(|&x| x as f64 / *n as f64).collect())
            .collect();
        for (i, x) in freqs.iter().enumerate() {
            for y in &freqs[i + 1..] {
                max_dev = max_dev.max(total_variation(x, y));
            }
        }
        for cell in 0..8 {
            let cells: Vec<(u64, u64)> = margs.iter().map(|(m, n)| (m[cell], *n)).collect();
            z_test(&cells);
        }
    }

    Ok(SampledNoSignaling {
        max_deviation: max_dev,
        max_z,
        comparisons,
    })
}
