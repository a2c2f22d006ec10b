//! Exact probability computations and the forward generative sampler.
//!
//! Everything is evaluated in log space. The literal product form of the
//! record likelihood underflows already at a handful of sentences, so sums
//! over separations and classes go through log-sum-exp.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::substream;
use crate::segmenter::{enumerate_separations_capped, PatternTrie, DEFAULT_SEPARATION_CAP};
use crate::types::{
    gaps_from_stamps, Dataset, Dictionary, EventType, ModelParams, Pattern, ProcessRecord,
    Sentence,
};

pub(crate) fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// log(sum(exp(xs))), safe against -inf entries.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// log-sum-exp that sorts the terms first, so the result does not depend on
/// the order in which the caller produced them. Used for the class mixture,
/// which must be exactly invariant under relabeling.
fn log_sum_exp_sorted(xs: &mut Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).expect("no NaN in log terms"));
    log_sum_exp(xs)
}

/// Per-class log tables over the dictionary.
pub(crate) struct ClassTable {
    pub log_theta: Vec<f64>,
    pub log_one_minus: Vec<f64>,
}

impl ClassTable {
    pub fn new(theta_row: &[f64]) -> Self {
        ClassTable {
            log_theta: theta_row.iter().map(|&t| t.ln()).collect(),
            log_one_minus: theta_row.iter().map(|&t| (1.0 - t).ln()).collect(),
        }
    }

    /// log P(S | class) for a separation given as dictionary indices:
    /// -ln(n_S!) + sum over included patterns of ln(theta) + sum over the
    /// rest of ln(1 - theta). Extreme probabilities yield -inf, never NaN.
    pub fn separation_log_prob(&self, parts: &[u32]) -> f64 {
        let mut acc = -ln_factorial(parts.len());
        let mut included = vec![false; self.log_theta.len()];
        for &p in parts {
            included[p as usize] = true;
        }
        for (w, inc) in included.iter().enumerate() {
            acc += if *inc {
                self.log_theta[w]
            } else {
                self.log_one_minus[w]
            };
        }
        acc
    }
}

/// log[(1/n_S!) * prod theta^{in S} * prod (1-theta)^{not in S}] for a
/// separation given as patterns. -inf when an included pattern has zero
/// probability. A part missing from the dictionary is a contract violation.
pub fn separation_log_prob(
    parts: &[Pattern],
    class: usize,
    params: &ModelParams,
    dict: &Dictionary,
) -> Result<f64> {
    if class >= params.class_count() {
        return Err(Error::Contract(format!("class {class} out of range")));
    }
    let mut idx = Vec::with_capacity(parts.len());
    for p in parts {
        match dict.index_of(p) {
            Some(i) => idx.push(i as u32),
            None => return Err(Error::Contract(format!("pattern {p} not in dictionary"))),
        }
    }
    let table = ClassTable::new(&params.theta[class]);
    Ok(table.separation_log_prob(&idx))
}

/// log density of one gap time under the class rate: ln(lambda) - lambda*t.
pub fn gap_log_density(gap: f64, class: usize, params: &ModelParams) -> Result<f64> {
    if !(gap > 0.0) {
        return Err(Error::Contract(format!("gap time {gap} must be positive")));
    }
    let lambda = *params
        .lambda
        .get(class)
        .ok_or_else(|| Error::Contract(format!("class {class} out of range")))?;
    Ok(lambda.ln() - lambda * gap)
}

pub(crate) fn sentence_event_log_prob(table: &ClassTable, seps: &[Vec<u32>]) -> f64 {
    let terms: Vec<f64> = seps.iter().map(|s| table.separation_log_prob(s)).collect();
    log_sum_exp(&terms)
}

/// log P(E, gaps | class): log of the sum over all separations of the
/// separation probability, plus the gap-time log densities. An empty
/// sentence contributes sum of ln(1 - theta) and no gap terms.
pub fn sentence_log_likelihood(
    events: &[EventType],
    gaps: &[f64],
    class: usize,
    params: &ModelParams,
    dict: &Dictionary,
) -> Result<f64> {
    if events.len() != gaps.len() {
        return Err(Error::Contract(format!(
            "{} events but {} gap times",
            events.len(),
            gaps.len()
        )));
    }
    let trie = PatternTrie::build(dict);
    let seps = enumerate_separations_capped(events, dict, &trie, DEFAULT_SEPARATION_CAP)?;
    if seps.count() == 0 {
        return Err(Error::UnsegmentableSentence(format!(
            "no separation for {:?}",
            events.iter().map(|e| e.0).collect::<Vec<_>>()
        )));
    }
    let table = ClassTable::new(&params.theta[class]);
    let mut ll = sentence_event_log_prob(&table, &seps.separations);
    for &g in gaps {
        ll += gap_log_density(g, class, params)?;
    }
    Ok(ll)
}

fn poisson_log_pmf(k: usize, kappa: f64) -> f64 {
    k as f64 * kappa.ln() - kappa - ln_factorial(k)
}

/// log-likelihood of one record: mixture over classes of the product of
/// sentence likelihoods, optionally times the Poisson factor for the
/// sentence count.
pub fn record_log_likelihood(
    record: &ProcessRecord,
    params: &ModelParams,
    dict: &Dictionary,
    condition_on_k: bool,
) -> Result<f64> {
    let gaps = gaps_from_stamps(record)?;
    let trie = PatternTrie::build(dict);
    let j = params.class_count();
    let tables: Vec<ClassTable> = (0..j).map(|z| ClassTable::new(&params.theta[z])).collect();

    let mut class_terms = Vec::with_capacity(j);
    for z in 0..j {
        let mut acc = params.pi[z].ln();
        for (s, g) in record.sentences.iter().zip(&gaps) {
            let seps =
                enumerate_separations_capped(&s.events, dict, &trie, DEFAULT_SEPARATION_CAP)?;
            if seps.count() == 0 {
                return Err(Error::UnsegmentableSentence(format!(
                    "no separation for {:?}",
                    s.events.iter().map(|e| e.0).collect::<Vec<_>>()
                )));
            }
            acc += sentence_event_log_prob(&tables[z], &seps.separations);
            for &gap in &g.0 {
                acc += params.lambda[z].ln() - params.lambda[z] * gap;
            }
        }
        class_terms.push(acc);
    }
    let mut ll = log_sum_exp_sorted(&mut class_terms);
    if !condition_on_k {
        ll += poisson_log_pmf(record.sentence_count(), params.kappa);
    }
    Ok(ll)
}

/// Total log-likelihood of a dataset.
pub fn marginal_log_likelihood(
    dataset: &Dataset,
    params: &ModelParams,
    dict: &Dictionary,
    condition_on_k: bool,
) -> Result<f64> {
    params.validate(Some(dict))?;
    let mut total = 0.0;
    for r in &dataset.records {
        total += record_log_likelihood(r, params, dict, condition_on_k)?;
    }
    Ok(total)
}

/// True when the log-likelihood difference between two parameter sets that
/// differ only in pattern probabilities is invariant, record by record,
/// under rescaling every gap time by a positive constant. Holds whenever
/// the shared rate vector is constant across classes.
pub fn factorization_check(
    params_a: &ModelParams,
    params_b: &ModelParams,
    dataset: &Dataset,
    dict: &Dictionary,
) -> Result<bool> {
    if params_a.lambda != params_b.lambda
        || params_a.pi != params_b.pi
        || params_a.kappa != params_b.kappa
    {
        return Err(Error::Contract(
            "parameter sets must differ only in pattern probabilities".into(),
        ));
    }
    const SCALES: [f64; 3] = [0.5, 3.7, 10.0];
    const TOL: f64 = 1e-8;
    for record in &dataset.records {
        let base = record_log_likelihood(record, params_a, dict, true)?
            - record_log_likelihood(record, params_b, dict, true)?;
        for &c in &SCALES {
            let scaled = scale_record(record, c);
            let diff = record_log_likelihood(&scaled, params_a, dict, true)?
                - record_log_likelihood(&scaled, params_b, dict, true)?;
            if (diff - base).abs() > TOL {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn scale_record(record: &ProcessRecord, c: f64) -> ProcessRecord {
    ProcessRecord {
        sentences: record
            .sentences
            .iter()
            .map(|s| Sentence {
                events: s.events.clone(),
                stamps: s.stamps.iter().map(|&t| t * c).collect(),
            })
            .collect(),
    }
}

/// Latent state emitted next to a generated dataset: the class of each
/// record and, per sentence, the drawn pattern sequence as dictionary
/// indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub dictionary: Dictionary,
    pub params: ModelParams,
    pub classes: Vec<usize>,
    pub separations: Vec<Vec<Vec<usize>>>,
}

const MIN_GAP_NANOS: f64 = 1e-9;

/// Draws a dataset of `m` records. Each record uses its own counter-based
/// random stream, so output is identical however the loop is scheduled.
pub fn generate_dataset(
    params: &ModelParams,
    dict: &Dictionary,
    alphabet: Vec<String>,
    m: usize,
    seed: u64,
) -> Result<(Dataset, GroundTruth)> {
    params.validate(Some(dict))?;
    let offenders = crate::types::validate_a2(dict);
    if !offenders.is_empty() {
        return Err(Error::InvalidParams(format!(
            "dictionary violates the distinct-events rule: {}",
            offenders[0]
        )));
    }
    for p in dict.patterns() {
        for e in p.events() {
            if e.index() >= alphabet.len() {
                return Err(Error::InvalidParams(format!(
                    "pattern {p} uses event outside the alphabet"
                )));
            }
        }
    }

    let mut records = Vec::with_capacity(m);
    let mut classes = Vec::with_capacity(m);
    let mut separations = Vec::with_capacity(m);

    for i in 0..m {
        let mut rng = substream(seed, "generate", i as u64);
        let z = sample_categorical(&mut rng, &params.pi);
        let k = Poisson::new(params.kappa)
            .map_err(|e| Error::InvalidParams(e.to_string()))?
            .sample(&mut rng) as usize;
        let exp = Exp::new(params.lambda[z]).map_err(|e| Error::InvalidParams(e.to_string()))?;

        let mut sentences = Vec::with_capacity(k);
        let mut truth_seps = Vec::with_capacity(k);
        let mut clock = 0.0f64;
        for _ in 0..k {
            let mut drawn: Vec<usize> = Vec::new();
            for (w, _) in dict.patterns().iter().enumerate() {
                if rng.gen::<f64>() < params.theta[z][w] {
                    drawn.push(w);
                }
            }
            drawn.shuffle(&mut rng);
            let mut events = Vec::new();
            for &w in &drawn {
                events.extend_from_slice(dict.get(w).events());
            }
            let mut stamps = Vec::with_capacity(events.len());
            for _ in 0..events.len() {
                let gap = exp.sample(&mut rng).max(MIN_GAP_NANOS);
                clock = quantize(clock + gap);
                stamps.push(clock);
            }
            sentences.push(Sentence { events, stamps });
            truth_seps.push(drawn);
        }
        records.push(ProcessRecord { sentences });
        classes.push(z);
        separations.push(truth_seps);
    }

    let dataset = Dataset { alphabet, records };
    dataset.validate()?;
    Ok((
        dataset,
        GroundTruth {
            dictionary: dict.clone(),
            params: params.clone(),
            classes,
            separations,
        },
    ))
}

fn quantize(t: f64) -> f64 {
    (t * 1e9).round() / 1e9
}

pub(crate) fn sample_categorical<R: Rng>(rng: &mut R, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        u -= w;
        if u <= 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::GapSentence;
    use approx::assert_abs_diff_eq;

    fn dict(patterns: &[&[u16]]) -> Dictionary {
        Dictionary::new(patterns.iter().map(|p| Pattern::from_ids(p)).collect()).unwrap()
    }

    #[test]
    fn separation_prob_one_pattern() {
        let d = dict(&[&[0], &[1]]);
        let params =
            ModelParams::new(vec![1.0], vec![vec![0.5, 0.5]], vec![1.0], 1.0).unwrap();
        let lp = separation_log_prob(&[Pattern::from_ids(&[0])], 0, &params, &d).unwrap();
        assert_abs_diff_eq!(lp, 0.25f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn separation_prob_two_patterns_has_factorial() {
        let d = dict(&[&[0], &[1]]);
        let params =
            ModelParams::new(vec![1.0], vec![vec![0.5, 0.5]], vec![1.0], 1.0).unwrap();
        let lp = separation_log_prob(
            &[Pattern::from_ids(&[0]), Pattern::from_ids(&[1])],
            0,
            &params,
            &d,
        )
        .unwrap();
        assert_abs_diff_eq!(lp, 0.125f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn separation_prob_zero_theta_is_neg_inf() {
        let d = dict(&[&[0]]);
        let params = ModelParams::new(vec![1.0], vec![vec![0.0]], vec![1.0], 1.0).unwrap();
        let lp = separation_log_prob(&[Pattern::from_ids(&[0])], 0, &params, &d).unwrap();
        assert_eq!(lp, f64::NEG_INFINITY);
    }

    #[test]
    fn separation_prob_unknown_pattern_is_contract_error() {
        let d = dict(&[&[0]]);
        let params = ModelParams::new(vec![1.0], vec![vec![0.5]], vec![1.0], 1.0).unwrap();
        assert!(matches!(
            separation_log_prob(&[Pattern::from_ids(&[7])], 0, &params, &d),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn extreme_theta_never_nan() {
        let d = dict(&[&[0], &[1]]);
        for row in [vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]] {
            let params = ModelParams::new(vec![1.0], vec![row], vec![1.0], 1.0).unwrap();
            for parts in [
                vec![],
                vec![Pattern::from_ids(&[0])],
                vec![Pattern::from_ids(&[0]), Pattern::from_ids(&[1])],
            ] {
                let lp = separation_log_prob(&parts, 0, &params, &d).unwrap();
                assert!(!lp.is_nan(), "NaN for parts {parts:?}");
            }
        }
    }

    #[test]
    fn gap_density_closed_form() {
        let params = ModelParams::new(vec![1.0], vec![vec![0.5]], vec![2.0], 1.0).unwrap();
        let lp = gap_log_density(0.5, 0, &params).unwrap();
        assert_abs_diff_eq!(lp, (2.0f64).ln() - 1.0, epsilon = 1e-12);
        assert!(gap_log_density(0.0, 0, &params).is_err());
    }

    #[test]
    fn gap_density_integrates_to_one() {
        // trapezoid quadrature over [0, 40] at rate 1
        let params = ModelParams::new(vec![1.0], vec![vec![0.5]], vec![1.0], 1.0).unwrap();
        let n = 400_000;
        let h = 40.0 / n as f64;
        let mut integral = 0.0;
        for i in 0..=n {
            let t = (i as f64 * h).max(1e-12);
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            integral += w * gap_log_density(t, 0, &params).unwrap().exp() * h;
        }
        assert_abs_diff_eq!(integral, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn empty_sentence_likelihood() {
        let d = dict(&[&[0]]);
        let params = ModelParams::new(vec![1.0], vec![vec![0.3]], vec![1.0], 1.0).unwrap();
        let ll = sentence_log_likelihood(&[], &[], 0, &params, &d).unwrap();
        assert_abs_diff_eq!(ll, 0.7f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn unsegmentable_sentence_errors() {
        let d = dict(&[&[0]]);
        let params = ModelParams::new(vec![1.0], vec![vec![0.3]], vec![1.0], 1.0).unwrap();
        let r = sentence_log_likelihood(&[EventType(5)], &[1.0], 0, &params, &d);
        assert!(matches!(r, Err(Error::UnsegmentableSentence(_))));
    }

    #[test]
    fn single_separation_sentence_is_product_form() {
        let d = dict(&[&[0], &[1]]);
        let params =
            ModelParams::new(vec![1.0], vec![vec![0.4, 0.9]], vec![2.0], 1.0).unwrap();
        let events = [EventType(0), EventType(1)];
        let gaps = [0.3, 0.8];
        let ll = sentence_log_likelihood(&events, &gaps, 0, &params, &d).unwrap();
        let sep = separation_log_prob(
            &[Pattern::from_ids(&[0]), Pattern::from_ids(&[1])],
            0,
            &params,
            &d,
        )
        .unwrap();
        let gap_part: f64 = gaps
            .iter()
            .map(|&g| gap_log_density(g, 0, &params).unwrap())
            .sum();
        assert_abs_diff_eq!(ll, sep + gap_part, epsilon = 1e-12);
    }

    #[test]
    fn record_with_no_sentences_is_poisson_mass_at_zero() {
        let d = dict(&[&[0]]);
        let params = ModelParams::new(vec![1.0], vec![vec![0.3]], vec![1.0], 2.5).unwrap();
        let record = ProcessRecord { sentences: vec![] };
        let ll = record_log_likelihood(&record, &params, &d, false).unwrap();
        assert_abs_diff_eq!(ll, -2.5, epsilon = 1e-12);
    }

    #[test]
    fn class_permutation_leaves_likelihood_unchanged_exactly() {
        let d = dict(&[&[0], &[1], &[0, 1]]);
        let params = ModelParams::new(
            vec![0.3, 0.7],
            vec![vec![0.2, 0.6, 0.1], vec![0.8, 0.05, 0.4]],
            vec![0.5, 3.0],
            2.0,
        )
        .unwrap();
        let swapped = ModelParams::new(
            vec![0.7, 0.3],
            vec![vec![0.8, 0.05, 0.4], vec![0.2, 0.6, 0.1]],
            vec![3.0, 0.5],
            2.0,
        )
        .unwrap();
        let record = ProcessRecord {
            sentences: vec![
                Sentence {
                    events: vec![EventType(0), EventType(1)],
                    stamps: vec![0.7, 1.9],
                },
                Sentence {
                    events: vec![EventType(0)],
                    stamps: vec![2.4],
                },
            ],
        };
        let a = record_log_likelihood(&record, &params, &d, false).unwrap();
        let b = record_log_likelihood(&record, &swapped, &d, false).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn generated_data_round_trips_gaps() {
        let d = dict(&[&[0], &[1], &[2], &[0, 1]]);
        let params = ModelParams::new(
            vec![0.5, 0.5],
            vec![vec![0.5, 0.3, 0.2, 0.4], vec![0.1, 0.8, 0.3, 0.0]],
            vec![2.0, 0.5],
            4.0,
        )
        .unwrap();
        let (ds, truth) = generate_dataset(
            &params,
            &d,
            vec!["a".into(), "b".into(), "c".into()],
            20,
            9,
        )
        .unwrap();
        assert_eq!(ds.records.len(), 20);
        assert_eq!(truth.classes.len(), 20);
        for r in &ds.records {
            let gaps = gaps_from_stamps(r).unwrap();
            for g in &gaps {
                assert!(g.0.iter().all(|&x| x > 0.0));
            }
        }
        // truth separations concatenate back to the sentences
        for (r, seps) in ds.records.iter().zip(&truth.separations) {
            for (s, sep) in r.sentences.iter().zip(seps) {
                let mut evs = Vec::new();
                for &w in sep {
                    evs.extend_from_slice(d.get(w).events());
                }
                assert_eq!(evs, s.events);
            }
        }
    }

    #[test]
    fn all_zero_theta_generates_empty_sentences() {
        let d = dict(&[&[0], &[1]]);
        let params =
            ModelParams::new(vec![1.0], vec![vec![0.0, 0.0]], vec![1.0], 3.0).unwrap();
        let (ds, _) =
            generate_dataset(&params, &d, vec!["a".into(), "b".into()], 10, 1).unwrap();
        for r in &ds.records {
            assert!(r.sentences.iter().all(Sentence::is_empty));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let d = dict(&[&[0], &[1], &[0, 1]]);
        let params = ModelParams::new(
            vec![0.6, 0.4],
            vec![vec![0.5, 0.3, 0.4], vec![0.1, 0.8, 0.0]],
            vec![2.0, 0.5],
            4.0,
        )
        .unwrap();
        let alphabet = vec!["a".to_string(), "b".to_string()];
        let (a, _) = generate_dataset(&params, &d, alphabet.clone(), 15, 42).unwrap();
        let (b, _) = generate_dataset(&params, &d, alphabet, 15, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn factorization_contract_requires_matching_blocks() {
        let d = dict(&[&[0]]);
        let a = ModelParams::new(vec![1.0], vec![vec![0.3]], vec![1.0], 1.0).unwrap();
        let b = ModelParams::new(vec![1.0], vec![vec![0.6]], vec![2.0], 1.0).unwrap();
        let ds = Dataset {
            alphabet: vec!["a".into()],
            records: vec![],
        };
        assert!(matches!(
            factorization_check(&a, &b, &ds, &d),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn identical_theta_difference_is_zero_at_any_scale() {
        let d = dict(&[&[0], &[1]]);
        let a = ModelParams::new(
            vec![0.5, 0.5],
            vec![vec![0.3, 0.4], vec![0.3, 0.4]],
            vec![1.0, 1.0],
            2.0,
        )
        .unwrap();
        let (ds, _) =
            generate_dataset(&a, &d, vec!["a".into(), "b".into()], 5, 3).unwrap();
        assert!(factorization_check(&a, &a, &ds, &d).unwrap());
    }

    #[test]
    fn gap_sentence_shape_is_preserved() {
        let record = ProcessRecord {
            sentences: vec![
                Sentence {
                    events: vec![EventType(0)],
                    stamps: vec![1.0],
                },
                Sentence {
                    events: vec![],
                    stamps: vec![],
                },
            ],
        };
        let gaps = gaps_from_stamps(&record).unwrap();
        assert_eq!(gaps.len(), 2);
        assert_eq!(gaps[1], GapSentence(vec![]));
    }
}
