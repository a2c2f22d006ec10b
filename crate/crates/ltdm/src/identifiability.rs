//! Executable checks of the uniqueness conditions on a dictionary and
//! parameter set.
//!
//! Classes sharing a gap rate form an equivalence group; inside a group the
//! event part alone must separate the classes. The checks here verify
//! user-supplied witnesses: a three-block partition of the 1-grams per
//! group, and per l-gram probe sets. Verification is exact; only the
//! optional witness *search* is a bounded greedy heuristic.
//!
//! Rank requirements are evaluated on the probe matrix extended with an
//! all-ones row, the moment matrix that the uniqueness argument actually
//! factors; the plain probe matrix is exposed unchanged for inspection.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segmenter::{count_separations_capped, enumerate_separations_capped, PatternTrie};
use crate::types::{validate_a2, Dictionary, EventType, ModelParams, Pattern};

/// Tolerances and budgets for the checks.
#[derive(Debug, Clone)]
pub struct CheckOptions {
    /// Two rates within this distance are treated as equal. Use a loose
    /// value (e.g. 0.05 * min rate) for fitted parameters.
    pub lambda_eps: f64,
    /// Singular values below this fraction of the largest are treated as
    /// zero in the numeric rank.
    pub rank_rel_tol: f64,
    /// Cap for separation enumeration during condition checks.
    pub separation_cap: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            lambda_eps: 1e-9,
            rank_rel_tol: 1e-8,
            separation_cap: 100_000,
        }
    }
}

/// Partition of classes by rate equality.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalenceClasses {
    /// Each group is sorted; groups are ordered by smallest member.
    pub groups: Vec<Vec<usize>>,
}

/// Single-linkage grouping of classes whose rates differ by at most `eps`.
pub fn equivalence_classes(lambda: &[f64], eps: f64) -> EquivalenceClasses {
    let mut order: Vec<usize> = (0..lambda.len()).collect();
    order.sort_by(|&a, &b| lambda[a].partial_cmp(&lambda[b]).unwrap());
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut prev: Option<f64> = None;
    for &j in &order {
        match prev {
            Some(p) if (lambda[j] - p).abs() <= eps => groups.last_mut().unwrap().push(j),
            _ => groups.push(vec![j]),
        }
        prev = Some(lambda[j]);
    }
    for g in &mut groups {
        g.sort_unstable();
    }
    groups.sort_by_key(|g| g[0]);
    EquivalenceClasses { groups }
}

/// Outcome of the quick sufficient-condition screen for assumption A1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum A1Sufficiency {
    /// All rates pairwise distinct.
    HoldsByDistinctLambda,
    /// Every pattern probability strictly positive.
    HoldsByPositiveTheta,
    /// Neither sufficient condition fires; the general check is not
    /// attempted.
    Inconclusive,
}

pub fn check_a1_sufficient(params: &ModelParams, lambda_eps: f64) -> A1Sufficiency {
    let groups = equivalence_classes(&params.lambda, lambda_eps);
    if groups.groups.iter().all(|g| g.len() == 1) {
        return A1Sufficiency::HoldsByDistinctLambda;
    }
    if params.theta.iter().all(|row| row.iter().all(|&t| t > 0.0)) {
        return A1Sufficiency::HoldsByPositiveTheta;
    }
    A1Sufficiency::Inconclusive
}

/// Probe matrix for one class group: entry `[probe, class]` is
/// theta/(1-theta) of the probe 1-gram under that class.
#[derive(Debug, Clone)]
pub struct TMatrix {
    pub probes: Vec<EventType>,
    pub classes: Vec<usize>,
    pub values: DMatrix<f64>,
}

fn phi(theta: f64) -> Result<f64> {
    if theta >= 1.0 {
        return Err(Error::Contract(
            "pattern probability 1 makes the odds transform infinite".into(),
        ));
    }
    Ok(theta / (1.0 - theta))
}

/// Builds the probe matrix from 1-gram probabilities.
pub fn build_t_matrix(
    params: &ModelParams,
    dict: &Dictionary,
    class_group: &[usize],
    probes: &[EventType],
) -> Result<TMatrix> {
    let unigrams = dict.unigram_index();
    let mut values = DMatrix::zeros(probes.len(), class_group.len());
    for (r, &e) in probes.iter().enumerate() {
        let w = *unigrams
            .get(&e)
            .ok_or_else(|| Error::Contract(format!("probe event {e} has no 1-gram pattern")))?;
        for (c, &j) in class_group.iter().enumerate() {
            let theta = *params
                .theta
                .get(j)
                .and_then(|row| row.get(w))
                .ok_or_else(|| Error::Contract(format!("class {j} out of range")))?;
            values[(r, c)] = phi(theta)?;
        }
    }
    Ok(TMatrix {
        probes: probes.to_vec(),
        classes: class_group.to_vec(),
        values,
    })
}

/// Numeric rank via singular values, zero below `rel_tol * sigma_max`.
pub fn numeric_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let svals = m.clone().svd(false, false).singular_values;
    let max = svals.iter().cloned().fold(0.0f64, f64::max);
    if max == 0.0 {
        return 0;
    }
    svals.iter().filter(|&&s| s > rel_tol * max).count()
}

/// Column rank of the matrix with an all-ones row prepended.
fn augmented_column_rank(values: &DMatrix<f64>, rel_tol: f64) -> usize {
    let mut aug = DMatrix::zeros(values.nrows() + 1, values.ncols());
    for c in 0..values.ncols() {
        aug[(0, c)] = 1.0;
    }
    aug.view_mut((1, 0), (values.nrows(), values.ncols()))
        .copy_from(values);
    numeric_rank(&aug, rel_tol)
}

/// A 1-gram partition witness for one class group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionWitness {
    /// Sorted class indices of the group the witness is for.
    pub classes: Vec<usize>,
    /// Three disjoint blocks of event ids covering the dictionary 1-grams.
    pub blocks: [Vec<u16>; 3],
}

/// Probe 1-grams for one (group, l-gram) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeWitness {
    pub classes: Vec<usize>,
    pub pattern: Pattern,
    pub probes: Vec<u16>,
}

/// User-supplied material for the checks.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Witnesses {
    #[serde(default)]
    pub partitions: Vec<PartitionWitness>,
    #[serde(default)]
    pub probes: Vec<ProbeWitness>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    CannotVerify,
}

/// Outcome for one class group under one condition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupCheck {
    pub classes: Vec<usize>,
    pub verdict: Verdict,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionReport {
    pub verdict: Verdict,
    pub groups: Vec<GroupCheck>,
}

fn combine(groups: &[GroupCheck]) -> Verdict {
    if groups.iter().any(|g| g.verdict == Verdict::Fail) {
        Verdict::Fail
    } else if groups.iter().any(|g| g.verdict == Verdict::CannotVerify) {
        Verdict::CannotVerify
    } else {
        Verdict::Pass
    }
}

/// Full report over all conditions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentifiabilityReport {
    pub a2: Verdict,
    pub a2_offenders: Vec<Pattern>,
    pub a1_sufficient: A1Sufficiency,
    pub equivalence_classes: Vec<Vec<usize>>,
    pub c1: ConditionReport,
    pub c2: ConditionReport,
    /// Pass requires A2, C1 and C2 to pass; any failure dominates any
    /// unverifiable group.
    pub overall: Verdict,
}

fn dictionary_unigram_events(dict: &Dictionary) -> Vec<EventType> {
    let mut evs: Vec<EventType> = dict
        .patterns()
        .iter()
        .filter(|p| p.len() == 1)
        .map(|p| p.events()[0])
        .collect();
    evs.sort_unstable();
    evs
}

/// Verifies the partition witness for one multi-class group: disjoint
/// blocks covering the 1-grams, unique separations for cross-block pairs
/// and block-ordered triples, block sizes at least the group size, and
/// full column rank of all three probe matrices.
pub fn check_c1_group(
    params: &ModelParams,
    dict: &Dictionary,
    witness: &PartitionWitness,
    opts: &CheckOptions,
) -> GroupCheck {
    let group = &witness.classes;
    let fail = |detail: String| GroupCheck {
        classes: group.clone(),
        verdict: Verdict::Fail,
        detail,
    };
    let unknown = |detail: String| GroupCheck {
        classes: group.clone(),
        verdict: Verdict::CannotVerify,
        detail,
    };

    let mut all: Vec<u16> = witness.blocks.iter().flatten().copied().collect();
    let total = all.len();
    all.sort_unstable();
    all.dedup();
    let expected: Vec<u16> = dictionary_unigram_events(dict).iter().map(|e| e.0).collect();
    if all.len() != total || all != expected {
        return fail("blocks are not a disjoint cover of the dictionary 1-grams".into());
    }
    for (k, block) in witness.blocks.iter().enumerate() {
        if block.len() < group.len() {
            return fail(format!(
                "block {} has {} 1-grams, fewer than the group size {}",
                k + 1,
                block.len(),
                group.len()
            ));
        }
    }

    let trie = PatternTrie::build(dict);
    let count = |events: &[EventType]| -> Result<usize> {
        count_separations_capped(events, dict, &trie, opts.separation_cap)
    };
    for (a, block_a) in witness.blocks.iter().enumerate() {
        for (b, block_b) in witness.blocks.iter().enumerate() {
            if a == b {
                continue;
            }
            for &ea in block_a {
                for &eb in block_b {
                    match count(&[EventType(ea), EventType(eb)]) {
                        Ok(1) => {}
                        Ok(n) => {
                            return fail(format!("sentence ({ea}, {eb}) admits {n} separations"))
                        }
                        Err(e) => return unknown(format!("enumeration failed: {e}")),
                    }
                }
            }
        }
    }
    for &e1 in &witness.blocks[0] {
        for &e2 in &witness.blocks[1] {
            for &e3 in &witness.blocks[2] {
                match count(&[EventType(e1), EventType(e2), EventType(e3)]) {
                    Ok(1) => {}
                    Ok(n) => {
                        return fail(format!(
                            "sentence ({e1}, {e2}, {e3}) admits {n} separations"
                        ))
                    }
                    Err(e) => return unknown(format!("enumeration failed: {e}")),
                }
            }
        }
    }

    for (k, block) in witness.blocks.iter().enumerate() {
        let probes: Vec<EventType> = block.iter().map(|&e| EventType(e)).collect();
        let t = match build_t_matrix(params, dict, group, &probes) {
            Ok(t) => t,
            Err(e) => return unknown(format!("probe matrix for block {}: {e}", k + 1)),
        };
        let rank = augmented_column_rank(&t.values, opts.rank_rel_tol);
        if rank < group.len() {
            return fail(format!(
                "probe matrix for block {} has column rank {rank} < {}",
                k + 1,
                group.len()
            ));
        }
    }

    GroupCheck {
        classes: group.clone(),
        verdict: Verdict::Pass,
        detail: format!(
            "blocks sized {}/{}/{}",
            witness.blocks[0].len(),
            witness.blocks[1].len(),
            witness.blocks[2].len()
        ),
    }
}

/// True when appending probe `e` to `w` yields a sentence with no
/// separation containing a pattern one longer than `w`, or of the same
/// length but different from `w`.
pub fn probe_admissible(
    dict: &Dictionary,
    trie: &PatternTrie,
    w: &Pattern,
    e: EventType,
    cap: usize,
) -> Result<bool> {
    let mut sentence = w.events().to_vec();
    sentence.push(e);
    let seps = enumerate_separations_capped(&sentence, dict, trie, cap)?;
    let l = w.len();
    for sep in &seps.separations {
        for &part in sep {
            let p = dict.get(part as usize);
            if p.len() == l + 1 || (p.len() == l && p != w) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Verifies probe witnesses for one multi-class group across every l-gram
/// (l >= 2) in the dictionary.
pub fn check_c2_group(
    params: &ModelParams,
    dict: &Dictionary,
    group: &[usize],
    probes_by_pattern: &[(Pattern, Vec<u16>)],
    opts: &CheckOptions,
) -> GroupCheck {
    let fail = |detail: String| GroupCheck {
        classes: group.to_vec(),
        verdict: Verdict::Fail,
        detail,
    };
    let unknown = |detail: String| GroupCheck {
        classes: group.to_vec(),
        verdict: Verdict::CannotVerify,
        detail,
    };
    let trie = PatternTrie::build(dict);
    for w in dict.patterns().iter().filter(|p| p.len() >= 2) {
        let probes = match probes_by_pattern.iter().find(|(p, _)| p == w) {
            Some((_, probes)) => probes,
            None => return unknown(format!("no probe set supplied for pattern {w}")),
        };
        if probes.len() < group.len() {
            return fail(format!(
                "pattern {w}: probe set of size {} is smaller than the group size {}",
                probes.len(),
                group.len()
            ));
        }
        for &e in probes {
            match probe_admissible(dict, &trie, w, EventType(e), opts.separation_cap) {
                Ok(true) => {}
                Ok(false) => {
                    return fail(format!(
                        "pattern {w}: probe {e} admits a competing separation"
                    ))
                }
                Err(e2) => return unknown(format!("pattern {w}: {e2}")),
            }
        }
        let probe_events: Vec<EventType> = probes.iter().map(|&e| EventType(e)).collect();
        let t = match build_t_matrix(params, dict, group, &probe_events) {
            Ok(t) => t,
            Err(e) => return unknown(format!("pattern {w}: {e}")),
        };
        let rank = augmented_column_rank(&t.values, opts.rank_rel_tol);
        if rank < group.len() {
            return fail(format!(
                "pattern {w}: probe matrix has column rank {rank} < {}",
                group.len()
            ));
        }
    }
    GroupCheck {
        classes: group.to_vec(),
        verdict: Verdict::Pass,
        detail: "all l-gram probe sets verified".into(),
    }
}

fn vacuous(group: &[usize]) -> GroupCheck {
    GroupCheck {
        classes: group.to_vec(),
        verdict: Verdict::Pass,
        detail: "singleton group, nothing to separate".into(),
    }
}

/// Runs every check and assembles the report.
pub fn check_identifiability(
    params: &ModelParams,
    dict: &Dictionary,
    witnesses: &Witnesses,
    opts: &CheckOptions,
) -> IdentifiabilityReport {
    let offenders = validate_a2(dict);
    let a2 = if offenders.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let groups = equivalence_classes(&params.lambda, opts.lambda_eps);
    let a1 = check_a1_sufficient(params, opts.lambda_eps);

    let mut c1_groups = Vec::new();
    let mut c2_groups = Vec::new();
    for g in &groups.groups {
        if g.len() == 1 {
            c1_groups.push(vacuous(g));
            c2_groups.push(vacuous(g));
            continue;
        }
        match witnesses.partitions.iter().find(|w| &w.classes == g) {
            Some(w) => c1_groups.push(check_c1_group(params, dict, w, opts)),
            None => c1_groups.push(GroupCheck {
                classes: g.clone(),
                verdict: Verdict::CannotVerify,
                detail: "no partition witness supplied".into(),
            }),
        }
        let probes: Vec<(Pattern, Vec<u16>)> = witnesses
            .probes
            .iter()
            .filter(|p| &p.classes == g)
            .map(|p| (p.pattern.clone(), p.probes.clone()))
            .collect();
        c2_groups.push(check_c2_group(params, dict, g, &probes, opts));
    }

    let c1 = ConditionReport {
        verdict: combine(&c1_groups),
        groups: c1_groups,
    };
    let c2 = ConditionReport {
        verdict: combine(&c2_groups),
        groups: c2_groups,
    };
    let verdicts = [a2, c1.verdict, c2.verdict];
    let overall = if verdicts.contains(&Verdict::Fail) {
        Verdict::Fail
    } else if verdicts.contains(&Verdict::CannotVerify) {
        Verdict::CannotVerify
    } else {
        Verdict::Pass
    };
    IdentifiabilityReport {
        a2,
        a2_offenders: offenders,
        a1_sufficient: a1,
        equivalence_classes: groups.groups,
        c1,
        c2,
        overall,
    }
}

// ---------------------------------------------------------------------------
// Bounded witness search. Best effort: the verifier above remains the
// authority on whatever this proposes.
// ---------------------------------------------------------------------------

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }
    fn find(&mut self, i: usize) -> usize {
        if self.0[i] != i {
            let r = self.find(self.0[i]);
            self.0[i] = r;
        }
        self.0[i]
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Greedy partition proposal: 1-grams whose pairwise sentences admit more
/// than one separation are forced into the same block, components are dealt
/// to the three blocks smallest-load-first. Returns `None` when fewer than
/// three components exist.
pub fn search_partition(
    dict: &Dictionary,
    group: &[usize],
    opts: &CheckOptions,
) -> Option<PartitionWitness> {
    let unigrams = dictionary_unigram_events(dict);
    let n = unigrams.len();
    if n < 3 {
        return None;
    }
    let trie = PatternTrie::build(dict);
    let mut uf = UnionFind::new(n);
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let sentence = [unigrams[a], unigrams[b]];
            match count_separations_capped(&sentence, dict, &trie, opts.separation_cap) {
                Ok(1) => {}
                _ => uf.union(a, b),
            }
        }
    }
    let mut components: Vec<Vec<u16>> = Vec::new();
    let mut root_of: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let r = uf.find(i);
        let slot = match root_of[r] {
            Some(s) => s,
            None => {
                components.push(Vec::new());
                root_of[r] = Some(components.len() - 1);
                components.len() - 1
            }
        };
        components[slot].push(unigrams[i].0);
    }
    if components.len() < 3 {
        return None;
    }
    components.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a[0].cmp(&b[0])));
    let mut blocks: [Vec<u16>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for comp in components {
        let target = (0..3).min_by_key(|&k| (blocks[k].len(), k)).unwrap();
        blocks[target].extend(comp);
    }
    for b in &mut blocks {
        b.sort_unstable();
    }
    Some(PartitionWitness {
        classes: group.to_vec(),
        blocks,
    })
}

/// Greedy probe proposal for one l-gram: admissible 1-grams in id order,
/// preferring those that raise the rank of the growing probe matrix.
pub fn search_probes(
    params: &ModelParams,
    dict: &Dictionary,
    group: &[usize],
    w: &Pattern,
    opts: &CheckOptions,
) -> Option<Vec<u16>> {
    let trie = PatternTrie::build(dict);
    let mut admissible = Vec::new();
    for e in dictionary_unigram_events(dict) {
        if let Ok(true) = probe_admissible(dict, &trie, w, e, opts.separation_cap) {
            admissible.push(e);
        }
    }
    if admissible.len() < group.len() {
        return None;
    }
    let mut chosen: Vec<EventType> = Vec::new();
    let mut rank = 0usize;
    for &e in &admissible {
        if rank >= group.len() {
            break;
        }
        let mut trial = chosen.clone();
        trial.push(e);
        let t = build_t_matrix(params, dict, group, &trial).ok()?;
        let r = augmented_column_rank(&t.values, opts.rank_rel_tol);
        if r > rank {
            chosen = trial;
            rank = r;
        }
    }
    for &e in &admissible {
        if chosen.len() >= group.len() {
            break;
        }
        if !chosen.contains(&e) {
            chosen.push(e);
        }
    }
    Some(chosen.into_iter().map(|e| e.0).collect())
}

/// Completes a witness set for every multi-class group: partitions are
/// taken from `partition_hints` when present and searched otherwise; probe
/// sets are always searched.
pub fn search_witnesses(
    params: &ModelParams,
    dict: &Dictionary,
    partition_hints: &[PartitionWitness],
    opts: &CheckOptions,
) -> Witnesses {
    let groups = equivalence_classes(&params.lambda, opts.lambda_eps);
    let mut out = Witnesses::default();
    for g in &groups.groups {
        if g.len() == 1 {
            continue;
        }
        match partition_hints.iter().find(|w| &w.classes == g) {
            Some(w) => out.partitions.push(w.clone()),
            None => {
                if let Some(w) = search_partition(dict, g, opts) {
                    out.partitions.push(w);
                }
            }
        }
        for w in dict.patterns().iter().filter(|p| p.len() >= 2) {
            if let Some(probes) = search_probes(params, dict, g, w, opts) {
                out.probes.push(ProbeWitness {
                    classes: g.clone(),
                    pattern: w.clone(),
                    probes,
                });
            }
        }
    }
    out
}
