//! Enumeration and counting of dictionary-pattern separations.
//!
//! A separation of an event sentence is an ordered sequence of *distinct*
//! dictionary patterns whose concatenation equals the sentence. Enumeration
//! is a depth-first search over split points guided by a prefix trie of the
//! dictionary; the used-pattern set enforces distinctness exactly.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::types::{Dictionary, EventType, Pattern};

/// Default bound on the number of separations materialized per sentence.
pub const DEFAULT_SEPARATION_CAP: usize = 10_000;

/// Prefix index of a dictionary for linear-time pattern matching at a
/// position. Node ids are dense; node 0 is the root.
#[derive(Debug)]
pub struct PatternTrie {
    children: Vec<HashMap<EventType, u32>>,
    terminal: Vec<Option<u32>>,
    pattern_count: usize,
}

impl PatternTrie {
    pub fn build(dict: &Dictionary) -> Self {
        let mut trie = PatternTrie {
            children: vec![HashMap::new()],
            terminal: vec![None],
            pattern_count: dict.len(),
        };
        for (idx, p) in dict.patterns().iter().enumerate() {
            let mut node = 0usize;
            for &e in p.events() {
                let next = match trie.children[node].get(&e) {
                    Some(&n) => n as usize,
                    None => {
                        trie.children.push(HashMap::new());
                        trie.terminal.push(None);
                        let n = trie.children.len() - 1;
                        trie.children[node].insert(e, n as u32);
                        n
                    }
                };
                node = next;
            }
            trie.terminal[node] = Some(idx as u32);
        }
        trie
    }

    /// All dictionary patterns that start at `pos` in `events`, as
    /// (pattern index, length), ordered by increasing length.
    fn matches_at(&self, events: &[EventType], pos: usize, out: &mut Vec<(u32, usize)>) {
        out.clear();
        let mut node = 0usize;
        for (len, &e) in events[pos..].iter().enumerate() {
            match self.children[node].get(&e) {
                Some(&n) => node = n as usize,
                None => return,
            }
            if let Some(idx) = self.terminal[node] {
                out.push((idx, len + 1));
            }
        }
    }
}

/// All separations of one sentence, in canonical order (lexicographic by
/// split positions, i.e. shorter first pattern first). Each member is a
/// sequence of dictionary indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparationSet {
    pub separations: Vec<Vec<u32>>,
}

impl SeparationSet {
    pub fn count(&self) -> usize {
        self.separations.len()
    }

    /// Materializes one member as patterns.
    pub fn resolve(&self, i: usize, dict: &Dictionary) -> Vec<Pattern> {
        self.separations[i]
            .iter()
            .map(|&idx| dict.get(idx as usize).clone())
            .collect()
    }
}

struct Dfs<'a> {
    events: &'a [EventType],
    trie: &'a PatternTrie,
    used: Vec<bool>,
    current: Vec<u32>,
    out: Vec<Vec<u32>>,
    cap: usize,
    count_only: usize,
    materialize: bool,
}

impl Dfs<'_> {
    fn run(&mut self, pos: usize) -> Result<()> {
        if pos == self.events.len() {
            self.count_only += 1;
            if self.count_only > self.cap {
                return Err(Error::SeparationCap { cap: self.cap });
            }
            if self.materialize {
                self.out.push(self.current.clone());
            }
            return Ok(());
        }
        let mut matches = Vec::new();
        self.trie.matches_at(self.events, pos, &mut matches);
        for (idx, len) in matches {
            if self.used[idx as usize] {
                continue;
            }
            self.used[idx as usize] = true;
            self.current.push(idx);
            let r = self.run(pos + len);
            self.current.pop();
            self.used[idx as usize] = false;
            r?;
        }
        Ok(())
    }
}

/// Enumerates every separation of `events` under `dict`.
///
/// The empty sentence yields exactly the empty separation; an unsegmentable
/// sentence yields the empty set. Enumeration aborts with
/// [`Error::SeparationCap`] beyond `cap` members rather than truncating.
pub fn enumerate_separations_capped(
    events: &[EventType],
    dict: &Dictionary,
    trie: &PatternTrie,
    cap: usize,
) -> Result<SeparationSet> {
    debug_assert_eq!(trie.pattern_count, dict.len());
    let mut dfs = Dfs {
        events,
        trie,
        used: vec![false; dict.len()],
        current: Vec::new(),
        out: Vec::new(),
        cap,
        count_only: 0,
        materialize: true,
    };
    dfs.run(0)?;
    Ok(SeparationSet {
        separations: dfs.out,
    })
}

/// [`enumerate_separations_capped`] with a freshly built trie and the
/// default cap.
pub fn enumerate_separations(events: &[EventType], dict: &Dictionary) -> Result<SeparationSet> {
    let trie = PatternTrie::build(dict);
    enumerate_separations_capped(events, dict, &trie, DEFAULT_SEPARATION_CAP)
}

/// Number of separations of `events`, without materializing them. Aborts at
/// `cap` like the enumerating routine.
pub fn count_separations_capped(
    events: &[EventType],
    dict: &Dictionary,
    trie: &PatternTrie,
    cap: usize,
) -> Result<usize> {
    let mut dfs = Dfs {
        events,
        trie,
        used: vec![false; dict.len()],
        current: Vec::new(),
        out: Vec::new(),
        cap,
        count_only: 0,
        materialize: false,
    };
    dfs.run(0)?;
    Ok(dfs.count_only)
}

pub fn count_separations(events: &[EventType], dict: &Dictionary) -> Result<usize> {
    let trie = PatternTrie::build(dict);
    count_separations_capped(events, dict, &trie, DEFAULT_SEPARATION_CAP)
}

/// Counts every contiguous length-`l` window over the sentences, skipping
/// windows with repeated events and windows already in `exclude`, and
/// returns the `top` highest counts. Ties break lexicographically on
/// pattern content, so the result is deterministic.
pub fn frequent_lgrams(
    sentences: &[&[EventType]],
    l: usize,
    exclude: &Dictionary,
    top: usize,
) -> Vec<(Pattern, u64)> {
    let mut counts: HashMap<Pattern, u64> = HashMap::new();
    for s in sentences {
        if s.len() < l {
            continue;
        }
        for w in s.windows(l) {
            let p = Pattern(w.to_vec());
            if !p.has_distinct_events() || exclude.contains(&p) {
                continue;
            }
            *counts.entry(p).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(Pattern, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(top);
    ranked
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Pattern;

    fn dict(patterns: &[&[u16]]) -> Dictionary {
        Dictionary::new(patterns.iter().map(|p| Pattern::from_ids(p)).collect()).unwrap()
    }

    fn ev(ids: &[u16]) -> Vec<EventType> {
        ids.iter().copied().map(EventType).collect()
    }

    /// The worked three-sentence dictionary from the running example.
    fn example_dict() -> Dictionary {
        dict(&[
            &[10],
            &[20],
            &[8, 9],
            &[9, 8],
            &[10, 8],
            &[9, 20],
            &[3, 22, 4],
            &[9, 8, 10],
            &[16, 19, 6],
        ])
    }

    fn as_patterns(set: &SeparationSet, d: &Dictionary) -> Vec<Vec<Pattern>> {
        (0..set.count()).map(|i| set.resolve(i, d)).collect()
    }

    #[test]
    fn example_sentence_two_separations() {
        let d = example_dict();
        let set = enumerate_separations(&ev(&[9, 8, 10]), &d).unwrap();
        let got = as_patterns(&set, &d);
        assert_eq!(
            got,
            vec![
                vec![Pattern::from_ids(&[9, 8]), Pattern::from_ids(&[10])],
                vec![Pattern::from_ids(&[9, 8, 10])],
            ]
        );
    }

    #[test]
    fn example_long_sentence() {
        let d = example_dict();
        let set = enumerate_separations(&ev(&[10, 8, 9, 20, 3, 22, 4]), &d).unwrap();
        let got = as_patterns(&set, &d);
        assert_eq!(
            got,
            vec![
                vec![
                    Pattern::from_ids(&[10]),
                    Pattern::from_ids(&[8, 9]),
                    Pattern::from_ids(&[20]),
                    Pattern::from_ids(&[3, 22, 4]),
                ],
                vec![
                    Pattern::from_ids(&[10, 8]),
                    Pattern::from_ids(&[9, 20]),
                    Pattern::from_ids(&[3, 22, 4]),
                ],
            ]
        );
    }

    #[test]
    fn third_example_sentence() {
        let d = example_dict();
        let set = enumerate_separations(&ev(&[16, 19, 6, 9, 8, 10]), &d).unwrap();
        assert_eq!(set.count(), 2);
    }

    #[test]
    fn single_unigram() {
        let d = dict(&[&[7]]);
        let set = enumerate_separations(&ev(&[7]), &d).unwrap();
        assert_eq!(as_patterns(&set, &d), vec![vec![Pattern::from_ids(&[7])]]);
    }

    #[test]
    fn uncovered_sentence_is_empty_set() {
        let d = dict(&[&[5]]);
        let set = enumerate_separations(&ev(&[7]), &d).unwrap();
        assert_eq!(set.count(), 0);
    }

    #[test]
    fn empty_sentence_has_the_empty_separation() {
        let d = dict(&[&[1]]);
        let set = enumerate_separations(&[], &d).unwrap();
        assert_eq!(set.separations, vec![Vec::<u32>::new()]);
        assert_eq!(count_separations(&[], &d).unwrap(), 1);
    }

    #[test]
    fn distinctness_blocks_pattern_reuse() {
        // (1,2,1,2) can only use [1 2] once; the mixed splits survive
        let d = dict(&[&[1], &[2], &[1, 2]]);
        let set = enumerate_separations(&ev(&[1, 2, 1, 2]), &d).unwrap();
        for sep in &set.separations {
            let mut sorted = sep.clone();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), sep.len(), "pattern reused in {sep:?}");
        }
        // splits: ([1],[2],[1 2]-variants) minus the double-[1 2] one; the
        // all-unigram split also dies because [1] and [2] each recur
        assert_eq!(set.count(), 2);
    }

    #[test]
    fn count_matches_enumeration() {
        let d = example_dict();
        for sentence in [&ev(&[9, 8, 10])[..], &ev(&[10, 8, 9, 20])[..], &[]] {
            assert_eq!(
                count_separations(sentence, &d).unwrap(),
                enumerate_separations(sentence, &d).unwrap().count()
            );
        }
    }

    #[test]
    fn cap_aborts_with_distinct_error() {
        let ids: Vec<u16> = (0..14).collect();
        let mut pats: Vec<Pattern> = ids.iter().map(|&i| Pattern::from_ids(&[i])).collect();
        for w in ids.windows(2) {
            pats.push(Pattern::from_ids(w));
        }
        for w in ids.windows(3) {
            pats.push(Pattern::from_ids(w));
        }
        let d = Dictionary::new(pats).unwrap();
        let trie = PatternTrie::build(&d);
        let events = ev(&ids);
        let err = enumerate_separations_capped(&events, &d, &trie, 10).unwrap_err();
        assert!(matches!(err, Error::SeparationCap { cap: 10 }));
    }

    #[test]
    fn frequent_lgrams_counts_and_tiebreak() {
        let s1 = ev(&[1, 2, 3]);
        let s2 = ev(&[1, 2, 4]);
        let sents: Vec<&[EventType]> = vec![&s1, &s2];
        let empty = dict(&[&[9]]);
        let got = frequent_lgrams(&sents, 2, &empty, 1);
        assert_eq!(got, vec![(Pattern::from_ids(&[1, 2]), 2)]);

        let excl = dict(&[&[1, 2]]);
        let got = frequent_lgrams(&sents, 2, &excl, 1);
        assert_eq!(got, vec![(Pattern::from_ids(&[2, 3]), 1)]);
    }

    #[test]
    fn frequent_lgrams_skips_repeated_events() {
        let s = ev(&[5, 5, 5]);
        let sents: Vec<&[EventType]> = vec![&s];
        let empty = dict(&[&[9]]);
        assert!(frequent_lgrams(&sents, 2, &empty, 10).is_empty());
    }
}
