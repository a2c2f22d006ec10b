//! Built-in simulation settings and the raw-log example.
//!
//! Four parameterizations are bundled, covering the identifiable cases
//! (distinct rates; rate ties broken by disjoint pattern families) and a
//! deliberately non-identifiable one (two classes that differ in just two
//! patterns). Event labels are 1-based strings; ids are 0-based.

use crate::error::{Error, Result};
use crate::identifiability::PartitionWitness;
use crate::types::{Dictionary, ModelParams, Pattern};

/// One bundled simulation setting.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub alphabet: Vec<String>,
    pub dictionary: Dictionary,
    pub params: ModelParams,
    /// Maximum pattern length used by the fitting loop for this setting.
    pub max_pattern_len: usize,
    /// Record count used in the original study.
    pub default_m: usize,
    /// 1-gram partition witnesses for the uniqueness checks, one per
    /// multi-class rate group (empty when all groups are singletons).
    pub partitions: Vec<PartitionWitness>,
}

fn labels(n: u16) -> Vec<String> {
    (1..=n).map(|i| i.to_string()).collect()
}

/// Patterns are written with 1-based event labels and shifted to 0-based ids.
fn pat(labels: &[u16]) -> Pattern {
    Pattern::from_ids(&labels.iter().map(|&l| l - 1).collect::<Vec<_>>())
}

fn unigrams(n: u16) -> Vec<Pattern> {
    (1..=n).map(|i| pat(&[i])).collect()
}

/// Expands per-class block values into a dense theta row.
/// `blocks` lists (start, end, value) over 1-based dictionary positions.
fn theta_row(v_d: usize, blocks: &[(usize, usize, f64)]) -> Vec<f64> {
    let mut row = vec![0.0; v_d];
    for &(start, end, value) in blocks {
        for slot in row.iter_mut().take(end).skip(start - 1) {
            *slot = value;
        }
    }
    row
}

fn shared_20_event_dictionary(threegram_order_swapped: bool) -> Vec<Pattern> {
    let mut pats = unigrams(20);
    // positions 21-30
    for w in [
        [1, 2],
        [2, 3],
        [3, 4],
        [4, 5],
        [5, 1],
        [6, 7],
        [7, 8],
        [8, 9],
        [9, 10],
        [10, 6],
    ] {
        pats.push(pat(&w));
    }
    // positions 31-40
    for w in [
        [11, 12],
        [12, 13],
        [13, 14],
        [14, 15],
        [15, 11],
        [16, 17],
        [17, 18],
        [18, 19],
        [19, 20],
        [20, 11],
    ] {
        pats.push(pat(&w));
    }
    let low: [[u16; 3]; 5] = [[1, 2, 4], [2, 3, 5], [3, 4, 7], [3, 9, 6], [2, 5, 6]];
    let high: [[u16; 3]; 5] = [
        [11, 12, 14],
        [12, 13, 15],
        [13, 14, 12],
        [14, 15, 11],
        [15, 11, 13],
    ];
    let (first, second) = if threegram_order_swapped {
        (low, high)
    } else {
        (high, low)
    };
    for w in first.iter().chain(second.iter()) {
        pats.push(pat(w));
    }
    pats
}

fn canonical_partition_blocks() -> [Vec<u16>; 3] {
    [(0..5).collect(), (5..10).collect(), (10..20).collect()]
}

fn setting1() -> Fixture {
    let dictionary = Dictionary::new(shared_20_event_dictionary(false)).unwrap();
    let v = dictionary.len();
    let theta = vec![
        theta_row(v, &[(1, 10, 0.3), (21, 30, 0.2)]),
        theta_row(v, &[(11, 20, 0.3), (31, 40, 0.2)]),
        theta_row(v, &[(1, 20, 0.2), (21, 40, 0.05), (41, 50, 0.001)]),
        theta_row(v, &[(1, 20, 0.05), (41, 45, 0.3)]),
        theta_row(v, &[(21, 40, 0.03), (46, 50, 0.3)]),
    ];
    let params = ModelParams::new(
        vec![0.4, 0.3, 0.2, 0.05, 0.05],
        theta,
        vec![10.0, 2.5, 1.0, 0.5, 0.2],
        10.0,
    )
    .unwrap();
    Fixture {
        name: "setting1",
        alphabet: labels(20),
        dictionary,
        params,
        max_pattern_len: 3,
        default_m: 1000,
        partitions: vec![],
    }
}

fn setting2() -> Fixture {
    let dictionary = Dictionary::new(shared_20_event_dictionary(true)).unwrap();
    let v = dictionary.len();
    let class_a = theta_row(v, &[(1, 10, 0.3), (21, 30, 0.2)]);
    let class_b = theta_row(v, &[(11, 20, 0.3), (31, 40, 0.2)]);
    let theta = vec![
        class_a.clone(),
        class_a,
        class_b.clone(),
        class_b,
        theta_row(v, &[(1, 20, 0.05), (41, 45, 0.3)]),
        theta_row(v, &[(21, 40, 0.03), (46, 50, 0.3)]),
    ];
    let params = ModelParams::new(
        vec![0.2, 0.2, 0.2, 0.2, 0.1, 0.1],
        theta,
        vec![0.2, 4.0, 0.2, 4.0, 1.0, 1.0],
        10.0,
    )
    .unwrap();
    let blocks = canonical_partition_blocks();
    let partitions = vec![
        PartitionWitness {
            classes: vec![0, 2],
            blocks: blocks.clone(),
        },
        PartitionWitness {
            classes: vec![1, 3],
            blocks: blocks.clone(),
        },
        PartitionWitness {
            classes: vec![4, 5],
            blocks,
        },
    ];
    Fixture {
        name: "setting2",
        alphabet: labels(20),
        dictionary,
        params,
        max_pattern_len: 3,
        default_m: 1000,
        partitions,
    }
}

fn setting3() -> Fixture {
    let mut pats = unigrams(30);
    // 31-45
    for w in [
        [1, 2],
        [2, 1],
        [2, 3],
        [3, 2],
        [3, 4],
        [4, 3],
        [4, 5],
        [5, 4],
        [5, 1],
        [1, 5],
        [6, 7],
        [7, 8],
        [8, 9],
        [9, 10],
        [10, 6],
    ] {
        pats.push(pat(&w));
    }
    // 46-60
    for w in [
        [11, 12],
        [12, 13],
        [13, 14],
        [14, 15],
        [15, 11],
        [16, 17],
        [17, 18],
        [18, 19],
        [19, 20],
        [20, 11],
        [1, 11],
        [2, 12],
        [3, 13],
        [4, 14],
        [5, 15],
    ] {
        pats.push(pat(&w));
    }
    // 61-68
    for w in [
        [1, 2, 4],
        [2, 3, 5],
        [3, 4, 7],
        [3, 9, 6],
        [2, 5, 6],
        [2, 1, 4],
        [3, 2, 5],
        [4, 2, 7],
    ] {
        pats.push(pat(&w));
    }
    // 69-75
    for w in [
        [11, 12, 14],
        [12, 13, 15],
        [13, 14, 12],
        [14, 15, 11],
        [15, 11, 13],
        [12, 11, 14],
        [13, 12, 15],
    ] {
        pats.push(pat(&w));
    }
    // 76-83
    for w in [
        [1, 2, 3, 4],
        [2, 3, 5, 1],
        [3, 4, 7, 1],
        [3, 9, 6, 2],
        [2, 5, 6, 4],
        [3, 4, 1, 2],
        [5, 1, 7, 8],
        [6, 9, 3, 4],
    ] {
        pats.push(pat(&w));
    }
    // 84-90
    for w in [
        [11, 12, 13, 14],
        [12, 13, 15, 11],
        [13, 14, 17, 11],
        [24, 25, 26, 27],
        [24, 26, 28, 30],
        [11, 16, 21, 26],
        [16, 11, 26, 21],
    ] {
        pats.push(pat(&w));
    }
    let dictionary = Dictionary::new(pats).unwrap();
    let v = dictionary.len();
    let theta = vec![
        theta_row(v, &[(1, 15, 0.15), (61, 70, 0.06), (71, 75, 0.06)]),
        theta_row(
            v,
            &[(16, 30, 0.15), (31, 35, 0.06), (36, 50, 0.06), (51, 60, 0.06)],
        ),
        theta_row(
            v,
            &[
                (1, 30, 0.05),
                (31, 35, 0.05),
                (36, 60, 0.001),
                (61, 70, 0.05),
                (71, 90, 0.001),
            ],
        ),
        theta_row(v, &[(31, 50, 0.03), (76, 85, 0.05)]),
        theta_row(v, &[(1, 30, 0.04), (86, 90, 0.1)]),
    ];
    let params = ModelParams::new(
        vec![0.3, 0.3, 0.2, 0.1, 0.1],
        theta,
        vec![10.0, 2.5, 1.0, 0.5, 0.2],
        10.0,
    )
    .unwrap();
    Fixture {
        name: "setting3",
        alphabet: labels(30),
        dictionary,
        params,
        max_pattern_len: 4,
        default_m: 2000,
        partitions: vec![],
    }
}

fn setting4() -> Fixture {
    let dictionary = Dictionary::new(shared_20_event_dictionary(false)).unwrap();
    let v = dictionary.len();
    let mut class1 = theta_row(v, &[(1, 20, 0.15), (21, 30, 0.1)]);
    class1[20] = 0.0; // no [1 2]
    let mut class2 = theta_row(v, &[(1, 20, 0.15), (21, 30, 0.1)]);
    class2[21] = 0.0; // no [2 3]
    let theta = vec![
        class1,
        class2,
        theta_row(v, &[(1, 20, 0.1), (31, 40, 0.15)]),
        theta_row(v, &[(1, 20, 0.05), (41, 45, 0.3)]),
        theta_row(v, &[(21, 40, 0.03), (46, 50, 0.3)]),
    ];
    let params = ModelParams::new(
        vec![0.4, 0.3, 0.2, 0.05, 0.05],
        theta,
        vec![1.0, 1.0, 1.0, 1.0, 1.0],
        10.0,
    )
    .unwrap();
    let partitions = vec![PartitionWitness {
        classes: vec![0, 1, 2, 3, 4],
        blocks: canonical_partition_blocks(),
    }];
    Fixture {
        name: "setting4",
        alphabet: labels(20),
        dictionary,
        params,
        max_pattern_len: 3,
        default_m: 1000,
        partitions,
    }
}

/// Looks up a fixture by name (`setting1` .. `setting4`).
pub fn by_name(name: &str) -> Result<Fixture> {
    match name {
        "setting1" => Ok(setting1()),
        "setting2" => Ok(setting2()),
        "setting3" => Ok(setting3()),
        "setting4" => Ok(setting4()),
        other => Err(Error::Config(format!(
            "unknown fixture {other:?}; expected setting1..setting4"
        ))),
    }
}

pub fn all() -> Vec<Fixture> {
    vec![setting1(), setting2(), setting3(), setting4()]
}

/// A complete raw log for one examinee of the 23-road highlighting item,
/// in the four-column layout `event_number, event, time, event_value`.
/// State rows carry the 23-character highlight bitstring; a mid-session
/// reset clears the board without emitting road toggles.
pub fn traffic_fixture_log() -> String {
    // board states walked by the examinee; sentence structure:
    // (10,8,9,20)+ | (9,10,8)- | reset | (3,22,4,20,15)+ | (15)- | (9,8,10)+
    let toggles: [(u16, f64); 16] = [
        (10, 27.70),
        (8, 28.60),
        (9, 29.40),
        (20, 30.50),
        (9, 31.90),
        (10, 33.10),
        (8, 34.00),
        (3, 36.40),
        (22, 37.80),
        (4, 38.90),
        (20, 40.10),
        (15, 41.30),
        (15, 43.00),
        (9, 46.00),
        (8, 47.70),
        (10, 48.70),
    ];
    let reset_after = 7; // board cleared after the 7th toggle
    let road_names: [&str; 16] = [
        "NobelLee",
        "MarketLee",
        "MarketPark",
        "ParkSilver",
        "MarketPark",
        "NobelLee",
        "MarketLee",
        "SilverLee",
        "ParkLincoln",
        "LeeLincoln",
        "ParkSilver",
        "DiamondEinstein",
        "DiamondEinstein",
        "MarketPark",
        "MarketLee",
        "NobelLee",
    ];

    let mut rows = Vec::new();
    let mut n = 1;
    rows.push(format!("{n}\tSTART_ITEM\t0.00\tNULL"));
    n += 1;
    rows.push(format!("{n}\tclick\t24.60\tparagraph01"));
    n += 1;

    let mut board = [false; 23];
    for (i, &(road, time)) in toggles.iter().enumerate() {
        if i == reset_after {
            rows.push(format!("{n}\tclick\t35.20\treset"));
            n += 1;
            board = [false; 23];
        }
        let idx = road as usize - 1;
        board[idx] = !board[idx];
        let bits: String = board.iter().map(|&b| if b { '1' } else { '0' }).collect();
        rows.push(format!("{n}\tACER_EVENT\t{time:.2}\t{bits}"));
        n += 1;
        rows.push(format!("{n}\tclick\t{time:.2}\thit_{}", road_names[i]));
        n += 1;
    }
    rows.push(format!("{n}\tQ3_SELECT\t54.70\tPark"));
    n += 1;
    rows.push(format!("{n}\tEND_ITEM\t66.20\tNULL"));
    rows.join("\n") + "\n"
}
