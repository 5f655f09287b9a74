//! Random k-CNF datasets around the satisfiability phase transition.
//!
//! Every generation attempt `a` draws from its own ChaCha stream
//! `(seed, a)`, so the result does not depend on how attempts are spread over
//! worker threads. Attempts are labelled by the DPLL solver and poured in
//! order into a SAT and an UNSAT bucket until both hold `size / 2` entries.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cnf::{emit_dimacs, max_clause_count, parse_dimacs, Clause, Formula, Literal};
use crate::error::GenError;
use crate::sat::{solve, SolveBudget, SolveStatus};

/// Linear coefficient of the transition curve.
pub const TRANSITION_LINEAR: f64 = 4.258;
/// Coefficient of the finite-size correction term.
pub const TRANSITION_CORRECTION: f64 = 58.26;

/// Bounds of the clause/variable ratio used for entries outside the hard window.
pub const NON_HARD_RATIO: (f64, f64) = (1.0, 6.0);

/// Stream reserved for the split shuffle; attempts use streams `0..`.
const SPLIT_STREAM: u64 = u64::MAX;

/// A rational exponent `num / den` for the correction term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Exponent {
    pub num: i32,
    pub den: i32,
}

impl Exponent {
    /// `-5/3`: the finite-size correction decays with `n`.
    pub const CORRECTED: Exponent = Exponent { num: -5, den: 3 };
    /// `+2/3`, the other reading of the correction term.
    pub const LITERAL: Exponent = Exponent { num: 2, den: 3 };

    pub fn value(self) -> f64 {
        f64::from(self.num) / f64::from(self.den)
    }
}

impl Default for Exponent {
    fn default() -> Self {
        Exponent::CORRECTED
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Exponent {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (num, den) = match s.split_once('/') {
            Some((a, b)) => (a.trim(), b.trim()),
            None => (s, "1"),
        };
        let num: i32 = num.parse().map_err(|_| format!("bad exponent numerator in {s:?}"))?;
        let den: i32 = den.parse().map_err(|_| format!("bad exponent denominator in {s:?}"))?;
        if den == 0 {
            return Err(format!("zero denominator in {s:?}"));
        }
        Ok(Exponent { num, den })
    }
}

impl Serialize for Exponent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Real-valued centre of the hard region, `4.258·n + 58.26·n^e`.
pub fn phase_transition_h(n: usize, exponent: Exponent) -> f64 {
    let n = n as f64;
    TRANSITION_LINEAR * n + TRANSITION_CORRECTION * n.powf(exponent.value())
}

/// [`phase_transition_h`] rounded to the nearest clause count.
pub fn phase_transition_m(n: usize, exponent: Exponent) -> usize {
    phase_transition_h(n, exponent).round() as usize
}

/// `m` distinct clauses with `k` distinct variables each, variables uniform
/// without replacement from `1..=n`, polarities uniform. Duplicates are
/// resampled.
pub fn gen_formula<R: Rng + ?Sized>(k: usize, n: usize, m: usize, rng: &mut R) -> Result<Formula, GenError> {
    let bound = max_clause_count(n, k)?;
    if m as u128 > bound {
        return Err(GenError::TooManyClauses { k, n, m, bound });
    }
    let mut seen = std::collections::HashSet::with_capacity(m);
    let mut clauses = Vec::with_capacity(m);
    while clauses.len() < m {
        let vars = rand::seq::index::sample(rng, n, k);
        let lits = vars.iter().map(|v| Literal::new(v as u32 + 1, rng.gen_bool(0.5))).collect::<Result<Vec<_>, _>>()?;
        let clause = Clause::new(lits)?;
        if seen.insert(clause.clone()) {
            clauses.push(clause);
        }
    }
    Ok(Formula::new(k, n, clauses)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub k: usize,
    pub n_min: usize,
    pub n_max: usize,
    /// Total entries `s`; must be even.
    pub size: usize,
    /// `f_p`: probability that an attempt draws `m` from the hard window.
    pub hard_fraction: f64,
    /// `f_l`: the window starts at `h'·(1 − f_l)`.
    pub window_left: f64,
    /// `f_r`: the window ends at `h'·(1 + f_r)`.
    pub window_right: f64,
    pub seed: u64,
    pub exponent: Exponent,
    /// Per-formula decision budget; UNKNOWN results are discarded.
    pub max_decisions: u64,
    /// Attempts allowed before giving up on balance.
    pub max_attempts: u64,
}

impl GenParams {
    /// Easy band with every formula in a ±1% window.
    pub fn easy(size: usize, seed: u64) -> Self {
        GenParams {
            k: 3,
            n_min: 10,
            n_max: 40,
            size,
            hard_fraction: 1.0,
            window_left: 0.01,
            window_right: 0.01,
            seed,
            exponent: Exponent::CORRECTED,
            max_decisions: 1_000_000,
            max_attempts: 100 * size as u64 + 10_000,
        }
    }

    /// Inclusive integer clause counts inside the hard window for `n`, capped
    /// by the distinct-clause bound.
    pub fn hard_window(&self, n: usize) -> Option<(usize, usize)> {
        let h = phase_transition_h(n, self.exponent);
        let lo = (h * (1.0 - self.window_left)).ceil().max(1.0) as usize;
        let hi = (h * (1.0 + self.window_right)).floor() as usize;
        let bound = max_clause_count(n, self.k).ok()?;
        let hi = hi.min(usize::try_from(bound).unwrap_or(usize::MAX));
        (lo <= hi).then_some((lo, hi))
    }

    /// Clause counts available to non-hard entries.
    pub fn non_hard_counts(&self, n: usize) -> Vec<usize> {
        let lo = (n as f64 * NON_HARD_RATIO.0).ceil() as usize;
        let hi = (n as f64 * NON_HARD_RATIO.1).floor() as usize;
        let bound = max_clause_count(n, self.k).map_or(0, |b| usize::try_from(b).unwrap_or(usize::MAX));
        let window = self.hard_window(n);
        (lo.max(1)..=hi.min(bound))
            .filter(|m| !matches!(window, Some((a, b)) if (a..=b).contains(m)))
            .collect()
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |msg: String| Err(GenError::InvalidParams(msg));
        if self.k < 2 {
            return bad(format!("k = {} must be at least 2", self.k));
        }
        if self.n_min < self.k || self.n_min > self.n_max {
            return bad(format!("need k <= n_min <= n_max, got k={} n=[{}, {}]", self.k, self.n_min, self.n_max));
        }
        if self.size == 0 || !self.size.is_multiple_of(2) {
            return bad(format!("size {} must be positive and even", self.size));
        }
        for (name, v) in [("f_p", self.hard_fraction), ("f_l", self.window_left), ("f_r", self.window_right)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} = {v} outside [0, 1]"));
            }
        }
        for n in self.n_min..=self.n_max {
            if self.hard_fraction > 0.0 && self.hard_window(n).is_none() {
                return bad(format!("hard window for n = {n} holds no admissible clause count"));
            }
            if self.hard_fraction < 1.0 && self.non_hard_counts(n).is_empty() {
                return bad(format!("no non-hard clause count available for n = {n}"));
            }
        }
        Ok(())
    }

    /// Entries held out for validation (and, separately, for test): 10% of
    /// `size`, rounded down to keep both labels equally represented.
    pub fn holdout_size(&self) -> usize {
        2 * (self.size / 20)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryStats {
    pub n: usize,
    pub m: usize,
    pub hard: bool,
    pub decisions: u64,
    pub propagations: u64,
}

#[derive(Debug, Clone)]
pub struct DatasetEntry {
    pub formula: Formula,
    /// 1 iff the formula is satisfiable.
    pub label: u8,
    pub split: Split,
    pub stats: EntryStats,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub sat: usize,
    pub unsat: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub params: Option<GenParams>,
    pub counts: BTreeMap<Split, LabelCounts>,
    pub attempts: u64,
    pub discarded_unknown: u64,
    pub discarded_overflow: u64,
    pub total_decisions: u64,
    pub total_propagations: u64,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct Dataset {
    pub entries: Vec<DatasetEntry>,
    pub manifest: Manifest,
}

impl Dataset {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &DatasetEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn counts(&self, split: Split) -> LabelCounts {
        self.split(split).fold(LabelCounts::default(), |mut c, e| {
            if e.label == 1 {
                c.sat += 1
            } else {
                c.unsat += 1
            }
            c
        })
    }

    fn refresh_counts(&mut self) {
        self.manifest.counts = Split::ALL.iter().map(|&s| (s, self.counts(s))).collect();
    }
}

struct Attempt {
    index: u64,
    formula: Formula,
    status: SolveStatus,
    stats: EntryStats,
}

fn run_attempt(p: &GenParams, index: u64) -> Result<Attempt, GenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    rng.set_stream(index);
    let n = rng.gen_range(p.n_min..=p.n_max);
    let hard = rng.gen_bool(p.hard_fraction);
    let m = if hard {
        let (lo, hi) = p.hard_window(n).expect("validated window");
        rng.gen_range(lo..=hi)
    } else {
        let counts = p.non_hard_counts(n);
        counts[rng.gen_range(0..counts.len())]
    };
    let formula = gen_formula(p.k, n, m, &mut rng)?;
    let r = solve(&formula, SolveBudget::decisions(p.max_decisions));
    Ok(Attempt {
        index,
        formula,
        status: r.status,
        stats: EntryStats { n, m, hard, decisions: r.stats.decisions, propagations: r.stats.propagations },
    })
}

/// Generates a balanced, labelled dataset. Attempts are evaluated in parallel
/// on the current rayon pool; output depends only on `p`.
pub fn build_dataset(p: &GenParams) -> Result<Dataset, GenError> {
    p.validate()?;
    let want = p.size / 2;
    let chunk = (64 * rayon::current_num_threads()) as u64;
    let mut sat: Vec<Attempt> = Vec::with_capacity(want);
    let mut unsat: Vec<Attempt> = Vec::with_capacity(want);
    let mut manifest = Manifest { format_version: MANIFEST_VERSION, params: Some(p.clone()), ..Manifest::default() };
    let mut next = 0u64;
    while sat.len() < want || unsat.len() < want {
        if next >= p.max_attempts {
            return Err(GenError::Unbalanced { attempts: next, sat: sat.len(), unsat: unsat.len(), want });
        }
        let end = (next + chunk).min(p.max_attempts);
        let batch: Vec<Attempt> = (next..end).into_par_iter().map(|i| run_attempt(p, i)).collect::<Result<_, _>>()?;
        next = end;
        for a in batch {
            if sat.len() >= want && unsat.len() >= want {
                break;
            }
            manifest.attempts += 1;
            manifest.total_decisions += a.stats.decisions;
            manifest.total_propagations += a.stats.propagations;
            match a.status {
                SolveStatus::Unknown => manifest.discarded_unknown += 1,
                SolveStatus::Sat if sat.len() < want => sat.push(a),
                SolveStatus::Unsat if unsat.len() < want => unsat.push(a),
                _ => manifest.discarded_overflow += 1,
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    rng.set_stream(SPLIT_STREAM);
    sat.shuffle(&mut rng);
    unsat.shuffle(&mut rng);
    let per_class = p.holdout_size() / 2;
    let mut entries = Vec::with_capacity(p.size);
    for (label, bucket) in [(1u8, sat), (0u8, unsat)] {
        for (pos, a) in bucket.into_iter().enumerate() {
            let split = if pos < per_class {
                Split::Valid
            } else if pos < 2 * per_class {
                Split::Test
            } else {
                Split::Train
            };
            entries.push((a.index, DatasetEntry { formula: a.formula, label, split, stats: a.stats }));
        }
    }
    entries.sort_by_key(|(idx, e)| (e.split, *idx));
    let mut ds = Dataset { entries: entries.into_iter().map(|(_, e)| e).collect(), manifest };
    ds.refresh_counts();
    Ok(ds)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> GenError + '_ {
    move |source| GenError::Io { path: path.display().to_string(), source }
}

/// Text of one dataset file: label and size comments, then the formula.
pub fn entry_to_dimacs(e: &DatasetEntry) -> String {
    let mut f = e.formula.clone().with_comments(vec![
        format!("label {}", e.label),
        format!("n {} m {}", e.formula.num_vars(), e.formula.num_clauses()),
    ]);
    if e.stats.hard {
        f.push_comment("hard 1");
    }
    emit_dimacs(&f)
}

/// Writes `{split}/{index}.cnf` files and `manifest.json` under `dir`.
pub fn write_dataset(ds: &Dataset, dir: &Path) -> Result<(), GenError> {
    for s in Split::ALL {
        let sub = dir.join(s.name());
        fs::create_dir_all(&sub).map_err(io_err(&sub))?;
        for (i, e) in ds.split(s).enumerate() {
            let path = sub.join(format!("{i}.cnf"));
            fs::write(&path, entry_to_dimacs(e)).map_err(io_err(&path))?;
        }
    }
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&ds.manifest)?;
    text.push('\n');
    fs::write(&path, text).map_err(io_err(&path))
}

fn read_labeled(path: &Path, split: Split) -> Result<DatasetEntry, GenError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let bad = |reason: String| GenError::BadEntry { path: path.display().to_string(), reason };
    let formula = parse_dimacs(&text).map_err(|e| bad(e.to_string()))?;
    let label = match formula.comment_value("label") {
        Some("1") => 1,
        Some("0") => 0,
        other => return Err(bad(format!("missing or invalid label comment: {other:?}"))),
    };
    let hard = formula.comment_value("hard") == Some("1");
    let stats = EntryStats { n: formula.num_vars(), m: formula.num_clauses(), hard, ..EntryStats::default() };
    Ok(DatasetEntry { formula, label, split, stats })
}

fn cnf_files(dir: &Path) -> Result<Vec<PathBuf>, GenError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "cnf"))
        .collect();
    // numeric stems first in numeric order, then the rest by name
    files.sort_by(|a, b| {
        let key = |p: &PathBuf| {
            let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("").to_string();
            (stem.parse::<u64>().unwrap_or(u64::MAX), stem)
        };
        key(a).cmp(&key(b))
    });
    Ok(files)
}

/// Loads a dataset directory. With `train/`, `valid/`, `test/`
/// subdirectories the split comes from the directory; otherwise every `.cnf`
/// file directly under `dir` is read and split 80/10/10 per label using
/// `seed`. Every file must carry a `c label <0|1>` comment.
pub fn load_dataset(dir: &Path, seed: u64) -> Result<Dataset, GenError> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let mut manifest = if manifest_path.exists() {
        let text = fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
        serde_json::from_str(&text)?
    } else {
        Manifest { format_version: MANIFEST_VERSION, ..Manifest::default() }
    };
    let mut entries = Vec::new();
    if Split::ALL.iter().any(|s| dir.join(s.name()).is_dir()) {
        for s in Split::ALL {
            let sub = dir.join(s.name());
            if sub.is_dir() {
                for path in cnf_files(&sub)? {
                    entries.push(read_labeled(&path, s)?);
                }
            }
        }
    } else {
        let all = cnf_files(dir)?.iter().map(|p| read_labeled(p, Split::Train)).collect::<Result<Vec<_>, _>>()?;
        let (mut sat, mut unsat): (Vec<_>, Vec<_>) = all.into_iter().partition(|e| e.label == 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(SPLIT_STREAM);
        sat.shuffle(&mut rng);
        unsat.shuffle(&mut rng);
        for bucket in [sat, unsat] {
            let hold = bucket.len() / 10;
            for (pos, mut e) in bucket.into_iter().enumerate() {
                e.split = if pos < hold {
                    Split::Valid
                } else if pos < 2 * hold {
                    Split::Test
                } else {
                    Split::Train
                };
                entries.push(e);
            }
        }
        entries.sort_by_key(|e| e.split);
        manifest.params = None;
    }
    let mut ds = Dataset { entries, manifest };
    ds.refresh_counts();
    Ok(ds)
}
