//! Statistical machinery for the error and downstream analyses: decile
//! partitioning of books by cloze accuracy, PPMI-ranked seen/unseen name sets,
//! the log-odds statistic with a randomization test, Spearman rank correlation
//! with tie handling, the percentile bootstrap, and MAE.
//!
//! Every randomized operation takes an explicit seed and derives per-iteration
//! substreams from it, so results are identical across platforms and across
//! any parallel scheduling of the iterations.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::probe::{normalize_name, BookScore, Prediction};
use crate::rng::{substream, SplitMix64};

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("insufficient books: need at least {need}, got {got}")]
    InsufficientBooks { need: usize, got: usize },
    #[error("input length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {need} values, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("non-finite value in input")]
    NonFinite,
    #[error("no error predictions fall in S or U")]
    NoErrorsInSets,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Books split by cloze accuracy into memorized (top decile), non-memorized
/// (bottom decile), and the held-out middle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecilePartition {
    pub memorized: BTreeSet<String>,
    pub non_memorized: BTreeSet<String>,
    pub held_out: BTreeSet<String>,
}

/// Generalization of the decile split: top and bottom `floor(N/denominator)`
/// books by accuracy (descending, ties broken by ascending book id).
pub fn quantile_partition(
    scores: &[BookScore],
    denominator: usize,
) -> Result<DecilePartition, StatsError> {
    if scores.len() < denominator {
        return Err(StatsError::InsufficientBooks {
            need: denominator,
            got: scores.len(),
        });
    }
    let mut order: Vec<&BookScore> = scores.iter().collect();
    order.sort_by(|a, b| {
        b.accuracy
            .total_cmp(&a.accuracy)
            .then_with(|| a.book_id.cmp(&b.book_id))
    });
    let k = scores.len() / denominator;
    let memorized: BTreeSet<String> = order[..k].iter().map(|s| s.book_id.clone()).collect();
    let non_memorized: BTreeSet<String> = order[order.len() - k..]
        .iter()
        .map(|s| s.book_id.clone())
        .collect();
    let held_out: BTreeSet<String> = order[k..order.len() - k]
        .iter()
        .map(|s| s.book_id.clone())
        .collect();
    Ok(DecilePartition {
        memorized,
        non_memorized,
        held_out,
    })
}

/// Top/bottom decile split; requires at least 10 books.
pub fn decile_partition(scores: &[BookScore]) -> Result<DecilePartition, StatsError> {
    quantile_partition(scores, 10)
}

/// Seen (S) and unseen (U) name sets, equal-sized and disjoint. Names are
/// stored in normalized form (see [`crate::probe::normalize_name`]).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameSets {
    pub seen: BTreeSet<String>,
    pub unseen: BTreeSet<String>,
}

/// Positive pointwise mutual information from joint and marginal counts:
/// `max(0, ln(c_joint * total / (c_name * c_book)))`.
pub fn ppmi(c_joint: u64, c_name: u64, c_book: u64, total: u64) -> f64 {
    if c_joint == 0 || c_name == 0 || c_book == 0 || total == 0 {
        return 0.0;
    }
    let v = ((c_joint as f64 * total as f64) / (c_name as f64 * c_book as f64)).ln();
    v.max(0.0)
}

fn side_pool(
    counts: &BTreeMap<String, BTreeMap<String, u64>>,
    side: &BTreeSet<String>,
    name_totals: &BTreeMap<&str, u64>,
    book_totals: &BTreeMap<&str, u64>,
    total: u64,
) -> Vec<(String, f64)> {
    // Highest PPMI per name across the side's books, positive entries only.
    let mut best: BTreeMap<&str, f64> = BTreeMap::new();
    for book_id in side {
        if let Some(names) = counts.get(book_id) {
            for (name, &c_joint) in names {
                let v = ppmi(
                    c_joint,
                    name_totals.get(name.as_str()).copied().unwrap_or(0),
                    book_totals.get(book_id.as_str()).copied().unwrap_or(0),
                    total,
                );
                if v > 0.0 {
                    let e = best.entry(name.as_str()).or_insert(0.0);
                    if v > *e {
                        *e = v;
                    }
                }
            }
        }
    }
    let mut pool: Vec<(String, f64)> = best
        .into_iter()
        .map(|(n, v)| (n.to_string(), v))
        .collect();
    pool.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    pool
}

/// Build the seen/unseen name sets from gold masked-name occurrence counts
/// (`book -> name -> count`, names already normalized) over the memorized and
/// non-memorized books. Returns the sets plus a flag indicating that `k` had
/// to shrink because one side had too few PPMI-positive names.
pub fn build_seen_unseen(
    counts: &BTreeMap<String, BTreeMap<String, u64>>,
    partition: &DecilePartition,
    k: usize,
) -> Result<(NameSets, bool), StatsError> {
    if k == 0 {
        return Err(StatsError::InvalidParameter("k must be >= 1".into()));
    }
    // Probabilities estimated over M ∪ ¬M only.
    let in_scope = |b: &str| {
        partition.memorized.contains(b) || partition.non_memorized.contains(b)
    };
    let mut name_totals: BTreeMap<&str, u64> = BTreeMap::new();
    let mut book_totals: BTreeMap<&str, u64> = BTreeMap::new();
    let mut total: u64 = 0;
    for (book, names) in counts {
        if !in_scope(book) {
            continue;
        }
        for (name, &c) in names {
            *name_totals.entry(name.as_str()).or_insert(0) += c;
            *book_totals.entry(book.as_str()).or_insert(0) += c;
            total += c;
        }
    }
    let pool_s = side_pool(counts, &partition.memorized, &name_totals, &book_totals, total);
    let pool_u = side_pool(counts, &partition.non_memorized, &name_totals, &book_totals, total);
    // Names appearing in both pools are removed from both before truncation.
    let names_s: BTreeSet<&str> = pool_s.iter().map(|(n, _)| n.as_str()).collect();
    let names_u: BTreeSet<&str> = pool_u.iter().map(|(n, _)| n.as_str()).collect();
    let dup: BTreeSet<String> = names_s
        .intersection(&names_u)
        .map(|s| s.to_string())
        .collect();
    let take = |pool: &[(String, f64)]| -> Vec<String> {
        pool.iter()
            .filter(|(n, _)| !dup.contains(n))
            .take(k)
            .map(|(n, _)| n.clone())
            .collect()
    };
    let mut seen_list = take(&pool_s);
    let mut unseen_list = take(&pool_u);
    let shrunk = seen_list.len() < k || unseen_list.len() < k;
    let size = seen_list.len().min(unseen_list.len());
    seen_list.truncate(size);
    unseen_list.truncate(size);
    Ok((
        NameSets {
            seen: seen_list.into_iter().collect(),
            unseen: unseen_list.into_iter().collect(),
        },
        shrunk,
    ))
}

/// Gold masked-name counts per book over an evaluation set, normalized.
pub fn gold_name_counts(
    passages: &[crate::cloze::ClozePassage],
) -> BTreeMap<String, BTreeMap<String, u64>> {
    let mut counts: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    for p in passages {
        *counts
            .entry(p.book_id.clone())
            .or_default()
            .entry(normalize_name(&p.gold_name))
            .or_insert(0) += 1;
    }
    counts
}

/// The log-odds statistic with its inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogOdds {
    pub value: f64,
    pub in_seen: usize,
    pub in_unseen: usize,
    /// Add-one smoothing was applied because one side had a zero count.
    pub smoothed: bool,
}

fn log_odds_from_counts(in_seen: usize, in_unseen: usize) -> LogOdds {
    if in_seen == 0 || in_unseen == 0 {
        LogOdds {
            value: ((in_seen + 1) as f64 / (in_unseen + 1) as f64).ln(),
            in_seen,
            in_unseen,
            smoothed: true,
        }
    } else {
        LogOdds {
            value: (in_seen as f64 / in_unseen as f64).ln(),
            in_seen,
            in_unseen,
            smoothed: false,
        }
    }
}

/// Normalized predicted names from error predictions that fall inside S ∪ U.
fn error_names_in_pool(errors: &[Prediction], sets: &NameSets) -> Vec<String> {
    errors
        .iter()
        .filter(|p| !p.correct)
        .filter_map(|p| p.parsed_name.as_deref())
        .map(normalize_name)
        .filter(|n| sets.seen.contains(n) || sets.unseen.contains(n))
        .collect()
}

/// Observed log-odds `o = ln(count(ĉ ∈ S | error) / count(ĉ ∈ U | error))`
/// over held-out errors whose predicted name lies in S ∪ U. The conditional
/// probabilities reduce to the raw count ratio because the denominators
/// cancel. A zero count on either side gets add-one smoothing on both.
pub fn observed_log_odds(
    errors_in_h: &[Prediction],
    sets: &NameSets,
) -> Result<LogOdds, StatsError> {
    let names = error_names_in_pool(errors_in_h, sets);
    if names.is_empty() {
        return Err(StatsError::NoErrorsInSets);
    }
    let in_seen = names.iter().filter(|n| sets.seen.contains(*n)).count();
    let in_unseen = names.len() - in_seen;
    Ok(log_odds_from_counts(in_seen, in_unseen))
}

/// Randomization test result. `p_value` uses the add-one convention
/// `(1 + #{shuffled statistic >= observed}) / (1 + iterations)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub observed: f64,
    pub p_value: f64,
    pub iterations: u64,
    pub seed: u64,
    pub smoothed: bool,
}

/// Statistics from shuffling names between S and U. Exposed so the p-value
/// rule can be tested independently of the shuffle loop.
pub fn shuffle_statistics(
    errors_in_h: &[Prediction],
    sets: &NameSets,
    iterations: u64,
    seed: u64,
) -> Result<Vec<f64>, StatsError> {
    let names = error_names_in_pool(errors_in_h, sets);
    if names.is_empty() {
        return Err(StatsError::NoErrorsInSets);
    }
    let pool: Vec<&String> = sets.seen.iter().chain(sets.unseen.iter()).collect();
    let half = sets.seen.len();
    let mut stats = Vec::with_capacity(iterations as usize);
    for it in 0..iterations {
        let mut rng = substream(seed, it);
        let mut shuffled = pool.clone();
        rng.shuffle(&mut shuffled);
        let seen_now: BTreeSet<&str> = shuffled[..half].iter().map(|s| s.as_str()).collect();
        let in_seen = names.iter().filter(|n| seen_now.contains(n.as_str())).count();
        let in_unseen = names.len() - in_seen;
        stats.push(log_odds_from_counts(in_seen, in_unseen).value);
    }
    Ok(stats)
}

/// P-value from shuffle statistics under the add-one convention.
pub fn p_value_from_stats(observed: f64, stats: &[f64]) -> f64 {
    let ge = stats.iter().filter(|&&s| s >= observed).count();
    (1 + ge) as f64 / (1 + stats.len()) as f64
}

/// Significance of the observed log-odds by randomly repartitioning S ∪ U
/// into equal halves `iterations` times. Deterministic per seed; iteration
/// substreams make the reduction order-independent.
pub fn randomization_test(
    errors_in_h: &[Prediction],
    sets: &NameSets,
    iterations: u64,
    seed: u64,
) -> Result<TestResult, StatsError> {
    if iterations < 1 {
        return Err(StatsError::InvalidParameter("iterations must be >= 1".into()));
    }
    let observed = observed_log_odds(errors_in_h, sets)?;
    let stats = shuffle_statistics(errors_in_h, sets, iterations, seed)?;
    Ok(TestResult {
        observed: observed.value,
        p_value: p_value_from_stats(observed.value, &stats),
        iterations,
        seed,
        smoothed: observed.smoothed,
    })
}

/// Average ranks (1-based); tied values receive the mean of their positions.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share the average of ranks i+1..=j+1
        let avg = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Spearman rank correlation: Pearson correlation of average ranks. Requires
/// at least 3 paired finite values. `Ok(None)` means undefined (zero rank
/// variance on a side), reported as such rather than coerced to a number.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Option<f64>, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(StatsError::TooFew {
            need: 3,
            got: x.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(pearson(&average_ranks(x), &average_ranks(y)))
}

/// Statistic resampled by [`bootstrap_ci`].
pub enum BootstrapStat<'a> {
    /// Mean of scalar values.
    Mean(&'a [f64]),
    /// Spearman correlation of (x, y) pairs, resampled pairwise.
    SpearmanPaired(&'a [(f64, f64)]),
}

/// Percentile bootstrap confidence interval, deterministic per seed.
/// Resamples with replacement `b` times and returns the empirical
/// `[(1-level)/2, 1-(1-level)/2]` quantiles (linear interpolation between
/// order statistics). Undefined Spearman resamples are skipped.
pub fn bootstrap_ci(
    stat: BootstrapStat,
    b: u64,
    level: f64,
    seed: u64,
) -> Result<(f64, f64), StatsError> {
    if !(0.0..1.0).contains(&level) || level <= 0.0 {
        return Err(StatsError::InvalidParameter(format!("level {level}")));
    }
    if b < 100 {
        return Err(StatsError::InvalidParameter(format!(
            "bootstrap iterations {b} < 100"
        )));
    }
    let n = match &stat {
        BootstrapStat::Mean(v) => v.len(),
        BootstrapStat::SpearmanPaired(v) => v.len(),
    };
    if n < 2 {
        return Err(StatsError::TooFew { need: 2, got: n });
    }
    let mut samples = Vec::with_capacity(b as usize);
    for it in 0..b {
        let mut rng = substream(seed, it);
        match &stat {
            BootstrapStat::Mean(values) => {
                let mut sum = 0.0;
                for _ in 0..n {
                    sum += values[rng.next_below(n as u64) as usize];
                }
                samples.push(sum / n as f64);
            }
            BootstrapStat::SpearmanPaired(pairs) => {
                let mut xs = Vec::with_capacity(n);
                let mut ys = Vec::with_capacity(n);
                for _ in 0..n {
                    let (x, y) = pairs[rng.next_below(n as u64) as usize];
                    xs.push(x);
                    ys.push(y);
                }
                if let Ok(Some(rho)) = spearman(&xs, &ys) {
                    samples.push(rho);
                }
            }
        }
    }
    if samples.is_empty() {
        return Err(StatsError::InvalidParameter(
            "all bootstrap resamples were undefined".into(),
        ));
    }
    samples.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    Ok((quantile(&samples, alpha), quantile(&samples, 1.0 - alpha)))
}

/// Linear-interpolation quantile over a sorted slice (the "type 7" rule).
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

/// Mean absolute error between predicted and true years.
pub fn mae(pred: &[i64], truth: &[i64]) -> Result<f64, StatsError> {
    if pred.len() != truth.len() {
        return Err(StatsError::LengthMismatch(pred.len(), truth.len()));
    }
    if pred.is_empty() {
        return Err(StatsError::TooFew { need: 1, got: 0 });
    }
    let total: f64 = pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t).abs() as f64)
        .sum();
    Ok(total / pred.len() as f64)
}
