//! Exhaustive computation of the restricted linear-independence constants
//! β_k and the restricted isometry constants δ_k.
//!
//! β_k is the smallest value of ‖Ax‖/‖x‖ over non-zero k-sparse x,
//! equivalently the minimum smallest singular value over all k-column
//! submatrices; δ_k is the smallest δ with every k-column submatrix's
//! singular values inside [√(1−δ), √(1+δ)]. Both are combinatorial: the
//! scan walks every k-subset of columns, so a cap guards against
//! accidentally requesting an astronomically large enumeration.
//!
//! Singular values come from eigenvalues of the k×k Gram submatrix for
//! k ≤ 12 and from a dense SVD of the m×k submatrix beyond that; the two
//! routes agree to 1e-10 and are cross-validated in the tests.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SensingMatrix;

/// Default ceiling on the number of subsets a single scan may visit.
pub const DEFAULT_ENUMERATION_CAP: u64 = 2_000_000;

/// Gram-eigenvalue route below this subset size, dense SVD above.
const GRAM_ROUTE_MAX_K: usize = 12;

/// Subset budget for one enumeration call.
#[derive(Debug, Clone, Copy)]
pub struct EnumerationBudget {
    pub cap: u64,
    /// When set, the cap is ignored (the CLI exposes this as `--force`).
    pub force: bool,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        EnumerationBudget { cap: DEFAULT_ENUMERATION_CAP, force: false }
    }
}

impl EnumerationBudget {
    pub fn unlimited() -> Self {
        EnumerationBudget { cap: u64::MAX, force: true }
    }

    fn check(&self, n: usize, k: usize) -> Result<u64> {
        let count = binomial(n, k);
        if !self.force && count > self.cap as u128 {
            return Err(Error::EnumerationCap { n, k, subsets: count, cap: self.cap });
        }
        u64::try_from(count).map_err(|_| Error::EnumerationCap {
            n,
            k,
            subsets: count,
            cap: self.cap,
        })
    }
}

/// C(n, k) without overflow for every feasible argument here.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Extreme singular-value statistics of one enumeration pass.
#[derive(Debug, Clone, Copy)]
struct SubsetScan {
    min_sigma_min: f64,
    /// max over subsets of max(1 − σ_min², σ_max² − 1)
    max_deviation: f64,
    subsets: u64,
}

/// Lexicographic k-subset odometer over 0..n with a fixed first element.
fn scan_with_first(gram: &DMatrix<f64>, a: &SensingMatrix, first: usize, k: usize) -> SubsetScan {
    let n = gram.nrows();
    let mut idx: Vec<usize> = (0..k).map(|i| first + i).collect();
    let mut out = SubsetScan { min_sigma_min: f64::INFINITY, max_deviation: f64::NEG_INFINITY, subsets: 0 };
    loop {
        let (lo, hi) = subset_sigma_extremes(gram, a, &idx);
        out.min_sigma_min = out.min_sigma_min.min(lo);
        out.max_deviation = out.max_deviation.max((1.0 - lo * lo).max(hi * hi - 1.0));
        out.subsets += 1;

        // advance positions 1..k (position 0 is pinned to `first`)
        let mut pos = k - 1;
        loop {
            if pos == 0 {
                return out;
            }
            idx[pos] += 1;
            if idx[pos] <= n - (k - pos) {
                for p in pos + 1..k {
                    idx[p] = idx[p - 1] + 1;
                }
                break;
            }
            pos -= 1;
        }
    }
}

/// (σ_min, σ_max) of the column submatrix indexed by `idx`.
fn subset_sigma_extremes(gram: &DMatrix<f64>, a: &SensingMatrix, idx: &[usize]) -> (f64, f64) {
    let k = idx.len();
    if k <= GRAM_ROUTE_MAX_K {
        let mut sub = DMatrix::zeros(k, k);
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                sub[(r, c)] = gram[(i, j)];
            }
        }
        let eig = sub.symmetric_eigen();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &lambda in eig.eigenvalues.iter() {
            lo = lo.min(lambda);
            hi = hi.max(lambda);
        }
        (lo.max(0.0).sqrt(), hi.max(0.0).sqrt())
    } else {
        let sub = a.column_submatrix(idx);
        let rows = sub.nrows();
        let svd = sub.svd(false, false);
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for &s in svd.singular_values.iter() {
            lo = lo.min(s);
            hi = hi.max(s);
        }
        // A wide submatrix (k > m) is rank-deficient even if the SVD only
        // reports min(m, k) values.
        if k > rows {
            lo = 0.0;
        }
        (lo, hi)
    }
}

fn scan_subsets(a: &SensingMatrix, k: usize, budget: &EnumerationBudget) -> Result<SubsetScan> {
    let n = a.n();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("subset size must satisfy 1 <= k <= n, got k = {k}, n = {n}")));
    }
    budget.check(n, k)?;
    let gram = a.gram();
    let partial: Vec<SubsetScan> = (0..=n - k)
        .into_par_iter()
        .map(|first| scan_with_first(&gram, a, first, k))
        .collect();
    let mut out = SubsetScan { min_sigma_min: f64::INFINITY, max_deviation: f64::NEG_INFINITY, subsets: 0 };
    for p in partial {
        out.min_sigma_min = out.min_sigma_min.min(p.min_sigma_min);
        out.max_deviation = out.max_deviation.max(p.max_deviation);
        out.subsets += p.subsets;
    }
    Ok(out)
}

/// β_k: exact minimum over all k-column subsets of the smallest singular
/// value. Returns 0 immediately for k > m (every such subset is
/// rank-deficient) without enumerating.
pub fn rlip_beta(a: &SensingMatrix, k: usize, budget: &EnumerationBudget) -> Result<f64> {
    if k == 0 || k > a.n() {
        return Err(Error::invalid(format!("k must satisfy 1 <= k <= n, got k = {k}, n = {}", a.n())));
    }
    if k > a.m() {
        return Ok(0.0);
    }
    Ok(scan_subsets(a, k, budget)?.min_sigma_min)
}

/// δ_k: exact maximum over all k-column subsets of
/// max(1 − σ_min², σ_max² − 1).
pub fn rip_delta(a: &SensingMatrix, k: usize, budget: &EnumerationBudget) -> Result<f64> {
    Ok(scan_subsets(a, k, budget)?.max_deviation)
}

/// Outcome of the classical recovery condition δ_{3K} + 3·δ_{4K} < 2.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CrtOutcome {
    pub holds: bool,
    pub lhs: f64,
    pub delta_3k: f64,
    pub delta_4k: f64,
}

pub fn crt_condition(a: &SensingMatrix, k: usize, budget: &EnumerationBudget) -> Result<CrtOutcome> {
    if k == 0 {
        return Err(Error::invalid("K must be positive"));
    }
    if 4 * k > a.n() {
        return Err(Error::invalid(format!(
            "condition needs 4K <= n, got K = {k}, n = {}",
            a.n()
        )));
    }
    let delta_3k = rip_delta(a, 3 * k, budget)?;
    let delta_4k = rip_delta(a, 4 * k, budget)?;
    let lhs = delta_3k + 3.0 * delta_4k;
    Ok(CrtOutcome { holds: lhs < 2.0, lhs, delta_3k, delta_4k })
}

/// Table of computed constants for k = 1..k_max.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RlipTable {
    pub betas: BTreeMap<usize, f64>,
    pub deltas: BTreeMap<usize, f64>,
    pub subsets_scanned: BTreeMap<usize, u64>,
    /// k values skipped because their enumeration exceeded the cap.
    pub truncated: Vec<usize>,
}

/// Computes β_k (and δ_k when requested) for every k ≤ k_max that fits the
/// budget; over-cap values of k are recorded in `truncated` instead of
/// failing the whole table.
pub fn rlip_table(
    a: &SensingMatrix,
    k_max: usize,
    with_delta: bool,
    budget: &EnumerationBudget,
) -> Result<RlipTable> {
    if k_max == 0 || k_max > a.n() {
        return Err(Error::invalid(format!("k_max must satisfy 1 <= k_max <= n, got {k_max}")));
    }
    let mut table = RlipTable::default();
    for k in 1..=k_max {
        if k > a.m() && !with_delta {
            table.betas.insert(k, 0.0);
            table.subsets_scanned.insert(k, 0);
            continue;
        }
        match scan_subsets(a, k, budget) {
            Ok(scan) => {
                table.betas.insert(k, if k > a.m() { 0.0 } else { scan.min_sigma_min });
                if with_delta {
                    table.deltas.insert(k, scan.max_deviation);
                }
                table.subsets_scanned.insert(k, scan.subsets);
            }
            Err(Error::EnumerationCap { .. }) => table.truncated.push(k),
            Err(e) => return Err(e),
        }
    }
    Ok(table)
}

/// JSON sidecar caching β values per (matrix fingerprint, k), amortizing the
/// enumeration across repeated certificate calls on the same matrix.
#[derive(Debug, Default, Serialize, Deserialize)]
pub struct BetaCache {
    entries: BTreeMap<String, f64>,
}

impl BetaCache {
    /// Loads a cache file; a missing file yields an empty cache.
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Ok(BetaCache::default());
        }
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text)?;
        Ok(())
    }

    fn key(fingerprint: u64, k: usize) -> String {
        format!("{fingerprint:016x}:{k}")
    }

    pub fn get(&self, fingerprint: u64, k: usize) -> Option<f64> {
        self.entries.get(&Self::key(fingerprint, k)).copied()
    }

    pub fn put(&mut self, fingerprint: u64, k: usize, beta: f64) {
        self.entries.insert(Self::key(fingerprint, k), beta);
    }
}

/// β_k through the sidecar cache.
pub fn rlip_beta_cached(
    a: &SensingMatrix,
    k: usize,
    budget: &EnumerationBudget,
    cache: &mut BetaCache,
) -> Result<f64> {
    let fp = a.fingerprint();
    if let Some(beta) = cache.get(fp, k) {
        return Ok(beta);
    }
    let beta = rlip_beta(a, k, budget)?;
    cache.put(fp, k, beta);
    Ok(beta)
}
