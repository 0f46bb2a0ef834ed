//! Machine-checkable optimality and recovery certificates.
//!
//! A point x is stationary for the regularized objective exactly when its
//! shadow point z = (I − AᵀA)x + Aᵀb lies in ∂G(x), where 2G is the convex
//! envelope of penalty + ‖·‖². The certificates below recompute stationarity
//! internally, evaluate every theorem hypothesis as a concrete inequality on
//! computed numbers, and only claim `UniqueGlobalMin`/`OracleGuaranteed`
//! when every check passes. Failed reports carry both sides of each
//! inequality so a reader can see exactly which margin collapsed.

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::Serialize;

use crate::constants::{rlip_beta, EnumerationBudget};
use crate::error::{Error, Result};
use crate::model::{SensingMatrix, SignalVector};
use crate::penalty::{sorted_magnitudes, subgradient_distance, PenaltyKind};
use crate::solver::SUPPORT_THRESHOLD;

/// Stationarity tolerance used when certificates re-verify their input.
pub const STATIONARITY_TOL: f64 = 1e-6;

/// Comparison tolerance at the feasibility boundary ‖a_i − a_j‖² = 2 and at
/// the unit column-norm boundary.
const BOUNDARY_TOL: f64 = 1e-12;

/// Node budget for the exact clique search before giving up with `Unknown`.
const CLIQUE_NODE_BUDGET: u64 = 20_000_000;

/// Shadow point z = (I − AᵀA)x + Aᵀb of an iterate.
pub fn shadow_point(a: &SensingMatrix, b: &SignalVector, x: &DVector<f64>) -> DVector<f64> {
    crate::solver::shadow_point_raw(a, b.as_vector(), x)
}

/// Tests z ∈ ∂G(x) up to `tol·(1 + ‖z‖)`; returns the verdict and the
/// subgradient-distance residual. Only the envelope kinds have the shadow
/// characterization, and `QuadEnvPk` additionally needs x ∈ P_K.
pub fn is_stationary(
    a: &SensingMatrix,
    b: &SignalVector,
    x: &DVector<f64>,
    kind: &PenaltyKind,
    tol: f64,
) -> Result<(bool, f64)> {
    let z = shadow_point(a, b, x);
    let residual = subgradient_distance(kind, x, &z)?;
    Ok((residual <= tol * (1.0 + z.norm()), residual))
}

// ---------------------------------------------------------------------------
// K-feasibility
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FeasibilityStatus {
    StrictlyFeasible,
    Feasible,
    Infeasible,
    Unknown,
}

/// Verdict plus a human-readable witness of which condition fired (or which
/// column subset violates feasibility).
#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityVerdict {
    pub status: FeasibilityStatus,
    pub witness: String,
}

impl FeasibilityVerdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self.status, FeasibilityStatus::Feasible | FeasibilityStatus::StrictlyFeasible)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeasibilityMode {
    /// Fast sufficient conditions only; may return `Unknown`.
    SufficientOnly,
    /// Exhaustive verdict via a clique search on the far-pair graph
    /// (restricted to n ≤ 32).
    Exact,
}

/// Decides K-feasibility: unit-bounded columns, and every subset of n−K
/// columns contains a pair with ‖a_i − a_j‖² ≤ 2 (strict feasibility wants
/// the strict inequality).
pub fn check_k_feasibility(
    a: &SensingMatrix,
    k: usize,
    mode: FeasibilityMode,
) -> Result<FeasibilityVerdict> {
    let n = a.n();
    if k >= n {
        return Err(Error::invalid(format!("K-feasibility needs K < n, got K = {k}, n = {n}")));
    }
    if a.max_col_norm() > 1.0 + BOUNDARY_TOL {
        return Ok(FeasibilityVerdict {
            status: FeasibilityStatus::Infeasible,
            witness: format!("a column has norm {} > 1", a.max_col_norm()),
        });
    }
    let subset_size = n - k;
    if subset_size < 2 {
        // No pair can be picked from a subset of fewer than two columns.
        return Ok(FeasibilityVerdict {
            status: FeasibilityStatus::Infeasible,
            witness: format!("subsets of size n - K = {subset_size} contain no column pair"),
        });
    }
    match mode {
        FeasibilityMode::SufficientOnly => Ok(sufficient_feasibility(a, k)),
        FeasibilityMode::Exact => {
            if n > 32 {
                return Ok(FeasibilityVerdict {
                    status: FeasibilityStatus::Unknown,
                    witness: format!("exact search restricted to n <= 32, got n = {n}"),
                });
            }
            Ok(exact_feasibility(a, k))
        }
    }
}

fn sufficient_feasibility(a: &SensingMatrix, k: usize) -> FeasibilityVerdict {
    let (m, n) = (a.m(), a.n());
    let gram = a.gram();

    let dimension_ok = n >= m + k + 2;
    if dimension_ok {
        let mut orthogonal_pair = None;
        'outer: for i in 0..n {
            for j in i + 1..n {
                if gram[(i, j)].abs() <= BOUNDARY_TOL {
                    orthogonal_pair = Some((i, j));
                    break 'outer;
                }
            }
        }
        if orthogonal_pair.is_none() {
            return FeasibilityVerdict {
                status: FeasibilityStatus::StrictlyFeasible,
                witness: format!("n = {n} >= m + K + 2 = {} and no orthogonal column pair", m + k + 2),
            };
        }
        if a.max_col_norm() < 1.0 - BOUNDARY_TOL {
            return FeasibilityVerdict {
                status: FeasibilityStatus::StrictlyFeasible,
                witness: format!(
                    "n >= m + K + 2 and all column norms below 1 (max {})",
                    a.max_col_norm()
                ),
            };
        }
    }

    // Positive inner-product count: nK positives among {<a_i,a_j>}_{i>j}
    // force strict feasibility regardless of the dimension count.
    let positives = {
        let mut c = 0usize;
        for i in 0..n {
            for j in i + 1..n {
                if gram[(i, j)] > BOUNDARY_TOL {
                    c += 1;
                }
            }
        }
        c
    };
    if positives >= n * k {
        return FeasibilityVerdict {
            status: FeasibilityStatus::StrictlyFeasible,
            witness: format!("{positives} positive column inner products >= nK = {}", n * k),
        };
    }

    if dimension_ok {
        return FeasibilityVerdict {
            status: FeasibilityStatus::Feasible,
            witness: format!("n = {n} >= m + K + 2 = {}", m + k + 2),
        };
    }
    FeasibilityVerdict {
        status: FeasibilityStatus::Unknown,
        witness: format!(
            "no sufficient condition fired (n = {n} < m + K + 2 = {}, {positives} positive inner products < nK = {})",
            m + k + 2,
            n * k
        ),
    }
}

fn exact_feasibility(a: &SensingMatrix, k: usize) -> FeasibilityVerdict {
    let n = a.n();
    let target = n - k;
    let dist_sq = |i: usize, j: usize| -> f64 {
        (a.entries().column(i) - a.entries().column(j)).norm_squared()
    };

    // Edges join "far" column pairs; an all-far subset of size n − K is a
    // clique in this graph and refutes feasibility.
    let mut strictly_far = vec![0u64; n];
    let mut weakly_far = vec![0u64; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = dist_sq(i, j);
            if d > 2.0 + BOUNDARY_TOL {
                strictly_far[i] |= 1 << j;
                strictly_far[j] |= 1 << i;
            }
            if d >= 2.0 - BOUNDARY_TOL {
                weakly_far[i] |= 1 << j;
                weakly_far[j] |= 1 << i;
            }
        }
    }

    match find_clique(&strictly_far, n, target) {
        CliqueSearch::Found(subset) => {
            return FeasibilityVerdict {
                status: FeasibilityStatus::Infeasible,
                witness: format!("columns {subset:?} are pairwise farther than sqrt(2)"),
            };
        }
        CliqueSearch::Exhausted => {}
        CliqueSearch::BudgetExceeded => {
            return FeasibilityVerdict {
                status: FeasibilityStatus::Unknown,
                witness: "clique search budget exceeded".to_string(),
            };
        }
    }
    match find_clique(&weakly_far, n, target) {
        CliqueSearch::Found(subset) => FeasibilityVerdict {
            status: FeasibilityStatus::Feasible,
            witness: format!("feasible, but columns {subset:?} all reach distance sqrt(2) exactly"),
        },
        CliqueSearch::Exhausted => FeasibilityVerdict {
            status: FeasibilityStatus::StrictlyFeasible,
            witness: format!("every {target}-column subset contains a strictly close pair"),
        },
        CliqueSearch::BudgetExceeded => FeasibilityVerdict {
            status: FeasibilityStatus::Unknown,
            witness: "clique search budget exceeded".to_string(),
        },
    }
}

enum CliqueSearch {
    Found(Vec<usize>),
    Exhausted,
    BudgetExceeded,
}

/// Branch-and-bound clique search with candidate-count pruning.
/// Returns `Some(true)` with the witness left in `clique` when a clique of
/// the target size exists, `Some(false)` when the space is exhausted, and
/// `None` when the node budget runs out.
fn clique_recurse(
    adj: &[u64],
    clique: &mut Vec<usize>,
    candidates: u64,
    target: usize,
    nodes: &mut u64,
) -> Option<bool> {
    *nodes += 1;
    if *nodes > CLIQUE_NODE_BUDGET {
        return None;
    }
    if clique.len() == target {
        return Some(true);
    }
    let mut cand = candidates;
    while cand != 0 {
        if clique.len() + (cand.count_ones() as usize) < target {
            return Some(false);
        }
        let v = cand.trailing_zeros() as usize;
        cand &= cand - 1;
        clique.push(v);
        // Only candidates above v that neighbor v can extend this branch.
        match clique_recurse(adj, clique, cand & adj[v], target, nodes) {
            Some(true) => return Some(true),
            Some(false) => {}
            None => return None,
        }
        clique.pop();
    }
    Some(false)
}

fn find_clique(adj: &[u64], n: usize, target: usize) -> CliqueSearch {
    if target == 0 {
        return CliqueSearch::Found(Vec::new());
    }
    let all: u64 = if n >= 64 { !0 } else { (1u64 << n) - 1 };
    let mut clique = Vec::new();
    let mut nodes = 0u64;
    match clique_recurse(adj, &mut clique, all, target, &mut nodes) {
        Some(true) => CliqueSearch::Found(clique),
        Some(false) => CliqueSearch::Exhausted,
        None => CliqueSearch::BudgetExceeded,
    }
}

// ---------------------------------------------------------------------------
// Certificates
// ---------------------------------------------------------------------------

/// One theorem hypothesis evaluated on computed numbers. The pass direction
/// is always "lhs strictly below rhs" after normalization, so
/// `margin() = rhs − lhs` is the slack.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub description: String,
    pub lhs: f64,
    pub rhs: f64,
    pub passed: bool,
}

impl HypothesisCheck {
    fn strict(name: &str, description: String, lhs: f64, rhs: f64) -> Self {
        HypothesisCheck { name: name.to_string(), description, lhs, rhs, passed: lhs < rhs }
    }

    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CertificateVerdict {
    /// The point is the unique global minimizer of both the original and the
    /// regularized objective.
    UniqueGlobalMin,
    /// The oracle solution is guaranteed to be that unique global minimizer.
    OracleGuaranteed,
    /// At least one hypothesis failed; nothing is claimed.
    Inconclusive,
}

/// Computed quantities backing a certificate, serialized with the report.
#[derive(Debug, Clone, Default, Serialize)]
pub struct CertificateQuantities {
    pub betas: BTreeMap<usize, f64>,
    pub shadow_magnitudes: Option<Vec<f64>>,
    pub card: Option<usize>,
    pub data_residual_sq: Option<f64>,
    pub stationarity_residual: Option<f64>,
    pub feasibility: Option<FeasibilityVerdict>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub verdict: CertificateVerdict,
    pub hypotheses: Vec<HypothesisCheck>,
    pub quantities: CertificateQuantities,
    /// When set, any other stationary point has cardinality above this value.
    pub separation_floor: Option<usize>,
    /// Strict feasibility upgrades the P_K certificate to "no other local
    /// minimizers".
    pub no_other_local_minimizers: bool,
    pub notes: Vec<String>,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.verdict != CertificateVerdict::Inconclusive
    }
}

fn support_card(x: &DVector<f64>) -> usize {
    x.iter().filter(|v| v.abs() > SUPPORT_THRESHOLD).count()
}

/// Certifies a stationary point of the μ·card envelope objective as the
/// unique global minimizer, with gap parameter `n_gap` (the theorem's N).
///
/// Hypotheses: stationarity; ‖A‖∞,col ≤ 1; every shadow magnitude outside
/// [β_N²√μ, √μ/β_N²]; and 2μ·card(x') + ‖Ax'−b‖² < μ(N+1). On success, any
/// other stationary point has cardinality above N − card(x').
pub fn certify_card_minimizer(
    a: &SensingMatrix,
    b: &SignalVector,
    mu: f64,
    x_prime: &DVector<f64>,
    n_gap: usize,
    budget: &EnumerationBudget,
) -> Result<CertificateReport> {
    if !(mu > 0.0) {
        return Err(Error::invalid("mu must be positive"));
    }
    if n_gap == 0 || n_gap > a.n() {
        return Err(Error::invalid(format!("gap parameter N must satisfy 1 <= N <= n, got {n_gap}")));
    }
    if x_prime.len() != a.n() {
        return Err(Error::dims("x' length does not match the matrix"));
    }
    let kind = PenaltyKind::QuadEnvCard { mu };
    let mut notes = Vec::new();
    let mut hypotheses = Vec::new();

    let z = shadow_point(a, b, x_prime);
    let znorm = z.norm();
    let residual = subgradient_distance(&kind, x_prime, &z)?;
    hypotheses.push(HypothesisCheck::strict(
        "stationarity",
        "subgradient distance of the shadow point within tolerance".into(),
        residual,
        STATIONARITY_TOL * (1.0 + znorm),
    ));

    let col = a.max_col_norm();
    hypotheses.push(HypothesisCheck::strict(
        "column_norms",
        "all column norms at most 1".into(),
        col,
        1.0 + BOUNDARY_TOL,
    ));

    let beta_n = rlip_beta(a, n_gap, budget)?;
    let mut betas = BTreeMap::new();
    betas.insert(n_gap, beta_n);

    let root = mu.sqrt();
    let gap_check = if beta_n == 0.0 {
        notes.push(format!("beta_{n_gap} = 0: some {n_gap}-column subset is rank-deficient"));
        HypothesisCheck {
            name: "shadow_gap".into(),
            description: "every |z_i| outside [beta_N^2 sqrt(mu), sqrt(mu)/beta_N^2]".into(),
            lhs: 0.0,
            rhs: 0.0,
            passed: false,
        }
    } else if beta_n > 1.0 {
        notes.push(format!("beta_{n_gap} = {beta_n} > 1: shadow gap condition holds vacuously"));
        HypothesisCheck {
            name: "shadow_gap".into(),
            description: "forbidden interval is empty for beta_N > 1".into(),
            lhs: 0.0,
            rhs: f64::INFINITY,
            passed: true,
        }
    } else {
        if (beta_n - 1.0).abs() <= BOUNDARY_TOL {
            notes.push(
                "beta_N = 1: the forbidden interval degenerates to the point sqrt(mu); \
                 treated with the same strict-exclusion check"
                    .into(),
            );
        }
        let lo = beta_n * beta_n * root;
        let hi = root / (beta_n * beta_n);
        // Signed distance of each |z_i| to the forbidden band: positive
        // outside, negative inside; the worst coordinate decides.
        let mut worst = f64::INFINITY;
        for zi in z.iter() {
            let m = zi.abs();
            let signed = if m < lo {
                lo - m
            } else if m > hi {
                m - hi
            } else {
                -(m - lo).min(hi - m)
            };
            worst = worst.min(signed);
        }
        HypothesisCheck {
            name: "shadow_gap".into(),
            description: format!("every |z_i| outside [{lo}, {hi}]; lhs is the worst signed clearance"),
            lhs: -worst,
            rhs: 0.0,
            passed: worst > 0.0,
        }
    };
    hypotheses.push(gap_check);

    let card = support_card(x_prime);
    let resid_sq = (a.entries() * x_prime - b.as_vector()).norm_squared();
    hypotheses.push(HypothesisCheck::strict(
        "objective_bound",
        "2 mu card(x') + ||Ax' - b||^2 < mu (N + 1)".into(),
        2.0 * mu * card as f64 + resid_sq,
        mu * (n_gap as f64 + 1.0),
    ));

    let all_pass = hypotheses.iter().all(|h| h.passed);
    Ok(CertificateReport {
        verdict: if all_pass { CertificateVerdict::UniqueGlobalMin } else { CertificateVerdict::Inconclusive },
        hypotheses,
        quantities: CertificateQuantities {
            betas,
            shadow_magnitudes: Some(z.iter().map(|v| v.abs()).collect()),
            card: Some(card),
            data_residual_sq: Some(resid_sq),
            stationarity_residual: Some(residual),
            feasibility: None,
        },
        separation_floor: if all_pass { Some(n_gap.saturating_sub(card)) } else { None },
        no_other_local_minimizers: false,
        notes,
    })
}

/// Certifies a stationary point of the P_K-envelope objective as the unique
/// global minimizer: K-feasibility of A plus the sorted-shadow gap
/// |z̃_{K+1}| < (2β_{2K}² − 1)|z̃_K|. Strict feasibility additionally rules
/// out any other local minimizer.
pub fn certify_pk_minimizer(
    a: &SensingMatrix,
    b: &SignalVector,
    k: usize,
    x_prime: &DVector<f64>,
    budget: &EnumerationBudget,
) -> Result<CertificateReport> {
    if k == 0 || k >= a.n() {
        return Err(Error::invalid(format!("K must satisfy 1 <= K < n, got K = {k}")));
    }
    if x_prime.len() != a.n() {
        return Err(Error::dims("x' length does not match the matrix"));
    }
    let kind = PenaltyKind::QuadEnvPk { k };
    let mut notes = Vec::new();
    let mut hypotheses = Vec::new();

    let exact_card = x_prime.iter().filter(|v| **v != 0.0).count();
    hypotheses.push(HypothesisCheck {
        name: "membership".into(),
        description: format!("card(x') <= K = {k}"),
        lhs: exact_card as f64,
        rhs: k as f64 + 0.5,
        passed: exact_card <= k,
    });
    if exact_card > k {
        return Ok(CertificateReport {
            verdict: CertificateVerdict::Inconclusive,
            hypotheses,
            quantities: CertificateQuantities { card: Some(exact_card), ..Default::default() },
            separation_floor: None,
            no_other_local_minimizers: false,
            notes: vec!["x' lies outside P_K; the shadow characterization does not apply".into()],
        });
    }

    let z = shadow_point(a, b, x_prime);
    let residual = subgradient_distance(&kind, x_prime, &z)?;
    hypotheses.push(HypothesisCheck::strict(
        "stationarity",
        "subgradient distance of the shadow point within tolerance".into(),
        residual,
        STATIONARITY_TOL * (1.0 + z.norm()),
    ));

    let feasibility = {
        let first = check_k_feasibility(a, k, FeasibilityMode::SufficientOnly)?;
        if first.status == FeasibilityStatus::Unknown && a.n() <= 32 {
            check_k_feasibility(a, k, FeasibilityMode::Exact)?
        } else {
            first
        }
    };
    hypotheses.push(HypothesisCheck {
        name: "k_feasibility".into(),
        description: feasibility.witness.clone(),
        lhs: 0.0,
        rhs: if feasibility.is_feasible() { 1.0 } else { 0.0 },
        passed: feasibility.is_feasible(),
    });

    let k2 = (2 * k).min(a.n());
    let beta_2k = rlip_beta(a, k2, budget)?;
    let mut betas = BTreeMap::new();
    betas.insert(k2, beta_2k);
    if beta_2k * beta_2k <= 0.5 {
        notes.push(format!(
            "beta_{k2} = {beta_2k} <= 1/sqrt(2): the shadow-gap right-hand side is non-positive"
        ));
    }

    let sorted_z = sorted_magnitudes(&z);
    let z_k = sorted_z.mags[k - 1];
    let z_k1 = if k < z.len() { sorted_z.mags[k] } else { 0.0 };
    hypotheses.push(HypothesisCheck::strict(
        "shadow_gap",
        "|z~_{K+1}| < (2 beta_{2K}^2 - 1) |z~_K|".into(),
        z_k1,
        (2.0 * beta_2k * beta_2k - 1.0) * z_k,
    ));

    let all_pass = hypotheses.iter().all(|h| h.passed);
    let strict = feasibility.status == FeasibilityStatus::StrictlyFeasible;
    Ok(CertificateReport {
        verdict: if all_pass { CertificateVerdict::UniqueGlobalMin } else { CertificateVerdict::Inconclusive },
        hypotheses,
        quantities: CertificateQuantities {
            betas,
            shadow_magnitudes: Some(sorted_z.mags.clone()),
            card: Some(exact_card),
            data_residual_sq: Some((a.entries() * x_prime - b.as_vector()).norm_squared()),
            stationarity_residual: Some(residual),
            feasibility: Some(feasibility),
        },
        separation_floor: if all_pass { Some(k) } else { None },
        no_other_local_minimizers: all_pass && strict,
        notes,
    })
}

/// Oracle-recovery guarantee for the μ·card envelope: ‖ε‖ < β_N²√μ and
/// min_{j∈S} |x0_j| > (1/β_N² + 1)√μ imply the oracle solution is the unique
/// global minimizer with supp(x_S) = supp(x0) and ‖x_S − x0‖ ≤ ‖ε‖/β_K.
pub fn guarantee_oracle_card(
    beta_n: f64,
    beta_k: f64,
    x0: &DVector<f64>,
    eps_norm: f64,
    mu: f64,
    n_gap: usize,
) -> Result<CertificateReport> {
    if !(mu > 0.0) {
        return Err(Error::invalid("mu must be positive"));
    }
    let card = x0.iter().filter(|v| **v != 0.0).count();
    if n_gap < 2 * card {
        return Err(Error::invalid(format!(
            "gap parameter N = {n_gap} must be at least 2 card(x0) = {}",
            2 * card
        )));
    }
    let mut notes = Vec::new();
    let mut hypotheses = Vec::new();
    if beta_n == 0.0 {
        notes.push("beta_N = 0: the guarantee cannot apply".into());
    }
    let root = mu.sqrt();
    hypotheses.push(HypothesisCheck::strict(
        "noise_bound",
        "||eps|| < beta_N^2 sqrt(mu)".into(),
        eps_norm,
        beta_n * beta_n * root,
    ));
    let min_mag = x0
        .iter()
        .filter(|v| **v != 0.0)
        .map(|v| v.abs())
        .fold(f64::INFINITY, f64::min);
    let threshold = if beta_n > 0.0 { (1.0 / (beta_n * beta_n) + 1.0) * root } else { f64::INFINITY };
    hypotheses.push(HypothesisCheck::strict(
        "magnitude_bound",
        "min_{j in S} |x0_j| > (1/beta_N^2 + 1) sqrt(mu)".into(),
        threshold,
        min_mag,
    ));

    let all_pass = hypotheses.iter().all(|h| h.passed);
    if all_pass && beta_k > 0.0 {
        notes.push(format!(
            "implied: supp(x_S) = supp(x0) and ||x_S - x0|| <= ||eps||/beta_K = {}",
            eps_norm / beta_k
        ));
    }
    let mut betas = BTreeMap::new();
    betas.insert(n_gap, beta_n);
    betas.insert(card, beta_k);
    Ok(CertificateReport {
        verdict: if all_pass { CertificateVerdict::OracleGuaranteed } else { CertificateVerdict::Inconclusive },
        hypotheses,
        quantities: CertificateQuantities { betas, card: Some(card), ..Default::default() },
        separation_floor: if all_pass { Some(n_gap - card) } else { None },
        no_other_local_minimizers: false,
        notes,
    })
}

/// Oracle-recovery guarantee for the P_K envelope: β_{2K} > 1/√2 and
/// min_{j∈S} |x0_j| > (1/(2β_{2K}² − 1) + 1/β_K)‖ε‖.
pub fn guarantee_oracle_pk(
    beta_k: f64,
    beta_2k: f64,
    x0: &DVector<f64>,
    eps_norm: f64,
) -> Result<CertificateReport> {
    if !(eps_norm >= 0.0) {
        return Err(Error::invalid("noise norm must be non-negative"));
    }
    let card = x0.iter().filter(|v| **v != 0.0).count();
    let mut hypotheses = Vec::new();
    hypotheses.push(HypothesisCheck::strict(
        "rlip_strength",
        "beta_{2K} > 1/sqrt(2)".into(),
        std::f64::consts::FRAC_1_SQRT_2,
        beta_2k,
    ));
    let threshold = if beta_2k * beta_2k > 0.5 && beta_k > 0.0 {
        (1.0 / (2.0 * beta_2k * beta_2k - 1.0) + 1.0 / beta_k) * eps_norm
    } else {
        f64::INFINITY
    };
    let min_mag = x0
        .iter()
        .filter(|v| **v != 0.0)
        .map(|v| v.abs())
        .fold(f64::INFINITY, f64::min);
    hypotheses.push(HypothesisCheck::strict(
        "magnitude_bound",
        "min_{j in S} |x0_j| > (1/(2 beta_{2K}^2 - 1) + 1/beta_K) ||eps||".into(),
        threshold,
        min_mag,
    ));

    let all_pass = hypotheses.iter().all(|h| h.passed);
    let mut notes = Vec::new();
    if all_pass && beta_k > 0.0 {
        notes.push(format!(
            "implied: supp(x') = supp(x0) and ||x' - x0|| <= ||eps||/beta_K = {}",
            eps_norm / beta_k
        ));
    }
    let mut betas = BTreeMap::new();
    betas.insert(2 * card, beta_2k);
    betas.insert(card, beta_k);
    Ok(CertificateReport {
        verdict: if all_pass { CertificateVerdict::OracleGuaranteed } else { CertificateVerdict::Inconclusive },
        hypotheses,
        quantities: CertificateQuantities { betas, card: Some(card), ..Default::default() },
        separation_floor: if all_pass { Some(card) } else { None },
        no_other_local_minimizers: all_pass,
        notes,
    })
}
