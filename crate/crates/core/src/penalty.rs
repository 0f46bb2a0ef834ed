//! The five penalty functionals: evaluation, proximal operators, and
//! subdifferential geometry.
//!
//! Two of the penalties are quadratic envelopes: `QuadEnvCard` is the
//! envelope of μ·card (elsewhere called MCP or CEℓ0) and `QuadEnvPk` is the
//! envelope of the indicator of the K-sparse set P_K. "Envelope" here means
//! that penalty(x) + ‖x‖² is the lower semi-continuous convex envelope of
//! original(x) + ‖x‖²; both envelopes are therefore 2-weakly convex and their
//! prox subproblems are strongly convex whenever the step satisfies t < 1/2.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Tagged choice of penalty with its parameters.
///
/// `lambda` and `mu` must be positive except that `L1 { lambda: 0.0 }` is
/// accepted as the degenerate no-penalty limit (it arises from the ℓ1
/// λ-formula at zero noise); `k` may be any value up to the ambient
/// dimension at the point of use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltyKind {
    /// λ‖x‖₁ — the convex baseline.
    L1 { lambda: f64 },
    /// μ·card(x) — the combinatorial sparsity penalty.
    Card { mu: f64 },
    /// Indicator of P_K = {x : card(x) ≤ K}.
    IndicatorPk { k: usize },
    /// Quadratic envelope of μ·card.
    QuadEnvCard { mu: f64 },
    /// Quadratic envelope of the P_K indicator.
    QuadEnvPk { k: usize },
}

impl PenaltyKind {
    /// Short stable tag used in reports and CLI flags.
    pub fn name(&self) -> &'static str {
        match self {
            PenaltyKind::L1 { .. } => "l1",
            PenaltyKind::Card { .. } => "card",
            PenaltyKind::IndicatorPk { .. } => "pk",
            PenaltyKind::QuadEnvCard { .. } => "qenv-card",
            PenaltyKind::QuadEnvPk { .. } => "qenv-pk",
        }
    }

    /// Whether the prox subproblem needs t < 1/2 to stay strongly convex.
    pub fn is_quad_env(&self) -> bool {
        matches!(self, PenaltyKind::QuadEnvCard { .. } | PenaltyKind::QuadEnvPk { .. })
    }

    pub(crate) fn validate(&self, n: usize) -> Result<()> {
        match *self {
            PenaltyKind::L1 { lambda } => {
                if !(lambda >= 0.0) || !lambda.is_finite() {
                    return Err(Error::invalid(format!("l1 weight must be finite and >= 0, got {lambda}")));
                }
            }
            PenaltyKind::Card { mu } | PenaltyKind::QuadEnvCard { mu } => {
                if !(mu > 0.0) || !mu.is_finite() {
                    return Err(Error::invalid(format!("cardinality weight must be positive, got {mu}")));
                }
            }
            PenaltyKind::IndicatorPk { k } | PenaltyKind::QuadEnvPk { k } => {
                if k > n {
                    return Err(Error::invalid(format!("sparsity level K = {k} exceeds dimension n = {n}")));
                }
            }
        }
        Ok(())
    }
}

/// Magnitudes of a vector sorted non-increasingly, with the permutation that
/// produced them. Ties break by ascending original index (stable), which
/// pins down k* and the prox output uniquely.
#[derive(Debug, Clone)]
pub struct SortedMagnitudes {
    pub perm: Vec<usize>,
    pub mags: Vec<f64>,
}

pub fn sorted_magnitudes(x: &DVector<f64>) -> SortedMagnitudes {
    let mut perm: Vec<usize> = (0..x.len()).collect();
    perm.sort_by(|&i, &j| x[j].abs().total_cmp(&x[i].abs()));
    let mags = perm.iter().map(|&i| x[i].abs()).collect();
    SortedMagnitudes { perm, mags }
}

/// The envelope bookkeeping for Q₂(ι_PK): the cumulative statistics
/// s(k) = (Σ_{j>K−k} |x̃_j|) − k·|x̃_{K+1−k}| for k = 1..K, and k*, the
/// largest k with s(k) ≥ 0. The sequence s is non-increasing, so k* is
/// found by stopping at the first negative value; s(1) ≥ 0 always.
#[derive(Debug, Clone)]
pub struct EnvelopeState {
    pub k_star: usize,
    pub s_values: Vec<f64>,
}

/// Computes s(1..K) and k* from sorted magnitudes; requires 1 ≤ K ≤ n.
pub fn envelope_state(sorted: &SortedMagnitudes, k: usize) -> Result<EnvelopeState> {
    let n = sorted.mags.len();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("envelope state needs 1 <= K <= n, got K = {k}, n = {n}")));
    }
    // suffix[i] = Σ_{j >= i} mags[j]
    let mut suffix = vec![0.0f64; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + sorted.mags[i];
    }
    let mut s_values = Vec::with_capacity(k);
    let mut k_star = 1;
    for kk in 1..=k {
        // 0-based pivot index of x̃_{K+1−k}
        let pivot = k - kk;
        let s = suffix[pivot] - kk as f64 * sorted.mags[pivot];
        s_values.push(s);
        if s >= 0.0 {
            k_star = kk;
        } else {
            break;
        }
    }
    Ok(EnvelopeState { k_star, s_values })
}

/// Evaluates the penalty; returns +∞ for the indicator outside P_K.
pub fn penalty_eval(kind: &PenaltyKind, x: &DVector<f64>) -> Result<f64> {
    kind.validate(x.len())?;
    let value = match *kind {
        PenaltyKind::L1 { lambda } => lambda * x.iter().map(|v| v.abs()).sum::<f64>(),
        PenaltyKind::Card { mu } => mu * x.iter().filter(|v| **v != 0.0).count() as f64,
        PenaltyKind::IndicatorPk { k } => {
            if x.iter().filter(|v| **v != 0.0).count() <= k {
                0.0
            } else {
                f64::INFINITY
            }
        }
        PenaltyKind::QuadEnvCard { mu } => {
            let root = mu.sqrt();
            x.iter()
                .map(|v| {
                    let gap = (root - v.abs()).max(0.0);
                    mu - gap * gap
                })
                .sum()
        }
        PenaltyKind::QuadEnvPk { k } => quad_env_pk_eval(x, k)?,
    };
    Ok(value)
}

fn quad_env_pk_eval(x: &DVector<f64>, k: usize) -> Result<f64> {
    let n = x.len();
    if k == 0 {
        // P_0 = {0}; the envelope construction collapses back to the indicator.
        return Ok(if x.iter().all(|v| *v == 0.0) { 0.0 } else { f64::INFINITY });
    }
    if k >= n {
        return Ok(0.0);
    }
    let sorted = sorted_magnitudes(x);
    let state = envelope_state(&sorted, k)?;
    let start = k - state.k_star; // 0-based first index of the averaged tail
    let tail_sum: f64 = sorted.mags[start..].iter().sum();
    let tail_sq: f64 = sorted.mags[start..].iter().map(|v| v * v).sum();
    Ok(tail_sum * tail_sum / state.k_star as f64 - tail_sq)
}

/// Scalar soft threshold: prox of τ|·|.
pub fn soft_threshold(y: f64, tau: f64) -> f64 {
    y.signum() * (y.abs() - tau).max(0.0)
}

/// Scalar hard threshold: prox of t·μ·card at step t. The tie
/// |y| = √(2tμ) resolves to 0, biasing toward the sparser iterate.
pub fn hard_threshold(y: f64, mu: f64, t: f64) -> f64 {
    if y.abs() > (2.0 * t * mu).sqrt() {
        y
    } else {
        0.0
    }
}

/// Scalar firm threshold: prox of t·Q₂(μ·card) for t < 1/2. Zero below
/// 2t√μ (boundary to 0), identity above √μ, linear in between.
pub fn firm_threshold(y: f64, mu: f64, t: f64) -> f64 {
    let root = mu.sqrt();
    let lo = 2.0 * t * root;
    let mag = y.abs();
    if mag <= lo {
        0.0
    } else if mag < root {
        y.signum() * (mag - lo) / (1.0 - 2.0 * t)
    } else {
        y
    }
}

/// Proximal operator: argmin_x t·penalty(x) + ½‖x − y‖².
///
/// For the two envelope kinds the step must satisfy t < 1/2 so the
/// subproblem is strongly convex and the minimizer unique.
pub fn penalty_prox(kind: &PenaltyKind, y: &DVector<f64>, t: f64) -> Result<DVector<f64>> {
    kind.validate(y.len())?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::invalid(format!("prox step must be positive, got {t}")));
    }
    if kind.is_quad_env() && t >= 0.5 {
        return Err(Error::invalid(format!(
            "prox step t = {t} must satisfy t < 1/2 for quadratic-envelope penalties"
        )));
    }
    let out = match *kind {
        PenaltyKind::L1 { lambda } => y.map(|v| soft_threshold(v, t * lambda)),
        PenaltyKind::Card { mu } => y.map(|v| hard_threshold(v, mu, t)),
        PenaltyKind::IndicatorPk { k } => top_k_projection(y, k),
        PenaltyKind::QuadEnvCard { mu } => y.map(|v| firm_threshold(v, mu, t)),
        PenaltyKind::QuadEnvPk { k } => quad_env_pk_prox(y, k, t),
    };
    Ok(out)
}

/// Keeps the K largest magnitudes (ties stable by ascending index), zeroing
/// the rest: the Euclidean projection onto P_K.
pub fn top_k_projection(y: &DVector<f64>, k: usize) -> DVector<f64> {
    let mut out = DVector::zeros(y.len());
    if k == 0 {
        return out;
    }
    let sorted = sorted_magnitudes(y);
    for &i in sorted.perm.iter().take(k) {
        out[i] = y[i];
    }
    out
}

/// Prox of t·Q₂(ι_PK) through its convex reduction.
///
/// Writing G = ½Q₂(ι_PK) + ½‖·‖² (convex, with conjugate
/// G*(u) = ½ Σ_{j≤K} ũ_j²), the subproblem factors as
/// t·Q₂(x) + ½‖x−y‖² = (1−2t)[ s·G(x) + ½‖x − y/(1−2t)‖² ] + const with
/// s = 2t/(1−2t), and the Moreau identity turns prox_{sG} into a prox of
/// G*, which on sorted magnitudes is a one-junction isotonic problem solved
/// exactly by pooling adjacent violators around the K-boundary.
fn quad_env_pk_prox(y: &DVector<f64>, k: usize, t: f64) -> DVector<f64> {
    let n = y.len();
    if k == 0 {
        return DVector::zeros(n);
    }
    if k >= n {
        return y.clone();
    }
    let sorted = sorted_magnitudes(y);
    let x_mags = quad_env_pk_prox_mags(&sorted.mags, k, t);
    let mut out = DVector::zeros(n);
    for (slot, &i) in sorted.perm.iter().enumerate() {
        out[i] = y[i].signum() * x_mags[slot];
    }
    out
}

/// Prox in the sorted-magnitude domain; `mags` non-increasing, 1 ≤ k < n.
fn quad_env_pk_prox_mags(mags: &[f64], k: usize, t: f64) -> Vec<f64> {
    let n = mags.len();
    // No tie across the K-boundary: the prox is exactly the top-K projection.
    if 2.0 * t * mags[k - 1] >= mags[k] {
        let mut x = vec![0.0; n];
        x[..k].copy_from_slice(&mags[..k]);
        return x;
    }
    // Pool adjacent violators around the junction. In conjugate coordinates
    // v_j = y_j / (2t), the head slots (j < k) carry ridge weight 1+σ with
    // σ = (1−2t)/(2t) and the tail slots weight 1.
    let sigma = (1.0 - 2.0 * t) / (2.0 * t);
    let v: Vec<f64> = mags.iter().map(|m| m / (2.0 * t)).collect();
    let (mut p, mut q) = (k - 1, k);
    let mut c;
    loop {
        let head = (k - p) as f64;
        let tail = (q + 1 - k) as f64;
        let sum: f64 = v[p..=q].iter().sum();
        c = sum / ((1.0 + sigma) * head + tail);
        if p > 0 && v[p - 1] / (1.0 + sigma) < c {
            p -= 1;
            continue;
        }
        if q + 1 < n && v[q + 1] > c {
            q += 1;
            continue;
        }
        break;
    }
    let mut x = vec![0.0; n];
    x[..p].copy_from_slice(&mags[..p]);
    for j in p..=q {
        x[j] = ((mags[j] - 2.0 * t * c) / (1.0 - 2.0 * t)).max(0.0);
    }
    x
}

/// Euclidean distance from `z` to ∂G(x), where 2G is the convex envelope of
/// penalty + ‖·‖². Defined for the two envelope kinds only; a point x is
/// stationary for the regularized objective exactly when its shadow point
/// lies in ∂G(x), so this distance is the natural stationarity residual.
///
/// For `QuadEnvPk` the subdifferential is only characterized on P_K
/// (z must match x on the support and stay below |x̃_K| in magnitude off it),
/// so the operation rejects x with card(x) > K.
pub fn subgradient_distance(kind: &PenaltyKind, x: &DVector<f64>, z: &DVector<f64>) -> Result<f64> {
    kind.validate(x.len())?;
    if x.len() != z.len() {
        return Err(Error::dims(format!("x has length {}, z has length {}", x.len(), z.len())));
    }
    match *kind {
        PenaltyKind::QuadEnvCard { mu } => {
            let root = mu.sqrt();
            let mut dist_sq = 0.0;
            for i in 0..x.len() {
                let d = if x[i].abs() >= root {
                    z[i] - x[i]
                } else if x[i] != 0.0 {
                    z[i] - root * x[i].signum()
                } else {
                    (z[i].abs() - root).max(0.0)
                };
                dist_sq += d * d;
            }
            Ok(dist_sq.sqrt())
        }
        PenaltyKind::QuadEnvPk { k } => {
            let card = x.iter().filter(|v| **v != 0.0).count();
            if card > k {
                return Err(Error::invalid(format!(
                    "subgradient set of the P_K envelope is only characterized on P_K; \
                     card(x) = {card} > K = {k}"
                )));
            }
            if k == 0 {
                // G = (ι_{0} + ‖·‖²)/2 has full subdifferential at the origin.
                return Ok(0.0);
            }
            let sorted = sorted_magnitudes(x);
            let threshold = sorted.mags[k - 1]; // |x̃_K|, zero when card(x) < K
            let mut dist_sq = 0.0;
            for i in 0..x.len() {
                let d = if x[i] != 0.0 {
                    z[i] - x[i]
                } else {
                    (z[i].abs() - threshold).max(0.0)
                };
                dist_sq += d * d;
            }
            Ok(dist_sq.sqrt())
        }
        _ => Err(Error::invalid(format!(
            "subgradient distance is defined for the quadratic-envelope kinds, not {}",
            kind.name()
        ))),
    }
}
