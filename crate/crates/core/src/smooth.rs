//! Smooth Rényi quantities of order zero and infinity on finite alphabets.
//!
//! Two independent exact routes compute the smooth max divergence
//! `D∞^ε(P‖Q) = log inf_{φ ∈ B^ε(P)} max_{x: P(x)>0} φ(x)/Q(x)`:
//!
//! * [`smooth_max_divergence`] inverts the piecewise-linear function
//!   `t ↦ Σ_x min(P(x), t·Q(x))` at `ΣP − ε` after sorting the breakpoints `P/Q`.
//! * [`smooth_divergence_procedure`] lowers the highest-ratio class in lockstep,
//!   merging it with the next ratio level whenever they meet, until `ε` mass
//!   has been removed. Each merge is a discrete round.
//!
//! [`smooth_divergence_oracle`] is a grid-restricted brute-force optimum and
//! only ever upper-bounds the exact value.
//!
//! The conditional smooth max entropy of order zero only changes when whole
//! cells are removed, so [`smooth_conditional_h0`] reduces to choosing, per
//! target support size `k`, the cheapest cells to zero in each column.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob::{JointPmf, Pmf, SubPmf};

/// Slack allowed when comparing a removed mass against the smoothing budget.
pub const BUDGET_SLACK: f64 = 1e-12;

/// Largest cell count [`smooth_h0_oracle`] will enumerate.
pub const H0_ORACLE_MAX_CELLS: usize = 16;

pub(crate) fn check_epsilon(eps: f64) -> Result<()> {
    if (0.0..1.0).contains(&eps) {
        Ok(())
    } else {
        Err(Error::Epsilon(eps))
    }
}

fn check_support(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::Usage(format!("P has {} symbols but Q has {}", p.len(), q.len())));
    }
    match p.iter().zip(q).position(|(&pm, &qm)| pm > 0.0 && qm <= 0.0) {
        Some(symbol) => Err(Error::SupportViolation {
            symbol,
            p_mass: p[symbol],
        }),
        None => Ok(()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothDivergenceResult {
    pub value_bits: f64,
    pub smoothing: SubPmf,
    pub epsilon: f64,
}

impl SmoothDivergenceResult {
    /// The optimal max ratio `2^value_bits`.
    pub fn ratio(&self) -> f64 {
        self.value_bits.exp2()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothEntropyResult {
    pub value_bits: f64,
    /// Largest conditional support size after smoothing; `value_bits = log2(max_support)`.
    pub max_support: usize,
    pub smoothing: SubPmf,
    pub epsilon: f64,
}

/// `log2 |Supp(P)|`.
pub fn max_entropy_h0(p: &Pmf) -> f64 {
    (p.support_size() as f64).log2()
}

/// `log2 max_{x: P(x)>0} P(x)/Q(x)`.
pub fn max_divergence(p: &Pmf, q: &Pmf) -> Result<f64> {
    check_support(p.mass(), q.mass())?;
    Ok(max_ratio(p.mass(), q.mass()).log2())
}

fn max_ratio(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&pm, _)| pm > 0.0)
        .map(|(pm, qm)| pm / qm)
        .fold(0.0, f64::max)
}

/// One aggregated ratio level: `weight` symbols each with masses `(p, q)`.
///
/// Symbols sharing the same `(p, q)` can be merged without changing the smooth
/// divergence, which is what makes type-class aggregation on i.i.d. products exact.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatioLevel {
    pub p: f64,
    pub q: f64,
    pub weight: f64,
}

/// Smallest `t` with `Σ weight·(p − t·q)⁺ ≤ eps`, i.e. the optimal max ratio.
///
/// Every level must have `p > 0` and `q > 0`; `eps` must be smaller than the
/// total weighted `p` mass.
pub fn smooth_ratio_threshold(levels: &[RatioLevel], eps: f64) -> f64 {
    let mut order: Vec<&RatioLevel> = levels.iter().collect();
    order.sort_by(|a, b| (b.p / b.q).total_cmp(&(a.p / a.q)));
    if eps == 0.0 {
        return order.first().map_or(0.0, |l| l.p / l.q);
    }
    // On [r_{k+1}, r_k] the removed mass is linear: top_p − t·top_q.
    let (mut top_p, mut top_q) = (0.0, 0.0);
    for (k, level) in order.iter().enumerate() {
        top_p += level.weight * level.p;
        top_q += level.weight * level.q;
        let next_ratio = order.get(k + 1).map_or(0.0, |l| l.p / l.q);
        if top_p - next_ratio * top_q > eps {
            return (top_p - eps) / top_q;
        }
    }
    // Only reachable through rounding when eps ≈ total mass.
    (top_p - eps).max(0.0) / top_q
}

/// Exact smooth max divergence by threshold inversion.
pub fn smooth_max_divergence(p: &Pmf, q: &Pmf, eps: f64) -> Result<SmoothDivergenceResult> {
    check_epsilon(eps)?;
    check_support(p.mass(), q.mass())?;
    let levels: Vec<RatioLevel> = p
        .mass()
        .iter()
        .zip(q.mass())
        .filter(|(&pm, _)| pm > 0.0)
        .map(|(&p, &q)| RatioLevel { p, q, weight: 1.0 })
        .collect();
    let t = smooth_ratio_threshold(&levels, eps);
    let phi: Vec<f64> = p
        .mass()
        .iter()
        .zip(q.mass())
        .map(|(&pm, &qm)| if pm > 0.0 { pm.min(t * qm) } else { 0.0 })
        .collect();
    Ok(SmoothDivergenceResult {
        value_bits: t.log2(),
        smoothing: SubPmf::new(vec![p.len()], phi, p.mass().to_vec())?,
        epsilon: eps,
    })
}

/// Exact smooth max divergence by iterative lowering of the top ratio class.
pub fn smooth_divergence_procedure(p: &Pmf, q: &Pmf, eps: f64) -> Result<SmoothDivergenceResult> {
    check_epsilon(eps)?;
    check_support(p.mass(), q.mass())?;
    let (pm, qm) = (p.mass(), q.mass());

    // Distinct ratio levels in decreasing order, each with the Q mass it carries.
    let mut symbols: Vec<usize> = (0..pm.len()).filter(|&i| pm[i] > 0.0).collect();
    symbols.sort_by(|&a, &b| (pm[b] / qm[b]).total_cmp(&(pm[a] / qm[a])));
    let mut levels: Vec<(f64, f64, usize)> = Vec::new(); // (ratio, q mass, symbols up to here)
    for (n, &i) in symbols.iter().enumerate() {
        let r = pm[i] / qm[i];
        match levels.last_mut() {
            Some(last) if last.0 == r => {
                last.1 += qm[i];
                last.2 = n + 1;
            }
            _ => levels.push((r, qm[i], n + 1)),
        }
    }

    let mut ratio = levels[0].0;
    let mut active_q = levels[0].1;
    let mut active = levels[0].2;
    let mut budget = eps;
    let mut next = 1;
    while budget > 0.0 {
        match levels.get(next) {
            // Every symbol shares one ratio: scale them all down together.
            None => {
                ratio -= budget / active_q;
                break;
            }
            Some(&(next_ratio, next_q, next_count)) => {
                let cost = (ratio - next_ratio) * active_q;
                if cost >= budget {
                    ratio -= budget / active_q;
                    break;
                }
                budget -= cost;
                ratio = next_ratio;
                active_q += next_q;
                active = next_count;
                next += 1;
            }
        }
    }

    let mut phi = pm.to_vec();
    if eps > 0.0 {
        for &i in &symbols[..active] {
            phi[i] = (ratio * qm[i]).min(pm[i]);
        }
    }
    Ok(SmoothDivergenceResult {
        value_bits: if eps > 0.0 {
            ratio.log2()
        } else {
            max_ratio(pm, qm).log2()
        },
        smoothing: SubPmf::new(vec![p.len()], phi, pm.to_vec())?,
        epsilon: eps,
    })
}

/// Brute-force upper bound on the smooth max divergence.
///
/// The removal budget `eps` is split into `grid` equal units, and the exact
/// minimum of `max_x φ(x)/Q(x)` over every allocation of whole units to
/// symbols is found by a min-max dynamic program over symbols. Converges to
/// the exact value as `grid → ∞`.
pub fn smooth_divergence_oracle(p: &Pmf, q: &Pmf, eps: f64, grid: usize) -> Result<f64> {
    check_epsilon(eps)?;
    check_support(p.mass(), q.mass())?;
    if grid == 0 {
        return Err(Error::Usage("oracle grid must be positive".into()));
    }
    if eps == 0.0 {
        return Ok(max_ratio(p.mass(), q.mass()).log2());
    }
    let unit = eps / grid as f64;
    // best[u]: smallest achievable max ratio over the symbols seen so far using ≤ u units.
    let mut best = vec![0.0f64; grid + 1];
    for (&pm, &qm) in p.mass().iter().zip(q.mass()).filter(|(&pm, _)| pm > 0.0) {
        let cap = ((pm / unit) * (1.0 + 1e-12)).floor().min(grid as f64) as usize;
        let ratio_after = |a: usize| (pm - a as f64 * unit).max(0.0) / qm;
        let prev = best.clone();
        for (u, slot) in best.iter_mut().enumerate() {
            let hi = u.min(cap);
            // prev[u - a] grows with a while ratio_after(a) shrinks: find the crossing.
            let (mut lo, mut up) = (0usize, hi + 1);
            while lo < up {
                let mid = (lo + up) / 2;
                if prev[u - mid] >= ratio_after(mid) {
                    up = mid;
                } else {
                    lo = mid + 1;
                }
            }
            *slot = if lo > hi {
                ratio_after(hi)
            } else if lo == 0 {
                prev[u]
            } else {
                prev[u - lo].min(ratio_after(lo - 1))
            };
        }
    }
    Ok(best[grid].log2())
}

fn check_h0_input(p_xu: &JointPmf, eps: f64) -> Result<()> {
    check_epsilon(eps)?;
    if p_xu.axes() != 2 {
        return Err(Error::Usage(
            "conditional smooth entropy needs a two-axis joint over X×U".into(),
        ));
    }
    Ok(())
}

/// Positive cells of each column `u`, as `(mass, x)` sorted by ascending mass, then index.
fn sorted_columns(p_xu: &JointPmf) -> Vec<Vec<(f64, usize)>> {
    let (nx, nu) = (p_xu.shape()[0], p_xu.shape()[1]);
    let mass = p_xu.mass();
    (0..nu)
        .map(|u| {
            let mut col: Vec<(f64, usize)> = (0..nx)
                .map(|x| (mass[x * nu + u], x))
                .filter(|(m, _)| *m > 0.0)
                .collect();
            col.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            col
        })
        .collect()
}

/// `H₀^ε(X|U) = min_{Q ∈ B^ε(P_XU)} log2 max_u |Supp(Q(X|U=u))|`, axis 0 = X, axis 1 = U.
pub fn smooth_conditional_h0(p_xu: &JointPmf, eps: f64) -> Result<SmoothEntropyResult> {
    check_h0_input(p_xu, eps)?;
    let columns = sorted_columns(p_xu);
    let prefix: Vec<Vec<f64>> = columns
        .iter()
        .map(|col| {
            std::iter::once(0.0)
                .chain(col.iter().scan(0.0, |acc, (m, _)| {
                    *acc += m;
                    Some(*acc)
                }))
                .collect()
        })
        .collect();
    let widest = columns.iter().map(Vec::len).max().unwrap_or(0);
    let cost = |k: usize| -> f64 {
        columns
            .iter()
            .zip(&prefix)
            .map(|(col, pre)| pre[col.len().saturating_sub(k)])
            .sum()
    };
    let k = (1..=widest).find(|&k| cost(k) <= eps + BUDGET_SLACK).unwrap_or(widest);

    let nu = p_xu.shape()[1];
    let mut q = p_xu.mass().to_vec();
    for (u, col) in columns.iter().enumerate() {
        for &(_, x) in &col[..col.len().saturating_sub(k)] {
            q[x * nu + u] = 0.0;
        }
    }
    Ok(SmoothEntropyResult {
        value_bits: (k as f64).log2(),
        max_support: k,
        smoothing: SubPmf::new(p_xu.shape().to_vec(), q, p_xu.mass().to_vec())?,
        epsilon: eps,
    })
}

/// Exhaustive search over every subset of positive cells to zero.
pub fn smooth_h0_oracle(p_xu: &JointPmf, eps: f64) -> Result<f64> {
    check_h0_input(p_xu, eps)?;
    if p_xu.cells() > H0_ORACLE_MAX_CELLS {
        return Err(Error::Resource {
            what: "exhaustive smooth-H0 oracle".into(),
            required: p_xu.cells() as u128,
            cap: H0_ORACLE_MAX_CELLS as u128,
        });
    }
    let nu = p_xu.shape()[1];
    let cells: Vec<(f64, usize)> = p_xu
        .mass()
        .iter()
        .enumerate()
        .filter(|(_, m)| **m > 0.0)
        .map(|(flat, &m)| (m, flat % nu))
        .collect();
    let column_masks: Vec<u32> = (0..nu)
        .map(|u| {
            cells
                .iter()
                .enumerate()
                .filter(|(_, c)| c.1 == u)
                .fold(0, |acc, (bit, _)| acc | (1 << bit))
        })
        .collect();

    let subsets = 1usize << cells.len();
    let mut removed = vec![0.0f64; subsets];
    let mut best = usize::MAX;
    for mask in 0..subsets {
        if mask > 0 {
            let low = mask.trailing_zeros() as usize;
            removed[mask] = removed[mask & (mask - 1)] + cells[low].0;
        }
        if removed[mask] > eps + BUDGET_SLACK {
            continue;
        }
        let kept = !(mask as u32);
        let widest = column_masks
            .iter()
            .map(|cm| (cm & kept).count_ones() as usize)
            .max()
            .unwrap_or(0);
        best = best.min(widest);
    }
    Ok((best as f64).log2())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pmf(m: &[f64]) -> Pmf {
        Pmf::new(m.to_vec()).unwrap()
    }

    #[test]
    fn max_entropy_examples() {
        assert_eq!(max_entropy_h0(&pmf(&[0.5, 0.5])), 1.0);
        assert_eq!(max_entropy_h0(&pmf(&[1.0, 0.0, 0.0, 0.0])), 0.0);
        assert_eq!(max_entropy_h0(&pmf(&[0.5, 0.25, 0.25, 0.0])), 3f64.log2());
    }

    #[test]
    fn max_divergence_examples() {
        let u = pmf(&[0.5, 0.5]);
        assert_eq!(max_divergence(&u, &u).unwrap(), 0.0);
        assert_eq!(max_divergence(&pmf(&[1.0, 0.0]), &u).unwrap(), 1.0);
        let d = max_divergence(&pmf(&[0.75, 0.25]), &u).unwrap();
        assert!((d - 1.5f64.log2()).abs() < 1e-15);
        assert!((d - 0.58496).abs() < 1e-5);
        let err = max_divergence(&u, &pmf(&[1.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::SupportViolation { symbol: 1, .. }));
    }

    /// Threshold grid search with step 1e-6: the smallest grid t whose
    /// Σ min(P, tQ) reaches 1 − ε.
    fn threshold_grid_oracle(p: &[f64], q: &[f64], eps: f64) -> f64 {
        let mut t = 0.0;
        loop {
            let kept: f64 = p.iter().zip(q).map(|(a, b)| a.min(t * b)).sum();
            if kept >= 1.0 - eps - 1e-12 {
                return t;
            }
            t += 1e-6;
        }
    }

    #[test]
    fn smooth_divergence_examples() {
        let p = pmf(&[0.5, 0.5]);
        let q = pmf(&[0.75, 0.25]);

        let r = smooth_max_divergence(&p, &q, 0.0).unwrap();
        assert_eq!(r.value_bits, max_divergence(&p, &q).unwrap());
        assert_eq!(r.smoothing.mass(), p.mass());

        let r = smooth_max_divergence(&p, &q, 0.1).unwrap();
        let grid_t = threshold_grid_oracle(p.mass(), q.mass(), 0.1);
        assert!((grid_t - 1.6).abs() < 2e-6);
        assert!((r.ratio() - 1.6).abs() < 1e-12);
        assert!((r.value_bits - 0.67807).abs() < 1e-5);
        assert!((r.smoothing.total() - 0.9).abs() < 1e-12);

        let r = smooth_max_divergence(&p, &p, 0.2).unwrap();
        assert!((r.value_bits - 0.8f64.log2()).abs() < 1e-12);
        assert!((r.value_bits + 0.32193).abs() < 1e-5);
        for m in r.smoothing.mass() {
            assert!((m - 0.4).abs() < 1e-12);
        }
    }

    #[test]
    fn procedure_examples() {
        let p = pmf(&[0.5, 0.25, 0.25]);
        let q = pmf(&[0.25, 0.25, 0.5]);
        let r = smooth_divergence_procedure(&p, &q, 0.0).unwrap();
        assert_eq!(r.smoothing.mass(), p.mass());
        assert_eq!(r.value_bits, 1.0);

        // single ratio class: everything scales to 0.8 total
        let u = pmf(&[0.25; 4]);
        let r = smooth_divergence_procedure(&u, &u, 0.2).unwrap();
        assert!((r.smoothing.total() - 0.8).abs() < 1e-12);
        assert!((r.value_bits - 0.8f64.log2()).abs() < 1e-12);
        let t = smooth_max_divergence(&u, &u, 0.2).unwrap();
        assert!((r.value_bits - t.value_bits).abs() < 1e-12);

        let p = pmf(&[0.5, 0.5]);
        let q = pmf(&[0.75, 0.25]);
        let a = smooth_divergence_procedure(&p, &q, 0.1).unwrap();
        let b = smooth_max_divergence(&p, &q, 0.1).unwrap();
        assert!((a.value_bits - b.value_bits).abs() < 1e-12);
        for (x, y) in a.smoothing.mass().iter().zip(b.smoothing.mass()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn procedure_merges_levels() {
        // ratios 3, 2, 0.5: lowering 3 → 2 costs 0.1, then the merged class
        // carries q = 0.2; remaining 0.05 lowers it by 0.25.
        let p = pmf(&[0.3, 0.2, 0.5]);
        let q = pmf(&[0.1, 0.1, 0.8]);
        let r = smooth_divergence_procedure(&p, &q, 0.15).unwrap();
        assert!((r.ratio() - 1.75).abs() < 1e-12);
        let t = smooth_max_divergence(&p, &q, 0.15).unwrap();
        assert!((t.ratio() - 1.75).abs() < 1e-12);
    }

    #[test]
    fn oracle_examples() {
        let p = pmf(&[0.5, 0.5]);
        let q = pmf(&[0.75, 0.25]);
        assert_eq!(
            smooth_divergence_oracle(&p, &q, 0.0, 10).unwrap(),
            max_divergence(&p, &q).unwrap()
        );
        let o = smooth_divergence_oracle(&p, &q, 0.1, 10_000).unwrap();
        assert!((o - 1.6f64.log2()).abs() < 1e-3);
        assert!(o >= 1.6f64.log2() - 1e-12);

        let p = pmf(&[0.1, 0.2, 0.3, 0.4]);
        let q = pmf(&[0.4, 0.3, 0.2, 0.1]);
        let coarse = |e| smooth_divergence_oracle(&p, &q, e, 200).unwrap();
        assert!(coarse(0.2) <= coarse(0.1));
    }

    #[test]
    fn divergence_rejects_bad_arguments() {
        let p = pmf(&[0.5, 0.5]);
        assert!(matches!(smooth_max_divergence(&p, &p, 1.0), Err(Error::Epsilon(_))));
        assert!(matches!(
            smooth_divergence_procedure(&p, &p, -0.1),
            Err(Error::Epsilon(_))
        ));
        let q = pmf(&[1.0, 0.0]);
        assert!(matches!(
            smooth_max_divergence(&p, &q, 0.1),
            Err(Error::SupportViolation { symbol: 1, .. })
        ));
    }

    #[test]
    fn conditional_h0_examples() {
        let uniform = JointPmf::from_rows(&[vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap();
        assert_eq!(smooth_conditional_h0(&uniform, 0.0).unwrap().value_bits, 1.0);
        let r = smooth_conditional_h0(&uniform, 0.5).unwrap();
        assert_eq!(r.value_bits, 0.0);
        assert_eq!(smooth_h0_oracle(&uniform, 0.5).unwrap(), 0.0);
        // ties broken toward the lower symbol: x = 0 is zeroed in both columns
        assert_eq!(r.smoothing.mass(), &[0.0, 0.0, 0.25, 0.25]);

        // rows are x, columns u: u0 = (0.4, 0.3, 0.05), u1 = (0.25, 0, 0)
        let j = JointPmf::from_rows(&[vec![0.4, 0.25], vec![0.3, 0.0], vec![0.05, 0.0]]).unwrap();
        let r = smooth_conditional_h0(&j, 0.05).unwrap();
        assert_eq!(r.value_bits, 1.0);
        assert_eq!(r.max_support, 2);
        assert_eq!(smooth_h0_oracle(&j, 0.05).unwrap(), 1.0);
        assert_eq!(r.smoothing.mass()[2 * 2], 0.0);
    }

    #[test]
    fn h0_oracle_edges() {
        let j = JointPmf::from_rows(&[vec![0.4, 0.25], vec![0.3, 0.0], vec![0.05, 0.0]]).unwrap();
        assert_eq!(smooth_h0_oracle(&j, 0.0).unwrap(), 3f64.log2());
        assert_eq!(smooth_h0_oracle(&j, 0.6).unwrap(), 0.0);
        let big = JointPmf::new(vec![5, 4], vec![0.05; 20]).unwrap();
        assert!(matches!(smooth_h0_oracle(&big, 0.1), Err(Error::Resource { .. })));
    }

    #[test]
    fn degenerate_column_counts_as_empty() {
        let j = JointPmf::from_rows(&[vec![0.5, 0.0], vec![0.5, 0.0]]).unwrap();
        let r = smooth_conditional_h0(&j, 0.0).unwrap();
        assert_eq!(r.max_support, 2);
    }
}
