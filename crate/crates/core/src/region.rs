//! One-shot achievable rate region for source coding with a helper.
//!
//! For a helper channel `P_{U|Y}` and a budget `(ε, ε₁, ε₁₁)` the pair
//!
//! ```text
//! R1 = H₀^{ε₁₁}(X|U) − log2(ε − ε₁)
//! R2 = D∞^{ε₁₁}(P_UY ‖ P_U × P_Y) + log2(−ln(ε₁ − ε₁₁ − 2√ε₁₁))
//! ```
//!
//! is achievable with error at most `ε`, provided `ε₁₁ + 2√ε₁₁ < ε₁ < ε` and
//! the smooth divergence is nonnegative. The region is the union over helpers;
//! [`frontier_search`] scans a simplex grid of helpers and keeps the Pareto set.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::sig;
use crate::prob::{compose_markov, shannon_quantities, Channel, JointPmf, Pmf};
use crate::smooth::{smooth_conditional_h0, smooth_max_divergence};

/// Most helper channels [`frontier_search`] will enumerate.
pub const MAX_FRONTIER_CHANNELS: u128 = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonBudget {
    pub eps: f64,
    pub eps1: f64,
    pub eps11: f64,
}

impl EpsilonBudget {
    pub fn new(eps: f64, eps1: f64, eps11: f64) -> Self {
        Self { eps, eps1, eps11 }
    }

    /// `ε₁ − ε₁₁ − 2√ε₁₁`, the argument of the helper-rate penalty.
    pub fn covering_slack(&self) -> f64 {
        self.eps1 - self.eps11 - 2.0 * self.eps11.sqrt()
    }

    /// `ε₁₁ + 2√ε₁₁`, the smoothing part of the covering error bound.
    pub fn smoothing_term(&self) -> f64 {
        self.eps11 + 2.0 * self.eps11.sqrt()
    }

    /// Violated structural constraints (everything except the divergence sign).
    pub fn violations(&self) -> Vec<String> {
        let Self { eps, eps1, eps11 } = *self;
        let mut out = Vec::new();
        if [eps, eps1, eps11].iter().any(|v| !v.is_finite()) {
            out.push(format!("eps={eps}, eps1={eps1}, eps11={eps11} must be finite"));
            return out;
        }
        if !(eps > 0.0 && eps < 1.0) {
            out.push(format!("eps={} must satisfy 0 < eps < 1", sig(eps)));
        }
        if eps1 < 0.0 {
            out.push(format!("eps1={} must be nonnegative", sig(eps1)));
        }
        if eps11 < 0.0 {
            out.push(format!("eps11={} must be nonnegative", sig(eps11)));
        }
        if eps1 >= eps {
            out.push(format!("eps1={} must be < eps={}", sig(eps1), sig(eps)));
        }
        if eps11 >= 0.0 && self.smoothing_term() >= eps1 {
            out.push(format!(
                "eps11 + 2*sqrt(eps11) = {} must be < eps1={}",
                sig(self.smoothing_term()),
                sig(eps1)
            ));
        }
        out
    }

    /// Default split of a total error: `ε₁ = ε/2`, `ε₁₁ ∈ {ε₁²/16, ε₁²/64}`.
    pub fn default_grid(eps: f64) -> Vec<EpsilonBudget> {
        let eps1 = eps / 2.0;
        [16.0, 64.0]
            .iter()
            .map(|d| EpsilonBudget::new(eps, eps1, eps1 * eps1 / d))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BudgetCheck {
    pub valid: bool,
    pub diagnostics: Vec<String>,
}

/// Checks the budget constraints and `D∞^{ε₁₁}(P_UY‖P_U×P_Y) ≥ 0`.
pub fn validate_budget(budget: &EpsilonBudget, divergence_bits: f64) -> BudgetCheck {
    let mut diagnostics = budget.violations();
    if !(divergence_bits >= 0.0) {
        diagnostics.push(format!(
            "smooth divergence D_inf^eps11(P_UY||P_U x P_Y) = {} must be >= 0",
            sig(divergence_bits)
        ));
    }
    BudgetCheck {
        valid: diagnostics.is_empty(),
        diagnostics,
    }
}

/// The smooth quantities behind a rate pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateWitness {
    pub h0_bits: f64,
    pub max_support: usize,
    pub divergence_bits: f64,
    pub budget: EpsilonBudget,
    pub helper: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatePair {
    pub r1_bits: f64,
    pub r2_bits: f64,
    pub witness: RateWitness,
}

/// The pieces of a composed source that do not depend on the budget.
struct HelperSource {
    p_xu: JointPmf,
    p_uy: Pmf,
    product: Pmf,
    helper: Channel,
}

impl HelperSource {
    fn new(p_xy: &JointPmf, helper: &Channel) -> Result<Self> {
        let p_xyu = compose_markov(p_xy, helper)?;
        let p_xu = p_xyu.pair(0, 2)?;
        let uy = p_xyu.pair(2, 1)?;
        let product = uy.marginal(0).outer(&uy.marginal(1)).flatten();
        Ok(Self {
            p_xu,
            p_uy: uy.flatten(),
            product,
            helper: helper.clone(),
        })
    }

    fn evaluate(&self, budget: &EpsilonBudget) -> Result<RatePair> {
        let structural = budget.violations();
        if !structural.is_empty() {
            return Err(Error::Constraint(structural));
        }
        let divergence = smooth_max_divergence(&self.p_uy, &self.product, budget.eps11)?.value_bits;
        let check = validate_budget(budget, divergence);
        if !check.valid {
            return Err(Error::Constraint(check.diagnostics));
        }
        let slack = budget.covering_slack();
        if !(slack > 0.0 && slack < 1.0) {
            return Err(Error::Constraint(vec![format!(
                "eps1 - eps11 - 2*sqrt(eps11) = {} must lie in (0, 1) for log2(-ln(.)) to be defined",
                sig(slack)
            )]));
        }
        let h0 = smooth_conditional_h0(&self.p_xu, budget.eps11)?;
        Ok(RatePair {
            r1_bits: h0.value_bits - (budget.eps - budget.eps1).log2(),
            r2_bits: divergence + (-slack.ln()).log2(),
            witness: RateWitness {
                h0_bits: h0.value_bits,
                max_support: h0.max_support,
                divergence_bits: divergence,
                budget: *budget,
                helper: self.helper.rows().iter().map(|r| r.mass().to_vec()).collect(),
            },
        })
    }
}

/// One-shot achievable rate pair for a helper channel and budget.
pub fn achievable_pair(p_xy: &JointPmf, helper: &Channel, budget: &EpsilonBudget) -> Result<RatePair> {
    HelperSource::new(p_xy, helper)?.evaluate(budget)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WynerPoint {
    pub h_x_given_u: f64,
    pub i_u_y: f64,
}

/// Asymptotic per-symbol rates `(H(X|U), I(U;Y))` for the same helper.
pub fn wyner_point(p_xy: &JointPmf, helper: &Channel) -> Result<WynerPoint> {
    let terms = shannon_quantities(&compose_markov(p_xy, helper)?)
        .helper
        .expect("composition has three axes");
    Ok(WynerPoint {
        h_x_given_u: terms.h_x_given_u,
        i_u_y: terms.i_u_y,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrontierPoint {
    pub rates: RatePair,
    pub helper: Channel,
    pub budget: EpsilonBudget,
}

/// All vectors of `parts` nonnegative integers summing to `total`, lexicographically ascending.
pub fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn fill(rest: usize, slots: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            prefix.push(rest);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=rest {
            prefix.push(first);
            fill(rest - first, slots - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if parts > 0 {
        fill(total, parts, &mut Vec::with_capacity(parts), &mut out);
    }
    out
}

/// Helper channels whose rows lie on the simplex grid with `channel_grid` points per edge.
///
/// Channel `i` uses row composition `(i / R^(|Y|-1-y)) mod R` for input `y`,
/// where `R` is the number of row compositions.
pub struct ChannelGrid {
    rows: Vec<Vec<f64>>,
    inputs: usize,
}

impl ChannelGrid {
    pub fn new(inputs: usize, u_size: usize, channel_grid: usize) -> Result<Self> {
        if u_size == 0 {
            return Err(Error::Usage("u_size must be at least 1".into()));
        }
        if channel_grid < 2 {
            return Err(Error::Usage("channel_grid must be at least 2".into()));
        }
        let steps = channel_grid - 1;
        let rows: Vec<Vec<f64>> = compositions(steps, u_size)
            .into_iter()
            .map(|c| c.into_iter().map(|k| k as f64 / steps as f64).collect())
            .collect();
        let count = (rows.len() as u128).checked_pow(inputs as u32).unwrap_or(u128::MAX);
        if count > MAX_FRONTIER_CHANNELS {
            return Err(Error::Resource {
                what: "helper channel grid".into(),
                required: count,
                cap: MAX_FRONTIER_CHANNELS,
            });
        }
        Ok(Self { rows, inputs })
    }

    pub fn len(&self) -> usize {
        self.rows.len().pow(self.inputs as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channel(&self, index: usize) -> Result<Channel> {
        let r = self.rows.len();
        let mut rows = vec![Vec::new(); self.inputs];
        let mut rest = index;
        for y in (0..self.inputs).rev() {
            rows[y] = self.rows[rest % r].clone();
            rest /= r;
        }
        Channel::new(rows)
    }
}

/// Pareto-minimal `(r1, r2)` pairs over a helper grid and a list of budgets.
///
/// Budgets that fail their constraints for a given helper are skipped. Points
/// with identical rates keep only the first in enumeration order. The result
/// is sorted by `r1`, then `r2`.
pub fn frontier_search(
    p_xy: &JointPmf,
    u_size: usize,
    channel_grid: usize,
    budgets: &[EpsilonBudget],
) -> Result<Vec<FrontierPoint>> {
    if budgets.is_empty() {
        return Err(Error::Usage("frontier search needs at least one budget".into()));
    }
    if p_xy.axes() != 2 {
        return Err(Error::Usage("frontier search needs a two-axis joint over X×Y".into()));
    }
    let grid = ChannelGrid::new(p_xy.shape()[1], u_size, channel_grid)?;

    let evaluated: Vec<(usize, usize, RatePair)> = (0..grid.len())
        .into_par_iter()
        .map(|ci| -> Result<Vec<(usize, usize, RatePair)>> {
            let source = HelperSource::new(p_xy, &grid.channel(ci)?)?;
            let mut out = Vec::new();
            for (bi, budget) in budgets.iter().enumerate() {
                match source.evaluate(budget) {
                    Ok(pair) => out.push((ci, bi, pair)),
                    Err(Error::Constraint(_)) => {}
                    Err(e) => return Err(e),
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let keep = pareto_indices(
        &evaluated
            .iter()
            .map(|(ci, bi, p)| (p.r1_bits, p.r2_bits, (*ci, *bi)))
            .collect::<Vec<_>>(),
    );
    keep.into_iter()
        .map(|k| {
            let (ci, bi, rates) = &evaluated[k];
            Ok(FrontierPoint {
                rates: rates.clone(),
                helper: grid.channel(*ci)?,
                budget: budgets[*bi],
            })
        })
        .collect()
}

/// Indices of nondominated points (minimizing both coordinates), sorted by
/// `(r1, r2, tag)`; exact duplicates keep the smallest tag.
pub fn pareto_indices<T: Ord + Copy>(points: &[(f64, f64, T)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (&points[a], &points[b]);
        pa.0.total_cmp(&pb.0).then(pa.1.total_cmp(&pb.1)).then(pa.2.cmp(&pb.2))
    });
    let mut kept = Vec::new();
    let mut best_r2 = f64::INFINITY;
    for i in order {
        // Everything earlier has r1 ≤ this r1; it survives only with a strictly smaller r2.
        if points[i].1 < best_r2 {
            best_r2 = points[i].1;
            kept.push(i);
        }
    }
    kept
}

/// Frontier rows as CSV: `r1_bits,r2_bits,eps,eps1,eps11,helper_y{y}_u{u}...`.
pub fn frontier_csv(points: &[FrontierPoint]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header: Vec<String> = ["r1_bits", "r2_bits", "eps", "eps1", "eps11"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    if let Some(first) = points.first() {
        let (ny, nu) = (
            first.helper.input_alphabet().size(),
            first.helper.output_alphabet().size(),
        );
        for y in 0..ny {
            for u in 0..nu {
                header.push(format!("helper_y{y}_u{u}"));
            }
        }
    }
    let rows = points
        .iter()
        .map(|p| {
            let mut row = vec![
                sig(p.rates.r1_bits),
                sig(p.rates.r2_bits),
                sig(p.budget.eps),
                sig(p.budget.eps1),
                sig(p.budget.eps11),
            ];
            row.extend(p.helper.flat().into_iter().map(sig));
            row
        })
        .collect();
    (header, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::dsbs;
    use crate::smooth::{smooth_divergence_oracle, smooth_h0_oracle};

    fn reference_budget() -> EpsilonBudget {
        EpsilonBudget::new(0.25, 0.125, 0.002)
    }

    #[test]
    fn validate_budget_examples() {
        let ok = validate_budget(&reference_budget(), 0.5);
        assert!(ok.valid, "{:?}", ok.diagnostics);

        let bad = validate_budget(&EpsilonBudget::new(0.2, 0.19, 0.01), 0.5);
        assert!(!bad.valid);
        assert_eq!(bad.diagnostics.len(), 1);
        assert!(bad.diagnostics[0].contains("eps11 + 2*sqrt(eps11)"));

        let neg = validate_budget(&reference_budget(), -0.1);
        assert!(!neg.valid);
        assert!(neg.diagnostics[0].contains("must be >= 0"));

        let many = validate_budget(&EpsilonBudget::new(1.5, 2.0, 0.5), -1.0);
        // eps out of range, eps1 >= eps, negative divergence; 0.5 + 2·0.707 < 2 holds
        assert_eq!(many.diagnostics.len(), 3);
    }

    #[test]
    fn uniform_source_identity_helper() {
        let uniform = JointPmf::from_rows(&[vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap();
        let pair = achievable_pair(&uniform, &Channel::identity(2).unwrap(), &reference_budget()).unwrap();
        assert!((pair.r1_bits - 4.0).abs() < 1e-12);
        assert_eq!(pair.witness.h0_bits, 1.0);
    }

    #[test]
    fn constant_helper_needs_zero_smoothing() {
        let p = dsbs(0.25).unwrap();
        let constant = Channel::constant(2).unwrap();
        // P_UY = P_U × P_Y, so any ε₁₁ > 0 drives the divergence below zero.
        let err = achievable_pair(&p, &constant, &reference_budget()).unwrap_err();
        assert!(matches!(err, Error::Constraint(ref d) if d[0].contains("smooth divergence")));

        let pair = achievable_pair(&p, &constant, &EpsilonBudget::new(0.25, 0.125, 0.0)).unwrap();
        assert_eq!(pair.witness.divergence_bits, 0.0);
        assert_eq!(pair.witness.h0_bits, 1.0);
        assert!((pair.r2_bits - (-(0.125f64).ln()).log2()).abs() < 1e-12);
    }

    #[test]
    fn dsbs_pair_matches_oracle_composition() {
        let p = dsbs(0.25).unwrap();
        let helper = Channel::binary_symmetric(0.1).unwrap();
        let b = reference_budget();
        let pair = achievable_pair(&p, &helper, &b).unwrap();

        let p_xyu = compose_markov(&p, &helper).unwrap();
        let h0 = smooth_h0_oracle(&p_xyu.pair(0, 2).unwrap(), b.eps11).unwrap();
        let uy = p_xyu.pair(2, 1).unwrap();
        let prod = uy.marginal(0).outer(&uy.marginal(1));
        let d = smooth_divergence_oracle(&uy.flatten(), &prod.flatten(), b.eps11, 20_000).unwrap();
        let r1 = h0 - (b.eps - b.eps1).log2();
        let r2 = d + (-b.covering_slack().ln()).log2();
        assert_eq!(pair.r1_bits, r1);
        assert!(pair.r2_bits <= r2 + 1e-12 && r2 - pair.r2_bits < 1e-3);
        // P_UY = (0.45, 0.05, 0.05, 0.45) against 0.25 everywhere: lowering the
        // two 0.45 cells by 0.001 each gives ratio 0.449 / 0.25.
        assert!((pair.witness.divergence_bits - (0.449f64 / 0.25).log2()).abs() < 1e-12);
    }

    #[test]
    fn enlarging_eps_lowers_r1_only() {
        let p = dsbs(0.25).unwrap();
        let helper = Channel::binary_symmetric(0.1).unwrap();
        let a = achievable_pair(&p, &helper, &EpsilonBudget::new(0.25, 0.125, 0.002)).unwrap();
        let b = achievable_pair(&p, &helper, &EpsilonBudget::new(0.4, 0.125, 0.002)).unwrap();
        assert!(b.r1_bits < a.r1_bits);
        assert_eq!(a.r2_bits, b.r2_bits);
    }

    #[test]
    fn wyner_point_examples() {
        let p = dsbs(0.25).unwrap();
        let s = shannon_quantities(&p);
        let id = wyner_point(&p, &Channel::identity(2).unwrap()).unwrap();
        assert!((id.h_x_given_u - s.h_x_given_y).abs() < 1e-12);
        assert!((id.i_u_y - s.h_y).abs() < 1e-12);
        let c = wyner_point(&p, &Channel::constant(2).unwrap()).unwrap();
        assert!((c.h_x_given_u - s.h_x).abs() < 1e-12);
        assert!(c.i_u_y.abs() < 1e-12);

        // U = X through a BSC(0.3), and Y → U is a BSC(0.1) with uniform Y.
        let w = wyner_point(&p, &Channel::binary_symmetric(0.1).unwrap()).unwrap();
        let h2 = |x: f64| -(x * x.log2() + (1.0 - x) * (1.0 - x).log2());
        assert!((w.h_x_given_u - h2(0.3)).abs() < 1e-12);
        assert!((w.i_u_y - (1.0 - h2(0.1))).abs() < 1e-12);
    }

    #[test]
    fn compositions_enumerate_simplex() {
        assert_eq!(compositions(2, 2), vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
        assert_eq!(compositions(10, 3).len(), 66);
        assert_eq!(compositions(4, 1), vec![vec![4]]);
    }

    #[test]
    fn pareto_keeps_nondominated() {
        let pts = [
            (1.0, 3.0, 0),
            (2.0, 2.0, 1),
            (2.0, 3.0, 2),
            (3.0, 1.0, 3),
            (1.0, 3.0, 4),
            (4.0, 1.0, 5),
        ];
        assert_eq!(pareto_indices(&pts), vec![0, 1, 3]);
    }

    #[test]
    fn frontier_degenerate_and_errors() {
        let p = dsbs(0.25).unwrap();
        let budgets = EpsilonBudget::default_grid(0.25);
        assert!(frontier_search(&p, 1, 5, &budgets).unwrap().len() <= budgets.len());
        assert!(matches!(frontier_search(&p, 2, 5, &[]), Err(Error::Usage(_))));
        assert!(matches!(frontier_search(&p, 2, 1, &budgets), Err(Error::Usage(_))));
    }

    #[test]
    fn default_grid_is_valid() {
        for b in EpsilonBudget::default_grid(0.25) {
            assert!(b.violations().is_empty(), "{b:?}");
        }
    }
}
