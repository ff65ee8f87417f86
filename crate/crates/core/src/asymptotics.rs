//! Per-symbol smooth quantities of i.i.d. extensions and information-spectrum masses.
//!
//! For `P^{×n}` and `Q^{×n}` the ratio `P_n(x)/Q_n(x)` only depends on the type
//! (symbol counts) of `x`, so the smooth max divergence and the spectrum mass
//! `Pr{(1/n) log P_n/Q_n ≤ λ}` are computed over the `O(n^{|X|-1})` types
//! instead of the `|X|^n` tuples. Both have materializing counterparts used to
//! cross-check the aggregation.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::format::sig;
use crate::prob::{kl_divergence, shannon_quantities, JointPmf, Pmf, DEFAULT_CELL_CAP};
use crate::region::compositions;
use crate::smooth::{check_epsilon, smooth_conditional_h0, smooth_max_divergence, smooth_ratio_threshold, RatioLevel};

/// Slack, in bits of total log-ratio, used when testing membership in `A_n(λ)`.
pub const SPECTRAL_SLACK: f64 = 1e-9;

/// Most types the factored routines will enumerate.
pub const MAX_TYPES: usize = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesEntry {
    pub n: usize,
    pub value_bits: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceSeries {
    pub eps: f64,
    pub entries: Vec<SeriesEntry>,
    pub target_bits: f64,
}

impl ConvergenceSeries {
    pub fn value(&self, n: usize) -> Option<f64> {
        self.entries.iter().find(|e| e.n == n).map(|e| e.value_bits)
    }

    /// CSV with columns `n,value_bits,target_bits,eps`.
    pub fn csv(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let header = ["n", "value_bits", "target_bits", "eps"].map(String::from).to_vec();
        let rows = self
            .entries
            .iter()
            .map(|e| vec![e.n.to_string(), sig(e.value_bits), sig(self.target_bits), sig(self.eps)])
            .collect();
        (header, rows)
    }
}

fn log2_multinomial(n: usize, counts: &[usize]) -> f64 {
    let ln_fact = |k: usize| (1..=k).map(|i| (i as f64).ln()).sum::<f64>();
    (ln_fact(n) - counts.iter().map(|&k| ln_fact(k)).sum::<f64>()) / std::f64::consts::LN_2
}

/// One type class of `X^n` restricted to `Supp(P)`.
struct TypeClass {
    /// Number of sequences in the class.
    size: f64,
    /// `log2 P_n(x)` for any sequence in the class.
    log_p: f64,
    /// `log2 Q_n(x)`.
    log_q: f64,
    /// `Σ_s k_s log2(P(s)/Q(s))`.
    log_ratio: f64,
}

fn type_classes(p: &Pmf, q: &Pmf, n: usize) -> Result<Vec<TypeClass>> {
    if p.len() != q.len() {
        return Err(Error::Usage("P and Q live on different alphabets".into()));
    }
    if let Some(symbol) = p.support().find(|&s| q.get(s) <= 0.0) {
        return Err(Error::SupportViolation {
            symbol,
            p_mass: p.get(symbol),
        });
    }
    if n == 0 {
        return Err(Error::Usage("block length must be positive".into()));
    }
    let support: Vec<usize> = p.support().collect();
    let types = binomial(n + support.len() - 1, support.len() - 1);
    if types > MAX_TYPES as f64 {
        return Err(Error::Resource {
            what: format!("type classes of length-{n} sequences"),
            required: types as u128,
            cap: MAX_TYPES as u128,
        });
    }
    Ok(compositions(n, support.len())
        .into_iter()
        .map(|counts| {
            let mut class = TypeClass {
                size: log2_multinomial(n, &counts).exp2().round(),
                log_p: 0.0,
                log_q: 0.0,
                log_ratio: 0.0,
            };
            for (&s, &k) in support.iter().zip(&counts) {
                let (lp, lq) = (p.get(s).log2(), q.get(s).log2());
                class.log_p += k as f64 * lp;
                class.log_q += k as f64 * lq;
                class.log_ratio += k as f64 * (lp - lq);
            }
            class
        })
        .collect())
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `(1/n) D∞^ε(P^{×n} ‖ Q^{×n})` by type-class aggregation.
pub fn divergence_per_symbol(p: &Pmf, q: &Pmf, eps: f64, n: usize) -> Result<f64> {
    check_epsilon(eps)?;
    let levels: Vec<RatioLevel> = type_classes(p, q, n)?
        .into_iter()
        .map(|c| RatioLevel {
            p: c.log_p.exp2(),
            q: c.log_q.exp2(),
            weight: c.size,
        })
        .collect();
    Ok(smooth_ratio_threshold(&levels, eps).log2() / n as f64)
}

/// Same quantity through the materialized product distributions.
pub fn divergence_per_symbol_materialized(p: &Pmf, q: &Pmf, eps: f64, n: usize) -> Result<f64> {
    let pn = p.product_extend(n)?;
    let qn = q.product_extend(n)?;
    Ok(smooth_max_divergence(&pn, &qn, eps)?.value_bits / n as f64)
}

/// Entries `(1/n) D∞^ε(P^{×n}‖Q^{×n})` for `n = 1..=n_max`, target `D(P‖Q)`.
pub fn divergence_series(p: &Pmf, q: &Pmf, eps: f64, n_max: usize) -> Result<ConvergenceSeries> {
    let target_bits = kl_divergence(p, q)?;
    let entries = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            Ok(SeriesEntry {
                n,
                value_bits: divergence_per_symbol(p, q, eps, n)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceSeries {
        eps,
        entries,
        target_bits,
    })
}

/// Entries `(1/n) H₀^ε(X^n|Y^n)` for `n = 1..=n_max`, target `H(X|Y)`.
pub fn entropy_series(p_xy: &JointPmf, eps: f64, n_max: usize) -> Result<ConvergenceSeries> {
    check_epsilon(eps)?;
    if p_xy.axes() != 2 {
        return Err(Error::Usage("entropy series needs a two-axis joint over X×Y".into()));
    }
    let cells = (p_xy.cells() as f64).powi(n_max as i32);
    if cells > DEFAULT_CELL_CAP as f64 {
        return Err(Error::Resource {
            what: format!("{n_max}-fold product of a {:?} joint", p_xy.shape()),
            required: cells as u128,
            cap: DEFAULT_CELL_CAP as u128,
        });
    }
    let target_bits = shannon_quantities(p_xy).h_x_given_y;
    let mut entries = Vec::with_capacity(n_max);
    let mut product = p_xy.clone();
    for n in 1..=n_max {
        if n > 1 {
            product = p_xy.product_extend(n)?;
        }
        let h0 = smooth_conditional_h0(&product, eps)?;
        entries.push(SeriesEntry {
            n,
            value_bits: h0.value_bits / n as f64,
        });
    }
    Ok(ConvergenceSeries {
        eps,
        entries,
        target_bits,
    })
}

/// `Pr_{P^{×n}}{ (1/n) log2 P_n/Q_n ≤ λ }`, by type classes.
pub fn spectral_mass(p: &Pmf, q: &Pmf, n: usize, lam: f64) -> Result<f64> {
    Ok(type_classes(p, q, n)?
        .into_iter()
        .filter(|c| c.log_ratio <= n as f64 * lam + SPECTRAL_SLACK)
        .map(|c| c.size * c.log_p.exp2())
        .sum::<f64>()
        .min(1.0))
}

/// `Pr_{P^{×n}}{ (1/n) log2 P_n/Q_n ≥ γ }`, the mass of the upper spectrum set.
pub fn spectral_mass_above(p: &Pmf, q: &Pmf, n: usize, gamma: f64) -> Result<f64> {
    Ok(type_classes(p, q, n)?
        .into_iter()
        .filter(|c| c.log_ratio >= n as f64 * gamma - SPECTRAL_SLACK)
        .map(|c| c.size * c.log_p.exp2())
        .sum::<f64>()
        .min(1.0))
}

/// [`spectral_mass`] by enumerating every tuple of `X^n`.
pub fn spectral_mass_enumerated(p: &Pmf, q: &Pmf, n: usize, lam: f64) -> Result<f64> {
    let total = (p.len() as f64).powi(n as i32);
    if total > DEFAULT_CELL_CAP as f64 {
        return Err(Error::Resource {
            what: format!("enumeration of length-{n} sequences"),
            required: total as u128,
            cap: DEFAULT_CELL_CAP as u128,
        });
    }
    type_classes(p, q, 1)?;
    let k = p.len();
    let mut mass = 0.0;
    let mut tuple = vec![0usize; n];
    for _ in 0..total as usize {
        let (mut prob, mut log_ratio) = (1.0, 0.0);
        for &s in &tuple {
            prob *= p.get(s);
            if p.get(s) > 0.0 {
                log_ratio += p.get(s).log2() - q.get(s).log2();
            }
        }
        if prob > 0.0 && log_ratio <= n as f64 * lam + SPECTRAL_SLACK {
            mass += prob;
        }
        for digit in tuple.iter_mut().rev() {
            *digit += 1;
            if *digit < k {
                break;
            }
            *digit = 0;
        }
    }
    Ok(mass.min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{binary_entropy, dsbs};

    fn pmf(m: &[f64]) -> Pmf {
        Pmf::new(m.to_vec()).unwrap()
    }

    #[test]
    fn type_aggregation_matches_materialized_products() {
        let p = pmf(&[0.7, 0.2, 0.1]);
        let q = pmf(&[0.3, 0.3, 0.4]);
        for n in 1..=6 {
            for eps in [0.0, 0.01, 0.2] {
                let a = divergence_per_symbol(&p, &q, eps, n).unwrap();
                let b = divergence_per_symbol_materialized(&p, &q, eps, n).unwrap();
                assert!((a - b).abs() < 1e-10, "n={n} eps={eps}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn unsmoothed_series_is_constant() {
        let p = pmf(&[0.7, 0.3]);
        let q = pmf(&[0.5, 0.5]);
        let s = divergence_series(&p, &q, 0.0, 8).unwrap();
        for e in &s.entries {
            assert!((e.value_bits - 1.4f64.log2()).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_distributions_stay_nonpositive() {
        let p = pmf(&[0.6, 0.4]);
        let s = divergence_series(&p, &p, 0.05, 10).unwrap();
        assert_eq!(s.target_bits, 0.0);
        assert!(s.entries.iter().all(|e| e.value_bits <= 0.0));
        assert!(s.value(10).unwrap() > s.value(1).unwrap());
        assert!((s.value(1).unwrap() - 0.95f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn entropy_series_edges() {
        let equal = JointPmf::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let s = entropy_series(&equal, 0.0, 5).unwrap();
        assert!(s.entries.iter().all(|e| e.value_bits == 0.0));

        let independent = JointPmf::from_rows(&[vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap();
        let s = entropy_series(&independent, 0.0, 5).unwrap();
        assert!(s.entries.iter().all(|e| (e.value_bits - 1.0).abs() < 1e-12));
        assert_eq!(s.target_bits, 1.0);

        let dsbs = dsbs(0.25).unwrap();
        let s = entropy_series(&dsbs, 0.05, 3).unwrap();
        assert!((s.target_bits - binary_entropy(0.25)).abs() < 1e-12);
        assert!(entropy_series(&dsbs, 0.05, 13).is_err());
    }

    #[test]
    fn spectral_mass_edges() {
        let p = pmf(&[0.7, 0.3]);
        let q = pmf(&[0.5, 0.5]);
        let (hi, lo) = (1.4f64.log2(), 0.6f64.log2());
        assert!((spectral_mass(&p, &q, 7, hi).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(spectral_mass(&p, &q, 7, lo - 0.01).unwrap(), 0.0);
        let d = kl_divergence(&p, &q).unwrap();
        let mid = spectral_mass(&p, &q, 10, d).unwrap();
        assert!(mid > 0.0 && mid < 1.0);
        let above = spectral_mass_above(&p, &q, 10, d + 1e-6).unwrap();
        let below = spectral_mass(&p, &q, 10, d + 1e-6).unwrap();
        assert!(above + below >= 1.0 - 1e-12);
    }

    #[test]
    fn factored_spectral_mass_matches_enumeration() {
        let p = pmf(&[0.7, 0.2, 0.1]);
        let q = pmf(&[0.2, 0.2, 0.6]);
        for n in 1..=7 {
            for lam in [-1.0, 0.0, 0.3, 0.9, 1.5] {
                let a = spectral_mass(&p, &q, n, lam).unwrap();
                let b = spectral_mass_enumerated(&p, &q, n, lam).unwrap();
                assert!((a - b).abs() < 1e-12, "n={n} lam={lam}");
            }
        }
    }
}
