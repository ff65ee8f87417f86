//! The random binning / covering code and its Monte-Carlo error estimate.
//!
//! * Encoder 1 sends the bin index of `x`; bins are assigned i.i.d. uniformly.
//! * Encoder 2 holds `M2` codewords drawn i.i.d. from `P_U` and sends the
//!   smallest index `k` with `(u(k), y) ∈ F`, or `1` if there is none.
//! * The decoder returns the unique `x'` in the received bin with
//!   `(x', u(k)) ∈ Supp(Q)`, where `Q` is the optimal smoothing of `P_XU`.
//!
//! `F = {(u, y) : g(u, y) ≤ √ε₁₁}` with `g(u, y) = Σ_x P(x|y)·1{(x,u) ∉ Supp(Q)}`.
//!
//! Indices exchanged between encoders and decoder are 1-based.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{compose_markov, Channel, JointPmf, Pmf};
use crate::region::{validate_budget, EpsilonBudget, RatePair};
use crate::rng::{CdfSampler, StreamRng, CODEBOOK_STREAM, PRNG_NAME, STREAM_RULE};
use crate::smooth::{check_epsilon, smooth_conditional_h0};

/// Largest bin count or codebook length the simulator will allocate.
pub const MAX_CODEBOOK: usize = 1 << 24;

/// Cells `(x, u)` kept by the optimal smoothing of `P_XU`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportSet {
    nx: usize,
    nu: usize,
    member: Vec<bool>,
}

impl SupportSet {
    pub fn contains(&self, x: usize, u: usize) -> bool {
        self.member[x * self.nu + u]
    }

    pub fn x_size(&self) -> usize {
        self.nx
    }

    pub fn u_size(&self) -> usize {
        self.nu
    }

    pub fn max_column_support(&self) -> usize {
        (0..self.nu)
            .map(|u| (0..self.nx).filter(|&x| self.contains(x, u)).count())
            .max()
            .unwrap_or(0)
    }
}

/// Support of the deterministic optimal `Q ∈ B^{ε₁₁}(P_XU)`.
pub fn build_support_set(p_xu: &JointPmf, eps11: f64) -> Result<SupportSet> {
    let h0 = smooth_conditional_h0(p_xu, eps11)?;
    Ok(SupportSet {
        nx: p_xu.shape()[0],
        nu: p_xu.shape()[1],
        member: h0.smoothing.mass().iter().map(|&m| m > 0.0).collect(),
    })
}

/// `g(u, y) = Σ_x P_{X|Y}(x|y)·1{(x,u) ∉ Supp(Q)}`; zero when `P_Y(y) = 0`.
pub fn g_value(u: usize, y: usize, p_xyu: &JointPmf, s: &SupportSet) -> f64 {
    let [nx, ny, nu] = p_xyu.shape()[..] else {
        panic!("g_value needs a joint over X×Y×U");
    };
    let mass = p_xyu.mass();
    let p_xy = |x: usize| -> f64 { (0..nu).map(|w| mass[(x * ny + y) * nu + w]).sum() };
    let column: Vec<f64> = (0..nx).map(p_xy).collect();
    let p_y: f64 = column.iter().sum();
    if p_y <= 0.0 {
        return 0.0;
    }
    column
        .iter()
        .enumerate()
        .filter(|&(x, _)| !s.contains(x, u))
        .map(|(_, m)| m / p_y)
        .sum()
}

/// Pairs `(u, y)` a codeword may cover: `g(u, y) ≤ √ε₁₁`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoveringSet {
    nu: usize,
    ny: usize,
    g: Vec<f64>,
    member: Vec<bool>,
}

impl CoveringSet {
    pub fn build(p_xyu: &JointPmf, s: &SupportSet, eps11: f64) -> Self {
        let (ny, nu) = (p_xyu.shape()[1], p_xyu.shape()[2]);
        let threshold = eps11.sqrt();
        let mut g = vec![0.0; nu * ny];
        for u in 0..nu {
            for y in 0..ny {
                g[u * ny + y] = g_value(u, y, p_xyu, s);
            }
        }
        let member = g.iter().map(|&v| v <= threshold).collect();
        Self { nu, ny, g, member }
    }

    /// Covering set from an explicit membership table indexed `[u * |Y| + y]`.
    pub fn from_membership(nu: usize, ny: usize, member: Vec<bool>) -> Self {
        assert_eq!(member.len(), nu * ny);
        Self {
            nu,
            ny,
            g: member.iter().map(|&m| if m { 0.0 } else { 1.0 }).collect(),
            member,
        }
    }

    pub fn contains(&self, u: usize, y: usize) -> bool {
        self.member[u * self.ny + y]
    }

    pub fn g(&self, u: usize, y: usize) -> f64 {
        self.g[u * self.ny + y]
    }

    pub fn u_size(&self) -> usize {
        self.nu
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Codebook {
    /// 1-based bin index of every source symbol.
    pub bin_of: Vec<usize>,
    pub bins: usize,
    /// Covering codewords; `u_words[k - 1]` is sent as index `k`.
    pub u_words: Vec<usize>,
    pub seed: u64,
}

impl Codebook {
    fn draw(rng: &mut StreamRng, nx: usize, bins: usize, p_u: &CdfSampler, words: usize, seed: u64) -> Self {
        let bin_of = (0..nx).map(|_| rng.below(bins as u64) as usize + 1).collect();
        let u_words = (0..words).map(|_| p_u.sample(rng)).collect();
        Self {
            bin_of,
            bins,
            u_words,
            seed,
        }
    }
}

/// `⌈2^rate⌉`, refusing sizes above [`MAX_CODEBOOK`].
pub fn codebook_size(rate_bits: f64, what: &str) -> Result<usize> {
    let size = rate_bits.exp2().ceil();
    if !(size <= MAX_CODEBOOK as f64) {
        return Err(Error::Resource {
            what: what.to_string(),
            required: if size.is_finite() { size as u128 } else { u128::MAX },
            cap: MAX_CODEBOOK as u128,
        });
    }
    Ok((size as usize).max(1))
}

/// Draws a codebook for rates `(r1, r2)` from stream [`CODEBOOK_STREAM`] of `seed`.
pub fn generate_code(p_xyu: &JointPmf, r1_bits: f64, r2_bits: f64, seed: u64) -> Result<Codebook> {
    let bins = codebook_size(r1_bits, "bin count")?;
    let words = codebook_size(r2_bits, "covering codebook")?;
    let p_u = CdfSampler::new(p_xyu.marginal(2).mass());
    let mut rng = StreamRng::new(seed, CODEBOOK_STREAM);
    Ok(Codebook::draw(&mut rng, p_xyu.shape()[0], bins, &p_u, words, seed))
}

/// Smallest 1-based `k` with `(u(k), y) ∈ F`, else 1.
pub fn encode_helper(y: usize, cb: &Codebook, f: &CoveringSet) -> usize {
    cover_index(y, cb, f).unwrap_or(1)
}

fn cover_index(y: usize, cb: &Codebook, f: &CoveringSet) -> Option<usize> {
    cb.u_words.iter().position(|&u| f.contains(u, y)).map(|k| k + 1)
}

pub fn encode_source(x: usize, cb: &Codebook) -> usize {
    cb.bin_of[x]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decoded {
    Symbol(usize),
    /// No unique candidate; `candidates` is 0 or at least 2.
    Failure {
        candidates: usize,
    },
}

pub fn decode(bin_index: usize, helper_index: usize, cb: &Codebook, s: &SupportSet) -> Decoded {
    let u = cb.u_words[helper_index - 1];
    let mut found = None;
    let mut candidates = 0;
    for (x, &bin) in cb.bin_of.iter().enumerate() {
        if bin == bin_index && s.contains(x, u) {
            candidates += 1;
            found = Some(x);
        }
    }
    match (candidates, found) {
        (1, Some(x)) => Decoded::Symbol(x),
        _ => Decoded::Failure { candidates },
    }
}

/// Samples `(x, y)` from `P_XY` and `u` from the helper channel.
#[derive(Clone, Debug)]
pub struct MarkovSampler {
    xy: CdfSampler,
    ny: usize,
    helper_rows: Vec<CdfSampler>,
}

impl MarkovSampler {
    pub fn new(p_xy: &JointPmf, helper: &Channel) -> Self {
        Self {
            xy: CdfSampler::new(p_xy.mass()),
            ny: p_xy.shape()[1],
            helper_rows: helper.rows().iter().map(|r| CdfSampler::new(r.mass())).collect(),
        }
    }

    pub fn sample_xy(&self, rng: &mut StreamRng) -> (usize, usize) {
        let cell = self.xy.sample(rng);
        (cell / self.ny, cell % self.ny)
    }

    pub fn sample_u(&self, y: usize, rng: &mut StreamRng) -> usize {
        self.helper_rows[y].sample(rng)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodebookMode {
    /// A fresh codebook every trial: estimates the error averaged over codebooks.
    #[default]
    Resampled,
    /// One codebook for all trials.
    Fixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub trials: u64,
    pub seed: u64,
    pub stream_base: u64,
    pub mode: CodebookMode,
    pub prng: String,
    pub stream_rule: String,
}

impl SimConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self {
            trials,
            seed,
            stream_base: 0,
            mode: CodebookMode::Resampled,
            prng: PRNG_NAME.to_string(),
            stream_rule: STREAM_RULE.to_string(),
        }
    }

    pub fn with_mode(mut self, mode: CodebookMode) -> Self {
        self.mode = mode;
        self
    }
}

/// What happened on one trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialOutcome {
    pub x: usize,
    pub y: usize,
    pub decoded: Decoded,
    /// No codeword covers `y`.
    pub e1: bool,
    /// `(x, u(M2)) ∉ Supp(Q)`.
    pub e2: bool,
    /// Another support-compatible symbol shares the bin of `x`.
    pub e3: bool,
}

impl TrialOutcome {
    pub fn is_error(&self) -> bool {
        self.decoded != Decoded::Symbol(self.x)
    }

    pub fn any_event(&self) -> bool {
        self.e1 || self.e2 || self.e3
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct Counts {
    trials: u64,
    errors: u64,
    e1: u64,
    e2: u64,
    e1c_e2: u64,
    e3: u64,
    covering_failures: u64,
    error_without_event: u64,
    event_without_error: u64,
}

impl Counts {
    fn record(t: &TrialOutcome) -> Self {
        let error = t.is_error();
        let any = t.any_event();
        Self {
            trials: 1,
            errors: error as u64,
            e1: t.e1 as u64,
            e2: t.e2 as u64,
            e1c_e2: (!t.e1 && t.e2) as u64,
            e3: t.e3 as u64,
            covering_failures: (t.e1 || t.e2) as u64,
            error_without_event: (error && !any) as u64,
            event_without_error: (!error && any) as u64,
        }
    }

    fn merge(self, o: Self) -> Self {
        Self {
            trials: self.trials + o.trials,
            errors: self.errors + o.errors,
            e1: self.e1 + o.e1,
            e2: self.e2 + o.e2,
            e1c_e2: self.e1c_e2 + o.e1c_e2,
            e3: self.e3 + o.e3,
            covering_failures: self.covering_failures + o.covering_failures,
            error_without_event: self.error_without_event + o.error_without_event,
            event_without_error: self.event_without_error + o.event_without_error,
        }
    }
}

/// Three standard deviations of a Bernoulli(`p`) frequency over `trials` draws.
pub fn three_sigma(p: f64, trials: u64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    3.0 * (p * (1.0 - p) / trials as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub config: SimConfig,
    pub budget: EpsilonBudget,
    pub r1_bits: f64,
    pub r2_bits: f64,
    pub bins: usize,
    pub codewords: usize,
    pub max_column_support: usize,
    pub divergence_bits: f64,
    pub trials: u64,
    pub errors_total: u64,
    pub e1_count: u64,
    /// Raw `E2` occurrences, including trials where `E1` also fired.
    pub e2_count: u64,
    pub e1c_e2_count: u64,
    pub e3_count: u64,
    /// Trials with `E1 ∪ (E1ᶜ ∩ E2)`.
    pub covering_failure_count: u64,
    /// Decoding failed although no error event fired; always 0 for a correct decoder.
    pub error_without_event: u64,
    /// An event fired but decoding still succeeded (only possible through `E1`).
    pub event_without_error: u64,
    pub empirical_error: f64,
    pub bound_eps: f64,
    /// `ε₁₁ + 2√ε₁₁`.
    pub smoothing_term: f64,
    /// `exp(−2^{r2}·2^{−D})`.
    pub exponential_term: f64,
    /// `2^{−r1}·max_u |Supp(Q(X|U=u))|`.
    pub binning_term: f64,
    pub within_eps: bool,
}

impl SimReport {
    pub fn e3_frequency(&self) -> f64 {
        self.e3_count as f64 / self.trials as f64
    }

    pub fn covering_failure_frequency(&self) -> f64 {
        self.covering_failure_count as f64 / self.trials as f64
    }

    /// The analytic bound on `Pr{E1} + Pr{E1ᶜ ∩ E2}`.
    pub fn covering_bound(&self) -> f64 {
        self.smoothing_term + self.exponential_term
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Everything a trial needs, fixed for a run.
pub struct CodeSetup {
    pub p_xyu: JointPmf,
    pub support: SupportSet,
    pub covering: CoveringSet,
    pub bins: usize,
    pub codewords: usize,
    sampler: MarkovSampler,
    p_u: CdfSampler,
}

impl CodeSetup {
    pub fn new(p_xy: &JointPmf, helper: &Channel, eps11: f64, r1_bits: f64, r2_bits: f64) -> Result<Self> {
        check_epsilon(eps11)?;
        let p_xyu = compose_markov(p_xy, helper)?;
        let support = build_support_set(&p_xyu.pair(0, 2)?, eps11)?;
        let covering = CoveringSet::build(&p_xyu, &support, eps11);
        let p_u: Pmf = p_xyu.marginal(2);
        Ok(Self {
            bins: codebook_size(r1_bits, "bin count")?,
            codewords: codebook_size(r2_bits, "covering codebook")?,
            sampler: MarkovSampler::new(p_xy, helper),
            p_u: CdfSampler::new(p_u.mass()),
            p_xyu,
            support,
            covering,
        })
    }

    fn draw_codebook(&self, rng: &mut StreamRng, seed: u64) -> Codebook {
        Codebook::draw(rng, self.support.x_size(), self.bins, &self.p_u, self.codewords, seed)
    }

    /// Runs one trial against `cb`, sampling the source from `rng`.
    pub fn trial(&self, cb: &Codebook, rng: &mut StreamRng) -> TrialOutcome {
        let (x, y) = self.sampler.sample_xy(rng);
        let covered = cover_index(y, cb, &self.covering);
        let k = covered.unwrap_or(1);
        let i = encode_source(x, cb);
        let decoded = decode(i, k, cb, &self.support);
        let u = cb.u_words[k - 1];
        let e3 = cb
            .bin_of
            .iter()
            .enumerate()
            .any(|(xp, &bin)| xp != x && bin == i && self.support.contains(xp, u));
        TrialOutcome {
            x,
            y,
            decoded,
            e1: covered.is_none(),
            e2: !self.support.contains(x, u),
            e3,
        }
    }

    /// Per-trial outcomes in trial order.
    pub fn run(&self, config: &SimConfig) -> Vec<TrialOutcome> {
        let fixed = (config.mode == CodebookMode::Fixed).then(|| {
            let mut rng = StreamRng::new(config.seed, config.stream_base ^ CODEBOOK_STREAM);
            self.draw_codebook(&mut rng, config.seed)
        });
        (0..config.trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = StreamRng::for_trial(config.seed, config.stream_base, t);
                match &fixed {
                    Some(cb) => self.trial(cb, &mut rng),
                    None => {
                        let cb = self.draw_codebook(&mut rng, config.seed);
                        self.trial(&cb, &mut rng)
                    }
                }
            })
            .collect()
    }
}

/// Monte-Carlo error estimate in the default resampled-codebook mode.
pub fn simulate(
    p_xy: &JointPmf,
    helper: &Channel,
    budget: &EpsilonBudget,
    rates: &RatePair,
    trials: u64,
    seed: u64,
) -> Result<SimReport> {
    simulate_with(p_xy, helper, budget, rates, &SimConfig::new(trials, seed))
}

pub fn simulate_with(
    p_xy: &JointPmf,
    helper: &Channel,
    budget: &EpsilonBudget,
    rates: &RatePair,
    config: &SimConfig,
) -> Result<SimReport> {
    let check = validate_budget(budget, rates.witness.divergence_bits);
    if !check.valid {
        return Err(Error::Constraint(check.diagnostics));
    }
    if config.trials == 0 {
        return Err(Error::Usage("simulation needs at least one trial".into()));
    }
    let setup = CodeSetup::new(p_xy, helper, budget.eps11, rates.r1_bits, rates.r2_bits)?;
    let counts = setup
        .run(config)
        .iter()
        .map(Counts::record)
        .fold(Counts::default(), Counts::merge);

    let max_support = setup.support.max_column_support();
    let empirical_error = counts.errors as f64 / counts.trials as f64;
    Ok(SimReport {
        config: config.clone(),
        budget: *budget,
        r1_bits: rates.r1_bits,
        r2_bits: rates.r2_bits,
        bins: setup.bins,
        codewords: setup.codewords,
        max_column_support: max_support,
        divergence_bits: rates.witness.divergence_bits,
        trials: counts.trials,
        errors_total: counts.errors,
        e1_count: counts.e1,
        e2_count: counts.e2,
        e1c_e2_count: counts.e1c_e2,
        e3_count: counts.e3,
        covering_failure_count: counts.covering_failures,
        error_without_event: counts.error_without_event,
        event_without_error: counts.event_without_error,
        empirical_error,
        bound_eps: budget.eps,
        smoothing_term: budget.smoothing_term(),
        exponential_term: (-(rates.r2_bits - rates.witness.divergence_bits).exp2()).exp(),
        binning_term: (-rates.r1_bits).exp2() * max_support as f64,
        within_eps: empirical_error <= budget.eps + three_sigma(budget.eps, counts.trials),
    })
}
