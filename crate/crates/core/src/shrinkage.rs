//! Coefficient shrinkage for wavelet detail coefficients.
//!
//! Five methods are available: the Bayesian posterior-mean rule under a
//! point-mass plus logistic prior, and four thresholding rules (universal,
//! SURE, Gaussian-quantile "probability", and two-fold cross-validation).
//! Scaling coefficients are never touched.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::quadrature::GaussHermite;
use crate::wavelet::{dwt, idwt, WaveletDecomposition, WaveletFilter};

/// MAD normalizing constant for Gaussian noise.
pub const MAD_NORMALIZER: f64 = 0.6745;

/// Logistic prior scale used when none is supplied.
pub const DEFAULT_TAU: f64 = 5.0;

/// Shortest signal accepted by [`cv_threshold`].
pub const CV_MIN_LEN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Bayesian,
    Universal,
    Sure,
    Probability,
    Cv,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Bayesian => "bayesian",
            Method::Universal => "universal",
            Method::Sure => "sure",
            Method::Probability => "probability",
            Method::Cv => "cv",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bayesian" => Ok(Method::Bayesian),
            "universal" => Ok(Method::Universal),
            "sure" => Ok(Method::Sure),
            "probability" => Ok(Method::Probability),
            "cv" => Ok(Method::Cv),
            _ => Err(Error::InvalidParameter {
                name: "method",
                reason: format!("'{s}' is not one of bayesian, universal, sure, probability, cv"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleType {
    Soft,
    Hard,
}

impl RuleType {
    pub fn as_str(self) -> &'static str {
        match self {
            RuleType::Soft => "soft",
            RuleType::Hard => "hard",
        }
    }

    pub fn apply(self, d: f64, lambda: f64) -> f64 {
        match self {
            RuleType::Soft => soft_threshold(d, lambda),
            RuleType::Hard => hard_threshold(d, lambda),
        }
    }
}

impl std::str::FromStr for RuleType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "soft" => Ok(RuleType::Soft),
            "hard" => Ok(RuleType::Hard),
            _ => Err(Error::InvalidParameter {
                name: "type",
                reason: format!("'{s}' is not one of soft, hard"),
            }),
        }
    }
}

/// Everything that configures a shrinkage run.
#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkageSpec {
    pub method: Method,
    /// Only used by the non-Bayesian methods.
    pub rule_type: RuleType,
    /// Logistic prior scale.
    pub tau: f64,
    /// Global mixture mass; `None` selects the level-dependent default.
    pub p: Option<f64>,
    /// Noise scale; `None` selects the MAD estimate.
    pub sigma: Option<f64>,
    /// Monte Carlo instead of Gauss–Hermite for the Bayesian integrals.
    pub mc: bool,
    pub mc_samples: usize,
    pub quad_nodes: usize,
    /// Two-sided test level of the probability method.
    pub alpha_prob: f64,
    pub seed: u64,
    /// Estimate the noise scale from the finest level of every sample
    /// instead of the first sample only.
    pub pooled_sigma: bool,
}

impl Default for ShrinkageSpec {
    fn default() -> Self {
        Self {
            method: Method::Bayesian,
            rule_type: RuleType::Soft,
            tau: DEFAULT_TAU,
            p: None,
            sigma: None,
            mc: false,
            mc_samples: 10_000,
            quad_nodes: 64,
            alpha_prob: 0.05,
            seed: 0,
            pooled_sigma: false,
        }
    }
}

impl ShrinkageSpec {
    pub fn with_method(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(invalid("tau", format!("must be positive, got {}", self.tau)));
        }
        if let Some(p) = self.p {
            if !(p > 0.0 && p < 1.0) {
                return Err(invalid("p", format!("must lie in (0, 1), got {p}")));
            }
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(invalid("sigma", format!("must be positive, got {s}")));
            }
        }
        if self.mc_samples == 0 {
            return Err(invalid("mc_samples", "must be positive".into()));
        }
        if self.quad_nodes == 0 {
            return Err(invalid("quad_nodes", "must be positive".into()));
        }
        if !(self.alpha_prob > 0.0 && self.alpha_prob < 1.0) {
            return Err(invalid(
                "alpha_prob",
                format!("must lie in (0, 1), got {}", self.alpha_prob),
            ));
        }
        Ok(())
    }
}

fn invalid(name: &'static str, reason: String) -> Error {
    Error::InvalidParameter { name, reason }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaProvenance {
    UserSupplied,
    MadEstimated,
}

impl SigmaProvenance {
    pub fn as_str(self) -> &'static str {
        match self {
            SigmaProvenance::UserSupplied => "user_supplied",
            SigmaProvenance::MadEstimated => "mad_estimated",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseScale {
    pub sigma_hat: f64,
    pub provenance: SigmaProvenance,
}

impl NoiseScale {
    pub fn user_supplied(sigma: f64) -> Self {
        Self {
            sigma_hat: sigma,
            provenance: SigmaProvenance::UserSupplied,
        }
    }
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// `median |d| / 0.6745` over the finest detail coefficients.
pub fn estimate_sigma(finest_details: &[f64]) -> Result<NoiseScale> {
    if finest_details.is_empty() {
        return Err(Error::EmptyInput("estimate_sigma"));
    }
    let abs: Vec<f64> = finest_details.iter().map(|d| d.abs()).collect();
    Ok(NoiseScale {
        sigma_hat: median(abs) / MAD_NORMALIZER,
        provenance: SigmaProvenance::MadEstimated,
    })
}

/// Level-dependent prior mass at zero, `1 - 1/(j - j0 + 1)^2`.
pub fn level_mass(j: usize, j0: usize) -> Result<f64> {
    if j < j0 {
        return Err(Error::LevelOutOfRange { j0, depth: j });
    }
    let r = (j - j0 + 1) as f64;
    Ok(1.0 - 1.0 / (r * r))
}

/// Logistic density with scale `tau`, evaluated in the form that cannot
/// overflow: `e / (tau (1 + e)^2)` with `e = exp(-|theta| / tau)`.
pub fn logistic_prior_density(theta: f64, tau: f64) -> f64 {
    let e = (-theta.abs() / tau).exp();
    e / (tau * (1.0 + e) * (1.0 + e))
}

fn log_logistic_density(theta: f64, tau: f64) -> f64 {
    let z = theta.abs() / tau;
    -z - tau.ln() - 2.0 * (-z).exp().ln_1p()
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Abscissae for expectations under N(0, 1), stored as symmetric pairs
/// `+u, -u` sharing log-weight `log_w`, plus an optional node at zero.
#[derive(Debug, Clone)]
struct SymmetricNodes {
    pairs: Vec<(f64, f64)>,
    center: Option<f64>,
}

impl SymmetricNodes {
    fn quadrature(gh: &GaussHermite) -> Self {
        let n = gh.nodes().len();
        let pairs = (0..n / 2)
            .map(|i| (gh.nodes()[n - 1 - i], gh.weights()[n - 1 - i].ln()))
            .collect();
        let center = (n % 2 == 1).then(|| gh.weights()[n / 2].ln());
        Self { pairs, center }
    }

    /// `samples` Monte Carlo draws as antithetic pairs (rounded up to even).
    fn antithetic(samples: usize, seed: u64) -> Self {
        let count = samples.div_ceil(2);
        let log_w = -((2 * count) as f64).ln();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pairs = (0..count)
            .map(|_| {
                let u: f64 = StandardNormal.sample(&mut rng);
                (u, log_w)
            })
            .collect();
        Self { pairs, center: None }
    }
}

/// How the Bayesian integrals against the standard normal are evaluated.
#[derive(Debug, Clone)]
enum Integrator {
    Quadrature(SymmetricNodes),
    MonteCarlo { samples: usize, seed: u64 },
}

/// Posterior-mean shrinkage with fixed `(sigma, tau)` and integrator.
#[derive(Debug, Clone)]
pub struct BayesRule {
    sigma: f64,
    tau: f64,
    integrator: Integrator,
}

fn mix_seed(mut z: u64) -> u64 {
    // splitmix64 finalizer
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a base seed and a coordinate.
pub fn derive_seed(base: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(mix_seed(base), |acc, &c| mix_seed(acc ^ mix_seed(c)))
}

impl BayesRule {
    pub fn new(sigma: f64, tau: f64, spec: &ShrinkageSpec) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid("sigma", format!("must be positive, got {sigma}")));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(invalid("tau", format!("must be positive, got {tau}")));
        }
        let integrator = if spec.mc {
            if spec.mc_samples == 0 {
                return Err(invalid("mc_samples", "must be positive".into()));
            }
            Integrator::MonteCarlo {
                samples: spec.mc_samples,
                seed: spec.seed,
            }
        } else {
            Integrator::Quadrature(SymmetricNodes::quadrature(&GaussHermite::new(spec.quad_nodes)?))
        };
        Ok(Self { sigma, tau, integrator })
    }

    /// Posterior mean of the coefficient given observation `d` and prior
    /// mass `p` at zero. `stream` selects the Monte Carlo substream and is
    /// ignored under quadrature.
    pub fn shrink(&self, d: f64, p: f64, stream: u64) -> Result<f64> {
        let (sigma, tau) = (self.sigma, self.tau);
        let fail = || Error::NonFiniteShrinkage { d, sigma, tau, p };
        if !d.is_finite() || !(0.0..1.0).contains(&p) {
            return Err(fail());
        }
        // Terms are accumulated in log space relative to the largest term of
        // the marginal density so that huge |d| neither overflows nor
        // underflows to 0/0.
        let log_slab = (1.0 - p).ln();
        let z = d / sigma;
        let log_spike = if p > 0.0 {
            p.ln() - sigma.ln() - 0.5 * z * z - LN_SQRT_2PI
        } else {
            f64::NEG_INFINITY
        };
        let sampled;
        let nodes: &SymmetricNodes = match &self.integrator {
            Integrator::Quadrature(nodes) => nodes,
            Integrator::MonteCarlo { samples, seed } => {
                sampled = SymmetricNodes::antithetic(*samples, derive_seed(*seed, &[stream]));
                &sampled
            }
        };
        // (theta, log term) for +u and -u of every pair; the pair structure
        // makes the rule exactly odd in d
        let terms: Vec<[(f64, f64); 2]> = nodes
            .pairs
            .iter()
            .map(|&(u, log_w)| {
                let lo = log_slab + log_w;
                let plus = sigma * u + d;
                let minus = -sigma * u + d;
                [
                    (plus, lo + log_logistic_density(plus, tau)),
                    (minus, lo + log_logistic_density(minus, tau)),
                ]
            })
            .collect();
        let center = nodes
            .center
            .map(|log_w| log_slab + log_w + log_logistic_density(d, tau));
        let shift = terms
            .iter()
            .flatten()
            .map(|t| t.1)
            .chain(center)
            .fold(log_spike, f64::max);
        if !shift.is_finite() {
            return Err(fail());
        }
        let mut numerator = 0.0;
        let mut denominator = (log_spike - shift).exp();
        if let Some(lt) = center {
            let t = (lt - shift).exp();
            numerator += d * t;
            denominator += t;
        }
        for [(th_p, lt_p), (th_m, lt_m)] in terms {
            let (t_p, t_m) = ((lt_p - shift).exp(), (lt_m - shift).exp());
            numerator += th_p * t_p + th_m * t_m;
            denominator += t_p + t_m;
        }
        let value = numerator / denominator;
        if value.is_finite() {
            Ok(value)
        } else {
            Err(fail())
        }
    }
}

/// One-off posterior-mean shrinkage of a single coefficient.
pub fn bayes_shrink(d: f64, sigma: f64, tau: f64, p: f64, spec: &ShrinkageSpec) -> Result<f64> {
    BayesRule::new(sigma, tau, spec)?.shrink(d, p, 0)
}

pub fn soft_threshold(d: f64, lambda: f64) -> f64 {
    let m = d.abs() - lambda;
    if m > 0.0 {
        m.copysign(d)
    } else {
        0.0
    }
}

pub fn hard_threshold(d: f64, lambda: f64) -> f64 {
    if d.abs() > lambda {
        d
    } else {
        0.0
    }
}

/// `sigma * sqrt(2 ln m)`.
pub fn universal_threshold(sigma: f64, m: usize) -> f64 {
    sigma * (2.0 * (m.max(1) as f64).ln()).sqrt()
}

/// `sigma * Phi^{-1}(1 - alpha / 2)`.
pub fn probability_threshold(sigma: f64, alpha_prob: f64) -> Result<f64> {
    if !(alpha_prob > 0.0 && alpha_prob < 1.0) {
        return Err(invalid("alpha_prob", format!("must lie in (0, 1), got {alpha_prob}")));
    }
    let normal = Normal::standard();
    Ok(sigma * normal.inverse_cdf(1.0 - alpha_prob / 2.0).max(0.0))
}

/// SURE-minimizing threshold for data already divided by the noise scale.
///
/// Risk `n - 2 #{|x_i| <= t} + sum_i min(x_i^2, t^2)` is evaluated at every
/// candidate in `{0} U {|x_i|}`; ties go to the smallest candidate.
pub fn sure_threshold(standardized: &[f64]) -> Result<f64> {
    if standardized.is_empty() {
        return Err(Error::EmptyInput("sure_threshold"));
    }
    let n = standardized.len();
    let mut a: Vec<f64> = standardized.iter().map(|x| x.abs()).collect();
    a.sort_by(f64::total_cmp);

    let zeros = a.iter().take_while(|&&v| v == 0.0).count();
    let mut best_t = 0.0;
    let mut best_risk = n as f64 - 2.0 * zeros as f64;

    let mut below_sq = 0.0;
    let mut i = 0;
    while i < n {
        let t = a[i];
        // absorb the whole run of equal values so the count is #{a <= t}
        let mut j = i;
        while j < n && a[j] == t {
            below_sq += a[j] * a[j];
            j += 1;
        }
        let risk = n as f64 - 2.0 * j as f64 + below_sq + (n - j) as f64 * t * t;
        if risk < best_risk {
            best_risk = risk;
            best_t = t;
        }
        i = j;
    }
    Ok(best_t)
}

fn threshold_details(decomp: &mut WaveletDecomposition, lambda: f64, rule: RuleType) {
    for level in &mut decomp.details {
        for d in level.iter_mut() {
            *d = rule.apply(*d, lambda);
        }
    }
}

fn denoise_half(half: &[f64], filter: &WaveletFilter, lambda: f64, rule: RuleType) -> Result<Vec<f64>> {
    let mut decomp = dwt(half, filter, 0)?;
    threshold_details(&mut decomp, lambda, rule);
    idwt(&decomp, filter)
}

/// Two-fold cross-validation score at threshold `lambda`.
fn cv_score(even: &[f64], odd: &[f64], filter: &WaveletFilter, lambda: f64, rule: RuleType) -> Result<f64> {
    let n = even.len();
    let fit_even = denoise_half(even, filter, lambda, rule)?;
    let fit_odd = denoise_half(odd, filter, lambda, rule)?;
    let mut score = 0.0;
    for i in 0..n {
        // odd sample 2i+1 sits between even samples 2i and 2i+2
        let pred_odd = 0.5 * (fit_even[i] + fit_even[(i + 1) % n]);
        // even sample 2i sits between odd samples 2i-1 and 2i+1
        let pred_even = 0.5 * (fit_odd[(i + n - 1) % n] + fit_odd[i]);
        score += (pred_odd - odd[i]).powi(2) + (pred_even - even[i]).powi(2);
    }
    Ok(score)
}

/// Threshold chosen by two-fold (even/odd) cross-validation.
///
/// The half-length threshold is found by golden-section search on
/// `[0, sigma_hat * sqrt(2 ln M)]` and then rescaled to the full length by
/// `(1 - ln 2 / ln M)^(-1/2)`.
pub fn cv_threshold(signal: &[f64], filter: &WaveletFilter, rule: RuleType) -> Result<f64> {
    let m = signal.len();
    if m < CV_MIN_LEN {
        return Err(Error::SignalTooShort {
            len: m,
            min: CV_MIN_LEN,
        });
    }
    let depth = crate::wavelet::dyadic_depth(m)?;
    let sigma = estimate_sigma(dwt(signal, filter, depth - 1)?.finest())?.sigma_hat;
    let upper = universal_threshold(sigma, m);
    let correction = (1.0 - std::f64::consts::LN_2 / (m as f64).ln()).powf(-0.5);
    if upper <= 0.0 {
        return Ok(0.0);
    }

    let even: Vec<f64> = signal.iter().step_by(2).copied().collect();
    let odd: Vec<f64> = signal.iter().skip(1).step_by(2).copied().collect();
    let score = |t: f64| cv_score(&even, &odd, filter, t, rule);

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0, upper);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = score(x1)?;
    let mut f2 = score(x2)?;
    while hi - lo > 1e-8 * upper {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = score(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = score(x2)?;
        }
    }
    let best = 0.5 * (lo + hi);
    Ok(best * correction)
}

/// Threshold or prior mass used at one detail level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelSetting {
    pub level: usize,
    pub threshold: Option<f64>,
    pub mass: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkageOutcome {
    pub decomposition: WaveletDecomposition,
    pub levels: Vec<LevelSetting>,
}

/// A shrinkage configuration bound to a noise scale and filter, reusable
/// across many decompositions.
#[derive(Debug, Clone)]
pub struct Shrinker<'a> {
    spec: &'a ShrinkageSpec,
    noise: NoiseScale,
    filter: &'a WaveletFilter,
    bayes: Option<BayesRule>,
}

impl<'a> Shrinker<'a> {
    pub fn new(spec: &'a ShrinkageSpec, noise: NoiseScale, filter: &'a WaveletFilter) -> Result<Self> {
        spec.validate()?;
        if !(noise.sigma_hat >= 0.0 && noise.sigma_hat.is_finite()) {
            return Err(invalid("sigma", format!("noise scale {} is invalid", noise.sigma_hat)));
        }
        let bayes = if spec.method == Method::Bayesian && noise.sigma_hat > 0.0 {
            Some(BayesRule::new(noise.sigma_hat, spec.tau, spec)?)
        } else {
            None
        };
        Ok(Self {
            spec,
            noise,
            filter,
            bayes,
        })
    }

    /// Shrinks the detail coefficients of `decomp`. `stream` distinguishes
    /// decompositions (e.g. sample columns) for Monte Carlo seeding.
    pub fn apply(&self, decomp: &WaveletDecomposition, stream: u64) -> Result<ShrinkageOutcome> {
        decomp.validate()?;
        let sigma = self.noise.sigma_hat;
        let m = decomp.len();
        let mut out = decomp.clone();
        let mut levels = Vec::with_capacity(decomp.details.len());
        match self.spec.method {
            Method::Bayesian => {
                for (j, level) in decomp.levels().zip(out.details.iter_mut()) {
                    let p = match self.spec.p {
                        Some(p) => p,
                        None => level_mass(j, decomp.coarsest)?,
                    };
                    levels.push(LevelSetting {
                        level: j,
                        threshold: None,
                        mass: Some(p),
                    });
                    // zero noise: the posterior mean is the observation itself
                    let Some(rule) = &self.bayes else { continue };
                    for (k, d) in level.iter_mut().enumerate() {
                        *d = rule.shrink(*d, p, derive_seed(stream, &[j as u64, k as u64]))?;
                    }
                }
            }
            Method::Universal | Method::Probability | Method::Cv => {
                let lambda = match self.spec.method {
                    Method::Universal => universal_threshold(sigma, m),
                    Method::Probability => probability_threshold(sigma, self.spec.alpha_prob)?,
                    _ => cv_threshold(&idwt(decomp, self.filter)?, self.filter, self.spec.rule_type)?,
                };
                for (j, level) in decomp.levels().zip(out.details.iter_mut()) {
                    levels.push(LevelSetting {
                        level: j,
                        threshold: Some(lambda),
                        mass: None,
                    });
                    for d in level.iter_mut() {
                        *d = self.spec.rule_type.apply(*d, lambda);
                    }
                }
            }
            Method::Sure => {
                for (j, level) in decomp.levels().zip(out.details.iter_mut()) {
                    let lambda = if sigma > 0.0 {
                        let standardized: Vec<f64> = level.iter().map(|d| d / sigma).collect();
                        sure_threshold(&standardized)? * sigma
                    } else {
                        0.0
                    };
                    levels.push(LevelSetting {
                        level: j,
                        threshold: Some(lambda),
                        mass: None,
                    });
                    for d in level.iter_mut() {
                        *d = self.spec.rule_type.apply(*d, lambda);
                    }
                }
            }
        }
        Ok(ShrinkageOutcome {
            decomposition: out,
            levels,
        })
    }
}

/// Convenience wrapper around [`Shrinker`] for a single decomposition.
pub fn apply_shrinkage(
    decomp: &WaveletDecomposition,
    spec: &ShrinkageSpec,
    noise: NoiseScale,
    filter: &WaveletFilter,
) -> Result<ShrinkageOutcome> {
    Shrinker::new(spec, noise, filter)?.apply(decomp, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelet::make_filter;
    use rand::Rng;

    fn spec_mc(samples: usize, seed: u64) -> ShrinkageSpec {
        ShrinkageSpec {
            mc: true,
            mc_samples: samples,
            seed,
            ..ShrinkageSpec::default()
        }
    }

    fn normal_vec(n: usize, sd: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                sd * z
            })
            .collect()
    }

    /// Adaptive Simpson, independent of the Gauss–Hermite machinery.
    fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
        #[allow(clippy::too_many_arguments)]
        fn rec<F: Fn(f64) -> f64>(
            f: &F,
            a: f64,
            b: f64,
            fa: f64,
            fm: f64,
            fb: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                    + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
            }
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, tol, 50)
    }

    #[test]
    fn sigma_from_mad() {
        let v: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 0.6745 } else { -0.6745 }).collect();
        let s = estimate_sigma(&v).unwrap();
        assert_eq!(s.sigma_hat, 1.0);
        assert_eq!(s.provenance, SigmaProvenance::MadEstimated);
        assert_eq!(estimate_sigma(&[0.0; 7]).unwrap().sigma_hat, 0.0);
        assert!(matches!(estimate_sigma(&[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn sigma_tracks_generating_scale() {
        let mean: f64 = (0..20)
            .map(|seed| estimate_sigma(&normal_vec(512, 2.0, seed)).unwrap().sigma_hat)
            .sum::<f64>()
            / 20.0;
        assert!((mean - 2.0).abs() < 0.2, "mean sigma_hat {mean}");
    }

    #[test]
    fn sigma_is_scale_equivariant() {
        let v = normal_vec(101, 1.0, 9);
        let base = estimate_sigma(&v).unwrap().sigma_hat;
        for c in [-3.0, 0.5, 8.0] {
            let scaled: Vec<f64> = v.iter().map(|x| c * x).collect();
            let s = estimate_sigma(&scaled).unwrap().sigma_hat;
            assert!((s - c.abs() * base).abs() <= 4.0 * f64::EPSILON * s);
        }
    }

    #[test]
    fn level_mass_values() {
        assert_eq!(level_mass(2, 2).unwrap(), 0.0);
        assert_eq!(level_mass(3, 2).unwrap(), 0.75);
        assert_eq!(level_mass(5, 2).unwrap(), 0.9375);
        assert!(level_mass(1, 2).is_err());
    }

    #[test]
    fn logistic_density_shape() {
        for tau in [0.3, 1.0, 5.0] {
            assert!((logistic_prior_density(0.0, tau) - 0.25 / tau).abs() < 1e-15);
        }
        for theta in [-7.0, -0.3, 1.2, 40.0] {
            assert_eq!(logistic_prior_density(theta, 2.0), logistic_prior_density(-theta, 2.0));
        }
        let big = logistic_prior_density(700.0, 1.0);
        assert!(big.is_finite() && big >= 0.0);
        assert!(logistic_prior_density(-700.0, 1.0).is_finite());
        let total = adaptive_simpson(&|t| logistic_prior_density(t, 2.0), -200.0, 200.0, 1e-12);
        assert!((total - 1.0).abs() < 1e-8, "integral {total}");
    }

    #[test]
    fn log_density_matches_density() {
        for theta in [-30.0, -1.0, 0.0, 0.5, 12.0] {
            let a = log_logistic_density(theta, 1.7).exp();
            let b = logistic_prior_density(theta, 1.7);
            assert!((a - b).abs() <= 1e-13 * b);
        }
    }

    #[test]
    fn bayes_zero_and_point_mass_limit() {
        let spec = ShrinkageSpec::default();
        for (sigma, tau, p) in [(1.0, 5.0, 0.3), (0.2, 1.0, 0.9), (3.0, 0.5, 0.0)] {
            assert!(bayes_shrink(0.0, sigma, tau, p, &spec).unwrap().abs() < 1e-14);
        }
        for d in [-4.0, 0.5, 3.0] {
            let mut last = f64::INFINITY;
            for eps in [1e-2, 1e-4, 1e-8, 1e-12] {
                let v = bayes_shrink(d, 1.0, 5.0, 1.0 - eps, &spec).unwrap().abs();
                assert!(v < last, "d={d} eps={eps}");
                last = v;
            }
            assert!(last < 1e-7, "d={d} v={last}");
        }
    }

    #[test]
    fn bayes_handles_extreme_observations() {
        let spec = ShrinkageSpec::default();
        for d in [1e3, -1e4, 5e5] {
            let v = bayes_shrink(d, 1.0, 1.0, 0.5, &spec).unwrap();
            assert!(v.is_finite());
            assert!((v - d).abs() < 2.0, "d={d} v={v}");
        }
    }

    #[test]
    fn quadrature_agrees_with_monte_carlo() {
        let quad = ShrinkageSpec::default();
        let mc = spec_mc(100_000, 17);
        for d in [1.0, 3.0, 5.0] {
            let a = bayes_shrink(d, 1.0, 5.0, 0.75, &quad).unwrap();
            let b = bayes_shrink(d, 1.0, 5.0, 0.75, &mc).unwrap();
            assert!(((a - b) / a).abs() < 0.02, "d={d}: {a} vs {b}");
        }
    }

    #[test]
    fn monte_carlo_is_seed_deterministic() {
        let spec = spec_mc(2_000, 5);
        let rule = BayesRule::new(1.0, 2.0, &spec).unwrap();
        assert_eq!(rule.shrink(2.5, 0.5, 11).unwrap(), rule.shrink(2.5, 0.5, 11).unwrap());
        assert_ne!(rule.shrink(2.5, 0.5, 11).unwrap(), rule.shrink(2.5, 0.5, 12).unwrap());
    }

    #[test]
    fn thresholds_basic() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(-2.5, 1.0), -1.5);
        assert_eq!(soft_threshold(1.7, 0.0), 1.7);
        assert_eq!(hard_threshold(3.0, 1.0), 3.0);
        assert_eq!(hard_threshold(0.5, 1.0), 0.0);
        assert_eq!(hard_threshold(-1.5, 1.0), -1.5);
    }

    #[test]
    fn universal_values() {
        assert_eq!(universal_threshold(0.0, 1024), 0.0);
        assert_eq!(universal_threshold(3.0, 1), 0.0);
        // 2 * sqrt(2 * 10 ln 2)
        let expected = 2.0 * (20.0 * std::f64::consts::LN_2).sqrt();
        assert!((universal_threshold(2.0, 1024) - expected).abs() < 1e-12);
        assert!((universal_threshold(2.0, 1024) - 7.446595).abs() < 5e-6);
    }

    #[test]
    fn probability_values() {
        assert_eq!(probability_threshold(0.0, 0.05).unwrap(), 0.0);
        assert!((probability_threshold(1.0, 0.05).unwrap() - 1.959964).abs() < 5e-6);
        assert!(probability_threshold(1.0, 1.0 - 1e-12).unwrap() < 1e-9);
        assert!(probability_threshold(1.0, 0.0).is_err());
    }

    fn sure_risk(x: &[f64], t: f64) -> f64 {
        let n = x.len() as f64;
        let below = x.iter().filter(|v| v.abs() <= t).count() as f64;
        n - 2.0 * below + x.iter().map(|v| (v * v).min(t * t)).sum::<f64>()
    }

    fn sure_brute(x: &[f64]) -> f64 {
        let mut candidates: Vec<f64> = std::iter::once(0.0).chain(x.iter().map(|v| v.abs())).collect();
        candidates.sort_by(f64::total_cmp);
        let mut best = (f64::INFINITY, 0.0);
        for t in candidates {
            let r = sure_risk(x, t);
            if r < best.0 {
                best = (r, t);
            }
        }
        best.1
    }

    #[test]
    fn sure_edge_cases() {
        assert_eq!(sure_threshold(&[0.0; 9]).unwrap(), 0.0);
        let mut spike = vec![0.0; 16];
        spike[0] = 10.0;
        // risk at 0 is 16 - 2*15 = -14, at 10 it is 16 - 32 + 100 = 84
        let t = sure_threshold(&spike).unwrap();
        assert_eq!(t, sure_brute(&spike));
        assert_eq!(t, 0.0);
        assert!(sure_threshold(&[]).is_err());
    }

    #[test]
    fn sure_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..300 {
            let n = rng.random_range(1..=64);
            let spread = rng.random_range(0.1..4.0);
            let x: Vec<f64> = normal_vec(n, spread, rng.random());
            assert_eq!(sure_threshold(&x).unwrap(), sure_brute(&x));
        }
        // duplicated magnitudes
        let x = [1.0, -1.0, 1.0, 0.2, -3.0, 3.0];
        assert_eq!(sure_threshold(&x).unwrap(), sure_brute(&x));
    }

    #[test]
    fn cv_tracks_universal_on_noise() {
        let f = make_filter("daub4").unwrap();
        let mut ratios: Vec<f64> = (0..20)
            .map(|seed| {
                let x = normal_vec(1024, 1.0, 1000 + seed);
                cv_threshold(&x, &f, RuleType::Soft).unwrap() / universal_threshold(1.0, 1024)
            })
            .collect();
        ratios.sort_by(f64::total_cmp);
        let med = 0.5 * (ratios[9] + ratios[10]);
        assert!((0.5..=1.5).contains(&med), "median ratio {med}");
    }

    #[test]
    fn cv_small_on_noiseless_smooth_signal() {
        let f = make_filter("daub4").unwrap();
        let m = 1024;
        let x: Vec<f64> = (0..m)
            .map(|i| (2.0 * std::f64::consts::PI * 3.0 * i as f64 / m as f64).sin())
            .collect();
        let lambda = cv_threshold(&x, &f, RuleType::Soft).unwrap();
        let sigma = estimate_sigma(dwt(&x, &f, 9).unwrap().finest()).unwrap().sigma_hat;
        assert!(
            lambda <= 0.1 * universal_threshold(sigma, m).max(f64::MIN_POSITIVE),
            "lambda {lambda} sigma {sigma}"
        );
    }

    #[test]
    fn cv_deterministic_and_length_checked() {
        let f = make_filter("haar").unwrap();
        let x = normal_vec(64, 1.0, 4);
        assert_eq!(
            cv_threshold(&x, &f, RuleType::Hard).unwrap(),
            cv_threshold(&x, &f, RuleType::Hard).unwrap()
        );
        assert!(matches!(
            cv_threshold(&x[..4], &f, RuleType::Soft),
            Err(Error::SignalTooShort { .. })
        ));
    }

    fn sample_decomp(seed: u64) -> WaveletDecomposition {
        let f = make_filter("daub2").unwrap();
        let x: Vec<f64> = normal_vec(64, 1.0, seed)
            .iter()
            .enumerate()
            .map(|(i, e)| e + if i > 30 { 5.0 } else { 0.0 })
            .collect();
        dwt(&x, &f, 1).unwrap()
    }

    #[test]
    fn universal_with_zero_sigma_is_identity() {
        let f = make_filter("daub2").unwrap();
        let d = sample_decomp(1);
        let out = apply_shrinkage(
            &d,
            &ShrinkageSpec::with_method(Method::Universal),
            NoiseScale::user_supplied(0.0),
            &f,
        )
        .unwrap();
        assert_eq!(out.decomposition, d);
    }

    #[test]
    fn bayesian_default_mass_is_level_dependent() {
        let f = make_filter("daub2").unwrap();
        let d = sample_decomp(2);
        let out = apply_shrinkage(&d, &ShrinkageSpec::default(), NoiseScale::user_supplied(1.0), &f).unwrap();
        assert_eq!(out.levels[0].level, 1);
        assert_eq!(out.levels[0].mass, Some(0.0));
        assert_eq!(out.levels[1].mass, Some(0.75));
        let global = ShrinkageSpec {
            p: Some(0.4),
            ..ShrinkageSpec::default()
        };
        let out = apply_shrinkage(&d, &global, NoiseScale::user_supplied(1.0), &f).unwrap();
        assert!(out.levels.iter().all(|l| l.mass == Some(0.4)));
    }

    #[test]
    fn zero_details_unchanged_and_scaling_untouched() {
        let f = make_filter("daub2").unwrap();
        let mut zero = sample_decomp(3);
        for l in &mut zero.details {
            l.iter_mut().for_each(|v| *v = 0.0);
        }
        let noisy = sample_decomp(4);
        for method in [
            Method::Bayesian,
            Method::Universal,
            Method::Sure,
            Method::Probability,
            Method::Cv,
        ] {
            for rule_type in [RuleType::Soft, RuleType::Hard] {
                let spec = ShrinkageSpec {
                    method,
                    rule_type,
                    ..ShrinkageSpec::default()
                };
                let out = apply_shrinkage(&zero, &spec, NoiseScale::user_supplied(1.0), &f).unwrap();
                assert_eq!(out.decomposition.details, zero.details, "{method:?}");
                let out = apply_shrinkage(&noisy, &spec, NoiseScale::user_supplied(1.0), &f).unwrap();
                assert_eq!(out.decomposition.scaling, noisy.scaling, "{method:?}");
                assert_eq!(out.levels.len(), noisy.details.len());
            }
        }
    }

    #[test]
    fn sure_thresholds_per_level() {
        let f = make_filter("daub2").unwrap();
        let d = sample_decomp(5);
        let spec = ShrinkageSpec::with_method(Method::Sure);
        let out = apply_shrinkage(&d, &spec, NoiseScale::user_supplied(1.0), &f).unwrap();
        for (setting, level) in out.levels.iter().zip(&d.details) {
            assert_eq!(setting.threshold, Some(sure_threshold(level).unwrap()));
        }
    }

    #[test]
    fn spec_validation() {
        let bad = [
            ShrinkageSpec {
                tau: 0.0,
                ..Default::default()
            },
            ShrinkageSpec {
                p: Some(1.0),
                ..Default::default()
            },
            ShrinkageSpec {
                sigma: Some(-1.0),
                ..Default::default()
            },
            ShrinkageSpec {
                alpha_prob: 1.0,
                ..Default::default()
            },
            ShrinkageSpec {
                mc_samples: 0,
                ..Default::default()
            },
        ];
        for s in bad {
            assert!(s.validate().is_err(), "{s:?}");
        }
        assert!(ShrinkageSpec::default().validate().is_ok());
        assert_eq!("SURE".parse::<Method>().unwrap(), Method::Sure);
        assert!("garrote".parse::<RuleType>().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn thresholds_shrink(d in -100.0f64..100.0, lambda in 0.0f64..50.0) {
                prop_assert!(soft_threshold(d, lambda).abs() <= d.abs());
                prop_assert!(hard_threshold(d, lambda).abs() <= d.abs());
                prop_assert_eq!(soft_threshold(-d, lambda), -soft_threshold(d, lambda));
            }

            #[test]
            fn bayes_is_odd_and_shrinks(d in -30.0f64..30.0, tau in 0.5f64..8.0, p in 0.0f64..0.99) {
                let spec = ShrinkageSpec::default();
                let pos = bayes_shrink(d, 1.0, tau, p, &spec).unwrap();
                let neg = bayes_shrink(-d, 1.0, tau, p, &spec).unwrap();
                prop_assert!((pos + neg).abs() < 1e-8);
                prop_assert!(pos.abs() <= d.abs() + 1e-8);
            }
        }
    }
}
