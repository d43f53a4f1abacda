//! Independent Monte Carlo validation of the moment engine.
//!
//! Seed quadratures are drawn as classical zero-mean Gaussians with
//! variance 1/4 and the linear forms are evaluated sample by sample, so
//! every estimate here goes through raw product expectations with no
//! factorization of fourth moments. Classical Gaussian sampling reproduces
//! symmetrically ordered operator moments, which is the ordering the rate
//! expressions assume.
//!
//! Sampling is chunked: each chunk derives its own generator from the run
//! seed and the chunk index, and chunk results are reduced in chunk order,
//! so output is bit-identical for any worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::bell::{photon_pair_rate, BellConfig, Outcome, Setting};
use crate::chain::BellNetwork;
use crate::error::{Error, Result};
use crate::quad::{OpticalMode, QuadratureForm, SeedRegistry};

/// Sample count and seed of one Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleConfig {
    pub n_samples: usize,
    pub rng_seed: u64,
}

/// An empirical mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub mean: f64,
    /// √(sample variance / n); infinite when n < 2.
    pub std_error: f64,
}

/// Which sector a form is evaluated against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sector {
    X,
    P,
}

/// A product moment ⟨f·g⟩ to estimate.
#[derive(Debug, Clone, Copy)]
pub struct MomentTarget<'a> {
    pub f: &'a QuadratureForm,
    pub f_sector: Sector,
    pub g: &'a QuadratureForm,
    pub g_sector: Sector,
}

impl<'a> MomentTarget<'a> {
    pub fn new(f: &'a QuadratureForm, f_sector: Sector, g: &'a QuadratureForm, g_sector: Sector) -> Self {
        MomentTarget {
            f,
            f_sector,
            g,
            g_sector,
        }
    }

    /// ⟨x_a x_b⟩ target for two modes.
    pub fn xx(a: &'a OpticalMode, b: &'a OpticalMode) -> Self {
        Self::new(&a.x, Sector::X, &b.x, Sector::X)
    }

    /// ⟨p_a p_b⟩ target.
    pub fn pp(a: &'a OpticalMode, b: &'a OpticalMode) -> Self {
        Self::new(&a.p, Sector::P, &b.p, Sector::P)
    }

    /// ⟨x_a p_b⟩ target.
    pub fn xp(a: &'a OpticalMode, b: &'a OpticalMode) -> Self {
        Self::new(&a.x, Sector::X, &b.p, Sector::P)
    }
}

const MAX_CHUNK: usize = 32_768;
const MIN_CHUNK: usize = 1_024;

/// Chunk length, a deterministic function of the sample count alone.
fn chunk_len(n_samples: usize) -> usize {
    n_samples.div_ceil(32).clamp(MIN_CHUNK, MAX_CHUNK).min(n_samples.max(1))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-chunk generator seed: a fixed splitting rule over (run seed, chunk).
fn chunk_seed(rng_seed: u64, chunk: u64) -> u64 {
    splitmix64(rng_seed ^ splitmix64(chunk))
}

/// Draw buffers for one sample: x and p values for every seed.
struct Draws {
    xs: Vec<f64>,
    ps: Vec<f64>,
}

impl Draws {
    fn new(seed_count: usize) -> Self {
        Draws {
            xs: vec![0.0; seed_count],
            ps: vec![0.0; seed_count],
        }
    }

    fn fill(&mut self, rng: &mut ChaCha12Rng, normal: &Normal<f64>) {
        for v in &mut self.xs {
            *v = normal.sample(rng);
        }
        for v in &mut self.ps {
            *v = normal.sample(rng);
        }
    }

    fn eval(&self, form: &QuadratureForm, sector: Sector) -> f64 {
        match sector {
            Sector::X => form.evaluate(&self.xs),
            Sector::P => form.evaluate(&self.ps),
        }
    }
}

/// Run chunked sampling: `accumulate(draws, acc)` folds one sample into a
/// chunk accumulator of `width` running sums. Returns the per-chunk sums in
/// chunk order plus the chunk sample counts.
fn run_chunks<F>(
    seed_count: usize,
    width: usize,
    cfg: &SampleConfig,
    accumulate: F,
) -> Result<(Vec<Vec<f64>>, Vec<usize>)>
where
    F: Fn(&Draws, &mut [f64]) + Sync,
{
    if cfg.n_samples == 0 {
        return Err(Error::EmptySample);
    }
    let chunk = chunk_len(cfg.n_samples);
    let n_chunks = cfg.n_samples.div_ceil(chunk);
    let normal = Normal::new(0.0, 0.5).expect("valid stddev");
    let partials: Vec<(Vec<f64>, usize)> = (0..n_chunks)
        .into_par_iter()
        .map(|k| {
            let lo = k * chunk;
            let hi = ((k + 1) * chunk).min(cfg.n_samples);
            let mut rng = ChaCha12Rng::seed_from_u64(chunk_seed(cfg.rng_seed, k as u64));
            let mut draws = Draws::new(seed_count);
            let mut acc = vec![0.0; width];
            for _ in lo..hi {
                draws.fill(&mut rng, &normal);
                accumulate(&draws, &mut acc);
            }
            (acc, hi - lo)
        })
        .collect();
    let mut sums = Vec::with_capacity(n_chunks);
    let mut counts = Vec::with_capacity(n_chunks);
    for (acc, n) in partials {
        sums.push(acc);
        counts.push(n);
    }
    Ok((sums, counts))
}

fn estimate_from_sums(sum: f64, sum_sq: f64, n: usize) -> MomentEstimate {
    let mean = sum / n as f64;
    if n < 2 {
        return MomentEstimate {
            mean,
            std_error: f64::INFINITY,
        };
    }
    let var = ((sum_sq - sum * sum / n as f64) / (n as f64 - 1.0)).max(0.0);
    MomentEstimate {
        mean,
        std_error: (var / n as f64).sqrt(),
    }
}

/// Estimate the product moments of `targets` by direct sampling.
/// Deterministic for a fixed `cfg`, independent of the worker count.
pub fn sample_moments(
    registry: &SeedRegistry,
    targets: &[MomentTarget<'_>],
    cfg: &SampleConfig,
) -> Result<Vec<MomentEstimate>> {
    for t in targets {
        if t.f.token() != registry.token() || t.g.token() != registry.token() {
            return Err(Error::RegistryMismatch);
        }
    }
    let width = 2 * targets.len();
    let (sums, _) = run_chunks(registry.seed_count(), width, cfg, |draws, acc| {
        for (i, t) in targets.iter().enumerate() {
            let v = draws.eval(t.f, t.f_sector) * draws.eval(t.g, t.g_sector);
            acc[2 * i] += v;
            acc[2 * i + 1] += v * v;
        }
    })?;
    let mut totals = vec![0.0; width];
    for chunk_sums in &sums {
        for (t, v) in totals.iter_mut().zip(chunk_sums) {
            *t += v;
        }
    }
    Ok((0..targets.len())
        .map(|i| estimate_from_sums(totals[2 * i], totals[2 * i + 1], cfg.n_samples))
        .collect())
}

/// One sampled rate against its engine value.
#[derive(Debug, Clone, Copy)]
pub struct WickCheck {
    pub outcome_a: Outcome,
    pub outcome_c: Outcome,
    /// Wick-reduced engine rate.
    pub analytic: f64,
    /// Raw product-expectation estimate (no factorization).
    pub estimate: MomentEstimate,
    /// |estimate − analytic| / std_error.
    pub sigma_distance: f64,
}

/// The per-sample photon-number observable of a measured beam,
/// x² + p² − 1/2.
fn number_observable(draws: &Draws, mode: &OpticalMode) -> f64 {
    let x = draws.eval(&mode.x, Sector::X);
    let p = draws.eval(&mode.p, Sector::P);
    x * x + p * p - 0.5
}

/// Estimate the four coincidence rates at `(x, z)` as raw fourth-moment
/// product expectations and compare each against the factorized engine
/// rate.
pub fn validate_wick(
    net: &BellNetwork,
    x: Setting,
    z: Setting,
    cfg: &SampleConfig,
) -> Result<Vec<WickCheck>> {
    let mm = net.measured(x, z);
    let alice = [&mm.a_plus, &mm.a_minus];
    let charlie = [&mm.c_plus, &mm.c_minus];
    let (sums, _) = run_chunks(net.seed_count(), 8, cfg, |draws, acc| {
        let na = [
            number_observable(draws, alice[0]),
            number_observable(draws, alice[1]),
        ];
        let nc = [
            number_observable(draws, charlie[0]),
            number_observable(draws, charlie[1]),
        ];
        for (ai, &a) in na.iter().enumerate() {
            for (ci, &c) in nc.iter().enumerate() {
                let v = a * c;
                acc[2 * (2 * ai + ci)] += v;
                acc[2 * (2 * ai + ci) + 1] += v * v;
            }
        }
    })?;
    let mut totals = [0.0; 8];
    for chunk_sums in &sums {
        for (t, v) in totals.iter_mut().zip(chunk_sums) {
            *t += v;
        }
    }
    let mut checks = Vec::with_capacity(4);
    for (ai, &a) in Outcome::ALL.iter().enumerate() {
        for (ci, &c) in Outcome::ALL.iter().enumerate() {
            let estimate = estimate_from_sums(
                totals[2 * (2 * ai + ci)],
                totals[2 * (2 * ai + ci) + 1],
                cfg.n_samples,
            );
            let analytic = photon_pair_rate(net, a, c, x, z);
            let sigma_distance = (estimate.mean - analytic).abs() / estimate.std_error;
            checks.push(WickCheck {
                outcome_a: a,
                outcome_c: c,
                analytic,
                estimate,
                sigma_distance,
            });
        }
    }
    Ok(checks)
}

/// A sampled Bell value with a jackknife-over-chunks standard error.
#[derive(Debug, Clone, Copy)]
pub struct BellEstimate {
    pub value: f64,
    /// Jackknife standard error; infinite when fewer than two chunks ran.
    pub std_error: f64,
    pub n_samples: usize,
}

fn bell_from_rates(rates: &[f64]) -> f64 {
    // rates laid out [setting-pair][a][c] with setting pairs
    // (0,0), (0,1), (1,0), (1,1)
    let mut bell = 0.0;
    for (pair, sign) in [(0, 1.0), (1, 1.0), (2, 1.0), (3, -1.0)] {
        let base = 4 * pair;
        let (rpp, rpm, rmp, rmm) = (
            rates[base],
            rates[base + 1],
            rates[base + 2],
            rates[base + 3],
        );
        bell += sign * (rpp + rmm - rpm - rmp) / (rpp + rmm + rpm + rmp);
    }
    bell
}

/// Assemble the Bell value from sampled rates across all four setting
/// pairs, sharing one draw stream.
pub fn sample_bell_value(net: &BellNetwork, cfg: &SampleConfig) -> Result<BellEstimate> {
    let config: &BellConfig = net.config();
    if config.r1.value() == 0.0 {
        return Err(Error::NoDetection);
    }
    let alice: Vec<_> = Setting::ALL.iter().map(|&x| net.analyzer_a(x)).collect();
    let charlie: Vec<_> = Setting::ALL.iter().map(|&z| net.analyzer_c(z)).collect();
    let (sums, counts) = run_chunks(net.seed_count(), 16, cfg, |draws, acc| {
        let na: Vec<[f64; 2]> = alice
            .iter()
            .map(|(plus, minus)| {
                [
                    number_observable(draws, plus),
                    number_observable(draws, minus),
                ]
            })
            .collect();
        let nc: Vec<[f64; 2]> = charlie
            .iter()
            .map(|(plus, minus)| {
                [
                    number_observable(draws, plus),
                    number_observable(draws, minus),
                ]
            })
            .collect();
        for (pair, (xi, zi)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
            let base = 4 * pair;
            acc[base] += na[xi][0] * nc[zi][0];
            acc[base + 1] += na[xi][0] * nc[zi][1];
            acc[base + 2] += na[xi][1] * nc[zi][0];
            acc[base + 3] += na[xi][1] * nc[zi][1];
        }
    })?;
    let n = cfg.n_samples as f64;
    let mut totals = [0.0; 16];
    for chunk_sums in &sums {
        for (t, v) in totals.iter_mut().zip(chunk_sums) {
            *t += v;
        }
    }
    let means: Vec<f64> = totals.iter().map(|t| t / n).collect();
    let value = bell_from_rates(&means);
    let n_chunks = sums.len();
    let std_error = if n_chunks < 2 {
        f64::INFINITY
    } else {
        let leave_outs: Vec<f64> = (0..n_chunks)
            .map(|k| {
                let remaining = n - counts[k] as f64;
                let rates: Vec<f64> = totals
                    .iter()
                    .zip(&sums[k])
                    .map(|(t, s)| (t - s) / remaining)
                    .collect();
                bell_from_rates(&rates)
            })
            .collect();
        let mean_loo = leave_outs.iter().sum::<f64>() / n_chunks as f64;
        let ss: f64 = leave_outs.iter().map(|v| (v - mean_loo).powi(2)).sum();
        ((n_chunks - 1) as f64 / n_chunks as f64 * ss).sqrt()
    };
    Ok(BellEstimate {
        value,
        std_error,
        n_samples: cfg.n_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{bell_value, BellMethod};
    use crate::chain::{build_aoes_chain, build_bell_network};
    use crate::elements::{GainParam, SqueezeParam};

    fn chain_registry(r1: f64, r2: f64, g3: f64) -> (SeedRegistry, crate::chain::ChainModes) {
        let mut reg = SeedRegistry::new();
        let chain = build_aoes_chain(
            &mut reg,
            SqueezeParam::new(r1).unwrap(),
            SqueezeParam::new(r2).unwrap(),
            GainParam::new(g3).unwrap(),
        )
        .unwrap();
        (reg, chain)
    }

    #[test]
    fn second_moments_within_five_sigma() {
        let (reg, chain) = chain_registry(0.5, 2.0, 8.0);
        let targets = [
            MomentTarget::xx(&chain.a1, &chain.a1),
            MomentTarget::xx(&chain.a1, &chain.a4_out),
            MomentTarget::xp(&chain.a1, &chain.a1),
            MomentTarget::xx(&chain.a4_out, &chain.a4_out),
        ];
        let cfg = SampleConfig {
            n_samples: 200_000,
            rng_seed: 11,
        };
        let estimates = sample_moments(&reg, &targets, &cfg).unwrap();
        let expected = [
            0.385770158703811,
            0.293800298410950,
            0.0,
            0.393783250717632,
        ];
        for (est, want) in estimates.iter().zip(expected) {
            assert!(est.std_error > 0.0 && est.std_error < 0.01);
            assert!(
                (est.mean - want).abs() <= 5.0 * est.std_error,
                "estimate {} vs {} (se {})",
                est.mean,
                want,
                est.std_error
            );
        }
    }

    #[test]
    fn correlation_block_matches_sampled_covariances() {
        use crate::separability::correlation_block;
        let (reg, chain) = chain_registry(0.5, 0.5, 8.0);
        let block = correlation_block(&chain.a1, &chain.a2_amp).unwrap();
        let targets = [
            MomentTarget::xx(&chain.a1, &chain.a1),
            MomentTarget::pp(&chain.a1, &chain.a1),
            MomentTarget::xx(&chain.a2_amp, &chain.a2_amp),
            MomentTarget::pp(&chain.a2_amp, &chain.a2_amp),
            MomentTarget::xx(&chain.a1, &chain.a2_amp),
            MomentTarget::pp(&chain.a1, &chain.a2_amp),
        ];
        let expected = [block.n1, block.n2, block.m1, block.m2, block.c1, block.c2];
        let cfg = SampleConfig {
            n_samples: 250_000,
            rng_seed: 17,
        };
        let estimates = sample_moments(&reg, &targets, &cfg).unwrap();
        for (est, want) in estimates.iter().zip(expected) {
            assert!(
                (est.mean - want).abs() <= 5.0 * est.std_error,
                "block entry {} vs sampled {} (se {})",
                want,
                est.mean,
                est.std_error
            );
        }
    }

    #[test]
    fn estimates_are_deterministic_and_seed_sensitive() {
        let (reg, chain) = chain_registry(0.3, 1.0, 4.0);
        let targets = [MomentTarget::xx(&chain.a1, &chain.a1)];
        let cfg = SampleConfig {
            n_samples: 20_000,
            rng_seed: 99,
        };
        let a = sample_moments(&reg, &targets, &cfg).unwrap();
        let b = sample_moments(&reg, &targets, &cfg).unwrap();
        assert_eq!(a[0].mean.to_bits(), b[0].mean.to_bits());
        assert_eq!(a[0].std_error.to_bits(), b[0].std_error.to_bits());
        let c = sample_moments(
            &reg,
            &targets,
            &SampleConfig {
                n_samples: 20_000,
                rng_seed: 100,
            },
        )
        .unwrap();
        assert_ne!(a[0].mean.to_bits(), c[0].mean.to_bits());
    }

    #[test]
    fn estimates_are_worker_count_independent() {
        let (reg, chain) = chain_registry(0.4, 0.8, 8.0);
        let targets = [MomentTarget::pp(&chain.a1, &chain.a4_out)];
        let cfg = SampleConfig {
            n_samples: 50_000,
            rng_seed: 5,
        };
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| sample_moments(&reg, &targets, &cfg).unwrap());
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(7)
            .build()
            .unwrap()
            .install(|| sample_moments(&reg, &targets, &cfg).unwrap());
        assert_eq!(one[0].mean.to_bits(), many[0].mean.to_bits());
        assert_eq!(one[0].std_error.to_bits(), many[0].std_error.to_bits());
    }

    #[test]
    fn zero_samples_is_an_error() {
        let (reg, chain) = chain_registry(0.3, 1.0, 4.0);
        let targets = [MomentTarget::xx(&chain.a1, &chain.a1)];
        assert!(matches!(
            sample_moments(
                &reg,
                &targets,
                &SampleConfig {
                    n_samples: 0,
                    rng_seed: 1
                }
            ),
            Err(Error::EmptySample)
        ));
    }

    #[test]
    fn mismatched_registry_is_rejected() {
        let (_, chain) = chain_registry(0.3, 1.0, 4.0);
        let other = SeedRegistry::new();
        let targets = [MomentTarget::xx(&chain.a1, &chain.a1)];
        assert!(matches!(
            sample_moments(
                &other,
                &targets,
                &SampleConfig {
                    n_samples: 10,
                    rng_seed: 1
                }
            ),
            Err(Error::RegistryMismatch)
        ));
    }

    #[test]
    fn convergence_rate_is_inverse_sqrt() {
        let (reg, chain) = chain_registry(0.5, 1.0, 8.0);
        let targets = [MomentTarget::xx(&chain.a1, &chain.a1)];
        let se = |n: usize| {
            sample_moments(
                &reg,
                &targets,
                &SampleConfig {
                    n_samples: n,
                    rng_seed: 21,
                },
            )
            .unwrap()[0]
                .std_error
        };
        let se_n = se(60_000);
        let se_4n = se(240_000);
        let ratio = se_n / se_4n;
        assert!(
            (ratio - 2.0).abs() <= 0.4,
            "quadrupling n gave se ratio {ratio}"
        );
    }

    #[test]
    fn wick_factorization_matches_raw_products() {
        let mut reg = SeedRegistry::new();
        let config = BellConfig::new(
            SqueezeParam::new(0.1).unwrap(),
            SqueezeParam::new(2.0).unwrap(),
            GainParam::new(8.0).unwrap(),
        );
        let net = build_bell_network(&mut reg, config).unwrap();
        let cfg = SampleConfig {
            n_samples: 300_000,
            rng_seed: 7,
        };
        let checks = validate_wick(&net, Setting::Zero, Setting::Zero, &cfg).unwrap();
        assert_eq!(checks.len(), 4);
        for check in checks {
            assert!(
                check.sigma_distance <= 5.0,
                "rate ({:?},{:?}): {} vs {} at {}σ",
                check.outcome_a,
                check.outcome_c,
                check.estimate.mean,
                check.analytic,
                check.sigma_distance
            );
        }
    }

    #[test]
    fn sampled_bell_value_agrees_with_closed_form() {
        let mut reg = SeedRegistry::new();
        let config = BellConfig::new(
            SqueezeParam::new(0.1).unwrap(),
            SqueezeParam::new(2.0).unwrap(),
            GainParam::new(8.0).unwrap(),
        );
        let net = build_bell_network(&mut reg, config).unwrap();
        let cfg = SampleConfig {
            n_samples: 400_000,
            rng_seed: 3,
        };
        let est = sample_bell_value(&net, &cfg).unwrap();
        let analytic = bell_value(&config, BellMethod::Analytic).unwrap();
        assert!(est.std_error.is_finite() && est.std_error > 0.0);
        assert!(
            (est.value - analytic).abs() <= 5.0 * est.std_error,
            "sampled {} vs analytic {} (se {})",
            est.value,
            analytic,
            est.std_error
        );
        assert!(est.value > 2.0);
    }
}
