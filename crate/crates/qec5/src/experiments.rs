//! Monte Carlo harness: logical error rates with Wilson intervals, the
//! single-error reference curve, power-law fits, and level-by-level
//! concatenation thresholds.

use crate::code5::{build_check_matrix, memory_circuit, CheckMatrix};
use crate::decoders::{DecoderKind, FlagTable, ShotDecoder};
use crate::detector_graph::DetectorModel;
use crate::error::{Error, Result};
use crate::field::Dim;
use crate::noise::{NoiseKind, NoiseModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use std::sync::atomic::{AtomicU64, Ordering};

/// Shots per RNG block. Block `k` always uses stream `k` of the run seed, so
/// counts do not depend on the thread count.
pub const BLOCK: u64 = 1024;

/// Probability of two or more errors among five qudits, each failing with
/// probability `p`.
pub fn p_m1(p: f64) -> f64 {
    1.0 - ((1.0 - p).powi(5) + 5.0 * p * (1.0 - p).powi(4))
}

fn z_score(confidence: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(0.5 + confidence / 2.0)
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson(k: u64, n: u64, confidence: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = z_score(confidence);
    let (n, p) = (n as f64, k as f64 / n as f64);
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Converts a probability over `n` rounds to a per-round rate.
pub fn per_round(p_total: f64, n: usize) -> f64 {
    if n <= 1 {
        return p_total;
    }
    1.0 - (1.0 - p_total).powf(1.0 / n as f64)
}

/// Cycles that carry noise: every cycle under standard depolarizing noise,
/// all but the final one under circuit-level noise.
pub fn noisy_cycles(noise: &NoiseKind, cycles: usize) -> usize {
    match noise {
        NoiseKind::StandardDepolarizing(_) => cycles,
        NoiseKind::CircuitLevel(_) => cycles.saturating_sub(1).max(1),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Shots {
    Fixed(u64),
    /// `ceil(A / p)` shots.
    Scaled(f64),
}

impl Shots {
    pub fn count(&self, p: f64) -> Result<u64> {
        match *self {
            Shots::Fixed(n) if n >= 1 => Ok(n),
            Shots::Fixed(_) => Err(Error::Config("shots must be at least 1".into())),
            Shots::Scaled(a) if a > 0.0 && p > 0.0 => Ok((a / p).ceil() as u64),
            Shots::Scaled(_) => Err(Error::Config("scaled shots need A > 0 and p > 0".into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub q: u32,
    pub cycles: usize,
    pub noise: NoiseKind,
    pub decoder: DecoderKind,
    pub flagged: bool,
    pub shots: Shots,
    pub seed: u64,
    /// Worker threads; 0 means all available cores.
    pub threads: usize,
    pub confidence: f64,
}

impl RunConfig {
    pub fn new(q: u32, noise: NoiseKind, decoder: DecoderKind) -> RunConfig {
        RunConfig {
            q,
            cycles: 3,
            noise,
            decoder,
            flagged: true,
            shots: Shots::Fixed(10_000),
            seed: 0,
            threads: 0,
            confidence: 0.99,
        }
    }

    pub fn validate(&self) -> Result<()> {
        Dim::new(self.q)?;
        NoiseModel::new(self.noise, Dim::new(self.q)?)?;
        if self.cycles < 1 {
            return Err(Error::Config("at least one cycle is required".into()));
        }
        if matches!(self.noise, NoiseKind::CircuitLevel(_)) && self.cycles < 2 {
            return Err(Error::Config("circuit-level noise needs two cycles (the last one is clean)".into()));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::Config(format!("confidence {} outside (0, 1)", self.confidence)));
        }
        self.shots.count(self.noise.p())?;
        Ok(())
    }
}

/// One CSV row of results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub q: u32,
    pub model: String,
    pub decoder: String,
    pub flag: bool,
    pub p: f64,
    pub shots: u64,
    pub failures: u64,
    /// Per noisy cycle.
    pub p_l: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

/// A compiled noisy memory experiment ready to sample.
pub struct Experiment {
    pub config: RunConfig,
    pub code: CheckMatrix,
    pub model: DetectorModel,
    pub decoder: ShotDecoder,
}

fn model_name(n: &NoiseKind) -> &'static str {
    match n {
        NoiseKind::StandardDepolarizing(_) => "sdep",
        NoiseKind::CircuitLevel(_) => "circuit",
    }
}

impl Experiment {
    pub fn prepare(cfg: &RunConfig) -> Result<Experiment> {
        cfg.validate()?;
        let q = Dim::new(cfg.q)?;
        let code = build_check_matrix(q);
        let circuit = memory_circuit(q, cfg.cycles, cfg.flagged)?;
        let model = DetectorModel::build(&circuit, &NoiseModel::new(cfg.noise, q)?, &code)?;
        let table = cfg.flagged.then(|| FlagTable::build(&model, &code));
        let decoder = ShotDecoder::new(cfg.decoder, &model, table);
        Ok(Experiment { config: cfg.clone(), code, model, decoder })
    }

    /// Failures among the `n` shots of block `block`.
    fn run_block(&self, block: u64, n: u64) -> Result<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(block);
        let mut fails = 0;
        for _ in 0..n {
            let shot = self.model.sample(&mut rng);
            if shot.faults == 0 {
                continue;
            }
            if !self.decoder.succeeds(&self.code, &shot.dets, &shot.flags, &shot.data, &mut rng)? {
                fails += 1;
            }
        }
        Ok(fails)
    }

    pub fn run(&self) -> Result<ExperimentResult> {
        let cfg = &self.config;
        let shots = cfg.shots.count(cfg.noise.p())?;
        let blocks = shots.div_ceil(BLOCK);
        let threads = match cfg.threads {
            0 => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            t => t,
        }
        .min(blocks.max(1) as usize);
        let next = AtomicU64::new(0);
        let results: Vec<Result<u64>> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..threads)
                .map(|_| {
                    s.spawn(|| {
                        let mut fails = 0;
                        loop {
                            let b = next.fetch_add(1, Ordering::Relaxed);
                            if b >= blocks {
                                return Ok(fails);
                            }
                            let n = BLOCK.min(shots - b * BLOCK);
                            fails += self.run_block(b, n)?;
                        }
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
        let mut failures = 0;
        for r in results {
            failures += r?;
        }
        let rounds = noisy_cycles(&cfg.noise, cfg.cycles);
        let (lo, hi) = wilson(failures, shots, cfg.confidence);
        Ok(ExperimentResult {
            q: cfg.q,
            model: model_name(&cfg.noise).into(),
            decoder: cfg.decoder.to_string(),
            flag: cfg.flagged,
            p: cfg.noise.p(),
            shots,
            failures,
            p_l: per_round(failures as f64 / shots as f64, rounds),
            ci_low: per_round(lo, rounds),
            ci_high: per_round(hi, rounds),
            seed: cfg.seed,
        })
    }
}

/// Builds and runs one experiment.
pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentResult> {
    Experiment::prepare(cfg)?.run()
}

/// Writes rows with a header in the shared CSV schema.
pub fn write_csv<W: std::io::Write>(rows: &[ExperimentResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Config(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Config(e.to_string()))?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<ExperimentResult>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(|e| Error::Config(e.to_string())))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub p: f64,
    pub p_l: f64,
    /// Inverse variance of `ln p_l`.
    pub weight: f64,
}

impl FitPoint {
    /// Weight from the interval width in log space.
    pub fn from_result(r: &ExperimentResult, confidence: f64) -> Option<FitPoint> {
        if r.failures == 0 || r.ci_low <= 0.0 {
            return None;
        }
        let sigma = (r.ci_high.ln() - r.ci_low.ln()) / (2.0 * z_score(confidence));
        Some(FitPoint { p: r.p, p_l: r.p_l, weight: 1.0 / (sigma * sigma) })
    }
}

/// `P_L(p) = a p^b`. `cov` is the covariance of `(ln a, b)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub a: f64,
    pub b: f64,
    pub cov: [[f64; 2]; 2],
}

/// Weighted least squares of `ln p_l = ln a + b ln p`.
pub fn fit_power_law(points: &[FitPoint]) -> Result<FitResult> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints(points.len()));
    }
    if points.iter().any(|pt| !(pt.p > 0.0 && pt.p_l > 0.0 && pt.weight > 0.0)) {
        return Err(Error::Config("fit points need positive p, p_l and weight".into()));
    }
    let (mut s, mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for pt in points {
        let (x, y, w) = (pt.p.ln(), pt.p_l.ln(), pt.weight);
        s += w;
        sx += w * x;
        sxx += w * x * x;
        sy += w * y;
        sxy += w * x * y;
    }
    let det = s * sxx - sx * sx;
    if det.abs() <= 1e-12 * s * sxx.abs().max(1.0) {
        return Err(Error::Degenerate);
    }
    let ln_a = (sxx * sy - sx * sxy) / det;
    let b = (s * sxy - sx * sy) / det;
    let cov = [[sxx / det, -sx / det], [-sx / det, s / det]];
    Ok(FitResult { a: ln_a.exp(), b, cov })
}

/// Fixed point `p* = a^(-1 / (b - 1))` of the concatenation map.
pub fn threshold(fit: &FitResult) -> Result<f64> {
    if fit.b <= 1.0 || fit.a <= 0.0 {
        return Err(Error::NoThreshold(fit.b));
    }
    Ok((-fit.a.ln() / (fit.b - 1.0)).exp())
}

/// Standard deviation of the threshold under Gaussian `(ln a, b)` draws.
/// Draws with `b <= 1` have no threshold and are skipped.
pub fn threshold_sigma(fit: &FitResult, samples: usize, seed: u64) -> Result<f64> {
    threshold(fit)?;
    let c = fit.cov;
    let l11 = c[0][0].max(0.0).sqrt();
    let l21 = if l11 > 0.0 { c[1][0] / l11 } else { 0.0 };
    let l22 = (c[1][1] - l21 * l21).max(0.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vals = Vec::with_capacity(samples);
    for _ in 0..samples {
        let (u, v): (f64, f64) = (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
        let ln_a = fit.a.ln() + l11 * u;
        let b = fit.b + l21 * u + l22 * v;
        if b > 1.0 {
            vals.push((-ln_a / (b - 1.0)).exp());
        }
    }
    if vals.len() < 2 {
        return Err(Error::NoThreshold(fit.b));
    }
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
    Ok(var.sqrt())
}

/// `ln P^(l)(p)` with `P^(1) = a p^b` and `P^(l+1) = a (P^(l))^b`.
pub fn level_ln(fit: &FitResult, level: u32, p: f64) -> f64 {
    let mut l = p.ln();
    for _ in 0..level {
        l = fit.a.ln() + fit.b * l;
    }
    l
}

/// `P^(l)(p)`.
pub fn level_value(fit: &FitResult, level: u32, p: f64) -> f64 {
    level_ln(fit, level, p).exp()
}

/// Where levels `l` and `m` cross. `ln P^(l)` is affine in `ln p` with slope
/// `b^l`, so each crossing is a closed-form root.
pub fn crossing(fit: &FitResult, l: u32, m: u32) -> f64 {
    let (c_l, c_m) = (level_ln(fit, l, 1.0), level_ln(fit, m, 1.0));
    let (s_l, s_m) = (fit.b.powi(l as i32), fit.b.powi(m as i32));
    ((c_m - c_l) / (s_l - s_m)).exp()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelCurve {
    pub level: u32,
    /// `[[5^l, 1, 3^l]]`.
    pub n: u64,
    pub distance: u64,
    pub points: Vec<(f64, f64)>,
}

/// Level curves sampled on `grid`.
pub fn concatenation_curves(fit: &FitResult, levels: u32, grid: &[f64]) -> Vec<LevelCurve> {
    (1..=levels)
        .map(|l| LevelCurve {
            level: l,
            n: 5u64.pow(l),
            distance: 3u64.pow(l),
            points: grid.iter().map(|&p| (p, level_value(fit, l, p))).collect(),
        })
        .collect()
}

/// `n` points log-spaced over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub a: f64,
    pub b: f64,
    pub cov: [[f64; 2]; 2],
    pub threshold: f64,
    pub threshold_sigma: f64,
    pub level_curves: Vec<LevelCurve>,
}

/// Fit, threshold, uncertainty and three level curves around the threshold.
pub fn fit_report(fit: &FitResult, seed: u64) -> Result<FitReport> {
    let t = threshold(fit)?;
    let sigma = threshold_sigma(fit, 20_000, seed)?;
    let grid = log_grid(t / 100.0, (t * 100.0).min(1.0), 61);
    Ok(FitReport {
        a: fit.a,
        b: fit.b,
        cov: fit.cov,
        threshold: t,
        threshold_sigma: sigma,
        level_curves: concatenation_curves(fit, 3, &grid),
    })
}

/// Published power-law fits: `(q, flagged, a, b, threshold)`.
pub const PUBLISHED_FITS: [(u32, bool, f64, f64, f64); 6] = [
    (2, false, 36.7, 1.264, 1.21e-6),
    (2, true, 766.0, 1.873, 4.95e-4),
    (3, false, 58.7, 1.288, 7.22e-7),
    (3, true, 1116.0, 1.870, 3.24e-4),
    (5, false, 35.3, 1.149, 4.36e-11),
    (5, true, 792.0, 1.798, 2.32e-4),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_curve() {
        assert_eq!(p_m1(0.0), 0.0);
        assert!((p_m1(1.0) - 1.0).abs() < 1e-15);
        assert!((p_m1(0.1) - 0.08146).abs() < 1e-5);
        assert!((p_m1(0.05) - 0.0226).abs() < 1e-4);
        let mut last = 0.0;
        for i in 1..=100 {
            let v = p_m1(i as f64 / 100.0);
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn wilson_brackets_the_estimate() {
        let (lo, hi) = wilson(10, 1000, 0.99);
        assert!(lo < 0.01 && 0.01 < hi);
        assert_eq!(wilson(0, 100, 0.99).0, 0.0);
        let (lo90, hi90) = wilson(10, 1000, 0.90);
        assert!(lo90 > lo && hi90 < hi);
    }

    #[test]
    fn exact_points_are_recovered() {
        let pts: Vec<FitPoint> =
            [1e-4, 3e-4, 1e-3, 3e-3].iter().map(|&p| FitPoint { p, p_l: 766.0 * p.powf(1.873), weight: 1.0 }).collect();
        let f = fit_power_law(&pts).unwrap();
        assert!((f.a / 766.0 - 1.0).abs() < 1e-6 && (f.b - 1.873).abs() < 1e-6);
        assert!(fit_power_law(&pts[..2]).is_err());
        let same: Vec<FitPoint> = (0..3).map(|_| pts[0]).collect();
        assert!(matches!(fit_power_law(&same), Err(Error::Degenerate)));
    }

    #[test]
    fn published_thresholds() {
        let t = threshold(&FitResult { a: 766.0, b: 1.873, cov: [[0.0; 2]; 2] }).unwrap();
        assert!((t / 4.97e-4 - 1.0).abs() < 0.01);
        let t = threshold(&FitResult { a: 35.3, b: 1.149, cov: [[0.0; 2]; 2] }).unwrap();
        assert!((t / 4.1e-11 - 1.0).abs() < 0.05);
        assert!((threshold(&FitResult { a: 1.0, b: 1.5, cov: [[0.0; 2]; 2] }).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(threshold(&FitResult { a: 2.0, b: 1.0, cov: [[0.0; 2]; 2] }), Err(Error::NoThreshold(_))));
    }

    #[test]
    fn levels_share_the_fixed_point() {
        let f = FitResult { a: 766.0, b: 1.873, cov: [[0.0; 2]; 2] };
        let t = threshold(&f).unwrap();
        assert!((level_value(&f, 1, t) / t - 1.0).abs() < 1e-12);
        assert!(level_value(&f, 2, t / 2.0) < level_value(&f, 1, t / 2.0));
        for (l, m) in [(1, 2), (2, 3), (1, 3)] {
            assert!((crossing(&f, l, m) / t - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn per_round_inverts_compounding() {
        let r = 0.01;
        let total = 1.0 - (1.0f64 - r).powi(3);
        assert!((per_round(total, 3) - r).abs() < 1e-15);
        assert_eq!(per_round(0.2, 1), 0.2);
    }
}
