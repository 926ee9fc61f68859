//! Self-check oracle suite: independent empirical verification of the
//! closed-form statistics, designs, and detectors, at a scale that finishes
//! in seconds. Shared by `mclink validate` and the acceptance tests.
//!
//! Every check here recomputes its target quantity a *second way* — empirical
//! covariance of simulated windows, affine least-squares on simulated pairs,
//! exhaustive-search likelihoods, Poisson-redraw moments — and compares
//! against the closed forms, reporting the measured deviation against an
//! explicit gate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Poisson};

use crate::analysis::{build_nu, conditional_moments, q_function, SequenceWindow};
use crate::channel::{
    build_cir_table, generate_bits, simulate_observations, ChannelParams, CirTable,
    ObservationMatrix,
};
use crate::config::Config;
use crate::detect::{dfsd_viterbi, exhaustive_mlsd, mlsd_viterbi, poisson_log_pmf};
use crate::equalize::{
    build_stats, design_dfe, design_linear_fse, SampleIndexMap,
};
use crate::numerics::{spd_solve, Cholesky};
use crate::Error;

/// Default master seed of the oracle suite (fixed so the printed deviations
/// are reproducible).
pub const DEFAULT_SEED: u64 = 11;

/// One oracle check's outcome.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Measured deviation and gate, human-readable.
    pub detail: String,
}

impl CheckResult {
    fn gate(name: &'static str, dev: f64, gate: f64, what: &str) -> CheckResult {
        CheckResult {
            name,
            passed: dev <= gate,
            detail: format!("max {what} {:.3e} (gate {:.1e})", dev, gate),
        }
    }
}

/// Scale and behavior knobs for the suite.
#[derive(Debug, Clone)]
pub struct ValidateOptions {
    /// Simulated windows for the covariance oracle.
    pub windows: usize,
    /// Simulated (q, s) pairs for the regression oracles.
    pub pairs: usize,
    /// Random frames for the detector-equivalence oracle.
    pub frames: usize,
    /// Poisson redraws for the conditional-moment oracle.
    pub redraws: usize,
    pub seed: u64,
    /// Negative control: corrupt one Γ entry before the covariance
    /// comparison; the check must then fail.
    pub corrupt_gamma: bool,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions {
            windows: 1_000_000,
            pairs: 1_000_000,
            frames: 1000,
            redraws: 200_000,
            seed: DEFAULT_SEED,
            corrupt_gamma: false,
        }
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One long stationary run: i.i.d. bits and the Poisson observation rows
/// they generate (no frame edges — rows past the bit horizon are not used).
fn long_run(
    cfg: &Config,
    rows: usize,
    rng: &mut ChaCha12Rng,
) -> Result<(Vec<u8>, ObservationMatrix, CirTable), Error> {
    let cir = build_cir_table(&cfg.channel)?;
    let bits = generate_bits(rows, rng);
    let obs = simulate_observations(&cir, &bits, cfg.channel.eta, 0, rng)?;
    Ok((bits, obs, cir))
}

// ---------------------------------------------------------------------------
// Structural checks
// ---------------------------------------------------------------------------

/// Γ symmetry and positive definiteness on the centered and causal windows.
pub fn gamma_structure_check(cfg: &Config) -> Result<CheckResult, Error> {
    let cir = build_cir_table(&cfg.channel)?;
    let mut max_asym: f64 = 0.0;
    let mut pd = true;
    for map in [
        SampleIndexMap::centered(cfg.equalizer.t, cir.m),
        SampleIndexMap::causal(cfg.equalizer.l1, cir.m),
    ] {
        let stats = build_stats(&cir, cfg.channel.eta, &map);
        for i in 0..stats.n {
            for j in 0..stats.n {
                let a = stats.gamma[i * stats.n + j];
                let b = stats.gamma[j * stats.n + i];
                max_asym = max_asym.max((a - b).abs() / a.abs().max(1.0));
            }
        }
        pd &= Cholesky::factor(&stats.gamma, stats.n).is_ok();
    }
    Ok(CheckResult {
        name: "gamma-symmetry-pd",
        passed: pd && max_asym <= 1e-12,
        detail: format!("max relative asymmetry {max_asym:.3e}, positive definite: {pd}"),
    })
}

/// MMSE of both designs stays inside [0, 1/4] across release counts.
pub fn mmse_range_check(cfg: &Config) -> Result<CheckResult, Error> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for a in [0.0, 1e2, cfg.channel.a, 1e6] {
        let cir = build_cir_table(&ChannelParams { a, ..cfg.channel.clone() })?;
        let lin = design_linear_fse(&cir, cfg.channel.eta, cfg.equalizer.t)?;
        let dfe = design_dfe(&cir, cfg.channel.eta, cfg.equalizer.l1, cfg.equalizer.l2)?;
        for m in [lin.mmse, dfe.mmse] {
            lo = lo.min(m);
            hi = hi.max(m);
        }
    }
    Ok(CheckResult {
        name: "mmse-range",
        passed: lo >= -1e-12 && hi <= 0.25 + 1e-12,
        detail: format!("MMSE spans [{lo:.6}, {hi:.6}] over A in {{0, 1e2, default, 1e6}}"),
    })
}

// ---------------------------------------------------------------------------
// Covariance oracle
// ---------------------------------------------------------------------------

/// Empirical covariance of simulated centered windows against `build_stats`,
/// on all entries at least 1% of the largest (5% relative gate).
pub fn covariance_check(cfg: &Config, opts: &ValidateOptions) -> Result<CheckResult, Error> {
    let t = cfg.equalizer.t;
    let mut rng = stream_rng(opts.seed, 1);
    let lead = cfg.channel.l - 1 + t; // first stationary window center
    let rows = opts.windows + lead + t;
    let (_, obs, cir) = long_run(cfg, rows, &mut rng)?;
    let map = SampleIndexMap::centered(t, cir.m);
    let mut stats = build_stats(&cir, cfg.channel.eta, &map);
    if opts.corrupt_gamma {
        // Negative control: break one off-diagonal pair.
        stats.gamma[1] *= 1.5;
        stats.gamma[stats.n] *= 1.5;
    }
    let n = stats.n;

    let mut sum = vec![0.0f64; n];
    let mut sum_sq = vec![0.0f64; n * n]; // upper triangle used
    let mut q = vec![0.0f64; n];
    let samples = opts.windows;
    for k0 in lead..lead + samples {
        for (i, slot) in q.iter_mut().enumerate() {
            let (j, m0) = (i / cir.m, i % cir.m);
            *slot = obs.get(k0 + j - t, m0) as f64;
        }
        for i in 0..n {
            sum[i] += q[i];
            for j in i..n {
                sum_sq[i * n + j] += q[i] * q[j];
            }
        }
    }
    let nf = samples as f64;
    let mut max_dev: f64 = 0.0;
    let gamma_max = stats.gamma.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for i in 0..n {
        for j in i..n {
            let model = stats.gamma[i * n + j];
            if model.abs() < 0.01 * gamma_max {
                continue;
            }
            let emp = (sum_sq[i * n + j] - sum[i] * sum[j] / nf) / (nf - 1.0);
            max_dev = max_dev.max((emp - model).abs() / model.abs());
        }
    }
    Ok(CheckResult::gate("covariance-oracle", max_dev, 0.05, "relative deviation"))
}

// ---------------------------------------------------------------------------
// Regression oracles
// ---------------------------------------------------------------------------

/// Solves the affine least-squares system from accumulated normal equations;
/// `xtx`/`xts` must include the intercept column (all-ones regressor).
fn solve_normal_equations(xtx: &[f64], xts: &[f64], dim: usize) -> Result<Vec<f64>, Error> {
    let (sol, _) = spd_solve(xtx, dim, xts)?;
    Ok(sol)
}

/// Per-tap deviation with a floor: near-zero taps are compared against
/// `floor_frac` of the largest tap magnitude instead of their own size.
fn floored_devs(got: &[f64], want: &[f64], floor_frac: f64) -> f64 {
    let scale = want.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    got.iter()
        .zip(want)
        .map(|(g, w)| (g - w).abs() / w.abs().max(floor_frac * scale))
        .fold(0.0, f64::max)
}

/// Affine least-squares of `s_k` on the centered window against the Prop.-1
/// taps (2% per-tap gate), plus the orthogonality-of-error property of the
/// same stream: corr(v - s, q_i) must vanish (1% gate).
pub fn linear_regression_checks(
    cfg: &Config,
    opts: &ValidateOptions,
) -> Result<Vec<CheckResult>, Error> {
    let t = cfg.equalizer.t;
    let mut rng = stream_rng(opts.seed, 2);
    let lead = cfg.channel.l - 1 + t;
    let rows = opts.pairs + lead + t;
    let (bits, obs, cir) = long_run(cfg, rows, &mut rng)?;
    let taps = design_linear_fse(&cir, cfg.channel.eta, t)?;
    let n = taps.b.len();
    let dim = n + 1; // intercept

    let mut xtx = vec![0.0f64; dim * dim];
    let mut xts = vec![0.0f64; dim];
    let mut x = vec![0.0f64; dim];
    // Orthogonality accumulators: residual-window cross moments.
    let mut resid_q = vec![0.0f64; n];
    let mut resid_sum = 0.0f64;
    let mut resid_sq = 0.0f64;
    let samples = opts.pairs;
    for k0 in lead..lead + samples {
        for i in 0..n {
            let (j, m0) = (i / cir.m, i % cir.m);
            x[i] = obs.get(k0 + j - t, m0) as f64;
        }
        x[n] = 1.0;
        let s = bits[k0] as f64;
        for i in 0..dim {
            for j in i..dim {
                xtx[i * dim + j] += x[i] * x[j];
            }
            xts[i] += x[i] * s;
        }
        let v: f64 = taps.b.iter().zip(&x[..n]).map(|(b, q)| b * q).sum::<f64>() + taps.b_c;
        let r = v - s;
        resid_sum += r;
        resid_sq += r * r;
        for i in 0..n {
            resid_q[i] += r * x[i];
        }
    }
    for i in 0..dim {
        for j in 0..i {
            xtx[i * dim + j] = xtx[j * dim + i];
        }
    }
    let sol = solve_normal_equations(&xtx, &xts, dim)?;
    let mut dev = floored_devs(&sol[..n], &taps.b, 0.05);
    let scale = taps.b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    dev = dev.max((sol[n] - taps.b_c).abs() / taps.b_c.abs().max(0.05 * scale));
    let regression = CheckResult::gate("linear-regression-oracle", dev, 0.02, "per-tap deviation");

    // corr(v - s, q_i): E{(v-s) q} = 0 is the MMSE orthogonality principle.
    let nf = samples as f64;
    let r_mean = resid_sum / nf;
    let r_var = resid_sq / nf - r_mean * r_mean;
    let mut max_corr: f64 = 0.0;
    for i in 0..n {
        let q_mean = xtx[i * dim + n] / nf; // column against the intercept
        let q_var = xtx[i * dim + i] / nf - q_mean * q_mean;
        let cov = resid_q[i] / nf - r_mean * q_mean;
        max_corr = max_corr.max((cov / (r_var * q_var).sqrt()).abs());
    }
    let ortho = CheckResult::gate("error-orthogonality", max_corr, 0.01, "residual correlation");
    Ok(vec![regression, ortho])
}

/// Genie-feedback least-squares against the Prop.-2 taps: regress `s_k` on
/// the causal window and the true previous symbols; the coefficients must be
/// `b`, `-a`, and `b_c` (2% per-tap gate with the same floor).
pub fn dfe_regression_check(cfg: &Config, opts: &ValidateOptions) -> Result<CheckResult, Error> {
    let (l1, l2) = (cfg.equalizer.l1, cfg.equalizer.l2);
    let mut rng = stream_rng(opts.seed, 3);
    let lead = (cfg.channel.l - 1).max(l2);
    let rows = opts.pairs + lead + l1 + 1;
    let (bits, obs, cir) = long_run(cfg, rows, &mut rng)?;
    let taps = design_dfe(&cir, cfg.channel.eta, l1, l2)?;
    let nq = taps.b.len();
    let dim = nq + l2 + 1;

    let mut xtx = vec![0.0f64; dim * dim];
    let mut xts = vec![0.0f64; dim];
    let mut x = vec![0.0f64; dim];
    for k0 in lead..lead + opts.pairs {
        for i in 0..nq {
            let (j, m0) = (i / cir.m, i % cir.m);
            x[i] = obs.get(k0 + j, m0) as f64;
        }
        for tau0 in 0..l2 {
            x[nq + tau0] = bits[k0 - 1 - tau0] as f64; // genie: true symbols
        }
        x[dim - 1] = 1.0;
        let s = bits[k0] as f64;
        for i in 0..dim {
            for j in i..dim {
                xtx[i * dim + j] += x[i] * x[j];
            }
            xts[i] += x[i] * s;
        }
    }
    for i in 0..dim {
        for j in 0..i {
            xtx[i * dim + j] = xtx[j * dim + i];
        }
    }
    let sol = solve_normal_equations(&xtx, &xts, dim)?;
    let minus_a: Vec<f64> = taps.a.iter().map(|a| -a).collect();
    let mut dev = floored_devs(&sol[..nq], &taps.b, 0.05);
    dev = dev.max(floored_devs(&sol[nq..nq + l2], &minus_a, 0.05));
    let scale = taps.b.iter().chain(&taps.a).fold(0.0f64, |m, x| m.max(x.abs()));
    dev = dev.max((sol[dim - 1] - taps.b_c).abs() / taps.b_c.abs().max(0.05 * scale));
    Ok(CheckResult::gate("dfe-regression-oracle", dev, 0.02, "per-tap deviation"))
}

// ---------------------------------------------------------------------------
// Detector equivalence
// ---------------------------------------------------------------------------

/// MLSD (and DFSD at λ = L) against exhaustive search on random short
/// frames: winning log-likelihoods must agree to 1e-9.
pub fn viterbi_equivalence_checks(
    cfg: &Config,
    opts: &ValidateOptions,
) -> Result<Vec<CheckResult>, Error> {
    let mut rng = stream_rng(opts.seed, 4);
    let eta = cfg.channel.eta;
    let grid = [0.2 * cfg.channel.a, 0.8 * cfg.channel.a, 2.0 * cfg.channel.a];
    let mut max_mlsd: f64 = 0.0;
    let mut max_dfsd: f64 = 0.0;
    for trial in 0..opts.frames {
        let a = grid[trial % grid.len()];
        let cir = build_cir_table(&ChannelParams { a, ..cfg.channel.clone() })?;
        let k = rng.gen_range(1..=12usize);
        let bits = generate_bits(k, &mut rng);
        let obs = simulate_observations(&cir, &bits, eta, 0, &mut rng)?;
        let ex = exhaustive_mlsd(&obs, &cir, eta)?;
        let vit = mlsd_viterbi(&obs, &cir, eta);
        let dfsd = dfsd_viterbi(&obs, &cir, eta, cir.l)?;
        max_mlsd = max_mlsd.max((vit.log_likelihood - ex.log_likelihood).abs());
        max_dfsd = max_dfsd.max((dfsd.log_likelihood - ex.log_likelihood).abs());
    }
    Ok(vec![
        CheckResult::gate("viterbi-exhaustive-equivalence", max_mlsd, 1e-9, "log-likelihood gap"),
        CheckResult::gate("dfsd-full-memory-equivalence", max_dfsd, 1e-9, "log-likelihood gap"),
    ])
}

// ---------------------------------------------------------------------------
// Moment and scalar-function oracles
// ---------------------------------------------------------------------------

/// Conditional output moments against Poisson redraws at a fixed window
/// (1% mean gate, 3% variance gate).
pub fn moments_check(cfg: &Config, opts: &ValidateOptions) -> Result<CheckResult, Error> {
    let t = cfg.equalizer.t;
    let cir = build_cir_table(&cfg.channel)?;
    let stats = build_stats(&cir, cfg.channel.eta, &SampleIndexMap::centered(t, cir.m));
    let taps = design_linear_fse(&cir, cfg.channel.eta, t)?;
    let mut wbits = vec![0u8; 2 * t + cir.l];
    for (i, b) in wbits.iter_mut().enumerate() {
        *b = ((i * 5 + 3) % 3 == 0) as u8; // fixed, asymmetric pattern
    }
    let window = SequenceWindow::new(wbits, t, cir.l)?;
    let nu0 = build_nu(&cir, cfg.channel.eta, &window, 0);
    let nu1 = build_nu(&cir, cfg.channel.eta, &window, 1);
    let moments = conditional_moments(&stats, &nu0, &nu1)?;

    let mut rng = stream_rng(opts.seed, 5);
    let mut worst_mu: f64 = 0.0;
    let mut worst_var: f64 = 0.0;
    for (nu, mu_want, var_want) in
        [(&nu0, moments.mu0, moments.var0), (&nu1, moments.mu1, moments.var1)]
    {
        let dists: Vec<Poisson<f64>> =
            nu.as_vec().iter().map(|&r| Poisson::new(r).unwrap()).collect();
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..opts.redraws {
            let mut v = taps.b_c;
            for (b, d) in taps.b.iter().zip(&dists) {
                v += b * d.sample(&mut rng);
            }
            sum += v;
            sum_sq += v * v;
        }
        let nf = opts.redraws as f64;
        let mean = sum / nf;
        let var = sum_sq / nf - mean * mean;
        worst_mu = worst_mu.max((mean - mu_want).abs() / mu_want.abs());
        worst_var = worst_var.max((var - var_want).abs() / var_want);
    }
    let dev = worst_mu.max(worst_var / 3.0); // normalize both to the 1% gate
    Ok(CheckResult {
        name: "conditional-moments-oracle",
        passed: worst_mu <= 0.01 && worst_var <= 0.03,
        detail: format!(
            "mean deviation {worst_mu:.3e} (gate 1e-2), variance deviation {worst_var:.3e} \
             (gate 3e-2), combined {dev:.3e}"
        ),
    })
}

/// `exp(poisson_log_pmf)` against iterative pmf products, plus the rate-zero
/// point mass.
pub fn poisson_pmf_check(opts: &ValidateOptions) -> CheckResult {
    let mut rng = stream_rng(opts.seed, 6);
    let mut max_dev: f64 = 0.0;
    for _ in 0..500 {
        let mu = rng.gen_range(0.01..60.0);
        let g = rng.gen_range(0..250u64);
        let mut pmf = (-mu).exp();
        for i in 1..=g {
            pmf *= mu / i as f64;
        }
        let got = poisson_log_pmf(g, mu).exp();
        max_dev = max_dev.max((got - pmf).abs() / pmf.max(1e-300));
    }
    let edges_ok = poisson_log_pmf(0, 0.0) == 0.0
        && poisson_log_pmf(3, 0.0) == f64::NEG_INFINITY;
    CheckResult {
        name: "poisson-log-pmf-oracle",
        passed: max_dev <= 1e-10 && edges_ok,
        detail: format!("max relative pmf deviation {max_dev:.3e} (gate 1e-10), edge cases: {edges_ok}"),
    }
}

/// Q-function identities: Q(0) = 1/2, symmetry, the 95th-percentile anchor,
/// and monotonicity.
pub fn q_function_check() -> CheckResult {
    let mut max_dev = (q_function(0.0) - 0.5).abs();
    for i in 0..100 {
        let x = -6.0 + 0.12 * i as f64;
        max_dev = max_dev.max((q_function(x) + q_function(-x) - 1.0).abs());
    }
    max_dev = max_dev.max((q_function(1.6448536269514722) - 0.05).abs());
    let mut monotone = true;
    let mut prev = f64::INFINITY;
    for i in 0..400 {
        let q = q_function(-8.0 + 0.04 * i as f64);
        monotone &= q < prev;
        prev = q;
    }
    CheckResult {
        name: "q-function-identities",
        passed: max_dev <= 1e-10 && monotone,
        detail: format!("max identity deviation {max_dev:.3e} (gate 1e-10), monotone: {monotone}"),
    }
}

// ---------------------------------------------------------------------------
// Suite
// ---------------------------------------------------------------------------

/// Runs the full oracle suite in a fixed order. Setup failures (a design
/// that cannot be computed) surface as errors; gate failures come back as
/// `passed = false` results.
pub fn run_suite(cfg: &Config, opts: &ValidateOptions) -> Result<Vec<CheckResult>, Error> {
    let mut results = Vec::new();
    results.push(gamma_structure_check(cfg)?);
    results.push(covariance_check(cfg, opts)?);
    results.extend(linear_regression_checks(cfg, opts)?);
    results.push(dfe_regression_check(cfg, opts)?);
    results.extend(viterbi_equivalence_checks(cfg, opts)?);
    results.push(moments_check(cfg, opts)?);
    results.push(mmse_range_check(cfg)?);
    results.push(poisson_pmf_check(opts));
    results.push(q_function_check());
    Ok(results)
}

// ---------------------------------------------------------------------------
