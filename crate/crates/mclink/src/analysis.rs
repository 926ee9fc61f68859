//! Closed-form BER of the linear fractionally-spaced equalizer with
//! threshold detection, under a Gaussian approximation of the equalizer
//! output.
//!
//! Conditioned on the bits that reach the detection window, every received
//! sample is an independent Poisson count, so the affine output
//! `v = b'q + b_c` has conditional mean `b'ν + b_c` and conditional variance
//! `Σ_i b[i]² ν[i]` (a Poisson count's variance equals its rate). Treating
//! `v` as Gaussian with those moments and averaging the two threshold error
//! probabilities over every interfering sequence gives the closed-form BER.
//!
//! The Gaussian approximation lives only in this module; simulation elsewhere
//! stays Poisson-exact.

use crate::channel::CirTable;
use crate::equalize::{build_stats, SampleIndexMap, SecondOrderStats};
use crate::numerics::spd_solve;
use crate::Error;

/// Enumeration guard: `2^(2T+L)` windows must stay tractable.
const MAX_WINDOW_BITS: usize = 24;

// ---------------------------------------------------------------------------
// Sequence windows and conditional rates
// ---------------------------------------------------------------------------

/// The bits that affect detection of symbol `s_k` through a centered window
/// of half-width `T`: `s_{k+T} ..= s_{k-T-L+1}`, stored newest-first so that
/// `bit(p)` is `s_{k+T-p}` and position `T` holds `s_k` itself.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceWindow {
    bits: Vec<u8>,
    t: usize,
    l: usize,
}

impl SequenceWindow {
    /// Wraps `2T + L` bits (each 0/1), newest (`s_{k+T}`) first.
    pub fn new(bits: Vec<u8>, t: usize, l: usize) -> Result<SequenceWindow, Error> {
        if bits.len() != 2 * t + l {
            return Err(Error::InvalidArgument(format!(
                "sequence window needs 2T+L = {} bits, got {}",
                2 * t + l,
                bits.len()
            )));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidArgument("window bits must be 0 or 1".into()));
        }
        Ok(SequenceWindow { bits, t, l })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Bit at position `p`, i.e. `s_{k+T-p}`; positions outside the stored
    /// range are silence (0).
    #[inline]
    pub fn bit(&self, p: usize) -> u8 {
        self.bits.get(p).copied().unwrap_or(0)
    }

    /// The detected symbol `s_k` (position `T`).
    pub fn center(&self) -> u8 {
        self.bits[self.t]
    }
}

/// Conditional Poisson rates of the centered observation window given a
/// [`SequenceWindow`]: `(2T+1)` rows of `M` sampling instants.
#[derive(Debug, Clone, PartialEq)]
pub struct NuMatrix {
    nu: Vec<f64>,
    /// Rows, `2T + 1`.
    pub rows: usize,
    /// Samples per row.
    pub m: usize,
}

impl NuMatrix {
    /// Rate of row `j0` (0-based; row `j0` observes symbol `k - T + j0`),
    /// sampling instant `m0`.
    #[inline]
    pub fn get(&self, j0: usize, m0: usize) -> f64 {
        self.nu[j0 * self.m + m0]
    }

    /// Row-major flattening — exactly `vec(ν')`, the order used by the
    /// centered [`SampleIndexMap`].
    pub fn as_vec(&self) -> &[f64] {
        &self.nu
    }
}

/// Conditional rates `ν_α[j][m] = η + Σ_l h[l][m] · s_{k-T+j0-l0}` with `s_k`
/// replaced by `alpha` (0-based `j0`, `l0`).
///
/// Row `j0` observes symbol `k - T + j0`; the tap `l0` symbols back is
/// `s_{k-T+j0-l0}`, which sits at window position `p = 2T - j0 + l0`. Over
/// `j0 ∈ [0, 2T]` and `l0 ∈ [0, L-1]` that is `p ∈ [0, 2T+L-1]` — always
/// inside the stored window, so no symbol outside it is ever needed.
pub fn build_nu(cir: &CirTable, eta: f64, window: &SequenceWindow, alpha: u8) -> NuMatrix {
    debug_assert_eq!(window.l, cir.l, "window and CIR table disagree on L");
    debug_assert!(alpha <= 1, "alpha must be a bit");
    let t = window.t;
    let rows = 2 * t + 1;
    let mut nu = vec![0.0; rows * cir.m];
    for j0 in 0..rows {
        for m0 in 0..cir.m {
            let mut rate = eta;
            for l0 in 0..cir.l {
                let p = 2 * t - j0 + l0;
                let s = if p == t { alpha } else { window.bit(p) };
                if s == 1 {
                    rate += cir.h(l0, m0);
                }
            }
            nu[j0 * cir.m + m0] = rate;
        }
    }
    NuMatrix { nu, rows, m: cir.m }
}

// ---------------------------------------------------------------------------
// Conditional output moments
// ---------------------------------------------------------------------------

/// Gaussian-approximation moments of the equalizer output conditioned on
/// `s_k = 0` and `s_k = 1` (for a fixed interfering sequence).
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalMoments {
    pub mu0: f64,
    pub mu1: f64,
    pub var0: f64,
    pub var1: f64,
}

/// Mean and variance of `v = b'q + b_c` when `q[i] ~ Poisson(nu[i])`
/// independently.
#[inline]
fn moments_from_taps(b: &[f64], b_c: f64, nu: &[f64]) -> (f64, f64) {
    let mut mu = b_c;
    let mut var = 0.0;
    for (bi, ni) in b.iter().zip(nu) {
        mu += bi * ni;
        var += bi * bi * ni;
    }
    (mu, var)
}

/// Conditional moments of the MMSE linear equalizer designed from `stats`:
/// `μ_α = b'vec(ν_α') + b_c` and `σ_α² = Σ_i b[i]² ν_α[i]`, with
/// `b = Γ⁻¹ξ` and `b_c = 1/2 - b'E{q}` (equivalently
/// `μ_α = 1/2 + ξ'Γ⁻¹(vec(ν_α') - E{q})`).
pub fn conditional_moments(
    stats: &SecondOrderStats,
    nu0: &NuMatrix,
    nu1: &NuMatrix,
) -> Result<ConditionalMoments, Error> {
    if nu0.as_vec().len() != stats.n || nu1.as_vec().len() != stats.n {
        return Err(Error::InvalidArgument(format!(
            "rate matrices must flatten to {} entries",
            stats.n
        )));
    }
    let (b, _) = spd_solve(&stats.gamma, stats.n, &stats.xi)?;
    let b_c = 0.5 - b.iter().zip(&stats.mean_q).map(|(x, y)| x * y).sum::<f64>();
    let (mu0, var0) = moments_from_taps(&b, b_c, nu0.as_vec());
    let (mu1, var1) = moments_from_taps(&b, b_c, nu1.as_vec());
    debug_assert!(var0 >= 0.0 && var1 >= 0.0);
    Ok(ConditionalMoments { mu0, mu1, var0, var1 })
}

// ---------------------------------------------------------------------------
// Error probabilities
// ---------------------------------------------------------------------------

/// Gaussian tail `Q(x) = P(Z > x) = (1/2) erfc(x/√2)`.
#[inline]
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// `P(v < gamma)` for the threshold detector when `s_k = 1` (missed one).
/// Degenerate `var = 0` outputs are point masses; the boundary `v = gamma`
/// detects as 1.
#[inline]
fn error_given_one(mu1: f64, var1: f64, gamma: f64) -> f64 {
    if var1 == 0.0 {
        return if mu1 < gamma { 1.0 } else { 0.0 };
    }
    1.0 - q_function((gamma - mu1) / var1.sqrt())
}

/// `P(v >= gamma)` when `s_k = 0` (false one).
#[inline]
fn error_given_zero(mu0: f64, var0: f64, gamma: f64) -> f64 {
    if var0 == 0.0 {
        return if mu0 >= gamma { 1.0 } else { 0.0 };
    }
    q_function((gamma - mu0) / var0.sqrt())
}

/// Lays interference pattern `n` out over the window positions, skipping the
/// center (`s_k`), which is left 0: bit `0` of `n` fills the first non-center
/// position, and so on.
#[inline]
fn spread_pattern(n: usize, t: usize, bits: &mut [u8]) {
    let mut src = 0;
    for (p, slot) in bits.iter_mut().enumerate() {
        if p == t {
            *slot = 0;
        } else {
            *slot = ((n >> src) & 1) as u8;
            src += 1;
        }
    }
}

/// Closed-form BER of the MMSE linear equalizer (half-window `T`) with
/// threshold `gamma`, averaging the Gaussian-approximation error probability
/// over every interfering sequence:
///
/// `P_e = 2^{-(2T+L-1)} Σ_windows [ (1/2)(1 - Q((γ-μ₁)/σ₁)) + (1/2) Q((γ-μ₀)/σ₀) ]`
///
/// The sum enumerates the `2T+L-1` interfering bits once and averages both
/// `s_k` hypotheses per window, so every one of the `2^(2T+L)` full windows
/// carries weight `2^{-(2T+L)}` and none is double-counted.
pub fn analytical_ber_linear(
    cir: &CirTable,
    eta: f64,
    t: usize,
    gamma: f64,
) -> Result<f64, Error> {
    let window_bits = 2 * t + cir.l;
    if window_bits > MAX_WINDOW_BITS {
        return Err(Error::InvalidArgument(format!(
            "window enumeration needs 2T+L <= {MAX_WINDOW_BITS}, got {window_bits}"
        )));
    }
    if !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!("threshold must be finite, got {gamma}")));
    }
    let map = SampleIndexMap::centered(t, cir.m);
    let stats = build_stats(cir, eta, &map);
    let (b, _) = spd_solve(&stats.gamma, stats.n, &stats.xi)?;
    let b_c = 0.5 - b.iter().zip(&stats.mean_q).map(|(x, y)| x * y).sum::<f64>();

    let interferers = window_bits - 1; // every position except s_k
    let patterns = 1usize << interferers;
    let mut total = 0.0;
    let mut bits = vec![0u8; window_bits];
    for n in 0..patterns {
        spread_pattern(n, t, &mut bits);
        let window = SequenceWindow { bits: std::mem::take(&mut bits), t, l: cir.l };
        let nu0 = build_nu(cir, eta, &window, 0);
        let nu1 = build_nu(cir, eta, &window, 1);
        let (mu0, var0) = moments_from_taps(&b, b_c, nu0.as_vec());
        let (mu1, var1) = moments_from_taps(&b, b_c, nu1.as_vec());
        total += 0.5 * error_given_one(mu1, var1, gamma) + 0.5 * error_given_zero(mu0, var0, gamma);
        bits = window.bits;
    }
    let pe = total / patterns as f64;
    if gamma == 0.5 {
        // The MMSE-unbiased output thresholded at its midpoint can never be
        // worse than guessing.
        assert!(pe <= 0.5 + 1e-12, "analytical BER {pe} above the guessing bound");
    }
    Ok(pe.clamp(0.0, 1.0))
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_cir_table, mean_rate, ChannelParams};
    use crate::config::sec_v_defaults;
    use crate::equalize::{design_linear_fse, linear_fse_output};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;
    use rand_distr::{Distribution, Poisson};

    fn sec_v_cir() -> CirTable {
        build_cir_table(&sec_v_defaults().channel).unwrap()
    }

    fn random_window(t: usize, l: usize, rng: &mut impl Rng) -> SequenceWindow {
        let bits = (0..2 * t + l).map(|_| rng.gen_range(0..2u8)).collect();
        SequenceWindow::new(bits, t, l).unwrap()
    }

    #[test]
    fn window_validates_shape_and_bits() {
        assert!(SequenceWindow::new(vec![0; 7], 1, 5).is_ok());
        assert!(SequenceWindow::new(vec![0; 6], 1, 5).is_err(), "wrong length");
        assert!(SequenceWindow::new(vec![2; 7], 1, 5).is_err(), "non-bit entry");
        let w = SequenceWindow::new(vec![1, 0, 1, 0, 1, 0, 1], 1, 5).unwrap();
        assert_eq!(w.center(), w.bit(1 /* = T */));
        assert_eq!(w.bit(99), 0, "outside the stored range is silence");
    }

    #[test]
    fn all_zero_window_gives_background_only() {
        let cir = sec_v_cir();
        let w = SequenceWindow::new(vec![0; 7], 1, 5).unwrap();
        let nu = build_nu(&cir, 1.0, &w, 0);
        for j0 in 0..nu.rows {
            for m0 in 0..nu.m {
                assert_eq!(nu.get(j0, m0), 1.0);
            }
        }
    }

    #[test]
    fn all_ones_window_gives_full_isi_sum() {
        // Every row of the centered window has all L taps inside the stored
        // range, so each entry is the complete column sum plus background.
        let cir = sec_v_cir();
        let eta = 1.0;
        let w = SequenceWindow::new(vec![1; 7], 1, 5).unwrap();
        let nu = build_nu(&cir, eta, &w, 1);
        for j0 in 0..nu.rows {
            for m0 in 0..nu.m {
                let want = eta + (0..cir.l).map(|l0| cir.h(l0, m0)).sum::<f64>();
                assert!((nu.get(j0, m0) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn nu_matches_mean_rate_on_absolute_sequences() {
        // Cross-module oracle: lay the window out as an absolute bit
        // sequence and compare each nu row against mean_rate at the
        // corresponding absolute symbol index.
        let cir = sec_v_cir();
        let eta = 1.0;
        let t = 2usize;
        let l = cir.l;
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..50 {
            let w = random_window(t, l, &mut rng);
            // Absolute index of s_k such that the oldest window bit lands at 0.
            let k_abs = t + l - 1;
            let bits: Vec<u8> = (0..2 * t + l).map(|i| w.bit(k_abs + t - i)).collect();
            let nu = build_nu(&cir, eta, &w, w.center());
            for j0 in 0..nu.rows {
                let row_abs = k_abs + j0 - t;
                for m0 in 0..cir.m {
                    let want = mean_rate(&cir, &bits, eta, row_abs, m0);
                    assert!(
                        (nu.get(j0, m0) - want).abs() <= 1e-12,
                        "row {j0}, sample {m0}: {} vs {}",
                        nu.get(j0, m0),
                        want
                    );
                }
            }
        }
    }

    #[test]
    fn zero_gain_taps_collapse_to_bias() {
        // A = 0 makes xi = 0, so b = 0: mu = b_c = 1/2 and zero variance.
        let p = ChannelParams { a: 0.0, ..sec_v_defaults().channel };
        let cir = build_cir_table(&p).unwrap();
        let stats = build_stats(&cir, p.eta, &SampleIndexMap::centered(1, cir.m));
        let w = SequenceWindow::new(vec![0; 7], 1, 5).unwrap();
        let moments =
            conditional_moments(&stats, &build_nu(&cir, p.eta, &w, 0), &build_nu(&cir, p.eta, &w, 1))
                .unwrap();
        assert!((moments.mu0 - 0.5).abs() < 1e-15);
        assert!((moments.mu1 - 0.5).abs() < 1e-15);
        assert_eq!(moments.var0, 0.0);
        assert_eq!(moments.var1, 0.0);
    }

    #[test]
    fn moments_match_poisson_redraws() {
        // Monte Carlo oracle: fix one window, redraw the Poisson counts 10^6
        // times, and compare the empirical mean/variance of the equalizer
        // output against the closed-form conditional moments.
        let p = sec_v_defaults().channel;
        let cir = sec_v_cir();
        let t = 1usize;
        let stats = build_stats(&cir, p.eta, &SampleIndexMap::centered(t, cir.m));
        let taps = design_linear_fse(&cir, p.eta, t).unwrap();
        let w = SequenceWindow::new(vec![0, 1, 1, 0, 1, 0, 0], t, cir.l).unwrap();
        let nu0 = build_nu(&cir, p.eta, &w, 0);
        let nu1 = build_nu(&cir, p.eta, &w, 1);
        let moments = conditional_moments(&stats, &nu0, &nu1).unwrap();

        let rates = nu1.as_vec();
        let dists: Vec<Poisson<f64>> =
            rates.iter().map(|&r| Poisson::new(r).unwrap()).collect();
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        let redraws = 1_000_000usize;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut q = vec![0.0f64; rates.len()];
        for _ in 0..redraws {
            for (qi, d) in q.iter_mut().zip(&dists) {
                *qi = d.sample(&mut rng);
            }
            let v = linear_fse_output(&taps, &q).unwrap();
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / redraws as f64;
        let var = sum_sq / redraws as f64 - mean * mean;
        assert!(
            (mean - moments.mu1).abs() <= 0.01 * moments.mu1.abs(),
            "empirical mean {mean} vs mu1 {}",
            moments.mu1
        );
        assert!(
            (var - moments.var1).abs() <= 0.03 * moments.var1,
            "empirical variance {var} vs var1 {}",
            moments.var1
        );
    }

    #[test]
    fn moments_equal_expected_equalizer_output() {
        // Exact identity: mu_alpha is the equalizer output evaluated at the
        // conditional rate vector.
        let p = sec_v_defaults().channel;
        let cir = sec_v_cir();
        let t = 1usize;
        let stats = build_stats(&cir, p.eta, &SampleIndexMap::centered(t, cir.m));
        let taps = design_linear_fse(&cir, p.eta, t).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        for _ in 0..20 {
            let w = random_window(t, cir.l, &mut rng);
            let nu0 = build_nu(&cir, p.eta, &w, 0);
            let nu1 = build_nu(&cir, p.eta, &w, 1);
            let moments = conditional_moments(&stats, &nu0, &nu1).unwrap();
            let v0 = linear_fse_output(&taps, nu0.as_vec()).unwrap();
            let v1 = linear_fse_output(&taps, nu1.as_vec()).unwrap();
            assert!((moments.mu0 - v0).abs() <= 1e-12);
            assert!((moments.mu1 - v1).abs() <= 1e-12);
        }
    }

    #[test]
    fn moments_reject_mismatched_dimensions() {
        let cir = sec_v_cir();
        let stats = build_stats(&cir, 1.0, &SampleIndexMap::centered(1, cir.m));
        let w = SequenceWindow::new(vec![0; 5], 0, 5).unwrap(); // T = 0 rates
        let nu = build_nu(&cir, 1.0, &w, 0);
        assert!(conditional_moments(&stats, &nu, &nu).is_err());
    }

    #[test]
    fn q_function_identities() {
        assert!((q_function(0.0) - 0.5).abs() < 1e-15);
        for x in [-4.0, -1.3, -0.2, 0.7, 2.5, 6.0] {
            assert!((q_function(x) + q_function(-x) - 1.0).abs() < 1e-14, "symmetry at {x}");
        }
        // Standard-normal 95th percentile.
        assert!((q_function(1.6448536269514722) - 0.05).abs() < 1e-10);
        let mut prev = f64::INFINITY;
        for i in 0..200 {
            let q = q_function(-8.0 + i as f64 * 0.08);
            assert!(q < prev, "Q must be strictly decreasing over moderate x");
            assert!((0.0..=1.0).contains(&q));
            prev = q;
        }
    }

    #[test]
    fn degenerate_point_masses_are_step_functions() {
        // sigma = 0 with separated means: no error mass at all; threshold on
        // the wrong side: certain error. The boundary itself detects as 1.
        assert_eq!(error_given_one(1.0, 0.0, 0.5), 0.0);
        assert_eq!(error_given_zero(0.0, 0.0, 0.5), 0.0);
        assert_eq!(error_given_one(0.2, 0.0, 0.5), 1.0);
        assert_eq!(error_given_zero(0.7, 0.0, 0.5), 1.0);
        assert_eq!(error_given_one(0.5, 0.0, 0.5), 0.0, "v = gamma detects as 1");
        assert_eq!(error_given_zero(0.5, 0.0, 0.5), 1.0, "v = gamma detects as 1");
    }

    #[test]
    fn zero_gain_channel_has_half_error_rate() {
        // A = 0: v = 1/2 for every window, the boundary detects as 1, so
        // exactly the s_k = 0 half errs — P_e = 1/2, sitting right on the
        // guessing bound.
        let p = ChannelParams { a: 0.0, ..sec_v_defaults().channel };
        let cir = build_cir_table(&p).unwrap();
        let pe = analytical_ber_linear(&cir, p.eta, 1, 0.5).unwrap();
        assert!((pe - 0.5).abs() < 1e-15);
    }

    #[test]
    fn frozen_sec_v_anchors() {
        // P_e over the release sweep at T = 1, gamma = 1/2 (eta = 1).
        let base = sec_v_defaults().channel;
        let cases = [
            (5e3, 0.07445744983988695),
            (1e4, 0.020751952959732367),
            (1.5e4, 0.007186289755078813),
            (2e4, 0.002766328564000474),
            (3e4, 0.0004829044542239288),
        ];
        for (a, want) in cases {
            let cir = build_cir_table(&ChannelParams { a, ..base.clone() }).unwrap();
            let pe = analytical_ber_linear(&cir, base.eta, 1, 0.5).unwrap();
            assert!(
                (pe - want).abs() <= 1e-6 * want,
                "A = {a}: P_e = {pe:.12e}, want {want:.12e}"
            );
        }
    }

    #[test]
    fn ber_is_monotone_in_release_count() {
        let base = sec_v_defaults().channel;
        let mut prev = f64::INFINITY;
        for a in [2e3, 5e3, 1e4, 1.5e4, 2e4, 3e4] {
            let cir = build_cir_table(&ChannelParams { a, ..base.clone() }).unwrap();
            let pe = analytical_ber_linear(&cir, base.eta, 1, 0.5).unwrap();
            assert!(pe <= prev + 1e-15, "P_e rose from {prev} to {pe} at A = {a}");
            assert!(pe <= 0.5 + 1e-12, "guessing bound violated at A = {a}");
            prev = pe;
        }
    }

    #[test]
    fn enumeration_guard_rejects_large_windows() {
        let cir = sec_v_cir();
        assert!(analytical_ber_linear(&cir, 1.0, 10, 0.5).is_err(), "2T+L = 25 must refuse");
        assert!(analytical_ber_linear(&cir, 1.0, 9, 0.5).is_ok(), "2T+L = 23 fits the guard");
    }

    #[test]
    fn window_enumeration_is_complete() {
        // Counter check: spreading every interference pattern and taking both
        // s_k hypotheses must visit each of the 2^(2T+L) full windows exactly
        // once. Keys are built from the window contents, not the loop index,
        // so a spreading bug (skipped slot, collision) would show up here.
        let t = 1usize;
        let l = 5usize;
        let window_bits = 2 * t + l;
        let mut seen = vec![false; 1 << window_bits];
        let mut bits = vec![0u8; window_bits];
        for n in 0..(1usize << (window_bits - 1)) {
            spread_pattern(n, t, &mut bits);
            for alpha in 0..2u8 {
                bits[t] = alpha;
                let key: usize =
                    bits.iter().enumerate().map(|(p, &b)| (b as usize) << p).sum();
                assert!(!seen[key], "window {key:#09b} visited twice");
                seen[key] = true;
            }
        }
        assert!(seen.iter().all(|&s| s), "some full window never visited");
    }
}
