//! Detection: symbol-by-symbol thresholding, exact maximum-likelihood
//! sequence detection (Viterbi), reduced-state sequence detection with
//! per-survivor decision feedback, and an exhaustive-search oracle.
//!
//! Sequence detectors maximize the frame log-likelihood
//! `Σ_k Σ_m ln p(g_{k,m} | s_k, ..., s_{k-L+1})` with Poisson sample
//! likelihoods. Conventions shared by all of them:
//!
//! - the frame is preceded by known silence, so the all-zeros state starts at
//!   metric 0 and every other state at -inf;
//! - no tail symbols are forced: the best final-state survivor wins, followed
//!   by a full-block traceback;
//! - on exact metric ties the detector prefers bit 0 (equivalence tests
//!   compare achieved likelihood values, which are tie-robust);
//! - natural logarithms throughout.
//!
//! Bit histories are packed into integers LSB-first in recency: bit 0 of a
//! pattern is the newest symbol `s_k`, bit `l` is `s_{k-l}`. MLSD runs on
//! `2^(L-1)` states; DFSD on `2^(λ-1)` states, taking the `L-λ` older bits
//! from each state's surviving path (per-survivor feedback).

use crate::channel::{mean_rate, CirTable, ObservationMatrix};
use crate::numerics::ln_factorial;
use crate::Error;

/// Exhaustive search is 2^K; keep it an oracle, not a detector.
const EXHAUSTIVE_MAX_K: usize = 20;

// ---------------------------------------------------------------------------
// Pointwise pieces
// ---------------------------------------------------------------------------

/// Threshold decision: 1 iff `v >= gamma` (the boundary maps to 1).
#[inline]
pub fn threshold_detect(v: f64, gamma: f64) -> u8 {
    (v >= gamma) as u8
}

/// `ln p(g | mu)` for a Poisson count: `g ln(mu) - mu - ln(g!)`. At `mu = 0`
/// the pmf is a point mass at 0, so the log-pmf is 0 for `g = 0` and -inf
/// otherwise.
#[inline]
pub fn poisson_log_pmf(g: u64, mu: f64) -> f64 {
    debug_assert!(mu >= 0.0, "Poisson rate must be nonnegative");
    if mu == 0.0 {
        return if g == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    g as f64 * mu.ln() - mu - ln_factorial(g)
}

/// Same value as [`poisson_log_pmf`] with the logarithm precomputed; the
/// trellis hot loop uses this against cached per-pattern rates.
#[inline]
fn log_pmf_cached(g: u64, mu: f64, ln_mu: f64) -> f64 {
    if mu == 0.0 {
        return if g == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    g as f64 * ln_mu - mu - ln_factorial(g)
}

/// Decoded frame plus the log-likelihood its sequence achieves.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionSequence {
    pub bits: Vec<u8>,
    pub log_likelihood: f64,
}

// ---------------------------------------------------------------------------
// Cached branch rates
// ---------------------------------------------------------------------------

/// Poisson rates (and their logs) for every L-bit history pattern and
/// sampling instant: `rate[p * M + m]` with pattern bit `l` = `s_{k-l}`.
struct RateTable {
    rate: Vec<f64>,
    ln_rate: Vec<f64>,
    l: usize,
    m: usize,
}

impl RateTable {
    fn build(cir: &CirTable, eta: f64) -> RateTable {
        let (l, m) = (cir.l, cir.m);
        let patterns = 1usize << l;
        let mut rate = vec![0.0; patterns * m];
        let mut ln_rate = vec![0.0; patterns * m];
        for p in 0..patterns {
            for m0 in 0..m {
                let mut r = eta;
                for l0 in 0..l {
                    if (p >> l0) & 1 == 1 {
                        r += cir.h(l0, m0);
                    }
                }
                rate[p * m + m0] = r;
                ln_rate[p * m + m0] = if r > 0.0 { r.ln() } else { f64::NEG_INFINITY };
            }
        }
        RateTable { rate, ln_rate, l, m }
    }

    /// Branch metric of one symbol row under history `pattern`.
    #[inline]
    fn branch(&self, pattern: usize, row: &[u64]) -> f64 {
        let base = pattern * self.m;
        let mut s = 0.0;
        for (m0, &g) in row.iter().enumerate() {
            s += log_pmf_cached(g, self.rate[base + m0], self.ln_rate[base + m0]);
        }
        s
    }
}

// ---------------------------------------------------------------------------
// Viterbi engines
// ---------------------------------------------------------------------------

/// Shared add-compare-select recursion. `lambda` sets the state count
/// (`2^(lambda-1)`); histories beyond the state live in per-survivor
/// registers, which is exact for `lambda = L` (the registers are empty) and
/// the reduced-state approximation otherwise.
fn viterbi(obs: &ObservationMatrix, cir: &CirTable, eta: f64, lambda: usize) -> DecisionSequence {
    let k = obs.k;
    let table = RateTable::build(cir, eta);
    let l = table.l;
    let state_bits = lambda - 1;
    let states = 1usize << state_bits;
    let state_mask = states - 1;
    let reg_bits = l - lambda;
    let reg_mask = (1usize << reg_bits) - 1;

    // Silence before the frame: only the all-zeros state is live.
    let mut metric = vec![f64::NEG_INFINITY; states];
    metric[0] = 0.0;
    let mut regs = vec![0usize; states];
    let mut new_metric = vec![0.0f64; states];
    let mut new_regs = vec![0usize; states];
    // Back-pointers: (predecessor state << 1) | input bit, per (step, state).
    // Storing the input explicitly keeps the traceback correct even when the
    // state is empty (lambda = 1), where the decided bit is in no state.
    let mut bp = vec![0u32; k * states];

    for k0 in 0..k {
        let row = obs.row(k0);
        new_metric.iter_mut().for_each(|x| *x = f64::NEG_INFINITY);
        for old in 0..states {
            let base = metric[old];
            if base == f64::NEG_INFINITY {
                continue;
            }
            for u in 0..2usize {
                // Full L-bit history: input, state bits, register bits.
                let pattern = u | (old << 1) | (regs[old] << lambda);
                let cand = base + table.branch(pattern, row);
                let new_state = (u | (old << 1)) & state_mask;
                // Strict '>' keeps the earlier (smaller) predecessor on ties,
                // i.e. the path whose departing bit is 0.
                if cand > new_metric[new_state] {
                    new_metric[new_state] = cand;
                    bp[k0 * states + new_state] = ((old << 1) | u) as u32;
                    // The bit leaving the state joins the survivor register.
                    let departing = if state_bits == 0 { u } else { (old >> (state_bits - 1)) & 1 };
                    new_regs[new_state] = ((regs[old] << 1) | departing) & reg_mask;
                }
            }
        }
        std::mem::swap(&mut metric, &mut new_metric);
        std::mem::swap(&mut regs, &mut new_regs);
    }

    // Best final survivor; ascending scan prefers all-recent-zeros on ties.
    let mut best = 0usize;
    for s in 1..states {
        if metric[s] > metric[best] {
            best = s;
        }
    }
    let log_likelihood = metric[best];
    let mut bits = vec![0u8; k];
    let mut state = best;
    for k0 in (0..k).rev() {
        let entry = bp[k0 * states + state] as usize;
        bits[k0] = (entry & 1) as u8;
        state = entry >> 1;
    }
    DecisionSequence { bits, log_likelihood }
}

/// Exact MLSD: Viterbi over the full `2^(L-1)`-state trellis. Maximizes the
/// frame log-likelihood over all `2^K` sequences; trailing observation rows
/// are ignored.
pub fn mlsd_viterbi(obs: &ObservationMatrix, cir: &CirTable, eta: f64) -> DecisionSequence {
    viterbi(obs, cir, eta, cir.l)
}

/// Reduced-state sequence detection over `2^(λ-1)` states: the hypothesized
/// history covers `s_k ..= s_{k-λ+1}`, and the remaining `L-λ` taps take each
/// state's surviving decisions (per-survivor feedback). `λ = L` is exactly
/// MLSD; `λ = 1` degenerates to symbol-by-symbol detection with full decision
/// feedback on a single state.
pub fn dfsd_viterbi(
    obs: &ObservationMatrix,
    cir: &CirTable,
    eta: f64,
    lambda: usize,
) -> Result<DecisionSequence, Error> {
    if lambda < 1 || lambda > cir.l {
        return Err(Error::InvalidArgument(format!(
            "lambda must be in 1..=L (= {}), got {lambda}",
            cir.l
        )));
    }
    Ok(viterbi(obs, cir, eta, lambda))
}

/// Brute-force argmax of the frame log-likelihood over all `2^K` sequences.
/// On exact metric ties returns the lexicographically smallest sequence
/// (`s_1` most significant). Guarded to `K <= 20`.
pub fn exhaustive_mlsd(
    obs: &ObservationMatrix,
    cir: &CirTable,
    eta: f64,
) -> Result<DecisionSequence, Error> {
    let k = obs.k;
    if k > EXHAUSTIVE_MAX_K {
        return Err(Error::InvalidArgument(format!(
            "exhaustive search is limited to K <= {EXHAUSTIVE_MAX_K}, got {k}"
        )));
    }
    let table = RateTable::build(cir, eta);
    let mask = (1usize << table.l) - 1;
    let mut best_ll = f64::NEG_INFINITY;
    let mut best_n = 0u64;
    for n in 0..(1u64 << k) {
        let mut pattern = 0usize;
        let mut ll = 0.0;
        for k0 in 0..k {
            let bit = ((n >> (k - 1 - k0)) & 1) as usize;
            pattern = ((pattern << 1) | bit) & mask;
            ll += table.branch(pattern, obs.row(k0));
            if ll == f64::NEG_INFINITY {
                break;
            }
        }
        if ll > best_ll {
            best_ll = ll;
            best_n = n;
        }
    }
    let bits = (0..k).map(|k0| ((best_n >> (k - 1 - k0)) & 1) as u8).collect();
    Ok(DecisionSequence { bits, log_likelihood: best_ll })
}

/// Frame log-likelihood of a given bit sequence — the quantity the sequence
/// detectors maximize, recomputed directly from [`mean_rate`]. Used by the
/// validation suite to check the winning path metric.
pub fn sequence_log_likelihood(
    obs: &ObservationMatrix,
    cir: &CirTable,
    eta: f64,
    bits: &[u8],
) -> f64 {
    let mut ll = 0.0;
    for k0 in 0..obs.k {
        for m0 in 0..cir.m {
            ll += poisson_log_pmf(obs.get(k0, m0), mean_rate(cir, bits, eta, k0, m0));
        }
    }
    ll
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_cir_table, generate_bits, simulate_observations, ChannelParams};
    use crate::config::sec_v_defaults;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn sec_v_cir() -> CirTable {
        build_cir_table(&sec_v_defaults().channel).unwrap()
    }

    #[test]
    fn threshold_boundary_is_one() {
        assert_eq!(threshold_detect(0.5, 0.5), 1, "boundary counts as 1");
        assert_eq!(threshold_detect(0.49, 0.5), 0);
        assert_eq!(threshold_detect(1.7, 0.5), 1);
        assert_eq!(threshold_detect(-3.0, 0.5), 0);
    }

    #[test]
    fn log_pmf_known_values() {
        assert!((poisson_log_pmf(0, 3.0) + 3.0).abs() < 1e-15);
        let want = 2.0f64.ln() - 2.0;
        assert!((poisson_log_pmf(2, 2.0) - want).abs() < 1e-15);
        assert_eq!(poisson_log_pmf(0, 0.0), 0.0);
        assert_eq!(poisson_log_pmf(5, 0.0), f64::NEG_INFINITY);
    }

    #[test]
    fn log_pmf_against_iterative_oracle() {
        // exp(log pmf) must equal the pmf computed by iterative
        // multiplication: p(g) = exp(-mu) prod_{i=1..g} mu/i.
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for _ in 0..500 {
            let mu = rng.gen_range(0.01..50.0);
            let g = rng.gen_range(0..200u64);
            let mut pmf = (-mu as f64).exp();
            for i in 1..=g {
                pmf *= mu / i as f64;
            }
            let got = poisson_log_pmf(g, mu).exp();
            assert!(
                (got - pmf).abs() <= 1e-10 * pmf.max(1e-300),
                "g = {g}, mu = {mu}: {got} vs {pmf}"
            );
        }
    }

    #[test]
    fn single_symbol_memoryless_is_two_hypothesis_test() {
        // K = 1, L = 1: the detector picks the larger of the two
        // single-sample likelihood sums.
        let cir = CirTable::from_parts(vec![4.0, 6.0], 1, 2, 1.0, 1.5, 0.75).unwrap();
        let eta = 0.5;
        for g_row in [[0u64, 0], [3, 5], [10, 12]] {
            let obs = ObservationMatrix::from_rows(&[g_row.to_vec()], 1, 2);
            let ll0: f64 = (0..2).map(|m| poisson_log_pmf(g_row[m], eta)).sum();
            let ll1: f64 = (0..2).map(|m| poisson_log_pmf(g_row[m], cir.h(0, m) + eta)).sum();
            let want = u8::from(ll1 > ll0); // tie prefers 0
            let dec = mlsd_viterbi(&obs, &cir, eta);
            assert_eq!(dec.bits, vec![want], "g = {g_row:?}");
            assert!((dec.log_likelihood - ll0.max(ll1)).abs() < 1e-12);
        }
    }

    #[test]
    fn all_zero_observations_decode_to_silence() {
        // With g = 0 everywhere, adding any emission only subtracts rate
        // mass: the all-zero sequence is the unique maximizer.
        let cir = sec_v_cir();
        let obs = ObservationMatrix::from_rows(&vec![vec![0u64; 3]; 8], 8, 3);
        let ex = exhaustive_mlsd(&obs, &cir, 1.0).unwrap();
        assert_eq!(ex.bits, vec![0u8; 8]);
        let vit = mlsd_viterbi(&obs, &cir, 1.0);
        assert_eq!(vit.bits, vec![0u8; 8]);
        assert!((vit.log_likelihood - ex.log_likelihood).abs() < 1e-12);
    }

    #[test]
    fn viterbi_matches_exhaustive_on_random_frames() {
        // Smoke-scale version of the acceptance criterion: the full
        // 1000-trial run lives in the validation suite.
        let p = sec_v_defaults().channel;
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for trial in 0..60 {
            let a = [2e3, 8e3, 2e4][trial % 3];
            let cir = build_cir_table(&ChannelParams { a, ..p.clone() }).unwrap();
            let k = rng.gen_range(1..=10usize);
            let bits = generate_bits(k, &mut rng);
            let obs = simulate_observations(&cir, &bits, p.eta, 0, &mut rng).unwrap();
            let ex = exhaustive_mlsd(&obs, &cir, p.eta).unwrap();
            let vit = mlsd_viterbi(&obs, &cir, p.eta);
            let dfsd_full = dfsd_viterbi(&obs, &cir, p.eta, cir.l).unwrap();
            assert!(
                (vit.log_likelihood - ex.log_likelihood).abs() <= 1e-9,
                "trial {trial}: viterbi {} vs exhaustive {}",
                vit.log_likelihood,
                ex.log_likelihood
            );
            assert!(
                (dfsd_full.log_likelihood - ex.log_likelihood).abs() <= 1e-9,
                "trial {trial}: dfsd(L) {} vs exhaustive {}",
                dfsd_full.log_likelihood,
                ex.log_likelihood
            );
        }
    }

    #[test]
    fn winning_metric_equals_recomputed_likelihood() {
        let p = sec_v_defaults().channel;
        let cir = sec_v_cir();
        let mut rng = ChaCha12Rng::seed_from_u64(19);
        for _ in 0..20 {
            let bits = generate_bits(40, &mut rng);
            let obs = simulate_observations(&cir, &bits, p.eta, 0, &mut rng).unwrap();
            for dec in [
                mlsd_viterbi(&obs, &cir, p.eta),
                dfsd_viterbi(&obs, &cir, p.eta, 2).unwrap(),
                dfsd_viterbi(&obs, &cir, p.eta, 1).unwrap(),
            ] {
                let recomputed = sequence_log_likelihood(&obs, &cir, p.eta, &dec.bits);
                assert!(
                    (dec.log_likelihood - recomputed).abs() <= 1e-9,
                    "metric {} vs recomputation {}",
                    dec.log_likelihood,
                    recomputed
                );
            }
        }
    }

    #[test]
    fn high_snr_recovers_the_transmitted_frame() {
        let p = ChannelParams { a: 1e6, ..sec_v_defaults().channel };
        let cir = build_cir_table(&p).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let mut exact = 0;
        for _ in 0..50 {
            let bits = generate_bits(64, &mut rng);
            let obs = simulate_observations(&cir, &bits, p.eta, 0, &mut rng).unwrap();
            if mlsd_viterbi(&obs, &cir, p.eta).bits == bits {
                exact += 1;
            }
        }
        assert!(exact >= 49, "high-SNR MLSD recovered only {exact}/50 frames");
    }

    #[test]
    fn dfsd_rejects_bad_lambda() {
        let cir = sec_v_cir();
        let obs = ObservationMatrix::from_rows(&vec![vec![0u64; 3]; 4], 4, 3);
        assert!(dfsd_viterbi(&obs, &cir, 1.0, 0).is_err());
        assert!(dfsd_viterbi(&obs, &cir, 1.0, cir.l + 1).is_err());
    }

    #[test]
    fn exhaustive_guards_frame_length() {
        let cir = sec_v_cir();
        let obs = ObservationMatrix::from_rows(&vec![vec![0u64; 3]; 21], 21, 3);
        assert!(exhaustive_mlsd(&obs, &cir, 1.0).is_err(), "K = 21 must be refused");
    }

    #[test]
    fn detection_is_deterministic() {
        let p = sec_v_defaults().channel;
        let cir = sec_v_cir();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let bits = generate_bits(100, &mut rng);
        let obs = simulate_observations(&cir, &bits, p.eta, 0, &mut rng).unwrap();
        let a = dfsd_viterbi(&obs, &cir, p.eta, 2).unwrap();
        let b = dfsd_viterbi(&obs, &cir, p.eta, 2).unwrap();
        assert_eq!(a, b);
    }
}
