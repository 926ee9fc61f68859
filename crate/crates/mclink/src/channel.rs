//! Diffusive channel model: impulse response on the fractional sampling grid
//! and exact Poisson observation generation.
//!
//! A release of `A` molecules at time 0 produces an expected count at the
//! transparent spherical receiver, a time `t` later, of
//!
//! ```text
//! cir(t) = A V / (4 pi D t)^(3/2) * exp(-((r - v1 t)^2 + (v2 t)^2) / (4 D t))
//! ```
//!
//! with `V = (4/3) pi a_rx^3` the receiver volume, `r` the transmitter
//! distance, `v1`/`v2` the flow components parallel/perpendicular to the
//! transmitter-receiver axis. The receiver samples `M` times per symbol
//! interval `T_b = beta * t_peak`, so symbol `l-1` intervals back contributes
//! at elapsed time `T_{l,m} = (l-1) T_b + m dt`, `dt = T_b / M` (1-based
//! `l`, `m`; this module indexes both from 0). Counts are Poisson with rate
//! equal to the superposition of the last `L` symbols' contributions plus a
//! constant external interference `eta`.
//!
//! Boundary convention: symbols before the first and after the last frame
//! symbol are silence. Observation matrices carry `t_extra` trailing rows so
//! that detector look-ahead windows are always populated; a centered
//! equalizer window reaching *before* the frame reads zero counts (see
//! `montecarlo`).

use crate::numerics::golden_max;
use crate::Error;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Transmitted frame: one bit per symbol, values 0/1.
pub type SymbolSequence = Vec<u8>;

/// Search interval for the CIR peak, in seconds. Generous for any
/// physically plausible diffusion/flow parameter set.
const PEAK_BRACKET: (f64, f64) = (1e-9, 1e3);
/// Log-spaced coarse-scan resolution used to bracket the peak.
const PEAK_SCAN_PER_DECADE: usize = 200;
/// Relative tolerance of the golden-section refinement.
const PEAK_REL_TOL: f64 = 1e-10;

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

/// Physical and protocol parameters of the link. Strict SI units; counts are
/// dimensionless. Defaults (the reference parameter set) live in
/// [`crate::config`]; partial config sections fall back to them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelParams {
    /// Diffusion coefficient (m^2/s).
    pub d: f64,
    /// Transmitter-receiver distance (m).
    pub r: f64,
    /// Receiver radius (m).
    pub a_rx: f64,
    /// Flow component parallel to the transmitter-receiver axis (m/s).
    pub v1: f64,
    /// Flow component perpendicular to the axis (m/s).
    pub v2: f64,
    /// Molecules released per transmitted 1.
    pub a: f64,
    /// Expected external interference count per sample.
    pub eta: f64,
    /// Samples per symbol interval.
    pub m: usize,
    /// Channel memory in symbols.
    pub l: usize,
    /// Symbol-interval scale factor: T_b = beta * t_peak.
    pub beta: f64,
    /// Frame length in symbols.
    pub k: usize,
}

impl ChannelParams {
    /// Receiver volume V = (4/3) pi a_rx^3.
    pub fn volume(&self) -> f64 {
        4.0 / 3.0 * PI * self.a_rx.powi(3)
    }

    pub fn validate(&self) -> Result<(), Error> {
        let finite = [self.d, self.r, self.a_rx, self.v1, self.v2, self.a, self.eta, self.beta]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("non-finite channel parameter".into()));
        }
        if !(self.d > 0.0) {
            return Err(Error::InvalidArgument(format!("D must be > 0, got {}", self.d)));
        }
        if !(self.r > 0.0) {
            return Err(Error::InvalidArgument(format!("r must be > 0, got {}", self.r)));
        }
        if !(self.a_rx > 0.0) {
            return Err(Error::InvalidArgument(format!("a_rx must be > 0, got {}", self.a_rx)));
        }
        if self.a_rx >= self.r {
            return Err(Error::InvalidArgument(format!(
                "receiver radius a_rx = {} must be smaller than the distance r = {}",
                self.a_rx, self.r
            )));
        }
        if self.a < 0.0 {
            return Err(Error::InvalidArgument(format!("A must be >= 0, got {}", self.a)));
        }
        if self.eta < 0.0 {
            return Err(Error::InvalidArgument(format!("eta must be >= 0, got {}", self.eta)));
        }
        if !(self.beta > 0.0) {
            return Err(Error::InvalidArgument(format!("beta must be > 0, got {}", self.beta)));
        }
        if self.m < 1 || self.l < 1 || self.k < 1 {
            return Err(Error::InvalidArgument(format!(
                "M, L, K must all be >= 1, got M = {}, L = {}, K = {}",
                self.m, self.l, self.k
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Channel impulse response
// ---------------------------------------------------------------------------

/// Expected count observed a time `t > 0` after a release of `params.a`
/// molecules.
pub fn cir_value(params: &ChannelParams, t: f64) -> Result<f64, Error> {
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "elapsed time must be finite and positive, got {t}"
        )));
    }
    let d4t = 4.0 * params.d * t;
    let dx = params.r - params.v1 * t;
    let dy = params.v2 * t;
    Ok(params.a * params.volume() / (PI * d4t).powf(1.5) * (-(dx * dx + dy * dy) / d4t).exp())
}

/// Time of the CIR maximum, by a log-spaced coarse scan to bracket the peak
/// followed by golden-section refinement to relative tolerance 1e-10. The
/// result does not depend on `A` (a pure scale factor), so the search runs
/// on a unit-release copy of the parameters and `A = 0` is fine.
pub fn find_t_peak(params: &ChannelParams) -> Result<f64, Error> {
    params.validate()?;
    let unit = ChannelParams { a: 1.0, ..params.clone() };
    let f = |t: f64| cir_value(&unit, t).expect("positive t inside bracket");

    let (lo, hi) = PEAK_BRACKET;
    let decades = (hi / lo).log10();
    let steps = (decades * PEAK_SCAN_PER_DECADE as f64).ceil() as usize;
    let ratio = (hi / lo).powf(1.0 / steps as f64);
    let mut best = (0usize, f64::NEG_INFINITY);
    let mut ts = Vec::with_capacity(steps + 1);
    let mut t = lo;
    for i in 0..=steps {
        ts.push(t);
        let v = f(t);
        if v > best.1 {
            best = (i, v);
        }
        t *= ratio;
    }
    if best.0 == 0 || best.0 == steps || !(best.1 > 0.0) {
        return Err(Error::SearchFailure(format!(
            "no interior CIR maximum inside [{lo:.1e}, {hi:.1e}] s"
        )));
    }
    let (t_peak, _) = golden_max(f, ts[best.0 - 1], ts[best.0 + 1], PEAK_REL_TOL);
    Ok(t_peak)
}

/// The L x M table of expected counts on the sampling grid, together with the
/// grid geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct CirTable {
    /// h[l][m], row-major L x M.
    h: Vec<f64>,
    /// Rows: channel memory in symbols.
    pub l: usize,
    /// Columns: samples per symbol interval.
    pub m: usize,
    /// Time of the CIR maximum (s).
    pub t_peak: f64,
    /// Symbol interval T_b = beta * t_peak (s).
    pub t_b: f64,
    /// Sample spacing dt = T_b / M (s).
    pub dt: f64,
}

impl CirTable {
    /// Builds a table from raw entries (row-major L x M), e.g. a measured
    /// CIR. Entries must be finite and nonnegative.
    pub fn from_parts(
        h: Vec<f64>,
        l: usize,
        m: usize,
        t_peak: f64,
        t_b: f64,
        dt: f64,
    ) -> Result<CirTable, Error> {
        if h.len() != l * m {
            return Err(Error::InvalidArgument(format!(
                "CIR storage must be L*M = {} entries, got {}",
                l * m,
                h.len()
            )));
        }
        if h.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidArgument(
                "CIR entries must be finite and nonnegative".into(),
            ));
        }
        Ok(CirTable { h, l, m, t_peak, t_b, dt })
    }

    /// Expected count for a release `l0` symbol intervals back at sampling
    /// instant `m0` (both 0-based).
    #[inline]
    pub fn h(&self, l0: usize, m0: usize) -> f64 {
        self.h[l0 * self.m + m0]
    }

    /// Row `l0` as a slice of the `M` sampling instants.
    #[inline]
    pub fn row(&self, l0: usize) -> &[f64] {
        &self.h[l0 * self.m..(l0 + 1) * self.m]
    }

    /// Elapsed time of grid point `(l0, m0)`: `l0 * T_b + (m0+1) * dt`.
    pub fn grid_time(&self, l0: usize, m0: usize) -> f64 {
        l0 as f64 * self.t_b + (m0 + 1) as f64 * self.dt
    }

    /// Single-column copy (M = 1) keeping only sampling instant `m0`; used by
    /// the symbol-rate benchmark receiver.
    pub fn slice_column(&self, m0: usize) -> CirTable {
        assert!(m0 < self.m, "column out of range");
        CirTable {
            h: (0..self.l).map(|l0| self.h(l0, m0)).collect(),
            l: self.l,
            m: 1,
            t_peak: self.t_peak,
            t_b: self.t_b,
            dt: self.dt,
        }
    }

    /// 0-based index of the sampling instant closest to `t_peak` within the
    /// first symbol interval.
    pub fn peak_sample(&self) -> usize {
        let mut best = (0usize, f64::INFINITY);
        for m0 in 0..self.m {
            let err = (self.grid_time(0, m0) - self.t_peak).abs();
            if err < best.1 {
                best = (m0, err);
            }
        }
        best.0
    }
}

/// Builds the CIR table for `params`: h[l][m] = cir at elapsed time
/// `(l-1) T_b + m dt` (1-based l, m).
pub fn build_cir_table(params: &ChannelParams) -> Result<CirTable, Error> {
    params.validate()?;
    let t_peak = find_t_peak(params)?;
    let t_b = params.beta * t_peak;
    let dt = t_b / params.m as f64;
    let mut h = Vec::with_capacity(params.l * params.m);
    for l0 in 0..params.l {
        for m0 in 0..params.m {
            let t = l0 as f64 * t_b + (m0 + 1) as f64 * dt;
            h.push(cir_value(params, t)?);
        }
    }
    Ok(CirTable { h, l: params.l, m: params.m, t_peak, t_b, dt })
}

// ---------------------------------------------------------------------------
// Observation model
// ---------------------------------------------------------------------------

/// Poisson rate of the sample at symbol row `k0`, sampling instant `m0`
/// (0-based): sum of the last `L` symbols' contributions plus `eta`. Symbol
/// indices outside `bits` are silence — rows past the frame end see only the
/// ISI tail of the final symbols.
pub fn mean_rate(cir: &CirTable, bits: &[u8], eta: f64, k0: usize, m0: usize) -> f64 {
    debug_assert!(m0 < cir.m, "sampling instant out of range");
    let mut rate = eta;
    for l0 in 0..cir.l {
        if l0 > k0 {
            break;
        }
        let idx = k0 - l0;
        if idx < bits.len() && bits[idx] == 1 {
            rate += cir.h(l0, m0);
        }
    }
    rate
}

/// Received counts for one frame: `k` in-frame symbol rows plus `t_extra`
/// trailing rows observed after the last symbol (transmitter silent).
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMatrix {
    counts: Vec<u64>,
    /// In-frame symbol rows.
    pub k: usize,
    /// Trailing rows past the frame.
    pub t_extra: usize,
    /// Samples per row.
    pub m: usize,
}

impl ObservationMatrix {
    /// Total rows, `k + t_extra`.
    #[inline]
    pub fn rows(&self) -> usize {
        self.k + self.t_extra
    }

    /// Row `k0` (0-based, valid up to `rows()`).
    #[inline]
    pub fn row(&self, k0: usize) -> &[u64] {
        &self.counts[k0 * self.m..(k0 + 1) * self.m]
    }

    #[inline]
    pub fn get(&self, k0: usize, m0: usize) -> u64 {
        self.counts[k0 * self.m + m0]
    }

    /// Builds a matrix from per-row counts (rows of length `m` each).
    pub fn from_rows(rows: &[Vec<u64>], k: usize, m: usize) -> Self {
        assert!(rows.len() >= k, "need at least k rows");
        assert!(rows.iter().all(|r| r.len() == m), "ragged rows");
        ObservationMatrix {
            counts: rows.iter().flatten().copied().collect(),
            k,
            t_extra: rows.len() - k,
            m,
        }
    }
}

/// Draws one exact Poisson variate. `rand_distr`'s sampler uses inversion by
/// sequential search for small rates and the PTRS transformed-rejection
/// method for large ones — never a normal approximation, which matters here
/// because signal-dependent noise is the whole point of the model.
#[inline]
fn poisson_draw(rate: f64, rng: &mut impl Rng) -> Result<u64, Error> {
    if rate == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(rate)
        .map_err(|e| Error::Numerical(format!("invalid Poisson rate {rate}: {e}")))?;
    Ok(dist.sample(rng) as u64)
}

/// Simulates the received counts for `bits`, drawing each sample
/// independently from Poisson(mean_rate). Emits `t_extra` trailing rows with
/// post-frame symbols treated as silence. Deterministic given the RNG state.
pub fn simulate_observations(
    cir: &CirTable,
    bits: &[u8],
    eta: f64,
    t_extra: usize,
    rng: &mut impl Rng,
) -> Result<ObservationMatrix, Error> {
    debug_assert!(bits.iter().all(|&b| b <= 1), "bits must be 0/1");
    if !eta.is_finite() || eta < 0.0 {
        return Err(Error::InvalidArgument(format!("eta must be finite and >= 0, got {eta}")));
    }
    let k = bits.len();
    let rows = k + t_extra;
    let mut counts = Vec::with_capacity(rows * cir.m);
    for k0 in 0..rows {
        for m0 in 0..cir.m {
            let rate = mean_rate(cir, bits, eta, k0, m0);
            if !rate.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite Poisson rate at row {k0}, sample {m0}"
                )));
            }
            counts.push(poisson_draw(rate, rng)?);
        }
    }
    Ok(ObservationMatrix { counts, k, t_extra, m: cir.m })
}

/// I.i.d. equiprobable bits, deterministic given the RNG state.
pub fn generate_bits(k: usize, rng: &mut impl Rng) -> SymbolSequence {
    (0..k).map(|_| rng.gen_range(0..2u8)).collect()
}

// ---------------------------------------------------------------------------
