//! Second-order statistics of the received window and closed-form MMSE tap
//! design.
//!
//! The receiver treats the window of received counts around symbol `k` as a
//! vector `q_k` and estimates `s_k` by an affine function `v_k = b'q_k + b_c`
//! (linear equalizer) or `v_k = b'q_k - a'ŝ + b_c` with `ŝ` the last `L2`
//! decisions (decision-feedback equalizer). Because the counts are Poisson
//! with rates linear in the bits, the first and second moments of `q_k` have
//! closed forms over equiprobable i.i.d. bits, and the MMSE taps come from a
//! single symmetric positive-definite solve:
//!
//! - linear:  `Γ b = ξ`, `b_c = 1/2 - b' E{q}`, with `Γ = Cov(q)`,
//!   `ξ = Cov(q, s) = (1/4) vec(H')`;
//! - DFE:  `(Γ̄ - 4 H_sq) b = h̄` on the causal window, feedback taps
//!   `a[τ] = 4 Σ_i b[i] H^(τ)[i]`, `b_c = 1/2 - b' E{q} + (1/2) Σ_τ a[τ]`.
//!
//! The windows are indexed by a [`SampleIndexMap`]: entry `i` of `q_k` is
//! sample `m = i mod M` of symbol row `j = i div M` (0-based), where row `j`
//! is symbol `k + (j - T)` for the centered window and `k + j` for the causal
//! one. This is the reading under which the centered window spans exactly the
//! symbols `k-T ..= k+T`.
//!
//! Two benchmark receivers round out the set: a symbol-rate equalizer
//! (the linear design restricted to the sampling instant nearest the CIR
//! peak) and a matched filter with a midpoint threshold.

use crate::channel::CirTable;
use crate::numerics::spd_solve;
use crate::Error;

// ---------------------------------------------------------------------------
// Window index map
// ---------------------------------------------------------------------------

/// Window geometry: which symbol rows, relative to the cursor symbol `k`,
/// make up the received vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    /// Rows for symbols `k-T ..= k+T` (linear equalizer).
    Centered { t: usize },
    /// Rows for symbols `k ..= k+L1` (DFE feedforward).
    Causal { l1: usize },
}

/// Bijection between flat window indices `i` in `0..rows*M` and pairs
/// `(symbol row j, sampling instant m)`, both 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleIndexMap {
    pub kind: WindowKind,
    /// Samples per symbol interval.
    pub m: usize,
}

impl SampleIndexMap {
    pub fn centered(t: usize, m: usize) -> Self {
        SampleIndexMap { kind: WindowKind::Centered { t }, m }
    }

    pub fn causal(l1: usize, m: usize) -> Self {
        SampleIndexMap { kind: WindowKind::Causal { l1 }, m }
    }

    /// Symbol rows in the window.
    pub fn rows(&self) -> usize {
        match self.kind {
            WindowKind::Centered { t } => 2 * t + 1,
            WindowKind::Causal { l1 } => l1 + 1,
        }
    }

    /// Flat window length `rows * M`.
    pub fn len(&self) -> usize {
        self.rows() * self.m
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index -> (symbol row, sampling instant).
    #[inline]
    pub fn decompose(&self, i: usize) -> (usize, usize) {
        (i / self.m, i % self.m)
    }

    /// Offset of symbol row `j` from the cursor symbol `k`.
    #[inline]
    pub fn symbol_offset(&self, j: usize) -> isize {
        match self.kind {
            WindowKind::Centered { t } => j as isize - t as isize,
            WindowKind::Causal { .. } => j as isize,
        }
    }
}

// ---------------------------------------------------------------------------
// Second-order statistics
// ---------------------------------------------------------------------------

/// Moments of the received window `q_k` over equiprobable i.i.d. bits:
/// covariance `Γ` (row-major `n`×`n`), signal cross-covariance `ξ`, and mean.
/// Steady state (the window far from frame edges); positive definite whenever
/// `eta > 0` or the CIR is nonzero.
#[derive(Debug, Clone)]
pub struct SecondOrderStats {
    pub gamma: Vec<f64>,
    pub xi: Vec<f64>,
    pub mean_q: Vec<f64>,
    pub n: usize,
    pub map: SampleIndexMap,
}

/// Builds `Γ`, `ξ`, and `E{q}` for the given window over the CIR table.
///
/// Entry formulas (0-based `l`, tap count `L`):
/// - diagonal: `(1/2) Σ_l h[l][m] + (1/4) Σ_l h[l][m]² + eta`
/// - rows `δ = j(i) - j(i') > 0` apart: `(1/4) Σ_{l=0}^{L-1-δ} h[l+δ][m(i)] h[l][m(i')]`,
///   zero once `δ ≥ L`; mirrored for `δ < 0`
/// - same row, `m ≠ m'`: `(1/4) Σ_l h[l][m] h[l][m']`
/// - `ξ[i] = (1/4) h[d][m(i)]` where `d` is row `j(i)`'s symbol offset
///   (zero for rows before the cursor or offsets past the memory)
/// - `E{q}[i] = (1/2) Σ_l h[l][m(i)] + eta`.
pub fn build_stats(cir: &CirTable, eta: f64, map: &SampleIndexMap) -> SecondOrderStats {
    assert_eq!(map.m, cir.m, "index map and CIR table disagree on M");
    let n = map.len();
    let l = cir.l;
    let mut gamma = vec![0.0; n * n];
    let mut xi = vec![0.0; n];
    let mut mean_q = vec![0.0; n];

    for i in 0..n {
        let (ji, mi) = map.decompose(i);
        let d = map.symbol_offset(ji);
        if d >= 0 && (d as usize) < l {
            xi[i] = 0.25 * cir.h(d as usize, mi);
        }
        mean_q[i] = eta + 0.5 * (0..l).map(|l0| cir.h(l0, mi)).sum::<f64>();

        for ip in 0..=i {
            let (jp, mp) = map.decompose(ip);
            let delta = ji as isize - jp as isize; // >= 0 in this loop order
            let val = if i == ip {
                let mut s = eta;
                for l0 in 0..l {
                    let h = cir.h(l0, mi);
                    s += 0.5 * h + 0.25 * h * h;
                }
                s
            } else if delta == 0 {
                0.25 * (0..l).map(|l0| cir.h(l0, mi) * cir.h(l0, mp)).sum::<f64>()
            } else {
                let delta = delta as usize;
                if delta >= l {
                    0.0
                } else {
                    0.25 * (0..l - delta).map(|l0| cir.h(l0 + delta, mi) * cir.h(l0, mp)).sum::<f64>()
                }
            };
            gamma[i * n + ip] = val;
            gamma[ip * n + i] = val;
        }
    }
    SecondOrderStats { gamma, xi, mean_q, n, map: *map }
}

// ---------------------------------------------------------------------------
// Linear fractionally-spaced equalizer
// ---------------------------------------------------------------------------

/// Taps of an affine equalizer `v = b'q + b_c` on a centered window.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearTaps {
    pub b: Vec<f64>,
    pub b_c: f64,
    /// Half-window in symbols.
    pub t: usize,
    /// Analytical MMSE, `1/4 - ξ'Γ⁻¹ξ`.
    pub mmse: f64,
}

/// MMSE design on the centered window: solves `Γ b = ξ` (through a Cholesky
/// factorization — never an explicit inverse), `b_c = 1/2 - b' E{q}`.
pub fn design_linear_fse(cir: &CirTable, eta: f64, t: usize) -> Result<LinearTaps, Error> {
    let map = SampleIndexMap::centered(t, cir.m);
    let stats = build_stats(cir, eta, &map);
    let (b, _) = spd_solve(&stats.gamma, stats.n, &stats.xi)?;
    let b_c = 0.5 - dot(&b, &stats.mean_q);
    let mmse = 0.25 - dot(&stats.xi, &b);
    debug_assert!(
        (-1e-12..=0.25 + 1e-12).contains(&mmse),
        "MMSE identity out of range: {mmse}"
    );
    Ok(LinearTaps { b, b_c, t, mmse })
}

/// Equalizer output `v = b'q + b_c`.
pub fn linear_fse_output(taps: &LinearTaps, q: &[f64]) -> Result<f64, Error> {
    if q.len() != taps.b.len() {
        return Err(Error::InvalidArgument(format!(
            "window length {} does not match tap count {}",
            q.len(),
            taps.b.len()
        )));
    }
    Ok(dot(&taps.b, q) + taps.b_c)
}

// ---------------------------------------------------------------------------
// Decision-feedback equalizer
// ---------------------------------------------------------------------------

/// Taps of the DFE: feedforward `b` over the causal window, feedback `a`
/// over the last `L2` decisions, bias `b_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct DfeTaps {
    pub b: Vec<f64>,
    pub a: Vec<f64>,
    pub b_c: f64,
    pub l1: usize,
    pub l2: usize,
    /// Analytical MMSE under correct feedback, `1/4 - b'h̄`.
    pub mmse: f64,
}

/// Feedback tap `H^(τ)[j][m] = (1/4) h[τ+j]` (0-based `τ`, `j`; zero past the
/// channel memory): the weight with which decision `s_{k-1-τ}` appears in
/// causal-window row `j`.
#[inline]
fn h_fb(cir: &CirTable, tau0: usize, j: usize, m: usize) -> f64 {
    let idx = tau0 + j + 1;
    if idx < cir.l {
        0.25 * cir.h(idx, m)
    } else {
        0.0
    }
}

/// The feedback Gram matrix `H_sq[i][i'] = Σ_τ H^(τ)[i] H^(τ)[i']` over the
/// causal window (rows `0..=L1`).
pub fn build_h_sq(cir: &CirTable, l1: usize, l2: usize) -> Vec<f64> {
    let map = SampleIndexMap::causal(l1, cir.m);
    let n = map.len();
    let mut h_sq = vec![0.0; n * n];
    for i in 0..n {
        let (ji, mi) = map.decompose(i);
        for ip in 0..=i {
            let (jp, mp) = map.decompose(ip);
            let mut s = 0.0;
            for tau0 in 0..l2 {
                s += h_fb(cir, tau0, ji, mi) * h_fb(cir, tau0, jp, mp);
            }
            h_sq[i * n + ip] = s;
            h_sq[ip * n + i] = s;
        }
    }
    h_sq
}

/// MMSE DFE design on the causal window, assuming past decisions are
/// correct: solves `(Γ̄ - 4 H_sq) b = h̄` with `h̄[i] = (1/4) h[j(i)][m(i)]`,
/// then `a[τ] = 4 Σ_i b[i] H^(τ)[i]` and `b_c = 1/2 - b'E{q} + (1/2) Σ_τ a[τ]`
/// (the bias that makes `E{v} = 1/2` with fed-back decisions at their mean).
pub fn design_dfe(cir: &CirTable, eta: f64, l1: usize, l2: usize) -> Result<DfeTaps, Error> {
    let map = SampleIndexMap::causal(l1, cir.m);
    let stats = build_stats(cir, eta, &map);
    let h_sq = build_h_sq(cir, l1, l2);
    let n = stats.n;
    let mut lhs = stats.gamma.clone();
    for (x, hs) in lhs.iter_mut().zip(&h_sq) {
        *x -= 4.0 * hs;
    }
    // h̄ is exactly ξ on the causal window.
    let (b, _) = spd_solve(&lhs, n, &stats.xi)?;
    let mut a = Vec::with_capacity(l2);
    for tau0 in 0..l2 {
        let mut s = 0.0;
        for i in 0..n {
            let (ji, mi) = map.decompose(i);
            s += b[i] * h_fb(cir, tau0, ji, mi);
        }
        a.push(4.0 * s);
    }
    let b_c = 0.5 - dot(&b, &stats.mean_q) + 0.5 * a.iter().sum::<f64>();
    let mmse = 0.25 - dot(&stats.xi, &b);
    Ok(DfeTaps { b, a, b_c, l1, l2, mmse })
}

/// DFE output `v = b'q - a'ŝ + b_c`; `s_prev[0]` is the most recent decision
/// `ŝ_{k-1}`. Decisions before the frame are silence (pass 0).
pub fn dfe_output(taps: &DfeTaps, q: &[f64], s_prev: &[f64]) -> Result<f64, Error> {
    if q.len() != taps.b.len() {
        return Err(Error::InvalidArgument(format!(
            "window length {} does not match feedforward tap count {}",
            q.len(),
            taps.b.len()
        )));
    }
    if s_prev.len() != taps.a.len() {
        return Err(Error::InvalidArgument(format!(
            "feedback length {} does not match feedback tap count {}",
            s_prev.len(),
            taps.a.len()
        )));
    }
    Ok(dot(&taps.b, q) - dot(&taps.a, s_prev) + taps.b_c)
}

// ---------------------------------------------------------------------------
// Benchmark receivers
// ---------------------------------------------------------------------------

/// The symbol-rate benchmark: the linear MMSE design restricted to one
/// sample per symbol interval — the grid instant nearest the CIR peak
/// (see [`CirTable::peak_sample`]). Returned taps have window length
/// `(2T+1)·1`.
pub fn design_symbol_rate_eq(cir: &CirTable, eta: f64, t: usize) -> Result<LinearTaps, Error> {
    let slice = cir.slice_column(cir.peak_sample());
    design_linear_fse(&slice, eta, t)
}

/// The matched-filter benchmark: correlates one symbol row of observations
/// against the first CIR row, `v = Σ_m h[0][m] g[m]`. The paper-style
/// threshold is the midpoint of the two conditional means under average ISI:
/// `γ_mf = Σ_m h[0][m] ((1/2) h[0][m] + (1/2) Σ_{l≥1} h[l][m] + eta)`.
pub fn matched_filter(cir: &CirTable, eta: f64, g_row: &[u64]) -> (f64, f64) {
    assert_eq!(g_row.len(), cir.m, "row length must be M");
    let mut v = 0.0;
    let mut gamma_mf = 0.0;
    for m0 in 0..cir.m {
        let h0 = cir.h(0, m0);
        v += h0 * g_row[m0] as f64;
        let isi: f64 = (1..cir.l).map(|l0| cir.h(l0, m0)).sum();
        gamma_mf += h0 * (0.5 * h0 + 0.5 * isi + eta);
    }
    (v, gamma_mf)
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// ---------------------------------------------------------------------------
