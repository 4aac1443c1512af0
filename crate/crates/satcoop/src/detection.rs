//! Linear MMSE detection for the two cooperation modes.
//!
//! **Full CSI** — the processing satellite knows every instantaneous
//! estimate ĥ and the per-link error variances Σ_h. The MSE-optimal row
//! vector is
//!
//! ```text
//! v = √p·ĥᴴ·(p·ĥĥᴴ + σ²I + p·Σ_h)⁻¹
//! ```
//!
//! and the achievable rate is `log2(1 + p·|v h|²/(σ²·‖v‖²))`.
//!
//! **Partial CSI** — each satellite first divides its sample by its own
//! estimate (`y' = y/ĥ`), and the network controller only knows long-term
//! moments for satellites 2..L plus its own instantaneous estimate. The
//! optimal combiner is
//!
//! ```text
//! w = √p·1ᵀ·(p·11ᵀ + p·S + B)⁻¹
//! ```
//!
//! with diagonal B (scaled inverse-channel powers) and S (error-power ×
//! inverse-channel powers), and rate `log2(1 + p·|w·1|²/(w B wᴴ))`.
//!
//! Systems are solved with a Cholesky factorization of the Hermitian
//! positive-definite matrix; the inverse is never formed. All rates are in
//! bits (log base 2).

use crate::channel::ChannelMoments;
use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DetectionError {
    #[error("dimension mismatch: {what}")]
    DimensionMismatch { what: &'static str },
    #[error("non-finite input: {what}")]
    NonFinite { what: &'static str },
    #[error("system matrix is singular at diagonal entry {index} (value {value})")]
    SingularDiagonal { index: usize, value: f64 },
    #[error("matrix factorization failed")]
    FactorizationFailed,
}

/// Inputs of the full-CSI combiner.
#[derive(Debug, Clone)]
pub struct FullCsiInput {
    /// Instantaneous channel estimates ĥ, one per satellite.
    pub h_hat: Vec<Complex64>,
    /// Estimation error variances σ²_h̃ (the diagonal of Σ_h).
    pub sigma_h: Vec<f64>,
    /// Combined link gain p = P_T·G_T·G_R, watts.
    pub p: f64,
    /// Receiver noise power, watts.
    pub sigma2: f64,
}

impl FullCsiInput {
    fn validate(&self) -> Result<(), DetectionError> {
        if self.h_hat.is_empty() || self.h_hat.len() != self.sigma_h.len() {
            return Err(DetectionError::DimensionMismatch {
                what: "h_hat and sigma_h lengths",
            });
        }
        if !self.h_hat.iter().all(|h| h.re.is_finite() && h.im.is_finite()) {
            return Err(DetectionError::NonFinite { what: "h_hat" });
        }
        if !self.sigma_h.iter().all(|s| s.is_finite() && *s >= 0.0) {
            return Err(DetectionError::NonFinite { what: "sigma_h" });
        }
        if !(self.p.is_finite() && self.p > 0.0 && self.sigma2.is_finite() && self.sigma2 > 0.0) {
            return Err(DetectionError::NonFinite { what: "p or sigma2" });
        }
        Ok(())
    }
}

/// Inputs of the partial-CSI combiner at the network controller.
///
/// Satellite 1 (the NC) contributes its instantaneous estimate and error
/// variance; satellites 2..L contribute only their long-term moments.
#[derive(Debug, Clone)]
pub struct PartialCsiInput {
    /// NC's own instantaneous estimate ĥ₁.
    pub h_hat_1: Complex64,
    /// E|h̃₁|² of the NC link.
    pub h_tilde_var_1: f64,
    /// Long-term E|ĥ₁|², used only for the clamp floor of |ĥ₁|.
    pub hhat1_mean_sq: f64,
    /// Long-term moments of satellites 2..L, nearest first.
    pub moments: Vec<ChannelMoments>,
    pub p: f64,
    pub sigma2: f64,
    /// Relative clamp applied to |ĥ₁| before inversion.
    pub clamp_delta: f64,
}

impl PartialCsiInput {
    /// Cluster size L (NC plus the satellites described by moments).
    pub fn l(&self) -> usize {
        1 + self.moments.len()
    }

    /// |ĥ₁|² after the clamp floor.
    fn hhat1_clamped_sq(&self) -> f64 {
        let floor = self.clamp_delta * self.hhat1_mean_sq.sqrt();
        self.h_hat_1.norm().max(floor).powi(2)
    }
}

/// Result of one detector evaluation.
#[derive(Debug, Clone)]
pub struct DetectorResult {
    /// Combining weights (v in the full case, w in the partial case).
    pub weights: Vec<Complex64>,
    /// Residual mean square error of the optimal combiner, in (0, 1].
    pub mse: f64,
    pub rate_bits_per_use: f64,
    pub rate_bits_per_sec: f64,
}

/// Hard BPSK decision on a combined sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolDecision {
    pub s_hat: Complex64,
    /// 1 when Re(ŝ) ≥ 0 (maps to symbol +1), else 0.
    pub bit: u8,
}

impl SymbolDecision {
    /// The decided antipodal symbol, ±1.
    pub fn symbol(&self) -> f64 {
        if self.bit == 1 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Which channel vector enters the rate numerator: the true channel (the
/// default) or the estimate, matching the covariance-based expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateChannel {
    #[default]
    TrueH,
    EstimatedH,
}

// ---------------------------------------------------------------------------
// Full CSI
// ---------------------------------------------------------------------------

/// Solve `A x = b` for Hermitian positive-definite `A` via Cholesky. Adds a
/// relative ridge of `1e-12·trace/L` and retries once if the factorization
/// reports non-positive-definiteness.
fn solve_hpd(
    mut a: DMatrix<Complex64>,
    b: &DVector<Complex64>,
) -> Result<DVector<Complex64>, DetectionError> {
    match Cholesky::new(a.clone()) {
        Some(chol) => Ok(chol.solve(b)),
        None => {
            let l = a.nrows();
            let ridge = 1e-12 * a.trace().re / l as f64;
            log::warn!("Cholesky failed; retrying with ridge {ridge:e}");
            for i in 0..l {
                a[(i, i)] += Complex64::new(ridge, 0.0);
            }
            Cholesky::new(a)
                .map(|c| c.solve(b))
                .ok_or(DetectionError::FactorizationFailed)
        }
    }
}

/// Optimal full-CSI combining vector `v = √p·ĥᴴ·(p ĥĥᴴ + σ²I + pΣ_h)⁻¹`.
pub fn mmse_full(input: &FullCsiInput) -> Result<Vec<Complex64>, DetectionError> {
    input.validate()?;
    let l = input.h_hat.len();
    let h = DVector::from_column_slice(&input.h_hat);
    let mut a = &h * h.adjoint() * Complex64::new(input.p, 0.0);
    for i in 0..l {
        a[(i, i)] += Complex64::new(input.sigma2 + input.p * input.sigma_h[i], 0.0);
    }
    // v = √p ĥᴴ A⁻¹ = √p (A⁻¹ ĥ)ᴴ since A is Hermitian.
    let z = solve_hpd(a, &h)?;
    Ok(z.iter().map(|zi| zi.conj() * input.p.sqrt()).collect())
}

/// Evaluate the full-CSI MSE quadratic
/// `p|vĥ|² − 2√p·Re(vĥ) + p·Σᵢσ²ᵢ|vᵢ|² + σ²‖v‖² + 1` at an arbitrary `v`.
pub fn mse_full(v: &[Complex64], input: &FullCsiInput) -> Result<f64, DetectionError> {
    if v.len() != input.h_hat.len() {
        return Err(DetectionError::DimensionMismatch {
            what: "v and h_hat lengths",
        });
    }
    let vh: Complex64 = v
        .iter()
        .zip(&input.h_hat)
        .map(|(vi, hi)| vi * hi)
        .sum();
    let err_term: f64 = v
        .iter()
        .zip(&input.sigma_h)
        .map(|(vi, s)| s * vi.norm_sqr())
        .sum();
    let norm_sq: f64 = v.iter().map(|vi| vi.norm_sqr()).sum();
    Ok(input.p * vh.norm_sqr() - 2.0 * input.p.sqrt() * vh.re
        + input.p * err_term
        + input.sigma2 * norm_sq
        + 1.0)
}

/// Achievable full-CSI rate `log2(1 + p|v h|²/(σ²‖v‖²))` in bits per
/// channel use. A zero weight vector yields rate 0 (logged degenerate
/// input).
pub fn rate_full(v: &[Complex64], h: &[Complex64], p: f64, sigma2: f64) -> f64 {
    debug_assert_eq!(v.len(), h.len());
    let norm_sq: f64 = v.iter().map(|vi| vi.norm_sqr()).sum();
    if norm_sq == 0.0 {
        log::debug!("rate_full: zero combining vector, rate set to 0");
        return 0.0;
    }
    let vh: Complex64 = v.iter().zip(h).map(|(vi, hi)| vi * hi).sum();
    (1.0 + p * vh.norm_sqr() / (sigma2 * norm_sq)).log2()
}

// ---------------------------------------------------------------------------
// Partial CSI
// ---------------------------------------------------------------------------

/// Locally normalize a received sample by the channel estimate:
/// `y' = y/ĥ`, with |ĥ| clamped below at `clamp_floor`. Returns the
/// normalized sample and whether the clamp engaged.
pub fn local_normalize(y: Complex64, h_hat: Complex64, clamp_floor: f64) -> (Complex64, bool) {
    let mag = h_hat.norm();
    if mag >= clamp_floor && mag > 0.0 {
        (y / h_hat, false)
    } else {
        // Keep the estimate's phase, lift the magnitude to the floor.
        let phase = if mag > 0.0 { h_hat.arg() } else { 0.0 };
        let clamped = Complex64::from_polar(clamp_floor, phase);
        (y / clamped, true)
    }
}

/// Build the diagonals of B and S from the NC's instantaneous estimate and
/// the cluster's long-term moments.
///
/// `B = diag(σ²/|ĥ₁|², σ²·E|1/ĥ₂|², …)`,
/// `S = diag(E|h̃₁|²/|ĥ₁|², E|h̃₂|²·E|1/ĥ₂|², …)`.
pub fn build_b_s(input: &PartialCsiInput) -> (Vec<f64>, Vec<f64>) {
    let l = input.l();
    let mut b = Vec::with_capacity(l);
    let mut s = Vec::with_capacity(l);
    let hhat1_sq = input.hhat1_clamped_sq();
    b.push(input.sigma2 / hhat1_sq);
    s.push(input.h_tilde_var_1 / hhat1_sq);
    for m in &input.moments {
        b.push(input.sigma2 * m.e_inv_hhat_sq);
        s.push(m.e_abs_htilde_sq * m.e_inv_hhat_sq);
    }
    (b, s)
}

/// Optimal partial-CSI combiner `w = √p·1ᵀ·(p·11ᵀ + p·S + B)⁻¹`.
///
/// B and S are diagonal, so the system matrix is real symmetric positive
/// definite and the weights are real.
pub fn mmse_partial(b: &[f64], s: &[f64], p: f64) -> Result<Vec<f64>, DetectionError> {
    if b.len() != s.len() || b.is_empty() {
        return Err(DetectionError::DimensionMismatch {
            what: "b and s lengths",
        });
    }
    let l = b.len();
    for i in 0..l {
        let d = b[i] + p * s[i];
        if !(d.is_finite() && d > 0.0) {
            return Err(DetectionError::SingularDiagonal { index: i, value: d });
        }
    }
    let mut m = DMatrix::<f64>::from_element(l, l, p);
    for i in 0..l {
        m[(i, i)] += p * s[i] + b[i];
    }
    let ones = DVector::from_element(l, 1.0);
    let chol = Cholesky::new(m).ok_or(DetectionError::FactorizationFailed)?;
    let x = chol.solve(&ones);
    Ok(x.iter().map(|xi| xi * p.sqrt()).collect())
}

/// Evaluate the partial-CSI MSE quadratic
/// `p(w·1)² − 2√p·Re(w·1) + wBwᴴ + p·wSwᴴ + 1` at an arbitrary `w`.
pub fn mse_partial(w: &[Complex64], b: &[f64], s: &[f64], p: f64) -> f64 {
    let w1: Complex64 = w.iter().sum();
    let quad = |d: &[f64]| -> f64 {
        w.iter()
            .zip(d)
            .map(|(wi, di)| di * wi.norm_sqr())
            .sum()
    };
    p * w1.norm_sqr() - 2.0 * p.sqrt() * w1.re + quad(b) + p * quad(s) + 1.0
}

/// Achievable partial-CSI rate `log2(1 + p|w·1|²/(w B wᴴ))` in bits per
/// channel use.
pub fn rate_partial(w: &[f64], b: &[f64], p: f64) -> f64 {
    debug_assert_eq!(w.len(), b.len());
    let denom: f64 = w.iter().zip(b).map(|(wi, bi)| bi * wi * wi).sum();
    if denom == 0.0 {
        log::debug!("rate_partial: zero combining vector, rate set to 0");
        return 0.0;
    }
    let w1: f64 = w.iter().sum();
    (1.0 + p * w1 * w1 / denom).log2()
}

/// Combine received samples and take the hard BPSK decision.
pub fn detect_symbol(weights: &[Complex64], y: &[Complex64]) -> SymbolDecision {
    debug_assert_eq!(weights.len(), y.len());
    let s_hat: Complex64 = weights.iter().zip(y).map(|(w, yi)| w * yi).sum();
    SymbolDecision {
        s_hat,
        bit: u8::from(s_hat.re >= 0.0),
    }
}

// ---------------------------------------------------------------------------
// Composite evaluation used by the experiments
// ---------------------------------------------------------------------------

/// Run the full-CSI detector and collect weights, MSE and the rate on the
/// true channel (or the estimate, per `rate_channel`).
pub fn full_detector(
    input: &FullCsiInput,
    h_true: &[Complex64],
    bw_hz: f64,
    rate_channel: RateChannel,
) -> Result<DetectorResult, DetectionError> {
    let v = mmse_full(input)?;
    let mse = mse_full(&v, input)?;
    let rate = match rate_channel {
        RateChannel::TrueH => rate_full(&v, h_true, input.p, input.sigma2),
        RateChannel::EstimatedH => rate_full(&v, &input.h_hat, input.p, input.sigma2),
    };
    Ok(DetectorResult {
        weights: v,
        mse,
        rate_bits_per_use: rate,
        rate_bits_per_sec: bw_hz * rate,
    })
}

/// Run the partial-CSI detector from the NC's viewpoint.
pub fn partial_detector(
    input: &PartialCsiInput,
    bw_hz: f64,
) -> Result<DetectorResult, DetectionError> {
    let (b, s) = build_b_s(input);
    let w = mmse_partial(&b, &s, input.p)?;
    let wc: Vec<Complex64> = w.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mse = mse_partial(&wc, &b, &s, input.p);
    let rate = rate_partial(&w, &b, input.p);
    Ok(DetectorResult {
        weights: wc,
        mse,
        rate_bits_per_use: rate,
        rate_bits_per_sec: bw_hz * rate,
    })
}
