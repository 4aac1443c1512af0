//! Land-mobile-satellite channel generation.
//!
//! The channel of each user–satellite link follows the two-state
//! (GOOD/BAD) semi-Markov model: sojourn times are log-normal per state,
//! and within a state the coefficient is Loo-faded — a log-normal LOS
//! amplitude plus a Rayleigh NLOS component, both with uniform phase —
//! scaled by the amplitude-domain free-space path loss 4πd/λ:
//!
//! ```text
//! h = (1/FSPL) · ( sqrt(K/(K+1))·h_los + sqrt(1/(K+1))·h_nlos )
//! ```
//!
//! Power normalization: the configured `M_A`/`Σ_A`/`MP` define the state's
//! absolute LOS and NLOS powers, and the Rician factor is derived as
//! `K = E|h_los|²/MP`. The K-weights are applied to unit-RMS components, so
//! the weighted sum carries exactly the configured powers (algebraically it
//! reduces to `h_los + h_nlos`); feeding raw components straight into the
//! K-weighted sum would count their power twice.
//!
//! Channel estimates are imperfect: `ĥ = h + h̃` with
//! `h̃ ~ CN(0, ε²·var(h))`, where `var(h)` is the long-term variance of the
//! coefficient (including path loss) obtained by Monte Carlo over the
//! state/fading mixture. The raw `E|1/ĥ|²` needed by the partial-CSI
//! detector diverges for any Gaussian estimation error, so `|ĥ|` is clamped
//! below at `clamp_delta · rms(ĥ)` before inversion; the clamp is exposed
//! as a configuration knob.

use crate::geometry::SatId;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use thiserror::Error;

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// ln(10)/10; converts dB quantities into natural-log space.
const DB_TO_LN: f64 = core::f64::consts::LN_10 / 10.0;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("domain error: {what} must be positive")]
    NonPositive { what: &'static str },
    #[error("invalid channel parameter: {what}")]
    InvalidParam { what: &'static str },
    #[error("moment estimation needs at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
}

/// Convert a dB power ratio to linear.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

// ---------------------------------------------------------------------------
// Link budget
// ---------------------------------------------------------------------------

/// Transmit/receive chain parameters with the derived linear quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub p_t_dbw: f64,
    pub g_t_db: f64,
    pub g_r_db: f64,
    pub f_c_hz: f64,
    pub bw_hz: f64,
    pub t_noise_k: f64,
    /// Combined linear gain p = P_T·G_T·G_R, watts.
    pub p_w: f64,
    /// Thermal noise power k_B·T·BW, watts.
    pub sigma2_w: f64,
    /// Carrier wavelength c/f_c, meters.
    pub lambda_m: f64,
}

impl LinkBudget {
    pub fn new(
        p_t_dbw: f64,
        g_t_db: f64,
        g_r_db: f64,
        f_c_hz: f64,
        bw_hz: f64,
        t_noise_k: f64,
    ) -> Result<Self, ChannelError> {
        if !(f_c_hz > 0.0) {
            return Err(ChannelError::NonPositive { what: "f_c_hz" });
        }
        let sigma2_w = noise_power(t_noise_k, bw_hz)?;
        let p_w = db_to_linear(p_t_dbw + g_t_db + g_r_db);
        Ok(Self {
            p_t_dbw,
            g_t_db,
            g_r_db,
            f_c_hz,
            bw_hz,
            t_noise_k,
            p_w,
            sigma2_w,
            lambda_m: SPEED_OF_LIGHT / f_c_hz,
        })
    }

    /// Same chain retuned to another carrier/bandwidth (used by band sweeps).
    pub fn retuned(&self, f_c_hz: f64, bw_hz: f64) -> Result<Self, ChannelError> {
        Self::new(
            self.p_t_dbw,
            self.g_t_db,
            self.g_r_db,
            f_c_hz,
            bw_hz,
            self.t_noise_k,
        )
    }
}

/// Free-space path loss in the amplitude domain: 4πd/λ.
pub fn fspl(d_m: f64, lambda_m: f64) -> Result<f64, ChannelError> {
    if !(d_m > 0.0) {
        return Err(ChannelError::NonPositive { what: "d_m" });
    }
    if !(lambda_m > 0.0) {
        return Err(ChannelError::NonPositive { what: "lambda_m" });
    }
    Ok(4.0 * std::f64::consts::PI * d_m / lambda_m)
}

/// Thermal noise power k_B·T·BW, watts.
pub fn noise_power(t_noise_k: f64, bw_hz: f64) -> Result<f64, ChannelError> {
    if !(t_noise_k > 0.0) {
        return Err(ChannelError::NonPositive { what: "t_noise_k" });
    }
    if !(bw_hz > 0.0) {
        return Err(ChannelError::NonPositive { what: "bw_hz" });
    }
    Ok(BOLTZMANN * t_noise_k * bw_hz)
}

// ---------------------------------------------------------------------------
// Loo fading parameters and state process
// ---------------------------------------------------------------------------

/// Loo distribution parameters of one shadowing state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LooParams {
    /// Mean of the log-normal LOS amplitude, dB.
    pub m_a_db: f64,
    /// Standard deviation of the log-normal LOS amplitude, dB.
    pub sigma_a_db: f64,
    /// Mean power of the Rayleigh NLOS component, dB.
    pub mp_db: f64,
    /// Rician factor: LOS power over mean NLOS power, linear.
    pub k: f64,
}

impl LooParams {
    /// Build from the dB parameters, deriving `K = E|h_los|²/MP`.
    pub fn from_db(m_a_db: f64, sigma_a_db: f64, mp_db: f64) -> Result<Self, ChannelError> {
        if !(sigma_a_db >= 0.0) {
            return Err(ChannelError::InvalidParam { what: "sigma_a_db" });
        }
        let mut params = Self {
            m_a_db,
            sigma_a_db,
            mp_db,
            k: 0.0,
        };
        params.k = params.los_mean_power() / params.nlos_mean_power();
        Ok(params)
    }

    /// E|h_los|² of the log-normal LOS amplitude (20·log10|h_los| is
    /// N(M_A, Σ_A²)), linear.
    pub fn los_mean_power(&self) -> f64 {
        db_to_linear(self.m_a_db) * ((self.sigma_a_db * DB_TO_LN).powi(2) / 2.0).exp()
    }

    /// E|h_nlos|² = MP, linear.
    pub fn nlos_mean_power(&self) -> f64 {
        db_to_linear(self.mp_db)
    }

    /// Total mean channel power of the state before path loss.
    pub fn total_mean_power(&self) -> f64 {
        self.los_mean_power() + self.nlos_mean_power()
    }
}

/// GOOD (LOS / light shadowing) or BAD (heavy shadowing).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelState {
    Good,
    Bad,
}

/// Log-normal sojourn-time distribution: 10·log10(T) is N(10·log10(median), std²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DurationDistribution {
    pub median_s: f64,
    pub std_db: f64,
}

impl DurationDistribution {
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.std_db <= 0.0 {
            return self.median_s;
        }
        let mean_db = 10.0 * self.median_s.log10();
        let db = Normal::new(mean_db, self.std_db)
            .expect("valid normal")
            .sample(rng);
        db_to_linear(db)
    }

    /// E[T] of the log-normal sojourn.
    pub fn mean_s(&self) -> f64 {
        self.median_s * ((self.std_db * DB_TO_LN).powi(2) / 2.0).exp()
    }
}

/// Alternating two-state semi-Markov shadowing process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateProcess {
    pub good: LooParams,
    pub bad: LooParams,
    pub good_duration: DurationDistribution,
    pub bad_duration: DurationDistribution,
}

impl StateProcess {
    pub fn loo(&self, state: ChannelState) -> &LooParams {
        match state {
            ChannelState::Good => &self.good,
            ChannelState::Bad => &self.bad,
        }
    }

    /// Long-run fraction of time spent in GOOD.
    pub fn stationary_good_probability(&self) -> f64 {
        let g = self.good_duration.mean_s();
        let b = self.bad_duration.mean_s();
        g / (g + b)
    }
}

/// The built-in "default-suburban" parameter set. Every value can be
/// overridden per scenario.
pub fn default_suburban() -> StateProcess {
    StateProcess {
        good: LooParams::from_db(-0.2, 0.5, -15.0).expect("valid params"),
        bad: LooParams::from_db(-10.0, 3.0, -20.0).expect("valid params"),
        good_duration: DurationDistribution {
            median_s: 30.0,
            std_db: 0.5,
        },
        bad_duration: DurationDistribution {
            median_s: 10.0,
            std_db: 0.5,
        },
    }
}

// ---------------------------------------------------------------------------
// State sequence
// ---------------------------------------------------------------------------

/// One sojourn of the semi-Markov process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateSegment {
    pub state: ChannelState,
    pub start_s: f64,
    pub duration_s: f64,
}

/// Sample an alternating GOOD/BAD segment sequence tiling `[0, horizon]`.
///
/// `initial` fixes the first state; `None` draws it from the stationary
/// occupancy. The last segment is truncated at the horizon.
pub fn sample_state_sequence(
    process: &StateProcess,
    horizon_s: f64,
    initial: Option<ChannelState>,
    rng: &mut ChaCha8Rng,
) -> Vec<StateSegment> {
    assert!(horizon_s > 0.0, "horizon must be positive");
    let mut state = initial.unwrap_or_else(|| {
        if rng.random::<f64>() < process.stationary_good_probability() {
            ChannelState::Good
        } else {
            ChannelState::Bad
        }
    });
    let mut segments = Vec::new();
    let mut t = 0.0;
    // The epsilon guard stops float dust from spawning zero-length segments.
    while t < horizon_s * (1.0 - 1e-12) {
        let dist = match state {
            ChannelState::Good => &process.good_duration,
            ChannelState::Bad => &process.bad_duration,
        };
        let duration = dist.sample(rng).min(horizon_s - t);
        segments.push(StateSegment {
            state,
            start_s: t,
            duration_s: duration,
        });
        t += duration;
        state = match state {
            ChannelState::Good => ChannelState::Bad,
            ChannelState::Bad => ChannelState::Good,
        };
    }
    segments
}

/// Precomputed state sequence with O(log n) time lookup.
#[derive(Debug, Clone)]
pub struct StateTimeline {
    segments: Vec<StateSegment>,
    horizon_s: f64,
}

impl StateTimeline {
    pub fn new(segments: Vec<StateSegment>, horizon_s: f64) -> Self {
        Self {
            segments,
            horizon_s,
        }
    }

    pub fn sample(
        process: &StateProcess,
        horizon_s: f64,
        initial: Option<ChannelState>,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        Self::new(
            sample_state_sequence(process, horizon_s, initial, rng),
            horizon_s,
        )
    }

    /// State at time `t`; times outside `[0, horizon]` clamp to the ends.
    pub fn state_at(&self, t_s: f64) -> ChannelState {
        let t = t_s.clamp(0.0, self.horizon_s);
        let ix = self
            .segments
            .partition_point(|seg| seg.start_s <= t)
            .saturating_sub(1);
        self.segments[ix].state
    }
}

// ---------------------------------------------------------------------------
// Fading draws
// ---------------------------------------------------------------------------

/// Rayleigh amplitude with E[X²] = `mean_power`, by inverse CDF.
fn rayleigh_sample(mean_power: f64, rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random();
    (-mean_power * (1.0 - u).ln()).sqrt()
}

/// Draw the LOS and NLOS components of one Loo realization. Magnitudes
/// carry the state's absolute powers; phases are independent uniform.
pub fn sample_loo(params: &LooParams, rng: &mut ChaCha8Rng) -> (Complex64, Complex64) {
    let amp_db = if params.sigma_a_db > 0.0 {
        Normal::new(params.m_a_db, params.sigma_a_db)
            .expect("valid normal")
            .sample(rng)
    } else {
        params.m_a_db
    };
    let los_mag = 10f64.powf(amp_db / 20.0);
    let los_phase = rng.random::<f64>() * TAU;

    let mp = params.nlos_mean_power();
    let nlos_mag = if mp > 0.0 {
        rayleigh_sample(mp, rng)
    } else {
        0.0
    };
    let nlos_phase = rng.random::<f64>() * TAU;

    (
        Complex64::from_polar(los_mag, los_phase),
        Complex64::from_polar(nlos_mag, nlos_phase),
    )
}

/// Combine LOS and NLOS components into the channel coefficient:
/// `h = (1/fspl)·(sqrt(K/(K+1))·h_los + sqrt(1/(K+1))·h_nlos)`.
pub fn channel_coefficient(
    fspl: f64,
    k: f64,
    h_los: Complex64,
    h_nlos: Complex64,
) -> Complex64 {
    debug_assert!(fspl > 0.0 && k >= 0.0);
    if k.is_infinite() {
        return h_los / fspl;
    }
    let w_los = (k / (k + 1.0)).sqrt();
    let w_nlos = (1.0 / (k + 1.0)).sqrt();
    (w_los * h_los + w_nlos * h_nlos) / fspl
}

/// Add a circularly-symmetric Gaussian estimation error of variance
/// `ε²·var_h` to a channel coefficient. Returns `(ĥ, h̃)` with `ĥ = h + h̃`.
pub fn apply_estimation_error(
    h: Complex64,
    var_h: f64,
    epsilon: f64,
    rng: &mut ChaCha8Rng,
) -> (Complex64, Complex64) {
    debug_assert!(var_h >= 0.0 && epsilon >= 0.0);
    let std_per_part = (epsilon * epsilon * var_h / 2.0).sqrt();
    let n = Normal::new(0.0, 1.0).expect("valid normal");
    let h_tilde = Complex64::new(std_per_part * n.sample(rng), std_per_part * n.sample(rng));
    (h + h_tilde, h_tilde)
}

/// One fading realization of a state, path loss applied.
///
/// Components are drawn with their absolute powers, normalized to unit RMS
/// and recombined through the K-weights (see the module docs), which
/// preserves the configured per-state powers.
pub fn draw_state_channel(
    params: &LooParams,
    fspl: f64,
    rng: &mut ChaCha8Rng,
) -> (Complex64, Complex64, Complex64) {
    let (h_los, h_nlos) = sample_loo(params, rng);
    let p_los = params.los_mean_power();
    let p_nlos = params.nlos_mean_power();
    let p_tot = p_los + p_nlos;
    let u_los = h_los * (p_tot / p_los).sqrt();
    let u_nlos = if p_nlos > 0.0 {
        h_nlos * (p_tot / p_nlos).sqrt()
    } else {
        Complex64::new(0.0, 0.0)
    };
    let h = channel_coefficient(fspl, params.k, u_los, u_nlos);
    (h, h_los, h_nlos)
}

/// Complete per-satellite channel realization for one coherence interval.
#[derive(Debug, Clone, Copy)]
pub struct ChannelDraw {
    pub sat_id: SatId,
    /// True coefficient.
    pub h: Complex64,
    /// Imperfect estimate ĥ = h + h̃.
    pub h_hat: Complex64,
    /// Estimation error.
    pub h_tilde: Complex64,
    /// Amplitude-domain path loss used in the draw.
    pub fspl: f64,
    pub state: ChannelState,
    /// Raw LOS component (before unit-RMS normalization).
    pub h_los: Complex64,
    /// Raw NLOS component.
    pub h_nlos: Complex64,
}

/// Draw the full channel of one satellite: fading from `loo_rng`,
/// estimation error from `err_rng`.
#[allow(clippy::too_many_arguments)]
pub fn draw_channel(
    process: &StateProcess,
    state: ChannelState,
    sat_id: SatId,
    fspl: f64,
    var_h: f64,
    epsilon: f64,
    loo_rng: &mut ChaCha8Rng,
    err_rng: &mut ChaCha8Rng,
) -> ChannelDraw {
    let (h, h_los, h_nlos) = draw_state_channel(process.loo(state), fspl, loo_rng);
    let (h_hat, h_tilde) = apply_estimation_error(h, var_h, epsilon, err_rng);
    ChannelDraw {
        sat_id,
        h,
        h_hat,
        h_tilde,
        fspl,
        state,
        h_los,
        h_nlos,
    }
}

// ---------------------------------------------------------------------------
// Long-term moments
// ---------------------------------------------------------------------------

/// Long-term channel moments shared with the network controller in the
/// partial-CSI mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelMoments {
    /// Variance of the complex coefficient, var(h).
    pub var_h: f64,
    /// E|ĥ|².
    pub e_abs_hhat_sq: f64,
    /// E|h̃|² = ε²·var(h).
    pub e_abs_htilde_sq: f64,
    /// E|1/ĥ|² with |ĥ| clamped below at `clamp_delta·rms(ĥ)`.
    pub e_inv_hhat_sq: f64,
    /// Estimation error scale the moments were computed for.
    pub epsilon: f64,
}

impl ChannelMoments {
    /// Estimate the moments from channel samples, drawing the estimation
    /// error internally. Two passes: var(h) first (it sets the error
    /// variance), then the estimate statistics.
    pub fn from_samples(
        samples: &[Complex64],
        epsilon: f64,
        clamp_delta: f64,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let n = samples.len() as f64;
        let mean: Complex64 = samples.iter().sum::<Complex64>() / n;
        let mean_sq = samples.iter().map(|h| h.norm_sqr()).sum::<f64>() / n;
        let var_h = (mean_sq - mean.norm_sqr()).max(0.0);

        let hhat_sq: Vec<f64> = samples
            .iter()
            .map(|&h| apply_estimation_error(h, var_h, epsilon, rng).0.norm_sqr())
            .collect();
        let e_abs_hhat_sq = hhat_sq.iter().sum::<f64>() / n;
        let floor_sq = clamp_delta * clamp_delta * e_abs_hhat_sq;
        let e_inv_hhat_sq = hhat_sq.iter().map(|&x| 1.0 / x.max(floor_sq)).sum::<f64>() / n;

        Self {
            var_h,
            e_abs_hhat_sq,
            e_abs_htilde_sq: epsilon * epsilon * var_h,
            e_inv_hhat_sq,
            epsilon,
        }
    }

    /// Rescale moments computed at unit path loss to an actual FSPL. The
    /// coefficient scales as 1/fspl, so squared-magnitude moments scale as
    /// 1/fspl² and the inverse moment as fspl²; the relative clamp is
    /// scale-invariant.
    pub fn scaled_to_fspl(&self, fspl: f64) -> Self {
        let g = fspl * fspl;
        Self {
            var_h: self.var_h / g,
            e_abs_hhat_sq: self.e_abs_hhat_sq / g,
            e_abs_htilde_sq: self.e_abs_htilde_sq / g,
            e_inv_hhat_sq: self.e_inv_hhat_sq * g,
            epsilon: self.epsilon,
        }
    }

    /// Clamp floor for |ĥ|: `clamp_delta·sqrt(E|ĥ|²)`.
    pub fn clamp_floor(&self, clamp_delta: f64) -> f64 {
        clamp_delta * self.e_abs_hhat_sq.sqrt()
    }
}

/// Monte Carlo estimate of the long-term moments at a given path loss.
///
/// Samples are drawn from the stationary state mixture; `e_abs_htilde_sq`
/// is set analytically to `ε²·var(h)`.
pub fn channel_moments(
    process: &StateProcess,
    fspl_value: f64,
    epsilon: f64,
    num_samples: usize,
    clamp_delta: f64,
    rng: &mut ChaCha8Rng,
) -> Result<ChannelMoments, ChannelError> {
    if num_samples < 10_000 {
        return Err(ChannelError::TooFewSamples {
            min: 10_000,
            got: num_samples,
        });
    }
    if !(clamp_delta > 0.0) {
        return Err(ChannelError::NonPositive {
            what: "clamp_delta",
        });
    }
    let p_good = process.stationary_good_probability();
    let samples: Vec<Complex64> = (0..num_samples)
        .map(|_| {
            let state = if rng.random::<f64>() < p_good {
                ChannelState::Good
            } else {
                ChannelState::Bad
            };
            draw_state_channel(process.loo(state), fspl_value, rng).0
        })
        .collect();
    Ok(ChannelMoments::from_samples(
        &samples,
        epsilon,
        clamp_delta,
        rng,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streams::derive_rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        derive_rng(seed, &[0xDEAD])
    }

    #[test]
    fn fspl_identity_at_quarter_wavelength_over_pi() {
        let lambda = 0.05;
        let d = lambda / (4.0 * std::f64::consts::PI);
        assert!((fspl(d, lambda).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fspl_reference_link_magnitude() {
        let lambda = SPEED_OF_LIGHT / 6e9;
        assert!((lambda - 0.049_965_4).abs() < 1e-6);
        let v = fspl(550_000.0, lambda).unwrap();
        assert!((v / 1.38326e8 - 1.0).abs() < 1e-5, "fspl {v}");
        let db = 20.0 * v.log10();
        assert!((db - 162.8).abs() < 0.05, "fspl {db} dB");
    }

    #[test]
    fn fspl_is_linear_in_distance() {
        let a = fspl(1000.0, 0.05).unwrap();
        let b = fspl(2000.0, 0.05).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-9);
        assert!(matches!(
            fspl(0.0, 0.05),
            Err(ChannelError::NonPositive { what: "d_m" })
        ));
    }

    #[test]
    fn noise_power_reference_values() {
        let v = noise_power(290.0, 500e6).unwrap();
        assert!((v / 2.00194e-12 - 1.0).abs() < 1e-5, "sigma2 {v}");
        let w = noise_power(290.0, 100e6).unwrap();
        assert!((w / 4.00388e-13 - 1.0).abs() < 1e-5, "sigma2 {w}");
        // Linear in bandwidth.
        assert!((v - 5.0 * w).abs() / v < 1e-12);
        assert!(matches!(
            noise_power(0.0, 1.0),
            Err(ChannelError::NonPositive { .. })
        ));
    }

    #[test]
    fn link_budget_reference_setup() {
        let link = LinkBudget::new(-2.0, 5.0, 35.0, 6e9, 500e6, 290.0).unwrap();
        assert!((link.p_w - db_to_linear(38.0)).abs() < 1e-9);
        assert!((link.p_w - 6309.5734).abs() < 1e-3);
        assert!((link.sigma2_w / 2.00194e-12 - 1.0).abs() < 1e-5);
        assert!((link.lambda_m - 0.049_965_4).abs() < 1e-6);
    }

    #[test]
    fn coefficient_limits_and_hand_value() {
        let los = Complex64::new(1.0, 0.0);
        let nlos = Complex64::new(0.0, 1.0);
        // K = 0: pure NLOS.
        let h = channel_coefficient(2.0, 0.0, los, nlos);
        assert!((h - nlos / 2.0).norm() < 1e-15);
        // K → ∞: pure LOS.
        let h = channel_coefficient(2.0, f64::INFINITY, los, nlos);
        assert!((h - los / 2.0).norm() < 1e-15);
        // K = 1 hand evaluation: 0.353553·(1 + i).
        let h = channel_coefficient(2.0, 1.0, los, nlos);
        let expected = Complex64::new(0.353_553, 0.353_553);
        assert!((h - expected).norm() < 1e-5, "h = {h}");
    }

    #[test]
    fn degenerate_lognormal_is_unit_amplitude() {
        let params = LooParams::from_db(0.0, 0.0, -15.0).unwrap();
        let mut r = rng(1);
        for _ in 0..100 {
            let (los, _) = sample_loo(&params, &mut r);
            assert!((los.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn nlos_power_matches_mp() {
        let params = LooParams::from_db(0.0, 0.5, -10.0).unwrap();
        let mut r = rng(2);
        let n = 1_000_000;
        let mean: f64 = (0..n)
            .map(|_| sample_loo(&params, &mut r).1.norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((mean / 0.1 - 1.0).abs() < 0.01, "E|h_nlos|² = {mean}");
    }

    #[test]
    fn los_db_statistics_match_parameters() {
        let params = LooParams::from_db(-0.2, 0.5, -15.0).unwrap();
        let mut r = rng(3);
        let n = 1_000_000;
        let db: Vec<f64> = (0..n)
            .map(|_| 20.0 * sample_loo(&params, &mut r).0.norm().log10())
            .collect();
        let mean = db.iter().sum::<f64>() / n as f64;
        let var = db.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - -0.2).abs() < 0.02 * 0.2_f64.max(0.1), "mean {mean}");
        assert!((var.sqrt() / 0.5 - 1.0).abs() < 0.02, "std {}", var.sqrt());
    }

    #[test]
    fn phases_are_uniform() {
        // Chi-square over 16 bins, 1e6 draws, 1% significance
        // (chi2_{15, 0.99} = 30.578).
        let params = LooParams::from_db(-0.2, 0.5, -15.0).unwrap();
        let mut r = rng(4);
        let n = 1_000_000usize;
        let mut bins_los = [0u64; 16];
        let mut bins_nlos = [0u64; 16];
        for _ in 0..n {
            let (los, nlos) = sample_loo(&params, &mut r);
            let b = |c: Complex64| {
                (((c.arg() + TAU) % TAU) / TAU * 16.0).floor().min(15.0) as usize
            };
            bins_los[b(los)] += 1;
            bins_nlos[b(nlos)] += 1;
        }
        let expected = n as f64 / 16.0;
        for bins in [bins_los, bins_nlos] {
            let chi2: f64 = bins
                .iter()
                .map(|&c| (c as f64 - expected).powi(2) / expected)
                .sum();
            assert!(chi2 < 30.578, "chi2 = {chi2}");
        }
    }

    #[test]
    fn k_weighted_split_preserves_unit_power() {
        // With unit-power components, E|h·fspl|² = 1 for any K.
        let mut r = rng(5);
        for k in [0.0, 0.5, 1.0, 4.0, 30.0] {
            let n = 100_000;
            let mean: f64 = (0..n)
                .map(|_| {
                    let los = Complex64::from_polar(1.0, r.random::<f64>() * TAU);
                    let nlos = Complex64::from_polar(
                        rayleigh_sample(1.0, &mut r),
                        r.random::<f64>() * TAU,
                    );
                    channel_coefficient(3.0, k, los, nlos).norm_sqr() * 9.0
                })
                .sum::<f64>()
                / n as f64;
            assert!((mean - 1.0).abs() < 0.01, "K={k}: E = {mean}");
        }
    }

    #[test]
    fn state_channel_carries_absolute_power() {
        // The recombination must reproduce E|h·fspl|² = P_los + MP.
        let params = LooParams::from_db(-10.0, 3.0, -20.0).unwrap();
        let mut r = rng(6);
        let n = 200_000;
        let mean: f64 = (0..n)
            .map(|_| draw_state_channel(&params, 1.0, &mut r).0.norm_sqr())
            .sum::<f64>()
            / n as f64;
        let expected = params.total_mean_power();
        assert!((mean / expected - 1.0).abs() < 0.02, "{mean} vs {expected}");
    }

    #[test]
    fn estimate_decomposition_is_bit_exact() {
        let mut r = rng(7);
        let params = LooParams::from_db(-0.2, 0.5, -15.0).unwrap();
        for _ in 0..1000 {
            let (h, _, _) = draw_state_channel(&params, 1.4e8, &mut r);
            let (h_hat, h_tilde) = apply_estimation_error(h, h.norm_sqr(), 3.0, &mut r);
            assert_eq!(h_hat, h + h_tilde);
        }
    }

    #[test]
    fn perfect_csi_means_no_error() {
        let mut r = rng(8);
        let h = Complex64::new(3e-9, -2e-9);
        let (h_hat, h_tilde) = apply_estimation_error(h, 1e-17, 0.0, &mut r);
        assert_eq!(h_hat, h);
        assert_eq!(h_tilde, Complex64::new(0.0, 0.0));
        let (h_hat, _) = apply_estimation_error(h, 0.0, 3.0, &mut r);
        assert_eq!(h_hat, h);
    }

    #[test]
    fn estimation_error_variance_scales_with_epsilon() {
        let mut r = rng(9);
        let n = 1_000_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let (_, h_tilde) =
                apply_estimation_error(Complex64::new(0.0, 0.0), 1e-16, 3.0, &mut r);
            sum += h_tilde.norm_sqr();
        }
        let var = sum / n as f64;
        assert!((var / 9e-16 - 1.0).abs() < 0.01, "var {var}");
    }

    #[test]
    fn degenerate_state_sequence_is_one_segment() {
        let mut process = default_suburban();
        process.good_duration = DurationDistribution {
            median_s: 600.0,
            std_db: 0.0,
        };
        let mut r = rng(10);
        let segments =
            sample_state_sequence(&process, 600.0, Some(ChannelState::Good), &mut r);
        assert_eq!(segments.len(), 1);
        assert_eq!(segments[0].state, ChannelState::Good);
        assert_eq!(segments[0].duration_s, 600.0);
    }

    #[test]
    fn state_sequences_alternate_and_tile() {
        let process = default_suburban();
        let mut r = rng(11);
        let segments = sample_state_sequence(&process, 6000.0, None, &mut r);
        let mut t = 0.0;
        for pair in segments.windows(2) {
            assert_ne!(pair[0].state, pair[1].state);
        }
        for seg in &segments {
            assert!((seg.start_s - t).abs() < 1e-9);
            assert!(seg.duration_s > 0.0);
            t += seg.duration_s;
        }
        assert!((t - 6000.0).abs() < 1e-9);
    }

    #[test]
    fn state_sequence_is_reproducible() {
        let process = default_suburban();
        let a = sample_state_sequence(&process, 6000.0, None, &mut rng(12));
        let b = sample_state_sequence(&process, 6000.0, None, &mut rng(12));
        assert_eq!(a, b);
    }

    #[test]
    fn sojourn_median_matches_configuration() {
        let dist = DurationDistribution {
            median_s: 30.0,
            std_db: 0.5,
        };
        let mut r = rng(13);
        let mut samples: Vec<f64> = (0..10_000).map(|_| dist.sample(&mut r)).collect();
        samples.sort_by(f64::total_cmp);
        let median = samples[samples.len() / 2];
        assert!((median / 30.0 - 1.0).abs() < 0.10, "median {median}");
    }

    #[test]
    fn timeline_lookup_matches_segments() {
        let process = default_suburban();
        let mut r = rng(14);
        let timeline = StateTimeline::sample(&process, 600.0, None, &mut r);
        for seg in &timeline.segments {
            assert_eq!(timeline.state_at(seg.start_s + 1e-6), seg.state);
            assert_eq!(
                timeline.state_at(seg.start_s + seg.duration_s - 1e-6),
                seg.state
            );
        }
    }

    #[test]
    fn moments_of_a_deterministic_channel() {
        let c = Complex64::new(3e-9, 4e-9);
        let samples = vec![c; 10_000];
        let m = ChannelMoments::from_samples(&samples, 0.0, 1e-3, &mut rng(15));
        assert!(m.var_h.abs() < 1e-25);
        assert!((m.e_abs_hhat_sq / c.norm_sqr() - 1.0).abs() < 1e-12);
        assert!((m.e_inv_hhat_sq * c.norm_sqr() - 1.0).abs() < 1e-12);
        assert_eq!(m.e_abs_htilde_sq, 0.0);
    }

    #[test]
    fn moment_identity_for_estimates() {
        // E|ĥ|² = var(h)·(1+ε²) + |E h|².
        let process = default_suburban();
        let m = channel_moments(&process, 1.0, 3.0, 100_000, 1e-3, &mut rng(16)).unwrap();
        let expected = m.var_h * (1.0 + 9.0);
        assert!(
            (m.e_abs_hhat_sq / expected - 1.0).abs() < 0.01,
            "{} vs {}",
            m.e_abs_hhat_sq,
            expected
        );
    }

    #[test]
    fn clamped_inverse_moment_is_nonincreasing_in_delta() {
        let process = default_suburban();
        let mut last = f64::INFINITY;
        for delta in [1e-4, 1e-3, 1e-2, 1e-1] {
            let m =
                channel_moments(&process, 1.0, 3.0, 50_000, delta, &mut rng(17)).unwrap();
            assert!(m.e_inv_hhat_sq <= last);
            last = m.e_inv_hhat_sq;
        }
    }

    #[test]
    fn moments_scale_with_fspl() {
        let process = default_suburban();
        let unit = channel_moments(&process, 1.0, 3.0, 50_000, 1e-3, &mut rng(18)).unwrap();
        let scaled = unit.scaled_to_fspl(1.38e8);
        let direct = channel_moments(&process, 1.38e8, 3.0, 50_000, 1e-3, &mut rng(18)).unwrap();
        assert!((scaled.var_h / direct.var_h - 1.0).abs() < 1e-9);
        assert!((scaled.e_inv_hhat_sq / direct.e_inv_hhat_sq - 1.0).abs() < 1e-9);
    }

    #[test]
    fn too_few_samples_is_rejected() {
        let process = default_suburban();
        assert!(matches!(
            channel_moments(&process, 1.0, 3.0, 100, 1e-3, &mut rng(19)),
            Err(ChannelError::TooFewSamples { .. })
        ));
    }
}
