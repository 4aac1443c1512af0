//! Walker constellation construction, circular-orbit propagation, and
//! user-to-satellite visibility.
//!
//! The Earth model is a rotating sphere: radius [`EARTH_RADIUS_M`],
//! gravitational parameter [`MU_EARTH`], rotation rate
//! [`EARTH_ROTATION_RATE`]. Orbits are circular two-body Keplerian; that is
//! sufficient for elevation/slant-range statistics at LEO altitudes over
//! runs of a couple of hours. No J2, drag, or TLE ingestion.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use thiserror::Error;

/// Mean Earth radius in meters (spherical model).
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;
/// Earth gravitational parameter μ in m³/s².
pub const MU_EARTH: f64 = 3.986_004_418e14;
/// Earth rotation rate in rad/s.
pub const EARTH_ROTATION_RATE: f64 = 7.292_115_9e-5;

#[derive(Debug, Error)]
pub enum GeometryError {
    /// A constellation parameter violates its invariant.
    #[error("invalid constellation spec: {field} {reason}")]
    InvalidSpec {
        field: &'static str,
        reason: &'static str,
    },
    /// Cluster selection was asked for satellites but none is visible.
    #[error("no satellite visible")]
    NoVisibleSatellite,
}

/// One Walker shell: equal-altitude circular orbits in evenly spaced planes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellSpec {
    /// Altitude above the mean Earth radius, meters.
    pub altitude_m: f64,
    /// Orbital inclination, degrees.
    pub inclination_deg: f64,
    /// Number of orbital planes.
    pub num_planes: u32,
    /// Satellites per plane.
    pub sats_per_plane: u32,
    /// Total RAAN span covered by the planes, degrees (360 for a delta pattern).
    pub raan_spread_deg: f64,
    /// True-anomaly offset between satellites of adjacent planes, degrees.
    pub phasing_step_deg: f64,
}

impl ShellSpec {
    pub fn validate(&self) -> Result<(), GeometryError> {
        let err = |field, reason| Err(GeometryError::InvalidSpec { field, reason });
        if !(self.altitude_m > 0.0) {
            return err("altitude_m", "must be positive");
        }
        if !(self.inclination_deg > 0.0 && self.inclination_deg < 180.0) {
            return err("inclination_deg", "must lie in (0, 180)");
        }
        if self.num_planes == 0 {
            return err("num_planes", "must be positive");
        }
        if self.sats_per_plane == 0 {
            return err("sats_per_plane", "must be positive");
        }
        if !(self.raan_spread_deg > 0.0 && self.raan_spread_deg <= 360.0) {
            return err("raan_spread_deg", "must lie in (0, 360]");
        }
        if !self.phasing_step_deg.is_finite() {
            return err("phasing_step_deg", "must be finite");
        }
        Ok(())
    }

    /// Number of satellites in the shell.
    pub fn count(&self) -> usize {
        self.num_planes as usize * self.sats_per_plane as usize
    }

    /// RAAN spacing between adjacent planes, degrees.
    pub fn raan_spacing_deg(&self) -> f64 {
        self.raan_spread_deg / self.num_planes as f64
    }
}

/// A multi-shell constellation with a common epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstellationSpec {
    pub shells: Vec<ShellSpec>,
    /// Simulation time origin, seconds. All shells start with plane 0 at
    /// RAAN 0 and satellite 0 at true anomaly 0 at the epoch.
    pub epoch_s: f64,
}

impl ConstellationSpec {
    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.shells.is_empty() {
            return Err(GeometryError::InvalidSpec {
                field: "shells",
                reason: "at least one shell required",
            });
        }
        for shell in &self.shells {
            shell.validate()?;
        }
        Ok(())
    }
}

/// Identifier of one satellite; assigned sequentially across shells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SatId(pub u32);

/// Circular-orbit elements of one satellite. Angles in radians, normalized
/// to [0, 2π).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitalElements {
    pub sat_id: SatId,
    /// Shell the satellite belongs to (index into `ConstellationSpec::shells`).
    pub shell_index: usize,
    pub semi_major_axis_m: f64,
    pub inclination_rad: f64,
    pub raan_rad: f64,
    pub true_anomaly_at_epoch_rad: f64,
}

impl OrbitalElements {
    /// Mean motion n = sqrt(μ/a³), rad/s.
    pub fn mean_motion(&self) -> f64 {
        (MU_EARTH / self.semi_major_axis_m.powi(3)).sqrt()
    }

    /// Orbital period 2π/n, seconds.
    pub fn period_s(&self) -> f64 {
        TAU / self.mean_motion()
    }
}

/// Earth-fixed satellite position at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatelliteState {
    pub sat_id: SatId,
    pub shell_index: usize,
    /// ECEF position, meters.
    pub position_ecef: [f64; 3],
    pub time_s: f64,
}

/// Ground user position on the spherical Earth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundUser {
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub altitude_m: f64,
}

impl GroundUser {
    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.latitude_deg >= -90.0 && self.latitude_deg <= 90.0) {
            return Err(GeometryError::InvalidSpec {
                field: "latitude_deg",
                reason: "must lie in [-90, 90]",
            });
        }
        if !(self.longitude_deg >= -180.0 && self.longitude_deg <= 180.0) {
            return Err(GeometryError::InvalidSpec {
                field: "longitude_deg",
                reason: "must lie in [-180, 180]",
            });
        }
        Ok(())
    }

    /// ECEF position of the user, meters.
    pub fn position_ecef(&self) -> [f64; 3] {
        let lat = self.latitude_deg.to_radians();
        let lon = self.longitude_deg.to_radians();
        let r = EARTH_RADIUS_M + self.altitude_m;
        [r * lat.cos() * lon.cos(), r * lat.cos() * lon.sin(), r * lat.sin()]
    }
}

/// A satellite above the minimum elevation mask, as seen by one user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisibleSatellite {
    pub sat_id: SatId,
    pub shell_index: usize,
    pub elevation_deg: f64,
    pub slant_range_m: f64,
}

fn normalize_angle(rad: f64) -> f64 {
    let r = rad.rem_euclid(TAU);
    if r == TAU {
        0.0
    } else {
        r
    }
}

/// Build the orbital elements of a Walker constellation.
///
/// Plane `j` of a shell sits at RAAN `j · raan_spread/num_planes`; satellite
/// `k` of plane `j` starts at true anomaly
/// `k · 360/sats_per_plane + j · phasing_step`. Satellite ids run
/// sequentially over (shell, plane, slot).
pub fn build_walker_constellation(
    spec: &ConstellationSpec,
) -> Result<Vec<OrbitalElements>, GeometryError> {
    spec.validate()?;
    let mut elements = Vec::with_capacity(spec.shells.iter().map(ShellSpec::count).sum());
    let mut next_id = 0u32;
    for (shell_index, shell) in spec.shells.iter().enumerate() {
        let a = EARTH_RADIUS_M + shell.altitude_m;
        let inc = shell.inclination_deg.to_radians();
        let raan_step_deg = shell.raan_spacing_deg();
        let anomaly_step_deg = 360.0 / shell.sats_per_plane as f64;
        for plane in 0..shell.num_planes {
            let raan_deg = plane as f64 * raan_step_deg;
            for slot in 0..shell.sats_per_plane {
                let anomaly_deg =
                    slot as f64 * anomaly_step_deg + plane as f64 * shell.phasing_step_deg;
                elements.push(OrbitalElements {
                    sat_id: SatId(next_id),
                    shell_index,
                    semi_major_axis_m: a,
                    inclination_rad: normalize_angle(inc),
                    raan_rad: normalize_angle(raan_deg.to_radians()),
                    true_anomaly_at_epoch_rad: normalize_angle(anomaly_deg.to_radians()),
                });
                next_id += 1;
            }
        }
    }
    Ok(elements)
}

/// Inertial (non-rotating frame) position on the circular orbit at time `t`
/// past the epoch.
pub fn inertial_position(elements: &OrbitalElements, t_s: f64) -> [f64; 3] {
    let a = elements.semi_major_axis_m;
    let u = elements.true_anomaly_at_epoch_rad + elements.mean_motion() * t_s;
    let (sin_u, cos_u) = u.sin_cos();
    let (sin_raan, cos_raan) = elements.raan_rad.sin_cos();
    let (sin_i, cos_i) = elements.inclination_rad.sin_cos();
    // Orbit-plane basis: p along the ascending node, q 90° ahead in-plane.
    [
        a * (cos_u * cos_raan - sin_u * sin_raan * cos_i),
        a * (cos_u * sin_raan + sin_u * cos_raan * cos_i),
        a * (sin_u * sin_i),
    ]
}

/// Propagate a satellite to time `t` past the epoch and express the position
/// in the rotating Earth-fixed frame (aligned with the inertial frame at the
/// epoch).
pub fn propagate(elements: &OrbitalElements, t_s: f64) -> SatelliteState {
    let eci = inertial_position(elements, t_s);
    let theta = EARTH_ROTATION_RATE * t_s;
    let (sin_t, cos_t) = theta.sin_cos();
    // Rz(-theta) · eci
    let position_ecef = [
        cos_t * eci[0] + sin_t * eci[1],
        -sin_t * eci[0] + cos_t * eci[1],
        eci[2],
    ];
    SatelliteState {
        sat_id: elements.sat_id,
        shell_index: elements.shell_index,
        position_ecef,
        time_s: t_s,
    }
}

/// Elevation (degrees) and slant range (meters) of a satellite as seen from
/// the user. Elevation is the angle between the local horizon plane and the
/// user→satellite vector; negative below the horizon.
pub fn elevation_and_range(user: &GroundUser, sat: &SatelliteState) -> (f64, f64) {
    let u = user.position_ecef();
    let los = [
        sat.position_ecef[0] - u[0],
        sat.position_ecef[1] - u[1],
        sat.position_ecef[2] - u[2],
    ];
    let range = (los[0] * los[0] + los[1] * los[1] + los[2] * los[2]).sqrt();
    let r_user = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    // Radial unit vector doubles as the local zenith on a sphere.
    let dot = (los[0] * u[0] + los[1] * u[1] + los[2] * u[2]) / (range * r_user);
    let elevation = dot.clamp(-1.0, 1.0).asin().to_degrees();
    (elevation, range)
}

/// All satellites at or above `min_elevation_deg`, sorted by ascending slant
/// range (ties broken by ascending satellite id, for determinism).
pub fn visible_set(
    states: &[SatelliteState],
    user: &GroundUser,
    min_elevation_deg: f64,
) -> Vec<VisibleSatellite> {
    let mut visible: Vec<VisibleSatellite> = states
        .iter()
        .filter_map(|s| {
            let (elevation_deg, slant_range_m) = elevation_and_range(user, s);
            (elevation_deg >= min_elevation_deg).then_some(VisibleSatellite {
                sat_id: s.sat_id,
                shell_index: s.shell_index,
                elevation_deg,
                slant_range_m,
            })
        })
        .collect();
    visible.sort_by(|a, b| {
        a.slant_range_m
            .total_cmp(&b.slant_range_m)
            .then(a.sat_id.cmp(&b.sat_id))
    });
    visible
}

/// The `L` nearest visible satellites (the cluster). Requests larger than
/// the visible set clamp to it with a logged warning; an empty visible set
/// is an error.
pub fn select_cluster(
    visible: &[VisibleSatellite],
    l: usize,
) -> Result<Vec<VisibleSatellite>, GeometryError> {
    if visible.is_empty() {
        return Err(GeometryError::NoVisibleSatellite);
    }
    if l > visible.len() {
        log::warn!(
            "cluster size {} exceeds visible count {}; clamping",
            l,
            visible.len()
        );
    }
    Ok(visible[..l.min(visible.len())].to_vec())
}

/// The constellation used throughout the experiments: two 22×72 Walker
/// shells (1584 satellites each) at 550 km/53° and 540 km/53.2°, RAAN spread
/// 360°, adjacent-plane phasing 1.1364°.
pub fn two_shell_reference_spec() -> ConstellationSpec {
    let shell = |altitude_m, inclination_deg| ShellSpec {
        altitude_m,
        inclination_deg,
        num_planes: 22,
        sats_per_plane: 72,
        raan_spread_deg: 360.0,
        phasing_step_deg: 1.1364,
    };
    ConstellationSpec {
        shells: vec![shell(550_000.0, 53.0), shell(540_000.0, 53.2)],
        epoch_s: 0.0,
    }
}

/// Ground user at the reference London location.
pub fn london_user() -> GroundUser {
    GroundUser {
        latitude_deg: 51.488_057_2,
        longitude_deg: -0.076_283_8,
        altitude_m: 0.0,
    }
}
