//! Urban air-to-ground propagation: dual-branch LoS/NLoS path loss, a 3D
//! sector antenna pattern, and the per-cell SINR map at UAV altitude that the
//! trajectory environment consumes.
//!
//! Path loss is the power-law pair `l_los(d) = x_los * d^-alpha_los` and
//! `l_nlos(d) = x_nlos * d^-alpha_nlos` (linear gains, intercepts at 1 m).
//! Antenna gain combines per-plane parabolic attenuations:
//! `G = g_max - min(att_h(phi) + att_v(theta), a_m)` with
//! `att(delta) = min(12 * (delta / hpbw)^2, cap)`.

pub mod envgen;

pub use envgen::{generate_environment, GenConfig, Preset};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{Point2, Point3, Rect};
use crate::radiomap::SinrGrid;
use crate::scalar::Real;

/// Dual-branch power-law channel constants. `x_*` are linear gains at 1 m;
/// `carrier_hz` and `noise_dbm` describe the link budget context.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams<F> {
    pub x_los: F,
    pub x_nlos: F,
    pub alpha_los: F,
    pub alpha_nlos: F,
    pub noise_dbm: F,
    pub carrier_hz: F,
}

impl<F: Real> ChannelParams<F> {
    /// Typical urban air-to-ground defaults: LoS intercept -31 dB at 1 m with
    /// exponent 2.2, NLoS intercept -41 dB with exponent 3.5, -95 dBm noise,
    /// 2 GHz carrier.
    pub fn urban_default() -> Self {
        ChannelParams {
            x_los: F::of(10f64.powf(-3.1)),
            x_nlos: F::of(10f64.powf(-4.1)),
            alpha_los: F::of(2.2),
            alpha_nlos: F::of(3.5),
            noise_dbm: F::of(-95.0),
            carrier_hz: F::of(2.0e9),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_los > F::zero() && self.alpha_nlos >= self.alpha_los) {
            return Err(Error::Config("require alpha_nlos >= alpha_los > 0".into()));
        }
        if !(self.x_los > F::zero() && self.x_nlos > F::zero()) {
            return Err(Error::Config("path-loss intercepts must be positive".into()));
        }
        if !self.noise_dbm.is_finite() {
            return Err(Error::Config("noise power must be finite".into()));
        }
        Ok(())
    }

    pub fn noise_mw(&self) -> F {
        dbm_to_mw(self.noise_dbm)
    }
}

/// Aggregate sector pattern of a planar array: per-plane parabolic rolloff
/// with a vertical sidelobe cap and an overall attenuation floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntennaPattern<F> {
    pub g_max_db: F,
    pub a_m_db: F,
    pub horizontal_hpbw_deg: F,
    pub vertical_hpbw_deg: F,
    pub sla_v_db: F,
}

impl<F: Real> AntennaPattern<F> {
    /// 1x8 vertical array modelled through its aggregate beamwidths.
    pub fn upa_1x8_default() -> Self {
        AntennaPattern {
            g_max_db: F::of(8.0),
            a_m_db: F::of(30.0),
            horizontal_hpbw_deg: F::of(65.0),
            vertical_hpbw_deg: F::of(12.0),
            sla_v_db: F::of(20.0),
        }
    }

    /// Unit-gain pattern with no angular rolloff.
    pub fn isotropic() -> Self {
        AntennaPattern {
            g_max_db: F::zero(),
            a_m_db: F::infinity(),
            horizontal_hpbw_deg: F::infinity(),
            vertical_hpbw_deg: F::infinity(),
            sla_v_db: F::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a_m_db > F::zero()) {
            return Err(Error::Config("a_m_db must be positive".into()));
        }
        if !self.g_max_db.is_finite() {
            return Err(Error::Config("g_max_db must be finite".into()));
        }
        if !(self.horizontal_hpbw_deg > F::zero() && self.vertical_hpbw_deg > F::zero()) {
            return Err(Error::Config("beamwidths must be positive".into()));
        }
        Ok(())
    }
}

/// Fixed ground radio with position, transmit power and oriented antenna.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseStation<F> {
    pub position: Point3<F>,
    pub tx_power_dbm: F,
    pub antenna: AntennaPattern<F>,
    /// Boresight azimuth, degrees counter-clockwise from +x.
    pub azimuth_deg: F,
    /// Mechanical downtilt in degrees, positive below the horizon.
    pub downtilt_deg: F,
}

impl<F: Real> BaseStation<F> {
    pub fn validate(&self) -> Result<()> {
        if !self.tx_power_dbm.is_finite() {
            return Err(Error::Config("tx power must be finite".into()));
        }
        let ninety = F::of(90.0);
        if !(self.downtilt_deg >= -ninety && self.downtilt_deg <= ninety) {
            return Err(Error::Config("downtilt must lie in [-90, 90] degrees".into()));
        }
        self.antenna.validate()
    }
}

/// Axis-aligned building box: footprint corner `(x, y)`, extent `(w, d)`,
/// height from ground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Building<F> {
    pub x: F,
    pub y: F,
    pub w: F,
    pub d: F,
    pub height_m: F,
}

/// Everything needed to synthesize a radio map: geometry, radios, mission
/// areas and the UAV operating altitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentSpec<F> {
    pub width_m: F,
    pub height_m: F,
    pub cell_size_m: F,
    pub buildings: Vec<Building<F>>,
    pub base_stations: Vec<BaseStation<F>>,
    pub uav_altitude_m: F,
    pub launch_area: Rect<F>,
    pub target_area: Rect<F>,
    pub h_min_m: F,
    pub h_max_m: F,
}

impl<F: Real> EnvironmentSpec<F> {
    pub fn grid_cols(&self) -> usize {
        (self.width_m / self.cell_size_m).ceil().to64() as usize
    }

    pub fn grid_rows(&self) -> usize {
        (self.height_m / self.cell_size_m).ceil().to64() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width_m > F::zero() && self.height_m > F::zero() && self.cell_size_m > F::zero()) {
            return Err(Error::Config("map dimensions and cell size must be positive".into()));
        }
        if !(self.h_min_m <= self.uav_altitude_m && self.uav_altitude_m <= self.h_max_m) {
            return Err(Error::Config("require h_min <= uav_altitude <= h_max".into()));
        }
        let bounds = Rect::new(F::zero(), F::zero(), self.width_m, self.height_m);
        for (name, r) in [("launch", &self.launch_area), ("target", &self.target_area)] {
            let far = Point2::new(r.x + r.w, r.y + r.h);
            if !(bounds.contains(&Point2::new(r.x, r.y)) && bounds.contains(&far)) {
                return Err(Error::Config(format!("{name} area lies outside the map bounds")));
            }
        }
        for b in &self.base_stations {
            b.validate()?;
        }
        Ok(())
    }
}

pub fn dbm_to_mw<F: Real>(dbm: F) -> F {
    let ten = F::of(10.0);
    ten.powf(dbm / ten)
}

pub fn mw_to_dbm<F: Real>(mw: F) -> F {
    F::of(10.0) * mw.log10()
}

/// Line-of-sight path loss `x_los * d^-alpha_los` as a linear gain.
pub fn los_path_loss<F: Real>(d: F, p: &ChannelParams<F>) -> Result<F> {
    path_loss(d, p.x_los, p.alpha_los)
}

/// Non-line-of-sight path loss `x_nlos * d^-alpha_nlos` as a linear gain.
pub fn nlos_path_loss<F: Real>(d: F, p: &ChannelParams<F>) -> Result<F> {
    path_loss(d, p.x_nlos, p.alpha_nlos)
}

fn path_loss<F: Real>(d: F, x: F, alpha: F) -> Result<F> {
    if !(d > F::zero()) {
        return Err(Error::Domain(format!("path-loss distance must be positive, got {d}")));
    }
    Ok(x * d.powf(-alpha))
}

/// Per-plane parabolic attenuation `min(12 * (delta / hpbw)^2, cap)` in dB.
fn plane_attenuation<F: Real>(delta_deg: F, hpbw_deg: F, cap_db: F) -> F {
    let ratio = delta_deg / hpbw_deg;
    (F::of(12.0) * ratio * ratio).min(cap_db)
}

/// 3D antenna gain in dB at zenith angle `theta_deg` (boresight at 90) and
/// azimuth deviation `phi_deg` from boresight. Bounded by
/// `[g_max - a_m, g_max]` on the normalized domain.
pub fn antenna_gain<F: Real>(theta_deg: F, phi_deg: F, pattern: &AntennaPattern<F>) -> F {
    let att_h = plane_attenuation(phi_deg, pattern.horizontal_hpbw_deg, pattern.a_m_db);
    let att_v = plane_attenuation(theta_deg - F::of(90.0), pattern.vertical_hpbw_deg, pattern.sla_v_db);
    pattern.g_max_db - (att_h + att_v).min(pattern.a_m_db)
}

/// True iff the open segment `tx -> rx` crosses no building box. Boxes are
/// opaque; grazing contact with a face counts as blocked.
pub fn is_los<F: Real>(tx: &Point3<F>, rx: &Point3<F>, buildings: &[Building<F>]) -> bool {
    let dir = [rx.x - tx.x, rx.y - tx.y, rx.z - tx.z];
    for b in buildings {
        let lo = [b.x, b.y, F::zero()];
        let hi = [b.x + b.w, b.y + b.d, b.height_m];
        if segment_hits_box(&[tx.x, tx.y, tx.z], &dir, &lo, &hi) {
            return false;
        }
    }
    true
}

/// Slab test for `origin + t * dir`, `t` in the open interval (0, 1).
fn segment_hits_box<F: Real>(origin: &[F; 3], dir: &[F; 3], lo: &[F; 3], hi: &[F; 3]) -> bool {
    let mut t0 = F::zero();
    let mut t1 = F::one();
    for axis in 0..3 {
        if dir[axis] == F::zero() {
            if origin[axis] < lo[axis] || origin[axis] > hi[axis] {
                return false;
            }
            continue;
        }
        let inv = F::one() / dir[axis];
        let mut near = (lo[axis] - origin[axis]) * inv;
        let mut far = (hi[axis] - origin[axis]) * inv;
        if near > far {
            std::mem::swap(&mut near, &mut far);
        }
        t0 = t0.max(near);
        t1 = t1.min(far);
        if t0 > t1 {
            return false;
        }
    }
    // Intersection interval must overlap the open segment interior.
    t0 < F::one() && t1 > F::zero()
}

/// Received power in dBm at `rx` from one base station: transmit power plus
/// antenna gain towards `rx` plus the path-loss branch chosen by [`is_los`].
pub fn received_power<F: Real>(
    bs: &BaseStation<F>,
    rx: &Point3<F>,
    buildings: &[Building<F>],
    ch: &ChannelParams<F>,
) -> Result<F> {
    let d = bs.position.distance(rx);
    let loss = if is_los(&bs.position, rx, buildings) {
        los_path_loss(d, ch)?
    } else {
        nlos_path_loss(d, ch)?
    };
    let (theta, phi) = angles_to(bs, rx);
    let gain_db = antenna_gain(theta, phi, &bs.antenna);
    Ok(bs.tx_power_dbm + gain_db + F::of(10.0) * loss.log10())
}

/// Zenith/azimuth of `rx` in the antenna frame: zenith 90 on the (tilted)
/// boresight plane, azimuth wrapped to (-180, 180].
fn angles_to<F: Real>(bs: &BaseStation<F>, rx: &Point3<F>) -> (F, F) {
    let dx = rx.x - bs.position.x;
    let dy = rx.y - bs.position.y;
    let dz = rx.z - bs.position.z;
    let horiz = (dx * dx + dy * dy).sqrt();
    let deg = F::of(180.0) / F::of(std::f64::consts::PI);
    let zenith = horiz.atan2(dz) * deg;
    let theta = (zenith - bs.downtilt_deg).max(F::zero()).min(F::of(180.0));
    let mut phi = dy.atan2(dx) * deg - bs.azimuth_deg;
    let full = F::of(360.0);
    while phi > F::of(180.0) {
        phi = phi - full;
    }
    while phi <= F::of(-180.0) {
        phi = phi + full;
    }
    (theta, phi)
}

/// Compute the SINR map (dB) at UAV altitude over the environment's grid.
/// Each cell's serving station is the power argmax; interference is the sum
/// of all other stations plus thermal noise.
pub fn compute_sinr_map<F: Real>(env: &EnvironmentSpec<F>, ch: &ChannelParams<F>) -> Result<SinrGrid<F>> {
    env.validate()?;
    ch.validate()?;
    if env.base_stations.is_empty() {
        return Err(Error::Config("environment has no base stations".into()));
    }
    let cols = env.grid_cols();
    let rows = env.grid_rows();
    let half = F::of(0.5);
    let noise = ch.noise_mw();
    let mut values = Vec::with_capacity(cols * rows);
    for r in 0..rows {
        for c in 0..cols {
            let rx = Point3::new(
                (F::of(c as f64) + half) * env.cell_size_m,
                (F::of(r as f64) + half) * env.cell_size_m,
                env.uav_altitude_m,
            );
            let mut powers = Vec::with_capacity(env.base_stations.len());
            for bs in &env.base_stations {
                powers.push(dbm_to_mw(received_power(bs, &rx, &env.buildings, ch)?));
            }
            let mut serving = 0usize;
            for (i, &p) in powers.iter().enumerate() {
                if p > powers[serving] {
                    serving = i;
                }
            }
            let mut interference = F::zero();
            for (i, &p) in powers.iter().enumerate() {
                if i != serving {
                    interference = interference + p;
                }
            }
            let sinr = powers[serving] / (interference + noise);
            values.push(F::of(10.0) * sinr.log10());
        }
    }
    SinrGrid::new(cols, rows, env.cell_size_m, Point2::new(F::zero(), F::zero()), values)
}
