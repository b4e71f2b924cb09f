//! Seeded synthesis of urban environments. Two contrasting presets mirror
//! the simulation setups this pipeline is exercised on: `env1` with tall,
//! sparsely placed blocks and `env2` with low but densely packed buildings
//! and a different station layout. `smoke` is a tiny open-field map for fast
//! end-to-end tests.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AntennaPattern, BaseStation, Building, EnvironmentSpec};
use crate::error::{Error, Result};
use crate::geo::{Point3, Rect};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Env1,
    Env2,
    Smoke,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "env1" => Ok(Preset::Env1),
            "env2" => Ok(Preset::Env2),
            "smoke" => Ok(Preset::Smoke),
            other => Err(Error::Config(format!("unknown preset `{other}` (expected env1, env2 or smoke)"))),
        }
    }
}

/// Generator knobs; ranges are `(min, max)` inclusive of min, exclusive of max.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig<F> {
    pub width_m: F,
    pub height_m: F,
    pub cell_size_m: F,
    pub building_count: usize,
    pub building_w_range: (F, F),
    pub building_d_range: (F, F),
    pub building_h_range: (F, F),
    pub num_bs: usize,
    pub bs_height_m: F,
    pub bs_tx_power_dbm: F,
    pub bs_downtilt_deg: F,
    pub antenna: AntennaPattern<F>,
    pub launch_area: Rect<F>,
    pub target_area: Rect<F>,
    pub uav_altitude_m: F,
    pub h_min_m: F,
    pub h_max_m: F,
}

impl<F: Real> GenConfig<F> {
    pub fn preset(p: Preset) -> Self {
        let f = F::of;
        match p {
            // Tall blocks, sparse placement, 2x2 station grid.
            Preset::Env1 => GenConfig {
                width_m: f(2000.0),
                height_m: f(2000.0),
                cell_size_m: f(40.0),
                building_count: 60,
                building_w_range: (f(60.0), f(180.0)),
                building_d_range: (f(60.0), f(180.0)),
                building_h_range: (f(40.0), f(120.0)),
                num_bs: 4,
                bs_height_m: f(25.0),
                bs_tx_power_dbm: f(30.0),
                bs_downtilt_deg: f(6.0),
                antenna: AntennaPattern::upa_1x8_default(),
                launch_area: Rect::new(f(100.0), f(100.0), f(400.0), f(400.0)),
                target_area: Rect::new(f(1300.0), f(1300.0), f(600.0), f(600.0)),
                uav_altitude_m: f(100.0),
                h_min_m: f(60.0),
                h_max_m: f(150.0),
            },
            // Lower but more densely arranged buildings, different station
            // layout, target area closer to the launch zone.
            Preset::Env2 => GenConfig {
                width_m: f(2000.0),
                height_m: f(2000.0),
                cell_size_m: f(40.0),
                building_count: 150,
                building_w_range: (f(30.0), f(90.0)),
                building_d_range: (f(30.0), f(90.0)),
                building_h_range: (f(15.0), f(50.0)),
                num_bs: 5,
                bs_height_m: f(20.0),
                bs_tx_power_dbm: f(30.0),
                bs_downtilt_deg: f(6.0),
                antenna: AntennaPattern::upa_1x8_default(),
                launch_area: Rect::new(f(200.0), f(200.0), f(400.0), f(400.0)),
                target_area: Rect::new(f(1150.0), f(1150.0), f(550.0), f(550.0)),
                uav_altitude_m: f(100.0),
                h_min_m: f(60.0),
                h_max_m: f(150.0),
            },
            // 3x3 open field, one central station.
            Preset::Smoke => GenConfig {
                width_m: f(120.0),
                height_m: f(120.0),
                cell_size_m: f(40.0),
                building_count: 0,
                building_w_range: (f(5.0), f(10.0)),
                building_d_range: (f(5.0), f(10.0)),
                building_h_range: (f(5.0), f(10.0)),
                num_bs: 1,
                bs_height_m: f(20.0),
                bs_tx_power_dbm: f(30.0),
                bs_downtilt_deg: f(0.0),
                antenna: AntennaPattern::isotropic(),
                launch_area: Rect::new(f(0.0), f(0.0), f(40.0), f(40.0)),
                target_area: Rect::new(f(40.0), f(40.0), f(80.0), f(80.0)),
                uav_altitude_m: f(60.0),
                h_min_m: f(30.0),
                h_max_m: f(120.0),
            },
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.width_m > F::zero() && self.height_m > F::zero() && self.cell_size_m > F::zero()) {
            return Err(Error::Config("generator dimensions must be positive".into()));
        }
        for (name, (lo, hi)) in [
            ("width", self.building_w_range),
            ("depth", self.building_d_range),
            ("height", self.building_h_range),
        ] {
            if !(lo > F::zero() && hi >= lo) {
                return Err(Error::Config(format!("invalid building {name} range")));
            }
        }
        let max_footprint =
            F::of(self.building_count as f64) * self.building_w_range.1 * self.building_d_range.1;
        if max_footprint > self.width_m * self.height_m {
            return Err(Error::Config(
                "infeasible building density: total footprint exceeds map area".into(),
            ));
        }
        Ok(())
    }
}

fn gen_range<F: Real>(rng: &mut ChaCha8Rng, lo: F, hi: F) -> F {
    if hi <= lo {
        return lo;
    }
    // Sample in f64 so the stream is identical across scalar types.
    let u: f64 = rng.gen();
    lo + F::of(u) * (hi - lo)
}

/// Deterministically synthesize an environment from `cfg` and `seed`.
pub fn generate_environment<F: Real>(cfg: &GenConfig<F>, seed: u64) -> Result<EnvironmentSpec<F>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut buildings = Vec::with_capacity(cfg.building_count);
    for _ in 0..cfg.building_count {
        let w = gen_range(&mut rng, cfg.building_w_range.0, cfg.building_w_range.1);
        let d = gen_range(&mut rng, cfg.building_d_range.0, cfg.building_d_range.1);
        let h = gen_range(&mut rng, cfg.building_h_range.0, cfg.building_h_range.1);
        let x = gen_range(&mut rng, F::zero(), cfg.width_m - w);
        let y = gen_range(&mut rng, F::zero(), cfg.height_m - d);
        buildings.push(Building { x, y, w, d, height_m: h });
    }

    // Stations on a jittered k x k grid, row-major, first `num_bs` points.
    let k = (cfg.num_bs as f64).sqrt().ceil().max(1.0) as usize;
    let mut base_stations = Vec::with_capacity(cfg.num_bs);
    for i in 0..cfg.num_bs {
        let gr = i / k;
        let gc = i % k;
        let fx = (gc as f64 + 0.5) / k as f64;
        let fy = (gr as f64 + 0.5) / k as f64;
        let jitter = F::of(0.25 / k as f64);
        let jx = gen_range(&mut rng, -jitter, jitter);
        let jy = gen_range(&mut rng, -jitter, jitter);
        let x = (F::of(fx) + jx) * cfg.width_m;
        let y = (F::of(fy) + jy) * cfg.height_m;
        // Face the map centre so sectors overlap usefully.
        let az = (cfg.height_m * F::of(0.5) - y)
            .atan2(cfg.width_m * F::of(0.5) - x)
            .to_degrees();
        base_stations.push(BaseStation {
            position: Point3::new(x, y, cfg.bs_height_m),
            tx_power_dbm: cfg.bs_tx_power_dbm,
            antenna: cfg.antenna,
            azimuth_deg: az,
            downtilt_deg: cfg.bs_downtilt_deg,
        });
    }

    let spec = EnvironmentSpec {
        width_m: cfg.width_m,
        height_m: cfg.height_m,
        cell_size_m: cfg.cell_size_m,
        buildings,
        base_stations,
        uav_altitude_m: cfg.uav_altitude_m,
        launch_area: cfg.launch_area,
        target_area: cfg.target_area,
        h_min_m: cfg.h_min_m,
        h_max_m: cfg.h_max_m,
    };
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinism_for_fixed_seed() {
        let cfg = GenConfig::<f64>::preset(Preset::Env1);
        let a = generate_environment(&cfg, 7).unwrap();
        let b = generate_environment(&cfg, 7).unwrap();
        assert_eq!(a, b);
        let c = generate_environment(&cfg, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_buildings_yields_open_field() {
        let mut cfg = GenConfig::<f64>::preset(Preset::Env1);
        cfg.building_count = 0;
        let env = generate_environment(&cfg, 1).unwrap();
        assert!(env.buildings.is_empty());
        assert_eq!(env.base_stations.len(), 4);
    }

    #[test]
    fn env1_preset_matches_simulation_extent() {
        let cfg = GenConfig::<f64>::preset(Preset::Env1);
        let env = generate_environment(&cfg, 7).unwrap();
        assert_eq!(env.width_m, 2000.0);
        assert_eq!(env.height_m, 2000.0);
        assert_eq!(env.grid_cols(), 50);
        assert_eq!(env.grid_rows(), 50);
        for b in &env.buildings {
            assert!(b.w > 0.0 && b.d > 0.0 && b.height_m > 0.0);
            assert!(b.x >= 0.0 && b.x + b.w <= 2000.0);
            assert!(b.y >= 0.0 && b.y + b.d <= 2000.0);
        }
        env.validate().unwrap();
    }

    #[test]
    fn env2_is_lower_and_denser_than_env1() {
        let e1 = GenConfig::<f64>::preset(Preset::Env1);
        let e2 = GenConfig::<f64>::preset(Preset::Env2);
        assert!(e2.building_count > e1.building_count);
        assert!(e2.building_h_range.1 < e1.building_h_range.1);
        assert_ne!(e2.num_bs, e1.num_bs);
    }

    #[test]
    fn infeasible_density_rejected() {
        let mut cfg = GenConfig::<f64>::preset(Preset::Env1);
        cfg.building_count = 10_000;
        assert!(matches!(generate_environment(&cfg, 1).unwrap_err(), Error::Config(_)));
    }
}
