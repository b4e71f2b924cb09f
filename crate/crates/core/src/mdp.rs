//! Trajectory-planning environment on an outage map: user sampling, optimal
//! target selection, state encoding, one-cell step dynamics and the shaped
//! reward
//!
//! ```text
//! R = -p_outbound*[left grid] - w1 * d(next, target)/diag - w2 * outage(next)
//!     + p_reach*[within reach radius]
//! ```
//!
//! Movement is deterministic: one cell per step in one of four compass
//! directions, clamped (with penalty) at the boundary; an episode ends on
//! reaching the target or exhausting the step budget.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{Point2, Point3, Rect};
use crate::propagation::{los_path_loss, ChannelParams};
use crate::radiomap::OutageMap;
use crate::scalar::Real;

/// The four horizontal moves, mapped to `+y, -y, -x, +x` cell steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    Forward,
    Backward,
    Left,
    Right,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Forward, Action::Backward, Action::Left, Action::Right];
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        match self {
            Action::Forward => 0,
            Action::Backward => 1,
            Action::Left => 2,
            Action::Right => 3,
        }
    }

    pub fn from_index(i: usize) -> Action {
        Action::ALL[i]
    }

    fn delta(self) -> (i64, i64) {
        match self {
            Action::Forward => (1, 0),
            Action::Backward => (-1, 0),
            Action::Left => (0, -1),
            Action::Right => (0, 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Reached,
    BudgetExhausted,
}

/// One recorded environment interaction, as staged into the replay buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition<F> {
    pub state: Vec<F>,
    pub action: Action,
    pub reward: F,
    pub next_state: Vec<F>,
    pub done: bool,
}

/// Mission parameters over one outage map. `w1`/`w2` weight the per-step
/// reward; `objective_w1`/`objective_w2` weight the whole-trajectory
/// objective `w1*S + w2*Gamma` (the two pairs are configured independently).
#[derive(Debug, Clone, PartialEq)]
pub struct MissionSpec<F> {
    pub outage_map: OutageMap<F>,
    pub launch_area: Rect<F>,
    pub target_area: Rect<F>,
    pub users: Vec<Point2<F>>,
    pub target: Point2<F>,
    pub s_max: u32,
    pub v_max_mps: F,
    pub dt_s: F,
    pub w1: F,
    pub w2: F,
    pub objective_w1: F,
    pub objective_w2: F,
    pub p_outbound: F,
    pub p_reach: F,
    pub reach_radius_m: F,
    pub outage_event_threshold: F,
    /// Side of the square local outage patch in the state encoding (odd).
    pub patch_k: usize,
}

impl<F: Real> MissionSpec<F> {
    pub fn validate(&self) -> Result<()> {
        if self.s_max < 1 {
            return Err(Error::Config("s_max must be at least 1".into()));
        }
        if self.v_max_mps * self.dt_s < self.outage_map.cell_size_m {
            return Err(Error::Config("v_max * dt must cover one cell per step".into()));
        }
        if self.patch_k == 0 || self.patch_k % 2 == 0 {
            return Err(Error::Config("patch_k must be odd and positive".into()));
        }
        if !(self.reach_radius_m > F::zero()) {
            return Err(Error::Config("reach radius must be positive".into()));
        }
        for u in &self.users {
            if !self.target_area.contains(u) {
                return Err(Error::Config("all users must lie inside the target area".into()));
            }
        }
        self.outage_map
            .cell_at(&self.target)
            .map_err(|_| Error::Config("target lies outside the map extent".into()))?;
        Ok(())
    }

    pub fn feature_len(&self) -> usize {
        4 + self.patch_k * self.patch_k
    }

    fn diagonal_m(&self) -> F {
        let w = self.outage_map.width_m();
        let h = self.outage_map.height_m();
        (w * w + h * h).sqrt()
    }
}

/// Mutable episode state: cell index, budget usage and termination status.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeState<F> {
    pub row: usize,
    pub col: usize,
    pub step_count: u32,
    pub cumulative_reward: F,
    pub done: bool,
    pub termination: Option<Termination>,
}

impl<F: Real> EpisodeState<F> {
    pub fn position_m(&self, ms: &MissionSpec<F>) -> Point2<F> {
        ms.outage_map.cell_center(self.row, self.col)
    }
}

/// Draw `m` i.i.d. uniform user positions inside `area`.
pub fn sample_users<F: Real>(area: &Rect<F>, m: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Point2<F>>> {
    if m < 1 {
        return Err(Error::Usage("must sample at least one user".into()));
    }
    if !(area.w > F::zero() && area.h > F::zero()) {
        return Err(Error::Config("target area must have positive extent".into()));
    }
    let mut users = Vec::with_capacity(m);
    for _ in 0..m {
        let ux: f64 = rng.gen();
        let uy: f64 = rng.gen();
        users.push(Point2::new(area.x + F::of(ux) * area.w, area.y + F::of(uy) * area.h));
    }
    Ok(users)
}

/// UAV-to-ground link parameters used by target selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserLink<F> {
    pub tx_power_dbm: F,
    pub gamma_user_db: F,
}

/// Pick the candidate cell (centre inside `target_area`) maximizing the
/// number of users whose downlink SINR clears `gamma_user_db`. The link is
/// the line-of-sight power law from UAV altitude to ground, noise-limited.
/// Ties break by smaller mean horizontal distance to the users, then by
/// lower `(row, col)` index.
pub fn select_target<F: Real>(
    users: &[Point2<F>],
    map: &OutageMap<F>,
    target_area: &Rect<F>,
    uav_altitude_m: F,
    ch: &ChannelParams<F>,
    link: &UserLink<F>,
) -> Result<Point2<F>> {
    if users.is_empty() {
        return Err(Error::Usage("target selection requires at least one user".into()));
    }
    let mut best: Option<(usize, F, Point2<F>)> = None;
    for row in 0..map.rows {
        for col in 0..map.cols {
            let center = map.cell_center(row, col);
            if !target_area.contains(&center) {
                continue;
            }
            let mut count = 0usize;
            let mut dist_sum = F::zero();
            for u in users {
                let ground = center.distance(u);
                let d3 = Point3::new(center.x, center.y, uav_altitude_m)
                    .distance(&Point3::new(u.x, u.y, F::zero()));
                let snr_db = link.tx_power_dbm + F::of(10.0) * los_path_loss(d3, ch)?.log10() - ch.noise_dbm;
                if snr_db >= link.gamma_user_db {
                    count += 1;
                }
                dist_sum = dist_sum + ground;
            }
            let mean_dist = dist_sum / F::of(users.len() as f64);
            let better = match &best {
                None => true,
                Some((bc, bd, _)) => count > *bc || (count == *bc && mean_dist < *bd),
            };
            if better {
                best = Some((count, mean_dist, center));
            }
        }
    }
    best.map(|(_, _, p)| p)
        .ok_or_else(|| Error::Config("no candidate cell lies inside the target area".into()))
}

/// Start an episode at a uniform random launch position.
pub fn reset<F: Real>(ms: &MissionSpec<F>, rng: &mut ChaCha8Rng) -> Result<EpisodeState<F>> {
    let p = sample_users(&ms.launch_area, 1, rng).map_err(|_| {
        Error::Config("launch area must have positive extent".into())
    })?[0];
    let (row, col) = ms
        .outage_map
        .cell_at(&p)
        .map_err(|_| Error::Config("launch area lies outside the map extent".into()))?;
    Ok(EpisodeState {
        row,
        col,
        step_count: 0,
        cumulative_reward: F::zero(),
        done: false,
        termination: None,
    })
}

/// Resolved effect of one action before scoring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionOutcome {
    pub outbound: bool,
    pub next_row: usize,
    pub next_col: usize,
}

/// The four independent reward terms; `total` is their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardTerms<F> {
    pub outbound: F,
    pub distance: F,
    pub outage: F,
    pub reach: F,
}

impl<F: Real> RewardTerms<F> {
    pub fn total(&self) -> F {
        self.outbound + self.distance + self.outage + self.reach
    }
}

fn resolve_action<F: Real>(ms: &MissionSpec<F>, row: usize, col: usize, a: Action) -> ActionOutcome {
    let (dr, dc) = a.delta();
    let nr = row as i64 + dr;
    let nc = col as i64 + dc;
    let outbound = nr < 0 || nc < 0 || nr >= ms.outage_map.rows as i64 || nc >= ms.outage_map.cols as i64;
    if outbound {
        ActionOutcome { outbound, next_row: row, next_col: col }
    } else {
        ActionOutcome { outbound, next_row: nr as usize, next_col: nc as usize }
    }
}

/// Per-term reward for an already-resolved action.
pub fn reward_terms<F: Real>(ms: &MissionSpec<F>, outcome: &ActionOutcome) -> RewardTerms<F> {
    let next = ms.outage_map.cell_center(outcome.next_row, outcome.next_col);
    let d = next.distance(&ms.target);
    let phi = ms.outage_map.value(outcome.next_row, outcome.next_col);
    RewardTerms {
        outbound: if outcome.outbound { -ms.p_outbound } else { F::zero() },
        distance: -ms.w1 * (d / ms.diagonal_m()),
        outage: -ms.w2 * phi,
        reach: if d <= ms.reach_radius_m { ms.p_reach } else { F::zero() },
    }
}

/// Total shaped reward for an already-resolved action.
pub fn compute_reward<F: Real>(ms: &MissionSpec<F>, outcome: &ActionOutcome) -> F {
    reward_terms(ms, outcome).total()
}

/// Advance one step. Returns the step reward and whether the episode ended.
pub fn step<F: Real>(ms: &MissionSpec<F>, es: &mut EpisodeState<F>, a: Action) -> Result<(F, bool)> {
    if es.done {
        return Err(Error::Usage("cannot step a finished episode".into()));
    }
    let outcome = resolve_action(ms, es.row, es.col, a);
    let reward = compute_reward(ms, &outcome);
    es.row = outcome.next_row;
    es.col = outcome.next_col;
    es.step_count += 1;
    es.cumulative_reward = es.cumulative_reward + reward;

    let next = ms.outage_map.cell_center(es.row, es.col);
    let reached = next.distance(&ms.target) <= ms.reach_radius_m;
    if reached {
        es.done = true;
        es.termination = Some(Termination::Reached);
    } else if es.step_count >= ms.s_max {
        es.done = true;
        es.termination = Some(Termination::BudgetExhausted);
    }
    Ok((reward, es.done))
}

/// Normalized feature vector: `[x/W, y/H, xt/W, yt/H]` (cell corner and
/// target, map-relative) followed by the row-major `k x k` local outage
/// patch centred on the UAV; cells beyond the edge pad with 1.0.
pub fn encode_state<F: Real>(es: &EpisodeState<F>, ms: &MissionSpec<F>) -> Vec<F> {
    let map = &ms.outage_map;
    let w = map.width_m();
    let h = map.height_m();
    let mut f = Vec::with_capacity(ms.feature_len());
    f.push(F::of(es.col as f64) * map.cell_size_m / w);
    f.push(F::of(es.row as f64) * map.cell_size_m / h);
    f.push((ms.target.x - map.origin.x) / w);
    f.push((ms.target.y - map.origin.y) / h);
    let half = (ms.patch_k / 2) as i64;
    for dr in -half..=half {
        for dc in -half..=half {
            let r = es.row as i64 + dr;
            let c = es.col as i64 + dc;
            if r < 0 || c < 0 || r >= map.rows as i64 || c >= map.cols as i64 {
                f.push(F::one());
            } else {
                f.push(map.value(r as usize, c as usize));
            }
        }
    }
    f
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryEval<F> {
    /// Number of moves (positions minus one).
    pub steps: usize,
    /// Positions whose outage exceeds the event threshold.
    pub outage_events: usize,
    pub objective: F,
}

/// Score a recorded trajectory: step count, outage events and the weighted
/// objective. Consecutive positions must respect the one-cell speed limit.
pub fn evaluate_trajectory<F: Real>(traj: &[Point2<F>], ms: &MissionSpec<F>) -> Result<TrajectoryEval<F>> {
    if traj.is_empty() {
        return Err(Error::Validation("trajectory must contain at least one position".into()));
    }
    let cell = ms.outage_map.cell_size_m;
    let tol = cell * F::of(1.0 + 1e-9);
    let mut outage_events = 0usize;
    for (i, p) in traj.iter().enumerate() {
        let v = ms
            .outage_map
            .value_at(p)
            .map_err(|_| Error::Validation(format!("position {i} lies outside the map extent")))?;
        if v > ms.outage_event_threshold {
            outage_events += 1;
        }
        if i > 0 {
            let d = traj[i - 1].distance(p);
            if d > tol {
                return Err(Error::Validation(format!(
                    "positions {} and {i} are {d} m apart, exceeding one cell per step",
                    i - 1
                )));
            }
        }
    }
    let steps = traj.len() - 1;
    let objective = ms.objective_w1 * F::of(steps as f64) + ms.objective_w2 * F::of(outage_events as f64);
    Ok(TrajectoryEval { steps, outage_events, objective })
}

/// One row of the trajectory export (`step,x_m,y_m,reward,outage`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint<F> {
    pub step: u32,
    pub pos: Point2<F>,
    pub reward: F,
    pub outage: F,
}

pub fn trajectory_csv<F: Real>(points: &[TrajectoryPoint<F>]) -> String {
    let mut out = String::from("step,x_m,y_m,reward,outage\n");
    for p in points {
        out.push_str(&format!("{},{},{},{},{}\n", p.step, p.pos.x, p.pos.y, p.reward, p.outage));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn flat_map(cols: usize, rows: usize, cell: f64, value: f64) -> OutageMap<f64> {
        OutageMap::new(cols, rows, cell, Point2::new(0.0, 0.0), vec![value; cols * rows]).unwrap()
    }

    fn mission(map: OutageMap<f64>, target: Point2<f64>, s_max: u32) -> MissionSpec<f64> {
        let w = map.width_m();
        let h = map.height_m();
        MissionSpec {
            outage_map: map,
            launch_area: Rect::new(0.0, 0.0, w, h),
            target_area: Rect::new(0.0, 0.0, w, h),
            users: vec![],
            target,
            s_max,
            v_max_mps: 40.0,
            dt_s: 1.0,
            w1: 1.0,
            w2: 2.0,
            objective_w1: 1.0,
            objective_w2: 2.0,
            p_outbound: 1.0,
            p_reach: 100.0,
            reach_radius_m: 1.0,
            outage_event_threshold: 0.5,
            patch_k: 5,
        }
    }

    #[test]
    fn sample_users_containment_and_determinism() {
        let area = Rect::new(0.0, 0.0, 1.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let users = sample_users::<f64>(&area, 40, &mut rng).unwrap();
        assert_eq!(users.len(), 40);
        for u in &users {
            assert!(area.contains(u));
        }
        let mut rng2 = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(sample_users::<f64>(&area, 40, &mut rng2).unwrap(), users);
    }

    #[test]
    fn sample_users_mean_approaches_centroid() {
        let area = Rect::new(2.0, -1.0, 4.0, 6.0);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let users = sample_users::<f64>(&area, 100_000, &mut rng).unwrap();
        let n = users.len() as f64;
        let mx: f64 = users.iter().map(|u| u.x).sum::<f64>() / n;
        let my: f64 = users.iter().map(|u| u.y).sum::<f64>() / n;
        // Within 1% of the respective extents of the true centroid (4, 2).
        assert!((mx - 4.0).abs() < 0.04, "mx={mx}");
        assert!((my - 2.0).abs() < 0.06, "my={my}");
    }

    #[test]
    fn sample_users_rejects_degenerate_area() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            sample_users::<f64>(&Rect::new(0.0, 0.0, 0.0, 1.0), 5, &mut rng).unwrap_err(),
            Error::Config(_)
        ));
        assert!(matches!(
            sample_users::<f64>(&Rect::new(0.0, 0.0, 1.0, 1.0), 0, &mut rng).unwrap_err(),
            Error::Usage(_)
        ));
    }

    fn default_link() -> (ChannelParams<f64>, UserLink<f64>) {
        (
            ChannelParams::urban_default(),
            UserLink { tx_power_dbm: 30.0, gamma_user_db: -1000.0 },
        )
    }

    #[test]
    fn select_target_single_user_takes_nearest_cell() {
        let map = flat_map(10, 10, 10.0, 0.0);
        let area = Rect::new(0.0, 0.0, 100.0, 100.0);
        let (ch, link) = default_link();
        let user = Point2::new(72.0, 33.0);
        let p = select_target(&[user], &map, &area, 50.0, &ch, &link).unwrap();
        // All candidates serve the user; the mean-distance tiebreak picks
        // the cell containing it.
        assert_eq!(p, Point2::new(75.0, 35.0));
    }

    #[test]
    fn select_target_prefers_larger_cluster() {
        let map = flat_map(20, 20, 10.0, 0.0);
        let area = Rect::new(0.0, 0.0, 200.0, 200.0);
        let ch = ChannelParams::urban_default();
        // SNR(d) = 94 - 22*log10(d) dB with these defaults; 50 dB needs
        // d <= 100 m, so at 50 m altitude the coverage circle has radius
        // ~86.6 m, far less than the ~198 m cluster separation.
        let link = UserLink { tx_power_dbm: 30.0, gamma_user_db: 50.0 };
        let mut users = Vec::new();
        for i in 0..30 {
            users.push(Point2::new(30.0 + (i % 5) as f64, 30.0 + (i / 5) as f64));
        }
        for i in 0..10 {
            users.push(Point2::new(170.0 + (i % 3) as f64, 170.0 + (i / 3) as f64));
        }
        let p = select_target(&users, &map, &area, 50.0, &ch, &link).unwrap();
        assert!(p.distance(&Point2::new(30.0, 30.0)) < 60.0, "picked {p:?}");
    }

    #[test]
    fn select_target_tie_breaks_to_lower_index() {
        let map = flat_map(2, 2, 1.0, 0.0);
        let area = Rect::new(0.0, 0.0, 2.0, 2.0);
        let (ch, link) = default_link();
        // A single user at the exact map centre is equidistant from all four
        // cell centres: counts tie, mean distances tie, lower (row, col)
        // wins.
        let p = select_target(&[Point2::new(1.0, 1.0)], &map, &area, 50.0, &ch, &link).unwrap();
        assert_eq!(p, Point2::new(0.5, 0.5));
    }

    #[test]
    fn select_target_permutation_invariant() {
        let map = flat_map(8, 8, 10.0, 0.0);
        let area = Rect::new(0.0, 0.0, 80.0, 80.0);
        let (ch, link) = default_link();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let users = sample_users::<f64>(&area, 15, &mut rng).unwrap();
        let p1 = select_target(&users, &map, &area, 50.0, &ch, &link).unwrap();
        let mut reversed: Vec<_> = users.clone();
        reversed.reverse();
        let p2 = select_target(&reversed, &map, &area, 50.0, &ch, &link).unwrap();
        assert_eq!(p1, p2);
    }

    #[test]
    fn select_target_empty_candidates_is_config_error() {
        let map = flat_map(4, 4, 1.0, 0.0);
        // Area too small to contain any cell centre.
        let area = Rect::new(0.9, 0.9, 0.05, 0.05);
        let (ch, link) = default_link();
        assert!(matches!(
            select_target(&[Point2::new(1.0, 1.0)], &map, &area, 50.0, &ch, &link).unwrap_err(),
            Error::Config(_)
        ));
    }

    #[test]
    fn encode_state_origin_and_padding() {
        let map = flat_map(10, 10, 1.0, 0.0);
        let mut ms = mission(map, Point2::new(0.0, 0.0), 10);
        ms.patch_k = 5;
        let es = EpisodeState { row: 0, col: 0, step_count: 0, cumulative_reward: 0.0, done: false, termination: None };
        let f = encode_state(&es, &ms);
        assert_eq!(f.len(), 29);
        assert_eq!(&f[0..4], &[0.0, 0.0, 0.0, 0.0]);
        // Patch rows/cols below index 0 pad with 1.0; in-map cells are 0.
        for (i, &v) in f[4..].iter().enumerate() {
            let dr = (i / 5) as i64 - 2;
            let dc = (i % 5) as i64 - 2;
            if dr < 0 || dc < 0 {
                assert_eq!(v, 1.0, "patch offset ({dr},{dc})");
            } else {
                assert_eq!(v, 0.0, "patch offset ({dr},{dc})");
            }
        }
        for &v in &f {
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn encode_state_matches_index_arithmetic() {
        let values: Vec<f64> = (0..100).map(|i| (i as f64) / 100.0).collect();
        let map = OutageMap::new(10, 10, 2.0, Point2::new(0.0, 0.0), values.clone()).unwrap();
        let mut ms = mission(map, Point2::new(7.0, 13.0), 10);
        ms.patch_k = 3;
        let es = EpisodeState { row: 4, col: 6, step_count: 0, cumulative_reward: 0.0, done: false, termination: None };
        let f = encode_state(&es, &ms);
        assert_eq!(f[0], 6.0 * 2.0 / 20.0);
        assert_eq!(f[1], 4.0 * 2.0 / 20.0);
        assert_eq!(f[2], 7.0 / 20.0);
        assert_eq!(f[3], 13.0 / 20.0);
        let mut k = 4;
        for dr in -1i64..=1 {
            for dc in -1i64..=1 {
                assert_eq!(f[k], values[((4 + dr) * 10 + 6 + dc) as usize]);
                k += 1;
            }
        }
    }

    #[test]
    fn reward_all_penalties_zero_at_target() {
        let map = flat_map(5, 5, 1.0, 0.0);
        let ms = mission(map, Point2::new(4.5, 4.5), 10);
        let outcome = ActionOutcome { outbound: false, next_row: 4, next_col: 4 };
        assert_eq!(compute_reward(&ms, &outcome), 100.0);
    }

    #[test]
    fn reward_outbound_move_includes_penalty_and_stays() {
        let map = flat_map(5, 5, 1.0, 0.0);
        let ms = mission(map, Point2::new(4.5, 4.5), 10);
        let mut es = EpisodeState { row: 0, col: 0, step_count: 0, cumulative_reward: 0.0, done: false, termination: None };
        let (r, done) = step(&ms, &mut es, Action::Backward).unwrap();
        assert!(!done);
        assert_eq!((es.row, es.col), (0, 0));
        let expected = -1.0 - 1.0 * (32f64.sqrt() / 50f64.sqrt());
        assert_eq!(r, expected);
    }

    #[test]
    fn reward_mid_map_formula_evaluation() {
        // phi = 0.4, normalized distance 0.25, w1 = 1, w2 = 2, penalties off
        // => -0.25 - 0.8 = -1.05.
        let map = flat_map(8, 6, 10.0, 0.4);
        let mut ms = mission(map, Point2::new(0.0, 0.0), 10);
        ms.p_outbound = 0.0;
        ms.p_reach = 0.0;
        let diag = ms.diagonal_m();
        // Pick a synthetic target at exactly a quarter-diagonal from the
        // next cell's centre.
        let next = ms.outage_map.cell_center(2, 3);
        ms.target = Point2::new(next.x + diag * 0.25, next.y);
        let outcome = ActionOutcome { outbound: false, next_row: 2, next_col: 3 };
        let r = compute_reward(&ms, &outcome);
        assert!((r - (-1.05)).abs() < 1e-12, "r={r}");
    }

    #[test]
    fn reward_decomposes_into_terms() {
        let values: Vec<f64> = (0..25).map(|i| (i as f64) / 25.0).collect();
        let map = OutageMap::new(5, 5, 1.0, Point2::new(0.0, 0.0), values).unwrap();
        let ms = mission(map, Point2::new(2.5, 2.5), 10);
        for row in 0..5 {
            for col in 0..5 {
                for outbound in [false, true] {
                    let o = ActionOutcome { outbound, next_row: row, next_col: col };
                    let t = reward_terms(&ms, &o);
                    assert_eq!(compute_reward(&ms, &o), t.outbound + t.distance + t.outage + t.reach);
                }
            }
        }
    }

    #[test]
    fn step_budget_exhaustion() {
        let map = flat_map(5, 5, 1.0, 0.0);
        let ms = mission(map, Point2::new(4.5, 4.5), 1);
        let mut es = EpisodeState { row: 0, col: 0, step_count: 0, cumulative_reward: 0.0, done: false, termination: None };
        let (_, done) = step(&ms, &mut es, Action::Right).unwrap();
        assert!(done);
        assert_eq!(es.termination, Some(Termination::BudgetExhausted));
        assert!(matches!(step(&ms, &mut es, Action::Right).unwrap_err(), Error::Usage(_)));
    }

    #[test]
    fn step_reach_adjacent_cell() {
        let map = flat_map(5, 5, 1.0, 0.0);
        let ms = mission(map, Point2::new(4.5, 4.5), 10);
        let mut es = EpisodeState { row: 4, col: 3, step_count: 0, cumulative_reward: 0.0, done: false, termination: None };
        let (r, done) = step(&ms, &mut es, Action::Right).unwrap();
        assert!(done);
        assert_eq!(es.termination, Some(Termination::Reached));
        assert_eq!(r, 100.0);
    }

    #[test]
    fn step_full_trace_hand_simulation() {
        // 5x5 map, cell 1 m, outage(r,c) = (5r + c)/100, target at the
        // centre of cell (4,4), diag = sqrt(50). Hand-simulated trace from
        // cell (0,0): Backward (clamped), Right, Forward.
        let values: Vec<f64> = (0..25).map(|i| (i as f64) / 100.0).collect();
        let map = OutageMap::new(5, 5, 1.0, Point2::new(0.0, 0.0), values).unwrap();
        let ms = mission(map, Point2::new(4.5, 4.5), 3);
        let diag = 50f64.sqrt();
        let mut es = EpisodeState { row: 0, col: 0, step_count: 0, cumulative_reward: 0.0, done: false, termination: None };

        // Backward leaves the grid: stay at (0,0), centre (0.5, 0.5),
        // d = sqrt(32), phi = 0.00.
        let (r1, d1) = step(&ms, &mut es, Action::Backward).unwrap();
        assert_eq!((es.row, es.col), (0, 0));
        assert_eq!(r1, -1.0 - (32f64.sqrt() / diag) - 2.0 * 0.00);
        assert!(!d1);

        // Right to (0,1), centre (1.5, 0.5), d = sqrt(9 + 16) = 5, phi = 0.01.
        let (r2, d2) = step(&ms, &mut es, Action::Right).unwrap();
        assert_eq!((es.row, es.col), (0, 1));
        assert_eq!(r2, -(25f64.sqrt() / diag) - 2.0 * 0.01);
        assert!(!d2);

        // Forward to (1,1), centre (1.5, 1.5), d = sqrt(18), phi = 0.06;
        // the budget of 3 is now spent.
        let (r3, d3) = step(&ms, &mut es, Action::Forward).unwrap();
        assert_eq!((es.row, es.col), (1, 1));
        assert_eq!(r3, -(18f64.sqrt() / diag) - 2.0 * 0.06);
        assert!(d3);
        assert_eq!(es.termination, Some(Termination::BudgetExhausted));
        assert_eq!(es.cumulative_reward, r1 + r2 + r3);
    }

    #[test]
    fn trajectory_straight_line_and_outage_count() {
        let map = flat_map(12, 2, 1.0, 0.0);
        let ms = mission(map, Point2::new(11.5, 0.5), 20);
        // 11 positions = 10 moves through zero-outage cells.
        let traj: Vec<Point2<f64>> = (0..11).map(|c| Point2::new(c as f64 + 0.5, 0.5)).collect();
        let eval = evaluate_trajectory(&traj, &ms).unwrap();
        assert_eq!(eval.steps, 10);
        assert_eq!(eval.outage_events, 0);
        assert_eq!(eval.objective, 10.0 * ms.objective_w1);

        // Same path over a map with three hot cells above the threshold.
        let mut values = vec![0.0; 24];
        values[2] = 0.9;
        values[5] = 0.7;
        values[9] = 0.6;
        let hot = OutageMap::new(12, 2, 1.0, Point2::new(0.0, 0.0), values).unwrap();
        let ms_hot = mission(hot, Point2::new(11.5, 0.5), 20);
        let eval = evaluate_trajectory(&traj, &ms_hot).unwrap();
        assert_eq!(eval.outage_events, 3);
        assert_eq!(eval.objective, 10.0 + 2.0 * 3.0);
    }

    #[test]
    fn trajectory_eval_matches_per_position_recount() {
        let values: Vec<f64> = (0..144).map(|i| ((i * 29) % 144) as f64 / 144.0).collect();
        let map = OutageMap::new(12, 12, 1.0, Point2::new(0.0, 0.0), values).unwrap();
        let ms = mission(map, Point2::new(11.5, 11.5), 100);
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        for _ in 0..20 {
            // Random valid walk over cell centres.
            let (mut r, mut c) = (rng.gen_range(0..12i64), rng.gen_range(0..12i64));
            let mut traj = vec![ms.outage_map.cell_center(r as usize, c as usize)];
            for _ in 0..rng.gen_range(1..40) {
                let (dr, dc) = Action::from_index(rng.gen_range(0..4)).delta();
                if (0..12).contains(&(r + dr)) && (0..12).contains(&(c + dc)) {
                    r += dr;
                    c += dc;
                }
                traj.push(ms.outage_map.cell_center(r as usize, c as usize));
            }
            let eval = evaluate_trajectory(&traj, &ms).unwrap();
            // Independent recount.
            let mut events = 0usize;
            for p in &traj {
                if ms.outage_map.value_at(p).unwrap() > ms.outage_event_threshold {
                    events += 1;
                }
            }
            assert_eq!(eval.steps, traj.len() - 1);
            assert_eq!(eval.outage_events, events);
            assert_eq!(
                eval.objective,
                ms.objective_w1 * (traj.len() - 1) as f64 + ms.objective_w2 * events as f64
            );
        }
    }

    #[test]
    fn trajectory_rejects_jumps() {
        let map = flat_map(5, 5, 1.0, 0.0);
        let ms = mission(map, Point2::new(4.5, 4.5), 20);
        let traj = vec![Point2::new(0.5, 0.5), Point2::new(2.5, 0.5)];
        assert!(matches!(evaluate_trajectory(&traj, &ms).unwrap_err(), Error::Validation(_)));
        // Diagonal single-cell moves exceed the one-cell magnitude bound.
        let diag = vec![Point2::new(0.5, 0.5), Point2::new(1.5, 1.5)];
        assert!(matches!(evaluate_trajectory(&diag, &ms).unwrap_err(), Error::Validation(_)));
        // Staying in place (clamped move) satisfies the speed bound.
        let stay = vec![Point2::new(0.5, 0.5), Point2::new(0.5, 0.5)];
        assert!(evaluate_trajectory(&stay, &ms).is_ok());
    }

    #[test]
    fn episodes_respect_constraints_under_random_policy() {
        let values: Vec<f64> = (0..100).map(|i| ((i * 7) % 100) as f64 / 100.0).collect();
        let map = OutageMap::new(10, 10, 1.0, Point2::new(0.0, 0.0), values).unwrap();
        let mut ms = mission(map, Point2::new(9.5, 9.5), 30);
        ms.launch_area = Rect::new(0.0, 0.0, 3.0, 3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let mut es = reset(&ms, &mut rng).unwrap();
            let start = es.position_m(&ms);
            assert!(ms.launch_area.contains(&start));
            let mut prev = start;
            while !es.done {
                let a = Action::from_index(rng.gen_range(0..4));
                let (dr, dc) = a.delta();
                let attempted_outbound = {
                    let nr = es.row as i64 + dr;
                    let nc = es.col as i64 + dc;
                    nr < 0 || nc < 0 || nr >= 10 || nc >= 10
                };
                step(&ms, &mut es, a).unwrap();
                let pos = es.position_m(&ms);
                let d = prev.distance(&pos);
                if attempted_outbound {
                    assert_eq!(d, 0.0);
                } else {
                    assert_eq!(d, 1.0);
                }
                prev = pos;
            }
            assert!(es.step_count <= ms.s_max);
            if es.termination == Some(Termination::Reached) {
                assert!(es.position_m(&ms).distance(&ms.target) <= ms.reach_radius_m);
            }
        }
    }

    #[test]
    fn seeded_episode_traces_are_identical() {
        let values: Vec<f64> = (0..64).map(|i| ((i * 13) % 64) as f64 / 64.0).collect();
        let map = OutageMap::new(8, 8, 1.0, Point2::new(0.0, 0.0), values).unwrap();
        let mut ms = mission(map, Point2::new(7.5, 7.5), 25);
        ms.launch_area = Rect::new(0.0, 0.0, 2.0, 2.0);
        let run = |seed: u64| -> Vec<(usize, usize, f64)> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut out = Vec::new();
            for _ in 0..5 {
                let mut es = reset(&ms, &mut rng).unwrap();
                while !es.done {
                    let a = Action::from_index(rng.gen_range(0..4));
                    let (r, _) = step(&ms, &mut es, a).unwrap();
                    out.push((es.row, es.col, r));
                }
            }
            out
        };
        assert_eq!(run(42), run(42));
        assert_ne!(run(42), run(43));
    }

    #[test]
    fn trajectory_csv_shape() {
        let pts = vec![
            TrajectoryPoint { step: 0, pos: Point2::new(0.5, 0.5), reward: 0.0, outage: 0.25 },
            TrajectoryPoint { step: 1, pos: Point2::new(1.5, 0.5), reward: -0.5, outage: 0.5 },
        ];
        let csv = trajectory_csv(&pts);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "step,x_m,y_m,reward,outage");
        assert_eq!(lines[1], "0,0.5,0.5,0,0.25");
        assert_eq!(lines.len(), 3);
    }
}
