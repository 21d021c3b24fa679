//! Privileged rule-based driver: IDM car following with a TTC brake override
//! and pure-pursuit steering along the route.

use serde::{Deserialize, Serialize};

use super::road::{Approach, Polyline, RoadMap, SignalState};
use super::{AgentState, EgoState};
use crate::eval::ObbFootprint;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeacherConfig {
    pub max_accel: f64,
    pub comfort_decel: f64,
    pub min_gap: f64,
    pub time_gap: f64,
    pub ttc_threshold: f64,
    pub hard_brake: f64,
    pub accel_limit: f64,
    pub max_steer: f64,
    pub wheelbase: f64,
    pub ego_length: f64,
    pub ego_width: f64,
    pub corridor_margin: f64,
    pub lateral_accel: f64,
    pub lookahead_gain: f64,
    pub lookahead_min: f64,
    pub lookahead_max: f64,
    pub prediction_horizon: f64,
    pub prediction_step: f64,
}

impl Default for TeacherConfig {
    fn default() -> Self {
        TeacherConfig {
            max_accel: 1.5,
            comfort_decel: 2.0,
            min_gap: 2.0,
            time_gap: 2.0,
            ttc_threshold: 1.5,
            hard_brake: 4.0,
            accel_limit: 4.0,
            max_steer: 0.6,
            wheelbase: 2.7,
            ego_length: 4.0,
            ego_width: 1.8,
            corridor_margin: 0.5,
            lateral_accel: 2.0,
            lookahead_gain: 0.5,
            lookahead_min: 4.0,
            lookahead_max: 12.0,
            prediction_horizon: 4.0,
            prediction_step: 0.25,
        }
    }
}

/// Everything the teacher may look at for one decision.
#[derive(Debug, Clone, Copy)]
pub struct WorldFrame<'a> {
    pub t: f64,
    pub agents: &'a [AgentState],
    pub map: &'a RoadMap,
    pub route: &'a Polyline,
    pub desired_speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Control {
    pub accel: f64,
    pub steer: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Teacher {
    pub config: TeacherConfig,
}

/// Teacher decision with the default configuration.
pub fn teacher_plan(world: &WorldFrame<'_>, ego: &EgoState) -> Control {
    Teacher::default().plan(world, ego)
}

/// Something the ego has to stay behind, expressed along the route.
#[derive(Debug, Clone, Copy)]
struct Obstacle {
    /// Bumper-to-bumper distance along the route.
    gap: f64,
    /// Obstacle speed along the route.
    speed: f64,
}

impl Teacher {
    pub fn new(config: TeacherConfig) -> Self {
        Teacher { config }
    }

    pub fn plan(&self, world: &WorldFrame<'_>, ego: &EgoState) -> Control {
        let accel = self.longitudinal(world, ego);
        let steer = self.lateral(world.route, ego);
        let c = &self.config;
        let accel = if accel.is_finite() { accel } else { -c.hard_brake };
        let steer = if steer.is_finite() { steer } else { 0.0 };
        Control {
            accel: accel.clamp(-c.accel_limit, c.accel_limit),
            steer: steer.clamp(-c.max_steer, c.max_steer),
        }
    }

    fn lateral(&self, route: &Polyline, ego: &EgoState) -> f64 {
        let c = &self.config;
        let pos = ego.pose.xy();
        let s = route.project(pos).s;
        let ld = (c.lookahead_min + c.lookahead_gain * ego.v).min(c.lookahead_max);
        let target = route.point_at(s + ld);
        let dx = target[0] - pos[0];
        let dy = target[1] - pos[1];
        let alpha = dy.atan2(dx) - ego.pose.yaw;
        let dist = dx.hypot(dy).max(1e-6);
        (2.0 * c.wheelbase * alpha.sin() / dist).atan()
    }

    /// Desired speed capped by upcoming route curvature.
    fn target_speed(&self, world: &WorldFrame<'_>, s_ego: f64, v: f64) -> f64 {
        let c = &self.config;
        let mut v0 = world.desired_speed;
        let reach = 15.0 + v * v / (2.0 * c.comfort_decel);
        let mut ds = 0.0;
        while ds <= reach {
            let k = world.route.curvature_at(s_ego + ds).abs();
            if k > 1e-3 {
                let vc = (c.lateral_accel / k).sqrt();
                v0 = v0.min((vc * vc + 2.0 * c.comfort_decel * ds).sqrt());
            }
            ds += 1.0;
        }
        v0.max(0.5)
    }

    fn idm(&self, v: f64, v0: f64, obstacle: Option<Obstacle>) -> f64 {
        let c = &self.config;
        let free = 1.0 - (v / v0).powi(4);
        match obstacle {
            None => c.max_accel * free,
            Some(o) => {
                let dv = v - o.speed;
                let s_star = c.min_gap
                    + (v * c.time_gap + v * dv / (2.0 * (c.max_accel * c.comfort_decel).sqrt())).max(0.0);
                let gap = o.gap.max(0.05);
                c.max_accel * (free - (s_star / gap).powi(2))
            }
        }
    }

    fn longitudinal(&self, world: &WorldFrame<'_>, ego: &EgoState) -> f64 {
        let c = &self.config;
        let v = ego.v;
        let s_ego = world.route.project(ego.pose.xy()).s;
        let s_front = s_ego + c.ego_length / 2.0;
        let v0 = self.target_speed(world, s_ego, v);

        let mut obstacles = Vec::new();
        for agent in world.agents {
            if let Some(o) = self.agent_obstacle(world.route, agent, s_front, v) {
                obstacles.push(o);
            }
        }
        for sig in &world.map.signals {
            if sig.approach != Approach::Ego {
                continue;
            }
            let state = sig.state_at(world.t);
            if state == SignalState::Green {
                continue;
            }
            let p = world.route.project(sig.stop_line);
            if p.distance > world.map.lane_width {
                continue;
            }
            let gap = p.s - s_front;
            if gap < -0.5 {
                continue;
            }
            // On amber, carry on if a firm stop is no longer possible.
            if state == SignalState::Yellow && gap < v * v / (2.0 * c.hard_brake) {
                continue;
            }
            obstacles.push(Obstacle { gap: gap.max(0.05), speed: 0.0 });
        }

        let mut accel = self.idm(v, v0, None);
        for o in &obstacles {
            accel = accel.min(self.idm(v, v0, Some(*o)));
            let closing = v - o.speed;
            if closing > 0.0 && o.gap / closing < c.ttc_threshold {
                accel = -c.hard_brake;
            }
        }
        accel
    }

    /// Footprint interval along the route and lateral extent at time `tau`
    /// under constant-velocity prediction.
    fn corridor_hit(&self, route: &Polyline, agent: &AgentState, tau: f64) -> Option<(f64, f64)> {
        let vel = agent.velocity();
        let fp = ObbFootprint::new(
            [agent.pose.x + vel[0] * tau, agent.pose.y + vel[1] * tau],
            agent.pose.yaw,
            agent.length,
            agent.width,
        );
        let half = self.config.ego_width / 2.0 + self.config.corridor_margin;
        let mut s_min = f64::INFINITY;
        let mut s_max = f64::NEG_INFINITY;
        let mut l_min = f64::INFINITY;
        let mut l_max = f64::NEG_INFINITY;
        for p in fp.corners() {
            let pr = route.project(p);
            s_min = s_min.min(pr.s);
            s_max = s_max.max(pr.s);
            l_min = l_min.min(pr.lateral);
            l_max = l_max.max(pr.lateral);
        }
        // Guard against corners projecting onto distant route pieces.
        if s_max - s_min > agent.length + agent.width + 2.0 {
            return None;
        }
        if l_max < -half || l_min > half {
            return None;
        }
        Some((s_min, s_max))
    }

    fn agent_obstacle(&self, route: &Polyline, agent: &AgentState, s_front: f64, v: f64) -> Option<Obstacle> {
        let c = &self.config;
        let s_rear = s_front - c.ego_length;
        let along = |s: f64| {
            let h = route.heading_at(s);
            agent.v * (agent.pose.yaw - h).cos()
        };
        if let Some((s_min, s_max)) = self.corridor_hit(route, agent, 0.0) {
            if s_max > s_front - 0.5 {
                let gap = s_min - s_front;
                return Some(Obstacle {
                    gap: gap.max(0.05),
                    speed: if s_min > s_rear + 0.5 { along(s_min) } else { 0.0 },
                });
            }
            return None;
        }
        if agent.v < 0.05 {
            return None;
        }
        // Predicted entrant: hold short of the entry point unless it clears
        // before the ego gets there.
        let steps = (c.prediction_horizon / c.prediction_step).round() as usize;
        // Closest station the agent sweeps through while inside the corridor.
        let mut s_entry: Option<f64> = None;
        let mut exit_tau = f64::INFINITY;
        for k in 1..=steps {
            let tau = k as f64 * c.prediction_step;
            let hit = self
                .corridor_hit(route, agent, tau)
                .filter(|&(_, s_max)| s_max > s_front - 0.5);
            match (s_entry, hit) {
                (_, Some((s_min, _))) => s_entry = Some(s_entry.map_or(s_min, |e: f64| e.min(s_min))),
                (Some(_), None) => {
                    exit_tau = tau;
                    break;
                }
                (None, None) => {}
            }
        }
        let s_entry = s_entry?;
        let gap = s_entry - s_front;
        // Earliest arrival if the ego accelerated flat out from here.
        let a = c.max_accel;
        let t_arrive = ((v * v + 2.0 * a * gap.max(0.0)).sqrt() - v) / a;
        if exit_tau < t_arrive - 0.5 {
            return None;
        }
        Some(Obstacle {
            gap: gap.max(0.05),
            speed: if gap > 0.0 { along(s_entry).max(0.0) } else { 0.0 },
        })
    }
}
