//! Scenario registry and per-category script generators.
//!
//! Every generator is a pure function of `(category, seed)`. Geometry uses a
//! right-handed world with the ego lane on the X axis heading east, the
//! opposing lane one lane width to the north and, where present, a second
//! eastbound lane to the south.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::road::{turn_route, Approach, Polyline, RoadMap, SignalPhase, SignalState, TrafficSignal};
use super::{AgentKind, EnvCondition, SimError, TimeOfDay, Weather};

/// Scenario families. The first two are routine pseudo-categories, the
/// remaining thirteen are long-tail scripts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScenarioCategory {
    E2dCommon,
    H2dEnvironmental,
    TemporaryParkingAhead,
    RoadworkAhead,
    JaywalkingPedestrians,
    LaneInvasion,
    OpposingLaneEncroachment,
    ParkedVehicleActivation,
    RedLightRunner,
    SuddenCutIn,
    NearCollision,
    SuddenLeadBraking,
    OccludedCrossing,
    AbruptPedestrianOnTurn,
    UnprotectedLeftTurn,
}

const ALL_CATEGORIES: [ScenarioCategory; 15] = [
    ScenarioCategory::E2dCommon,
    ScenarioCategory::H2dEnvironmental,
    ScenarioCategory::TemporaryParkingAhead,
    ScenarioCategory::RoadworkAhead,
    ScenarioCategory::JaywalkingPedestrians,
    ScenarioCategory::LaneInvasion,
    ScenarioCategory::OpposingLaneEncroachment,
    ScenarioCategory::ParkedVehicleActivation,
    ScenarioCategory::RedLightRunner,
    ScenarioCategory::SuddenCutIn,
    ScenarioCategory::NearCollision,
    ScenarioCategory::SuddenLeadBraking,
    ScenarioCategory::OccludedCrossing,
    ScenarioCategory::AbruptPedestrianOnTurn,
    ScenarioCategory::UnprotectedLeftTurn,
];

impl ScenarioCategory {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioCategory::E2dCommon => "E2dCommon",
            ScenarioCategory::H2dEnvironmental => "H2dEnvironmental",
            ScenarioCategory::TemporaryParkingAhead => "TemporaryParkingAhead",
            ScenarioCategory::RoadworkAhead => "RoadworkAhead",
            ScenarioCategory::JaywalkingPedestrians => "JaywalkingPedestrians",
            ScenarioCategory::LaneInvasion => "LaneInvasion",
            ScenarioCategory::OpposingLaneEncroachment => "OpposingLaneEncroachment",
            ScenarioCategory::ParkedVehicleActivation => "ParkedVehicleActivation",
            ScenarioCategory::RedLightRunner => "RedLightRunner",
            ScenarioCategory::SuddenCutIn => "SuddenCutIn",
            ScenarioCategory::NearCollision => "NearCollision",
            ScenarioCategory::SuddenLeadBraking => "SuddenLeadBraking",
            ScenarioCategory::OccludedCrossing => "OccludedCrossing",
            ScenarioCategory::AbruptPedestrianOnTurn => "AbruptPedestrianOnTurn",
            ScenarioCategory::UnprotectedLeftTurn => "UnprotectedLeftTurn",
        }
    }

    pub fn is_long_tail(&self) -> bool {
        !matches!(
            self,
            ScenarioCategory::E2dCommon | ScenarioCategory::H2dEnvironmental
        )
    }

    /// Registry fillers that are not named in the source taxonomy. Reports
    /// can use this flag to exclude them.
    pub fn is_invented(&self) -> bool {
        matches!(
            self,
            ScenarioCategory::SuddenLeadBraking
                | ScenarioCategory::OccludedCrossing
                | ScenarioCategory::AbruptPedestrianOnTurn
                | ScenarioCategory::UnprotectedLeftTurn
        )
    }

    fn index(&self) -> u64 {
        ALL_CATEGORIES.iter().position(|c| c == self).unwrap() as u64
    }

    /// Documented parameter ranges `(name, min, max)` for this category.
    pub fn param_ranges(&self) -> &'static [(&'static str, f64, f64)] {
        use ScenarioCategory::*;
        match self {
            E2dCommon => &[
                ("desired_speed", 8.0, 12.0),
                ("lead_gap", 25.0, 45.0),
                ("lead_speed_ratio", 0.6, 1.0),
            ],
            H2dEnvironmental => &[
                ("desired_speed", 8.0, 12.0),
                ("turn_entry", 8.0, 30.0),
                ("turn_radius", 7.0, 14.0),
                ("lead_gap", 25.0, 45.0),
                ("lead_speed_ratio", 0.6, 1.0),
            ],
            TemporaryParkingAhead => &[
                ("desired_speed", 8.0, 12.0),
                ("parked_distance", 35.0, 60.0),
                ("parked_offset", -0.6, 0.3),
            ],
            RoadworkAhead => &[
                ("desired_speed", 8.0, 12.0),
                ("work_distance", 35.0, 60.0),
                ("work_length", 3.0, 6.0),
                ("work_width", 1.5, 2.5),
                ("work_offset", -0.8, 0.4),
            ],
            JaywalkingPedestrians => &[
                ("desired_speed", 8.0, 12.0),
                ("crossing_distance", 26.0, 34.0),
                ("trigger_distance", 22.0, 28.0),
                ("walk_speed", 1.0, 1.6),
                ("pause", 3.0, 5.0),
                ("pedestrians", 1.0, 2.0),
            ],
            LaneInvasion => &[
                ("desired_speed", 8.0, 12.0),
                ("oncoming_start", 90.0, 115.0),
                ("oncoming_speed", 7.0, 9.0),
                ("invasion_depth", 1.9, 2.5),
            ],
            OpposingLaneEncroachment => &[
                ("desired_speed", 8.0, 12.0),
                ("oncoming_start", 60.0, 100.0),
                ("oncoming_speed", 6.0, 9.0),
                ("encroachment", 0.9, 1.3),
                ("truck_length", 8.0, 10.0),
            ],
            ParkedVehicleActivation => &[
                ("desired_speed", 8.0, 12.0),
                ("parked_distance", 38.0, 50.0),
                ("trigger_distance", 28.0, 38.0),
                ("merge_speed", 4.0, 7.0),
            ],
            RedLightRunner => &[
                ("desired_speed", 8.0, 12.0),
                ("intersection_distance", 40.0, 55.0),
                ("runner_speed", 9.0, 12.0),
                ("runner_arrival", 3.0, 4.5),
            ],
            SuddenCutIn => &[
                ("desired_speed", 8.0, 12.0),
                ("cut_gap", 12.0, 18.0),
                ("speed_deficit", 0.0, 1.5),
                ("cut_delay", 0.5, 1.5),
            ],
            NearCollision => &[
                ("desired_speed", 8.0, 12.0),
                ("crossing_distance", 30.0, 40.0),
                ("trigger_distance", 25.0, 30.0),
                ("run_speed", 2.5, 3.5),
            ],
            SuddenLeadBraking => &[
                ("desired_speed", 8.0, 12.0),
                ("lead_gap", 20.0, 30.0),
                ("brake_time", 1.0, 2.5),
                ("lead_decel", 3.0, 4.5),
            ],
            OccludedCrossing => &[
                ("desired_speed", 8.0, 12.0),
                ("intersection_distance", 40.0, 55.0),
                ("crossing_speed", 6.0, 9.0),
                ("crossing_arrival", 3.0, 4.5),
            ],
            AbruptPedestrianOnTurn => &[
                ("desired_speed", 8.0, 12.0),
                ("turn_entry", 6.0, 14.0),
                ("turn_radius", 7.0, 12.0),
                ("crossing_offset", 3.0, 6.0),
                ("trigger_distance", 15.0, 22.0),
                ("walk_speed", 1.2, 1.8),
                ("turn_left", 0.0, 1.0),
            ],
            UnprotectedLeftTurn => &[
                ("desired_speed", 8.0, 12.0),
                ("turn_entry", 17.0, 26.0),
                ("turn_radius", 9.0, 14.0),
                ("oncoming_start", 25.0, 45.0),
                ("oncoming_speed", 8.0, 11.0),
            ],
        }
    }
}

impl fmt::Display for ScenarioCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for ScenarioCategory {
    type Err = SimError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ALL_CATEGORIES
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| SimError::UnknownCategory(s.to_string()))
    }
}

/// All registered categories: the two routine pseudo-categories followed by
/// the thirteen long-tail scripts.
pub fn list_categories() -> Vec<ScenarioCategory> {
    ALL_CATEGORIES.to_vec()
}

pub fn long_tail_categories() -> Vec<ScenarioCategory> {
    ALL_CATEGORIES.iter().copied().filter(|c| c.is_long_tail()).collect()
}

/// When a scripted agent starts executing its motion phases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", content = "value")]
pub enum Trigger {
    Immediate,
    AtTime(f64),
    /// Fires when the ego centre comes within this Euclidean distance.
    EgoWithin(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", content = "value")]
pub enum PhaseEnd {
    Duration(f64),
    /// Ends once the agent reaches this arc length on its path.
    Station(f64),
    Forever,
}

/// Move toward `target_speed` at rate `accel` (m/s², magnitude) until `end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionPhase {
    pub target_speed: f64,
    pub accel: f64,
    pub end: PhaseEnd,
}

/// Scripted agent: follows `path` from `start_s`, holds `initial_speed` until
/// the trigger fires, then runs `phases` in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentScript {
    pub id: u32,
    pub kind: AgentKind,
    pub length: f64,
    pub width: f64,
    pub path: Polyline,
    pub start_s: f64,
    pub initial_speed: f64,
    pub trigger: Trigger,
    pub phases: Vec<MotionPhase>,
    /// Marks the agent that embodies the scenario's hazard.
    #[serde(default)]
    pub hazard: bool,
}

/// What counts as the long-tail hazard having happened.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HazardKind {
    /// A stationary hazard agent occupies the ego lane ahead.
    StaticInEgoLane,
    /// A hazard agent's footprint enters the ego lane ahead of the ego.
    EntersEgoLane,
    /// A hazard agent in the ego lane sheds at least 2 m/s.
    LeadBrakes,
    /// A hazard agent enters the ego lane while its own signal is red.
    RunsRedLight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoSetup {
    pub route: Polyline,
    pub start_s: f64,
    pub speed: f64,
    pub desired_speed: f64,
}

/// A fully explicit, serializable scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub category: ScenarioCategory,
    pub seed: u64,
    pub params: BTreeMap<String, f64>,
    pub env: EnvCondition,
    pub map: RoadMap,
    pub ego: EgoSetup,
    pub agents: Vec<AgentScript>,
    pub hazard: Option<HazardKind>,
    /// Whether the ego route turns at an intersection.
    pub turn: Option<TurnDirection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnDirection {
    Left,
    Right,
}

impl ScenarioSpec {
    /// Every recorded parameter lies in the category's documented range.
    pub fn params_in_range(&self) -> bool {
        let ranges = self.category.param_ranges();
        self.params.iter().all(|(k, v)| {
            ranges
                .iter()
                .find(|(n, _, _)| n == k)
                .is_some_and(|(_, lo, hi)| *v >= *lo && *v <= *hi)
        })
    }

    pub fn hazard_agent_ids(&self) -> Vec<u32> {
        self.agents.iter().filter(|a| a.hazard).map(|a| a.id).collect()
    }
}

pub const LANE_WIDTH: f64 = 3.5;
const ROAD_START: f64 = -40.0;
const ROAD_END: f64 = 180.0;
const SPAWN_S: f64 = -ROAD_START;

/// HASS marginals used when a generator draws environment conditions.
pub(crate) const HASS_P_NIGHT: f64 = 0.4135;
pub(crate) const HASS_P_RAIN: f64 = 0.5161;
pub(crate) const HASS_P_TURN: f64 = 0.5358;

/// Desired-speed scaling for hard conditions.
pub fn env_speed_factor(env: &EnvCondition) -> f64 {
    let mut f = 1.0;
    if env.time == TimeOfDay::Night {
        f *= 0.9;
    }
    if env.weather == Weather::Rainy {
        f *= 0.85;
    }
    f
}

struct Builder {
    rng: ChaCha8Rng,
    params: BTreeMap<String, f64>,
    ranges: &'static [(&'static str, f64, f64)],
    agents: Vec<AgentScript>,
    next_id: u32,
}

impl Builder {
    fn new(category: ScenarioCategory, seed: u64) -> Self {
        // Mix category into the stream so categories with equal seeds differ.
        let mixed = seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(category.index().wrapping_mul(0xD1B5_4A32_D192_ED03));
        Builder {
            rng: ChaCha8Rng::seed_from_u64(mixed),
            params: BTreeMap::new(),
            ranges: category.param_ranges(),
            agents: Vec::new(),
            next_id: 1,
        }
    }

    /// Draws a documented parameter uniformly from its range and records it.
    fn param(&mut self, name: &str) -> f64 {
        let (_, lo, hi) = *self
            .ranges
            .iter()
            .find(|(n, _, _)| *n == name)
            .unwrap_or_else(|| panic!("undocumented parameter {name}"));
        let v = if hi > lo { self.rng.random_range(lo..=hi) } else { lo };
        self.params.insert(name.to_string(), v);
        v
    }

    /// Records a parameter whose value is derived from others, clamped to its
    /// documented range.
    fn set_param(&mut self, name: &str, value: f64) -> f64 {
        let (_, lo, hi) = *self
            .ranges
            .iter()
            .find(|(n, _, _)| *n == name)
            .unwrap_or_else(|| panic!("undocumented parameter {name}"));
        let v = value.clamp(lo, hi);
        self.params.insert(name.to_string(), v);
        v
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.random_bool(p)
    }

    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..=hi)
    }

    fn env_hass(&mut self) -> EnvCondition {
        EnvCondition {
            time: if self.chance(HASS_P_NIGHT) {
                TimeOfDay::Night
            } else {
                TimeOfDay::Day
            },
            weather: if self.chance(HASS_P_RAIN) {
                Weather::Rainy
            } else {
                Weather::Sunny
            },
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn agent(
        &mut self,
        kind: AgentKind,
        length: f64,
        width: f64,
        path: Vec<[f64; 2]>,
        initial_speed: f64,
        trigger: Trigger,
        phases: Vec<MotionPhase>,
        hazard: bool,
    ) {
        let id = self.next_id;
        self.next_id += 1;
        self.agents.push(AgentScript {
            id,
            kind,
            length,
            width,
            path: Polyline::new(path).expect("scenario path"),
            start_s: 0.0,
            initial_speed,
            trigger,
            phases,
            hazard,
        });
    }

    fn static_vehicle(&mut self, at: [f64; 2], yaw: f64, length: f64, width: f64, hazard: bool) {
        let (s, c) = yaw.sin_cos();
        self.agent(
            AgentKind::Vehicle,
            length,
            width,
            vec![at, [at[0] + c, at[1] + s]],
            0.0,
            Trigger::Immediate,
            vec![],
            hazard,
        );
    }

    fn cruise(&mut self, kind: AgentKind, length: f64, width: f64, path: Vec<[f64; 2]>, speed: f64, hazard: bool) {
        self.agent(kind, length, width, path, speed, Trigger::Immediate, vec![], hazard);
    }
}

fn straight_map(right_lane: bool) -> RoadMap {
    let mut centerlines = vec![
        Polyline::new(vec![[ROAD_START, 0.0], [ROAD_END, 0.0]]).unwrap(),
        Polyline::new(vec![[ROAD_END, LANE_WIDTH], [ROAD_START, LANE_WIDTH]]).unwrap(),
    ];
    if right_lane {
        centerlines.push(Polyline::new(vec![[ROAD_START, -LANE_WIDTH], [ROAD_END, -LANE_WIDTH]]).unwrap());
    }
    RoadMap {
        centerlines,
        lane_width: LANE_WIDTH,
        intersections: vec![],
        signals: vec![],
    }
}

/// Four-way intersection centred at `(xc, LANE_WIDTH / 2)`.
fn intersection_map(xc: f64, extra: Vec<Polyline>) -> RoadMap {
    let w = LANE_WIDTH;
    let mut centerlines = vec![
        Polyline::new(vec![[ROAD_START, 0.0], [ROAD_END, 0.0]]).unwrap(),
        Polyline::new(vec![[ROAD_END, w], [ROAD_START, w]]).unwrap(),
        Polyline::new(vec![[xc + w / 2.0, -80.0], [xc + w / 2.0, 80.0]]).unwrap(),
        Polyline::new(vec![[xc - w / 2.0, 80.0], [xc - w / 2.0, -80.0]]).unwrap(),
    ];
    centerlines.extend(extra);
    RoadMap {
        centerlines,
        lane_width: w,
        intersections: vec![[xc, w / 2.0]],
        signals: vec![],
    }
}

fn straight_route() -> Polyline {
    Polyline::new(vec![[ROAD_START, 0.0], [ROAD_END, 0.0]]).unwrap()
}

/// Turning route at an intersection centred at `xc`. Returns the route.
fn turning_route(xc: f64, radius: f64, dir: TurnDirection) -> Polyline {
    let w = LANE_WIDTH;
    let (arc_start, sweep) = match dir {
        TurnDirection::Left => (xc + w / 2.0 - radius, FRAC_PI_2),
        TurnDirection::Right => (xc - w / 2.0 - radius, -FRAC_PI_2),
    };
    Polyline::new(turn_route(
        [ROAD_START, 0.0],
        0.0,
        arc_start - ROAD_START,
        radius,
        sweep,
        70.0,
    ))
    .unwrap()
}

/// Intersection centre such that the turn arc starts `entry` meters ahead of
/// the spawn point.
fn intersection_for_turn(entry: f64, radius: f64, dir: TurnDirection) -> f64 {
    let w = LANE_WIDTH;
    match dir {
        TurnDirection::Left => entry + radius - w / 2.0,
        TurnDirection::Right => entry + radius + w / 2.0,
    }
}

fn add_background_straight(b: &mut Builder, desired: f64, with_lead: bool) {
    if with_lead {
        let gap = b.param("lead_gap");
        let ratio = b.param("lead_speed_ratio");
        b.cruise(
            AgentKind::Vehicle,
            4.5,
            1.9,
            vec![[gap, 0.0], [ROAD_END + 100.0, 0.0]],
            desired * ratio,
            false,
        );
    }
    let n_oncoming = if b.chance(0.7) { 1 } else { 2 };
    for k in 0..n_oncoming {
        let x = b.uniform(30.0, 120.0) + 40.0 * k as f64;
        let v = b.uniform(7.0, 11.0);
        b.cruise(
            AgentKind::Vehicle,
            4.6,
            1.9,
            vec![[x, LANE_WIDTH], [ROAD_START - 100.0, LANE_WIDTH]],
            v,
            false,
        );
    }
    if b.chance(0.5) {
        let x = b.uniform(-5.0, 40.0);
        let v = b.uniform(0.8, 1.5);
        b.cruise(
            AgentKind::Pedestrian,
            0.5,
            0.5,
            vec![[x, -LANE_WIDTH / 2.0 - 2.5], [x + 60.0, -LANE_WIDTH / 2.0 - 2.5]],
            v,
            false,
        );
    }
}

fn all_green(t_end: f64) -> Vec<SignalPhase> {
    let _ = t_end;
    vec![SignalPhase {
        start: 0.0,
        state: SignalState::Green,
    }]
}

fn all_red() -> Vec<SignalPhase> {
    vec![SignalPhase {
        start: 0.0,
        state: SignalState::Red,
    }]
}

fn signalize(map: &mut RoadMap, xc: f64, ego_green: bool) {
    let w = LANE_WIDTH;
    let ego_phase = if ego_green { all_green(60.0) } else { all_red() };
    let cross_phase = if ego_green { all_red() } else { all_green(60.0) };
    map.signals = vec![
        TrafficSignal {
            intersection: 0,
            approach: Approach::Ego,
            stop_line: [xc - w - 1.0, 0.0],
            phases: ego_phase.clone(),
        },
        TrafficSignal {
            intersection: 0,
            approach: Approach::Oncoming,
            stop_line: [xc + w + 1.0, w],
            phases: ego_phase,
        },
        TrafficSignal {
            intersection: 0,
            approach: Approach::Cross,
            stop_line: [xc + w / 2.0, -w - 1.0],
            phases: cross_phase,
        },
    ];
}

/// Builds the scenario for `(category, seed)`. Deterministic.
pub fn instantiate_scenario(category: ScenarioCategory, seed: u64) -> ScenarioSpec {
    use ScenarioCategory::*;
    let mut b = Builder::new(category, seed);
    let w = LANE_WIDTH;

    let desired_base = b.param("desired_speed");
    let env = match category {
        E2dCommon => EnvCondition::DAY_SUNNY,
        H2dEnvironmental => {
            // Redraw until at least one hard factor is present; the turn flag
            // is drawn jointly so the family stays hard-case rich.
            loop {
                let env = b.env_hass();
                let turn = b.chance(HASS_P_TURN);
                if env.is_hard() || turn {
                    b.params.insert("turn_flag".into(), if turn { 1.0 } else { 0.0 });
                    break env;
                }
            }
        }
        _ => b.env_hass(),
    };
    let desired = desired_base * env_speed_factor(&env);
    let spawn_speed_ratio = b.uniform(0.7, 1.0);

    let mut turn = None;
    let mut hazard = None;
    let (map, route) = match category {
        E2dCommon => {
            let lead = b.chance(0.5);
            add_background_straight(&mut b, desired, lead);
            (straight_map(false), straight_route())
        }
        H2dEnvironmental => {
            let is_turn = b.params.remove("turn_flag").unwrap_or(0.0) > 0.5;
            if is_turn {
                let dir = if b.chance(0.5) { TurnDirection::Left } else { TurnDirection::Right };
                let entry = b.param("turn_entry");
                let radius = match dir {
                    TurnDirection::Left => b.uniform(10.0, 14.0),
                    TurnDirection::Right => b.uniform(7.0, 10.0),
                };
                b.set_param("turn_radius", radius);
                let xc = intersection_for_turn(entry, radius, dir);
                let route = turning_route(xc, radius, dir);
                let mut map = intersection_map(xc, vec![route.clone()]);
                signalize(&mut map, xc, true);
                // Cross traffic waiting at its red light.
                b.static_vehicle([xc + w / 2.0, -w - 1.0 - 2.5], FRAC_PI_2, 4.5, 1.9, false);
                turn = Some(dir);
                (map, route)
            } else {
                let lead = b.chance(0.5);
                add_background_straight(&mut b, desired, lead);
                (straight_map(false), straight_route())
            }
        }
        TemporaryParkingAhead => {
            let d = b.param("parked_distance");
            let off = b.param("parked_offset");
            b.static_vehicle([d, off], 0.0, 4.5, 1.9, true);
            hazard = Some(HazardKind::StaticInEgoLane);
            (straight_map(false), straight_route())
        }
        RoadworkAhead => {
            let d = b.param("work_distance");
            let len = b.param("work_length");
            let wid = b.param("work_width");
            let off = b.param("work_offset");
            b.static_vehicle([d, off], 0.0, len, wid, true);
            let workers = if b.chance(0.5) { 1 } else { 2 };
            for k in 0..workers {
                let x = d + k as f64 * 2.0 - 1.0;
                b.agent(
                    AgentKind::Pedestrian,
                    0.5,
                    0.5,
                    vec![[x, -w / 2.0 - 1.2], [x, -w / 2.0 - 0.2]],
                    0.0,
                    Trigger::Immediate,
                    vec![],
                    false,
                );
            }
            hazard = Some(HazardKind::StaticInEgoLane);
            (straight_map(false), straight_route())
        }
        JaywalkingPedestrians => {
            let d = b.param("crossing_distance");
            let trig = b.param("trigger_distance").min(d - 3.0);
            b.set_param("trigger_distance", trig);
            let v = b.param("walk_speed");
            let pause = b.param("pause");
            let n = b.param("pedestrians").round() as usize;
            b.set_param("pedestrians", n as f64);
            let start_y = -w / 2.0 - 1.0;
            for k in 0..n {
                let x = d + 1.5 * k as f64;
                let to_center = -start_y + 0.4 * k as f64;
                b.agent(
                    AgentKind::Pedestrian,
                    0.5,
                    0.6,
                    vec![[x, start_y], [x, w + w / 2.0 + 3.0]],
                    0.0,
                    Trigger::EgoWithin(trig),
                    vec![
                        MotionPhase { target_speed: v, accel: 3.0, end: PhaseEnd::Station(to_center) },
                        MotionPhase { target_speed: 0.0, accel: 6.0, end: PhaseEnd::Duration(pause) },
                        MotionPhase { target_speed: v, accel: 3.0, end: PhaseEnd::Forever },
                    ],
                    true,
                );
            }
            hazard = Some(HazardKind::EntersEgoLane);
            (straight_map(false), straight_route())
        }
        LaneInvasion => {
            let x0 = b.param("oncoming_start");
            let v = b.param("oncoming_speed");
            let depth = b.param("invasion_depth");
            let y_in = w - depth;
            b.cruise(
                AgentKind::Vehicle,
                4.6,
                1.9,
                vec![
                    [x0, w],
                    [x0 - 12.0, w],
                    [x0 - 22.0, y_in],
                    [x0 - 30.0, y_in],
                    [x0 - 40.0, w],
                    [ROAD_START - 100.0, w],
                ],
                v,
                true,
            );
            hazard = Some(HazardKind::EntersEgoLane);
            (straight_map(false), straight_route())
        }
        OpposingLaneEncroachment => {
            let x0 = b.param("oncoming_start");
            let v = b.param("oncoming_speed");
            let enc = b.param("encroachment");
            let len = b.param("truck_length");
            b.cruise(
                AgentKind::Vehicle,
                len,
                2.5,
                vec![[x0, w - enc], [ROAD_START - 100.0, w - enc]],
                v,
                true,
            );
            hazard = Some(HazardKind::EntersEgoLane);
            (straight_map(false), straight_route())
        }
        ParkedVehicleActivation => {
            let d = b.param("parked_distance");
            let trig = b.param("trigger_distance").min(d - 4.0);
            b.set_param("trigger_distance", trig);
            let v = b.param("merge_speed");
            let y_park = -w / 2.0 - 0.7;
            b.agent(
                AgentKind::Vehicle,
                4.5,
                1.9,
                vec![[d, y_park], [d + 3.0, y_park], [d + 13.0, 0.0], [ROAD_END + 100.0, 0.0]],
                0.0,
                Trigger::EgoWithin(trig),
                vec![MotionPhase { target_speed: v, accel: 2.0, end: PhaseEnd::Forever }],
                true,
            );
            hazard = Some(HazardKind::EntersEgoLane);
            (straight_map(false), straight_route())
        }
        RedLightRunner | OccludedCrossing => {
            let xc = b.param("intersection_distance");
            let (v, arrive) = if category == RedLightRunner {
                (b.param("runner_speed"), b.param("runner_arrival"))
            } else {
                (b.param("crossing_speed"), b.param("crossing_arrival"))
            };
            let y0 = -(v * arrive);
            let mut map = intersection_map(xc, vec![]);
            if category == RedLightRunner {
                signalize(&mut map, xc, true);
                hazard = Some(HazardKind::RunsRedLight);
            } else {
                // Parked truck at the corner hides the crossing car.
                b.static_vehicle([xc - w - 6.0, -w / 2.0 - 1.6], 0.0, 9.0, 2.5, false);
                hazard = Some(HazardKind::EntersEgoLane);
            }
            b.cruise(
                AgentKind::Vehicle,
                4.6,
                1.9,
                vec![[xc + w / 2.0, y0], [xc + w / 2.0, 120.0]],
                v,
                true,
            );
            (map, straight_route())
        }
        SuddenCutIn => {
            let gap = b.param("cut_gap");
            let deficit = b.param("speed_deficit");
            let delay = b.param("cut_delay");
            let spawn_speed = desired * spawn_speed_ratio;
            let v = (spawn_speed - deficit).max(2.0);
            let lc_start = gap + v * delay;
            b.cruise(
                AgentKind::Vehicle,
                4.6,
                1.9,
                vec![[gap, -w], [lc_start, -w], [lc_start + 15.0, 0.0], [ROAD_END + 100.0, 0.0]],
                v,
                true,
            );
            hazard = Some(HazardKind::EntersEgoLane);
            (straight_map(true), straight_route())
        }
        NearCollision => {
            let d = b.param("crossing_distance");
            let trig = b.param("trigger_distance").min(d - 3.0);
            b.set_param("trigger_distance", trig);
            let v = b.param("run_speed");
            // Parked van the pedestrian emerges from behind.
            b.static_vehicle([d - 6.0, -w / 2.0 - 1.3], 0.0, 5.0, 2.0, false);
            b.agent(
                AgentKind::Pedestrian,
                0.5,
                0.6,
                vec![[d, -w / 2.0 - 1.3], [d, w + w / 2.0 + 3.0]],
                0.0,
                Trigger::EgoWithin(trig),
                vec![MotionPhase { target_speed: v, accel: 4.0, end: PhaseEnd::Forever }],
                true,
            );
            hazard = Some(HazardKind::EntersEgoLane);
            (straight_map(false), straight_route())
        }
        SuddenLeadBraking => {
            let gap = b.param("lead_gap");
            let t_brake = b.param("brake_time");
            let decel = b.param("lead_decel");
            let v = desired * spawn_speed_ratio;
            b.agent(
                AgentKind::Vehicle,
                4.5,
                1.9,
                vec![[gap, 0.0], [ROAD_END + 100.0, 0.0]],
                v,
                Trigger::AtTime(t_brake),
                vec![MotionPhase { target_speed: 0.0, accel: decel, end: PhaseEnd::Forever }],
                true,
            );
            hazard = Some(HazardKind::LeadBrakes);
            (straight_map(false), straight_route())
        }
        AbruptPedestrianOnTurn => {
            let entry = b.param("turn_entry");
            let radius = b.param("turn_radius");
            let left = b.param("turn_left") >= 0.5;
            b.set_param("turn_left", if left { 1.0 } else { 0.0 });
            let dir = if left { TurnDirection::Left } else { TurnDirection::Right };
            let off = b.param("crossing_offset");
            let trig = b.param("trigger_distance");
            let v = b.param("walk_speed");
            let xc = intersection_for_turn(entry, radius, dir);
            let route = turning_route(xc, radius, dir);
            let mut map = intersection_map(xc, vec![route.clone()]);
            signalize(&mut map, xc, true);
            // Pedestrian crosses the exit road just past the end of the arc.
            let (y_cross, x_from, x_to) = match dir {
                TurnDirection::Left => (radius + off, xc + w + 2.0, xc - w - 2.0),
                TurnDirection::Right => (-radius - off, xc - w - 2.0, xc + w + 2.0),
            };
            b.agent(
                AgentKind::Pedestrian,
                0.5,
                0.6,
                vec![[x_from, y_cross], [x_to, y_cross]],
                0.0,
                Trigger::EgoWithin(trig),
                vec![MotionPhase { target_speed: v, accel: 3.0, end: PhaseEnd::Forever }],
                true,
            );
            turn = Some(dir);
            hazard = Some(HazardKind::EntersEgoLane);
            (map, route)
        }
        UnprotectedLeftTurn => {
            let entry = b.param("turn_entry");
            let radius = b.param("turn_radius");
            let start = b.param("oncoming_start");
            let v = b.param("oncoming_speed");
            let xc = intersection_for_turn(entry, radius, TurnDirection::Left);
            let route = turning_route(xc, radius, TurnDirection::Left);
            let mut map = intersection_map(xc, vec![route.clone()]);
            signalize(&mut map, xc, true);
            b.cruise(
                AgentKind::Vehicle,
                4.6,
                1.9,
                vec![[xc + start, w], [ROAD_START - 100.0, w]],
                v,
                true,
            );
            turn = Some(TurnDirection::Left);
            hazard = Some(HazardKind::EntersEgoLane);
            (map, route)
        }
    };

    ScenarioSpec {
        category,
        seed,
        params: b.params,
        env,
        map,
        ego: EgoSetup {
            route,
            start_s: SPAWN_S,
            speed: desired * spawn_speed_ratio,
            desired_speed: desired,
        },
        agents: b.agents,
        hazard,
        turn,
    }
}
