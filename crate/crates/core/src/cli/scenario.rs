//! Flat `key = value` scenario files and `--set key=value` overrides.
//!
//! ```text
//! # steering step at 1 s
//! speed_mps    = 50
//! mu           = 0.7
//! steer_deg    = 45
//! steer_time_s = 1.0
//! duration_s   = 5
//! ```

use crate::error::{Error, Result};
use crate::sim::{Scenario, SimConfig, StepProfile};
use crate::vehicle::VehicleParams;

const SCENARIO_KEYS: [&str; 10] = [
    "name",
    "speed_mps",
    "mu",
    "steer_deg",
    "steer_time_s",
    "steer_rate_dps",
    "dist_nm",
    "dist_time_s",
    "duration_s",
    "controller",
];

fn number(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| Error::InvalidArgument(format!("{key}: expected a number, got {value:?}")))
}

fn count(key: &str, value: &str) -> Result<usize> {
    value
        .parse::<usize>()
        .map_err(|_| Error::InvalidArgument(format!("{key}: expected a positive integer, got {value:?}")))
}

fn flag(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "on" | "1" | "yes" => Ok(true),
        "false" | "off" | "0" | "no" => Ok(false),
        _ => Err(Error::InvalidArgument(format!("{key}: expected true/false, got {value:?}"))),
    }
}

/// Splits the file into `(line number, key, value)` triples.
pub fn parse_pairs(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("line {}: expected `key = value`", idx + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(Error::InvalidArgument(format!("line {}: empty key or value", idx + 1)));
        }
        if pairs.iter().any(|(_, k, _): &(usize, String, String)| k == key) {
            return Err(Error::InvalidArgument(format!("line {}: duplicate key {key}", idx + 1)));
        }
        pairs.push((idx + 1, key.to_string(), value.to_string()));
    }
    Ok(pairs)
}

#[derive(Debug, Default)]
struct ScenarioBuilder {
    name: Option<String>,
    speed: Option<f64>,
    mu: Option<f64>,
    steer_deg: f64,
    steer_time: f64,
    steer_rate: Option<f64>,
    dist_nm: f64,
    dist_time: f64,
    duration: Option<f64>,
    controller: bool,
}

impl ScenarioBuilder {
    fn from_scenario(s: &Scenario) -> Self {
        let (steer_time, steer_deg) = s.steer_profile.steps.first().copied().unwrap_or((0.0, 0.0));
        let (dist_time, dist_nm) = s.disturbance_profile.steps.first().copied().unwrap_or((0.0, 0.0));
        Self {
            name: Some(s.name.clone()),
            speed: Some(s.initial_speed_mps),
            mu: Some(s.mu),
            steer_deg,
            steer_time,
            steer_rate: s.steer_profile.rate_limit,
            dist_nm,
            dist_time,
            duration: Some(s.duration_s),
            controller: s.controller_enabled,
        }
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "name" => self.name = Some(value.to_string()),
            "speed_mps" => self.speed = Some(number(key, value)?),
            "mu" => self.mu = Some(number(key, value)?),
            "steer_deg" => self.steer_deg = number(key, value)?,
            "steer_time_s" => self.steer_time = number(key, value)?,
            "steer_rate_dps" => self.steer_rate = Some(number(key, value)?),
            "dist_nm" => self.dist_nm = number(key, value)?,
            "dist_time_s" => self.dist_time = number(key, value)?,
            "duration_s" => self.duration = Some(number(key, value)?),
            "controller" => self.controller = flag(key, value)?,
            _ => return Err(Error::InvalidArgument(format!("unknown scenario key {key}"))),
        }
        Ok(())
    }

    fn build(self, default_name: &str) -> Result<Scenario> {
        let missing = |k: &str| Error::InvalidArgument(format!("missing required key {k}"));
        let profile = |time: f64, value: f64, rate: Option<f64>| {
            if value == 0.0 {
                StepProfile { steps: vec![], rate_limit: rate }
            } else {
                StepProfile { steps: vec![(time, value)], rate_limit: rate }
            }
        };
        let scenario = Scenario {
            name: self.name.unwrap_or_else(|| default_name.to_string()),
            initial_speed_mps: self.speed.ok_or_else(|| missing("speed_mps"))?,
            mu: self.mu.ok_or_else(|| missing("mu"))?,
            steer_profile: profile(self.steer_time, self.steer_deg, self.steer_rate),
            disturbance_profile: profile(self.dist_time, self.dist_nm, None),
            duration_s: self.duration.ok_or_else(|| missing("duration_s"))?,
            controller_enabled: self.controller,
        };
        if scenario.name.is_empty()
            || !scenario.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(Error::InvalidArgument(format!(
                "scenario name {:?} must be non-empty and use only [A-Za-z0-9_-]",
                scenario.name
            )));
        }
        scenario.validate()?;
        Ok(scenario)
    }
}

/// Parses a scenario file. `default_name` is used when the file has no
/// `name` key (typically the file stem).
pub fn parse_scenario(text: &str, default_name: &str) -> Result<Scenario> {
    let mut builder = ScenarioBuilder {
        controller: true,
        ..ScenarioBuilder::default()
    };
    for (line, key, value) in parse_pairs(text)? {
        builder
            .set(&key, &value)
            .map_err(|e| Error::InvalidArgument(format!("line {line}: {e}")))?;
    }
    builder.build(default_name)
}

/// Renders a scenario in the file format accepted by [`parse_scenario`].
pub fn format_scenario(s: &Scenario) -> String {
    let b = ScenarioBuilder::from_scenario(s);
    let mut out = format!(
        "name = {}\nspeed_mps = {}\nmu = {}\nsteer_deg = {}\nsteer_time_s = {}\ndist_nm = {}\ndist_time_s = {}\nduration_s = {}\ncontroller = {}\n",
        s.name, s.initial_speed_mps, s.mu, b.steer_deg, b.steer_time, b.dist_nm, b.dist_time, s.duration_s, s.controller_enabled
    );
    if let Some(rate) = b.steer_rate {
        out.push_str(&format!("steer_rate_dps = {rate}\n"));
    }
    out
}

/// Everything a run needs, after overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSetup {
    pub scenario: Scenario,
    pub params: VehicleParams,
    pub config: SimConfig,
}

impl RunSetup {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            params: VehicleParams::default(),
            config: SimConfig::default(),
        }
    }

    /// Applies one `key=value` override. Scenario keys, vehicle parameter
    /// names and controller settings are accepted.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        if SCENARIO_KEYS.contains(&key) {
            let mut b = ScenarioBuilder::from_scenario(&self.scenario);
            b.set(key, value)?;
            let name = self.scenario.name.clone();
            self.scenario = b.build(&name)?;
            return Ok(());
        }
        let deg = std::f64::consts::PI / 180.0;
        let p = &mut self.params;
        let c = &mut self.config;
        match key {
            "mass_kg" => p.mass_kg = number(key, value)?,
            "c_front" => p.c_front = number(key, value)?,
            "c_rear" => p.c_rear = number(key, value)?,
            "yaw_inertia" => p.yaw_inertia = number(key, value)?,
            "dist_front" => p.dist_front = number(key, value)?,
            "dist_rear" => p.dist_rear = number(key, value)?,
            "track_front" => p.track_front = number(key, value)?,
            "track_rear" => p.track_rear = number(key, value)?,
            "wheel_radius" => p.wheel_radius = number(key, value)?,
            "steering_ratio" => p.steering_ratio = number(key, value)?,
            "gravity" => p.gravity = number(key, value)?,
            "pred_horizon" => c.mpc.pred_horizon = count(key, value)?,
            "ctrl_horizon" => c.mpc.ctrl_horizon = count(key, value)?,
            "ts_s" => c.mpc.ts_s = number(key, value)?,
            "q_beta" => c.mpc.q_weights[(0, 0)] = number(key, value)?,
            "q_r" => c.mpc.q_weights[(1, 1)] = number(key, value)?,
            "ru_delta" => c.mpc.ru_weights[(0, 0)] = number(key, value)?,
            "ru_moment" => c.mpc.ru_weights[(1, 1)] = number(key, value)?,
            "rdu_delta" => c.mpc.rdu_weights[(0, 0)] = number(key, value)?,
            "rdu_moment" => c.mpc.rdu_weights[(1, 1)] = number(key, value)?,
            "delta_max_deg" => {
                let v = number(key, value)? * deg;
                c.mpc.u_min[0] = -v;
                c.mpc.u_max[0] = v;
            }
            "moment_max_nm" => {
                let v = number(key, value)?;
                c.mpc.u_min[1] = -v;
                c.mpc.u_max[1] = v;
            }
            "ddelta_max_deg" => {
                let v = number(key, value)? * deg;
                c.mpc.du_min[0] = -v;
                c.mpc.du_max[0] = v;
            }
            "dmoment_max_nm" => {
                let v = number(key, value)?;
                c.mpc.du_min[1] = -v;
                c.mpc.du_max[1] = v;
            }
            "max_qp_iterations" => c.mpc.max_qp_iterations = count(key, value)?,
            "plant_substeps" => c.plant_substeps = count(key, value)?,
            "deadband" => c.brake.deadband = number(key, value)?,
            "max_brake_torque" => c.brake.max_torque = number(key, value)?,
            _ => return Err(Error::InvalidArgument(format!("unknown override key {key}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.params.validate()?;
        self.config.mpc.validate()?;
        if self.config.plant_substeps == 0 {
            return Err(Error::InvalidArgument("plant_substeps must be at least 1".into()));
        }
        if !(self.config.brake.deadband >= 0.0 && self.config.brake.max_torque > 0.0) {
            return Err(Error::InvalidArgument("brake deadband must be >= 0 and max torque > 0".into()));
        }
        Ok(())
    }
}

/// Parses `key=value` overrides.
pub fn parse_override(s: &str) -> std::result::Result<(String, String), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("override {s:?} is not key=value"))?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() || v.is_empty() {
        return Err(format!("override {s:?} is not key=value"));
    }
    Ok((k.to_string(), v.to_string()))
}
