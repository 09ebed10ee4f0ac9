//! Run configuration and its text format.
//!
//! One setting per line, `key = value`, with dotted section paths:
//!
//! ```text
//! # headline scenario
//! ground.mu_s   = 0.2
//! gait.n_steps  = 20
//! erg.enabled   = true
//! ```
//!
//! `#` starts a comment; blank lines are ignored; later lines override
//! earlier ones. Values are decimal numbers, integers (`gait.n_steps`,
//! `sim.seed`), booleans (`true`/`false`) or, for `sim.output_dir`, a bare
//! path. Unknown keys are errors. Keys not mentioned keep their defaults;
//! [`SimConfig::keys`] lists every accepted key.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::contact::GroundParams;
use crate::dynamics::RobotParams;
use crate::erg::ErgGains;
use crate::gait::{GaitConfig, PidGains};
use crate::math::{Mat3, Vec3};
use crate::tip::{ConstraintParams, PdGains};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}`: cannot parse `{value}`")]
    InvalidValue { key: String, value: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("reading {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub robot: RobotParams<f64>,
    pub ground: GroundParams<f64>,
    /// Explicit Coulomb coefficient; when `None` it tracks `mu_c_ratio · mu_s`.
    pub mu_c_override: Option<f64>,
    pub mu_c_ratio: f64,
    pub gait: GaitConfig<f64>,
    pub erg: ErgGains<f64>,
    pub erg_enabled: bool,
    pub constraint_margin: f64,
    pub f_z_min: f64,
    pub pd: PdGains<f64>,
    pub pid: PidGains<f64>,
    /// Integration step (s).
    pub dt: f64,
    /// Four-foot standing time before the gait starts (s).
    pub settle: f64,
    pub init_height: f64,
    pub init_leg_length: f64,
    /// Reserved; logged only.
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
}

impl Default for SimConfig {
    fn default() -> Self {
        let mut cfg = Self {
            robot: RobotParams::default(),
            ground: GroundParams::default(),
            mu_c_override: None,
            mu_c_ratio: 0.9,
            gait: GaitConfig::default(),
            erg: ErgGains::default(),
            erg_enabled: true,
            constraint_margin: 0.0,
            f_z_min: 1.0,
            pd: PdGains::default(),
            pid: PidGains::default(),
            dt: 1e-3,
            settle: 0.3,
            init_height: 0.45,
            init_leg_length: 0.45,
            seed: 0,
            output_dir: None,
        };
        cfg.sync();
        cfg
    }
}

const KEYS: &[&str] = &[
    "robot.mass",
    "robot.inertia_xx",
    "robot.inertia_yy",
    "robot.inertia_zz",
    "robot.hip_x",
    "robot.hip_y",
    "robot.r_min",
    "robot.r_max",
    "robot.gravity",
    "ground.k_gz",
    "ground.k_dz",
    "ground.mu_s",
    "ground.mu_c",
    "ground.mu_c_ratio",
    "ground.mu_v",
    "ground.v_s",
    "gait.period",
    "gait.n_steps",
    "gait.swing_height",
    "gait.step_ahead",
    "gait.v_target",
    "gait.touchdown_depth",
    "erg.enabled",
    "erg.alpha",
    "erg.alpha_r",
    "erg.alpha_t",
    "erg.alpha_n",
    "erg.constraint_margin",
    "tip.f_z_min",
    "pd.kp",
    "pd.kd",
    "pid.kp",
    "pid.ki",
    "pid.kd",
    "sim.dt",
    "sim.settle",
    "sim.seed",
    "sim.output_dir",
    "init.height",
    "init.leg_length",
];

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    value
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| ConfigError::InvalidValue { key: key.into(), value: value.into() })
}

fn parse_int<I: std::str::FromStr>(key: &str, value: &str) -> Result<I, ConfigError> {
    value.parse().map_err(|_| ConfigError::InvalidValue { key: key.into(), value: value.into() })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(ConfigError::InvalidValue { key: key.into(), value: value.into() }),
    }
}

fn set_diag(m: &mut Mat3<f64>, i: usize, x: f64) {
    m.m[i][i] = x;
}

impl SimConfig {
    pub fn keys() -> &'static [&'static str] {
        KEYS
    }

    /// Sets one dotted key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        let f = || parse_f64(key, value);
        match key {
            "robot.mass" => self.robot.mass = f()?,
            "robot.inertia_xx" => set_diag(&mut self.robot.inertia, 0, f()?),
            "robot.inertia_yy" => set_diag(&mut self.robot.inertia, 1, f()?),
            "robot.inertia_zz" => set_diag(&mut self.robot.inertia, 2, f()?),
            "robot.hip_x" | "robot.hip_y" => {
                let x = f()?;
                let axis = if key == "robot.hip_x" { 0 } else { 1 };
                for h in self.robot.hip_offsets.iter_mut() {
                    h[axis] = x * h[axis].signum();
                }
            }
            "robot.r_min" => self.robot.r_min = f()?,
            "robot.r_max" => self.robot.r_max = f()?,
            "robot.gravity" => self.robot.gravity = Vec3::new(0.0, 0.0, -f()?),
            "ground.k_gz" => self.ground.k_gz = f()?,
            "ground.k_dz" => self.ground.k_dz = f()?,
            "ground.mu_s" => self.ground.mu_s = f()?,
            "ground.mu_c" => self.mu_c_override = Some(f()?),
            "ground.mu_c_ratio" => {
                self.mu_c_ratio = f()?;
                self.mu_c_override = None;
            }
            "ground.mu_v" => self.ground.mu_v = f()?,
            "ground.v_s" => self.ground.v_s = f()?,
            "gait.period" => self.gait.period = f()?,
            "gait.n_steps" => self.gait.n_steps = parse_int(key, value)?,
            "gait.swing_height" => self.gait.swing_height = f()?,
            "gait.step_ahead" => self.gait.step_ahead = f()?,
            "gait.v_target" => self.gait.v_target = f()?,
            "gait.touchdown_depth" => self.gait.touchdown_depth = f()?,
            "erg.enabled" => self.erg_enabled = parse_bool(key, value)?,
            "erg.alpha" => {
                let a = f()?;
                (self.erg.alpha_r, self.erg.alpha_t, self.erg.alpha_n) = (a, a, a);
            }
            "erg.alpha_r" => self.erg.alpha_r = f()?,
            "erg.alpha_t" => self.erg.alpha_t = f()?,
            "erg.alpha_n" => self.erg.alpha_n = f()?,
            "erg.constraint_margin" => self.constraint_margin = f()?,
            "tip.f_z_min" => self.f_z_min = f()?,
            "pd.kp" => self.pd.kp = Mat3::diag(Vec3::new(1.0, 1.0, 1.0)).scale(f()?),
            "pd.kd" => self.pd.kd = Mat3::diag(Vec3::new(1.0, 1.0, 1.0)).scale(f()?),
            "pid.kp" => self.pid.kp = f()?,
            "pid.ki" => self.pid.ki = f()?,
            "pid.kd" => self.pid.kd = f()?,
            "sim.dt" => self.dt = f()?,
            "sim.settle" => self.settle = f()?,
            "sim.seed" => self.seed = parse_int(key, value)?,
            "sim.output_dir" => self.output_dir = Some(PathBuf::from(value)),
            "init.height" => self.init_height = f()?,
            "init.leg_length" => self.init_leg_length = f()?,
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        self.sync();
        Ok(())
    }

    /// Re-derives dependent fields after an edit.
    fn sync(&mut self) {
        self.ground.mu_c = self.mu_c_override.unwrap_or(self.mu_c_ratio * self.ground.mu_s);
        self.erg.dt = self.dt;
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line: i + 1, text: raw.to_string() })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::Syntax { line: i + 1, text: raw.to_string() });
            }
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let wrap = |r: Result<(), String>| r.map_err(ConfigError::Invalid);
        wrap(self.robot.validate())?;
        wrap(self.ground.validate())?;
        wrap(self.gait.validate())?;
        wrap(self.erg.validate())?;
        wrap(self.pd.validate())?;
        if !(self.dt > 0.0) || self.dt > self.gait.period {
            return Err(ConfigError::Invalid(format!("sim.dt must be in (0, gait.period], got {}", self.dt)));
        }
        if !(self.settle >= 0.0) {
            return Err(ConfigError::Invalid("sim.settle must be non-negative".into()));
        }
        if !(self.f_z_min >= 0.0) || !(self.constraint_margin >= 0.0) {
            return Err(ConfigError::Invalid("tip.f_z_min and erg.constraint_margin must be non-negative".into()));
        }
        let pid = [self.pid.kp, self.pid.ki, self.pid.kd];
        if pid.iter().any(|g| !(*g >= 0.0)) {
            return Err(ConfigError::Invalid("PID gains must be non-negative".into()));
        }
        let r = self.init_leg_length;
        if !(self.robot.r_min <= r && r <= self.robot.r_max) || !(self.init_height > 0.0) {
            return Err(ConfigError::Invalid(format!("init.leg_length {r} outside the prismatic range")));
        }
        Ok(())
    }

    pub fn constraint_params(&self) -> ConstraintParams<f64> {
        ConstraintParams { mu_s: self.ground.mu_s, f_z_min: self.f_z_min, margin: self.constraint_margin }
    }

    pub fn total_time(&self) -> f64 {
        self.settle + self.gait.duration()
    }

    pub fn total_steps(&self) -> usize {
        (self.total_time() / self.dt).round() as usize
    }

    pub fn settle_steps(&self) -> usize {
        (self.settle / self.dt).round() as usize
    }

    /// Every key with its current value, in the input format. Parsing the
    /// output reproduces the configuration.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let r = &self.robot;
        let i = &r.inertia.m;
        let h = &r.hip_offsets[0];
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("robot.mass", r.mass.to_string());
        put("robot.inertia_xx", i[0][0].to_string());
        put("robot.inertia_yy", i[1][1].to_string());
        put("robot.inertia_zz", i[2][2].to_string());
        put("robot.hip_x", h.x.abs().to_string());
        put("robot.hip_y", h.y.abs().to_string());
        put("robot.r_min", r.r_min.to_string());
        put("robot.r_max", r.r_max.to_string());
        put("robot.gravity", (-r.gravity.z).to_string());
        let g = &self.ground;
        put("ground.k_gz", g.k_gz.to_string());
        put("ground.k_dz", g.k_dz.to_string());
        put("ground.mu_s", g.mu_s.to_string());
        match self.mu_c_override {
            Some(mu_c) => put("ground.mu_c", mu_c.to_string()),
            None => put("ground.mu_c_ratio", self.mu_c_ratio.to_string()),
        }
        put("ground.mu_v", g.mu_v.to_string());
        put("ground.v_s", g.v_s.to_string());
        let gt = &self.gait;
        put("gait.period", gt.period.to_string());
        put("gait.n_steps", gt.n_steps.to_string());
        put("gait.swing_height", gt.swing_height.to_string());
        put("gait.step_ahead", gt.step_ahead.to_string());
        put("gait.v_target", gt.v_target.to_string());
        put("gait.touchdown_depth", gt.touchdown_depth.to_string());
        put("erg.enabled", self.erg_enabled.to_string());
        put("erg.alpha_r", self.erg.alpha_r.to_string());
        put("erg.alpha_t", self.erg.alpha_t.to_string());
        put("erg.alpha_n", self.erg.alpha_n.to_string());
        put("erg.constraint_margin", self.constraint_margin.to_string());
        put("tip.f_z_min", self.f_z_min.to_string());
        put("pd.kp", self.pd.kp.m[0][0].to_string());
        put("pd.kd", self.pd.kd.m[0][0].to_string());
        put("pid.kp", self.pid.kp.to_string());
        put("pid.ki", self.pid.ki.to_string());
        put("pid.kd", self.pid.kd.to_string());
        put("sim.dt", self.dt.to_string());
        put("sim.settle", self.settle.to_string());
        put("sim.seed", self.seed.to_string());
        if let Some(dir) = &self.output_dir {
            put("sim.output_dir", dir.display().to_string());
        }
        put("init.height", self.init_height.to_string());
        put("init.leg_length", self.init_leg_length.to_string());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = SimConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.total_steps(), 5300);
        assert!((cfg.ground.mu_c - 0.18).abs() < 1e-15);
    }

    #[test]
    fn parse_with_comments_and_overrides() {
        let cfg = SimConfig::parse("# c\n\nground.mu_s = 0.4  # later\ngait.n_steps=4\nerg.enabled = false\n").unwrap();
        assert_eq!(cfg.ground.mu_s, 0.4);
        assert!((cfg.ground.mu_c - 0.36).abs() < 1e-15);
        assert_eq!(cfg.gait.n_steps, 4);
        assert!(!cfg.erg_enabled);
    }

    #[test]
    fn unknown_key_is_rejected() {
        assert_eq!(SimConfig::parse("ground.mu = 0.2"), Err(ConfigError::UnknownKey("ground.mu".into())));
    }

    #[test]
    fn bad_lines_are_rejected() {
        assert!(matches!(SimConfig::parse("ground.mu_s 0.2"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(SimConfig::parse("ground.mu_s = abc"), Err(ConfigError::InvalidValue { .. })));
        assert!(matches!(SimConfig::parse("ground.mu_s = nan"), Err(ConfigError::InvalidValue { .. })));
        assert!(matches!(SimConfig::parse("robot.mass = -1"), Err(ConfigError::Invalid(_))));
        assert!(matches!(SimConfig::parse("pd.kp = 0"), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = SimConfig::default();
        cfg.set("ground.mu_s", "0.35").unwrap();
        cfg.set("robot.hip_x", "0.3").unwrap();
        cfg.set("erg.alpha", "25").unwrap();
        cfg.set("sim.seed", "7").unwrap();
        let back = SimConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.robot.hip_offsets[3], Vec3::new(-0.3, -0.15, 0.0));
    }

    #[test]
    fn every_key_is_settable() {
        for key in SimConfig::keys() {
            let mut cfg = SimConfig::default();
            let value = match *key {
                "gait.n_steps" | "sim.seed" => "3",
                "erg.enabled" => "true",
                "sim.output_dir" => "out",
                _ => "0.5",
            };
            cfg.set(key, value).unwrap_or_else(|e| panic!("{key}: {e}"));
        }
    }
}
