//! Run and sweep configuration: JSON documents overridden by flags.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use clap::Args;
use qwalk_core::{CoinAngle, CoinSchedule, InitialCoinState, PositionProfile};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CliError;

/// Angle in radians, parsed from a number or a `"0.25pi"`-style literal.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Angle(pub f64);

impl FromStr for Angle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let bad = || format!("invalid angle {s:?}: expected radians or a multiple of pi such as 0.25pi");
        let Some(coef) = t.strip_suffix("pi") else {
            return t.parse::<f64>().map(Angle).map_err(|_| bad());
        };
        let coef = coef.trim().trim_end_matches('*').trim();
        let value = match coef {
            "" | "+" => 1.0,
            "-" => -1.0,
            c => match c.split_once('/') {
                Some((n, d)) => {
                    let n: f64 = n.trim().parse().map_err(|_| bad())?;
                    let d: f64 = d.trim().parse().map_err(|_| bad())?;
                    n / d
                }
                None => c.parse().map_err(|_| bad())?,
            },
        };
        let v = value * PI;
        if v.is_finite() {
            Ok(Angle(v))
        } else {
            Err(bad())
        }
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Lit {
            Num(f64),
            Text(String),
        }
        match Lit::deserialize(d)? {
            Lit::Num(v) => Ok(Angle(v)),
            Lit::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Position profile literal: `point`, `point:X0`, `gaussian:W` or `gaussian:W:X0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSpec(pub PositionProfile);

impl Default for ProfileSpec {
    fn default() -> Self {
        Self(PositionProfile::point(0))
    }
}

impl FromStr for ProfileSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |why: &str| format!("invalid profile {s:?}: {why}");
        let mut parts = s.trim().split(':');
        let kind = parts.next().unwrap_or_default();
        let rest: Vec<&str> = parts.collect();
        let center = |p: Option<&&str>| -> Result<i64, String> {
            p.map_or(Ok(0), |c| c.parse().map_err(|_| bad("center must be an integer")))
        };
        match kind {
            "point" if rest.len() <= 1 => Ok(Self(PositionProfile::point(center(rest.first())?))),
            "gaussian" if (1..=2).contains(&rest.len()) => {
                let w: f64 = rest[0].parse().map_err(|_| bad("width must be a number"))?;
                PositionProfile::gaussian(center(rest.get(1))?, w)
                    .map(Self)
                    .map_err(|e| bad(&e.to_string()))
            }
            _ => Err(bad("expected point, point:X0, gaussian:W or gaussian:W:X0")),
        }
    }
}

impl fmt::Display for ProfileSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            PositionProfile::Point { center } => write!(f, "point:{center}"),
            PositionProfile::Gaussian { center, width } => write!(f, "gaussian:{width}:{center}"),
        }
    }
}

impl Serialize for ProfileSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ProfileSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    #[default]
    Homogeneous,
    NPeriod,
    SplitStep,
    Explicit,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSpec {
    pub kind: ScheduleKind,
    pub n: Option<u32>,
    pub theta1: Option<Angle>,
    pub theta2: Option<Angle>,
    pub thetas: Option<Vec<Angle>>,
}

impl ScheduleSpec {
    pub fn build(&self) -> Result<CoinSchedule, CliError> {
        let need = |a: Option<Angle>, field: &str| {
            a.map(|a| a.0)
                .ok_or_else(|| CliError::Config(format!("schedule.{field} is required for a {:?} schedule", self.kind)))
        };
        Ok(match self.kind {
            ScheduleKind::Homogeneous => CoinSchedule::homogeneous(need(self.theta1, "theta1")?),
            ScheduleKind::NPeriod => {
                let n = self
                    .n
                    .ok_or_else(|| CliError::Config("schedule.n is required for an n-period schedule".into()))?;
                CoinSchedule::n_period(n, need(self.theta1, "theta1")?, need(self.theta2, "theta2")?)
                    .map_err(|e| CliError::Config(format!("schedule.n: {e}")))?
            }
            ScheduleKind::SplitStep => {
                CoinSchedule::split_step(need(self.theta1, "theta1")?, need(self.theta2, "theta2")?)
            }
            ScheduleKind::Explicit => {
                let thetas = self
                    .thetas
                    .as_ref()
                    .ok_or_else(|| CliError::Config("schedule.thetas is required for an explicit schedule".into()))?;
                CoinSchedule::explicit(thetas.iter().map(|a| CoinAngle(a.0)).collect())
            }
        })
    }

    /// Same kind with the two angles replaced.
    pub fn with_angles(&self, theta1: f64, theta2: f64) -> Self {
        Self {
            theta1: Some(Angle(theta1)),
            theta2: Some(Angle(theta2)),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSpec {
    pub delta: Angle,
    pub eta: Angle,
    pub profile: ProfileSpec,
}

impl Default for InitialSpec {
    fn default() -> Self {
        Self {
            delta: Angle(0.0),
            eta: Angle(0.0),
            profile: ProfileSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSpec {
    /// Probability mass for the quantile radius.
    pub mass: f64,
    /// Threshold for the support radius.
    pub eps: f64,
    pub entropy: bool,
    /// Emit the complex amplitudes next to the probabilities.
    pub amplitudes: bool,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        Self {
            mass: qwalk_core::analysis::DEFAULT_QUANTILE_MASS,
            eps: qwalk_core::analysis::DEFAULT_SUPPORT_EPS,
            entropy: true,
            amplitudes: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schedule: ScheduleSpec,
    pub initial: InitialSpec,
    pub steps: u64,
    pub record_at: Vec<u64>,
    pub analysis: AnalysisSpec,
    /// Reserved; the dynamics is deterministic.
    pub seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schedule: ScheduleSpec::default(),
            initial: InitialSpec::default(),
            steps: 100,
            record_at: Vec::new(),
            analysis: AnalysisSpec::default(),
            seed: None,
        }
    }
}

/// Everything a single run needs, validated.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub schedule: CoinSchedule,
    pub coin: InitialCoinState,
    pub profile: PositionProfile,
    pub steps: u64,
    pub record_at: Vec<u64>,
    pub analysis: AnalysisSpec,
}

impl RunConfig {
    pub fn resolve(&self) -> Result<ResolvedRun, CliError> {
        let schedule = self.schedule.build()?;
        schedule
            .validate(self.steps)
            .map_err(|e| CliError::Config(format!("schedule: {e}")))?;
        if let Some(&s) = self.record_at.iter().find(|&&s| s > self.steps) {
            return Err(CliError::Config(format!(
                "record_at: step {s} exceeds steps = {}",
                self.steps
            )));
        }
        let a = &self.analysis;
        if !(a.mass > 0.0 && a.mass <= 1.0) {
            return Err(CliError::Config(format!("analysis.mass must be in (0, 1], got {}", a.mass)));
        }
        if !(a.eps >= 0.0 && a.eps.is_finite()) {
            return Err(CliError::Config(format!("analysis.eps must be finite and >= 0, got {}", a.eps)));
        }
        Ok(ResolvedRun {
            schedule,
            coin: InitialCoinState::new(self.initial.delta.0, self.initial.eta.0),
            profile: self.initial.profile.0,
            steps: self.steps,
            record_at: self.record_at.clone(),
            analysis: a.clone(),
        })
    }
}

/// Flags shared by the run-based commands. Each one overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON run configuration.
    #[arg(long, value_name = "PATH")]
    pub config: Option<std::path::PathBuf>,
    /// Number of walk steps.
    #[arg(long, value_name = "T")]
    pub steps: Option<u64>,
    /// First coin angle (radians or e.g. 0.25pi).
    #[arg(long, value_name = "A", allow_hyphen_values = true)]
    pub theta1: Option<Angle>,
    /// Second coin angle.
    #[arg(long, value_name = "A", allow_hyphen_values = true)]
    pub theta2: Option<Angle>,
    /// Period n: 1 for a homogeneous walk, n >= 2 applies theta2 every n-th step.
    #[arg(long, value_name = "N")]
    pub period: Option<u32>,
    /// Use the split-step walk.
    #[arg(long)]
    pub split_step: bool,
    /// Initial coin angle delta in (cos delta, e^{-i eta} sin delta).
    #[arg(long, value_name = "A", allow_hyphen_values = true)]
    pub delta: Option<Angle>,
    /// Initial relative phase eta.
    #[arg(long, value_name = "A", allow_hyphen_values = true)]
    pub eta: Option<Angle>,
    /// point, point:X0, gaussian:W or gaussian:W:X0.
    #[arg(long, value_name = "SPEC")]
    pub profile: Option<ProfileSpec>,
    /// Extra steps to record, comma separated.
    #[arg(long, value_name = "S1,S2,..", value_delimiter = ',')]
    pub record: Option<Vec<u64>>,
    /// Probability mass for the quantile radius.
    #[arg(long, value_name = "Q")]
    pub mass: Option<f64>,
    /// Support-radius threshold.
    #[arg(long, value_name = "E")]
    pub eps: Option<f64>,
    /// Emit amplitudes in distribution files.
    #[arg(long)]
    pub amplitudes: bool,
    /// Reserved; the dynamics is deterministic.
    #[arg(long, value_name = "SEED")]
    pub seed: Option<u64>,
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

impl RunArgs {
    /// Config file (if any) with the flags applied on top.
    pub fn merge(&self, base: Option<RunConfig>) -> Result<RunConfig, CliError> {
        let mut cfg = match (&self.config, base) {
            (Some(p), _) => read_json(p)?,
            (None, Some(b)) => b,
            (None, None) => RunConfig::default(),
        };
        self.apply(&mut cfg)?;
        Ok(cfg)
    }

    pub fn apply(&self, cfg: &mut RunConfig) -> Result<(), CliError> {
        let s = &mut cfg.schedule;
        if self.split_step && self.period.is_some_and(|n| n != 1) {
            return Err(CliError::Config("--split-step and --period are mutually exclusive".into()));
        }
        if self.split_step {
            s.kind = ScheduleKind::SplitStep;
        }
        match self.period {
            Some(0) => return Err(CliError::Config("--period must be at least 1".into())),
            Some(1) => {
                s.kind = ScheduleKind::Homogeneous;
                s.n = None;
            }
            Some(n) => {
                s.kind = ScheduleKind::NPeriod;
                s.n = Some(n);
            }
            None => {}
        }
        if self.theta1.is_some() {
            s.theta1 = self.theta1;
        }
        if self.theta2.is_some() {
            s.theta2 = self.theta2;
        }
        if let Some(t) = self.steps {
            cfg.steps = t;
        }
        if let Some(d) = self.delta {
            cfg.initial.delta = d;
        }
        if let Some(e) = self.eta {
            cfg.initial.eta = e;
        }
        if let Some(p) = &self.profile {
            cfg.initial.profile = p.clone();
        }
        if let Some(r) = &self.record {
            cfg.record_at = r.clone();
        }
        if let Some(m) = self.mass {
            cfg.analysis.mass = m;
        }
        if let Some(e) = self.eps {
            cfg.analysis.eps = e;
        }
        if self.amplitudes {
            cfg.analysis.amplitudes = true;
        }
        if self.seed.is_some() {
            cfg.seed = self.seed;
        }
        Ok(())
    }
}

/// Inclusive angle grid `start:stop:count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: Angle,
    pub stop: Angle,
    pub count: usize,
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts.as_slice() else {
            return Err(format!("invalid grid {s:?}: expected START:STOP:COUNT"));
        };
        Ok(Self {
            start: a.parse()?,
            stop: b.parse()?,
            count: n.parse().map_err(|_| format!("invalid grid count in {s:?}"))?,
        })
    }
}

impl Grid {
    pub fn validate(&self, name: &str) -> Result<(), CliError> {
        const SLACK: f64 = 1e-12;
        if self.count == 0 {
            return Err(CliError::Config(format!("{name}.count must be at least 1")));
        }
        for (which, v) in [("start", self.start.0), ("stop", self.stop.0)] {
            if !(-SLACK..=PI + SLACK).contains(&v) {
                return Err(CliError::Config(format!("{name}.{which} = {v} lies outside [0, pi]")));
            }
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start.0];
        }
        let step = (self.stop.0 - self.start.0) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.start.0 + step * i as f64).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub base: RunConfig,
    pub theta1: Option<Grid>,
    pub theta2: Option<Grid>,
}
