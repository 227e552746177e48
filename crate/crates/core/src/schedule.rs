//! Angle schedules `θ_k` and depth schedules `α_{i,k}`.
//!
//! Besides point evaluation, each schedule reports its asymptotic [`Decay`]
//! so infinite-sum hypotheses can be classified in closed form for the known
//! families (constant, `c/(k+1)^p`, geometric). Tabulated schedules are
//! `Unknown`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("angle cap {0} violates 0 <= theta* < pi/2")]
    AngleCap(f64),
    #[error("angle {value} at step {step} outside [0, theta* = {cap}]")]
    AngleOutOfRange { step: usize, value: f64, cap: f64 },
    #[error("angle table is empty")]
    EmptyAngleTable,
    #[error("depth {value} outside [0, 1] ({context})")]
    DepthOutOfRange { value: f64, context: String },
    #[error("per-node depth table has {found} rows, network has {expected} nodes")]
    DepthRows { expected: usize, found: usize },
    #[error("per-node depth table row {0} is empty")]
    EmptyDepthRow(usize),
}

/// Asymptotic shape of a nonnegative sequence `s_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decay {
    /// `s_k = 0` for all `k`.
    Zero,
    /// `s_k = c / (k+1)^p` with `c > 0`; `p = 0` is a positive constant.
    Power { c: f64, p: f64 },
    /// `s_k = c * ratio^k` with `c > 0`, `0 <= ratio < 1`.
    Geometric { c: f64, ratio: f64 },
    Unknown,
}

/// Closed-form verdict on `Σ_k s_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum SeriesClass {
    Divergent,
    /// Converges; `total` is the exact sum when the family has a closed form.
    Summable { total: Option<f64> },
    Unclassified,
}

impl Decay {
    fn power(c: f64, p: f64) -> Decay {
        if c == 0.0 {
            Decay::Zero
        } else {
            Decay::Power { c, p }
        }
    }

    fn geometric(c: f64, ratio: f64) -> Decay {
        if c == 0.0 {
            Decay::Zero
        } else {
            Decay::Geometric { c, ratio }
        }
    }

    pub fn classify(self) -> SeriesClass {
        match self {
            Decay::Zero => SeriesClass::Summable { total: Some(0.0) },
            Decay::Power { p, .. } if p <= 1.0 => SeriesClass::Divergent,
            Decay::Power { .. } => SeriesClass::Summable { total: None },
            Decay::Geometric { c, ratio } => SeriesClass::Summable { total: Some(c / (1.0 - ratio)) },
            Decay::Unknown => SeriesClass::Unclassified,
        }
    }

    /// Decay of the termwise product `s_k * t_k`, where it is known.
    pub fn times(self, other: Decay) -> Option<Decay> {
        use Decay::*;
        match (self, other) {
            (Zero, _) | (_, Zero) => Some(Zero),
            (Unknown, _) | (_, Unknown) => Some(Unknown),
            (Power { c: a, p }, Power { c: b, p: q }) => Some(Power { c: a * b, p: p + q }),
            (Geometric { c: a, ratio: r }, Geometric { c: b, ratio: s }) => {
                Some(Geometric { c: a * b, ratio: r * s })
            }
            (Geometric { c: a, ratio }, Power { c: b, p }) | (Power { c: b, p }, Geometric { c: a, ratio }) => {
                if p == 0.0 {
                    Some(Geometric { c: a * b, ratio })
                } else {
                    // Summable, but the sum has no elementary closed form.
                    None
                }
            }
        }
    }
}

/// Classification of `Σ s_k t_k`.
pub fn classify_product(a: Decay, b: Decay) -> SeriesClass {
    match a.times(b) {
        Some(d) => d.classify(),
        None => SeriesClass::Summable { total: None },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AngleRule {
    Constant { value: f64 },
    /// `θ_k = c / (k+1)`.
    Harmonic { c: f64 },
    /// `θ_k = values[k]`, holding the last entry past the end.
    Table { values: Vec<f64> },
}

/// The approximation-angle schedule with its cap `θ*`.
///
/// When `cap` is omitted it defaults to the supremum of the rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleSchedule {
    #[serde(flatten)]
    pub rule: AngleRule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<f64>,
}

impl AngleSchedule {
    pub fn constant(value: f64) -> Self {
        AngleSchedule { rule: AngleRule::Constant { value }, cap: None }
    }

    pub fn harmonic(c: f64) -> Self {
        AngleSchedule { rule: AngleRule::Harmonic { c }, cap: None }
    }

    pub fn table(values: Vec<f64>) -> Self {
        AngleSchedule { rule: AngleRule::Table { values }, cap: None }
    }

    pub fn with_cap(mut self, cap: f64) -> Self {
        self.cap = Some(cap);
        self
    }

    pub fn at(&self, k: usize) -> f64 {
        match &self.rule {
            AngleRule::Constant { value } => *value,
            AngleRule::Harmonic { c } => c / (k as f64 + 1.0),
            AngleRule::Table { values } => values
                .get(k)
                .or(values.last())
                .copied()
                .unwrap_or(0.0),
        }
    }

    fn supremum(&self) -> f64 {
        match &self.rule {
            AngleRule::Constant { value } => *value,
            AngleRule::Harmonic { c } => *c,
            AngleRule::Table { values } => values.iter().copied().fold(0.0, f64::max),
        }
    }

    /// `θ*`, explicit or implied.
    pub fn cap(&self) -> f64 {
        self.cap.unwrap_or_else(|| self.supremum())
    }

    /// Checks `0 <= θ_k <= θ* < π/2` for every `k`.
    pub fn validate(&self) -> Result<(), ScheduleError> {
        let cap = self.cap();
        if !(cap.is_finite() && (0.0..FRAC_PI_2).contains(&cap)) {
            return Err(ScheduleError::AngleCap(cap));
        }
        let check = |step: usize, value: f64| {
            if value.is_finite() && value >= 0.0 && value <= cap {
                Ok(())
            } else {
                Err(ScheduleError::AngleOutOfRange { step, value, cap })
            }
        };
        match &self.rule {
            AngleRule::Constant { value } => check(0, *value),
            // c/(k+1) is maximal at k = 0
            AngleRule::Harmonic { c } => check(0, *c),
            AngleRule::Table { values } => {
                if values.is_empty() {
                    return Err(ScheduleError::EmptyAngleTable);
                }
                values.iter().enumerate().try_for_each(|(k, v)| check(k, *v))
            }
        }
    }

    pub fn decay(&self) -> Decay {
        match &self.rule {
            AngleRule::Constant { value } => Decay::power(*value, 0.0),
            AngleRule::Harmonic { c } => Decay::power(*c, 1.0),
            AngleRule::Table { values } if values.iter().all(|v| *v == 0.0) => Decay::Zero,
            AngleRule::Table { .. } => Decay::Unknown,
        }
    }
}

/// The projection-depth schedule `α_{i,k} ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DepthSchedule {
    Constant { value: f64 },
    /// `α_k = c / (k+1)`.
    Harmonic { c: f64 },
    /// `α_k = c / (k+1)^p`.
    Power { c: f64, p: f64 },
    /// `α_k = c * ratio^k`.
    Geometric { c: f64, ratio: f64 },
    /// `α_{i,k} = values[i][k]`, holding each row's last entry past its end.
    PerNode { values: Vec<Vec<f64>> },
}

impl DepthSchedule {
    pub fn constant(value: f64) -> Self {
        DepthSchedule::Constant { value }
    }

    pub fn at(&self, node: usize, k: usize) -> f64 {
        let kf = k as f64 + 1.0;
        match self {
            DepthSchedule::Constant { value } => *value,
            DepthSchedule::Harmonic { c } => c / kf,
            DepthSchedule::Power { c, p } => c / kf.powf(*p),
            DepthSchedule::Geometric { c, ratio } => c * ratio.powf(k as f64),
            DepthSchedule::PerNode { values } => {
                let row = &values[node];
                row.get(k).or(row.last()).copied().unwrap_or(0.0)
            }
        }
    }

    /// `α⁻_k = min_i α_{i,k}` over `n` nodes.
    pub fn min_at(&self, n: usize, k: usize) -> f64 {
        (0..n).map(|i| self.at(i, k)).fold(f64::INFINITY, f64::min)
    }

    /// `α⁺_k = max_i α_{i,k}` over `n` nodes.
    pub fn max_at(&self, n: usize, k: usize) -> f64 {
        (0..n).map(|i| self.at(i, k)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Checks `0 <= α_{i,k} <= 1` for all nodes and steps.
    pub fn validate(&self, n: usize) -> Result<(), ScheduleError> {
        let unit = |value: f64, context: &str| {
            if value.is_finite() && (0.0..=1.0).contains(&value) {
                Ok(())
            } else {
                Err(ScheduleError::DepthOutOfRange { value, context: context.to_string() })
            }
        };
        match self {
            DepthSchedule::Constant { value } => unit(*value, "constant"),
            DepthSchedule::Harmonic { c } => unit(*c, "harmonic c"),
            DepthSchedule::Power { c, p } => {
                unit(*c, "power c")?;
                if !(p.is_finite() && *p >= 0.0) {
                    return Err(ScheduleError::DepthOutOfRange {
                        value: *p,
                        context: "power exponent p must be >= 0".into(),
                    });
                }
                Ok(())
            }
            DepthSchedule::Geometric { c, ratio } => {
                unit(*c, "geometric c")?;
                if !(ratio.is_finite() && (0.0..1.0).contains(ratio)) {
                    return Err(ScheduleError::DepthOutOfRange {
                        value: *ratio,
                        context: "geometric ratio must lie in [0, 1)".into(),
                    });
                }
                Ok(())
            }
            DepthSchedule::PerNode { values } => {
                if values.len() != n {
                    return Err(ScheduleError::DepthRows { expected: n, found: values.len() });
                }
                for (i, row) in values.iter().enumerate() {
                    if row.is_empty() {
                        return Err(ScheduleError::EmptyDepthRow(i));
                    }
                    for (k, v) in row.iter().enumerate() {
                        unit(*v, &format!("node {i}, step {k}"))?;
                    }
                }
                Ok(())
            }
        }
    }

    fn uniform_decay(&self) -> Option<Decay> {
        match self {
            DepthSchedule::Constant { value } => Some(Decay::power(*value, 0.0)),
            DepthSchedule::Harmonic { c } => Some(Decay::power(*c, 1.0)),
            DepthSchedule::Power { c, p } => Some(Decay::power(*c, *p)),
            DepthSchedule::Geometric { c, ratio } => Some(Decay::geometric(*c, *ratio)),
            DepthSchedule::PerNode { .. } => None,
        }
    }

    /// Decay of `α⁻_k`. Per-node tables are unclassified.
    pub fn min_decay(&self) -> Decay {
        self.uniform_decay().unwrap_or(Decay::Unknown)
    }

    /// Decay of `α⁺_k`. Per-node tables are unclassified.
    pub fn max_decay(&self) -> Decay {
        self.uniform_decay().unwrap_or(Decay::Unknown)
    }
}
