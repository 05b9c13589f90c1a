//! Partial-identification bounds and their LogSumExp-smoothed versions.
//!
//! Every estimator reads plug-in quantities from a [`FrequencyModel`], so the
//! same code runs on sample frequencies and on the exact observed margin of a
//! simulated joint.

mod estimators;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freq::FrequencyModel;

pub use estimators::{
    ett_bounds_w, ett_bounds_wz, ett_bounds_z, frontdoor_po_bounds, g_formula, mediation_bound,
    po_bounds_w, po_bounds_wz, po_bounds_z,
};

/// Default LSE smoothing parameter.
pub const DEFAULT_ALPHA: f64 = 50.0;

/// Causal quantities the crate can bound. `a` is the treatment level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Estimand {
    /// E[Y^(a) | A = 1 − a]
    EttMean(u8),
    /// E[Y^(a)]
    PoMean(u8),
    /// E[Y | A = a], point identified.
    ObservedMean(u8),
    /// E[Y^(1) | A = 1] − E[Y^(0) | A = 1]
    Ett,
    /// E[Y^(1)] − E[Y^(0)]
    Ate,
    /// E[Y^(1, M^(0))]
    CrossWorld,
    Nie,
    Nde,
    /// E[Y^(a)] in the front-door model.
    FrontdoorPoMean(u8),
}

impl fmt::Display for Estimand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Estimand::EttMean(a) => write!(f, "ett-mean({a})"),
            Estimand::PoMean(a) => write!(f, "po-mean({a})"),
            Estimand::ObservedMean(a) => write!(f, "observed-mean({a})"),
            Estimand::Ett => f.write_str("ett"),
            Estimand::Ate => f.write_str("ate"),
            Estimand::CrossWorld => f.write_str("cross-world"),
            Estimand::Nie => f.write_str("nie"),
            Estimand::Nde => f.write_str("nde"),
            Estimand::FrontdoorPoMean(a) => write!(f, "frontdoor-po-mean({a})"),
        }
    }
}

impl FromStr for Estimand {
    type Err = Error;

    /// Accepts `ett-mean(0)`, `ett-mean:0`, `ATE`, `mediation-cross-world`, …
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let bad = || Error::InvalidArgument(format!("unknown estimand `{s}`"));
        let (name, level) = match s.find(['(', ':']) {
            Some(i) => {
                let level = s[i + 1..].trim_end_matches(')');
                let level: u8 = level.parse().map_err(|_| bad())?;
                if level > 1 {
                    return Err(bad());
                }
                (&s[..i], Some(level))
            }
            None => (s.as_str(), None),
        };
        let with_level = |f: fn(u8) -> Estimand| level.map(f).ok_or_else(bad);
        match name {
            "ett-mean" => with_level(Estimand::EttMean),
            "po-mean" => with_level(Estimand::PoMean),
            "observed-mean" => with_level(Estimand::ObservedMean),
            "frontdoor-po-mean" => with_level(Estimand::FrontdoorPoMean),
            "ett" if level.is_none() => Ok(Estimand::Ett),
            "ate" if level.is_none() => Ok(Estimand::Ate),
            "cross-world" | "mediation-cross-world" if level.is_none() => Ok(Estimand::CrossWorld),
            "nie" if level.is_none() => Ok(Estimand::Nie),
            "nde" if level.is_none() => Ok(Estimand::Nde),
            _ => Err(bad()),
        }
    }
}

impl Serialize for Estimand {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Estimand {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Which proxy construction a bound uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Outcome confounding proxy.
    W,
    /// Treatment confounding proxy.
    Z,
    /// Two conditionally independent proxies.
    WZ,
    #[serde(rename = "mediation")]
    Mediation,
    #[serde(rename = "frontdoor")]
    Frontdoor,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::W => "W",
            Method::Z => "Z",
            Method::WZ => "WZ",
            Method::Mediation => "mediation",
            Method::Frontdoor => "frontdoor",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "w" => Ok(Method::W),
            "z" => Ok(Method::Z),
            "wz" => Ok(Method::WZ),
            "mediation" => Ok(Method::Mediation),
            "frontdoor" | "front-door" => Ok(Method::Frontdoor),
            other => Err(Error::InvalidArgument(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Self {
        Interval { lower, upper }
    }

    pub fn point(v: f64) -> Self {
        Interval { lower: v, upper: v }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }

    /// Signed distance of `v` inside the interval (negative when outside).
    pub fn margin(&self, v: f64) -> f64 {
        (v - self.lower).min(self.upper - v)
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lower <= other.lower && other.upper <= self.upper
    }

    fn scale_shift(&self, scale: f64, shift: f64) -> Interval {
        Interval::new(self.lower * scale + shift, self.upper * scale + shift)
    }
}

/// Whether the trivial outcome-range bound was the binding term.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clamped {
    pub lower: bool,
    pub upper: bool,
}

/// The extremized quantity of one covariate stratum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceDetail {
    pub x: usize,
    /// Hard extremum used in the lower bound (min over proxy levels).
    pub lower_extremum: f64,
    /// Hard extremum used in the upper bound (max over proxy levels).
    pub upper_extremum: f64,
    /// LSE with −α and +α, when smoothing is on.
    pub smoothed_lower: Option<f64>,
    pub smoothed_upper: Option<f64>,
    /// Some proxy level had positive numerator mass but zero denominator;
    /// the stratum fell back to the trivial bound.
    pub undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub estimand: Estimand,
    pub method: Method,
    pub hard: Interval,
    pub smoothed: Interval,
    /// LSE parameter; `None` means hard bounds only (smoothed = hard).
    pub alpha: Option<f64>,
    pub clamped: Clamped,
    pub ratio_details: Vec<SliceDetail>,
    pub diagnostics: Vec<String>,
}

impl BoundsReport {
    /// Interval used for inference: the smoothed one.
    pub fn inference_interval(&self) -> Interval {
        self.smoothed
    }
}

pub(crate) fn check_alpha(alpha: Option<f64>) -> Result<()> {
    match alpha {
        Some(a) if !(a > 0.0 && a.is_finite()) => Err(Error::InvalidArgument(format!(
            "LSE parameter α = {a} must be positive and finite (omit it for hard bounds)"
        ))),
        _ => Ok(()),
    }
}

/// Difference composition: [L(plus) − U(minus), U(plus) − L(minus)].
///
/// * ATE = PoMean(1) − PoMean(0)
/// * ETT = ObservedMean(1) − EttMean(0)
/// * NIE = PoMean(1) − CrossWorld
/// * NDE = CrossWorld − PoMean(0)
pub fn compose_effect(parts: &BTreeMap<Estimand, Interval>, target: Estimand) -> Result<Interval> {
    let (plus, minus) = effect_terms(target)?;
    let get = |e: Estimand| parts.get(&e).copied().ok_or(Error::MissingComponent(e));
    let (p, m) = (get(plus)?, get(minus)?);
    Ok(Interval::new(p.lower - m.upper, p.upper - m.lower))
}

fn effect_terms(target: Estimand) -> Result<(Estimand, Estimand)> {
    match target {
        Estimand::Ate => Ok((Estimand::PoMean(1), Estimand::PoMean(0))),
        Estimand::Ett => Ok((Estimand::ObservedMean(1), Estimand::EttMean(0))),
        Estimand::Nie => Ok((Estimand::PoMean(1), Estimand::CrossWorld)),
        Estimand::Nde => Ok((Estimand::CrossWorld, Estimand::PoMean(0))),
        other => Err(Error::InvalidArgument(format!("{other} is not a contrast"))),
    }
}

/// [max of lowers, min of uppers]; an empty result means at least one
/// input was built under a violated assumption.
pub fn intersect_bounds(intervals: &[Interval]) -> Result<Interval> {
    if intervals.is_empty() {
        return Err(Error::InvalidArgument("nothing to intersect".into()));
    }
    let lower = intervals
        .iter()
        .map(|i| i.lower)
        .fold(f64::NEG_INFINITY, f64::max);
    let upper = intervals
        .iter()
        .map(|i| i.upper)
        .fold(f64::INFINITY, f64::min);
    if lower > upper {
        return Err(Error::EmptyIntersection { lower, upper });
    }
    Ok(Interval::new(lower, upper))
}

/// Bounds on `estimand` by `method`, composing contrasts from their
/// potential-outcome components.
pub fn estimate(
    model: &FrequencyModel,
    method: Method,
    estimand: Estimand,
    alpha: Option<f64>,
) -> Result<BoundsReport> {
    check_alpha(alpha)?;
    let unsupported =
        || Error::InvalidArgument(format!("method {method} does not bound {estimand}"));
    match (method, estimand) {
        (Method::W, Estimand::EttMean(a)) => ett_bounds_w(model, a, alpha),
        (Method::W, Estimand::PoMean(a)) => po_bounds_w(model, a, alpha),
        (Method::Z, Estimand::EttMean(a)) => ett_bounds_z(model, a, alpha),
        (Method::Z, Estimand::PoMean(a)) => po_bounds_z(model, a, alpha),
        (Method::WZ, Estimand::EttMean(a)) => ett_bounds_wz(model, a, alpha),
        (Method::WZ, Estimand::PoMean(a)) => po_bounds_wz(model, a, alpha),
        (Method::Mediation, Estimand::CrossWorld) => mediation_bound(model, alpha),
        (Method::Mediation, Estimand::PoMean(a)) => g_formula(model, a, method, alpha),
        (Method::Frontdoor, Estimand::FrontdoorPoMean(a) | Estimand::PoMean(a)) => {
            frontdoor_po_bounds(model, a, alpha)
        }
        (_, Estimand::ObservedMean(a)) => {
            let v = model.mean_y_a(a as usize)?;
            Ok(point_report(estimand, method, alpha, v))
        }
        (Method::W | Method::Z | Method::WZ, Estimand::Ate | Estimand::Ett)
        | (Method::Mediation, Estimand::Ate | Estimand::Nie | Estimand::Nde)
        | (Method::Frontdoor, Estimand::Ate) => {
            let (plus, minus) = effect_terms(estimand)?;
            let mut hard = BTreeMap::new();
            let mut smoothed = BTreeMap::new();
            let mut diagnostics = Vec::new();
            let mut clamped = Clamped::default();
            for part in [plus, minus] {
                let r = estimate(model, method, part, alpha)?;
                hard.insert(part, r.hard);
                smoothed.insert(part, r.smoothed);
                clamped.lower |= r.clamped.lower;
                clamped.upper |= r.clamped.upper;
                diagnostics.extend(r.diagnostics.into_iter().map(|d| format!("{part}: {d}")));
            }
            Ok(BoundsReport {
                estimand,
                method,
                hard: compose_effect(&hard, estimand)?,
                smoothed: compose_effect(&smoothed, estimand)?,
                alpha,
                clamped,
                ratio_details: Vec::new(),
                diagnostics,
            })
        }
        _ => Err(unsupported()),
    }
}

pub(crate) fn point_report(
    estimand: Estimand,
    method: Method,
    alpha: Option<f64>,
    value: f64,
) -> BoundsReport {
    BoundsReport {
        estimand,
        method,
        hard: Interval::point(value),
        smoothed: Interval::point(value),
        alpha,
        clamped: Clamped::default(),
        ratio_details: Vec::new(),
        diagnostics: Vec::new(),
    }
}
