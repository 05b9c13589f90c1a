use crate::error::{Error, Result};
use crate::freq::FrequencyModel;
use crate::lse::{lse, lse_centered};

use super::{
    check_alpha, point_report, BoundsReport, Clamped, Estimand, Interval, Method, SliceDetail,
};

/// One covariate stratum of a bound: the stratum contributes
/// `weight · extremum(values)`, or `trivial` when the quantity is undefined.
struct Slice {
    x: usize,
    values: Vec<f64>,
    weight: f64,
    trivial: (f64, f64),
    undefined: bool,
}

/// `base + clamp(Σ_x slice)` where the clamp is `max(floor, ·)` below and
/// `min(ceil, ·)` above; no clamp when `outer` is `None`.
struct Assembly {
    slices: Vec<Slice>,
    outer: Option<(f64, f64)>,
    base: f64,
}

struct Assembled {
    hard: Interval,
    smoothed: Interval,
    clamped: Clamped,
    details: Vec<SliceDetail>,
    diagnostics: Vec<String>,
}

impl Assembly {
    fn run(self, alpha: Option<f64>) -> Result<Assembled> {
        let mut hard = (0.0, 0.0);
        let mut soft = (0.0, 0.0);
        let mut details = Vec::with_capacity(self.slices.len());
        let mut diagnostics = Vec::new();
        for s in &self.slices {
            if s.undefined {
                hard.0 += s.trivial.0;
                hard.1 += s.trivial.1;
                soft.0 += s.trivial.0;
                soft.1 += s.trivial.1;
                diagnostics.push(format!(
                    "stratum x={} has a proxy level with zero denominator mass; using the trivial bound there",
                    s.x
                ));
                details.push(SliceDetail {
                    x: s.x,
                    lower_extremum: f64::NAN,
                    upper_extremum: f64::NAN,
                    smoothed_lower: None,
                    smoothed_upper: None,
                    undefined: true,
                });
                continue;
            }
            let lo = s.values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = s.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            hard.0 += lo * s.weight;
            hard.1 += hi * s.weight;
            let (slo, shi) = match alpha {
                Some(a) => (Some(lse(&s.values, -a)?), Some(lse(&s.values, a)?)),
                None => (None, None),
            };
            soft.0 += slo.unwrap_or(lo) * s.weight;
            soft.1 += shi.unwrap_or(hi) * s.weight;
            details.push(SliceDetail {
                x: s.x,
                lower_extremum: lo,
                upper_extremum: hi,
                smoothed_lower: slo,
                smoothed_upper: shi,
                undefined: false,
            });
        }

        let (hard_iv, smooth_iv, clamped) = match self.outer {
            None => (
                Interval::new(self.base + hard.0, self.base + hard.1),
                Interval::new(self.base + soft.0, self.base + soft.1),
                Clamped::default(),
            ),
            Some((floor, ceil)) => {
                let hard_iv =
                    Interval::new(self.base + floor.max(hard.0), self.base + ceil.min(hard.1));
                let smooth_iv = match alpha {
                    Some(a) => Interval::new(
                        self.base + lse_centered(&[floor, soft.0], a)?,
                        self.base + lse_centered(&[ceil, soft.1], -a)?,
                    ),
                    None => hard_iv,
                };
                (
                    hard_iv,
                    smooth_iv,
                    Clamped {
                        lower: floor > hard.0,
                        upper: ceil < hard.1,
                    },
                )
            }
        };
        Ok(Assembled {
            hard: hard_iv,
            smoothed: smooth_iv,
            clamped,
            details,
            diagnostics,
        })
    }
}

fn finish(
    estimand: Estimand,
    method: Method,
    alpha: Option<f64>,
    out: Assembled,
    model: &FrequencyModel,
    conditionals: &[&str],
) -> BoundsReport {
    let mut diagnostics = out.diagnostics;
    diagnostics.extend(
        model
            .audit_for(conditionals)
            .into_iter()
            .map(|e| format!("empty cell in p({}): {}", e.conditional, e.cell)),
    );
    BoundsReport {
        estimand,
        method,
        hard: out.hard,
        smoothed: out.smoothed,
        alpha,
        clamped: out.clamped,
        ratio_details: out.details,
        diagnostics,
    }
}

fn level(a: u8) -> Result<usize> {
    match a {
        0 | 1 => Ok(a as usize),
        _ => Err(Error::InvalidArgument(format!(
            "treatment level {a} is not 0 or 1"
        ))),
    }
}

fn zero_mass(what: String) -> Error {
    Error::ZeroConditioningMass(what)
}

/// p(x | 1 − a) for every x; fails when the opposite arm is empty.
fn opposite_arm_weights(model: &FrequencyModel, a: usize) -> Result<Vec<f64>> {
    (0..model.nx())
        .map(|x| {
            model
                .p_x_given_a(x, 1 - a)
                .ok_or_else(|| zero_mass(format!("p(A={}) = 0", 1 - a)))
        })
        .collect()
}

/// Ratios p(w | a, x) / p(w | a', x) over w with positive denominator, plus
/// whether some w has numerator mass but no denominator mass.
fn proxy_ratios(
    model: &FrequencyModel,
    num: usize,
    den: usize,
    x: usize,
) -> Result<(Vec<f64>, bool)> {
    let missing = |arm: usize| zero_mass(format!("p(A={arm}, X={x}) = 0"));
    let mut values = Vec::with_capacity(model.nw());
    let mut undefined = false;
    for w in 0..model.nw() {
        let pn = model.p_w_given_ax(w, num, x).ok_or_else(|| missing(num))?;
        let pd = model.p_w_given_ax(w, den, x).ok_or_else(|| missing(den))?;
        if pd > 0.0 {
            values.push(pn / pd);
        } else if pn > 0.0 {
            undefined = true;
        }
    }
    Ok((values, undefined))
}

fn ett_w_assembly(model: &FrequencyModel, a: usize) -> Result<Assembly> {
    model.require_w()?;
    let px = opposite_arm_weights(model, a)?;
    let (inf, sup) = (model.y_inf(), model.y_sup());
    let mut slices = Vec::new();
    for (x, &p) in px.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let m = model.mean_y_ax(a, x)?;
        let (values, undefined) = proxy_ratios(model, 1 - a, a, x)?;
        slices.push(Slice {
            x,
            values,
            weight: m * p,
            trivial: (inf * p, sup * p),
            undefined,
        });
    }
    Ok(Assembly {
        slices,
        outer: Some((inf, sup)),
        base: 0.0,
    })
}

/// Bounds on E[Y^(a) | A = 1 − a] from an outcome proxy W:
/// Σ_x extremum_w [p(w | 1−a, x) / p(w | a, x)] · E[Y | a, x] · p(x | 1−a),
/// clamped to the outcome range.
pub fn ett_bounds_w(model: &FrequencyModel, a: u8, alpha: Option<f64>) -> Result<BoundsReport> {
    check_alpha(alpha)?;
    let out = ett_w_assembly(model, level(a)?)?.run(alpha)?;
    Ok(finish(
        Estimand::EttMean(a),
        Method::W,
        alpha,
        out,
        model,
        &["x|a", "w|a,x"],
    ))
}

/// Bounds on E[Y^(a)] from W, in inverse-probability form:
/// max{ inf Y·p(1−a) + E[I(A=a)Y], Σ_x E[I(A=a, X=x)Y] / max_w p(a | w, x) }
/// and symmetrically above.
pub fn po_bounds_w(model: &FrequencyModel, a: u8, alpha: Option<f64>) -> Result<BoundsReport> {
    check_alpha(alpha)?;
    let ai = level(a)?;
    model.require_w()?;
    let (inf, sup) = (model.y_inf(), model.y_sup());
    let mut slices = Vec::new();
    for x in 0..model.nx() {
        if model.p_x(x) == 0.0 {
            continue;
        }
        if model.p_xa(x, ai) == 0.0 {
            return Err(zero_mass(format!("p(A={ai}, X={x}) = 0")));
        }
        let mut values = Vec::with_capacity(model.nw());
        let mut undefined = false;
        for w in 0..model.nw() {
            match model.p_a_given_wx(ai, w, x) {
                Some(p) if p > 0.0 => values.push(1.0 / p),
                Some(_) => undefined = true,
                None => {}
            }
        }
        let s = model.ysum_xa(x, ai);
        let other = model.p_xa(x, 1 - ai);
        slices.push(Slice {
            x,
            values,
            weight: s,
            trivial: (s + inf * other, s + sup * other),
            undefined,
        });
    }
    let other = model.p_a(1 - ai);
    let own = model.ysum_a(ai);
    let assembly = Assembly {
        slices,
        outer: Some((inf * other + own, sup * other + own)),
        base: 0.0,
    };
    let out = assembly.run(alpha)?;
    Ok(finish(
        Estimand::PoMean(a),
        Method::W,
        alpha,
        out,
        model,
        &["x|a", "w|a,x"],
    ))
}

fn ett_z_assembly(model: &FrequencyModel, a: usize) -> Result<Assembly> {
    model.require_z()?;
    let px = opposite_arm_weights(model, a)?;
    let mut slices = Vec::new();
    for (x, &p) in px.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        if model.p_xa(x, a) == 0.0 {
            return Err(zero_mass(format!("p(A={a}, X={x}) = 0")));
        }
        let values: Vec<f64> = (0..model.nz())
            .filter_map(|z| model.mean_y_zax(z, a, x))
            .collect();
        slices.push(Slice {
            x,
            values,
            weight: p,
            trivial: (0.0, 0.0),
            undefined: false,
        });
    }
    Ok(Assembly {
        slices,
        outer: None,
        base: 0.0,
    })
}

/// Bounds on E[Y^(a) | A = 1 − a] from a treatment proxy Z:
/// Σ_x extremum_z E[Y | z, x, a] · p(x | 1−a). These lie inside the outcome
/// range without clamping.
pub fn ett_bounds_z(model: &FrequencyModel, a: u8, alpha: Option<f64>) -> Result<BoundsReport> {
    check_alpha(alpha)?;
    let out = ett_z_assembly(model, level(a)?)?.run(alpha)?;
    Ok(finish(
        Estimand::EttMean(a),
        Method::Z,
        alpha,
        out,
        model,
        &["x|a", "z|a,x"],
    ))
}

/// Rescales conditional-mean bounds to E[Y^(a)] = E[Y^(a) | 1−a]·p(1−a) + E[I(A=a)Y].
/// An empty opposite arm makes the mean point identified.
fn ett_to_po(
    model: &FrequencyModel,
    a: u8,
    method: Method,
    alpha: Option<f64>,
    ett: impl FnOnce() -> Result<BoundsReport>,
) -> Result<BoundsReport> {
    check_alpha(alpha)?;
    let ai = level(a)?;
    let other = model.p_a(1 - ai);
    let own = model.ysum_a(ai);
    if other == 0.0 {
        let mut r = point_report(Estimand::PoMean(a), method, alpha, own);
        r.diagnostics
            .push(format!("p(A={}) = 0: E[Y^({a})] = E[Y | A={a}]", 1 - ai));
        return Ok(r);
    }
    let mut r = ett()?;
    r.estimand = Estimand::PoMean(a);
    r.hard = r.hard.scale_shift(other, own);
    r.smoothed = r.smoothed.scale_shift(other, own);
    Ok(r)
}

pub fn po_bounds_z(model: &FrequencyModel, a: u8, alpha: Option<f64>) -> Result<BoundsReport> {
    ett_to_po(model, a, Method::Z, alpha, || ett_bounds_z(model, a, alpha))
}

/// Bounds on E[Y^(a) | A = 1 − a] from two proxies, via the dependence ratio
/// p(w, z | a, x) / (p(w | a, x) p(z | a, x)).
pub fn ett_bounds_wz(model: &FrequencyModel, a: u8, alpha: Option<f64>) -> Result<BoundsReport> {
    check_alpha(alpha)?;
    let ai = level(a)?;
    model.require_w()?;
    model.require_z()?;
    let px = opposite_arm_weights(model, ai)?;
    let (inf, sup) = (model.y_inf(), model.y_sup());
    let mut slices = Vec::new();
    for (x, &p) in px.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let m = model.mean_y_ax(ai, x)?;
        let mut values = Vec::new();
        for w in 0..model.nw() {
            let pw = model.p_w_given_ax(w, ai, x).unwrap_or(0.0);
            for z in 0..model.nz() {
                let pz = model.p_z_given_ax(z, ai, x).unwrap_or(0.0);
                if pw * pz > 0.0 {
                    let pwz = model.p_wz_given_ax(w, z, ai, x).unwrap_or(0.0);
                    values.push(pwz / (pw * pz));
                }
            }
        }
        slices.push(Slice {
            x,
            values,
            weight: m * p,
            trivial: (inf * p, sup * p),
            undefined: false,
        });
    }
    let out = Assembly {
        slices,
        outer: Some((inf, sup)),
        base: 0.0,
    }
    .run(alpha)?;
    Ok(finish(
        Estimand::EttMean(a),
        Method::WZ,
        alpha,
        out,
        model,
        &["x|a", "w,z|a,x"],
    ))
}

pub fn po_bounds_wz(model: &FrequencyModel, a: u8, alpha: Option<f64>) -> Result<BoundsReport> {
    ett_to_po(model, a, Method::WZ, alpha, || {
        ett_bounds_wz(model, a, alpha)
    })
}

/// Bounds on the cross-world mean E[Y^(1, M^(0))] with a latent mediator and
/// a mediator proxy W:
/// Σ_x p(x) · extremum_w [p(w | A=0, x) / p(w | A=1, x)] · E[Y | A=1, x].
pub fn mediation_bound(model: &FrequencyModel, alpha: Option<f64>) -> Result<BoundsReport> {
    check_alpha(alpha)?;
    model.require_w()?;
    let (inf, sup) = (model.y_inf(), model.y_sup());
    let mut slices = Vec::new();
    for x in 0..model.nx() {
        let p = model.p_x(x);
        if p == 0.0 {
            continue;
        }
        let m = model.mean_y_ax(1, x)?;
        let (values, undefined) = proxy_ratios(model, 0, 1, x)?;
        slices.push(Slice {
            x,
            values,
            weight: m * p,
            trivial: (inf * p, sup * p),
            undefined,
        });
    }
    let out = Assembly {
        slices,
        outer: Some((inf, sup)),
        base: 0.0,
    }
    .run(alpha)?;
    Ok(finish(
        Estimand::CrossWorld,
        Method::Mediation,
        alpha,
        out,
        model,
        &["x|a", "w|a,x"],
    ))
}

/// E[Y^(a)] = Σ_x E[Y | a, x] p(x), point identified when the mediator
/// does not share a latent cause with Y.
pub fn g_formula(
    model: &FrequencyModel,
    a: u8,
    method: Method,
    alpha: Option<f64>,
) -> Result<BoundsReport> {
    let ai = level(a)?;
    let mut v = 0.0;
    for x in 0..model.nx() {
        let p = model.p_x(x);
        if p > 0.0 {
            v += model.mean_y_ax(ai, x)? * p;
        }
    }
    Ok(point_report(Estimand::PoMean(a), method, alpha, v))
}

/// Bounds on E[Y^(a)] in the front-door model with a latent mediator and a
/// mediator proxy W:
/// E[I(A=a)Y] + max{ inf Y·p(1−a), Σ_x extremum_w [p(w | a, x) / p(w | 1−a, x)] · E[I(A=1−a, X=x)Y] }.
pub fn frontdoor_po_bounds(
    model: &FrequencyModel,
    a: u8,
    alpha: Option<f64>,
) -> Result<BoundsReport> {
    check_alpha(alpha)?;
    let ai = level(a)?;
    model.require_w()?;
    let (inf, sup) = (model.y_inf(), model.y_sup());
    let mut slices = Vec::new();
    for x in 0..model.nx() {
        let other = model.p_xa(x, 1 - ai);
        if other == 0.0 {
            continue;
        }
        let (values, undefined) = proxy_ratios(model, ai, 1 - ai, x)?;
        slices.push(Slice {
            x,
            values,
            weight: model.ysum_xa(x, 1 - ai),
            trivial: (inf * other, sup * other),
            undefined,
        });
    }
    let other = model.p_a(1 - ai);
    let assembly = Assembly {
        slices,
        outer: Some((inf * other, sup * other)),
        base: model.ysum_a(ai),
    };
    let out = assembly.run(alpha)?;
    Ok(finish(
        Estimand::FrontdoorPoMean(a),
        Method::Frontdoor,
        alpha,
        out,
        model,
        &["x|a", "w|a,x"],
    ))
}
