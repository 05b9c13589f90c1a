//! Brute-force evaluators that read every probability straight off a joint
//! table with `mass` queries. They share no code with the estimators.
#![allow(dead_code)]

use std::path::PathBuf;

use proxbounds::JointPmf;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn load_joint(name: &str) -> JointPmf {
    JointPmf::from_json_file(fixture(name)).unwrap()
}

pub fn card(j: &JointPmf, name: &str) -> usize {
    let cb = j.codebook();
    cb.variables()[cb.index_of(name).unwrap()].cardinality
}

pub fn p(j: &JointPmf, given: &[(&str, usize)]) -> f64 {
    j.mass(given).unwrap()
}

/// Σ_y y·p(given, y)
pub fn ysum(j: &JointPmf, given: &[(&str, usize)]) -> f64 {
    let yv = j.codebook().y_values().to_vec();
    (0..card(j, "Y"))
        .map(|y| {
            let mut g = given.to_vec();
            g.push(("Y", y));
            yv[y] * p(j, &g)
        })
        .sum()
}

/// Naive (1/α) log Σ exp(α v); fine for the small α·v used in tests.
pub fn naive_lse(values: &[f64], alpha: f64) -> f64 {
    values.iter().map(|v| (alpha * v).exp()).sum::<f64>().ln() / alpha
}

fn extrema(v: &[f64]) -> (f64, f64) {
    (
        v.iter().copied().fold(f64::INFINITY, f64::min),
        v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    )
}

fn y_range(j: &JointPmf) -> (f64, f64) {
    let yv = j.codebook().y_values();
    (yv[0], yv[yv.len() - 1])
}

/// Hard (lower, upper) for E[Y^a | A = 1−a] by the outcome-proxy formula.
pub fn ett_w(j: &JointPmf, a: usize) -> (f64, f64) {
    let (inf, sup) = y_range(j);
    let pa_other = p(j, &[("A", 1 - a)]);
    let (mut lo, mut hi) = (0.0, 0.0);
    for x in 0..card(j, "X") {
        let pxo = p(j, &[("X", x), ("A", 1 - a)]);
        if pxo == 0.0 {
            continue;
        }
        let pxa = p(j, &[("X", x), ("A", a)]);
        let m = ysum(j, &[("X", x), ("A", a)]) / pxa;
        let ratios: Vec<f64> = (0..card(j, "W"))
            .filter(|&w| p(j, &[("W", w), ("X", x), ("A", a)]) > 0.0)
            .map(|w| {
                (p(j, &[("W", w), ("X", x), ("A", 1 - a)]) / pxo)
                    / (p(j, &[("W", w), ("X", x), ("A", a)]) / pxa)
            })
            .collect();
        let (rmin, rmax) = extrema(&ratios);
        lo += rmin * m * pxo / pa_other;
        hi += rmax * m * pxo / pa_other;
    }
    (lo.max(inf), hi.min(sup))
}

/// Hard bounds for E[Y^a] in inverse-probability form.
pub fn po_w(j: &JointPmf, a: usize) -> (f64, f64) {
    let (inf, sup) = y_range(j);
    let other = p(j, &[("A", 1 - a)]);
    let own = ysum(j, &[("A", a)]);
    let (mut lo, mut hi) = (0.0, 0.0);
    for x in 0..card(j, "X") {
        let props: Vec<f64> = (0..card(j, "W"))
            .filter(|&w| p(j, &[("W", w), ("X", x)]) > 0.0)
            .map(|w| p(j, &[("W", w), ("X", x), ("A", a)]) / p(j, &[("W", w), ("X", x)]))
            .collect();
        let (pmin, pmax) = extrema(&props);
        let s = ysum(j, &[("X", x), ("A", a)]);
        lo += s / pmax;
        hi += s / pmin;
    }
    ((inf * other + own).max(lo), (sup * other + own).min(hi))
}

/// Hard bounds for E[Y^a | A = 1−a] by the treatment-proxy formula.
pub fn ett_z(j: &JointPmf, a: usize) -> (f64, f64) {
    let pa_other = p(j, &[("A", 1 - a)]);
    let (mut lo, mut hi) = (0.0, 0.0);
    for x in 0..card(j, "X") {
        let weight = p(j, &[("X", x), ("A", 1 - a)]) / pa_other;
        if weight == 0.0 {
            continue;
        }
        let means: Vec<f64> = (0..card(j, "Z"))
            .filter(|&z| p(j, &[("Z", z), ("X", x), ("A", a)]) > 0.0)
            .map(|z| {
                ysum(j, &[("Z", z), ("X", x), ("A", a)]) / p(j, &[("Z", z), ("X", x), ("A", a)])
            })
            .collect();
        let (mmin, mmax) = extrema(&means);
        lo += mmin * weight;
        hi += mmax * weight;
    }
    (lo, hi)
}

/// E[Y^a] bounds from the treatment proxy.
pub fn po_z(j: &JointPmf, a: usize) -> (f64, f64) {
    let (lo, hi) = ett_z(j, a);
    let other = p(j, &[("A", 1 - a)]);
    let own = ysum(j, &[("A", a)]);
    (lo * other + own, hi * other + own)
}

/// Two-proxy bounds for E[Y^a | A = 1−a].
pub fn ett_wz(j: &JointPmf, a: usize) -> (f64, f64) {
    let (inf, sup) = y_range(j);
    let pa_other = p(j, &[("A", 1 - a)]);
    let (mut lo, mut hi) = (0.0, 0.0);
    for x in 0..card(j, "X") {
        let weight = p(j, &[("X", x), ("A", 1 - a)]) / pa_other;
        if weight == 0.0 {
            continue;
        }
        let pxa = p(j, &[("X", x), ("A", a)]);
        let m = ysum(j, &[("X", x), ("A", a)]) / pxa;
        let mut rho = Vec::new();
        for w in 0..card(j, "W") {
            for z in 0..card(j, "Z") {
                let pw = p(j, &[("W", w), ("X", x), ("A", a)]) / pxa;
                let pz = p(j, &[("Z", z), ("X", x), ("A", a)]) / pxa;
                if pw * pz > 0.0 {
                    rho.push(p(j, &[("W", w), ("Z", z), ("X", x), ("A", a)]) / pxa / (pw * pz));
                }
            }
        }
        let (rmin, rmax) = extrema(&rho);
        lo += rmin * m * weight;
        hi += rmax * m * weight;
    }
    (lo.max(inf), hi.min(sup))
}

/// Bounds on E[Y^(1, M^(0))] with a mediator proxy.
pub fn mediation(j: &JointPmf) -> (f64, f64) {
    let (inf, sup) = y_range(j);
    let (mut lo, mut hi) = (0.0, 0.0);
    for x in 0..card(j, "X") {
        let px = p(j, &[("X", x)]);
        let p1 = p(j, &[("X", x), ("A", 1)]);
        let p0 = p(j, &[("X", x), ("A", 0)]);
        let m = ysum(j, &[("X", x), ("A", 1)]) / p1;
        let ratios: Vec<f64> = (0..card(j, "W"))
            .filter(|&w| p(j, &[("W", w), ("X", x), ("A", 1)]) > 0.0)
            .map(|w| {
                (p(j, &[("W", w), ("X", x), ("A", 0)]) / p0)
                    / (p(j, &[("W", w), ("X", x), ("A", 1)]) / p1)
            })
            .collect();
        let (rmin, rmax) = extrema(&ratios);
        lo += px * rmin * m;
        hi += px * rmax * m;
    }
    (lo.max(inf), hi.min(sup))
}

/// Front-door bounds on E[Y^a].
pub fn frontdoor(j: &JointPmf, a: usize) -> (f64, f64) {
    let (inf, sup) = y_range(j);
    let own = ysum(j, &[("A", a)]);
    let other = p(j, &[("A", 1 - a)]);
    let (mut lo, mut hi) = (0.0, 0.0);
    for x in 0..card(j, "X") {
        let po = p(j, &[("X", x), ("A", 1 - a)]);
        if po == 0.0 {
            continue;
        }
        let pa = p(j, &[("X", x), ("A", a)]);
        let ratios: Vec<f64> = (0..card(j, "W"))
            .filter(|&w| p(j, &[("W", w), ("X", x), ("A", 1 - a)]) > 0.0)
            .map(|w| {
                (p(j, &[("W", w), ("X", x), ("A", a)]) / pa)
                    / (p(j, &[("W", w), ("X", x), ("A", 1 - a)]) / po)
            })
            .collect();
        let (rmin, rmax) = extrema(&ratios);
        let s = ysum(j, &[("X", x), ("A", 1 - a)]);
        lo += rmin * s;
        hi += rmax * s;
    }
    (own + (inf * other).max(lo), own + (sup * other).min(hi))
}

/// Σ_x E[Y | a, x] p(x)
pub fn adjusted_mean(j: &JointPmf, a: usize) -> f64 {
    (0..card(j, "X"))
        .map(|x| ysum(j, &[("X", x), ("A", a)]) / p(j, &[("X", x), ("A", a)]) * p(j, &[("X", x)]))
        .sum()
}

/// Smoothed (lower, upper) for E[Y^a | A = 1−a] from W, with naive LSE.
pub fn ett_w_smoothed(j: &JointPmf, a: usize, alpha: f64) -> (f64, f64) {
    let (inf, sup) = y_range(j);
    let pa_other = p(j, &[("A", 1 - a)]);
    let (mut lo, mut hi) = (0.0, 0.0);
    for x in 0..card(j, "X") {
        let pxo = p(j, &[("X", x), ("A", 1 - a)]);
        let pxa = p(j, &[("X", x), ("A", a)]);
        let m = ysum(j, &[("X", x), ("A", a)]) / pxa;
        let ratios: Vec<f64> = (0..card(j, "W"))
            .map(|w| {
                (p(j, &[("W", w), ("X", x), ("A", 1 - a)]) / pxo)
                    / (p(j, &[("W", w), ("X", x), ("A", a)]) / pxa)
            })
            .collect();
        lo += naive_lse(&ratios, -alpha) * m * pxo / pa_other;
        hi += naive_lse(&ratios, alpha) * m * pxo / pa_other;
    }
    let centered = |v: [f64; 2], al: f64| naive_lse(&v, al) - 2f64.ln() / al;
    (centered([inf, lo], alpha), centered([sup, hi], -alpha))
}

pub fn codebook(
    vars: &[(&str, usize, proxbounds::Role)],
    y_values: Vec<f64>,
) -> proxbounds::Codebook {
    proxbounds::Codebook::new(
        vars.iter()
            .map(|&(n, k, r)| proxbounds::Variable::new(n, k, r))
            .collect(),
        y_values,
    )
    .unwrap()
}

/// A fixed, irregular positive weight for a cell index.
pub fn scramble(index: &[usize]) -> f64 {
    let h = index
        .iter()
        .fold(17u64, |h, &i| h.wrapping_mul(31).wrapping_add(i as u64 + 7));
    1.0 + ((h.wrapping_mul(2654435761) >> 7) % 97) as f64 / 13.0
}
