//! Ground-truth causal estimands computed from a full joint that includes the
//! latent axes.

use serde::{Deserialize, Serialize};

use crate::bounds::Estimand;
use crate::codebook::Role;
use crate::error::{Error, Result};
use crate::pmf::JointPmf;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleTruth {
    /// E[Y^(a) | A = 1 − a], indexed by a.
    pub cond_po_mean: [f64; 2],
    /// E[Y^(a)], indexed by a.
    pub po_mean: [f64; 2],
    /// E[Y | A = a] (= E[Y^(a) | A = a]), indexed by a.
    pub observed_mean: [f64; 2],
    pub ett: f64,
    pub ate: f64,
    /// E[Y^(1, M^(0))] for mediation-family joints.
    pub cross_world: Option<f64>,
    pub nie: Option<f64>,
    pub nde: Option<f64>,
}

impl OracleTruth {
    /// The exact value of `estimand`, when this joint defines it.
    pub fn value(&self, estimand: Estimand) -> Option<f64> {
        match estimand {
            Estimand::EttMean(a) => Some(self.cond_po_mean[a as usize]),
            Estimand::PoMean(a) | Estimand::FrontdoorPoMean(a) => Some(self.po_mean[a as usize]),
            Estimand::ObservedMean(a) => Some(self.observed_mean[a as usize]),
            Estimand::Ett => Some(self.ett),
            Estimand::Ate => Some(self.ate),
            Estimand::CrossWorld => self.cross_world,
            Estimand::Nie => self.nie,
            Estimand::Nde => self.nde,
        }
    }
}

/// Per-stratum sufficient statistics over a set of adjustment axes `c`:
/// p(c, a) and Σ_y y·p(c, a, y), with optional extra axes kept alongside.
struct Strata {
    p: Vec<[f64; 2]>,
    ysum: Vec<[f64; 2]>,
}

/// Tabulates strata over the axes with roles in `adjust` (codebook order,
/// mixed radix).
fn strata(joint: &JointPmf, adjust: &[Role]) -> Result<Strata> {
    let cb = joint.codebook();
    let a_axis = cb
        .role_index(Role::Treatment)
        .ok_or(Error::MissingRole("treatment (A)"))?;
    let y_axis = cb
        .role_index(Role::Outcome)
        .ok_or(Error::MissingRole("outcome (Y)"))?;
    let axes: Vec<usize> = (0..cb.len())
        .filter(|&i| adjust.contains(&cb.variables()[i].role))
        .collect();
    let cards: Vec<usize> = axes
        .iter()
        .map(|&i| cb.variables()[i].cardinality)
        .collect();
    let size: usize = cards.iter().product();
    let mut s = Strata {
        p: vec![[0.0; 2]; size],
        ysum: vec![[0.0; 2]; size],
    };
    let yv = cb.y_values();
    joint.for_each_cell(|idx, p| {
        let c = axes
            .iter()
            .zip(&cards)
            .fold(0, |acc, (&ax, &k)| acc * k + idx[ax]);
        let a = idx[a_axis];
        s.p[c][a] += p;
        s.ysum[c][a] += p * yv[idx[y_axis]];
    });
    Ok(s)
}

/// Adjustment formula over strata c: returns (E[Y^a | A=a'] for a,a', E[Y^a]).
fn adjusted(s: &Strata) -> Result<([[f64; 2]; 2], [f64; 2])> {
    let pa = [
        s.p.iter().map(|p| p[0]).sum::<f64>(),
        s.p.iter().map(|p| p[1]).sum::<f64>(),
    ];
    if pa.iter().any(|&m| m <= 0.0) {
        return Err(Error::PositivityViolation(
            "a treatment arm has zero probability".into(),
        ));
    }
    let mut cond = [[0.0; 2]; 2];
    let mut marg = [0.0; 2];
    for (c, (p, ys)) in s.p.iter().zip(&s.ysum).enumerate() {
        let pc = p[0] + p[1];
        if pc <= 0.0 {
            continue;
        }
        for a in 0..2 {
            if p[a] <= 0.0 {
                return Err(Error::PositivityViolation(format!(
                    "p(A={a} | stratum {c}) = 0"
                )));
            }
            let mean = ys[a] / p[a];
            for (a2, row) in cond[a].iter_mut().enumerate() {
                *row += mean * p[a2] / pa[a2];
            }
            marg[a] += mean * pc;
        }
    }
    Ok((cond, marg))
}

/// Exact estimands of a confounder-, mediation-, or front-door-family joint.
///
/// With a latent confounder U present the potential-outcome means use the
/// adjustment formula over (U, X); with only a latent mediator M they use X
/// alone, and the cross-world mean E[Y^(1,M^(0))] is the mediation formula
/// Σ_x p(x) Σ_m p(m | A=0, x) E[Y | A=1, x, m].
pub fn oracle_estimands(joint: &JointPmf) -> Result<OracleTruth> {
    let cb = joint.codebook();
    let has_u = cb.role_index(Role::LatentConfounder).is_some();
    let has_m = cb.role_index(Role::LatentMediator).is_some();
    if !has_u && !has_m {
        return Err(Error::InvalidArgument(
            "oracle needs a latent axis (U or M)".into(),
        ));
    }
    let adjust: &[Role] = if has_u {
        &[Role::LatentConfounder, Role::Covariate]
    } else {
        &[Role::Covariate]
    };
    let (cond, marg) = adjusted(&strata(joint, adjust)?)?;
    let observed_mean = [cond[0][0], cond[1][1]];
    let cond_po_mean = [cond[0][1], cond[1][0]];

    let (cross_world, nie, nde) = if has_m && !has_u {
        let cw = cross_world_mean(joint)?;
        (Some(cw), Some(marg[1] - cw), Some(cw - marg[0]))
    } else {
        (None, None, None)
    };
    Ok(OracleTruth {
        cond_po_mean,
        po_mean: marg,
        observed_mean,
        ett: observed_mean[1] - cond_po_mean[0],
        ate: marg[1] - marg[0],
        cross_world,
        nie,
        nde,
    })
}

fn cross_world_mean(joint: &JointPmf) -> Result<f64> {
    let x_strata = strata(joint, &[Role::Covariate])?;
    let xm = strata(joint, &[Role::Covariate, Role::LatentMediator])?;
    let nm = joint
        .codebook()
        .cardinality(Role::LatentMediator)
        .expect("mediation joint");
    let mut total = 0.0;
    for (x, px) in x_strata.p.iter().enumerate() {
        let p_x = px[0] + px[1];
        if p_x <= 0.0 {
            continue;
        }
        if px[0] <= 0.0 {
            return Err(Error::PositivityViolation(format!("p(A=0 | X={x}) = 0")));
        }
        for m in 0..nm {
            let cell = x * nm + m;
            let p_m_given_0x = xm.p[cell][0] / px[0];
            if p_m_given_0x == 0.0 {
                continue;
            }
            if xm.p[cell][1] <= 0.0 {
                return Err(Error::PositivityViolation(format!(
                    "p(A=1 | X={x}, M={m}) = 0"
                )));
            }
            total += p_x * p_m_given_0x * xm.ysum[cell][1] / xm.p[cell][1];
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::{build_joint, sample_dgp_spec, Cardinalities, Family};

    #[test]
    fn contrasts_are_consistent() {
        for seed in 0..10 {
            let s = sample_dgp_spec(
                Cardinalities::confounder(3, 2, 3, 3, 3),
                Family::Confounder,
                seed,
            )
            .unwrap();
            let t = oracle_estimands(&build_joint(&s).unwrap()).unwrap();
            assert!((t.ate - (t.po_mean[1] - t.po_mean[0])).abs() < 1e-15);
            assert!((t.ett - (t.observed_mean[1] - t.cond_po_mean[0])).abs() < 1e-15);
            assert!(t.cross_world.is_none());
        }
    }

    #[test]
    fn no_confounding_matches_g_formula() {
        let mut s = sample_dgp_spec(
            Cardinalities::confounder(1, 3, 2, 2, 3),
            Family::Confounder,
            2,
        )
        .unwrap();
        s.zero_slopes("U", None);
        let j = build_joint(&s).unwrap();
        let t = oracle_estimands(&j).unwrap();
        for a in 0..2 {
            let mut g = 0.0;
            for x in 0..3 {
                g += j.cond_mean_y(&[("A", a), ("X", x)]).unwrap() * j.mass(&[("X", x)]).unwrap();
            }
            assert!((t.po_mean[a] - g).abs() < 1e-12);
        }
    }

    #[test]
    fn null_effect_gives_zero_contrasts() {
        for seed in 0..5 {
            let mut s = sample_dgp_spec(
                Cardinalities::confounder(3, 2, 2, 2, 3),
                Family::Confounder,
                seed,
            )
            .unwrap();
            s.zero_slopes("A", Some("Y"));
            let t = oracle_estimands(&build_joint(&s).unwrap()).unwrap();
            assert!(t.ate.abs() < 1e-12 && t.ett.abs() < 1e-12);

            let mut s = sample_dgp_spec(
                Cardinalities::mediation(3, 2, 3, 3),
                Family::Mediation,
                seed,
            )
            .unwrap();
            s.zero_slopes("A", Some("Y"));
            s.zero_slopes("A", Some("M"));
            let t = oracle_estimands(&build_joint(&s).unwrap()).unwrap();
            assert!(t.ate.abs() < 1e-12 && t.ett.abs() < 1e-12);
            assert!(t.nie.unwrap().abs() < 1e-12 && t.nde.unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn mediation_decomposition() {
        for seed in 0..20 {
            let s = sample_dgp_spec(
                Cardinalities::mediation(3, 3, 3, 3),
                Family::Mediation,
                seed,
            )
            .unwrap();
            let t = oracle_estimands(&build_joint(&s).unwrap()).unwrap();
            assert!((t.nie.unwrap() + t.nde.unwrap() - t.ate).abs() < 1e-10);
        }
    }

    #[test]
    fn requires_latent_axis() {
        let s = sample_dgp_spec(
            Cardinalities::confounder(2, 2, 2, 2, 2),
            Family::Confounder,
            0,
        )
        .unwrap();
        let observed = build_joint(&s).unwrap().marginal_roles(|r| !r.is_latent());
        assert!(oracle_estimands(&observed).is_err());
    }
}
