//! Resolving rotation, wrap-around and reflection ambiguity in posterior draws.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::circular::mean_resultant;
use crate::error::{Error, Result};
use crate::mcmc::{ChainOutput, DrawLayout, PosteriorDraw};
use crate::votes_io::{label_cmp, AnchorConstraint, Sign};

pub use crate::circular::{checked_wrap_angle, wrap_angle};

/// Minimum mean resultant length for a circular mean to be reported.
pub const MIN_RESULTANT: f64 = 1e-8;

/// Anchors resolved against a draw layout: for each governed period, the β
/// column of its anchor unit, the required sign and the columns to flip.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionPlan {
    periods: Vec<PeriodRule>,
}

#[derive(Debug, Clone, PartialEq)]
struct PeriodRule {
    anchor: usize,
    sign: Sign,
    beta_cols: Vec<usize>,
    case_cols: Vec<usize>,
}

impl ReflectionPlan {
    /// Fails if an anchor names an unknown unit or period, if its unit does
    /// not serve a period in its range, or if two anchors share a period.
    pub fn new(layout: &DrawLayout, anchors: &[AnchorConstraint]) -> Result<Self> {
        let mut periods: Vec<&String> = layout
            .beta
            .iter()
            .map(|(_, p)| p)
            .chain(layout.cases.iter().map(|(p, _)| p))
            .collect();
        periods.sort_by(|a, b| label_cmp(a, b));
        periods.dedup();

        let mut governed: BTreeMap<usize, (usize, Sign)> = BTreeMap::new();
        for a in anchors {
            let find = |label: &str| {
                periods
                    .iter()
                    .position(|p| p.as_str() == label)
                    .ok_or_else(|| Error::Config(format!("anchor period {label:?} is not in the data")))
            };
            let (from, to) = (find(&a.from)?, find(&a.to)?);
            if from > to {
                return Err(Error::Config(format!("anchor for {:?} has an empty period range", a.unit)));
            }
            if !layout.beta.iter().any(|(u, _)| u == &a.unit) {
                return Err(Error::Config(format!("anchor unit {:?} is not in the data", a.unit)));
            }
            for (t, period) in periods.iter().enumerate().take(to + 1).skip(from) {
                let col = layout
                    .beta
                    .iter()
                    .position(|(u, p)| u == &a.unit && p == *period)
                    .ok_or_else(|| {
                        Error::Config(format!("anchor unit {:?} does not serve period {period:?}", a.unit))
                    })?;
                if governed.insert(t, (col, a.sign)).is_some() {
                    return Err(Error::OverlappingAnchors((*period).clone()));
                }
            }
        }

        let rules = governed
            .into_iter()
            .map(|(t, (anchor, sign))| {
                let period = periods[t];
                PeriodRule {
                    anchor,
                    sign,
                    beta_cols: (0..layout.beta.len()).filter(|&c| &layout.beta[c].1 == period).collect(),
                    case_cols: (0..layout.cases.len()).filter(|&c| &layout.cases[c].0 == period).collect(),
                }
            })
            .collect();
        Ok(ReflectionPlan { periods: rules })
    }

    /// Wraps every angle, then negates the angles of each governed period
    /// whose anchor has the wrong sign.
    ///
    /// 0 and −π are fixed by negation, so they count as satisfying either sign.
    pub fn apply(&self, draw: &mut PosteriorDraw) {
        for v in draw.beta.iter_mut().chain(&mut draw.psi).chain(&mut draw.zeta) {
            *v = wrap_angle(*v);
        }
        for rule in &self.periods {
            let b = draw.beta[rule.anchor];
            let violated = match rule.sign {
                Sign::Negative => b > 0.0,
                Sign::Positive => b < 0.0 && b > -std::f64::consts::PI,
            };
            if violated {
                for &c in &rule.beta_cols {
                    draw.beta[c] = wrap_angle(-draw.beta[c]);
                }
                for &c in &rule.case_cols {
                    draw.psi[c] = wrap_angle(-draw.psi[c]);
                    draw.zeta[c] = wrap_angle(-draw.zeta[c]);
                }
            }
        }
    }
}

/// Identifies a single draw.
pub fn apply_reflection(
    draw: &PosteriorDraw,
    layout: &DrawLayout,
    anchors: &[AnchorConstraint],
) -> Result<PosteriorDraw> {
    let plan = ReflectionPlan::new(layout, anchors)?;
    let mut out = draw.clone();
    plan.apply(&mut out);
    Ok(out)
}

/// Identifies every draw of a chain and marks the output as identified.
pub fn identify_output(output: &ChainOutput, anchors: &[AnchorConstraint]) -> Result<ChainOutput> {
    let plan = ReflectionPlan::new(output.layout(), anchors)?;
    let mut out = output.clone();
    for i in 0..out.n_draws() {
        let mut d = out.draw(i);
        plan.apply(&mut d);
        out.beta[i] = d.beta;
        out.psi[i] = d.psi;
        out.zeta[i] = d.zeta;
    }
    out.manifest.identified = true;
    Ok(out)
}

/// Posterior summary of one ideal point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSummary {
    pub unit: String,
    pub period: String,
    /// Circular mean, absent when the draws have no preferred direction.
    pub mean: Option<f64>,
    /// Equal-tailed 95% interval on the scale unfolded about the mean.
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub resultant: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Circular mean and 95% interval of one set of angle draws.
pub fn summarize_angles(draws: &[f64]) -> (Option<f64>, Option<(f64, f64)>, f64) {
    let (mean, r) = mean_resultant(draws);
    if r < MIN_RESULTANT {
        return (None, None, r);
    }
    let mut dev: Vec<f64> = draws.iter().map(|&b| wrap_angle(b - mean)).collect();
    dev.sort_by(f64::total_cmp);
    (Some(mean), Some((mean + quantile(&dev, 0.025), mean + quantile(&dev, 0.975))), r)
}

/// Circular posterior mean and 95% interval for every (unit, period).
pub fn summarize_paths(output: &ChainOutput) -> Result<Vec<PathSummary>> {
    if output.n_draws() < 2 {
        return Err(Error::InvalidInput("summaries need at least two draws".into()));
    }
    let layout = output.layout();
    Ok((0..layout.beta.len())
        .map(|c| {
            let col: Vec<f64> = output.beta.iter().map(|row| row[c]).collect();
            let (mean, interval, resultant) = summarize_angles(&col);
            PathSummary {
                unit: layout.beta[c].0.clone(),
                period: layout.beta[c].1.clone(),
                mean,
                lower: interval.map(|i| i.0),
                upper: interval.map(|i| i.1),
                resultant,
            }
        })
        .collect())
}

/// Writes summaries as `unit,period,mean,lower,upper,resultant`; undefined
/// means are written as `NA`.
pub fn write_summaries(summaries: &[PathSummary], path: impl AsRef<std::path::Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["unit", "period", "mean", "lower", "upper", "resultant"])?;
    let f = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| x.to_string());
    for s in summaries {
        w.write_record([
            s.unit.clone(),
            s.period.clone(),
            f(s.mean),
            f(s.lower),
            f(s.upper),
            s.resultant.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summaries(path: impl AsRef<std::path::Path>) -> Result<Vec<PathSummary>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    let parse = |s: &str| -> Result<Option<f64>> {
        if s == "NA" {
            Ok(None)
        } else {
            s.parse()
                .map(Some)
                .map_err(|e| Error::InvalidInput(format!("bad number {s:?} in summaries: {e}")))
        }
    };
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != 6 {
            return Err(Error::InvalidInput("summaries rows need 6 fields".into()));
        }
        out.push(PathSummary {
            unit: rec[0].to_string(),
            period: rec[1].to_string(),
            mean: parse(&rec[2])?,
            lower: parse(&rec[3])?,
            upper: parse(&rec[4])?,
            resultant: parse(&rec[5])?.unwrap_or(0.0),
        });
    }
    Ok(out)
}
