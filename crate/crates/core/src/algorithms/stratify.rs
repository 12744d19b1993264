//! Stratification: cluster trajectories by a per-trajectory scalar rule.
//!
//! Rule grammar (whitespace insensitive):
//!
//! ```text
//! rule := cut | comparison | aggregate
//! cut  := "cut(" aggregate "," bins ")"
//! comparison := aggregate op number      op in { >, >=, <, <=, ==, != }
//! aggregate  := mean | min | max | first | last | slope
//! ```
//!
//! A comparison yields the strata `false`/`true`; `cut` bins the aggregate
//! into equal-width intervals; a bare aggregate makes each distinct value its
//! own stratum. Clusters keep stratum order and are labeled A, B, C, ...

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::NormalEq;
use crate::method::{
    ArgValue, CenterFn, ClusterLabels, FitContext, FitOutput, MethodBackend, MethodSpec,
    PreFitData, Predictor, Prepared,
};

use super::kml::hard_postprob;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregate {
    Mean,
    Min,
    Max,
    First,
    Last,
    Slope,
}

impl Aggregate {
    fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "mean" => Ok(Aggregate::Mean),
            "min" => Ok(Aggregate::Min),
            "max" => Ok(Aggregate::Max),
            "first" => Ok(Aggregate::First),
            "last" => Ok(Aggregate::Last),
            "slope" => Ok(Aggregate::Slope),
            other => Err(Error::Rule(format!(
                "unknown variable `{other}` (expected mean, min, max, first, last, or slope)"
            ))),
        }
    }

    fn eval(self, times: &[f64], values: &[f64]) -> f64 {
        match self {
            Aggregate::Mean => values.iter().sum::<f64>() / values.len() as f64,
            Aggregate::Min => values.iter().copied().fold(f64::INFINITY, f64::min),
            Aggregate::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Aggregate::First => values[0],
            Aggregate::Last => *values.last().unwrap(),
            Aggregate::Slope => {
                if values.len() < 2 {
                    return 0.0;
                }
                let mut ne = NormalEq::new(2);
                for (&t, &v) in times.iter().zip(values) {
                    ne.add(&[1.0, t], v, 1.0);
                }
                ne.try_solve().map(|beta| beta[1]).unwrap_or(0.0)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Gt,
    Ge,
    Lt,
    Le,
    Eq,
    Ne,
}

/// A parsed stratification rule.
#[derive(Debug, Clone, PartialEq)]
pub enum Rule {
    Aggregate(Aggregate),
    Compare(Aggregate, CmpOp, f64),
    Cut(Aggregate, usize),
}

impl Rule {
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        if t.is_empty() {
            return Err(Error::Rule("empty rule".into()));
        }
        if let Some(rest) = t.strip_prefix("cut(") {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| Error::Rule(format!("unbalanced parentheses in `{t}`")))?;
            let (agg, bins) = inner
                .split_once(',')
                .ok_or_else(|| Error::Rule(format!("cut needs two arguments in `{t}`")))?;
            let bins: usize = bins
                .trim()
                .parse()
                .map_err(|_| Error::Rule(format!("invalid bin count in `{t}`")))?;
            if bins == 0 {
                return Err(Error::Rule("cut needs at least one bin".into()));
            }
            return Ok(Rule::Cut(Aggregate::parse(agg)?, bins));
        }
        for (tok, op) in [
            (">=", CmpOp::Ge),
            ("<=", CmpOp::Le),
            ("==", CmpOp::Eq),
            ("!=", CmpOp::Ne),
            (">", CmpOp::Gt),
            ("<", CmpOp::Lt),
        ] {
            if let Some((lhs, rhs)) = t.split_once(tok) {
                let agg = Aggregate::parse(lhs)?;
                let threshold: f64 = rhs
                    .trim()
                    .parse()
                    .map_err(|_| Error::Rule(format!("invalid number `{}`", rhs.trim())))?;
                return Ok(Rule::Compare(agg, op, threshold));
            }
        }
        Ok(Rule::Aggregate(Aggregate::parse(t)?))
    }

    /// Stratum label per trajectory plus the label order.
    pub fn strata(&self, ds: &Dataset) -> Result<(Vec<String>, Vec<String>)> {
        let aggs: Vec<f64> = ds
            .trajectories()
            .iter()
            .map(|traj| {
                let a = match self {
                    Rule::Aggregate(a) | Rule::Compare(a, _, _) | Rule::Cut(a, _) => a,
                };
                a.eval(&traj.times, &traj.values)
            })
            .collect();
        match self {
            Rule::Compare(_, op, threshold) => {
                let labels: Vec<String> = aggs
                    .iter()
                    .map(|&v| {
                        let hit = match op {
                            CmpOp::Gt => v > *threshold,
                            CmpOp::Ge => v >= *threshold,
                            CmpOp::Lt => v < *threshold,
                            CmpOp::Le => v <= *threshold,
                            CmpOp::Eq => v == *threshold,
                            CmpOp::Ne => v != *threshold,
                        };
                        hit.to_string()
                    })
                    .collect();
                let order: Vec<String> = ["false", "true"]
                    .iter()
                    .filter(|l| labels.iter().any(|x| x == *l))
                    .map(|l| l.to_string())
                    .collect();
                Ok((labels, order))
            }
            Rule::Cut(_, bins) => {
                let lo = aggs.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = aggs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let width = (hi - lo) / *bins as f64;
                let bin_of = |v: f64| -> usize {
                    if width <= 0.0 {
                        0
                    } else {
                        (((v - lo) / width).floor() as usize).min(bins - 1)
                    }
                };
                let edges: Vec<(f64, f64)> = (0..*bins)
                    .map(|b| (lo + b as f64 * width, lo + (b + 1) as f64 * width))
                    .collect();
                let label_of = |b: usize| format!("[{},{})", edges[b].0, edges[b].1);
                let labels: Vec<String> = aggs.iter().map(|&v| label_of(bin_of(v))).collect();
                let order: Vec<String> = (0..*bins)
                    .map(label_of)
                    .filter(|l| labels.iter().any(|x| x == l))
                    .collect();
                Ok((labels, order))
            }
            Rule::Aggregate(_) => {
                let labels: Vec<String> = aggs.iter().map(|v| v.to_string()).collect();
                let mut distinct = aggs.clone();
                distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
                distinct.dedup();
                let order: Vec<String> = distinct.iter().map(|v| v.to_string()).collect();
                Ok((labels, order))
            }
        }
    }
}

pub(crate) fn center_fn(spec: &MethodSpec) -> Result<CenterFn> {
    match spec.str_arg("center").unwrap_or("mean") {
        "mean" => Ok(CenterFn::Mean),
        "median" => Ok(CenterFn::Median),
        other => Err(Error::InvalidSpec(format!(
            "unknown center `{other}` (expected `mean` or `median`)"
        ))),
    }
}

pub struct StratifyBackend;

impl MethodBackend for StratifyBackend {
    fn name(&self) -> &str {
        "stratify"
    }

    fn defaults(&self) -> Vec<(&'static str, ArgValue)> {
        vec![
            ("rule", ArgValue::Str(String::new())),
            ("center", ArgValue::Str("mean".into())),
        ]
    }

    fn validate(&self, spec: &MethodSpec, _ds: &Dataset, _prepared: &Prepared) -> Result<()> {
        Rule::parse(spec.str_arg("rule").unwrap_or(""))?;
        center_fn(spec)?;
        Ok(())
    }

    fn pre_fit(
        &self,
        spec: &MethodSpec,
        ds: &Dataset,
        _prepared: &Prepared,
        _seed: u64,
    ) -> Result<PreFitData> {
        let rule = Rule::parse(spec.str_arg("rule").unwrap_or(""))?;
        let (per_trajectory, order) = rule.strata(ds)?;
        Ok(PreFitData::Strata {
            per_trajectory,
            order,
        })
    }

    fn fit(&self, ctx: &FitContext<'_>) -> Result<FitOutput> {
        let (per_trajectory, order) = match ctx.prefit {
            PreFitData::Strata {
                per_trajectory,
                order,
            } => (per_trajectory, order),
            _ => return Err(Error::InvalidSpec("stratify expects strata".into())),
        };
        let k = order.len();
        let index_of = |label: &str| order.iter().position(|l| l == label).unwrap();
        let assignments: Vec<usize> = per_trajectory.iter().map(|l| index_of(l)).collect();
        let curves =
            crate::method::pointwise_center_curves(ctx.dataset, &assignments, k, center_fn(ctx.spec)?);
        Ok(FitOutput {
            postprob: hard_postprob(&assignments, k),
            predictor: Predictor::Interpolated { curves },
            converged: true,
            log_likelihood: None,
            n_params: None,
            ll_trace: Vec::new(),
            // Stratum order, not proportion order, so letters track the rule.
            labels: ClusterLabels::LettersInOrder,
        })
    }
}
