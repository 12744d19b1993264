//! Group-based trajectory modeling: a mixture of polynomial regressions with
//! Gaussian residuals, fitted by EM over seeded random soft starts.

use crate::error::{Error, Result};
use crate::linalg::{log_sum_exp, NormalEq};
use crate::method::{
    ArgValue, ClusterLabels, FitContext, FitOutput, MethodBackend, MethodSpec, Predictor, Prepared,
    TrajDesign,
};

use super::em::{self, normal_logpdf, EmRun, VAR_FLOOR};

/// Fitted mixture-of-regressions parameters.
#[derive(Debug, Clone)]
pub struct GbtmParams {
    /// K x B coefficient matrix.
    pub beta: Vec<Vec<f64>>,
    /// Residual variances: one shared entry, or one per cluster.
    pub sigma2: Vec<f64>,
    /// Mixing weights on the simplex.
    pub pi: Vec<f64>,
}

pub(crate) struct GbtmOptions {
    pub k: usize,
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub cluster_variances: bool,
}

fn sigma_of(params: &GbtmParams, k: usize) -> f64 {
    if params.sigma2.len() == 1 {
        params.sigma2[0]
    } else {
        params.sigma2[k]
    }
}

/// Log-density of one trajectory conditional on cluster `k`.
fn cluster_logpdf(design: &TrajDesign, beta: &[f64], s2: f64) -> f64 {
    design
        .x
        .iter()
        .zip(&design.y)
        .map(|(x, &y)| normal_logpdf(y - crate::linalg::dot(x, beta), s2))
        .sum()
}

/// E-step: posterior rows and the observed-data log-likelihood.
fn e_step(designs: &[TrajDesign], params: &GbtmParams) -> (Vec<Vec<f64>>, f64) {
    let k = params.beta.len();
    let mut ll = 0.0;
    let tau = designs
        .iter()
        .map(|d| {
            let lp: Vec<f64> = (0..k)
                .map(|c| {
                    let prior = params.pi[c];
                    if prior <= 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        prior.ln() + cluster_logpdf(d, &params.beta[c], sigma_of(params, c))
                    }
                })
                .collect();
            let norm = log_sum_exp(&lp);
            ll += norm;
            lp.iter().map(|&v| (v - norm).exp()).collect()
        })
        .collect();
    (tau, ll)
}

/// M-step from soft assignments. Keeps a cluster's previous coefficients when
/// its effective weight vanishes or its weighted design is singular.
fn m_step(designs: &[TrajDesign], tau: &[Vec<f64>], prev: &GbtmParams, opts: &GbtmOptions) -> GbtmParams {
    let n = designs.len();
    let k = opts.k;
    let b = prev.beta[0].len();

    let mut pi = vec![0.0; k];
    for row in tau {
        for (c, v) in row.iter().enumerate() {
            pi[c] += v;
        }
    }
    for p in &mut pi {
        *p /= n as f64;
    }

    let mut beta = Vec::with_capacity(k);
    for c in 0..k {
        let mut ne = NormalEq::new(b);
        for (d, row) in designs.iter().zip(tau) {
            let w = row[c];
            if w == 0.0 {
                continue;
            }
            for (x, &y) in d.x.iter().zip(&d.y) {
                ne.add(x, y, w);
            }
        }
        beta.push(ne.try_solve().unwrap_or_else(|| prev.beta[c].clone()));
    }

    let total_obs: f64 = designs.iter().map(|d| d.y.len() as f64).sum();
    let sigma2 = if opts.cluster_variances {
        (0..k)
            .map(|c| {
                let mut sse = 0.0;
                let mut wobs = 0.0;
                for (d, row) in designs.iter().zip(tau) {
                    let w = row[c];
                    for (x, &y) in d.x.iter().zip(&d.y) {
                        let r = y - crate::linalg::dot(x, &beta[c]);
                        sse += w * r * r;
                    }
                    wobs += w * d.y.len() as f64;
                }
                if wobs > 0.0 {
                    sse / wobs
                } else {
                    sigma_of(prev, c)
                }
            })
            .collect()
    } else {
        let mut sse = 0.0;
        for (d, row) in designs.iter().zip(tau) {
            for (c, &w) in row.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                for (x, &y) in d.x.iter().zip(&d.y) {
                    let r = y - crate::linalg::dot(x, &beta[c]);
                    sse += w * r * r;
                }
            }
        }
        vec![sse / total_obs]
    };

    GbtmParams { beta, sigma2, pi }
}

pub(crate) fn fit_em(
    designs: &[TrajDesign],
    opts: &GbtmOptions,
    seed: u64,
) -> EmRun<GbtmParams> {
    let n = designs.len();
    let b = designs[0].x[0].len();
    em::best_of_restarts(opts.restarts, seed, |mut rng| {
        let tau0 = em::random_soft_rows(n, opts.k, &mut rng);
        let init = GbtmParams {
            beta: vec![vec![0.0; b]; opts.k],
            sigma2: vec![1.0; if opts.cluster_variances { opts.k } else { 1 }],
            pi: vec![1.0 / opts.k as f64; opts.k],
        };
        let mut params = m_step(designs, &tau0, &init, opts);
        let mut trace = Vec::new();
        let mut tau = tau0;
        let mut converged = false;
        let mut collapsed = false;
        let mut ll = f64::NEG_INFINITY;
        for _ in 0..opts.max_iter {
            if params.sigma2.iter().any(|&s| s < VAR_FLOOR) {
                collapsed = true;
                for s in &mut params.sigma2 {
                    *s = s.max(VAR_FLOOR);
                }
                break;
            }
            let (new_tau, new_ll) = e_step(designs, &params);
            tau = new_tau;
            let gain = new_ll - ll;
            ll = new_ll;
            trace.push(ll);
            if gain.abs() < opts.tol {
                converged = true;
                break;
            }
            params = m_step(designs, &tau, &params, opts);
        }
        EmRun {
            params,
            postprob: tau,
            log_likelihood: ll,
            trace,
            converged,
            collapsed,
        }
    })
}

pub struct GbtmBackend;

impl MethodBackend for GbtmBackend {
    fn name(&self) -> &str {
        "gbtm"
    }

    fn defaults(&self) -> Vec<(&'static str, ArgValue)> {
        vec![
            ("degree", ArgValue::Int(1)),
            ("nstart", ArgValue::Int(10)),
            ("maxIter", ArgValue::Int(500)),
            ("tol", ArgValue::Real(1e-8)),
            ("clusterVariances", ArgValue::Bool(false)),
        ]
    }

    fn prepare(&self, spec: &MethodSpec, ds: &crate::dataset::Dataset) -> Result<Prepared> {
        let degree = spec.int("degree").unwrap_or(1).max(0) as usize;
        Ok(Prepared::Designs(em::trajectory_designs(ds, degree)))
    }

    fn validate(
        &self,
        spec: &MethodSpec,
        ds: &crate::dataset::Dataset,
        prepared: &Prepared,
    ) -> Result<()> {
        let designs = match prepared {
            Prepared::Designs(d) => d,
            _ => return Err(Error::InvalidSpec("gbtm expects design data".into())),
        };
        if spec.n_clusters() > ds.n_trajectories() {
            return Err(Error::Infeasible(format!(
                "nClusters = {} exceeds {} trajectories",
                spec.n_clusters(),
                ds.n_trajectories()
            )));
        }
        // The pooled design must be full rank.
        let b = designs[0].x[0].len();
        let mut ne = NormalEq::new(b);
        for d in designs {
            for (x, &y) in d.x.iter().zip(&d.y) {
                ne.add(x, y, 1.0);
            }
        }
        if ne.try_solve().is_none() {
            return Err(Error::InvalidSpec(
                "pooled design matrix is rank deficient; lower `degree`".into(),
            ));
        }
        Ok(())
    }

    fn fit(&self, ctx: &FitContext<'_>) -> Result<FitOutput> {
        let designs = match ctx.prepared {
            Prepared::Designs(d) => d,
            _ => return Err(Error::InvalidSpec("gbtm expects design data".into())),
        };
        let opts = GbtmOptions {
            k: ctx.spec.n_clusters(),
            restarts: ctx.spec.int("nstart").unwrap_or(10).max(1) as usize,
            max_iter: ctx.spec.int("maxIter").unwrap_or(500).max(1) as usize,
            tol: ctx.spec.real("tol").unwrap_or(1e-8),
            cluster_variances: ctx.spec.bool_arg("clusterVariances").unwrap_or(false),
        };
        let run = fit_em(designs, &opts, ctx.seed);
        let b = designs[0].x[0].len();
        let n_params = opts.k * b + run.params.sigma2.len() + (opts.k - 1);
        Ok(FitOutput {
            postprob: run.postprob,
            predictor: Predictor::Polynomial {
                coef: run.params.beta.clone(),
            },
            converged: run.converged,
            // A restart that collapses before its first E-step has no
            // likelihood to report.
            log_likelihood: run.log_likelihood.is_finite().then_some(run.log_likelihood),
            n_params: Some(n_params),
            ll_trace: run.trace,
            labels: ClusterLabels::LettersByProportion,
        })
    }
}
