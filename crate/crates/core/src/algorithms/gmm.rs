//! Growth mixture modeling: a mixture of linear mixed models with a random
//! intercept per trajectory, fitted by marginal-likelihood EM.
//!
//! The random part is restricted to the intercept, so each trajectory's
//! marginal covariance is the rank-one form `V = s2e I + s2u 11'` and the
//! E-step uses closed Woodbury/determinant-lemma expressions instead of a
//! J x J factorization. Each iteration interleaves two conditional updates,
//! each preceded by a fresh E-step, so the observed-data log-likelihood is
//! non-decreasing:
//!
//! 1. mixing weights and per-cluster GLS coefficients at the old variances;
//! 2. variance components from the conditional moments of the random
//!    intercept at the new coefficients.

use crate::error::{Error, Result};
use crate::linalg::{dot, log_sum_exp, NormalEq};
use crate::method::{
    ArgValue, ClusterLabels, FitContext, FitOutput, MethodBackend, MethodSpec, Predictor, Prepared,
    TrajDesign,
};

use super::em::{self, EmRun, VAR_FLOOR};

/// Fitted growth-mixture parameters (random intercept, shared variances).
#[derive(Debug, Clone)]
pub struct GmmParams {
    pub beta: Vec<Vec<f64>>,
    pub sigma2_e: f64,
    pub sigma2_u: f64,
    pub pi: Vec<f64>,
}

/// Marginal Gaussian log-density of a residual vector under
/// `V = sigma2_e I + sigma2_u 11'`.
pub fn marginal_log_density(resid: &[f64], sigma2_e: f64, sigma2_u: f64) -> f64 {
    let j = resid.len() as f64;
    let s: f64 = resid.iter().sum();
    let ssr: f64 = resid.iter().map(|r| r * r).sum();
    let denom = sigma2_e + j * sigma2_u;
    let quad = (ssr - sigma2_u * s * s / denom) / sigma2_e;
    let logdet = (j - 1.0) * sigma2_e.ln() + denom.ln();
    -0.5 * (j * (2.0 * std::f64::consts::PI).ln() + logdet + quad)
}

struct GmmOptions {
    k: usize,
    restarts: usize,
    max_iter: usize,
    tol: f64,
    random_intercept: bool,
}

fn residuals(design: &TrajDesign, beta: &[f64]) -> Vec<f64> {
    design
        .x
        .iter()
        .zip(&design.y)
        .map(|(x, &y)| y - dot(x, beta))
        .collect()
}

/// E-step: posterior rows and observed-data log-likelihood.
fn e_step(designs: &[TrajDesign], params: &GmmParams) -> (Vec<Vec<f64>>, f64) {
    let k = params.beta.len();
    let mut ll = 0.0;
    let tau = designs
        .iter()
        .map(|d| {
            let lp: Vec<f64> = (0..k)
                .map(|c| {
                    if params.pi[c] <= 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        let r = residuals(d, &params.beta[c]);
                        params.pi[c].ln()
                            + marginal_log_density(&r, params.sigma2_e, params.sigma2_u)
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

/// GLS update of the fixed effects at the current variances.
fn update_beta(designs: &[TrajDesign], tau: &[Vec<f64>], params: &GmmParams) -> Vec<Vec<f64>> {
    let k = params.beta.len();
    let b = params.beta[0].len();
    let (s2e, s2u) = (params.sigma2_e, params.sigma2_u);
    (0..k)
        .map(|c| {
            let mut ne = NormalEq::new(b);
            for (d, row) in designs.iter().zip(tau) {
                let w = row[c];
                if w == 0.0 {
                    continue;
                }
                let ji = d.y.len() as f64;
                let denom = s2e + ji * s2u;
                let mut sx = vec![0.0; b];
                let mut sy = 0.0;
                for (x, &y) in d.x.iter().zip(&d.y) {
                    ne.add(x, y, w / s2e);
                    for (acc, &v) in sx.iter_mut().zip(x) {
                        *acc += v;
                    }
                    sy += y;
                }
                let corr = -w * s2u / (s2e * denom);
                ne.add_outer(&sx, corr);
                ne.add_rhs(&sx, corr * sy);
            }
            ne.try_solve().unwrap_or_else(|| params.beta[c].clone())
        })
        .collect()
}

/// Variance updates from the conditional moments of the random intercept,
/// evaluated at the new coefficients and the old variances.
fn update_variances(
    designs: &[TrajDesign],
    tau: &[Vec<f64>],
    params: &GmmParams,
) -> (f64, f64) {
    let n = designs.len() as f64;
    let total_obs: f64 = designs.iter().map(|d| d.y.len() as f64).sum();
    let (s2e, s2u) = (params.sigma2_e, params.sigma2_u);
    let mut u_acc = 0.0;
    let mut e_acc = 0.0;
    for (d, row) in designs.iter().zip(tau) {
        let ji = d.y.len() as f64;
        let denom = s2e + ji * s2u;
        let v_cond = s2u * s2e / denom;
        for (c, &w) in row.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let r = residuals(d, &params.beta[c]);
            let s: f64 = r.iter().sum();
            let ssr: f64 = r.iter().map(|x| x * x).sum();
            let m = s2u * s / denom;
            u_acc += w * (m * m + v_cond);
            e_acc += w * (ssr - 2.0 * m * s + ji * m * m + ji * v_cond);
        }
    }
    (e_acc / total_obs, u_acc / n)
}

fn initial_params(
    designs: &[TrajDesign],
    tau: &[Vec<f64>],
    opts: &GmmOptions,
    b: usize,
) -> GmmParams {
    let n = designs.len() as f64;
    let mut pi = vec![0.0; opts.k];
    for row in tau {
        for (c, v) in row.iter().enumerate() {
            pi[c] += v / n;
        }
    }
    let mut beta = Vec::with_capacity(opts.k);
    for c in 0..opts.k {
        let mut ne = NormalEq::new(b);
        for (d, row) in designs.iter().zip(tau) {
            for (x, &y) in d.x.iter().zip(&d.y) {
                ne.add(x, y, row[c]);
            }
        }
        beta.push(ne.try_solve().unwrap_or_else(|| vec![0.0; b]));
    }
    // Split the pooled residual variance between the two components.
    let mut sse = 0.0;
    let mut wobs = 0.0;
    for (d, row) in designs.iter().zip(tau) {
        for (c, &w) in row.iter().enumerate() {
            for (x, &y) in d.x.iter().zip(&d.y) {
                let r = y - dot(x, &beta[c]);
                sse += w * r * r;
            }
            wobs += w * d.y.len() as f64;
        }
    }
    let s2 = (sse / wobs.max(1.0)).max(VAR_FLOOR * 10.0);
    let (sigma2_e, sigma2_u) = if opts.random_intercept {
        (0.5 * s2, 0.5 * s2)
    } else {
        (s2, 0.0)
    };
    GmmParams {
        beta,
        sigma2_e,
        sigma2_u,
        pi,
    }
}

fn fit_em(designs: &[TrajDesign], opts: &GmmOptions, seed: u64) -> EmRun<GmmParams> {
    let n = designs.len();
    let b = designs[0].x[0].len();
    em::best_of_restarts(opts.restarts, seed, |mut rng| {
        let tau0 = em::random_soft_rows(n, opts.k, &mut rng);
        let mut params = initial_params(designs, &tau0, opts, b);
        let mut tau = tau0;
        let mut trace = Vec::new();
        let mut converged = false;
        let mut collapsed = false;
        let mut ll = f64::NEG_INFINITY;
        for _ in 0..opts.max_iter {
            if params.sigma2_e < VAR_FLOOR {
                collapsed = true;
                params.sigma2_e = params.sigma2_e.max(VAR_FLOOR);
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
            // Conditional update 1: mixing weights and GLS coefficients.
            let mut pi = vec![0.0; opts.k];
            for row in &tau {
                for (c, v) in row.iter().enumerate() {
                    pi[c] += v / n as f64;
                }
            }
            params.pi = pi;
            params.beta = update_beta(designs, &tau, &params);
            // Conditional update 2: fresh E-step, then the variances.
            let (tau2, _) = e_step(designs, &params);
            let (s2e, s2u) = update_variances(designs, &tau2, &params);
            params.sigma2_e = s2e;
            params.sigma2_u = if opts.random_intercept { s2u.max(0.0) } else { 0.0 };
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

pub struct GmmBackend;

impl MethodBackend for GmmBackend {
    fn name(&self) -> &str {
        "gmm"
    }

    fn defaults(&self) -> Vec<(&'static str, ArgValue)> {
        vec![
            ("degree", ArgValue::Int(1)),
            ("nstart", ArgValue::Int(10)),
            ("maxIter", ArgValue::Int(500)),
            ("tol", ArgValue::Real(1e-8)),
            ("randomIntercept", ArgValue::Bool(true)),
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
            _ => return Err(Error::InvalidSpec("gmm expects design data".into())),
        };
        if spec.n_clusters() > ds.n_trajectories() {
            return Err(Error::Infeasible(format!(
                "nClusters = {} exceeds {} trajectories",
                spec.n_clusters(),
                ds.n_trajectories()
            )));
        }
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
            _ => return Err(Error::InvalidSpec("gmm expects design data".into())),
        };
        let opts = GmmOptions {
            k: ctx.spec.n_clusters(),
            restarts: ctx.spec.int("nstart").unwrap_or(10).max(1) as usize,
            max_iter: ctx.spec.int("maxIter").unwrap_or(500).max(1) as usize,
            tol: ctx.spec.real("tol").unwrap_or(1e-8),
            random_intercept: ctx.spec.bool_arg("randomIntercept").unwrap_or(true),
        };
        let run = fit_em(designs, &opts, ctx.seed);
        let b = designs[0].x[0].len();
        let n_variances = if opts.random_intercept { 2 } else { 1 };
        let n_params = opts.k * b + n_variances + (opts.k - 1);
        Ok(FitOutput {
            postprob: run.postprob,
            // Marginal mean: the random intercept integrates to zero.
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
