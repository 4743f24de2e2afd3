//! Suite orchestration: parameter points fan out to a worker pool, reports
//! are assembled in point order so output is deterministic.

use crate::config::{ConfigError, Precision, RunConfig, Tolerances, SUITES};
use crate::sampling::{kinematics_at, point_rng, sample_kinematics};
use qab_core::bigfloat::{with_precision, BigFloat};
use qab_core::coalgebra::{verify_coalgebra, yangian_limit_probe};
use qab_core::kinematics::{Kinematics, ModelParams};
use qab_core::kmatrix::{
    aligned_difference, boundary_null_dimension, boundary_ybe_residual, ck_symmetry_residual, closed_form_kmatrix,
    rational_limit_probe, solve_boundary_intertwiner, unitarity_residual, verify_kmatrix, CChoice,
};
use qab_core::report::{CheckResult, VerificationReport};
use qab_core::representation::{verify_representation, Generator};
use qab_core::scalar::{lift, Real};
use qab_core::smatrix::{
    intertwining_residuals, null_dimension, solve_intertwiner_with_retry, with_retry, ybe_residual, INTERTWINER_GENERATORS,
};
use qab_core::Result as CoreResult;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::time::Instant;

/// q − 1 values of the q → 1 sweeps.
pub const LIMIT_EPS: [f64; 3] = [1e-2, 1e-3, 1e-4];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub suite: String,
    /// Index of the parameter point within the suite.
    pub point: usize,
    #[serde(flatten)]
    pub check: CheckResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub software_version: String,
    pub suite: String,
    pub seed: u64,
    pub precision: Precision,
    pub config: RunConfig,
    pub checks: Vec<CheckRecord>,
    pub failed: usize,
    pub passed: bool,
    pub wall_time_s: f64,
}

#[derive(Debug)]
pub enum HarnessError {
    Config(ConfigError),
    UnknownSuite(String),
    Io(std::io::Error),
    Pool(String),
}

impl HarnessError {
    /// 2 for every usage/infrastructure error.
    pub fn exit_code(&self) -> i32 {
        2
    }
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Config(e) => write!(f, "{e}"),
            HarnessError::UnknownSuite(s) => write!(f, "unknown suite `{s}` (expected one of {}, all)", SUITES.join(", ")),
            HarnessError::Io(e) => write!(f, "I/O error: {e}"),
            HarnessError::Pool(e) => write!(f, "worker pool: {e}"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<ConfigError> for HarnessError {
    fn from(e: ConfigError) -> Self {
        HarnessError::Config(e)
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e)
    }
}

/// Worker count: `QAB_THREADS` if set to a positive integer, else rayon's default.
pub fn thread_count() -> Option<usize> {
    std::env::var("QAB_THREADS").ok()?.parse().ok().filter(|&n| n > 0)
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    p: ModelParams<f64>,
}

impl Ctx<'_> {
    fn legs(&self, sample: usize, ms: &[usize]) -> CoreResult<Vec<Kinematics<f64>>> {
        let xs = self.cfg.x_minus_values();
        ms.iter()
            .enumerate()
            .map(|(leg, &m)| {
                if xs.is_empty() {
                    sample_kinematics(m, &self.p, &mut point_rng(self.cfg.seed, sample, leg))
                } else {
                    kinematics_at(m, xs[(sample * ms.len() + leg) % xs.len()], &self.p)
                }
            })
            .collect()
    }

    fn tol(&self) -> &Tolerances {
        &self.cfg.tolerances
    }

    /// Run `f` in double precision or, for `high:<bits>`, on lifted parameters.
    fn generic<R>(
        &self,
        kins: &[Kinematics<f64>],
        f64_path: impl FnOnce(&[Kinematics<f64>], &ModelParams<f64>) -> CoreResult<R>,
        high_path: impl FnOnce(&[Kinematics<BigFloat>], &ModelParams<BigFloat>) -> CoreResult<R>,
    ) -> CoreResult<R> {
        match self.cfg.precision {
            Precision::Double => f64_path(kins, &self.p),
            Precision::High(bits) => with_precision(bits, || {
                let p = ModelParams::<BigFloat>::from_raw(&self.cfg.raw_params())?;
                let ks = kins
                    .iter()
                    .map(|k| Kinematics::from_x_minus(k.m, lift(k.x_minus), &p))
                    .collect::<CoreResult<Vec<_>>>()?;
                high_path(&ks, &p)
            }),
        }
    }
}

fn singles(ms: &[usize]) -> Vec<Vec<usize>> {
    ms.iter().map(|&m| vec![m]).collect()
}

fn pairs(ms: &[usize]) -> Vec<Vec<usize>> {
    ms.iter().flat_map(|&a| ms.iter().map(move |&b| vec![a, b])).collect()
}

fn triples(ms: &[usize]) -> Vec<Vec<usize>> {
    pairs(ms).into_iter().flat_map(|p| ms.iter().map(move |&c| [p.clone(), vec![c]].concat())).collect()
}

fn rep_check(ctx: &Ctx, k: &[Kinematics<f64>]) -> CoreResult<VerificationReport> {
    let tol = ctx.tol().algebra;
    ctx.generic(k, |k, p| verify_representation(&k[0], p, tol), |k, p| verify_representation(&k[0], p, tol))
}

fn coalgebra(ctx: &Ctx, k: &[Kinematics<f64>]) -> CoreResult<VerificationReport> {
    let tol = ctx.tol().algebra;
    ctx.generic(k, |k, p| verify_coalgebra(&k[0], &k[1], p, tol), |k, p| verify_coalgebra(&k[0], &k[1], p, tol))
}

fn smatrix(ctx: &Ctx, k: &[Kinematics<f64>]) -> CoreResult<VerificationReport> {
    let p = &ctx.p;
    let mut r = VerificationReport::new();
    let s = solve_intertwiner_with_retry(&k[0], &k[1], p)?;
    let d = &s.diagnostics;
    r.check_bool("null dimension = 1", d.dim == 1).note = Some(format!(
        "unknowns {}, rows {}, smallest sigma/sigma_max {:?}, gap {:.3e}, perturbations {}",
        d.unknowns, d.rows, d.smallest, d.gap, s.perturbations
    ));
    for (g, res) in intertwining_residuals(&s, p)? {
        r.check(format!("intertwining {g}"), res, ctx.tol().algebra);
    }
    let finite: Vec<Generator> = INTERTWINER_GENERATORS.iter().copied().filter(|g| g.node() != 4).collect();
    let dim = null_dimension(&s.kin1, &s.kin2, p, &finite)?.dim;
    let (m1, m2) = (k[0].m, k[1].m);
    let c = if m1.min(m2) >= 2 {
        r.check_bool("without E4,F4: null dimension > 1", dim > 1)
    } else {
        r.check_bool("without E4,F4: null dimension = min(M1,M2)", dim == m1.min(m2))
    };
    c.note = Some(format!("null dimension {dim}"));
    Ok(r)
}

fn ybe(ctx: &Ctx, k: &[Kinematics<f64>]) -> CoreResult<VerificationReport> {
    let p = &ctx.p;
    let (res, n) = with_retry(k, p, |k| ybe_residual([&k[0], &k[1], &k[2]], p))?;
    let mut r = VerificationReport::new();
    r.check("Yang-Baxter", res, ctx.tol().composite).note = (n > 0).then(|| format!("perturbations {n}"));
    Ok(r)
}

fn kmatrix(ctx: &Ctx, k: &[Kinematics<f64>]) -> CoreResult<VerificationReport> {
    let (p, tol) = (&ctx.p, ctx.tol().intertwiner);
    let mut r = ctx.generic(k, |k, p| verify_kmatrix(&k[0], p, tol), |k, p| verify_kmatrix(&k[0], p, tol))?;
    let kin = &k[0];
    let sol = solve_boundary_intertwiner(kin, p)?;
    let closed = closed_form_kmatrix(kin, p)?;
    r.check("boundary intertwiner = closed form", aligned_difference(&sol.k.op.mat, &closed.op.mat), tol);
    r.check("boundary intertwiner block pattern", sol.pattern_defect, tol);
    let dim = boundary_null_dimension(kin, p, false)?.dim;
    let c = if kin.m >= 2 {
        r.check_bool("without twisted charges: null dimension >= 2", dim >= 2)
    } else {
        r.check_bool("without twisted charges: null dimension = 1", dim == 1)
    };
    c.note = Some(format!("null dimension {dim}"));
    Ok(r)
}

fn bybe(ctx: &Ctx, k: &[Kinematics<f64>]) -> CoreResult<VerificationReport> {
    let p = &ctx.p;
    let (res, n) = with_retry(k, p, |k| boundary_ybe_residual(&k[0], &k[1], p, CChoice::ClosedForm))?;
    let mut r = VerificationReport::new();
    r.check("reflection equation", res, ctx.tol().composite).note = (n > 0).then(|| format!("perturbations {n}"));
    if k[0].m.max(k[1].m) >= 2 {
        let (t, _) = with_retry(k, p, |k| boundary_ybe_residual(&k[0], &k[1], p, CChoice::Trivial))?;
        r.expect_violation("reflection equation with C_k = C_0", t, 1e-2);
    }
    Ok(r)
}

fn unitarity_checks<T: Real>(kin: &Kinematics<T>, p: &ModelParams<T>, t: &Tolerances) -> CoreResult<VerificationReport> {
    let mut r = VerificationReport::new();
    r.check("K(-p) K(p) = 1", unitarity_residual(kin, p)?, t.intertwiner);
    if kin.m >= 2 {
        r.check("C_k (anti)symmetry", ck_symmetry_residual(kin, p)?.expected, t.algebra);
    }
    Ok(r)
}

fn unitarity(ctx: &Ctx, k: &[Kinematics<f64>]) -> CoreResult<VerificationReport> {
    let t = ctx.tol();
    ctx.generic(k, |k, p| unitarity_checks(&k[0], p, t), |k, p| unitarity_checks(&k[0], p, t))
}

fn limits(ctx: &Ctx, k: &[Kinematics<f64>]) -> CoreResult<VerificationReport> {
    let (p, m, xm) = (&ctx.p, k[0].m, k[0].x_minus);
    let mut r = VerificationReport::new();
    let probe = rational_limit_probe(xm, m, p, &LIMIT_EPS)?;
    for (i, &e) in LIMIT_EPS.iter().enumerate().skip(1) {
        r.check(format!("rational K, q-1 = {e:e}"), probe.max_error(i), 10.0 * e);
        r.check(format!("rational N, q-1 = {e:e}"), probe.normalization_errors[i], 100.0 * e);
        r.check(format!("rational u, q-1 = {e:e}"), probe.u_errors[i], 100.0 * e);
    }
    let rate = *probe.rates().last().unwrap();
    r.check("rational K convergence order - 1", (rate - 1.0).abs(), 0.2).note = Some(format!("order {rate:.4}"));
    if let Some(d) = probe.fundamental_ratio_defect {
        r.check("rational A1/A0 = -x-/x+", d, ctx.tol().closed_form);
    }
    let y = yangian_limit_probe(&LIMIT_EPS, m, xm, p)?;
    r.check_bool("Yangian charges bounded", !y.diverging);
    let yr = *y.rates().last().unwrap();
    r.check("Yangian Cauchy order - 1", (yr - 1.0).abs(), 0.2).note = Some(format!("order {yr:.4}"));
    let cd = y.central_defect.last().unwrap();
    r.check("Yangian C2, C3 limits scalar + Cartan", cd[0].max(cd[1]), 1e-3);
    Ok(r)
}

type SuiteFn = fn(&Ctx, &[Kinematics<f64>]) -> CoreResult<VerificationReport>;

fn suite_table(name: &str) -> Option<(SuiteFn, fn(&[usize]) -> Vec<Vec<usize>>)> {
    Some(match name {
        "rep-check" => (rep_check as SuiteFn, singles as fn(&[usize]) -> Vec<Vec<usize>>),
        "coalgebra" => (coalgebra, pairs),
        "smatrix" => (smatrix, pairs),
        "ybe" => (ybe, triples),
        "kmatrix" => (kmatrix, singles),
        "bybe" => (bybe, pairs),
        "unitarity" => (unitarity, singles),
        "limits" => (limits, singles),
        _ => return None,
    })
}

fn run_one(ctx: &Ctx, name: &str, pool: &rayon::ThreadPool) -> Vec<CheckRecord> {
    let (f, shapes) = suite_table(name).expect("validated suite name");
    let jobs: Vec<(Vec<usize>, usize)> =
        shapes(&ctx.cfg.m).into_iter().flat_map(|ms| (0..ctx.cfg.samples).map(move |s| (ms.clone(), s))).collect();
    let reports: Vec<VerificationReport> = pool.install(|| {
        jobs.par_iter()
            .map(|(ms, sample)| {
                let mut r = match ctx.legs(*sample, ms).and_then(|k| f(ctx, &k)) {
                    Ok(r) => r,
                    Err(e) => {
                        let mut r = VerificationReport::new();
                        r.check_bool("point evaluated", false).note = Some(e.to_string());
                        r
                    }
                };
                r.tag_ms(ms);
                r
            })
            .collect()
    });
    reports
        .into_iter()
        .enumerate()
        .flat_map(|(point, r)| {
            r.checks.into_iter().map(move |check| CheckRecord { suite: name.to_string(), point, check })
        })
        .collect()
}

/// Run a suite (or `all`) over the configured bound-state numbers and samples.
pub fn run_suite(name: &str, cfg: &RunConfig) -> Result<RunReport, HarnessError> {
    cfg.validate()?;
    let names: Vec<&str> = match name {
        "all" if cfg.suites.is_empty() => SUITES.to_vec(),
        "all" => cfg.suites.iter().map(String::as_str).collect(),
        s if SUITES.contains(&s) => vec![s],
        s => return Err(HarnessError::UnknownSuite(s.to_string())),
    };
    let start = Instant::now();
    let ctx = Ctx { cfg, p: cfg.params()? };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count() {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| HarnessError::Pool(e.to_string()))?;
    let checks: Vec<CheckRecord> = names.iter().flat_map(|n| run_one(&ctx, n, &pool)).collect();
    let failed = checks.iter().filter(|c| !c.check.passed).count();
    Ok(RunReport {
        schema_version: crate::config::SCHEMA_VERSION,
        software_version: env!("CARGO_PKG_VERSION").to_string(),
        suite: name.to_string(),
        seed: cfg.seed,
        precision: cfg.precision,
        config: cfg.clone(),
        checks,
        failed,
        passed: failed == 0,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn job_shapes() {
        assert_eq!(pairs(&[1, 2]), vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]]);
        assert_eq!(triples(&[1, 2]).len(), 8);
        assert_eq!(triples(&[1, 2])[3], vec![1, 2, 2]);
    }

    #[test]
    fn unknown_suite_is_a_usage_error() {
        let e = run_suite("nope", &RunConfig::default()).unwrap_err();
        assert!(matches!(e, HarnessError::UnknownSuite(_)));
        assert_eq!(e.exit_code(), 2);
    }
}
