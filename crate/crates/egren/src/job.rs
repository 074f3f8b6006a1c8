//! Job specs, dispatch, and self-contained JSON reports.
//!
//! A job is one command with a typed payload; the report echoes the full
//! spec (plus seed and tolerances) so that re-running the echo reproduces
//! the report bit for bit. Mathematical verdicts — Infeasible, OnDiagonal,
//! NonRenormalizable — are ordinary outcomes; only schema violations and
//! numerical breakdowns are errors.

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::cones::{
    self, ConeGenerators, CovectorConfig, EdgeWitness, ImmersionVerdict,
};
use crate::extension::{self, CutoffFamily, ExtensionMode};
use crate::fourier::{self, DirectionDecay};
use crate::kernel::{DistributionKernel, Locus};
use crate::minkowski::{self, parse_rat, CoverWitness, PointConfig};
use crate::multi::MultiIndex;
use crate::quad::QuadOpts;
use crate::scaling;
use crate::testfn::TestFunction;
use crate::wick;
use crate::words;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum JobError {
    /// Invalid spec: wrong schema version, malformed payload, bad DSL. Exit 2.
    #[error("schema: {0}")]
    Schema(String),
    /// The job was valid but a numerical routine failed. Exit 3.
    #[error("numerical: {0}")]
    Numerical(String),
}

fn schema<E: std::fmt::Display>(e: E) -> JobError {
    JobError::Schema(e.to_string())
}

fn numerical<E: std::fmt::Display>(e: E) -> JobError {
    JobError::Numerical(e.to_string())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    pub version: u32,
    #[serde(flatten)]
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<u32>,
}

impl Tolerances {
    fn quad_opts(spec: &JobSpec) -> QuadOpts {
        let mut opts = QuadOpts::default();
        if let Some(t) = &spec.tolerances {
            if let Some(r) = t.rel_tol {
                opts.rel_tol = r;
            }
            if let Some(m) = t.max_depth {
                opts.max_depth = m;
            }
        }
        opts
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", content = "payload", rename_all = "lowercase")]
pub enum Command {
    Sd(SdJob),
    Extend(ExtendJob),
    Wf(WfJob),
    Cover(CoverJob),
    Glue(GlueJob),
    Wick(WickJob),
    Classify(ClassifyJob),
    Probe(ProbeJob),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Sd(_) => "sd",
            Command::Extend(_) => "extend",
            Command::Wf(_) => "wf",
            Command::Cover(_) => "cover",
            Command::Glue(_) => "glue",
            Command::Wick(_) => "wick",
            Command::Classify(_) => "classify",
            Command::Probe(_) => "probe",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LocusSpec {
    None,
    Origin,
    Subspace(Vec<Vec<f64>>),
}

impl Default for LocusSpec {
    fn default() -> Self {
        LocusSpec::Origin
    }
}

impl From<&LocusSpec> for Locus {
    fn from(l: &LocusSpec) -> Locus {
        match l {
            LocusSpec::None => Locus::None,
            LocusSpec::Origin => Locus::Origin,
            LocusSpec::Subspace(b) => Locus::Subspace(b.clone()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdJob {
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub delta: Vec<(MultiIndex, f64)>,
    #[serde(default)]
    pub locus: LocusSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regulator: Option<f64>,
    #[serde(default = "default_n_dyadic")]
    pub n_dyadic: usize,
}

fn default_n_dyadic() -> usize {
    12
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtendJob {
    pub d: usize,
    pub kernel: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_sd: Option<f64>,
    #[serde(default = "default_cutoff_eps")]
    pub cutoff_eps: f64,
    #[serde(default = "default_cutoff_r")]
    pub cutoff_r: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constants: Vec<(MultiIndex, f64)>,
    #[serde(default = "default_series_terms")]
    pub series_terms: usize,
    #[serde(default = "default_probe_count")]
    pub probes: usize,
    #[serde(default)]
    pub estimate_sd_after: bool,
}

fn default_cutoff_eps() -> f64 {
    0.25
}

fn default_cutoff_r() -> f64 {
    0.5
}

fn default_series_terms() -> usize {
    40
}

fn default_probe_count() -> usize {
    5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "query", rename_all = "snake_case")]
pub enum WfJob {
    Member {
        cone: ConeName,
        x: Vec<String>,
        xp: Vec<String>,
        k: Vec<String>,
        kp: Vec<String>,
    },
    Hormander {
        d: usize,
        base_a: Vec<String>,
        generators_a: Vec<Vec<String>>,
        base_b: Vec<String>,
        generators_b: Vec<Vec<String>>,
    },
    GammaTo {
        d: usize,
        points: Vec<Vec<String>>,
        covectors: Vec<Vec<String>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid: Option<Vec<Vec<String>>>,
    },
    Digamma {
        d: usize,
        points: Vec<Vec<String>>,
        covectors: Vec<Vec<String>>,
        degrees: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid: Option<Vec<Vec<String>>>,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConeName {
    Commutator,
    Hadamard,
    Feynman,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverJob {
    pub d: usize,
    pub points: Vec<Vec<String>>,
    #[serde(default)]
    pub weights: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlueJob {
    pub d: usize,
    pub points: Vec<Vec<String>>,
    pub i1: Vec<usize>,
    pub i2: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WickJob {
    pub powers: Vec<usize>,
    #[serde(default = "default_true")]
    pub saturated_only: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyJob {
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub powers: Vec<usize>,
    #[serde(default = "default_classify_orders")]
    pub n_max: usize,
}

fn default_classify_orders() -> usize {
    6
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeJob {
    pub d: usize,
    pub kernel: String,
    #[serde(default)]
    pub locus: LocusSpec,
    pub window_center: Vec<f64>,
    pub window_radius: f64,
    pub directions: Vec<Vec<f64>>,
    #[serde(default = "default_n_dyadic")]
    pub n_dyadic: usize,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub version: u32,
    pub command: String,
    /// Full input echo: re-running this spec reproduces the report.
    pub spec: JobSpec,
    pub outcome: Value,
}

pub fn parse_spec(text: &str) -> Result<JobSpec, JobError> {
    let spec: JobSpec = serde_json::from_str(text).map_err(schema)?;
    if spec.version != SCHEMA_VERSION {
        return Err(JobError::Schema(format!(
            "schema version {} not supported (expected {})",
            spec.version, SCHEMA_VERSION
        )));
    }
    Ok(spec)
}

pub fn run_job(spec: &JobSpec) -> Result<Report, JobError> {
    if spec.version != SCHEMA_VERSION {
        return Err(JobError::Schema(format!(
            "schema version {} not supported (expected {})",
            spec.version, SCHEMA_VERSION
        )));
    }
    let outcome = match &spec.command {
        Command::Sd(job) => run_sd(spec, job)?,
        Command::Extend(job) => run_extend(spec, job)?,
        Command::Wf(job) => run_wf(job)?,
        Command::Cover(job) => run_cover(job)?,
        Command::Glue(job) => run_glue(job)?,
        Command::Wick(job) => run_wick(job)?,
        Command::Classify(job) => run_classify(job)?,
        Command::Probe(job) => run_probe(job)?,
    };
    Ok(Report {
        version: SCHEMA_VERSION,
        command: spec.command.name().to_string(),
        spec: spec.clone(),
        outcome,
    })
}

/// λ-vs-|pairing| rows for sd reports, one block per probe.
pub fn plot_csv(report: &Report) -> Option<String> {
    let probes = report.outcome.get("probes")?.as_array()?;
    let mut out = String::from("probe,lambda,pairing\n");
    for (i, p) in probes.iter().enumerate() {
        for row in p.get("samples")?.as_array()? {
            let l = row.get(0)?.as_f64()?;
            let v = row.get(1)?.as_f64()?;
            out.push_str(&format!("{i},{l:e},{v:e}\n"));
        }
    }
    Some(out)
}

fn build_kernel(
    d: usize,
    dsl: Option<&str>,
    delta: &[(MultiIndex, f64)],
    locus: &LocusSpec,
    regulator: Option<f64>,
) -> Result<DistributionKernel, JobError> {
    let mut k = match dsl {
        Some(text) => {
            if text.trim().is_empty() {
                return Err(JobError::Schema("empty kernel DSL".into()));
            }
            DistributionKernel::parse(d, text, locus.into()).map_err(schema)?
        }
        None if !delta.is_empty() => DistributionKernel::delta_only(d, delta.to_vec()),
        None => {
            return Err(JobError::Schema(
                "kernel DSL or delta part required".into(),
            ))
        }
    };
    if dsl.is_some() && !delta.is_empty() {
        k.delta = delta.to_vec();
    }
    k.regulator = regulator;
    Ok(k)
}

fn run_sd(spec: &JobSpec, job: &SdJob) -> Result<Value, JobError> {
    if job.d == 0 {
        return Err(JobError::Schema("dimension must be positive".into()));
    }
    let kernel = build_kernel(
        job.d,
        job.kernel.as_deref(),
        &job.delta,
        &job.locus,
        job.regulator,
    )?;
    let opts = Tolerances::quad_opts(spec);
    let probes = scaling::default_probes(job.d);
    let report = scaling::scaling_degree_estimate_with(&kernel, &probes, job.n_dyadic, opts)
        .map_err(numerical)?;
    Ok(json!({
        "sd_estimate": report.sd_estimate,
        "residual": report.residual,
        "exact": report.exact,
        "probes": report.probes.iter().map(|p| json!({
            "slope": p.slope,
            "sd_estimate": p.sd_estimate,
            "residual": p.residual,
            "samples": p.samples,
        })).collect::<Vec<_>>(),
    }))
}

fn random_probes(d: usize, count: usize, seed: u64) -> Vec<TestFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let center: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.3..0.3)).collect();
            let radius = rng.gen_range(0.5..1.5);
            TestFunction::bump(d, center, radius).expect("valid probe")
        })
        .collect()
}

fn run_extend(spec: &JobSpec, job: &ExtendJob) -> Result<Value, JobError> {
    let mut kernel = build_kernel(
        job.d,
        Some(&job.kernel),
        &[],
        &LocusSpec::Origin,
        None,
    )?;
    if let Some(sd) = job.declared_sd {
        kernel = kernel.with_declared_sd(sd);
    }
    let cutoff = CutoffFamily::new(job.d, job.cutoff_eps, job.cutoff_r);
    let sd = match kernel.declared_sd {
        Some(sd) => sd,
        None => {
            scaling::scaling_degree_estimate(&kernel, &scaling::default_probes(job.d), 12)
                .map_err(numerical)?
                .sd_estimate
        }
    };
    let result = if sd < job.d as f64 {
        extension::extend_unique(kernel, cutoff, job.series_terms).map_err(numerical)?
    } else {
        let w = extension::build_w_operator(job.d, sd - job.d as f64, cutoff.clone());
        extension::extend_with_w(kernel, w, job.constants.clone(), cutoff, job.series_terms)
            .map_err(numerical)?
    };
    let opts = Tolerances::quad_opts(spec);
    let probes = random_probes(job.d, job.probes, spec.seed.unwrap_or(0));
    let mut pairings = Vec::new();
    for phi in &probes {
        let p = result
            .extension
            .pair_with(phi, opts)
            .map_err(numerical)?;
        pairings.push(json!({
            "center": phi.center,
            "radius": phi.radius,
            "value": p.value,
            "error": p.error,
            "tail_bound": p.tail_bound,
            "terms_used": p.terms_used,
        }));
    }
    let sd_after = if job.estimate_sd_after {
        Some(
            extension::extension_sd_estimate(&result.extension, &probes, 2, 9)
                .map_err(numerical)?,
        )
    } else {
        None
    };
    Ok(json!({
        "mode": match result.mode {
            ExtensionMode::Unique => "unique",
            ExtensionMode::Ambiguous => "ambiguous",
        },
        "ambiguity_dimension": result.ambiguity_dimension,
        "constants": result.constants,
        "sd_input": result.sd_input,
        "sd_after": sd_after,
        "pairings": pairings,
    }))
}

fn parse_vec(v: &[String]) -> Result<Vec<BigRational>, JobError> {
    v.iter().map(|s| parse_rat(s).map_err(schema)).collect()
}

fn parse_mat(m: &[Vec<String>]) -> Result<Vec<Vec<BigRational>>, JobError> {
    m.iter().map(|row| parse_vec(row)).collect()
}

fn rat_strings(v: &[BigRational]) -> Vec<String> {
    v.iter().map(|r| r.to_string()).collect()
}

fn witness_json(d: usize, n: usize, witness: &[EdgeWitness]) -> Value {
    let sums = cones::witness_vertex_sums(d, n, witness);
    json!({
        "edges": witness.iter().map(|e| json!({
            "source": e.source,
            "range": e.range,
            "direction": rat_strings(&e.direction),
            "beta": e.beta.to_string(),
        })).collect::<Vec<_>>(),
        "vertex_sums": sums.iter().map(|s| rat_strings(s)).collect::<Vec<_>>(),
    })
}

fn immersion_json(d: usize, n: usize, verdict: &ImmersionVerdict) -> Value {
    match verdict {
        ImmersionVerdict::Feasible { witness } => json!({
            "verdict": "feasible",
            "witness": witness_json(d, n, witness),
        }),
        ImmersionVerdict::Infeasible => json!({ "verdict": "infeasible" }),
        ImmersionVerdict::IncompleteSearch => json!({ "verdict": "incomplete_search" }),
    }
}

fn run_wf(job: &WfJob) -> Result<Value, JobError> {
    match job {
        WfJob::Member { cone, x, xp, k, kp } => {
            let x = parse_vec(x)?;
            let xp = parse_vec(xp)?;
            let k = parse_vec(k)?;
            let kp = parse_vec(kp)?;
            let member = match cone {
                ConeName::Commutator => cones::wf_commutator_member(&x, &xp, &k, &kp),
                ConeName::Hadamard => cones::wf2_hadamard_member(&x, &xp, &k, &kp),
                ConeName::Feynman => cones::wf_feynman_member(&x, &xp, &k, &kp),
            }
            .map_err(schema)?;
            Ok(json!({ "member": member }))
        }
        WfJob::Hormander {
            d: _,
            base_a,
            generators_a,
            base_b,
            generators_b,
        } => {
            let a = ConeGenerators::new(parse_vec(base_a)?, parse_mat(generators_a)?)
                .map_err(schema)?;
            let b = ConeGenerators::new(parse_vec(base_b)?, parse_mat(generators_b)?)
                .map_err(schema)?;
            let ok = cones::hormander_product_check(&a, &b).map_err(numerical)?;
            Ok(json!({ "product_allowed": ok }))
        }
        WfJob::GammaTo {
            d,
            points,
            covectors,
            grid,
        } => {
            let cc = CovectorConfig::new(*d, parse_mat(points)?, parse_mat(covectors)?)
                .map_err(schema)?;
            let grid = grid.as_ref().map(|g| parse_mat(g)).transpose()?;
            let verdict = cones::gamma_to_member(&cc, grid.as_deref()).map_err(numerical)?;
            Ok(immersion_json(*d, cc.n(), &verdict))
        }
        WfJob::Digamma {
            d,
            points,
            covectors,
            degrees,
            grid,
        } => {
            let cc = CovectorConfig::new(*d, parse_mat(points)?, parse_mat(covectors)?)
                .map_err(schema)?;
            let grid = grid.as_ref().map(|g| parse_mat(g)).transpose()?;
            let verdict =
                cones::digamma_member(&cc, degrees, grid.as_deref()).map_err(numerical)?;
            Ok(immersion_json(*d, cc.n(), &verdict))
        }
    }
}

fn bitmask_to_indices(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

fn run_cover(job: &CoverJob) -> Result<Value, JobError> {
    let config = PointConfig::new(job.d, parse_mat(&job.points)?).map_err(schema)?;
    let witness = minkowski::cover_witness(&config);
    let witness_json = match &witness {
        CoverWitness::OnDiagonal => json!({ "verdict": "on_diagonal" }),
        CoverWitness::Member { subset } => json!({
            "verdict": "member",
            "subset": bitmask_to_indices(*subset),
        }),
    };
    let weights = if job.weights {
        match minkowski::partition_weights(&config) {
            Ok(ws) => Some(
                ws.iter()
                    .map(|(mask, w)| json!([bitmask_to_indices(*mask), w.to_string()]))
                    .collect::<Vec<_>>(),
            ),
            Err(_) => None,
        }
    } else {
        None
    };
    Ok(json!({ "witness": witness_json, "weights": weights }))
}

fn subset_mask(indices: &[usize], n: usize) -> Result<u32, JobError> {
    let mut mask = 0u32;
    for &i in indices {
        if i >= n {
            return Err(JobError::Schema(format!("point index {i} out of range")));
        }
        mask |= 1 << i;
    }
    if mask == 0 || mask == (1 << n) - 1 {
        return Err(JobError::Schema(
            "subset must be proper and nonempty".into(),
        ));
    }
    Ok(mask)
}

fn run_glue(job: &GlueJob) -> Result<Value, JobError> {
    let config = PointConfig::new(job.d, parse_mat(&job.points)?).map_err(schema)?;
    let n = config.n();
    let m1 = subset_mask(&job.i1, n)?;
    let m2 = subset_mask(&job.i2, n)?;
    if !minkowski::c_i_member(&config, m1) || !minkowski::c_i_member(&config, m2) {
        return Err(JobError::Schema(
            "config must lie in both causal cover members".into(),
        ));
    }
    let consistent = words::glue_consistent(&config, m1, m2);
    let all: Vec<usize> = (0..n).collect();
    let normal_form = words::causal_factorize(&config, &all);
    Ok(json!({
        "consistent": consistent,
        "normal_form": normal_form.blocks,
    }))
}

fn run_wick(job: &WickJob) -> Result<Value, JobError> {
    let terms = if job.saturated_only {
        let graphs = wick::enumerate_saturated_graphs(&job.powers);
        graphs
            .into_iter()
            .map(|g| {
                let c = wick::wick_coefficient(&g, &job.powers).map_err(schema)?;
                Ok(json!({
                    "multiplicities": g.upper,
                    "coefficient": c.to_string(),
                    "connected": g.is_connected(),
                    "loops": g.loops(),
                }))
            })
            .collect::<Result<Vec<_>, JobError>>()?
    } else {
        wick::wick_expand(&job.powers)
            .map_err(schema)?
            .into_iter()
            .map(|t| {
                json!({
                    "multiplicities": t.graph.upper,
                    "coefficient": t.coefficient.to_string(),
                    "residuals": t.residuals,
                })
            })
            .collect()
    };
    Ok(json!({ "count": terms.len(), "terms": terms }))
}

fn run_classify(job: &ClassifyJob) -> Result<Value, JobError> {
    let powers: Vec<usize> = if !job.powers.is_empty() {
        job.powers.clone()
    } else if let Some(k) = job.k {
        vec![k]
    } else {
        return Err(JobError::Schema("either k or powers required".into()));
    };
    let report =
        wick::classify_interaction(job.d, &powers, job.n_max).map_err(schema)?;
    Ok(json!({
        "verdict": match report.verdict {
            wick::RenormVerdict::Superrenormalizable => "superrenormalizable",
            wick::RenormVerdict::Renormalizable => "renormalizable",
            wick::RenormVerdict::NonRenormalizable => "nonrenormalizable",
        },
        "k_star": report.k_star,
        "d2_special": report.d2_special,
        "table": report.table.iter().map(|row| json!({
            "n": row.n,
            "omega": row.omega,
            "rho": row.rho,
            "ambiguity_dimension": row.ambiguity_dimension,
        })).collect::<Vec<_>>(),
    }))
}

fn run_probe(job: &ProbeJob) -> Result<Value, JobError> {
    let kernel = build_kernel(job.d, Some(&job.kernel), &[], &job.locus, None)?;
    let window = TestFunction::bump(job.d, job.window_center.clone(), job.window_radius)
        .map_err(schema)?;
    let report = fourier::fourier_decay_probe(&kernel, &window, &job.directions, job.n_dyadic)
        .map_err(numerical)?;
    Ok(json!({
        "directions": report.directions.iter().map(|(u, v)| json!({
            "direction": u,
            "verdict": match v {
                DirectionDecay::RapidDecay => json!("rapid_decay"),
                DirectionDecay::Exponent(e) => json!({ "exponent": e }),
                DirectionDecay::Inconclusive => json!("inconclusive"),
            },
        })).collect::<Vec<_>>(),
    }))
}
