//! One runner per experiment. Each returns a [`ResultTable`] whose schema is
//! fixed by [`schema`].

use std::path::{Path, PathBuf};
use std::time::Instant;

use embezzle_core::catalysis_cs::{candidate_pool, descent_monte_carlo, nmin_search_grid};
use embezzle_core::catalysis_emb::{catalyst_residual, embezzle_protocol_for, lemma2_bound, SIDE_DIM_CAP};
use embezzle_core::distill::{distill_cs_plan, distill_cs_search, distill_emb_plan, DistillKind, DistillPlan};
use embezzle_core::duan::{qutrit_region_map, RegionMapConfig, MIN_GRID};
use embezzle_core::qmat::DensityMatrix;
use embezzle_core::qstates::{random_bipartite, MatrixDocument, SeededRng};
use embezzle_core::teleport::{average_fidelity_formula, average_fidelity_mc, entanglement_fraction};
use thiserror::Error;

use crate::config::{ConfigError, ExperimentKind, RunConfig, StateSource};
use crate::fixtures::{self, FixtureError, FixtureLabel};
use crate::output::{manifest_path, Cell, ColumnKind, Manifest, ResultTable};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Fixture(#[from] FixtureError),
    #[error("numerical failure: {0}")]
    Numerical(#[from] embezzle_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("bad manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
}

impl RunError {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Manifest { .. } => 2,
            RunError::Fixture(_) | RunError::Numerical(_) => 3,
            RunError::Io { .. } => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

use ColumnKind::{Int, Real, Text};

/// Column names and types written by `kind`.
pub fn schema(kind: ExperimentKind) -> Vec<(&'static str, ColumnKind)> {
    match kind {
        ExperimentKind::Fidelity => vec![
            ("source", Text),
            ("entanglement_fraction", Real),
            ("avg_fidelity", Real),
            ("label_quantity", Text),
            ("label", Real),
            ("mc_mean", Real),
            ("mc_stderr", Real),
        ],
        ExperimentKind::Nmin => vec![
            ("source", Text),
            ("epsilon", Real),
            ("n_min_mixed", Int),
            ("p_mixed", Real),
            ("k_mixed", Real),
            ("n_min_best", Int),
            ("p_best", Real),
            ("k_best", Real),
            ("best_index", Int),
            ("descent_ratio", Real),
            ("log2_dim_mixed", Real),
            ("log2_dim_best", Real),
        ],
        ExperimentKind::Montecarlo => vec![
            ("sample", Int),
            ("f_rho", Real),
            ("epsilon", Real),
            ("n_min_mixed", Int),
            ("n_min_best", Int),
            ("ratio", Real),
        ],
        ExperimentKind::Embezzle => vec![
            ("d", Int),
            ("M", Int),
            ("entanglement_fraction", Real),
            ("lemma2_bound", Real),
            ("avg_fidelity", Real),
            ("avg_fidelity_bound", Real),
        ],
        ExperimentKind::Consumption => vec![
            ("d", Int),
            ("M", Int),
            ("p_exact", Real),
            ("p_closed_form", Real),
            ("p_bound", Real),
            ("closed_form_gap", Real),
        ],
        ExperimentKind::QutritMap => vec![
            ("lambda1", Real),
            ("lambda2", Real),
            ("lambda3", Real),
            ("f", Real),
            ("lemma3_bound", Real),
            ("label_correlated", Text),
            ("label_embezzling", Text),
            ("M_required", Int),
        ],
        ExperimentKind::Distill => vec![
            ("source", Text),
            ("epsilon", Real),
            ("kind", Text),
            ("zeta", Text),
            ("p", Real),
            ("count", Int),
            ("k", Real),
            ("predicted_fidelity_lb", Real),
            ("predicted_consumption", Real),
            ("exact_fidelity", Real),
            ("log2_dim", Real),
        ],
    }
}

/// A named input state.
pub struct SourceState {
    pub name: String,
    pub state: DensityMatrix,
    pub label: Option<FixtureLabel>,
}

fn local_dim(rho: &DensityMatrix) -> Result<usize, RunError> {
    rho.split()
        .and_then(|s| s.square_dim())
        .ok_or_else(|| ConfigError::new("state-source", "state must have a square d x d split").into())
}

/// Random sources draw `N` states, state `i` from stream `2i` of the seed.
pub fn load_states(cfg: &RunConfig) -> Result<Vec<SourceState>, RunError> {
    match cfg.source() {
        StateSource::Fixture(sel) => sel
            .fixtures()
            .into_iter()
            .map(|f| {
                Ok(SourceState {
                    name: f.to_string(),
                    state: fixtures::load(f)?,
                    label: f.label(),
                })
            })
            .collect(),
        StateSource::File(path) => {
            let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
            let name = path.display().to_string();
            let doc = MatrixDocument::from_json(&text)
                .map_err(|e| ConfigError::new("state-source", format!("{name}: {e}")))?;
            let (m, split) = doc.to_matrix()?;
            Ok(vec![SourceState {
                state: fixtures::condition(&name, &m, split)?,
                name,
                label: None,
            }])
        }
        StateSource::Random => {
            let root = SeededRng::new(cfg.seed);
            (0..cfg.n)
                .map(|i| {
                    let mut rng = root.derive(2 * i as u64);
                    Ok(SourceState {
                        name: format!("random:{i}"),
                        state: random_bipartite(cfg.d, &mut rng)?,
                        label: None,
                    })
                })
                .collect()
        }
    }
}

fn log2_cs_dim(n: u64, d: usize) -> f64 {
    n.saturating_sub(1) as f64 * 2.0 * (d as f64).log2()
}

fn fidelity(cfg: &RunConfig) -> Result<ResultTable, RunError> {
    let mut table = ResultTable::new(schema(ExperimentKind::Fidelity));
    let root = SeededRng::new(cfg.seed);
    for (i, s) in load_states(cfg)?.into_iter().enumerate() {
        let d = local_dim(&s.state)?;
        let frac = entanglement_fraction(&s.state)?;
        let f = average_fidelity_formula(frac, d)?;
        let mc = if cfg.samples > 0 {
            Some(average_fidelity_mc(&s.state, cfg.samples, &root.derive(2 * i as u64 + 1))?)
        } else {
            None
        };
        table.push(vec![
            s.name.into(),
            frac.into(),
            f.into(),
            s.label.map(|l| l.quantity()).into(),
            s.label.map(|l| l.value()).into(),
            mc.map(|m| m.mean).into(),
            mc.map(|m| m.stderr).into(),
        ]);
    }
    Ok(table)
}

fn nmin(cfg: &RunConfig) -> Result<ResultTable, RunError> {
    let mut table = ResultTable::new(schema(ExperimentKind::Nmin));
    let rng = SeededRng::new(cfg.seed);
    for s in load_states(cfg)? {
        let d = local_dim(&s.state)?;
        for o in nmin_search_grid(&s.state, &cfg.epsilon_grid, cfg.n, &rng)? {
            table.push(vec![
                s.name.as_str().into(),
                o.epsilon.into(),
                o.n_min_mixed.into(),
                o.mixed.p_star.into(),
                o.mixed.k_star.into(),
                o.n_min_n.into(),
                o.best.p_star.into(),
                o.best.k_star.into(),
                o.best_index.into(),
                o.descent_ratio().into(),
                log2_cs_dim(o.n_min_mixed, d).into(),
                log2_cs_dim(o.n_min_n, d).into(),
            ]);
        }
    }
    Ok(table)
}

fn montecarlo(cfg: &RunConfig) -> Result<ResultTable, RunError> {
    let mut table = ResultTable::new(schema(ExperimentKind::Montecarlo));
    for s in descent_monte_carlo(cfg.d, cfg.samples, cfg.n, &SeededRng::new(cfg.seed))? {
        table.push(vec![
            s.index.into(),
            s.f_rho.into(),
            s.epsilon.into(),
            s.n_min_mixed.into(),
            s.n_min_n.into(),
            s.ratio.into(),
        ]);
    }
    Ok(table)
}

fn check_side(cfg: &RunConfig) -> Result<(), RunError> {
    if cfg.d.saturating_mul(cfg.m_max) > SIDE_DIM_CAP {
        return Err(ConfigError::new(
            "m-max",
            format!("d * m-max = {} exceeds the cap {SIDE_DIM_CAP}", cfg.d * cfg.m_max),
        )
        .into());
    }
    Ok(())
}

fn embezzle(cfg: &RunConfig) -> Result<ResultTable, RunError> {
    check_side(cfg)?;
    let mut table = ResultTable::new(schema(ExperimentKind::Embezzle));
    let d = cfg.d;
    let mut m = d.next_power_of_two();
    while m <= cfg.m_max {
        let out = embezzle_protocol_for(d, m)?;
        let lb = lemma2_bound(d, m)?;
        table.push(vec![
            d.into(),
            m.into(),
            out.fidelity.into(),
            lb.into(),
            average_fidelity_formula(out.fidelity, d)?.into(),
            average_fidelity_formula(lb, d)?.into(),
        ]);
        m *= 2;
    }
    Ok(table)
}

fn consumption(cfg: &RunConfig) -> Result<ResultTable, RunError> {
    check_side(cfg)?;
    let mut table = ResultTable::new(schema(ExperimentKind::Consumption));
    for m in cfg.d.max(4)..=cfg.m_max {
        let r = catalyst_residual(cfg.d, m)?;
        table.push(vec![
            cfg.d.into(),
            m.into(),
            r.p_exact.into(),
            r.p_closed_form.into(),
            r.p_bound.into(),
            (r.p_closed_form - r.p_exact).into(),
        ]);
    }
    Ok(table)
}

fn qutrit_map(cfg: &RunConfig) -> Result<ResultTable, RunError> {
    let mut table = ResultTable::new(schema(ExperimentKind::QutritMap));
    let points = qutrit_region_map(RegionMapConfig {
        resolution: cfg.resolution,
        threshold: cfg.threshold,
        margin: cfg.margin,
        bound_grid: MIN_GRID,
    })?;
    for p in points {
        table.push(vec![
            p.lambda[0].into(),
            p.lambda[1].into(),
            p.lambda[2].into(),
            p.f.into(),
            p.lemma3_bound.into(),
            p.correlated.as_str().into(),
            p.embezzling.as_str().into(),
            p.m_required.into(),
        ]);
    }
    Ok(table)
}

fn plan_row(source: &str, zeta: &str, plan: &DistillPlan, d: usize) -> Vec<Cell> {
    let (kind, log2_dim) = match plan.kind {
        DistillKind::ConvexSplit => ("CS", log2_cs_dim(plan.count, d)),
        DistillKind::Embezzling => ("E", 2.0 * (plan.count as f64).log2()),
    };
    vec![
        source.into(),
        plan.epsilon.into(),
        kind.into(),
        zeta.into(),
        plan.p.into(),
        plan.count.into(),
        plan.k.into(),
        plan.predicted_fidelity_lb.into(),
        plan.predicted_consumption.into(),
        plan.exact_fidelity.into(),
        log2_dim.into(),
    ]
}

/// Per state and `ε`: the convex-split plan with `ζ = I/d²`, the best of `N`
/// random candidates when `N > 0`, and the embezzling plan.
fn distill(cfg: &RunConfig) -> Result<ResultTable, RunError> {
    let mut table = ResultTable::new(schema(ExperimentKind::Distill));
    for s in load_states(cfg)? {
        let d = local_dim(&s.state)?;
        let pool = candidate_pool(d, cfg.n, &SeededRng::new(cfg.seed))?;
        for &eps in &cfg.epsilon_grid {
            let mixed = distill_cs_plan(&s.state, &pool[0], eps)?;
            table.push(plan_row(&s.name, "mixed", &mixed, d));
            if cfg.n > 0 {
                let (idx, best) = distill_cs_search(&s.state, &pool, eps)?;
                table.push(plan_row(&s.name, &format!("candidate:{idx}"), &best, d));
            }
            table.push(plan_row(&s.name, "", &distill_emb_plan(d, eps)?, d));
        }
    }
    Ok(table)
}

pub fn run(cfg: &RunConfig) -> Result<ResultTable, RunError> {
    match cfg.experiment {
        ExperimentKind::Fidelity => fidelity(cfg),
        ExperimentKind::Nmin => nmin(cfg),
        ExperimentKind::Montecarlo => montecarlo(cfg),
        ExperimentKind::Embezzle => embezzle(cfg),
        ExperimentKind::Consumption => consumption(cfg),
        ExperimentKind::QutritMap => qutrit_map(cfg),
        ExperimentKind::Distill => distill(cfg),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    std::fs::write(path, bytes).map_err(io_err(path))
}

/// Runs `cfg`, writes the CSV to `cfg.output_path` and the manifest next to
/// it.
pub fn execute(cfg: &RunConfig) -> Result<Manifest, RunError> {
    let start = Instant::now();
    let table = run(cfg)?;
    let csv = table.to_csv();
    let wall = start.elapsed().as_secs_f64();
    write_file(&cfg.output_path, &csv)?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        core_version: embezzle_core::VERSION.to_string(),
        rng: SeededRng::new(0).algorithm().to_string(),
        experiment: cfg.experiment.name().to_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        threads: rayon::current_num_threads(),
        wall_time_seconds: wall,
        output: cfg.output_path.clone(),
        rows: table.rows.len(),
        sha256: fixtures::sha256_hex(&csv),
    };
    write_file(&manifest_path(&cfg.output_path), manifest.to_json().as_bytes())?;
    Ok(manifest)
}

/// Outcome of re-running a manifest.
#[derive(Clone, Debug, PartialEq)]
pub struct Replay {
    pub expected: String,
    pub actual: String,
}

impl Replay {
    pub fn matches(&self) -> bool {
        self.expected == self.actual
    }
}

/// Re-runs the manifest's config. The CSV is written only when `out` is
/// given.
pub fn replay(manifest: &Path, out: Option<&Path>) -> Result<Replay, RunError> {
    let text = std::fs::read_to_string(manifest).map_err(io_err(manifest))?;
    let m = Manifest::from_json(&text).map_err(|e| RunError::Manifest {
        path: manifest.to_path_buf(),
        message: e.to_string(),
    })?;
    // Revalidate: the manifest may have been edited by hand.
    let cfg = RunConfig::from_toml(&m.config.to_toml())?;
    let csv = run(&cfg)?.to_csv();
    if let Some(path) = out {
        write_file(path, &csv)?;
    }
    Ok(Replay {
        expected: m.sha256,
        actual: fixtures::sha256_hex(&csv),
    })
}
