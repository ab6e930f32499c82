//! Command-line entry points: `run`, `converge` and `velform`.
//!
//! Exit codes: 0 when every hard check passes, 1 on a check failure, 2 on
//! configuration errors and 3 on a runtime blow-up.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::complexfield::{blob_density, BlobSources};
use crate::dynamics::{run_state, step, NormObserver, Observer, SimState, StepConfig};
use crate::flowdiag::{FlowObserver, SupportGeometry, TracerGrid};
use crate::report::{fmt_float, DiagnosticsReport, ReportEntry};
use crate::scenario::ScenarioConfig;
use crate::velform::{curl_mtheta, formulation_residual, MTheta, ResidualNorms, ResidualOptions, VelocitySnapshot};
use crate::vorticity::GridGeometry;
use crate::{Error, Result, C64};

#[derive(Debug, Parser)]
#[command(name = "qcflow", version, about = "Active-scalar transport with quasiconformal flow diagnostics")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory, overriding the scenario's.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Multiply every check tolerance by this factor.
    #[arg(long, global = true)]
    pub tol_scale: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario with diagnostics and write report.csv and summary.txt.
    Run { config: PathBuf },
    /// Successive-difference convergence study in one parameter.
    Converge {
        config: PathBuf,
        #[arg(long, value_enum)]
        param: ConvergeParam,
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    /// Velocity-formulation residuals under simultaneous (h, dt) refinement.
    Velform { config: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConvergeParam {
    Epsilon,
    H,
    Dt,
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Blowup { .. } => EXIT_BLOWUP,
        Error::Config { .. } | Error::Input(_) | Error::Memory { .. } => EXIT_CONFIG,
        _ => EXIT_FAIL,
    }
}

/// Parse arguments, execute, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be >= 1");
            return EXIT_CONFIG;
        }
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start thread pool: {e}");
            return EXIT_FAIL;
        }
    };
    match pool.install(|| execute(&cli)) {
        Ok(report) => {
            if report.all_hard_pass() {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn load(path: &Path, cli: &Cli) -> Result<(ScenarioConfig, PathBuf)> {
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(s) = cli.tol_scale {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::config(None, "--tol-scale must be > 0"));
        }
        cfg.diagnostics.tol_scale = s;
    }
    let out = cli.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    std::fs::create_dir_all(&out)?;
    Ok((cfg, out))
}

fn execute(cli: &Cli) -> Result<DiagnosticsReport> {
    match &cli.command {
        Command::Run { config } => {
            let (cfg, out) = load(config, cli)?;
            let outcome = run_scenario(&cfg, Some(&out));
            let report = match outcome {
                Ok(r) => r,
                Err((partial, e)) => {
                    write_report(&partial, &out)?;
                    return Err(e);
                }
            };
            write_report(&report, &out)?;
            print!("{}", report.summary());
            Ok(report)
        }
        Command::Converge { config, param, levels } => {
            let (cfg, out) = load(config, cli)?;
            let table = converge_study(&cfg, *param, *levels)?;
            std::fs::write(out.join("converge.csv"), table.to_csv_string())?;
            let report = table.report(&cfg);
            write_report(&report, &out)?;
            print!("{}", report.summary());
            Ok(report)
        }
        Command::Velform { config } => {
            let (cfg, out) = load(config, cli)?;
            let study = velform_study(&cfg)?;
            std::fs::write(out.join("velform.csv"), study.to_csv_string())?;
            if study.rows.iter().any(|r| r.norms.unreliable_domain) {
                eprintln!(
                    "warning: |v| on the snapshot boundary exceeds 10% of its interior maximum; \
                     the potential may be affected by the truncated domain"
                );
            }
            write_report(&study.report, &out)?;
            print!("{}", study.report.summary());
            Ok(study.report)
        }
    }
}

fn write_report(report: &DiagnosticsReport, out: &Path) -> Result<()> {
    report.write_csv(&out.join("report.csv"))?;
    std::fs::write(out.join("summary.txt"), report.summary())?;
    Ok(())
}

fn echo(cfg: &ScenarioConfig, blobs: Option<usize>) -> Vec<(String, String)> {
    let n = &cfg.numerics;
    let mut out = vec![
        ("name".into(), cfg.name.clone()),
        ("kernel".into(), format!("{:?}", cfg.kernel.kind).to_lowercase()),
        ("theta".into(), fmt_float(cfg.kernel.theta)),
        ("h".into(), fmt_float(n.h)),
        ("dt".into(), fmt_float(n.dt)),
        ("t_end".into(), fmt_float(n.t_end)),
        ("blob_radius".into(), fmt_float(cfg.blob_radius())),
        ("blob_shape".into(), format!("{:?}", n.blob_shape).to_lowercase()),
        ("scheme".into(), format!("{:?}", n.scheme).to_lowercase()),
        ("tol_scale".into(), fmt_float(cfg.diagnostics.tol_scale)),
    ];
    if let Some(b) = blobs {
        out.push(("blobs".into(), b.to_string()));
    }
    out
}

/// Writes blob checkpoints at multiples of `every` steps among the
/// sampled states.
struct CheckpointObserver<'a> {
    dir: &'a Path,
    every: u64,
}

fn checkpoint_path(dir: &Path, t: f64) -> PathBuf {
    dir.join(format!("blobs_t{t:.6}.csv"))
}

impl Observer for CheckpointObserver<'_> {
    fn observe(&mut self, state: &SimState, _report: &mut DiagnosticsReport) -> Result<()> {
        if self.every > 0 && state.step_count.is_multiple_of(self.every) {
            state.save_checkpoint(&checkpoint_path(self.dir, state.t))?;
        }
        Ok(())
    }
}

/// Run a scenario with its diagnostics. On failure the report gathered so
/// far is returned alongside the error.
pub fn run_scenario(
    cfg: &ScenarioConfig,
    out: Option<&Path>,
) -> std::result::Result<DiagnosticsReport, (DiagnosticsReport, Error)> {
    let mut report = DiagnosticsReport::default();
    match run_into(cfg, out, &mut report) {
        Ok(()) => Ok(report),
        Err(e) => Err((report, e)),
    }
}

fn run_into(cfg: &ScenarioConfig, out: Option<&Path>, report: &mut DiagnosticsReport) -> Result<()> {
    cfg.validate()?;
    let grid = cfg.initial_grid()?;
    let step_cfg = cfg.step_config();
    let mut state = SimState::from_grid(&grid, cfg.kernel_spec(), 0.0);
    report.echo = echo(cfg, Some(state.blobs.len()));
    let d = &cfg.diagnostics;
    let support = SupportGeometry::from_grid(&grid);
    if cfg.tracers.enabled && d.flow {
        state = state.with_tracers(TracerGrid::build(&cfg.tracers.spec(), &support)?);
    }
    let blob = step_cfg.blob_kernel();
    let mut norms = NormObserver::new(&state, blob, d.bound_rel * d.tol_scale);
    let mut flow = match &state.tracers {
        Some(_) => Some(FlowObserver::new(&state, blob, &support, cfg.flowdiag_config())?),
        None => None,
    };
    if let (Some(fo), true) = (&flow, d.initial_derivative) {
        let tau = d.initial_tau.unwrap_or(step_cfg.dt / 10.0);
        let short = step(&state, &StepConfig { dt: tau, ..step_cfg })?;
        let tr = short.tracers.as_ref().expect("tracers present");
        report.extend(fo.initial_derivative_entry(tr, tau));
    }
    if let Some(dir) = out {
        state.save_checkpoint(&checkpoint_path(dir, 0.0))?;
    }
    let dir = out.map(Path::to_path_buf).unwrap_or_default();
    let mut ckpt = CheckpointObserver {
        dir: &dir,
        every: if out.is_some() { cfg.output.checkpoint_every } else { 0 },
    };
    let mut observers: Vec<&mut dyn Observer> = Vec::new();
    if d.norms {
        observers.push(&mut norms);
    }
    if let Some(fo) = flow.as_mut() {
        observers.push(fo);
    }
    observers.push(&mut ckpt);
    let last = run_state(state, &step_cfg, &cfg.run_options(), &mut observers, report)?;
    if let Some(dir) = out {
        last.save_checkpoint(&checkpoint_path(dir, last.t))?;
    }
    Ok(())
}

/// One level of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergeRow {
    pub level: usize,
    pub value: f64,
    /// `‖ρ_k - ρ_{k+1}‖₁` on the common grid; absent on the last level.
    pub diff_to_next: Option<f64>,
    /// `log₂(d_{k-1} / d_k)`; absent on the first two levels.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergeTable {
    pub param: ConvergeParam,
    pub t: f64,
    pub rows: Vec<ConvergeRow>,
}

impl ConvergeTable {
    pub fn to_csv_string(&self) -> String {
        let opt = |x: Option<f64>| x.map(fmt_float).unwrap_or_default();
        let mut s = String::from("level,param,value,t,l1_diff_to_next,order\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.level,
                param_name(self.param),
                fmt_float(r.value),
                fmt_float(self.t),
                opt(r.diff_to_next),
                opt(r.order)
            );
        }
        s
    }

    pub fn diffs(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.diff_to_next).collect()
    }

    pub fn orders(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.order).collect()
    }

    /// Epsilon studies require strictly decreasing differences; dt studies
    /// require the scheme's order (minus a half); h studies are reported
    /// only.
    pub fn report(&self, cfg: &ScenarioConfig) -> DiagnosticsReport {
        let mut rep = DiagnosticsReport {
            echo: echo(cfg, None),
            ..Default::default()
        };
        let diffs = self.diffs();
        let worst_ratio = diffs.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
        match self.param {
            ConvergeParam::Epsilon => {
                let mut e = ReportEntry::upper("converge_ratio", self.t, worst_ratio, 1.0);
                if !(worst_ratio < 1.0) {
                    e.verdict = crate::report::Verdict::Fail;
                }
                rep.push(e);
            }
            ConvergeParam::H => rep.push(ReportEntry::upper("converge_ratio", self.t, worst_ratio, 1.0).soft()),
            ConvergeParam::Dt => {
                let want = match cfg.numerics.scheme {
                    crate::dynamics::Scheme::RK4 => 3.5,
                    crate::dynamics::Scheme::RK2 => 1.5,
                };
                let min = self.orders().into_iter().fold(f64::INFINITY, f64::min);
                rep.push(ReportEntry::lower("converge_order", self.t, min, want));
            }
        }
        rep
    }
}

fn param_name(p: ConvergeParam) -> &'static str {
    match p {
        ConvergeParam::Epsilon => "epsilon",
        ConvergeParam::H => "h",
        ConvergeParam::Dt => "dt",
    }
}

/// Level `k` of a study: the chosen parameter divided by `2^k`.
pub fn level_config(cfg: &ScenarioConfig, param: ConvergeParam, k: usize) -> Result<ScenarioConfig> {
    let f = 0.5f64.powi(k as i32);
    let mut c = match param {
        ConvergeParam::H => cfg.refined(f, 1.0),
        ConvergeParam::Dt => cfg.refined(1.0, f),
        ConvergeParam::Epsilon => {
            let mut c = cfg.clone();
            let eps = c
                .initial
                .mollifier_epsilon
                .ok_or_else(|| Error::config(None, "an epsilon study needs initial.mollifier_epsilon"))?;
            c.initial.mollifier_epsilon = Some(eps * f);
            c
        }
    };
    c.tracers.enabled = false;
    Ok(c)
}

fn level_value(cfg: &ScenarioConfig, param: ConvergeParam) -> f64 {
    match param {
        ConvergeParam::H => cfg.numerics.h,
        ConvergeParam::Dt => cfg.numerics.dt,
        ConvergeParam::Epsilon => cfg.initial.mollifier_epsilon.unwrap_or(0.0),
    }
}

/// Rough peak memory of a run at this configuration, in MiB.
pub fn estimate_memory_mb(cfg: &ScenarioConfig) -> Result<u64> {
    let g = cfg.initial_geometry()?;
    let cells = g.len() as f64;
    // grids plus blobs and the RK stage copies of the packed state
    let bytes = cells * (8.0 * 4.0 + 48.0 + 16.0 * 12.0);
    Ok((bytes / (1024.0 * 1024.0)).ceil() as u64)
}

/// Run every level to `t_end` and compare the blob densities on a common
/// grid of the finest spacing.
pub fn converge_study(cfg: &ScenarioConfig, param: ConvergeParam, levels: usize) -> Result<ConvergeTable> {
    if levels < 3 {
        return Err(Error::config(None, format!("a convergence study needs >= 3 levels, got {levels}")));
    }
    let configs: Vec<ScenarioConfig> = (0..levels).map(|k| level_config(cfg, param, k)).collect::<Result<_>>()?;
    for c in &configs {
        c.validate()?;
    }
    let finest = configs.last().expect("levels >= 3");
    let needed = estimate_memory_mb(finest)?;
    if needed > cfg.numerics.memory_limit_mb {
        return Err(Error::Memory {
            needed_mb: needed,
            limit_mb: cfg.numerics.memory_limit_mb,
        });
    }
    let mut finals = Vec::with_capacity(levels);
    for c in &configs {
        let grid = c.initial_grid()?;
        let state = SimState::from_grid(&grid, c.kernel_spec(), 0.0);
        let mut rep = DiagnosticsReport::default();
        let last = run_state(state, &c.step_config(), &c.run_options(), &mut [], &mut rep)?;
        finals.push((last, c.step_config().blob_kernel()));
    }
    let h = configs.iter().map(|c| c.numerics.h).fold(f64::INFINITY, f64::min);
    let mut lo = C64::new(f64::INFINITY, f64::INFINITY);
    let mut hi = -lo;
    for (s, k) in &finals {
        let r = k.reach();
        for b in &s.blobs {
            lo = C64::new(lo.re.min(b.position.re - r), lo.im.min(b.position.im - r));
            hi = C64::new(hi.re.max(b.position.re + r), hi.im.max(b.position.im + r));
        }
    }
    let nx = ((hi.re - lo.re) / h).ceil() as usize + 1;
    let ny = ((hi.im - lo.im) / h).ceil() as usize + 1;
    let geom = GridGeometry::new(lo, h, nx, ny)?;
    let centers = geom.centers();
    let densities: Vec<Vec<f64>> = finals
        .iter()
        .map(|(s, k)| {
            let pos = s.positions();
            let circ = s.circulations();
            blob_density(&BlobSources { positions: &pos, masses: &circ, kernel: *k }, &centers)
        })
        .collect::<Result<_>>()?;
    let diffs: Vec<f64> = densities
        .windows(2)
        .map(|w| l1_difference(&w[0], &w[1], geom.cell_area()))
        .collect();
    let rows = (0..levels)
        .map(|k| ConvergeRow {
            level: k,
            value: level_value(&configs[k], param),
            diff_to_next: diffs.get(k).copied(),
            order: if k >= 1 && k < diffs.len() {
                Some((diffs[k - 1] / diffs[k]).log2())
            } else {
                None
            },
        })
        .collect();
    Ok(ConvergeTable {
        param,
        t: cfg.numerics.t_end,
        rows,
    })
}

/// `h² Σ |a - b|`.
pub fn l1_difference(a: &[f64], b: &[f64], cell_area: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .collect::<crate::complexfield::CompensatedSum>()
        .value()
        * cell_area
}

#[derive(Debug, Clone, PartialEq)]
pub struct VelformRow {
    pub level: usize,
    pub h: f64,
    pub dt: f64,
    pub t: f64,
    pub norms: ResidualNorms,
    /// Largest `|Im(e^{-iθ}∂̄v)|` over all sampled times of this level.
    pub curl_max: f64,
}

#[derive(Debug, Clone)]
pub struct VelformStudy {
    pub rows: Vec<VelformRow>,
    pub report: DiagnosticsReport,
}

impl VelformStudy {
    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("level,h,dt,t,r1_l2,r1_linf,r2_l2,r2_linf,q_linf,curl_max,unreliable_domain\n");
        for r in &self.rows {
            let n = &r.norms;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.level,
                fmt_float(r.h),
                fmt_float(r.dt),
                fmt_float(r.t),
                fmt_float(n.r1_l2),
                fmt_float(n.r1_linf),
                fmt_float(n.r2_l2),
                fmt_float(n.r2_linf),
                fmt_float(n.q_linf),
                fmt_float(r.curl_max),
                n.unreliable_domain
            );
        }
        s
    }
}

/// Square grid of spacing `h` and half-width about `center`.
fn window_grid(center: C64, half_width: f64, h: f64) -> Result<GridGeometry> {
    let n = ((2.0 * half_width / h).round() as usize).max(5);
    let w = n as f64 * h / 2.0;
    GridGeometry::new(center - C64::new(w, w), h, n, n)
}

/// Residual study over `velform.levels` simultaneous halvings of `h` and
/// `dt`. For the Euler kernel the velocity is divergence-free, so `q ≡ 0`
/// and only the potential rows are checked.
pub fn velform_study(cfg: &ScenarioConfig) -> Result<VelformStudy> {
    cfg.validate()?;
    let vf = &cfg.velform;
    let kernel = cfg.kernel_spec();
    let m = MTheta::new(kernel.theta);
    let euler = kernel.is_euler();
    let tol = cfg.diagnostics.tol_scale;
    let mut report = DiagnosticsReport::default();
    let mut rows = Vec::new();
    for level in 0..vf.levels {
        let f = 0.5f64.powi(level as i32);
        let c = cfg.refined(f, f);
        let grid = c.initial_grid()?;
        let stats = grid.stats();
        let step_cfg = c.step_config();
        let blob = step_cfg.blob_kernel();
        let dt = step_cfg.dt;
        let t_snap = vf.t.unwrap_or(c.numerics.t_end);
        let n = crate::dynamics::step_count(t_snap, dt)?;
        if n == 0 {
            return Err(Error::config(None, "velform needs a snapshot time of at least one step"));
        }
        let window = vf.window.unwrap_or(stats.support_radius);
        let full = window_grid(stats.support_center, c.extent_for(stats.support_radius), c.numerics.h)?;
        let local = window_grid(stats.support_center, window + 2.0 * c.numerics.h, c.numerics.h)?;
        let mut state = SimState::from_grid(&grid, kernel, 0.0);
        let mut snaps = Vec::with_capacity(3);
        let mut curl_max: f64 = 0.0;
        // the constraint is monitored through t_end even past the snapshots
        let last = (n + 1).max(crate::dynamics::step_count(c.numerics.t_end, dt)?);
        for k in 0..=last {
            if !euler && (k % c.numerics.sample_every == 0 || k == last) {
                let s = VelocitySnapshot::from_state(&state, blob, local)?;
                let curl = curl_mtheta(&s, m)?;
                curl_max = curl_max.max(curl);
                report.push(ReportEntry::upper("curl_mtheta", state.t, curl, vf.curl_tol * tol));
            }
            if k + 1 >= n && k <= n + 1 {
                snaps.push(VelocitySnapshot::from_state(&state, blob, full)?);
            }
            if k < last {
                state = step(&state, &step_cfg)?;
                state.t = (k + 1) as f64 * dt;
            }
        }
        let opts = ResidualOptions {
            boundary: vf.boundary,
            window,
            divergence_free: euler,
        };
        let norms = formulation_residual([&snaps[0], &snaps[1], &snaps[2]], m, opts)?;
        if euler {
            report.push(ReportEntry::upper("velform_q_zero", t_snap, norms.q_linf, 0.0));
        }
        rows.push(VelformRow {
            level,
            h: c.numerics.h,
            dt,
            t: t_snap,
            norms,
            curl_max,
        });
    }
    if !euler {
        for w in rows.windows(2) {
            let ratio = w[0].norms.r1_l2 / w[1].norms.r1_l2;
            let mut e = ReportEntry::lower("velform_r1_ratio", w[1].t, ratio, vf.min_ratio);
            if w[0].norms.r1_l2 == 0.0 && w[1].norms.r1_l2 == 0.0 {
                e = ReportEntry::inconclusive("velform_r1_ratio", w[1].t);
            }
            report.push(e);
        }
    }
    report.echo = echo(cfg, None);
    Ok(VelformStudy { rows, report })
}
