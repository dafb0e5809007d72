//! Experiment drivers: the mesh → space → assembly → solve → error pipeline,
//! the parameter schedules, and the five experiment families.

pub mod report;
pub mod solutions;

use std::path::PathBuf;
use std::time::Instant;

use crate::assembly::{assemble, assemble_rhs, AssemblyConfig, AssemblyStats, Method};
use crate::error::{Error, Result};
use crate::fe_space::{FeSpace, NormRegion};
use crate::kernel::KernelParams;
use crate::mesh::{build_mesh, standard_omega, MeshKind};
use crate::parallel::{parallel_assemble, PartitionContext};
use crate::solver::{solve_with, Krylov, SolveReport, DEFAULT_TOL};

pub use report::{attach_rates, compute_rate, emit_csv, format_table, sci, write_csv, ReportRow, SweepValue};
pub use solutions::{find_solution, solution_catalog, ManufacturedSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Consistency,
    HConvergence,
    EpsConvergence,
    Comparison,
    Scaling,
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "consistency" => Ok(Self::Consistency),
            "h-convergence" | "h_convergence" => Ok(Self::HConvergence),
            "eps-convergence" | "eps_convergence" => Ok(Self::EpsConvergence),
            "comparison" => Ok(Self::Comparison),
            "scaling" => Ok(Self::Scaling),
            _ => Err(Error::Unknown { what: "experiment", name: s.to_string() }),
        }
    }
}

/// h = h₀ (1/2)^{ml−2} in 2D and h₀ (1/2)^{ml−1} in 3D.
pub fn level_h(dim: usize, h0: f64, ml: u32) -> f64 {
    h0 * 0.5f64.powi(ml as i32 - level_shift(dim))
}

/// ε = ε₀ (2/3)^{ml−2} in 2D and ε₀ (2/3)^{ml−1} in 3D.
pub fn level_eps(dim: usize, eps0: f64, ml: u32) -> f64 {
    eps0 * (2.0f64 / 3.0).powi(ml as i32 - level_shift(dim))
}

/// ε = ε₀ (3/4)^{L_max−3} in 2D and ε₀ (3/4)^{L_max−2} in 3D.
pub fn consistency_eps(dim: usize, eps0: f64, l_max: u32) -> f64 {
    eps0 * 0.75f64.powi(l_max as i32 - level_shift(dim) - 1)
}

fn level_shift(dim: usize) -> i32 {
    if dim == 3 {
        1
    } else {
        2
    }
}

/// Restart length of GMRES for unsymmetrized matrices.
pub const GMRES_RESTART: usize = 60;

/// One nonlocal Poisson solve.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub dim: usize,
    pub mesh: MeshKind,
    pub h: f64,
    pub delta: f64,
    /// Mollifier half-width; ignored (sharp kernel) by the barycenter method.
    pub eps: f64,
    pub degree: usize,
    pub assembly: AssemblyConfig,
    pub n_parts: usize,
    pub concurrent: bool,
    pub norm_region: NormRegion,
    pub tol: f64,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub n_dofs: usize,
    pub n_free: usize,
    pub l2_error: f64,
    /// L² error of the nodal interpolant of u on the same space.
    pub interp_error: f64,
    /// Assembly wall time, seconds.
    pub t_assembly: f64,
    /// Wall time of the whole solve, mesh generation included, seconds.
    pub t_total: f64,
    pub asymmetry: f64,
    pub stats: AssemblyStats,
    pub report: SolveReport,
    pub partitions: Vec<PartitionContext>,
    pub coefficients: Vec<f64>,
}

pub fn solve_problem(spec: &ProblemSpec, sol: &ManufacturedSolution) -> Result<SolveOutcome> {
    if sol.dim != spec.dim {
        return Err(Error::InvalidParameter(format!(
            "solution {} is {}D, problem is {}D",
            sol.name, sol.dim, spec.dim
        )));
    }
    let start = Instant::now();
    let eps = if spec.assembly.method == Method::Barycenter { 0.0 } else { spec.eps };
    let kernel = KernelParams::new(spec.dim, spec.delta, eps, 1.0)?;
    let mesh = build_mesh(spec.dim, standard_omega(spec.dim), spec.h, kernel.support(), spec.mesh)?;
    let space = FeSpace::new(&mesh, spec.degree)?;
    let t0 = Instant::now();
    let (matrix, asymmetry, stats, mut partitions) = if spec.n_parts == 1 {
        let a = assemble(&mesh, &space, &kernel, &spec.assembly)?;
        (a.matrix, a.asymmetry, a.stats, Vec::new())
    } else {
        let a = parallel_assemble(&mesh, &space, &kernel, &spec.assembly, spec.n_parts, spec.concurrent)?;
        (a.matrix, a.asymmetry, a.stats, a.contexts)
    };
    let t_assembly = t0.elapsed().as_secs_f64();
    let delta = spec.delta;
    let rhs = assemble_rhs(&mesh, &space, |x| sol.f(x, delta), |x| sol.g(x), &matrix)?;
    let g = space.lifting(|x| sol.g(x));
    let n_free = space.n_free();
    let t1 = Instant::now();
    let krylov = if spec.assembly.symmetrize { Krylov::Cg } else { Krylov::Gmres(GMRES_RESTART) };
    let (uh, report) = solve_with(krylov, &matrix, &rhs, &space.constrained, &g, spec.tol, 10 * n_free.max(1))?;
    let t_solve = t1.elapsed().as_secs_f64();
    for p in &mut partitions {
        p.t_t = p.t_a + t_solve;
    }
    let l2_error = space.l2_error(&mesh, &uh, |x| sol.u(x), spec.norm_region)?;
    let interp_error = space.l2_error(&mesh, &space.interpolate(|x| sol.u(x)), |x| sol.u(x), spec.norm_region)?;
    Ok(SolveOutcome {
        n_dofs: space.n_dofs,
        n_free,
        l2_error,
        interp_error,
        t_assembly,
        t_total: start.elapsed().as_secs_f64(),
        asymmetry,
        stats,
        report,
        partitions,
        coefficients: uh,
    })
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub dim: usize,
    pub mesh: MeshKind,
    pub solution: String,
    pub degree: usize,
    pub delta: f64,
    pub eps0: f64,
    pub h0: f64,
    /// Inclusive mesh-level sweep.
    pub ml_range: (u32, u32),
    pub l_min: u32,
    pub l_max: u32,
    /// Inclusive L_max sweep of the consistency test.
    pub l_max_range: (u32, u32),
    /// Number of ε values, halving from `eps0`, in the ε-study.
    pub eps_steps: usize,
    /// Escalation caps of the ε-study.
    pub ml_cap: u32,
    pub l_max_cap: u32,
    /// Relative change below which an ε-study row counts as settled.
    pub settle_tol: f64,
    pub method: Method,
    /// Symmetrize A and solve with CG instead of GMRES.
    pub symmetrize: bool,
    /// Partition counts; the first entry is used outside the scaling study.
    pub parts: Vec<usize>,
    pub concurrent: bool,
    pub norm_region: NormRegion,
    pub tol: f64,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Parameters of the published runs for each experiment family.
    pub fn defaults(kind: ExperimentKind, dim: usize) -> Self {
        let three = dim == 3;
        let mut c = Self {
            kind,
            dim,
            mesh: if three { MeshKind::Hex } else { MeshKind::Quad },
            solution: if three { "cubic3d" } else { "cubic2d" }.to_string(),
            degree: 1,
            delta: 0.2,
            eps0: if three { 0.01875 } else { 0.0125 },
            h0: if three { 0.2 } else { 0.1 },
            ml_range: if three { (1, 3) } else { (2, 5) },
            l_min: 1,
            l_max: if three { 2 } else { 3 },
            l_max_range: if three { (2, 4) } else { (3, 6) },
            eps_steps: 4,
            ml_cap: 6,
            l_max_cap: 8,
            settle_tol: 0.05,
            method: Method::MollifiedAdaptive,
            symmetrize: false,
            parts: vec![1],
            concurrent: true,
            norm_region: NormRegion::Omega,
            tol: DEFAULT_TOL,
            out: None,
        };
        match kind {
            ExperimentKind::Consistency => {
                c.solution = if three { "quad3d" } else { "quad2d" }.to_string();
                c.degree = 2;
                c.eps0 = 0.0125;
                c.h0 = 0.1;
            }
            ExperimentKind::EpsConvergence => {
                c.mesh = MeshKind::Tri;
                c.solution = "quartic2d".to_string();
                c.degree = 2;
                c.eps0 = 0.1;
                c.ml_range = (2, 2);
            }
            ExperimentKind::Comparison => c.solution = "quartic2d".to_string(),
            ExperimentKind::Scaling => {
                c.ml_range = (4, 4);
                c.parts = vec![1, 2, 4, 8];
            }
            ExperimentKind::HConvergence => {}
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.dim != 2 && self.dim != 3 {
            return bad(format!("dimension must be 2 or 3, got {}", self.dim));
        }
        if (self.dim == 3) != (self.mesh == MeshKind::Hex) {
            return bad(format!("mesh kind {:?} does not fit dimension {}", self.mesh, self.dim));
        }
        if self.ml_range.0 > self.ml_range.1 || self.l_max_range.0 > self.l_max_range.1 {
            return bad("empty sweep range".into());
        }
        if self.parts.is_empty() || self.parts.contains(&0) {
            return bad("partition counts must be positive".into());
        }
        if self.kind == ExperimentKind::EpsConvergence && self.eps_steps == 0 {
            return bad("ε sweep is empty".into());
        }
        if self.kind == ExperimentKind::Scaling && self.ml_range.0 != self.ml_range.1 {
            return bad("scaling runs at a single mesh level".into());
        }
        let s = find_solution(&self.solution)?;
        if s.dim != self.dim {
            return bad(format!("solution {} is {}D", s.name, s.dim));
        }
        AssemblyConfig::adaptive(self.l_min, self.l_max).validate()
    }

    fn assembly(&self, l_max: u32) -> AssemblyConfig {
        let cfg = match self.method {
            Method::MollifiedAdaptive => AssemblyConfig::adaptive(self.l_min, l_max),
            Method::Barycenter => AssemblyConfig::barycenter(),
        };
        AssemblyConfig { symmetrize: self.symmetrize, ..cfg }
    }

    fn spec(&self, h: f64, eps: f64, l_max: u32, n_parts: usize) -> ProblemSpec {
        ProblemSpec {
            dim: self.dim,
            mesh: self.mesh,
            h,
            delta: self.delta,
            eps,
            degree: self.degree,
            assembly: self.assembly(l_max),
            n_parts,
            concurrent: self.concurrent,
            norm_region: self.norm_region,
            tol: self.tol,
        }
    }
}

fn row_from(name: &str, value: SweepValue, out: &SolveOutcome) -> ReportRow {
    let mut r = ReportRow::new(name, value, out.n_free, out.l2_error);
    r.t_assembly = out.t_assembly;
    r.t_total = out.t_total;
    r
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    cfg.validate()?;
    let rows = match cfg.kind {
        ExperimentKind::Consistency => run_consistency(cfg)?,
        ExperimentKind::HConvergence => run_h_convergence(cfg)?,
        ExperimentKind::EpsConvergence => run_eps_convergence(cfg)?,
        ExperimentKind::Comparison => run_comparison(cfg)?,
        ExperimentKind::Scaling => run_scaling(cfg)?,
    };
    if let Some(path) = &cfg.out {
        emit_csv(&rows, path)?;
    }
    Ok(rows)
}

/// Fixed mesh h₀, L_max sweep with ε tied to L_max.
pub fn run_consistency(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let sol = find_solution(&cfg.solution)?;
    let mut rows = Vec::new();
    for l_max in cfg.l_max_range.0..=cfg.l_max_range.1 {
        let eps = consistency_eps(cfg.dim, cfg.eps0, l_max);
        let out = solve_problem(&cfg.spec(cfg.h0, eps, l_max, cfg.parts[0]), &sol)?;
        let mut r = row_from("l_max", SweepValue::Int(l_max.into()), &out);
        r.extras.push(("eps".into(), sci(eps)));
        rows.push(r);
    }
    attach_rates(&mut rows);
    Ok(rows)
}

/// Mesh-level sweep with the coupled h and ε schedules.
pub fn run_h_convergence(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let sol = find_solution(&cfg.solution)?;
    let mut rows = Vec::new();
    for ml in cfg.ml_range.0..=cfg.ml_range.1 {
        let (h, eps) = (level_h(cfg.dim, cfg.h0, ml), level_eps(cfg.dim, cfg.eps0, ml));
        let out = solve_problem(&cfg.spec(h, eps, cfg.l_max, cfg.parts[0]), &sol)?;
        let mut r = row_from("ml", SweepValue::Int(ml.into()), &out);
        r.extras.push(("h".into(), sci(h)));
        r.extras.push(("eps".into(), sci(eps)));
        rows.push(r);
    }
    attach_rates(&mut rows);
    Ok(rows)
}

/// ε halving from ε₀. For each ε the mesh level and L_max are raised
/// together until the error changes by less than `settle_tol`; the settled
/// error is reported with the interpolation error IE and RE = IE / error.
/// Each ε starts from the level at which the previous one settled.
pub fn run_eps_convergence(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let sol = find_solution(&cfg.solution)?;
    let mut rows = Vec::new();
    let (mut ml, mut l_max) = (cfg.ml_range.0, cfg.l_max);
    for step in 0..cfg.eps_steps {
        let eps = cfg.eps0 * 0.5f64.powi(step as i32);
        let h_at = |ml: u32| level_h(cfg.dim, cfg.h0, ml);
        let mut prev = solve_problem(&cfg.spec(h_at(ml), eps, l_max, cfg.parts[0]), &sol)?;
        let mut t_total = prev.t_total;
        let mut settled = false;
        let mut change = f64::NAN;
        while ml < cfg.ml_cap && l_max < cfg.l_max_cap {
            let next = solve_problem(&cfg.spec(h_at(ml + 1), eps, l_max + 1, cfg.parts[0]), &sol)?;
            t_total += next.t_total;
            ml += 1;
            l_max += 1;
            change = (next.l2_error - prev.l2_error).abs() / next.l2_error;
            prev = next;
            if change < cfg.settle_tol {
                settled = true;
                break;
            }
        }
        let mut r = row_from("eps", SweepValue::Float(eps), &prev);
        r.t_total = t_total;
        r.extras.push(("ml".into(), ml.to_string()));
        r.extras.push(("l_max".into(), l_max.to_string()));
        r.extras.push(("ie".into(), sci(prev.interp_error)));
        r.extras.push(("re".into(), sci(prev.interp_error / prev.l2_error)));
        r.extras.push(("last_change".into(), sci(change)));
        r.extras.push(("settled".into(), settled.to_string()));
        rows.push(r);
        // The next ε starts one level below where this one settled.
        if ml > cfg.ml_range.0 {
            ml -= 1;
            l_max -= 1;
        }
    }
    attach_rates(&mut rows);
    Ok(rows)
}

/// Number of ε-study rows that did not settle.
pub fn unsettled(rows: &[ReportRow]) -> usize {
    rows.iter().filter(|r| r.extra("settled") == Some("false")).count()
}

/// Adaptive assembly with two ε schedules against the barycenter baseline.
type EpsSchedule<'a> = Box<dyn Fn(u32) -> f64 + 'a>;

/// Series `adaptive-a`: ε = ε₀ (2/3)^{ml−2}; `adaptive-b`: ε = 2ε₀ (1/2)^{ml−2};
/// `barycenter`: sharp kernel, Lobatto outer rule, whole inner elements.
pub fn run_comparison(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let sol = find_solution(&cfg.solution)?;
    let shift = level_shift(cfg.dim);
    let schedules: [(&str, EpsSchedule); 3] = [
        ("adaptive-a", Box::new(|ml| level_eps(cfg.dim, cfg.eps0, ml))),
        ("adaptive-b", Box::new(move |ml| 2.0 * cfg.eps0 * 0.5f64.powi(ml as i32 - shift))),
        ("barycenter", Box::new(|_| 0.0)),
    ];
    let mut rows = Vec::new();
    for (series, eps_of) in &schedules {
        for ml in cfg.ml_range.0..=cfg.ml_range.1 {
            let h = level_h(cfg.dim, cfg.h0, ml);
            let eps = eps_of(ml);
            let mut spec = cfg.spec(h, eps, cfg.l_max, cfg.parts[0]);
            let base = if *series == "barycenter" {
                AssemblyConfig::barycenter()
            } else {
                AssemblyConfig::adaptive(cfg.l_min, cfg.l_max)
            };
            spec.assembly = AssemblyConfig { symmetrize: cfg.symmetrize, ..base };
            let out = solve_problem(&spec, &sol)?;
            let mut r = row_from("ml", SweepValue::Int(ml.into()), &out);
            r.series = series.to_string();
            r.extras.push(("eps".into(), sci(eps)));
            rows.push(r);
        }
    }
    attach_rates(&mut rows);
    Ok(rows)
}

/// The same problem for each partition count; reports t_a, t_t, the time
/// ratios TR_a(N) = t_a(N/2)/t_a(N), TR_t likewise, and S = t_a(first)/t_a(N).
/// Fails if the error depends on the partition count beyond 1e-10 relative.
pub fn run_scaling(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let sol = find_solution(&cfg.solution)?;
    let ml = cfg.ml_range.0;
    let (h, eps) = (level_h(cfg.dim, cfg.h0, ml), level_eps(cfg.dim, cfg.eps0, ml));
    let mut rows: Vec<ReportRow> = Vec::new();
    let mut outcomes: Vec<(usize, f64, f64)> = Vec::new();
    for &np in &cfg.parts {
        let out = solve_problem(&cfg.spec(h, eps, cfg.l_max, np), &sol)?;
        if let Some(first) = rows.first() {
            let diff = (out.l2_error - first.l2_error).abs() / first.l2_error;
            if diff > 1e-10 {
                return Err(Error::PartitionMismatch { n_parts: np, relative: diff });
            }
        }
        let t_t = out.t_assembly + out.report_time();
        let mut r = row_from("n_parts", SweepValue::Int(np as i64), &out);
        r.t_total = t_t;
        let (base_np, base_ta, _) = outcomes.first().copied().unwrap_or((np, out.t_assembly, t_t));
        let half = outcomes.iter().find(|o| o.0 * 2 == np);
        let ratio = |a: f64, b: f64| if b > 0.0 { sci(a / b) } else { String::new() };
        r.extras.push(("tr_a".into(), half.map(|o| ratio(o.1, out.t_assembly)).unwrap_or_default()));
        r.extras.push(("tr_t".into(), half.map(|o| ratio(o.2, t_t)).unwrap_or_default()));
        r.extras.push(("speedup".into(), ratio(base_ta, out.t_assembly)));
        r.extras.push(("base_parts".into(), base_np.to_string()));
        r.extras.push(("ml".into(), ml.to_string()));
        outcomes.push((np, out.t_assembly, t_t));
        rows.push(r);
    }
    // Rates across partition counts are meaningless.
    Ok(rows)
}

impl SolveOutcome {
    /// Wall time outside assembly (right-hand side, solve, error), seconds.
    pub fn report_time(&self) -> f64 {
        (self.t_total - self.t_assembly).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedules() {
        assert_eq!(level_h(2, 0.1, 2), 0.1);
        assert_eq!(level_h(2, 0.1, 4), 0.025);
        assert_eq!(level_h(3, 0.2, 1), 0.2);
        assert_eq!(level_h(3, 0.2, 3), 0.05);
        assert!((level_eps(2, 0.0125, 3) - 0.0125 * 2.0 / 3.0).abs() < 1e-18);
        assert!((level_eps(3, 0.01875, 2) - 0.0125).abs() < 1e-15);
        assert_eq!(consistency_eps(2, 0.0125, 3), 0.0125);
        assert_eq!(consistency_eps(3, 0.0125, 2), 0.0125);
        assert!((consistency_eps(2, 0.0125, 5) - 0.0125 * 0.5625).abs() < 1e-18);
    }

    #[test]
    fn parse_kinds() {
        assert_eq!("h-convergence".parse::<ExperimentKind>().unwrap(), ExperimentKind::HConvergence);
        assert!("bogus".parse::<ExperimentKind>().is_err());
    }

    #[test]
    fn validation() {
        let mut c = ExperimentConfig::defaults(ExperimentKind::HConvergence, 2);
        c.validate().unwrap();
        c.mesh = MeshKind::Hex;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::defaults(ExperimentKind::HConvergence, 2);
        c.solution = "cubic3d".into();
        assert!(c.validate().is_err());
        c.solution = "cubic2d".into();
        c.ml_range = (4, 3);
        assert!(c.validate().is_err());
        let c = ExperimentConfig::defaults(ExperimentKind::Consistency, 3);
        assert_eq!(c.solution, "quad3d");
        c.validate().unwrap();
    }

    #[test]
    fn small_h_convergence_is_deterministic() {
        let mut c = ExperimentConfig::defaults(ExperimentKind::HConvergence, 2);
        c.ml_range = (2, 3);
        let a = run_experiment(&c).unwrap();
        let b = run_experiment(&c).unwrap();
        let errs = |r: &[ReportRow]| r.iter().map(|r| r.l2_error.to_bits()).collect::<Vec<_>>();
        assert_eq!(errs(&a), errs(&b));
        assert!(a[0].rate.is_none());
        let p = a[1].rate.unwrap();
        assert!(p > 1.8 && p < 2.2, "{p}");
    }
}
