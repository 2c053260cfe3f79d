//! Canned scenarios and the subcommand runners behind the CLI.
//!
//! Each scenario is an ordinary [`ScenarioConfig`]; the built-ins pin the
//! numbers the acceptance experiments rely on. Every runner writes its
//! artifacts (TAWF arrays + CSV reports) into the output directory and is
//! deterministic for a fixed (config, seed).

use super::arrayfile::{write_array, ArrayFile};
use super::config::ScenarioConfig;
use super::report::{fmt_f64, write_conditions_csv, write_conditions_text, Csv, KeyValueReport};
use crate::boundary_ops::{back_project, check_stability_condition, CutoffProfile};
use crate::convexity::{
    check_flow_convexity, check_noncharacteristic, check_observation_time,
    check_strong_pseudoconvexity, verify_foliation, check_cone_condition, ConditionReport,
    FoliationFamily, FoliationOpts, ObservationOpts, PseudoconvexFamily, SampleRegion,
};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::field::{BumpField, Field2, RadialDist};
use crate::geometry::FlowOpts;
use crate::inversion::{
    neumann_consistency_experiment, recover_source, recover_speed, stability_probe,
    SourceRecoveryOpts, SpeedRecoveryOpts, SpeedRecoverySetup,
};
use crate::math::{vec2, Mat2, Vec2};
use crate::speed::SpeedField;
use crate::wave::{solve_ivp, solve_source, Grid, SolveOpts, Source, SourceAmplitude, TimeProfile};
use std::path::{Path, PathBuf};

pub const BUILTIN_NAMES: [&str; 5] = [
    "disk-basic",
    "herglotz-trap",
    "ellipse-major",
    "halfspace-cap",
    "neumann-consistency",
];

/// A built-in scenario by name.
pub fn builtin(name: &str) -> Option<ScenarioConfig> {
    let mut cfg = ScenarioConfig::default();
    match name {
        // c ≡ 1 unit disk, full-boundary observation: the clean baseline
        // where every hypothesis holds and inversion converges fast.
        "disk-basic" => {
            cfg.out_dir = "out/disk-basic".into();
            cfg.truth_source_kind = Some("bump".into());
            cfg.truth_source_params = vec![0.1, -0.05, 0.45, 1.0];
            cfg.truth_speed_kind = Some("bumps".into());
            cfg.truth_speed_params = vec![0.1, 0.0, 0.3, 0.05];
            cfg.truth_f_kind = Some("bump".into());
            cfg.truth_f_params = vec![0.0, 0.0, 0.97, 1.0];
        }
        // Radial speed with a trapped circular geodesic at r = 1 (blended
        // back to 1 before ∂Ω): uniqueness-side rows pass, the visibility
        // condition fails, and inversion of sources concentrated near the
        // trapped circle stagnates.
        "herglotz-trap" => {
            cfg.out_dir = "out/herglotz-trap".into();
            cfg.domain_params = vec![2.0];
            cfg.tau_const = Some(2.5);
            cfg.t_end = 2.5;
            cfg.speed_kind = "herglotz-blended".into();
            cfg.speed_params = vec![1.0, 1.5, 1.4, 1.9];
            // circles of the pure-profile region only: inside the blend the
            // speed slope collapses and outward convexity genuinely fails
            cfg.foliation_kind = "radial".into();
            cfg.foliation_params = vec![];
            cfg.s_min = 1.05;
            cfg.s_max = 1.25;
            cfg.s_steps = 6;
            cfg.truth_source_kind = Some("ring".into());
            cfg.truth_source_params = vec![1.0, 0.25, 10.0];
        }
        // Ellipse with circles around an exterior center beyond the major
        // vertex, observed on a small cap at that vertex: the observation
        // time flips at the half-major-axis length.
        "ellipse-major" => {
            cfg.out_dir = "out/ellipse-major".into();
            cfg.domain_kind = "ellipse".into();
            cfg.domain_params = vec![1.0, 0.6];
            cfg.gamma_arc = (-0.00708, 0.00708);
            cfg.tau_const = Some(1.05);
            cfg.t_end = 1.05;
            cfg.n = 192;
            cfg.foliation_kind = "circles".into();
            cfg.foliation_params = vec![1.04, 0.0];
            cfg.s_min = 0.06;
            cfg.s_max = 1.04;
            cfg.s_steps = 15;
        }
        // Ellipse observed on the cap x₁ > C: near-plane foliation of the
        // slab; the observation time flips at a − C (the vertex is the
        // nearest observed point from the slab's deep end).
        "halfspace-cap" => {
            cfg.out_dir = "out/halfspace-cap".into();
            cfg.domain_kind = "ellipse".into();
            cfg.domain_params = vec![1.4, 0.8];
            cfg.gamma_arc = (-0.10231, 0.10231);
            cfg.tau_const = Some(0.42);
            cfg.t_end = 0.42;
            cfg.n = 192;
            cfg.foliation_kind = "parabolas".into();
            cfg.foliation_params = vec![0.05];
            cfg.s_min = 1.0;
            cfg.s_max = 1.36;
            cfg.s_steps = 10;
        }
        // Variable interior speed, forced source: Neumann-recovery
        // refinement study data.
        "neumann-consistency" => {
            cfg.out_dir = "out/neumann-consistency".into();
            cfg.speed_kind = "bumps".into();
            cfg.speed_params = vec![-0.2, 0.1, 0.5, 0.3];
            cfg.tau_const = Some(2.0);
            cfg.t_end = 2.0;
            cfg.truth_source_kind = Some("bump".into());
            cfg.truth_source_params = vec![0.25, 0.0, 0.3, 1.0];
        }
        _ => return None,
    }
    Some(cfg)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subcommand {
    Forward,
    Measure,
    Neumann,
    Backproject,
    RecoverSource,
    RecoverSpeed,
    StabilityProbe,
    CheckConditions,
}

impl Subcommand {
    pub fn parse(s: &str) -> Option<Subcommand> {
        Some(match s {
            "forward" => Subcommand::Forward,
            "measure" => Subcommand::Measure,
            "neumann" => Subcommand::Neumann,
            "backproject" => Subcommand::Backproject,
            "recover-source" => Subcommand::RecoverSource,
            "recover-speed" => Subcommand::RecoverSpeed,
            "stability-probe" => Subcommand::StabilityProbe,
            "check-conditions" => Subcommand::CheckConditions,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug)]
pub struct RunOpts {
    pub out_dir: Option<String>,
    pub resolution: Option<usize>,
    pub seed: Option<u64>,
    pub quiet: bool,
    pub strict: bool,
    pub exec: Execution,
}

impl Default for RunOpts {
    fn default() -> Self {
        RunOpts {
            out_dir: None,
            resolution: None,
            seed: None,
            quiet: true,
            strict: false,
            exec: Execution::Parallel,
        }
    }
}

pub struct RunSummary {
    pub out_dir: PathBuf,
    pub conditions_passed: Option<bool>,
}

/// Scenario-wide derived objects.
pub struct Assembled {
    pub cfg: ScenarioConfig,
    pub domain: Domain,
    pub speed: SpeedField,
}

impl Assembled {
    pub fn new(mut cfg: ScenarioConfig, opts: &RunOpts) -> Result<Assembled> {
        if let Some(n) = opts.resolution {
            cfg.n = n;
        }
        if let Some(s) = opts.seed {
            cfg.seed = s;
        }
        if let Some(d) = &opts.out_dir {
            cfg.out_dir = d.clone();
        }
        let domain = cfg.build_domain()?;
        let speed = cfg.build_speed()?;
        Ok(Assembled { cfg, domain, speed })
    }

    pub fn grid(&self) -> Grid {
        Grid::for_scenario(&self.domain, &self.speed, self.cfg.t_end, self.cfg.n, self.cfg.cfl)
    }

    /// Support constraint K for source recovery (derived from the scenario's
    /// speed structure: an annulus around the trapped circle for the
    /// trapping profile, a concentric disk otherwise).
    pub fn k_region(&self) -> KRegion {
        if matches!(self.speed, SpeedField::Herglotz { .. }) {
            KRegion::Annulus { r_lo: 0.7, r_hi: 1.3 }
        } else {
            KRegion::Disk { r: 0.75 * self.domain.outer_radius() }
        }
    }

    /// Tighter constraint for nonlinear speed recovery (keeps the initial
    /// datum's Laplacian bounded away from zero on K).
    pub fn k_speed_region(&self) -> KRegion {
        KRegion::Disk { r: 0.45 * self.domain.outer_radius() }
    }

    pub fn truth_source(&self) -> Result<Box<dyn Field2 + Send + Sync>> {
        match &self.cfg.truth_source_kind {
            Some(k) => build_field(k, &self.cfg.truth_source_params),
            None => Err(Error::precondition(
                "this subcommand needs [truth] source_kind in the scenario config",
            )),
        }
    }

    pub fn truth_f(&self) -> Result<Box<dyn Field2 + Send + Sync>> {
        match &self.cfg.truth_f_kind {
            Some(k) => build_field(k, &self.cfg.truth_f_params),
            None => Err(Error::precondition(
                "this subcommand needs [truth] f_kind in the scenario config",
            )),
        }
    }

    pub fn foliation(&self) -> Result<FoliationFamily> {
        let (surface_fn, orientation): (Box<dyn Field2 + Send + Sync>, f64) =
            match (self.cfg.foliation_kind.as_str(), self.cfg.foliation_params.as_slice()) {
                ("circles", [cx, cy]) => {
                    (Box::new(RadialDist { center: vec2(*cx, *cy) }), -1.0)
                }
                ("radial", []) => (Box::new(RadialDist { center: Vec2::ZERO }), 1.0),
                ("parabolas", [kappa]) => {
                    let k = *kappa;
                    (Box::new(Parabolas { kappa: k }), 1.0)
                }
                _ => {
                    return Err(Error::Config {
                        line: 0,
                        msg: format!(
                            "unknown foliation kind '{}' with {} params",
                            self.cfg.foliation_kind,
                            self.cfg.foliation_params.len()
                        ),
                    })
                }
            };
        Ok(FoliationFamily {
            surface_fn,
            s_range: (self.cfg.s_min, self.cfg.s_max),
            s_steps: self.cfg.s_steps,
            orientation,
        })
    }

    /// Collar phase family (R − xⁿ)² − δt² − s near ∂Ω, with R the largest
    /// curvature radius of the boundary.
    pub fn collar_family(&self) -> Result<PseudoconvexFamily> {
        let (r_max, xn): (f64, Box<dyn Field2 + Send + Sync>) = match self.domain.shape {
            crate::domain::DomainShape::Disk { radius } => {
                (radius, Box::new(DiskNormalCoord { radius }))
            }
            crate::domain::DomainShape::Ellipse { a, b } => {
                let r = (a * a / b).max(b * b / a);
                (r, Box::new(BoundaryDistCoord { domain: self.domain.clone() }))
            }
        };
        let eps = 0.04 * r_max;
        PseudoconvexFamily::new(
            r_max,
            0.99,
            8.0,
            eps,
            ((r_max - eps) * (r_max - eps), r_max * r_max),
            xn,
        )
    }
}

#[derive(Clone, Copy, Debug)]
pub enum KRegion {
    Disk { r: f64 },
    Annulus { r_lo: f64, r_hi: f64 },
}

impl KRegion {
    pub fn contains(&self, p: Vec2) -> bool {
        match *self {
            KRegion::Disk { r } => p.norm() < r,
            KRegion::Annulus { r_lo, r_hi } => {
                let n = p.norm();
                r_lo < n && n < r_hi
            }
        }
    }

    /// Smooth C² window: 1 well inside, 0 outside.
    pub fn smooth_weight(&self, p: Vec2) -> f64 {
        let cube = |s: f64| {
            if s >= 1.0 {
                0.0
            } else {
                (1.0 - s).powi(3)
            }
        };
        match *self {
            KRegion::Disk { r } => cube(p.norm2() / (r * r)),
            KRegion::Annulus { r_lo, r_hi } => {
                let mid = 0.5 * (r_lo + r_hi);
                let half = 0.5 * (r_hi - r_lo);
                let s = (p.norm() - mid) / half;
                cube(s * s)
            }
        }
    }

    pub fn bbox(&self) -> (Vec2, Vec2) {
        match *self {
            KRegion::Disk { r } => (vec2(-r, -r), vec2(r, r)),
            KRegion::Annulus { r_hi, .. } => (vec2(-r_hi, -r_hi), vec2(r_hi, r_hi)),
        }
    }

    /// Deterministic lattice sampling of K.
    pub fn samples(&self, per_axis: usize) -> Vec<Vec2> {
        let (lo, hi) = self.bbox();
        let mut out = Vec::new();
        for j in 0..per_axis {
            for i in 0..per_axis {
                let p = vec2(
                    lo.x + (hi.x - lo.x) * (i as f64 + 0.5) / per_axis as f64,
                    lo.y + (hi.y - lo.y) * (j as f64 + 0.5) / per_axis as f64,
                );
                if self.contains(p) {
                    out.push(p);
                }
            }
        }
        out
    }
}

struct Parabolas {
    kappa: f64,
}

impl Field2 for Parabolas {
    fn value(&self, x: Vec2) -> f64 {
        x.x - self.kappa * x.y * x.y
    }
    fn grad(&self, x: Vec2) -> Vec2 {
        vec2(1.0, -2.0 * self.kappa * x.y)
    }
    fn hessian(&self, _x: Vec2) -> Mat2 {
        Mat2::symmetric(0.0, 0.0, -2.0 * self.kappa)
    }
}

/// xⁿ = R − |x| on a disk (distance to the boundary, positive inside).
struct DiskNormalCoord {
    radius: f64,
}

impl Field2 for DiskNormalCoord {
    fn value(&self, x: Vec2) -> f64 {
        self.radius - x.norm()
    }
    fn grad(&self, x: Vec2) -> Vec2 {
        -x.normalized()
    }
    fn hessian(&self, x: Vec2) -> Mat2 {
        let r = x.norm().max(1e-9);
        let u = x.normalized();
        Mat2::identity().add(Mat2::outer(u, u).scale(-1.0)).scale(-1.0 / r)
    }
}

/// xⁿ = distance to ∂Ω (positive inside) for general shapes; the gradient is
/// minus the outward normal direction at the nearest boundary point.
struct BoundaryDistCoord {
    domain: Domain,
}

impl Field2 for BoundaryDistCoord {
    fn value(&self, x: Vec2) -> f64 {
        -self.domain.signed_boundary_distance(x)
    }
    fn grad(&self, x: Vec2) -> Vec2 {
        let b = self.domain.nearest_boundary_point(x);
        let d = x - b;
        if d.norm() < 1e-12 {
            return -self.domain.levelset_grad(x).normalized();
        }
        d.normalized() * if self.domain.contains(x) { -1.0 } else { 1.0 }
    }
    fn hessian(&self, x: Vec2) -> Mat2 {
        // distance to a smooth curve: Hess = −κ/(1 − xⁿκ) t̂ t̂ᵀ with κ the
        // boundary curvature at the nearest point
        let kappa = self.domain.curvature_at_nearest(x);
        let xn = self.value(x);
        let t_hat = self.grad(x).perp();
        Mat2::outer(t_hat, t_hat).scale(-kappa / (1.0 - xn * kappa))
    }
}

/// Ring-shaped C² source bump((r − r0)/width) · cos(mθ).
struct RingField {
    r0: f64,
    width: f64,
    modes: f64,
}

impl Field2 for RingField {
    fn value(&self, x: Vec2) -> f64 {
        let r = x.norm();
        let s = (r - self.r0) / self.width;
        if s.abs() >= 1.0 {
            return 0.0;
        }
        let w = 1.0 - s * s;
        let theta = x.y.atan2(x.x);
        w * w * w * (self.modes * theta).cos()
    }
}

/// f = scale · x₁ inside r1 (harmonic there), C² tapered to zero by r2.
struct HarmonicTaper {
    r1: f64,
    r2: f64,
    scale: f64,
}

impl Field2 for HarmonicTaper {
    fn value(&self, x: Vec2) -> f64 {
        let r = x.norm();
        let w = if r <= self.r1 {
            1.0
        } else if r >= self.r2 {
            0.0
        } else {
            let s = (r - self.r1) / (self.r2 - self.r1);
            1.0 - crate::math::smoothstep5(s)
        };
        self.scale * x.x * w
    }
}

pub fn build_field(kind: &str, params: &[f64]) -> Result<Box<dyn Field2 + Send + Sync>> {
    match (kind, params) {
        ("bump", [cx, cy, radius, amp]) => {
            Ok(Box::new(BumpField::new(vec2(*cx, *cy), *radius, *amp)))
        }
        ("ring", [r0, width, m]) => Ok(Box::new(RingField { r0: *r0, width: *width, modes: *m })),
        ("harmonic-taper", [r1, r2, scale]) => {
            Ok(Box::new(HarmonicTaper { r1: *r1, r2: *r2, scale: *scale }))
        }
        _ => Err(Error::Config {
            line: 0,
            msg: format!("unknown field kind '{kind}' with {} params", params.len()),
        }),
    }
}

fn ensure_dir(dir: &str) -> Result<PathBuf> {
    let p = PathBuf::from(dir);
    std::fs::create_dir_all(&p)?;
    Ok(p)
}

fn trace_to_array(tr: &crate::wave::BoundaryTrace) -> Result<ArrayFile> {
    ArrayFile::matrix(tr.rows(), tr.n_boundary, tr.values.clone())
}

fn grid_to_array(grid: &Grid, data: &[f64]) -> Result<ArrayFile> {
    ArrayFile::matrix(grid.npts(), grid.npts(), data.to_vec())
}

/// Execute one subcommand of a scenario.
pub fn run(cfg: ScenarioConfig, sub: Subcommand, opts: &RunOpts) -> Result<RunSummary> {
    let asm = Assembled::new(cfg, opts)?;
    let out = ensure_dir(&asm.cfg.out_dir)?;
    let mut conditions_passed = None;
    match sub {
        Subcommand::Forward => run_forward(&asm, &out, opts)?,
        Subcommand::Measure => run_measure(&asm, &out, opts)?,
        Subcommand::Neumann => run_neumann(&asm, &out, opts)?,
        Subcommand::Backproject => run_backproject(&asm, &out, opts)?,
        Subcommand::RecoverSource => run_recover_source(&asm, &out, opts)?,
        Subcommand::RecoverSpeed => run_recover_speed(&asm, &out, opts)?,
        Subcommand::StabilityProbe => run_probe(&asm, &out, opts)?,
        Subcommand::CheckConditions => {
            let reports = run_check_conditions(&asm, opts)?;
            write_conditions_csv(&out.join("conditions.csv"), &reports)?;
            write_conditions_text(&out.join("conditions.txt"), &reports)?;
            let ok = reports.iter().all(|r| r.passed);
            if !opts.quiet {
                for r in &reports {
                    eprintln!(
                        "  [{}] {} margin {}",
                        if r.passed { "pass" } else { "FAIL" },
                        r.condition_id,
                        fmt_f64(r.margin)
                    );
                }
            }
            conditions_passed = Some(ok);
        }
    }
    Ok(RunSummary { out_dir: out, conditions_passed })
}

fn solve_opts(opts: &RunOpts) -> SolveOpts {
    SolveOpts { exec: opts.exec, ..Default::default() }
}

fn run_forward(asm: &Assembled, out: &Path, opts: &RunOpts) -> Result<()> {
    let grid = asm.grid();
    let f_field = asm.truth_source()?;
    let f = grid.sample(&|p| f_field.value(p));
    let mut so = solve_opts(opts);
    so.record_neumann = true;
    let sol = solve_ivp(&asm.speed, &asm.domain, &grid, &f, asm.cfg.t_end, &so)?;
    write_array(&out.join("final_u.tawf"), &grid_to_array(&grid, &sol.state.u)?)?;
    write_array(&out.join("final_ut.tawf"), &grid_to_array(&grid, &sol.state.ut)?)?;
    write_array(&out.join("dirichlet.tawf"), &trace_to_array(&sol.dirichlet)?)?;
    if let Some(nm) = &sol.neumann {
        write_array(&out.join("neumann.tawf"), &trace_to_array(nm)?)?;
    }
    let mut csv = Csv::new(&["t", "energy"]);
    for (t, e) in &sol.energy {
        csv.row(&[fmt_f64(*t), fmt_f64(*e)]);
    }
    csv.write(&out.join("energy.csv"))?;
    let mut rep = KeyValueReport::new();
    rep.push("n", grid.n as f64);
    rep.push("h", grid.h());
    rep.push("dt", grid.dt);
    rep.push("half_width", grid.half_width);
    rep.push("t_end", asm.cfg.t_end);
    let e0 = sol.energy.first().map(|e| e.1).unwrap_or(0.0);
    let drift = sol
        .energy
        .iter()
        .fold(0.0f64, |m, (_, e)| m.max((e - e0).abs() / e0.max(1e-300)));
    rep.push("energy_drift_rel", drift);
    rep.write(&out.join("report.csv"))?;
    Ok(())
}

fn run_measure(asm: &Assembled, out: &Path, opts: &RunOpts) -> Result<()> {
    let grid = asm.grid();
    let f_field = asm.truth_source()?;
    let shape = grid.sample(&|p| f_field.value(p));
    let src = Source::separable(shape, TimeProfile::One);
    let mut so = solve_opts(opts);
    so.record_neumann = true;
    let sol = solve_source(&asm.speed, &asm.domain, &grid, &src, asm.cfg.t_end, &so)?;
    write_array(&out.join("data_dirichlet.tawf"), &trace_to_array(&sol.dirichlet)?)?;
    if let Some(nm) = &sol.neumann {
        write_array(&out.join("data_neumann.tawf"), &trace_to_array(nm)?)?;
    }
    let mut rep = KeyValueReport::new();
    rep.push("rows", sol.dirichlet.rows() as f64);
    rep.push("boundary_samples", sol.dirichlet.n_boundary as f64);
    rep.push("dt", sol.dirichlet.dt);
    rep.push("data_l2", sol.dirichlet.norm_l2(asm.domain.perimeter()));
    rep.write(&out.join("report.csv"))?;
    Ok(())
}

fn run_neumann(asm: &Assembled, out: &Path, opts: &RunOpts) -> Result<()> {
    let f_field = asm.truth_source()?;
    let n = asm.cfg.n;
    let levels = [n / 2, n, n * 2];
    let errors = neumann_consistency_experiment(
        &asm.speed,
        &asm.domain,
        f_field.as_ref(),
        asm.cfg.t_end,
        &levels,
        opts.exec,
    )?;
    let mut csv = Csv::new(&["n", "rel_error"]);
    for (lvl, err) in &errors {
        csv.row(&[lvl.to_string(), fmt_f64(*err)]);
    }
    csv.write(&out.join("neumann_errors.csv"))?;
    let mut rep = KeyValueReport::new();
    let monotone = errors.windows(2).all(|w| w[1].1 < w[0].1);
    rep.push_str("monotone_decrease", monotone.to_string());
    rep.push("final_rel_error", errors.last().map(|e| e.1).unwrap_or(f64::NAN));
    rep.write(&out.join("report.csv"))?;
    Ok(())
}

fn run_backproject(asm: &Assembled, out: &Path, opts: &RunOpts) -> Result<()> {
    let grid = asm.grid();
    let f_field = asm.truth_source()?;
    let f = grid.sample(&|p| f_field.value(p));
    let sol = solve_ivp(&asm.speed, &asm.domain, &grid, &f, asm.cfg.t_end, &solve_opts(opts))?;
    let chi = CutoffProfile::for_horizon(asm.cfg.t_end);
    let mut data = sol.dirichlet.clone();
    data.scale_rows(&|t| chi.value(t));
    let bp = back_project(&asm.speed, &asm.domain, &grid, &data, opts.exec)?;
    write_array(&out.join("backprojection.tawf"), &grid_to_array(&grid, &bp)?)?;
    // compare against the mollified initial state inside Ω
    let truth = crate::wave::mollify(&grid, &f);
    let w = grid.npts();
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..w {
        for i in 0..w {
            let p = grid.pos(i, j);
            if asm.domain.signed_boundary_distance(p) < -2.0 * grid.h() {
                let idx = grid.idx(i, j);
                num += (bp[idx] - truth[idx]) * (bp[idx] - truth[idx]);
                den += truth[idx] * truth[idx];
            }
        }
    }
    let mut rep = KeyValueReport::new();
    rep.push("rel_l2_error_vs_initial", (num / den.max(1e-300)).sqrt());
    rep.write(&out.join("report.csv"))?;
    Ok(())
}

fn k_mask_of(grid: &Grid, k: &KRegion) -> Vec<bool> {
    grid.mask(&|p| k.contains(p))
}

fn run_recover_source(asm: &Assembled, out: &Path, opts: &RunOpts) -> Result<()> {
    let grid = asm.grid();
    let f_field = asm.truth_source()?;
    let shape = crate::wave::mollify(&grid, &grid.sample(&|p| f_field.value(p)));
    let src = Source::separable(shape.clone(), TimeProfile::One);
    let mut so = solve_opts(opts);
    so.mollify = false;
    let sol = solve_source(&asm.speed, &asm.domain, &grid, &src, asm.cfg.t_end, &so)?;
    let k = asm.k_region();
    let mask = k_mask_of(&grid, &k);
    let mut ropts = SourceRecoveryOpts::new(asm.cfg.iters, asm.cfg.t_end);
    ropts.exec = opts.exec;
    ropts.truth = Some(shape.clone());
    let (f_est, report) = recover_source(
        &asm.speed,
        &asm.domain,
        &grid,
        &SourceAmplitude::Profile(TimeProfile::One),
        &sol.dirichlet,
        &mask,
        &ropts,
    )?;
    write_array(&out.join("f_estimate.tawf"), &grid_to_array(&grid, &f_est)?)?;
    let mut csv = Csv::new(&["iteration", "residual", "rel_error"]);
    for (k_it, r) in report.residual_history.iter().enumerate() {
        csv.row(&[
            k_it.to_string(),
            fmt_f64(*r),
            report
                .rel_error_history
                .get(k_it)
                .map(|e| fmt_f64(*e))
                .unwrap_or_default(),
        ]);
    }
    csv.write(&out.join("residuals.csv"))?;
    let mut rep = KeyValueReport::new();
    rep.push("iterations", report.iterations as f64);
    rep.push(
        "final_rel_error",
        report.rel_error_history.last().copied().unwrap_or(f64::NAN),
    );
    rep.push(
        "final_residual",
        report.residual_history.last().copied().unwrap_or(f64::NAN),
    );
    rep.push("stability_ratio", report.stability_ratio);
    rep.write(&out.join("report.csv"))?;
    Ok(())
}

fn run_recover_speed(asm: &Assembled, out: &Path, opts: &RunOpts) -> Result<()> {
    // the outer loop stores Laplacian frames of full forward solves; a
    // 192-cell grid keeps that history small with the twin-experiment
    // tolerances still met comfortably
    let grid = if asm.cfg.n > 192 {
        Grid::for_scenario(&asm.domain, &asm.speed, asm.cfg.t_end, 192, asm.cfg.cfl)
    } else {
        asm.grid()
    };
    let c_true = asm
        .cfg
        .build_truth_speed()?
        .ok_or_else(|| Error::precondition("this subcommand needs [truth] speed_kind"))?;
    let f_field = asm.truth_f()?;
    let f = grid.sample(&|p| f_field.value(p));
    let data = solve_ivp(&c_true, &asm.domain, &grid, &f, asm.cfg.t_end, &solve_opts(opts))?
        .dirichlet;
    let k = asm.k_speed_region();
    let setup = SpeedRecoverySetup {
        f_field: f_field.as_ref(),
        c_init: asm.speed.clone(),
        data,
        k_mask: k_mask_of(&grid, &k),
        k_samples: k.samples(48),
        t_end: asm.cfg.t_end,
    };
    let mut sopts = SpeedRecoveryOpts {
        outer_iterations: asm.cfg.outer_iters,
        inner_iterations: asm.cfg.iters.min(8),
        floor: asm.cfg.floor,
        exec: opts.exec,
        truth_csq: None,
    };
    let truth_csq = grid.sample(&|p| {
        let v = c_true.value(p);
        v * v
    });
    sopts.truth_csq = Some(truth_csq);
    let result = recover_speed(&asm.domain, &grid, &setup, &sopts)?;
    write_array(&out.join("csq_estimate.tawf"), &grid_to_array(&grid, &result.csq)?)?;
    let mut csv = Csv::new(&["outer_iteration", "data_misfit", "rel_error_csq"]);
    for (k_it, r) in result.report.residual_history.iter().enumerate() {
        csv.row(&[
            k_it.to_string(),
            fmt_f64(*r),
            result
                .report
                .rel_error_history
                .get(k_it)
                .map(|e| fmt_f64(*e))
                .unwrap_or_default(),
        ]);
    }
    csv.write(&out.join("residuals.csv"))?;
    let mut rep = KeyValueReport::new();
    rep.push("outer_iterations", result.report.iterations as f64);
    rep.push(
        "final_rel_error_csq",
        result.report.rel_error_history.last().copied().unwrap_or(f64::NAN),
    );
    rep.write(&out.join("report.csv"))?;
    Ok(())
}

fn run_probe(asm: &Assembled, out: &Path, opts: &RunOpts) -> Result<()> {
    let grid = asm.grid();
    let k = asm.k_region();
    let k_smooth = grid.sample(&|p| k.smooth_weight(p));
    let sampler = match k {
        KRegion::Annulus { r_lo, r_hi } => crate::inversion::ProbeSampler::Angular {
            r0: 0.5 * (r_lo + r_hi),
            width: 0.5 * (r_hi - r_lo),
        },
        KRegion::Disk { .. } => crate::inversion::ProbeSampler::Cartesian,
    };
    let probe = stability_probe(
        &asm.speed,
        &asm.domain,
        &grid,
        &k_smooth,
        k.bbox(),
        sampler,
        asm.cfg.t_end,
        &asm.cfg.band_limits,
        asm.cfg.ensemble,
        asm.cfg.seed,
        opts.exec,
    )?;
    // visibility over SK for context
    let chi = CutoffProfile::for_horizon(asm.cfg.t_end);
    let flow = FlowOpts::new(2e-3 * asm.domain.outer_radius(), asm.cfg.t_end * 1.01);
    let stab = check_stability_condition(
        &asm.speed,
        &asm.domain,
        &chi,
        &k.samples(12),
        12,
        &flow,
        opts.exec,
    )?;
    let mut csv = Csv::new(&["band_limit", "max_ratio", "median_ratio", "samples"]);
    for b in &probe.bands {
        csv.row(&[
            b.band_limit.to_string(),
            fmt_f64(b.max_ratio),
            fmt_f64(b.median_ratio),
            b.samples.to_string(),
        ]);
    }
    csv.write(&out.join("probe.csv"))?;
    let mut rep = KeyValueReport::new();
    rep.push("min_symbol", stab.margin);
    if let (Some(first), Some(last)) = (probe.bands.first(), probe.bands.last()) {
        rep.push("ratio_growth", last.max_ratio / first.max_ratio);
    }
    rep.push("seed", asm.cfg.seed as f64);
    rep.write(&out.join("report.csv"))?;
    Ok(())
}

/// All hypothesis checks for the scenario, one report per condition.
pub fn run_check_conditions(asm: &Assembled, opts: &RunOpts) -> Result<Vec<ConditionReport>> {
    let mut reports = Vec::new();
    let domain = &asm.domain;
    let c = &asm.speed;
    let r_out = domain.outer_radius();

    // collar phase family checks near ∂Ω
    let family = asm.collar_family()?;
    let dist_field = |p: Vec2| -domain.signed_boundary_distance(p);
    let collar = family.collar;
    let inside_collar = move |p: Vec2| {
        let xn = dist_field(p);
        (0.0..collar).contains(&xn)
    };
    let pad = vec2(r_out + 0.1, r_out + 0.1);
    let region = SampleRegion::rect(-pad, pad).with_inside(&inside_collar);
    let f_half = family.half_r_squared();
    reports.push(check_flow_convexity(c, &f_half, &region, 4096, opts.exec)?);

    let s_mid = 0.5 * (family.s_range.0 + family.s_range.1);
    let mut nc = check_noncharacteristic(c, &family, s_mid, &region, 4096, &[], opts.exec);
    let nc_hi = check_noncharacteristic(c, &family, family.s_range.1, &region, 4096, &[], opts.exec);
    if nc_hi.margin < nc.margin || nc.indeterminate {
        nc = nc_hi;
    }
    reports.push(nc);

    let t_max = ((family.curvature_radius * family.curvature_radius - family.s_range.0)
        / family.delta)
        .max(1e-6)
        .sqrt()
        * 1.2;
    let phase = family.phase(s_mid);
    reports.push(check_strong_pseudoconvexity(c, &phase, &region, t_max, 4096, opts.exec)?);

    // foliation + observation time + cone
    let fol = asm.foliation()?;
    let (fol_rep, pooled) = verify_foliation(c, domain, &fol, &FoliationOpts {
        exec: opts.exec,
        ..Default::default()
    })?;
    reports.push(fol_rep);
    let obs = check_observation_time(c, domain, &pooled, &ObservationOpts {
        exec: opts.exec,
        ..Default::default()
    });
    // cone probe at the observation check's tightest point (deep interior)
    let probe_x = obs
        .worst()
        .map(|w| w.x)
        .unwrap_or(Vec2::ZERO);
    let probe_x = if domain.signed_boundary_distance(probe_x) < -0.05 * r_out {
        probe_x
    } else {
        probe_x * 0.9
    };
    reports.push(obs);
    let cone = check_cone_condition(c, domain, probe_x, 160, 16, opts.exec)?;
    let mut cone_rep = ConditionReport::evaluate(
        "cone",
        cone.slack,
        0.0,
        cone.samples,
        vec![crate::convexity::Witness { x: probe_x, xi: None, t: None, value: cone.slack }],
    );
    cone_rep.extras.push(("best_y_x".into(), cone.best_y.x));
    cone_rep.extras.push(("best_y_y".into(), cone.best_y.y));
    reports.push(cone_rep);

    // ellipticity: Δf of the nonlinear problem when a truth f is configured,
    // otherwise |a(0,·)| of the linear amplitude (a ≡ 1 here)
    let k_speed = asm.k_speed_region();
    let ell = if asm.cfg.truth_f_kind.is_some() {
        let f = asm.truth_f()?;
        crate::convexity::check_ellipticity(f.as_ref(), &k_speed.samples(40), opts.exec)
    } else {
        let n_s = k_speed.samples(12).len();
        ConditionReport::evaluate("ellipticity", 1.0, 0.0, n_s, vec![])
            .with_extra("min_abs_amplitude", 1.0)
    };
    reports.push(ell);

    // visibility (stability) over SK
    let k = asm.k_region();
    let chi = CutoffProfile::for_horizon(asm.cfg.t_end);
    let flow = FlowOpts::new(2e-3 * r_out, asm.cfg.t_end * 1.01);
    reports.push(check_stability_condition(
        c,
        domain,
        &chi,
        &k.samples(12),
        12,
        &flow,
        opts.exec,
    )?);

    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse_and_round_trip() {
        for name in BUILTIN_NAMES {
            let cfg = builtin(name).unwrap();
            let text = cfg.serialize();
            let back = ScenarioConfig::parse(&text).unwrap();
            assert_eq!(cfg, back, "{name}");
            assert!(cfg.build_domain().is_ok());
            assert!(cfg.build_speed().is_ok());
        }
        assert!(builtin("no-such-scenario").is_none());
    }

    #[test]
    fn k_regions_sample_and_window() {
        let k = KRegion::Annulus { r_lo: 0.7, r_hi: 1.3 };
        let pts = k.samples(32);
        assert!(!pts.is_empty());
        assert!(pts.iter().all(|p| k.contains(*p)));
        assert!(k.smooth_weight(vec2(1.0, 0.0)) > 0.9);
        assert_eq!(k.smooth_weight(vec2(1.31, 0.0)), 0.0);
        assert_eq!(k.smooth_weight(vec2(0.2, 0.0)), 0.0);
    }

    #[test]
    fn ring_field_is_supported_on_the_annulus() {
        let f = build_field("ring", &[1.0, 0.12, 12.0]).unwrap();
        assert_eq!(f.value(vec2(0.5, 0.0)), 0.0);
        assert_eq!(f.value(vec2(1.2, 0.0)), 0.0);
        assert!(f.value(vec2(1.0, 0.0)).abs() > 0.9);
    }

    #[test]
    fn harmonic_taper_is_harmonic_inside() {
        let f = build_field("harmonic-taper", &[0.5, 0.8, 1.0]).unwrap();
        let lap = f.laplacian(vec2(0.2, 0.1));
        assert!(lap.abs() < 1e-5, "lap {lap}");
        assert_eq!(f.value(vec2(0.9, 0.0)), 0.0);
    }
}
