//! Config-driven experiment runner: parses a JSON description of a domain,
//! kinetic, source, and perturbation, executes the requested study, and
//! writes deterministic CSV/VTK artifacts plus a `summary.json` with
//! pass/fail flags for every asserted invariant.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dead_core;
use crate::elliptic::solve_semilinear;
use crate::error::{Error, Result};
use crate::field::{FieldKind, ScalarField};
use crate::geometry::{build_disk_mesh, build_slab_mesh, Mesh, PerturbationField, Point};
use crate::io;
use crate::kinetics::{
    make_linear, make_lipschitz_ramp, make_root_kinetic, mollify, truncate, Kinetic,
    SmoothnessClass,
};
use crate::shape;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "shape", rename_all = "snake_case")]
pub enum DomainSpec {
    /// interval [-length, length]
    Slab { length: f64, h: f64 },
    Disk { radius: f64, h: f64 },
}

impl DomainSpec {
    pub fn h(&self) -> f64 {
        match self {
            DomainSpec::Slab { h, .. } | DomainSpec::Disk { h, .. } => *h,
        }
    }

    pub fn build(&self) -> Result<Mesh> {
        match *self {
            DomainSpec::Slab { length, h } => build_slab_mesh(length, h),
            DomainSpec::Disk { radius, h } => build_disk_mesh(radius, h),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "type", rename_all = "snake_case")]
pub enum KineticSpec {
    Root {
        lambda: f64,
        q: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        truncate_m: Option<f64>,
    },
    Ramp {
        slope: f64,
        knee: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mollify_n: Option<u32>,
    },
    Linear { slope: f64 },
}

impl KineticSpec {
    pub fn build(&self) -> Result<Kinetic> {
        let wrap = |e: Error| Error::Config(format!("kinetic: {e}"));
        match *self {
            KineticSpec::Root { lambda, q, truncate_m } => {
                let k = make_root_kinetic(lambda, q).map_err(wrap)?;
                match truncate_m {
                    Some(m) => truncate(&k, m).map_err(wrap),
                    None => Ok(k),
                }
            }
            KineticSpec::Ramp { slope, knee, mollify_n } => {
                let k = make_lipschitz_ramp(slope, knee).map_err(wrap)?;
                match mollify_n {
                    Some(n) => Ok(mollify(&k, n).map_err(wrap)?.0),
                    None => Ok(k),
                }
            }
            KineticSpec::Linear { slope } => make_linear(slope).map_err(wrap),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub struct SourceSpec {
    pub constant: f64,
}

impl Default for SourceSpec {
    fn default() -> Self {
        SourceSpec { constant: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "field", rename_all = "snake_case")]
pub enum ThetaSpec {
    Zero,
    Dilation,
    Shear,
    Translation { direction: [f64; 2] },
    QuadraticStretch { amp: f64 },
}

impl Default for ThetaSpec {
    fn default() -> Self {
        ThetaSpec::Zero
    }
}

impl ThetaSpec {
    pub fn build(&self) -> PerturbationField {
        match *self {
            ThetaSpec::Zero => PerturbationField::Zero,
            ThetaSpec::Dilation => PerturbationField::Dilation,
            ThetaSpec::Shear => PerturbationField::Shear,
            ThetaSpec::Translation { direction } => PerturbationField::Translation(direction),
            ThetaSpec::QuadraticStretch { amp } => PerturbationField::QuadraticStretch { amp },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Solve,
    GateauxCheck,
    KineticPerturbation,
    TruncatedSequence,
    DeadCoreAudit,
}

fn default_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub domain: DomainSpec,
    pub kinetic: KineticSpec,
    #[serde(default)]
    pub f: SourceSpec,
    #[serde(default)]
    pub theta: ThetaSpec,
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tau_list: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub m_list: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub n_list: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<f64>,
    /// dead-core detection threshold; defaults to max(10 tol, h^2)
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_dc: Option<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl ExperimentConfig {
    pub fn eps_dc(&self) -> f64 {
        self.eps_dc
            .unwrap_or_else(|| dead_core::default_threshold(self.tol, self.domain.h()))
    }

    /// Check all invariants that JSON shape alone cannot express; returns the
    /// config with defaults made explicit on success.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::Config("name: must be nonempty".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol: must be positive, got {}", self.tol)));
        }
        self.kinetic.build()?;
        self.domain
            .build()
            .map_err(|e| Error::Config(format!("domain: {e}")))?;
        match self.kind {
            Kind::GateauxCheck => {
                if self.tau_list.is_empty() {
                    return Err(Error::Config("tau_list: must be nonempty".into()));
                }
                for p in self.tau_list.windows(2) {
                    if !(p[0] > p[1]) {
                        return Err(Error::Config(
                            "tau_list: must be strictly decreasing".into(),
                        ));
                    }
                }
                if *self.tau_list.last().unwrap() <= 0.0 {
                    return Err(Error::Config("tau_list: entries must be positive".into()));
                }
            }
            Kind::TruncatedSequence => {
                if self.m_list.is_empty() {
                    return Err(Error::Config("m_list: must be nonempty".into()));
                }
                for p in self.m_list.windows(2) {
                    if !(p[0] < p[1]) {
                        return Err(Error::Config("m_list: must be strictly increasing".into()));
                    }
                }
            }
            Kind::KineticPerturbation => {
                if self.n_list.is_empty() {
                    return Err(Error::Config("n_list: must be nonempty".into()));
                }
                for p in self.n_list.windows(2) {
                    if !(p[0] < p[1]) {
                        return Err(Error::Config("n_list: must be strictly increasing".into()));
                    }
                }
            }
            Kind::Solve | Kind::DeadCoreAudit => {}
        }
        if let Some(b) = self.band {
            if !(b > 0.0) {
                return Err(Error::Config(format!("band: must be positive, got {b}")));
            }
        }
        Ok(())
    }
}

/// Parse and validate a JSON experiment config.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_json::from_str(text)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Outcome of one experiment run: the summary that was written and whether
/// every asserted invariant held.
#[derive(Debug)]
pub struct RunOutcome {
    pub passed: bool,
    pub summary: serde_json::Value,
}

struct Artifacts {
    assertions: BTreeMap<String, bool>,
    metrics: serde_json::Map<String, serde_json::Value>,
}

impl Artifacts {
    fn new() -> Self {
        Artifacts { assertions: BTreeMap::new(), metrics: serde_json::Map::new() }
    }

    fn assert(&mut self, name: &str, ok: bool) {
        self.assertions.insert(name.to_string(), ok);
    }

    fn metric(&mut self, name: &str, v: impl Into<serde_json::Value>) {
        self.metrics.insert(name.to_string(), v.into());
    }
}

/// Execute a validated config, writing all artifacts into `out_dir` (created
/// if needed). Returns `Ok` with the pass flag, or `Err` when the experiment
/// itself fails; in the error case a summary with the failure reason is still
/// written when possible.
pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome> {
    std::fs::create_dir_all(out_dir)?;
    let started = Instant::now();
    let result = execute(config, out_dir);
    let timing_ms = started.elapsed().as_secs_f64() * 1e3;
    let (passed, mut summary, error) = match result {
        Ok(art) => {
            let passed = art.assertions.values().all(|&b| b);
            let assertions: serde_json::Map<_, _> = art
                .assertions
                .iter()
                .map(|(k, &v)| (k.clone(), serde_json::Value::Bool(v)))
                .collect();
            (
                passed,
                serde_json::json!({
                    "assertions": assertions,
                    "metrics": serde_json::Value::Object(art.metrics),
                }),
                None,
            )
        }
        Err(e) => (false, serde_json::json!({}), Some(e)),
    };
    summary["name"] = serde_json::json!(config.name);
    summary["config"] = serde_json::to_value(config)?;
    summary["tol"] = serde_json::json!(config.tol);
    summary["eps_dc"] = serde_json::json!(config.eps_dc());
    summary["passed"] = serde_json::json!(passed);
    summary["timing_ms"] = serde_json::json!(timing_ms);
    if let Some(e) = &error {
        summary["error"] = serde_json::json!(e.to_string());
    }
    io::write_json(&out_dir.join("summary.json"), &summary)?;
    match error {
        Some(e) => Err(e),
        None => Ok(RunOutcome { passed, summary }),
    }
}

fn execute(config: &ExperimentConfig, out: &Path) -> Result<Artifacts> {
    config.validate()?;
    let mesh = Arc::new(config.domain.build()?);
    let kin = config.kinetic.build()?;
    let fval = config.f.constant;
    let f_field = ScalarField::constant(&mesh, FieldKind::Derived, fval);
    let theta = config.theta.build();
    let tol = config.tol;
    let mut art = Artifacts::new();
    art.metric("mesh", io::mesh_summary(&mesh));

    match config.kind {
        Kind::Solve => {
            let (w, report) = solve_semilinear(&mesh, &kin, &f_field, 1.0, tol)?;
            let core = dead_core::detect(&w, config.eps_dc());
            std::fs::write(out.join("w.csv"), io::field_csv(&w))?;
            io::write_vtk(&out.join("w.vtk"), &mesh, &config.name, &[("w", &w.values)])?;
            art.assert("converged", report.converged);
            art.assert("bounds", report.bounds_ok);
            art.metric("iterations", report.iterations);
            art.metric("final_residual", report.final_residual);
            art.metric("dead_core_measure", core.measure);
            art.metric("dead_core_nodes", core.nodes.len());
            let max_dev_one = w.values.iter().map(|&v| (v - 1.0).abs()).fold(0.0, f64::max);
            art.metric("max_deviation_from_one", max_dev_one);
            if fval == kin.beta_one() {
                art.assert("flat_solution", max_dev_one <= 10.0 * tol);
            }
        }
        Kind::GateauxCheck => {
            let f_fn = move |_: Point| fval;
            let rep = shape::gateaux_check(&mesh, &kin, &f_fn, &theta, &config.tau_list, tol)?;
            std::fs::write(out.join("gateaux.csv"), io::report_csv(&rep))?;
            art.assert("transported_monotone", rep.monotone["transported_quotient"]);
            art.assert("extended_monotone", rep.monotone["extended_quotient"]);
            if let Some(slope) = rep.fitted_slope {
                art.metric("fitted_slope", slope);
                if kin.smoothness_class == SmoothnessClass::TwiceSmooth {
                    art.assert("first_order_rate", slope >= 0.9);
                }
            }
        }
        Kind::KineticPerturbation => {
            let rep = shape::kinetic_perturbation_study(
                &mesh,
                &kin,
                &f_field,
                &theta,
                &config.n_list,
                tol,
            )?;
            std::fs::write(out.join("perturbation.csv"), io::report_csv(&rep))?;
            art.assert("h1_ratio_bounded", rep.monotone["h1_ratio_bounded"]);
            art.assert("v_l2_decreasing", rep.monotone["v_l2"]);
        }
        Kind::TruncatedSequence => {
            let seq = shape::truncated_shape_sequence(
                &mesh,
                &kin,
                &f_field,
                &theta,
                &config.m_list,
                config.eps_dc(),
                tol,
            )?;
            std::fs::write(out.join("sequence.csv"), io::report_csv(&seq.report))?;
            std::fs::write(out.join("core.csv"), io::region_csv(&seq.core.nodes))?;
            io::write_vtk(
                &out.join("v_inf.vtk"),
                &mesh,
                &config.name,
                &[("v_inf", &seq.v_inf.v.values)],
            )?;
            for key in ["w_monotone", "v_h1_bounded", "core_sup_v", "v_to_limit_l2"] {
                art.assert(key, seq.report.monotone[key]);
            }
            art.metric("dead_core_measure", seq.core.measure);
        }
        Kind::DeadCoreAudit => {
            if fval != 0.0 {
                return Err(Error::Config(
                    "dead-core audit requires f = 0 (the pointwise bound assumes a source-free state)"
                        .into(),
                ));
            }
            let (w, _) = solve_semilinear(&mesh, &kin, &f_field, 1.0, tol)?;
            let core = dead_core::detect(&w, config.eps_dc());
            let alpha = dead_core::compute_alpha(&w)?;
            let band = config.band.unwrap_or(1.0);
            let (violation, rows) = dead_core::psi_bound_check(&w, &core, &kin, alpha, band)?;
            std::fs::write(out.join("psi_check.csv"), io::psi_table_csv(&rows))?;
            std::fs::write(out.join("core.csv"), io::region_csv(&core.nodes))?;
            let mask: Vec<f64> = (0..mesh.nodes.len())
                .map(|i| if core.nodes.contains(&i) { 1.0 } else { 0.0 })
                .collect();
            io::write_vtk(
                &out.join("core.vtk"),
                &mesh,
                &config.name,
                &[("w", &w.values), ("dead_core", &mask)],
            )?;
            let (h_min, h_max) = mesh.h_min_max();
            let _ = h_min;
            art.assert("psi_bound", violation <= 5.0 * h_max);
            art.metric("max_violation", violation);
            art.metric("alpha", alpha);
            art.metric("dead_core_measure", core.measure);
            let (expo, intercept, r2) = dead_core::blowup_rate_fit(&w, &core, &kin, band)?;
            art.assert("blowup_fit_quality", r2 >= 0.98);
            art.metric("blowup_exponent", expo);
            art.metric("blowup_constant", intercept.exp());
            art.metric("blowup_r2", r2);
        }
    }
    Ok(art)
}
