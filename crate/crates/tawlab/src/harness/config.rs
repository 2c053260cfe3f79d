//! Flat `key = value` configuration files with `[section]` headers.
//!
//! Sections and keys:
//! `[domain]` kind, params, gamma_arc, tau_const (or tau_table);
//! `[speed]` kind, params; `[grid]` n, half_width_auto; `[time]` T, cfl;
//! `[foliation]` kind, params, s_min, s_max, s_steps;
//! `[inversion]` iters, outer_iters, floor;
//! `[probe]` ensemble, band_limits, seed; `[output]` dir;
//! plus an optional `[truth]` section (f_kind/f_params, speed_kind/
//! speed_params, source_kind/source_params) describing synthetic-truth
//! objects for twin experiments and inverse-crime data generation.
//! Parse → serialize → parse is the identity.

use crate::domain::{Domain, TauProfile};
use crate::error::{Error, Result};
use crate::speed::{SpeedBump, SpeedField};
use std::fmt::Write as _;

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub domain_kind: String,
    pub domain_params: Vec<f64>,
    /// Γ as an arclength-fraction interval (lo may be negative to wrap).
    pub gamma_arc: (f64, f64),
    pub tau_const: Option<f64>,
    pub tau_table: Option<Vec<f64>>,

    pub speed_kind: String,
    pub speed_params: Vec<f64>,

    pub n: usize,
    pub half_width_auto: bool,

    pub t_end: f64,
    pub cfl: f64,

    pub foliation_kind: String,
    pub foliation_params: Vec<f64>,
    pub s_min: f64,
    pub s_max: f64,
    pub s_steps: usize,

    pub iters: usize,
    pub outer_iters: usize,
    pub floor: f64,

    pub ensemble: usize,
    pub band_limits: Vec<usize>,
    pub seed: u64,

    pub out_dir: String,

    pub truth_f_kind: Option<String>,
    pub truth_f_params: Vec<f64>,
    pub truth_speed_kind: Option<String>,
    pub truth_speed_params: Vec<f64>,
    pub truth_source_kind: Option<String>,
    pub truth_source_params: Vec<f64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            domain_kind: "disk".into(),
            domain_params: vec![1.0],
            gamma_arc: (0.0, 1.0),
            tau_const: Some(4.0),
            tau_table: None,
            speed_kind: "constant".into(),
            speed_params: vec![1.0],
            n: 256,
            half_width_auto: true,
            t_end: 4.0,
            cfl: 0.5,
            foliation_kind: "circles".into(),
            foliation_params: vec![2.0, 0.0],
            s_min: 1.0,
            s_max: 3.0,
            s_steps: 21,
            iters: 15,
            outer_iters: 5,
            floor: 0.2,
            ensemble: 12,
            band_limits: vec![4, 16],
            seed: 7,
            out_dir: "out".into(),
            truth_f_kind: None,
            truth_f_params: vec![],
            truth_speed_kind: None,
            truth_speed_params: vec![],
            truth_source_kind: None,
            truth_source_params: vec![],
        }
    }
}

fn fmt_floats(v: &[f64]) -> String {
    v.iter()
        .map(|x| crate::harness::report::fmt_f64(*x))
        .collect::<Vec<_>>()
        .join(" ")
}

impl ScenarioConfig {
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[domain]");
        let _ = writeln!(s, "kind = {}", self.domain_kind);
        let _ = writeln!(s, "params = {}", fmt_floats(&self.domain_params));
        let _ = writeln!(
            s,
            "gamma_arc = {}:{}",
            crate::harness::report::fmt_f64(self.gamma_arc.0),
            crate::harness::report::fmt_f64(self.gamma_arc.1)
        );
        if let Some(t) = self.tau_const {
            let _ = writeln!(s, "tau_const = {}", crate::harness::report::fmt_f64(t));
        }
        if let Some(tbl) = &self.tau_table {
            let _ = writeln!(s, "tau_table = {}", fmt_floats(tbl));
        }
        let _ = writeln!(s, "\n[speed]");
        let _ = writeln!(s, "kind = {}", self.speed_kind);
        let _ = writeln!(s, "params = {}", fmt_floats(&self.speed_params));
        let _ = writeln!(s, "\n[grid]");
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "half_width_auto = {}", self.half_width_auto);
        let _ = writeln!(s, "\n[time]");
        let _ = writeln!(s, "T = {}", crate::harness::report::fmt_f64(self.t_end));
        let _ = writeln!(s, "cfl = {}", crate::harness::report::fmt_f64(self.cfl));
        let _ = writeln!(s, "\n[foliation]");
        let _ = writeln!(s, "kind = {}", self.foliation_kind);
        let _ = writeln!(s, "params = {}", fmt_floats(&self.foliation_params));
        let _ = writeln!(s, "s_min = {}", crate::harness::report::fmt_f64(self.s_min));
        let _ = writeln!(s, "s_max = {}", crate::harness::report::fmt_f64(self.s_max));
        let _ = writeln!(s, "s_steps = {}", self.s_steps);
        let _ = writeln!(s, "\n[inversion]");
        let _ = writeln!(s, "iters = {}", self.iters);
        let _ = writeln!(s, "outer_iters = {}", self.outer_iters);
        let _ = writeln!(s, "floor = {}", crate::harness::report::fmt_f64(self.floor));
        let _ = writeln!(s, "\n[probe]");
        let _ = writeln!(s, "ensemble = {}", self.ensemble);
        let _ = writeln!(
            s,
            "band_limits = {}",
            self.band_limits.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(" ")
        );
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "\n[output]");
        let _ = writeln!(s, "dir = {}", self.out_dir);
        let truth = self.truth_f_kind.is_some()
            || self.truth_speed_kind.is_some()
            || self.truth_source_kind.is_some();
        if truth {
            let _ = writeln!(s, "\n[truth]");
            if let Some(k) = &self.truth_f_kind {
                let _ = writeln!(s, "f_kind = {k}");
                let _ = writeln!(s, "f_params = {}", fmt_floats(&self.truth_f_params));
            }
            if let Some(k) = &self.truth_speed_kind {
                let _ = writeln!(s, "speed_kind = {k}");
                let _ = writeln!(s, "speed_params = {}", fmt_floats(&self.truth_speed_params));
            }
            if let Some(k) = &self.truth_source_kind {
                let _ = writeln!(s, "source_kind = {k}");
                let _ = writeln!(s, "source_params = {}", fmt_floats(&self.truth_source_params));
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<ScenarioConfig> {
        let mut cfg = ScenarioConfig::default();
        let mut tau_set = false;
        let mut section = String::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = ln + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line.starts_with('[') {
                if !line.ends_with(']') {
                    return Err(Error::Config { line: lineno, msg: "unterminated section header".into() });
                }
                section = line[1..line.len() - 1].trim().to_string();
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config { line: lineno, msg: format!("expected key = value, got '{line}'") });
            };
            let key = k.trim();
            let val = v.trim();
            let bad = |msg: String| Error::Config { line: lineno, msg };
            let floats = |val: &str| -> Result<Vec<f64>> {
                val.split_whitespace()
                    .map(|t| t.parse::<f64>().map_err(|_| bad(format!("bad number '{t}'"))))
                    .collect()
            };
            match (section.as_str(), key) {
                ("domain", "kind") => cfg.domain_kind = val.to_string(),
                ("domain", "params") => cfg.domain_params = floats(val)?,
                ("domain", "gamma_arc") => {
                    let Some((lo, hi)) = val.split_once(':') else {
                        return Err(bad("gamma_arc must be lo:hi".into()));
                    };
                    cfg.gamma_arc = (
                        lo.trim().parse().map_err(|_| bad(format!("bad number '{lo}'")))?,
                        hi.trim().parse().map_err(|_| bad(format!("bad number '{hi}'")))?,
                    );
                }
                ("domain", "tau_const") => {
                    cfg.tau_const = Some(val.parse().map_err(|_| bad(format!("bad number '{val}'")))?);
                    cfg.tau_table = None;
                    tau_set = true;
                }
                ("domain", "tau_table") => {
                    cfg.tau_table = Some(floats(val)?);
                    cfg.tau_const = None;
                    tau_set = true;
                }
                ("speed", "kind") => cfg.speed_kind = val.to_string(),
                ("speed", "params") => cfg.speed_params = floats(val)?,
                ("grid", "n") => cfg.n = val.parse().map_err(|_| bad(format!("bad integer '{val}'")))?,
                ("grid", "half_width_auto") => {
                    cfg.half_width_auto = val.parse().map_err(|_| bad(format!("bad bool '{val}'")))?;
                }
                ("time", "T") => cfg.t_end = val.parse().map_err(|_| bad(format!("bad number '{val}'")))?,
                ("time", "cfl") => cfg.cfl = val.parse().map_err(|_| bad(format!("bad number '{val}'")))?,
                ("foliation", "kind") => cfg.foliation_kind = val.to_string(),
                ("foliation", "params") => cfg.foliation_params = floats(val)?,
                ("foliation", "s_min") => cfg.s_min = val.parse().map_err(|_| bad(format!("bad number '{val}'")))?,
                ("foliation", "s_max") => cfg.s_max = val.parse().map_err(|_| bad(format!("bad number '{val}'")))?,
                ("foliation", "s_steps") => cfg.s_steps = val.parse().map_err(|_| bad(format!("bad integer '{val}'")))?,
                ("inversion", "iters") => cfg.iters = val.parse().map_err(|_| bad(format!("bad integer '{val}'")))?,
                ("inversion", "outer_iters") => cfg.outer_iters = val.parse().map_err(|_| bad(format!("bad integer '{val}'")))?,
                ("inversion", "floor") => cfg.floor = val.parse().map_err(|_| bad(format!("bad number '{val}'")))?,
                ("probe", "ensemble") => cfg.ensemble = val.parse().map_err(|_| bad(format!("bad integer '{val}'")))?,
                ("probe", "band_limits") => {
                    cfg.band_limits = val
                        .split_whitespace()
                        .map(|t| t.parse::<usize>().map_err(|_| bad(format!("bad integer '{t}'"))))
                        .collect::<Result<_>>()?;
                }
                ("probe", "seed") => cfg.seed = val.parse().map_err(|_| bad(format!("bad integer '{val}'")))?,
                ("output", "dir") => cfg.out_dir = val.to_string(),
                ("truth", "f_kind") => cfg.truth_f_kind = Some(val.to_string()),
                ("truth", "f_params") => cfg.truth_f_params = floats(val)?,
                ("truth", "speed_kind") => cfg.truth_speed_kind = Some(val.to_string()),
                ("truth", "speed_params") => cfg.truth_speed_params = floats(val)?,
                ("truth", "source_kind") => cfg.truth_source_kind = Some(val.to_string()),
                ("truth", "source_params") => cfg.truth_source_params = floats(val)?,
                _ => {
                    return Err(Error::Config {
                        line: lineno,
                        msg: format!("unknown key '{key}' in section [{section}]"),
                    })
                }
            }
        }
        if !tau_set && cfg.tau_const.is_none() && cfg.tau_table.is_none() {
            cfg.tau_const = Some(cfg.t_end);
        }
        Ok(cfg)
    }

    /// Build the domain with samples, Γ, and τ.
    pub fn build_domain(&self) -> Result<Domain> {
        let base = match (self.domain_kind.as_str(), self.domain_params.as_slice()) {
            ("disk", [r]) => Domain::disk(*r),
            ("ellipse", [a, b]) => Domain::ellipse(*a, *b),
            _ => {
                return Err(Error::Config {
                    line: 0,
                    msg: format!(
                        "unknown domain kind '{}' with {} params",
                        self.domain_kind,
                        self.domain_params.len()
                    ),
                })
            }
        };
        let base = base.with_gamma(vec![self.gamma_arc]);
        let tau = if let Some(tbl) = &self.tau_table {
            // resample to boundary samples by linear interpolation over the fraction
            let n = base.boundary().len();
            let m = tbl.len();
            let vals = (0..n)
                .map(|k| {
                    let q = k as f64 / n as f64 * m as f64;
                    let i = (q.floor() as usize) % m;
                    let w = q - q.floor();
                    (1.0 - w) * tbl[i] + w * tbl[(i + 1) % m]
                })
                .collect();
            TauProfile::Table(vals)
        } else {
            TauProfile::Constant(self.tau_const.unwrap_or(self.t_end))
        };
        Ok(base.with_tau(tau))
    }

    pub fn build_speed(&self) -> Result<SpeedField> {
        build_speed_of(&self.speed_kind, &self.speed_params)
    }

    pub fn build_truth_speed(&self) -> Result<Option<SpeedField>> {
        match &self.truth_speed_kind {
            None => Ok(None),
            Some(k) => Ok(Some(build_speed_of(k, &self.truth_speed_params)?)),
        }
    }
}

pub fn build_speed_of(kind: &str, params: &[f64]) -> Result<SpeedField> {
    match (kind, params) {
        ("constant", [c]) => Ok(SpeedField::constant(*c)),
        ("constant", []) => Ok(SpeedField::constant(1.0)),
        ("herglotz", [r]) => Ok(SpeedField::Herglotz { r_trap: *r, steepness: 0.0, blend: None }),
        ("herglotz-blended", [r, steep, a, b]) => {
            Ok(SpeedField::Herglotz { r_trap: *r, steepness: *steep, blend: Some((*a, *b)) })
        }
        ("bumps", rest) if rest.len() % 4 == 0 && !rest.is_empty() => {
            let bumps = rest
                .chunks(4)
                .map(|c| SpeedBump {
                    center: crate::math::vec2(c[0], c[1]),
                    radius: c[2],
                    amp: c[3],
                })
                .collect();
            Ok(SpeedField::Bumps(bumps))
        }
        _ => Err(Error::Config {
            line: 0,
            msg: format!("unknown speed kind '{kind}' with {} params", params.len()),
        }),
    }
}
