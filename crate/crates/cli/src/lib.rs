//! Command implementations behind the `sphereflow` binary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use sphereflow::config::{parse_config, OutputFormat, RunConfig};
use sphereflow::scenarios::{self, preset};
use sphereflow::{
    closure_integral, convexity_condition, firey_defect, run_flow, ExpectedOutcome, MonitorRecord, TerminalStatus,
    TrajectoryRecord,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_MISMATCH: i32 = 2;

/// Command-line values that take precedence over the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub grid_points: Option<usize>,
    pub t_max: Option<f64>,
    pub output_dir: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, mut cfg: RunConfig) -> Result<RunConfig> {
        if let Some(np) = self.grid_points {
            cfg.num_points = np;
        }
        if let Some(t) = self.t_max {
            cfg.engine.t_max = t;
        }
        if let Some(dir) = &self.output_dir {
            cfg.output.dir = dir.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<RunConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cfg = parse_config(&text).with_context(|| format!("in {}", path.display()))?;
    overrides.apply(cfg)
}

/// Outcome of one `run`.
#[derive(Debug)]
pub struct RunOutcome {
    pub status: TerminalStatus,
    pub expected: ExpectedOutcome,
    pub steps: usize,
    pub final_time: f64,
    pub output_dir: PathBuf,
}

impl RunOutcome {
    pub fn matches_expectation(&self) -> bool {
        match self.expected {
            ExpectedOutcome::Converge => self.status == TerminalStatus::Converged,
            ExpectedOutcome::Breakdown => self.status.is_breakdown(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.matches_expectation() {
            EXIT_OK
        } else {
            EXIT_MISMATCH
        }
    }
}

#[derive(Serialize)]
struct FinalState<'a> {
    scenario: &'a str,
    n: usize,
    k: usize,
    p: f64,
    num_points: usize,
    normalization: &'a str,
    time: f64,
    steps: usize,
    terminal_status: String,
    breakdown_time: Option<f64>,
    soliton_constant: Option<f64>,
    theta: &'a [f64],
    h: &'a [f64],
}

/// Render monitor samples as CSV: header row, one line per sample, LF endings,
/// 17 significant digits.
pub fn monitors_csv(samples: &[MonitorRecord]) -> String {
    let mut out = MonitorRecord::COLUMNS.join(",");
    out.push('\n');
    for s in samples {
        let row: Vec<String> = s.values().iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn final_state_json(cfg: &RunConfig, rec: &TrajectoryRecord, params: &sphereflow::FlowParams) -> Result<String> {
    let h = rec.final_state.h();
    let soliton_constant = match rec.status {
        TerminalStatus::Breakdown(_) => None,
        _ => rec.soliton_constant(params).ok(),
    };
    let breakdown_time = match rec.status {
        TerminalStatus::Breakdown(b) => Some(b.time),
        _ => None,
    };
    let doc = FinalState {
        scenario: &cfg.scenario.name,
        n: params.n,
        k: params.k,
        p: params.p,
        num_points: cfg.num_points,
        normalization: params.normalization.as_str(),
        time: rec.final_state.time(),
        steps: rec.steps,
        terminal_status: rec.status.label(),
        breakdown_time,
        soliton_constant,
        theta: h.grid().theta(),
        h: h.values(),
    };
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

/// Run the flow and write `monitors.csv`, `final_state.json` and `echo.cfg`
/// into the configured output directory.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunOutcome> {
    let spec = cfg.to_spec()?;
    let dir = &cfg.output.dir;
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    fs::write(dir.join("echo.cfg"), cfg.emit()).with_context(|| format!("writing to {}", dir.display()))?;

    let rec = run_flow(&spec.initial, &spec.params)?;
    if cfg.output.formats.contains(&OutputFormat::Csv) {
        fs::write(dir.join("monitors.csv"), monitors_csv(&rec.samples))?;
    }
    if cfg.output.formats.contains(&OutputFormat::Json) {
        fs::write(dir.join("final_state.json"), final_state_json(cfg, &rec, &spec.params)?)?;
    }
    Ok(RunOutcome {
        status: rec.status,
        expected: spec.expected_outcome,
        steps: rec.steps,
        final_time: rec.final_state.time(),
        output_dir: dir.clone(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvexityCheck {
    pub exponent: f64,
    pub min_eig: f64,
    pub theta_at_min: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FireyCheck {
    pub min_defect: f64,
    pub all_tails_positive: bool,
    pub closure: f64,
    pub pass: bool,
}

/// Static checks on `φ`, computed without flowing.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub scenario: String,
    pub n: usize,
    pub k: usize,
    pub p: f64,
    pub phi: String,
    pub convexity: ConvexityCheck,
    /// Polar component of `∫ x/φ(x) dx`.
    pub closure_integral: f64,
    pub closure_pass: bool,
    /// Present only for `k < n`.
    pub firey: Option<FireyCheck>,
}

const CLOSURE_TOL: f64 = 1e-10;

pub fn cmd_check(cfg: &RunConfig) -> Result<CheckReport> {
    let spec = cfg.to_spec()?;
    let params = &spec.params;
    let m = params.p + params.k as f64 - 1.0;
    let conv = convexity_condition(&params.phi, m)?;
    let closure = closure_integral(&params.phi, params.n)?;
    let firey = if params.k < params.n {
        let rep = firey_defect(&params.phi, params.n, params.k)?;
        let min_defect = rep.min_defect();
        Some(FireyCheck {
            min_defect,
            all_tails_positive: rep.all_tails_positive(),
            closure: rep.closure,
            pass: min_defect > 0.0 && rep.all_tails_positive(),
        })
    } else {
        None
    };
    Ok(CheckReport {
        scenario: cfg.scenario.name.clone(),
        n: params.n,
        k: params.k,
        p: params.p,
        phi: cfg.scenario.phi.name().to_string(),
        convexity: ConvexityCheck {
            exponent: m,
            min_eig: conv.min_eig,
            theta_at_min: conv.theta_at_min,
            pass: conv.ok,
        },
        closure_integral: closure,
        closure_pass: closure.abs() <= CLOSURE_TOL,
        firey,
    })
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

impl CheckReport {
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let c = &self.convexity;
        let _ = writeln!(s, "scenario {} (n={}, k={}, p={}, phi={})", self.scenario, self.n, self.k, self.p, self.phi);
        let _ = writeln!(
            s,
            "({})-convexity: {}, min_eig ≈ {:.6} at θ={:.6}",
            c.exponent,
            verdict(c.pass),
            c.min_eig,
            c.theta_at_min
        );
        let _ = writeln!(s, "closure ∫x/φ: {}, polar component {:.3e}", verdict(self.closure_pass), self.closure_integral);
        match &self.firey {
            Some(f) => {
                let _ = writeln!(
                    s,
                    "firey: {}, min defect {:.6}, tails positive: {}, endpoint {:.3e}",
                    verdict(f.pass),
                    f.min_defect,
                    f.all_tails_positive,
                    f.closure
                );
            }
            None => {
                let _ = writeln!(s, "firey: not applicable (k = n)");
            }
        }
        s
    }
}

/// One line per preset: name, parameters, expected outcome and notes.
pub fn list_scenarios() -> String {
    let mut s = String::new();
    for name in scenarios::SCENARIO_NAMES {
        let d = preset(name).expect("listed presets exist");
        let _ = writeln!(
            s,
            "{:<16} n={} k={} p={} phi={:<14} initial={:<14} expect={:<9} {}",
            name,
            d.n,
            d.k,
            d.p,
            d.phi.name(),
            d.initial.name(),
            d.expected.as_str(),
            d.notes
        );
    }
    s
}

/// Give each config its own output subdirectory when several run together.
pub fn private_output_dirs(configs: &mut [RunConfig], stems: &[String]) {
    if configs.len() < 2 {
        return;
    }
    for (cfg, stem) in configs.iter_mut().zip(stems) {
        cfg.output.dir = cfg.output.dir.join(stem);
    }
}

/// Run every config, at most `jobs` at a time. Results keep the input order.
pub fn run_all(configs: &[RunConfig], jobs: usize) -> Vec<Result<RunOutcome>> {
    let jobs = jobs.max(1);
    let mut results: Vec<Option<Result<RunOutcome>>> = configs.iter().map(|_| None).collect();
    for (chunk_cfg, chunk_out) in configs.chunks(jobs).zip(results.chunks_mut(jobs)) {
        std::thread::scope(|scope| {
            let handles: Vec<_> = chunk_cfg.iter().map(|c| scope.spawn(move || cmd_run(c))).collect();
            for (slot, handle) in chunk_out.iter_mut().zip(handles) {
                *slot = Some(handle.join().unwrap_or_else(|_| Err(anyhow::anyhow!("run panicked"))));
            }
        });
    }
    results.into_iter().map(|r| r.expect("every slot filled")).collect()
}
