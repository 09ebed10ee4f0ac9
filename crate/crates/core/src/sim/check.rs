//! Acceptance suite: every criterion with its measured value and threshold.

use std::fmt::Write as _;
use std::time::Instant;

use crate::erg::ErgGains;

use super::config::{ConfigError, SimConfig};
use super::metrics::RunMetrics;
use super::run::run;
use super::verify;

#[derive(Debug, Clone)]
pub struct CheckOptions {
    /// Fewer randomized instances; the scenario runs are unchanged.
    pub fast: bool,
    /// Headline scenario for criteria 1 to 5.
    pub scenario: SimConfig,
    /// Governor gains for the randomized Lyapunov trials; `p` is forced to `I`.
    pub governor: ErgGains<f64>,
    pub seed: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self { fast: false, scenario: SimConfig::default(), governor: ErgGains::uniform(1.0, 1e-3), seed: 20 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub measured: String,
    pub threshold: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CheckReport {
    pub results: Vec<CriterionResult>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn get(&self, id: u8) -> Option<&CriterionResult> {
        self.results.iter().find(|r| r.id == id)
    }

    /// One tab-separated line per criterion plus a summary line.
    pub fn to_text(&self) -> String {
        let mut s = String::from("id\tname\tstatus\tmeasured\tthreshold\n");
        for r in &self.results {
            let status = if r.passed { "pass" } else { "FAIL" };
            let _ = writeln!(s, "{}\t{}\t{}\t{}\t{}", r.id, r.name, status, r.measured, r.threshold);
        }
        let n = self.results.iter().filter(|r| r.passed).count();
        let _ = writeln!(s, "summary\t{n}/{} passed", self.results.len());
        s
    }
}

pub const ALL: [u8; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];

struct Scenario {
    governed: RunMetrics,
    wall: f64,
    ungoverned: Option<RunMetrics>,
}

fn scenario(opts: &CheckOptions, ablation: bool) -> Result<Scenario, ConfigError> {
    let mut cfg = opts.scenario.clone();
    cfg.erg_enabled = true;
    let clock = Instant::now();
    let governed = run(&cfg)?.metrics;
    let wall = clock.elapsed().as_secs_f64();
    let ungoverned = if ablation {
        cfg.erg_enabled = false;
        Some(run(&cfg)?.metrics)
    } else {
        None
    };
    Ok(Scenario { governed, wall, ungoverned })
}

fn result(id: u8, name: &'static str, passed: bool, measured: String, threshold: &str) -> CriterionResult {
    CriterionResult { id, name, passed, measured, threshold: threshold.to_string() }
}

/// Runs the criteria listed in `ids`, sharing the scenario runs.
pub fn check_subset(ids: &[u8], opts: &CheckOptions) -> Result<CheckReport, ConfigError> {
    let needs_run = ids.iter().any(|&i| (1..=5).contains(&i));
    let sc = if needs_run { Some(scenario(opts, ids.contains(&5))?) } else { None };
    let scale = |full: usize, fast: usize| if opts.fast { fast } else { full };
    let mut results = Vec::new();
    for &id in ids {
        let r = match id {
            1 => {
                let s = sc.as_ref().expect("scenario");
                let m = &s.governed;
                let ok = m.completed && !m.fall && (0.10..=0.30).contains(&m.mean_speed) && s.wall <= 60.0;
                result(
                    1,
                    "slippery-surface-stability",
                    ok,
                    format!(
                        "completed={} fall={} mean_speed={:.4} wall={:.2}s",
                        m.completed, m.fall, m.mean_speed, s.wall
                    ),
                    "completed, no fall, mean_speed in [0.10, 0.30] m/s, wall <= 60 s",
                )
            }
            2 => {
                let m = &sc.as_ref().expect("scenario").governed;
                let ok = m.governed_steps > 0 && m.min_h_w >= -1e-6;
                result(
                    2,
                    "governor-constraint-enforcement",
                    ok,
                    format!("min_h_w={:.6e} over {} steps", m.min_h_w, m.governed_steps),
                    "min_h_w >= -1e-6",
                )
            }
            3 => {
                let m = &sc.as_ref().expect("scenario").governed;
                let f = m.pyramid_fraction();
                result(
                    3,
                    "true-grf-friction-containment",
                    m.stance_samples > 0 && f >= 0.99,
                    format!("fraction={f:.5} ({} of {} outside)", m.violation_samples, m.stance_samples),
                    "fraction >= 0.99 with 0.5 N slack",
                )
            }
            4 => {
                let m = &sc.as_ref().expect("scenario").governed;
                let sps = m.steps_per_second;
                result(
                    4,
                    "throughput",
                    sps >= 2000.0,
                    format!("steps_per_second={sps:.0} (target 20000 {})", if sps >= 20000.0 { "met" } else { "missed" }),
                    ">= 2000 steps/s",
                )
            }
            5 => {
                let s = sc.as_ref().expect("scenario");
                let on = s.governed.violation_samples;
                let off = s.ungoverned.as_ref().expect("ablation run").violation_samples;
                result(
                    5,
                    "ablation",
                    off > on,
                    format!("violations erg_off={off} erg_on={on}"),
                    "erg_off > erg_on",
                )
            }
            6 => {
                let r = verify::tip_soundness(scale(1000, 200), opts.seed);
                let ok = r.newton <= 1e-9 && r.lateral <= 1e-9 && r.moment <= 1e-9;
                result(
                    6,
                    "grf-solver-soundness",
                    ok,
                    format!(
                        "newton={:.3e} lateral={:.3e} moment={:.3e} over {}",
                        r.newton, r.lateral, r.moment, r.instances
                    ),
                    "each <= 1e-9",
                )
            }
            7 => {
                let r = verify::affine_soundness(scale(100, 20), 100, opts.seed + 1);
                let ok = r.samples == r.instances * 100 && r.max_error <= 1e-9;
                result(
                    7,
                    "affine-extraction-soundness",
                    ok,
                    format!("max_error={:.3e} over {} samples", r.max_error, r.samples),
                    "<= 1e-9, 100 samples per instance",
                )
            }
            8 => governor_result(&verify::governor_soundness(scale(1000, 100), opts.seed + 2, &opts.governor)),
            9 => {
                let r = verify::integrator_soundness();
                let ok = r.convergence_ratio >= 14.0 && r.orthonormality_drift <= 1e-9 && r.ballistic_error <= 1e-9;
                result(
                    9,
                    "numerical-integrity",
                    ok,
                    format!(
                        "ratio={:.2} drift={:.3e} ballistic={:.3e}",
                        r.convergence_ratio, r.orthonormality_drift, r.ballistic_error
                    ),
                    "ratio >= 14, drift <= 1e-9/step, ballistic <= 1e-9",
                )
            }
            10 => {
                let r = verify::jacobian_soundness(scale(100, 20), opts.seed + 3);
                result(
                    10,
                    "jacobian-correctness",
                    r.contact <= 1e-6 && r.leg <= 1e-6,
                    format!("contact={:.3e} leg={:.3e} over {} states", r.contact, r.leg, r.states),
                    "relative <= 1e-6",
                )
            }
            other => result(other, "unknown", false, "no such criterion".into(), "1..=10"),
        };
        results.push(r);
    }
    Ok(CheckReport { results })
}

fn governor_result(trials: &[verify::GovernorTrial]) -> CriterionResult {
    let n = trials.len();
    let monotone = trials.iter().filter(|t| t.worst_v_increase <= 0.0).count();
    let (feasible, infeasible): (Vec<&verify::GovernorTrial>, Vec<_>) = trials.iter().partition(|t| t.reference_feasible);
    let feas_ok = feasible.iter().filter(|t| t.passed()).count();
    let inf_conv = infeasible.iter().filter(|t| t.converged).count();
    let inf_ok = infeasible.iter().filter(|t| t.passed()).count();
    let worst_violation = infeasible.iter().map(|t| t.final_violation).fold(0.0, f64::max);
    let worst_gap = infeasible.iter().map(|t| t.oracle_gap.abs()).fold(0.0, f64::max);
    let slowest = infeasible.iter().map(|t| t.final_speed).fold(0.0, f64::max);
    result(
        8,
        "erg-lyapunov-property",
        trials.iter().all(|t| t.passed()),
        format!(
            "monotone={monotone}/{n} feasible_ok={feas_ok}/{} infeasible_ok={inf_ok}/{} \
             infeasible_converged={inf_conv} worst_final_speed={slowest:.3e} \
             worst_violation={worst_violation:.3e} worst_oracle_gap={worst_gap:.3e}",
            feasible.len(),
            infeasible.len()
        ),
        "V non-increasing; speed < 1e-6 within 1e5 steps; x_r reached or |min h_w| <= 1e-3 and V within 5%",
    )
}

pub fn check(opts: &CheckOptions) -> Result<CheckReport, ConfigError> {
    check_subset(&ALL, opts)
}
