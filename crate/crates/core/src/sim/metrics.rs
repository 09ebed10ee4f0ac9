use std::fmt::Write as _;

use crate::erg::Branch;

/// Wall-clock seconds spent in each stage of the main loop.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseTiming {
    /// TIP solve, constraint extraction and governor update.
    pub governor: f64,
    /// Gait sequencing, foot tracking and joint mapping.
    pub control: f64,
    pub contact: f64,
    pub integrate: f64,
    /// In-memory row assembly.
    pub record: f64,
}

impl PhaseTiming {
    pub fn total(&self) -> f64 {
        self.governor + self.control + self.contact + self.integrate + self.record
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub steps: usize,
    pub sim_time: f64,
    pub completed: bool,
    pub abort_reason: Option<String>,
    pub erg_enabled: bool,
    /// Forward distance covered during the gait (m).
    pub distance: f64,
    pub mean_speed: f64,
    pub final_position: [f64; 3],
    pub fall: bool,
    pub min_height: f64,
    pub max_height: f64,
    /// Minimum over governed steps of the applied-reference constraint
    /// values, without the safety margin.
    pub min_h_w: f64,
    pub governed_steps: usize,
    /// Stance-foot samples in contact, after settling.
    pub stance_samples: usize,
    /// Friction-pyramid violations: stance samples with a tangential force
    /// component above `μ_s f_z + 0.5 N`.
    pub violation_samples: usize,
    /// Stance samples whose foot slides faster than the Stribeck velocity.
    pub slip_samples: usize,
    pub violation_time: f64,
    pub branch_counts: [usize; 5],
    pub degenerate_support: usize,
    pub singular_leg_events: usize,
    pub clamp_events: usize,
    pub gait_faults: usize,
    pub timing: PhaseTiming,
    pub steps_per_second: f64,
}

impl RunMetrics {
    pub fn pyramid_fraction(&self) -> f64 {
        if self.stance_samples == 0 {
            1.0
        } else {
            1.0 - self.violation_samples as f64 / self.stance_samples as f64
        }
    }

    pub fn branch_count(&self, b: Branch) -> usize {
        self.branch_counts[b.code() as usize]
    }

    /// `key = value` sidecar text.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("steps", self.steps.to_string());
        put("sim_time_s", self.sim_time.to_string());
        put("completed", self.completed.to_string());
        if let Some(r) = &self.abort_reason {
            put("abort_reason", r.replace('\n', " "));
        }
        put("erg_enabled", self.erg_enabled.to_string());
        put("distance_m", self.distance.to_string());
        put("mean_speed_mps", self.mean_speed.to_string());
        let [x, y, z] = self.final_position;
        put("final_x_m", x.to_string());
        put("final_y_m", y.to_string());
        put("final_z_m", z.to_string());
        put("fall", self.fall.to_string());
        put("min_height_m", self.min_height.to_string());
        put("max_height_m", self.max_height.to_string());
        put("min_h_w_n", self.min_h_w.to_string());
        put("governed_steps", self.governed_steps.to_string());
        put("stance_samples", self.stance_samples.to_string());
        put("pyramid_fraction", self.pyramid_fraction().to_string());
        put("slip_samples", self.slip_samples.to_string());
        put("violation_samples", self.violation_samples.to_string());
        put("violation_time_s", self.violation_time.to_string());
        for b in [Branch::Attract, Branch::Tangent, Branch::Mixed, Branch::NormalIn, Branch::NormalOut] {
            put(&format!("branch_{}", b.name().replace('-', "_")), self.branch_count(b).to_string());
        }
        put("degenerate_support", self.degenerate_support.to_string());
        put("singular_leg_events", self.singular_leg_events.to_string());
        put("clamp_events", self.clamp_events.to_string());
        put("gait_faults", self.gait_faults.to_string());
        let t = &self.timing;
        put("time_governor_s", t.governor.to_string());
        put("time_control_s", t.control.to_string());
        put("time_contact_s", t.contact.to_string());
        put("time_integrate_s", t.integrate.to_string());
        put("time_record_s", t.record.to_string());
        put("time_loop_s", t.total().to_string());
        put("steps_per_second", self.steps_per_second.to_string());
        s
    }
}

/// Columns of the sweep summary table, matching [`summary_row`].
pub const SUMMARY_COLUMNS: &[&str] = &[
    "value",
    "completed",
    "fall",
    "mean_speed[m/s]",
    "distance[m]",
    "final_x[m]",
    "final_y[m]",
    "final_z[m]",
    "min_h_w[N]",
    "pyramid_fraction[-]",
    "violation_samples[-]",
    "slip_samples[-]",
    "steps_per_second[1/s]",
];

pub fn summary_row(value: &str, m: &RunMetrics) -> Vec<String> {
    vec![
        value.to_string(),
        m.completed.to_string(),
        m.fall.to_string(),
        m.mean_speed.to_string(),
        m.distance.to_string(),
        m.final_position[0].to_string(),
        m.final_position[1].to_string(),
        m.final_position[2].to_string(),
        m.min_h_w.to_string(),
        m.pyramid_fraction().to_string(),
        m.violation_samples.to_string(),
        m.slip_samples.to_string(),
        m.steps_per_second.to_string(),
    ]
}
