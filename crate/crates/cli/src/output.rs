//! File formats: event and grid CSVs, report JSON, and sidecar metadata.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use bipoisson::trajectory::{Construction, Trajectory};
use bipoisson::Reduction;
use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

/// 17 significant digits: every double round-trips.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// `phase,time,level`: births in time order with the level entered, one
/// `one` row carrying `Z_1`, then deaths up to the horizon with the level
/// entered.
pub fn events_csv(path: &Trajectory) -> String {
    let mut s = String::from("phase,time,level\n");
    for (j, &g) in path.birth_jumps.iter().enumerate() {
        writeln!(s, "birth,{},{}", num(g), j + 1).expect("write to String");
    }
    writeln!(s, "one,{},{}", num(1.0), num(path.z1)).expect("write to String");
    for (d, level) in path.death_events_to_horizon() {
        writeln!(s, "death,{},{level}", num(d)).expect("write to String");
    }
    s
}

/// `t,x` on an even grid of `[0, T]`; times inside the unresolved window
/// are left out.
pub fn grid_csv(path: &Trajectory, points: usize) -> String {
    let mut s = String::from("t,x\n");
    for p in path.grid(points) {
        writeln!(s, "{},{}", num(p.t), num(p.x)).expect("write to String");
    }
    s
}

/// What a simulated path looked like, for the sidecar.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectorySummary {
    pub construction: Construction,
    pub birth_events: usize,
    /// Births are resolved on `[0, birth_end]`.
    pub birth_end: f64,
    pub birth_truncated: bool,
    pub z1: f64,
    /// Deaths are resolved on `(death_start, ∞)`.
    pub death_start: f64,
    pub death_events_to_horizon: usize,
    pub death_truncated: bool,
    pub count_at_horizon: u64,
    pub window_note: &'static str,
}

impl TrajectorySummary {
    pub fn new(path: &Trajectory) -> Self {
        Self {
            construction: path.construction,
            birth_events: path.birth_jumps.len(),
            birth_end: path.birth_end,
            birth_truncated: path.birth_truncated,
            z1: path.z1,
            death_start: path.death_start,
            death_events_to_horizon: path.death_events_to_horizon().count(),
            death_truncated: path.death_truncated,
            count_at_horizon: path.count_at_horizon(),
            window_note: "infinitely many jumps accumulate at t = 1; the path is resolved outside \
                          (birth_end, death_start) and Z_1 is drawn from its exact conditional law",
        }
    }
}

/// Provenance written next to every output file. Contains no timestamp, so
/// reruns with the same config are byte-identical.
#[derive(Clone, Debug, Serialize)]
pub struct Metadata<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    /// Canonical `θ` after any `(η, θ)` reduction.
    pub theta: f64,
    pub reduction: Option<Reduction>,
    pub config: &'a RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<TrajectorySummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub claims: Option<ClaimCounts>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ClaimCounts {
    pub total: usize,
    pub passed: usize,
}

pub fn meta_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    path.with_file_name(name)
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `contents` to `path` and the metadata to `path.meta.json`.
pub fn write_with_meta(path: &Path, contents: &str, meta: &Metadata<'_>) -> Result<(), CliError> {
    write_file(path, contents)?;
    let mut json = serde_json::to_string_pretty(meta).expect("metadata serializes");
    json.push('\n');
    write_file(&meta_path(path), &json)
}

#[cfg(test)]
mod tests {
    use super::*;
    use bipoisson::trajectory::SimulationConfig;

    fn pinned() -> Trajectory {
        Trajectory {
            theta: 1.0,
            construction: Construction::Forward,
            config: SimulationConfig::default(),
            birth_jumps: vec![0.25, 0.5],
            birth_end: 1.0 - 1e-6,
            birth_truncated: false,
            z1: 2.5,
            death_jumps: vec![5.0, 2.0, 1.5],
            death_start: 1.0 + 1e-6,
            death_truncated: false,
        }
    }

    #[test]
    fn events_rows() {
        let csv = events_csv(&pinned());
        let rows: Vec<&str> = csv.lines().collect();
        assert_eq!(
            rows,
            [
                "phase,time,level",
                "birth,2.5000000000000000e-1,1",
                "birth,5.0000000000000000e-1,2",
                "one,1.0000000000000000e0,2.5000000000000000e0",
                "death,1.5000000000000000e0,2",
                "death,2.0000000000000000e0,1",
            ]
        );
    }

    #[test]
    fn grid_follows_the_affine_map() {
        let csv = grid_csv(&pinned(), 7);
        let rows: Vec<(f64, f64)> = csv
            .lines()
            .skip(1)
            .map(|l| {
                let (t, x) = l.split_once(',').unwrap();
                (t.parse().unwrap(), x.parse().unwrap())
            })
            .collect();
        // t = 0, 0.5, 1, 1.5, 2, 2.5, 3
        assert_eq!(rows.len(), 7);
        assert_eq!(rows[1], (0.5, 0.5 * 2.0 - 0.5));
        assert_eq!(rows[2], (1.0, 2.5 - 1.0));
        assert_eq!(rows[3], (1.5, 0.5 * 2.0 - 1.0));
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 123456.789] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(
            meta_path(Path::new("out/events.csv")),
            Path::new("out/events.csv.meta.json")
        );
    }
}
