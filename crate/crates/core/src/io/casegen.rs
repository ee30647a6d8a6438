//! Synthetic case study: a three-node transport network with a renewable, a
//! thermal unit, and a non-supplied-power backstop, plus seeded hourly demand
//! and capacity-factor profiles.
//!
//! The profile shapes and the network capacities are tuned together so that a
//! year-long run visits a small set of bases covering the interesting
//! regimes: renewable-marginal hours (with and without line congestion),
//! thermal-marginal hours, and scarcity hours priced by the backstop, with
//! every transport corridor congested somewhere.

use crate::transport::{Generator, Line, NetworkModel, TimestepData};
use crate::Result;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::TAU;

pub const HOURS_PER_WEEK: usize = 168;

/// Configuration of the synthetic case study. The seed fully determines the
/// generated files.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CaseStudyConfig {
    pub weeks: u32,
    pub seed: u64,
    /// network template id; `three-node` is the only built-in
    pub template: String,
    /// mean demand level at the load node, MW
    pub demand_base: f64,
    /// swing of the seasonal + diurnal demand shape, MW
    pub demand_amplitude: f64,
    /// mean renewable capacity factor
    pub cf_mean: f64,
    /// seasonal swing of the capacity factor
    pub cf_amplitude: f64,
    /// standard deviation of the hourly demand noise, MW
    pub noise: f64,
}

impl Default for CaseStudyConfig {
    fn default() -> Self {
        CaseStudyConfig {
            weeks: 52,
            seed: 83,
            template: "three-node".into(),
            demand_base: 86.0,
            demand_amplitude: 30.0,
            cf_mean: 0.55,
            cf_amplitude: 0.28,
            noise: 3.0,
        }
    }
}

impl CaseStudyConfig {
    pub fn horizon(&self) -> usize {
        self.weeks as usize * HOURS_PER_WEEK
    }
}

/// The stylized three-node network: demand and backstop at `n1`, renewable
/// at `n2`, thermal at `n3`, one line per flow direction on each corridor.
pub fn three_node_network() -> NetworkModel {
    let line = |id: &str, from: &str, to: &str, capacity: f64| Line {
        id: id.into(),
        from: from.into(),
        to: to.into(),
        capacity,
        transport_cost: 0.1,
    };
    NetworkModel {
        nodes: vec!["n1".into(), "n2".into(), "n3".into()],
        generators: vec![
            Generator {
                id: "Re".into(),
                node: "n2".into(),
                variable_cost: 3.1,
                capacity: 85.0,
                uses_cf_series: true,
            },
            Generator {
                id: "Th".into(),
                node: "n3".into(),
                variable_cost: 24.0,
                capacity: 48.0,
                uses_cf_series: false,
            },
            Generator {
                id: "NSP".into(),
                node: "n1".into(),
                variable_cost: 5000.0,
                capacity: 250.0,
                uses_cf_series: false,
            },
        ],
        lines: vec![
            line("l1", "n2", "n1", 70.0),
            line("l2", "n3", "n1", 42.0),
            line("l3", "n2", "n3", 10.0),
            line("l4", "n3", "n2", 10.0),
            line("l5", "n1", "n2", 70.0),
            line("l6", "n1", "n3", 42.0),
        ],
    }
}

/// Generate the case-study network and its hourly input series.
pub fn generate_case_study(cfg: &CaseStudyConfig) -> Result<(NetworkModel, Vec<TimestepData>)> {
    if cfg.template != "three-node" {
        return Err(crate::error::Error::Validation(format!(
            "unknown network template `{}`",
            cfg.template
        )));
    }
    let net = three_node_network();
    let horizon = cfg.horizon();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut steps = Vec::with_capacity(horizon);
    let mut cf_walk = 0.0_f64;
    for t in 0..horizon {
        let hour_of_day = (t % 24) as f64;
        let day_of_week = (t / 24) % 7;
        let season = (TAU * t as f64 / horizon.max(1) as f64).sin();

        // demand: seasonal swell, a two-peaked working day, a weekend dip,
        // and mild noise
        let diurnal = 0.62 * (TAU * (hour_of_day - 8.5) / 24.0).sin()
            + 0.38 * (2.0 * TAU * (hour_of_day - 6.0) / 24.0).sin();
        let weekend = if day_of_week >= 5 { -7.0 } else { 0.0 };
        let noise: f64 = cfg.noise * gaussian(&mut rng);
        let demand = (cfg.demand_base
            + 0.35 * cfg.demand_amplitude * season
            + cfg.demand_amplitude * diurnal
            + weekend
            + noise)
            .clamp(30.0, 132.0);

        // capacity factor: slow seasonal swing plus a mean-reverting walk
        cf_walk = 0.975 * cf_walk + 0.11 * gaussian(&mut rng);
        let cf_season = cfg.cf_amplitude * (TAU * (t as f64 / horizon as f64) * 2.0 + 1.1).sin();
        let cf_fast = 0.09 * (TAU * t as f64 / 31.0).sin();
        let cf = (cfg.cf_mean + cf_season + cf_fast + 0.22 * cf_walk).clamp(0.02, 0.98);

        let mut demand_map = BTreeMap::new();
        demand_map.insert("n1".to_string(), demand);
        demand_map.insert("n2".to_string(), 0.0);
        demand_map.insert("n3".to_string(), 0.0);
        let mut cf_map = BTreeMap::new();
        cf_map.insert("Re".to_string(), cf);
        steps.push(TimestepData {
            demand: demand_map,
            capacity_factor: cf_map,
        });
    }
    Ok((net, steps))
}

/// Box-Muller transform; two uniform draws per sample keep the stream
/// deterministic across platforms.
fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
}
