//! Built-in plan files, also shipped under `presets/`.

use serde::{Deserialize, Serialize};

use crate::plan::{PlanError, SweepPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    /// Coarser grids sized for a laptop.
    Desk,
    /// dx = dt = 0.02 on [-100, 100].
    Full,
}

pub const TABLE1_DESK: &str = include_str!("../presets/table1_desk.toml");
pub const TABLE1_FULL: &str = include_str!("../presets/table1_full.toml");
pub const TABLE2_DESK: &str = include_str!("../presets/table2_desk.toml");
pub const TABLE2_FULL: &str = include_str!("../presets/table2_full.toml");
pub const THETA_NEAR_ZERO_DESK: &str = include_str!("../presets/theta_near_zero_desk.toml");
pub const THETA_NEAR_ZERO_FULL: &str = include_str!("../presets/theta_near_zero_full.toml");
pub const THETA_NEAR_HALF_DESK: &str = include_str!("../presets/theta_near_half_desk.toml");
pub const THETA_NEAR_HALF_FULL: &str = include_str!("../presets/theta_near_half_full.toml");
pub const MONOSTABLE: &str = include_str!("../presets/monostable.toml");

/// Preset by file stem, e.g. `table1_desk`.
pub fn by_name(name: &str) -> Option<&'static str> {
    Some(match name {
        "table1_desk" => TABLE1_DESK,
        "table1_full" => TABLE1_FULL,
        "table2_desk" => TABLE2_DESK,
        "table2_full" => TABLE2_FULL,
        "theta_near_zero_desk" => THETA_NEAR_ZERO_DESK,
        "theta_near_zero_full" => THETA_NEAR_ZERO_FULL,
        "theta_near_half_desk" => THETA_NEAR_HALF_DESK,
        "theta_near_half_full" => THETA_NEAR_HALF_FULL,
        "monostable" => MONOSTABLE,
        _ => return None,
    })
}

pub fn load(text: &str) -> Result<SweepPlan, PlanError> {
    SweepPlan::from_toml(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_validate() {
        for name in [
            "table1_desk",
            "table1_full",
            "table2_desk",
            "table2_full",
            "theta_near_zero_desk",
            "theta_near_zero_full",
            "theta_near_half_desk",
            "theta_near_half_full",
            "monostable",
        ] {
            load(by_name(name).unwrap()).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert!(by_name("nope").is_none());
    }
}
