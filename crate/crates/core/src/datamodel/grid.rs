use serde::{Deserialize, Serialize};

/// Parameters of the two-segment lead-time grid: hourly up to `hourly_until_h`,
/// then every `step_after_h` hours up to `max_lead_h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridParams {
    pub hourly_until_h: u32,
    pub step_after_h: u32,
    pub max_lead_h: u32,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams {
            hourly_until_h: 84,
            step_after_h: 3,
            max_lead_h: 132,
        }
    }
}

/// Ordered postprocessing lead hours. Lead 0 is the persistence anchor and is not on the grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeadTimeGrid {
    leads: Vec<u32>,
    params: GridParams,
}

impl LeadTimeGrid {
    pub const PERSISTENCE_ANCHOR_H: u32 = 0;

    pub fn new(params: GridParams) -> Result<Self, String> {
        if params.hourly_until_h == 0 || params.step_after_h == 0 {
            return Err("grid steps must be positive".into());
        }
        if params.max_lead_h < params.hourly_until_h {
            return Err("max_lead_h must be at least hourly_until_h".into());
        }
        if !(params.max_lead_h - params.hourly_until_h).is_multiple_of(params.step_after_h) {
            return Err("max_lead_h must lie on the coarse step".into());
        }
        let mut leads: Vec<u32> = (1..=params.hourly_until_h).collect();
        leads.extend(
            (params.hourly_until_h + params.step_after_h..=params.max_lead_h)
                .step_by(params.step_after_h as usize),
        );
        Ok(LeadTimeGrid { leads, params })
    }

    pub fn leads(&self) -> &[u32] {
        &self.leads
    }

    pub fn params(&self) -> GridParams {
        self.params
    }

    pub fn len(&self) -> usize {
        self.leads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leads.is_empty()
    }

    pub fn max_lead(&self) -> u32 {
        self.params.max_lead_h
    }

    pub fn contains(&self, lead_h: u32) -> bool {
        self.leads.binary_search(&lead_h).is_ok()
    }
}

impl Default for LeadTimeGrid {
    fn default() -> Self {
        LeadTimeGrid::new(GridParams::default()).expect("default grid is valid")
    }
}
