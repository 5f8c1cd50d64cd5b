//! Mean-value gap functionals. (under construction)

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapKind {
    G,
    Gstar,
    Gcal,
}

#[derive(Debug, Clone)]
pub struct GapReport {
    pub lower_bound: f64,
}

#[derive(Debug, Clone)]
pub enum WitnessFamily {
    MollifiedTouch,
}
