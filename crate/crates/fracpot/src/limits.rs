//! Boundary-limit analysis. (under construction)
