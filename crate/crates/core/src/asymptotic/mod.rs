//! Quantities at infinity: Morse deviations, asymptotic directions, bounding
//! geodesics, horofunctions and widths.
//!
//! Every object here is a truncation. Limits are replaced by sequences in the
//! truncation radius, and reports carry the series so that trends, not limit
//! values, can be asserted.

mod deviation;
mod horofunction;
mod width;

#[cfg(test)]
mod tests;

pub use deviation::{
    asymptotic_direction, bounding_geodesics, deviation_series, initial_tangent_angle,
    morse_deviation, rotated_geodesic, BoundingGeodesics, DeviationReport, DirectionDiagnostics,
    PlateauSeries,
};
pub use horofunction::{
    busemann_of_ray, calibration_residual, compare_horofunctions, horofunction,
    hyperbolic_horofunction, lipschitz_audit, pushforward_horofunction, ApproachSpec, GridSpec,
    HorofunctionField, LipschitzReport, PolarGrid, MAX_GRID_RADIUS,
};
pub use width::{
    crossing_trial, gauge_report, orbit_path, periodic_approach, strip_classify, strip_overlap,
    width_wplus, window_separation, CrossingTrial, GaugeReport, TailWindow, WidthReport,
    FIXED_SCREEN_LEN, FIXED_SCREEN_TOL,
};
