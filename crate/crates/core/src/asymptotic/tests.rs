use super::*;
use crate::engine::{forward_ray, minimal_geodesic, shortest_closed_geodesic, EngineOptions};
use crate::group::{fixed_points, GeneratorSet, GroupWord};
use crate::hyperbolic::{BoundaryPoint, DiscPoint, HyperbolicGeodesic, MobiusMap};
use crate::metric::{FinslerMetric, InvariantField};
use crate::Error;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use std::sync::OnceLock;

fn gens() -> &'static GeneratorSet {
    static GENS: OnceLock<GeneratorSet> = OnceLock::new();
    GENS.get_or_init(|| GeneratorSet::build_octagon_group().unwrap())
}

fn field(level: usize) -> Arc<InvariantField> {
    static F4: OnceLock<Arc<InvariantField>> = OnceLock::new();
    static F6: OnceLock<Arc<InvariantField>> = OnceLock::new();
    let cell = if level == 4 { &F4 } else { &F6 };
    cell.get_or_init(|| Arc::new(InvariantField::new(gens(), 0.5, 1.0, level).unwrap()))
        .clone()
}

fn randers() -> FinslerMetric {
    FinslerMetric::randers_exact(field(4), 0.3).unwrap()
}

fn conformal() -> FinslerMetric {
    FinslerMetric::conformal(field(6))
}

fn quick() -> EngineOptions {
    EngineOptions {
        nested_check: false,
        ..EngineOptions::default()
    }
}

fn small_grid() -> GridSpec {
    GridSpec {
        radius: 1.5,
        spacing: 0.5,
    }
}

fn geo(a: f64, b: f64) -> HyperbolicGeodesic {
    HyperbolicGeodesic::new(BoundaryPoint::new(a), BoundaryPoint::new(b)).unwrap()
}

#[test]
fn deviations_of_g_minimizers_vanish() {
    for metric in [FinslerMetric::hyperbolic(), randers()] {
        let m = minimal_geodesic(&metric, &geo(0.4, 2.9), 8.0, &quick()).unwrap();
        let report = morse_deviation(&m.path).unwrap();
        assert!(report.max_deviation >= 0.0 && report.max_deviation < 1e-4);
        let brute = m
            .path
            .vertices()
            .iter()
            .map(|v| crate::hyperbolic::project_to_geodesic(v, &report.reference).1)
            .fold(0.0, f64::max);
        assert_eq!(brute, report.max_deviation);
    }
}

#[test]
fn conformal_deviation_plateaus() {
    let series =
        deviation_series(&conformal(), &geo(1.1, 4.0), &[8.0, 12.0, 16.0], &quick()).unwrap();
    std::println!("D(R) = {:?}", series.deviations);
    assert!(series.deviations.iter().all(|d| d.is_finite() && *d > 0.0));
    assert!(series.last_growth() < 0.05);
}

#[test]
fn hyperbolic_rays_point_at_their_target() {
    let xi = BoundaryPoint::new(2.2);
    let x = DiscPoint::new(0.4, 1.3).unwrap();
    let ray = forward_ray(&FinslerMetric::hyperbolic(), &x, &xi, 10.0, &quick()).unwrap();
    let (xi_hat, diag) = asymptotic_direction(&ray).unwrap();
    assert!(xi_hat.distance(&xi) < 1e-6);
    assert!(diag.drift < 1e-6);
}

#[test]
fn conformal_direction_drift_shrinks() {
    let metric = conformal();
    let xi = BoundaryPoint::new(0.917);
    let x = DiscPoint::new(2.0, 0.6).unwrap();
    let drift: Vec<f64> = [8.0, 16.0]
        .iter()
        .map(|&r| {
            asymptotic_direction(&forward_ray(&metric, &x, &xi, r, &quick()).unwrap())
                .unwrap()
                .1
                .drift
        })
        .collect();
    std::println!("drift R=8 {:e}, R=16 {:e}", drift[0], drift[1]);
    assert!(drift[1] < drift[0]);
}

#[test]
fn directions_depend_continuously_on_tangents() {
    let metric = conformal();
    let x = DiscPoint::new(1.0, 0.5).unwrap();
    let xi = BoundaryPoint::new(3.3);
    let a = forward_ray(&metric, &x, &xi, 12.0, &quick()).unwrap();
    let b = forward_ray(&metric, &x, &xi.rotated(1e-3), 12.0, &quick()).unwrap();
    let dt = crate::hyperbolic::angle_diff(
        initial_tangent_angle(&a.path).unwrap(),
        initial_tangent_angle(&b.path).unwrap(),
    )
    .abs();
    let dxi = asymptotic_direction(&a)
        .unwrap()
        .0
        .distance(&asymptotic_direction(&b).unwrap().0);
    assert!(dt > 0.0 && dt < 1e-2);
    assert!(dxi < 1e-2);
}

#[test]
fn bounding_geodesics_of_g_minimizers_coincide() {
    for metric in [FinslerMetric::hyperbolic(), randers()] {
        let b = bounding_geodesics(&metric, &geo(0.2, 2.5), 6.0, 0.3, &quick()).unwrap();
        assert!(b.stable);
        assert!(b.gap < 1e-4, "gap {}", b.gap);
        assert!(b.order_defect < 1e-6);
        for s in [-2.0, 0.0, 2.0] {
            let (y0, y1) = b.offsets_at(s);
            assert!(y0.abs() < 1e-6 && y1.abs() < 1e-6);
        }
    }
}

#[test]
fn conformal_bounding_geodesics_are_ordered() {
    let b = bounding_geodesics(&conformal(), &geo(0.7, 3.6), 6.0, 0.3, &quick()).unwrap();
    std::println!(
        "gap {:e} n {} stable {} defect {:e}",
        b.gap,
        b.n_used,
        b.stable,
        b.order_defect
    );
    assert!(b.gap >= 0.0);
    assert!(b.order_defect < 1e-6);
}

#[test]
fn bounding_rejects_bad_delta() {
    let r = bounding_geodesics(
        &FinslerMetric::hyperbolic(),
        &geo(0.2, 2.5),
        6.0,
        0.7,
        &quick(),
    );
    assert!(matches!(r, Err(Error::InvalidParameter(_))));
}

#[test]
fn polar_grid_layout() {
    let g = PolarGrid::new(small_grid()).unwrap();
    assert_eq!(g.rings(), 3);
    assert_eq!(g.points()[0], DiscPoint::origin());
    assert!(g.points().iter().all(|p| p.rho() <= 1.5 + 1e-12));
    for (a, b) in g.edges() {
        let d = crate::hyperbolic::dist_g(&g.points()[a], &g.points()[b]);
        assert!(d > 0.0 && d < 0.8, "edge {a}-{b} length {d}");
    }
    assert!(PolarGrid::new(GridSpec {
        radius: 9.0,
        spacing: 0.5
    })
    .is_err());
}

#[test]
fn grid_interpolation_of_closed_forms() {
    let xi = BoundaryPoint::new(0.3);
    let g = PolarGrid::new(GridSpec::default()).unwrap();
    let u = HorofunctionField::from_fn(xi, g, |p| hyperbolic_horofunction(&xi, p));
    let mut worst: f64 = 0.0;
    for k in 0..200 {
        let p = DiscPoint::new(0.731 * k as f64, 3.9 * (k as f64 / 200.0)).unwrap();
        worst = worst.max((u.interpolate(&p).unwrap() - hyperbolic_horofunction(&xi, &p)).abs());
    }
    assert!(worst < 1e-3, "interpolation error {worst}");
    let far = DiscPoint::new(0.0, 4.5).unwrap();
    assert!(matches!(
        u.interpolate(&far),
        Err(Error::GridCoverage { .. })
    ));
}

#[test]
fn hyperbolic_horofunction_closed_form() {
    let xi = BoundaryPoint::new(1.9);
    let u = horofunction(
        &FinslerMetric::hyperbolic(),
        &xi,
        &ApproachSpec::default_ray(),
        GridSpec::default(),
        &quick(),
    )
    .unwrap();
    assert_eq!(u.value_at_origin(), 0.0);
    assert!(u.converged);
    let err = u
        .grid
        .points()
        .iter()
        .zip(&u.values)
        .map(|(p, v)| (hyperbolic_horofunction(&xi, p) - v).abs())
        .fold(0.0, f64::max);
    assert!(err < 2e-3, "error {err}");
}

#[test]
fn randers_horofunction_closed_form() {
    let metric = randers();
    let f = metric.field().unwrap();
    let xi = BoundaryPoint::new(4.4);
    let approach = ApproachSpec::RayFrom {
        base: DiscPoint::origin(),
        radii: vec![12.0, 16.0],
    };
    let spec = GridSpec {
        radius: 2.0,
        spacing: 0.25,
    };
    let u = horofunction(&metric, &xi, &approach, spec, &quick()).unwrap();
    let f0 = f.value(&DiscPoint::origin()).unwrap();
    let err = u
        .grid
        .points()
        .iter()
        .zip(&u.values)
        .map(|(p, v)| {
            (hyperbolic_horofunction(&xi, p) + 0.3 * (f.value(p).unwrap() - f0) - v).abs()
        })
        .fold(0.0, f64::max);
    assert!(err < 2e-3, "error {err}");
}

#[test]
fn busemann_functions_calibrate_their_rays() {
    let metric = conformal();
    let xi = BoundaryPoint::new(2.71);
    let ray = forward_ray(
        &metric,
        &DiscPoint::new(0.5, 0.4).unwrap(),
        &xi,
        16.0,
        &quick(),
    )
    .unwrap();
    let total = ray.path.flags().extrapolated_length;
    let u = busemann_of_ray(
        &metric,
        &ray,
        &[0.75 * total, total],
        small_grid(),
        &quick(),
    )
    .unwrap();
    assert_eq!(u.value_at_origin(), 0.0);
    let residual = calibration_residual(&metric, &u, &ray, 0.5 * total, 8, &quick()).unwrap();
    assert!(residual < 2e-3, "calibration residual {residual}");
}

#[test]
fn hyperbolic_busemann_matches_horofunction() {
    let metric = FinslerMetric::hyperbolic();
    let xi = BoundaryPoint::new(5.0);
    let ray = forward_ray(
        &metric,
        &DiscPoint::new(2.0, 1.0).unwrap(),
        &xi,
        20.0,
        &quick(),
    )
    .unwrap();
    let u = busemann_of_ray(&metric, &ray, &[16.0, 20.0], small_grid(), &quick()).unwrap();
    let closed =
        HorofunctionField::from_fn(xi, u.grid.clone(), |p| hyperbolic_horofunction(&xi, p));
    assert!(compare_horofunctions(&u, &closed).unwrap() < 2e-3);
}

#[test]
fn pushforward_normalization_and_identity() {
    let xi = BoundaryPoint::new(0.8);
    let spec = GridSpec {
        radius: 2.0,
        spacing: 0.25,
    };
    let u = HorofunctionField::from_fn(xi, PolarGrid::new(spec).unwrap(), |p| {
        hyperbolic_horofunction(&xi, p)
    });
    let same = pushforward_horofunction(&MobiusMap::identity(), &u, spec).unwrap();
    assert!(compare_horofunctions(&u, &same).unwrap() < 1e-12);
    let tau = gens().generators()[1];
    let pushed = pushforward_horofunction(
        &tau,
        &u,
        GridSpec {
            radius: 0.5,
            spacing: 0.25,
        },
    );
    // tau moves the origin by about 3: a radius-2 source cannot cover.
    assert!(matches!(pushed, Err(Error::GridCoverage { .. })));
}

#[test]
fn hyperbolic_pushforward_matches_closed_form() {
    let xi = BoundaryPoint::new(0.8);
    let tau = gens().generators()[2];
    let source = GridSpec {
        radius: 5.0,
        spacing: 0.25,
    };
    let u = HorofunctionField::from_fn(xi, PolarGrid::new(source).unwrap(), |p| {
        hyperbolic_horofunction(&xi, p)
    });
    let target = GridSpec {
        radius: 1.0,
        spacing: 0.25,
    };
    let pushed = pushforward_horofunction(&tau, &u, target).unwrap();
    assert_eq!(pushed.value_at_origin(), 0.0);
    let txi = tau.apply_boundary(&xi);
    assert!(pushed.xi.distance(&txi) < 1e-12);
    let closed = HorofunctionField::from_fn(txi, pushed.grid.clone(), |p| {
        hyperbolic_horofunction(&txi, p)
    });
    let gap = compare_horofunctions(&pushed, &closed).unwrap();
    assert!(
        gap < 3e-3,
        "pushforward residual {gap}, indicator {}",
        pushed.interpolation_error
    );
}

#[test]
fn comparison_requires_matching_grids() {
    let xi = BoundaryPoint::new(0.8);
    let a = HorofunctionField::from_fn(xi, PolarGrid::new(small_grid()).unwrap(), |p| {
        hyperbolic_horofunction(&xi, p)
    });
    let b = HorofunctionField::from_fn(xi, PolarGrid::new(GridSpec::default()).unwrap(), |p| {
        hyperbolic_horofunction(&xi, p)
    });
    assert_eq!(compare_horofunctions(&a, &a).unwrap(), 0.0);
    assert_eq!(compare_horofunctions(&a, &b), Err(Error::GridMismatch));
}

#[test]
fn horofunctions_are_lipschitz() {
    for metric in [randers(), conformal()] {
        let c_f = metric.estimate_c_f(64).unwrap().c_f;
        let xi = BoundaryPoint::new(3.9);
        let approach = ApproachSpec::RayFrom {
            base: DiscPoint::origin(),
            radii: vec![10.0],
        };
        let u = horofunction(&metric, &xi, &approach, small_grid(), &quick()).unwrap();
        let report = lipschitz_audit(&metric, &u, c_f, 5e-4, &quick()).unwrap();
        assert_eq!(report.violations, 0, "{report:?}");
        assert_eq!(report.g_violations, 0, "{report:?}");
        assert!(report.max_g_ratio <= c_f + 1e-6);
    }
}

#[test]
fn hyperbolic_and_randers_widths_vanish() {
    let xi = BoundaryPoint::new(1.234);
    let bases = [
        DiscPoint::origin(),
        DiscPoint::new(2.0, 1.0).unwrap(),
        DiscPoint::new(4.0, 0.7).unwrap(),
    ];
    for metric in [FinslerMetric::hyperbolic(), randers()] {
        let w = width_wplus(
            &metric,
            gens(),
            &xi,
            &bases,
            16.0,
            TailWindow::default(),
            &quick(),
        )
        .unwrap();
        assert_eq!(w.pairs.len(), 6);
        assert!(w.wplus_lower < 1e-3, "{w:?}");
    }
}

#[test]
fn fixed_directions_are_flagged() {
    let (attract, _) = fixed_points(&gens().generators()[0]).unwrap();
    let bases = [DiscPoint::origin(), DiscPoint::new(2.0, 1.0).unwrap()];
    let w = width_wplus(
        &FinslerMetric::hyperbolic(),
        gens(),
        &attract,
        &bases,
        8.0,
        TailWindow::default(),
        &quick(),
    )
    .unwrap();
    assert_eq!(w.fixed_direction, Some(GroupWord::parse("a").unwrap()));
}

#[test]
fn hyperbolic_strips_classify_points() {
    let metric = FinslerMetric::hyperbolic();
    let xi = BoundaryPoint::new(0.0);
    let strips: Vec<BoundingGeodesics> = [2.0, 3.0, 4.0]
        .iter()
        .map(|&a| bounding_geodesics(&metric, &geo(a, 0.0), 6.0, 0.3, &quick()).unwrap())
        .collect();
    for (i, s) in strips.iter().enumerate() {
        assert!(s.geodesic.xi_plus().distance(&xi) < 1e-12);
        let p = s.geodesic.point_at(0.5).unwrap();
        assert_eq!(strip_classify(&p, &strips, 1e-6).unwrap(), i);
    }
    let off = DiscPoint::new(5.0, 2.0).unwrap();
    assert_eq!(strip_classify(&off, &strips, 1e-6), Err(Error::NotFound));
    assert!(strip_overlap(&strips, 32) <= 1e-6);
}

#[test]
fn hyperbolic_gauge_is_monotone_and_bounded() {
    let metric = FinslerMetric::hyperbolic();
    let xi = BoundaryPoint::new(2.0);
    let reference = forward_ray(&metric, &DiscPoint::origin(), &xi, 16.0, &quick()).unwrap();
    let u = busemann_of_ray(&metric, &reference, &[16.0], small_grid(), &quick()).unwrap();
    let ray = forward_ray(
        &metric,
        &DiscPoint::new(3.5, 1.2).unwrap(),
        &xi,
        16.0,
        &quick(),
    )
    .unwrap();
    let g = gauge_report(&metric, &u, &reference, &ray, 1.0, 8.0, 16, &quick()).unwrap();
    assert!(g.max_decrease <= 1e-4, "{g:?}");
    assert!(g.h_max <= g.bound + 1e-4, "{g:?}");
}

#[test]
fn conformal_rays_from_one_basepoint_do_not_cross() {
    let metric = conformal();
    let x = DiscPoint::new(0.3, 0.8).unwrap();
    let xi = BoundaryPoint::new(2.345);
    for offset in [-1.0, 1.0] {
        let trial = crossing_trial(&metric, &x, &xi, 12.0, offset, 0.1, 1e-6, &quick()).unwrap();
        assert!(trial.passes());
    }
}

#[test]
fn hyperbolic_rays_approach_the_axis() {
    let metric = FinslerMetric::hyperbolic();
    let word = GroupWord::parse("a").unwrap();
    let pm = shortest_closed_geodesic(&metric, gens(), &word, &quick()).unwrap();
    let x = DiscPoint::new(2.5, 1.5).unwrap();
    let d: Vec<f64> = [8.0, 12.0, 16.0]
        .iter()
        .map(|&r| {
            let w = TailWindow::default();
            let ray =
                forward_ray(&metric, &x, &pm.axis.xi_attract, w.ray_radius(r), &quick()).unwrap();
            periodic_approach(&metric, &ray, &pm, w.bounds(r), 32).unwrap()
        })
        .collect();
    assert!(d[0] >= d[1] && d[1] >= d[2], "{d:?}");
    assert!(d[2] < 1e-2);
}
