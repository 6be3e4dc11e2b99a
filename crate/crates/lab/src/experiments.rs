//! Experiment dispatch. Each experiment writes its artifacts under
//! `<out>/runs/<hash prefix>/` and fills a [`ResultRecord`].

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use minrays::asymptotic::{
    asymptotic_direction, compare_horofunctions, horofunction, hyperbolic_horofunction,
    initial_tangent_angle, lipschitz_audit, morse_deviation, orbit_path, periodic_approach,
    width_wplus, ApproachSpec, GridSpec, HorofunctionField, TailWindow, FIXED_SCREEN_LEN,
    FIXED_SCREEN_TOL,
};
use minrays::engine::{
    forward_ray, minimal_geodesic, minimize_segment, shortest_closed_geodesic, EngineOptions,
    PolylinePath,
};
use minrays::hyperbolic::{dist_g, FermiFrame};
use minrays::{
    BoundaryPoint, DiscPoint, FinslerMetric, GeneratorSet, GroupWord, HyperbolicGeodesic,
    InvariantField, Letter,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{direction, ExperimentConfig, ExperimentKind, MetricFamily, MetricSpec};
use crate::export::{write_field, write_path, write_table};
use crate::record::{Cache, ResultRecord};
use crate::svg::{write_svg, Element, Style};
use crate::LabError;

/// The octagon group, built once per process.
pub fn generators() -> Result<&'static GeneratorSet, LabError> {
    static GENS: OnceLock<GeneratorSet> = OnceLock::new();
    if let Some(g) = GENS.get() {
        return Ok(g);
    }
    let built = GeneratorSet::build_octagon_group()?;
    Ok(GENS.get_or_init(|| built))
}

/// Invariant fields are memoized per `(A, s, L)`; building one at L = 6 is
/// the most expensive setup step.
pub fn invariant_field(spec: &MetricSpec) -> Result<Arc<InvariantField>, LabError> {
    type Key = (u64, u64, usize);
    static FIELDS: OnceLock<Mutex<HashMap<Key, Arc<InvariantField>>>> = OnceLock::new();
    let key = (spec.amplitude.to_bits(), spec.shape.to_bits(), spec.level);
    let fields = FIELDS.get_or_init(Default::default);
    if let Some(f) = fields.lock().expect("field cache poisoned").get(&key) {
        return Ok(f.clone());
    }
    let f = Arc::new(InvariantField::new(
        generators()?,
        spec.amplitude,
        spec.shape,
        spec.level,
    )?);
    fields
        .lock()
        .expect("field cache poisoned")
        .insert(key, f.clone());
    Ok(f)
}

pub fn build_metric(spec: &MetricSpec) -> Result<FinslerMetric, LabError> {
    Ok(match spec.kind {
        MetricFamily::Hyperbolic => FinslerMetric::hyperbolic(),
        MetricFamily::Conformal => FinslerMetric::conformal(invariant_field(spec)?),
        MetricFamily::Randers => {
            FinslerMetric::randers_exact(invariant_field(spec)?, spec.epsilon)?
        }
    })
}

/// Cached run: a stored record for the same canonical config is returned
/// as is.
pub fn run(config: &ExperimentConfig) -> Result<ResultRecord, LabError> {
    config.validate()?;
    let cache = Cache::new(&config.output.dir);
    let hash = crate::record::config_hash(config);
    if let Some(hit) = cache.load(&hash)? {
        return Ok(hit);
    }
    let record = run_uncached(config)?;
    cache.store(&record)?;
    Ok(record)
}

pub fn run_uncached(config: &ExperimentConfig) -> Result<ResultRecord, LabError> {
    config.validate()?;
    let mut ctx = Context::new(config);
    match config.experiment {
        ExperimentKind::Group => group(config, &mut ctx)?,
        ExperimentKind::Geodesic => geodesic(config, &mut ctx)?,
        ExperimentKind::Ray => ray(config, &mut ctx)?,
        ExperimentKind::Morse => morse(config, &mut ctx)?,
        ExperimentKind::Horofunction => horofunction_run(config, &mut ctx)?,
        ExperimentKind::Widths => widths(config, &mut ctx)?,
        ExperimentKind::Periodic => periodic(config, &mut ctx)?,
        ExperimentKind::Verify => crate::verify::record_into(config, &mut ctx)?,
    }
    Ok(ctx.record)
}

pub(crate) struct Context {
    pub(crate) record: ResultRecord,
    dir: PathBuf,
    rel: String,
}

impl Context {
    fn new(config: &ExperimentConfig) -> Self {
        let record = ResultRecord::new(config);
        let rel = format!("runs/{}", &record.config_hash[..16]);
        Self {
            dir: config.output.dir.join(&rel),
            rel,
            record,
        }
    }

    /// Registers an output file and returns its full path.
    pub(crate) fn artifact(&mut self, name: &str) -> PathBuf {
        self.record.outputs.push(format!("{}/{name}", self.rel));
        self.dir.join(name)
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn radius_key(prefix: &str, r: f64) -> String {
    format!("{prefix}_R{r}")
}

pub fn random_point(rng: &mut ChaCha8Rng, max_rho: f64) -> Result<DiscPoint, LabError> {
    Ok(DiscPoint::new(
        rng.random_range(0.0..TAU),
        rng.random_range(0.0..=max_rho),
    )?)
}

/// A g-geodesic through a random point within `max_rho` of the origin, in a
/// random direction.
pub fn random_geodesic(rng: &mut ChaCha8Rng, max_rho: f64) -> Result<HyperbolicGeodesic, LabError> {
    let p = random_point(rng, max_rho)?;
    let q = minrays::MobiusMap::to_point(&p)
        .apply(&DiscPoint::new(rng.random_range(0.0..TAU), 1.0)?)?;
    Ok(HyperbolicGeodesic::through_points(&p, &q)?.0)
}

/// A seeded random direction that is not within the screening tolerance of
/// a fixed point of any word of length at most 6.
pub fn non_fixed_direction(rng: &mut ChaCha8Rng) -> Result<BoundaryPoint, LabError> {
    let gens = generators()?;
    loop {
        let xi = BoundaryPoint::new(rng.random_range(0.0..TAU));
        if gens
            .is_fixed_direction(&xi, FIXED_SCREEN_LEN, FIXED_SCREEN_TOL)?
            .is_none()
        {
            return Ok(xi);
        }
    }
}

fn g_segment(x: &DiscPoint, y: &DiscPoint, steps: usize) -> Result<Vec<DiscPoint>, LabError> {
    let (frame, len) = FermiFrame::segment(x, y)?;
    Ok((0..=steps)
        .map(|k| frame.disc_point(len * k as f64 / steps as f64, 0.0))
        .collect::<Result<_, _>>()?)
}

fn g_ray(
    x: &DiscPoint,
    xi: &BoundaryPoint,
    len: f64,
    steps: usize,
) -> Result<Vec<DiscPoint>, LabError> {
    let frame = FermiFrame::ray(x, xi);
    Ok((0..=steps)
        .map(|k| frame.disc_point(len * k as f64 / steps as f64, 0.0))
        .collect::<Result<_, _>>()?)
}

fn f_path(p: &PolylinePath) -> Element {
    Element::Path {
        points: p.vertices().to_vec(),
        style: Style::f_object(),
    }
}

fn g_path(points: Vec<DiscPoint>) -> Element {
    Element::Path {
        points,
        style: Style::g_object(),
    }
}

fn group(config: &ExperimentConfig, ctx: &mut Context) -> Result<(), LabError> {
    let gens = generators()?;
    let field = invariant_field(&config.metric)?;
    let residual = gens.relator_residual();
    let half_traces: Vec<f64> = gens.generators().iter().map(|m| m.half_trace()).collect();
    let hyperbolic = gens.generators().iter().all(|m| m.is_hyperbolic());
    let invariance = invariance_residual(&field, config.seed, 200)?;
    let tail = field.tail();
    let r = &mut ctx.record;
    r.scalar("relator_residual", residual);
    for (k, h) in half_traces.iter().enumerate() {
        r.scalar(format!("half_trace_{k}"), *h);
        r.scalar(format!("translation_length_{k}"), 2.0 * h.abs().acosh());
    }
    r.scalar("r_oct", gens.r_oct());
    r.scalar("field_tail", tail);
    r.scalar("field_orbit_len", field.orbit_len() as f64);
    r.scalar("invariance_residual", invariance);
    r.check(
        "relator",
        residual < 1e-9,
        format!("relator residual {residual:e}"),
    );
    r.check(
        "generators_hyperbolic",
        hyperbolic,
        format!("half traces {half_traces:?}"),
    );
    r.check(
        "field_invariance",
        invariance < tail.max(1e-6),
        format!("invariance residual {invariance:e}, tail {tail:e}"),
    );
    let rows: Vec<Vec<f64>> = gens
        .vertices()
        .iter()
        .map(|v| vec![v.theta(), v.rho()])
        .collect();
    write_table(&ctx.artifact("octagon.csv"), &["theta", "rho"], &rows)?;
    write_svg(
        &ctx.artifact("octagon.svg"),
        &[Element::Octagon {
            gens: Box::new(gens.clone()),
            translates: true,
        }],
    )?;
    Ok(())
}

/// `max |f(tau p) - f(p)|` over seeded points and all eight letters.
pub fn invariance_residual(
    field: &InvariantField,
    seed: u64,
    samples: usize,
) -> Result<f64, LabError> {
    let gens = field.generators();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let p = random_point(&mut rng, 3.0)?;
        let f = field.value(&p)?;
        for letter in Letter::all() {
            worst = worst.max((field.value(&gens.map(letter).apply(&p)?)? - f).abs());
        }
    }
    Ok(worst)
}

fn geodesic(config: &ExperimentConfig, ctx: &mut Context) -> Result<(), LabError> {
    let metric = build_metric(&config.metric)?;
    let opts = config.numerics.engine_options();
    let x = config.geometry.points[0].to_point()?;
    let y = config.geometry.points[1].to_point()?;
    let path = minimize_segment(&metric, &x, &y, &opts)?;
    let flags = path.flags().clone();
    let dg = dist_g(&x, &y);
    let deviation = morse_deviation(&path)?.max_deviation;
    let r = &mut ctx.record;
    r.scalar("dist_g", dg);
    r.scalar("f_length", path.f_length());
    r.scalar("dist_f", flags.extrapolated_length);
    r.scalar("g_length", path.g_length());
    r.scalar("refined_to", flags.refined_to as f64);
    r.scalar("residual", flags.residual);
    r.scalar("distinct_minimizers", flag(flags.distinct_minimizers));
    r.scalar("deviation", deviation);
    r.check(
        "converged",
        flags.converged,
        format!("refined to N = {}", flags.refined_to),
    );
    match config.metric.kind {
        MetricFamily::Hyperbolic => {
            let err = (flags.extrapolated_length - dg).abs();
            r.check(
                "closed_form_length",
                err < 1e-5,
                format!("|d_F - d_g| = {err:e}"),
            );
            r.check(
                "closed_form_trace",
                deviation < 1e-4,
                format!("deviation {deviation:e}"),
            );
        }
        MetricFamily::Randers => {
            let field = metric.field().expect("Randers metrics carry a field");
            let oracle = dg + config.metric.epsilon * (field.value(&y)? - field.value(&x)?);
            let err = (flags.extrapolated_length - oracle).abs();
            r.scalar("oracle", oracle);
            r.check(
                "master_identity",
                err < 1e-4,
                format!("|d_F - oracle| = {err:e}"),
            );
        }
        MetricFamily::Conformal => {}
    }
    write_path(&ctx.artifact("path.csv"), &metric, &path)?;
    write_svg(
        &ctx.artifact("geodesic.svg"),
        &[
            g_path(g_segment(&x, &y, 128)?),
            f_path(&path),
            Element::Point {
                point: x,
                style: Style::f_object(),
            },
            Element::Point {
                point: y,
                style: Style::f_object(),
            },
        ],
    )?;
    Ok(())
}

fn ray(config: &ExperimentConfig, ctx: &mut Context) -> Result<(), LabError> {
    let metric = build_metric(&config.metric)?;
    let opts = config.numerics.engine_options();
    let x = config.geometry.points[0].to_point()?;
    let xi = direction(config.geometry.directions[0]);
    let radius = config.geometry.radius;
    let ray = forward_ray(&metric, &x, &xi, radius, &opts)?;
    let (xi_hat, diag) = asymptotic_direction(&ray)?;
    let fixed = generators()?.is_fixed_direction(&xi, FIXED_SCREEN_LEN, FIXED_SCREEN_TOL)?;
    let r = &mut ctx.record;
    r.scalar("xi_hat_turns", xi_hat.angle() / TAU);
    r.scalar("direction_error", xi_hat.distance(&xi));
    r.scalar("drift", diag.drift);
    r.scalar("f_length", ray.path.f_length());
    r.scalar("initial_tangent", initial_tangent_angle(&ray.path)?);
    r.scalar("fixed_direction", flag(fixed.is_some()));
    if let Some(n) = ray.nested {
        r.scalar("nested_difference", n.difference);
        r.scalar("nested_stable", flag(n.stable));
    }
    r.check("converged", ray.path.flags().converged, "ray minimization");
    if config.metric.kind != MetricFamily::Conformal {
        let err = xi_hat.distance(&xi);
        r.check(
            "g_ray_direction",
            err < 1e-6,
            format!("direction error {err:e}"),
        );
    }
    write_path(&ctx.artifact("ray.csv"), &metric, &ray.path)?;
    write_svg(
        &ctx.artifact("ray.svg"),
        &[g_path(g_ray(&x, &xi, radius, 256)?), f_path(&ray.path)],
    )?;
    Ok(())
}

/// Plateau assertion: relative growth below 5% between the last two radii,
/// unless the deviations are below the engine accuracy throughout.
pub fn plateau_ok(dhat: &[f64]) -> (bool, f64) {
    let n = dhat.len();
    if n < 2 {
        return (dhat.iter().all(|d| d.is_finite()), 0.0);
    }
    let (a, b) = (dhat[n - 2], dhat[n - 1]);
    let finite = dhat.iter().all(|d| d.is_finite());
    if a.max(b) < 1e-4 {
        return (finite, 0.0);
    }
    let growth = b / a - 1.0;
    (finite && growth < 0.05, growth)
}

fn morse(config: &ExperimentConfig, ctx: &mut Context) -> Result<(), LabError> {
    let metric = build_metric(&config.metric)?;
    let opts = config.numerics.engine_options();
    let radii = &config.geometry.radii;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let geos = (0..config.geometry.count)
        .map(|_| random_geodesic(&mut rng, 1.0))
        .collect::<Result<Vec<_>, _>>()?;
    let mut dhat = vec![0.0f64; radii.len()];
    let mut rows = Vec::new();
    let mut figure = Vec::new();
    for (i, geo) in geos.iter().enumerate() {
        for (k, &radius) in radii.iter().enumerate() {
            let m = minimal_geodesic(&metric, geo, radius, &opts)?;
            let d = morse_deviation(&m.path)?.max_deviation;
            dhat[k] = dhat[k].max(d);
            rows.push(vec![
                i as f64,
                radius,
                d,
                m.path.flags().extrapolated_length,
            ]);
            if k + 1 == radii.len() {
                figure.push(Element::Geodesic {
                    geodesic: *geo,
                    style: Style::g_object(),
                });
                figure.push(f_path(&m.path));
            }
        }
    }
    let (ok, growth) = plateau_ok(&dhat);
    let r = &mut ctx.record;
    for (&radius, d) in radii.iter().zip(&dhat) {
        r.scalar(radius_key("dhat", radius), *d);
    }
    r.scalar("growth_last", growth);
    r.check(
        "plateau",
        ok,
        format!("D(R) = {dhat:?}, last growth {growth:.4}"),
    );
    if config.metric.kind != MetricFamily::Conformal {
        let worst = dhat.iter().copied().fold(0.0, f64::max);
        r.check(
            "g_geodesic_traces",
            worst < 1e-4,
            format!("largest deviation {worst:e}"),
        );
    }
    write_table(
        &ctx.artifact("morse.csv"),
        &["geodesic", "R", "deviation", "f_length"],
        &rows,
    )?;
    write_svg(&ctx.artifact("morse.svg"), &figure)?;
    Ok(())
}

fn horofunction_run(config: &ExperimentConfig, ctx: &mut Context) -> Result<(), LabError> {
    let metric = build_metric(&config.metric)?;
    let opts = config.numerics.engine_options();
    let base = config.geometry.points[0].to_point()?;
    let xi = direction(config.geometry.directions[0]);
    let spec = GridSpec {
        radius: config.numerics.grid_radius,
        spacing: config.numerics.grid_spacing,
    };
    let approach = ApproachSpec::RayFrom {
        base,
        radii: config.geometry.radii.clone(),
    };
    let u = horofunction(&metric, &xi, &approach, spec, &opts)?;
    let c_f = metric.estimate_c_f(8)?.c_f;
    let audit = lipschitz_audit(&metric, &u, c_f, 5e-4, &opts)?;
    let fixed = generators()?.is_fixed_direction(&xi, FIXED_SCREEN_LEN, FIXED_SCREEN_TOL)?;
    // At a fixed direction the limits from either side may differ; the gap
    // is recorded only.
    let one_sided_gap = match fixed {
        Some(_) => {
            let side = |sign: f64| {
                let approach = ApproachSpec::OneSided {
                    base,
                    radii: config.geometry.radii.clone(),
                    sign,
                    offset: 1.0,
                };
                horofunction(&metric, &xi, &approach, spec, &opts)
            };
            Some(compare_horofunctions(&side(1.0)?, &side(-1.0)?)?)
        }
        None => None,
    };
    let r = &mut ctx.record;
    r.scalar("fixed_direction", flag(fixed.is_some()));
    if let Some(gap) = one_sided_gap {
        r.scalar("one_sided_gap", gap);
    }
    r.scalar("grid_points", u.grid.len() as f64);
    r.scalar("u_origin", u.value_at_origin());
    r.scalar("series_last", u.series.last().copied().unwrap_or(0.0));
    r.scalar("converged", flag(u.converged));
    r.scalar("interpolation_error", u.interpolation_error);
    r.scalar("c_f", c_f);
    r.scalar("lipschitz_violations", audit.violations as f64);
    r.scalar("lipschitz_max_excess", audit.max_excess);
    r.scalar("g_lipschitz_ratio", audit.max_g_ratio);
    r.check("normalized", u.value_at_origin() == 0.0, "u(o) = 0");
    r.check(
        "converged",
        u.converged,
        format!("last change {:?}", u.series.last()),
    );
    r.check(
        "lipschitz",
        audit.violations == 0 && audit.g_violations == 0,
        format!(
            "{} of {} edges violate, max excess {:e}",
            audit.violations, audit.edges, audit.max_excess
        ),
    );
    let closed_form = match config.metric.kind {
        MetricFamily::Hyperbolic => Some(sup_error(&u, |p| Ok(hyperbolic_horofunction(&xi, p)))?),
        MetricFamily::Randers => {
            let field = metric.field().expect("Randers metrics carry a field");
            let eps = config.metric.epsilon;
            let f0 = field.value(&DiscPoint::origin())?;
            Some(sup_error(&u, |p| {
                Ok(hyperbolic_horofunction(&xi, p) + eps * (field.value(p)? - f0))
            })?)
        }
        MetricFamily::Conformal => None,
    };
    if let Some(err) = closed_form {
        r.scalar("closed_form_error", err);
        r.check("closed_form", err < 2e-3, format!("sup error {err:e}"));
    }
    write_field(&ctx.artifact("horofunction.csv"), &u)?;
    write_svg(
        &ctx.artifact("horofunction.svg"),
        &[
            Element::Heat {
                points: u.grid.points().to_vec(),
                values: u.values.clone(),
            },
            Element::Octagon {
                gens: Box::new(generators()?.clone()),
                translates: false,
            },
        ],
    )?;
    Ok(())
}

/// Largest deviation of a sampled field from a closed form on its grid.
pub fn sup_error(
    u: &HorofunctionField,
    oracle: impl Fn(&DiscPoint) -> Result<f64, LabError>,
) -> Result<f64, LabError> {
    let mut err: f64 = 0.0;
    for (p, v) in u.grid.points().iter().zip(&u.values) {
        err = err.max((v - oracle(p)?).abs());
    }
    Ok(err)
}

/// True when each value is at most its predecessor.
pub fn nonincreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] <= w[0])
}

fn widths(config: &ExperimentConfig, ctx: &mut Context) -> Result<(), LabError> {
    let metric = build_metric(&config.metric)?;
    let opts = config.numerics.engine_options();
    let gens = generators()?;
    let xi = direction(config.geometry.directions[0]);
    let basepoints = config
        .geometry
        .points
        .iter()
        .map(|p| p.to_point())
        .collect::<Result<Vec<_>, _>>()?;
    let mut estimates = Vec::new();
    let mut rows = Vec::new();
    let mut fixed = None;
    let mut unstable = 0;
    for &radius in &config.geometry.radii {
        let report = width_wplus(
            &metric,
            gens,
            &xi,
            &basepoints,
            radius,
            TailWindow::default(),
            &opts,
        )?;
        for &(i, j, sep) in &report.pairs {
            rows.push(vec![radius, i as f64, j as f64, sep]);
        }
        estimates.push(report.wplus_lower);
        fixed = report.fixed_direction;
        unstable += report.unstable_rays;
    }
    let r = &mut ctx.record;
    for (&radius, w) in config.geometry.radii.iter().zip(&estimates) {
        r.scalar(radius_key("wplus", radius), *w);
    }
    r.scalar("fixed_direction", flag(fixed.is_some()));
    r.scalar("unstable_rays", unstable as f64);
    match config.metric.kind {
        MetricFamily::Conformal => {
            if let Some(w) = &fixed {
                r.check(
                    "trend",
                    true,
                    format!("direction is fixed by {w}; trend not asserted: {estimates:?}"),
                );
            } else {
                r.check(
                    "trend",
                    nonincreasing(&estimates),
                    format!("w+ estimates {estimates:?}"),
                );
            }
        }
        _ => {
            let worst = estimates.iter().copied().fold(0.0, f64::max);
            r.check(
                "vanishing",
                worst < 1e-3,
                format!("largest estimate {worst:e}"),
            );
        }
    }
    write_table(
        &ctx.artifact("widths.csv"),
        &["R", "from", "to", "separation"],
        &rows,
    )?;
    let radius = config.geometry.radii.iter().copied().fold(0.0, f64::max);
    let quiet = quiet_options(&opts);
    let mut figure = Vec::new();
    for b in &basepoints {
        figure.push(g_path(g_ray(b, &xi, radius, 256)?));
        let ray = forward_ray(
            &metric,
            b,
            &xi,
            TailWindow::default().ray_radius(radius),
            &quiet,
        )?;
        figure.push(f_path(&ray.path));
    }
    write_svg(&ctx.artifact("widths.svg"), &figure)?;
    Ok(())
}

fn periodic(config: &ExperimentConfig, ctx: &mut Context) -> Result<(), LabError> {
    let metric = build_metric(&config.metric)?;
    let opts = config.numerics.engine_options();
    let gens = generators()?;
    let word = GroupWord::parse(&config.geometry.word)?;
    let pm = shortest_closed_geodesic(&metric, gens, &word, &opts)?;
    let ell = pm.translation_length();
    let gap = pm.competitor_gap(&metric, 20, config.seed)?;
    let base = config.geometry.points[0].to_point()?;
    let xi = pm.axis.xi_attract;
    let quiet = quiet_options(&opts);
    let mut approach = Vec::new();
    let mut figure = vec![
        Element::Octagon {
            gens: Box::new(gens.clone()),
            translates: false,
        },
        Element::Geodesic {
            geodesic: pm.axis.axis,
            style: Style::g_object(),
        },
    ];
    let radii = &config.geometry.radii;
    for &radius in radii {
        let window = TailWindow::default();
        let ray = forward_ray(&metric, &base, &xi, window.ray_radius(radius), &quiet)?;
        approach.push(periodic_approach(
            &metric,
            &ray,
            &pm,
            window.bounds(radius),
            64,
        )?);
        if Some(&radius) == radii.last() {
            figure.push(g_path(g_ray(&base, &xi, radius, 256)?));
            figure.push(f_path(&ray.path));
        }
    }
    let reach = radii.iter().copied().fold(0.0, f64::max);
    figure.push(f_path(&orbit_path(&metric, &pm, reach)?));
    let r = &mut ctx.record;
    r.scalar("period", pm.period);
    r.scalar("translation_length", ell);
    r.scalar("endpoint_residual", pm.endpoint_residual);
    r.scalar("competitor_gap", gap);
    for (&radius, d) in radii.iter().zip(&approach) {
        r.scalar(radius_key("orbit_distance", radius), *d);
    }
    r.check(
        "converged",
        pm.path.flags().converged,
        format!("refined to N = {}", pm.path.flags().refined_to),
    );
    r.check(
        "closed",
        pm.endpoint_residual < 1e-8,
        format!("endpoint residual {:e}", pm.endpoint_residual),
    );
    r.check(
        "competitors",
        gap >= -1e-9,
        format!("competitor gap {gap:e}"),
    );
    if config.metric.kind != MetricFamily::Conformal {
        let err = (pm.period - ell).abs();
        r.check("period", err < 1e-5, format!("|period - l| = {err:e}"));
    }
    r.check(
        "approach",
        nonincreasing(&approach),
        format!("orbit distances {approach:?}"),
    );
    write_path(&ctx.artifact("periodic.csv"), &metric, &pm.path)?;
    write_svg(&ctx.artifact("periodic.svg"), &figure)?;
    Ok(())
}

/// Output directory of a config's run, for callers that want the files.
pub fn run_dir(config: &ExperimentConfig) -> PathBuf {
    let hash = crate::record::config_hash(config);
    Path::new(&config.output.dir).join("runs").join(&hash[..16])
}

/// Options for experiments that only need a distance, not a certified path.
pub fn quiet_options(opts: &EngineOptions) -> EngineOptions {
    EngineOptions {
        nested_check: false,
        ..opts.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PointSpec;

    #[test]
    fn plateau_rule() {
        assert!(plateau_ok(&[0.1, 0.2, 0.2, 0.205]).0);
        assert!(!plateau_ok(&[0.1, 0.2, 0.3]).0);
        assert!(plateau_ok(&[1e-9, 3e-9]).0);
        assert!(!plateau_ok(&[0.1, f64::NAN]).0);
    }

    #[test]
    fn monotone_rule() {
        assert!(nonincreasing(&[3.0, 2.0, 2.0]));
        assert!(!nonincreasing(&[1.0, 1.5]));
        assert!(nonincreasing(&[]));
    }

    #[test]
    fn random_geodesics_pass_near_the_origin() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let geo = random_geodesic(&mut rng, 1.0).unwrap();
            let (_, d) = minrays::hyperbolic::project_to_geodesic(&DiscPoint::origin(), &geo);
            assert!(d <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn screened_directions_are_not_fixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let xi = non_fixed_direction(&mut rng).unwrap();
        assert!(generators()
            .unwrap()
            .is_fixed_direction(&xi, 6, 1e-4)
            .unwrap()
            .is_none());
    }

    #[test]
    fn one_sided_gap_is_recorded_at_fixed_directions() {
        let dir = tempfile::tempdir().unwrap();
        let gens = generators().unwrap();
        let axis = gens.axis_of_word(&GroupWord::parse("a").unwrap()).unwrap();
        let gap = |radii: Vec<f64>| {
            let mut config = ExperimentConfig::builtin(ExperimentKind::Horofunction, 3);
            config.metric.kind = MetricFamily::Hyperbolic;
            config.geometry.directions = vec![axis.xi_attract.angle() / TAU];
            config.geometry.radii = radii;
            config.numerics.grid_radius = 1.0;
            config.numerics.grid_spacing = 0.5;
            config.output.dir = dir.path().to_path_buf();
            let r = run_uncached(&config).unwrap();
            assert!(r.passed(), "{:?}", r.assertions);
            assert_eq!(r.summary["fixed_direction"], 1.0);
            r.summary["one_sided_gap"]
        };
        // Hyperbolic horofunctions do not depend on the side of approach: the
        // gap is the O(1/r) lag of the rotated approach points.
        let (near, far) = (gap(vec![6.0, 8.0, 10.0]), gap(vec![16.0, 20.0, 24.0]));
        assert!(far < 0.6 * near, "{near} -> {far}");
    }

    #[test]
    fn hyperbolic_geodesic_record() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = ExperimentConfig::builtin(ExperimentKind::Geodesic, 2);
        config.metric.kind = MetricFamily::Hyperbolic;
        config.geometry.points = vec![
            PointSpec {
                theta: 0.2,
                rho: 2.0,
            },
            PointSpec {
                theta: 0.7,
                rho: 3.0,
            },
        ];
        config.output.dir = dir.path().to_path_buf();
        let r = run_uncached(&config).unwrap();
        assert!(r.passed(), "{:?}", r.assertions);
        assert!(r.summary["deviation"] < 1e-9);
        assert_eq!(r.outputs.len(), 2);
        assert!(run_dir(&config).join("path.csv").is_file());
    }

    #[test]
    fn randers_periodic_record() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = ExperimentConfig::builtin(ExperimentKind::Periodic, 2);
        config.metric.kind = MetricFamily::Randers;
        config.metric.level = 4;
        config.output.dir = dir.path().to_path_buf();
        let r = run_uncached(&config).unwrap();
        assert!(r.passed(), "{:?}", r.assertions);
        assert!((r.summary["period"] - r.summary["translation_length"]).abs() < 1e-5);
    }

    #[test]
    fn oversized_epsilon_is_a_positivity_error() {
        let mut spec = ExperimentConfig::builtin(ExperimentKind::Group, 1).metric;
        spec.kind = MetricFamily::Randers;
        spec.level = 4;
        spec.epsilon = 50.0;
        assert!(matches!(
            build_metric(&spec),
            Err(LabError::Core(minrays::Error::Positivity { .. }))
        ));
    }
}
