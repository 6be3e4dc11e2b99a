//! The verification suite: twelve acceptance criteria plus a positivity
//! preflight on the configured metric.
//!
//! Every criterion draws its random instances from `seed + id`, so a suite
//! run is a pure function of the config. Wall-clock times are reported but
//! kept out of result records.

use std::fmt::Write as _;
use std::time::Instant;

use minrays::asymptotic::{
    busemann_of_ray, calibration_residual, compare_horofunctions, crossing_trial, gauge_report,
    horofunction, hyperbolic_horofunction, lipschitz_audit, morse_deviation, periodic_approach,
    width_wplus, ApproachSpec, CrossingTrial, GridSpec, TailWindow,
};
use minrays::engine::{
    dist_f, distance_to_path, forward_ray, minimal_geodesic, minimize_segment,
    shortest_closed_geodesic, EngineOptions, PolylinePath,
};
use minrays::hyperbolic::{dist_g, project_to_geodesic, FermiFrame};
use minrays::{BoundaryPoint, DiscPoint, FinslerMetric, GeneratorSet, GroupWord, InvariantField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ExperimentConfig, ExperimentKind, Level, MetricFamily, MetricSpec};
use crate::experiments::{
    build_metric, generators, invariance_residual, invariant_field, non_fixed_direction,
    nonincreasing, plateau_ok, quiet_options, random_geodesic, random_point, sup_error, Context,
};
use crate::export::write_table;
use crate::record::Cache;
use crate::LabError;

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    /// 0 is the positivity preflight; 1 to 12 are the acceptance criteria.
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
    /// Deterministic summary values.
    pub scalars: Vec<(String, f64)>,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {:<28} {:>8.2}s  {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.seconds,
            self.detail
        )
    }
}

/// Problem sizes per level. Full uses the stated counts.
#[derive(Debug, Clone, Copy)]
struct Sizes {
    segment_pairs: usize,
    randers_pairs: usize,
    morse_geodesics: usize,
    closed_form_grid: GridSpec,
    gauge_rays: usize,
    crossing_trials: usize,
    width_pairs: usize,
}

impl Sizes {
    fn for_level(level: Level) -> Self {
        match level {
            Level::Full => Self {
                segment_pairs: 20,
                randers_pairs: 50,
                morse_geodesics: 10,
                closed_form_grid: GridSpec::default(),
                gauge_rays: 5,
                crossing_trials: 10,
                width_pairs: 5,
            },
            Level::Quick => Self {
                segment_pairs: 5,
                randers_pairs: 10,
                morse_geodesics: 2,
                closed_form_grid: GridSpec {
                    radius: 2.0,
                    spacing: 0.25,
                },
                gauge_rays: 2,
                crossing_trials: 3,
                width_pairs: 2,
            },
        }
    }
}

/// Grid for conformal horofunctions, where each point costs a few d_F
/// evaluations of about 10 to 50 ms.
const SMALL_GRID: GridSpec = GridSpec {
    radius: 1.5,
    spacing: 0.5,
};

const RADII: [f64; 3] = [8.0, 12.0, 16.0];

fn conformal_spec() -> MetricSpec {
    MetricSpec {
        kind: MetricFamily::Conformal,
        amplitude: 0.5,
        shape: 1.0,
        level: 6,
        epsilon: 0.0,
    }
}

fn randers_spec() -> MetricSpec {
    MetricSpec {
        kind: MetricFamily::Randers,
        amplitude: 0.5,
        shape: 1.0,
        level: 4,
        epsilon: 0.3,
    }
}

fn engine() -> EngineOptions {
    quiet_options(&EngineOptions::default())
}

/// What a criterion body reports: pass, detail, scalars.
type Outcome = (bool, String, Vec<(String, f64)>);

struct Suite {
    seed: u64,
    sizes: Sizes,
}

impl Suite {
    fn rng(&self, id: u8) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(id as u64))
    }
}

/// Runs the preflight and all twelve criteria. Errors inside a criterion
/// fail that criterion only.
pub fn verify_all(config: &ExperimentConfig) -> Vec<CriterionResult> {
    let suite = Suite {
        seed: config.seed,
        sizes: Sizes::for_level(config.level),
    };
    let mut out = vec![timed(0, "positivity preflight", None, || {
        preflight(&config.metric)
    })];
    out.push(timed(1, "group certificate", Some(1.0), || {
        group_certificate(&suite)
    }));
    out.push(timed(2, "hyperbolic baseline", Some(60.0), || {
        hyperbolic_baseline(&suite)
    }));
    out.push(timed(3, "Randers master oracle", Some(300.0), || {
        randers_oracle(&suite)
    }));
    out.push(timed(4, "Morse plateau", Some(900.0), || {
        morse_plateau(&suite)
    }));
    out.push(timed(5, "horofunction closed forms", Some(600.0), || {
        closed_forms(&suite)
    }));
    out.push(timed(6, "horofunction axioms", None, || {
        horofunction_axioms(&suite)
    }));
    out.push(timed(7, "gauge monotonicity", None, || gauge(&suite)));
    out.push(timed(8, "uniqueness at non-fixed xi", None, || {
        uniqueness(&suite)
    }));
    out.push(timed(9, "crossing exclusion", None, || crossings(&suite)));
    out.push(timed(10, "periodic regime", None, || {
        periodic_regime(&suite)
    }));
    out.push(timed(11, "width trend", None, || width_trend(&suite)));
    out.push(timed(12, "determinism and cache", None, determinism));
    out
}

fn timed(
    id: u8,
    name: &'static str,
    limit: Option<f64>,
    body: impl FnOnce() -> Result<Outcome, LabError>,
) -> CriterionResult {
    let start = Instant::now();
    let result = body();
    let seconds = start.elapsed().as_secs_f64();
    let (mut pass, mut detail, scalars) = match result {
        Ok(o) => o,
        Err(e) => (false, format!("error: {e}"), Vec::new()),
    };
    if let Some(limit) = limit {
        if seconds > limit {
            pass = false;
            let _ = write!(detail, "; runtime {seconds:.1} s exceeds {limit} s");
        }
    }
    CriterionResult {
        id,
        name,
        pass,
        detail,
        seconds,
        scalars,
    }
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

fn preflight(spec: &MetricSpec) -> Result<Outcome, LabError> {
    match build_metric(spec) {
        Ok(metric) => {
            let value = metric.positivity_margin();
            Ok((
                true,
                format!(
                    "{:?} metric, epsilon * sup |df|_g = {value:.4} < 1",
                    spec.kind
                ),
                vec![("epsilon_grad_sup".into(), value)],
            ))
        }
        Err(LabError::Core(e @ minrays::Error::Positivity { .. })) => Ok((
            false,
            format!(
                "metric rejected: {e} (epsilon {} is too large for this field)",
                spec.epsilon
            ),
            Vec::new(),
        )),
        Err(e) => Err(e),
    }
}

fn group_certificate(suite: &Suite) -> Result<Outcome, LabError> {
    let gens = GeneratorSet::build_octagon_group()?;
    let residual = gens.relator_residual();
    let hyperbolic = gens.generators().iter().all(|m| m.is_hyperbolic());
    let field = InvariantField::new(&gens, 0.5, 1.0, 4)?;
    let invariance = invariance_residual(&field, suite.seed, 200)?;
    let bound = field.tail().max(1e-6);
    let pass = residual < 1e-9 && hyperbolic && invariance < bound;
    Ok((
        pass,
        format!("relator {residual:.1e}, hyperbolic {hyperbolic}, invariance {invariance:.1e} < {bound:.1e}"),
        vec![("relator_residual".into(), residual), ("invariance_residual".into(), invariance)],
    ))
}

/// Two-sided Hausdorff distance between a path and the g-segment joining
/// its endpoints.
fn hausdorff_to_segment(metric: &FinslerMetric, path: &PolylinePath) -> Result<f64, LabError> {
    let (x, y) = (*path.first(), *path.last());
    let exact = PolylinePath::from_vertices(metric, vec![x, y])?;
    let (frame, len) = FermiFrame::segment(&x, &y)?;
    let samples = (0..=512)
        .map(|k| frame.disc_point(len * k as f64 / 512.0, 0.0))
        .collect::<Result<Vec<_>, _>>()?;
    let a = max_of(distance_to_path(&exact, path.vertices())?);
    let b = max_of(distance_to_path(path, &samples)?);
    Ok(a.max(b))
}

fn hyperbolic_baseline(suite: &Suite) -> Result<Outcome, LabError> {
    let metric = FinslerMetric::hyperbolic();
    let opts = EngineOptions {
        n_initial: 512,
        n_max: 1024,
        ..engine()
    };
    let mut rng = suite.rng(2);
    let (mut worst_h, mut worst_l) = (0.0f64, 0.0f64);
    let mut finest = 0;
    for _ in 0..suite.sizes.segment_pairs {
        let x = random_point(&mut rng, 5.0)?;
        let y = random_point(&mut rng, 5.0)?;
        let path = minimize_segment(&metric, &x, &y, &opts)?;
        worst_l = worst_l.max((path.f_length() - dist_g(&x, &y)).abs());
        worst_h = worst_h.max(hausdorff_to_segment(&metric, &path)?);
        finest = finest.max(path.flags().refined_to);
    }
    Ok((
        worst_h < 1e-4 && worst_l < 1e-5,
        format!(
            "{} pairs from N = 512 (finest {finest}): Hausdorff {worst_h:.1e}, length error {worst_l:.1e}",
            suite.sizes.segment_pairs
        ),
        vec![("hausdorff".into(), worst_h), ("length_error".into(), worst_l)],
    ))
}

fn randers_oracle(suite: &Suite) -> Result<Outcome, LabError> {
    let spec = randers_spec();
    let metric = build_metric(&spec)?;
    let field = invariant_field(&spec)?;
    let opts = engine();
    let mut rng = suite.rng(3);
    let (mut worst, mut worst_sym) = (0.0f64, 0.0f64);
    for _ in 0..suite.sizes.randers_pairs {
        let x = random_point(&mut rng, 4.0)?;
        let y = random_point(&mut rng, 4.0)?;
        let dg = dist_g(&x, &y);
        let dxy = dist_f(&metric, &x, &y, &opts)?;
        let dyx = dist_f(&metric, &y, &x, &opts)?;
        let oracle = dg + spec.epsilon * (field.value(&y)? - field.value(&x)?);
        worst = worst.max((dxy - oracle).abs());
        worst_sym = worst_sym.max((dxy + dyx - 2.0 * dg).abs());
    }
    Ok((
        worst < 1e-4 && worst_sym < 2e-4,
        format!(
            "{} pairs: master {worst:.1e}, asymmetry {worst_sym:.1e}",
            suite.sizes.randers_pairs
        ),
        vec![
            ("master_error".into(), worst),
            ("asymmetry_error".into(), worst_sym),
        ],
    ))
}

fn morse_plateau(suite: &Suite) -> Result<Outcome, LabError> {
    let metric = build_metric(&conformal_spec())?;
    let opts = engine();
    let radii = [4.0, 8.0, 12.0, 16.0];
    let mut rng = suite.rng(4);
    let mut dhat = [0.0f64; 4];
    for _ in 0..suite.sizes.morse_geodesics {
        let geo = random_geodesic(&mut rng, 1.0)?;
        for (k, &r) in radii.iter().enumerate() {
            let m = minimal_geodesic(&metric, &geo, r, &opts)?;
            dhat[k] = dhat[k].max(morse_deviation(&m.path)?.max_deviation);
        }
    }
    let (pass, growth) = plateau_ok(&dhat);
    let mut scalars: Vec<(String, f64)> = radii
        .iter()
        .zip(&dhat)
        .map(|(r, d)| (format!("dhat_R{r}"), *d))
        .collect();
    scalars.push(("growth".into(), growth));
    Ok((
        pass,
        format!(
            "{} geodesics: D = {:.4} {:.4} {:.4} {:.4}, growth 12 -> 16 {:+.2}%",
            suite.sizes.morse_geodesics,
            dhat[0],
            dhat[1],
            dhat[2],
            dhat[3],
            100.0 * growth
        ),
        scalars,
    ))
}

fn closed_forms(suite: &Suite) -> Result<Outcome, LabError> {
    let mut rng = suite.rng(5);
    let opts = engine();
    let grid = suite.sizes.closed_form_grid;
    let xi = BoundaryPoint::new(rng.random_range(0.0..std::f64::consts::TAU));
    let u = horofunction(
        &FinslerMetric::hyperbolic(),
        &xi,
        &ApproachSpec::default_ray(),
        grid,
        &opts,
    )?;
    let e_hyp = sup_error(&u, |p| Ok(hyperbolic_horofunction(&xi, p)))?;

    let spec = randers_spec();
    let field = invariant_field(&spec)?;
    let f0 = field.value(&DiscPoint::origin())?;
    let u = horofunction(
        &build_metric(&spec)?,
        &xi,
        &ApproachSpec::default_ray(),
        grid,
        &opts,
    )?;
    let e_rand = sup_error(&u, |p| {
        Ok(hyperbolic_horofunction(&xi, p) + spec.epsilon * (field.value(p)? - f0))
    })?;
    Ok((
        e_hyp < 2e-3 && e_rand < 2e-3,
        format!(
            "{} grid points: hyperbolic {e_hyp:.1e}, Randers {e_rand:.1e}",
            u.grid.len()
        ),
        vec![
            ("hyperbolic_error".into(), e_hyp),
            ("randers_error".into(), e_rand),
        ],
    ))
}

fn horofunction_axioms(suite: &Suite) -> Result<Outcome, LabError> {
    let mut rng = suite.rng(6);
    let opts = engine();
    let xi = non_fixed_direction(&mut rng)?;
    let mut violations = 0;
    let mut excess: f64 = f64::NEG_INFINITY;
    let mut normalized = true;
    for spec in [randers_spec(), conformal_spec()] {
        let metric = build_metric(&spec)?;
        let c_f = metric.estimate_c_f(32)?.c_f;
        let u = horofunction(
            &metric,
            &xi,
            &ApproachSpec::default_ray(),
            SMALL_GRID,
            &opts,
        )?;
        normalized &= u.value_at_origin() == 0.0;
        let audit = lipschitz_audit(&metric, &u, c_f, 5e-4, &opts)?;
        violations += audit.violations + audit.g_violations;
        excess = excess.max(audit.max_excess);
    }
    let metric = build_metric(&conformal_spec())?;
    let base = random_point(&mut rng, 1.0)?;
    let ray = forward_ray(&metric, &base, &xi, 16.0, &opts)?;
    let total = ray.path.flags().extrapolated_length;
    let u = busemann_of_ray(&metric, &ray, &[0.75 * total, total], SMALL_GRID, &opts)?;
    normalized &= u.value_at_origin() == 0.0;
    let calibration = calibration_residual(&metric, &u, &ray, 0.5 * total, 8, &opts)?;
    Ok((
        violations == 0 && calibration < 2e-3 && normalized,
        format!(
            "Lipschitz violations {violations} (max excess {excess:.1e}), calibration {calibration:.1e}, u(o) = 0: {normalized}"
        ),
        vec![
            ("lipschitz_violations".into(), violations as f64),
            ("calibration".into(), calibration),
        ],
    ))
}

fn gauge(suite: &Suite) -> Result<Outcome, LabError> {
    let mut rng = suite.rng(7);
    let opts = engine();
    let metric = build_metric(&conformal_spec())?;
    let c_f = metric.estimate_c_f(16)?.c_f;
    let xi = non_fixed_direction(&mut rng)?;
    let reference = forward_ray(&metric, &DiscPoint::origin(), &xi, 16.0, &opts)?;
    let total = reference.path.flags().extrapolated_length;
    let u = busemann_of_ray(&metric, &reference, &[total], SMALL_GRID, &opts)?;
    let (mut decrease, mut overshoot) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut pass = true;
    for _ in 0..suite.sizes.gauge_rays {
        let base = random_point(&mut rng, 2.0)?;
        let ray = forward_ray(&metric, &base, &xi, 16.0, &opts)?;
        let g = gauge_report(&metric, &u, &reference, &ray, c_f, 8.0, 16, &opts)?;
        pass &= g.max_decrease <= 1e-4 && g.h_max <= g.bound + 1e-4;
        decrease = decrease.max(g.max_decrease);
        overshoot = overshoot.max(g.h_max - g.bound);
    }
    Ok((
        pass,
        format!(
            "{} rays: largest decrease {decrease:.1e}, largest h - bound {overshoot:.2}",
            suite.sizes.gauge_rays
        ),
        vec![
            ("max_decrease".into(), decrease),
            ("bound_margin".into(), -overshoot),
        ],
    ))
}

fn uniqueness(suite: &Suite) -> Result<Outcome, LabError> {
    let mut rng = suite.rng(8);
    let opts = engine();
    let metric = build_metric(&conformal_spec())?;
    let xi = non_fixed_direction(&mut rng)?;
    let other = DiscPoint::new(rng.random_range(0.0..std::f64::consts::TAU), 2.0)?;
    let mut gaps = Vec::new();
    for r in RADII {
        let a = horofunction(
            &metric,
            &xi,
            &ApproachSpec::RayFrom {
                base: DiscPoint::origin(),
                radii: vec![r],
            },
            SMALL_GRID,
            &opts,
        )?;
        let b = horofunction(
            &metric,
            &xi,
            &ApproachSpec::RayFrom {
                base: other,
                radii: vec![r],
            },
            SMALL_GRID,
            &opts,
        )?;
        gaps.push(compare_horofunctions(&a, &b)?);
    }
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    let last = gaps[gaps.len() - 1];
    Ok((
        decreasing && last < 5e-3,
        format!(
            "gaps at R = 8, 12, 16: {:.1e} {:.1e} {:.1e}",
            gaps[0], gaps[1], gaps[2]
        ),
        RADII
            .iter()
            .zip(&gaps)
            .map(|(r, g)| (format!("gap_R{r}"), *g))
            .collect(),
    ))
}

fn crossings(suite: &Suite) -> Result<Outcome, LabError> {
    let mut rng = suite.rng(9);
    let opts = engine();
    let metric = build_metric(&conformal_spec())?;
    let (mut rejected, mut collapsed, mut distinct, mut crossed) = (0, 0, 0, 0);
    for k in 0..suite.sizes.crossing_trials {
        let x = random_point(&mut rng, 1.5)?;
        let xi = non_fixed_direction(&mut rng)?;
        let offset = if k % 2 == 0 { 1.0 } else { -1.0 };
        match crossing_trial(&metric, &x, &xi, 12.0, offset, 0.1, 1e-6, &opts)? {
            CrossingTrial::Rejected { .. } => rejected += 1,
            CrossingTrial::Collapsed => collapsed += 1,
            CrossingTrial::Distinct { crossings, .. } => {
                distinct += 1;
                crossed += usize::from(crossings > 0);
            }
        }
    }
    Ok((
        crossed == 0,
        format!(
            "{rejected} rejected, {collapsed} collapsed, {distinct} distinct ({crossed} crossing)"
        ),
        vec![("crossing_pairs".into(), crossed as f64)],
    ))
}

fn periodic_regime(suite: &Suite) -> Result<Outcome, LabError> {
    let _ = suite;
    let opts = engine();
    let gens = generators()?;
    let word = GroupWord::parse("a")?;
    let base = DiscPoint::new(2.5, 1.5)?;
    let mut pass = true;
    let mut detail = String::new();
    let mut scalars = Vec::new();
    for (name, spec) in [
        (
            "hyperbolic",
            MetricSpec {
                kind: MetricFamily::Hyperbolic,
                ..conformal_spec()
            },
        ),
        ("Randers", randers_spec()),
        ("conformal", conformal_spec()),
    ] {
        let metric = build_metric(&spec)?;
        let pm = shortest_closed_geodesic(&metric, gens, &word, &opts)?;
        let converged = pm.path.flags().converged;
        let err = (pm.period - pm.translation_length()).abs();
        let off_axis = project_to_geodesic(&base, &pm.axis.axis).1;
        let d = RADII
            .iter()
            .map(|&r| {
                let w = TailWindow::default();
                let ray = forward_ray(&metric, &base, &pm.axis.xi_attract, w.ray_radius(r), &opts)?;
                Ok(periodic_approach(&metric, &ray, &pm, w.bounds(r), 64)?)
            })
            .collect::<Result<Vec<f64>, LabError>>()?;
        let period_ok = spec.kind == MetricFamily::Conformal || err < 1e-5;
        pass &= converged && period_ok && off_axis > 0.5 && nonincreasing(&d);
        let _ = write!(
            detail,
            "{name}: period {:.6} (l = {:.6}), orbit distance {:.1e} {:.1e} {:.1e}; ",
            pm.period,
            pm.translation_length(),
            d[0],
            d[1],
            d[2]
        );
        scalars.push((format!("{name}_period"), pm.period));
        scalars.extend(
            RADII
                .iter()
                .zip(&d)
                .map(|(r, v)| (format!("{name}_orbit_R{r}"), *v)),
        );
    }
    Ok((pass, detail.trim_end_matches("; ").to_string(), scalars))
}

fn width_trend(suite: &Suite) -> Result<Outcome, LabError> {
    let mut rng = suite.rng(11);
    let opts = engine();
    let metric = build_metric(&conformal_spec())?;
    let gens = generators()?;
    let xi = non_fixed_direction(&mut rng)?;
    let mut pass = true;
    let mut scalars = Vec::new();
    let mut detail = String::new();
    for k in 0..suite.sizes.width_pairs {
        let pair = [random_point(&mut rng, 2.0)?, random_point(&mut rng, 2.0)?];
        let w = RADII
            .iter()
            .map(|&r| {
                Ok(
                    width_wplus(&metric, gens, &xi, &pair, r, TailWindow::default(), &opts)?
                        .wplus_lower,
                )
            })
            .collect::<Result<Vec<f64>, LabError>>()?;
        pass &= nonincreasing(&w);
        let _ = write!(detail, "[{:.1e} {:.1e} {:.1e}] ", w[0], w[1], w[2]);
        scalars.extend(
            RADII
                .iter()
                .zip(&w)
                .map(|(r, v)| (format!("pair{k}_R{r}"), *v)),
        );
    }
    Ok((
        pass,
        format!("w+ over R = 8, 12, 16: {}", detail.trim_end()),
        scalars,
    ))
}

/// Cheap experiment configs covering every metric family.
fn determinism_configs() -> Vec<ExperimentConfig> {
    let mut out = Vec::new();
    let mut group = ExperimentConfig::builtin(ExperimentKind::Group, 7);
    group.metric.level = 4;
    out.push(group);
    out.push(ExperimentConfig::builtin(ExperimentKind::Geodesic, 7));
    let mut periodic = ExperimentConfig::builtin(ExperimentKind::Periodic, 7);
    periodic.metric = randers_spec();
    out.push(periodic);
    let mut horo = ExperimentConfig::builtin(ExperimentKind::Horofunction, 7);
    horo.metric.kind = MetricFamily::Hyperbolic;
    out.push(horo);
    out
}

fn determinism() -> Result<Outcome, LabError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| LabError::Config(e.to_string()))?;
    pool.install(|| {
        let scratch = std::env::temp_dir().join(format!("minrays-verify-{}", std::process::id()));
        let result = determinism_in(&scratch);
        let _ = std::fs::remove_dir_all(&scratch);
        result
    })
}

fn determinism_in(scratch: &std::path::Path) -> Result<Outcome, LabError> {
    let mut identical = 0;
    let mut cache_ok = 0;
    let configs = determinism_configs();
    for (k, config) in configs.iter().enumerate() {
        let mut a = config.clone();
        a.output.dir = scratch.join(format!("a{k}"));
        let mut b = config.clone();
        b.output.dir = scratch.join(format!("b{k}"));
        let first = crate::experiments::run_uncached(&a)?;
        let second = crate::experiments::run_uncached(&b)?;
        identical += usize::from(first.to_text() == second.to_text());

        let cached = crate::experiments::run(&a)?;
        let hit = Cache::new(&a.output.dir).load(&first.config_hash)?;
        let again = crate::experiments::run(&a)?;
        cache_ok += usize::from(hit.as_ref() == Some(&cached) && again == cached && again == first);
    }
    let n = configs.len();
    Ok((
        identical == n && cache_ok == n,
        format!(
            "{identical}/{n} records byte-identical, {cache_ok}/{n} cache hits equal recomputation"
        ),
        vec![
            ("identical".into(), identical as f64),
            ("cache_equal".into(), cache_ok as f64),
        ],
    ))
}

/// Fills a verify record: one assertion per criterion, deterministic
/// scalars, and the plateau and width-trend tables.
pub(crate) fn record_into(config: &ExperimentConfig, ctx: &mut Context) -> Result<(), LabError> {
    let results = verify_all(config);
    for c in &results {
        for (k, v) in &c.scalars {
            ctx.record.scalar(format!("c{:02}.{k}", c.id), *v);
        }
        ctx.record
            .check(format!("{:02} {}", c.id, c.name), c.pass, c.detail.clone());
    }
    let table = |prefix: &str| -> Vec<Vec<f64>> {
        results
            .iter()
            .flat_map(|c| c.scalars.iter().map(move |s| (c.id, s)))
            .filter(|(_, (k, _))| k.starts_with(prefix))
            .map(|(id, (k, v))| {
                let r: f64 = k
                    .rsplit("_R")
                    .next()
                    .and_then(|s| s.parse().ok())
                    .unwrap_or(f64::NAN);
                vec![id as f64, r, *v]
            })
            .collect()
    };
    write_table(
        &ctx.artifact("morse_plateau.csv"),
        &["criterion", "R", "dhat"],
        &table("dhat_R"),
    )?;
    write_table(
        &ctx.artifact("width_trend.csv"),
        &["criterion", "R", "wplus"],
        &table("pair"),
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corrupted_metric_fails_the_preflight() {
        let mut spec = randers_spec();
        spec.epsilon = 50.0;
        let r = timed(0, "positivity preflight", None, || preflight(&spec));
        assert!(!r.pass);
        assert!(r.detail.contains("positivity"), "{}", r.detail);
        assert!(r.line().starts_with("[FAIL]"));
        assert!(
            timed(0, "positivity preflight", None, || preflight(
                &randers_spec()
            ))
            .pass
        );
    }

    #[test]
    fn errors_and_overruns_fail_a_criterion() {
        let r = timed(5, "x", None, || Err(LabError::Config("boom".into())));
        assert!(!r.pass && r.detail.contains("boom"));
        let r = timed(5, "x", Some(0.0), || {
            std::thread::sleep(std::time::Duration::from_millis(5));
            Ok((true, "ok".into(), Vec::new()))
        });
        assert!(!r.pass && r.detail.contains("exceeds"));
    }

    #[test]
    fn group_certificate_passes() {
        let suite = Suite {
            seed: 1,
            sizes: Sizes::for_level(Level::Quick),
        };
        let (pass, detail, _) = group_certificate(&suite).unwrap();
        assert!(pass, "{detail}");
    }

    #[test]
    fn determinism_criterion_passes() {
        let (pass, detail, _) = determinism().unwrap();
        assert!(pass, "{detail}");
    }
}
