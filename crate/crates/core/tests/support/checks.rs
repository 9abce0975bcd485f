//! Property checks shared by the integration tests and the acceptance
//! runner. Each returns a measurement rather than asserting.

use std::collections::BTreeSet;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use getco::case_io::{parse_case, WeatherSeries};
use getco::dlr::{build_rating_series, steady_state_current, ConductorParams, ConductorSet, RatingConditions, RatingSeries};
use getco::formulation::{build, fix_topology, nominal_assignment, BinaryVar, End, FormulationConfig, Tag, TopologyMode};
use getco::network::LineId;
use getco::relax::{mccormick_envelope, split_term, Axis, BilinearTerm};
use getco::solver::{run, SolverConfig};

use super::oracle::{dc_opf, plain_network, Settings, Topology};

pub const TRIANGLE: &str = include_str!("../fixtures/triangle.m");

/// Hand evaluation in `fixtures/ieee738_hand.py`.
pub const DRAKE_FIXTURE_AMPS: f64 = 1609.0163;

pub fn drake_fixture_current() -> f64 {
    let w = RatingConditions { ambient_temp: 25.0, wind_speed: 2.0, solar: false, ..RatingConditions::slr_reference() };
    steady_state_current(&ConductorParams::drake(), &w).unwrap()
}

pub fn round_sig(v: f64, digits: i32) -> f64 {
    let scale = 10f64.powi(digits - 1 - v.abs().log10().floor() as i32);
    (v * scale).round() / scale
}

/// Forward differences over a 20×20 grid of ambient temperature and wind
/// speed, with and without sun. Returns the points where ampacity falls
/// with wind or rises with temperature.
pub fn dlr_grid_violations() -> Vec<(&'static str, bool, f64, f64)> {
    let c = ConductorParams::drake();
    let temps: Vec<f64> = (0..20).map(|k| -10.0 + 2.8 * k as f64).collect();
    let winds: Vec<f64> = (0..20).map(|k| 0.025 * (k * k) as f64 + 0.1 * k as f64).collect();
    let (dt, dv) = (0.5, 0.05);
    let mut out = Vec::new();
    for solar in [false, true] {
        let at = |t: f64, v: f64| {
            let w = RatingConditions { solar, ..RatingConditions::slr_reference() }.with_weather(t, v, 13.0);
            steady_state_current(&c, &w).unwrap()
        };
        for &t in &temps {
            for &v in &winds {
                let base = at(t, v);
                if at(t, v + dv) < base {
                    out.push(("wind", solar, t, v));
                }
                if at(t + dt, v) > base {
                    out.push(("temp", solar, t, v));
                }
            }
        }
    }
    out
}

fn random_box(rng: &mut ChaCha8Rng) -> BilinearTerm {
    let x0 = rng.random_range(-2.0..2.0);
    let y0 = rng.random_range(-1.5..1.5);
    BilinearTerm {
        line: LineId(1),
        x_bounds: (x0, x0 + rng.random_range(1e-3..3.0)),
        y_bounds: (y0, y0 + rng.random_range(1e-3..2.0)),
        aux_var: 0,
    }
}

/// Random in-box products cut off by their own envelope.
pub fn envelope_cutoffs(samples: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .filter(|_| {
            let t = random_box(&mut rng);
            let x = rng.random_range(t.x_bounds.0..=t.x_bounds.1);
            let y = rng.random_range(t.y_bounds.0..=t.y_bounds.1);
            !mccormick_envelope(&t).unwrap().iter().all(|c| c.holds(x, y, x * y, 1e-12))
        })
        .count()
}

/// Largest distance between the admitted interval and the product on the
/// four box edges.
pub fn envelope_edge_error(samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let t = random_box(&mut rng);
        let s = rng.random_range(0.0..=1.0);
        let x = t.x_bounds.0 + s * t.width(Axis::X);
        let y = t.y_bounds.0 + s * t.width(Axis::Y);
        for (px, py) in [(t.x_bounds.0, y), (t.x_bounds.1, y), (x, t.y_bounds.0), (x, t.y_bounds.1)] {
            let (lo, hi) = t.admitted(px, py).unwrap();
            worst = worst.max((lo - px * py).abs()).max((hi - px * py).abs());
        }
    }
    worst
}

/// Largest distance from the product to either side of the admitted
/// interval, sampled on an odd grid so the box centre is included.
pub fn sampled_gap(t: &BilinearTerm) -> f64 {
    let n = 41;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let x = t.x_bounds.0 + t.width(Axis::X) * i as f64 / (n - 1) as f64;
            let y = t.y_bounds.0 + t.width(Axis::Y) * j as f64 / (n - 1) as f64;
            let (lo, hi) = t.admitted(x, y).unwrap();
            worst = worst.max(x * y - lo).max(hi - x * y);
        }
    }
    worst
}

/// Largest relative deviation of the sampled gap from `Δx·Δy/4` on random
/// boxes and on both midpoint bisections of each (where it must halve).
pub fn bisection_gap_error(boxes: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..boxes {
        let t = random_box(&mut rng);
        let closed = t.width(Axis::X) * t.width(Axis::Y) / 4.0;
        worst = worst.max((sampled_gap(&t) - closed).abs() / closed);
        for axis in [Axis::X, Axis::Y] {
            let (lo, hi) = if axis == Axis::X { t.x_bounds } else { t.y_bounds };
            let (a, b) = split_term(&t, axis, 0.5 * (lo + hi)).unwrap();
            for child in [a, b] {
                worst = worst.max((sampled_gap(&child) - closed / 2.0).abs() / closed);
            }
        }
    }
    worst
}

fn emitted(mode: TopologyMode) -> BTreeSet<Tag> {
    let net = parse_case(TRIANGLE).unwrap().equip(&[LineId(1)], &[LineId(3)]);
    let weather = WeatherSeries::constant(20.0, 3.0).unwrap();
    let ratings =
        build_rating_series(&net, &weather, &ConductorSet::default(), &RatingConditions::slr_reference(), &[0]).unwrap();
    let cfg = FormulationConfig { topology_mode: mode, ..Default::default() };
    let f = build(&net, &ratings, &cfg, 0).unwrap();
    f.constraints.iter().map(|c| c.tag).chain(f.objective.terms.iter().map(|t| t.tag)).collect()
}

/// Model equations without an emitting site in either topology mode.
pub fn missing_tags() -> Vec<&'static str> {
    let all: BTreeSet<Tag> = emitted(TopologyMode::Optimized).union(&emitted(TopologyMode::Fixed)).copied().collect();
    Tag::MODEL.iter().filter(|t| !all.contains(t)).map(|t| t.label()).collect()
}

pub fn tags_in(mode: TopologyMode) -> BTreeSet<Tag> {
    emitted(mode)
}

/// Substation 3 of the triangle split, with line 2-3 moved to busbar 2 and
/// the load left on busbar 1. Returns the model objective and MW shed.
pub fn split_triangle(strict: bool) -> (f64, f64) {
    let net = parse_case(TRIANGLE).unwrap();
    let cfg =
        FormulationConfig { topology_mode: TopologyMode::Optimized, strict_balance: strict, ..Default::default() };
    let f = build(&net, &RatingSeries::static_only(&net, &[0]), &cfg, 0).unwrap();
    let mut a = nominal_assignment(&f);
    a.insert(BinaryVar::Busbar(2), 0);
    a.insert(BinaryVar::LineEnd(1, End::To), 1);
    let g = fix_topology(&f, &a).unwrap();
    let r = run(&g, &SolverConfig { log_every: 0, ..Default::default() });
    let s = r.incumbent.expect("feasible with shedding");
    (s.objective_model, s.loads.iter().map(|d| d.shed_mw).sum())
}

/// The same split topology solved as a plain busbar-level network.
pub fn split_triangle_reference() -> f64 {
    let net = parse_case(TRIANGLE).unwrap();
    let mut topo = Topology::nominal(&net);
    topo.merged[2] = false;
    topo.end_bus2[1][1] = true;
    let b: Vec<f64> = net.lines.iter().map(|l| l.susceptance_nominal).collect();
    let limits: Vec<f64> = net.lines.iter().map(|l| l.p_max_static).collect();
    let cfg = FormulationConfig::default();
    let settings = Settings { theta_max: cfg.theta_max, voll: cfg.voll, segments: cfg.cost_segments };
    dc_opf(&plain_network(&net, &topo, &b, &limits).unwrap(), &settings).unwrap()
}
