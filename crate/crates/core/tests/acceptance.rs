//! Acceptance suite. Prints one `criterion N: PASS|FAIL` line per criterion
//! with the measured quantities, and exits non-zero if any criterion fails.
//!
//! Run: cargo test --test acceptance

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use branchpath::connector::connect;
use branchpath::currents::{boundary, cone, h_mass, mass, restrict_current, slice, slice_by_restriction};
use branchpath::decomposition::{current_of, good_decomposition, is_acyclic};
use branchpath::flatnorm::{flat_norm, rasterize, Chain, TriComplex};
use branchpath::geometry::shift_grid_avoiding;
use branchpath::lab::{
    counterexample_instance, counterexample_limit_current, lattice_flat_distance, run_counterexample, run_threshold,
};
use branchpath::measures::{canonicalize, h_mass_measure, w1_distance, Region};
use branchpath::solver::{oracle_small, solve, TransportInstance};
use branchpath::{CostSpec, Cube, Edge, Error, Point, PolyhedralCurrent, Result, SignedAtomicMeasure};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { pass, detail: detail.into() })
}

fn p2(x: f64, y: f64) -> Point {
    Point::from(vec![x, y])
}

fn random_point(rng: &mut ChaCha8Rng, c: &Cube) -> Point {
    let lo = c.lower();
    Point::from(lo.coords().iter().map(|&l| l + c.edge * rng.gen::<f64>()).collect::<Vec<_>>())
}

fn random_current(rng: &mut ChaCha8Rng) -> Result<PolyhedralCurrent> {
    let n_edges = rng.gen_range(1..=8);
    let edges: Vec<Edge> = (0..n_edges)
        .map(|_| {
            let a = p2(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let b = p2(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            Edge::new(a, b, sign * rng.gen_range(0.1..2.0))
        })
        .collect();
    PolyhedralCurrent::new(edges)
}

// --- 1 -----------------------------------------------------------------------

fn counterexample() -> Result<Outcome> {
    let target = 17f64.sqrt() / 4.0;
    let r = run_counterexample(&[2, 4, 8, 16])?;
    let s = &r.stability;
    let optima_ok = s.rows.iter().all(|row| (row.optimal - target).abs() <= 1e-6);
    let limit_ok = (s.limit_energy - target).abs() <= 1e-6;
    let segment_ok = (r.segment_energy - 1.0).abs() <= 1e-12;
    let gap_ok = (s.gap - (target - 1.0)).abs() <= 1e-6;
    let optima: Vec<String> = s.rows.iter().map(|row| format!("{:.10}", row.optimal)).collect();
    outcome(
        optima_ok && limit_ok && segment_ok && gap_ok && !r.pass(),
        format!(
            "W^H(n=2,4,8,16) = [{}], limit energy {:.10}, segment {:.6}, gap {:.7}, verdict {}",
            optima.join(", "),
            s.limit_energy,
            r.segment_energy,
            s.gap,
            if r.pass() { "PASS" } else { "FAIL" }
        ),
    )
}

// --- 2 -----------------------------------------------------------------------

fn cones() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut boundary_bad, mut bound_bad, mut worst) = (0, 0, 0.0f64);
    for _ in 0..200 {
        let d = rng.gen_range(2..=3);
        let center = Point::from((0..d).map(|_| rng.gen_range(-5.0..5.0)).collect::<Vec<_>>());
        let q = Cube::new(center, rng.gen_range(0.1..10.0))?;
        let atoms: Vec<(Point, f64)> = (0..rng.gen_range(1..=12))
            .map(|_| {
                let w = rng.gen_range(0.05..2.0) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
                (random_point(&mut rng, &q), w)
            })
            .collect();
        let mu = canonicalize(atoms);
        let x = random_point(&mut rng, &q);
        let c = cone(&x, &mu)?;
        let expected = mu.sub(&SignedAtomicMeasure::dirac(x.clone(), mu.total()));
        let err = boundary(&c).max_abs_diff(&expected);
        worst = worst.max(err);
        if err > 1e-12 {
            boundary_bad += 1;
        }
        let cost = CostSpec::power(rng.gen_range(0.05..=1.0))?;
        if h_mass(&c, &cost) > q.diameter() * h_mass_measure(&mu, &cost) * (1.0 + 1e-12) {
            bound_bad += 1;
        }
    }
    outcome(
        boundary_bad == 0 && bound_bad == 0,
        format!("200 cones: boundary violations {boundary_bad} (worst {worst:.1e}), H-mass bound violations {bound_bad}"),
    )
}

// --- 3 -----------------------------------------------------------------------

fn slicing() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut identity_bad, mut coarea_bad, mut worst, mut tightest) = (0, 0, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let t = random_current(&mut rng)?;
        let x = p2(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));

        // identity at a few generic radii
        let mut checked = 0;
        while checked < 3 {
            let r = rng.gen_range(0.05..2.0);
            let (s, by_restriction) = match (slice(&t, &x, r), slice_by_restriction(&t, &x, r)) {
                (Ok(s), Ok(b)) => (s, b),
                (Err(Error::NonGenericRadius { .. }), _) | (_, Err(Error::AtomOnBoundary { .. })) => continue,
                (Err(e), _) | (_, Err(e)) => return Err(e),
            };
            let err = s.measure().max_abs_diff(&by_restriction);
            worst = worst.max(err);
            if err > 1e-9 {
                identity_bad += 1;
            }
            checked += 1;
        }

        // coarea: midpoint Riemann sum of M(slice) over (a, b)
        let a = rng.gen_range(0.01..0.5);
        let b = a + rng.gen_range(0.5..2.0);
        let steps = 1000;
        let dr = (b - a) / steps as f64;
        let mut sum = 0.0;
        for i in 0..steps {
            let r = a + (i as f64 + 0.5) * dr;
            match slice(&t, &x, r) {
                Ok(s) => sum += s.mass() * dr,
                // a vertex sitting on the sphere: the slice is undefined on a null set
                Err(Error::NonGenericRadius { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        let annulus = mass(&restrict_current(&t, &Region::sup_ball(&x, b)?, false))
            - mass(&restrict_current(&t, &Region::sup_ball(&x, a)?, false));
        if annulus > 0.0 {
            tightest = tightest.max(sum / annulus);
        }
        if sum > (1.0 + 1e-6) * annulus + 1e-12 {
            coarea_bad += 1;
        }
    }
    outcome(
        identity_bad == 0 && coarea_bad == 0,
        format!(
            "100 currents: identity violations {identity_bad} (worst {worst:.1e}), coarea violations {coarea_bad} \
             (largest sum/mass {tightest:.4})"
        ),
    )
}

// --- 4 -----------------------------------------------------------------------

/// Vertices sorted by x and edges running from lower to higher index: every
/// sub-edge moves right, so no cycle can form even through crossings.
fn random_acyclic_flow(rng: &mut ChaCha8Rng) -> Result<PolyhedralCurrent> {
    let n = rng.gen_range(4..=9);
    let mut pts: Vec<Point> = (0..n).map(|_| p2(rng.gen::<f64>(), rng.gen::<f64>())).collect();
    pts.sort_by(|a, b| a.coords()[0].total_cmp(&b.coords()[0]));
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(0.35) {
                edges.push(Edge::new(pts[i].clone(), pts[j].clone(), rng.gen_range(0.1..1.0)));
            }
        }
    }
    if edges.is_empty() {
        edges.push(Edge::new(pts[0].clone(), pts[n - 1].clone(), 1.0));
    }
    PolyhedralCurrent::new(edges)
}

fn on_segment(m: &Point, u: &Point, v: &Point) -> bool {
    let (uv, um) = (v.sub(u), m.sub(u));
    let len2 = uv.dot(&uv);
    let t = um.dot(&uv) / len2;
    let off = um.sub(&uv.scale(t)).norm();
    (0.0..=1.0).contains(&t) && off <= 1e-9 * len2.sqrt().max(1.0)
}

fn decompositions() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut mass_bad, mut boundary_bad, mut trip_bad, mut mult_bad) = (0, 0, 0, 0);
    for _ in 0..100 {
        let t = random_acyclic_flow(&mut rng)?;
        assert!(is_acyclic(&t), "generator produced a cycle");
        let d = good_decomposition(&t)?;
        let rel = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1e-300);
        if !rel(d.weighted_length(), mass(&t)) {
            mass_bad += 1;
        }
        if !rel(2.0 * d.total_weight(), boundary(&t).total_variation()) {
            boundary_bad += 1;
        }
        if !current_of(&d).approx_eq(&t, 1e-9) {
            trip_bad += 1;
        }
        // θ_e = Σ of path weights crossing e forward, and nothing crosses backward
        for e in t.edges() {
            let m = e.midpoint();
            let dir = e.b.sub(&e.a);
            let (mut fwd, mut bwd) = (0.0, 0.0);
            for path in &d.paths {
                for w in path.vertices().windows(2) {
                    if on_segment(&m, &w[0], &w[1]) {
                        if w[1].sub(&w[0]).dot(&dir) > 0.0 {
                            fwd += path.weight();
                        } else {
                            bwd += path.weight();
                        }
                    }
                }
            }
            if bwd != 0.0 || !rel(fwd, e.theta.abs()) || e.theta <= 0.0 {
                mult_bad += 1;
            }
        }
    }
    outcome(
        mass_bad + boundary_bad + trip_bad + mult_bad == 0,
        format!(
            "100 flows: mass {mass_bad}, boundary mass {boundary_bad}, round trip {trip_bad}, multiplicity {mult_bad} violations"
        ),
    )
}

// --- 5 -----------------------------------------------------------------------

fn connector() -> Result<Outcome> {
    let alpha = CostSpec::power(0.5)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let base: Vec<Point> = (0..4).map(|_| p2(rng.gen::<f64>(), rng.gen::<f64>())).collect();
    let dirs: Vec<Point> = (0..4)
        .map(|_| {
            let t = rng.gen::<f64>() * std::f64::consts::TAU;
            p2(t.cos(), t.sin())
        })
        .collect();
    let mu = SignedAtomicMeasure::from_atoms(base.iter().map(|x| (x.clone(), 0.25)))?;
    let family: Vec<SignedAtomicMeasure> = (1..=8)
        .map(|m| {
            let step = 4f64.powi(-m);
            SignedAtomicMeasure::from_atoms(base.iter().zip(&dirs).map(|(x, u)| (x.add(&u.scale(step)), 0.25)))
        })
        .collect::<Result<_>>()?;
    let mut atoms = mu.points();
    for nu in &family {
        atoms.extend(nu.points());
    }
    let q = shift_grid_avoiding(&Cube::unit(2), &atoms, 8)?;

    let (mut energies, mut w1s) = (Vec::new(), Vec::new());
    let (mut bound_bad, mut exact_bad, mut hmass_ok) = (0, 0, true);
    for (i, nu) in family.iter().enumerate() {
        let r = connect(&mu, nu, &q, i as u32 + 1, &alpha)?;
        let e = r.energy(&alpha);
        if e > r.bound * (1.0 + 1e-12) {
            bound_bad += 1;
        }
        if !boundary(&r.current).approx_eq(&mu.sub(nu), 1e-12) {
            exact_bad += 1;
        }
        hmass_ok &= h_mass_measure(&mu, &alpha) <= 4.0 && h_mass_measure(nu, &alpha) <= 4.0;
        energies.push(e);
        w1s.push(w1_distance(&mu, nu)?);
    }
    let decreasing = energies.windows(2).all(|w| w[1] < w[0]);
    let w1_decreasing = w1s.windows(2).all(|w| w[1] < w[0]);
    let last = *energies.last().expect("eight levels");
    let shown: Vec<String> = energies.iter().map(|e| format!("{e:.4}")).collect();
    outcome(
        decreasing && last < 0.05 && bound_bad == 0 && exact_bad == 0 && hmass_ok && w1_decreasing,
        format!(
            "energies m=1..8 [{}], W1(m=8) {:.1e}, bound violations {bound_bad}, boundary errors {exact_bad}",
            shown.join(", "),
            w1s[7]
        ),
    )
}

// --- 6 -----------------------------------------------------------------------

fn threshold() -> Result<Outcome> {
    let r = run_threshold(&[0.4, 0.5, 0.75], 2, 8)?;
    let rows_ok = r
        .rows
        .iter()
        .all(|row| row.relative_error <= 0.10 && row.summable == row.expected_summable);
    let shown: Vec<String> = r
        .rows
        .iter()
        .map(|row| format!("α={} ratio {:.6} (predicted {:.6})", row.alpha, row.empirical_ratio, row.predicted_ratio))
        .collect();
    outcome(r.pass && rows_ok && r.rows.len() == 3, shown.join("; "))
}

// --- 7 -----------------------------------------------------------------------

fn instance(cost: CostSpec, sources: &[(f64, f64, f64)], sinks: &[(f64, f64, f64)]) -> Result<TransportInstance> {
    let m = |v: &[(f64, f64, f64)]| SignedAtomicMeasure::from_atoms(v.iter().map(|&(x, y, w)| (p2(x, y), w)));
    let (mu_minus, mu_plus) = (m(sources)?, m(sinks)?);
    let mut pts = mu_minus.points();
    pts.extend(mu_plus.points());
    TransportInstance::new(2, cost, mu_minus, mu_plus, Cube::bounding(&pts, 0.5)?, 2)
}

fn solver_vs_oracle() -> Result<Outcome> {
    let a = |x| CostSpec::power(x);
    let regression = vec![
        ("Y α=1", instance(a(1.0)?, &[(-1.0, 1.0, 0.5), (1.0, 1.0, 0.5)], &[(0.0, 0.0, 1.0)])?),
        ("Y α=0.5", instance(a(0.5)?, &[(-1.0, 1.0, 0.5), (1.0, 1.0, 0.5)], &[(0.0, 0.0, 1.0)])?),
        ("narrow Y α=0.5", instance(a(0.5)?, &[(-0.5, 1.0, 0.5), (0.5, 1.0, 0.5)], &[(0.0, 0.0, 1.0)])?),
        ("split α=0.3", instance(a(0.3)?, &[(0.0, 0.0, 1.0)], &[(2.0, 0.4, 0.7), (1.8, -0.6, 0.3)])?),
        ("merge α=0.75", instance(a(0.75)?, &[(0.0, 0.0, 0.2), (0.3, 1.2, 0.8)], &[(2.5, 0.5, 1.0)])?),
        ("triangle size", instance(CostSpec::Size, &[(0.0, 0.0, 1.0)], &[(1.0, 0.0, 0.5), (0.5, 0.9, 0.5)])?),
        ("obtuse α=0.5", instance(a(0.5)?, &[(0.0, 0.0, 1.0)], &[(1.0, 0.05, 0.5), (-1.0, 0.05, 0.5)])?),
        ("counterexample n=4", counterexample_instance(4, CostSpec::Size)?),
    ];
    let (mut bad, mut worst) = (0, 0.0f64);
    let mut y_alpha1 = f64::NAN;
    for (name, inst) in &regression {
        let s = solve(inst, 2)?;
        let o = oracle_small(inst, 1e-3)?;
        let diff = (s.energy - o).abs();
        worst = worst.max(diff);
        if diff > 1e-4 {
            bad += 1;
            eprintln!("  {name}: solver {:.9} oracle {:.9}", s.energy, o);
        }
        if *name == "Y α=1" {
            y_alpha1 = s.energy;
        }
    }
    let y_ok = (y_alpha1 - 2f64.sqrt()).abs() <= 1e-9;
    outcome(
        bad == 0 && y_ok,
        format!(
            "{} instances, disagreements {bad} (worst {worst:.1e}); α=1 Y energy {y_alpha1:.12} vs √2",
            regression.len()
        ),
    )
}

// --- 8 -----------------------------------------------------------------------

fn flat_norms() -> Result<Outcome> {
    let c = TriComplex::new(&Cube::unit(2), 1.0 / 8.0)?;
    let zero = flat_norm(&Chain::zero(&c), &c)?.value;

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut mass_bad = 0;
    for _ in 0..100 {
        let mut chain = Chain::zero(&c);
        for _ in 0..rng.gen_range(1..=25) {
            let e = rng.gen_range(0..c.edge_count());
            chain.coeffs[e] += rng.gen_range(-2.0..2.0);
        }
        if flat_norm(&chain, &c)?.value > chain.mass(&c) + 1e-9 {
            mass_bad += 1;
        }
    }

    // two opposite unit segments h_sep apart: either keep both (mass 2) or
    // fill the rectangle and pay its area plus the two short sides
    let h_sep = 0.25;
    let top = PolyhedralCurrent::segment(p2(0.0, h_sep), p2(1.0, h_sep), 1.0)?;
    let bottom = PolyhedralCurrent::segment(p2(1.0, 0.0), p2(0.0, 0.0), 1.0)?;
    let pair = top.add(&bottom);
    let filling = f64::min(2.0, h_sep + 2.0 * h_sep);
    let pc = TriComplex::covering(&[&pair], h_sep / 4.0, 0.25)?;
    let parallel = flat_norm(&rasterize(&pair, &pc)?, &pc)?.value;

    let limit = counterexample_limit_current();
    let mut flats = Vec::new();
    for n in 2..=16 {
        let s = solve(&counterexample_instance(n, CostSpec::Size)?, 2)?;
        flats.push(lattice_flat_distance(&s.current, &limit, 1.0 / 64.0, 0.125)?);
    }
    let decreasing = flats.windows(2).all(|w| w[1] < w[0]);
    outcome(
        zero == 0.0 && mass_bad == 0 && (parallel - filling).abs() <= 1e-6 && decreasing,
        format!(
            "F(0) = {zero}, F > mass on {mass_bad}/100, parallel pair {parallel:.9} (filling {filling}), \
             F(T_n − T) n=2..16 from {:.6} to {:.6}, strictly decreasing {decreasing}",
            flats[0],
            flats[flats.len() - 1]
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, Duration, fn() -> Result<Outcome>); 8] = [
        (1, "counterexample reproduction", Duration::from_secs(10), counterexample),
        (2, "cone construction", Duration::from_secs(5), cones),
        (3, "slicing identity", Duration::from_secs(30), slicing),
        (4, "good decomposition", Duration::from_secs(10), decompositions),
        (5, "connector", Duration::from_secs(20), connector),
        (6, "threshold", Duration::from_secs(30), threshold),
        (7, "solver vs oracle", Duration::from_secs(120), solver_vs_oracle),
        (8, "flat norm", Duration::from_secs(180), flat_norms),
    ];
    let mut failed = 0;
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let (pass, detail) = match result {
            Ok(o) => (o.pass && elapsed <= budget, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {id}: {} {name}: {detail} [{:.2} s, budget {} s]",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
