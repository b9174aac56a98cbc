//! Acceptance suite. Runs without the libtest harness so that every criterion
//! prints its PASS/FAIL line regardless of output capture.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use mquiver::cxmat::{cr, inv, CMatrix, Complex};
use mquiver::implosion::{
    alcove_grid, alcove_to_b1, hjs_toric_quiver, qs_from_alcove, scan_alcove_grid, stabilizer_check, stratum_of,
    AlcovePoint, RUN_TOL,
};
use mquiver::normal_form::{
    check_lift, cover_lifts, cover_rho, reconstruct_from_borel, reduce_to_standard, tilde_scalars, BorelElement,
};
use mquiver::quiver::{
    act_gauge, additive_residual_at, endo_y, full_decomposition, gen_random, gen_random_with, minpoly_residual,
    relative_residuals, xk_recursion_residual, DimensionVector, GaugeElement, RandomOptions, ScalarChain,
};
use mquiver::random::{self, SeededRng};
use mquiver::sl2::{
    sl2_invariants, sl2_n_action, sl2_quadric_coords, sl2_quiver, sl2_quiver_domain, sl2_real_slice,
    sl2_relation_residual, SL2Point,
};
use mquiver::steinberg::{
    centralizer_dim, class_functions, springer_image, steinberg_membership, unipotent_residual, TorusLevel,
};
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn full(n: usize) -> DimensionVector {
    DimensionVector::full_flag(n)
}

fn seeds(base: u64) -> SeededRng {
    random::rng(base)
}

fn diag_distance(a: &[Complex], b: &[Complex]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn relative_coeff_distance(a: &[Complex], b: &[Complex]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm() / (1.0 + x.norm())).fold(0.0, f64::max)
}

fn random_b1(rng: &mut SeededRng, n: usize, bound: f64) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| {
        if i > j {
            cr(0.0)
        } else if i == j {
            if i == 0 {
                cr(1.0)
            } else {
                random::complex_annulus(rng, 0.5, 2.0)
            }
        } else {
            random::complex_in_box(rng, bound)
        }
    })
}

fn criterion_1() -> Outcome {
    let mut worst_min = 0.0f64;
    let mut worst_xk = 0.0f64;
    let mut seeder = seeds(1);
    for n in 2..=6 {
        for _ in 0..200 {
            let seed = seeder.gen();
            let (q, s) = gen_random(&full(n), seed).map_err(|e| e.to_string())?;
            let m = minpoly_residual(&q, &s).map_err(|e| e.to_string())?;
            let x = xk_recursion_residual(&q, &s).map_err(|e| e.to_string())?;
            ensure(m <= 1e-8, || format!("n={n} seed={seed}: minpoly residual {m:e}"))?;
            ensure(x <= 1e-8, || format!("n={n} seed={seed}: X_k residual {x:e}"))?;
            worst_min = worst_min.max(m);
            worst_xk = worst_xk.max(x);
        }
    }
    Ok(format!("1000 solutions, minpoly {worst_min:.1e}, X_k {worst_xk:.1e}"))
}

fn criterion_2() -> Outcome {
    let mut seeder = seeds(2);
    let mut worst_round = 0.0f64;
    let mut worst_diag = 0.0f64;
    for trial in 0..500 {
        let n = 2 + trial % 4;
        let seed = seeder.gen();
        let (q, s) = gen_random(&full(n), seed).map_err(|e| e.to_string())?;

        let y = BorelElement::b1(endo_y(&q)).map_err(|e| e.to_string())?;
        let (back, s_back) = reconstruct_from_borel(&y, 1e-9).map_err(|e| e.to_string())?;
        let round = q.max_abs_diff(&back).max(diag_distance(s.q(), s_back.q()));
        ensure(round <= 1e-10, || format!("n={n} seed={seed}: reconstruction differs by {round:e}"))?;
        worst_round = worst_round.max(round);

        let g = GaugeElement::random_special(&mut seeder, q.dims(), 1e3);
        let gauged = act_gauge(&q, &g, None).map_err(|e| e.to_string())?;
        let (_, reduced) = reduce_to_standard(&gauged, 1e-8).map_err(|e| e.to_string())?;
        let d = diag_distance(&endo_y(&reduced).diagonal(), &s.standard_diagonal());
        ensure(d <= 1e-8, || format!("n={n} seed={seed}: reduced diagonal off by {d:e}"))?;
        worst_diag = worst_diag.max(d);
    }
    Ok(format!("500 trials, reconstruction {worst_round:.1e}, reduced diagonal {worst_diag:.1e}"))
}

fn criterion_3() -> Outcome {
    let mut seeder = seeds(3);
    let mut worst = 0.0f64;
    for trial in 0..1000 {
        let n = 2 + trial % 4;
        let seed = seeder.gen();
        let (q, s) = gen_random(&full(n), seed).map_err(|e| e.to_string())?;
        let g = GaugeElement::random_special(&mut seeder, q.dims(), 1e3);
        let gauged = act_gauge(&q, &g, None).map_err(|e| e.to_string())?;

        let before = relative_residuals(&q, &s).map_err(|e| e.to_string())?;
        let after = relative_residuals(&gauged, &s).map_err(|e| e.to_string())?;
        let res = before.iter().zip(&after).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let cf = relative_coeff_distance(&class_functions(&endo_y(&q)), &class_functions(&endo_y(&gauged)));

        let lambda = TorusLevel::new(random::torus_level(&mut seeder, n)).map_err(|e| e.to_string())?;
        let u = random::special_linear(&mut seeder, n, 1e3);
        let np = random::unitriangular(&mut seeder, n, 10.0);
        let m = springer_image(&u, &lambda, &np).map_err(|e| e.to_string())?;
        let h = random::special_linear(&mut seeder, n, 1e3);
        let hm = &(&h * &m) * &inv(&h).map_err(|e| e.to_string())?;
        let mem0 = steinberg_membership(&m, &lambda).map_err(|e| e.to_string())?;
        let mem1 = steinberg_membership(&hm, &lambda).map_err(|e| e.to_string())?;
        let cf_m = relative_coeff_distance(&class_functions(&m), &class_functions(&hm));
        let dev = res.max(cf).max(cf_m).max((mem0 - mem1).abs());
        ensure(dev <= 1e-8, || format!("n={n} seed={seed}: invariance broken by {dev:e} (residuals {res:e}, class functions {cf:e}, springer {cf_m:e})"))?;
        worst = worst.max(dev);
    }
    Ok(format!("1000 trials, worst deviation {worst:.1e}"))
}

fn criterion_4() -> Outcome {
    let mut seeder = seeds(4);
    let mut worst_add = 0.0f64;
    let mut worst_unip = 0.0f64;
    let opts = RandomOptions { unipotent: true, ..RandomOptions::default() };
    for trial in 0..100 {
        let n = 2 + trial % 4;
        let seed = seeder.gen();
        let (q, s) = gen_random_with(&full(n), seed, opts).map_err(|e| e.to_string())?;
        ensure(s.q().iter().all(|&z| z == cr(1.0)), || format!("seed={seed}: q is not identically 1"))?;
        let add = additive_residual_at(&q, &vec![cr(0.0); q.levels()]).map_err(|e| e.to_string())?;
        let unip = unipotent_residual(&endo_y(&q));
        ensure(add <= 1e-10, || format!("n={n} seed={seed}: additive residual {add:e}"))?;
        ensure(unip <= 1e-8, || format!("n={n} seed={seed}: unipotent residual {unip:e}"))?;
        worst_add = worst_add.max(add);
        worst_unip = worst_unip.max(unip);
    }
    Ok(format!("100 trials, additive {worst_add:.1e}, unipotent {worst_unip:.1e}"))
}

fn criterion_5() -> Outcome {
    let mut seeder = seeds(5);
    let (mut worst_rho, mut worst_det, mut worst_ratio) = (0.0f64, 0.0f64, 0.0f64);
    for trial in 0..200 {
        let n = 2 + trial % 7;
        let y = BorelElement::b1(random_b1(&mut seeder, n, 10.0)).map_err(|e| e.to_string())?;
        let det_y = y.determinant();
        let lifts = cover_lifts(&y).map_err(|e| e.to_string())?;
        ensure(lifts.len() == n, || format!("n={n}: {} lifts", lifts.len()))?;
        let scale = lifts[0].z1.norm();
        for (i, a) in lifts.iter().enumerate() {
            for b in &lifts[i + 1..] {
                ensure((a.z1 - b.z1).norm() > 1e-6 * scale, || format!("n={n}: repeated lift"))?;
            }
            let rho = cover_rho(&a.b).map_err(|e| e.to_string())?;
            let dr = (rho.y.matrix() - y.matrix()).max_abs();
            let dd = (a.z1.powu(n as u32) * det_y - 1.0).norm();
            ensure(dr <= 1e-10, || format!("n={n}: rho(lift) differs by {dr:e}"))?;
            ensure(dd <= 1e-10, || format!("n={n}: z1^n det Y - 1 = {dd:e}"))?;
            worst_rho = worst_rho.max(dr);
            worst_det = worst_det.max(dd);
        }

        let chain = ScalarChain::new((0..n - 1).map(|_| random::complex_annulus(&mut seeder, 0.5, 2.0)).collect())
            .map_err(|e| e.to_string())?;
        for k in 0..n {
            let lifted = tilde_scalars(&chain, k).map_err(|e| e.to_string())?;
            let check = check_lift(&lifted).ok_or("lift missing")?;
            ensure(check.ratio <= 1e-12, || format!("n={n} root {k}: ratio error {:e}", check.ratio))?;
            worst_ratio = worst_ratio.max(check.ratio);
        }
    }
    Ok(format!("200 trials, rho {worst_rho:.1e}, det {worst_det:.1e}, tilde ratio {worst_ratio:.1e}"))
}

fn criterion_6() -> Outcome {
    let mut seeder = seeds(6);
    let mut worst = 0.0f64;
    for trial in 0..500 {
        let n = 2 + trial % 4;
        let lambda = TorusLevel::new(random::torus_level(&mut seeder, n)).map_err(|e| e.to_string())?;
        let u = random::special_linear(&mut seeder, n, 1e3);
        let np = random::unitriangular(&mut seeder, n, 10.0);
        let m = springer_image(&u, &lambda, &np).map_err(|e| e.to_string())?;
        let dev = steinberg_membership(&m, &lambda).map_err(|e| e.to_string())?;
        ensure(dev <= 1e-8, || format!("trial {trial}: membership deviation {dev:e}"))?;
        worst = worst.max(dev);

        let superdiag_ok = (0..n - 1).all(|i| np[(i, i + 1)].norm() > 1e-3);
        if superdiag_ok {
            let cd = centralizer_dim(&m, 1e-9);
            ensure(cd.dim == n - 1, || format!("trial {trial}: centralizer dim {} for n={n}", cd.dim))?;
        }
        let diag = steinberg_membership(&lambda.to_matrix(), &lambda).map_err(|e| e.to_string())?;
        ensure(diag == 0.0, || format!("trial {trial}: diag(lambda) deviation {diag:e}"))?;
    }
    Ok(format!("500 trials, worst membership {worst:.1e}"))
}

fn random_sl2_point(rng: &mut SeededRng) -> Result<SL2Point, String> {
    let u = random::special_linear(rng, 2, 1e2);
    let e = random::complex_annulus(rng, 0.5, 2.0);
    let f = random::complex_in_box(rng, 2.0);
    SL2Point::new([u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)]], e, f, e.inv()).map_err(|e| e.to_string())
}

fn criterion_7() -> Outcome {
    let p = SL2Point::with_borel(cr(2.0), cr(1.0)).map_err(|e| e.to_string())?;
    let inv = sl2_invariants(&p);
    let lhs = inv.c * inv.x - inv.a * inv.y;
    ensure(inv.x == cr(1.0) && inv.y == cr(-1.5), || format!("worked example gives x={}, y={}", inv.x, inv.y))?;
    ensure(lhs == cr(1.5) && lhs == p.e - p.eprime, || format!("worked example gives cx - ay = {lhs}"))?;

    let mut seeder = seeds(7);
    let (mut worst_n, mut worst_quad, mut worst_slice) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..1000 {
        let p = random_sl2_point(&mut seeder)?;
        let t = if k % 2 == 0 {
            Complex::from_polar(10.0 * seeder.gen::<f64>().sqrt(), seeder.gen_range(-PI..PI))
        } else {
            Complex::from_polar(10.0, seeder.gen_range(-PI..PI))
        };
        let moved = sl2_n_action(&p, t).map_err(|e| e.to_string())?;
        let dn = sl2_invariants(&p).max_abs_diff(&sl2_invariants(&moved)).max(sl2_relation_residual(&moved));
        ensure(dn <= 1e-9, || format!("N-invariance off by {dn:e} at t={t}"))?;
        worst_n = worst_n.max(dn);

        let quad = sl2_quadric_coords(&p).map_err(|e| e.to_string())?.residual();
        ensure(quad <= 1e-9, || format!("quadric residual {quad:e}"))?;
        worst_quad = worst_quad.max(quad);

        let theta = seeder.gen_range(-PI..PI);
        let u = random::special_unitary(&mut seeder, 2);
        let slice = sl2_real_slice(theta, &u).map_err(|e| e.to_string())?;
        let ds = slice.residual.max(slice.sphere_residual.unwrap_or(0.0));
        ensure(ds <= 1e-9, || format!("slice residual {ds:e} at theta={theta}"))?;
        worst_slice = worst_slice.max(ds);
    }

    let mut matches = 0;
    let mut on_surface = 0;
    for k in 0..1000 {
        let a1 = random::complex_in_box(&mut seeder, 10.0);
        let a2 = random::complex_in_box(&mut seeder, 10.0);
        let b1 = random::complex_in_box(&mut seeder, 10.0);
        let b2 = if k % 2 == 0 { -(1.0 + a1 * b1) / a2 } else { random::complex_in_box(&mut seeder, 10.0) };
        let domain = sl2_quiver_domain(a1, a2, b1, b2, 1e-9);
        let quiver_ok = sl2_quiver(a1, a2, b1, b2).is_ok();
        if domain == quiver_ok {
            matches += 1;
        }
        if !domain {
            on_surface += 1;
        }
    }
    ensure(matches == 1000, || format!("domain verdicts agree on {matches}/1000 samples"))?;
    Ok(format!(
        "N {worst_n:.1e}, quadric {worst_quad:.1e}, slice {worst_slice:.1e}, domain 1000/1000 ({on_surface} on the hypersurface)"
    ))
}

fn criterion_8() -> Outcome {
    let mut points = 0;
    let (mut worst_res, mut worst_diag) = (0.0f64, 0.0f64);
    for n in 2..=4 {
        let samples = scan_alcove_grid(n, 24, RUN_TOL).map_err(|e| e.to_string())?;
        let expected = [25, 325, 2925][n - 2];
        ensure(samples.len() == expected, || format!("n={n}: {} grid points", samples.len()))?;
        points += samples.len();
        let bary = AlcovePoint::barycenter(n);
        for (i, sample) in samples.iter().enumerate() {
            ensure(sample.residual <= 1e-10, || format!("n={n}: residual {:e} at {:?}", sample.residual, sample.point))?;
            ensure(sample.diagonal_mismatch <= 1e-10, || {
                format!("n={n}: diagonal mismatch {:e} at {:?}", sample.diagonal_mismatch, sample.point)
            })?;
            worst_res = worst_res.max(sample.residual);
            worst_diag = worst_diag.max(sample.diagonal_mismatch);

            let other = &samples[(i * 7919 + 13) % samples.len()].point;
            for eps in [1e-3, 1e-6] {
                for target in [&bary, other] {
                    let moved = sample.point.interpolate(target, eps).map_err(|e| e.to_string())?;
                    let finer = stratum_of(&moved, RUN_TOL);
                    ensure(finer.refines(&sample.stratum), || {
                        format!("n={n}: {:?} does not refine {:?}", finer.runs, sample.stratum.runs)
                    })?;
                }
            }
        }
        for j in 0..n {
            let v = AlcovePoint::vertex(n, j);
            let q = hjs_toric_quiver(&qs_from_alcove(&v)).map_err(|e| e.to_string())?;
            ensure(q.max_map_norm() == 0.0, || format!("n={n}: vertex {j} gives nonzero maps"))?;
            let id = (alcove_to_b1(&v).matrix() - &CMatrix::identity(n)).max_abs();
            ensure(id <= 1e-12, || format!("n={n}: vertex {j} maps {id:e} away from the identity"))?;
        }
    }

    let mut interior = 0;
    let mut vertices = 0;
    for p in alcove_grid(2, 24) {
        let rep = stabilizer_check(&p, RUN_TOL).map_err(|e| e.to_string())?;
        let expected = if rep.stratum.is_interior() { 0 } else { 3 };
        ensure(rep.predicted_dim == expected && rep.measured_dim == expected, || {
            format!("n=2 at {:?}: predicted {}, measured {}", p, rep.predicted_dim, rep.measured_dim)
        })?;
        if expected == 0 {
            interior += 1;
        } else {
            vertices += 1;
        }
    }
    ensure(vertices == 2, || format!("n=2 grid has {vertices} vertices"))?;
    Ok(format!(
        "{points} grid points, residual {worst_res:.1e}, diagonal {worst_diag:.1e}, n=2 stabilizers {interior}x0 + {vertices}x3"
    ))
}

fn criterion_9() -> Outcome {
    let mut seeder = seeds(9);
    let mut worst = 0.0f64;
    for trial in 0..200 {
        let n = 2 + trial % 4;
        let seed = seeder.gen();
        let opts = RandomOptions { unipotent: trial % 10 == 9, ..RandomOptions::default() };
        let (q, s) = gen_random_with(&full(n), seed, opts).map_err(|e| e.to_string())?;
        let parts = full_decomposition(&q, &s, 1e-8).map_err(|e| e.to_string())?;
        for (k, &dim) in q.dims().as_slice().iter().enumerate() {
            let total: usize = parts.iter().map(|p| p.bases[k].cols()).sum();
            ensure(total == dim, || format!("n={n} seed={seed}: node {} splits into {total}", k + 1))?;
        }
        for part in &parts {
            ensure(part.isomorphisms_hold(), || format!("n={n} seed={seed}: tau={} not an isomorphism", part.tau))?;
            let leak = part.max_leakage();
            ensure(leak <= 1e-8, || format!("n={n} seed={seed}: leakage {leak:e}"))?;
            worst = worst.max(leak);
        }
    }
    Ok(format!("200 trials, worst leakage {worst:.1e}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("lemma identities", criterion_1),
        ("round trips", criterion_2),
        ("gauge and conjugation invariance", criterion_3),
        ("degeneration to q = 1", criterion_4),
        ("cover", criterion_5),
        ("steinberg fibres", criterion_6),
        ("sl2 oracle", criterion_7),
        ("hjs implosion grid", criterion_8),
        ("eigenspace decomposition", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name} ({detail}; {secs:.2}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({detail}; {secs:.2}s)", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
