//! End-to-end acceptance checks, one test per criterion.  Each prints a
//! single pass/fail line (visible with --nocapture) and asserts.

use bouquet::catalog::FunctionSpec;
use bouquet::dynamics::{
    classify_escape, default_ladder, default_ladder_base, escape_speeds, find_attractors,
    iterate_orbit, modulus_ladder, AttractorKind, EscapeLabel,
};
use bouquet::hairs::{trace_endpoint, ExternalAddress};
use bouquet::numeric::Magnitude;
use bouquet::raster::{
    classify_a_hull_oracle, hull_mask, render_classification, separation_witness,
    spiderweb_nesting, HullLabel, HullOracleParams, RasterGrid, WebParams, WitnessParams,
    CODE_ESCAPING,
};
use bouquet::roots::{newton, BoxRegion};
use bouquet::semiconj::semiconj_residual;
use bouquet::transform::{eval_transform, TransformSetup};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn report(name: &str, pass: bool) {
    println!("criterion {name}: {}", if pass { "pass" } else { "FAIL" });
    assert!(pass, "criterion {name} failed");
}

#[test]
fn criterion_01_semiconjugacy_identity() {
    let t0 = Instant::now();
    let r = semiconj_residual(100, 5.0);
    let elapsed = t0.elapsed();
    let pass = r.samples == 10_000
        && r.max_residual < 1e-12
        && (r.origin_multiplier - (-1.0f64).exp()).abs() < 1e-12
        && elapsed.as_secs_f64() < 1.0;
    report("1 (semiconjugacy identity)", pass);
}

#[test]
fn criterion_02_transform_functional_equation() {
    let t0 = Instant::now();
    let spec = FunctionSpec::parse("expaffine:a=-2").unwrap();
    let setup = TransformSetup::new(spec.clone(), 10.0).unwrap();
    let b = Complex64::new(1.0, 0.0);
    let fb = spec.evaluate_plain(b.exp()).unwrap();
    let basevalue = Complex64::new(fb.norm().ln(), fb.arg());
    let mut worst = 0.0f64;
    let n = 1000;
    for k in 0..n {
        let t = k as f64 / (n - 1) as f64;
        // slanted segment inside the tract, staying within f64 range
        let w = b + t * Complex64::new(4.5, 0.8);
        let f_val = eval_transform(&setup, w, b, basevalue).unwrap();
        let direct = spec.evaluate_plain(w.exp()).unwrap();
        let residual = (f_val.exp() - direct).norm() / direct.norm().max(1.0);
        worst = worst.max(residual);
    }
    let elapsed = t0.elapsed();
    let pass = worst < 1e-9 && elapsed.as_secs_f64() < 5.0;
    report(
        &format!("2 (transform functional equation, residual {worst:.2e})"),
        pass,
    );
}

#[test]
fn criterion_03_fixed_point_structure() {
    let t0 = Instant::now();
    // parabolic fixed point of the unit-parameter map
    let spec1 = FunctionSpec::quad_exp(1.0).unwrap();
    let fixed = find_attractors(&spec1, &BoxRegion::around(Complex64::new(1.0, 0.0), 0.5), 1);
    let parabolic_ok = fixed.iter().any(|a| {
        (a.cycle[0] - Complex64::new(1.0, 0.0)).norm() < 1e-6
            && (a.multiplier - Complex64::new(1.0, 0.0)).norm() < 1e-10
    });

    // attracting fixed point slightly above one for lambda = 1.1
    let spec11 = FunctionSpec::quad_exp(1.1).unwrap();
    let cycles = find_attractors(&spec11, &BoxRegion::around(Complex64::new(1.15, 0.0), 0.4), 1);
    let attracting_ok = cycles.iter().any(|a| {
        a.kind == AttractorKind::Attracting
            && a.cycle[0].im.abs() < 1e-9
            && a.cycle[0].re > 1.0
            && a.cycle[0].re < 1.3
    });

    // nonzero critical values straddle 1
    let singular = spec11.singular_values(&BoxRegion::centered(5.0));
    let nonzero: Vec<f64> = singular
        .critical_values
        .iter()
        .filter(|v| v.norm() > 1e-9)
        .map(|v| v.re)
        .collect();
    let reality = singular
        .critical_values
        .iter()
        .all(|v| v.im.abs() < 1e-9);
    let p_ok = nonzero.iter().any(|&p| p > 1.0);
    let q_ok = nonzero.iter().any(|&q| q > 0.0 && q < 1.0);

    let elapsed = t0.elapsed();
    let pass = parabolic_ok && attracting_ok && reality && p_ok && q_ok
        && elapsed.as_secs_f64() < 5.0;
    report("3 (fixed-point structure)", pass);
}

#[test]
fn criterion_04_ladder_monotonicity() {
    let tokens = [
        "expaffine:a=-2",
        "fatou",
        "quadexp:lambda=1",
        "cosine",
        "scaled:base=expaffine:a=-2,L=10",
    ];
    let mut violations = 0usize;
    for token in tokens {
        let spec = FunctionSpec::parse(token).unwrap();
        let base = default_ladder_base(&spec);
        let ladder = modulus_ladder(&spec, base, 21).unwrap();
        for n in 0..20 {
            if !(ladder.levels[n + 1] > ladder.levels[n]) {
                violations += 1;
            }
        }
        // level 0 must clear the base radius
        if !(ladder.levels[0] > Magnitude::from_value(base.ln())) {
            violations += 1;
        }
    }
    report(
        &format!("4 (ladder monotonicity, {violations} violations)"),
        violations == 0,
    );
}

#[test]
fn criterion_05_classification_lattice() {
    let tokens = [
        "expaffine:a=-2",
        "fatou",
        "quadexp:lambda=1",
        "cosine",
        "scaled:base=expaffine:a=-2,L=10",
    ];
    let mut violations = 0usize;
    for token in tokens {
        let spec = FunctionSpec::parse(token).unwrap();
        let ladder = default_ladder(&spec);
        for i in 0..100 {
            for j in 0..100 {
                let z = Complex64::new(
                    -3.0 + 6.0 * (j as f64 + 0.5) / 100.0,
                    -3.0 + 6.0 * (i as f64 + 0.5) / 100.0,
                );
                let class = classify_escape(&spec, z, &ladder, 200);
                // the label partition makes exp-fast and bounded exclusive by
                // construction; verify exp-fast implies fast for these
                // finite-order families via the independent speed probes
                if let EscapeLabel::ExpFast(_) = class.label {
                    let orbit = iterate_orbit(&spec, z, 200, f64::INFINITY);
                    let mut moduli = orbit.log_moduli();
                    // direction loss happens past the representable tower, so
                    // truncated tails dominate every ladder level
                    if matches!(
                        orbit.termination,
                        bouquet::dynamics::Termination::DirectionLost { .. }
                    ) {
                        while moduli.len() < ladder.levels.len() + 9 {
                            moduli.push(Magnitude::from_value(f64::INFINITY));
                        }
                    }
                    let speeds = escape_speeds(&moduli, &ladder, 8);
                    if speeds.exp_fast_offset.is_some() && speeds.fast_offset.is_none() {
                        violations += 1;
                    }
                }
            }
        }
    }
    report(
        &format!("5 (classification lattice, {violations} violations)"),
        violations == 0,
    );
}

#[test]
fn criterion_06_fatou_slow_escape() {
    let spec = FunctionSpec::parse("fatou").unwrap();
    let ladder = default_ladder(&spec);
    let class = classify_escape(&spec, Complex64::new(100.0, 0.0), &ladder, 400);
    let again = classify_escape(&spec, Complex64::new(100.0, 0.0), &ladder, 400);
    let pass = class.label == EscapeLabel::EscapingNotFast && again.label == class.label;
    report("6 (slow escape of the translation-type map)", pass);
}

fn figure_window(width: usize, height: usize) -> RasterGrid {
    RasterGrid::new(
        Complex64::new(-0.35, 1.2),
        Complex64::new(2.23, -1.2),
        width,
        height,
    )
}

fn attracting_only(spec: &FunctionSpec) -> Vec<bouquet::dynamics::Attractor> {
    find_attractors(spec, &BoxRegion::new(-0.35, 2.23, -1.2, 1.2), 2)
        .into_iter()
        .filter(|a| {
            matches!(
                a.kind,
                AttractorKind::Attracting | AttractorKind::Superattracting
            )
        })
        .collect()
}

#[test]
fn criterion_07_figure_regression() {
    let mut pass = true;
    for lambda in [0.995, 1.0, 1.1] {
        let t0 = Instant::now();
        let spec = FunctionSpec::quad_exp(lambda).unwrap();
        let attractors = attracting_only(&spec);
        let grid = render_classification(&spec, &figure_window(800, 667), &attractors, 200);
        let mut basin_codes: Vec<u8> = grid
            .labels
            .iter()
            .copied()
            .filter(|&c| c >= 2)
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        basin_codes.dedup();
        if lambda == 0.995 && basin_codes.len() != 1 {
            pass = false;
        }
        if lambda == 1.1 {
            if basin_codes.len() != 2 {
                pass = false;
            }
            // the immediate non-origin basin stays away from the frame; the
            // full basin has preimages near the frame, so test the connected
            // component around the fixed point
            let non_origin = attractors
                .iter()
                .position(|a| a.cycle[0].norm() > 1e-6)
                .map(|idx| (2 + idx as u8, attractors[idx].cycle[0]));
            match non_origin {
                Some((code, fp)) => {
                    let mask: Vec<bool> = grid.labels.iter().map(|&c| c == code).collect();
                    let component = component_containing(&grid, &mask, fp);
                    let hull = hull_mask(&component, grid.width, grid.height);
                    if component.iter().all(|&b| !b) || grid.mask_touches_frame(&hull) {
                        pass = false;
                    }
                }
                None => pass = false,
            }
        }
        // resolution stability of the escaping fraction
        let double = render_classification(&spec, &figure_window(1600, 1334), &attractors, 200);
        let delta =
            (grid.fraction_of(CODE_ESCAPING) - double.fraction_of(CODE_ESCAPING)).abs();
        if delta >= 0.02 {
            pass = false;
        }
        if t0.elapsed().as_secs_f64() >= 30.0 {
            pass = false;
        }
    }
    report("7 (figure regression)", pass);
}

fn component_containing(grid: &RasterGrid, mask: &[bool], point: Complex64) -> Vec<bool> {
    let mut out = vec![false; mask.len()];
    let Some((qi, qj)) = grid.pixel_of(point) else {
        return out;
    };
    if !mask[qi * grid.width + qj] {
        return out;
    }
    let mut queue = std::collections::VecDeque::from([(qi, qj)]);
    out[qi * grid.width + qj] = true;
    while let Some((i, j)) = queue.pop_front() {
        for (ni, nj) in [
            (i.wrapping_sub(1), j),
            (i + 1, j),
            (i, j.wrapping_sub(1)),
            (i, j + 1),
        ] {
            if ni < grid.height && nj < grid.width {
                let k = ni * grid.width + nj;
                if mask[k] && !out[k] {
                    out[k] = true;
                    queue.push_back((ni, nj));
                }
            }
        }
    }
    out
}

#[test]
fn criterion_08_hair_endpoint_and_equivariance() {
    let a = Complex64::new(-2.0, 0.0);
    // independent target: the positive root of e^x = x + 2
    let root = newton(
        |z| z.exp() - z - Complex64::new(2.0, 0.0),
        |z| z.exp() - Complex64::new(1.0, 0.0),
        Complex64::new(1.0, 0.0),
        1e-14,
        60,
    )
    .unwrap();
    let zero = ExternalAddress::parse("0").unwrap();
    let (endpoint, _) = trace_endpoint(a, &zero, 60).unwrap();
    let endpoint_ok = (endpoint - root).norm() < 1e-8 && root.re > 0.0;

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut equivariance_ok = true;
    for _ in 0..20 {
        let period = rng.gen_range(1..=4usize);
        let entries: Vec<i64> = (0..period).map(|_| rng.gen_range(-3..=3)).collect();
        let address = ExternalAddress::parse(
            &entries
                .iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join(","),
        )
        .unwrap();
        let (e_s, _) = trace_endpoint(a, &address, 60).unwrap();
        let (e_shift, _) = trace_endpoint(a, &address.shift(), 60).unwrap();
        let image = spec_eval(a, e_s);
        if (image - e_shift).norm() >= 1e-6 {
            equivariance_ok = false;
        }
    }
    report(
        "8 (hair endpoint and shift equivariance)",
        endpoint_ok && equivariance_ok,
    );
}

fn spec_eval(a: Complex64, z: Complex64) -> Complex64 {
    FunctionSpec::ExpAffine { a }.evaluate_plain(z).unwrap()
}

#[test]
fn criterion_09_oracle_equivalence() {
    let t0 = Instant::now();
    let spec = FunctionSpec::parse("expaffine:a=-2").unwrap();
    let ladder = default_ladder(&spec);
    let params = HullOracleParams::for_exp_affine_minus_two();
    let mut samples = Vec::with_capacity(1000);
    for i in 0..25 {
        for j in 0..40 {
            samples.push(Complex64::new(
                -3.0 + 10.0 * (j as f64 + 0.5) / 40.0,
                -3.0 + 6.0 * (i as f64 + 0.5) / 25.0,
            ));
        }
    }
    let hull_labels = classify_a_hull_oracle(&spec, &params, &samples).unwrap();
    let mut decided = 0usize;
    let mut agree = 0usize;
    for (z, hull) in samples.iter().zip(hull_labels.iter()) {
        let ladder_label = classify_escape(&spec, *z, &ladder, 200).label;
        if ladder_label == EscapeLabel::Undecided {
            continue;
        }
        // the hull oracle only certifies the fast class, so the mutually
        // decided set is where it commits and the ladder also commits
        if let HullLabel::FastEscaping { .. } = hull {
            decided += 1;
            if matches!(
                ladder_label,
                EscapeLabel::FastEscaping(_) | EscapeLabel::ExpFast(_)
            ) {
                agree += 1;
            }
        }
    }
    let fraction = agree as f64 / decided.max(1) as f64;
    let elapsed = t0.elapsed();
    let pass = decided >= 100 && fraction >= 0.99 && elapsed.as_secs_f64() < 30.0;
    report(
        &format!("9 (oracle equivalence, {agree}/{decided} agree)"),
        pass,
    );
}

#[test]
fn criterion_10_spiderweb_nesting() {
    let t0 = Instant::now();
    let spec = FunctionSpec::quad_exp(0.5).unwrap();
    let seed_center = find_attractors(&spec, &BoxRegion::centered(4.0), 1)
        .into_iter()
        .filter(|a| a.kind == AttractorKind::Repelling)
        .map(|a| a.cycle[0])
        .min_by(|p, q| p.norm().partial_cmp(&q.norm()).unwrap())
        .unwrap();
    let params = WebParams {
        seed_center,
        seed_radius: 0.05,
        radii: vec![1.0, 2.0, 4.0],
        n_max: 24,
        top_left: Complex64::new(-6.0, 6.0),
        bottom_right: Complex64::new(6.0, -6.0),
        width: 512,
        height: 512,
    };
    let web = spiderweb_nesting(&spec, &params).unwrap();
    let increasing = web.levels.windows(2).all(|p| p[0].0 < p[1].0);
    let elapsed = t0.elapsed();
    let pass = web.levels.len() == 3
        && increasing
        && web.nesting_ok
        && web.boundary_in_image
        && elapsed.as_secs_f64() < 60.0;
    report(
        &format!("10 (spider's-web nesting, levels {:?})", web.levels),
        pass,
    );
}

fn witness_setup() -> (TransformSetup, WitnessParams) {
    let spec = FunctionSpec::parse("scaled:base=expaffine:a=-2,L=10").unwrap();
    let fixed = find_attractors(&spec, &BoxRegion::centered(6.0), 1)
        .into_iter()
        .filter(|a| a.kind == AttractorKind::Repelling)
        .map(|a| a.cycle[0])
        .min_by(|p, q| p.norm().partial_cmp(&q.norm()).unwrap())
        .unwrap();
    let setup = TransformSetup::new(spec, 1.0).unwrap();
    let params = WitnessParams {
        eps: 0.1,
        r_prime: 20.0,
        k_depth: 12,
        query: fixed.ln(),
        top_left: Complex64::new(-2.0, 4.0),
        bottom_right: Complex64::new(30.0, -4.0),
        width: 1024,
        height: 1024,
    };
    (setup, params)
}

#[test]
fn criterion_11_separation_witness() {
    let (setup, params) = witness_setup();
    let (_, island) = separation_witness(&setup, &params).unwrap();
    let pass = island.bounded && island.boundary_in_b && island.pixel_count > 0;
    report(
        &format!("11 (separation witness, {} island pixels)", island.pixel_count),
        pass,
    );
}

#[test]
fn criterion_12_determinism() {
    use std::process::Command;
    let bin = env!("CARGO_BIN_EXE_bouquet");
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, tag: &str| -> Vec<Vec<u8>> {
        let render = dir.path().join(format!("render-{tag}.ppm"));
        let web = dir.path().join(format!("web-{tag}.json"));
        let witness = dir.path().join(format!("witness-{tag}.ppm"));
        let invocations: [Vec<&str>; 3] = [
            vec![
                "render", "--spec", "quadexp:lambda=1.1", "--out",
                render.to_str().unwrap(),
            ],
            vec![
                "web", "--spec", "quadexp:lambda=0.5", "--out", web.to_str().unwrap(),
            ],
            vec![
                "witness", "--spec", "scaled:base=expaffine:a=-2,L=10", "--res", "512x512",
                "--out", witness.to_str().unwrap(),
            ],
        ];
        for args in &invocations {
            let status = Command::new(bin)
                .args(args)
                .env("RAYON_NUM_THREADS", threads)
                .status()
                .unwrap();
            assert!(status.success(), "{args:?} failed");
        }
        [render, web, witness]
            .iter()
            .map(|p| std::fs::read(p).unwrap())
            .collect()
    };
    let single = run("1", "single");
    let multi = run("4", "multi");
    let cli_ok = single == multi;

    // the hull oracle has no file artifact; two in-process runs must agree
    let spec = FunctionSpec::parse("expaffine:a=-2").unwrap();
    let params = HullOracleParams::for_exp_affine_minus_two();
    let pts = [Complex64::new(10.0, 0.0), Complex64::new(0.2, 1.0)];
    let a = classify_a_hull_oracle(&spec, &params, &pts).unwrap();
    let b = classify_a_hull_oracle(&spec, &params, &pts).unwrap();
    let oracle_ok = a == b;

    report("12 (determinism)", cli_ok && oracle_ok);
}
