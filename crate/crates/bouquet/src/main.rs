//! Command-line entry point: reproducible renders, classifications, tract
//! traces, hair traces, web and witness rasters, each with a JSON manifest.

use bouquet::catalog::{parse_complex, FunctionSpec};
use bouquet::dynamics::{
    classify_escape, default_ladder, find_attractors, modulus_ladder, AttractorKind,
    DEFAULT_BUDGET,
};
use bouquet::hairs::{classify_endpoint, trace_hair, ExternalAddress};
use bouquet::raster::{
    render_classification, separation_witness, spiderweb_nesting, BasinPalette, RasterGrid,
    WebParams, WitnessParams, CODE_B,
};
use bouquet::roots::BoxRegion;
use bouquet::semiconj::semiconj_residual;
use bouquet::transform::{
    check_disjoint_type, estimate_geometry, estimate_normalization_shift, trace_tract_boundary,
    TransformSetup,
};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::json;
use std::fmt::Debug;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "bouquet", version, about = "escape-speed and tract analysis for entire functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify a pixel window into basins, escaping set and remainder; write a PPM.
    Render(Common),
    /// Escape-speed labels for a sample grid; write JSON-Lines.
    Classify(Common),
    /// Iterated maximum-modulus ladder levels; write JSON-Lines.
    Ladder(Common),
    /// Periodic cycles with multipliers in a search box; write JSON-Lines.
    Attractors(Common),
    /// Trace a logarithmic tract boundary and fit its geometry.
    Tracts(Common),
    /// Trace one hair by external address and classify its endpoint.
    Hair(HairArgs),
    /// Nested hulls of forward disc images; write a report.
    Web(WebArgs),
    /// Ladder separation raster in log coordinates; write a PPM and report.
    Witness(Common),
    /// Check the projection identity for the translation-type map.
    SemiconjCheck(SemiArgs),
}

#[derive(Args, Clone, Debug, Default)]
struct Common {
    /// Catalog token, e.g. expaffine:a=-2 or quadexp:lambda=1.1
    #[arg(long)]
    spec: Option<String>,
    /// Window re,im:re,im (top-left : bottom-right)
    #[arg(long)]
    window: Option<String>,
    /// Resolution WxH
    #[arg(long)]
    res: Option<String>,
    /// Iteration budget per point
    #[arg(long)]
    budget: Option<usize>,
    /// Excluded-disc radius for transform setups
    #[arg(long)]
    rho: Option<f64>,
    /// Ladder growth rate for the witness
    #[arg(long)]
    eps: Option<f64>,
    /// Ladder base level for the witness
    #[arg(long)]
    rprime: Option<f64>,
    /// Depth: ladder levels, max period, pullback depth, or witness depth
    #[arg(long)]
    depth: Option<usize>,
    /// Primary artifact path; a .manifest.json is written alongside
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for sampled subcommands
    #[arg(long)]
    seed: Option<u64>,
    /// key=value defaults file; explicit flags override
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Clone, Debug)]
struct HairArgs {
    #[command(flatten)]
    common: Common,
    /// External address, "pre|periodic" or a bare periodic block
    #[arg(long, default_value = "0")]
    address: String,
}

#[derive(Args, Clone, Debug)]
struct WebArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated disc radii that must be enclosed
    #[arg(long, default_value = "1,2,4")]
    radii: String,
}

#[derive(Args, Clone, Debug)]
struct SemiArgs {
    #[command(flatten)]
    common: Common,
    /// Projection exponent; only -1 is supported
    #[arg(long, default_value = "-1")]
    a: String,
    /// Samples per grid side
    #[arg(long, default_value_t = 100)]
    samples: usize,
}

enum AppError {
    Usage(String),
    Domain(String),
}

fn usage(msg: impl Into<String>) -> AppError {
    AppError::Usage(msg.into())
}

/// Domain errors carry the module error variant name verbatim.
fn domain<E: Debug + std::fmt::Display>(e: E) -> AppError {
    let dbg = format!("{e:?}");
    let name: String = dbg
        .chars()
        .take_while(|c| c.is_alphanumeric() || *c == '_')
        .collect();
    AppError::Domain(format!("{name}: {e}"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help/version are not errors
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(1)
        }
        Err(AppError::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// Fill unset options from a key=value config file.
fn merge_config(common: &mut Common) -> Result<(), AppError> {
    let Some(path) = &common.config else {
        return Ok(());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("bad config line: {line}")))?;
        let (key, value) = (key.trim(), value.trim());
        let parse_usize =
            |v: &str| v.parse::<usize>().map_err(|_| usage(format!("bad {key}: {v}")));
        let parse_f64 = |v: &str| v.parse::<f64>().map_err(|_| usage(format!("bad {key}: {v}")));
        match key {
            "spec" => drop(common.spec.get_or_insert_with(|| value.to_string())),
            "window" => drop(common.window.get_or_insert_with(|| value.to_string())),
            "res" => drop(common.res.get_or_insert_with(|| value.to_string())),
            "budget" => drop(common.budget.get_or_insert(parse_usize(value)?)),
            "rho" => drop(common.rho.get_or_insert(parse_f64(value)?)),
            "eps" => drop(common.eps.get_or_insert(parse_f64(value)?)),
            "rprime" => drop(common.rprime.get_or_insert(parse_f64(value)?)),
            "depth" => drop(common.depth.get_or_insert(parse_usize(value)?)),
            "out" => drop(common.out.get_or_insert_with(|| PathBuf::from(value))),
            "seed" => drop(common.seed.get_or_insert(
                value
                    .parse::<u64>()
                    .map_err(|_| usage(format!("bad seed: {value}")))?,
            )),
            other => return Err(usage(format!("unknown config key: {other}"))),
        }
    }
    Ok(())
}

fn parse_window(s: &str) -> Result<(Complex64, Complex64), AppError> {
    let (tl, br) = s
        .split_once(':')
        .ok_or_else(|| usage(format!("window must be re,im:re,im, got {s}")))?;
    let corner = |part: &str| -> Result<Complex64, AppError> {
        let (re, im) = part
            .split_once(',')
            .ok_or_else(|| usage(format!("window corner must be re,im, got {part}")))?;
        Ok(Complex64::new(
            re.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("bad coordinate: {re}")))?,
            im.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("bad coordinate: {im}")))?,
        ))
    };
    let (tl, br) = (corner(tl)?, corner(br)?);
    if tl.re >= br.re || tl.im <= br.im {
        return Err(usage(format!("window corners out of order: {s}")));
    }
    Ok((tl, br))
}

fn parse_res(s: &str) -> Result<(usize, usize), AppError> {
    let (w, h) = s
        .split_once('x')
        .ok_or_else(|| usage(format!("res must be WxH, got {s}")))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| usage(format!("bad resolution: {v}")))
    };
    Ok((parse(w)?, parse(h)?))
}

fn required_spec(common: &Common) -> Result<FunctionSpec, AppError> {
    let token = common
        .spec
        .as_deref()
        .ok_or_else(|| usage("--spec is required"))?;
    FunctionSpec::parse(token).map_err(domain)
}

fn write_manifest(out: &Path, manifest: serde_json::Value) -> Result<(), AppError> {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    let path = out.with_file_name(name);
    std::fs::write(&path, serde_json::to_string_pretty(&manifest).unwrap())
        .map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn write_lines(out: &Path, lines: &[String]) -> Result<(), AppError> {
    let mut buf = Vec::new();
    for line in lines {
        writeln!(buf, "{line}").unwrap();
    }
    std::fs::write(out, buf).map_err(|e| usage(format!("cannot write {}: {e}", out.display())))
}

fn run(command: Command) -> Result<(), AppError> {
    match command {
        Command::Render(mut c) => {
            merge_config(&mut c)?;
            run_render(&c)
        }
        Command::Classify(mut c) => {
            merge_config(&mut c)?;
            run_classify(&c)
        }
        Command::Ladder(mut c) => {
            merge_config(&mut c)?;
            run_ladder(&c)
        }
        Command::Attractors(mut c) => {
            merge_config(&mut c)?;
            run_attractors(&c)
        }
        Command::Tracts(mut c) => {
            merge_config(&mut c)?;
            run_tracts(&c)
        }
        Command::Hair(mut a) => {
            merge_config(&mut a.common)?;
            run_hair(&a)
        }
        Command::Web(mut a) => {
            merge_config(&mut a.common)?;
            run_web(&a)
        }
        Command::Witness(mut c) => {
            merge_config(&mut c)?;
            run_witness(&c)
        }
        Command::SemiconjCheck(mut a) => {
            merge_config(&mut a.common)?;
            run_semiconj(&a)
        }
    }
}

fn search_box(tl: Complex64, br: Complex64) -> BoxRegion {
    BoxRegion::new(tl.re, br.re, br.im, tl.im)
}

fn run_render(c: &Common) -> Result<(), AppError> {
    let spec = required_spec(c)?;
    let (tl, br) = parse_window(c.window.as_deref().unwrap_or("-0.35,1.2:2.23,-1.2"))?;
    let (w, h) = parse_res(c.res.as_deref().unwrap_or("800x667"))?;
    let budget = c.budget.unwrap_or(DEFAULT_BUDGET);
    let out = c.out.clone().unwrap_or_else(|| PathBuf::from("render.ppm"));

    let attractors: Vec<_> = find_attractors(&spec, &search_box(tl, br), 2)
        .into_iter()
        .filter(|a| {
            matches!(
                a.kind,
                AttractorKind::Attracting | AttractorKind::Superattracting
            )
        })
        .collect();
    let template = RasterGrid::new(tl, br, w, h);
    let grid = render_classification(&spec, &template, &attractors, budget);
    let palette = BasinPalette;
    grid.write_ppm(&out, |code| palette.color(code))
        .map_err(|e| usage(format!("cannot write {}: {e}", out.display())))?;
    write_manifest(
        &out,
        json!({
            "command": "render",
            "spec": spec.token(),
            "window": { "top_left": [tl.re, tl.im], "bottom_right": [br.re, br.im] },
            "res": [w, h],
            "budget": budget,
            "legend": grid.legend,
            "attractors": attractors,
            "escaping_fraction": grid.fraction_of(bouquet::raster::CODE_ESCAPING),
        }),
    )
}

fn run_classify(c: &Common) -> Result<(), AppError> {
    let spec = required_spec(c)?;
    let (tl, br) = parse_window(c.window.as_deref().unwrap_or("-3,3:3,-3"))?;
    let (w, h) = parse_res(c.res.as_deref().unwrap_or("32x32"))?;
    let budget = c.budget.unwrap_or(DEFAULT_BUDGET);
    let out = c
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("classify.jsonl"));

    let ladder = default_ladder(&spec);
    let grid = RasterGrid::new(tl, br, w, h);
    let mut lines = Vec::with_capacity(w * h);
    for i in 0..h {
        for j in 0..w {
            let z = grid.center(i, j);
            lines.push(classify_escape(&spec, z, &ladder, budget).report_line(z));
        }
    }
    write_lines(&out, &lines)?;
    write_manifest(
        &out,
        json!({
            "command": "classify",
            "spec": spec.token(),
            "window": { "top_left": [tl.re, tl.im], "bottom_right": [br.re, br.im] },
            "res": [w, h],
            "budget": budget,
            "ladder_base": ladder.r,
            "samples": w * h,
        }),
    )
}

fn run_ladder(c: &Common) -> Result<(), AppError> {
    let spec = required_spec(c)?;
    let depth = c.depth.unwrap_or(20);
    let out = c
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("ladder.jsonl"));
    let base = bouquet::dynamics::default_ladder_base(&spec);
    let ladder = modulus_ladder(&spec, base, depth).map_err(domain)?;
    let mut lines = vec![json!({
        "r": ladder.r,
        "validity_floor": ladder.validity_floor,
        "depth": depth,
    })
    .to_string()];
    for (n, level) in ladder.levels.iter().enumerate() {
        lines.push(
            json!({ "n": n + 1, "log_level": level })
                .to_string(),
        );
    }
    write_lines(&out, &lines)?;
    write_manifest(
        &out,
        json!({ "command": "ladder", "spec": spec.token(), "r": base, "depth": depth }),
    )
}

fn run_attractors(c: &Common) -> Result<(), AppError> {
    let spec = required_spec(c)?;
    let (tl, br) = parse_window(c.window.as_deref().unwrap_or("-4,4:4,-4"))?;
    let max_period = c.depth.unwrap_or(3);
    let out = c
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("attractors.jsonl"));
    let found = find_attractors(&spec, &search_box(tl, br), max_period);
    let lines: Vec<String> = found
        .iter()
        .map(|a| serde_json::to_string(a).unwrap())
        .collect();
    write_lines(&out, &lines)?;
    write_manifest(
        &out,
        json!({
            "command": "attractors",
            "spec": spec.token(),
            "window": { "top_left": [tl.re, tl.im], "bottom_right": [br.re, br.im] },
            "max_period": max_period,
            "count": found.len(),
        }),
    )
}

/// Find a real seed on the level curve by scanning and bisecting the level
/// function along the real axis.
fn real_axis_seed(setup: &TransformSetup) -> Option<Complex64> {
    let mut prev: Option<(f64, f64)> = None;
    let mut x = -3.0;
    while x <= 6.0 {
        let level = setup.level(Complex64::new(x, 0.0));
        if level.is_finite() {
            if let Some((px, pl)) = prev {
                if pl < 0.0 && level > 0.0 {
                    let (mut lo, mut hi) = (px, x);
                    for _ in 0..80 {
                        let mid = 0.5 * (lo + hi);
                        if setup.level(Complex64::new(mid, 0.0)) > 0.0 {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    return Some(Complex64::new(0.5 * (lo + hi), 0.0));
                }
            }
            prev = Some((x, level));
        }
        x += 0.01;
    }
    None
}

fn run_tracts(c: &Common) -> Result<(), AppError> {
    let spec = required_spec(c)?;
    let rho = c.rho.unwrap_or(10.0);
    let arclength = c.budget.unwrap_or(60) as f64;
    let out = c
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("tract.jsonl"));
    let mut setup = TransformSetup::new(spec.clone(), rho).map_err(domain)?;
    let seed = real_axis_seed(&setup)
        .ok_or_else(|| AppError::Domain("Inconclusive: no level crossing on the real axis".into()))?;
    let tract = trace_tract_boundary(&setup, seed, arclength).map_err(domain)?;
    let tract = estimate_geometry(&tract, 400);
    setup.normalization_shift = estimate_normalization_shift(&setup, &tract);
    // absence of an attracting cycle is a negative finding, not a failure
    let disjoint = check_disjoint_type(&setup, std::slice::from_ref(&tract)).ok();
    let mut lines = vec![json!({
        "seed": [seed.re, seed.im],
        "rho": rho,
        "slope_fit": tract.slope_fit,
        "wiggling_fit": tract.wiggling_fit,
        "complete": tract.complete,
        "normalization_shift": setup.normalization_shift,
        "disjoint_type": disjoint,
    })
    .to_string()];
    for p in &tract.boundary {
        lines.push(json!([p.re, p.im]).to_string());
    }
    write_lines(&out, &lines)?;
    write_manifest(
        &out,
        json!({
            "command": "tracts",
            "spec": spec.token(),
            "rho": rho,
            "arclength": arclength,
            "boundary_points": tract.boundary.len(),
        }),
    )
}

fn run_hair(a: &HairArgs) -> Result<(), AppError> {
    let c = &a.common;
    let spec = required_spec(c)?;
    let FunctionSpec::ExpAffine { a: param } = spec else {
        return Err(AppError::Domain(
            "UnsupportedParameter: hairs are traced for expaffine only".into(),
        ));
    };
    let depth = c.depth.unwrap_or(40);
    let out = c.out.clone().unwrap_or_else(|| PathBuf::from("hair.jsonl"));
    let address = ExternalAddress::parse(&a.address).map_err(domain)?;
    let hair = trace_hair(param, &address, depth, 64).map_err(domain)?;
    let ladder = default_ladder(&spec);
    let class = classify_endpoint(param, &hair, &ladder);
    let mut lines = vec![json!({
        "address": a.address,
        "endpoint": [hair.endpoint.re, hair.endpoint.im],
        "convergence_gap": hair.convergence_gap,
        "endpoint_label": class.label.as_str(),
    })
    .to_string()];
    for p in &hair.samples {
        lines.push(json!([p.re, p.im]).to_string());
    }
    write_lines(&out, &lines)?;
    write_manifest(
        &out,
        json!({
            "command": "hair",
            "spec": spec.token(),
            "address": a.address,
            "depth": depth,
            "samples": hair.samples.len(),
        }),
    )
}

/// Repelling fixed point closest to the origin, used to seed web discs.
fn repelling_fixed_point(spec: &FunctionSpec, half_width: f64) -> Option<Complex64> {
    find_attractors(spec, &BoxRegion::centered(half_width), 1)
        .into_iter()
        .filter(|a| a.kind == AttractorKind::Repelling)
        .map(|a| a.cycle[0])
        .min_by(|p, q| p.norm().partial_cmp(&q.norm()).unwrap())
}

fn run_web(a: &WebArgs) -> Result<(), AppError> {
    let c = &a.common;
    let spec = required_spec(c)?;
    let (tl, br) = parse_window(c.window.as_deref().unwrap_or("-6,6:6,-6"))?;
    let (w, h) = parse_res(c.res.as_deref().unwrap_or("512x512"))?;
    let n_max = c.depth.unwrap_or(24);
    let out = c.out.clone().unwrap_or_else(|| PathBuf::from("web.json"));
    let radii: Vec<f64> = a
        .radii
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("bad radius: {s}")))
        })
        .collect::<Result<_, _>>()?;
    let seed_center = repelling_fixed_point(&spec, 4.0)
        .ok_or_else(|| AppError::Domain("NotFound: no repelling fixed point to seed from".into()))?;
    let params = WebParams {
        seed_center,
        seed_radius: 0.05,
        radii: radii.clone(),
        n_max,
        top_left: tl,
        bottom_right: br,
        width: w,
        height: h,
    };
    let report = spiderweb_nesting(&spec, &params).map_err(domain)?;
    std::fs::write(&out, serde_json::to_string_pretty(&report).unwrap())
        .map_err(|e| usage(format!("cannot write {}: {e}", out.display())))?;
    write_manifest(
        &out,
        json!({
            "command": "web",
            "spec": spec.token(),
            "window": { "top_left": [tl.re, tl.im], "bottom_right": [br.re, br.im] },
            "res": [w, h],
            "n_max": n_max,
            "radii": radii,
            "seed_center": [seed_center.re, seed_center.im],
            "seed_radius": 0.05,
        }),
    )
}

fn run_witness(c: &Common) -> Result<(), AppError> {
    let spec = required_spec(c)?;
    let rho = c.rho.unwrap_or(1.0);
    let eps = c.eps.unwrap_or(0.1);
    let r_prime = c.rprime.unwrap_or(20.0);
    let k_depth = c.depth.unwrap_or(12);
    let (tl, br) = parse_window(c.window.as_deref().unwrap_or("-2,4:30,-4"))?;
    let (w, h) = parse_res(c.res.as_deref().unwrap_or("1024x1024"))?;
    let out = c
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("witness.ppm"));
    let setup = TransformSetup::new(spec.clone(), rho).map_err(domain)?;
    let fixed = repelling_fixed_point(&spec, 6.0)
        .ok_or_else(|| AppError::Domain("NotFound: no repelling fixed point to lift".into()))?;
    let query = fixed.ln();
    let params = WitnessParams {
        eps,
        r_prime,
        k_depth,
        query,
        top_left: tl,
        bottom_right: br,
        width: w,
        height: h,
    };
    let (grid, island) = separation_witness(&setup, &params).map_err(domain)?;
    grid.write_ppm(&out, |code| {
        if code == CODE_B {
            [0, 0, 0]
        } else {
            let shade = 255u8.saturating_sub(code.saturating_mul(16));
            [255, shade, 64]
        }
    })
    .map_err(|e| usage(format!("cannot write {}: {e}", out.display())))?;
    write_manifest(
        &out,
        json!({
            "command": "witness",
            "spec": spec.token(),
            "rho": rho,
            "eps": eps,
            "rprime": r_prime,
            "depth": k_depth,
            "window": { "top_left": [tl.re, tl.im], "bottom_right": [br.re, br.im] },
            "res": [w, h],
            "query": [query.re, query.im],
            "island": island,
        }),
    )
}

fn run_semiconj(a: &SemiArgs) -> Result<(), AppError> {
    let exponent = parse_complex(&a.a).map_err(domain)?;
    if (exponent - Complex64::new(-1.0, 0.0)).norm() > 1e-12 {
        return Err(AppError::Domain(
            "UnsupportedParameter: only a = -1 has a built-in projected map".into(),
        ));
    }
    let out = a
        .common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("semiconj.json"));
    let report = semiconj_residual(a.samples, 5.0);
    println!("max residual {:.3e} over {} samples", report.max_residual, report.samples);
    std::fs::write(&out, serde_json::to_string_pretty(&report).unwrap())
        .map_err(|e| usage(format!("cannot write {}: {e}", out.display())))?;
    write_manifest(
        &out,
        json!({ "command": "semiconj-check", "a": a.a, "samples_per_side": a.samples }),
    )
}
