mod manifest;

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qrcurves_core::curves::{
    ivv_f, ivv_g, ivv_h, ivv_s, mobius_component_curve, rosay_u, CurveField, IvvMaps, MobiusMap,
};
use qrcurves_core::exterior::{comass, make_omega_sym, make_vol, make_vol_cross, ComassOptions};
use qrcurves_core::linmap::{
    classify_near_calibrated, complex_dilatation_check, distortion_volx,
    perturbation_bound_check, BlockLinearMap,
};
use qrcurves_core::verify::{
    brute_force_comass, lemma32_suite, lemma82_suite, mobius_suite, prop81_suite, SuiteConfig,
    SuiteResult,
};

use manifest::{ParamSource, RunManifest};

/// Numerics for curves calibrated by product volume forms: comass,
/// block-map distortion, the explicit counterexample constructions,
/// PL approximation, and randomized verification suites.
#[derive(Parser)]
#[command(name = "qrcurves", version = qrcurves_core::VERSION, disable_help_subcommand = true)]
struct Cli {
    /// Worker threads (default: available parallelism). Single-worker
    /// runs produce identical artifacts.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Comass of a named form, optionally cross-checked by the
    /// brute-force oracle.
    Comass(ComassArgs),
    /// Pointwise analysis of a block linear map.
    Linmap {
        #[command(subcommand)]
        sub: LinmapCmd,
    },
    /// Build or sample the named curve constructions.
    Curve {
        #[command(subcommand)]
        sub: CurveCmd,
    },
    /// Distortion field of a curve over a box grid.
    Field(FieldArgs),
    /// Piecewise-affine interpolation diagnostics on a dyadic mesh.
    Plapprox(PlArgs),
    /// Randomized verification suites.
    Verify {
        #[command(subcommand)]
        sub: VerifyCmd,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormName {
    Volx,
    OmegaSym,
    Vol,
}

#[derive(Args)]
struct ComassArgs {
    #[arg(long, value_enum)]
    form: Option<FormName>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also run the brute-force oracle at this resolution (subject to
    /// its n <= 3, m <= 6 cost guard).
    #[arg(long)]
    brute_resolution: Option<usize>,
    #[arg(long)]
    config: Option<String>,
    #[arg(long, default_value = "comass.json")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum LinmapCmd {
    /// Operator norm, pullback, distortion, and block diagnostics.
    Distortion(LinmapArgs),
    /// Near-calibrated classification (Prop. 8.1 conclusions).
    Classify(LinmapArgs),
    /// Complex dilatation premise/conclusion for planar maps.
    Dilatation(LinmapArgs),
    /// Perturbation stability bounds for a calibrated map and a
    /// perturbed copy.
    Perturb(LinmapArgs),
}

#[derive(Args)]
struct LinmapArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Row-major nk x n entries, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    entries: Option<String>,
    /// Perturbed map entries (perturb only).
    #[arg(long, allow_hyphen_values = true)]
    entries_r: Option<String>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long = "K")]
    big_k: Option<f64>,
    #[arg(long)]
    config: Option<String>,
    #[arg(long, default_value = "linmap.json")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum CurveCmd {
    /// Emit a JSON construction manifest with measured constants.
    Build {
        name: String,
        #[command(flatten)]
        spec: CurveSpec,
        #[arg(long, default_value = "curve.json")]
        out: PathBuf,
    },
    /// Emit CSV of (point, value) rows over a box grid.
    Sample {
        name: String,
        #[command(flatten)]
        spec: CurveSpec,
        /// Box corners, comma-separated.
        #[arg(long, allow_hyphen_values = true)]
        lo: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        hi: Option<String>,
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long, default_value = "curve-sample.csv")]
        out: PathBuf,
    },
}

/// Parameters of the named constructions; which ones apply depends on
/// the curve name.
#[derive(Args, Clone)]
struct CurveSpec {
    /// Distortion bound for rosay-f.
    #[arg(long = "K")]
    big_k: Option<f64>,
    /// Block count for rosay-f / mobius.
    #[arg(long)]
    blocks: Option<usize>,
    /// Cap on the Rosay starting index n0.
    #[arg(long)]
    n0_cap: Option<u32>,
    /// Cutoff profile for rosay curves: cubic or quintic.
    #[arg(long)]
    profile: Option<String>,
    /// Strip window (max strip index) for the IVV field F.
    #[arg(long)]
    window: Option<u32>,
    /// Moebius pole, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    pole: Option<String>,
    /// Moebius offset b, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    offset: Option<String>,
    /// Moebius scale c > 0.
    #[arg(long)]
    scale: Option<f64>,
    /// Moebius inversion flag: 0 (affine) or 2 (inverted).
    #[arg(long)]
    zeta: Option<u32>,
    /// Ambient dimension n for mobius.
    #[arg(long)]
    n: Option<usize>,
    /// Component slot (0-based) for the mobius component curve.
    #[arg(long)]
    index: Option<usize>,
    #[arg(long)]
    config: Option<String>,
}

#[derive(Args)]
struct FieldArgs {
    #[arg(long)]
    curve: String,
    #[command(flatten)]
    spec: CurveSpec,
    #[arg(long, allow_hyphen_values = true)]
    lo: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    hi: Option<String>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    fd_h: Option<f64>,
    #[arg(long, default_value = "field.json")]
    out: PathBuf,
    /// Optional per-point CSV.
    #[arg(long)]
    points_out: Option<PathBuf>,
}

#[derive(Args)]
struct PlArgs {
    #[arg(long)]
    curve: String,
    #[command(flatten)]
    spec: CurveSpec,
    #[arg(long, allow_hyphen_values = true)]
    lo: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    hi: Option<String>,
    /// Dyadic level j.
    #[arg(long)]
    level: Option<u32>,
    /// Subdivision scheme: barycentric or kuhn.
    #[arg(long)]
    scheme: Option<String>,
    /// Random samples per cube for the approximation error.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Consistency epsilon (default: the k-dependent bisection value).
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value = "plapprox.json")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Run a suite: prop81, lemma82, lemma32, or mobius.
    Run {
        suite: String,
        #[arg(long)]
        config: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        eps: Option<f64>,
        /// Comma-separated nu values (lemma82).
        #[arg(long)]
        nus: Option<String>,
        /// Comma-separated K values (lemma32).
        #[arg(long)]
        k_bounds: Option<String>,
        #[arg(long, default_value = "suite.json")]
        out: PathBuf,
        #[arg(long)]
        violations_out: Option<PathBuf>,
    },
}

fn parse_floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| anyhow!("bad number {t:?}: {e}")))
        .collect()
}

fn manifest_path(out: &PathBuf) -> PathBuf {
    let mut os = out.clone().into_os_string();
    os.push(".manifest.json");
    PathBuf::from(os)
}

fn write_json(path: &PathBuf, value: &impl serde::Serialize) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Some(w) = cli.workers {
        if w == 0 {
            eprintln!("error: --workers must be positive");
            std::process::exit(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("error: cannot configure {w} workers: {e}");
            std::process::exit(2);
        }
    }
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.cmd {
        Cmd::Comass(a) => cmd_comass(a, cli.workers),
        Cmd::Linmap { sub } => cmd_linmap(sub, cli.workers),
        Cmd::Curve { sub } => cmd_curve(sub, cli.workers),
        Cmd::Field(a) => cmd_field(a, cli.workers),
        Cmd::Plapprox(a) => cmd_plapprox(a, cli.workers),
        Cmd::Verify { sub } => cmd_verify(sub, cli.workers),
    }
}

fn cmd_comass(a: ComassArgs, workers: Option<usize>) -> Result<i32> {
    let src = ParamSource::load(a.config.as_deref())?;
    let mut defaults = Vec::new();
    let form_name = match a.form {
        Some(f) => f,
        None => match src.require::<String>("form", None::<String>) {
            Ok(s) => match s.as_str() {
                "volx" => FormName::Volx,
                "omega-sym" => FormName::OmegaSym,
                "vol" => FormName::Vol,
                other => bail!("unknown form {other:?} (volx, omega-sym, vol)"),
            },
            Err(_) => bail!("missing required parameter --form"),
        },
    };
    let n = src.require("n", a.n)?;
    let k = src.resolve("k", a.k, 1usize, &mut defaults)?;
    let restarts = src.resolve("restarts", a.restarts, ComassOptions::default().restarts, &mut defaults)?;
    let iterations =
        src.resolve("iterations", a.iterations, ComassOptions::default().iterations, &mut defaults)?;
    let seed = src.resolve("seed", a.seed, 0u64, &mut defaults)?;
    let (form, label) = match form_name {
        FormName::Volx => (make_vol_cross(n, k).map_err(|e| anyhow!("{e}"))?, "volx"),
        FormName::OmegaSym => (make_omega_sym(k).map_err(|e| anyhow!("{e}"))?, "omega_sym"),
        FormName::Vol => (make_vol(n), "vol"),
    };
    let res = comass(&form, &ComassOptions { restarts, iterations, seed });
    let brute = match a.brute_resolution {
        None => None,
        Some(r) => Some(brute_force_comass(&form, r).map_err(|e| anyhow!("{e}"))?),
    };
    let effective = serde_json::json!({
        "form": label, "n": n, "k": k,
        "restarts": restarts, "iterations": iterations, "seed": seed,
        "brute_resolution": a.brute_resolution,
    });
    let out_doc = serde_json::json!({
        "form": label, "n": n, "k": k,
        "value": res.value,
        "conformality_defect": res.conformality_defect,
        "frame": res.frame,
        "brute_force": brute,
    });
    write_json(&a.out, &out_doc)?;
    let mut man = RunManifest::new(effective, Some(seed), workers);
    for (name, v) in defaults {
        man.note_default(&name, v);
    }
    man.outputs.push(a.out.display().to_string());
    man.write(&manifest_path(&a.out))?;
    println!(
        "comass({label}, n={n}, k={k}) = {:.9}{}",
        res.value,
        brute.map(|b| format!(" (oracle {b:.9})")).unwrap_or_default()
    );
    Ok(0)
}

fn parse_map(n: usize, k: usize, entries: &str) -> Result<BlockLinearMap> {
    let e = parse_floats(entries)?;
    if e.len() != n * k * n {
        bail!("--entries needs {} numbers for n = {n}, k = {k}, got {}", n * k * n, e.len());
    }
    BlockLinearMap::new(n, k, e).map_err(|e| anyhow!("{e}"))
}

fn cmd_linmap(sub: LinmapCmd, workers: Option<usize>) -> Result<i32> {
    let a = match &sub {
        LinmapCmd::Distortion(a)
        | LinmapCmd::Classify(a)
        | LinmapCmd::Dilatation(a)
        | LinmapCmd::Perturb(a) => a,
    };
    let src = ParamSource::load(a.config.as_deref())?;
    let mut defaults = Vec::new();
    let n: usize = src.require("n", a.n)?;
    let k: usize = src.resolve("k", a.k, 1usize, &mut defaults)?;
    let entries: String = src.require("entries", a.entries.clone())?;
    let l = parse_map(n, k, &entries)?;
    let (doc, summary, op): (serde_json::Value, String, &str) = match &sub {
        LinmapCmd::Distortion(_) => {
            let rep = distortion_volx(&l);
            let s = format!(
                "|L| = {:.6}, pullback = {:.6}, K = {}",
                rep.op_norm,
                rep.pullback,
                rep.distortion.map(|v| format!("{v:.6}")).unwrap_or("infinite".into())
            );
            (serde_json::to_value(&rep)?, s, "distortion")
        }
        LinmapCmd::Classify(_) => {
            let eps: f64 = src.require("eps", a.eps)?;
            let rep = classify_near_calibrated(&l, eps).map_err(|e| anyhow!("{e}"))?;
            let s = format!(
                "dominating index {:?}, flags {:?}",
                rep.normalized.dominating_index, rep.normalized.bound_flags
            );
            (serde_json::to_value(&rep)?, s, "classify")
        }
        LinmapCmd::Dilatation(_) => {
            let kb: f64 = src.require("K", a.big_k)?;
            let rep = complex_dilatation_check(&l, kb).map_err(|e| anyhow!("{e}"))?;
            let s = format!(
                "ratio {:.6}, premise holds: {}, conclusion holds: {}",
                rep.ratio, rep.premise_holds, rep.conclusion_holds
            );
            (serde_json::to_value(&rep)?, s, "dilatation")
        }
        LinmapCmd::Perturb(_) => {
            let nu: f64 = src.require("nu", a.nu)?;
            let entries_r: String = src.require("entries-r", a.entries_r.clone())?;
            let r = parse_map(n, k, &entries_r)?;
            let rep = perturbation_bound_check(&l, &r, nu).map_err(|e| anyhow!("{e}"))?;
            let s = format!(
                "norm bound holds: {}, distortion bound holds: {}",
                rep.norm_holds, rep.distortion_holds
            );
            (serde_json::to_value(&rep)?, s, "perturb")
        }
    };
    write_json(&a.out, &doc)?;
    let effective = serde_json::json!({
        "op": op, "n": n, "k": k, "entries": entries,
        "eps": a.eps, "nu": a.nu, "K": a.big_k,
    });
    let mut man = RunManifest::new(effective, None, workers);
    for (name, v) in defaults {
        man.note_default(&name, v);
    }
    man.outputs.push(a.out.display().to_string());
    man.write(&manifest_path(&a.out))?;
    println!("{summary}");
    Ok(0)
}

/// Resolved curve plus the construction facts worth echoing.
struct BuiltCurve {
    field: CurveField,
    facts: serde_json::Value,
}

fn build_curve(name: &str, spec: &CurveSpec) -> Result<BuiltCurve> {
    let src = ParamSource::load(spec.config.as_deref())?;
    let mut defaults = Vec::new();
    match name {
        "mobius" => {
            let n: usize = src.resolve("n", spec.n, 3usize, &mut defaults)?;
            let k: usize = src.resolve("blocks", spec.blocks, 2usize, &mut defaults)?;
            let index: usize = src.resolve("index", spec.index, 0usize, &mut defaults)?;
            let zeta: u32 = src.resolve("zeta", spec.zeta, 2u32, &mut defaults)?;
            let scale: f64 = src.resolve("scale", spec.scale, 1.0f64, &mut defaults)?;
            let pole_s: String = src.resolve(
                "pole",
                spec.pole.clone(),
                {
                    let mut d = vec!["0".to_string(); n - 1];
                    d.push("2".into());
                    d.join(",")
                },
                &mut defaults,
            )?;
            let offset_s: String =
                src.resolve("offset", spec.offset.clone(), vec!["0"; n].join(","), &mut defaults)?;
            let pole = parse_floats(&pole_s)?;
            let offset = parse_floats(&offset_s)?;
            let mut ident = vec![0.0; n * n];
            for i in 0..n {
                ident[i * n + i] = 1.0;
            }
            let m = MobiusMap::new(n, ident, offset, pole.clone(), scale, zeta)
                .map_err(|e| anyhow!("{e}"))?;
            let field = mobius_component_curve(n, k, index, &m).map_err(|e| anyhow!("{e}"))?;
            let facts = serde_json::json!({
                "construction": "mobius_component",
                "n": n, "k": k, "index": index, "zeta": zeta, "scale": scale,
                "pole": pole,
                "orientation_flipped": field.params.get("orientation_flipped").copied().unwrap_or(0.0),
            });
            Ok(BuiltCurve { field, facts })
        }
        "rosay-u" => {
            let profile = resolve_profile(&src, spec, &mut defaults)?;
            let field = rosay_u(profile);
            let facts = serde_json::json!({
                "construction": "rosay_u",
                "profile": format!("{profile:?}"),
            });
            Ok(BuiltCurve { field, facts })
        }
        "rosay-f" => {
            let big_k: f64 = src.require("K", spec.big_k)?;
            let blocks: usize = src.resolve("blocks", spec.blocks, 2usize, &mut defaults)?;
            let cap: u32 = src.resolve("n0-cap", spec.n0_cap, 200u32, &mut defaults)?;
            let profile = resolve_profile(&src, spec, &mut defaults)?;
            let rf = qrcurves_core::curves::rosay::rosay_f_with(
                big_k, blocks, profile, cap, 10..=30, 400,
            )
            .map_err(|e| anyhow!("{e}"))?;
            let facts = serde_json::json!({
                "construction": "rosay_F",
                "K": rf.big_k, "k": rf.k, "n0": rf.n0,
                "c_hat": rf.c_hat,
                "inner_radius": rf.inner_radius(),
                "profile": format!("{profile:?}"),
            });
            Ok(BuiltCurve { field: rf.field(), facts })
        }
        "ivv-s" | "ivv-h" | "ivv-g" | "ivv-f" => {
            let window: u32 = src.resolve("window", spec.window, 12u32, &mut defaults)?;
            let maps = IvvMaps::with_window(window).map_err(|e| anyhow!("{e}"))?;
            let facts = serde_json::json!({
                "construction": name,
                "k": maps.k,
                "lipschitz": maps.l_hat,
                "jacobian_min": maps.j_hat,
                "window": window,
            });
            let field = match name {
                "ivv-s" => ivv_s(&maps),
                "ivv-h" => ivv_h(&maps),
                "ivv-g" => ivv_g(&maps),
                _ => ivv_f(&maps),
            };
            Ok(BuiltCurve { field, facts })
        }
        other => bail!(
            "unknown curve {other:?} (mobius, rosay-u, rosay-f, ivv-s, ivv-h, ivv-g, ivv-f)"
        ),
    }
}

fn resolve_profile(
    src: &ParamSource,
    spec: &CurveSpec,
    defaults: &mut Vec<(String, serde_json::Value)>,
) -> Result<qrcurves_core::curves::CutoffProfile> {
    let s: String = src.resolve("profile", spec.profile.clone(), "cubic".into(), defaults)?;
    match s.as_str() {
        "cubic" => Ok(qrcurves_core::curves::CutoffProfile::Cubic),
        "quintic" => Ok(qrcurves_core::curves::CutoffProfile::Quintic),
        other => bail!("unknown profile {other:?} (cubic, quintic)"),
    }
}

fn cmd_curve(sub: CurveCmd, workers: Option<usize>) -> Result<i32> {
    match sub {
        CurveCmd::Build { name, spec, out } => {
            let built = build_curve(&name, &spec)?;
            write_json(&out, &built.facts)?;
            let mut man = RunManifest::new(built.facts.clone(), None, workers);
            man.outputs.push(out.display().to_string());
            man.write(&manifest_path(&out))?;
            println!("built {name}: {}", built.facts);
            Ok(0)
        }
        CurveCmd::Sample { name, spec, lo, hi, resolution, out } => {
            let built = build_curve(&name, &spec)?;
            let dim = built.field.domain_dim();
            let lo = parse_floats(&lo.ok_or_else(|| anyhow!("missing required --lo"))?)?;
            let hi = parse_floats(&hi.ok_or_else(|| anyhow!("missing required --hi"))?)?;
            let resolution = resolution.unwrap_or(16);
            if lo.len() != dim || hi.len() != dim {
                bail!("--lo/--hi need {dim} coordinates for {name}");
            }
            let mut csv = String::new();
            let header: Vec<String> = (0..dim)
                .map(|i| format!("x{i}"))
                .chain((0..built.field.n * built.field.k).map(|i| format!("v{i}")))
                .collect();
            csv.push_str(&header.join(","));
            csv.push('\n');
            let mut rows = 0usize;
            let total = resolution.pow(dim as u32);
            for flat in 0..total {
                let mut p = vec![0.0; dim];
                let mut rest = flat;
                for a in (0..dim).rev() {
                    let i = rest % resolution;
                    rest /= resolution;
                    p[a] = lo[a] + (hi[a] - lo[a]) * (i as f64 + 0.5) / resolution as f64;
                }
                if let Ok(v) = built.field.eval(&p) {
                    let row: Vec<String> =
                        p.iter().chain(v.iter()).map(|x| format!("{x}")).collect();
                    csv.push_str(&row.join(","));
                    csv.push('\n');
                    rows += 1;
                }
            }
            std::fs::write(&out, csv)?;
            let effective = serde_json::json!({
                "curve": name, "facts": built.facts,
                "lo": lo, "hi": hi, "resolution": resolution,
            });
            let mut man = RunManifest::new(effective, None, workers);
            man.outputs.push(out.display().to_string());
            man.write(&manifest_path(&out))?;
            println!("sampled {rows} points of {name} into {}", out.display());
            Ok(0)
        }
    }
}

fn cmd_field(a: FieldArgs, workers: Option<usize>) -> Result<i32> {
    let built = build_curve(&a.curve, &a.spec)?;
    let dim = built.field.domain_dim();
    let lo = parse_floats(&a.lo.ok_or_else(|| anyhow!("missing required --lo"))?)?;
    let hi = parse_floats(&a.hi.ok_or_else(|| anyhow!("missing required --hi"))?)?;
    if lo.len() != dim || hi.len() != dim {
        bail!("--lo/--hi need {dim} coordinates for {}", a.curve);
    }
    let resolution = a.resolution.unwrap_or(16);
    let fd_h = a.fd_h.unwrap_or(1e-5);
    let (points, summary) =
        qrcurves_core::numdiff::distortion_field(&built.field, &lo, &hi, resolution, fd_h)
            .map_err(|e| anyhow!("{e}"))?;
    let doc = serde_json::json!({
        "curve": a.curve, "facts": built.facts,
        "lo": lo, "hi": hi, "resolution": resolution, "fd_h": fd_h,
        "summary": summary,
    });
    write_json(&a.out, &doc)?;
    let mut outputs = vec![a.out.display().to_string()];
    if let Some(pp) = &a.points_out {
        let mut csv = String::from("point,op_norm,pullback,distortion,dominating_index\n");
        for fp in &points {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                fp.point.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(";"),
                fp.report.op_norm,
                fp.report.pullback,
                fp.report.distortion.map(|v| format!("{v}")).unwrap_or("inf".into()),
                fp.report.dominating_index.map(|i| format!("{i}")).unwrap_or_default(),
            ));
        }
        std::fs::write(pp, csv)?;
        outputs.push(pp.display().to_string());
    }
    let mut man = RunManifest::new(doc.clone(), None, workers);
    if a.resolution.is_none() {
        man.note_default("resolution", resolution);
    }
    if a.fd_h.is_none() {
        man.note_default("fd-h", fd_h);
    }
    man.outputs = outputs;
    man.write(&manifest_path(&a.out))?;
    println!(
        "distortion field of {}: {} points, max K = {:.6}, min pullback = {:.3e}",
        a.curve, summary.points, summary.max_distortion, summary.min_pullback
    );
    Ok(0)
}

fn cmd_plapprox(a: PlArgs, workers: Option<usize>) -> Result<i32> {
    use qrcurves_core::plmesh::{
        adjacent_index_consistency, approximation_error, dyadic_cubes, pl_distortion_report,
        pl_interpolant, subdivide, Scheme,
    };
    let built = build_curve(&a.curve, &a.spec)?;
    let dim = built.field.domain_dim();
    let lo = parse_floats(&a.lo.ok_or_else(|| anyhow!("missing required --lo"))?)?;
    let hi = parse_floats(&a.hi.ok_or_else(|| anyhow!("missing required --hi"))?)?;
    if lo.len() != dim || hi.len() != dim {
        bail!("--lo/--hi need {dim} coordinates for {}", a.curve);
    }
    let level = a.level.unwrap_or(4);
    let scheme = match a.scheme.as_deref().unwrap_or("barycentric") {
        "barycentric" => Scheme::Barycentric,
        "kuhn" => Scheme::Kuhn,
        other => bail!("unknown scheme {other:?} (barycentric, kuhn)"),
    };
    let samples = a.samples.unwrap_or(16);
    let seed = a.seed.unwrap_or(0);
    let anchors = dyadic_cubes(&lo, &hi, level).map_err(|e| anyhow!("{e}"))?;
    let mesh = subdivide(&anchors, level, scheme).map_err(|e| anyhow!("{e}"))?;
    let pl = pl_interpolant(&built.field, &mesh).map_err(|e| anyhow!("{e}"))?;
    let err = approximation_error(&built.field, &pl, samples, seed).map_err(|e| anyhow!("{e}"))?;
    let (_, summary) = pl_distortion_report(&pl);
    let consistency = adjacent_index_consistency(&pl, a.epsilon);
    let doc = serde_json::json!({
        "curve": a.curve, "facts": built.facts,
        "lo": lo, "hi": hi, "level": level,
        "scheme": format!("{scheme:?}"), "samples": samples, "seed": seed,
        "approximation_error": err,
        "summary": summary,
        "consistency": consistency,
    });
    write_json(&a.out, &doc)?;
    let mut man = RunManifest::new(doc.clone(), Some(seed), workers);
    if a.level.is_none() {
        man.note_default("level", level);
    }
    if a.scheme.is_none() {
        man.note_default("scheme", "barycentric");
    }
    if a.samples.is_none() {
        man.note_default("samples", samples);
    }
    if a.seed.is_none() {
        man.note_default("seed", seed);
    }
    if a.epsilon.is_none() {
        man.note_default("epsilon", consistency.epsilon);
    }
    man.outputs.push(a.out.display().to_string());
    man.write(&manifest_path(&a.out))?;
    println!(
        "PL level {level}: {} simplices, error {err:.3e}, max K = {:.6}, consistent: {}",
        summary.simplices, summary.max_distortion, consistency.consistent
    );
    Ok(0)
}

fn cmd_verify(sub: VerifyCmd, workers: Option<usize>) -> Result<i32> {
    let VerifyCmd::Run {
        suite,
        config,
        n,
        k,
        trials,
        seed,
        eps,
        nus,
        k_bounds,
        out,
        violations_out,
    } = sub;
    let src = ParamSource::load(config.as_deref())?;
    let mut defaults = Vec::new();
    let n: usize = src.resolve("n", n, 3usize, &mut defaults)?;
    let k: usize = src.resolve("k", k, 2usize, &mut defaults)?;
    let trials: usize = src.resolve("trials", trials, 10_000usize, &mut defaults)?;
    let seed: u64 = src.resolve("seed", seed, 0u64, &mut defaults)?;
    let mut cfg = SuiteConfig::new(n, k, trials, seed);
    cfg.epsilon = match eps {
        Some(e) => Some(e),
        None => src.resolve("eps", None::<f64>, -1.0, &mut Vec::new()).ok().filter(|e| *e > 0.0),
    };
    if let Some(s) = nus {
        cfg.nus = parse_floats(&s)?;
    } else if let Ok(v) = src.require::<Vec<f64>>("nus", None) {
        cfg.nus = v;
    }
    if let Some(s) = k_bounds {
        cfg.k_bounds = parse_floats(&s)?;
    } else if let Ok(v) = src.require::<Vec<f64>>("k-bounds", None) {
        cfg.k_bounds = v;
    }
    let mut result: SuiteResult = match suite.as_str() {
        "prop81" => {
            if cfg.epsilon.is_none() {
                bail!("prop81 needs --eps");
            }
            prop81_suite(&cfg).map_err(|e| anyhow!("{e}"))?
        }
        "lemma82" => {
            if cfg.nus.is_empty() {
                cfg.nus = vec![0.01, 0.05, 0.1];
                defaults.push(("nus".into(), serde_json::json!(cfg.nus)));
            }
            lemma82_suite(&cfg).map_err(|e| anyhow!("{e}"))?
        }
        "lemma32" => {
            if cfg.k_bounds.is_empty() {
                cfg.k_bounds = vec![1.1, 2.0, 5.0];
                defaults.push(("k-bounds".into(), serde_json::json!(cfg.k_bounds)));
            }
            lemma32_suite(&cfg).map_err(|e| anyhow!("{e}"))?
        }
        "mobius" => mobius_suite(&cfg).map_err(|e| anyhow!("{e}"))?,
        other => bail!("unknown suite {other:?} (prop81, lemma82, lemma32, mobius)"),
    };
    let runtime_ms = result.runtime_ms;
    // wall time goes to the manifest, not the artifact, so reruns with
    // the same seed are byte-identical
    result.runtime_ms = 0;
    write_json(&out, &result)?;
    let mut outputs = vec![out.display().to_string()];
    let vpath = violations_out.unwrap_or_else(|| {
        let mut os = out.clone().into_os_string();
        os.push(".violations.csv");
        PathBuf::from(os)
    });
    std::fs::write(&vpath, result.violations_csv())?;
    outputs.push(vpath.display().to_string());
    let effective = serde_json::to_value(&cfg)?;
    let mut man = RunManifest::new(effective, Some(seed), workers);
    for (name, v) in defaults {
        man.note_default(&name, v);
    }
    man.note_default("runtime_ms", runtime_ms as u64);
    man.outputs = outputs;
    man.write(&manifest_path(&out))?;
    println!(
        "suite {suite}: {} trials, {} sampling failures, {} violations ({} ms)",
        result.trials_run,
        result.sampling_failures,
        result.violations.len(),
        runtime_ms
    );
    Ok(if result.violations.is_empty() { 0 } else { 3 })
}
