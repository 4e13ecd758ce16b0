use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::Args;
use num_complex::Complex64;

use gridmor::mor::{
    build_rom, check_model_hash, default_angle_tol, load_rom, save_rom, EnrichMode, ReducedModel,
    RomBuildOptions, SorIrkaOptions,
};
use gridmor::netmodel::{
    generate_network, load_model, parse_matpower_case, save_model, BusOverride, GeneratorConfig,
    MatpowerDefaults, NetworkKind, NetworkModel, ParameterSpace, SecondOrderModel,
};
use gridmor::sysops::{realize, FreqGrid};
use gridmor::validate::{certify, convergence_study, sweep, CertTolerances, GridSpec, SweepOptions};

type Model = SecondOrderModel<f64>;

// ---------------------------------------------------------------- helpers

fn parse_f64_list(s: &str) -> anyhow::Result<Vec<f64>> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("malformed number '{tok}'"))
        })
        .collect()
}

fn parse_usize_list(s: &str) -> anyhow::Result<Vec<usize>> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<usize>()
                .map_err(|_| anyhow!("malformed integer '{tok}'"))
        })
        .collect()
}

fn parse_range(s: &str) -> anyhow::Result<(f64, f64)> {
    let v = parse_f64_list(s)?;
    if v.len() != 2 {
        bail!("expected 'lo,hi', got '{s}'");
    }
    Ok((v[0], v[1]))
}

/// Shared block-structure flags.
#[derive(Args, Debug)]
pub struct BlockArgs {
    /// Number of equal parameter blocks (default: one parameter per node)
    #[arg(long, conflicts_with = "block_sizes")]
    nu: Option<usize>,
    /// Explicit block sizes, e.g. "100,100"
    #[arg(long)]
    block_sizes: Option<String>,
    /// Half-width of the parameter box around 1
    #[arg(long, default_value_t = 0.15)]
    alpha: f64,
}

impl BlockArgs {
    fn param_space(&self, n: usize) -> anyhow::Result<ParameterSpace<f64>> {
        let sizes = if let Some(spec) = &self.block_sizes {
            parse_usize_list(spec)?
        } else if let Some(nu) = self.nu {
            if nu == 0 || nu > n {
                bail!("--nu must be between 1 and n = {n}");
            }
            let mut sizes = vec![n / nu; nu];
            *sizes.last_mut().unwrap() += n % nu;
            sizes
        } else {
            vec![1; n]
        };
        Ok(ParameterSpace::around_unity(sizes, self.alpha)?)
    }
}

/// Shared input/output map flags.
#[derive(Args, Debug)]
pub struct IoArgs {
    /// Input/output shape: "siso" (node 0) or "identity"
    #[arg(long)]
    io: Option<String>,
    /// Explicit input node indices, e.g. "0,5"
    #[arg(long, conflicts_with = "io")]
    input_nodes: Option<String>,
    /// Explicit output node indices
    #[arg(long, conflicts_with = "io")]
    output_nodes: Option<String>,
}

impl IoArgs {
    fn selectors(&self, default_siso: bool) -> anyhow::Result<(Option<Vec<usize>>, Option<Vec<usize>>)> {
        if let Some(kind) = &self.io {
            return match kind.as_str() {
                "siso" => Ok((Some(vec![0]), Some(vec![0]))),
                "identity" => Ok((None, None)),
                other => bail!("unknown --io '{other}' (expected siso or identity)"),
            };
        }
        if self.input_nodes.is_some() || self.output_nodes.is_some() {
            let input = self.input_nodes.as_deref().map(parse_usize_list).transpose()?;
            let output = self.output_nodes.as_deref().map(parse_usize_list).transpose()?;
            return Ok((input.or_else(|| Some(vec![0])), output.or_else(|| Some(vec![0]))));
        }
        if default_siso {
            Ok((Some(vec![0]), Some(vec![0])))
        } else {
            Ok((None, None))
        }
    }
}

/// Shared frequency-window flags.
#[derive(Args, Debug)]
pub struct FreqArgs {
    #[arg(long, default_value_t = 1e-4)]
    omega_min: f64,
    #[arg(long, default_value_t = 1e4)]
    omega_max: f64,
    #[arg(long, default_value_t = 400)]
    omega_points: usize,
}

impl FreqArgs {
    fn grid(&self) -> anyhow::Result<FreqGrid<f64>> {
        Ok(FreqGrid::new(self.omega_min, self.omega_max, self.omega_points)?)
    }
}

fn load_model_checked(path: &Path) -> anyhow::Result<(Model, String)> {
    load_model::<f64>(path).with_context(|| format!("loading model {}", path.display()))
}

fn load_rom_checked(path: &Path, model_hash: &str) -> anyhow::Result<ReducedModel<f64>> {
    let rom = load_rom::<f64>(path).with_context(|| format!("loading ROM {}", path.display()))?;
    check_model_hash(&rom, model_hash)?;
    Ok(rom)
}

fn collect_samples(inline: &[String], file: Option<&Path>) -> anyhow::Result<Vec<Vec<f64>>> {
    let mut samples: Vec<Vec<f64>> = Vec::new();
    for s in inline {
        samples.push(parse_f64_list(s)?);
    }
    if let Some(path) = file {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading samples file {}", path.display()))?;
        let parsed: Vec<Vec<f64>> =
            serde_json::from_str(&text).context("samples file must be a JSON list of lists")?;
        samples.extend(parsed);
    }
    if samples.is_empty() {
        bail!("no parameter samples given (use --sample or --samples-file)");
    }
    Ok(samples)
}

fn write_or_print(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{text}"),
    }
    Ok(())
}

// -------------------------------------------------------------------- gen

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Network kind: path, ring or random_connected
    #[arg(long)]
    kind: NetworkKind,
    #[arg(long)]
    n: usize,
    /// RNG seed (required: all randomized behavior is explicitly seeded)
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    blocks: BlockArgs,
    #[command(flatten)]
    io: IoArgs,
    /// Inertia range "lo,hi"
    #[arg(long, default_value = "0.5,2.0")]
    m_range: String,
    /// Damping range "lo,hi"
    #[arg(long, default_value = "0.5,2.0")]
    d_range: String,
    /// Susceptance range "lo,hi"
    #[arg(long, default_value = "0.5,2.0")]
    b_range: String,
    /// Extra edges per node beyond the spanning tree (random_connected)
    #[arg(long, default_value_t = 0.5)]
    extra_edge_density: f64,
}

pub fn run_gen(args: GenArgs) -> anyhow::Result<i32> {
    let (input_nodes, output_nodes) = args.io.selectors(true)?;
    let config = GeneratorConfig {
        ranges: gridmor::netmodel::CoefficientRanges {
            inertia: parse_range(&args.m_range)?,
            damping: parse_range(&args.d_range)?,
            susceptance: parse_range(&args.b_range)?,
        },
        extra_edge_density: args.extra_edge_density,
        input_nodes,
        output_nodes,
    };
    let net = generate_network::<f64>(args.kind, args.n, args.seed, &config)?;
    let ps = args.blocks.param_space(net.node_count())?;
    let model = SecondOrderModel::from_network(net, ps)?;
    let hash = save_model(&args.out, &model)?;
    println!(
        "model: n = {}, |E| = {}, lambda_2 ~ {:.6e}, nu = {}",
        model.node_count(),
        model.network().edges().len(),
        model.lambda2()?,
        model.param_space().num_blocks(),
    );
    println!("wrote {} (sha256 {})", args.out.display(), hash);
    Ok(0)
}

// ----------------------------------------------------------------- import

#[derive(Args, Debug)]
pub struct ImportArgs {
    /// MATPOWER case file
    #[arg(long)]
    case: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Default inertia for every bus
    #[arg(long, default_value_t = 1.0)]
    inertia: f64,
    /// Default damping for every bus
    #[arg(long, default_value_t = 1.0)]
    damping: f64,
    /// JSON file {"<bus id>": {"inertia": x, "damping": y}, ...}
    #[arg(long)]
    overrides: Option<PathBuf>,
    #[command(flatten)]
    blocks: BlockArgs,
    #[command(flatten)]
    io: IoArgs,
}

pub fn run_import(args: ImportArgs) -> anyhow::Result<i32> {
    let text = std::fs::read_to_string(&args.case)
        .with_context(|| format!("reading case {}", args.case.display()))?;
    let (input_nodes, output_nodes) = args.io.selectors(false)?;
    let mut defaults = MatpowerDefaults::<f64> {
        inertia: args.inertia,
        damping: args.damping,
        input_nodes,
        output_nodes,
        ..MatpowerDefaults::default()
    };
    if let Some(path) = &args.overrides {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading overrides {}", path.display()))?;
        let raw: std::collections::HashMap<String, serde_json::Value> =
            serde_json::from_str(&text)?;
        for (bus, val) in raw {
            let bus_id: usize = bus.parse().map_err(|_| anyhow!("bad bus id '{bus}'"))?;
            defaults.overrides.insert(
                bus_id,
                BusOverride {
                    inertia: val.get("inertia").and_then(|v| v.as_f64()),
                    damping: val.get("damping").and_then(|v| v.as_f64()),
                },
            );
        }
    }
    let net: NetworkModel<f64> = parse_matpower_case(&text, &defaults)?;
    let ps = args.blocks.param_space(net.node_count())?;
    let model = SecondOrderModel::from_network(net, ps)?;
    let hash = save_model(&args.out, &model)?;
    println!(
        "imported: n = {}, |E| = {}, lambda_2 ~ {:.6e}",
        model.node_count(),
        model.network().edges().len(),
        model.lambda2()?,
    );
    println!("wrote {} (sha256 {})", args.out.display(), hash);
    Ok(0)
}

// ----------------------------------------------------------------- reduce

#[derive(Args, Debug)]
pub struct ReduceArgs {
    #[arg(long)]
    model: PathBuf,
    /// Parameter sample "p1,p2,..." (repeatable)
    #[arg(long = "sample")]
    samples: Vec<String>,
    /// JSON file with a list of parameter samples
    #[arg(long)]
    samples_file: Option<PathBuf>,
    /// Local reduced order per sample (single value broadcasts)
    #[arg(long, default_value = "20")]
    orders: String,
    /// Residue-matching enrichment: blocks, samples or per-p
    #[arg(long, default_value = "samples")]
    enrich: EnrichMode,
    #[arg(long)]
    out: PathBuf,
    /// Rank tolerance for global-basis deduplication
    #[arg(long, default_value_t = 1e-10)]
    tol_rank: f64,
    /// SOR-IRKA shift-movement tolerance
    #[arg(long, default_value_t = 1e-6)]
    irka_tol: f64,
    #[arg(long, default_value_t = 50)]
    max_iter: usize,
}

pub fn run_reduce(args: ReduceArgs) -> anyhow::Result<i32> {
    if args.tol_rank <= 0.0 || args.irka_tol <= 0.0 {
        bail!("tolerance overrides must be positive");
    }
    let (model, hash) = load_model_checked(&args.model)?;
    let samples = collect_samples(&args.samples, args.samples_file.as_deref())?;
    let opts = RomBuildOptions {
        orders: parse_usize_list(&args.orders)?,
        enrich: args.enrich,
        irka: SorIrkaOptions {
            tol: args.irka_tol,
            max_iter: args.max_iter,
            ..SorIrkaOptions::default()
        },
        rank_tol: args.tol_rank,
    };
    let mut build = build_rom(&model, &samples, &opts)?;
    build.rom.set_model_hash(hash);
    for (i, d) in build.diagnostics.iter().enumerate() {
        println!(
            "sample {i}: {} in {} iterations (final shift movement {:.3e}{})",
            if d.converged { "converged" } else { "iteration cap reached" },
            d.iterations,
            d.final_movement,
            if d.zero_mode { ", zero mode carried" } else { "" },
        );
    }
    let r = build.rom.order();
    save_rom(&args.out, &build.rom)?;
    println!(
        "reduced model: r = {r} (from {} samples), enrichment = {:?}",
        samples.len(),
        args.enrich
    );
    println!("wrote {}", args.out.display());
    Ok(0)
}

// ------------------------------------------------------------------ check

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    rom: PathBuf,
    /// Parameter point "p1,p2,..." (repeatable)
    #[arg(long = "param")]
    params: Vec<String>,
    /// Check this many random parameter points instead
    #[arg(long, requires = "seed")]
    random: Option<usize>,
    /// Seed for --random
    #[arg(long)]
    seed: Option<u64>,
    /// Gate on the smallest reduced Laplacian eigenvalue (relative)
    #[arg(long, default_value_t = 1e-10)]
    tol_zero: f64,
    /// Gate on the relative residue deviation
    #[arg(long, default_value_t = 1e-10)]
    tol_residue: f64,
}

pub fn run_check(args: CheckArgs) -> anyhow::Result<i32> {
    if args.tol_zero <= 0.0 || args.tol_residue <= 0.0 {
        bail!("tolerance overrides must be positive");
    }
    let (model, hash) = load_model_checked(&args.model)?;
    let rom = load_rom_checked(&args.rom, &hash)?;
    let mut points: Vec<Vec<f64>> = Vec::new();
    for p in &args.params {
        points.push(parse_f64_list(p)?);
    }
    if let Some(count) = args.random {
        let spec = GridSpec::Random {
            count,
            seed: args.seed.expect("clap enforces --seed with --random"),
        };
        // corners plus random interior points
        points.extend(spec.points(model.param_space())?);
    }
    if points.is_empty() {
        points.push(model.param_space().nominal());
    }
    let tols = CertTolerances::<f64> {
        zero_rel: args.tol_zero,
        residue_rel: args.tol_residue,
        ..CertTolerances::default()
    };
    let mut all_ok = true;
    for p in &points {
        let cert = certify(&model, &rom, p, &tols)?;
        println!("p = {p:?}");
        for line in cert.summary_lines() {
            println!("  {line}");
        }
        all_ok &= cert.all_pass();
    }
    println!("{}", if all_ok { "ALL PASS" } else { "FAILED" });
    Ok(if all_ok { 0 } else { 1 })
}

// ------------------------------------------------------------------- eval

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    rom: Option<PathBuf>,
    /// Parameter point "p1,p2,..." (defaults to nominal)
    #[arg(long)]
    param: Option<String>,
    #[command(flatten)]
    freq: FreqArgs,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, default_value = "csv")]
    format: String,
    /// Also dump per-entry real/imag values (SISO only)
    #[arg(long)]
    entries: bool,
}

pub fn run_eval(args: EvalArgs) -> anyhow::Result<i32> {
    let (model, hash) = load_model_checked(&args.model)?;
    let p = match &args.param {
        Some(s) => parse_f64_list(s)?,
        None => model.param_space().nominal(),
    };
    let full = realize(&model, &p)?;
    let rom = match &args.rom {
        Some(path) => {
            let rom = load_rom_checked(path, &hash)?;
            // transparent augmentation for per-parameter ROMs
            let rom = if rom.enrich_mode() == EnrichMode::PerParameter {
                let (aug, grew) = rom.augment_for_parameter(&model, &p, default_angle_tol::<f64>())?;
                if grew {
                    eprintln!("note: basis augmented with the null vector of p = {p:?} (r = {})", aug.order());
                }
                aug
            } else {
                rom
            };
            Some(rom)
        }
        None => None,
    };
    let red_sys = rom.as_ref().map(|r| r.realize(&model, &p)).transpose()?;

    if args.entries && (full.num_inputs() != 1 || full.num_outputs() != 1) {
        bail!("--entries is only supported for SISO systems");
    }

    let grid = args.freq.grid()?;
    let omegas = grid.omegas();
    let mut rows: Vec<Vec<(String, f64)>> = Vec::with_capacity(omegas.len());
    for &w in &omegas {
        let s = Complex64::new(0.0, w);
        let mut row = vec![("omega".to_string(), w)];
        let h = full.eval(s)?;
        row.push(("sigma_full".into(), gridmor::linalg::sigma_max::<f64>(&h.view())?));
        if args.entries {
            row.push(("re_full".into(), h[[0, 0]].re));
            row.push(("im_full".into(), h[[0, 0]].im));
        }
        if let Some(sys) = &red_sys {
            let hr = sys.eval(s)?;
            row.push(("sigma_rom".into(), gridmor::linalg::sigma_max::<f64>(&hr.view())?));
            if args.entries {
                row.push(("re_rom".into(), hr[[0, 0]].re));
                row.push(("im_rom".into(), hr[[0, 0]].im));
            }
            let diff = &h - &hr;
            row.push(("sigma_err".into(), gridmor::linalg::sigma_max::<f64>(&diff.view())?));
        }
        rows.push(row);
    }

    let text = match args.format.as_str() {
        "csv" => {
            let mut s = format!(
                "# gridmor {} eval p={:?} {}\n",
                gridmor::VERSION,
                p,
                grid.describe()
            );
            let header: Vec<&str> = rows[0].iter().map(|(k, _)| k.as_str()).collect();
            s.push_str(&header.join(","));
            s.push('\n');
            for row in &rows {
                let vals: Vec<String> = row.iter().map(|(_, v)| format!("{v}")).collect();
                s.push_str(&vals.join(","));
                s.push('\n');
            }
            s
        }
        "json" => {
            let objs: Vec<serde_json::Map<String, serde_json::Value>> = rows
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|(k, v)| (k.clone(), serde_json::json!(v)))
                        .collect()
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&objs)?;
            s.push('\n');
            s
        }
        other => bail!("unknown format '{other}' (expected csv or json)"),
    };
    write_or_print(args.out.as_deref(), &text)?;
    Ok(0)
}

// ------------------------------------------------------------------ sweep

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    rom: PathBuf,
    /// Tensor grid "10x10" (one count per block)
    #[arg(long, conflicts_with = "random")]
    grid: Option<String>,
    /// Number of random parameter points (corners always added)
    #[arg(long, requires = "seed")]
    random: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    freq: FreqArgs,
    /// Also compute the deflated relative H2 error per point
    #[arg(long)]
    h2: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run_sweep(args: SweepArgs) -> anyhow::Result<i32> {
    let (model, hash) = load_model_checked(&args.model)?;
    let rom = load_rom_checked(&args.rom, &hash)?;
    let grid = match (&args.grid, args.random) {
        (Some(spec), None) => GridSpec::Tensor {
            counts: spec
                .split('x')
                .map(|t| t.parse::<usize>().map_err(|_| anyhow!("bad grid '{spec}'")))
                .collect::<anyhow::Result<_>>()?,
        },
        (None, Some(count)) => GridSpec::Random {
            count,
            seed: args.seed.expect("clap enforces --seed with --random"),
        },
        (None, None) => GridSpec::Tensor { counts: vec![10] },
        _ => bail!("--grid and --random are mutually exclusive"),
    };
    let opts = SweepOptions {
        grid,
        freq: args.freq.grid()?,
        with_h2: args.h2,
        cert_tols: CertTolerances::default(),
    };
    let report = sweep(&model, &rom, &opts)?;
    let argmax = &report.points[report.argmax_index];
    println!(
        "sweep: {} points, max rel_hinf = {:.6e} at p = {:?} (omega = {:.4e}), median = {:.6e}",
        report.points.len(),
        argmax.rel_hinf,
        argmax.p,
        argmax.argmax_omega,
        report.median_rel_hinf(),
    );
    write_or_print(args.out.as_deref(), &report.to_csv())?;
    Ok(0)
}

// ------------------------------------------------------------------ study

#[derive(Args, Debug)]
pub struct StudyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long = "sample")]
    samples: Vec<String>,
    #[arg(long)]
    samples_file: Option<PathBuf>,
    /// Orders to compare, e.g. "10,20,40"
    #[arg(long)]
    orders: String,
    #[arg(long, default_value = "samples")]
    enrich: EnrichMode,
    #[arg(long, conflicts_with = "random")]
    grid: Option<String>,
    #[arg(long, requires = "seed")]
    random: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    freq: FreqArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run_study(args: StudyArgs) -> anyhow::Result<i32> {
    let (model, _) = load_model_checked(&args.model)?;
    let samples = collect_samples(&args.samples, args.samples_file.as_deref())?;
    let orders = parse_usize_list(&args.orders)?;
    let rom_opts = RomBuildOptions::new(0, args.enrich); // order filled per row
    let grid = match (&args.grid, args.random) {
        (Some(spec), None) => GridSpec::Tensor {
            counts: spec
                .split('x')
                .map(|t| t.parse::<usize>().map_err(|_| anyhow!("bad grid '{spec}'")))
                .collect::<anyhow::Result<_>>()?,
        },
        (None, Some(count)) => GridSpec::Random {
            count,
            seed: args.seed.expect("clap enforces --seed with --random"),
        },
        (None, None) => GridSpec::Tensor { counts: vec![5] },
        _ => bail!("--grid and --random are mutually exclusive"),
    };
    let sweep_opts = SweepOptions {
        grid,
        freq: args.freq.grid()?,
        with_h2: false,
        cert_tols: CertTolerances::default(),
    };
    let (table, _) = convergence_study(&model, &samples, &orders, &rom_opts, &sweep_opts)?;
    for row in &table.rows {
        println!(
            "order {:>4} -> r = {:>4}: median rel_hinf = {:.6e}, max = {:.6e}",
            row.requested_order, row.actual_r, row.median_rel_hinf, row.max_rel_hinf
        );
    }
    write_or_print(args.out.as_deref(), &table.to_csv())?;
    Ok(0)
}
