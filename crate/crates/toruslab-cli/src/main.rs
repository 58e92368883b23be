//! Batch experiment driver: every sampler and comparison of the library as a
//! subcommand with reproducible seeds and CSV/JSON outputs.
//!
//! Exit codes: 0 success, 2 validation/usage errors, 3 unsupported
//! configurations (the d = 3 flow).

use std::fs;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use toruslab::convex_body::{BodyDescriptor, ConvexBody};
use toruslab::error::Error;
use toruslab::lattice::equidistribution_check;
use toruslab::limit_law::{
    sample_limit_ecdf, series_increment_bound, tail_variance, LimitLawConfig, LimitVariant,
};
use toruslab::orbit::{
    cylinder_count, sample_cylinder_ecdf, sample_flow_ecdf, sample_geodesic_ecdf,
    sample_kesten_ecdf, sample_translation_ecdf, CylinderSamplerConfig, DirectionDensity,
    FlowSamplerConfig, GeodesicSamplerConfig, KestenSamplerConfig, TranslationSamplerConfig,
};
use toruslab::stats::{cauchy_fit, compare, QuantileSummary};

#[derive(Parser)]
#[command(
    name = "toruslab",
    version,
    about = "Toral orbit discrepancies and their limit laws"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample normalized translation discrepancies into an empirical CDF.
    DiscrepancySample(DiscrepancyArgs),
    /// Sample the limit-law series over Haar-random lattices.
    LimitSample(LimitArgs),
    /// Run both samplers and report the two-sample KS distance.
    Compare(CompareArgs),
    /// The one-dimensional rotation experiment with a Cauchy fit.
    Kesten(KestenArgs),
    /// Continuous-flow discrepancies (d = 2 raw, d >= 4 normalized).
    Flow(FlowArgs),
    /// Lattice points in a slanted cylinder (single capsule or a sampler).
    Cylinder(CylinderArgs),
    /// Occupation times of random geodesics in a fixed ball.
    Geodesic(GeodesicArgs),
    /// Equidistribution table of a reduced-basis observable over N.
    Equidistribution(EquidistArgs),
    /// Tail-variance truncation diagnostics of the limit series.
    TailVariance(TailVarianceArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BodyChoice {
    Ball,
}

#[derive(Args)]
struct BodyArgs {
    /// Built-in body (the unit ball reference shape).
    #[arg(long, default_value = "ball")]
    body: BodyChoice,
    /// JSON body descriptor file overriding --body.
    #[arg(long)]
    body_file: Option<String>,
}

impl BodyArgs {
    fn build(&self, d: usize) -> Result<ConvexBody, Error> {
        if let Some(path) = &self.body_file {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::validation(format!("cannot read {path}: {e}")))?;
            let desc: BodyDescriptor = serde_json::from_str(&text)
                .map_err(|e| Error::validation(format!("bad body descriptor: {e}")))?;
            ConvexBody::from_descriptor(&desc)
        } else {
            match self.body {
                BodyChoice::Ball => ConvexBody::unit_ball(d),
            }
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    /// CSV output path for the per-sample dump.
    #[arg(long)]
    out_csv: Option<String>,
    /// JSON output path for the run summary.
    #[arg(long)]
    out_json: Option<String>,
}

impl OutputArgs {
    fn write(&self, csv: Option<String>, json: &serde_json::Value) -> Result<(), Error> {
        if let (Some(path), Some(csv)) = (&self.out_csv, csv) {
            fs::write(path, csv).map_err(|e| Error::validation(format!("write {path}: {e}")))?;
        }
        if let Some(path) = &self.out_json {
            fs::write(path, serde_json::to_string_pretty(json).unwrap())
                .map_err(|e| Error::validation(format!("write {path}: {e}")))?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DensityChoice {
    Shell,
    Box,
}

#[derive(Args)]
struct DensityArgs {
    /// Velocity density: isotropic shell or componentwise box.
    #[arg(long, default_value = "shell")]
    density: DensityChoice,
    #[arg(long, default_value_t = 0.8)]
    speed_min: f64,
    #[arg(long, default_value_t = 1.25)]
    speed_max: f64,
    /// Comma-separated lower corner of the box density.
    #[arg(long)]
    box_low: Option<String>,
    /// Comma-separated upper corner of the box density.
    #[arg(long)]
    box_high: Option<String>,
}

impl DensityArgs {
    fn build(&self, d: usize) -> Result<DirectionDensity, Error> {
        match self.density {
            DensityChoice::Shell => Ok(DirectionDensity::IsotropicShell {
                speed_min: self.speed_min,
                speed_max: self.speed_max,
            }),
            DensityChoice::Box => {
                let low = parse_vec(
                    self.box_low
                        .as_deref()
                        .ok_or_else(|| Error::validation("box density needs --box-low"))?,
                )?;
                let high = parse_vec(
                    self.box_high
                        .as_deref()
                        .ok_or_else(|| Error::validation("box density needs --box-high"))?,
                )?;
                if low.len() != d || high.len() != d {
                    return Err(Error::validation("box corners must have d components"));
                }
                Ok(DirectionDensity::BoxOffset { low, high })
            }
        }
    }
}

fn parse_vec(s: &str) -> Result<Vec<f64>, Error> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| Error::validation(format!("bad number '{p}': {e}")))
        })
        .collect()
}

#[derive(Args)]
struct DiscrepancyArgs {
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[command(flatten)]
    body: BodyArgs,
    /// Lower end of the r range.
    #[arg(long, default_value_t = 0.2)]
    a: f64,
    /// Upper end of the r range.
    #[arg(long, default_value_t = 0.4)]
    b: f64,
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// Orbit length N.
    #[arg(long = "N", alias = "n", default_value_t = 100_000)]
    n_steps: u64,
    #[arg(long, default_value_t = 2000)]
    samples: u64,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct LimitArgs {
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[command(flatten)]
    body: BodyArgs,
    /// Limit-law variant.
    #[arg(long, default_value = "translation-sym")]
    variant: VariantChoice,
    /// sup-norm cutoff M on the primitive vectors.
    #[arg(long = "M", alias = "m-cutoff", default_value_t = 8)]
    m_cutoff: i64,
    #[arg(long, default_value_t = 64)]
    p_max: u32,
    #[arg(long, default_value_t = 4000)]
    samples: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1_000_000)]
    n_haar: u64,
    /// Frequency cutoff of the planar flow series.
    #[arg(long, default_value_t = 128)]
    k_max: u32,
    /// Body scale of the planar flow series.
    #[arg(long, default_value_t = 0.25)]
    r_flow: f64,
    #[command(flatten)]
    density: DensityArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VariantChoice {
    TranslationSym,
    TranslationNonsym,
    FlowD2,
    FlowDge4Sym,
    FlowDge4Nonsym,
    Geodesic,
}

impl From<VariantChoice> for LimitVariant {
    fn from(v: VariantChoice) -> Self {
        match v {
            VariantChoice::TranslationSym => LimitVariant::TranslationSym,
            VariantChoice::TranslationNonsym => LimitVariant::TranslationNonsym,
            VariantChoice::FlowD2 => LimitVariant::FlowD2,
            VariantChoice::FlowDge4Sym => LimitVariant::FlowDge4Sym,
            VariantChoice::FlowDge4Nonsym => LimitVariant::FlowDge4Nonsym,
            VariantChoice::Geodesic => LimitVariant::Geodesic,
        }
    }
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[command(flatten)]
    body: BodyArgs,
    #[arg(long = "N", alias = "n", default_value_t = 100_000)]
    n_steps: u64,
    #[arg(long, default_value_t = 0.2)]
    a: f64,
    #[arg(long, default_value_t = 0.4)]
    b: f64,
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    #[arg(long, default_value_t = 2000)]
    samples: u64,
    #[arg(long, default_value_t = 4000)]
    limit_samples: u64,
    #[arg(long = "M", default_value_t = 8)]
    m_cutoff: i64,
    #[arg(long, default_value_t = 64)]
    p_max: u32,
    #[arg(long, default_value_t = 1_000_000)]
    n_haar: u64,
    #[arg(long)]
    seed: u64,
    /// CSV path for the orbit-sample dump.
    #[arg(long)]
    out_orbit_csv: Option<String>,
    /// CSV path for the limit-sample dump.
    #[arg(long)]
    out_limit_csv: Option<String>,
    #[arg(long)]
    out_json: Option<String>,
}

#[derive(Args)]
struct KestenArgs {
    #[arg(long)]
    r: f64,
    #[arg(long = "N", alias = "n", default_value_t = 1_000_000)]
    n_steps: u64,
    #[arg(long, default_value_t = 2000)]
    samples: u64,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct FlowArgs {
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[command(flatten)]
    body: BodyArgs,
    #[arg(long, default_value_t = 0.2)]
    a: f64,
    #[arg(long, default_value_t = 0.4)]
    b: f64,
    /// Flow time T.
    #[arg(long = "T", alias = "t", default_value_t = 1000.0)]
    t_total: f64,
    #[arg(long, default_value_t = 1000)]
    samples: u64,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    density: DensityArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct CylinderArgs {
    /// Ambient dimension d + 1 of the capsule.
    #[arg(long)]
    d: usize,
    #[arg(long)]
    r: f64,
    #[arg(long = "T", alias = "t", default_value_t = 1.0)]
    t_total: f64,
    /// Comma-separated slope alpha (d - 1 components); v = (alpha, 1).
    #[arg(long, default_value = "0")]
    alpha: String,
    /// Comma-separated base point y (ambient components).
    #[arg(long, default_value = "0,0")]
    x: String,
    /// When set, run the (r, alpha, x)-sampler instead of a single instance.
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long, default_value_t = 0.05)]
    a: f64,
    #[arg(long, default_value_t = 0.3)]
    b: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct GeodesicArgs {
    #[arg(long, default_value_t = 4)]
    d: usize,
    #[arg(long, default_value_t = 0.2)]
    a: f64,
    #[arg(long, default_value_t = 0.4)]
    b: f64,
    /// Comma-separated center of the target ball.
    #[arg(long, default_value = "0.5,0.5,0.5,0.5")]
    y: String,
    #[arg(long = "T", alias = "t", default_value_t = 10_000.0)]
    t_total: f64,
    #[arg(long, default_value_t = 1500)]
    samples: u64,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    density: DensityArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct EquidistArgs {
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Comma-separated list of N values.
    #[arg(long, default_value = "1000,100000,10000000")]
    n_list: String,
    #[arg(long, default_value_t = 2000)]
    samples: u64,
    #[arg(long)]
    seed: u64,
    /// Observable: capped shortest-vector length min(|e_1|, 1).
    #[arg(long, default_value = "min-e1")]
    observable: String,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct TailVarianceArgs {
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long = "M", default_value_t = 8)]
    m_cutoff: i64,
    #[arg(long, default_value_t = 64)]
    p_max: u32,
    #[arg(long, default_value_t = 200)]
    samples: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1_000_000)]
    n_haar: u64,
    #[command(flatten)]
    out: OutputArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Unsupported(msg)) => {
            eprintln!("unsupported: {msg}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.cmd {
        Cmd::DiscrepancySample(args) => {
            let body = args.body.build(args.d)?;
            let cfg = TranslationSamplerConfig {
                body,
                r_min: args.a,
                r_max: args.b,
                gamma: args.gamma,
                n_steps: args.n_steps,
                samples: args.samples,
                seed: args.seed,
            };
            let (cdf, dump) = sample_translation_ecdf(&cfg)?;
            let mut summary = dump.summary_json();
            summary["quantiles"] = serde_json::to_value(QuantileSummary::of(&cdf)).unwrap();
            args.out.write(Some(dump.to_csv()), &summary)?;
            println!(
                "discrepancy-sample: n={} median={:.6} iqr={:.6} flagged={}",
                cdf.len(),
                cdf.quantile(0.5)?,
                cdf.quantile(0.75)? - cdf.quantile(0.25)?,
                dump.flagged.len()
            );
            Ok(())
        }
        Cmd::LimitSample(args) => {
            let body = args.body.build(args.d)?;
            let variant: LimitVariant = args.variant.into();
            let mut cfg = LimitLawConfig::new(body, args.d, variant);
            cfg.m_cutoff = args.m_cutoff;
            cfg.p_max = args.p_max;
            cfg.samples = args.samples;
            cfg.seed = args.seed;
            cfg.n_haar = args.n_haar;
            cfg.k_max_flow_d2 = args.k_max;
            cfg.r_flow_d2 = args.r_flow;
            cfg.velocity = Some(args.density.build(args.d)?);
            let (cdf, dump) = sample_limit_ecdf(&cfg)?;
            let mut summary = dump.summary_json();
            summary["quantiles"] = serde_json::to_value(QuantileSummary::of(&cdf)).unwrap();
            args.out.write(Some(dump.to_csv()), &summary)?;
            println!(
                "limit-sample[{}]: n={} median={:.6} iqr={:.6} resampled={}",
                variant.name(),
                cdf.len(),
                cdf.quantile(0.5)?,
                cdf.quantile(0.75)? - cdf.quantile(0.25)?,
                dump.resampled
            );
            Ok(())
        }
        Cmd::Compare(args) => {
            let body = args.body.build(args.d)?;
            let orbit_cfg = TranslationSamplerConfig {
                body: body.clone(),
                r_min: args.a,
                r_max: args.b,
                gamma: args.gamma,
                n_steps: args.n_steps,
                samples: args.samples,
                seed: args.seed,
            };
            let (orbit_cdf, orbit_dump) = sample_translation_ecdf(&orbit_cfg)?;
            let variant = if body.is_symmetric() {
                LimitVariant::TranslationSym
            } else {
                LimitVariant::TranslationNonsym
            };
            let mut limit_cfg = LimitLawConfig::new(body, args.d, variant);
            limit_cfg.m_cutoff = args.m_cutoff;
            limit_cfg.p_max = args.p_max;
            limit_cfg.samples = args.limit_samples;
            limit_cfg.seed = args.seed.wrapping_add(1);
            limit_cfg.n_haar = args.n_haar;
            let (limit_cdf, limit_dump) = sample_limit_ecdf(&limit_cfg)?;
            let report = compare(&orbit_cdf, &limit_cdf);
            let summary = serde_json::json!({
                "schema_version": toruslab::SCHEMA_VERSION,
                "kind": "compare",
                "seed": args.seed,
                "orbit": orbit_dump.summary_json(),
                "limit": limit_dump.summary_json(),
                "ks": report.ks,
                "report": report,
            });
            if let Some(path) = &args.out_orbit_csv {
                fs::write(path, orbit_dump.to_csv())
                    .map_err(|e| Error::validation(format!("write {path}: {e}")))?;
            }
            if let Some(path) = &args.out_limit_csv {
                fs::write(path, limit_dump.to_csv())
                    .map_err(|e| Error::validation(format!("write {path}: {e}")))?;
            }
            if let Some(path) = &args.out_json {
                fs::write(path, serde_json::to_string_pretty(&summary).unwrap())
                    .map_err(|e| Error::validation(format!("write {path}: {e}")))?;
            } else {
                println!("{}", serde_json::to_string_pretty(&summary).unwrap());
            }
            println!("compare: ks = {:.6}", report.ks);
            Ok(())
        }
        Cmd::Kesten(args) => {
            let cfg = KestenSamplerConfig {
                r: args.r,
                n_steps: args.n_steps,
                samples: args.samples,
                seed: args.seed,
            };
            let (cdf, dump) = sample_kesten_ecdf(&cfg)?;
            let fit = cauchy_fit(&cdf)?;
            let mut summary = dump.summary_json();
            summary["cauchy_fit"] = serde_json::to_value(fit).unwrap();
            args.out.write(Some(dump.to_csv()), &summary)?;
            println!(
                "kesten: location={:.6} scale={:.6} ks_to_fit={:.6}",
                fit.location, fit.scale, fit.ks_to_fit
            );
            Ok(())
        }
        Cmd::Flow(args) => {
            let body = args.body.build(args.d)?;
            let density = args.density.build(args.d)?;
            let cfg = FlowSamplerConfig {
                body,
                r_min: args.a,
                r_max: args.b,
                t_total: args.t_total,
                samples: args.samples,
                seed: args.seed,
                density,
            };
            let (cdf, dump) = sample_flow_ecdf(&cfg)?;
            let mut summary = dump.summary_json();
            summary["quantiles"] = serde_json::to_value(QuantileSummary::of(&cdf)).unwrap();
            args.out.write(Some(dump.to_csv()), &summary)?;
            println!(
                "flow: n={} median={:.6} iqr={:.6}",
                cdf.len(),
                cdf.quantile(0.5)?,
                cdf.quantile(0.75)? - cdf.quantile(0.25)?
            );
            Ok(())
        }
        Cmd::Cylinder(args) => {
            if let Some(samples) = args.samples {
                if args.d < 2 {
                    return Err(Error::validation("sampler needs ambient dimension >= 2"));
                }
                let cfg = CylinderSamplerConfig {
                    d: args.d - 1,
                    r_min: args.a,
                    r_max: args.b,
                    t_total: args.t_total,
                    samples,
                    seed: args.seed,
                };
                let (cdf, dump) = sample_cylinder_ecdf(&cfg)?;
                let mut summary = dump.summary_json();
                summary["quantiles"] = serde_json::to_value(QuantileSummary::of(&cdf)).unwrap();
                args.out.write(Some(dump.to_csv()), &summary)?;
                println!(
                    "cylinder-sample: n={} median={:.6}",
                    cdf.len(),
                    cdf.quantile(0.5)?
                );
            } else {
                let y = parse_vec(&args.x)?;
                let alpha = parse_vec(&args.alpha)?;
                if y.len() != args.d {
                    return Err(Error::validation("--x must have d components (ambient)"));
                }
                if alpha.len() != args.d - 1 {
                    return Err(Error::validation("--alpha must have d - 1 components"));
                }
                let mut v = alpha;
                v.push(1.0);
                let (count, disc) = cylinder_count(&y, &v, args.r, args.t_total)?;
                let summary = serde_json::json!({
                    "schema_version": toruslab::SCHEMA_VERSION,
                    "kind": "cylinder",
                    "config": { "d": args.d, "r": args.r, "t_total": args.t_total, "y": y, "v": v },
                    "count": count,
                    "discrepancy": disc,
                });
                args.out.write(None, &summary)?;
                println!("cylinder: count {count} discrepancy {disc:.10}");
            }
            Ok(())
        }
        Cmd::Geodesic(args) => {
            let y = parse_vec(&args.y)?;
            if y.len() != args.d {
                return Err(Error::validation("--y must have d components"));
            }
            let density = args.density.build(args.d)?;
            let cfg = GeodesicSamplerConfig {
                d: args.d,
                r_min: args.a,
                r_max: args.b,
                y,
                t_total: args.t_total,
                samples: args.samples,
                seed: args.seed,
                density,
            };
            let (cdf, dump) = sample_geodesic_ecdf(&cfg)?;
            let mut summary = dump.summary_json();
            summary["quantiles"] = serde_json::to_value(QuantileSummary::of(&cdf)).unwrap();
            args.out.write(Some(dump.to_csv()), &summary)?;
            println!(
                "geodesic: n={} median={:.6} iqr={:.6}",
                cdf.len(),
                cdf.quantile(0.5)?,
                cdf.quantile(0.75)? - cdf.quantile(0.25)?
            );
            Ok(())
        }
        Cmd::Equidistribution(args) => {
            let n_list: Vec<u64> = args
                .n_list
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse::<u64>()
                        .map_err(|e| Error::validation(format!("bad N '{p}': {e}")))
                })
                .collect::<Result<_, _>>()?;
            let rows = match args.observable.as_str() {
                "min-e1" => equidistribution_check(
                    args.d,
                    &n_list,
                    |rb, _| toruslab::linalg::norm(&rb.vectors[0]).min(1.0),
                    args.samples,
                    args.seed,
                )?,
                other => {
                    return Err(Error::validation(format!("unknown observable '{other}'")));
                }
            };
            let table: Vec<serde_json::Value> = rows
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "N": r.n_steps, "mean": r.mean, "std_err": r.std_err,
                    })
                })
                .collect();
            let summary = serde_json::json!({
                "schema_version": toruslab::SCHEMA_VERSION,
                "kind": "equidistribution",
                "config": { "d": args.d, "observable": args.observable, "samples": args.samples },
                "seed": args.seed,
                "table": table,
            });
            args.out.write(None, &summary)?;
            for r in &rows {
                println!(
                    "equidistribution: N={} mean={:.6} +- {:.6}",
                    r.n_steps, r.mean, r.std_err
                );
            }
            Ok(())
        }
        Cmd::TailVariance(args) => {
            let body = ConvexBody::unit_ball(args.d)?;
            let mut cfg = LimitLawConfig::new(body, args.d, LimitVariant::TranslationSym);
            cfg.m_cutoff = args.m_cutoff;
            cfg.p_max = args.p_max;
            cfg.seed = args.seed;
            cfg.n_haar = args.n_haar;
            let mut totals = Vec::new();
            let mut held = 0u64;
            for i in 0..args.samples {
                let mut rng = toruslab::rng::sample_rng(args.seed, i);
                let pt = toruslab::limit_law::draw_sample_point(&cfg, &mut rng)?;
                let rep = tail_variance(&pt, &cfg)?;
                totals.push(rep.total);
                let base = toruslab::limit_law::eval_translation_sym(&pt, &cfg)?.value;
                let big = toruslab::limit_law::eval_translation_sym_doubled(&pt, &cfg)?.value;
                let bound = series_increment_bound(&pt, &cfg)?;
                if (big - base).abs() <= bound {
                    held += 1;
                }
            }
            totals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let median = totals[totals.len() / 2];
            let frac = held as f64 / args.samples as f64;
            let summary = serde_json::json!({
                "schema_version": toruslab::SCHEMA_VERSION,
                "kind": "tail_variance",
                "config": { "d": args.d, "m_cutoff": args.m_cutoff, "p_max": args.p_max,
                            "samples": args.samples, "n_haar": args.n_haar },
                "seed": args.seed,
                "median_total_variance": median,
                "increment_bound_fraction": frac,
            });
            args.out.write(None, &summary)?;
            println!(
                "tail-variance: median total {:.6}, increment bound held on {:.1}% of samples",
                median,
                100.0 * frac
            );
            Ok(())
        }
    }
}
