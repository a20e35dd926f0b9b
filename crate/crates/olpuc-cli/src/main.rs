mod checks;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use olpuc_core::factorization::factorize;
use olpuc_core::measure::Measure;
use olpuc_core::moments::moment_matrix;
use olpuc_core::ordering::OrderingSpec;
use olpuc_core::tau::{bilinear_residual, wave_bilinear_residual};
use olpuc_core::toda::{trajectory_csv, DeformationTimes, StepKind};

use checks::Ctx;
use report::{emit, pick_format, sig15, Fmt, Report, Row};

#[derive(Parser)]
#[command(
    name = "olpuc",
    version,
    about = "Orthogonal Laurent polynomials on the unit circle: moment matrices, \
             LU dressing, kernels, flows, and their verification suites"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Measure spec (JSON file)
    #[arg(short, long, value_name = "FILE")]
    measure: PathBuf,
    /// Ordering as n+,n-
    #[arg(short = 'n', long, value_parser = parse_ordering, default_value = "1,1")]
    ordering: (usize, usize),
    /// Degree budget; truncations are padded internally so this many rows
    /// stay pollution-free
    #[arg(short = 'l', long = "size", default_value_t = 16)]
    size: usize,
    /// Output file (stdout when omitted)
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Output format; inferred from the output extension when omitted
    #[arg(long, value_enum)]
    format: Option<Fmt>,
    /// Seed for sampled test points
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Export the truncated moment matrix
    Moments(Common),
    /// Factorize the moment matrix and export the pivot diagonal
    Factorize(Common),
    /// Export Verblunsky coefficients, rho^2 and pivots
    Verblunsky(Common),
    /// Compare the three kernel evaluation routes at sampled points
    CdCheck {
        #[command(flatten)]
        common: Common,
        /// Number of sampled (z, z') pairs
        #[arg(long, default_value_t = 100)]
        points: usize,
        /// Residual tolerance
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Cross-check second-kind functions across evaluation routes
    SecondKind {
        #[command(flatten)]
        common: Common,
        /// Sampled points per region (inside/outside the circle)
        #[arg(long, default_value_t = 20)]
        points: usize,
        /// Residual tolerance
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
    /// Integrate the lattice flow and export the coefficient trajectory
    Evolve {
        #[command(flatten)]
        common: Common,
        /// First-family flow time (complex, e.g. "0.1" or "0.1,0.05")
        #[arg(long, value_parser = parse_complex, default_value = "0.1", allow_hyphen_values = true)]
        t11: Complex64,
        /// Second-family flow time
        #[arg(long, value_parser = parse_complex, default_value = "0", allow_hyphen_values = true)]
        t21: Complex64,
        /// RK4 steps to the final time
        #[arg(long, default_value_t = 100)]
        steps: usize,
        /// Trajectory rows per coefficient
        #[arg(long, default_value_t = 10)]
        samples: usize,
        /// Tolerance for the ODE-vs-refactorization cross-check
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Apply one discrete Darboux step and verify the two-path identity
    DiscreteStep {
        #[command(flatten)]
        common: Common,
        /// Spectral shift (complex, off the unit circle; d2 needs |lambda| < 1)
        #[arg(long, value_parser = parse_complex, default_value = "0.3,0.2", allow_hyphen_values = true)]
        lambda: Complex64,
        /// Step kind
        #[arg(long, value_enum, default_value_t = KindArg::D1)]
        kind: KindArg,
        /// Residual tolerance
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Verify tau-function identities: pivot product and wave representations
    TauCheck {
        #[command(flatten)]
        common: Common,
        /// Sampled evaluation points
        #[arg(long, default_value_t = 20)]
        points: usize,
        /// First-family deformation time
        #[arg(long, value_parser = parse_complex, default_value = "0", allow_hyphen_values = true)]
        t11: Complex64,
        /// Second-family deformation time
        #[arg(long, value_parser = parse_complex, default_value = "0", allow_hyphen_values = true)]
        t21: Complex64,
        /// Residual tolerance for the representation rows
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Verify the bilinear contour identity at sampled time pairs
    BilinearCheck {
        #[command(flatten)]
        common: Common,
        /// Number of sampled (t, t') pairs
        #[arg(long, default_value_t = 5)]
        pairs: usize,
        /// Inner contour radius
        #[arg(long, default_value_t = 0.5)]
        r0: f64,
        /// Outer contour radius
        #[arg(long, default_value_t = 2.0)]
        r_inf: f64,
        /// Residual tolerance
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Run every module's verification suite and emit a report
    VerifyAll {
        #[command(flatten)]
        common: Common,
        /// Sampled (z, z') pairs for the kernel checks
        #[arg(long, default_value_t = 100)]
        points: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum KindArg {
    D1,
    D2,
    ConjPair,
}

impl From<KindArg> for StepKind {
    fn from(k: KindArg) -> StepKind {
        match k {
            KindArg::D1 => StepKind::D1,
            KindArg::D2 => StepKind::D2,
            KindArg::ConjPair => StepKind::ConjPair,
        }
    }
}

fn parse_ordering(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("ordering must be given as n+,n- (got {s:?})"))?;
    let np: usize = a
        .trim()
        .parse()
        .map_err(|_| format!("bad ordering component {a:?}"))?;
    let nn: usize = b
        .trim()
        .parse()
        .map_err(|_| format!("bad ordering component {b:?}"))?;
    Ok((np, nn))
}

/// Accepts "a", "a,b", "a+bi", "a-bi", "bi" with usual float syntax.
fn parse_complex(s: &str) -> Result<Complex64, String> {
    let t = s.trim();
    let bad = || format!("bad complex number {t:?}");
    if let Some((re, im)) = t.split_once(',') {
        let re: f64 = re.trim().parse().map_err(|_| bad())?;
        let im: f64 = im.trim().parse().map_err(|_| bad())?;
        return Ok(Complex64::new(re, im));
    }
    if let Ok(re) = t.parse::<f64>() {
        return Ok(Complex64::new(re, 0.0));
    }
    let rest = t.strip_suffix('i').ok_or_else(bad)?;
    let bytes = rest.as_bytes();
    for k in (1..bytes.len()).rev() {
        if (bytes[k] == b'+' || bytes[k] == b'-')
            && bytes[k - 1] != b'e'
            && bytes[k - 1] != b'E'
        {
            let (a, b) = rest.split_at(k);
            let re: f64 = a.parse().map_err(|_| bad())?;
            let im: f64 = match b {
                "+" => 1.0,
                "-" => -1.0,
                v => v.parse().map_err(|_| bad())?,
            };
            return Ok(Complex64::new(re, im));
        }
    }
    let im: f64 = match rest {
        "" | "+" => 1.0,
        "-" => -1.0,
        v => v.parse().map_err(|_| bad())?,
    };
    Ok(Complex64::new(0.0, im))
}

fn quad_n() -> Result<usize, String> {
    match std::env::var("OLPUC_QUAD_N") {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .map_err(|_| format!("OLPUC_QUAD_N must be a positive integer (got {v:?})"))?;
            if n < 16 {
                return Err(format!("OLPUC_QUAD_N={n} is too small (minimum 16)"));
            }
            Ok(n)
        }
        Err(std::env::VarError::NotPresent) => Ok(4096),
        Err(e) => Err(format!("OLPUC_QUAD_N: {e}")),
    }
}

impl Common {
    fn validate(&self) -> Result<(OrderingSpec, Measure), String> {
        let (np, nn) = self.ordering;
        let ord = OrderingSpec::new(np, nn)
            .map_err(|e| format!("ordering ({np},{nn}): {e}"))?;
        if self.size < ord.block_len() + 4 {
            return Err(format!(
                "size {} is too small for ordering ({np},{nn}): need at least {}",
                self.size,
                ord.block_len() + 4
            ));
        }
        let text = std::fs::read_to_string(&self.measure)
            .map_err(|e| format!("measure file {}: {e}", self.measure.display()))?;
        let m = Measure::from_json(&text)
            .map_err(|e| format!("measure file {}: {e}", self.measure.display()))?;
        Ok((ord, m))
    }

    fn ctx(&self) -> Result<(Ctx, ChaCha8Rng), String> {
        let (ord, m) = self.validate()?;
        let ctx = Ctx::new(m, ord, self.size, quad_n()?).map_err(|e| e.to_string())?;
        Ok((ctx, ChaCha8Rng::seed_from_u64(self.seed)))
    }

    fn report(&self, command: &str) -> Report {
        Report::new(command, &self.measure, self.ordering, self.size, self.seed)
    }

    fn write(&self, default: Fmt, report: &Report) -> Result<(), String> {
        let fmt = pick_format(self.format, self.output.as_deref(), default);
        let text = match fmt {
            Fmt::Csv => report.to_csv(),
            Fmt::Json => report.to_json(),
        };
        emit(self.output.as_deref(), &text).map_err(|e| e.to_string())
    }

    fn write_text(&self, csv: String, json: serde_json::Value) -> Result<(), String> {
        let fmt = pick_format(self.format, self.output.as_deref(), Fmt::Csv);
        let text = match fmt {
            Fmt::Csv => csv,
            Fmt::Json => {
                let mut s =
                    serde_json::to_string_pretty(&json).expect("value is serializable");
                s.push('\n');
                s
            }
        };
        emit(self.output.as_deref(), &text).map_err(|e| e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("olpuc: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool, String> {
    match cli.command {
        Cmd::Moments(common) => cmd_moments(&common),
        Cmd::Factorize(common) => cmd_factorize(&common),
        Cmd::Verblunsky(common) => cmd_verblunsky(&common),
        Cmd::CdCheck {
            common,
            points,
            tol,
        } => cmd_cd_check(&common, points, tol),
        Cmd::SecondKind {
            common,
            points,
            tol,
        } => cmd_second_kind(&common, points, tol),
        Cmd::Evolve {
            common,
            t11,
            t21,
            steps,
            samples,
            tol,
        } => cmd_evolve(&common, t11, t21, steps, samples, tol),
        Cmd::DiscreteStep {
            common,
            lambda,
            kind,
            tol,
        } => cmd_discrete(&common, lambda, kind.into(), tol),
        Cmd::TauCheck {
            common,
            points,
            t11,
            t21,
            tol,
        } => cmd_tau_check(&common, points, t11, t21, tol),
        Cmd::BilinearCheck {
            common,
            pairs,
            r0,
            r_inf,
            tol,
        } => cmd_bilinear(&common, pairs, r0, r_inf, tol),
        Cmd::VerifyAll { common, points } => cmd_verify_all(&common, points),
    }
}

fn cmd_moments(common: &Common) -> Result<bool, String> {
    let (ord, m) = common.validate()?;
    let g = moment_matrix(&m, ord, common.size).map_err(|e| e.to_string())?;
    let mut csv = String::from("j,k,re,im\n");
    let mut entries = Vec::with_capacity(common.size);
    for j in 0..common.size {
        let mut row = Vec::with_capacity(common.size);
        for k in 0..common.size {
            let v = g[(j, k)];
            csv.push_str(&format!("{j},{k},{},{}\n", sig15(v.re), sig15(v.im)));
            row.push(json!([v.re, v.im]));
        }
        entries.push(serde_json::Value::Array(row));
    }
    common.write_text(
        csv,
        json!({
            "command": "moments",
            "ordering": [ord.n_plus(), ord.n_minus()],
            "size": common.size,
            "entries": entries,
        }),
    )?;
    Ok(true)
}

fn cmd_factorize(common: &Common) -> Result<bool, String> {
    let (ord, m) = common.validate()?;
    let g = moment_matrix(&m, ord, common.size).map_err(|e| e.to_string())?;
    let f = factorize(&g, ord, 1e-13).map_err(|e| e.to_string())?;
    let trusted = f.trusted_len();
    let mut csv = String::from("l,re_h,im_h\n");
    let mut hs = Vec::with_capacity(trusted);
    let mut prod = Complex64::new(1.0, 0.0);
    for l in 0..trusted {
        let h = f.h(l);
        prod *= h;
        csv.push_str(&format!("{l},{},{}\n", sig15(h.re), sig15(h.im)));
        hs.push(json!([h.re, h.im]));
    }
    common.write_text(
        csv,
        json!({
            "command": "factorize",
            "ordering": [ord.n_plus(), ord.n_minus()],
            "size": common.size,
            "trusted_len": trusted,
            "h": hs,
            "pivot_product": [prod.re, prod.im],
        }),
    )?;
    Ok(true)
}

fn cmd_verblunsky(common: &Common) -> Result<bool, String> {
    let (ctx, _) = common.ctx()?;
    let count = common.size.min(ctx.f.trusted_len());
    let v = ctx.f.verblunsky(count).map_err(|e| e.to_string())?;
    let mut csv = String::from(
        "l,re_alpha1,im_alpha1,re_alpha2,im_alpha2,re_rho_sq,im_rho_sq,re_h,im_h\n",
    );
    let mut rows = Vec::with_capacity(count);
    for l in 0..count {
        csv.push_str(&format!(
            "{l},{},{},{},{},{},{},{},{}\n",
            sig15(v.alpha1[l].re),
            sig15(v.alpha1[l].im),
            sig15(v.alpha2[l].re),
            sig15(v.alpha2[l].im),
            sig15(v.rho_sq[l].re),
            sig15(v.rho_sq[l].im),
            sig15(v.h[l].re),
            sig15(v.h[l].im),
        ));
        rows.push(json!({
            "l": l,
            "alpha1": [v.alpha1[l].re, v.alpha1[l].im],
            "alpha2": [v.alpha2[l].re, v.alpha2[l].im],
            "rho_sq": [v.rho_sq[l].re, v.rho_sq[l].im],
            "h": [v.h[l].re, v.h[l].im],
        }));
    }
    common.write_text(
        csv,
        json!({
            "command": "verblunsky",
            "ordering": [ctx.ord.n_plus(), ctx.ord.n_minus()],
            "size": common.size,
            "count": count,
            "rows": rows,
        }),
    )?;
    Ok(true)
}

fn cmd_cd_check(common: &Common, points: usize, tol: f64) -> Result<bool, String> {
    let (ctx, mut rng) = common.ctx()?;
    let l = ctx.count(12);
    let pts = checks::cd_points(&ctx, l, points, &mut rng).map_err(|e| e.to_string())?;
    let mut csv = String::from("idx,re_z,im_z,re_zp,im_zp,res_abc,res_formula\n");
    let mut report = common.report("cd-check");
    for (i, p) in pts.iter().enumerate() {
        csv.push_str(&format!(
            "{i},{},{},{},{},{},{}\n",
            sig15(p.z.re),
            sig15(p.z.im),
            sig15(p.zp.re),
            sig15(p.zp.im),
            sig15(p.res_abc),
            sig15(p.res_formula),
        ));
        report.push(Row::new(
            "cd_triple",
            json!({"z": [p.z.re, p.z.im], "zp": [p.zp.re, p.zp.im], "degree": l}),
            p.res_abc.max(p.res_formula),
            tol,
        ));
    }
    let fmt = pick_format(common.format, common.output.as_deref(), Fmt::Csv);
    match fmt {
        Fmt::Csv => emit(common.output.as_deref(), &csv).map_err(|e| e.to_string())?,
        Fmt::Json => {
            emit(common.output.as_deref(), &report.to_json()).map_err(|e| e.to_string())?
        }
    }
    Ok(report.pass)
}

fn cmd_second_kind(common: &Common, points: usize, tol: f64) -> Result<bool, String> {
    let (ctx, mut rng) = common.ctx()?;
    let pts = checks::second_kind_points(&ctx, points, &mut rng).map_err(|e| e.to_string())?;
    let mut csv = String::from("idx,which,l,re_z,im_z,res_series_cauchy,res_gamma\n");
    let mut report = common.report("second-kind");
    for (i, p) in pts.iter().enumerate() {
        csv.push_str(&format!(
            "{i},{},{},{},{},{},{}\n",
            p.which,
            p.l,
            sig15(p.z.re),
            sig15(p.z.im),
            sig15(p.res_series_cauchy),
            sig15(p.res_gamma),
        ));
        report.push(Row::new(
            "second_kind_consistency",
            json!({"which": p.which, "l": p.l, "z": [p.z.re, p.z.im]}),
            p.res_series_cauchy.max(p.res_gamma),
            tol,
        ));
    }
    let fmt = pick_format(common.format, common.output.as_deref(), Fmt::Csv);
    match fmt {
        Fmt::Csv => emit(common.output.as_deref(), &csv).map_err(|e| e.to_string())?,
        Fmt::Json => {
            emit(common.output.as_deref(), &report.to_json()).map_err(|e| e.to_string())?
        }
    }
    Ok(report.pass)
}

fn cmd_evolve(
    common: &Common,
    t11: Complex64,
    t21: Complex64,
    steps: usize,
    samples: usize,
    tol: f64,
) -> Result<bool, String> {
    let (ctx, _) = common.ctx()?;
    // Integrate every trusted site; the zero neighbor above the last one
    // only pollutes the top of the lattice, which the check below excludes.
    let count = ctx.f.trusted_len();
    let v0 = ctx.f.verblunsky(count).map_err(|e| e.to_string())?;
    let per_sample = (steps / samples.max(1)).max(1);
    let csv =
        trajectory_csv(&v0, t11, t21, samples, per_sample).map_err(|e| e.to_string())?;

    let st = olpuc_core::toda::integrate_flow(&v0, t11, t21, steps)
        .map_err(|e| e.to_string())?;
    let ft = olpuc_core::toda::refactorize_at_time(
        &ctx.m,
        ctx.ord,
        &DeformationTimes::first(t11, t21),
        ctx.size,
    )
    .map_err(|e| e.to_string())?;
    let vt = ft
        .verblunsky(st.trusted_len.min(ft.trusted_len()))
        .map_err(|e| e.to_string())?;
    let kmax = st
        .trusted_len
        .min(vt.len())
        .min(common.size.min(8) + 1);
    let mut worst = 0.0_f64;
    for k in 0..kmax {
        worst = worst.max((st.alpha1[k] - vt.alpha1[k]).norm());
        worst = worst.max((st.alpha2_bar[k] - vt.alpha2[k].conj()).norm());
    }
    let mut report = common.report("evolve");
    report.push(Row::new(
        "lattice_ode_vs_refactorization",
        json!({
            "t11": [t11.re, t11.im],
            "t21": [t21.re, t21.im],
            "steps": steps,
            "count": kmax,
        }),
        worst,
        tol,
    ));
    let fmt = pick_format(common.format, common.output.as_deref(), Fmt::Csv);
    match fmt {
        Fmt::Csv => emit(common.output.as_deref(), &csv).map_err(|e| e.to_string())?,
        Fmt::Json => {
            emit(common.output.as_deref(), &report.to_json()).map_err(|e| e.to_string())?
        }
    }
    Ok(report.pass)
}

fn cmd_discrete(
    common: &Common,
    lambda: Complex64,
    kind: StepKind,
    tol: f64,
) -> Result<bool, String> {
    let (ctx, _) = common.ctx()?;
    let size = common.size.min(10).max(ctx.ord.block_len() + 4);
    let mut report = common.report("discrete-step");
    let two_path =
        olpuc_core::toda::discrete_two_path_residual(&ctx.m, ctx.ord, size, lambda, kind)
            .map_err(|e| e.to_string())?;
    report.push(Row::new(
        "discrete_two_path",
        json!({"lambda": [lambda.re, lambda.im], "kind": format!("{kind:?}"), "size": size}),
        two_path,
        tol,
    ));
    if kind == StepKind::D1 {
        let flip = olpuc_core::toda::darboux_flip_residual(&ctx.m, ctx.ord, size, lambda)
            .map_err(|e| e.to_string())?;
        report.push(Row::new(
            "darboux_flip",
            json!({"lambda": [lambda.re, lambda.im], "size": size}),
            flip,
            tol,
        ));
    }
    if kind == StepKind::ConjPair && ctx.m.is_positive() {
        let (shifted, _) =
            olpuc_core::toda::discrete_step(&ctx.m, ctx.ord, size, lambda, kind)
                .map_err(|e| e.to_string())?;
        let fs = factorize(
            &moment_matrix(&shifted, ctx.ord, size).map_err(|e| e.to_string())?,
            ctx.ord,
            1e-13,
        )
        .map_err(|e| e.to_string())?;
        let mut bad = 0.0_f64;
        for l in 0..fs.trusted_len() {
            let h = fs.h(l);
            bad = bad.max(h.im.abs().max((-h.re).max(0.0)) / h.norm());
        }
        report.push(Row::new(
            "conj_pair_positivity",
            json!({"lambda": [lambda.re, lambda.im], "size": size}),
            bad,
            1e-9,
        ));
    }
    common.write(Fmt::Json, &report)?;
    Ok(report.pass)
}

fn cmd_tau_check(
    common: &Common,
    points: usize,
    t11: Complex64,
    t21: Complex64,
    tol: f64,
) -> Result<bool, String> {
    let (ctx, mut rng) = common.ctx()?;
    let times = DeformationTimes::first(t11, t21);
    let mut rows =
        checks::tau_rows(&ctx, &times, points, &mut rng).map_err(|e| e.to_string())?;
    for r in &mut rows {
        if r.check == "tau_representation" {
            r.tolerance = tol;
            r.pass = r.residual.is_finite() && r.residual <= tol;
        }
    }
    let mut report = common.report("tau-check");
    report.extend(rows);
    common.write(Fmt::Json, &report)?;
    Ok(report.pass)
}

fn cmd_bilinear(
    common: &Common,
    pairs: usize,
    r0: f64,
    r_inf: f64,
    tol: f64,
) -> Result<bool, String> {
    use rand::Rng;
    let (ctx, mut rng) = common.ctx()?;
    if !checks::is_entire(&ctx.m) {
        return Err("bilinear-check needs an entire-type measure (finite Fourier table, \
                    exponential-of-cosine weight, or exponential deformations thereof)"
            .into());
    }
    let nodes = ctx.quad.min(2048);
    let cap = ctx.count(4).max(2);
    let zero = DeformationTimes::zero();
    let mut report = common.report("bilinear-check");
    let draw = |rng: &mut ChaCha8Rng| {
        Complex64::new(
            rng.random_range(-0.07..0.07),
            rng.random_range(-0.07..0.07),
        )
    };
    for i in 0..pairs {
        let (t, tp, k, l) = if i == 0 {
            // Zero-time anchor: the contour values degenerate to the
            // biorthogonality pairing, so only k = l is well-conditioned.
            (zero.clone(), zero.clone(), 2usize.min(cap), 2usize.min(cap))
        } else {
            let t = DeformationTimes::first(draw(&mut rng), draw(&mut rng));
            let mut tp = DeformationTimes::first(draw(&mut rng), draw(&mut rng));
            while (t.t2[0] - tp.t2[0]).norm() < 1e-3 {
                tp = DeformationTimes::first(tp.t1[0], draw(&mut rng));
            }
            let k = rng.random_range(0..=cap);
            let l = if i % 2 == 0 {
                k
            } else {
                rng.random_range(0..=cap)
            };
            (t, tp, k, l)
        };
        let r = bilinear_residual(&ctx.m, ctx.ord, &t, &tp, k, l, r0, r_inf, nodes)
            .map_err(|e| e.to_string())?;
        report.push(Row::new(
            "bilinear_contour",
            json!({
                "k": k, "l": l,
                "t11": [t.t1.first().map_or(0.0, |v| v.re), t.t1.first().map_or(0.0, |v| v.im)],
                "t21": [t.t2.first().map_or(0.0, |v| v.re), t.t2.first().map_or(0.0, |v| v.im)],
                "tp11": [tp.t1.first().map_or(0.0, |v| v.re), tp.t1.first().map_or(0.0, |v| v.im)],
                "tp21": [tp.t2.first().map_or(0.0, |v| v.re), tp.t2.first().map_or(0.0, |v| v.im)],
            }),
            r,
            tol,
        ));
    }
    let t = DeformationTimes::first(Complex64::new(0.08, 0.0), Complex64::new(0.03, 0.0));
    let tp = DeformationTimes::first(Complex64::new(0.02, 0.0), Complex64::new(0.05, 0.0));
    let wave = wave_bilinear_residual(&ctx.m, ctx.ord, &t, &tp, 2, 1, r0, 512)
        .map_err(|e| e.to_string())?;
    report.push(Row::new(
        "bilinear_wave",
        json!({"n": 2, "m": 1, "r0": r0}),
        wave,
        tol,
    ));
    common.write(Fmt::Json, &report)?;
    Ok(report.pass)
}

fn cmd_verify_all(common: &Common, points: usize) -> Result<bool, String> {
    let (ctx, mut rng) = common.ctx()?;
    let rows = checks::verify_all(&ctx, points, &mut rng).map_err(|e| e.to_string())?;
    let mut report = common.report("verify-all");
    report.extend(rows);
    common.write(Fmt::Json, &report)?;
    Ok(report.pass)
}
