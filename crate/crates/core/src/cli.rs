//! Command-line front end: figure sweeps as CSV plus a single-point dump.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use bellnoise::bell::{optimize_psi, ChExperiment, ChSettings, NoiseModel, Source};
use bellnoise::measurement::{format_g12, GridSpec, MAX_EXACT_AMPLITUDE};
use bellnoise::oracle::mc_sample;
use bellnoise::states::{SchmidtState, SpinPairState, DEFAULT_TAIL_TOL};
use bellnoise::Error;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
const EXIT_IO: i32 = 1;

const DEFAULT_ANGLES: &str = "0,-0.7853981633974483,1.5707963267948966,-2.356194490192345";

#[derive(Debug, Parser)]
#[command(name = "bellnoise", version, about = "Clauser-Horne Bell tests with noisy photon-number readout")]
pub struct Cli {
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Write CSV here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// S at zero noise and the noise cutoff versus oscillator amplitude.
    ///
    /// Columns: alpha,s_exact,sigma_c_exact,s_quadrature,sigma_c_quadrature_scaled.
    /// Exact columns are empty for alpha above 12; the quadrature columns use
    /// sigma_c = alpha * sigma_0.
    Fig2(Fig2Args),
    /// S versus noise at one oscillator amplitude.
    ///
    /// Columns: sigma,s_exact,s_quadrature_scaled (quadrature S at sigma/alpha).
    Fig3(Fig3Args),
    /// Spin-pair state: optimized psi, S and noise cutoff versus N.
    ///
    /// Columns: N,psi_opt,S,sigma_c.
    Fig4(Fig4Args),
    /// Full dump of one CH evaluation as field,value rows.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Args)]
pub struct PairArgs {
    /// Pump parameter of the pair-coherent state
    #[arg(long, default_value_t = 1.1)]
    pub r0: f64,

    /// Analyzer angles theta,phi,theta',phi' in radians
    #[arg(long, default_value = DEFAULT_ANGLES, value_parser = parse_angles, allow_hyphen_values = true)]
    pub angles: [f64; 4],

    /// Fock-tail probability allowed when truncating the Schmidt series
    #[arg(long, default_value_t = DEFAULT_TAIL_TOL)]
    pub tail_tol: f64,
}

#[derive(Debug, Args)]
pub struct Fig2Args {
    /// Oscillator amplitudes, "a,b,c" or "start:stop:step"
    #[arg(long, default_value = "2:12:1", value_parser = parse_num_list)]
    pub alpha: NumList,
    #[command(flatten)]
    pub pair: PairArgs,
    /// Cutoff bisection tolerance, relative to the noise scale
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct Fig3Args {
    #[arg(long, default_value_t = 10.0)]
    pub alpha: f64,
    /// Noise widths in photons, "a,b,c" or "start:stop:step"
    #[arg(long, default_value = "0:5:0.1", value_parser = parse_num_list)]
    pub sigma: NumList,
    #[command(flatten)]
    pub pair: PairArgs,
}

#[derive(Debug, Args)]
pub struct Fig4Args {
    /// Photon numbers, "a,b,c" or "start:stop:step"
    #[arg(long, default_value = "1,2,5,10,20,40", value_parser = parse_num_list)]
    pub n: NumList,
    /// Noise width used while optimizing psi
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exact,
    Quadrature,
    Spin,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_enum, default_value_t = Mode::Quadrature)]
    pub mode: Mode,
    #[command(flatten)]
    pub pair: PairArgs,
    #[arg(long, default_value_t = 10.0)]
    pub alpha: f64,
    /// Spin-pair photon number
    #[arg(long, default_value_t = 1)]
    pub n: u32,
    /// Spin mode: optimize psi for settings (0, psi, 2psi, 3psi) instead of using --angles
    #[arg(long)]
    pub psi_scan: bool,
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    /// Detector efficiency (quadrature mode only)
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    /// Monte Carlo samples for a cross-check of the (theta, phi) run; 0 disables
    #[arg(long, default_value_t = 0)]
    pub mc_samples: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

/// Parsed `"a,b,c"` or inclusive `"start:stop:step"` list.
#[derive(Debug, Clone, PartialEq)]
pub struct NumList(pub Vec<f64>);

fn parse_num_list(s: &str) -> Result<NumList, String> {
    parse_list(s).map(NumList)
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty list".into());
    }
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    let out = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err("range must be start:stop:step".into());
        }
        let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || stop < start {
            return Err("range needs step > 0 and stop >= start".into());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        (0..=count).map(|k| start + k as f64 * step).collect()
    } else {
        s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if out.is_empty() || out.iter().any(|v| !v.is_finite()) {
        return Err("list must hold finite numbers".into());
    }
    Ok(out)
}

fn parse_angles(s: &str) -> Result<[f64; 4], String> {
    let v = parse_list(s)?;
    v.try_into().map_err(|_| "expected four comma-separated angles".to_string())
}

/// Failure with the exit status it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = if e.is_numerical_guard() { EXIT_NUMERICAL } else { EXIT_CONFIG };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self {
            code: EXIT_IO,
            message: e.to_string(),
        }
    }
}

fn config(msg: impl Into<String>) -> CliError {
    CliError {
        code: EXIT_CONFIG,
        message: msg.into(),
    }
}

fn g(v: f64) -> String {
    format_g12(v)
}

fn settings_of(pair: &PairArgs) -> Result<ChSettings, CliError> {
    let [t, p, tp, pp] = pair.angles;
    Ok(ChSettings::new(t, p, tp, pp)?)
}

fn header(cmd: &str, fields: &[(&str, String)]) -> String {
    let mut h = format!("# bellnoise {} {cmd}", env!("CARGO_PKG_VERSION"));
    for (k, v) in fields {
        let _ = write!(h, " {k}={v}");
    }
    h.push('\n');
    h
}

fn angles_field(s: &ChSettings) -> String {
    s.as_array().iter().map(|v| g(*v)).collect::<Vec<_>>().join(",")
}

pub fn run(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Fig2(a) => fig2(a),
        Command::Fig3(a) => fig3(a),
        Command::Fig4(a) => fig4(a),
        Command::Eval(a) => eval(a),
    }
}

fn quadrature_source(state: &SchmidtState) -> Source {
    Source::Quadrature {
        state: state.clone(),
        grid: GridSpec::standard(),
    }
}

fn fig2(a: &Fig2Args) -> Result<String, CliError> {
    if a.alpha.0.iter().any(|&x| x < 0.0) {
        return Err(config("alpha values must be >= 0"));
    }
    let settings = settings_of(&a.pair)?;
    let base = SchmidtState::pair_coherent(a.pair.r0, 1.0, 1.0, a.pair.tail_tol)?;
    let quad = ChExperiment::prepare(&quadrature_source(&base), settings, 1.0)?.sigma_cutoff(a.tol)?;

    let rows: Vec<String> = a
        .alpha
        .0
        .par_iter()
        .map(|&alpha| {
            let (s_ex, sc_ex) = if alpha <= MAX_EXACT_AMPLITUDE {
                let st = base.with_oscillators(alpha, alpha)?;
                let c = ChExperiment::prepare(&Source::Exact(st), settings, 1.0)?.sigma_cutoff(a.tol)?;
                (g(c.s_at_zero), g(c.sigma_c))
            } else {
                (String::new(), String::new())
            };
            Ok(format!(
                "{},{s_ex},{sc_ex},{},{}\n",
                g(alpha),
                g(quad.s_at_zero),
                g(alpha * quad.sigma_c)
            ))
        })
        .collect::<Result<_, Error>>()?;

    let mut out = header(
        "fig2",
        &[
            ("mode", "exact+quadrature".into()),
            ("r0", g(a.pair.r0)),
            ("angles", angles_field(&settings)),
            ("tail_tol", g(a.pair.tail_tol)),
            ("n_max", base.n_max().to_string()),
            ("tol", g(a.tol)),
            ("grid", "-8:8:0.03125".into()),
        ],
    );
    out.push_str("alpha,s_exact,sigma_c_exact,s_quadrature,sigma_c_quadrature_scaled\n");
    out.extend(rows);
    Ok(out)
}

fn check_nonincreasing(sigmas: &[f64], values: &[f64]) -> Result<(), CliError> {
    let mut order: Vec<usize> = (0..sigmas.len()).collect();
    order.sort_by(|&x, &y| sigmas[x].total_cmp(&sigmas[y]));
    for w in order.windows(2) {
        let (x, y) = (w[0], w[1]);
        if values[y] > values[x] + 1e-12 {
            return Err(Error::NonMonotone {
                sigma_before: sigmas[x],
                s_before: values[x],
                sigma_after: sigmas[y],
                s_after: values[y],
            }
            .into());
        }
    }
    Ok(())
}

fn fig3(a: &Fig3Args) -> Result<String, CliError> {
    if a.sigma.0.iter().any(|&s| s < 0.0) {
        return Err(config("sigma values must be >= 0"));
    }
    if !(a.alpha > 0.0) {
        return Err(config("alpha must be > 0"));
    }
    let settings = settings_of(&a.pair)?;
    let st = SchmidtState::pair_coherent(a.pair.r0, a.alpha, a.alpha, a.pair.tail_tol)?;
    let exact = if a.alpha <= MAX_EXACT_AMPLITUDE {
        Some(ChExperiment::prepare(&Source::Exact(st.clone()), settings, 1.0)?)
    } else {
        None
    };
    let quad = ChExperiment::prepare(&quadrature_source(&st), settings, 1.0)?;

    let mut s_ex = Vec::new();
    let mut s_q = Vec::new();
    for &sigma in &a.sigma.0 {
        if let Some(e) = &exact {
            s_ex.push(e.evaluate(sigma)?.s);
        }
        s_q.push(quad.evaluate(sigma / a.alpha)?.s);
    }
    if exact.is_some() {
        check_nonincreasing(&a.sigma.0, &s_ex)?;
    }
    check_nonincreasing(&a.sigma.0, &s_q)?;

    let mut out = header(
        "fig3",
        &[
            ("mode", "exact+quadrature".into()),
            ("r0", g(a.pair.r0)),
            ("alpha", g(a.alpha)),
            ("angles", angles_field(&settings)),
            ("tail_tol", g(a.pair.tail_tol)),
            ("n_max", st.n_max().to_string()),
            ("grid", "-8:8:0.03125".into()),
        ],
    );
    out.push_str("sigma,s_exact,s_quadrature_scaled\n");
    for (k, sigma) in a.sigma.0.iter().enumerate() {
        let ex = s_ex.get(k).map(|v| g(*v)).unwrap_or_default();
        let _ = writeln!(out, "{},{ex},{}", g(*sigma), g(s_q[k]));
    }
    Ok(out)
}

fn fig4(a: &Fig4Args) -> Result<String, CliError> {
    let ns: Vec<u32> = a
        .n
        .0
        .iter()
        .map(|&v| {
            if v.fract() != 0.0 || v < 1.0 {
                Err(config(format!("N must be a positive integer, got {v}")))
            } else {
                Ok(v as u32)
            }
        })
        .collect::<Result<_, _>>()?;
    let noise = NoiseModel::readout(a.sigma)?;
    let rows: Vec<String> = ns
        .par_iter()
        .map(|&n| {
            let state = SpinPairState::new(n)?;
            let best = optimize_psi(&state, &noise)?;
            let cut = ChExperiment::prepare(&Source::Spin(state), ChSettings::from_psi(best.psi), 1.0)?
                .sigma_cutoff(a.tol)?;
            Ok(format!(
                "{n},{},{},{}\n",
                g(best.psi),
                g(best.evaluation.s),
                g(cut.sigma_c)
            ))
        })
        .collect::<Result<_, Error>>()?;
    let mut out = header(
        "fig4",
        &[
            ("mode", "spin".into()),
            ("sigma", g(a.sigma)),
            ("tol", g(a.tol)),
            ("psi_scan", "200".into()),
        ],
    );
    out.push_str("N,psi_opt,S,sigma_c\n");
    out.extend(rows);
    Ok(out)
}

fn eval(a: &EvalArgs) -> Result<String, CliError> {
    let noise = NoiseModel::new(a.sigma, a.eta)?;
    let mut fields: Vec<(&str, String)> = vec![("mode", format!("{:?}", a.mode).to_lowercase())];
    let (source, settings) = match a.mode {
        Mode::Spin => {
            let state = SpinPairState::new(a.n)?;
            fields.push(("N", a.n.to_string()));
            let settings = if a.psi_scan {
                let best = optimize_psi(&state, &noise)?;
                fields.push(("psi_opt", g(best.psi)));
                ChSettings::from_psi(best.psi)
            } else {
                settings_of(&a.pair)?
            };
            (Source::Spin(state), settings)
        }
        Mode::Exact | Mode::Quadrature => {
            if a.psi_scan {
                return Err(config("--psi-scan applies to the spin mode only"));
            }
            let st = SchmidtState::pair_coherent(a.pair.r0, a.alpha, a.alpha, a.pair.tail_tol)?;
            fields.push(("r0", g(a.pair.r0)));
            fields.push(("tail_tol", g(a.pair.tail_tol)));
            fields.push(("n_max", st.n_max().to_string()));
            fields.push(("truncated_mass", g(st.truncated_mass())));
            let source = if a.mode == Mode::Exact {
                fields.push(("alpha", g(a.alpha)));
                Source::Exact(st)
            } else {
                quadrature_source(&st)
            };
            (source, settings_of(&a.pair)?)
        }
    };
    let exp = ChExperiment::prepare(&source, settings, noise.eta())?;
    let e = exp.evaluate(noise.sigma())?;
    let cut = exp.sigma_cutoff(a.tol)?;

    let names = ["theta", "phi", "theta_prime", "phi_prime"];
    for (name, v) in names.iter().zip(settings.as_array()) {
        fields.push((name, g(v)));
    }
    fields.push(("sigma", g(noise.sigma())));
    fields.push(("eta", g(noise.eta())));
    let pp_names = ["p_pp_theta_phi", "p_pp_theta_phi_prime", "p_pp_theta_prime_phi", "p_pp_theta_prime_phi_prime"];
    for (name, v) in pp_names.iter().zip(e.p_pp) {
        fields.push((name, g(v)));
    }
    fields.push(("p_a_theta_prime", g(e.p_a)));
    fields.push(("p_b_phi", g(e.p_b)));
    fields.push(("s", g(e.s)));
    fields.push(("sigma_c", g(cut.sigma_c)));
    fields.push(("tol", g(a.tol)));

    if a.mc_samples > 0 {
        let dist = match &source {
            Source::Exact(st) => {
                bellnoise::measurement::exact_joint_distribution(st, settings.theta, settings.phi)?
            }
            Source::Spin(st) => bellnoise::measurement::spin_joint_distribution(st, settings.theta, settings.phi)?,
            Source::Quadrature { .. } => return Err(config("--mc-samples needs an integer-outcome mode")),
        };
        let mc = mc_sample(&dist, &noise, a.mc_samples, a.seed)?;
        fields.push(("mc_samples", a.mc_samples.to_string()));
        fields.push(("mc_seed", a.seed.to_string()));
        fields.push(("mc_p_pp_theta_phi", g(mc.p_pp)));
        fields.push(("mc_se_p_pp_theta_phi", g(mc.se_pp)));
        fields.push(("mc_p_a_theta", g(mc.p_a)));
        fields.push(("mc_se_p_a_theta", g(mc.se_a)));
        fields.push(("mc_p_b_phi", g(mc.p_b)));
        fields.push(("mc_se_p_b_phi", g(mc.se_b)));
    }

    let mut out = header("eval", &[("version", env!("CARGO_PKG_VERSION").into())]);
    out.push_str("field,value\n");
    for (k, v) in fields {
        let _ = writeln!(out, "{k},{v}");
    }
    Ok(out)
}

pub fn emit(cli: &Cli, text: &str) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => {
            let mut f = File::create(path)?;
            f.write_all(text.as_bytes())?;
        }
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}
