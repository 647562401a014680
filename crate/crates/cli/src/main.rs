//! `wristcap`: transmission conversions, arm kinematics and capability maps
//! from the command line.
//!
//! Exit codes: 0 success, 1 invalid input or configuration, 2 file I/O.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use wristcap_core::capmap::{self, ComputeOptions, ExportFormat};
use wristcap_core::kinematics::{fk, ik, IkOutcome, Variant};
use wristcap_core::scenario::{ScenarioConfig, ScenarioSettings, DEFAULT_SCENARIO};
use wristcap_core::transmission::{
    propagate_limits, servo_to_wrist, tendon_excursion, wrist_to_servo, ServoCommand, WristPose,
};
use wristcap_core::{Error, Pose};

#[derive(Parser)]
#[command(
    name = "wristcap",
    version,
    about = "Tendon wrist transmission, arm kinematics and bin-picking capability maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert between servo angles and wrist angles and print the propagated limits.
    Transmission(TransmissionArgs),
    /// Forward kinematics of the configured arm variant.
    Fk(FkArgs),
    /// Inverse kinematics for a tool pose.
    Ik(IkArgs),
    /// Compute a capability map over the bin grid.
    Capmap(CapmapArgs),
    /// Compare two capability maps cell by cell (a minus b).
    Compare(CompareArgs),
    /// Write the commented default scenario file.
    ScenarioInit(InitArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file; the built-in default scenario when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override a scenario setting, e.g. `grid.nx=8` or `ik.restarts=4`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<ScenarioConfig, Error> {
        match &self.config {
            Some(path) => ScenarioConfig::load(path, &self.overrides),
            None => {
                let settings = ScenarioSettings::parse_with_overrides("", &self.overrides)?;
                ScenarioConfig::from_settings(settings, Path::new("."))
            }
        }
    }
}

#[derive(Args)]
struct TransmissionArgs {
    /// Servo 1 angle in degrees (needs --q2).
    #[arg(long, allow_hyphen_values = true, requires = "q2", conflicts_with_all = ["flexion", "abduction"])]
    q1: Option<f64>,
    /// Servo 2 angle in degrees (needs --q1).
    #[arg(long, allow_hyphen_values = true, requires = "q1")]
    q2: Option<f64>,
    /// Wrist flexion in degrees (needs --abduction).
    #[arg(long, allow_hyphen_values = true, requires = "abduction")]
    flexion: Option<f64>,
    /// Wrist abduction in degrees (needs --flexion).
    #[arg(long, allow_hyphen_values = true, requires = "flexion")]
    abduction: Option<f64>,
    #[command(flatten)]
    scenario: ScenarioArgs,
}

#[derive(Args)]
struct FkArgs {
    /// Joint angles in degrees, comma separated, arm joints first.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    joints: Vec<f64>,
    /// Arm variant: bare, adapter60 or wrist. Defaults to the scenario's.
    #[arg(long)]
    variant: Option<Variant>,
    #[command(flatten)]
    scenario: ScenarioArgs,
}

#[derive(Args)]
struct IkArgs {
    /// Target position in mm as x,y,z in the arm base frame.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        num_args = 1,
        required = true
    )]
    xyz: Vec<f64>,
    /// Target roll,pitch,yaw in degrees (fixed axes x, y, z).
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        default_value = "180,0,0"
    )]
    rpy: Vec<f64>,
    /// Arm variant: bare, adapter60 or wrist. Defaults to the scenario's.
    #[arg(long)]
    variant: Option<Variant>,
    /// Restart seed; defaults to the scenario's `ik.rng_seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    scenario: ScenarioArgs,
}

#[derive(Args)]
struct CapmapArgs {
    /// Arm variant: bare, adapter60 or wrist. Defaults to the scenario's.
    #[arg(long)]
    variant: Option<Variant>,
    /// Output file; `.json` selects the structured format. CSV on stdout when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Base seed for the per-target IK restarts; defaults to the scenario's `ik.rng_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, 0 for one per core.
    #[arg(long, env = "WRISTCAP_THREADS", value_name = "N")]
    threads: Option<usize>,
    #[command(flatten)]
    scenario: ScenarioArgs,
}

#[derive(Args)]
struct CompareArgs {
    /// First map (CSV or JSON export).
    #[arg(long, value_name = "PATH")]
    a: PathBuf,
    /// Second map, subtracted from the first.
    #[arg(long, value_name = "PATH")]
    b: PathBuf,
    /// Write per-cell deltas as CSV here.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Write the text report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct InitArgs {
    /// Destination; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Replace an existing file.
    #[arg(long)]
    force: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Transmission(a) => transmission(a),
        Command::Fk(a) => forward(a),
        Command::Ik(a) => inverse(a),
        Command::Capmap(a) => capability_map(a),
        Command::Compare(a) => compare(a),
        Command::ScenarioInit(a) => scenario_init(a),
    }
}

/// Library errors plus I/O on paths the CLI opens itself.
#[derive(Debug)]
enum CliError {
    Core(Error),
    Io(PathBuf, std::io::Error),
    Usage(String),
}

impl CliError {
    fn is_io(&self) -> bool {
        match self {
            CliError::Core(e) => e.is_io(),
            CliError::Io(..) => true,
            CliError::Usage(_) => false,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => e.fmt(f),
            CliError::Io(path, e) => write!(f, "{}: {e}", path.display()),
            CliError::Usage(msg) => f.write_str(msg),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn write_stdout(text: &str) -> Result<(), CliError> {
    std::io::stdout()
        .write_all(text.as_bytes())
        .map_err(|e| CliError::Io(PathBuf::from("<stdout>"), e))
}

fn transmission(a: TransmissionArgs) -> Result<(), CliError> {
    let scenario = a.scenario.load()?;
    let params = &scenario.settings.transmission;
    let mut out = String::new();
    let pose = match (a.q1, a.q2, a.flexion, a.abduction) {
        (Some(q1), Some(q2), _, _) => Some(servo_to_wrist(ServoCommand::new(q1, q2), params)?),
        (_, _, Some(f), Some(ab)) => Some(WristPose::new(f, ab)),
        _ => None,
    };
    if let Some(pose) = pose {
        let cmd = wrist_to_servo(pose, params)?;
        let tendons = tendon_excursion(pose, params)?;
        out += &format!("servo        q1 {:.6}°  q2 {:.6}°\n", cmd.q1, cmd.q2);
        out += &format!(
            "wrist        flexion {:.6}°  abduction {:.6}°\n",
            pose.flexion, pose.abduction
        );
        let [d1, d2] = tendons.drive_excursions;
        out += &format!("drive        {d1:.6} mm  {d2:.6} mm\n");
        let [p0, p1, p2, p3] = tendons.pretension_lengths;
        out += &format!("pretension   {p0:.6} + {p1:.6} mm  {p2:.6} + {p3:.6} mm\n");
    }
    let limits = propagate_limits(&scenario.settings.servo, 2, params)?;
    let lim = &params.limits;
    out += "dof        max torque  max velocity  range\n";
    out += &format!(
        "flexion    {:>7.4} N·m  {:>7.2} °/s  {}° to {}°\n",
        limits.flexion.max_torque, limits.flexion.max_velocity, lim.flexion_min, lim.flexion_max
    );
    out += &format!(
        "abduction  {:>7.4} N·m  {:>7.2} °/s  {}° to {}°\n",
        limits.abduction.max_torque,
        limits.abduction.max_velocity,
        lim.abduction_min,
        lim.abduction_max
    );
    write_stdout(&out)
}

fn with_variant(scenario: ScenarioConfig, variant: Option<Variant>) -> ScenarioConfig {
    match variant {
        Some(v) => scenario.with_variant(v),
        None => scenario,
    }
}

fn format_pose(p: &Pose) -> String {
    let (r, pi, y) = p.orientation.euler_angles();
    let q = p.orientation.quaternion();
    format!(
        "position    {:.6} {:.6} {:.6} mm\nrpy         {:.6} {:.6} {:.6} deg\nquaternion  {:.9} {:.9} {:.9} {:.9} (w x y z)\n",
        p.position.x,
        p.position.y,
        p.position.z,
        r.to_degrees(),
        pi.to_degrees(),
        y.to_degrees(),
        q.w,
        q.i,
        q.j,
        q.k
    )
}

fn forward(a: FkArgs) -> Result<(), CliError> {
    let scenario = with_variant(a.scenario.load()?, a.variant);
    let chain = scenario.chain()?;
    let pose = fk(&chain, &a.joints)?;
    write_stdout(&format!(
        "chain       {} ({} joints)\n{}",
        chain.name,
        chain.dof(),
        format_pose(&pose)
    ))
}

fn triple(name: &str, v: &[f64]) -> Result<[f64; 3], CliError> {
    v.try_into().map_err(|_| {
        CliError::Usage(format!(
            "--{name} needs three comma-separated values, got {}",
            v.len()
        ))
    })
}

fn inverse(a: IkArgs) -> Result<(), CliError> {
    let scenario = with_variant(a.scenario.load()?, a.variant);
    let chain = scenario.chain()?;
    let target = Pose::from_xyz_rpy(triple("xyz", &a.xyz)?, triple("rpy", &a.rpy)?);
    let mut opts = scenario.settings.ik;
    if let Some(seed) = a.seed {
        opts.rng_seed = seed;
    }
    let text = match ik(&chain, &target, &opts)? {
        IkOutcome::Solved(s) => {
            let joints: Vec<String> = s.joints.iter().map(|q| format!("{q:.6}")).collect();
            format!(
                "reachable   yes\njoints      {}\nerror       {:.6} mm  {:.6} deg\nattempts    {} ({} iterations)\n",
                joints.join(","),
                s.pos_err,
                s.ori_err,
                s.attempts,
                s.iterations
            )
        }
        IkOutcome::NotReachable {
            iterations,
            attempts,
        } => {
            format!("reachable   no\nattempts    {attempts} ({iterations} iterations)\n")
        }
    };
    write_stdout(&text)
}

fn capability_map(a: CapmapArgs) -> Result<(), CliError> {
    let mut scenario = with_variant(a.scenario.load()?, a.variant);
    if let Some(seed) = a.seed {
        scenario.settings.ik.rng_seed = seed;
    }
    let threads = match a.threads {
        None | Some(0) => None,
        Some(n) => Some(n),
    };
    let start = Instant::now();
    let grid = capmap::compute_with(&scenario, ComputeOptions { threads })?;
    let tested = grid.cells.first().map_or(0, |c| c.tested);
    eprintln!(
        "capmap: {} variant, {} cells x {} targets, mean score {:.4}, full {:.4}, zero {:.4} ({:.1?})",
        scenario.settings.variant,
        grid.len(),
        tested,
        grid.aggregates.mean_score,
        grid.aggregates.fraction_full,
        grid.aggregates.fraction_zero,
        start.elapsed()
    );
    match &a.out {
        Some(path) => Ok(capmap::export(&grid, ExportFormat::from_path(path), path)?),
        None => write_stdout(&capmap::to_csv(&grid)),
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn compare(a: CompareArgs) -> Result<(), CliError> {
    let ga = capmap::import(&a.a)?;
    let gb = capmap::import(&a.b)?;
    let cmp = capmap::compare(&ga, &gb)?;
    if let Some(path) = &a.out {
        write_file(path, &cmp.to_csv())?;
    }
    let report = cmp.report(&stem(&a.a), &stem(&a.b));
    match &a.report {
        Some(path) => write_file(path, &report),
        None => write_stdout(&report),
    }
}

fn scenario_init(a: InitArgs) -> Result<(), CliError> {
    match &a.out {
        Some(path) => {
            if path.exists() && !a.force {
                return Err(CliError::Usage(format!(
                    "{} exists; pass --force to replace it",
                    path.display()
                )));
            }
            write_file(path, DEFAULT_SCENARIO)?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        None => write_stdout(DEFAULT_SCENARIO),
    }
}
