use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use teledrive::camgeom::PixelPoint;
use teledrive::config::{load_camera, load_chain, load_nav};
use teledrive::experiment::{self, check_invariants, Controller, TrialSetup};
use teledrive::kinchain::CameraRig;
use teledrive::simworld::{render_camera, scenario, RenderOptions, ScenarioSpec, SimRobot, SCENARIO_NAMES};
use teledrive::teleop::{self, ServeOptions, SessionConfig, TeleopSession};

#[derive(Parser)]
#[command(name = "teledrive", version, about = "Click-to-go robot control: trials, service and tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    #[value(name = "open_space", alias = "open-space")]
    OpenSpace,
    Doorway,
    Block,
    All,
}

impl ScenarioArg {
    fn names(self) -> Vec<&'static str> {
        match self {
            ScenarioArg::OpenSpace => vec!["open_space"],
            ScenarioArg::Doorway => vec!["doorway"],
            ScenarioArg::Block => vec!["block"],
            ScenarioArg::All => SCENARIO_NAMES.to_vec(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ControllerArg {
    Auto,
    Manual,
    Both,
}

#[derive(clap::Args)]
struct GeometryArgs {
    /// Camera intrinsics JSON (defaults to a 640x480, f=525 pinhole).
    #[arg(long)]
    camera_config: Option<PathBuf>,
    /// Kinematic chain JSON (defaults to the built-in pan/tilt mast).
    #[arg(long)]
    chain_config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded trials and write per-trial and comparison CSVs.
    Run {
        #[arg(long, value_enum, default_value = "all")]
        scenario: ScenarioArg,
        #[arg(long, value_enum, default_value = "both")]
        controller: ControllerArg,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        #[command(flatten)]
        geometry: GeometryArgs,
        #[arg(long)]
        nav_config: Option<PathBuf>,
    },
    /// Run the control service (WebSocket at /ws, PNG frames, JSON state).
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
        /// Built-in scenario name or a scenario JSON file.
        #[arg(long, default_value = "open_space")]
        scenario: String,
        #[command(flatten)]
        geometry: GeometryArgs,
        #[arg(long)]
        nav_config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Static files to serve at / (e.g. a browser console).
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
    /// Render the camera view at the scenario start to a PNG.
    Render {
        #[arg(long, default_value = "open_space")]
        scenario: String,
        #[arg(long, default_value_t = SimRobot::DEFAULT_TILT, allow_hyphen_values = true)]
        tilt: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        pan: f64,
        #[arg(long, default_value = "frame.png")]
        out: PathBuf,
        #[command(flatten)]
        geometry: GeometryArgs,
    },
    /// Print the floor point (robot frame, meters) under a pixel.
    Locate {
        #[arg(long)]
        u: f64,
        #[arg(long)]
        v: f64,
        #[arg(long, default_value_t = SimRobot::DEFAULT_TILT, allow_hyphen_values = true)]
        tilt: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        pan: f64,
        #[command(flatten)]
        geometry: GeometryArgs,
    },
}

type AnyError = Box<dyn std::error::Error>;

fn load_scenario(arg: &str) -> Result<ScenarioSpec, AnyError> {
    if Path::new(arg).is_file() {
        let text = teledrive::config::read_text(Path::new(arg))?;
        return Ok(ScenarioSpec::from_json(&text)?);
    }
    Ok(scenario(arg)?)
}

fn run(
    scenario_arg: ScenarioArg,
    controller: ControllerArg,
    trials: usize,
    seed: u64,
    out: &Path,
    geometry: &GeometryArgs,
    nav_config: Option<&Path>,
) -> Result<bool, AnyError> {
    if trials == 0 {
        return Err("--trials must be at least 1".into());
    }
    let setup = TrialSetup {
        camera: load_camera(geometry.camera_config.as_deref())?,
        chain: load_chain(geometry.chain_config.as_deref())?,
        nav: load_nav(nav_config)?,
        ..Default::default()
    };
    let mut failures = Vec::new();
    for name in scenario_arg.names() {
        let spec = scenario(name)?;
        let want_auto = matches!(controller, ControllerArg::Auto | ControllerArg::Both);
        let want_manual = matches!(controller, ControllerArg::Manual | ControllerArg::Both);
        let auto = want_auto.then(|| experiment::run_trials(&spec, Controller::Auto, trials, seed, &setup));
        let manual = want_manual.then(|| experiment::run_trials(&spec, Controller::Manual, trials, seed, &setup));
        let (files, console) = experiment::emit(out, name, auto.as_deref(), manual.as_deref())?;
        print!("{console}");
        for f in files {
            log::info!("wrote {}", f.display());
        }
        if let Some(a) = &auto {
            failures.extend(check_invariants(name, Controller::Auto, a).failures);
        }
    }
    for f in &failures {
        eprintln!("invariant failed: {f}");
    }
    Ok(failures.is_empty())
}

async fn serve(
    bind: String,
    scenario_arg: &str,
    geometry: &GeometryArgs,
    nav_config: Option<&Path>,
    seed: u64,
    static_dir: Option<PathBuf>,
) -> Result<(), AnyError> {
    let cfg = SessionConfig {
        camera: load_camera(geometry.camera_config.as_deref())?,
        chain: load_chain(geometry.chain_config.as_deref())?,
        nav: load_nav(nav_config)?,
        seed,
        ..Default::default()
    };
    let session = TeleopSession::new(cfg, load_scenario(scenario_arg)?);
    let opts = ServeOptions { bind, tick_period: Duration::from_secs_f64(teledrive::simworld::TICK_DT), static_dir };
    teleop::serve(session, opts).await?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result: Result<bool, AnyError> = match cli.command {
        Command::Run { scenario, controller, trials, seed, out, geometry, nav_config } => {
            run(scenario, controller, trials, seed, &out, &geometry, nav_config.as_deref())
        }
        Command::Serve { bind, scenario, geometry, nav_config, seed, static_dir } => {
            tokio::runtime::Runtime::new()
                .map_err(AnyError::from)
                .and_then(|rt| rt.block_on(serve(bind, &scenario, &geometry, nav_config.as_deref(), seed, static_dir)))
                .map(|()| true)
        }
        Command::Render { scenario, tilt, pan, out, geometry } => (|| {
            let spec = load_scenario(&scenario)?;
            let model = load_camera(geometry.camera_config.as_deref())?;
            let chain = load_chain(geometry.chain_config.as_deref())?;
            let mut robot = SimRobot::new(spec.start_pose, Default::default());
            robot.tilt = tilt;
            robot.pan = pan;
            let opts = RenderOptions { target: Some(spec.target), ..Default::default() };
            let frame = render_camera(&spec.world, &robot, &model, &chain, &opts, 0)?;
            frame.save_png(&out)?;
            println!("{}", out.display());
            Ok(true)
        })(),
        Command::Locate { u, v, tilt, pan, geometry } => (|| {
            let model = load_camera(geometry.camera_config.as_deref())?;
            let chain = load_chain(geometry.chain_config.as_deref())?;
            let rig = CameraRig::with_pan_tilt(model, &chain, pan, tilt)?;
            let g = rig.pixel_to_ground(PixelPoint::new(u, v))?;
            println!("{}", serde_json::json!({ "x": g.x, "y": g.y }));
            Ok(true)
        })(),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
