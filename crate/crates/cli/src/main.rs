mod config;

use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use swingcast_core::report::{build_report, render_text};
use swingcast_core::telemetry::{Connection, Role, SessionPhase, TelemetryServer, WireMessage};
use swingcast_core::trace::{
    generate_trace, load_participants, load_session_file, replay, save_session_file, GeneratorParams, Pace, PulseSpec,
};
use swingcast_core::{analyze_trace, summarize, Pipeline, SessionSummary, SpeedBracket, SwingEvent, TraceFile};

use config::Settings;

#[derive(Parser)]
#[command(
    name = "swingcast",
    version,
    about = "Swing detection, live telemetry and session comparison"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConditionArg {
    Baseline,
    Visualisation,
}

impl From<ConditionArg> for swingcast_core::Condition {
    fn from(c: ConditionArg) -> Self {
        match c {
            ConditionArg::Baseline => Self::Baseline,
            ConditionArg::Visualisation => Self::Visualisation,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic half-sine pulse trace.
    Gen {
        /// Comma-separated `start_ms:duration_ms:peak_dps[:wx/wy/wz]`.
        #[arg(long, value_delimiter = ',')]
        pulses: Vec<String>,
        #[arg(long, default_value_t = 100)]
        rate: u32,
        /// Uniform noise half-width per axis, dps.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        tail_ms: u64,
        /// Prepend the calibration gestures so gated analysis goes live.
        #[arg(long)]
        calibration: bool,
        /// Output path; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Detect swings in a trace file.
    Analyze {
        trace: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Ignore samples until calibration completes, as the server does.
        #[arg(long)]
        gate: bool,
        #[arg(long)]
        json: bool,
        /// Also write the swings and shot annotations as a session document.
        #[arg(long, value_name = "FILE")]
        save_session: Option<PathBuf>,
        #[arg(long, requires = "save_session")]
        participant: Option<String>,
        #[arg(long, value_enum, default_value = "baseline")]
        condition: ConditionArg,
    },
    /// Stream a trace to a running server as the session's device.
    Replay {
        trace: PathBuf,
        #[arg(long, value_name = "HOST:PORT")]
        connect: String,
        #[arg(long)]
        session: String,
        /// Playback multiplier; `inf` sends as fast as possible.
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
        #[arg(long)]
        participant: Option<String>,
        #[arg(long, value_enum)]
        condition: Option<ConditionArg>,
    },
    /// Print the swings broadcast on a session, as a viewer, until it ends.
    Watch {
        #[arg(long, value_name = "HOST:PORT")]
        connect: String,
        #[arg(long)]
        session: String,
        /// Exit after this many swings.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        count: Option<u64>,
    },
    /// Run the telemetry server.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
        #[arg(long, default_value_t = 7878)]
        port: u16,
        #[arg(long)]
        data_dir: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Paired comparison of a baseline and a visualisation directory.
    Compare {
        baseline: PathBuf,
        visualisation: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Shot statistics for one session document.
    Summarize {
        session: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("swingcast: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Gen {
            pulses,
            rate,
            noise,
            seed,
            tail_ms,
            calibration,
            output,
        } => {
            anyhow::ensure!(
                noise.is_finite() && noise >= 0.0,
                "--noise must be a non-negative number"
            );
            let pulses = pulses.iter().map(|p| parse_pulse(p)).collect::<Result<Vec<_>>>()?;
            let params = GeneratorParams {
                sample_rate_hz: rate,
                seed,
                noise_dps: noise,
                tail_ms,
                calibration_gestures: calibration,
            };
            let text = generate_trace(&pulses, &params)?.encode()?;
            match output {
                Some(path) => fs::write(&path, text).with_context(|| format!("writing {}", path.display())),
                None => io::stdout().write_all(text.as_bytes()).context("writing stdout"),
            }
        }
        Command::Analyze {
            trace,
            config,
            gate,
            json,
            save_session,
            participant,
            condition,
        } => {
            let settings = Settings::load(config.as_deref())?;
            let trace = read_trace(&trace)?;
            let mut pipeline = if gate {
                Pipeline::gated(settings.detector, settings.physical, settings.calibration)
            } else {
                Pipeline::ungated(settings.detector, settings.physical)
            };
            let swings = analyze_trace(&trace, &mut pipeline)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&swings)?);
            } else {
                print!("{}", swing_table(&swings));
                if gate && !pipeline.is_live() {
                    println!("calibration never completed; no samples were analysed");
                }
            }
            if let Some(path) = save_session {
                let id = participant.unwrap_or_else(|| "unknown".into());
                save_session_file(&path, &pipeline.into_session(id, condition.into()))?;
            }
            Ok(())
        }
        Command::Replay {
            trace,
            connect,
            session,
            speed,
            participant,
            condition,
        } => {
            let pace = Pace::from_multiplier(speed).ok_or_else(|| anyhow!("--speed must be positive"))?;
            let trace = read_trace(&trace)?;
            let addr = resolve(&connect)?;
            let mut conn = Connection::connect(addr, &session).with_context(|| format!("connecting to {connect}"))?;
            conn.hello(Role::Device, participant, condition.map(Into::into))?;
            if let Some(WireMessage::Error { code, detail, .. }) = conn.recv()? {
                bail!("server refused device: {code:?}: {detail}");
            }
            let mut listener = Connection::connect(addr, &session)?;
            listener.hello(Role::Viewer, None, None)?;
            // registered once the server answers; only then start streaming
            listener
                .recv()?
                .ok_or_else(|| anyhow!("server closed the viewer connection"))?;
            let printer = thread::spawn(move || print_broadcast(listener));
            let summary = replay(&trace, pace, |item| conn.send_item(&item).and_then(|_| conn.flush()))
                .context("connection lost during replay")?;
            conn.finish_sending()?;
            let mut errors = 0;
            while let Some(msg) = conn.recv()? {
                if let WireMessage::Error { code, detail, .. } = msg {
                    errors += 1;
                    eprintln!("server error {code:?}: {detail}");
                }
            }
            info!(
                "sent {} samples and {} annotations in {:?}",
                summary.samples, summary.annotations, summary.elapsed
            );
            let swings = printer.join().map_err(|_| anyhow!("viewer thread panicked"))??;
            println!("{swings} swings");
            if errors > 0 {
                bail!("server reported {errors} error(s)");
            }
            Ok(())
        }
        Command::Watch {
            connect,
            session,
            count,
        } => {
            let mut conn = Connection::connect(resolve(&connect)?, &session)
                .with_context(|| format!("connecting to {connect}"))?;
            conn.hello(Role::Viewer, None, None)?;
            conn.request_latest()?;
            let mut seen: u64 = 0;
            while let Some(msg) = conn.recv()? {
                match &msg {
                    WireMessage::Swing { swing, .. } => {
                        println!("{}", swing_row(seen + 1, swing));
                        seen += 1;
                        if count.is_some_and(|c| seen >= c) {
                            break;
                        }
                    }
                    WireMessage::Latest { swing: Some(swing), .. } => println!("{}", swing_row("last", swing)),
                    WireMessage::SessionState { state, .. } => {
                        println!("session {}", phase_name(*state));
                        if *state == SessionPhase::Ended {
                            break;
                        }
                    }
                    WireMessage::Error { code, detail, .. } => bail!("{code:?}: {detail}"),
                    _ => {}
                }
            }
            Ok(())
        }
        Command::Serve {
            bind,
            port,
            data_dir,
            config,
        } => {
            let settings = Settings::load(config.as_deref())?;
            let server = TelemetryServer::bind((bind.as_str(), port), settings.server_config(data_dir.as_deref()))
                .with_context(|| format!("binding {bind}:{port}"))?;
            println!("listening on {}", server.local_addr()?);
            server.run();
            Ok(())
        }
        Command::Compare {
            baseline,
            visualisation,
            json,
        } => {
            let b = load_participants(&baseline, Some(swingcast_core::Condition::Baseline))?;
            let v = load_participants(&visualisation, Some(swingcast_core::Condition::Visualisation))?;
            anyhow::ensure!(!b.is_empty(), "{}: no participant documents", baseline.display());
            let report = build_report(&b, &v)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", render_text(&report));
            }
            Ok(())
        }
        Command::Summarize { session, json } => {
            let record = load_session_file(&session)?;
            let summary = summarize(&record)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&summary)?);
            } else {
                print!("{}", summary_text(&record.participant_id, &summary));
            }
            Ok(())
        }
    }
}

fn read_trace(path: &Path) -> Result<TraceFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    TraceFile::decode(&text).with_context(|| path.display().to_string())
}

fn resolve(addr: &str) -> Result<SocketAddr> {
    use std::net::ToSocketAddrs;
    addr.to_socket_addrs()
        .with_context(|| format!("resolving {addr}"))?
        .next()
        .ok_or_else(|| anyhow!("{addr}: no address"))
}

fn parse_pulse(spec: &str) -> Result<PulseSpec> {
    let bad = || anyhow!("bad pulse `{spec}`: expected start_ms:duration_ms:peak_dps[:wx/wy/wz]");
    let parts: Vec<&str> = spec.trim().split(':').collect();
    if !(3..=4).contains(&parts.len()) {
        return Err(bad());
    }
    let mut pulse = PulseSpec::new(
        parts[0].parse().map_err(|_| bad())?,
        parts[1].parse().map_err(|_| bad())?,
        parts[2].parse().map_err(|_| bad())?,
    );
    if let Some(w) = parts.get(3) {
        let w: Vec<f64> = w
            .split('/')
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        let [x, y, z] = w[..] else { return Err(bad()) };
        let norm = (x * x + y * y + z * z).sqrt();
        anyhow::ensure!(
            norm.is_finite() && norm > 0.0,
            "bad pulse `{spec}`: axis weights must not all be zero"
        );
        pulse.axis_weights = [x / norm, y / norm, z / norm];
    }
    Ok(pulse)
}

fn swing_row(n: impl std::fmt::Display, s: &SwingEvent) -> String {
    format!(
        "{n:>3}  {:>8}  {:>8}  {:>10.2}  {:>9.2}  {:>9.1}",
        s.start_ms, s.end_ms, s.peak_omega_dps, s.peak_speed_mph, s.peak_power_pct
    )
}

fn phase_name(phase: SessionPhase) -> &'static str {
    match phase {
        SessionPhase::Calibrating => "calibrating",
        SessionPhase::Live => "live",
        SessionPhase::Ended => "ended",
    }
}

fn swing_table(swings: &[SwingEvent]) -> String {
    let mut out = format!("{} swings\n", swings.len());
    if swings.is_empty() {
        return out;
    }
    out.push_str("  #  start_ms    end_ms   omega_dps  speed_mph  power_pct\n");
    for (i, s) in swings.iter().enumerate() {
        out.push_str(&swing_row(i + 1, s));
        out.push('\n');
    }
    let peak = swings.iter().map(|s| s.peak_speed_mph).fold(f64::MIN, f64::max);
    let mean = swings.iter().map(|s| s.peak_speed_mph).sum::<f64>() / swings.len() as f64;
    out.push_str(&format!("speed mph: max {peak:.2}, mean {mean:.2}\n"));
    out
}

fn summary_text(participant: &str, s: &SessionSummary) -> String {
    let pct = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.1}%"));
    let mut out = format!("{participant}\n");
    out.push_str(&format!("shots: {}\n", s.total_shots));
    out.push_str(&format!("accurate: {} ({})\n", s.accurate_shots, pct(s.accurate_pct)));
    out.push_str(&format!("points won: {}\n", s.points_won));
    out.push_str(&format!("shots at power > 75%: {}\n", s.shots_power_above_75));
    out.push_str(&format!("{:<28}{:>8}{:>10}\n", "speed bracket", "total", "accurate"));
    for b in SpeedBracket::ALL {
        let cell = |v: Option<[f64; 3]>| pct(v.map(|v| v[b.index()]));
        out.push_str(&format!(
            "{:<28}{:>8}{:>10}\n",
            b.label(),
            cell(s.bracket_total_pct),
            cell(s.bracket_accurate_pct)
        ));
    }
    out
}

/// Prints swings broadcast during a replay until the session ends.
fn print_broadcast(mut conn: Connection) -> Result<usize> {
    let mut swings = 0;
    while let Some(msg) = conn.recv()? {
        match &msg {
            WireMessage::Swing { swing, .. } => {
                swings += 1;
                println!("{}", swing_row(swings, swing));
            }
            WireMessage::SessionState { state, .. } => {
                println!("session {}", phase_name(*state));
                if *state == SessionPhase::Ended {
                    break;
                }
            }
            _ => {}
        }
    }
    Ok(swings)
}
