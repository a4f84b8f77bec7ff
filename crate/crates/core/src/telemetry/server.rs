use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};

use log::{debug, info, warn};
use thiserror::Error;

use super::outbox::Outbox;
use super::wire::{valid_session_id, ErrorCode, Role, SessionPhase, WireMessage};
use crate::calibration::CalibrationConfig;
use crate::engine::DetectorConfig;
use crate::model::{PhysicalConfig, SwingEvent};
use crate::pipeline::{Pipeline, PipelineEvent};
use crate::session::{Condition, SessionRecord};
use crate::trace::{save_session, SESSION_FILE};

pub const DEFAULT_VIEWER_QUEUE: usize = 256;
pub const SWING_LOG: &str = "swings.log";

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub physical: PhysicalConfig,
    pub detector: DetectorConfig,
    pub calibration: CalibrationConfig,
    /// Session logs go to `<data_dir>/sessions/<id>/`; nothing is written when absent.
    pub data_dir: Option<PathBuf>,
    pub viewer_queue: usize,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            physical: PhysicalConfig::default(),
            detector: DetectorConfig::default(),
            calibration: CalibrationConfig::default(),
            data_dir: None,
            viewer_queue: DEFAULT_VIEWER_QUEUE,
        }
    }
}

#[derive(Debug, Error)]
pub enum TelemetryError {
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

struct SessionLog {
    dir: PathBuf,
    swings: BufWriter<File>,
}

impl SessionLog {
    fn open(data_dir: &std::path::Path, id: &str) -> io::Result<Self> {
        let dir = data_dir.join("sessions").join(id);
        fs::create_dir_all(&dir)?;
        let swings = OpenOptions::new().create(true).append(true).open(dir.join(SWING_LOG))?;
        Ok(Self {
            dir,
            swings: BufWriter::new(swings),
        })
    }

    fn append_swing(&mut self, line: &str) -> io::Result<()> {
        writeln!(self.swings, "{line}")?;
        self.swings.flush()
    }

    fn write_session(&self, record: &SessionRecord) -> io::Result<()> {
        let tmp = self.dir.join(format!("{SESSION_FILE}.tmp"));
        fs::write(&tmp, save_session(record))?;
        fs::rename(tmp, self.dir.join(SESSION_FILE))
    }
}

struct SessionInner {
    phase: SessionPhase,
    device_attached: bool,
    pipeline: Pipeline,
    participant_id: String,
    condition: Condition,
    viewers: Vec<Arc<Outbox>>,
    device_outbox: Option<Arc<Outbox>>,
    latest: Option<SwingEvent>,
    log: Option<SessionLog>,
}

struct Session {
    id: String,
    inner: Mutex<SessionInner>,
}

impl Session {
    fn state_line(&self, phase: SessionPhase, outbox: &Outbox) -> String {
        WireMessage::SessionState {
            session_id: self.id.clone(),
            state: phase,
            dropped: outbox.dropped(),
        }
        .to_line()
    }
}

impl SessionInner {
    fn broadcast(&mut self, line: &str) {
        self.viewers.retain(|v| v.push(line.to_string()));
    }

    fn record(&self) -> SessionRecord {
        SessionRecord {
            swings: self.pipeline.swings().to_vec(),
            ..SessionRecord::new(self.participant_id.clone(), self.condition)
        }
    }

    fn persist(&mut self, id: &str) {
        if let Some(log) = &self.log {
            if let Err(e) = log.write_session(&self.record()) {
                warn!("session {id}: failed to write session document: {e}");
            }
        }
    }
}

struct Registry {
    cfg: ServerConfig,
    sessions: Mutex<HashMap<String, Arc<Session>>>,
}

impl Registry {
    fn get_or_create(&self, id: &str) -> Arc<Session> {
        let mut map = self.sessions.lock().unwrap();
        map.entry(id.to_string())
            .or_insert_with(|| {
                let log = self.cfg.data_dir.as_ref().and_then(|d| match SessionLog::open(d, id) {
                    Ok(l) => Some(l),
                    Err(e) => {
                        warn!("session {id}: cannot open log directory: {e}");
                        None
                    }
                });
                Arc::new(Session {
                    id: id.to_string(),
                    inner: Mutex::new(SessionInner {
                        phase: SessionPhase::Calibrating,
                        device_attached: false,
                        pipeline: Pipeline::gated(self.cfg.detector, self.cfg.physical, self.cfg.calibration),
                        participant_id: id.to_string(),
                        condition: Condition::Baseline,
                        viewers: Vec::new(),
                        device_outbox: None,
                        latest: None,
                        log,
                    }),
                })
            })
            .clone()
    }

    fn get(&self, id: &str) -> Option<Arc<Session>> {
        self.sessions.lock().unwrap().get(id).cloned()
    }

    fn latest(&self, id: &str) -> Result<Option<SwingEvent>, TelemetryError> {
        let session = self
            .get(id)
            .ok_or_else(|| TelemetryError::UnknownSession(id.to_string()))?;
        let latest = session.inner.lock().unwrap().latest;
        Ok(latest)
    }
}

/// TCP telemetry service: one device stream and any number of viewers per session.
pub struct TelemetryServer {
    listener: TcpListener,
    registry: Arc<Registry>,
}

impl TelemetryServer {
    pub fn bind<A: ToSocketAddrs>(addr: A, cfg: ServerConfig) -> io::Result<Self> {
        let listener = TcpListener::bind(addr)?;
        Ok(Self {
            listener,
            registry: Arc::new(Registry {
                cfg,
                sessions: Mutex::new(HashMap::new()),
            }),
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Runs the accept loop on a background thread.
    pub fn spawn(self) -> io::Result<ServerHandle> {
        let addr = self.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let registry = self.registry.clone();
        let join = {
            let stop = stop.clone();
            thread::spawn(move || self.accept_loop(&stop))
        };
        Ok(ServerHandle {
            addr,
            registry,
            stop,
            join: Some(join),
        })
    }

    /// Runs the accept loop on the current thread until the process exits.
    pub fn run(self) {
        let never = AtomicBool::new(false);
        self.accept_loop(&never);
    }

    fn accept_loop(self, stop: &AtomicBool) {
        for stream in self.listener.incoming() {
            if stop.load(Ordering::SeqCst) {
                break;
            }
            match stream {
                Ok(stream) => {
                    let registry = self.registry.clone();
                    thread::spawn(move || {
                        let peer = stream.peer_addr().ok();
                        if let Err(e) = handle_connection(stream, &registry) {
                            debug!("connection {peer:?} closed with error: {e}");
                        }
                    });
                }
                Err(e) => warn!("accept failed: {e}"),
            }
        }
    }
}

pub struct ServerHandle {
    addr: SocketAddr,
    registry: Arc<Registry>,
    stop: Arc<AtomicBool>,
    join: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// The last swing broadcast on `session_id`, if any.
    pub fn latest_metrics(&self, session_id: &str) -> Result<Option<SwingEvent>, TelemetryError> {
        self.registry.latest(session_id)
    }

    pub fn session_phase(&self, session_id: &str) -> Result<SessionPhase, TelemetryError> {
        let session = self
            .registry
            .get(session_id)
            .ok_or_else(|| TelemetryError::UnknownSession(session_id.to_string()))?;
        let phase = session.inner.lock().unwrap().phase;
        Ok(phase)
    }

    pub fn shutdown(mut self) {
        self.stop_accepting();
    }

    fn stop_accepting(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // wake the blocking accept
        let _ = TcpStream::connect(self.addr);
        if let Some(join) = self.join.take() {
            let _ = join.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if self.join.is_some() {
            self.stop_accepting();
        }
    }
}

fn spawn_writer(stream: TcpStream, outbox: Arc<Outbox>) -> JoinHandle<()> {
    thread::spawn(move || {
        let mut out = BufWriter::new(stream);
        while let Some(line) = outbox.pop() {
            let ok = writeln!(out, "{line}").is_ok() && (!outbox.is_empty() || out.flush().is_ok());
            if !ok {
                outbox.close();
                break;
            }
        }
        let _ = out.flush();
    })
}

enum Attached {
    Device(Arc<Session>),
    Viewer(Arc<Session>),
}

fn handle_connection(stream: TcpStream, registry: &Registry) -> io::Result<()> {
    let outbox = Arc::new(Outbox::new(registry.cfg.viewer_queue));
    let writer = spawn_writer(stream.try_clone()?, outbox.clone());
    let reader = BufReader::new(stream.try_clone()?);
    let mut attached: Option<Attached> = None;

    let result = (|| -> io::Result<()> {
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let msg = match WireMessage::parse(&line) {
                Ok(m) => m,
                Err(reply) => {
                    if attached.is_none() {
                        outbox.push(
                            WireMessage::error(
                                reply.session_id(),
                                ErrorCode::BadHandshake,
                                "first message must be `hello`",
                            )
                            .to_line(),
                        );
                        return Ok(());
                    }
                    outbox.push(reply.to_line());
                    continue;
                }
            };
            match (&attached, msg) {
                (
                    None,
                    WireMessage::Hello {
                        session_id,
                        role,
                        participant_id,
                        condition,
                    },
                ) => {
                    if !valid_session_id(&session_id) {
                        outbox.push(
                            WireMessage::error(session_id, ErrorCode::BadHandshake, "invalid session id").to_line(),
                        );
                        return Ok(());
                    }
                    let session = registry.get_or_create(&session_id);
                    let mut inner = session.inner.lock().unwrap();
                    match role {
                        Role::Device if inner.device_attached => {
                            outbox.push(
                                WireMessage::error(session_id, ErrorCode::SecondDevice, "session already has a device")
                                    .to_line(),
                            );
                            return Ok(());
                        }
                        Role::Device if inner.phase == SessionPhase::Ended => {
                            outbox.push(
                                WireMessage::error(session_id, ErrorCode::SessionEnded, "session has ended").to_line(),
                            );
                            return Ok(());
                        }
                        Role::Device => {
                            inner.device_attached = true;
                            inner.device_outbox = Some(outbox.clone());
                            if let Some(p) = participant_id {
                                inner.participant_id = p;
                            }
                            if let Some(c) = condition {
                                inner.condition = c;
                            }
                            outbox.push(session.state_line(inner.phase, &outbox));
                            info!("session {session_id}: device attached");
                            drop(inner);
                            attached = Some(Attached::Device(session));
                        }
                        Role::Viewer => {
                            inner.viewers.push(outbox.clone());
                            outbox.push(session.state_line(inner.phase, &outbox));
                            debug!("session {session_id}: viewer attached ({} total)", inner.viewers.len());
                            drop(inner);
                            attached = Some(Attached::Viewer(session));
                        }
                    }
                }
                (None, other) => {
                    outbox.push(
                        WireMessage::error(
                            other.session_id(),
                            ErrorCode::BadHandshake,
                            "first message must be `hello`",
                        )
                        .to_line(),
                    );
                    return Ok(());
                }
                (Some(_), WireMessage::Latest { session_id, .. }) => {
                    let reply = match registry.latest(&session_id) {
                        Ok(swing) => WireMessage::Latest { session_id, swing },
                        Err(e) => WireMessage::error(session_id, ErrorCode::UnknownSession, e.to_string()),
                    };
                    outbox.push(reply.to_line());
                }
                (Some(Attached::Device(session)), msg) => on_device_message(session, &outbox, msg),
                (Some(Attached::Viewer(_)), other) => {
                    outbox.push(
                        WireMessage::error(
                            other.session_id(),
                            ErrorCode::NotPermitted,
                            "viewers may only send `latest`",
                        )
                        .to_line(),
                    );
                }
            }
        }
        Ok(())
    })();

    match attached {
        Some(Attached::Device(session)) => end_device_stream(&session),
        Some(Attached::Viewer(session)) => {
            session
                .inner
                .lock()
                .unwrap()
                .viewers
                .retain(|v| !Arc::ptr_eq(v, &outbox));
        }
        None => {}
    }
    outbox.close();
    let _ = writer.join();
    let _ = stream.shutdown(Shutdown::Both);
    result
}

fn on_device_message(session: &Session, outbox: &Arc<Outbox>, msg: WireMessage) {
    if msg.session_id() != session.id {
        outbox.push(
            WireMessage::error(
                msg.session_id(),
                ErrorCode::BadMessage,
                format!("connection is bound to session `{}`", session.id),
            )
            .to_line(),
        );
        return;
    }
    let mut inner = session.inner.lock().unwrap();
    let events = match msg {
        WireMessage::Sample { sample, .. } => match inner.pipeline.push_sample(sample) {
            Ok(ev) => ev,
            Err(e) => {
                outbox.push(WireMessage::error(&session.id, ErrorCode::InvalidSample, e.to_string()).to_line());
                return;
            }
        },
        WireMessage::Annotation { annotation, .. } => {
            let ev = inner.pipeline.push_annotation(&annotation);
            if matches!(annotation, crate::trace::Annotation::Shot(_)) {
                inner.persist(&session.id);
            }
            ev
        }
        WireMessage::Calibration { levels, .. } => inner.pipeline.report_calibration(levels),
        other => {
            let detail = format!("devices may not send `{}`", other.kind());
            outbox.push(WireMessage::error(&session.id, ErrorCode::NotPermitted, detail).to_line());
            return;
        }
    };
    apply_events(session, &mut inner, events);
}

fn apply_events(session: &Session, inner: &mut SessionInner, events: Vec<PipelineEvent>) {
    for event in events {
        match event {
            PipelineEvent::Calibration(levels) => {
                let line = WireMessage::Calibration {
                    session_id: session.id.clone(),
                    levels,
                }
                .to_line();
                if let Some(d) = &inner.device_outbox {
                    d.push(line.clone());
                }
                inner.broadcast(&line);
            }
            PipelineEvent::Live => set_phase(session, inner, SessionPhase::Live),
            PipelineEvent::Swing(swing) => {
                inner.latest = Some(swing);
                let line = WireMessage::Swing {
                    session_id: session.id.clone(),
                    swing,
                }
                .to_line();
                inner.broadcast(&line);
                if let Some(log) = &mut inner.log {
                    if let Err(e) = log.append_swing(&line) {
                        warn!("session {}: failed to append swing log: {e}", session.id);
                    }
                }
                inner.persist(&session.id);
            }
        }
    }
}

fn set_phase(session: &Session, inner: &mut SessionInner, phase: SessionPhase) {
    inner.phase = phase;
    info!("session {}: {phase:?}", session.id);
    inner.viewers.retain(|v| v.push(session.state_line(phase, v)));
    if let Some(d) = &inner.device_outbox {
        d.push(session.state_line(phase, d));
    }
}

fn end_device_stream(session: &Session) {
    let mut inner = session.inner.lock().unwrap();
    let events = inner.pipeline.finish();
    apply_events(session, &mut inner, events);
    inner.device_attached = false;
    inner.device_outbox = None;
    set_phase(session, &mut inner, SessionPhase::Ended);
    inner.persist(&session.id);
}
