use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::{Shutdown, TcpStream, ToSocketAddrs};
use std::time::Duration;

use super::wire::{Role, WireMessage};
use crate::model::ImuSample;
use crate::session::Condition;
use crate::trace::{Annotation, ReplayItem};

/// Blocking line-oriented connection to a telemetry server.
pub struct Connection {
    session_id: String,
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
}

impl Connection {
    pub fn connect<A: ToSocketAddrs>(addr: A, session_id: &str) -> io::Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(Self {
            session_id: session_id.to_string(),
            reader: BufReader::new(stream.try_clone()?),
            writer: BufWriter::new(stream),
        })
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn hello(
        &mut self,
        role: Role,
        participant_id: Option<String>,
        condition: Option<Condition>,
    ) -> io::Result<()> {
        self.send(&WireMessage::Hello {
            session_id: self.session_id.clone(),
            role,
            participant_id,
            condition,
        })?;
        self.flush()
    }

    /// Buffered; call `flush` to push pending lines out.
    pub fn send(&mut self, msg: &WireMessage) -> io::Result<()> {
        self.send_raw(&msg.to_line())
    }

    pub fn send_raw(&mut self, line: &str) -> io::Result<()> {
        writeln!(self.writer, "{line}")
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.writer.flush()
    }

    pub fn send_sample(&mut self, sample: ImuSample) -> io::Result<()> {
        self.send(&WireMessage::Sample {
            session_id: self.session_id.clone(),
            sample,
        })
    }

    pub fn send_annotation(&mut self, t: u64, annotation: Annotation) -> io::Result<()> {
        self.send(&WireMessage::Annotation {
            session_id: self.session_id.clone(),
            t,
            annotation,
        })
    }

    pub fn send_item(&mut self, item: &ReplayItem) -> io::Result<()> {
        match item {
            ReplayItem::Sample(s) => self.send_sample(*s),
            ReplayItem::Annotation { t, annotation } => self.send_annotation(*t, *annotation),
        }
    }

    pub fn request_latest(&mut self) -> io::Result<()> {
        self.send(&WireMessage::Latest {
            session_id: self.session_id.clone(),
            swing: None,
        })?;
        self.flush()
    }

    /// Next message from the server; `None` on EOF or timeout.
    pub fn recv(&mut self) -> io::Result<Option<WireMessage>> {
        let mut line = String::new();
        loop {
            line.clear();
            match self.reader.read_line(&mut line) {
                Ok(0) => return Ok(None),
                Ok(_) if line.trim().is_empty() => continue,
                Ok(_) => {
                    return WireMessage::parse(line.trim_end())
                        .map(Some)
                        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_line()))
                }
                Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => return Ok(None),
                Err(e) => return Err(e),
            }
        }
    }

    pub fn set_read_timeout(&self, timeout: Option<Duration>) -> io::Result<()> {
        self.reader.get_ref().set_read_timeout(timeout)
    }

    /// Ends the outbound stream; the server treats this as the device finishing.
    pub fn finish_sending(&mut self) -> io::Result<()> {
        self.flush()?;
        self.writer.get_ref().shutdown(Shutdown::Write)
    }
}
