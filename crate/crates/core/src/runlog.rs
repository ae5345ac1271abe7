//! Structured per-frame run log exposing the tracker's internal decisions
//! (response peaks, chosen size cells, re-detection events).
//!
//! Line format: `frame<TAB>kind<TAB>k=v,...`.

use std::fmt;
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogKind {
    Detect,
    SizeUpdate,
    RedetectEnter,
    ProposalStats,
    Reinit,
}

impl LogKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LogKind::Detect => "detect",
            LogKind::SizeUpdate => "size_update",
            LogKind::RedetectEnter => "redetect_enter",
            LogKind::ProposalStats => "proposal_stats",
            LogKind::Reinit => "reinit",
        }
    }

    pub fn parse(s: &str) -> Option<LogKind> {
        match s {
            "detect" => Some(LogKind::Detect),
            "size_update" => Some(LogKind::SizeUpdate),
            "redetect_enter" => Some(LogKind::RedetectEnter),
            "proposal_stats" => Some(LogKind::ProposalStats),
            "reinit" => Some(LogKind::Reinit),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogEvent {
    pub frame: usize,
    pub kind: LogKind,
    pub payload: Vec<(String, f64)>,
}

impl fmt::Display for LogEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t", self.frame, self.kind.as_str())?;
        for (i, (k, v)) in self.payload.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

/// Append-only event log; events are also written through (and flushed) per
/// append when a sink is attached.
#[derive(Default)]
pub struct RunLog {
    events: Vec<LogEvent>,
    sink: Option<Box<dyn Write + Send>>,
}

impl fmt::Debug for RunLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RunLog")
            .field("events", &self.events.len())
            .field("sink", &self.sink.is_some())
            .finish()
    }
}

impl RunLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_sink(sink: Box<dyn Write + Send>) -> Self {
        Self {
            events: Vec::new(),
            sink: Some(sink),
        }
    }

    pub fn append(&mut self, frame: usize, kind: LogKind, payload: &[(&str, f64)]) {
        let event = LogEvent {
            frame,
            kind,
            payload: payload.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        };
        if let Some(sink) = &mut self.sink {
            let _ = writeln!(sink, "{event}");
            let _ = sink.flush();
        }
        self.events.push(event);
    }

    pub fn events(&self) -> &[LogEvent] {
        &self.events
    }

    pub fn events_of(&self, kind: LogKind) -> impl Iterator<Item = &LogEvent> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&e.to_string());
            out.push('\n');
        }
        out
    }
}

/// Parses a rendered log back into events (used by tests and tooling).
pub fn parse_log(text: &str) -> Vec<LogEvent> {
    let mut out = Vec::new();
    for line in text.lines() {
        let mut parts = line.splitn(3, '\t');
        let (Some(frame), Some(kind)) = (parts.next(), parts.next()) else {
            continue;
        };
        let (Ok(frame), Some(kind)) = (frame.parse(), LogKind::parse(kind)) else {
            continue;
        };
        let payload = parts
            .next()
            .unwrap_or("")
            .split(',')
            .filter_map(|kv| {
                let (k, v) = kv.split_once('=')?;
                Some((k.to_string(), v.parse().ok()?))
            })
            .collect();
        out.push(LogEvent {
            frame,
            kind,
            payload,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_and_parse_round_trip() {
        let mut log = RunLog::new();
        log.append(0, LogKind::Detect, &[("zeta", 0.52), ("dx", -1.25)]);
        log.append(1, LogKind::RedetectEnter, &[("zeta", 0.003)]);
        log.append(2, LogKind::Reinit, &[("eta_b", 0.4), ("x", 120.0)]);
        let text = log.render();
        let parsed = parse_log(&text);
        assert_eq!(parsed.len(), 3);
        assert_eq!(parsed[1].kind, LogKind::RedetectEnter);
        assert_eq!(parsed[0].payload[1], ("dx".to_string(), -1.25));
    }

    #[test]
    fn sink_receives_lines_per_append() {
        use std::sync::{Arc, Mutex};

        #[derive(Clone)]
        struct Shared(Arc<Mutex<Vec<u8>>>);
        impl Write for Shared {
            fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
                self.0.lock().unwrap().extend_from_slice(buf);
                Ok(buf.len())
            }
            fn flush(&mut self) -> std::io::Result<()> {
                Ok(())
            }
        }

        let buf = Shared(Arc::new(Mutex::new(Vec::new())));
        let mut log = RunLog::with_sink(Box::new(buf.clone()));
        log.append(4, LogKind::SizeUpdate, &[("ns", 1.0), ("na", 0.0)]);
        let text = String::from_utf8(buf.0.lock().unwrap().clone()).unwrap();
        assert_eq!(text, "4\tsize_update\tns=1,na=0\n");
    }
}
