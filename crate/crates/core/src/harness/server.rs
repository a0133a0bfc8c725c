//! Remote display over TCP: newline-delimited JSON frames out, user
//! events in.
//!
//! Outbound: `{"type":"display","root":NODE}` per frame, and
//! `{"type":"error","message":TEXT}` before closing on a malformed input.
//! Inbound: `{"type":"event","target":ID,"name":NAME,"args":[...]}` and
//! `{"type":"set-field","target":ID,"field":NAME,"text":TEXT}`.

use std::collections::VecDeque;
use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::mpsc::{channel, Receiver};
use std::thread;

use serde::{Deserialize, Serialize};

use super::{json_to_value, start, step_input, HarnessError, RunOptions, Step, Trace};
use crate::dispatch::{run_loop, Backend, DispatchError, DisplayNode, Input};
use crate::runtime::{Event, RuntimeError};
use crate::syntax::Program;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Inbound {
    Event {
        target: u64,
        name: String,
        #[serde(default)]
        args: Vec<serde_json::Value>,
    },
    SetField {
        target: u64,
        field: String,
        text: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Outbound {
    Display { root: Option<DisplayNode> },
    Error { message: String },
}

/// Parses one inbound line into an input.
pub fn decode(line: &str) -> Result<Input, String> {
    let msg: Inbound = serde_json::from_str(line).map_err(|e| format!("malformed frame: {e}"))?;
    Ok(match msg {
        Inbound::Event { target, name, args } => {
            let args = args.iter().map(json_to_value).collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
            Input::Event(Event { target: Some(target), name, args })
        }
        Inbound::SetField { target, field, text } => Input::SetField { id: target, field, text },
    })
}

pub struct Remote {
    writer: TcpStream,
    lines: Receiver<String>,
    side: VecDeque<Step>,
    pub trace: Trace,
}

impl Remote {
    /// Wraps a connection; `side` steps (typically provider actions) are
    /// delivered before reading from the client.
    pub fn new(stream: TcpStream, side: &[Step]) -> std::io::Result<Remote> {
        let reader = BufReader::new(stream.try_clone()?);
        let (tx, rx) = channel();
        thread::spawn(move || {
            for line in reader.lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Remote { writer: stream, lines: rx, side: side.iter().cloned().collect(), trace: Trace::default() })
    }

    fn send(&mut self, msg: &Outbound) -> Result<(), DispatchError> {
        let mut text = serde_json::to_string(msg).expect("frames serialize");
        text.push('\n');
        self.writer
            .write_all(text.as_bytes())
            .and_then(|_| self.writer.flush())
            .map_err(|e| DispatchError::Runtime(RuntimeError::Stuck(format!("connection lost: {e}"))))
    }
}

impl Backend for Remote {
    fn show(&mut self, frame: Option<&DisplayNode>) -> Result<(), DispatchError> {
        self.trace.frames.push(frame.cloned());
        self.send(&Outbound::Display { root: frame.cloned() })
    }

    fn next(&mut self, frame: Option<&DisplayNode>) -> Result<Option<Input>, DispatchError> {
        while let Some(step) = self.side.pop_front() {
            match step_input(&step, frame) {
                Ok(Some(input)) => return Ok(Some(input)),
                Ok(None) => {}
                Err(e) => {
                    self.send(&Outbound::Error { message: e.to_string() })?;
                    return Ok(None);
                }
            }
        }
        loop {
            let Ok(line) = self.lines.recv() else { return Ok(None) };
            if line.trim().is_empty() {
                continue;
            }
            return match decode(&line) {
                Ok(input) => Ok(Some(input)),
                Err(message) => {
                    self.send(&Outbound::Error { message })?;
                    let _ = self.writer.shutdown(std::net::Shutdown::Both);
                    Ok(None)
                }
            };
        }
    }
}

/// Runs a program for one client connecting to `listener`.
pub fn serve(listener: &TcpListener, p: &Program, opts: &RunOptions, side: &[Step]) -> Result<Trace, HarnessError> {
    let (mut rt, root) = start(p, opts)?;
    let (stream, _) = listener.accept()?;
    let mut remote = Remote::new(stream, side)?;
    run_loop(&mut rt, root, &mut remote)?;
    Ok(remote.trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::Value;

    #[test]
    fn decodes_events_and_field_edits() {
        match decode(r#"{"type":"event","target":4,"name":"push","args":[4]}"#).unwrap() {
            Input::Event(e) => {
                assert_eq!((e.target, e.name.as_str()), (Some(4), "push"));
                assert!(matches!(e.args.as_slice(), [Value::Int(4)]));
            }
            other => panic!("{other:?}"),
        }
        match decode(r#"{"type":"set-field","target":2,"field":"name","text":"Sally"}"#).unwrap() {
            Input::SetField { id, field, text } => {
                assert_eq!((id, field.as_str(), text.as_str()), (2, "name", "Sally"))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_malformed_frames() {
        assert!(decode("not json").unwrap_err().starts_with("malformed frame"));
        assert!(decode(r#"{"type":"event","name":"push"}"#).is_err());
        assert!(decode(r#"{"type":"event","target":1,"name":"push","args":[{}]}"#).is_err());
    }

    #[test]
    fn outbound_frames_are_tagged() {
        let text = serde_json::to_string(&Outbound::Display { root: None }).unwrap();
        assert_eq!(text, r#"{"type":"display","root":null}"#);
        let text = serde_json::to_string(&Outbound::Error { message: "x".into() }).unwrap();
        assert_eq!(text, r#"{"type":"error","message":"x"}"#);
    }
}
