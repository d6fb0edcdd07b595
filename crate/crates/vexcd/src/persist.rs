//! JSON documents for models and exemplar states, and the JSON-lines
//! session event log.
//!
//! The event log names pairs by their dataset ids, not by engine positions,
//! so a log stays meaningful to the labeling UI and across manifest edits
//! that reorder pairs.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use vexcd_core::active_loop::index_map;
use vexcd_core::classifier::MODEL_FORMAT_VERSION;
use vexcd_core::{ClassifierModel, PreparedData, SessionConfig, SessionEvent};

use crate::error::{Error, Result};

pub fn save_model(model: &ClassifierModel, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(model)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<ClassifierModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let model: ClassifierModel = serde_json::from_str(&text).map_err(|e| Error::parse(path, &e))?;
    if model.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::Version {
            what: "model",
            found: model.format_version,
            expected: MODEL_FORMAT_VERSION,
        });
    }
    model.validate()?;
    Ok(model)
}

/// One line of the exported event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LogEvent {
    Init {
        config: SessionConfig,
    },
    Display {
        iteration: usize,
        pair_ids: Vec<usize>,
    },
    Labels {
        iteration: usize,
        #[serde(with = "index_map")]
        labels: BTreeMap<usize, u8>,
    },
}

/// Maps pair ids to engine positions and back.
#[derive(Debug, Clone)]
pub struct IdMap {
    ids: Vec<usize>,
    positions: HashMap<usize, usize>,
}

impl IdMap {
    pub fn new(data: &PreparedData) -> Self {
        Self {
            ids: data.ids.clone(),
            positions: data.ids.iter().enumerate().map(|(pos, &id)| (id, pos)).collect(),
        }
    }

    pub fn id(&self, position: usize) -> usize {
        self.ids[position]
    }

    pub fn position(&self, id: usize) -> Option<usize> {
        self.positions.get(&id).copied()
    }

    fn position_or_err(&self, id: usize) -> Result<usize> {
        self.position(id)
            .ok_or_else(|| Error::Integrity(format!("event log names unknown pair id {id}")))
    }

    pub fn to_log(&self, events: &[SessionEvent]) -> Vec<LogEvent> {
        events
            .iter()
            .map(|e| match e {
                SessionEvent::Init { config } => LogEvent::Init { config: config.clone() },
                SessionEvent::Display { iteration, indices } => LogEvent::Display {
                    iteration: *iteration,
                    pair_ids: indices.iter().map(|&i| self.id(i)).collect(),
                },
                SessionEvent::Labels { iteration, labels } => LogEvent::Labels {
                    iteration: *iteration,
                    labels: labels.iter().map(|(&i, &y)| (self.id(i), y)).collect(),
                },
            })
            .collect()
    }

    pub fn from_log(&self, log: &[LogEvent]) -> Result<Vec<SessionEvent>> {
        log.iter()
            .map(|e| {
                Ok(match e {
                    LogEvent::Init { config } => SessionEvent::Init { config: config.clone() },
                    LogEvent::Display { iteration, pair_ids } => SessionEvent::Display {
                        iteration: *iteration,
                        indices: pair_ids
                            .iter()
                            .map(|&id| self.position_or_err(id))
                            .collect::<Result<_>>()?,
                    },
                    LogEvent::Labels { iteration, labels } => SessionEvent::Labels {
                        iteration: *iteration,
                        labels: labels
                            .iter()
                            .map(|(&id, &y)| Ok((self.position_or_err(id)?, y)))
                            .collect::<Result<_>>()?,
                    },
                })
            })
            .collect()
    }
}

pub fn write_log(log: &[LogEvent], mut out: impl Write) -> Result<()> {
    for event in log {
        serde_json::to_writer(&mut out, event)?;
        out.write_all(b"\n").map_err(|e| Error::io("<event log>", e))?;
    }
    Ok(())
}

/// Parses a JSON-lines log; blank lines are skipped, parse errors carry
/// the 1-based line number.
pub fn read_log(input: impl BufRead, name: &Path) -> Result<Vec<LogEvent>> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io(name, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let event = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: name.to_path_buf(),
            line: n + 1,
            column: e.column(),
            message: e.to_string(),
        })?;
        out.push(event);
    }
    Ok(out)
}

pub fn read_log_file(path: &Path) -> Result<Vec<LogEvent>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_log(std::io::BufReader::new(file), path)
}

pub fn log_to_string(log: &[LogEvent]) -> Result<String> {
    let mut buf = Vec::new();
    write_log(log, &mut buf)?;
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}
