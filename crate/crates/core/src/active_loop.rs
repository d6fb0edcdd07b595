//! The interactive protocol: show a display, collect labels, retrain from
//! scratch on everything labeled so far, pick the next display.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::classifier::{self, ClassifierModel, TrainConfig};
use crate::dataset::PreparedData;
use crate::error::{Error, Result};
use crate::eval::{sampling_rate, EvalRecord};
use crate::exemplar::{ExemplarState, OptimizerConfig};
use crate::rng::derive_seed;
use crate::samplers::{self, DisplayRequest, Strategy};

/// Monotonic seconds, supplied by hosts that have a clock.
pub type Clock = fn() -> f64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub strategy: Strategy,
    /// Number of labeling rounds T.
    pub iterations: usize,
    /// Display size B.
    pub batch: usize,
    pub optimizer: OptimizerConfig,
    pub train: TrainConfig,
    pub seed: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::VirtualExemplar,
            iterations: 10,
            batch: 16,
            optimizer: OptimizerConfig::default(),
            train: TrainConfig::default(),
            seed: 0,
        }
    }
}

/// One entry of the session's append-only event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum SessionEvent {
    Init {
        config: SessionConfig,
    },
    Display {
        iteration: usize,
        indices: Vec<usize>,
    },
    Labels {
        iteration: usize,
        #[serde(with = "index_map")]
        labels: BTreeMap<usize, u8>,
    },
}

/// Serde adapter for `BTreeMap<usize, u8>` that accepts keys written as
/// strings, which is how JSON object keys arrive inside tagged enums.
pub mod index_map {
    use alloc::collections::BTreeMap;
    use core::fmt;

    use serde::de::{self, MapAccess, Visitor};
    use serde::{Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(map: &BTreeMap<usize, u8>, s: S) -> Result<S::Ok, S::Error> {
        map.serialize(s)
    }

    struct Key(usize);

    impl<'de> serde::Deserialize<'de> for Key {
        fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
            struct KeyVisitor;
            impl Visitor<'_> for KeyVisitor {
                type Value = Key;
                fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                    f.write_str("a non-negative integer key")
                }
                fn visit_u64<E: de::Error>(self, v: u64) -> Result<Key, E> {
                    usize::try_from(v).map(Key).map_err(E::custom)
                }
                fn visit_str<E: de::Error>(self, v: &str) -> Result<Key, E> {
                    v.parse()
                        .map(Key)
                        .map_err(|_| E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
            d.deserialize_any(KeyVisitor)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<usize, u8>, D::Error> {
        struct MapVisitor;
        impl<'de> Visitor<'de> for MapVisitor {
            type Value = BTreeMap<usize, u8>;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map from index to label")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Self::Value, A::Error> {
                let mut out = BTreeMap::new();
                while let Some((Key(k), v)) = access.next_entry::<Key, u8>()? {
                    out.insert(k, v);
                }
                Ok(out)
            }
        }
        d.deserialize_map(MapVisitor)
    }
}

#[derive(Debug, Clone)]
pub struct Session {
    data: Arc<PreparedData>,
    config: SessionConfig,
    t: usize,
    labeled: BTreeMap<usize, u8>,
    pool: BTreeSet<usize>,
    pending: Vec<usize>,
    model: Option<ClassifierModel>,
    display_sizes: Vec<usize>,
    history: Vec<EvalRecord>,
    events: Vec<SessionEvent>,
    exemplars: Option<ExemplarState>,
    clock: Option<Clock>,
    busy_since_record: f64,
}

impl Session {
    /// Starts a session with a random first display pending.
    pub fn init(data: Arc<PreparedData>, config: SessionConfig) -> Result<Self> {
        config.optimizer.validate()?;
        config.train.validate()?;
        if data.train_ids.is_empty() {
            return Err(Error::Dataset("training half is empty".into()));
        }
        if config.batch == 0 || config.iterations == 0 {
            return Err(Error::Config("batch size and iteration count must be >= 1".into()));
        }
        if config.batch > data.train_ids.len() {
            return Err(Error::Budget {
                budget: config.batch,
                pool: data.train_ids.len(),
            });
        }
        let pool: BTreeSet<usize> = data.train_ids.iter().copied().collect();
        let pool_vec: Vec<usize> = pool.iter().copied().collect();
        let first = samplers::sample_random(&DisplayRequest {
            pool: &pool_vec,
            budget: config.batch,
            labeled: &[],
            seed: derive_seed(config.seed, 0),
        })?;
        let mut session = Self {
            data,
            config: config.clone(),
            t: 0,
            labeled: BTreeMap::new(),
            pool,
            pending: Vec::new(),
            model: None,
            display_sizes: Vec::new(),
            history: Vec::new(),
            events: alloc::vec![SessionEvent::Init { config }],
            exemplars: None,
            clock: None,
            busy_since_record: 0.0,
        };
        session.set_pending(first);
        Ok(session)
    }

    /// Rebuilds a session from its event log, checking that every recorded
    /// display is what the engine computes again.
    pub fn replay(data: Arc<PreparedData>, events: &[SessionEvent]) -> Result<Self> {
        let Some(SessionEvent::Init { config }) = events.first() else {
            return Err(Error::Protocol("event log must start with init".into()));
        };
        let mut session = Self::init(data, config.clone())?;
        for event in &events[1..] {
            match event {
                SessionEvent::Init { .. } => {
                    return Err(Error::Protocol("duplicate init event".into()));
                }
                SessionEvent::Display { iteration, indices } => {
                    if *iteration != 0 {
                        session.next_display()?;
                    }
                    if session.pending != *indices || session.t != *iteration {
                        return Err(Error::Protocol(format!("event log diverges at display {iteration}")));
                    }
                }
                SessionEvent::Labels { iteration, labels } => {
                    if session.t != *iteration {
                        return Err(Error::Protocol(format!(
                            "labels for iteration {iteration} arrive at iteration {}",
                            session.t
                        )));
                    }
                    session.submit_labels(labels)?;
                }
            }
        }
        Ok(session)
    }

    pub fn set_clock(&mut self, clock: Clock) {
        self.clock = Some(clock);
    }

    fn now(&self) -> Option<f64> {
        self.clock.map(|c| c())
    }

    fn set_pending(&mut self, indices: Vec<usize>) {
        for i in &indices {
            self.pool.remove(i);
        }
        self.events.push(SessionEvent::Display {
            iteration: self.t,
            indices: indices.clone(),
        });
        self.pending = indices;
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn data(&self) -> &Arc<PreparedData> {
        &self.data
    }

    /// Completed labeling rounds.
    pub fn iteration(&self) -> usize {
        self.t
    }

    pub fn labeled(&self) -> &BTreeMap<usize, u8> {
        &self.labeled
    }

    pub fn pool(&self) -> &BTreeSet<usize> {
        &self.pool
    }

    pub fn pending(&self) -> &[usize] {
        &self.pending
    }

    pub fn model(&self) -> Option<&ClassifierModel> {
        self.model.as_ref()
    }

    pub fn history(&self) -> &[EvalRecord] {
        &self.history
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    /// Optimizer state behind the latest virtual-exemplar display.
    pub fn exemplars(&self) -> Option<&ExemplarState> {
        self.exemplars.as_ref()
    }

    pub fn is_finished(&self) -> bool {
        self.pending.is_empty() && (self.t >= self.config.iterations || self.pool.is_empty())
    }

    /// Records the oracle's answers for the pending display and retrains.
    pub fn submit_labels(&mut self, labels: &BTreeMap<usize, u8>) -> Result<&EvalRecord> {
        let started = self.now();
        if self.pending.is_empty() {
            return Err(Error::Protocol("no display is pending".into()));
        }
        let pending: BTreeSet<usize> = self.pending.iter().copied().collect();
        let missing: Vec<usize> = pending.iter().filter(|i| !labels.contains_key(i)).copied().collect();
        let unexpected: Vec<usize> = labels.keys().filter(|i| !pending.contains(i)).copied().collect();
        if !missing.is_empty() || !unexpected.is_empty() {
            return Err(Error::LabelMismatch { missing, unexpected });
        }
        if let Some((i, y)) = labels.iter().find(|(_, y)| **y > 1) {
            return Err(Error::Domain(format!("label for {i} must be 0 or 1, got {y}")));
        }

        let mut labeled = self.labeled.clone();
        labeled.extend(labels.iter().map(|(i, y)| (*i, *y)));
        let positions: Vec<usize> = labeled.keys().copied().collect();
        let y: Vec<u8> = labeled.values().copied().collect();
        let x = self.data.features.select_rows(&positions);
        let model = classifier::train(&x, &y, &self.config.train)?;
        let eer = if self.data.has_test_ground_truth() {
            Some(self.data.test_eer(&model)?)
        } else {
            None
        };

        self.labeled = labeled;
        self.display_sizes.push(self.pending.len());
        self.pending.clear();
        self.model = Some(model);
        self.t += 1;
        self.events.push(SessionEvent::Labels {
            iteration: self.t - 1,
            labels: labels.clone(),
        });
        let busy = match (started, self.now()) {
            (Some(a), Some(b)) => self.busy_since_record + (b - a),
            _ => 0.0,
        };
        self.busy_since_record = 0.0;
        self.history.push(EvalRecord {
            strategy: self.config.strategy.as_str().to_string(),
            seed: self.config.seed,
            iteration: self.t,
            sampling_rate_pct: sampling_rate(&self.display_sizes, self.data.total()),
            eer,
            wall_time_s: busy,
        });
        Ok(self.history.last().expect("just pushed"))
    }

    /// Chooses the next display with the configured strategy.
    pub fn next_display(&mut self) -> Result<&[usize]> {
        let started = self.now();
        if !self.pending.is_empty() {
            return Err(Error::Protocol("a display is already pending".into()));
        }
        if self.t >= self.config.iterations {
            return Err(Error::Protocol(format!(
                "all {} iterations are done",
                self.config.iterations
            )));
        }
        if self.pool.is_empty() {
            return Err(Error::Exhausted);
        }
        let pool: Vec<usize> = self.pool.iter().copied().collect();
        let labeled: Vec<usize> = self.labeled.keys().copied().collect();
        let req = DisplayRequest {
            pool: &pool,
            budget: self.config.batch.min(pool.len()),
            labeled: &labeled,
            seed: derive_seed(self.config.seed, self.t as u64),
        };
        let selection = match self.model.as_ref() {
            Some(model) => samplers::select(
                self.config.strategy,
                &req,
                &self.data.features,
                Some(model),
                &self.config.optimizer,
            )?,
            None => samplers::Selection {
                indices: samplers::sample_random(&req)?,
                exemplars: None,
            },
        };
        self.exemplars = selection.exemplars;
        self.set_pending(selection.indices);
        if let (Some(a), Some(b)) = (started, self.now()) {
            self.busy_since_record += b - a;
        }
        Ok(&self.pending)
    }
}

/// Runs a whole session against the ground truth.
pub fn run_simulated(data: Arc<PreparedData>, config: SessionConfig, clock: Option<Clock>) -> Result<Vec<EvalRecord>> {
    if !data.has_train_ground_truth() {
        return Err(Error::Dataset("simulated oracle needs ground-truth labels".into()));
    }
    let mut session = Session::init(data, config)?;
    if let Some(c) = clock {
        session.set_clock(c);
    }
    for round in 0..session.config.iterations {
        if round > 0 {
            match session.next_display() {
                Ok(_) => {}
                Err(Error::Exhausted) => break,
                Err(e) => return Err(e),
            }
        }
        let answers = oracle_answers(&session)?;
        session.submit_labels(&answers)?;
    }
    Ok(session.history)
}

/// Ground-truth labels for the pending display.
pub fn oracle_answers(session: &Session) -> Result<BTreeMap<usize, u8>> {
    let labels = session.data.labels_of(&session.pending)?;
    Ok(session.pending.iter().copied().zip(labels).collect())
}
