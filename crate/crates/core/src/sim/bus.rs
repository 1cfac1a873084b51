//! In-process publish/subscribe bus. Every subscriber of a topic receives
//! every message published on it exactly once, in publish order.

use std::collections::{BTreeMap, VecDeque};

use thiserror::Error;

use crate::geometry::Pose;
use crate::sim::GuidanceCue;

pub const TOPIC_POSE: &str = "pose";
pub const TOPIC_GUIDANCE_CUE: &str = "guidance_cue";
pub const TOPIC_SOUND_SOURCE: &str = "sound_source";
pub const TOPIC_WHEEL_CMD: &str = "wheel_cmd";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Schema {
    Pose,
    Cue,
    WheelCommand,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WheelTargets {
    pub left: f64,
    pub right: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Pose { t: f64, pose: Pose },
    Cue { t: f64, cue: GuidanceCue },
    Wheels { t: f64, targets: WheelTargets },
}

impl Message {
    pub fn schema(&self) -> Schema {
        match self {
            Message::Pose { .. } => Schema::Pose,
            Message::Cue { .. } => Schema::Cue,
            Message::Wheels { .. } => Schema::WheelCommand,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BusError {
    #[error("topic '{0}' is not registered")]
    UnknownTopic(String),
    #[error("topic '{topic}' already registered with schema {existing:?}")]
    SchemaConflict { topic: String, existing: Schema },
    #[error("topic '{topic}' carries {expected:?}, got {got:?}")]
    WrongSchema {
        topic: String,
        expected: Schema,
        got: Schema,
    },
}

/// Handle returned by [`Bus::subscribe`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subscription {
    topic: String,
    id: usize,
}

impl Subscription {
    pub fn topic(&self) -> &str {
        &self.topic
    }
}

#[derive(Debug)]
struct TopicEntry {
    schema: Schema,
    queues: Vec<(usize, VecDeque<Message>)>,
}

#[derive(Debug, Default)]
pub struct Bus {
    topics: BTreeMap<String, TopicEntry>,
    next_id: usize,
}

impl Bus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Bus with the four topics used by a trial.
    pub fn with_standard_topics() -> Self {
        let mut bus = Self::new();
        for (name, schema) in [
            (TOPIC_POSE, Schema::Pose),
            (TOPIC_GUIDANCE_CUE, Schema::Cue),
            (TOPIC_SOUND_SOURCE, Schema::Cue),
            (TOPIC_WHEEL_CMD, Schema::WheelCommand),
        ] {
            bus.register(name, schema).expect("fresh bus");
        }
        bus
    }

    /// Registering the same topic twice with the same schema is a no-op.
    pub fn register(&mut self, topic: &str, schema: Schema) -> Result<(), BusError> {
        if let Some(entry) = self.topics.get(topic) {
            if entry.schema != schema {
                return Err(BusError::SchemaConflict {
                    topic: topic.to_string(),
                    existing: entry.schema,
                });
            }
            return Ok(());
        }
        self.topics.insert(
            topic.to_string(),
            TopicEntry {
                schema,
                queues: Vec::new(),
            },
        );
        Ok(())
    }

    pub fn subscribe(&mut self, topic: &str) -> Result<Subscription, BusError> {
        let entry = self
            .topics
            .get_mut(topic)
            .ok_or_else(|| BusError::UnknownTopic(topic.to_string()))?;
        let id = self.next_id;
        self.next_id += 1;
        entry.queues.push((id, VecDeque::new()));
        Ok(Subscription {
            topic: topic.to_string(),
            id,
        })
    }

    pub fn publish(&mut self, topic: &str, message: Message) -> Result<(), BusError> {
        let entry = self
            .topics
            .get_mut(topic)
            .ok_or_else(|| BusError::UnknownTopic(topic.to_string()))?;
        if message.schema() != entry.schema {
            return Err(BusError::WrongSchema {
                topic: topic.to_string(),
                expected: entry.schema,
                got: message.schema(),
            });
        }
        for (_, queue) in entry.queues.iter_mut() {
            queue.push_back(message.clone());
        }
        Ok(())
    }

    /// Takes every pending message for `subscription`, oldest first.
    pub fn drain(&mut self, subscription: &Subscription) -> Vec<Message> {
        self.topics
            .get_mut(&subscription.topic)
            .and_then(|entry| {
                entry
                    .queues
                    .iter_mut()
                    .find(|(id, _)| *id == subscription.id)
            })
            .map(|(_, queue)| queue.drain(..).collect())
            .unwrap_or_default()
    }
}
