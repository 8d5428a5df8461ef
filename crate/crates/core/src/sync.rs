//! Approximate-time pairing of two message streams.
//!
//! Each push greedily emits the pending pair with the smallest stamp
//! difference while that difference is within the threshold. Emitting a pair
//! drops every pending message older than the emitted member of its own
//! channel; those can no longer be matched without reordering.

use std::collections::VecDeque;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SyncError {
    #[error("stamp {stamp} on channel {channel:?} is older than the newest stamp {newest}")]
    StaleStamp {
        channel: Channel,
        stamp: f64,
        newest: f64,
    },
    #[error("invalid synchronizer config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyncConfig {
    /// Maximum stamp difference of an emitted pair, seconds.
    pub threshold: f64,
    pub queue_capacity: usize,
}

impl Default for SyncConfig {
    fn default() -> Self {
        Self {
            threshold: 0.1,
            queue_capacity: 16,
        }
    }
}

impl SyncConfig {
    pub fn validate(&self) -> Result<(), SyncError> {
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(SyncError::InvalidConfig(format!(
                "threshold {}",
                self.threshold
            )));
        }
        if self.queue_capacity == 0 {
            return Err(SyncError::InvalidConfig(
                "queue_capacity must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stamped<T> {
    pub stamp: f64,
    pub payload: T,
}

pub type Pair<A, B> = (Stamped<A>, Stamped<B>);

#[derive(Debug)]
pub struct Synchronizer<A, B> {
    config: SyncConfig,
    queue_a: VecDeque<Stamped<A>>,
    queue_b: VecDeque<Stamped<B>>,
    newest_a: Option<f64>,
    newest_b: Option<f64>,
    dropped: usize,
    emitted: usize,
}

impl<A, B> Synchronizer<A, B> {
    pub fn new(config: SyncConfig) -> Result<Self, SyncError> {
        config.validate()?;
        Ok(Self {
            config,
            queue_a: VecDeque::new(),
            queue_b: VecDeque::new(),
            newest_a: None,
            newest_b: None,
            dropped: 0,
            emitted: 0,
        })
    }

    pub fn config(&self) -> &SyncConfig {
        &self.config
    }

    pub fn pending(&self) -> (usize, usize) {
        (self.queue_a.len(), self.queue_b.len())
    }

    /// Messages discarded so far (superseded or evicted by capacity).
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn emitted(&self) -> usize {
        self.emitted
    }

    pub fn push_a(&mut self, stamp: f64, payload: A) -> Result<Vec<Pair<A, B>>, SyncError> {
        check_order(Channel::A, stamp, self.newest_a)?;
        self.newest_a = Some(stamp);
        self.queue_a.push_back(Stamped { stamp, payload });
        Ok(self.settle())
    }

    pub fn push_b(&mut self, stamp: f64, payload: B) -> Result<Vec<Pair<A, B>>, SyncError> {
        check_order(Channel::B, stamp, self.newest_b)?;
        self.newest_b = Some(stamp);
        self.queue_b.push_back(Stamped { stamp, payload });
        Ok(self.settle())
    }

    /// Empties both queues and forgets stamp history.
    pub fn flush(&mut self) {
        self.queue_a.clear();
        self.queue_b.clear();
        self.newest_a = None;
        self.newest_b = None;
    }

    fn settle(&mut self) -> Vec<Pair<A, B>> {
        let mut out = Vec::new();
        while let Some((i, j)) = self.best_pair() {
            // Everything before i / j is older than the emitted members.
            self.dropped += i + j;
            self.queue_a.drain(..i);
            self.queue_b.drain(..j);
            let a = self.queue_a.pop_front().expect("matched index exists");
            let b = self.queue_b.pop_front().expect("matched index exists");
            self.emitted += 1;
            out.push((a, b));
        }
        while self.queue_a.len() > self.config.queue_capacity {
            self.queue_a.pop_front();
            self.dropped += 1;
        }
        while self.queue_b.len() > self.config.queue_capacity {
            self.queue_b.pop_front();
            self.dropped += 1;
        }
        out
    }

    /// Indices of the closest pending pair within threshold; ties go to the
    /// lowest indices.
    fn best_pair(&self) -> Option<(usize, usize)> {
        let mut best: Option<(f64, usize, usize)> = None;
        for (i, a) in self.queue_a.iter().enumerate() {
            for (j, b) in self.queue_b.iter().enumerate() {
                let d = (a.stamp - b.stamp).abs();
                if d <= self.config.threshold && best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, i, j));
                }
            }
        }
        best.map(|(_, i, j)| (i, j))
    }
}

fn check_order(channel: Channel, stamp: f64, newest: Option<f64>) -> Result<(), SyncError> {
    match newest {
        Some(n) if stamp < n || stamp.is_nan() => Err(SyncError::StaleStamp {
            channel,
            stamp,
            newest: n,
        }),
        _ => Ok(()),
    }
}

/// Thread-safe front end; pushes from any number of producers are serialized.
#[derive(Debug)]
pub struct SharedSynchronizer<A, B> {
    inner: Mutex<Synchronizer<A, B>>,
}

impl<A, B> SharedSynchronizer<A, B> {
    pub fn new(config: SyncConfig) -> Result<Self, SyncError> {
        Ok(Self {
            inner: Mutex::new(Synchronizer::new(config)?),
        })
    }

    pub fn push_a(&self, stamp: f64, payload: A) -> Result<Vec<Pair<A, B>>, SyncError> {
        self.lock().push_a(stamp, payload)
    }

    pub fn push_b(&self, stamp: f64, payload: B) -> Result<Vec<Pair<A, B>>, SyncError> {
        self.lock().push_b(stamp, payload)
    }

    pub fn flush(&self) {
        self.lock().flush();
    }

    pub fn pending(&self) -> (usize, usize) {
        self.lock().pending()
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Synchronizer<A, B>> {
        // A panic mid-push leaves the queues consistent, so poisoning is ignored.
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }
}
