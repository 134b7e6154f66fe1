use std::collections::VecDeque;
use std::sync::{Arc, Condvar, Mutex, RwLock};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::learner::{Episode, Policy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BufferConfig {
    pub capacity: usize,
    /// Times an episode may be trained on.
    pub reuse: u32,
    /// Episodes from versions older than `current - staleness` are dropped.
    pub staleness: u64,
}

impl Default for BufferConfig {
    fn default() -> Self {
        Self { capacity: 1024, reuse: 2, staleness: 4 }
    }
}

#[derive(Debug)]
struct Slot {
    id: u64,
    episode: Arc<Episode>,
    uses: u32,
}

/// Counters kept for auditing reuse and staleness.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BufferStats {
    pub pushed: u64,
    pub uses: u64,
    pub evicted_stale: u64,
    /// Uses per episode, indexed by push order.
    pub uses_per_episode: Vec<u32>,
}

#[derive(Debug, Default)]
struct Inner {
    queue: VecDeque<Slot>,
    closed: bool,
    stats: BufferStats,
}

/// Bounded FIFO of episodes shared by rollout workers and the trainer.
#[derive(Debug)]
pub struct EpisodeBuffer {
    config: BufferConfig,
    inner: Mutex<Inner>,
    ready: Condvar,
    space: Condvar,
}

impl EpisodeBuffer {
    pub fn new(config: BufferConfig) -> Self {
        Self { config, inner: Mutex::new(Inner::default()), ready: Condvar::new(), space: Condvar::new() }
    }

    pub fn config(&self) -> &BufferConfig {
        &self.config
    }

    /// Blocks while the buffer is full. Returns false once it is closed.
    pub fn push(&self, episode: Episode) -> bool {
        let mut g = self.inner.lock().expect("buffer lock");
        while !g.closed && g.queue.len() >= self.config.capacity {
            g = self.space.wait(g).expect("buffer lock");
        }
        if g.closed {
            return false;
        }
        let id = g.stats.pushed;
        g.stats.pushed += 1;
        g.stats.uses_per_episode.push(0);
        g.queue.push_back(Slot { id, episode: Arc::new(episode), uses: 0 });
        self.ready.notify_all();
        true
    }

    fn evict_stale(&self, g: &mut Inner, version: u64) {
        let floor = version.saturating_sub(self.config.staleness);
        let before = g.queue.len();
        g.queue.retain(|s| s.episode.policy_version >= floor);
        let evicted = (before - g.queue.len()) as u64;
        g.stats.evicted_stale += evicted;
        if evicted > 0 {
            self.space.notify_all();
        }
    }

    /// The oldest usable episode for a trainer at `version`, counting one
    /// use. Waits up to `timeout`; `None` on timeout or when closed and
    /// drained.
    pub fn take(&self, version: u64, timeout: Duration) -> Option<Arc<Episode>> {
        let deadline = Instant::now() + timeout;
        let mut g = self.inner.lock().expect("buffer lock");
        loop {
            self.evict_stale(&mut g, version);
            if let Some(slot) = g.queue.front_mut() {
                slot.uses += 1;
                let (id, uses, ep) = (slot.id, slot.uses, slot.episode.clone());
                if uses >= self.config.reuse {
                    g.queue.pop_front();
                    self.space.notify_all();
                } else {
                    // Move to the back so fresher episodes interleave.
                    let s = g.queue.pop_front().expect("front exists");
                    g.queue.push_back(s);
                }
                g.stats.uses += 1;
                g.stats.uses_per_episode[id as usize] = uses;
                return Some(ep);
            }
            if g.closed {
                return None;
            }
            let now = Instant::now();
            if now >= deadline {
                return None;
            }
            g = self.ready.wait_timeout(g, deadline - now).expect("buffer lock").0;
        }
    }

    /// Exactly `n` episodes produced by `version`, each used once. Older
    /// episodes are discarded. `None` on timeout or close.
    pub fn take_batch(&self, n: usize, version: u64, timeout: Duration) -> Option<Vec<Arc<Episode>>> {
        let deadline = Instant::now() + timeout;
        let mut g = self.inner.lock().expect("buffer lock");
        loop {
            let before = g.queue.len();
            g.queue.retain(|s| s.episode.policy_version >= version);
            g.stats.evicted_stale += (before - g.queue.len()) as u64;
            if g.queue.len() >= n {
                let mut out = Vec::with_capacity(n);
                for _ in 0..n {
                    let s = g.queue.pop_front().expect("length checked");
                    g.stats.uses += 1;
                    g.stats.uses_per_episode[s.id as usize] = 1;
                    out.push(s.episode);
                }
                self.space.notify_all();
                return Some(out);
            }
            if g.closed {
                return None;
            }
            let now = Instant::now();
            if now >= deadline {
                return None;
            }
            g = self.ready.wait_timeout(g, deadline - now).expect("buffer lock").0;
        }
    }

    pub fn close(&self) {
        let mut g = self.inner.lock().expect("buffer lock");
        g.closed = true;
        self.ready.notify_all();
        self.space.notify_all();
    }

    pub fn is_closed(&self) -> bool {
        self.inner.lock().expect("buffer lock").closed
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("buffer lock").queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stats(&self) -> BufferStats {
        self.inner.lock().expect("buffer lock").stats.clone()
    }
}

/// Latest published training policy, the exploration rate rollouts should
/// use with it and a publication counter.
#[derive(Debug)]
pub struct PolicyServer {
    current: RwLock<Published>,
    state: Mutex<(u64, bool)>,
    changed: Condvar,
}

#[derive(Debug, Clone)]
pub struct Published {
    pub policy: Arc<Policy>,
    pub epsilon: f64,
    pub version: u64,
}

impl PolicyServer {
    pub fn new(policy: Arc<Policy>, epsilon: f64) -> Self {
        Self {
            current: RwLock::new(Published { policy, epsilon, version: 0 }),
            state: Mutex::new((0, false)),
            changed: Condvar::new(),
        }
    }

    pub fn latest(&self) -> Published {
        self.current.read().expect("policy lock").clone()
    }

    pub fn version(&self) -> u64 {
        self.state.lock().expect("version lock").0
    }

    /// Publishes a snapshot under the next version and returns it.
    pub fn publish(&self, policy: Arc<Policy>, epsilon: f64) -> u64 {
        let mut g = self.state.lock().expect("version lock");
        g.0 += 1;
        *self.current.write().expect("policy lock") = Published { policy, epsilon, version: g.0 };
        self.changed.notify_all();
        g.0
    }

    /// Blocks until the version exceeds `seen`; false once closed.
    pub fn wait_newer(&self, seen: u64) -> bool {
        let mut g = self.state.lock().expect("version lock");
        while g.0 <= seen && !g.1 {
            g = self.changed.wait(g).expect("version lock");
        }
        !g.1
    }

    pub fn close(&self) {
        let mut g = self.state.lock().expect("version lock");
        g.1 = true;
        self.changed.notify_all();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Team;

    fn ep(version: u64) -> Episode {
        Episode {
            policy_version: version,
            opponent_id: "o".into(),
            learner_team: Team::Left,
            seed: 0,
            transitions: vec![],
            goals: (0, 0),
            steps: 1,
        }
    }

    const T: Duration = Duration::from_millis(50);

    #[test]
    fn reuse_cap_and_staleness() {
        let b = EpisodeBuffer::new(BufferConfig { capacity: 8, reuse: 2, staleness: 1 });
        b.push(ep(1));
        b.push(ep(3));
        // Version 3 makes version 1 stale.
        let a = b.take(3, T).unwrap();
        assert_eq!(a.policy_version, 3);
        assert_eq!(b.take(3, T).unwrap().policy_version, 3);
        assert!(b.take(3, T).is_none());
        let s = b.stats();
        assert_eq!(s.evicted_stale, 1);
        assert_eq!(s.uses_per_episode, vec![0, 2]);
    }

    #[test]
    fn batches_are_fresh_and_single_use() {
        let b = EpisodeBuffer::new(BufferConfig::default());
        b.push(ep(0));
        b.push(ep(1));
        b.push(ep(1));
        let batch = b.take_batch(2, 1, T).unwrap();
        assert!(batch.iter().all(|e| e.policy_version == 1));
        assert!(b.take_batch(1, 1, T).is_none());
        assert_eq!(b.stats().uses_per_episode, vec![0, 1, 1]);
    }

    #[test]
    fn close_releases_waiters() {
        let b = Arc::new(EpisodeBuffer::new(BufferConfig { capacity: 1, ..BufferConfig::default() }));
        b.push(ep(0));
        let b2 = b.clone();
        let h = std::thread::spawn(move || b2.push(ep(0)));
        std::thread::sleep(Duration::from_millis(20));
        b.close();
        assert!(!h.join().unwrap());
        let s = PolicyServer::new(Arc::new(Policy::scripted("p", crate::learner::ScriptedKind::Idle)), 0.1);
        assert_eq!(s.publish(Arc::new(Policy::scripted("q", crate::learner::ScriptedKind::Idle)), 0.05), 1);
        assert_eq!(s.latest().version, 1);
        assert!(s.wait_newer(0));
        s.close();
        assert!(!s.wait_newer(5));
    }
}
