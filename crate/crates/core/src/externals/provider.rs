//! Simulated service provider that tells a phone when a registered peer
//! comes within range.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub const DEFAULT_RANGE: i64 = 10;

/// A scripted action of a simulated peer phone.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum Directive {
    PeerRegister { addr: String },
    PeerMove { addr: String, x: i64, y: i64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Peer {
    pub pos: (i64, i64),
    pub registered: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProviderSim {
    pub range: i64,
    pub self_address: Option<String>,
    pub self_pos: (i64, i64),
    /// Id of the notifier widget that registered this phone.
    pub notifier: Option<u64>,
    pub peers: BTreeMap<String, Peer>,
    in_range: BTreeSet<String>,
}

impl Default for ProviderSim {
    fn default() -> Self {
        ProviderSim::new(DEFAULT_RANGE)
    }
}

impl ProviderSim {
    pub fn new(range: i64) -> Self {
        ProviderSim {
            range,
            self_address: None,
            self_pos: (0, 0),
            notifier: None,
            peers: BTreeMap::new(),
            in_range: BTreeSet::new(),
        }
    }

    fn within(&self, a: (i64, i64), b: (i64, i64)) -> bool {
        let (dx, dy) = (a.0 as i128 - b.0 as i128, a.1 as i128 - b.1 as i128);
        let r = self.range as i128;
        dx * dx + dy * dy <= r * r
    }

    /// Recomputes which peers are in range and returns the addresses that
    /// have just entered.
    fn refresh(&mut self) -> Vec<String> {
        let mut entered = Vec::new();
        let active = self.self_address.is_some();
        let now: BTreeSet<String> = self
            .peers
            .iter()
            .filter(|(_, p)| active && p.registered && self.within(self.self_pos, p.pos))
            .map(|(a, _)| a.clone())
            .collect();
        for a in &now {
            if !self.in_range.contains(a) {
                entered.push(a.clone());
            }
        }
        self.in_range = now;
        entered
    }

    pub fn register_self(&mut self, addr: &str, notifier: u64) -> Vec<String> {
        self.self_address = Some(addr.to_string());
        self.notifier = Some(notifier);
        self.refresh()
    }

    pub fn move_self(&mut self, x: i64, y: i64) -> Vec<String> {
        self.self_pos = (x, y);
        self.refresh()
    }

    /// Applies a peer action; returns the addresses to announce.
    pub fn step(&mut self, d: &Directive) -> Vec<String> {
        match d {
            Directive::PeerRegister { addr } => {
                self.peers
                    .entry(addr.clone())
                    .or_insert(Peer { pos: (i64::MAX / 4, i64::MAX / 4), registered: false })
                    .registered = true;
            }
            Directive::PeerMove { addr, x, y } => {
                self.peers.entry(addr.clone()).or_insert(Peer { pos: (*x, *y), registered: false }).pos = (*x, *y);
            }
        }
        self.refresh()
    }
}
