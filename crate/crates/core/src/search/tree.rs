//! Arena-backed search tree with visit counts and accumulated rewards.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchNode {
    pub depth: usize,
    /// Representative index chosen per placed object, root first.
    pub path: Vec<usize>,
    pub n: u64,
    pub h: f64,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// Untried representatives for the next object, best LCP first.
    pub untried: Vec<usize>,
    /// Rollouts started at this node.
    pub rollouts: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchTree {
    pub nodes: Vec<SearchNode>,
    /// Every backed-up reward with the node its rollout started from.
    pub reward_log: Vec<(NodeId, f64)>,
}

/// Upper confidence bound of a child.
pub fn ucb(h: f64, n: u64, parent_n: u64, alpha: f64) -> f64 {
    let n = n as f64;
    h / n + alpha * (2.0 * (parent_n as f64).ln() / n).sqrt()
}

impl SearchTree {
    pub fn new(root_untried: Vec<usize>) -> Self {
        Self {
            nodes: vec![SearchNode {
                depth: 0,
                path: vec![],
                n: 0,
                h: 0.0,
                parent: None,
                children: vec![],
                untried: root_untried,
                rollouts: 0,
            }],
            reward_log: vec![],
        }
    }

    pub const ROOT: NodeId = 0;

    pub fn node(&self, id: NodeId) -> &SearchNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Registers a child of `parent` reached by representative `choice`.
    pub fn add_child(&mut self, parent: NodeId, choice: usize, untried: Vec<usize>) -> NodeId {
        let mut path = self.nodes[parent].path.clone();
        path.push(choice);
        let id = self.nodes.len();
        self.nodes.push(SearchNode {
            depth: self.nodes[parent].depth + 1,
            path,
            n: 0,
            h: 0.0,
            parent: Some(parent),
            children: vec![],
            untried,
            rollouts: 0,
        });
        self.nodes[parent].children.push(id);
        id
    }

    /// Child maximizing the UCB; the lowest index wins ties.
    pub fn best_child(&self, s: NodeId, alpha: f64) -> Result<NodeId> {
        let node = &self.nodes[s];
        let mut best: Option<(NodeId, f64)> = None;
        for &c in &node.children {
            let child = &self.nodes[c];
            if child.n == 0 {
                return Err(Error::InvalidArgument(format!("child {c} has no visits")));
            }
            let u = ucb(child.h, child.n, node.n, alpha);
            if best.is_none_or(|(_, b)| u > b) {
                best = Some((c, u));
            }
        }
        best.map(|b| b.0).ok_or(Error::NoChildren)
    }

    /// Adds one visit and `reward` to `s` and every ancestor.
    pub fn backup(&mut self, s: NodeId, reward: f64) {
        self.nodes[s].rollouts += 1;
        self.reward_log.push((s, reward));
        let mut cur = Some(s);
        while let Some(id) = cur {
            let node = &mut self.nodes[id];
            node.n += 1;
            node.h += reward;
            cur = node.parent;
        }
    }

    /// Checks `n = Σ n(children) + rollouts` everywhere and that every `h`
    /// equals the replayed reward sum within `tol`.
    pub fn check_ledger(&self, tol: f64) -> std::result::Result<(), String> {
        let mut replay = vec![0.0; self.nodes.len()];
        for &(s, r) in &self.reward_log {
            let mut cur = Some(s);
            while let Some(id) = cur {
                replay[id] += r;
                cur = self.nodes[id].parent;
            }
        }
        for (i, node) in self.nodes.iter().enumerate() {
            let child_n: u64 = node.children.iter().map(|&c| self.nodes[c].n).sum();
            if node.n != child_n + node.rollouts {
                return Err(format!("node {i}: n={} children={} rollouts={}", node.n, child_n, node.rollouts));
            }
            if (node.h - replay[i]).abs() > tol {
                return Err(format!("node {i}: h={} replay={}", node.h, replay[i]));
            }
        }
        Ok(())
    }
}
