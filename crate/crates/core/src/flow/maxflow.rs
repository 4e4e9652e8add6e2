//! Boykov–Kolmogorov augmenting-path max-flow on real capacities.
//!
//! Two search trees grow from the source and the sink; when they touch, the
//! connecting path is augmented and the saturated links are repaired by
//! re-adopting orphaned nodes. Trees are reused between augmentations.

use std::collections::VecDeque;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tree {
    Free,
    Source,
    Sink,
}

/// Directed capacitated network. Arcs come in sister pairs `2e`, `2e + 1`.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    n: usize,
    source: usize,
    sink: usize,
    head: Vec<usize>,
    cap: Vec<f64>,
    res: Vec<f64>,
    out: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct MaxFlowResult {
    pub value: f64,
    /// `true` for nodes on the source side of the minimum cut (residual
    /// reachable from the source).
    pub source_side: Vec<bool>,
}

impl FlowNetwork {
    pub fn new(n: usize, source: usize, sink: usize) -> Self {
        assert!(source < n && sink < n && source != sink);
        FlowNetwork { n, source, sink, head: Vec::new(), cap: Vec::new(), res: Vec::new(), out: vec![Vec::new(); n] }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    /// Adds arc `u → v` with capacity `cap` and its sister `v → u` with
    /// capacity `rev_cap`; returns the index of the forward arc.
    pub fn add_edge(&mut self, u: usize, v: usize, cap: f64, rev_cap: f64) -> usize {
        assert!(cap >= 0.0 && rev_cap >= 0.0, "capacities must be nonnegative");
        assert!(u < self.n && v < self.n);
        let a = self.head.len();
        self.head.push(v);
        self.cap.push(cap);
        self.res.push(cap);
        self.out[u].push(a);
        self.head.push(u);
        self.cap.push(rev_cap);
        self.res.push(rev_cap);
        self.out[v].push(a + 1);
        a
    }

    pub fn add_arc(&mut self, u: usize, v: usize, cap: f64) -> usize {
        self.add_edge(u, v, cap, 0.0)
    }

    /// Net flow carried by arc `a` (`cap − residual`; negative when the
    /// sister arc carries flow the other way).
    pub fn flow(&self, a: usize) -> f64 {
        self.cap[a] - self.res[a]
    }

    pub fn residual(&self, a: usize) -> f64 {
        self.res[a]
    }

    fn tail(&self, a: usize) -> usize {
        self.head[a ^ 1]
    }

    /// Arc list `(from, to, capacity)` for the forward arcs.
    pub fn arcs(&self) -> Vec<(usize, usize, f64)> {
        (0..self.head.len())
            .step_by(2)
            .flat_map(|a| {
                let f = (self.tail(a), self.head[a], self.cap[a]);
                let r = (self.head[a], self.tail(a), self.cap[a + 1]);
                [f, r]
            })
            .filter(|&(_, _, c)| c > 0.0)
            .collect()
    }

    pub fn max_flow(&mut self) -> MaxFlowResult {
        let max_cap = self.cap.iter().fold(0.0f64, |m, &c| m.max(c));
        let eps = if max_cap > 0.0 { max_cap * 1e-14 } else { 0.0 };
        BkState::new(self, eps).run();
        let value: f64 = self.out[self.source].iter().map(|&a| self.flow(a)).sum();
        let source_side = self.residual_reachable(eps);
        MaxFlowResult { value, source_side }
    }

    fn residual_reachable(&self, eps: f64) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([self.source]);
        seen[self.source] = true;
        while let Some(p) = queue.pop_front() {
            for &a in &self.out[p] {
                let q = self.head[a];
                if !seen[q] && self.res[a] > eps {
                    seen[q] = true;
                    queue.push_back(q);
                }
            }
        }
        seen
    }
}

struct BkState<'a> {
    net: &'a mut FlowNetwork,
    eps: f64,
    tree: Vec<Tree>,
    // source tree: arc parent → node; sink tree: arc node → parent
    parent: Vec<usize>,
    active: VecDeque<usize>,
    in_active: Vec<bool>,
    orphans: VecDeque<usize>,
}

impl<'a> BkState<'a> {
    fn new(net: &'a mut FlowNetwork, eps: f64) -> Self {
        let n = net.n;
        let mut tree = vec![Tree::Free; n];
        tree[net.source] = Tree::Source;
        tree[net.sink] = Tree::Sink;
        let active = VecDeque::from([net.source, net.sink]);
        let mut in_active = vec![false; n];
        in_active[net.source] = true;
        in_active[net.sink] = true;
        BkState { net, eps, tree, parent: vec![NONE; n], active, in_active, orphans: VecDeque::new() }
    }

    fn activate(&mut self, v: usize) {
        if !self.in_active[v] {
            self.in_active[v] = true;
            self.active.push_back(v);
        }
    }

    fn run(&mut self) {
        while let Some(&p) = self.active.front() {
            if self.tree[p] == Tree::Free {
                self.active.pop_front();
                self.in_active[p] = false;
                continue;
            }
            match self.grow(p) {
                Some(bridge) => {
                    self.augment(bridge);
                    self.adopt();
                }
                None => {
                    self.active.pop_front();
                    self.in_active[p] = false;
                }
            }
        }
    }

    /// Expands `p`'s tree; returns a source-to-sink bridging arc if found.
    fn grow(&mut self, p: usize) -> Option<usize> {
        let from_source = self.tree[p] == Tree::Source;
        for idx in 0..self.net.out[p].len() {
            let a = self.net.out[p][idx];
            let q = self.net.head[a];
            // arc used in the search direction
            let link = if from_source { a } else { a ^ 1 };
            if self.net.res[link] <= self.eps {
                continue;
            }
            match (self.tree[q], from_source) {
                (Tree::Free, true) => {
                    self.tree[q] = Tree::Source;
                    self.parent[q] = link;
                    self.activate(q);
                }
                (Tree::Free, false) => {
                    self.tree[q] = Tree::Sink;
                    self.parent[q] = link;
                    self.activate(q);
                }
                (Tree::Sink, true) | (Tree::Source, false) => return Some(link),
                _ => {}
            }
        }
        None
    }

    fn augment(&mut self, bridge: usize) {
        let net = &*self.net;
        let mut bottleneck = net.res[bridge];
        let mut v = net.tail(bridge);
        while v != net.source {
            let a = self.parent[v];
            bottleneck = bottleneck.min(net.res[a]);
            v = net.tail(a);
        }
        let mut v = net.head[bridge];
        while v != net.sink {
            let a = self.parent[v];
            bottleneck = bottleneck.min(net.res[a]);
            v = net.head[a];
        }

        self.push(bridge, bottleneck);
        let mut v = self.net.tail(bridge);
        while v != self.net.source {
            let a = self.parent[v];
            self.push(a, bottleneck);
            let up = self.net.tail(a);
            if self.net.res[a] <= self.eps {
                self.parent[v] = NONE;
                self.orphans.push_back(v);
            }
            v = up;
        }
        let mut v = self.net.head[bridge];
        while v != self.net.sink {
            let a = self.parent[v];
            self.push(a, bottleneck);
            let up = self.net.head[a];
            if self.net.res[a] <= self.eps {
                self.parent[v] = NONE;
                self.orphans.push_back(v);
            }
            v = up;
        }
    }

    fn push(&mut self, a: usize, f: f64) {
        self.net.res[a] -= f;
        if self.net.res[a] < 0.0 {
            self.net.res[a] = 0.0;
        }
        self.net.res[a ^ 1] += f;
    }

    /// Whether `v` is still rooted at its tree's terminal.
    fn rooted(&self, mut v: usize) -> bool {
        let root = match self.tree[v] {
            Tree::Source => self.net.source,
            Tree::Sink => self.net.sink,
            Tree::Free => return false,
        };
        loop {
            if v == root {
                return true;
            }
            let a = self.parent[v];
            if a == NONE {
                return false;
            }
            v = if self.tree[v] == Tree::Source { self.net.tail(a) } else { self.net.head[a] };
        }
    }

    fn adopt(&mut self) {
        while let Some(p) = self.orphans.pop_front() {
            let in_source = self.tree[p] == Tree::Source;
            let mut new_parent = NONE;
            for &a in &self.net.out[p] {
                let q = self.net.head[a];
                if self.tree[q] != self.tree[p] {
                    continue;
                }
                let link = if in_source { a ^ 1 } else { a };
                if self.net.res[link] > self.eps && self.rooted(q) {
                    new_parent = link;
                    break;
                }
            }
            if new_parent != NONE {
                self.parent[p] = new_parent;
                continue;
            }
            for idx in 0..self.net.out[p].len() {
                let a = self.net.out[p][idx];
                let q = self.net.head[a];
                if self.tree[q] != self.tree[p] {
                    continue;
                }
                let toward_p = if in_source { a ^ 1 } else { a };
                if self.net.res[toward_p] > self.eps {
                    self.activate(q);
                }
                // q hangs off p through arc p→q (source tree) or q→p (sink tree)
                let child_link = if in_source { a } else { a ^ 1 };
                if self.parent[q] == child_link {
                    self.parent[q] = NONE;
                    self.orphans.push_back(q);
                }
            }
            self.tree[p] = Tree::Free;
        }
    }
}

/// Maximum flow value and minimum cut of `net` (the network's residual
/// state is consumed).
pub fn max_flow(net: &mut FlowNetwork) -> MaxFlowResult {
    net.max_flow()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_arc() {
        let mut net = FlowNetwork::new(2, 0, 1);
        net.add_arc(0, 1, 3.0);
        let r = net.max_flow();
        assert_eq!(r.value, 3.0);
        assert_eq!(r.source_side, vec![true, false]);
    }

    #[test]
    fn diamond() {
        // s=0, a=1, b=2, t=3
        let mut net = FlowNetwork::new(4, 0, 3);
        net.add_arc(0, 1, 2.0);
        net.add_arc(0, 2, 2.0);
        net.add_arc(1, 3, 1.0);
        net.add_arc(2, 3, 3.0);
        assert!((net.max_flow().value - 3.0).abs() < 1e-14);
    }

    #[test]
    fn disconnected_terminals() {
        let mut net = FlowNetwork::new(4, 0, 3);
        net.add_arc(0, 1, 5.0);
        net.add_arc(2, 3, 5.0);
        let r = net.max_flow();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.source_side, vec![true, true, false, false]);
    }

    #[test]
    fn conservation_holds() {
        let mut net = FlowNetwork::new(5, 0, 4);
        let arcs = [(0, 1, 3.0), (0, 2, 2.0), (1, 2, 1.5), (1, 3, 2.0), (2, 3, 1.0), (2, 4, 2.5), (3, 4, 3.0)];
        let ids: Vec<usize> = arcs.iter().map(|&(u, v, c)| net.add_arc(u, v, c)).collect();
        let r = net.max_flow();
        let mut balance = [0.0; 5];
        for (&a, &(u, v, c)) in ids.iter().zip(&arcs) {
            let f = net.flow(a);
            assert!(f >= -1e-12 && f <= c + 1e-12);
            balance[u] -= f;
            balance[v] += f;
        }
        for b in &balance[1..4] {
            assert!(b.abs() < 1e-12);
        }
        assert!((balance[4] - r.value).abs() < 1e-12);
    }
}
