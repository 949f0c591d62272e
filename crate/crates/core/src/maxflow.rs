//! Boykov–Kolmogorov augmenting-path max-flow with integer capacities.
//!
//! After [`MaxFlow::solve`] the source search tree is exactly the set of nodes reachable
//! from the source in the residual graph, i.e. the source side of the inclusion-minimal
//! minimum cut. The sink tree gives the inclusion-maximal one.
//!
//! Terminal capacities may be shifted after a solve and the graph solved again. The
//! residual flow and the search trees are kept and only repaired around the shifted
//! nodes, so a small change costs a few augmentations rather than a full solve.

use std::collections::VecDeque;

const NONE: u32 = u32::MAX;
const TERMINAL: u32 = u32::MAX - 1;
const ORPHAN: u32 = u32::MAX - 2;
const INF_DIST: u32 = u32::MAX;

/// Per-node solver state, packed so that a tree walk touches one cache line per node.
#[derive(Clone, Copy, Debug)]
struct Node {
    /// Net residual terminal capacity: positive towards the source, negative towards the sink.
    tr_cap: i64,
    /// Arc from this node to its tree parent, or one of `NONE`, `TERMINAL`, `ORPHAN`.
    parent: u32,
    /// Node at the far end of `parent`.
    pnode: u32,
    ts: u32,
    dist: u32,
    sink: bool,
    active: bool,
    /// Terminal capacity shifted since the last solve.
    changed: bool,
}

impl Default for Node {
    fn default() -> Self {
        Self { tr_cap: 0, parent: NONE, pnode: NONE, ts: 0, dist: 0, sink: false, active: false, changed: false }
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct Arc {
    head: u32,
    sister: u32,
    r_cap: i64,
}

/// Graph under construction and its solver state.
///
/// Edges are collected as a list and laid out contiguously per node on the first solve.
#[derive(Clone, Debug, Default)]
pub struct MaxFlow {
    nodes: Vec<Node>,
    edges: Vec<(u32, u32, i64, i64)>,
    start: Vec<u32>,
    arcs: Vec<Arc>,
    flow: i64,
    shifted: bool,
    solved: bool,
    changed: Vec<u32>,
    time: u32,
}

impl MaxFlow {
    pub fn new(nodes: usize) -> Self {
        Self { nodes: vec![Node::default(); nodes], ..Default::default() }
    }

    pub fn with_edge_capacity(nodes: usize, edges: usize) -> Self {
        let mut me = Self::new(nodes);
        me.edges.reserve(edges);
        me
    }

    pub fn nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Adds terminal capacities: `source` from s to `node`, `sink` from `node` to t.
    pub fn add_terminal(&mut self, node: usize, source: i64, sink: i64) {
        debug_assert!(source >= 0 && sink >= 0);
        debug_assert!(!self.solved, "use shift_terminal after solving");
        // Only the difference matters for the cut; the common part is saturated flow.
        self.flow += source.min(sink);
        self.nodes[node].tr_cap += source - sink;
    }

    /// Adds `delta` to the net terminal capacity (source minus sink) of `node`.
    /// Allowed before or after [`Self::solve`]; afterwards [`Self::flow`] is no longer tracked.
    pub fn shift_terminal(&mut self, node: usize, delta: i64) {
        let v = &mut self.nodes[node];
        v.tr_cap += delta;
        if self.solved && !v.changed {
            v.changed = true;
            self.changed.push(node as u32);
        }
        self.shifted = true;
    }

    /// Adds the arc pair `a -> b` with capacity `cap` and `b -> a` with capacity `rev`.
    pub fn add_edge(&mut self, a: usize, b: usize, cap: i64, rev: i64) {
        debug_assert!(a != b && cap >= 0 && rev >= 0);
        debug_assert!(!self.solved, "edges are fixed by the first solve");
        self.edges.push((a as u32, b as u32, cap, rev));
    }

    /// Value of the maximum flow (including the constant absorbed by [`Self::add_terminal`]),
    /// or `None` once terminals have been shifted.
    pub fn flow(&self) -> Option<i64> {
        (!self.shifted).then_some(self.flow)
    }

    /// Whether `node` lies on the source side of the inclusion-minimal minimum cut.
    pub fn in_minimal_source_set(&self, node: usize) -> bool {
        let v = &self.nodes[node];
        v.parent != NONE && !v.sink
    }

    /// Whether `node` lies on the source side of the inclusion-maximal minimum cut.
    pub fn in_maximal_source_set(&self, node: usize) -> bool {
        let v = &self.nodes[node];
        !(v.parent != NONE && v.sink)
    }

    fn layout(&mut self) {
        let n = self.nodes();
        let mut start = vec![0u32; n + 1];
        for &(a, b, _, _) in &self.edges {
            start[a as usize + 1] += 1;
            start[b as usize + 1] += 1;
        }
        for i in 0..n {
            start[i + 1] += start[i];
        }
        let mut fill = start.clone();
        self.arcs = vec![Arc::default(); start[n] as usize];
        for &(a, b, cap, rev) in &self.edges {
            let pa = fill[a as usize];
            fill[a as usize] += 1;
            let pb = fill[b as usize];
            fill[b as usize] += 1;
            self.arcs[pa as usize] = Arc { head: b, sister: pb, r_cap: cap };
            self.arcs[pb as usize] = Arc { head: a, sister: pa, r_cap: rev };
        }
        self.start = start;
        self.edges = Vec::new();
    }

    /// Residual capacity of arc `a` in the direction a search from `sink`'s tree can use:
    /// away from the node in the source tree, towards it in the sink tree.
    #[inline]
    fn grow_cap(&self, a: usize, sink: bool) -> i64 {
        let arc = &self.arcs[a];
        if sink {
            self.arcs[arc.sister as usize].r_cap
        } else {
            arc.r_cap
        }
    }

    /// Runs to a maximum flow. Later calls continue from the current residual graph.
    pub fn solve(&mut self) {
        let mut queue: VecDeque<u32> = VecDeque::new();
        let mut orphans: VecDeque<u32> = VecDeque::new();
        if self.solved {
            self.repair_trees(&mut queue, &mut orphans);
        } else {
            self.layout();
            self.solved = true;
            for (i, v) in self.nodes.iter_mut().enumerate() {
                if v.tr_cap != 0 {
                    v.sink = v.tr_cap < 0;
                    v.parent = TERMINAL;
                    v.dist = 1;
                    v.active = true;
                    queue.push_back(i as u32);
                }
            }
        }
        let mut time = self.time;
        let mut current: Option<u32> = None;
        loop {
            let i = match current.take() {
                Some(i) => i,
                None => loop {
                    match queue.pop_front() {
                        None => {
                            self.time = time;
                            return;
                        }
                        Some(i) => {
                            let v = &mut self.nodes[i as usize];
                            v.active = false;
                            if v.parent != NONE {
                                break i;
                            }
                        }
                    }
                },
            };
            let iu = i as usize;
            let vi = self.nodes[iu];
            let mut middle = NONE;
            for a in self.start[iu]..self.start[iu + 1] {
                let au = a as usize;
                if self.grow_cap(au, vi.sink) <= 0 {
                    continue;
                }
                let Arc { head, sister, .. } = self.arcs[au];
                let vj = &mut self.nodes[head as usize];
                if vj.parent == NONE {
                    vj.sink = vi.sink;
                    vj.parent = sister;
                    vj.pnode = i;
                    vj.ts = vi.ts;
                    vj.dist = vi.dist + 1;
                    if !vj.active {
                        vj.active = true;
                        queue.push_back(head);
                    }
                } else if vj.sink != vi.sink {
                    middle = if vi.sink { sister } else { a };
                    break;
                } else if vj.ts <= vi.ts && vj.dist > vi.dist {
                    vj.parent = sister;
                    vj.pnode = i;
                    vj.ts = vi.ts;
                    vj.dist = vi.dist + 1;
                }
            }
            time = time.wrapping_add(1);
            if middle != NONE {
                // Keep processing this node after the augmentation.
                current = Some(i);
                self.augment(middle, &mut orphans);
                self.adopt_all(time, &mut queue, &mut orphans);
                if self.nodes[iu].parent == NONE {
                    current = None;
                }
            }
        }
    }

    /// Makes the search trees of the last solve valid again after terminal shifts. A node
    /// with a nonzero terminal becomes a root of the matching tree; one that switches trees
    /// orphans its children and wakes the neighbours that can now reach it.
    fn repair_trees(&mut self, queue: &mut VecDeque<u32>, orphans: &mut VecDeque<u32>) {
        self.time = self.time.wrapping_add(1);
        let time = self.time;
        for i in std::mem::take(&mut self.changed) {
            let iu = i as usize;
            let v = self.nodes[iu];
            self.nodes[iu].changed = false;
            if v.tr_cap == 0 {
                if v.parent == TERMINAL {
                    self.nodes[iu].parent = ORPHAN;
                    orphans.push_back(i);
                }
                continue;
            }
            let sink = v.tr_cap < 0;
            if v.parent == NONE || v.sink != sink {
                for a in self.start[iu]..self.start[iu + 1] {
                    let au = a as usize;
                    let j = self.arcs[au].head as usize;
                    let vj = self.nodes[j];
                    if vj.parent == NONE {
                        continue;
                    }
                    if vj.parent != TERMINAL && vj.parent != ORPHAN && vj.pnode == i {
                        self.nodes[j].parent = ORPHAN;
                        orphans.push_back(j as u32);
                    }
                    // Nodes of the tree `i` leaves must look at it again, orphans included.
                    if vj.sink != sink && self.grow_cap(au, sink) > 0 && !vj.active {
                        self.nodes[j].active = true;
                        queue.push_back(j as u32);
                    }
                }
            } else if v.parent == TERMINAL {
                continue;
            }
            let v = &mut self.nodes[iu];
            v.sink = sink;
            v.parent = TERMINAL;
            v.ts = time;
            v.dist = 1;
            if !v.active {
                v.active = true;
                queue.push_back(i);
            }
        }
        self.adopt_all(time, queue, orphans);
    }

    fn adopt_all(&mut self, time: u32, queue: &mut VecDeque<u32>, orphans: &mut VecDeque<u32>) {
        while let Some(o) = orphans.pop_front() {
            // A node orphaned during repair may have become a root since.
            if self.nodes[o as usize].parent == ORPHAN {
                self.adopt(o as usize, time, queue, orphans);
            }
        }
    }

    /// Terminal node reached from `i` by following parent arcs, and the smallest residual
    /// capacity on the way. `towards_root` selects the arc direction used by the source tree.
    #[inline]
    fn walk(&self, mut i: usize, towards_root: bool, mut bottleneck: i64) -> (usize, i64) {
        loop {
            let a = self.nodes[i].parent;
            if a == TERMINAL {
                return (i, bottleneck);
            }
            let arc = &self.arcs[a as usize];
            let cap = if towards_root { self.arcs[arc.sister as usize].r_cap } else { arc.r_cap };
            bottleneck = bottleneck.min(cap);
            i = self.nodes[i].pnode as usize;
        }
    }

    /// Pushes `amount` along the parent path of `i`, orphaning nodes whose parent arc saturates.
    #[inline]
    fn push_path(&mut self, mut i: usize, towards_root: bool, amount: i64, orphans: &mut VecDeque<u32>) -> usize {
        loop {
            let a = self.nodes[i].parent;
            if a == TERMINAL {
                return i;
            }
            let au = a as usize;
            let su = self.arcs[au].sister as usize;
            // Source side: flow runs from parent to child, i.e. along the sister arc.
            let (fwd, back) = if towards_root { (su, au) } else { (au, su) };
            self.arcs[back].r_cap += amount;
            self.arcs[fwd].r_cap -= amount;
            if self.arcs[fwd].r_cap == 0 {
                self.nodes[i].parent = ORPHAN;
                orphans.push_front(i as u32);
            }
            i = self.nodes[i].pnode as usize;
        }
    }

    /// Augments along the path through `middle`, an arc from the source tree to the sink tree.
    fn augment(&mut self, middle: u32, orphans: &mut VecDeque<u32>) {
        let m = middle as usize;
        let Arc { head, sister: ms, r_cap } = self.arcs[m];
        let (in_sink, in_source) = (head as usize, self.arcs[ms as usize].head as usize);
        let (s_root, b) = self.walk(in_source, true, r_cap);
        let b = b.min(self.nodes[s_root].tr_cap);
        let (t_root, b) = self.walk(in_sink, false, b);
        let bottleneck = b.min(-self.nodes[t_root].tr_cap);

        self.arcs[ms as usize].r_cap += bottleneck;
        self.arcs[m].r_cap -= bottleneck;
        for (start, towards_root, sign) in [(in_source, true, -1), (in_sink, false, 1)] {
            let root = self.push_path(start, towards_root, bottleneck, orphans);
            let v = &mut self.nodes[root];
            v.tr_cap += sign * bottleneck;
            if v.tr_cap == 0 {
                v.parent = ORPHAN;
                orphans.push_front(root as u32);
            }
        }
        self.flow += bottleneck;
    }

    /// Distance from `j` to its terminal along parent arcs, or `INF_DIST` if the path hits an orphan.
    fn origin_distance(&mut self, j: usize, time: u32) -> u32 {
        let mut d: u32 = 0;
        let mut k = j;
        loop {
            let v = &mut self.nodes[k];
            if v.ts == time {
                d = d.saturating_add(v.dist);
                break;
            }
            let a = v.parent;
            d += 1;
            if a == TERMINAL {
                v.ts = time;
                v.dist = 1;
                break;
            }
            if a == ORPHAN {
                return INF_DIST;
            }
            k = v.pnode as usize;
        }
        // Cache distances along the walked path.
        let mut k = j;
        while self.nodes[k].ts != time {
            let v = &mut self.nodes[k];
            v.ts = time;
            v.dist = d;
            d -= 1;
            k = v.pnode as usize;
        }
        self.nodes[j].dist
    }

    fn adopt(&mut self, i: usize, time: u32, queue: &mut VecDeque<u32>, orphans: &mut VecDeque<u32>) {
        let sink = self.nodes[i].sink;
        let mut best_arc = NONE;
        let mut best_d = INF_DIST;
        for a in self.start[i]..self.start[i + 1] {
            let au = a as usize;
            // Residual capacity must point towards `i` in the source tree and away from it in the sink tree.
            if self.grow_cap(au, !sink) > 0 {
                let j = self.arcs[au].head as usize;
                if self.nodes[j].sink == sink && self.nodes[j].parent != NONE {
                    let d = self.origin_distance(j, time);
                    if d < best_d {
                        best_arc = a;
                        best_d = d;
                    }
                }
            }
        }
        if best_arc != NONE {
            let pnode = self.arcs[best_arc as usize].head;
            let v = &mut self.nodes[i];
            v.parent = best_arc;
            v.pnode = pnode;
            v.ts = time;
            v.dist = best_d + 1;
            return;
        }
        self.nodes[i].ts = 0;
        for a in self.start[i]..self.start[i + 1] {
            let au = a as usize;
            let j = self.arcs[au].head as usize;
            let vj = self.nodes[j];
            if vj.sink == sink && vj.parent != NONE {
                if self.grow_cap(au, !sink) > 0 && !vj.active {
                    self.nodes[j].active = true;
                    queue.push_back(j as u32);
                }
                if vj.parent != TERMINAL && vj.parent != ORPHAN && vj.pnode as usize == i {
                    self.nodes[j].parent = ORPHAN;
                    orphans.push_back(j as u32);
                }
            }
        }
        self.nodes[i].parent = NONE;
    }
}
