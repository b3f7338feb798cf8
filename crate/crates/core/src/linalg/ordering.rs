//! Fill-reducing ordering by recursive level-set nested dissection.
//!
//! Each subgraph is split by the middle level of a breadth-first search
//! rooted at a pseudo-peripheral vertex. Both halves are ordered first and
//! the separator last, which keeps fill near `O(N log N)` on planar meshes.

use super::sparse::Csr;

const LEAF_SIZE: usize = 48;

struct Graph<'a> {
    ptr: &'a [usize],
    adj: &'a [usize],
}

impl Graph<'_> {
    fn neighbours(&self, v: usize) -> &[usize] {
        &self.adj[self.ptr[v]..self.ptr[v + 1]]
    }
}

struct Dissector<'a> {
    graph: Graph<'a>,
    stamp: Vec<usize>,
    seen: Vec<usize>,
    depth: Vec<usize>,
    next_stamp: usize,
    order: Vec<usize>,
}

/// Returns `perm` with `perm[new] = old`.
pub fn nested_dissection(pattern: &Csr) -> Vec<usize> {
    let n = pattern.nrows();
    let graph = Graph {
        ptr: pattern.row_ptr(),
        adj: pattern.col_idx(),
    };
    let mut d = Dissector {
        graph,
        stamp: vec![usize::MAX; n],
        seen: vec![usize::MAX; n],
        depth: vec![0; n],
        next_stamp: 0,
        order: Vec::with_capacity(n),
    };
    let all: Vec<usize> = (0..n).collect();
    d.dissect(all);
    debug_assert_eq!(d.order.len(), n);
    d.order
}

pub fn inverse_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    inv
}

impl Dissector<'_> {
    fn fresh_stamp(&mut self) -> usize {
        self.next_stamp += 1;
        self.next_stamp
    }

    /// Breadth-first search restricted to vertices carrying `member`.
    /// Returns vertices in visit order; `depth` holds their levels.
    fn bfs(&mut self, root: usize, member: usize) -> Vec<usize> {
        let visit = self.fresh_stamp();
        let mut queue = vec![root];
        self.seen[root] = visit;
        self.depth[root] = 0;
        let mut head = 0;
        while head < queue.len() {
            let v = queue[head];
            head += 1;
            for &w in self.graph.neighbours(v) {
                if self.stamp[w] == member && self.seen[w] != visit {
                    self.seen[w] = visit;
                    self.depth[w] = self.depth[v] + 1;
                    queue.push(w);
                }
            }
        }
        queue
    }

    fn dissect(&mut self, nodes: Vec<usize>) {
        if nodes.len() <= LEAF_SIZE {
            self.order.extend(nodes);
            return;
        }
        let member = self.fresh_stamp();
        for &v in &nodes {
            self.stamp[v] = member;
        }

        let mut reach = self.bfs(nodes[0], member);
        if reach.len() < nodes.len() {
            // disconnected: order each component on its own
            let mut components = Vec::new();
            let comp_mark = self.fresh_stamp();
            for &v in &reach {
                self.seen[v] = comp_mark;
            }
            components.push(reach);
            for &v in &nodes {
                if self.seen[v] != comp_mark && self.stamp[v] == member {
                    let comp = self.bfs(v, member);
                    for &w in &comp {
                        self.stamp[w] = usize::MAX - 1;
                    }
                    components.push(comp);
                }
            }
            for comp in components {
                self.dissect(comp);
            }
            return;
        }

        // pseudo-peripheral root: walk to the farthest vertex until eccentricity stalls
        let mut ecc = self.depth[*reach.last().unwrap()];
        for _ in 0..4 {
            let far = *reach.last().unwrap();
            let again = self.bfs(far, member);
            let e = self.depth[*again.last().unwrap()];
            reach = again;
            if e <= ecc {
                break;
            }
            ecc = e;
        }
        let levels = self.depth[*reach.last().unwrap()];
        if levels < 2 {
            self.order.extend(nodes);
            return;
        }

        let mut level_size = vec![0usize; levels + 1];
        for &v in &reach {
            level_size[self.depth[v]] += 1;
        }
        let half = reach.len() / 2;
        let mut acc = 0;
        let mut mid = 1;
        for (l, &s) in level_size.iter().enumerate() {
            acc += s;
            if acc >= half {
                mid = l.clamp(1, levels - 1);
                break;
            }
        }

        let (mut lower, mut upper, mut sep) = (Vec::new(), Vec::new(), Vec::new());
        for &v in &reach {
            let d = self.depth[v];
            if d < mid {
                lower.push(v);
            } else if d > mid {
                upper.push(v);
            } else {
                let touches_upper = self
                    .graph
                    .neighbours(v)
                    .iter()
                    .any(|&w| self.stamp[w] == member && self.depth[w] == mid + 1);
                if touches_upper {
                    sep.push(v);
                } else {
                    lower.push(v);
                }
            }
        }
        self.dissect(lower);
        self.dissect(upper);
        self.order.extend(sep);
    }
}
