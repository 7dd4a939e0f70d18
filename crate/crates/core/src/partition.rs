//! Mesh partitioning, equal-sized overlapped submeshes, processing order and
//! degree-weighted stitching of per-submesh results.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::path::Path;

use nalgebra::Point3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{vertex_faces, EdgeSet, Mesh};

/// Slack allowed on top of `ceil(n / k)` for the largest part.
pub const BALANCE_TOLERANCE: f64 = 0.1;

/// Non-overlapping assignment of every vertex to one of `k` connected parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assignment: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Wraps an existing assignment, checking that every part id is below `k`
    /// and that no part is empty.
    pub fn from_assignment(assignment: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Partition("k must be at least 1".into()));
        }
        let mut sizes = vec![0usize; k];
        for (v, &p) in assignment.iter().enumerate() {
            if p >= k {
                return Err(Error::Partition(format!(
                    "vertex {v} assigned to part {p} >= k = {k}"
                )));
            }
            sizes[p] += 1;
        }
        if let Some(p) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::Partition(format!("part {p} is empty")));
        }
        Ok(Partition { assignment, k })
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    #[inline]
    pub fn part_of(&self, v: usize) -> usize {
        self.assignment[v]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &p in &self.assignment {
            sizes[p] += 1;
        }
        sizes
    }

    /// Vertices of each part in ascending order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (v, &p) in self.assignment.iter().enumerate() {
            out[p].push(v);
        }
        out
    }

    /// True when every part induces a connected subgraph.
    pub fn parts_connected(&self, edges: &EdgeSet) -> bool {
        self.members()
            .iter()
            .enumerate()
            .all(|(p, vs)| induced_connected(edges, vs, |v| self.assignment[v] == p))
    }

    /// Writes `vertex_id,part_id` rows.
    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path.as_ref())?;
        w.write_record(["vertex_id", "part_id"])?;
        for (v, p) in self.assignment.iter().enumerate() {
            w.write_record([v.to_string(), p.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(path.as_ref(), e))
    }

    /// Reads a CSV written by [`Partition::save_csv`]. Rows may come in any order
    /// but must cover vertex ids `0..n` exactly once.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = csv::Reader::from_path(path.as_ref())?;
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let field = |j: usize| -> Result<usize> {
                rec.get(j)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or(Error::Parse {
                        line: i + 2,
                        message: "expected two unsigned integers".into(),
                    })
            };
            rows.push((field(0)?, field(1)?));
        }
        let n = rows.len();
        let mut assignment = vec![usize::MAX; n];
        for (v, p) in rows {
            if v >= n || assignment[v] != usize::MAX {
                return Err(Error::Partition(format!(
                    "vertex id {v} duplicated or out of range"
                )));
            }
            assignment[v] = p;
        }
        let k = assignment.iter().max().map_or(0, |m| m + 1);
        Partition::from_assignment(assignment, k)
    }
}

fn induced_connected(edges: &EdgeSet, vs: &[usize], inside: impl Fn(usize) -> bool) -> bool {
    let Some(&start) = vs.first() else {
        return true;
    };
    let mut seen = std::collections::HashSet::with_capacity(vs.len());
    seen.insert(start);
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        for &w in edges.neighbors(v) {
            if inside(w) && seen.insert(w) {
                stack.push(w);
            }
        }
    }
    seen.len() == vs.len()
}

/// Hop distance from a set of sources, updating `dist` in place with the minimum.
fn bfs_min_update(edges: &EdgeSet, source: usize, dist: &mut [usize]) {
    let mut queue = VecDeque::new();
    dist[source] = 0;
    queue.push_back(source);
    while let Some(v) = queue.pop_front() {
        let d = dist[v] + 1;
        for &w in edges.neighbors(v) {
            if d < dist[w] {
                dist[w] = d;
                queue.push_back(w);
            }
        }
    }
}

/// Greedy balanced region growing from `k` farthest-point seeds.
///
/// Seeds are spread over connected components in proportion to their size.
/// The first seed of each component is drawn from `seed`; later ones are the
/// vertices farthest (in hops) from all previous seeds, ties to the smallest id.
/// Parts then grow breadth-first, smallest part first, up to
/// `ceil(n/k)·(1 + BALANCE_TOLERANCE)` vertices, followed by a boundary
/// rebalancing pass that never disconnects a part.
pub fn partition_mesh(mesh: &Mesh, edges: &EdgeSet, k: usize, seed: u64) -> Result<Partition> {
    let n = mesh.vertex_count();
    if k == 0 || 4 * k > n {
        return Err(Error::InvalidArgument(format!(
            "part count k = {k} must satisfy 1 <= k <= n/4 (n = {n})"
        )));
    }
    let (comp, ncomp) = edges.components();
    if ncomp > k {
        return Err(Error::Partition(format!(
            "mesh has {ncomp} connected components, more than k = {k} parts"
        )));
    }
    let mut comp_size = vec![0usize; ncomp];
    for &c in &comp {
        comp_size[c] += 1;
    }
    // Largest-remainder apportionment with at least one seed per component.
    let mut quota: Vec<usize> = comp_size.iter().map(|&s| (s * k / n).max(1)).collect();
    while quota.iter().sum::<usize>() > k {
        let c = (0..ncomp)
            .filter(|&c| quota[c] > 1)
            .max_by(|&a, &b| quota[a].cmp(&quota[b]).then(b.cmp(&a)))
            .expect("some component has more than one seed");
        quota[c] -= 1;
    }
    while quota.iter().sum::<usize>() < k {
        let c = (0..ncomp)
            .max_by(|&a, &b| {
                let ra = comp_size[a] as f64 / quota[a] as f64;
                let rb = comp_size[b] as f64 / quota[b] as f64;
                ra.total_cmp(&rb).then(b.cmp(&a))
            })
            .expect("at least one component");
        quota[c] += 1;
    }
    for c in 0..ncomp {
        if quota[c] > comp_size[c] {
            return Err(Error::Partition(format!(
                "k = {k} too large: component {c} has {} vertices for {} parts",
                comp_size[c], quota[c]
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seeds = Vec::with_capacity(k);
    let mut dist = vec![usize::MAX; n];
    for c in 0..ncomp {
        let verts: Vec<usize> = (0..n).filter(|&v| comp[v] == c).collect();
        let first = verts[rng.random_range(0..verts.len())];
        seeds.push(first);
        bfs_min_update(edges, first, &mut dist);
        for _ in 1..quota[c] {
            let next = verts
                .iter()
                .copied()
                .max_by(|&a, &b| dist[a].cmp(&dist[b]).then(b.cmp(&a)))
                .expect("component not empty");
            seeds.push(next);
            bfs_min_update(edges, next, &mut dist);
        }
    }

    let cap = ((n.div_ceil(k)) as f64 * (1.0 + BALANCE_TOLERANCE)).floor() as usize;
    let mut assignment = vec![usize::MAX; n];
    let mut sizes = vec![0usize; k];
    let mut frontier: Vec<VecDeque<usize>> = vec![VecDeque::new(); k];
    let mut heap = BinaryHeap::new();
    for (p, &s) in seeds.iter().enumerate() {
        assignment[s] = p;
        sizes[p] = 1;
        frontier[p].extend(edges.neighbors(s).iter().copied());
        heap.push(Reverse((1usize, p)));
    }
    while let Some(Reverse((_, p))) = heap.pop() {
        let mut grabbed = None;
        while let Some(v) = frontier[p].pop_front() {
            if assignment[v] == usize::MAX {
                grabbed = Some(v);
                break;
            }
        }
        let Some(v) = grabbed else { continue };
        assignment[v] = p;
        sizes[p] += 1;
        frontier[p].extend(
            edges
                .neighbors(v)
                .iter()
                .copied()
                .filter(|&w| assignment[w] == usize::MAX),
        );
        if sizes[p] < cap && !frontier[p].is_empty() {
            heap.push(Reverse((sizes[p], p)));
        }
    }

    // Vertices walled off by capped parts join their smallest neighbouring part.
    loop {
        let pending: Vec<usize> = (0..n).filter(|&v| assignment[v] == usize::MAX).collect();
        if pending.is_empty() {
            break;
        }
        let mut progressed = false;
        for v in pending {
            let best = edges
                .neighbors(v)
                .iter()
                .filter(|&&w| assignment[w] != usize::MAX)
                .map(|&w| assignment[w])
                .min_by_key(|&p| (sizes[p], p));
            if let Some(p) = best {
                assignment[v] = p;
                sizes[p] += 1;
                progressed = true;
            }
        }
        if !progressed {
            return Err(Error::Partition(
                "unreachable vertices left unassigned".into(),
            ));
        }
    }

    rebalance(edges, &mut assignment, &mut sizes, cap);
    let floor = ((n / k) as f64 * (1.0 - BALANCE_TOLERANCE)).ceil() as usize;
    fill_undersized(edges, &mut assignment, &mut sizes, floor);
    Partition::from_assignment(assignment, k)
}

/// Moves boundary vertices out of oversized parts into smaller neighbours
/// while keeping the donor part connected.
fn rebalance(edges: &EdgeSet, assignment: &mut [usize], sizes: &mut [usize], cap: usize) {
    let k = sizes.len();
    for _round in 0..64 {
        let over: Vec<usize> = (0..k).filter(|&p| sizes[p] > cap).collect();
        if over.is_empty() {
            return;
        }
        let mut moved_any = false;
        for p in over {
            let mut members: Vec<usize> = (0..assignment.len())
                .filter(|&v| assignment[v] == p)
                .collect();
            while sizes[p] > cap {
                let mut best: Option<(usize, usize)> = None;
                for &v in &members {
                    let target = edges
                        .neighbors(v)
                        .iter()
                        .map(|&w| assignment[w])
                        .filter(|&q| q != p && sizes[q] < cap)
                        .min_by_key(|&q| (sizes[q], q));
                    let Some(q) = target else { continue };
                    if best.is_some_and(|(_, bq)| (sizes[bq], bq) <= (sizes[q], q)) {
                        continue;
                    }
                    let rest: Vec<usize> = members.iter().copied().filter(|&u| u != v).collect();
                    let a = &*assignment;
                    if induced_connected(edges, &rest, |u| u != v && a[u] == p) {
                        best = Some((v, q));
                    }
                }
                let Some((v, q)) = best else { break };
                assignment[v] = q;
                sizes[p] -= 1;
                sizes[q] += 1;
                members.retain(|&u| u != v);
                moved_any = true;
            }
        }
        if !moved_any {
            return;
        }
    }
}

/// Pulls boundary vertices from larger neighbouring parts into parts below
/// `floor`, never disconnecting the donor.
fn fill_undersized(edges: &EdgeSet, assignment: &mut [usize], sizes: &mut [usize], floor: usize) {
    let k = sizes.len();
    for _round in 0..64 {
        let mut moved_any = false;
        for p in 0..k {
            while sizes[p] < floor {
                let mut candidates: Vec<(usize, usize)> = (0..assignment.len())
                    .filter(|&v| assignment[v] != p && sizes[assignment[v]] > sizes[p] + 1)
                    .filter(|&v| edges.neighbors(v).iter().any(|&w| assignment[w] == p))
                    .map(|v| (v, assignment[v]))
                    .collect();
                candidates.sort_by_key(|&(v, q)| (Reverse(sizes[q]), v));
                let mut moved = false;
                for (v, q) in candidates {
                    let rest: Vec<usize> = (0..assignment.len())
                        .filter(|&u| u != v && assignment[u] == q)
                        .collect();
                    let a = &*assignment;
                    if induced_connected(edges, &rest, |u| u != v && a[u] == q) {
                        assignment[v] = p;
                        sizes[q] -= 1;
                        sizes[p] += 1;
                        moved = true;
                        break;
                    }
                }
                if !moved {
                    break;
                }
                moved_any = true;
            }
        }
        if !moved_any {
            return;
        }
    }
}

/// Equal-sized block of the mesh with its own local vertex numbering.
///
/// Local order is reverse Cuthill–McKee over the induced subgraph, started
/// from a pseudo-peripheral vertex, which keeps the Laplacian banded and gives
/// similar index layouts across blocks of the same surface.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Submesh {
    pub id: usize,
    /// Part this block was grown from.
    pub part: usize,
    pub global_indices: Vec<usize>,
    pub local_faces: Vec<[usize; 3]>,
    /// Neighbours within the block, in local indices, ascending.
    pub local_neighbors: Vec<Vec<usize>>,
    pub local_degrees: Vec<usize>,
    /// `(global, local)` sorted by global id.
    lookup: Vec<(usize, usize)>,
}

impl Submesh {
    #[inline]
    pub fn len(&self) -> usize {
        self.global_indices.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.global_indices.is_empty()
    }

    pub fn local_index(&self, global: usize) -> Option<usize> {
        self.lookup
            .binary_search_by_key(&global, |&(g, _)| g)
            .ok()
            .map(|i| self.lookup[i].1)
    }

    pub fn contains(&self, global: usize) -> bool {
        self.local_index(global).is_some()
    }

    /// Gathers this block's vertex positions in local order.
    pub fn gather(&self, vertices: &[Point3<f64>]) -> Vec<Point3<f64>> {
        self.global_indices.iter().map(|&g| vertices[g]).collect()
    }

    /// Builds a block from an arbitrary member set.
    pub fn from_members(
        id: usize,
        part: usize,
        members: &[usize],
        edges: &EdgeSet,
        vertex_faces: &[Vec<usize>],
        mesh: &Mesh,
    ) -> Self {
        let mut sorted = members.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let pos = |g: usize| sorted.binary_search(&g).ok();
        // Adjacency in "sorted position" space first.
        let adj: Vec<Vec<usize>> = sorted
            .iter()
            .map(|&g| edges.neighbors(g).iter().filter_map(|&w| pos(w)).collect())
            .collect();
        let order = reverse_cuthill_mckee(&adj);
        let mut rank = vec![0usize; sorted.len()];
        for (local, &s) in order.iter().enumerate() {
            rank[s] = local;
        }
        let global_indices: Vec<usize> = order.iter().map(|&s| sorted[s]).collect();
        let local_neighbors: Vec<Vec<usize>> = order
            .iter()
            .map(|&s| {
                let mut ns: Vec<usize> = adj[s].iter().map(|&t| rank[t]).collect();
                ns.sort_unstable();
                ns
            })
            .collect();
        let local_degrees = local_neighbors.iter().map(Vec::len).collect();
        let mut faces: Vec<usize> = sorted
            .iter()
            .flat_map(|&g| vertex_faces[g].iter().copied())
            .collect();
        faces.sort_unstable();
        faces.dedup();
        let local_faces = faces
            .into_iter()
            .filter_map(|fi| {
                let f = mesh.faces()[fi];
                Some([rank[pos(f[0])?], rank[pos(f[1])?], rank[pos(f[2])?]])
            })
            .collect();
        let lookup = sorted
            .iter()
            .enumerate()
            .map(|(s, &g)| (g, rank[s]))
            .collect();
        Submesh {
            id,
            part,
            global_indices,
            local_faces,
            local_neighbors,
            local_degrees,
            lookup,
        }
    }
}

/// Reverse Cuthill–McKee ordering of a (possibly disconnected) graph.
fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let start = (0..n)
            .filter(|&v| !placed[v])
            .min_by_key(|&v| (adj[v].len(), v))
            .expect("unplaced vertex exists");
        let start = pseudo_peripheral(adj, start, &placed);
        let begin = order.len();
        placed[start] = true;
        order.push(start);
        let mut head = begin;
        while head < order.len() {
            let v = order[head];
            head += 1;
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !placed[w]).collect();
            next.sort_unstable_by_key(|&w| (adj[w].len(), w));
            for w in next {
                placed[w] = true;
                order.push(w);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(adj: &[Vec<usize>], start: usize, blocked: &[bool]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; adj.len()];
    seen[start] = true;
    let mut levels = vec![vec![start]];
    loop {
        let mut next = Vec::new();
        for &v in levels.last().expect("nonempty") {
            for &w in &adj[v] {
                if !seen[w] && !blocked[w] {
                    seen[w] = true;
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            return levels;
        }
        levels.push(next);
    }
}

fn pseudo_peripheral(adj: &[Vec<usize>], mut start: usize, blocked: &[bool]) -> usize {
    let mut ecc = bfs_levels(adj, start, blocked).len();
    for _ in 0..8 {
        let levels = bfs_levels(adj, start, blocked);
        let cand = *levels
            .last()
            .expect("nonempty")
            .iter()
            .min_by_key(|&&v| (adj[v].len(), v))
            .expect("nonempty level");
        let e = bfs_levels(adj, cand, blocked).len();
        if e > ecc {
            ecc = e;
            start = cand;
        } else {
            break;
        }
    }
    start
}

/// Target block size for a growth factor: `floor(growth · max part size)`,
/// capped at the vertex count.
pub fn overlap_size(partition: &Partition, growth: f64) -> Result<usize> {
    if !(growth >= 1.0) || !growth.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "growth must be >= 1.0, got {growth}"
        )));
    }
    let max = partition.sizes().into_iter().max().unwrap_or(0);
    let n = partition.assignment().len();
    Ok(((growth * max as f64 + 1e-9).floor() as usize).min(n))
}

/// Grows every part by breadth-first rings into neighbouring parts until it
/// holds exactly `n_d = floor(growth · max part size)` vertices.
pub fn expand_overlaps(
    mesh: &Mesh,
    edges: &EdgeSet,
    partition: &Partition,
    growth: f64,
) -> Result<Vec<Submesh>> {
    let n_d = overlap_size(partition, growth)?;
    expand_to_size(mesh, edges, partition, n_d)
}

/// [`expand_overlaps`] with an explicit block size.
///
/// The last ring is trimmed by ascending global id. A part whose component
/// runs out of vertices is padded with the lowest-id vertices outside it,
/// growing rings from those in turn.
pub fn expand_to_size(
    mesh: &Mesh,
    edges: &EdgeSet,
    partition: &Partition,
    n_d: usize,
) -> Result<Vec<Submesh>> {
    let n = mesh.vertex_count();
    if n_d > n {
        return Err(Error::InvalidArgument(format!(
            "block size {n_d} exceeds vertex count {n}"
        )));
    }
    let members = partition.members();
    if let Some(p) = members.iter().position(|m| m.len() > n_d) {
        return Err(Error::InvalidArgument(format!(
            "block size {n_d} smaller than part {p} ({} vertices)",
            members[p].len()
        )));
    }
    let vf = vertex_faces(mesh);
    let blocks = members
        .par_iter()
        .enumerate()
        .map(|(p, part)| {
            let mut inside = vec![false; n];
            let mut chosen = part.clone();
            for &v in part {
                inside[v] = true;
            }
            let mut ring = part.clone();
            let mut next_pad = 0usize;
            while chosen.len() < n_d {
                let mut next: Vec<usize> = ring
                    .iter()
                    .flat_map(|&v| edges.neighbors(v).iter().copied())
                    .filter(|&w| !inside[w])
                    .collect();
                next.sort_unstable();
                next.dedup();
                if next.is_empty() {
                    while inside[next_pad] {
                        next_pad += 1;
                    }
                    next.push(next_pad);
                }
                next.truncate(n_d - chosen.len());
                for &w in &next {
                    inside[w] = true;
                }
                chosen.extend_from_slice(&next);
                ring = next;
            }
            Submesh::from_members(p, p, &chosen, edges, &vf, mesh)
        })
        .collect();
    Ok(blocks)
}

/// One block per part with no overlap (sizes differ between blocks).
pub fn part_submeshes(mesh: &Mesh, edges: &EdgeSet, partition: &Partition) -> Vec<Submesh> {
    let vf = vertex_faces(mesh);
    partition
        .members()
        .par_iter()
        .enumerate()
        .map(|(p, part)| Submesh::from_members(p, p, part, edges, &vf, mesh))
        .collect()
}

/// Processing order over blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubmeshOrder {
    pub sequence: Vec<usize>,
}

/// Block adjacency (shared vertices), ascending neighbour ids.
pub fn submesh_adjacency(submeshes: &[Submesh]) -> Vec<Vec<usize>> {
    let n = submeshes
        .iter()
        .flat_map(|s| s.global_indices.iter().copied())
        .max()
        .map_or(0, |m| m + 1);
    let mut owners: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, s) in submeshes.iter().enumerate() {
        for &g in &s.global_indices {
            owners[g].push(i);
        }
    }
    let mut adj = vec![Vec::new(); submeshes.len()];
    for os in &owners {
        for &a in os {
            for &b in os {
                if a != b {
                    adj[a].push(b);
                }
            }
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    adj
}

/// Seeded start block followed by breadth-first traversal of block adjacency.
pub fn order_submeshes(submeshes: &[Submesh], seed: u64) -> Result<SubmeshOrder> {
    if submeshes.is_empty() {
        return Err(Error::InvalidArgument("no submeshes to order".into()));
    }
    let start = ChaCha8Rng::seed_from_u64(seed).random_range(0..submeshes.len());
    order_submeshes_from(submeshes, start)
}

/// Breadth-first order from a given start block; neighbours are visited by
/// ascending id, and further components start from their smallest id.
pub fn order_submeshes_from(submeshes: &[Submesh], start: usize) -> Result<SubmeshOrder> {
    if start >= submeshes.len() {
        return Err(Error::InvalidArgument(format!(
            "start block {start} out of range ({} blocks)",
            submeshes.len()
        )));
    }
    let adj = submesh_adjacency(submeshes);
    let m = submeshes.len();
    let mut seen = vec![false; m];
    let mut sequence = Vec::with_capacity(m);
    let mut root = Some(start);
    while let Some(r) = root {
        seen[r] = true;
        let mut queue = VecDeque::from([r]);
        while let Some(b) = queue.pop_front() {
            sequence.push(b);
            for &c in &adj[b] {
                if !seen[c] {
                    seen[c] = true;
                    queue.push_back(c);
                }
            }
        }
        root = (0..m).find(|&b| !seen[b]);
    }
    Ok(SubmeshOrder { sequence })
}

/// How overlapping copies of a vertex are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AverageMode {
    Simple,
    #[default]
    Weighted,
}

/// Stitches per-block reconstructions into one vertex array.
///
/// In weighted mode every copy is weighted by the vertex degree inside that
/// block; in simple mode all copies count equally. A vertex whose copies all
/// have degree zero falls back to the simple mean.
pub fn reconstruct_weighted<'a, I>(
    results: I,
    n: usize,
    mode: AverageMode,
) -> Result<Vec<Point3<f64>>>
where
    I: IntoIterator<Item = (&'a Submesh, &'a [Point3<f64>])>,
{
    let mut sum = vec![nalgebra::Vector3::zeros(); n];
    let mut weight = vec![0.0f64; n];
    let mut plain = vec![nalgebra::Vector3::zeros(); n];
    let mut count = vec![0usize; n];
    for (sub, local) in results {
        if local.len() != sub.len() {
            return Err(Error::Dimension(format!(
                "block {} has {} vertices but {} positions were given",
                sub.id,
                sub.len(),
                local.len()
            )));
        }
        for (li, (&g, p)) in sub.global_indices.iter().zip(local).enumerate() {
            if g >= n {
                return Err(Error::Dimension(format!("global index {g} >= n = {n}")));
            }
            let w = match mode {
                AverageMode::Simple => 1.0,
                AverageMode::Weighted => sub.local_degrees[li] as f64,
            };
            sum[g] += p.coords * w;
            weight[g] += w;
            plain[g] += p.coords;
            count[g] += 1;
        }
    }
    let uncovered: Vec<usize> = (0..n).filter(|&i| count[i] == 0).collect();
    if !uncovered.is_empty() {
        return Err(Error::Uncovered(uncovered));
    }
    Ok((0..n)
        .map(|i| {
            if weight[i] > 0.0 {
                Point3::from(sum[i] / weight[i])
            } else {
                Point3::from(plain[i] / count[i] as f64)
            }
        })
        .collect())
}

/// Vertices that belong to two or more blocks.
pub fn overlap_boundary(submeshes: &[Submesh], n: usize) -> Vec<bool> {
    let mut count = vec![0usize; n];
    for s in submeshes {
        for &g in &s.global_indices {
            count[g] += 1;
        }
    }
    count.into_iter().map(|c| c >= 2).collect()
}

/// Vertices with at least one neighbour in a different part.
pub fn partition_boundary(edges: &EdgeSet, partition: &Partition) -> Vec<bool> {
    (0..edges.vertex_count())
        .map(|v| {
            let p = partition.part_of(v);
            edges
                .neighbors(v)
                .iter()
                .any(|&w| partition.part_of(w) != p)
        })
        .collect()
}
