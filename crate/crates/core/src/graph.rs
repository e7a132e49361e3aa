//! Degree-ordered data graph with sorted adjacency lists.
//!
//! Internal ids are assigned so that `u < v` implies
//! `degree(u) <= degree(v)`; ties keep the original-id order. Original ids
//! are retained for reporting.
//!
//! # Snapshot format
//!
//! All integers little-endian.
//!
//! | field         | type             | notes                              |
//! |---------------|------------------|------------------------------------|
//! | magic         | 8 bytes          | `PMGRAPH\0`                        |
//! | version       | u32              | `1`                                |
//! | flags         | u32              | bit 0: labels present              |
//! | vertex count  | u64              | `n`                                |
//! | entries       | u64              | `m = 2 * edges`                    |
//! | offsets       | `(n + 1) x u64`  | adjacency of `v` is `offsets[v]..offsets[v+1]` |
//! | neighbors     | `m x u32`        | internal ids, sorted per vertex    |
//! | original ids  | `n x u64`        |                                    |
//! | labels        | `n x u32`        | only if flag bit 0; `u32::MAX` = none |

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::GraphError;
use crate::pattern::Label;

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"PMGRAPH\0";
pub const SNAPSHOT_VERSION: u32 = 1;
const NO_LABEL: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataGraph {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    labels: Option<Vec<Option<Label>>>,
    original: Vec<u64>,
    index: HashMap<u64, u32>,
}

impl DataGraph {
    /// Builds a graph from `(u, v)` pairs with original ids. Self-loops are
    /// dropped and duplicates collapsed. Vertices appear only through edges;
    /// use [`DataGraph::from_parts`] to keep isolated vertices.
    pub fn from_edges<I>(edges: I, labels: Option<&HashMap<u64, Label>>) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (u64, u64)>,
    {
        Self::from_parts(Vec::new(), edges, labels)
    }

    /// Like [`DataGraph::from_edges`], additionally declaring `isolated`
    /// vertices that may have no edge.
    pub fn from_parts<I>(
        isolated: Vec<u64>,
        edges: I,
        labels: Option<&HashMap<u64, Label>>,
    ) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (u64, u64)>,
    {
        let edges: Vec<(u64, u64)> = edges.into_iter().filter(|(u, v)| u != v).collect();
        let mut original: Vec<u64> = edges
            .iter()
            .flat_map(|&(u, v)| [u, v])
            .chain(isolated)
            .collect();
        original.sort_unstable();
        original.dedup();
        if original.len() > u32::MAX as usize {
            return Err(GraphError::TooLarge);
        }
        let index: HashMap<u64, u32> = original
            .iter()
            .enumerate()
            .map(|(i, &o)| (o, i as u32))
            .collect();
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); original.len()];
        for (u, v) in edges {
            let (a, b) = (index[&u], index[&v]);
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }
        let labels = labels.map(|l| original.iter().map(|o| l.get(o).copied()).collect());
        Ok(Self::from_adjacency(original, adj, labels).reorder_by_degree())
    }

    /// Assembles a graph without reordering; lists are sorted and deduplicated.
    fn from_adjacency(
        original: Vec<u64>,
        mut adj: Vec<Vec<u32>>,
        labels: Option<Vec<Option<Label>>>,
    ) -> Self {
        let mut offsets = Vec::with_capacity(adj.len() + 1);
        offsets.push(0);
        let mut neighbors = Vec::new();
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
            neighbors.extend_from_slice(list);
            offsets.push(neighbors.len());
        }
        let index = original
            .iter()
            .enumerate()
            .map(|(i, &o)| (o, i as u32))
            .collect();
        Self {
            offsets,
            neighbors,
            labels,
            original,
            index,
        }
    }

    /// Renumbers vertices by (degree, original id) ascending.
    pub fn reorder_by_degree(&self) -> DataGraph {
        let n = self.vertex_count();
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.sort_by_key(|&v| (self.degree(v), self.original[v as usize]));
        let mut rank = vec![0u32; n];
        for (new, &old) in order.iter().enumerate() {
            rank[old as usize] = new as u32;
        }
        let adj = order
            .iter()
            .map(|&old| self.neighbors(old).iter().map(|&w| rank[w as usize]).collect())
            .collect();
        let original = order.iter().map(|&old| self.original[old as usize]).collect();
        let labels = self
            .labels
            .as_ref()
            .map(|l| order.iter().map(|&old| l[old as usize]).collect());
        Self::from_adjacency(original, adj, labels)
    }

    /// Reads a whitespace-separated edge list (`#` starts a comment; a line
    /// with a single id declares a vertex) and an optional `v label` file.
    pub fn load_edge_list(edge_path: &Path, label_path: Option<&Path>) -> Result<Self, GraphError> {
        let file = File::open(edge_path).map_err(|source| GraphError::Io {
            path: edge_path.to_path_buf(),
            source,
        })?;
        let (isolated, edges) = parse_edges(BufReader::new(file), edge_path)?;
        let labels = match label_path {
            None => None,
            Some(lp) => {
                let file = File::open(lp).map_err(|source| GraphError::Io {
                    path: lp.to_path_buf(),
                    source,
                })?;
                let labels = parse_labels(BufReader::new(file), lp)?;
                let known: std::collections::HashSet<u64> = edges
                    .iter()
                    .filter(|(u, v)| u != v)
                    .flat_map(|&(u, v)| [u, v])
                    .chain(isolated.iter().copied())
                    .collect();
                if let Some(&(line, vertex, _)) = labels.iter().find(|(_, v, _)| !known.contains(v)) {
                    return Err(GraphError::UnknownLabeledVertex {
                        path: lp.to_path_buf(),
                        line,
                        vertex,
                    });
                }
                Some(labels.into_iter().map(|(_, v, l)| (v, l)).collect::<HashMap<_, _>>())
            }
        };
        Self::from_parts(isolated, edges, labels.as_ref())
    }

    /// Loads a snapshot if the file starts with the snapshot magic, an edge
    /// list otherwise. Labels are only read for edge lists.
    pub fn load(path: &Path, label_path: Option<&Path>) -> Result<Self, GraphError> {
        let io_err = |source| GraphError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut head = [0u8; 8];
        let mut file = File::open(path).map_err(io_err)?;
        let n = read_up_to(&mut file, &mut head).map_err(io_err)?;
        if n == 8 && &head == SNAPSHOT_MAGIC {
            if label_path.is_some() {
                return Err(GraphError::Snapshot(
                    "labels are stored inside the snapshot; do not pass a label file".into(),
                ));
            }
            Self::read_snapshot(BufReader::new(File::open(path).map_err(io_err)?))
        } else {
            Self::load_edge_list(path, label_path)
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.original.len()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.neighbors[self.offsets[v as usize]..self.offsets[v as usize + 1]]
    }

    pub fn degree(&self, v: u32) -> usize {
        self.offsets[v as usize + 1] - self.offsets[v as usize]
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        let (a, b) = if self.degree(u) <= self.degree(v) { (u, v) } else { (v, u) };
        self.neighbors(a).binary_search(&b).is_ok()
    }

    pub fn is_labeled(&self) -> bool {
        self.labels.is_some()
    }

    pub fn label(&self, v: u32) -> Option<Label> {
        self.labels.as_ref().and_then(|l| l[v as usize])
    }

    pub fn original_id(&self, v: u32) -> u64 {
        self.original[v as usize]
    }

    pub fn internal_id(&self, original: u64) -> Option<u32> {
        self.index.get(&original).copied()
    }

    pub fn vertices(&self) -> impl DoubleEndedIterator<Item = u32> + ExactSizeIterator {
        0..self.vertex_count() as u32
    }

    pub fn write_snapshot<W: Write>(&self, w: W) -> io::Result<()> {
        let mut w = BufWriter::new(w);
        w.write_all(SNAPSHOT_MAGIC)?;
        w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
        w.write_all(&u32::from(self.labels.is_some()).to_le_bytes())?;
        w.write_all(&(self.vertex_count() as u64).to_le_bytes())?;
        w.write_all(&(self.neighbors.len() as u64).to_le_bytes())?;
        for &o in &self.offsets {
            w.write_all(&(o as u64).to_le_bytes())?;
        }
        for &x in &self.neighbors {
            w.write_all(&x.to_le_bytes())?;
        }
        for &o in &self.original {
            w.write_all(&o.to_le_bytes())?;
        }
        if let Some(labels) = &self.labels {
            for l in labels {
                w.write_all(&l.unwrap_or(NO_LABEL).to_le_bytes())?;
            }
        }
        w.flush()
    }

    pub fn read_snapshot<R: Read>(mut r: R) -> Result<Self, GraphError> {
        let bad = |m: &str| GraphError::Snapshot(m.to_string());
        let io = |e: io::Error| GraphError::Snapshot(e.to_string());
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != SNAPSHOT_MAGIC {
            return Err(bad("wrong magic"));
        }
        let version = read_u32(&mut r).map_err(io)?;
        if version != SNAPSHOT_VERSION {
            return Err(GraphError::Snapshot(format!("unsupported version {version}")));
        }
        let flags = read_u32(&mut r).map_err(io)?;
        let n = read_u64(&mut r).map_err(io)? as usize;
        let m = read_u64(&mut r).map_err(io)? as usize;
        if n > u32::MAX as usize {
            return Err(GraphError::TooLarge);
        }
        let offsets = (0..=n)
            .map(|_| read_u64(&mut r).map(|x| x as usize))
            .collect::<io::Result<Vec<_>>>()
            .map_err(io)?;
        if offsets[0] != 0 || offsets[n] != m || offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(bad("inconsistent offsets"));
        }
        let neighbors = (0..m)
            .map(|_| read_u32(&mut r))
            .collect::<io::Result<Vec<_>>>()
            .map_err(io)?;
        let original = (0..n)
            .map(|_| read_u64(&mut r))
            .collect::<io::Result<Vec<_>>>()
            .map_err(io)?;
        let labels = if flags & 1 != 0 {
            Some(
                (0..n)
                    .map(|_| read_u32(&mut r).map(|l| (l != NO_LABEL).then_some(l)))
                    .collect::<io::Result<Vec<_>>>()
                    .map_err(io)?,
            )
        } else {
            None
        };
        for v in 0..n {
            let list = &neighbors[offsets[v]..offsets[v + 1]];
            if list.windows(2).any(|w| w[0] >= w[1]) || list.iter().any(|&x| x as usize >= n) {
                return Err(bad("adjacency lists must be sorted and in range"));
            }
        }
        let index = original
            .iter()
            .enumerate()
            .map(|(i, &o)| (o, i as u32))
            .collect();
        Ok(Self {
            offsets,
            neighbors,
            labels,
            original,
            index,
        })
    }

    pub fn save_snapshot(&self, path: &Path) -> Result<(), GraphError> {
        let file = File::create(path).map_err(|source| GraphError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.write_snapshot(file).map_err(|source| GraphError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

fn read_up_to(r: &mut impl Read, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..])? {
            0 => break,
            k => filled += k,
        }
    }
    Ok(filled)
}

fn read_u32(r: &mut impl Read) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

type ParsedEdges = (Vec<u64>, Vec<(u64, u64)>);

pub(crate) fn parse_edges<R: BufRead>(reader: R, path: &Path) -> Result<ParsedEdges, GraphError> {
    let mut edges = Vec::new();
    let mut isolated = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| GraphError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let body = line.split('#').next().unwrap_or("");
        let mut toks = body.split_whitespace();
        let Some(first) = toks.next() else { continue };
        let parse = |t: &str| {
            t.parse::<u64>().map_err(|_| GraphError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: format!("expected an integer vertex id, found {t:?}"),
            })
        };
        let u = parse(first)?;
        match toks.next() {
            None => isolated.push(u),
            Some(t) => edges.push((u, parse(t)?)),
        }
    }
    Ok((isolated, edges))
}

fn parse_labels<R: BufRead>(reader: R, path: &Path) -> Result<Vec<(usize, u64, Label)>, GraphError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| GraphError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let body = line.split('#').next().unwrap_or("");
        let toks: Vec<&str> = body.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        let err = |msg: String| GraphError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg,
        };
        if toks.len() != 2 {
            return Err(err("expected `vertex label`".into()));
        }
        let v = toks[0]
            .parse::<u64>()
            .map_err(|_| err(format!("bad vertex id {:?}", toks[0])))?;
        let l = toks[1]
            .parse::<Label>()
            .ok()
            .filter(|&l| l != NO_LABEL)
            .ok_or_else(|| err(format!("bad label {:?}", toks[1])))?;
        out.push((i + 1, v, l));
    }
    Ok(out)
}
