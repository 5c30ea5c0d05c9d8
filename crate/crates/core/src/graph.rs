//! Channel-junction graph specifications: parsing, validation, the
//! channel/junction decomposition, and assembly of the lengthened matrix
//! `A(n)`.
//!
//! A spec names its junction vertices explicitly; channels are first-class
//! edges between junction vertices carrying `(e, alpha, beta)`. Weights are
//! kept as decimal strings so they can be materialized exactly at any working
//! precision.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bignum::BigComplex;
use crate::{Error, Result};

/// Complex parameter held as a pair of decimal strings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CxParam {
    pub re: String,
    pub im: String,
}

impl CxParam {
    pub fn new(re: &str, im: &str) -> Self {
        CxParam {
            re: re.to_string(),
            im: im.to_string(),
        }
    }

    pub fn from_f64s(re: f64, im: f64) -> Self {
        CxParam {
            re: format!("{re}"),
            im: format!("{im}"),
        }
    }

    pub fn to_big(&self, prec: u32) -> Result<BigComplex> {
        BigComplex::parse_parts(&self.re, &self.im, prec)
    }

    pub fn to_c64(&self) -> Complex64 {
        self.to_big(53)
            .map(|b| b.to_c64())
            .unwrap_or(Complex64::new(f64::NAN, f64::NAN))
    }

    pub fn is_zero(&self) -> bool {
        self.to_c64() == Complex64::new(0.0, 0.0)
    }
}

impl Serialize for CxParam {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        (&self.re, &self.im).serialize(s)
    }
}

impl<'de> Deserialize<'de> for CxParam {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Part {
            S(String),
            N(f64),
        }
        let (re, im) = <(Part, Part)>::deserialize(d)?;
        let conv = |p: Part| match p {
            Part::S(s) => s,
            Part::N(x) => format!("{x}"),
        };
        let out = CxParam {
            re: conv(re),
            im: conv(im),
        };
        // Reject garbage early so errors point at the offending literal.
        out.to_big(53)
            .map_err(|e| D::Error::custom(format!("{e}")))?;
        Ok(out)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JunctionDecl {
    pub id: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JunctionEdge {
    pub from: String,
    pub to: String,
    pub weight: CxParam,
}

/// One channel: a directed path of `e` points (before lengthening) from
/// junction vertex `from` to junction vertex `to`, uniform diagonal `alpha`,
/// uniform edge weight `beta != 0`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub from: String,
    pub to: String,
    pub e: u32,
    pub alpha: CxParam,
    pub beta: CxParam,
}

/// Validated channel-junction graph.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphSpec {
    pub junctions: Vec<JunctionDecl>,
    #[serde(default)]
    pub junction_edges: Vec<JunctionEdge>,
    pub channels: Vec<ChannelSpec>,
}

impl GraphSpec {
    pub fn junction_index(&self, id: &str) -> Option<usize> {
        self.junctions.iter().position(|j| j.id == id)
    }

    pub fn num_junction_vertices(&self) -> usize {
        self.junctions.len()
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    /// Dimension of `A(n)`: lengthened channel sizes plus junction vertices.
    pub fn dimension(&self, n: u32) -> usize {
        let ch: usize = self
            .channels
            .iter()
            .map(|c| (c.e as usize) * (n as usize))
            .sum();
        ch + self.junctions.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.junctions.is_empty() {
            return Err(Error::parse("graph has no junction vertices"));
        }
        if self.channels.is_empty() {
            return Err(Error::parse("graph has no channels"));
        }
        let mut seen = BTreeSet::new();
        for j in &self.junctions {
            if j.id.is_empty() {
                return Err(Error::parse("empty junction id"));
            }
            if !seen.insert(&j.id) {
                return Err(Error::parse(format!("duplicate junction id {:?}", j.id)));
            }
        }
        let mut edge_seen = BTreeSet::new();
        for e in &self.junction_edges {
            for id in [&e.from, &e.to] {
                if self.junction_index(id).is_none() {
                    return Err(Error::parse(format!(
                        "junction edge {:?} -> {:?} references unknown vertex {:?}",
                        e.from, e.to, id
                    )));
                }
            }
            if !edge_seen.insert((&e.from, &e.to)) {
                return Err(Error::parse(format!(
                    "duplicate junction edge {:?} -> {:?}",
                    e.from, e.to
                )));
            }
        }
        for (r, c) in self.channels.iter().enumerate() {
            if c.e < 1 {
                return Err(Error::parse(format!(
                    "channel {r} ({:?} -> {:?}): base length must be >= 1",
                    c.from, c.to
                )));
            }
            if c.beta.is_zero() {
                return Err(Error::parse(format!(
                    "channel {r} ({:?} -> {:?}): zero channel weight",
                    c.from, c.to
                )));
            }
            for id in [&c.from, &c.to] {
                if self.junction_index(id).is_none() {
                    return Err(Error::parse(format!(
                        "channel {r}: dangling endpoint {id:?}"
                    )));
                }
            }
        }
        self.check_irreducible()?;
        Ok(())
    }

    /// Strong connectivity of the collapsed graph (junction vertices plus one
    /// node per channel).
    fn check_irreducible(&self) -> Result<()> {
        let nj = self.junctions.len();
        let n = nj + self.channels.len();
        let mut adj = vec![Vec::new(); n];
        for e in &self.junction_edges {
            if e.from != e.to && !e.weight.is_zero() {
                let (a, b) = (
                    self.junction_index(&e.from).unwrap(),
                    self.junction_index(&e.to).unwrap(),
                );
                adj[a].push(b);
            }
        }
        for (r, c) in self.channels.iter().enumerate() {
            let (a, b) = (
                self.junction_index(&c.from).unwrap(),
                self.junction_index(&c.to).unwrap(),
            );
            adj[a].push(nj + r);
            adj[nj + r].push(b);
        }
        let reach = |adj: &Vec<Vec<usize>>, start: usize| -> Vec<bool> {
            let mut seen = vec![false; adj.len()];
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            seen
        };
        let fwd = reach(&adj, 0);
        let mut radj = vec![Vec::new(); n];
        for (v, outs) in adj.iter().enumerate() {
            for &w in outs {
                radj[w].push(v);
            }
        }
        let bwd = reach(&radj, 0);
        let mut missing = Vec::new();
        for v in 0..n {
            if !(fwd[v] && bwd[v]) {
                missing.push(if v < nj {
                    self.junctions[v].id.clone()
                } else {
                    format!("channel {}", v - nj)
                });
            }
        }
        if !missing.is_empty() {
            return Err(Error::parse(format!(
                "graph is not irreducible; not strongly connected through: {}",
                missing.join(", ")
            )));
        }
        Ok(())
    }
}

/// Parse and validate a graph-spec JSON document.
pub fn parse_spec(text: &str) -> Result<GraphSpec> {
    let spec: GraphSpec =
        serde_json::from_str(text).map_err(|e| Error::parse(format!("spec JSON: {e}")))?;
    spec.validate()?;
    Ok(spec)
}

/// Channel with endpoints resolved to junction indices.
#[derive(Clone, Debug)]
pub struct ResolvedChannel {
    pub from: usize,
    pub to: usize,
    pub e: u32,
    pub alpha: CxParam,
    pub beta: CxParam,
}

/// The channel/junction decomposition plus the collapsed graph.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub junction_ids: Vec<String>,
    /// Nonzero junction weights by index pair (diagonal entries included).
    pub junction_weights: BTreeMap<(usize, usize), CxParam>,
    pub channels: Vec<ResolvedChannel>,
    /// Partition of junction vertex indices into undirected-connectivity
    /// blocks, each sorted, blocks ordered by smallest member.
    pub junction_blocks: Vec<Vec<usize>>,
    /// Collapsed graph edges. Nodes `0..nj` are junction vertices, node
    /// `nj + r` is channel `r` collapsed to a point.
    pub collapsed_edges: Vec<(usize, usize)>,
}

impl Decomposition {
    pub fn num_junction_vertices(&self) -> usize {
        self.junction_ids.len()
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }
}

pub fn decompose(spec: &GraphSpec) -> Result<Decomposition> {
    spec.validate()?;
    let nj = spec.junctions.len();
    let junction_ids: Vec<String> = spec.junctions.iter().map(|j| j.id.clone()).collect();

    let mut junction_weights = BTreeMap::new();
    for e in &spec.junction_edges {
        if e.weight.is_zero() {
            continue; // a zero entry is no edge at all
        }
        let a = spec.junction_index(&e.from).unwrap();
        let b = spec.junction_index(&e.to).unwrap();
        junction_weights.insert((a, b), e.weight.clone());
    }

    // Undirected connectivity over nonzero off-diagonal junction edges.
    let mut parent: Vec<usize> = (0..nj).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        let mut i = i;
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let keys: Vec<(usize, usize)> = junction_weights.keys().cloned().collect();
    for (a, b) in keys {
        if a != b {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
            }
        }
    }
    let mut blocks: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for v in 0..nj {
        let r = find(&mut parent, v);
        blocks.entry(r).or_default().push(v);
    }
    let mut junction_blocks: Vec<Vec<usize>> = blocks.into_values().collect();
    junction_blocks.sort_by_key(|b| b[0]);

    let channels: Vec<ResolvedChannel> = spec
        .channels
        .iter()
        .map(|c| ResolvedChannel {
            from: spec.junction_index(&c.from).unwrap(),
            to: spec.junction_index(&c.to).unwrap(),
            e: c.e,
            alpha: c.alpha.clone(),
            beta: c.beta.clone(),
        })
        .collect();

    let mut collapsed_edges = Vec::new();
    for (&(a, b), _) in junction_weights.iter() {
        if a != b {
            collapsed_edges.push((a, b));
        }
    }
    for (r, c) in channels.iter().enumerate() {
        collapsed_edges.push((c.from, nj + r));
        collapsed_edges.push((nj + r, c.to));
    }

    Ok(Decomposition {
        junction_ids,
        junction_weights,
        channels,
        junction_blocks,
        collapsed_edges,
    })
}

/// Row index bookkeeping for the assembled matrix.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum VertexKey {
    /// `pos` runs over `0..n*e` inside lengthened channel `channel`.
    Channel { channel: usize, pos: usize },
    Junction(usize),
}

/// Sparse `A(n)` with channel blocks first (in spec order) and the junction
/// block last.
#[derive(Clone, Debug)]
pub struct AssembledMatrix {
    pub dim: usize,
    pub n: u32,
    pub prec: u32,
    pub entries: BTreeMap<(usize, usize), BigComplex>,
    channel_bases: Vec<usize>,
    channel_lens: Vec<usize>,
    junction_base: usize,
}

pub const DEFAULT_DIMENSION_CAP: usize = 1_000_000;

impl AssembledMatrix {
    pub fn row_of(&self, key: &VertexKey) -> Option<usize> {
        match *key {
            VertexKey::Channel { channel, pos } => {
                if channel < self.channel_bases.len() && pos < self.channel_lens[channel] {
                    Some(self.channel_bases[channel] + pos)
                } else {
                    None
                }
            }
            VertexKey::Junction(j) => {
                if self.junction_base + j < self.dim {
                    Some(self.junction_base + j)
                } else {
                    None
                }
            }
        }
    }

    pub fn key_of(&self, row: usize) -> Option<VertexKey> {
        if row >= self.dim {
            return None;
        }
        if row >= self.junction_base {
            return Some(VertexKey::Junction(row - self.junction_base));
        }
        for (c, &base) in self.channel_bases.iter().enumerate() {
            if row >= base && row < base + self.channel_lens[c] {
                return Some(VertexKey::Channel {
                    channel: c,
                    pos: row - base,
                });
            }
        }
        None
    }

    pub fn entry(&self, row: usize, col: usize) -> Option<&BigComplex> {
        self.entries.get(&(row, col))
    }

    pub fn num_channels(&self) -> usize {
        self.channel_bases.len()
    }

    pub fn channel_len(&self, channel: usize) -> usize {
        self.channel_lens[channel]
    }

    pub fn junction_base(&self) -> usize {
        self.junction_base
    }

    pub fn to_dense_big(&self) -> Vec<Vec<BigComplex>> {
        let mut m = vec![vec![BigComplex::zero(self.prec); self.dim]; self.dim];
        for (&(r, c), v) in &self.entries {
            m[r][c] = v.clone();
        }
        m
    }

    pub fn to_dense_c64(&self) -> Vec<Vec<Complex64>> {
        let mut m = vec![vec![Complex64::new(0.0, 0.0); self.dim]; self.dim];
        for (&(r, c), v) in &self.entries {
            m[r][c] = v.to_c64();
        }
        m
    }

    pub fn trace(&self) -> BigComplex {
        let mut t = BigComplex::zero(self.prec);
        for i in 0..self.dim {
            if let Some(v) = self.entries.get(&(i, i)) {
                t = t.add(v);
            }
        }
        t
    }
}

/// Assemble `A(n)` at the given precision. Channel `r` is lengthened to
/// `n * e_r` points.
pub fn assemble(spec: &GraphSpec, n: u32, prec: u32) -> Result<AssembledMatrix> {
    assemble_capped(spec, n, prec, DEFAULT_DIMENSION_CAP)
}

pub fn assemble_capped(
    spec: &GraphSpec,
    n: u32,
    prec: u32,
    cap: usize,
) -> Result<AssembledMatrix> {
    if n < 1 {
        return Err(Error::numeric("lengthening factor n must be >= 1"));
    }
    spec.validate()?;
    let dim = spec.dimension(n);
    if dim > cap {
        return Err(Error::numeric(format!(
            "assembled dimension {dim} exceeds cap {cap}"
        )));
    }
    let mut channel_bases = Vec::with_capacity(spec.channels.len());
    let mut channel_lens = Vec::with_capacity(spec.channels.len());
    let mut base = 0usize;
    for c in &spec.channels {
        channel_bases.push(base);
        let len = (c.e as usize) * (n as usize);
        channel_lens.push(len);
        base += len;
    }
    let junction_base = base;

    let mut entries = BTreeMap::new();
    let mut put = |r: usize, c: usize, v: BigComplex| {
        if !v.is_zero() {
            entries.insert((r, c), v);
        }
    };

    for (r, ch) in spec.channels.iter().enumerate() {
        let alpha = ch.alpha.to_big(prec)?;
        let beta = ch.beta.to_big(prec)?;
        let b0 = channel_bases[r];
        let len = channel_lens[r];
        for i in 0..len {
            put(b0 + i, b0 + i, alpha.clone());
            if i + 1 < len {
                put(b0 + i, b0 + i + 1, beta.clone());
            }
        }
        let from = spec.junction_index(&ch.from).unwrap();
        let to = spec.junction_index(&ch.to).unwrap();
        // junction row feeds the channel head; channel tail feeds the junction
        put(junction_base + from, b0, beta.clone());
        put(b0 + len - 1, junction_base + to, beta.clone());
    }
    for e in &spec.junction_edges {
        if e.weight.is_zero() {
            continue;
        }
        let a = spec.junction_index(&e.from).unwrap();
        let b = spec.junction_index(&e.to).unwrap();
        put(junction_base + a, junction_base + b, e.weight.to_big(prec)?);
    }

    Ok(AssembledMatrix {
        dim,
        n,
        prec,
        entries,
        channel_bases,
        channel_lens,
        junction_base,
    })
}

/// Import a 0/1 adjacency matrix, recovering channels as maximal chains of
/// total-degree-2 vertices. Unweighted case only: every nonzero entry must be
/// exactly 1.
pub fn from_dense_matrix(a: &[Vec<f64>]) -> Result<GraphSpec> {
    let n = a.len();
    if n == 0 || a.iter().any(|row| row.len() != n) {
        return Err(Error::parse("adjacency matrix must be square and nonempty"));
    }
    for row in a {
        for &x in row {
            if x != 0.0 && x != 1.0 {
                return Err(Error::parse(
                    "from_dense_matrix accepts unweighted (0/1) adjacency matrices only",
                ));
            }
        }
    }
    let outs: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| a[i][j] == 1.0).collect())
        .collect();
    let ins: Vec<Vec<usize>> = (0..n)
        .map(|j| (0..n).filter(|&i| a[i][j] == 1.0).collect())
        .collect();
    // Total degree 2 and no self-loop marks a channel point.
    let is_chain: Vec<bool> = (0..n)
        .map(|v| outs[v].len() == 1 && ins[v].len() == 1 && outs[v][0] != v && ins[v][0] != v)
        .collect();
    if is_chain.iter().all(|&b| b) {
        return Err(Error::parse(
            "matrix is a pure cycle: no junction vertices to anchor channels",
        ));
    }
    if is_chain.iter().all(|&b| !b) {
        return Err(Error::parse(
            "matrix has no degree-2 chain vertices (no channels)",
        ));
    }
    let jset: BTreeSet<usize> = (0..n).filter(|&v| !is_chain[v]).collect();
    let name = |v: usize| format!("v{v}");

    let mut spec = GraphSpec {
        junctions: jset
            .iter()
            .map(|&v| JunctionDecl { id: name(v) })
            .collect(),
        junction_edges: Vec::new(),
        channels: Vec::new(),
    };

    let mut visited = vec![false; n];
    for &j in &jset {
        for &start in &outs[j] {
            if !is_chain[start] || visited[start] {
                continue;
            }
            // Walk the chain from its head.
            let mut len = 0usize;
            let mut cur = start;
            loop {
                visited[cur] = true;
                len += 1;
                let nxt = outs[cur][0];
                if !is_chain[nxt] {
                    spec.channels.push(ChannelSpec {
                        from: name(j),
                        to: name(nxt),
                        e: len as u32,
                        alpha: CxParam::from_f64s(0.0, 0.0),
                        beta: CxParam::from_f64s(1.0, 0.0),
                    });
                    break;
                }
                cur = nxt;
            }
        }
        for &to in &outs[j] {
            if !is_chain[to] {
                spec.junction_edges.push(JunctionEdge {
                    from: name(j),
                    to: name(to),
                    weight: CxParam::from_f64s(1.0, 0.0),
                });
            }
        }
    }
    if visited.iter().zip(is_chain.iter()).any(|(&v, &c)| c && !v) {
        return Err(Error::parse(
            "chain vertex unreachable from any junction; matrix is not a valid channel graph",
        ));
    }
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bignum::real_to_f64;
    use crate::presets;

    #[test]
    fn parse_h2k1_document() {
        let text = r#"{
            "junctions": [{"id": "j"}],
            "junction_edges": [{"from": "j", "to": "j", "weight": ["5", "0"]}],
            "channels": [
                {"from": "j", "to": "j", "e": 1, "alpha": ["2", "0"], "beta": ["2", "0"]},
                {"from": "j", "to": "j", "e": 1, "alpha": ["-1", "0"], "beta": ["3", "0"]}
            ]
        }"#;
        let spec = parse_spec(text).unwrap();
        assert_eq!(spec.num_channels(), 2);
        assert_eq!(spec.num_junction_vertices(), 1);
        assert_eq!(spec.channels[0].alpha.to_c64(), Complex64::new(2.0, 0.0));
        // Round trip through serialization keeps decimal strings.
        let again: GraphSpec =
            serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(again.channels[1].beta.re, "3");
    }

    #[test]
    fn parse_h2k2_numbers_accepted() {
        let text = r#"{
            "junctions": [{"id": "v1"}, {"id": "v2"}],
            "junction_edges": [
                {"from": "v1", "to": "v1", "weight": [-2, 0]},
                {"from": "v2", "to": "v2", "weight": [2, 0]}
            ],
            "channels": [
                {"from": "v1", "to": "v2", "e": 1, "alpha": [-1.2, 0], "beta": [1.3, 0]},
                {"from": "v2", "to": "v1", "e": 1, "alpha": [1.2, 0], "beta": [1.3, 0]}
            ]
        }"#;
        let spec = parse_spec(text).unwrap();
        assert_eq!(spec.num_channels(), 2);
        assert_eq!(spec.num_junction_vertices(), 2);
    }

    #[test]
    fn zero_beta_rejected() {
        let mut spec = presets::h2k1_spec();
        spec.channels[0].beta = CxParam::new("0", "0");
        let err = spec.validate().unwrap_err();
        assert!(format!("{err}").contains("zero channel weight"));
    }

    #[test]
    fn dangling_endpoint_rejected() {
        let mut spec = presets::h2k1_spec();
        spec.channels[0].to = "nope".into();
        let err = spec.validate().unwrap_err();
        assert!(format!("{err}").contains("dangling"));
    }

    #[test]
    fn non_irreducible_rejected() {
        // Two junction vertices, one channel v1 -> v2, no way back.
        let spec = GraphSpec {
            junctions: vec![
                JunctionDecl { id: "v1".into() },
                JunctionDecl { id: "v2".into() },
            ],
            junction_edges: vec![],
            channels: vec![ChannelSpec {
                from: "v1".into(),
                to: "v2".into(),
                e: 1,
                alpha: CxParam::new("0", "0"),
                beta: CxParam::new("1", "0"),
            }],
        };
        let err = spec.validate().unwrap_err();
        assert!(format!("{err}").contains("irreducible"));
    }

    #[test]
    fn decompose_h2k2() {
        let d = decompose(&presets::h2k2_spec()).unwrap();
        assert_eq!(d.junction_blocks.len(), 2);
        assert_eq!(d.num_channels(), 2);
        // collapsed graph on 4 nodes: 2 junction vertices + 2 channel points
        let nodes: BTreeSet<usize> = d
            .collapsed_edges
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .collect();
        assert_eq!(nodes.len(), 4);
    }

    #[test]
    fn decompose_h3k1_collapsed_size() {
        let d = decompose(&presets::h3k1_spec()).unwrap();
        assert_eq!(d.junction_blocks.len(), 1);
        let nodes: BTreeSet<usize> = d
            .collapsed_edges
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .collect();
        assert_eq!(nodes.len(), 4);
    }

    #[test]
    fn decompose_blocks_follow_undirected_connectivity() {
        // Two junction vertices joined only through channels: two blocks.
        let d = decompose(&presets::h2k2_spec()).unwrap();
        assert_eq!(d.junction_blocks, vec![vec![0], vec![1]]);
        // Adding an off-diagonal junction edge merges them.
        let mut spec = presets::h2k2_spec();
        spec.junction_edges.push(JunctionEdge {
            from: "v1".into(),
            to: "v2".into(),
            weight: CxParam::new("0.01", "0"),
        });
        let d = decompose(&spec).unwrap();
        assert_eq!(d.junction_blocks, vec![vec![0, 1]]);
    }

    #[test]
    fn assemble_channel_blocks() {
        let spec = presets::h2k1_spec();
        let n = 4;
        let m = assemble(&spec, n, 53).unwrap();
        assert_eq!(m.dim, 2 * 4 + 1);
        // channel interiors: alpha on diagonal, beta above
        for (r, ch) in spec.channels.iter().enumerate() {
            let len = m.channel_len(r);
            assert_eq!(len, (ch.e * n) as usize);
            for i in 0..len {
                let row = m
                    .row_of(&VertexKey::Channel { channel: r, pos: i })
                    .unwrap();
                let diag = m.entry(row, row).map(|v| v.to_c64()).unwrap_or_default();
                assert_eq!(diag, ch.alpha.to_c64());
                if i + 1 < len {
                    assert_eq!(m.entry(row, row + 1).unwrap().to_c64(), ch.beta.to_c64());
                }
            }
        }
        // exactly one junction->channel and one channel->junction coupling per channel
        let jrow = m.row_of(&VertexKey::Junction(0)).unwrap();
        assert_eq!(m.entry(jrow, 0).unwrap().to_c64(), Complex64::new(2.0, 0.0));
        assert_eq!(m.entry(3, jrow).unwrap().to_c64(), Complex64::new(2.0, 0.0));
        assert_eq!(real_to_f64(m.trace().re()), 4.0 * 2.0 + 4.0 * (-1.0) + 5.0);
    }

    #[test]
    fn index_bijection() {
        let m = assemble(&presets::h2k2_spec(), 3, 53).unwrap();
        for row in 0..m.dim {
            let key = m.key_of(row).unwrap();
            assert_eq!(m.row_of(&key), Some(row));
        }
        assert!(m.key_of(m.dim).is_none());
    }

    #[test]
    fn n_equals_one_keeps_base_lengths() {
        let spec = presets::h2k2_spec();
        let m = assemble(&spec, 1, 53).unwrap();
        assert_eq!(m.dim, 1 + 1 + 2);
        assert_eq!(m.channel_len(0), 1);
    }

    #[test]
    fn dimension_cap_guard() {
        let spec = presets::h2k1_spec();
        assert!(assemble_capped(&spec, 100, 53, 150).is_err());
    }

    #[test]
    fn cycle_shift_matrix() {
        // Junction of 2 points with back edge weight 1, channel of m points:
        // A is the (m+2)-cycle shift.
        let spec = presets::cycle_spec();
        let n = 6;
        let m = assemble(&spec, n, 53).unwrap();
        assert_eq!(m.dim, n as usize + 2);
        // Every row has exactly one entry, value 1: a permutation matrix.
        assert_eq!(m.entries.len(), m.dim);
        for (_, v) in m.entries.iter() {
            assert_eq!(v.to_c64(), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn example_three_matrix_layout() {
        // 3n+3 dimension with diagonal runs i/2, -i/2, 3/2 and junction
        // entries -2, 2, 0.
        let spec = presets::three_spec();
        let n = 25;
        let m = assemble(&spec, n, 53).unwrap();
        assert_eq!(m.dim, 3 * 25 + 3);
        let alphas: Vec<Complex64> = (0..3)
            .map(|r| {
                let row = m
                    .row_of(&VertexKey::Channel { channel: r, pos: 0 })
                    .unwrap();
                m.entry(row, row).map(|v| v.to_c64()).unwrap_or_default()
            })
            .collect();
        assert_eq!(alphas[0], Complex64::new(0.0, 0.5));
        assert_eq!(alphas[1], Complex64::new(0.0, -0.5));
        assert_eq!(alphas[2], Complex64::new(1.5, 0.0));
        let jb = m.junction_base();
        let diag = |k: usize| m.entry(jb + k, jb + k).map(|v| v.to_c64());
        assert_eq!(diag(0), Some(Complex64::new(-2.0, 0.0)));
        assert_eq!(diag(1), Some(Complex64::new(2.0, 0.0)));
        assert_eq!(diag(2), None); // zero entry is not stored
    }

    #[test]
    fn dense_import_recovers_channels() {
        // 6-cycle with a chord making vertices 0 and 3 junctions.
        let mut a = vec![vec![0.0; 6]; 6];
        for i in 0..6 {
            a[i][(i + 1) % 6] = 1.0;
        }
        a[0][3] = 1.0;
        let spec = from_dense_matrix(&a).unwrap();
        assert_eq!(spec.num_junction_vertices(), 2);
        assert_eq!(spec.num_channels(), 2);
        assert_eq!(spec.junction_edges.len(), 1);
        for c in &spec.channels {
            assert_eq!(c.e, 2);
        }
        // Re-collapsing the lengthened graph reproduces the collapsed graph.
        let d0 = decompose(&spec).unwrap();
        for n in [1u32, 2, 3] {
            let m = assemble(&spec, n, 53).unwrap();
            let dense = m.to_dense_c64();
            let a2: Vec<Vec<f64>> = dense
                .iter()
                .map(|row| row.iter().map(|z| z.re).collect())
                .collect();
            let spec2 = from_dense_matrix(&a2).unwrap();
            let d2 = decompose(&spec2).unwrap();
            assert_eq!(d0.junction_blocks.len(), d2.junction_blocks.len());
            assert_eq!(d0.num_channels(), d2.num_channels());
            let mut scaled: Vec<u32> = d0.channels.iter().map(|c| c.e * n).collect();
            let mut got: Vec<u32> = d2.channels.iter().map(|c| c.e).collect();
            scaled.sort_unstable();
            got.sort_unstable();
            assert_eq!(scaled, got);
        }
    }

    #[test]
    fn pure_cycle_rejected_by_importer() {
        let mut a = vec![vec![0.0; 4]; 4];
        for i in 0..4 {
            a[i][(i + 1) % 4] = 1.0;
        }
        assert!(from_dense_matrix(&a).is_err());
    }

    #[test]
    fn irreducibility_survives_lengthening() {
        // SCC of the assembled graph for several n (collapsed graph is
        // strongly connected by validation).
        let spec = presets::three_spec();
        for n in [1u32, 2, 5] {
            let m = assemble(&spec, n, 53).unwrap();
            let mut adj = vec![Vec::new(); m.dim];
            for (&(r, c), _) in m.entries.iter() {
                if r != c {
                    adj[r].push(c);
                }
            }
            let mut seen = vec![false; m.dim];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            assert!(seen.iter().all(|&b| b), "forward reach fails at n={n}");
        }
    }
}
