//! Exact minimisation of binary quadratic forms with a Selling matrix as
//! quadratic part, by reduction to an undirected s-t minimum cut.
//!
//! For a form `F(t) = Σ s_i t_i + Σ_{i,j} q_ij t_i t_j` over `t ∈ {0,1}^{n+1}`
//! the network has `n + 3` vertices: source `0`, one vertex `i + 1` per
//! variable and sink `n + 2`. Variable vertices are joined with weight
//! `-q_ij ≥ 0`; a variable with `s_i ≥ 0` is tied to the sink with weight
//! `s_i`, otherwise to the source with weight `-s_i`. A cut whose source side
//! holds the variables with `t_i = 1` then weighs `F(t)` plus the constant
//! `Σ_i w_{0,i}`, so a minimum cut yields a minimiser.

use std::collections::VecDeque;

use thiserror::Error;

use crate::lattice::SellingMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("InvalidForm: {0}")]
    InvalidForm(String),
    #[error("InvalidCapacity: w[{i}][{j}] = {value} must be finite and non-negative")]
    InvalidCapacity { i: usize, j: usize, value: f64 },
    #[error("VertexOutOfRange: vertex {vertex} in a network of {count}")]
    VertexOutOfRange { vertex: usize, count: usize },
    #[error("FlowImbalance: source outflow and sink inflow differ by {imbalance:e}")]
    FlowImbalance { imbalance: f64 },
}

pub type Result<T, E = FlowError> = std::result::Result<T, E>;

/// `F(t) = Σ s_i t_i + Σ_{i,j} q_ij t_i t_j` with `q` a Selling matrix.
#[derive(Clone, Debug)]
pub struct BinaryQuadraticForm<'a> {
    linear: Vec<f64>,
    quadratic: &'a SellingMatrix,
}

impl<'a> BinaryQuadraticForm<'a> {
    pub fn new(linear: Vec<f64>, quadratic: &'a SellingMatrix) -> Result<Self> {
        if linear.len() != quadratic.dim() {
            return Err(FlowError::InvalidForm(format!(
                "linear part has length {}, quadratic part has dimension {}",
                linear.len(),
                quadratic.dim()
            )));
        }
        if linear.iter().any(|v| !v.is_finite()) {
            return Err(FlowError::InvalidForm("non-finite linear coefficient".into()));
        }
        Ok(Self { linear, quadratic })
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn quadratic(&self) -> &SellingMatrix {
        self.quadratic
    }

    /// Number of binary variables, `n + 1`.
    pub fn len(&self) -> usize {
        self.linear.len()
    }

    pub fn is_empty(&self) -> bool {
        self.linear.is_empty()
    }

    /// Uses `t_i² = t_i` and zero row sums: the quadratic part equals
    /// `Σ_{i∈T, j∉T} -q_ij`.
    pub fn evaluate(&self, t: &[bool]) -> f64 {
        debug_assert_eq!(t.len(), self.len());
        let q = self.quadratic;
        let mut value = 0.0;
        for (i, &ti) in t.iter().enumerate() {
            if !ti {
                continue;
            }
            value += self.linear[i];
            let row = q.row(i);
            for (j, &tj) in t.iter().enumerate() {
                if !tj && j != i {
                    value -= row[j];
                }
            }
        }
        value
    }
}

/// Undirected capacitated network, stored as a dense symmetric matrix.
/// Vertex `0` is the source and the last vertex is the sink.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowNetwork {
    count: usize,
    w: Vec<f64>,
}

impl FlowNetwork {
    pub fn new(vertex_count: usize) -> Self {
        assert!(vertex_count >= 2, "a flow network needs a source and a sink");
        Self {
            count: vertex_count,
            w: vec![0.0; vertex_count * vertex_count],
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.count
    }

    pub fn source(&self) -> usize {
        0
    }

    pub fn sink(&self) -> usize {
        self.count - 1
    }

    #[inline]
    pub fn capacity(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.count + j]
    }

    /// Sets the weight of the undirected edge `{i, j}`. Loops are ignored.
    pub fn set_capacity(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        for vertex in [i, j] {
            if vertex >= self.count {
                return Err(FlowError::VertexOutOfRange {
                    vertex,
                    count: self.count,
                });
            }
        }
        if !value.is_finite() || value < 0.0 {
            return Err(FlowError::InvalidCapacity { i, j, value });
        }
        if i != j {
            self.w[i * self.count + j] = value;
            self.w[j * self.count + i] = value;
        }
        Ok(())
    }

    /// Total weight of edges leaving the source side, summed directly from
    /// the capacity matrix.
    pub fn cut_weight(&self, in_source: &[bool]) -> f64 {
        let mut weight = 0.0;
        for i in (0..self.count).filter(|&i| in_source[i]) {
            for j in (0..self.count).filter(|&j| !in_source[j]) {
                weight += self.capacity(i, j);
            }
        }
        weight
    }
}

/// A minimum s-t cut together with the max-flow value that certifies it.
#[derive(Clone, Debug, PartialEq)]
pub struct CutResult {
    pub in_source: Vec<bool>,
    /// Cut weight recomputed from the capacities.
    pub weight: f64,
    /// Value of the maximum flow found by push-relabel.
    pub flow_value: f64,
}

impl CutResult {
    pub fn source_side(&self) -> Vec<usize> {
        (0..self.in_source.len())
            .filter(|&v| self.in_source[v])
            .collect()
    }

    /// Membership of the non-terminal vertices, i.e. the binary vector `t`.
    pub fn indicator(&self) -> Vec<bool> {
        self.in_source[1..self.in_source.len() - 1].to_vec()
    }
}

/// Minimiser of a binary quadratic form.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryMinimum {
    pub assignment: Vec<bool>,
    pub value: f64,
}

pub fn build_network(form: &BinaryQuadraticForm<'_>) -> FlowNetwork {
    let vars = form.len();
    let sink = vars + 1;
    let q = form.quadratic();
    let mut net = FlowNetwork::new(vars + 2);
    for i in 0..vars {
        let row = q.row(i);
        for j in (i + 1)..vars {
            // Selling matrices are validated non-positive off the diagonal.
            net.w[(i + 1) * net.count + (j + 1)] = -row[j];
            net.w[(j + 1) * net.count + (i + 1)] = -row[j];
        }
        let s = form.linear()[i];
        let (a, b, cap) = if s >= 0.0 { (i + 1, sink, s) } else { (0, i + 1, -s) };
        net.w[a * net.count + b] = cap;
        net.w[b * net.count + a] = cap;
    }
    net
}

/// Minimum s-t cut via FIFO push-relabel with the gap heuristic. The source
/// side is the set of vertices reachable from the source in the final
/// residual graph (the inclusion-minimal minimum cut).
pub fn min_cut(net: &FlowNetwork) -> Result<CutResult> {
    let mut solver = PushRelabel::new(net);
    let flow_value = solver.run(net.source(), net.sink())?;
    let in_source = solver.source_reachable(net.source());
    let weight = net.cut_weight(&in_source);
    Ok(CutResult {
        in_source,
        weight,
        flow_value,
    })
}

/// Exact minimiser of `form` over `{0,1}^{n+1}`; `t_i = 1` iff variable
/// vertex `i + 1` lies on the source side of the minimum cut.
pub fn minimize_form(form: &BinaryQuadraticForm<'_>) -> Result<BinaryMinimum> {
    let net = build_network(form);
    let cut = min_cut(&net)?;
    let assignment = cut.indicator();
    let value = form.evaluate(&assignment);
    Ok(BinaryMinimum { assignment, value })
}

struct Arc {
    to: usize,
    rev: usize,
    residual: f64,
}

struct PushRelabel {
    graph: Vec<Vec<Arc>>,
    excess: Vec<f64>,
    height: Vec<usize>,
    count: Vec<usize>,
    current: Vec<usize>,
    queue: VecDeque<usize>,
    queued: Vec<bool>,
}

impl PushRelabel {
    fn new(net: &FlowNetwork) -> Self {
        let nv = net.count;
        let mut graph: Vec<Vec<Arc>> = (0..nv).map(|_| Vec::new()).collect();
        for i in 0..nv {
            for j in (i + 1)..nv {
                let w = net.capacity(i, j);
                if w > 0.0 {
                    let (ri, rj) = (graph[j].len(), graph[i].len());
                    graph[i].push(Arc {
                        to: j,
                        rev: ri,
                        residual: w,
                    });
                    graph[j].push(Arc {
                        to: i,
                        rev: rj,
                        residual: w,
                    });
                }
            }
        }
        Self {
            graph,
            excess: vec![0.0; nv],
            height: vec![0; nv],
            count: vec![0; 2 * nv + 2],
            current: vec![0; nv],
            queue: VecDeque::new(),
            queued: vec![false; nv],
        }
    }

    fn run(&mut self, s: usize, t: usize) -> Result<f64> {
        let nv = self.graph.len();
        self.init_heights(s, t);
        for v in 0..nv {
            self.count[self.height[v]] += 1;
        }
        self.queued[s] = true;
        self.queued[t] = true;
        for a in 0..self.graph[s].len() {
            let delta = self.graph[s][a].residual;
            if delta > 0.0 {
                self.excess[s] += delta;
                self.push(s, a, delta);
            }
        }
        while let Some(u) = self.queue.pop_front() {
            self.queued[u] = false;
            self.discharge(u, s, t);
        }

        let source_out: f64 = self.graph[s]
            .iter()
            .map(|a| self.graph[a.to][a.rev].residual - a.residual)
            .sum::<f64>()
            * 0.5;
        let total: f64 = self.graph[s]
            .iter()
            .map(|a| 0.5 * (a.residual + self.graph[a.to][a.rev].residual))
            .sum();
        let imbalance = (source_out - self.excess[t]).abs();
        if imbalance > 1e-7 * total.max(1.0) {
            return Err(FlowError::FlowImbalance { imbalance });
        }
        Ok(self.excess[t])
    }

    /// Exact distance-to-sink labels from a reverse BFS.
    fn init_heights(&mut self, s: usize, t: usize) {
        let nv = self.graph.len();
        self.height.iter_mut().for_each(|h| *h = nv);
        self.height[t] = 0;
        let mut bfs = VecDeque::from([t]);
        while let Some(v) = bfs.pop_front() {
            for a in &self.graph[v] {
                let u = a.to;
                if u != s && self.height[u] == nv && self.graph[u][a.rev].residual > 0.0 {
                    self.height[u] = self.height[v] + 1;
                    bfs.push_back(u);
                }
            }
        }
        self.height[s] = nv;
    }

    fn push(&mut self, u: usize, a: usize, delta: f64) {
        let (v, rev) = (self.graph[u][a].to, self.graph[u][a].rev);
        self.graph[u][a].residual -= delta;
        self.graph[v][rev].residual += delta;
        self.excess[u] -= delta;
        self.excess[v] += delta;
        if !self.queued[v] {
            self.queued[v] = true;
            self.queue.push_back(v);
        }
    }

    fn discharge(&mut self, u: usize, s: usize, t: usize) {
        let nv = self.graph.len();
        while self.excess[u] > 0.0 {
            if self.current[u] == self.graph[u].len() {
                let old = self.height[u];
                if old < nv && self.count[old] == 1 {
                    // u is alone on its level: everything at or above it is
                    // cut off from the sink.
                    for v in 0..nv {
                        let h = self.height[v];
                        if v != s && v != t && h >= old && h < nv {
                            self.count[h] -= 1;
                            self.height[v] = nv + 1;
                            self.count[nv + 1] += 1;
                            self.current[v] = 0;
                        }
                    }
                } else {
                    self.count[old] -= 1;
                    let h = self.graph[u]
                        .iter()
                        .filter(|a| a.residual > 0.0)
                        .map(|a| self.height[a.to] + 1)
                        .min()
                        .unwrap_or(2 * nv)
                        .min(2 * nv);
                    self.height[u] = h;
                    self.count[h] += 1;
                }
                self.current[u] = 0;
                continue;
            }
            let a = self.current[u];
            let (v, residual) = (self.graph[u][a].to, self.graph[u][a].residual);
            if residual > 0.0 && self.height[u] == self.height[v] + 1 {
                let delta = self.excess[u].min(residual);
                self.push(u, a, delta);
                if delta == residual {
                    self.current[u] += 1;
                }
            } else {
                self.current[u] += 1;
            }
        }
    }

    fn source_reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.graph.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for a in &self.graph[u] {
                if a.residual > 0.0 && !seen[a.to] {
                    seen[a.to] = true;
                    stack.push(a.to);
                }
            }
        }
        seen
    }
}
