use std::collections::HashMap;

use thiserror::Error;

use super::DynamicalSystem;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ComposeError {
    #[error("unresolved signal {0:?}")]
    Unresolved(String),
    #[error("input {0:?} is wired more than once")]
    Duplicate(String),
    #[error("duplicate block name {0:?}")]
    DuplicateBlock(String),
    #[error("algebraic loop through signal {0:?}")]
    AlgebraicLoop(String),
    #[error("discrete blocks disagree on the control period ({0} vs {1})")]
    PeriodMismatch(f64, f64),
}

/// A sampled block advanced on a fixed control grid; its outputs are held
/// between samples.
pub trait DiscreteBlock: Send + Sync {
    fn input_names(&self) -> Vec<String>;
    fn output_names(&self) -> Vec<String>;
    fn period(&self) -> f64;
    /// Restores the initial condition and returns the initial held outputs.
    fn reset(&mut self) -> Vec<f64>;
    fn update(&mut self, t: f64, inputs: &[f64], out: &mut [f64]);
}

pub enum Block {
    Continuous(Box<dyn DynamicalSystem>),
    Discrete(Box<dyn DiscreteBlock>),
}

impl Block {
    pub fn continuous(sys: impl DynamicalSystem + 'static) -> Self {
        Block::Continuous(Box::new(sys))
    }

    pub fn discrete(block: impl DiscreteBlock + 'static) -> Self {
        Block::Discrete(Box::new(block))
    }

    fn input_names(&self) -> Vec<String> {
        match self {
            Block::Continuous(s) => s.input_names(),
            Block::Discrete(d) => d.input_names(),
        }
    }

    fn output_names(&self) -> Vec<String> {
        match self {
            Block::Continuous(s) => s.output_names(),
            Block::Discrete(d) => d.output_names(),
        }
    }
}

/// Signal connections, `from -> to`.
///
/// `to` is always `block.input`. `from` is either `block.output` or, when it
/// contains no dot, the name of an external input of the composite.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Wiring {
    links: Vec<(String, String)>,
}

impl Wiring {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn connect(mut self, from: &str, to: &str) -> Self {
        self.links.push((from.to_string(), to.to_string()));
        self
    }
}

#[derive(Debug, Clone, Copy)]
enum Source {
    Signal(usize),
    External(usize),
}

struct Node {
    name: String,
    block: Block,
    state_offset: usize,
    n_states: usize,
    out_offset: usize,
    n_out: usize,
    sources: Vec<Source>,
}

/// Flattened block diagram. The state vector is the concatenation of block
/// states in declaration order; every block output is exposed as an output
/// named `block.port`.
pub struct Composite {
    nodes: Vec<Node>,
    /// Continuous blocks, outputs evaluated in this order.
    order: Vec<usize>,
    externals: Vec<String>,
    n_states: usize,
    n_signals: usize,
    held: Vec<f64>,
    period: Option<f64>,
}

/// Flattens `blocks` according to `wiring`.
pub fn compose<N: AsRef<str>>(blocks: Vec<(N, Block)>, wiring: &Wiring) -> Result<Composite, ComposeError> {
    let mut nodes = Vec::with_capacity(blocks.len());
    let mut signal_index: HashMap<String, usize> = HashMap::new();
    let mut owner: Vec<usize> = Vec::new();
    let (mut n_states, mut n_signals) = (0, 0);
    let mut period: Option<f64> = None;

    for (idx, (name, block)) in blocks.into_iter().enumerate() {
        let name = name.as_ref();
        if nodes.iter().any(|n: &Node| n.name == name) {
            return Err(ComposeError::DuplicateBlock(name.to_string()));
        }
        let n_block_states = match &block {
            Block::Continuous(s) => s.dimension(),
            Block::Discrete(d) => {
                let p = d.period();
                match period {
                    Some(q) if (q - p).abs() > 1e-12 * q.abs() => return Err(ComposeError::PeriodMismatch(q, p)),
                    _ => period = Some(p),
                }
                0
            }
        };
        let outs = block.output_names();
        let n_out = outs.len();
        for (k, port) in outs.iter().enumerate() {
            signal_index.insert(format!("{name}.{port}"), n_signals + k);
            owner.push(idx);
        }
        nodes.push(Node {
            name: name.to_string(),
            block,
            state_offset: n_states,
            n_states: n_block_states,
            out_offset: n_signals,
            n_out,
            sources: Vec::new(),
        });
        n_states += n_block_states;
        n_signals += n_out;
    }

    let mut links: HashMap<&str, &str> = HashMap::new();
    for (from, to) in &wiring.links {
        if links.insert(to.as_str(), from.as_str()).is_some() {
            return Err(ComposeError::Duplicate(to.clone()));
        }
    }
    let mut externals: Vec<String> = Vec::new();
    let mut used = 0usize;
    for node in nodes.iter_mut() {
        for port in node.block.input_names() {
            let dest = format!("{}.{port}", node.name);
            let from = *links.get(dest.as_str()).ok_or_else(|| ComposeError::Unresolved(dest.clone()))?;
            used += 1;
            let src = if from.contains('.') {
                Source::Signal(*signal_index.get(from).ok_or_else(|| ComposeError::Unresolved(from.to_string()))?)
            } else {
                let k = match externals.iter().position(|e| e == from) {
                    Some(k) => k,
                    None => {
                        externals.push(from.to_string());
                        externals.len() - 1
                    }
                };
                Source::External(k)
            };
            node.sources.push(src);
        }
    }
    if used != links.len() {
        let dest = links
            .keys()
            .find(|d| !nodes.iter().any(|n| n.block.input_names().iter().any(|p| format!("{}.{p}", n.name) == **d)));
        return Err(ComposeError::Unresolved(dest.map(|d| d.to_string()).unwrap_or_default()));
    }

    let order = evaluation_order(&nodes, &owner)?;
    let mut composite = Composite { nodes, order, externals, n_states, n_signals, held: vec![0.0; n_signals], period };
    composite.reset_discrete();
    Ok(composite)
}

fn feedthrough(node: &Node) -> bool {
    matches!(&node.block, Block::Continuous(s) if s.direct_feedthrough())
}

/// Continuous blocks sorted so that feedthrough blocks come after every
/// continuous block whose outputs they read. Only feedthrough blocks have
/// incoming edges, so a cycle is always an algebraic loop.
fn evaluation_order(nodes: &[Node], owner: &[usize]) -> Result<Vec<usize>, ComposeError> {
    let n = nodes.len();
    let mut indegree = vec![0usize; n];
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (j, node) in nodes.iter().enumerate() {
        if !feedthrough(node) {
            continue;
        }
        for src in &node.sources {
            if let Source::Signal(s) = src {
                let i = owner[*s];
                if matches!(nodes[i].block, Block::Continuous(_)) {
                    succ[i].push(j);
                    indegree[j] += 1;
                }
            }
        }
    }
    let mut order: Vec<usize> = Vec::with_capacity(n);
    let mut ready: Vec<usize> = (0..n).rev().filter(|&i| indegree[i] == 0).collect();
    while let Some(i) = ready.pop() {
        order.push(i);
        for &j in &succ[i] {
            indegree[j] -= 1;
            if indegree[j] == 0 {
                ready.push(j);
            }
        }
    }
    if order.len() < n {
        let stuck = (0..n).find(|&i| indegree[i] > 0).expect("cycle member");
        let node = &nodes[stuck];
        let port = node.block.input_names().into_iter().next().unwrap_or_default();
        return Err(ComposeError::AlgebraicLoop(format!("{}.{port}", node.name)));
    }
    Ok(order.into_iter().filter(|&i| matches!(nodes[i].block, Block::Continuous(_))).collect())
}

impl Composite {
    /// Common period of the discrete blocks, if there are any.
    pub fn control_period(&self) -> Option<f64> {
        self.period
    }

    pub fn has_discrete(&self) -> bool {
        self.period.is_some()
    }

    pub fn block_names(&self) -> Vec<&str> {
        self.nodes.iter().map(|n| n.name.as_str()).collect()
    }

    /// Position of `block.state` in the state vector.
    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.state_names().iter().position(|s| s == name)
    }

    /// Position of `block.port` among the outputs.
    pub fn output_index(&self, name: &str) -> Option<usize> {
        self.output_names().iter().position(|s| s == name)
    }

    pub fn input_index(&self, name: &str) -> Option<usize> {
        self.externals.iter().position(|s| s == name)
    }

    /// Puts every discrete block back to its initial condition.
    pub fn reset_discrete(&mut self) {
        for node in &mut self.nodes {
            if let Block::Discrete(d) = &mut node.block {
                let init = d.reset();
                self.held[node.out_offset..node.out_offset + node.n_out].copy_from_slice(&init);
            }
        }
    }

    /// Samples discrete block inputs at `(t, state, inputs)` and advances
    /// each discrete block by one period.
    pub fn update_discrete(&mut self, t: f64, state: &[f64], inputs: &[f64]) {
        let signals = self.signals(t, state, inputs);
        let gathered: Vec<Vec<f64>> = self.nodes.iter().map(|node| gather(&node.sources, &signals, inputs)).collect();
        for (node, ins) in self.nodes.iter_mut().zip(gathered) {
            if let Block::Discrete(d) = &mut node.block {
                d.update(t, &ins, &mut self.held[node.out_offset..node.out_offset + node.n_out]);
            }
        }
    }

    fn signals(&self, t: f64, state: &[f64], inputs: &[f64]) -> Vec<f64> {
        let mut sig = self.held.clone();
        let mut buf = Vec::new();
        for &i in &self.order {
            let node = &self.nodes[i];
            let Block::Continuous(sys) = &node.block else { continue };
            buf.clear();
            for src in &node.sources {
                buf.push(match *src {
                    Source::Signal(s) => sig[s],
                    Source::External(k) => inputs[k],
                });
            }
            let xs = &state[node.state_offset..node.state_offset + node.n_states];
            sys.outputs(t, xs, &buf, &mut sig[node.out_offset..node.out_offset + node.n_out]);
        }
        sig
    }
}

fn gather(sources: &[Source], signals: &[f64], inputs: &[f64]) -> Vec<f64> {
    sources
        .iter()
        .map(|s| match *s {
            Source::Signal(k) => signals[k],
            Source::External(k) => inputs[k],
        })
        .collect()
}

impl DynamicalSystem for Composite {
    fn state_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.n_states);
        for node in &self.nodes {
            if let Block::Continuous(sys) = &node.block {
                names.extend(sys.state_names().into_iter().map(|s| format!("{}.{s}", node.name)));
            }
        }
        names
    }

    fn dimension(&self) -> usize {
        self.n_states
    }

    fn input_names(&self) -> Vec<String> {
        self.externals.clone()
    }

    fn output_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.n_signals);
        for node in &self.nodes {
            names.extend(node.block.output_names().into_iter().map(|p| format!("{}.{p}", node.name)));
        }
        names
    }

    fn direct_feedthrough(&self) -> bool {
        true
    }

    fn rhs(&self, t: f64, state: &[f64], inputs: &[f64], dx: &mut [f64]) {
        let sig = self.signals(t, state, inputs);
        let mut buf = Vec::new();
        for node in &self.nodes {
            let Block::Continuous(sys) = &node.block else { continue };
            if node.n_states == 0 {
                continue;
            }
            buf.clear();
            for src in &node.sources {
                buf.push(match *src {
                    Source::Signal(s) => sig[s],
                    Source::External(k) => inputs[k],
                });
            }
            let r = node.state_offset..node.state_offset + node.n_states;
            sys.rhs(t, &state[r.clone()], &buf, &mut dx[r]);
        }
    }

    fn outputs(&self, t: f64, state: &[f64], inputs: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.signals(t, state, inputs));
    }
}
