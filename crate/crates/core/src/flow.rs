//! Min-cost max-flow over the token/mention network and an exact
//! whole-mention cover built on top of it by branch and bound.
//!
//! Network: source → mention (capacity = token count, cost 0), mention →
//! token (capacity 1, per-token cost of the mention), token → sink
//! (capacity 1, cost 0). A mention is selected when every one of its token
//! arcs carries flow.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    rev: usize,
    cap: i64,
    cost: i128,
}

/// Successive-shortest-path min-cost max-flow on small integer networks.
#[derive(Debug, Clone)]
pub struct MinCostFlow {
    graph: Vec<Vec<Arc>>,
}

impl MinCostFlow {
    pub fn new(nodes: usize) -> Self {
        MinCostFlow {
            graph: vec![Vec::new(); nodes],
        }
    }

    /// Returns a handle `(from, index)` for reading the arc's flow later.
    pub fn add_arc(&mut self, from: usize, to: usize, cap: i64, cost: i128) -> (usize, usize) {
        let fwd = self.graph[from].len();
        let back = self.graph[to].len() + usize::from(from == to);
        self.graph[from].push(Arc {
            to,
            rev: back,
            cap,
            cost,
        });
        self.graph[to].push(Arc {
            to: from,
            rev: fwd,
            cap: 0,
            cost: -cost,
        });
        (from, fwd)
    }

    pub fn flow_on(&self, (from, idx): (usize, usize)) -> i64 {
        let arc = &self.graph[from][idx];
        self.graph[arc.to][arc.rev].cap
    }

    /// Pushes as much flow as possible at minimum cost; returns (flow, cost).
    pub fn run(&mut self, source: usize, sink: usize) -> (i64, i128) {
        let n = self.graph.len();
        let (mut flow, mut cost) = (0i64, 0i128);
        loop {
            // Bellman-Ford with a queue; residual costs may be negative.
            let mut dist: Vec<Option<i128>> = vec![None; n];
            let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
            let mut in_queue = vec![false; n];
            let mut queue = VecDeque::new();
            dist[source] = Some(0);
            queue.push_back(source);
            while let Some(u) = queue.pop_front() {
                in_queue[u] = false;
                let du = dist[u].expect("queued nodes are reached");
                for (i, arc) in self.graph[u].iter().enumerate() {
                    if arc.cap <= 0 {
                        continue;
                    }
                    let nd = du + arc.cost;
                    if dist[arc.to].is_none_or(|d| nd < d) {
                        dist[arc.to] = Some(nd);
                        prev[arc.to] = Some((u, i));
                        if !in_queue[arc.to] {
                            in_queue[arc.to] = true;
                            queue.push_back(arc.to);
                        }
                    }
                }
            }
            let Some(path_cost) = dist[sink] else { break };
            let mut push = i64::MAX;
            let mut v = sink;
            while let Some((u, i)) = prev[v] {
                push = push.min(self.graph[u][i].cap);
                v = u;
            }
            let mut v = sink;
            while let Some((u, i)) = prev[v] {
                self.graph[u][i].cap -= push;
                let rev = self.graph[u][i].rev;
                self.graph[v][rev].cap += push;
                v = u;
            }
            flow += push;
            cost += path_cost * push as i128;
        }
        (flow, cost)
    }
}

/// Mentions as token sets with an integer per-token cost.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverProblem {
    pub token_count: usize,
    pub mentions: Vec<Vec<usize>>,
    pub unit_costs: Vec<i128>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverSolution {
    /// Indices of the selected mentions, ascending.
    pub chosen: Vec<usize>,
    pub covered: usize,
    pub cost: i128,
    /// Max flow of the unrestricted network: tokens reachable by any mention.
    pub root_flow: usize,
}

impl CoverProblem {
    pub fn cover_cost(&self, chosen: &[usize]) -> i128 {
        chosen
            .iter()
            .map(|&m| self.unit_costs[m] * self.mentions[m].len() as i128)
            .sum()
    }
}

/// Per-token integer costs from effective weights: the reciprocal weight,
/// scaled, then perturbed by mention rank so equal-weight ties go to the
/// lower rank.
pub fn unit_costs(effective_weights: &[f64], token_counts: &[usize]) -> Vec<i128> {
    const SCALE: f64 = 1e9;
    let m = effective_weights.len();
    let perturb: Vec<i128> = if m <= 48 {
        (0..m).map(|i| 1i128 << i).collect()
    } else {
        (0..m).map(|i| i as i128 + 1).collect()
    };
    let spread: i128 = perturb
        .iter()
        .zip(token_counts)
        .map(|(p, &n)| p * n as i128)
        .sum::<i128>()
        + 1;
    effective_weights
        .iter()
        .zip(perturb)
        .map(|(&w, p)| {
            let base = (SCALE / w.max(1e-6)).round() as i128;
            base.max(1) * spread + p
        })
        .collect()
}

struct Relaxation {
    flow: usize,
    cost: i128,
    mention_flow: Vec<i64>,
}

fn relax(problem: &CoverProblem, active: &[bool], blocked_tokens: &[bool]) -> Relaxation {
    let m = problem.mentions.len();
    let t = problem.token_count;
    let (source, sink) = (0, 1);
    let mut net = MinCostFlow::new(2 + m + t);
    let mut source_arcs = vec![None; m];
    for (i, tokens) in problem.mentions.iter().enumerate() {
        if !active[i] {
            continue;
        }
        source_arcs[i] = Some(net.add_arc(source, 2 + i, tokens.len() as i64, 0));
        for &tok in tokens {
            net.add_arc(2 + i, 2 + m + tok, 1, problem.unit_costs[i]);
        }
    }
    for (tok, &blocked) in blocked_tokens.iter().enumerate().take(t) {
        if !blocked {
            net.add_arc(2 + m + tok, sink, 1, 0);
        }
    }
    let (flow, cost) = net.run(source, sink);
    let mention_flow = source_arcs.iter().map(|a| a.map_or(0, |h| net.flow_on(h))).collect();
    Relaxation {
        flow: flow as usize,
        cost,
        mention_flow,
    }
}

/// Maximizes covered tokens with whole, pairwise token-disjoint mentions,
/// then minimizes total cost. Exact.
pub fn solve_cover(problem: &CoverProblem) -> CoverSolution {
    let m = problem.mentions.len();
    let root = relax(problem, &vec![true; m], &vec![false; problem.token_count]);
    let mut search = Search { problem, best: None };
    search.branch(vec![None; m]);
    let (covered, cost, chosen) = search.best.unwrap_or((0, 0, Vec::new()));
    CoverSolution {
        chosen,
        covered,
        cost,
        root_flow: root.flow,
    }
}

struct Search<'a> {
    problem: &'a CoverProblem,
    best: Option<(usize, i128, Vec<usize>)>,
}

impl Search<'_> {
    fn better(&self, covered: usize, cost: i128) -> bool {
        match &self.best {
            None => true,
            Some((c, k, _)) => covered > *c || (covered == *c && cost < *k),
        }
    }

    /// `fixed[i]`: Some(true) forced in, Some(false) excluded, None free.
    fn branch(&mut self, fixed: Vec<Option<bool>>) {
        let p = self.problem;
        let m = p.mentions.len();
        let mut blocked = vec![false; p.token_count];
        let mut fixed_cov = 0;
        let mut fixed_cost = 0i128;
        for (i, f) in fixed.iter().enumerate().take(m) {
            if *f == Some(true) {
                for &t in &p.mentions[i] {
                    blocked[t] = true;
                }
                fixed_cov += p.mentions[i].len();
                fixed_cost += p.unit_costs[i] * p.mentions[i].len() as i128;
            }
        }
        let active: Vec<bool> = (0..m)
            .map(|i| fixed[i].is_none() && p.mentions[i].iter().all(|&t| !blocked[t]))
            .collect();
        let r = relax(p, &active, &blocked);
        let (cov, cost) = (fixed_cov + r.flow, fixed_cost + r.cost);
        if !self.better(cov, cost) {
            return;
        }
        let fractional =
            (0..m).find(|&i| active[i] && r.mention_flow[i] > 0 && (r.mention_flow[i] as usize) < p.mentions[i].len());
        match fractional {
            None => {
                let chosen: Vec<usize> = (0..m)
                    .filter(|&i| {
                        fixed[i] == Some(true) || (active[i] && r.mention_flow[i] as usize == p.mentions[i].len())
                    })
                    .collect();
                self.best = Some((cov, cost, chosen));
            }
            Some(i) => {
                let mut take = fixed.clone();
                take[i] = Some(true);
                self.branch(take);
                let mut skip = fixed;
                skip[i] = Some(false);
                self.branch(skip);
            }
        }
    }
}
