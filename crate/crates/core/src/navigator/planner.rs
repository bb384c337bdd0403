//! Uniform-cost search over the grid of cells. One edge is one week under a
//! set of concurrent interventions.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::{Goal, GoalStatus, InterventionSpec, NavError, NavigatorConfig, Risk};
use crate::estimator::{Region, StateSpace, StateVector};
use crate::time::EpochMs;

pub fn cell_of(v: f64, grid: u32) -> u32 {
    ((v.clamp(0.0, 1.0) * grid as f64).floor() as u32).min(grid - 1)
}

pub fn cell_center(c: u32, grid: u32) -> f64 {
    (c as f64 + 0.5) / grid as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraints {
    pub provider_approved: bool,
    pub max_concurrent: usize,
    pub max_high_risk: usize,
    pub avoid_disorder: bool,
    pub max_weeks: u32,
}

impl Constraints {
    pub fn from_config(cfg: &NavigatorConfig, provider_approved: bool) -> Self {
        Constraints {
            provider_approved,
            max_concurrent: cfg.max_concurrent,
            max_high_risk: cfg.max_high_risk,
            avoid_disorder: true,
            max_weeks: cfg.max_weeks,
        }
    }
}

impl Default for Constraints {
    fn default() -> Self {
        Constraints::from_config(&NavigatorConfig::default(), false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStep {
    pub interventions: Vec<String>,
    pub weeks: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuidancePlan {
    pub subject: String,
    pub goal_id: String,
    pub steps: Vec<PlanStep>,
    /// Cell per week, starting at the current cell.
    pub trajectory: Vec<Vec<u32>>,
    pub total_cost: f64,
    pub created_by: String,
    pub created_at: EpochMs,
    pub dimensions: Vec<String>,
    pub grid: u32,
    pub target: Region,
}

impl GuidancePlan {
    pub fn weeks(&self) -> u32 {
        self.steps.iter().map(|s| s.weeks).sum()
    }

    /// Predicted cell after `week` weeks; holds at the last cell afterwards.
    pub fn predicted_cell(&self, week: usize) -> &[u32] {
        &self.trajectory[week.min(self.trajectory.len() - 1)]
    }

    /// Trajectory as state vectors at the cell centers, for display.
    pub fn predicted_states(&self) -> Vec<StateVector> {
        self.trajectory
            .iter()
            .enumerate()
            .map(|(w, cell)| {
                let mut s = StateVector::new(self.created_at + w as i64 * crate::time::WEEK_MS);
                for (d, c) in self.dimensions.iter().zip(cell) {
                    s.set(d, cell_center(*c, self.grid), 1.0);
                }
                s
            })
            .collect()
    }
}

struct Action {
    ids: Vec<String>,
    cost: f64,
    delta: Vec<i64>,
    high: usize,
    provider: bool,
}

fn actions(catalog: &[InterventionSpec], dims: &[String], grid: u32, max_size: usize) -> Vec<Action> {
    let mut specs: Vec<&InterventionSpec> = catalog.iter().collect();
    specs.sort_by(|a, b| a.id.cmp(&b.id));
    let mut out = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    fn rec(
        start: usize,
        stack: &mut Vec<usize>,
        specs: &[&InterventionSpec],
        max: usize,
        f: &mut dyn FnMut(&[usize]),
    ) {
        for i in start..specs.len() {
            stack.push(i);
            f(stack);
            if stack.len() < max {
                rec(i + 1, stack, specs, max, f);
            }
            stack.pop();
        }
    }
    let mut emit = |set: &[usize]| {
        let chosen: Vec<&InterventionSpec> = set.iter().map(|i| specs[*i]).collect();
        let delta = dims
            .iter()
            .map(|d| {
                chosen
                    .iter()
                    .map(|s| (s.effect.get(d).copied().unwrap_or(0.0) * grid as f64).round() as i64)
                    .sum()
            })
            .collect();
        out.push(Action {
            ids: chosen.iter().map(|s| s.id.clone()).collect(),
            cost: chosen.iter().map(|s| s.cost).sum(),
            delta,
            high: chosen.iter().filter(|s| s.risk == Risk::High).count(),
            provider: chosen.iter().any(|s| s.requires_provider),
        });
    };
    rec(0, &mut stack, &specs, max_size.max(1), &mut emit);
    out
}

#[derive(PartialEq)]
struct Key(f64, u64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

struct Grid {
    dims: usize,
    g: u32,
}

impl Grid {
    fn encode(&self, cell: &[u32]) -> usize {
        cell.iter().fold(0usize, |acc, c| acc * self.g as usize + *c as usize)
    }

    fn decode(&self, mut idx: usize) -> Vec<u32> {
        let mut out = vec![0u32; self.dims];
        for k in (0..self.dims).rev() {
            out[k] = (idx % self.g as usize) as u32;
            idx /= self.g as usize;
        }
        out
    }

    fn center(&self, cell: &[u32]) -> Vec<f64> {
        cell.iter().map(|c| cell_center(*c, self.g)).collect()
    }
}

struct Search<'a> {
    grid: Grid,
    dims: &'a [String],
    target: &'a Region,
    forbidden: Vec<&'a Region>,
    actions: Vec<&'a Action>,
}

impl Search<'_> {
    fn in_target(&self, cell: &[u32]) -> bool {
        self.target.contains_point(self.dims, &self.grid.center(cell))
    }

    fn blocked(&self, cell: &[u32]) -> bool {
        let p = self.grid.center(cell);
        self.forbidden.iter().any(|r| r.contains_point(self.dims, &p))
    }

    /// Returns the path as (cell, action index used to reach it).
    fn run(&self, start: &[u32]) -> Option<(f64, Vec<(Vec<u32>, Option<usize>)>)> {
        let g = self.grid.g as i64;
        let n = (self.grid.g as usize).pow(self.grid.dims as u32);
        let mut dist = vec![f64::INFINITY; n];
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut done = vec![false; n];
        let s = self.grid.encode(start);
        dist[s] = 0.0;
        let mut heap = BinaryHeap::new();
        let mut seq = 0u64;
        heap.push(Reverse((Key(0.0, seq), s)));
        while let Some(Reverse((Key(d, _), u))) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            let cell = self.grid.decode(u);
            if self.in_target(&cell) {
                let mut path = vec![(cell.clone(), prev[u].map(|x| x.1))];
                let mut node = u;
                while let Some((p, _)) = prev[node] {
                    path.push((self.grid.decode(p), prev[p].map(|x| x.1)));
                    node = p;
                }
                path.reverse();
                return Some((d, path));
            }
            for (ai, a) in self.actions.iter().enumerate() {
                let next: Vec<u32> = cell
                    .iter()
                    .zip(&a.delta)
                    .map(|(c, dl)| (*c as i64 + dl).clamp(0, g - 1) as u32)
                    .collect();
                if next == cell || self.blocked(&next) {
                    continue;
                }
                let v = self.grid.encode(&next);
                let nd = d + a.cost;
                if nd < dist[v] - 1e-9 {
                    dist[v] = nd;
                    prev[v] = Some((u, ai));
                    seq += 1;
                    heap.push(Reverse((Key(nd, seq), v)));
                }
            }
        }
        None
    }
}

fn search<'a>(
    start: &[u32],
    dims: &'a [String],
    grid: u32,
    target: &'a Region,
    space: &'a StateSpace,
    all: &'a [Action],
    c: &Constraints,
) -> Option<(f64, Vec<(Vec<u32>, Option<usize>)>, Vec<&'a Action>)> {
    let gr = Grid { dims: dims.len(), g: grid };
    let start_center = gr.center(start);
    let forbidden = if c.avoid_disorder {
        space
            .regions
            .iter()
            .filter(|r| r.disorder && !r.contains_point(dims, &start_center))
            .collect()
    } else {
        Vec::new()
    };
    let actions: Vec<&Action> = all
        .iter()
        .filter(|a| a.ids.len() <= c.max_concurrent)
        .filter(|a| a.high <= c.max_high_risk)
        .filter(|a| c.provider_approved || !a.provider)
        .collect();
    let s = Search { grid: gr, dims, target, forbidden, actions };
    let (cost, path) = s.run(start)?;
    Some((cost, path, s.actions))
}

/// Cheapest route from the current cell into the goal's target region.
pub fn plan_route(
    current: &StateVector,
    goal: &Goal,
    catalog: &[InterventionSpec],
    space: &StateSpace,
    constraints: &Constraints,
    created_by: &str,
) -> Result<GuidancePlan, NavError> {
    if goal.status != GoalStatus::Consensus {
        return Err(NavError::NoConsensusGoal(goal.status));
    }
    let target = goal.target.resolve(space)?;
    for s in catalog {
        s.validate()?;
    }
    let dims = &space.dimensions;
    let grid = space.grid.max(2);
    let start: Vec<u32> = dims
        .iter()
        .map(|d| {
            current
                .get(d)
                .map(|v| cell_of(v, grid))
                .ok_or_else(|| NavError::IncompleteState(d.clone()))
        })
        .collect::<Result<_, _>>()?;
    let mut plan = GuidancePlan {
        subject: goal.subject.to_string(),
        goal_id: goal.id.clone(),
        steps: Vec::new(),
        trajectory: vec![start.clone()],
        total_cost: 0.0,
        created_by: created_by.to_string(),
        created_at: current.timestamp,
        dimensions: dims.clone(),
        grid,
        target: target.clone(),
    };
    let gr = Grid { dims: dims.len(), g: grid };
    if target.contains_point(dims, &gr.center(&start)) {
        return Ok(plan);
    }
    let max_size = constraints.max_concurrent.max(1) + 1;
    let all = actions(catalog, dims, grid, max_size);
    let Some((cost, path, used)) = search(&start, dims, grid, &target, space, &all, constraints) else {
        return Err(NavError::NoRoute { constraint: diagnose(&start, dims, grid, &target, space, &all, constraints) });
    };
    let weeks = (path.len() - 1) as u32;
    if weeks > constraints.max_weeks {
        return Err(NavError::NoRoute { constraint: format!("plan needs {weeks} weeks, limit {}", constraints.max_weeks) });
    }
    for (cell, a) in path.iter().skip(1) {
        let ids = &used[a.expect("non-start cells carry an action")].ids;
        match plan.steps.last_mut() {
            Some(s) if &s.interventions == ids => s.weeks += 1,
            _ => plan.steps.push(PlanStep { interventions: ids.clone(), weeks: 1 }),
        }
        plan.trajectory.push(cell.clone());
    }
    plan.total_cost = cost;
    Ok(plan)
}

fn diagnose(
    start: &[u32],
    dims: &[String],
    grid: u32,
    target: &Region,
    space: &StateSpace,
    all: &[Action],
    c: &Constraints,
) -> String {
    let relaxations: Vec<(Constraints, String)> = vec![
        (
            Constraints { provider_approved: true, ..c.clone() },
            "provider approval required".into(),
        ),
        (
            Constraints { avoid_disorder: false, ..c.clone() },
            format!(
                "disorder region avoidance ({})",
                space.regions.iter().filter(|r| r.disorder).map(|r| r.label.as_str()).collect::<Vec<_>>().join(", ")
            ),
        ),
        (
            Constraints { max_high_risk: c.max_concurrent, ..c.clone() },
            format!("at most {} high-risk intervention", c.max_high_risk),
        ),
        (
            Constraints { max_concurrent: c.max_concurrent + 1, ..c.clone() },
            format!("at most {} concurrent interventions", c.max_concurrent),
        ),
    ];
    for (relaxed, name) in relaxations {
        if search(start, dims, grid, target, space, all, &relaxed).is_some() {
            return name;
        }
    }
    "no intervention moves the state into the target".into()
}
