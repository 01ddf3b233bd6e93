//! Round-synchronous vertex-agent simulator.
//!
//! Every pipeline in this crate (filter application, quasi-Newton inverse
//! filtering, both Wiener procedures) compiles to a straight-line program
//! over a small per-vertex register file. The only step that communicates is
//! `Matvec`, which is one synchronized round: every agent sends one scalar to
//! its neighbors, then updates from its own state and the received values.
//! Agents never hold a reference to the global signal; the engine delivers
//! neighbor messages into a per-agent inbox, which makes locality structural
//! rather than a convention.
//!
//! Storage per agent is the register file plus one inbox slot per neighbor
//! plus the agent's own shift rows and vertex constants; none of it scales
//! with the graph order.

use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::filter::PolyFilter;
use crate::graph::Graph;
use crate::inverse::{build_approximant, ApproxSpec, SolverKind};
use crate::jacobi::JacobiBasis;
use crate::poly::{Basis, MultiPoly};
use crate::shift::Shift;
use crate::signal::Signal;
use crate::wiener::WienerProblem;

pub type Reg = usize;

/// One instruction of a vertex program.
#[derive(Debug, Clone)]
pub enum Step {
    /// `dst <- a * (S_k src) + b * src`; the only communicating step.
    Matvec { shift: usize, src: Reg, dst: Reg, a: f64, b: f64 },
    /// `dst <- sum coeff * reg`; purely local. An empty term list zeroes.
    Lin { dst: Reg, terms: Vec<(Reg, f64)> },
    /// `dst <- src * table[agent]`; purely local per-vertex constant.
    VertexScale { dst: Reg, src: Reg, table: usize },
}

/// Straight-line vertex program.
#[derive(Debug, Clone, Default)]
pub struct Program {
    pub registers: usize,
    pub steps: Vec<Step>,
}

impl Program {
    /// Number of communication rounds one execution costs.
    pub fn round_count(&self) -> usize {
        self.steps.iter().filter(|s| matches!(s, Step::Matvec { .. })).count()
    }
}

/// Builder that allocates registers and accumulates steps.
#[derive(Debug, Default)]
pub struct ProgramBuilder {
    steps: Vec<Step>,
    registers: usize,
}

impl ProgramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reg(&mut self) -> Reg {
        self.registers += 1;
        self.registers - 1
    }

    pub fn emit(&mut self, step: Step) {
        self.steps.push(step);
    }

    pub fn finish(self) -> Program {
        Program { registers: self.registers, steps: self.steps }
    }
}

fn rescale_coeffs((mu, nu): (f64, f64)) -> (f64, f64) {
    (2.0 / (nu - mu), -(mu + nu) / (nu - mu))
}

/// Compiles one application of `poly` at the shifts into program steps,
/// mirroring the centralized axis-sweep engine: basis vectors along the last
/// axis, then vector-coefficient Horner/Clenshaw sweeps for the others.
/// Returns the output register.
pub fn compile_apply(b: &mut ProgramBuilder, poly: &MultiPoly, src: Reg) -> Reg {
    let degrees = poly.degrees().to_vec();
    let d = degrees.len();
    let last = d - 1;

    // basis vectors along the last axis
    let q = compile_basis_vectors(b, poly, last, degrees[last], src);

    // collapse the last axis into one register per remaining fiber
    let remaining: usize = degrees[..last].iter().map(|l| l + 1).product();
    let ld = degrees[last] + 1;
    let mut current: Vec<Reg> = Vec::with_capacity(remaining);
    for fiber in 0..remaining {
        let dst = b.reg();
        let terms: Vec<(Reg, f64)> =
            (0..ld).map(|nd| (q[nd], poly.coeffs()[fiber * ld + nd])).collect();
        b.emit(Step::Lin { dst, terms });
        current.push(dst);
    }

    // sweep the remaining axes
    for k in (0..last).rev() {
        let lk = degrees[k] + 1;
        let fibers = current.len() / lk;
        let mut next = Vec::with_capacity(fibers);
        for f in 0..fibers {
            let fiber: Vec<Reg> = (0..lk).map(|i| current[f * lk + i]).collect();
            next.push(compile_combine_axis(b, poly, k, &fiber));
        }
        current = next;
    }
    current[0]
}

fn compile_basis_vectors(
    b: &mut ProgramBuilder,
    poly: &MultiPoly,
    axis: usize,
    max_n: usize,
    src: Reg,
) -> Vec<Reg> {
    let mut out = vec![src];
    if max_n == 0 {
        return out;
    }
    match poly.basis() {
        Basis::Monomial => {
            for n in 1..=max_n {
                let dst = b.reg();
                b.emit(Step::Matvec { shift: axis, src: out[n - 1], dst, a: 1.0, b: 0.0 });
                out.push(dst);
            }
        }
        Basis::Jacobi { alpha, beta, cube } => {
            let basis = JacobiBasis::new(*alpha, *beta).expect("validated");
            let (sa, sb) = rescale_coeffs(cube[axis]);
            let a0 = 0.5 * (alpha + beta + 2.0);
            let b0 = 0.5 * (alpha - beta);
            let s = b.reg();
            b.emit(Step::Matvec { shift: axis, src, dst: s, a: sa, b: sb });
            let q1 = b.reg();
            b.emit(Step::Lin { dst: q1, terms: vec![(s, a0), (src, b0)] });
            out.push(q1);
            for n in 2..=max_n {
                let (a1, a2, a3) = basis.recurrence(n);
                let s = b.reg();
                b.emit(Step::Matvec { shift: axis, src: out[n - 1], dst: s, a: sa, b: sb });
                let qn = b.reg();
                b.emit(Step::Lin {
                    dst: qn,
                    terms: vec![(s, a1), (out[n - 1], -a2), (out[n - 2], -a3)],
                });
                out.push(qn);
            }
        }
        Basis::Chebyshev { cube } => {
            let (sa, sb) = rescale_coeffs(cube[axis]);
            let q1 = b.reg();
            b.emit(Step::Matvec { shift: axis, src, dst: q1, a: sa, b: sb });
            out.push(q1);
            for n in 2..=max_n {
                let s = b.reg();
                b.emit(Step::Matvec { shift: axis, src: out[n - 1], dst: s, a: sa, b: sb });
                let qn = b.reg();
                b.emit(Step::Lin { dst: qn, terms: vec![(s, 2.0), (out[n - 2], -1.0)] });
                out.push(qn);
            }
        }
    }
    out
}

fn compile_combine_axis(b: &mut ProgramBuilder, poly: &MultiPoly, axis: usize, vs: &[Reg]) -> Reg {
    let l = vs.len() - 1;
    if l == 0 {
        return vs[0];
    }
    match poly.basis() {
        Basis::Monomial => {
            // Horner with vector coefficients
            let mut y = vs[l];
            for i in (0..l).rev() {
                let sy = b.reg();
                b.emit(Step::Matvec { shift: axis, src: y, dst: sy, a: 1.0, b: 0.0 });
                let next = b.reg();
                b.emit(Step::Lin { dst: next, terms: vec![(sy, 1.0), (vs[i], 1.0)] });
                y = next;
            }
            y
        }
        Basis::Jacobi { alpha, beta, cube } => {
            let basis = JacobiBasis::new(*alpha, *beta).expect("validated");
            let (sa, sb) = rescale_coeffs(cube[axis]);
            let step = |n: usize| -> (f64, f64, f64) {
                if n == 0 {
                    (0.5 * (alpha + beta + 2.0), 0.5 * (alpha - beta), 0.0)
                } else {
                    let (a1, a2, a3) = basis.recurrence(n + 1);
                    (a1, -a2, -a3)
                }
            };
            compile_clenshaw(b, axis, vs, sa, sb, &step)
        }
        Basis::Chebyshev { cube } => {
            let (sa, sb) = rescale_coeffs(cube[axis]);
            let step =
                |n: usize| -> (f64, f64, f64) { if n == 0 { (1.0, 0.0, 0.0) } else { (2.0, 0.0, -1.0) } };
            compile_clenshaw(b, axis, vs, sa, sb, &step)
        }
    }
}

fn compile_clenshaw(
    b: &mut ProgramBuilder,
    axis: usize,
    vs: &[Reg],
    sa: f64,
    sb: f64,
    step: &dyn Fn(usize) -> (f64, f64, f64),
) -> Reg {
    let l = vs.len() - 1;
    let mut b1: Option<Reg> = None;
    let mut b2: Option<Reg> = None;
    for n in (0..=l).rev() {
        let bn = match b1 {
            None => vs[n],
            Some(prev) => {
                let (an, bnc, _) = step(n);
                let (_, _, c_next) = step(n + 1);
                let s = b.reg();
                b.emit(Step::Matvec { shift: axis, src: prev, dst: s, a: sa, b: sb });
                let dst = b.reg();
                let mut terms = vec![(vs[n], 1.0), (s, an), (prev, bnc)];
                if let Some(prev2) = b2 {
                    terms.push((prev2, c_next));
                }
                b.emit(Step::Lin { dst, terms });
                dst
            }
        };
        b2 = b1.replace(bn);
    }
    b1.expect("nonempty series")
}

/// Per-round communication metrics plus the storage high-water mark.
#[derive(Debug, Clone, Default)]
pub struct RoundLog {
    pub rounds: usize,
    pub messages_per_round: Vec<usize>,
    /// Scalars held by the most loaded agent: registers + inbox slots +
    /// local shift rows (incl. diagonal) + vertex constants.
    pub max_agent_storage: usize,
}

impl RoundLog {
    pub fn total_messages(&self) -> usize {
        self.messages_per_round.iter().sum()
    }

    /// Writes the `round,messages,max_agent_storage` CSV.
    pub fn write_csv(&self, w: &mut impl std::io::Write) -> Result<()> {
        writeln!(w, "round,messages,max_agent_storage")?;
        for (round, msgs) in self.messages_per_round.iter().enumerate() {
            writeln!(w, "{round},{msgs},{}", self.max_agent_storage)?;
        }
        Ok(())
    }
}

/// State owned by one vertex agent: its registers, constants, its rows of
/// every shift, and an inbox slot per neighbor. Nothing here references the
/// global signal.
#[derive(Debug, Clone)]
struct AgentState {
    neighbors: Vec<u32>,
    /// Per shift: diagonal entry, then values aligned with `neighbors`.
    shift_diag: Vec<f64>,
    shift_rows: Vec<Vec<f64>>,
    tables: Vec<f64>,
    regs: Vec<f64>,
    inbox: Vec<f64>,
}

impl AgentState {
    fn storage_scalars(&self) -> usize {
        self.regs.len()
            + self.inbox.len()
            + self.tables.len()
            + self.shift_diag.len()
            + self.shift_rows.iter().map(|r| r.len()).sum::<usize>()
    }
}

/// The simulated network: agents plus the round-barrier engine.
pub struct Network {
    graph: Arc<Graph>,
    agents: Vec<AgentState>,
    log: RoundLog,
    /// When set, agents execute local phases in this order (results must not
    /// depend on it; tests exercise shuffled orders).
    pub execution_order: Option<Vec<usize>>,
    /// When true, records which vertices each agent received data from.
    pub trace_access: bool,
    pub access_log: Vec<std::collections::BTreeSet<u32>>,
}

impl Network {
    /// Builds a network for the given shifts and register count. `tables`
    /// lists per-vertex constant vectors (each of length `n`).
    pub fn new(
        shifts: &[Arc<Shift>],
        registers: usize,
        tables: &[Vec<f64>],
    ) -> Result<Self> {
        if shifts.is_empty() {
            return Err(CoreError::InvalidParameter("network needs at least one shift".into()));
        }
        let graph = shifts[0].graph().clone();
        let n = graph.vertex_count();
        for t in tables {
            if t.len() != n {
                return Err(CoreError::DimensionMismatch { expected: n, got: t.len() });
            }
        }
        let mut agents = Vec::with_capacity(n);
        for v in 0..n {
            let neighbors = graph.neighbors(v).to_vec();
            let shift_diag: Vec<f64> = shifts.iter().map(|s| s.diagonal(v)).collect();
            let shift_rows: Vec<Vec<f64>> =
                shifts.iter().map(|s| s.off_diagonal_row(v).to_vec()).collect();
            let tables: Vec<f64> = tables.iter().map(|t| t[v]).collect();
            let inbox = vec![0.0; neighbors.len()];
            agents.push(AgentState {
                neighbors,
                shift_diag,
                shift_rows,
                tables,
                regs: vec![0.0; registers],
                inbox,
            });
        }
        let max_agent_storage = agents.iter().map(|a| a.storage_scalars()).max().unwrap_or(0);
        Ok(Self {
            graph: graph.clone(),
            agents,
            log: RoundLog { rounds: 0, messages_per_round: vec![], max_agent_storage },
            execution_order: None,
            trace_access: false,
            access_log: vec![Default::default(); n],
        })
    }

    pub fn graph(&self) -> &Arc<Graph> {
        &self.graph
    }

    pub fn log(&self) -> &RoundLog {
        &self.log
    }

    /// Loads per-vertex values into a register (setup-time input injection).
    pub fn load_register(&mut self, reg: Reg, values: &[f64]) {
        for (agent, v) in self.agents.iter_mut().zip(values) {
            agent.regs[reg] = *v;
        }
    }

    /// Collects a register across agents (engine-level readout).
    pub fn read_register(&self, reg: Reg) -> Vec<f64> {
        self.agents.iter().map(|a| a.regs[reg]).collect()
    }

    fn order(&self) -> Vec<usize> {
        match &self.execution_order {
            Some(o) => o.clone(),
            None => (0..self.agents.len()).collect(),
        }
    }

    /// Executes a program under bulk-synchronous semantics. Register state
    /// persists across calls, so iterative pipelines re-run their body.
    pub fn execute(&mut self, program: &Program) -> Result<()> {
        for agent in &mut self.agents {
            if agent.regs.len() < program.registers {
                agent.regs.resize(program.registers, 0.0);
            }
        }
        let order = self.order();
        for step in &program.steps {
            match step {
                Step::Matvec { shift, src, dst, a, b } => {
                    // send phase: snapshot every agent's outgoing value
                    let sends: Vec<f64> = self.agents.iter().map(|ag| ag.regs[*src]).collect();
                    let mut messages = 0usize;
                    // deliver: each agent receives from its neighbors
                    for &i in &order {
                        let agent = &mut self.agents[i];
                        for (slot, &j) in agent.neighbors.iter().enumerate() {
                            agent.inbox[slot] = sends[j as usize];
                            messages += 1;
                        }
                        if self.trace_access {
                            for &j in &agent.neighbors {
                                self.access_log[i].insert(j);
                            }
                        }
                    }
                    // barrier, then local compute from own state + inbox
                    for &i in &order {
                        let agent = &mut self.agents[i];
                        let own = agent.regs[*src];
                        let mut acc = agent.shift_diag[*shift] * own;
                        for (slot, val) in agent.inbox.iter().enumerate() {
                            acc += agent.shift_rows[*shift][slot] * val;
                        }
                        agent.regs[*dst] = a * acc + b * own;
                    }
                    self.log.rounds += 1;
                    self.log.messages_per_round.push(messages);
                }
                Step::Lin { dst, terms } => {
                    for &i in &order {
                        let agent = &mut self.agents[i];
                        let mut acc = 0.0;
                        for (reg, c) in terms {
                            acc += agent.regs[*reg] * c;
                        }
                        agent.regs[*dst] = acc;
                    }
                }
                Step::VertexScale { dst, src, table } => {
                    for &i in &order {
                        let agent = &mut self.agents[i];
                        agent.regs[*dst] = agent.regs[*src] * agent.tables[*table];
                    }
                }
            }
        }
        Ok(())
    }
}

/// Runs one filter application at the vertex level.
pub fn run_filter(filter: &PolyFilter, x: &Signal) -> Result<(Signal, RoundLog)> {
    let mut b = ProgramBuilder::new();
    let src = b.reg();
    let out = compile_apply(&mut b, filter.poly(), src);
    let program = b.finish();
    let mut net = Network::new(filter.shifts(), program.registers, &[])?;
    net.load_register(src, x.values());
    net.execute(&program)?;
    let values = net.read_register(out);
    Ok((Signal::new(x.graph().clone(), values)?, net.log.clone()))
}

/// Quasi-Newton inverse filtering at the vertex level: `iterations` rounds of
/// `e = H x - y; x = x - G_M e` from the zero initial iterate.
pub fn run_inverse(
    h: &PolyFilter,
    g_m: &PolyFilter,
    y: &Signal,
    iterations: usize,
) -> Result<(Signal, RoundLog)> {
    let mut b = ProgramBuilder::new();
    let y_reg = b.reg();
    let x_reg = b.reg();
    let body = {
        let hx = compile_apply(&mut b, h.poly(), x_reg);
        let e = b.reg();
        b.emit(Step::Lin { dst: e, terms: vec![(hx, 1.0), (y_reg, -1.0)] });
        let ge = compile_apply(&mut b, g_m.poly(), e);
        b.emit(Step::Lin { dst: x_reg, terms: vec![(x_reg, 1.0), (ge, -1.0)] });
        b.finish()
    };
    let mut net = Network::new(h.shifts(), body.registers, &[])?;
    net.load_register(y_reg, y.values());
    for _ in 0..iterations {
        net.execute(&body)?;
    }
    let values = net.read_register(x_reg);
    Ok((Signal::new(y.graph().clone(), values)?, net.log.clone()))
}

/// Iteration counts for the distributed Wiener pipelines.
#[derive(Debug, Clone, Copy)]
pub struct DistConfig {
    pub solver: ApproxSpec,
    /// Inverse-filtering iterations (Part I).
    pub part1_iterations: usize,
    /// Neumann iterations (Part II); ignored when the regularizer is zero.
    pub part2_iterations: usize,
}

fn approximant_poly(
    spec: &ApproxSpec,
    target: &MultiPoly,
    cube: &[(f64, f64)],
) -> Result<MultiPoly> {
    match spec.kind {
        SolverKind::Approx(family) => Ok(build_approximant(family, target, cube, spec.degree)?.0),
        SolverKind::Gd0 => Err(CoreError::InvalidParameter(
            "distributed pipelines use polynomial approximation solvers".into(),
        )),
    }
}

/// Stochastic Wiener filtering at the vertex level (inverse step, correlation
/// post-filter, then the rescale / Neumann / rescale regularization).
pub fn run_wiener_mse(
    prob: &WienerProblem,
    y: &Signal,
    config: &DistConfig,
) -> Result<(Signal, RoundLog)> {
    let h = prob.filter();
    let target = prob.stochastic_inverse_target()?;
    let g_m = approximant_poly(&config.solver, &target, prob.cube())?;
    let hr = h.poly().multiply(prob.correlation())?;

    let sqrt_p: Vec<f64> = prob.probabilities().iter().map(|p| p.sqrt()).collect();
    let inv_sqrt_p: Vec<f64> = sqrt_p.iter().map(|s| 1.0 / s).collect();

    // Part I body: one quasi-Newton iteration on (h^2 r + g)
    let mut b = ProgramBuilder::new();
    let y_reg = b.reg();
    let x_reg = b.reg();
    let part1_body = {
        let tx = compile_apply(&mut b, &target, x_reg);
        let e = b.reg();
        b.emit(Step::Lin { dst: e, terms: vec![(tx, 1.0), (y_reg, -1.0)] });
        let ge = compile_apply(&mut b, &g_m, e);
        b.emit(Step::Lin { dst: x_reg, terms: vec![(x_reg, 1.0), (ge, -1.0)] });
        b.finish()
    };

    // Part I post-filter: w = (h r)(S) z1
    let mut b2 = ProgramBuilder::new();
    b2.reg(); // y
    b2.reg(); // x (z1)
    let post = {
        let w = compile_apply(&mut b2, &hr, x_reg);
        (b2.finish(), w)
    };

    let registers = part1_body.registers.max(post.0.registers);
    let mut net = Network::new(h.shifts(), registers, &[sqrt_p, inv_sqrt_p])?;
    net.load_register(y_reg, y.values());
    for _ in 0..config.part1_iterations {
        net.execute(&part1_body)?;
    }
    net.execute(&post.0)?;
    let w_reg = post.1;

    if prob.regularizer().is_zero() {
        let values = net.read_register(w_reg);
        return Ok((Signal::new(y.graph().clone(), values)?, net.log.clone()));
    }

    // Part II: z2 = P^{1/2} w, Neumann iteration, x = P^{-1/2} z3
    let k_sup = neumann_scalar_bound(prob);
    let p_min = prob.probabilities().iter().cloned().fold(f64::INFINITY, f64::min);
    let c_init = p_min / (k_sup + p_min);
    let c_keep = k_sup / (k_sup + p_min);

    let mut b3 = ProgramBuilder::new();
    for _ in 0..registers.max(w_reg + 1) {
        b3.reg();
    }
    let z2 = b3.reg();
    let wm = b3.reg();
    b3.emit(Step::VertexScale { dst: z2, src: w_reg, table: 0 });
    b3.emit(Step::Lin { dst: wm, terms: vec![(z2, 1.0)] });
    let part2_setup = b3.finish();

    let mut b4 = ProgramBuilder::new();
    for _ in 0..part2_setup.registers {
        b4.reg();
    }
    let part2_body = {
        let s1 = b4.reg();
        b4.emit(Step::VertexScale { dst: s1, src: wm, table: 1 });
        let ks = compile_apply(&mut b4, prob.regularizer(), s1);
        let s3 = b4.reg();
        b4.emit(Step::VertexScale { dst: s3, src: ks, table: 1 });
        b4.emit(Step::Lin {
            dst: wm,
            terms: vec![(z2, c_init), (wm, c_keep), (s3, -c_init)],
        });
        b4.finish()
    };

    let mut b5 = ProgramBuilder::new();
    for _ in 0..part2_body.registers {
        b5.reg();
    }
    let out_reg = b5.reg();
    b5.emit(Step::VertexScale { dst: out_reg, src: wm, table: 1 });
    let part2_post = b5.finish();

    net.execute(&part2_setup)?;
    for _ in 0..config.part2_iterations {
        net.execute(&part2_body)?;
    }
    net.execute(&part2_post)?;
    let values = net.read_register(out_reg);
    Ok((Signal::new(y.graph().clone(), values)?, net.log.clone()))
}

/// Worst-case Wiener filtering at the vertex level: inverse step on
/// `d0^2 h^2 + g`, then the `d0^2 H` post-filter.
pub fn run_wiener_wmse(
    prob: &WienerProblem,
    y: &Signal,
    config: &DistConfig,
) -> Result<(Signal, RoundLog)> {
    let h = prob.filter();
    let d0 = prob.delta0().ok_or_else(|| {
        CoreError::InvalidParameter("worst-case filtering needs an energy bound".into())
    })?;
    let target = prob.worstcase_inverse_target()?;
    let g_m = approximant_poly(&config.solver, &target, prob.cube())?;

    let mut b = ProgramBuilder::new();
    let y_reg = b.reg();
    let x_reg = b.reg();
    let body = {
        let tx = compile_apply(&mut b, &target, x_reg);
        let e = b.reg();
        b.emit(Step::Lin { dst: e, terms: vec![(tx, 1.0), (y_reg, -1.0)] });
        let ge = compile_apply(&mut b, &g_m, e);
        b.emit(Step::Lin { dst: x_reg, terms: vec![(x_reg, 1.0), (ge, -1.0)] });
        b.finish()
    };
    let mut b2 = ProgramBuilder::new();
    for _ in 0..body.registers {
        b2.reg();
    }
    let post = {
        let hx = compile_apply(&mut b2, &h.poly().scale(d0 * d0), x_reg);
        (b2.finish(), hx)
    };
    let registers = body.registers.max(post.0.registers);
    let mut net = Network::new(h.shifts(), registers, &[])?;
    net.load_register(y_reg, y.values());
    for _ in 0..config.part1_iterations {
        net.execute(&body)?;
    }
    net.execute(&post.0)?;
    let values = net.read_register(post.1);
    Ok((Signal::new(y.graph().clone(), values)?, net.log.clone()))
}

fn neumann_scalar_bound(prob: &WienerProblem) -> f64 {
    // sup of k over the cube sample grid (same grid the centralized path uses)
    let cube = prob.cube();
    let density = crate::inverse::default_grid_density(cube.len());
    let mut sup = 0.0f64;
    let d = cube.len();
    let total = density.pow(d as u32);
    let mut point = vec![0.0; d];
    for flat in 0..total {
        let mut rem = flat;
        for k in (0..d).rev() {
            let i = rem % density;
            rem /= density;
            let (lo, hi) = cube[k];
            point[k] = lo + (hi - lo) * i as f64 / (density - 1) as f64;
        }
        sup = sup.max(prob.regularizer().evaluate(&point));
    }
    sup
}
