//! Primal-dual interior-point method (Mehrotra predictor-corrector) for
//! convex QPs with a diagonal Hessian.
//!
//! Fixed variables are substituted out, rows are equilibrated, the
//! objective is normalised and each Newton step solves the quasi-definite
//! augmented system
//!
//! ```text
//! [ H + Σ   Gᵀ    Aᵀ   ] [dx]
//! [ G      -δ     0    ] [dy]
//! [ A       0   -W/Z-δ ] [dz]
//! ```
//!
//! with a sparse LDLᵀ factorisation.

use super::linalg::SymmetricFactor;
use super::{KktResiduals, QpProblem, QpSolution, SearchStats, SolveStatus};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpmSettings {
    pub max_iterations: usize,
    /// Target for scaled primal/dual residuals and relative gap.
    pub tolerance: f64,
    /// Looser level accepted when progress stalls.
    pub acceptable: f64,
    pub step_fraction: f64,
}

impl Default for IpmSettings {
    fn default() -> Self {
        Self { max_iterations: 200, tolerance: 1e-9, acceptable: 1e-7, step_fraction: 0.995 }
    }
}

const FIXED_TOL: f64 = 1e-9;
const STATIC_REG: f64 = 1e-11;
const PIVOT_FLOOR: f64 = 1e-14;

struct Rows {
    start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    rhs: Vec<f64>,
    origin: Vec<usize>,
    scale: Vec<f64>,
}

impl Rows {
    fn len(&self) -> usize {
        self.rhs.len()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                (self.start[i]..self.start[i + 1]).map(|p| self.vals[p] * x[self.cols[p]]).sum()
            })
            .collect()
    }

    fn apply_t_add(&self, y: &[f64], out: &mut [f64]) {
        for i in 0..self.len() {
            let yi = y[i];
            if yi != 0.0 {
                for p in self.start[i]..self.start[i + 1] {
                    out[self.cols[p]] += self.vals[p] * yi;
                }
            }
        }
    }
}

/// Outcome of substituting fixed variables and scaling.
enum Presolved {
    Ready(Box<Reduced>),
    Infeasible,
}

struct Reduced {
    free: Vec<usize>,
    full_x: Vec<f64>,
    quad: Vec<f64>,
    lin: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    eq: Rows,
    ineq: Rows,
    obj_scale: f64,
}

fn reduce_rows(
    rows: &super::LinearRows,
    map: &[Option<usize>],
    full_x: &[f64],
    equality: bool,
) -> Option<Rows> {
    let mut out = Rows {
        start: vec![0],
        cols: Vec::new(),
        vals: Vec::new(),
        rhs: Vec::new(),
        origin: Vec::new(),
        scale: Vec::new(),
    };
    for i in 0..rows.len() {
        let (c, v) = rows.row(i);
        let mut rhs = rows.rhs()[i];
        let mut amax: f64 = 0.0;
        let begin = out.cols.len();
        for (&j, &a) in c.iter().zip(v) {
            if a == 0.0 {
                continue;
            }
            match map[j] {
                Some(r) => {
                    out.cols.push(r);
                    out.vals.push(a);
                    amax = amax.max(a.abs());
                }
                None => rhs -= a * full_x[j],
            }
        }
        if out.cols.len() == begin {
            let tol = 1e-9 * (1.0 + rows.rhs()[i].abs());
            let ok = if equality { rhs.abs() <= tol } else { rhs >= -tol };
            if !ok {
                return None;
            }
            continue;
        }
        let s = 1.0 / amax;
        for v in &mut out.vals[begin..] {
            *v *= s;
        }
        out.start.push(out.cols.len());
        out.rhs.push(rhs * s);
        out.origin.push(i);
        out.scale.push(s);
    }
    Some(out)
}

fn presolve(p: &QpProblem) -> Presolved {
    let n = p.num_vars();
    let mut map = vec![None; n];
    let mut free = Vec::new();
    let mut full_x = vec![0.0; n];
    for j in 0..n {
        let (lo, hi) = (p.lower[j], p.upper[j]);
        if lo.is_finite() && hi - lo <= FIXED_TOL * (1.0 + lo.abs()) {
            full_x[j] = 0.5 * (lo + hi);
        } else {
            map[j] = Some(free.len());
            free.push(j);
        }
    }
    let (Some(eq), Some(ineq)) = (
        reduce_rows(&p.eq, &map, &full_x, true),
        reduce_rows(&p.ineq, &map, &full_x, false),
    ) else {
        return Presolved::Infeasible;
    };
    let cmax = free
        .iter()
        .map(|&j| p.linear[j].abs().max(2.0 * p.quad[j]))
        .fold(0.0f64, f64::max);
    let obj_scale = if cmax > 0.0 { 1.0 / cmax } else { 1.0 };
    // linear terms picked up from fixed variables do not matter: the
    // objective is evaluated on the full vector afterwards
    Presolved::Ready(Box::new(Reduced {
        quad: free.iter().map(|&j| p.quad[j] * obj_scale).collect(),
        lin: free.iter().map(|&j| p.linear[j] * obj_scale).collect(),
        lo: free.iter().map(|&j| p.lower[j]).collect(),
        hi: free.iter().map(|&j| p.upper[j]).collect(),
        free,
        full_x,
        eq,
        ineq,
        obj_scale,
    }))
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Largest step in (0, 1] keeping `v + α dv ≥ 0`.
fn max_step(v: &[f64], dv: &[f64]) -> f64 {
    let mut a: f64 = 1.0;
    for (x, d) in v.iter().zip(dv) {
        if *d < 0.0 {
            a = a.min(-x / d);
        }
    }
    a
}

struct Iterate {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    w: Vec<f64>,
    zl: Vec<f64>,
    zu: Vec<f64>,
}

/// Solves the continuous problem; complementarity pairs are ignored.
pub fn solve_qp(problem: &QpProblem, settings: &IpmSettings) -> QpSolution {
    let n_full = problem.num_vars();
    let red = match presolve(problem) {
        Presolved::Ready(r) => r,
        Presolved::Infeasible => {
            let mut s = QpSolution::failed(SolveStatus::Infeasible, n_full);
            s.certificate = Some(0.0);
            return s;
        }
    };
    let n = red.free.len();
    let me = red.eq.len();
    let mi = red.ineq.len();
    let lf: Vec<usize> = (0..n).filter(|&j| red.lo[j].is_finite()).collect();
    let uf: Vec<usize> = (0..n).filter(|&j| red.hi[j].is_finite()).collect();
    let m_comp = mi + lf.len() + uf.len();

    let finish = |x_red: &[f64],
                  status: SolveStatus,
                  iterations: usize,
                  duals: Option<(&[f64], &[f64], &[f64], &[f64])>| {
        let mut x = red.full_x.clone();
        for (r, &j) in red.free.iter().enumerate() {
            x[j] = x_red[r].clamp(problem.lower[j], problem.upper[j]);
        }
        let objective = problem.objective(&x);
        let residuals = match duals {
            Some((y, z, zl, zu)) => original_residuals(problem, &red, &x, y, z, zl, zu, &lf, &uf),
            None => KktResiduals { primal: problem.max_violation(&x).max(0.0), ..Default::default() },
        };
        QpSolution {
            x,
            objective,
            status,
            residuals,
            stats: SearchStats {
                nodes: 0,
                ipm_iterations: iterations,
                repaired_pairs: 0,
                lower_bound: objective,
            },
            certificate: None,
        }
    };

    if n == 0 {
        return finish(&[], SolveStatus::Optimal, 0, None);
    }

    // KKT structure: constant off-diagonal blocks G and A
    let dim = n + me + mi;
    let mut entries = Vec::with_capacity(red.eq.cols.len() + red.ineq.cols.len());
    for i in 0..me {
        for p in red.eq.start[i]..red.eq.start[i + 1] {
            entries.push((n + i, red.eq.cols[p], red.eq.vals[p]));
        }
    }
    for i in 0..mi {
        for p in red.ineq.start[i]..red.ineq.start[i + 1] {
            entries.push((n + me + i, red.ineq.cols[p], red.ineq.vals[p]));
        }
    }
    let sign: Vec<f64> = (0..dim).map(|k| if k < n { 1.0 } else { -1.0 }).collect();
    let mut kkt = SymmetricFactor::new(dim, &entries, sign);

    let h: Vec<f64> = red.quad.iter().map(|q| 2.0 * q).collect();
    let c = &red.lin;
    let mut it = initial_point(&red, &lf, &uf);

    let hnorm = inf_norm(&red.eq.rhs);
    let bnorm = inf_norm(&red.ineq.rhs);
    let cnorm = inf_norm(c);
    let bound_scale = lf
        .iter()
        .map(|&j| red.lo[j].abs())
        .chain(uf.iter().map(|&j| red.hi[j].abs()))
        .fold(1.0f64, f64::max);

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut iterations = 0;
    let mut status = SolveStatus::IterationLimit;
    let mut certificate = None;

    for iter in 0..settings.max_iterations {
        iterations = iter;
        let Iterate { x, y, z, w, zl, zu } = &it;
        let sl: Vec<f64> = lf.iter().map(|&j| x[j] - red.lo[j]).collect();
        let su: Vec<f64> = uf.iter().map(|&j| red.hi[j] - x[j]).collect();

        let mut rd: Vec<f64> = (0..n).map(|j| h[j] * x[j] + c[j]).collect();
        red.eq.apply_t_add(y, &mut rd);
        red.ineq.apply_t_add(z, &mut rd);
        for (k, &j) in lf.iter().enumerate() {
            rd[j] -= zl[k];
        }
        for (k, &j) in uf.iter().enumerate() {
            rd[j] += zu[k];
        }
        let gx = red.eq.apply(x);
        let rp: Vec<f64> = gx.iter().zip(&red.eq.rhs).map(|(a, b)| a - b).collect();
        let ax = red.ineq.apply(x);
        let ri: Vec<f64> =
            (0..mi).map(|i| ax[i] + w[i] - red.ineq.rhs[i]).collect();

        let comp = dot(w, z) + dot(&sl, zl) + dot(&su, zu);
        let mu = if m_comp > 0 { comp / m_comp as f64 } else { 0.0 };
        let xhx: f64 = (0..n).map(|j| h[j] * x[j] * x[j]).sum();
        let pobj = 0.5 * xhx + dot(c, x);
        let dobj = -0.5 * xhx - dot(&red.eq.rhs, y) - dot(&red.ineq.rhs, z)
            + lf.iter().zip(zl).map(|(&j, v)| red.lo[j] * v).sum::<f64>()
            - uf.iter().zip(zu).map(|(&j, v)| red.hi[j] * v).sum::<f64>();

        let pres = (inf_norm(&rp) / (1.0 + hnorm)).max(inf_norm(&ri) / (1.0 + bnorm));
        let dres = inf_norm(&rd) / (1.0 + cnorm);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs());
        let merit = pres.max(dres).max(gap);
        if pres <= settings.tolerance && dres <= settings.tolerance && gap <= settings.tolerance
        {
            status = SolveStatus::Optimal;
            best = Some((merit, x.clone()));
            break;
        }
        if pres <= settings.acceptable
            && dres <= settings.acceptable
            && gap <= settings.acceptable
            && best.as_ref().is_none_or(|(m, _)| merit < *m)
        {
            best = Some((merit, x.clone()));
        }

        // divergence checks
        if inf_norm(x) > 1e12 * bound_scale {
            status = SolveStatus::Unbounded;
            best = None;
            break;
        }
        if iter > 5 && pres > settings.acceptable {
            if let Some(cert) = farkas_ray(&red, &lf, &uf, y, z, zl, zu) {
                status = SolveStatus::Infeasible;
                certificate = Some(cert);
                best = None;
                break;
            }
        }

        // Newton system
        for j in 0..n {
            let mut d = h[j];
            if let Ok(k) = lf.binary_search(&j) {
                d += zl[k] / sl[k];
            }
            if let Ok(k) = uf.binary_search(&j) {
                d += zu[k] / su[k];
            }
            kkt.set_diag(j, d);
        }
        for i in 0..me {
            kkt.set_diag(n + i, 0.0);
        }
        for i in 0..mi {
            kkt.set_diag(n + me + i, -w[i] / z[i]);
        }
        kkt.factor(STATIC_REG, PIVOT_FLOOR);

        let solve = |rcw: &[f64], rcl: &[f64], rcu: &[f64]| {
            let mut rhs = vec![0.0; dim];
            for j in 0..n {
                rhs[j] = -rd[j];
            }
            for (k, &j) in lf.iter().enumerate() {
                rhs[j] -= rcl[k] / sl[k];
            }
            for (k, &j) in uf.iter().enumerate() {
                rhs[j] += rcu[k] / su[k];
            }
            for i in 0..me {
                rhs[n + i] = -rp[i];
            }
            for i in 0..mi {
                rhs[n + me + i] = -ri[i] + rcw[i] / z[i];
            }
            let sol = kkt.solve_refined(&rhs, 3);
            let dx = sol[..n].to_vec();
            let dy = sol[n..n + me].to_vec();
            let dz = sol[n + me..].to_vec();
            let adx = red.ineq.apply(&dx);
            let dw: Vec<f64> = (0..mi).map(|i| -ri[i] - adx[i]).collect();
            let dzl: Vec<f64> = lf
                .iter()
                .enumerate()
                .map(|(k, &j)| (-rcl[k] - zl[k] * dx[j]) / sl[k])
                .collect();
            let dzu: Vec<f64> = uf
                .iter()
                .enumerate()
                .map(|(k, &j)| (-rcu[k] + zu[k] * dx[j]) / su[k])
                .collect();
            (dx, dy, dz, dw, dzl, dzu)
        };

        let step_lengths = |dx: &[f64], dz: &[f64], dw: &[f64], dzl: &[f64], dzu: &[f64]| {
            let dsl: Vec<f64> = lf.iter().map(|&j| dx[j]).collect();
            let dsu: Vec<f64> = uf.iter().map(|&j| -dx[j]).collect();
            let ap = max_step(w, dw).min(max_step(&sl, &dsl)).min(max_step(&su, &dsu));
            let ad = max_step(z, dz).min(max_step(zl, dzl)).min(max_step(zu, dzu));
            (ap, ad, dsl, dsu)
        };

        // predictor
        let rcw: Vec<f64> = (0..mi).map(|i| w[i] * z[i]).collect();
        let rcl: Vec<f64> = (0..lf.len()).map(|k| sl[k] * zl[k]).collect();
        let rcu: Vec<f64> = (0..uf.len()).map(|k| su[k] * zu[k]).collect();
        let (dx, _, dz, dw, dzl, dzu) = solve(&rcw, &rcl, &rcu);
        let (ap, ad, dsl, dsu) = step_lengths(&dx, &dz, &dw, &dzl, &dzu);
        let a_aff = ap.min(ad);
        let mu_aff = if m_comp > 0 {
            let mut acc = 0.0;
            for i in 0..mi {
                acc += (w[i] + a_aff * dw[i]) * (z[i] + a_aff * dz[i]);
            }
            for k in 0..lf.len() {
                acc += (sl[k] + a_aff * dsl[k]) * (zl[k] + a_aff * dzl[k]);
            }
            for k in 0..uf.len() {
                acc += (su[k] + a_aff * dsu[k]) * (zu[k] + a_aff * dzu[k]);
            }
            acc / m_comp as f64
        } else {
            0.0
        };
        let sigma = if mu > 0.0 { (mu_aff / mu).clamp(0.0, 1.0).powi(3) } else { 0.0 };

        // corrector
        let target = sigma * mu;
        let rcw: Vec<f64> = (0..mi).map(|i| w[i] * z[i] + dw[i] * dz[i] - target).collect();
        let rcl: Vec<f64> =
            (0..lf.len()).map(|k| sl[k] * zl[k] + dsl[k] * dzl[k] - target).collect();
        let rcu: Vec<f64> =
            (0..uf.len()).map(|k| su[k] * zu[k] + dsu[k] * dzu[k] - target).collect();
        let (dx, dy, dz, dw, dzl, dzu) = solve(&rcw, &rcl, &rcu);
        let (ap, ad, _, _) = step_lengths(&dx, &dz, &dw, &dzl, &dzu);
        let alpha = (settings.step_fraction * ap.min(ad)).min(1.0);

        let next = Iterate {
            x: x.iter().zip(&dx).map(|(a, d)| a + alpha * d).collect(),
            y: y.iter().zip(&dy).map(|(a, d)| a + alpha * d).collect(),
            z: z.iter().zip(&dz).map(|(a, d)| a + alpha * d).collect(),
            w: w.iter().zip(&dw).map(|(a, d)| a + alpha * d).collect(),
            zl: zl.iter().zip(&dzl).map(|(a, d)| a + alpha * d).collect(),
            zu: zu.iter().zip(&dzu).map(|(a, d)| a + alpha * d).collect(),
        };
        it = next;
        // keep iterates strictly inside the bounds despite rounding
        for &j in &lf {
            if it.x[j] <= red.lo[j] {
                it.x[j] = red.lo[j] + 1e-14 * (1.0 + red.lo[j].abs());
            }
        }
        for &j in &uf {
            if it.x[j] >= red.hi[j] {
                it.x[j] = red.hi[j] - 1e-14 * (1.0 + red.hi[j].abs());
            }
        }
        if alpha < 1e-12 {
            break;
        }
    }

    match (status, best) {
        (SolveStatus::Infeasible, _) => {
            let mut s = QpSolution::failed(SolveStatus::Infeasible, n_full);
            s.certificate = certificate;
            s.stats.ipm_iterations = iterations;
            s
        }
        (SolveStatus::Unbounded, _) => {
            let mut s = QpSolution::failed(SolveStatus::Unbounded, n_full);
            s.stats.ipm_iterations = iterations;
            s
        }
        (_, Some((_, x))) => {
            let duals = (
                it.y.as_slice(),
                it.z.as_slice(),
                it.zl.as_slice(),
                it.zu.as_slice(),
            );
            finish(&x, SolveStatus::Optimal, iterations, Some(duals))
        }
        (_, None) => {
            // stalled without reaching the acceptable level: look for a
            // certificate of infeasibility before giving up
            if let Some(cert) = farkas_ray(&red, &lf, &uf, &it.y, &it.z, &it.zl, &it.zu) {
                let mut s = QpSolution::failed(SolveStatus::Infeasible, n_full);
                s.certificate = Some(cert);
                s.stats.ipm_iterations = iterations;
                return s;
            }
            let duals = (
                it.y.as_slice(),
                it.z.as_slice(),
                it.zl.as_slice(),
                it.zu.as_slice(),
            );
            finish(&it.x, SolveStatus::IterationLimit, iterations, Some(duals))
        }
    }
}

fn initial_point(red: &Reduced, lf: &[usize], uf: &[usize]) -> Iterate {
    let n = red.free.len();
    let x: Vec<f64> = (0..n)
        .map(|j| {
            let (lo, hi) = (red.lo[j], red.hi[j]);
            match (lo.is_finite(), hi.is_finite()) {
                (true, true) => {
                    let width = hi - lo;
                    (0.0f64).clamp(lo + 0.1 * width, hi - 0.1 * width)
                }
                (true, false) => lo.max(0.0) + 1.0,
                (false, true) => hi.min(0.0) - 1.0,
                (false, false) => 0.0,
            }
        })
        .collect();
    let ax = red.ineq.apply(&x);
    let w: Vec<f64> = ax.iter().zip(&red.ineq.rhs).map(|(a, b)| (b - a).max(1.0)).collect();
    Iterate {
        x,
        y: vec![0.0; red.eq.len()],
        z: vec![1.0; red.ineq.len()],
        w,
        zl: vec![1.0; lf.len()],
        zu: vec![1.0; uf.len()],
    }
}

/// Checks whether the (diverging) dual iterate approximates a Farkas ray;
/// returns the normalised residual of the ray if it does.
fn farkas_ray(
    red: &Reduced,
    lf: &[usize],
    uf: &[usize],
    y: &[f64],
    z: &[f64],
    zl: &[f64],
    zu: &[f64],
) -> Option<f64> {
    let m = inf_norm(y).max(inf_norm(z)).max(inf_norm(zl)).max(inf_norm(zu));
    if !(m > 1e6) {
        return None;
    }
    let n = red.free.len();
    let mut r = vec![0.0; n];
    red.eq.apply_t_add(y, &mut r);
    red.ineq.apply_t_add(z, &mut r);
    for (k, &j) in lf.iter().enumerate() {
        r[j] -= zl[k];
    }
    for (k, &j) in uf.iter().enumerate() {
        r[j] += zu[k];
    }
    let res = inf_norm(&r) / m;
    let value = (-dot(&red.eq.rhs, y) - dot(&red.ineq.rhs, z)
        + lf.iter().zip(zl).map(|(&j, v)| red.lo[j] * v).sum::<f64>()
        - uf.iter().zip(zu).map(|(&j, v)| red.hi[j] * v).sum::<f64>())
        / m;
    (value > 1e-8 && res <= 1e-6 * (1.0 + value)).then_some(res / value)
}

#[allow(clippy::too_many_arguments)]
fn original_residuals(
    problem: &QpProblem,
    red: &Reduced,
    x: &[f64],
    y: &[f64],
    z: &[f64],
    zl: &[f64],
    zu: &[f64],
    lf: &[usize],
    uf: &[usize],
) -> KktResiduals {
    let s = red.obj_scale;
    // unscale multipliers back to the original rows and objective
    let mut ye = vec![0.0; problem.eq.len()];
    for (i, &o) in red.eq.origin.iter().enumerate() {
        ye[o] = y[i] * red.eq.scale[i] / s;
    }
    let mut zi = vec![0.0; problem.ineq.len()];
    for (i, &o) in red.ineq.origin.iter().enumerate() {
        zi[o] = z[i] * red.ineq.scale[i] / s;
    }
    let mut grad: Vec<f64> =
        (0..x.len()).map(|j| 2.0 * problem.quad[j] * x[j] + problem.linear[j]).collect();
    problem.eq.apply_transpose_add(&ye, &mut grad);
    problem.ineq.apply_transpose_add(&zi, &mut grad);
    for (k, &r) in lf.iter().enumerate() {
        grad[red.free[r]] -= zl[k] / s;
    }
    for (k, &r) in uf.iter().enumerate() {
        grad[red.free[r]] += zu[k] / s;
    }
    let cnorm = inf_norm(&problem.linear);
    let dual = red.free.iter().map(|&j| grad[j].abs()).fold(0.0, f64::max) / (1.0 + cnorm);
    let ax = problem.ineq.apply(x);
    let mut comp: f64 = 0.0;
    for (i, a) in ax.iter().enumerate() {
        comp = comp.max(zi[i] * (problem.ineq.rhs()[i] - a).abs());
    }
    for (k, &r) in lf.iter().enumerate() {
        let j = red.free[r];
        comp = comp.max(zl[k] / s * (x[j] - problem.lower[j]).abs());
    }
    for (k, &r) in uf.iter().enumerate() {
        let j = red.free[r];
        comp = comp.max(zu[k] / s * (problem.upper[j] - x[j]).abs());
    }
    KktResiduals {
        primal: problem.max_violation(x).max(0.0),
        dual,
        complementarity: comp / (1.0 + problem.objective(x).abs()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_var(lower: f64, upper: f64, quad: f64, linear: f64) -> QpProblem {
        let mut p = QpProblem::new();
        p.add_var(lower, upper, quad, linear);
        p
    }

    #[test]
    fn active_bound() {
        // (x - 1)^2 with x <= 0
        let mut p = one_var(f64::NEG_INFINITY, f64::INFINITY, 1.0, -2.0);
        p.constant = 1.0;
        p.ineq.push(&[(0, 1.0)], 0.0);
        let s = solve_qp(&p, &IpmSettings::default());
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!(s.x[0].abs() < 1e-7, "{}", s.x[0]);
        assert!((s.objective - 1.0).abs() < 1e-7);
        assert!(s.residuals.dual < 1e-6 && s.residuals.primal < 1e-6);
    }

    #[test]
    fn symmetric_equality() {
        let mut p = QpProblem::new();
        p.add_var(f64::NEG_INFINITY, f64::INFINITY, 1.0, 0.0);
        p.add_var(f64::NEG_INFINITY, f64::INFINITY, 1.0, 0.0);
        p.eq.push(&[(0, 1.0), (1, 1.0)], 2.0);
        let s = solve_qp(&p, &IpmSettings::default());
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.x[0] - 1.0).abs() < 1e-7 && (s.x[1] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn infeasible_detected() {
        let mut p = one_var(0.0, 10.0, 1.0, 0.0);
        p.add_var(0.0, 10.0, 0.0, 1.0);
        p.ineq.push(&[(0, 1.0), (1, 1.0)], -1.0);
        let s = solve_qp(&p, &IpmSettings::default());
        assert_eq!(s.status, SolveStatus::Infeasible);
        assert!(s.certificate.is_some());
    }

    #[test]
    fn infeasible_equalities_detected() {
        let mut p = QpProblem::new();
        p.add_var(f64::NEG_INFINITY, f64::INFINITY, 1.0, 0.0);
        p.eq.push(&[(0, 1.0)], 1.0);
        p.ineq.push(&[(0, 1.0)], 0.0);
        let s = solve_qp(&p, &IpmSettings::default());
        assert_eq!(s.status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let p = one_var(0.0, f64::INFINITY, 0.0, -1.0);
        let s = solve_qp(&p, &IpmSettings::default());
        assert_eq!(s.status, SolveStatus::Unbounded);
    }

    #[test]
    fn fixed_variables_substituted() {
        let mut p = QpProblem::new();
        p.add_var(3.0, 3.0, 0.0, 1.0);
        p.add_var(0.0, 10.0, 1.0, 0.0);
        p.eq.push(&[(0, 1.0), (1, 1.0)], 5.0);
        let s = solve_qp(&p, &IpmSettings::default());
        assert_eq!(s.status, SolveStatus::Optimal);
        assert_eq!(s.x[0], 3.0);
        assert!((s.x[1] - 2.0).abs() < 1e-7);
        assert!((s.objective - 7.0).abs() < 1e-6);
    }

    #[test]
    fn inconsistent_fixed_rows_infeasible() {
        let mut p = QpProblem::new();
        p.add_var(1.0, 1.0, 0.0, 0.0);
        p.eq.push(&[(0, 1.0)], 2.0);
        assert_eq!(solve_qp(&p, &IpmSettings::default()).status, SolveStatus::Infeasible);
    }
}
