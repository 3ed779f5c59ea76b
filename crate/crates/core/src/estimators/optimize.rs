//! Multi-start Nelder–Mead on transformed coordinates with a projected
//! quasi-Newton polish.
//!
//! Positive scales are searched in `log`, decay rates in `logit` and
//! correlations in `atanh`, so the box `Ω` maps to a box in search space and
//! every simplex vertex is projected back into it.

use serde::{Deserialize, Serialize};

use super::kernel::ParamRole;

/// Tunables exposed through configuration files and the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerOptions {
    pub starts: usize,
    pub max_iters: usize,
    pub tol_cost: f64,
    pub tol_step: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            starts: 8,
            max_iters: 2000,
            tol_cost: 1e-12,
            tol_step: 1e-10,
        }
    }
}

/// A cost over the original (untransformed) hyper-parameters.
///
/// `None` marks an infeasible point, e.g. a factorization failure.
pub trait Objective {
    fn value(&self, eta: &[f64]) -> Option<f64>;
    fn value_grad(&self, eta: &[f64]) -> Option<(f64, Vec<f64>)>;
}

/// Outcome of [`minimize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub eta: Vec<f64>,
    pub value: f64,
    pub starts: usize,
    pub iterations: usize,
    pub converged: bool,
    pub at_boundary: bool,
    /// Initial points of every local search and their costs.
    pub initial_points: Vec<(Vec<f64>, f64)>,
}

#[derive(Debug, Clone, Copy)]
struct Coord {
    role: ParamRole,
    lo: f64,
    hi: f64,
}

impl Coord {
    fn to_search(&self, x: f64) -> f64 {
        match self.role {
            ParamRole::Scale => x.ln(),
            ParamRole::Decay => (x / (1.0 - x)).ln(),
            ParamRole::Correlation => x.atanh(),
        }
    }

    fn from_search(&self, z: f64) -> f64 {
        let x = match self.role {
            ParamRole::Scale => z.exp(),
            ParamRole::Decay => 1.0 / (1.0 + (-z).exp()),
            ParamRole::Correlation => z.tanh(),
        };
        x.clamp(self.lo, self.hi)
    }

    /// `dx/dz` at search coordinate `z`.
    fn jacobian(&self, z: f64) -> f64 {
        match self.role {
            ParamRole::Scale => z.exp(),
            ParamRole::Decay => {
                let s = 1.0 / (1.0 + (-z).exp());
                s * (1.0 - s)
            }
            ParamRole::Correlation => {
                let t = z.tanh();
                1.0 - t * t
            }
        }
    }

    fn search_bounds(&self) -> (f64, f64) {
        (self.to_search(self.lo), self.to_search(self.hi))
    }
}

struct Problem<'a, O: Objective> {
    objective: &'a O,
    coords: Vec<Coord>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    evaluations: std::cell::Cell<usize>,
}

impl<'a, O: Objective> Problem<'a, O> {
    fn new(objective: &'a O, roles: &[ParamRole], bounds: &[(f64, f64)]) -> Self {
        let coords: Vec<Coord> = roles
            .iter()
            .zip(bounds)
            .map(|(&role, &(lo, hi))| Coord { role, lo, hi })
            .collect();
        let (lo, hi) = coords.iter().map(|c| c.search_bounds()).unzip();
        Self {
            objective,
            coords,
            lo,
            hi,
            evaluations: std::cell::Cell::new(0),
        }
    }

    fn project(&self, z: &mut [f64]) {
        for (i, v) in z.iter_mut().enumerate() {
            *v = v.clamp(self.lo[i], self.hi[i]);
        }
    }

    fn eta(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(&self.coords)
            .map(|(&v, c)| c.from_search(v))
            .collect()
    }

    fn value(&self, z: &[f64]) -> f64 {
        self.evaluations.set(self.evaluations.get() + 1);
        match self.objective.value(&self.eta(z)) {
            Some(v) if v.is_finite() => v,
            _ => f64::INFINITY,
        }
    }

    fn value_grad(&self, z: &[f64]) -> Option<(f64, Vec<f64>)> {
        self.evaluations.set(self.evaluations.get() + 1);
        let (v, g) = self.objective.value_grad(&self.eta(z))?;
        if !v.is_finite() || g.iter().any(|x| !x.is_finite()) {
            return None;
        }
        let gz = g
            .iter()
            .zip(z)
            .zip(&self.coords)
            .map(|((gi, &zi), c)| gi * c.jacobian(zi))
            .collect();
        Some((v, gz))
    }
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    false
}

/// Lattice of `k^p` interior points with `k^p >= starts`, best `starts` kept.
fn initial_points<O: Objective>(problem: &Problem<'_, O>, starts: usize) -> Vec<(Vec<f64>, f64)> {
    let p = problem.coords.len();
    let mut k = 2usize;
    while k.pow(p as u32) < starts {
        k += 1;
    }
    if p == 1 {
        k = starts.max(1);
    }
    let total = k.pow(p as u32);
    let mut points: Vec<(Vec<f64>, f64)> = (0..total)
        .map(|mut idx| {
            let z: Vec<f64> = (0..p)
                .map(|d| {
                    let i = idx % k;
                    idx /= k;
                    let t = (i as f64 + 0.5) / k as f64;
                    problem.lo[d] + t * (problem.hi[d] - problem.lo[d])
                })
                .collect();
            let v = problem.value(&z);
            (z, v)
        })
        .collect();
    points.sort_by(|a, b| {
        a.1.total_cmp(&b.1).then_with(|| {
            if lex_less(&a.0, &b.0) {
                std::cmp::Ordering::Less
            } else if lex_less(&b.0, &a.0) {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Equal
            }
        })
    });
    points.truncate(starts.max(1));
    points
}

struct LocalResult {
    z: Vec<f64>,
    value: f64,
    iterations: usize,
    converged: bool,
}

fn nelder_mead<O: Objective>(
    problem: &Problem<'_, O>,
    start: &[f64],
    step: &[f64],
    opts: &OptimizerOptions,
) -> LocalResult {
    let p = start.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(p + 1);
    simplex.push(start.to_vec());
    for d in 0..p {
        let mut v = start.to_vec();
        // step inward when the start sits near the upper bound
        v[d] = if v[d] + step[d] <= problem.hi[d] {
            v[d] + step[d]
        } else {
            v[d] - step[d]
        };
        problem.project(&mut v);
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| problem.value(v)).collect();

    // the simplex only has to reach the basin; the Newton polish finishes
    let (tol_cost, tol_step) = (opts.tol_cost.sqrt(), opts.tol_step.sqrt());
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iters {
        let mut order: Vec<usize> = (0..=p).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let best = values[0];
        let worst = values[p];
        let diameter = simplex[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        let scale = 1.0 + simplex[0].iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if best.is_finite()
            && (worst - best).abs() <= tol_cost * (1.0 + best.abs())
            && diameter <= tol_step * scale
        {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; p];
        for v in &simplex[..p] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / p as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            let mut x: Vec<f64> = centroid
                .iter()
                .zip(&simplex[p])
                .map(|(c, w)| c + t * (c - w))
                .collect();
            problem.project(&mut x);
            x
        };

        let xr = along(alpha);
        let fr = problem.value(&xr);
        if fr < values[0] {
            let xe = along(gamma);
            let fe = problem.value(&xe);
            if fe < fr {
                simplex[p] = xe;
                values[p] = fe;
            } else {
                simplex[p] = xr;
                values[p] = fr;
            }
            continue;
        }
        if fr < values[p - 1] {
            simplex[p] = xr;
            values[p] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[p] {
            let x = along(rho);
            let f = problem.value(&x);
            (x, f)
        } else {
            let x = along(-rho);
            let f = problem.value(&x);
            (x, f)
        };
        if fc < values[p].min(fr) {
            simplex[p] = xc;
            values[p] = fc;
            continue;
        }
        // shrink toward the best vertex
        let best_vertex = simplex[0].clone();
        for i in 1..=p {
            let mut x: Vec<f64> = best_vertex
                .iter()
                .zip(&simplex[i])
                .map(|(b, v)| b + sigma * (v - b))
                .collect();
            problem.project(&mut x);
            values[i] = problem.value(&x);
            simplex[i] = x;
        }
    }
    let mut best = 0;
    for i in 1..=p {
        if values[i] < values[best] {
            best = i;
        }
    }
    LocalResult {
        z: simplex[best].clone(),
        value: values[best],
        iterations,
        converged,
    }
}

/// Projected Newton steps from a Nelder–Mead result, with the Hessian taken
/// from central differences of the analytic gradient; keeps only improvements.
fn polish<O: Objective>(
    problem: &Problem<'_, O>,
    local: &mut LocalResult,
    opts: &OptimizerOptions,
) {
    let p = local.z.len();
    let Some((mut f, mut g)) = problem.value_grad(&local.z) else {
        return;
    };
    let mut z = local.z.clone();
    let at_bound = |z: &[f64], g: &[f64], d: usize| {
        (z[d] <= problem.lo[d] && g[d] > 0.0) || (z[d] >= problem.hi[d] && g[d] < 0.0)
    };
    let projected_norm = |z: &[f64], g: &[f64]| {
        (0..p)
            .filter(|&d| !at_bound(z, g, d))
            .map(|d| g[d] * g[d])
            .sum::<f64>()
            .sqrt()
    };
    for _ in 0..50 {
        let free: Vec<usize> = (0..p).filter(|&d| !at_bound(&z, &g, d)).collect();
        let pg = projected_norm(&z, &g);
        if pg <= 1e-10 * (1.0 + f.abs()) || free.is_empty() {
            local.converged = true;
            break;
        }
        let Some(hess) = fd_hessian(problem, &z, &free) else {
            break;
        };
        let gf = nalgebra::DVector::from_iterator(free.len(), free.iter().map(|&d| g[d]));
        let scale = hess.diagonal().amax().max(f64::MIN_POSITIVE);
        let mut shift = 0.0;
        let step = loop {
            let h = &hess + nalgebra::DMatrix::identity(free.len(), free.len()) * shift;
            if let Some(ch) = h.cholesky() {
                break Some(-ch.solve(&gf));
            }
            shift = if shift == 0.0 {
                1e-10 * scale
            } else {
                shift * 10.0
            };
            if shift > 1e10 * scale {
                break None;
            }
        };
        let Some(step) = step else {
            break;
        };
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let mut trial = z.clone();
            for (i, &d) in free.iter().enumerate() {
                trial[d] += t * step[i];
            }
            problem.project(&mut trial);
            let decrease: f64 = trial
                .iter()
                .zip(&z)
                .zip(&g)
                .map(|((a, b), gi)| (a - b) * gi)
                .sum();
            if let Some((ft, gt)) = problem.value_grad(&trial) {
                // near the minimum the cost change drops below rounding, so a
                // smaller gradient at an unchanged cost also counts as progress
                let flat = ft <= f + 8.0 * f64::EPSILON * f.abs()
                    && projected_norm(&trial, &gt) < 0.5 * pg;
                if (ft <= f + 1e-4 * decrease.min(0.0) && ft <= f) || flat {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((znew, fnew, gnew)) = accepted else {
            break;
        };
        let moved = znew
            .iter()
            .zip(&z)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let gain = f - fnew;
        z = znew;
        f = fnew;
        g = gnew;
        if moved <= opts.tol_step * (1.0 + z.iter().fold(0.0f64, |m, x| m.max(x.abs())))
            && gain <= opts.tol_cost * (1.0 + f.abs())
        {
            local.converged = local.converged || projected_norm(&z, &g) <= 1e-8 * (1.0 + f.abs());
            break;
        }
    }
    if f <= local.value + 8.0 * f64::EPSILON * local.value.abs() {
        local.z = z;
        local.value = f;
    }
}

/// Symmetric Hessian over the `free` coordinates by central differences of
/// the gradient.
fn fd_hessian<O: Objective>(
    problem: &Problem<'_, O>,
    z: &[f64],
    free: &[usize],
) -> Option<nalgebra::DMatrix<f64>> {
    let m = free.len();
    let mut h = nalgebra::DMatrix::<f64>::zeros(m, m);
    for (j, &d) in free.iter().enumerate() {
        let step = 1e-5 * (1.0 + z[d].abs());
        let mut up = z.to_vec();
        let mut dn = z.to_vec();
        up[d] = (z[d] + step).min(problem.hi[d]);
        dn[d] = (z[d] - step).max(problem.lo[d]);
        let (_, gu) = problem.value_grad(&up)?;
        let (_, gd) = problem.value_grad(&dn)?;
        for (i, &e) in free.iter().enumerate() {
            h[(i, j)] = (gu[e] - gd[e]) / (up[d] - dn[d]);
        }
    }
    Some((&h + h.transpose()) * 0.5)
}

/// Minimizes `objective` over the box `bounds` (one role per coordinate).
pub fn minimize<O: Objective>(
    objective: &O,
    roles: &[ParamRole],
    bounds: &[(f64, f64)],
    opts: &OptimizerOptions,
) -> Minimum {
    assert_eq!(roles.len(), bounds.len());
    let problem = Problem::new(objective, roles, bounds);
    let p = roles.len();
    let starts = initial_points(&problem, opts.starts.max(1));
    let spacing: Vec<f64> = (0..p)
        .map(|d| {
            let k = if p == 1 {
                starts.len().max(1) as f64
            } else {
                (starts.len() as f64).powf(1.0 / p as f64).ceil()
            };
            0.5 * (problem.hi[d] - problem.lo[d]) / k
        })
        .collect();

    let mut best: Option<LocalResult> = None;
    let mut iterations = 0;
    for (z0, _) in &starts {
        let mut local = nelder_mead(&problem, z0, &spacing, opts);
        if local.value.is_finite() {
            polish(&problem, &mut local, opts);
        }
        iterations += local.iterations;
        let better = match &best {
            None => true,
            Some(b) => {
                local.value < b.value || (local.value == b.value && lex_less(&local.z, &b.z))
            }
        };
        if better {
            best = Some(local);
        }
    }
    let best = best.expect("at least one start");
    let at_boundary = best.z.iter().enumerate().any(|(d, &z)| {
        let tol = 1e-8 * (1.0 + problem.lo[d].abs().max(problem.hi[d].abs()));
        (z - problem.lo[d]).abs() <= tol || (problem.hi[d] - z).abs() <= tol
    });
    Minimum {
        eta: problem.eta(&best.z),
        value: best.value,
        starts: starts.len(),
        iterations,
        converged: best.converged && best.value.is_finite(),
        at_boundary,
        initial_points: starts.iter().map(|(z, v)| (problem.eta(z), *v)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic {
        center: Vec<f64>,
    }

    impl Objective for Quadratic {
        fn value(&self, x: &[f64]) -> Option<f64> {
            Some(
                x.iter()
                    .zip(&self.center)
                    .map(|(a, b)| (a.ln() - b.ln()).powi(2))
                    .sum(),
            )
        }
        fn value_grad(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
            let g = x
                .iter()
                .zip(&self.center)
                .map(|(a, b)| 2.0 * (a.ln() - b.ln()) / a)
                .collect();
            Some((self.value(x)?, g))
        }
    }

    #[test]
    fn finds_interior_minimum() {
        let obj = Quadratic {
            center: vec![3.0, 0.02],
        };
        let roles = [ParamRole::Scale, ParamRole::Scale];
        let bounds = [(1e-6, 1e6), (1e-6, 1e6)];
        let m = minimize(&obj, &roles, &bounds, &OptimizerOptions::default());
        assert!((m.eta[0] - 3.0).abs() < 1e-8);
        assert!((m.eta[1] - 0.02).abs() < 1e-10);
        assert!(m.converged);
        assert!(!m.at_boundary);
        for (_, v) in &m.initial_points {
            assert!(m.value <= *v);
        }
    }

    #[test]
    fn reports_boundary_hits() {
        let obj = Quadratic { center: vec![1e3] };
        let roles = [ParamRole::Scale];
        let bounds = [(1e-3, 10.0)];
        let m = minimize(&obj, &roles, &bounds, &OptimizerOptions::default());
        assert!((m.eta[0] - 10.0).abs() < 1e-9);
        assert!(m.at_boundary);
    }

    #[test]
    fn transforms_roundtrip() {
        for (role, x) in [
            (ParamRole::Scale, 0.37),
            (ParamRole::Decay, 0.91),
            (ParamRole::Correlation, -0.42),
        ] {
            let c = Coord {
                role,
                lo: -1.0 + 1e-9,
                hi: 1e9,
            };
            let c = Coord {
                lo: if role == ParamRole::Correlation {
                    -0.99
                } else {
                    1e-9
                },
                hi: if role == ParamRole::Scale { 1e9 } else { 0.999 },
                ..c
            };
            assert!((c.from_search(c.to_search(x)) - x).abs() < 1e-14);
        }
    }
}
