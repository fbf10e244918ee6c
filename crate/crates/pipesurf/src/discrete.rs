//! Uniform (θ, ω) grids, staggered grid functions, the seven difference
//! operators, weighted inner products and discrete norms.
//!
//! θ is always periodic with period 2π. In ω the grid is either open with
//! homogeneous Dirichlet rows at j = 0 and j = N, or fully periodic. Out of
//! range ω indices read as zero in Dirichlet mode and wrap in periodic mode,
//! so every operator is defined at every node.

use crate::geometry::BoundaryMode;
use crate::{Error, Result};

/// Where a field's samples live relative to the node lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Staggering {
    /// (θ_i, ω_j).
    Node,
    /// (θ_{i+1/2}, ω_j).
    ThetaHalf,
    /// (θ_i, ω_{j+1/2}).
    OmegaHalf,
}

impl std::fmt::Display for Staggering {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Staggering::Node => "node",
            Staggering::ThetaHalf => "theta-half",
            Staggering::OmegaHalf => "omega-half",
        };
        f.write_str(name)
    }
}

/// Uniform tensor grid: `θ_i = i·hθ` (i = 0..M−1, periodic) and
/// `ω_j = ω_l + j·hω` (j = 0..N).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    m: usize,
    n: usize,
    h_theta: f64,
    h_omega: f64,
    omega_l: f64,
    omega_r: f64,
    boundary: BoundaryMode,
}

impl Grid {
    /// # Errors
    ///
    /// `DomainError` for empty intervals, undersized grids, or aspect ratio
    /// `max(hθ,hω)/min(hθ,hω)` above 4 (the scheme's quasi-uniformity bound).
    pub fn new(
        m: usize,
        n: usize,
        omega_interval: (f64, f64),
        boundary: BoundaryMode,
    ) -> Result<Grid> {
        let (omega_l, omega_r) = omega_interval;
        if !(omega_r > omega_l) {
            return Err(Error::DomainError(format!(
                "omega interval [{omega_l}, {omega_r}] is empty"
            )));
        }
        if m < 3 || n < 2 {
            return Err(Error::DomainError(format!(
                "grid {m} x {n} is too small; need M >= 3, N >= 2"
            )));
        }
        let h_theta = 2.0 * std::f64::consts::PI / m as f64;
        let h_omega = (omega_r - omega_l) / n as f64;
        let ratio = h_theta.max(h_omega) / h_theta.min(h_omega);
        if ratio > 4.0 {
            return Err(Error::DomainError(format!(
                "grid {m} x {n} has mesh ratio {ratio:.2} > 4; refine the coarse direction"
            )));
        }
        Ok(Grid {
            m,
            n,
            h_theta,
            h_omega,
            omega_l,
            omega_r,
            boundary,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h_theta(&self) -> f64 {
        self.h_theta
    }

    pub fn h_omega(&self) -> f64 {
        self.h_omega
    }

    /// The mesh size h = max(hθ, hω) used in convergence reporting.
    pub fn h(&self) -> f64 {
        self.h_theta.max(self.h_omega)
    }

    pub fn boundary_mode(&self) -> BoundaryMode {
        self.boundary
    }

    pub fn periodic_omega(&self) -> bool {
        self.boundary == BoundaryMode::PeriodicOmega
    }

    pub fn omega_interval(&self) -> (f64, f64) {
        (self.omega_l, self.omega_r)
    }

    pub fn theta(&self, i: isize) -> f64 {
        self.h_theta * i as f64
    }

    pub fn omega(&self, j: isize) -> f64 {
        self.omega_l + self.h_omega * j as f64
    }

    /// Rows of a field with the given staggering (the j extent).
    pub fn rows(&self, staggering: Staggering) -> usize {
        match (staggering, self.periodic_omega()) {
            (Staggering::Node | Staggering::ThetaHalf, false) => self.n + 1,
            (Staggering::Node | Staggering::ThetaHalf, true) => self.n,
            (Staggering::OmegaHalf, _) => self.n,
        }
    }
}

/// Scalar samples on the grid at one staggering. Storage is row-major over
/// j (the ω index varies fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    staggering: Staggering,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: Grid, staggering: Staggering) -> Self {
        let rows = grid.rows(staggering);
        GridFunction {
            grid,
            staggering,
            values: vec![0.0; grid.m * rows],
        }
    }

    /// Samples `f(θ, ω)` at the staggered coordinates.
    pub fn sample(grid: Grid, staggering: Staggering, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut u = GridFunction::zeros(grid, staggering);
        let rows = u.rows();
        let (dt, dw) = match staggering {
            Staggering::Node => (0.0, 0.0),
            Staggering::ThetaHalf => (0.5, 0.0),
            Staggering::OmegaHalf => (0.0, 0.5),
        };
        for i in 0..grid.m {
            for j in 0..rows {
                let theta = grid.h_theta * (i as f64 + dt);
                let omega = grid.omega_l + grid.h_omega * (j as f64 + dw);
                u.values[i * rows + j] = f(theta, omega);
            }
        }
        u
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn staggering(&self) -> Staggering {
        self.staggering
    }

    pub fn rows(&self) -> usize {
        self.grid.rows(self.staggering)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Reads with boundary semantics: θ wraps; ω wraps in periodic mode and
    /// reads zero outside the stored range in Dirichlet mode.
    pub fn get(&self, i: isize, j: isize) -> f64 {
        let rows = self.rows() as isize;
        let m = self.grid.m as isize;
        let i = i.rem_euclid(m);
        let j = if self.grid.periodic_omega() {
            j.rem_euclid(rows)
        } else if (0..rows).contains(&j) {
            j
        } else {
            return 0.0;
        };
        self.values[(i * rows + j) as usize]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let rows = self.rows();
        self.values[i * rows + j] = value;
    }

    /// Zeroes the Dirichlet rows j = 0 and j = N; no-op for periodic grids.
    pub fn project_to_space(&mut self) {
        if self.grid.periodic_omega() || self.staggering != Staggering::Node {
            return;
        }
        let rows = self.rows();
        for i in 0..self.grid.m {
            self.values[i * rows] = 0.0;
            self.values[i * rows + rows - 1] = 0.0;
        }
    }

    /// CSV dump `i,j,theta,omega,value`, one sample per line, header first.
    pub fn to_csv(&self) -> String {
        let (dt, dw) = match self.staggering {
            Staggering::Node => (0.0, 0.0),
            Staggering::ThetaHalf => (0.5, 0.0),
            Staggering::OmegaHalf => (0.0, 0.5),
        };
        let mut out = String::from("i,j,theta,omega,value\n");
        for i in 0..self.grid.m {
            for j in 0..self.rows() {
                let theta = self.grid.h_theta * (i as f64 + dt);
                let omega = self.grid.omega_l + self.grid.h_omega * (j as f64 + dw);
                out.push_str(&format!(
                    "{i},{j},{theta:.17e},{omega:.17e},{:.17e}\n",
                    self.values[i * self.rows() + j]
                ));
            }
        }
        out
    }
}

fn assert_node(u: &GridFunction, op: &str) {
    assert!(
        u.staggering == Staggering::Node,
        "{op} expects node-staggered input, got {}",
        u.staggering
    );
}

/// δθ: forward difference onto θ-half nodes, `(u_{i+1,j} − u_{ij})/hθ`.
pub fn diff_theta(u: &GridFunction) -> GridFunction {
    assert_node(u, "diff_theta");
    let g = u.grid;
    let mut out = GridFunction::zeros(g, Staggering::ThetaHalf);
    let rows = out.rows();
    for i in 0..g.m {
        for j in 0..rows {
            let v = (u.get(i as isize + 1, j as isize) - u.get(i as isize, j as isize)) / g.h_theta;
            out.values[i * rows + j] = v;
        }
    }
    out
}

/// δω: forward difference onto ω-half nodes, `(u_{i,j+1} − u_{ij})/hω`.
pub fn diff_omega(u: &GridFunction) -> GridFunction {
    assert_node(u, "diff_omega");
    let g = u.grid;
    let mut out = GridFunction::zeros(g, Staggering::OmegaHalf);
    let rows = out.rows();
    for i in 0..g.m {
        for j in 0..rows {
            let v = (u.get(i as isize, j as isize + 1) - u.get(i as isize, j as isize)) / g.h_omega;
            out.values[i * rows + j] = v;
        }
    }
    out
}

/// ∇θ: centered difference at nodes, `(u_{i+1,j} − u_{i−1,j})/(2hθ)`.
pub fn grad_theta(u: &GridFunction) -> GridFunction {
    assert_node(u, "grad_theta");
    node_map(u, |u, i, j| {
        (u.get(i + 1, j) - u.get(i - 1, j)) / (2.0 * u.grid.h_theta)
    })
}

/// ∇ω: centered difference at nodes, `(u_{i,j+1} − u_{i,j−1})/(2hω)`.
pub fn grad_omega(u: &GridFunction) -> GridFunction {
    assert_node(u, "grad_omega");
    node_map(u, |u, i, j| {
        (u.get(i, j + 1) - u.get(i, j - 1)) / (2.0 * u.grid.h_omega)
    })
}

/// δθ²: second difference at nodes.
pub fn second_diff_theta(u: &GridFunction) -> GridFunction {
    assert_node(u, "second_diff_theta");
    node_map(u, |u, i, j| {
        (u.get(i + 1, j) - 2.0 * u.get(i, j) + u.get(i - 1, j)) / (u.grid.h_theta * u.grid.h_theta)
    })
}

/// δω²: second difference at nodes.
pub fn second_diff_omega(u: &GridFunction) -> GridFunction {
    assert_node(u, "second_diff_omega");
    node_map(u, |u, i, j| {
        (u.get(i, j + 1) - 2.0 * u.get(i, j) + u.get(i, j - 1)) / (u.grid.h_omega * u.grid.h_omega)
    })
}

/// δωθ²: mixed second difference at nodes,
/// `(u_{i+1,j+1} − u_{i+1,j−1} − u_{i−1,j+1} + u_{i−1,j−1})/(4hθhω)`.
pub fn cross_diff(u: &GridFunction) -> GridFunction {
    assert_node(u, "cross_diff");
    let scale = 4.0 * u.grid.h_theta * u.grid.h_omega;
    node_map(u, move |u, i, j| {
        (u.get(i + 1, j + 1) - u.get(i + 1, j - 1) - u.get(i - 1, j + 1) + u.get(i - 1, j - 1))
            / scale
    })
}

fn node_map(u: &GridFunction, f: impl Fn(&GridFunction, isize, isize) -> f64) -> GridFunction {
    let g = u.grid;
    let mut out = GridFunction::zeros(g, Staggering::Node);
    let rows = out.rows();
    for i in 0..g.m {
        for j in 0..rows {
            out.values[i * rows + j] = f(u, i as isize, j as isize);
        }
    }
    out
}

/// Pairwise (cascade) summation: deterministic and far more accurate than a
/// running sum for the long reductions in the inner products.
fn pairwise(terms: &[f64]) -> f64 {
    if terms.len() <= 32 {
        return terms.iter().sum();
    }
    let mid = terms.len() / 2;
    pairwise(&terms[..mid]) + pairwise(&terms[mid..])
}

fn weighted_terms(u: &GridFunction, v: &GridFunction, w: Option<&GridFunction>) -> Vec<f64> {
    let rows = u.rows();
    let (j_lo, j_hi) = match (u.staggering, u.grid.periodic_omega()) {
        // Dirichlet sums skip the boundary rows; ω-half nodes are all
        // interior already.
        (Staggering::Node | Staggering::ThetaHalf, false) => (1, rows - 1),
        (Staggering::OmegaHalf, false) => (0, rows),
        (_, true) => (0, rows),
    };
    let mut terms = Vec::with_capacity(u.grid.m * (j_hi - j_lo));
    for i in 0..u.grid.m {
        for j in j_lo..j_hi {
            let idx = i * rows + j;
            let mut t = u.values[idx] * v.values[idx];
            if let Some(w) = w {
                t *= w.values[idx];
            }
            terms.push(t);
        }
    }
    terms
}

/// Weighted inner product `hθ hω Σ w u v` over the staggered index range:
/// nodes and θ-half nodes sum j = 1..N−1 (Dirichlet) or all rows (periodic);
/// ω-half nodes sum j = 0..N−1.
///
/// # Errors
///
/// `StaggeringMismatch` unless `u`, `v` and the weight share one staggering.
pub fn inner(u: &GridFunction, v: &GridFunction, w: Option<&GridFunction>) -> Result<f64> {
    for other in [Some(v), w].into_iter().flatten() {
        if other.staggering != u.staggering {
            return Err(Error::StaggeringMismatch {
                expected: u.staggering,
                got: other.staggering,
            });
        }
    }
    assert_eq!(u.grid, v.grid, "inner product needs a shared grid");
    let terms = weighted_terms(u, v, w);
    Ok(u.grid.h_theta * u.grid.h_omega * pairwise(&terms))
}

/// `√(u,u)_w` at the staggering of `u`.
pub fn norm(u: &GridFunction, w: Option<&GridFunction>) -> Result<f64> {
    Ok(inner(u, u, w)?.sqrt())
}

/// Weights for the three parts of the discrete H¹ norm, sampled at node,
/// θ-half and ω-half positions respectively.
pub struct H1Weights<'a> {
    pub node: &'a GridFunction,
    pub theta_half: &'a GridFunction,
    pub omega_half: &'a GridFunction,
}

/// Discrete H¹ norm `√(‖u‖² + ‖δθu‖²_θ + ‖δωu‖²_ω)`, optionally with one
/// weight field sampled at the three staggerings.
pub fn norm_h1(u: &GridFunction, weights: Option<&H1Weights<'_>>) -> Result<f64> {
    let dt = diff_theta(u);
    let dw = diff_omega(u);
    let (w0, wt, ww) = match weights {
        Some(w) => (Some(w.node), Some(w.theta_half), Some(w.omega_half)),
        None => (None, None, None),
    };
    Ok((inner(u, u, w0)? + inner(&dt, &dt, wt)? + inner(&dw, &dw, ww)?).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TAU: f64 = 2.0 * std::f64::consts::PI;

    fn dirichlet_grid(m: usize, n: usize) -> Grid {
        Grid::new(m, n, (0.0, TAU), BoundaryMode::DirichletOmega).unwrap()
    }

    fn periodic_grid(m: usize, n: usize) -> Grid {
        Grid::new(m, n, (0.0, TAU), BoundaryMode::PeriodicOmega).unwrap()
    }

    fn random_field(grid: Grid, staggering: Staggering, rng: &mut ChaCha8Rng) -> GridFunction {
        let mut u = GridFunction::zeros(grid, staggering);
        for v in u.values_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        u
    }

    fn random_member(grid: Grid, rng: &mut ChaCha8Rng) -> GridFunction {
        let mut u = random_field(grid, Staggering::Node, rng);
        u.project_to_space();
        u
    }

    #[test]
    fn mesh_ratio_above_four_is_rejected() {
        // hθ = 2π/8, hω = 2π/64: ratio 8.
        assert!(matches!(
            Grid::new(8, 64, (0.0, TAU), BoundaryMode::DirichletOmega),
            Err(Error::DomainError(_))
        ));
        assert!(Grid::new(8, 16, (0.0, TAU), BoundaryMode::DirichletOmega).is_ok());
    }

    #[test]
    fn constant_node_inner_counts_interior_nodes() {
        let g = dirichlet_grid(4, 4);
        let one = GridFunction::sample(g, Staggering::Node, |_, _| 1.0);
        let got = inner(&one, &one, None).unwrap();
        // 4 θ-columns times 3 interior ω-rows.
        let expect = g.h_theta() * g.h_omega() * 12.0;
        assert_eq!(got, expect);
    }

    #[test]
    fn doubling_the_weight_doubles_the_inner_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = dirichlet_grid(6, 8);
        let u = random_field(g, Staggering::Node, &mut rng);
        let v = random_field(g, Staggering::Node, &mut rng);
        let w = GridFunction::sample(g, Staggering::Node, |t, w| 1.5 + t.sin() * w.cos());
        let mut w2 = w.clone();
        for x in w2.values_mut() {
            *x *= 2.0;
        }
        let a = inner(&u, &v, Some(&w)).unwrap();
        let b = inner(&u, &v, Some(&w2)).unwrap();
        assert_eq!(2.0 * a, b);
    }

    #[test]
    fn inner_product_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for g in [dirichlet_grid(5, 7), periodic_grid(5, 7)] {
            let u = random_field(g, Staggering::Node, &mut rng);
            let v = random_field(g, Staggering::Node, &mut rng);
            assert_eq!(
                inner(&u, &v, None).unwrap(),
                inner(&v, &u, None).unwrap()
            );
        }
    }

    #[test]
    fn staggering_mismatch_is_an_error() {
        let g = dirichlet_grid(4, 4);
        let u = GridFunction::zeros(g, Staggering::Node);
        let v = GridFunction::zeros(g, Staggering::ThetaHalf);
        assert!(matches!(
            inner(&u, &v, None),
            Err(Error::StaggeringMismatch { .. })
        ));
    }

    #[test]
    fn sawtooth_has_unit_theta_gradient_off_the_wrap() {
        let g = dirichlet_grid(8, 8);
        let u = GridFunction::sample(g, Staggering::Node, |t, _| t);
        let gt = grad_theta(&u);
        for i in 1..7 {
            for j in 0..u.rows() {
                assert_eq!(gt.get(i, j as isize), 1.0, "node ({i},{j})");
            }
        }
    }

    #[test]
    fn second_differences_are_exact_on_quadratics() {
        let g = dirichlet_grid(6, 8);
        let u = GridFunction::sample(g, Staggering::Node, |_, w| w * w);
        let d2 = second_diff_omega(&u);
        for i in 0..6 {
            for j in 1..8 {
                assert!((d2.get(i, j) - 2.0).abs() < 1e-12, "j = {j}");
            }
        }
    }

    #[test]
    fn cross_difference_is_exact_on_bilinear_data() {
        let g = dirichlet_grid(8, 8);
        let u = GridFunction::sample(g, Staggering::Node, |t, w| t * w);
        let dtw = cross_diff(&u);
        for i in 1..7 {
            for j in 1..8 {
                assert!((dtw.get(i, j) - 1.0).abs() < 1e-12, "node ({i},{j})");
            }
        }
    }

    #[test]
    fn single_interior_node_h1_norm_matches_hand_expansion() {
        let g = dirichlet_grid(4, 4);
        let mut u = GridFunction::zeros(g, Staggering::Node);
        u.set(2, 2, 1.0);
        let (ht, hw) = (g.h_theta(), g.h_omega());
        let expect = (ht * hw * (1.0 + 2.0 / (ht * ht) + 2.0 / (hw * hw))).sqrt();
        let got = norm_h1(&u, None).unwrap();
        assert!((got - expect).abs() < 1e-14, "{got} vs {expect}");
    }

    #[test]
    fn h1_norm_dominates_l2_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = dirichlet_grid(6, 6);
        let u = random_member(g, &mut rng);
        assert!(norm_h1(&u, None).unwrap() >= norm(&u, None).unwrap());
        assert_eq!(norm_h1(&GridFunction::zeros(g, Staggering::Node), None).unwrap(), 0.0);
    }

    /// Four summation-by-parts identities, exact up to roundoff: flux forms
    /// against δ in each direction, and the two mixed ∇ pairings.
    #[test]
    fn summation_by_parts_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for trial in 0..200 {
            let g = if trial % 2 == 0 {
                dirichlet_grid(6, 8)
            } else {
                periodic_grid(6, 8)
            };
            let u = random_member(g, &mut rng);
            let v = random_member(g, &mut rng);
            let mut phi_t = random_field(g, Staggering::ThetaHalf, &mut rng);
            let mut phi_w = random_field(g, Staggering::OmegaHalf, &mut rng);
            let mut phi_n = random_field(g, Staggering::Node, &mut rng);
            for phi in [&mut phi_t, &mut phi_w, &mut phi_n] {
                for x in phi.values_mut() {
                    *x = 0.5 + x.abs();
                }
            }

            // (δθ(φ δθ u), v) = −(φ δθ u, δθ v)_θ
            let du = diff_theta(&u);
            let mut flux = GridFunction::zeros(g, Staggering::Node);
            for i in 0..6i64 {
                for j in 0..flux.rows() as i64 {
                    let f = (phi_t.get(i as isize, j as isize) * du.get(i as isize, j as isize)
                        - phi_t.get(i as isize - 1, j as isize)
                            * du.get(i as isize - 1, j as isize))
                        / g.h_theta();
                    flux.set(i as usize, j as usize, f);
                }
            }
            let lhs = inner(&flux, &v, None).unwrap();
            let mut wdu = du.clone();
            for (x, p) in wdu.values_mut().iter_mut().zip(phi_t.values()) {
                *x *= p;
            }
            let rhs = -inner(&wdu, &diff_theta(&v), None).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()), "θ flux: {lhs} vs {rhs}");

            // (δω(φ δω u), v) = −(φ δω u, δω v)_ω
            let du = diff_omega(&u);
            let mut flux = GridFunction::zeros(g, Staggering::Node);
            for i in 0..6isize {
                for j in 0..flux.rows() as isize {
                    let f = (phi_w.get(i, j) * du.get(i, j) - phi_w.get(i, j - 1) * du.get(i, j - 1))
                        / g.h_omega();
                    flux.set(i as usize, j as usize, f);
                }
            }
            let lhs = inner(&flux, &v, None).unwrap();
            let mut wdu = du.clone();
            for (x, p) in wdu.values_mut().iter_mut().zip(phi_w.values()) {
                *x *= p;
            }
            let rhs = -inner(&wdu, &diff_omega(&v), None).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()), "ω flux: {lhs} vs {rhs}");

            // (∇θ(φ ∇ω u), v) = −(φ ∇ω u, ∇θ v) and the ω/θ swap.
            let mut g_field = grad_omega(&u);
            for (x, p) in g_field.values_mut().iter_mut().zip(phi_n.values()) {
                *x *= p;
            }
            let lhs = inner(&grad_theta(&g_field), &v, None).unwrap();
            let rhs = -inner(&g_field, &grad_theta(&v), None).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()), "θω mixed: {lhs} vs {rhs}");

            let mut g_field = grad_theta(&u);
            for (x, p) in g_field.values_mut().iter_mut().zip(phi_n.values()) {
                *x *= p;
            }
            let lhs = inner(&grad_omega(&g_field), &v, None).unwrap();
            let rhs = -inner(&g_field, &grad_omega(&v), None).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()), "ωθ mixed: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn theta_difference_obeys_the_inverse_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for g in [dirichlet_grid(8, 10), periodic_grid(8, 10)] {
            for _ in 0..50 {
                let u = random_member(g, &mut rng);
                let lhs = norm(&diff_theta(&u), None).unwrap();
                let rhs = 2.0 / g.h_theta() * norm(&u, None).unwrap();
                assert!(lhs <= rhs * (1.0 + 1e-12), "{lhs} > {rhs}");
            }
        }
    }

    #[test]
    fn cross_difference_commutes_with_gradient_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for g in [dirichlet_grid(7, 9), periodic_grid(7, 9)] {
            let u = random_field(g, Staggering::Node, &mut rng);
            let direct = cross_diff(&u);
            let tw = grad_theta(&grad_omega(&u));
            let wt = grad_omega(&grad_theta(&u));
            for i in 0..7 {
                for j in 0..direct.rows() as isize {
                    let a = direct.get(i, j);
                    let b = tw.get(i, j);
                    let c = wt.get(i, j);
                    assert!((a - b).abs() <= 1e-13 * (1.0 + a.abs()), "({i},{j}): {a} vs {b}");
                    assert!((a - c).abs() <= 1e-13 * (1.0 + a.abs()), "({i},{j}): {a} vs {c}");
                }
            }
        }
    }

    #[test]
    fn csv_dump_has_one_line_per_sample() {
        let g = dirichlet_grid(4, 4);
        let u = GridFunction::sample(g, Staggering::Node, |t, w| t + w);
        let csv = u.to_csv();
        assert_eq!(csv.lines().count(), 1 + 4 * 5);
        assert!(csv.starts_with("i,j,theta,omega,value\n"));
    }

    #[test]
    fn periodic_reads_wrap_both_directions() {
        let g = periodic_grid(4, 4);
        let mut u = GridFunction::zeros(g, Staggering::Node);
        u.set(0, 0, 7.0);
        assert_eq!(u.get(4, 4), 7.0);
        assert_eq!(u.get(-4, -4), 7.0);
    }

    #[test]
    fn dirichlet_reads_are_zero_outside_the_strip() {
        let g = dirichlet_grid(4, 4);
        let u = GridFunction::sample(g, Staggering::Node, |_, _| 3.0);
        assert_eq!(u.get(0, -1), 0.0);
        assert_eq!(u.get(0, 5), 0.0);
        assert_eq!(u.get(0, 4), 3.0);
    }
}
