//! Exact Riemann solutions for the 1D shallow water and Euler equations,
//! used as reference solutions for the 1D test problems.

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::state::State;

/// Solve `f(x) = 0` for increasing `f` on `[lo, hi]` with `f(lo) < 0 < f(hi)`,
/// by Newton steps safeguarded with bisection.
fn safeguarded_newton(f: impl Fn(f64) -> (f64, f64), mut lo: f64, mut hi: f64, x0: f64, tol: f64) -> Result<f64> {
    let mut x = x0.clamp(lo, hi);
    for _ in 0..500 {
        let (fx, dfx) = f(x);
        if fx.abs() <= tol {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        x = if dfx > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * hi.abs() {
            let (fx, _) = f(x);
            if fx.abs() <= tol {
                return Ok(x);
            }
            return Err(Error::Oracle(format!(
                "root bracket collapsed at {x} with residual {fx:e}"
            )));
        }
    }
    Err(Error::Oracle("root finder did not converge".into()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Wave {
    Shock { speed: f64 },
    Rarefaction { head: f64, tail: f64 },
}

/// Exact solution of the shallow water Riemann problem with wet states.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweRiemann {
    pub g: f64,
    pub left: (f64, f64),
    pub right: (f64, f64),
    pub h_star: f64,
    pub u_star: f64,
}

impl SweRiemann {
    /// Depth-matching function of one side: `(f_K(h), f_K'(h))`.
    fn side(g: f64, h: f64, hk: f64) -> (f64, f64) {
        if h <= hk {
            let (c, ck) = ((g * h).sqrt(), (g * hk).sqrt());
            (2.0 * (c - ck), g / c)
        } else {
            let q = (0.5 * g * (1.0 / h + 1.0 / hk)).sqrt();
            let dq = -g / (4.0 * h * h * q);
            ((h - hk) * q, q + (h - hk) * dq)
        }
    }

    /// Matching residual `f_L(h) + f_R(h) + u_R - u_L`.
    pub fn residual(&self, h: f64) -> f64 {
        Self::side(self.g, h, self.left.0).0 + Self::side(self.g, h, self.right.0).0 + self.right.1 - self.left.1
    }

    pub fn left_wave(&self) -> Wave {
        let (hl, ul) = self.left;
        let cl = (self.g * hl).sqrt();
        if self.h_star > hl {
            let q = (0.5 * (self.h_star + hl) * self.h_star / (hl * hl)).sqrt();
            Wave::Shock { speed: ul - cl * q }
        } else {
            Wave::Rarefaction {
                head: ul - cl,
                tail: self.u_star - (self.g * self.h_star).sqrt(),
            }
        }
    }

    pub fn right_wave(&self) -> Wave {
        let (hr, ur) = self.right;
        let cr = (self.g * hr).sqrt();
        if self.h_star > hr {
            let q = (0.5 * (self.h_star + hr) * self.h_star / (hr * hr)).sqrt();
            Wave::Shock { speed: ur + cr * q }
        } else {
            Wave::Rarefaction {
                head: ur + cr,
                tail: self.u_star + (self.g * self.h_star).sqrt(),
            }
        }
    }

    /// `(h, u)` at similarity coordinate `xi = x / t`.
    pub fn sample_primitive(&self, xi: f64) -> (f64, f64) {
        let g = self.g;
        let star = (self.h_star, self.u_star);
        if xi <= self.u_star {
            let (hl, ul) = self.left;
            match self.left_wave() {
                Wave::Shock { speed } => {
                    if xi <= speed {
                        self.left
                    } else {
                        star
                    }
                }
                Wave::Rarefaction { head, tail } => {
                    if xi <= head {
                        self.left
                    } else if xi >= tail {
                        star
                    } else {
                        let cl = (g * hl).sqrt();
                        let c = (ul + 2.0 * cl - xi) / 3.0;
                        (c * c / g, (ul + 2.0 * cl + 2.0 * xi) / 3.0)
                    }
                }
            }
        } else {
            let (hr, ur) = self.right;
            match self.right_wave() {
                Wave::Shock { speed } => {
                    if xi >= speed {
                        self.right
                    } else {
                        star
                    }
                }
                Wave::Rarefaction { head, tail } => {
                    if xi >= head {
                        self.right
                    } else if xi <= tail {
                        star
                    } else {
                        let cr = (g * hr).sqrt();
                        let c = (-ur + 2.0 * cr + xi) / 3.0;
                        (c * c / g, (ur - 2.0 * cr + 2.0 * xi) / 3.0)
                    }
                }
            }
        }
    }

    pub fn sample(&self, xi: f64) -> State {
        let (h, u) = self.sample_primitive(xi);
        State::from_slice(&[h, h * u])
    }
}

/// General wet-bed shallow water Riemann problem with states `(h, u)`.
pub fn exact_swe_riemann(left: (f64, f64), right: (f64, f64), g: f64) -> Result<SweRiemann> {
    let (hl, ul) = left;
    let (hr, ur) = right;
    if !(hl > 0.0 && hr > 0.0) {
        return Err(Error::Oracle(format!(
            "dry states (h_left = {hl}, h_right = {hr}) are not supported"
        )));
    }
    if !(g > 0.0) {
        return Err(Error::Oracle("g must be positive".into()));
    }
    let (cl, cr) = ((g * hl).sqrt(), (g * hr).sqrt());
    if 2.0 * (cl + cr) <= ur - ul {
        return Err(Error::Oracle("data generate a dry region".into()));
    }
    let mut sol = SweRiemann {
        g,
        left,
        right,
        h_star: 0.0,
        u_star: 0.0,
    };
    let f = |h: f64| {
        let (a, da) = SweRiemann::side(g, h, hl);
        let (b, db) = SweRiemann::side(g, h, hr);
        (a + b + ur - ul, da + db)
    };
    let mut hi = hl.max(hr);
    while f(hi).0 < 0.0 {
        hi *= 2.0;
    }
    // Two-rarefaction estimate as the starting guess.
    let guess = ((0.5 * (cl + cr) - 0.25 * (ur - ul)).max(0.0)).powi(2) / g;
    let h_star = safeguarded_newton(f, 0.0, hi, guess.max(1e-300), 1e-13)?;
    let (fl, _) = SweRiemann::side(g, h_star, hl);
    let (fr, _) = SweRiemann::side(g, h_star, hr);
    sol.h_star = h_star;
    sol.u_star = 0.5 * (ul + ur) + 0.5 * (fr - fl);
    Ok(sol)
}

/// The classical dam break: both sides at rest, deeper on the left.
pub fn exact_swe_dambreak(h_left: f64, h_right: f64, g: f64) -> Result<SweRiemann> {
    exact_swe_riemann((h_left, 0.0), (h_right, 0.0), g)
}

/// Primitive ideal-gas state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Primitive {
    pub rho: f64,
    pub u: f64,
    pub p: f64,
}

impl Primitive {
    pub fn new(rho: f64, u: f64, p: f64) -> Self {
        Primitive { rho, u, p }
    }

    pub fn conserved(&self, gamma: f64) -> State {
        State::from_slice(&[
            self.rho,
            self.rho * self.u,
            self.p / (gamma - 1.0) + 0.5 * self.rho * self.u * self.u,
        ])
    }
}

/// Exact solution of the ideal-gas Riemann problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EulerRiemann {
    pub gamma: f64,
    pub left: Primitive,
    pub right: Primitive,
    pub p_star: f64,
    pub u_star: f64,
}

impl EulerRiemann {
    fn sound(&self, w: &Primitive) -> f64 {
        (self.gamma * w.p / w.rho).sqrt()
    }

    /// Pressure function of one side: `(f_K(p), f_K'(p))`.
    fn side(gamma: f64, p: f64, w: &Primitive) -> (f64, f64) {
        let a = (gamma * w.p / w.rho).sqrt();
        if p > w.p {
            let ak = 2.0 / ((gamma + 1.0) * w.rho);
            let bk = (gamma - 1.0) / (gamma + 1.0) * w.p;
            let s = (ak / (p + bk)).sqrt();
            ((p - w.p) * s, s * (1.0 - 0.5 * (p - w.p) / (p + bk)))
        } else {
            let e = (gamma - 1.0) / (2.0 * gamma);
            let r = (p / w.p).powf(e);
            (2.0 * a / (gamma - 1.0) * (r - 1.0), r / (w.rho * a) * (w.p / p))
        }
    }

    /// Pressure residual `f_L(p) + f_R(p) + u_R - u_L`.
    pub fn residual(&self, p: f64) -> f64 {
        Self::side(self.gamma, p, &self.left).0 + Self::side(self.gamma, p, &self.right).0 + self.right.u
            - self.left.u
    }

    pub fn left_wave(&self) -> Wave {
        let (w, g) = (&self.left, self.gamma);
        let a = self.sound(w);
        if self.p_star > w.p {
            let m = ((g + 1.0) / (2.0 * g) * self.p_star / w.p + (g - 1.0) / (2.0 * g)).sqrt();
            Wave::Shock { speed: w.u - a * m }
        } else {
            let a_star = a * (self.p_star / w.p).powf((g - 1.0) / (2.0 * g));
            Wave::Rarefaction {
                head: w.u - a,
                tail: self.u_star - a_star,
            }
        }
    }

    pub fn right_wave(&self) -> Wave {
        let (w, g) = (&self.right, self.gamma);
        let a = self.sound(w);
        if self.p_star > w.p {
            let m = ((g + 1.0) / (2.0 * g) * self.p_star / w.p + (g - 1.0) / (2.0 * g)).sqrt();
            Wave::Shock { speed: w.u + a * m }
        } else {
            let a_star = a * (self.p_star / w.p).powf((g - 1.0) / (2.0 * g));
            Wave::Rarefaction {
                head: w.u + a,
                tail: self.u_star + a_star,
            }
        }
    }

    /// Density just behind the wave of side `w`.
    fn star_density(&self, w: &Primitive) -> f64 {
        let g = self.gamma;
        let ratio = self.p_star / w.p;
        if self.p_star > w.p {
            let g6 = (g - 1.0) / (g + 1.0);
            w.rho * (ratio + g6) / (g6 * ratio + 1.0)
        } else {
            w.rho * ratio.powf(1.0 / g)
        }
    }

    pub fn star_densities(&self) -> (f64, f64) {
        (self.star_density(&self.left), self.star_density(&self.right))
    }

    pub fn sample_primitive(&self, xi: f64) -> Primitive {
        let g = self.gamma;
        let (left_side, w, wave) = if xi <= self.u_star {
            (true, self.left, self.left_wave())
        } else {
            (false, self.right, self.right_wave())
        };
        let outside = |x: f64, edge: f64| if left_side { x <= edge } else { x >= edge };
        let star = Primitive::new(self.star_density(&w), self.u_star, self.p_star);
        match wave {
            Wave::Shock { speed } => {
                if outside(xi, speed) {
                    w
                } else {
                    star
                }
            }
            Wave::Rarefaction { head, tail } => {
                if outside(xi, head) {
                    w
                } else if !outside(xi, tail) {
                    star
                } else {
                    let a = self.sound(&w);
                    let sgn = if left_side { 1.0 } else { -1.0 };
                    let c = 2.0 / (g + 1.0) * (a + sgn * 0.5 * (g - 1.0) * (w.u - xi));
                    let u = 2.0 / (g + 1.0) * (sgn * a + 0.5 * (g - 1.0) * w.u + xi);
                    let ratio = c / a;
                    Primitive::new(
                        w.rho * ratio.powf(2.0 / (g - 1.0)),
                        u,
                        w.p * ratio.powf(2.0 * g / (g - 1.0)),
                    )
                }
            }
        }
    }

    pub fn sample(&self, xi: f64) -> State {
        self.sample_primitive(xi).conserved(self.gamma)
    }
}

pub fn exact_euler_riemann(left: Primitive, right: Primitive, gamma: f64) -> Result<EulerRiemann> {
    for (name, w) in [("left", &left), ("right", &right)] {
        if !(w.rho > 0.0 && w.p > 0.0) {
            return Err(Error::Oracle(format!(
                "{name} state needs positive density and pressure"
            )));
        }
    }
    if !(gamma > 1.0) {
        return Err(Error::Oracle("gamma must exceed 1".into()));
    }
    let al = (gamma * left.p / left.rho).sqrt();
    let ar = (gamma * right.p / right.rho).sqrt();
    if 2.0 / (gamma - 1.0) * (al + ar) <= right.u - left.u {
        return Err(Error::Oracle("data generate vacuum".into()));
    }
    let du = right.u - left.u;
    let f = |p: f64| {
        let (a, da) = EulerRiemann::side(gamma, p, &left);
        let (b, db) = EulerRiemann::side(gamma, p, &right);
        (a + b + du, da + db)
    };
    let mut hi = left.p.max(right.p);
    while f(hi).0 < 0.0 {
        hi *= 2.0;
    }
    let pvrs = 0.5 * (left.p + right.p) - 0.125 * du * (left.rho + right.rho) * (al + ar);
    let p_star = safeguarded_newton(f, 0.0, hi, pvrs.max(1e-8 * hi), 1e-13)?;
    let (fl, _) = EulerRiemann::side(gamma, p_star, &left);
    let (fr, _) = EulerRiemann::side(gamma, p_star, &right);
    Ok(EulerRiemann {
        gamma,
        left,
        right,
        p_star,
        u_star: 0.5 * (left.u + right.u) + 0.5 * (fr - fl),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RiemannSolution {
    Swe(SweRiemann),
    Euler(EulerRiemann),
}

impl RiemannSolution {
    pub fn sample(&self, xi: f64) -> State {
        match self {
            RiemannSolution::Swe(s) => s.sample(xi),
            RiemannSolution::Euler(e) => e.sample(xi),
        }
    }
}

const GL3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

const GL5: [(f64, f64); 5] = [
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.0, 0.568_888_888_888_888_9),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Cell averages at time `t` of a Riemann problem centered at `x0`,
/// by 5-point Gauss-Legendre quadrature per cell.
pub fn reference_field(solution: &RiemannSolution, grid: &Grid1D, t: f64, x0: f64) -> Result<Vec<State>> {
    reference_field_with(solution, grid, t, x0, 5)
}

/// [`reference_field`] with 3 or 5 quadrature points.
pub fn reference_field_with(
    solution: &RiemannSolution,
    grid: &Grid1D,
    t: f64,
    x0: f64,
    points: usize,
) -> Result<Vec<State>> {
    if !(t > 0.0) {
        return Err(Error::Oracle(format!("reference time must be positive, got {t}")));
    }
    let rule: &[(f64, f64)] = match points {
        3 => &GL3,
        5 => &GL5,
        n => return Err(Error::Oracle(format!("no {n}-point quadrature rule"))),
    };
    Ok((0..grid.n_cells)
        .map(|i| {
            let xc = grid.center(i);
            let mut acc = State::ZERO;
            for &(node, w) in rule {
                let x = xc + 0.5 * grid.dx * node;
                acc += solution.sample((x - x0) / t) * (0.5 * w);
            }
            acc
        })
        .collect())
}
