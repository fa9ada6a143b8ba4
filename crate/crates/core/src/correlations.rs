//! Electric-field two-point functions pulled back to the atom's trajectory,
//! evaluated in the atom's rest frame with the time argument shifted to
//! `u ∓ iε`.
//!
//! Component indices are (x, y, z): z is the plane normal, x the direction of
//! motion or acceleration. Only xx, yy, zz and xz = zx are nonzero.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::special::Pair;

pub type Matrix3<T> = [[T; 3]; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kinematics {
    /// Uniform motion parallel to the plane. The velocity does not enter the
    /// rest-frame correlators.
    Inertial { velocity: f64 },
    /// Constant proper acceleration parallel to the plane.
    UniformAcceleration { accel: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trajectory {
    z: f64,
    kind: Kinematics,
}

impl Trajectory {
    pub fn inertial(z: f64, velocity: f64) -> Result<Self> {
        ensure_positive("z", z)?;
        ensure_finite("velocity", velocity)?;
        if velocity.abs() >= 1.0 {
            return Err(Error::Domain(format!("|v| must be below 1, got {velocity}")));
        }
        Ok(Self { z, kind: Kinematics::Inertial { velocity } })
    }

    pub fn accelerated(z: f64, accel: f64) -> Result<Self> {
        ensure_positive("z", z)?;
        ensure_positive("acceleration", accel)?;
        Ok(Self { z, kind: Kinematics::UniformAcceleration { accel } })
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn kind(&self) -> Kinematics {
        self.kind
    }

    /// Proper acceleration, zero for inertial motion.
    pub fn accel(&self) -> f64 {
        match self.kind {
            Kinematics::Inertial { .. } => 0.0,
            Kinematics::UniformAcceleration { accel } => accel,
        }
    }

    /// Proper-time separations `±u₀` where the boundary kernel is singular.
    pub fn image_peak(&self) -> f64 {
        match self.kind {
            Kinematics::Inertial { .. } => 2.0 * self.z,
            Kinematics::UniformAcceleration { accel } => 2.0 / accel * (accel * self.z).asinh(),
        }
    }
}

/// Sign of the regulator: `Minus` is `u − iε`, `Plus` is `u + iε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Minus,
    Plus,
}

impl Branch {
    fn shift(self, u: f64, eps: f64) -> Complex64 {
        match self {
            Branch::Minus => Complex64::new(u, -eps),
            Branch::Plus => Complex64::new(u, eps),
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    ensure_positive("epsilon", eps)
}

/// One component of the boundary (image) Wightman function.
pub fn boundary_component(
    traj: &Trajectory,
    pair: Pair,
    u: f64,
    eps: f64,
    branch: Branch,
) -> Result<Complex64> {
    check_eps(eps)?;
    ensure_finite("u", u)?;
    Ok(boundary_at(traj, pair, u, eps, branch))
}

fn boundary_at(traj: &Trajectory, pair: Pair, u: f64, eps: f64, branch: Branch) -> Complex64 {
    let w = branch.shift(u, eps);
    let z = traj.z;
    match traj.kind {
        Kinematics::Inertial { .. } => {
            // (u − iε)² − 4z², factored so the peak is not lost to cancellation
            let d = (w - 2.0 * z) * (w + 2.0 * z);
            match pair {
                Pair::Xx | Pair::Yy => -(w * w + 4.0 * z * z) / (PI * PI * d * d * d),
                Pair::Zz => 1.0 / (PI * PI * d * d),
                Pair::Xz => Complex64::new(0.0, 0.0),
            }
        }
        Kinematics::UniformAcceleration { accel: a } => {
            let eta = a * z;
            let half = 0.5 * a * w;
            let w0 = eta.asinh();
            // sinh²(w) − sinh²(w₀) = sinh(w + w₀) sinh(w − w₀)
            let d = (half + w0).sinh() * (half - w0).sinh();
            let (sh, ch) = (half.sinh(), half.cosh());
            let (s2, c2, e2) = (sh * sh, ch * ch, eta * eta);
            let numerator = match pair {
                Pair::Xx => s2 + e2,
                Pair::Yy => s2 + e2 * (c2 + s2),
                Pair::Zz => -s2 + e2 * (c2 + s2),
                Pair::Xz => 2.0 * eta * s2,
            };
            -a.powi(4) / (16.0 * PI * PI) * numerator / (d * d * d)
        }
    }
}

/// One component of the free-space (Minkowski vacuum) Wightman function.
/// It is proportional to `δ_ij`.
pub fn free_component(
    traj: &Trajectory,
    pair: Pair,
    u: f64,
    eps: f64,
    branch: Branch,
) -> Result<Complex64> {
    check_eps(eps)?;
    ensure_finite("u", u)?;
    Ok(free_at(traj, pair, u, eps, branch))
}

fn free_at(traj: &Trajectory, pair: Pair, u: f64, eps: f64, branch: Branch) -> Complex64 {
    if !pair.is_diagonal() {
        return Complex64::new(0.0, 0.0);
    }
    let w = branch.shift(u, eps);
    match traj.kind {
        Kinematics::Inertial { .. } => {
            let w2 = w * w;
            1.0 / (PI * PI * w2 * w2)
        }
        Kinematics::UniformAcceleration { accel: a } => {
            let s = (0.5 * a * w).sinh();
            let s2 = s * s;
            a.powi(4) / (16.0 * PI * PI * s2 * s2)
        }
    }
}

fn assemble(f: impl Fn(Pair) -> Result<Complex64>) -> Result<Matrix3<Complex64>> {
    let mut m = [[Complex64::new(0.0, 0.0); 3]; 3];
    for pair in Pair::ALL {
        let (i, j) = pair.indices();
        let v = f(pair)?;
        m[i][j] = v;
        m[j][i] = v;
    }
    Ok(m)
}

pub fn wightman_boundary(
    traj: &Trajectory,
    u: f64,
    eps: f64,
    branch: Branch,
) -> Result<Matrix3<Complex64>> {
    assemble(|p| boundary_component(traj, p, u, eps, branch))
}

pub fn wightman_free(
    traj: &Trajectory,
    u: f64,
    eps: f64,
    branch: Branch,
) -> Result<Matrix3<Complex64>> {
    assemble(|p| free_component(traj, p, u, eps, branch))
}

/// Which two-point function a kernel component is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Boundary,
    Free,
}

fn component(
    source: Source,
    traj: &Trajectory,
    pair: Pair,
    u: f64,
    eps: f64,
    branch: Branch,
) -> Result<Complex64> {
    match source {
        Source::Boundary => boundary_component(traj, pair, u, eps, branch),
        Source::Free => free_component(traj, pair, u, eps, branch),
    }
}

/// Hadamard value and Pauli–Jordan `i`-coefficient at `u`, without input
/// checks. Callers guarantee `eps > 0` and finite `u`.
pub(crate) fn kernel_parts(source: Source, traj: &Trajectory, pair: Pair, u: f64, eps: f64) -> (f64, f64) {
    let (m, p) = match source {
        Source::Boundary => (
            boundary_at(traj, pair, u, eps, Branch::Minus),
            boundary_at(traj, pair, u, eps, Branch::Plus),
        ),
        Source::Free => (
            free_at(traj, pair, u, eps, Branch::Minus),
            free_at(traj, pair, u, eps, Branch::Plus),
        ),
    };
    (0.5 * (m + p).re, 0.5 * (m - p).im)
}

/// Hadamard component `(G(u − iε) + G(u + iε))/2`.
pub fn hadamard_component(
    source: Source,
    traj: &Trajectory,
    pair: Pair,
    u: f64,
    eps: f64,
) -> Result<f64> {
    let m = component(source, traj, pair, u, eps, Branch::Minus)?;
    let p = component(source, traj, pair, u, eps, Branch::Plus)?;
    Ok(0.5 * (m + p).re)
}

/// Pauli–Jordan component `(G(u − iε) − G(u + iε))/2`, returned as the real
/// coefficient of `i`.
pub fn pauli_jordan_component(
    source: Source,
    traj: &Trajectory,
    pair: Pair,
    u: f64,
    eps: f64,
) -> Result<f64> {
    let m = component(source, traj, pair, u, eps, Branch::Minus)?;
    let p = component(source, traj, pair, u, eps, Branch::Plus)?;
    Ok(0.5 * (m - p).im)
}

/// Boundary Hadamard function `C_ij(u)`.
pub fn hadamard(traj: &Trajectory, u: f64, eps: f64) -> Result<Matrix3<f64>> {
    let minus = wightman_boundary(traj, u, eps, Branch::Minus)?;
    let plus = wightman_boundary(traj, u, eps, Branch::Plus)?;
    Ok(std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (minus[i][j] + plus[i][j]).re)))
}

/// Boundary Pauli–Jordan function `χ_ij(u)`; purely imaginary.
pub fn pauli_jordan(traj: &Trajectory, u: f64, eps: f64) -> Result<Matrix3<Complex64>> {
    let minus = wightman_boundary(traj, u, eps, Branch::Minus)?;
    let plus = wightman_boundary(traj, u, eps, Branch::Plus)?;
    Ok(std::array::from_fn(|i| {
        std::array::from_fn(|j| Complex64::new(0.0, 0.5 * (minus[i][j] - plus[i][j]).im))
    }))
}
