//! 2×2 transfer matrices and the asymptotic boundary-value problems of a
//! two-mirror cavity.
//!
//! A transfer matrix maps the (right-moving, left-moving) plane-wave
//! amplitudes on the left of an element to those on its right. Matrices for
//! the cavity are combined as `e = M1 f` and `g = M2 e`, where `f`, `e`, `g`
//! are the amplitudes in the left channel, inside the cavity and in the right
//! channel.

use std::f64::consts::PI;
use std::ops::Mul;

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Relative size below which a closed-form denominator counts as zero.
const SINGULAR_RTOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix2 {
    pub m11: Complex64,
    pub m12: Complex64,
    pub m21: Complex64,
    pub m22: Complex64,
}

impl TransferMatrix2 {
    pub const IDENTITY: Self = Self {
        m11: ONE,
        m12: ZERO,
        m21: ZERO,
        m22: ONE,
    };

    pub fn new(m11: Complex64, m12: Complex64, m21: Complex64, m22: Complex64) -> Self {
        Self { m11, m12, m21, m22 }
    }

    pub fn diagonal(d1: Complex64, d2: Complex64) -> Self {
        Self::new(d1, ZERO, ZERO, d2)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.m11 * s, self.m12 * s, self.m21 * s, self.m22 * s)
    }

    pub fn det(&self) -> Complex64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn inverse(&self) -> Result<Self> {
        let det = self.det();
        if det.norm() == 0.0 {
            return Err(Error::SingularStructure);
        }
        Ok(Self::new(self.m22, -self.m12, -self.m21, self.m11).scale(det.inv()))
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::new(
            self.m11.conj(),
            self.m21.conj(),
            self.m12.conj(),
            self.m22.conj(),
        )
    }

    pub fn is_finite(&self) -> bool {
        [self.m11, self.m12, self.m21, self.m22]
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest entrywise modulus of the difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        [
            self.m11 - other.m11,
            self.m12 - other.m12,
            self.m21 - other.m21,
            self.m22 - other.m22,
        ]
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.m11 * v[0] + self.m12 * v[1],
            self.m21 * v[0] + self.m22 * v[1],
        ]
    }
}

impl Mul for TransferMatrix2 {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.m11 * rhs.m11 + self.m12 * rhs.m21,
            self.m11 * rhs.m12 + self.m12 * rhs.m22,
            self.m21 * rhs.m11 + self.m22 * rhs.m21,
            self.m21 * rhs.m12 + self.m22 * rhs.m22,
        )
    }
}

/// Flat-response mirror of real reflection amplitude `r` at `z = a`, acting
/// on waves of material wavenumber `material_k`.
pub fn flat_mirror(r: f64, a: f64, material_k: f64) -> Result<TransferMatrix2> {
    if !(r.is_finite() && r.abs() < 1.0) {
        return Err(Error::Config(format!(
            "mirror reflection amplitude must satisfy |r| < 1, got {r}"
        )));
    }
    let t = (1.0 - r * r).sqrt();
    let phase = Complex64::from_polar(1.0, 2.0 * material_k * a);
    Ok(TransferMatrix2::new(ONE, r * phase.conj(), r * phase, ONE).scale((1.0 / t).into()))
}

/// `U†(a) M U(a)` with `U(a) = diag(e^{iKa}, e^{-iKa})`: re-expresses a matrix
/// written for an element at the origin for one placed at `z = a`.
pub fn shift_frame(m: &TransferMatrix2, a: f64, material_k: f64) -> TransferMatrix2 {
    let p = Complex64::from_polar(1.0, material_k * a);
    let u = TransferMatrix2::diagonal(p, p.conj());
    u.adjoint() * *m * u
}

/// Which algebraic form to use for a single index step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InterfaceForm {
    /// Matching the displacement field and its derivative across the step.
    #[default]
    Derived,
    /// Alternative form whose second row repeats the first row's phases.
    /// Kept for comparison only: it does not produce a stop band.
    Printed,
}

/// Index step from `n1` (left) to `n2` (right) located at `z = a`, for
/// vacuum wavenumber `k`.
pub fn interface(n1: f64, n2: f64, a: f64, k: f64) -> Result<TransferMatrix2> {
    interface_with(InterfaceForm::Derived, n1, n2, a, k)
}

pub fn interface_with(
    form: InterfaceForm,
    n1: f64,
    n2: f64,
    a: f64,
    k: f64,
) -> Result<TransferMatrix2> {
    if !(n1.is_finite() && n1 > 0.0 && n2.is_finite() && n2 > 0.0) {
        return Err(Error::Config(format!(
            "refractive indices must be positive, got n1 = {n1}, n2 = {n2}"
        )));
    }
    let rho = n1 / n2;
    let (k1, k2) = (n1 * k, n2 * k);
    let diff = Complex64::from_polar(1.0, (k1 - k2) * a);
    let sum = Complex64::from_polar(1.0, (k1 + k2) * a);
    let (p, m) = (1.0 + rho, 1.0 - rho);
    let mat = match form {
        InterfaceForm::Derived => {
            TransferMatrix2::new(p * diff, m * sum.conj(), m * sum, p * diff.conj())
        }
        InterfaceForm::Printed => {
            TransferMatrix2::new(p * diff, m * sum.conj(), m * diff, p * sum.conj())
        }
    };
    Ok(mat.scale((1.0 / (2.0 * rho * rho)).into()))
}

/// Periodic two-index reflector. Layer pair `m` has a `1 → 2` step at
/// `z_m = start + m·period` and a `2 → 1` step half a period later, for
/// `m = 0..=layers`, so the stack begins and ends in medium 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BraggSpec {
    pub n1: f64,
    pub n2: f64,
    pub period: f64,
    pub layers: usize,
    pub start: f64,
}

impl BraggSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.n1 > 0.0 && self.n2 > 0.0 && self.n1.is_finite() && self.n2.is_finite()) {
            return Err(Error::Config(format!(
                "Bragg indices must be positive, got n1 = {}, n2 = {}",
                self.n1, self.n2
            )));
        }
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(Error::Config(format!(
                "Bragg period must be positive, got {}",
                self.period
            )));
        }
        if self.layers < 1 {
            return Err(Error::Config("Bragg stack needs at least one layer".into()));
        }
        if !self.start.is_finite() {
            return Err(Error::Config("Bragg start position must be finite".into()));
        }
        Ok(())
    }

    /// Position of the last index step.
    pub fn end(&self) -> f64 {
        self.start + self.layers as f64 * self.period + 0.5 * self.period
    }
}

pub fn bragg_stack(spec: &BraggSpec, k: f64) -> Result<TransferMatrix2> {
    bragg_stack_with(InterfaceForm::Derived, spec, k)
}

pub fn bragg_stack_with(form: InterfaceForm, spec: &BraggSpec, k: f64) -> Result<TransferMatrix2> {
    spec.validate()?;
    let mut total = TransferMatrix2::IDENTITY;
    for m in 0..=spec.layers {
        let z = spec.start + m as f64 * spec.period;
        let up = interface_with(form, spec.n1, spec.n2, z, k)?;
        let down = interface_with(form, spec.n2, spec.n1, z + 0.5 * spec.period, k)?;
        total = down * up * total;
    }
    Ok(total)
}

/// Wavenumber of maximum reflection, `π / (n_eff Λ)` with the harmonic-mean
/// effective index `n_eff = 2 n1 n2 / (n1 + n2)`. Inputs must be positive.
pub fn stopband_center(n1: f64, n2: f64, period: f64) -> f64 {
    PI / (effective_index(n1, n2) * period)
}

pub fn effective_index(n1: f64, n2: f64) -> f64 {
    2.0 * n1 * n2 / (n1 + n2)
}

/// Product of elements ordered left to right; the rightmost ends up leftmost.
pub fn compose(elements: &[TransferMatrix2]) -> Result<TransferMatrix2> {
    let (first, rest) = elements
        .split_first()
        .ok_or_else(|| Error::Config("cannot compose an empty element list".into()))?;
    Ok(rest.iter().fold(*first, |acc, m| *m * acc))
}

/// Fraction of intensity transmitted, `|det M / M11|²`.
pub fn transmission(m: &TransferMatrix2) -> Result<f64> {
    if m.m11.norm() == 0.0 {
        return Err(Error::SingularStructure);
    }
    Ok((m.det() / m.m11).norm_sqr())
}

/// Fraction of intensity reflected, `|M21 / M11|²`.
pub fn reflection(m: &TransferMatrix2) -> Result<f64> {
    if m.m11.norm() == 0.0 {
        return Err(Error::SingularStructure);
    }
    Ok((m.m21 / m.m11).norm_sqr())
}

/// A mirror bounding the cavity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MirrorSpec {
    Flat { r: f64, position: f64 },
    Bragg(BraggSpec),
    Identity,
}

impl MirrorSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            MirrorSpec::Flat { r, position } => {
                if !(r.is_finite() && r.abs() < 1.0) {
                    return Err(Error::Config(format!(
                        "mirror reflection amplitude must satisfy |r| < 1, got {r}"
                    )));
                }
                if !position.is_finite() {
                    return Err(Error::Config("mirror position must be finite".into()));
                }
                Ok(())
            }
            MirrorSpec::Bragg(spec) => spec.validate(),
            MirrorSpec::Identity => Ok(()),
        }
    }

    /// Transfer matrix for a mode of material wavenumber `material_k` at
    /// vacuum wavenumber `k`. Flat mirrors use the former, Bragg stacks the
    /// latter.
    pub fn matrix(&self, material_k: f64, k: f64) -> Result<TransferMatrix2> {
        match self {
            MirrorSpec::Flat { r, position } => flat_mirror(*r, *position, material_k),
            MirrorSpec::Bragg(spec) => bragg_stack(spec, k),
            MirrorSpec::Identity => Ok(TransferMatrix2::IDENTITY),
        }
    }
}

/// Two mirrors around an interaction region `[-length/2, length/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cavity {
    pub length: f64,
    pub left: MirrorSpec,
    pub right: MirrorSpec,
}

impl Cavity {
    /// No mirrors at all: a bare crystal.
    pub fn bare(length: f64) -> Result<Self> {
        Self::new(length, MirrorSpec::Identity, MirrorSpec::Identity)
    }

    /// Flat mirrors at `-length/2` and `+length/2`.
    pub fn flat(r1: f64, r2: f64, length: f64) -> Result<Self> {
        Self::new(
            length,
            MirrorSpec::Flat {
                r: r1,
                position: -0.5 * length,
            },
            MirrorSpec::Flat {
                r: r2,
                position: 0.5 * length,
            },
        )
    }

    /// Identical Bragg stacks whose inner steps sit at the cavity faces.
    pub fn bragg(n1: f64, n2: f64, period: f64, layers: usize, length: f64) -> Result<Self> {
        let right = BraggSpec {
            n1,
            n2,
            period,
            layers,
            start: 0.5 * length,
        };
        let left = BraggSpec {
            start: -0.5 * length - (layers as f64 + 0.5) * period,
            ..right
        };
        Self::new(length, MirrorSpec::Bragg(left), MirrorSpec::Bragg(right))
    }

    pub fn new(length: f64, left: MirrorSpec, right: MirrorSpec) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Config(format!(
                "cavity length must be positive, got {length}"
            )));
        }
        left.validate()?;
        right.validate()?;
        Ok(Self {
            length,
            left,
            right,
        })
    }

    pub fn mirror_matrices(
        &self,
        material_k: f64,
        k: f64,
    ) -> Result<(TransferMatrix2, TransferMatrix2)> {
        Ok((
            self.left.matrix(material_k, k)?,
            self.right.matrix(material_k, k)?,
        ))
    }

    pub fn amplitudes(
        &self,
        material_k: f64,
        k: f64,
        kind: AsymptoticKind,
    ) -> Result<CavityAmplitudes> {
        let (m1, m2) = self.mirror_matrices(material_k, k)?;
        solve_cavity(&m1, &m2, kind)
    }
}

/// The asymptotic condition imposed on a mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AsymptoticKind {
    /// Incoming from the left: `f₊ = 1`, `g₋ = 0`.
    InLeft,
    /// Outgoing to the left: `f₋ = 1`, `g₊ = 0`.
    OutLeft,
    /// Outgoing to the right: `g₊ = 1`, `f₋ = 0`.
    OutRight,
}

/// Plane-wave amplitudes of one asymptotic mode in the three regions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityAmplitudes {
    pub kind: AsymptoticKind,
    pub e_plus: Complex64,
    pub e_minus: Complex64,
    pub f_plus: Complex64,
    pub f_minus: Complex64,
    pub g_plus: Complex64,
    pub g_minus: Complex64,
}

impl CavityAmplitudes {
    /// Largest violation of the imposed asymptotic conditions.
    pub fn boundary_residual(&self) -> f64 {
        let (unit, zero) = match self.kind {
            AsymptoticKind::InLeft => (self.f_plus, self.g_minus),
            AsymptoticKind::OutRight => (self.g_plus, self.f_minus),
            AsymptoticKind::OutLeft => (self.f_minus, self.g_plus),
        };
        (unit - ONE).norm().max(zero.norm())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        [
            self.e_plus - other.e_plus,
            self.e_minus - other.e_minus,
            self.f_plus - other.f_plus,
            self.f_minus - other.f_minus,
            self.g_plus - other.g_plus,
            self.g_minus - other.g_minus,
        ]
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
    }
}

fn checked_denominator(d: Complex64, scale: f64, kind: AsymptoticKind) -> Result<Complex64> {
    if !(d.norm() > SINGULAR_RTOL * scale) {
        return Err(Error::ResonanceSingularity { kind });
    }
    Ok(d)
}

/// Closed-form intracavity amplitudes for the chosen asymptotic condition.
pub fn solve_cavity(
    m1: &TransferMatrix2,
    m2: &TransferMatrix2,
    kind: AsymptoticKind,
) -> Result<CavityAmplitudes> {
    let det1 = m1.det();
    match kind {
        AsymptoticKind::InLeft => {
            let (a, b) = (m1.m12 * m2.m21, m1.m22 * m2.m22);
            let d = checked_denominator(a + b, a.norm() + b.norm(), kind)?;
            let e_plus = det1 * m2.m22 / d;
            let e_minus = -det1 * m2.m21 / d;
            let f_minus = -(m2.m21 * m1.m11 + m2.m22 * m1.m21) / d;
            let g_plus = m2.m11 * e_plus + m2.m12 * e_minus;
            Ok(CavityAmplitudes {
                kind,
                e_plus,
                e_minus,
                f_plus: ONE,
                f_minus,
                g_plus,
                g_minus: ZERO,
            })
        }
        AsymptoticKind::OutRight | AsymptoticKind::OutLeft => {
            let (a, b) = (m1.m11 * m2.m11, m1.m21 * m2.m12);
            let d = checked_denominator(a + b, a.norm() + b.norm(), kind)?;
            if kind == AsymptoticKind::OutRight {
                let e_plus = m1.m11 / d;
                let e_minus = m1.m21 / d;
                Ok(CavityAmplitudes {
                    kind,
                    e_plus,
                    e_minus,
                    f_plus: d.inv(),
                    f_minus: ZERO,
                    g_plus: ONE,
                    g_minus: m2.m21 * e_plus + m2.m22 * e_minus,
                })
            } else {
                let e_plus = -det1 * m2.m12 / d;
                let e_minus = det1 * m2.m11 / d;
                Ok(CavityAmplitudes {
                    kind,
                    e_plus,
                    e_minus,
                    f_plus: -(m2.m11 * m1.m12 + m2.m12 * m1.m22) / d,
                    f_minus: ONE,
                    g_plus: ZERO,
                    g_minus: m2.m21 * e_plus + m2.m22 * e_minus,
                })
            }
        }
    }
}

/// Solves `e = M1 f`, `g = M2 e` together with the asymptotic conditions as
/// one 6×6 linear system by Gaussian elimination. Independent of the closed
/// forms in [`solve_cavity`]; intended as a cross-check.
pub fn solve_cavity_oracle(
    m1: &TransferMatrix2,
    m2: &TransferMatrix2,
    kind: AsymptoticKind,
) -> Result<CavityAmplitudes> {
    // unknowns: f+, f-, e+, e-, g+, g-
    const F_P: usize = 0;
    const F_M: usize = 1;
    const E_P: usize = 2;
    const E_M: usize = 3;
    const G_P: usize = 4;
    const G_M: usize = 5;
    let mut a = [[ZERO; 6]; 6];
    let mut rhs = [ZERO; 6];

    // e - M1 f = 0
    a[0][E_P] = ONE;
    a[0][F_P] = -m1.m11;
    a[0][F_M] = -m1.m12;
    a[1][E_M] = ONE;
    a[1][F_P] = -m1.m21;
    a[1][F_M] = -m1.m22;
    // g - M2 e = 0
    a[2][G_P] = ONE;
    a[2][E_P] = -m2.m11;
    a[2][E_M] = -m2.m12;
    a[3][G_M] = ONE;
    a[3][E_P] = -m2.m21;
    a[3][E_M] = -m2.m22;

    let (unit, zero) = match kind {
        AsymptoticKind::InLeft => (F_P, G_M),
        AsymptoticKind::OutRight => (G_P, F_M),
        AsymptoticKind::OutLeft => (F_M, G_P),
    };
    a[4][unit] = ONE;
    rhs[4] = ONE;
    a[5][zero] = ONE;

    let x = gaussian_solve(a, rhs).ok_or(Error::ResonanceSingularity { kind })?;
    Ok(CavityAmplitudes {
        kind,
        e_plus: x[E_P],
        e_minus: x[E_M],
        f_plus: x[F_P],
        f_minus: x[F_M],
        g_plus: x[G_P],
        g_minus: x[G_M],
    })
}

fn gaussian_solve<const N: usize>(
    mut a: [[Complex64; N]; N],
    mut b: [Complex64; N],
) -> Option<[Complex64; N]> {
    let scale = a
        .iter()
        .flat_map(|row| row.iter())
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    for col in 0..N {
        let pivot = (col..N).max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))?;
        if !(a[pivot][col].norm() > SINGULAR_RTOL * scale) {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..N {
            let factor = a[row][col] / a[col][col];
            if factor == ZERO {
                continue;
            }
            for c in col..N {
                let delta = factor * a[col][c];
                a[row][c] -= delta;
            }
            let delta = factor * b[col];
            b[row] -= delta;
        }
    }
    let mut x = [ZERO; N];
    for row in (0..N).rev() {
        let mut acc = b[row];
        for c in row + 1..N {
            acc -= a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}
