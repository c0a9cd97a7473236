//! Angle arithmetic, circular distance and summary statistics, and von Mises
//! sampling.

use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TAU: f64 = 2.0 * PI;

/// Resultant length below which the mean direction is undefined.
pub const RESULTANT_TOLERANCE: f64 = 1e-12;

/// An angle in radians, always in `[0, 2π)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);

    /// Wraps a finite real into `[0, 2π)`.
    pub fn new(radians: f64) -> Result<Self> {
        wrap(radians)
    }

    /// Wraps without a finiteness check. Callers guarantee `radians` is finite.
    #[inline]
    pub(crate) fn wrapped(radians: f64) -> Self {
        debug_assert!(radians.is_finite(), "non-finite angle {radians}");
        Angle(wrap_radians(radians))
    }

    pub fn from_degrees(degrees: f64) -> Result<Self> {
        if !degrees.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "angle must be finite, got {degrees}"
            )));
        }
        wrap(degrees.to_radians())
    }

    #[inline]
    pub fn radians(self) -> f64 {
        self.0
    }

    /// Rotates by `delta` radians.
    #[inline]
    pub fn rotate(self, delta: f64) -> Self {
        Angle::wrapped(self.0 + delta)
    }

    /// Representative in `(-π, π]`.
    pub fn signed(self) -> f64 {
        if self.0 > PI {
            self.0 - TAU
        } else {
            self.0
        }
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let x = f64::deserialize(d)?;
        wrap(x).map_err(serde::de::Error::custom)
    }
}

/// `x mod 2π` in `[0, 2π)`.
#[inline]
pub fn wrap_radians(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid rounds tiny negative inputs up to exactly 2π
    if r >= TAU {
        0.0
    } else {
        r
    }
}

pub fn wrap(x: f64) -> Result<Angle> {
    if !x.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "angle must be finite, got {x}"
        )));
    }
    Ok(Angle(wrap_radians(x)))
}

/// Circular distance `1 - cos(a - b)`, in `[0, 2]`.
#[inline]
pub fn circ_dist(a: Angle, b: Angle) -> f64 {
    1.0 - (a.0 - b.0).cos()
}

/// Angle of the resultant vector.
pub fn mean_direction(angles: &[Angle]) -> Result<Angle> {
    if angles.is_empty() {
        return Err(Error::InvalidArgument(
            "mean direction of an empty sample".into(),
        ));
    }
    let (s, c) = angles.iter().fold((0.0, 0.0), |(s, c), a| {
        let (sa, ca) = a.0.sin_cos();
        (s + sa, c + ca)
    });
    direction_of(s, c)
}

/// `atan2(s, c)` wrapped, erroring when both components vanish.
pub(crate) fn direction_of(s: f64, c: f64) -> Result<Angle> {
    if s.abs() <= RESULTANT_TOLERANCE && c.abs() <= RESULTANT_TOLERANCE {
        return Err(Error::DegenerateDirection {
            resultant: s.hypot(c),
        });
    }
    Ok(Angle::wrapped(s.atan2(c)))
}

/// Mean resultant length `R̄ = |Σ e^{iθ}| / n`.
pub fn mean_resultant_length(angles: &[Angle]) -> f64 {
    if angles.is_empty() {
        return 0.0;
    }
    let (s, c) = angles.iter().fold((0.0, 0.0), |(s, c), a| {
        let (sa, ca) = a.0.sin_cos();
        (s + sa, c + ca)
    });
    s.hypot(c) / angles.len() as f64
}

/// Parameters of the von Mises distribution `vM(mu, kappa)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VonMisesParams {
    pub mu: Angle,
    pub kappa: f64,
}

impl VonMisesParams {
    pub fn new(mu: Angle, kappa: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "concentration must be finite and nonnegative, got {kappa}"
            )));
        }
        Ok(Self { mu, kappa })
    }
}

/// Draws `n` i.i.d. angles from `vM(mu, kappa)`.
pub fn sample_von_mises<R: Rng + ?Sized>(
    params: VonMisesParams,
    n: usize,
    rng: &mut R,
) -> Vec<Angle> {
    let sampler = VonMisesSampler::new(params);
    (0..n).map(|_| sampler.sample(rng)).collect()
}

/// Best–Fisher rejection sampler with the envelope constants precomputed.
#[derive(Clone, Copy, Debug)]
pub struct VonMisesSampler {
    mu: f64,
    kappa: f64,
    r: f64,
}

impl VonMisesSampler {
    pub fn new(params: VonMisesParams) -> Self {
        let kappa = params.kappa;
        let r = if kappa > 0.0 {
            let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
            let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
            (1.0 + rho * rho) / (2.0 * rho)
        } else {
            f64::NAN
        };
        Self {
            mu: params.mu.radians(),
            kappa,
            r,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Angle {
        if self.kappa == 0.0 {
            return Angle::wrapped(rng.random::<f64>() * TAU);
        }
        let (kappa, r) = (self.kappa, self.r);
        loop {
            let u1: f64 = rng.random();
            let u2: f64 = rng.random();
            let u3: f64 = rng.random();
            let z = (PI * u1).cos();
            let f = ((1.0 + r * z) / (r + z)).clamp(-1.0, 1.0);
            let c = kappa * (r - f);
            if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
                let theta = if u3 > 0.5 { f.acos() } else { -f.acos() };
                return Angle::wrapped(self.mu + theta);
            }
        }
    }
}

/// Modified Bessel functions `I0` and `I1`, both scaled by `e^{-x}·√x` for
/// large arguments so their ratio stays finite. Polynomial approximations
/// with relative error near 1e-7.
fn bessel_i0_i1_scaled(x: f64) -> (f64, f64) {
    let ax = x.abs();
    if ax < 3.75 {
        let y = (x / 3.75).powi(2);
        let i0 = 1.0
            + y * (3.5156229
                + y * (3.0899424
                    + y * (1.2067492 + y * (0.2659732 + y * (0.360768e-1 + y * 0.45813e-2)))));
        let i1 = ax
            * (0.5
                + y * (0.87890594
                    + y * (0.51498869
                        + y * (0.15084934
                            + y * (0.2658733e-1 + y * (0.301532e-2 + y * 0.32411e-3))))));
        (i0, i1)
    } else {
        let y = 3.75 / ax;
        let i0 = 0.39894228
            + y * (0.1328592e-1
                + y * (0.225319e-2
                    + y * (-0.157565e-2
                        + y * (0.916281e-2
                            + y * (-0.2057706e-1
                                + y * (0.2635537e-1 + y * (-0.1647633e-1 + y * 0.392377e-2)))))));
        let tail = 0.2282967e-1 + y * (-0.2895312e-1 + y * (0.1787654e-1 - y * 0.420059e-2));
        let i1 = 0.39894228
            + y * (-0.3988024e-1
                + y * (-0.362018e-2 + y * (0.163801e-2 + y * (-0.1031555e-1 + y * tail))));
        (i0, i1)
    }
}

/// `A1(κ) = I1(κ) / I0(κ)`, the mean resultant length of `vM(0, κ)`.
pub fn bessel_ratio_a1(kappa: f64) -> f64 {
    if kappa <= 0.0 {
        return 0.0;
    }
    let (i0, i1) = bessel_i0_i1_scaled(kappa);
    i1 / i0
}

/// Largest concentration reported by [`inverse_a1`].
pub const KAPPA_CAP: f64 = 1e6;

/// Solves `A1(κ) = r` for `κ` by Newton iteration, capped at [`KAPPA_CAP`].
pub fn inverse_a1(r: f64) -> f64 {
    if !(r > 0.0) {
        return 0.0;
    }
    if r >= bessel_ratio_a1(KAPPA_CAP) {
        return KAPPA_CAP;
    }
    // Best & Fisher starting value
    let mut kappa = if r < 0.53 {
        2.0 * r + r.powi(3) + 5.0 * r.powi(5) / 6.0
    } else if r < 0.85 {
        -0.4 + 1.39 * r + 0.43 / (1.0 - r)
    } else {
        1.0 / (r.powi(3) - 4.0 * r * r + 3.0 * r)
    };
    for _ in 0..100 {
        let a = bessel_ratio_a1(kappa);
        let slope = 1.0 - a / kappa - a * a;
        if slope <= 0.0 {
            break;
        }
        let next = (kappa - (a - r) / slope).clamp(kappa / 10.0, (kappa * 10.0).min(KAPPA_CAP));
        let done = (next - kappa).abs() <= 1e-12 * kappa.max(1.0);
        kappa = next;
        if done {
            break;
        }
    }
    kappa.min(KAPPA_CAP)
}
