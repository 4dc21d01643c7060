//! Numeric Gowers-norm probes. The interval norm averages the
//! conjugation-twisted product over all boxes whose 2^d corners stay
//! inside [0, N); a cyclic-group variant with the Fourier fourth-moment
//! identity serves as an independent oracle for the cube enumeration.

pub use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::automaton::Dfao;

#[derive(Debug, Error)]
pub enum UniformityError {
    #[error("only degrees 2 and 3 are enumerable")]
    UnsupportedDegree { d: u32 },
    #[error("signal length {n} exceeds the cap {cap} for degree {d}")]
    CapExceeded { n: usize, cap: usize, d: u32 },
    #[error("signal values must be finite")]
    NonFinite,
}

/// Naive cube enumeration is O(N^{d+1}); these keep it at desk scale.
pub const INTERVAL_CAP_D2: usize = 256;
pub const INTERVAL_CAP_D3: usize = 96;

#[derive(Clone, Debug)]
pub struct FiniteSignal {
    values: Vec<Complex64>,
}

impl FiniteSignal {
    pub fn new(values: Vec<Complex64>) -> Result<Self, UniformityError> {
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(UniformityError::NonFinite);
        }
        Ok(FiniteSignal { values })
    }

    pub fn from_reals(values: &[f64]) -> Result<Self, UniformityError> {
        Self::new(values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GowersNorm {
    pub value: f64,
    /// Number of boxes with every corner inside the interval; zero means
    /// the average was empty and the value defaulted to zero.
    pub cube_count: u64,
}

/// Interval Gowers norm of degree d (2 or 3): the 2^d-th root of the
/// average twisted product over boxes with all corners in [0, N), the
/// side variables ranging over negative offsets too.
pub fn gowers_norm_interval(f: &FiniteSignal, d: u32) -> Result<GowersNorm, UniformityError> {
    let cap = match d {
        2 => INTERVAL_CAP_D2,
        3 => INTERVAL_CAP_D3,
        _ => return Err(UniformityError::UnsupportedDegree { d }),
    };
    gowers_norm_interval_capped(f, d, cap)
}

/// As `gowers_norm_interval` with an explicit enumeration cap.
pub fn gowers_norm_interval_capped(
    f: &FiniteSignal,
    d: u32,
    cap: usize,
) -> Result<GowersNorm, UniformityError> {
    if !(2..=3).contains(&d) {
        return Err(UniformityError::UnsupportedDegree { d });
    }
    if f.len() > cap {
        return Err(UniformityError::CapExceeded { n: f.len(), cap, d });
    }
    let (sum, count) = match d {
        2 => boxes_d2(f.values()),
        _ => boxes_d3(f.values()),
    };
    if count == 0 {
        return Ok(GowersNorm { value: 0.0, cube_count: 0 });
    }
    // the full average is a norm power, so its exact value is real and
    // nonnegative; roundoff may leave a tiny imaginary or negative residue
    let mut value = (sum.re / count as f64).max(0.0);
    for _ in 0..d {
        value = value.sqrt();
    }
    Ok(GowersNorm { value, cube_count: count })
}

/// Side range so that base + side stays in [0, n) for every shift in
/// `shifts`: the loop bounds enforce the corner constraints exactly.
fn side_range(n: i64, base: i64, shifts: &[i64]) -> (i64, i64) {
    let mut lo = i64::MIN;
    let mut hi = i64::MAX;
    for &s in shifts {
        lo = lo.max(-(base + s));
        hi = hi.min(n - 1 - (base + s));
    }
    (lo, hi)
}

fn boxes_d2(f: &[Complex64]) -> (Complex64, u64) {
    let n = f.len() as i64;
    let mut partials = Vec::with_capacity(f.len());
    let mut count = 0u64;
    for n0 in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        let (lo1, hi1) = side_range(n, n0, &[0]);
        for n1 in lo1..=hi1 {
            let (lo2, hi2) = side_range(n, n0, &[0, n1]);
            let a = f[n0 as usize];
            let b = f[(n0 + n1) as usize].conj();
            let ab = a * b;
            for n2 in lo2..=hi2 {
                let c = f[(n0 + n2) as usize].conj();
                let d = f[(n0 + n1 + n2) as usize];
                acc += ab * c * d;
                count += 1;
            }
        }
        partials.push(acc);
    }
    (pairwise_sum(&partials), count)
}

fn boxes_d3(f: &[Complex64]) -> (Complex64, u64) {
    let n = f.len() as i64;
    let mut partials = Vec::with_capacity(f.len());
    let mut count = 0u64;
    for n0 in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        let (lo1, hi1) = side_range(n, n0, &[0]);
        for n1 in lo1..=hi1 {
            let (lo2, hi2) = side_range(n, n0, &[0, n1]);
            for n2 in lo2..=hi2 {
                let base = f[n0 as usize]
                    * f[(n0 + n1) as usize].conj()
                    * f[(n0 + n2) as usize].conj()
                    * f[(n0 + n1 + n2) as usize];
                let (lo3, hi3) = side_range(n, n0, &[0, n1, n2, n1 + n2]);
                for n3 in lo3..=hi3 {
                    let odd = f[(n0 + n3) as usize].conj()
                        * f[(n0 + n1 + n3) as usize]
                        * f[(n0 + n2 + n3) as usize]
                        * f[(n0 + n1 + n2 + n3) as usize].conj();
                    acc += base * odd;
                    count += 1;
                }
            }
        }
        partials.push(acc);
    }
    (pairwise_sum(&partials), count)
}

/// Recursive halving keeps the accumulated floating-point error near
/// sqrt(log n) times the term size.
fn pairwise_sum(xs: &[Complex64]) -> Complex64 {
    match xs.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => xs[0],
        len => {
            let (a, b) = xs.split_at(len / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Cyclic-group U2 norm via the Fourier identity: the fourth root of the
/// sum of fourth powers of the DFT magnitudes. This is a different
/// normalization from the interval norm (the group average wraps around);
/// it exists as an independent consistency check.
pub fn gowers_u2_cyclic(f: &FiniteSignal) -> f64 {
    let n = f.len();
    assert!(n >= 1, "cyclic norm needs a nonempty signal");
    let vals = f.values();
    let mut fourth = 0.0f64;
    for xi in 0..n {
        let mut hat = Complex64::new(0.0, 0.0);
        for (j, v) in vals.iter().enumerate() {
            let angle = -2.0 * std::f64::consts::PI * (j as f64) * (xi as f64) / n as f64;
            hat += v * Complex64::from_polar(1.0, angle);
        }
        hat /= n as f64;
        fourth += hat.norm_sqr() * hat.norm_sqr();
    }
    fourth.sqrt().sqrt()
}

/// Interval norm of the balanced indicator 1[a(n) = label] - density.
pub fn uniformity_probe(
    a: &Dfao,
    label: &str,
    d: u32,
    n: usize,
) -> Result<GowersNorm, UniformityError> {
    let b = a.normalize_leading_zeros();
    let prefix = b.generate_prefix(n).expect("a normalized machine generates any prefix");
    let hits = prefix.iter().filter(|&&l| l == label).count();
    let density = if n == 0 { 0.0 } else { hits as f64 / n as f64 };
    let values: Vec<f64> =
        prefix.iter().map(|&l| (l == label) as u8 as f64 - density).collect();
    let f = FiniteSignal::from_reals(&values)?;
    gowers_norm_interval(&f, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machines;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ones(n: usize) -> FiniteSignal {
        FiniteSignal::from_reals(&vec![1.0; n]).unwrap()
    }

    #[test]
    fn all_ones_normalizes_to_one() {
        for d in [2u32, 3] {
            let g = gowers_norm_interval(&ones(32), d).unwrap();
            assert!((g.value - 1.0).abs() < 1e-12, "d={d}: {}", g.value);
            assert!(g.cube_count > 0);
        }
    }

    #[test]
    fn zero_signal_gives_zero() {
        for d in [2u32, 3] {
            let g = gowers_norm_interval(&FiniteSignal::from_reals(&[0.0; 20]).unwrap(), d)
                .unwrap();
            assert_eq!(g.value, 0.0);
        }
    }

    #[test]
    fn constant_signal_gives_its_modulus() {
        let c = Complex64::new(0.3, -0.4);
        let f = FiniteSignal::new(vec![c; 24]).unwrap();
        for d in [2u32, 3] {
            let g = gowers_norm_interval(&f, d).unwrap();
            assert!((g.value - 0.5).abs() < 1e-12, "d={d}");
        }
    }

    #[test]
    fn unimodular_twist_leaves_the_norm_alone() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let vals: Vec<Complex64> = (0..48)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let f = FiniteSignal::new(vals.clone()).unwrap();
        let twist = Complex64::from_polar(1.0, 0.7342);
        let g = FiniteSignal::new(vals.iter().map(|v| v * twist).collect()).unwrap();
        let a = gowers_norm_interval(&f, 2).unwrap().value;
        let b = gowers_norm_interval(&g, 2).unwrap().value;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn linear_phase_has_full_norm() {
        // the twisted product of a linear phase telescopes to one
        let alpha = 0.381966f64;
        let vals: Vec<Complex64> = (0..100)
            .map(|j| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * alpha * j as f64))
            .collect();
        let g = gowers_norm_interval(&FiniteSignal::new(vals).unwrap(), 2).unwrap();
        assert!((g.value - 1.0).abs() < 1e-9, "{}", g.value);
    }

    #[test]
    fn empty_signal_is_flagged() {
        let g = gowers_norm_interval(&ones(0), 2).unwrap();
        assert_eq!(g.value, 0.0);
        assert_eq!(g.cube_count, 0);
    }

    #[test]
    fn caps_and_degrees_are_enforced() {
        assert!(matches!(
            gowers_norm_interval(&ones(INTERVAL_CAP_D2 + 1), 2),
            Err(UniformityError::CapExceeded { .. })
        ));
        assert!(matches!(
            gowers_norm_interval(&ones(INTERVAL_CAP_D3 + 1), 3),
            Err(UniformityError::CapExceeded { .. })
        ));
        for d in [0u32, 1, 4] {
            assert!(matches!(
                gowers_norm_interval(&ones(8), d),
                Err(UniformityError::UnsupportedDegree { .. })
            ));
        }
    }

    #[test]
    fn non_finite_values_are_rejected() {
        assert!(matches!(
            FiniteSignal::from_reals(&[1.0, f64::NAN]),
            Err(UniformityError::NonFinite)
        ));
        assert!(matches!(
            FiniteSignal::new(vec![Complex64::new(0.0, f64::INFINITY)]),
            Err(UniformityError::NonFinite)
        ));
    }

    #[test]
    fn cyclic_norm_of_constants_and_characters() {
        assert!((gowers_u2_cyclic(&ones(64)) - 1.0).abs() < 1e-9);
        let n = 64usize;
        let vals: Vec<Complex64> = (0..n)
            .map(|j| {
                Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * 5.0 * j as f64 / n as f64)
            })
            .collect();
        let f = FiniteSignal::new(vals).unwrap();
        assert!((gowers_u2_cyclic(&f) - 1.0).abs() < 1e-9);
    }

    fn naive_cyclic_u2(f: &FiniteSignal) -> f64 {
        let n = f.len();
        let v = f.values();
        let mut acc = Complex64::new(0.0, 0.0);
        for x in 0..n {
            for h1 in 0..n {
                for h2 in 0..n {
                    acc += v[x]
                        * v[(x + h1) % n].conj()
                        * v[(x + h2) % n].conj()
                        * v[(x + h1 + h2) % n];
                }
            }
        }
        let avg = (acc.re / (n * n * n) as f64).max(0.0);
        avg.sqrt().sqrt()
    }

    #[test]
    fn cyclic_fourier_identity_matches_naive_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let vals: Vec<Complex64> = (0..128)
            .map(|_| Complex64::new(if rng.gen::<bool>() { 1.0 } else { -1.0 }, 0.0))
            .collect();
        let f = FiniteSignal::new(vals).unwrap();
        assert!((gowers_u2_cyclic(&f) - naive_cyclic_u2(&f)).abs() < 1e-9);
    }

    #[test]
    fn cyclic_identity_on_many_short_signals() {
        let mut rng = ChaCha8Rng::seed_from_u64(417);
        for case in 0..50 {
            let n = rng.gen_range(1..=64usize);
            let vals: Vec<Complex64> = (0..n)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let f = FiniteSignal::new(vals).unwrap();
            let a = gowers_u2_cyclic(&f);
            let b = naive_cyclic_u2(&f);
            assert!((a - b).abs() < 1e-9, "case {case} n {n}: {a} vs {b}");
        }
    }

    #[test]
    fn digit_sum_probe_decays_with_length() {
        let a = machines::thue_morse();
        let small = uniformity_probe(&a, "1", 2, 64).unwrap();
        let large = uniformity_probe(&a, "1", 2, 256).unwrap();
        assert!(large.value < small.value, "{} !< {}", large.value, small.value);
        assert!(large.value > 0.0);
    }

    #[test]
    fn constant_machine_probe_vanishes() {
        let g = uniformity_probe(&machines::constant(2, "x"), "x", 2, 128).unwrap();
        assert_eq!(g.value, 0.0, "balanced indicator of a constant is identically zero");
    }

    #[test]
    fn parity_probe_stays_large() {
        // a(n) = n mod 2: the balanced indicator is (+-1)/2 alternating,
        // whose interval norm works out to exactly 1/2 at even lengths
        let g = uniformity_probe(&machines::last_digit(2), "1", 2, 256).unwrap();
        assert!(g.value > 0.5 - 1e-9, "{}", g.value);
    }
}
