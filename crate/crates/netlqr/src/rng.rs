//! Counter-based Gaussian noise generation.
//!
//! Every increment is derived from `(seed, path, node, step, component)` by
//! hashing, so simulations are reproducible across thread counts and path
//! evaluation order. The mixer is SplitMix64; the Gaussian transform is
//! Box-Muller.

/// SplitMix64 finalizer: a bijective 64-bit mixer with good avalanche.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn mix(parts: &[u64]) -> u64 {
    let mut acc = 0x243f6a8885a308d3u64; // pi digits, arbitrary nonzero start
    for &p in parts {
        acc = splitmix64(acc ^ p);
    }
    acc
}

/// Uniform in `(0, 1)`: 53 mantissa bits, never exactly 0.
fn to_unit(u: u64) -> f64 {
    ((u >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

/// Standard normal draw for one `(seed, path, node, step, component)` key.
pub fn gaussian(seed: u64, path: u64, node: u64, step: u64, component: u64) -> f64 {
    let key = [seed, path, node, step, component];
    let u1 = to_unit(mix(&key));
    let u2 = to_unit(mix(&[key[0], key[1], key[2], key[3], key[4], 0x5bf0a8b1]));
    let r = (-2.0 * u1.ln()).sqrt();
    r * (2.0 * std::f64::consts::PI * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_key_sensitive() {
        let a = gaussian(1, 2, 3, 4, 0);
        assert_eq!(a, gaussian(1, 2, 3, 4, 0));
        assert_ne!(a, gaussian(2, 2, 3, 4, 0));
        assert_ne!(a, gaussian(1, 3, 3, 4, 0));
        assert_ne!(a, gaussian(1, 2, 4, 4, 0));
        assert_ne!(a, gaussian(1, 2, 3, 5, 0));
        assert_ne!(a, gaussian(1, 2, 3, 4, 1));
    }

    #[test]
    fn moments_are_standard_normal() {
        let n = 200_000u64;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for k in 0..n {
            let x = gaussian(42, 0, 0, k, 0);
            sum += x;
            sumsq += x * x;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn all_finite() {
        for k in 0..10_000u64 {
            assert!(gaussian(7, k, k % 13, k % 97, k % 3).is_finite());
        }
    }
}
