use nalgebra::Vector3;

/// Deterministic 3-D value noise in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Texture {
    /// Lattice spacing, metres.
    pub cell: f64,
    pub seed: u64,
}

impl Default for Texture {
    fn default() -> Self {
        Self {
            cell: 0.03,
            seed: 0x5eed,
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn smooth(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

impl Texture {
    fn lattice(&self, i: i64, j: i64, k: i64, salt: u64) -> f64 {
        let mut h = splitmix(self.seed ^ salt.wrapping_mul(0xa076_1d64_78bd_642f));
        for c in [i, j, k] {
            h = splitmix(h ^ c as u64);
        }
        (h >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Noise value at `p`; `salt` decorrelates surfaces of different objects.
    pub fn sample(&self, p: &Vector3<f64>, salt: u64) -> f64 {
        let q = p / self.cell;
        let base = q.map(f64::floor);
        let f = q - base;
        let (i, j, k) = (base.x as i64, base.y as i64, base.z as i64);
        let (u, v, w) = (smooth(f.x), smooth(f.y), smooth(f.z));
        let mut acc = 0.0;
        for (di, wi) in [(0, 1.0 - u), (1, u)] {
            for (dj, wj) in [(0, 1.0 - v), (1, v)] {
                for (dk, wk) in [(0, 1.0 - w), (1, w)] {
                    acc += wi * wj * wk * self.lattice(i + di, j + dj, k + dk, salt);
                }
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_bounded() {
        let t = Texture::default();
        let p = Vector3::new(0.123, -4.5, 2.0);
        assert_eq!(t.sample(&p, 3), t.sample(&p, 3));
        assert_ne!(t.sample(&p, 3), t.sample(&p, 4));
        for i in 0..1000 {
            let v = t.sample(&Vector3::new(i as f64 * 0.011, 0.3, -0.7), 0);
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn continuous() {
        let t = Texture::default();
        let p = Vector3::new(0.1, 0.2, 0.3);
        let q = p + Vector3::new(1e-7, 0.0, 0.0);
        assert!((t.sample(&p, 0) - t.sample(&q, 0)).abs() < 1e-4);
    }
}
