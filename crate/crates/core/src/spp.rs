//! Spatial pyramid pooling: fixed-length max-pooled features from a
//! feature map of any spatial size.
//!
//! An n-level pyramid partitions the H x W plane into k x k blocks for every
//! k in 1..=n and takes the max over each block. Output ordering is fixed:
//! level-major, then channel, then block row-major. For a map with C
//! channels the output length is always `C * sum(k^2 for k in 1..=n)`.
//!
//! Block boundaries: block i of level k spans `[floor(i*H/k), floor((i+1)*H/k))`,
//! which tiles the plane exactly whenever H >= k. When the map is smaller
//! than the grid (H < k or W < k) the end bound switches to
//! `ceil((i+1)*H/k)`, producing windows that may overlap so that no block is
//! ever empty. Max ties break to the lowest row-major index.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SppConfig {
    levels: usize,
}

impl SppConfig {
    pub fn new(levels: usize) -> Result<Self> {
        if levels == 0 {
            return Err(Error::InvalidConfig(
                "pyramid needs at least one level".to_string(),
            ));
        }
        Ok(SppConfig { levels })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Blocks per channel: sum of k^2 over levels 1..=n.
    pub fn blocks_per_channel(&self) -> usize {
        (1..=self.levels).map(|k| k * k).sum()
    }

    /// Total output length for a map with `channels` channels, independent
    /// of its spatial size.
    pub fn output_len(&self, channels: usize) -> usize {
        channels * self.blocks_per_channel()
    }
}

/// `[start, end)` bounds of block `i` of `k` along an axis of length `extent`.
fn block_bounds(extent: usize, k: usize, i: usize) -> (usize, usize) {
    let start = i * extent / k;
    let end = if extent >= k {
        (i + 1) * extent / k
    } else {
        ((i + 1) * extent).div_ceil(k)
    };
    (start, end)
}

pub fn spp_forward(input: &Tensor, config: &SppConfig) -> Result<Tensor> {
    let (c, h, w) = expect_map(input)?;
    let x = input.data();
    let mut out = Vec::with_capacity(config.output_len(c));
    for k in 1..=config.levels {
        for ch in 0..c {
            for bi in 0..k {
                let (y0, y1) = block_bounds(h, k, bi);
                for bj in 0..k {
                    let (x0, x1) = block_bounds(w, k, bj);
                    let mut best = f64::NEG_INFINITY;
                    for y in y0..y1 {
                        let row = (ch * h + y) * w;
                        for xi in x0..x1 {
                            if x[row + xi] > best {
                                best = x[row + xi];
                            }
                        }
                    }
                    out.push(best);
                }
            }
        }
    }
    Ok(Tensor::from_vec(out))
}

/// Routes each upstream element to its block's argmax cell; contributions
/// from overlapping levels add up.
pub fn spp_backward(input: &Tensor, config: &SppConfig, upstream: &Tensor) -> Result<Tensor> {
    let (c, h, w) = expect_map(input)?;
    let expected = config.output_len(c);
    if upstream.len() != expected {
        return Err(Error::ShapeMismatch {
            context: format!("spp backward (levels={})", config.levels),
            expected: vec![expected],
            actual: vec![upstream.len()],
        });
    }
    let x = input.data();
    let up = upstream.data();
    let mut d_input = vec![0.0; x.len()];
    let mut pos = 0;
    for k in 1..=config.levels {
        for ch in 0..c {
            for bi in 0..k {
                let (y0, y1) = block_bounds(h, k, bi);
                for bj in 0..k {
                    let (x0, x1) = block_bounds(w, k, bj);
                    let mut best = f64::NEG_INFINITY;
                    let mut best_idx = 0;
                    for y in y0..y1 {
                        let row = (ch * h + y) * w;
                        for xi in x0..x1 {
                            if x[row + xi] > best {
                                best = x[row + xi];
                                best_idx = row + xi;
                            }
                        }
                    }
                    d_input[best_idx] += up[pos];
                    pos += 1;
                }
            }
        }
    }
    Tensor::new(input.shape().to_vec(), d_input)
}

fn expect_map(input: &Tensor) -> Result<(usize, usize, usize)> {
    let shape = input.shape();
    if shape.len() != 3 {
        return Err(Error::ShapeMismatch {
            context: "spp expects a [C, H, W] input".to_string(),
            expected: vec![0, 0, 0],
            actual: shape.to_vec(),
        });
    }
    Ok((shape[0], shape[1], shape[2]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_map(rng: &mut ChaCha8Rng, c: usize, h: usize, w: usize) -> Tensor {
        let data = (0..c * h * w).map(|_| rng.random_range(-2.0..2.0)).collect();
        Tensor::new(vec![c, h, w], data).unwrap()
    }

    #[test]
    fn one_level_output_length_is_channel_count() {
        let cfg = SppConfig::new(1).unwrap();
        assert_eq!(cfg.output_len(2048), 2048);
    }

    #[test]
    fn three_level_output_length() {
        let cfg = SppConfig::new(3).unwrap();
        // 1 + 4 + 9 = 14 blocks per channel
        assert_eq!(cfg.output_len(2048), 28_672);
    }

    #[test]
    fn two_by_two_grid_equals_cells() {
        let input = Tensor::new(vec![1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let out = spp_forward(&input, &SppConfig::new(2).unwrap()).unwrap();
        assert_eq!(out.data(), &[4.0, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn level_one_is_global_max_per_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let input = random_map(&mut rng, 3, 5, 7);
        let out = spp_forward(&input, &SppConfig::new(1).unwrap()).unwrap();
        for ch in 0..3 {
            let plane = &input.data()[ch * 35..(ch + 1) * 35];
            let max = plane.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(out.data()[ch], max);
        }
    }

    #[test]
    fn output_length_constant_across_spatial_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cfg = SppConfig::new(3).unwrap();
        for _ in 0..20 {
            let h = rng.random_range(4..=64);
            let w = rng.random_range(4..=64);
            let input = random_map(&mut rng, 2, h, w);
            let out = spp_forward(&input, &cfg).unwrap();
            assert_eq!(out.len(), cfg.output_len(2));
        }
    }

    #[test]
    fn channel_permutation_permutes_output_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cfg = SppConfig::new(2).unwrap();
        let a = random_map(&mut rng, 2, 4, 4);
        // swap the two channels
        let mut swapped = a.data()[16..32].to_vec();
        swapped.extend_from_slice(&a.data()[..16]);
        let b = Tensor::new(vec![2, 4, 4], swapped).unwrap();

        let out_a = spp_forward(&a, &cfg).unwrap();
        let out_b = spp_forward(&b, &cfg).unwrap();
        // per level the channel blocks swap places
        let blocks = [1usize, 4];
        let mut off = 0;
        for nb in blocks {
            assert_eq!(out_a.data()[off..off + nb], out_b.data()[off + nb..off + 2 * nb]);
            assert_eq!(out_a.data()[off + nb..off + 2 * nb], out_b.data()[off..off + nb]);
            off += 2 * nb;
        }
    }

    #[test]
    fn backward_routes_to_global_argmax_at_level_one() {
        let input = Tensor::new(vec![1, 2, 3], vec![0.1, 0.9, 0.3, 0.2, 0.4, 0.0]).unwrap();
        let cfg = SppConfig::new(1).unwrap();
        let grad = spp_backward(&input, &cfg, &Tensor::from_vec(vec![3.0])).unwrap();
        assert_eq!(grad.data(), &[0.0, 3.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn backward_conserves_gradient_mass() {
        let input = Tensor::new(
            vec![1, 3, 3],
            vec![3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 5.0],
        )
        .unwrap();
        let cfg = SppConfig::new(2).unwrap();
        // integer upstream keeps the comparison exact
        let upstream = Tensor::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        let grad = spp_backward(&input, &cfg, &upstream).unwrap();
        let total: f64 = grad.data().iter().sum();
        assert_eq!(total, 15.0);
    }

    #[test]
    fn tiny_maps_use_overlapping_nonempty_blocks() {
        // H = W = 2 with a 3-level pyramid: level 3 has 9 blocks on 4 cells
        let input = Tensor::new(vec![1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let cfg = SppConfig::new(3).unwrap();
        let out = spp_forward(&input, &cfg).unwrap();
        assert_eq!(out.len(), 14);
        assert!(out.data().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn upstream_length_mismatch_is_an_error() {
        let input = Tensor::new(vec![1, 2, 2], vec![0.0; 4]).unwrap();
        let cfg = SppConfig::new(2).unwrap();
        let err = spp_backward(&input, &cfg, &Tensor::from_vec(vec![0.0; 4])).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch { .. }));
    }
}
