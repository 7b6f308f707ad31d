//! Generational particle populations kept at a fixed size by water-filling collapse.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::waterfill::{collapse, ParticleSet};

/// Runs `generations` rounds of: each particle spawns `children` offspring through
/// `propagate`, offspring are weighted by `parent weight × fitness`, and the pool is
/// collapsed back to at most `size` particles with unbiased weights.
pub fn waterfill_generations<T, P, F>(
    init: ParticleSet<T>,
    size: usize,
    children: usize,
    generations: usize,
    mut propagate: P,
    fitness: F,
    rng: &mut RngStream,
) -> Result<ParticleSet<T>>
where
    T: Clone,
    P: FnMut(&T, &mut RngStream) -> T,
    F: Fn(&T) -> f64,
{
    if size == 0 || children == 0 {
        return Err(Error::InvalidArgument("population size and children must be positive".into()));
    }
    let mut pop = init;
    for g in 0..generations {
        let mut pts = Vec::with_capacity(pop.len() * children);
        let mut wts = Vec::with_capacity(pop.len() * children);
        for (p, &w) in pop.points().iter().zip(pop.weights()) {
            for _ in 0..children {
                let c = propagate(p, rng);
                let f = fitness(&c);
                if !(f >= 0.0) || !f.is_finite() {
                    return Err(Error::InvalidArgument(format!("generation {g}: fitness {f} is not a finite nonnegative number")));
                }
                wts.push(w * f / children as f64);
                pts.push(c);
            }
        }
        let ps = ParticleSet::from_unnormalized(pts, wts)?;
        let cs = collapse(&ps, size.min(ps.len()), rng)?;
        pop = ps.apply(&cs);
    }
    Ok(pop)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn population_size_is_bounded_and_mean_tracks_fitness() {
        let pts: Vec<f64> = (0..50).map(|i| i as f64 / 50.0).collect();
        let init = ParticleSet::from_unnormalized(pts, vec![1.0; 50]).unwrap();
        let mut rng = RngStream::new(4, 0);
        let out = waterfill_generations(
            init,
            50,
            4,
            5,
            |x: &f64, r: &mut RngStream| (x + r.random_range(-0.02..0.02)).clamp(0.0, 1.0),
            |x: &f64| x * x + 1e-3,
            &mut rng,
        )
        .unwrap();
        assert!(out.len() <= 50);
        let m: f64 = out.points().iter().zip(out.weights()).map(|(p, w)| p * w).sum();
        assert!(m > 0.6, "weighted mean {m}");
    }
}
