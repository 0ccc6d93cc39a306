//! Unit-rate Poisson paths: generation from counter-based streams, counting
//! queries, and the piecewise-constant view of `N_{2s/ε²}` on the s-axis.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Provenance of a path. Two sets of values may only be combined when they
/// carry the same tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PathTag {
    Simulated { seed: u64, stream: u64 },
    /// Built from explicit interarrival times; the token is a hash of them.
    Injected(u64),
}

/// Infinite sequence of jump times of a unit-rate Poisson process.
///
/// Interarrival `k` is `-ln(1 - U_k)` where `U_k` is built from the `k`-th
/// 64-bit output of ChaCha8 keyed by `seed` on stream `stream`, so the
/// sequence depends on nothing but `(seed, stream)`.
#[derive(Clone)]
pub struct PoissonStream {
    rng: ChaCha8Rng,
    clock: f64,
    tag: PathTag,
}

impl PoissonStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            rng,
            clock: 0.0,
            tag: PathTag::Simulated { seed, stream },
        }
    }

    pub fn tag(&self) -> PathTag {
        self.tag
    }

    #[inline]
    fn next_interarrival(&mut self) -> f64 {
        // 53 random bits, U in [0, 1)
        let u = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        -(-u).ln_1p()
    }
}

impl Iterator for PoissonStream {
    type Item = f64;

    #[inline]
    fn next(&mut self) -> Option<f64> {
        self.clock += self.next_interarrival();
        Some(self.clock)
    }
}

/// Materialized jump times of a unit-rate Poisson process on `(0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonPath {
    jump_times: Vec<f64>,
    horizon: f64,
    tag: PathTag,
}

fn check_horizon(horizon: f64) -> Result<()> {
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(Error::invalid(format!(
            "horizon must be finite and positive, got {horizon}"
        )));
    }
    Ok(())
}

impl PoissonPath {
    /// Generates every jump in `(0, horizon]` from stream `(seed, stream)`.
    pub fn simulate(horizon: f64, seed: u64, stream: u64) -> Result<Self> {
        check_horizon(horizon)?;
        let source = PoissonStream::new(seed, stream);
        let tag = source.tag();
        let jump_times = source.take_while(|&u| u <= horizon).collect();
        Ok(Self {
            jump_times,
            horizon,
            tag,
        })
    }

    /// Test hook: a path with prescribed interarrival times. Jumps falling
    /// after `horizon` are dropped.
    pub fn from_interarrivals(gaps: &[f64], horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        let mut clock = 0.0;
        let mut jump_times = Vec::with_capacity(gaps.len());
        let mut token: u64 = 0xcbf2_9ce4_8422_2325;
        for &gap in gaps {
            if !gap.is_finite() || gap <= 0.0 {
                return Err(Error::invalid(format!(
                    "interarrival times must be finite and positive, got {gap}"
                )));
            }
            clock += gap;
            if clock <= horizon {
                jump_times.push(clock);
            }
            token = (token ^ gap.to_bits()).wrapping_mul(0x0100_0000_01b3);
        }
        Ok(Self {
            jump_times,
            horizon,
            tag: PathTag::Injected(token ^ horizon.to_bits()),
        })
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn tag(&self) -> PathTag {
        self.tag
    }

    /// `N_u`, counting a jump located exactly at `u`.
    pub fn count_at(&self, u: f64) -> Result<u64> {
        if u.is_nan() || u < 0.0 {
            return Err(Error::invalid(format!("count_at needs u >= 0, got {u}")));
        }
        if u > self.horizon {
            return Err(Error::OutOfHorizon {
                requested: u,
                horizon: self.horizon,
            });
        }
        Ok(self.jump_times.partition_point(|&x| x <= u) as u64)
    }

    /// Segments of `[0, s_max]` on which `N_{2s/ε²}` is constant.
    pub fn segments(&self, epsilon: f64, s_max: f64) -> Result<Segments<std::iter::Copied<std::slice::Iter<'_, f64>>>> {
        check_rescaling(epsilon, s_max)?;
        let needed = 2.0 * s_max / (epsilon * epsilon);
        if needed > self.horizon {
            return Err(Error::OutOfHorizon {
                requested: needed,
                horizon: self.horizon,
            });
        }
        Ok(Segments::new(self.jump_times.iter().copied(), epsilon, s_max))
    }
}

fn check_rescaling(epsilon: f64, s_max: f64) -> Result<()> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    if !s_max.is_finite() || s_max <= 0.0 {
        return Err(Error::invalid(format!("s_max must be positive, got {s_max}")));
    }
    Ok(())
}

/// Streaming segments straight from `(seed, stream)`; jump times are never
/// stored, so memory stays constant however small `epsilon` is.
pub fn stream_segments(seed: u64, stream: u64, epsilon: f64, s_max: f64) -> Result<Segments<PoissonStream>> {
    check_rescaling(epsilon, s_max)?;
    Ok(Segments::new(PoissonStream::new(seed, stream), epsilon, s_max))
}

/// `[lo, hi)` on the s-axis with `N_{2s/ε²} = count` throughout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
}

/// Iterator over consecutive [`Segment`]s covering `[0, s_max]`.
///
/// A jump at internal time `u` becomes the breakpoint `s = ε²u/2`.
pub struct Segments<I> {
    jumps: I,
    scale: f64,
    s_max: f64,
    lo: f64,
    count: u64,
    done: bool,
}

impl<I: Iterator<Item = f64>> Segments<I> {
    fn new(jumps: I, epsilon: f64, s_max: f64) -> Self {
        Self {
            jumps,
            scale: 0.5 * epsilon * epsilon,
            s_max,
            lo: 0.0,
            count: 0,
            done: false,
        }
    }
}

impl<I: Iterator<Item = f64>> Iterator for Segments<I> {
    type Item = Segment;

    #[inline]
    fn next(&mut self) -> Option<Segment> {
        if self.done {
            return None;
        }
        let hi = match self.jumps.next() {
            Some(u) => u * self.scale,
            None => f64::INFINITY,
        };
        let seg = if hi >= self.s_max {
            self.done = true;
            Segment {
                lo: self.lo,
                hi: self.s_max,
                count: self.count,
            }
        } else {
            Segment {
                lo: self.lo,
                hi,
                count: self.count,
            }
        };
        self.lo = hi;
        self.count += 1;
        Some(seg)
    }
}
