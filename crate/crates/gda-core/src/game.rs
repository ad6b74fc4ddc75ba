//! Mixed strategies, duality gaps, and random game generation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Exp, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::PayoffMatrix;
use crate::tolerances;
use crate::vecops;

/// A probability vector. Construction clamps negative dust in
/// `[-1e-12, 0)` to zero, requires the coordinate sum to be within `1e-10`
/// of one, and renormalizes, so a held value always sums to one exactly up
/// to one division.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MixedStrategy {
    probs: Vec<f64>,
}

impl TryFrom<Vec<f64>> for MixedStrategy {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<MixedStrategy> for Vec<f64> {
    fn from(s: MixedStrategy) -> Self {
        s.probs
    }
}

impl MixedStrategy {
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidInput("strategy needs at least one action".into()));
        }
        if !vecops::all_finite(&probs) {
            return Err(Error::InvalidInput("strategy entries must be finite".into()));
        }
        for p in probs.iter_mut() {
            if *p < 0.0 {
                if *p >= -tolerances::STRATEGY_DUST {
                    *p = 0.0;
                } else {
                    return Err(Error::InvalidInput(format!(
                        "strategy entry {p} below the -1e-12 dust floor"
                    )));
                }
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > tolerances::STRATEGY_SUM {
            return Err(Error::InvalidInput(format!(
                "strategy sums to {sum}, outside 1 +- 1e-10"
            )));
        }
        for p in probs.iter_mut() {
            *p /= sum;
        }
        Ok(Self { probs })
    }

    pub fn uniform(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidInput("strategy needs at least one action".into()));
        }
        Ok(Self { probs: vec![1.0 / d as f64; d] })
    }

    pub fn vertex(d: usize, i: usize) -> Result<Self> {
        if i >= d {
            return Err(Error::InvalidInput(format!("vertex index {i} out of range for {d}")));
        }
        let mut probs = vec![0.0; d];
        probs[i] = 1.0;
        Ok(Self { probs })
    }

    /// Uniform sample from the simplex: normalized unit exponentials.
    pub fn sample_uniform<R: Rng>(d: usize, rng: &mut R) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidInput("strategy needs at least one action".into()));
        }
        let exp = Exp::new(1.0).expect("rate 1 is valid");
        let mut probs: Vec<f64> = (0..d).map(|_| exp.sample(rng)).collect();
        let sum: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= sum);
        Ok(Self { probs })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    /// Indices with strictly positive probability.
    pub fn support(&self) -> Vec<usize> {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

impl std::ops::Deref for MixedStrategy {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.probs
    }
}

/// Duality gap of the profile `(x, y)`: `max_j (Ax)_j - min_i (A'y)_i`.
/// Nonnegative for strategies, zero exactly at equilibria.
pub fn duality_gap(a: &PayoffMatrix, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != a.cols() || y.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "gap needs x of length {} and y of length {}, got {} and {}",
            a.cols(),
            a.rows(),
            x.len(),
            y.len()
        )));
    }
    Ok(duality_gap_unchecked(a, x, y))
}

pub(crate) fn duality_gap_unchecked(a: &PayoffMatrix, x: &[f64], y: &[f64]) -> f64 {
    let ax = a.mul_x(x);
    let aty = a.tmul_y(y);
    vecops::max_entry(&ax) - vecops::min_entry(&aty)
}

/// Entry distributions for random games.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    /// Uniform on [0, 1).
    Uniform01,
    /// Uniform integers in [-10, 10].
    RandInt,
    /// 0 with probability 0.8, else 1.
    Binary,
    /// Standard normal.
    Normal,
    /// Standard lognormal, exp of a standard normal.
    LogNormal,
    /// Exponential with scale 1.
    Exponential,
    /// Entries supplied explicitly in the spec.
    Explicit,
}

impl Distribution {
    pub const NAMED: [Distribution; 6] = [
        Distribution::Uniform01,
        Distribution::RandInt,
        Distribution::Binary,
        Distribution::Normal,
        Distribution::LogNormal,
        Distribution::Exponential,
    ];

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "uniform01" => Ok(Self::Uniform01),
            "randint" => Ok(Self::RandInt),
            "binary" => Ok(Self::Binary),
            "normal" => Ok(Self::Normal),
            "lognormal" => Ok(Self::LogNormal),
            "exponential" => Ok(Self::Exponential),
            "explicit" => Ok(Self::Explicit),
            other => Err(Error::Config(format!("unknown distribution {other:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Uniform01 => "uniform01",
            Self::RandInt => "randint",
            Self::Binary => "binary",
            Self::Normal => "normal",
            Self::LogNormal => "lognormal",
            Self::Exponential => "exponential",
            Self::Explicit => "explicit",
        }
    }
}

impl std::fmt::Display for Distribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A reproducible game description: generation is a pure function of the
/// spec, with entries drawn row-major from a ChaCha8 stream seeded by
/// `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    /// Maximizer actions (matrix rows).
    pub m: usize,
    /// Minimizer actions (matrix columns).
    pub n: usize,
    pub distribution: Distribution,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<Vec<f64>>>,
}

impl GameSpec {
    pub fn random(m: usize, n: usize, distribution: Distribution, seed: u64) -> Self {
        Self { m, n, distribution, seed, entries: None }
    }

    pub fn explicit(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map(|r| r.len()).unwrap_or(0);
        if m == 0 || n == 0 {
            return Err(Error::InvalidInput("explicit game needs a nonempty matrix".into()));
        }
        Ok(Self { m, n, distribution: Distribution::Explicit, seed: 0, entries: Some(rows) })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Materializes the payoff matrix for a spec. Identical specs produce
/// identical entries on every platform.
pub fn generate_game(spec: &GameSpec) -> Result<PayoffMatrix> {
    if spec.distribution == Distribution::Explicit {
        let rows = spec
            .entries
            .as_ref()
            .ok_or_else(|| Error::Config("explicit distribution requires entries".into()))?;
        let a = PayoffMatrix::from_rows(rows)?;
        if a.rows() != spec.m || a.cols() != spec.n {
            return Err(Error::DimensionMismatch(format!(
                "explicit entries are {}x{}, spec says {}x{}",
                a.rows(),
                a.cols(),
                spec.m,
                spec.n
            )));
        }
        return Ok(a);
    }
    if spec.entries.is_some() {
        return Err(Error::Config("entries are only allowed with the explicit distribution".into()));
    }
    if spec.m == 0 || spec.n == 0 {
        return Err(Error::InvalidInput("game dimensions must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let count = spec.m * spec.n;
    let mut data = Vec::with_capacity(count);
    match spec.distribution {
        Distribution::Uniform01 => {
            for _ in 0..count {
                data.push(rng.random::<f64>());
            }
        }
        Distribution::RandInt => {
            for _ in 0..count {
                data.push(rng.random_range(-10..=10) as f64);
            }
        }
        Distribution::Binary => {
            for _ in 0..count {
                data.push(if rng.random::<f64>() < 0.8 { 0.0 } else { 1.0 });
            }
        }
        Distribution::Normal => {
            for _ in 0..count {
                let z: f64 = StandardNormal.sample(&mut rng);
                data.push(z);
            }
        }
        Distribution::LogNormal => {
            let d = LogNormal::new(0.0, 1.0).expect("valid lognormal");
            for _ in 0..count {
                data.push(d.sample(&mut rng));
            }
        }
        Distribution::Exponential => {
            let d = Exp::new(1.0).expect("valid exponential");
            for _ in 0..count {
                data.push(d.sample(&mut rng));
            }
        }
        Distribution::Explicit => unreachable!("handled above"),
    }
    PayoffMatrix::new(spec.m, spec.n, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::rock_paper_scissors;

    #[test]
    fn strategy_clamps_dust_and_renormalizes() {
        let s = MixedStrategy::new(vec![0.5, 0.5, -1e-13]).unwrap();
        assert_eq!(s.as_slice()[2], 0.0);
        let sum: f64 = s.iter().sum();
        assert!((sum - 1.0).abs() < 1e-15);
        assert_eq!(s.support(), vec![0, 1]);
    }

    #[test]
    fn strategy_rejects_large_violations() {
        assert!(MixedStrategy::new(vec![0.5, 0.5, -1e-9]).is_err());
        assert!(MixedStrategy::new(vec![0.6, 0.6]).is_err());
        assert!(MixedStrategy::new(vec![]).is_err());
        assert!(MixedStrategy::new(vec![f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn gap_at_rps_vertices_is_two() {
        let a = rock_paper_scissors();
        let x = MixedStrategy::vertex(3, 0).unwrap();
        let y = MixedStrategy::vertex(3, 1).unwrap();
        let gap = duality_gap(&a, &x, &y).unwrap();
        assert!((gap - 2.0).abs() <= 1e-15, "gap = {gap}");
    }

    #[test]
    fn gap_at_rps_uniform_is_zero() {
        let a = rock_paper_scissors();
        let u = MixedStrategy::uniform(3).unwrap();
        let gap = duality_gap(&a, &u, &u).unwrap();
        assert!(gap.abs() <= 1e-15);
    }

    #[test]
    fn gap_checks_dimensions() {
        let a = rock_paper_scissors();
        assert!(duality_gap(&a, &[1.0, 0.0], &[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn generation_is_deterministic_per_spec() {
        for dist in Distribution::NAMED {
            let spec = GameSpec::random(4, 7, dist, 123);
            let a = generate_game(&spec).unwrap();
            let b = generate_game(&spec).unwrap();
            assert_eq!(a, b, "{dist} not deterministic");
            let c = generate_game(&GameSpec::random(4, 7, dist, 124)).unwrap();
            assert_ne!(a, c, "{dist} ignores the seed");
        }
    }

    #[test]
    fn distribution_shapes_are_sane() {
        let spec = GameSpec::random(40, 50, Distribution::Binary, 9);
        let a = generate_game(&spec).unwrap();
        let zeros = a.entries().iter().filter(|&&v| v == 0.0).count();
        let frac = zeros as f64 / 2000.0;
        assert!((frac - 0.8).abs() < 0.05, "binary zero fraction {frac}");

        let spec = GameSpec::random(40, 50, Distribution::RandInt, 9);
        let a = generate_game(&spec).unwrap();
        assert!(a.entries().iter().all(|v| v.fract() == 0.0 && (-10.0..=10.0).contains(v)));

        let spec = GameSpec::random(40, 50, Distribution::Exponential, 9);
        let a = generate_game(&spec).unwrap();
        assert!(a.entries().iter().all(|&v| v >= 0.0));

        let spec = GameSpec::random(40, 50, Distribution::LogNormal, 9);
        let a = generate_game(&spec).unwrap();
        assert!(a.entries().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = GameSpec::random(10, 20, Distribution::Uniform01, 7);
        let json = spec.to_json().unwrap();
        assert!(json.contains("\"uniform01\""));
        let back = GameSpec::from_json(&json).unwrap();
        assert_eq!(spec, back);

        let ex = GameSpec::explicit(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let back = GameSpec::from_json(&ex.to_json().unwrap()).unwrap();
        assert_eq!(generate_game(&ex).unwrap(), generate_game(&back).unwrap());
    }

    #[test]
    fn explicit_requires_matching_dims() {
        let mut spec = GameSpec::explicit(vec![vec![1.0, 2.0]]).unwrap();
        spec.m = 3;
        assert!(generate_game(&spec).is_err());
    }
}
