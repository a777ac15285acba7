//! Phase two: plain (non-private) average consensus over the effective
//! inputs, and the final `mod p` reduction.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::graph::Topology;
use crate::masking::ProtocolParams;
use crate::residue::Residue;
use crate::rng::SeededRng;
use crate::simnet::{self, RunReport, SimConfig};

pub const DEFAULT_GOSSIP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    FloodSum,
    GossipAvg,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::FloodSum => "flood",
            Variant::GossipAvg => "gossip",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "flood" | "flood_sum" => Some(Variant::FloodSum),
            "gossip" | "gossip_avg" => Some(Variant::GossipAvg),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsensusAlgo {
    pub variant: Variant,
    /// Gossip stops once `max − min ≤ 2·gossip_tolerance`.
    pub gossip_tolerance: f64,
    /// `None` means `50·n²·|E|`.
    pub max_rounds: Option<u64>,
}

impl ConsensusAlgo {
    pub fn flood() -> Self {
        ConsensusAlgo { variant: Variant::FloodSum, gossip_tolerance: DEFAULT_GOSSIP_TOLERANCE, max_rounds: None }
    }

    pub fn gossip() -> Self {
        ConsensusAlgo { variant: Variant::GossipAvg, ..Self::flood() }
    }

    pub fn round_limit(&self, t: &Topology) -> u64 {
        self.max_rounds.unwrap_or_else(|| {
            let n = t.n() as u64;
            50 * n * n * t.edges().len() as u64
        })
    }
}

impl Default for ConsensusAlgo {
    fn default() -> Self {
        Self::flood()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusResult {
    /// Per-agent estimate of `Σ s̃_i`.
    pub values: Vec<BigRational>,
    pub rounds: u64,
    pub messages: u64,
}

fn require_connected(t: &Topology) -> Result<()> {
    let parts = t.components();
    if parts.len() > 1 {
        Err(Error::Disconnected(parts.to_string()))
    } else {
        Ok(())
    }
}

/// Every agent floods `(origin, s̃_origin)` pairs, deduplicated by origin, in
/// synchronous rounds until all agents know all `n` values, then sums them
/// over the integers. One message per pair per directed link.
pub fn flood_sum(t: &Topology, effective_inputs: &[Residue]) -> Result<ConsensusResult> {
    require_connected(t)?;
    let n = t.n();
    assert_eq!(effective_inputs.len(), n, "one effective input per agent");
    let mut known: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|o| o == i).collect()).collect();
    let mut fresh: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let (mut rounds, mut messages) = (0u64, 0u64);
    while fresh.iter().any(|f| !f.is_empty()) {
        let mut next = vec![Vec::new(); n];
        for (i, origins) in fresh.iter().enumerate() {
            for &j in t.neighbors(i + 1)? {
                for &o in origins {
                    messages += 1;
                    if !known[j - 1][o] {
                        known[j - 1][o] = true;
                        next[j - 1].push(o);
                    }
                }
            }
        }
        fresh = next;
        rounds += 1;
    }
    // the last round only confirms that nothing new arrived
    rounds = rounds.saturating_sub(1);
    debug_assert!(known.iter().all(|k| k.iter().all(|&b| b)));
    let total: u128 = effective_inputs.iter().map(|r| r.value() as u128).sum();
    let total = BigRational::from_integer(BigInt::from(total));
    Ok(ConsensusResult { values: vec![total; n], rounds, messages })
}

/// Snapshot handed to gossip observers: the values are `numerators / denominator`.
pub struct GossipRound<'a> {
    pub round: u64,
    pub edge: (usize, usize),
    numerators: &'a [BigInt],
    denominator: &'a BigInt,
}

impl GossipRound<'_> {
    pub fn values(&self) -> Vec<BigRational> {
        self.numerators.iter().map(|x| BigRational::new(x.clone(), self.denominator.clone())).collect()
    }

    pub fn sum(&self) -> BigRational {
        BigRational::new(self.numerators.iter().sum(), self.denominator.clone())
    }

    pub fn max(&self) -> BigRational {
        BigRational::new(self.numerators.iter().max().cloned().unwrap_or_default(), self.denominator.clone())
    }

    pub fn min(&self) -> BigRational {
        BigRational::new(self.numerators.iter().min().cloned().unwrap_or_default(), self.denominator.clone())
    }

    pub fn spread(&self) -> BigRational {
        self.max() - self.min()
    }
}

/// Randomized pairwise gossip: each round a uniformly random edge is picked
/// and both endpoints replace their values by the pair mean.
pub fn gossip_avg(
    t: &Topology,
    values: &[BigRational],
    algo: &ConsensusAlgo,
    rng: &mut SeededRng,
) -> Result<ConsensusResult> {
    gossip_avg_observed(t, values, algo, rng, |_| {})
}

/// [`gossip_avg`] calling `observer` after every exchange.
pub fn gossip_avg_observed<F>(
    t: &Topology,
    values: &[BigRational],
    algo: &ConsensusAlgo,
    rng: &mut SeededRng,
    mut observer: F,
) -> Result<ConsensusResult>
where
    F: FnMut(&GossipRound<'_>),
{
    require_connected(t)?;
    assert_eq!(values.len(), t.n(), "one value per agent");
    let tol = BigRational::from_float(algo.gossip_tolerance)
        .filter(|x| x.is_positive())
        .ok_or_else(|| Error::InvalidParams(format!("gossip tolerance {} must be positive", algo.gossip_tolerance)))?;
    let limit = algo.round_limit(t);

    // Work over a shared denominator so that each exchange and every spread
    // check is integer arithmetic; averaging keeps values dyadic multiples of it.
    let mut denom = values.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    let mut nums: Vec<BigInt> = values.iter().map(|v| v.numer() * (&denom / v.denom())).collect();
    // spread ≤ 2·tol  ⇔  (max − min)·tol_den ≤ 2·tol_num·denom
    let converged = |nums: &[BigInt], denom: &BigInt| {
        let (lo, hi) = min_max(nums);
        (hi - lo) * tol.denom() <= BigInt::from(2) * tol.numer() * denom
    };

    let edges = t.edges();
    let (mut rounds, mut messages) = (0u64, 0u64);
    while !converged(&nums, &denom) {
        if rounds >= limit {
            let (lo, hi) = min_max(&nums);
            let spread = BigRational::new(hi - lo, denom.clone());
            return Err(Error::GossipNotConverged {
                rounds,
                spread: spread.to_string(),
                values: nums.iter().map(|x| BigRational::new(x.clone(), denom.clone()).to_string()).collect(),
            });
        }
        let (i, j) = edges[rng.below(edges.len() as u64) as usize];
        let mut pair = &nums[i - 1] + &nums[j - 1];
        if pair.is_odd() {
            for x in nums.iter_mut() {
                *x <<= 1;
            }
            denom <<= 1;
            pair <<= 1;
        }
        pair >>= 1;
        nums[i - 1] = pair.clone();
        nums[j - 1] = pair;
        rounds += 1;
        messages += 2;
        observer(&GossipRound { round: rounds, edge: (i, j), numerators: &nums, denominator: &denom });
    }
    let values = nums.into_iter().map(|x| BigRational::new(x, denom.clone())).collect();
    Ok(ConsensusResult { values, rounds, messages })
}

fn min_max(xs: &[BigInt]) -> (&BigInt, &BigInt) {
    let lo = xs.iter().min().expect("non-empty");
    let hi = xs.iter().max().expect("non-empty");
    (lo, hi)
}

/// Round the estimate of `Σ s̃_i` to the nearest integer, reduce mod `p` and
/// divide by `n`. Estimates farther than 1/4 from an integer are rejected.
pub fn finalize(sum_estimate: &BigRational, params: &ProtocolParams) -> Result<BigRational> {
    let nearest = sum_estimate.round();
    let quarter = BigRational::new(BigInt::one(), BigInt::from(4));
    if (sum_estimate - &nearest).abs() >= quarter {
        return Err(Error::RoundingAmbiguous(sum_estimate.to_string()));
    }
    let total = nearest.to_integer().mod_floor(&BigInt::from(params.p().get()));
    Ok(BigRational::new(total, BigInt::from(params.n())))
}

/// Convenience: full two-phase run with a randomized schedule and no adversary.
pub fn run_protocol(
    t: &Topology,
    inputs: &[u64],
    params: &ProtocolParams,
    algo: &ConsensusAlgo,
    seed: u64,
) -> Result<RunReport> {
    let cfg = SimConfig::new(t.clone(), inputs.to_vec(), *params).algo(*algo).seed(seed);
    Ok(simnet::simulate(&cfg)?.report)
}

/// Renders a rational as `14/3` (or `74` for integers).
pub fn rational_string(x: &BigRational) -> String {
    x.to_string()
}

/// Decimal rendering with 12 significant digits. Terminating rationals whose
/// expansion fits are printed exactly and tagged `exact`; everything else is
/// rounded and ends in `…`.
pub fn decimal_string(x: &BigRational) -> String {
    if x.is_zero() {
        return "0, exact".into();
    }
    if let Some(s) = exact_decimal(x, 12) {
        return format!("{s}, exact");
    }
    let f = x.to_f64().unwrap_or(f64::NAN);
    let mag = f.abs().log10().floor() as i32;
    let decimals = (11 - mag).max(0) as usize;
    let mut s = format!("{f:.decimals$}");
    if s.contains('.') {
        s = s.trim_end_matches('0').trim_end_matches('.').to_string();
    }
    format!("{s}…")
}

fn exact_decimal(x: &BigRational, digits: usize) -> Option<String> {
    let mut den = x.denom().clone();
    let mut scale = 0usize;
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let (mut twos, mut fives) = (0usize, 0usize);
    while (&den % &two).is_zero() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return None;
    }
    scale += twos.max(fives);
    let scaled = x * BigRational::from_integer(BigInt::from(10).pow(scale as u32));
    let int = scaled.to_integer();
    let digits_str = int.abs().to_string();
    let significant = digits_str.trim_start_matches('0').len().max(1);
    if significant > digits {
        return None;
    }
    let sign = if int.is_negative() { "-" } else { "" };
    if scale == 0 {
        return Some(format!("{sign}{digits_str}"));
    }
    let padded = format!("{:0>width$}", digits_str, width = scale + 1);
    let (whole, frac) = padded.split_at(padded.len() - scale);
    Some(format!("{sign}{whole}.{frac}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::residue::Modulus;

    fn int(v: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(v))
    }

    fn frac(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn flood_examples() {
        let p = Modulus::new(30).unwrap();
        let eff: Vec<Residue> = [26, 28, 20].iter().map(|&v| p.reduce(v)).collect();
        let res = flood_sum(&Topology::complete(3), &eff).unwrap();
        assert_eq!(res.values, vec![int(74); 3]);
        assert_eq!(res.rounds, 1);
        assert_eq!(res.messages, 18);

        let single = flood_sum(&Topology::new(1, []).unwrap(), &[p.reduce(9)]).unwrap();
        assert_eq!(single.values, vec![int(9)]);
        assert_eq!(single.messages, 0);

        let zeros = vec![p.zero(); 6];
        assert_eq!(flood_sum(&Topology::star(6), &zeros).unwrap().values, vec![int(0); 6]);
    }

    #[test]
    fn flood_rejects_disconnected() {
        let p = Modulus::new(5).unwrap();
        let t = Topology::new(4, [(1, 2), (3, 4)]).unwrap();
        let err = flood_sum(&t, &[p.zero(); 4]).unwrap_err();
        assert_eq!(err, Error::Disconnected("{1,2} {3,4}".into()));
    }

    #[test]
    fn gossip_single_exchange() {
        let algo = ConsensusAlgo { gossip_tolerance: 1e-9, ..ConsensusAlgo::gossip() };
        let res = gossip_avg(&Topology::path(2), &[int(0), int(2)], &algo, &mut SeededRng::new(5)).unwrap();
        assert_eq!(res.values, vec![int(1), int(1)]);
        assert_eq!(res.rounds, 1);
    }

    #[test]
    fn gossip_fixed_point() {
        let algo = ConsensusAlgo::gossip();
        let vals = vec![frac(7, 3); 4];
        let res = gossip_avg(&Topology::cycle(4), &vals, &algo, &mut SeededRng::new(5)).unwrap();
        assert_eq!(res.rounds, 0);
        assert_eq!(res.values, vals);
    }

    #[test]
    fn gossip_on_worked_example() {
        let algo = ConsensusAlgo { gossip_tolerance: 1e-6, ..ConsensusAlgo::gossip() };
        let vals = [int(78), int(84), int(60)];
        let mut sums = Vec::new();
        let res =
            gossip_avg_observed(&Topology::complete(3), &vals, &algo, &mut SeededRng::new(11), |r| sums.push(r.sum()))
                .unwrap();
        let tol = BigRational::from_float(1e-6).unwrap();
        for v in &res.values {
            assert!((v - int(74)).abs() <= tol, "{v}");
        }
        assert!(sums.iter().all(|s| *s == int(222)));
    }

    #[test]
    fn gossip_respects_round_limit() {
        let algo = ConsensusAlgo { max_rounds: Some(3), ..ConsensusAlgo::gossip() };
        let err =
            gossip_avg(&Topology::path(5), &[int(0), int(0), int(0), int(0), int(100)], &algo, &mut SeededRng::new(1))
                .unwrap_err();
        match err {
            Error::GossipNotConverged { rounds, values, .. } => {
                assert_eq!(rounds, 3);
                assert_eq!(values.len(), 5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn gossip_is_monotone() {
        let algo = ConsensusAlgo::gossip();
        let vals: Vec<BigRational> = [3, 41, 17, 0, 29, 8].iter().map(|&v| int(v)).collect();
        let (mut hi, mut lo) = (int(41), int(0));
        gossip_avg_observed(&Topology::cycle(6), &vals, &algo, &mut SeededRng::new(2), |r| {
            assert!(r.max() <= hi && r.min() >= lo);
            hi = r.max();
            lo = r.min();
        })
        .unwrap();
    }

    #[test]
    fn finalize_examples() {
        let params = ProtocolParams::new(3, 10, Some(30)).unwrap();
        assert_eq!(finalize(&int(74), &params).unwrap(), frac(14, 3));
        assert_eq!(finalize(&int(0), &params).unwrap(), int(0));
        let near = BigRational::from_float(73.9999996).unwrap();
        assert_eq!(finalize(&near, &params).unwrap(), frac(14, 3));
        assert!(matches!(finalize(&frac(147, 2), &params), Err(Error::RoundingAmbiguous(_))));
        assert!(matches!(finalize(&frac(295, 4), &params), Err(Error::RoundingAmbiguous(_))));
        assert_eq!(finalize(&frac(591, 8), &params).unwrap(), frac(14, 3));
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(decimal_string(&frac(14, 3)), "4.66666666667…");
        assert_eq!(decimal_string(&frac(5, 2)), "2.5, exact");
        assert_eq!(decimal_string(&int(74)), "74, exact");
        assert_eq!(decimal_string(&frac(-1, 8)), "-0.125, exact");
        assert_eq!(decimal_string(&frac(0, 8)), "0, exact");
        assert_eq!(decimal_string(&frac(1, 1 << 20)), "0.000000953674316406…");
    }
}
