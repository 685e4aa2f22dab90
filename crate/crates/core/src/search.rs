//! DPC order selection.

use alloc::vec::Vec;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::powalloc::{maximize_weighted_sum_rate, MpOptions, MpProblem, MpSolution};
use crate::rates::{achievable_tuple, stream_rates, PowerProfile, RateTuple, Weights};
use crate::triangulate::{triangularize, Permutation, Triangularization};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PowerStrategy {
    /// Budgets split equally over the streams.
    Equal,
    /// Optimal allocation for every candidate order.
    Optimal(MpOptions),
}

/// Winning order together with its allocation and rates.
#[derive(Clone, Debug, PartialEq)]
pub struct PermChoice {
    pub perm: Permutation,
    pub tri: Triangularization,
    pub profile: PowerProfile,
    pub tuple: RateTuple,
    /// Present when the allocation came from the optimizer.
    pub mp: Option<MpSolution>,
}

/// Evaluates one order under a power strategy.
pub fn evaluate_permutation(
    ch: &ChannelSet,
    perm: &Permutation,
    weights: &Weights,
    strategy: PowerStrategy,
) -> Result<PermChoice> {
    let tri = triangularize(ch, perm)?;
    optimize_for(ch, tri, weights, strategy)
}

/// Applies a power strategy to an existing triangularization.
pub fn optimize_for(
    ch: &ChannelSet,
    tri: Triangularization,
    weights: &Weights,
    strategy: PowerStrategy,
) -> Result<PermChoice> {
    let (profile, mp) = match strategy {
        PowerStrategy::Equal => (PowerProfile::equal_for(ch), None),
        PowerStrategy::Optimal(opts) => {
            let problem = MpProblem::new(&tri, ch, weights)?;
            let sol = maximize_weighted_sum_rate(&problem, opts)?;
            (sol.profile.clone(), Some(sol))
        }
    };
    let tuple = achievable_tuple(&stream_rates(&tri, &profile, ch)?, weights);
    Ok(PermChoice {
        perm: tri.perm.clone(),
        tri,
        profile,
        tuple,
        mp,
    })
}

/// Best order by weighted sum-rate; ties keep the earliest candidate.
pub fn best_permutation(
    ch: &ChannelSet,
    candidates: &[Permutation],
    weights: &Weights,
    strategy: PowerStrategy,
) -> Result<PermChoice> {
    let mut best: Option<PermChoice> = None;
    for perm in candidates {
        let choice = evaluate_permutation(ch, perm, weights, strategy)?;
        let better = match &best {
            None => true,
            Some(b) => choice.tuple.weighted_sum_rate > b.tuple.weighted_sum_rate,
        };
        if better {
            best = Some(choice);
        }
    }
    best.ok_or(Error::InvalidParameter("no candidate permutations"))
}

/// Weighted sum-rate of every candidate under a strategy, in candidate order.
pub fn rank_permutations(
    ch: &ChannelSet,
    candidates: &[Permutation],
    weights: &Weights,
    strategy: PowerStrategy,
) -> Result<Vec<f64>> {
    candidates
        .iter()
        .map(|p| evaluate_permutation(ch, p, weights, strategy).map(|c| c.tuple.weighted_sum_rate))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{gen_channels, Budgets};
    use crate::triangulate::{enumerate_permutations, PermutationStrategy};

    #[test]
    fn best_is_max_over_candidates() {
        let ch = gen_channels(3, 4, true, Budgets::uniform(3, 1.0, 100.0, 100.0, 100.0)).unwrap();
        let perms = enumerate_permutations(3, PermutationStrategy::Exhaustive).unwrap();
        let w = Weights::sum_rate(3);
        let all = rank_permutations(&ch, &perms, &w, PowerStrategy::Equal).unwrap();
        let best = best_permutation(&ch, &perms, &w, PowerStrategy::Equal).unwrap();
        let max = all.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(best.tuple.weighted_sum_rate, max);
        let first = all.iter().position(|v| *v == max).unwrap();
        assert_eq!(best.perm, perms[first]);
    }

    #[test]
    fn empty_candidates_rejected() {
        let ch = gen_channels(2, 4, true, Budgets::uniform(2, 1.0, 1.0, 1.0, 1.0)).unwrap();
        assert!(best_permutation(&ch, &[], &Weights::sum_rate(2), PowerStrategy::Equal).is_err());
    }
}
