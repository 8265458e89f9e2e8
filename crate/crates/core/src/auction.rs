//! Cross-valuation round: lots, bids, scores, best-pair selection.
//!
//! Every generator presents a lot of `k` samples; every other pair's
//! discriminator bids the mean of its outputs over the lot. A pair's score
//! is the mean bid its lot received minus the mean bid its own
//! discriminator handed out, so scores always sum to zero and adding a
//! constant to every bid changes nothing.

use crate::config::BidNormalization;
use crate::error::{Error, Result};
use crate::gan::GanPair;
use crate::mat::{stable_mean, Mat};
use crate::parallel;
use crate::rng::SeededRng;

/// Samples one generator presents for valuation, with the latents that
/// produced them so the lot can be re-derived exactly.
#[derive(Debug, Clone)]
pub struct Lot {
    pub auctioneer: usize,
    pub latents: Mat,
    pub items: Mat,
}

/// Generate a `k`-item lot from the pair's generator.
pub fn make_lot(pair: &GanPair, rng: &mut SeededRng, k: usize) -> Result<Lot> {
    if k == 0 {
        return Err(Error::Config("lot size must be at least 1".into()));
    }
    let latents = rng.normal_mat(k, pair.latent_dim());
    let items = pair.generator.forward_batch(&latents)?;
    Ok(Lot {
        auctioneer: pair.id,
        latents,
        items,
    })
}

/// Mean discriminator output of `bidder` over another pair's lot.
pub fn compute_bid(bidder: &GanPair, lot: &Lot) -> Result<f64> {
    if bidder.id == lot.auctioneer {
        return Err(Error::Contract(format!(
            "pair {} cannot bid on its own lot",
            bidder.id
        )));
    }
    let outputs = bidder.discriminator.forward_batch(&lot.items)?.column0();
    Ok(stable_mean(&outputs))
}

/// Off-diagonal `n x n` matrix of bids: `get(i, j)` is discriminator `j`'s
/// bid on generator `i`'s lot. Diagonal cells do not exist.
#[derive(Debug, Clone)]
pub struct BidMatrix {
    n: usize,
    cells: Vec<f64>,
}

impl BidMatrix {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!(
                "valuation requires at least 2 pairs, got {n}"
            )));
        }
        Ok(BidMatrix {
            n,
            cells: vec![f64::NAN; n * n],
        })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut m = BidMatrix::new(n)?;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m.set(i, j, f(i, j));
                }
            }
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i != j, "diagonal bid cells do not exist");
        self.cells[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(i != j, "diagonal bid cells do not exist");
        self.cells[i * self.n + j] = value;
    }

    /// Apply `f` to every off-diagonal entry (test hook for shift/scale
    /// invariance checks).
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> BidMatrix {
        let mut out = self.clone();
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    out.set(i, j, f(self.get(i, j)));
                }
            }
        }
        out
    }

    /// Standardize each bidder's column of bids (mean 0, std 1 across the
    /// `n - 1` lots it evaluated). Zero-variance columns are centered only.
    pub fn zscore_per_bidder(&self) -> BidMatrix {
        let mut out = self.clone();
        for j in 0..self.n {
            let col: Vec<f64> = (0..self.n).filter(|&i| i != j).map(|i| self.get(i, j)).collect();
            let mean = stable_mean(&col);
            let var = stable_mean(&col.iter().map(|v| (v - mean) * (v - mean)).collect::<Vec<_>>());
            let std = var.sqrt();
            for i in 0..self.n {
                if i != j {
                    let centered = self.get(i, j) - mean;
                    out.set(i, j, if std > 0.0 { centered / std } else { 0.0 });
                }
            }
        }
        out
    }
}

/// Net score per pair: mean bid received minus mean bid given.
pub fn compute_scores(bids: &BidMatrix) -> Vec<f64> {
    let n = bids.n();
    (0..n)
        .map(|i| {
            let received: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| bids.get(i, j)).collect();
            let given: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| bids.get(j, i)).collect();
            stable_mean(&received) - stable_mean(&given)
        })
        .collect()
}

/// Index of the maximum score; ties break to the lowest index.
pub fn select_best(scores: &[f64]) -> Result<usize> {
    if scores.len() < 2 {
        return Err(Error::Config(format!(
            "best-pair selection requires at least 2 scores, got {}",
            scores.len()
        )));
    }
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if s.is_nan() {
            return Err(Error::Numeric(format!("score for gan {i} is NaN")));
        }
        if *s > scores[best] {
            best = i;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone)]
pub struct AuctionResult {
    pub bids: BidMatrix,
    pub scores: Vec<f64>,
    pub best_index: usize,
}

/// Hold all `n` valuation rounds over read-only parameter snapshots: build
/// one lot per pair, fill every off-diagonal bid, score, select.
///
/// Lot latents come from `rng.fork("g{id}")`, so results do not depend on
/// scheduling. Scores are computed from z-scored bids when `normalize`
/// says so; the returned matrix always holds the raw bids.
pub fn run_auction(
    ensemble: &[GanPair],
    rng: &SeededRng,
    lot_size: usize,
    normalize: BidNormalization,
) -> Result<AuctionResult> {
    let n = ensemble.len();
    if n < 2 {
        return Err(Error::Config(format!(
            "valuation requires at least 2 pairs, got {n}"
        )));
    }

    let lots: Vec<Result<Lot>> = parallel::map_collect(
        ensemble.iter().collect::<Vec<_>>(),
        |pair| {
            let mut lot_rng = rng.fork(&format!("g{}", pair.id));
            make_lot(pair, &mut lot_rng, lot_size)
        },
    );
    let lots: Vec<Lot> = lots.into_iter().collect::<Result<_>>()?;

    let cell_indices: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let bids_flat: Vec<Result<f64>> = parallel::map_collect(cell_indices.clone(), |(i, j)| {
        compute_bid(&ensemble[j], &lots[i])
    });

    let mut bids = BidMatrix::new(n)?;
    for ((i, j), bid) in cell_indices.into_iter().zip(bids_flat) {
        bids.set(i, j, bid?);
    }

    let effective = match normalize {
        BidNormalization::None => bids.clone(),
        BidNormalization::Zscore => bids.zscore_per_bidder(),
    };
    let scores = compute_scores(&effective);
    let best_index = select_best(&scores)?;
    Ok(AuctionResult {
        bids,
        scores,
        best_index,
    })
}
