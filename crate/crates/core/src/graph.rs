//! Information diffusion over declared neighbor edges and the Aligned Path
//! Graph (APG): informed buyers ordered by (BFS distance from the seller, id).

use std::collections::{BTreeSet, VecDeque};

use crate::model::{AuctionInstance, BuyerId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("buyer {0} is not informed, so it has no position in the aligned path")]
    NotInformed(BuyerId),
}

/// BFS distances from the seller under declared edges; `None` for buyers
/// the information never reaches. Seller neighbors are at distance 1.
pub fn diffusion_distances(instance: &AuctionInstance) -> Vec<Option<u32>> {
    let mut dist = vec![None; instance.n()];
    let mut queue = VecDeque::new();
    for &nb in instance.seller_neighbors() {
        dist[nb.index()] = Some(1);
        queue.push_back(nb);
    }
    while let Some(cur) = queue.pop_front() {
        let d = dist[cur.index()].expect("queued buyers have a distance");
        for &nb in &instance.declared(cur).neighbors {
            if dist[nb.index()].is_none() {
                dist[nb.index()] = Some(d + 1);
                queue.push_back(nb);
            }
        }
    }
    dist
}

/// Buyers reachable from the seller through declared neighbor edges.
pub fn informed_set(instance: &AuctionInstance) -> BTreeSet<BuyerId> {
    diffusion_distances(instance)
        .into_iter()
        .enumerate()
        .filter_map(|(i, d)| d.map(|_| BuyerId::from_index(i)))
        .collect()
}

/// The Aligned Path Graph over the informed buyers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignedPath {
    order: Vec<BuyerId>,
    /// 1-based position per buyer slot; `None` when uninformed.
    position: Vec<Option<usize>>,
    distance: Vec<Option<u32>>,
}

impl AlignedPath {
    /// Informed buyers, nearest first.
    pub fn order(&self) -> &[BuyerId] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn is_informed(&self, id: BuyerId) -> bool {
        self.position.get(id.index()).copied().flatten().is_some()
    }

    /// `l^P_i`: 1-based position of `id` on the path.
    pub fn position(&self, id: BuyerId) -> Option<usize> {
        self.position.get(id.index()).copied().flatten()
    }

    /// BFS distance from the seller in the declared graph.
    pub fn bfs_distance(&self, id: BuyerId) -> Option<u32> {
        self.distance.get(id.index()).copied().flatten()
    }

    /// Buyers before `id` on the path (`P^close`).
    pub fn close(&self, id: BuyerId) -> Result<&[BuyerId], GraphError> {
        let pos = self.position(id).ok_or(GraphError::NotInformed(id))?;
        Ok(&self.order[..pos - 1])
    }

    /// Buyers after `id` on the path (`P^far`).
    pub fn far(&self, id: BuyerId) -> Result<&[BuyerId], GraphError> {
        let pos = self.position(id).ok_or(GraphError::NotInformed(id))?;
        Ok(&self.order[pos..])
    }
}

/// Orders the informed buyers by (distance from the seller, id).
pub fn build_apg(instance: &AuctionInstance) -> AlignedPath {
    let distance = diffusion_distances(instance);
    let mut order: Vec<BuyerId> =
        distance.iter().enumerate().filter_map(|(i, d)| d.map(|_| BuyerId::from_index(i))).collect();
    order.sort_by_key(|id| (distance[id.index()], *id));
    let mut position = vec![None; instance.n()];
    for (pos, id) in order.iter().enumerate() {
        position[id.index()] = Some(pos + 1);
    }
    AlignedPath { order, position, distance }
}

/// `(P_i^close, P_i^far)` as sets.
pub fn close_far_split(apg: &AlignedPath, id: BuyerId) -> Result<(BTreeSet<BuyerId>, BTreeSet<BuyerId>), GraphError> {
    Ok((apg.close(id)?.iter().copied().collect(), apg.far(id)?.iter().copied().collect()))
}
