use std::collections::HashMap;

use super::ScoredItem;
use crate::ecosystem::{CreatorId, Item, ItemId};
use crate::error::{Error, Result};

/// Greedy minimum-exposure re-ranking.
///
/// Every alive creator with at least one candidate item must appear at least
/// `guarantee` times across all lists. Under-exposed creators take over the
/// lowest-scored slot that can be spared (its creator is departed or above
/// the guarantee), using their best-scored item for that list's user.
/// `score(list_index, item)` rescores an item for the owner of a list.
///
/// On error the input lists are left untouched.
pub fn min_exposure_rerank<F>(
    lists: &mut [Vec<ScoredItem>],
    guarantee: usize,
    candidates: &[&Item],
    alive: &[bool],
    score: F,
) -> Result<()>
where
    F: Fn(usize, &Item) -> f64,
{
    if guarantee == 0 {
        return Ok(());
    }
    let creator_of: HashMap<ItemId, CreatorId> = candidates.iter().map(|i| (i.id, i.creator)).collect();
    let mut eligible: Vec<usize> = candidates
        .iter()
        .map(|i| i.creator.index())
        .filter(|&c| alive.get(c).copied().unwrap_or(false))
        .collect();
    eligible.sort_unstable();
    eligible.dedup();

    let slots: usize = lists.iter().map(Vec::len).sum();
    let needed = guarantee * eligible.len();
    if needed > slots {
        return Err(Error::InfeasibleGuarantee { needed, slots });
    }

    let mut work: Vec<Vec<ScoredItem>> = lists.to_vec();
    let mut exposure = vec![0usize; alive.len()];
    for list in &work {
        for s in list {
            if let Some(c) = creator_of.get(&s.item) {
                exposure[c.index()] += 1;
            }
        }
    }

    for &c in &eligible {
        let own: Vec<&Item> = candidates.iter().copied().filter(|i| i.creator.index() == c).collect();
        while exposure[c] < guarantee {
            // (list, slot, replacement) with the lowest current slot score
            let mut best: Option<(usize, usize, ItemId, f64)> = None;
            for (li, list) in work.iter().enumerate() {
                let replacement = own
                    .iter()
                    .filter(|i| !list.iter().any(|s| s.item == i.id))
                    .map(|i| (i.id, score(li, i)))
                    .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
                let Some((rep_id, _)) = replacement else {
                    continue;
                };
                for (si, s) in list.iter().enumerate() {
                    let spare = match creator_of.get(&s.item) {
                        Some(d) => {
                            let d = d.index();
                            d != c && (!alive.get(d).copied().unwrap_or(false) || exposure[d] > guarantee)
                        }
                        None => true,
                    };
                    if spare && best.is_none_or(|(_, _, _, bs)| s.score < bs) {
                        best = Some((li, si, rep_id, s.score));
                    }
                }
            }
            let Some((li, si, rep_id, _)) = best else {
                return Err(Error::InfeasibleGuarantee { needed, slots });
            };
            if let Some(d) = creator_of.get(&work[li][si].item) {
                exposure[d.index()] -= 1;
            }
            let rep = candidates.iter().find(|i| i.id == rep_id).expect("replacement is a candidate");
            work[li][si] = ScoredItem {
                item: rep_id,
                score: score(li, rep),
            };
            exposure[c] += 1;
        }
    }

    lists.clone_from_slice(&work);
    Ok(())
}
