use std::collections::BTreeMap;

use ddval_core::{ClientId, SubjectId};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::DistributionMode;
use crate::{Result, SynthError};

type Point = ddval_core::Point;

/// Splits pooled points across clients, keeping each subject on one client.
///
/// IID shuffles subjects and deals them to the currently smallest client.
/// Non-IID sorts subjects by their mean condition count and cuts the sorted
/// list into contiguous, roughly equal blocks, so clients see skewed label
/// distributions. Returned points carry their new `client_id`.
pub fn partition(points: &[Point], n_clients: usize, mode: DistributionMode, seed: u64) -> Result<Vec<Vec<Point>>> {
    if n_clients == 0 {
        return Err(SynthError::InvalidConfig("need at least one client".into()));
    }
    let mut subjects: BTreeMap<SubjectId, Vec<&Point>> = BTreeMap::new();
    for p in points {
        subjects.entry(p.subject_id).or_default().push(p);
    }
    if subjects.len() < n_clients {
        return Err(SynthError::TooFewSubjects {
            subjects: subjects.len(),
            clients: n_clients,
        });
    }
    let mut groups: Vec<Vec<&Point>> = subjects.into_values().collect();
    let mut assignment = vec![0usize; groups.len()];

    match mode {
        DistributionMode::Iid => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            groups.shuffle(&mut rng);
            let mut sizes = vec![0usize; n_clients];
            for (slot, group) in assignment.iter_mut().zip(&groups) {
                let (client, _) = sizes
                    .iter()
                    .enumerate()
                    .min_by_key(|&(i, &s)| (s, i))
                    .expect("n_clients > 0");
                *slot = client;
                sizes[client] += group.len();
            }
        }
        DistributionMode::NonIid => {
            let skew = |g: &Vec<&Point>| {
                let total: usize = g.iter().map(|p| p.condition_count()).sum();
                (total as f64 / g.len() as f64, g[0].subject_id)
            };
            groups.sort_by(|a, b| {
                let (sa, ia) = skew(a);
                let (sb, ib) = skew(b);
                sa.total_cmp(&sb).then(ia.cmp(&ib))
            });
            let total = points.len();
            let n_groups = groups.len();
            let mut cumulative = 0usize;
            let mut previous = 0usize;
            for (j, group) in groups.iter().enumerate() {
                let desired = (cumulative * n_clients / total).min(n_clients - 1);
                let floor = (n_clients + j).saturating_sub(n_groups);
                let client = if j == 0 {
                    0
                } else {
                    desired.min(previous + 1).max(floor)
                };
                assignment[j] = client;
                previous = client;
                cumulative += group.len();
            }
        }
    }

    let mut out: Vec<Vec<Point>> = vec![Vec::new(); n_clients];
    for (group, &client) in groups.iter().zip(&assignment) {
        for &p in group {
            let mut p = p.clone();
            p.client_id = ClientId(client as u32);
            out[client].push(p);
        }
    }
    for client in &mut out {
        client.sort_by_key(|p| p.point_id);
    }
    Ok(out)
}
