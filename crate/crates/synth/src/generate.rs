use ddval_core::{ClientId, PointId, SubjectId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::config::{DistributionMode, SynthConfig};
use crate::flip::flip_labels;
use crate::Result;

type Point = ddval_core::Point;

/// Client id carried by points of the shared test set.
pub const TEST_CLIENT: ClientId = ClientId(u32::MAX);

const STREAM_PARAMS: u64 = 1;
const STREAM_CLIENT: u64 = 100;
const STREAM_TEST: u64 = 2;
const STREAM_FLIP: u64 = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub clients: Vec<Vec<Point>>,
    pub test: Vec<Point>,
}

impl SyntheticData {
    pub fn train_points(&self) -> impl Iterator<Item = &Point> {
        self.clients.iter().flatten()
    }
}

struct Model {
    label_means: Vec<Vec<f64>>,
    source_shifts: Vec<Vec<f64>>,
    prevalence: Vec<f64>,
}

fn random_direction(rng: &mut ChaCha8Rng, dim: usize, norm: f64) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let len = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    v.into_iter().map(|x| x * norm / len).collect()
}

fn build_model(cfg: &SynthConfig) -> Model {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(STREAM_PARAMS);
    let n_sources = cfg.n_clients;
    Model {
        label_means: (0..cfg.n_labels)
            .map(|_| random_direction(&mut rng, cfg.d_in, cfg.separation))
            .collect(),
        source_shifts: (0..n_sources)
            .map(|_| random_direction(&mut rng, cfg.d_in, cfg.source_shift))
            .collect(),
        prevalence: (0..n_sources).map(|s| cfg.prevalence(s)).collect(),
    }
}

struct Ids {
    next_point: u64,
    next_subject: u64,
}

/// Emits the scans of one subject drawn from `source`.
fn gen_subject(
    cfg: &SynthConfig,
    model: &Model,
    rng: &mut ChaCha8Rng,
    source: usize,
    scans: usize,
    client: ClientId,
    ids: &mut Ids,
) -> Vec<Point> {
    let noise = Normal::new(0.0, cfg.noise_std).expect("validated noise");
    let subject = SubjectId(ids.next_subject);
    ids.next_subject += 1;
    let offset: Vec<f64> = (0..cfg.d_in)
        .map(|_| cfg.subject_std * rng.sample::<f64, _>(StandardNormal))
        .collect();
    (0..scans)
        .map(|_| {
            let mut labels = vec![0u8; cfg.n_labels];
            for y in labels.iter_mut().skip(1) {
                *y = rng.random_bool(model.prevalence[source]) as u8;
            }
            let any = labels.iter().skip(1).any(|&y| y == 1);
            labels[0] = (any || rng.random_bool(cfg.undefined_finding_rate)) as u8;

            let mut features: Vec<f64> = model.source_shifts[source]
                .iter()
                .zip(&offset)
                .map(|(s, o)| s + o + noise.sample(rng))
                .collect();
            for (mean, _) in model.label_means.iter().zip(&labels).filter(|(_, &y)| y == 1) {
                for (f, m) in features.iter_mut().zip(mean) {
                    *f += m;
                }
            }
            let id = PointId(ids.next_point);
            ids.next_point += 1;
            Point {
                point_id: id,
                subject_id: subject,
                client_id: client,
                features,
                labels,
                flips: 0,
            }
        })
        .collect()
}

fn fill(
    cfg: &SynthConfig,
    model: &Model,
    rng: &mut ChaCha8Rng,
    n: usize,
    client: ClientId,
    source: Option<usize>,
    ids: &mut Ids,
) -> Vec<Point> {
    let mut points = Vec::with_capacity(n);
    while points.len() < n {
        let scans = rng.random_range(1..=cfg.max_scans_per_subject).min(n - points.len());
        let src = source.unwrap_or_else(|| rng.random_range(0..model.prevalence.len()));
        points.extend(gen_subject(cfg, model, rng, src, scans, client, ids));
    }
    points
}

/// Generates every client's training set and the shared test set.
///
/// Point and subject ids are globally unique; a subject's scans always land
/// on the same client. Per-client label flipping is applied when
/// `flip_fractions` is set.
pub fn gen_synthetic(cfg: &SynthConfig) -> Result<SyntheticData> {
    cfg.validate()?;
    let model = build_model(cfg);
    let mut ids = Ids {
        next_point: 0,
        next_subject: 0,
    };
    let mut clients = Vec::with_capacity(cfg.n_clients);
    for c in 0..cfg.n_clients {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(STREAM_CLIENT + c as u64);
        let source = match cfg.mode {
            DistributionMode::Iid => None,
            DistributionMode::NonIid => Some(c),
        };
        let mut points = fill(
            cfg,
            &model,
            &mut rng,
            cfg.n_points,
            ClientId(c as u32),
            source,
            &mut ids,
        );
        if let Some(&fraction) = cfg.flip_fractions.get(c) {
            let flip_seed = cfg.seed.wrapping_add(STREAM_FLIP + c as u64);
            points = flip_labels(&points, fraction, flip_seed)?.0;
        }
        clients.push(points);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(STREAM_TEST);
    let test = fill(cfg, &model, &mut rng, cfg.n_test, TEST_CLIENT, None, &mut ids);
    Ok(SyntheticData { clients, test })
}
