//! Lloyd's k-means with seeded random-point initialisation.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{sq_dist, Model};

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared distances to the assigned centroid.
    pub inertia: f64,
    /// Inertia after every centroid update.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
}

/// Clusters `points` into `k` groups.
///
/// Stops once an assignment pass changes nothing or after `max_iters` centroid
/// updates. A cluster left empty takes over the point farthest from its own
/// centroid (among clusters with more than one member).
pub fn kmeans(points: &[&[f64]], k: usize, seed: u64, max_iters: usize) -> Result<KMeans> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::TooFewPoints { k, points: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut init: Vec<usize> = index::sample(&mut rng, n, k).into_vec();
    init.sort_unstable();
    let mut centroids: Vec<Vec<f64>> = init.iter().map(|&i| points[i].to_vec()).collect();

    let mut assignments = assign(points, &centroids);
    repair_empty(points, &centroids, &mut assignments, k);
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        centroids = means(points, &assignments, k, points[0].len());
        history.push(inertia(points, &assignments, &centroids));
        iterations += 1;
        if iterations >= max_iters.max(1) {
            break;
        }
        let mut next = assign(points, &centroids);
        repair_empty(points, &centroids, &mut next, k);
        if next == assignments {
            break;
        }
        assignments = next;
    }
    Ok(KMeans {
        inertia: *history.last().unwrap(),
        assignments,
        centroids,
        inertia_history: history,
        iterations,
    })
}

fn assign(points: &[&[f64]], centroids: &[Vec<f64>]) -> Vec<usize> {
    points
        .iter()
        .map(|p| {
            let mut best = (0, f64::INFINITY);
            for (j, c) in centroids.iter().enumerate() {
                let d = sq_dist(p, c);
                if d < best.1 {
                    best = (j, d);
                }
            }
            best.0
        })
        .collect()
}

fn repair_empty(points: &[&[f64]], centroids: &[Vec<f64>], assignments: &mut [usize], k: usize) {
    loop {
        let mut sizes = vec![0usize; k];
        for &a in assignments.iter() {
            sizes[a] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let far = (0..points.len())
            .filter(|&i| sizes[assignments[i]] > 1)
            .max_by(|&a, &b| {
                let da = sq_dist(points[a], &centroids[assignments[a]]);
                let db = sq_dist(points[b], &centroids[assignments[b]]);
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("k <= n leaves a cluster with spare members");
        assignments[far] = empty;
    }
}

fn means(points: &[&[f64]], assignments: &[usize], k: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in points.iter().zip(assignments) {
        counts[a] += 1;
        for (s, v) in sums[a].iter_mut().zip(p.iter()) {
            *s += v;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        let c = c as f64;
        s.iter_mut().for_each(|v| *v /= c);
    }
    sums
}

fn inertia(points: &[&[f64]], assignments: &[usize], centroids: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .zip(assignments)
        .map(|(p, &a)| sq_dist(p, &centroids[a]))
        .sum()
}

/// Inertia for each feasible `k` in `grid`; values larger than the point count
/// are skipped with a warning. Choosing `k` is left to the caller.
pub fn elbow_scan(points: &[&[f64]], grid: &[usize], seed: u64, max_iters: usize) -> Vec<(usize, f64)> {
    let mut rows = Vec::new();
    for &k in grid {
        if k == 0 || k > points.len() {
            log::warn!("skipping k={k}: only {} points", points.len());
            continue;
        }
        let fit = kmeans(points, k, seed, max_iters).expect("k checked");
        rows.push((k, fit.inertia));
    }
    rows
}

/// Entity embedding clusters whose centroids stand in for intermediate entities
/// in the composition soft-truth search.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityClusters {
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
}

impl EntityClusters {
    /// k-means over stored entity rows (stacked real/imaginary for ComplEx).
    pub fn fit(model: &Model, k: usize, seed: u64) -> Result<Self> {
        let points: Vec<&[f64]> = model.entities.iter_rows().collect();
        let fit = kmeans(&points, k.min(points.len()), seed, 300)?;
        Ok(Self {
            centroids: fit.centroids,
            assignments: fit.assignments,
        })
    }

    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }
}

/// Cluster counts per (dataset, model) chosen with the elbow method on the
/// benchmark graphs: WN18RR and FB15k-237.
pub const CLUSTER_PRESETS: &[(&str, &str, usize)] = &[
    ("wn18rr", "distmult", 300),
    ("wn18rr", "complex", 100),
    ("wn18rr", "conve", 300),
    ("wn18rr", "transe", 50),
    ("fb15k-237", "distmult", 200),
    ("fb15k-237", "complex", 300),
    ("fb15k-237", "conve", 300),
    ("fb15k-237", "transe", 100),
];

/// Grid scanned when picking cluster counts on the benchmark graphs.
pub const ELBOW_GRID: [usize; 12] = [5, 20, 50, 100, 150, 200, 250, 300, 350, 400, 450, 500];

pub fn cluster_preset(dataset: &str, model: &str) -> Option<usize> {
    let dataset = dataset.to_ascii_lowercase();
    let model = model.to_ascii_lowercase();
    CLUSTER_PRESETS
        .iter()
        .find(|(d, m, _)| *d == dataset && *m == model)
        .map(|&(_, _, k)| k)
}
