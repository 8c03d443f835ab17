//! Traffic-model fitting and deployment-center discovery.
//!
//! Pickup/drop-off counts by zone are fitted against center distance on a
//! log-log scale to recover the power-law decay exponent. Where no single
//! center exists, DBSCAN over raw pickup points finds hotspot clusters
//! whose centroids serve as deployment centers.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::geom::Point;

/// Per-zone traffic statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneStats {
    pub zone_id: String,
    pub centroid: Point,
    pub count: u64,
    pub distance_to_center_m: f64,
}

/// Log-log least-squares fit of counts against center distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub alpha_hat: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// 95% confidence interval on the decay exponent.
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n_points: usize,
}

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("need at least 3 zones beyond r_min with positive counts, found {0}")]
    InsufficientPoints(usize),
    #[error("degenerate regressor: all qualifying zones at the same distance")]
    DegenerateDistances,
}

/// Ordinary least squares on `(ln distance, ln count)` over zones farther
/// than `r_min` with positive counts; the decay exponent is the negated
/// slope. Zones inside `r_min` sit on the plateau and are excluded.
pub fn fit_power_law(zones: &[ZoneStats], r_min: f64) -> Result<PowerLawFit, FitError> {
    let pts: Vec<(f64, f64)> = zones
        .iter()
        .filter(|z| z.distance_to_center_m > r_min && z.count > 0)
        .map(|z| (z.distance_to_center_m.ln(), (z.count as f64).ln()))
        .collect();
    let n = pts.len();
    if n < 3 {
        return Err(FitError::InsufficientPoints(n));
    }
    let nf = n as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(FitError::DegenerateDistances);
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };

    // Slope standard error and the 95% t-interval.
    let (ci_lo, ci_hi) = if n > 2 {
        let sigma2 = ss_res / (nf - 2.0);
        let se = (sigma2 / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, nf - 2.0)
            .expect("valid dof")
            .inverse_cdf(0.975);
        (-slope - t * se, -slope + t * se)
    } else {
        (-slope, -slope)
    };

    Ok(PowerLawFit {
        alpha_hat: -slope,
        intercept,
        r_squared,
        ci_lo,
        ci_hi,
        n_points: n,
    })
}

/// DBSCAN labels: cluster index, or noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Noise,
    Cluster(usize),
}

/// Clustering outcome: per-point labels plus the number of clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub labels: Vec<Label>,
    pub n_clusters: usize,
}

impl Clustering {
    /// Point indices of each cluster, in cluster order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_clusters];
        for (i, label) in self.labels.iter().enumerate() {
            if let Label::Cluster(c) = label {
                out[*c].push(i);
            }
        }
        out
    }
}

/// Density-based clustering. Core points have at least `min_pts` neighbors
/// (themselves included) within `eps`; clusters grow from cores in input
/// order, and border points stay with the first core that reaches them.
pub fn dbscan(points: &[Point], eps: f64, min_pts: usize) -> Clustering {
    assert!(eps > 0.0, "eps must be positive");
    assert!(min_pts >= 1, "min_pts must be at least 1");
    let n = points.len();
    let neighbors = |i: usize| -> Vec<usize> {
        (0..n).filter(|&j| points[i].distance(&points[j]) <= eps).collect()
    };
    let mut labels = vec![None::<Label>; n];
    let mut n_clusters = 0;
    for i in 0..n {
        if labels[i].is_some() {
            continue;
        }
        let hood = neighbors(i);
        if hood.len() < min_pts {
            labels[i] = Some(Label::Noise);
            continue;
        }
        let cluster = n_clusters;
        n_clusters += 1;
        labels[i] = Some(Label::Cluster(cluster));
        let mut queue: Vec<usize> = hood;
        let mut k = 0;
        while k < queue.len() {
            let j = queue[k];
            k += 1;
            match labels[j] {
                Some(Label::Cluster(_)) => continue,
                // Noise becomes a border point of this cluster.
                Some(Label::Noise) | None => {}
            }
            labels[j] = Some(Label::Cluster(cluster));
            let jh = neighbors(j);
            if jh.len() >= min_pts {
                queue.extend(jh);
            }
        }
    }
    Clustering {
        labels: labels.into_iter().map(|l| l.expect("all labeled")).collect(),
        n_clusters,
    }
}

/// Centroids of the `k` largest clusters by member count. Count ties break
/// toward the centroid nearer the origin, then input order.
pub fn top_k_cluster_centers(clustering: &Clustering, points: &[Point], k: usize) -> Vec<Point> {
    let mut clusters: Vec<(usize, Point, usize)> = clustering
        .members()
        .into_iter()
        .enumerate()
        .filter(|(_, m)| !m.is_empty())
        .map(|(idx, members)| {
            let cx = members.iter().map(|&i| points[i].x).sum::<f64>() / members.len() as f64;
            let cy = members.iter().map(|&i| points[i].y).sum::<f64>() / members.len() as f64;
            (members.len(), Point::new(cx, cy), idx)
        })
        .collect();
    clusters.sort_by(|a, b| {
        b.0.cmp(&a.0)
            .then_with(|| a.1.norm().total_cmp(&b.1.norm()))
            .then_with(|| a.2.cmp(&b.2))
    });
    clusters.into_iter().take(k).map(|(_, c, _)| c).collect()
}

/// Synthetic zone statistics with exact power-law counts, optionally under
/// multiplicative lognormal noise. Distances run from `r_min * 1.2`
/// outward; counts scale as `c0 * (r / r_min)^(-alpha)`.
pub fn synthetic_zone_counts(
    n: usize,
    alpha: f64,
    r_min: f64,
    c0: f64,
    noise_sigma: f64,
    seed: u64,
) -> Vec<ZoneStats> {
    use rand::Rng;
    use rand_distr::{Distribution, Normal};
    let mut rng = crate::rng::stream(seed, crate::rng::PURPOSE_SYNTH_TRIPS);
    let normal = Normal::new(0.0, noise_sigma.max(1e-300)).expect("valid sigma");
    (0..n)
        .map(|i| {
            let r = r_min * (1.2 + 8.0 * (i as f64 + rng.random::<f64>()) / n as f64);
            let clean = c0 * (r / r_min).powf(-alpha);
            let noisy = if noise_sigma > 0.0 {
                clean * normal.sample(&mut rng).exp()
            } else {
                clean
            };
            ZoneStats {
                zone_id: format!("z{i}"),
                centroid: Point::new(r, 0.0),
                count: noisy.round().max(1.0) as u64,
                distance_to_center_m: r,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn noiseless_fit_recovers_exponent_exactly() {
        // Counts c * r^-1.5 with no noise: alpha_hat = 1.5, r^2 = 1.
        let zones: Vec<ZoneStats> = (0..40)
            .map(|i| {
                let r = 600.0 + 100.0 * i as f64;
                ZoneStats {
                    zone_id: format!("z{i}"),
                    centroid: Point::new(r, 0.0),
                    count: (1e9 * r.powf(-1.5)) as u64,
                    distance_to_center_m: r,
                }
            })
            .collect();
        let fit = fit_power_law(&zones, 500.0).unwrap();
        assert_relative_eq!(fit.alpha_hat, 1.5, epsilon = 1e-3);
        assert!(fit.r_squared > 0.999999);
    }

    #[test]
    fn too_few_zones_fail() {
        let zones = synthetic_zone_counts(2, 1.5, 500.0, 1e5, 0.0, 1);
        assert!(matches!(
            fit_power_law(&zones, 500.0),
            Err(FitError::InsufficientPoints(2))
        ));
        // Zones inside the plateau do not qualify.
        let inside: Vec<ZoneStats> = (0..5)
            .map(|i| ZoneStats {
                zone_id: format!("z{i}"),
                centroid: Point::new(100.0, 0.0),
                count: 10,
                distance_to_center_m: 100.0 + i as f64,
            })
            .collect();
        assert!(fit_power_law(&inside, 500.0).is_err());
    }

    #[test]
    fn scale_equivariance() {
        let zones = synthetic_zone_counts(60, 1.2, 400.0, 1e6, 0.05, 9);
        let fit = fit_power_law(&zones, 400.0).unwrap();
        let scaled: Vec<ZoneStats> = zones
            .iter()
            .map(|z| ZoneStats { count: z.count * 8, ..z.clone() })
            .collect();
        let fit2 = fit_power_law(&scaled, 400.0).unwrap();
        // Counts are rounded to integers, so equivariance is near-exact.
        assert_relative_eq!(fit.alpha_hat, fit2.alpha_hat, epsilon = 2e-3);
        assert!((fit2.intercept - fit.intercept - 8.0f64.ln()).abs() < 2e-3);
    }

    #[test]
    fn dbscan_separates_two_blobs() {
        let points = crate::roadnet::synthetic::hotspot_points(
            &[Point::new(-1000.0, 0.0), Point::new(1000.0, 0.0)],
            40,
            80.0,
            0,
            0.0,
            3,
        );
        let clustering = dbscan(&points, 200.0, 5);
        assert_eq!(clustering.n_clusters, 2);
        assert!(clustering.labels.iter().all(|l| *l != Label::Noise));
    }

    #[test]
    fn dbscan_all_noise_when_sparse() {
        let points: Vec<Point> = (0..10).map(|i| Point::new(1000.0 * i as f64, 0.0)).collect();
        let clustering = dbscan(&points, 10.0, 2);
        assert_eq!(clustering.n_clusters, 0);
        assert!(clustering.labels.iter().all(|l| *l == Label::Noise));
    }

    /// Reference implementation: label every point by brute force, growing
    /// clusters through core points only.
    fn dbscan_naive(points: &[Point], eps: f64, min_pts: usize) -> Clustering {
        let n = points.len();
        let is_core: Vec<bool> = (0..n)
            .map(|i| {
                (0..n).filter(|&j| points[i].distance(&points[j]) <= eps).count() >= min_pts
            })
            .collect();
        let mut labels = vec![None::<Label>; n];
        let mut n_clusters = 0;
        for i in 0..n {
            if labels[i].is_some() || !is_core[i] {
                continue;
            }
            let cluster = n_clusters;
            n_clusters += 1;
            let mut stack = vec![i];
            labels[i] = Some(Label::Cluster(cluster));
            while let Some(p) = stack.pop() {
                if !is_core[p] {
                    continue;
                }
                for j in 0..n {
                    if points[p].distance(&points[j]) <= eps
                        && !matches!(labels[j], Some(Label::Cluster(_)))
                    {
                        labels[j] = Some(Label::Cluster(cluster));
                        if is_core[j] {
                            stack.push(j);
                        }
                    }
                }
            }
        }
        Clustering {
            labels: labels
                .into_iter()
                .map(|l| l.unwrap_or(Label::Noise))
                .collect(),
            n_clusters,
        }
    }

    #[test]
    fn dbscan_matches_naive_oracle() {
        let fixtures: Vec<Vec<Point>> = vec![
            // 10-point fixture with one blob, a pair, and stragglers.
            vec![
                Point::new(0.0, 0.0),
                Point::new(1.0, 0.0),
                Point::new(0.0, 1.0),
                Point::new(1.0, 1.0),
                Point::new(0.5, 0.5),
                Point::new(10.0, 10.0),
                Point::new(10.5, 10.0),
                Point::new(50.0, 50.0),
                Point::new(-20.0, 5.0),
                Point::new(0.6, 0.4),
            ],
            crate::roadnet::synthetic::hotspot_points(
                &[Point::new(0.0, 0.0), Point::new(400.0, 0.0)],
                25,
                60.0,
                10,
                800.0,
                7,
            ),
        ];
        for points in fixtures {
            for (eps, min_pts) in [(1.2, 3), (2.0, 2), (100.0, 4)] {
                let fast = dbscan(&points, eps, min_pts);
                let slow = dbscan_naive(&points, eps, min_pts);
                assert_eq!(fast.n_clusters, slow.n_clusters);
                // Same partition: core expansion order may differ only for
                // border points, which both versions hand to the first
                // reaching core; with index-ordered scans they agree.
                assert_eq!(fast.labels, slow.labels, "eps={eps} min_pts={min_pts}");
            }
        }
    }

    #[test]
    fn top_k_centers_order_and_ties() {
        let points = vec![
            // Cluster of 3 around (0, 0).
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
            // Cluster of 2 around (100, 0).
            Point::new(100.0, 0.0),
            Point::new(101.0, 0.0),
        ];
        let clustering = dbscan(&points, 2.0, 2);
        let centers = top_k_cluster_centers(&clustering, &points, 1);
        assert_eq!(centers.len(), 1);
        assert!(centers[0].norm() < 2.0);
        // k beyond the cluster count returns everything.
        let centers = top_k_cluster_centers(&clustering, &points, 10);
        assert_eq!(centers.len(), 2);
    }

    #[test]
    fn centroids_inside_member_bounding_box() {
        let points = crate::roadnet::synthetic::hotspot_points(
            &[Point::new(500.0, -200.0)],
            50,
            100.0,
            0,
            0.0,
            11,
        );
        let clustering = dbscan(&points, 150.0, 5);
        for center in top_k_cluster_centers(&clustering, &points, 3) {
            let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
            let ys: Vec<f64> = points.iter().map(|p| p.y).collect();
            let (lo_x, hi_x) = (xs.iter().fold(f64::MAX, |a, &b| a.min(b)), xs.iter().fold(f64::MIN, |a, &b| a.max(b)));
            let (lo_y, hi_y) = (ys.iter().fold(f64::MAX, |a, &b| a.min(b)), ys.iter().fold(f64::MIN, |a, &b| a.max(b)));
            assert!(center.x >= lo_x && center.x <= hi_x);
            assert!(center.y >= lo_y && center.y <= hi_y);
        }
    }
}
