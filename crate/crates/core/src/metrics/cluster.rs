//! Flat-kernel mean-shift over pooled fixation locations.

use crate::error::{Error, Result};
use crate::model::Scanpath;

use super::strings::{FixationString, StringSource};

pub const DEFAULT_BANDWIDTH: f64 = 60.0;
const MAX_ITERS: usize = 300;

/// Cluster centers and one cluster id per input point.
#[derive(Clone, Debug, PartialEq)]
pub struct Clustering {
    pub centers: Vec<(f64, f64)>,
    pub assignment: Vec<usize>,
}

fn seek_mode(points: &[(f64, f64)], start: (f64, f64), bandwidth: f64) -> (f64, f64) {
    let r2 = bandwidth * bandwidth;
    let stop = 1e-3 * bandwidth;
    let mut c = start;
    for _ in 0..MAX_ITERS {
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
        for &(x, y) in points {
            if (x - c.0).powi(2) + (y - c.1).powi(2) <= r2 {
                sx += x;
                sy += y;
                n += 1;
            }
        }
        // The start point itself is always inside its window.
        let next = (sx / n as f64, sy / n as f64);
        let moved = (next.0 - c.0).hypot(next.1 - c.1);
        c = next;
        if moved < stop {
            break;
        }
    }
    c
}

/// Every point climbs to its mode; modes closer than `bandwidth` merge,
/// scanning modes by ascending x then y. Cluster ids follow the same order.
pub fn mean_shift(points: &[(f64, f64)], bandwidth: f64) -> Result<Clustering> {
    if points.is_empty() {
        return Err(Error::Contract("clustering needs at least one fixation".into()));
    }
    if !(bandwidth > 0.0) {
        return Err(Error::Config(format!("bandwidth must be positive, got {bandwidth}")));
    }
    let modes: Vec<(f64, f64)> = points.iter().map(|&p| seek_mode(points, p, bandwidth)).collect();
    let mut order: Vec<usize> = (0..modes.len()).collect();
    order.sort_by(|&i, &j| modes[i].0.total_cmp(&modes[j].0).then(modes[i].1.total_cmp(&modes[j].1)));

    let mut centers: Vec<(f64, f64)> = Vec::new();
    let mut assignment = vec![0; points.len()];
    for i in order {
        let m = modes[i];
        let near = centers
            .iter()
            .position(|c| (c.0 - m.0).hypot(c.1 - m.1) < bandwidth);
        assignment[i] = match near {
            Some(k) => k,
            None => {
                centers.push(m);
                centers.len() - 1
            }
        };
    }
    Ok(Clustering { centers, assignment })
}

/// Clusters the pooled fixations of `paths` and returns one cluster-id
/// string per path.
pub fn cluster_strings(paths: &[&Scanpath], bandwidth: f64) -> Result<Vec<FixationString>> {
    let points: Vec<(f64, f64)> = paths.iter().flat_map(|p| p.points()).collect();
    let clustering = mean_shift(&points, bandwidth)?;
    let mut offset = 0;
    Ok(paths
        .iter()
        .map(|p| {
            let ids = clustering.assignment[offset..offset + p.len()]
                .iter()
                .map(|&c| c as u32)
                .collect();
            offset += p.len();
            FixationString::new(ids, StringSource::Cluster)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_cloud_is_one_cluster() {
        let c = mean_shift(&[(10.0, 10.0); 5], 60.0).unwrap();
        assert_eq!(c.centers.len(), 1);
        assert_eq!(c.assignment, vec![0; 5]);
    }

    #[test]
    fn two_separated_groups() {
        let mut pts = Vec::new();
        for i in 0..5 {
            pts.push((600.0 + i as f64, 100.0 + i as f64));
            pts.push((100.0 + i as f64, 100.0 - i as f64));
        }
        let c = mean_shift(&pts, 50.0).unwrap();
        assert_eq!(c.centers.len(), 2);
        // Lower x gets id 0.
        assert_eq!(c.assignment[1], 0);
        assert_eq!(c.assignment[0], 1);
        for (i, &a) in c.assignment.iter().enumerate() {
            assert_eq!(a, if i % 2 == 0 { 1 } else { 0 });
        }
    }

    #[test]
    fn huge_bandwidth_gives_one_cluster() {
        let pts = [(0.0, 0.0), (1680.0, 1050.0), (800.0, 20.0), (30.0, 900.0)];
        let diag = 1680f64.hypot(1050.0);
        assert_eq!(mean_shift(&pts, diag).unwrap().centers.len(), 1);
    }

    #[test]
    fn rejects_empty_input() {
        assert!(mean_shift(&[], 10.0).is_err());
        assert!(mean_shift(&[(0.0, 0.0)], 0.0).is_err());
    }
}
