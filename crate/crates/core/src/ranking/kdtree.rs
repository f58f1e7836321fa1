//! Exact k-nearest-neighbour search over metric embeddings.
//!
//! The tree is built once: each internal node splits at the median of the
//! dimension with the largest spread among its points. Search descends to
//! the query's side first and backtracks into a sibling whenever the
//! splitting hyperplane is not farther than the current k-th candidate.
//! Candidates are ordered by `(distance, metric id)`, so results equal an
//! exhaustive scan exactly, ties included.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{RankError, RankEntry, RankedList, Method};
use crate::embedding::Embedding;

const LEAF_SIZE: usize = 8;

#[derive(Clone, Debug)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug)]
pub struct KdTree {
    dim: usize,
    backend: String,
    ids: Vec<String>,
    /// position of each id in ascending id order
    id_rank: Vec<usize>,
    coords: Vec<f64>,
    /// point indices, grouped so every leaf owns a contiguous range
    order: Vec<usize>,
    nodes: Vec<Node>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Candidate {
    dist: f64,
    rank: usize,
    point: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .partial_cmp(&other.dist)
            .expect("distances are finite")
            .then(self.rank.cmp(&other.rank))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Euclidean distance, summed left to right.
pub fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

impl KdTree {
    pub fn build(metrics: &[(String, Embedding)]) -> Result<Self, RankError> {
        let first = metrics.first().ok_or(RankError::NoMetrics)?;
        let dim = first.1.dim();
        let mut coords = Vec::with_capacity(metrics.len() * dim);
        for (id, e) in metrics {
            if e.dim() != dim {
                return Err(RankError::DimMismatch {
                    context: format!("metric {id}"),
                    expected: dim,
                    found: e.dim(),
                });
            }
            coords.extend_from_slice(&e.values);
        }
        let ids: Vec<String> = metrics.iter().map(|(id, _)| id.clone()).collect();
        let id_rank = id_ranks(&ids)?;

        let mut tree = Self {
            dim,
            backend: first.1.backend.clone(),
            ids,
            id_rank,
            coords,
            order: (0..metrics.len()).collect(),
            nodes: Vec::new(),
        };
        tree.build_node(0, metrics.len());
        Ok(tree)
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { start, end });
        if end - start <= LEAF_SIZE {
            return slot;
        }

        let (axis, spread) = (0..self.dim)
            .map(|d| {
                let (lo, hi) = self.order[start..end].iter().fold(
                    (f64::INFINITY, f64::NEG_INFINITY),
                    |(lo, hi), &i| {
                        let v = self.coords[i * self.dim + d];
                        (lo.min(v), hi.max(v))
                    },
                );
                (d, hi - lo)
            })
            .fold((0, f64::NEG_INFINITY), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            });
        if spread <= 0.0 {
            // all points coincide
            return slot;
        }

        let mid = (end - start) / 2;
        let dim = self.dim;
        let coords = &self.coords;
        self.order[start..end].select_nth_unstable_by(mid, |&a, &b| {
            coords[a * dim + axis]
                .partial_cmp(&coords[b * dim + axis])
                .expect("finite coordinates")
        });
        let value = self.coords[self.order[start + mid] * dim + axis];

        let left = self.build_node(start, start + mid);
        let right = self.build_node(start + mid, end);
        self.nodes[slot] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        slot
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of nodes, leaves included.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// The `k` nearest metrics to `query` as `(metric id, distance)`,
    /// ascending by distance then id. `k` is capped at the tree size.
    pub fn nearest(&self, query: &[f64], k: usize) -> Result<Vec<(&str, f64)>, RankError> {
        if k == 0 {
            return Err(RankError::InvalidK);
        }
        if query.len() != self.dim {
            return Err(RankError::DimMismatch {
                context: "k-d tree query".into(),
                expected: self.dim,
                found: query.len(),
            });
        }
        let k = k.min(self.len());
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(0, query, k, &mut heap);
        Ok(heap
            .into_sorted_vec()
            .into_iter()
            .map(|c| (self.ids[c.point].as_str(), c.dist))
            .collect())
    }

    fn search(&self, node: usize, query: &[f64], k: usize, heap: &mut BinaryHeap<Candidate>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &p in &self.order[start..end] {
                    let c = Candidate {
                        dist: euclidean_distance(query, self.point(p)),
                        rank: self.id_rank[p],
                        point: p,
                    };
                    if heap.len() < k {
                        heap.push(c);
                    } else if c < *heap.peek().expect("heap is full") {
                        heap.pop();
                        heap.push(c);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = query[axis] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near, query, k, heap);
                // same arithmetic as one term of euclidean_distance, so the
                // bound never exceeds the true distance of a far-side point
                let plane = (diff * diff).sqrt();
                if heap.len() < k || plane <= heap.peek().expect("heap is full").dist {
                    self.search(far, query, k, heap);
                }
            }
        }
    }

    /// [`nearest`](Self::nearest) packaged as a ranked list.
    pub fn knn_query(
        &self,
        requirement_id: &str,
        query: &Embedding,
        k: usize,
    ) -> Result<RankedList, RankError> {
        let entries = self
            .nearest(&query.values, k)?
            .into_iter()
            .map(|(id, dist)| RankEntry {
                metric: id.to_owned(),
                score: dist,
            })
            .collect();
        Ok(RankedList {
            requirement: requirement_id.to_owned(),
            method: Method::EuclideanKnn,
            backend: self.backend.clone(),
            entries,
        })
    }
}

fn id_ranks(ids: &[String]) -> Result<Vec<usize>, RankError> {
    let mut sorted: Vec<usize> = (0..ids.len()).collect();
    sorted.sort_by(|&a, &b| ids[a].cmp(&ids[b]));
    if let Some(w) = sorted.windows(2).find(|w| ids[w[0]] == ids[w[1]]) {
        return Err(RankError::DuplicateMetric(ids[w[0]].clone()));
    }
    let mut rank = vec![0; ids.len()];
    for (r, &i) in sorted.iter().enumerate() {
        rank[i] = r;
    }
    Ok(rank)
}

/// Builds a tree over `metrics`.
pub fn build_kdtree(metrics: &[(String, Embedding)]) -> Result<KdTree, RankError> {
    KdTree::build(metrics)
}

pub fn knn_query(
    tree: &KdTree,
    requirement_id: &str,
    query: &Embedding,
    k: usize,
) -> Result<RankedList, RankError> {
    tree.knn_query(requirement_id, query, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn emb(v: Vec<f64>) -> Embedding {
        Embedding::new("t", v).unwrap()
    }

    fn scan(points: &[(String, Embedding)], q: &[f64], k: usize) -> Vec<(String, f64)> {
        let mut all: Vec<(String, f64)> = points
            .iter()
            .map(|(id, e)| {
                let mut s = 0.0;
                for i in 0..q.len() {
                    s += (q[i] - e.values[i]) * (q[i] - e.values[i]);
                }
                (id.clone(), s.sqrt())
            })
            .collect();
        all.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
        all.truncate(k);
        all
    }

    #[test]
    fn single_point_tree() {
        let t = build_kdtree(&[("only".into(), emb(vec![1.0, 2.0]))]).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.node_count(), 1);
        let r = t.nearest(&[100.0, -3.0], 5).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].0, "only");
    }

    #[test]
    fn exact_hit_first_with_zero_distance() {
        let pts: Vec<(String, Embedding)> = (0..50)
            .map(|i| (format!("m{i:02}"), emb(vec![i as f64, (i * i % 7) as f64])))
            .collect();
        let t = build_kdtree(&pts).unwrap();
        let r = t.nearest(&[17.0, (17 * 17 % 7) as f64], 3).unwrap();
        assert_eq!(r[0], ("m17", 0.0));
    }

    #[test]
    fn k_is_capped_and_order_total() {
        let pts: Vec<(String, Embedding)> = ["c", "a", "b"]
            .iter()
            .map(|id| (id.to_string(), emb(vec![1.0, 1.0])))
            .collect();
        let t = build_kdtree(&pts).unwrap();
        let r = t.nearest(&[0.0, 0.0], 10).unwrap();
        let ids: Vec<&str> = r.iter().map(|x| x.0).collect();
        assert_eq!(ids, vec!["a", "b", "c"]);
    }

    #[test]
    fn errors() {
        assert!(matches!(build_kdtree(&[]), Err(RankError::NoMetrics)));
        let mixed = vec![
            ("a".to_string(), emb(vec![1.0])),
            ("b".to_string(), emb(vec![1.0, 2.0])),
        ];
        assert!(matches!(
            build_kdtree(&mixed),
            Err(RankError::DimMismatch { .. })
        ));
        let dup = vec![
            ("a".to_string(), emb(vec![1.0])),
            ("a".to_string(), emb(vec![2.0])),
        ];
        assert!(matches!(
            build_kdtree(&dup),
            Err(RankError::DuplicateMetric(_))
        ));
        let t = build_kdtree(&[("a".to_string(), emb(vec![1.0]))]).unwrap();
        assert!(matches!(t.nearest(&[1.0, 2.0], 1), Err(RankError::DimMismatch { .. })));
        assert!(matches!(t.nearest(&[1.0], 0), Err(RankError::InvalidK)));
    }

    #[test]
    fn matches_linear_scan_on_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<(String, Embedding)> = (0..200)
            .map(|i| {
                (
                    format!("m{i:03}"),
                    emb((0..5).map(|_| rng.gen_range(-1.0..1.0)).collect()),
                )
            })
            .collect();
        let t = build_kdtree(&pts).unwrap();
        for _ in 0..100 {
            let q: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.2..1.2)).collect();
            let got: Vec<(String, f64)> = t
                .nearest(&q, 10)
                .unwrap()
                .into_iter()
                .map(|(id, d)| (id.to_owned(), d))
                .collect();
            assert_eq!(got, scan(&pts, &q, 10));
        }
    }

    #[test]
    fn ties_on_grid_resolve_by_id() {
        // integer grid: many equal distances
        let mut pts = Vec::new();
        for x in 0..6 {
            for y in 0..6 {
                pts.push((format!("p{}", 35 - (x * 6 + y)), emb(vec![x as f64, y as f64])));
            }
        }
        let t = build_kdtree(&pts).unwrap();
        for qx in 0..6 {
            for qy in 0..6 {
                let q = [qx as f64 + 0.5, qy as f64];
                for k in [1, 3, 4, 7] {
                    let got: Vec<(String, f64)> = t
                        .nearest(&q, k)
                        .unwrap()
                        .into_iter()
                        .map(|(id, d)| (id.to_owned(), d))
                        .collect();
                    assert_eq!(got, scan(&pts, &q, k));
                }
            }
        }
    }
}
