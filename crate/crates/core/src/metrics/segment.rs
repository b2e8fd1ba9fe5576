//! Threshold segmentation and connected-component labelling, optionally on a torus.

use serde::{Deserialize, Serialize};

use crate::field::Field2D;
use crate::grain_growth::CyclicSpan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Connectivity {
    Four,
    Eight,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentParams {
    pub threshold: f64,
    pub connectivity: Connectivity,
    pub periodic: bool,
    /// Components smaller than this many pixels are dropped as boundary noise.
    pub min_area: usize,
}

impl Default for SegmentParams {
    fn default() -> Self {
        SegmentParams {
            threshold: 0.5,
            connectivity: Connectivity::Four,
            periodic: true,
            min_area: 4,
        }
    }
}

/// Inclusive-start cyclic extents of a component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrainLabeling {
    pub height: usize,
    pub width: usize,
    pub periodic: bool,
    /// 0 marks boundary / background, `k ≥ 1` is component `k`.
    pub labels: Vec<u32>,
    /// `areas[k - 1]` is the pixel count of component `k`.
    pub areas: Vec<usize>,
    /// `(row, col)`; circular means along wrapped axes.
    pub centroids: Vec<(f64, f64)>,
    pub bboxes: Vec<BoundingBox>,
}

impl GrainLabeling {
    pub fn n_grains(&self) -> usize {
        self.areas.len()
    }

    #[inline]
    pub fn label(&self, r: usize, c: usize) -> u32 {
        self.labels[r * self.width + c]
    }

    /// Distance between two points, wrapping when the labelling is periodic.
    pub fn distance(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        let axis = |x: f64, y: f64, n: usize| {
            let d = (x - y).abs();
            if self.periodic {
                d.min(n as f64 - d)
            } else {
                d
            }
        };
        let dr = axis(a.0, b.0, self.height);
        let dc = axis(a.1, b.1, self.width);
        (dr * dr + dc * dc).sqrt()
    }

    /// Component whose centroid is nearest to `point`.
    pub fn nearest(&self, point: (f64, f64)) -> Option<(usize, f64)> {
        self.centroids
            .iter()
            .enumerate()
            .map(|(k, &c)| (k + 1, self.distance(point, c)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Labels `pixel >= threshold` components of a frame.
pub fn segment_grains(frame: &Field2D, params: &SegmentParams) -> GrainLabeling {
    let mask: Vec<bool> = frame.values().iter().map(|&v| v >= params.threshold).collect();
    label_mask(&mask, frame.height(), frame.width(), params)
}

/// Labels the `true` pixels of `mask`; components are numbered in scan order
/// of their first pixel.
pub fn label_mask(mask: &[bool], height: usize, width: usize, params: &SegmentParams) -> GrainLabeling {
    assert_eq!(mask.len(), height * width, "mask size");
    let mut sets = DisjointSet::new(mask.len());
    let link = |sets: &mut DisjointSet, p: usize, q: usize| {
        if mask[p] && mask[q] {
            sets.union(p, q);
        }
    };
    let periodic = params.periodic;
    for r in 0..height {
        for c in 0..width {
            let p = r * width + c;
            if !mask[p] {
                continue;
            }
            if c + 1 < width {
                link(&mut sets, p, p + 1);
            } else if periodic && width > 1 {
                link(&mut sets, p, r * width);
            }
            if r + 1 < height {
                link(&mut sets, p, p + width);
            } else if periodic && height > 1 {
                link(&mut sets, p, c);
            }
            if params.connectivity == Connectivity::Eight {
                for dc in [-1isize, 1] {
                    let nc = c as isize + dc;
                    let nr = r + 1;
                    let nc = if (0..width as isize).contains(&nc) {
                        nc as usize
                    } else if periodic {
                        nc.rem_euclid(width as isize) as usize
                    } else {
                        continue;
                    };
                    let nr = if nr < height {
                        nr
                    } else if periodic {
                        0
                    } else {
                        continue;
                    };
                    link(&mut sets, p, nr * width + nc);
                }
            }
        }
    }

    let mut root_label = vec![0u32; mask.len()];
    let mut counts: Vec<usize> = Vec::new();
    let mut provisional = vec![0u32; mask.len()];
    for p in 0..mask.len() {
        if !mask[p] {
            continue;
        }
        let root = sets.find(p);
        if root_label[root] == 0 {
            counts.push(0);
            root_label[root] = counts.len() as u32;
        }
        let l = root_label[root];
        provisional[p] = l;
        counts[l as usize - 1] += 1;
    }
    // Drop small components and renumber the rest consecutively.
    let mut remap = vec![0u32; counts.len() + 1];
    let mut next = 0u32;
    for (k, &n) in counts.iter().enumerate() {
        if n >= params.min_area.max(1) {
            next += 1;
            remap[k + 1] = next;
        }
    }
    let labels: Vec<u32> = provisional.iter().map(|&l| remap[l as usize]).collect();
    let n = next as usize;

    let mut areas = vec![0usize; n];
    let mut sums = vec![[0.0f64; 4]; n];
    let mut rows_hit = vec![vec![false; height]; n];
    let mut cols_hit = vec![vec![false; width]; n];
    let (tr, tc) = (
        std::f64::consts::TAU / height as f64,
        std::f64::consts::TAU / width as f64,
    );
    for r in 0..height {
        for c in 0..width {
            let l = labels[r * width + c];
            if l == 0 {
                continue;
            }
            let k = l as usize - 1;
            areas[k] += 1;
            rows_hit[k][r] = true;
            cols_hit[k][c] = true;
            let s = &mut sums[k];
            if periodic {
                s[0] += (r as f64 * tr).cos();
                s[1] += (r as f64 * tr).sin();
                s[2] += (c as f64 * tc).cos();
                s[3] += (c as f64 * tc).sin();
            } else {
                s[0] += r as f64;
                s[2] += c as f64;
            }
        }
    }
    let circular = |cos: f64, sin: f64, n: usize| {
        let a = sin.atan2(cos).rem_euclid(std::f64::consts::TAU);
        (a * n as f64 / std::f64::consts::TAU) % n as f64
    };
    let centroids = (0..n)
        .map(|k| {
            let s = sums[k];
            if periodic {
                (circular(s[0], s[1], height), circular(s[2], s[3], width))
            } else {
                (s[0] / areas[k] as f64, s[2] / areas[k] as f64)
            }
        })
        .collect();
    let span = |hit: &[bool]| {
        if periodic {
            CyclicSpan::covering(hit).expect("component is non-empty")
        } else {
            let first = hit.iter().position(|&h| h).expect("non-empty");
            let last = hit.iter().rposition(|&h| h).expect("non-empty");
            CyclicSpan {
                start: first,
                len: last - first + 1,
            }
        }
    };
    let bboxes = (0..n)
        .map(|k| {
            let rs = span(&rows_hit[k]);
            let cs = span(&cols_hit[k]);
            BoundingBox {
                row: rs.start,
                col: cs.start,
                height: rs.len,
                width: cs.len,
            }
        })
        .collect();

    GrainLabeling {
        height,
        width,
        periodic,
        labels,
        areas,
        centroids,
        bboxes,
    }
}
